//! Dataset-level orchestration behind the `iris` command.
//!
//! Per-image stages run on a worker pool and are merged back in manifest
//! order. A failing image is recorded with its stage and reason and never
//! aborts the batch; only configuration and I/O problems do.

pub mod config;
mod report;

pub use config::RunConfig;
pub use report::{Report, REPORT_HEADER};

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dataset::{DatasetManifest, ManifestEntry, Split, MANIFEST_FILE};
use crate::error::{Error, Result, Stage};
use crate::features::cache::{read_cache, write_cache, FeatureRecord, CACHE_HEADER};
use crate::features::{feature_vector, FeatureVector};
use crate::localization::{locate_iris_traced, Circle, IrisGeometry, LocalizationTrace};
use crate::lvq::{
    ensemble_classify, ensemble_train, load_model, save_model, Classification, Labeled, Metrics,
    TrainedEnsemble,
};
use crate::normalization::{noise_mask_with, rubber_sheet_with_resolution, NormalizedIris};
use crate::raster::{encode_pgm, load_gray_auto, GrayImage};
use crate::synth::{generate, parse_truth_sidecar, truth_sidecar};

pub const FEATURES_FILE: &str = "features.txt";
pub const TRUTH_EXTENSION: &str = "truth";

/// Where a per-image run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FailureStage {
    Io,
    Decode,
    Pupil,
    Iris,
    Normalize,
    Features,
}

impl FailureStage {
    pub const ALL: [FailureStage; 6] = [
        FailureStage::Io,
        FailureStage::Decode,
        FailureStage::Pupil,
        FailureStage::Iris,
        FailureStage::Normalize,
        FailureStage::Features,
    ];

    pub fn is_localization(self) -> bool {
        matches!(self, FailureStage::Pupil | FailureStage::Iris)
    }
}

impl fmt::Display for FailureStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureStage::Io => "io",
            FailureStage::Decode => "decode",
            FailureStage::Pupil => "pupil",
            FailureStage::Iris => "iris",
            FailureStage::Normalize => "normalize",
            FailureStage::Features => "features",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub stage: FailureStage,
    pub reason: String,
}

impl Failure {
    fn new(stage: FailureStage, e: impl fmt::Display) -> Self {
        Self {
            stage,
            reason: e.to_string(),
        }
    }

    fn localization(e: &Error) -> Self {
        let stage = match e {
            Error::LocalizationFailed {
                stage: Stage::Iris, ..
            } => FailureStage::Iris,
            _ => FailureStage::Pupil,
        };
        Self::new(stage, e)
    }

    /// The library error a single-image command reports for this failure.
    pub fn into_error(self) -> Error {
        match self.stage {
            FailureStage::Pupil => Error::LocalizationFailed {
                stage: Stage::Pupil,
                reason: self.reason,
            },
            FailureStage::Iris => Error::LocalizationFailed {
                stage: Stage::Iris,
                reason: self.reason,
            },
            FailureStage::Io | FailureStage::Decode => Error::Decode {
                offset: 0,
                reason: self.reason,
            },
            FailureStage::Normalize | FailureStage::Features => Error::Data(self.reason),
        }
    }
}

/// How far to take each image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Depth {
    Localize,
    Normalize,
    Extract,
}

#[derive(Debug)]
pub struct Processed {
    pub geometry: IrisGeometry,
    pub normalized: Option<NormalizedIris>,
    pub features: Option<FeatureVector>,
    pub trace: Option<LocalizationTrace>,
}

/// Runs one decoded image through the stages up to `depth`.
pub fn process_image(
    img: &GrayImage,
    cfg: &RunConfig,
    depth: Depth,
    keep_trace: bool,
) -> std::result::Result<Processed, Failure> {
    let trace =
        locate_iris_traced(img, &cfg.localization).map_err(|e| Failure::localization(&e))?;
    let geometry = match &trace.result {
        Ok(g) => *g,
        Err(e) => return Err(Failure::localization(e)),
    };
    let mut out = Processed {
        geometry,
        normalized: None,
        features: None,
        trace: keep_trace.then_some(trace),
    };
    if depth >= Depth::Normalize {
        let mask = noise_mask_with(img, &geometry, &cfg.noise);
        let n =
            rubber_sheet_with_resolution(img, &geometry, &mask, cfg.radial_res, cfg.angular_res)
                .map_err(|e| Failure::new(FailureStage::Normalize, e))?;
        if depth >= Depth::Extract {
            out.features = Some(
                feature_vector(&n, &cfg.lbp)
                    .map_err(|e| Failure::new(FailureStage::Features, e))?,
            );
        }
        out.normalized = Some(n);
    }
    Ok(out)
}

/// Reads and decodes one file, then processes it.
pub fn process_file(
    path: &Path,
    cfg: &RunConfig,
    depth: Depth,
    keep_trace: bool,
) -> std::result::Result<Processed, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::new(FailureStage::Io, e))?;
    let img = load_gray_auto(&bytes).map_err(|e| Failure::new(FailureStage::Decode, e))?;
    process_image(&img, cfg, depth, keep_trace)
}

#[derive(Debug)]
pub struct ImageResult {
    pub entry: ManifestEntry,
    pub outcome: std::result::Result<Processed, Failure>,
}

fn with_workers<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(job))
}

/// Processes the selected manifest entries in parallel, in manifest order.
pub fn run_batch(
    manifest: &DatasetManifest,
    entries: &[ManifestEntry],
    cfg: &RunConfig,
    depth: Depth,
    keep_trace: bool,
) -> Result<Vec<ImageResult>> {
    with_workers(cfg.workers, || {
        entries
            .par_iter()
            .map(|e| ImageResult {
                entry: e.clone(),
                outcome: process_file(&manifest.resolve(e), cfg, depth, keep_trace),
            })
            .collect()
    })
}

/// `class03/image07.pgm` → `class03_image07`.
pub fn artifact_stem(entry_path: &str) -> String {
    let p = Path::new(entry_path);
    let stem = p.with_extension("");
    stem.to_string_lossy().replace(['/', '\\'], "_")
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes a synthetic dataset: `classNN/imageMM.pgm`, a `.truth` sidecar per
/// image and `manifest.txt`.
pub fn cmd_synth(cfg: &RunConfig, out: &Path) -> Result<DatasetManifest> {
    let spec = cfg.synth_spec();
    spec.validate()?;
    let samples = with_workers(cfg.workers, || generate(&spec))??;
    create_dir(out)?;
    let mut entries = Vec::with_capacity(samples.len());
    for s in &samples {
        let dir = format!("class{:02}", s.class);
        create_dir(&out.join(&dir))?;
        let rel = format!("{dir}/image{:02}.pgm", s.index);
        write(&out.join(&rel), encode_pgm(&s.eye.image))?;
        let truth = Path::new(&rel).with_extension(TRUTH_EXTENSION);
        write(&out.join(truth), truth_sidecar(&s.eye.params))?;
        entries.push(ManifestEntry {
            path: rel,
            class: s.class,
            split: if s.train { Split::Train } else { Split::Test },
        });
    }
    let manifest = DatasetManifest {
        root: out.to_path_buf(),
        entries,
    };
    write(&out.join(MANIFEST_FILE), manifest.to_text())?;
    Ok(manifest)
}

/// Ground truth next to an image, if a sidecar exists.
pub fn read_truth(image: &Path) -> Option<(Circle, Circle)> {
    let text = fs::read_to_string(image.with_extension(TRUTH_EXTENSION)).ok()?;
    parse_truth_sidecar(&text).ok().map(|(p, i, _)| (p, i))
}

fn circle_cols(c: &Circle) -> String {
    format!("{:.2} {:.2} {:.2}", c.cx, c.cy, c.r)
}

fn failure_counts(results: &[ImageResult]) -> Vec<(String, String)> {
    FailureStage::ALL
        .iter()
        .map(|s| {
            let n = results
                .iter()
                .filter(|r| matches!(&r.outcome, Err(f) if f.stage == *s))
                .count();
            (s.to_string(), n.to_string())
        })
        .collect()
}

fn status(outcome: &std::result::Result<Processed, Failure>) -> String {
    match outcome {
        Ok(_) => "ok".into(),
        Err(f) => format!("failed({})", f.stage),
    }
}

fn dump_trace(dir: &Path, stem: &str, trace: &LocalizationTrace) -> Result<()> {
    if let Some(p) = &trace.pupil {
        write(
            &dir.join(format!("{stem}_binary1.pgm")),
            encode_pgm(&p.first_mask.to_image()),
        )?;
        write(
            &dir.join(format!("{stem}_binary2.pgm")),
            encode_pgm(&p.second_mask.to_image()),
        )?;
    }
    if let Some(e) = &trace.edges {
        write(
            &dir.join(format!("{stem}_edges.pgm")),
            encode_pgm(&e.to_mask().to_image()),
        )?;
    }
    for (name, hyps) in [
        ("pupil", &trace.pupil_hypotheses),
        ("iris", &trace.iris_hypotheses),
    ] {
        let text: String = hyps
            .iter()
            .map(|h| format!("{} {} {} {}\n", h.center_x, h.center_y, h.radius, h.score))
            .collect();
        write(&dir.join(format!("{stem}_{name}_hough.txt")), text)?;
    }
    Ok(())
}

/// Localizes every manifest image; writes `localize.txt` and, with
/// `dump_debug`, per-image binarization, edge and Hough dumps under `debug/`.
pub fn cmd_localize(
    manifest: &DatasetManifest,
    cfg: &RunConfig,
    out: &Path,
    dump_debug: bool,
) -> Result<Report> {
    cfg.validate()?;
    let results = run_batch(
        manifest,
        &manifest.entries,
        cfg,
        Depth::Localize,
        dump_debug,
    )?;
    create_dir(out)?;
    if dump_debug {
        let dir = out.join("debug");
        create_dir(&dir)?;
        for r in &results {
            if let Ok(Processed { trace: Some(t), .. }) = &r.outcome {
                dump_trace(&dir, &artifact_stem(&r.entry.path), t)?;
            }
        }
    }
    let mut report = Report::new("localize", cfg);
    report.section(
        "summary",
        vec![("images".into(), results.len().to_string())],
    );
    report.section("failures", failure_counts(&results));
    let mut rows = vec!["path class split status pupil_cx pupil_cy pupil_r iris_cx iris_cy iris_r pupil_err iris_err".to_string()];
    let (mut within, mut with_truth) = (0usize, 0usize);
    for r in &results {
        let mut row = format!(
            "{} {} {} {}",
            r.entry.path,
            r.entry.class,
            r.entry.split,
            status(&r.outcome)
        );
        let truth = read_truth(&manifest.resolve(&r.entry));
        with_truth += usize::from(truth.is_some());
        match &r.outcome {
            Ok(p) => {
                let g = p.geometry;
                row.push_str(&format!(
                    " {} {}",
                    circle_cols(&g.pupil),
                    circle_cols(&g.iris)
                ));
                if let Some((tp, ti)) = truth {
                    let pe = g.pupil.center_distance(&tp).max((g.pupil.r - tp.r).abs());
                    let ie = g.iris.center_distance(&ti).max((g.iris.r - ti.r).abs());
                    within += usize::from(pe <= 2.0 && ie <= 2.0);
                    row.push_str(&format!(" {pe:.2} {ie:.2}"));
                } else {
                    row.push_str(" - -");
                }
            }
            Err(_) => row.push_str(" - - - - - - - -"),
        }
        rows.push(row);
    }
    if with_truth > 0 {
        report.section(
            "truth",
            vec![
                ("images_with_truth".into(), with_truth.to_string()),
                ("within_2px".into(), within.to_string()),
            ],
        );
    }
    report.table("images", rows);
    report.table("errors", error_rows(&results));
    write(&out.join("localize.txt"), report.render())?;
    Ok(report)
}

fn error_rows(results: &[ImageResult]) -> Vec<String> {
    results
        .iter()
        .filter_map(|r| match &r.outcome {
            Err(f) => Some(format!("{} {}: {}", r.entry.path, f.stage, f.reason)),
            Ok(_) => None,
        })
        .collect()
}

/// Unwraps every manifest image; writes texture and validity PGMs under
/// `normalized/` and `normalize.txt`.
pub fn cmd_normalize(manifest: &DatasetManifest, cfg: &RunConfig, out: &Path) -> Result<Report> {
    cfg.validate()?;
    let results = run_batch(manifest, &manifest.entries, cfg, Depth::Normalize, false)?;
    let dir = out.join("normalized");
    create_dir(&dir)?;
    let mut rows = vec!["path class split status occlusion".to_string()];
    for r in &results {
        let mut row = format!(
            "{} {} {} {}",
            r.entry.path,
            r.entry.class,
            r.entry.split,
            status(&r.outcome)
        );
        if let Ok(Processed {
            normalized: Some(n),
            ..
        }) = &r.outcome
        {
            let stem = artifact_stem(&r.entry.path);
            write(
                &dir.join(format!("{stem}_texture.pgm")),
                encode_pgm(&n.texture_image()),
            )?;
            write(
                &dir.join(format!("{stem}_valid.pgm")),
                encode_pgm(&n.valid_image()),
            )?;
            row.push_str(&format!(" {:.4}", n.occlusion_fraction()));
        } else {
            row.push_str(" -");
        }
        rows.push(row);
    }
    let mut report = Report::new("normalize", cfg);
    report.section(
        "summary",
        vec![("images".into(), results.len().to_string())],
    );
    report.section("failures", failure_counts(&results));
    report.table("images", rows);
    report.table("errors", error_rows(&results));
    write(&out.join("normalize.txt"), report.render())?;
    Ok(report)
}

/// Extracts features for every manifest image; writes `features.txt` (successful
/// images only) and `extract.txt`.
pub fn cmd_extract(manifest: &DatasetManifest, cfg: &RunConfig, out: &Path) -> Result<Report> {
    cfg.validate()?;
    let results = run_batch(manifest, &manifest.entries, cfg, Depth::Extract, false)?;
    create_dir(out)?;
    let records = feature_records(results.iter());
    write(&out.join(FEATURES_FILE), write_cache(&records))?;
    let mut report = Report::new("extract", cfg);
    report.section(
        "summary",
        vec![
            ("images".into(), results.len().to_string()),
            ("extracted".into(), records.len().to_string()),
            ("dimension".into(), cfg.lbp.dimension().to_string()),
            ("tag".into(), cfg.lbp.tag()),
        ],
    );
    report.section("failures", failure_counts(&results));
    let mut rows = vec!["path class split status".to_string()];
    rows.extend(results.iter().map(|r| {
        format!(
            "{} {} {} {}",
            r.entry.path,
            r.entry.class,
            r.entry.split,
            status(&r.outcome)
        )
    }));
    report.table("images", rows);
    report.table("errors", error_rows(&results));
    write(&out.join("extract.txt"), report.render())?;
    Ok(report)
}

fn feature_records<'a>(results: impl Iterator<Item = &'a ImageResult>) -> Vec<FeatureRecord> {
    results
        .filter_map(|r| match &r.outcome {
            Ok(Processed {
                features: Some(f), ..
            }) => Some(FeatureRecord {
                id: r.entry.path.clone(),
                split: Some(r.entry.split),
                vector: FeatureVector {
                    label: Some(r.entry.class),
                    ..f.clone()
                },
            }),
            _ => None,
        })
        .collect()
}

/// Training run summary.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub ensemble: TrainedEnsemble,
    pub samples: usize,
    pub summary: String,
}

/// Trains the ensemble on the labeled training records of a feature cache
/// (records without a split count as training data) and writes the model.
pub fn cmd_train(features: &Path, cfg: &RunConfig, model_out: &Path) -> Result<TrainOutcome> {
    cfg.validate()?;
    let records = read_cache(&read_text(features)?, None)?;
    let train: Vec<&FeatureRecord> = records
        .iter()
        .filter(|r| r.split != Some(Split::Test))
        .collect();
    let tag = match train.first() {
        Some(r) => r.vector.config_tag.clone(),
        None => return Err(Error::Empty("feature cache has no training records")),
    };
    let mut data = Vec::with_capacity(train.len());
    for r in &train {
        if r.vector.config_tag != tag {
            return Err(Error::Data(format!(
                "record {} has feature tag {}, expected {tag}",
                r.id, r.vector.config_tag
            )));
        }
        let label = r
            .vector
            .label
            .ok_or_else(|| Error::Data(format!("record {} has no label", r.id)))?;
        data.push(Labeled::new(r.vector.values.clone(), label));
    }
    let classes: std::collections::BTreeSet<usize> = data.iter().map(|d| d.label).collect();
    if classes.len() < 2 {
        return Err(Error::Data(format!(
            "training needs at least 2 classes, cache has {}",
            classes.len()
        )));
    }
    let mut ensemble = ensemble_train(&data, &cfg.member_configs())?;
    ensemble.input_tag = tag;
    write(model_out, save_model(&ensemble))?;

    let mut summary = format!(
        "trained {} members on {} samples, {} classes, dimension {}\n",
        ensemble.members.len(),
        data.len(),
        classes.len(),
        ensemble.dimension()
    );
    for (i, (log, c)) in ensemble
        .training_log
        .iter()
        .zip(&ensemble.member_configs)
        .enumerate()
    {
        let best = log.iter().cloned().fold(0.0, f64::max);
        let first_best = log.iter().position(|&a| a == best).map_or(0, |p| p + 1);
        summary.push_str(&format!(
            "member {i}: alpha {} seed {} prototypes {} accuracy epoch1 {:.4} best {:.4} (epoch {first_best}) final {:.4}\n",
            c.learning_rate,
            c.seed,
            ensemble.members[i].len(),
            log.first().copied().unwrap_or(0.0),
            best,
            log.last().copied().unwrap_or(0.0),
        ));
    }
    Ok(TrainOutcome {
        ensemble,
        samples: data.len(),
        summary,
    })
}

pub fn load_model_file(path: &Path) -> Result<TrainedEnsemble> {
    load_model(&read_text(path)?)
}

fn check_features(ens: &TrainedEnsemble, v: &FeatureVector) -> Result<()> {
    if v.dimension() != ens.dimension() {
        return Err(Error::DimensionMismatch {
            expected: ens.dimension(),
            actual: v.dimension(),
        });
    }
    if !ens.input_tag.is_empty() && v.config_tag != ens.input_tag {
        return Err(Error::Config(format!(
            "model expects {} features, input has {}",
            ens.input_tag, v.config_tag
        )));
    }
    Ok(())
}

/// One classified input of `cmd_classify`.
#[derive(Debug, Clone, PartialEq)]
pub struct Classified {
    pub id: String,
    pub result: Classification,
}

/// Classifies an image, or every record of a feature cache.
pub fn cmd_classify(model: &Path, input: &Path, cfg: &RunConfig) -> Result<Vec<Classified>> {
    cfg.validate()?;
    let ens = load_model_file(model)?;
    let bytes = fs::read(input).map_err(|e| Error::io(input, e))?;
    let vectors: Vec<(String, FeatureVector)> = if bytes.starts_with(CACHE_HEADER.as_bytes()) {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::Data(format!("{} is not UTF-8", input.display())))?;
        read_cache(&text, None)?
            .into_iter()
            .map(|r| (r.id, r.vector))
            .collect()
    } else {
        let img = load_gray_auto(&bytes)?;
        let processed =
            process_image(&img, cfg, Depth::Extract, false).map_err(Failure::into_error)?;
        let v = processed.features.expect("extract depth yields features");
        vec![(input.display().to_string(), v)]
    };
    vectors
        .into_iter()
        .map(|(id, v)| {
            check_features(&ens, &v)?;
            Ok(Classified {
                id,
                result: ensemble_classify(&ens, &v.values)?,
            })
        })
        .collect()
}

pub fn classification_text(items: &[Classified]) -> String {
    let mut s = String::new();
    for c in items {
        let votes: Vec<String> = c.result.votes.iter().map(|v| v.to_string()).collect();
        let dists: Vec<String> = c
            .result
            .distances
            .iter()
            .map(|d| format!("{d:.6}"))
            .collect();
        s.push_str(&format!(
            "{} label {} votes {}/{} members {} distances {}\n",
            c.id,
            c.result.label,
            c.result.vote_count(),
            c.result.votes.len(),
            votes.join(","),
            dists.join(",")
        ));
    }
    s
}

/// Evaluation of a model on the test split of a manifest.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub metrics: Metrics,
    pub report: Report,
}

/// Runs the test split end to end; localization and other per-image failures
/// count as misclassifications and are tallied separately.
pub fn cmd_evaluate(
    model: &Path,
    manifest: &DatasetManifest,
    cfg: &RunConfig,
    report_out: Option<&Path>,
) -> Result<Evaluation> {
    cfg.validate()?;
    let ens = load_model_file(model)?;
    if !ens.input_tag.is_empty() && ens.input_tag != cfg.lbp.tag() {
        return Err(Error::Config(format!(
            "model expects {} features, config produces {}",
            ens.input_tag,
            cfg.lbp.tag()
        )));
    }
    if ens.dimension() != cfg.lbp.dimension() {
        return Err(Error::DimensionMismatch {
            expected: ens.dimension(),
            actual: cfg.lbp.dimension(),
        });
    }
    let test: Vec<ManifestEntry> = manifest
        .entries
        .iter()
        .filter(|e| e.split == Split::Test)
        .cloned()
        .collect();
    if test.is_empty() {
        return Err(Error::Empty("manifest has no test images"));
    }
    let results = run_batch(manifest, &test, cfg, Depth::Extract, false)?;
    let mut outcomes = Vec::with_capacity(results.len());
    let mut rows = vec!["path class predicted votes status".to_string()];
    for r in &results {
        let predicted = match &r.outcome {
            Ok(p) => {
                let f = p.features.as_ref().expect("extract depth yields features");
                Some(ensemble_classify(&ens, &f.values)?)
            }
            Err(_) => None,
        };
        let (label, votes) = match &predicted {
            Some(c) => (
                c.label.to_string(),
                format!("{}/{}", c.vote_count(), c.votes.len()),
            ),
            None => ("-".into(), "-".into()),
        };
        rows.push(format!(
            "{} {} {label} {votes} {}",
            r.entry.path,
            r.entry.class,
            status(&r.outcome)
        ));
        outcomes.push((r.entry.class, predicted.map(|c| c.label)));
    }
    let classes = manifest
        .class_count()
        .max(ens.classes().iter().next_back().map_or(0, |c| c + 1));
    let metrics = Metrics::from_outcomes(classes, &outcomes);

    let mut report = Report::new("evaluate", cfg);
    let loc_failures = results
        .iter()
        .filter(|r| matches!(&r.outcome, Err(f) if f.stage.is_localization()))
        .count();
    report.section(
        "summary",
        vec![
            ("images".into(), metrics.total.to_string()),
            ("correct".into(), metrics.correct.to_string()),
            (
                "recognition_rate".into(),
                format!("{:.3}", 100.0 * metrics.recognition_rate()),
            ),
            ("unclassified".into(), metrics.unclassified.to_string()),
            ("localization_failures".into(), loc_failures.to_string()),
            ("model_members".into(), ens.members.len().to_string()),
            ("model_input".into(), ens.input_tag.clone()),
        ],
    );
    report.section("failures", failure_counts(&results));
    report.table("confusion", confusion_rows(&metrics));
    let accuracies = metrics.per_class_accuracy();
    let per_class = accuracies.iter().enumerate().map(|(c, a)| {
        format!(
            "{c} {} {}",
            metrics.class_totals[c],
            a.map_or("-".to_string(), |a| format!("{:.4}", a))
        )
    });
    report.table(
        "per_class",
        std::iter::once("class samples accuracy".to_string())
            .chain(per_class)
            .collect(),
    );
    report.table("images", rows);
    report.table("errors", error_rows(&results));
    if let Some(path) = report_out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            create_dir(parent)?;
        }
        write(path, report.render())?;
    }
    Ok(Evaluation { metrics, report })
}

/// Rows `truth: predicted counts..., unclassified`; each row sums to the class total.
fn confusion_rows(m: &Metrics) -> Vec<String> {
    let n = m.confusion.len();
    let mut header = String::from("truth\\pred");
    for c in 0..n {
        header.push_str(&format!(" {c}"));
    }
    header.push_str(" none");
    let mut rows = vec![header];
    for (t, row) in m.confusion.iter().enumerate() {
        let mut line = t.to_string();
        for v in row {
            line.push_str(&format!(" {v}"));
        }
        let none = m.class_totals[t] - row.iter().sum::<usize>();
        line.push_str(&format!(" {none}"));
        rows.push(line);
    }
    rows
}

/// Convenience for a whole benchmark: extract the train split, train, and
/// evaluate on the test split, writing everything under `out`.
pub fn run_benchmark(
    manifest: &DatasetManifest,
    cfg: &RunConfig,
    out: &Path,
) -> Result<Evaluation> {
    cmd_extract(manifest, cfg, out)?;
    let model = out.join("model.txt");
    cmd_train(&out.join(FEATURES_FILE), cfg, &model)?;
    cmd_evaluate(&model, manifest, cfg, Some(&out.join("report.txt")))
}

/// Default output locations relative to `out`.
pub fn model_path(out: &Path) -> PathBuf {
    out.join("model.txt")
}
