use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use iriskit::dataset::DatasetManifest;
use iriskit::pipeline::{self, RunConfig};
use iriskit::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "iris",
    version,
    about = "Iris localization, LBP features and LVQ ensemble matching"
)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the run seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Write intermediate localization artifacts under `<out>/debug`.
    #[arg(long, global = true)]
    dump_debug: bool,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset into the output directory.
    Synth,
    /// Locate pupil and iris boundaries for every image of a dataset.
    Localize { dataset: PathBuf },
    /// Unwrap every iris of a dataset to the normalized rectangle.
    Normalize { dataset: PathBuf },
    /// Write the feature cache for every image of a dataset.
    Extract { dataset: PathBuf },
    /// Train the ensemble on the training records of a feature cache.
    Train {
        features: PathBuf,
        /// Model path; defaults to `<out>/model.txt`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Classify an image or every record of a feature cache.
    Classify { model: PathBuf, input: PathBuf },
    /// Score a model on the test split of a dataset.
    Evaluate {
        model: PathBuf,
        dataset: PathBuf,
        /// Report path; defaults to `<out>/report.txt`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn open_dataset(path: &Path, cfg: &RunConfig) -> Result<DatasetManifest> {
    let m = DatasetManifest::open(path, cfg.synth.train_fraction, cfg.seed)?;
    m.validate()?;
    Ok(m)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let out = &cli.out;
    match &cli.command {
        Command::Synth => {
            let m = pipeline::cmd_synth(&cfg, out)?;
            println!(
                "wrote {} images in {} classes to {}",
                m.entries.len(),
                m.class_count(),
                out.display()
            );
        }
        Command::Localize { dataset } => {
            let m = open_dataset(dataset, &cfg)?;
            let r = pipeline::cmd_localize(&m, &cfg, out, cli.dump_debug)?;
            print_failures(&r);
        }
        Command::Normalize { dataset } => {
            let m = open_dataset(dataset, &cfg)?;
            let r = pipeline::cmd_normalize(&m, &cfg, out)?;
            print_failures(&r);
        }
        Command::Extract { dataset } => {
            let m = open_dataset(dataset, &cfg)?;
            let r = pipeline::cmd_extract(&m, &cfg, out)?;
            println!(
                "extracted {} of {} images",
                r.get("summary", "extracted").unwrap_or("0"),
                r.get("summary", "images").unwrap_or("0")
            );
            print_failures(&r);
        }
        Command::Train { features, model } => {
            let path = model.clone().unwrap_or_else(|| pipeline::model_path(out));
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::Io {
                    path: dir.to_path_buf(),
                    source: e,
                })?;
            }
            let t = pipeline::cmd_train(features, &cfg, &path)?;
            print!("{}", t.summary);
            println!("model written to {}", path.display());
        }
        Command::Classify { model, input } => {
            let items = pipeline::cmd_classify(model, input, &cfg)?;
            print!("{}", pipeline::classification_text(&items));
        }
        Command::Evaluate {
            model,
            dataset,
            report,
        } => {
            let m = open_dataset(dataset, &cfg)?;
            let path = report.clone().unwrap_or_else(|| out.join("report.txt"));
            let e = pipeline::cmd_evaluate(model, &m, &cfg, Some(&path))?;
            println!(
                "recognition rate {:.3}% ({} of {}), report written to {}",
                100.0 * e.metrics.recognition_rate(),
                e.metrics.correct,
                e.metrics.total,
                path.display()
            );
        }
    }
    Ok(())
}

fn print_failures(r: &pipeline::Report) {
    for line in r.rows("errors").unwrap_or_default() {
        eprintln!("failed {line}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
