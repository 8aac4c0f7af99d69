//! LVQ1 prototype classifiers and their majority-voting ensemble.

mod model;

pub use model::{load_model, save_model, MODEL_HEADER};

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// A training or test vector with its class.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeled {
    pub vector: Vec<f64>,
    pub label: usize,
}

impl Labeled {
    pub fn new(vector: Vec<f64>, label: usize) -> Self {
        Self { vector, label }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prototype {
    pub vector: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    dimension: usize,
    prototypes: Vec<Prototype>,
}

impl Codebook {
    pub fn new(dimension: usize, prototypes: Vec<Prototype>) -> Result<Self> {
        if prototypes.is_empty() {
            return Err(Error::Empty("codebook needs at least one prototype"));
        }
        if let Some(p) = prototypes.iter().find(|p| p.vector.len() != dimension) {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                actual: p.vector.len(),
            });
        }
        Ok(Self {
            dimension,
            prototypes,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn prototypes(&self) -> &[Prototype] {
        &self.prototypes
    }

    pub fn len(&self) -> usize {
        self.prototypes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prototypes.is_empty()
    }

    pub fn classes(&self) -> BTreeSet<usize> {
        self.prototypes.iter().map(|p| p.label).collect()
    }

    /// Label of the nearest prototype.
    pub fn classify(&self, x: &[f64]) -> Result<usize> {
        let (i, _) = nearest_prototype(self, x)?;
        Ok(self.prototypes[i].label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvqConfig {
    pub prototypes_per_class: usize,
    /// Initial learning rate α₀, decayed linearly to zero over the epochs.
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub total_prototypes_cap: usize,
}

impl Default for LvqConfig {
    fn default() -> Self {
        Self {
            prototypes_per_class: 2,
            learning_rate: 0.1,
            epochs: 500,
            seed: 0,
            total_prototypes_cap: 40,
        }
    }
}

impl LvqConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate < 1.0) {
            return Err(Error::Parameter(format!(
                "learning rate must be in (0, 1), got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Parameter("epochs must be at least 1".into()));
        }
        if self.prototypes_per_class == 0 || self.total_prototypes_cap == 0 {
            return Err(Error::Parameter(
                "prototype counts must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Prototypes per class after applying the total cap (never below one).
    pub fn effective_prototypes_per_class(&self, classes: usize) -> usize {
        if classes == 0 {
            return self.prototypes_per_class;
        }
        self.prototypes_per_class
            .min(self.total_prototypes_cap / classes)
            .max(1)
    }
}

/// Default ensemble: α₀ ∈ {0.1, 0.2, 0.3} with seeds `seed + 0..3`.
pub fn default_member_configs(seed: u64) -> Vec<LvqConfig> {
    [0.1, 0.2, 0.3]
        .iter()
        .enumerate()
        .map(|(i, &a)| LvqConfig {
            learning_rate: a,
            seed: seed.wrapping_add(i as u64),
            ..Default::default()
        })
        .collect()
}

fn check_data(data: &[Labeled]) -> Result<usize> {
    let first = data.first().ok_or(Error::Empty("training set is empty"))?;
    let dim = first.vector.len();
    if dim == 0 {
        return Err(Error::Dimension("feature vectors are empty".into()));
    }
    if let Some(bad) = data.iter().find(|d| d.vector.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.vector.len(),
        });
    }
    Ok(dim)
}

fn class_members(data: &[Labeled]) -> BTreeMap<usize, Vec<usize>> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, d) in data.iter().enumerate() {
        by_class.entry(d.label).or_default().push(i);
    }
    by_class
}

fn init_with(data: &[Labeled], cfg: &LvqConfig, rng: &mut ChaCha8Rng) -> Result<Codebook> {
    cfg.validate()?;
    let dim = check_data(data)?;
    let by_class = class_members(data);
    let per_class = cfg.effective_prototypes_per_class(by_class.len());
    let mut prototypes = Vec::with_capacity(per_class * by_class.len());
    for (&class, members) in &by_class {
        if members.len() < per_class {
            return Err(Error::Data(format!(
                "class {class} has {} samples, needs {per_class} for its prototypes",
                members.len()
            )));
        }
        for k in rand::seq::index::sample(rng, members.len(), per_class) {
            prototypes.push(Prototype {
                vector: data[members[k]].vector.clone(),
                label: class,
            });
        }
    }
    Codebook::new(dim, prototypes)
}

/// Seeded draw of distinct training samples per class.
pub fn init_codebook(data: &[Labeled], cfg: &LvqConfig) -> Result<Codebook> {
    init_with(data, cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed))
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4 * 4;
    for (ca, cb) in a[..chunks].chunks_exact(4).zip(b[..chunks].chunks_exact(4)) {
        for k in 0..4 {
            let d = ca[k] - cb[k];
            acc[k] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in a[chunks..].iter().zip(&b[chunks..]) {
        tail += (x - y) * (x - y);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Index and Euclidean distance of the nearest prototype; ties go to the lower index.
pub fn nearest_prototype(cb: &Codebook, x: &[f64]) -> Result<(usize, f64)> {
    if x.len() != cb.dimension {
        return Err(Error::DimensionMismatch {
            expected: cb.dimension,
            actual: x.len(),
        });
    }
    let mut best = (0, f64::INFINITY);
    for (i, p) in cb.prototypes.iter().enumerate() {
        let d = squared_distance(&p.vector, x);
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok((best.0, best.1.sqrt()))
}

/// One winner update, reported to training observers.
#[derive(Debug)]
pub struct Update<'a> {
    pub epoch: usize,
    pub alpha: f64,
    pub sample: &'a [f64],
    pub before: &'a [f64],
    pub after: &'a [f64],
    /// Whether the winner's label matched the sample's.
    pub attract: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedCodebook {
    pub codebook: Codebook,
    /// Training-set accuracy at the end of each epoch.
    pub training_log: Vec<f64>,
    pub prototypes_per_class: usize,
}

pub fn train_lvq1(data: &[Labeled], cfg: &LvqConfig) -> Result<TrainedCodebook> {
    train_lvq1_observed(data, cfg, |_| {})
}

/// LVQ1 with linear decay `α_t = α₀ (1 − t / epochs)` and a seeded shuffle per epoch.
pub fn train_lvq1_observed(
    data: &[Labeled],
    cfg: &LvqConfig,
    mut observe: impl FnMut(&Update),
) -> Result<TrainedCodebook> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cb = init_with(data, cfg, &mut rng)?;
    let prototypes_per_class = cfg.effective_prototypes_per_class(cb.classes().len());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut training_log = Vec::with_capacity(cfg.epochs);
    let mut before = Vec::new();
    for epoch in 0..cfg.epochs {
        let alpha = cfg.learning_rate * (1.0 - epoch as f64 / cfg.epochs as f64);
        order.shuffle(&mut rng);
        for &i in &order {
            let x = &data[i];
            let (w, _) = nearest_prototype(&cb, &x.vector)?;
            let proto = &mut cb.prototypes[w];
            before.clear();
            before.extend_from_slice(&proto.vector);
            let attract = update_winner(proto, x, alpha);
            observe(&Update {
                epoch,
                alpha,
                sample: &x.vector,
                before: &before,
                after: &proto.vector,
                attract,
            });
        }
        training_log.push(accuracy(&cb, data)?);
    }
    Ok(TrainedCodebook {
        codebook: cb,
        training_log,
        prototypes_per_class,
    })
}

/// LVQ1 rule: `w ← w ± α (x − w)`, attracting on a label match. Returns
/// whether the prototype was attracted.
pub fn update_winner(proto: &mut Prototype, x: &Labeled, alpha: f64) -> bool {
    let attract = proto.label == x.label;
    let step = if attract { alpha } else { -alpha };
    for (p, &v) in proto.vector.iter_mut().zip(&x.vector) {
        *p += step * (v - *p);
    }
    attract
}

/// Fraction of `data` whose nearest prototype carries the right label.
pub fn accuracy(cb: &Codebook, data: &[Labeled]) -> Result<f64> {
    let correct = data
        .par_iter()
        .map(|d| cb.classify(&d.vector).map(|l| usize::from(l == d.label)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(correct as f64 / data.len().max(1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedEnsemble {
    pub members: Vec<Codebook>,
    pub member_configs: Vec<LvqConfig>,
    /// Per member, training accuracy after each epoch.
    pub training_log: Vec<Vec<f64>>,
    /// Free-form description of the input space (e.g. the feature tag).
    pub input_tag: String,
}

impl TrainedEnsemble {
    pub fn new(
        members: Vec<Codebook>,
        member_configs: Vec<LvqConfig>,
        training_log: Vec<Vec<f64>>,
        input_tag: String,
    ) -> Result<Self> {
        let first = members
            .first()
            .ok_or(Error::Empty("ensemble has no members"))?;
        if member_configs.len() != members.len() || training_log.len() != members.len() {
            return Err(Error::Data(
                "ensemble members, configs and logs differ in length".into(),
            ));
        }
        let classes = first.classes();
        for (i, m) in members.iter().enumerate() {
            if m.dimension != first.dimension {
                return Err(Error::Member {
                    index: i,
                    source: Box::new(Error::DimensionMismatch {
                        expected: first.dimension,
                        actual: m.dimension,
                    }),
                });
            }
            if m.classes() != classes {
                return Err(Error::Member {
                    index: i,
                    source: Box::new(Error::Data("class set differs from member 0".into())),
                });
            }
        }
        Ok(Self {
            members,
            member_configs,
            training_log,
            input_tag,
        })
    }

    pub fn dimension(&self) -> usize {
        self.members[0].dimension
    }

    pub fn classes(&self) -> BTreeSet<usize> {
        self.members[0].classes()
    }
}

/// Trains every member independently (in parallel) from the same data.
pub fn ensemble_train(data: &[Labeled], member_configs: &[LvqConfig]) -> Result<TrainedEnsemble> {
    if member_configs.is_empty() {
        return Err(Error::Empty("ensemble needs at least one member config"));
    }
    let trained = member_configs
        .par_iter()
        .enumerate()
        .map(|(index, cfg)| {
            train_lvq1(data, cfg).map_err(|e| Error::Member {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (members, logs) = trained
        .into_iter()
        .map(|t| (t.codebook, t.training_log))
        .unzip();
    TrainedEnsemble::new(members, member_configs.to_vec(), logs, String::new())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub label: usize,
    /// Label voted by each member.
    pub votes: Vec<usize>,
    /// Winner distance of each member.
    pub distances: Vec<f64>,
}

impl Classification {
    pub fn vote_count(&self) -> usize {
        self.votes.iter().filter(|&&v| v == self.label).count()
    }
}

/// Combines member votes: the most-voted label wins; among labels tied for the
/// most votes, the smallest summed winner distance, then the smallest id.
pub fn majority_vote(votes: &[usize], distances: &[f64]) -> usize {
    let mut tally: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for (&v, &d) in votes.iter().zip(distances) {
        let e = tally.entry(v).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += d;
    }
    let top = tally.values().map(|t| t.0).max().unwrap_or(0);
    tally
        .into_iter()
        .filter(|(_, t)| t.0 == top)
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(&b.0)))
        .map(|(label, _)| label)
        .expect("at least one vote")
}

pub fn ensemble_classify(ens: &TrainedEnsemble, x: &[f64]) -> Result<Classification> {
    let mut votes = Vec::with_capacity(ens.members.len());
    let mut distances = Vec::with_capacity(ens.members.len());
    for m in &ens.members {
        let (i, d) = nearest_prototype(m, x)?;
        votes.push(m.prototypes[i].label);
        distances.push(d);
    }
    Ok(Classification {
        label: majority_vote(&votes, &distances),
        votes,
        distances,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub total: usize,
    pub correct: usize,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// Samples of each true class, including unclassified ones.
    pub class_totals: Vec<usize>,
    /// Samples without a prediction.
    pub unclassified: usize,
}

impl Metrics {
    /// Builds metrics from `(truth, prediction)` pairs; `None` predictions
    /// count as errors and appear in no confusion cell.
    pub fn from_outcomes(classes: usize, outcomes: &[(usize, Option<usize>)]) -> Self {
        let n = outcomes
            .iter()
            .flat_map(|&(t, p)| [Some(t), p])
            .flatten()
            .map(|c| c + 1)
            .max()
            .unwrap_or(0)
            .max(classes);
        let mut confusion = vec![vec![0; n]; n];
        let mut class_totals = vec![0; n];
        let (mut correct, mut unclassified) = (0, 0);
        for &(t, p) in outcomes {
            class_totals[t] += 1;
            match p {
                Some(p) => {
                    confusion[t][p] += 1;
                    correct += usize::from(t == p);
                }
                None => unclassified += 1,
            }
        }
        Self {
            total: outcomes.len(),
            correct,
            confusion,
            class_totals,
            unclassified,
        }
    }

    pub fn recognition_rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    /// Correct fraction per true class (`None` for classes without samples).
    pub fn per_class_accuracy(&self) -> Vec<Option<f64>> {
        self.class_totals
            .iter()
            .enumerate()
            .map(|(c, &n)| (n > 0).then(|| self.confusion[c][c] as f64 / n as f64))
            .collect()
    }
}

pub fn evaluate(ens: &TrainedEnsemble, test: &[Labeled]) -> Result<Metrics> {
    if test.is_empty() {
        return Err(Error::Empty("test set is empty"));
    }
    let outcomes = test
        .par_iter()
        .map(|t| ensemble_classify(ens, &t.vector).map(|c| (t.label, Some(c.label))))
        .collect::<Result<Vec<_>>>()?;
    let classes = ens.classes().iter().next_back().map_or(0, |c| c + 1);
    Ok(Metrics::from_outcomes(classes, &outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cb(protos: &[(&[f64], usize)]) -> Codebook {
        Codebook::new(
            protos[0].0.len(),
            protos
                .iter()
                .map(|(v, l)| Prototype {
                    vector: v.to_vec(),
                    label: *l,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn nearest_examples() {
        let c = cb(&[(&[0.0, 0.0], 0), (&[10.0, 10.0], 1)]);
        let (i, d) = nearest_prototype(&c, &[1.0, 1.0]).unwrap();
        assert_eq!(i, 0);
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(nearest_prototype(&c, &[10.0, 10.0]).unwrap(), (1, 0.0));
        assert_eq!(nearest_prototype(&c, &[5.0, 5.0]).unwrap().0, 0);
        assert!(matches!(
            nearest_prototype(&c, &[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        ));
    }

    #[test]
    fn single_update_directions() {
        for (label, expected) in [(0, 0.1), (1, -0.1)] {
            let mut w = Prototype {
                vector: vec![0.0, 0.0],
                label: 0,
            };
            let attract = update_winner(&mut w, &Labeled::new(vec![1.0, 0.0], label), 0.1);
            assert_eq!(attract, label == 0);
            assert_eq!(w.vector, vec![expected, 0.0]);
        }
    }

    #[test]
    fn config_validation() {
        assert!(LvqConfig::default().validate().is_ok());
        for bad in [
            LvqConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            LvqConfig {
                learning_rate: 1.0,
                ..Default::default()
            },
            LvqConfig {
                epochs: 0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
        assert!(LvqConfig {
            learning_rate: 0.9,
            ..Default::default()
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn init_counts_and_reduction() {
        let data: Vec<Labeled> = (0..90)
            .map(|i| Labeled::new(vec![i as f64, 1.0], i % 30))
            .collect();
        let cfg = LvqConfig::default();
        let c = init_codebook(&data, &cfg).unwrap();
        assert_eq!(c.len(), 30);
        assert_eq!(c.classes().len(), 30);
        assert_eq!(init_codebook(&data, &cfg).unwrap(), c);

        let two: Vec<Labeled> = data.iter().filter(|d| d.label < 2).cloned().collect();
        let c2 = init_codebook(&two, &cfg).unwrap();
        assert_eq!(c2.len(), 4);
        for class in 0..2 {
            let mine: Vec<_> = c2
                .prototypes()
                .iter()
                .filter(|p| p.label == class)
                .collect();
            assert_eq!(mine.len(), 2);
            assert_ne!(mine[0].vector, mine[1].vector);
            assert!(mine
                .iter()
                .all(|p| two.iter().any(|d| d.vector == p.vector && d.label == class)));
        }
    }

    #[test]
    fn too_few_samples_names_class() {
        let data = vec![
            Labeled::new(vec![0.0], 0),
            Labeled::new(vec![1.0], 0),
            Labeled::new(vec![2.0], 7),
        ];
        let err = init_codebook(&data, &LvqConfig::default()).unwrap_err();
        assert!(err.to_string().contains("class 7"), "{err}");
    }

    #[test]
    fn vote_rules() {
        assert_eq!(majority_vote(&[0, 1, 0], &[1.0, 0.1, 1.0]), 0);
        assert_eq!(majority_vote(&[2, 2, 2], &[1.0, 1.0, 1.0]), 2);
        assert_eq!(majority_vote(&[0, 1, 2], &[1.0, 0.5, 2.0]), 1);
        assert_eq!(majority_vote(&[3, 1], &[1.0, 1.0]), 1);
    }

    #[test]
    fn metrics_counting() {
        let m = Metrics::from_outcomes(3, &[(0, Some(0)), (1, Some(2)), (2, None), (2, Some(2))]);
        assert_eq!(m.total, 4);
        assert_eq!(m.correct, 2);
        assert_eq!(m.recognition_rate(), 0.5);
        assert_eq!(m.confusion[1][2], 1);
        assert_eq!(m.unclassified, 1);
        assert_eq!(m.class_totals, vec![1, 1, 2]);
        assert_eq!(
            m.per_class_accuracy(),
            vec![Some(1.0), Some(0.0), Some(0.5)]
        );
    }
}
