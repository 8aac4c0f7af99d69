//! Flat `key = value` run configuration.
//!
//! Every module default is an overridable key; unknown keys are rejected and
//! all values are validated before any work starts.

use std::path::Path;

use crate::error::{Error, Result};
use crate::features::LbpConfig;
use crate::localization::LocalizationParams;
use crate::lvq::LvqConfig;
use crate::normalization::{NoiseParams, ANGULAR_RES, RADIAL_RES};
use crate::synth::SynthEyeSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads for per-image stages; 0 uses every core.
    pub workers: usize,
    pub localization: LocalizationParams,
    pub noise: NoiseParams,
    pub radial_res: usize,
    pub angular_res: usize,
    pub lbp: LbpConfig,
    /// One ensemble member per learning rate.
    pub lvq_alphas: Vec<f64>,
    pub lvq_epochs: usize,
    pub lvq_prototypes_per_class: usize,
    pub lvq_prototype_cap: usize,
    /// Dataset generation; its seed is always `seed`.
    pub synth: SynthEyeSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let lvq = LvqConfig::default();
        Self {
            seed: 42,
            workers: 0,
            localization: LocalizationParams::default(),
            noise: NoiseParams::default(),
            radial_res: RADIAL_RES,
            angular_res: ANGULAR_RES,
            lbp: LbpConfig::default(),
            lvq_alphas: vec![0.1, 0.2, 0.3],
            lvq_epochs: lvq.epochs,
            lvq_prototypes_per_class: lvq.prototypes_per_class,
            lvq_prototype_cap: lvq.total_prototypes_cap,
            synth: SynthEyeSpec::default(),
        }
    }
}

fn value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected true or false, got {v:?}"
        ))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let l = &mut self.localization;
        let s = &mut self.synth;
        match key {
            "seed" => self.seed = value(key, v)?,
            "workers" => self.workers = value(key, v)?,
            "canny.high_frac" => l.canny.high_frac = value(key, v)?,
            "canny.low_frac" => l.canny.low_frac = value(key, v)?,
            "canny.sigma" => l.canny.sigma = value(key, v)?,
            "localize.pupil_center_tolerance" => l.pupil_center_tolerance = value(key, v)?,
            "localize.pupil_center_seed_fraction" => l.pupil_center_seed_fraction = value(key, v)?,
            "localize.pupil_radius_min" => l.pupil_radius_range.0 = value(key, v)?,
            "localize.pupil_radius_max" => l.pupil_radius_range.1 = value(key, v)?,
            "localize.iris_radius_min" => l.iris_radius_range.0 = value(key, v)?,
            "localize.iris_radius_max" => l.iris_radius_range.1 = value(key, v)?,
            "localize.iris_center_fraction" => l.iris_center_fraction = value(key, v)?,
            "localize.min_support" => l.min_support = value(key, v)?,
            "localize.candidates" => l.candidates = value(key, v)?,
            "noise.dark_factor" => self.noise.dark_factor = value(key, v)?,
            "noise.highlight" => self.noise.highlight = value(key, v)?,
            "normalize.radial" => self.radial_res = value(key, v)?,
            "normalize.angular" => self.angular_res = value(key, v)?,
            "lbp.neighbors" => self.lbp.neighbors = value(key, v)?,
            "lbp.radius" => self.lbp.radius = value(key, v)?,
            "lbp.uniform" => self.lbp.uniform = flag(key, v)?,
            "lbp.contrast" => self.lbp.contrast = flag(key, v)?,
            "lvq.alphas" => {
                self.lvq_alphas = v
                    .split(',')
                    .map(|a| value(key, a.trim()))
                    .collect::<Result<_>>()?
            }
            "lvq.epochs" => self.lvq_epochs = value(key, v)?,
            "lvq.prototypes_per_class" => self.lvq_prototypes_per_class = value(key, v)?,
            "lvq.prototype_cap" => self.lvq_prototype_cap = value(key, v)?,
            "synth.classes" => s.classes = value(key, v)?,
            "synth.images_per_class" => s.images_per_class = value(key, v)?,
            "synth.width" => s.width = value(key, v)?,
            "synth.height" => s.height = value(key, v)?,
            "synth.pupil_radius_min" => s.pupil_radius.0 = value(key, v)?,
            "synth.pupil_radius_max" => s.pupil_radius.1 = value(key, v)?,
            "synth.iris_ratio_min" => s.iris_ratio.0 = value(key, v)?,
            "synth.iris_ratio_max" => s.iris_ratio.1 = value(key, v)?,
            "synth.rotation_jitter" => s.rotation_jitter = value(key, v)?,
            "synth.noise_sigma" => s.noise_sigma = value(key, v)?,
            "synth.occluder_probability" => s.occluder_probability = value(key, v)?,
            "synth.train_fraction" => s.train_fraction = value(key, v)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Every key with its effective value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let l = &self.localization;
        let s = &self.synth;
        let alphas: Vec<String> = self.lvq_alphas.iter().map(|a| a.to_string()).collect();
        vec![
            ("seed", self.seed.to_string()),
            ("workers", self.workers.to_string()),
            ("canny.high_frac", l.canny.high_frac.to_string()),
            ("canny.low_frac", l.canny.low_frac.to_string()),
            ("canny.sigma", l.canny.sigma.to_string()),
            (
                "localize.pupil_center_tolerance",
                l.pupil_center_tolerance.to_string(),
            ),
            (
                "localize.pupil_center_seed_fraction",
                l.pupil_center_seed_fraction.to_string(),
            ),
            (
                "localize.pupil_radius_min",
                l.pupil_radius_range.0.to_string(),
            ),
            (
                "localize.pupil_radius_max",
                l.pupil_radius_range.1.to_string(),
            ),
            (
                "localize.iris_radius_min",
                l.iris_radius_range.0.to_string(),
            ),
            (
                "localize.iris_radius_max",
                l.iris_radius_range.1.to_string(),
            ),
            (
                "localize.iris_center_fraction",
                l.iris_center_fraction.to_string(),
            ),
            ("localize.min_support", l.min_support.to_string()),
            ("localize.candidates", l.candidates.to_string()),
            ("noise.dark_factor", self.noise.dark_factor.to_string()),
            ("noise.highlight", self.noise.highlight.to_string()),
            ("normalize.radial", self.radial_res.to_string()),
            ("normalize.angular", self.angular_res.to_string()),
            ("lbp.neighbors", self.lbp.neighbors.to_string()),
            ("lbp.radius", self.lbp.radius.to_string()),
            ("lbp.uniform", self.lbp.uniform.to_string()),
            ("lbp.contrast", self.lbp.contrast.to_string()),
            ("lvq.alphas", alphas.join(",")),
            ("lvq.epochs", self.lvq_epochs.to_string()),
            (
                "lvq.prototypes_per_class",
                self.lvq_prototypes_per_class.to_string(),
            ),
            ("lvq.prototype_cap", self.lvq_prototype_cap.to_string()),
            ("synth.classes", s.classes.to_string()),
            ("synth.images_per_class", s.images_per_class.to_string()),
            ("synth.width", s.width.to_string()),
            ("synth.height", s.height.to_string()),
            ("synth.pupil_radius_min", s.pupil_radius.0.to_string()),
            ("synth.pupil_radius_max", s.pupil_radius.1.to_string()),
            ("synth.iris_ratio_min", s.iris_ratio.0.to_string()),
            ("synth.iris_ratio_max", s.iris_ratio.1.to_string()),
            ("synth.rotation_jitter", s.rotation_jitter.to_string()),
            ("synth.noise_sigma", s.noise_sigma.to_string()),
            (
                "synth.occluder_probability",
                s.occluder_probability.to_string(),
            ),
            ("synth.train_fraction", s.train_fraction.to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        self.entries()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Checks every key against its module's preconditions.
    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        self.localization.validate().map_err(cfg)?;
        self.noise.validate().map_err(cfg)?;
        self.lbp.validate().map_err(cfg)?;
        for (name, n) in [
            ("normalize.radial", self.radial_res),
            ("normalize.angular", self.angular_res),
        ] {
            if n == 0 || n % crate::features::GRID_CELLS != 0 {
                return Err(Error::Config(format!(
                    "{name} must be a positive multiple of {}, got {n}",
                    crate::features::GRID_CELLS
                )));
            }
        }
        if self.radial_res / crate::features::GRID_CELLS <= 2 * self.lbp.radius {
            return Err(Error::Config(format!(
                "normalize.radial = {} leaves no LBP sites for radius {}",
                self.radial_res, self.lbp.radius
            )));
        }
        if self.lvq_alphas.is_empty() {
            return Err(Error::Config("lvq.alphas needs at least one value".into()));
        }
        for m in self.member_configs() {
            m.validate().map_err(cfg)?;
        }
        self.synth_spec().validate().map_err(cfg)?;
        Ok(())
    }

    /// Ensemble member `i` uses `lvq.alphas[i]` and seed `seed + i`.
    pub fn member_configs(&self) -> Vec<LvqConfig> {
        self.lvq_alphas
            .iter()
            .enumerate()
            .map(|(i, &a)| LvqConfig {
                prototypes_per_class: self.lvq_prototypes_per_class,
                learning_rate: a,
                epochs: self.lvq_epochs,
                seed: self.seed.wrapping_add(i as u64),
                total_prototypes_cap: self.lvq_prototype_cap,
            })
            .collect()
    }

    pub fn synth_spec(&self) -> SynthEyeSpec {
        SynthEyeSpec {
            seed: self.seed,
            ..self.synth.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.set("lvq.alphas", "0.2, 0.9").unwrap();
        cfg.set("lbp.contrast", "true").unwrap();
        cfg.set("seed", "7").unwrap();
        let back = RunConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.member_configs()[1].seed, 8);
        assert_eq!(back.member_configs()[1].learning_rate, 0.9);
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = RunConfig::parse("# run\n\nseed = 3 # inline\n").unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.synth_spec().seed, 3);
    }

    #[test]
    fn rejects_invalid_values() {
        for bad in [
            "nope = 1",
            "seed",
            "seed = -1",
            "canny.high_frac = 1.5",
            "lbp.neighbors = 12",
            "lbp.uniform = maybe",
            "normalize.radial = 45",
            "lvq.alphas = 0.1, 1.0",
            "lvq.epochs = 0",
            "synth.width = 60",
            "noise.highlight = 300",
            "localize.candidates = 0",
        ] {
            assert!(
                matches!(RunConfig::parse(bad), Err(Error::Config(_))),
                "{bad} should be rejected"
            );
        }
    }
}
