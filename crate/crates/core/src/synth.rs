//! Synthetic eye images with known geometry.
//!
//! Each class owns a seeded band-texture signature (a few sinusoids in
//! normalized polar coordinates mixed with smooth value noise). Each image draws
//! its own pupil and iris circles, rotation, sensor noise and an optional upper
//! eyelid with eyelashes, and records the truth alongside the pixels.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::localization::Circle;
use crate::raster::{BitMask, GrayImage};

pub const BACKGROUND_LEVEL: f64 = 200.0;
pub const PUPIL_LEVEL: f64 = 25.0;
pub const IRIS_BASE_LEVEL: f64 = 140.0;
pub const IRIS_LEVEL_RANGE: (f64, f64) = (110.0, 170.0);
pub const EYELID_LEVEL: f64 = 175.0;
pub const EYELASH_LEVEL: f64 = 35.0;

const WAVES: usize = 5;
const NOISE_RADIAL: usize = 4;
const NOISE_ANGULAR: usize = 24;
const NOISE_AMPLITUDE: f64 = 12.0;
const SUPERSAMPLE: usize = 1;
const MARGIN: f64 = 4.0;

/// Generation parameters for a labelled synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthEyeSpec {
    pub classes: usize,
    pub images_per_class: usize,
    pub width: usize,
    pub height: usize,
    pub pupil_radius: (f64, f64),
    /// Iris radius as a multiple of the pupil radius.
    pub iris_ratio: (f64, f64),
    /// Maximum absolute rotation, degrees.
    pub rotation_jitter: f64,
    pub noise_sigma: f64,
    pub occluder_probability: f64,
    /// Fraction of each class assigned to the training split.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SynthEyeSpec {
    fn default() -> Self {
        Self {
            classes: 20,
            images_per_class: 10,
            width: 320,
            height: 280,
            pupil_radius: (20.0, 32.0),
            iris_ratio: (2.4, 3.2),
            rotation_jitter: 3.0,
            noise_sigma: 4.0,
            occluder_probability: 0.3,
            train_fraction: 0.7,
            seed: 42,
        }
    }
}

impl SynthEyeSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.classes == 0 || self.images_per_class == 0 {
            return bad("classes and images_per_class must be >= 1".into());
        }
        let (pl, ph) = self.pupil_radius;
        if !(pl >= 3.0 && pl <= ph) {
            return bad(format!(
                "pupil radius range ({pl}, {ph}) must satisfy 3 <= lo <= hi"
            ));
        }
        let (rl, rh) = self.iris_ratio;
        if !(rl > 1.2 && rl <= rh) {
            return bad(format!(
                "iris ratio range ({rl}, {rh}) must satisfy 1.2 < lo <= hi"
            ));
        }
        let max_iris = ph * rh;
        if 2.0 * (max_iris + MARGIN) > self.width.min(self.height) as f64 {
            return bad(format!(
                "iris radius up to {max_iris:.1} px does not fit a {}x{} image",
                self.width, self.height
            ));
        }
        if !(0.0..=45.0).contains(&self.rotation_jitter) {
            return bad("rotation jitter must be in [0, 45] degrees".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise sigma must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.occluder_probability) {
            return bad("occluder probability must be in [0, 1]".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return bad("train fraction must be in (0, 1]".into());
        }
        Ok(())
    }

    /// Number of training images per class (at least one).
    pub fn train_count(&self) -> usize {
        ((self.train_fraction * self.images_per_class as f64).round() as usize)
            .clamp(1, self.images_per_class)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Wave {
    amplitude: f64,
    angular: f64,
    radial: f64,
    phase: f64,
}

/// Per-class iris texture as a function of normalized radius and angle.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSignature {
    waves: Vec<Wave>,
    noise: Vec<f64>,
}

impl ClassSignature {
    pub fn generate(seed: u64, class: usize) -> Self {
        let mut rng = stream(seed, class as u64 + 1);
        let waves = (0..WAVES)
            .map(|_| Wave {
                amplitude: rng.random_range(6.0..14.0),
                angular: rng.random_range(2..=16) as f64,
                radial: rng.random_range(0.5..3.0),
                phase: rng.random_range(0.0..TAU),
            })
            .collect();
        let noise = (0..NOISE_RADIAL * NOISE_ANGULAR)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Self { waves, noise }
    }

    /// Intensity at normalized radius `rho` in [0, 1] and angle `theta`.
    pub fn texture(&self, rho: f64, theta: f64) -> f64 {
        let mut v = 0.0;
        for w in &self.waves {
            v += w.amplitude * (w.angular * theta + PI * w.radial * rho + w.phase).cos();
        }
        v += NOISE_AMPLITUDE * self.value_noise(rho, theta);
        // smooth saturation into the iris band
        let half = (IRIS_LEVEL_RANGE.1 - IRIS_LEVEL_RANGE.0) / 2.0;
        IRIS_BASE_LEVEL + half * (v / half).tanh()
    }

    fn value_noise(&self, rho: f64, theta: f64) -> f64 {
        let a = theta.rem_euclid(TAU) / TAU * NOISE_ANGULAR as f64;
        let r = rho.clamp(0.0, 1.0) * (NOISE_RADIAL - 1) as f64;
        let (a0, r0) = (
            a.floor() as usize % NOISE_ANGULAR,
            (r.floor() as usize).min(NOISE_RADIAL - 2),
        );
        let a1 = (a0 + 1) % NOISE_ANGULAR;
        let (fa, fr) = (smooth(a - a.floor()), smooth(r - r0 as f64));
        let g = |ri: usize, ai: usize| self.noise[ri * NOISE_ANGULAR + ai];
        let top = g(r0, a0) + fa * (g(r0, a1) - g(r0, a0));
        let bottom = g(r0 + 1, a0) + fa * (g(r0 + 1, a1) - g(r0 + 1, a0));
        top + fr * (bottom - top)
    }
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Upper eyelid boundary plus eyelash streaks hanging from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Occluder {
    /// Lid boundary `y = apex_y + curvature * (x - apex_x)²`; the lid covers everything above it.
    pub apex_x: f64,
    pub apex_y: f64,
    pub curvature: f64,
    /// Eyelash streaks as (x at the lid, length, slant dx/dy, half-width).
    pub lashes: Vec<(f64, f64, f64, f64)>,
}

impl Occluder {
    fn lid_y(&self, x: f64) -> f64 {
        self.apex_y + self.curvature * (x - self.apex_x).powi(2)
    }

    fn covers_lid(&self, x: f64, y: f64) -> bool {
        y < self.lid_y(x)
    }

    fn covers_lash(&self, x: f64, y: f64) -> bool {
        self.lashes.iter().any(|&(lx, len, slant, half)| {
            let top = self.lid_y(lx);
            let depth = y - top;
            depth >= -1.0 && depth <= len && (x - (lx + slant * depth)).abs() <= half
        })
    }
}

/// Everything needed to render one eye.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeParams {
    pub width: usize,
    pub height: usize,
    pub pupil: Circle,
    pub iris: Circle,
    /// Texture rotation, degrees; positive turns the texture towards +θ.
    pub rotation_deg: f64,
    pub noise_sigma: f64,
    pub occluder: Option<Occluder>,
    pub noise_seed: u64,
    /// When false the annulus is painted with the background level.
    pub textured_iris: bool,
}

/// Rendered eye with its ground truth.
#[derive(Debug, Clone)]
pub struct SynthEye {
    pub image: GrayImage,
    pub params: EyeParams,
    /// Pixels whose center lies on an eyelash streak.
    pub eyelash_mask: BitMask,
}

/// Distance from the pupil center to the iris circle along direction `theta`.
fn iris_extent(pupil: &Circle, iris: &Circle, theta: f64) -> f64 {
    let (ux, uy) = (theta.cos(), theta.sin());
    let (ox, oy) = (pupil.cx - iris.cx, pupil.cy - iris.cy);
    let b = ux * ox + uy * oy;
    let c = ox * ox + oy * oy - iris.r * iris.r;
    -b + (b * b - c).max(0.0).sqrt()
}

fn scene_intensity(p: &EyeParams, sig: &ClassSignature, x: f64, y: f64) -> f64 {
    if let Some(occ) = &p.occluder {
        if occ.covers_lid(x, y) {
            return EYELID_LEVEL;
        }
        if occ.covers_lash(x, y) {
            return EYELASH_LEVEL;
        }
    }
    let (dx, dy) = (x - p.pupil.cx, y - p.pupil.cy);
    let d = dx.hypot(dy);
    if d <= p.pupil.r {
        return PUPIL_LEVEL;
    }
    if (x - p.iris.cx).hypot(y - p.iris.cy) > p.iris.r {
        return BACKGROUND_LEVEL;
    }
    if !p.textured_iris {
        return BACKGROUND_LEVEL;
    }
    let theta = dy.atan2(dx);
    let extent = iris_extent(&p.pupil, &p.iris, theta);
    let rho = ((d - p.pupil.r) / (extent - p.pupil.r)).clamp(0.0, 1.0);
    sig.texture(rho, theta - p.rotation_deg.to_radians())
}

pub fn render_eye(p: &EyeParams, sig: &ClassSignature) -> SynthEye {
    let normal = Normal::new(0.0, p.noise_sigma.max(0.0)).expect("finite sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(p.noise_seed);
    let step = 1.0 / SUPERSAMPLE as f64;
    let offset = -0.5 + step / 2.0;
    let mut data = Vec::with_capacity(p.width * p.height);
    let mut lashes = BitMask::empty(p.width, p.height);
    for y in 0..p.height {
        for x in 0..p.width {
            let mut acc = 0.0;
            for sy in 0..SUPERSAMPLE {
                for sx in 0..SUPERSAMPLE {
                    acc += scene_intensity(
                        p,
                        sig,
                        x as f64 + offset + sx as f64 * step,
                        y as f64 + offset + sy as f64 * step,
                    );
                }
            }
            let mut v = acc / (SUPERSAMPLE * SUPERSAMPLE) as f64;
            if p.noise_sigma > 0.0 {
                v += normal.sample(&mut rng);
            }
            data.push(v.round().clamp(0.0, 255.0) as u8);
            if let Some(occ) = &p.occluder {
                if !occ.covers_lid(x as f64, y as f64) && occ.covers_lash(x as f64, y as f64) {
                    lashes.set(x, y, true);
                }
            }
        }
    }
    SynthEye {
        image: GrayImage::new(p.width, p.height, data).expect("dimensions match"),
        params: p.clone(),
        eyelash_mask: lashes,
    }
}

/// One entry of a generated dataset.
#[derive(Debug, Clone)]
pub struct SynthSample {
    pub class: usize,
    pub index: usize,
    pub train: bool,
    pub eye: SynthEye,
}

/// Draws the geometry and nuisance parameters of image `index` of `class`.
pub fn sample_params(spec: &SynthEyeSpec, class: usize, index: usize) -> EyeParams {
    let id = (class * spec.images_per_class + index) as u64;
    let mut rng = stream(spec.seed, (1 << 32) + id);
    let pupil_r = uniform(&mut rng, spec.pupil_radius);
    let iris_r = pupil_r * uniform(&mut rng, spec.iris_ratio);
    let reach = iris_r + MARGIN;
    let cx = uniform(&mut rng, (reach, spec.width as f64 - 1.0 - reach));
    let cy = uniform(&mut rng, (reach, spec.height as f64 - 1.0 - reach));
    let rotation_deg = uniform(&mut rng, (-spec.rotation_jitter, spec.rotation_jitter));
    let occluded = rng.random_bool(spec.occluder_probability);
    let occluder = occluded.then(|| {
        let apex_x = cx + iris_r * rng.random_range(-0.2..0.2);
        let apex_y = cy - iris_r * rng.random_range(0.6..0.85);
        let curvature = rng.random_range(0.002..0.006);
        let count = rng.random_range(3..=6);
        // lashes stop short of the pupil
        let lash_floor = cy - pupil_r - 0.1 * iris_r;
        let lashes = (0..count)
            .filter_map(|_| {
                let lx = cx + iris_r * rng.random_range(-0.5..0.5);
                let len = iris_r * rng.random_range(0.1..0.2);
                let slant = rng.random_range(-0.3..0.3);
                let top = apex_y + curvature * (lx - apex_x).powi(2);
                let len = len.min(lash_floor - top);
                (len > 2.0).then_some((lx, len, slant, 1.0))
            })
            .collect();
        Occluder {
            apex_x,
            apex_y,
            curvature,
            lashes,
        }
    });
    EyeParams {
        width: spec.width,
        height: spec.height,
        pupil: Circle::new(cx, cy, pupil_r),
        iris: Circle::new(cx, cy, iris_r),
        rotation_deg,
        noise_sigma: spec.noise_sigma,
        occluder,
        noise_seed: rng.random(),
        textured_iris: true,
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Which image indices of each class go to training, seeded per class.
pub fn train_split(spec: &SynthEyeSpec, class: usize) -> Vec<bool> {
    let mut rng = stream(spec.seed, (2 << 32) + class as u64);
    let picked = rand::seq::index::sample(&mut rng, spec.images_per_class, spec.train_count());
    let mut train = vec![false; spec.images_per_class];
    for i in picked {
        train[i] = true;
    }
    train
}

/// Renders the whole dataset in class-major order.
pub fn generate(spec: &SynthEyeSpec) -> Result<Vec<SynthSample>> {
    use rayon::prelude::*;
    spec.validate()?;
    let signatures: Vec<ClassSignature> = (0..spec.classes)
        .map(|c| ClassSignature::generate(spec.seed, c))
        .collect();
    let splits: Vec<Vec<bool>> = (0..spec.classes).map(|c| train_split(spec, c)).collect();
    let jobs: Vec<(usize, usize)> = (0..spec.classes)
        .flat_map(|c| (0..spec.images_per_class).map(move |i| (c, i)))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(class, index)| {
            let params = sample_params(spec, class, index);
            SynthSample {
                class,
                index,
                train: splits[class][index],
                eye: render_eye(&params, &signatures[class]),
            }
        })
        .collect())
}

/// Ground-truth sidecar text for one image.
pub fn truth_sidecar(p: &EyeParams) -> String {
    format!(
        "iris-truth 1\npupil {} {} {}\niris {} {} {}\nrotation_deg {}\noccluded {}\n",
        p.pupil.cx,
        p.pupil.cy,
        p.pupil.r,
        p.iris.cx,
        p.iris.cy,
        p.iris.r,
        p.rotation_deg,
        u8::from(p.occluder.is_some())
    )
}

/// Parses a sidecar written by [`truth_sidecar`] into (pupil, iris, rotation).
pub fn parse_truth_sidecar(text: &str) -> Result<(Circle, Circle, f64)> {
    let err = |line: usize, reason: &str| Error::Format {
        what: "truth sidecar",
        line,
        reason: reason.to_string(),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "iris-truth 1")) => {}
        _ => return Err(err(1, "missing header")),
    }
    let mut pupil = None;
    let mut iris = None;
    let mut rotation = None;
    for (i, line) in lines {
        let mut it = line.split_whitespace();
        let key = it.next().unwrap_or("");
        let nums: Vec<f64> = it
            .map(|t| t.parse().map_err(|_| err(i + 1, "bad number")))
            .collect::<Result<_>>()?;
        match (key, nums.as_slice()) {
            ("pupil", [x, y, r]) => pupil = Some(Circle::new(*x, *y, *r)),
            ("iris", [x, y, r]) => iris = Some(Circle::new(*x, *y, *r)),
            ("rotation_deg", [d]) => rotation = Some(*d),
            ("occluded", [_]) | ("", []) => {}
            _ => return Err(err(i + 1, "unexpected line")),
        }
    }
    match (pupil, iris, rotation) {
        (Some(p), Some(i), Some(r)) => Ok((p, i, r)),
        _ => Err(err(0, "incomplete sidecar")),
    }
}
