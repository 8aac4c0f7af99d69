//! Noise masking and rubber-sheet unwrapping of the iris annulus.
//!
//! Output cell `(i, j)` samples the source at
//! `(1 - r) · pupil(θ) + r · iris(θ)` with `r = (i + 0.5) / radial` and
//! `θ = 2π (j + 0.5) / angular`, where `pupil(θ)` and `iris(θ)` are points on the
//! two boundary circles. Sampling is bilinear; a cell is valid only if all four
//! support pixels are in bounds and valid in the noise mask.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::localization::{IrisGeometry, FIRST_THRESHOLD_FACTOR, SECOND_THRESHOLD_FACTOR};
use crate::raster::{mean_intensity, GrayImage};

pub const RADIAL_RES: usize = 40;
pub const ANGULAR_RES: usize = 240;
/// Intensities above this are treated as specular highlights.
pub const HIGHLIGHT_THRESHOLD: f64 = 240.0;
/// Eyelid/eyelash cut as a fraction of the mean intensity.
pub const DARK_FACTOR: f64 = FIRST_THRESHOLD_FACTOR * SECOND_THRESHOLD_FACTOR;

/// Per-pixel usability of iris texture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseMask {
    width: usize,
    height: usize,
    valid: Vec<bool>,
}

impl NoiseMask {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn to_image(&self) -> GrayImage {
        GrayImage::new(
            self.width,
            self.height,
            self.valid
                .iter()
                .map(|&v| if v { 255 } else { 0 })
                .collect(),
        )
        .expect("mask dimensions are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub dark_factor: f64,
    pub highlight: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            dark_factor: DARK_FACTOR,
            highlight: HIGHLIGHT_THRESHOLD,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dark_factor >= 0.0 && self.dark_factor < 1.0) {
            return Err(Error::Parameter(format!(
                "noise dark factor must be in [0, 1), got {}",
                self.dark_factor
            )));
        }
        if !(0.0..=255.0).contains(&self.highlight) {
            return Err(Error::Parameter(format!(
                "highlight threshold must be in [0, 255], got {}",
                self.highlight
            )));
        }
        Ok(())
    }
}

pub fn noise_mask(img: &GrayImage, geom: &IrisGeometry) -> NoiseMask {
    noise_mask_with(img, geom, &NoiseParams::default())
}

pub fn noise_mask_with(img: &GrayImage, geom: &IrisGeometry, params: &NoiseParams) -> NoiseMask {
    let t_dark = params.dark_factor * mean_intensity(img);
    let (p, i) = (geom.pupil, geom.iris);
    let mut valid = Vec::with_capacity(img.width() * img.height());
    for y in 0..img.height() {
        for x in 0..img.width() {
            let (fx, fy) = (x as f64, y as f64);
            let in_annulus =
                (fx - p.cx).hypot(fy - p.cy) > p.r && (fx - i.cx).hypot(fy - i.cy) <= i.r;
            let v = img.get(x, y) as f64;
            valid.push(in_annulus && v >= t_dark && v <= params.highlight);
        }
    }
    NoiseMask {
        width: img.width(),
        height: img.height(),
        valid,
    }
}

/// Fixed-size polar unwrap with its validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedIris {
    radial_res: usize,
    angular_res: usize,
    texture: Vec<f64>,
    valid: Vec<bool>,
    occlusion_fraction: f64,
}

impl NormalizedIris {
    pub fn new(
        radial_res: usize,
        angular_res: usize,
        texture: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let n = radial_res * angular_res;
        if n == 0 || texture.len() != n || valid.len() != n {
            return Err(Error::Dimension(format!(
                "normalized iris {radial_res}x{angular_res} needs {n} cells, got {} texture / {} valid",
                texture.len(),
                valid.len()
            )));
        }
        let invalid = valid.iter().filter(|&&v| !v).count();
        Ok(Self {
            radial_res,
            angular_res,
            texture,
            valid,
            occlusion_fraction: invalid as f64 / n as f64,
        })
    }

    pub fn radial_res(&self) -> usize {
        self.radial_res
    }

    pub fn angular_res(&self) -> usize {
        self.angular_res
    }

    pub fn texture(&self) -> &[f64] {
        &self.texture
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn occlusion_fraction(&self) -> f64 {
        self.occlusion_fraction
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.texture[row * self.angular_res + col]
    }

    #[inline]
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.valid[row * self.angular_res + col]
    }

    /// Texture as an 8-bit image (rounded), rows = radius, columns = angle.
    pub fn texture_image(&self) -> GrayImage {
        GrayImage::new(
            self.angular_res,
            self.radial_res,
            self.texture
                .iter()
                .map(|v| v.round().clamp(0.0, 255.0) as u8)
                .collect(),
        )
        .expect("non-empty")
    }

    pub fn valid_image(&self) -> GrayImage {
        GrayImage::new(
            self.angular_res,
            self.radial_res,
            self.valid
                .iter()
                .map(|&v| if v { 255 } else { 0 })
                .collect(),
        )
        .expect("non-empty")
    }
}

/// Source position for normalized radius `r` in [0, 1] and angle `theta`.
pub fn sheet_point(geom: &IrisGeometry, r: f64, theta: f64) -> (f64, f64) {
    let (xp, yp) = geom.pupil.point_at(theta);
    let (xi, yi) = geom.iris.point_at(theta);
    ((1.0 - r) * xp + r * xi, (1.0 - r) * yp + r * yi)
}

pub fn rubber_sheet(img: &GrayImage, geom: &IrisGeometry, mask: &NoiseMask) -> NormalizedIris {
    rubber_sheet_with_resolution(img, geom, mask, RADIAL_RES, ANGULAR_RES)
        .expect("default resolution is valid")
}

pub fn rubber_sheet_with_resolution(
    img: &GrayImage,
    geom: &IrisGeometry,
    mask: &NoiseMask,
    radial_res: usize,
    angular_res: usize,
) -> Result<NormalizedIris> {
    if radial_res == 0 || angular_res == 0 {
        return Err(Error::Dimension(
            "normalized resolution must be non-zero".into(),
        ));
    }
    if mask.width != img.width() || mask.height != img.height() {
        return Err(Error::Dimension(format!(
            "noise mask {}x{} does not match image {}x{}",
            mask.width,
            mask.height,
            img.width(),
            img.height()
        )));
    }
    let rows: Vec<(Vec<f64>, Vec<bool>)> = (0..radial_res)
        .into_par_iter()
        .map(|i| {
            let r = (i as f64 + 0.5) / radial_res as f64;
            let mut tex = Vec::with_capacity(angular_res);
            let mut ok = Vec::with_capacity(angular_res);
            for j in 0..angular_res {
                let theta = TAU * (j as f64 + 0.5) / angular_res as f64;
                let (x, y) = sheet_point(geom, r, theta);
                let (v, valid) = sample_bilinear(img, mask, x, y);
                tex.push(v);
                ok.push(valid);
            }
            (tex, ok)
        })
        .collect();
    let mut texture = Vec::with_capacity(radial_res * angular_res);
    let mut valid = Vec::with_capacity(radial_res * angular_res);
    for (t, v) in rows {
        texture.extend(t);
        valid.extend(v);
    }
    NormalizedIris::new(radial_res, angular_res, texture, valid)
}

/// Bilinear sample and validity of its four support pixels.
fn sample_bilinear(img: &GrayImage, mask: &NoiseMask, x: f64, y: f64) -> (f64, bool) {
    let (x0, y0) = (x.floor(), y.floor());
    if !(x0 >= 0.0 && y0 >= 0.0)
        || x0 + 1.0 >= img.width() as f64
        || y0 + 1.0 >= img.height() as f64
    {
        return (0.0, false);
    }
    let (x0, y0) = (x0 as usize, y0 as usize);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let p = |dx: usize, dy: usize| img.get(x0 + dx, y0 + dy) as f64;
    let top = p(0, 0) + fx * (p(1, 0) - p(0, 0));
    let bottom = p(0, 1) + fx * (p(1, 1) - p(0, 1));
    let value = top + fy * (bottom - top);
    let valid = mask.is_valid(x0, y0)
        && mask.is_valid(x0 + 1, y0)
        && mask.is_valid(x0, y0 + 1)
        && mask.is_valid(x0 + 1, y0 + 1);
    (value, valid)
}
