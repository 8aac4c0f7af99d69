//! Four-stage Canny edge detector: Gaussian smoothing, Sobel gradients,
//! non-maximum suppression over four quantized directions, and hysteresis.

use std::collections::VecDeque;

use super::EdgeMap;
use crate::error::{Error, Result};
use crate::raster::GrayImage;

pub const DEFAULT_SIGMA: f64 = 1.4;
pub const DEFAULT_HIGH_FRAC: f64 = 0.2;
pub const DEFAULT_LOW_FRAC: f64 = 0.4;

/// Canny thresholds and smoothing scale.
///
/// `high = high_frac * max_gradient`, `low = low_frac * high`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CannyParams {
    pub high_frac: f64,
    pub low_frac: f64,
    pub sigma: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            high_frac: DEFAULT_HIGH_FRAC,
            low_frac: DEFAULT_LOW_FRAC,
            sigma: DEFAULT_SIGMA,
        }
    }
}

impl CannyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.high_frac > 0.0 && self.high_frac <= 1.0) {
            return Err(Error::Parameter(format!(
                "canny high_frac must be in (0, 1], got {}",
                self.high_frac
            )));
        }
        if !(self.low_frac > 0.0 && self.low_frac < 1.0) {
            return Err(Error::Parameter(format!(
                "canny low_frac must be in (0, 1), got {}",
                self.low_frac
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Parameter(format!(
                "canny sigma must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

pub fn canny(img: &GrayImage, high_frac: f64, low_frac: f64, sigma: f64) -> Result<EdgeMap> {
    canny_with(
        img,
        &CannyParams {
            high_frac,
            low_frac,
            sigma,
        },
    )
}

pub fn canny_with(img: &GrayImage, params: &CannyParams) -> Result<EdgeMap> {
    params.validate()?;
    let (w, h) = (img.width(), img.height());
    if w < 5 || h < 5 {
        return Err(Error::Dimension(format!(
            "canny needs at least a 5x5 image, got {w}x{h}"
        )));
    }

    let smoothed = gaussian_blur(img, params.sigma);
    let (gx, gy) = sobel(&smoothed, w, h);
    let magnitude: Vec<f32> = gx.iter().zip(&gy).map(|(x, y)| x.hypot(*y)).collect();
    let thinned = non_maximum_suppression(&magnitude, &gx, &gy, w, h);

    let max = thinned.iter().copied().fold(0.0f32, f32::max);
    let mut edges = vec![false; w * h];
    if max > 0.0 {
        let high = (params.high_frac * max as f64) as f32;
        let low = (params.low_frac * high as f64) as f32;
        hysteresis(&thinned, w, h, low, high, &mut edges);
    }
    Ok(EdgeMap::from_raw(w, h, edges))
}

fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil().max(1.0) as i64;
    let two_s2 = 2.0 * sigma * sigma;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / two_s2).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|v| (v / sum) as f32).collect()
}

#[inline]
fn clamp_index(i: i64, n: usize) -> usize {
    i.clamp(0, n as i64 - 1) as usize
}

/// Separable Gaussian blur with replicated borders.
fn gaussian_blur(img: &GrayImage, sigma: f64) -> Vec<f32> {
    let (w, h) = (img.width(), img.height());
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as i64;
    let src = img.data();

    let mut horizontal = vec![0.0f32; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0f32;
            for (k, weight) in kernel.iter().enumerate() {
                acc += weight * row[clamp_index(x as i64 + k as i64 - r, w)] as f32;
            }
            horizontal[y * w + x] = acc;
        }
    }

    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        for (k, weight) in kernel.iter().enumerate() {
            let sy = clamp_index(y as i64 + k as i64 - r, h);
            let src_row = &horizontal[sy * w..(sy + 1) * w];
            let dst_row = &mut out[y * w..(y + 1) * w];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += weight * s;
            }
        }
    }
    out
}

fn sobel(src: &[f32], w: usize, h: usize) -> (Vec<f32>, Vec<f32>) {
    let mut gx = vec![0.0f32; w * h];
    let mut gy = vec![0.0f32; w * h];
    let at = |x: i64, y: i64| src[clamp_index(y, h) * w + clamp_index(x, w)];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let (tl, t, tr) = (at(x - 1, y - 1), at(x, y - 1), at(x + 1, y - 1));
            let (l, r) = (at(x - 1, y), at(x + 1, y));
            let (bl, b, br) = (at(x - 1, y + 1), at(x, y + 1), at(x + 1, y + 1));
            let i = y as usize * w + x as usize;
            gx[i] = (tr + 2.0 * r + br) - (tl + 2.0 * l + bl);
            gy[i] = (bl + 2.0 * b + br) - (tl + 2.0 * t + tr);
        }
    }
    (gx, gy)
}

/// Keeps pixels that are maxima along their quantized gradient direction.
///
/// A pixel survives when it is strictly greater than the neighbor behind it and
/// at least equal to the neighbor ahead, so a two-pixel plateau keeps exactly
/// one pixel. The one-pixel border is always suppressed.
fn non_maximum_suppression(mag: &[f32], gx: &[f32], gy: &[f32], w: usize, h: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let mut angle = gy[i].atan2(gx[i]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let (dx, dy): (isize, isize) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let ahead = mag[(y as isize + dy) as usize * w + (x as isize + dx) as usize];
            let behind = mag[(y as isize - dy) as usize * w + (x as isize - dx) as usize];
            if m > behind && m >= ahead {
                out[i] = m;
            }
        }
    }
    out
}

fn hysteresis(thinned: &[f32], w: usize, h: usize, low: f32, high: f32, edges: &mut [bool]) {
    let mut queue = VecDeque::new();
    for (i, &m) in thinned.iter().enumerate() {
        if m > 0.0 && m >= high {
            edges[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !edges[j] && thinned[j] > 0.0 && thinned[j] >= low {
                    edges[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
}
