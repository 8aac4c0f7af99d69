//! Local binary patterns and the regional histogram descriptor.
//!
//! The descriptor splits a normalized iris into a 10×10 grid of cells, builds a
//! uniform-LBP histogram per cell and appends seven global intensity statistics.

pub mod cache;

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::normalization::NormalizedIris;
use crate::raster::histogram_stats;

/// Cells along each axis of the normalized iris.
pub const GRID_CELLS: usize = 10;
/// Cells with fewer valid code sites than this fraction emit an all-zero histogram.
pub const MIN_CELL_COVERAGE: f64 = 0.25;
pub const STATS_LEN: usize = 7;

/// Supported (neighbors, radius) pairs.
pub const CONFIGURATIONS: [(usize, usize); 3] = [(8, 1), (16, 2), (24, 3)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LbpConfig {
    pub neighbors: usize,
    pub radius: usize,
    /// Bin uniform codes individually and pool the rest; otherwise one bin per code.
    pub uniform: bool,
    /// Append the per-cell mean contrast (one value per cell).
    pub contrast: bool,
}

impl Default for LbpConfig {
    fn default() -> Self {
        Self {
            neighbors: 8,
            radius: 1,
            uniform: true,
            contrast: false,
        }
    }
}

impl LbpConfig {
    pub fn validate(&self) -> Result<()> {
        if !CONFIGURATIONS.contains(&(self.neighbors, self.radius)) {
            return Err(Error::Parameter(format!(
                "LBP (P, R) must be one of (8, 1), (16, 2), (24, 3), got ({}, {})",
                self.neighbors, self.radius
            )));
        }
        if !self.uniform && self.neighbors > 8 {
            return Err(Error::Parameter(format!(
                "full-code histograms are limited to P = 8, got P = {}",
                self.neighbors
            )));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        bins(self.neighbors, self.uniform)
    }

    pub fn dimension(&self) -> usize {
        let cells = GRID_CELLS * GRID_CELLS;
        cells * self.bins() + STATS_LEN + if self.contrast { cells } else { 0 }
    }

    /// Compact description stored alongside every feature vector.
    pub fn tag(&self) -> String {
        format!(
            "lbp-p{}-r{}-{}{}-stats{}",
            self.neighbors,
            self.radius,
            if self.uniform { "u2" } else { "full" },
            if self.contrast { "-c" } else { "" },
            STATS_LEN
        )
    }
}

/// Histogram length for `p` neighbors.
pub fn bins(p: usize, uniform: bool) -> usize {
    if uniform {
        p * (p - 1) + 3
    } else {
        1 << p
    }
}

/// Code of a 3×3 patch; neighbors are weighted clockwise from the top-left.
pub fn lbp_code_3x3(n: &[[f64; 3]; 3]) -> u8 {
    let c = n[1][1];
    ring_3x3(n)
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= c)
        .fold(0u8, |code, (k, _)| code | (1 << k))
}

/// Mean of the neighbors at or above the center minus the mean of those below.
pub fn contrast_3x3(n: &[[f64; 3]; 3]) -> f64 {
    contrast(&ring_3x3(n), n[1][1])
}

fn ring_3x3(n: &[[f64; 3]; 3]) -> [f64; 8] {
    [
        n[0][0], n[0][1], n[0][2], n[1][2], n[2][2], n[2][1], n[2][0], n[1][0],
    ]
}

fn contrast(samples: &[f64], center: f64) -> f64 {
    let (mut hi, mut nh, mut lo, mut nl) = (0.0, 0usize, 0.0, 0usize);
    for &v in samples {
        if v >= center {
            hi += v;
            nh += 1;
        } else {
            lo += v;
            nl += 1;
        }
    }
    let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
    mean(hi, nh) - mean(lo, nl)
}

/// Row-major view of a real-valued grid.
#[derive(Debug, Clone, Copy)]
pub struct GridView<'a> {
    pub width: usize,
    pub height: usize,
    pub data: &'a [f64],
}

impl<'a> GridView<'a> {
    pub fn new(width: usize, height: usize, data: &'a [f64]) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::Dimension(format!(
                "grid {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    fn get(&self, x: isize, y: isize) -> Option<f64> {
        (x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height)
            .then(|| self.data[y as usize * self.width + x as usize])
    }
}

/// Offsets of the `p` circular samples, counter-clockwise from +x with y pointing down.
pub fn sample_offsets(p: usize, r: usize) -> Vec<(f64, f64)> {
    let snap = |v: f64| {
        if (v - v.round()).abs() < 1e-9 {
            v.round()
        } else {
            v
        }
    };
    (0..p)
        .map(|k| {
            let t = TAU * k as f64 / p as f64;
            (snap(r as f64 * t.cos()), snap(-(r as f64) * t.sin()))
        })
        .collect()
}

fn interp(
    get: &impl Fn(isize, isize) -> Option<f64>,
    x0: isize,
    y0: isize,
    fx: f64,
    fy: f64,
) -> Option<f64> {
    let row = |y: isize| -> Option<f64> {
        let a = get(x0, y)?;
        if fx > 0.0 {
            Some(a + fx * (get(x0 + 1, y)? - a))
        } else {
            Some(a)
        }
    };
    let top = row(y0)?;
    if fy > 0.0 {
        Some(top + fy * (row(y0 + 1)? - top))
    } else {
        Some(top)
    }
}

/// Sampling offset pre-split into integer part and fraction, along x then y.
type SplitOffset = ((isize, f64), (isize, f64));

/// Integer cell and fractional weights of a real position.
fn split(v: f64) -> (isize, f64) {
    let f = v.floor();
    (f as isize, v - f)
}

fn threshold(samples: &[f64], center: f64) -> u32 {
    samples
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= center)
        .fold(0u32, |code, (k, _)| code | (1 << k))
}

/// Code and contrast at integer site `(x, y)`, or `None` if any support pixel
/// is unavailable. Offsets are pre-split so every site sees identical weights.
fn code_at_site(
    get: &impl Fn(isize, isize) -> Option<f64>,
    x: isize,
    y: isize,
    offsets: &[SplitOffset],
    samples: &mut Vec<f64>,
) -> Option<(u32, f64)> {
    let center = get(x, y)?;
    samples.clear();
    for &((ix, fx), (iy, fy)) in offsets {
        samples.push(interp(get, x + ix, y + iy, fx, fy)?);
    }
    Some((threshold(samples, center), contrast(samples, center)))
}

/// Circular LBP code at real coordinates `(x, y)` of `grid`.
pub fn lbp_code_general(grid: &GridView, x: f64, y: f64, cfg: &LbpConfig) -> Result<u32> {
    cfg.validate()?;
    let r = cfg.radius as f64;
    let inside = x - r >= 0.0
        && y - r >= 0.0
        && x + r <= (grid.width - 1) as f64
        && y + r <= (grid.height - 1) as f64;
    if !inside {
        return Err(Error::OutOfBounds { x, y, radius: r });
    }
    let get = |x, y| grid.get(x, y);
    let at = |sx: f64, sy: f64| {
        let ((x0, fx), (y0, fy)) = (split(sx), split(sy));
        interp(&get, x0, y0, fx, fy).expect("support lies inside the grid")
    };
    let center = at(x, y);
    let samples: Vec<f64> = sample_offsets(cfg.neighbors, cfg.radius)
        .iter()
        .map(|&(dx, dy)| at(x + dx, y + dy))
        .collect();
    Ok(threshold(&samples, center))
}

/// Bit changes around the circular `p`-bit sequence.
pub fn transition_count(code: u32, p: usize) -> u32 {
    debug_assert!((1..=31).contains(&p) && code < 1 << p);
    let rotated = (code >> 1) | ((code & 1) << (p - 1));
    (code ^ rotated).count_ones()
}

pub fn is_uniform(code: u32, p: usize) -> bool {
    transition_count(code, p) <= 2
}

/// All uniform `p`-bit codes in ascending order.
pub fn uniform_codes(p: usize) -> Vec<u32> {
    let full = (1u32 << p) - 1;
    let mut codes = vec![0, full];
    for len in 1..p {
        let run = (1u32 << len) - 1;
        for start in 0..p {
            codes.push(((run << start) | (run >> (p - start))) & full);
        }
    }
    codes.sort_unstable();
    codes.dedup();
    codes
}

/// Histogram bin of `code`: uniform codes by rank, every other code in the last bin.
pub fn uniform_bin(code: u32, p: usize) -> usize {
    BinMap::new(p, true).bin(code)
}

struct BinMap {
    uniform: Option<Vec<u32>>,
}

impl BinMap {
    fn new(p: usize, uniform: bool) -> Self {
        Self {
            uniform: uniform.then(|| uniform_codes(p)),
        }
    }

    fn bin(&self, code: u32) -> usize {
        match &self.uniform {
            Some(codes) => codes.binary_search(&code).unwrap_or(codes.len()),
            None => code as usize,
        }
    }
}

/// Per-cell histogram plus mean contrast over the cell's code sites.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDescriptor {
    pub histogram: Vec<f64>,
    pub contrast: f64,
    pub sites: usize,
}

/// Computes all 100 cell descriptors in row-major cell order.
///
/// Angular columns wrap around; radial rows do not. A code site needs its
/// center and every bilinear support pixel to be valid.
pub fn cell_descriptors(norm: &NormalizedIris, cfg: &LbpConfig) -> Result<Vec<CellDescriptor>> {
    cfg.validate()?;
    let (rows, cols) = (norm.radial_res(), norm.angular_res());
    if rows % GRID_CELLS != 0 || cols % GRID_CELLS != 0 {
        return Err(Error::Dimension(format!(
            "normalized iris {rows}x{cols} does not split into a {GRID_CELLS}x{GRID_CELLS} grid"
        )));
    }
    let (ch, cw) = (rows / GRID_CELLS, cols / GRID_CELLS);
    let offsets: Vec<_> = sample_offsets(cfg.neighbors, cfg.radius)
        .into_iter()
        .map(|(dx, dy)| (split(dx), split(dy)))
        .collect();
    let bins = BinMap::new(cfg.neighbors, cfg.uniform);
    let nbins = cfg.bins();
    let get = |x: isize, y: isize| -> Option<f64> {
        if y < 0 || y as usize >= rows {
            return None;
        }
        let x = x.rem_euclid(cols as isize) as usize;
        let y = y as usize;
        norm.is_valid(y, x).then(|| norm.at(y, x))
    };

    Ok((0..GRID_CELLS * GRID_CELLS)
        .into_par_iter()
        .map(|cell| {
            let (gy, gx) = (cell / GRID_CELLS, cell % GRID_CELLS);
            let mut counts = vec![0usize; nbins];
            let mut contrast_sum = 0.0;
            let mut sites = 0usize;
            let mut samples = Vec::with_capacity(offsets.len());
            for y in gy * ch..(gy + 1) * ch {
                for x in gx * cw..(gx + 1) * cw {
                    if let Some((code, c)) =
                        code_at_site(&get, x as isize, y as isize, &offsets, &mut samples)
                    {
                        counts[bins.bin(code)] += 1;
                        contrast_sum += c;
                        sites += 1;
                    }
                }
            }
            if (sites as f64) < MIN_CELL_COVERAGE * (ch * cw) as f64 {
                return CellDescriptor {
                    histogram: vec![0.0; nbins],
                    contrast: 0.0,
                    sites,
                };
            }
            CellDescriptor {
                histogram: counts.iter().map(|&n| n as f64 / sites as f64).collect(),
                contrast: contrast_sum / sites as f64,
                sites,
            }
        })
        .collect())
}

/// The 100 regional histograms in row-major cell order.
pub fn region_histograms(norm: &NormalizedIris, cfg: &LbpConfig) -> Result<Vec<Vec<f64>>> {
    Ok(cell_descriptors(norm, cfg)?
        .into_iter()
        .map(|c| c.histogram)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub config_tag: String,
    pub label: Option<usize>,
}

impl FeatureVector {
    pub fn dimension(&self) -> usize {
        self.values.len()
    }
}

/// Histograms, optional contrast block, then the seven statistics of all valid
/// texture intensities (scaled by 1/255, variance by 1/255²).
pub fn feature_vector(norm: &NormalizedIris, cfg: &LbpConfig) -> Result<FeatureVector> {
    let valid: Vec<f64> = norm
        .texture()
        .iter()
        .zip(norm.valid())
        .filter(|(_, &ok)| ok)
        .map(|(&v, _)| v)
        .collect();
    if valid.is_empty() {
        return Err(Error::Empty("normalized iris has no valid texture"));
    }
    let cells = cell_descriptors(norm, cfg)?;
    let mut values = Vec::with_capacity(cfg.dimension());
    for c in &cells {
        values.extend_from_slice(&c.histogram);
    }
    if cfg.contrast {
        values.extend(cells.iter().map(|c| c.contrast / 255.0));
    }
    let mut stats = histogram_stats(&valid)?.to_array();
    for (k, s) in stats.iter_mut().enumerate() {
        *s /= if k == 5 { 255.0 * 255.0 } else { 255.0 };
    }
    values.extend_from_slice(&stats);
    debug_assert_eq!(values.len(), cfg.dimension());
    Ok(FeatureVector {
        values,
        config_tag: cfg.tag(),
        label: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: [[f64; 3]; 3] = [[6.0, 3.0, 4.0], [5.0, 4.0, 5.0], [3.0, 1.0, 4.0]];

    #[test]
    fn table_patch() {
        assert_eq!(lbp_code_3x3(&TABLE), 157);
        assert!((contrast_3x3(&TABLE) - 2.4666667).abs() <= 1e-6);
    }

    #[test]
    fn trivial_patches() {
        let flat = [[9.0; 3]; 3];
        assert_eq!(lbp_code_3x3(&flat), 255);
        assert_eq!(contrast_3x3(&flat), 9.0);
        let peak = [[1.0, 2.0, 1.0], [2.0, 7.0, 2.0], [1.0, 2.0, 1.0]];
        assert_eq!(lbp_code_3x3(&peak), 0);
        let alt = [[10.0, 0.0, 10.0], [0.0, 5.0, 0.0], [10.0, 0.0, 10.0]];
        assert_eq!(contrast_3x3(&alt), 10.0);
    }

    #[test]
    fn transitions_and_uniformity() {
        assert_eq!(transition_count(0b0000_0000, 8), 0);
        assert_eq!(transition_count(0b0111_1000, 8), 2);
        assert_eq!(transition_count(0b1011_0101, 8), 6);
        for code in [
            0b1101_1111,
            0b1110_1111,
            0b0111_0000,
            0b0000_0000,
            0b0111_1000,
        ] {
            assert!(is_uniform(code, 8), "{code:08b}");
        }
        assert!(!is_uniform(0b1011_0101, 8));
    }

    #[test]
    fn uniform_code_counts() {
        for p in [8, 16, 24] {
            let codes = uniform_codes(p);
            assert_eq!(codes.len(), p * (p - 1) + 2);
            assert_eq!(bins(p, true), codes.len() + 1);
            assert!(codes.iter().all(|&c| is_uniform(c, p)));
        }
        let enumerated = (0u32..256).filter(|&c| is_uniform(c, 8)).count();
        assert_eq!(enumerated, 58);
    }

    #[test]
    fn bins_for_p8() {
        assert_eq!(uniform_bin(0, 8), 0);
        assert_eq!(uniform_bin(255, 8), 57);
        assert_eq!(uniform_bin(0b1011_0101, 8), 58);
    }

    #[test]
    fn config_validation() {
        assert!(LbpConfig::default().validate().is_ok());
        for (p, r) in CONFIGURATIONS {
            let cfg = LbpConfig {
                neighbors: p,
                radius: r,
                ..Default::default()
            };
            assert!(cfg.validate().is_ok());
        }
        let bad = LbpConfig {
            neighbors: 8,
            radius: 2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let full16 = LbpConfig {
            neighbors: 16,
            radius: 2,
            uniform: false,
            contrast: false,
        };
        assert!(full16.validate().is_err());
        assert_eq!(LbpConfig::default().dimension(), 5907);
    }

    #[test]
    fn general_code_bounds() {
        let data = vec![1.0; 25];
        let g = GridView::new(5, 5, &data).unwrap();
        let cfg = LbpConfig::default();
        assert_eq!(lbp_code_general(&g, 2.0, 2.0, &cfg).unwrap(), 255);
        assert!(matches!(
            lbp_code_general(&g, 0.5, 2.0, &cfg),
            Err(Error::OutOfBounds { .. })
        ));
        let cfg16 = LbpConfig {
            neighbors: 16,
            radius: 2,
            ..Default::default()
        };
        assert_eq!(lbp_code_general(&g, 2.0, 2.0, &cfg16).unwrap(), 0xFFFF);
    }

    #[test]
    fn offsets_are_snapped() {
        let o = sample_offsets(8, 1);
        assert_eq!(o[0], (1.0, 0.0));
        assert_eq!(o[2], (0.0, -1.0));
        assert_eq!(o[4], (-1.0, 0.0));
        assert_eq!(o[6], (0.0, 1.0));
    }
}
