//! Pupil and iris boundary localization.
//!
//! The pupil is seeded from two dark-pixel projections (a 0.52×mean binarization
//! of the central window and a 0.312×mean binarization of the whole image), then
//! both circles are refined with a constrained circular Hough transform over the
//! Canny edge map.

mod canny;
mod hough;

pub use canny::{canny, canny_with, CannyParams};
pub use hough::{
    hough_circles, hough_circles_with, radius_bin, ring_len, ring_offsets, CircleHypothesis,
    VotingStrategy,
};

use std::cmp::Ordering;

use crate::error::{Error, Result, Stage};
use crate::raster::{binarize_dark, mean_intensity, BitMask, GrayImage, Rect};

/// Binarization factor for the central-window pass.
pub const FIRST_THRESHOLD_FACTOR: f64 = 0.52;
/// Extra factor applied on top of the first one for the full-image pass.
pub const SECOND_THRESHOLD_FACTOR: f64 = 0.6;

/// Boolean edge raster produced by [`canny`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    edges: Vec<bool>,
}

impl EdgeMap {
    pub fn from_raw(width: usize, height: usize, edges: Vec<bool>) -> Self {
        assert_eq!(edges.len(), width * height, "edge buffer size mismatch");
        Self {
            width,
            height,
            edges,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn edges(&self) -> &[bool] {
        &self.edges
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.edges[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.edges[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.edges.iter().filter(|&&e| e).count()
    }

    /// Edge pixel coordinates in row-major order.
    pub fn points(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &e)| e)
            .map(|(i, _)| (i % self.width, i / self.width))
            .collect()
    }

    pub fn to_mask(&self) -> BitMask {
        BitMask::new(self.width, self.height, self.edges.clone()).expect("same dimensions")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl Circle {
    pub fn new(cx: f64, cy: f64, r: f64) -> Self {
        Self { cx, cy, r }
    }

    pub fn center_distance(&self, other: &Circle) -> f64 {
        (self.cx - other.cx).hypot(self.cy - other.cy)
    }

    /// Point on the circle at angle `theta` (radians, y axis pointing down).
    pub fn point_at(&self, theta: f64) -> (f64, f64) {
        (
            self.cx + self.r * theta.cos(),
            self.cy + self.r * theta.sin(),
        )
    }
}

/// Pupil and iris boundary circles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrisGeometry {
    pub pupil: Circle,
    pub iris: Circle,
}

impl IrisGeometry {
    /// Checks `iris.r > pupil.r` and that the centers are closer than the pupil radius.
    pub fn new(pupil: Circle, iris: Circle) -> Result<Self> {
        if pupil.r.partial_cmp(&0.0) != Some(Ordering::Greater)
            || iris.r.partial_cmp(&pupil.r) != Some(Ordering::Greater)
        {
            return Err(Error::Parameter(format!(
                "iris radius {} must exceed pupil radius {} > 0",
                iris.r, pupil.r
            )));
        }
        if pupil.center_distance(&iris) >= pupil.r {
            return Err(Error::Parameter(format!(
                "pupil and iris centers are {:.2} px apart, not within pupil radius {}",
                pupil.center_distance(&iris),
                pupil.r
            )));
        }
        Ok(Self { pupil, iris })
    }
}

/// Seed from the two projection passes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PupilEstimate {
    pub p1: (f64, f64),
    pub p2: (f64, f64),
    pub p3: (f64, f64),
    pub radius_seed: f64,
}

/// Central window spanning the middle 60% of rows and columns.
pub fn interest_region(img: &GrayImage) -> Rect {
    let (w, h) = (img.width(), img.height());
    Rect {
        x0: w / 5,
        y0: h / 5,
        x1: w - w / 5,
        y1: h - h / 5,
    }
}

/// Column and row with the most foreground pixels; ties go to the smallest index.
pub fn projection_point(mask: &BitMask) -> Result<(usize, usize)> {
    let (w, h) = (mask.width(), mask.height());
    let mut cols = vec![0usize; w];
    let mut rows = vec![0usize; h];
    for (y, row) in rows.iter_mut().enumerate() {
        for (x, col) in cols.iter_mut().enumerate() {
            if mask.get(x, y) {
                *col += 1;
                *row += 1;
            }
        }
    }
    let argmax = |counts: &[usize]| {
        counts.iter().enumerate().fold(
            (0, 0),
            |best, (i, &c)| if c > best.1 { (i, c) } else { best },
        )
    };
    let (x, cx) = argmax(&cols);
    let (y, _) = argmax(&rows);
    if cx == 0 {
        return Err(Error::NoPupil("binarized mask has no foreground".into()));
    }
    Ok((x, y))
}

/// Length of the foreground run containing `(x, y)` along a row or column.
fn run_length(mask: &BitMask, x: usize, y: usize, horizontal: bool) -> usize {
    if !mask.get(x, y) {
        return 0;
    }
    let (pos, len) = if horizontal {
        (x, mask.width())
    } else {
        (y, mask.height())
    };
    let at = |i: usize| {
        if horizontal {
            mask.get(i, y)
        } else {
            mask.get(x, i)
        }
    };
    let mut lo = pos;
    while lo > 0 && at(lo - 1) {
        lo -= 1;
    }
    let mut hi = pos;
    while hi + 1 < len && at(hi + 1) {
        hi += 1;
    }
    hi - lo + 1
}

pub fn estimate_pupil(img: &GrayImage) -> Result<PupilEstimate> {
    estimate_pupil_traced(img).map(|t| t.estimate)
}

/// Intermediate masks of the pupil seed, for debug dumps.
#[derive(Debug, Clone)]
pub struct PupilTrace {
    pub estimate: PupilEstimate,
    pub window: Rect,
    /// First-pass mask in full-image coordinates (zero outside the window).
    pub first_mask: BitMask,
    pub second_mask: BitMask,
}

pub fn estimate_pupil_traced(img: &GrayImage) -> Result<PupilTrace> {
    let mean = mean_intensity(img);
    let t1 = FIRST_THRESHOLD_FACTOR * mean;
    let t2 = SECOND_THRESHOLD_FACTOR * t1;

    let window = interest_region(img);
    let mut first_mask = BitMask::empty(img.width(), img.height());
    for y in window.y0..window.y1 {
        for x in window.x0..window.x1 {
            first_mask.set(x, y, img.get(x, y) as f64 <= t1);
        }
    }
    let second_mask = binarize_dark(img, t2);

    let (x1, y1) = projection_point(&first_mask)
        .map_err(|_| Error::NoPupil(format!("nothing below {t1:.2} in the central window")))?;
    let (x2, y2) = projection_point(&second_mask)
        .map_err(|_| Error::NoPupil(format!("nothing below {t2:.2} in the image")))?;
    let p1 = (x1 as f64, y1 as f64);
    let p2 = (x2 as f64, y2 as f64);
    let p3 = ((p1.0 + p2.0) / 2.0, (p1.1 + p2.1) / 2.0);

    let sx = (p3.0.round() as usize).min(img.width() - 1);
    let sy = (p3.1.round() as usize).min(img.height() - 1);
    let dist1 = run_length(&second_mask, sx, sy, true);
    let dist2 = run_length(&second_mask, sx, sy, false);
    let radius_seed = (dist1 + dist2) as f64 / 4.0;
    if radius_seed <= 0.0 {
        return Err(Error::NoPupil(format!(
            "no dark run through the projection point ({sx}, {sy})"
        )));
    }
    Ok(PupilTrace {
        estimate: PupilEstimate {
            p1,
            p2,
            p3,
            radius_seed,
        },
        window,
        first_mask,
        second_mask,
    })
}

/// Tunables of the Hough refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationParams {
    pub canny: CannyParams,
    /// Max distance of the pupil center from the projection seed is
    /// `max(pupil_center_tolerance, pupil_center_seed_fraction * radius_seed)` px.
    pub pupil_center_tolerance: f64,
    pub pupil_center_seed_fraction: f64,
    /// Pupil radius search range as multiples of the seed radius.
    pub pupil_radius_range: (f64, f64),
    /// Iris radius search range as multiples of the pupil radius.
    pub iris_radius_range: (f64, f64),
    /// Max iris/pupil center offset as a fraction of the pupil radius.
    pub iris_center_fraction: f64,
    /// Minimum votes as a fraction of the ring length for a circle to count.
    pub min_support: f64,
    /// Peaks examined per stage.
    pub candidates: usize,
}

impl Default for LocalizationParams {
    fn default() -> Self {
        Self {
            canny: CannyParams::default(),
            pupil_center_tolerance: 10.0,
            pupil_center_seed_fraction: 1.0,
            pupil_radius_range: (0.5, 1.5),
            iris_radius_range: (1.5, 5.0),
            iris_center_fraction: 0.5,
            min_support: 0.2,
            candidates: 16,
        }
    }
}

impl LocalizationParams {
    pub fn validate(&self) -> Result<()> {
        self.canny.validate()?;
        let ranges = [
            ("pupil radius", self.pupil_radius_range),
            ("iris radius", self.iris_radius_range),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Parameter(format!(
                    "{name} range ({lo}, {hi}) must satisfy 0 < lo <= hi"
                )));
            }
        }
        if self.iris_radius_range.0 <= 1.0 {
            return Err(Error::Parameter(
                "iris radius range must start above 1x pupil radius".into(),
            ));
        }
        if !(self.pupil_center_tolerance >= 0.0 && self.pupil_center_seed_fraction >= 0.0) {
            return Err(Error::Parameter(
                "pupil center tolerances must be >= 0".into(),
            ));
        }
        if !(self.iris_center_fraction >= 0.0 && self.iris_center_fraction < 1.0) {
            return Err(Error::Parameter(
                "iris center fraction must be in [0, 1)".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.min_support) {
            return Err(Error::Parameter("min support must be in [0, 1]".into()));
        }
        if self.candidates == 0 {
            return Err(Error::Parameter("candidates must be >= 1".into()));
        }
        Ok(())
    }
}

pub fn locate_iris(img: &GrayImage) -> Result<IrisGeometry> {
    locate_iris_with(img, &LocalizationParams::default())
}

pub fn locate_iris_with(img: &GrayImage, params: &LocalizationParams) -> Result<IrisGeometry> {
    let trace = locate_iris_traced(img, params)?;
    trace.result
}

/// Everything computed on the way to a geometry, kept for debug dumps.
#[derive(Debug)]
pub struct LocalizationTrace {
    pub pupil: Option<PupilTrace>,
    pub edges: Option<EdgeMap>,
    pub pupil_hypotheses: Vec<CircleHypothesis>,
    pub iris_hypotheses: Vec<CircleHypothesis>,
    pub result: Result<IrisGeometry>,
}

/// Runs the full localization, returning intermediate artifacts even on failure.
///
/// The outer `Result` only reports invalid parameters.
pub fn locate_iris_traced(
    img: &GrayImage,
    params: &LocalizationParams,
) -> Result<LocalizationTrace> {
    params.validate()?;
    let mut trace = LocalizationTrace {
        pupil: None,
        edges: None,
        pupil_hypotheses: Vec::new(),
        iris_hypotheses: Vec::new(),
        result: Err(Error::NoPupil("not run".into())),
    };
    let seed = match estimate_pupil_traced(img) {
        Ok(s) => s,
        Err(e) => {
            trace.result = Err(e);
            return Ok(trace);
        }
    };
    let estimate = seed.estimate;
    trace.pupil = Some(seed);

    let edges = match canny_with(img, &params.canny) {
        Ok(e) => e,
        Err(e) => {
            trace.result = Err(e);
            return Ok(trace);
        }
    };
    let max_r = img.width().min(img.height()) - 1;

    let pupil = {
        let (lo, hi) = params.pupil_radius_range;
        let r_min = ((lo * estimate.radius_seed).floor() as usize).max(1);
        let r_max = ((hi * estimate.radius_seed).ceil() as usize).min(max_r);
        let tol = params
            .pupil_center_tolerance
            .max(params.pupil_center_seed_fraction * estimate.radius_seed);
        let window = square_window(estimate.p3, tol, img);
        let hyps = search(&edges, r_min, r_max, window, params.candidates);
        let best = hyps.iter().find(|c| {
            (c.center_x - estimate.p3.0).hypot(c.center_y - estimate.p3.1) <= tol
                && supported(c, params.min_support)
        });
        let best = best.copied();
        trace.pupil_hypotheses = hyps;
        match best {
            Some(c) => Circle::new(c.center_x, c.center_y, c.radius),
            None => {
                trace.edges = Some(edges);
                trace.result = Err(Error::LocalizationFailed {
                    stage: Stage::Pupil,
                    reason: format!(
                        "no circle with radius in [{r_min}, {r_max}] near ({:.1}, {:.1})",
                        estimate.p3.0, estimate.p3.1
                    ),
                });
                return Ok(trace);
            }
        }
    };

    let iris = {
        let (lo, hi) = params.iris_radius_range;
        let r_min = ((lo * pupil.r).ceil() as usize).max(pupil.r as usize + 1);
        let r_max = ((hi * pupil.r).floor() as usize).min(max_r);
        let tol = params.iris_center_fraction * pupil.r;
        let hyps = if r_min <= r_max {
            let window = square_window((pupil.cx, pupil.cy), tol, img);
            search(&edges, r_min, r_max, window, params.candidates)
        } else {
            Vec::new()
        };
        let best = hyps
            .iter()
            .find(|c| {
                (c.center_x - pupil.cx).hypot(c.center_y - pupil.cy) <= tol
                    && supported(c, params.min_support)
            })
            .copied();
        trace.iris_hypotheses = hyps;
        match best {
            Some(c) => Circle::new(c.center_x, c.center_y, c.radius),
            None => {
                trace.edges = Some(edges);
                trace.result = Err(Error::LocalizationFailed {
                    stage: Stage::Iris,
                    reason: format!(
                        "no supported circle with radius in [{r_min}, {r_max}] around the pupil"
                    ),
                });
                return Ok(trace);
            }
        }
    };

    trace.edges = Some(edges);
    trace.result = IrisGeometry::new(pupil, iris).map_err(|e| Error::LocalizationFailed {
        stage: Stage::Iris,
        reason: e.to_string(),
    });
    Ok(trace)
}

fn supported(c: &CircleHypothesis, min_support: f64) -> bool {
    c.score as f64 >= min_support * ring_len(c.radius as usize) as f64
}

fn square_window(center: (f64, f64), half: f64, img: &GrayImage) -> Rect {
    let h = half.floor();
    let x0 = (center.0 - h).ceil().max(0.0) as usize;
    let y0 = (center.1 - h).ceil().max(0.0) as usize;
    let x1 = ((center.0 + h).floor() + 1.0).clamp(0.0, img.width() as f64) as usize;
    let y1 = ((center.1 + h).floor() + 1.0).clamp(0.0, img.height() as f64) as usize;
    Rect { x0, y0, x1, y1 }
}

fn search(
    edges: &EdgeMap,
    r_min: usize,
    r_max: usize,
    window: Rect,
    top_k: usize,
) -> Vec<CircleHypothesis> {
    if r_min > r_max || window.is_empty() {
        return Vec::new();
    }
    hough_circles(edges, r_min, r_max, Some(window), top_k).unwrap_or_default()
}
