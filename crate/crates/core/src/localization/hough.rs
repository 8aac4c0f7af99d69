//! Circular Hough transform over a 1-px `(cx, cy, r)` accumulator.
//!
//! An edge pixel at squared distance `d2` from a candidate center votes for the
//! radius bin `r` with `r² - r < d2 <= r² + r`, i.e. `r = round(sqrt(d2))`
//! evaluated in integers. Every edge pixel therefore votes at most once per
//! center, for the full circle of each radius.
//!
//! Two equivalent voting strategies are provided: iterating over every center in
//! the search window per edge pixel, or iterating over the precomputed ring of
//! offsets for every radius. The cheaper one is picked from the problem size.

use rayon::prelude::*;

use super::EdgeMap;
use crate::error::{Error, Result};
use crate::raster::Rect;

/// Non-maximum suppression half-widths in (cx, cy, r).
pub const SUPPRESS_CENTER: usize = 5;
pub const SUPPRESS_RADIUS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleHypothesis {
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
    pub score: u32,
}

/// Which voting loop fills the accumulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VotingStrategy {
    Auto,
    /// Each edge pixel visits every center of the window.
    CenterScan,
    /// Each edge pixel walks the offset ring of every radius.
    RingWalk,
}

/// Smallest radius bin for which `d2` is inside `[r² - r + 1, r² + r]`.
#[inline]
pub fn radius_bin(d2: u64) -> u64 {
    // isqrt gives floor(sqrt(d2)); the bin is that or one more.
    let s = d2.isqrt();
    if d2 > s * s + s {
        s + 1
    } else {
        s
    }
}

/// All integer offsets whose radius bin is `r`, in row-major order.
pub fn ring_offsets(r: usize) -> Vec<(i64, i64)> {
    let r = r as i64;
    let lim = r + 1;
    let mut out = Vec::new();
    for dy in -lim..=lim {
        for dx in -lim..=lim {
            if radius_bin((dx * dx + dy * dy) as u64) == r as u64 {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Number of pixels on the voting ring of radius `r`.
pub fn ring_len(r: usize) -> usize {
    ring_offsets(r).len()
}

struct Accumulator {
    window: Rect,
    r_min: usize,
    n_r: usize,
    // layout: [cy][cx][r]
    votes: Vec<u32>,
}

impl Accumulator {
    fn index(&self, cx: usize, cy: usize, r: usize) -> usize {
        ((cy - self.window.y0) * self.window.width() + (cx - self.window.x0)) * self.n_r
            + (r - self.r_min)
    }
}

pub fn hough_circles(
    edges: &EdgeMap,
    r_min: usize,
    r_max: usize,
    center_window: Option<Rect>,
    top_k: usize,
) -> Result<Vec<CircleHypothesis>> {
    hough_circles_with(
        edges,
        r_min,
        r_max,
        center_window,
        top_k,
        VotingStrategy::Auto,
    )
}

pub fn hough_circles_with(
    edges: &EdgeMap,
    r_min: usize,
    r_max: usize,
    center_window: Option<Rect>,
    top_k: usize,
    strategy: VotingStrategy,
) -> Result<Vec<CircleHypothesis>> {
    let (w, h) = (edges.width(), edges.height());
    if r_min < 1 || r_min > r_max || r_max >= w.min(h) {
        return Err(Error::Parameter(format!(
            "hough radius range [{r_min}, {r_max}] invalid for a {w}x{h} edge map"
        )));
    }
    let full = Rect {
        x0: 0,
        y0: 0,
        x1: w,
        y1: h,
    };
    let window = match center_window {
        Some(win) => Rect {
            x0: win.x0.min(w),
            y0: win.y0.min(h),
            x1: win.x1.min(w),
            y1: win.y1.min(h),
        },
        None => full,
    };
    let points = edges.points();
    if points.is_empty() || window.is_empty() || top_k == 0 {
        return Ok(Vec::new());
    }

    let mut acc = Accumulator {
        window,
        r_min,
        n_r: r_max - r_min + 1,
        votes: vec![0; window.width() * window.height() * (r_max - r_min + 1)],
    };

    let strategy = match strategy {
        VotingStrategy::Auto => {
            let ring_cost: usize = (r_min..=r_max).map(|r| 8 * r + 4).sum();
            if window.width() * window.height() <= ring_cost {
                VotingStrategy::CenterScan
            } else {
                VotingStrategy::RingWalk
            }
        }
        s => s,
    };
    match strategy {
        VotingStrategy::CenterScan => vote_center_scan(&mut acc, &points),
        _ => vote_ring_walk(&mut acc, &points),
    }

    Ok(extract_peaks(&acc, top_k))
}

fn vote_center_scan(acc: &mut Accumulator, points: &[(usize, usize)]) {
    let window = acc.window;
    let (r_min, n_r) = (acc.r_min as u64, acc.n_r);
    let r_max = r_min + n_r as u64 - 1;
    let d2_lo = r_min * r_min - r_min + 1;
    let d2_hi = r_max * r_max + r_max;
    let row_len = window.width() * n_r;
    acc.votes
        .par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(row, slab)| {
            let cy = (window.y0 + row) as i64;
            for &(ex, ey) in points {
                let dy = ey as i64 - cy;
                let dy2 = (dy * dy) as u64;
                if dy2 > d2_hi {
                    continue;
                }
                for cx in window.x0..window.x1 {
                    let dx = ex as i64 - cx as i64;
                    let d2 = dy2 + (dx * dx) as u64;
                    if d2 < d2_lo || d2 > d2_hi {
                        continue;
                    }
                    let r = radius_bin(d2);
                    slab[(cx - window.x0) * n_r + (r - r_min) as usize] += 1;
                }
            }
        });
}

fn vote_ring_walk(acc: &mut Accumulator, points: &[(usize, usize)]) {
    let window = acc.window;
    for r in acc.r_min..acc.r_min + acc.n_r {
        let ring = ring_offsets(r);
        for &(ex, ey) in points {
            for &(dx, dy) in &ring {
                let cx = ex as i64 - dx;
                let cy = ey as i64 - dy;
                if cx < 0 || cy < 0 || !window.contains(cx as usize, cy as usize) {
                    continue;
                }
                let i = acc.index(cx as usize, cy as usize, r);
                acc.votes[i] += 1;
            }
        }
    }
}

/// Greedy peak picking: highest score first (ties by smallest `(cx, cy, r)`),
/// suppressing anything within the (5, 5, 3) box of an accepted peak.
fn extract_peaks(acc: &Accumulator, top_k: usize) -> Vec<CircleHypothesis> {
    let window = acc.window;
    let mut cells: Vec<(u32, usize, usize, usize)> = Vec::new();
    for cy in window.y0..window.y1 {
        for cx in window.x0..window.x1 {
            for r in acc.r_min..acc.r_min + acc.n_r {
                let v = acc.votes[acc.index(cx, cy, r)];
                if v > 0 {
                    cells.push((v, cx, cy, r));
                }
            }
        }
    }
    cells.sort_unstable_by(|a, b| {
        b.0.cmp(&a.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });

    let mut picked: Vec<(u32, usize, usize, usize)> = Vec::with_capacity(top_k);
    for cell in cells {
        if picked.len() == top_k {
            break;
        }
        let suppressed = picked.iter().any(|p| {
            p.1.abs_diff(cell.1) <= SUPPRESS_CENTER
                && p.2.abs_diff(cell.2) <= SUPPRESS_CENTER
                && p.3.abs_diff(cell.3) <= SUPPRESS_RADIUS
        });
        if !suppressed {
            picked.push(cell);
        }
    }
    picked
        .into_iter()
        .map(|(score, cx, cy, r)| CircleHypothesis {
            center_x: cx as f64,
            center_y: cy as f64,
            radius: r as f64,
            score,
        })
        .collect()
}
