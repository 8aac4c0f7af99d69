use iriskit::localization::{
    canny, estimate_pupil, hough_circles, hough_circles_with, locate_iris, projection_point,
    EdgeMap, VotingStrategy,
};
use iriskit::raster::{BitMask, GrayImage, Rect};
use iriskit::synth::{render_eye, sample_params, ClassSignature, EyeParams, SynthEyeSpec};
use iriskit::{error::Stage, Error};
use proptest::prelude::*;

/// Rasterizes circles with the midpoint circle algorithm.
fn ring_edges(w: usize, h: usize, circles: &[(i64, i64, i64)]) -> EdgeMap {
    let mut e = EdgeMap::from_raw(w, h, vec![false; w * h]);
    for &(cx, cy, r) in circles {
        let (mut x, mut y, mut d) = (r, 0i64, 1 - r);
        while x >= y {
            for (a, b) in [
                (x, y),
                (y, x),
                (-x, y),
                (-y, x),
                (x, -y),
                (y, -x),
                (-x, -y),
                (-y, -x),
            ] {
                let (px, py) = (cx + a, cy + b);
                if px >= 0 && py >= 0 && (px as usize) < w && (py as usize) < h {
                    e.set(px as usize, py as usize, true);
                }
            }
            y += 1;
            if d < 0 {
                d += 2 * y + 1;
            } else {
                x -= 1;
                d += 2 * (y - x) + 1;
            }
        }
    }
    e
}

#[test]
fn canny_vertical_step_is_one_column() {
    let (w, h) = (40, 30);
    let img = GrayImage::from_fn(w, h, |x, _| if x < w / 2 { 0 } else { 255 }).unwrap();
    let edges = canny(&img, 0.2, 0.4, 1.4).unwrap();
    let pts = edges.points();
    let cols: std::collections::BTreeSet<usize> = pts.iter().map(|p| p.0).collect();
    assert_eq!(cols.len(), 1, "edge columns {cols:?}");
    let col = *cols.iter().next().unwrap();
    // the brightness change sits between columns w/2-1 and w/2
    assert!(col == w / 2 - 1 || col == w / 2);
    // border rows are excluded by non-maximum suppression
    assert_eq!(pts.len(), h - 2);
}

#[test]
fn canny_disk_matches_analytic_circle() {
    let (cx, cy, r) = (60.3, 55.8, 25.0);
    let img = GrayImage::from_fn(120, 110, |x, y| {
        if (x as f64 - cx).hypot(y as f64 - cy) <= r {
            30
        } else {
            200
        }
    })
    .unwrap();
    let edges = canny(&img, 0.2, 0.4, 1.4).unwrap();
    let pts = edges.points();
    let samples = 720;
    let mut hit = 0;
    for k in 0..samples {
        let t = k as f64 / samples as f64 * std::f64::consts::TAU;
        let (px, py) = (cx + r * t.cos(), cy + r * t.sin());
        if pts
            .iter()
            .any(|&(x, y)| (x as f64 - px).abs() <= 1.0 && (y as f64 - py).abs() <= 1.0)
        {
            hit += 1;
        }
    }
    assert!(hit as f64 >= 0.95 * samples as f64, "{hit}/{samples}");
    for &(x, y) in &pts {
        let d = (x as f64 - cx).hypot(y as f64 - cy);
        assert!((d - r).abs() <= 1.5, "stray edge at ({x}, {y}), d = {d}");
    }
}

#[test]
fn hough_single_circle() {
    let edges = ring_edges(100, 100, &[(50, 60, 20)]);
    let hyps = hough_circles(&edges, 10, 30, None, 3).unwrap();
    let best = hyps[0];
    assert!((best.center_x - 50.0).abs() <= 1.0 && (best.center_y - 60.0).abs() <= 1.0);
    assert!((best.radius - 20.0).abs() <= 1.0);
    // every midpoint-rasterized pixel lands in the radius-20 bin of the true center
    assert_eq!(
        (best.center_x, best.center_y, best.radius),
        (50.0, 60.0, 20.0)
    );
    assert_eq!(best.score as usize, edges.count());
}

#[test]
fn hough_empty_and_two_circles() {
    let empty = EdgeMap::from_raw(50, 50, vec![false; 2500]);
    assert!(hough_circles(&empty, 5, 20, None, 5).unwrap().is_empty());

    let edges = ring_edges(160, 120, &[(40, 50, 18), (110, 70, 26)]);
    let hyps = hough_circles(&edges, 10, 30, None, 2).unwrap();
    assert_eq!(hyps.len(), 2);
    for truth in [(40.0, 50.0, 18.0), (110.0, 70.0, 26.0)] {
        assert!(hyps.iter().any(|h| {
            (h.center_x - truth.0).abs() <= 2.0
                && (h.center_y - truth.1).abs() <= 2.0
                && (h.radius - truth.2).abs() <= 2.0
        }));
    }
}

#[test]
fn hough_voting_strategies_agree() {
    let edges = ring_edges(90, 80, &[(40, 35, 15), (52, 44, 22)]);
    let window = Some(Rect {
        x0: 20,
        y0: 15,
        x1: 70,
        y1: 60,
    });
    let a = hough_circles_with(&edges, 8, 30, window, 20, VotingStrategy::CenterScan).unwrap();
    let b = hough_circles_with(&edges, 8, 30, window, 20, VotingStrategy::RingWalk).unwrap();
    assert_eq!(a, b);
}

#[test]
fn hough_hypotheses_respect_radius_range() {
    let edges = ring_edges(100, 100, &[(50, 50, 25)]);
    for h in hough_circles(&edges, 10, 20, None, 10).unwrap() {
        assert!((10.0..=20.0).contains(&h.radius));
    }
}

fn eye(params: EyeParams) -> GrayImage {
    render_eye(&params, &ClassSignature::generate(1, 0)).image
}

fn concentric(noise: f64, textured: bool) -> EyeParams {
    EyeParams {
        width: 320,
        height: 280,
        pupil: iriskit::localization::Circle::new(160.0, 140.0, 30.0),
        iris: iriskit::localization::Circle::new(160.0, 140.0, 90.0),
        rotation_deg: 0.0,
        noise_sigma: noise,
        occluder: None,
        noise_seed: 5,
        textured_iris: textured,
    }
}

#[test]
fn pupil_seed_on_synthetic_eye() {
    let est = estimate_pupil(&eye(concentric(8.0, true))).unwrap();
    assert!((est.p3.0 - 160.0).abs() <= 3.0 && (est.p3.1 - 140.0).abs() <= 3.0);
    assert!(
        (est.radius_seed - 30.0).abs() <= 0.15 * 30.0,
        "{}",
        est.radius_seed
    );
    assert_eq!(
        est.p3,
        ((est.p1.0 + est.p2.0) / 2.0, (est.p1.1 + est.p2.1) / 2.0)
    );
}

#[test]
fn locate_concentric_eye() {
    let g = locate_iris(&eye(concentric(8.0, true))).unwrap();
    assert!((g.pupil.cx - 160.0).abs() <= 2.0 && (g.pupil.cy - 140.0).abs() <= 2.0);
    assert!((g.pupil.r - 30.0).abs() <= 2.0);
    assert!((g.iris.cx - 160.0).abs() <= 2.0 && (g.iris.cy - 140.0).abs() <= 2.0);
    assert!((g.iris.r - 90.0).abs() <= 2.0);
    assert!(g.iris.r > g.pupil.r);
}

#[test]
fn flat_annulus_fails_at_iris_stage() {
    match locate_iris(&eye(concentric(0.0, false))) {
        Err(Error::LocalizationFailed { stage, .. }) => assert_eq!(stage, Stage::Iris),
        other => panic!("expected iris-stage failure, got {other:?}"),
    }
}

#[test]
fn pupil_is_inside_interest_window() {
    let img = eye(concentric(0.0, true));
    let win = iriskit::localization::interest_region(&img);
    assert!(win.contains(130, 110) && win.contains(190, 170));
}

/// Localization on a batch of generator-sampled eyes: pupil r in [20, 45],
/// iris/pupil in [2, 3.5], noise sigma 8.
#[test]
fn synthetic_batch_localization_rate() {
    let spec = SynthEyeSpec {
        classes: 1,
        images_per_class: 30,
        width: 360,
        height: 360,
        pupil_radius: (20.0, 45.0),
        iris_ratio: (2.0, 3.5),
        noise_sigma: 8.0,
        seed: 2024,
        ..Default::default()
    };
    let sig = ClassSignature::generate(spec.seed, 0);
    let mut ok = 0;
    for i in 0..spec.images_per_class {
        let p = sample_params(&spec, 0, i);
        let img = render_eye(&p, &sig).image;
        if let Ok(g) = locate_iris(&img) {
            let errs = [
                g.pupil.center_distance(&p.pupil),
                (g.pupil.r - p.pupil.r).abs(),
                g.iris.center_distance(&p.iris),
                (g.iris.r - p.iris.r).abs(),
            ];
            if errs.iter().all(|&e| e <= 2.0) {
                ok += 1;
            } else {
                eprintln!("image {i}: errors {errs:?}");
            }
        } else {
            eprintln!("image {i}: failed");
        }
    }
    assert!(ok >= 28, "{ok}/30 localized within 2 px");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projection_matches_brute_force(
        w in 1usize..24, h in 1usize..24, bits in proptest::collection::vec(any::<bool>(), 576)
    ) {
        let mask = BitMask::new(w, h, bits[..w * h].to_vec()).unwrap();
        let result = projection_point(&mask);
        if mask.count() == 0 {
            prop_assert!(result.is_err());
        } else {
            let (x, y) = result.unwrap();
            let col = |c: usize| (0..h).filter(|&r| mask.get(c, r)).count();
            let row = |r: usize| (0..w).filter(|&c| mask.get(c, r)).count();
            let best_col = (0..w).map(col).max().unwrap();
            let best_row = (0..h).map(row).max().unwrap();
            prop_assert_eq!(x, (0..w).find(|&c| col(c) == best_col).unwrap());
            prop_assert_eq!(y, (0..h).find(|&r| row(r) == best_row).unwrap());
        }
    }
}
