use iriskit::localization::{Circle, IrisGeometry};
use iriskit::normalization::{noise_mask, rubber_sheet, sheet_point, ANGULAR_RES, RADIAL_RES};
use iriskit::raster::GrayImage;
use iriskit::synth::{render_eye, sample_params, ClassSignature, SynthEyeSpec};
use proptest::prelude::*;

fn concentric(cx: f64, cy: f64, rp: f64, ri: f64) -> IrisGeometry {
    IrisGeometry::new(Circle::new(cx, cy, rp), Circle::new(cx, cy, ri)).unwrap()
}

#[test]
fn radial_gradient_unwraps_to_row_constants() {
    let g = concentric(160.0, 140.0, 30.0, 90.0);
    let img = GrayImage::from_fn(320, 280, |x, y| {
        let rho = (x as f64 - 160.0).hypot(y as f64 - 140.0);
        (255.0 * (rho - 30.0) / 60.0).round().clamp(0.0, 255.0) as u8
    })
    .unwrap();
    let n = rubber_sheet(&img, &g, &noise_mask(&img, &g));
    for i in 0..RADIAL_RES {
        let expected = 255.0 * (i as f64 + 0.5) / RADIAL_RES as f64;
        for j in 0..ANGULAR_RES {
            let v = n.at(i, j);
            assert!(
                (v - expected).abs() <= 2.0,
                "cell ({i}, {j}) = {v}, expected {expected}"
            );
        }
    }
}

#[test]
fn rotation_shifts_columns() {
    let spec = SynthEyeSpec {
        classes: 1,
        images_per_class: 6,
        noise_sigma: 0.0,
        occluder_probability: 0.0,
        seed: 99,
        ..Default::default()
    };
    let sig = ClassSignature::generate(spec.seed, 0);
    for i in 0..spec.images_per_class {
        let mut p = sample_params(&spec, 0, i);
        p.rotation_deg = 0.0;
        let shift = 7 + 31 * i;
        let base = render_eye(&p, &sig).image;
        p.rotation_deg = shift as f64 * 360.0 / ANGULAR_RES as f64;
        let turned = render_eye(&p, &sig).image;

        let g = IrisGeometry::new(p.pupil, p.iris).unwrap();
        let a = rubber_sheet(&base, &g, &noise_mask(&base, &g));
        let b = rubber_sheet(&turned, &g, &noise_mask(&turned, &g));
        let mut compared = 0;
        for r in 0..RADIAL_RES {
            for c in 0..ANGULAR_RES {
                let src = (c + ANGULAR_RES - shift % ANGULAR_RES) % ANGULAR_RES;
                if a.is_valid(r, src) && b.is_valid(r, c) {
                    compared += 1;
                    let d = (a.at(r, src) - b.at(r, c)).abs();
                    assert!(d <= 2.0, "eye {i} cell ({r}, {c}): diff {d}");
                }
            }
        }
        assert!(compared > RADIAL_RES * ANGULAR_RES * 8 / 10);
    }
}

#[test]
fn eyelash_streaks_are_masked() {
    let spec = SynthEyeSpec {
        classes: 1,
        images_per_class: 8,
        occluder_probability: 1.0,
        noise_sigma: 8.0,
        seed: 5,
        ..Default::default()
    };
    let sig = ClassSignature::generate(spec.seed, 0);
    let (mut lash, mut flagged) = (0usize, 0usize);
    for i in 0..spec.images_per_class {
        let p = sample_params(&spec, 0, i);
        let eye = render_eye(&p, &sig);
        let g = IrisGeometry::new(p.pupil, p.iris).unwrap();
        let m = noise_mask(&eye.image, &g);
        for y in 0..eye.image.height() {
            for x in 0..eye.image.width() {
                let in_iris = (x as f64 - p.iris.cx).hypot(y as f64 - p.iris.cy) <= p.iris.r;
                if eye.eyelash_mask.get(x, y) && in_iris {
                    lash += 1;
                    if !m.is_valid(x, y) {
                        flagged += 1;
                    }
                }
            }
        }
    }
    assert!(lash > 100, "fixture should paint some lashes, got {lash}");
    assert!(flagged as f64 >= 0.9 * lash as f64, "{flagged}/{lash}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn samples_stay_within_support(seed in any::<u64>(), dx in -3.0f64..3.0, dy in -3.0f64..3.0) {
        let img = GrayImage::from_fn(80, 70, |x, y| {
            (seed.wrapping_add((x * 2654435761 + y * 40503) as u64).wrapping_mul(0x9E3779B97F4A7C15) >> 56) as u8
        }).unwrap();
        let g = IrisGeometry::new(
            Circle::new(40.0 + dx, 35.0 + dy, 8.0),
            Circle::new(40.0, 35.0, 28.0),
        ).unwrap();
        let n = rubber_sheet(&img, &g, &noise_mask(&img, &g));
        for i in 0..RADIAL_RES {
            for j in 0..ANGULAR_RES {
                let r = (i as f64 + 0.5) / RADIAL_RES as f64;
                let t = std::f64::consts::TAU * (j as f64 + 0.5) / ANGULAR_RES as f64;
                let (x, y) = sheet_point(&g, r, t);
                let (x0, y0) = (x.floor() as usize, y.floor() as usize);
                let support = [img.get(x0, y0), img.get(x0 + 1, y0), img.get(x0, y0 + 1), img.get(x0 + 1, y0 + 1)];
                let lo = *support.iter().min().unwrap() as f64;
                let hi = *support.iter().max().unwrap() as f64;
                let v = n.at(i, j);
                prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
            }
        }
        let invalid = n.valid().iter().filter(|v| !**v).count();
        prop_assert_eq!(n.occlusion_fraction(), invalid as f64 / (RADIAL_RES * ANGULAR_RES) as f64);
    }
}
