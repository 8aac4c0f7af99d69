use iriskit::features::cache::{read_cache, write_cache, FeatureRecord};
use iriskit::features::{
    bins, cell_descriptors, feature_vector, is_uniform, lbp_code_3x3, lbp_code_general,
    region_histograms, transition_count, uniform_bin, GridView, LbpConfig, CONFIGURATIONS,
};
use iriskit::normalization::NormalizedIris;
use proptest::prelude::*;

const TABLE: [[f64; 3]; 3] = [[6.0, 3.0, 4.0], [5.0, 4.0, 5.0], [3.0, 1.0, 4.0]];

fn cfg(p: usize, r: usize) -> LbpConfig {
    LbpConfig {
        neighbors: p,
        radius: r,
        ..Default::default()
    }
}

fn flat(patch: &[[f64; 3]; 3]) -> Vec<f64> {
    patch.iter().flatten().copied().collect()
}

/// Bilinear sample written with explicit corner weights.
fn weighted_sample(g: &[f64], w: usize, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let at = |dx: usize, dy: usize| {
        let (xi, yi) = (x0 as usize + dx, y0 as usize + dy);
        if xi < w && yi * w + xi < g.len() {
            g[yi * w + xi]
        } else {
            0.0
        }
    };
    (1.0 - fx) * (1.0 - fy) * at(0, 0)
        + fx * (1.0 - fy) * at(1, 0)
        + (1.0 - fx) * fy * at(0, 1)
        + fx * fy * at(1, 1)
}

#[test]
fn table_patch_general_operator() {
    let data = flat(&TABLE);
    let g = GridView::new(3, 3, &data).unwrap();
    let code = lbp_code_general(&g, 1.0, 1.0, &cfg(8, 1)).unwrap();

    // oracle: 8 samples on the unit circle, counter-clockwise from +x
    let oracle: u32 = (0..8)
        .filter(|&k| {
            let t = std::f64::consts::TAU * k as f64 / 8.0;
            let v = weighted_sample(&data, 3, 1.0 + t.cos(), 1.0 - t.sin());
            v >= 4.0 - 1e-9
        })
        .map(|k| 1 << k)
        .sum();
    assert_eq!(oracle, 27);
    assert_eq!(code, 27);
    // the interpolated diagonals differ from the corner pixels, so the
    // popcount is 4 rather than the 5 of the square 3×3 operator
    assert_eq!(code.count_ones(), 4);
    assert_eq!(lbp_code_3x3(&TABLE).count_ones(), 5);
}

/// Square-neighborhood ordering of the circular operator: bit k of the
/// general code holds the 3×3 neighbor at angle 45°·k.
const CIRCULAR_FROM_SQUARE: [usize; 8] = [3, 2, 1, 0, 7, 6, 5, 4];

fn permute_square(code: u8) -> u32 {
    (0..8)
        .filter(|&k| code & (1 << k) != 0)
        .map(|k| 1u32 << CIRCULAR_FROM_SQUARE[k])
        .sum()
}

#[test]
fn square_sampling_is_a_permutation_of_table_code() {
    // corner-sampled circular code on the table patch
    let square: u32 = [
        (2, 1),
        (2, 0),
        (1, 0),
        (0, 0),
        (0, 1),
        (0, 2),
        (1, 2),
        (2, 2),
    ]
    .iter()
    .enumerate()
    .filter(|(_, &(x, y))| TABLE[y][x] >= 4.0)
    .map(|(k, _)| 1 << k)
    .sum();
    assert_eq!(square, permute_square(157));
    assert_eq!(square.count_ones(), 5);
}

#[test]
fn vertical_step_p16_r2() {
    let (w, h) = (9usize, 9usize);
    let data: Vec<f64> = (0..w * h)
        .map(|i| if i % w >= 4 { 255.0 } else { 0.0 })
        .collect();
    let g = GridView::new(w, h, &data).unwrap();
    let code = lbp_code_general(&g, 4.0, 4.0, &cfg(16, 2)).unwrap();
    // oracle: a sample is set iff it lies on the bright side, including the
    // two samples straight above and below the center
    let oracle = (0..16)
        .filter(|&k| (std::f64::consts::TAU * k as f64 / 16.0).cos() > -1e-12)
        .count();
    assert_eq!(oracle, 9);
    assert_eq!(code.count_ones(), 9);
}

#[test]
fn last_uniform_bin_by_enumeration() {
    let uniform: Vec<u32> = (0u32..256).filter(|&c| is_uniform(c, 8)).collect();
    assert_eq!(uniform.len(), 58);
    assert_eq!(uniform.iter().position(|&c| c == 255), Some(57));
    for (bin, &code) in uniform.iter().enumerate() {
        assert_eq!(uniform_bin(code, 8), bin);
    }
    for code in (0u32..256).filter(|&c| !is_uniform(c, 8)) {
        assert_eq!(uniform_bin(code, 8), 58);
    }
}

fn norm(texture: Vec<f64>, valid: Vec<bool>) -> NormalizedIris {
    NormalizedIris::new(40, 240, texture, valid).unwrap()
}

#[test]
fn constant_texture_is_one_hot() {
    for (p, r) in CONFIGURATIONS {
        let c = cfg(p, r);
        let n = norm(vec![120.0; 9600], vec![true; 9600]);
        let hist = region_histograms(&n, &c).unwrap();
        assert_eq!(hist.len(), 100);
        let top = uniform_bin((1 << p) - 1, p);
        for h in &hist {
            assert_eq!(h.len(), bins(p, true));
            for (b, &v) in h.iter().enumerate() {
                assert_eq!(v, if b == top { 1.0 } else { 0.0 });
            }
        }
    }
}

#[test]
fn occluded_texture_is_all_zero() {
    let n = norm(vec![120.0; 9600], vec![false; 9600]);
    let hist = region_histograms(&n, &LbpConfig::default()).unwrap();
    assert!(hist.iter().all(|h| h.iter().all(|&v| v == 0.0)));
    assert!(feature_vector(&n, &LbpConfig::default()).is_err());
}

fn noise_texture(seed: u64) -> Vec<f64> {
    (0..9600u64)
        .map(|i| ((seed ^ i).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 56) as f64)
        .collect()
}

#[test]
fn half_occluded_cell_normalizes_over_valid_sites() {
    let tex = noise_texture(7);
    // cell (2, 3): rows 8..12, columns 72..96; invalidate its right half
    let mut valid = vec![true; 9600];
    for y in 8..12 {
        for x in 84..96 {
            valid[y * 240 + x] = false;
        }
    }
    let n = norm(tex.clone(), valid.clone());
    let cells = cell_descriptors(&n, &LbpConfig::default()).unwrap();
    let cell = &cells[2 * 10 + 3];

    // recount: a site needs itself and its full 3×3 neighborhood valid
    let ok = |x: usize, y: usize| valid[y * 240 + x % 240];
    let mut counts = vec![0usize; 59];
    let mut sites = 0;
    for y in 8..12 {
        for x in 72..96 {
            let all = (y - 1..=y + 1).all(|yy| (x + 239..=x + 241).all(|xx| ok(xx, yy)));
            if all {
                let data: Vec<f64> = (y - 1..=y + 1)
                    .flat_map(|yy| (x - 1..=x + 1).map(move |xx| (yy, xx)))
                    .map(|(yy, xx)| tex[yy * 240 + xx])
                    .collect();
                let g = GridView::new(3, 3, &data).unwrap();
                let code = lbp_code_general(&g, 1.0, 1.0, &LbpConfig::default()).unwrap();
                counts[uniform_bin(code, 8)] += 1;
                sites += 1;
            }
        }
    }
    assert_eq!(cell.sites, sites);
    assert!(sites * 4 >= 96 && sites < 96);
    let sum: f64 = cell.histogram.iter().sum();
    assert!((sum - 1.0).abs() < 1e-9);
    for (b, &v) in cell.histogram.iter().enumerate() {
        assert_eq!(v, counts[b] as f64 / sites as f64);
    }
}

#[test]
fn feature_vector_layout() {
    let c = 97.0;
    let n = norm(vec![c; 9600], vec![true; 9600]);
    let fv = feature_vector(&n, &LbpConfig::default()).unwrap();
    assert_eq!(fv.dimension(), 5907);
    let stats = &fv.values[5900..];
    let s = c / 255.0;
    let expected = [0.0, s, s, s, 0.0, 0.0, s];
    for (a, e) in stats.iter().zip(expected) {
        assert!((a - e).abs() < 1e-12, "{stats:?}");
    }

    let with_contrast = LbpConfig {
        contrast: true,
        ..Default::default()
    };
    let fc = feature_vector(&norm(noise_texture(3), vec![true; 9600]), &with_contrast).unwrap();
    assert_eq!(fc.dimension(), 6007);
    assert_eq!(fc.config_tag, with_contrast.tag());
}

#[test]
fn cache_round_trip_of_real_vectors() {
    let recs: Vec<FeatureRecord> = (0..3)
        .map(|i| {
            let mut v = feature_vector(
                &norm(noise_texture(i), vec![true; 9600]),
                &LbpConfig::default(),
            )
            .unwrap();
            v.label = Some(i as usize);
            FeatureRecord {
                id: format!("img{i}.pgm"),
                split: None,
                vector: v,
            }
        })
        .collect();
    let text = write_cache(&recs);
    assert_eq!(read_cache(&text, Some(5907)).unwrap(), recs);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn code_3x3_is_grayscale_invariant(
        px in proptest::collection::vec(0u8..=255, 9), shift in -500i32..500, scale in 1u32..50
    ) {
        let mut a = [[0.0; 3]; 3];
        let mut b = [[0.0; 3]; 3];
        for (i, &v) in px.iter().enumerate() {
            a[i / 3][i % 3] = v as f64;
            b[i / 3][i % 3] = v as f64 * scale as f64 + shift as f64;
        }
        prop_assert_eq!(lbp_code_3x3(&a), lbp_code_3x3(&b));
    }

    #[test]
    fn complement_has_same_transitions(code in 0u32..(1 << 24), p in prop::sample::select(vec![8usize, 16, 24])) {
        let code = code & ((1 << p) - 1);
        let comp = !code & ((1 << p) - 1);
        prop_assert_eq!(transition_count(code, p), transition_count(comp, p));
    }

    #[test]
    fn constant_grid_sets_every_bit(v in -1e6f64..1e6, which in 0usize..3) {
        let (p, r) = CONFIGURATIONS[which];
        let data = vec![v; 49];
        let g = GridView::new(7, 7, &data).unwrap();
        prop_assert_eq!(lbp_code_general(&g, 3.0, 3.0, &cfg(p, r)).unwrap(), (1u32 << p) - 1);
    }

    /// With corners far beyond the edge neighbors, each interpolated diagonal
    /// falls on the same side of the center as its corner pixel.
    #[test]
    fn circular_code_permutes_square_code(bits in 0u8..=255) {
        let mut patch = [[100.0; 3]; 3];
        let ring = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)];
        for (k, &(x, y)) in ring.iter().enumerate() {
            let on = bits & (1 << k) != 0;
            let corner = x != 1 && y != 1;
            patch[y][x] = match (corner, on) {
                (true, true) => 1100.0,
                (true, false) => -900.0,
                (false, true) => 200.0,
                (false, false) => 0.0,
            };
        }
        let square = lbp_code_3x3(&patch);
        prop_assert_eq!(square, bits);
        let data = flat(&patch);
        let g = GridView::new(3, 3, &data).unwrap();
        let circular = lbp_code_general(&g, 1.0, 1.0, &cfg(8, 1)).unwrap();
        prop_assert_eq!(circular, permute_square(square));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn blocks_sum_to_one_or_zero(seed in any::<u64>(), holes in proptest::collection::vec((0usize..40, 0usize..240, 1usize..30), 0..12)) {
        let mut valid = vec![true; 9600];
        for (r, c, len) in holes {
            for x in c..(c + len * 3).min(240) {
                for y in r..(r + len / 2 + 1).min(40) {
                    valid[y * 240 + x] = false;
                }
            }
        }
        let n = norm(noise_texture(seed), valid);
        let fv = feature_vector(&n, &LbpConfig::default()).unwrap();
        for block in fv.values[..5900].chunks(59) {
            let s: f64 = block.iter().sum();
            prop_assert!(s == 0.0 || (s - 1.0).abs() < 1e-9, "block sum {}", s);
        }
        let again = feature_vector(&n, &LbpConfig::default()).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&fv.values), bits(&again.values));
    }

    #[test]
    fn column_shift_permutes_cells(seed in any::<u64>(), k in 0usize..10) {
        let tex = noise_texture(seed);
        let shift = 24 * k;
        let shifted: Vec<f64> = (0..9600)
            .map(|i| {
                let (y, x) = (i / 240, i % 240);
                tex[y * 240 + (x + 240 - shift) % 240]
            })
            .collect();
        let a = region_histograms(&norm(tex, vec![true; 9600]), &LbpConfig::default()).unwrap();
        let b = region_histograms(&norm(shifted, vec![true; 9600]), &LbpConfig::default()).unwrap();
        for gy in 0..10 {
            for gx in 0..10 {
                prop_assert_eq!(&b[gy * 10 + (gx + k) % 10], &a[gy * 10 + gx]);
            }
        }
    }
}
