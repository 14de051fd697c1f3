mod common;

use common::{label_correcting, max_abs_diff, random_masked_grid, rect};
use hughes_core::eikonal::upwind_gradient;
use hughes_core::{build_grid, direction_field, solve_eikonal, NodeStatus, SlownessField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point_source(dx: f64) -> hughes_core::Grid64 {
    let e = 0.25 * dx;
    build_grid(rect(0.0, 1.0, 0.0, 1.0), &[], rect(0.5 - e, 0.5 + e, 0.5 - e, 0.5 + e), dx).unwrap()
}

#[test]
fn point_source_matches_fixpoint() {
    let g = point_source(1.0 / 32.0);
    let s = vec![1.0; g.len()];
    let u = solve_eikonal(&g, &SlownessField::uniform(&g, 1.0)).unwrap();
    assert!(max_abs_diff(u.as_slice(), &label_correcting(&g, &s)) < 1e-12);
}

#[test]
fn point_source_error_scales_like_h_log_h() {
    // e/h grows by roughly ln 2 / ln(1/h) relative per halving, not faster
    let ratios: Vec<f64> = [16.0, 32.0, 64.0, 128.0]
        .iter()
        .map(|n| {
            let g = point_source(1.0 / n);
            let u = solve_eikonal(&g, &SlownessField::uniform(&g, 1.0)).unwrap();
            let err = (0..g.len())
                .map(|i| {
                    let x = g.node(i);
                    (u[i] - (x.x - 0.5).hypot(x.y - 0.5)).abs()
                })
                .fold(0.0, f64::max);
            err * n
        })
        .collect();
    for w in ratios.windows(2) {
        let growth = w[1] - w[0];
        assert!(growth > 0.0 && growth < 0.35, "{ratios:?}");
    }
}

#[test]
fn radial_gradient_matches_slowness() {
    let g = point_source(1.0 / 128.0);
    let u = solve_eikonal(&g, &SlownessField::uniform(&g, 1.0)).unwrap();
    let mut worst = 0.0f64;
    for i in 0..g.len() {
        let x = g.node(i);
        let r = (x.x - 0.5).hypot(x.y - 0.5);
        if r < 0.1 || g.status(i) != NodeStatus::Free {
            continue;
        }
        let [gx, gy] = upwind_gradient(&g, &u, i);
        worst = worst.max((gx.hypot(gy) - 1.0).abs());
    }
    assert!(worst < 0.5, "{worst}");
}

#[test]
fn planar_gradient_is_exact() {
    let g = build_grid(rect(0.0, 1.0, 0.0, 1.0), &[], rect(-0.001, 0.001, 0.0, 1.0), 1.0 / 64.0).unwrap();
    let u = solve_eikonal(&g, &SlownessField::uniform(&g, 2.0)).unwrap();
    for i in 0..g.len() {
        if g.status(i) == NodeStatus::Free {
            let [gx, gy] = upwind_gradient(&g, &u, i);
            assert!((gx - 2.0).abs() < 1e-9 && gy == 0.0);
        }
    }
}

#[test]
fn directions_are_unit_or_zero_on_masked_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let g = random_masked_grid(&mut rng);
        let u = solve_eikonal(&g, &SlownessField::uniform(&g, 1.0)).unwrap();
        let d = direction_field(&g, &u, 1e-9);
        for i in 0..g.len() {
            let n = d[i][0].hypot(d[i][1]);
            assert!(n == 0.0 || (n - 1.0).abs() < 1e-9);
            if g.status(i) != NodeStatus::Free {
                assert_eq!(n, 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fmm_equals_fixpoint(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_masked_grid(&mut rng);
        let s: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(1.0..=3.0)).collect();
        let u = solve_eikonal(&g, &SlownessField::from_fn(&g, |i| s[i])).unwrap();
        prop_assert!(max_abs_diff(u.as_slice(), &label_correcting(&g, &s)) <= 1e-9);
        let order = u.acceptance_order();
        prop_assert!(order.windows(2).all(|w| u[w[0]] <= u[w[1]]));
    }

    #[test]
    fn slower_media_give_larger_potentials(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = build_grid(
            rect(0.0, 1.0, 0.0, 1.0),
            &[rect(0.3, 0.4, 0.2, 0.9)],
            rect(0.9, 1.0, 0.0, 0.2),
            1.0 / 15.0,
        )
        .unwrap();
        prop_assert_eq!(g.nx(), 16);
        let s1: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(1.0..=3.0)).collect();
        let s2: Vec<f64> = s1.iter().map(|&s| s + rng.gen_range(0.0..=1.0)).collect();
        let u1 = solve_eikonal(&g, &SlownessField::from_fn(&g, |i| s1[i])).unwrap();
        let u2 = solve_eikonal(&g, &SlownessField::from_fn(&g, |i| s2[i])).unwrap();
        for i in 0..g.len() {
            prop_assert!(u2[i] >= u1[i]);
        }
    }

    #[test]
    fn gradient_magnitude_tracks_slowness(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_masked_grid(&mut rng);
        let s: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(1.0..=3.0)).collect();
        let u = solve_eikonal(&g, &SlownessField::from_fn(&g, |i| s[i])).unwrap();
        for i in 0..g.len() {
            if g.status(i) != NodeStatus::Free || !u[i].is_finite() {
                continue;
            }
            let (p, q) = g.coords(i);
            if p == 0 || q == 0 || p + 1 == g.nx() || q + 1 == g.ny() {
                continue;
            }
            let [gx, gy] = upwind_gradient(&g, &u, i);
            prop_assert!((gx.hypot(gy) - s[i]).abs() <= 2.0 * s[i]);
        }
    }
}
