//! Brute-force oracles written independently of the library, and the values
//! they produced frozen as regressions.

use std::f64::consts::PI;

use manifold_points::counter::{collect_hits, count_n, count_with_psi, BoundKind, Method};
use manifold_points::expsum::{
    block_params, block_params_with, count_b_u, eval_b_star_u, fejer_constant, run_chain, Window,
    DEFAULT_WORK_BUDGET,
};
use manifold_points::manifold::presets;
use manifold_points::metric::{build_cover, doubly_metric_mc, GraphMap};
use manifold_points::scalar::ratio;
use manifold_points::{
    estimate_constants, jacobian_condition_value, nondegeneracy_check, ApproxFunction, MongeMap, Polynomial,
    Rational, Shift,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn powlog() -> ApproxFunction {
    ApproxFunction::power_log(ratio(1, 3), ratio(2, 3)).unwrap()
}

/// `#{0 <= a <= q : ‖a²/q‖ < ψ}` through integer residues.
fn parabola_oracle(q: u64, psi: f64) -> u64 {
    let q = q as u128;
    (0..=q)
        .filter(|&a| {
            let r = (a * a) % q;
            (r.min(q - r) as f64) < psi * q as f64
        })
        .count() as u64
}

fn nearest_dist(x: f64) -> f64 {
    (x - x.round()).abs()
}

#[test]
fn parabola_count_matches_residue_oracle() {
    let map = presets::parabola::<f64>();
    let zero = Shift::zero(1, 1);
    let psi = powlog();
    let p = psi.eval(1000).unwrap();
    assert_eq!(parabola_oracle(1000, p), 715);
    for method in [Method::Exact, Method::Pruned] {
        let r = count_with_psi(&map, &p, &zero, 1000, method, BoundKind::Thm11).unwrap();
        assert_eq!(r.count, 715);
        assert_eq!(r.borderline, 0);
    }
}

#[test]
fn parabola_dyadic_total_matches_oracle() {
    let map = presets::parabola::<f64>();
    let zero = Shift::zero(1, 1);
    let psi = powlog();
    let oracle: u64 = (501..=1000).map(|q| parabola_oracle(q, psi.eval(q).unwrap())).sum();
    assert_eq!(oracle, 292_287);
    let n = count_n(&map, &psi, &zero, 500, Method::Pruned).unwrap();
    assert_eq!(n.total, 292_287);
    assert_eq!(n.per_q.len(), 500);
}

#[test]
fn exact_rational_count_on_shifted_parabola() {
    // λ = 1/3, γ = 1/5: a ranges over 0..q-1 and the condition is
    // ‖(3a+1)²/(9q) - 1/5‖ < ψ, checked with integers scaled by 45q.
    let q = 97u64;
    let theta = Shift::new(vec![ratio(1, 3)], vec![ratio(1, 5)]);
    let psi = ratio(3, 20);
    let map = presets::parabola::<Rational>();
    let got = count_with_psi(&map, &psi, &theta, q, Method::Exact, BoundKind::Thm11).unwrap();
    let modulus = 45 * q as i128;
    let oracle = (0..q as i128)
        .filter(|&a| {
            let num = (5 * (3 * a + 1) * (3 * a + 1) - 9 * q as i128).rem_euclid(modulus);
            // ‖num/modulus‖ < 3/20  <=>  20 min(num, modulus-num) < 3 modulus
            20 * num.min(modulus - num) < 3 * modulus
        })
        .count() as u64;
    assert_eq!(got.count, oracle);
    assert_eq!(oracle, 37);
}

/// Cells of the parabola cover: `α ∈ (c-s, c+s) ∩ [0,1]`, `α² ∈ (t-s, t+s)`.
fn parabola_cells(q: u64, psi: f64) -> Vec<(u64, i64, f64)> {
    let s = psi / q as f64;
    let mut out = Vec::new();
    for a in 0..=q {
        let c = a as f64 / q as f64;
        let (lo, hi) = ((c - s).max(0.0), (c + s).min(1.0));
        let b_lo = ((lo * lo - s) * q as f64).floor() as i64 - 1;
        let b_hi = ((hi * hi + s) * q as f64).ceil() as i64 + 1;
        for b in b_lo..=b_hi {
            let t = b as f64 / q as f64;
            let sq_lo = if t - s <= 0.0 { 0.0 } else { (t - s).sqrt() };
            if t + s <= 0.0 {
                continue;
            }
            let sq_hi = (t + s).sqrt();
            let (l, h) = (lo.max(sq_lo), hi.min(sq_hi));
            if h > l {
                out.push((a, b, h - l));
            }
        }
    }
    out
}

#[test]
fn parabola_cover_matches_closed_form() {
    let map = presets::parabola::<f64>();
    let zero = Shift::zero(1, 1);
    for (q, psi) in [(10u64, 0.2), (37, 0.1), (64, 0.05)] {
        let oracle = parabola_cells(q, psi);
        let cover = build_cover(&map, &psi, &zero, q, 1.0, 2.0).unwrap();
        assert_eq!(cover.cells.len(), oracle.len(), "q={q}");
        let want: f64 = oracle.iter().map(|c| c.2).sum();
        let side = psi / q as f64;
        assert!(
            (cover.sum_s_power - want).abs() <= 4e-6 * side * oracle.len() as f64,
            "q={q}: {} vs {want}",
            cover.sum_s_power
        );
        assert!(cover.diameters_ok());
    }
    let cover = build_cover(&map, &0.2, &zero, 10, 1.0, 2.0).unwrap();
    assert_eq!(cover.cells.len(), 8);
    assert!((cover.sum_s_power - 0.1677093).abs() < 1e-6);
}

/// `(sin πHx / (H sin πx))²` summed directly.
fn fejer_oracle(x: f64, h: u64) -> f64 {
    let hf = h as f64;
    let mut total = 0.0;
    for k in -(h as i64)..=h as i64 {
        total += (hf - k.unsigned_abs() as f64) / (hf * hf) * (2.0 * PI * k as f64 * x).cos();
    }
    total
}

#[test]
fn block_star_matches_direct_kernel_sum() {
    let map = presets::parabola::<f64>();
    let zero = Shift::zero(1, 1);
    let params = block_params(64, 0.25, 2.2).unwrap();
    assert_eq!((params.r, params.h, params.s_blocks), (2, 2, 32));
    for u in [0u64, 3, 5, 17, 32] {
        let bs = eval_b_star_u(&map, &zero, &params, &[u], DEFAULT_WORK_BUDGET).unwrap();
        let corner = (2 * u) as f64 / 64.0;
        let oracle: f64 = (0..params.r)
            .map(|v| {
                let f = 64.0 * corner * corner + 2.0 * corner * v as f64;
                fejer_oracle(f, params.h)
            })
            .sum();
        assert!((bs.value - oracle).abs() <= 1e-10 * (1.0 + oracle.abs()), "u={u}");
        assert!((bs.fejer_sum - oracle).abs() <= 1e-10 * (1.0 + oracle.abs()), "u={u}");
    }
}

#[test]
fn parabola_chain_breaks_at_kernel_zero() {
    let map = presets::parabola::<f64>();
    let zero = Shift::zero(1, 1);
    let psi = 0.25;
    let params = block_params(64, psi, 2.2).unwrap();
    let summary = run_chain(&map, &psi, &zero, &params, DEFAULT_WORK_BUDGET).unwrap();
    assert_eq!(summary.sum_a_u, summary.a_total);
    assert_eq!(summary.a_total, parabola_oracle(64, psi));
    assert_eq!(summary.a_gt_b, 0);
    assert_eq!(summary.imag_violations, 0);
    // corner 6/64: F = 9/16 + (3/16) v, so v = 1 lands on ‖F‖ = 1/4 = 1/H,
    // inside the 2ψ window but on a zero of the kernel
    let u3 = &summary.blocks[3];
    assert_eq!(u3.b_u, 2);
    assert!(fejer_constant(1) * u3.b_star < u3.b_u as f64);
    assert!(summary.b_gt_b_star > 0);

    let half = block_params_with(64, psi, 2.2, Window::Half).unwrap();
    assert_eq!(half.h, 1);
    let summary = run_chain(&map, &psi, &zero, &half, DEFAULT_WORK_BUDGET).unwrap();
    assert!(summary.all_ok());
}

#[test]
fn linearised_count_matches_direct() {
    let map = presets::paraboloid::<f64>(2).unwrap();
    let zero = Shift::zero(2, 1);
    let psi = 0.25;
    let params = block_params(128, psi, 8.8).unwrap();
    let r = params.r;
    for u in [[0u64, 0], [1, 4], [7, 3]] {
        let (x, y) = ((r * u[0]) as f64 / 128.0, (r * u[1]) as f64 / 128.0);
        let mut oracle = 0;
        for v0 in 0..r {
            for v1 in 0..r {
                let f = 128.0 * (x * x + y * y) + 2.0 * x * v0 as f64 + 2.0 * y * v1 as f64;
                if nearest_dist(f) < 2.0 * psi {
                    oracle += 1;
                }
            }
        }
        assert_eq!(count_b_u(&map, &psi, &zero, &params, &u).unwrap(), oracle);
    }
    let hits = collect_hits(&map, &psi, &zero, 128).unwrap();
    let direct = (0..=128u64)
        .flat_map(|a| (0..=128u64).map(move |b| (a, b)))
        .filter(|&(a, b)| ((a * a + b * b) % 128).min(128 - (a * a + b * b) % 128) * 4 < 128)
        .count();
    assert_eq!(hits.len(), direct);
}

#[test]
fn computed_constants_for_presets() {
    let parabola = estimate_constants(&presets::parabola::<f64>(), 64, 1.0).unwrap();
    assert!((parabola.taylor_c1 - 2.0).abs() < 1e-9);
    assert!((parabola.eta_estimate - 2.0).abs() < 1e-9);
    let paraboloid = estimate_constants(&presets::paraboloid::<f64>(2).unwrap(), 16, 1.0).unwrap();
    assert!((paraboloid.taylor_c1 - 8.0).abs() < 1e-9);
}

#[test]
fn counterexample_surface_is_degenerate_but_nondegenerate_of_order_two() {
    let map = presets::veronese_counterexample::<Rational>(1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let alpha: Vec<Rational> = (0..map.d()).map(|_| ratio(rng.random_range(0..=1000), 1000)).collect();
        assert_eq!(jacobian_condition_value(&map, &alpha).unwrap(), ratio(0, 1));
        assert!(nondegeneracy_check(&map, &alpha, 2).unwrap());
    }
}

#[test]
fn doubly_metric_volume_for_line_graph() {
    let map = presets::parabola::<f64>();
    let est = doubly_metric_mc(&GraphMap { map: &map }, 0.1, 3, 1_000_000, 7).unwrap();
    assert!((est.target - 0.04).abs() < 1e-15);
    assert!(est.z < 5.0, "z = {}", est.z);
    let again = doubly_metric_mc(&GraphMap { map: &map }, 0.1, 3, 1_000_000, 7).unwrap();
    assert_eq!(est.hits, again.hits);
}

#[test]
fn pruned_agrees_with_exhaustive_on_random_quadratics() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let q = rng.random_range(20..200u64);
        let (c0, c1) = (rng.random_range(-5..=5i64), rng.random_range(1..=6i64));
        let psi = ratio(rng.random_range(1..10), 20);
        let theta = Shift::new(vec![ratio(rng.random_range(0..7), 7)], vec![ratio(rng.random_range(0..5), 5)]);
        let poly = Polynomial::from_rational_terms(1, &[(vec![1], ratio(c0, 1)), (vec![2], ratio(c1, 3))]);
        let map = MongeMap::from_polynomials("quad", 1, vec![poly]).unwrap();
        let a = count_with_psi(&map, &psi, &theta, q, Method::Exact, BoundKind::Thm11).unwrap();
        let b = count_with_psi(&map, &psi, &theta, q, Method::Pruned, BoundKind::Thm11).unwrap();
        assert_eq!(a.count, b.count);
        assert_eq!(a.borderline, b.borderline);
    }
}
