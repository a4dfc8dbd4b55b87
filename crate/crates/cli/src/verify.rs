use std::f64::consts::PI;
use std::io::Write;

use manifold_points::counter::{count_with_psi, BoundKind, Method};
use manifold_points::expsum::{
    block_params_with, fejer_kernel, geometric_sum_magnitude, run_chain, Regime, Window,
};
use manifold_points::manifold::{presets, DEFAULT_SAFETY};
use manifold_points::metric::{
    build_cover, classify_convergence, doubly_metric_mc, Convergence, FnMap, GraphMap, SeriesSpec,
};
use manifold_points::scalar::{format_rational, ratio};
use manifold_points::{estimate_constants, ApproxFunction, MongeMap, Polynomial, Rational, Scalar, Shift};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{RunConfig, Suite, DEFAULT_SEED};
use crate::{CliError, Status};

/// A random counting problem over exact rationals.
pub struct Instance {
    pub map: MongeMap<Rational>,
    pub theta: Shift<Rational>,
    pub psi: Rational,
    pub q: u64,
}

impl Instance {
    pub fn describe(&self) -> String {
        let theta: Vec<String> = self
            .theta
            .lambda
            .iter()
            .chain(&self.theta.gamma)
            .map(format_rational)
            .collect();
        format!(
            "{} q={} psi={} theta={}",
            self.map.name(),
            self.q,
            format_rational(&self.psi),
            theta.join(",")
        )
    }
}

fn random_rational(rng: &mut ChaCha8Rng, max_num: i64, max_den: i64) -> Rational {
    ratio(rng.random_range(-max_num..=max_num), rng.random_range(1..=max_den))
}

/// Quadratic polynomial map in `d` variables with `m` coordinates, every
/// coordinate having a non-zero quadratic part.
pub fn random_quadratic(rng: &mut ChaCha8Rng, d: usize, m: usize) -> MongeMap<Rational> {
    let mut monomials: Vec<Vec<u32>> = Vec::new();
    for i in 0..d {
        for k in i..d {
            let mut e = vec![0; d];
            e[i] += 1;
            e[k] += 1;
            monomials.push(e);
        }
    }
    let linear: Vec<Vec<u32>> = (0..d)
        .map(|i| {
            let mut e = vec![0; d];
            e[i] = 1;
            e
        })
        .collect();
    let mut polys = Vec::with_capacity(m);
    let mut text = Vec::with_capacity(m);
    for _ in 0..m {
        let mut terms: Vec<(Vec<u32>, Rational)> = Vec::new();
        for e in &monomials {
            let c = random_rational(rng, 6, 6);
            if !c.is_zero() {
                terms.push((e.clone(), c));
            }
        }
        if terms.is_empty() {
            let e = monomials[rng.random_range(0..monomials.len())].clone();
            terms.push((e, ratio(rng.random_range(1..=6), rng.random_range(1..=6))));
        }
        for e in &linear {
            if rng.random_bool(0.5) {
                terms.push((e.clone(), random_rational(rng, 4, 4)));
            }
        }
        text.push(
            terms
                .iter()
                .map(|(e, c)| format!("{}*x^{:?}", format_rational(c), e))
                .collect::<Vec<_>>()
                .join(" + "),
        );
        polys.push(Polynomial::from_rational_terms(d, &terms));
    }
    MongeMap::from_polynomials(format!("f=({})", text.join("; ")), d, polys).expect("well-formed quadratic map")
}

/// `d ∈ {1,2}`, `ψ ∈ {1/20, ..., 9/20}`, `q <= q_max`, random rational shift.
pub fn random_instance(rng: &mut ChaCha8Rng, q_max: u64) -> Instance {
    let d = rng.random_range(1..=2usize);
    let m = if d == 1 { rng.random_range(1..=2usize) } else { 1 };
    let map = random_quadratic(rng, d, m);
    let mut shift = |_| ratio(rng.random_range(0..12), rng.random_range(1..=12));
    let lambda = (0..d).map(&mut shift).collect();
    let gamma = (0..m).map(&mut shift).collect();
    let theta = Shift::new(lambda, gamma);
    let psi = ratio(rng.random_range(1..=9), 20);
    let q = rng.random_range(2..=q_max);
    Instance { map, theta, psi, q }
}

fn count(inst: &Instance, psi: &Rational, theta: &Shift<Rational>, method: Method) -> Result<u64, CliError> {
    Ok(count_with_psi(&inst.map, psi, theta, inst.q, method, BoundKind::Thm11)?.count)
}

struct Sizes {
    instances: usize,
    q_max: u64,
    samples: usize,
    chain_q: &'static [u64],
    mc_instances: usize,
    mc_samples: u64,
    draws: usize,
    cover_q: u64,
}

const FAST: Sizes = Sizes {
    instances: 25,
    q_max: 120,
    samples: 10_000,
    chain_q: &[64, 128],
    mc_instances: 2,
    mc_samples: 200_000,
    draws: 100,
    cover_q: 40,
};

const FULL: Sizes = Sizes {
    instances: 200,
    q_max: 500,
    samples: 100_000,
    chain_q: &[64, 128, 256, 512],
    mc_instances: 20,
    mc_samples: 1_000_000,
    draws: 1000,
    cover_q: 200,
};

type Check = Result<String, String>;

fn pruned_matches_exact(rng: &mut ChaCha8Rng, z: &Sizes) -> Result<Check, CliError> {
    for _ in 0..z.instances {
        let inst = random_instance(rng, z.q_max);
        let a = count(&inst, &inst.psi, &inst.theta, Method::Exact)?;
        let b = count(&inst, &inst.psi, &inst.theta, Method::Pruned)?;
        if a != b {
            return Ok(Err(format!("{}: exact {a}, pruned {b}", inst.describe())));
        }
    }
    Ok(Ok(format!("{} instances", z.instances)))
}

fn monotone_in_psi(rng: &mut ChaCha8Rng, z: &Sizes) -> Result<Check, CliError> {
    for _ in 0..z.instances {
        let inst = random_instance(rng, z.q_max);
        let wider = inst.psi.clone() + ratio(1, 40);
        let a = count(&inst, &inst.psi, &inst.theta, Method::Pruned)?;
        let b = count(&inst, &wider, &inst.theta, Method::Pruned)?;
        if a > b {
            return Ok(Err(format!("{}: A={a} but A(psi+1/40)={b}", inst.describe())));
        }
    }
    Ok(Ok(format!("{} instances", z.instances)))
}

fn periodic_in_shift(rng: &mut ChaCha8Rng, z: &Sizes) -> Result<Check, CliError> {
    for _ in 0..z.instances {
        let inst = random_instance(rng, z.q_max);
        let mut step = || ratio(rng.random_range(-3..=3), 1);
        let moved = Shift::new(
            inst.theta.lambda.iter().map(|x| x.clone() + step()).collect(),
            inst.theta.gamma.iter().map(|x| x.clone() + step()).collect(),
        );
        let a = count(&inst, &inst.psi, &inst.theta, Method::Pruned)?;
        let b = count(&inst, &inst.psi, &moved, Method::Pruned)?;
        if a != b {
            return Ok(Err(format!("{}: A={a}, A(theta + integers)={b}", inst.describe())));
        }
    }
    Ok(Ok(format!("{} instances", z.instances)))
}

fn fejer_half_window(rng: &mut ChaCha8Rng, z: &Sizes) -> Check {
    let floor = 4.0 / (PI * PI);
    for _ in 0..z.samples {
        let h = rng.random_range(1..=50u64);
        let x = rng.random_range(-1.0..=1.0) / (2.0 * h as f64) + rng.random_range(-2..=2) as f64;
        let k = fejer_kernel(x, h);
        if k < floor - 1e-12 {
            return Err(format!("H={h} x={x}: kernel {k} < 4/pi^2"));
        }
    }
    Ok(format!("{} samples with |x| <= 1/(2H)", z.samples))
}

fn geometric_bound(rng: &mut ChaCha8Rng, z: &Sizes) -> Check {
    for _ in 0..z.samples {
        let rho: f64 = rng.random_range(-4.0..4.0);
        let r = rng.random_range(1..=2000u64);
        let g = geometric_sum_magnitude(rho, r);
        let dist = rho.dist_to_int();
        let cap = if dist > 0.0 { (r as f64).min(1.0 / (2.0 * dist)) } else { r as f64 };
        if g > cap * (1.0 + 1e-9) + 1e-9 {
            return Err(format!("rho={rho} r={r}: |sum| = {g} > {cap}"));
        }
    }
    Ok(format!("{} draws", z.samples))
}

/// The chain under the half window; the paper window is reported alongside.
fn block_chain(z: &Sizes, out: &mut dyn Write) -> Result<Check, CliError> {
    let maps = [presets::parabola::<Rational>(), presets::paraboloid::<Rational>(2)?];
    let mut runs = 0;
    for map in &maps {
        let c1 = estimate_constants(map, 64, DEFAULT_SAFETY)?.taylor_c1;
        let theta = Shift::zero(map.d(), map.m());
        for &q in z.chain_q {
            for psi in [ratio(1, 4), ratio(1, 8)] {
                let mut paper_fail = 0;
                for window in [Window::Half, Window::Paper] {
                    let params = block_params_with(q, psi.as_f64(), c1, window)?;
                    if params.regime == Regime::Trivial {
                        continue;
                    }
                    let s = run_chain(map, &psi, &theta, &params, 100_000_000)?;
                    match window {
                        Window::Half => {
                            runs += 1;
                            if !s.all_ok() {
                                let bad = s.blocks.iter().find(|b| !b.chain_ok);
                                return Ok(Err(format!(
                                    "{} q={q} psi={} C1={c1}: sum A_u={} A={} first bad block {:?}",
                                    map.name(),
                                    format_rational(&psi),
                                    s.sum_a_u,
                                    s.a_total,
                                    bad.map(|b| (&b.u, b.a_u, b.b_u, b.b_star))
                                )));
                            }
                        }
                        Window::Paper => paper_fail = s.b_gt_b_star,
                    }
                }
                if paper_fail > 0 {
                    writeln!(
                        out,
                        "INFO block_chain: {} q={q} psi={}: {paper_fail} blocks with B_u > (pi^2/4)^m B*_u under H = floor(1/(2 psi))",
                        map.name(),
                        format_rational(&psi)
                    )?;
                }
            }
        }
    }
    Ok(Ok(format!("{runs} chains under H = floor(1/(4 psi))")))
}

fn doubly_metric(rng: &mut ChaCha8Rng, z: &Sizes) -> Result<Check, CliError> {
    let parabola = presets::parabola::<f64>();
    let paraboloid = presets::paraboloid::<f64>(2)?;
    let twisted = presets::moment_curve::<f64>(3)?;
    let wave = FnMap {
        d: 1,
        n: 2,
        f: |x: &[f64], y: &mut [f64]| {
            y[0] = x[0];
            y[1] = (5.0 * x[0]).sin();
        },
    };
    for k in 0..z.mc_instances {
        let q = rng.random_range(1..=50u64);
        let psi = rng.random_range(1..=10) as f64 / 20.0;
        let seed = rng.random::<u64>();
        let est = match k % 4 {
            0 => doubly_metric_mc(&GraphMap { map: &parabola }, psi, q, z.mc_samples, seed)?,
            1 => doubly_metric_mc(&GraphMap { map: &paraboloid }, psi, q, z.mc_samples, seed)?,
            2 => doubly_metric_mc(&GraphMap { map: &twisted }, psi, q, z.mc_samples, seed)?,
            _ => doubly_metric_mc(&wave, psi, q, z.mc_samples, seed)?,
        };
        if est.z > 5.0 {
            return Ok(Err(format!(
                "instance {k} q={q} psi={psi} seed={seed}: estimate {} vs {} ({} standard errors)",
                est.estimate, est.target, est.z
            )));
        }
    }
    Ok(Ok(format!("{} instances, {} samples each", z.mc_instances, z.mc_samples)))
}

fn classification(rng: &mut ChaCha8Rng, z: &Sizes) -> Result<Check, CliError> {
    for _ in 0..z.draws {
        let d = rng.random_range(1..=5usize);
        let m = rng.random_range(1..=3usize);
        let tau = ratio(rng.random_range(1..=40), 20);
        let s = ratio(rng.random_range(1..=8 * d as i64), 8);
        let n = (d + m) as i64;
        let spec = SeriesSpec::new(ApproxFunction::power(tau.clone())?, s.clone(), d, m, 100)?;
        let closed = s > ratio(n + 1, 1) / (tau.clone() + ratio(1, 1)) - ratio(m as i64, 1);
        let got = classify_convergence(&spec)? == Convergence::Converges;
        if got != closed {
            return Ok(Err(format!(
                "d={d} m={m} tau={} s={}: classified {got}, closed form {closed}",
                format_rational(&tau),
                format_rational(&s)
            )));
        }
    }
    Ok(Ok(format!("{} draws", z.draws)))
}

fn cover_consistency(z: &Sizes) -> Result<Check, CliError> {
    let map = presets::parabola::<Rational>();
    let c1 = estimate_constants(&map, 256, DEFAULT_SAFETY)?.lipschitz_c1;
    let theta = Shift::zero(1, 1);
    let psi = ratio(1, 8);
    for q in 1..=z.cover_q {
        let c = build_cover(&map, &psi, &theta, q, 1.0, c1)?;
        if !(c.count_ok() && c.diameters_ok() && c.sum_ok()) {
            return Ok(Err(format!(
                "parabola q={q} psi=1/8: {} cells, bound {:?}, cap {}",
                c.cells.len(),
                c.bound_count,
                c.diameter_cap
            )));
        }
    }
    Ok(Ok(format!("parabola, q <= {}", z.cover_q)))
}

pub fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write) -> Result<Status, CliError> {
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let z = match cfg.suite {
        Suite::Fast => &FAST,
        Suite::Full => &FULL,
    };
    writeln!(out, "seed {seed}")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks: Vec<(&str, Check)> = vec![
        ("pruned_matches_exact", pruned_matches_exact(&mut rng, z)?),
        ("monotone_in_psi", monotone_in_psi(&mut rng, z)?),
        ("periodic_in_shift", periodic_in_shift(&mut rng, z)?),
        ("fejer_half_window", fejer_half_window(&mut rng, z)),
        ("geometric_sum_bound", geometric_bound(&mut rng, z)),
        ("block_chain", block_chain(z, out)?),
        ("doubly_metric", doubly_metric(&mut rng, z)?),
        ("classification", classification(&mut rng, z)?),
        ("cover_consistency", cover_consistency(z)?),
    ];
    let mut status = Status::Success;
    for (name, check) in &checks {
        match check {
            Ok(detail) => writeln!(out, "PASS {name}: {detail}")?,
            Err(counterexample) => {
                writeln!(out, "FAIL {name}: {counterexample}")?;
                status = Status::Violation;
            }
        }
    }
    Ok(status)
}
