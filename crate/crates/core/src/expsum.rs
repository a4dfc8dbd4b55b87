//! Block decomposition `a = r u + v`, the linearised counts `B_u`, the
//! Fejér-weighted exponential sums `B*_u`, and the closed-form bounds.
//!
//! `B_u` and `A_u` are exact in the scalar type of the map; `B*_u` and every
//! trigonometric quantity are `f64`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::Shift;
use crate::counter::{collect_hits, two, upper_limits};
use crate::error::{Error, Result};
use crate::manifold::MongeMap;
use crate::scalar::Scalar;
use crate::sum::CompensatedSum;

/// `(π²/4)^m`, the reciprocal of the Fejér lower bound raised to `m`.
pub fn fejer_constant(m: usize) -> f64 {
    (PI * PI / 4.0).powi(m as i32)
}

/// `(sin πHx / (H sin πx))²`, equal to 1 at integers.
pub fn fejer_kernel(x: f64, h: u64) -> f64 {
    assert!(h >= 1, "H must be >= 1");
    let y = x - x.round();
    if y == 0.0 {
        return 1.0;
    }
    let ratio = (PI * h as f64 * y).sin() / (h as f64 * (PI * y).sin());
    (ratio * ratio).min(1.0)
}

/// `|Σ_{0<=v<r} e(vρ)| = |sin(πrρ) / sin(πρ)|`, equal to `r` at integers.
pub fn geometric_sum_magnitude(rho: f64, r: u64) -> f64 {
    let y = rho - rho.round();
    if y == 0.0 {
        return r as f64;
    }
    ((PI * r as f64 * y).sin() / (PI * y).sin()).abs().min(r as f64)
}

fn log_factor(q: u64, psi_q: f64, power: i32) -> f64 {
    let qp = q as f64 * psi_q;
    if qp > 1.0 {
        qp.ln().powi(power).max(1.0)
    } else {
        1.0
    }
}

/// `ψ^m q^d + (qψ)^{-1/2} q^d max{1, log(qψ)}`.
pub fn bound_thm11(q: u64, psi_q: f64, d: usize, m: usize) -> f64 {
    let qd = (q as f64).powi(d as i32);
    psi_q.powi(m as i32) * qd + (q as f64 * psi_q).powf(-0.5) * qd * log_factor(q, psi_q, 1)
}

/// `ψ q^d + (qψ)^{-d/2} q^d max{1, (log qψ)^d}`.
pub fn bound_thm14(q: u64, psi_q: f64, d: usize) -> f64 {
    let qd = (q as f64).powi(d as i32);
    psi_q * qd + (q as f64 * psi_q).powf(-(d as f64) / 2.0) * qd * log_factor(q, psi_q, d as i32)
}

/// Choice of the Fejér window `H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// `H = ⌊1/(2ψ)⌋`.
    #[default]
    Paper,
    /// `H = ⌊1/(4ψ)⌋`, which keeps every `B_u` distance (below `2ψ`) inside
    /// `‖x‖ <= 1/(2H)`, where the kernel really is at least `4/π²`.
    Half,
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Window::Paper),
            "half" => Ok(Window::Half),
            other => Err(Error::Parse {
                token: other.into(),
                reason: "window must be `paper` or `half`".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Main,
    /// `δ q ψ(q) <= 1`; only the bound `(q+1)^d` is available.
    Trivial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    pub q: u64,
    pub psi_q: f64,
    pub c1: f64,
    pub delta: f64,
    /// Block side; 0 in the trivial regime.
    pub r: u64,
    pub h: u64,
    /// `⌊q/r⌋`; 0 in the trivial regime.
    pub s_blocks: u64,
    pub regime: Regime,
    pub window: Window,
}

// floors of quantities that are integers in exact arithmetic must not drop
// by one through rounding
const FLOOR_NUDGE: f64 = 1e-12;

pub fn block_params(q: u64, psi_q: f64, c1: f64) -> Result<BlockParams> {
    block_params_with(q, psi_q, c1, Window::Paper)
}

pub fn block_params_with(q: u64, psi_q: f64, c1: f64, window: Window) -> Result<BlockParams> {
    if q == 0 {
        return Err(Error::InvalidInput("q must be >= 1".into()));
    }
    if !(c1 > 0.0) || !c1.is_finite() {
        return Err(Error::InvalidInput(format!("C1 = {c1} must be positive and finite")));
    }
    if !(psi_q > 0.0) {
        return Err(Error::PsiOutOfRange {
            psi: psi_q,
            reason: "the block decomposition needs psi(q) > 0",
        });
    }
    if psi_q > 0.5 {
        return Err(Error::PsiOutOfRange {
            psi: psi_q,
            reason: "H = floor(1/(2 psi)) vanishes for psi(q) > 1/2",
        });
    }
    let divisor = match window {
        Window::Paper => 2.0,
        Window::Half => 4.0,
    };
    let h = ((1.0 / (divisor * psi_q)) * (1.0 + FLOOR_NUDGE)).floor() as u64;
    if h == 0 {
        return Err(Error::PsiOutOfRange {
            psi: psi_q,
            reason: "the half window needs psi(q) <= 1/4",
        });
    }
    let delta = 1.0 / c1;
    let product = delta * q as f64 * psi_q;
    let (regime, r, s_blocks) = if product <= 1.0 + FLOOR_NUDGE {
        (Regime::Trivial, 0, 0)
    } else {
        let r = (product * (1.0 + FLOOR_NUDGE)).sqrt().floor() as u64;
        (Regime::Main, r, q / r)
    };
    Ok(BlockParams {
        q,
        psi_q,
        c1,
        delta,
        r,
        h,
        s_blocks,
        regime,
        window,
    })
}

impl BlockParams {
    fn require_main(&self) -> Result<()> {
        match self.regime {
            Regime::Main => Ok(()),
            Regime::Trivial => Err(Error::TrivialRegime {
                product: self.delta * self.q as f64 * self.psi_q,
            }),
        }
    }

    /// Terms in one `B*_u` evaluation: `(2H+1)^m r^d`.
    pub fn work_per_block(&self, d: usize, m: usize) -> u128 {
        (2 * self.h as u128 + 1).saturating_pow(m as u32).saturating_mul((self.r as u128).saturating_pow(d as u32))
    }

    pub fn block_count(&self, d: usize) -> u128 {
        (self.s_blocks as u128 + 1).saturating_pow(d as u32)
    }
}

pub fn decompose(a: &[u64], r: u64) -> (Vec<u64>, Vec<u64>) {
    assert!(r >= 1, "block side must be >= 1");
    (a.iter().map(|x| x / r).collect(), a.iter().map(|x| x % r).collect())
}

pub const DEFAULT_WORK_BUDGET: u128 = 100_000_000;

/// Linearisation data at the block corner `(r u + λ̃)/q`: `base_j = q f_j - γ_j`
/// and `grad[j][i] = ∂f_j/∂α_i`.
#[derive(Debug, Clone)]
pub struct Linearisation<T> {
    pub base: Vec<T>,
    pub grad: Vec<Vec<T>>,
}

pub fn linearise<T: Scalar>(map: &MongeMap<T>, theta: &Shift<T>, q: u64, r: u64, u: &[u64]) -> Linearisation<T> {
    let qt = T::from_u64_exact(q);
    let x: Vec<T> = u
        .iter()
        .zip(&theta.lambda)
        .map(|(&ui, li)| (T::from_u64_exact(r * ui) + li.clone()) / qt.clone())
        .collect();
    let base = (0..map.m())
        .map(|j| qt.clone() * map.value(j, &x) - theta.gamma[j].clone())
        .collect();
    let grad = (0..map.m()).map(|j| (0..map.d()).map(|i| map.first(j, i, &x)).collect()).collect();
    Linearisation { base, grad }
}

fn for_each_v(d: usize, r: u64, mut f: impl FnMut(&[u64])) {
    let total = r.pow(d as u32);
    let mut v = vec![0u64; d];
    for _ in 0..total {
        f(&v);
        for i in (0..d).rev() {
            v[i] += 1;
            if v[i] < r {
                break;
            }
            v[i] = 0;
        }
    }
}

fn in_range(params: &BlockParams, u: &[u64]) -> bool {
    u.iter().all(|&x| x <= params.s_blocks)
}

/// `A(q, ψ, θ, u)`: members of `A(q, ψ, θ)` whose block index is `u`.
pub fn count_a_u<T: Scalar>(
    map: &MongeMap<T>,
    psi_q: &T,
    theta: &Shift<T>,
    params: &BlockParams,
    u: &[u64],
) -> Result<u64> {
    params.require_main()?;
    if !in_range(params, u) || psi_q.is_zero() {
        return Ok(0);
    }
    let hits = collect_hits(map, psi_q, theta, params.q)?;
    Ok(hits.iter().filter(|a| decompose(a, params.r).0 == u).count() as u64)
}

/// `A_u` for every block at once.
pub fn bucket_a<T: Scalar>(
    map: &MongeMap<T>,
    psi_q: &T,
    theta: &Shift<T>,
    params: &BlockParams,
) -> Result<BTreeMap<Vec<u64>, u64>> {
    params.require_main()?;
    let mut out = BTreeMap::new();
    if psi_q.is_zero() {
        return Ok(out);
    }
    for a in collect_hits(map, psi_q, theta, params.q)? {
        *out.entry(decompose(&a, params.r).0).or_insert(0) += 1;
    }
    Ok(out)
}

/// `B(q, ψ, u)`: `v ∈ [0,r)^d` with `‖F_j(u,v) - γ_j‖ < 2ψ(q)` for every `j`.
pub fn count_b_u<T: Scalar>(
    map: &MongeMap<T>,
    psi_q: &T,
    theta: &Shift<T>,
    params: &BlockParams,
    u: &[u64],
) -> Result<u64> {
    params.require_main()?;
    let theta = theta.reduce();
    let lin = linearise(map, &theta, params.q, params.r, u);
    Ok(count_b_lin(&lin, psi_q, map.d(), params.r))
}

fn count_b_lin<T: Scalar>(lin: &Linearisation<T>, psi_q: &T, d: usize, r: u64) -> u64 {
    let bound = two::<T>() * psi_q.clone();
    let mut count = 0;
    for_each_v(d, r, |v| {
        let ok = lin.base.iter().zip(&lin.grad).all(|(b, g)| {
            let mut f = b.clone();
            for (vi, gi) in v.iter().zip(g) {
                if *vi > 0 {
                    f = f + T::from_u64_exact(*vi) * gi.clone();
                }
            }
            f.dist_to_int() < bound
        });
        if ok {
            count += 1;
        }
    });
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BStar {
    /// Real part of the Fejér-weighted double sum.
    pub value: f64,
    pub imag_residue: f64,
    /// `Σ_v ∏_j Fejér_H(F_j - γ_j)`, the same quantity summed in the other order.
    pub fejer_sum: f64,
    /// `H^{-m} Σ_h ∏_i |Σ_v e(v ρ_i)|`, an upper bound for the value.
    pub magnitude_bound: f64,
}

/// Reduced `f64` data for the trigonometric sums.
struct PhaseData {
    base: Vec<f64>,
    grad: Vec<Vec<f64>>,
}

impl PhaseData {
    fn of<T: Scalar>(lin: &Linearisation<T>) -> Self {
        PhaseData {
            base: lin.base.iter().map(|b| b.fract_part().as_f64()).collect(),
            grad: lin.grad.iter().map(|g| g.iter().map(|x| x.as_f64()).collect()).collect(),
        }
    }

    fn f(&self, j: usize, v: &[u64]) -> f64 {
        self.base[j] + v.iter().zip(&self.grad[j]).map(|(&vi, g)| vi as f64 * g).sum::<f64>()
    }
}

fn for_each_h(m: usize, h: u64, mut f: impl FnMut(&[i64])) {
    let h = h as i64;
    let mut hv = vec![-h; m];
    loop {
        f(&hv);
        let mut i = m;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if hv[i] < h {
                hv[i] += 1;
                break;
            }
            hv[i] = -h;
        }
    }
}

pub fn eval_b_star_u<T: Scalar>(
    map: &MongeMap<T>,
    theta: &Shift<T>,
    params: &BlockParams,
    u: &[u64],
    budget: u128,
) -> Result<BStar> {
    params.require_main()?;
    let work = params.work_per_block(map.d(), map.m());
    if work > budget {
        return Err(Error::WorkBudgetExceeded { terms: work, budget });
    }
    let theta = theta.reduce();
    let lin = linearise(map, &theta, params.q, params.r, u);
    Ok(b_star_lin(&PhaseData::of(&lin), map.d(), map.m(), params))
}

fn b_star_lin(p: &PhaseData, d: usize, m: usize, params: &BlockParams) -> BStar {
    let (h, r) = (params.h, params.r);
    let hf = h as f64;
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    let mut magnitude = CompensatedSum::new();
    for_each_h(m, h, |hv| {
        let weight: f64 = hv.iter().map(|&x| (hf - x.unsigned_abs() as f64) / (hf * hf)).product();
        if weight > 0.0 {
            for_each_v(d, r, |v| {
                let mut phase = 0.0;
                for (j, &hj) in hv.iter().enumerate() {
                    if hj != 0 {
                        phase += hj as f64 * p.f(j, v);
                    }
                }
                let phase = phase - phase.round();
                re.add(weight * (2.0 * PI * phase).cos());
                im.add(weight * (2.0 * PI * phase).sin());
            });
        }
        let prod: f64 = (0..d)
            .map(|i| {
                let rho: f64 = hv.iter().enumerate().map(|(j, &hj)| hj as f64 * p.grad[j][i]).sum();
                geometric_sum_magnitude(rho, r)
            })
            .product();
        magnitude.add(prod);
    });
    let mut fejer = CompensatedSum::new();
    for_each_v(d, r, |v| {
        fejer.add((0..m).map(|j| fejer_kernel(p.f(j, v), h)).product());
    });
    BStar {
        value: re.value(),
        imag_residue: im.value().abs(),
        fejer_sum: fejer.value(),
        magnitude_bound: magnitude.value() / hf.powi(m as i32),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub u: Vec<u64>,
    pub a_u: u64,
    pub b_u: u64,
    pub b_star: f64,
    /// `(π²/4)^m B*_u - B_u`; negative when the Fejér step fails.
    pub fejer_slack: f64,
    pub imag_residue: f64,
    pub fejer_sum: f64,
    pub magnitude_bound: f64,
    pub chain_ok: bool,
}

/// Per-link tolerances of the chain checks.
pub const CHAIN_TOL: f64 = 1e-8;
pub const IMAG_TOL: f64 = 1e-9;

impl ChainReport {
    pub fn a_le_b(&self) -> bool {
        self.a_u <= self.b_u
    }

    pub fn b_le_b_star(&self) -> bool {
        self.fejer_slack >= -CHAIN_TOL
    }

    pub fn imag_ok(&self) -> bool {
        self.b_star >= -IMAG_TOL && self.imag_residue <= IMAG_TOL * (1.0 + self.b_star.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub params: BlockParams,
    /// `|A(q, ψ, θ)|`.
    pub a_total: u64,
    pub sum_a_u: u64,
    pub blocks: Vec<ChainReport>,
    pub a_gt_b: usize,
    pub b_gt_b_star: usize,
    pub imag_violations: usize,
    /// Largest relative gap between the two evaluation orders of `B*`.
    pub max_order_gap: f64,
    /// Blocks whose value exceeded the magnitude bound.
    pub magnitude_violations: usize,
}

impl ChainSummary {
    pub fn all_ok(&self) -> bool {
        self.sum_a_u == self.a_total && self.blocks.iter().all(|b| b.chain_ok)
    }
}

/// Second-order Taylor requirement behind `A_u <= B_u`: with `δ = 1/C₁` the
/// remainder `(1/2) Σ v_i v_k |∂²f_j| / q²` stays below `ψ/q` only if
/// `C₁ >= d²/2 · sup|∂²f|`.
pub fn check_taylor_constant<T: Scalar>(map: &MongeMap<T>, params: &BlockParams) -> Result<()> {
    let d = map.d() as f64;
    let required = 0.5 * d * d * map.second_derivative_sup();
    if params.c1 < required {
        return Err(Error::ConstantTooSmall {
            c1: params.c1,
            required,
        });
    }
    let q = params.q as f64;
    let r = params.r as f64;
    // C₁ r² q^{-2} <= C₁ δ ψ q^{-1}, i.e. r² <= δ q ψ
    if params.regime == Regime::Main && r * r > params.delta * q * params.psi_q * (1.0 + 1e-9) {
        return Err(Error::ConstantTooSmall {
            c1: params.c1,
            required: r * r / (q * params.psi_q),
        });
    }
    Ok(())
}

/// Evaluates every link of the chain `A_u <= B_u <= (π²/4)^m B*_u` on all
/// blocks `u ∈ [0, s_blocks]^d`, in lexicographic order of `u`.
pub fn run_chain<T: Scalar>(
    map: &MongeMap<T>,
    psi_q: &T,
    theta: &Shift<T>,
    params: &BlockParams,
    budget: u128,
) -> Result<ChainSummary> {
    params.require_main()?;
    check_taylor_constant(map, params)?;
    let (d, m) = (map.d(), map.m());
    let work = params.work_per_block(d, m);
    if work > budget {
        return Err(Error::WorkBudgetExceeded { terms: work, budget });
    }
    let theta = theta.reduce();
    let buckets = bucket_a(map, psi_q, &theta, params)?;
    let a_total: u64 = buckets.values().sum();
    let s1 = params.s_blocks + 1;
    let nblocks = s1.pow(d as u32);
    let fc = fejer_constant(m);
    let blocks: Vec<(ChainReport, f64, bool)> = (0..nblocks)
        .into_par_iter()
        .map(|idx| {
            let mut u = vec![0u64; d];
            let mut rest = idx;
            for i in (0..d).rev() {
                u[i] = rest % s1;
                rest /= s1;
            }
            let lin = linearise(map, &theta, params.q, params.r, &u);
            let b_u = count_b_lin(&lin, psi_q, d, params.r);
            let bs = b_star_lin(&PhaseData::of(&lin), d, m, params);
            let a_u = buckets.get(&u).copied().unwrap_or(0);
            let gap = (bs.value - bs.fejer_sum).abs() / (1.0 + bs.fejer_sum.abs());
            let mag_ok = bs.value <= bs.magnitude_bound * (1.0 + 1e-9) + 1e-9;
            let mut rep = ChainReport {
                u,
                a_u,
                b_u,
                b_star: bs.value,
                fejer_slack: fc * bs.value - b_u as f64,
                imag_residue: bs.imag_residue,
                fejer_sum: bs.fejer_sum,
                magnitude_bound: bs.magnitude_bound,
                chain_ok: false,
            };
            rep.chain_ok = rep.a_le_b() && rep.b_le_b_star() && rep.imag_ok();
            (rep, gap, mag_ok)
        })
        .collect();
    let max_order_gap = blocks.iter().map(|b| b.1).fold(0.0, f64::max);
    let magnitude_violations = blocks.iter().filter(|b| !b.2).count();
    let blocks: Vec<ChainReport> = blocks.into_iter().map(|b| b.0).collect();
    // hits outside the block range would break the partition; keep them visible
    let sum_a_u = blocks.iter().map(|b| b.a_u).sum();
    Ok(ChainSummary {
        params: params.clone(),
        a_total,
        sum_a_u,
        a_gt_b: blocks.iter().filter(|b| !b.a_le_b()).count(),
        b_gt_b_star: blocks.iter().filter(|b| !b.b_le_b_star()).count(),
        imag_violations: blocks.iter().filter(|b| !b.imag_ok()).count(),
        blocks,
        max_order_gap,
        magnitude_violations,
    })
}

/// Largest `a` per axis, for callers checking that blocks cover `Z(q)`.
pub fn index_limits<T: Scalar>(q: u64, theta: &Shift<T>) -> Vec<u64> {
    upper_limits(q, &theta.reduce().lambda)
}
