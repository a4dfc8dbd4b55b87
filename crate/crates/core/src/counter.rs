//! Counting `A(q, ψ, θ)` and `N(Q, ψ, θ)`.
//!
//! Two enumeration strategies share one per-point predicate, so they agree by
//! construction as long as the pruning enclosures are sound:
//!
//! * exhaustive enumeration of `Z(q)`;
//! * a pruned scan that walks rows along the last parameter and, on short
//!   segments, replaces `q f_j` by its tangent line plus a Taylor remainder to
//!   generate the only indices that can come within `ψ(q)` of an integer.
//!
//! For exact scalars and polynomial maps the predicate runs in `i128`
//! integer arithmetic whenever the denominators fit.

use std::time::{Duration, Instant};

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{ApproxFunction, Shift};
use crate::error::{Error, Result};
use crate::expsum::{bound_thm11, bound_thm14};
use crate::interval::Interval;
use crate::manifold::MongeMap;
use crate::scalar::{Rational, Scalar};

/// Iterator over `Z(q) = ∏ [0, q_i] ∩ Z` with `q_i = q` when `λ̃_i = 0` and
/// `q - 1` otherwise, in lexicographic order (last index fastest).
#[derive(Debug, Clone)]
pub struct IndexSet {
    upper: Vec<u64>,
    next: Option<Vec<u64>>,
}

pub fn index_set_z<T: Scalar>(q: u64, lambda_tilde: &[T]) -> IndexSet {
    IndexSet::new(upper_limits(q, lambda_tilde))
}

pub(crate) fn upper_limits<T: Scalar>(q: u64, lambda_tilde: &[T]) -> Vec<u64> {
    lambda_tilde
        .iter()
        .map(|l| if l.is_zero() { q } else { q.saturating_sub(1) })
        .collect()
}

impl IndexSet {
    pub fn new(upper: Vec<u64>) -> Self {
        let next = Some(vec![0; upper.len()]);
        IndexSet { upper, next }
    }

    pub fn upper(&self) -> &[u64] {
        &self.upper
    }

    pub fn cardinality(&self) -> u128 {
        self.upper.iter().map(|&u| u as u128 + 1).product()
    }
}

impl Iterator for IndexSet {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        for i in (0..succ.len()).rev() {
            if succ[i] < self.upper[i] {
                succ[i] += 1;
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(cur)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Pruned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// General codimension bound under the Jacobian condition.
    Thm11,
    /// Genuinely curved hypersurfaces.
    Thm14,
}

impl BoundKind {
    /// Hypersurface bound for `m = 1, d >= 2`, the general one otherwise.
    pub fn default_for(d: usize, m: usize) -> Self {
        if m == 1 && d >= 2 {
            BoundKind::Thm14
        } else {
            BoundKind::Thm11
        }
    }

    pub fn eval(self, q: u64, psi_q: f64, d: usize, m: usize) -> f64 {
        match self {
            BoundKind::Thm11 => bound_thm11(q, psi_q, d, m),
            BoundKind::Thm14 => bound_thm14(q, psi_q, d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CountFlags {
    /// `ψ(q) = 0`; the count is zero by definition.
    pub support_miss: bool,
    /// `ψ(q) > 1/2`, where the reduced form is used although the set of
    /// rational points is no longer described uniquely by it.
    pub psi_above_half: bool,
    /// Comparisons were exact (no tolerance band).
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub q: u64,
    pub psi_q: f64,
    pub count: u64,
    /// `ψ(q)^m q^d`.
    pub heuristic: f64,
    /// `(q+1)^d`.
    pub trivial: u128,
    pub bound_kind: BoundKind,
    /// Right-hand side of the selected bound with implied constant 1.
    pub bound_thm: f64,
    /// Indices whose distance equals `ψ(q)` (exact mode) or lies within the
    /// borderline tolerance of it (float mode). Never part of `count`.
    pub borderline: u64,
    /// Indices whose distance was evaluated.
    pub visited: u64,
    pub elapsed: Duration,
    pub flags: CountFlags,
}

impl CountReport {
    pub fn ratio_to_heuristic(&self) -> f64 {
        if self.heuristic > 0.0 {
            self.count as f64 / self.heuristic
        } else {
            f64::NAN
        }
    }
}

pub fn heuristic_estimate(psi_q: f64, q: u64, d: usize, m: usize) -> f64 {
    psi_q.powi(m as i32) * (q as f64).powi(d as i32)
}

pub fn trivial_bound(q: u64, d: usize) -> u128 {
    (q as u128 + 1).saturating_pow(d as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Verdict {
    Hit,
    Borderline,
    Miss,
}

/// Exact integer form of `q f_j((a + λ̃)/q) - γ_j = N_j(y) / den_j` with
/// `y_i = L a_i + l_i`, `λ̃_i = l_i / L`.
#[derive(Debug, Clone)]
struct IntCoord {
    terms: Vec<(Vec<u32>, i128)>,
    offset: i128,
    den: i128,
}

#[derive(Debug, Clone)]
struct IntKernel {
    coords: Vec<IntCoord>,
    lam_num: Vec<i128>,
    lam_den: i128,
    psi_num: i128,
    psi_den: i128,
}

fn to_i128(x: &num_bigint::BigInt) -> Option<i128> {
    x.to_i128()
}

fn lcm(a: i128, b: i128) -> Option<i128> {
    let g = num_integer::gcd(a, b);
    (a / g).checked_mul(b)
}

impl IntKernel {
    /// `None` when the map is not polynomial or some intermediate value may
    /// leave the `i128` range.
    fn build<T: Scalar>(map: &MongeMap<T>, theta: &Shift<T>, psi_q: &T, q: u64) -> Option<Self> {
        let psi = psi_q.to_rational()?;
        let lams: Vec<Rational> = theta.lambda.iter().map(|l| l.to_rational()).collect::<Option<_>>()?;
        let mut lam_den: i128 = 1;
        for l in &lams {
            lam_den = lcm(lam_den, to_i128(l.denom())?)?;
        }
        let lam_num: Vec<i128> = lams
            .iter()
            .map(|l| {
                let scaled = l * Rational::from_integer(lam_den.into());
                to_i128(scaled.numer())
            })
            .collect::<Option<_>>()?;
        let qi = q as i128;
        let lq = lam_den.checked_mul(qi)?;
        let mut coords = Vec::with_capacity(map.m());
        let psi_num = to_i128(psi.numer())?;
        let psi_den = to_i128(psi.denom())?;
        for j in 0..map.m() {
            let poly = map.polynomial(j)?;
            let gamma = theta.gamma[j].to_rational()?;
            let g_den = to_i128(gamma.denom())?;
            let g_num = to_i128(gamma.numer())?;
            let deg = poly.degree();
            let mut c_den: i128 = 1;
            let mut coefs = Vec::with_capacity(poly.terms().len());
            for (e, c) in poly.terms() {
                let c = c.to_rational()?;
                c_den = lcm(c_den, to_i128(c.denom())?)?;
                coefs.push((e.clone(), c));
            }
            let lq_pow = lq.checked_pow(deg)?;
            // N = Σ n_e (Lq)^{D-|e|} q G ∏ y^e - g C (Lq)^D
            let mut terms = Vec::with_capacity(coefs.len());
            let mut magnitude: i128 = 0;
            for (e, c) in coefs {
                let scaled = c * Rational::from_integer(c_den.into());
                let n_e = to_i128(scaled.numer())?;
                let total: u32 = e.iter().sum();
                let coef = n_e
                    .checked_mul(lq.checked_pow(deg - total)?)?
                    .checked_mul(qi)?
                    .checked_mul(g_den)?;
                // |∏ y^e| <= (Lq)^{|e|}
                magnitude = magnitude.checked_add(coef.checked_abs()?.checked_mul(lq.checked_pow(total)?)?)?;
                terms.push((e, coef));
            }
            let offset = g_num.checked_mul(c_den)?.checked_mul(lq_pow)?;
            magnitude = magnitude.checked_add(offset.checked_abs()?)?;
            let den = c_den.checked_mul(g_den)?.checked_mul(lq_pow)?;
            // distance comparisons multiply by the psi numerator/denominator
            den.checked_mul(psi_num.max(psi_den))?;
            magnitude.checked_mul(2)?;
            coords.push(IntCoord { terms, offset, den });
        }
        Some(IntKernel {
            coords,
            lam_num,
            lam_den,
            psi_num,
            psi_den,
        })
    }

    fn classify(&self, a: &[u64], y: &mut Vec<i128>) -> Verdict {
        y.clear();
        y.extend(a.iter().zip(&self.lam_num).map(|(&ai, &li)| self.lam_den * ai as i128 + li));
        let mut border = false;
        for c in &self.coords {
            let mut num = -c.offset;
            for (e, coef) in &c.terms {
                let mut t = *coef;
                for (yi, &k) in y.iter().zip(e) {
                    for _ in 0..k {
                        t *= yi;
                    }
                }
                num += t;
            }
            let r = num.rem_euclid(c.den);
            let dist = r.min(c.den - r);
            match (dist * self.psi_den).cmp(&(self.psi_num * c.den)) {
                std::cmp::Ordering::Less => {}
                std::cmp::Ordering::Equal => border = true,
                std::cmp::Ordering::Greater => return Verdict::Miss,
            }
        }
        if border {
            Verdict::Borderline
        } else {
            Verdict::Hit
        }
    }
}

/// Direct evaluation in the scalar type.
#[derive(Debug, Clone)]
struct ScalarTest<'a, T> {
    map: &'a MongeMap<T>,
    q: T,
    lambda: Vec<T>,
    gamma: Vec<T>,
    psi: T,
    tol: T,
}

impl<T: Scalar> ScalarTest<'_, T> {
    fn classify(&self, a: &[u64]) -> Verdict {
        let x: Vec<T> = a
            .iter()
            .zip(&self.lambda)
            .map(|(&ai, li)| (T::from_u64_exact(ai) + li.clone()) / self.q.clone())
            .collect();
        let cutoff = self.psi.clone() + self.tol.clone();
        let mut worst = T::zero();
        for (j, g) in self.gamma.iter().enumerate() {
            let v = self.q.clone() * self.map.value(j, &x) - g.clone();
            let dist = v.dist_to_int();
            if dist > cutoff {
                return Verdict::Miss;
            }
            if dist > worst {
                worst = dist;
            }
        }
        if worst < self.psi.clone() - self.tol.clone() {
            Verdict::Hit
        } else if (worst - self.psi.clone()).abs() <= self.tol {
            Verdict::Borderline
        } else {
            Verdict::Miss
        }
    }
}

enum Tester<'a, T> {
    Int(IntKernel),
    Scalar(ScalarTest<'a, T>),
}

impl<'a, T: Scalar> Tester<'a, T> {
    fn new(map: &'a MongeMap<T>, theta: &Shift<T>, psi_q: &T, q: u64) -> Self {
        if T::EXACT {
            if let Some(k) = IntKernel::build(map, theta, psi_q, q) {
                return Tester::Int(k);
            }
        }
        Tester::Scalar(ScalarTest {
            map,
            q: T::from_u64_exact(q),
            lambda: theta.lambda.clone(),
            gamma: theta.gamma.clone(),
            psi: psi_q.clone(),
            tol: T::borderline_tolerance(),
        })
    }

    fn classify(&self, a: &[u64], scratch: &mut Vec<i128>) -> Verdict {
        match self {
            Tester::Int(k) => k.classify(a, scratch),
            Tester::Scalar(s) => s.classify(a),
        }
    }
}

#[derive(Debug, Default, Clone)]
struct Tally {
    count: u64,
    borderline: u64,
    visited: u64,
    hits: Vec<Vec<u64>>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.count += other.count;
        self.borderline += other.borderline;
        self.visited += other.visited;
        self.hits.extend(other.hits);
        self
    }
}

/// Length of the last-axis chunks handed to worker threads.
const CHUNK: u64 = 2048;
/// Target Taylor remainder on a linearised segment.
const SEGMENT_EPS: f64 = 0.05;

struct Grid<'a, T> {
    map: &'a MongeMap<T>,
    tester: Tester<'a, T>,
    upper: Vec<u64>,
    q: u64,
    lambda_f: Vec<f64>,
    gamma_f: Vec<f64>,
    psi_f: f64,
    collect: bool,
}

impl<T: Scalar> Grid<'_, T> {
    fn rows(&self) -> u64 {
        self.upper[..self.upper.len() - 1].iter().map(|&u| u + 1).product()
    }

    fn chunks_per_row(&self) -> u64 {
        (self.upper[self.upper.len() - 1] + 1).div_ceil(CHUNK)
    }

    fn prefix(&self, mut row: u64) -> Vec<u64> {
        let d = self.upper.len();
        let mut a = vec![0u64; d];
        for i in (0..d - 1).rev() {
            let base = self.upper[i] + 1;
            a[i] = row % base;
            row /= base;
        }
        a
    }

    fn run(&self, pruned: bool) -> Tally {
        let chunks = self.chunks_per_row();
        let units = self.rows() * chunks;
        let per_unit = |unit: u64| {
            let mut a = self.prefix(unit / chunks);
            let t0 = (unit % chunks) * CHUNK;
            let t1 = (t0 + CHUNK - 1).min(self.upper[self.upper.len() - 1]);
            if pruned {
                self.scan_pruned(&mut a, t0, t1)
            } else {
                self.scan_all(&mut a, t0, t1)
            }
        };
        // ordered collection keeps the hit list in lexicographic order
        let parts: Vec<Tally> = (0..units).into_par_iter().map(per_unit).collect();
        parts.into_iter().fold(Tally::default(), Tally::merge)
    }

    fn visit(&self, a: &[u64], tally: &mut Tally, scratch: &mut Vec<i128>) {
        tally.visited += 1;
        match self.tester.classify(a, scratch) {
            Verdict::Hit => {
                tally.count += 1;
                if self.collect {
                    tally.hits.push(a.to_vec());
                }
            }
            Verdict::Borderline => tally.borderline += 1,
            Verdict::Miss => {}
        }
    }

    fn scan_all(&self, a: &mut [u64], t0: u64, t1: u64) -> Tally {
        let last = a.len() - 1;
        let mut tally = Tally::default();
        let mut scratch = Vec::new();
        for t in t0..=t1 {
            a[last] = t;
            self.visit(a, &mut tally, &mut scratch);
        }
        tally
    }

    fn scan_pruned(&self, a: &mut [u64], t0: u64, t1: u64) -> Tally {
        let d = a.len();
        let last = d - 1;
        let qf = self.q as f64;
        let mut tally = Tally::default();
        let mut scratch = Vec::new();
        let mut x: Vec<f64> = (0..d).map(|i| (a[i] as f64 + self.lambda_f[i]) / qf).collect();
        let mut bx: Vec<Interval> = x.iter().map(|&v| Interval::point(v)).collect();
        bx[last] = Interval::new(
            (t0 as f64 + self.lambda_f[last]) / qf,
            (t1 as f64 + self.lambda_f[last]) / qf,
        );
        let curv: Vec<f64> = (0..self.gamma_f.len())
            .map(|j| self.map.second_enclosure(j, last, last, &bx).mag())
            .collect();
        let max_curv = curv.iter().copied().fold(0.0, f64::max);
        let seg_len: u64 = if max_curv > 0.0 {
            let h = (2.0 * qf * SEGMENT_EPS / max_curv).sqrt();
            ((2.0 * h).floor() as u64 + 1).min(CHUNK)
        } else {
            CHUNK
        };
        let tol = T::borderline_tolerance().as_f64();
        let mut ta = t0;
        while ta <= t1 {
            let tb = (ta + seg_len - 1).min(t1);
            let tm = 0.5 * (ta as f64 + tb as f64);
            let h = 0.5 * (tb - ta) as f64;
            x[last] = (tm + self.lambda_f[last]) / qf;
            // choose the coordinate with the fewest candidates
            let mut best: Option<(u64, f64, f64, f64)> = None;
            for (j, &g) in self.gamma_f.iter().enumerate() {
                let g0 = qf * self.map.value_f64(j, &x) - g;
                let g1 = self.map.first_f64(j, last, &x);
                let eps = curv[j] * h * h / (2.0 * qf);
                let w = self.psi_f + eps + tol + 1e-9 + 1e-12 * g0.abs();
                let n = tb - ta + 1;
                let est = if w >= 0.5 {
                    n
                } else {
                    let ks = (2.0 * g1.abs() * h + 2.0 * w).ceil() as u64 + 1;
                    let per_k = if g1.abs() > 0.0 { (2.0 * w / g1.abs()).ceil() as u64 + 1 } else { n };
                    ks.saturating_mul(per_k).min(n)
                };
                if best.is_none_or(|b| est < b.0) {
                    best = Some((est, g0, g1, w));
                }
            }
            let (_, g0, g1, w) = best.expect("m >= 1");
            if w >= 0.5 {
                for t in ta..=tb {
                    a[last] = t;
                    self.visit(a, &mut tally, &mut scratch);
                }
            } else {
                self.linear_candidates(a, ta, tb, tm, h, g0, g1, w, &mut tally, &mut scratch);
            }
            ta = tb + 1;
        }
        tally
    }

    /// Visits every `t ∈ [ta, tb]` with `|g0 + g1 (t - tm) - k| < w` for some
    /// integer `k`, each once, in increasing order.
    #[allow(clippy::too_many_arguments)]
    fn linear_candidates(
        &self,
        a: &mut [u64],
        ta: u64,
        tb: u64,
        tm: f64,
        h: f64,
        g0: f64,
        g1: f64,
        w: f64,
        tally: &mut Tally,
        scratch: &mut Vec<i128>,
    ) {
        let last = a.len() - 1;
        let lo_val = g0 - g1.abs() * h;
        let hi_val = g0 + g1.abs() * h;
        let k_lo = (lo_val - w).ceil() as i64;
        let k_hi = (hi_val + w).floor() as i64;
        if g1.abs() < 1e-300 {
            if (k_lo..=k_hi).any(|k| (g0 - k as f64).abs() < w) {
                for t in ta..=tb {
                    a[last] = t;
                    self.visit(a, tally, scratch);
                }
            }
            return;
        }
        let slack = 1e-9;
        let mut next_t = ta;
        let ks: Box<dyn Iterator<Item = i64>> = if g1 > 0.0 {
            Box::new(k_lo..=k_hi)
        } else {
            Box::new((k_lo..=k_hi).rev())
        };
        for k in ks {
            let s1 = (k as f64 - w - g0) / g1;
            let s2 = (k as f64 + w - g0) / g1;
            let (s_lo, s_hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
            let lo = (tm + s_lo - slack).ceil().max(next_t as f64);
            let hi = (tm + s_hi + slack).floor().min(tb as f64);
            if lo > hi {
                continue;
            }
            for t in lo as u64..=hi as u64 {
                a[last] = t;
                self.visit(a, tally, scratch);
            }
            next_t = hi as u64 + 1;
            if next_t > tb {
                break;
            }
        }
    }
}

/// Per-q inputs after validation.
struct Prepared<T> {
    theta: Shift<T>,
    psi: T,
    psi_f: f64,
    flags: CountFlags,
}

fn prepare<T: Scalar>(map: &MongeMap<T>, psi_q: &T, theta: &Shift<T>, q: u64) -> Result<Prepared<T>> {
    if q == 0 {
        return Err(Error::InvalidInput("q must be >= 1".into()));
    }
    theta.check_dims(map.d(), map.m())?;
    let psi_f = psi_q.as_f64();
    if *psi_q < T::zero() {
        return Err(Error::PsiOutOfRange {
            psi: psi_f,
            reason: "psi(q) must be non-negative",
        });
    }
    if *psi_q >= T::one() {
        return Err(Error::PsiOutOfRange {
            psi: psi_f,
            reason: "psi(q) >= 1 makes every nearest-integer distance admissible",
        });
    }
    let half = T::one() / T::from_u64_exact(2);
    Ok(Prepared {
        theta: theta.reduce(),
        psi: psi_q.clone(),
        psi_f,
        flags: CountFlags {
            support_miss: psi_q.is_zero(),
            psi_above_half: *psi_q > half,
            exact: T::EXACT,
        },
    })
}

fn run_grid<T: Scalar>(map: &MongeMap<T>, p: &Prepared<T>, q: u64, method: Method, collect: bool) -> Tally {
    if p.flags.support_miss {
        return Tally::default();
    }
    let grid = Grid {
        map,
        tester: Tester::new(map, &p.theta, &p.psi, q),
        upper: upper_limits(q, &p.theta.lambda),
        q,
        lambda_f: p.theta.lambda.iter().map(|x| x.as_f64()).collect(),
        gamma_f: p.theta.gamma.iter().map(|x| x.as_f64()).collect(),
        psi_f: p.psi_f,
        collect,
    };
    grid.run(method == Method::Pruned)
}

/// `A(q, ψ, θ)` for a given value `ψ(q)`.
pub fn count_with_psi<T: Scalar>(
    map: &MongeMap<T>,
    psi_q: &T,
    theta: &Shift<T>,
    q: u64,
    method: Method,
    bound: BoundKind,
) -> Result<CountReport> {
    let start = Instant::now();
    let p = prepare(map, psi_q, theta, q)?;
    let tally = run_grid(map, &p, q, method, false);
    let (d, m) = (map.d(), map.m());
    Ok(CountReport {
        q,
        psi_q: p.psi_f,
        count: tally.count,
        heuristic: heuristic_estimate(p.psi_f, q, d, m),
        trivial: trivial_bound(q, d),
        bound_kind: bound,
        bound_thm: if p.psi_f > 0.0 { bound.eval(q, p.psi_f, d, m) } else { 0.0 },
        borderline: tally.borderline,
        visited: tally.visited,
        elapsed: start.elapsed(),
        flags: p.flags,
    })
}

pub fn count_a<T: Scalar>(
    map: &MongeMap<T>,
    psi: &ApproxFunction,
    theta: &Shift<T>,
    q: u64,
    method: Method,
) -> Result<CountReport> {
    let psi_q: T = psi.eval_as(q)?;
    count_with_psi(map, &psi_q, theta, q, method, BoundKind::default_for(map.d(), map.m()))
}

/// Exhaustive enumeration of `Z(q)`.
pub fn count_a_exact<T: Scalar>(map: &MongeMap<T>, psi: &ApproxFunction, theta: &Shift<T>, q: u64) -> Result<CountReport> {
    count_a(map, psi, theta, q, Method::Exact)
}

pub fn count_a_pruned<T: Scalar>(map: &MongeMap<T>, psi: &ApproxFunction, theta: &Shift<T>, q: u64) -> Result<CountReport> {
    count_a(map, psi, theta, q, Method::Pruned)
}

/// Members of `A(q, ψ, θ)` in lexicographic order.
pub fn collect_hits<T: Scalar>(map: &MongeMap<T>, psi_q: &T, theta: &Shift<T>, q: u64) -> Result<Vec<Vec<u64>>> {
    let p = prepare(map, psi_q, theta, q)?;
    Ok(run_grid(map, &p, q, Method::Pruned, true).hits)
}

/// Reports for every support member in `[q_min, q_max]`, increasing in `q`.
pub fn scan<T: Scalar>(
    map: &MongeMap<T>,
    psi: &ApproxFunction,
    theta: &Shift<T>,
    q_min: u64,
    q_max: u64,
    method: Method,
    bound: BoundKind,
) -> Result<Vec<CountReport>> {
    psi.support_in(q_min, q_max)
        .into_par_iter()
        .map(|q| {
            let psi_q: T = psi.eval_as(q)?;
            count_with_psi(map, &psi_q, theta, q, method, bound)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NReport {
    pub big_q: u64,
    pub total: u64,
    pub per_q: Vec<CountReport>,
    /// `ψ(Q)^m Q^{d+1}`.
    pub heuristic: f64,
}

/// `N(Q, ψ, θ) = Σ_{Q < q <= 2Q} A(q, ψ, θ)`.
pub fn count_n<T: Scalar>(
    map: &MongeMap<T>,
    psi: &ApproxFunction,
    theta: &Shift<T>,
    big_q: u64,
    method: Method,
) -> Result<NReport> {
    if big_q == 0 {
        return Err(Error::InvalidInput("Q must be >= 1".into()));
    }
    let bound = BoundKind::default_for(map.d(), map.m());
    let per_q = scan(map, psi, theta, big_q + 1, 2 * big_q, method, bound)?;
    let psi_big_q = if psi.in_support(big_q) { psi.eval(big_q)? } else { 0.0 };
    Ok(NReport {
        big_q,
        total: per_q.iter().map(|r| r.count).sum(),
        heuristic: heuristic_estimate(psi_big_q, big_q, map.d() + 1, map.m()),
        per_q,
    })
}

/// `2` as a scalar, used by callers building `2ψ` thresholds.
pub(crate) fn two<T: Scalar>() -> T {
    T::one() + T::one()
}
