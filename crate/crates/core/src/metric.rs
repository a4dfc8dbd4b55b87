//! Convergence series, critical exponents, σ-cell covers and the Monte Carlo
//! check of the doubly metric volume identity.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{ApproxFunction, PsiForm, Shift, Support, ThresholdKind};
use crate::counter::{count_with_psi, upper_limits, BoundKind, Method};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::manifold::MongeMap;
use crate::scalar::{rational_to_f64, Rational, Scalar};
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSpec {
    pub psi: ApproxFunction,
    pub s: Rational,
    pub d: usize,
    pub m: usize,
    pub q_max: u64,
}

impl SeriesSpec {
    pub fn new(psi: ApproxFunction, s: Rational, d: usize, m: usize, q_max: u64) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::InvalidInput("need d >= 1 and m >= 1".into()));
        }
        if !s.is_positive() || s > Rational::from_integer((d as i64).into()) {
            return Err(Error::InvalidInput(format!("s = {s} must lie in (0, {d}]")));
        }
        if q_max < 2 {
            return Err(Error::InvalidInput("q_max must be >= 2".into()));
        }
        Ok(SeriesSpec { psi, s, d, m, q_max })
    }

    pub fn n(&self) -> usize {
        self.d + self.m
    }

    /// `(ψ(q)/q)^{s+m} q^n`, zero off the support.
    pub fn term(&self, q: u64) -> Result<f64> {
        if !self.psi.in_support(q) {
            return Ok(0.0);
        }
        let psi = self.psi.eval(q)?;
        let e = rational_to_f64(&self.s) + self.m as f64;
        let lq = (q as f64).ln();
        Ok((e * (psi.ln() - lq) + self.n() as f64 * lq).exp())
    }

    /// `E = n - (s+m)(1+τ)` for power and power-log forms.
    pub fn exponent(&self) -> Option<Rational> {
        let (tau, _) = self.psi.exponents()?;
        let sm = self.s.clone() + rint(self.m as i64);
        Some(rint(self.n() as i64) - sm * (Rational::one() + tau))
    }
}

fn rint(v: i64) -> Rational {
    Rational::from_integer(v.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    pub partial_sum: f64,
    pub q_max: u64,
    pub terms: u64,
    /// Sum over `(Q/2, Q]`.
    pub last_doubling: f64,
    /// Sum over `(Q/4, Q/2]`.
    pub previous_doubling: f64,
    /// `last_doubling / previous_doubling`; about `2^{E+1}` for power forms.
    pub doubling_ratio: f64,
    /// Support members `q >= 2` with `ψ(q)` below `q^{-1/(2m+1)} (log q)^{2/(2m+1)}`.
    pub floor_violations: u64,
    pub first_violations: Vec<u64>,
}

const CHUNK: u64 = 1 << 14;

pub fn series_partial_sum(spec: &SeriesSpec) -> Result<SeriesResult> {
    let qm = spec.q_max;
    let support = spec.psi.support_in(1, qm);
    let floor_kind = ThresholdKind::Codimension { m: spec.m as u32 };
    let parts: Vec<(CompensatedSum, CompensatedSum, CompensatedSum, u64, Vec<u64>)> = support
        .par_chunks(CHUNK as usize)
        .map(|chunk| {
            let (mut all, mut last, mut prev) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
            let mut violations = 0;
            let mut first = Vec::new();
            for &q in chunk {
                let t = spec.term(q)?;
                all.add(t);
                if 2 * q > qm {
                    last.add(t);
                } else if 4 * q > qm {
                    prev.add(t);
                }
                if q >= 2 && spec.psi.eval(q)? < floor_kind.floor_value(q) {
                    violations += 1;
                    if first.len() < 10 {
                        first.push(q);
                    }
                }
            }
            Ok((all, last, prev, violations, first))
        })
        .collect::<Result<_>>()?;
    let mut total = CompensatedSum::new();
    let mut last = CompensatedSum::new();
    let mut prev = CompensatedSum::new();
    let mut floor_violations = 0;
    let mut first_violations = Vec::new();
    for (a, l, p, v, f) in parts {
        total.add(a.value());
        last.add(l.value());
        prev.add(p.value());
        floor_violations += v;
        first_violations.extend(f);
    }
    first_violations.truncate(10);
    let (l, p) = (last.value(), prev.value());
    Ok(SeriesResult {
        partial_sum: total.value(),
        q_max: qm,
        terms: support.len() as u64,
        last_doubling: l,
        previous_doubling: p,
        doubling_ratio: if p > 0.0 { l / p } else { f64::NAN },
        floor_violations,
        first_violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Converges,
    Diverges,
    /// Divergent on the logarithmic boundary: full support with
    /// `E = -1, β(s+m) = -1` (partial sums grow like `log log Q`), or
    /// lacunary support with `E = 0, β(s+m) = -1` (growth like `log log Q`
    /// as well, through the harmonic series in `t`).
    BoundaryLog,
}

/// Analytic classification for power and power-log forms on full or
/// lacunary support.
pub fn classify_convergence(spec: &SeriesSpec) -> Result<Convergence> {
    let (_, beta) = spec
        .psi
        .exponents()
        .ok_or_else(|| Error::Unsupported("convergence is only classified for power and power-log forms".into()))?;
    let e = spec.exponent().expect("power form");
    let b = beta * (spec.s.clone() + rint(spec.m as i64));
    let minus_one = -Rational::one();
    // the terms behave like q^E (log q)^B over the support
    let pivot = match spec.psi.support {
        Support::All => minus_one.clone(),
        // over q = g^t the terms are g^{tE} (t log g)^B
        Support::Lacunary { .. } => Rational::zero(),
        Support::Explicit(_) => {
            return Err(Error::Unsupported("explicit supports have no closed-form classification".into()));
        }
    };
    Ok(match e.cmp(&pivot) {
        Ordering::Less => Convergence::Converges,
        Ordering::Greater => Convergence::Diverges,
        Ordering::Equal => match b.cmp(&minus_one) {
            Ordering::Less => Convergence::Converges,
            Ordering::Equal => Convergence::BoundaryLog,
            Ordering::Greater => Convergence::Diverges,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponents {
    pub d: usize,
    pub m: usize,
    pub n: usize,
    /// `(n+1)/(τ+1) - m`.
    pub dim_bound: Option<String>,
    pub dim_bound_value: Option<f64>,
    /// `d > (n+1)/2` and `1/n <= τ <= 1/(2m+1)`.
    pub dim_bound_applicable: bool,
    /// `dm/(m+1) + (n+1)/(2(m+1))`.
    pub s0_monotonic: String,
    pub s0_monotonic_value: f64,
    /// `d > (n+1)/2`.
    pub monotonic_applicable: bool,
    /// `(n-1)/2 + (n+1)/(2n)`, hypersurfaces only.
    pub s0_hypersurface: Option<String>,
    pub s0_hypersurface_value: Option<f64>,
    /// `m = 1`, `n >= 3` and `s0 < n - 1`.
    pub hypersurface_applicable: bool,
    /// `d - n/(2(m+1))`.
    pub s_lacunary: String,
    pub s_lacunary_value: f64,
}

/// Exact values behind [`CriticalExponents`].
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalValues {
    pub dim_bound: Option<Rational>,
    pub s0_monotonic: Rational,
    pub s0_hypersurface: Option<Rational>,
    pub s_lacunary: Rational,
}

pub fn critical_values(d: usize, m: usize, tau: Option<&Rational>) -> CriticalValues {
    let (d_r, m_r, n_r) = (rint(d as i64), rint(m as i64), rint((d + m) as i64));
    let one = Rational::one();
    let two = rint(2);
    CriticalValues {
        dim_bound: tau.map(|t| (n_r.clone() + one.clone()) / (t.clone() + one.clone()) - m_r.clone()),
        s0_monotonic: d_r.clone() * m_r.clone() / (m_r.clone() + one.clone())
            + (n_r.clone() + one.clone()) / (two.clone() * (m_r.clone() + one.clone())),
        s0_hypersurface: (m == 1).then(|| {
            (n_r.clone() - one.clone()) / two.clone() + (n_r.clone() + one.clone()) / (two.clone() * n_r.clone())
        }),
        s_lacunary: d_r - n_r / (two * (m_r + one)),
    }
}

pub fn critical_exponents(d: usize, m: usize, tau: Option<&Rational>) -> Result<CriticalExponents> {
    if d == 0 || m == 0 {
        return Err(Error::InvalidInput("need d >= 1 and m >= 1".into()));
    }
    let n = d + m;
    let v = critical_values(d, m, tau);
    let monotonic_applicable = 2 * d > n + 1;
    let tau_in_range = tau.is_some_and(|t| *t >= Rational::new(1.into(), (n as i64).into()) && *t <= Rational::new(1.into(), (2 * m as i64 + 1).into()));
    let fmt = |r: &Rational| crate::scalar::format_rational(r);
    Ok(CriticalExponents {
        d,
        m,
        n,
        dim_bound: v.dim_bound.as_ref().map(fmt),
        dim_bound_value: v.dim_bound.as_ref().map(rational_to_f64),
        dim_bound_applicable: monotonic_applicable && tau_in_range,
        s0_monotonic: fmt(&v.s0_monotonic),
        s0_monotonic_value: rational_to_f64(&v.s0_monotonic),
        monotonic_applicable,
        hypersurface_applicable: m == 1 && n >= 3 && v.s0_hypersurface.as_ref().is_some_and(|s| *s < rint(n as i64 - 1)),
        s0_hypersurface: v.s0_hypersurface.as_ref().map(fmt),
        s0_hypersurface_value: v.s0_hypersurface.as_ref().map(rational_to_f64),
        s_lacunary: fmt(&v.s_lacunary),
        s_lacunary_value: rational_to_f64(&v.s_lacunary),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCell {
    pub q: u64,
    pub a: Vec<i64>,
    pub b: Vec<i64>,
    /// Bounding box of the cell in parameter space.
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Euclidean diameter of the bounding box.
    pub diameter: f64,
    pub s_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverSummary {
    pub q: u64,
    pub psi_q: f64,
    pub s: f64,
    pub c1: f64,
    pub c2: f64,
    pub cells: Vec<CoverCell>,
    pub sum_s_power: f64,
    /// `A(q, c₂ψ, θ)` when `c₂ψ(q) < 1`.
    pub bound_count: Option<u64>,
    /// The counting argument bounds the cells by `A(q, c₂ψ, θ)` only when
    /// `c₂ψ(q) < 1/2`.
    pub bound_applies: bool,
    /// `2√d ψ(q)/q`.
    pub diameter_cap: f64,
}

impl CoverSummary {
    pub fn count_ok(&self) -> bool {
        match self.bound_count {
            Some(b) if self.bound_applies => self.cells.len() as u64 <= b,
            _ => true,
        }
    }

    pub fn diameters_ok(&self) -> bool {
        self.cells.iter().all(|c| c.diameter <= self.diameter_cap * (1.0 + 1e-12))
    }

    /// `Σ diam^s <= (2√d)^s A(q, c₂ψ, θ) (ψ/q)^s`.
    pub fn sum_ok(&self) -> bool {
        match self.bound_count {
            Some(b) if self.bound_applies => {
                self.sum_s_power <= self.diameter_cap.powf(self.s) * b as f64 * (1.0 + 1e-12)
            }
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BoxState {
    Empty,
    Possible,
    Certain,
}

struct CellSystem<'a, T> {
    map: &'a MongeMap<T>,
    q: f64,
    psi: f64,
    /// `b_j + γ_j`.
    targets: Vec<f64>,
}

impl<T: Scalar> CellSystem<'_, T> {
    fn state(&self, bx: &[Interval]) -> BoxState {
        let mut certain = true;
        for (j, &t) in self.targets.iter().enumerate() {
            let e = self.map.value_enclosure(j, bx).scale(self.q) - Interval::point(t);
            if e.hi <= -self.psi || e.lo >= self.psi {
                return BoxState::Empty;
            }
            if !(e.lo > -self.psi && e.hi < self.psi) {
                certain = false;
            }
        }
        if certain {
            BoxState::Certain
        } else {
            BoxState::Possible
        }
    }

    /// Smallest (`dir = 1`) or largest (`dir = -1`) value of coordinate `i`
    /// over the cell, resolved to `tol`; `None` for an empty cell.
    fn extreme(&self, root: &[Interval], i: usize, dir: f64, tol: f64) -> Option<f64> {
        struct Item {
            key: f64,
            bx: Vec<Interval>,
        }
        impl PartialEq for Item {
            fn eq(&self, o: &Self) -> bool {
                self.key == o.key
            }
        }
        impl Eq for Item {}
        impl PartialOrd for Item {
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Item {
            // max-heap on -key pops the smallest key first
            fn cmp(&self, o: &Self) -> Ordering {
                o.key.total_cmp(&self.key)
            }
        }
        let key = |bx: &[Interval]| if dir > 0.0 { bx[i].lo } else { -bx[i].hi };
        let mut heap = BinaryHeap::new();
        heap.push(Item {
            key: key(root),
            bx: root.to_vec(),
        });
        let mut budget = 200_000;
        while let Some(Item { bx, .. }) = heap.pop() {
            let st = self.state(&bx);
            let widest = (0..bx.len())
                .max_by(|&a, &b| bx[a].width().total_cmp(&bx[b].width()))
                .expect("d >= 1");
            match st {
                BoxState::Empty => continue,
                BoxState::Certain => return Some(if dir > 0.0 { bx[i].lo } else { bx[i].hi }),
                BoxState::Possible if bx[widest].width() <= tol || budget == 0 => {
                    return Some(if dir > 0.0 { bx[i].lo } else { bx[i].hi });
                }
                BoxState::Possible => {
                    budget -= 1;
                    let mid = bx[widest].mid();
                    for half in [Interval::new(bx[widest].lo, mid), Interval::new(mid, bx[widest].hi)] {
                        let mut child = bx.clone();
                        child[widest] = half;
                        heap.push(Item {
                            key: key(&child),
                            bx: child,
                        });
                    }
                }
            }
        }
        None
    }
}

/// Relative resolution of cell boundaries (fraction of the side `2ψ/q`).
pub const COVER_RESOLUTION: f64 = 1e-6;

/// σ cells `{α ∈ U : |α_i - (a_i+λ_i)/q| < ψ/q, |f_j(α) - (b_j+γ_j)/q| < ψ/q}`
/// for every centre `(a+λ̃)/q ∈ U` and every `b`, with the summary used in
/// the Hausdorff–Cantelli sum.
pub fn build_cover<T: Scalar>(
    map: &MongeMap<T>,
    psi_q: &T,
    theta: &Shift<T>,
    q: u64,
    s: f64,
    c1: f64,
) -> Result<CoverSummary> {
    if q == 0 {
        return Err(Error::InvalidInput("q must be >= 1".into()));
    }
    if !(s > 0.0) {
        return Err(Error::InvalidInput("s must be positive".into()));
    }
    theta.check_dims(map.d(), map.m())?;
    let theta = theta.reduce();
    let (d, m) = (map.d(), map.m());
    let psi = psi_q.as_f64();
    if !(psi >= 0.0) || psi >= 1.0 {
        return Err(Error::PsiOutOfRange {
            psi,
            reason: "cover cells need 0 <= psi(q) < 1",
        });
    }
    let c2 = 1.0 + c1;
    let qf = q as f64;
    let lam: Vec<f64> = theta.lambda.iter().map(|x| x.as_f64()).collect();
    let gam: Vec<f64> = theta.gamma.iter().map(|x| x.as_f64()).collect();
    let upper = upper_limits(q, &theta.lambda);
    let side = psi / qf;
    let tol = (2.0 * side * COVER_RESOLUTION).max(1e-15);
    let total: u64 = upper.iter().map(|&u| u + 1).product();
    let cells: Vec<CoverCell> = if psi == 0.0 {
        Vec::new()
    } else {
        (0..total)
            .into_par_iter()
            .flat_map_iter(|idx| {
                let mut a = vec![0u64; d];
                let mut rest = idx;
                for i in (0..d).rev() {
                    a[i] = rest % (upper[i] + 1);
                    rest /= upper[i] + 1;
                }
                let root: Vec<Interval> = (0..d)
                    .map(|i| {
                        let c = (a[i] as f64 + lam[i]) / qf;
                        Interval::new((c - side).max(0.0), (c + side).min(1.0))
                    })
                    .collect();
                // candidate b_j from an enclosure of q f_j over the α-box
                let ranges: Vec<(i64, i64)> = (0..m)
                    .map(|j| {
                        let e = map.value_enclosure(j, &root).scale(qf);
                        ((e.lo - gam[j] - psi).floor() as i64, (e.hi - gam[j] + psi).ceil() as i64)
                    })
                    .collect();
                let mut out = Vec::new();
                let mut b: Vec<i64> = ranges.iter().map(|r| r.0).collect();
                loop {
                    let sys = CellSystem {
                        map,
                        q: qf,
                        psi,
                        targets: b.iter().zip(&gam).map(|(&bj, g)| bj as f64 + g).collect(),
                    };
                    if sys.state(&root) != BoxState::Empty {
                        let mut lo = Vec::with_capacity(d);
                        let mut hi = Vec::with_capacity(d);
                        for i in 0..d {
                            match (sys.extreme(&root, i, 1.0, tol), sys.extreme(&root, i, -1.0, tol)) {
                                (Some(l), Some(h)) => {
                                    lo.push(l);
                                    hi.push(h);
                                }
                                _ => break,
                            }
                        }
                        if lo.len() == d {
                            let diameter = lo.iter().zip(&hi).map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt();
                            out.push(CoverCell {
                                q,
                                a: a.iter().map(|&x| x as i64).collect(),
                                b: b.clone(),
                                lo,
                                hi,
                                diameter,
                                s_power: diameter.powf(s),
                            });
                        }
                    }
                    let mut j = m;
                    loop {
                        if j == 0 {
                            return out;
                        }
                        j -= 1;
                        if b[j] < ranges[j].1 {
                            b[j] += 1;
                            break;
                        }
                        b[j] = ranges[j].0;
                    }
                }
            })
            .collect()
    };
    let sum_s_power = cells.iter().map(|c| c.s_power).collect::<CompensatedSum>().value();
    let c2_psi = T::from_f64(c2).ok_or_else(|| Error::InvalidInput("c2 not representable".into()))? * psi_q.clone();
    let bound_count = if c2_psi < T::one() {
        Some(count_with_psi(map, &c2_psi, &theta, q, Method::Pruned, BoundKind::default_for(d, m))?.count)
    } else {
        None
    };
    Ok(CoverSummary {
        q,
        psi_q: psi,
        s,
        c1,
        c2,
        cells,
        sum_s_power,
        bound_count,
        bound_applies: c2 * psi < 0.5,
        diameter_cap: 2.0 * (d as f64).sqrt() * side,
    })
}

/// A continuous map `[0,1]^d → R^n`.
pub trait ContinuousMap: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn eval(&self, x: &[f64], out: &mut [f64]);
}

/// `α ↦ (α, f(α))`.
pub struct GraphMap<'a, T> {
    pub map: &'a MongeMap<T>,
}

impl<T: Scalar> ContinuousMap for GraphMap<'_, T> {
    fn input_dim(&self) -> usize {
        self.map.d()
    }

    fn output_dim(&self) -> usize {
        self.map.n()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let d = self.map.d();
        out[..d].copy_from_slice(x);
        for j in 0..self.map.m() {
            out[d + j] = self.map.value_f64(j, x);
        }
    }
}

/// A map given by a closure.
pub struct FnMap<F> {
    pub d: usize,
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> ContinuousMap for FnMap<F> {
    fn input_dim(&self) -> usize {
        self.d
    }

    fn output_dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub samples: u64,
    pub hits: u64,
    pub estimate: f64,
    pub std_error: f64,
    /// `(2ψ)^n`.
    pub target: f64,
    pub z: f64,
    pub seed: u64,
}

pub const MC_BATCH: u64 = 1 << 16;

/// Monte Carlo volume of `{(x, θ) ∈ [0,1]^d × [0,1]^n : ‖q F(x) - θ‖ < ψ}`.
/// Batch `k` draws from a ChaCha8 stream `k` under the given seed, so the
/// result does not depend on the thread count.
pub fn doubly_metric_mc(f: &dyn ContinuousMap, psi_q: f64, q: u64, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples < 1000 {
        return Err(Error::InvalidInput("at least 1000 samples are required".into()));
    }
    if !(0.0..=0.5).contains(&psi_q) {
        return Err(Error::PsiOutOfRange {
            psi: psi_q,
            reason: "the volume identity is checked for 0 <= psi(q) <= 1/2",
        });
    }
    let (d, n) = (f.input_dim(), f.output_dim());
    let qf = q as f64;
    let batches = samples.div_ceil(MC_BATCH);
    let hits: u64 = (0..batches)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let len = MC_BATCH.min(samples - k * MC_BATCH);
            let mut x = vec![0.0; d];
            let mut y = vec![0.0; n];
            let mut hits = 0u64;
            for _ in 0..len {
                for xi in x.iter_mut() {
                    *xi = rng.random::<f64>();
                }
                f.eval(&x, &mut y);
                let mut hit = true;
                for &yi in &y {
                    let theta: f64 = rng.random();
                    if hit && (qf * yi - theta).dist_to_int() >= psi_q {
                        hit = false;
                    }
                }
                hits += hit as u64;
            }
            hits
        })
        .sum();
    let estimate = hits as f64 / samples as f64;
    let std_error = (estimate * (1.0 - estimate) / samples as f64).sqrt();
    let target = (2.0 * psi_q).powi(n as i32);
    let diff = (estimate - target).abs();
    let z = if std_error > 0.0 {
        diff / std_error
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(McEstimate {
        samples,
        hits,
        estimate,
        std_error,
        target,
        z,
        seed,
    })
}

/// `true` when ψ is a closed form the analytic classifier accepts.
pub fn classifiable(psi: &ApproxFunction) -> bool {
    matches!(psi.form, PsiForm::Power { .. } | PsiForm::PowerLog { .. })
        && matches!(psi.support, Support::All | Support::Lacunary { .. })
}
