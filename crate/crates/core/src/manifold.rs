//! Monge-parametrised manifolds `α ↦ (α, f(α))` over the unit cube, their
//! derivative oracles, curvature conditions and grid-estimated constants.

use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::linalg::{determinant, rank};
use crate::poly::Polynomial;
use crate::scalar::{parse_rational, Rational, Scalar};

/// A coordinate function given in closed form by the caller. Derivatives must
/// be supplied explicitly; nothing is differenced numerically.
pub trait AnalyticFn<T>: Send + Sync + Debug {
    fn value(&self, alpha: &[T]) -> T;
    fn gradient(&self, alpha: &[T]) -> Vec<T>;
    fn hessian(&self, alpha: &[T]) -> Vec<Vec<T>>;

    /// Partial derivatives of order three and above, when known.
    fn higher_partial(&self, _alpha: &[T], _kappa: &[u32]) -> Option<T> {
        None
    }

    /// Upper bound for `max_i |∂f/∂α_i|` over the unit cube.
    fn gradient_bound(&self) -> f64;

    /// Upper bound for `max_{i,k} |∂²f/∂α_i∂α_k|` over the unit cube.
    fn hessian_bound(&self) -> f64;
}

#[derive(Debug, Clone)]
pub enum Coordinate<T> {
    Polynomial(Polynomial<T>),
    Analytic(Arc<dyn AnalyticFn<T>>),
}

#[derive(Debug, Clone)]
struct PolyDerivatives<T> {
    grad: Vec<Polynomial<T>>,
    hess: Vec<Vec<Polynomial<T>>>,
}

impl<T: Scalar> PolyDerivatives<T> {
    fn of(p: &Polynomial<T>) -> Self {
        let d = p.nvars();
        let grad: Vec<_> = (0..d).map(|i| p.derivative(i)).collect();
        let hess = grad
            .iter()
            .map(|g| (0..d).map(|k| g.derivative(k)).collect())
            .collect();
        PolyDerivatives { grad, hess }
    }
}

/// `f64` copy of a polynomial coordinate used for enclosures and fast paths.
#[derive(Debug, Clone)]
struct Shadow {
    value: Polynomial<f64>,
    der: PolyDerivatives<f64>,
}

#[derive(Debug, Clone)]
struct CoordData<T> {
    coord: Coordinate<T>,
    der: Option<PolyDerivatives<T>>,
    shadow: Option<Shadow>,
}

/// The map `f = (f_1, …, f_m): [0,1]^d → R^m`. Immutable once built.
#[derive(Debug, Clone)]
pub struct MongeMap<T> {
    name: String,
    d: usize,
    m: usize,
    coords: Arc<Vec<CoordData<T>>>,
}

impl<T: Scalar> MongeMap<T> {
    pub fn new(name: impl Into<String>, d: usize, coords: Vec<Coordinate<T>>) -> Result<Self> {
        if d == 0 || coords.is_empty() {
            return Err(Error::InvalidInput("need d >= 1 and m >= 1".into()));
        }
        let m = coords.len();
        let data = coords
            .into_iter()
            .map(|coord| {
                let (der, shadow) = match &coord {
                    Coordinate::Polynomial(p) => {
                        if p.nvars() != d {
                            return Err(Error::DimensionMismatch {
                                what: "polynomial variables",
                                expected: d,
                                got: p.nvars(),
                            });
                        }
                        let value = p.map_coefficients(|c| c.as_f64());
                        let shadow = Shadow {
                            der: PolyDerivatives::of(&value),
                            value,
                        };
                        (Some(PolyDerivatives::of(p)), Some(shadow))
                    }
                    Coordinate::Analytic(_) => (None, None),
                };
                Ok(CoordData { coord, der, shadow })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MongeMap {
            name: name.into(),
            d,
            m,
            coords: Arc::new(data),
        })
    }

    pub fn from_polynomials(name: impl Into<String>, d: usize, polys: Vec<Polynomial<T>>) -> Result<Self> {
        Self::new(name, d, polys.into_iter().map(Coordinate::Polynomial).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.d + self.m
    }

    pub fn is_polynomial(&self) -> bool {
        self.coords.iter().all(|c| c.shadow.is_some())
    }

    pub fn polynomial(&self, j: usize) -> Option<&Polynomial<T>> {
        match &self.coords[j].coord {
            Coordinate::Polynomial(p) => Some(p),
            Coordinate::Analytic(_) => None,
        }
    }

    pub fn check_domain(&self, alpha: &[T]) -> Result<()> {
        if alpha.len() != self.d {
            return Err(Error::DimensionMismatch {
                what: "point",
                expected: self.d,
                got: alpha.len(),
            });
        }
        if alpha.iter().any(|a| *a < T::zero() || *a > T::one()) {
            return Err(Error::OutsideDomain {
                point: alpha.iter().map(|a| a.as_f64()).collect(),
                dim: self.d,
            });
        }
        Ok(())
    }

    /// `(f_1(α), …, f_m(α))`; exact for polynomial maps over rationals.
    pub fn evaluate(&self, alpha: &[T]) -> Result<Vec<T>> {
        self.check_domain(alpha)?;
        Ok((0..self.m).map(|j| self.value(j, alpha)).collect())
    }

    /// `f_j(α)` without the domain check.
    pub fn value(&self, j: usize, alpha: &[T]) -> T {
        match &self.coords[j].coord {
            Coordinate::Polynomial(p) => p.eval(alpha),
            Coordinate::Analytic(f) => f.value(alpha),
        }
    }

    /// `∂f_j/∂α_i(α)`.
    pub fn first(&self, j: usize, i: usize, alpha: &[T]) -> T {
        let c = &self.coords[j];
        match (&c.der, &c.coord) {
            (Some(der), _) => der.grad[i].eval(alpha),
            (None, Coordinate::Analytic(f)) => f.gradient(alpha).swap_remove(i),
            (None, Coordinate::Polynomial(_)) => unreachable!("polynomials carry derivatives"),
        }
    }

    /// `∂²f_j/∂α_i∂α_k(α)`.
    pub fn second(&self, j: usize, i: usize, k: usize, alpha: &[T]) -> T {
        let c = &self.coords[j];
        match (&c.der, &c.coord) {
            (Some(der), _) => der.hess[i][k].eval(alpha),
            (None, Coordinate::Analytic(f)) => f.hessian(alpha)[i][k].clone(),
            (None, Coordinate::Polynomial(_)) => unreachable!("polynomials carry derivatives"),
        }
    }

    /// Arbitrary mixed partial `∂^κ f_j(α)`.
    pub fn partial(&self, j: usize, alpha: &[T], kappa: &[u32]) -> Result<T> {
        let order: u32 = kappa.iter().sum();
        match &self.coords[j].coord {
            Coordinate::Polynomial(p) => Ok(p.partial(kappa).eval(alpha)),
            Coordinate::Analytic(f) => {
                let idx: Vec<usize> = kappa
                    .iter()
                    .enumerate()
                    .flat_map(|(i, &k)| std::iter::repeat_n(i, k as usize))
                    .collect();
                match order {
                    0 => Ok(f.value(alpha)),
                    1 => Ok(f.gradient(alpha).swap_remove(idx[0])),
                    2 => Ok(f.hessian(alpha)[idx[0]][idx[1]].clone()),
                    _ => f
                        .higher_partial(alpha, kappa)
                        .ok_or(Error::MissingDerivative { coordinate: j, order }),
                }
            }
        }
    }

    pub fn value_f64(&self, j: usize, alpha: &[f64]) -> f64 {
        match &self.coords[j].shadow {
            Some(s) => s.value.eval(alpha),
            None => self.value(j, &lift::<T>(alpha)).as_f64(),
        }
    }

    pub fn first_f64(&self, j: usize, i: usize, alpha: &[f64]) -> f64 {
        match &self.coords[j].shadow {
            Some(s) => s.der.grad[i].eval(alpha),
            None => self.first(j, i, &lift::<T>(alpha)).as_f64(),
        }
    }

    pub fn second_f64(&self, j: usize, i: usize, k: usize, alpha: &[f64]) -> f64 {
        match &self.coords[j].shadow {
            Some(s) => s.der.hess[i][k].eval(alpha),
            None => self.second(j, i, k, &lift::<T>(alpha)).as_f64(),
        }
    }

    /// Enclosure of `f_j` over a box: natural interval extension intersected
    /// with the mean-value form. Analytic coordinates use their declared
    /// gradient bound.
    pub fn value_enclosure(&self, j: usize, bx: &[Interval]) -> Interval {
        let mid: Vec<f64> = bx.iter().map(|b| b.mid()).collect();
        let centre = self.value_f64(j, &mid);
        match &self.coords[j].shadow {
            Some(s) => {
                let natural = s.value.eval_interval(bx);
                let mut mv = Interval::point(centre);
                for (i, b) in bx.iter().enumerate() {
                    let g = s.der.grad[i].eval_interval(bx);
                    let half = Interval::new(b.lo - mid[i], b.hi - mid[i]);
                    mv = mv + g * half;
                }
                natural.intersect(&mv).unwrap_or(natural)
            }
            None => {
                let bound = self.analytic(j).gradient_bound();
                let spread: f64 = bx.iter().map(|b| 0.5 * b.width() * bound).sum();
                Interval::point(centre).inflate(spread * (1.0 + 1e-12))
            }
        }
    }

    /// Enclosure of `∂²f_j/∂α_i∂α_k` over a box.
    pub fn second_enclosure(&self, j: usize, i: usize, k: usize, bx: &[Interval]) -> Interval {
        match &self.coords[j].shadow {
            Some(s) => s.der.hess[i][k].eval_interval(bx),
            None => {
                let b = self.analytic(j).hessian_bound();
                Interval::new(-b, b)
            }
        }
    }

    /// Enclosure of `∂f_j/∂α_i` over a box.
    pub fn first_enclosure(&self, j: usize, i: usize, bx: &[Interval]) -> Interval {
        match &self.coords[j].shadow {
            Some(s) => s.der.grad[i].eval_interval(bx),
            None => {
                let b = self.analytic(j).gradient_bound();
                Interval::new(-b, b)
            }
        }
    }

    fn analytic(&self, j: usize) -> &Arc<dyn AnalyticFn<T>> {
        match &self.coords[j].coord {
            Coordinate::Analytic(f) => f,
            Coordinate::Polynomial(_) => unreachable!("only called for analytic coordinates"),
        }
    }

    /// Rigorous `max_{j,i,k} sup_U |∂²f_j/∂α_i∂α_k|` (interval bound for
    /// polynomial coordinates, the declared bound otherwise).
    pub fn second_derivative_sup(&self) -> f64 {
        let unit = vec![Interval::new(0.0, 1.0); self.d];
        let mut sup: f64 = 0.0;
        for j in 0..self.m {
            for i in 0..self.d {
                for k in 0..self.d {
                    sup = sup.max(self.second_enclosure(j, i, k, &unit).mag());
                }
            }
        }
        sup
    }

    /// Same map over another scalar type. Polynomial maps only.
    pub fn convert<U: Scalar>(&self, to: impl Fn(&T) -> U) -> Result<MongeMap<U>> {
        let polys = (0..self.m)
            .map(|j| {
                self.polynomial(j)
                    .map(|p| p.map_coefficients(&to))
                    .ok_or_else(|| Error::Unsupported("converting a map with analytic coordinates".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        MongeMap::from_polynomials(self.name.clone(), self.d, polys)
    }

    /// Relabels the parameters: the new `α_i` is the old `α_{perm[i]}`.
    /// Useful when the curvature condition holds only after reordering.
    pub fn permute_parameters(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.d];
        if perm.len() != self.d || perm.iter().any(|&p| p >= self.d || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidInput(format!("{perm:?} is not a permutation of 0..{}", self.d)));
        }
        let polys = (0..self.m)
            .map(|j| {
                let p = self
                    .polynomial(j)
                    .ok_or_else(|| Error::Unsupported("relabelling analytic coordinates".into()))?;
                Ok(Polynomial::from_terms(
                    self.d,
                    p.terms().iter().map(|(e, c)| {
                        let mut e2 = vec![0; self.d];
                        for (new, &old) in perm.iter().enumerate() {
                            e2[new] = e[old];
                        }
                        (e2, c.clone())
                    }),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        MongeMap::from_polynomials(format!("{}[relabelled]", self.name), self.d, polys)
    }
}

fn lift<T: Scalar>(alpha: &[f64]) -> Vec<T> {
    alpha
        .iter()
        .map(|&a| T::from_f64(a).expect("finite coordinate"))
        .collect()
}

/// `|det(∂²f_j/∂α_1∂α_i)|`, rows `i = 1..m`, columns `j = 1..m`.
pub fn jacobian_condition_value<T: Scalar>(map: &MongeMap<T>, alpha: &[T]) -> Result<T> {
    if map.m() > map.d() {
        return Err(Error::UnsupportedShape {
            d: map.d(),
            m: map.m(),
            reason: "the mixed-derivative condition needs m <= d".into(),
        });
    }
    map.check_domain(alpha)?;
    let rows: Vec<Vec<T>> = (0..map.m())
        .map(|i| (0..map.m()).map(|j| map.second(j, 0, i, alpha)).collect())
        .collect();
    Ok(determinant(&rows).abs())
}

/// `|det(∂²f/∂α_i∂α_k)|` for a hypersurface (`m = 1`).
pub fn hessian_condition_value<T: Scalar>(map: &MongeMap<T>, alpha: &[T]) -> Result<T> {
    if map.m() != 1 {
        return Err(Error::UnsupportedShape {
            d: map.d(),
            m: map.m(),
            reason: "the Hessian condition is defined for hypersurfaces only".into(),
        });
    }
    map.check_domain(alpha)?;
    let rows: Vec<Vec<T>> = (0..map.d())
        .map(|i| (0..map.d()).map(|k| map.second(0, i, k, alpha)).collect())
        .collect();
    Ok(determinant(&rows).abs())
}

/// All multi-indices `κ ∈ N^d` with `lo <= |κ| <= hi`, in graded lexicographic order.
pub fn multi_indices(d: usize, lo: u32, hi: u32) -> Vec<Vec<u32>> {
    fn rec(d: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == d - 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k);
            rec(d, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for order in lo..=hi {
        rec(d, order, &mut Vec::with_capacity(d), &mut out);
    }
    out
}

/// Whether the partial derivatives of orders `2..=l` at `α` span `R^m`.
/// Exact over the rationals; floats use [`Scalar::rank_tolerance`].
pub fn nondegeneracy_check<T: Scalar>(map: &MongeMap<T>, alpha: &[T], l: u32) -> Result<bool> {
    if l < 2 {
        return Err(Error::InvalidInput(format!("non-degeneracy order l = {l} must be >= 2")));
    }
    map.check_domain(alpha)?;
    let vectors = multi_indices(map.d(), 2, l)
        .iter()
        .map(|kappa| {
            (0..map.m())
                .map(|j| map.partial(j, alpha, kappa))
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rank(&vectors, &T::rank_tolerance()) == map.m())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    /// `m × m` determinant of mixed second derivatives against `α_1`.
    JacobianMm,
    /// `d × d` Hessian determinant of a hypersurface.
    HessianDd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    /// Grid minimum of the condition value divided by the safety factor.
    pub eta_estimate: f64,
    /// Lipschitz constant `c₁ >= 1` of the map in the sup norm.
    pub lipschitz_c1: f64,
    /// `C₁ = safety · d² · max|∂²f_j/∂α_i∂α_k|`, so that `δ = 1/C₁`.
    pub taylor_c1: f64,
    pub grid_resolution: usize,
    pub safety: f64,
    pub condition_kind: Option<ConditionKind>,
}

pub const DEFAULT_SAFETY: f64 = 1.1;

/// Grid estimates on the nested grid `{i / res : 0 <= i <= res}^d`, so that
/// doubling `res` only adds points.
pub fn estimate_constants<T: Scalar>(
    map: &MongeMap<T>,
    grid_resolution: usize,
    safety: f64,
) -> Result<CurvatureReport> {
    let kind = (map.m() <= map.d()).then_some(ConditionKind::JacobianMm);
    estimate_constants_with(map, grid_resolution, safety, kind)
}

pub fn estimate_constants_with<T: Scalar>(
    map: &MongeMap<T>,
    grid_resolution: usize,
    safety: f64,
    kind: Option<ConditionKind>,
) -> Result<CurvatureReport> {
    if grid_resolution < 2 {
        return Err(Error::InvalidInput("grid_resolution must be >= 2".into()));
    }
    if !(safety >= 1.0) {
        return Err(Error::InvalidInput("safety factor must be >= 1".into()));
    }
    if kind == Some(ConditionKind::HessianDd) && map.m() != 1 {
        return Err(Error::UnsupportedShape {
            d: map.d(),
            m: map.m(),
            reason: "the Hessian condition is defined for hypersurfaces only".into(),
        });
    }
    let (d, m) = (map.d(), map.m());
    let res = grid_resolution;
    let total = (res + 1).checked_pow(d as u32).ok_or_else(|| {
        Error::InvalidInput(format!("grid with {} points per axis in {d} dimensions is too large", res + 1))
    })?;
    let mut idx = vec![0usize; d];
    let mut alpha = vec![0.0; d];
    let (mut max_first, mut max_second, mut min_cond) = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..total {
        for i in 0..d {
            alpha[i] = idx[i] as f64 / res as f64;
        }
        let mut hess = vec![vec![vec![0.0; d]; d]; m];
        for j in 0..m {
            for i in 0..d {
                max_first = max_first.max(map.first_f64(j, i, &alpha).abs());
                for k in 0..d {
                    let v = map.second_f64(j, i, k, &alpha);
                    hess[j][i][k] = v;
                    max_second = max_second.max(v.abs());
                }
            }
        }
        let cond = match kind {
            Some(ConditionKind::JacobianMm) => {
                let rows: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| hess[j][0][i]).collect()).collect();
                determinant(&rows).abs()
            }
            Some(ConditionKind::HessianDd) => determinant(&hess[0]).abs(),
            None => 0.0,
        };
        min_cond = min_cond.min(cond);
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] <= res {
                break;
            }
            idx[i] = 0;
        }
    }
    Ok(CurvatureReport {
        eta_estimate: if kind.is_some() { min_cond / safety } else { 0.0 },
        lipschitz_c1: (safety * max_first * d as f64).max(1.0),
        // floored so that δ = 1/C₁ stays finite for affine maps
        taylor_c1: (safety * (d * d) as f64 * max_second).max(1e-12),
        grid_resolution,
        safety,
        condition_kind: kind,
    })
}

pub mod presets {
    //! Built-in polynomial manifolds.

    use super::*;
    use crate::scalar::ratio;

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub struct PresetInfo {
        pub name: &'static str,
        pub syntax: &'static str,
        pub description: &'static str,
    }

    pub const PRESETS: &[PresetInfo] = &[
        PresetInfo {
            name: "parabola",
            syntax: "parabola",
            description: "f(a) = a^2 (d = m = 1); satisfies both curvature conditions",
        },
        PresetInfo {
            name: "paraboloid",
            syntax: "paraboloid(d)",
            description: "f(a) = a_1^2 + ... + a_d^2 (m = 1); Hessian determinant 2^d",
        },
        PresetInfo {
            name: "moment_curve",
            syntax: "moment_curve(n)",
            description: "curve (a, a^2, ..., a^n): f = (a^2, ..., a^n), d = 1, m = n - 1",
        },
        PresetInfo {
            name: "veronese_counterexample",
            syntax: "veronese_counterexample(k)",
            description: "(x, y, z_1..z_k, x^2, xy, y^2): 2-non-degenerate, mixed-derivative determinant identically 0",
        },
    ];

    fn mono(d: usize, pairs: &[(usize, u32)]) -> Vec<u32> {
        let mut e = vec![0; d];
        for &(i, k) in pairs {
            e[i] += k;
        }
        e
    }

    pub fn parabola<T: Scalar>() -> MongeMap<T> {
        paraboloid_named("parabola", 1)
    }

    pub fn paraboloid<T: Scalar>(d: usize) -> Result<MongeMap<T>> {
        if d == 0 {
            return Err(Error::InvalidInput("paraboloid needs d >= 1".into()));
        }
        Ok(paraboloid_named(&format!("paraboloid({d})"), d))
    }

    fn paraboloid_named<T: Scalar>(name: &str, d: usize) -> MongeMap<T> {
        let terms: Vec<_> = (0..d).map(|i| (mono(d, &[(i, 2)]), ratio(1, 1))).collect();
        MongeMap::from_polynomials(name, d, vec![Polynomial::from_rational_terms(d, &terms)])
            .expect("well-formed preset")
    }

    pub fn moment_curve<T: Scalar>(n: usize) -> Result<MongeMap<T>> {
        if n < 2 {
            return Err(Error::InvalidInput("moment_curve needs n >= 2".into()));
        }
        let polys = (2..=n as u32)
            .map(|k| Polynomial::from_rational_terms(1, &[(vec![k], ratio(1, 1))]))
            .collect();
        MongeMap::from_polynomials(format!("moment_curve({n})"), 1, polys)
    }

    pub fn veronese_counterexample<T: Scalar>(k: usize) -> Result<MongeMap<T>> {
        if k == 0 {
            return Err(Error::InvalidInput("veronese_counterexample needs k >= 1".into()));
        }
        let d = k + 2;
        let one = ratio(1, 1);
        let polys = [
            mono(d, &[(0, 2)]),
            mono(d, &[(0, 1), (1, 1)]),
            mono(d, &[(1, 2)]),
        ]
        .into_iter()
        .map(|e| Polynomial::from_rational_terms(d, &[(e, one.clone())]))
        .collect();
        MongeMap::from_polynomials(format!("veronese_counterexample({k})"), d, polys)
    }

    /// `"parabola"`, `"paraboloid(2)"`, `"moment_curve(3)"`, `"veronese_counterexample(1)"`.
    pub fn by_name<T: Scalar>(spec: &str) -> Result<MongeMap<T>> {
        let s = spec.trim();
        let (name, arg) = match s.split_once('(') {
            Some((n, rest)) => {
                let inner = rest.strip_suffix(')').ok_or_else(|| Error::Parse {
                    token: spec.into(),
                    reason: "missing `)`".into(),
                })?;
                let v: usize = inner.trim().parse().map_err(|_| Error::Parse {
                    token: inner.into(),
                    reason: "preset argument must be a positive integer".into(),
                })?;
                (n.trim(), Some(v))
            }
            None => (s, None),
        };
        match (name, arg) {
            ("parabola", None) => Ok(parabola()),
            ("paraboloid", Some(d)) => paraboloid(d),
            ("paraboloid", None) => paraboloid(2),
            ("moment_curve", Some(n)) => moment_curve(n),
            ("veronese_counterexample", Some(k)) => veronese_counterexample(k),
            ("veronese_counterexample", None) => veronese_counterexample(1),
            _ => Err(Error::Parse {
                token: spec.into(),
                reason: "unknown preset (try `presets`)".into(),
            }),
        }
    }
}

/// On-disk manifold definition (TOML).
///
/// ```toml
/// d = 2
/// m = 1
/// [[coordinate]]
/// terms = [{ exponents = [2, 0], coeff = "1" }, { exponents = [0, 2], coeff = "1/3" }]
/// ```
///
/// or simply `preset = "paraboloid(2)"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coordinate: Vec<CoordinateSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinateSpec {
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub exponents: Vec<u32>,
    pub coeff: String,
}

impl ManifoldFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            token: "manifold file".into(),
            reason: e.to_string(),
        })
    }

    pub fn build<T: Scalar>(&self) -> Result<MongeMap<T>> {
        if let Some(p) = &self.preset {
            if !self.coordinate.is_empty() {
                return Err(Error::InvalidInput("give either `preset` or `coordinate` tables, not both".into()));
            }
            return presets::by_name(p);
        }
        let d = self.d.ok_or_else(|| Error::InvalidInput("manifold file needs `d`".into()))?;
        if let Some(m) = self.m {
            if m != self.coordinate.len() {
                return Err(Error::DimensionMismatch {
                    what: "coordinate tables",
                    expected: m,
                    got: self.coordinate.len(),
                });
            }
        }
        let polys = self
            .coordinate
            .iter()
            .map(|c| {
                let terms = c
                    .terms
                    .iter()
                    .map(|t| {
                        if t.exponents.len() != d {
                            return Err(Error::DimensionMismatch {
                                what: "exponent vector",
                                expected: d,
                                got: t.exponents.len(),
                            });
                        }
                        Ok((t.exponents.clone(), parse_rational(&t.coeff)?))
                    })
                    .collect::<Result<Vec<(Vec<u32>, Rational)>>>()?;
                Ok(Polynomial::from_rational_terms(d, &terms))
            })
            .collect::<Result<Vec<_>>>()?;
        MongeMap::from_polynomials(self.name.clone().unwrap_or_else(|| "custom".into()), d, polys)
    }
}
