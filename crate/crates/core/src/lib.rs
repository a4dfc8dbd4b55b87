//! Counting rational points near manifolds.
//!
//! For a Monge map `f: [0,1]^d -> R^m` the crate counts integer points
//! `a` with `‖q f((a + λ)/q) - γ‖ < ψ(q)`, compares those counts with the
//! heuristic `ψ^m q^d` and with explicit upper bounds, runs the
//! exponential-sum block decomposition behind those bounds, and evaluates
//! the series and covers used in Hausdorff-dimension estimates.
//!
//! Every numeric routine is generic over [`Scalar`], implemented for `f32`,
//! `f64` and the exact [`Rational`].

pub mod approx;
pub mod counter;
pub mod error;
pub mod expsum;
pub mod interval;
pub mod linalg;
pub mod manifold;
pub mod metric;
pub mod poly;
pub mod scalar;
pub mod sum;

pub use approx::{threshold_check, ApproxFunction, PsiForm, Shift, Support, ThresholdKind};
pub use counter::{count_a, count_a_exact, count_a_pruned, count_n, CountReport, Method};
pub use error::{Error, Result};
pub use expsum::{block_params, run_chain, BlockParams, ChainReport, ChainSummary, Window};
pub use interval::Interval;
pub use manifold::{
    estimate_constants, hessian_condition_value, jacobian_condition_value, nondegeneracy_check,
    AnalyticFn, ConditionKind, Coordinate, CurvatureReport, ManifoldFile, MongeMap,
};
pub use poly::Polynomial;
pub use scalar::{Rational, Scalar};

pub type MongeMapF64 = MongeMap<f64>;
pub type MongeMapF32 = MongeMap<f32>;
pub type ExactMongeMap = MongeMap<Rational>;
pub type ShiftF64 = Shift<f64>;
pub type ExactShift = Shift<Rational>;
