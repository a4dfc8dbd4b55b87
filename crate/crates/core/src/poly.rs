//! Sparse multivariate polynomials with symbolic differentiation.

use std::collections::BTreeMap;

use crate::interval::Interval;
use crate::scalar::{Rational, Scalar};

/// A polynomial in `nvars` variables stored as a sorted list of
/// `(exponents, coefficient)` terms with no zero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T> {
    nvars: usize,
    terms: Vec<(Vec<u32>, T)>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: Vec::new(),
        }
    }

    /// Collects like terms and drops zero coefficients. Every exponent vector
    /// must have length `nvars`.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, T)>) -> Self {
        let mut acc: BTreeMap<Vec<u32>, T> = BTreeMap::new();
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length");
            let slot = acc.entry(e).or_insert_with(T::zero);
            *slot = slot.clone() + c;
        }
        Polynomial {
            nvars,
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn from_rational_terms(nvars: usize, terms: &[(Vec<u32>, Rational)]) -> Self {
        Self::from_terms(
            nvars,
            terms.iter().map(|(e, c)| (e.clone(), T::from_rational(c))),
        )
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(Vec<u32>, T)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(e, _)| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    fn max_exponent(&self, var: usize) -> u32 {
        self.terms.iter().map(|(e, _)| e[var]).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.nvars);
        if self.terms.is_empty() {
            return T::zero();
        }
        // powers[i][k] = x_i^k
        let powers: Vec<Vec<T>> = (0..self.nvars)
            .map(|i| {
                let top = self.max_exponent(i) as usize;
                let mut p = Vec::with_capacity(top + 1);
                p.push(T::one());
                for k in 1..=top {
                    let next = p[k - 1].clone() * x[i].clone();
                    p.push(next);
                }
                p
            })
            .collect();
        let mut acc = T::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t * powers[i][k as usize].clone();
                }
            }
            acc = acc + t;
        }
        acc
    }

    /// Partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Self {
        let terms = self.terms.iter().filter(|(e, _)| e[var] > 0).map(|(e, c)| {
            let mut e2 = e.clone();
            e2[var] -= 1;
            (e2, c.clone() * T::from_u64_exact(e[var] as u64))
        });
        Self::from_terms(self.nvars, terms)
    }

    /// Mixed partial derivative `∂^{|κ|} / ∂x^κ`.
    pub fn partial(&self, kappa: &[u32]) -> Self {
        let mut p = self.clone();
        for (var, &k) in kappa.iter().enumerate() {
            for _ in 0..k {
                p = p.derivative(var);
            }
        }
        p
    }

    pub fn map_coefficients<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Polynomial<U> {
        Polynomial::from_terms(self.nvars, self.terms.iter().map(|(e, c)| (e.clone(), f(c))))
    }

    /// Natural interval extension over a box.
    pub fn eval_interval(&self, x: &[Interval]) -> Interval {
        let mut acc = Interval::point(0.0);
        for (e, c) in &self.terms {
            let mut t = Interval::point(c.as_f64());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t * x[i].powi(k);
                }
            }
            acc = acc + t;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    fn paraboloid() -> Polynomial<Rational> {
        Polynomial::from_terms(
            2,
            vec![(vec![2, 0], ratio(1, 1)), (vec![0, 2], ratio(1, 1))],
        )
    }

    #[test]
    fn evaluates_exactly() {
        let p = paraboloid();
        assert_eq!(p.eval(&[ratio(1, 2), ratio(1, 3)]), ratio(13, 36));
    }

    #[test]
    fn differentiates() {
        let p = paraboloid();
        let dx = p.derivative(0);
        assert_eq!(dx.eval(&[ratio(3, 7), ratio(5, 1)]), ratio(6, 7));
        let dxx = p.partial(&[2, 0]);
        assert_eq!(dxx.terms(), &[(vec![0, 0], ratio(2, 1))]);
        assert!(p.partial(&[1, 1]).is_zero());
        assert!(p.partial(&[3, 0]).is_zero());
    }

    #[test]
    fn collects_like_terms() {
        let p: Polynomial<f64> =
            Polynomial::from_terms(1, vec![(vec![1], 2.0), (vec![1], -2.0), (vec![0], 1.0)]);
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.degree(), 0);
    }

    #[test]
    fn interval_extension_encloses_values() {
        let p = paraboloid().map_coefficients(|c| c.as_f64());
        let b = [Interval::new(0.1, 0.4), Interval::new(0.5, 0.9)];
        let e = p.eval_interval(&b);
        for x in [0.1, 0.25, 0.4] {
            for y in [0.5, 0.7, 0.9] {
                assert!(e.contains(p.eval(&[x, y])));
            }
        }
    }
}
