//! Approximating functions `ψ` with restricted integer support, threshold
//! conditions, and the inhomogeneous shift `θ = (λ, γ)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, rational_to_f64, Rational, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub enum PsiForm {
    /// `q^{-τ}`
    Power { tau: Rational },
    /// `q^{-τ} (ln q)^β`, undefined at `q = 1`.
    PowerLog { tau: Rational, beta: Rational },
    /// Explicit rational values; absent keys read as zero.
    Table(BTreeMap<u64, Rational>),
    Constant(Rational),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    All,
    /// `{base^t : t >= 1}`.
    Lacunary { base: u64 },
    Explicit(BTreeSet<u64>),
}

impl Support {
    pub fn contains(&self, q: u64) -> bool {
        match self {
            Support::All => q >= 1,
            Support::Lacunary { base } => {
                if q < *base {
                    return false;
                }
                let mut x = q;
                while x % base == 0 {
                    x /= base;
                }
                x == 1
            }
            Support::Explicit(set) => set.contains(&q),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxFunction {
    pub form: PsiForm,
    pub support: Support,
    pub scale: Rational,
}

impl ApproxFunction {
    /// A power-log form with `β = 0` is stored as the plain power form.
    pub fn new(form: PsiForm, support: Support, scale: Rational) -> Result<Self> {
        let form = match form {
            PsiForm::PowerLog { tau, beta } if beta.is_zero() => PsiForm::Power { tau },
            other => other,
        };
        match &form {
            PsiForm::Power { tau } | PsiForm::PowerLog { tau, .. } if !tau.is_positive() => {
                return Err(Error::InvalidInput(format!("tau = {tau} must be > 0")));
            }
            PsiForm::Table(t) if t.values().any(|v| v.is_negative()) || t.contains_key(&0) => {
                return Err(Error::InvalidInput("table values must be >= 0 at q >= 1".into()));
            }
            PsiForm::Constant(c) if c.is_negative() => {
                return Err(Error::InvalidInput("constant psi must be >= 0".into()));
            }
            _ => {}
        }
        if let Support::Lacunary { base } = support {
            if base < 2 {
                return Err(Error::InvalidInput("lacunary base must be >= 2".into()));
            }
        }
        if !scale.is_positive() {
            return Err(Error::InvalidInput("scale must be > 0".into()));
        }
        Ok(ApproxFunction { form, support, scale })
    }

    pub fn power(tau: Rational) -> Result<Self> {
        Self::new(PsiForm::Power { tau }, Support::All, Rational::one())
    }

    pub fn power_log(tau: Rational, beta: Rational) -> Result<Self> {
        Self::new(PsiForm::PowerLog { tau, beta }, Support::All, Rational::one())
    }

    pub fn constant(c: Rational) -> Result<Self> {
        Self::new(PsiForm::Constant(c), Support::All, Rational::one())
    }

    pub fn table(entries: impl IntoIterator<Item = (u64, Rational)>) -> Result<Self> {
        Self::new(PsiForm::Table(entries.into_iter().collect()), Support::All, Rational::one())
    }

    pub fn with_support(mut self, support: Support) -> Result<Self> {
        self.support = support;
        Self::new(self.form, self.support, self.scale)
    }

    pub fn with_scale(mut self, scale: Rational) -> Result<Self> {
        self.scale = scale;
        Self::new(self.form, self.support, self.scale)
    }

    /// Whether `ψ(q) > 0`.
    pub fn in_support(&self, q: u64) -> bool {
        if q == 0 || !self.support.contains(q) {
            return false;
        }
        match &self.form {
            PsiForm::PowerLog { .. } => q >= 2,
            PsiForm::Table(t) => t.get(&q).is_some_and(|v| v.is_positive()),
            PsiForm::Constant(c) => c.is_positive(),
            PsiForm::Power { .. } => true,
        }
    }

    /// `ψ(q)` in floating point (natural logarithms).
    pub fn eval(&self, q: u64) -> Result<f64> {
        if q == 0 {
            return Err(Error::InvalidInput("psi is evaluated at q >= 1".into()));
        }
        if q == 1 && matches!(self.form, PsiForm::PowerLog { .. }) && self.support.contains(1) {
            return Err(Error::InvalidInput("power_log psi is undefined at q = 1".into()));
        }
        if !self.in_support(q) {
            return Ok(0.0);
        }
        if let Some(exact) = self.eval_exact(q) {
            return Ok(rational_to_f64(&exact));
        }
        let scale = rational_to_f64(&self.scale);
        let qf = q as f64;
        Ok(match &self.form {
            PsiForm::Power { tau } => scale * qf.powf(-rational_to_f64(tau)),
            PsiForm::PowerLog { tau, beta } => {
                scale * qf.powf(-rational_to_f64(tau)) * qf.ln().powf(rational_to_f64(beta))
            }
            PsiForm::Table(_) | PsiForm::Constant(_) => unreachable!("exact forms handled above"),
        })
    }

    /// `ψ(q)` as an exact rational when the form allows it: tables,
    /// constants, and integer exponents without a logarithm.
    pub fn eval_exact(&self, q: u64) -> Option<Rational> {
        if !self.in_support(q) {
            return if q >= 2 || !matches!(self.form, PsiForm::PowerLog { .. }) {
                Some(Rational::zero())
            } else {
                None
            };
        }
        let v = match &self.form {
            PsiForm::Table(t) => t.get(&q).cloned().unwrap_or_else(Rational::zero),
            PsiForm::Constant(c) => c.clone(),
            PsiForm::Power { tau } | PsiForm::PowerLog { tau, beta: _ }
                if tau.is_integer() && self.log_exponent().is_zero() =>
            {
                let e = tau.to_integer().to_usize()?;
                Rational::new(1.into(), num_traits::pow(num_bigint::BigInt::from(q), e))
            }
            _ => return None,
        };
        Some(v * self.scale.clone())
    }

    /// `ψ(q)` in the requested scalar type; exact types need an exact value.
    pub fn eval_as<T: Scalar>(&self, q: u64) -> Result<T> {
        if T::EXACT {
            let v = self.eval_exact(q).ok_or(Error::InexactPsi { q })?;
            Ok(T::from_rational(&v))
        } else {
            let v = self.eval(q)?;
            T::from_f64(v).ok_or(Error::InvalidInput(format!("psi({q}) = {v} not representable")))
        }
    }

    /// `(τ, β)` when ψ is a power or power-log form.
    pub fn exponents(&self) -> Option<(Rational, Rational)> {
        match &self.form {
            PsiForm::Power { tau } => Some((tau.clone(), Rational::zero())),
            PsiForm::PowerLog { tau, beta } => Some((tau.clone(), beta.clone())),
            _ => None,
        }
    }

    fn log_exponent(&self) -> Rational {
        match &self.form {
            PsiForm::PowerLog { beta, .. } => beta.clone(),
            _ => Rational::zero(),
        }
    }

    /// Support members in `[lo, hi]`, increasing.
    pub fn support_in(&self, lo: u64, hi: u64) -> Vec<u64> {
        let lo = lo.max(1);
        if lo > hi {
            return Vec::new();
        }
        match &self.support {
            Support::Lacunary { base } => {
                let mut out = Vec::new();
                let mut x = *base;
                while x <= hi {
                    if x >= lo && self.in_support(x) {
                        out.push(x);
                    }
                    match x.checked_mul(*base) {
                        Some(y) => x = y,
                        None => break,
                    }
                }
                out
            }
            Support::Explicit(set) => set.range(lo..=hi).copied().filter(|&q| self.in_support(q)).collect(),
            Support::All => match &self.form {
                PsiForm::Table(t) => t.range(lo..=hi).map(|(&q, _)| q).filter(|&q| self.in_support(q)).collect(),
                _ => (lo..=hi).filter(|&q| self.in_support(q)).collect(),
            },
        }
    }
}

/// Grammar: `pow:τ`, `powlog:τ:β`, `const:c`, `table:{q:v,...}` or
/// `table:<file>`, each optionally followed by `:x<scale>`.
/// Table files hold one `q value` pair per line (`#` comments allowed).
impl FromStr for ApproxFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, scale) = split_scale(s)?;
        let bad = |tok: &str, why: &str| Error::Parse {
            token: tok.to_string(),
            reason: why.to_string(),
        };
        let (kind, rest) = body.split_once(':').ok_or_else(|| bad(body, "expected <kind>:<args>"))?;
        let form = match kind {
            "pow" => PsiForm::Power {
                tau: parse_rational(rest)?,
            },
            "powlog" => {
                let (t, b) = rest.split_once(':').ok_or_else(|| bad(rest, "powlog needs τ:β"))?;
                PsiForm::PowerLog {
                    tau: parse_rational(t)?,
                    beta: parse_rational(b)?,
                }
            }
            "const" => PsiForm::Constant(parse_rational(rest)?),
            "table" => PsiForm::Table(parse_table(rest)?),
            other => return Err(bad(other, "unknown psi form (pow, powlog, const, table)")),
        };
        ApproxFunction::new(form, Support::All, scale)
    }
}

fn split_scale(s: &str) -> Result<(&str, Rational)> {
    // the scale suffix can only follow the final ':' and never sits inside a table literal
    if let Some(idx) = s.rfind(":x") {
        if !s[idx..].contains('}') {
            return Ok((&s[..idx], parse_rational(&s[idx + 2..])?));
        }
    }
    Ok((s, Rational::one()))
}

fn parse_table(src: &str) -> Result<BTreeMap<u64, Rational>> {
    let text = if let Some(inner) = src.strip_prefix('{') {
        inner
            .strip_suffix('}')
            .ok_or_else(|| Error::Parse {
                token: src.into(),
                reason: "unterminated `{`".into(),
            })?
            .replace(',', "\n")
            .replace(':', " ")
    } else {
        std::fs::read_to_string(src).map_err(|e| Error::Parse {
            token: src.into(),
            reason: format!("cannot read table file: {e}"),
        })?
    };
    let mut out = BTreeMap::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split([' ', '\t', ',']).filter(|p| !p.is_empty());
        let (Some(q), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse {
                token: line.into(),
                reason: "expected `q value`".into(),
            });
        };
        let q: u64 = q.parse().map_err(|_| Error::Parse {
            token: q.into(),
            reason: "q must be a positive integer".into(),
        })?;
        out.insert(q, parse_rational(v)?);
    }
    Ok(out)
}

/// Grammar: `all`, `lacunary:<base>`, `set:{1,2,3}` or `set:<file>`.
impl FromStr for Support {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "all" {
            return Ok(Support::All);
        }
        let bad = |tok: &str, why: &str| Error::Parse {
            token: tok.to_string(),
            reason: why.to_string(),
        };
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad(s, "expected all, lacunary:<b> or set:<...>"))?;
        match kind {
            "lacunary" => {
                let base: u64 = rest.parse().map_err(|_| bad(rest, "lacunary base must be an integer >= 2"))?;
                if base < 2 {
                    return Err(bad(rest, "lacunary base must be >= 2"));
                }
                Ok(Support::Lacunary { base })
            }
            "set" => {
                let text = match rest.strip_prefix('{') {
                    Some(inner) => inner.strip_suffix('}').ok_or_else(|| bad(rest, "unterminated `{`"))?.to_string(),
                    None => std::fs::read_to_string(rest).map_err(|e| bad(rest, &format!("cannot read set file: {e}")))?,
                };
                text.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<u64>().map_err(|_| bad(t, "set members must be positive integers")))
                    .collect::<Result<BTreeSet<u64>>>()
                    .map(Support::Explicit)
            }
            other => Err(bad(other, "unknown support kind")),
        }
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Support::All => write!(f, "all"),
            Support::Lacunary { base } => write!(f, "lacunary:{base}"),
            Support::Explicit(set) => {
                let items: Vec<String> = set.iter().map(|q| q.to_string()).collect();
                write!(f, "set:{{{}}}", items.join(","))
            }
        }
    }
}

impl fmt::Display for ApproxFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            PsiForm::Power { tau } => write!(f, "pow:{}", format_rational(tau))?,
            PsiForm::PowerLog { tau, beta } => write!(f, "powlog:{}:{}", format_rational(tau), format_rational(beta))?,
            PsiForm::Constant(c) => write!(f, "const:{}", format_rational(c))?,
            PsiForm::Table(t) => {
                let items: Vec<String> = t.iter().map(|(q, v)| format!("{q}:{}", format_rational(v))).collect();
                write!(f, "table:{{{}}}", items.join(","))?
            }
        }
        if !self.scale.is_one() {
            write!(f, ":x{}", format_rational(&self.scale))?;
        }
        Ok(())
    }
}

/// Which lower threshold for ψ to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    /// `q^{-1/(2m+1)} (ln q)^{2/(2m+1)}` for general codimension `m`.
    Codimension { m: u32 },
    /// `q^{-d/(2+d)} (ln q)^{2d/(2+d)}` for genuinely curved hypersurfaces.
    Hypersurface { d: u32 },
}

impl ThresholdKind {
    pub fn floor_value(&self, q: u64) -> f64 {
        let (a, b) = match *self {
            ThresholdKind::Codimension { m } => {
                let k = 2.0 * m as f64 + 1.0;
                (1.0 / k, 2.0 / k)
            }
            ThresholdKind::Hypersurface { d } => {
                let k = 2.0 + d as f64;
                (d as f64 / k, 2.0 * d as f64 / k)
            }
        };
        let qf = q as f64;
        qf.powf(-a) * qf.ln().powf(b)
    }
}

/// `floor(q) <= ψ(q) <= 1/2`. The lower comparison allows a relative slack of
/// 1e-12 so that a ψ defined by the same closed form counts as on the floor.
pub fn threshold_check(psi: &ApproxFunction, q: u64, kind: ThresholdKind) -> Result<bool> {
    if q < 2 {
        return Err(Error::InvalidInput("threshold checks need q >= 2".into()));
    }
    let v = psi.eval(q)?;
    let floor = kind.floor_value(q);
    Ok(floor <= v * (1.0 + 1e-12) && v <= 0.5)
}

/// Inhomogeneous shift `θ = (λ, γ) ∈ R^d × R^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Shift<T> {
    pub lambda: Vec<T>,
    pub gamma: Vec<T>,
}

impl<T: Scalar> Shift<T> {
    pub fn new(lambda: Vec<T>, gamma: Vec<T>) -> Self {
        Shift { lambda, gamma }
    }

    pub fn zero(d: usize, m: usize) -> Self {
        Shift {
            lambda: vec![T::zero(); d],
            gamma: vec![T::zero(); m],
        }
    }

    /// Splits a flat `(λ_1..λ_d, γ_1..γ_m)` vector.
    pub fn from_flat(values: Vec<T>, d: usize, m: usize) -> Result<Self> {
        if values.len() != d + m {
            return Err(Error::DimensionMismatch {
                what: "theta components",
                expected: d + m,
                got: values.len(),
            });
        }
        let mut lambda = values;
        let gamma = lambda.split_off(d);
        Ok(Shift { lambda, gamma })
    }

    pub fn check_dims(&self, d: usize, m: usize) -> Result<()> {
        if self.lambda.len() != d || self.gamma.len() != m {
            return Err(Error::DimensionMismatch {
                what: "theta components",
                expected: d + m,
                got: self.lambda.len() + self.gamma.len(),
            });
        }
        Ok(())
    }

    /// Componentwise fractional parts: `λ̃ ∈ [0,1)^d`, `γ mod 1 ∈ [0,1)^m`.
    pub fn reduce(&self) -> Self {
        Shift {
            lambda: self.lambda.iter().map(|x| x.fract_part()).collect(),
            gamma: self.gamma.iter().map(|x| x.fract_part()).collect(),
        }
    }

    pub fn to_f64(&self) -> Shift<f64> {
        Shift {
            lambda: self.lambda.iter().map(|x| x.as_f64()).collect(),
            gamma: self.gamma.iter().map(|x| x.as_f64()).collect(),
        }
    }
}

pub fn reduce_shift<T: Scalar>(theta: &Shift<T>) -> Shift<T> {
    theta.reduce()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn evaluates_forms() {
        let p = ApproxFunction::power(ratio(1, 2)).unwrap();
        assert_eq!(p.eval(4).unwrap(), 0.5);
        assert_eq!(p.eval_exact(4), None);
        let inv = ApproxFunction::power(ratio(1, 1)).unwrap();
        assert_eq!(inv.eval_exact(8), Some(ratio(1, 8)));
        let lac = inv.clone().with_support(Support::Lacunary { base: 2 }).unwrap();
        assert_eq!(lac.eval(6).unwrap(), 0.0);
        assert_eq!(lac.eval(8).unwrap(), 0.125);
        let scaled = ApproxFunction::constant(ratio(1, 4)).unwrap().with_scale(ratio(2, 1)).unwrap();
        assert_eq!(scaled.eval(7).unwrap(), 0.5);
    }

    #[test]
    fn power_log_at_twenty() {
        let p = ApproxFunction::power_log(ratio(1, 3), ratio(2, 3)).unwrap();
        let v = p.eval(20).unwrap();
        let oracle = (-(20f64.ln()) / 3.0).exp() * (2.0 / 3.0 * 20f64.ln().ln()).exp();
        assert!((v - oracle).abs() < 1e-14);
        assert!((v - 0.765_582_504_6).abs() < 1e-9, "{v}");
        assert!(p.eval(1).is_err());
        assert!(!p.in_support(1));
    }

    #[test]
    fn rejects_bad_forms() {
        assert!(ApproxFunction::power(ratio(0, 1)).is_err());
        assert!(ApproxFunction::power(ratio(1, 1)).unwrap().with_scale(ratio(-1, 1)).is_err());
        assert!(ApproxFunction::table([(3, ratio(-1, 2))]).is_err());
        assert!("pow:0".parse::<ApproxFunction>().is_err());
    }

    #[test]
    fn threshold_examples() {
        let floor_form = ApproxFunction::power_log(ratio(1, 3), ratio(2, 3)).unwrap();
        let cor = ThresholdKind::Codimension { m: 1 };
        assert!(!threshold_check(&floor_form, 100, cor).unwrap());
        assert!(threshold_check(&floor_form, 1000, cor).unwrap());
        let sqrt = ApproxFunction::power(ratio(1, 2)).unwrap();
        assert!(!threshold_check(&sqrt, 1_000_000, cor).unwrap());
        // with natural logarithms the floor at q = 10 is about 0.81, above 1/2
        let half = ApproxFunction::constant(ratio(1, 2)).unwrap();
        assert!(!threshold_check(&half, 10, cor).unwrap());
        assert!(threshold_check(&half, 1000, cor).unwrap());
        assert!(!threshold_check(&half, 10, ThresholdKind::Hypersurface { d: 2 }).unwrap());
        assert!(threshold_check(&half, 100, ThresholdKind::Hypersurface { d: 2 }).unwrap());
        assert!(threshold_check(&half, 1, cor).is_err());
    }

    #[test]
    fn grammar_round_trips() {
        for s in ["pow:1/2", "powlog:1/3:2/3", "const:1/4:x3", "table:{2:2/5,5:1/5}", "pow:1:x1/2"] {
            let p: ApproxFunction = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        let p: ApproxFunction = "table:{5:0.2}".parse().unwrap();
        assert_eq!(p.eval_exact(5), Some(ratio(1, 5)));
        assert_eq!(p.eval_exact(4), Some(ratio(0, 1)));
        match "powr:1".parse::<ApproxFunction>() {
            Err(Error::Parse { token, .. }) => assert_eq!(token, "powr"),
            other => panic!("{other:?}"),
        }
        match "pow:abc".parse::<ApproxFunction>() {
            Err(Error::Parse { token, .. }) => assert_eq!(token, "abc"),
            other => panic!("{other:?}"),
        }
        for s in ["all", "lacunary:2", "set:{1,3,9}"] {
            assert_eq!(s.parse::<Support>().unwrap().to_string(), s);
        }
        assert!("lacunary:1".parse::<Support>().is_err());
    }

    #[test]
    fn table_files() {
        let dir = std::env::temp_dir().join(format!("psi-table-{}", std::process::id()));
        std::fs::write(&dir, "# q value\n3 1/3\n4\t0.25\n").unwrap();
        let p: ApproxFunction = format!("table:{}", dir.display()).parse().unwrap();
        assert_eq!(p.eval_exact(4), Some(ratio(1, 4)));
        assert_eq!(p.support_in(1, 10), vec![3, 4]);
        std::fs::remove_file(dir).ok();
    }

    #[test]
    fn support_enumeration() {
        let p = ApproxFunction::power(ratio(1, 1))
            .unwrap()
            .with_support(Support::Lacunary { base: 2 })
            .unwrap();
        assert_eq!(p.support_in(2, 1024), vec![2, 4, 8, 16, 32, 64, 128, 256, 512, 1024]);
        let pl = ApproxFunction::power_log(ratio(1, 3), ratio(2, 3)).unwrap();
        assert_eq!(pl.support_in(1, 4), vec![2, 3, 4]);
        assert!(Support::Lacunary { base: 3 }.contains(27));
        assert!(!Support::Lacunary { base: 3 }.contains(1));
        assert!(!Support::Lacunary { base: 3 }.contains(18));
    }

    #[test]
    fn shift_reduction() {
        let t = Shift::new(vec![1.25], vec![-0.3]).reduce();
        assert_eq!(t.lambda, vec![0.25]);
        assert!((t.gamma[0] - 0.7).abs() < 1e-15);
        let t = Shift::new(vec![2.0], vec![3.0]).reduce();
        assert_eq!((t.lambda[0], t.gamma[0]), (0.0, 0.0));
        let t = Shift::new(vec![-0.75], vec![0.5]).reduce();
        assert_eq!((t.lambda[0], t.gamma[0]), (0.25, 0.5));
        let exact = Shift::new(vec![ratio(-7, 4)], vec![ratio(13, 5)]).reduce();
        assert_eq!(exact, Shift::new(vec![ratio(1, 4)], vec![ratio(3, 5)]));
        assert!(Shift::from_flat(vec![1.0, 2.0], 1, 2).is_err());
    }
}
