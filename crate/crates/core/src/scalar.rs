//! Scalar abstraction shared by every exact-or-floating computation in the crate.
//!
//! Counting, condition checks and cover construction are written once against
//! [`Scalar`] and instantiated with `f64`/`f32` for speed or with
//! [`Rational`] when comparisons must be exact.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Arbitrary precision rational number.
pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Num
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// `true` when arithmetic and comparisons are exact.
    const EXACT: bool;

    fn floor(&self) -> Self;

    fn from_rational(r: &Rational) -> Self;

    /// Exact rational value; `None` for non-finite floats.
    fn to_rational(&self) -> Option<Rational>;

    /// Band around a strict threshold inside which a comparison is reported
    /// as borderline rather than trusted. Zero for exact types.
    fn borderline_tolerance() -> Self;

    /// Relative pivot tolerance used by rank and determinant routines.
    fn rank_tolerance() -> Self;

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_u64_exact(v: u64) -> Self {
        Self::from_u64(v).expect("u64 representable in every scalar type")
    }

    /// `x - floor(x)`, in `[0, 1)`.
    fn fract_part(&self) -> Self {
        self.clone() - self.floor()
    }

    /// Distance to the nearest integer, in `[0, 1/2]`.
    fn dist_to_int(&self) -> Self {
        let f = self.fract_part();
        let g = Self::one() - f.clone();
        if f < g {
            f
        } else {
            g
        }
    }
}

macro_rules! impl_float_scalar {
    ($t:ty, $border:expr, $rank:expr) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn floor(&self) -> Self {
                <$t>::floor(*self)
            }

            fn from_rational(r: &Rational) -> Self {
                rational_to_f64(r) as $t
            }

            fn to_rational(&self) -> Option<Rational> {
                Rational::from_float(*self)
            }

            fn borderline_tolerance() -> Self {
                $border
            }

            fn rank_tolerance() -> Self {
                $rank
            }

            fn fract_part(&self) -> Self {
                let f = *self - <$t>::floor(*self);
                // x - floor(x) rounds to 1.0 for tiny negative x
                if f >= 1.0 {
                    0.0
                } else {
                    f
                }
            }
        }
    };
}

impl_float_scalar!(f64, 1e-9, 1e-10);
impl_float_scalar!(f32, 1e-4, 1e-5);

impl Scalar for Rational {
    const EXACT: bool = true;

    fn floor(&self) -> Self {
        Rational::floor(self)
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn borderline_tolerance() -> Self {
        Rational::zero()
    }

    fn rank_tolerance() -> Self {
        Rational::zero()
    }

    fn as_f64(&self) -> f64 {
        rational_to_f64(self)
    }
}

/// Nearest-double conversion that survives numerators and denominators too
/// large for `f64`.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() {
            return n / d;
        }
    }
    // keep ~64 significant bits of the quotient, then rescale
    let k: i64 = 64 - (r.numer().bits() as i64 - r.denom().bits() as i64);
    let quotient = if k >= 0 {
        (r.numer() << k as usize) / r.denom()
    } else {
        r.numer() / (r.denom() << (-k) as usize)
    };
    quotient.to_f64().unwrap_or(f64::NAN) * 2f64.powi((-k) as i32)
}

/// Exact rational equal to a finite double.
pub fn rational_from_f64(x: f64) -> Result<Rational, Error> {
    Rational::from_float(x).ok_or_else(|| Error::InvalidInput(format!("non-finite value {x}")))
}

pub fn rational_from_int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parse `"p/q"`, an integer, or a decimal literal (`"-0.125"`, `"1e-3"`) into
/// an exact rational. Decimals are converted digit by digit, never through a
/// binary float.
pub fn parse_rational(text: &str) -> Result<Rational, Error> {
    let s = text.trim();
    let bad = || Error::Parse {
        token: text.to_string(),
        reason: "expected a rational literal such as 3, -2/5 or 0.125".into(),
    };
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse {
                token: text.to_string(),
                reason: "zero denominator".into(),
            });
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str(if all.is_empty() { "0" } else { &all }).map_err(|_| bad())?;
    if neg {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Canonical text form: integers print bare, everything else as `p/q`.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// `floor(sqrt(x))` for a non-negative double, corrected for rounding.
pub fn isqrt_floor(x: f64) -> u64 {
    if x <= 0.0 {
        return 0;
    }
    let mut r = x.sqrt().floor() as u64;
    while ((r + 1) as f64) * ((r + 1) as f64) <= x {
        r += 1;
    }
    while r > 0 && (r as f64) * (r as f64) > x {
        r -= 1;
    }
    r
}

/// Exact `floor(a / b)` for integers, used by the block decomposition.
pub fn div_floor_u64(a: u64, b: u64) -> u64 {
    a / b
}
