//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! Decision procedures run over [`Rational`]; the same code paths can be
//! instantiated with `f64` for quick approximate sweeps.

use std::fmt::{Debug, Display};

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// Exact arbitrary-precision fraction, always kept in lowest terms.
pub type Rational = BigRational;

/// Field-like number type usable as a transition probability or expected cost.
pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// Converts an exact rational into this scalar type.
    fn from_rational(r: &Rational) -> Self;

    /// Lossy conversion for reporting.
    fn approx(&self) -> f64;

    /// Whether the value counts as zero. Exact types compare exactly; floats
    /// use a small absolute tolerance.
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    /// `ceil(self * 2^64)` for a value in `[0, 1]`, so that `self > x / 2^64`
    /// holds exactly when `x < self.dyadic_ceil()`.
    fn dyadic_ceil(&self) -> u128;

    /// Whether arithmetic on this type is exact.
    const EXACT: bool;
}

impl Scalar for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn dyadic_ceil(&self) -> u128 {
        let scaled = Rational::new(self.numer() << 64, self.denom().clone());
        scaled.ceil().to_integer().to_u128().unwrap_or(0)
    }

    const EXACT: bool = true;
}

impl Scalar for f64 {
    fn from_rational(r: &Rational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }

    fn approx(&self) -> f64 {
        *self
    }

    fn is_negligible(&self) -> bool {
        self.abs() < 1e-12
    }

    fn dyadic_ceil(&self) -> u128 {
        (self.clamp(0.0, 1.0) * 18_446_744_073_709_551_616.0).ceil() as u128
    }

    const EXACT: bool = false;
}

/// Builds `num/den` as an exact rational. Panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// `2^-k` as an exact rational.
pub fn pow2_inv(k: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k)
}

/// Formats `r` as `num/den` (denominator always printed).
pub fn fraction_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Exact decimal rendering of `r` with `sig` significant digits, rounded half
/// away from zero. Values outside `[1e-6, 1e15)` switch to scientific form.
pub fn decimal_string(r: &Rational, sig: usize) -> String {
    if r.is_zero() {
        return "0".to_string();
    }
    let sig = sig.max(1);
    let negative = r.is_negative();
    let abs = r.abs();
    let ten = BigInt::from(10);

    // exponent e such that 10^e <= abs < 10^(e+1)
    let mut e: i64 = (abs.numer().bits() as i64 - abs.denom().bits() as i64) * 30103 / 100000;
    let pow10 = |k: i64| -> Rational {
        if k >= 0 {
            Rational::from_integer(num_traits::pow(ten.clone(), k as usize))
        } else {
            Rational::new(BigInt::one(), num_traits::pow(ten.clone(), (-k) as usize))
        }
    };
    while pow10(e) > abs {
        e -= 1;
    }
    while pow10(e + 1) <= abs {
        e += 1;
    }

    // digits = round(abs * 10^(sig-1-e))
    let scaled = &abs * pow10(sig as i64 - 1 - e);
    let mut digits = round_half_up(&scaled);
    if digits.to_string().len() > sig {
        // rounding carried into a new digit, e.g. 9.99.. -> 10.0
        e += 1;
        digits = round_half_up(&(&abs * pow10(sig as i64 - 1 - e)));
    }
    let text = digits.to_string();

    let body = if (-6..15).contains(&e) {
        if e >= 0 {
            let int_len = (e + 1) as usize;
            if int_len >= text.len() {
                format!("{}{}", text, "0".repeat(int_len - text.len()))
            } else {
                format!("{}.{}", &text[..int_len], &text[int_len..])
            }
        } else {
            format!("0.{}{}", "0".repeat((-e - 1) as usize), text)
        }
    } else {
        let mantissa = if text.len() > 1 {
            format!("{}.{}", &text[..1], &text[1..])
        } else {
            text.clone()
        };
        format!("{}e{}", mantissa, e)
    };
    if negative {
        format!("-{}", body)
    } else {
        body
    }
}

fn round_half_up(x: &Rational) -> BigInt {
    (x + ratio(1, 2)).floor().to_integer()
}

/// Sign helper used by parsers.
pub fn is_probability(r: &Rational) -> bool {
    r.numer().sign() != Sign::Minus && r <= &Rational::one()
}
