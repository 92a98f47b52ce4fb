//! Exact rational helpers shared by every module.
//!
//! Probabilities, profiles and constraint densities are `BigRational`
//! throughout; floating point is derived from them, never the other way
//! round (except for the explicit dyadic embedding of `f64` caps).

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

/// Small-integer rational.
pub fn rat(numer: i64, denom: i64) -> Rat {
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn rat_int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

pub fn rat_zero() -> Rat {
    Rat::zero()
}

pub fn rat_one() -> Rat {
    Rat::one()
}

/// Parses `"p/q"`, `"123"` or a plain decimal such as `"0.146446609406726"`.
///
/// Decimals are read exactly (digits over a power of ten); no exponent
/// notation is accepted, which keeps report files trivially re-parseable.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((p, q)) = s.split_once('/') {
        let numer: BigInt = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let denom: BigInt = q
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if denom.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rat::new(numer, denom));
    }
    let (sign, digits) = match s.strip_prefix('-') {
        Some(rest) => (-1i64, rest),
        None => (1i64, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Parse(format!("not a number: {s:?}")));
    }
    let all: String = format!("{int_part}{frac_part}");
    if !all.chars().all(|c| c.is_ascii_digit()) {
        return Err(Error::Parse(format!("not a number: {s:?}")));
    }
    let numer: BigInt = all
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: {s:?}")))?;
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(Rat::new(numer * BigInt::from(sign), denom))
}

/// Canonical display: `"p"` for integers, `"p/q"` otherwise (never contains
/// a comma, so it is CSV-safe).
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact dyadic embedding of a finite `f64`.
pub fn rat_from_f64(x: f64) -> Result<Rat> {
    Rat::from_float(x).ok_or_else(|| Error::Invalid(format!("non-finite value {x}")))
}

/// Rounds a rational to `f64`, correct to ~1 ulp even when numerator and
/// denominator are far too large for `f64` themselves.
pub fn rat_to_f64(r: &Rat) -> f64 {
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    let numer = r.numer().magnitude();
    let denom = r.denom().magnitude();
    if numer.is_zero() {
        return 0.0;
    }
    let nb = numer.bits();
    let db = denom.bits();
    if nb <= 63 && db <= 63 {
        return sign * numer.to_f64().unwrap() / denom.to_f64().unwrap();
    }
    // Keep 63 significant bits of each side and track the shifts.
    let ns = nb.saturating_sub(63);
    let ds = db.saturating_sub(63);
    let ntop = (numer >> ns).to_f64().unwrap();
    let dtop = (denom >> ds).to_f64().unwrap();
    let exp = ns as i64 - ds as i64;
    if exp.abs() > 2000 {
        // Way outside f64 range either way.
        return if exp > 0 { sign * f64::INFINITY } else { 0.0 };
    }
    sign * (ntop / dtop) * 2f64.powi(exp as i32)
}

/// `log2` of a positive big integer, accurate to ~1e-15 relative.
pub fn log2_biguint(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "log2 of zero");
    let b = x.bits();
    if b <= 53 {
        return x.to_f64().unwrap().log2();
    }
    let shift = b - 53;
    let top = (x >> shift).to_f64().unwrap();
    shift as f64 + top.log2()
}

/// Floor of a rational as `BigInt`.
pub fn floor_rat(r: &Rat) -> BigInt {
    r.floor().to_integer()
}

/// Ceiling of a rational as `BigInt`.
pub fn ceil_rat(r: &Rat) -> BigInt {
    r.ceil().to_integer()
}

pub fn big_to_usize(b: &BigInt) -> Result<usize> {
    b.to_usize()
        .ok_or_else(|| Error::Invalid(format!("{b} does not fit usize")))
}

pub fn sign_is_nonneg(b: &BigInt) -> bool {
    b.sign() != Sign::Minus
}
