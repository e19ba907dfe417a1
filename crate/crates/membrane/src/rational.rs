//! Thin helpers over `num::BigRational`.
//!
//! All exponent and amplitude bookkeeping in the perturbation and reduction
//! modules is exact; floating point appears only inside integrators and
//! residual evaluation. Rationals serialize as `"p/q"` strings.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

pub fn is_integer(r: &Rat) -> bool {
    r.denom().is_one()
}

/// `(-1)^r` for integer `r`; errors otherwise.
pub fn neg_one_pow(r: &Rat) -> Result<Rat> {
    if !is_integer(r) {
        return Err(Error::NonIntegerExponent(format(r)));
    }
    if (r.numer() % BigInt::from(2)).is_zero() {
        Ok(Rat::one())
    } else {
        Ok(-Rat::one())
    }
}

/// Render as `"p/q"`, or just `"p"` for integers.
pub fn format(r: &Rat) -> String {
    if is_integer(r) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse `"p"`, `"p/q"`, or a plain decimal like `"0.25"`.
pub fn parse(s: &str) -> Result<Rat> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p
            .trim()
            .parse()
            .map_err(|_| Error::BadArgument(format!("bad rational `{s}`")))?;
        let q: BigInt = q
            .trim()
            .parse()
            .map_err(|_| Error::BadArgument(format!("bad rational `{s}`")))?;
        if q.is_zero() {
            return Err(Error::BadArgument(format!("zero denominator in `{s}`")));
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let digits = frac.len() as u32;
        let scale = BigInt::from(10u32).pow(digits);
        let neg = whole.starts_with('-');
        let whole_part: BigInt = if whole.is_empty() || whole == "-" {
            BigInt::zero()
        } else {
            whole
                .parse()
                .map_err(|_| Error::BadArgument(format!("bad rational `{s}`")))?
        };
        let frac_part: BigInt = if frac.is_empty() {
            BigInt::zero()
        } else {
            frac.parse()
                .map_err(|_| Error::BadArgument(format!("bad rational `{s}`")))?
        };
        let signed_frac = if neg { -frac_part } else { frac_part };
        return Ok(BigRational::new(whole_part * &scale + signed_frac, scale));
    }
    let p: BigInt = s
        .parse()
        .map_err(|_| Error::BadArgument(format!("bad rational `{s}`")))?;
    Ok(BigRational::from_integer(p))
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Falls back to component division for extreme magnitudes.
        r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
    })
}

/// Exact square root when the rational is a perfect square of a rational.
pub fn sqrt_exact(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let ns = r.numer().sqrt();
    let ds = r.denom().sqrt();
    if &(&ns * &ns) == r.numer() && &(&ds * &ds) == r.denom() {
        Some(BigRational::new(ns, ds))
    } else {
        None
    }
}
