//! Arbitrary-precision helpers for the exponentially large integers that
//! appear in insertion plans (values like `⌈n^A log n⌉` with `n ~ e^400`).
//!
//! Real-valued inputs (`φ(n)`, exponents) are `f64`; everything downstream of
//! them is evaluated with enough binary precision that the final ceiling or
//! floor is the exact integer nearest in the requested direction.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

const GUARD_BITS: usize = 96;
const RM: RoundingMode = RoundingMode::ToEven;

/// Natural log of a big integer as `f64`. Returns `-inf` for zero.
pub fn ln_big(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().map_or(f64::INFINITY, f64::ln);
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().expect("64-bit value fits f64");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Decimal digit count of a number whose natural log is `ln_value`.
pub fn digits_for_ln(ln_value: f64) -> u64 {
    if ln_value <= 0.0 {
        1
    } else {
        (ln_value / std::f64::consts::LN_10).floor() as u64 + 1
    }
}

fn check_digits(ln_value: f64, max_digits: u64) -> Result<()> {
    if !ln_value.is_finite() {
        return Err(Error::DigitCap { digits: u64::MAX, cap: max_digits });
    }
    let digits = digits_for_ln(ln_value);
    if digits > max_digits {
        return Err(Error::DigitCap { digits, cap: max_digits });
    }
    Ok(())
}

fn precision_for(ln_value: f64) -> usize {
    let bits = (ln_value.max(1.0) / std::f64::consts::LN_2).ceil() as usize;
    bits + GUARD_BITS
}

fn from_biguint(n: &BigUint, p: usize) -> BigFloat {
    if n.is_zero() {
        return BigFloat::from_u64(0, p);
    }
    let words = n.to_u64_digits();
    let e = (words.len() * 64) as i32;
    let mut x = BigFloat::from_words(&words, Sign::Pos, e);
    x.set_precision(p.max(words.len() * 64), RM)
        .expect("precision increase");
    x
}

/// Converts a nonnegative integer-valued `BigFloat` to `BigUint`.
fn to_biguint(x: &BigFloat) -> BigUint {
    if x.is_zero() {
        return BigUint::zero();
    }
    let (mantissa, _, sign, exponent, _) = x.as_raw_parts().expect("finite value");
    debug_assert_eq!(sign, Sign::Pos);
    let mut digits = Vec::with_capacity(mantissa.len() * 2);
    for w in mantissa {
        digits.push(*w as u32);
        digits.push((*w >> 32) as u32);
    }
    let v = BigUint::from_slice(&digits);
    let shift = exponent as i64 - (mantissa.len() * 64) as i64;
    if shift >= 0 {
        v << shift as usize
    } else {
        v >> (-shift) as usize
    }
}

fn consts() -> Consts {
    Consts::new().expect("astro-float constant cache")
}

/// `⌈e^x⌉`.
///
/// When `e^x` lies above an integer by less than the error carried by `x`
/// itself, that integer is returned, so `ceil_exp(6.0 * 6f64.ln())` is `46656`.
pub fn ceil_exp(x: f64, max_digits: u64) -> Result<BigUint> {
    check_digits(x, max_digits)?;
    if x <= 0.0 {
        return Ok(BigUint::from(1u32));
    }
    let p = precision_for(x);
    let mut cc = consts();
    let v = BigFloat::from_f64(x, p).exp(p, RM, &mut cc);
    let below = v.floor();
    let excess = v.sub(&below, p, RM);
    let slack = v.mul(&BigFloat::from_f64(x.max(1.0) * f64::EPSILON * 4.0, p), p, RM);
    if excess.cmp(&slack).is_some_and(|o| o <= 0) {
        return Ok(to_biguint(&below));
    }
    Ok(to_biguint(&v.ceil()))
}

/// `⌈exp(exp(v))⌉`, i.e. the integer ceiling of the `r` with `log log r = v`.
pub fn ceil_exp_exp(v: f64, max_digits: u64) -> Result<BigUint> {
    let inner = v.exp();
    check_digits(inner, max_digits)?;
    let p = precision_for(inner) + 64;
    let mut cc = consts();
    let t = BigFloat::from_f64(v, p).exp(p, RM, &mut cc);
    let r = t.exp(p, RM, &mut cc);
    Ok(to_biguint(&r.ceil()))
}

/// `n^a · ln(n) · factor`, rounded up (`ceil = true`) or down.
///
/// `n ≥ 2`, `a ≥ 0`, `factor > 0`.
pub fn round_pow_ln(n: &BigUint, a: f64, factor: f64, ceil: bool, max_digits: u64) -> Result<BigUint> {
    let ln_n = ln_big(n);
    let ln_value = a * ln_n + ln_n.ln() + factor.ln();
    check_digits(ln_value, max_digits)?;
    let p = precision_for(ln_value.max(ln_n)) + 64;
    let mut cc = consts();
    let nb = from_biguint(n, p);
    let ln = nb.ln(p, RM, &mut cc);
    let pow = if a == 0.0 {
        BigFloat::from_u64(1, p)
    } else {
        nb.pow(&BigFloat::from_f64(a, p), p, RM, &mut cc)
    };
    let v = pow.mul(&ln, p, RM).mul(&BigFloat::from_f64(factor, p), p, RM);
    Ok(to_biguint(&if ceil { v.ceil() } else { v.floor() }))
}

/// Whether a number with natural log `ln_value` stays under the digit cap.
pub fn fits(ln_value: f64, max_digits: u64) -> bool {
    check_digits(ln_value, max_digits).is_ok()
}

/// Serde adapter writing a `BigUint` as a decimal string.
pub mod decimal {
    use num_bigint::BigUint;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(n)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        text.trim()
            .parse::<BigUint>()
            .map_err(|e| D::Error::custom(format!("'{text}' is not a decimal integer: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_exp_small_values() {
        assert_eq!(ceil_exp(0.0, 10).unwrap(), BigUint::from(1u32));
        assert_eq!(ceil_exp(10.0, 10).unwrap(), BigUint::from(22027u32));
        assert_eq!(ceil_exp(3.0, 10).unwrap(), BigUint::from(21u32));
        assert_eq!(ceil_exp(6.0 * 6f64.ln(), 10).unwrap(), BigUint::from(46656u32));
        assert_eq!(ceil_exp(7.0 * 7f64.ln(), 10).unwrap(), BigUint::from(823543u32));
    }

    #[test]
    fn ceil_exp_matches_integer_power() {
        // e^(20 ln 20) = 20^20 up to the rounding of 20 ln 20 to f64.
        let x = 20.0 * 20f64.ln();
        let got = ceil_exp(x, 100).unwrap();
        let exact = BigUint::from(20u32).pow(20);
        let diff = if got > exact { &got - &exact } else { &exact - &got };
        assert!(ln_big(&diff) < ln_big(&exact) - 30.0);
    }

    #[test]
    fn round_pow_ln_matches_f64_when_small() {
        for n in [3u32, 55, 8104, 123_456] {
            let nb = BigUint::from(n);
            let want = ((n as f64).powi(2) * (n as f64).ln()).ceil();
            assert_eq!(round_pow_ln(&nb, 2.0, 1.0, true, 100).unwrap().to_f64().unwrap(), want);
            let want = ((n as f64) * (n as f64).ln()).floor();
            assert_eq!(round_pow_ln(&nb, 1.0, 1.0, false, 100).unwrap().to_f64().unwrap(), want);
        }
    }

    #[test]
    fn huge_values_round_trip_through_ln() {
        let n = ceil_exp(400.0, 1000).unwrap();
        assert!((ln_big(&n) - 400.0).abs() < 1e-9);
        let l = round_pow_ln(&n, 2.0, 1.0, true, 1000).unwrap();
        assert!((ln_big(&l) - (800.0 + 400f64.ln())).abs() < 1e-9);
        let r = ceil_exp_exp(5.0, 1000).unwrap();
        assert!((ln_big(&r) - 5f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn digit_cap_is_enforced() {
        assert!(matches!(ceil_exp(1e6, 1000), Err(Error::DigitCap { .. })));
        assert!(matches!(ceil_exp(f64::INFINITY, 1000), Err(Error::DigitCap { .. })));
        assert_eq!(digits_for_ln(10f64.ln() * 5.5), 6);
    }
}
