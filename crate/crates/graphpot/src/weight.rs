//! Scalar backends for graph data.
//!
//! Graph weights, measures and field values are generic over [`Weight`] so
//! the same formulas run in double precision (`f64`) and, for golden tests
//! with rational data, exactly (`num_rational::BigRational`).

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

/// Scalar type usable as edge weight, vertex measure, or field value.
pub trait Weight:
    Clone + PartialOrd + Signed + ToPrimitive + fmt::Debug + fmt::Display + 'static
{
    /// Lossy view for reports and diagnostics.
    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Weight for T where
    T: Clone + PartialOrd + Signed + ToPrimitive + fmt::Debug + fmt::Display + 'static
{
}

/// Exact scalar used by the rational mode.
pub type Exact = BigRational;

/// 2^k as an exact rational, k may be negative.
pub fn exact_pow2(k: i64) -> Exact {
    let one = BigInt::from(1u8);
    if k >= 0 {
        BigRational::from_integer(one << (k as usize))
    } else {
        BigRational::new(one.clone(), one << ((-k) as usize))
    }
}

/// Exact rational from an integer.
pub fn exact_int(n: i64) -> Exact {
    BigRational::from_integer(BigInt::from(n))
}

/// Parses a scalar literal: either `p/q` (exact rational) or a plain
/// decimal. Decimal literals are converted exactly (`0.25` becomes `1/4`).
pub fn parse_exact(s: &str) -> Option<Exact> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q == BigInt::from(0u8) {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int: BigInt = if int.is_empty() || int == "-" {
            BigInt::from(0u8)
        } else {
            int.parse().ok()?
        };
        if !frac.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits = frac.len() as u32;
        let num: BigInt = if frac.is_empty() { BigInt::from(0u8) } else { frac.parse().ok()? };
        let scale = BigInt::from(10u8).pow(digits);
        let frac_part = BigRational::new(num, scale);
        let int_part = BigRational::from_integer(int);
        Some(if neg { int_part - frac_part } else { int_part + frac_part })
    } else {
        let n: BigInt = s.parse().ok()?;
        Some(BigRational::from_integer(n))
    }
}

/// Parses a scalar literal into `f64`, accepting the same `p/q` form.
pub fn parse_f64(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: f64 = p.trim().parse().ok()?;
        let q: f64 = q.trim().parse().ok()?;
        if q == 0.0 {
            return None;
        }
        return Some(p / q);
    }
    s.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow2_exact() {
        assert_eq!(exact_pow2(3), exact_int(8));
        assert_eq!(exact_pow2(-2) * exact_int(4), exact_int(1));
        assert_eq!(exact_pow2(0), exact_int(1));
    }

    #[test]
    fn parse_rational_literals() {
        assert_eq!(parse_exact("3/4").unwrap(), BigRational::new(3.into(), 4.into()));
        assert_eq!(parse_exact("0.25").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(parse_exact("-1.5").unwrap(), BigRational::new((-3).into(), 2.into()));
        assert_eq!(parse_exact("7").unwrap(), exact_int(7));
        assert!(parse_exact("1/0").is_none());
        assert_eq!(parse_f64("1/4").unwrap(), 0.25);
        assert_eq!(parse_f64("2.5").unwrap(), 2.5);
    }
}
