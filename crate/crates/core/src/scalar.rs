//! Exact rational scalars.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Scalar = BigRational;

pub fn int(n: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(n))
}

pub fn frac(p: i64, q: i64) -> Scalar {
    Scalar::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p/q"`, `"p"` or a signed integer string.
pub fn parse(s: &str) -> Result<Scalar> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(Error::DivisionByZero);
            }
            Ok(Scalar::new(p, q))
        }
        None => {
            let p: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Scalar::from_integer(p))
        }
    }
}

pub fn format(x: &Scalar) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn to_f64(x: &Scalar) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn checked_div(a: &Scalar, b: &Scalar) -> Result<Scalar> {
    if b.is_zero() {
        Err(Error::DivisionByZero)
    } else {
        Ok(a / b)
    }
}

/// Exact square root of a rational, if it is a perfect square.
pub fn sqrt_exact(x: &Scalar) -> Option<Scalar> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
        Some(Scalar::new(n, d))
    } else {
        None
    }
}

/// Generalized binomial coefficient C(p, j) for rational p.
pub fn binomial(p: &Scalar, j: usize) -> Scalar {
    let mut acc = Scalar::one();
    for i in 0..j {
        acc = acc * (p - int(i as i64)) / int(i as i64 + 1);
    }
    acc
}

/// `x^e` for a half-integer exponent `e = e2/2`, when the result is rational.
pub fn pow_half(x: &Scalar, e2: i32) -> Option<Scalar> {
    let base = if e2 % 2 == 0 { x.clone() } else { sqrt_exact(x)? };
    let n = if e2 % 2 == 0 { e2 / 2 } else { e2 };
    if base.is_zero() && n < 0 {
        return None;
    }
    Some(num::pow::Pow::pow(&base, n))
}

pub fn factorial(n: usize) -> Scalar {
    (1..=n).fold(Scalar::one(), |acc, i| acc * int(i as i64))
}

/// (2k-1)!! with the convention (-1)!! = 1.
pub fn double_factorial_odd(k: usize) -> Scalar {
    (1..=k).fold(Scalar::one(), |acc, i| acc * int(2 * i as i64 - 1))
}

/// Half-integer rendered from its doubled value: `3` -> `"3/2"`, `-2` -> `"-1"`.
pub fn half_str(doubled: i32) -> String {
    if doubled % 2 == 0 {
        (doubled / 2).to_string()
    } else {
        format!("{doubled}/2")
    }
}

pub fn parse_half(s: &str) -> Result<i32> {
    let x = parse(s)?;
    let d = x * int(2);
    if !d.is_integer() {
        return Err(Error::Parse(format!("not a half-integer: {s:?}")));
    }
    d.to_integer()
        .to_i32()
        .ok_or_else(|| Error::Parse(format!("half-integer out of range: {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse("3/6").unwrap(), frac(1, 2));
        assert_eq!(parse("-4").unwrap(), int(-4));
        assert_eq!(format(&frac(-3, 9)), "-1/3");
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
    }

    #[test]
    fn roots_and_binomials() {
        assert_eq!(sqrt_exact(&frac(9, 4)), Some(frac(3, 2)));
        assert_eq!(sqrt_exact(&frac(2, 1)), None);
        assert_eq!(binomial(&frac(1, 2), 2), frac(-1, 8));
        assert_eq!(pow_half(&frac(4, 1), -3), Some(frac(1, 8)));
        assert_eq!(double_factorial_odd(3), int(15));
        assert_eq!(parse_half("-3/2").unwrap(), -3);
        assert_eq!(half_str(-3), "-3/2");
    }
}
