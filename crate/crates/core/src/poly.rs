//! Commutative polynomials over exact rationals.
//!
//! This is the coefficient ring underneath every Grassmann number. Its
//! indeterminates are even, commuting symbols: the time `t` (variable 0) and
//! the Brownian values `B⁽ⁱ⁾` (variable `i`, 1-based). Other indices are free
//! for formal symbols.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{One, Signed, Zero};

use crate::scalar::{self, Scalar};

pub const TIME: usize = 0;

pub fn brownian(i: usize) -> usize {
    assert!(i >= 1, "Brownian components are 1-based");
    i
}

/// Exponent vector with trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: usize, e: u32) -> Self {
        let mut m = vec![0; v + 1];
        m[v] = e;
        Monomial(m).trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
        self
    }

    pub fn exponent(&self, v: usize) -> u32 {
        self.0.get(v).copied().unwrap_or(0)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let n = self.0.len().max(other.0.len());
        Monomial((0..n).map(|i| self.exponent(i) + other.exponent(i)).collect())
    }

    fn with_exponent(&self, v: usize, e: u32) -> Monomial {
        let mut m = self.0.clone();
        if m.len() <= v {
            m.resize(v + 1, 0);
        }
        m[v] = e;
        Monomial(m).trimmed()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Scalar>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(Scalar::one())
    }

    pub fn constant(c: Scalar) -> Self {
        Poly::term(Monomial::one(), c)
    }

    pub fn var(v: usize) -> Self {
        Poly::term(Monomial::var(v, 1), Scalar::one())
    }

    pub fn term(m: Monomial, c: Scalar) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.constant_term().is_one()
    }

    pub fn constant_term(&self) -> Scalar {
        self.terms.get(&Monomial::one()).cloned().unwrap_or_else(Scalar::zero)
    }

    /// The value as a plain rational, if no indeterminate occurs.
    pub fn as_constant(&self) -> Option<Scalar> {
        match self.terms.len() {
            0 => Some(Scalar::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_else(Scalar::zero)
    }

    fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Scalar) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect(),
        }
    }

    pub fn derivative(&self, v: usize) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e > 0 {
                out.add_term(m.with_exponent(v, e - 1), c * scalar::int(e as i64));
            }
        }
        out
    }

    pub fn degree_in(&self, v: usize) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    /// Substitutes `value` for the indeterminate `v`.
    pub fn substitute(&self, v: usize, value: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            let rest = Poly::term(m.with_exponent(v, 0), c.clone());
            out = out + rest * value.pow(e);
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Rewrites every monomial through `f`, which returns a replacement
    /// polynomial for each monomial (times its coefficient).
    pub fn map_monomials(&self, f: impl Fn(&Monomial) -> Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            for (m2, c2) in f(m).terms {
                out.add_term(m2, c2 * c);
            }
        }
        out
    }

    pub fn evaluate(&self, values: &[Scalar]) -> Scalar {
        let mut acc = Scalar::zero();
        for (m, c) in &self.terms {
            let mut x = c.clone();
            for (v, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    x *= num::pow::Pow::pow(&values[v], e);
                }
            }
            acc += x;
        }
        acc
    }
}

pub fn var_name(v: usize) -> String {
    match v {
        TIME => "t".to_string(),
        1 => "B".to_string(),
        v => format!("B{v}"),
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            if i > 0 {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            } else if neg {
                write!(f, "-")?;
            }
            let a = c.abs();
            let vars: Vec<String> = m
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| {
                    if e == 1 {
                        var_name(v)
                    } else {
                        format!("{}^{}", var_name(v), e)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{}", scalar::format(&a))?;
            } else if a.is_one() {
                write!(f, "{}", vars.join("·"))?;
            } else {
                write!(f, "{}·{}", scalar::format(&a), vars.join("·"))?;
            }
        }
        Ok(())
    }
}

impl<'a> Add<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl<'a> Mul<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&-Scalar::one())
    }
}

crate::forward_owned_binops!(Poly; Add add, Sub sub, Mul mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

impl From<Scalar> for Poly {
    fn from(c: Scalar) -> Self {
        Poly::constant(c)
    }
}
