//! Finitely generated Grassmann algebra over the polynomial coefficient ring.
//!
//! A [`GrassmannNumber`] maps generator subsets (bit sets over an ordered
//! [`Alphabet`]) to coefficients. Odd generators anticommute; even generators
//! (like the nilpotent `y`) commute with everything. Every generator squares to
//! zero.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::{self, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

impl Parity {
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::Mixed => Parity::Mixed,
        }
    }

    pub fn combine(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::Mixed, _) | (_, Parity::Mixed) => Parity::Mixed,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }
}

/// Ordered generator list. Names are unique; `even_mask` marks the commuting
/// nilpotent generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    even_mask: u64,
}

pub const Y: &str = "y";
pub const ETA: &str = "η";
pub const EPS: &str = "ε";
pub const ZETA: &str = "ζ";
pub const XI: &str = "ξ";

impl Alphabet {
    /// Generators given as `(name, is_odd)`.
    pub fn new<S: Into<String>>(gens: impl IntoIterator<Item = (S, bool)>) -> Result<Arc<Self>> {
        let mut names = Vec::new();
        let mut even_mask = 0u64;
        for (i, (name, odd)) in gens.into_iter().enumerate() {
            if i >= 64 {
                return Err(Error::TooManyGenerators(i + 1));
            }
            let name = name.into();
            if names.contains(&name) {
                return Err(Error::Parse(format!("duplicate generator {name:?}")));
            }
            names.push(name);
            if !odd {
                even_mask |= 1 << i;
            }
        }
        Ok(Arc::new(Alphabet { names, even_mask }))
    }

    /// `{y, η, ε, ζ, ξ}`: the even nilpotent walk parameter, the two odd walk
    /// parameters, an odd probe used for field test functions and one spare.
    pub fn standard() -> Arc<Self> {
        static STD: OnceLock<Arc<Alphabet>> = OnceLock::new();
        STD.get_or_init(|| {
            Alphabet::new([(Y, false), (ETA, true), (EPS, true), (ZETA, true), (XI, true)])
                .expect("standard alphabet")
        })
        .clone()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownGenerator(name.to_string()))
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    fn odd_mask(&self) -> u64 {
        let all = if self.names.len() == 64 { u64::MAX } else { (1u64 << self.names.len()) - 1 };
        all & !self.even_mask
    }

    pub fn is_odd(&self, i: usize) -> bool {
        self.even_mask & (1 << i) == 0
    }

    fn subset_parity(&self, subset: u64) -> bool {
        (subset & self.odd_mask()).count_ones() % 2 == 1
    }

    /// Sign of `e_a · e_b` when rewritten in sorted order; `None` if zero.
    fn product_sign(&self, a: u64, b: u64) -> Option<bool> {
        if a & b != 0 {
            return None;
        }
        let odd = self.odd_mask();
        let a_odd = a & odd;
        let mut b_odd = b & odd;
        let mut swaps = 0u32;
        while b_odd != 0 {
            let j = b_odd.trailing_zeros();
            b_odd &= b_odd - 1;
            swaps += (a_odd >> j >> 1).count_ones();
        }
        Some(swaps % 2 == 1)
    }

    fn same(a: &Arc<Self>, b: &Arc<Self>) -> bool {
        Arc::ptr_eq(a, b) || a == b
    }
}

#[derive(Clone, Debug)]
pub struct GrassmannNumber {
    alphabet: Arc<Alphabet>,
    terms: BTreeMap<u64, Poly>,
}

impl PartialEq for GrassmannNumber {
    fn eq(&self, other: &Self) -> bool {
        Alphabet::same(&self.alphabet, &other.alphabet) && self.terms == other.terms
    }
}

impl Eq for GrassmannNumber {}

impl GrassmannNumber {
    pub fn zero(alphabet: &Arc<Alphabet>) -> Self {
        GrassmannNumber { alphabet: alphabet.clone(), terms: BTreeMap::new() }
    }

    pub fn one(alphabet: &Arc<Alphabet>) -> Self {
        Self::from_poly(alphabet, Poly::one())
    }

    pub fn scalar(alphabet: &Arc<Alphabet>, c: Scalar) -> Self {
        Self::from_poly(alphabet, Poly::constant(c))
    }

    pub fn from_poly(alphabet: &Arc<Alphabet>, p: Poly) -> Self {
        let mut g = Self::zero(alphabet);
        g.add_term(0, p);
        g
    }

    pub fn generator(alphabet: &Arc<Alphabet>, name: &str) -> Result<Self> {
        let i = alphabet.index(name)?;
        let mut g = Self::zero(alphabet);
        g.add_term(1 << i, Poly::one());
        Ok(g)
    }

    /// Product of the named generators in the given order.
    pub fn monomial(alphabet: &Arc<Alphabet>, names: &[&str]) -> Result<Self> {
        let mut acc = Self::one(alphabet);
        for n in names {
            acc = acc.try_mul(&Self::generator(alphabet, n)?)?;
        }
        Ok(acc)
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    fn add_term(&mut self, subset: u64, p: Poly) {
        if p.is_zero() {
            return;
        }
        let slot = self.terms.entry(subset).or_default();
        *slot = &*slot + &p;
        if slot.is_zero() {
            self.terms.remove(&subset);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, &Poly)> {
        self.terms.iter().map(|(s, p)| (*s, p))
    }

    pub fn coefficient(&self, subset: u64) -> Poly {
        self.terms.get(&subset).cloned().unwrap_or_default()
    }

    pub fn body(&self) -> Poly {
        self.coefficient(0)
    }

    pub fn soul(&self) -> Self {
        let mut s = self.clone();
        s.terms.remove(&0);
        s
    }

    pub fn parity(&self) -> Parity {
        let mut even = false;
        let mut odd = false;
        for &s in self.terms.keys() {
            if self.alphabet.subset_parity(s) {
                odd = true;
            } else {
                even = true;
            }
        }
        match (even, odd) {
            (_, false) => Parity::Even,
            (false, true) => Parity::Odd,
            (true, true) => Parity::Mixed,
        }
    }

    pub fn even_part(&self) -> Self {
        self.filter(|s| !self.alphabet.subset_parity(s))
    }

    pub fn odd_part(&self) -> Self {
        self.filter(|s| self.alphabet.subset_parity(s))
    }

    fn filter(&self, keep: impl Fn(u64) -> bool) -> Self {
        GrassmannNumber {
            alphabet: self.alphabet.clone(),
            terms: self.terms.iter().filter(|(s, _)| keep(**s)).map(|(s, p)| (*s, p.clone())).collect(),
        }
    }

    /// Grade involution: negates the odd part. Moving an odd symbol past `a`
    /// turns `a` into `a.involution()`.
    pub fn involution(&self) -> Self {
        GrassmannNumber {
            alphabet: self.alphabet.clone(),
            terms: self
                .terms
                .iter()
                .map(|(s, p)| (*s, if self.alphabet.subset_parity(*s) { -p } else { p.clone() }))
                .collect(),
        }
    }

    /// Applies the involution `times` times.
    pub fn involution_pow(&self, times: usize) -> Self {
        if times % 2 == 1 {
            self.involution()
        } else {
            self.clone()
        }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if !Alphabet::same(&self.alphabet, &other.alphabet) {
            return Err(Error::AlphabetMismatch);
        }
        let mut out = Self::zero(&self.alphabet);
        for (&a, pa) in &self.terms {
            for (&b, pb) in &other.terms {
                if let Some(neg) = self.alphabet.product_sign(a, b) {
                    let p = pa * pb;
                    out.add_term(a | b, if neg { -p } else { p });
                }
            }
        }
        Ok(out)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if !Alphabet::same(&self.alphabet, &other.alphabet) {
            return Err(Error::AlphabetMismatch);
        }
        let mut out = self.clone();
        for (&s, p) in &other.terms {
            out.add_term(s, p.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        self.scale_poly(&Poly::constant(c.clone()))
    }

    pub fn scale_poly(&self, p: &Poly) -> Self {
        let mut out = Self::zero(&self.alphabet);
        for (&s, q) in &self.terms {
            out.add_term(s, q * p);
        }
        out
    }

    /// Applies `f` to every coefficient polynomial.
    pub fn map_coefficients(&self, f: impl Fn(&Poly) -> Poly) -> Self {
        let mut out = Self::zero(&self.alphabet);
        for (&s, q) in &self.terms {
            out.add_term(s, f(q));
        }
        out
    }

    fn require_even(&self) -> Result<()> {
        match self.parity() {
            Parity::Even => Ok(()),
            Parity::Odd => Err(Error::NotEven("odd")),
            Parity::Mixed => Err(Error::NotEven("mixed")),
        }
    }

    /// Inverse of an even element with a nonzero rational body, via the
    /// finite geometric series in the soul.
    pub fn inv(&self) -> Result<Self> {
        self.require_even()?;
        let body = self.body().as_constant().filter(|b| !b.is_zero()).ok_or(Error::NotInvertible)?;
        let binv = Scalar::one() / body;
        let u = self.soul().scale(&-binv.clone());
        let mut acc = Self::one(&self.alphabet);
        let mut power = Self::one(&self.alphabet);
        for _ in 0..=self.alphabet.len() {
            power = &power * &u;
            if power.is_zero() {
                break;
            }
            acc = &acc + &power;
        }
        Ok(acc.scale(&binv))
    }

    /// `(1 + s)^p = Σ C(p, j) sʲ` for an even element with body 1.
    pub fn pow(&self, p: &Scalar) -> Result<Self> {
        self.require_even()?;
        if !self.body().is_one() {
            return Err(Error::BodyNotOne);
        }
        let s = self.soul();
        let mut acc = Self::one(&self.alphabet);
        let mut power = Self::one(&self.alphabet);
        for j in 1..=self.alphabet.len() + 1 {
            power = &power * &s;
            if power.is_zero() {
                break;
            }
            acc = &acc + &power.scale(&scalar::binomial(p, j));
        }
        Ok(acc)
    }

    /// The nilpotency index of the soul: the least `n` with `soulⁿ = 0`.
    pub fn soul_nilpotency_index(&self) -> usize {
        let s = self.soul();
        let mut power = Self::one(&self.alphabet);
        let mut n = 0;
        while !power.is_zero() {
            power = &power * &s;
            n += 1;
        }
        n
    }

    pub fn to_repr(&self) -> Result<GrassmannRepr> {
        let mut out = Vec::new();
        for (&s, p) in &self.terms {
            let c = p.as_constant().ok_or_else(|| Error::NotRational(p.to_string()))?;
            let names = (0..self.alphabet.len())
                .filter(|i| s & (1 << i) != 0)
                .map(|i| self.alphabet.name(i).to_string())
                .collect();
            out.push((names, scalar::format(&c)));
        }
        Ok(GrassmannRepr(out))
    }

    pub fn from_repr(alphabet: &Arc<Alphabet>, repr: &GrassmannRepr) -> Result<Self> {
        let mut acc = Self::zero(alphabet);
        for (names, c) in &repr.0 {
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            let m = Self::monomial(alphabet, &names)?;
            acc = acc.try_add(&m.scale(&scalar::parse(c)?))?;
        }
        Ok(acc)
    }
}

/// Wire form: list of (generator names, rational string) pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrassmannRepr(pub Vec<(Vec<String>, String)>);

impl fmt::Display for GrassmannNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (&s, p)) in self.terms.iter().enumerate() {
            let gens: String = (0..self.alphabet.len())
                .filter(|k| s & (1 << k) != 0)
                .map(|k| self.alphabet.name(k))
                .collect();
            let single = p.terms().count() == 1;
            let coeff = if single {
                let (m, c) = p.terms().next().unwrap();
                if m.is_one() {
                    Some(c.clone())
                } else {
                    None
                }
            } else {
                None
            };
            match coeff {
                Some(c) => {
                    let neg = c.is_negative();
                    if i > 0 {
                        write!(f, "{}", if neg { " - " } else { " + " })?;
                    } else if neg {
                        write!(f, "-")?;
                    }
                    let a = c.abs();
                    if gens.is_empty() {
                        write!(f, "{}", scalar::format(&a))?;
                    } else if a.is_one() {
                        write!(f, "{gens}")?;
                    } else {
                        write!(f, "{}{gens}", scalar::format(&a))?;
                    }
                }
                None => {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "({p}){gens}")?;
                }
            }
        }
        Ok(())
    }
}

impl<'a> Mul<&'a GrassmannNumber> for &'a GrassmannNumber {
    type Output = GrassmannNumber;
    fn mul(self, rhs: &GrassmannNumber) -> GrassmannNumber {
        self.try_mul(rhs).expect("Grassmann numbers over different generator lists")
    }
}

impl<'a> Add<&'a GrassmannNumber> for &'a GrassmannNumber {
    type Output = GrassmannNumber;
    fn add(self, rhs: &GrassmannNumber) -> GrassmannNumber {
        self.try_add(rhs).expect("Grassmann numbers over different generator lists")
    }
}

impl<'a> Sub<&'a GrassmannNumber> for &'a GrassmannNumber {
    type Output = GrassmannNumber;
    fn sub(self, rhs: &GrassmannNumber) -> GrassmannNumber {
        self + &(-rhs)
    }
}

impl Neg for &GrassmannNumber {
    type Output = GrassmannNumber;
    fn neg(self) -> GrassmannNumber {
        self.map_coefficients(|p| -p)
    }
}

impl Neg for GrassmannNumber {
    type Output = GrassmannNumber;
    fn neg(self) -> GrassmannNumber {
        -&self
    }
}

crate::forward_owned_binops!(GrassmannNumber; Add add, Sub sub, Mul mul);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{frac, int};

    fn g(name: &str) -> GrassmannNumber {
        GrassmannNumber::generator(&Alphabet::standard(), name).unwrap()
    }

    fn one() -> GrassmannNumber {
        GrassmannNumber::one(&Alphabet::standard())
    }

    #[test]
    fn nilpotent_and_anticommuting() {
        assert!((&g(ETA) * &g(ETA)).is_zero());
        assert_eq!(&g(EPS) * &g(ETA), -(&g(ETA) * &g(EPS)));
        assert_eq!(&g(Y) * &g(ETA), &g(ETA) * &g(Y));
        assert!((&g(Y) * &g(Y)).is_zero());
    }

    /// Subset-convolution oracle: expands products generator by generator.
    fn oracle_mul(a: &GrassmannNumber, b: &GrassmannNumber) -> GrassmannNumber {
        let alph = a.alphabet().clone();
        let mut out = GrassmannNumber::zero(&alph);
        for (sa, pa) in a.terms() {
            for (sb, pb) in b.terms() {
                // write e_sa e_sb as a word and bubble-sort it, tracking sign
                let mut word: Vec<usize> = (0..alph.len()).filter(|i| sa & (1 << i) != 0).collect();
                word.extend((0..alph.len()).filter(|i| sb & (1 << i) != 0));
                let mut sign = 1i64;
                let mut zero = false;
                for i in 0..word.len() {
                    for j in 0..word.len() - 1 - i {
                        if word[j] == word[j + 1] {
                            zero = true;
                        }
                        if word[j] > word[j + 1] {
                            if alph.is_odd(word[j]) && alph.is_odd(word[j + 1]) {
                                sign = -sign;
                            }
                            word.swap(j, j + 1);
                        }
                    }
                }
                if zero || word.windows(2).any(|w| w[0] == w[1]) {
                    continue;
                }
                let subset = word.iter().fold(0u64, |s, &i| s | (1 << i));
                let p = (pa * pb).scale(&int(sign));
                out.add_term(subset, p);
            }
        }
        out
    }

    #[test]
    fn product_matches_oracle() {
        let ee = &g(EPS) * &g(ETA);
        let a = &one() + &ee;
        let b = &one() - &ee;
        assert_eq!(oracle_mul(&a, &b), one());
        assert_eq!(&a * &b, one());
        let x = &(&g(ETA) + &g(Y)) + &(&g(ZETA) * &g(EPS)).scale(&frac(3, 2));
        let w = &g(EPS) - &(&g(Y) * &g(XI));
        assert_eq!(&x * &w, oracle_mul(&x, &w));
    }

    #[test]
    fn body_soul_parity() {
        let ee = &g(EPS) * &g(ETA);
        let a = &GrassmannNumber::scalar(&Alphabet::standard(), int(3)) + &ee.scale(&int(2));
        assert_eq!(a.body(), Poly::constant(int(3)));
        assert_eq!(a.soul(), ee.scale(&int(2)));
        assert_eq!((&g(ETA) + &g(EPS)).parity(), Parity::Odd);
        assert_eq!((&one() + &g(ETA)).parity(), Parity::Mixed);
        assert_eq!(g(Y).parity(), Parity::Even);
        assert_eq!(g(Y).soul(), g(Y));
        assert!(g(Y).body().is_zero());
    }

    #[test]
    fn inverse_and_powers() {
        let ee = &g(EPS) * &g(ETA);
        let a = &one() + &ee;
        assert_eq!(a.inv().unwrap(), &one() - &ee);
        assert_eq!(one().inv().unwrap(), one());
        let r = a.pow(&frac(1, 2)).unwrap();
        assert_eq!(r, &one() + &ee.scale(&frac(1, 2)));
        assert_eq!(&r * &r, a);
        assert!(g(ETA).inv().is_err());
        assert!(ee.inv().is_err());
        assert!(GrassmannNumber::scalar(&Alphabet::standard(), int(2)).pow(&frac(1, 2)).is_err());
        let mixed = &one() + &g(ETA);
        assert_eq!(mixed.inv(), Err(Error::NotEven("mixed")));
    }

    #[test]
    fn mismatched_alphabets_rejected() {
        let other = Alphabet::new([("a", true)]).unwrap();
        let a = GrassmannNumber::generator(&other, "a").unwrap();
        assert_eq!(a.try_mul(&g(ETA)), Err(Error::AlphabetMismatch));
    }

    #[test]
    fn repr_roundtrip() {
        let x = &(&g(EPS) * &g(ETA)).scale(&frac(-3, 4)) + &GrassmannNumber::scalar(&Alphabet::standard(), int(2));
        let r = x.to_repr().unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: GrassmannRepr = serde_json::from_str(&json).unwrap();
        assert_eq!(GrassmannNumber::from_repr(&Alphabet::standard(), &back).unwrap(), x);
    }
}
