//! Superfunctions of `(z, θ)` with half-integer `z`-exponents, the two
//! superderivatives, substitution along maps with nilpotent displacement and
//! the superconformal conditions.
//!
//! A [`SuperFunction`] is `Σₑ (aₑ + θ bₑ) zᵉ` with Grassmann coefficients
//! written to the right of `θ`. Exponents are stored doubled, so `z^{1/2}` is
//! the formal symbol with `(z^{1/2})² = z`; no branch is ever chosen.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{Alphabet, GrassmannNumber, Parity};
use crate::poly::Poly;
use crate::scalar::{self, Scalar};

/// Which superderivative (and hence which superconformal condition) is used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    /// `D = ∂_θ + θ∂_z`
    Conv,
    /// `𝒟 = ∂_θ + θz∂_z`
    Alt,
}

impl std::str::FromStr for Structure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conv" => Ok(Structure::Conv),
            "alt" => Ok(Structure::Alt),
            _ => Err(Error::Parse(format!("unknown structure {s:?}"))),
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::Conv => "conv",
            Structure::Alt => "alt",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Component {
    even: GrassmannNumber,
    theta: GrassmannNumber,
}

impl Component {
    fn is_zero(&self) -> bool {
        self.even.is_zero() && self.theta.is_zero()
    }
}

#[derive(Clone, Debug)]
pub struct SuperFunction {
    alphabet: Arc<Alphabet>,
    terms: BTreeMap<i32, Component>,
}

impl PartialEq for SuperFunction {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl SuperFunction {
    pub fn zero(alphabet: &Arc<Alphabet>) -> Self {
        SuperFunction { alphabet: alphabet.clone(), terms: BTreeMap::new() }
    }

    /// `(even + θ·theta) z^{e2/2}`
    pub fn term(e2: i32, even: GrassmannNumber, theta: GrassmannNumber) -> Self {
        let mut f = Self::zero(even.alphabet());
        f.add_component(e2, even, theta);
        f
    }

    pub fn constant(g: GrassmannNumber) -> Self {
        let zero = GrassmannNumber::zero(g.alphabet());
        Self::term(0, g, zero)
    }

    pub fn scalar(alphabet: &Arc<Alphabet>, c: Scalar) -> Self {
        Self::constant(GrassmannNumber::scalar(alphabet, c))
    }

    pub fn one(alphabet: &Arc<Alphabet>) -> Self {
        Self::scalar(alphabet, Scalar::one())
    }

    /// `z^{e2/2}`
    pub fn z_pow(alphabet: &Arc<Alphabet>, e2: i32) -> Self {
        Self::term(e2, GrassmannNumber::one(alphabet), GrassmannNumber::zero(alphabet))
    }

    pub fn z(alphabet: &Arc<Alphabet>) -> Self {
        Self::z_pow(alphabet, 2)
    }

    pub fn theta(alphabet: &Arc<Alphabet>) -> Self {
        Self::term(0, GrassmannNumber::zero(alphabet), GrassmannNumber::one(alphabet))
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    fn add_component(&mut self, e2: i32, even: GrassmannNumber, theta: GrassmannNumber) {
        if even.is_zero() && theta.is_zero() {
            return;
        }
        let zero = GrassmannNumber::zero(&self.alphabet);
        let slot = self.terms.entry(e2).or_insert_with(|| Component { even: zero.clone(), theta: zero });
        slot.even = &slot.even + &even;
        slot.theta = &slot.theta + &theta;
        if slot.is_zero() {
            self.terms.remove(&e2);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(e2, even coefficient, θ coefficient)` in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i32, &GrassmannNumber, &GrassmannNumber)> {
        self.terms.iter().map(|(e, c)| (*e, &c.even, &c.theta))
    }

    pub fn coefficient(&self, e2: i32) -> (GrassmannNumber, GrassmannNumber) {
        match self.terms.get(&e2) {
            Some(c) => (c.even.clone(), c.theta.clone()),
            None => (GrassmannNumber::zero(&self.alphabet), GrassmannNumber::zero(&self.alphabet)),
        }
    }

    /// Doubled exponents that occur.
    pub fn exponents(&self) -> Vec<i32> {
        self.terms.keys().copied().collect()
    }

    pub fn has_half_integer_exponents(&self) -> bool {
        self.terms.keys().any(|e| e % 2 != 0)
    }

    /// The θ-independent part `Σ aₑ zᵉ`.
    pub fn even_component(&self) -> Self {
        self.project(|c| (c.even.clone(), GrassmannNumber::zero(&self.alphabet)))
    }

    /// The coefficient of θ, `Σ bₑ zᵉ`, as a θ-independent function.
    pub fn theta_component(&self) -> Self {
        self.project(|c| (c.theta.clone(), GrassmannNumber::zero(&self.alphabet)))
    }

    fn project(&self, f: impl Fn(&Component) -> (GrassmannNumber, GrassmannNumber)) -> Self {
        let mut out = Self::zero(&self.alphabet);
        for (&e, c) in &self.terms {
            let (a, b) = f(c);
            out.add_component(e, a, b);
        }
        out
    }

    /// Total parity, counting θ as odd.
    pub fn parity(&self) -> Parity {
        let mut p: Option<Parity> = None;
        for c in self.terms.values() {
            for q in [
                (!c.even.is_zero()).then(|| c.even.parity()),
                (!c.theta.is_zero()).then(|| c.theta.parity().flip()),
            ]
            .into_iter()
            .flatten()
            {
                p = Some(match p {
                    None => q,
                    Some(old) if old == q => q,
                    Some(_) => Parity::Mixed,
                });
            }
        }
        p.unwrap_or(Parity::Even)
    }

    /// Left multiplication by a constant Grassmann number.
    pub fn lmul(&self, g: &GrassmannNumber) -> Self {
        let gi = g.involution();
        self.project(|c| (g * &c.even, &gi * &c.theta))
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        self.project(|k| (k.even.scale(c), k.theta.scale(c)))
    }

    pub fn map_coefficients(&self, f: impl Fn(&Poly) -> Poly) -> Self {
        self.project(|k| (k.even.map_coefficients(&f), k.theta.map_coefficients(&f)))
    }

    /// Grade involution (negates every odd component, θ counted as odd).
    pub fn involution(&self) -> Self {
        self.project(|k| (k.even.involution(), -k.theta.involution()))
    }

    pub fn d_z(&self) -> Self {
        let mut out = Self::zero(&self.alphabet);
        for (&e, c) in &self.terms {
            if e != 0 {
                let f = scalar::frac(e as i64, 2);
                out.add_component(e - 2, c.even.scale(&f), c.theta.scale(&f));
            }
        }
        out
    }

    /// Left derivative in θ.
    pub fn d_theta(&self) -> Self {
        self.project(|c| (c.theta.clone(), GrassmannNumber::zero(&self.alphabet)))
    }

    /// `θ·f` (θ multiplied on the left).
    pub fn theta_times(&self) -> Self {
        self.project(|c| (GrassmannNumber::zero(&self.alphabet), c.even.clone()))
    }

    /// `D f = ∂_θ f + θ∂_z f`
    pub fn super_d(&self) -> Self {
        &self.d_theta() + &self.d_z().theta_times()
    }

    /// `𝒟 f = ∂_θ f + θz∂_z f`
    pub fn super_d_alt(&self) -> Self {
        &self.d_theta() + &(&Self::z(&self.alphabet) * &self.d_z()).theta_times()
    }

    pub fn superderivative(&self, s: Structure) -> Self {
        match s {
            Structure::Conv => self.super_d(),
            Structure::Alt => self.super_d_alt(),
        }
    }

    fn check_alphabet(&self, other: &Self) {
        assert!(
            Arc::ptr_eq(&self.alphabet, &other.alphabet) || self.alphabet == other.alphabet,
            "superfunctions over different generator lists"
        );
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(&self.alphabet);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// True when every θ-free coefficient has vanishing Grassmann body, so
    /// the function is nilpotent.
    pub fn is_nilpotent(&self) -> bool {
        self.terms.values().all(|c| c.even.body().is_zero())
    }

    /// Fractional power `(1 + u)^p` for nilpotent `u`, by the terminating
    /// binomial series.
    pub fn one_plus_pow(u: &Self, p: &Scalar) -> Result<Self> {
        if !u.is_nilpotent() {
            return Err(Error::NonNilpotent(u.to_string()));
        }
        let mut acc = Self::one(&u.alphabet);
        let mut power = Self::one(&u.alphabet);
        for j in 1..=u.alphabet.len() + 2 {
            power = &power * u;
            if power.is_zero() {
                return Ok(acc);
            }
            acc = &acc + &power.scale(&scalar::binomial(p, j));
        }
        Err(Error::NonNilpotent(u.to_string()))
    }

    /// Exact division by an even function with invertible leading monomial
    /// `c·z^{e}` plus a nilpotent remainder.
    pub fn try_div(&self, den: &Self) -> Result<Self> {
        let inv = ZPowers::new(den)?.pow(-2)?;
        Ok(self * &inv)
    }
}

/// Powers `(z')^e` of an even map component `z' = c·zᵐ + s` with nilpotent `s`.
pub struct ZPowers {
    alphabet: Arc<Alphabet>,
    lead_coeff: Scalar,
    lead_e2: i32,
    /// `uʲ` for `u = s / (c zᵐ)`, up to the last nonzero power.
    u_powers: Vec<SuperFunction>,
}

impl ZPowers {
    pub fn new(zmap: &SuperFunction) -> Result<Self> {
        let alphabet = zmap.alphabet.clone();
        let mut lead = None;
        for (&e, c) in &zmap.terms {
            let body = c.even.body();
            if body.is_zero() {
                continue;
            }
            let k = body.as_constant().ok_or_else(|| {
                Error::NonNilpotent(format!("non-constant body {body} at z^{}", scalar::half_str(e)))
            })?;
            if lead.is_some() {
                return Err(Error::NonNilpotent(format!("body is not a single monomial: {zmap}")));
            }
            lead = Some((e, k));
        }
        let (lead_e2, lead_coeff) =
            lead.ok_or_else(|| Error::NonNilpotent(format!("no invertible body in {zmap}")))?;
        let lead_fn = SuperFunction::z_pow(&alphabet, lead_e2).scale(&lead_coeff);
        let u = (zmap - &lead_fn) * SuperFunction::z_pow(&alphabet, -lead_e2).scale(&(Scalar::one() / &lead_coeff));
        debug_assert!(u.is_nilpotent());
        let mut u_powers = vec![SuperFunction::one(&alphabet)];
        loop {
            let next = u_powers.last().unwrap() * &u;
            if next.is_zero() {
                break;
            }
            if u_powers.len() > alphabet.len() + 2 {
                return Err(Error::NonNilpotent(u.to_string()));
            }
            u_powers.push(next);
        }
        Ok(ZPowers { alphabet, lead_coeff, lead_e2, u_powers })
    }

    /// `(z')^{e2/2}`
    pub fn pow(&self, e2: i32) -> Result<SuperFunction> {
        // (c zᵐ)^e (1+u)^e with e = e2/2
        let total2 = self.lead_e2 as i64 * e2 as i64;
        if total2 % 2 != 0 {
            return Err(Error::NonNilpotent(format!(
                "power z^{{{}·{}}} leaves the half-integer lattice",
                scalar::half_str(self.lead_e2),
                scalar::half_str(e2)
            )));
        }
        let c = scalar::pow_half(&self.lead_coeff, e2).ok_or_else(|| {
            Error::NonNilpotent(format!(
                "({})^{} is irrational",
                scalar::format(&self.lead_coeff),
                scalar::half_str(e2)
            ))
        })?;
        let p = scalar::frac(e2 as i64, 2);
        let mut series = SuperFunction::zero(&self.alphabet);
        for (j, uj) in self.u_powers.iter().enumerate() {
            series = &series + &uj.scale(&scalar::binomial(&p, j));
        }
        Ok(&SuperFunction::z_pow(&self.alphabet, (total2 / 2) as i32).scale(&c) * &series)
    }
}

/// A superspace coordinate change `(z, θ) ↦ (z′, θ′)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperMap {
    pub z: SuperFunction,
    pub theta: SuperFunction,
}

impl SuperMap {
    pub fn new(z: SuperFunction, theta: SuperFunction) -> Self {
        SuperMap { z, theta }
    }

    pub fn identity(alphabet: &Arc<Alphabet>) -> Self {
        SuperMap { z: SuperFunction::z(alphabet), theta: SuperFunction::theta(alphabet) }
    }

    /// Checks parities and the algebraic local-invertibility proxy: the body
    /// of `z′` is a nonzero rational multiple of `z`.
    pub fn validate(&self) -> Result<()> {
        if self.z.parity() != Parity::Even {
            return Err(Error::NotEven("z′ is not even"));
        }
        if !matches!(self.theta.parity(), Parity::Odd) {
            return Err(Error::Parse("θ′ is not odd".into()));
        }
        let zp = ZPowers::new(&self.z)?;
        if zp.lead_e2 != 2 {
            return Err(Error::NonNilpotent(format!("body of z′ is not c·z: {}", self.z)));
        }
        Ok(())
    }

    pub fn map_coefficients(&self, f: impl Fn(&Poly) -> Poly + Copy) -> Self {
        SuperMap { z: self.z.map_coefficients(f), theta: self.theta.map_coefficients(f) }
    }
}

/// `f(z′, θ′)`, expanded exactly through binomial series in the nilpotent
/// displacement of `z′`.
pub fn substitute(f: &SuperFunction, m: &SuperMap) -> Result<SuperFunction> {
    if f.is_zero() {
        return Ok(f.clone());
    }
    let powers = ZPowers::new(&m.z)?;
    let mut out = SuperFunction::zero(&f.alphabet);
    for (&e, c) in &f.terms {
        let p = powers.pow(e)?;
        out = &out + &p.lmul(&c.even);
        if !c.theta.is_zero() {
            out = &out + &(&m.theta * &p.lmul(&c.theta));
        }
    }
    Ok(out)
}

/// `Dz′ − θ′Dθ′` (conv) or `𝒟z′ − θ′z′𝒟θ′` (alt); zero iff superconformal.
pub fn check_superconformal(m: &SuperMap, s: Structure) -> SuperFunction {
    let dz = m.z.superderivative(s);
    let dth = m.theta.superderivative(s);
    match s {
        Structure::Conv => &dz - &(&m.theta * &dth),
        Structure::Alt => &dz - &(&(&m.theta * &m.z) * &dth),
    }
}

/// Componentwise residuals `(γ − τs, ∂_z g − s² + τ∂_zτ)` for
/// `z′ = g + θγ`, `θ′ = τ + θs` under the conventional structure.
pub fn component_conditions(m: &SuperMap) -> (SuperFunction, SuperFunction) {
    let g = m.z.even_component();
    let gamma = m.z.theta_component();
    let tau = m.theta.even_component();
    let s = m.theta.theta_component();
    let r1 = &gamma - &(&tau * &s);
    let r2 = &(&g.d_z() - &(&s * &s)) + &(&tau * &tau.d_z());
    (r1, r2)
}

/// `D(f∘m) − (Dθ′)·(D′f)∘m` (resp. the `𝒟` version).
pub fn chain_rule_check(m: &SuperMap, f: &SuperFunction, s: Structure) -> Result<SuperFunction> {
    let lhs = substitute(f, m)?.superderivative(s);
    let rhs = &m.theta.superderivative(s) * &substitute(&f.superderivative(s), m)?;
    Ok(&lhs - &rhs)
}

fn fmt_exp(e2: i32) -> String {
    scalar::half_str(e2)
}

impl fmt::Display for SuperFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (&e, c) in &self.terms {
            let zs = if e == 0 { String::new() } else { format!(" z^{}", fmt_exp(e)) };
            if !c.even.is_zero() {
                parts.push(format!("({}) ·{}", c.even, if zs.is_empty() { " 1".into() } else { zs.clone() }));
            }
            if !c.theta.is_zero() {
                parts.push(format!("({}) · θ{}", c.theta, zs));
            }
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl<'a> Add<&'a SuperFunction> for &'a SuperFunction {
    type Output = SuperFunction;
    fn add(self, rhs: &SuperFunction) -> SuperFunction {
        self.check_alphabet(rhs);
        let mut out = self.clone();
        for (&e, c) in &rhs.terms {
            out.add_component(e, c.even.clone(), c.theta.clone());
        }
        out
    }
}

impl<'a> Sub<&'a SuperFunction> for &'a SuperFunction {
    type Output = SuperFunction;
    fn sub(self, rhs: &SuperFunction) -> SuperFunction {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a SuperFunction> for &'a SuperFunction {
    type Output = SuperFunction;
    /// `(a + θb)(c + θd) = ac + θ(âd + bc)`
    fn mul(self, rhs: &SuperFunction) -> SuperFunction {
        self.check_alphabet(rhs);
        let mut out = SuperFunction::zero(&self.alphabet);
        for (&e1, x) in &self.terms {
            let ahat = x.even.involution();
            for (&e2, y) in &rhs.terms {
                let even = &x.even * &y.even;
                let theta = &(&ahat * &y.theta) + &(&x.theta * &y.even);
                out.add_component(e1 + e2, even, theta);
            }
        }
        out
    }
}

impl Neg for &SuperFunction {
    type Output = SuperFunction;
    fn neg(self) -> SuperFunction {
        self.scale(&-Scalar::one())
    }
}

impl Neg for SuperFunction {
    type Output = SuperFunction;
    fn neg(self) -> SuperFunction {
        -&self
    }
}

crate::forward_owned_binops!(SuperFunction; Add add, Sub sub, Mul mul);

impl Zero for SuperFunction {
    fn zero() -> Self {
        SuperFunction::zero(&Alphabet::standard())
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}
