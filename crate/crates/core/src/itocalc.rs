//! Symbolic Ito calculus for processes polynomial in `t` and Brownian values
//! `B⁽ⁱ⁾` with superfunction coefficients.
//!
//! Brownian values are commuting indeterminates at a single time; the rules
//! `(dt)² = dt·dB = 0`, `dB⁽ⁱ⁾dB⁽ʲ⁾ = δᵢⱼ dt` reduce every check to a
//! polynomial identity.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{self, Monomial, Poly, TIME};
use crate::scalar::{self, Scalar};
use crate::superspace::{substitute, SuperFunction, SuperMap};

/// A process `p(t, B⁽¹⁾..B⁽ᵇ⁾; z, θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ItoPoly {
    value: SuperFunction,
    brownians: usize,
}

impl ItoPoly {
    pub fn new(value: SuperFunction, brownians: usize) -> Self {
        ItoPoly { value, brownians }
    }

    pub fn value(&self) -> &SuperFunction {
        &self.value
    }

    pub fn brownians(&self) -> usize {
        self.brownians
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    /// Value at `t = 0`, `B = 0`.
    pub fn initial(&self) -> SuperFunction {
        self.value.map_coefficients(|p| Poly::constant(p.constant_term()))
    }

    pub fn degree_in_brownian(&self, i: usize) -> u32 {
        let mut d = 0;
        for (_, a, b) in self.value.terms() {
            for g in [a, b] {
                for (_, p) in g.terms() {
                    d = d.max(p.degree_in(poly::brownian(i)));
                }
            }
        }
        d
    }

    pub fn mul(&self, other: &ItoPoly) -> ItoPoly {
        ItoPoly::new(&self.value * &other.value, self.brownians.max(other.brownians))
    }
}

/// `dp = drift·dt + Σᵢ diffusionᵢ·dB⁽ⁱ⁾`
#[derive(Clone, Debug, PartialEq)]
pub struct ItoDifferential {
    pub drift: SuperFunction,
    pub diffusions: Vec<SuperFunction>,
}

impl ItoDifferential {
    pub fn is_zero(&self) -> bool {
        self.drift.is_zero() && self.diffusions.iter().all(SuperFunction::is_zero)
    }

    pub fn sub(&self, other: &ItoDifferential) -> Result<ItoDifferential> {
        if self.diffusions.len() != other.diffusions.len() {
            return Err(Error::Config("differentials with different Brownian dimensions".into()));
        }
        Ok(ItoDifferential {
            drift: &self.drift - &other.drift,
            diffusions: self.diffusions.iter().zip(&other.diffusions).map(|(a, b)| a - b).collect(),
        })
    }

    /// Quadratic covariation `dp·dq = Σᵢ pᵢqᵢ dt`.
    pub fn bracket(&self, other: &ItoDifferential) -> SuperFunction {
        let mut acc = SuperFunction::zero(self.drift.alphabet());
        for (a, b) in self.diffusions.iter().zip(&other.diffusions) {
            acc = &acc + &(a * b);
        }
        acc
    }

    pub fn to_report(&self) -> DifferentialReport {
        DifferentialReport {
            dt: term_list(&self.drift),
            db: self.diffusions.iter().map(term_list).collect(),
        }
    }
}

/// Residual wire form: one term list per differential; empty means zero.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct DifferentialReport {
    pub dt: Vec<String>,
    pub db: Vec<Vec<String>>,
}

fn term_list(f: &SuperFunction) -> Vec<String> {
    let mut out = Vec::new();
    for (e, a, b) in f.terms() {
        let zs = if e == 0 { String::new() } else { format!(" z^{}", scalar::half_str(e)) };
        if !a.is_zero() {
            out.push(format!("({a}){zs}"));
        }
        if !b.is_zero() {
            out.push(format!("({b}) θ{zs}"));
        }
    }
    out
}

/// Second-order Ito–Taylor differential: drift `∂_t p + ½Σ∂²_{Bⁱ}p`,
/// diffusion `∂_{Bⁱ}p`.
pub fn ito_d(p: &ItoPoly) -> ItoDifferential {
    let b = p.brownians;
    let dt = p.value.map_coefficients(|q| q.derivative(TIME));
    let mut drift = dt;
    let mut diffusions = Vec::with_capacity(b);
    let half = scalar::frac(1, 2);
    for i in 1..=b {
        let v = poly::brownian(i);
        let first = p.value.map_coefficients(|q| q.derivative(v));
        let second = first.map_coefficients(|q| q.derivative(v));
        drift = &drift + &second.scale(&half);
        diffusions.push(first);
    }
    ItoDifferential { drift, diffusions }
}

/// Gaussian moments: `B^{2k} ↦ (2k−1)!! tᵏ`, odd powers vanish, components
/// independent.
pub fn expectation(p: &ItoPoly) -> ItoPoly {
    let b = p.brownians;
    let value = p.value.map_coefficients(|q| {
        q.map_monomials(|m| {
            let mut t_exp = m.exponent(TIME);
            let mut factor = Scalar::from_integer(1.into());
            for i in 1..=b {
                let e = m.exponent(poly::brownian(i));
                if e % 2 == 1 {
                    return Poly::zero();
                }
                factor *= scalar::double_factorial_odd((e / 2) as usize);
                t_exp += e / 2;
            }
            let mut exps = vec![0u32; b + 1];
            exps[TIME] = t_exp;
            for (v, &e) in m.exponents().iter().enumerate().skip(b + 1) {
                exps.resize(v + 1, 0);
                exps[v] = e;
            }
            let mut mono = Monomial::one();
            for (v, &e) in exps.iter().enumerate() {
                if e > 0 {
                    mono = mono.mul(&Monomial::var(v, e));
                }
            }
            Poly::term(mono, factor)
        })
    });
    ItoPoly::new(value, b)
}

/// Drift and diffusion superfunctions of `(z′, θ′)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SdeSpec {
    pub drift: (SuperFunction, SuperFunction),
    pub diffusions: Vec<(SuperFunction, SuperFunction)>,
}

impl SdeSpec {
    pub fn brownians(&self) -> usize {
        self.diffusions.len()
    }

    pub fn has_half_integer_exponents(&self) -> bool {
        let all = std::iter::once(&self.drift).chain(&self.diffusions);
        all.into_iter().any(|(a, b)| a.has_half_integer_exponents() || b.has_half_integer_exponents())
    }

    /// The differential of each coordinate with the right-hand sides evaluated
    /// along `m`.
    pub fn evaluate_along(&self, m: &SuperMap) -> Result<(ItoDifferential, ItoDifferential)> {
        let mut z = ItoDifferential { drift: substitute(&self.drift.0, m)?, diffusions: Vec::new() };
        let mut th = ItoDifferential { drift: substitute(&self.drift.1, m)?, diffusions: Vec::new() };
        for (a, b) in &self.diffusions {
            z.diffusions.push(substitute(a, m)?);
            th.diffusions.push(substitute(b, m)?);
        }
        Ok((z, th))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionResidual {
    pub z: ItoDifferential,
    pub theta: ItoDifferential,
    /// Candidate at `t = 0` minus `(z, θ)`.
    pub initial: (SuperFunction, SuperFunction),
}

impl SolutionResidual {
    pub fn is_zero(&self) -> bool {
        self.z.is_zero() && self.theta.is_zero() && self.initial.0.is_zero() && self.initial.1.is_zero()
    }
}

/// `d(candidate) − sde(candidate)` for both coordinates.
pub fn verify_solution(z: &ItoPoly, theta: &ItoPoly, sde: &SdeSpec) -> Result<SolutionResidual> {
    let b = sde.brownians();
    if z.brownians != b || theta.brownians != b {
        return Err(Error::Config(format!("candidate uses {} Brownian components, SDE uses {b}", z.brownians)));
    }
    let m = SuperMap::new(z.value.clone(), theta.value.clone());
    let (ez, eth) = sde.evaluate_along(&m)?;
    let alph = z.value.alphabet();
    Ok(SolutionResidual {
        z: ito_d(z).sub(&ez)?,
        theta: ito_d(theta).sub(&eth)?,
        initial: (&z.initial() - &SuperFunction::z(alph), &theta.initial() - &SuperFunction::theta(alph)),
    })
}

/// `d(p) − (drift dt + Σ diffusionᵢ dBⁱ)`
pub fn differential_residual(p: &ItoPoly, drift: &SuperFunction, diffusions: &[SuperFunction]) -> Result<ItoDifferential> {
    ito_d(p).sub(&ItoDifferential { drift: drift.clone(), diffusions: diffusions.to_vec() })
}

/// How the classical rewriting is probed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RewriteVariant {
    /// `f = g − √κB`
    Standard,
    /// `f = g + √κB` (wrong sign)
    FlippedSign,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewriteResidual {
    pub drift: Poly,
    pub diffusion: Poly,
    /// `f` coincides with `g` and `df` with the Löwner drift (κ = 0 case).
    pub reduces_to_loewner: bool,
}

impl RewriteResidual {
    pub fn is_zero(&self) -> bool {
        self.drift.is_zero() && self.diffusion.is_zero()
    }
}

// formal symbols: g, B, U = 1/(g − √κB), W = 1/f when f is anything else
const SYM_G: usize = 0;
const SYM_B: usize = 1;
const SYM_U: usize = 2;
const SYM_W: usize = 3;

/// Checks that `df = (2/f)dt − √κ dB` follows from the Löwner equation
/// `dg = 2/(g − √κB) dt` for the given definition of `f`, treating the
/// reciprocal as an opaque unit.
pub fn classical_rewrite_check(k: &Scalar, variant: RewriteVariant) -> RewriteResidual {
    let g = Poly::var(SYM_G);
    let b = Poly::var(SYM_B);
    let kb = b.scale(k);
    let loewner_den = &g - &kb;
    let f = match variant {
        RewriteVariant::Standard => &g - &kb,
        RewriteVariant::FlippedSign => &g + &kb,
    };
    // dg = 2U dt, dB = dB
    let two_u = Poly::var(SYM_U).scale(&scalar::int(2));
    let drift = &(&f.derivative(SYM_G) * &two_u) + &f.derivative(SYM_B).derivative(SYM_B).scale(&scalar::frac(1, 2));
    let diffusion = f.derivative(SYM_B);
    let inv_f = if f == loewner_den { Poly::var(SYM_U) } else { Poly::var(SYM_W) };
    let target_drift = inv_f.scale(&scalar::int(2));
    let target_diffusion = Poly::constant(-k.clone());
    RewriteResidual {
        reduces_to_loewner: f == g && drift == two_u && diffusion.is_zero(),
        drift: &drift - &target_drift,
        diffusion: &diffusion - &target_diffusion,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::{Alphabet, GrassmannNumber, EPS, ETA};
    use crate::scalar::{frac, int};

    fn alph() -> std::sync::Arc<Alphabet> {
        Alphabet::standard()
    }

    fn sym(p: Poly) -> SuperFunction {
        SuperFunction::constant(GrassmannNumber::from_poly(&alph(), p))
    }

    fn b1() -> Poly {
        Poly::var(poly::brownian(1))
    }

    #[test]
    fn basic_differentials() {
        let d = ito_d(&ItoPoly::new(sym(b1().pow(2)), 1));
        assert_eq!(d.drift, SuperFunction::one(&alph()));
        assert_eq!(d.diffusions, vec![sym(b1().scale(&int(2)))]);
        let d = ito_d(&ItoPoly::new(sym(&Poly::var(TIME) * &b1()), 1));
        assert_eq!(d.drift, sym(b1()));
        assert_eq!(d.diffusions, vec![sym(Poly::var(TIME))]);
    }

    #[test]
    fn gaussian_moments() {
        let t = Poly::var(TIME);
        assert_eq!(expectation(&ItoPoly::new(sym(b1().pow(2)), 1)).value, sym(t.clone()));
        assert!(expectation(&ItoPoly::new(sym(b1().pow(3)), 1)).is_zero());
        assert_eq!(expectation(&ItoPoly::new(sym(b1().pow(4)), 1)).value, sym(t.pow(2).scale(&int(3))));
        let b2 = Poly::var(poly::brownian(2));
        let p = &b1().pow(2) * &b2.pow(2);
        assert_eq!(expectation(&ItoPoly::new(sym(p), 2)).value, sym(t.pow(2)));
    }

    #[test]
    fn rewrite_of_loewner_equation() {
        let k = frac(3, 2);
        assert!(classical_rewrite_check(&k, RewriteVariant::Standard).is_zero());
        let flipped = classical_rewrite_check(&k, RewriteVariant::FlippedSign);
        assert!(!flipped.drift.is_zero());
        assert_eq!(flipped.diffusion, Poly::constant(int(3)));
        let zero = classical_rewrite_check(&int(0), RewriteVariant::Standard);
        assert!(zero.is_zero() && zero.reduces_to_loewner);
    }

    #[test]
    fn covariation_is_dt_weighted() {
        let eta = GrassmannNumber::generator(&alph(), ETA).unwrap();
        let eps = GrassmannNumber::generator(&alph(), EPS).unwrap();
        let p = ItoPoly::new(SuperFunction::constant(eta.scale_poly(&b1())), 1);
        let q = ItoPoly::new(SuperFunction::constant(eps.scale_poly(&b1())), 1);
        assert_eq!(ito_d(&p).bracket(&ito_d(&q)), SuperFunction::constant(&eta * &eps));
    }
}
