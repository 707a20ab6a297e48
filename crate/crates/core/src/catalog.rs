//! Concrete walks, stochastic equations and closed-form solutions used as
//! fixtures and reference data.
//!
//! Everything is a function of the rational sample `k = √κ`. Hand-written
//! equations here are kept independent of [`crate::linkmaps::build_sde`] so
//! the two can be compared.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grassmann::{Alphabet, GrassmannNumber, EPS, ETA, Y};
use crate::itocalc::{ItoPoly, SdeSpec};
use crate::linkmaps::WalkSpec;
use crate::poly::{self, Poly, TIME};
use crate::scalar::{frac, int, Scalar};
use crate::superalg::{AlgebraElement, Mode, Sector};
use crate::superspace::{substitute, Structure, SuperFunction, SuperMap};

/// `(c, Δ)` at which `−2L₋₂ + (κ/2)L₋₁²` is singular.
pub fn classical_locus(k: &Scalar) -> (Scalar, Scalar) {
    classical_locus_kappa(&(k * k))
}

/// Same locus parametrised by `κ`, for values with irrational `√κ`.
pub fn classical_locus_kappa(kappa: &Scalar) -> (Scalar, Scalar) {
    let kappa = kappa.clone();
    let four = int(4) - &kappa;
    let c = int(1) - int(3) * &four * &four / (int(2) * &kappa);
    let delta = (int(6) - &kappa) / (int(2) * &kappa);
    (c, delta)
}

/// Central charge shared by both super walks.
pub fn super_central_charge(k: &Scalar) -> Scalar {
    let kappa = k * k;
    frac(15, 2) - int(3) * (&kappa + int(1) / &kappa)
}

/// Locus of the NS walk (the `κ(Δ+½) = 1` branch).
pub fn ns_locus(k: &Scalar) -> (Scalar, Scalar) {
    let kappa = k * k;
    (super_central_charge(k), (int(2) - &kappa) / (int(2) * &kappa))
}

/// Locus of the Ramond walk.
pub fn ramond_locus(k: &Scalar) -> (Scalar, Scalar) {
    let kappa = k * k;
    (super_central_charge(k), (int(6) * &kappa - int(3)) / int(16))
}

/// NS level-3/2 condition `(2Δ+1)c = 3Δ(3−2Δ)`, solved for `c`.
pub fn ns_singular_c(delta: &Scalar) -> Option<Scalar> {
    let den = int(2) * delta + int(1);
    (!num::Zero::is_zero(&den)).then(|| int(3) * delta * (int(3) - int(2) * delta) / den)
}

/// Ramond level-1 condition `(16Δ+3)c = 8Δ(9−16Δ)`, solved for `c`.
pub fn ramond_singular_c(delta: &Scalar) -> Option<Scalar> {
    let den = int(16) * delta + int(3);
    (!num::Zero::is_zero(&den)).then(|| int(8) * delta * (int(9) - int(16) * delta) / den)
}

/// Virasoro level-2 condition at fixed `Δ`: `c = 2Δ(5 − 8Δ)/(2Δ + 1)`.
pub fn virasoro_level2_c(delta: &Scalar) -> Option<Scalar> {
    let den = int(2) * delta + int(1);
    (!num::Zero::is_zero(&den)).then(|| int(2) * delta * (int(5) - int(8) * delta) / den)
}

fn alph() -> Arc<Alphabet> {
    Alphabet::standard()
}

fn gm(names: &[&str], coeff: Poly) -> GrassmannNumber {
    GrassmannNumber::monomial(&alph(), names).expect("standard generator").scale_poly(&coeff)
}

fn konst(x: Scalar) -> Poly {
    Poly::constant(x)
}

fn t() -> Poly {
    Poly::var(TIME)
}

fn b() -> Poly {
    Poly::var(poly::brownian(1))
}

/// `g · z^{e2/2}`
fn ev(e2: i32, g: GrassmannNumber) -> SuperFunction {
    SuperFunction::term(e2, g, GrassmannNumber::zero(&alph()))
}

/// `θ g · z^{e2/2}`
fn th(e2: i32, g: GrassmannNumber) -> SuperFunction {
    SuperFunction::term(e2, GrassmannNumber::zero(&alph()), g)
}

fn sum(fs: impl IntoIterator<Item = SuperFunction>) -> SuperFunction {
    fs.into_iter().fold(SuperFunction::zero(&alph()), |a, f| &a + &f)
}

fn mode(sector: Sector, c: &Scalar, g: GrassmannNumber, m: Mode) -> AlgebraElement {
    AlgebraElement::mode(sector, c.clone(), g, m).expect("mode valid in sector")
}

fn add(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement {
    a.try_add(&b).expect("same sector")
}

/// `α₀ = −yη G₋₃/₂`, `β = k(yL₋₁ + ηG₋₁/₂)` with `y² = 0`.
pub fn ns_walk(k: &Scalar, structure: Structure, c: Scalar, delta: Scalar) -> WalkSpec {
    let s = Sector::NeveuSchwarz;
    let alpha0 = mode(s, &c, gm(&[Y, ETA], konst(int(-1))), Mode::g2(-3));
    let beta = add(mode(s, &c, gm(&[Y], konst(k.clone())), Mode::l(-1)), mode(s, &c, gm(&[ETA], konst(k.clone())), Mode::g2(-1)));
    WalkSpec { sector: s, structure, c, delta, k: k.clone(), alpha0, beta: vec![beta] }
}

/// `α₀ = −½εη L₋₁`, `β = k(εG₋₁ + ηG₀)`.
pub fn ramond_walk(k: &Scalar, structure: Structure, c: Scalar, delta: Scalar) -> WalkSpec {
    let s = Sector::Ramond;
    let alpha0 = mode(s, &c, gm(&[EPS, ETA], konst(frac(-1, 2))), Mode::l(-1));
    let beta = add(mode(s, &c, gm(&[EPS], konst(k.clone())), Mode::g(-1)), mode(s, &c, gm(&[ETA], konst(k.clone())), Mode::g(0)));
    WalkSpec { sector: s, structure, c, delta, k: k.clone(), alpha0, beta: vec![beta] }
}

/// `α₀ = −2L₋₂`, `β = kL₋₁`, so that `α = −2L₋₂ + (κ/2)L₋₁²`.
pub fn classical_walk(k: &Scalar, c: Scalar, delta: Scalar) -> WalkSpec {
    let s = Sector::Virasoro;
    let alpha0 = mode(s, &c, gm(&[], konst(int(-2))), Mode::l(-2));
    let beta = mode(s, &c, gm(&[], konst(k.clone())), Mode::l(-1));
    WalkSpec { sector: s, structure: Structure::Conv, c, delta, k: k.clone(), alpha0, beta: vec![beta] }
}

/// The four (walk, structure) configurations with closed-form solutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolutionId {
    NsConv,
    RamondConv,
    RamondAlt,
    NsAlt,
}

impl SolutionId {
    pub const ALL: [SolutionId; 4] = [SolutionId::NsConv, SolutionId::RamondConv, SolutionId::RamondAlt, SolutionId::NsAlt];

    pub fn name(self) -> &'static str {
        match self {
            SolutionId::NsConv => "ns-conv",
            SolutionId::RamondConv => "r-conv",
            SolutionId::RamondAlt => "r-alt",
            SolutionId::NsAlt => "ns-alt",
        }
    }

    pub fn sector(self) -> Sector {
        match self {
            SolutionId::NsConv | SolutionId::NsAlt => Sector::NeveuSchwarz,
            SolutionId::RamondConv | SolutionId::RamondAlt => Sector::Ramond,
        }
    }

    pub fn structure(self) -> Structure {
        match self {
            SolutionId::NsConv | SolutionId::RamondConv => Structure::Conv,
            SolutionId::RamondAlt | SolutionId::NsAlt => Structure::Alt,
        }
    }

    /// The walk driving this configuration, placed on its singular locus.
    pub fn walk(self, k: &Scalar) -> WalkSpec {
        match self.sector() {
            Sector::NeveuSchwarz => {
                let (c, d) = ns_locus(k);
                ns_walk(k, self.structure(), c, d)
            }
            _ => {
                let (c, d) = ramond_locus(k);
                ramond_walk(k, self.structure(), c, d)
            }
        }
    }
}

impl fmt::Display for SolutionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolutionId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SolutionId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown solution {s:?} (expected ns-conv, r-conv, r-alt or ns-alt)")))
    }
}

/// Hand-written SDE right-hand sides for each configuration.
pub fn reference_sde(id: SolutionId, k: &Scalar) -> SdeSpec {
    let kappa = k * k;
    let mk = -k.clone();
    let (drift, diffusion) = match id {
        SolutionId::NsConv => (
            (th(-2, gm(&[Y, ETA], konst(int(1)))), ev(-2, gm(&[Y, ETA], konst(int(1))))),
            (
                sum([ev(0, gm(&[Y], konst(mk.clone()))), th(0, gm(&[ETA], konst(mk.clone())))]),
                ev(0, gm(&[ETA], konst(mk))),
            ),
        ),
        SolutionId::RamondConv => (
            (ev(0, gm(&[EPS, ETA], konst(frac(1, 2)))), th(-2, gm(&[EPS, ETA], konst(&kappa / int(2))))),
            (
                sum([th(-1, gm(&[EPS], konst(mk.clone()))), th(1, gm(&[ETA], konst(mk.clone())))]),
                sum([ev(-1, gm(&[EPS], konst(mk.clone()))), ev(1, gm(&[ETA], konst(mk)))]),
            ),
        ),
        SolutionId::RamondAlt => (
            (
                ev(0, gm(&[EPS, ETA], konst(frac(1, 2)))),
                th(-2, gm(&[EPS, ETA], konst((&kappa - frac(1, 2)) / int(2)))),
            ),
            (
                sum([th(2, gm(&[ETA], konst(mk.clone()))), th(0, gm(&[EPS], konst(mk.clone())))]),
                sum([ev(0, gm(&[ETA], konst(mk.clone()))), ev(-2, gm(&[EPS], konst(mk)))]),
            ),
        ),
        SolutionId::NsAlt => (
            (th(-1, gm(&[Y, ETA], konst(int(1)))), ev(-3, gm(&[Y, ETA], konst(int(1) - &kappa / int(2))))),
            (
                sum([th(1, gm(&[ETA], konst(mk.clone()))), ev(0, gm(&[Y], konst(mk.clone())))]),
                sum([th(-2, gm(&[Y], konst(k / int(2)))), ev(-1, gm(&[ETA], konst(mk)))]),
            ),
        ),
    };
    SdeSpec { drift, diffusions: vec![diffusion] }
}

/// A change of variables along a solution: `value` is an expression in
/// `(z′, θ′, t, B)` which must satisfy `d value = drift dt + diffusion dB`
/// (right-hand sides also in `z′, θ′`) and equal `closed_form`.
#[derive(Clone, Debug)]
pub struct Intermediate {
    pub name: &'static str,
    pub value: SuperFunction,
    pub drift: SuperFunction,
    pub diffusion: SuperFunction,
    /// Extra term not routed through the solution (the initial `θ` of some
    /// closed forms) plus the part in `z′, θ′`.
    pub closed_form: (SuperFunction, SuperFunction),
}

#[derive(Clone, Debug)]
pub struct ClosedFormSolution {
    pub id: SolutionId,
    pub sde: SdeSpec,
    pub z: ItoPoly,
    pub theta: ItoPoly,
    pub intermediates: Vec<Intermediate>,
}

impl ClosedFormSolution {
    pub fn map(&self) -> SuperMap {
        SuperMap::new(self.z.value().clone(), self.theta.value().clone())
    }

    /// Evaluates an expression in `(z′, θ′)` along the solution.
    pub fn along(&self, f: &SuperFunction) -> Result<ItoPoly> {
        Ok(ItoPoly::new(substitute(f, &self.map())?, 1))
    }
}

/// Closed-form solution of the configuration's SDE, with the intermediate
/// substitutions used to derive it.
pub fn solution(id: SolutionId, k: &Scalar) -> ClosedFormSolution {
    let kappa = k * k;
    let kb = || b().scale(k);
    let mkb = || b().scale(&-k.clone());
    let zero = || SuperFunction::zero(&alph());
    let z = || SuperFunction::z(&alph());
    let theta = || SuperFunction::theta(&alph());
    let (zs, ths, intermediates) = match id {
        SolutionId::NsConv => (
            sum([z(), th(-2, gm(&[Y, ETA], t())), ev(0, gm(&[Y], mkb())), th(0, gm(&[ETA], mkb()))]),
            sum([theta(), ev(-2, gm(&[Y, ETA], t())), ev(0, gm(&[ETA], mkb()))]),
            Vec::new(),
        ),
        SolutionId::RamondConv => (
            sum([z(), ev(0, gm(&[EPS, ETA], t().scale(&frac(1, 2)))), th(-1, gm(&[EPS], mkb())), th(1, gm(&[ETA], mkb()))]),
            sum([
                theta(),
                ev(-1, gm(&[EPS], mkb())),
                ev(1, gm(&[ETA], mkb())),
                th(-2, gm(&[EPS, ETA], b().pow(2).scale(&(&kappa / int(2))))),
            ]),
            vec![
                Intermediate {
                    name: "w",
                    value: sum([z(), th(-1, gm(&[EPS], kb())), th(1, gm(&[ETA], kb()))]),
                    drift: ev(0, gm(&[EPS, ETA], konst(frac(1, 2)))),
                    diffusion: zero(),
                    closed_form: (sum([z(), ev(0, gm(&[EPS, ETA], t().scale(&frac(1, 2))))]), zero()),
                },
                Intermediate {
                    name: "chi",
                    value: sum([theta(), ev(-1, gm(&[EPS], kb())), ev(1, gm(&[ETA], kb()))]),
                    drift: th(-2, gm(&[EPS, ETA], konst(-&kappa / int(2)))),
                    diffusion: th(-2, gm(&[EPS, ETA], b().scale(&-kappa.clone()))),
                    closed_form: (theta(), th(-2, gm(&[EPS, ETA], b().pow(2).scale(&(-&kappa / int(2)))))),
                },
            ],
        ),
        SolutionId::RamondAlt => (
            sum([z(), ev(0, gm(&[EPS, ETA], t().scale(&frac(1, 2)))), th(2, gm(&[ETA], mkb())), th(0, gm(&[EPS], mkb()))]),
            sum([
                theta(),
                th(-2, gm(&[EPS, ETA], &t().scale(&frac(-1, 4)) + &b().pow(2).scale(&(&kappa / int(2))))),
                ev(0, gm(&[ETA], mkb())),
                ev(-2, gm(&[EPS], mkb())),
            ]),
            vec![
                Intermediate {
                    name: "w",
                    value: sum([z(), th(2, gm(&[ETA], kb())), th(0, gm(&[EPS], kb()))]),
                    drift: ev(0, gm(&[EPS, ETA], konst(frac(1, 2)))),
                    diffusion: zero(),
                    closed_form: (sum([z(), ev(0, gm(&[EPS, ETA], t().scale(&frac(1, 2))))]), zero()),
                },
                Intermediate {
                    name: "chi",
                    value: sum([
                        theta(),
                        ev(0, gm(&[ETA], kb())),
                        ev(-2, gm(&[EPS], kb())),
                        th(-2, gm(&[EPS, ETA], b().pow(2).scale(&(&kappa / int(2))))),
                    ]),
                    drift: th(-2, gm(&[EPS, ETA], konst(frac(-1, 4)))),
                    diffusion: zero(),
                    closed_form: (theta(), th(-2, gm(&[EPS, ETA], t().scale(&frac(-1, 4))))),
                },
            ],
        ),
        SolutionId::NsAlt => (
            sum([z(), th(-1, gm(&[Y, ETA], t())), th(1, gm(&[ETA], mkb())), ev(0, gm(&[Y], mkb()))]),
            sum([
                theta(),
                ev(-3, gm(&[Y, ETA], &t() - &b().pow(2).scale(&(&kappa / int(2))))),
                th(-2, gm(&[Y], b().scale(&(k / int(2))))),
                ev(-1, gm(&[ETA], mkb())),
            ]),
            vec![
                Intermediate {
                    name: "w",
                    value: sum([z(), ev(0, gm(&[Y], kb())), th(1, gm(&[ETA], kb()))]),
                    drift: th(-1, gm(&[Y, ETA], konst(int(1)))),
                    diffusion: zero(),
                    closed_form: (z(), th(-1, gm(&[Y, ETA], t()))),
                },
                Intermediate {
                    name: "chi",
                    value: sum([theta(), ev(-1, gm(&[ETA], kb())), th(-2, gm(&[Y], b().scale(&(-k / int(2)))))]),
                    drift: ev(-3, gm(&[Y, ETA], konst(int(1) + &kappa / int(2)))),
                    diffusion: ev(-3, gm(&[Y, ETA], b().scale(&kappa))),
                    closed_form: (theta(), ev(-3, gm(&[Y, ETA], &t() + &b().pow(2).scale(&(&kappa / int(2)))))),
                },
            ],
        ),
    };
    ClosedFormSolution {
        id,
        sde: reference_sde(id, k),
        z: ItoPoly::new(zs, 1),
        theta: ItoPoly::new(ths, 1),
        intermediates,
    }
}
