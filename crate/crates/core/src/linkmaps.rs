//! From supergroup random walks to superspace SDEs, drift states and exact
//! expectations of `𝒢_t|Δ⟩`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{Alphabet, GrassmannNumber, GrassmannRepr, ZETA};
use crate::itocalc::{ito_d, ItoPoly};
use crate::linalg::Matrix;
use crate::poly::{self, Poly, TIME};
use crate::scalar::{self, Scalar};
use crate::superalg::{level2, AlgebraElement, Mode, ModeKind, Sector, VermaModule, VermaState, Word};
use crate::superspace::{substitute, Structure, SuperFunction, SuperMap};

pub use crate::itocalc::SdeSpec;

/// Coefficients of a walk element that is linear in the modes.
type LinearPart = Vec<(Mode, GrassmannNumber)>;

/// `𝒢⁻¹d𝒢 = α dt + Σ βᵢ dB⁽ⁱ⁾` with `α = α₀ + ½Σβᵢ²`, on a module with
/// parameters `(c, Δ)`; `k` is the rational sample of `√κ`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkSpec {
    pub sector: Sector,
    pub structure: Structure,
    pub c: Scalar,
    pub delta: Scalar,
    pub k: Scalar,
    pub alpha0: AlgebraElement,
    pub beta: Vec<AlgebraElement>,
}

impl WalkSpec {
    pub fn kappa(&self) -> Scalar {
        &self.k * &self.k
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        self.alpha0.alphabet()
    }

    pub fn brownians(&self) -> usize {
        self.beta.len()
    }

    pub fn module(&self) -> VermaModule {
        VermaModule::with_alphabet(self.sector, self.c.clone(), self.delta.clone(), self.alphabet())
    }

    /// Same walk on a module with other parameters.
    pub fn with_params(&self, c: Scalar, delta: Scalar) -> WalkSpec {
        let mut w = self.clone();
        w.alpha0.c = c.clone();
        for b in &mut w.beta {
            b.c = c.clone();
        }
        w.c = c;
        w.delta = delta;
        w
    }

    /// `α₀ + ½Σβᵢ²`, normal ordered.
    pub fn alpha(&self) -> Result<AlgebraElement> {
        let mut a = self.alpha0.clone();
        for b in &self.beta {
            a = a.try_add(&b.try_mul(b)?.scale(&scalar::frac(1, 2)))?;
        }
        Ok(a)
    }

    fn linear(&self) -> Result<(LinearPart, Vec<LinearPart>)> {
        let a = self.alpha0.linear_coefficients()?;
        let bs = self.beta.iter().map(AlgebraElement::linear_coefficients).collect::<Result<Vec<_>>>()?;
        Ok((a, bs))
    }

    pub fn to_json(&self) -> Result<WalkJson> {
        Ok(WalkJson {
            sector: self.sector,
            structure: self.structure,
            c: scalar::format(&self.c),
            delta: scalar::format(&self.delta),
            k: scalar::format(&self.k),
            alpha0: terms_to_json(&self.alpha0)?,
            beta: self.beta.iter().map(terms_to_json).collect::<Result<_>>()?,
        })
    }

    pub fn from_json(j: &WalkJson) -> Result<WalkSpec> {
        let alph = Alphabet::standard();
        let c = scalar::parse(&j.c)?;
        let build = |terms: &[TermJson]| -> Result<AlgebraElement> {
            let mut e = AlgebraElement::zero(j.sector, c.clone(), &alph);
            for t in terms {
                let m = t.to_mode()?;
                let g = GrassmannNumber::from_repr(&alph, &t.coeff)?;
                e = e.try_add(&AlgebraElement::mode(j.sector, c.clone(), g, m)?)?;
            }
            Ok(e)
        };
        Ok(WalkSpec {
            sector: j.sector,
            structure: j.structure,
            c: c.clone(),
            delta: scalar::parse(&j.delta)?,
            k: scalar::parse(&j.k)?,
            alpha0: build(&j.alpha0)?,
            beta: j.beta.iter().map(|b| build(b)).collect::<Result<_>>()?,
        })
    }
}

/// Wire form of a [`WalkSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkJson {
    pub sector: Sector,
    pub structure: Structure,
    pub c: String,
    pub delta: String,
    pub k: String,
    pub alpha0: Vec<TermJson>,
    pub beta: Vec<Vec<TermJson>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub mode: String,
    pub index: String,
    pub coeff: GrassmannRepr,
}

impl TermJson {
    fn to_mode(&self) -> Result<Mode> {
        let idx = scalar::parse_half(&self.index)?;
        match self.mode.as_str() {
            "L" if idx % 2 == 0 => Ok(Mode::l(idx / 2)),
            "L" => Err(Error::InvalidMode(format!("L{}", self.index))),
            "G" => Ok(Mode::g2(idx)),
            other => Err(Error::Parse(format!("unknown mode kind {other:?}"))),
        }
    }
}

fn terms_to_json(e: &AlgebraElement) -> Result<Vec<TermJson>> {
    e.linear_coefficients()?
        .into_iter()
        .map(|(m, g)| {
            Ok(TermJson {
                mode: match m.kind {
                    ModeKind::L => "L".into(),
                    ModeKind::G => "G".into(),
                },
                index: scalar::half_str(m.index2),
                coeff: g.to_repr()?,
            })
        })
        .collect()
}

/// Whether the `½Σᵢ(z′ᵢ∂_{z′} + θ′ᵢ∂_{θ′})` drift correction is included.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Correction {
    Include,
    Omit,
}

/// The vector field `(z′ᵢ, θ′ᵢ)` attached to a linear combination of modes.
fn vector_field(coeffs: &[(Mode, GrassmannNumber)], structure: Structure, alph: &Arc<Alphabet>) -> (SuperFunction, SuperFunction) {
    let mut z = SuperFunction::zero(alph);
    let mut th = SuperFunction::zero(alph);
    let theta = SuperFunction::theta(alph);
    for (m, g) in coeffs {
        match m.kind {
            ModeKind::L => {
                let n = m.index2 / 2;
                z = &z - &SuperFunction::z_pow(alph, 2 * n + 2).lmul(g);
                let weight = match structure {
                    Structure::Conv => n + 1,
                    Structure::Alt => n,
                };
                let tz = &theta * &SuperFunction::z_pow(alph, 2 * n);
                th = &th - &tz.lmul(g).scale(&scalar::frac(weight as i64, 2));
            }
            ModeKind::G => {
                let r2 = m.index2;
                let (ez, eth) = match structure {
                    Structure::Conv => (r2 + 1, r2 + 1),
                    Structure::Alt => (r2 + 2, r2),
                };
                z = &z + &(&theta * &SuperFunction::z_pow(alph, ez)).lmul(g);
                th = &th - &SuperFunction::z_pow(alph, eth).lmul(g);
            }
        }
    }
    (z, th)
}

fn apply_field(zi: &SuperFunction, ti: &SuperFunction, f: &SuperFunction) -> SuperFunction {
    &(zi * &f.d_z()) + &(ti * &f.d_theta())
}

/// Drift and diffusion of `(z′, θ′)` induced by the walk.
pub fn build_sde(w: &WalkSpec) -> Result<SdeSpec> {
    build_sde_with(w, Correction::Include)
}

pub fn build_sde_with(w: &WalkSpec, correction: Correction) -> Result<SdeSpec> {
    let alph = w.alphabet();
    let (a, bs) = w.linear()?;
    for (m, _) in a.iter().chain(bs.iter().flatten()) {
        w.sector.validate(*m)?;
    }
    let diffusions: Vec<_> = bs.iter().map(|b| vector_field(b, w.structure, alph)).collect();
    let (mut z0, mut t0) = vector_field(&a, w.structure, alph);
    if correction == Correction::Include {
        let half = scalar::frac(1, 2);
        for (zi, ti) in &diffusions {
            z0 = &z0 + &apply_field(zi, ti, zi).scale(&half);
            t0 = &t0 + &apply_field(zi, ti, ti).scale(&half);
        }
    }
    Ok(SdeSpec { drift: (z0, t0), diffusions })
}

/// Infinitesimal action `[m, Φ]` on a primary field of weight `Δ`, as a
/// differential operator on superfunctions.
pub fn field_action(m: Mode, f: &SuperFunction, structure: Structure, delta: &Scalar) -> SuperFunction {
    let alph = f.alphabet();
    let zp = |e2: i32| SuperFunction::z_pow(alph, e2);
    let dz = f.d_z();
    match m.kind {
        ModeKind::L => {
            let n = m.index2 / 2;
            let euler = match structure {
                Structure::Conv => scalar::frac(n as i64 + 1, 2),
                Structure::Alt => scalar::frac(n as i64, 2),
            };
            let a = &zp(2 * n + 2) * &dz;
            let b = (&zp(2 * n) * &f.d_theta().theta_times()).scale(&euler);
            let c = (&zp(2 * n) * f).scale(&(delta * scalar::int(n as i64 + 1)));
            &(&a + &b) + &c
        }
        ModeKind::G => {
            let r2 = m.index2;
            let weight = delta * scalar::int(r2 as i64 + 1);
            let (e_dz, e_dth, e_w) = match structure {
                Structure::Conv => (r2 + 1, r2 + 1, r2 - 1),
                Structure::Alt => (r2 + 2, r2, r2),
            };
            let a = (&zp(e_dz) * &dz).theta_times();
            let b = &zp(e_dth) * &f.d_theta();
            let c = (&zp(e_w) * f).theta_times().scale(&weight);
            &(&b - &a) - &c
        }
    }
}

/// `Σ gₘ[m, Φ]` for a linear combination of modes.
pub fn element_action(coeffs: &[(Mode, GrassmannNumber)], f: &SuperFunction, structure: Structure, delta: &Scalar) -> SuperFunction {
    let mut out = SuperFunction::zero(f.alphabet());
    for (m, g) in coeffs {
        out = &out + &field_action(*m, f, structure, delta).lmul(g);
    }
    out
}

/// Residual of the matching condition for one test function.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeResidual {
    pub probe: String,
    pub drift: SuperFunction,
    pub diffusions: Vec<SuperFunction>,
}

impl ProbeResidual {
    pub fn is_zero(&self) -> bool {
        self.drift.is_zero() && self.diffusions.iter().all(SuperFunction::is_zero)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkResidual {
    pub jet_order: usize,
    pub probes: Vec<ProbeResidual>,
}

impl LinkResidual {
    pub fn is_zero(&self) -> bool {
        self.probes.iter().all(ProbeResidual::is_zero)
    }
}

/// Smallest jet order for which the probe family separates all
/// second-order differential operators in `(z, θ)`.
pub const MIN_JET_ORDER: usize = 2;

/// Checks that the walk's SDE makes `𝒢⁻¹Φ𝒢` and the transformed field have
/// the same Ito differential.
pub fn verify_link(w: &WalkSpec) -> Result<LinkResidual> {
    verify_link_with(w, &build_sde(w)?, MIN_JET_ORDER)
}

/// Compares, at `t = 0`, the differential of `𝒢⁻¹Φ𝒢` computed from mode
/// commutators with the differential of the transformed field along `sde`.
///
/// `Φ` runs over the test functions `zᵐ` and `ζθzᵐ` for `m ≤ jet_order`,
/// with `ζ` an odd generator that must not occur in the walk; their jets at
/// order two span every second-order operator, so zero residual for all of
/// them is the identity for arbitrary `Φ`.
pub fn verify_link_with(w: &WalkSpec, sde: &SdeSpec, jet_order: usize) -> Result<LinkResidual> {
    if jet_order < MIN_JET_ORDER {
        return Err(Error::JetOrder(jet_order));
    }
    let alph = w.alphabet();
    let zeta = GrassmannNumber::generator(alph, ZETA)?;
    let (a, bs) = w.linear()?;
    let zeta_mask = 1u64 << alph.index(ZETA)?;
    if a.iter().chain(bs.iter().flatten()).any(|(_, g)| g.terms().any(|(s, _)| s & zeta_mask != 0)) {
        return Err(Error::Config(format!("walk coefficients may not use the probe generator {ZETA}")));
    }
    let b = w.brownians();
    if sde.brownians() != b {
        return Err(Error::Config("SDE and walk have different Brownian dimensions".into()));
    }
    let local = local_process(sde)?;
    let prefactor = transformation_prefactor(&local, w.structure, &w.delta)?;
    let mut probes = Vec::new();
    for m in 0..=jet_order as i32 {
        let zm = SuperFunction::z_pow(alph, 2 * m);
        let odd = SuperFunction::term(2 * m, GrassmannNumber::zero(alph), zeta.clone());
        for (label, phi) in [(format!("z^{m}"), zm), (format!("{ZETA}θz^{m}"), odd)] {
            let rhs = ito_d(&ItoPoly::new(&prefactor * &substitute(&phi, &local)?, b));
            let at_origin = |f: &SuperFunction| f.map_coefficients(|p| Poly::constant(p.constant_term()));
            let lb: Vec<_> = bs.iter().map(|bi| element_action(bi, &phi, w.structure, &w.delta)).collect();
            let mut drift = -element_action(&a, &phi, w.structure, &w.delta);
            let half = scalar::frac(1, 2);
            for (bi, lbi) in bs.iter().zip(&lb) {
                drift = &drift + &element_action(bi, lbi, w.structure, &w.delta).scale(&half);
            }
            let drift = &drift - &at_origin(&rhs.drift);
            let diffusions = lb.iter().zip(&rhs.diffusions).map(|(l, r)| &(-l) - &at_origin(r)).collect();
            probes.push(ProbeResidual { probe: label, drift, diffusions });
        }
    }
    Ok(LinkResidual { jet_order, probes })
}

/// `(z + z′₀t + Σz′ᵢBⁱ, θ + θ′₀t + Σθ′ᵢBⁱ)`: a process with the SDE's
/// coefficients frozen at the starting point, whose Ito differential at
/// `t = 0` agrees with that of the true solution.
fn local_process(sde: &SdeSpec) -> Result<SuperMap> {
    let alph = sde.drift.0.alphabet();
    let tvar = Poly::var(TIME);
    let times = |f: &SuperFunction, p: &Poly| f.map_coefficients(|q| q * p);
    let mut z = &SuperFunction::z(alph) + &times(&sde.drift.0, &tvar);
    let mut th = &SuperFunction::theta(alph) + &times(&sde.drift.1, &tvar);
    for (i, (zi, ti)) in sde.diffusions.iter().enumerate() {
        let bv = Poly::var(poly::brownian(i + 1));
        z = &z + &times(zi, &bv);
        th = &th + &times(ti, &bv);
    }
    let m = SuperMap::new(z, th);
    m.validate()?;
    Ok(m)
}

/// `(Dθ′)^{2Δ}` (conv) or `((z′/z)(𝒟θ′)²)^Δ` (alt).
fn transformation_prefactor(m: &SuperMap, structure: Structure, delta: &Scalar) -> Result<SuperFunction> {
    let alph = m.z.alphabet();
    let one = SuperFunction::one(alph);
    let dth = m.theta.superderivative(structure);
    match structure {
        Structure::Conv => SuperFunction::one_plus_pow(&(&dth - &one), &(delta * scalar::int(2))),
        Structure::Alt => {
            let ratio = &m.z * &SuperFunction::z_pow(alph, -2);
            let x = &ratio * &(&dth * &dth);
            SuperFunction::one_plus_pow(&(&x - &one), delta)
        }
    }
}

/// `(α₀ + ½Σβᵢ²)|Δ⟩`
pub fn drift_state(w: &WalkSpec) -> Result<VermaState> {
    let module = w.module();
    module.act(&w.alpha()?, &module.highest())
}

/// Values of `c` at fixed `Δ` for which the drift state is singular.
#[derive(Clone, Debug, PartialEq)]
pub enum CentralChargeLocus {
    /// Singular for every `c`.
    Any,
    /// Singular for no `c`.
    Empty,
    Points(Vec<Scalar>),
    /// Common zeros of the listed polynomials (coefficients by increasing
    /// degree) that could not be isolated over the rationals.
    Unresolved(Vec<Vec<Scalar>>),
}

impl CentralChargeLocus {
    pub fn contains(&self, c: &Scalar) -> Option<bool> {
        match self {
            CentralChargeLocus::Any => Some(true),
            CentralChargeLocus::Empty => Some(false),
            CentralChargeLocus::Points(ps) => Some(ps.contains(c)),
            CentralChargeLocus::Unresolved(_) => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            CentralChargeLocus::Any => "any c".into(),
            CentralChargeLocus::Empty => "no c".into(),
            CentralChargeLocus::Points(ps) => {
                ps.iter().map(|c| format!("c = {}", scalar::format(c))).collect::<Vec<_>>().join(" or ")
            }
            CentralChargeLocus::Unresolved(polys) => format!("{} unresolved polynomial conditions in c", polys.len()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MartingaleReport {
    pub drift: VermaState,
    pub level2: i32,
    /// The drift lies in the submodule generated by singular vectors at
    /// levels up to its own.
    pub in_submodule: bool,
    pub singular_vectors: usize,
    pub gram_determinant: Scalar,
    /// Where the drift itself is singular, at the walk's `Δ`.
    pub c_locus: CentralChargeLocus,
}

pub fn martingale_check(w: &WalkSpec) -> Result<MartingaleReport> {
    let module = w.module();
    let drift = drift_state(w)?;
    let level2 = drift.max_level2().unwrap_or(0);
    let (in_submodule, singular_vectors, gram_determinant) = if level2 == 0 {
        (drift.is_zero(), 0, Scalar::one())
    } else {
        let sub = module.singular_submodule(level2)?;
        (sub.contains(&drift)?, sub.generators, module.gram_matrix(level2)?.determinant())
    };
    let c_locus = if level2 == 0 { CentralChargeLocus::Any } else { drift_c_locus(w, level2)? };
    Ok(MartingaleReport { drift, level2, in_submodule, singular_vectors, gram_determinant, c_locus })
}

/// Highest degree in `c` tolerated when interpolating annihilation
/// conditions; one extra sample checks the bound.
const LOCUS_DEGREE: usize = 3;

fn drift_c_locus(w: &WalkSpec, level2: i32) -> Result<CentralChargeLocus> {
    let samples: Vec<Scalar> = (0..=LOCUS_DEGREE as i64 + 1).map(|j| scalar::int(7 * j - 3)).collect();
    let mut values: BTreeMap<String, Vec<Scalar>> = BTreeMap::new();
    for (j, c) in samples.iter().enumerate() {
        let wj = w.with_params(c.clone(), w.delta.clone());
        let module = wj.module();
        let drift = drift_state(&wj)?;
        for x in module.raising_modes(level2) {
            let image = module.apply_mode_to_state(x, &drift)?;
            for ((subset, mono), comps) in image.components() {
                for (word, v) in comps {
                    let key = format!("{x}|{subset}|{mono:?}|{}", crate::superalg::word_to_string(&word));
                    values.entry(key).or_insert_with(|| vec![Scalar::zero(); samples.len()])[j] = v;
                }
            }
        }
    }
    let mut polys = Vec::new();
    for (key, ys) in values {
        let coeffs = interpolate(&samples[..=LOCUS_DEGREE], &ys[..=LOCUS_DEGREE]);
        let check = eval_poly(&coeffs, &samples[LOCUS_DEGREE + 1]);
        if check != ys[LOCUS_DEGREE + 1] {
            return Err(Error::Config(format!("condition {key} has degree above {LOCUS_DEGREE} in c")));
        }
        let coeffs = trim(coeffs);
        if !coeffs.is_empty() {
            polys.push(coeffs);
        }
    }
    Ok(common_rational_roots(polys))
}

fn trim(mut p: Vec<Scalar>) -> Vec<Scalar> {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

fn eval_poly(p: &[Scalar], x: &Scalar) -> Scalar {
    p.iter().rev().fold(Scalar::zero(), |acc, a| acc * x + a)
}

/// Lagrange interpolation; coefficients by increasing degree.
fn interpolate(xs: &[Scalar], ys: &[Scalar]) -> Vec<Scalar> {
    let n = xs.len();
    let mut out = vec![Scalar::zero(); n];
    for i in 0..n {
        let mut basis = vec![Scalar::one()];
        let mut denom = Scalar::one();
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut next = vec![Scalar::zero(); basis.len() + 1];
            for (d, a) in basis.iter().enumerate() {
                next[d + 1] += a;
                next[d] -= a * &xs[j];
            }
            basis = next;
            denom *= &xs[i] - &xs[j];
        }
        let scale = &ys[i] / &denom;
        for (d, a) in basis.iter().enumerate() {
            out[d] += a * &scale;
        }
    }
    out
}

fn rational_roots_low_degree(p: &[Scalar]) -> Option<Vec<Scalar>> {
    match p.len() {
        2 => Some(vec![-&p[0] / &p[1]]),
        3 => {
            let disc = &p[1] * &p[1] - scalar::int(4) * &p[2] * &p[0];
            if disc < Scalar::zero() {
                return Some(Vec::new());
            }
            let s = scalar::sqrt_exact(&disc)?;
            let den = scalar::int(2) * &p[2];
            let mut roots = vec![(-&p[1] + &s) / &den, (-&p[1] - &s) / &den];
            roots.dedup();
            Some(roots)
        }
        _ => None,
    }
}

fn common_rational_roots(polys: Vec<Vec<Scalar>>) -> CentralChargeLocus {
    if polys.is_empty() {
        return CentralChargeLocus::Any;
    }
    if polys.iter().any(|p| p.len() == 1) {
        return CentralChargeLocus::Empty;
    }
    let lowest = polys.iter().min_by_key(|p| p.len()).unwrap();
    match rational_roots_low_degree(lowest) {
        Some(cands) => {
            let roots: Vec<Scalar> =
                cands.into_iter().filter(|c| polys.iter().all(|p| eval_poly(p, c).is_zero())).collect();
            if roots.is_empty() {
                CentralChargeLocus::Empty
            } else {
                CentralChargeLocus::Points(roots)
            }
        }
        None => CentralChargeLocus::Unresolved(polys),
    }
}

/// `E[𝒢_t|Δ⟩] = Σₙ tⁿ/n! αⁿ|Δ⟩`, truncated above `max_level2`, with
/// coefficients polynomial in `t`.
pub fn expected_state(w: &WalkSpec, max_level2: i32) -> Result<VermaState> {
    let drift = drift_state(w)?;
    let required = drift.max_level2().unwrap_or(0);
    if max_level2 < required {
        return Err(Error::Truncation { requested: scalar::half_str(max_level2), required: scalar::half_str(required) });
    }
    let module = w.module();
    let alpha = w.alpha()?;
    let mut term = module.highest();
    let mut total = term.clone();
    let limit = 2 * (max_level2 as usize + 1) + w.alphabet().len() + 2;
    for n in 1..=limit {
        term = module.act(&alpha, &term)?.truncate(max_level2);
        let tn = Poly::var(TIME).scale(&(Scalar::one() / scalar::int(n as i64)));
        term = term.map_coefficients(|g| g.scale_poly(&tn));
        if term.is_zero() {
            return Ok(total);
        }
        total = total.add(&term);
    }
    Err(Error::Config("exponential series did not terminate; α does not act nilpotently".into()))
}

/// Matrix of a Grassmann-free algebra element on the states up to
/// `max_level2`, in the order of `basis_upto`, dropping higher components.
pub fn operator_matrix(module: &VermaModule, x: &AlgebraElement, max_level2: i32) -> Result<(Vec<Word>, Matrix)> {
    let basis = module.basis_upto(max_level2);
    let index: BTreeMap<&Word, usize> = basis.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let mut m = Matrix::zeros(basis.len(), basis.len());
    for (xw, g) in x.terms() {
        let k = g
            .soul()
            .is_zero()
            .then(|| g.body().as_constant())
            .flatten()
            .ok_or_else(|| Error::NotRational(g.to_string()))?;
        for (j, w) in basis.iter().enumerate() {
            for (nw, v) in module.apply_word_rational(xw, w)? {
                if level2(&nw) > max_level2 {
                    continue;
                }
                m[(index[&nw], j)] += &k * &v;
            }
        }
    }
    Ok((basis, m))
}

/// `exp(tA)e₀` for nilpotent `A`, as polynomial coefficients in `t` per basis
/// component.
pub fn nilpotent_exponential_column(a: &Matrix, col: usize) -> Result<Vec<Poly>> {
    if !a.is_nilpotent() {
        return Err(Error::Config("matrix is not nilpotent".into()));
    }
    let n = a.rows();
    let mut v = vec![Scalar::zero(); n];
    v[col] = Scalar::one();
    let mut out: Vec<Poly> = v.iter().map(|x| Poly::constant(x.clone())).collect();
    for p in 1..=n {
        v = a.mul_vec(&v).into_iter().map(|x| x / scalar::int(p as i64)).collect();
        if v.iter().all(Zero::is_zero) {
            break;
        }
        let tp = Poly::var(TIME).pow(p as u32);
        for (o, x) in out.iter_mut().zip(&v) {
            *o = &*o + &tp.scale(x);
        }
    }
    Ok(out)
}

/// Expected state of a Grassmann-free walk through the exponential of its
/// truncated matrix.
pub fn expected_state_matrix(w: &WalkSpec, max_level2: i32) -> Result<VermaState> {
    let module = w.module();
    let (basis, a) = operator_matrix(&module, &w.alpha()?, max_level2)?;
    let col = exp_column(&a, &basis)?;
    let mut out = VermaState::zero(module.params(), w.alphabet());
    for (word, p) in basis.into_iter().zip(col) {
        out.add_term(word, GrassmannNumber::from_poly(w.alphabet(), p));
    }
    Ok(out)
}

fn exp_column(a: &Matrix, basis: &[Word]) -> Result<Vec<Poly>> {
    let col = basis.iter().position(Vec::is_empty).expect("basis contains the highest-weight state");
    nilpotent_exponential_column(a, col)
}

/// Whether `E[𝒢_t|Δ⟩]` equals `|Δ⟩` modulo the singular submodule, as an
/// identity in `t`.
pub fn conserved_in_mean(w: &WalkSpec, expected: &VermaState, max_level2: i32) -> Result<bool> {
    let module = w.module();
    let sub = module.singular_submodule(max_level2)?;
    let diff = expected.sub(&module.highest());
    sub.contains(&diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, SolutionId};
    use crate::scalar::{frac, int};

    #[test]
    fn classical_walk_gives_loewner_rewrite() {
        let k = frac(3, 2);
        let (c, d) = catalog::classical_locus(&k);
        let sde = build_sde(&catalog::classical_walk(&k, c, d)).unwrap();
        let alph = Alphabet::standard();
        assert_eq!(sde.drift.0, SuperFunction::z_pow(&alph, -2).scale(&int(2)));
        assert_eq!(sde.diffusions[0].0, SuperFunction::scalar(&alph, -k));
    }

    #[test]
    fn build_sde_matches_reference_equations() {
        for id in SolutionId::ALL {
            for k in [frac(1, 2), int(2), frac(5, 3)] {
                let built = build_sde(&id.walk(&k)).unwrap();
                let reference = catalog::reference_sde(id, &k);
                assert_eq!(built.drift.0, reference.drift.0, "{id} z drift");
                assert_eq!(built.drift.1, reference.drift.1, "{id} θ drift");
                assert_eq!(built.diffusions, reference.diffusions, "{id} diffusion");
            }
        }
    }

    #[test]
    fn field_action_reverses_brackets() {
        // [x,[y,Φ]] = ℓ_y ℓ_x Φ, so the operators satisfy the bracket
        // relations with the opposite sign
        let alph = Alphabet::standard();
        let zeta = GrassmannNumber::generator(&alph, ZETA).unwrap();
        let delta = frac(3, 7);
        let c = int(0);
        for (structure, sector) in [
            (Structure::Conv, Sector::NeveuSchwarz),
            (Structure::Conv, Sector::Ramond),
            (Structure::Alt, Sector::Ramond),
            (Structure::Alt, Sector::NeveuSchwarz),
        ] {
            let modes = sector.modes_between(-4, 4);
            let probe = &SuperFunction::z_pow(&alph, 6) + &SuperFunction::term(4, GrassmannNumber::zero(&alph), zeta.clone());
            for &x in &modes {
                for &y in &modes {
                    let lx = |f: &SuperFunction| field_action(x, f, structure, &delta);
                    let ly = |f: &SuperFunction| field_action(y, f, structure, &delta);
                    let sign = if x.is_odd() && y.is_odd() { int(-1) } else { int(1) };
                    let lhs = &lx(&ly(&probe)) - &ly(&lx(&probe)).scale(&sign);
                    let br = crate::superalg::bracket(x, y, &c, sector).unwrap();
                    let rhs = match br.mode {
                        Some((m, k)) => field_action(m, &probe, structure, &delta).scale(&-k),
                        None => SuperFunction::zero(&alph),
                    };
                    assert_eq!(lhs, rhs, "{structure:?} {sector} [{x}, {y}]");
                }
            }
        }
    }

    #[test]
    fn drift_state_of_ramond_walk() {
        let k = frac(4, 3);
        let w = SolutionId::RamondConv.walk(&k);
        let d = drift_state(&w).unwrap();
        let kappa = &k * &k;
        let alph = w.alphabet().clone();
        let ee = GrassmannNumber::monomial(&alph, &[crate::grassmann::EPS, crate::grassmann::ETA]).unwrap();
        let mut expect = VermaState::zero(w.module().params(), &alph);
        expect.add_term(vec![Mode::l(-1)], ee.scale(&(&kappa - frac(1, 2))));
        expect.add_term(vec![Mode::g(-1), Mode::g(0)], ee.scale(&-kappa));
        assert_eq!(d, expect);
    }

    #[test]
    fn interpolation_recovers_polynomial() {
        let xs: Vec<Scalar> = (0..4).map(int).collect();
        let ys: Vec<Scalar> = xs.iter().map(|x| x * x * int(3) - x + frac(1, 2)).collect();
        assert_eq!(trim(interpolate(&xs, &ys)), vec![frac(1, 2), int(-1), int(3)]);
        let locus = common_rational_roots(vec![vec![int(-6), int(1), int(1)], vec![int(-2), int(1)]]);
        assert_eq!(locus, CentralChargeLocus::Points(vec![int(2)]));
    }
}
