//! Named checks with machine-readable reports, shared by the CLI and the
//! acceptance tests.

use num::complex::Complex64;
use num::{One, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::catalog::{self, SolutionId};
use crate::error::{Error, Result};
use crate::itocalc::{differential_residual, verify_solution, SdeSpec};
use crate::linalg::Span;
use crate::linkmaps::{
    build_sde, conserved_in_mean, expected_state, expected_state_matrix, martingale_check, verify_link, WalkSpec,
};
use crate::scalar::{self, frac, int, Scalar};
use crate::sim::{self, SimConfig};
use crate::superalg::{jacobi_residual, Sector, VermaModule};
use crate::superspace::{check_superconformal as superconformal_residual, component_conditions, Structure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub name: String,
    pub status: Status,
    pub details: Value,
    /// What the check is measured against.
    pub provenance: Vec<String>,
}

impl Report {
    fn new(name: impl Into<String>, ok: bool, details: Value, provenance: &[&str]) -> Self {
        Report {
            name: name.into(),
            status: Status::from_bool(ok),
            details,
            provenance: provenance.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

pub fn all_passed(reports: &[Report]) -> bool {
    reports.iter().all(Report::passed)
}

pub const CHECKS: [&str; 8] = ["algebra", "singular", "link", "solutions", "superconformal", "martingale", "expected", "numeric"];

fn fmt(x: &Scalar) -> String {
    scalar::format(x)
}

fn sde_strings(sde: &SdeSpec) -> Value {
    json!({
        "drift": [sde.drift.0.to_string(), sde.drift.1.to_string()],
        "diffusions": sde.diffusions.iter().map(|(a, b)| [a.to_string(), b.to_string()]).collect::<Vec<_>>(),
    })
}

/// Graded Jacobi identity for all mode triples with `|index| ≤ range`.
pub fn check_algebra(sector: Sector, range: i32, cs: &[Scalar]) -> Result<Report> {
    let modes = sector.modes_between(-2 * range, 2 * range);
    let mut failures = Vec::new();
    let mut triples = 0usize;
    for c in cs {
        for x in &modes {
            for y in &modes {
                for z in &modes {
                    triples += 1;
                    let (m, k) = jacobi_residual(*x, *y, *z, c, sector)?;
                    if !(m.is_empty() && k.is_zero()) && failures.len() < 10 {
                        failures.push(format!("{x} {y} {z} at c = {}", fmt(c)));
                    }
                }
            }
        }
    }
    Ok(Report::new(
        format!("algebra/{sector}"),
        failures.is_empty(),
        json!({ "modes": modes.len(), "triples": triples, "c": cs.iter().map(fmt).collect::<Vec<_>>(), "failures": failures }),
        &["graded Jacobi identity of the mode brackets"],
    ))
}

/// Central charge at which the standard low-level singular vector exists,
/// if `level2` is the first nontrivial level of the sector.
pub fn singular_constraint(sector: Sector, level2: i32, delta: &Scalar) -> Option<Option<Scalar>> {
    match (sector, level2) {
        (Sector::NeveuSchwarz, 3) => Some(catalog::ns_singular_c(delta)),
        (Sector::Ramond, 2) => Some(catalog::ramond_singular_c(delta)),
        (Sector::Virasoro, 4) => Some(catalog::virasoro_level2_c(delta)),
        _ => None,
    }
}

/// Singular vectors at one level, cross-checked against the Gram kernel.
pub fn check_singular(sector: Sector, level2: i32, c: &Scalar, delta: &Scalar) -> Result<Report> {
    let module = VermaModule::new(sector, c.clone(), delta.clone());
    let sing = module.find_singular(level2)?;
    let mut annihilated = true;
    for s in &sing {
        for m in module.raising_modes(level2) {
            annihilated &= module.apply_mode_to_state(m, s)?.is_zero();
        }
    }
    let basis = module.basis(level2);
    let gram = module.gram_matrix(level2)?;
    let kernel = Span::new(basis.len(), &gram.nullspace());
    let mut in_kernel = true;
    for s in &sing {
        in_kernel &= kernel.contains(&s.rational_vector(&basis)?);
    }
    let constraint = singular_constraint(sector, level2, delta);
    let on_locus = constraint.as_ref().map(|cc| cc.as_ref() == Some(c));
    let locus = constraint.as_ref().map(|cc| match cc {
        Some(x) => format!("c = {} at Δ = {}", fmt(x), fmt(delta)),
        None => format!("no c at Δ = {}", fmt(delta)),
    });
    let found = !sing.is_empty();
    let consistent = on_locus != Some(!found);
    let vectors: Vec<String> = sing.iter().map(|s| s.to_string()).collect();
    Ok(Report::new(
        format!("singular/{sector}@{}", scalar::half_str(level2)),
        found && annihilated && in_kernel && consistent,
        json!({
            "c": fmt(c),
            "delta": fmt(delta),
            "level": scalar::half_str(level2),
            "vectors": vectors,
            "annihilated": annihilated,
            "gram_determinant": fmt(&gram.determinant()),
            "gram_kernel_dim": kernel.dim(),
            "in_gram_kernel": in_kernel,
            "locus": locus,
            "on_locus": on_locus,
        }),
        &["raising-mode annihilation", "Gram matrix kernel"],
    ))
}

/// Builds the SDE of a walk and checks the linking identity on probes.
pub fn check_link(name: &str, w: &WalkSpec, reference: Option<&SdeSpec>) -> Result<Report> {
    let sde = build_sde(w)?;
    let residual = verify_link(w)?;
    let matches = reference.map(|r| r == &sde);
    let bad: Vec<&str> = residual.probes.iter().filter(|p| !p.is_zero()).map(|p| p.probe.as_str()).collect();
    Ok(Report::new(
        format!("link/{name}"),
        residual.is_zero() && matches.unwrap_or(true),
        json!({
            "sde": sde_strings(&sde),
            "matches_reference": matches,
            "jet_order": residual.jet_order,
            "probes": residual.probes.len(),
            "nonzero_probes": bad,
        }),
        &["second-order Ito expansion of the field under the walk"],
    ))
}

/// Closed-form solution against its SDE, with intermediate quantities.
pub fn check_solution(id: SolutionId, k: &Scalar) -> Result<Report> {
    let sol = catalog::solution(id, k);
    let r = verify_solution(&sol.z, &sol.theta, &sol.sde)?;
    let built = build_sde(&id.walk(k))?;
    let built_ok = verify_solution(&sol.z, &sol.theta, &built)?.is_zero();
    let mut intermediates = Vec::new();
    let mut inter_ok = true;
    for im in &sol.intermediates {
        let value = sol.along(&im.value)?;
        let drift = sol.along(&im.drift)?;
        let diffusion = sol.along(&im.diffusion)?;
        let d_ok = differential_residual(&value, drift.value(), &[diffusion.value().clone()])?.is_zero();
        let closed = &im.closed_form.0 + sol.along(&im.closed_form.1)?.value();
        let c_ok = value.value() == &closed;
        inter_ok &= d_ok && c_ok;
        intermediates.push(json!({ "name": im.name, "differential": d_ok, "closed_form": c_ok }));
    }
    let half = sol.sde.has_half_integer_exponents()
        || sol.z.value().has_half_integer_exponents()
        || sol.theta.value().has_half_integer_exponents();
    let half_expected = matches!(id, SolutionId::RamondConv | SolutionId::NsAlt);
    Ok(Report::new(
        format!("verify-solution/{id}"),
        r.is_zero() && built_ok && inter_ok && half == half_expected,
        json!({
            "k": fmt(k),
            "z": sol.z.value().to_string(),
            "theta": sol.theta.value().to_string(),
            "residual_z": r.z.to_report(),
            "residual_theta": r.theta.to_report(),
            "initial_ok": r.initial.0.is_zero() && r.initial.1.is_zero(),
            "solves_built_sde": built_ok,
            "intermediates": intermediates,
            "half_integer_exponents": half,
        }),
        &["Ito differential of the closed form", "initial condition z′ = z, θ′ = θ"],
    ))
}

pub fn check_superconformal(id: SolutionId, k: &Scalar) -> Result<Report> {
    let m = catalog::solution(id, k).map();
    m.validate()?;
    let structure = id.structure();
    let res = superconformal_residual(&m, structure);
    let components = if structure == Structure::Conv {
        let (a, b) = component_conditions(&m);
        Some(a.is_zero() && b.is_zero())
    } else {
        None
    };
    Ok(Report::new(
        format!("superconformal/{id}"),
        res.is_zero() && components.unwrap_or(true),
        json!({ "structure": structure, "residual": res.to_string(), "components": components }),
        &["Dθ′ relation for the chosen superderivative"],
    ))
}

pub fn check_martingale(name: &str, w: &WalkSpec) -> Result<Report> {
    let r = martingale_check(w)?;
    Ok(Report::new(
        format!("martingale/{name}"),
        r.in_submodule,
        json!({
            "c": fmt(&w.c),
            "delta": fmt(&w.delta),
            "kappa": fmt(&w.kappa()),
            "drift": r.drift.to_string(),
            "level": scalar::half_str(r.level2),
            "in_singular_submodule": r.in_submodule,
            "singular_vectors": r.singular_vectors,
            "gram_determinant": fmt(&r.gram_determinant),
            "c_locus": r.c_locus.describe(),
        }),
        &["drift of 𝒢_t|Δ⟩ modulo singular vectors"],
    ))
}

pub fn check_expected(name: &str, w: &WalkSpec, max_level2: i32, use_matrix: bool) -> Result<Report> {
    let e = if use_matrix { expected_state_matrix(w, max_level2)? } else { expected_state(w, max_level2)? };
    let conserved = conserved_in_mean(w, &e, max_level2)?;
    Ok(Report::new(
        format!("expected/{name}"),
        conserved,
        json!({
            "level": scalar::half_str(max_level2),
            "method": if use_matrix { "nilpotent matrix exponential" } else { "exponential series" },
            "expected_state": e.to_string(),
            "conserved": conserved,
        }),
        &["E[𝒢_t|Δ⟩] projected to the quotient"],
    ))
}

/// Monte Carlo estimate for the classical walk plus the κ = 0 integrator
/// checks.
pub fn check_numeric(cfg: &SimConfig, max_level2: i32, c: &Scalar, delta: &Scalar) -> Result<Report> {
    let est = sim::estimate_martingale(cfg, max_level2, c, delta)?;
    let z0 = Complex64::new(1.0, 1.0);
    let err = sim::deterministic_error(z0, cfg.t_max, cfg.steps);
    let ratio = sim::convergence_ratio(z0, cfg.t_max, cfg.steps);
    let ok = est.conserved_within(3.0) && est.max_abs_z_exact() <= 3.0 && err < 1e-3 && (1.5..=2.5).contains(&ratio);
    Ok(Report::new(
        "numeric",
        ok,
        json!({
            "estimate": est,
            "max_abs_z_conserved": est.max_abs_z_conserved(),
            "max_abs_z_exact": est.max_abs_z_exact(),
            "deterministic_error": err,
            "halving_ratio": ratio,
            "seed": cfg.seed,
        }),
        &["exact expected state under the nilpotent exponential", "κ = 0 closed form √(z² + 4t)"],
    ))
}

fn sample_ks() -> Vec<Scalar> {
    vec![frac(1, 2), int(1), frac(4, 3), int(2), frac(5, 2), int(3)]
}

fn named<F: FnOnce() -> Result<Vec<Report>>>(name: &str, f: F) -> Result<Vec<Report>> {
    f().map_err(|e| Error::Config(format!("{name}: {e}")))
}

/// Runs the named default checks. An empty list runs all of them.
pub fn run_suite(names: &[String]) -> Result<Vec<Report>> {
    let names: Vec<String> = if names.is_empty() { CHECKS.iter().map(|s| s.to_string()).collect() } else { names.to_vec() };
    if let Some(bad) = names.iter().find(|n| !CHECKS.contains(&n.as_str())) {
        return Err(Error::UnknownCheck(bad.clone()));
    }
    let mut out = Vec::new();
    for name in &names {
        let reports = match name.as_str() {
            "algebra" => named(name, || {
                let cs = [frac(13, 7), frac(-2, 5), frac(3, 2)];
                Ok(vec![check_algebra(Sector::NeveuSchwarz, 5, &cs)?, check_algebra(Sector::Ramond, 5, &cs)?])
            })?,
            "singular" => named(name, || {
                let mut rs = Vec::new();
                for d in [frac(1, 3), frac(-1, 4), frac(5, 2)] {
                    let c = catalog::ns_singular_c(&d).expect("regular Δ");
                    rs.push(check_singular(Sector::NeveuSchwarz, 3, &c, &d)?);
                    let c = catalog::ramond_singular_c(&d).expect("regular Δ");
                    rs.push(check_singular(Sector::Ramond, 2, &c, &d)?);
                    let c = catalog::virasoro_level2_c(&d).expect("regular Δ");
                    rs.push(check_singular(Sector::Virasoro, 4, &c, &d)?);
                }
                Ok(rs)
            })?,
            "link" => named(name, || {
                let k = frac(3, 2);
                SolutionId::ALL
                    .iter()
                    .map(|id| check_link(id.name(), &id.walk(&k), Some(&catalog::reference_sde(*id, &k))))
                    .collect()
            })?,
            "solutions" => named(name, || SolutionId::ALL.iter().map(|id| check_solution(*id, &frac(3, 2))).collect())?,
            "superconformal" => {
                named(name, || SolutionId::ALL.iter().map(|id| check_superconformal(*id, &frac(3, 2))).collect())?
            }
            "martingale" => named(name, martingale_reports)?,
            "expected" => named(name, || {
                let k = frac(3, 2);
                let mut rs: Vec<Report> =
                    SolutionId::ALL.iter().map(|id| check_expected(id.name(), &id.walk(&k), 4, false)).collect::<Result<_>>()?;
                let (c, d) = catalog::classical_locus(&k);
                rs.push(check_expected("classical", &catalog::classical_walk(&k, c, d), 8, true)?);
                Ok(rs)
            })?,
            "numeric" => named(name, || {
                let kappa = frac(8, 3);
                let (c, d) = catalog::classical_locus_kappa(&kappa);
                let mut cfg = SimConfig::new(kappa);
                cfg.paths = 10_000;
                cfg.steps = 1000;
                cfg.seed = 2024;
                Ok(vec![check_numeric(&cfg, 8, &c, &d)?])
            })?,
            _ => unreachable!(),
        };
        out.extend(reports);
    }
    Ok(out)
}

/// On-locus walks must pass and shifted parameters must fail; the
/// off-locus reports are inverted so that `pass` means "correctly rejected".
fn martingale_reports() -> Result<Vec<Report>> {
    let mut rs = Vec::new();
    for k in sample_ks() {
        let (c, d) = catalog::classical_locus(&k);
        let mut walks = vec![("classical".to_string(), catalog::classical_walk(&k, c, d))];
        for s in [Structure::Conv, Structure::Alt] {
            let (c, d) = catalog::ns_locus(&k);
            walks.push((format!("ns-{s}"), catalog::ns_walk(&k, s, c, d)));
            let (c, d) = catalog::ramond_locus(&k);
            walks.push((format!("ramond-{s}"), catalog::ramond_walk(&k, s, c, d)));
        }
        for (name, w) in walks {
            let label = format!("{name}@k={}", fmt(&k));
            rs.push(check_martingale(&label, &w)?);
            let off = w.with_params(&w.c + Scalar::one(), w.delta.clone());
            let mut r = check_martingale(&format!("{label}/off-locus"), &off)?;
            r.status = Status::from_bool(!r.passed());
            rs.push(r);
        }
    }
    Ok(rs)
}
