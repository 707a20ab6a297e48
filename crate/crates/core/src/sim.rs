//! Floating-point Monte Carlo for the classical Löwner evolution and for the
//! truncated linear SDE of `𝒢_t|Δ⟩`.

use num::complex::Complex64;
use num::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grassmann::{Alphabet, GrassmannNumber};
use crate::linalg::Matrix;
use crate::linkmaps::{nilpotent_exponential_column, operator_matrix};
use crate::poly::Poly;
use crate::scalar::{self, Scalar};
use crate::superalg::{word_to_string, AlgebraElement, Mode, Sector, VermaModule};

pub const DEFAULT_SWALLOW: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub kappa: Scalar,
    pub paths: usize,
    pub steps: usize,
    pub t_max: f64,
    pub seed: u64,
    pub grid: Vec<Complex64>,
    pub swallow_threshold: f64,
    /// Number of equally spaced recording times after `t = 0`.
    pub records: usize,
    /// Smallest admissible imaginary part of a starting point.
    pub im_floor: f64,
}

impl SimConfig {
    pub fn new(kappa: Scalar) -> Self {
        SimConfig {
            kappa,
            paths: 1000,
            steps: 1000,
            t_max: 1.0,
            seed: 0,
            grid: vec![Complex64::new(1.0, 1.0), Complex64::new(-1.0, 1.0), Complex64::new(0.5, 2.0)],
            swallow_threshold: DEFAULT_SWALLOW,
            records: 10,
            im_floor: 1e-2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.paths == 0 {
            return Err(Error::Config("steps and paths must be positive".into()));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.kappa < Scalar::zero() {
            return Err(Error::Config("κ must be non-negative".into()));
        }
        if self.records == 0 || self.records > self.steps {
            return Err(Error::Config("records must lie in 1..=steps".into()));
        }
        if let Some(z) = self.grid.iter().find(|z| z.im < self.im_floor) {
            return Err(Error::Config(format!("starting point {z} is below the imaginary floor {}", self.im_floor)));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.steps as f64
    }

    fn sqrt_kappa(&self) -> f64 {
        scalar::to_f64(&self.kappa).sqrt()
    }
}

/// Independent stream per path, so adding paths never changes earlier ones.
pub fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn increments(seed: u64, path: usize, steps: usize, dt: f64) -> Vec<f64> {
    let mut rng = path_rng(seed, path);
    let s = dt.sqrt();
    (0..steps).map(|_| { let x: f64 = StandardNormal.sample(&mut rng); s * x }).collect::<Vec<f64>>()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathTrace {
    /// `g_t(z)` per recording time, per grid point.
    pub g: Vec<Vec<Complex64>>,
    /// `f_t(z) = g_t(z) − √κB_t`
    pub f: Vec<Vec<Complex64>>,
    /// `B_t` per recording time.
    pub b: Vec<f64>,
    /// Swallowing time per grid point.
    pub swallowed: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOutput {
    pub times: Vec<f64>,
    pub paths: Vec<PathTrace>,
}

impl SimOutput {
    pub fn all_swallowed(&self) -> bool {
        self.paths.iter().all(|p| p.swallowed.iter().all(Option::is_some))
    }
}

/// Euler–Maruyama for `∂_t g = 2/(g − √κB_t)`, `g₀(z) = z`.
pub fn simulate_sle(cfg: &SimConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let dt = cfg.dt();
    let every = cfg.steps / cfg.records;
    let mut times = vec![0.0];
    times.extend((1..=cfg.records).map(|r| (r * every) as f64 * dt));
    let paths = (0..cfg.paths).into_par_iter().map(|p| run_path(cfg, p, every)).collect();
    Ok(SimOutput { times, paths })
}

fn run_path(cfg: &SimConfig, path: usize, every: usize) -> PathTrace {
    let dt = cfg.dt();
    let sk = cfg.sqrt_kappa();
    let db = increments(cfg.seed, path, cfg.steps, dt);
    let n = cfg.grid.len();
    let mut g = cfg.grid.clone();
    let mut swallowed = vec![None; n];
    let mut b = 0.0;
    let mut trace = PathTrace { g: vec![g.clone()], f: vec![g.clone()], b: vec![0.0], swallowed: Vec::new() };
    for (step, dbi) in db.iter().enumerate() {
        for (i, gi) in g.iter_mut().enumerate() {
            if swallowed[i].is_some() {
                continue;
            }
            let den = *gi - sk * b;
            if den.norm() < cfg.swallow_threshold || gi.im < cfg.swallow_threshold {
                swallowed[i] = Some(step as f64 * dt);
                continue;
            }
            *gi += 2.0 / den * dt;
        }
        b += dbi;
        if (step + 1) % every == 0 && trace.g.len() <= cfg.records {
            trace.f.push(g.iter().map(|gi| *gi - sk * b).collect());
            trace.g.push(g.clone());
            trace.b.push(b);
        }
    }
    trace.swallowed = swallowed;
    trace
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Observation {
    pub t: f64,
    pub observable: String,
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Reads one observable from a trace at (record, grid point, time).
type Sample = fn(&PathTrace, usize, usize, f64) -> f64;

/// Per-time sample statistics of `Re/Im g`, `Re/Im f` and the swallowed
/// fraction at every grid point.
pub fn summarize(cfg: &SimConfig, out: &SimOutput) -> Vec<Observation> {
    let mut rows = Vec::new();
    let n = out.paths.len();
    for (r, &t) in out.times.iter().enumerate() {
        for (i, z) in cfg.grid.iter().enumerate() {
            let label = format!("{}{:+}i", z.re, z.im);
            let series: [(&str, Sample); 5] = [
                ("re_g", |p, r, i, _| p.g[r][i].re),
                ("im_g", |p, r, i, _| p.g[r][i].im),
                ("re_f", |p, r, i, _| p.f[r][i].re),
                ("im_f", |p, r, i, _| p.f[r][i].im),
                ("swallowed", |p, _, i, t| p.swallowed[i].is_some_and(|s| s <= t) as u8 as f64),
            ];
            for (name, get) in series {
                let xs: Vec<f64> = out.paths.iter().map(|p| get(p, r, i, t)).collect();
                let (mean, stderr) = mean_stderr(&xs);
                rows.push(Observation { t, observable: format!("{name}[{label}]"), mean, stderr, n_paths: n });
            }
        }
    }
    rows
}

pub fn write_csv<W: std::io::Write>(rows: &[Observation], mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,observable,mean,stderr,n_paths")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.t, r.observable, r.mean, r.stderr, r.n_paths)?;
    }
    Ok(())
}

/// `√(z² + 4t)` on the branch in the upper half plane, the κ = 0 solution.
pub fn deterministic_flow(z: Complex64, t: f64) -> Complex64 {
    let w = (z * z + 4.0 * t).sqrt();
    if w.im < 0.0 || (w.im == 0.0 && w.re * z.re < 0.0) {
        -w
    } else {
        w
    }
}

/// `|g_T(z) − √(z² + 4T)|` for the κ = 0 Euler scheme.
pub fn deterministic_error(z: Complex64, t_max: f64, steps: usize) -> f64 {
    let dt = t_max / steps as f64;
    let mut g = z;
    for _ in 0..steps {
        g += 2.0 / g * dt;
    }
    (g - deterministic_flow(z, t_max)).norm()
}

/// Ratio of the κ = 0 errors at `steps` and `2·steps`; close to 2 for a
/// first-order scheme.
pub fn convergence_ratio(z: Complex64, t_max: f64, steps: usize) -> f64 {
    deterministic_error(z, t_max, steps) / deterministic_error(z, t_max, 2 * steps)
}

/// Sparse `f64` copy of an exact matrix.
#[derive(Clone, Debug)]
struct Sparse {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Sparse {
    fn from_matrix(m: &Matrix, scale: f64) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if !m[(i, j)].is_zero() {
                    entries.push((i, j, scale * m[(i, j)].to_f64().expect("finite rational")));
                }
            }
        }
        Sparse { n: m.rows(), entries }
    }

    fn apply_add(&self, v: &[f64], factor: f64, out: &mut [f64]) {
        for &(i, j, a) in &self.entries {
            out[i] += factor * a * v[j];
        }
    }
}

/// One quotient coordinate of the Monte Carlo estimate.
#[derive(Clone, Debug, Serialize)]
pub struct ComponentEstimate {
    pub state: String,
    pub mean: f64,
    pub stderr: f64,
    /// Exact `E[𝒢_T|Δ⟩]` under the same projection.
    pub exact: f64,
    /// Exact mean of the Euler product, `(I + AΔt)ᴺ|Δ⟩`, projected.
    pub scheme: f64,
    /// The coordinate of `|Δ⟩`, the value conservation in mean predicts.
    pub conserved: f64,
    pub z_exact: f64,
    pub z_scheme: f64,
    pub z_conserved: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MartingaleEstimate {
    pub kappa: String,
    pub c: String,
    pub delta: String,
    pub level: String,
    pub t_max: f64,
    pub steps: usize,
    pub paths: usize,
    pub components: Vec<ComponentEstimate>,
}

impl MartingaleEstimate {
    pub fn max_abs_z_conserved(&self) -> f64 {
        self.components.iter().map(|c| c.z_conserved.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_z_exact(&self) -> f64 {
        self.components.iter().map(|c| c.z_exact.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_z_scheme(&self) -> f64 {
        self.components.iter().map(|c| c.z_scheme.abs()).fold(0.0, f64::max)
    }

    /// Every coordinate within `tol` standard errors of `|Δ⟩`.
    pub fn conserved_within(&self, tol: f64) -> bool {
        self.max_abs_z_conserved() <= tol
    }
}

fn z_score(mean: f64, target: f64, se: f64) -> f64 {
    let d = mean - target;
    // deterministic coordinates carry only rounding noise
    let se = se.max(1e-12 * (1.0 + target.abs()));
    if se > 0.0 {
        d / se
    } else {
        0.0
    }
}

/// Samples `ρ(𝒢_T)|Δ⟩` for the classical walk `d𝒢 = 𝒢(α dt + √κL₋₁ dB)`,
/// `α = −2L₋₂ + (κ/2)L₋₁²`, on states up to `max_level2`, and compares the
/// quotient coordinates (modulo the singular submodule) with the exact
/// expectation.
///
/// Each path uses the Euler product `Πₙ(I + AΔt + BΔBₙ)` applied to `|Δ⟩`
/// from the right, so only matrix–vector products are needed.
pub fn estimate_martingale(cfg: &SimConfig, max_level2: i32, c: &Scalar, delta: &Scalar) -> Result<MartingaleEstimate> {
    cfg.validate()?;
    if max_level2 > 8 {
        return Err(Error::Config("truncation above level 4 is not supported".into()));
    }
    let alph = Alphabet::standard();
    let module = VermaModule::with_alphabet(Sector::Virasoro, c.clone(), delta.clone(), &alph);
    let one = |x: Scalar| GrassmannNumber::scalar(&alph, x);
    let l = |n: i32, x: Scalar| AlgebraElement::from_word(Sector::Virasoro, c.clone(), one(x), vec![Mode::l(n)]);
    let l11 = AlgebraElement::from_word(Sector::Virasoro, c.clone(), one(&cfg.kappa / scalar::int(2)), vec![Mode::l(-1); 2])?;
    let alpha = l(-2, scalar::int(-2))?.try_add(&l11)?;
    let (basis, a_exact) = operator_matrix(&module, &alpha, max_level2)?;
    let (_, l1_exact) = operator_matrix(&module, &l(-1, scalar::int(1))?, max_level2)?;
    let dim = basis.len();
    let e0 = basis.iter().position(Vec::is_empty).expect("highest-weight state in basis");

    // projection onto canonical quotient coordinates
    let sub = module.singular_submodule(max_level2)?;
    let mut proj = Matrix::zeros(dim, dim);
    for lev in (0..=max_level2).step_by(Sector::Virasoro.level_step2() as usize) {
        let Some((words, span)) = sub.level(lev) else { continue };
        let idx: Vec<usize> = words.iter().map(|w| basis.iter().position(|b| b == w).expect("level basis")).collect();
        let p = span.projection_matrix();
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                proj[(i, j)] = p[(a, b)].clone();
            }
        }
    }
    let exact_col = nilpotent_exponential_column(&a_exact, e0)?;
    let exact_proj: Vec<Scalar> = {
        // t_max is a finite double, so this is exact
        let t = [Scalar::from_float(cfg.t_max).expect("finite t_max")];
        let v: Vec<Scalar> = exact_col.iter().map(|p: &Poly| p.evaluate(&t)).collect();
        proj.mul_vec(&v)
    };
    let mut e0v = vec![Scalar::zero(); dim];
    e0v[e0] = scalar::int(1);
    let conserved = proj.mul_vec(&e0v);

    let a = Sparse::from_matrix(&a_exact, 1.0);
    let bm = Sparse::from_matrix(&l1_exact, cfg.sqrt_kappa());
    let p = Sparse::from_matrix(&proj, 1.0);
    let dt = cfg.dt();
    // increments are independent with mean zero, so the scheme mean is (I + AΔt)ᴺ e₀
    let mut scheme_v = vec![0.0; dim];
    scheme_v[e0] = 1.0;
    for _ in 0..cfg.steps {
        let mut next = scheme_v.clone();
        a.apply_add(&scheme_v, dt, &mut next);
        scheme_v = next;
    }
    let mut scheme_proj = vec![0.0; dim];
    p.apply_add(&scheme_v, 1.0, &mut scheme_proj);

    let samples: Vec<Vec<f64>> = (0..cfg.paths)
        .into_par_iter()
        .map(|path| {
            let db = increments(cfg.seed, path, cfg.steps, dt);
            let mut v = vec![0.0; dim];
            v[e0] = 1.0;
            let mut next = vec![0.0; dim];
            for dbi in db.iter().rev() {
                next.copy_from_slice(&v);
                a.apply_add(&v, dt, &mut next);
                bm.apply_add(&v, *dbi, &mut next);
                std::mem::swap(&mut v, &mut next);
            }
            let mut out = vec![0.0; p.n];
            p.apply_add(&v, 1.0, &mut out);
            out
        })
        .collect();

    let mut components = Vec::new();
    for i in 0..dim {
        if (0..dim).all(|j| proj[(i, j)].is_zero()) {
            continue;
        }
        let xs: Vec<f64> = samples.iter().map(|s| s[i]).collect();
        let (mean, stderr) = mean_stderr(&xs);
        let exact = scalar::to_f64(&exact_proj[i]);
        let cons = scalar::to_f64(&conserved[i]);
        components.push(ComponentEstimate {
            state: word_to_string(&basis[i]),
            mean,
            stderr,
            exact,
            scheme: scheme_proj[i],
            conserved: cons,
            z_exact: z_score(mean, exact, stderr),
            z_scheme: z_score(mean, scheme_proj[i], stderr),
            z_conserved: z_score(mean, cons, stderr),
        });
    }
    Ok(MartingaleEstimate {
        kappa: scalar::format(&cfg.kappa),
        c: scalar::format(c),
        delta: scalar::format(delta),
        level: scalar::half_str(max_level2),
        t_max: cfg.t_max,
        steps: cfg.steps,
        paths: cfg.paths,
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{frac, int};

    #[test]
    fn initial_values_and_definition_of_f() {
        let mut cfg = SimConfig::new(frac(8, 3));
        cfg.paths = 4;
        cfg.steps = 200;
        cfg.records = 4;
        let out = simulate_sle(&cfg).unwrap();
        let sk = (8.0f64 / 3.0).sqrt();
        for p in &out.paths {
            assert_eq!(p.g[0], cfg.grid);
            for r in 0..out.times.len() {
                for i in 0..cfg.grid.len() {
                    assert!((p.f[r][i] + sk * p.b[r] - p.g[r][i]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn paths_do_not_depend_on_path_count() {
        let mut cfg = SimConfig::new(int(2));
        cfg.paths = 3;
        cfg.steps = 100;
        let a = simulate_sle(&cfg).unwrap();
        cfg.paths = 5;
        let b = simulate_sle(&cfg).unwrap();
        assert_eq!(a.paths[..], b.paths[..3]);
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = SimConfig::new(int(2));
        cfg.grid = vec![Complex64::new(0.0, 0.0)];
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::new(int(-1));
        cfg.steps = 10;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn deterministic_branch() {
        let z = Complex64::new(-1.0, 1.0);
        let w = deterministic_flow(z, 0.0);
        assert!((w - z).norm() < 1e-15);
    }

    #[test]
    fn martingale_estimate_on_locus() {
        let kappa = frac(8, 3);
        let (c, delta) = crate::catalog::classical_locus_kappa(&kappa);
        let mut cfg = SimConfig::new(kappa);
        cfg.paths = 400;
        cfg.steps = 200;
        cfg.seed = 7;
        let est = estimate_martingale(&cfg, 4, &c, &delta).unwrap();
        assert!(!est.components.is_empty());
        assert!(est.conserved_within(4.0), "{est:?}");
        for comp in &est.components {
            assert!((comp.exact - comp.conserved).abs() < 1e-12, "{comp:?}");
        }
    }
}
