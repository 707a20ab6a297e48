use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num::complex::Complex64;
use supersle_core::catalog::{self, SolutionId};
use supersle_core::linkmaps::{WalkJson, WalkSpec};
use supersle_core::scalar::{self, Scalar};
use supersle_core::sim::{self, SimConfig};
use supersle_core::suite::{self, Report};
use supersle_core::superalg::Sector;
use supersle_core::superspace::Structure;

#[derive(Parser)]
#[command(name = "supersle", version, about = "Exact checks and Monte Carlo for (super) SLE walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Graded Jacobi identity over a window of modes.
    CheckAlgebra {
        #[arg(long, default_value = "ns")]
        sector: Sector,
        /// Largest |mode index|.
        #[arg(long, default_value_t = 5)]
        range: i32,
        /// Central charges to test, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "13/7,-2/5,3/2")]
        c: Vec<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Singular vectors at one level.
    Singular {
        /// `ns32`, `r1` or `vir2`: the first nontrivial level of each sector.
        preset: Option<Preset>,
        #[arg(long)]
        sector: Option<Sector>,
        /// Level, may be a half-integer.
        #[arg(long)]
        level: Option<String>,
        /// Defaults to the value solving the level's singular-vector condition.
        #[arg(long)]
        c: Option<String>,
        #[arg(long)]
        delta: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Build the SDE of a walk and verify the linking identity.
    Link {
        #[command(flatten)]
        walk: WalkArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Check a closed-form solution against its SDE.
    VerifySolution {
        /// ns-conv, r-conv, r-alt or ns-alt.
        id: SolutionId,
        #[arg(long, default_value = "9/4")]
        kappa: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact martingale test of a walk, optionally with a Monte Carlo estimate
    /// for the classical walk.
    Martingale {
        #[command(flatten)]
        walk: WalkArgs,
        /// Also check the expected state up to this level.
        #[arg(long)]
        level: Option<String>,
        /// Monte Carlo estimate of the classical walk (κ need not be a square).
        #[arg(long)]
        monte_carlo: bool,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Euler–Maruyama simulation of the Löwner flow.
    Simulate {
        #[arg(long, default_value = "8/3")]
        kappa: String,
        #[command(flatten)]
        sim: SimArgs,
        /// Starting points as re:im, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1:1,-1:1,0.5:2")]
        grid: Vec<String>,
        #[arg(long, default_value_t = 10)]
        records: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run named checks (all when none are given).
    Suite {
        names: Vec<String>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Ns32,
    R1,
    Vir2,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WalkArgs {
    /// Walk description in JSON.
    #[arg(long, conflicts_with_all = ["sector", "solution"])]
    walk: Option<PathBuf>,
    /// One of the built-in walks (ns-conv, r-conv, r-alt, ns-alt).
    #[arg(long, conflicts_with = "sector")]
    solution: Option<SolutionId>,
    /// ns, ramond or virasoro (the classical walk).
    #[arg(long)]
    sector: Option<Sector>,
    #[arg(long, default_value = "conv")]
    structure: Structure,
    /// Must be a rational square for the super walks.
    #[arg(long, default_value = "9/4")]
    kappa: String,
    /// Defaults to the walk's locus.
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    delta: Option<String>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SimArgs {
    fn config(&self, kappa: Scalar) -> SimConfig {
        let mut cfg = SimConfig::new(kappa);
        cfg.paths = self.paths;
        cfg.steps = self.steps;
        cfg.t_max = self.t_max;
        cfg.seed = self.seed;
        cfg
    }
}

fn rational(s: &str) -> Result<Scalar> {
    scalar::parse(s).map_err(|e| anyhow!("{e}"))
}

fn sqrt_kappa(kappa: &Scalar) -> Result<Scalar> {
    scalar::sqrt_exact(kappa).ok_or_else(|| anyhow!("κ = {} has no rational square root", scalar::format(kappa)))
}

impl WalkArgs {
    fn build(&self) -> Result<(String, WalkSpec)> {
        if let Some(path) = &self.walk {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let j: WalkJson = serde_json::from_str(&text)?;
            let w = WalkSpec::from_json(&j)?;
            return Ok((path.display().to_string(), self.override_params(w)?));
        }
        let kappa = rational(&self.kappa)?;
        let k = sqrt_kappa(&kappa)?;
        let (name, w) = match (self.solution, self.sector) {
            (Some(id), _) => (id.name().to_string(), id.walk(&k)),
            (None, Some(Sector::Virasoro)) => {
                let (c, d) = catalog::classical_locus(&k);
                ("classical".to_string(), catalog::classical_walk(&k, c, d))
            }
            (None, Some(Sector::NeveuSchwarz)) => {
                let (c, d) = catalog::ns_locus(&k);
                (format!("ns-{}", self.structure), catalog::ns_walk(&k, self.structure, c, d))
            }
            (None, Some(Sector::Ramond)) => {
                let (c, d) = catalog::ramond_locus(&k);
                (format!("ramond-{}", self.structure), catalog::ramond_walk(&k, self.structure, c, d))
            }
            (None, None) => bail!("give --walk, --solution or --sector"),
        };
        Ok((name, self.override_params(w)?))
    }

    fn override_params(&self, w: WalkSpec) -> Result<WalkSpec> {
        let c = self.c.as_deref().map(rational).transpose()?.unwrap_or_else(|| w.c.clone());
        let d = self.delta.as_deref().map(rational).transpose()?.unwrap_or_else(|| w.delta.clone());
        Ok(w.with_params(c, d))
    }
}

fn emit(reports: &[Report], out: &OutArgs) -> Result<bool> {
    let text = serde_json::to_string_pretty(reports)?;
    match &out.out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    for r in reports {
        eprintln!("{:<4} {}", if r.passed() { "PASS" } else { "FAIL" }, r.name);
    }
    Ok(suite::all_passed(reports))
}

fn parse_point(s: &str) -> Result<Complex64> {
    let (re, im) = s.split_once(':').ok_or_else(|| anyhow!("expected re:im, got {s:?}"))?;
    Ok(Complex64::new(re.trim().parse()?, im.trim().parse()?))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::CheckAlgebra { sector, range, c, out } => {
            let cs = c.iter().map(|s| rational(s)).collect::<Result<Vec<_>>>()?;
            emit(&[suite::check_algebra(sector, range, &cs)?], &out)
        }
        Command::Singular { preset, sector, level, c, delta, out } => {
            let (sector, level2) = match (preset, sector, level) {
                (Some(Preset::Ns32), None, None) => (Sector::NeveuSchwarz, 3),
                (Some(Preset::R1), None, None) => (Sector::Ramond, 2),
                (Some(Preset::Vir2), None, None) => (Sector::Virasoro, 4),
                (None, Some(s), Some(l)) => (s, scalar::parse_half(&l).map_err(|e| anyhow!("{e}"))?),
                _ => bail!("give a preset or both --sector and --level"),
            };
            let delta = rational(&delta)?;
            let c = match c {
                Some(c) => rational(&c)?,
                None => suite::singular_constraint(sector, level2, &delta)
                    .flatten()
                    .ok_or_else(|| anyhow!("no default c for this level and Δ; pass --c"))?,
            };
            emit(&[suite::check_singular(sector, level2, &c, &delta)?], &out)
        }
        Command::Link { walk, out } => {
            let (name, w) = walk.build()?;
            let reference = walk.solution.filter(|_| walk.c.is_none() && walk.delta.is_none()).map(|id| {
                let k = sqrt_kappa(&rational(&walk.kappa)?)?;
                Ok::<_, anyhow::Error>(catalog::reference_sde(id, &k))
            });
            let reference = reference.transpose()?;
            emit(&[suite::check_link(&name, &w, reference.as_ref())?], &out)
        }
        Command::VerifySolution { id, kappa, out } => {
            let k = sqrt_kappa(&rational(&kappa)?)?;
            emit(&[suite::check_solution(id, &k)?, suite::check_superconformal(id, &k)?], &out)
        }
        Command::Martingale { walk, level, monte_carlo, sim, out } => {
            if monte_carlo {
                let kappa = rational(&walk.kappa)?;
                let (c0, d0) = catalog::classical_locus_kappa(&kappa);
                let c = walk.c.as_deref().map(rational).transpose()?.unwrap_or(c0);
                let d = walk.delta.as_deref().map(rational).transpose()?.unwrap_or(d0);
                let level2 = match level {
                    Some(l) => scalar::parse_half(&l).map_err(|e| anyhow!("{e}"))?,
                    None => 8,
                };
                return emit(&[suite::check_numeric(&sim.config(kappa), level2, &c, &d)?], &out);
            }
            let (name, w) = walk.build()?;
            let mut reports = vec![suite::check_martingale(&name, &w)?];
            if let Some(l) = level {
                let level2 = scalar::parse_half(&l).map_err(|e| anyhow!("{e}"))?;
                reports.push(suite::check_expected(&name, &w, level2, false)?);
            }
            emit(&reports, &out)
        }
        Command::Simulate { kappa, sim: args, grid, records, format, out } => {
            let mut cfg = args.config(rational(&kappa)?);
            cfg.grid = grid.iter().map(|s| parse_point(s)).collect::<Result<_>>()?;
            cfg.records = records;
            let output = sim::simulate_sle(&cfg)?;
            if output.all_swallowed() {
                eprintln!("warning: every point was swallowed before t_max");
            }
            let rows = sim::summarize(&cfg, &output);
            let mut buf = Vec::new();
            match format {
                Format::Csv => sim::write_csv(&rows, &mut buf)?,
                Format::Json => {
                    serde_json::to_writer_pretty(&mut buf, &rows)?;
                    buf.push(b'\n');
                }
            }
            match out {
                Some(p) => fs::write(&p, buf).with_context(|| format!("writing {}", p.display()))?,
                None => std::io::stdout().write_all(&buf)?,
            }
            Ok(true)
        }
        Command::Suite { names, out } => emit(&suite::run_suite(&names)?, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
