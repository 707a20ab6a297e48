//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use supersle_core::catalog::{self, SolutionId};
use supersle_core::linalg::Span;
use supersle_core::linkmaps::{martingale_check, CentralChargeLocus, WalkSpec};
use supersle_core::scalar::{frac, int, Scalar};
use supersle_core::sim::SimConfig;
use supersle_core::suite;
use supersle_core::superalg::{parse_word, Sector, VermaModule, VermaState};
use supersle_core::superspace::Structure;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: supersle_core::Error) -> String {
    e.to_string()
}

fn random_rational(rng: &mut ChaCha8Rng) -> Scalar {
    let q: i64 = rng.gen_range(1..=12);
    let p: i64 = rng.gen_range(-40..=40);
    frac(p, q)
}

fn ks() -> Vec<Scalar> {
    vec![frac(1, 2), int(1), frac(4, 3), int(2), frac(5, 2), int(3)]
}

fn algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cs: Vec<Scalar> = (0..3).map(|_| random_rational(&mut rng)).collect();
    for sector in [Sector::NeveuSchwarz, Sector::Ramond] {
        let r = suite::check_algebra(sector, 5, &cs).map_err(err)?;
        ensure(r.passed(), || format!("{sector}: {}", r.details["failures"]))?;
    }
    Ok(())
}

/// Closed-form singular vectors, written out by hand.
fn explicit_singular(m: &VermaModule, sector: Sector, c: &Scalar, d: &Scalar) -> VermaState {
    let w = |s: &str| parse_word(s).unwrap();
    let terms = match sector {
        Sector::NeveuSchwarz => vec![(d + frac(1, 2), w("G-3/2")), (int(-1), w("L-1 G-1/2"))],
        Sector::Ramond => vec![(d * int(8) + c, w("L-1")), (int(-6), w("G-1 G0"))],
        Sector::Virasoro => vec![(int(2) * (int(2) * d + int(1)), w("L-2")), (int(-3), w("L-1 L-1"))],
    };
    m.state(&terms).unwrap()
}

fn singular() -> Outcome {
    let deltas = [frac(1, 1), frac(1, 3), frac(-1, 4), frac(5, 2), frac(2, 7), frac(-3, 5), frac(3, 32)];
    for (sector, level2) in [(Sector::NeveuSchwarz, 3), (Sector::Ramond, 2), (Sector::Virasoro, 4)] {
        for d in &deltas {
            let c = suite::singular_constraint(sector, level2, d).flatten().ok_or("Δ off the regular range")?;
            let r = suite::check_singular(sector, level2, &c, d).map_err(err)?;
            ensure(r.passed(), || format!("{sector} Δ={d}: {}", r.details))?;
            let m = VermaModule::new(sector, c.clone(), d.clone());
            let found = m.find_singular(level2).map_err(err)?;
            let basis = m.basis(level2);
            let vecs: Vec<_> = found.iter().map(|s| s.rational_vector(&basis).unwrap()).collect();
            let target = explicit_singular(&m, sector, &c, d).rational_vector(&basis).map_err(err)?;
            ensure(Span::new(basis.len(), &vecs).contains(&target), || format!("{sector} Δ={d}: explicit vector missing"))?;
        }
    }
    Ok(())
}

fn link() -> Outcome {
    for id in SolutionId::ALL {
        for k in [frac(2, 3), frac(3, 2), int(2)] {
            let r = suite::check_link(id.name(), &id.walk(&k), Some(&catalog::reference_sde(id, &k))).map_err(err)?;
            ensure(r.passed(), || format!("{id} k={k}: {}", r.details))?;
        }
    }
    Ok(())
}

fn solutions() -> Outcome {
    for id in SolutionId::ALL {
        for k in [frac(1, 2), frac(3, 2), int(3)] {
            let r = suite::check_solution(id, &k).map_err(err)?;
            ensure(r.passed(), || format!("{id} k={k}: {}", r.details))?;
            ensure(!catalog::solution(id, &k).intermediates.is_empty() || id == SolutionId::NsConv, || {
                format!("{id}: no intermediates")
            })?;
        }
    }
    Ok(())
}

fn superconformal() -> Outcome {
    for id in SolutionId::ALL {
        for k in ks() {
            let r = suite::check_superconformal(id, &k).map_err(err)?;
            ensure(r.passed(), || format!("{id} k={k}: {}", r.details))?;
            ensure((id.structure() == Structure::Conv) == r.details["components"].is_boolean(), || {
                format!("{id}: component check missing")
            })?;
        }
    }
    Ok(())
}

fn reject_off_locus(w: &WalkSpec, rng: &mut ChaCha8Rng, label: &str) -> Outcome {
    let mut tried = 0;
    while tried < 10 {
        let (c, d) = (random_rational(rng), random_rational(rng));
        if c == w.c && d == w.delta {
            continue;
        }
        tried += 1;
        let r = martingale_check(&w.with_params(c.clone(), d.clone())).map_err(err)?;
        ensure(!r.in_submodule, || format!("{label}: accepted off-locus (c, Δ) = ({c}, {d})"))?;
    }
    Ok(())
}

fn loci() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in ks() {
        let kappa = &k * &k;
        let ck = frac(15, 2) - int(3) * (&kappa + Scalar::one() / &kappa);
        let (c, d) = catalog::classical_locus(&k);
        let w = catalog::classical_walk(&k, c.clone(), d);
        let r = martingale_check(&w).map_err(err)?;
        ensure(r.in_submodule && r.c_locus == CentralChargeLocus::Points(vec![c]), || format!("classical k={k}"))?;
        reject_off_locus(&w, &mut rng, "classical")?;
        for s in [Structure::Conv, Structure::Alt] {
            let (c, d) = catalog::ns_locus(&k);
            ensure(&kappa * (&d + frac(1, 2)) == Scalar::one(), || "ns branch".into())?;
            let w = catalog::ns_walk(&k, s, c.clone(), d);
            let r = martingale_check(&w).map_err(err)?;
            ensure(r.in_submodule, || format!("ns-{s} k={k}"))?;
            ensure(r.c_locus == CentralChargeLocus::Points(vec![ck.clone()]), || format!("ns-{s} k={k}: {}", r.c_locus.describe()))?;
            reject_off_locus(&w, &mut rng, "ns")?;

            let (c1, d1) = catalog::ramond_locus(&k);
            let w = catalog::ramond_walk(&k, s, c1, d1);
            let r = martingale_check(&w).map_err(err)?;
            ensure(r.in_submodule, || format!("ramond-{s} k={k}"))?;
            ensure(r.c_locus.contains(&ck) == Some(true), || format!("ramond-{s} k={k}: {}", r.c_locus.describe()))?;
            reject_off_locus(&w, &mut rng, "ramond")?;
        }
    }
    Ok(())
}

fn expected() -> Outcome {
    let k = frac(3, 2);
    for id in SolutionId::ALL {
        let w = id.walk(&k);
        ensure(w.structure == id.structure() && w.sector == id.sector(), || format!("{id} walk"))?;
        let r = suite::check_expected(id.name(), &w, 4, false).map_err(err)?;
        ensure(r.passed(), || format!("{id}: {}", r.details))?;
    }
    let (c, d) = catalog::classical_locus(&k);
    let r = suite::check_expected("classical", &catalog::classical_walk(&k, c, d), 8, true).map_err(err)?;
    ensure(r.passed(), || format!("classical: {}", r.details))
}

fn numeric() -> Outcome {
    let kappa = frac(8, 3);
    let (c, d) = catalog::classical_locus_kappa(&kappa);
    ensure(c.is_zero() && d == frac(5, 8), || "κ = 8/3 locus".into())?;
    let mut cfg = SimConfig::new(kappa);
    cfg.paths = 10_000;
    cfg.steps = 1000;
    cfg.t_max = 1.0;
    cfg.seed = 2024;
    let r = suite::check_numeric(&cfg, 8, &c, &d).map_err(err)?;
    ensure(r.passed(), || {
        format!(
            "max |z| vs |Δ⟩ {}, vs exact {}, κ=0 error {}, halving ratio {}",
            r.details["max_abs_z_conserved"], r.details["max_abs_z_exact"], r.details["deterministic_error"], r.details["halving_ratio"]
        )
    })?;
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 algebra relations", algebra, Duration::from_secs(1)),
        ("2 singular vectors", singular, Duration::from_secs(5)),
        ("3 link formulas", link, Duration::from_secs(5)),
        ("4 solutions", solutions, Duration::from_secs(5)),
        ("5 superconformality", superconformal, Duration::from_secs(2)),
        ("6 martingale loci", loci, Duration::from_secs(10)),
        ("7 conservation in mean", expected, Duration::from_secs(10)),
        ("8 numeric cross-check", numeric, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|_| {
            ensure(elapsed <= budget, || format!("took {:.2}s, budget {}s", elapsed.as_secs_f64(), budget.as_secs()))
        });
        match outcome {
            Ok(()) => println!("PASS criterion {name} ({:.2}s)", elapsed.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name} ({:.2}s): {msg}", elapsed.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
