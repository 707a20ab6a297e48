use proptest::prelude::*;
use std::sync::Arc;
use supersle_core::catalog;
use supersle_core::grassmann::{Alphabet, GrassmannNumber, Parity, EPS, ETA, XI, Y};
use supersle_core::itocalc::{expectation, ito_d, ItoPoly};
use supersle_core::linalg::Span;
use supersle_core::poly::{self, Monomial, Poly, TIME};
use supersle_core::scalar::{frac, int, Scalar};
use supersle_core::sim::{self, SimConfig};
use supersle_core::superalg::{Sector, VermaModule};
use supersle_core::superspace::SuperFunction;

fn alph() -> Arc<Alphabet> {
    Alphabet::standard()
}

fn q(n: i64) -> Scalar {
    frac(n, 3)
}

/// Even and odd Grassmann numbers from small integer weights.
fn even_number(w: &[i64; 3]) -> GrassmannNumber {
    let a = alph();
    let mut g = GrassmannNumber::scalar(&a, q(w[0]));
    g = &g + &GrassmannNumber::generator(&a, Y).unwrap().scale(&q(w[1]));
    &g + &GrassmannNumber::monomial(&a, &[EPS, ETA]).unwrap().scale(&q(w[2]))
}

fn odd_number(w: &[i64; 3]) -> GrassmannNumber {
    let a = alph();
    let mut g = GrassmannNumber::generator(&a, ETA).unwrap().scale(&q(w[0]));
    g = &g + &GrassmannNumber::generator(&a, XI).unwrap().scale(&q(w[1]));
    &g + &GrassmannNumber::monomial(&a, &[Y, EPS]).unwrap().scale(&q(w[2]))
}

fn weights() -> impl Strategy<Value = [i64; 3]> {
    [-4i64..5, -4i64..5, -4i64..5]
}

/// Homogeneous superfunction `Σ (a + θb) z^e`, integer `e ∈ [−3, 3]`.
fn superfunction(odd: bool) -> impl Strategy<Value = SuperFunction> {
    proptest::collection::vec((-3i32..4, weights(), weights()), 1..4).prop_map(move |terms| {
        let a = alph();
        let mut f = SuperFunction::zero(&a);
        for (e, wa, wb) in terms {
            let (even, theta) = if odd { (odd_number(&wa), even_number(&wb)) } else { (even_number(&wa), odd_number(&wb)) };
            f = &f + &SuperFunction::term(2 * e, even, theta);
        }
        f
    })
}

fn ito_poly() -> impl Strategy<Value = ItoPoly> {
    proptest::collection::vec((0u32..3, 0u32..3, -3i32..3, weights(), any::<bool>()), 1..4).prop_map(|terms| {
        let a = alph();
        let mut f = SuperFunction::zero(&a);
        for (i, j, e, w, odd) in terms {
            let p = Poly::term(Monomial::var(TIME, i).mul(&Monomial::var(poly::brownian(1), j)), int(1));
            let g = if odd { odd_number(&w) } else { even_number(&w) }.scale_poly(&p);
            let zero = GrassmannNumber::zero(&a);
            f = &f + &if odd { SuperFunction::term(2 * e, zero, g) } else { SuperFunction::term(2 * e, g, zero) };
        }
        ItoPoly::new(f, 1)
    })
}

fn sign(p: Parity) -> Scalar {
    match p {
        Parity::Even => int(1),
        Parity::Odd => int(-1),
        Parity::Mixed => panic!("inhomogeneous"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn graded_commutativity(wa in weights(), wb in weights(), oa in any::<bool>(), ob in any::<bool>()) {
        let a = if oa { odd_number(&wa) } else { even_number(&wa) };
        let b = if ob { odd_number(&wb) } else { even_number(&wb) };
        let s = if oa && ob { int(-1) } else { int(1) };
        prop_assert_eq!(&a * &b, (&b * &a).scale(&s));
    }

    #[test]
    fn inverse_and_square_root_multiply_back(w in weights(), n in 1i64..5) {
        let a = alph();
        let x = &GrassmannNumber::one(&a) + &(&even_number(&w) - &GrassmannNumber::scalar(&a, q(w[0]))).scale(&frac(1, n));
        prop_assert_eq!(&x * &x.inv().unwrap(), GrassmannNumber::one(&a));
        let r = x.pow(&frac(1, 2)).unwrap();
        prop_assert_eq!(&r * &r, x.clone());
        prop_assert_eq!(x.pow(&int(2)).unwrap(), &x * &x);
    }

    #[test]
    fn d_squared_is_d_z(f in superfunction(false), g in superfunction(true)) {
        for h in [f, g] {
            prop_assert_eq!(h.super_d().super_d(), h.d_z());
            let z = SuperFunction::z(h.alphabet());
            prop_assert_eq!(h.super_d_alt().super_d_alt(), &z * &h.d_z());
        }
    }

    #[test]
    fn graded_leibniz(f in superfunction(false), f_odd in superfunction(true), g in superfunction(true)) {
        for f in [f, f_odd] {
            let s = sign(f.parity());
            let lhs = (&f * &g).super_d();
            let rhs = &(&f.super_d() * &g) + &(&f * &g.super_d()).scale(&s);
            prop_assert_eq!(&lhs, &rhs);
            let lhs = (&f * &g).super_d_alt();
            let rhs = &(&f.super_d_alt() * &g) + &(&f * &g.super_d_alt()).scale(&s);
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn ito_product_rule(p in ito_poly(), r in ito_poly()) {
        let dp = ito_d(&p);
        let dr = ito_d(&r);
        let d = ito_d(&p.mul(&r));
        let drift = &(&(&dp.drift * r.value()) + &(p.value() * &dr.drift)) + &dp.bracket(&dr);
        prop_assert_eq!(&d.drift, &drift);
        let diff = &(&dp.diffusions[0] * r.value()) + &(p.value() * &dr.diffusions[0]);
        prop_assert_eq!(&d.diffusions[0], &diff);
    }

    #[test]
    fn dynkin_identity(p in ito_poly()) {
        let lhs = expectation(&p).value().map_coefficients(|c| c.derivative(TIME));
        let drift = ItoPoly::new(ito_d(&p).drift, 1);
        let rhs = expectation(&drift);
        prop_assert_eq!(&lhs, rhs.value());
    }

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>(), kn in 0i64..9) {
        let mut cfg = SimConfig::new(frac(kn, 2));
        cfg.paths = 4;
        cfg.steps = 50;
        cfg.records = 5;
        cfg.seed = seed;
        let render = |cfg: &SimConfig| {
            let out = sim::simulate_sle(cfg).unwrap();
            let mut buf = Vec::new();
            sim::write_csv(&sim::summarize(cfg, &out), &mut buf).unwrap();
            buf
        };
        prop_assert_eq!(render(&cfg), render(&cfg));
    }
}

/// Singular vectors exist exactly on the constraint curve, and span the
/// Gram kernel.
#[test]
fn singular_vector_certificates() {
    let deltas = [frac(1, 2), frac(1, 3), frac(-1, 4), frac(5, 2), frac(2, 7), frac(-3, 5), frac(7, 3), frac(3, 32), frac(-1, 8), int(2)];
    for (sector, level2) in [(Sector::NeveuSchwarz, 3), (Sector::Ramond, 2)] {
        for d in &deltas {
            let on = match sector {
                Sector::NeveuSchwarz => int(3) * d * (int(3) - int(2) * d) / (int(2) * d + int(1)),
                _ => int(8) * d * (int(9) - int(16) * d) / (int(16) * d + int(3)),
            };
            for (c, expect) in [(on.clone(), true), (&on + frac(1, 5), false)] {
                let m = VermaModule::new(sector, c.clone(), d.clone());
                let sing = m.find_singular(level2).unwrap();
                assert_eq!(!sing.is_empty(), expect, "{sector} c={c} Δ={d}");
                let basis = m.basis(level2);
                let kernel = Span::new(basis.len(), &m.gram_matrix(level2).unwrap().nullspace());
                let found = Span::new(basis.len(), &sing.iter().map(|s| s.rational_vector(&basis).unwrap()).collect::<Vec<_>>());
                assert_eq!(kernel.dim(), found.dim(), "{sector} c={c} Δ={d}");
                for v in found.basis() {
                    assert!(kernel.contains(v));
                }
            }
        }
    }
}

#[test]
fn super_central_charges_agree() {
    for k in [frac(1, 2), int(1), frac(4, 3), int(2), frac(5, 2), int(3)] {
        let (c_ns, d_ns) = catalog::ns_locus(&k);
        let (c_r, d_r) = catalog::ramond_locus(&k);
        assert_eq!(catalog::ns_singular_c(&d_ns), Some(c_ns.clone()));
        assert_eq!(catalog::ramond_singular_c(&d_r), Some(c_r.clone()));
        assert_eq!(c_ns, c_r);
        assert_eq!(c_ns, catalog::super_central_charge(&k));
    }
}
