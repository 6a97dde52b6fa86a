use btbs::fields::{BtbsField, Field, FnField, HeatField, KsField};
use btbs::model::{Family, FieldConfig, InitialData};
use btbs::quadrature::{Moment, QuadratureSpec};
use btbs::verify::{
    cross_term_coefficient, enumerate_sn, fd_apply, ln_operator, nonlinear_leading_coefficient, nonlinear_rhs,
    residual_bs_2n, residual_bs_nonlinear, residual_bs_system, residual_btbs_nonlinear, residual_btbs_system,
    residual_ks_system, sweep, CoeffSource, FdKind, Route, StencilSpec,
};
use btbs::Error;
use proptest::prelude::*;

fn cos(theta: f64) -> InitialData {
    InitialData::cosine(vec![theta]).unwrap()
}

#[test]
fn recursion_reproduces_printed_rows() {
    for n in 1..=3 {
        assert_eq!(
            ln_operator(n, CoeffSource::Recursion).unwrap(),
            ln_operator(n, CoeffSource::PrintedTable).unwrap(),
            "L_{n}"
        );
    }
    let rec = ln_operator(4, CoeffSource::Recursion).unwrap();
    let printed = ln_operator(4, CoeffSource::PrintedTable).unwrap();
    assert_ne!(rec, printed);
    assert_eq!(rec.to_string(), "L_4 = (1/2) Lap^1 + (7/4 t1 t2 t3 t4) Lap^2 + (3/4 t1^2 t2^2 t3^2 t4^2) Lap^3 + (1/16 t1^3 t2^3 t3^3 t4^3) Lap^4");
}

#[test]
fn sn_matches_brute_force() {
    for n in 2..=5usize {
        let mut brute = Vec::new();
        let mut k = vec![1u8; n];
        loop {
            let s: usize = k.iter().map(|&v| v as usize).sum();
            if s > n && s < 2 * n {
                brute.push(k.clone());
            }
            let mut i = n;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if k[i] == 1 {
                    k[i] = 2;
                    break;
                }
                k[i] = 1;
            }
            if k.iter().all(|&v| v == 1) {
                break;
            }
        }
        assert_eq!(enumerate_sn(n).unwrap(), brute);
        assert_eq!(brute.len(), (1 << n) - 2);
    }
    assert!(enumerate_sn(1).is_err());
}

#[test]
fn bs_system_with_exact_field() {
    for n in 1..=3usize {
        let cfg = FieldConfig::new(n, 2, Family::Bs).unwrap();
        let f = InitialData::cosine(vec![0.8, 1.3]).unwrap();
        let u = HeatField::new(cfg, f.clone()).unwrap();
        let t: Vec<f64> = (0..n).map(|i| 0.6 + 0.4 * i as f64).collect();
        let s = StencilSpec::default_for(&t);
        for j in 0..n {
            let r = residual_bs_system(&cfg, &f, j, &t, &[0.1, -0.4], &u, Route::Analytic, &s).unwrap();
            assert!(r.rel_residual < 1e-10, "{r:?}");
        }
        let r = residual_bs_nonlinear(&cfg, &f, &t, &[0.1, -0.4], &u, Route::Analytic, &s).unwrap();
        assert!(r.rel_residual < 1e-10, "{r:?}");
    }
}

#[test]
fn difference_residuals_decay_at_second_order() {
    let cfg = FieldConfig::new(2, 1, Family::Bs).unwrap();
    let f = cos(1.2);
    let u = HeatField::new(cfg, f.clone()).unwrap();
    let t = [0.9, 1.3];
    for h in [2e-2, 4e-2] {
        let a =
            residual_bs_system(&cfg, &f, 0, &t, &[0.3], &u, Route::EigenReduced, &StencilSpec::new(h, 1e-2).unwrap())
                .unwrap();
        let b = residual_bs_system(
            &cfg,
            &f,
            0,
            &t,
            &[0.3],
            &u,
            Route::EigenReduced,
            &StencilSpec::new(h / 2.0, 1e-2).unwrap(),
        )
        .unwrap();
        assert!(a.rel_residual / b.rel_residual >= 3.0, "{} {}", a.rel_residual, b.rel_residual);
        let a = residual_bs_2n(
            &cfg,
            &f,
            &t,
            &[0.3],
            &u,
            CoeffSource::Recursion,
            Route::EigenReduced,
            &StencilSpec::new(h, 1e-2).unwrap(),
        )
        .unwrap();
        let b = residual_bs_2n(
            &cfg,
            &f,
            &t,
            &[0.3],
            &u,
            CoeffSource::Recursion,
            Route::EigenReduced,
            &StencilSpec::new(h / 2.0, 1e-2).unwrap(),
        )
        .unwrap();
        assert!(a.rel_residual / b.rel_residual >= 3.0, "{} {}", a.rel_residual, b.rel_residual);
    }
}

#[test]
fn bs_2n_residuals() {
    for n in [2usize, 3] {
        let cfg = FieldConfig::new(n, 1, Family::Bs).unwrap();
        let f = cos(1.0);
        let u = HeatField::new(cfg, f.clone()).unwrap();
        let t = vec![1.1; n];
        let s = StencilSpec::new(1e-2, 1e-2).unwrap();
        for src in [CoeffSource::Recursion, CoeffSource::PrintedTable] {
            let r = residual_bs_2n(&cfg, &f, &t, &[0.2], &u, src, Route::Analytic, &s).unwrap();
            assert!(r.rel_residual < 1e-4, "n={n} {src:?}: {r:?}");
        }
    }
}

#[test]
fn ks_single_parameter_examples() {
    let cfg = FieldConfig::new(1, 1, Family::Ks).unwrap();
    let q = QuadratureSpec::default();
    for (f, tol) in [(cos(1.0), 1e-6), (InitialData::constant(1.0).unwrap(), 1e-8)] {
        let u = KsField::new(cfg, f.clone(), Moment::Plain, q).unwrap();
        let l = KsField::new(cfg, f.clone(), Moment::Linear(0), q).unwrap();
        let sq = KsField::new(cfg, f.clone(), Moment::Quadratic(0), q).unwrap();
        let t = [1.4];
        // The default step leaves an O(h^2) error near 2e-8 here.
        let s = StencilSpec::new(1e-4, 1e-2).unwrap();
        let r = residual_ks_system(&cfg, &f, 0, &t, &[0.0], &u, &l, &sq, Route::EigenReduced, &s).unwrap();
        assert!(r.rel_residual < tol, "{r:?}");
        if f.laplacian_eigenvalue() == Some(1.0) {
            let v = u.value(&t, &[0.0]).unwrap();
            assert!((r.rhs + v * 0.125).norm() < 1e-12);
        }
    }
}

#[test]
fn ks_two_parameter_quadrature_fields() {
    let cfg = FieldConfig::new(2, 1, Family::Ks).unwrap();
    let f = cos(1.1);
    let q = QuadratureSpec::default();
    let t = [0.8, 1.3];
    for j in 0..2 {
        let u = KsField::new(cfg, f.clone(), Moment::Plain, q).unwrap();
        let l = KsField::new(cfg, f.clone(), Moment::Linear(j), q).unwrap();
        let sq = KsField::new(cfg, f.clone(), Moment::Quadratic(j), q).unwrap();
        for route in [Route::EigenReduced, Route::FiniteDifference, Route::Analytic] {
            let r =
                residual_ks_system(&cfg, &f, j, &t, &[0.4], &u, &l, &sq, route, &StencilSpec::default_for(&t)).unwrap();
            assert!(r.rel_residual < 1e-3, "{route:?} j={j}: {r:?}");
        }
    }
}

#[test]
fn nonlinear_is_product_of_system() {
    let cfg = FieldConfig::new(2, 1, Family::Btbs).unwrap();
    let f = cos(1.3);
    let q = QuadratureSpec::default();
    let t = [0.9, 1.6];
    let x = [0.25];
    let s = StencilSpec::default_for(&t);
    let u = BtbsField::new(cfg, f.clone(), Moment::Plain, q).unwrap();
    let su: Vec<BtbsField> = (0..2).map(|j| BtbsField::new(cfg, f.clone(), Moment::Quadratic(j), q).unwrap()).collect();
    let refs: Vec<&dyn Field<Value = f64>> = su.iter().map(|b| b as &dyn Field<Value = f64>).collect();
    let sys: Vec<_> = (0..2)
        .map(|j| residual_btbs_system(&cfg, &f, j, &t, &x, &u, refs[j], Route::EigenReduced, &s).unwrap())
        .collect();
    let nl = residual_btbs_nonlinear(&cfg, &f, &t, &x, &u, &refs, Route::EigenReduced, &s).unwrap();
    let lhs_prod = sys[0].lhs * sys[1].lhs;
    let rhs_prod = sys[0].rhs * sys[1].rhs;
    assert!((nl.lhs - lhs_prod).norm() < 1e-14);
    assert!((nl.rhs - rhs_prod).norm() < 1e-12, "{} vs {}", nl.rhs, rhs_prod);
    let prod: f64 = (0..2).map(|j| cross_term_coefficient(&t, j).unwrap()).product();
    assert!((nonlinear_leading_coefficient(&t) - prod).abs() < 1e-15);
    assert!(nl.rel_residual < 5e-3);
}

#[test]
fn difference_footprints() {
    let g = FnField(|t: &[f64], x: &[f64]| Ok(t[0] * t[0] * t[1] + x[0]));
    let s = StencilSpec::new(1e-3, 1e-2).unwrap();
    let near = fd_apply(&g, FdKind::DtJ(0), &[5e-4, 1.0], &[0.0], &s).unwrap();
    assert!(near.one_sided && (near.value - 1e-3).abs() < 1e-9);
    let far = fd_apply(&g, FdKind::DtJ(0), &[1.0, 2.0], &[0.0], &s).unwrap();
    assert!(!far.one_sided && (far.value - 4.0).abs() < 1e-9);
    let mixed = fd_apply(&g, FdKind::MixedDtAll, &[1.0, 2.0], &[0.0], &s).unwrap();
    assert!((mixed.value - 2.0).abs() < 1e-8);
    assert!(matches!(
        fd_apply(&g, FdKind::MixedDtAll, &[5e-4, 2.0], &[0.0], &s),
        Err(Error::FootprintOutsideDomain(_))
    ));
    assert!(StencilSpec::new(0.0, 1.0).is_err());
}

#[test]
fn sweep_preserves_probe_order() {
    let cfg = FieldConfig::new(2, 1, Family::Bs).unwrap();
    let f = cos(0.7);
    let u = HeatField::new(cfg, f.clone()).unwrap();
    let probes: Vec<[f64; 2]> = (1..30).map(|i| [0.1 * i as f64, 1.0]).collect();
    let out = sweep(&probes, |t| {
        residual_bs_system(&cfg, &f, 1, t, &[0.0], &u, Route::Analytic, &StencilSpec::default_for(t))
    });
    for (p, r) in probes.iter().zip(out) {
        assert_eq!(r.unwrap().t, p.to_vec());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn analytic_bs_residual_vanishes(
        n in 1usize..4, theta in 0.1f64..3.0, x in -2.0f64..2.0, t0 in 0.1f64..3.0, t1 in 0.1f64..3.0, t2 in 0.1f64..3.0,
    ) {
        let cfg = FieldConfig::new(n, 1, Family::Bs).unwrap();
        let f = cos(theta);
        let u = HeatField::new(cfg, f.clone()).unwrap();
        let t = &[t0, t1, t2][..n];
        for j in 0..n {
            let r = residual_bs_system(&cfg, &f, j, t, &[x], &u, Route::Analytic, &StencilSpec::default_for(t)).unwrap();
            prop_assert!(r.rel_residual < 1e-10);
        }
    }

    #[test]
    fn rel_residual_definition(a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let r = btbs::verify::ResidualReport::new(a.into(), b.into(), &[1.0], &[0.0], None, None);
        prop_assert_eq!(r.abs_residual, (a - b).abs());
        prop_assert_eq!(r.rel_residual, (a - b).abs() / 1f64.max(a.abs()).max(b.abs()));
    }

    #[test]
    fn nonlinear_rhs_is_full_expansion(t1 in proptest::collection::vec(-2.0f64..2.0, 2..6), shift in -1.0f64..1.0) {
        // With every S_n term included, the sum is prod_j (T1_j + T2_j).
        let t2: Vec<f64> = t1.iter().map(|v| v + shift).collect();
        let full: f64 = t1.iter().zip(&t2).map(|(a, b)| a + b).product();
        let v = nonlinear_rhs(&t1, &t2).unwrap();
        prop_assert!((v - full).abs() < 1e-10 * full.abs().max(1.0));
    }
}
