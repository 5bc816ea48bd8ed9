use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;

use confhor::compactification::{
    forward, inverse, pullback_metric, to_log_basis, Basis, Chart, ChartMap, CompactPoint,
    ConformalFactor, ConformalSpec, MetricField, Minkowski, Patch,
};
use confhor::exact_solutions::{
    catalog, default_synthetic, kerr_chart_valid, make_kerr, make_reissner_nordstrom, make_roberts,
    make_schwarzschild, CatalogEntry, EntryId,
};
use confhor::mass_geometry::{
    horizon_profile, horizon_root, mass_catalog, mass_generic, mass_temporal_gauge, DTOL,
};
use confhor::penrose_bound::{DeformationFamily, Perturbation};
use confhor::tensor_core::{
    derive, invert_symmetric, seed, signature, to_sym, DerivativeConfig, DomainBox, Dual, FnField,
    SymMatrix, NEAR_ZERO_EIGEN,
};
use confhor::Error;

fn all_entries() -> Vec<CatalogEntry> {
    let mut v = catalog();
    v.push(default_synthetic());
    v
}

/// Interior radial data at a log-uniform offset `u ∈ [0, 1]` from the edge.
fn radial(e: &CatalogEntry, u: f64) -> Option<confhor::exact_solutions::Radial<f64>> {
    let (lo, hi) = e.sample_offsets();
    e.radial_at_offset(lo * (hi / lo).powf(u)).ok()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #[test]
    fn inverse_is_an_involution(
        d in prop::array::uniform4(0.5f64..4.0),
        off in prop::array::uniform6(-0.2f64..0.2),
        neg in 0usize..4,
    ) {
        let mut a = [[0.0; 4]; 4];
        let mut k = 0;
        for i in 0..4 {
            a[i][i] = if i == neg { -d[i] } else { d[i] };
            for j in i + 1..4 {
                a[i][j] = off[k];
                a[j][i] = off[k];
                k += 1;
            }
        }
        let m = SymMatrix::from_rows(&a);
        let back = invert_symmetric(&invert_symmetric(&m).unwrap()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                prop_assert!((back.get(i, j) - m.get(i, j)).abs() <= 1e-9 * m.norm_inf());
            }
        }
    }

    #[test]
    fn catalog_metrics_are_lorentzian(
        idx in 0usize..7,
        u in 0.0f64..1.0,
        ell in -20.0f64..-1e-3,
        theta in 0.3f64..FRAC_PI_2,
    ) {
        // The synthetic lapse grows like a(t)^3, so late times fall under the
        // relative near-zero cut.
        let e = &all_entries()[idx];
        let Some(rad) = radial(e, u) else { return Ok(()) };
        let w = e.omega_point(ell, rad.w1, theta);
        let Ok(x) = e.chart.to_x(&w) else { return Ok(()) };
        // Kerr's BL chart ends at the ergosurface.
        let Ok(g) = e.metric.metric(&x) else { return Ok(()) };
        let s = signature(&to_sym(&g), NEAR_ZERO_EIGEN);
        prop_assert!(s.is_lorentzian(), "{}: {s:?} at {x:?}", e.id);
    }

    #[test]
    fn dual_and_central_derivatives_agree(
        idx in 0usize..7,
        u in 0.0f64..1.0,
        frac in 0.2f64..3.0,
    ) {
        let e = all_entries().swap_remove(idx);
        let Some(rad) = radial(&e, u) else { return Ok(()) };
        let theta = 1.2;
        let Ok(ln_x) = horizon_root(&e, &rad, theta) else { return Ok(()) };
        let ell = ln_x * frac;
        if !(ell < -1e-2 && ell > -200.0) {
            return Ok(());
        }
        let w1 = rad.w1;
        let domain = DomainBox::open(vec![-400.0], vec![0.0]);
        let at = |p: &[f64]| e.omega_point(p[0], w1, theta);
        let field = FnField::with_dual(
            domain,
            |p: &[f64]| Ok(mass_catalog(&e, &at(p))?.m),
            |p: &[f64], _| {
                let w = at(p);
                let m = e.mass_at(&seed(&w, 0, w[0]))?;
                Ok(Dual::new(m.re, m.du))
            },
        );
        let Ok(dual) = derive(&field, &[ell], 0, &DerivativeConfig::dual()) else { return Ok(()) };
        let Ok(fd) = derive(&field, &[ell], 0, &DerivativeConfig::central()) else { return Ok(()) };
        let scale = mass_catalog(&e, &at(&[ell])).unwrap().m.abs();
        prop_assume!(dual.abs() > 1e-6 * scale);
        prop_assert!(rel(dual, fd) < 1e-6, "{}: dual {dual} central {fd}", e.id);
    }

    #[test]
    fn forward_inverse_round_trip(
        r in 1.2f64..20.0,
        dir in prop::array::uniform2(-0.6f64..0.6),
        x0 in 0.0f64..5.0,
        plus in any::<bool>(),
    ) {
        let spec = ConformalSpec::new(ConformalFactor::ReciprocalR, 1.0).unwrap();
        let (x2, x3) = (dir[0] * r, dir[1] * r);
        let x1 = (r * r - x2 * x2 - x3 * x3).sqrt() * if plus { 1.0 } else { -1.0 };
        let x = [x0, x1, x2, x3];
        let patch = if plus { Patch::Plus } else { Patch::Minus };
        let map = ChartMap::new(spec.clone(), patch);
        let w = forward(&x, &spec).unwrap();
        let back = inverse(&w, &map).unwrap();
        for i in 0..4 {
            prop_assert!((back[i] - x[i]).abs() <= 1e-9 * (1.0 + x[i].abs()));
        }
        let again = forward(&back, &spec).unwrap();
        for i in 0..4 {
            prop_assert!((again.w[i] - w.w[i]).abs() <= 1e-9);
        }
    }

    #[test]
    fn delta_star_families(x in prop::array::uniform3(-8.0f64..8.0)) {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(r > 1e-3);
        prop_assert!((ConformalFactor::ReciprocalR.delta_star(&x) - 2.0).abs() < 1e-12);
        prop_assert!((ConformalFactor::ReciprocalR2.delta_star(&x) - 3.0).abs() < 1e-12);
        let g = ConformalFactor::Gaussian { theta: 1.5, kappa: 0.25 };
        prop_assert!((g.delta_star(&x) - (1.0 + 0.25 * r)).abs() < 1e-12);
    }

    #[test]
    fn pullback_is_symmetric_lorentzian_and_basis_consistent(
        w0 in 0.05f64..0.95,
        w1 in 0.05f64..0.95,
        a in prop::array::uniform2(-1.2f64..1.2),
    ) {
        let spec = ConformalSpec::new(ConformalFactor::ReciprocalR, 1.0).unwrap();
        let map = ChartMap::new(spec, Patch::Plus);
        let w = CompactPoint::new([w0, w1, a[0], a[1]]).w;
        let Ok(h) = pullback_metric(&Minkowski, &w, &map, Basis::Coordinate) else {
            return Ok(());
        };
        let hb = pullback_metric(&Minkowski, &w, &map, Basis::Logarithmic).unwrap();
        let rescaled = to_log_basis(&h, &w);
        let s = [w0, w1, 1.0, 1.0];
        for i in 0..4 {
            for j in 0..4 {
                prop_assert_eq!(h[i][j], h[j][i]);
                prop_assert!((hb[i][j] - h[i][j] * s[i] * s[j]).abs() <= 1e-12 * (1.0 + hb[i][j].abs()));
                prop_assert!((rescaled[i][j] - hb[i][j]).abs() <= 1e-12 * (1.0 + hb[i][j].abs()));
            }
        }
        prop_assert!(signature(&to_sym(&h), NEAR_ZERO_EIGEN).is_lorentzian());
    }

    #[test]
    fn temporal_gauge_pipelines_agree(
        ell in -6.0f64..-0.01,
        w1 in 0.05f64..0.95,
    ) {
        let e = default_synthetic();
        let w = e.omega_point(ell, w1 * e.omega_edge(), 0.0);
        let (Ok(g), Ok(t)) = (mass_generic(&e, &w), mass_temporal_gauge(&e, &w)) else {
            return Ok(());
        };
        prop_assert_eq!(g.m.signum(), t.m.signum());
        prop_assert!(rel(g.m, t.m) < 1e-8, "generic {} temporal {}", g.m, t.m);
    }

    #[test]
    fn horizon_sign_structure(idx in 0usize..7, u in 0.0f64..1.0, theta in 0.3f64..FRAC_PI_2) {
        let e = &all_entries()[idx];
        let Some(rad) = radial(e, u) else { return Ok(()) };
        let Ok(ln_x) = horizon_root(e, &rad, theta) else { return Ok(()) };
        prop_assume!(ln_x > -300.0);
        let m = |ell: f64| mass_catalog(e, &e.omega_point(ell, rad.w1, theta)).map(|s| s.m);
        let (Ok(above), Ok(below)) = (m(ln_x * 0.9), m(ln_x * 1.1)) else { return Ok(()) };
        prop_assert!(above < 0.0 && below > 0.0, "{}: above {above} below {below}", e.id);
    }

    #[test]
    fn mass_diverges_toward_the_boundary(idx in 0usize..5, u in 0.0f64..1.0) {
        // Roberts reaches its chart floor before ω⁰ = 0; the synthetic mass
        // saturates as t grows.
        let entries: Vec<_> = catalog().into_iter().filter(|e| e.id != EntryId::Roberts).collect();
        let e = &entries[idx];
        let Some(rad) = radial(e, u) else { return Ok(()) };
        let theta = 1.2;
        let Ok(ln_x) = horizon_root(e, &rad, theta) else { return Ok(()) };
        let ms: Vec<f64> = [2.0, 8.0, 32.0, 128.0]
            .iter()
            .filter_map(|k| e.mass_closed(ln_x * k, &rad, theta).ok())
            .collect();
        prop_assert_eq!(ms.len(), 4, "{}", e.id);
        prop_assert!(ms.windows(2).all(|p| p[1] > p[0]), "{}: {ms:?}", e.id);
        prop_assert!(ms[3] > 100.0 * ms[0].abs(), "{}: {ms:?}", e.id);
    }

    #[test]
    fn kerr_chart_error_matches_validity(delta in 1e-3f64..1.0, theta in 0.0f64..FRAC_PI_2) {
        let e = make_kerr(1.0, 0.5, None).unwrap();
        let Ok(rad) = e.radial_at_offset(delta) else { return Ok(()) };
        let d = rad.r * rad.r + 0.25 - 2.0 * rad.r - 0.25 * theta.sin().powi(2);
        prop_assume!(d.abs() > 1e-8);
        let res = mass_catalog(&e, &e.omega_point(-1.0, rad.w1, theta));
        let valid = kerr_chart_valid(rad.r, theta, 1.0, 0.5);
        prop_assert_eq!(!valid, matches!(res, Err(Error::ChartInvalid(_))), "{:?}", res);
    }

    #[test]
    fn deformation_stays_in_unit_interval(
        sigma in 1e-9f64..1.0 - 1e-9,
        w1 in 1e-4f64..1.0,
        amplitude in -0.95f64..0.95,
        frequency in 0.1f64..5.0,
        phase in -3.0f64..3.0,
    ) {
        let base = DeformationFamily { ln_x: vec![-1.0], perturbation: None };
        let bumped = base.perturbed(Perturbation { amplitude, frequency, phase }).unwrap();
        for fam in [&base, &bumped] {
            let t = fam.t(w1, sigma);
            prop_assert!(t > 0.0 && t < 1.0, "T = {t}");
        }
    }
}

#[test]
fn horizon_nodes_have_nonpositive_slope() {
    for e in all_entries() {
        let edge = e.omega_edge();
        let w1: Vec<f64> = (1..=16).map(|k| edge * k as f64 / 17.0).collect();
        let p = horizon_profile(&e, &w1, 1.2).unwrap();
        for n in &p.nodes {
            if let Some(d) = n.dm_dt {
                assert!(d <= DTOL, "{}: dm/dw0 = {d} at w1 = {}", e.id, n.omega1);
            }
        }
    }
}

#[test]
fn violated_branch_constraints_are_rejected() {
    assert!(make_schwarzschild(0.0).is_err());
    assert!(make_schwarzschild(-1.0).is_err());
    assert!(make_reissner_nordstrom(1.0, f64::NAN, None).is_err());
    assert!(make_reissner_nordstrom(-1.0, 0.5, None).is_err());
    assert!(make_kerr(1.0, 1.0, None).is_err());
    assert!(make_kerr(1.0, -1.5, None).is_err());
    assert!(make_kerr(1.0, 0.0, None).is_err());
    assert!(make_roberts(-0.5, None).is_err());
    assert!(make_roberts(-0.7, None).is_err());
    assert!(make_roberts(f64::NAN, None).is_err());
}
