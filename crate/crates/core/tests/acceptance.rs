//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line; reference
//! values come from closed forms written out here, not from the library.
//! Known-red checks print `FAIL` and are not asserted (see README).

use std::f64::consts::{E, FRAC_PI_2, PI};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use confhor::compactification::{ConformalFactor, ConformalKind};
use confhor::exact_solutions::{
    alternate_compactifier, catalog, default_synthetic, make_kerr, make_reissner_nordstrom,
    make_schwarzschild, make_synthetic_collapse, CatalogEntry, EntryId, RadialCompactifier,
    ScaleFactor,
};
use confhor::mass_geometry::{
    classify, closure_scan, curvature_conditions, horizon_profile, horizon_root, mass_catalog,
    mass_generic, stay_criterion, Curve, MassSource, RegionClass, ScanConfig, ScanOutcome,
    StayConfig, Verdict, ROOT_XTOL,
};
use confhor::penrose_bound::{
    default_perturbations, euler_residual, penrose_bound, BoundConfig, DeformationFamily,
    Perturbation, QuadratureGrid,
};
use confhor::verify::gradient_samples;

const DELTA_STAR_TOL: f64 = 1e-12;
const HORIZON_TOL: f64 = 1e-8;
const REGION_OFFSET: f64 = 1e-3;
const LIMIT_TOL: f64 = 1e-9;
const ERGO_TOL: f64 = 1e-6;
const GRADIENT_RTOL: f64 = 1e-5;
const EULER_TOL: f64 = 1e-6;
const IDENTITY_RTOL: f64 = 1e-8;
const DRIFT_TOL: f64 = 1e-5;
const EXIT_TOL: f64 = 1e-6;

fn report(n: u8, name: &str, pass: bool, detail: impl std::fmt::Display) -> bool {
    println!(
        "{} {n:02} {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn within(t: Instant, limit: Duration) -> bool {
    t.elapsed() < limit
}

#[test]
fn delta_star_exactness() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (kappa, b, c) = (0.4, 2.0, 0.3);
    let cases: [(ConformalFactor, &dyn Fn(f64) -> f64); 4] = [
        (ConformalFactor::ReciprocalR, &|_| 2.0),
        (ConformalFactor::ReciprocalR2, &|_| 3.0),
        (ConformalFactor::Gaussian { theta: 2.0, kappa }, &|r| {
            1.0 + kappa * r
        }),
        (ConformalFactor::Rational { a: 1.0, b, c }, &|r| {
            (b + 3.0 * c * r * r) / (b + c * r * r)
        }),
    ];
    let mut worst: f64 = 0.0;
    for (f, want) in &cases {
        for _ in 0..100 {
            let x: [f64; 3] = std::array::from_fn(|_| rng.random_range(-5.0..5.0));
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max((f.delta_star(&x) - want(r)).abs());
        }
    }
    let fast = within(t, Duration::from_secs(1));
    assert!(report(
        1,
        "delta-star exactness",
        worst < DELTA_STAR_TOL && fast,
        format!("max error {worst:e} over 4x100 points in {:?}", t.elapsed())
    ));
}

fn schwarzschild_horizon(mass: f64, w1: f64) -> f64 {
    let t = w1.tan();
    (-2.0 * mass * (1.0 + t * t).sqrt() / (1.0 - (-t).exp())).exp()
}

#[test]
fn schwarzschild_horizon_profile() {
    let t = Instant::now();
    let grid: Vec<f64> = (0..64)
        .map(|i| (i as f64 + 0.5) / 64.0 * FRAC_PI_2)
        .collect();
    let mut worst: f64 = 0.0;
    let mut regions = true;
    for mass in [0.5, 1.0, 2.0] {
        let e = make_schwarzschild(mass).unwrap();
        let p = horizon_profile(&e, &grid, FRAC_PI_2).unwrap();
        assert!(p.failures.is_empty() && p.nodes.len() == 64);
        for n in &p.nodes {
            worst = worst.max((n.x - schwarzschild_horizon(mass, n.omega1)).abs());
            let class = |ell: f64| {
                classify(
                    &e,
                    &e.omega_point(ell, n.omega1, 1.0),
                    MassSource::CatalogClosedForm,
                )
                .unwrap()
                .class
            };
            regions &= class(n.ln_x + REGION_OFFSET) == RegionClass::Exterior
                && class(n.ln_x - REGION_OFFSET) == RegionClass::Interior;
        }
    }
    let fast = within(t, Duration::from_secs(10));
    assert!(report(
        2,
        "schwarzschild horizon",
        worst < HORIZON_TOL && regions && fast,
        format!("max |dX| {worst:e}, regions {regions}, {:?}", t.elapsed())
    ));
}

/// `|h'(r)|` written out per compactifier.
fn dh_abs(h: RadialCompactifier, r: f64, mass: f64, charge: f64) -> f64 {
    let f = 1.0 - 2.0 * mass / r + charge * charge / (r * r);
    match h {
        RadialCompactifier::ArctanInverse => 1.0 / (1.0 + r * r),
        RadialCompactifier::InverseShift => 1.0 / ((1.0 + r) * (1.0 + r)),
        RadialCompactifier::ExpInverseF { .. } => {
            let df = 2.0 * mass / (r * r) - 2.0 * charge * charge / r.powi(3);
            let q = (-1.0 / f).exp();
            df * q / (f * f * (1.0 + q * q))
        }
        other => panic!("no oracle for {}", other.name()),
    }
}

#[test]
fn reissner_nordstrom_horizon() {
    let mut worst: f64 = 0.0;
    let mut invariant = true;
    let mut runs = 0;
    for (mass, charge) in [(1.0, 2.0), (2.0, 1.0), (1.0, 1.0)] {
        let base = make_reissner_nordstrom(mass, charge, None).unwrap();
        let hs = [base.compactifier, alternate_compactifier(base.id)];
        assert_ne!(hs[0], hs[1]);
        let mut outcomes = Vec::new();
        for h in hs {
            let e = make_reissner_nordstrom(mass, charge, Some(h)).unwrap();
            let (lo, hi) = e.sample_offsets();
            for i in 0..32 {
                let delta = lo * (hi / lo).powf(i as f64 / 31.0);
                let rad = e.radial_at_offset(delta).unwrap();
                let r = rad.r;
                let f = 1.0 - 2.0 * mass / r + charge * charge / (r * r);
                let want = (-1.0 / (dh_abs(h, r, mass, charge) * f)).exp();
                let got = horizon_root(&e, &rad, FRAC_PI_2).unwrap().exp();
                worst = worst.max((got - want).abs());
            }
            outcomes.push(closure_scan(&e, &ScanConfig::default()).unwrap().outcome);
            runs += 1;
        }
        invariant &= outcomes[0] == outcomes[1];
    }
    assert!(report(
        3,
        "reissner-nordstrom horizon",
        worst < HORIZON_TOL && invariant,
        format!("max |dX| {worst:e} over {runs} branch/compactifier pairs, verdict invariant {invariant}")
    ));
}

#[test]
fn naked_singularity_verdicts() {
    let t = Instant::now();
    let cfg = ScanConfig::default();
    assert!(cfg.depth <= 40);
    let exp_inverse_edge = (1.0 / E).atan();
    let kerr_r_plus = 1.0 + (1.0f64 - 0.25).sqrt();
    let want: [(EntryId, Verdict, Option<f64>); 6] = [
        (EntryId::Schwarzschild, Verdict::Naked, Some(0.0)),
        (EntryId::RNSuper, Verdict::NotNaked, None),
        (EntryId::RNSub, Verdict::Naked, Some(exp_inverse_edge)),
        (EntryId::RNExtremal, Verdict::Naked, Some(exp_inverse_edge)),
        (EntryId::Roberts, Verdict::NotNaked, None),
        (
            EntryId::Kerr,
            Verdict::Naked,
            Some((1.0 / kerr_r_plus).atan()),
        ),
    ];
    let mut verdicts_ok = true;
    let mut located = Vec::new();
    let mut misplaced = Vec::new();
    for e in catalog() {
        let (_, verdict, at) = want.iter().find(|w| w.0 == e.id).copied().unwrap();
        let rep = closure_scan(&e, &cfg).unwrap();
        let got = rep.verdict.unwrap();
        verdicts_ok &= got.verdict == verdict;
        let place_ok = match at {
            None => got.limit_points.is_empty(),
            Some(w1) => {
                got.limit_points.len() == 1
                    && got.limit_points[0].omega0 == 0.0
                    && (got.limit_points[0].omega1 - w1).abs() < LIMIT_TOL
            }
        };
        let line = format!(
            "{} at {:?}",
            e.id,
            got.limit_points
                .iter()
                .map(|p| (p.omega0, p.omega1))
                .collect::<Vec<_>>()
        );
        if place_ok {
            located.push(line);
        } else {
            misplaced.push(line);
        }
    }
    let fast = within(t, Duration::from_secs(120));
    assert!(report(
        4,
        "naked verdicts",
        verdicts_ok && fast,
        format!("all six verdicts match, {:?}", t.elapsed())
    ));
    // The Schwarzschild limit lands on the r = 2M edge, not at (0, 0).
    report(
        4,
        "naked limit points",
        misplaced.is_empty(),
        format!(
            "located [{}]; misplaced [{}]",
            located.join("; "),
            misplaced.join("; ")
        ),
    );
    assert!(
        misplaced.iter().all(|m| m.starts_with("schwarzschild")),
        "{misplaced:?}"
    );
}

#[test]
fn kerr_ergosphere_crossing() {
    let (mass, spin) = (1.0, 0.5);
    let e = make_kerr(mass, spin, None).unwrap();
    let r_plus = mass + (mass * mass - spin * spin).sqrt();
    let mut worst: f64 = 0.0;
    let mut flips = true;
    for k in 0..16 {
        let theta = (k as f64 + 0.5) / 16.0 * PI;
        let h00 = |r: f64| e.ergo_h00(0.5, r, theta).unwrap();
        let (mut lo, mut hi) = (r_plus + 1e-7, 4.0 * mass);
        flips &= h00(lo) > 0.0 && h00(hi) < 0.0;
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if h00(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let want = mass + (mass * mass - spin * spin * theta.cos().powi(2)).sqrt();
        worst = worst.max((0.5 * (lo + hi) - want).abs());
    }
    assert!(report(
        5,
        "kerr ergosphere",
        flips && worst < ERGO_TOL,
        format!("16 angles, sign flips {flips}, max |dr| {worst:e}")
    ));
}

#[test]
fn gradient_cross_check() {
    let samples = gradient_samples(10_000, 2024);
    let sig: Vec<_> = samples.iter().filter(|g| g.significant()).collect();
    let disagree = sig.iter().filter(|g| !g.signs_agree()).count();
    let worst = sig.iter().map(|g| g.rel_fd_dual()).fold(0.0, f64::max);
    assert!(samples.len() >= 10_000);
    assert!(report(
        6,
        "gradient cross-check",
        disagree == 0 && worst < GRADIENT_RTOL,
        format!(
            "{} samples, {} significant, {disagree} sign disagreements, max fd/dual {worst:e}",
            samples.len(),
            sig.len()
        )
    ));
}

/// Root of `ell ↦ m_generic` on `[lo, hi]`; `None` where the generic
/// inversion is rejected as ill-conditioned.
fn generic_root(e: &CatalogEntry, w1: f64, theta: f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let m = |ell: f64| {
        mass_generic(e, &e.omega_point(ell, w1, theta))
            .map(|s| s.m)
            .ok()
    };
    assert!(m(lo)? > 0.0 && m(hi)? < 0.0);
    while hi - lo > 1e-15 * lo.abs() {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if m(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[test]
fn positive_factor_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut entries = vec![make_schwarzschild(1.0).unwrap()];
    entries.extend(
        catalog()
            .into_iter()
            .filter(|e| e.id != EntryId::Schwarzschild),
    );
    let mut positive = true;
    let mut checked = 0usize;
    let mut factor_err: f64 = 0.0;
    let mut root_err: f64 = 0.0;
    let mut ratio_range = (f64::INFINITY, 0.0f64);
    let mut rejected = 0usize;
    for e in &entries {
        let (lo, hi) = e.sample_offsets();
        let mut roots = 0;
        let mut tries = 0;
        while roots < 8 && tries < 400 {
            tries += 1;
            let delta = lo * (hi / lo).powf(rng.random_range(0.0..1.0));
            let theta = rng.random_range(0.3..FRAC_PI_2 - 0.1);
            let Ok(rad) = e.radial_at_offset(delta) else {
                continue;
            };
            let Some(Ok(ln_x)) = e.horizon_printed(&rad, theta) else {
                continue;
            };
            if !(ln_x > -300.0) {
                continue;
            }
            for ell in [ln_x * 1.5, ln_x * 0.5, ln_x * 0.01] {
                let w = e.omega_point(ell, rad.w1, theta);
                let (Some(Ok(p)), Ok(g)) = (e.mass_printed(ell, &rad, theta), mass_generic(e, &w))
                else {
                    rejected += 1;
                    continue;
                };
                let ratio = p / g.m;
                positive &= ratio > 0.0;
                ratio_range = (ratio_range.0.min(ratio), ratio_range.1.max(ratio));
                if let Some(f) = e.schwarzschild_factor(&rad) {
                    factor_err = factor_err.max((ratio / f - 1.0).abs());
                }
                checked += 1;
            }
            match generic_root(e, rad.w1, theta, 1.1 * ln_x, 0.9 * ln_x) {
                Some(root) => {
                    root_err = root_err.max((root - ln_x).abs() / ln_x.abs());
                    roots += 1;
                }
                None => rejected += 1,
            }
        }
        assert_eq!(roots, 8, "{}: too few valid samples", e.id);
    }
    assert!(report(
        7,
        "positive-factor invariance",
        positive && root_err < 10.0 * ROOT_XTOL && factor_err < 1e-9,
        format!(
            "{checked} ratios in [{:.3e}, {:.3e}] ({rejected} points rejected by the generic inversion), schwarzschild factor error {factor_err:e}, zero-set mismatch {root_err:e}",
            ratio_range.0, ratio_range.1
        )
    ));
}

#[test]
fn euler_identity() {
    let e = default_synthetic();
    let grid = QuadratureGrid::for_entry(&e, 32, 1e-4).unwrap();
    let optimal = DeformationFamily::optimal(&e, &grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut families = vec![optimal.clone()];
    for _ in 0..5 {
        let p = Perturbation {
            amplitude: rng.random_range(-0.8..0.8),
            frequency: rng.random_range(0.3..3.0),
            phase: rng.random_range(-PI..PI),
        };
        families.push(optimal.perturbed(p).unwrap());
    }
    assert_eq!(default_perturbations().len(), 5);
    let mut worst: f64 = 0.0;
    let mut min_ratio = f64::INFINITY;
    for fam in &families {
        worst = worst.max(euler_residual(&e, fam, &grid, 0.5, 1e-4).unwrap());
        let coarse = euler_residual(&e, fam, &grid, 0.5, 1e-2).unwrap();
        let fine = euler_residual(&e, fam, &grid, 0.5, 5e-3).unwrap();
        min_ratio = min_ratio.min(coarse / fine);
    }
    assert!(report(
        8,
        "euler identity",
        worst < EULER_TOL && min_ratio >= 2.0,
        format!("max residual {worst:e} over 6 families, min halving ratio {min_ratio:.3}")
    ));
}

#[test]
fn second_variation_identity() {
    let e = default_synthetic();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let samples: Vec<[f64; 4]> = (0..1000)
        .map(|_| {
            let ell = -rng.random_range(0.05..10.0f64);
            [
                ell.exp(),
                rng.random_range(0.05..0.95),
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
            ]
        })
        .collect();
    let conditions = curvature_conditions(&e, &samples).unwrap();
    let mut worst: f64 = 0.0;
    let mut a_ok = true;
    let mut admissible = 0;
    for (w, c) in samples.iter().zip(&conditions.samples) {
        let mstar = |w0: f64| w0 * w[1] * e.mass_at(&[w0, w[1], w[2], w[3]]).unwrap();
        // Richardson-extrapolated central difference
        let d = |h: f64| (mstar(w[0] + h) - mstar(w[0] - h)) / (2.0 * h);
        let h = 1e-3 * w[0];
        let dstar = (4.0 * d(h / 2.0) - d(h)) / 3.0;
        let lhs = w[0] * dstar - mstar(w[0]);
        let rhs = w[1] * w[0] * w[0] * mass_catalog(&e, w).unwrap().dm_dt;
        let scale = lhs.abs().max(rhs.abs()).max(mstar(w[0]).abs());
        worst = worst.max((lhs - rhs).abs() / scale);
        if c.tr_k < 0.0 && c.general {
            admissible += 1;
            a_ok &= rhs <= 0.0;
        }
    }
    assert!(report(
        9,
        "second-variation identity",
        worst < IDENTITY_RTOL && a_ok && admissible > 0,
        format!(
            "max relative mismatch {worst:e} at 1000 samples, A <= 0 at {admissible} admissible"
        )
    ));
}

#[test]
fn penrose_bound_on_synthetic_collapse() {
    let t = Instant::now();
    let e = default_synthetic();
    let cfg = BoundConfig::default();
    assert_eq!(cfg.nodes, 32);
    let base = penrose_bound(&e, &cfg).unwrap();
    let fine = penrose_bound(&e, &BoundConfig { nodes: 64, ..cfg }).unwrap();
    let swapped = penrose_bound(
        &make_synthetic_collapse(
            ScaleFactor::Linear { rate: 1.0 },
            ConformalKind::ReciprocalR2,
        )
        .unwrap(),
        &cfg,
    )
    .unwrap();
    let stable = base.inequality_holds == fine.inequality_holds
        && base.inequality_holds == swapped.inequality_holds;
    let drift_ok = base.conserved_integral_drift < DRIFT_TOL;
    let iso_ok = base.isoperimetric_gap.abs() < 1e-10;
    let fast = within(t, Duration::from_secs(300));
    assert!(report(
        10,
        "penrose bound diagnostics",
        stable && drift_ok && iso_ok && fast,
        format!(
            "flag stable {stable} (32/64 nodes, swapped compactifier), drift {:e}, isoperimetric gap {:e}, {:?}",
            base.conserved_integral_drift,
            base.isoperimetric_gap,
            t.elapsed()
        )
    ));
    // Known red: the total mass diverges as the cutoff is removed.
    report(
        10,
        "penrose inequality",
        base.inequality_holds && base.m_sq_detail.converged,
        format!(
            "M_sq {:e} (converged {}, cutoff order {:?}) vs rhs sign {} 10^{:.3}",
            base.m_sq,
            base.m_sq_detail.converged,
            base.m_sq_detail.order_eps1,
            base.rhs_sign,
            base.rhs_log10
        ),
    );
}

#[test]
fn stay_criterion_exit_and_family() {
    let e = make_schwarzschild(1.0).unwrap();
    let theta = 1.0;
    let mut worst: f64 = 0.0;
    for w1 in [0.3, 0.8, 1.2] {
        let x = schwarzschild_horizon(1.0, w1);
        let start = [0.5 * x, w1, theta, 0.4];
        let unit = |_: &[f64; 4]| [1.0, 0.0, 0.0, 0.0];
        let cfg = StayConfig {
            s_max: 2.0 * x,
            ..StayConfig::default()
        };
        let r = stay_criterion(
            &e,
            &Curve {
                start,
                tangent: &unit,
            },
            &cfg,
        )
        .unwrap();
        worst = worst.max((r.exit_s.expect("exits") - (x - start[0])).abs());
    }
    // Past-directed in ω⁰ with ∂₀m < 0 on the horizon, so ∇ₓm ≥ 0.
    let mut family_stays = true;
    let mut members = 0;
    for kappa in [0.5, 1.0, 2.0] {
        for v in [0.0, 0.01] {
            let w1 = 0.8;
            let start = [0.5 * schwarzschild_horizon(1.0, w1), w1, theta, 0.4];
            let z = move |w: &[f64; 4]| [-kappa * w[0], 0.0, v, 0.0];
            let r =
                stay_criterion(&e, &Curve { start, tangent: &z }, &StayConfig::default()).unwrap();
            family_stays &= r.stays && r.margin.iter().all(|&(_, m)| m <= r.margin0);
            members += 1;
        }
    }
    assert!(report(
        11,
        "stay criterion",
        worst < EXIT_TOL && family_stays,
        format!("max exit error {worst:e}; {members} nonnegative-derivative curves stay over s_max = 10: {family_stays}")
    ));
}

#[test]
fn verify_is_thread_count_invariant() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_confhor"))
            .args(["verify", "all"])
            .env("CONFHOR_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let eight = run("8");
    let same = one.stdout == eight.stdout
        && one.status.code() == eight.status.code()
        && !one.stdout.is_empty();
    assert!(report(
        12,
        "determinism",
        same,
        format!(
            "{} lines identical at 1 and 8 threads: {same}",
            one.stdout.split(|b| *b == b'\n').count() - 1
        )
    ));
    assert!(matches!(ScanOutcome::Naked, ScanOutcome::Naked));
}
