//! Self-check suites behind `confhor verify`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compactification::ConformalFactor;
use crate::compactification::ConformalKind;
use crate::error::{Error, Result};
use crate::exact_solutions::{
    alternate_compactifier, catalog, default_synthetic, make_reissner_nordstrom,
    make_schwarzschild, make_synthetic_collapse, CatalogEntry, EntryId, ScaleFactor, XMetric,
};
use crate::mass_geometry::{
    closure_scan, dm_dt_closed_form, horizon_profile, horizon_root, mass_catalog, mass_generic,
    ScanConfig, ScanOutcome, Verdict,
};
use crate::penrose_bound::{penrose_bound, BoundConfig};
use crate::tensor_core::{derive, DerivativeConfig, DomainBox, FnField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Remark33,
    Horizons,
    Verdicts,
    Penrose,
    Gradients,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [
        Suite::Remark33,
        Suite::Horizons,
        Suite::Verdicts,
        Suite::Penrose,
        Suite::Gradients,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Remark33 => "remark33",
            Self::Horizons => "horizons",
            Self::Verdicts => "verdicts",
            Self::Penrose => "penrose",
            Self::Gradients => "gradients",
            Self::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::EACH
            .into_iter()
            .chain([Self::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub measured: String,
    pub expected: String,
    pub passed: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{}: measured {} expected {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.measured,
            self.expected
        )
    }
}

fn check(
    suite: Suite,
    name: impl Into<String>,
    measured: String,
    expected: String,
    passed: bool,
) -> Check {
    Check {
        suite: suite.name().into(),
        name: name.into(),
        measured,
        expected,
        passed,
    }
}

fn errored(suite: Suite, name: impl Into<String>, e: &Error) -> Check {
    check(suite, name, format!("error: {e}"), "no error".into(), false)
}

pub fn run(suite: Suite) -> Vec<Check> {
    match suite {
        Suite::Remark33 => remark33(),
        Suite::Horizons => horizons(),
        Suite::Verdicts => verdicts(),
        Suite::Penrose => penrose(),
        Suite::Gradients => gradients(2000),
        Suite::All => Suite::EACH.into_iter().flat_map(run).collect(),
    }
}

fn remark33() -> Vec<Check> {
    let s = Suite::Remark33;
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let points: Vec<[f64; 3]> = (0..100)
        .map(|_| loop {
            let x: [f64; 3] = std::array::from_fn(|_| rng.random_range(-4.0..4.0));
            if x.iter().map(|v| v * v).sum::<f64>() > 1e-2 {
                break x;
            }
        })
        .collect();
    let (kappa, b, c) = (0.7, 1.0, 0.5);
    let cases: [(&str, ConformalFactor, Box<dyn Fn(f64) -> f64>); 4] = [
        (
            "reciprocal-r",
            ConformalFactor::ReciprocalR,
            Box::new(|_| 2.0),
        ),
        (
            "reciprocal-r2",
            ConformalFactor::ReciprocalR2,
            Box::new(|_| 3.0),
        ),
        (
            "gaussian",
            ConformalFactor::Gaussian { theta: 1.0, kappa },
            Box::new(move |r| 1.0 + kappa * r),
        ),
        (
            "rational",
            ConformalFactor::Rational { a: 1.0, b, c },
            Box::new(move |r| (b + 3.0 * c * r * r) / (b + c * r * r)),
        ),
    ];
    cases
        .iter()
        .map(|(name, f, want)| {
            let err = points
                .iter()
                .map(|x| {
                    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    (f.delta_star(x) - want(r)).abs()
                })
                .fold(0.0, f64::max);
            check(
                s,
                *name,
                format!("max error {err:e}"),
                "< 1e-12".into(),
                err < 1e-12,
            )
        })
        .collect()
}

fn horizons() -> Vec<Check> {
    let s = Suite::Horizons;
    let mut out = Vec::new();
    let grid: Vec<f64> = (0..64)
        .map(|i| (i as f64 + 0.5) / 64.0 * FRAC_PI_2)
        .collect();
    for mass in [0.5, 1.0, 2.0] {
        let name = format!("schwarzschild-m{mass}");
        let run = || -> Result<(f64, bool)> {
            let e = make_schwarzschild(mass)?;
            let p = horizon_profile(&e, &grid, FRAC_PI_2)?;
            if !p.failures.is_empty() {
                return Err(Error::NoSignChange(p.failures[0].error.clone()));
            }
            let mut err: f64 = 0.0;
            let mut regions = true;
            for n in &p.nodes {
                let rad = e.radial(n.omega1)?;
                let want = e
                    .horizon_printed(&rad, FRAC_PI_2)
                    .expect("printed horizon")?;
                err = err.max((n.x - want.exp()).abs());
                let above = e.mass_closed(n.ln_x + 1e-3, &rad, FRAC_PI_2)?;
                let below = e.mass_closed(n.ln_x - 1e-3, &rad, FRAC_PI_2)?;
                regions &= above < 0.0 && below > 0.0;
            }
            Ok((err, regions))
        };
        match run() {
            Ok((err, regions)) => {
                out.push(check(
                    s,
                    format!("{name}/profile"),
                    format!("{err:e}"),
                    "< 1e-8".into(),
                    err < 1e-8,
                ));
                out.push(check(
                    s,
                    format!("{name}/regions"),
                    format!("exterior above, interior below: {regions}"),
                    "true".into(),
                    regions,
                ));
            }
            Err(e) => out.push(errored(s, name, &e)),
        }
    }
    for (mass, charge) in [(1.0, 2.0), (2.0, 1.0), (1.0, 1.0)] {
        let Ok(base) = make_reissner_nordstrom(mass, charge, None) else {
            continue;
        };
        for h in [base.compactifier, alternate_compactifier(base.id)] {
            let name = format!("{}-{}", base.id, h.name());
            let run = || -> Result<f64> {
                let e = make_reissner_nordstrom(mass, charge, Some(h))?;
                let (lo, hi) = e.sample_offsets();
                let mut err: f64 = 0.0;
                for i in 0..32 {
                    let delta = lo * (hi / lo).powf(i as f64 / 31.0);
                    let rad = e.radial_at_offset(delta)?;
                    let got = horizon_root(&e, &rad, FRAC_PI_2)?;
                    let want = e
                        .horizon_printed(&rad, FRAC_PI_2)
                        .expect("printed horizon")?;
                    err = err.max((got.exp() - want.exp()).abs());
                }
                Ok(err)
            };
            out.push(match run() {
                Ok(err) => check(s, name, format!("{err:e}"), "< 1e-8".into(), err < 1e-8),
                Err(e) => errored(s, name, &e),
            });
        }
    }
    out
}

fn limit_matches(e: &CatalogEntry, got: &crate::mass_geometry::NakedVerdict) -> bool {
    got.verdict == e.expected.verdict
        && got.limit_points.len() == e.expected.limit_points.len()
        && got
            .limit_points
            .iter()
            .zip(&e.expected.limit_points)
            .all(|(a, b)| {
                (a.omega0 - b.omega0).abs() < 1e-9
                    && (a.omega1 - b.omega1).abs() < 1e-9
                    && a.theta
                        .zip(b.theta)
                        .is_none_or(|(x, y)| (x - y).abs() < 1e-9)
            })
}

fn verdicts() -> Vec<Check> {
    let s = Suite::Verdicts;
    let cfg = ScanConfig::default();
    let mut out = Vec::new();
    for e in catalog() {
        let name = e.id.as_str();
        match closure_scan(&e, &cfg) {
            Ok(rep) => {
                let got = rep.verdict.as_ref().map(|v| v.verdict);
                out.push(check(
                    s,
                    format!("{name}/verdict"),
                    format!("{:?}", rep.outcome),
                    format!("{:?}", e.expected.verdict),
                    got == Some(e.expected.verdict),
                ));
                let at = rep
                    .verdict
                    .as_ref()
                    .map(|v| format!("{:?}", v.limit_points))
                    .unwrap_or_else(|| "none".into());
                let ok = rep.verdict.as_ref().is_some_and(|v| limit_matches(&e, v));
                out.push(check(
                    s,
                    format!("{name}/limit"),
                    at,
                    format!("{:?}", e.expected.limit_points),
                    ok,
                ));
            }
            Err(err) => out.push(errored(s, name, &err)),
        }
        if matches!(
            e.id,
            EntryId::RNSuper | EntryId::RNSub | EntryId::RNExtremal
        ) {
            let h = alternate_compactifier(e.id);
            let name = format!("{name}/{}", h.name());
            let run = || -> Result<ScanOutcome> {
                let alt = make_reissner_nordstrom(e.params.mass, e.params.charge, Some(h))?;
                Ok(closure_scan(&alt, &cfg)?.outcome)
            };
            let want = match e.expected.verdict {
                Verdict::Naked => ScanOutcome::Naked,
                Verdict::NotNaked => ScanOutcome::NotNaked,
            };
            out.push(match run() {
                Ok(o) => check(s, name, format!("{o:?}"), format!("{want:?}"), o == want),
                Err(err) => errored(s, name, &err),
            });
        }
    }
    out
}

fn penrose() -> Vec<Check> {
    let s = Suite::Penrose;
    let mut out = Vec::new();
    let cfg = BoundConfig::default();
    let e = default_synthetic();
    let rep = match penrose_bound(&e, &cfg) {
        Ok(r) => r,
        Err(err) => return vec![errored(s, "bound", &err)],
    };
    out.push(check(
        s,
        "euler-residual",
        format!("{:e}", rep.euler_residual_max),
        "< 1e-6".into(),
        rep.euler_residual_max < 1e-6,
    ));
    out.push(check(
        s,
        "euler-halving",
        format!("ratio {:e}", rep.euler_halving_ratio),
        ">= 2".into(),
        rep.euler_halving_ratio >= 2.0,
    ));
    out.push(check(
        s,
        "conserved-drift",
        format!("{:e}", rep.conserved_integral_drift),
        "< 1e-5".into(),
        rep.conserved_integral_drift < 1e-5,
    ));
    out.push(check(
        s,
        "isoperimetric",
        format!("{:e}", rep.isoperimetric_gap),
        "< 1e-10".into(),
        rep.isoperimetric_gap < 1e-10,
    ));
    out.push(check(
        s,
        "second-variation",
        format!(
            "A <= 0: {}, identity {:e}",
            rep.second_variation_ok, rep.second_variation.identity_max
        ),
        "true, < 1e-8".into(),
        rep.second_variation_ok && rep.second_variation.identity_max < 1e-8,
    ));
    out.push(check(
        s,
        "inequality",
        format!("M_sq {:e} vs rhs 10^{:.6}", rep.m_sq, rep.rhs_log10),
        "M_sq > rhs".into(),
        rep.inequality_holds,
    ));
    out.push(check(
        s,
        "mass-convergence",
        format!("order {:?}", rep.m_sq_detail.order_eps1),
        "Cauchy in the cutoff".into(),
        rep.m_sq_detail.converged,
    ));
    let fine = penrose_bound(&e, &BoundConfig { nodes: 64, ..cfg });
    out.push(match fine {
        Ok(f) => check(
            s,
            "grid-doubling",
            format!("{} -> {}", rep.inequality_holds, f.inequality_holds),
            "same flag".into(),
            f.inequality_holds == rep.inequality_holds,
        ),
        Err(err) => errored(s, "grid-doubling", &err),
    });
    let swapped = make_synthetic_collapse(
        ScaleFactor::Linear { rate: 1.0 },
        ConformalKind::ReciprocalR2,
    )
    .and_then(|alt| penrose_bound(&alt, &cfg));
    out.push(match swapped {
        Ok(f) => check(
            s,
            "compactifier-swap",
            format!("{} -> {}", rep.inequality_holds, f.inequality_holds),
            "same flag".into(),
            f.inequality_holds == rep.inequality_holds,
        ),
        Err(err) => errored(s, "compactifier-swap", &err),
    });
    out
}

/// One `∂m/∂ω⁰` comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientSample {
    pub entry: EntryId,
    pub omega: [f64; 4],
    pub fd: f64,
    pub dual: f64,
    /// Printed or curvature closed form; the generic pipeline for Kerr.
    pub closed: f64,
    /// `max(|m|, |ω⁰∂m/∂ω⁰|)/ω⁰`
    pub scale: f64,
}

impl GradientSample {
    pub fn significant(&self) -> bool {
        self.dual.abs() > 1e-6 * self.scale
    }

    pub fn signs_agree(&self) -> bool {
        self.fd.signum() == self.dual.signum() && self.dual.signum() == self.closed.signum()
    }

    pub fn rel_fd_dual(&self) -> f64 {
        (self.fd - self.dual).abs() / self.dual.abs()
    }
}

fn sample_point(e: &CatalogEntry, rng: &mut ChaCha8Rng) -> Result<[f64; 4]> {
    let ell = -rng.random_range(1e-2..12.0f64);
    if e.is_temporal_gauge() {
        let w1 = rng.random_range(0.05..0.95);
        return Ok([
            ell.exp(),
            w1,
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
        ]);
    }
    let (lo, hi) = e.sample_offsets();
    let delta = lo * (hi / lo).powf(rng.random_range(0.0..1.0));
    let rad = e.radial_at_offset(delta)?;
    let theta = rng.random_range(0.3..FRAC_PI_2 - 0.1);
    Ok([ell.exp(), rad.w1, theta, 0.4])
}

fn gradient_at(e: &CatalogEntry, w: [f64; 4]) -> Result<GradientSample> {
    let s = mass_catalog(e, &w)?;
    let mut domain = DomainBox::open(vec![-60.0], vec![0.0]);
    domain.closed_hi[0] = true;
    let field = FnField::new(domain, |p: &[f64]| {
        let mut q = w;
        q[0] = p[0].exp();
        e.mass_at(&q)
    });
    let cfg = DerivativeConfig {
        base_step: 1e-4,
        one_sided_fallback: true,
        ..DerivativeConfig::central()
    };
    let fd = derive(&field, &[w[0].ln()], 0, &cfg)? / w[0];
    let closed = match e.metric {
        XMetric::TemporalGauge { .. } => dm_dt_closed_form(e, &w)?,
        XMetric::KerrBL { .. } => mass_generic(e, &w)?.dm_dt,
        _ => {
            let rad = e.radial(w[1])?;
            e.dm_dw0_printed(w[0].ln(), &rad)
                .expect("printed derivative")?
        }
    };
    Ok(GradientSample {
        entry: e.id,
        omega: w,
        fd,
        dual: s.dm_dt,
        closed,
        scale: s.m.abs().max((w[0] * s.dm_dt).abs()) / w[0],
    })
}

/// `n` samples spread over the catalog and the synthetic entry; points where
/// an entry rejects the chart are skipped.
pub fn gradient_samples(n: usize, seed: u64) -> Vec<GradientSample> {
    let mut entries = catalog();
    entries.push(default_synthetic());
    let per = n.div_ceil(entries.len());
    entries
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, e)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9e37_79b9));
            let mut got = Vec::with_capacity(per);
            let mut tries = 0;
            while got.len() < per && tries < 20 * per {
                tries += 1;
                if let Ok(g) = sample_point(e, &mut rng).and_then(|w| gradient_at(e, w)) {
                    got.push(g);
                }
            }
            got
        })
        .collect()
}

fn gradients(n: usize) -> Vec<Check> {
    let s = Suite::Gradients;
    let samples = gradient_samples(n, 6);
    let sig: Vec<&GradientSample> = samples.iter().filter(|g| g.significant()).collect();
    let disagree = sig.iter().filter(|g| !g.signs_agree()).count();
    let worst = sig.iter().map(|g| g.rel_fd_dual()).fold(0.0, f64::max);
    vec![
        check(
            s,
            "sign-agreement",
            format!(
                "{disagree} disagreements in {} significant of {}",
                sig.len(),
                samples.len()
            ),
            "0".into(),
            disagree == 0 && !sig.is_empty(),
        ),
        check(
            s,
            "fd-vs-dual",
            format!("{worst:e}"),
            "< 1e-5".into(),
            worst < 1e-5,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH.into_iter().chain([Suite::All]) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn remark33_passes() {
        assert!(run(Suite::Remark33).iter().all(|c| c.passed));
    }
}
