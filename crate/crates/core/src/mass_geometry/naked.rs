use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use super::horizon::horizon_root;
use crate::error::{Error, Result};
use crate::exact_solutions::{CatalogEntry, EntryId, Radial, RadialCompactifier};
use crate::numerics::{bisect_newton, power_law_fit, RootOptions};
use crate::tensor_core::{Dual, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Naked,
    NotNaked,
}

/// Boundary point `(0, ω¹, θ)`; `theta = None` means every polar angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitPoint {
    pub omega0: f64,
    pub omega1: f64,
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NakedVerdict {
    pub verdict: Verdict,
    pub limit_points: Vec<LimitPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Refinement levels `k = 0..=depth`.
    pub depth: usize,
    /// Levels used for the power-law fits.
    pub window: usize,
    /// `ρ` at the last level must fall below this for a closure point.
    pub rho_tol: f64,
    /// `|ln X|` must grow at least like `gap^{−p_naked}`.
    pub p_naked: f64,
    /// `|ln X|` growth below `gap^{−p_clear}` rules a closure point out.
    pub p_clear: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            depth: 40,
            window: 10,
            rho_tol: super::DTOL,
            p_naked: 0.5,
            p_clear: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanLevel {
    pub k: usize,
    /// `ω¹_edge − ω¹`
    pub gap: f64,
    pub omega1: f64,
    /// `r − r_edge`
    pub delta: f64,
    pub theta: f64,
    pub ln_x: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanOutcome {
    Naked,
    NotNaked,
    Inconclusive,
}

/// Behavior toward `ω¹ → 0`, kept for the report only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerDiagnostic {
    pub levels: usize,
    pub rho_last: Option<f64>,
    /// Fitted `d ln ρ / d ln ω¹`.
    pub rho_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureReport {
    pub entry: EntryId,
    pub outcome: ScanOutcome,
    pub verdict: Option<NakedVerdict>,
    /// Fitted `p` in `|ln X| ∝ gap^{−p}`.
    pub exponent_p: Option<f64>,
    /// Fitted `d ln ρ / d ln gap`.
    pub rho_exponent: Option<f64>,
    pub levels: Vec<ScanLevel>,
    /// Why the sequence stopped early, if it did.
    pub stopped: Option<String>,
    pub corner: CornerDiagnostic,
}

/// How a scan level places its radial point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ScanParam {
    Omega1(f64),
    Offset(f64),
    /// `tan ω¹`, for the Schwarzschild logarithmic compactifier.
    TanOmega(f64),
}

impl ScanParam {
    fn q(self) -> f64 {
        match self {
            Self::Omega1(q) | Self::Offset(q) | Self::TanOmega(q) => q,
        }
    }

    fn radial<R: Real>(self, entry: &CatalogEntry, q: R) -> Result<Radial<R>> {
        match self {
            Self::Omega1(_) => entry.radial(q),
            Self::Offset(_) => entry.radial_at_offset(q),
            Self::TanOmega(_) => entry.radial_at_t(q),
        }
    }
}

pub(crate) fn lift_radial(r: &Radial<f64>) -> Radial<Dual> {
    Radial {
        w1: Dual::cst(r.w1),
        r: Dual::cst(r.r),
        delta: Dual::cst(r.delta),
        t: r.t.map(Dual::cst),
    }
}

/// `|∂H/∂ln ω⁰| / ‖(∂H/∂ln ω⁰, ∂H/∂ln ω¹)‖` at a root of the horizon function;
/// invariant under the positive factor relating `H` and `m`.
pub(crate) fn rho_of(entry: &CatalogEntry, p: ScanParam, ell: f64, theta: f64) -> Result<f64> {
    let rad = p.radial::<f64>(entry, p.q())?;
    let d_ell = entry
        .closed_parts(Dual::var(ell), &lift_radial(&rad), Dual::cst(theta))?
        .0
        .du;
    let radd = p.radial(entry, Dual::var(p.q()))?;
    let d_q = entry
        .closed_parts(Dual::cst(ell), &radd, Dual::cst(theta))?
        .0
        .du;
    let u_q = radd.w1.du / rad.w1;
    let d_u = d_q / u_q;
    let n = d_ell.hypot(d_u);
    if !n.is_finite() || n == 0.0 {
        return Err(Error::Degenerate { rho: f64::NAN });
    }
    Ok(d_ell.abs() / n)
}

/// `ρ` at the horizon root above `ω¹`.
pub fn rho_at(entry: &CatalogEntry, omega1: f64, theta: f64) -> Result<(f64, f64)> {
    let rad = entry.radial(omega1)?;
    let ell = horizon_root(entry, &rad, theta)?;
    Ok((ell, rho_of(entry, ScanParam::Omega1(omega1), ell, theta)?))
}

/// `r*(θ) − r₊` without cancellation.
fn kerr_ergo_offset(mass: f64, spin: f64, theta: f64) -> f64 {
    let s2 = theta.sin().powi(2);
    spin * spin * s2
        / ((mass * mass - spin * spin * theta.cos().powi(2)).sqrt()
            + (mass * mass - spin * spin).sqrt())
}

fn level_point(entry: &CatalogEntry, k: usize, gap0: f64, delta0: f64) -> Result<(ScanParam, f64)> {
    let target = gap0 * 0.5f64.powi(k as i32);
    if let RadialCompactifier::SchwarzschildLog { .. } = entry.compactifier {
        return Ok((
            ScanParam::TanOmega(1.0 / target.tan()),
            std::f64::consts::FRAC_PI_2,
        ));
    }
    if entry.id == EntryId::Kerr {
        let theta = FRAC_PI_4 * 0.5f64.powi(k as i32);
        let d = kerr_ergo_offset(entry.params.mass, entry.params.spin, theta)
            + delta0 * 0.5f64.powi(k as i32);
        return Ok((ScanParam::Offset(d), theta));
    }
    let f =
        |lam: f64| -> Result<f64> { Ok(entry.gap(&entry.radial_at_offset(lam.exp())?)? - target) };
    let hi = delta0.ln();
    let lam = bisect_newton(
        f,
        None,
        -700.0,
        hi,
        &RootOptions {
            xtol: 1e-14,
            max_iter: 400,
        },
    )?;
    Ok((ScanParam::Offset(lam.exp()), std::f64::consts::FRAC_PI_2))
}

fn fit_tail(xs: &[f64], ys: &[f64]) -> Option<f64> {
    power_law_fit(xs, ys).map(|(slope, _)| slope)
}

fn corner(entry: &CatalogEntry, delta0: f64, theta: f64) -> CornerDiagnostic {
    let mut w1s = Vec::new();
    let mut rhos = Vec::new();
    for k in 0..=20 {
        let d = delta0 * 2f64.powi(k);
        let Ok(rad) = entry.radial_at_offset(d) else {
            break;
        };
        let Ok(ell) = horizon_root(entry, &rad, theta) else {
            break;
        };
        let Ok(rho) = rho_of(entry, ScanParam::Offset(d), ell, theta) else {
            break;
        };
        w1s.push(rad.w1);
        rhos.push(rho.max(1e-300));
    }
    let n = w1s.len();
    let start = n.saturating_sub(10);
    CornerDiagnostic {
        levels: n,
        rho_last: rhos.last().copied(),
        rho_exponent: if n - start >= 3 {
            fit_tail(&w1s[start..], &rhos[start..])
        } else {
            None
        },
    }
}

/// Refinement toward the inner edge: tracks the horizon height and the
/// normalized time derivative `ρ` at the root, level by level.
pub fn closure_scan(entry: &CatalogEntry, cfg: &ScanConfig) -> Result<ClosureReport> {
    if cfg.depth > 40 || cfg.window < 3 {
        return Err(Error::InvalidParameter(format!(
            "scan depth {} must be <= 40 and window {} >= 3",
            cfg.depth, cfg.window
        )));
    }
    let delta0 = entry.r_edge.max(1.0);
    let theta0 = if entry.id == EntryId::Kerr {
        FRAC_PI_4
    } else {
        std::f64::consts::FRAC_PI_2
    };
    let gap0 = match entry.compactifier {
        RadialCompactifier::SchwarzschildLog { .. } => (1.0 / 2f64.ln()).atan(),
        _ => entry.gap(&entry.radial_at_offset(delta0)?)?,
    };
    let mut levels = Vec::new();
    let mut stopped = None;
    for k in 0..=cfg.depth {
        let step = (|| -> Result<ScanLevel> {
            let (p, theta) = level_point(entry, k, gap0, delta0)?;
            let rad = p.radial::<f64>(entry, p.q())?;
            let ell = horizon_root(entry, &rad, theta)?;
            let rho = rho_of(entry, p, ell, theta)?;
            Ok(ScanLevel {
                k,
                gap: entry.gap(&rad)?,
                omega1: rad.w1,
                delta: rad.delta,
                theta,
                ln_x: ell,
                rho,
            })
        })();
        match step {
            Ok(l) => levels.push(l),
            Err(e) => {
                stopped = Some(format!("level {k}: {e}"));
                break;
            }
        }
    }
    let n = levels.len();
    let tail = &levels[n.saturating_sub(cfg.window)..];
    let gaps: Vec<f64> = tail.iter().map(|l| l.gap).collect();
    let ells: Vec<f64> = tail.iter().map(|l| l.ln_x.abs().max(1e-300)).collect();
    let rhos: Vec<f64> = tail.iter().map(|l| l.rho.max(1e-300)).collect();
    let (exponent_p, rho_exponent) = if tail.len() >= 3 {
        (fit_tail(&gaps, &ells).map(|s| -s), fit_tail(&gaps, &rhos))
    } else {
        (None, None)
    };
    let rho_last = tail.last().map(|l| l.rho);
    let outcome = match (exponent_p, rho_exponent, rho_last) {
        (Some(p), Some(s), Some(r)) if p > cfg.p_naked && r <= cfg.rho_tol && s > 0.0 => {
            ScanOutcome::Naked
        }
        (Some(p), _, _) if p < cfg.p_clear => ScanOutcome::NotNaked,
        _ => ScanOutcome::Inconclusive,
    };
    let verdict = match outcome {
        ScanOutcome::Naked => Some(NakedVerdict {
            verdict: Verdict::Naked,
            limit_points: vec![LimitPoint {
                omega0: 0.0,
                omega1: entry.omega_edge(),
                theta: (entry.id == EntryId::Kerr).then_some(0.0),
            }],
        }),
        ScanOutcome::NotNaked => Some(NakedVerdict {
            verdict: Verdict::NotNaked,
            limit_points: Vec::new(),
        }),
        ScanOutcome::Inconclusive => None,
    };
    Ok(ClosureReport {
        entry: entry.id,
        outcome,
        verdict,
        exponent_p,
        rho_exponent,
        levels,
        stopped,
        corner: corner(entry, delta0, theta0),
    })
}

/// The verdict, or `InconclusiveRefinement` carrying the decay trace.
pub fn apparent_closure(entry: &CatalogEntry, cfg: &ScanConfig) -> Result<NakedVerdict> {
    let rep = closure_scan(entry, cfg)?;
    rep.verdict.clone().ok_or_else(|| {
        let trace: Vec<String> = rep
            .levels
            .iter()
            .map(|l| {
                format!(
                    "k={} gap={:.3e} lnX={:.3e} rho={:.3e}",
                    l.k, l.gap, l.ln_x, l.rho
                )
            })
            .collect();
        Error::InconclusiveRefinement(format!(
            "{}: p = {:?}, rho exponent = {:?}; {}",
            entry.id,
            rep.exponent_p,
            rep.rho_exponent,
            trace.join("; ")
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_solutions::{catalog, default_synthetic};

    #[test]
    fn catalog_outcomes() {
        let want = [
            ScanOutcome::Naked,
            ScanOutcome::NotNaked,
            ScanOutcome::Naked,
            ScanOutcome::Naked,
            ScanOutcome::NotNaked,
            ScanOutcome::Naked,
        ];
        for (e, w) in catalog().iter().zip(want) {
            let r = closure_scan(e, &ScanConfig::default()).unwrap();
            assert_eq!(
                r.outcome, w,
                "{}: {:?} {:?} {:?}",
                e.id, r.exponent_p, r.rho_exponent, r.stopped
            );
        }
        let s = closure_scan(&default_synthetic(), &ScanConfig::default()).unwrap();
        assert_eq!(s.outcome, ScanOutcome::NotNaked, "{:?}", s.exponent_p);
    }
}
