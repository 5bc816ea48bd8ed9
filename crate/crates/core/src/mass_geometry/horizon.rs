use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::naked::{lift_radial, rho_of, ScanParam};
use crate::error::{Error, Result};
use crate::exact_solutions::{CatalogEntry, Radial};
use crate::numerics::{bisect_newton, RootOptions};
use crate::tensor_core::{invert_symmetric_with, to_sym, Dual, InversionConfig, Real};

const ELL_CAP: f64 = -1e300;

/// Default relative tolerance on `ln X` for the horizon root.
pub const ROOT_XTOL: f64 = 1e-12;

/// `ln X` where `m(·, ωⁱ)` changes sign, bracketed on `(−∞, 0]`.
pub fn horizon_root(entry: &CatalogEntry, rad: &Radial<f64>, theta: f64) -> Result<f64> {
    horizon_root_with(entry, rad, theta, ROOT_XTOL)
}

pub fn horizon_root_with(
    entry: &CatalogEntry,
    rad: &Radial<f64>,
    theta: f64,
    xtol: f64,
) -> Result<f64> {
    let h = |l: f64| -> Result<f64> { Ok(entry.closed_parts(l, rad, theta)?.0) };
    let lifted = lift_radial(rad);
    let dh = |l: f64| -> Result<f64> {
        Ok(entry
            .closed_parts(Dual::var(l), &lifted, Dual::cst(theta))?
            .0
            .du)
    };
    let at_top = h(0.0)?;
    if !(at_top < 0.0) {
        return Err(Error::NoSignChange(format!(
            "m(ln omega0 = 0) = {at_top:e} is not exterior at omega1 = {}",
            rad.w1
        )));
    }
    let floor = entry.ell_floor(rad);
    let mut lo = -1.0;
    let mut hi = 0.0;
    loop {
        if lo <= floor {
            lo = floor + 1e-12 * floor.abs();
            if !(h(lo)? > 0.0) {
                return Err(Error::NoSignChange(format!(
                    "horizon below the chart floor at omega1 = {}",
                    rad.w1
                )));
            }
            break;
        }
        if h(lo)? > 0.0 {
            break;
        }
        hi = lo;
        lo *= 2.0;
        if lo < ELL_CAP {
            return Err(Error::NoSignChange(format!(
                "no interior below omega1 = {}",
                rad.w1
            )));
        }
    }
    let opts = RootOptions {
        xtol,
        max_iter: 400,
    };
    bisect_newton(h, Some(&dh), lo, hi, &opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonNode {
    pub omega1: f64,
    pub ln_x: f64,
    /// `X(ωⁱ)`; zero when it underflows.
    pub x: f64,
    /// `∂m/∂ω⁰` at the root, when representable.
    pub dm_dt: Option<f64>,
    /// Normalized `|∂m/∂ln ω⁰|` against the `(ln ω⁰, ln ω¹)` gradient.
    pub rho: f64,
    pub apparent_candidate: bool,
    /// `−2G⁰¹X′ + G¹¹X′²`
    pub null_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFailure {
    pub omega1: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonProfile {
    pub theta: f64,
    pub nodes: Vec<HorizonNode>,
    pub failures: Vec<NodeFailure>,
}

impl HorizonProfile {
    /// Whether `X` takes at least two distinct values.
    pub fn is_nonconstant(&self) -> bool {
        self.nodes
            .windows(2)
            .any(|w| (w[0].ln_x - w[1].ln_x).abs() > 1e-12 * w[0].ln_x.abs().max(1.0))
    }
}

fn node(entry: &CatalogEntry, w1: f64, theta: f64, xtol: f64) -> Result<HorizonNode> {
    let rad = entry.radial(w1)?;
    let ell = horizon_root_with(entry, &rad, theta, xtol)?;
    let (_, p) = entry.closed_parts(ell, &rad, theta)?;
    let dh = entry
        .closed_parts(Dual::var(ell), &lift_radial(&rad), Dual::cst(theta))?
        .0
        .du;
    let x = ell.exp();
    let dm_dell = p * dh;
    let dm_dt = dm_dell / x;
    let rho = rho_of(entry, ScanParam::Omega1(w1), ell, theta)?;
    Ok(HorizonNode {
        omega1: w1,
        ln_x: ell,
        x,
        dm_dt: dm_dt.is_finite().then_some(dm_dt),
        rho,
        apparent_candidate: rho <= super::DTOL,
        null_residual: None,
    })
}

fn null_residual(entry: &CatalogEntry, n: &HorizonNode, theta: f64, dx: f64) -> Option<f64> {
    if !(n.x > 1e-300) {
        return None;
    }
    let w = entry.omega_point(n.ln_x, n.omega1, theta);
    let h = entry.h_omega(&w).ok()?;
    let g = invert_symmetric_with(&to_sym::<f64>(&h), &InversionConfig::default()).ok()?;
    let v = -2.0 * g.get(0, 1) * dx + g.get(1, 1) * dx * dx;
    v.is_finite().then_some(v)
}

/// Horizon height `X(ω¹)` on a grid at fixed `θ`; failing nodes are recorded
/// and skipped.
pub fn horizon_profile(entry: &CatalogEntry, omega1: &[f64], theta: f64) -> Result<HorizonProfile> {
    horizon_profile_with(entry, omega1, theta, ROOT_XTOL)
}

pub fn horizon_profile_with(
    entry: &CatalogEntry,
    omega1: &[f64],
    theta: f64,
    xtol: f64,
) -> Result<HorizonProfile> {
    if !(xtol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "root tolerance {xtol} must be positive"
        )));
    }
    if omega1.is_empty() {
        return Err(Error::InvalidParameter("empty omega1 grid".into()));
    }
    let results: Vec<(f64, Result<HorizonNode>)> = omega1
        .par_iter()
        .map(|&w1| (w1, node(entry, w1, theta, xtol)))
        .collect();
    let mut nodes = Vec::new();
    let mut failures = Vec::new();
    for (w1, r) in results {
        match r {
            Ok(n) => nodes.push(n),
            Err(e) => failures.push(NodeFailure {
                omega1: w1,
                error: e.to_string(),
            }),
        }
    }
    let k = nodes.len();
    let lnx: Vec<(f64, f64)> = nodes.iter().map(|n| (n.omega1, n.ln_x)).collect();
    for i in 0..k {
        if k < 2 {
            break;
        }
        let (a, b) = if i == 0 {
            (0, 1)
        } else if i == k - 1 {
            (k - 2, k - 1)
        } else {
            (i - 1, i + 1)
        };
        let slope = (lnx[b].1 - lnx[a].1) / (lnx[b].0 - lnx[a].0);
        let dx = nodes[i].x * slope;
        nodes[i].null_residual = null_residual(entry, &nodes[i], theta, dx);
    }
    Ok(HorizonProfile {
        theta,
        nodes,
        failures,
    })
}
