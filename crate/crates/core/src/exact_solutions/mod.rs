//! The metric catalog: Schwarzschild, the three Reissner–Nordström branches,
//! Roberts, Kerr and a synthetic temporal-gauge collapse.

mod compactifier;
mod metrics;

use compactifier::{exp_inverse_f_dh, exp_inverse_f_h};
pub use compactifier::{rn_df, rn_f, rn_outer_root, RadialCompactifier};
pub use metrics::{
    kerr_chart_valid, schwarzschild_printed_g, schwarzschild_stationary_g, EntryChart, OmegaMetric,
    ScaleFactor, SphericalChart, XMetric,
};

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::compactification::{
    pullback_metric, Basis, ChartMap, ConformalKind, ConformalSpec, MetricField, Patch,
};
use crate::error::{Error, Result};
use crate::mass_geometry::{LimitPoint, NakedVerdict, Verdict};
use crate::numerics::{bisect_newton, RootOptions};
use crate::tensor_core::{scale4, Real, M4};

/// Radius floor for the Roberts chart when `σ ≤ 0`.
pub const ROBERTS_EPS_R: f64 = 1e-6;
/// Angular coordinates used for synthetic Cartesian samples.
pub const SYNTHETIC_ANGLES: [f64; 2] = [0.3, -0.2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntryId {
    Schwarzschild,
    RNSuper,
    RNSub,
    RNExtremal,
    Roberts,
    Kerr,
    SyntheticCollapse,
}

impl EntryId {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Schwarzschild => "schwarzschild",
            Self::RNSuper => "rn-super",
            Self::RNSub => "rn-sub",
            Self::RNExtremal => "rn-extremal",
            Self::Roberts => "roberts",
            Self::Kerr => "kerr",
            Self::SyntheticCollapse => "synthetic",
        }
    }
}

impl fmt::Display for EntryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Reissner–Nordström branch by the sign of `M − |Q|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RnBranch {
    Super,
    Sub,
    Extremal,
}

impl RnBranch {
    pub fn detect(mass: f64, charge: f64) -> Self {
        let q = charge.abs();
        if (mass - q).abs() <= 1e-12 * mass.max(1.0) {
            Self::Extremal
        } else if mass < q {
            Self::Super
        } else {
            Self::Sub
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Params {
    pub mass: f64,
    pub charge: f64,
    pub spin: f64,
    pub sigma: f64,
}

/// Temporal-gauge data of the synthetic entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub scale: ScaleFactor,
    pub conformal: ConformalKind,
    pub omega_max: f64,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub id: EntryId,
    pub params: Params,
    pub compactifier: RadialCompactifier,
    pub chart: EntryChart,
    pub metric: XMetric,
    pub omega_metric: OmegaMetric,
    pub synthetic: Option<SyntheticSpec>,
    /// Inner edge of the radial domain.
    pub r_edge: f64,
    pub expected: NakedVerdict,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} = {v} must be positive and finite"
        )))
    }
}

fn naked_at(omega1: f64, theta: Option<f64>) -> NakedVerdict {
    NakedVerdict {
        verdict: Verdict::Naked,
        limit_points: vec![LimitPoint {
            omega0: 0.0,
            omega1,
            theta,
        }],
    }
}

fn not_naked() -> NakedVerdict {
    NakedVerdict {
        verdict: Verdict::NotNaked,
        limit_points: Vec::new(),
    }
}

fn spherical(
    id: EntryId,
    params: Params,
    h: RadialCompactifier,
    metric: XMetric,
    r_edge: f64,
    expected: NakedVerdict,
) -> CatalogEntry {
    CatalogEntry {
        id,
        params,
        compactifier: h,
        chart: EntryChart::Spherical(SphericalChart { h }),
        metric,
        omega_metric: OmegaMetric::Pullback,
        synthetic: None,
        r_edge,
        expected,
    }
}

pub fn make_schwarzschild(mass: f64) -> Result<CatalogEntry> {
    positive("M", mass)?;
    let h = RadialCompactifier::SchwarzschildLog { mass };
    let mut e = spherical(
        EntryId::Schwarzschild,
        Params {
            mass,
            ..Default::default()
        },
        h,
        XMetric::SchwarzschildStatic { mass },
        2.0 * mass,
        naked_at(0.0, None),
    );
    e.omega_metric = OmegaMetric::SchwarzschildPrinted { mass };
    Ok(e)
}

/// Default compactifier per branch.
pub fn default_rn_compactifier(mass: f64, charge: f64) -> RadialCompactifier {
    match RnBranch::detect(mass, charge) {
        RnBranch::Super => RadialCompactifier::ArctanInverse,
        _ => RadialCompactifier::ExpInverseF { mass, charge },
    }
}

/// A second compactifier distinct from the default.
pub fn alternate_compactifier(id: EntryId) -> RadialCompactifier {
    match id {
        EntryId::RNSub | EntryId::RNExtremal => RadialCompactifier::ArctanInverse,
        _ => RadialCompactifier::InverseShift,
    }
}

pub fn make_reissner_nordstrom(
    mass: f64,
    charge: f64,
    h: Option<RadialCompactifier>,
) -> Result<CatalogEntry> {
    positive("M", mass)?;
    if !charge.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Q = {charge} must be finite"
        )));
    }
    let branch = RnBranch::detect(mass, charge);
    let h = h.unwrap_or_else(|| default_rn_compactifier(mass, charge));
    let (id, r_edge) = match branch {
        RnBranch::Super => (EntryId::RNSuper, 0.0),
        RnBranch::Sub => (EntryId::RNSub, rn_outer_root(mass, charge).unwrap_or(0.0)),
        RnBranch::Extremal => (EntryId::RNExtremal, mass),
    };
    match h {
        RadialCompactifier::ExpInverseF {
            mass: hm,
            charge: hq,
        } => {
            if branch == RnBranch::Super {
                return Err(Error::BranchMismatch(
                    "exp-inverse-F compactifier needs a real outer root of F".into(),
                ));
            }
            if hm != mass || hq != charge {
                return Err(Error::BranchMismatch(
                    "compactifier built for other (M, Q)".into(),
                ));
            }
        }
        RadialCompactifier::SchwarzschildLog { .. } | RadialCompactifier::Conformal(_) => {
            return Err(Error::InvalidParameter(format!(
                "compactifier {} not supported for Reissner-Nordstrom",
                h.name()
            )))
        }
        _ => {}
    }
    let r_edge = if branch == RnBranch::Extremal {
        mass
    } else {
        r_edge
    };
    let expected = match branch {
        RnBranch::Super => not_naked(),
        _ => naked_at(h.edge_value(r_edge)?, None),
    };
    Ok(spherical(
        id,
        Params {
            mass,
            charge,
            ..Default::default()
        },
        h,
        XMetric::ReissnerNordstrom { mass, charge },
        r_edge,
        expected,
    ))
}

/// As [`make_reissner_nordstrom`], rejecting parameters outside `branch`.
pub fn make_reissner_nordstrom_branch(
    mass: f64,
    charge: f64,
    branch: RnBranch,
    h: Option<RadialCompactifier>,
) -> Result<CatalogEntry> {
    let found = RnBranch::detect(mass, charge);
    if found != branch {
        return Err(Error::BranchMismatch(format!(
            "M = {mass}, Q = {charge} is {found:?}, not {branch:?}"
        )));
    }
    make_reissner_nordstrom(mass, charge, h)
}

/// Inner radius where the Roberts horizon root meets the areal floor,
/// `2σ h(r) = r |h′(r)|`.
fn roberts_edge(sigma: f64, h: &RadialCompactifier) -> Result<f64> {
    if sigma <= 0.0 {
        return Ok(ROBERTS_EPS_R);
    }
    let f = |r: f64| -> Result<f64> { Ok(r * h.dh(r)?.abs() - 2.0 * sigma * h.h(r)?) };
    let mut hi = 1.0;
    while f(hi)? <= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::InvalidParameter(format!(
                "sigma = {sigma}: horizon leaves the Roberts domain everywhere"
            )));
        }
    }
    let lo = ROBERTS_EPS_R;
    if f(lo)? > 0.0 {
        return Ok(lo);
    }
    Ok(bisect_newton(f, None, lo, hi, &RootOptions::default())?.max(ROBERTS_EPS_R))
}

pub fn make_roberts(sigma: f64, h: Option<RadialCompactifier>) -> Result<CatalogEntry> {
    let s = 1.0 + 2.0 * sigma;
    if !(s > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidSigma(s));
    }
    let h = h.unwrap_or(RadialCompactifier::ArctanInverse);
    if !matches!(
        h,
        RadialCompactifier::ArctanInverse | RadialCompactifier::InverseShift
    ) {
        return Err(Error::InvalidParameter(format!(
            "compactifier {} not supported for Roberts",
            h.name()
        )));
    }
    let r_edge = roberts_edge(sigma, &h)?;
    Ok(spherical(
        EntryId::Roberts,
        Params {
            sigma,
            ..Default::default()
        },
        h,
        XMetric::Roberts { sigma },
        r_edge,
        not_naked(),
    ))
}

pub fn make_kerr(mass: f64, spin: f64, h: Option<RadialCompactifier>) -> Result<CatalogEntry> {
    positive("M", mass)?;
    if !(spin != 0.0 && spin.abs() < mass) {
        return Err(Error::BranchMismatch(format!(
            "Kerr needs 0 < |a| < M, got a = {spin}, M = {mass}"
        )));
    }
    let h = h.unwrap_or(RadialCompactifier::ArctanInverse);
    if !matches!(
        h,
        RadialCompactifier::ArctanInverse | RadialCompactifier::InverseShift
    ) {
        return Err(Error::InvalidParameter(format!(
            "compactifier {} not supported for Kerr",
            h.name()
        )));
    }
    let r_plus = mass + (mass * mass - spin * spin).sqrt();
    Ok(spherical(
        EntryId::Kerr,
        Params {
            mass,
            spin,
            ..Default::default()
        },
        h,
        XMetric::KerrBL { mass, spin },
        r_plus,
        naked_at(h.h(r_plus)?, Some(0.0)),
    ))
}

pub fn make_synthetic_collapse(
    scale: ScaleFactor,
    conformal: ConformalKind,
) -> Result<CatalogEntry> {
    let omega_max = 1.0;
    let factor = conformal.to_factor()?;
    let spec = ConformalSpec::new(factor, omega_max)?;
    let r_edge = spec.r_min()?;
    if scale.a(0.0) <= 0.0 {
        return Err(Error::InvalidParameter("a(0) must be positive".into()));
    }
    Ok(CatalogEntry {
        id: EntryId::SyntheticCollapse,
        params: Params::default(),
        compactifier: RadialCompactifier::Conformal(conformal),
        chart: EntryChart::Cartesian(ChartMap::new(spec, Patch::Plus)),
        metric: XMetric::TemporalGauge { scale, conformal },
        omega_metric: OmegaMetric::Pullback,
        synthetic: Some(SyntheticSpec {
            scale,
            conformal,
            omega_max,
        }),
        r_edge,
        expected: not_naked(),
    })
}

/// The six exact solutions with their default compactifiers.
pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        make_schwarzschild(1.0).expect("valid"),
        make_reissner_nordstrom(1.0, 2.0, None).expect("valid"),
        make_reissner_nordstrom(2.0, 1.0, None).expect("valid"),
        make_reissner_nordstrom(1.0, 1.0, None).expect("valid"),
        make_roberts(0.1, None).expect("valid"),
        make_kerr(1.0, 0.5, None).expect("valid"),
    ]
}

pub fn default_synthetic() -> CatalogEntry {
    make_synthetic_collapse(
        ScaleFactor::Linear { rate: 1.0 },
        ConformalKind::ReciprocalR,
    )
    .expect("valid")
}

impl FromStr for RadialCompactifier {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arctan-inverse" => Ok(Self::ArctanInverse),
            "inverse-shift" => Ok(Self::InverseShift),
            other => Err(Error::Config(format!(
                "unknown compactifier '{other}' (expected arctan-inverse or inverse-shift)"
            ))),
        }
    }
}

/// Radial position carried in several forms so closed forms near the edge
/// avoid cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radial<R> {
    pub w1: R,
    pub r: R,
    /// `r − r_edge`
    pub delta: R,
    /// `tan ω¹`, kept only for the Schwarzschild logarithmic compactifier.
    pub t: Option<R>,
}

impl<R: Real> Radial<R> {
    pub fn values(&self) -> Radial<f64> {
        Radial {
            w1: self.w1.value(),
            r: self.r.value(),
            delta: self.delta.value(),
            t: self.t.map(|t| t.value()),
        }
    }
}

impl CatalogEntry {
    pub fn is_temporal_gauge(&self) -> bool {
        self.synthetic.is_some()
    }

    /// Same entry under another compactifier.
    pub fn with_compactifier(&self, h: RadialCompactifier) -> Result<CatalogEntry> {
        let p = self.params;
        match self.id {
            EntryId::Schwarzschild => Err(Error::InvalidParameter(
                "Schwarzschild uses its fixed logarithmic compactifier".into(),
            )),
            EntryId::RNSuper | EntryId::RNSub | EntryId::RNExtremal => {
                make_reissner_nordstrom(p.mass, p.charge, Some(h))
            }
            EntryId::Roberts => make_roberts(p.sigma, Some(h)),
            EntryId::Kerr => make_kerr(p.mass, p.spin, Some(h)),
            EntryId::SyntheticCollapse => match (h, self.synthetic) {
                (RadialCompactifier::Conformal(k), Some(s)) => make_synthetic_collapse(s.scale, k),
                _ => Err(Error::InvalidParameter(
                    "synthetic entry takes a conformal-factor compactifier".into(),
                )),
            },
        }
    }

    /// `ω¹` at the inner edge.
    pub fn omega_edge(&self) -> f64 {
        match &self.chart {
            EntryChart::Cartesian(c) => c.conformal.omega_max,
            EntryChart::Spherical(_) => self
                .compactifier
                .edge_value(self.r_edge)
                .unwrap_or(FRAC_PI_2),
        }
    }

    /// `Ω(x)` for the Cartesian chart.
    pub fn chart_omega(&self, x: &[f64; 3]) -> Result<f64> {
        match &self.chart {
            EntryChart::Cartesian(c) => Ok(c.conformal.factor.omega(x)),
            EntryChart::Spherical(_) => Err(Error::NotTemporalGauge),
        }
    }

    fn spherical_theta<R: Real>(&self, w: &[R; 4]) -> R {
        match self.chart {
            EntryChart::Spherical(_) => w[2],
            EntryChart::Cartesian(_) => R::cst(FRAC_PI_2),
        }
    }

    /// `ω` for `(ln ω⁰, ω¹, θ)`.
    pub fn omega_point(&self, ell: f64, w1: f64, theta: f64) -> [f64; 4] {
        match self.chart {
            EntryChart::Spherical(_) => [ell.exp(), w1, theta, 0.4],
            EntryChart::Cartesian(_) => [ell.exp(), w1, SYNTHETIC_ANGLES[0], SYNTHETIC_ANGLES[1]],
        }
    }

    fn rn_roots(&self) -> Option<(f64, f64)> {
        let (m, q) = (self.params.mass, self.params.charge);
        rn_outer_root(m, q).map(|rp| (rp, q * q / rp))
    }

    /// Radial data from `ω¹`.
    pub fn radial<R: Real>(&self, w1: R) -> Result<Radial<R>> {
        let v = w1.value();
        if !(v > 0.0) {
            return Err(Error::OutOfRange(format!("omega1 = {v} must be positive")));
        }
        let edge = self.r_edge;
        let mut t = None;
        let (r, delta) = match self.compactifier {
            RadialCompactifier::SchwarzschildLog { mass } => {
                if v >= FRAC_PI_2 {
                    return Err(Error::OutOfRange(format!("omega1 = {v} >= pi/2")));
                }
                let tt = w1.tan();
                let d = -(-tt).expm1();
                t = Some(tt);
                (d.recip() * (2.0 * mass), (-tt).exp() / d * (2.0 * mass))
            }
            RadialCompactifier::ExpInverseF { .. } => {
                let gap = R::cst((1.0 / std::f64::consts::E).atan()) - w1;
                if !(gap.value() > 0.0) {
                    return Err(Error::OutOfRange(format!(
                        "omega1 = {v} beyond the horizon image"
                    )));
                }
                let f = -(gap.tan().ln().recip());
                let (rp, rm) = self
                    .rn_roots()
                    .ok_or_else(|| Error::BranchMismatch("no outer root".into()))?;
                // (1 − F)δ² + bδ − F r₊² = 0
                let b = -(f * (2.0 * rp)) + (rp - rm);
                let c = f * (rp * rp);
                let one_f = -f + 1.0;
                let disc = (b.sq() + one_f * c * 4.0).sqrt();
                let delta = if b.value() > 0.0 {
                    c * 2.0 / (b + disc)
                } else {
                    (disc - b) / (one_f * 2.0)
                };
                (delta + rp, delta)
            }
            RadialCompactifier::Conformal(k) => {
                let fac = k.to_factor()?;
                let r0 = fac.inverse_r(v)?;
                let r = w1.chain(r0, 1.0 / fac.d_omega_r(r0)?);
                (r, r - edge)
            }
            h => {
                let r0 = h.inverse(v)?;
                let r = w1.chain(r0, 1.0 / h.dh(r0)?);
                (r, r - edge)
            }
        };
        if !(r.value() > 0.0) {
            return Err(Error::OutOfRange(format!(
                "omega1 = {v} maps to r = {}",
                r.value()
            )));
        }
        Ok(Radial { w1, r, delta, t })
    }

    /// Radial data from the offset `δ = r − r_edge`.
    pub fn radial_at_offset<R: Real>(&self, delta: R) -> Result<Radial<R>> {
        let r = delta + self.r_edge;
        if !(r.value() > 0.0) {
            return Err(Error::OutOfRange(format!("r = {} not positive", r.value())));
        }
        let mut t = None;
        let w1 = match self.compactifier {
            RadialCompactifier::SchwarzschildLog { .. } => {
                let tt = r.ln() - delta.ln();
                t = Some(tt);
                tt.atan()
            }
            RadialCompactifier::ExpInverseF { .. } => {
                let f = self.rn_f_at(&Radial {
                    w1: R::cst(0.0),
                    r,
                    delta,
                    t: None,
                });
                exp_inverse_f_h(f.recip())
            }
            h => h.h(r)?,
        };
        Ok(Radial { w1, r, delta, t })
    }

    pub fn radial_at_r(&self, r: f64) -> Result<Radial<f64>> {
        self.radial_at_offset(r - self.r_edge)
    }

    /// Schwarzschild radial data from `t = tan ω¹`, exact for arbitrarily large `t`.
    pub fn radial_at_t<R: Real>(&self, t: R) -> Result<Radial<R>> {
        match self.compactifier {
            RadialCompactifier::SchwarzschildLog { mass } => {
                let d = -(-t).expm1();
                Ok(Radial {
                    w1: t.atan(),
                    r: d.recip() * (2.0 * mass),
                    delta: (-t).exp() / d * (2.0 * mass),
                    t: Some(t),
                })
            }
            _ => Err(Error::InvalidParameter(
                "tan(omega1) parametrization is Schwarzschild-only".into(),
            )),
        }
    }

    fn rn_f_at<R: Real>(&self, rad: &Radial<R>) -> R {
        let (m, q) = (self.params.mass, self.params.charge);
        match self.rn_roots() {
            Some((rp, rm)) if self.r_edge == rp => rad.delta * (rad.delta + (rp - rm)) / rad.r.sq(),
            _ => rn_f(rad.r, m, q),
        }
    }

    fn kerr_delta<R: Real>(&self, rad: &Radial<R>) -> R {
        let (m, a) = (self.params.mass, self.params.spin);
        let rp = m + (m * m - a * a).sqrt();
        rad.delta * (rad.delta + (rp - a * a / rp))
    }

    /// `h′(r)` using the offset form of `F` where it matters.
    pub fn dh<R: Real>(&self, rad: &Radial<R>) -> Result<R> {
        match self.compactifier {
            RadialCompactifier::ExpInverseF { mass, charge } => Ok(exp_inverse_f_dh(
                self.rn_f_at(rad),
                rn_df(rad.r, mass, charge),
            )),
            RadialCompactifier::SchwarzschildLog { mass } => {
                let t = rad.t.unwrap_or_else(|| rad.w1.tan());
                Ok(-((rad.r * rad.delta).recip() * (2.0 * mass) / (t.sq() + 1.0)))
            }
            h => h.dh(rad.r),
        }
    }

    /// `ω¹_edge − ω¹` without cancellation.
    pub fn gap(&self, rad: &Radial<f64>) -> Result<f64> {
        let (r, d, e) = (rad.r, rad.delta, self.r_edge);
        Ok(match self.compactifier {
            RadialCompactifier::ArctanInverse => (d / (1.0 + r * e)).atan(),
            RadialCompactifier::InverseShift => d / ((1.0 + r) * (1.0 + e)),
            RadialCompactifier::SchwarzschildLog { .. } => {
                let t = rad.t.unwrap_or_else(|| rad.w1.tan());
                (1.0 / t).atan()
            }
            RadialCompactifier::ExpInverseF { .. } => (-1.0 / self.rn_f_at(rad)).exp().atan(),
            RadialCompactifier::Conformal(ConformalKind::ReciprocalR) => d / (r * e),
            RadialCompactifier::Conformal(_) => self.omega_edge() - rad.w1,
        })
    }

    /// Lower bound on `ln ω⁰` from the chart (Roberts areal factor).
    pub fn ell_floor(&self, rad: &Radial<f64>) -> f64 {
        match self.metric {
            XMetric::Roberts { sigma } if sigma > 0.0 => {
                -rad.r / (2.0 * sigma * (1.0 + 2.0 * sigma) * rad.w1)
            }
            _ => f64::NEG_INFINITY,
        }
    }

    fn check_chart<R: Real>(&self, ell: R, rad: &Radial<R>, theta: R) -> Result<()> {
        let (rv, tv, lv) = (rad.r.value(), theta.value(), ell.value());
        if lv > 0.0 {
            return Err(Error::OutOfRange(format!("ln omega0 = {lv} > 0")));
        }
        match self.metric {
            XMetric::KerrBL { spin, .. } => {
                let d = self.kerr_delta(&rad.values());
                if !(d - spin * spin * tv.sin().powi(2) > 1e-12 * (rv * rv + spin * spin)) {
                    return Err(Error::ChartInvalid(format!(
                        "Delta - a^2 sin^2(theta) <= 0 at r = {rv}, theta = {tv}"
                    )));
                }
            }
            XMetric::Roberts { .. } => {
                if !(rv > ROBERTS_EPS_R) || !(lv > self.ell_floor(&rad.values())) {
                    return Err(Error::ChartInvalid(format!(
                        "Roberts areal factor not positive at r = {rv}, ln omega0 = {lv}"
                    )));
                }
            }
            XMetric::TemporalGauge { .. } => {
                if rad.delta.value() < 0.0 {
                    return Err(Error::OutOfRange(format!(
                        "r = {rv} inside r_min = {}",
                        self.r_edge
                    )));
                }
            }
            _ => {
                let inside = match rad.t {
                    Some(t) => !(t.value() > 0.0),
                    None => !(rad.delta.value() > 0.0),
                };
                if inside {
                    return Err(Error::OutOfRange(format!(
                        "r = {rv} not outside the edge {}",
                        self.r_edge
                    )));
                }
            }
        }
        Ok(())
    }

    /// `m = H·P` with `P > 0`: the horizon function `H` carries the zero set and
    /// sign of `m` and stays finite where `P` overflows.
    pub fn closed_parts<R: Real>(&self, ell: R, rad: &Radial<R>, theta: R) -> Result<(R, R)> {
        self.check_chart(ell, rad, theta)?;
        let (w1, r) = (rad.w1, rad.r);
        let w1_4 = w1.powi(4);
        Ok(match self.metric {
            XMetric::SchwarzschildStatic { .. } => {
                let t = rad.t.unwrap_or_else(|| w1.tan());
                let c = r.sq() * (t.sq() + 1.0);
                (ell.sq() - c, ((-t).exp() * w1_4 * c).recip())
            }
            XMetric::ReissnerNordstrom { .. } => {
                let f = self.rn_f_at(rad);
                let hf = self.dh(rad)? * f;
                ((ell * hf).sq() - 1.0, (f * w1_4).recip())
            }
            XMetric::Roberts { sigma } => {
                let s = 1.0 + 2.0 * sigma;
                let dh = self.dh(rad)?;
                ((ell * dh * s).sq() - 1.0, (w1_4 * s).recip())
            }
            XMetric::KerrBL { mass: _, spin } => {
                let a2 = spin * spin;
                let delta = self.kerr_delta(rad);
                let sigma = r.sq() + theta.cos().sq() * a2;
                let b = (r.sq() + a2).sq() - delta * theta.sin().sq() * a2;
                let dh = self.dh(rad)?;
                ((ell * dh * delta).sq() - b, (sigma * delta * w1_4).recip())
            }
            XMetric::TemporalGauge { scale, conformal } => {
                let a = scale.a(-(w1 * ell));
                if !(a.value() > 0.0) {
                    return Err(Error::OutOfRange(format!(
                        "scale factor {} not positive",
                        a.value()
                    )));
                }
                let dom = conformal.to_factor()?.d_omega_r(r)?;
                (
                    (ell * dom * a.sq()).sq() - w1.sq(),
                    (a.powi(6) * w1_4).recip(),
                )
            }
            XMetric::Minkowski => return Err(Error::InvalidParameter("no closed form".into())),
        })
    }

    /// `m = G(dω⁰/ω⁰, dω⁰/ω⁰)` in closed form.
    pub fn mass_closed<R: Real>(&self, ell: R, rad: &Radial<R>, theta: R) -> Result<R> {
        let (h, p) = self.closed_parts(ell, rad, theta)?;
        Ok(h * p)
    }

    /// [`Self::mass_closed`] at an ω-point.
    pub fn mass_at<R: Real>(&self, w: &[R; 4]) -> Result<R> {
        if !(w[0].value() > 0.0) {
            return Err(Error::OutOfRange(format!(
                "omega0 = {} must be positive",
                w[0].value()
            )));
        }
        let rad = self.radial(w[1])?;
        self.mass_closed(w[0].ln(), &rad, self.spherical_theta(w))
    }

    /// The printed mass formula, where the catalog has one.
    pub fn mass_printed(&self, ell: f64, rad: &Radial<f64>, theta: f64) -> Option<Result<f64>> {
        let run = || -> Result<Option<f64>> {
            self.check_chart(ell, rad, theta)?;
            let w1 = rad.w1;
            Ok(match self.metric {
                XMetric::SchwarzschildStatic { mass } => {
                    let t = rad.t.unwrap_or_else(|| w1.tan());
                    let one_minus = -(-t).exp_m1();
                    let pre = (t.exp() / w1).powi(2) * one_minus.powi(4)
                        / (4.0 * mass * mass * (1.0 + t * t).powi(2));
                    let c = 4.0 * mass * mass * (1.0 + t * t) / one_minus.powi(2);
                    Some(pre * (ell * ell - c))
                }
                XMetric::ReissnerNordstrom { .. } => {
                    let f = self.rn_f_at(rad);
                    let dh = self.dh(rad)?;
                    Some((-1.0 + ell * ell * dh * dh * f * f) / (f * w1 * w1))
                }
                XMetric::Roberts { sigma } => {
                    let s = 1.0 + 2.0 * sigma;
                    let dh = self.dh(rad)?;
                    Some((-1.0 / s + dh * dh * s * ell * ell) / (w1 * w1))
                }
                XMetric::KerrBL { mass, spin } => {
                    let k = kerr_terms(self.kerr_delta(rad), rad.r, theta, mass, spin);
                    let dh = self.dh(rad)?;
                    Some(
                        (-k.sigma / k.d_minus + dh * dh * ell * ell * k.delta / k.sigma - k.cross)
                            / (w1 * w1),
                    )
                }
                _ => None,
            })
        };
        run().transpose()
    }

    /// Printed horizon height `ln X`, where the catalog has one.
    pub fn horizon_printed(&self, rad: &Radial<f64>, theta: f64) -> Option<Result<f64>> {
        let run = || -> Result<Option<f64>> {
            Ok(match self.metric {
                XMetric::SchwarzschildStatic { mass } => {
                    let t = rad.t.unwrap_or_else(|| rad.w1.tan());
                    Some(-2.0 * mass * (1.0 + t * t).sqrt() / -(-t).exp_m1())
                }
                XMetric::ReissnerNordstrom { .. } => {
                    Some(-1.0 / (self.dh(rad)?.abs() * self.rn_f_at(rad)))
                }
                XMetric::Roberts { sigma } => {
                    Some(-1.0 / (self.dh(rad)?.abs() * (1.0 + 2.0 * sigma)))
                }
                XMetric::KerrBL { mass, spin } => {
                    self.check_chart(0.0, rad, theta)?;
                    let k = kerr_terms(self.kerr_delta(rad), rad.r, theta, mass, spin);
                    let dh = self.dh(rad)?;
                    let rhs = k.sigma / (k.delta * dh * dh) * (k.sigma / k.d_minus + k.cross);
                    if !(rhs > 0.0) {
                        return Err(Error::ChartInvalid(format!(
                            "horizon right side {rhs:e} not positive at r = {}, theta = {theta}",
                            rad.r
                        )));
                    }
                    Some(-rhs.sqrt())
                }
                _ => None,
            })
        };
        run().transpose()
    }

    /// The printed `∂m/∂ω⁰`, where the catalog has one.
    pub fn dm_dw0_printed(&self, ell: f64, rad: &Radial<f64>) -> Option<Result<f64>> {
        let run = || -> Result<Option<f64>> {
            let (w0, w1) = (ell.exp(), rad.w1);
            Ok(match self.metric {
                XMetric::SchwarzschildStatic { mass } => {
                    let t = rad.t.unwrap_or_else(|| w1.tan());
                    let one_minus = -(-t).exp_m1();
                    Some(
                        (t.exp() / w1).powi(2) * one_minus.powi(4)
                            / (2.0 * mass * mass * (1.0 + t * t).powi(2))
                            * ell
                            / w0,
                    )
                }
                XMetric::ReissnerNordstrom { .. } => {
                    let f = self.rn_f_at(rad);
                    let dh = self.dh(rad)?;
                    Some(2.0 / (w1 * w1 * w0) * dh * dh * f * f * ell)
                }
                XMetric::Roberts { sigma } => {
                    let dh = self.dh(rad)?;
                    Some(2.0 * (1.0 + 2.0 * sigma) / (w0 * w1 * w1) * dh * dh * ell)
                }
                _ => None,
            })
        };
        run().transpose()
    }

    /// Positive factor `m_printed / m` for Schwarzschild.
    pub fn schwarzschild_factor(&self, rad: &Radial<f64>) -> Option<f64> {
        match self.metric {
            XMetric::SchwarzschildStatic { .. } => {
                let t = rad.t.unwrap_or_else(|| rad.w1.tan());
                let one_minus = -(-t).exp_m1();
                Some(rad.w1 * rad.w1 * t.exp() * one_minus * one_minus / (1.0 + t * t))
            }
            _ => None,
        }
    }

    /// `h = (ω¹)²g` in ω-coordinates.
    pub fn h_omega<R: Real>(&self, w: &[R; 4]) -> Result<M4<R>> {
        match self.omega_metric {
            OmegaMetric::Pullback => {
                pullback_metric(&self.metric, w, &self.chart, Basis::Coordinate)
            }
            OmegaMetric::SchwarzschildPrinted { mass } => {
                Ok(scale4(&schwarzschild_printed_g(w, mass), w[1].sq()))
            }
            OmegaMetric::SchwarzschildStationary { mass } => {
                Ok(scale4(&schwarzschild_stationary_g(w, mass), w[1].sq()))
            }
        }
    }

    /// `h(∂/∂ω⁰, ∂/∂ω⁰)` for Kerr, evaluated through the ergoregion.
    pub fn ergo_h00(&self, w0: f64, r: f64, theta: f64) -> Result<f64> {
        match self.metric {
            XMetric::KerrBL { mass, spin } => {
                let w1 = self.compactifier.h(r)?;
                let sigma = r * r + spin * spin * theta.cos().powi(2);
                let delta = r * r - 2.0 * mass * r + spin * spin;
                let g_tt = -(delta - spin * spin * theta.sin().powi(2)) / sigma;
                Ok(w1 * w1 * (w1 / w0).powi(2) * g_tt)
            }
            _ => Err(Error::InvalidParameter(
                "ergosphere marker is Kerr-only".into(),
            )),
        }
    }

    /// `r*(θ) = M + √(M² − a²cos²θ)`.
    pub fn ergosphere_radius(&self, theta: f64) -> Option<f64> {
        match self.metric {
            XMetric::KerrBL { mass, spin } => {
                Some(mass + (mass * mass - spin * spin * theta.cos().powi(2)).sqrt())
            }
            _ => None,
        }
    }

    /// Radial offsets `δ` used for interior sampling.
    pub fn sample_offsets(&self) -> (f64, f64) {
        let s = self.r_edge.max(1.0);
        (0.05 * s, 4.0 * s)
    }
}

struct KerrTerms {
    sigma: f64,
    delta: f64,
    d_minus: f64,
    /// `a²sin⁴θ(r² + a² − Δ)²/(ΣΣ′(Δ − a²sin²θ))`
    cross: f64,
}

fn kerr_terms(delta: f64, r: f64, theta: f64, mass: f64, spin: f64) -> KerrTerms {
    let a2 = spin * spin;
    let s2 = theta.sin().powi(2);
    let sigma = r * r + a2 * theta.cos().powi(2);
    let d_minus = delta - a2 * s2;
    let sigma_prime = kerr_sigma_prime(r, theta, mass, spin);
    let lead = 2.0 * mass * r;
    KerrTerms {
        sigma,
        delta,
        d_minus,
        cross: a2 * s2 * s2 * lead * lead / (sigma * sigma_prime * d_minus),
    }
}

/// `Σ′ = g_tt g_φφ − g_tφ²` from the Boyer–Lindquist components.
pub fn kerr_sigma_prime(r: f64, theta: f64, mass: f64, spin: f64) -> f64 {
    let g: M4<f64> = XMetric::KerrBL { mass, spin }
        .metric(&[0.0, r, theta, 0.0])
        .unwrap_or([[f64::NAN; 4]; 4]);
    g[0][0] * g[3][3] - g[0][3] * g[0][3]
}
