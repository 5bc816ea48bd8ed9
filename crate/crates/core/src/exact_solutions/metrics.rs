use serde::{Deserialize, Serialize};

use super::compactifier::{rn_f, RadialCompactifier};
use crate::compactification::{Chart, ChartMap, ConformalKind, MetricField};
use crate::error::{Error, Result};
use crate::tensor_core::{zero4, Real, M4};

/// Scale factor `a(t)` of the isotropic slice metric `ḡ = a²δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScaleFactor {
    /// `1 + rate·t`
    Linear {
        rate: f64,
    },
    Constant {
        value: f64,
    },
    /// `e^{rate·t}`
    Exponential {
        rate: f64,
    },
}

impl ScaleFactor {
    pub fn a<R: Real>(&self, t: R) -> R {
        match *self {
            Self::Linear { rate } => t * rate + 1.0,
            Self::Constant { value } => R::cst(value),
            Self::Exponential { rate } => (t * rate).exp(),
        }
    }

    pub fn da<R: Real>(&self, t: R) -> R {
        match *self {
            Self::Linear { rate } => R::cst(rate),
            Self::Constant { .. } => R::cst(0.0),
            Self::Exponential { rate } => (t * rate).exp() * rate,
        }
    }

    pub fn is_static(&self) -> bool {
        match *self {
            Self::Linear { rate } | Self::Exponential { rate } => rate == 0.0,
            Self::Constant { .. } => true,
        }
    }
}

/// Kerr chart validity: `Δ − a² sin²θ` above `10⁻¹²(r² + a²)`.
pub fn kerr_chart_valid(r: f64, theta: f64, mass: f64, spin: f64) -> bool {
    let delta = r * r + spin * spin - 2.0 * mass * r;
    let s2 = theta.sin().powi(2);
    delta - spin * spin * s2 > 1e-12 * (r * r + spin * spin)
}

/// Spacetime metrics in their native `(x⁰, x¹, x², x³)` charts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum XMetric {
    Minkowski,
    /// `−(|ḡ|/Ω²)(dx⁰)² + a(x⁰)² δᵢⱼ dxⁱdxʲ` in Cartesian coordinates.
    TemporalGauge {
        scale: ScaleFactor,
        conformal: ConformalKind,
    },
    /// `(t, r, θ, φ)`
    SchwarzschildStatic {
        mass: f64,
    },
    /// `(t, r, θ, φ)`
    ReissnerNordstrom {
        mass: f64,
        charge: f64,
    },
    /// `(ϑ, r, θ, φ)` with `ϑ = v − r/(1 + 2σ)`.
    Roberts {
        sigma: f64,
    },
    /// Boyer–Lindquist `(t, r, θ, φ)`.
    KerrBL {
        mass: f64,
        spin: f64,
    },
}

impl XMetric {
    pub fn is_temporal_gauge(&self) -> bool {
        matches!(self, Self::TemporalGauge { .. })
    }
}

impl MetricField for XMetric {
    fn metric<R: Real>(&self, x: &[R; 4]) -> Result<M4<R>> {
        let mut g = zero4::<R>();
        match *self {
            Self::Minkowski => {
                g[0][0] = R::cst(-1.0);
                for (i, row) in g.iter_mut().enumerate().skip(1) {
                    row[i] = R::cst(1.0);
                }
            }
            Self::TemporalGauge { scale, conformal } => {
                let a = scale.a(x[0]);
                if !(a.value() > 0.0) {
                    return Err(Error::OutOfRange(format!(
                        "scale factor {} not positive",
                        a.value()
                    )));
                }
                let r = (x[1].sq() + x[2].sq() + x[3].sq()).sqrt();
                let om = conformal.to_factor()?.omega_r(r)?;
                let a2 = a.sq();
                g[0][0] = -(a2.powi(3) / om.sq());
                for (i, row) in g.iter_mut().enumerate().skip(1) {
                    row[i] = a2;
                }
            }
            Self::SchwarzschildStatic { mass } => {
                let f = -(x[1].recip() * (2.0 * mass)) + 1.0;
                spherical_static(&mut g, f, x);
            }
            Self::ReissnerNordstrom { mass, charge } => {
                let f = rn_f(x[1], mass, charge);
                spherical_static(&mut g, f, x);
            }
            Self::Roberts { sigma } => {
                let s = 1.0 + 2.0 * sigma;
                let (t, r) = (x[0], x[1]);
                let v = t + r / s;
                let area = r * (r - v * (2.0 * sigma));
                if !(area.value() > 0.0) || !(r.value() > 0.0) {
                    return Err(Error::ChartInvalid(format!(
                        "Roberts areal factor {} not positive",
                        area.value()
                    )));
                }
                g[0][0] = R::cst(-s);
                g[1][1] = R::cst(1.0 / s);
                g[2][2] = area;
                g[3][3] = area * x[2].sin().sq();
            }
            Self::KerrBL { mass, spin } => {
                let (r, th) = (x[1], x[2]);
                let a2 = spin * spin;
                let s2 = th.sin().sq();
                let sigma = r.sq() + th.cos().sq() * a2;
                let delta = r.sq() - r * (2.0 * mass) + a2;
                let lead = r.sq() + a2;
                if !(delta.value() > 0.0) {
                    return Err(Error::ChartInvalid(format!(
                        "Delta = {} inside the horizon",
                        delta.value()
                    )));
                }
                g[0][0] = -((delta - s2 * a2) / sigma);
                g[0][3] = -(s2 * (lead - delta) * spin / sigma);
                g[3][0] = g[0][3];
                g[1][1] = sigma / delta;
                g[2][2] = sigma;
                g[3][3] = (lead.sq() - delta * s2 * a2) / sigma * s2;
            }
        }
        Ok(g)
    }
}

fn spherical_static<R: Real>(g: &mut M4<R>, f: R, x: &[R; 4]) {
    g[0][0] = -f;
    g[1][1] = f.recip();
    g[2][2] = x[1].sq();
    g[3][3] = x[1].sq() * x[2].sin().sq();
}

/// `ω ↦ (−ω¹ ln ω⁰, h⁻¹(ω¹), ω², ω³)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalChart {
    pub h: RadialCompactifier,
}

impl SphericalChart {
    pub fn radius<R: Real>(&self, w1: R) -> Result<R> {
        let r0 = self.h.inverse(w1.value())?;
        let d = self.h.dh(r0)?;
        Ok(w1.chain(r0, 1.0 / d))
    }
}

impl Chart for SphericalChart {
    fn to_x<R: Real>(&self, w: &[R; 4]) -> Result<[R; 4]> {
        Ok([-(w[1] * w[0].ln()), self.radius(w[1])?, w[2], w[3]])
    }

    fn jacobian<R: Real>(&self, w: &[R; 4]) -> Result<M4<R>> {
        let r = self.radius(w[1])?;
        let mut j = zero4::<R>();
        j[0][0] = -(w[1] / w[0]);
        j[0][1] = -w[0].ln();
        j[1][1] = self.h.dh(r)?.recip();
        j[2][2] = R::cst(1.0);
        j[3][3] = R::cst(1.0);
        Ok(j)
    }
}

#[derive(Debug, Clone)]
pub enum EntryChart {
    Spherical(SphericalChart),
    Cartesian(ChartMap),
}

impl Chart for EntryChart {
    fn to_x<R: Real>(&self, w: &[R; 4]) -> Result<[R; 4]> {
        match self {
            Self::Spherical(c) => c.to_x(w),
            Self::Cartesian(c) => c.to_x(w),
        }
    }
    fn jacobian<R: Real>(&self, w: &[R; 4]) -> Result<M4<R>> {
        match self {
            Self::Spherical(c) => c.jacobian(w),
            Self::Cartesian(c) => c.jacobian(w),
        }
    }
}

/// How an entry's `h = (ω¹)²g` is assembled in ω-coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OmegaMetric {
    /// Chain-rule pullback of the native metric.
    Pullback,
    /// The Schwarzschild chart metric as printed for `(ω⁰, ω¹, θ, φ)`.
    SchwarzschildPrinted { mass: f64 },
    /// The ω⁰-independent metric obtained on the horizon.
    SchwarzschildStationary { mass: f64 },
}

/// Schwarzschild chart metric `g` (not yet scaled by `(ω¹)²`).
pub fn schwarzschild_printed_g<R: Real>(w: &[R; 4], mass: f64) -> M4<R> {
    let t = w[1].tan();
    let e = (-t).exp();
    let d = -(-t).expm1();
    let ell = w[0].ln();
    let c = (t.sq() + 1.0) * (4.0 * mass * mass) / d.sq();
    let r2 = d.sq().recip() * (4.0 * mass * mass);
    let mut g = zero4::<R>();
    g[0][0] = -(e * (w[1] / w[0]).sq());
    g[0][1] = -(e * w[1] * ell / w[0]);
    g[1][0] = g[0][1];
    g[1][1] = e * (c - ell.sq());
    g[2][2] = r2;
    g[3][3] = r2 * w[2].sin().sq();
    g
}

/// Stationary approach metric on the Schwarzschild horizon.
pub fn schwarzschild_stationary_g<R: Real>(w: &[R; 4], mass: f64) -> M4<R> {
    let t = w[1].tan();
    let d = -(-t).expm1();
    let b = (t.sq() + 1.0).sqrt() / d;
    let mut g = zero4::<R>();
    g[0][0] = -(w[1].sq() * (-t + b * (4.0 * mass)).exp());
    g[0][1] = w[1] * b * (2.0 * mass) * (-t + b * (2.0 * mass)).exp();
    g[1][0] = g[0][1];
    let r2 = d.sq().recip() * (4.0 * mass * mass);
    g[2][2] = r2;
    g[3][3] = r2 * w[2].sin().sq();
    g
}
