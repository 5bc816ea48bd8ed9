use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bisect_newton, RootOptions};
use crate::tensor_core::Real;

/// User-supplied radial profile `Ω(r)` with derivative.
pub trait RadialProfile: Send + Sync {
    fn omega(&self, r: f64) -> f64;
    fn d_omega(&self, r: f64) -> f64;
}

/// User-supplied non-radial profile; forward evaluation only.
pub trait GeneralProfile: Send + Sync {
    fn omega(&self, x: &[f64; 3]) -> f64;
    fn grad(&self, x: &[f64; 3]) -> [f64; 3];
}

#[derive(Clone)]
pub enum ConformalFactor {
    ReciprocalR,
    ReciprocalR2,
    Gaussian { theta: f64, kappa: f64 },
    Rational { a: f64, b: f64, c: f64 },
    RadialCustom(Arc<dyn RadialProfile>),
    General(Arc<dyn GeneralProfile>),
}

impl fmt::Debug for ConformalFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ReciprocalR => write!(f, "ReciprocalR"),
            Self::ReciprocalR2 => write!(f, "ReciprocalR2"),
            Self::Gaussian { theta, kappa } => write!(f, "Gaussian({theta}, {kappa})"),
            Self::Rational { a, b, c } => write!(f, "Rational({a}, {b}, {c})"),
            Self::RadialCustom(_) => write!(f, "RadialCustom"),
            Self::General(_) => write!(f, "General"),
        }
    }
}

/// Serializable label for the built-in kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConformalKind {
    ReciprocalR,
    ReciprocalR2,
    Gaussian { theta: f64, kappa: f64 },
    Rational { a: f64, b: f64, c: f64 },
    Custom,
}

impl ConformalKind {
    pub fn to_factor(&self) -> Result<ConformalFactor> {
        Ok(match *self {
            Self::ReciprocalR => ConformalFactor::ReciprocalR,
            Self::ReciprocalR2 => ConformalFactor::ReciprocalR2,
            Self::Gaussian { theta, kappa } => ConformalFactor::Gaussian { theta, kappa },
            Self::Rational { a, b, c } => ConformalFactor::Rational { a, b, c },
            Self::Custom => {
                return Err(Error::InvalidParameter(
                    "custom conformal kinds need an explicit profile".into(),
                ))
            }
        })
    }
}

fn norm3(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

impl ConformalFactor {
    pub fn kind(&self) -> ConformalKind {
        match *self {
            Self::ReciprocalR => ConformalKind::ReciprocalR,
            Self::ReciprocalR2 => ConformalKind::ReciprocalR2,
            Self::Gaussian { theta, kappa } => ConformalKind::Gaussian { theta, kappa },
            Self::Rational { a, b, c } => ConformalKind::Rational { a, b, c },
            _ => ConformalKind::Custom,
        }
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self, Self::General(_))
    }

    /// `Ω(r)` for radial kinds.
    pub fn omega_r<R: Real>(&self, r: R) -> Result<R> {
        Ok(match self {
            Self::ReciprocalR => r.recip(),
            Self::ReciprocalR2 => r.sq().recip(),
            Self::Gaussian { theta, kappa } => (r * -*kappa).exp() * *theta,
            Self::Rational { a, b, c } => (r.sq() * *c + *b).recip() * *a,
            Self::RadialCustom(p) => {
                let v = r.value();
                r.chain(p.omega(v), p.d_omega(v))
            }
            Self::General(_) => {
                return Err(Error::NotInvertible(
                    "general conformal factor is not radial".into(),
                ))
            }
        })
    }

    /// `Ω′(r)` for radial kinds.
    pub fn d_omega_r<R: Real>(&self, r: R) -> Result<R> {
        Ok(match self {
            Self::ReciprocalR => -r.sq().recip(),
            Self::ReciprocalR2 => -(r.powi(3).recip() * 2.0),
            Self::Gaussian { theta, kappa } => (r * -*kappa).exp() * (-*theta * *kappa),
            Self::Rational { a, b, c } => {
                let d = r.sq() * *c + *b;
                -(r * (2.0 * *a * *c)) / d.sq()
            }
            Self::RadialCustom(p) => {
                let v = r.value();
                let h = 1e-6 * v.abs().max(1.0);
                let second = (p.d_omega(v + h) - p.d_omega(v - h)) / (2.0 * h);
                r.chain(p.d_omega(v), second)
            }
            Self::General(_) => {
                return Err(Error::NotInvertible(
                    "general conformal factor is not radial".into(),
                ))
            }
        })
    }

    pub fn omega(&self, x: &[f64; 3]) -> f64 {
        match self {
            Self::General(p) => p.omega(x),
            _ => self.omega_r(norm3(x)).unwrap_or(f64::NAN),
        }
    }

    pub fn grad(&self, x: &[f64; 3]) -> [f64; 3] {
        match self {
            Self::General(p) => p.grad(x),
            _ => {
                let r = norm3(x);
                let d = self.d_omega_r(r).unwrap_or(f64::NAN);
                std::array::from_fn(|i| d * x[i] / r)
            }
        }
    }

    /// Closed-form `r = Ω⁻¹(w)` where available, otherwise bracketed bisection
    /// on `[r_lo, r_hi]` with a Newton polish.
    pub fn inverse_r(&self, w: f64) -> Result<f64> {
        if !(w > 0.0) {
            return Err(Error::OutOfRange(format!("omega1 = {w} must be positive")));
        }
        let r = match *self {
            Self::ReciprocalR => 1.0 / w,
            Self::ReciprocalR2 => w.sqrt().recip(),
            Self::Gaussian { theta, kappa } => {
                if w > theta {
                    return Err(Error::OutOfRange(format!(
                        "omega1 = {w} above Gaussian peak {theta}"
                    )));
                }
                (theta / w).ln() / kappa
            }
            Self::Rational { a, b, c } => {
                let s = (a / w - b) / c;
                if s < 0.0 {
                    return Err(Error::OutOfRange(format!(
                        "omega1 = {w} above rational peak"
                    )));
                }
                s.sqrt()
            }
            Self::RadialCustom(ref p) => return invert_custom(p.as_ref(), w),
            Self::General(_) => {
                return Err(Error::NotInvertible(
                    "general conformal factor is not radial".into(),
                ))
            }
        };
        Ok(r)
    }

    /// `Δ* = 1 − Σ zⁱ ∂Ω/∂xⁱ` with `z = x/Ω`.
    pub fn delta_star(&self, x: &[f64; 3]) -> f64 {
        let om = self.omega(x);
        let g = self.grad(x);
        1.0 - (0..3).map(|i| x[i] / om * g[i]).sum::<f64>()
    }
}

fn invert_custom(p: &dyn RadialProfile, w: f64) -> Result<f64> {
    let f = |r: f64| Ok(p.omega(r) - w);
    let mut lo = 1e-12;
    let mut hi = 1.0;
    let mut expand = 0;
    while f(hi)? > 0.0 {
        hi *= 2.0;
        expand += 1;
        if expand > 2000 || !hi.is_finite() {
            return Err(Error::NotInvertible(format!("no bracket for omega1 = {w}")));
        }
    }
    while f(lo)? < 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::NotInvertible(format!("no bracket for omega1 = {w}")));
        }
    }
    // A monotone profile changes sign once; check the bracket midpoint too.
    let probe = 0.5 * (lo + hi);
    if p.d_omega(lo) * p.d_omega(probe) < 0.0 || p.d_omega(probe) * p.d_omega(hi) < 0.0 {
        return Err(Error::NotInvertible(
            "profile is not monotone on the bracket".into(),
        ));
    }
    let df = |r: f64| Ok(p.d_omega(r));
    bisect_newton(
        f,
        Some(&df),
        lo,
        hi,
        &RootOptions {
            xtol: 1e-12,
            max_iter: 400,
        },
    )
}

/// `Ω` together with the band `(0, Ω_max]` the chart uses.
#[derive(Debug, Clone)]
pub struct ConformalSpec {
    pub factor: ConformalFactor,
    pub omega_max: f64,
}

impl ConformalSpec {
    pub fn new(factor: ConformalFactor, omega_max: f64) -> Result<Self> {
        if !(omega_max > 0.0) || !omega_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "omega_max = {omega_max} must be positive"
            )));
        }
        Ok(Self { factor, omega_max })
    }

    /// Smallest radius the band admits.
    pub fn r_min(&self) -> Result<f64> {
        self.factor.inverse_r(self.omega_max)
    }
}
