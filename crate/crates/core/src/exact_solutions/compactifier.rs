use std::f64::consts::{E, FRAC_PI_2};

use serde::{Deserialize, Serialize};

use crate::compactification::ConformalKind;
use crate::error::{Error, Result};
use crate::tensor_core::Real;

/// `F(r) = 1 − 2M/r + Q²/r²`, factored through its roots when they are real.
pub fn rn_f<R: Real>(r: R, mass: f64, charge: f64) -> R {
    let disc = mass * mass - charge * charge;
    if disc >= 0.0 {
        let rp = mass + disc.sqrt();
        let rm = if rp > 0.0 { charge * charge / rp } else { 0.0 };
        (r - rp) * (r - rm) / r.sq()
    } else {
        ((r - mass).sq() - disc) / r.sq()
    }
}

pub fn rn_df<R: Real>(r: R, mass: f64, charge: f64) -> R {
    (r * mass - charge * charge) * 2.0 / r.powi(3)
}

/// Outer root of `F`, if any.
pub fn rn_outer_root(mass: f64, charge: f64) -> Option<f64> {
    let disc = mass * mass - charge * charge;
    (disc >= 0.0).then(|| mass + disc.sqrt())
}

/// `arctan e^{1/F} − arctan e` from `1/F`, split to avoid cancellation.
pub(crate) fn exp_inverse_f_h<R: Real>(inv_f: R) -> R {
    if inv_f.value() > 1.0 {
        R::cst((1.0 / E).atan()) - (-inv_f).exp().atan()
    } else {
        // atan A − atan e = atan((A − e)/(1 + eA)), A − e = e·expm1(1/F − 1)
        let a = inv_f.exp();
        ((inv_f - 1.0).expm1() * E / (a * E + 1.0)).atan()
    }
}

pub(crate) fn exp_inverse_f_dh<R: Real>(f: R, df: R) -> R {
    let e = (-f.recip()).exp();
    -(df * e) / (f.sq() * (e.sq() + 1.0))
}

/// Radial compactifier `ω¹ = h(r)`: bounded, monotone, `h(∞) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RadialCompactifier {
    /// `arctan(1/r)`
    ArctanInverse,
    /// `1/(1 + r)`
    InverseShift,
    /// `−arctan ln(1 − 2M/r)`
    SchwarzschildLog { mass: f64 },
    /// `arctan e^{1/F(r)} − arctan e`
    ExpInverseF { mass: f64, charge: f64 },
    /// `h = Ω(r)` for a built-in conformal factor.
    Conformal(ConformalKind),
}

impl RadialCompactifier {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ArctanInverse => "arctan-inverse",
            Self::InverseShift => "inverse-shift",
            Self::SchwarzschildLog { .. } => "schwarzschild-log",
            Self::ExpInverseF { .. } => "exp-inverse-f",
            Self::Conformal(_) => "conformal",
        }
    }

    /// Inner edge of the compactifier's own domain.
    pub fn natural_edge(&self) -> f64 {
        match *self {
            Self::ArctanInverse | Self::InverseShift | Self::Conformal(_) => 0.0,
            Self::SchwarzschildLog { mass } => 2.0 * mass,
            Self::ExpInverseF { mass, charge } => rn_outer_root(mass, charge).unwrap_or(0.0),
        }
    }

    pub fn h<R: Real>(&self, r: R) -> Result<R> {
        Ok(match self {
            Self::ArctanInverse => r.recip().atan(),
            Self::InverseShift => (r + 1.0).recip(),
            Self::SchwarzschildLog { mass } => -(r.recip() * (-2.0 * mass)).ln_1p().atan(),
            Self::ExpInverseF { mass, charge } => exp_inverse_f_h(rn_f(r, *mass, *charge).recip()),
            Self::Conformal(k) => k.to_factor()?.omega_r(r)?,
        })
    }

    pub fn dh<R: Real>(&self, r: R) -> Result<R> {
        Ok(match self {
            Self::ArctanInverse => -(r.sq() + 1.0).recip(),
            Self::InverseShift => -(r + 1.0).sq().recip(),
            Self::SchwarzschildLog { mass } => {
                // h = −atan L, L = ln(1 − 2M/r), L′ = 2M/(r(r − 2M))
                let l = (r.recip() * (-2.0 * mass)).ln_1p();
                let dl = R::cst(2.0 * mass) / (r * (r - 2.0 * mass));
                -(dl / (l.sq() + 1.0))
            }
            Self::ExpInverseF { mass, charge } => {
                exp_inverse_f_dh(rn_f(r, *mass, *charge), rn_df(r, *mass, *charge))
            }
            Self::Conformal(k) => k.to_factor()?.d_omega_r(r)?,
        })
    }

    /// `h⁻¹(ω¹)`.
    pub fn inverse(&self, w1: f64) -> Result<f64> {
        if !(w1 > 0.0) {
            return Err(Error::OutOfRange(format!("omega1 = {w1} must be positive")));
        }
        match *self {
            Self::ArctanInverse => {
                if w1 >= FRAC_PI_2 {
                    return Err(Error::OutOfRange(format!("omega1 = {w1} >= pi/2")));
                }
                Ok(1.0 / w1.tan())
            }
            Self::InverseShift => {
                if w1 >= 1.0 {
                    return Err(Error::OutOfRange(format!("omega1 = {w1} >= 1")));
                }
                Ok(1.0 / w1 - 1.0)
            }
            Self::SchwarzschildLog { mass } => {
                if w1 >= FRAC_PI_2 {
                    return Err(Error::OutOfRange(format!("omega1 = {w1} >= pi/2")));
                }
                Ok(2.0 * mass / -(-w1.tan()).exp_m1())
            }
            Self::ExpInverseF { mass, charge } => {
                let gap = (1.0 / E).atan() - w1;
                if !(gap > 0.0) {
                    return Err(Error::OutOfRange(format!(
                        "omega1 = {w1} beyond the horizon image"
                    )));
                }
                let f = -1.0 / gap.tan().ln();
                let c = 1.0 - f;
                let disc = mass * mass - c * charge * charge;
                Ok((mass + disc.max(0.0).sqrt()) / c)
            }
            Self::Conformal(ref k) => k.to_factor()?.inverse_r(w1),
        }
    }

    /// `h(edge) − h(r)` evaluated without cancellation.
    pub fn gap(&self, r: f64, edge: f64) -> Result<f64> {
        Ok(match *self {
            Self::ArctanInverse => ((r - edge) / (r * edge + 1.0)).atan(),
            Self::InverseShift => (r - edge) / ((1.0 + r) * (1.0 + edge)),
            Self::SchwarzschildLog { mass } if edge == 2.0 * mass => {
                let l = (-2.0 * mass / r).ln_1p();
                (-1.0 / l).atan()
            }
            Self::ExpInverseF { mass, charge } if Some(edge) == rn_outer_root(mass, charge) => {
                let f: f64 = rn_f(r, mass, charge);
                (-1.0 / f).exp().atan()
            }
            _ => self.h(edge)? - self.h(r)?,
        })
    }

    /// `h` at the inner edge, as a limit where needed.
    pub fn edge_value(&self, edge: f64) -> Result<f64> {
        match *self {
            Self::ArctanInverse if edge == 0.0 => Ok(FRAC_PI_2),
            Self::SchwarzschildLog { mass } if edge == 2.0 * mass => Ok(FRAC_PI_2),
            Self::ExpInverseF { mass, charge } if Some(edge) == rn_outer_root(mass, charge) => {
                Ok((1.0 / E).atan())
            }
            _ => self.h(edge),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_core::Dual;

    fn all() -> Vec<(RadialCompactifier, f64)> {
        vec![
            (RadialCompactifier::ArctanInverse, 0.0),
            (RadialCompactifier::InverseShift, 0.0),
            (RadialCompactifier::SchwarzschildLog { mass: 1.0 }, 2.0),
            (
                RadialCompactifier::ExpInverseF {
                    mass: 2.0,
                    charge: 1.0,
                },
                2.0 + 3f64.sqrt(),
            ),
            (
                RadialCompactifier::ExpInverseF {
                    mass: 1.0,
                    charge: 1.0,
                },
                1.0,
            ),
            (
                RadialCompactifier::Conformal(ConformalKind::ReciprocalR),
                0.0,
            ),
        ]
    }

    #[test]
    fn derivative_matches_dual_of_h() {
        for (c, edge) in all() {
            for k in 1..20 {
                let r = edge + 0.05 * k as f64 * (1.0 + edge);
                let d = c.h(Dual::var(r)).unwrap().du;
                let a = c.dh(r).unwrap();
                assert!(
                    (d - a).abs() <= 1e-10 * a.abs().max(1e-300),
                    "{c:?} r={r}: {d} vs {a}"
                );
                assert!(a < 0.0);
            }
        }
    }

    #[test]
    fn inverse_round_trips() {
        for (c, edge) in all() {
            for k in 1..20 {
                let r = edge + 0.3 * k as f64;
                let w = c.h(r).unwrap();
                let back = c.inverse(w).unwrap();
                assert!((back - r).abs() < 1e-8 * r, "{c:?}: {r} -> {w} -> {back}");
            }
        }
    }

    #[test]
    fn gap_matches_difference() {
        for (c, edge) in all() {
            let r = edge + 0.7;
            let direct = c.edge_value(edge).unwrap() - c.h(r).unwrap();
            if !direct.is_finite() {
                continue;
            }
            let g = c.gap(r, edge).unwrap();
            assert!((g - direct).abs() < 1e-12, "{c:?}: {g} vs {direct}");
        }
    }

    #[test]
    fn decays_at_infinity() {
        for (c, _) in all() {
            assert!(c.h(1e9).unwrap().abs() < 1e-8, "{c:?}");
        }
    }

    #[test]
    fn rn_factored_form() {
        let f: f64 = rn_f(2.0 + 3f64.sqrt(), 2.0, 1.0);
        assert!(f.abs() < 1e-15);
        let g: f64 = rn_f(3.0, 1.0, 2.0);
        assert!((g - (1.0 - 2.0 / 3.0 + 4.0 / 9.0)).abs() < 1e-15);
    }
}
