use std::cell::RefCell;
use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix4, SymmetricEigen, Vector5};
use ode_solvers::{Dopri5, System};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dm_dt_closed_form, extrinsic_curvature, horizon_root, mass_catalog, DTOL};
use crate::compactification::Chart;
use crate::error::{Error, Result};
use crate::exact_solutions::CatalogEntry;
use crate::tensor_core::value4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub omega: [f64; 4],
    pub tr_k: f64,
    pub k_grad: f64,
    /// `trK < 0` and `K(dω¹, dω¹) ≥ 0`
    pub strict: bool,
    /// `∂m/∂ω⁰ < 0` from the curvature form of the derivative.
    pub general: bool,
    pub dm_dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub samples: Vec<CurvatureSample>,
    pub strict_fraction: f64,
    pub general_fraction: f64,
    pub all_strict: bool,
    pub all_general: bool,
}

/// Sign conditions on the extrinsic curvature at each sample.
pub fn curvature_conditions(entry: &CatalogEntry, samples: &[[f64; 4]]) -> Result<CurvatureReport> {
    let out: Vec<CurvatureSample> = samples
        .par_iter()
        .map(|w| {
            let x = entry.chart.to_x(w)?;
            let k = extrinsic_curvature(entry, &x)?;
            let dm_dt = dm_dt_closed_form(entry, w)?;
            Ok(CurvatureSample {
                omega: *w,
                tr_k: k.tr_k,
                k_grad: k.k_grad,
                strict: k.tr_k < 0.0 && k.k_grad >= 0.0,
                general: dm_dt < 0.0,
                dm_dt,
            })
        })
        .collect::<Result<_>>()?;
    let n = out.len().max(1) as f64;
    let strict = out.iter().filter(|s| s.strict).count();
    let general = out.iter().filter(|s| s.general).count();
    Ok(CurvatureReport {
        strict_fraction: strict as f64 / n,
        general_fraction: general as f64 / n,
        all_strict: strict == out.len(),
        all_general: general == out.len(),
        samples: out,
    })
}

/// `∇ₓm = Z⁰∂₀m − Σᵢ Zⁱ∂ᵢm`
pub fn x_derivative(z: &[f64; 4], grad: &[f64; 4]) -> f64 {
    z[0] * grad[0] - (1..4).map(|i| z[i] * grad[i]).sum::<f64>()
}

/// `(2Z⁰∂₀ − Z^α∂_α)m`
fn x_derivative_alt(z: &[f64; 4], grad: &[f64; 4]) -> f64 {
    2.0 * z[0] * grad[0] - (0..4).map(|a| z[a] * grad[a]).sum::<f64>()
}

fn quad(h: &[[f64; 4]; 4], z: &[f64; 4]) -> (f64, f64) {
    let mut v = 0.0;
    let mut scale = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let t = h[a][b] * z[a] * z[b];
            v += t;
            scale += t.abs();
        }
    }
    (v, scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub omega: [f64; 4],
    /// Smallest `∇ₓm` over the tested causal vectors.
    pub value: f64,
    pub z: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub samples: Vec<EnergySample>,
    pub minimum: f64,
    pub all_nonnegative: bool,
    /// Nonnegative minimum together with `∂m/∂ω⁰ < 0` from the curvature form;
    /// `None` outside temporal gauge.
    pub black_hole: Option<bool>,
}

pub type VectorField<'a> = &'a (dyn Fn(&[f64; 4]) -> [f64; 4] + Sync);

/// Future-directed causal vectors spanning the cone of `h`: the timelike
/// eigendirection plus spatial tilts of ratio `β`.
fn cone_vectors(h: &[[f64; 4]; 4], betas: &[f64]) -> Result<Vec<[f64; 4]>> {
    let m = Matrix4::from_fn(|i, j| h[i][j]);
    let eig = SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..4).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (t, space) = (idx[0], [idx[1], idx[2], idx[3]]);
    if !(eig.eigenvalues[t] < 0.0) || space.iter().any(|&i| !(eig.eigenvalues[i] > 0.0)) {
        return Err(Error::InvalidParameter(
            "h is not Lorentzian at the sample".into(),
        ));
    }
    let unit = |i: usize| -> [f64; 4] {
        let s = eig.eigenvalues[i].abs().sqrt();
        std::array::from_fn(|k| eig.eigenvectors[(k, i)] / s)
    };
    let e0 = unit(t);
    let es = space.map(unit);
    let mut dirs: Vec<[f64; 3]> = Vec::new();
    for a in 0..3 {
        for sgn in [1.0, -1.0] {
            let mut n = [0.0; 3];
            n[a] = sgn;
            dirs.push(n);
        }
    }
    let c = 1.0 / 3f64.sqrt();
    for s0 in [1.0, -1.0] {
        for s1 in [1.0, -1.0] {
            for s2 in [1.0, -1.0] {
                dirs.push([s0 * c, s1 * c, s2 * c]);
            }
        }
    }
    let mut out = Vec::new();
    for &beta in betas {
        let ds: &[[f64; 3]] = if beta == 0.0 { &dirs[..1] } else { &dirs };
        for n in ds {
            let mut z: [f64; 4] = std::array::from_fn(|k| {
                e0[k] + beta * (0..3).map(|i| n[i] * es[i][k]).sum::<f64>()
            });
            if z[0] > 0.0 {
                z = z.map(|v| -v);
            }
            out.push(z);
        }
    }
    Ok(out)
}

const CONE_BETAS: [f64; 3] = [0.0, 0.5, 1.0];

/// `∇ₓm` over causal vectors at each sample: the supplied field, or a sweep of
/// the causal cone when `z` is `None`.
pub fn energy_condition(
    entry: &CatalogEntry,
    samples: &[[f64; 4]],
    z: Option<VectorField<'_>>,
) -> Result<EnergyReport> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    let out: Vec<EnergySample> = samples
        .par_iter()
        .map(|w| {
            let h = value4(&entry.h_omega(w)?);
            let grad = mass_catalog(entry, w)?.grad;
            let zs = match z {
                Some(f) => {
                    let zz = f(w);
                    let (v, scale) = quad(&h, &zz);
                    if v > 1e-12 * scale {
                        return Err(Error::NonCausalZ { hzz: v });
                    }
                    vec![zz]
                }
                None => cone_vectors(&h, &CONE_BETAS)?,
            };
            let mut best = EnergySample {
                omega: *w,
                value: f64::INFINITY,
                z: zs[0],
            };
            for zz in zs {
                let v = x_derivative(&zz, &grad);
                if v < best.value {
                    best.value = v;
                    best.z = zz;
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let minimum = out.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
    let all_nonnegative = minimum >= 0.0;
    let black_hole = if entry.is_temporal_gauge() {
        Some(all_nonnegative && curvature_conditions(entry, samples)?.all_general)
    } else {
        None
    };
    Ok(EnergyReport {
        samples: out,
        minimum,
        all_nonnegative,
        black_hole,
    })
}

/// Integral curve `dω/ds = Z(ω)` through `start`.
#[derive(Clone, Copy)]
pub struct Curve<'a> {
    pub start: [f64; 4],
    pub tangent: VectorField<'a>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StayConfig {
    pub s_max: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Output grid size on `[0, s_max]`.
    pub samples: usize,
}

impl Default for StayConfig {
    fn default() -> Self {
        Self {
            s_max: 10.0,
            rtol: 1e-8,
            atol: 1e-12,
            samples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StayReport {
    pub stays: bool,
    /// First `s` with `margin(s) = 0`.
    pub exit_s: Option<f64>,
    /// `ω⁰₀ − X̃(ωⁱ₀)`
    pub margin0: f64,
    /// `(s, margin(s))`
    pub margin: Vec<(f64, f64)>,
    /// Largest gap between the two expressions of `∇ₓm` seen along the curve.
    pub identity_max: f64,
}

fn entry_theta(entry: &CatalogEntry, w: &[f64; 4]) -> f64 {
    if entry.is_temporal_gauge() {
        FRAC_PI_2
    } else {
        w[2]
    }
}

/// `X̃(ωⁱ)`
fn horizon_height(entry: &CatalogEntry, w: &[f64; 4]) -> Result<f64> {
    let rad = entry.radial(w[1])?;
    let x = horizon_root(entry, &rad, entry_theta(entry, w))?.exp();
    if !(x > 0.0) {
        return Err(Error::OutOfRange(format!(
            "horizon height underflows at omega1 = {}",
            w[1]
        )));
    }
    Ok(x)
}

type State = Vector5<f64>;

struct StaySystem<'a> {
    entry: &'a CatalogEntry,
    tangent: VectorField<'a>,
    failure: &'a RefCell<Option<Error>>,
    identity: &'a RefCell<f64>,
}

impl StaySystem<'_> {
    fn integrand(&self, w: &[f64; 4], z: &[f64; 4]) -> Result<f64> {
        let x = horizon_height(self.entry, w)?;
        let s = mass_catalog(self.entry, &[x, w[1], w[2], w[3]])?;
        let norm = s.grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if s.grad[0] >= -DTOL * norm {
            return Err(Error::HypothesisViolated(format!(
                "dm/domega0 = {:e} on the horizon at omega1 = {}",
                s.grad[0], w[1]
            )));
        }
        let a = x_derivative(z, &s.grad);
        let b = x_derivative_alt(z, &s.grad);
        let scale =
            (z[0] * s.grad[0]).abs() + (1..4).map(|i| (z[i] * s.grad[i]).abs()).sum::<f64>();
        let mut id = self.identity.borrow_mut();
        *id = id.max((a - b).abs() / scale.max(f64::MIN_POSITIVE));
        Ok(a / s.grad[0])
    }
}

impl System<f64, State> for StaySystem<'_> {
    fn system(&self, _s: f64, y: &State, dy: &mut State) {
        let w = [y[0], y[1], y[2], y[3]];
        let z = (self.tangent)(&w);
        for k in 0..4 {
            dy[k] = z[k];
        }
        dy[4] = match self.integrand(&w, &z) {
            Ok(v) => v,
            Err(e) => {
                self.failure.borrow_mut().get_or_insert(e);
                0.0
            }
        };
    }
}

fn integrate(
    entry: &CatalogEntry,
    curve: &Curve<'_>,
    y0: State,
    s0: f64,
    s1: f64,
    dx: f64,
    cfg: &StayConfig,
) -> Result<(Vec<f64>, Vec<State>, f64)> {
    let failure = RefCell::new(None);
    let identity = RefCell::new(0.0);
    let sys = StaySystem {
        entry,
        tangent: curve.tangent,
        failure: &failure,
        identity: &identity,
    };
    let mut solver = Dopri5::new(sys, s0, s1, dx, y0, cfg.rtol, cfg.atol);
    let run = solver.integrate();
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    run.map_err(|e| Error::NonConvergent(format!("stay quadrature: {e}")))?;
    let xs = solver.x_out().clone();
    let ys = solver.y_out().clone();
    let id = *identity.borrow();
    Ok((xs, ys, id))
}

/// Tracks `margin(s) = ω⁰₀ − X̃(ωⁱ₀) + ∫₀ˢ ∇ₓm/∂₀m dτ` along the curve, with
/// the integrand evaluated on the horizon above `ωⁱ(τ)`.
pub fn stay_criterion(
    entry: &CatalogEntry,
    curve: &Curve<'_>,
    cfg: &StayConfig,
) -> Result<StayReport> {
    if !(cfg.s_max > 0.0) || cfg.samples == 0 {
        return Err(Error::InvalidParameter(
            "s_max and samples must be positive".into(),
        ));
    }
    let w0 = curve.start;
    let x0 = horizon_height(entry, &w0)?;
    let margin0 = w0[0] - x0;
    if !(margin0 < 0.0) {
        return Err(Error::HypothesisViolated(format!(
            "curve starts outside the horizon interior (margin {margin0:e})"
        )));
    }
    let y0 = State::new(w0[0], w0[1], w0[2], w0[3], 0.0);
    let dx = cfg.s_max / cfg.samples as f64;
    let (xs, ys, identity_max) = integrate(entry, curve, y0, 0.0, cfg.s_max, dx, cfg)?;
    let margin: Vec<(f64, f64)> = xs
        .iter()
        .zip(&ys)
        .map(|(s, y)| (*s, margin0 + y[4]))
        .collect();
    let Some(k) = margin.iter().position(|&(_, m)| m >= 0.0) else {
        return Ok(StayReport {
            stays: true,
            exit_s: None,
            margin0,
            margin,
            identity_max,
        });
    };
    let (mut lo, mut hi) = (margin[k - 1].0, margin[k].0);
    let y_lo = ys[k - 1];
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (_, yy, _) = integrate(
            entry,
            curve,
            y_lo,
            margin[k - 1].0,
            mid,
            mid - margin[k - 1].0,
            cfg,
        )?;
        let m = margin0 + yy.last().map_or(y_lo[4], |y| y[4]);
        if m >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(StayReport {
        stays: false,
        exit_s: Some(0.5 * (lo + hi)),
        margin0,
        margin,
        identity_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_solutions::{default_synthetic, make_schwarzschild};

    #[test]
    fn unit_time_curve_exits_at_horizon_gap() {
        let e = make_schwarzschild(1.0).unwrap();
        let w1 = 0.8;
        let x = horizon_height(&e, &[1.0, w1, 1.0, 0.4]).unwrap();
        let start = [0.5 * x, w1, 1.0, 0.4];
        let z = |_: &[f64; 4]| [1.0, 0.0, 0.0, 0.0];
        let curve = Curve { start, tangent: &z };
        let cfg = StayConfig {
            s_max: 2.0 * x,
            ..StayConfig::default()
        };
        let r = stay_criterion(&e, &curve, &cfg).unwrap();
        assert!(!r.stays);
        assert!((r.exit_s.unwrap() - 0.5 * x).abs() < 1e-9);
        assert!(r.identity_max < 1e-14);
    }

    #[test]
    fn synthetic_conditions_and_cone() {
        let e = default_synthetic();
        let samples = [[0.4, 0.3, 0.3, -0.2], [0.8, 0.6, 0.3, -0.2]];
        let c = curvature_conditions(&e, &samples).unwrap();
        assert!(c.all_general);
        assert!(c.samples.iter().all(|s| s.tr_k < 0.0 && s.k_grad < 0.0));
        let rep = energy_condition(&e, &samples, None).unwrap();
        assert!(rep.minimum.is_finite());
        let spacelike = |_: &[f64; 4]| [0.0, 1.0, 0.0, 0.0];
        assert!(matches!(
            energy_condition(&e, &samples, Some(&spacelike)),
            Err(Error::NonCausalZ { .. })
        ));
    }
}
