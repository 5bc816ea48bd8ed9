//! The rescaling `z = x/Ω`, the compactified chart
//! `ω = (e^{−x⁰/Ω}, Ω, arctan(xᵃ/Ω))`, and transport of metrics and covectors
//! between the two.

mod factor;

pub use factor::{ConformalFactor, ConformalKind, ConformalSpec, GeneralProfile, RadialProfile};

use nalgebra::{DMatrix, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_core::{congruence, scale4, zero4, Real, M4};

/// Threshold below which `|Δ*|` flags a coordinate singularity.
pub const DELTA_STAR_SINGULAR: f64 = 1e-10;

/// A point of the compactified chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactPoint {
    pub w: [f64; 4],
}

impl CompactPoint {
    pub fn new(w: [f64; 4]) -> Self {
        Self { w }
    }

    pub fn ell(&self) -> f64 {
        self.w[0].ln()
    }

    /// Strict interior check against `(0,1] × (0, Ω_max] × (−π/2, π/2)²`.
    pub fn check_interior(&self, omega_max: f64) -> Result<()> {
        let w = &self.w;
        let half = std::f64::consts::FRAC_PI_2;
        if !(w[0] > 0.0 && w[0] <= 1.0) {
            return Err(Error::OutOfRange(format!(
                "omega0 = {} outside (0, 1]",
                w[0]
            )));
        }
        if !(w[1] > 0.0 && w[1] <= omega_max) {
            return Err(Error::OutOfRange(format!(
                "omega1 = {} outside (0, {omega_max}]",
                w[1]
            )));
        }
        for (a, v) in w.iter().enumerate().skip(2) {
            if !(v.abs() < half) {
                return Err(Error::OutOfRange(format!(
                    "omega{a} = {v} outside (-pi/2, pi/2)"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Patch {
    Plus,
    Minus,
}

impl Patch {
    pub fn sign(self) -> f64 {
        match self {
            Patch::Plus => 1.0,
            Patch::Minus => -1.0,
        }
    }
}

/// The compactification on one `sign(x¹)` patch.
#[derive(Debug, Clone)]
pub struct ChartMap {
    pub conformal: ConformalSpec,
    pub patch: Patch,
}

/// Component basis for pulled-back tensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// `(dω⁰, dω¹, dωᵃ)`
    Coordinate,
    /// `(dω⁰/ω⁰, dω¹/ω¹, dωᵃ)`
    Logarithmic,
}

/// A metric evaluable at `x` over any [`Real`].
pub trait MetricField: Sync {
    fn metric<R: Real>(&self, x: &[R; 4]) -> Result<M4<R>>;
}

/// A chart `ω ↦ x` with its Jacobian `J[α][μ] = ∂xᵅ/∂ωᵘ`.
pub trait Chart: Sync {
    fn to_x<R: Real>(&self, w: &[R; 4]) -> Result<[R; 4]>;
    fn jacobian<R: Real>(&self, w: &[R; 4]) -> Result<M4<R>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Minkowski;

impl MetricField for Minkowski {
    fn metric<R: Real>(&self, _x: &[R; 4]) -> Result<M4<R>> {
        let mut g = zero4::<R>();
        g[0][0] = R::cst(-1.0);
        for (i, row) in g.iter_mut().enumerate().skip(1) {
            row[i] = R::cst(1.0);
        }
        Ok(g)
    }
}

/// `Φ̂(x)`; requires `x⁰ ≥ 0` and `Ω(x) ∈ (0, Ω_max]`.
pub fn forward(x: &[f64; 4], c: &ConformalSpec) -> Result<CompactPoint> {
    if !(x[0] >= 0.0) {
        return Err(Error::OutOfRange(format!(
            "x0 = {} must be non-negative",
            x[0]
        )));
    }
    let om = c.factor.omega(&[x[1], x[2], x[3]]);
    if !(om > 0.0 && om <= c.omega_max * (1.0 + 1e-12)) {
        return Err(Error::OutOfRange(format!(
            "Omega = {om} outside (0, {}]",
            c.omega_max
        )));
    }
    Ok(CompactPoint::new([
        (-x[0] / om).exp(),
        om,
        (x[2] / om).atan(),
        (x[3] / om).atan(),
    ]))
}

/// Inverse of [`forward`] on the chart's patch.
pub fn inverse(w: &CompactPoint, map: &ChartMap) -> Result<[f64; 4]> {
    map.to_x(&w.w)
}

impl ChartMap {
    pub fn new(conformal: ConformalSpec, patch: Patch) -> Self {
        Self { conformal, patch }
    }

    fn radius<R: Real>(&self, w1: R) -> Result<R> {
        let r0 = self.conformal.factor.inverse_r(w1.value())?;
        let d = self.conformal.factor.d_omega_r(r0)?;
        if d == 0.0 {
            return Err(Error::NotInvertible(format!("Omega'(r) = 0 at r = {r0}")));
        }
        Ok(w1.chain(r0, 1.0 / d))
    }
}

impl Chart for ChartMap {
    fn to_x<R: Real>(&self, w: &[R; 4]) -> Result<[R; 4]> {
        let r = self.radius(w[1])?;
        let x2 = w[1] * w[2].tan();
        let x3 = w[1] * w[3].tan();
        let rest = r.sq() - x2.sq() - x3.sq();
        if !(rest.value() > 0.0) {
            return Err(Error::PatchViolation {
                r2: r.sq().value(),
                s2: (x2.sq() + x3.sq()).value(),
            });
        }
        let x1 = rest.sqrt() * self.patch.sign();
        let x0 = -(w[1] * w[0].ln());
        Ok([x0, x1, x2, x3])
    }

    fn jacobian<R: Real>(&self, w: &[R; 4]) -> Result<M4<R>> {
        let x = self.to_x(w)?;
        let r = self.radius(w[1])?;
        let dr = self.conformal.factor.d_omega_r(r)?.recip();
        let mut j = zero4::<R>();
        j[0][0] = -(w[1] / w[0]);
        j[0][1] = -w[0].ln();
        let mut cross = R::cst(0.0);
        for a in 2..4 {
            let t = w[a].tan();
            let sec2 = t.sq() + 1.0;
            j[a][1] = t;
            j[a][a] = w[1] * sec2;
            cross = cross + x[a] * t;
            j[1][a] = -(x[a] * w[1] * sec2) / x[1];
        }
        j[1][1] = (r * dr - cross) / x[1];
        Ok(j)
    }
}

/// `h = (ω¹)² Jᵀ g J` in the requested basis.
pub fn pullback_metric<M: MetricField, C: Chart, R: Real>(
    g: &M,
    w: &[R; 4],
    chart: &C,
    basis: Basis,
) -> Result<M4<R>> {
    let x = chart.to_x(w)?;
    let j = chart.jacobian(w)?;
    let gx = g.metric(&x)?;
    let h = scale4(&congruence(&j, &gx), w[1].sq());
    Ok(match basis {
        Basis::Coordinate => h,
        Basis::Logarithmic => to_log_basis(&h, w),
    })
}

/// Rescale coordinate-basis components to `(dω⁰/ω⁰, dω¹/ω¹, dωᵃ)`.
pub fn to_log_basis<R: Real>(h: &M4<R>, w: &[R; 4]) -> M4<R> {
    let s = [w[0], w[1], R::cst(1.0), R::cst(1.0)];
    std::array::from_fn(|i| std::array::from_fn(|j| h[i][j] * s[i] * s[j]))
}

/// Recover `(ω¹)² g(x)` from a coordinate-basis `h` by inverting the chain rule.
pub fn pushforward_metric<C: Chart>(h: &M4<f64>, w: &[f64; 4], chart: &C) -> Result<M4<f64>> {
    let j = chart.jacobian(w)?;
    let jm = Matrix4::from_fn(|a, m| j[a][m]);
    let inv = jm.try_inverse().ok_or(Error::Singular { pivot: 0.0 })?;
    let hm = Matrix4::from_fn(|a, b| h[a][b]);
    let out = inv.transpose() * hm * inv;
    Ok(std::array::from_fn(|a| {
        std::array::from_fn(|b| out[(a, b)])
    }))
}

/// Covector components `ξ_α dxᵅ` expressed in the logarithmic basis.
pub fn transform_covector<C: Chart>(
    xi: &[f64; 4],
    w: &CompactPoint,
    chart: &C,
) -> Result<[f64; 4]> {
    let j = chart.jacobian(&w.w)?;
    let s = [w.w[0], w.w[1], 1.0, 1.0];
    Ok(std::array::from_fn(|mu| {
        s[mu] * (0..4).map(|a| xi[a] * j[a][mu]).sum::<f64>()
    }))
}

/// Vector components `vᵅ ∂/∂xᵅ` expressed in the frame dual to the
/// logarithmic basis, `(ω⁰∂₀, ω¹∂₁, ∂ₐ)`.
pub fn transform_vector<C: Chart>(v: &[f64; 4], w: &CompactPoint, chart: &C) -> Result<[f64; 4]> {
    let j = chart.jacobian(&w.w)?;
    let s = [w.w[0], w.w[1], 1.0, 1.0];
    let jb = Matrix4::from_fn(|a, mu| j[a][mu] * s[mu]);
    let sol = jb
        .lu()
        .solve(&Vector4::from_column_slice(v))
        .ok_or(Error::Singular { pivot: 0.0 })?;
    Ok([sol[0], sol[1], sol[2], sol[3]])
}

/// `z = x/Ω` on every component.
pub fn rescale(x: &[f64; 4], c: &ConformalSpec) -> [f64; 4] {
    let om = c.factor.omega(&[x[1], x[2], x[3]]);
    x.map(|v| v / om)
}

/// `∂zᵅ/∂xᵝ` of [`rescale`].
pub fn rescaling_jacobian(x: &[f64; 4], c: &ConformalSpec) -> DMatrix<f64> {
    let s = [x[1], x[2], x[3]];
    let om = c.factor.omega(&s);
    let g = c.factor.grad(&s);
    let grad4 = [0.0, g[0], g[1], g[2]];
    DMatrix::from_fn(4, 4, |a, b| {
        let id = if a == b { 1.0 } else { 0.0 };
        id / om - x[a] * grad4[b] / (om * om)
    })
}

/// Analytic inverse of the spatial block: `Ω(Δ* I + z ∇Ωᵀ)/Δ*`.
pub fn rescaling_inverse_spatial(x: &[f64; 3], c: &ConformalSpec) -> Result<DMatrix<f64>> {
    let om = c.factor.omega(x);
    let g = c.factor.grad(x);
    let ds = c.factor.delta_star(x);
    if ds.abs() < DELTA_STAR_SINGULAR {
        return Err(Error::Singular { pivot: ds });
    }
    Ok(DMatrix::from_fn(3, 3, |s, i| {
        let id = if s == i { ds } else { 0.0 };
        om * (id + x[s] / om * g[i]) / ds
    }))
}

/// `Δ*` together with the coordinate-singularity flag.
pub fn delta_star(x: &[f64; 3], c: &ConformalSpec) -> (f64, bool) {
    let d = c.factor.delta_star(x);
    (d, d.abs() < DELTA_STAR_SINGULAR)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv_r() -> ConformalSpec {
        ConformalSpec::new(ConformalFactor::ReciprocalR, 1.0).unwrap()
    }

    #[test]
    fn forward_example() {
        let w = forward(&[1.0, 3.0, 4.0, 0.0], &inv_r()).unwrap();
        assert!((w.w[0] - (-5f64).exp()).abs() < 1e-15);
        assert!((w.w[1] - 0.2).abs() < 1e-15);
        assert!((w.w[2] - 20f64.atan()).abs() < 1e-15);
        assert_eq!(w.w[3], 0.0);
    }

    #[test]
    fn forward_rejects_negative_time() {
        assert!(matches!(
            forward(&[-1.0, 3.0, 4.0, 0.0], &inv_r()),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn inverse_example() {
        let map = ChartMap::new(inv_r(), Patch::Plus);
        let w = CompactPoint::new([(-5f64).exp(), 0.2, 20f64.atan(), 0.0]);
        let x = inverse(&w, &map).unwrap();
        for (a, b) in x.iter().zip([1.0, 3.0, 4.0, 0.0]) {
            assert!((a - b).abs() < 1e-12, "{x:?}");
        }
    }

    #[test]
    fn patch_violation() {
        let map = ChartMap::new(inv_r(), Patch::Plus);
        let w = CompactPoint::new([0.5, 0.2, 1.55, 1.55]);
        assert!(matches!(
            inverse(&w, &map),
            Err(Error::PatchViolation { .. })
        ));
    }

    #[test]
    fn jacobian_and_delta_star_for_reciprocal_r() {
        let c = inv_r();
        let x = [0.7, 1.0, 2.0, 2.0];
        let (d, flag) = delta_star(&[1.0, 2.0, 2.0], &c);
        assert!((d - 2.0).abs() < 1e-14 && !flag);
        let det = rescaling_jacobian(&x, &c).determinant();
        let om: f64 = 1.0 / 3.0;
        assert!((det - om.powi(-4) * 2.0).abs() < 1e-10 * det.abs());
    }

    #[test]
    fn minkowski_pullback_basis_scaling() {
        let map = ChartMap::new(inv_r(), Patch::Plus);
        let w = [0.4, 0.3, 0.2, -0.1];
        let h = pullback_metric(&Minkowski, &w, &map, Basis::Coordinate).unwrap();
        let hb = pullback_metric(&Minkowski, &w, &map, Basis::Logarithmic).unwrap();
        assert!((hb[0][0] - w[0] * w[0] * h[0][0]).abs() < 1e-12 * h[0][0].abs());
        assert!((hb[0][1] - w[0] * w[1] * h[0][1]).abs() < 1e-12 * h[0][1].abs().max(1.0));
    }
}
