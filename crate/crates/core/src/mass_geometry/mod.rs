//! The mass function `m = G(dω⁰/ω⁰, dω⁰/ω⁰)`, its time derivative, region
//! classification, horizons, naked-singularity scans and the curvature,
//! energy and stay criteria.

mod conditions;
mod horizon;
mod naked;

pub use conditions::{
    curvature_conditions, energy_condition, stay_criterion, x_derivative, CurvatureReport,
    CurvatureSample, Curve, EnergyReport, EnergySample, StayConfig, StayReport, VectorField,
};
pub use horizon::{
    horizon_profile, horizon_profile_with, horizon_root, horizon_root_with, HorizonNode,
    HorizonProfile, NodeFailure, ROOT_XTOL,
};
pub use naked::{
    apparent_closure, closure_scan, rho_at, ClosureReport, CornerDiagnostic, LimitPoint,
    NakedVerdict, ScanConfig, ScanLevel, ScanOutcome, Verdict,
};

use serde::{Deserialize, Serialize};

use crate::compactification::{to_log_basis, Chart, MetricField};
use crate::error::{Error, Result};
use crate::exact_solutions::{CatalogEntry, XMetric};
use crate::tensor_core::{
    inverse_with_tangent, invert_symmetric_with, seed, to_sym, Dual, InversionConfig, Real, M4,
};

/// Relative region tolerance against the local `|m|` scale.
pub const REGION_TOL: f64 = 1e-9;
/// Relative threshold on `|∂m/∂ω⁰|` for apparent-horizon detection.
pub const DTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassSource {
    Generic,
    TemporalGaugeClosedForm,
    CatalogClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassSample {
    pub m: f64,
    /// `∂m/∂ω⁰`
    pub dm_dt: f64,
    /// `∂m/∂ωᵅ`
    pub grad: [f64; 4],
    pub source: MassSource,
    /// The cross-term variant `G(dω⁰/ω⁰, dω¹/ω¹)`, when the pipeline has it.
    pub m_cross: Option<f64>,
}

fn grad4(f: impl Fn(&[Dual; 4]) -> Result<Dual>, w: &[f64; 4]) -> Result<(f64, [f64; 4])> {
    let mut g = [0.0; 4];
    let mut v = 0.0;
    for (k, gk) in g.iter_mut().enumerate() {
        let d = f(&seed(w, k, 1.0))?;
        v = d.re;
        *gk = d.du;
    }
    Ok((v, g))
}

fn check_w0(w: &[f64; 4]) -> Result<()> {
    if !(w[0] > 0.0 && w[0] <= 1.0) || !(w[1] > 0.0) {
        return Err(Error::OutOfRange(format!("omega = {w:?} not interior")));
    }
    Ok(())
}

/// Generic pipeline: invert `h` and read off `G⁰⁰/(ω⁰)²`.
///
/// The inversion runs in the `(dω⁰/ω⁰, dω¹/ω¹, dωᵃ)` basis, where `m` is the
/// `00` entry and the components stay `O(ln² ω⁰)` instead of `O((ω⁰)⁻²)`.
pub fn mass_generic(entry: &CatalogEntry, w: &[f64; 4]) -> Result<MassSample> {
    mass_generic_with(entry, w, &InversionConfig::default())
}

pub fn mass_generic_with(
    entry: &CatalogEntry,
    w: &[f64; 4],
    cfg: &InversionConfig,
) -> Result<MassSample> {
    check_w0(w)?;
    let mut grad = [0.0; 4];
    let (mut m, mut cross) = (0.0, 0.0);
    for (k, gk) in grad.iter_mut().enumerate() {
        let wd = seed(w, k, 1.0);
        let h = to_log_basis(&entry.h_omega(&wd)?, &wd);
        let (g, dg) = inverse_with_tangent(&h, cfg)?;
        m = g.get(0, 0);
        cross = g.get(0, 1);
        *gk = dg[0][0];
    }
    Ok(MassSample {
        m,
        dm_dt: grad[0],
        grad,
        source: MassSource::Generic,
        m_cross: Some(cross),
    })
}

fn det3<R: Real>(a: &[[R; 3]; 3]) -> R {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

fn inv3<R: Real>(a: &[[R; 3]; 3]) -> Result<([[R; 3]; 3], R)> {
    let d = det3(a);
    if d.value() == 0.0 || !d.value().is_finite() {
        return Err(Error::Singular { pivot: d.value() });
    }
    let c = |i: usize, j: usize| {
        let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
        a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]
    };
    Ok((
        std::array::from_fn(|i| std::array::from_fn(|j| c(j, i) / d)),
        d,
    ))
}

fn spatial<R: Real>(g: &M4<R>) -> [[R; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| g[i + 1][j + 1]))
}

fn require_temporal_gauge(entry: &CatalogEntry) -> Result<()> {
    match (entry.metric, entry.synthetic) {
        (XMetric::TemporalGauge { .. }, Some(_)) => Ok(()),
        _ => Err(Error::NotTemporalGauge),
    }
}

/// `∂ω¹/∂xⁱ` for the entry's conformal factor.
fn omega_grad<R: Real>(entry: &CatalogEntry, x: &[R; 4]) -> Result<[R; 3]> {
    let XMetric::TemporalGauge { conformal, .. } = entry.metric else {
        return Err(Error::NotTemporalGauge);
    };
    let r = (x[1].sq() + x[2].sq() + x[3].sq()).sqrt();
    let d = conformal.to_factor()?.d_omega_r(r)?;
    Ok(std::array::from_fn(|i| d * x[i + 1] / r))
}

fn tg_mass<R: Real>(entry: &CatalogEntry, w: &[R; 4]) -> Result<R> {
    let x = entry.chart.to_x(w)?;
    let g = entry.metric.metric(&x)?;
    let (ginv, det) = inv3(&spatial(&g))?;
    let dw = omega_grad(entry, &x)?;
    let mut q = R::cst(0.0);
    for i in 0..3 {
        for j in 0..3 {
            q = q + ginv[i][j] * dw[i] * dw[j];
        }
    }
    let ell = w[0].ln();
    let w1sq = w[1].sq();
    Ok((-det.recip() + ell.sq() * q / w1sq) / w1sq)
}

/// Temporal-gauge closed form `(1/(ω¹)²)(−1/|ḡ| + ((ln ω⁰)²/(ω¹)²) ḡⁱʲ∂ᵢω¹∂ⱼω¹)`.
pub fn mass_temporal_gauge(entry: &CatalogEntry, w: &[f64; 4]) -> Result<MassSample> {
    require_temporal_gauge(entry)?;
    check_w0(w)?;
    let (m, grad) = grad4(|wd| tg_mass(entry, wd), w)?;
    Ok(MassSample {
        m,
        dm_dt: grad[0],
        grad,
        source: MassSource::TemporalGaugeClosedForm,
        m_cross: None,
    })
}

/// The catalog's per-entry closed form.
pub fn mass_catalog(entry: &CatalogEntry, w: &[f64; 4]) -> Result<MassSample> {
    check_w0(w)?;
    let (m, grad) = grad4(|wd| entry.mass_at(wd), w)?;
    Ok(MassSample {
        m,
        dm_dt: grad[0],
        grad,
        source: MassSource::CatalogClosedForm,
        m_cross: None,
    })
}

pub fn mass_sample(entry: &CatalogEntry, w: &[f64; 4], source: MassSource) -> Result<MassSample> {
    match source {
        MassSource::Generic => mass_generic(entry, w),
        MassSource::TemporalGaugeClosedForm => mass_temporal_gauge(entry, w),
        MassSource::CatalogClosedForm => mass_catalog(entry, w),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrinsicCurvature {
    pub k: [[f64; 3]; 3],
    pub tr_k: f64,
    /// `K(dω¹, dω¹) = Kⁱʲ ∂ᵢω¹ ∂ⱼω¹`
    pub k_grad: f64,
    /// `ḡⁱʲ ∂ᵢω¹ ∂ⱼω¹`
    pub grad_sq: f64,
    pub sqrt_det: f64,
    pub tau: f64,
}

/// `K_ij = −∂₀ḡ_ij/(2τ)` with `τ = √|ḡ|/Ω`.
pub fn extrinsic_curvature(entry: &CatalogEntry, x: &[f64; 4]) -> Result<ExtrinsicCurvature> {
    require_temporal_gauge(entry)?;
    let g = entry.metric.metric(&seed(x, 0, 1.0))?;
    let sp = spatial(&g);
    let gv: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| sp[i][j].re));
    let (ginv, det) = inv3(&gv)?;
    let sqrt_det = det.abs().sqrt();
    let omega = entry.chart_omega(&[x[1], x[2], x[3]])?;
    let tau = sqrt_det / omega;
    let k: [[f64; 3]; 3] =
        std::array::from_fn(|i| std::array::from_fn(|j| -sp[i][j].du / (2.0 * tau)));
    let dw = omega_grad(entry, x)?;
    let mut tr_k = 0.0;
    let mut grad_sq = 0.0;
    let mut up = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            tr_k += ginv[i][j] * k[i][j];
            grad_sq += ginv[i][j] * dw[i] * dw[j];
            up[i] += ginv[i][j] * dw[j];
        }
    }
    let mut k_grad = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            k_grad += k[i][j] * up[i] * up[j];
        }
    }
    Ok(ExtrinsicCurvature {
        k,
        tr_k,
        k_grad,
        grad_sq,
        sqrt_det,
        tau,
    })
}

/// `∂m/∂ω⁰` from `K`:
/// `ω⁰∂₀m = (1/(ω¹)²)[2trK/√|ḡ| + (2 ln ω⁰/(ω¹)²)(ḡⁱʲ − ln ω⁰ √|ḡ| Kⁱʲ)∂ᵢω¹∂ⱼω¹]`.
pub fn dm_dt_closed_form(entry: &CatalogEntry, w: &[f64; 4]) -> Result<f64> {
    require_temporal_gauge(entry)?;
    check_w0(w)?;
    let x = entry.chart.to_x(w)?;
    let k = extrinsic_curvature(entry, &x)?;
    let (ell, w1sq) = (w[0].ln(), w[1] * w[1]);
    let inner =
        2.0 * k.tr_k / k.sqrt_det + 2.0 * ell / w1sq * (k.grad_sq - ell * k.sqrt_det * k.k_grad);
    Ok(inner / (w1sq * w[0]))
}

/// The same derivative with the `√(|ḡ|ω¹)` and `|ḡ|²` factors as printed.
pub fn dm_dt_printed(entry: &CatalogEntry, w: &[f64; 4]) -> Result<f64> {
    require_temporal_gauge(entry)?;
    let x = entry.chart.to_x(w)?;
    let k = extrinsic_curvature(entry, &x)?;
    let (ell, w1) = (w[0].ln(), w[1]);
    let det = k.sqrt_det * k.sqrt_det;
    let s = (det * w1).sqrt();
    Ok(
        (s / (det * det) * k.tr_k + 2.0 * ell / (w1 * w1) * (k.grad_sq - ell * s * k.k_grad))
            / (w1 * w1),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionClass {
    Exterior,
    Interior,
    HorizonActual,
    HorizonApparent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: RegionClass,
    pub m: f64,
    pub tol: f64,
    /// `ω⁰∂m/∂ω⁰`
    pub dm_dell: f64,
    pub dtol: f64,
}

/// Region tag with tolerances scaled to the local `|m|` and gradient.
pub fn classify(entry: &CatalogEntry, w: &[f64; 4], source: MassSource) -> Result<Classification> {
    let s = mass_sample(entry, w, source)?;
    let ell = w[0].ln();
    let step = 0.01 * ell.abs().max(1e-3);
    let mut scale = s.m.abs();
    for l in [ell - step, (ell + step).min(0.0)] {
        let mut q = *w;
        q[0] = l.exp();
        if let Ok(v) = mass_sample(entry, &q, source) {
            scale = scale.max(v.m.abs());
        }
    }
    let tol = REGION_TOL * scale;
    let dm_dell = w[0] * s.grad[0];
    let dtol = DTOL * dm_dell.hypot(w[1] * s.grad[1]);
    let class = if s.m < -tol {
        RegionClass::Exterior
    } else if s.m > tol {
        RegionClass::Interior
    } else if dm_dell.abs() <= dtol {
        RegionClass::HorizonApparent
    } else {
        RegionClass::HorizonActual
    };
    Ok(Classification {
        class,
        m: s.m,
        tol,
        dm_dell,
        dtol,
    })
}

/// `(∂f/∂ω⁰)·G^{αβ}∂_αf∂_βf` for a gradient supplied by the caller.
pub fn eikonal_residual(entry: &CatalogEntry, w: &[f64; 4], df: &[f64; 4]) -> Result<f64> {
    let h = entry.h_omega(w)?;
    let g = invert_symmetric_with(&to_sym(&h), &InversionConfig::default())?;
    let mut q = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            q += g.get(a, b) * df[a] * df[b];
        }
    }
    Ok(df[0] * q)
}

/// [`eikonal_residual`] with the gradient of a scalar field taken by `derive`.
pub fn eikonal_residual_field(
    entry: &CatalogEntry,
    f: &dyn crate::tensor_core::ScalarField,
    w: &[f64; 4],
    cfg: &crate::tensor_core::DerivativeConfig,
) -> Result<f64> {
    let mut df = [0.0; 4];
    for (k, d) in df.iter_mut().enumerate() {
        *d = crate::tensor_core::derive(f, w, k, cfg)?;
    }
    eikonal_residual(entry, w, &df)
}

/// `max |∂h_{μν}/∂ω⁰|`.
pub fn killing_residual(entry: &CatalogEntry, w: &[f64; 4]) -> Result<f64> {
    let h = entry.h_omega(&seed(w, 0, 1.0))?;
    Ok(h.iter().flatten().map(|v| v.du.abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compactification::ConformalKind;
    use crate::exact_solutions::{
        default_synthetic, make_kerr, make_reissner_nordstrom, make_roberts, make_schwarzschild,
        make_synthetic_collapse, ScaleFactor,
    };

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn generic_matches_catalog_closed_forms() {
        let entries = vec![
            make_schwarzschild(1.0).unwrap(),
            make_reissner_nordstrom(1.0, 2.0, None).unwrap(),
            make_reissner_nordstrom(2.0, 1.0, None).unwrap(),
            make_roberts(0.1, None).unwrap(),
            make_kerr(1.0, 0.5, None).unwrap(),
            default_synthetic(),
        ];
        for e in &entries {
            for &(w0, d) in &[(0.5, 0.4), (0.9, 1.5), (0.2, 3.0)] {
                let w1 = e.radial_at_offset(d).unwrap().w1;
                let w = [w0, w1, 1.1, 0.3];
                let w = if e.is_temporal_gauge() {
                    [w0, w1, 0.3, -0.2]
                } else {
                    w
                };
                let a = mass_generic(e, &w).unwrap();
                let b = mass_catalog(e, &w).unwrap();
                assert!(close(a.m, b.m, 1e-8), "{}: {} vs {}", e.id, a.m, b.m);
                assert!(
                    close(a.dm_dt, b.dm_dt, 1e-7),
                    "{}: {} vs {}",
                    e.id,
                    a.dm_dt,
                    b.dm_dt
                );
            }
        }
    }

    #[test]
    fn temporal_gauge_pipeline_agrees() {
        let e = default_synthetic();
        let w = [0.4, 0.6, 0.3, -0.2];
        let a = mass_temporal_gauge(&e, &w).unwrap();
        let b = mass_generic(&e, &w).unwrap();
        assert!(close(a.m, b.m, 1e-10));
        assert!(matches!(
            mass_temporal_gauge(&make_schwarzschild(1.0).unwrap(), &w),
            Err(Error::NotTemporalGauge)
        ));
    }

    #[test]
    fn curvature_of_linear_scale_factor() {
        let e = default_synthetic();
        let x = [0.7, 1.3, 0.4, -0.5];
        let k = extrinsic_curvature(&e, &x).unwrap();
        let r = (1.3f64 * 1.3 + 0.16 + 0.25).sqrt();
        let a = 1.7;
        assert!(close(k.tr_k, -3.0 / (r * a.powi(4)), 1e-12));
        assert!(k.k_grad < 0.0);
        let tr: f64 = (0..3).map(|i| k.k[i][i] / (a * a)).sum();
        assert!((tr - k.tr_k).abs() < 1e-9 * k.tr_k.abs());
    }

    #[test]
    fn closed_derivative_matches_dual() {
        let e = default_synthetic();
        for &(w0, w1) in &[(0.3, 0.5), (0.8, 0.2), (0.05, 0.9)] {
            let w = [w0, w1, 0.3, -0.2];
            let c = dm_dt_closed_form(&e, &w).unwrap();
            let d = mass_temporal_gauge(&e, &w).unwrap().dm_dt;
            assert!(close(c, d, 1e-10), "{c} vs {d}");
        }
    }

    #[test]
    fn static_metric_has_zero_curvature_and_derivative_at_unit_omega0() {
        let e = make_synthetic_collapse(
            ScaleFactor::Constant { value: 1.0 },
            ConformalKind::ReciprocalR,
        )
        .unwrap();
        let k = extrinsic_curvature(&e, &[0.5, 2.0, 0.1, 0.1]).unwrap();
        assert_eq!(k.tr_k, 0.0);
        assert_eq!(dm_dt_closed_form(&e, &[1.0, 0.4, 0.3, -0.2]).unwrap(), 0.0);
    }

    #[test]
    fn schwarzschild_unit_omega0_is_exterior() {
        let e = make_schwarzschild(1.0).unwrap();
        for w1 in [0.2, 0.8, 1.4] {
            let c = classify(&e, &[1.0, w1, 1.0, 0.0], MassSource::Generic).unwrap();
            assert_eq!(c.class, RegionClass::Exterior);
        }
    }

    #[test]
    fn killing_residuals() {
        let mut e = make_schwarzschild(1.0).unwrap();
        let w = [0.3, 0.7, 1.2, 0.5];
        assert!(killing_residual(&e, &w).unwrap() > 0.0);
        e.omega_metric = crate::exact_solutions::OmegaMetric::SchwarzschildStationary { mass: 1.0 };
        assert!(killing_residual(&e, &w).unwrap() < 1e-9);
    }
}
