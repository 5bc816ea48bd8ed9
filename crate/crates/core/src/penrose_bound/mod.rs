//! Deformations of the black-hole horizon, the mass and area functionals, the
//! Euler–Lagrange ingredients and the lower bound on the total mass.

mod grid;

pub use grid::{patch_area, GridRow, Measure, QuadratureGrid};

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compactification::Chart;
use crate::error::{Error, Result};
use crate::exact_solutions::CatalogEntry;
use crate::mass_geometry::{
    energy_condition, extrinsic_curvature, horizon_root, ExtrinsicCurvature,
};
use crate::numerics::{gauss_legendre, pairwise_sum, LogValue};
use crate::tensor_core::{derive, DerivativeConfig, DomainBox, Dual, FnField, Real};

fn mass(entry: &CatalogEntry, w1: f64, ell: f64) -> Result<f64> {
    entry.mass_closed(ell, &entry.radial(w1)?, FRAC_PI_2)
}

/// `m` and `∂m/∂ln ω⁰`.
fn mass_dual(entry: &CatalogEntry, w1: f64, ell: f64) -> Result<Dual> {
    let rad = entry.radial(Dual::cst(w1))?;
    entry.mass_closed(Dual::var(ell), &rad, Dual::cst(FRAC_PI_2))
}

/// Slice geometry at `(ln ω⁰, ω¹)` on the `ω² = ω³ = 0` ray.
fn slice_geometry(entry: &CatalogEntry, w1: f64, ell: f64) -> Result<ExtrinsicCurvature> {
    let mut x = entry.chart.to_x(&[1.0, w1, 0.0, 0.0])?;
    x[0] = -w1 * ell;
    extrinsic_curvature(entry, &x)
}

/// `(sign, ln|∂√|ḡ|/∂ω⁰|)`; `∂ₜ√|ḡ| = −√|ḡ|·τ·trK` and `∂x⁰/∂ω⁰ = −ω¹/ω⁰`.
fn dsqrt_det_dw0(k: &ExtrinsicCurvature, w1: f64, ell: f64) -> (f64, f64) {
    if k.tr_k == 0.0 {
        return (0.0, f64::NEG_INFINITY);
    }
    (
        k.tr_k.signum(),
        (k.sqrt_det * k.tau * k.tr_k.abs() * w1).ln() - ell,
    )
}

/// Smooth bump added to `T̃*`: `T̃ = (1−σ)(1 + cσ·cos(k ln ω¹ + φ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl Perturbation {
    fn profile(&self, w1: f64) -> f64 {
        self.amplitude * (self.frequency * w1.ln() + self.phase).cos()
    }
}

/// `s ↦ T̃(s)` on every grid row, parametrized by `σ = s − s₋ ∈ [0, 1]` where
/// `[s₋, s₊) = [X̃ − 1, X̃)`. The slice at label `s` is read at `ω⁰ + s`, so
/// quantities on `ḡ_{s+ε}` are evaluated at `T̃(s) + s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationFamily {
    /// `ln X̃` per row.
    pub ln_x: Vec<f64>,
    pub perturbation: Option<Perturbation>,
}

impl DeformationFamily {
    /// `T̃* = −s + X̃` with `X̃` the horizon height on each row.
    pub fn optimal(entry: &CatalogEntry, grid: &QuadratureGrid) -> Result<Self> {
        let ln_x = grid
            .rows
            .par_iter()
            .map(|r| horizon_root(entry, &entry.radial(r.omega1)?, FRAC_PI_2))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            ln_x,
            perturbation: None,
        })
    }

    pub fn perturbed(&self, p: Perturbation) -> Result<Self> {
        if !(p.amplitude.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "perturbation amplitude {} leaves (0, 1)",
                p.amplitude
            )));
        }
        Ok(Self {
            ln_x: self.ln_x.clone(),
            perturbation: Some(p),
        })
    }

    pub fn x_tilde(&self, row: usize) -> f64 {
        self.ln_x[row].exp()
    }

    pub fn s_range(&self, row: usize) -> (f64, f64) {
        let x = self.x_tilde(row);
        (x - 1.0, x)
    }

    fn bump(&self, w1: f64, sigma: f64) -> f64 {
        self.perturbation.map_or(0.0, |p| sigma * p.profile(w1))
    }

    pub fn t(&self, w1: f64, sigma: f64) -> f64 {
        (1.0 - sigma) * (1.0 + self.bump(w1, sigma))
    }

    /// `dT̃/ds`.
    pub fn dt(&self, w1: f64, sigma: f64) -> f64 {
        let c = self.perturbation.map_or(0.0, |p| p.profile(w1));
        -(1.0 + c * sigma) + (1.0 - sigma) * c
    }

    /// `ln(T̃(s) + s)` on row `row`.
    pub fn ln_transported(&self, row: usize, w1: f64, sigma: f64) -> Result<f64> {
        let delta = (1.0 - sigma) * self.bump(w1, sigma);
        if delta == 0.0 {
            return Ok(self.ln_x[row]);
        }
        let v = self.x_tilde(row) + delta;
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::OutOfRange(format!(
                "transported omega0 = {v} at omega1 = {w1}"
            )));
        }
        Ok(v.ln())
    }
}

/// `∫ m dω⁰ dω¹ dϖ` for an arbitrary `m(row, ln ω⁰)`, with `ω⁰ = e^ℓ` on
/// dyadic panels down to `ell_cut`.
pub fn mass_integral<F>(grid: &QuadratureGrid, ell_cut: f64, m: F) -> Result<f64>
where
    F: Fn(&GridRow, f64) -> Result<f64> + Sync,
{
    if !(ell_cut < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "omega0 cutoff ln = {ell_cut} must be negative"
        )));
    }
    let mut edges = vec![0.0];
    let mut e = -1.0;
    while e > ell_cut {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(ell_cut);
    grid.integrate(Measure::Flat, |_, row| {
        let mut terms = Vec::with_capacity(grid.inner.len() * edges.len());
        for p in edges.windows(2) {
            let (b, a) = (p[0], p[1]);
            for &(x, w) in &grid.inner {
                let ell = a + (b - a) * x;
                terms.push((b - a) * w * m(row, ell)? * ell.exp());
            }
        }
        Ok(pairwise_sum(&terms))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSquared {
    pub value: f64,
    /// `(ε₁, value)` for `ε₁, ε₁/2, ε₁/4`.
    pub eps1_sequence: Vec<(f64, f64)>,
    /// `(ln ω⁰ cutoff, value)`.
    pub ell_cut_sequence: Vec<(f64, f64)>,
    /// Observed order of the `ε₁` sequence; negative when it diverges.
    pub order_eps1: Option<f64>,
    pub extrapolated: Option<f64>,
    pub converged: bool,
}

impl MassSquared {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergent(format!(
                "total mass cutoff sequence {:?} is not Cauchy",
                self.eps1_sequence
            )))
        }
    }
}

fn cauchy(a: f64, b: f64, rtol: f64) -> bool {
    (a - b).abs() <= rtol * b.abs()
}

/// Squared total mass over the cut-off domain, with the cutoff sequence used
/// to judge convergence.
pub fn total_mass_squared(
    entry: &CatalogEntry,
    grid: &QuadratureGrid,
    ell_cut: f64,
    rtol: f64,
) -> Result<MassSquared> {
    let m = |row: &GridRow, ell: f64| mass(entry, row.omega1, ell);
    let mut eps1_sequence = Vec::new();
    for k in 0..3 {
        let e = grid.eps1 / f64::from(1u32 << k);
        let g = if k == 0 {
            grid.clone()
        } else {
            grid.recut(entry, e)?
        };
        eps1_sequence.push((e, mass_integral(&g, ell_cut, m)?));
    }
    let value = eps1_sequence[0].1;
    let deeper = mass_integral(grid, 2.0 * ell_cut, m)?;
    let ell_cut_sequence = vec![(ell_cut, value), (2.0 * ell_cut, deeper)];
    let [m1, m2, m3] = [eps1_sequence[0].1, eps1_sequence[1].1, eps1_sequence[2].1];
    let (d1, d2) = ((m1 - m2).abs(), (m2 - m3).abs());
    let order_eps1 = (d1 > 0.0 && d2 > 0.0).then(|| (d1 / d2).log2());
    let extrapolated = match order_eps1 {
        Some(p) if p > 0.0 => Some(m3 + (m3 - m2) / (2f64.powf(p) - 1.0)),
        Some(_) => None,
        None => Some(m3),
    };
    let converged =
        cauchy(m2, m3, rtol) && cauchy(value, deeper, rtol) && order_eps1.is_none_or(|p| p > 0.0);
    Ok(MassSquared {
        value,
        eps1_sequence,
        ell_cut_sequence,
        order_eps1,
        extrapolated,
        converged,
    })
}

/// `J(T̃) = ∫∫ (m*(T̃)/T̃)(dT̃/ds) (dω¹/ω¹) dϖ ds` with `m*/T̃ = ω¹m`.
pub fn functional_j(
    entry: &CatalogEntry,
    fam: &DeformationFamily,
    grid: &QuadratureGrid,
) -> Result<f64> {
    grid.integrate(Measure::Log, |_, row| {
        let w1 = row.omega1;
        let terms = grid
            .inner
            .iter()
            .map(|&(sg, w)| Ok(w * w1 * mass(entry, w1, fam.t(w1, sg).ln())? * fam.dt(w1, sg)))
            .collect::<Result<Vec<_>>>()?;
        Ok(pairwise_sum(&terms))
    })
}

/// `P₀ = ∫ (ω¹)³ √|ḡ_{s+ε}|(T̃(s), ωⁱ) dω¹dϖ` at `σ = s − s₋`.
pub fn functional_i_area(
    entry: &CatalogEntry,
    fam: &DeformationFamily,
    grid: &QuadratureGrid,
    sigma: f64,
) -> Result<f64> {
    grid.integrate(Measure::Flat, |i, row| {
        let w1 = row.omega1;
        let k = slice_geometry(entry, w1, fam.ln_transported(i, w1, sigma)?)?;
        Ok(w1.powi(3) * k.sqrt_det)
    })
}

/// `∫ √|ḡ_ε|(X̃, ωⁱ) dω¹dϖ` without the `(ω¹)³` weight.
pub fn area_constraint(
    entry: &CatalogEntry,
    fam: &DeformationFamily,
    grid: &QuadratureGrid,
) -> Result<f64> {
    grid.integrate(Measure::Flat, |i, row| {
        Ok(slice_geometry(entry, row.omega1, fam.ln_x[i])?.sqrt_det)
    })
}

/// `∫ (ω¹)³ ∂₀√|ḡ_{s+ε}|(T̃(s), ωⁱ) dω¹dϖ`, which stays constant along the
/// deformation.
pub fn conserved_integral(
    entry: &CatalogEntry,
    fam: &DeformationFamily,
    grid: &QuadratureGrid,
    sigma: f64,
) -> Result<LogValue> {
    grid.integrate_log(Measure::Flat, |i, row| {
        let w1 = row.omega1;
        let ell = fam.ln_transported(i, w1, sigma)?;
        let (s, l) = dsqrt_det_dw0(&slice_geometry(entry, w1, ell)?, w1, ell);
        Ok((s, l + 3.0 * w1.ln()))
    })
}

/// `|∂P/∂T̃ − d/ds(∂P/∂T̃′)|` at `σ`, relative to `∫|∂P/∂T̃|`. The first term
/// uses the exact `∂m/∂ω⁰`; the second a central difference with step `h`.
pub fn euler_residual(
    entry: &CatalogEntry,
    fam: &DeformationFamily,
    grid: &QuadratureGrid,
    sigma: f64,
    h: f64,
) -> Result<f64> {
    if grid.nodes < 4 {
        return Err(Error::NonConvergent(format!(
            "{} nodes leave no room to refine",
            grid.nodes
        )));
    }
    if !(h > 0.0 && sigma - h > 0.0 && sigma + h < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "s-step {h} at sigma {sigma} leaves the s-range"
        )));
    }
    let parts: Vec<[f64; 2]> = grid
        .rows
        .par_iter()
        .map(|row| {
            let w1 = row.omega1;
            let t = fam.t(w1, sigma);
            let dm = mass_dual(entry, w1, t.ln())?.du / t;
            let v = row.w_nu * w1 * dm * fam.dt(w1, sigma);
            Ok([v, v.abs()])
        })
        .collect::<Result<_>>()?;
    let d_dt = pairwise_sum(&parts.iter().map(|p| p[0]).collect::<Vec<_>>());
    let scale = pairwise_sum(&parts.iter().map(|p| p[1]).collect::<Vec<_>>());
    let s_at = |sg: f64| {
        grid.integrate(Measure::Log, |_, row| {
            let w1 = row.omega1;
            Ok(w1 * mass(entry, w1, fam.t(w1, sg).ln())?)
        })
    };
    let d_ds = (s_at(sigma + h)? - s_at(sigma - h)?) / (2.0 * h);
    let r = (d_dt - d_ds).abs();
    Ok(if scale > 0.0 { r / scale } else { r })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    pub value: LogValue,
    pub numerator: f64,
    pub denominator: LogValue,
}

/// `λ` from the endpoint values of `∂P/∂T̃′ = ω¹m` over the transported
/// `∫(ω¹)³∂₀√|ḡ_ε|(X̃)`; the `T̃ → 0` endpoint is read at `ln ω⁰ = K·ln X̃`.
pub fn lagrange_multiplier(
    entry: &CatalogEntry,
    fam: &DeformationFamily,
    grid: &QuadratureGrid,
    lower_factor: f64,
) -> Result<Multiplier> {
    let numerator = grid.integrate(Measure::Flat, |i, row| {
        let w1 = row.omega1;
        Ok(mass(entry, w1, 0.0)? - mass(entry, w1, lower_factor * fam.ln_x[i])?)
    })?;
    let denominator = conserved_integral(entry, fam, grid, 0.0)?;
    let magnitude = grid.integrate_log(Measure::Flat, |i, row| {
        let w1 = row.omega1;
        let ell = fam.ln_x[i];
        let (s, l) = dsqrt_det_dw0(&slice_geometry(entry, w1, ell)?, w1, ell);
        Ok((s.abs(), l + 3.0 * w1.ln()))
    })?;
    if denominator.sign == 0.0 || denominator.ln_abs - magnitude.ln_abs < (1e-12f64).ln() {
        return Err(Error::DenominatorVanishes(denominator.to_f64()));
    }
    Ok(Multiplier {
        value: LogValue::from_f64(numerator).div(denominator)?,
        numerator,
        denominator,
    })
}

/// `ω⁰∂m*/∂ω⁰ − m*` by finite differences of `m* = ω⁰ω¹m`, and
/// `ω¹(ω⁰)²∂m/∂ω⁰` from the exact derivative.
pub fn second_variation_identity(entry: &CatalogEntry, w: &[f64; 4]) -> Result<(f64, f64)> {
    let w1 = w[1];
    let mut domain = DomainBox::open(vec![0.0], vec![1.0]);
    domain.closed_hi[0] = true;
    let field = FnField::new(domain, |p: &[f64]| {
        Ok(p[0] * w1 * mass(entry, w1, p[0].ln())?)
    });
    let cfg = DerivativeConfig {
        one_sided_fallback: true,
        ..DerivativeConfig::central()
    };
    let dstar = derive(&field, &[w[0]], 0, &cfg)?;
    let mstar = w[0] * w1 * mass(entry, w1, w[0].ln())?;
    let lhs = w[0] * dstar - mstar;
    let rhs = w1 * w[0] * mass_dual(entry, w1, w[0].ln())?.du;
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondVariation {
    /// `A ≤ 0` at every sample.
    pub ok: bool,
    pub max_a: f64,
    /// Samples where `∂m/∂ω⁰ < 0`.
    pub admissible: usize,
    pub samples: usize,
    /// Largest relative mismatch between the two sides of the `A` identity.
    pub identity_max: f64,
}

/// Sign of `A = ω⁰∂m*/∂ω⁰ − m*` over the samples.
pub fn second_variation_sign(
    entry: &CatalogEntry,
    samples: &[[f64; 4]],
) -> Result<SecondVariation> {
    let rows: Vec<(f64, bool, f64)> = samples
        .par_iter()
        .map(|w| {
            let (lhs, rhs) = second_variation_identity(entry, w)?;
            let mstar = w[0] * w[1] * mass(entry, w[1], w[0].ln())?;
            let scale = lhs.abs().max(rhs.abs()).max(mstar.abs());
            let err = if scale > 0.0 {
                (lhs - rhs).abs() / scale
            } else {
                0.0
            };
            Ok((rhs, rhs < 0.0, err))
        })
        .collect::<Result<_>>()?;
    Ok(SecondVariation {
        ok: rows.iter().all(|r| r.0 <= 0.0),
        max_a: rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max),
        admissible: rows.iter().filter(|r| r.1).count(),
        samples: rows.len(),
        identity_max: rows.iter().map(|r| r.2).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    pub nodes: usize,
    /// `ε₁/Ω_max`
    pub eps1_rel: f64,
    /// The `T̃ → 0` endpoint is read at `ln ω⁰ = K·ln X̃`.
    pub lower_factor: f64,
    /// `ln ω⁰` cutoff of the total-mass integral.
    pub ell_cut: f64,
    pub euler_step: f64,
    pub cauchy_rtol: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            nodes: 32,
            eps1_rel: 1e-4,
            lower_factor: 1e6,
            ell_cut: -40.0,
            euler_step: 1e-4,
            cauchy_rtol: 1e-3,
        }
    }
}

/// Perturbations of `T̃*` used for the Euler identity checks.
pub fn default_perturbations() -> Vec<Perturbation> {
    [
        (0.5, 0.5, 0.0),
        (-0.4, 1.0, 0.3),
        (0.3, 1.5, 1.1),
        (-0.7, 2.0, -0.4),
        (0.6, 3.0, 2.0),
    ]
    .into_iter()
    .map(|(amplitude, frequency, phase)| Perturbation {
        amplitude,
        frequency,
        phase,
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    /// `trK < 0` at every horizon node.
    pub tr_k_negative: bool,
    /// `∂m/∂ω⁰ < 0` at every horizon node.
    pub mass_decreasing: bool,
    /// `trK < 0` and `K(dω¹, dω¹) ≥ 0` at every horizon node.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub entry: String,
    pub nodes: usize,
    pub eps1: f64,
    pub m_sq: f64,
    pub m_sq_detail: MassSquared,
    pub j_at_tstar: f64,
    pub rhs_bound: f64,
    pub rhs_log10: f64,
    pub rhs_sign: f64,
    pub rhs_numerator: f64,
    pub rhs_denominator: LogValue,
    /// `P₀` at `s = 0`.
    pub area_a: f64,
    /// `∫√|ḡ_ε|(X̃)` without the `(ω¹)³` weight.
    pub area_unweighted: f64,
    /// `|P₀(s₊) − P₀(s₋)|/A`.
    pub isoperimetric_gap: f64,
    pub lambda: Multiplier,
    pub euler_residual_max: f64,
    /// Euler residual ratio when the `s`-step is halved.
    pub euler_halving_ratio: f64,
    pub second_variation_ok: bool,
    pub second_variation: SecondVariation,
    pub conserved_integral_drift: f64,
    /// `m(ε + X̃) < 0` and `m(−ε + X̃) > 0` at every row.
    pub endpoint_signs_ok: bool,
    /// Fraction of rows where the inner `s`-integral of `−m*/T̃*` is positive.
    pub positive_inner_fraction: f64,
    pub hypotheses: Hypotheses,
    /// `X̃` was taken as the horizon without the energy condition passing.
    pub convention_dependent: bool,
    pub inequality_holds: bool,
    pub j_inequality_holds: bool,
    pub warnings: Vec<String>,
}

fn exceeds(a: f64, b: LogValue) -> bool {
    if b.ln_abs > 700.0 {
        return b.sign < 0.0;
    }
    a > b.to_f64()
}

/// The full bound pipeline for a temporal-gauge entry.
pub fn penrose_bound(entry: &CatalogEntry, cfg: &BoundConfig) -> Result<BoundReport> {
    if !entry.is_temporal_gauge() {
        return Err(Error::HypothesisViolated(format!(
            "{} is not in temporal gauge",
            entry.id.as_str()
        )));
    }
    let grid = QuadratureGrid::for_entry(entry, cfg.nodes, cfg.eps1_rel)?;
    let fam = DeformationFamily::optimal(entry, &grid).map_err(|e| match e {
        Error::NoSignChange(s) => Error::HypothesisViolated(format!("no horizon: {s}")),
        other => other,
    })?;
    let mut warnings = Vec::new();

    let at_horizon: Vec<(ExtrinsicCurvature, f64)> = grid
        .rows
        .par_iter()
        .zip(fam.ln_x.par_iter())
        .map(|(r, &ell)| {
            Ok((
                slice_geometry(entry, r.omega1, ell)?,
                mass_dual(entry, r.omega1, ell)?.du,
            ))
        })
        .collect::<Result<_>>()?;
    let hypotheses = Hypotheses {
        tr_k_negative: at_horizon.iter().all(|(k, _)| k.tr_k < 0.0),
        mass_decreasing: at_horizon.iter().all(|(_, d)| *d < 0.0),
        strict: at_horizon
            .iter()
            .all(|(k, _)| k.tr_k < 0.0 && k.k_grad >= 0.0),
    };
    if !hypotheses.tr_k_negative {
        return Err(Error::HypothesisViolated(
            "trK < 0 fails on the horizon".into(),
        ));
    }
    if !hypotheses.mass_decreasing {
        return Err(Error::HypothesisViolated(
            "dm/domega0 < 0 fails on the horizon".into(),
        ));
    }
    if !hypotheses.strict {
        warnings.push(
            "K(domega1, domega1) >= 0 fails on the horizon; bound gated on dm/domega0 < 0".into(),
        );
    }

    let samples: Vec<[f64; 4]> = grid
        .rows
        .iter()
        .zip(&fam.ln_x)
        .filter(|(_, l)| **l > -700.0)
        .map(|(r, l)| [l.exp(), r.omega1, 0.0, 0.0])
        .collect();
    let convention_dependent = match energy_condition(entry, &samples, None) {
        Ok(rep) => !rep.all_nonnegative,
        Err(e) => {
            warnings.push(format!("energy condition not evaluated: {e}"));
            true
        }
    };
    if convention_dependent {
        warnings.push("horizon used as the deformed boundary without the energy condition".into());
    }

    let m_sq_detail = total_mass_squared(entry, &grid, cfg.ell_cut, cfg.cauchy_rtol)?;
    let m_sq = m_sq_detail.value;
    if !m_sq_detail.converged {
        warnings.push(format!(
            "total mass does not converge under cutoff refinement (observed order {:?})",
            m_sq_detail.order_eps1
        ));
    }
    if m_sq < 0.0 {
        warnings.push("total mass squared is negative; comparison reported verbatim".into());
    }

    let j_at_tstar = functional_j(entry, &fam, &grid)?;
    let area_a = functional_i_area(entry, &fam, &grid, 0.0)?;
    let area_end = functional_i_area(entry, &fam, &grid, 1.0)?;
    let area_unweighted = area_constraint(entry, &fam, &grid)?;
    let lambda = lagrange_multiplier(entry, &fam, &grid, cfg.lower_factor)?;

    let c0 = lambda.denominator;
    let mut conserved_integral_drift: f64 = 0.0;
    for sigma in [0.25, 0.5, 0.75, 1.0] {
        conserved_integral_drift = conserved_integral_drift
            .max(conserved_integral(entry, &fam, &grid, sigma)?.rel_diff(c0));
    }

    let ends: Vec<(f64, f64)> = grid
        .rows
        .par_iter()
        .zip(fam.ln_x.par_iter())
        .map(|(r, &l)| {
            Ok((
                mass(entry, r.omega1, 0.0)?,
                mass(entry, r.omega1, cfg.lower_factor * l)?,
            ))
        })
        .collect::<Result<_>>()?;
    let endpoint_signs_ok = ends.iter().all(|&(up, lo)| up < 0.0 && lo > 0.0);
    let rhs_numerator = grid.integrate(Measure::Log, |i, _| Ok(ends[i].0 - ends[i].1))?;
    let rhs_denominator = grid.integrate_log(Measure::Flat, |i, row| {
        let k = &at_horizon[i].0;
        if k.tr_k == 0.0 {
            return Ok((0.0, f64::NEG_INFINITY));
        }
        Ok((
            k.tr_k.signum(),
            3.5 * row.omega1.ln() + k.tr_k.abs().ln() - fam.ln_x[i],
        ))
    })?;
    let rhs = LogValue::from_f64(rhs_numerator)
        .mul(LogValue::from_f64(area_a))
        .div(rhs_denominator)?;

    let mut families = vec![fam.clone()];
    for p in default_perturbations() {
        families.push(fam.perturbed(p)?);
    }
    let mut euler_residual_max: f64 = 0.0;
    for f in &families {
        for sigma in [0.1, 0.3, 0.5, 0.7, 0.9] {
            euler_residual_max =
                euler_residual_max.max(euler_residual(entry, f, &grid, sigma, cfg.euler_step)?);
        }
    }
    let coarse = euler_residual(entry, &families[1], &grid, 0.5, 1e-2)?;
    let fine = euler_residual(entry, &families[1], &grid, 0.5, 5e-3)?;
    let euler_halving_ratio = coarse / fine;

    let mut sv_samples = Vec::new();
    for r in &grid.rows {
        for w0 in [1.0, 0.5, 0.1] {
            sv_samples.push([w0, r.omega1, 0.0, 0.0]);
        }
    }
    let second_variation = second_variation_sign(entry, &sv_samples)?;

    let inner_rule = gauss_legendre(cfg.nodes, 0.0, 1.0);
    let positive: Vec<bool> = grid
        .rows
        .par_iter()
        .map(|r| {
            let terms = inner_rule
                .iter()
                .map(|&(sg, w)| Ok(w * r.omega1 * mass(entry, r.omega1, fam.t(r.omega1, sg).ln())?))
                .collect::<Result<Vec<_>>>()?;
            Ok(-pairwise_sum(&terms) > 0.0)
        })
        .collect::<Result<_>>()?;
    let positive_inner_fraction =
        positive.iter().filter(|p| **p).count() as f64 / positive.len() as f64;

    Ok(BoundReport {
        entry: entry.id.as_str().to_string(),
        nodes: cfg.nodes,
        eps1: grid.eps1,
        m_sq,
        m_sq_detail,
        j_at_tstar,
        rhs_bound: rhs.to_f64(),
        rhs_log10: rhs.log10_abs(),
        rhs_sign: rhs.sign,
        rhs_numerator,
        rhs_denominator,
        area_a,
        area_unweighted,
        isoperimetric_gap: (area_end - area_a).abs() / area_a,
        lambda,
        euler_residual_max,
        euler_halving_ratio,
        second_variation_ok: second_variation.ok,
        second_variation,
        conserved_integral_drift,
        endpoint_signs_ok,
        positive_inner_fraction,
        hypotheses,
        convention_dependent,
        inequality_holds: exceeds(m_sq, rhs),
        j_inequality_holds: exceeds(j_at_tstar, rhs),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compactification::ConformalKind;
    use crate::exact_solutions::{default_synthetic, make_synthetic_collapse, ScaleFactor};

    fn static_entry() -> CatalogEntry {
        make_synthetic_collapse(
            ScaleFactor::Constant { value: 1.0 },
            ConformalKind::ReciprocalR,
        )
        .unwrap()
    }

    #[test]
    fn trivial_mass_integrals() {
        let g = QuadratureGrid::flat(8, 0.5, 1.5, 1.0).unwrap();
        assert_eq!(mass_integral(&g, -40.0, |_, _| Ok(0.0)).unwrap(), 0.0);
        let v = mass_integral(&g, -40.0, |_, _| Ok(1.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn static_entry_is_rejected() {
        let e = static_entry();
        let err = penrose_bound(
            &e,
            &BoundConfig {
                nodes: 8,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::HypothesisViolated(_)), "{err}");
        let g = QuadratureGrid::for_entry(&e, 8, 1e-2).unwrap();
        let fam = DeformationFamily::optimal(&e, &g).unwrap();
        let err = lagrange_multiplier(&e, &fam, &g, 1e6).unwrap_err();
        assert!(matches!(err, Error::DenominatorVanishes(_)), "{err}");
        let sv = second_variation_sign(&e, &[[1.0, 0.5, 0.0, 0.0]]).unwrap();
        assert!(sv.ok && sv.max_a == 0.0);
    }

    #[test]
    fn synthetic_ingredients() {
        let e = default_synthetic();
        let g = QuadratureGrid::for_entry(&e, 12, 1e-2).unwrap();
        let fam = DeformationFamily::optimal(&e, &g).unwrap();
        for (i, r) in g.rows.iter().enumerate() {
            let (lo, hi) = fam.s_range(i);
            assert!(lo < 0.0 && hi > 0.0);
            for sg in [0.0, 0.3, 0.999] {
                let t = fam.t(r.omega1, sg);
                assert!(t > 0.0 && t <= 1.0);
            }
        }
        for p in default_perturbations() {
            let f = fam.perturbed(p).unwrap();
            let r = euler_residual(&e, &f, &g, 0.4, 1e-4).unwrap();
            assert!(r < 1e-6, "{r}");
        }
        let lam = lagrange_multiplier(&e, &fam, &g, 1e6).unwrap();
        assert!(lam.denominator.sign < 0.0 && lam.numerator < 0.0);
        let c = conserved_integral(&e, &fam, &g, 0.6).unwrap();
        assert!(c.rel_diff(lam.denominator) < 1e-12);
        let (lhs, rhs) = second_variation_identity(&e, &[0.3, 0.2, 0.0, 0.0]).unwrap();
        assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs(), "{lhs} vs {rhs}");
        assert!(fam
            .perturbed(Perturbation {
                amplitude: 1.0,
                frequency: 1.0,
                phase: 0.0
            })
            .is_err());
        let tiny = QuadratureGrid::for_entry(&e, 2, 1e-2).unwrap();
        let f2 = DeformationFamily::optimal(&e, &tiny).unwrap();
        assert!(matches!(
            euler_residual(&e, &f2, &tiny, 0.5, 1e-4),
            Err(Error::NonConvergent(_))
        ));
    }

    #[test]
    fn synthetic_bound_report() {
        let e = default_synthetic();
        let rep = penrose_bound(
            &e,
            &BoundConfig {
                nodes: 16,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rep.endpoint_signs_ok);
        assert!(rep.hypotheses.tr_k_negative && rep.hypotheses.mass_decreasing);
        assert!(rep.isoperimetric_gap < 1e-12);
        assert!(rep.euler_residual_max < 1e-6, "{}", rep.euler_residual_max);
        assert!(rep.euler_halving_ratio > 2.0, "{}", rep.euler_halving_ratio);
        assert!(rep.second_variation_ok);
        assert!(rep.rhs_sign > 0.0);
        assert!(
            (rep.j_at_tstar + rep.m_sq).abs() < 1e-3 * rep.m_sq.abs(),
            "{} {}",
            rep.j_at_tstar,
            rep.m_sq
        );
    }
}
