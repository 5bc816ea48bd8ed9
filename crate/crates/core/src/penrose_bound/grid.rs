use std::f64::consts::{FRAC_PI_4, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_solutions::{CatalogEntry, EntryChart};
use crate::numerics::{gauss_legendre, log_sum, pairwise_sum, LogValue};

/// `∫∫ dω²dω³` over `{ω¹²(tan²ω² + tan²ω³) < r²}` with `q = r/ω¹`.
///
/// In `(tan ω², tan ω³)` polar coordinates the angular integral is
/// `4π/((2+ρ²)√(1+ρ²))`, which integrates in closed form.
pub fn patch_area(q: f64) -> f64 {
    if !(q > 0.0) {
        return 0.0;
    }
    4.0 * PI * ((1.0 + q * q).sqrt().atan() - FRAC_PI_4)
}

/// One `ω¹` node with its angular patch area folded into the weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub omega1: f64,
    /// Weight for `dω¹ dϖ`.
    pub w_mu: f64,
    /// Weight for `(dω¹/ω¹) dϖ`.
    pub w_nu: f64,
    pub area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    /// `dω¹ dϖ`
    Flat,
    /// `(dω¹/ω¹) dϖ`
    Log,
}

/// Gauss–Legendre rule over `H̲ = [ε₁, Ω_max] × (−π/2, π/2)²`.
///
/// Integrands on the temporal-gauge entries depend on `ωⁱ` only through
/// `ω¹`, so the two angular axes are integrated exactly over the chart patch
/// image and enter as a per-row area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub nodes: usize,
    pub eps1: f64,
    pub omega_max: f64,
    pub log_omega1: bool,
    pub rows: Vec<GridRow>,
    /// Gauss rule on `(0, 1)` used for every inner `s` or `ω⁰` integral.
    pub inner: Vec<(f64, f64)>,
}

impl QuadratureGrid {
    /// Grid on the patch image of a Cartesian-chart entry, log-substituted in
    /// `ω¹` with cutoff `ε₁ = eps1_rel·Ω_max`.
    pub fn for_entry(entry: &CatalogEntry, nodes: usize, eps1_rel: f64) -> Result<Self> {
        let omega_max = entry.omega_edge();
        Self::with_cutoff(entry, nodes, eps1_rel * omega_max)
    }

    pub fn with_cutoff(entry: &CatalogEntry, nodes: usize, eps1: f64) -> Result<Self> {
        let EntryChart::Cartesian(chart) = &entry.chart else {
            return Err(Error::NotTemporalGauge);
        };
        let omega_max = chart.conformal.omega_max;
        if nodes < 2 {
            return Err(Error::InvalidParameter(format!("{nodes} nodes per axis")));
        }
        if !(eps1 > 0.0 && eps1 < omega_max) {
            return Err(Error::InvalidParameter(format!(
                "cutoff {eps1} outside (0, {omega_max})"
            )));
        }
        let rows = gauss_legendre(nodes, eps1.ln(), omega_max.ln())
            .into_iter()
            .map(|(u, wu)| {
                let w1 = u.exp();
                let r = chart.conformal.factor.inverse_r(w1)?;
                let area = patch_area(r / w1);
                Ok(GridRow {
                    omega1: w1,
                    w_mu: wu * w1 * area,
                    w_nu: wu * area,
                    area,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            nodes,
            eps1,
            omega_max,
            log_omega1: true,
            rows,
            inner: gauss_legendre(nodes, 0.0, 1.0),
        })
    }

    /// Plain Gauss rule on `[lo, hi]` in `ω¹` with a constant angular area.
    pub fn flat(nodes: usize, lo: f64, hi: f64, area: f64) -> Result<Self> {
        if nodes < 2 || !(lo > 0.0 && hi > lo) || !(area > 0.0) {
            return Err(Error::InvalidParameter(
                "flat grid needs 0 < lo < hi, area > 0, nodes >= 2".into(),
            ));
        }
        let rows = gauss_legendre(nodes, lo, hi)
            .into_iter()
            .map(|(w1, w)| GridRow {
                omega1: w1,
                w_mu: w * area,
                w_nu: w * area / w1,
                area,
            })
            .collect();
        Ok(Self {
            nodes,
            eps1: lo,
            omega_max: hi,
            log_omega1: false,
            rows,
            inner: gauss_legendre(nodes, 0.0, 1.0),
        })
    }

    /// Same node count with the cutoff replaced.
    pub fn recut(&self, entry: &CatalogEntry, eps1: f64) -> Result<Self> {
        Self::with_cutoff(entry, self.nodes, eps1)
    }

    pub fn weight(row: &GridRow, measure: Measure) -> f64 {
        match measure {
            Measure::Flat => row.w_mu,
            Measure::Log => row.w_nu,
        }
    }

    /// `Σ w·f(row)`, evaluated in parallel and summed in row order.
    pub fn integrate<F>(&self, measure: Measure, f: F) -> Result<f64>
    where
        F: Fn(usize, &GridRow) -> Result<f64> + Sync,
    {
        let terms: Vec<f64> = self
            .rows
            .par_iter()
            .enumerate()
            .map(|(i, r)| f(i, r).map(|v| v * Self::weight(r, measure)))
            .collect::<Result<_>>()?;
        Ok(pairwise_sum(&terms))
    }

    /// Like [`integrate`](Self::integrate) for integrands given as
    /// `(sign, ln|value|)`.
    pub fn integrate_log<F>(&self, measure: Measure, f: F) -> Result<LogValue>
    where
        F: Fn(usize, &GridRow) -> Result<(f64, f64)> + Sync,
    {
        let terms: Vec<(f64, f64)> = self
            .rows
            .par_iter()
            .enumerate()
            .map(|(i, r)| f(i, r).map(|(s, l)| (s, l + Self::weight(r, measure).ln())))
            .collect::<Result<_>>()?;
        Ok(log_sum(&terms))
    }

    /// `∫ 1` for the chosen measure.
    pub fn volume(&self, measure: Measure) -> f64 {
        pairwise_sum(
            &self
                .rows
                .iter()
                .map(|r| Self::weight(r, measure))
                .collect::<Vec<_>>(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_solutions::default_synthetic;

    #[test]
    fn patch_area_matches_brute_force() {
        for q in [0.3, 1.0, 4.0] {
            let b = f64::atan(q);
            let mut sum = 0.0;
            for (a2, w2) in gauss_legendre(400, -b, b) {
                let rest = q * q - a2.tan().powi(2);
                sum += w2 * 2.0 * rest.max(0.0).sqrt().atan();
            }
            assert!(
                (sum - patch_area(q)).abs() < 1e-4,
                "{q}: {sum} vs {}",
                patch_area(q)
            );
        }
        assert!((patch_area(1e12) - PI * PI).abs() < 1e-9);
    }

    #[test]
    fn log_measure_volume() {
        let e = default_synthetic();
        let g = QuadratureGrid::for_entry(&e, 16, 1e-3).unwrap();
        assert!(g.rows.iter().all(|r| r.w_mu > 0.0 && r.w_nu > 0.0));
        // the area tends to π² where the patch covers the full square
        let rough = PI * PI * (1.0f64 / 1e-3).ln();
        let v = g.volume(Measure::Log);
        assert!(v < rough && v > 0.8 * rough, "{v} vs {rough}");
    }

    #[test]
    fn flat_box_volume() {
        let g = QuadratureGrid::flat(4, 0.5, 1.5, 2.0).unwrap();
        let v = g.integrate(Measure::Flat, |_, _| Ok(1.0)).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
        assert!(QuadratureGrid::flat(1, 0.5, 1.5, 2.0).is_err());
    }
}
