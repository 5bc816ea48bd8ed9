use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric matrix in packed lower-triangular storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim])
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Symmetrizes `(a + aᵀ)/2`.
    pub fn from_rows<const N: usize>(a: &[[f64; N]; N]) -> Self {
        let mut m = Self::zeros(N);
        for i in 0..N {
            for j in 0..=i {
                m.set(i, j, 0.5 * (a[i][j] + a[j][i]));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[packed(i, j)] = v;
    }

    pub fn to_rows4(&self) -> [[f64; 4]; 4] {
        assert_eq!(
            self.dim, 4,
            "to_rows4 on a {}x{} matrix",
            self.dim, self.dim
        );
        std::array::from_fn(|i| std::array::from_fn(|j| self.get(i, j)))
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn mul(&self, other: &SymMatrix) -> DMatrix<f64> {
        self.to_dmatrix() * other.to_dmatrix()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    /// IllConditioned above this `‖m‖∞·‖m⁻¹‖∞`.
    pub condition_cap: f64,
    /// Singular when the smallest LU pivot is below this fraction of ‖m‖∞.
    pub pivot_tol: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            condition_cap: 1e12,
            pivot_tol: 1e-14,
        }
    }
}

pub fn invert_symmetric(m: &SymMatrix) -> Result<SymMatrix> {
    invert_symmetric_with(m, &InversionConfig::default())
}

pub fn invert_symmetric_with(m: &SymMatrix, cfg: &InversionConfig) -> Result<SymMatrix> {
    let a = m.to_dmatrix();
    let scale = m.norm_inf();
    if !scale.is_finite() {
        return Err(Error::Singular { pivot: f64::NAN });
    }
    if scale == 0.0 {
        return Err(Error::Singular { pivot: 0.0 });
    }
    let lu = a.lu();
    let u = lu.u();
    let pivot = (0..m.dim)
        .map(|i| u[(i, i)].abs())
        .fold(f64::INFINITY, f64::min);
    if !(pivot > cfg.pivot_tol * scale) {
        return Err(Error::Singular { pivot });
    }
    let inv = lu.try_inverse().ok_or(Error::Singular { pivot })?;
    let mut g = SymMatrix::zeros(m.dim);
    for i in 0..m.dim {
        for j in 0..=i {
            g.set(i, j, 0.5 * (inv[(i, j)] + inv[(j, i)]));
        }
    }
    let estimate = scale * g.norm_inf();
    if !(estimate <= cfg.condition_cap) {
        return Err(Error::IllConditioned {
            estimate,
            cap: cfg.condition_cap,
        });
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub neg: usize,
    pub pos: usize,
    pub zero: usize,
}

impl Signature {
    pub fn is_lorentzian(&self) -> bool {
        self.neg == 1 && self.zero == 0
    }
}

/// Eigenvalue sign counts; near-zero means `|λ| ≤ rel_threshold·‖m‖∞`.
pub fn signature(m: &SymMatrix, rel_threshold: f64) -> Signature {
    let eig = SymmetricEigen::new(m.to_dmatrix());
    let cut = rel_threshold * m.norm_inf();
    let mut s = Signature {
        neg: 0,
        pos: 0,
        zero: 0,
    };
    for &l in eig.eigenvalues.iter() {
        if l.abs() <= cut {
            s.zero += 1;
        } else if l < 0.0 {
            s.neg += 1;
        } else {
            s.pos += 1;
        }
    }
    s
}

pub const NEAR_ZERO_EIGEN: f64 = 1e-9;

/// `‖m·g − I‖∞ / max(1, ‖m‖∞‖g‖∞)`.
pub fn inverse_residual(m: &SymMatrix, g: &SymMatrix) -> f64 {
    let p = m.mul(g);
    let n = m.dim();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let row: f64 = (0..n)
            .map(|j| (p[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
            .sum();
        worst = worst.max(row);
    }
    worst / (m.norm_inf() * g.norm_inf()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_storage_is_symmetric() {
        let mut m = SymMatrix::zeros(4);
        m.set(3, 1, 7.0);
        assert_eq!(m.get(1, 3), 7.0);
    }

    #[test]
    fn identity_and_minkowski_are_self_inverse() {
        let id = SymMatrix::identity(4);
        assert_eq!(invert_symmetric(&id).unwrap(), id);
        let eta = SymMatrix::diag(&[-1.0, 1.0, 1.0, 1.0]);
        assert_eq!(invert_symmetric(&eta).unwrap(), eta);
    }

    #[test]
    fn singular_and_ill_conditioned_are_reported() {
        let s = SymMatrix::diag(&[0.0, 1.0, 1.0, 1.0]);
        assert!(matches!(invert_symmetric(&s), Err(Error::Singular { .. })));
        let ill = SymMatrix::diag(&[1e-13, 1.0, 1.0, 1.0]);
        assert!(matches!(
            invert_symmetric(&ill),
            Err(Error::IllConditioned { .. }) | Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn signature_counts() {
        let eta = SymMatrix::diag(&[-1.0, 1.0, 1.0, 1.0]);
        assert_eq!(
            signature(&eta, NEAR_ZERO_EIGEN),
            Signature {
                neg: 1,
                pos: 3,
                zero: 0
            }
        );
        let deg = SymMatrix::diag(&[0.0, 1.0, 1.0, 1.0]);
        assert_eq!(
            signature(&deg, NEAR_ZERO_EIGEN),
            Signature {
                neg: 0,
                pos: 3,
                zero: 1
            }
        );
    }
}
