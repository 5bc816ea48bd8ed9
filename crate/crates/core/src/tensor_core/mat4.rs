//! Fixed 4×4 helpers over [`Real`] for chart-level metric algebra.

use super::dual::{Dual, Real};
use super::sym::{invert_symmetric_with, InversionConfig, SymMatrix};
use crate::error::Result;

pub type M4<R> = [[R; 4]; 4];

pub fn zero4<R: Real>() -> M4<R> {
    [[R::cst(0.0); 4]; 4]
}

/// `Jᵀ g J` with `J[α][μ] = ∂xᵅ/∂qᵘ`.
pub fn congruence<R: Real>(j: &M4<R>, g: &M4<R>) -> M4<R> {
    let mut gj = zero4::<R>();
    for a in 0..4 {
        for mu in 0..4 {
            let mut acc = R::cst(0.0);
            for b in 0..4 {
                acc = acc + g[a][b] * j[b][mu];
            }
            gj[a][mu] = acc;
        }
    }
    let mut out = zero4::<R>();
    for mu in 0..4 {
        for nu in mu..4 {
            let mut acc = R::cst(0.0);
            for a in 0..4 {
                acc = acc + j[a][mu] * gj[a][nu];
            }
            out[mu][nu] = acc;
            out[nu][mu] = acc;
        }
    }
    out
}

pub fn scale4<R: Real>(m: &M4<R>, s: R) -> M4<R> {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j] * s))
}

pub fn value4<R: Real>(m: &M4<R>) -> [[f64; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j].value()))
}

pub fn tangent4(m: &M4<Dual>) -> [[f64; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j].du))
}

pub fn to_sym<R: Real>(m: &M4<R>) -> SymMatrix {
    SymMatrix::from_rows(&value4(m))
}

/// Inverse and its directional derivative `dG = −G·dH·G`.
pub fn inverse_with_tangent(
    h: &M4<Dual>,
    cfg: &InversionConfig,
) -> Result<(SymMatrix, [[f64; 4]; 4])> {
    let g = invert_symmetric_with(&to_sym(h), cfg)?;
    let gm = g.to_rows4();
    let dh = tangent4(h);
    let mut t = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            t[i][j] = (0..4).map(|k| dh[i][k] * gm[k][j]).sum();
        }
    }
    let mut dg = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            dg[i][j] = -(0..4).map(|k| gm[i][k] * t[k][j]).sum::<f64>();
        }
    }
    Ok((g, dg))
}

/// Reference inverse by cofactor expansion; kept independent of the LU path.
pub fn cofactor_inverse(a: &[[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
    let minor = |r: usize, c: usize| -> f64 {
        let rows: Vec<usize> = (0..4).filter(|&i| i != r).collect();
        let cols: Vec<usize> = (0..4).filter(|&j| j != c).collect();
        let m = |i: usize, j: usize| a[rows[i]][cols[j]];
        m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
            - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
    };
    let mut cof = [[0.0; 4]; 4];
    for (r, row) in cof.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
            *v = sign * minor(r, c);
        }
    }
    let det: f64 = (0..4).map(|c| a[0][c] * cof[0][c]).sum();
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some(std::array::from_fn(|i| {
        std::array::from_fn(|j| cof[j][i] / det)
    }))
}
