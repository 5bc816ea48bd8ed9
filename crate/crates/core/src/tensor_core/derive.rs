use serde::{Deserialize, Serialize};

use super::dual::Dual;
use crate::error::{Error, Result};

/// Axis-aligned validity box. Bounds are open unless the matching `closed_*`
/// flag is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub closed_lo: Vec<bool>,
    pub closed_hi: Vec<bool>,
}

impl DomainBox {
    pub fn open(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        let n = lo.len();
        assert_eq!(n, hi.len());
        Self {
            lo,
            hi,
            closed_lo: vec![false; n],
            closed_hi: vec![false; n],
        }
    }

    pub fn unbounded(dim: usize) -> Self {
        Self::open(vec![f64::NEG_INFINITY; dim], vec![f64::INFINITY; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter().enumerate().all(|(i, &x)| {
                let above = if self.closed_lo[i] {
                    x >= self.lo[i]
                } else {
                    x > self.lo[i]
                };
                let below = if self.closed_hi[i] {
                    x <= self.hi[i]
                } else {
                    x < self.hi[i]
                };
                above && below
            })
    }
}

/// A point-evaluable scalar with a declared domain.
pub trait ScalarField: Sync {
    fn domain(&self) -> &DomainBox;
    fn eval(&self, p: &[f64]) -> Result<f64>;
    /// Exact directional derivative along `axis`, when the field supports it.
    fn eval_dual(&self, _p: &[f64], _axis: usize) -> Option<Result<Dual>> {
        None
    }

    fn eval_checked(&self, p: &[f64]) -> Result<f64> {
        if !self.domain().contains(p) {
            return Err(Error::OutOfRange(format!("{p:?} outside field domain")));
        }
        self.eval(p)
    }
}

/// Closure-backed field, optionally with a dual evaluator.
pub struct FnField<F, D = fn(&[f64], usize) -> Result<Dual>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    D: Fn(&[f64], usize) -> Result<Dual> + Sync,
{
    domain: DomainBox,
    f: F,
    dual: Option<D>,
}

impl<F> FnField<F>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    pub fn new(domain: DomainBox, f: F) -> Self {
        Self {
            domain,
            f,
            dual: None,
        }
    }
}

impl<F, D> FnField<F, D>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    D: Fn(&[f64], usize) -> Result<Dual> + Sync,
{
    pub fn with_dual(domain: DomainBox, f: F, dual: D) -> Self {
        Self {
            domain,
            f,
            dual: Some(dual),
        }
    }
}

impl<F, D> ScalarField for FnField<F, D>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    D: Fn(&[f64], usize) -> Result<Dual> + Sync,
{
    fn domain(&self) -> &DomainBox {
        &self.domain
    }
    fn eval(&self, p: &[f64]) -> Result<f64> {
        (self.f)(p)
    }
    fn eval_dual(&self, p: &[f64], axis: usize) -> Option<Result<Dual>> {
        self.dual.as_ref().map(|d| d(p, axis))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    CentralDifference,
    DualNumber,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeConfig {
    pub scheme: Scheme,
    /// Step is `base_step · max(1, |p[axis]|)`.
    pub base_step: f64,
    pub richardson_levels: u32,
    /// Fall back to a second-order one-sided stencil near the domain edge.
    pub one_sided_fallback: bool,
}

impl DerivativeConfig {
    pub fn central() -> Self {
        Self {
            scheme: Scheme::CentralDifference,
            base_step: 1e-5,
            richardson_levels: 2,
            one_sided_fallback: false,
        }
    }

    pub fn dual() -> Self {
        Self {
            scheme: Scheme::DualNumber,
            ..Self::central()
        }
    }
}

impl Default for DerivativeConfig {
    fn default() -> Self {
        Self::central()
    }
}

pub fn derive(f: &dyn ScalarField, p: &[f64], axis: usize, cfg: &DerivativeConfig) -> Result<f64> {
    if cfg.base_step <= 0.0 {
        return Err(Error::InvalidParameter("base_step must be positive".into()));
    }
    match cfg.scheme {
        Scheme::DualNumber => match f.eval_dual(p, axis) {
            Some(r) => r.map(|d| d.du),
            None => Err(Error::DualUnavailable),
        },
        Scheme::CentralDifference => central(f, p, axis, cfg),
    }
}

fn central(f: &dyn ScalarField, p: &[f64], axis: usize, cfg: &DerivativeConfig) -> Result<f64> {
    let h0 = cfg.base_step * p[axis].abs().max(1.0);
    let dom = f.domain();
    let mut q = p.to_vec();
    let mut at = |x: f64| -> Result<f64> {
        q[axis] = x;
        if !dom.contains(&q) {
            return Err(Error::DomainExceeded { axis });
        }
        f.eval(&q)
    };
    let levels = cfg.richardson_levels as usize;
    let widest = p[axis] + h0;
    let narrowest = p[axis] - h0;
    let mut probe = p.to_vec();
    probe[axis] = widest;
    let fits_hi = dom.contains(&probe);
    probe[axis] = narrowest;
    let fits_lo = dom.contains(&probe);

    let stencil: Box<dyn Fn(&mut dyn FnMut(f64) -> Result<f64>, f64) -> Result<f64>> = if fits_hi
        && fits_lo
    {
        Box::new(move |g, h| Ok((g(p[axis] + h)? - g(p[axis] - h)?) / (2.0 * h)))
    } else if cfg.one_sided_fallback {
        let dir = if fits_hi { 1.0 } else { -1.0 };
        Box::new(move |g, h| {
            let h = dir * h;
            Ok((-3.0 * g(p[axis])? + 4.0 * g(p[axis] + h)? - g(p[axis] + 2.0 * h)?) / (2.0 * h))
        })
    } else {
        return Err(Error::DomainExceeded { axis });
    };

    // Richardson tableau on h, h/2, h/4, …; both stencils are O(h²).
    let mut table: Vec<f64> = Vec::with_capacity(levels + 1);
    for k in 0..=levels {
        table.push(stencil(&mut at, h0 / f64::powi(2.0, k as i32))?);
    }
    for lvl in 1..=levels {
        let factor = 4f64.powi(lvl as i32);
        for k in (lvl..=levels).rev() {
            table[k] = (factor * table[k] - table[k - 1]) / (factor - 1.0);
        }
    }
    Ok(table[levels])
}
