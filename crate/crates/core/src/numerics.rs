//! Shared numerical helpers: deterministic summation, bracketed roots,
//! Gauss–Legendre rules, log-magnitude accumulation and the worker pool.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairwise summation; result depends only on the slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(n.max(1)).expect("n >= 1");
    let rule = GaussLegendre::new(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut out: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (c + h * x, h * w))
        .collect();
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootOptions {
    /// Bisection stops when the bracket is narrower than `xtol·max(1,|x|)`.
    pub xtol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            xtol: 1e-13,
            max_iter: 300,
        }
    }
}

/// Bisection on a sign-changing bracket followed by one safeguarded Newton
/// polish when `df` is supplied.
pub fn bisect_newton(
    mut f: impl FnMut(f64) -> Result<f64>,
    df: Option<&dyn Fn(f64) -> Result<f64>>,
    mut lo: f64,
    mut hi: f64,
    opts: &RootOptions,
) -> Result<f64> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoSignChange(format!(
            "f({lo:e}) = {flo:e}, f({hi:e}) = {fhi:e}"
        )));
    }
    for _ in 0..opts.max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= opts.xtol * mid.abs().max(1.0) || mid == lo || mid == hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    if let Some(df) = df {
        let fx = f(x)?;
        let d = df(x)?;
        if d != 0.0 && d.is_finite() {
            let xn = x - fx / d;
            let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
            if xn >= a && xn <= b {
                if let Ok(fxn) = f(xn) {
                    if fxn.abs() <= fx.abs() {
                        return Ok(xn);
                    }
                }
            }
        }
    }
    Ok(x)
}

/// A real number stored as sign and natural log of magnitude, for sums whose
/// terms overflow `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    pub sign: f64,
    pub ln_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        sign: 0.0,
        ln_abs: f64::NEG_INFINITY,
    };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self {
                sign: x.signum(),
                ln_abs: x.abs().ln(),
            }
        }
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }

    pub fn log10_abs(self) -> f64 {
        self.ln_abs / std::f64::consts::LN_10
    }

    pub fn mul(self, o: LogValue) -> LogValue {
        if self.sign == 0.0 || o.sign == 0.0 {
            return Self::ZERO;
        }
        LogValue {
            sign: self.sign * o.sign,
            ln_abs: self.ln_abs + o.ln_abs,
        }
    }

    pub fn div(self, o: LogValue) -> Result<LogValue> {
        if o.sign == 0.0 {
            return Err(Error::DenominatorVanishes(0.0));
        }
        if self.sign == 0.0 {
            return Ok(Self::ZERO);
        }
        Ok(LogValue {
            sign: self.sign * o.sign,
            ln_abs: self.ln_abs - o.ln_abs,
        })
    }

    /// Relative difference `|self/o − 1|`.
    pub fn rel_diff(self, o: LogValue) -> f64 {
        if self.sign != o.sign {
            return f64::INFINITY;
        }
        if self.sign == 0.0 {
            return 0.0;
        }
        (self.ln_abs - o.ln_abs).exp_m1().abs()
    }
}

/// Signed sum of terms given as `(sign, ln|term|)`, deterministic in order.
pub fn log_sum(terms: &[(f64, f64)]) -> LogValue {
    let peak = terms
        .iter()
        .filter(|t| t.0 != 0.0)
        .map(|t| t.1)
        .fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return LogValue::ZERO;
    }
    let scaled: Vec<f64> = terms
        .iter()
        .map(|&(s, l)| if s == 0.0 { 0.0 } else { s * (l - peak).exp() })
        .collect();
    let total = pairwise_sum(&scaled);
    if total == 0.0 {
        LogValue::ZERO
    } else {
        LogValue {
            sign: total.signum(),
            ln_abs: total.abs().ln() + peak,
        }
    }
}

/// Least-squares slope and intercept of `ln y` against `ln x`.
pub fn power_law_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Worker count from `CONFHOR_THREADS` (unset or 0 means automatic).
pub fn threads_from_env() -> Option<usize> {
    std::env::var("CONFHOR_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Install the global rayon pool honouring `CONFHOR_THREADS`; later calls are
/// no-ops.
pub fn init_thread_pool() {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads_from_env() {
        builder = builder.num_threads(n);
    }
    let _ = builder.build_global();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs: Vec<f64> = (1..=100).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&xs), 5050.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let q = gauss_legendre(5, 0.0, 2.0);
        let v: f64 = q.iter().map(|&(x, w)| w * x.powi(9)).sum();
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-10);
    }

    #[test]
    fn bisection_finds_sqrt2() {
        let r =
            bisect_newton(|x| Ok(x * x - 2.0), None, 0.0, 2.0, &RootOptions::default()).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn log_sum_handles_overflowing_terms() {
        let v = log_sum(&[(1.0, 1000.0), (1.0, 1000.0), (-1.0, 0.0)]);
        assert!((v.ln_abs - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(v.sign, 1.0);
    }

    #[test]
    fn power_law_slope() {
        let xs = [1.0, 0.5, 0.25, 0.125];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        let (p, _) = power_law_fit(&xs, &ys).unwrap();
        assert!((p - 2.0).abs() < 1e-12);
    }
}
