//! Scalar abstraction shared by `f64` and single-tangent dual numbers, so
//! closed forms are written once and differentiated exactly.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Debug
    + Send
    + Sync
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + 'static
{
    fn cst(c: f64) -> Self;
    fn value(self) -> f64;
    /// Apply an opaque function given its value and derivative at `self`.
    fn chain(self, f: f64, df: f64) -> Self;

    fn exp(self) -> Self {
        let e = self.value().exp();
        self.chain(e, e)
    }
    fn expm1(self) -> Self {
        let v = self.value();
        self.chain(v.exp_m1(), v.exp())
    }
    fn ln(self) -> Self {
        let v = self.value();
        self.chain(v.ln(), 1.0 / v)
    }
    fn ln_1p(self) -> Self {
        let v = self.value();
        self.chain(v.ln_1p(), 1.0 / (1.0 + v))
    }
    fn sqrt(self) -> Self {
        let s = self.value().sqrt();
        self.chain(s, 0.5 / s)
    }
    fn sin(self) -> Self {
        let v = self.value();
        self.chain(v.sin(), v.cos())
    }
    fn cos(self) -> Self {
        let v = self.value();
        self.chain(v.cos(), -v.sin())
    }
    fn tan(self) -> Self {
        let t = self.value().tan();
        self.chain(t, 1.0 + t * t)
    }
    fn atan(self) -> Self {
        let v = self.value();
        self.chain(v.atan(), 1.0 / (1.0 + v * v))
    }
    fn cosh(self) -> Self {
        let v = self.value();
        self.chain(v.cosh(), v.sinh())
    }
    fn powi(self, n: i32) -> Self {
        let v = self.value();
        self.chain(v.powi(n), n as f64 * v.powi(n - 1))
    }
    fn powf(self, p: f64) -> Self {
        let v = self.value();
        self.chain(v.powf(p), p * v.powf(p - 1.0))
    }
    fn abs(self) -> Self {
        if self.value() < 0.0 {
            -self
        } else {
            self
        }
    }
    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }
    fn sq(self) -> Self {
        self * self
    }
}

impl Real for f64 {
    #[inline]
    fn cst(c: f64) -> Self {
        c
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn chain(self, f: f64, _df: f64) -> Self {
        f
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn expm1(self) -> Self {
        f64::exp_m1(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn atan(self) -> Self {
        f64::atan(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

/// `re + du·ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Dual {
    pub re: f64,
    pub du: f64,
}

impl Dual {
    pub const fn new(re: f64, du: f64) -> Self {
        Self { re, du }
    }
    pub const fn var(re: f64) -> Self {
        Self { re, du: 1.0 }
    }
}

impl Real for Dual {
    #[inline]
    fn cst(c: f64) -> Self {
        Dual::new(c, 0.0)
    }
    #[inline]
    fn value(self) -> f64 {
        self.re
    }
    #[inline]
    fn chain(self, f: f64, df: f64) -> Self {
        // keep 0·inf from poisoning constant branches
        let du = if self.du == 0.0 { 0.0 } else { df * self.du };
        Dual::new(f, du)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.du + o.du)
    }
}
impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.du - o.du)
    }
}
impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.du * o.re + self.re * o.du)
    }
}
impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.re;
        Dual::new(self.re * inv, (self.du * o.re - self.re * o.du) * inv * inv)
    }
}
impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.du)
    }
}
impl Add<f64> for Dual {
    type Output = Dual;
    fn add(self, c: f64) -> Dual {
        Dual::new(self.re + c, self.du)
    }
}
impl Sub<f64> for Dual {
    type Output = Dual;
    fn sub(self, c: f64) -> Dual {
        Dual::new(self.re - c, self.du)
    }
}
impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, c: f64) -> Dual {
        Dual::new(self.re * c, self.du * c)
    }
}
impl Div<f64> for Dual {
    type Output = Dual;
    fn div(self, c: f64) -> Dual {
        Dual::new(self.re / c, self.du / c)
    }
}

/// Seed a point for differentiation along `axis`.
pub fn seed<const N: usize>(p: &[f64; N], axis: usize, tangent: f64) -> [Dual; N] {
    std::array::from_fn(|i| Dual::new(p[i], if i == axis { tangent } else { 0.0 }))
}

pub fn lift<R: Real, const N: usize>(p: &[f64; N]) -> [R; N] {
    std::array::from_fn(|i| R::cst(p[i]))
}

pub fn values<const N: usize>(p: &[Dual; N]) -> [f64; N] {
    std::array::from_fn(|i| p[i].re)
}
