//! Forward-mode automatic differentiation.
//!
//! [`Dual`] carries a value and one tangent. Nesting gives higher derivatives:
//! [`D1`] yields first directional derivatives, [`D2`] mixed second
//! derivatives. User-supplied fields are written once against the [`Real`]
//! trait and evaluated at whichever level an operation needs.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, DVector};

/// Scalar contract for every evaluable field in the crate.
pub trait Real:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn from_f64(x: f64) -> Self;
    /// Innermost real part.
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// A dual number `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

pub type D1 = Dual<f64>;
pub type D2 = Dual<Dual<f64>>;

impl<T: Real> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    pub fn constant(re: T) -> Self {
        Dual { re, eps: T::zero() }
    }

    pub fn variable(re: T) -> Self {
        Dual { re, eps: T::one() }
    }
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = T::one() / o.re;
        Dual::new(
            self.re * inv,
            (self.eps * o.re - self.re * o.eps) * inv * inv,
        )
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Real> AddAssign for Dual<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> SubAssign for Dual<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> MulAssign for Dual<T> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<T: Real> Add<f64> for Dual<T> {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        Dual::new(self.re + o, self.eps)
    }
}

impl<T: Real> Sub<f64> for Dual<T> {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        Dual::new(self.re - o, self.eps)
    }
}

impl<T: Real> Mul<f64> for Dual<T> {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        Dual::new(self.re * o, self.eps * o)
    }
}

impl<T: Real> Div<f64> for Dual<T> {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        Dual::new(self.re / o, self.eps / o)
    }
}

impl<T: Real> Real for Dual<T> {
    fn from_f64(x: f64) -> Self {
        Dual::constant(T::from_f64(x))
    }
    fn value(&self) -> f64 {
        self.re.value()
    }
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.eps * self.re.cos())
    }
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -(self.eps * self.re.sin()))
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.eps * e)
    }
    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, self.eps / (s * 2.0))
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        Dual::new(self.re.powi(n), self.eps * self.re.powi(n - 1) * (n as f64))
    }
}

/// Lifts a point with tangent `dir` to first-order duals.
pub fn seed_d1(x: &[f64], dir: &[f64]) -> Vec<D1> {
    x.iter().zip(dir).map(|(&v, &d)| Dual::new(v, d)).collect()
}

/// Lifts a point to first-order duals with the tangent along coordinate `i`.
pub fn seed_axis_d1(x: &[f64], i: usize) -> Vec<D1> {
    x.iter()
        .enumerate()
        .map(|(j, &v)| Dual::new(v, if i == j { 1.0 } else { 0.0 }))
        .collect()
}

pub fn constant_d1(x: &[f64]) -> Vec<D1> {
    x.iter().map(|&v| Dual::constant(v)).collect()
}

pub fn constant_d2(x: &[f64]) -> Vec<D2> {
    x.iter()
        .map(|&v| Dual::constant(Dual::constant(v)))
        .collect()
}

/// Lifts first-order inputs to second-order ones: the existing tangent goes to
/// the inner slot and coordinate `axis` (if any) seeds the outer slot.
pub fn lift_d1(x: &[D1], axis: Option<usize>) -> Vec<D2> {
    x.iter()
        .enumerate()
        .map(|(j, v)| {
            let outer = if Some(j) == axis { 1.0 } else { 0.0 };
            Dual::new(*v, Dual::constant(outer))
        })
        .collect()
}

/// Drops the tangent of a first-order field value.
pub fn values(x: &[D1]) -> Vec<f64> {
    x.iter().map(|v| v.re).collect()
}

/// Reads the tangent of a first-order field value.
pub fn tangents(x: &[D1]) -> Vec<f64> {
    x.iter().map(|v| v.eps).collect()
}

/// Scalar function of a flat coordinate vector, evaluable at second order.
pub type AdScalarFn = dyn Fn(&[D2]) -> D2 + Send + Sync;

/// Value, gradient and Hessian of a second-order-evaluable scalar function.
pub fn value_gradient_hessian(f: &AdScalarFn, x: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
    let dim = x.len();
    let mut grad = DVector::zeros(dim);
    let mut hess = DMatrix::zeros(dim, dim);
    let mut value = f(&constant_d2(x)).re.re;
    for i in 0..dim {
        for j in i..dim {
            let args: Vec<D2> = x
                .iter()
                .enumerate()
                .map(|(l, &v)| {
                    let inner = if l == i { 1.0 } else { 0.0 };
                    let outer = if l == j { 1.0 } else { 0.0 };
                    Dual::new(Dual::new(v, inner), Dual::new(outer, 0.0))
                })
                .collect();
            let r = f(&args);
            if j == i {
                grad[i] = r.re.eps;
                value = r.re.re;
            }
            hess[(i, j)] = r.eps.eps;
            hess[(j, i)] = r.eps.eps;
        }
    }
    (value, grad, hess)
}

/// Gradient of a second-order-evaluable scalar function (one pass per axis).
pub fn gradient(f: &AdScalarFn, x: &[f64]) -> DVector<f64> {
    let dim = x.len();
    DVector::from_iterator(
        dim,
        (0..dim).map(|i| {
            let args: Vec<D2> = x
                .iter()
                .enumerate()
                .map(|(l, &v)| Dual::constant(Dual::new(v, if l == i { 1.0 } else { 0.0 })))
                .collect();
            f(&args).re.eps
        }),
    )
}

/// Central-difference gradient, the fallback for opaque callbacks.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DVector<f64> {
    let mut xp = x.to_vec();
    DVector::from_iterator(
        x.len(),
        (0..x.len()).map(|i| {
            xp[i] = x[i] + h;
            let fp = f(&xp);
            xp[i] = x[i] - h;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        }),
    )
}

/// Central-difference Hessian of a gradient map.
pub fn fd_jacobian(g: &dyn Fn(&[f64]) -> DVector<f64>, x: &[f64], h: f64) -> DMatrix<f64> {
    let dim = x.len();
    let mut out = DMatrix::zeros(dim, dim);
    let mut xp = x.to_vec();
    for j in 0..dim {
        xp[j] = x[j] + h;
        let gp = g(&xp);
        xp[j] = x[j] - h;
        let gm = g(&xp);
        xp[j] = x[j];
        for i in 0..dim {
            out[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic<T: Real>(x: &[T]) -> T {
        x[0] * x[0] * x[1] + x[1].sin() * 3.0 + x[0].exp()
    }

    #[test]
    fn gradient_and_hessian_match_hand_derivatives() {
        let x = [0.7, -0.4];
        let (v, g, h) = value_gradient_hessian(&|a: &[D2]| cubic(a), &x);
        assert!((v - cubic(&x)).abs() < 1e-15);
        assert!((g[0] - (2.0 * x[0] * x[1] + x[0].exp())).abs() < 1e-14);
        assert!((g[1] - (x[0] * x[0] + 3.0 * x[1].cos())).abs() < 1e-14);
        assert!((h[(0, 0)] - (2.0 * x[1] + x[0].exp())).abs() < 1e-14);
        assert!((h[(0, 1)] - 2.0 * x[0]).abs() < 1e-14);
        assert!((h[(1, 1)] + 3.0 * x[1].sin()).abs() < 1e-14);
    }

    #[test]
    fn ad_gradient_agrees_with_central_differences() {
        let x = [0.3, 1.1];
        let ad = gradient(&|a: &[D2]| cubic(a), &x);
        let fd = fd_gradient(&|a: &[f64]| cubic(a), &x, 1e-5);
        for i in 0..2 {
            assert!((ad[i] - fd[i]).abs() <= 1e-6 * ad[i].abs().max(1.0));
        }
    }

    #[test]
    fn quotient_and_sqrt_rules() {
        let x = Dual::variable(2.0);
        let r = (x * x + 1.0) / x;
        assert!((r.eps - (1.0 - 1.0 / 4.0)).abs() < 1e-15);
        let s = x.sqrt();
        assert!((s.eps - 0.5 / 2f64.sqrt()).abs() < 1e-15);
        let p = x.powi(3);
        assert_eq!(p.eps, 12.0);
        assert_eq!(x.powi(0).eps, 0.0);
    }
}
