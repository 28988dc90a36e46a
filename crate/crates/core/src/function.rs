//! Scalar functions on `⊕^k E` and `⊕^k E*` with first and second derivatives.
//!
//! Points are passed flattened: base coordinates first, then the fiber block
//! in the side's layout (see [`crate::prolongation::WhitneyPoint::flat`] and
//! [`crate::prolongation::CoWhitneyPoint::flat`]).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::ad::{self, AdScalarFn, D2};
use crate::algebroid::DerivativeSource;
use crate::error::Result;

pub trait FieldFunction: Send + Sync {
    fn value(&self, x: &[f64]) -> Result<f64>;

    fn gradient(&self, x: &[f64]) -> Result<DVector<f64>>;

    /// Defaults to central differences of the gradient.
    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let h = 1e-5;
        let dim = x.len();
        let mut out = DMatrix::zeros(dim, dim);
        let mut xp = x.to_vec();
        for j in 0..dim {
            xp[j] = x[j] + h;
            let gp = self.gradient(&xp)?;
            xp[j] = x[j] - h;
            let gm = self.gradient(&xp)?;
            xp[j] = x[j];
            out.set_column(j, &((gp - gm) / (2.0 * h)));
        }
        Ok((&out + out.transpose()) * 0.5)
    }

    fn value_gradient_hessian(&self, x: &[f64]) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        Ok((self.value(x)?, self.gradient(x)?, self.hessian(x)?))
    }

    fn derivative_source(&self) -> DerivativeSource {
        DerivativeSource::Automatic
    }
}

/// A function written once against [`crate::ad::Real`] and evaluated on
/// second-order duals.
#[derive(Clone)]
pub struct AdFunction(Arc<AdScalarFn>);

impl AdFunction {
    pub fn new(f: impl Fn(&[D2]) -> D2 + Send + Sync + 'static) -> Self {
        AdFunction(Arc::new(f))
    }
}

impl FieldFunction for AdFunction {
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok((self.0)(&ad::constant_d2(x)).re.re)
    }

    fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        Ok(ad::gradient(&*self.0, x))
    }

    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(ad::value_gradient_hessian(&*self.0, x).2)
    }

    fn value_gradient_hessian(&self, x: &[f64]) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        Ok(ad::value_gradient_hessian(&*self.0, x))
    }
}

type PlainFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A plain `f64` callback; derivatives by central differences.
#[derive(Clone)]
pub struct OpaqueFunction(Arc<PlainFn>);

impl OpaqueFunction {
    pub const STEP: f64 = 1e-6;

    pub fn new(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        OpaqueFunction(Arc::new(f))
    }
}

impl FieldFunction for OpaqueFunction {
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok((self.0)(x))
    }

    fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        Ok(ad::fd_gradient(&*self.0, x, Self::STEP))
    }

    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        // Second differences need a larger step than the gradient.
        let h = 1e-4;
        let dim = x.len();
        let f = &self.0;
        let mut out = DMatrix::zeros(dim, dim);
        let mut xs = x.to_vec();
        let f0 = f(x);
        for i in 0..dim {
            for j in i..dim {
                let v = if i == j {
                    xs[i] = x[i] + h;
                    let fp = f(&xs);
                    xs[i] = x[i] - h;
                    let fm = f(&xs);
                    xs[i] = x[i];
                    (fp - 2.0 * f0 + fm) / (h * h)
                } else {
                    let mut eval = |si: f64, sj: f64| {
                        xs[i] = x[i] + si * h;
                        xs[j] = x[j] + sj * h;
                        let r = f(&xs);
                        xs[i] = x[i];
                        xs[j] = x[j];
                        r
                    };
                    (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                        / (4.0 * h * h)
                };
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(out)
    }

    fn derivative_source(&self) -> DerivativeSource {
        DerivativeSource::FiniteDifference
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ad::Real;

    fn f<T: Real>(x: &[T]) -> T {
        x[0] * x[1] * x[1] + (x[0] * 0.5).exp()
    }

    #[test]
    fn opaque_matches_ad() {
        let x = [0.3, -0.8];
        let a = AdFunction::new(f);
        let o = OpaqueFunction::new(f);
        let (ga, go) = (a.gradient(&x).unwrap(), o.gradient(&x).unwrap());
        assert!((ga - go).amax() < 1e-8);
        let (ha, ho) = (a.hessian(&x).unwrap(), o.hessian(&x).unwrap());
        assert!((ha - ho).amax() < 1e-5);
        assert_eq!(o.derivative_source(), DerivativeSource::FiniteDifference);
    }

    #[test]
    fn default_hessian_from_gradient() {
        struct G;
        impl FieldFunction for G {
            fn value(&self, x: &[f64]) -> Result<f64> {
                Ok(x[0] * x[0] * x[1])
            }
            fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
                Ok(DVector::from_vec(vec![2.0 * x[0] * x[1], x[0] * x[0]]))
            }
        }
        let h = G.hessian(&[1.5, 2.0]).unwrap();
        assert!((h[(0, 0)] - 4.0).abs() < 1e-8);
        assert!((h[(0, 1)] - 3.0).abs() < 1e-8);
    }
}
