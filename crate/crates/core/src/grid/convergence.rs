//! Observed order of accuracy from residual norms on a family of spacings.

use serde::Serialize;

use super::Norms;
use crate::error::{Error, Result};

/// Norms at or below this count as exactly zero.
pub const EXACT_TOL: f64 = 1e-14;

/// Fitted orders inside this band certify a second-order discretization.
pub const CERTIFIED_BAND: (f64, f64) = (1.7, 2.3);

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub spacings: Vec<f64>,
    pub norms: Vec<Norms>,
    /// Least-squares slope of `log L∞` against `log h`; `None` when exact.
    pub order: Option<f64>,
    pub order_l2: Option<f64>,
    pub exact: bool,
    pub certified: bool,
}

/// Least-squares slope of `log e` against `log h`. `None` if any error is
/// not strictly positive or fewer than two points are given.
pub fn fit_order(h: &[f64], e: &[f64]) -> Option<f64> {
    if h.len() != e.len() || h.len() < 2 || e.iter().any(|&x| x.is_nan() || x <= 0.0) {
        return None;
    }
    let xs: Vec<f64> = h.iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|x| x.ln()).collect();
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Evaluates `residual(h)` on every spacing and fits the order.
pub fn convergence_study(
    h_list: &[f64],
    mut residual: impl FnMut(f64) -> Result<Norms>,
) -> Result<ConvergenceReport> {
    if h_list.len() < 3 {
        return Err(Error::Invalid(
            "a convergence study needs at least 3 spacings".into(),
        ));
    }
    let norms = h_list
        .iter()
        .map(|&h| residual(h))
        .collect::<Result<Vec<_>>>()?;
    let linf: Vec<f64> = norms.iter().map(|n| n.linf).collect();
    let l2: Vec<f64> = norms.iter().map(|n| n.l2).collect();
    let exact = linf.iter().all(|&x| x <= EXACT_TOL);
    let (order, order_l2) = if exact {
        (None, None)
    } else {
        (fit_order(h_list, &linf), fit_order(h_list, &l2))
    };
    let certified = order.is_some_and(|p| (CERTIFIED_BAND.0..=CERTIFIED_BAND.1).contains(&p));
    Ok(ConvergenceReport {
        spacings: h_list.to_vec(),
        norms,
        order,
        order_l2,
        exact,
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
        assert!((fit_order(&h, &e).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_residuals_are_exact() {
        let r = convergence_study(&[0.1, 0.05, 0.025], |_| Ok(Norms::default())).unwrap();
        assert!(r.exact && r.order.is_none() && !r.certified);
    }

    #[test]
    fn needs_three_spacings() {
        assert!(convergence_study(&[0.1, 0.05], |_| Ok(Norms::default())).is_err());
    }

    #[test]
    fn first_order_not_certified() {
        let r = convergence_study(&[0.1, 0.05, 0.025], |h| Ok(Norms { linf: h, l2: h })).unwrap();
        assert!((r.order.unwrap() - 1.0).abs() < 1e-12);
        assert!(!r.certified);
    }
}
