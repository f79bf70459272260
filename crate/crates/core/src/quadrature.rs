//! Composite Gauss–Legendre quadrature for matrix-valued integrands.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::matcore::{max_abs, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Nodes per panel.
    pub order: usize,
    pub initial_panels: usize,
    /// Panels are doubled until the max-abs change is below
    /// `tolerance · max(1, |I|)`.
    pub tolerance: f64,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            order: 8,
            initial_panels: 4,
            tolerance: 1e-10,
            max_panels: 1024,
        }
    }
}

/// A fixed Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pairs: Vec<(f64, f64)>,
}

impl Rule {
    pub fn new(order: usize) -> Result<Self> {
        let degree = NonZeroUsize::new(order)
            .ok_or_else(|| Error::InvalidArgument("quadrature order must be positive".into()))?;
        let pairs = GaussLegendre::new(degree).as_node_weight_pairs().to_vec();
        Ok(Self { pairs })
    }

    /// Applies the rule on `panels` equal subintervals of `[a, b]`.
    pub fn composite<F>(&self, a: f64, b: f64, panels: usize, mut f: F) -> Result<Matrix>
    where
        F: FnMut(f64) -> Result<Matrix>,
    {
        let width = (b - a) / panels as f64;
        let mut acc: Option<Matrix> = None;
        for p in 0..panels {
            let lo = a + width * p as f64;
            let mid = lo + 0.5 * width;
            for &(x, w) in &self.pairs {
                let value = f(mid + 0.5 * width * x)? * (0.5 * width * w);
                match acc.as_mut() {
                    Some(m) => *m += value,
                    None => acc = Some(value),
                }
            }
        }
        acc.ok_or_else(|| Error::InvalidArgument("quadrature needs at least one panel".into()))
    }
}

/// `∫_a^b f(s) ds` for an integrand returning `rows × cols` matrices.
///
/// An empty interval (`a == b`) yields the zero matrix without calling `f`.
/// The integrand should be smooth on `[a, b]`; split at known kinks.
pub fn integrate<F>(
    a: f64,
    b: f64,
    rows: usize,
    cols: usize,
    opts: &QuadratureOptions,
    mut f: F,
) -> Result<Matrix>
where
    F: FnMut(f64) -> Result<Matrix>,
{
    if a == b {
        return Ok(Matrix::zeros(rows, cols));
    }
    let rule = Rule::new(opts.order)?;
    let mut panels = opts.initial_panels.max(1);
    let mut current = rule.composite(a, b, panels, &mut f)?;
    while panels < opts.max_panels {
        panels *= 2;
        let refined = rule.composite(a, b, panels, &mut f)?;
        let change = max_abs(&(&refined - &current));
        current = refined;
        if change <= opts.tolerance * max_abs(&current).max(1.0) {
            break;
        }
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn integrates_smooth_matrix_function() {
        let m = integrate(0.0, 2.0, 2, 1, &QuadratureOptions::default(), |s| {
            Ok(dmatrix![s.exp(); s.cos()])
        })
        .unwrap();
        assert!((m[(0, 0)] - (2f64.exp() - 1.0)).abs() < 1e-13);
        assert!((m[(1, 0)] - 2f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn reversed_and_empty_intervals() {
        let opts = QuadratureOptions::default();
        let fwd = integrate(-1.0, 0.5, 1, 1, &opts, |s| Ok(dmatrix![s * s])).unwrap();
        let back = integrate(0.5, -1.0, 1, 1, &opts, |s| Ok(dmatrix![s * s])).unwrap();
        assert!((fwd[(0, 0)] - 0.375).abs() < 1e-15);
        assert!((fwd[(0, 0)] + back[(0, 0)]).abs() < 1e-15);
        let mut calls = 0;
        let z = integrate(1.0, 1.0, 2, 3, &opts, |_| {
            calls += 1;
            Ok(Matrix::zeros(2, 3))
        })
        .unwrap();
        assert_eq!(z, Matrix::zeros(2, 3));
        assert_eq!(calls, 0);
    }

    #[test]
    fn rejects_zero_order() {
        assert!(Rule::new(0).is_err());
    }
}
