//! Exact network gadgets, the derivative-network transform and central
//! finite-difference oracles.

pub(crate) mod builder;
mod derivative;
mod gadgets;

pub use derivative::{derivative_network, second_derivative_network};
pub use gadgets::{
    gadget_identity, gadget_product_nonneg, gadget_product_relu2, gadget_square, GadgetKind,
    GadgetReport, Validity,
};

use crate::{Error, Result};

/// Central difference of order 1 or 2 along coordinate `i` (zero-based).
///
/// ```text
/// order 1: (f(x + h e_i) - f(x - h e_i)) / 2h
/// order 2: (f(x + h e_i) - 2 f(x) + f(x - h e_i)) / h^2
/// ```
pub fn finite_difference<F>(f: F, x: &[f64], i: usize, order: usize, h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if i >= x.len() {
        return Err(Error::BadCoordinate {
            index: i,
            dim: x.len(),
        });
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let mut p = x.to_vec();
    let mut m = x.to_vec();
    p[i] += h;
    m[i] -= h;
    match order {
        1 => Ok((f(&p) - f(&m)) / (2.0 * h)),
        2 => Ok((f(&p) - 2.0 * f(x) + f(&m)) / (h * h)),
        _ => Err(Error::InvalidArgument(format!(
            "finite differences support order 1 or 2, got {order}"
        ))),
    }
}

/// Central difference for the mixed partial `∂²f/∂x_i∂x_j`, `i != j`.
pub fn finite_difference_mixed<F>(f: F, x: &[f64], i: usize, j: usize, h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if i == j {
        return finite_difference(f, x, i, 2, h);
    }
    let n = x.len();
    if i >= n || j >= n {
        return Err(Error::BadCoordinate {
            index: i.max(j),
            dim: n,
        });
    }
    let at = |si: f64, sj: f64| {
        let mut p = x.to_vec();
        p[i] += si * h;
        p[j] += sj * h;
        f(&p)
    };
    Ok((at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_differences() {
        let d1 = finite_difference(|x| x[0] * x[0], &[1.0], 0, 1, 1e-4).unwrap();
        assert!((d1 - 2.0).abs() < 1e-7);
        let d2 = finite_difference(|x| x[0].powi(3), &[1.0], 0, 2, 1e-4).unwrap();
        assert!((d2 - 6.0).abs() < 1e-6);
        let m = finite_difference_mixed(|x| x[0] * x[1] * x[1], &[0.5, 2.0], 0, 1, 1e-4).unwrap();
        assert!((m - 4.0).abs() < 1e-6);
    }

    #[test]
    fn bad_arguments() {
        assert!(finite_difference(|x| x[0], &[1.0], 0, 3, 1e-3).is_err());
        assert!(finite_difference(|x| x[0], &[1.0], 0, 1, 0.0).is_err());
        assert!(finite_difference(|x| x[0], &[1.0], 1, 1, 1e-3).is_err());
    }
}
