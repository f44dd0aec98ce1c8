use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{make_partition, SplinePartition};
use crate::{Error, Exec, Result};

/// Point evaluations defining one dual functional: `lambda(f) = sum w_m f(x_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSample {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DualSample {
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, w)| w * f(x)).sum()
    }
}

/// Nodes and weights of `lambda_i`.
///
/// `lambda_i` interpolates `f` by splines on a single knot interval inside
/// the support of `N_i` (the middle one) at `k` equally spaced interior nodes
/// and returns the coefficient of `N_i`. On that interval the `k` active basis
/// functions span all polynomials of degree `< k`, so the local collocation
/// matrix is invertible, `lambda_i(N_j) = delta_ij`, and every polynomial of
/// degree `< k` is reproduced.
pub fn dual_sample(part: &SplinePartition, i: isize) -> Result<DualSample> {
    let slot = part.slot(i)?;
    let k = part.k;
    // non-degenerate intervals [knots[mu], knots[mu+1]) inside the support
    let spans: Vec<usize> = (slot..slot + k)
        .filter(|&mu| mu + 1 >= k && mu + 1 < k + part.ell && mu >= k - 1)
        .collect();
    let mu = spans[spans.len() / 2];
    let (a, b) = (part.knots[mu], part.knots[mu + 1]);
    let nodes: Vec<f64> = (0..k)
        .map(|m| a + (b - a) * (m as f64 + 0.5) / k as f64)
        .collect();
    let first = mu + 1 - k;
    let mut colloc = DMatrix::<f64>::zeros(k, k);
    for (m, &x) in nodes.iter().enumerate() {
        let (f0, ders) = part.local_ders(x, 0);
        debug_assert_eq!(f0, first);
        for j in 0..k {
            colloc[(m, j)] = ders[0][j];
        }
    }
    let inv = colloc
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular local collocation matrix".into()))?;
    let row = slot - first;
    let weights = (0..k).map(|m| inv[(row, m)]).collect();
    Ok(DualSample { nodes, weights })
}

/// `lambda_i(f)` for a univariate `f`.
pub fn dual_functional(part: &SplinePartition, i: isize, f: impl Fn(f64) -> f64) -> Result<f64> {
    Ok(dual_sample(part, i)?.apply(f))
}

/// Tensor-product spline coefficients over `I^d`, row-major with the first
/// coordinate varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplineCoeffs {
    pub ell: usize,
    pub k: usize,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl SplineCoeffs {
    pub fn new(part: &SplinePartition, dim: usize, values: Vec<f64>) -> Result<Self> {
        let c = SplineCoeffs {
            ell: part.ell,
            k: part.k,
            dim,
            values,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let n = (self.ell + self.k - 1).pow(self.dim as u32);
        if self.dim == 0 || self.values.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn partition(&self) -> SplinePartition {
        make_partition(self.ell, self.k).expect("validated coefficients")
    }

    /// Multi-index (in `I^d`) of flat position `flat`.
    pub fn multi_index(&self, mut flat: usize) -> Vec<isize> {
        let n = self.ell + self.k - 1;
        let mut idx = vec![0isize; self.dim];
        for v in idx.iter_mut().rev() {
            *v = (flat % n) as isize - self.k as isize + 1;
            flat /= n;
        }
        idx
    }

    /// `D^orders (sum_i c_i N_i)(x)`, one derivative order per coordinate.
    pub fn eval_derivative(&self, x: &[f64], orders: &[usize]) -> Result<f64> {
        if x.len() != self.dim || orders.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len().min(orders.len()),
            });
        }
        let part = self.partition();
        let mut firsts = Vec::with_capacity(self.dim);
        let mut locals = Vec::with_capacity(self.dim);
        for (&xj, &r) in x.iter().zip(orders) {
            if !(0.0..=1.0).contains(&xj) {
                return Err(Error::OutOfDomain(xj));
            }
            if r > 0 && r + 2 > self.k {
                return Err(Error::DerivativeOrder { order: r, k: self.k });
            }
            let (first, ders) = part.local_ders(xj, r);
            firsts.push(first);
            locals.push(ders.into_iter().nth(r).unwrap());
        }
        let n = part.len();
        let k = self.k;
        let mut total = 0.0;
        let mut digits = vec![0usize; self.dim];
        loop {
            let mut flat = 0;
            let mut w = 1.0;
            for j in 0..self.dim {
                flat = flat * n + firsts[j] + digits[j];
                w *= locals[j][digits[j]];
            }
            total += w * self.values[flat];
            // odometer over the k^d active functions
            let mut j = self.dim;
            loop {
                if j == 0 {
                    return Ok(total);
                }
                j -= 1;
                digits[j] += 1;
                if digits[j] < k {
                    break;
                }
                digits[j] = 0;
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_derivative(x, &vec![0; self.dim])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: SplineCoeffs = serde_json::from_str(s)?;
        c.validate()?;
        make_partition(c.ell, c.k)?;
        Ok(c)
    }
}

/// `Qf = sum_i lambda_i(f) N_i` on `[0,1]^d` with tensor-product dual
/// functionals.
pub fn quasi_interpolate<F>(part: &SplinePartition, f: F, dim: usize, exec: Exec) -> Result<SplineCoeffs>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let samples: Vec<DualSample> = part
        .indices()
        .map(|i| dual_sample(part, i))
        .collect::<Result<_>>()?;
    let n = part.len();
    let k = part.k;
    let total = n.pow(dim as u32);
    let values = exec.map_range(total, |mut flat| {
        let mut idx = vec![0usize; dim];
        for v in idx.iter_mut().rev() {
            *v = flat % n;
            flat /= n;
        }
        let mut x = vec![0.0; dim];
        let mut digits = vec![0usize; dim];
        let mut acc = 0.0;
        'outer: loop {
            let mut w = 1.0;
            for j in 0..dim {
                let s = &samples[idx[j]];
                x[j] = s.nodes[digits[j]];
                w *= s.weights[digits[j]];
            }
            acc += w * f(&x);
            let mut j = dim;
            loop {
                if j == 0 {
                    break 'outer;
                }
                j -= 1;
                digits[j] += 1;
                if digits[j] < k {
                    break;
                }
                digits[j] = 0;
            }
        }
        acc
    });
    SplineCoeffs::new(part, dim, values)
}
