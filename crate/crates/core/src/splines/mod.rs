//! Uniform-knot B-splines on `[0,1]`, dual functionals, the
//! quasi-interpolation operator, approximation-rate studies and compilation
//! of cubic spline expansions to ReLU³ networks.
//!
//! Basis functions are indexed by `i` in `I = {-k+1, ..., ell-1}`; `N_i` is
//! supported on `[t_i, t_{i+k}]`. Values at `x = 1` are left limits, so every
//! basis function is continuous on the closed interval.

mod compile;
mod dual;
mod rate;

pub use compile::{spline_network, univariate_spline_network};
pub use dual::{dual_functional, dual_sample, quasi_interpolate, DualSample, SplineCoeffs};
pub use rate::{approx_rate_study, RateFunction, RateRow, RateStudy, Slope};

use crate::{Error, Result};

/// Extended uniform partition of `[0,1]` with `k`-fold end knots.
#[derive(Debug, Clone, PartialEq)]
pub struct SplinePartition {
    pub ell: usize,
    pub k: usize,
    /// `knots[m] = t_{m-k+1}`, length `ell + 2k - 1`
    pub knots: Vec<f64>,
}

/// Builds the partition for `ell` subintervals and order `k`.
///
/// `ell < k` is accepted; see [`SplinePartition::boundary_dominated`].
pub fn make_partition(ell: usize, k: usize) -> Result<SplinePartition> {
    if ell == 0 || k == 0 {
        return Err(Error::InvalidArgument(format!(
            "partition needs ell >= 1 and k >= 1 (got ell = {ell}, k = {k})"
        )));
    }
    let knots = (0..ell + 2 * k - 1)
        .map(|m| {
            let t = m as isize - k as isize + 1;
            (t.clamp(0, ell as isize) as f64) / ell as f64
        })
        .collect();
    Ok(SplinePartition { ell, k, knots })
}

impl SplinePartition {
    /// Number of basis functions, `ell + k - 1`.
    pub fn len(&self) -> usize {
        self.ell + self.k - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Every basis function touches an endpoint when `ell < k`.
    pub fn boundary_dominated(&self) -> bool {
        self.ell < self.k
    }

    pub fn indices(&self) -> std::ops::Range<isize> {
        -(self.k as isize) + 1..self.ell as isize
    }

    /// Knot `t_j` for `j` in `-k+1 ..= ell+k-1`.
    pub fn t(&self, j: isize) -> f64 {
        self.knots[(j + self.k as isize - 1) as usize]
    }

    /// Position of `i` within `I`, i.e. `i + k - 1`.
    pub fn slot(&self, i: isize) -> Result<usize> {
        if !self.indices().contains(&i) {
            return Err(Error::InvalidArgument(format!(
                "basis index {i} outside {:?}",
                self.indices()
            )));
        }
        Ok((i + self.k as isize - 1) as usize)
    }

    /// Knot index `mu` (into `knots`) of the interval `[knots[mu], knots[mu+1])`
    /// containing `x`; `x = 1` maps to the last non-degenerate interval.
    fn span(&self, x: f64) -> usize {
        let cell = ((x * self.ell as f64).floor() as usize).min(self.ell - 1);
        cell + self.k - 1
    }

    /// Derivatives `0..=n` (`n <= k-1`) of the `k` basis functions that are
    /// nonzero on the interval containing `x`. Returns the slot of the first
    /// of them and `ders[r][j]` for slot `first + j`.
    pub(crate) fn local_ders(&self, x: f64, n: usize) -> (usize, Vec<Vec<f64>>) {
        let p = self.k - 1;
        let mu = self.span(x);
        let u = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - u[mu + 1 - j];
            right[j] = u[mu + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let n = n.min(p);
        let mut ders = vec![vec![0.0; p + 1]; n + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0, 1);
            a[0][0] = 1.0;
            for kk in 1..=n {
                let mut d = 0.0;
                let rk = r as isize - kk as isize;
                let pk = p - kk;
                if rk >= 0 {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize { kk - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][kk] = -a[s1][kk - 1] / ndu[pk + 1][r];
                    d += a[s2][kk] * ndu[r][pk];
                }
                ders[kk][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = p as f64;
        for (kk, row) in ders.iter_mut().enumerate().skip(1) {
            for v in row.iter_mut() {
                *v *= fac;
            }
            fac *= (p - kk) as f64;
        }
        (mu + 1 - self.k, ders)
    }

    fn check_x(x: f64) -> Result<()> {
        if (0.0..=1.0).contains(&x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain(x))
        }
    }

    /// Values of all `ell + k - 1` basis functions at `x`.
    pub fn eval_all(&self, x: f64) -> Result<Vec<f64>> {
        Self::check_x(x)?;
        let (first, ders) = self.local_ders(x, 0);
        let mut out = vec![0.0; self.len()];
        out[first..first + self.k].copy_from_slice(&ders[0]);
        Ok(out)
    }
}

/// `N_{ell,i}(x)` by the Cox–de Boor recursion.
pub fn bspline_eval(part: &SplinePartition, i: isize, x: f64) -> Result<f64> {
    bspline_derivative(part, i, 0, x)
}

/// `D^r N_{ell,i}(x)` for `0 <= r <= k - 2`.
pub fn bspline_derivative(part: &SplinePartition, i: isize, r: usize, x: f64) -> Result<f64> {
    if r + 2 > part.k && r > 0 {
        return Err(Error::DerivativeOrder { order: r, k: part.k });
    }
    let slot = part.slot(i)?;
    SplinePartition::check_x(x)?;
    let (first, ders) = part.local_ders(x, r);
    Ok(if (first..first + part.k).contains(&slot) {
        ders[r][slot - first]
    } else {
        0.0
    })
}

/// `prod_j N_{ell,i_j}(x_j)`.
pub fn tensor_bspline_eval(part: &SplinePartition, multi_index: &[isize], x: &[f64]) -> Result<f64> {
    if multi_index.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: multi_index.len(),
            got: x.len(),
        });
    }
    let mut prod = 1.0;
    for (&i, &xj) in multi_index.iter().zip(x) {
        prod *= bspline_eval(part, i, xj)?;
    }
    Ok(prod)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Divided-difference definition `(t_{i+k} - t_i) [t_i..t_{i+k}] (. - x)_+^{k-1}`
    /// on distinct knots.
    fn divided_difference_bspline(knots: &[f64], x: f64) -> f64 {
        let k = knots.len() - 1;
        let mut vals: Vec<f64> = knots
            .iter()
            .map(|&t| (t - x).max(0.0).powi(k as i32 - 1))
            .collect();
        for level in 1..=k {
            for j in 0..=k - level {
                vals[j] = (vals[j + 1] - vals[j]) / (knots[j + level] - knots[j]);
            }
        }
        (knots[k] - knots[0]) * vals[0]
    }

    #[test]
    fn partition_shapes() {
        let p = make_partition(4, 4).unwrap();
        assert_eq!(p.knots.len(), 11);
        assert_eq!(p.indices(), -3..4);
        assert_eq!(p.len(), 7);
        let p = make_partition(1, 1).unwrap();
        assert_eq!(p.knots, vec![0.0, 1.0]);
        assert_eq!(p.len(), 1);
        assert_eq!(make_partition(8, 4).unwrap().len(), 11);
        assert!(make_partition(2, 4).unwrap().boundary_dominated());
        assert!(make_partition(0, 4).is_err());
        let p = make_partition(4, 4).unwrap();
        assert_eq!(p.t(-3), 0.0);
        assert_eq!(p.t(2), 0.5);
        assert_eq!(p.t(7), 1.0);
    }

    #[test]
    fn central_value_and_divided_differences() {
        let p = make_partition(4, 4).unwrap();
        assert!((bspline_eval(&p, 0, 0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let knots: Vec<f64> = (0..5).map(|j| p.t(j)).collect();
        for m in 0..=40 {
            let x = m as f64 / 40.0;
            let want = divided_difference_bspline(&knots, x);
            assert!((bspline_eval(&p, 0, x).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn support_and_partition_of_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (ell, k) in [(4, 4), (7, 3), (3, 4), (5, 1), (6, 2)] {
            let p = make_partition(ell, k).unwrap();
            for _ in 0..200 {
                let x: f64 = rng.gen_range(0.0..=1.0);
                let mut sum = 0.0;
                for i in p.indices() {
                    let v = bspline_eval(&p, i, x).unwrap();
                    let inside = x > p.t(i) && x < p.t(i + k as isize);
                    if inside {
                        assert!(v > 0.0);
                    } else if x != 1.0 {
                        assert_eq!(v, 0.0);
                    }
                    sum += v;
                }
                assert!((sum - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn continuous_at_right_end() {
        let p = make_partition(4, 4).unwrap();
        assert_eq!(bspline_eval(&p, 3, 1.0).unwrap(), 1.0);
        let near = bspline_eval(&p, 2, 1.0 - 1e-12).unwrap();
        assert!((bspline_eval(&p, 2, 1.0).unwrap() - near).abs() < 1e-10);
        assert!(bspline_eval(&p, 0, 1.5).is_err());
    }

    #[test]
    fn derivative_bounds_and_sum() {
        let p = make_partition(8, 4).unwrap();
        let ell = 8.0f64;
        for r in 0..=2usize {
            let interior_bound = 2f64.powi(r as i32) * ell.powi(r as i32);
            // from the derivative recursion: 2^(r-1) (k-1)!/(k-1-r)! ell^r for r >= 1
            let falling = [1.0, 3.0, 12.0][r];
            let global_bound = falling * ell.powi(r as i32);
            for m in 0..=1000 {
                let x = m as f64 / 1000.0;
                let mut sum = 0.0;
                for i in p.indices() {
                    let v = bspline_derivative(&p, i, r, x).unwrap();
                    assert!(v.abs() <= global_bound * (1.0 + 1e-12));
                    if i >= 0 && i + 4 <= 8 {
                        assert!(v.abs() <= interior_bound);
                    }
                    sum += v;
                }
                let want = if r == 0 { 1.0 } else { 0.0 };
                assert!((sum - want).abs() < 1e-9);
            }
        }
        // the end splines exceed 2^r ell^r: (1 - ell x)^3 at x = 0, and N_{-2}''
        // reaches 9 ell^2 there
        assert!((bspline_derivative(&p, -3, 1, 0.0).unwrap() + 24.0).abs() < 1e-12);
        assert!((bspline_derivative(&p, -3, 2, 0.0).unwrap() - 384.0).abs() < 1e-9);
        assert!((bspline_derivative(&p, -2, 2, 0.0).unwrap().abs() - 576.0).abs() < 1e-9);
        assert!(matches!(
            bspline_derivative(&p, 0, 3, 0.5),
            Err(Error::DerivativeOrder { order: 3, k: 4 })
        ));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let p = make_partition(5, 4).unwrap();
        for i in p.indices() {
            for &x in &[0.13, 0.37, 0.51, 0.88] {
                let h = 1e-6;
                let fd = (bspline_eval(&p, i, x + h).unwrap() - bspline_eval(&p, i, x - h).unwrap())
                    / (2.0 * h);
                assert!((bspline_derivative(&p, i, 1, x).unwrap() - fd).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn tensor_products() {
        let p = make_partition(4, 4).unwrap();
        let v = tensor_bspline_eval(&p, &[0, 0], &[0.5, 0.5]).unwrap();
        assert!((v - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(tensor_bspline_eval(&p, &[0, 3], &[0.5, 0.1]).unwrap(), 0.0);
        assert_eq!(
            tensor_bspline_eval(&p, &[1], &[0.3]).unwrap(),
            bspline_eval(&p, 1, 0.3).unwrap()
        );
    }
}
