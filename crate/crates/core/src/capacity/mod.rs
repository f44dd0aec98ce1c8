//! Empirical Rademacher complexity, the 13-term loss-gap table and the
//! capacity bound calculators.

mod bounds;
mod gap;

pub use bounds::{
    chaining_bound, chaining_integral, covering_bound, h_constant, pdim_bound, polynomial_sign_bound,
    rademacher_bound, sample_budget, stat_error_bound, BoundInputs, Budget, BudgetMode, CoveringForm,
    RademacherBound, StatBound, CONV_C,
};
pub use gap::{
    default_resolution, gap_report, gap_scaling, GapReport, GapRow, GapScaling, NetGap, ScalingRow, GAP_LABELS,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::stats::mean_and_se;
use crate::{Error, Exec, Result};

/// Largest point count accepted by [`exact_rademacher`].
pub const MAX_EXACT_POINTS: usize = 20;

/// `rows x cols` values; row `i` is one function evaluated on the shared
/// points.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionTable {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl FunctionTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(Error::Empty("function table needs a row and a column"));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                got: r.len(),
            });
        }
        let values: Vec<f64> = rows.concat();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("function table entries must be finite".into()));
        }
        Ok(FunctionTable {
            rows: rows.len(),
            cols,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scaled(&self, c: f64) -> Self {
        FunctionTable {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    /// Multiplies column `k` by `w[k]`.
    pub fn column_scaled(&self, w: &[f64]) -> Result<Self> {
        if w.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: w.len(),
            });
        }
        let values = self
            .values
            .chunks(self.cols)
            .flat_map(|r| r.iter().zip(w).map(|(a, b)| a * b))
            .collect();
        Ok(FunctionTable {
            values,
            ..self.clone()
        })
    }

    /// `max_i (1/n) sum_k sigma_k a_ik` for the sign vector whose bit `k`
    /// set means `sigma_k = -1`.
    fn sup_correlation(&self, signs: impl Fn(usize) -> bool) -> f64 {
        let n = self.cols as f64;
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .enumerate()
                    .map(|(k, a)| if signs(k) { -a } else { *a })
                    .sum::<f64>()
                    / n
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `2^{-n} sum_sigma max_i (1/n) sum_k sigma_k a_ik` by enumerating every
/// sign vector.
pub fn exact_rademacher(table: &FunctionTable, exec: Exec) -> Result<f64> {
    let n = table.cols;
    if n > MAX_EXACT_POINTS {
        return Err(Error::TooManyPoints(n));
    }
    let count = 1usize << n;
    let total = exec.chunked_sum(count, 4096, |s| table.sup_correlation(|k| s >> k & 1 == 1));
    Ok(total / count as f64)
}

/// Monte-Carlo estimate of the Rademacher complexity and its standard error.
/// The sign vectors are drawn up front from one ChaCha8 stream.
pub fn mc_rademacher(table: &FunctionTable, draws: usize, seed: u64, exec: Exec) -> Result<(f64, f64)> {
    if draws < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 draws, got {draws}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = table.cols;
    let signs: Vec<bool> = (0..draws * n).map(|_| rng.gen::<bool>()).collect();
    let sups = exec.map_range(draws, |t| {
        let s = &signs[t * n..(t + 1) * n];
        table.sup_correlation(|k| s[k])
    });
    Ok(mean_and_se(&sups))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(rows: &[&[f64]]) -> FunctionTable {
        FunctionTable::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn documented_values() {
        let t = table(&[&[1.0, 1.0], &[-1.0, -1.0]]);
        assert_eq!(exact_rademacher(&t, Exec::Sequential).unwrap(), 0.5);
        assert_eq!(exact_rademacher(&table(&[&[0.0; 5]]), Exec::Sequential).unwrap(), 0.0);
        assert_eq!(exact_rademacher(&table(&[&[1.0]]), Exec::Sequential).unwrap(), 0.0);
        let (m, se) = mc_rademacher(&table(&[&[0.0; 5]]), 100, 1, Exec::Sequential).unwrap();
        assert_eq!((m, se), (0.0, 0.0));
    }

    #[test]
    fn rejections() {
        assert!(matches!(
            exact_rademacher(&table(&[&[0.0; 21]]), Exec::Sequential),
            Err(Error::TooManyPoints(21))
        ));
        assert!(mc_rademacher(&table(&[&[1.0]]), 99, 0, Exec::Sequential).is_err());
        assert!(FunctionTable::new(vec![]).is_err());
        assert!(FunctionTable::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(FunctionTable::new(vec![vec![f64::NAN]]).is_err());
    }

    #[test]
    fn strategies_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = FunctionTable::new(
            (0..6).map(|_| (0..14).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect()).collect(),
        )
        .unwrap();
        let a = exact_rademacher(&t, Exec::Sequential).unwrap();
        let b = exact_rademacher(&t, Exec::Parallel).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let a = mc_rademacher(&t, 500, 9, Exec::Sequential).unwrap();
        let b = mc_rademacher(&t, 500, 9, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    fn arb_table(rows: usize, cols: usize) -> impl Strategy<Value = FunctionTable> {
        proptest::collection::vec(proptest::collection::vec(-2.0..2.0f64, cols), rows)
            .prop_map(|v| FunctionTable::new(v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn positive_homogeneity(t in arb_table(4, 6), c in prop::sample::select(vec![0.0, 0.5, 2.0])) {
            let r = exact_rademacher(&t, Exec::Sequential).unwrap();
            let rc = exact_rademacher(&t.scaled(c), Exec::Sequential).unwrap();
            prop_assert!((rc - c * r).abs() <= 1e-12);
        }

        #[test]
        fn multiplier_contraction(
            t in arb_table(4, 6),
            w in proptest::collection::vec(-1.0..1.0f64, 6),
            b in 0.1..3.0f64,
        ) {
            let w: Vec<f64> = w.iter().map(|v| v * b).collect();
            let r = exact_rademacher(&t, Exec::Sequential).unwrap();
            let rw = exact_rademacher(&t.column_scaled(&w).unwrap(), Exec::Sequential).unwrap();
            prop_assert!(rw <= b * r + 1e-12);
        }

        #[test]
        fn mc_agrees_with_enumeration(t in arb_table(5, 8), seed in 0u64..1000) {
            let exact = exact_rademacher(&t, Exec::Sequential).unwrap();
            let (m, se) = mc_rademacher(&t, 4000, seed, Exec::Sequential).unwrap();
            prop_assert!((m - exact).abs() <= 4.0 * se + 1e-12);
        }
    }
}
