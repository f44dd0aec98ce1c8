use serde::{Deserialize, Serialize};

use super::{make_partition, quasi_interpolate};
use crate::stats::log_log_slope;
use crate::{Error, Exec, Result};

/// Univariate test functions with analytic derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFunction {
    /// `sin(2 pi x)`
    Sin2Pi,
    /// `1 - 2x + 3x^2 - x^3`
    Cubic,
    /// `exp(x)`
    Exp,
}

impl RateFunction {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sin2pi" | "sin_2pi" => Ok(RateFunction::Sin2Pi),
            "cubic" => Ok(RateFunction::Cubic),
            "exp" => Ok(RateFunction::Exp),
            _ => Err(Error::UnknownEntry(name.to_string())),
        }
    }

    /// `D^r f(x)`.
    pub fn eval(self, x: f64, r: usize) -> f64 {
        match self {
            RateFunction::Sin2Pi => {
                let w = 2.0 * std::f64::consts::PI;
                let phase = w * x + r as f64 * std::f64::consts::FRAC_PI_2;
                w.powi(r as i32) * phase.sin()
            }
            RateFunction::Cubic => match r {
                0 => 1.0 - 2.0 * x + 3.0 * x * x - x * x * x,
                1 => -2.0 + 6.0 * x - 3.0 * x * x,
                2 => 6.0 - 6.0 * x,
                3 => -6.0,
                _ => 0.0,
            },
            RateFunction::Exp => x.exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRow {
    pub ell: usize,
    /// `max_grid |D^r (f - Qf)|`
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Slope {
    Fitted(f64),
    /// every error is at round-off level: `f` is reproduced
    Exact,
    /// fewer than two errors above round-off
    Insufficient,
}

impl Slope {
    pub fn value(self) -> Option<f64> {
        match self {
            Slope::Fitted(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateStudy {
    pub r: usize,
    pub rows: Vec<RateRow>,
    pub slope: Slope,
    /// errors at or below this are treated as round-off
    pub floor: f64,
}

/// Sup errors of `D^r (f - Qf)` on a uniform grid of `grid` points for each
/// `ell`, with the least-squares slope of `ln error` against `ln ell`.
///
/// `df(x)` must return `D^r f(x)`. Errors below `1e-9 max(1, sup |D^r f|)` are
/// treated as round-off: they are excluded from the fit, and if every error
/// is at that level the slope is reported as [`Slope::Exact`].
pub fn approx_rate_study<F, G>(
    f: F,
    df: G,
    k: usize,
    r: usize,
    ells: &[usize],
    grid: usize,
    exec: Exec,
) -> Result<RateStudy>
where
    F: Fn(f64) -> f64 + Sync + Send,
    G: Fn(f64) -> f64 + Sync + Send,
{
    if ells.len() < 2 {
        return Err(Error::InvalidArgument(
            "a rate study needs at least two values of ell".into(),
        ));
    }
    if ells.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("ell values must be increasing".into()));
    }
    if r > 0 && r + 2 > k {
        return Err(Error::DerivativeOrder { order: r, k });
    }
    if grid < 2 {
        return Err(Error::InvalidArgument("rate grid needs at least 2 points".into()));
    }
    let xs: Vec<f64> = (0..grid).map(|m| m as f64 / (grid - 1) as f64).collect();
    let exact: Vec<f64> = xs.iter().map(|&x| df(x)).collect();
    let scale = exact.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-9 * scale;

    let mut rows = Vec::with_capacity(ells.len());
    for &ell in ells {
        let part = make_partition(ell, k)?;
        let coeffs = quasi_interpolate(&part, |x| f(x[0]), 1, exec)?;
        let errs = exec.map_range(xs.len(), |m| {
            let q = coeffs.eval_derivative(&[xs[m]], &[r]).expect("grid inside [0,1]");
            (exact[m] - q).abs()
        });
        let error = errs.into_iter().fold(0.0, f64::max);
        rows.push(RateRow { ell, error });
    }

    let kept: Vec<&RateRow> = rows.iter().filter(|row| row.error > floor).collect();
    let slope = if kept.is_empty() {
        Slope::Exact
    } else if kept.len() < 2 {
        Slope::Insufficient
    } else {
        let ls: Vec<f64> = kept.iter().map(|row| row.ell as f64).collect();
        let es: Vec<f64> = kept.iter().map(|row| row.error).collect();
        log_log_slope(&ls, &es).map_or(Slope::Insufficient, Slope::Fitted)
    };
    Ok(RateStudy {
        r,
        rows,
        slope,
        floor,
    })
}
