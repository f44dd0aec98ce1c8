//! Term-by-term comparison of the population and empirical losses.
//!
//! With `r = -P + Q + R - F` (`P = sum a_ij u_ij`, `Q = sum b_i u_i`,
//! `R = c u`, `F = f`) the squared residual splits into ten interior terms
//! and the boundary defect into three, so `L = sum_j L_j` and
//! `L_hat = sum_j L_hat_j`.

use serde::Serialize;

use crate::pde::{
    draw_samples, empirical_loss, quadrature_loss, quadrature_rule, residual_parts, EllipticProblem, SampleSet,
    TrialFunction,
};
use crate::stats::{log_log_slope, mean_and_se, rms};
use crate::{Error, Exec, Result};

pub const GAP_LABELS: [&str; 13] = [
    "|Ω| E[P²]",
    "|Ω| E[Q²]",
    "|Ω| E[R²]",
    "|Ω| E[F²]",
    "-2|Ω| E[PQ]",
    "-2|Ω| E[PR]",
    "2|Ω| E[PF]",
    "2|Ω| E[QR]",
    "-2|Ω| E[QF]",
    "-2|Ω| E[RF]",
    "|∂Ω| E[(eu)²]",
    "|∂Ω| E[g²]",
    "-2|∂Ω| E[eug]",
];

/// Quadrature nodes per axis used when no resolution is given.
pub fn default_resolution(dim: usize) -> usize {
    if dim <= 2 {
        513
    } else {
        65
    }
}

fn interior_terms<U: TrialFunction + ?Sized>(problem: &EllipticProblem, u: &U, x: &[f64]) -> Result<[f64; 10]> {
    let s = residual_parts(problem, u, x)?;
    let (p, q, r, f) = (s.p, s.q, s.r, s.f);
    Ok([
        p * p,
        q * q,
        r * r,
        f * f,
        -2.0 * p * q,
        -2.0 * p * r,
        2.0 * p * f,
        2.0 * q * r,
        -2.0 * q * f,
        -2.0 * r * f,
    ])
}

fn boundary_terms<U: TrialFunction + ?Sized>(problem: &EllipticProblem, u: &U, y: &[f64]) -> [f64; 3] {
    let eu = (problem.e)(y) * u.value(y);
    let g = (problem.g)(y);
    [eu * eu, g * g, -2.0 * eu * g]
}

fn weighted_sum<const K: usize>(rows: &[[f64; K]], weight: impl Fn(usize) -> f64) -> [f64; K] {
    let mut acc = [0.0; K];
    for (k, row) in rows.iter().enumerate() {
        let w = weight(k);
        for (a, v) in acc.iter_mut().zip(row) {
            *a += w * v;
        }
    }
    acc
}

/// `(L_j, L_hat_j)` for one trial function.
fn terms<U: TrialFunction + ?Sized>(
    problem: &EllipticProblem,
    u: &U,
    samples: &SampleSet,
    rule: &crate::pde::QuadratureRule,
    exec: Exec,
) -> Result<([f64; 13], [f64; 13])> {
    let collect = |pts: &[Vec<f64>]| {
        exec.map(pts, |x| interior_terms(problem, u, x))
            .into_iter()
            .collect::<Result<Vec<_>>>()
    };
    let qi = collect(&rule.interior)?;
    let si = collect(&samples.interior)?;
    let qb = exec.map(&rule.boundary, |y| boundary_terms(problem, u, y));
    let sb = exec.map(&samples.boundary, |y| boundary_terms(problem, u, y));

    let vol = problem.domain.volume() / si.len() as f64;
    let surf = problem.domain.surface() / sb.len() as f64;
    let pop_i = weighted_sum(&qi, |k| rule.interior_weights[k]);
    let pop_b = weighted_sum(&qb, |k| rule.boundary_weights[k]);
    let emp_i = weighted_sum(&si, |_| vol);
    let emp_b = weighted_sum(&sb, |_| surf);
    let mut pop = [0.0; 13];
    let mut emp = [0.0; 13];
    pop[..10].copy_from_slice(&pop_i);
    pop[10..].copy_from_slice(&pop_b);
    emp[..10].copy_from_slice(&emp_i);
    emp[10..].copy_from_slice(&emp_b);
    Ok((pop, emp))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    /// 1-based term index
    pub j: usize,
    pub label: &'static str,
    /// `max over the collection of |L_j - L_hat_j|`
    pub gap: f64,
    /// `L_j` and `L_hat_j` of the maximising function
    pub population: f64,
    pub empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetGap {
    pub population: f64,
    pub empirical: f64,
    pub gap: f64,
    /// `sum_j |L_j - L_hat_j|` for this function
    pub term_sum: f64,
}

/// The sup over a finite collection, which only bounds the sup over the full
/// network class from below.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    pub per_net: Vec<NetGap>,
    /// `max |L - L_hat|`
    pub total_gap: f64,
    /// `sum_j rows[j].gap`
    pub row_sum: f64,
    /// `|L - L_hat| <= sum_j |L_j - L_hat_j|` for every member, and hence
    /// `total_gap <= row_sum`
    pub triangle_holds: bool,
}

/// Population (quadrature) and empirical values of the thirteen loss terms
/// for each function of `collection`.
pub fn gap_report<U: TrialFunction>(
    problem: &EllipticProblem,
    collection: &[U],
    samples: &SampleSet,
    resolution: Option<usize>,
    exec: Exec,
) -> Result<GapReport> {
    if collection.is_empty() {
        return Err(Error::Empty("gap report needs at least one function"));
    }
    if samples.interior.is_empty() || samples.boundary.is_empty() {
        return Err(Error::Empty("sample set needs interior and boundary points"));
    }
    let rule = quadrature_rule(
        &problem.domain,
        resolution.unwrap_or_else(|| default_resolution(problem.dim())),
    )?;

    let mut rows: Vec<GapRow> = GAP_LABELS
        .iter()
        .enumerate()
        .map(|(j, label)| GapRow {
            j: j + 1,
            label,
            gap: f64::NEG_INFINITY,
            population: 0.0,
            empirical: 0.0,
        })
        .collect();
    let mut per_net = Vec::with_capacity(collection.len());
    let mut triangle_holds = true;
    for u in collection {
        let (pop, emp) = terms(problem, u, samples, &rule, exec)?;
        let mut term_sum = 0.0;
        let mut scale = 0.0f64;
        for (j, row) in rows.iter_mut().enumerate() {
            let g = (pop[j] - emp[j]).abs();
            term_sum += g;
            scale = scale.max(pop[j].abs()).max(emp[j].abs());
            if g > row.gap {
                row.gap = g;
                row.population = pop[j];
                row.empirical = emp[j];
            }
        }
        let population: f64 = pop.iter().sum();
        let empirical: f64 = emp.iter().sum();
        let gap = (population - empirical).abs();
        // the two sums are rounded differently; allow a few ulps of the
        // largest term
        triangle_holds &= gap <= term_sum + 64.0 * f64::EPSILON * scale;
        per_net.push(NetGap {
            population,
            empirical,
            gap,
            term_sum,
        });
    }
    let total_gap = per_net.iter().map(|n| n.gap).fold(0.0, f64::max);
    let row_sum = rows.iter().map(|r| r.gap).sum::<f64>();
    Ok(GapReport {
        rows,
        per_net,
        total_gap,
        row_sum,
        triangle_holds: triangle_holds && total_gap <= row_sum * (1.0 + 1e-12) + f64::MIN_POSITIVE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    /// root mean square of `|L - L_hat|` over the seeds
    pub rms_gap: f64,
    pub mean_gap: f64,
    pub se_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapScaling {
    /// quadrature value of `L(u)`
    pub population: f64,
    pub rows: Vec<ScalingRow>,
    /// least-squares slope of `ln rms_gap` against `ln N`
    pub slope: Option<f64>,
}

/// Generalisation gap `|L(u) - L_hat(u)|` of one fixed function over
/// `seeds` independent sample sets for each `N` in `ns` (with `M = N` unless
/// given). Sample set `s` of size index `i` uses seed
/// `base_seed + i * seeds + s`.
#[allow(clippy::too_many_arguments)]
pub fn gap_scaling<U: TrialFunction + ?Sized>(
    problem: &EllipticProblem,
    u: &U,
    ns: &[usize],
    m: Option<usize>,
    seeds: usize,
    base_seed: u64,
    resolution: Option<usize>,
    exec: Exec,
) -> Result<GapScaling> {
    if ns.len() < 2 {
        return Err(Error::InvalidArgument("gap scaling needs at least two values of N".into()));
    }
    if seeds == 0 || ns.contains(&0) || m == Some(0) {
        return Err(Error::InvalidArgument("seeds, N and M must be positive".into()));
    }
    let population = quadrature_loss(
        problem,
        u,
        resolution.unwrap_or_else(|| default_resolution(problem.dim())),
        exec,
    )?;
    let mut rows = Vec::with_capacity(ns.len());
    for (idx, &n) in ns.iter().enumerate() {
        let mm = m.unwrap_or(n);
        let gaps = exec
            .map_range(seeds, |s| {
                let seed = base_seed.wrapping_add((idx * seeds + s) as u64);
                let samples = draw_samples(&problem.domain, n, mm, seed);
                empirical_loss(problem, u, &samples, Exec::Sequential).map(|l| (l - population).abs())
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let (mean_gap, se_gap) = mean_and_se(&gaps);
        rows.push(ScalingRow {
            n,
            m: mm,
            rms_gap: rms(&gaps),
            mean_gap,
            se_gap,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.rms_gap).collect();
    Ok(GapScaling {
        population,
        slope: log_log_slope(&xs, &ys),
        rows,
    })
}
