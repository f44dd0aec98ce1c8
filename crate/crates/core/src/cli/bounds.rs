use serde::{Deserialize, Serialize};

use super::{fmt_float, write_csv, CommonArgs, Outcome};
use crate::capacity::{
    h_constant, pdim_bound, rademacher_bound, sample_budget, stat_error_bound, BoundInputs, BudgetMode,
};
use crate::pde::manufactured_problem;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    pub depths: Vec<usize>,
    pub widths: Vec<usize>,
    pub eps: Vec<f64>,
    #[serde(rename = "N")]
    pub ns: Vec<f64>,
    pub delta: f64,
    /// input dimensions for the total-error budget
    pub dims: Vec<usize>,
    pub sup_bound: f64,
    pub conv_c: f64,
    /// catalog problem supplying `C1`, `C2` and the domain
    pub problem: String,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            depths: vec![1, 2, 3, 4],
            widths: vec![1, 2, 4, 8, 16],
            eps: vec![0.5, 0.2, 0.1, 0.05],
            ns: vec![1e4, 1e6, 1e8, 1e10, 1e12],
            delta: 0.0,
            dims: vec![1, 2, 3],
            sup_bound: 1.0,
            conv_c: 1.0,
            problem: "poisson1d_sin".into(),
        }
    }
}

const HEADER: [&str; 15] = [
    "mode", "dim", "depth", "width", "eps", "delta", "N", "pdim", "h", "rademacher", "stat_bound", "budget_width",
    "budget_N", "budget_M", "vacuous",
];

fn increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

pub(super) fn run(cfg: &BoundsConfig, args: &CommonArgs) -> Result<Outcome> {
    let problem = manufactured_problem(&cfg.problem)?;
    let d = problem.dim();
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    let mut mono_arch = true;
    let mut mono_n = true;
    let mut mono_eps = true;
    let mut vacuous_rows = 0;

    let mut depths = cfg.depths.clone();
    let mut widths = cfg.widths.clone();
    let mut ns = cfg.ns.clone();
    let mut eps = cfg.eps.clone();
    depths.sort_unstable();
    widths.sort_unstable();
    ns.sort_by(f64::total_cmp);
    // decreasing eps, so budgets should increase along the list
    eps.sort_by(|a, b| b.total_cmp(a));

    for &depth in &depths {
        let row_p: Vec<f64> = widths.iter().map(|&w| pdim_bound(depth, w, cfg.conv_c)).collect::<Result<_>>()?;
        let row_h: Vec<f64> = widths.iter().map(|&w| h_constant(depth, w, cfg.conv_c)).collect::<Result<_>>()?;
        mono_arch &= increasing(&row_p) && increasing(&row_h);
    }
    for &width in &widths {
        let col_p: Vec<f64> = depths.iter().map(|&dd| pdim_bound(dd, width, cfg.conv_c)).collect::<Result<_>>()?;
        let col_h: Vec<f64> = depths.iter().map(|&dd| h_constant(dd, width, cfg.conv_c)).collect::<Result<_>>()?;
        mono_arch &= increasing(&col_p) && increasing(&col_h);
    }

    for &depth in &depths {
        for &width in &widths {
            let pdim = pdim_bound(depth, width, cfg.conv_c)?;
            let h = h_constant(depth, width, cfg.conv_c)?;
            let budgets: Vec<f64> = eps
                .iter()
                .map(|&e| sample_budget(e, cfg.delta, BudgetMode::GivenArch { depth, width }, cfg.conv_c).map(|b| b.n))
                .collect::<Result<_>>()?;
            mono_eps &= increasing(&budgets);
            let mut prev: Option<(f64, f64)> = None;
            for &n in &ns {
                let rad = rademacher_bound(cfg.sup_bound, h, n)?;
                let inputs = BoundInputs {
                    depth,
                    width,
                    sup_bound: cfg.sup_bound,
                    n,
                    m: n,
                    eps: eps.first().copied().unwrap_or(0.1),
                    delta: cfg.delta,
                    conv_c: cfg.conv_c,
                    c1: 0.0,
                    c2: 0.0,
                }
                .with_coefficients(&problem.bounds, d);
                let stat = stat_error_bound(&inputs, &problem.domain)?;
                // both decrease once N exceeds H
                if n > h {
                    if let Some((r0, s0)) = prev {
                        mono_n &= rad.value < r0 && stat.value < s0;
                    }
                    prev = Some((rad.value, stat.value));
                }
                let vacuous = rad.vacuous || stat.vacuous;
                vacuous_rows += usize::from(vacuous);
                for (&e, &budget) in eps.iter().zip(&budgets) {
                    rows.push(vec![
                        "given_arch".into(),
                        d.to_string(),
                        depth.to_string(),
                        width.to_string(),
                        fmt_float(e),
                        fmt_float(cfg.delta),
                        fmt_float(n),
                        fmt_float(pdim),
                        fmt_float(h),
                        fmt_float(rad.value),
                        fmt_float(stat.value),
                        fmt_float(width as f64),
                        fmt_float(budget),
                        fmt_float(budget),
                        u8::from(vacuous).to_string(),
                    ]);
                }
            }
        }
    }

    let mut spot = None;
    for &dim in &cfg.dims {
        let mut prev: Option<f64> = None;
        for &e in &eps {
            let b = sample_budget(e, cfg.delta, BudgetMode::Total { dim }, cfg.conv_c)?;
            if let Some(p) = prev {
                mono_eps &= b.n > p;
            }
            prev = Some(b.n);
            if dim == 1 && e == 0.1 && cfg.delta == 0.0 && cfg.conv_c == 1.0 {
                spot = Some(b);
            }
            rows.push(vec![
                "total".into(),
                dim.to_string(),
                b.depth.to_string(),
                String::new(),
                fmt_float(e),
                fmt_float(cfg.delta),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                fmt_float(b.width),
                fmt_float(b.n),
                fmt_float(b.m),
                "0".into(),
            ]);
        }
    }
    write_csv(&mut out, &args.out, "bounds.csv", &HEADER, &rows)?;

    out.line(format!(
        "{} rows ({} flagged vacuous); C1 = {:.4e}, C2 = {:.4e} from {}",
        rows.len(),
        vacuous_rows,
        problem.bounds.c1(d),
        problem.bounds.c2(),
        cfg.problem
    ));
    out.check("pdim and H increase in depth and width", mono_arch);
    out.check("rademacher and statistical bounds decrease in N beyond H", mono_n);
    out.check("sample budgets increase as eps decreases", mono_eps);
    if let Some(b) = spot {
        out.line(format!("total budget d = 1, eps = 0.1: D = {}, W = {}, N = M = {:e}", b.depth, b.width, b.n));
        let ok = b.depth == 2 && (b.width - 10.0).abs() <= 1e-9 * 10.0 && (b.n - 1e6).abs() <= 1e-9 * 1e6;
        out.check("total budget d = 1, eps = 0.1 is (2, 10, 1e6)", ok);
    }
    Ok(out)
}
