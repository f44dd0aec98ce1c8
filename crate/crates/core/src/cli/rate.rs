use serde::{Deserialize, Serialize};

use super::{fmt_float, fmt_opt, write_csv, CommonArgs, Outcome};
use crate::splines::{approx_rate_study, RateFunction, Slope};
use crate::{Error, Exec, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApproxRateConfig {
    /// `sin2pi`, `cubic` or `exp`
    pub function: String,
    pub k: usize,
    pub ells: Vec<usize>,
    /// uniform evaluation points on `[0,1]`
    pub grid: usize,
    pub orders: Vec<usize>,
    /// a fitted slope for `orders[i]` must be `<= thresholds[i]`
    pub thresholds: Vec<f64>,
}

impl Default for ApproxRateConfig {
    fn default() -> Self {
        ApproxRateConfig {
            function: "sin2pi".into(),
            k: 4,
            ells: vec![4, 8, 16, 32, 64],
            grid: 2001,
            orders: vec![0, 1, 2],
            thresholds: vec![-3.5, -2.5, -1.5],
        }
    }
}

pub(super) fn run(cfg: &ApproxRateConfig, args: &CommonArgs) -> Result<Outcome> {
    if cfg.orders.len() != cfg.thresholds.len() {
        return Err(Error::InvalidArgument("orders and thresholds must have equal length".into()));
    }
    let f = RateFunction::parse(&cfg.function)?;
    let mut out = Outcome::default();
    let mut studies = Vec::new();
    for &r in &cfg.orders {
        studies.push(approx_rate_study(
            |x| f.eval(x, 0),
            |x| f.eval(x, r),
            cfg.k,
            r,
            &cfg.ells,
            cfg.grid,
            Exec::default(),
        )?);
    }

    let mut header = vec!["ell".to_string()];
    header.extend(cfg.orders.iter().map(|r| format!("error_r{r}")));
    let rows: Vec<Vec<String>> = cfg
        .ells
        .iter()
        .enumerate()
        .map(|(i, ell)| {
            let mut row = vec![ell.to_string()];
            row.extend(studies.iter().map(|s| fmt_float(s.rows[i].error)));
            row
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&mut out, &args.out, "approx_rate.csv", &header_refs, &rows)?;

    let mut slope_rows = Vec::new();
    for (study, &threshold) in studies.iter().zip(&cfg.thresholds) {
        let (status, ok) = match study.slope {
            Slope::Fitted(s) => ("fitted", s <= threshold),
            Slope::Exact => ("exact", true),
            Slope::Insufficient => ("insufficient", false),
        };
        let shown = study.slope.value().map_or(status.to_string(), |s| format!("{s:.3}"));
        out.line(format!("r = {}: slope {shown} (threshold {threshold})", study.r));
        out.check(format!("r = {} slope <= {threshold} or exact", study.r), ok);
        slope_rows.push(vec![
            study.r.to_string(),
            fmt_opt(study.slope.value()),
            status.to_string(),
            fmt_float(threshold),
            u8::from(ok).to_string(),
        ]);
    }
    write_csv(
        &mut out,
        &args.out,
        "approx_rate_slopes.csv",
        &["r", "slope", "status", "threshold", "pass"],
        &slope_rows,
    )?;
    Ok(out)
}
