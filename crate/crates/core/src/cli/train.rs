use serde::{Deserialize, Serialize};

use super::{fmt_float, fmt_opt, write_csv, write_text, CommonArgs, Outcome};
use crate::network::{Architecture, JetNetwork};
use crate::pde::{error_report, manufactured_problem, train, HistoryRow, Optimizer, TrainConfig};
use crate::{Error, Exec, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchConfig {
    pub depth: usize,
    pub width: usize,
    #[serde(default)]
    pub sup_bound: Option<f64>,
}

/// Pass criteria for the final network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default)]
    pub max_rel_l2: Option<f64>,
    #[serde(default)]
    pub min_loss_reduction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRunConfig {
    pub problem: String,
    pub arch: ArchConfig,
    pub train: TrainConfig,
    #[serde(default = "default_resolution")]
    pub eval_resolution: usize,
    #[serde(default)]
    pub expect: Option<Expectations>,
}

fn default_resolution() -> usize {
    513
}

impl Default for TrainRunConfig {
    /// The pinned desk-scale solve of `poisson1d_sin`.
    fn default() -> Self {
        let mut train = TrainConfig::new(Optimizer::Adam, 1e-2, 3000, 2000, 2, 5);
        train.lr_decay = 0.05;
        train.log_every = 100;
        TrainRunConfig {
            problem: "poisson1d_sin".into(),
            arch: ArchConfig {
                depth: 3,
                width: 16,
                sup_bound: None,
            },
            train,
            eval_resolution: 513,
            expect: Some(Expectations {
                max_rel_l2: Some(5e-2),
                min_loss_reduction: Some(100.0),
            }),
        }
    }
}

#[derive(Serialize)]
struct Report<'a> {
    problem: &'a str,
    steps: usize,
    initial_loss: f64,
    final_loss: f64,
    loss_reduction: f64,
    sup_norm: f64,
    sup_bound_violated: bool,
    error: Option<crate::pde::ErrorReport>,
}

fn history_rows(history: &[HistoryRow]) -> Vec<Vec<String>> {
    history
        .iter()
        .map(|r| vec![r.step.to_string(), fmt_float(r.loss), fmt_opt(r.l2_error), fmt_opt(r.h1_error)])
        .collect()
}

const HISTORY_HEADER: [&str; 4] = ["step", "loss", "l2_error", "h1_error"];

pub(super) fn run(cfg: &TrainRunConfig, args: &CommonArgs) -> Result<Outcome> {
    let mut cfg = cfg.clone();
    if let Some(s) = args.seed {
        cfg.train.seed = s;
    }
    let problem = manufactured_problem(&cfg.problem)?;
    let arch = Architecture {
        sup_bound: cfg.arch.sup_bound,
        ..Architecture::new(cfg.arch.depth, cfg.arch.width)?
    };
    let mut out = Outcome::default();
    let result = match train(&problem, &arch, &cfg.train) {
        Err(Error::Diverged { step, loss, history }) => {
            write_csv(&mut out, &args.out, "history.csv", &HISTORY_HEADER, &history_rows(&history))?;
            out.line(format!("diverged at step {step} with loss {loss:e}"));
            out.check("training did not diverge", false);
            return Ok(out);
        }
        other => other?,
    };
    write_csv(&mut out, &args.out, "history.csv", &HISTORY_HEADER, &history_rows(&result.history))?;
    write_text(&mut out, &args.out, "network.json", &result.net.to_json()?)?;

    let initial = result.history.first().map_or(f64::NAN, |r| r.loss);
    let last = result.history.last().map_or(f64::NAN, |r| r.loss);
    let error = match &problem.exact {
        Some(exact) => Some(error_report(
            &JetNetwork(&result.net),
            exact,
            &problem.domain,
            cfg.eval_resolution,
            Exec::default(),
        )?),
        None => None,
    };
    let report = Report {
        problem: &cfg.problem,
        steps: cfg.train.steps,
        initial_loss: initial,
        final_loss: last,
        loss_reduction: initial / last,
        sup_norm: result.sup_norm,
        sup_bound_violated: result.sup_bound_violated,
        error,
    };
    write_text(&mut out, &args.out, "report.json", &serde_json::to_string_pretty(&report)?)?;

    out.line(format!(
        "{}: loss {initial:.4e} -> {last:.4e} ({:.3e}x) in {} steps",
        cfg.problem, report.loss_reduction, cfg.train.steps
    ));
    if let Some(e) = &error {
        out.line(format!(
            "error vs exact: sup {:.3e}, L2 {:.3e} (relative {:.3e}), H1-seminorm {:.3e}",
            e.sup, e.l2, e.rel_l2, e.h1_semi
        ));
    }
    out.line(format!("sup norm estimate {:.4e}", result.sup_norm));
    if result.sup_bound_violated {
        out.line("warning: sup norm exceeds the architecture bound");
    }
    if let Some(exp) = cfg.expect {
        if let Some(max) = exp.max_rel_l2 {
            let ok = error.is_some_and(|e| e.rel_l2 <= max);
            out.check(format!("relative L2 error <= {max:e}"), ok);
        }
        if let Some(min) = exp.min_loss_reduction {
            out.check(format!("loss reduced >= {min}x"), report.loss_reduction >= min);
        }
    }
    Ok(out)
}
