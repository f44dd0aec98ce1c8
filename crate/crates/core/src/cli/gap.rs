use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fmt_float, fmt_opt, write_csv, CommonArgs, Outcome};
use crate::capacity::{gap_report, gap_scaling};
use crate::network::{Activation, JetNetwork, Network};
use crate::pde::{draw_samples, manufactured_problem};
use crate::{Error, Exec, Result};

/// Random ReLU³ networks of one shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSpec {
    pub depth: usize,
    pub width: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapConfig {
    pub problem: String,
    #[serde(rename = "N")]
    pub ns: Vec<usize>,
    /// boundary samples; `M = N` when absent
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub seeds: usize,
    /// base seed of the sample sets
    pub seed: u64,
    /// the fixed network of the scaling study
    pub net: NetSpec,
    /// further random networks joining the 13-term table
    pub extra_nets: usize,
    pub resolution: Option<usize>,
    pub slope_range: [f64; 2],
}

impl Default for GapConfig {
    fn default() -> Self {
        GapConfig {
            problem: "poisson1d_sin".into(),
            ns: (7..=13).map(|p| 1 << p).collect(),
            m: None,
            seeds: 30,
            seed: 0,
            net: NetSpec {
                depth: 3,
                width: 16,
                seed: 11,
            },
            extra_nets: 7,
            resolution: None,
            slope_range: [-0.65, -0.35],
        }
    }
}

pub(super) fn run(cfg: &GapConfig, args: &CommonArgs) -> Result<Outcome> {
    if cfg.ns.len() < 2 {
        return Err(Error::InvalidArgument("gap needs at least two values of N".into()));
    }
    let seed = args.seed.unwrap_or(cfg.seed);
    let problem = manufactured_problem(&cfg.problem)?;
    let d = problem.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.net.seed);
    let nets: Vec<Network> = (0..=cfg.extra_nets)
        .map(|_| Network::random(d, cfg.net.depth, cfg.net.width, Activation::Relu3, &mut rng))
        .collect();
    let exec = Exec::default();
    let mut out = Outcome::default();

    let scaling = gap_scaling(&problem, &JetNetwork(&nets[0]), &cfg.ns, cfg.m, cfg.seeds, seed, cfg.resolution, exec)?;
    let rows: Vec<Vec<String>> = scaling
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.m.to_string(),
                fmt_float(r.rms_gap),
                fmt_float(r.mean_gap),
                fmt_float(r.se_gap),
            ]
        })
        .collect();
    write_csv(&mut out, &args.out, "gap_scaling.csv", &["N", "M", "rms_gap", "mean_gap", "se_gap"], &rows)?;
    write_csv(
        &mut out,
        &args.out,
        "gap_slope.csv",
        &["population_loss", "slope", "slope_min", "slope_max"],
        &[vec![
            fmt_float(scaling.population),
            fmt_opt(scaling.slope),
            fmt_float(cfg.slope_range[0]),
            fmt_float(cfg.slope_range[1]),
        ]],
    )?;
    let [lo, hi] = cfg.slope_range;
    out.line(format!("population loss of the fixed net {:.6e}", scaling.population));
    for r in &scaling.rows {
        out.line(format!("N = {:>6}: rms gap {:.4e}", r.n, r.rms_gap));
    }
    match scaling.slope {
        Some(s) => out.line(format!("log-log slope {s:.4}")),
        None => out.line("log-log slope undefined"),
    }
    out.check(
        format!("gap slope in [{lo}, {hi}]"),
        scaling.slope.is_some_and(|s| s >= lo && s <= hi),
    );

    let n_max = *cfg.ns.iter().max().expect("two values");
    let samples = draw_samples(&problem.domain, n_max, cfg.m.unwrap_or(n_max), seed);
    let coll: Vec<JetNetwork> = nets.iter().map(JetNetwork).collect();
    let table = gap_report(&problem, &coll, &samples, cfg.resolution, exec)?;
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.j.to_string(),
                r.label.to_string(),
                fmt_float(r.population),
                fmt_float(r.empirical),
                fmt_float(r.gap),
            ]
        })
        .collect();
    write_csv(&mut out, &args.out, "gap_terms.csv", &["j", "label", "population", "empirical", "gap"], &rows)?;
    out.line(format!(
        "13-term table at N = {n_max} over {} nets (a lower bound on the class sup): total gap {:.4e} <= row sum {:.4e}",
        coll.len(),
        table.total_gap,
        table.row_sum
    ));
    out.check("13-term triangle inequality", table.triangle_holds);
    Ok(out)
}
