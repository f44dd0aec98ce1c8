use serde::{Deserialize, Serialize};

use super::{fmt_float, write_csv, CommonArgs, Outcome};
use crate::calculus::GadgetKind;
use crate::{Error, Result};

/// Adds `amount` to the output bias of the named gadget (for exercising the
/// failure path).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub gadget: String,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitiesConfig {
    pub grid_points: usize,
    pub tolerance: f64,
    pub perturb: Option<Perturbation>,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        IdentitiesConfig {
            grid_points: 1000,
            tolerance: 1e-12,
            perturb: None,
        }
    }
}

pub(super) fn run(cfg: &IdentitiesConfig, args: &CommonArgs) -> Result<Outcome> {
    if let Some(p) = &cfg.perturb {
        if !GadgetKind::ALL.iter().any(|k| k.name() == p.gadget) {
            return Err(Error::UnknownEntry(p.gadget.clone()));
        }
    }
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for kind in GadgetKind::ALL {
        let mut g = kind.build();
        if let Some(p) = cfg.perturb.as_ref().filter(|p| p.gadget == kind.name()) {
            g.network.output_bias += p.amount;
        }
        let grid = g.validity_grid(cfg.grid_points);
        let dev = g.max_deviation(&grid, |x| kind.closed_form(x));
        let stats = g.network.architecture_stats();
        let ok = dev <= cfg.tolerance
            && stats.depth == g.claimed_depth
            && stats.width <= g.claimed_width;
        out.line(format!(
            "{:<15} depth {} width {:>2} points {:>4} max deviation {:.3e}",
            g.name,
            stats.depth,
            stats.width,
            grid.len(),
            dev
        ));
        out.check(format!("{} exact to {:e}", g.name, cfg.tolerance), ok);
        rows.push(vec![
            g.name.clone(),
            stats.depth.to_string(),
            g.claimed_depth.to_string(),
            stats.width.to_string(),
            g.claimed_width.to_string(),
            grid.len().to_string(),
            fmt_float(dev),
            u8::from(ok).to_string(),
        ]);
    }
    write_csv(
        &mut out,
        &args.out,
        "identities.csv",
        &["gadget", "depth", "claimed_depth", "width", "claimed_width", "points", "max_deviation", "pass"],
        &rows,
    )?;
    Ok(out)
}
