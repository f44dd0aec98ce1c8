//! Batch experiment runner behind the `pinnlab` binary.
//!
//! Every subcommand reads an optional JSON config (unknown keys are
//! rejected; a missing config means the bundled defaults under `configs/`),
//! writes CSV/JSON artifacts into `--out`, and returns an [`Outcome`] whose
//! checks decide the exit status.

mod bounds;
mod gap;
mod identities;
mod rate;
mod train;

pub use bounds::BoundsConfig;
pub use gap::{GapConfig, NetSpec};
pub use identities::{IdentitiesConfig, Perturbation};
pub use rate::ApproxRateConfig;
pub use train::{ArchConfig, Expectations, TrainRunConfig};

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use crate::Result;

#[derive(Debug, Parser)]
#[command(name = "pinnlab", version, about = "ReLU3 PINN laboratory: identities, rates, training, gaps and bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the four ReLU3/ReLU2 gadgets against their closed forms
    Identities(CommonArgs),
    /// Quasi-interpolation error rates against the partition size
    ApproxRate(CommonArgs),
    /// Train a network on a catalog problem
    Train(CommonArgs),
    /// Generalisation gap against N and the 13-term table
    Gap(CommonArgs),
    /// Sweep the capacity bound calculators
    Bounds(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON config; the bundled defaults are used when omitted
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// output directory (created if missing)
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// overrides the seed of the config
    #[arg(long)]
    pub seed: Option<u64>,
}

/// A named pass/fail assertion.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

/// What a command printed and asserted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub checks: Vec<Check>,
    /// files written, relative to nothing (as given)
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool) {
        self.checks.push(Check {
            name: name.into(),
            passed,
        });
    }

    pub fn success(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Report text: the lines, then one line per check.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for l in &self.lines {
            s.push_str(l);
            s.push('\n');
        }
        for c in &self.checks {
            s.push_str(&format!("check {}: {}\n", c.name, if c.passed { "ok" } else { "FAIL" }));
        }
        for a in &self.artifacts {
            s.push_str(&format!("wrote {}\n", a.display()));
        }
        s
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Identities(a) => identities::run(&load(a.config.as_deref())?, a),
        Command::ApproxRate(a) => rate::run(&load(a.config.as_deref())?, a),
        Command::Train(a) => train::run(&load(a.config.as_deref())?, a),
        Command::Gap(a) => gap::run(&load(a.config.as_deref())?, a),
        Command::Bounds(a) => bounds::run(&load(a.config.as_deref())?, a),
    }
}

/// Reads a config file, or the defaults when no path is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => Ok(T::default()),
    }
}

/// 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn write_csv(out: &mut Outcome, dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    out.artifacts.push(path);
    Ok(())
}

fn write_text(out: &mut Outcome, dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text)?;
    out.artifacts.push(path);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn cli_parses_subcommands() {
        let cli = Cli::try_parse_from(["pinnlab", "train", "--config", "c.json", "--out", "o", "--seed", "3"]).unwrap();
        match cli.command {
            Command::Train(a) => {
                assert_eq!(a.seed, Some(3));
                assert_eq!(a.out, PathBuf::from("o"));
            }
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["pinnlab", "fit"]).is_err());
        assert!(Cli::try_parse_from(["pinnlab", "bounds", "--bogus"]).is_err());
    }

    fn bundled(name: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
    }

    #[test]
    fn bundled_configs_are_the_defaults() {
        let id: IdentitiesConfig = load(Some(&bundled("identities.json"))).unwrap();
        assert_eq!(id, IdentitiesConfig::default());
        let r: ApproxRateConfig = load(Some(&bundled("approx_rate.json"))).unwrap();
        assert_eq!(r, ApproxRateConfig::default());
        let t: TrainRunConfig = load(Some(&bundled("train_poisson1d.json"))).unwrap();
        assert_eq!(t, TrainRunConfig::default());
        let g: GapConfig = load(Some(&bundled("gap.json"))).unwrap();
        assert_eq!(g, GapConfig::default());
        let b: BoundsConfig = load(Some(&bundled("bounds.json"))).unwrap();
        assert_eq!(b, BoundsConfig::default());
        let _: ApproxRateConfig = load(Some(&bundled("approx_rate_cubic.json"))).unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<BoundsConfig>(r#"{"depths":[1],"colour":"red"}"#).is_err());
        assert!(serde_json::from_str::<TrainRunConfig>(r#"{"problem":"poisson1d_sin","arch":{"depth":2,"width":2,"height":1},"train":{"optimizer":"adam","lr":0.1,"steps":1,"N":4,"M":2,"seed":1}}"#).is_err());
    }
}
