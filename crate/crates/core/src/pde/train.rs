//! First-order training of the empirical loss.
//!
//! Each interior sample contributes `|Omega|/N r^2` with `r` linear in the
//! jet `(u, grad u, hess u)`, so its parameter gradient is one reverse pass
//! through the jet with adjoints `(c, b, -a) * 2 |Omega|/N r`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{draw_samples, error_report, EllipticProblem, SampleSet};
use crate::network::{Activation, Architecture, JetNetwork, JetTrace, Network};
use crate::{Error, Exec, Result};

const DIVERGENCE: f64 = 1e8;
const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

fn default_activation() -> Activation {
    Activation::Relu3
}
fn default_log_every() -> usize {
    100
}
fn default_decay() -> f64 {
    1.0
}
fn default_eval_resolution() -> usize {
    257
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub lr: f64,
    pub steps: usize,
    /// interior samples
    #[serde(rename = "N")]
    pub n: usize,
    /// boundary samples
    #[serde(rename = "M")]
    pub m: usize,
    /// drives the samples; the initial weights use an independent stream of
    /// the same seed
    pub seed: u64,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    /// fresh samples every step instead of one fixed set
    #[serde(default)]
    pub resample: bool,
    /// interior mini-batch size; `None` uses all `N` points each step
    #[serde(default)]
    pub batch: Option<usize>,
    /// the learning rate decays geometrically to `lr * lr_decay` at the last
    /// step
    #[serde(default = "default_decay")]
    pub lr_decay: f64,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
    /// quadrature nodes per axis for the logged true errors
    #[serde(default = "default_eval_resolution")]
    pub eval_resolution: usize,
    #[serde(default = "default_true")]
    pub track_error: bool,
}

impl TrainConfig {
    pub fn new(optimizer: Optimizer, lr: f64, steps: usize, n: usize, m: usize, seed: u64) -> Self {
        TrainConfig {
            optimizer,
            lr,
            steps,
            n,
            m,
            seed,
            activation: default_activation(),
            resample: false,
            batch: None,
            lr_decay: 1.0,
            log_every: default_log_every(),
            eval_resolution: default_eval_resolution(),
            track_error: true,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.n == 0 || self.m == 0 {
            return bad("N and M must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad("lr_decay must lie in (0, 1]");
        }
        if self.log_every == 0 {
            return bad("log_every must be positive");
        }
        if matches!(self.batch, Some(b) if b == 0 || b > self.n) {
            return bad("batch must lie in 1..=N");
        }
        Ok(())
    }
}

/// One logged step. `loss` is the empirical loss of the parameters before
/// the update of that step (the last row holds the final parameters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub step: usize,
    pub loss: f64,
    /// `||u - u*||_{L²}`
    pub l2_error: Option<f64>,
    /// `|u - u*|_{H¹}`
    pub h1_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: Network,
    pub history: Vec<HistoryRow>,
    /// dyadic-grid estimate of `||u||_{L^inf}`, to compare with
    /// `Architecture::sup_bound`
    pub sup_norm: f64,
    pub sup_bound_violated: bool,
    pub samples: SampleSet,
}

/// Empirical loss and its parameter gradient.
pub fn loss_and_gradient(
    problem: &EllipticProblem,
    net: &Network,
    interior: &[&[f64]],
    boundary: &[&[f64]],
    exec: Exec,
) -> (f64, Vec<f64>) {
    let p = net.param_count();
    let d = problem.dim();
    let wi = problem.domain.volume() / interior.len() as f64;
    let wb = problem.domain.surface() / boundary.len() as f64;

    let interior_part = |c: usize| {
        let mut grad = vec![0.0; p];
        let mut loss = 0.0;
        let mut adj_grad = vec![0.0; d];
        let mut adj_hess = vec![0.0; d * d];
        for x in &interior[c * CHUNK..((c + 1) * CHUNK).min(interior.len())] {
            let trace = JetTrace::forward(net, x);
            let jet = trace.jet();
            let a: Vec<f64> = problem.a.iter().map(|a| a(x)).collect();
            let b: Vec<f64> = problem.b.iter().map(|b| b(x)).collect();
            let c = (problem.c)(x);
            let r = -a.iter().zip(&jet.hess).map(|(a, h)| a * h).sum::<f64>()
                + b.iter().zip(&jet.grad).map(|(b, g)| b * g).sum::<f64>()
                + c * jet.value
                - (problem.f)(x);
            loss += wi * r * r;
            let rbar = 2.0 * wi * r;
            for (slot, b) in adj_grad.iter_mut().zip(&b) {
                *slot = b * rbar;
            }
            for (slot, a) in adj_hess.iter_mut().zip(&a) {
                *slot = -a * rbar;
            }
            trace.backward(net, c * rbar, &adj_grad, &adj_hess, &mut grad);
        }
        (loss, grad)
    };
    let boundary_part = |c: usize| {
        let mut grad = vec![0.0; p];
        let mut loss = 0.0;
        for y in &boundary[c * CHUNK..((c + 1) * CHUNK).min(boundary.len())] {
            let e = (problem.e)(y);
            let defect = e * net.eval_unchecked(y) - (problem.g)(y);
            loss += wb * defect * defect;
            let scale = 2.0 * wb * defect * e;
            if scale != 0.0 {
                let pg = net.param_gradient(y).expect("boundary point dimension");
                for (g, v) in grad.iter_mut().zip(pg) {
                    *g += scale * v;
                }
            }
        }
        (loss, grad)
    };

    let mut total = 0.0;
    let mut grad = vec![0.0; p];
    let parts = exec
        .map_range(interior.len().div_ceil(CHUNK), interior_part)
        .into_iter()
        .chain(exec.map_range(boundary.len().div_ceil(CHUNK), boundary_part));
    for (l, g) in parts {
        total += l;
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += v;
        }
    }
    (total, grad)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::B1 * *m + (1.0 - Self::B1) * g;
            *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

/// Minimises the empirical loss over the parameters of a fresh
/// `arch`-network, using the default execution strategy.
pub fn train(problem: &EllipticProblem, arch: &Architecture, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(problem, arch, cfg, Exec::default())
}

pub fn train_with(
    problem: &EllipticProblem,
    arch: &Architecture,
    cfg: &TrainConfig,
    exec: Exec,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let arch = Architecture {
        sup_bound: arch.sup_bound,
        ..Architecture::new(arch.depth, arch.width)?
    };
    let d = problem.dim();
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    init_rng.set_stream(1);
    let mut batch_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    batch_rng.set_stream(2);
    let mut net = Network::random(d, arch.depth, arch.width, cfg.activation, &mut init_rng);

    let mut samples = draw_samples(&problem.domain, cfg.n, cfg.m, cfg.seed);
    let mut params = net.params();
    let mut adam = Adam {
        m: vec![0.0; params.len()],
        v: vec![0.0; params.len()],
        t: 0,
    };
    let mut history = Vec::new();

    let record = |step: usize, loss: f64, net: &Network, history: &mut Vec<HistoryRow>| -> Result<()> {
        let (l2_error, h1_error) = match (&problem.exact, cfg.track_error) {
            (Some(exact), true) => {
                let r = error_report(&JetNetwork(net), exact, &problem.domain, cfg.eval_resolution, exec)?;
                (Some(r.l2), Some(r.h1_semi))
            }
            _ => (None, None),
        };
        history.push(HistoryRow {
            step,
            loss,
            l2_error,
            h1_error,
        });
        Ok(())
    };

    for step in 0..=cfg.steps {
        if cfg.resample && step > 0 {
            let s = cfg.seed.wrapping_add((step as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            samples = draw_samples(&problem.domain, cfg.n, cfg.m, s);
        }
        let boundary: Vec<&[f64]> = samples.boundary.iter().map(Vec::as_slice).collect();
        let interior: Vec<&[f64]> = match cfg.batch {
            Some(b) if b < cfg.n && step < cfg.steps => sample(&mut batch_rng, cfg.n, b)
                .into_iter()
                .map(|k| samples.interior[k].as_slice())
                .collect(),
            _ => samples.interior.iter().map(Vec::as_slice).collect(),
        };
        let (loss, grad) = loss_and_gradient(problem, &net, &interior, &boundary, exec);
        let last = step == cfg.steps;
        if !loss.is_finite() || loss > DIVERGENCE || grad.iter().any(|g| !g.is_finite()) {
            record(step, loss, &net, &mut history).ok();
            return Err(Error::Diverged { step, loss, history });
        }
        if step % cfg.log_every == 0 || last {
            record(step, loss, &net, &mut history)?;
        }
        if last {
            break;
        }
        let lr = cfg.lr * cfg.lr_decay.powf(step as f64 / cfg.steps as f64);
        match cfg.optimizer {
            Optimizer::Sgd => {
                for (p, g) in params.iter_mut().zip(&grad) {
                    *p -= lr * g;
                }
            }
            Optimizer::Adam => adam.step(&mut params, &grad, lr),
        }
        net.set_params(&params)?;
    }

    let sup_norm = net.sup_norm_estimate(if d <= 2 { 257 } else { 33 }, exec)?;
    Ok(TrainOutcome {
        sup_bound_violated: arch.sup_bound.is_some_and(|b| sup_norm > b),
        net,
        history,
        sup_norm,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::{constant, empirical_loss, manufactured_problem, Domain};

    #[test]
    fn gradient_matches_finite_differences() {
        let p = manufactured_problem("variable_coeff_2d").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Network::random(2, 3, 5, Activation::Relu3, &mut rng);
        let s = draw_samples(&p.domain, 40, 10, 4);
        let inner: Vec<&[f64]> = s.interior.iter().map(Vec::as_slice).collect();
        let outer: Vec<&[f64]> = s.boundary.iter().map(Vec::as_slice).collect();
        let (loss, grad) = loss_and_gradient(&p, &net, &inner, &outer, Exec::Sequential);
        let direct = empirical_loss(&p, &JetNetwork(&net), &s, Exec::Sequential).unwrap();
        assert!((loss - direct).abs() <= 1e-12 * direct);
        let params = net.params();
        let h = 1e-6;
        for k in (0..params.len()).step_by(3) {
            let mut plus = net.clone();
            let mut q = params.clone();
            q[k] += h;
            plus.set_params(&q).unwrap();
            let mut minus = net.clone();
            q[k] -= 2.0 * h;
            minus.set_params(&q).unwrap();
            let lp = empirical_loss(&p, &JetNetwork(&plus), &s, Exec::Sequential).unwrap();
            let lm = empirical_loss(&p, &JetNetwork(&minus), &s, Exec::Sequential).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            assert!((fd - grad[k]).abs() <= 1e-5 * (1.0 + fd.abs()), "param {k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn gradient_is_strategy_independent() {
        let p = manufactured_problem("poisson1d_sin").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Network::random(1, 3, 8, Activation::Relu3, &mut rng);
        let s = draw_samples(&p.domain, 300, 7, 6);
        let inner: Vec<&[f64]> = s.interior.iter().map(Vec::as_slice).collect();
        let outer: Vec<&[f64]> = s.boundary.iter().map(Vec::as_slice).collect();
        let a = loss_and_gradient(&p, &net, &inner, &outer, Exec::Sequential);
        let b = loss_and_gradient(&p, &net, &inner, &outer, Exec::Parallel);
        assert_eq!(a, b);
    }

    #[test]
    fn zero_target_has_zero_minimum() {
        let mut p = crate::pde::EllipticProblem::laplace("zero", Domain::unit_box(1).unwrap());
        p.c = constant(1.0);
        let zero = Network::zero(1);
        let s = draw_samples(&p.domain, 50, 4, 1);
        assert_eq!(empirical_loss(&p, &JetNetwork(&zero), &s, Exec::Sequential).unwrap(), 0.0);
        let cfg = TrainConfig::new(Optimizer::Adam, 1e-2, 200, 50, 4, 1);
        let out = train(&p, &Architecture::new(2, 4).unwrap(), &cfg).unwrap();
        let first = out.history.first().unwrap().loss;
        let last = out.history.last().unwrap().loss;
        assert!(last < first);
    }

    #[test]
    fn zero_steps_and_determinism() {
        let p = manufactured_problem("poisson1d_sin").unwrap();
        let arch = Architecture::new(2, 4).unwrap();
        let mut cfg = TrainConfig::new(Optimizer::Sgd, 1e-3, 0, 20, 2, 3);
        let out = train(&p, &arch, &cfg).unwrap();
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.history[0].step, 0);
        cfg.steps = 30;
        cfg.log_every = 7;
        cfg.optimizer = Optimizer::Adam;
        let a = train(&p, &arch, &cfg).unwrap();
        let b = train_with(&p, &arch, &cfg, Exec::Sequential).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.net, b.net);
        let steps: Vec<usize> = a.history.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 7, 14, 21, 28, 30]);
    }

    #[test]
    fn divergence_is_reported() {
        let p = manufactured_problem("poisson1d_sin").unwrap();
        let cfg = TrainConfig::new(Optimizer::Sgd, 10.0, 50, 50, 2, 1);
        match train(&p, &Architecture::new(3, 8).unwrap(), &cfg) {
            Err(Error::Diverged { history, loss, .. }) => {
                assert!(!history.is_empty());
                assert!(!loss.is_finite() || loss > 1e8);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn config_schema() {
        let cfg: TrainConfig = serde_json::from_str(
            r#"{"optimizer":"adam","lr":0.01,"steps":10,"N":100,"M":2,"seed":7}"#,
        )
        .unwrap();
        assert_eq!(cfg, TrainConfig::new(Optimizer::Adam, 0.01, 10, 100, 2, 7));
        assert!(serde_json::from_str::<TrainConfig>(
            r#"{"optimizer":"adam","lr":0.01,"steps":10,"N":100,"M":2,"seed":7,"momentum":0.9}"#
        )
        .is_err());
    }
}
