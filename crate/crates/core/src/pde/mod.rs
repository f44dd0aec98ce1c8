//! Second-order elliptic Dirichlet problems
//!
//! ```text
//! -sum_ij a_ij u_{x_i x_j} + sum_i b_i u_{x_i} + c u = f  in Omega,
//!                                              e u = g  on dOmega,
//! ```
//!
//! their sampled and quadrature losses, the trainer and a catalog of
//! manufactured problems.

mod catalog;
mod loss;
mod train;

pub use catalog::{manufactured_problem, CATALOG};
pub use loss::{
    empirical_loss, error_report, quadrature_loss, quadrature_rule, residual, residual_parts,
    ErrorReport, QuadratureRule, ResidualParts,
};
pub use train::{loss_and_gradient, train, train_with, HistoryRow, Optimizer, TrainConfig, TrainOutcome};

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::calculus::{derivative_network, second_derivative_network};
use crate::network::{Jet, JetNetwork, Network};
use crate::{Error, Result};

/// A scalar coefficient or data field.
pub type Field = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// A vector-valued field (gradient, or row-major Hessian).
pub type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

pub fn field(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Field {
    Arc::new(f)
}

pub fn constant(c: f64) -> Field {
    Arc::new(move |_| c)
}

/// Computational domain, contained in the unit box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    UnitBox { dim: usize },
    Ball { dim: usize, center: Vec<f64>, radius: f64 },
}

impl Domain {
    pub fn unit_box(dim: usize) -> Result<Domain> {
        let d = Domain::UnitBox { dim };
        d.validate()?;
        Ok(d)
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Domain> {
        let d = Domain::Ball {
            dim: center.len(),
            center,
            radius,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::UnitBox { dim } if *dim >= 1 => Ok(()),
            Domain::Ball {
                dim,
                center,
                radius,
            } if *dim >= 1
                && center.len() == *dim
                && *radius > 0.0
                && center.iter().all(|&c| c - radius >= 0.0 && c + radius <= 1.0) =>
            {
                Ok(())
            }
            _ => Err(Error::InvalidArgument(format!(
                "domain {self:?} must be non-empty and contained in the unit box"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::UnitBox { dim } | Domain::Ball { dim, .. } => *dim,
        }
    }

    /// `|Omega|`.
    pub fn volume(&self) -> f64 {
        match self {
            Domain::UnitBox { .. } => 1.0,
            Domain::Ball { dim, radius, .. } => unit_ball_volume(*dim) * radius.powi(*dim as i32),
        }
    }

    /// `|dOmega|`; for `d = 1` the counting measure of the two end points.
    pub fn surface(&self) -> f64 {
        match self {
            Domain::UnitBox { dim } => 2.0 * *dim as f64,
            Domain::Ball { dim, radius, .. } => {
                *dim as f64 * unit_ball_volume(*dim) * radius.powi(*dim as i32 - 1)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::UnitBox { .. } => x.iter().all(|&v| v > 0.0 && v < 1.0),
            Domain::Ball { center, radius, .. } => dist(x, center) < *radius,
        }
    }

    /// Distance of `x` from the boundary surface (zero on it).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match self {
            Domain::UnitBox { .. } => x
                .iter()
                .map(|&v| v.abs().min((v - 1.0).abs()))
                .fold(f64::INFINITY, f64::min),
            Domain::Ball { center, radius, .. } => (dist(x, center) - radius).abs(),
        }
    }
}

fn dist(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn unit_ball_volume(d: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_d = 2 pi / d V_{d-2}
    let mut v = if d.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if d.is_multiple_of(2) { 2 } else { 3 };
    while k <= d {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

/// Upper bounds for the coefficient and data fields: sup norms of `a`, `b`,
/// `c`, `e` and `L²` norms of `f` on `Omega` and `g` on `dOmega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientBounds {
    pub a_max: f64,
    pub b_max: f64,
    pub c_max: f64,
    pub e_max: f64,
    pub f_l2: f64,
    pub g_l2: f64,
}

impl CoefficientBounds {
    /// `C1` of the statistical-error bound.
    pub fn c1(&self, d: usize) -> f64 {
        let d = d as f64;
        let (a, b, c, f) = (self.a_max, self.b_max, self.c_max, self.f_l2);
        [
            a * a * d.powi(4),
            b * b * d * d,
            c * c * d * d,
            f * f,
            a * b * d.powi(3),
            a * c * d * d,
            a * f * d * d,
            b * c * d,
            b * f * d,
            c * f,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// `C2` of the statistical-error bound.
    pub fn c2(&self) -> f64 {
        let (e, g) = (self.e_max, self.g_l2);
        (e * e).max(g * g).max(e * g)
    }
}

/// A closed-form solution with derivatives.
#[derive(Clone)]
pub struct ExactSolution {
    pub dim: usize,
    pub value: Field,
    pub grad: VectorField,
    /// row-major `d x d`
    pub hess: VectorField,
}

impl std::fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExactSolution").field("dim", &self.dim).finish()
    }
}

/// Elliptic problem data. Coefficients are row-major `a` (`d x d`), `b`
/// (`d`), `c`, right-hand side `f`, boundary multiplier `e` and data `g`.
#[derive(Clone)]
pub struct EllipticProblem {
    pub name: String,
    pub domain: Domain,
    pub a: Vec<Field>,
    pub b: Vec<Field>,
    pub c: Field,
    pub f: Field,
    pub e: Field,
    pub g: Field,
    pub bounds: CoefficientBounds,
    /// `xi^T a(x) xi >= ellipticity |xi|^2`
    pub ellipticity: f64,
    pub exact: Option<ExactSolution>,
}

impl std::fmt::Debug for EllipticProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EllipticProblem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("bounds", &self.bounds)
            .field("ellipticity", &self.ellipticity)
            .finish()
    }
}

impl EllipticProblem {
    /// `-Laplace u = 0`, `u = 0` on the boundary; fields are then replaced
    /// as needed.
    pub fn laplace(name: &str, domain: Domain) -> Self {
        let d = domain.dim();
        let a = (0..d * d)
            .map(|k| constant(if k / d == k % d { 1.0 } else { 0.0 }))
            .collect();
        EllipticProblem {
            name: name.to_string(),
            domain,
            a,
            b: (0..d).map(|_| constant(0.0)).collect(),
            c: constant(0.0),
            f: constant(0.0),
            e: constant(1.0),
            g: constant(0.0),
            bounds: CoefficientBounds {
                a_max: 1.0,
                b_max: 0.0,
                c_max: 0.0,
                e_max: 1.0,
                f_l2: 0.0,
                g_l2: 0.0,
            },
            ellipticity: 1.0,
            exact: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Smallest `xi^T a(x) xi / |xi|^2` over `trials` random `(x, xi)` with
    /// `x` uniform in the domain.
    pub fn ellipticity_spot_check(&self, trials: usize, seed: u64) -> f64 {
        let d = self.dim();
        let s = draw_samples(&self.domain, trials.max(1), 1, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
        let mut worst = f64::INFINITY;
        for x in &s.interior {
            let xi: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let norm2: f64 = xi.iter().map(|v| v * v).sum();
            let mut q = 0.0;
            for i in 0..d {
                for j in 0..d {
                    q += xi[i] * (self.a[i * d + j])(x) * xi[j];
                }
            }
            worst = worst.min(q / norm2);
        }
        worst
    }
}

/// Interior and boundary sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub interior: Vec<Vec<f64>>,
    pub boundary: Vec<Vec<f64>>,
    pub seed: u64,
}

/// `n` interior points uniform in `Omega` and `m` boundary points uniform on
/// `dOmega`, reproducible from `seed`.
///
/// Box faces all have unit area, so the face is chosen uniformly and the point
/// is uniform on it. Ball boundary points are normalised Gaussian directions.
/// Interior points are drawn first, then boundary points, from one ChaCha8
/// stream.
pub fn draw_samples(domain: &Domain, n: usize, m: usize, seed: u64) -> SampleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = domain.dim();
    let mut interior = Vec::with_capacity(n);
    while interior.len() < n {
        let x: Vec<f64> = match domain {
            Domain::UnitBox { .. } => (0..d).map(|_| rng.gen::<f64>()).collect(),
            Domain::Ball { center, radius, .. } => center
                .iter()
                .map(|&c| c - radius + 2.0 * radius * rng.gen::<f64>())
                .collect(),
        };
        if domain.contains(&x) {
            interior.push(x);
        }
    }
    let mut boundary = Vec::with_capacity(m);
    for _ in 0..m {
        let y = match domain {
            Domain::UnitBox { .. } => {
                let face = rng.gen_range(0..2 * d);
                let mut y: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
                y[face / 2] = (face % 2) as f64;
                y
            }
            Domain::Ball { center, radius, .. } => {
                let g: Vec<f64> = (0..d)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                center
                    .iter()
                    .zip(&g)
                    .map(|(c, v)| c + radius * v / norm)
                    .collect()
            }
        };
        boundary.push(y);
    }
    SampleSet {
        interior,
        boundary,
        seed,
    }
}

/// Something that can be plugged into the residual: value, gradient and
/// Hessian at a point.
pub trait TrialFunction: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Value and gradient (no second derivatives needed).
    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let j = self.jet(x)?;
        Ok((j.value, j.grad))
    }

    fn jet(&self, x: &[f64]) -> Result<Jet>;
}

impl TrialFunction for JetNetwork<'_> {
    fn dim(&self) -> usize {
        self.0.input_dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.0.eval_unchecked(x)
    }

    fn jet(&self, x: &[f64]) -> Result<Jet> {
        Ok(self.0.jet(x))
    }
}

impl TrialFunction for ExactSolution {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok(((self.value)(x), (self.grad)(x)))
    }

    fn jet(&self, x: &[f64]) -> Result<Jet> {
        Ok(Jet {
            value: (self.value)(x),
            grad: (self.grad)(x),
            hess: (self.hess)(x),
        })
    }
}

/// A network together with its first- and (optionally) second-derivative
/// networks, built by the structural transform.
#[derive(Debug, Clone)]
pub struct DerivativeBundle {
    pub net: Network,
    pub first: Vec<Network>,
    /// row-major `d x d`
    pub second: Option<Vec<Network>>,
}

impl DerivativeBundle {
    /// Builds every first and second partial-derivative network.
    pub fn new(net: Network) -> Result<Self> {
        let mut b = Self::first_order(net)?;
        let d = b.net.input_dim;
        let mut second = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                second.push(second_derivative_network(&b.net, i, j)?);
            }
        }
        b.second = Some(second);
        Ok(b)
    }

    /// First derivatives only; [`TrialFunction::jet`] then fails.
    pub fn first_order(net: Network) -> Result<Self> {
        let first = (0..net.input_dim)
            .map(|i| derivative_network(&net, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(DerivativeBundle {
            net,
            first,
            second: None,
        })
    }
}

impl TrialFunction for DerivativeBundle {
    fn dim(&self) -> usize {
        self.net.input_dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.net.eval_unchecked(x)
    }

    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((
            self.net.eval_unchecked(x),
            self.first.iter().map(|n| n.eval_unchecked(x)).collect(),
        ))
    }

    fn jet(&self, x: &[f64]) -> Result<Jet> {
        let second = self
            .second
            .as_ref()
            .ok_or(Error::MissingDerivatives("second-derivative networks not built"))?;
        let (value, grad) = self.value_grad(x)?;
        Ok(Jet {
            value,
            grad,
            hess: second.iter().map(|n| n.eval_unchecked(x)).collect(),
        })
    }
}
