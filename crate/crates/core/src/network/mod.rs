//! Feedforward networks with per-unit activations from {ReLU, ReLU², ReLU³}.
//!
//! A network of depth `D` has `D - 1` hidden layers followed by an affine
//! scalar output:
//!
//! ```text
//! f_0 = x,  f_l = rho_l(A_l f_{l-1} + b_l)  (l = 1..D-1),  f = A_D f_{D-1} + b_D
//! ```
//!
//! Activations are tagged per unit because the derivative-network transform
//! produces layers that mix activation kinds.
//!
//! Parameter layout (used by [`Network::params`], [`Network::set_params`] and
//! [`Network::param_gradient`]): layer-major; within a layer the weight matrix
//! row-major, followed by the bias vector; the output weights and then the
//! output bias come last.

mod jet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Exec, Result};

pub use jet::{Jet, JetNetwork, JetTrace};

/// Activation applied to a single unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Relu2,
    Relu3,
}

impl Activation {
    /// Polynomial degree of the positive branch.
    pub fn power(self) -> i32 {
        match self {
            Activation::Relu => 1,
            Activation::Relu2 => 2,
            Activation::Relu3 => 3,
        }
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        match self {
            Activation::Relu => z,
            Activation::Relu2 => z * z,
            Activation::Relu3 => z * z * z,
        }
    }

    /// Value and first three derivatives at `z`. The derivative at the kink
    /// is taken from the left, i.e. zero.
    #[inline]
    pub fn derivatives(self, z: f64) -> [f64; 4] {
        if z <= 0.0 {
            return [0.0; 4];
        }
        match self {
            Activation::Relu => [z, 1.0, 0.0, 0.0],
            Activation::Relu2 => [z * z, 2.0 * z, 2.0, 0.0],
            Activation::Relu3 => [z * z * z, 3.0 * z * z, 6.0 * z, 6.0],
        }
    }

    /// The activation whose scaled copy is the derivative of `self`:
    /// `(ReLU²)' = 2 ReLU`, `(ReLU³)' = 3 ReLU²`. ReLU has none.
    pub fn derivative_kind(self) -> Option<(Activation, f64)> {
        match self {
            Activation::Relu => None,
            Activation::Relu2 => Some((Activation::Relu, 2.0)),
            Activation::Relu3 => Some((Activation::Relu2, 3.0)),
        }
    }
}

/// One hidden layer: `rho(W a + b)` with a per-unit activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activations: Vec<Activation>,
}

impl Layer {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>, activations: Vec<Activation>) -> Self {
        Layer {
            weights,
            bias,
            activations,
        }
    }

    pub fn units(&self) -> usize {
        self.bias.len()
    }

    pub fn fan_in(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .iter()
                .zip(&self.bias)
                .zip(&self.activations)
                .map(|((row, b), act)| act.apply(dot(row, input) + b)),
        );
    }
}

/// Depth, width and the norm cap of a network class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub depth: usize,
    pub width: usize,
    pub sup_bound: Option<f64>,
}

impl Architecture {
    pub fn new(depth: usize, width: usize) -> Result<Self> {
        if depth == 0 || width == 0 {
            return Err(Error::InvalidArgument(format!(
                "architecture needs depth >= 1 and width >= 1 (got {depth}, {width})"
            )));
        }
        Ok(Architecture {
            depth,
            width,
            sup_bound: None,
        })
    }
}

/// A scalar-output feedforward network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    pub input_dim: usize,
    pub layers: Vec<Layer>,
    #[serde(with = "row_matrix")]
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

mod row_matrix {
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(row: &[f64], s: S) -> Result<S::Ok, S::Error> {
        [row].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let mut rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        if rows.len() != 1 {
            return Err(D::Error::custom("output_weights must be a 1 x n matrix"));
        }
        Ok(rows.pop().unwrap())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Network {
    /// Builds a network and checks that layer shapes chain.
    pub fn new(
        input_dim: usize,
        layers: Vec<Layer>,
        output_weights: Vec<f64>,
        output_bias: f64,
    ) -> Result<Self> {
        let net = Network {
            input_dim,
            layers,
            output_weights,
            output_bias,
        };
        net.validate()?;
        Ok(net)
    }

    /// An affine map `w . x + b` (depth 1).
    pub fn affine(weights: Vec<f64>, bias: f64) -> Self {
        Network {
            input_dim: weights.len(),
            layers: Vec::new(),
            output_weights: weights,
            output_bias: bias,
        }
    }

    /// The identically zero network on `R^d`.
    pub fn zero(input_dim: usize) -> Self {
        Network::affine(vec![0.0; input_dim], 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidNetwork("input dimension must be positive".into()));
        }
        let mut prev = self.input_dim;
        for (l, layer) in self.layers.iter().enumerate() {
            let n = layer.bias.len();
            if n == 0 || layer.weights.len() != n || layer.activations.len() != n {
                return Err(Error::InvalidNetwork(format!(
                    "layer {}: weights rows {}, bias {}, activations {} must agree and be non-zero",
                    l + 1,
                    layer.weights.len(),
                    n,
                    layer.activations.len()
                )));
            }
            if let Some(row) = layer.weights.iter().find(|r| r.len() != prev) {
                return Err(Error::InvalidNetwork(format!(
                    "layer {}: weight row of length {} does not match fan-in {}",
                    l + 1,
                    row.len(),
                    prev
                )));
            }
            prev = n;
        }
        if self.output_weights.len() != prev {
            return Err(Error::InvalidNetwork(format!(
                "output weights have length {}, expected {}",
                self.output_weights.len(),
                prev
            )));
        }
        Ok(())
    }

    /// Number of affine maps.
    pub fn depth(&self) -> usize {
        self.layers.len() + 1
    }

    /// Largest layer size, counting the input dimension.
    pub fn width(&self) -> usize {
        self.layers
            .iter()
            .map(Layer::units)
            .chain(std::iter::once(self.input_dim))
            .max()
            .unwrap_or(self.input_dim)
    }

    pub fn architecture_stats(&self) -> Architecture {
        Architecture {
            depth: self.depth(),
            width: self.width(),
            sup_bound: None,
        }
    }

    /// Number of hidden units.
    pub fn units(&self) -> usize {
        self.layers.iter().map(Layer::units).sum()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.units() * (l.fan_in() + 1))
            .sum::<usize>()
            + self.output_weights.len()
            + 1
    }

    pub fn uses_only(&self, allowed: &[Activation]) -> bool {
        self.layers
            .iter()
            .flat_map(|l| &l.activations)
            .all(|a| allowed.contains(a))
    }

    /// Evaluates the network at `x`, rejecting inputs of the wrong dimension.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluation without the dimension check, for hot loops over points that
    /// are known to have the right shape.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.forward(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        dot(&self.output_weights, &cur) + self.output_bias
    }

    /// Evaluates at every point, in order.
    pub fn eval_many(&self, points: &[Vec<f64>], exec: Exec) -> Vec<f64> {
        exec.map(points, |p| self.eval_unchecked(p))
    }

    /// Lower estimate of `sup |u|` on `[0,1]^d` from a tensor grid.
    ///
    /// The grid is dyadic: `resolution` is rounded up to `2^m + 1` points per
    /// axis, so grids are nested and the estimate never decreases as the
    /// resolution grows.
    pub fn sup_norm_estimate(&self, grid_resolution: usize, exec: Exec) -> Result<f64> {
        if grid_resolution < 2 {
            return Err(Error::InvalidArgument("grid resolution must be at least 2".into()));
        }
        let intervals = (grid_resolution - 1).next_power_of_two();
        let per_axis = intervals + 1;
        let d = self.input_dim;
        let total = per_axis.checked_pow(d as u32).ok_or_else(|| {
            Error::InvalidArgument("sup-norm grid too large for this dimension".into())
        })?;
        let vals = exec.map_range(total, |mut idx| {
            let mut x = vec![0.0; d];
            for xi in x.iter_mut().rev() {
                *xi = (idx % per_axis) as f64 / intervals as f64;
                idx /= per_axis;
            }
            self.eval_unchecked(&x).abs()
        });
        Ok(vals.into_iter().fold(0.0, f64::max))
    }

    /// Flat parameter vector in the documented layout.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            for row in &layer.weights {
                p.extend_from_slice(row);
            }
            p.extend_from_slice(&layer.bias);
        }
        p.extend_from_slice(&self.output_weights);
        p.push(self.output_bias);
        p
    }

    /// Replaces all parameters from a flat vector in the documented layout.
    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                got: p.len(),
            });
        }
        let mut it = p.iter().copied();
        for layer in &mut self.layers {
            for row in &mut layer.weights {
                for w in row.iter_mut() {
                    *w = it.next().unwrap();
                }
            }
            for b in &mut layer.bias {
                *b = it.next().unwrap();
            }
        }
        for w in &mut self.output_weights {
            *w = it.next().unwrap();
        }
        self.output_bias = it.next().unwrap();
        Ok(())
    }

    /// Gradient of `eval(x)` with respect to every parameter, by reverse
    /// accumulation. The kink derivative is taken as zero.
    pub fn param_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        // forward, keeping pre-activations and activations per layer
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        acts.push(x.to_vec());
        for layer in &self.layers {
            let input = acts.last().unwrap();
            let z: Vec<f64> = layer
                .weights
                .iter()
                .zip(&layer.bias)
                .map(|(row, b)| dot(row, input) + b)
                .collect();
            let a = z
                .iter()
                .zip(&layer.activations)
                .map(|(&z, act)| act.apply(z))
                .collect();
            pre.push(z);
            acts.push(a);
        }

        let mut grad = vec![0.0; self.param_count()];
        let mut offset = grad.len() - self.output_weights.len() - 1;
        let last = acts.last().unwrap();
        grad[offset..offset + last.len()].copy_from_slice(last);
        *grad.last_mut().unwrap() = 1.0;

        let mut upstream = self.output_weights.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let dz: Vec<f64> = upstream
                .iter()
                .zip(&pre[l])
                .zip(&layer.activations)
                .map(|((g, &z), act)| g * act.derivatives(z)[1])
                .collect();
            let fan_in = layer.fan_in();
            let n = layer.units();
            offset -= n * (fan_in + 1);
            let input = &acts[l];
            for (q, &g) in dz.iter().enumerate() {
                let row = &mut grad[offset + q * fan_in..offset + (q + 1) * fan_in];
                for (slot, a) in row.iter_mut().zip(input) {
                    *slot = g * a;
                }
                grad[offset + n * fan_in + q] = g;
            }
            let mut next = vec![0.0; fan_in];
            for (row, &g) in layer.weights.iter().zip(&dz) {
                if g != 0.0 {
                    for (acc, w) in next.iter_mut().zip(row) {
                        *acc += g * w;
                    }
                }
            }
            upstream = next;
        }
        Ok(grad)
    }

    /// A network with `depth - 1` hidden layers of `width` units of the given
    /// activation, weights and biases uniform in `[-s, s]`, `s = fan_in^{-1/2}`.
    pub fn random<R: Rng + ?Sized>(
        input_dim: usize,
        depth: usize,
        width: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let mut layers = Vec::with_capacity(depth.saturating_sub(1));
        let mut fan_in = input_dim;
        for _ in 1..depth {
            let s = (fan_in as f64).powf(-0.5);
            let weights = (0..width)
                .map(|_| (0..fan_in).map(|_| rng.gen_range(-s..=s)).collect())
                .collect();
            let bias = (0..width).map(|_| rng.gen_range(-s..=s)).collect();
            layers.push(Layer::new(weights, bias, vec![activation; width]));
            fan_in = width;
        }
        let s = (fan_in as f64).powf(-0.5);
        let output_weights = (0..fan_in).map(|_| rng.gen_range(-s..=s)).collect();
        let output_bias = rng.gen_range(-s..=s);
        Network {
            input_dim,
            layers,
            output_weights,
            output_bias,
        }
    }

    /// `alpha * u + beta * v` for two networks of equal depth and input
    /// dimension, realised by block-diagonal stacking of the hidden layers.
    pub fn stack_sum(u: &Network, alpha: f64, v: &Network, beta: f64) -> Result<Network> {
        if u.input_dim != v.input_dim || u.depth() != v.depth() {
            return Err(Error::InvalidArgument(
                "stacked networks need equal input dimension and depth".into(),
            ));
        }
        let mut layers = Vec::with_capacity(u.layers.len());
        for (l, (lu, lv)) in u.layers.iter().zip(&v.layers).enumerate() {
            let (fu, fv) = (lu.fan_in(), lv.fan_in());
            let mut weights = Vec::with_capacity(lu.units() + lv.units());
            for row in &lu.weights {
                let mut r = row.clone();
                if l > 0 {
                    r.extend(std::iter::repeat_n(0.0, fv));
                }
                weights.push(r);
            }
            for row in &lv.weights {
                let r = if l > 0 {
                    let mut r = vec![0.0; fu];
                    r.extend_from_slice(row);
                    r
                } else {
                    row.clone()
                };
                weights.push(r);
            }
            let bias = lu.bias.iter().chain(&lv.bias).copied().collect();
            let activations = lu.activations.iter().chain(&lv.activations).copied().collect();
            layers.push(Layer::new(weights, bias, activations));
        }
        let output_weights = if u.layers.is_empty() {
            u.output_weights
                .iter()
                .zip(&v.output_weights)
                .map(|(a, b)| alpha * a + beta * b)
                .collect()
        } else {
            u.output_weights
                .iter()
                .map(|w| alpha * w)
                .chain(v.output_weights.iter().map(|w| beta * w))
                .collect()
        };
        Network::new(
            u.input_dim,
            layers,
            output_weights,
            alpha * u.output_bias + beta * v.output_bias,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let net: Network = serde_json::from_str(s)?;
        net.validate()?;
        Ok(net)
    }
}
