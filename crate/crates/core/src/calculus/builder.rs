//! Layer-by-layer network assembly from sparse affine expressions.
//!
//! Units are described by a [`LinExpr`] over the units of the previous layer
//! (or over the inputs for the first hidden layer). Gadgets are emitted as
//! [`Block`]s that are placed into a layer and read out as a new expression
//! over that layer.

use crate::network::{Activation, Layer, Network};
use crate::Result;

/// `constant + sum coef * var` over the units of one layer.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(i: usize) -> Self {
        LinExpr {
            terms: vec![(i, 1.0)],
            constant: 0.0,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        LinExpr {
            terms: self.terms.iter().map(|&(i, w)| (i, c * w)).collect(),
            constant: c * self.constant,
        }
    }

    pub fn shifted(&self, c: f64) -> Self {
        LinExpr {
            terms: self.terms.clone(),
            constant: self.constant + c,
        }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, c: f64) {
        self.terms.extend(other.terms.iter().map(|&(i, w)| (i, c * w)));
        self.constant += c * other.constant;
    }

    /// `a * x + b * y`.
    pub fn combine(x: &LinExpr, a: f64, y: &LinExpr, b: f64) -> Self {
        let mut out = x.scaled(a);
        out.add_scaled(y, b);
        out
    }

    #[cfg(test)]
    pub fn eval(&self, vals: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, w)| w * vals[i]).sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Unit {
    pub expr: LinExpr,
    pub act: Activation,
}

impl Unit {
    pub fn new(expr: LinExpr, act: Activation) -> Self {
        Unit { expr, act }
    }
}

/// A group of units in one layer plus the affine readout of their outputs.
#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub units: Vec<Unit>,
    pub readout: Vec<f64>,
    pub constant: f64,
}

impl Block {
    /// Appends the units to `layer` and returns the readout over that layer.
    pub fn place(self, layer: &mut Vec<Unit>) -> LinExpr {
        let offset = layer.len();
        layer.extend(self.units);
        LinExpr {
            terms: self
                .readout
                .into_iter()
                .enumerate()
                .map(|(j, c)| (offset + j, c))
                .collect(),
            constant: self.constant,
        }
    }
}

fn shifted_units(x: &LinExpr, shifts: &[f64], act: Activation) -> Vec<Unit> {
    shifts
        .iter()
        .map(|&s| Unit::new(x.shifted(s), act))
        .collect()
}

/// `x^2 = -(1/6)[s(x+2) - 4 s(x+1) + 3 s(x) - 4]`, `s = ReLU^3`, valid for `x >= 0`.
pub(crate) fn relu3_square(x: &LinExpr) -> Block {
    Block {
        units: shifted_units(x, &[2.0, 1.0, 0.0], Activation::Relu3),
        readout: vec![-1.0 / 6.0, 4.0 / 6.0, -3.0 / 6.0],
        constant: 4.0 / 6.0,
    }
}

/// `x = -(1/12)[s(x+3) - 5 s(x+2) + 7 s(x+1) - 3 s(x) + 6]`, valid for `x >= 0`.
pub(crate) fn relu3_identity(x: &LinExpr) -> Block {
    Block {
        units: shifted_units(x, &[3.0, 2.0, 1.0, 0.0], Activation::Relu3),
        readout: vec![-1.0 / 12.0, 5.0 / 12.0, -7.0 / 12.0, 3.0 / 12.0],
        constant: -0.5,
    }
}

/// Ten-term ReLU³ product identity, valid for `x, y >= 0`.
pub(crate) fn relu3_product(x: &LinExpr, y: &LinExpr) -> Block {
    let sum = LinExpr::combine(x, 1.0, y, 1.0);
    let mut units = shifted_units(&sum, &[2.0, 1.0, 0.0], Activation::Relu3);
    units.extend(shifted_units(x, &[2.0, 1.0, 0.0], Activation::Relu3));
    units.extend(shifted_units(y, &[2.0, 1.0, 0.0], Activation::Relu3));
    let c = -1.0 / 12.0;
    Block {
        units,
        readout: [1.0, -4.0, 3.0, -1.0, 4.0, -3.0, -1.0, 4.0, -3.0]
            .iter()
            .map(|v| c * v)
            .collect(),
        constant: 4.0 * c,
    }
}

/// `xy = (1/4)[R(x+y) + R(-x-y) - R(x-y) - R(-x+y)]`, `R = ReLU^2`, all reals.
pub(crate) fn relu2_product(x: &LinExpr, y: &LinExpr) -> Block {
    let plus = LinExpr::combine(x, 1.0, y, 1.0);
    let minus = LinExpr::combine(x, 1.0, y, -1.0);
    Block {
        units: vec![
            Unit::new(plus.clone(), Activation::Relu2),
            Unit::new(plus.scaled(-1.0), Activation::Relu2),
            Unit::new(minus.clone(), Activation::Relu2),
            Unit::new(minus.scaled(-1.0), Activation::Relu2),
        ],
        readout: vec![0.25, 0.25, -0.25, -0.25],
        constant: 0.0,
    }
}

/// `x = (1/4)[(x+1)^2 - (x-1)^2]` with `t^2 = R(t) + R(-t)`, `R = ReLU^2`, all
/// reals. Used for pass-through lanes so that the result stays differentiable.
pub(crate) fn relu2_identity(x: &LinExpr) -> Block {
    let p = x.shifted(1.0);
    let m = x.shifted(-1.0);
    Block {
        units: vec![
            Unit::new(p.clone(), Activation::Relu2),
            Unit::new(p.scaled(-1.0), Activation::Relu2),
            Unit::new(m.clone(), Activation::Relu2),
            Unit::new(m.scaled(-1.0), Activation::Relu2),
        ],
        readout: vec![0.25, 0.25, -0.25, -0.25],
        constant: 0.0,
    }
}

/// Accumulates hidden layers and emits a dense [`Network`].
#[derive(Debug)]
pub(crate) struct NetBuilder {
    input_dim: usize,
    layers: Vec<Vec<Unit>>,
}

impl NetBuilder {
    pub fn new(input_dim: usize) -> Self {
        NetBuilder {
            input_dim,
            layers: Vec::new(),
        }
    }

    pub fn push(&mut self, layer: Vec<Unit>) {
        self.layers.push(layer);
    }

    pub fn finish(self, output: &LinExpr) -> Result<Network> {
        let mut fan_in = self.input_dim;
        let mut layers = Vec::with_capacity(self.layers.len());
        for units in self.layers {
            let n = units.len();
            let mut weights = vec![vec![0.0; fan_in]; n];
            let mut bias = Vec::with_capacity(n);
            let mut acts = Vec::with_capacity(n);
            for (row, unit) in weights.iter_mut().zip(&units) {
                for &(j, w) in &unit.expr.terms {
                    row[j] += w;
                }
                bias.push(unit.expr.constant);
                acts.push(unit.act);
            }
            layers.push(Layer::new(weights, bias, acts));
            fan_in = n;
        }
        let mut out = vec![0.0; fan_in];
        for &(j, w) in &output.terms {
            out[j] += w;
        }
        Network::new(self.input_dim, layers, out, output.constant)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_block(b: Block, inputs: &[f64]) -> f64 {
        let mut layer = Vec::new();
        let out = b.place(&mut layer);
        let vals: Vec<f64> = layer
            .iter()
            .map(|u| u.act.apply(u.expr.eval(inputs)))
            .collect();
        out.eval(&vals)
    }

    #[test]
    fn blocks_on_composite_inputs() {
        // gadgets applied to affine expressions of two inputs
        let x = LinExpr::combine(&LinExpr::var(0), 2.0, &LinExpr::var(1), 0.5);
        let y = LinExpr::var(1).shifted(-0.25);
        let p = [0.3, 0.8];
        let xv = 2.0 * 0.3 + 0.4;
        let yv = 0.8 - 0.25;
        assert!((eval_block(relu3_square(&x), &p) - xv * xv).abs() < 1e-12);
        assert!((eval_block(relu3_identity(&x), &p) - xv).abs() < 1e-12);
        assert!((eval_block(relu3_product(&x, &y), &p) - xv * yv).abs() < 1e-12);
        let yn = LinExpr::var(1).shifted(-3.0);
        assert!((eval_block(relu2_product(&x, &yn), &p) - xv * (0.8 - 3.0)).abs() < 1e-12);
        assert!((eval_block(relu2_identity(&yn), &p) - (0.8 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn finish_sums_repeated_terms() {
        let mut b = NetBuilder::new(1);
        let mut e = LinExpr::var(0);
        e.add_scaled(&LinExpr::var(0), 1.0);
        b.push(vec![Unit::new(e, Activation::Relu)]);
        let net = b.finish(&LinExpr::var(0)).unwrap();
        assert_eq!(net.layers[0].weights[0][0], 2.0);
        assert_eq!(net.eval(&[1.5]).unwrap(), 3.0);
    }
}
