//! Structural transform `u ↦ ∂u/∂x_i`.
//!
//! For `u` with hidden layers `a^l = rho(z^l)`, `z^l = A_l a^{l-1} + b_l`:
//!
//! ```text
//! D a^l = rho'(z^l) * D z^l,   D z^{l+1} = A_{l+1} D a^l,   D u = A_out D a^h
//! ```
//!
//! `rho'` is a scaled activation of one degree less (`3 ReLU²` for ReLU³,
//! `2 ReLU` for ReLU²), so the factor `rho'(z^l)` is a unit of layer `l`. The
//! product with `D z^l` is formed one layer later with the ReLU² product
//! gadget, which is exact on all reals. Layer `l` of the result therefore holds
//! the primal units `a^l` (while still needed), the derivative-factor units
//! for layer `l`, and the product gadgets finishing `D a^{l-1}`. `D z^2` is
//! lifted from layer 1 to layer 2 through ReLU² identity lanes. The output is
//! padded with identity lanes so that every input of depth `D` maps to depth
//! exactly `D + 2`, independent of `i`.

use super::builder::{relu2_identity, relu2_product, LinExpr, NetBuilder, Unit};
use crate::network::{Activation, Network};
use crate::{Error, Result};

enum Pending {
    Lift(Vec<LinExpr>),
    Product(Vec<(LinExpr, LinExpr)>),
}

/// Network computing `∂u/∂x_i` (`i` is zero-based).
///
/// Every hidden unit of `net` must be ReLU² or ReLU³; ReLU units are rejected
/// because their derivative is not representable by the activation set. The
/// result has depth `D + 2` and width at most `(D + 2) W`.
pub fn derivative_network(net: &Network, i: usize) -> Result<Network> {
    let d = net.input_dim;
    if i >= d {
        return Err(Error::BadCoordinate { index: i, dim: d });
    }
    for (l, layer) in net.layers.iter().enumerate() {
        if let Some(q) = layer.activations.iter().position(|&a| a == Activation::Relu) {
            return Err(Error::NotDifferentiable {
                layer: l + 1,
                unit: q,
            });
        }
    }

    let h = net.layers.len();
    let target_hidden = h + 2;
    let mut b = NetBuilder::new(d);

    if h == 0 {
        for _ in 0..target_hidden {
            b.push(vec![Unit::new(LinExpr::constant(0.0), Activation::Relu2)]);
        }
        return b.finish(&LinExpr::constant(net.output_weights[i]));
    }

    // primal activations of the previous original layer, as expressions over
    // the previous built layer (the inputs at the start)
    let mut prim: Vec<LinExpr> = (0..d).map(LinExpr::var).collect();
    let mut pending: Option<Pending> = None;
    let mut built = 0;
    let output: LinExpr;

    loop {
        let l = built + 1; // index of the layer being built
        let mut units = Vec::new();

        let mut next_prim = Vec::new();
        let mut dfac = Vec::new();
        if l <= h {
            let layer = &net.layers[l - 1];
            let z: Vec<LinExpr> = layer
                .weights
                .iter()
                .zip(&layer.bias)
                .map(|(row, &bias)| {
                    let mut e = LinExpr::constant(bias);
                    for (p, &w) in prim.iter().zip(row) {
                        e.add_scaled(p, w);
                    }
                    e
                })
                .collect();
            if l < h {
                for (zq, &act) in z.iter().zip(&layer.activations) {
                    next_prim.push(LinExpr::var(units.len()));
                    units.push(Unit::new(zq.clone(), act));
                }
            }
            for (zq, &act) in z.iter().zip(&layer.activations) {
                let (lower, scale) = act.derivative_kind().expect("ReLU units rejected above");
                dfac.push(LinExpr::var(units.len()).scaled(scale));
                units.push(Unit::new(zq.clone(), lower));
            }
        }

        // D a^{l-1} (or D z^2 when lifting) over the layer being built
        let carried: Option<Vec<LinExpr>> = match pending.take() {
            None => None,
            Some(Pending::Lift(xs)) => {
                Some(xs.iter().map(|x| relu2_identity(x).place(&mut units)).collect())
            }
            Some(Pending::Product(pairs)) => Some(
                pairs
                    .iter()
                    .map(|(x, y)| relu2_product(x, y).place(&mut units))
                    .collect(),
            ),
        };
        b.push(units);
        built += 1;

        if l == 1 {
            let a1 = &net.layers[0];
            let da: Vec<LinExpr> = dfac
                .iter()
                .zip(&a1.weights)
                .map(|(f, row)| f.scaled(row[i]))
                .collect();
            if h == 1 {
                output = linear_map(&net.output_weights, &da);
                break;
            }
            pending = Some(Pending::Lift(apply_weights(&net.layers[1].weights, &da)));
        } else if l == 2 {
            let dz = carried.expect("lift pending at layer 2");
            pending = Some(Pending::Product(dfac.into_iter().zip(dz).collect()));
        } else {
            // products placed here complete D a^{l-1}
            let da = carried.expect("product pending");
            if l - 1 == h {
                output = linear_map(&net.output_weights, &da);
                break;
            }
            let dz = apply_weights(&net.layers[l - 1].weights, &da);
            pending = Some(Pending::Product(dfac.into_iter().zip(dz).collect()));
        }
        prim = next_prim;
    }

    let mut output = output;
    while built < target_hidden {
        let mut units = Vec::new();
        output = relu2_identity(&output).place(&mut units);
        b.push(units);
        built += 1;
    }
    b.finish(&output)
}

/// Network computing `∂²u/∂x_i∂x_j`: the first-derivative transform applied
/// twice. Depth `D + 4`, width at most `(D + 2)(D + 4) W`. Requires ReLU³
/// hidden units only, since the first transform turns ReLU² into ReLU.
pub fn second_derivative_network(net: &Network, i: usize, j: usize) -> Result<Network> {
    let first = derivative_network(net, i)?;
    derivative_network(&first, j)
}

fn apply_weights(weights: &[Vec<f64>], xs: &[LinExpr]) -> Vec<LinExpr> {
    weights.iter().map(|row| linear_map(row, xs)).collect()
}

fn linear_map(row: &[f64], xs: &[LinExpr]) -> LinExpr {
    let mut e = LinExpr::default();
    for (x, &w) in xs.iter().zip(row) {
        e.add_scaled(x, w);
    }
    e
}
