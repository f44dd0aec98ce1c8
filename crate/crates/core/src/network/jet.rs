//! Second-order input jets of a network and their reverse-mode parameter
//! gradients.
//!
//! The forward pass propagates value, input gradient and input Hessian of
//! every unit. The backward pass takes adjoints for the output value,
//! gradient and Hessian and accumulates the gradient of that linear
//! functional with respect to every parameter. The trainer uses this to
//! differentiate PDE residuals without materialising derivative networks.

use super::{dot, Network};

/// Value, gradient and row-major Hessian of a scalar function at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Jet {
    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    #[inline]
    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.grad.len() + j]
    }
}

/// Borrowing adapter that exposes a network's analytic jets.
#[derive(Debug, Clone, Copy)]
pub struct JetNetwork<'a>(pub &'a Network);

struct LayerTrace {
    // per unit: activation value and derivatives at the pre-activation
    s: Vec<[f64; 4]>,
    zg: Vec<f64>,
    zh: Vec<f64>,
}

struct Values {
    v: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
}

/// Everything the backward pass needs, recorded at one input point.
pub struct JetTrace {
    d: usize,
    inputs: Vec<Values>,
    layers: Vec<LayerTrace>,
    jet: Jet,
}

impl JetTrace {
    pub fn forward(net: &Network, x: &[f64]) -> JetTrace {
        let d = net.input_dim;
        let dd = d * d;
        let mut eye = vec![0.0; dd];
        for k in 0..d {
            eye[k * d + k] = 1.0;
        }
        let mut inputs = vec![Values {
            v: x.to_vec(),
            g: eye,
            h: vec![0.0; d * dd],
        }];
        let mut layers = Vec::with_capacity(net.layers.len());

        for layer in &net.layers {
            let prev = inputs.last().unwrap();
            let n = layer.units();
            let mut tr = LayerTrace {
                s: Vec::with_capacity(n),
                zg: vec![0.0; n * d],
                zh: vec![0.0; n * dd],
            };
            let mut out = Values {
                v: Vec::with_capacity(n),
                g: vec![0.0; n * d],
                h: vec![0.0; n * dd],
            };
            for (q, (row, b)) in layer.weights.iter().zip(&layer.bias).enumerate() {
                let z = dot(row, &prev.v) + b;
                let zg = &mut tr.zg[q * d..(q + 1) * d];
                let zh = &mut tr.zh[q * dd..(q + 1) * dd];
                for (j, &w) in row.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    for (acc, pg) in zg.iter_mut().zip(&prev.g[j * d..(j + 1) * d]) {
                        *acc += w * pg;
                    }
                    for (acc, ph) in zh.iter_mut().zip(&prev.h[j * dd..(j + 1) * dd]) {
                        *acc += w * ph;
                    }
                }
                let s = layer.activations[q].derivatives(z);
                out.v.push(s[0]);
                for k in 0..d {
                    out.g[q * d + k] = s[1] * zg[k];
                    for m in 0..d {
                        out.h[q * dd + k * d + m] = s[2] * zg[k] * zg[m] + s[1] * zh[k * d + m];
                    }
                }
                tr.s.push(s);
            }
            layers.push(tr);
            inputs.push(out);
        }

        let last = inputs.last().unwrap();
        let w = &net.output_weights;
        let mut jet = Jet {
            value: dot(w, &last.v) + net.output_bias,
            grad: vec![0.0; d],
            hess: vec![0.0; dd],
        };
        for (q, &wq) in w.iter().enumerate() {
            for (acc, g) in jet.grad.iter_mut().zip(&last.g[q * d..(q + 1) * d]) {
                *acc += wq * g;
            }
            for (acc, h) in jet.hess.iter_mut().zip(&last.h[q * dd..(q + 1) * dd]) {
                *acc += wq * h;
            }
        }
        JetTrace {
            d,
            inputs,
            layers,
            jet,
        }
    }

    pub fn jet(&self) -> &Jet {
        &self.jet
    }

    pub fn into_jet(self) -> Jet {
        self.jet
    }

    /// Accumulates into `grad` the parameter gradient of
    /// `adj_value * u + adj_grad . grad u + adj_hess : hess u`.
    pub fn backward(
        &self,
        net: &Network,
        adj_value: f64,
        adj_grad: &[f64],
        adj_hess: &[f64],
        grad: &mut [f64],
    ) {
        let d = self.d;
        let dd = d * d;
        debug_assert_eq!(grad.len(), net.param_count());
        debug_assert_eq!(adj_grad.len(), d);
        debug_assert_eq!(adj_hess.len(), dd);

        let last = self.inputs.last().unwrap();
        let n_out = net.output_weights.len();
        let mut offset = grad.len() - n_out - 1;
        for q in 0..n_out {
            grad[offset + q] += adj_value * last.v[q]
                + dot(adj_grad, &last.g[q * d..(q + 1) * d])
                + dot(adj_hess, &last.h[q * dd..(q + 1) * dd]);
        }
        grad[offset + n_out] += adj_value;

        // adjoints of the current layer's outputs
        let mut av: Vec<f64> = net.output_weights.iter().map(|w| w * adj_value).collect();
        let mut ag: Vec<f64> = Vec::with_capacity(n_out * d);
        let mut ah: Vec<f64> = Vec::with_capacity(n_out * dd);
        for &w in &net.output_weights {
            ag.extend(adj_grad.iter().map(|a| w * a));
            ah.extend(adj_hess.iter().map(|a| w * a));
        }

        for (l, layer) in net.layers.iter().enumerate().rev() {
            let tr = &self.layers[l];
            let prev = &self.inputs[l];
            let n = layer.units();
            let fan_in = layer.fan_in();
            offset -= n * (fan_in + 1);

            let mut pv = vec![0.0; fan_in];
            let mut pg = vec![0.0; fan_in * d];
            let mut ph = vec![0.0; fan_in * dd];
            let mut zg_bar = vec![0.0; d];
            let mut zh_bar = vec![0.0; dd];

            for q in 0..n {
                let s = tr.s[q];
                if s[1] == 0.0 && s[2] == 0.0 && s[3] == 0.0 {
                    continue;
                }
                let zg = &tr.zg[q * d..(q + 1) * d];
                let zh = &tr.zh[q * dd..(q + 1) * dd];
                let agq = &ag[q * d..(q + 1) * d];
                let ahq = &ah[q * dd..(q + 1) * dd];

                let mut quad = 0.0;
                for k in 0..d {
                    for m in 0..d {
                        quad += zg[k] * ahq[k * d + m] * zg[m];
                    }
                }
                let z_bar =
                    s[1] * av[q] + s[2] * dot(agq, zg) + s[3] * quad + s[2] * dot(ahq, zh);
                for k in 0..d {
                    let mut sym = 0.0;
                    for m in 0..d {
                        sym += (ahq[k * d + m] + ahq[m * d + k]) * zg[m];
                    }
                    zg_bar[k] = s[1] * agq[k] + s[2] * sym;
                }
                for (zb, a) in zh_bar.iter_mut().zip(ahq) {
                    *zb = s[1] * a;
                }

                let row_off = offset + q * fan_in;
                for j in 0..fan_in {
                    grad[row_off + j] += z_bar * prev.v[j]
                        + dot(&zg_bar, &prev.g[j * d..(j + 1) * d])
                        + dot(&zh_bar, &prev.h[j * dd..(j + 1) * dd]);
                }
                grad[offset + n * fan_in + q] += z_bar;

                if l > 0 {
                    for (j, &w) in layer.weights[q].iter().enumerate() {
                        if w == 0.0 {
                            continue;
                        }
                        pv[j] += w * z_bar;
                        for k in 0..d {
                            pg[j * d + k] += w * zg_bar[k];
                        }
                        for kk in 0..dd {
                            ph[j * dd + kk] += w * zh_bar[kk];
                        }
                    }
                }
            }
            av = pv;
            ag = pg;
            ah = ph;
        }
    }
}

impl Network {
    /// Value, input gradient and input Hessian at `x`.
    pub fn jet(&self, x: &[f64]) -> Jet {
        JetTrace::forward(self, x).into_jet()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Activation, Layer};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i] += h;
                m[i] -= h;
                (f(&p) - f(&m)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn jet_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = Network::random(2, 3, 5, Activation::Relu3, &mut rng);
        let x = [0.31, 0.77];
        let jet = net.jet(&x);
        assert!((jet.value - net.eval(&x).unwrap()).abs() < 1e-14);
        let g = fd_grad(|p| net.eval_unchecked(p), &x, 1e-6);
        for k in 0..2 {
            assert!((jet.grad[k] - g[k]).abs() < 1e-7 * (1.0 + g[k].abs()));
        }
        for k in 0..2 {
            let gk = fd_grad(|p| net.jet(p).grad[k], &x, 1e-6);
            for m in 0..2 {
                assert!((jet.hess_at(k, m) - gk[m]).abs() < 1e-6 * (1.0 + gk[m].abs()));
            }
        }
    }

    #[test]
    fn value_adjoint_reproduces_param_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let net = Network::random(3, 4, 6, Activation::Relu3, &mut rng);
        let x = [0.2, 0.5, 0.9];
        let tr = JetTrace::forward(&net, &x);
        let mut g = vec![0.0; net.param_count()];
        tr.backward(&net, 1.0, &[0.0; 3], &[0.0; 9], &mut g);
        let want = net.param_gradient(&x).unwrap();
        for (a, b) in g.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn jet_functional_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut net = Network::random(2, 3, 4, Activation::Relu3, &mut rng);
        // mixed activations exercise every branch of the backward pass
        net.layers[0].activations[1] = Activation::Relu2;
        net.layers[1].activations[0] = Activation::Relu2;
        let x = [0.4, 0.65];
        let av = 0.7;
        let ag = [-0.3, 1.1];
        let ah = [0.5, -0.2, 0.8, 1.3];
        let functional = |n: &Network| {
            let j = n.jet(&x);
            av * j.value + dot(&ag, &j.grad) + dot(&ah, &j.hess)
        };
        let tr = JetTrace::forward(&net, &x);
        let mut g = vec![0.0; net.param_count()];
        tr.backward(&net, av, &ag, &ah, &mut g);
        let p0 = net.params();
        let h = 1e-6;
        for i in 0..p0.len() {
            let mut p = p0.clone();
            p[i] += h;
            net.set_params(&p).unwrap();
            let fp = functional(&net);
            p[i] -= 2.0 * h;
            net.set_params(&p).unwrap();
            let fm = functional(&net);
            let fd = (fp - fm) / (2.0 * h);
            assert!((g[i] - fd).abs() < 1e-5 * (1.0 + fd.abs()), "param {i}: {} vs {fd}", g[i]);
        }
        net.set_params(&p0).unwrap();
    }

    #[test]
    fn affine_network_jet() {
        let net = Network::affine(vec![2.0, -1.0], 0.5);
        let j = net.jet(&[1.0, 3.0]);
        assert_eq!(j.value, -0.5);
        assert_eq!(j.grad, vec![2.0, -1.0]);
        assert_eq!(j.hess, vec![0.0; 4]);
    }

    #[test]
    fn random_points_single_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let net = Network::new(
            1,
            vec![Layer::new(vec![vec![1.5]], vec![0.25], vec![Activation::Relu3])],
            vec![2.0],
            0.0,
        )
        .unwrap();
        for _ in 0..20 {
            let x: f64 = rng.gen_range(0.0..1.0);
            let z = 1.5 * x + 0.25;
            let j = net.jet(&[x]);
            assert!((j.grad[0] - 2.0 * 3.0 * z * z * 1.5).abs() < 1e-12);
            assert!((j.hess[0] - 2.0 * 6.0 * z * 1.5 * 1.5).abs() < 1e-12);
        }
    }
}
