use std::f64::consts::PI;

use serde::Serialize;

use super::{Domain, EllipticProblem, SampleSet, TrialFunction};
use crate::{Error, Exec, Result};

/// The four pieces of the residual at a point:
/// `residual = -p + q + r - f` with `p = sum a_ij u_ij`, `q = sum b_i u_i`,
/// `r = c u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualParts {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub f: f64,
}

impl ResidualParts {
    pub fn residual(&self) -> f64 {
        -self.p + self.q + self.r - self.f
    }
}

pub fn residual_parts<U: TrialFunction + ?Sized>(
    problem: &EllipticProblem,
    u: &U,
    x: &[f64],
) -> Result<ResidualParts> {
    let d = problem.dim();
    if x.len() != d || u.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if x.len() != d { x.len() } else { u.dim() },
        });
    }
    let jet = u.jet(x)?;
    let mut p = 0.0;
    for (a, h) in problem.a.iter().zip(&jet.hess) {
        p += a(x) * h;
    }
    let q = problem.b.iter().zip(&jet.grad).map(|(b, g)| b(x) * g).sum();
    Ok(ResidualParts {
        p,
        q,
        r: (problem.c)(x) * jet.value,
        f: (problem.f)(x),
    })
}

/// Pointwise residual `-sum a_ij u_ij + sum b_i u_i + c u - f`.
pub fn residual<U: TrialFunction + ?Sized>(problem: &EllipticProblem, u: &U, x: &[f64]) -> Result<f64> {
    Ok(residual_parts(problem, u, x)?.residual())
}

fn boundary_defect<U: TrialFunction + ?Sized>(problem: &EllipticProblem, u: &U, y: &[f64]) -> f64 {
    (problem.e)(y) * u.value(y) - (problem.g)(y)
}

/// `|Omega|/N sum residual(X_k)^2 + |dOmega|/M sum (e u - g)(Y_k)^2`.
pub fn empirical_loss<U: TrialFunction + ?Sized>(
    problem: &EllipticProblem,
    u: &U,
    samples: &SampleSet,
    exec: Exec,
) -> Result<f64> {
    if samples.interior.is_empty() || samples.boundary.is_empty() {
        return Err(Error::Empty("sample set needs interior and boundary points"));
    }
    let inner = exec
        .map(&samples.interior, |x| residual(problem, u, x).map(|r| r * r))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let outer = exec.map(&samples.boundary, |y| boundary_defect(problem, u, y).powi(2));
    let dom = &problem.domain;
    Ok(dom.volume() * mean(&inner) + dom.surface() * mean(&outer))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Nodes and weights for `Omega` and `dOmega`; weights sum to `|Omega|` and
/// `|dOmega|`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub interior: Vec<Vec<f64>>,
    pub interior_weights: Vec<f64>,
    pub boundary: Vec<Vec<f64>>,
    pub boundary_weights: Vec<f64>,
}

/// Composite Simpson for odd `n >= 3`, trapezoid otherwise.
fn rule_1d(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (b - a) / (n - 1) as f64;
    let xs = (0..n).map(|i| a + h * i as f64).collect();
    let ws = if n % 2 == 1 && n >= 3 {
        (0..n)
            .map(|i| {
                let c = if i == 0 || i == n - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect()
    } else {
        (0..n)
            .map(|i| if i == 0 || i == n - 1 { h / 2.0 } else { h })
            .collect()
    };
    (xs, ws)
}

fn tensor(axes: &[(Vec<f64>, Vec<f64>)]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut pts = vec![Vec::new()];
    let mut wts = vec![1.0];
    for (xs, ws) in axes {
        let mut np = Vec::with_capacity(pts.len() * xs.len());
        let mut nw = Vec::with_capacity(pts.len() * xs.len());
        for (p, w) in pts.iter().zip(&wts) {
            for (x, wx) in xs.iter().zip(ws) {
                let mut q = p.clone();
                q.push(*x);
                np.push(q);
                nw.push(w * wx);
            }
        }
        pts = np;
        wts = nw;
    }
    (pts, wts)
}

/// Tensor Simpson/trapezoid rules on the unit box (`d <= 3`) and polar rules
/// on balls (`d <= 2`), with `resolution` nodes per axis.
pub fn quadrature_rule(domain: &Domain, resolution: usize) -> Result<QuadratureRule> {
    if resolution < 2 {
        return Err(Error::InvalidArgument("quadrature resolution must be at least 2".into()));
    }
    let n = resolution;
    match domain {
        Domain::UnitBox { dim } => {
            let d = *dim;
            if d > 3 {
                return Err(Error::Unsupported(format!(
                    "box quadrature in dimension {d}; use Monte Carlo references"
                )));
            }
            let axis = rule_1d(0.0, 1.0, n);
            let (interior, interior_weights) = tensor(&vec![axis.clone(); d]);
            let mut boundary = Vec::new();
            let mut boundary_weights = Vec::new();
            for j in 0..d {
                for side in [0.0, 1.0] {
                    let (face, fw) = tensor(&vec![axis.clone(); d - 1]);
                    for (mut p, w) in face.into_iter().zip(fw) {
                        p.insert(j, side);
                        boundary.push(p);
                        boundary_weights.push(w);
                    }
                }
            }
            Ok(QuadratureRule {
                interior,
                interior_weights,
                boundary,
                boundary_weights,
            })
        }
        Domain::Ball {
            dim: 1,
            center,
            radius,
        } => {
            let (xs, ws) = rule_1d(center[0] - radius, center[0] + radius, n);
            Ok(QuadratureRule {
                interior: xs.into_iter().map(|x| vec![x]).collect(),
                interior_weights: ws,
                boundary: vec![vec![center[0] - radius], vec![center[0] + radius]],
                boundary_weights: vec![1.0, 1.0],
            })
        }
        Domain::Ball {
            dim: 2,
            center,
            radius,
        } => {
            let (rs, rw) = rule_1d(0.0, *radius, n);
            let dtheta = 2.0 * PI / n as f64;
            let mut interior = Vec::new();
            let mut interior_weights = Vec::new();
            let mut boundary = Vec::new();
            let mut boundary_weights = Vec::new();
            for m in 0..n {
                let (s, c) = (m as f64 * dtheta).sin_cos();
                for (&rho, &w) in rs.iter().zip(&rw) {
                    if rho == 0.0 {
                        continue;
                    }
                    interior.push(vec![center[0] + rho * c, center[1] + rho * s]);
                    interior_weights.push(w * rho * dtheta);
                }
                boundary.push(vec![center[0] + radius * c, center[1] + radius * s]);
                boundary_weights.push(radius * dtheta);
            }
            Ok(QuadratureRule {
                interior,
                interior_weights,
                boundary,
                boundary_weights,
            })
        }
        Domain::Ball { dim, .. } => Err(Error::Unsupported(format!(
            "ball quadrature in dimension {dim}"
        ))),
    }
}

impl QuadratureRule {
    /// `sum w_k h(x_k)` over the interior nodes, in node order.
    pub fn integrate_interior<F>(&self, exec: Exec, h: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync + Send,
    {
        let vals = exec
            .map_range(self.interior.len(), |k| h(&self.interior[k]))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(vals.iter().zip(&self.interior_weights).map(|(v, w)| v * w).sum())
    }

    pub fn integrate_boundary<F>(&self, exec: Exec, h: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync + Send,
    {
        let vals = exec
            .map_range(self.boundary.len(), |k| h(&self.boundary[k]))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(vals.iter().zip(&self.boundary_weights).map(|(v, w)| v * w).sum())
    }
}

/// Deterministic approximation of the population loss
/// `int_Omega residual^2 + int_dOmega (e u - g)^2`.
pub fn quadrature_loss<U: TrialFunction + ?Sized>(
    problem: &EllipticProblem,
    u: &U,
    resolution: usize,
    exec: Exec,
) -> Result<f64> {
    let rule = quadrature_rule(&problem.domain, resolution)?;
    let inner = rule.integrate_interior(exec, |x| residual(problem, u, x).map(|r| r * r))?;
    let outer = rule.integrate_boundary(exec, |y| Ok(boundary_defect(problem, u, y).powi(2)))?;
    Ok(inner + outer)
}

/// Norms of `u - u*`. `h1_semi` is the `L²` norm of the gradient error;
/// together with `l2` it brackets the `H^{1/2}` error, which is not computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport {
    /// max over quadrature nodes (interior and boundary)
    pub sup: f64,
    pub l2: f64,
    pub h1_semi: f64,
    /// `l2 / ||u*||_{L²}`
    pub rel_l2: f64,
}

pub fn error_report<U, V>(u: &U, exact: &V, domain: &Domain, resolution: usize, exec: Exec) -> Result<ErrorReport>
where
    U: TrialFunction + ?Sized,
    V: TrialFunction + ?Sized,
{
    let rule = quadrature_rule(domain, resolution)?;
    let per_node = exec
        .map_range(rule.interior.len(), |k| {
            let x = &rule.interior[k];
            let (v, g) = u.value_grad(x)?;
            let (ve, ge) = exact.value_grad(x)?;
            let dg: f64 = g.iter().zip(&ge).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok([(v - ve).abs(), (v - ve) * (v - ve), dg, ve * ve])
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut acc = [0.0; 3];
    let mut sup = 0.0f64;
    for (row, w) in per_node.iter().zip(&rule.interior_weights) {
        sup = sup.max(row[0]);
        acc[0] += w * row[1];
        acc[1] += w * row[2];
        acc[2] += w * row[3];
    }
    for y in &rule.boundary {
        sup = sup.max((u.value(y) - exact.value(y)).abs());
    }
    let l2 = acc[0].sqrt();
    let norm = acc[2].sqrt();
    Ok(ErrorReport {
        sup,
        l2,
        h1_semi: acc[1].sqrt(),
        rel_l2: if norm > 0.0 { l2 / norm } else { f64::INFINITY },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::gadget_square;
    use crate::network::{JetNetwork, Network};
    use crate::pde::{constant, draw_samples, field, manufactured_problem, DerivativeBundle};

    #[test]
    fn rules_integrate_known_integrals() {
        let r = quadrature_rule(&Domain::unit_box(2).unwrap(), 33).unwrap();
        let v = r.integrate_interior(Exec::Sequential, |x| Ok(x[0] * x[0] * x[1])).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-14);
        let s = r.integrate_boundary(Exec::Sequential, |_| Ok(1.0)).unwrap();
        assert!((s - 4.0).abs() < 1e-13);
        let disk = Domain::ball(vec![0.5, 0.5], 0.5).unwrap();
        let r = quadrature_rule(&disk, 65).unwrap();
        let area = r.integrate_interior(Exec::Sequential, |_| Ok(1.0)).unwrap();
        assert!((area - disk.volume()).abs() < 1e-12);
        let per = r.integrate_boundary(Exec::Sequential, |_| Ok(1.0)).unwrap();
        assert!((per - disk.surface()).abs() < 1e-12);
        let even = quadrature_rule(&Domain::unit_box(1).unwrap(), 10).unwrap();
        let t = even.integrate_interior(Exec::Sequential, |x| Ok(x[0])).unwrap();
        assert!((t - 0.5).abs() < 1e-15);
        assert!(quadrature_rule(&Domain::unit_box(4).unwrap(), 3).is_err());
        assert!(quadrature_rule(&Domain::unit_box(1).unwrap(), 1).is_err());
    }

    #[test]
    fn square_gadget_solves_constant_poisson() {
        // -u'' = -2 with u = x^2
        let mut p = EllipticProblem::laplace("t", Domain::unit_box(1).unwrap());
        p.f = constant(-2.0);
        let u = DerivativeBundle::new(gadget_square().network).unwrap();
        assert!(residual(&p, &u, &[0.5]).unwrap().abs() < 1e-10);
        let prim = DerivativeBundle::first_order(gadget_square().network).unwrap();
        assert!(residual(&p, &prim, &[0.5]).is_err());
    }

    #[test]
    fn zero_function_losses() {
        let p = manufactured_problem("poisson2d_sin").unwrap();
        let zero = Network::zero(2);
        let u = JetNetwork(&zero);
        let x = [0.3, 0.4];
        assert_eq!(residual(&p, &u, &x).unwrap(), -(p.f)(&x));
        let s = draw_samples(&p.domain, 50, 20, 3);
        let l = empirical_loss(&p, &u, &s, Exec::Sequential).unwrap();
        let want = s.interior.iter().map(|x| (p.f)(x).powi(2)).sum::<f64>() / 50.0
            + 4.0 * s.boundary.iter().map(|y| (p.g)(y).powi(2)).sum::<f64>() / 20.0;
        assert!((l - want).abs() < 1e-12 * want);
        let empty = SampleSet {
            interior: vec![],
            boundary: s.boundary.clone(),
            seed: 0,
        };
        assert!(empirical_loss(&p, &u, &empty, Exec::Sequential).is_err());
    }

    #[test]
    fn exact_solutions_have_zero_loss() {
        for name in crate::pde::CATALOG {
            let p = manufactured_problem(name).unwrap();
            let exact = p.exact.clone().unwrap();
            let s = draw_samples(&p.domain, 200, 50, 4);
            assert!(empirical_loss(&p, &exact, &s, Exec::default()).unwrap() < 1e-20, "{name}");
            assert!(quadrature_loss(&p, &exact, 33, Exec::default()).unwrap() < 1e-20, "{name}");
        }
    }

    #[test]
    fn homogeneity_and_constant_integrand() {
        let mut p = EllipticProblem::laplace("t", Domain::unit_box(1).unwrap());
        p.a = vec![constant(0.0)];
        p.f = constant(1.0);
        p.e = constant(0.0);
        let zero = Network::zero(1);
        let u = JetNetwork(&zero);
        assert!((quadrature_loss(&p, &u, 17, Exec::Sequential).unwrap() - 1.0).abs() < 1e-14);
        let disk = Domain::ball(vec![0.5, 0.5], 0.3).unwrap();
        let mut q = EllipticProblem::laplace("t", disk.clone());
        q.a = vec![constant(0.0); 4];
        q.f = constant(1.0);
        q.e = constant(0.0);
        let z2 = Network::zero(2);
        let v = quadrature_loss(&q, &JetNetwork(&z2), 65, Exec::Sequential).unwrap();
        assert!((v - disk.volume()).abs() < 1e-10);

        let p = manufactured_problem("poisson1d_sin").unwrap();
        let mut p2 = p.clone();
        let (f, g) = (p.f.clone(), p.g.clone());
        p2.f = field(move |x| 2.0 * f(x));
        p2.g = field(move |x| 2.0 * g(x));
        let s = draw_samples(&p.domain, 100, 4, 5);
        let l1 = empirical_loss(&p, &u, &s, Exec::Sequential).unwrap();
        let l2 = empirical_loss(&p2, &u, &s, Exec::Sequential).unwrap();
        assert!((l2 - 4.0 * l1).abs() < 1e-12 * l2);
    }

    #[test]
    fn error_report_identities() {
        let p = manufactured_problem("poisson1d_sin").unwrap();
        let exact = p.exact.clone().unwrap();
        let zero = Network::zero(1);
        let r = error_report(&JetNetwork(&zero), &exact, &p.domain, 513, Exec::Sequential).unwrap();
        assert!((r.l2 - 0.5f64.sqrt()).abs() < 1e-10);
        assert!((r.rel_l2 - 1.0).abs() < 1e-10);
        let r = error_report(&exact, &exact, &p.domain, 65, Exec::Sequential).unwrap();
        assert_eq!((r.sup, r.l2, r.h1_semi), (0.0, 0.0, 0.0));
        // shifting by a constant
        let mut shifted = exact.clone();
        let v = exact.value.clone();
        shifted.value = field(move |x| v(x) + 0.1);
        let r = error_report(&shifted, &exact, &p.domain, 65, Exec::Sequential).unwrap();
        assert!((r.l2 - 0.1).abs() < 1e-12);
        assert!(r.h1_semi == 0.0);
    }
}
