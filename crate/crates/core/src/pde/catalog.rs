use std::f64::consts::PI;
use std::sync::Arc;

use super::{constant, field, quadrature_rule, Domain, EllipticProblem, ExactSolution, Field};
use crate::{Error, Exec, Result};

/// Names accepted by [`manufactured_problem`].
pub const CATALOG: [&str; 4] = ["poisson1d_sin", "poisson2d_sin", "variable_coeff_2d", "ball2d_radial"];

const NORM_RESOLUTION: usize = 257;

/// A problem with a closed-form `C^3` solution.
///
/// | name | domain | `u*` | ellipticity |
/// |---|---|---|---|
/// | `poisson1d_sin` | `[0,1]` | `sin(pi x)` | 1 |
/// | `poisson2d_sin` | `[0,1]^2` | `sin(pi x) sin(pi y)` | 1 |
/// | `variable_coeff_2d` | `[0,1]^2` | `x^2 y + sin(pi x) e^y` | 1.5 |
/// | `ball2d_radial` | disc of radius 1/2 at `(1/2,1/2)` | `exp(-rho^2)` | 1 |
///
/// `variable_coeff_2d` has `a = [[2 + sin x, 1/2], [1/2, 2 + y]]`,
/// `b = (1, x)`, `c = 1 + x y` and Dirichlet data `g = u*`. All entries use
/// `e = 1`. `f_l2` and `g_l2` are computed by quadrature when they have no
/// convenient closed form.
pub fn manufactured_problem(name: &str) -> Result<EllipticProblem> {
    let mut p = match name {
        "poisson1d_sin" => poisson1d_sin(),
        "poisson2d_sin" => poisson2d_sin(),
        "variable_coeff_2d" => variable_coeff_2d(),
        "ball2d_radial" => ball2d_radial(),
        _ => {
            return Err(Error::UnknownEntry(format!(
                "{name} (known: {})",
                CATALOG.join(", ")
            )))
        }
    };
    fill_data_norms(&mut p)?;
    Ok(p)
}

fn fill_data_norms(p: &mut EllipticProblem) -> Result<()> {
    let rule = quadrature_rule(&p.domain, NORM_RESOLUTION)?;
    let (f, g) = (p.f.clone(), p.g.clone());
    let f2 = rule.integrate_interior(Exec::Sequential, |x| Ok(f(x).powi(2)))?;
    let g2 = rule.integrate_boundary(Exec::Sequential, |y| Ok(g(y).powi(2)))?;
    p.bounds.f_l2 = f2.sqrt();
    p.bounds.g_l2 = g2.sqrt();
    Ok(())
}

fn vfield(f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> super::VectorField {
    Arc::new(f)
}

fn poisson1d_sin() -> EllipticProblem {
    let mut p = EllipticProblem::laplace("poisson1d_sin", Domain::UnitBox { dim: 1 });
    p.f = field(|x| PI * PI * (PI * x[0]).sin());
    p.bounds.f_l2 = PI * PI / 2f64.sqrt();
    p.exact = Some(ExactSolution {
        dim: 1,
        value: field(|x| (PI * x[0]).sin()),
        grad: vfield(|x| vec![PI * (PI * x[0]).cos()]),
        hess: vfield(|x| vec![-PI * PI * (PI * x[0]).sin()]),
    });
    p
}

fn poisson2d_sin() -> EllipticProblem {
    let mut p = EllipticProblem::laplace("poisson2d_sin", Domain::UnitBox { dim: 2 });
    p.f = field(|x| 2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin());
    p.exact = Some(ExactSolution {
        dim: 2,
        value: field(|x| (PI * x[0]).sin() * (PI * x[1]).sin()),
        grad: vfield(|x| {
            let (sx, cx) = (PI * x[0]).sin_cos();
            let (sy, cy) = (PI * x[1]).sin_cos();
            vec![PI * cx * sy, PI * sx * cy]
        }),
        hess: vfield(|x| {
            let (sx, cx) = (PI * x[0]).sin_cos();
            let (sy, cy) = (PI * x[1]).sin_cos();
            let m = PI * PI * cx * cy;
            vec![-PI * PI * sx * sy, m, m, -PI * PI * sx * sy]
        }),
    });
    p
}

fn vc_value(x: &[f64]) -> f64 {
    x[0] * x[0] * x[1] + (PI * x[0]).sin() * x[1].exp()
}

fn vc_grad(x: &[f64]) -> Vec<f64> {
    let (s, c) = (PI * x[0]).sin_cos();
    let ey = x[1].exp();
    vec![2.0 * x[0] * x[1] + PI * c * ey, x[0] * x[0] + s * ey]
}

fn vc_hess(x: &[f64]) -> Vec<f64> {
    let (s, c) = (PI * x[0]).sin_cos();
    let ey = x[1].exp();
    let xy = 2.0 * x[0] + PI * c * ey;
    vec![2.0 * x[1] - PI * PI * s * ey, xy, xy, s * ey]
}

fn variable_coeff_2d() -> EllipticProblem {
    let mut p = EllipticProblem::laplace("variable_coeff_2d", Domain::UnitBox { dim: 2 });
    let a: Vec<Field> = vec![
        field(|x| 2.0 + x[0].sin()),
        constant(0.5),
        constant(0.5),
        field(|x| 2.0 + x[1]),
    ];
    let b: Vec<Field> = vec![constant(1.0), field(|x| x[0])];
    let c: Field = field(|x| 1.0 + x[0] * x[1]);
    let (a2, b2, c2) = (a.clone(), b.clone(), c.clone());
    p.f = field(move |x| {
        let h = vc_hess(x);
        let g = vc_grad(x);
        let diffusion: f64 = a2.iter().zip(&h).map(|(a, h)| a(x) * h).sum();
        let drift: f64 = b2.iter().zip(&g).map(|(b, g)| b(x) * g).sum();
        -diffusion + drift + c2(x) * vc_value(x)
    });
    p.a = a;
    p.b = b;
    p.c = c;
    p.g = field(vc_value);
    p.bounds.a_max = 3.0;
    p.bounds.b_max = 1.0;
    p.bounds.c_max = 2.0;
    // diagonal >= 2, off-diagonal 1/2 (Gershgorin)
    p.ellipticity = 1.5;
    p.exact = Some(ExactSolution {
        dim: 2,
        value: field(vc_value),
        grad: vfield(vc_grad),
        hess: vfield(vc_hess),
    });
    p
}

fn ball2d_radial() -> EllipticProblem {
    const C: f64 = 0.5;
    let domain = Domain::Ball {
        dim: 2,
        center: vec![C, C],
        radius: 0.5,
    };
    let rho2 = |x: &[f64]| (x[0] - C).powi(2) + (x[1] - C).powi(2);
    let mut p = EllipticProblem::laplace("ball2d_radial", domain);
    // -Laplace exp(-rho^2) = (4 - 4 rho^2) exp(-rho^2)
    p.f = field(move |x| {
        let r2 = rho2(x);
        4.0 * (1.0 - r2) * (-r2).exp()
    });
    p.g = field(move |x| (-rho2(x)).exp());
    p.exact = Some(ExactSolution {
        dim: 2,
        value: field(move |x| (-rho2(x)).exp()),
        grad: vfield(move |x| {
            let u = (-rho2(x)).exp();
            vec![-2.0 * (x[0] - C) * u, -2.0 * (x[1] - C) * u]
        }),
        hess: vfield(move |x| {
            let u = (-rho2(x)).exp();
            let (dx, dy) = (x[0] - C, x[1] - C);
            let m = 4.0 * dx * dy * u;
            vec![(4.0 * dx * dx - 2.0) * u, m, m, (4.0 * dy * dy - 2.0) * u]
        }),
    });
    p
}
