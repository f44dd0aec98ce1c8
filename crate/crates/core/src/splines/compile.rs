//! Cubic B-splines as ReLU³ networks.
//!
//! An interior spline (`0 <= i <= ell - 4`) is the truncated-power sum
//!
//! ```text
//! N_i(x) = ell^3 / 6 * sum_{j=0}^{4} (-1)^j C(4,j) (x - t_{i+j})_+^3
//! ```
//!
//! with the terms at knots `>= 1` dropped (they vanish on `[0,1]`). Boundary
//! splines are `P(x) + sum_j c_j (x - t_j)_+^3` where the polynomial part `P`
//! of degree `<= 2` is only present when the support starts at 0. Their
//! coefficients are recovered by a least-squares fit to Cox–de Boor values
//! and checked against a residual tolerance. `x` and `x^2` are realised with
//! the ReLU³ identity and square gadgets (valid because `x >= 0`).

use nalgebra::{DMatrix, DVector};

use super::{bspline_eval, SplineCoeffs, SplinePartition};
use crate::calculus::builder::{
    relu3_identity, relu3_product, relu3_square, Block, LinExpr, NetBuilder, Unit,
};
use crate::calculus::{GadgetReport, Validity};
use crate::network::{Activation, Network};
use crate::{Error, Result};

const FIT_TOL: f64 = 1e-10;
const POINTS_PER_CELL: usize = 16;

fn binomial4(j: usize) -> f64 {
    [1.0, 4.0, 6.0, 4.0, 1.0][j]
}

fn truncated_cube(x: &LinExpr, t: f64) -> Unit {
    Unit::new(x.shifted(-t), Activation::Relu3)
}

/// Units and readout computing `N_i(x)` on `[0,1]` from the expression `x`.
fn univariate_block(part: &SplinePartition, i: isize, x: &LinExpr) -> Result<Block> {
    if part.k != 4 {
        return Err(Error::UnsupportedOrder(part.k));
    }
    part.slot(i)?;
    let ell = part.ell as isize;
    if i >= 0 && i + 4 <= ell {
        let scale = (part.ell as f64).powi(3) / 6.0;
        let mut units = Vec::new();
        let mut readout = Vec::new();
        for j in 0..=4 {
            let t = part.t(i + j as isize);
            if t < 1.0 {
                units.push(truncated_cube(x, t));
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                readout.push(sign * binomial4(j) * scale);
            }
        }
        return Ok(Block {
            units,
            readout,
            constant: 0.0,
        });
    }
    boundary_block(part, i, x)
}

fn boundary_block(part: &SplinePartition, i: isize, x: &LinExpr) -> Result<Block> {
    let with_poly = part.t(i) == 0.0;
    let mut knots: Vec<f64> = Vec::new();
    for j in i..=i + 4 {
        let t = part.t(j);
        if t < 1.0 && knots.last() != Some(&t) {
            knots.push(t);
        }
    }

    // columns: [1, x, x^2]? then (x - t)_+^3 per knot
    let npoly = if with_poly { 3 } else { 0 };
    let ncols = npoly + knots.len();
    let m = POINTS_PER_CELL * part.ell + 1;
    let xs: Vec<f64> = (0..m).map(|p| p as f64 / (m - 1) as f64).collect();
    let mut a = DMatrix::<f64>::zeros(m, ncols);
    let mut b = DVector::<f64>::zeros(m);
    for (r, &xv) in xs.iter().enumerate() {
        if with_poly {
            a[(r, 0)] = 1.0;
            a[(r, 1)] = xv;
            a[(r, 2)] = xv * xv;
        }
        for (c, &t) in knots.iter().enumerate() {
            a[(r, npoly + c)] = (xv - t).max(0.0).powi(3);
        }
        b[r] = bspline_eval(part, i, xv)?;
    }
    // equilibrate columns before the SVD
    let norms: Vec<f64> = (0..ncols).map(|c| a.column(c).norm().max(f64::MIN_POSITIVE)).collect();
    let mut scaled = a.clone();
    for (c, &n) in norms.iter().enumerate() {
        scaled.column_mut(c).unscale_mut(n);
    }
    let sol = scaled
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidArgument(format!("spline fit failed: {e}")))?;
    let coef: Vec<f64> = sol.iter().zip(&norms).map(|(s, n)| s / n).collect();
    let resid = (&a * DVector::from_column_slice(&coef) - &b).amax();
    if resid > FIT_TOL {
        return Err(Error::FitResidual(resid));
    }

    let mut block = Block {
        units: Vec::new(),
        readout: Vec::new(),
        constant: 0.0,
    };
    if with_poly {
        block.constant += coef[0];
        for (g, c) in [(relu3_identity(x), coef[1]), (relu3_square(x), coef[2])] {
            block.units.extend(g.units);
            block.readout.extend(g.readout.iter().map(|v| c * v));
            block.constant += c * g.constant;
        }
    }
    for (&t, &c) in knots.iter().zip(&coef[npoly..]) {
        block.units.push(truncated_cube(x, t));
        block.readout.push(c);
    }
    Ok(block)
}

/// A depth-2 ReLU³ network equal to the cubic B-spline `N_{ell,i}` on `[0,1]`.
pub fn univariate_spline_network(part: &SplinePartition, i: isize) -> Result<GadgetReport> {
    let block = univariate_block(part, i, &LinExpr::var(0))?;
    let mut layer = Vec::new();
    let out = block.place(&mut layer);
    let mut b = NetBuilder::new(1);
    b.push(layer);
    Ok(GadgetReport {
        name: format!("bspline[{i}]"),
        network: b.finish(&out)?,
        claimed_depth: 2,
        claimed_width: 11,
        validity: Validity::UnitBox,
    })
}

/// A ReLU³ network computing `sum_i c_i prod_j N_{i_j}(x_j)` on `[0,1]^d`.
///
/// The first hidden layer holds every univariate spline of every coordinate;
/// factors are then multiplied along a balanced binary tree of nonnegative
/// product gadgets (an odd factor is carried up with the identity gadget), so
/// the depth is `ceil(log2 d) + 2`. Zero coefficients are skipped.
pub fn spline_network(part: &SplinePartition, coeffs: &SplineCoeffs) -> Result<Network> {
    if part.k != 4 {
        return Err(Error::UnsupportedOrder(part.k));
    }
    coeffs.validate()?;
    if coeffs.ell != part.ell || coeffs.k != part.k {
        return Err(Error::InvalidArgument(
            "coefficients belong to a different partition".into(),
        ));
    }
    let d = coeffs.dim;
    let mut b = NetBuilder::new(d);

    let mut layer = Vec::new();
    let mut factors: Vec<Vec<LinExpr>> = Vec::with_capacity(d);
    for j in 0..d {
        let x = LinExpr::var(j);
        let col = part
            .indices()
            .map(|i| Ok(univariate_block(part, i, &x)?.place(&mut layer)))
            .collect::<Result<Vec<_>>>()?;
        factors.push(col);
    }
    b.push(layer);

    let n = part.len();
    let mut terms: Vec<(f64, Vec<LinExpr>)> = Vec::new();
    for (flat, &c) in coeffs.values.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let mut rest = flat;
        let mut slots = vec![0usize; d];
        for s in slots.iter_mut().rev() {
            *s = rest % n;
            rest /= n;
        }
        terms.push((c, slots.iter().enumerate().map(|(j, &s)| factors[j][s].clone()).collect()));
    }
    if terms.is_empty() {
        // keep the architecture of a one-term expansion
        terms.push((0.0, (0..d).map(|j| factors[j][0].clone()).collect()));
    }

    let mut width = d;
    while width > 1 {
        let mut layer = Vec::new();
        for (_, fs) in terms.iter_mut() {
            let mut next = Vec::with_capacity(fs.len().div_ceil(2));
            for pair in fs.chunks(2) {
                let block = match pair {
                    [x, y] => relu3_product(x, y),
                    [x] => relu3_identity(x),
                    _ => unreachable!(),
                };
                next.push(block.place(&mut layer));
            }
            *fs = next;
        }
        b.push(layer);
        width = width.div_ceil(2);
    }

    let mut out = LinExpr::default();
    for (c, fs) in &terms {
        out.add_scaled(&fs[0], *c);
    }
    b.finish(&out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{derivative_network, second_derivative_network};
    use crate::splines::{bspline_derivative, make_partition, quasi_interpolate};
    use crate::Exec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn univariate_networks_match_cox_de_boor() {
        for ell in [1, 2, 3, 4, 5, 8, 16] {
            let p = make_partition(ell, 4).unwrap();
            for i in p.indices() {
                let g = univariate_spline_network(&p, i).unwrap();
                let a = g.network.architecture_stats();
                assert_eq!(a.depth, 2);
                assert!(a.width <= 11, "ell {ell} i {i} width {}", a.width);
                for m in 0..=500 {
                    let x = m as f64 / 500.0;
                    let want = bspline_eval(&p, i, x).unwrap();
                    let got = g.network.eval(&[x]).unwrap();
                    assert!((got - want).abs() <= 1e-10, "ell {ell} i {i} x {x}");
                }
            }
        }
    }

    #[test]
    fn outside_support_is_zero() {
        let p = make_partition(8, 4).unwrap();
        let g = univariate_spline_network(&p, 2).unwrap();
        for &x in &[0.0, 0.1, 0.25, 0.75, 0.9, 1.0] {
            assert!(g.network.eval(&[x]).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn only_cubics_compile() {
        let p = make_partition(4, 3).unwrap();
        assert!(matches!(univariate_spline_network(&p, 0), Err(Error::UnsupportedOrder(3))));
    }

    #[test]
    fn derivative_networks_of_compiled_splines() {
        let p = make_partition(4, 4).unwrap();
        for i in p.indices() {
            let g = univariate_spline_network(&p, i).unwrap();
            let d1 = derivative_network(&g.network, 0).unwrap();
            let d2 = second_derivative_network(&g.network, 0, 0).unwrap();
            assert_eq!(d2.depth(), 6);
            assert!(d2.width() <= 264);
            for m in 0..=50 {
                let x = m as f64 / 50.0;
                let v1 = bspline_derivative(&p, i, 1, x).unwrap();
                let v2 = bspline_derivative(&p, i, 2, x).unwrap();
                assert!((d1.eval(&[x]).unwrap() - v1).abs() < 1e-9);
                assert!((d2.eval(&[x]).unwrap() - v2).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn expansions_in_one_and_two_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in 1..=3 {
            let p = make_partition(4, 4).unwrap();
            let n = p.len().pow(d as u32);
            let values = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c = SplineCoeffs::new(&p, d, values).unwrap();
            let net = spline_network(&p, &c).unwrap();
            let want_depth = (d as f64).log2().ceil() as usize + 2;
            assert_eq!(net.depth(), want_depth);
            for _ in 0..100 {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..=1.0)).collect();
                assert!((net.eval(&x).unwrap() - c.eval(&x).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn bilinear_function_is_reproduced() {
        let p = make_partition(4, 4).unwrap();
        let c = quasi_interpolate(&p, |x| x[0] * x[1], 2, Exec::Sequential).unwrap();
        let net = spline_network(&p, &c).unwrap();
        for a in 0..=20 {
            for b in 0..=20 {
                let x = [a as f64 / 20.0, b as f64 / 20.0];
                assert!((net.eval(&x).unwrap() - x[0] * x[1]).abs() < 1e-9);
            }
        }
    }
}
