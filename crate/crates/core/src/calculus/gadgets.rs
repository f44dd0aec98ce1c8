use serde::Serialize;

use super::builder::{self, Block, LinExpr, NetBuilder};
use crate::network::Network;

/// Region on which a gadget reproduces its closed form exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    /// every input `>= 0`
    Nonnegative,
    AllReals,
    /// the unit box `[0,1]^d` (compiled splines)
    UnitBox,
}

/// Which algebraic identity a gadget implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GadgetKind {
    Square,
    Identity,
    ProductNonneg,
    ProductRelu2,
}

impl GadgetKind {
    pub const ALL: [GadgetKind; 4] = [
        GadgetKind::Square,
        GadgetKind::Identity,
        GadgetKind::ProductNonneg,
        GadgetKind::ProductRelu2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GadgetKind::Square => "square",
            GadgetKind::Identity => "identity",
            GadgetKind::ProductNonneg => "product_nonneg",
            GadgetKind::ProductRelu2 => "product_relu2",
        }
    }

    pub fn inputs(self) -> usize {
        match self {
            GadgetKind::Square | GadgetKind::Identity => 1,
            _ => 2,
        }
    }

    pub fn closed_form(self, x: &[f64]) -> f64 {
        match self {
            GadgetKind::Square => x[0] * x[0],
            GadgetKind::Identity => x[0],
            GadgetKind::ProductNonneg | GadgetKind::ProductRelu2 => x[0] * x[1],
        }
    }

    pub fn build(self) -> GadgetReport {
        let x = LinExpr::var(0);
        let y = LinExpr::var(1);
        let (block, depth, width, validity): (Block, _, _, _) = match self {
            GadgetKind::Square => (builder::relu3_square(&x), 2, 3, Validity::Nonnegative),
            GadgetKind::Identity => (builder::relu3_identity(&x), 2, 4, Validity::Nonnegative),
            GadgetKind::ProductNonneg => {
                (builder::relu3_product(&x, &y), 2, 9, Validity::Nonnegative)
            }
            GadgetKind::ProductRelu2 => (builder::relu2_product(&x, &y), 2, 4, Validity::AllReals),
        };
        let mut layer = Vec::new();
        let out = block.place(&mut layer);
        let mut b = NetBuilder::new(self.inputs());
        b.push(layer);
        GadgetReport {
            name: self.name().to_string(),
            network: b.finish(&out).expect("gadget layers chain"),
            claimed_depth: depth,
            claimed_width: width,
            validity,
        }
    }
}

/// A gadget network together with its claimed size and validity region.
#[derive(Debug, Clone)]
pub struct GadgetReport {
    pub name: String,
    pub network: Network,
    pub claimed_depth: usize,
    pub claimed_width: usize,
    pub validity: Validity,
}

impl GadgetReport {
    /// About `n` points covering the validity region restricted to the unit
    /// box (`[0,1]`) or to `[-1,1]` for gadgets valid on all reals. Bivariate
    /// gadgets use the smallest square tensor grid with at least `n` points.
    pub fn validity_grid(&self, n: usize) -> Vec<Vec<f64>> {
        let (lo, hi) = match self.validity {
            Validity::Nonnegative | Validity::UnitBox => (0.0, 1.0),
            Validity::AllReals => (-1.0, 1.0),
        };
        let axis = |m: usize| -> Vec<f64> {
            (0..m)
                .map(|i| lo + (hi - lo) * i as f64 / (m - 1).max(1) as f64)
                .collect()
        };
        if self.network.input_dim == 1 {
            axis(n).into_iter().map(|v| vec![v]).collect()
        } else {
            let m = (n as f64).sqrt().ceil() as usize;
            let a = axis(m);
            a.iter()
                .flat_map(|&u| a.iter().map(move |&v| vec![u, v]))
                .collect()
        }
    }

    /// Largest `|network(x) - oracle(x)|` over `points`.
    pub fn max_deviation(&self, points: &[Vec<f64>], oracle: impl Fn(&[f64]) -> f64) -> f64 {
        points
            .iter()
            .map(|p| (self.network.eval_unchecked(p) - oracle(p)).abs())
            .fold(0.0, f64::max)
    }
}

/// `x ↦ x²` on `x >= 0`: three ReLU³ units, depth 2.
pub fn gadget_square() -> GadgetReport {
    GadgetKind::Square.build()
}

/// `x ↦ x` on `x >= 0`: four ReLU³ units, depth 2.
pub fn gadget_identity() -> GadgetReport {
    GadgetKind::Identity.build()
}

/// `(x, y) ↦ xy` on `x, y >= 0`: nine ReLU³ units, depth 2.
pub fn gadget_product_nonneg() -> GadgetReport {
    GadgetKind::ProductNonneg.build()
}

/// `(x, y) ↦ xy` on all of `R²`: four ReLU² units, depth 2.
pub fn gadget_product_relu2() -> GadgetReport {
    GadgetKind::ProductRelu2.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Activation;

    fn sigma(x: f64) -> f64 {
        x.max(0.0).powi(3)
    }

    #[test]
    fn spot_values() {
        let sq = gadget_square().network;
        assert!((sq.eval(&[2.0]).unwrap() - 4.0).abs() < 1e-13);
        assert_eq!(sq.eval(&[0.0]).unwrap(), 0.0);
        assert!((sq.eval(&[0.5]).unwrap() - 0.25).abs() < 1e-15);

        let id = gadget_identity().network;
        assert!((id.eval(&[1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(id.eval(&[0.0]).unwrap().abs() < 1e-15);
        assert!((id.eval(&[0.75]).unwrap() - 0.75).abs() < 1e-14);

        let pn = gadget_product_nonneg().network;
        assert!((pn.eval(&[2.0, 3.0]).unwrap() - 6.0).abs() < 1e-13);
        assert!((pn.eval(&[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-14);
        assert!(pn.eval(&[0.0, 0.7]).unwrap().abs() < 1e-14);

        let p2 = gadget_product_relu2().network;
        assert_eq!(p2.eval(&[-2.0, 3.0]).unwrap(), -6.0);
        assert_eq!(p2.eval(&[2.0, 3.0]).unwrap(), 6.0);
        assert_eq!(p2.eval(&[1.3, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn square_matches_direct_sigma_arithmetic() {
        let sq = gadget_square().network;
        for &x in &[0.1, 0.5, 1.7, 3.0] {
            let direct = -(sigma(x + 2.0) - 4.0 * sigma(x + 1.0) + 3.0 * sigma(x) - 4.0) / 6.0;
            assert!((sq.eval(&[x]).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn architecture_matches_claims() {
        for kind in GadgetKind::ALL {
            let g = kind.build();
            let a = g.network.architecture_stats();
            assert_eq!(a.depth, g.claimed_depth, "{}", kind.name());
            assert!(a.width <= g.claimed_width, "{}", kind.name());
        }
        assert_eq!(gadget_square().network.width(), 3);
        assert!(gadget_product_relu2().network.uses_only(&[Activation::Relu2]));
        assert!(gadget_square().network.uses_only(&[Activation::Relu3]));
    }

    #[test]
    fn exact_on_validity_grids() {
        for kind in GadgetKind::ALL {
            let g = kind.build();
            let pts = g.validity_grid(1000);
            assert!(pts.len() >= 1000);
            let dev = g.max_deviation(&pts, |p| kind.closed_form(p));
            assert!(dev <= 1e-12, "{}", kind.name());
        }
    }

    #[test]
    fn sup_norm_of_square_and_identity() {
        use crate::Exec;
        for r in [2, 3, 17] {
            let s = gadget_square().network.sup_norm_estimate(r, Exec::Sequential).unwrap();
            assert!((s - 1.0).abs() < 1e-12);
            let s = gadget_identity().network.sup_norm_estimate(r, Exec::Sequential).unwrap();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
