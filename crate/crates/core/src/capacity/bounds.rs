//! Closed-form capacity bounds. The unspecified absolute constants of the
//! O-statements are a single knob `conv_c`; [`CONV_C`] is the default.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::pde::{CoefficientBounds, Domain};
use crate::{Error, Result};

pub const CONV_C: f64 = 1.0;

fn chain_factor() -> f64 {
    28.0 * 1.5f64.sqrt()
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_arch(depth: usize, width: usize) -> Result<()> {
    if depth == 0 || width == 0 {
        return Err(Error::InvalidArgument(format!(
            "depth and width must be at least 1, got ({depth}, {width})"
        )));
    }
    Ok(())
}

/// `conv_c D^2 W^2 (D + ln W)`.
pub fn pdim_bound(depth: usize, width: usize, conv_c: f64) -> Result<f64> {
    check_arch(depth, width)?;
    let (d, w) = (depth as f64, width as f64);
    Ok(conv_c * d * d * w * w * (d + w.ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoveringForm {
    /// simplified when `n >= pdim`, binomial otherwise
    Auto,
    /// `(e n B / (eps pdim))^pdim`
    Simplified,
    /// `sum_{i=0}^{floor(pdim)} C(n, i) (B/eps)^i`
    Binomial,
}

/// Uniform covering number bound for a class of pseudo-dimension `pdim`
/// with values in `[-B, B]` on `n` points.
pub fn covering_bound(pdim: f64, b: f64, eps: f64, n: usize, form: CoveringForm) -> Result<f64> {
    if !(pdim >= 1.0) {
        return Err(Error::InvalidArgument(format!("pdim must be >= 1, got {pdim}")));
    }
    check_positive("B", b)?;
    check_positive("eps", eps)?;
    let nf = n as f64;
    let simplified = match form {
        CoveringForm::Auto => nf >= pdim,
        CoveringForm::Simplified if nf < pdim => {
            return Err(Error::InvalidArgument(format!(
                "simplified covering bound needs n >= pdim ({n} < {pdim})"
            )))
        }
        CoveringForm::Simplified => true,
        CoveringForm::Binomial => false,
    };
    if simplified {
        return Ok((E * nf * b / (eps * pdim)).powf(pdim));
    }
    let ratio = b / eps;
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..=(pdim.floor() as usize).min(n) {
        term *= (n - i + 1) as f64 / i as f64 * ratio;
        sum += term;
    }
    Ok(sum)
}

/// Sign-pattern count bound `2 (2 e m deg / n)^n` for `m` polynomials of
/// degree `deg` in `n <= m` variables.
pub fn polynomial_sign_bound(m: usize, n: usize, deg: usize) -> Result<f64> {
    if m == 0 || n == 0 || deg == 0 {
        return Err(Error::InvalidArgument("m, n and deg must be positive".into()));
    }
    if n > m {
        return Err(Error::InvalidArgument(format!(
            "sign-pattern bound needs n <= m ({n} > {m})"
        )));
    }
    Ok(2.0 * (2.0 * E * m as f64 * deg as f64 / n as f64).powi(n as i32))
}

/// `4 C (D+2)^2 (D+4)^2 (D+5)^2 W^2 (D + 5 + ln((D+2)(D+4)W))`, the
/// pseudo-dimension bound shared by all derivative classes of a depth-`D`,
/// width-`W` network.
pub fn h_constant(depth: usize, width: usize, conv_c: f64) -> Result<f64> {
    check_arch(depth, width)?;
    let (d, w) = (depth as f64, width as f64);
    Ok(4.0
        * conv_c
        * (d + 2.0).powi(2)
        * (d + 4.0).powi(2)
        * (d + 5.0).powi(2)
        * w
        * w
        * (d + 5.0 + ((d + 2.0) * (d + 4.0) * w).ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RademacherBound {
    pub value: f64,
    /// `N < H` or the bound exceeds the trivial bound `B^2`
    pub vacuous: bool,
}

/// `sqrt(H/N) sqrt(ln(eN/H))`, infinite when the logarithm is negative.
fn rate(h: f64, n: f64) -> f64 {
    let l = (E * n / h).ln();
    if l < 0.0 {
        f64::INFINITY
    } else {
        (h / n).sqrt() * l.sqrt()
    }
}

/// `28 sqrt(3/2) max(B, B^2) sqrt(H/N) sqrt(ln(eN/H))`.
pub fn rademacher_bound(b: f64, h: f64, n: f64) -> Result<RademacherBound> {
    check_positive("B", b)?;
    check_positive("H", h)?;
    check_positive("N", n)?;
    let value = chain_factor() * b.max(b * b) * rate(h, n);
    Ok(RademacherBound {
        value,
        vacuous: n < h || value >= b * b,
    })
}

/// Dudley entropy bound with the closed-form scale
/// `delta = B sqrt(pdim/N)`:
/// `4 delta + 12 B / sqrt(N) + 12 B sqrt(pdim/N) sqrt(ln(e N B / (delta pdim)))`.
pub fn chaining_bound(pdim: f64, b: f64, n: f64) -> Result<f64> {
    check_positive("B", b)?;
    check_positive("N", n)?;
    if !(pdim >= 1.0) {
        return Err(Error::InvalidArgument(format!("pdim must be >= 1, got {pdim}")));
    }
    let delta = b * (pdim / n).sqrt();
    let l = (E * n * b / (delta * pdim)).ln().max(0.0);
    Ok(4.0 * delta + 12.0 * b / n.sqrt() + 12.0 * b * (pdim / n).sqrt() * l.sqrt())
}

/// The entropy integral itself at scale `delta`:
/// `4 delta + 12/sqrt(N) int_delta^B sqrt(ln(2 C(eps)))` with the simplified
/// covering bound, by composite Simpson on 2001 nodes in log-space.
pub fn chaining_integral(pdim: f64, b: f64, n: f64, delta: f64) -> Result<f64> {
    check_positive("B", b)?;
    check_positive("N", n)?;
    check_positive("delta", delta)?;
    if delta >= b {
        return Ok(4.0 * delta);
    }
    // ln C(eps) = pdim ln(e N B / (eps pdim)); substitute eps = e^s
    let integrand = |s: f64| {
        let eps = s.exp();
        let ln_c = pdim * (E * n * b / (eps * pdim)).ln();
        (2f64.ln() + ln_c).max(0.0).sqrt() * eps
    };
    let (lo, hi) = (delta.ln(), b.ln());
    let m = 2000;
    let h = (hi - lo) / m as f64;
    let mut acc = integrand(lo) + integrand(hi);
    for k in 1..m {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * integrand(lo + h * k as f64);
    }
    Ok(4.0 * delta + 12.0 / n.sqrt() * acc * h / 3.0)
}

/// Inputs of the statistical-error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    pub depth: usize,
    pub width: usize,
    /// `B`, the sup-norm cap of the network class
    pub sup_bound: f64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub eps: f64,
    pub delta: f64,
    #[serde(default = "default_conv_c")]
    pub conv_c: f64,
    pub c1: f64,
    pub c2: f64,
}

fn default_conv_c() -> f64 {
    CONV_C
}

impl BoundInputs {
    /// Fills `c1`, `c2` from coefficient bounds in dimension `d`.
    pub fn with_coefficients(mut self, bounds: &CoefficientBounds, d: usize) -> Self {
        self.c1 = bounds.c1(d);
        self.c2 = bounds.c2();
        self
    }

    fn validate(&self) -> Result<()> {
        check_arch(self.depth, self.width)?;
        for (name, v) in [
            ("sup_bound", self.sup_bound),
            ("eps", self.eps),
            ("conv_c", self.conv_c),
        ] {
            check_positive(name, v)?;
        }
        // M = infinity drops the boundary term
        if !(self.n > 0.0 && self.n.is_finite() && self.m > 0.0) {
            return Err(Error::InvalidArgument("N and M must be positive".into()));
        }
        if !(self.delta >= 0.0 && self.c1 >= 0.0 && self.c2 >= 0.0) {
            return Err(Error::InvalidArgument("delta, c1 and c2 must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatBound {
    pub value: f64,
    /// `28 sqrt(3/2) max(B,B^2) 40 |Omega| C1 sqrt(H/N) sqrt(ln(eN/H))`
    pub interior: f64,
    /// `28 sqrt(3/2) max(B,B^2) 12 |dOmega| C2 sqrt(H/M) sqrt(ln(eM/H))`
    pub boundary: f64,
    pub h: f64,
    pub vacuous: bool,
}

/// Bound on `E sup |L(u) - L_hat(u)|` over the network class.
pub fn stat_error_bound(inputs: &BoundInputs, domain: &Domain) -> Result<StatBound> {
    inputs.validate()?;
    let h = h_constant(inputs.depth, inputs.width, inputs.conv_c)?;
    let b = inputs.sup_bound;
    let scale = chain_factor() * b.max(b * b);
    let interior = scale * 40.0 * domain.volume() * inputs.c1 * rate(h, inputs.n);
    let boundary = if inputs.m.is_infinite() {
        0.0
    } else {
        scale * 12.0 * domain.surface() * inputs.c2 * rate(h, inputs.m)
    };
    Ok(StatBound {
        value: interior + boundary,
        interior,
        boundary,
        h,
        vacuous: inputs.n < h || inputs.m < h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BudgetMode {
    GivenArch { depth: usize, width: usize },
    Total { dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Budget {
    pub depth: usize,
    pub width: f64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "M")]
    pub m: f64,
}

/// Sample counts (and, in total mode, the architecture) for accuracy `eps`.
///
/// Given `(D, W)`: `N = M = C D^6 W^2 (D + ln W) (1/eps)^{2+delta}`.
/// Total in dimension `d`: `D = ceil(log2 d) + 2`, `W = C (1/eps)^d`,
/// `N = M = C (1/eps)^{2d+4+delta}`.
pub fn sample_budget(eps: f64, delta: f64, mode: BudgetMode, conv_c: f64) -> Result<Budget> {
    if !(eps > 0.0 && eps < 1.0) && eps != 1.0 {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be >= 0, got {delta}")));
    }
    check_positive("conv_c", conv_c)?;
    let inv = 1.0 / eps;
    match mode {
        BudgetMode::GivenArch { depth, width } => {
            check_arch(depth, width)?;
            let (d, w) = (depth as f64, width as f64);
            let n = conv_c * d.powi(6) * w * w * (d + w.ln()) * inv.powf(2.0 + delta);
            Ok(Budget {
                depth,
                width: w,
                n,
                m: n,
            })
        }
        BudgetMode::Total { dim } => {
            if dim == 0 {
                return Err(Error::InvalidArgument("dimension must be positive".into()));
            }
            let depth = dim.next_power_of_two().trailing_zeros() as usize + 2;
            let d = dim as f64;
            let n = conv_c * inv.powf(2.0 * d + 4.0 + delta);
            Ok(Budget {
                depth,
                width: conv_c * inv.powf(d),
                n,
                m: n,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn pdim_values() {
        assert_eq!(pdim_bound(1, 1, 1.0).unwrap(), 1.0);
        let want = 4.0 * 9.0 * (2.0 + 3f64.ln());
        assert!(rel(pdim_bound(2, 3, 1.0).unwrap(), want) < 1e-15);
        assert!((pdim_bound(2, 3, 1.0).unwrap() - 111.55).abs() < 0.01);
        assert!(pdim_bound(0, 3, 1.0).is_err());
    }

    #[test]
    fn covering_values() {
        let b = covering_bound(1.0, 0.3, 0.3, 1, CoveringForm::Binomial).unwrap();
        assert!((b - 2.0).abs() < 1e-15);
        let s = covering_bound(2.0, 1.0, 0.5, 10, CoveringForm::Auto).unwrap();
        assert!(rel(s, (10.0 * E).powi(2)) < 1e-14);
        assert!((s - 738.9).abs() < 0.1);
        // falls back below pdim
        let f = covering_bound(3.0, 1.0, 0.5, 2, CoveringForm::Auto).unwrap();
        assert_eq!(f, 1.0 + 2.0 * 2.0 + 1.0 * 4.0);
        assert!(covering_bound(3.0, 1.0, 0.5, 2, CoveringForm::Simplified).is_err());
        assert!(covering_bound(0.5, 1.0, 0.5, 2, CoveringForm::Auto).is_err());
    }

    #[test]
    fn sign_pattern_values() {
        assert!(rel(polynomial_sign_bound(1, 1, 1).unwrap(), 4.0 * E) < 1e-15);
        assert!((polynomial_sign_bound(1, 1, 1).unwrap() - 10.873).abs() < 1e-3);
        let v = polynomial_sign_bound(4, 2, 3).unwrap();
        assert!(rel(v, 2.0 * (12.0 * E).powi(2)) < 1e-14);
        assert!(rel(v, 2128.3) < 2e-4);
        assert!(polynomial_sign_bound(1, 2, 1).is_err());
        for (m, n, deg) in [(3, 2, 1), (7, 7, 2), (9, 4, 5)] {
            let a = polynomial_sign_bound(m, n, deg).unwrap();
            let b = polynomial_sign_bound(m, n, 2 * deg).unwrap();
            assert!(rel(b, a * 2f64.powi(n as i32)) < 1e-13);
        }
    }

    #[test]
    fn h_values() {
        let h = h_constant(1, 1, 1.0).unwrap();
        assert!(rel(h, 32400.0 * (6.0 + 15f64.ln())) < 1e-15);
        assert!(rel(h, 282_130.0) < 1e-4);
        let h2 = h_constant(2, 2, 1.0).unwrap();
        assert!(rel(h2, 4.0 * 16.0 * 36.0 * 49.0 * 4.0 * (7.0 + 48f64.ln())) < 1e-15);
    }

    #[test]
    fn rademacher_values() {
        let r = rademacher_bound(1.0, 100.0, 100.0).unwrap();
        assert!((r.value - 34.29).abs() < 0.01 && r.vacuous);
        let half = rademacher_bound(0.5, 10.0, 1e6).unwrap();
        let one = rademacher_bound(1.0, 10.0, 1e6).unwrap();
        assert!(rel(half.value, 0.5 * one.value) < 1e-15);
        assert!(!rademacher_bound(1.0, 10.0, 1e9).unwrap().vacuous);
        assert!(rademacher_bound(1.0, 1e3, 10.0).unwrap().vacuous);
    }

    #[test]
    fn chaining_chain() {
        for (pdim, b, n) in [(5.0f64, 1.0f64, 1e4f64), (50.0, 2.0, 1e6), (1.0, 0.5, 100.0)] {
            let delta = b * (pdim / n).sqrt();
            let integral = chaining_integral(pdim, b, n, delta).unwrap();
            let closed = chaining_bound(pdim, b, n).unwrap();
            let last = 28.0 * 1.5f64.sqrt() * b * (pdim / n).sqrt() * (E * n / pdim).ln().sqrt();
            assert!(integral <= closed * (1.0 + 1e-9), "{integral} {closed}");
            assert!(closed <= last, "{closed} {last}");
        }
    }

    #[test]
    fn budgets() {
        let b = sample_budget(0.1, 0.0, BudgetMode::Total { dim: 1 }, 1.0).unwrap();
        assert_eq!(b.depth, 2);
        assert!(rel(b.width, 10.0) < 1e-12);
        assert!(rel(b.n, 1e6) < 1e-9 && rel(b.m, 1e6) < 1e-9);
        let u = sample_budget(1.0, 0.0, BudgetMode::GivenArch { depth: 1, width: 1 }, 1.0).unwrap();
        assert_eq!(u.n, 1.0);
        for (dim, depth) in [(2, 3), (3, 4), (4, 4), (5, 5)] {
            assert_eq!(sample_budget(0.5, 0.0, BudgetMode::Total { dim }, 1.0).unwrap().depth, depth);
        }
        assert!(sample_budget(0.0, 0.0, BudgetMode::Total { dim: 1 }, 1.0).is_err());
    }

    fn inputs(n: f64, m: f64) -> BoundInputs {
        BoundInputs {
            depth: 2,
            width: 3,
            sup_bound: 1.5,
            n,
            m,
            eps: 0.1,
            delta: 0.0,
            conv_c: 1.0,
            c1: 0.0,
            c2: 0.0,
        }
        .with_coefficients(
            &CoefficientBounds {
                a_max: 1.0,
                b_max: 1.0,
                c_max: 1.0,
                e_max: 1.0,
                f_l2: 1.0,
                g_l2: 1.0,
            },
            1,
        )
    }

    #[test]
    fn stat_bound_limits() {
        let dom = Domain::unit_box(1).unwrap();
        let i = inputs(1e9, 1e9);
        assert_eq!((i.c1, i.c2), (1.0, 1.0));
        let s = stat_error_bound(&i, &dom).unwrap();
        assert!(!s.vacuous);
        assert!(rel(s.value, s.interior + s.boundary) < 1e-15);
        let far = stat_error_bound(&inputs(1e9, 1e300), &dom).unwrap();
        assert!(far.boundary < 1e-130);
        let inf = stat_error_bound(&inputs(1e9, f64::INFINITY), &dom).unwrap();
        assert_eq!(inf.value, s.interior);
    }

    proptest! {
        #[test]
        fn monotone_in_architecture(d in 1usize..12, w in 1usize..200) {
            prop_assert!(pdim_bound(d, w, 1.0).unwrap() < pdim_bound(d + 1, w, 1.0).unwrap());
            prop_assert!(pdim_bound(d, w, 1.0).unwrap() < pdim_bound(d, w + 1, 1.0).unwrap());
            prop_assert!(h_constant(d, w, 1.0).unwrap() < h_constant(d, w + 1, 1.0).unwrap());
            prop_assert!(h_constant(d, w, 1.0).unwrap() < h_constant(d + 1, w, 1.0).unwrap());
        }

        #[test]
        fn covering_nonincreasing_in_eps(pdim in 1.0..20.0f64, b in 0.1..10.0f64, e1 in 0.01..5.0f64, e2 in 0.01..5.0f64, n in 1usize..500) {
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            for form in [CoveringForm::Auto, CoveringForm::Binomial] {
                let a = covering_bound(pdim, b, lo, n, form).unwrap();
                let c = covering_bound(pdim, b, hi, n, form).unwrap();
                prop_assert!(c <= a * (1.0 + 1e-12));
            }
        }

        #[test]
        fn rademacher_scaling_and_halving(b in 1.0..20.0f64, h in 1.0..1e4f64, k in 3.0..1e3f64) {
            let n = h * k;
            let one = rademacher_bound(1.0, h, n).unwrap().value;
            let rb = rademacher_bound(b, h, n).unwrap().value;
            prop_assert!((rb - b * b * one).abs() <= 1e-12 * rb);
            let half = rademacher_bound(1.0, h, n / 2.0).unwrap().value;
            // the log factor shrinks, so the ratio lies in (1, sqrt 2) once N > 4H/e
            prop_assert!(half > one && half < 2f64.sqrt() * one);
        }

        #[test]
        fn stat_bound_decreasing(n in 2e7..1e12f64, m in 2e7..1e12f64, f in 1.01..10.0f64) {
            let dom = Domain::unit_box(1).unwrap();
            let base = stat_error_bound(&inputs(n, m), &dom).unwrap().value;
            prop_assert!(stat_error_bound(&inputs(n * f, m), &dom).unwrap().value < base);
            prop_assert!(stat_error_bound(&inputs(n, m * f), &dom).unwrap().value < base);
        }

        #[test]
        fn budget_increases_as_eps_shrinks(e in 0.01..0.99f64, delta in 0.0..1.0f64, d in 1usize..4) {
            let small = e * 0.9;
            for mode in [BudgetMode::Total { dim: d }, BudgetMode::GivenArch { depth: d, width: 3 }] {
                let a = sample_budget(e, delta, mode, 1.0).unwrap();
                let b = sample_budget(small, delta, mode, 1.0).unwrap();
                prop_assert!(b.n > a.n && b.m > a.m);
            }
        }
    }
}
