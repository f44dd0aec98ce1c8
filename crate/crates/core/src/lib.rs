//! Numerical laboratory for physics-informed neural networks with ReLU³
//! activations on second-order elliptic Dirichlet problems.
//!
//! The crate is organised by subsystem:
//!
//! * [`network`]: feedforward networks with per-unit activations from
//!   {ReLU, ReLU², ReLU³}, evaluation, parameter gradients and second-order
//!   input jets.
//! * [`calculus`]: exact ReLU³/ReLU² gadgets, the structural derivative-network
//!   transform and finite-difference oracles.
//! * [`splines`]: uniform-knot B-splines, dual functionals, quasi-interpolation,
//!   rate studies and compilation of cubic spline expansions to ReLU³ networks.
//! * [`pde`]: elliptic problems, domain sampling, empirical and quadrature
//!   losses, the trainer and the manufactured-solution catalog.
//! * [`capacity`]: Rademacher complexity (exact and Monte Carlo), the 13-term
//!   loss-gap table and the pseudo-dimension / covering / sample-budget
//!   calculators.
//! * [`cli`]: the batch experiment runner behind the `pinnlab` binary.
//!
//! Inner loops over sample points, grid points and sign vectors go through
//! [`Exec`], which uses rayon when the `parallel` feature is enabled and falls
//! back to a plain sequential loop otherwise. Reductions are always performed
//! in index order, so results do not depend on the thread count.

// NaN-rejecting argument checks are written as `!(x > 0.0)`
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod capacity;
pub mod cli;
mod error;
mod exec;
pub mod network;
pub mod pde;
pub mod splines;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Exec;
