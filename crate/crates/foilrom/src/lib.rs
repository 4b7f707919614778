//! Non-intrusive reduced-order design pipeline for a parametrized
//! airfoil section.
//!
//! The library chains five building blocks around an analytic stand-in
//! for the expensive flow solver:
//!
//! - [`shape`]: NACA 4-digit reference sections and Hicks-Henne bump
//!   deformations controlled by a weight vector.
//! - [`rbf`]: radial-basis-function mesh morphing with a Wendland C2
//!   kernel, linear polynomial term, and focal-point cutoff.
//! - [`dmd`]: dynamic mode decomposition of lift-coefficient snapshot
//!   ensembles and future-state forecasting.
//! - [`subspace`]: dynamic active subspaces of the time-dependent lift,
//!   used to detect and freeze parameters the output barely depends on.
//! - [`gpr`]: Gaussian process regression over the full or the reduced
//!   parameter space, including posterior-mean gradients.
//!
//! [`surrogate`] provides the analytic full-order-model stand-in (a
//! planted ridge with low-rank linear time dynamics) so the whole
//! pipeline runs and can be verified at desk scale. [`pipeline`] wires
//! everything together behind a single config; see the `examples/`
//! directory for one runnable entry point per capability and the
//! `foilrom` binary for the command-line interface.

// `!(x > 0.0)`-style guards are used on purpose: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dmd;
pub mod error;
pub mod gpr;
pub mod pipeline;
pub mod rbf;
pub mod sample;
pub mod shape;
pub mod subspace;
pub mod surrogate;

mod csvio;

pub use error::{Error, Result};
