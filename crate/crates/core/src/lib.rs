//! Momentum methods interpolating between Polyak's heavy ball (`beta = 0`)
//! and NAG-SC (`beta = 1`), together with their high-resolution ODEs,
//! Lyapunov energy functionals and the phase-transition analysis of the
//! guaranteed convergence rate in `beta`.
//!
//! The crate is organised bottom-up:
//!
//! * [`objectives`]: certified strongly convex, smooth test functions.
//! * [`methods`]: the discrete method in single-variable and two-sequence form,
//!   plus gradient-descent and literature baselines.
//! * [`continuous`]: the high- and low-resolution ODEs, a fixed-step RK4
//!   integrator and discrete-vs-continuous deviation.
//! * [`energy`]: continuous and discrete energy functionals and decrement checks.
//! * [`phase`]: `A_beta`, `B_beta`, `h(beta)`, the critical `beta_c`, the
//!   admissible step-size window and the rate bounds.

// `!(x > 0.0)` is used deliberately so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuous;
pub mod energy;
mod error;
pub mod methods;
pub mod objectives;
pub mod phase;

pub use continuous::{BoundReport, Dynamics, OdeSolution};
pub use energy::{DiscreteDecrementReport, EnergySeries, EnvelopeReport};
pub use error::{Error, Result};
pub use methods::{MethodConfig, Trajectory, Variant};
pub use objectives::{CertificationReport, LogSumExp, Objective, Quadratic};
pub use phase::{CriticalBeta, PhaseReport, RateBound, Regime, StepWindow};

/// Dense column vector used for iterates, velocities and gradients.
pub type Vector = nalgebra::DVector<f64>;
