//! Nonlocal free energies `P_α(E) + ∫_E g` on grid sets and balls.
//!
//! The crate covers set representations ([`geometry`]), perimeter and
//! potential estimators ([`energy`]), Steiner symmetrization, discrete
//! optimal transport, volume-constrained minimization and the scan drivers
//! used by the `nel` command line tool.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod geometry;
pub mod minimizer;
pub mod modulus;
pub mod quadrature;
pub mod shapes;
pub mod symmetrization;
pub mod transport;

pub use energy::{
    ball_constant, ball_energy_closed, deficit, free_energy, perimeter_grid, perimeter_mc,
    potential_energy, BallConstant, EnergyBreakdown, EstimatorChoice, KernelParams, Potential,
};
pub use error::{Error, Result};
pub use geometry::{asymmetry, make_ball, Asymmetry, BallSpec, GridSet, GridSpec, StarShape};
