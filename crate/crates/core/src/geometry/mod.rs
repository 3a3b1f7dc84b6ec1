//! Set representations, measures and set algebra.

pub mod asymmetry;
pub mod ball;
pub mod grid;
pub mod star;

pub use asymmetry::{asymmetry, Asymmetry};
pub use ball::{
    ball_shift_excess, lens_area, make_ball, radius_for_volume, unit_ball_volume, unit_sphere_area,
    BallSpec,
};
pub use grid::{GridSet, GridSpec};
pub use star::StarShape;
