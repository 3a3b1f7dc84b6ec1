//! Fractional perimeter, potential energy and their combinations.

pub mod ball;
pub mod kernel;
pub mod perimeter;
pub mod potential;

pub use ball::{
    ball_constant, ball_energy_closed, read_ball_constants, write_ball_constants, BallConstant,
    BallEnergyTerms,
};
pub use kernel::{CellKernel, KernelParams};
pub use perimeter::{perimeter_grid, perimeter_mc, McEstimate, McSet, PerimeterEstimate};
pub use potential::{potential_energy, Potential, RadialTable};

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, GridSet};

/// Perimeter estimator used by [`free_energy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimatorChoice {
    #[default]
    Grid,
    MonteCarlo {
        samples: u64,
        seed: u64,
    },
}

/// `E(E) = P_α(E) + G(E)` with the perimeter error bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub perimeter: f64,
    pub potential: f64,
    pub total: f64,
    /// Monte Carlo standard error; 0 for the deterministic estimator.
    pub perimeter_stderr: f64,
    /// Quadrature error bound of the deterministic estimator; 0 otherwise.
    pub quadrature_error: f64,
    pub estimator: EstimatorChoice,
}

impl EnergyBreakdown {
    pub fn new(perimeter: f64, potential: f64, estimator: EstimatorChoice) -> Self {
        Self {
            perimeter,
            potential,
            total: perimeter + potential,
            perimeter_stderr: 0.0,
            quadrature_error: 0.0,
            estimator,
        }
    }

    /// Combined one-sigma uncertainty of the total.
    pub fn uncertainty(&self) -> f64 {
        self.perimeter_stderr.hypot(self.quadrature_error)
    }
}

pub fn free_energy(
    set: &GridSet,
    k: KernelParams,
    g: &Potential,
    estimator: EstimatorChoice,
) -> Result<EnergyBreakdown> {
    let potential = potential_energy(set, g)?;
    Ok(match estimator {
        EstimatorChoice::Grid => {
            let p = perimeter_grid(set, k)?;
            EnergyBreakdown {
                quadrature_error: p.error,
                ..EnergyBreakdown::new(p.value, potential, estimator)
            }
        }
        EstimatorChoice::MonteCarlo { samples, seed } => {
            let p = perimeter_mc(set, k, samples, seed)?;
            EnergyBreakdown {
                perimeter_stderr: p.stderr,
                ..EnergyBreakdown::new(p.value, potential, estimator)
            }
        }
    })
}

/// Isoperimetric deficit `P_α(λE) / P_α(B_1) - 1` with `|λE| = |B_1|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deficit {
    pub value: f64,
    /// Error bar propagated from the perimeter estimate and the ball constant.
    pub error: f64,
    pub perimeter: f64,
}

/// Deficit of a grid set. The rescaled perimeter is obtained from the exact
/// scaling law `P_α(λE) = λ^{n-α} P_α(E)` rather than by re-rasterizing.
pub fn deficit(set: &GridSet, k: KernelParams) -> Result<Deficit> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let c = ball_constant(k.dim(), k.alpha(), 1e-10)?;
    deficit_with(set, k, &c)
}

pub fn deficit_with(set: &GridSet, k: KernelParams, c: &BallConstant) -> Result<Deficit> {
    let p = perimeter_grid(set, k)?;
    let n = k.dim() as f64;
    let lambda = (unit_ball_volume(k.dim()) / set.volume()).powf(1.0 / n);
    let scaled = lambda.powf(k.scaling_exponent()) * p.value;
    let ratio = scaled / c.value;
    let error = ratio * (p.error / p.value + c.stderr / c.value);
    Ok(Deficit {
        value: ratio - 1.0,
        error,
        perimeter: p.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_ball, BallSpec, GridSpec};

    #[test]
    fn zero_potential_total_is_perimeter() {
        let g = GridSpec::new(2, 64, 2.0).unwrap();
        let disk = make_ball(&g, &BallSpec::centered(2, 1.0).unwrap()).unwrap();
        let k = KernelParams::new(2, 0.5).unwrap();
        let e = free_energy(
            &disk,
            k,
            &Potential::power(0.0, 2.0).unwrap(),
            EstimatorChoice::Grid,
        )
        .unwrap();
        assert_eq!(e.potential, 0.0);
        assert_eq!(e.total, e.perimeter);
        assert_eq!(e.perimeter_stderr, 0.0);
    }

    #[test]
    fn deficit_translation_invariant() {
        let g = GridSpec::new(2, 96, 2.0).unwrap();
        let disk = make_ball(&g, &BallSpec::centered(2, 1.0).unwrap()).unwrap();
        let k = KernelParams::new(2, 0.5).unwrap();
        let d0 = deficit(&disk, k).unwrap();
        let d1 = deficit(&disk.shift_cells([5, -3]).unwrap(), k).unwrap();
        assert_eq!(d0.value, d1.value);
        assert!(d0.value.abs() < 0.03, "{d0:?}");
    }
}
