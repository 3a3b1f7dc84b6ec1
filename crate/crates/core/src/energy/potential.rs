use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, GridSet, GridSpec};

/// Monotone radial profile, linearly interpolated and held constant past the
/// last radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialTable {
    radii: Vec<f64>,
    values: Vec<f64>,
}

impl RadialTable {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(Error::InvalidPotential(
                "table needs at least two (radius, value) pairs".into(),
            ));
        }
        if radii[0] != 0.0 || values[0] != 0.0 {
            return Err(Error::InvalidPotential(
                "table must start at h(0) = 0".into(),
            ));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPotential(
                "radii must be strictly increasing".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidPotential(
                "values must be nondecreasing".into(),
            ));
        }
        Ok(Self { radii, values })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let n = self.radii.len();
        if r >= self.radii[n - 1] {
            return self.values[n - 1];
        }
        let i = self.radii.partition_point(|&x| x <= r).max(1) - 1;
        let t = (r - self.radii[i]) / (self.radii[i + 1] - self.radii[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }
}

/// Confinement potential `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    /// `g(x) = c |x|^ν`.
    PowerRadial { coeff: f64, degree: f64 },
    /// Planar potential that keeps decreasing under upward translation:
    /// `x²(1 - y) + x² y²` for `y <= 0`, `x² / (1 + y)` for `y > 0`.
    Nonexistence,
    /// `g(x) = h(|x|)` for a tabulated nondecreasing `h`.
    TableRadial(RadialTable),
}

impl Potential {
    pub fn power(coeff: f64, degree: f64) -> Result<Self> {
        if !(coeff >= 0.0 && coeff.is_finite()) {
            return Err(Error::InvalidPotential(format!(
                "coefficient must be >= 0, got {coeff}"
            )));
        }
        if !(degree > 0.0 && degree.is_finite()) {
            return Err(Error::InvalidPotential(format!(
                "degree must be > 0, got {degree}"
            )));
        }
        Ok(Self::PowerRadial { coeff, degree })
    }

    pub fn quadratic() -> Self {
        Self::PowerRadial {
            coeff: 1.0,
            degree: 2.0,
        }
    }

    pub fn table(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(Self::TableRadial(RadialTable::new(radii, values)?))
    }

    /// Radial profile `h(r)` for radial potentials.
    pub fn profile(&self, r: f64) -> Option<f64> {
        match self {
            Self::PowerRadial { coeff, degree } => Some(coeff * r.powf(*degree)),
            Self::TableRadial(t) => Some(t.eval(r)),
            Self::Nonexistence => None,
        }
    }

    pub fn is_radial_nondecreasing(&self) -> bool {
        !matches!(self, Self::Nonexistence)
    }

    #[inline]
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        match self {
            Self::PowerRadial { coeff, degree } => {
                let r2 = p[0] * p[0] + p[1] * p[1];
                if *degree == 2.0 {
                    coeff * r2
                } else {
                    coeff * r2.powf(0.5 * degree)
                }
            }
            Self::TableRadial(t) => t.eval(p[0].hypot(p[1])),
            Self::Nonexistence => nonexistence_g(p[0], p[1]),
        }
    }

    /// `∫_{B_1} g` for radial power potentials, `c n |B_1| / (n + ν)`.
    pub fn unit_ball_integral(&self, dim: usize) -> Result<f64> {
        match self {
            Self::PowerRadial { coeff, degree } => {
                let n = dim as f64;
                Ok(coeff * n * unit_ball_volume(dim) / (n + degree))
            }
            _ => Err(Error::NotHomogeneous),
        }
    }

    /// Integral of `g` over every cell of the grid, by the midpoint rule on
    /// the `4^n` subcells. Applying one rule to all cells keeps the energy
    /// exactly additive over disjoint sets.
    pub fn cell_integrals(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        if matches!(self, Self::Nonexistence) && grid.dim() != 2 {
            return Err(Error::UnsupportedDimension(grid.dim()));
        }
        let w = grid.cell_volume() / grid.subsample_count() as f64;
        Ok((0..grid.total_cells())
            .map(|i| w * grid.subsamples(i).map(|p| self.eval(p)).sum::<f64>())
            .collect())
    }
}

fn nonexistence_g(x: f64, y: f64) -> f64 {
    let x2 = x * x;
    if y <= 0.0 {
        x2 * (1.0 - y) + x2 * y * y
    } else {
        x2 / (1.0 + y)
    }
}

/// Sum of per-cell potential integrals over the occupied cells.
pub fn sum_over(set: &GridSet, cell_values: &[f64]) -> f64 {
    set.mask()
        .iter()
        .zip(cell_values)
        .filter(|(m, _)| **m)
        .map(|(_, v)| *v)
        .sum()
}

/// `G(E) = ∫_E g`.
pub fn potential_energy(set: &GridSet, g: &Potential) -> Result<f64> {
    Ok(sum_over(set, &g.cell_integrals(set.grid())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_ball, BallSpec};
    use std::f64::consts::PI;

    #[test]
    fn constructors_validate() {
        assert!(Potential::power(-1.0, 2.0).is_err());
        assert!(Potential::power(1.0, 0.0).is_err());
        assert!(Potential::table(vec![0.0, 1.0], vec![0.5, 1.0]).is_err());
        assert!(Potential::table(vec![0.0, 1.0], vec![0.0, -1.0]).is_err());
        assert!(Potential::table(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 2.0]).is_err());
        for g in [
            Potential::quadratic(),
            Potential::Nonexistence,
            Potential::table(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap(),
        ] {
            assert_eq!(g.eval([0.0, 0.0]), 0.0);
        }
    }

    #[test]
    fn nonexistence_point_values() {
        let g = Potential::Nonexistence;
        assert_eq!(g.eval([1.0, 0.0]), 1.0);
        assert_eq!(g.eval([1.0, 1.0]), 0.5);
        for y in [-3.0, -0.5, 0.0, 0.5, 7.0] {
            assert_eq!(g.eval([0.0, y]), 0.0);
        }
        // continuity across y = 0
        let below = g.eval([0.7, -1e-12]);
        let above = g.eval([0.7, 1e-12]);
        assert!((below - above).abs() < 1e-11);
        // nonincreasing in y for fixed x
        let mut prev = f64::INFINITY;
        for k in -40..40 {
            let v = g.eval([0.8, k as f64 * 0.1]);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn table_interpolates() {
        let t = RadialTable::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.5]).unwrap();
        assert_eq!(t.eval(0.5), 0.5);
        assert_eq!(t.eval(1.5), 1.25);
        assert_eq!(t.eval(9.0), 1.5);
    }

    #[test]
    fn quadratic_over_unit_disk() {
        let g = GridSpec::new(2, 256, 2.0).unwrap();
        let disk = make_ball(&g, &BallSpec::centered(2, 1.0).unwrap()).unwrap();
        let v = potential_energy(&disk, &Potential::quadratic()).unwrap();
        assert!((v - PI / 2.0).abs() / (PI / 2.0) < 0.005, "{v}");
        assert_eq!(
            potential_energy(&GridSet::empty(g), &Potential::quadratic()).unwrap(),
            0.0
        );
        let exact = Potential::quadratic().unit_ball_integral(2).unwrap();
        assert!((exact - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn additive_over_disjoint_sets() {
        let g = GridSpec::new(2, 64, 2.0).unwrap();
        let pot = Potential::table(vec![0.0, 0.5, 3.0], vec![0.0, 0.2, 4.0]).unwrap();
        let a = GridSet::from_region(g, |p| p[0] < -0.3);
        let b = GridSet::from_region(g, |p| p[0] > 0.4 && p[1] > 0.0);
        let u = a.union(&b).unwrap();
        let sum = potential_energy(&a, &pot).unwrap() + potential_energy(&b, &pot).unwrap();
        assert!((potential_energy(&u, &pot).unwrap() - sum).abs() < 1e-12 * sum);
    }
}
