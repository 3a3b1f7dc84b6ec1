use std::f64::consts::PI;

use super::grid::{GridSet, GridSpec};
use crate::error::{Error, Result};

/// Volume of the unit ball in dimension `n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI.powf(n as f64 / 2.0) / gamma_half_integer(n + 2),
    }
}

/// Surface area of the unit sphere `S^{n-1}`.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

// Γ(k/2) for integer k ≥ 1.
fn gamma_half_integer(k: usize) -> f64 {
    if k == 1 {
        PI.sqrt()
    } else if k == 2 {
        1.0
    } else {
        (k as f64 / 2.0 - 1.0) * gamma_half_integer(k - 2)
    }
}

/// Area of the intersection of two disks of radius `a` at center distance `d`.
pub fn lens_area(a: f64, d: f64) -> f64 {
    let d = d.abs();
    if d >= 2.0 * a {
        return 0.0;
    }
    2.0 * a * a * (d / (2.0 * a)).acos() - 0.5 * d * (4.0 * a * a - d * d).sqrt()
}

/// `|B_a \ (B_a + w)|` for `|w| = d`, in dimensions 1 to 3, written without
/// cancellation for small `d`.
pub fn ball_shift_excess(n: usize, a: f64, d: f64) -> f64 {
    let d = d.abs();
    if d >= 2.0 * a {
        return unit_ball_volume(n) * a.powi(n as i32);
    }
    match n {
        1 => d,
        2 => {
            let s = d / (2.0 * a);
            2.0 * a * a * s.asin() + 0.5 * d * (4.0 * a * a - d * d).sqrt()
        }
        3 => PI * d * (12.0 * a * a - d * d) / 12.0,
        _ => panic!("ball_shift_excess: unsupported dimension {n}"),
    }
}

/// Analytic ball `B_a(center)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSpec {
    center: Vec<f64>,
    radius: f64,
}

impl BallSpec {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || center.len() > 3 {
            return Err(Error::UnsupportedDimension(center.len()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "radius must be positive, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn centered(dim: usize, radius: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], radius)
    }

    /// Ball of the given volume centered at the origin.
    pub fn with_volume(dim: usize, volume: f64) -> Result<Self> {
        Self::centered(dim, radius_for_volume(dim, volume))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32)
    }

    #[inline]
    pub fn contains(&self, p: &[f64]) -> bool {
        let d2: f64 = self
            .center
            .iter()
            .zip(p)
            .map(|(c, x)| (x - c) * (x - c))
            .sum();
        d2 < self.radius * self.radius
    }
}

pub fn radius_for_volume(dim: usize, volume: f64) -> f64 {
    (volume / unit_ball_volume(dim)).powf(1.0 / dim as f64)
}

/// Rasterize a ball with the subcell majority rule. The ball must clear the
/// box boundary by at least one cell.
pub fn make_ball(grid: &GridSpec, ball: &BallSpec) -> Result<GridSet> {
    if ball.dim() != grid.dim() {
        return Err(Error::InvalidArgument(format!(
            "ball dimension {} does not match grid dimension {}",
            ball.dim(),
            grid.dim()
        )));
    }
    let h = grid.cell_width();
    let margin = ball
        .center()
        .iter()
        .map(|c| grid.half_width() - (c.abs() + ball.radius()))
        .fold(f64::INFINITY, f64::min);
    if margin < h - 1e-12 {
        return Err(Error::BallOutsideBox {
            margin,
            required: h,
        });
    }
    let dim = grid.dim();
    Ok(GridSet::from_region(*grid, |p| ball.contains(&p[..dim])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lens_area_limits() {
        assert_relative_eq!(lens_area(1.0, 0.0), PI, max_relative = 1e-15);
        assert_eq!(lens_area(1.0, 2.0), 0.0);
        // half-overlap at d = a: 2π/3 - √3/2
        assert_relative_eq!(
            lens_area(1.0, 1.0),
            2.0 * PI / 3.0 - 3f64.sqrt() / 2.0,
            max_relative = 1e-14
        );
        for &d in &[0.01, 0.3, 1.2, 1.9] {
            assert_relative_eq!(
                ball_shift_excess(2, 1.0, d),
                PI - lens_area(1.0, d),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn three_dimensional_excess_matches_cap_formula() {
        // overlap of unit balls: π(4+d)(2-d)²/12
        for &d in &[0.1, 0.7, 1.5] {
            let overlap = PI * (4.0 + d) * (2.0 - d).powi(2) / 12.0;
            assert_relative_eq!(
                ball_shift_excess(3, 1.0, d),
                4.0 * PI / 3.0 - overlap,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn make_ball_volumes() {
        let g2 = GridSpec::new(2, 256, 2.0).unwrap();
        let disk = make_ball(&g2, &BallSpec::centered(2, 1.0).unwrap()).unwrap();
        assert!((disk.volume() - PI).abs() / PI < 0.005);
        let g1 = GridSpec::new(1, 256, 2.0).unwrap();
        let seg = make_ball(&g1, &BallSpec::centered(1, 1.0).unwrap()).unwrap();
        assert!((seg.volume() - 2.0).abs() / 2.0 < 0.005);
        let off = make_ball(&g2, &BallSpec::new(vec![0.5, 0.0], 1.0).unwrap()).unwrap();
        assert!((off.volume() - disk.volume()).abs() / disk.volume() < 0.002);
    }

    #[test]
    fn make_ball_rejects_escape() {
        let g2 = GridSpec::new(2, 64, 2.0).unwrap();
        let err = make_ball(&g2, &BallSpec::new(vec![1.5, 0.0], 1.0).unwrap()).unwrap_err();
        match err {
            Error::BallOutsideBox { margin, .. } => assert!(margin < 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn translated_disk_matches_lens_oracle() {
        let g = GridSpec::new(2, 256, 2.0).unwrap();
        let disk = make_ball(&g, &BallSpec::centered(2, 1.0).unwrap()).unwrap();
        for &d in &[0.25, 0.5] {
            let moved = disk.translate([d, 0.0]).unwrap();
            let measured = disk.sym_diff_volume(&moved).unwrap();
            let exact = 2.0 * (PI - lens_area(1.0, d));
            assert!(
                (measured - exact).abs() / exact < 0.01,
                "d={d}: {measured} vs {exact}"
            );
        }
        // two independently rasterized disks
        let other = make_ball(&g, &BallSpec::new(vec![0.2, 0.0], 1.0).unwrap()).unwrap();
        let measured = disk.sym_diff_volume(&other).unwrap();
        let exact = 2.0 * (PI - lens_area(1.0, 0.2));
        assert!((measured - exact).abs() / exact < 0.01);
    }
}
