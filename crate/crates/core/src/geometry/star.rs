use std::f64::consts::PI;

use super::grid::{GridSet, GridSpec};
use crate::error::{Error, Result};

/// Planar star-shaped set given by radial samples at uniformly spaced angles,
/// linearly interpolated in angle.
#[derive(Debug, Clone, PartialEq)]
pub struct StarShape {
    center: [f64; 2],
    radii: Vec<f64>,
}

impl StarShape {
    pub fn new(center: [f64; 2], radii: Vec<f64>) -> Result<Self> {
        if radii.len() < 3 {
            return Err(Error::InvalidArgument(
                "need at least 3 radial samples".into(),
            ));
        }
        if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument(
                "radial samples must be positive".into(),
            ));
        }
        Ok(Self { center, radii })
    }

    /// Samples `r(θ)` at `samples` angles.
    pub fn from_fn(center: [f64; 2], samples: usize, r: impl Fn(f64) -> f64) -> Result<Self> {
        let step = 2.0 * PI / samples as f64;
        Self::new(center, (0..samples).map(|k| r(k as f64 * step)).collect())
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn radius_at(&self, theta: f64) -> f64 {
        let k = self.radii.len();
        let t = theta.rem_euclid(2.0 * PI) / (2.0 * PI) * k as f64;
        let i = (t.floor() as usize) % k;
        let frac = t - t.floor();
        self.radii[i] * (1.0 - frac) + self.radii[(i + 1) % k] * frac
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }

    /// `½ Σ r(θ_k)² Δθ`.
    pub fn polar_volume(&self) -> f64 {
        let dt = 2.0 * PI / self.radii.len() as f64;
        0.5 * self.radii.iter().map(|r| r * r).sum::<f64>() * dt
    }

    /// Normalized radial coordinate: below 1 inside, above 1 outside.
    pub fn level(&self, p: [f64; 2]) -> f64 {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        dx.hypot(dy) / self.radius_at(dy.atan2(dx))
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.level(p) < 1.0
    }

    pub fn rasterize(&self, grid: &GridSpec) -> Result<GridSet> {
        if grid.dim() != 2 {
            return Err(Error::UnsupportedDimension(grid.dim()));
        }
        let reach = self.max_radius() + self.center[0].abs().max(self.center[1].abs());
        if reach > grid.half_width() {
            return Err(Error::OutsideBox { cells: 1 });
        }
        Ok(GridSet::from_region(*grid, |p| self.contains(p)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rasterized_volume_tracks_polar_volume() {
        let g = GridSpec::new(2, 256, 2.0).unwrap();
        for k in [16usize, 64, 256] {
            let s = StarShape::from_fn([0.1, -0.05], k, |t| 1.0 + 0.2 * (3.0 * t).cos()).unwrap();
            let v = s.rasterize(&g).unwrap().volume();
            let pv = s.polar_volume();
            assert!((v - pv).abs() / pv <= 2.0 / k as f64, "K={k}: {v} vs {pv}");
        }
    }

    #[test]
    fn rejects_nonpositive_radii() {
        assert!(StarShape::new([0.0; 2], vec![1.0, 0.0, 1.0]).is_err());
        assert!(StarShape::new([0.0; 2], vec![1.0, 1.0]).is_err());
    }
}
