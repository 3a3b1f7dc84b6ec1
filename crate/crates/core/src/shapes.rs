//! Perturbation families and the randomized shape zoo, all built with an
//! exact cell count so that volumes match the reference ball exactly.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{GridSet, GridSpec};

/// Reference ball for a scan: the cells whose centers lie in the closed disk
/// of radius `a` about the origin. The set is invariant under the symmetries
/// of the grid, so its barycenter is exactly the origin.
#[derive(Debug, Clone)]
pub struct ScanSetup {
    pub grid: GridSpec,
    pub radius: f64,
    pub ball: GridSet,
}

impl ScanSetup {
    pub fn new(grid: GridSpec, radius: f64) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::UnsupportedDimension(grid.dim()));
        }
        if !(radius > 0.0) || radius + 2.0 * grid.cell_width() > grid.half_width() {
            return Err(Error::BallOutsideBox {
                margin: grid.half_width() - radius,
                required: 2.0 * grid.cell_width(),
            });
        }
        let mut ball = GridSet::empty(grid);
        for i in 0..grid.total_cells() {
            let c = grid.center(i);
            ball.set(i, c[0].hypot(c[1]) <= radius);
        }
        Ok(Self { grid, radius, ball })
    }

    /// Self-similar setup: box half-width `box_factor · a`, fixed cell count.
    pub fn for_mass(mass: f64, cells: usize, box_factor: f64) -> Result<Self> {
        let a = (mass / PI).sqrt();
        Self::new(GridSpec::new(2, cells, box_factor * a)?, a)
    }

    pub fn count(&self) -> usize {
        self.ball.count()
    }

    pub fn mass(&self) -> f64 {
        self.ball.volume()
    }

    /// Shape `{score < t}` with the same cell count as the ball.
    pub fn level_set(&self, score: impl Fn([f64; 2]) -> f64) -> Result<GridSet> {
        GridSet::lowest_scores(self.grid, self.count(), score)
    }
}

/// One-parameter perturbations of the reference ball. The parameter is
/// zero at the ball and grows with the deformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Shift along `e₁` by the parameter, rounded to whole cells.
    Translate,
    /// Semi-axes `a(1+p)` and `a/(1+p)`.
    Ellipse,
    /// `r(θ) = a(1 + p·bump(θ))`, one bump.
    Bump1,
    /// Two bumps, `2π/3` apart.
    Bump2,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Translate,
        Family::Ellipse,
        Family::Bump1,
        Family::Bump2,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Family::Translate => "translate",
            Family::Ellipse => "ellipse",
            Family::Bump1 => "bump1",
            Family::Bump2 => "bump2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.label() == s)
            .ok_or_else(|| Error::Parse(format!("unknown family '{s}'")))
    }

    /// Largest parameter the generator accepts.
    pub fn max_param(&self, setup: &ScanSetup) -> f64 {
        match self {
            Family::Translate => setup.grid.half_width() - setup.radius - setup.grid.cell_width(),
            Family::Ellipse => 1.0,
            Family::Bump1 | Family::Bump2 => 1.5,
        }
    }

    pub fn member(&self, setup: &ScanSetup, p: f64) -> Result<GridSet> {
        if !(p >= 0.0) || p > self.max_param(setup) + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "{} parameter {p} outside [0, {}]",
                self.label(),
                self.max_param(setup)
            )));
        }
        let a = setup.radius;
        let set = match self {
            Family::Translate => {
                let s = (p / setup.grid.cell_width()).round() as isize;
                setup.ball.shift_cells([s, 0])?
            }
            Family::Ellipse => {
                let k = 1.0 + p;
                setup.level_set(|x| (x[0] / k).powi(2) + (x[1] * k).powi(2))?
            }
            Family::Bump1 => setup.level_set(|x| star_score(x, a, p, &[0.0]))?,
            Family::Bump2 => setup.level_set(|x| star_score(x, a, p, &[0.0, TAU / 3.0]))?,
        };
        Ok(set)
    }
}

/// Smooth periodic bump of half-width about 0.6 rad centered at angle 0.
fn bump(theta: f64) -> f64 {
    let c = theta.cos();
    ((c - 1.0) / 0.18).exp()
}

fn star_score(x: [f64; 2], a: f64, p: f64, centers: &[f64]) -> f64 {
    let theta = x[1].atan2(x[0]);
    let r = a * (1.0 + p * centers.iter().map(|&c| bump(theta - c)).sum::<f64>());
    x[0].hypot(x[1]) / r
}

/// Named shape in a zoo.
#[derive(Debug, Clone)]
pub struct ZooShape {
    pub label: String,
    pub set: GridSet,
}

/// `count` random shapes with exactly the reference cell count: rotated
/// ellipses, rotated rectangles, random Fourier stars, unions of two disks
/// and shifted balls, with random centers.
pub fn shape_zoo(setup: &ScanSetup, count: usize, seed: u64) -> Result<Vec<ZooShape>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = setup.radius;
    let h = setup.grid.cell_width();
    let reach = setup.grid.half_width();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 20 * count + 100 {
            return Err(Error::InvalidArgument(
                "could not fit the zoo into the box".into(),
            ));
        }
        let kind = out.len() % 5;
        let c = [rng.gen_range(-0.3..0.3) * a, rng.gen_range(-0.3..0.3) * a];
        let rot = rng.gen_range(0.0..PI);
        let (s, co) = rot.sin_cos();
        let local = move |x: [f64; 2]| {
            let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
            [co * dx + s * dy, -s * dx + co * dy]
        };
        let (label, set) = match kind {
            0 => {
                let k: f64 = rng.gen_range(1.1..1.7);
                let set = setup.level_set(|x| {
                    let u = local(x);
                    (u[0] / k).powi(2) + (u[1] * k).powi(2)
                })?;
                (format!("ellipse k={k:.3}"), set)
            }
            1 => {
                let k: f64 = rng.gen_range(1.0..2.2);
                let set = setup.level_set(|x| {
                    let u = local(x);
                    (u[0] / k).abs().max((u[1] * k).abs())
                })?;
                (format!("rectangle k={k:.3}"), set)
            }
            2 => {
                let modes: Vec<(f64, f64, f64)> = (2..=5)
                    .map(|j| (j as f64, rng.gen_range(0.0..0.12), rng.gen_range(0.0..TAU)))
                    .collect();
                let set = setup.level_set(|x| {
                    let u = local(x);
                    let t = u[1].atan2(u[0]);
                    let r = 1.0
                        + modes
                            .iter()
                            .map(|(j, amp, ph)| amp * (j * t + ph).cos())
                            .sum::<f64>();
                    u[0].hypot(u[1]) / r
                })?;
                (format!("star modes={}", modes.len()), set)
            }
            3 => {
                let ratio: f64 = rng.gen_range(0.3..1.0);
                let sep: f64 = rng.gen_range(1.0..1.8) * a;
                let set = setup.level_set(|x| {
                    let u = local(x);
                    let d1 = (u[0] + 0.5 * sep).hypot(u[1]);
                    let d2 = ((u[0] - 0.5 * sep).hypot(u[1])) / ratio.sqrt();
                    d1.min(d2)
                })?;
                (format!("two-disk ratio={ratio:.3}"), set)
            }
            _ => {
                let sx = rng.gen_range(-8..=8);
                let sy = rng.gen_range(-8..=8);
                (
                    format!("shifted ball ({sx},{sy})"),
                    setup.ball.shift_cells([sx, sy])?,
                )
            }
        };
        // keep a cell of clearance from the box
        if set.max_radius() > reach - h && !clear_of_edge(&set) {
            continue;
        }
        out.push(ZooShape { label, set });
    }
    Ok(out)
}

fn clear_of_edge(set: &GridSet) -> bool {
    let n = set.grid().cells_per_side();
    match set.bounding_box() {
        Some((lo, hi)) => lo[0] > 0 && lo[1] > 0 && hi[0] + 1 < n && hi[1] + 1 < n,
        None => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> ScanSetup {
        ScanSetup::new(GridSpec::new(2, 96, 2.5).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn reference_ball_is_symmetric() {
        let s = setup();
        let b = s.ball.barycenter().unwrap();
        assert!(b[0].abs() < 1e-12 && b[1].abs() < 1e-12);
        assert!((s.mass() - PI).abs() / PI < 0.01);
        for axis in 0..2 {
            assert!(crate::symmetrization::is_steiner_symmetric(&s.ball, axis));
        }
    }

    #[test]
    fn families_keep_count_and_start_at_ball() {
        let s = setup();
        for f in Family::ALL {
            let zero = f.member(&s, 0.0).unwrap();
            assert_eq!(zero.count(), s.count(), "{}", f.label());
            let m = f.member(&s, 0.3).unwrap();
            assert_eq!(m.count(), s.count());
            assert!(m.sym_diff_count(&s.ball).unwrap() > 0);
        }
        assert_eq!(Family::Translate.member(&s, 0.0).unwrap(), s.ball);
        assert!(Family::Ellipse.member(&s, 5.0).is_err());
        assert_eq!(Family::parse("bump2").unwrap(), Family::Bump2);
    }

    #[test]
    fn zoo_is_deterministic_and_equal_volume() {
        let s = setup();
        let z1 = shape_zoo(&s, 12, 4).unwrap();
        let z2 = shape_zoo(&s, 12, 4).unwrap();
        assert_eq!(z1.len(), 12);
        for (a, b) in z1.iter().zip(&z2) {
            assert_eq!(a.set, b.set);
            assert_eq!(a.set.count(), s.count());
        }
    }
}
