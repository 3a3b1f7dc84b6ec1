//! Steiner symmetrization of grid sets.

use rayon::prelude::*;

use crate::energy::{potential::sum_over, Potential};
use crate::error::{Error, Result};
use crate::geometry::{GridSet, GridSpec};

/// Symmetrization direction: a grid axis, or (in 2-D) an arbitrary angle
/// handled by rotating the set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Direction {
    Axis(usize),
    Angle(f64),
}

impl Direction {
    pub fn unit(&self) -> [f64; 2] {
        match *self {
            Direction::Axis(0) => [1.0, 0.0],
            Direction::Axis(_) => [0.0, 1.0],
            Direction::Angle(t) => [t.cos(), t.sin()],
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Direction::Axis(a) => format!("e{}", a + 1),
            Direction::Angle(t) => format!("{:.1}deg", t.to_degrees()),
        }
    }

    fn validate(&self, grid: &GridSpec) -> Result<()> {
        match *self {
            Direction::Axis(a) if a < grid.dim() => Ok(()),
            Direction::Axis(a) => Err(Error::InvalidArgument(format!(
                "axis {a} out of range for dimension {}",
                grid.dim()
            ))),
            Direction::Angle(t) if grid.dim() == 2 && t.is_finite() => Ok(()),
            Direction::Angle(_) => Err(Error::InvalidArgument(
                "angled directions need a 2-D grid".into(),
            )),
        }
    }
}

/// Result of a symmetrization step.
#[derive(Debug, Clone, PartialEq)]
pub struct Symmetrized {
    pub set: GridSet,
    /// Relative change in cell count caused by rotation resampling (0 for axes).
    pub volume_drift: f64,
    /// Set when the resampling drift exceeds 1%.
    pub warning: bool,
}

/// First cell of the centered run of `count` cells on a line of `n` cells.
/// Odd leftovers put the extra empty cell on the positive side, so the run
/// leans toward the negative side.
#[inline]
fn run_start(n: usize, count: usize) -> usize {
    (n - count) / 2
}

fn line_index(grid: &GridSpec, axis: usize, line: usize, pos: usize) -> usize {
    match (grid.dim(), axis) {
        (1, _) => pos,
        (_, 0) => grid.index([pos, line]),
        _ => grid.index([line, pos]),
    }
}

fn lines(grid: &GridSpec) -> usize {
    if grid.dim() == 1 {
        1
    } else {
        grid.cells_per_side()
    }
}

fn symmetrize_axis(set: &GridSet, axis: usize) -> GridSet {
    let grid = *set.grid();
    let n = grid.cells_per_side();
    let counts: Vec<usize> = (0..lines(&grid))
        .into_par_iter()
        .map(|l| {
            (0..n)
                .filter(|&p| set.get(line_index(&grid, axis, l, p)))
                .count()
        })
        .collect();
    let mut out = GridSet::empty(grid);
    for (l, &c) in counts.iter().enumerate() {
        let s = run_start(n, c);
        for p in s..s + c {
            out.set(line_index(&grid, axis, l, p), true);
        }
    }
    out
}

/// Rotation of the mask by `theta` about the origin, bilinear resampling of
/// the indicator thresholded at 1/2.
pub fn rotate(set: &GridSet, theta: f64) -> GridSet {
    let grid = *set.grid();
    let n = grid.cells_per_side() as isize;
    let h = grid.cell_width();
    let (s, c) = theta.sin_cos();
    let value = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= n || j >= n {
            0.0
        } else if set.get(grid.index([i as usize, j as usize])) {
            1.0
        } else {
            0.0
        }
    };
    let mask = (0..grid.total_cells())
        .into_par_iter()
        .map(|idx| {
            let p = grid.center(idx);
            // preimage under the rotation
            let q = [c * p[0] + s * p[1], -s * p[0] + c * p[1]];
            let fx = (q[0] + grid.half_width()) / h - 0.5;
            let fy = (q[1] + grid.half_width()) / h - 0.5;
            let (x0, y0) = (fx.floor(), fy.floor());
            let (tx, ty) = (fx - x0, fy - y0);
            let (i, j) = (x0 as isize, y0 as isize);
            let v = (1.0 - tx) * (1.0 - ty) * value(i, j)
                + tx * (1.0 - ty) * value(i + 1, j)
                + (1.0 - tx) * ty * value(i, j + 1)
                + tx * ty * value(i + 1, j + 1);
            v >= 0.5
        })
        .collect();
    GridSet::new(grid, mask).expect("mask length matches grid")
}

/// Replaces every line parallel to `d` by a centered run of the same length.
pub fn steiner_symmetrize(set: &GridSet, d: Direction) -> Result<Symmetrized> {
    d.validate(set.grid())?;
    match d {
        Direction::Axis(axis) => Ok(Symmetrized {
            set: symmetrize_axis(set, axis),
            volume_drift: 0.0,
            warning: false,
        }),
        Direction::Angle(theta) => {
            let before = set.count() as f64;
            let out = rotate(&symmetrize_axis(&rotate(set, -theta), 0), theta);
            let drift = if before > 0.0 {
                (out.count() as f64 - before) / before
            } else {
                0.0
            };
            Ok(Symmetrized {
                set: out,
                volume_drift: drift,
                warning: drift.abs() > 0.01,
            })
        }
    }
}

/// Whether every line parallel to the axis is already a centered run, up to
/// the half-cell ambiguity of odd leftovers.
pub fn is_steiner_symmetric(set: &GridSet, axis: usize) -> bool {
    let grid = *set.grid();
    let n = grid.cells_per_side();
    (0..lines(&grid)).all(|l| {
        let occ: Vec<usize> = (0..n)
            .filter(|&p| set.get(line_index(&grid, axis, l, p)))
            .collect();
        let c = occ.len();
        if c == 0 {
            return true;
        }
        let contiguous = occ[c - 1] - occ[0] + 1 == c;
        let lo = run_start(n, c);
        let hi = n - c - lo;
        contiguous && (occ[0] == lo || occ[0] == hi)
    })
}

/// One row of a symmetrization trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub step: usize,
    pub direction: Option<Direction>,
    pub volume: f64,
    pub potential: f64,
    pub sym_diff_to_ball: f64,
    pub set: GridSet,
}

/// Origin-centered rasterized ball with exactly the cell count of `set`.
pub fn equal_count_ball(set: &GridSet) -> GridSet {
    GridSet::lowest_scores(*set.grid(), set.count(), |p| p[0].hypot(p[1]))
        .expect("count never exceeds the grid")
}

/// Applies the schedule in order, recording the distance to the equal-volume
/// origin-centered ball after each step. Convergence is measured, not assumed.
pub fn iterate_to_ball(
    set: &GridSet,
    schedule: &[Direction],
    g: &Potential,
) -> Result<Vec<TrajectoryStep>> {
    let cells = g.cell_integrals(set.grid())?;
    let record = |step, direction, s: &GridSet| -> Result<TrajectoryStep> {
        Ok(TrajectoryStep {
            step,
            direction,
            volume: s.volume(),
            potential: sum_over(s, &cells),
            sym_diff_to_ball: s.sym_diff_volume(&equal_count_ball(s))?,
            set: s.clone(),
        })
    };
    let mut out = vec![record(0, None, set)?];
    let mut current = set.clone();
    for (i, &d) in schedule.iter().enumerate() {
        current = steiner_symmetrize(&current, d)?.set;
        out.push(record(i + 1, Some(d), &current)?);
    }
    Ok(out)
}

/// Potential energy before and after one axis symmetrization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport {
    pub before: f64,
    pub after: f64,
    pub delta: f64,
    /// `delta <= 1e-9 |before| + 1e-12`.
    pub nonincreasing: bool,
    pub strict: bool,
}

pub fn potential_monotonicity_check(
    set: &GridSet,
    d: Direction,
    g: &Potential,
) -> Result<MonotonicityReport> {
    if !g.is_radial_nondecreasing() {
        return Err(Error::NonMonotonePotential);
    }
    let cells = g.cell_integrals(set.grid())?;
    let after_set = steiner_symmetrize(set, d)?.set;
    let before = sum_over(set, &cells);
    let after = sum_over(&after_set, &cells);
    let delta = after - before;
    let tol = 1e-9 * before.abs() + 1e-12;
    Ok(MonotonicityReport {
        before,
        after,
        delta,
        nonincreasing: delta <= tol,
        strict: delta < -tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_ball, BallSpec};

    fn grid() -> GridSpec {
        GridSpec::new(2, 64, 2.0).unwrap()
    }

    #[test]
    fn centered_ball_is_fixed() {
        let b = make_ball(&grid(), &BallSpec::centered(2, 1.0).unwrap()).unwrap();
        for axis in 0..2 {
            assert_eq!(
                steiner_symmetrize(&b, Direction::Axis(axis)).unwrap().set,
                b
            );
            assert!(is_steiner_symmetric(&b, axis));
        }
    }

    #[test]
    fn two_squares_merge() {
        let g = grid();
        let s = GridSet::from_region(g, |p| {
            p[1].abs() < 0.25 && ((p[0] + 1.0).abs() < 0.25 || (p[0] - 1.2).abs() < 0.25)
        });
        let out = steiner_symmetrize(&s, Direction::Axis(0)).unwrap().set;
        assert_eq!(out.count(), s.count());
        let rect = GridSet::from_region(g, |p| p[1].abs() < 0.25 && p[0].abs() < 0.5);
        assert_eq!(out, rect);
    }

    #[test]
    fn odd_runs_lean_negative() {
        let g = GridSpec::new(1, 8, 1.0).unwrap();
        let mut s = GridSet::empty(g);
        for i in [0, 5, 7] {
            s.set(i, true);
        }
        let out = steiner_symmetrize(&s, Direction::Axis(0)).unwrap().set;
        assert_eq!(out.cells(), vec![2, 3, 4]);
    }

    #[test]
    fn off_center_disk_decrease_matches_recount() {
        let g = grid();
        let disk = make_ball(&g, &BallSpec::new(vec![0.3, 0.6], 0.7).unwrap()).unwrap();
        let pot = Potential::quadratic();
        let rep = potential_monotonicity_check(&disk, Direction::Axis(1), &pot).unwrap();
        assert!(rep.strict);
        // independent recount, column by column
        let cells = pot.cell_integrals(&g).unwrap();
        let n = g.cells_per_side();
        let mut change = 0.0;
        for col in 0..n {
            let idx: Vec<usize> = (0..n).map(|r| g.index([col, r])).collect();
            let old: f64 = idx
                .iter()
                .filter(|&&i| disk.get(i))
                .map(|&i| cells[i])
                .sum();
            let c = idx.iter().filter(|&&i| disk.get(i)).count();
            let s = (n - c) / 2;
            let new: f64 = idx[s..s + c].iter().map(|&i| cells[i]).sum();
            change += new - old;
        }
        assert!(
            (rep.delta - change).abs() < 1e-12,
            "{} vs {change}",
            rep.delta
        );
        let zero = Potential::power(0.0, 2.0).unwrap();
        assert_eq!(
            potential_monotonicity_check(&disk, Direction::Axis(1), &zero)
                .unwrap()
                .delta,
            0.0
        );
    }

    #[test]
    fn symmetric_set_has_zero_delta() {
        let g = grid();
        let e = GridSet::from_region(g, |p| (p[0] / 1.2).hypot(p[1] / 0.6) < 1.0);
        let rep =
            potential_monotonicity_check(&e, Direction::Axis(0), &Potential::quadratic()).unwrap();
        assert_eq!(rep.delta, 0.0);
        assert!(matches!(
            potential_monotonicity_check(&e, Direction::Axis(0), &Potential::Nonexistence),
            Err(Error::NonMonotonePotential)
        ));
    }

    #[test]
    fn rotation_drift_is_small() {
        let g = GridSpec::new(2, 128, 2.0).unwrap();
        let e = GridSet::from_region(g, |p| (p[0] / 1.1).hypot((p[1] - 0.3) / 0.7) < 1.0);
        let out = steiner_symmetrize(&e, Direction::Angle(std::f64::consts::FRAC_PI_4)).unwrap();
        assert!(out.volume_drift.abs() < 0.01, "{}", out.volume_drift);
        assert!(!out.warning);
    }

    #[test]
    fn trajectory_on_ball_is_constant() {
        let b = make_ball(&grid(), &BallSpec::centered(2, 1.0).unwrap()).unwrap();
        let traj = iterate_to_ball(
            &b,
            &[Direction::Axis(0), Direction::Axis(1)],
            &Potential::quadratic(),
        )
        .unwrap();
        assert!(traj.iter().all(|t| t.set == b));
        assert!(traj
            .iter()
            .all(|t| t.sym_diff_to_ball == traj[0].sym_diff_to_ball));
        assert!(traj[0].sym_diff_to_ball <= 0.02 * b.volume());
    }

    #[test]
    fn rejects_bad_direction() {
        let g1 = GridSpec::new(1, 16, 1.0).unwrap();
        let s = GridSet::full(g1);
        assert!(steiner_symmetrize(&s, Direction::Axis(1)).is_err());
        assert!(steiner_symmetrize(&s, Direction::Angle(0.3)).is_err());
    }
}
