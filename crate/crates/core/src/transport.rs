//! Exact discrete optimal transport between the two halves of `E Δ B_a`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::energy::{potential::sum_over, Potential};
use crate::error::{Error, Result};
use crate::geometry::{make_ball, BallSpec, GridSet};

pub const MAX_POINTS: usize = 512;

/// Equal-weight point cloud in the plane (the second coordinate is 0 in 1-D).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<[f64; 2]>,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() > MAX_POINTS {
            return Err(Error::TooManyPoints(points.len()));
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.points.len() as f64
    }
}

/// Minimum-cost bijection `i ↦ assignment[i]` for the squared distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub assignment: Vec<usize>,
    pub cost: f64,
    /// `cost - Σu - Σv` for the final dual potentials; zero (to rounding)
    /// certifies optimality together with dual feasibility.
    pub duality_gap: f64,
    /// Largest violation of `u_i + v_j <= c_ij` by the final potentials.
    pub dual_violation: f64,
}

#[inline]
fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Shortest augmenting path assignment with dual potentials, `O(N³)`.
pub fn optimal_matching(src: &PointCloud, dst: &PointCloud) -> Result<Matching> {
    let n = src.len();
    if n != dst.len() {
        return Err(Error::CountMismatch {
            src: n,
            dst: dst.len(),
        });
    }
    if n > MAX_POINTS {
        return Err(Error::TooManyPoints(n));
    }
    if n == 0 {
        return Ok(Matching {
            assignment: Vec::new(),
            cost: 0.0,
            duality_gap: 0.0,
            dual_violation: 0.0,
        });
    }
    let cost = |i: usize, j: usize| sq_dist(src.points[i], dst.points[j]);
    // 1-based arrays; column 0 is the virtual root
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    let total: f64 = (0..n).map(|i| cost(i, assignment[i])).sum();
    let dual: f64 = u[1..].iter().sum::<f64>() + v[1..].iter().sum::<f64>();
    let mut violation = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            violation = violation.max(u[i + 1] + v[j + 1] - cost(i, j));
        }
    }
    Ok(Matching {
        assignment,
        cost: total,
        duality_gap: total - dual,
        dual_violation: violation,
    })
}

/// Samples of `E \ B_a` and `B_a \ E` with their measured volumes.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceClouds {
    pub outer: PointCloud,
    pub inner: PointCloud,
    pub outer_volume: f64,
    pub inner_volume: f64,
    pub ball_set: GridSet,
}

fn stratified(region: &GridSet, count: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let grid = region.grid();
    let h = grid.cell_width();
    let cells = region.cells();
    let m = cells.len() as f64;
    (0..count)
        .map(|k| {
            let t = (k as f64 + rng.gen::<f64>()) * m / count as f64;
            let c = grid.center(cells[(t as usize).min(cells.len() - 1)]);
            let dy = if grid.dim() == 2 {
                (rng.gen::<f64>() - 0.5) * h
            } else {
                0.0
            };
            [c[0] + (rng.gen::<f64>() - 0.5) * h, c[1] + dy]
        })
        .collect()
}

/// Equal-count cell-stratified samples of the two difference regions, with
/// `B_a` rasterized on the grid of `set`.
pub fn sample_difference_regions(
    set: &GridSet,
    ball: &BallSpec,
    count: usize,
    seed: u64,
) -> Result<DifferenceClouds> {
    if count > MAX_POINTS {
        return Err(Error::TooManyPoints(count));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let ball_set = make_ball(set.grid(), ball)?;
    let (ve, vb) = (set.volume(), ball.volume());
    if (ve - vb).abs() > 0.02 * vb {
        return Err(Error::VolumeMismatch {
            expected: vb,
            found: ve,
        });
    }
    let outer = set.difference(&ball_set)?;
    let inner = ball_set.difference(set)?;
    if outer.is_empty() || inner.is_empty() {
        return Err(Error::DegenerateRegions {
            outer: outer.volume(),
            inner: inner.volume(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let out_pts = stratified(&outer, count, &mut rng);
    rng.set_stream(1);
    let in_pts = stratified(&inner, count, &mut rng);
    Ok(DifferenceClouds {
        outer: PointCloud::new(out_pts)?,
        inner: PointCloud::new(in_pts)?,
        outer_volume: outer.volume(),
        inner_volume: inner.volume(),
        ball_set,
    })
}

fn radial_profile(g: &Potential) -> Result<impl Fn(f64) -> f64 + '_> {
    if !g.is_radial_nondecreasing() {
        return Err(Error::NonMonotonePotential);
    }
    Ok(move |r: f64| g.profile(r).expect("radial potential"))
}

#[inline]
fn norm(p: [f64; 2]) -> f64 {
    p[0].hypot(p[1])
}

/// Matched and unmatched target averages of `h(|y|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushforwardReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// `(1/N) Σ_i h(|y_σ(i)|)` against `(1/N) Σ_j h(|y_j|)`. A bijection only
/// reorders the sum, so the residual is pure rounding.
pub fn pushforward_identity_check(
    matching: &Matching,
    dst: &PointCloud,
    g: &Potential,
) -> Result<PushforwardReport> {
    let h = radial_profile(g)?;
    if matching.assignment.len() != dst.len() {
        return Err(Error::CountMismatch {
            src: matching.assignment.len(),
            dst: dst.len(),
        });
    }
    if dst.is_empty() {
        return Ok(PushforwardReport {
            lhs: 0.0,
            rhs: 0.0,
            residual: 0.0,
        });
    }
    let w = dst.weight();
    let lhs = w * matching
        .assignment
        .iter()
        .map(|&j| h(norm(dst.points[j])))
        .sum::<f64>();
    let rhs = w * dst.points.iter().map(|&y| h(norm(y))).sum::<f64>();
    Ok(PushforwardReport {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// Outcome of the three inequalities of the transport argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainReport {
    /// Largest `|T(x_i)|` over matched targets.
    pub max_target_radius: f64,
    /// (a) `|T(x)| <= a + cell diagonal`.
    pub range_ok: bool,
    /// Sampled `∫_E h - ∫_{B_a} h = ∫_{E\B} h - ∫_{B\E} h`.
    pub sampled_excess: f64,
    pub sampled_excess_stderr: f64,
    /// The same difference from grid cell integrals.
    pub grid_excess: f64,
    /// (b) `sampled_excess >= -(3 stderr + tolerance)`.
    pub ball_below_ok: bool,
    /// Sampled `∫_{E\B}[h(|x|) - h(a)]`.
    pub surplus: f64,
    pub surplus_stderr: f64,
    /// (c) `surplus <= grid_excess + 3 stderr + tolerance`.
    pub surplus_ok: bool,
    /// Rasterization allowance used in (b) and (c).
    pub tolerance: f64,
    /// No difference region: all checks hold trivially.
    pub vacuous: bool,
}

impl ChainReport {
    pub fn all_ok(&self) -> bool {
        self.range_ok && self.ball_below_ok && self.surplus_ok
    }

    fn vacuous() -> Self {
        Self {
            max_target_radius: 0.0,
            range_ok: true,
            sampled_excess: 0.0,
            sampled_excess_stderr: 0.0,
            grid_excess: 0.0,
            ball_below_ok: true,
            surplus: 0.0,
            surplus_stderr: 0.0,
            surplus_ok: true,
            tolerance: 0.0,
            vacuous: true,
        }
    }
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn monotone_chain_check(
    set: &GridSet,
    ball: &BallSpec,
    g: &Potential,
    clouds: &DifferenceClouds,
    matching: &Matching,
) -> Result<ChainReport> {
    let h = radial_profile(g)?;
    let a = ball.radius();
    let n = clouds.outer.len();
    if matching.assignment.len() != n || clouds.inner.len() != n {
        return Err(Error::CountMismatch {
            src: n,
            dst: clouds.inner.len(),
        });
    }
    let grid = set.grid();
    let diag = grid.cell_width() * (grid.dim() as f64).sqrt();
    // sampled points may sit in boundary cells of the rasterized ball, up to
    // one cell diagonal outside the true sphere
    let c = ball.center();
    let centre = [c[0], if c.len() > 1 { c[1] } else { 0.0 }];
    let max_target_radius = matching
        .assignment
        .iter()
        .map(|&j| {
            norm([
                clouds.inner.points[j][0] - centre[0],
                clouds.inner.points[j][1] - centre[1],
            ])
        })
        .fold(0.0, f64::max);
    let range_ok = max_target_radius <= a + diag;

    let cells = g.cell_integrals(grid)?;
    let grid_excess = sum_over(set, &cells) - sum_over(&clouds.ball_set, &cells);
    let (vo, vi) = (clouds.outer_volume, clouds.inner_volume);
    let paired: Vec<f64> = (0..n)
        .map(|i| {
            let x = clouds.outer.points[i];
            let y = clouds.inner.points[matching.assignment[i]];
            vo * h(norm(x)) - vi * h(norm(y))
        })
        .collect();
    let (sampled_excess, sampled_excess_stderr) = mean_stderr(&paired);
    let ha = h(a);
    let surplus_terms: Vec<f64> = clouds
        .outer
        .points
        .iter()
        .map(|&x| vo * (h(norm(x)) - ha))
        .collect();
    let (surplus, surplus_stderr) = mean_stderr(&surplus_terms);
    let tolerance = h(a + diag) * (vo - vi).abs() + (h(a + diag) - ha) * vi;
    Ok(ChainReport {
        max_target_radius,
        range_ok,
        sampled_excess,
        sampled_excess_stderr,
        grid_excess,
        ball_below_ok: sampled_excess >= -(3.0 * sampled_excess_stderr + tolerance),
        surplus,
        surplus_stderr,
        surplus_ok: surplus <= grid_excess + 3.0 * surplus_stderr + tolerance,
        tolerance,
        vacuous: false,
    })
}

/// Samples, matches and checks in one go; an empty difference region gives a
/// vacuous pass.
pub fn transport_chain(
    set: &GridSet,
    ball: &BallSpec,
    g: &Potential,
    count: usize,
    seed: u64,
) -> Result<(ChainReport, Option<(DifferenceClouds, Matching)>)> {
    match sample_difference_regions(set, ball, count, seed) {
        Err(Error::DegenerateRegions { .. }) => Ok((ChainReport::vacuous(), None)),
        Err(e) => Err(e),
        Ok(clouds) => {
            let m = optimal_matching(&clouds.outer, &clouds.inner)?;
            let report = monotone_chain_check(set, ball, g, &clouds, &m)?;
            Ok((report, Some((clouds, m))))
        }
    }
}
