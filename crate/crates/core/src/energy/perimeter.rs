//! Estimators for the fractional perimeter
//! `P_α(E) = ∫_E ∫_{E^c} |x - y|^{-n-α} dy dx`.
//!
//! The deterministic estimator treats a grid set as a union of cells of width
//! `h` and sums exact cell-pair integrals:
//! `P = h^{n-α} [ N P_c - Σ_{k≠0} C(k) I(k) ]`,
//! where `C(k)` counts occupied pairs at lattice offset `k` and `P_c` is the
//! perimeter of a single unit cell. The complement is all of `ℝ^n`, so no
//! truncation term appears and integer shifts leave `C`, hence `P`, unchanged.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::kernel::{CellKernel, KernelParams};
use crate::error::{Error, Result};
use crate::geometry::{ball_shift_excess, unit_sphere_area, BallSpec, GridSet};
use crate::quadrature::tanh_sinh;

/// Deterministic estimate with a quadrature error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerimeterEstimate {
    pub value: f64,
    pub error: f64,
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
}

/// Sample batch size. Batch boundaries are fixed so that parallel evaluation
/// cannot change a seeded result.
pub const MC_BATCH: u64 = 1 << 16;

pub const MIN_MC_SAMPLES: u64 = 10_000;

/// Pair counts `C(k) = #{i ∈ E : i + k ∈ E}` over the bounding box window.
#[derive(Debug, Clone)]
pub struct Autocorrelation {
    width: [usize; 2],
    counts: Vec<u64>,
}

impl Autocorrelation {
    pub fn of(set: &GridSet) -> Result<Self> {
        let (lo, hi) = set.bounding_box().ok_or(Error::EmptySet)?;
        let dim = set.grid().dim();
        let wx = hi[0] - lo[0] + 1;
        let wy = if dim == 1 { 1 } else { hi[1] - lo[1] + 1 };
        let px = 2 * wx;
        let py = if dim == 1 { 1 } else { 2 * wy };
        let mut data = vec![Complex::new(0.0, 0.0); px * py];
        for i in set.cells() {
            let c = set.grid().coords(i);
            let x = c[0] - lo[0];
            let y = if dim == 1 { 0 } else { c[1] - lo[1] };
            data[y * px + x] = Complex::new(1.0, 0.0);
        }
        fft2(&mut data, px, py, false);
        for v in data.iter_mut() {
            *v = Complex::new(v.norm_sqr(), 0.0);
        }
        fft2(&mut data, px, py, true);
        let scale = 1.0 / (px * py) as f64;
        let cols = 2 * wx - 1;
        let rows = 2 * wy - 1;
        let mut counts = vec![0u64; cols * rows];
        for ky in 0..rows {
            let dy = ky as isize - (wy as isize - 1);
            let sy = dy.rem_euclid(py as isize) as usize;
            for kx in 0..cols {
                let dx = kx as isize - (wx as isize - 1);
                let sx = dx.rem_euclid(px as isize) as usize;
                let v = data[sy * px + sx].re * scale;
                counts[ky * cols + kx] = v.round().max(0.0) as u64;
            }
        }
        Ok(Self {
            width: [wx, wy],
            counts,
        })
    }

    /// Largest `|k_i|` with a possibly nonzero count.
    pub fn extent(&self) -> usize {
        self.width[0].max(self.width[1]) - 1
    }

    pub fn get(&self, k: [isize; 2]) -> u64 {
        let [wx, wy] = self.width;
        let ox = k[0] + wx as isize - 1;
        let oy = k[1] + wy as isize - 1;
        if ox < 0 || oy < 0 || ox >= (2 * wx - 1) as isize || oy >= (2 * wy - 1) as isize {
            return 0;
        }
        self.counts[oy as usize * (2 * wx - 1) + ox as usize]
    }

    /// Nonzero offsets with their counts, in a fixed order.
    pub fn iter(&self) -> impl Iterator<Item = ([isize; 2], u64)> + '_ {
        let [wx, wy] = self.width;
        let cols = 2 * wx - 1;
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(idx, &c)| {
                let kx = (idx % cols) as isize - (wx as isize - 1);
                let ky = (idx / cols) as isize - (wy as isize - 1);
                ([kx, ky], c)
            })
    }
}

pub(crate) fn fft2(data: &mut [Complex<f64>], px: usize, py: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let plan = |n: usize, planner: &mut FftPlanner<f64>| {
        if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        }
    };
    plan(px, &mut planner).process(data);
    if py > 1 {
        let mut t = transpose(data, px, py);
        plan(py, &mut planner).process(&mut t);
        data.copy_from_slice(&transpose(&t, py, px));
    }
}

fn transpose(data: &[Complex<f64>], cols: usize, rows: usize) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::new(0.0, 0.0); data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

fn check_dims(set: &GridSet, k: KernelParams) -> Result<()> {
    if set.grid().dim() != k.dim() {
        return Err(Error::InvalidArgument(format!(
            "kernel dimension {} does not match grid dimension {}",
            k.dim(),
            set.grid().dim()
        )));
    }
    Ok(())
}

/// Fractional perimeter of a grid set by exact cell-pair integration.
pub fn perimeter_grid(set: &GridSet, k: KernelParams) -> Result<PerimeterEstimate> {
    check_dims(set, k)?;
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let corr = Autocorrelation::of(set)?;
    let kern = CellKernel::shared(k, corr.extent())?;
    let n = set.count() as f64;
    let interior: f64 = corr
        .iter()
        .filter(|(off, _)| *off != [0, 0])
        .map(|(off, c)| c as f64 * kern.pair(off))
        .sum();
    let whole = n * kern.self_term();
    let scale = set.grid().cell_width().powf(k.scaling_exponent());
    let value = scale * (whole - interior);
    let error = scale * (kern.relative_error() * (whole + interior) + 1e-14 * whole);
    Ok(PerimeterEstimate { value, error })
}

/// Set accepted by the Monte Carlo estimator.
#[derive(Debug, Clone, Copy)]
pub enum McSet<'a> {
    Grid(&'a GridSet),
    Ball(&'a BallSpec),
}

impl<'a> From<&'a GridSet> for McSet<'a> {
    fn from(s: &'a GridSet) -> Self {
        McSet::Grid(s)
    }
}

impl<'a> From<&'a BallSpec> for McSet<'a> {
    fn from(b: &'a BallSpec) -> Self {
        McSet::Ball(b)
    }
}

/// Importance-sampled fractional perimeter.
///
/// Writing `P = ∫_E ∫_{S^{n-1}} ∫_0^∞ r^{-1-α} 1[x + rθ ∉ E] dr dθ dx`, the radial
/// range is split at `r_min` and `r_max`. The shell `[r_min, r_max]` is
/// sampled with density `∝ r^{-1-α}`. Beyond `r_max` every offset leaves the
/// set, so that piece is exact. Below `r_min` the integrand depends only on
/// the covariogram of `E` near the origin, which is known in closed form for
/// unions of cells and for balls.
pub fn perimeter_mc<'a>(
    set: impl Into<McSet<'a>>,
    k: KernelParams,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_MC_SAMPLES} samples, got {samples}"
        )));
    }
    match set.into() {
        McSet::Grid(g) => mc_grid(g, k, samples, seed),
        McSet::Ball(b) => mc_ball(b, k, samples, seed),
    }
}

struct Shell {
    r_min: f64,
    r_max: f64,
    alpha: f64,
}

impl Shell {
    fn mass(&self) -> f64 {
        (self.r_min.powf(-self.alpha) - self.r_max.powf(-self.alpha)) / self.alpha
    }

    /// Inverse CDF of the truncated `r^{-1-α}` density.
    fn sample(&self, u: f64) -> f64 {
        let a = self.r_min.powf(-self.alpha);
        let b = self.r_max.powf(-self.alpha);
        (a - u * (a - b)).powf(-1.0 / self.alpha)
    }
}

fn direction(rng: &mut ChaCha8Rng, dim: usize) -> [f64; 3] {
    match dim {
        1 => [if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0, 0.0],
        2 => {
            let t = rng.gen::<f64>() * std::f64::consts::TAU;
            [t.cos(), t.sin(), 0.0]
        }
        _ => loop {
            let v = [
                rng.gen::<f64>() * 2.0 - 1.0,
                rng.gen::<f64>() * 2.0 - 1.0,
                rng.gen::<f64>() * 2.0 - 1.0,
            ];
            let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            if n2 > 1e-12 && n2 <= 1.0 {
                let s = n2.sqrt();
                break [v[0] / s, v[1] / s, v[2] / s];
            }
        },
    }
}

/// Runs `samples` Bernoulli trials in fixed batches; returns the hit count.
fn count_hits<F>(samples: u64, seed: u64, trial: F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    let batches = samples.div_ceil(MC_BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let n = MC_BATCH.min(samples - b * MC_BATCH);
            (0..n).filter(|_| trial(&mut rng)).count() as u64
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

fn shell_estimate(weight: f64, hits: u64, samples: u64) -> (f64, f64) {
    let p = hits as f64 / samples as f64;
    (weight * p, weight * (p * (1.0 - p) / samples as f64).sqrt())
}

fn mc_grid(set: &GridSet, k: KernelParams, samples: u64, seed: u64) -> Result<McEstimate> {
    check_dims(set, k)?;
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let grid = set.grid();
    let dim = grid.dim();
    let h = grid.cell_width();
    let alpha = k.alpha();
    let shell = Shell {
        r_min: 0.5 * h,
        r_max: 2.0 * (dim as f64).sqrt() * grid.half_width(),
        alpha,
    };
    let volume = set.volume();
    let sphere = unit_sphere_area(dim);
    let cells = set.cells();
    let hits = count_hits(samples, seed, |rng| {
        let c = grid.center(cells[rng.gen_range(0..cells.len())]);
        let mut x = [c[0] + (rng.gen::<f64>() - 0.5) * h, c[1]];
        if dim == 2 {
            x[1] += (rng.gen::<f64>() - 0.5) * h;
        }
        let r = shell.sample(rng.gen::<f64>());
        let th = direction(rng, dim);
        !set.contains([x[0] + r * th[0], x[1] + r * th[1]])
    });
    let (mid, stderr) = shell_estimate(volume * sphere * shell.mass(), hits, samples);
    let outer = volume * sphere * shell.r_max.powf(-alpha) / alpha;
    let inner = grid_inner(set, alpha, shell.r_min);
    Ok(McEstimate {
        value: inner + mid + outer,
        stderr,
        samples,
    })
}

/// Exact contribution of offsets `|w| < ρ <= h/2` for a union of cells.
fn grid_inner(set: &GridSet, alpha: f64, rho: f64) -> f64 {
    let h = set.grid().cell_width();
    let missing = |off: [isize; 2]| {
        set.cells()
            .into_iter()
            .filter(|&i| !set.neighbor(i, off))
            .count() as f64
    };
    let lin = rho.powf(1.0 - alpha) / (1.0 - alpha);
    if set.grid().dim() == 1 {
        return 2.0 * missing([1, 0]) * lin;
    }
    let ax = missing([-1, 0]);
    let ay = missing([0, -1]);
    let dpp = missing([-1, -1]);
    let dpm = missing([-1, 1]);
    4.0 * h * (ax + ay) * lin
        + (2.0 * dpp + 2.0 * dpm - 4.0 * ax - 4.0 * ay) * rho.powf(2.0 - alpha)
            / (2.0 * (2.0 - alpha))
}

fn mc_ball(ball: &BallSpec, k: KernelParams, samples: u64, seed: u64) -> Result<McEstimate> {
    let dim = ball.dim();
    if dim != k.dim() {
        return Err(Error::InvalidArgument(format!(
            "kernel dimension {} does not match ball dimension {dim}",
            k.dim()
        )));
    }
    let a = ball.radius();
    let alpha = k.alpha();
    let shell = Shell {
        r_min: 0.05 * a,
        r_max: 2.0 * a,
        alpha,
    };
    let sphere = unit_sphere_area(dim);
    let volume = ball.volume();
    // offsets are translation invariant, so work about the origin
    let hits = count_hits(samples, seed, |rng| {
        let x = loop {
            let mut p = [0.0; 3];
            for v in p.iter_mut().take(dim) {
                *v = (rng.gen::<f64>() * 2.0 - 1.0) * a;
            }
            if p.iter().map(|v| v * v).sum::<f64>() < a * a {
                break p;
            }
        };
        let r = shell.sample(rng.gen::<f64>());
        let th = direction(rng, dim);
        (0..3).map(|i| (x[i] + r * th[i]).powi(2)).sum::<f64>() >= a * a
    });
    let (mid, stderr) = shell_estimate(volume * sphere * shell.mass(), hits, samples);
    let outer = volume * sphere * shell.r_max.powf(-alpha) / alpha;
    let inner = sphere
        * tanh_sinh(
            |r, _, _| r.powf(-1.0 - alpha) * ball_shift_excess(dim, a, r),
            0.0,
            shell.r_min,
            1e-13,
        )
        .value;
    Ok(McEstimate {
        value: inner + mid + outer,
        stderr,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_ball, GridSpec};
    use approx::assert_relative_eq;

    fn brute_autocorr(set: &GridSet, k: [isize; 2]) -> u64 {
        set.cells()
            .into_iter()
            .filter(|&i| set.neighbor(i, k))
            .count() as u64
    }

    #[test]
    fn autocorrelation_matches_direct_count() {
        let g = GridSpec::new(2, 24, 1.0).unwrap();
        let s = GridSet::from_region(g, |p| {
            (p[0] - 0.2).hypot(p[1]) < 0.6 || p[0] > 0.7 && p[1] < -0.3
        });
        let corr = Autocorrelation::of(&s).unwrap();
        for kx in -25..=25isize {
            for ky in -25..=25isize {
                assert_eq!(
                    corr.get([kx, ky]),
                    brute_autocorr(&s, [kx, ky]),
                    "k = ({kx},{ky})"
                );
            }
        }
        assert_eq!(corr.get([0, 0]), s.count() as u64);
    }

    #[test]
    fn single_cell_is_self_term() {
        let g = GridSpec::new(2, 16, 1.0).unwrap();
        let mut s = GridSet::empty(g);
        s.set(g.index([3, 7]), true);
        let k = KernelParams::new(2, 0.4).unwrap();
        let p = perimeter_grid(&s, k).unwrap();
        let kern = CellKernel::shared(k, 2).unwrap();
        assert_relative_eq!(
            p.value,
            g.cell_width().powf(1.6) * kern.self_term(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn interval_matches_closed_form() {
        // P([0, l]) = 2 l^{1-α} / (α (1-α)) in one dimension
        let alpha = 0.6;
        let g = GridSpec::new(1, 64, 1.0).unwrap();
        let s = GridSet::from_region(g, |p| p[0] > -0.5 && p[0] < 0.25);
        let l = s.volume();
        let k = KernelParams::new(1, alpha).unwrap();
        let p = perimeter_grid(&s, k).unwrap();
        let exact = 2.0 * l.powf(1.0 - alpha) / (alpha * (1.0 - alpha));
        assert_relative_eq!(p.value, exact, max_relative = 1e-9);
        assert!(p.error < 1e-6 * exact);
    }

    #[test]
    fn two_cells_apart_one_dimension() {
        // {0} ∪ {3}: 2 P_c - 2 I(3), with I(3) from the antiderivative
        let alpha = 0.5;
        let g = GridSpec::new(1, 8, 4.0).unwrap(); // h = 1
        let mut s = GridSet::empty(g);
        s.set(1, true);
        s.set(4, true);
        let k = KernelParams::new(1, alpha).unwrap();
        let f = |t: f64| t.powf(1.0 - alpha) / (alpha * (1.0 - alpha));
        // ∫_0^1∫_3^4... = F(2) - 2F(3) + F(4) with F'' = |t|^{-1-α}
        let pair = -(f(2.0) - 2.0 * f(3.0) + f(4.0));
        let pc = 2.0 * (1.0 / (1.0 - alpha) + 1.0 / alpha);
        let p = perimeter_grid(&s, k).unwrap();
        assert_relative_eq!(p.value, 2.0 * pc - 2.0 * pair, max_relative = 1e-10);
    }

    #[test]
    fn translation_is_exact() {
        let g = GridSpec::new(2, 64, 2.0).unwrap();
        let s = GridSet::from_region(g, |p| (p[0] / 1.2).hypot(p[1] / 0.7) < 1.0);
        let k = KernelParams::new(2, 0.5).unwrap();
        let a = perimeter_grid(&s, k).unwrap();
        let b = perimeter_grid(&s.shift_cells([3, -2]).unwrap(), k).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn grid_inner_matches_covariogram_quadrature() {
        // |E \ (E - w)| for a union of cells is bilinear in w on |w_i| < h;
        // integrate it numerically against the kernel on the disk |w| < h/2
        let g = GridSpec::new(2, 8, 1.0).unwrap();
        let s = GridSet::from_region(g, |p| {
            p[0] * p[0] + 2.0 * p[1] * p[1] < 0.4 || (p[0] > 0.6 && p[1] > 0.4)
        });
        let alpha = 0.45;
        let h = g.cell_width();
        let rho = 0.5 * h;
        let excess = |w: [f64; 2]| {
            // exact area of E minus its translate, cell by cell
            let mut total = 0.0;
            for i in s.cells() {
                let c = g.center(i);
                for sx in [-1isize, 0, 1] {
                    for sy in [-1isize, 0, 1] {
                        if (sx, sy) == (0, 0) || s.neighbor(i, [sx, sy]) {
                            continue;
                        }
                        // overlap of Q_i + w with the empty neighbor cell
                        let nx = c[0] + sx as f64 * h;
                        let ny = c[1] + sy as f64 * h;
                        let ox = (h - (c[0] + w[0] - nx).abs()).max(0.0);
                        let oy = (h - (c[1] + w[1] - ny).abs()).max(0.0);
                        total += ox * oy;
                    }
                }
            }
            total
        };
        let value = tanh_sinh(
            |r, _, _| {
                tanh_sinh(
                    |t, _, _| excess([r * t.cos(), r * t.sin()]),
                    0.0,
                    std::f64::consts::TAU,
                    1e-9,
                )
                .value
                    * r.powf(-1.0 - alpha)
            },
            0.0,
            rho,
            1e-8,
        )
        .value;
        assert_relative_eq!(grid_inner(&s, alpha, rho), value, max_relative = 1e-6);
    }

    #[test]
    fn mc_is_deterministic_and_validates() {
        let g = GridSpec::new(2, 32, 1.0).unwrap();
        let s = make_ball(&g, &BallSpec::centered(2, 0.6).unwrap()).unwrap();
        let k = KernelParams::new(2, 0.5).unwrap();
        let a = perimeter_mc(&s, k, 100_000, 7).unwrap();
        let b = perimeter_mc(&s, k, 100_000, 7).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert!(perimeter_mc(&s, k, 100, 7).is_err());
    }

    #[test]
    fn mc_full_box_is_tail_only() {
        // every cell occupied: the complement is the outside of the box only
        let g = GridSpec::new(2, 16, 1.0).unwrap();
        let full = GridSet::full(g);
        let k = KernelParams::new(2, 0.5).unwrap();
        let mc = perimeter_mc(&full, k, 200_000, 1).unwrap();
        let grid = perimeter_grid(&full, k).unwrap();
        assert!(
            (mc.value - grid.value).abs() < 4.0 * mc.stderr + grid.error,
            "{mc:?} {grid:?}"
        );
    }

    #[test]
    fn mc_agrees_with_grid_on_small_shape() {
        let g = GridSpec::new(2, 48, 1.0).unwrap();
        let s = GridSet::from_region(g, |p| (p[0] / 0.7).hypot(p[1] / 0.4) < 1.0);
        let k = KernelParams::new(2, 0.3).unwrap();
        let mc = perimeter_mc(&s, k, 2_000_000, 3).unwrap();
        let grid = perimeter_grid(&s, k).unwrap();
        assert!(
            (mc.value - grid.value).abs() < 4.0 * mc.stderr + grid.error,
            "{mc:?} {grid:?}"
        );
    }

    #[test]
    fn ball_mc_interval_closed_form() {
        let alpha = 0.5;
        let k = KernelParams::new(1, alpha).unwrap();
        let ball = BallSpec::centered(1, 1.0).unwrap();
        let mc = perimeter_mc(&ball, k, 1_000_000, 11).unwrap();
        let exact = 2f64.powf(2.0 - alpha) / (alpha * (1.0 - alpha));
        assert!(
            (mc.value - exact).abs() < 4.0 * mc.stderr,
            "{mc:?} vs {exact}"
        );
    }

    #[test]
    fn ball_mc_matches_quadrature_constant() {
        let k = KernelParams::new(2, 0.5).unwrap();
        let c = crate::energy::ball_constant(2, 0.5, 1e-10).unwrap();
        let mc = perimeter_mc(&BallSpec::centered(2, 1.0).unwrap(), k, 1_000_000, 5).unwrap();
        assert!(
            (mc.value - c.value).abs() < 4.0 * mc.stderr,
            "{mc:?} vs {}",
            c.value
        );
    }
}
