//! Scan drivers behind the `nel` subcommands: the stability scan around
//! the ball and the translation scan for the potential without minimizers.

use crate::energy::{
    ball_constant, free_energy, BallConstant, EstimatorChoice, KernelParams, Potential,
};
use crate::error::{Error, Result};
use crate::fit::{fit_loglog, FitResult};
use crate::geometry::{
    asymmetry, lens_area, radius_for_volume, unit_ball_volume, GridSet, GridSpec,
};
use crate::modulus::reach_sym_diff;
use crate::shapes::{Family, ScanSetup};

/// Ratio `â / a` defining the containment flag.
pub const CONTAINMENT_RATIO: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityConfig {
    pub mass: f64,
    pub kernel: KernelParams,
    pub potential: Potential,
    pub families: Vec<Family>,
    pub cells: usize,
    /// Box half-width in units of the ball radius.
    pub box_factor: f64,
    /// Smallest and largest target `|EΔB| / m`.
    pub target_range: (f64, f64),
    pub targets: usize,
}

impl StabilityConfig {
    pub fn new(kernel: KernelParams, potential: Potential) -> Self {
        Self {
            mass: std::f64::consts::PI,
            kernel,
            potential,
            families: Family::ALL.to_vec(),
            cells: 256,
            box_factor: 2.5,
            target_range: (0.02, 1.0),
            targets: 14,
        }
    }

    pub fn target_fractions(&self) -> Vec<f64> {
        let (lo, hi) = self.target_range;
        let n = self.targets.max(2);
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }
}

/// One scan row. Failed generations keep their target with `data = None`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRecord {
    pub family: Family,
    pub target: f64,
    pub param: Option<f64>,
    pub data: Option<StabilityData>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityData {
    pub mass: f64,
    /// `|E Δ B_a|`.
    pub sym_diff: f64,
    /// `E(E) - E(B_a)`.
    pub gap: f64,
    pub deficit: f64,
    pub asymmetry: f64,
    /// `|z_E|`, the best ball translation.
    pub translation: f64,
    pub contained: bool,
    /// Shift length recovered from `d` through the lens area (translates only).
    pub lens_shift: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub records: Vec<StabilityRecord>,
    pub ball_energy: f64,
    pub ball_volume: f64,
    /// `log Δ` vs `log d`, all rows of a family.
    pub family_fits: Vec<(Family, Result<FitResult>)>,
    /// Same, restricted to contained rows.
    pub contained_fits: Vec<(Family, Result<FitResult>)>,
    /// `log Δ` vs `log |x|` for translates.
    pub translate_fit: Option<Result<FitResult>>,
    pub verdicts: StabilityVerdicts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdicts {
    /// `min Δ/d⁴` over all rows.
    pub r_hat: f64,
    pub fourth_power_ok: bool,
    /// Largest contained-fit slope among families with enough rows.
    pub contained_max_slope: Option<f64>,
    pub contained_ok: bool,
    pub translate_slope: Option<f64>,
    pub translate_intercept_error: Option<f64>,
    /// Only decided for the quadratic potential.
    pub translate_ok: Option<bool>,
}

/// Inverts `d = 2(|B_a| - lens(a, s))` for the shift length `s`.
pub fn lens_shift(a: f64, d: f64) -> Option<f64> {
    let full = std::f64::consts::PI * a * a;
    if !(d > 0.0) || d >= 2.0 * full {
        return None;
    }
    let f = |s: f64| 2.0 * (full - lens_area(a, s)) - d;
    let (mut lo, mut hi) = (0.0, 2.0 * a);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

pub fn stability_scan(cfg: &StabilityConfig) -> Result<StabilityReport> {
    let k = cfg.kernel;
    if k.dim() != 2 {
        return Err(Error::UnsupportedDimension(k.dim()));
    }
    let c = ball_constant(2, k.alpha(), 1e-10)?;
    let setup = ScanSetup::for_mass(cfg.mass, cfg.cells, cfg.box_factor)?;
    let ball_volume = setup.mass();
    let a_eff = radius_for_volume(2, ball_volume);
    let ball_energy = free_energy(&setup.ball, k, &cfg.potential, EstimatorChoice::Grid)?.total;
    let count = setup.count();

    let mut records = Vec::new();
    for &family in &cfg.families {
        let mut seen: Vec<GridSet> = Vec::new();
        for t in cfg.target_fractions() {
            let target = (t * count as f64).ceil() as usize;
            let Some((param, set)) = reach_sym_diff(family, &setup, target)? else {
                records.push(StabilityRecord {
                    family,
                    target: t,
                    param: None,
                    data: None,
                });
                continue;
            };
            // coarse targets can land on the same translate
            if seen.contains(&set) {
                continue;
            }
            let data = stability_data(
                &setup,
                &set,
                family,
                k,
                &cfg.potential,
                &c,
                ball_energy,
                a_eff,
            )?;
            seen.push(set);
            records.push(StabilityRecord {
                family,
                target: t,
                param: Some(param),
                data: Some(data),
            });
        }
    }

    let rows = |f: Family, contained_only: bool| -> (Vec<f64>, Vec<f64>) {
        records
            .iter()
            .filter(|r| r.family == f)
            .filter_map(|r| r.data.as_ref())
            .filter(|d| !contained_only || d.contained)
            .map(|d| (d.sym_diff, d.gap))
            .unzip()
    };
    let family_fits: Vec<_> = cfg
        .families
        .iter()
        .map(|&f| {
            let (x, y) = rows(f, false);
            (f, fit_loglog(f.label(), &x, &y))
        })
        .collect();
    let contained_fits: Vec<_> = cfg
        .families
        .iter()
        .map(|&f| {
            let (x, y) = rows(f, true);
            (f, fit_loglog(&format!("{} contained", f.label()), &x, &y))
        })
        .collect();
    let translate_fit = cfg.families.contains(&Family::Translate).then(|| {
        let (x, y): (Vec<f64>, Vec<f64>) = records
            .iter()
            .filter(|r| r.family == Family::Translate)
            .filter_map(|r| r.data.as_ref())
            .filter_map(|d| d.lens_shift.map(|s| (s, d.gap)))
            .unzip();
        fit_loglog("translate vs shift", &x, &y)
    });

    let data: Vec<&StabilityData> = records.iter().filter_map(|r| r.data.as_ref()).collect();
    let r_hat = data
        .iter()
        .map(|d| d.gap / d.sym_diff.powi(4))
        .fold(f64::INFINITY, f64::min);
    let contained_slopes: Vec<f64> = contained_fits
        .iter()
        .filter_map(|(_, f)| f.as_ref().ok().map(|f| f.slope))
        .collect();
    let contained_max_slope = contained_slopes.iter().copied().reduce(f64::max);
    let tf = translate_fit.as_ref().and_then(|f| f.as_ref().ok());
    let translate_slope = tf.map(|f| f.slope);
    let translate_intercept_error = tf.map(|f| (f.intercept - ball_volume.ln()).abs());
    let quadratic = matches!(cfg.potential, Potential::PowerRadial { coeff, degree } if coeff == 1.0 && degree == 2.0);
    let translate_ok = quadratic.then(|| match (translate_slope, translate_intercept_error) {
        (Some(s), Some(e)) => (1.8..=2.2).contains(&s) && e <= 0.1,
        _ => false,
    });
    let verdicts = StabilityVerdicts {
        r_hat,
        fourth_power_ok: !data.is_empty() && r_hat > 0.0 && r_hat.is_finite(),
        contained_max_slope,
        contained_ok: contained_max_slope.is_some_and(|s| s <= 2.2),
        translate_slope,
        translate_intercept_error,
        translate_ok,
    };
    Ok(StabilityReport {
        records,
        ball_energy,
        ball_volume,
        family_fits,
        contained_fits,
        translate_fit,
        verdicts,
    })
}

#[allow(clippy::too_many_arguments)]
fn stability_data(
    setup: &ScanSetup,
    set: &GridSet,
    family: Family,
    k: KernelParams,
    g: &Potential,
    c: &BallConstant,
    ball_energy: f64,
    a_eff: f64,
) -> Result<StabilityData> {
    let e = free_energy(set, k, g, EstimatorChoice::Grid)?;
    let mass = set.volume();
    let lambda = (unit_ball_volume(2) / mass).sqrt();
    let deficit = lambda.powf(k.scaling_exponent()) * e.perimeter / c.value - 1.0;
    let asym = asymmetry(set, a_eff)?;
    let sym_diff = set.sym_diff_volume(&setup.ball)?;
    Ok(StabilityData {
        mass,
        sym_diff,
        gap: e.total - ball_energy,
        deficit,
        asymmetry: asym.value,
        translation: asym.translation[0].hypot(asym.translation[1]),
        contained: set.max_radius() <= CONTAINMENT_RATIO * setup.radius,
        lens_shift: (family == Family::Translate)
            .then(|| lens_shift(a_eff, sym_diff))
            .flatten(),
    })
}

/// Geometry of the translation scan.
#[derive(Debug, Clone, PartialEq)]
pub struct NonexistenceConfig {
    pub kernel: KernelParams,
    pub cells: usize,
    pub half_width: f64,
    pub radius: f64,
    /// Height of the disk center at `t = 0`.
    pub start: f64,
    pub step: f64,
    pub steps: usize,
}

impl NonexistenceConfig {
    pub fn new(kernel: KernelParams) -> Self {
        Self {
            kernel,
            cells: 128,
            half_width: 3.2,
            radius: 0.5,
            start: -2.5,
            step: 0.5,
            steps: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonexistenceRow {
    pub t: f64,
    pub perimeter: f64,
    pub potential: f64,
    pub total: f64,
    /// `∫ x²/(1+y)` over the shifted set, the branch that governs `y → ∞`.
    pub upper_branch: f64,
    /// `(1 + y_c) · G`, which tends to `∫_E x²` as the set moves up.
    pub scaled_potential: f64,
}

#[derive(Debug, Clone)]
pub struct NonexistenceReport {
    pub rows: Vec<NonexistenceRow>,
    /// `∫_E x²` of the unshifted set, the limit of `scaled_potential`.
    pub second_moment: f64,
    pub strictly_decreasing: bool,
    /// Largest relative deviation of the perimeter from the first row.
    pub perimeter_spread: f64,
}

pub fn nonexistence_scan(cfg: &NonexistenceConfig) -> Result<NonexistenceReport> {
    let grid = GridSpec::new(2, cfg.cells, cfg.half_width)?;
    let h = grid.cell_width();
    let shift = cfg.step / h;
    if (shift - shift.round()).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "step {} is not a whole number of cells (h = {h})",
            cfg.step
        )));
    }
    let shift = shift.round() as isize;
    let disk = GridSet::from_region(grid, |p| p[0].hypot(p[1] - cfg.start) <= cfg.radius);
    let g = Potential::Nonexistence;
    let upper = g_upper(&grid);
    let x2: Vec<f64> = cell_means(&grid, |p| p[0] * p[0]);
    let second_moment: f64 = disk.cells().iter().map(|&i| x2[i]).sum::<f64>() * grid.cell_volume();

    let mut rows = Vec::with_capacity(cfg.steps + 1);
    let mut set = disk;
    for step in 0..=cfg.steps {
        if step > 0 {
            set = set.shift_cells([0, shift])?;
        }
        let t = step as f64 * cfg.step;
        let e = free_energy(&set, cfg.kernel, &g, EstimatorChoice::Grid)?;
        let upper_branch = set.cells().iter().map(|&i| upper[i]).sum::<f64>() * grid.cell_volume();
        rows.push(NonexistenceRow {
            t,
            perimeter: e.perimeter,
            potential: e.potential,
            total: e.total,
            upper_branch,
            scaled_potential: (1.0 + cfg.start + t) * e.potential,
        });
    }
    let strictly_decreasing = rows.windows(2).all(|w| w[1].total < w[0].total);
    let p0 = rows[0].perimeter;
    let perimeter_spread = rows
        .iter()
        .map(|r| (r.perimeter - p0).abs() / p0)
        .fold(0.0, f64::max);
    Ok(NonexistenceReport {
        rows,
        second_moment,
        strictly_decreasing,
        perimeter_spread,
    })
}

fn cell_means(grid: &GridSpec, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let s = grid.subsample_count() as f64;
    (0..grid.total_cells())
        .map(|i| grid.subsamples(i).map(&f).sum::<f64>() / s)
        .collect()
}

fn g_upper(grid: &GridSpec) -> Vec<f64> {
    cell_means(grid, |p| {
        if p[1] > -1.0 {
            p[0] * p[0] / (1.0 + p[1])
        } else {
            f64::NAN
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lens_shift_inverts_lens_area() {
        let a = 1.3;
        for s in [0.01, 0.3, 1.1, 2.0] {
            let d = 2.0 * (std::f64::consts::PI * a * a - lens_area(a, s));
            assert!((lens_shift(a, d).unwrap() - s).abs() < 1e-9);
        }
        assert!(lens_shift(a, 0.0).is_none());
    }

    #[test]
    fn nonexistence_rows_decrease() {
        let k = KernelParams::new(2, 0.5).unwrap();
        let mut cfg = NonexistenceConfig::new(k);
        cfg.cells = 64;
        cfg.steps = 4;
        let rep = nonexistence_scan(&cfg).unwrap();
        assert_eq!(rep.rows.len(), 5);
        assert!(rep.strictly_decreasing);
        assert_eq!(rep.perimeter_spread, 0.0);
        cfg.step = 0.33;
        assert!(nonexistence_scan(&cfg).is_err());
    }
}
