//! Empirical stability modulus: smallest energy gap found among family
//! members at a prescribed normalized distance from the ball.
//!
//! Every family is built once on a reference grid with `a = 1`. A mass `m`
//! reuses the same masks on the grid scaled by `a_m`, so the perimeter only
//! needs the scaling law and the potential is integrated per mass.

use crate::energy::{perimeter_grid, potential::sum_over, KernelParams, Potential};
use crate::error::{Error, Result};
use crate::fit::{fit_loglog, FitResult};
use crate::geometry::{GridSet, GridSpec};
use crate::shapes::{Family, ScanSetup};

/// Iterations of the parameter bisection; the parameter range is at most 1.5
/// so this resolves it far below one cell of deformation.
const BISECTION_STEPS: usize = 36;

/// Number of shortest lattice vectors kept per target for the translate family.
const TRANSLATE_CANDIDATES: usize = 8;

/// Smallest family member whose symmetric difference with the ball has at
/// least `target` cells. `None` when the family cannot get that far.
pub fn reach_sym_diff(
    family: Family,
    setup: &ScanSetup,
    target: usize,
) -> Result<Option<(f64, GridSet)>> {
    let d = |s: &GridSet| s.sym_diff_count(&setup.ball);
    let hi_p = family.max_param(setup);
    if let Family::Translate = family {
        let h = setup.grid.cell_width();
        let max_shift = (hi_p / h).floor() as isize;
        for s in 1..=max_shift {
            let set = setup.ball.shift_cells([s, 0])?;
            if d(&set)? >= target {
                return Ok(Some((s as f64 * h, set)));
            }
        }
        return Ok(None);
    }
    let top = family.member(setup, hi_p)?;
    if d(&top)? < target {
        return Ok(None);
    }
    let (mut lo, mut hi, mut best) = (0.0, hi_p, top);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let set = family.member(setup, mid)?;
        if d(&set)? >= target {
            hi = mid;
            best = set;
        } else {
            lo = mid;
        }
    }
    Ok(Some((hi, best)))
}

/// Lattice shifts of the ball sorted by length, with their symmetric
/// difference in cells. Only one representative per symmetry class
/// (`0 ≤ j ≤ i`) is listed.
pub fn lattice_translates(setup: &ScanSetup, max_len: f64) -> Result<Vec<([isize; 2], usize)>> {
    let h = setup.grid.cell_width();
    let smax = (max_len / h).floor() as isize;
    let mut out = Vec::new();
    for i in 1..=smax {
        for j in 0..=i {
            if ((i * i + j * j) as f64).sqrt() * h > max_len {
                continue;
            }
            let set = setup.ball.shift_cells([i, j])?;
            out.push(([i, j], set.sym_diff_count(&setup.ball)?));
        }
    }
    out.sort_by_key(|(v, _)| (v[0] * v[0] + v[1] * v[1], v[0]));
    Ok(out)
}

/// Box, resolution and targets of a modulus run.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusConfig {
    pub cells: usize,
    /// Box half-width in units of the ball radius.
    pub box_factor: f64,
    pub epsilons: Vec<f64>,
    pub families: Vec<Family>,
}

impl Default for ModulusConfig {
    fn default() -> Self {
        let epsilons = (0..8).map(|i| 0.05 * 8f64.powf(i as f64 / 7.0)).collect();
        Self {
            cells: 256,
            box_factor: 2.5,
            epsilons,
            families: vec![
                Family::Translate,
                Family::Ellipse,
                Family::Bump1,
                Family::Bump2,
            ],
        }
    }
}

/// Gap of one family at one `(m, ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyGap {
    pub family: Family,
    /// `None` if the family never reaches `ε`.
    pub gap: Option<f64>,
    /// Normalized symmetric difference actually reached.
    pub reached: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusRow {
    pub mass: f64,
    pub epsilon: f64,
    /// Minimum over families, an upper bound for the modulus.
    pub estimate: Option<f64>,
    pub argmin: Option<Family>,
    pub families: Vec<FamilyGap>,
}

/// Precomputed members on the reference grid.
struct Member {
    /// Candidate masks with their reference perimeter excess over the ball.
    /// Translates carry an excess of exactly zero.
    candidates: Vec<(GridSet, f64)>,
    reached: f64,
}

/// `ŵ_m(ε)` for every mass and every `ε` of the config.
pub fn modulus_scan(
    masses: &[f64],
    k: KernelParams,
    g: &Potential,
    cfg: &ModulusConfig,
) -> Result<Vec<ModulusRow>> {
    if k.dim() != 2 {
        return Err(Error::UnsupportedDimension(k.dim()));
    }
    if !g.is_radial_nondecreasing() {
        return Err(Error::NonMonotonePotential);
    }
    if masses.iter().any(|m| !(*m > 0.0)) || cfg.epsilons.iter().any(|e| !(*e > 0.0 && *e <= 2.0)) {
        return Err(Error::InvalidArgument(
            "masses must be positive and ε in (0, 2]".into(),
        ));
    }
    let reference = ScanSetup::new(GridSpec::new(2, cfg.cells, cfg.box_factor)?, 1.0)?;
    let count = reference.count();
    let ball_perimeter = perimeter_grid(&reference.ball, k)?.value;
    let translates = if cfg.families.contains(&Family::Translate) {
        lattice_translates(&reference, Family::Translate.max_param(&reference))?
    } else {
        Vec::new()
    };

    // members[f][e]
    let mut members: Vec<Vec<Option<Member>>> = Vec::new();
    for &family in &cfg.families {
        let mut row = Vec::new();
        for &eps in &cfg.epsilons {
            let target = (eps * count as f64).ceil() as usize;
            let member = if family == Family::Translate {
                let hits: Vec<_> = translates
                    .iter()
                    .filter(|(_, d)| *d >= target)
                    .take(TRANSLATE_CANDIDATES)
                    .collect();
                if hits.is_empty() {
                    None
                } else {
                    let reached = hits[0].1 as f64 / count as f64;
                    let candidates = hits
                        .iter()
                        .map(|(v, _)| Ok((reference.ball.shift_cells(*v)?, 0.0)))
                        .collect::<Result<Vec<_>>>()?;
                    Some(Member {
                        candidates,
                        reached,
                    })
                }
            } else {
                match reach_sym_diff(family, &reference, target)? {
                    None => None,
                    Some((_, set)) => {
                        let excess = perimeter_grid(&set, k)?.value - ball_perimeter;
                        let reached = set.sym_diff_count(&reference.ball)? as f64 / count as f64;
                        Some(Member {
                            candidates: vec![(set, excess)],
                            reached,
                        })
                    }
                }
            };
            row.push(member);
        }
        members.push(row);
    }

    let mut rows = Vec::new();
    for &m in masses {
        // the reference ball has volume count·h², not exactly π
        let a = (m / (count as f64 * reference.grid.cell_volume())).sqrt();
        let grid = GridSpec::new(2, cfg.cells, cfg.box_factor * a)?;
        let cell_g = g.cell_integrals(&grid)?;
        let perimeter_scale = a.powf(k.scaling_exponent());
        let on_grid = |s: &GridSet| GridSet::new(grid, s.mask().to_vec());
        let ball_g = sum_over(&on_grid(&reference.ball)?, &cell_g);
        for (e, &eps) in cfg.epsilons.iter().enumerate() {
            let mut fams = Vec::new();
            for (f, &family) in cfg.families.iter().enumerate() {
                let entry = match &members[f][e] {
                    None => FamilyGap {
                        family,
                        gap: None,
                        reached: None,
                    },
                    Some(mem) => {
                        let mut best = f64::INFINITY;
                        for (set, excess) in &mem.candidates {
                            let gap = perimeter_scale * excess + sum_over(&on_grid(set)?, &cell_g)
                                - ball_g;
                            best = best.min(gap);
                        }
                        FamilyGap {
                            family,
                            gap: Some(best),
                            reached: Some(mem.reached),
                        }
                    }
                };
                fams.push(entry);
            }
            let argmin = fams
                .iter()
                .filter_map(|f| f.gap.map(|g| (g, f.family)))
                .min_by(|x, y| x.0.total_cmp(&y.0));
            rows.push(ModulusRow {
                mass: m,
                epsilon: eps,
                estimate: argmin.map(|x| x.0),
                argmin: argmin.map(|x| x.1),
                families: fams,
            });
        }
    }
    Ok(rows)
}

/// Single-mass table.
pub fn modulus_estimate(
    m: f64,
    k: KernelParams,
    g: &Potential,
    cfg: &ModulusConfig,
) -> Result<Vec<ModulusRow>> {
    modulus_scan(&[m], k, g, cfg)
}

/// Exponent fits of a modulus table.
#[derive(Debug, Clone)]
pub struct ModulusFits {
    /// `log ŵ` vs `log ε`, one per mass.
    pub epsilon: Vec<(f64, Result<FitResult>)>,
    /// `log ŵ` vs `log m`, one per `ε`.
    pub mass: Vec<(f64, Result<FitResult>)>,
    /// `log(ŵ / m^{(n-α)/n})` vs `log m`, one per `ε`.
    pub normalized_mass: Vec<(f64, Result<FitResult>)>,
}

pub fn modulus_fits(rows: &[ModulusRow], k: KernelParams) -> ModulusFits {
    let mut masses: Vec<f64> = rows.iter().map(|r| r.mass).collect();
    masses.dedup();
    let mut eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let value = |r: &ModulusRow| r.estimate.unwrap_or(f64::NAN);
    let power = k.scaling_exponent() / k.dim() as f64;
    let epsilon = masses
        .iter()
        .map(|&m| {
            let sel: Vec<_> = rows.iter().filter(|r| r.mass == m).collect();
            let xs: Vec<f64> = sel.iter().map(|r| r.epsilon).collect();
            let ys: Vec<f64> = sel.iter().map(|r| value(r)).collect();
            (m, fit_loglog(&format!("eps m={m:.4}"), &xs, &ys))
        })
        .collect();
    let mut mass = Vec::new();
    let mut normalized_mass = Vec::new();
    for &e in &eps {
        let sel: Vec<_> = rows.iter().filter(|r| r.epsilon == e).collect();
        let xs: Vec<f64> = sel.iter().map(|r| r.mass).collect();
        let ys: Vec<f64> = sel.iter().map(|r| value(r)).collect();
        let zs: Vec<f64> = sel.iter().map(|r| value(r) / r.mass.powf(power)).collect();
        mass.push((e, fit_loglog(&format!("mass eps={e:.4}"), &xs, &ys)));
        normalized_mass.push((e, fit_loglog(&format!("normalized eps={e:.4}"), &xs, &zs)));
    }
    ModulusFits {
        epsilon,
        mass,
        normalized_mass,
    }
}
