//! Volume-constrained minimization: closed-form ball path, critical mass and
//! swap-move descent on grids.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;

use crate::energy::perimeter::fft2;
use crate::energy::{
    ball_energy_closed, potential::sum_over, BallConstant, CellKernel, EnergyBreakdown,
    EstimatorChoice, KernelParams, Potential,
};
use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, GridSet};

/// Critical mass of the ball energy curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalMass {
    /// Closed formula.
    pub value: f64,
    /// Sign change of the finite-difference second derivative.
    pub numeric: f64,
    pub rel_diff: f64,
    pub dim: usize,
    pub alpha: f64,
    pub degree: f64,
    pub potential_integral: f64,
    pub ball_constant: f64,
    pub provenance: String,
}

/// `m_* = |B_1| [α(n-α) / (ν(n+ν)) · P_α(B_1) / ∫_{B_1} g]^{n/(ν+α)}`, checked
/// against the inflection point of the closed-form energy curve.
pub fn critical_mass(k: KernelParams, g: &Potential, c: &BallConstant) -> Result<CriticalMass> {
    let Potential::PowerRadial { degree, .. } = *g else {
        return Err(Error::NotHomogeneous);
    };
    let gi = g.unit_ball_integral(k.dim())?;
    if !(gi > 0.0) {
        return Err(Error::InvalidPotential(
            "potential vanishes on the unit ball".into(),
        ));
    }
    let n = k.dim() as f64;
    let a = k.alpha();
    let bracket = a * (n - a) / (degree * (n + degree)) * c.value / gi;
    let value = unit_ball_volume(k.dim()) * bracket.powf(n / (degree + a));
    let second = |m: f64| -> Result<f64> {
        let eta = 1e-3;
        let f = |x: f64| ball_energy_closed(x, k, g, c).map(|e| e.total);
        Ok((f(m * (1.0 + eta))? - 2.0 * f(m)? + f(m * (1.0 - eta))?) / (eta * m).powi(2))
    };
    let numeric = match inflection(&second, 1e-4, 1e4)? {
        Some(m) => m,
        None => inflection(&second, 1e-8, 1e8)?.ok_or(Error::Unbracketed { lo: 1e-8, hi: 1e8 })?,
    };
    Ok(CriticalMass {
        value,
        numeric,
        rel_diff: (numeric - value).abs() / value,
        dim: k.dim(),
        alpha: a,
        degree,
        potential_integral: gi,
        ball_constant: c.value,
        provenance: c.provenance.clone(),
    })
}

/// First negative-to-positive sign change of `f` on a log grid, refined by
/// bisection in `log m`.
fn inflection(f: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<Option<f64>> {
    let steps = 400;
    let ratio = (hi / lo).powf(1.0 / steps as f64);
    let mut prev_m = lo;
    let mut prev = f(lo)?;
    for i in 1..=steps {
        let m = lo * ratio.powi(i);
        let cur = f(m)?;
        if prev < 0.0 && cur >= 0.0 {
            let (mut a, mut b) = (prev_m.ln(), m.ln());
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if f(mid.exp())? < 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Ok(Some((0.5 * (a + b)).exp()));
        }
        prev_m = m;
        prev = cur;
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    Concave,
    Convex,
    Flat,
}

/// One point of `m ↦ E(B(m))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub mass: f64,
    pub perimeter: f64,
    pub potential: f64,
    pub total: f64,
    /// Divided second difference with the neighbours; `None` at the ends.
    pub second_difference: Option<f64>,
    pub curvature: Option<Curvature>,
}

pub fn energy_curve(
    masses: &[f64],
    k: KernelParams,
    g: &Potential,
    c: &BallConstant,
) -> Result<Vec<CurvePoint>> {
    if masses.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "masses must be strictly increasing".into(),
        ));
    }
    let terms = masses
        .iter()
        .map(|&m| ball_energy_closed(m, k, g, c))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..masses.len())
        .map(|i| {
            let second = (i > 0 && i + 1 < masses.len()).then(|| {
                let (m0, m1, m2) = (masses[i - 1], masses[i], masses[i + 1]);
                let (f0, f1, f2) = (terms[i - 1].total, terms[i].total, terms[i + 1].total);
                2.0 * ((f2 - f1) / (m2 - m1) - (f1 - f0) / (m1 - m0)) / (m2 - m0)
            });
            CurvePoint {
                mass: masses[i],
                perimeter: terms[i].perimeter,
                potential: terms[i].potential,
                total: terms[i].total,
                second_difference: second,
                curvature: second.map(|s| {
                    if s < 0.0 {
                        Curvature::Concave
                    } else if s > 0.0 {
                        Curvature::Convex
                    } else {
                        Curvature::Flat
                    }
                }),
            }
        })
        .collect())
}

/// Number of concave/convex switches along a curve.
pub fn curvature_sign_changes(curve: &[CurvePoint]) -> usize {
    let signs: Vec<Curvature> = curve
        .iter()
        .filter_map(|p| p.curvature)
        .filter(|c| *c != Curvature::Flat)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Settings for [`minimize_grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeConfig {
    pub mass: f64,
    pub kernel: KernelParams,
    pub potential: Potential,
    /// Annealing sweeps before the zero-temperature polish.
    pub max_sweeps: usize,
    pub polish_sweeps: usize,
    pub seed: u64,
    /// Initial temperature; `None` uses 0.1 × the initial energy.
    /// `Some(0.0)` skips annealing.
    pub initial_temperature: Option<f64>,
    pub decay: f64,
    /// Proposals per sweep; `None` uses ten per initial inner boundary cell.
    pub moves_per_sweep: Option<usize>,
    /// Estimator for the reported final energy.
    pub estimator: EstimatorChoice,
}

impl MinimizeConfig {
    pub fn new(mass: f64, kernel: KernelParams, potential: Potential) -> Self {
        Self {
            mass,
            kernel,
            potential,
            max_sweeps: 200,
            polish_sweeps: 100,
            seed: 0,
            initial_temperature: None,
            decay: 0.95,
            moves_per_sweep: None,
            estimator: EstimatorChoice::Grid,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "decay must lie in (0,1), got {}",
                self.decay
            )));
        }
        if let Some(t) = self.initial_temperature {
            if !(t >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "temperature must be >= 0, got {t}"
                )));
            }
        }
        Ok(())
    }
}

/// One row of the energy trace, recorded at the end of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub sweep: usize,
    pub accepted_moves: usize,
    pub temperature: f64,
    pub perimeter: f64,
    pub potential: f64,
    pub total: f64,
    pub barycenter: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub set: GridSet,
    pub trace: Vec<TraceRow>,
    /// Energy of the final set from a fresh evaluation.
    pub energy: EnergyBreakdown,
    pub initial_temperature: f64,
    /// Largest relative gap between incremental and recomputed energies.
    pub max_incremental_error: f64,
    pub spot_checks: usize,
    /// Index of the first zero-temperature sweep in `trace`.
    pub polish_start: usize,
}

/// Index set with O(1) insert, remove and uniform sampling.
#[derive(Debug, Clone)]
struct IndexSet {
    items: Vec<usize>,
    pos: Vec<usize>,
}

impl IndexSet {
    const NONE: usize = usize::MAX;

    fn new(capacity: usize) -> Self {
        Self {
            items: Vec::new(),
            pos: vec![Self::NONE; capacity],
        }
    }

    fn insert(&mut self, i: usize) {
        if self.pos[i] == Self::NONE {
            self.pos[i] = self.items.len();
            self.items.push(i);
        }
    }

    fn remove(&mut self, i: usize) {
        let p = self.pos[i];
        if p != Self::NONE {
            let last = *self.items.last().unwrap();
            self.items.swap_remove(p);
            if last != i {
                self.pos[last] = p;
            }
            self.pos[i] = Self::NONE;
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Option<usize> {
        (!self.items.is_empty()).then(|| self.items[rng.gen_range(0..self.items.len())])
    }

    fn len(&self) -> usize {
        self.items.len()
    }
}

const NEIGHBORS_2D: [[isize; 2]; 4] = [[1, 0], [-1, 0], [0, 1], [0, -1]];
const NEIGHBORS_1D: [[isize; 2]; 2] = [[1, 0], [-1, 0]];

struct SwapState<'a> {
    set: GridSet,
    kern: &'a CellKernel,
    pot: Vec<f64>,
    field: Vec<f64>,
    inner: IndexSet,
    outer: IndexSet,
    scale: f64,
    perimeter: f64,
    potential: f64,
}

impl<'a> SwapState<'a> {
    fn neighbors(&self) -> &'static [[isize; 2]] {
        if self.set.grid().dim() == 1 {
            &NEIGHBORS_1D
        } else {
            &NEIGHBORS_2D
        }
    }

    fn offset(&self, a: usize, b: usize) -> [isize; 2] {
        let g = self.set.grid();
        let (ca, cb) = (g.coords(a), g.coords(b));
        [
            ca[0] as isize - cb[0] as isize,
            ca[1] as isize - cb[1] as isize,
        ]
    }

    fn refresh_boundary(&mut self, i: usize) {
        let g = *self.set.grid();
        let c = g.coords(i);
        let inside = self.set.get(i);
        let mixed = self
            .neighbors()
            .iter()
            .any(|&o| match g.offset_index(c, o) {
                Some(j) => self.set.get(j) != inside,
                // the box edge counts as exterior, but nothing can move there
                None => inside,
            });
        self.inner.remove(i);
        self.outer.remove(i);
        if mixed {
            if inside {
                self.inner.insert(i);
            } else {
                self.outer.insert(i);
            }
        }
    }

    fn delta(&self, p: usize, q: usize) -> (f64, f64) {
        let dp =
            2.0 * self.scale * (self.field[p] - self.field[q] + self.kern.pair(self.offset(p, q)));
        (dp, self.pot[q] - self.pot[p])
    }

    fn apply(&mut self, p: usize, q: usize, dp: f64, dg: f64) {
        let g = *self.set.grid();
        self.set.set(p, false);
        self.set.set(q, true);
        let (cp, cq) = (g.coords(p), g.coords(q));
        for (x, f) in self.field.iter_mut().enumerate() {
            let cx = g.coords(x);
            let kq = [
                cx[0] as isize - cq[0] as isize,
                cx[1] as isize - cq[1] as isize,
            ];
            let kp = [
                cx[0] as isize - cp[0] as isize,
                cx[1] as isize - cp[1] as isize,
            ];
            *f += self.kern.pair(kq) - self.kern.pair(kp);
        }
        self.perimeter += dp;
        self.potential += dg;
        let mut touched = vec![p, q];
        for &c in &[cp, cq] {
            for &o in self.neighbors() {
                if let Some(j) = g.offset_index(c, o) {
                    touched.push(j);
                }
            }
        }
        for i in touched {
            self.refresh_boundary(i);
        }
    }
}

/// `F(x) = Σ_{j∈E} I(x - j)` on the whole grid by FFT convolution.
pub(crate) fn kernel_field(set: &GridSet, kern: &CellKernel) -> Vec<f64> {
    let g = set.grid();
    let n = g.cells_per_side();
    let dim = g.dim();
    let px = 2 * n;
    let py = if dim == 1 { 1 } else { 2 * n };
    let mut a = vec![Complex::new(0.0, 0.0); px * py];
    let mut b = vec![Complex::new(0.0, 0.0); px * py];
    for i in set.cells() {
        let c = g.coords(i);
        a[c[1] * px + c[0]] = Complex::new(1.0, 0.0);
    }
    let ny = if dim == 1 { 0 } else { n as isize - 1 };
    for dy in -ny..=ny {
        for dx in -(n as isize - 1)..=(n as isize - 1) {
            let sx = dx.rem_euclid(px as isize) as usize;
            let sy = dy.rem_euclid(py as isize) as usize;
            b[sy * px + sx] = Complex::new(kern.pair([dx, dy]), 0.0);
        }
    }
    fft2(&mut a, px, py, false);
    fft2(&mut b, px, py, false);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft2(&mut a, px, py, true);
    let s = 1.0 / (px * py) as f64;
    (0..g.total_cells())
        .map(|i| {
            let c = g.coords(i);
            a[c[1] * px + c[0]].re * s
        })
        .collect()
}

fn perimeter_from_field(set: &GridSet, field: &[f64], kern: &CellKernel, scale: f64) -> f64 {
    scale * (set.count() as f64 * kern.self_term() - sum_over(set, field))
}

/// Swap-move descent with annealing. Each proposal exchanges a random inner
/// boundary cell with a random outer boundary cell, so the cell count never
/// changes. Energy differences cost O(1) from the kernel field `F`, which is
/// updated in O(cells) per accepted move and recomputed from scratch every
/// 100 accepted moves as a consistency check.
pub fn minimize_grid(cfg: &MinimizeConfig, init: &GridSet) -> Result<MinimizeResult> {
    cfg.validate()?;
    let grid = *init.grid();
    if grid.dim() != cfg.kernel.dim() {
        return Err(Error::InvalidArgument(
            "kernel and grid dimensions differ".into(),
        ));
    }
    if (init.volume() - cfg.mass).abs() > 0.01 * cfg.mass {
        return Err(Error::VolumeMismatch {
            expected: cfg.mass,
            found: init.volume(),
        });
    }
    let kern = CellKernel::shared(cfg.kernel, grid.cells_per_side() - 1)?;
    let pot = cfg.potential.cell_integrals(&grid)?;
    let field = kernel_field(init, &kern);
    let scale = grid.cell_width().powf(cfg.kernel.scaling_exponent());
    let mut st = SwapState {
        set: init.clone(),
        kern: &kern,
        perimeter: perimeter_from_field(init, &field, &kern, scale),
        potential: sum_over(init, &pot),
        pot,
        field,
        inner: IndexSet::new(grid.total_cells()),
        outer: IndexSet::new(grid.total_cells()),
        scale,
    };
    for i in 0..grid.total_cells() {
        st.refresh_boundary(i);
    }
    let moves = cfg.moves_per_sweep.unwrap_or(10 * st.inner.len()).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let t0 = cfg
        .initial_temperature
        .unwrap_or(0.1 * (st.perimeter + st.potential).abs());

    let mut trace = Vec::new();
    let mut accepted_total = 0usize;
    let mut max_err = 0.0f64;
    let mut checks = 0usize;
    let mut temperature = t0;
    let anneal_sweeps = if t0 > 0.0 { cfg.max_sweeps } else { 0 };
    let mut polish_start = None;
    let mut sweep = 0usize;
    loop {
        let polishing = sweep >= anneal_sweeps;
        if polishing && polish_start.is_none() {
            polish_start = Some(trace.len());
        }
        if sweep >= anneal_sweeps + cfg.polish_sweeps {
            break;
        }
        let t = if polishing { 0.0 } else { temperature };
        let mut accepted = 0usize;
        for _ in 0..moves {
            let (Some(p), Some(q)) = (st.inner.sample(&mut rng), st.outer.sample(&mut rng)) else {
                break;
            };
            let (dp, dg) = st.delta(p, q);
            let de = dp + dg;
            let take = if de < 0.0 {
                true
            } else if t > 0.0 {
                rng.gen::<f64>() < (-de / t).exp()
            } else {
                false
            };
            if take {
                st.apply(p, q, dp, dg);
                accepted += 1;
                accepted_total += 1;
                if accepted_total.is_multiple_of(100) {
                    let fresh = kernel_field(&st.set, &kern);
                    let p_fresh = perimeter_from_field(&st.set, &fresh, &kern, scale);
                    let g_fresh = sum_over(&st.set, &st.pot);
                    let err = ((st.perimeter + st.potential) - (p_fresh + g_fresh)).abs()
                        / (p_fresh + g_fresh).abs();
                    max_err = max_err.max(err);
                    checks += 1;
                    st.field = fresh;
                    st.perimeter = p_fresh;
                    st.potential = g_fresh;
                }
            }
        }
        trace.push(TraceRow {
            sweep,
            accepted_moves: accepted,
            temperature: t,
            perimeter: st.perimeter,
            potential: st.potential,
            total: st.perimeter + st.potential,
            barycenter: st.set.barycenter().unwrap_or([0.0; 2]),
        });
        if !polishing {
            temperature *= cfg.decay;
        } else if accepted == 0 {
            break;
        }
        sweep += 1;
    }
    let energy = crate::energy::free_energy(&st.set, cfg.kernel, &cfg.potential, cfg.estimator)?;
    Ok(MinimizeResult {
        set: st.set,
        trace,
        energy,
        initial_temperature: t0,
        max_incremental_error: max_err,
        spot_checks: checks,
        polish_start: polish_start.unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{ball_constant, perimeter_grid};
    use crate::geometry::{make_ball, BallSpec, GridSpec};
    use approx::assert_relative_eq;

    fn setup() -> (KernelParams, BallConstant) {
        (
            KernelParams::new(2, 0.5).unwrap(),
            ball_constant(2, 0.5, 1e-10).unwrap(),
        )
    }

    #[test]
    fn critical_mass_formula_matches_inflection() {
        let (k, c) = setup();
        let cm = critical_mass(k, &Potential::quadratic(), &c).unwrap();
        assert!(cm.rel_diff < 1e-3, "{cm:?}");
        // doubling g scales m_* by 2^{-n/(ν+α)}
        let cm2 = critical_mass(k, &Potential::power(2.0, 2.0).unwrap(), &c).unwrap();
        assert_relative_eq!(
            cm2.value / cm.value,
            2f64.powf(-2.0 / 2.5),
            max_relative = 1e-12
        );
        assert!(critical_mass(k, &Potential::Nonexistence, &c).is_err());
    }

    #[test]
    fn curve_changes_curvature_once() {
        let (k, c) = setup();
        let g = Potential::quadratic();
        let cm = critical_mass(k, &g, &c).unwrap();
        let masses: Vec<f64> = (0..=40)
            .map(|i| cm.value * 10f64.powf(-1.0 + i as f64 / 20.0))
            .collect();
        let curve = energy_curve(&masses, k, &g, &c).unwrap();
        assert_eq!(curvature_sign_changes(&curve), 1);
        for p in &curve {
            match p.curvature {
                Some(Curvature::Concave) => assert!(p.mass < 1.1 * cm.value),
                Some(Curvature::Convex) => assert!(p.mass > 0.9 * cm.value),
                _ => {}
            }
        }
    }

    #[test]
    fn kernel_field_matches_direct_sum() {
        let g = GridSpec::new(2, 16, 1.0).unwrap();
        let s = GridSet::from_region(g, |p| p[0] * p[0] + p[1] < 0.3);
        let kern = CellKernel::shared(KernelParams::new(2, 0.4).unwrap(), 15).unwrap();
        let f = kernel_field(&s, &kern);
        for (x, fx) in f.iter().enumerate() {
            let cx = g.coords(x);
            let direct: f64 = s
                .cells()
                .into_iter()
                .map(|j| {
                    let cj = g.coords(j);
                    kern.pair([
                        cx[0] as isize - cj[0] as isize,
                        cx[1] as isize - cj[1] as isize,
                    ])
                })
                .sum();
            assert!((fx - direct).abs() < 1e-10 * direct.max(1.0));
        }
        let scale = g.cell_width().powf(1.6);
        let p = perimeter_from_field(&s, &f, &kern, scale);
        assert_relative_eq!(
            p,
            perimeter_grid(&s, kern.params()).unwrap().value,
            max_relative = 1e-11
        );
    }

    #[test]
    fn swap_delta_matches_recomputation() {
        let g = GridSpec::new(2, 24, 1.0).unwrap();
        let k = KernelParams::new(2, 0.5).unwrap();
        let s = GridSet::from_region(g, |p| (p[0] - 0.1).hypot(p[1]) < 0.5);
        let kern = CellKernel::shared(k, 23).unwrap();
        let pot = Potential::quadratic().cell_integrals(&g).unwrap();
        let field = kernel_field(&s, &kern);
        let scale = g.cell_width().powf(1.5);
        let mut st = SwapState {
            set: s.clone(),
            kern: &kern,
            perimeter: perimeter_from_field(&s, &field, &kern, scale),
            potential: sum_over(&s, &pot),
            pot,
            field,
            inner: IndexSet::new(g.total_cells()),
            outer: IndexSet::new(g.total_cells()),
            scale,
        };
        for i in 0..g.total_cells() {
            st.refresh_boundary(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..30 {
            let p = st.inner.sample(&mut rng).unwrap();
            let q = st.outer.sample(&mut rng).unwrap();
            let (dp, dg) = st.delta(p, q);
            let before = perimeter_grid(&st.set, k).unwrap().value;
            st.apply(p, q, dp, dg);
            let after = perimeter_grid(&st.set, k).unwrap().value;
            assert!(((after - before) - dp).abs() < 1e-9 * after);
            assert_relative_eq!(st.perimeter, after, max_relative = 1e-10);
            assert_eq!(st.set.count(), s.count());
        }
    }

    #[test]
    fn ball_is_stable_at_zero_temperature() {
        let g = GridSpec::new(2, 64, 1.4).unwrap();
        let k = KernelParams::new(2, 0.5).unwrap();
        let ball = make_ball(&g, &BallSpec::centered(2, 1.0).unwrap()).unwrap();
        let mut cfg = MinimizeConfig::new(ball.volume(), k, Potential::quadratic());
        cfg.initial_temperature = Some(0.0);
        let res = minimize_grid(&cfg, &ball).unwrap();
        let sd = res.set.sym_diff_volume(&ball).unwrap() / ball.volume();
        assert!(sd <= 0.02, "sym diff {sd}");
        assert!(res.trace.windows(2).all(|w| w[1].total <= w[0].total));
        assert_eq!(res.set.count(), ball.count());
    }

    #[test]
    fn rejects_bad_config() {
        let g = GridSpec::new(2, 16, 1.0).unwrap();
        let k = KernelParams::new(2, 0.5).unwrap();
        let s = GridSet::from_region(g, |p| p[0].hypot(p[1]) < 0.5);
        let cfg = MinimizeConfig::new(2.0 * s.volume(), k, Potential::quadratic());
        assert!(matches!(
            minimize_grid(&cfg, &s),
            Err(Error::VolumeMismatch { .. })
        ));
        let mut cfg = MinimizeConfig::new(s.volume(), k, Potential::quadratic());
        cfg.decay = 1.0;
        assert!(minimize_grid(&cfg, &s).is_err());
    }
}
