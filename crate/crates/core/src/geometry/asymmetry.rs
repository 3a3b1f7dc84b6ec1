//! Fraenkel-type asymmetry: distance to the best translate of a ball.

use super::ball::{make_ball, BallSpec};
use super::grid::GridSet;
use crate::error::{Error, Result};

/// Result of the translation search.
#[derive(Debug, Clone, PartialEq)]
pub struct Asymmetry {
    /// `min_x |E Δ (B_a + x)| / |E|` over cell-aligned translations.
    pub value: f64,
    /// Minimizing translation, refined below cell size by a parabolic fit.
    pub translation: [f64; 2],
    /// Best cell-aligned translation, in cells.
    pub shift_cells: [isize; 2],
}

/// Rasterized centered ball as a list of cell offsets from the origin cell
/// lattice, plus the range of admissible integer shifts.
pub(crate) struct BallStencil {
    pub offsets: Vec<[usize; 2]>,
    pub shift_lo: [isize; 2],
    pub shift_hi: [isize; 2],
    pub count: usize,
}

impl BallStencil {
    pub fn new(set: &GridSet, radius: f64) -> Result<Self> {
        let grid = *set.grid();
        let ball = make_ball(&grid, &BallSpec::centered(grid.dim(), radius)?)?;
        let cells = ball.cells();
        let (lo, hi) = ball.bounding_box().ok_or(Error::EmptySet)?;
        let n = grid.cells_per_side() as isize;
        let dims = grid.dim();
        let mut shift_lo = [0isize; 2];
        let mut shift_hi = [0isize; 2];
        for a in 0..dims {
            shift_lo[a] = -(lo[a] as isize);
            shift_hi[a] = n - 1 - hi[a] as isize;
        }
        Ok(Self {
            offsets: cells.iter().map(|&i| grid.coords(i)).collect(),
            shift_lo,
            shift_hi,
            count: cells.len(),
        })
    }

    pub fn admissible(&self, s: [isize; 2]) -> bool {
        (0..2).all(|a| s[a] >= self.shift_lo[a] && s[a] <= self.shift_hi[a])
    }

    /// `|E Δ (B + s)|` in cells.
    pub fn sym_diff(&self, set: &GridSet, s: [isize; 2]) -> usize {
        let grid = set.grid();
        let inter = self
            .offsets
            .iter()
            .filter(|c| {
                let x = (c[0] as isize + s[0]) as usize;
                let y = (c[1] as isize + s[1]) as usize;
                set.get(grid.index([x, y]))
            })
            .count();
        set.count() + self.count - 2 * inter
    }
}

/// Deterministic coarse-to-fine search for the ball translate closest to `set`.
///
/// Coarse pass over all admissible shifts at stride 2, then stride-1 descent,
/// then a 3-point parabolic fit per axis for the reported translation.
pub fn asymmetry(set: &GridSet, radius: f64) -> Result<Asymmetry> {
    let grid = *set.grid();
    let dim = grid.dim();
    let vol = set.volume();
    if vol == 0.0 {
        return Err(Error::EmptySet);
    }
    let ball_vol = BallSpec::centered(dim, radius)?.volume();
    if (vol - ball_vol).abs() > 0.01 * ball_vol {
        return Err(Error::VolumeMismatch {
            expected: ball_vol,
            found: vol,
        });
    }
    let stencil = BallStencil::new(set, radius)?;
    let eval = |s: [isize; 2]| stencil.sym_diff(set, s);

    let y_range = if dim == 1 {
        (0, 0)
    } else {
        (stencil.shift_lo[1], stencil.shift_hi[1])
    };
    let mut best = (usize::MAX, [0isize; 2]);
    let mut y = y_range.0;
    while y <= y_range.1 {
        let mut x = stencil.shift_lo[0];
        while x <= stencil.shift_hi[0] {
            let v = eval([x, y]);
            if v < best.0 {
                best = (v, [x, y]);
            }
            x += 2;
        }
        y += 2;
    }

    let neighbors: Vec<[isize; 2]> = if dim == 1 {
        vec![[-1, 0], [1, 0]]
    } else {
        (-1..=1)
            .flat_map(|dy| (-1..=1).map(move |dx| [dx, dy]))
            .filter(|d| *d != [0, 0])
            .collect()
    };
    loop {
        let mut improved = false;
        for d in &neighbors {
            let s = [best.1[0] + d[0], best.1[1] + d[1]];
            if !stencil.admissible(s) {
                continue;
            }
            let v = eval(s);
            if v < best.0 {
                best = (v, s);
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }

    let h = grid.cell_width();
    let mut translation = [0.0; 2];
    for a in 0..dim {
        let mut e = [0isize; 2];
        e[a] = 1;
        let minus = [best.1[0] - e[0], best.1[1] - e[1]];
        let plus = [best.1[0] + e[0], best.1[1] + e[1]];
        let mut delta = 0.0;
        if stencil.admissible(minus) && stencil.admissible(plus) {
            let fm = eval(minus) as f64;
            let f0 = best.0 as f64;
            let fp = eval(plus) as f64;
            let curv = fm - 2.0 * f0 + fp;
            if curv > 0.0 {
                delta = (0.5 * (fm - fp) / curv).clamp(-0.5, 0.5);
            }
        }
        translation[a] = (best.1[a] as f64 + delta) * h;
    }

    Ok(Asymmetry {
        value: best.0 as f64 * grid.cell_volume() / vol,
        translation,
        shift_cells: best.1,
    })
}
