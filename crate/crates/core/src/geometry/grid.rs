use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Number of subcell samples per axis used when classifying cells.
pub const SUBSAMPLES_PER_AXIS: usize = 4;

/// Uniform grid on the cube `[-L, L]^n`, `n ∈ {1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    cells: usize,
    half_width: f64,
}

impl GridSpec {
    pub fn new(dim: usize, cells_per_side: usize, half_width: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if cells_per_side < 8 {
            return Err(Error::InvalidGrid(format!(
                "need at least 8 cells per side, got {cells_per_side}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "box half-width must be positive, got {half_width}"
            )));
        }
        Ok(Self {
            dim,
            cells: cells_per_side,
            half_width,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_side(&self) -> usize {
        self.cells
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cell_width(&self) -> f64 {
        2.0 * self.half_width / self.cells as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_width().powi(self.dim as i32)
    }

    pub fn total_cells(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn box_volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Same cell count, box scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.dim, self.cells, self.half_width * factor)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 2] {
        if self.dim == 1 {
            [index, 0]
        } else {
            [index % self.cells, index / self.cells]
        }
    }

    #[inline]
    pub fn index(&self, coords: [usize; 2]) -> usize {
        if self.dim == 1 {
            coords[0]
        } else {
            coords[1] * self.cells + coords[0]
        }
    }

    /// Index of the cell reached from `coords` by an integer offset, if it
    /// stays on the grid.
    #[inline]
    pub fn offset_index(&self, coords: [usize; 2], offset: [isize; 2]) -> Option<usize> {
        let n = self.cells as isize;
        let x = coords[0] as isize + offset[0];
        if x < 0 || x >= n {
            return None;
        }
        if self.dim == 1 {
            return Some(x as usize);
        }
        let y = coords[1] as isize + offset[1];
        if y < 0 || y >= n {
            return None;
        }
        Some(y as usize * self.cells + x as usize)
    }

    #[inline]
    pub fn axis_center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.cell_width()
    }

    /// Center of a cell; the second coordinate is 0 in one dimension.
    #[inline]
    pub fn center(&self, index: usize) -> [f64; 2] {
        let [i, j] = self.coords(index);
        if self.dim == 1 {
            [self.axis_center(i), 0.0]
        } else {
            [self.axis_center(i), self.axis_center(j)]
        }
    }

    /// Cell containing `p`, or `None` outside the box.
    #[inline]
    pub fn locate(&self, p: [f64; 2]) -> Option<usize> {
        let h = self.cell_width();
        let fx = ((p[0] + self.half_width) / h).floor();
        if !(fx >= 0.0 && fx < self.cells as f64) {
            return None;
        }
        if self.dim == 1 {
            return Some(fx as usize);
        }
        let fy = ((p[1] + self.half_width) / h).floor();
        if !(fy >= 0.0 && fy < self.cells as f64) {
            return None;
        }
        Some(fy as usize * self.cells + fx as usize)
    }

    /// Subcell sample points of a cell (midpoints of a `4^n` subdivision).
    pub fn subsamples(&self, index: usize) -> impl Iterator<Item = [f64; 2]> + '_ {
        let c = self.center(index);
        let h = self.cell_width();
        let s = SUBSAMPLES_PER_AXIS;
        let ny = if self.dim == 1 { 1 } else { s };
        (0..ny).flat_map(move |b| {
            (0..s).map(move |a| {
                let dx = ((a as f64 + 0.5) / s as f64 - 0.5) * h;
                let dy = if self.dim == 1 {
                    0.0
                } else {
                    ((b as f64 + 0.5) / s as f64 - 0.5) * h
                };
                [c[0] + dx, c[1] + dy]
            })
        })
    }

    pub fn subsample_count(&self) -> usize {
        SUBSAMPLES_PER_AXIS.pow(self.dim as u32)
    }
}

/// Indicator of a set on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridSet {
    grid: GridSpec,
    mask: Vec<bool>,
}

impl GridSet {
    pub fn new(grid: GridSpec, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.total_cells() {
            return Err(Error::InvalidGrid(format!(
                "mask has {} cells, grid has {}",
                mask.len(),
                grid.total_cells()
            )));
        }
        Ok(Self { grid, mask })
    }

    pub fn empty(grid: GridSpec) -> Self {
        Self {
            grid,
            mask: vec![false; grid.total_cells()],
        }
    }

    pub fn full(grid: GridSpec) -> Self {
        Self {
            grid,
            mask: vec![true; grid.total_cells()],
        }
    }

    /// Cells classified by majority vote over the `4^n` subcell samples;
    /// exact ties fall back to the cell center.
    pub fn from_region<F>(grid: GridSpec, inside: F) -> Self
    where
        F: Fn([f64; 2]) -> bool,
    {
        let total = grid.subsample_count();
        let mask = (0..grid.total_cells())
            .map(|i| {
                let hits = grid.subsamples(i).filter(|&p| inside(p)).count();
                match (2 * hits).cmp(&total) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => inside(grid.center(i)),
                }
            })
            .collect();
        Self { grid, mask }
    }

    /// The `count` cells with the smallest score at their centers; ties go to
    /// the lower cell index. Used to build shapes with an exact cell count.
    pub fn lowest_scores<F>(grid: GridSpec, count: usize, score: F) -> Result<Self>
    where
        F: Fn([f64; 2]) -> f64,
    {
        if count > grid.total_cells() {
            return Err(Error::InvalidArgument(format!(
                "cannot select {count} cells from {}",
                grid.total_cells()
            )));
        }
        let mut scored: Vec<(f64, usize)> = (0..grid.total_cells())
            .map(|i| (score(grid.center(i)), i))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut mask = vec![false; grid.total_cells()];
        for &(_, i) in scored.iter().take(count) {
            mask[i] = true;
        }
        Ok(Self { grid, mask })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        self.mask[index]
    }

    pub fn set(&mut self, index: usize, value: bool) {
        self.mask[index] = value;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    /// Indices of occupied cells, ascending.
    pub fn cells(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    #[inline]
    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.grid.locate(p).is_some_and(|i| self.mask[i])
    }

    /// Occupancy of the neighbor at an integer offset; off-grid counts as empty.
    #[inline]
    pub fn neighbor(&self, index: usize, offset: [isize; 2]) -> bool {
        self.grid
            .offset_index(self.grid.coords(index), offset)
            .is_some_and(|j| self.mask[j])
    }

    pub fn barycenter(&self) -> Option<[f64; 2]> {
        let mut sum = [0.0; 2];
        let mut n = 0usize;
        for i in self.cells() {
            let c = self.grid.center(i);
            sum[0] += c[0];
            sum[1] += c[1];
            n += 1;
        }
        (n > 0).then(|| [sum[0] / n as f64, sum[1] / n as f64])
    }

    /// Inclusive bounding box in cell coordinates.
    pub fn bounding_box(&self) -> Option<([usize; 2], [usize; 2])> {
        let mut lo = [usize::MAX; 2];
        let mut hi = [0usize; 2];
        let mut any = false;
        for i in self.cells() {
            let c = self.grid.coords(i);
            for a in 0..2 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
            any = true;
        }
        any.then_some((lo, hi))
    }

    /// Largest distance from the origin of any point of an occupied cell.
    pub fn max_radius(&self) -> f64 {
        let h = self.grid.cell_width();
        let half_diag = 0.5 * h * (self.grid.dim() as f64).sqrt();
        self.cells()
            .into_iter()
            .map(|i| {
                let c = self.grid.center(i);
                c[0].hypot(c[1]) + half_diag
            })
            .fold(0.0, f64::max)
    }

    pub fn sym_diff_count(&self, other: &GridSet) -> Result<usize> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .mask
            .iter()
            .zip(&other.mask)
            .filter(|(a, b)| a != b)
            .count())
    }

    /// `|A Δ B|`, exact on the common grid.
    pub fn sym_diff_volume(&self, other: &GridSet) -> Result<f64> {
        Ok(self.sym_diff_count(other)? as f64 * self.grid.cell_volume())
    }

    fn zip_with(&self, other: &GridSet, f: impl Fn(bool, bool) -> bool) -> Result<GridSet> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mask = self
            .mask
            .iter()
            .zip(&other.mask)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(GridSet {
            grid: self.grid,
            mask,
        })
    }

    pub fn union(&self, other: &GridSet) -> Result<GridSet> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &GridSet) -> Result<GridSet> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &GridSet) -> Result<GridSet> {
        self.zip_with(other, |a, b| a && !b)
    }

    /// Exact shift by an integer number of cells per axis.
    pub fn shift_cells(&self, offset: [isize; 2]) -> Result<GridSet> {
        let mut out = GridSet::empty(self.grid);
        let mut lost = 0;
        for i in self.cells() {
            match self.grid.offset_index(self.grid.coords(i), offset) {
                Some(j) => out.mask[j] = true,
                None => lost += 1,
            }
        }
        if lost > 0 {
            return Err(Error::OutsideBox { cells: lost });
        }
        Ok(out)
    }

    /// Translate by `v`. Vectors that are integer multiples of the cell width
    /// (to 1e-9 cells) shift the mask exactly; anything else is resampled with
    /// the subcell majority rule.
    pub fn translate(&self, v: [f64; 2]) -> Result<GridSet> {
        let h = self.grid.cell_width();
        let mut cells = [0isize; 2];
        let mut integral = true;
        for a in 0..self.grid.dim() {
            let c = v[a] / h;
            let r = c.round();
            if (c - r).abs() > 1e-9 {
                integral = false;
            }
            cells[a] = r as isize;
        }
        if integral {
            return self.shift_cells(cells);
        }
        let src = self;
        let moved = GridSet::from_region(self.grid, |p| src.contains([p[0] - v[0], p[1] - v[1]]));
        // every occupied source cell must land inside the box
        let h2 = 0.5 * h;
        for i in self.cells() {
            let c = self.grid.center(i);
            for a in 0..self.grid.dim() {
                let t = c[a] + v[a];
                if t - h2 < -self.grid.half_width() - 1e-12
                    || t + h2 > self.grid.half_width() + 1e-12
                {
                    return Err(Error::OutsideBox { cells: 1 });
                }
            }
        }
        Ok(moved)
    }

    /// Dilation about the barycenter so that the volume becomes `m`,
    /// re-rasterized with the subcell majority rule.
    pub fn rescale_to_volume(&self, m: f64) -> Result<GridSet> {
        if !(m > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "target volume must be positive, got {m}"
            )));
        }
        let bary = self.barycenter().ok_or(Error::EmptySet)?;
        let lambda = (m / self.volume()).powf(1.0 / self.grid.dim() as f64);
        // the dilated bounding box must fit in the box
        let (lo, hi) = self.bounding_box().ok_or(Error::EmptySet)?;
        let h = self.grid.cell_width();
        for a in 0..self.grid.dim() {
            let lo_edge = self.grid.axis_center(lo[a]) - 0.5 * h;
            let hi_edge = self.grid.axis_center(hi[a]) + 0.5 * h;
            let new_lo = bary[a] + lambda * (lo_edge - bary[a]);
            let new_hi = bary[a] + lambda * (hi_edge - bary[a]);
            if new_lo < -self.grid.half_width() - 1e-12 || new_hi > self.grid.half_width() + 1e-12 {
                return Err(Error::OutsideBox { cells: 1 });
            }
        }
        let src = self;
        Ok(GridSet::from_region(self.grid, |p| {
            src.contains([
                bary[0] + (p[0] - bary[0]) / lambda,
                bary[1] + (p[1] - bary[1]) / lambda,
            ])
        }))
    }

    /// Portable bitmap: header `ngrid <dim> <cells> <L>` followed by
    /// row-major `0`/`1` rows, lowest row index first.
    pub fn to_bitmap(&self) -> String {
        let n = self.grid.cells_per_side();
        let rows = if self.grid.dim() == 1 { 1 } else { n };
        let mut out = String::with_capacity(self.mask.len() + rows + 64);
        let _ = writeln!(
            out,
            "ngrid {} {} {}",
            self.grid.dim(),
            n,
            self.grid.half_width()
        );
        for r in 0..rows {
            for c in 0..n {
                out.push(if self.mask[r * n + c] { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_bitmap(text: &str) -> Result<GridSet> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "ngrid" {
            return Err(Error::Parse(format!("bad header: {header:?}")));
        }
        let parse_err = |what: &str| Error::Parse(format!("bad {what} in header {header:?}"));
        let dim: usize = parts[1].parse().map_err(|_| parse_err("dim"))?;
        let cells: usize = parts[2].parse().map_err(|_| parse_err("cells"))?;
        let half: f64 = parts[3].parse().map_err(|_| parse_err("L"))?;
        let grid = GridSpec::new(dim, cells, half)?;
        let mut mask = Vec::with_capacity(grid.total_cells());
        for line in lines {
            let line = line.trim();
            if line.len() != cells {
                return Err(Error::Parse(format!(
                    "row has {} characters, expected {cells}",
                    line.len()
                )));
            }
            for ch in line.chars() {
                match ch {
                    '0' => mask.push(false),
                    '1' => mask.push(true),
                    other => return Err(Error::Parse(format!("unexpected character {other:?}"))),
                }
            }
        }
        GridSet::new(grid, mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid2(n: usize) -> GridSpec {
        GridSpec::new(2, n, 2.0).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(3, 16, 1.0).is_err());
        assert!(GridSpec::new(2, 4, 1.0).is_err());
        assert!(GridSpec::new(2, 16, 0.0).is_err());
        let g = grid2(256);
        // power-of-two cell counts make this exact
        assert_eq!(g.cell_volume() * (256f64).powi(2), g.box_volume());
    }

    #[test]
    fn locate_matches_center() {
        let g = grid2(16);
        for i in 0..g.total_cells() {
            assert_eq!(g.locate(g.center(i)), Some(i));
        }
        assert_eq!(g.locate([2.5, 0.0]), None);
    }

    #[test]
    fn sym_diff_basics() {
        let g = grid2(32);
        let a = GridSet::from_region(g, |p| p[0] < -0.5);
        let b = GridSet::from_region(g, |p| p[0] > 0.5);
        assert_eq!(a.sym_diff_volume(&a).unwrap(), 0.0);
        let d = a.sym_diff_volume(&b).unwrap();
        assert!((d - (a.volume() + b.volume())).abs() < 1e-12);
        let other = GridSet::empty(grid2(16));
        assert_eq!(a.sym_diff_volume(&other), Err(Error::GridMismatch));
    }

    #[test]
    fn translate_integer_roundtrip() {
        let g = grid2(64);
        let a = GridSet::from_region(g, |p| p[0].hypot(p[1]) < 1.0);
        let h = g.cell_width();
        assert_eq!(a.translate([0.0, 0.0]).unwrap(), a);
        let moved = a.translate([h, 0.0]).unwrap();
        assert_eq!(moved.count(), a.count());
        assert_eq!(moved.translate([-h, 0.0]).unwrap(), a);
        assert!(matches!(
            a.translate([1.5, 0.0]),
            Err(Error::OutsideBox { .. })
        ));
    }

    #[test]
    fn rescale_square() {
        let g = GridSpec::new(2, 128, 2.0).unwrap();
        let sq = GridSet::from_region(g, |p| p[0].abs() < 0.5 && p[1].abs() < 0.5);
        let big = sq.rescale_to_volume(4.0).unwrap();
        assert!((big.volume() - 4.0).abs() / 4.0 < 0.01);
        let same = sq.rescale_to_volume(sq.volume()).unwrap();
        assert!(same.sym_diff_volume(&sq).unwrap() <= 0.02 * sq.volume());
    }

    #[test]
    fn bitmap_roundtrip_and_errors() {
        let g = grid2(16);
        let a = GridSet::from_region(g, |p| p[0] + p[1] > 0.3);
        assert_eq!(GridSet::from_bitmap(&a.to_bitmap()).unwrap(), a);
        let g1 = GridSpec::new(1, 10, 1.5).unwrap();
        let b = GridSet::from_region(g1, |p| p[0].abs() < 0.7);
        assert_eq!(GridSet::from_bitmap(&b.to_bitmap()).unwrap(), b);
        assert!(GridSet::from_bitmap("ngrid 2 8 1\n0101").is_err());
        assert!(GridSet::from_bitmap("grid 2 8 1\n").is_err());
    }

    fn random_set(seed_bits: Vec<bool>) -> GridSet {
        GridSet::new(grid2(8), seed_bits).unwrap()
    }

    proptest! {
        #[test]
        fn sym_diff_triangle_inequality(
            a in proptest::collection::vec(any::<bool>(), 64),
            b in proptest::collection::vec(any::<bool>(), 64),
            c in proptest::collection::vec(any::<bool>(), 64),
        ) {
            let (a, b, c) = (random_set(a), random_set(b), random_set(c));
            let ab = a.sym_diff_volume(&b).unwrap();
            let bc = b.sym_diff_volume(&c).unwrap();
            let ac = a.sym_diff_volume(&c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert_eq!(ab, b.sym_diff_volume(&a).unwrap());
        }

        #[test]
        fn integer_shifts_preserve_volume_and_distances(
            a in proptest::collection::vec(any::<bool>(), 64),
            b in proptest::collection::vec(any::<bool>(), 64),
            dx in -2isize..=2, dy in -2isize..=2,
        ) {
            // pad into a larger grid so shifts never leave the box
            let g = grid2(16);
            let embed = |bits: &[bool]| {
                let mut s = GridSet::empty(g);
                for (k, &bit) in bits.iter().enumerate() {
                    s.set(g.index([4 + k % 8, 4 + k / 8]), bit);
                }
                s
            };
            let (a, b) = (embed(&a), embed(&b));
            let (sa, sb) = (a.shift_cells([dx, dy]).unwrap(), b.shift_cells([dx, dy]).unwrap());
            prop_assert_eq!(sa.count(), a.count());
            prop_assert_eq!(sa.sym_diff_count(&sb).unwrap(), a.sym_diff_count(&b).unwrap());
        }
    }
}
