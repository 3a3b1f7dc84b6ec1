//! Cell-pair integrals of the Riesz kernel `|x - y|^{-n-α}` on the unit lattice.
//!
//! For unit cells `Q` and `Q + k`,
//! `I(k) = ∫_Q ∫_{Q+k} |x-y|^{-n-α} dy dx = ∫ Λ(w - k) |w|^{-n-α} dw`,
//! where `Λ` is the tensor tent function (the covariogram of the unit cube).
//! Neighbouring cells have an integrable singularity at a shared corner; those
//! tent pieces are integrated in polar coordinates with the radial integral in
//! closed form. The self term `P_c = ∫_Q ∫_{Q^c}` is handled the same way.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_4;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;

/// Dimension and fractional order of the kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    dim: usize,
    alpha: f64,
}

impl KernelParams {
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        Ok(Self { dim, alpha })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Kernel exponent `n + α`.
    pub fn exponent(&self) -> f64 {
        self.dim as f64 + self.alpha
    }

    /// Scaling exponent of the perimeter, `n - α`.
    pub fn scaling_exponent(&self) -> f64 {
        self.dim as f64 - self.alpha
    }
}

/// Table of unit-lattice cell-pair integrals, symmetric in the signs and
/// (in 2-D) the order of the offset components.
#[derive(Debug)]
pub struct CellKernel {
    params: KernelParams,
    extent: usize,
    self_term: f64,
    values: Vec<f64>,
    rel_error: f64,
}

type KernelCache = HashMap<(usize, u64), Arc<CellKernel>>;

const THETA_ORDER: usize = 24;

impl CellKernel {
    /// Builds the table for offsets with `|k_i| <= extent`.
    pub fn build(params: KernelParams, extent: usize) -> Result<Self> {
        let extent = extent.max(2);
        let alpha = params.alpha();
        match params.dim() {
            1 => {
                let values: Vec<f64> = (0..=extent)
                    .map(|k| {
                        if k == 0 {
                            0.0
                        } else {
                            pair_1d(alpha, k, order_for(k))
                        }
                    })
                    .collect();
                let rel_error = probe_error(&[1, 2, 3, 5, 9, 17], |k, q| pair_1d(alpha, k, q));
                Ok(Self {
                    params,
                    extent,
                    self_term: 2.0 * (1.0 / (1.0 - alpha) + 1.0 / alpha),
                    values,
                    rel_error,
                })
            }
            2 => {
                let side = extent + 1;
                // upper triangle k1 >= k2, then mirror
                let tri: Vec<(usize, usize)> = (0..side)
                    .flat_map(|k1| (0..=k1).map(move |k2| (k1, k2)))
                    .collect();
                let computed: Vec<f64> = tri
                    .par_iter()
                    .map(|&(k1, k2)| {
                        if k1 == 0 {
                            0.0
                        } else {
                            pair_2d(alpha, [k1 as i64, k2 as i64], order_for(k1))
                        }
                    })
                    .collect();
                let mut values = vec![0.0; side * side];
                for (&(k1, k2), &v) in tri.iter().zip(&computed) {
                    values[k2 * side + k1] = v;
                    values[k1 * side + k2] = v;
                }
                let rel_error = probe_error(&[1, 2, 3, 4, 5, 8, 16, 17, 40], |k, q| {
                    pair_2d(alpha, [k as i64, (k / 2) as i64], q)
                });
                Ok(Self {
                    params,
                    extent,
                    self_term: self_term_2d(alpha),
                    values,
                    rel_error,
                })
            }
            d => Err(Error::UnsupportedDimension(d)),
        }
    }

    /// Shared, cached table covering at least `extent`.
    pub fn shared(params: KernelParams, extent: usize) -> Result<Arc<CellKernel>> {
        static CACHE: OnceLock<Mutex<KernelCache>> = OnceLock::new();
        let key = (params.dim(), params.alpha().to_bits());
        let cache = CACHE.get_or_init(Default::default);
        if let Some(k) = cache.lock().unwrap().get(&key) {
            if k.extent >= extent {
                return Ok(Arc::clone(k));
            }
        }
        let built = Arc::new(Self::build(params, extent)?);
        let mut guard = cache.lock().unwrap();
        match guard.get(&key) {
            Some(existing) if existing.extent >= extent => Ok(Arc::clone(existing)),
            _ => {
                guard.insert(key, Arc::clone(&built));
                Ok(built)
            }
        }
    }

    pub fn params(&self) -> KernelParams {
        self.params
    }

    pub fn extent(&self) -> usize {
        self.extent
    }

    /// `∫_Q ∫_{ℝ^n \ Q} |x-y|^{-n-α}` for the unit cell.
    pub fn self_term(&self) -> f64 {
        self.self_term
    }

    /// Estimated relative quadrature error of the table entries.
    pub fn relative_error(&self) -> f64 {
        self.rel_error
    }

    /// `I(k)`; zero for `k = 0`.
    #[inline]
    pub fn pair(&self, k: [isize; 2]) -> f64 {
        let a = k[0].unsigned_abs();
        let b = k[1].unsigned_abs();
        debug_assert!(a <= self.extent && b <= self.extent);
        if self.params.dim() == 1 {
            self.values[a]
        } else {
            self.values[b * (self.extent + 1) + a]
        }
    }
}

fn order_for(k: usize) -> usize {
    match k {
        0..=4 => 12,
        5..=16 => 7,
        _ => 4,
    }
}

fn probe_error(probes: &[usize], f: impl Fn(usize, usize) -> f64) -> f64 {
    probes
        .iter()
        .map(|&k| {
            let q = order_for(k);
            let lo = f(k, q);
            let hi = f(k, q + 8);
            ((lo - hi) / hi).abs()
        })
        .fold(0.0, f64::max)
        .max(1e-15)
}

/// Linear weight `A + B w` of the tent factor on one side of `k`.
fn tent_pieces(k: i64) -> [(f64, f64, f64, f64); 2] {
    let kf = k as f64;
    [
        (kf - 1.0, kf, 1.0 - kf, 1.0),
        (kf, kf + 1.0, 1.0 + kf, -1.0),
    ]
}

fn pair_1d(alpha: f64, k: usize, order: usize) -> f64 {
    let e = 1.0 + alpha;
    tent_pieces(k as i64)
        .iter()
        .map(|&(x0, x1, a, b)| {
            if x0 == 0.0 {
                // a = 0 here: ∫_0^1 w^{-α} dw
                debug_assert!(a.abs() < 1e-15);
                b / (1.0 - alpha)
            } else {
                gauss_legendre_on(order, x0, x1)
                    .map(|(w, wt)| wt * (a + b * w) * w.abs().powf(-e))
                    .sum::<f64>()
            }
        })
        .sum()
}

fn pair_2d(alpha: f64, k: [i64; 2], order: usize) -> f64 {
    let half_e = 0.5 * (2.0 + alpha);
    let mut total = 0.0;
    for &(x0, x1, ax, bx) in &tent_pieces(k[0]) {
        for &(y0, y1, ay, by) in &tent_pieces(k[1]) {
            let corner_x = x0 == 0.0 || x1 == 0.0;
            let corner_y = y0 == 0.0 || y1 == 0.0;
            total += if corner_x && corner_y {
                // reflect into the positive quadrant
                let (len_x, bx) = if x1 == 0.0 { (-x0, -bx) } else { (x1, bx) };
                let (len_y, by) = if y1 == 0.0 { (-y0, -by) } else { (y1, by) };
                debug_assert!((ax * ay).abs() < 1e-15);
                corner_piece(alpha, len_x, len_y, bx * ay, ax * by, bx * by)
            } else {
                let gy: Vec<(f64, f64)> = gauss_legendre_on(order, y0, y1).collect();
                gauss_legendre_on(order, x0, x1)
                    .map(|(u, wu)| {
                        let fx = ax + bx * u;
                        wu * fx
                            * gy.iter()
                                .map(|&(v, wv)| wv * (ay + by * v) * (u * u + v * v).powf(-half_e))
                                .sum::<f64>()
                    })
                    .sum()
            };
        }
    }
    total
}

/// `∫_{[0,a]×[0,b]} (c1 u + c2 v + c3 u v) |w|^{-2-α} dw` in polar coordinates.
fn corner_piece(alpha: f64, a: f64, b: f64, c1: f64, c2: f64, c3: f64) -> f64 {
    let split = (b / a).atan();
    let radial = |theta: f64, r: f64| {
        let (s, c) = theta.sin_cos();
        (c1 * c + c2 * s) * r.powf(1.0 - alpha) / (1.0 - alpha)
            + c3 * c * s * r.powf(2.0 - alpha) / (2.0 - alpha)
    };
    let lower: f64 = gauss_legendre_on(THETA_ORDER, 0.0, split)
        .map(|(t, w)| w * radial(t, a / t.cos()))
        .sum();
    let upper: f64 = gauss_legendre_on(THETA_ORDER, split, std::f64::consts::FRAC_PI_2)
        .map(|(t, w)| w * radial(t, b / t.sin()))
        .sum();
    lower + upper
}

/// `∫ (1 - Λ(w₁)Λ(w₂)) |w|^{-2-α} dw`, using the eight-fold symmetry.
fn self_term_2d(alpha: f64) -> f64 {
    8.0 * gauss_legendre_on(THETA_ORDER, 0.0, FRAC_PI_4)
        .map(|(t, w)| {
            let (s, c) = t.sin_cos();
            let r = 1.0 / c;
            w * ((c + s) * r.powf(1.0 - alpha) / (1.0 - alpha)
                - c * s * r.powf(2.0 - alpha) / (2.0 - alpha)
                + r.powf(-alpha) / alpha)
        })
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::tanh_sinh;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_bad_alpha() {
        assert_eq!(KernelParams::new(2, 1.0), Err(Error::InvalidAlpha(1.0)));
        assert_eq!(KernelParams::new(2, 0.0), Err(Error::InvalidAlpha(0.0)));
        assert!(KernelParams::new(4, 0.5).is_err());
    }

    #[test]
    fn one_dimensional_pairs_match_closed_form() {
        // I(k) = ∫ Λ(w-k)|w|^{-1-α}; antiderivative of (A + Bw) w^{-1-α}
        let alpha = 0.37;
        let prim = |a: f64, b: f64, w: f64| {
            -a * w.powf(-alpha) / alpha + b * w.powf(1.0 - alpha) / (1.0 - alpha)
        };
        for k in 2..6usize {
            let kf = k as f64;
            let exact = (prim(1.0 - kf, 1.0, kf) - prim(1.0 - kf, 1.0, kf - 1.0))
                + (prim(1.0 + kf, -1.0, kf + 1.0) - prim(1.0 + kf, -1.0, kf));
            assert_relative_eq!(pair_1d(alpha, k, order_for(k)), exact, max_relative = 1e-10);
        }
        let exact1 = 1.0 / (1.0 - alpha) + (prim(2.0, -1.0, 2.0) - prim(2.0, -1.0, 1.0));
        assert_relative_eq!(pair_1d(alpha, 1, 12), exact1, max_relative = 1e-13);
    }

    #[test]
    fn lattice_sum_recovers_self_term() {
        // Σ_{k≠0} I(k) tiles the complement of the cell. Truncate at |k|∞ <= M
        // and add the far field ∫_{|w|∞ > M + 1/2} |w|^{-2-α} dw.
        for &alpha in &[0.3, 0.5, 0.8] {
            let p = KernelParams::new(2, alpha).unwrap();
            let m = 120usize;
            let kern = CellKernel::build(p, m).unwrap();
            let mut sum = 0.0;
            for a in -(m as isize)..=(m as isize) {
                for b in -(m as isize)..=(m as isize) {
                    sum += kern.pair([a, b]);
                }
            }
            let r = m as f64 + 0.5;
            let tail_angle = tanh_sinh(|t, _, _| t.cos().powf(alpha), 0.0, FRAC_PI_4, 1e-14).value;
            let tail = 8.0 / alpha * r.powf(-alpha) * tail_angle;
            assert_relative_eq!(sum + tail, kern.self_term(), max_relative = 2e-5);
        }
    }

    #[test]
    fn one_dimensional_lattice_sum() {
        let alpha = 0.5;
        let p = KernelParams::new(1, alpha).unwrap();
        let m = 4000usize;
        let kern = CellKernel::build(p, m).unwrap();
        let sum: f64 = (1..=m).map(|k| 2.0 * kern.pair([k as isize, 0])).sum();
        let r = m as f64 + 0.5;
        let tail = 2.0 * r.powf(-alpha) / alpha;
        assert_relative_eq!(sum + tail, kern.self_term(), max_relative = 1e-6);
    }

    #[test]
    fn corner_pieces_match_nested_quadrature() {
        // independent route: iterated tanh-sinh over the two tent pieces that
        // touch the singular corner, plus Gauss on the smooth remainder
        let alpha = 0.5;
        let e = 0.5 * (2.0 + alpha);
        let corner = |f: &dyn Fn(f64, f64) -> f64| {
            tanh_sinh(
                |u, _, _| {
                    tanh_sinh(
                        |v, _, _| f(u, v) * (u * u + v * v).powf(-e),
                        0.0,
                        1.0,
                        1e-13,
                    )
                    .value
                },
                0.0,
                1.0,
                1e-12,
            )
            .value
        };
        // k = (1,1): only the [0,1]^2 piece is singular, weight u v
        let sing = corner(&|u, v| u * v);
        let direct = corner_piece(alpha, 1.0, 1.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(sing, direct, max_relative = 1e-9);
        // k = (1,0): two mirrored singular pieces with weight u (1 - v)
        let sing = corner(&|u, v| u * (1.0 - v));
        let direct = corner_piece(alpha, 1.0, 1.0, 1.0, 0.0, -1.0);
        assert_relative_eq!(sing, direct, max_relative = 1e-9);
    }
}
