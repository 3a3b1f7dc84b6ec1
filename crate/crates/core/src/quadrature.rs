//! One-dimensional quadrature rules shared by the kernel and ball integrals.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order as f64;
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=order {
                let j = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            dp = n * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(order: usize, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    x.into_iter()
        .zip(w)
        .map(move |(xi, wi)| (mid + half * xi, half * wi))
}

/// Result of an adaptive quadrature: value and the difference between the
/// last two refinement levels.
#[derive(Debug, Clone, Copy)]
pub struct QuadEstimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Double-exponential (tanh–sinh) quadrature on `[a, b]`.
///
/// The integrand receives `(x, x - a, b - x)` so that endpoint singularities
/// can be evaluated without cancellation.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, tol: f64) -> QuadEstimate
where
    F: Fn(f64, f64, f64) -> f64,
{
    let half = 0.5 * (b - a);
    let t_max = 6.5;
    let eval = |t: f64| -> f64 {
        let u = 0.5 * PI * t.sinh();
        let cu = u.cosh();
        let w = 0.5 * PI * t.cosh() / (cu * cu);
        // distance from the nearer endpoint, computed as b-a over (1 + e^{2|u|})
        let e = (2.0 * u.abs()).exp();
        let near = 2.0 * half / (1.0 + e);
        let far = 2.0 * half - near;
        let (dl, dr) = if u < 0.0 { (near, far) } else { (far, near) };
        if dl <= 0.0 || dr <= 0.0 {
            return 0.0;
        }
        let x = if u < 0.0 { a + dl } else { b - dr };
        let fx = f(x, dl, dr);
        if fx.is_finite() {
            half * w * fx
        } else {
            0.0
        }
    };

    let mut step = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * step <= t_max {
        let t = k as f64 * step;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut evaluations = 2 * k - 1;
    let mut value = sum * step;
    let mut error = f64::INFINITY;
    for _level in 0..12 {
        step *= 0.5;
        let mut k = 1;
        while k as f64 * step <= t_max {
            let t = k as f64 * step;
            sum += eval(t) + eval(-t);
            evaluations += 2;
            k += 2;
        }
        let next = sum * step;
        error = (next - value).abs();
        value = next;
        if error <= tol * value.abs().max(1e-300) {
            break;
        }
    }
    QuadEstimate {
        value,
        error,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for order in 1..12 {
            let deg = 2 * order - 1;
            let s: f64 = gauss_legendre_on(order, 0.0, 2.0)
                .map(|(x, w)| w * x.powi(deg as i32))
                .sum();
            let exact = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
            assert_relative_eq!(s, exact, max_relative = 1e-13);
        }
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        // ∫_0^1 x^{-1/2} dx = 2
        let q = tanh_sinh(|x, _, _| x.powf(-0.5), 0.0, 1.0, 1e-13);
        assert_relative_eq!(q.value, 2.0, max_relative = 1e-11);
        // ∫_0^1 (1-x)^{-0.7} dx = 1/0.3, singular at the right end
        let q = tanh_sinh(|_, _, dr| dr.powf(-0.7), 0.0, 1.0, 1e-13);
        assert_relative_eq!(q.value, 1.0 / 0.3, max_relative = 1e-9);
    }
}
