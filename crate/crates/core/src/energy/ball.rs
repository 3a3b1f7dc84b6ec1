//! The perimeter of the unit ball and closed-form ball energies.

use std::fmt::Write as _;
use std::path::Path;

use super::kernel::KernelParams;
use super::potential::Potential;
use crate::error::{Error, Result};
use crate::geometry::{ball_shift_excess, unit_ball_volume, unit_sphere_area};
use crate::quadrature::tanh_sinh;

/// `P_α(B_1)` together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct BallConstant {
    pub dim: usize,
    pub alpha: f64,
    pub value: f64,
    pub stderr: f64,
    /// Integrand evaluations (quadrature) or samples (Monte Carlo).
    pub samples: u64,
    pub seed: u64,
    pub provenance: String,
    /// Set when the requested tolerance was not reached.
    pub warning: bool,
}

/// `P_α(B_1)` for `n ∈ {1, 2, 3}`.
///
/// In one dimension the value is `2^{2-α} / (α (1-α))`. Otherwise the
/// covariogram form `P_α(B_1) = |S^{n-1}| ∫_0^∞ r^{-1-α} |B_1 \ (B_1 + r e)| dr`
/// is integrated with tanh-sinh on `[0, 2]` and in closed form beyond.
pub fn ball_constant(dim: usize, alpha: f64, target_rel_err: f64) -> Result<BallConstant> {
    let k = KernelParams::new(dim, alpha)?;
    if !(target_rel_err > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target relative error must be positive, got {target_rel_err}"
        )));
    }
    if k.dim() == 1 {
        let value = 2f64.powf(2.0 - alpha) / (alpha * (1.0 - alpha));
        return Ok(BallConstant {
            dim,
            alpha,
            value,
            stderr: value * f64::EPSILON,
            samples: 0,
            seed: 0,
            provenance: "closed form".into(),
            warning: false,
        });
    }
    let sphere = unit_sphere_area(dim);
    let far = unit_ball_volume(dim) * 2f64.powf(-alpha) / alpha;
    let tol = (target_rel_err * 0.1).max(1e-15);
    let near = tanh_sinh(
        |r, _, _| r.powf(-1.0 - alpha) * ball_shift_excess(dim, 1.0, r),
        0.0,
        2.0,
        tol,
    );
    let value = sphere * (near.value + far);
    let stderr = sphere * near.error.abs() + value * 1e-15;
    Ok(BallConstant {
        dim,
        alpha,
        value,
        stderr,
        samples: near.evaluations as u64,
        seed: 0,
        provenance: "covariogram quadrature".into(),
        warning: stderr > target_rel_err * value,
    })
}

/// Reads cache lines `n alpha value stderr samples seed`; `#` starts a comment.
pub fn read_ball_constants(path: &Path) -> Result<Vec<BallConstant>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::Parse(format!("{}:{}: malformed line", path.display(), lineno + 1));
        if f.len() != 6 {
            return Err(bad());
        }
        let value: f64 = f[2].parse().map_err(|_| bad())?;
        if !(value > 0.0) {
            return Err(bad());
        }
        out.push(BallConstant {
            dim: f[0].parse().map_err(|_| bad())?,
            alpha: f[1].parse().map_err(|_| bad())?,
            value,
            stderr: f[3].parse().map_err(|_| bad())?,
            samples: f[4].parse().map_err(|_| bad())?,
            seed: f[5].parse().map_err(|_| bad())?,
            provenance: format!("cache {}", path.display()),
            warning: false,
        });
    }
    Ok(out)
}

pub fn write_ball_constants(path: &Path, constants: &[BallConstant]) -> Result<()> {
    let mut text = String::from("# n alpha value stderr samples seed\n");
    for c in constants {
        let _ = writeln!(
            text,
            "{} {} {} {} {} {}",
            c.dim, c.alpha, c.value, c.stderr, c.samples, c.seed
        );
    }
    std::fs::write(path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// The two terms of the energy of a ball of mass `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallEnergyTerms {
    pub perimeter: f64,
    pub potential: f64,
    pub total: f64,
}

/// Energy of the ball of mass `m` under a homogeneous potential `c|x|^ν`:
/// `P_α(B_1) (m/|B_1|)^{(n-α)/n} + ∫_{B_1} g · (m/|B_1|)^{(n+ν)/n}`.
pub fn ball_energy_closed(
    m: f64,
    k: KernelParams,
    g: &Potential,
    c: &BallConstant,
) -> Result<BallEnergyTerms> {
    let Potential::PowerRadial { degree, .. } = g else {
        return Err(Error::NotHomogeneous);
    };
    if !(m > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mass must be positive, got {m}"
        )));
    }
    if c.dim != k.dim() || c.alpha != k.alpha() {
        return Err(Error::InvalidArgument(format!(
            "ball constant is for (n={}, α={}), kernel is (n={}, α={})",
            c.dim,
            c.alpha,
            k.dim(),
            k.alpha()
        )));
    }
    let n = k.dim() as f64;
    let ratio = m / unit_ball_volume(k.dim());
    let perimeter = c.value * ratio.powf(k.scaling_exponent() / n);
    let potential = g.unit_ball_integral(k.dim())? * ratio.powf((n + degree) / n);
    Ok(BallEnergyTerms {
        perimeter,
        potential,
        total: perimeter + potential,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn interval_closed_form_matches_direct_quadrature() {
        // P = ∫_{-1}^{1} ∫_{|y|>1} |x-y|^{-1-α} dy dx = (2/α) ∫_{-1}^{1} (1-x)^{-α} dx
        for &alpha in &[0.2, 0.5, 0.85] {
            let direct =
                2.0 / alpha * tanh_sinh(|_, _, right| right.powf(-alpha), -1.0, 1.0, 1e-14).value;
            let c = ball_constant(1, alpha, 1e-10).unwrap();
            assert_relative_eq!(c.value, direct, max_relative = 1e-8);
        }
    }

    #[test]
    fn three_dimensional_matches_closed_form() {
        for &alpha in &[0.3, 0.7] {
            let exact = 4.0
                * PI
                * PI
                * (2f64.powf(1.0 - alpha) / (1.0 - alpha)
                    - 2f64.powf(3.0 - alpha) / (12.0 * (3.0 - alpha)))
                + 16.0 * PI * PI / 3.0 * 2f64.powf(-alpha) / alpha;
            let c = ball_constant(3, alpha, 1e-10).unwrap();
            assert_relative_eq!(c.value, exact, max_relative = 1e-10);
            assert!(!c.warning);
        }
    }

    #[test]
    fn positive_and_validated() {
        for n in 1..=3 {
            for &a in &[0.3, 0.7] {
                assert!(ball_constant(n, a, 1e-8).unwrap().value > 0.0);
            }
        }
        assert!(ball_constant(4, 0.5, 1e-8).is_err());
        assert!(ball_constant(2, 1.2, 1e-8).is_err());
    }

    #[test]
    fn cache_roundtrip() {
        let dir = std::env::temp_dir().join(format!("nel-cache-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ball.txt");
        let cs = vec![
            ball_constant(2, 0.5, 1e-10).unwrap(),
            ball_constant(1, 0.3, 1e-10).unwrap(),
        ];
        write_ball_constants(&path, &cs).unwrap();
        let back = read_ball_constants(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].value.to_bits(), cs[0].value.to_bits());
        assert_eq!(back[1].alpha, 0.3);
        std::fs::write(&path, "2 0.5 nan\n").unwrap();
        assert!(read_ball_constants(&path).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn ball_energy_homogeneity() {
        let k = KernelParams::new(2, 0.5).unwrap();
        let c = ball_constant(2, 0.5, 1e-10).unwrap();
        let g = Potential::quadratic();
        let e1 = ball_energy_closed(1.3, k, &g, &c).unwrap();
        let e2 = ball_energy_closed(2.6, k, &g, &c).unwrap();
        assert_relative_eq!(
            e2.perimeter / e1.perimeter,
            2f64.powf(0.75),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            e2.potential / e1.potential,
            2f64.powf(2.0),
            max_relative = 1e-14
        );
        let tiny = ball_energy_closed(1e-12, k, &g, &c).unwrap();
        assert!(tiny.total < 1e-7);
        assert_eq!(
            ball_energy_closed(1.0, k, &Potential::Nonexistence, &c),
            Err(Error::NotHomogeneous)
        );
    }
}
