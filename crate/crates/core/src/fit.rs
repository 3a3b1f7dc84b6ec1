//! Least-squares power-law fits.

use crate::error::{Error, Result};

/// Fewest points any reported fit may use.
pub const MIN_FIT_POINTS: usize = 8;

/// `ln y = intercept + slope · ln x`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub label: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Range of the abscissa actually used.
    pub x_range: (f64, f64),
    pub points: usize,
}

/// Fits a power law through the positive, finite pairs. Pairs with a
/// nonpositive coordinate are skipped; fewer than [`MIN_FIT_POINTS`]
/// usable pairs is an error.
pub fn fit_loglog(label: &str, xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument("x and y lengths differ".into()));
    }
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InvalidArgument(format!(
            "fit '{label}' has {} usable points, need {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "fit '{label}' has a degenerate x range"
        )));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).exp();
    let hi = pts
        .iter()
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max)
        .exp();
    Ok(FitResult {
        label: label.to_string(),
        slope,
        intercept,
        r_squared,
        x_range: (lo, hi),
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn recovers_exact_power_law() {
        let xs: Vec<f64> = (1..=10).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(2.5)).collect();
        let f = fit_loglog("p", &xs, &ys).unwrap();
        assert_relative_eq!(f.slope, 2.5, max_relative = 1e-12);
        assert_relative_eq!(f.intercept, 3f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(f.r_squared, 1.0, max_relative = 1e-12);
        assert_eq!(f.points, 10);
    }

    #[test]
    fn needs_eight_points() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let mut ys = xs;
        assert!(fit_loglog("ok", &xs, &ys).is_ok());
        ys[3] = 0.0;
        assert!(fit_loglog("short", &xs, &ys).is_err());
    }
}
