//! One module per subcommand. Each driver reads its section, rejects unknown
//! keys before doing any work, then writes its tables, plot and verdicts.

pub mod critical_mass;
pub mod minimize;
pub mod modulus;
pub mod nonexistence;
pub mod perimeter;
pub mod stability;
pub mod symmetrize;
pub mod transport;

use nel_core::fit::FitResult;
use serde::Serialize;

/// Row of a `*_fits.csv` table.
#[derive(Serialize)]
pub struct FitRow {
    pub label: String,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
    pub points: usize,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub status: String,
}

impl FitRow {
    pub fn from(label: &str, fit: &nel_core::Result<FitResult>) -> Self {
        match fit {
            Ok(f) => Self {
                label: f.label.clone(),
                slope: Some(f.slope),
                intercept: Some(f.intercept),
                r_squared: Some(f.r_squared),
                points: f.points,
                x_min: Some(f.x_range.0),
                x_max: Some(f.x_range.1),
                status: "ok".into(),
            },
            Err(e) => Self {
                label: label.into(),
                slope: None,
                intercept: None,
                r_squared: None,
                points: 0,
                x_min: None,
                x_max: None,
                status: e.to_string(),
            },
        }
    }

    pub fn describe(&self) -> String {
        match (self.slope, self.intercept, self.r_squared) {
            (Some(s), Some(i), Some(r)) => {
                format!(
                    "fit {}: slope {s:.4}, intercept {i:.4}, R² {r:.5}, {} points",
                    self.label, self.points
                )
            }
            _ => format!("fit {}: {}", self.label, self.status),
        }
    }
}
