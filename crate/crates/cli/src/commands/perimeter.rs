use anyhow::{bail, Result};
use nel_core::{
    ball_constant, make_ball, perimeter_grid, perimeter_mc, BallSpec, GridSet, GridSpec,
    KernelParams,
};
use serde::Serialize;

use crate::config::Config;
use crate::plot::{Plot, Series, Style};
use crate::report::Run;

#[derive(Serialize)]
struct Row {
    alpha: f64,
    shape: String,
    grid: f64,
    grid_error: f64,
    scaled_grid: f64,
    ratio: f64,
    expected_ratio: f64,
    ratio_rel_err: f64,
    mc: Option<f64>,
    mc_stderr: Option<f64>,
    z: Option<f64>,
    smooth_ball: Option<f64>,
    rel_to_smooth: Option<f64>,
}

fn shape(kind: &str, grid: GridSpec, radius: f64, aspect: f64) -> Result<GridSet> {
    Ok(match kind {
        "disk" => make_ball(&grid, &BallSpec::centered(2, radius)?)?,
        "ellipse" => GridSet::from_region(grid, |p| {
            (p[0] / (radius * aspect)).powi(2) + (p[1] * aspect / radius).powi(2) <= 1.0
        }),
        other => bail!("unknown shape '{other}' (disk or ellipse)"),
    })
}

pub fn run(cfg: &Config, run: &mut Run) -> Result<()> {
    let s = cfg.section(run.name);
    let alphas: Vec<f64> = s.list("alphas", vec![0.3, 0.5, 0.7])?;
    let cells: usize = s.get("cells", 256)?;
    let half_width: f64 = s.get("half_width", 2.5)?;
    let radius: f64 = s.get("radius", 1.0)?;
    let scale: f64 = s.get("scale", 2.0)?;
    let kind: String = s.get("shape", "disk".to_string())?;
    let aspect: f64 = s.get("aspect", 1.2)?;
    let samples: u64 = s.get("mc_samples", 1_000_000)?;
    let tol: f64 = s.get("ratio_tolerance", 0.02)?;
    cfg.check_unused()?;

    let grid = GridSpec::new(2, cells, half_width)?;
    let small = shape(&kind, grid, radius, aspect)?;
    let large = shape(&kind, grid, scale * radius, aspect)?;
    let mut rows = Vec::new();
    for (i, &alpha) in alphas.iter().enumerate() {
        let k = KernelParams::new(2, alpha)?;
        let p = perimeter_grid(&small, k)?;
        let q = perimeter_grid(&large, k)?;
        let ratio = q.value / p.value;
        let expected = scale.powf(k.scaling_exponent());
        let mc = (samples > 0)
            .then(|| perimeter_mc(&small, k, samples, run.seed ^ i as u64))
            .transpose()?;
        let z = mc.map(|m| (m.value - p.value) / m.stderr.hypot(p.error));
        let smooth = (kind == "disk")
            .then(|| {
                ball_constant(2, alpha, 1e-10).map(|c| c.value * radius.powf(k.scaling_exponent()))
            })
            .transpose()?;
        rows.push(Row {
            alpha,
            shape: kind.clone(),
            grid: p.value,
            grid_error: p.error,
            scaled_grid: q.value,
            ratio,
            expected_ratio: expected,
            ratio_rel_err: (ratio - expected).abs() / expected,
            mc: mc.map(|m| m.value),
            mc_stderr: mc.map(|m| m.stderr),
            z,
            smooth_ball: smooth,
            rel_to_smooth: smooth.map(|b| (p.value - b) / b),
        });
    }
    run.write_csv("", &rows)?;
    let plot = Plot::new("perimeter against alpha", "α", "P_α")
        .with(Series::new(
            "grid",
            rows.iter().map(|r| (r.alpha, r.grid)).collect(),
            Style::Line,
        ))
        .with(Series::new(
            "monte carlo",
            rows.iter()
                .filter_map(|r| r.mc.map(|m| (r.alpha, m)))
                .collect(),
            Style::Markers,
        ));
    run.write_svg("", &plot)?;

    for r in &rows {
        run.verdict(
            &format!("scaling law alpha={}", r.alpha),
            r.ratio_rel_err <= tol,
            format!(
                "ratio {:.6} vs {:.6}, relative error {:.3e}",
                r.ratio, r.expected_ratio, r.ratio_rel_err
            ),
        );
        if let Some(z) = r.z {
            run.verdict(
                &format!("grid vs monte carlo alpha={}", r.alpha),
                z.abs() <= 2.0,
                format!("z = {z:.3}"),
            );
        }
        if let Some(d) = r.rel_to_smooth {
            run.note(format!(
                "alpha={}: grid vs smooth ball constant {d:+.4}",
                r.alpha
            ));
        }
    }
    Ok(())
}
