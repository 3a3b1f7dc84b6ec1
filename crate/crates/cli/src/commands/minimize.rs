use anyhow::{bail, Result};
use nel_core::geometry::radius_for_volume;
use nel_core::minimizer::{minimize_grid, MinimizeConfig};
use nel_core::{asymmetry, ball_constant, ball_energy_closed, GridSet, GridSpec, Potential};
use serde::Serialize;

use crate::config::Config;
use crate::plot::{Plot, Series, Style};
use crate::report::Run;

#[derive(Serialize)]
struct Row {
    sweep: usize,
    accepted_moves: usize,
    temperature: f64,
    perimeter: f64,
    potential: f64,
    total: f64,
    barycenter_x: f64,
    barycenter_y: f64,
}

/// Lumpy star whose lobe phase depends on the seed.
fn blob(grid: GridSpec, count: usize, center: [f64; 2], seed: u64) -> nel_core::Result<GridSet> {
    let phase = (seed % 360) as f64 * std::f64::consts::PI / 180.0;
    GridSet::lowest_scores(grid, count, |p| {
        let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
        let t = dy.atan2(dx);
        let r = 1.0 + 0.25 * (3.0 * t + phase).cos() + 0.15 * (5.0 * t - 2.0 * phase).sin();
        dx.hypot(dy) / r
    })
}

fn initial_set(kind: &str, grid: GridSpec, mass: f64, seed: u64, cfg: &Config) -> Result<GridSet> {
    let count = (mass / grid.cell_volume()).round() as usize;
    Ok(match kind {
        "ball" => GridSet::lowest_scores(grid, count, |p| p[0].hypot(p[1]))?,
        "two-disk" => {
            // two half-mass disks side by side with a gap of about two cells
            let r = radius_for_volume(2, mass / 2.0);
            let c = r + grid.cell_width();
            GridSet::lowest_scores(grid, count, |p| {
                (p[0] - c).hypot(p[1]).min((p[0] + c).hypot(p[1]))
            })?
        }
        "blob" => blob(grid, count, [0.0, -0.3 * grid.half_width()], seed)?,
        other => match other.strip_prefix("bitmap:") {
            Some(path) => {
                let text = std::fs::read_to_string(cfg.resolve(path))?;
                let set = GridSet::from_bitmap(&text)?;
                if set.grid() != &grid {
                    bail!(
                        "bitmap grid {:?} differs from the configured grid",
                        set.grid()
                    );
                }
                set
            }
            None => bail!("unknown init '{other}' (ball, two-disk, blob or bitmap:<path>)"),
        },
    })
}

pub fn run(cfg: &Config, run: &mut Run) -> Result<()> {
    let s = cfg.section(run.name);
    let k = s.kernel()?;
    let g = s.potential("quadratic")?;
    let cells: usize = s.get("cells", 64)?;
    let half_width: f64 = s.get("half_width", 1.5)?;
    let radius: f64 = s.get("radius", 0.6)?;
    let init_kind: String = s.get("init", "two-disk".to_string())?;
    let sweeps: usize = s.get("sweeps", 200)?;
    let polish: usize = s.get("polish_sweeps", 100)?;
    let decay: f64 = s.get("decay", 0.95)?;
    let temperature: Option<f64> = s.opt_str("temperature").map(|t| t.parse()).transpose()?;
    let moves: Option<usize> = s
        .opt_str("moves_per_sweep")
        .map(|t| t.parse())
        .transpose()?;
    cfg.check_unused()?;

    let grid = GridSpec::new(2, cells, half_width)?;
    let mass = std::f64::consts::PI * radius * radius;
    let init = initial_set(&init_kind, grid, mass, run.seed, cfg)?;
    let mut mc = MinimizeConfig::new(init.volume(), k, g.clone());
    mc.max_sweeps = sweeps;
    mc.polish_sweeps = polish;
    mc.decay = decay;
    mc.seed = run.seed;
    mc.initial_temperature = temperature;
    mc.moves_per_sweep = moves;
    let res = minimize_grid(&mc, &init)?;

    let rows: Vec<Row> = res
        .trace
        .iter()
        .map(|t| Row {
            sweep: t.sweep,
            accepted_moves: t.accepted_moves,
            temperature: t.temperature,
            perimeter: t.perimeter,
            potential: t.potential,
            total: t.total,
            barycenter_x: t.barycenter[0],
            barycenter_y: t.barycenter[1],
        })
        .collect();
    run.write_csv("", &rows)?;
    std::fs::write(run.path("_final", "txt"), res.set.to_bitmap())?;
    let plot = Plot::new("energy trace", "sweep", "energy").with(Series::new(
        "total",
        res.trace
            .iter()
            .map(|t| (t.sweep as f64, t.total))
            .collect(),
        Style::Line,
    ));
    run.write_svg("", &plot)?;

    run.note(format!(
        "initial temperature {:.6e}, final energy {:.10}, {} spot checks",
        res.initial_temperature, res.energy.total, res.spot_checks
    ));
    let polish_trace = &res.trace[res.polish_start.min(res.trace.len())..];
    let monotone = polish_trace.windows(2).all(|w| w[1].total <= w[0].total);
    run.verdict(
        "polish phase nonincreasing",
        monotone,
        format!("{} polish sweeps", polish_trace.len()),
    );
    run.verdict(
        "incremental energy",
        res.max_incremental_error <= 1e-9,
        format!("largest relative error {:.3e}", res.max_incremental_error),
    );
    run.verdict(
        "volume conserved",
        res.set.count() == init.count(),
        format!("{} cells", res.set.count()),
    );

    match &g {
        Potential::PowerRadial { .. } => {
            let c = ball_constant(2, k.alpha(), 1e-10)?;
            let closed = ball_energy_closed(res.set.volume(), k, &g, &c)?.total;
            let rel = (res.energy.total - closed) / closed;
            let a = asymmetry(&res.set, radius_for_volume(2, res.set.volume()))?;
            run.note(format!(
                "ball closed form {closed:.10}, asymmetry {:.5}",
                a.value
            ));
            run.verdict(
                "energy near the ball",
                rel.abs() <= 0.03,
                format!("relative excess {rel:.4}"),
            );
            run.verdict(
                "asymmetry <= 0.15",
                a.value <= 0.15,
                format!("asymmetry {:.5}", a.value),
            );
        }
        Potential::Nonexistence => {
            let y0 = res.trace.first().map_or(0.0, |t| t.barycenter[1]);
            let y1 = res.trace.last().map_or(0.0, |t| t.barycenter[1]);
            run.note(format!("barycenter height {y0:.5} -> {y1:.5}"));
            run.verdict("upward drift", y1 > y0, format!("Δy = {:.5}", y1 - y0));
        }
        Potential::TableRadial(_) => {}
    }
    Ok(())
}
