use anyhow::Result;
use nel_core::geometry::radius_for_volume;
use nel_core::shapes::{shape_zoo, ScanSetup};
use nel_core::transport::{pushforward_identity_check, transport_chain};
use nel_core::{BallSpec, GridSpec};
use serde::Serialize;

use crate::config::Config;
use crate::plot::{Plot, Series, Style};
use crate::report::Run;

#[derive(Serialize)]
struct Row {
    shape: usize,
    label: String,
    vacuous: bool,
    points: usize,
    cost: Option<f64>,
    duality_gap: Option<f64>,
    pushforward_residual: Option<f64>,
    max_target_radius: f64,
    range_ok: bool,
    sampled_excess: f64,
    sampled_excess_stderr: f64,
    grid_excess: f64,
    ball_below_ok: bool,
    surplus: f64,
    surplus_ok: bool,
}

pub fn run(cfg: &Config, run: &mut Run) -> Result<()> {
    let s = cfg.section(run.name);
    let g = s.potential("quadratic")?;
    let cells: usize = s.get("cells", 128)?;
    let box_factor: f64 = s.get("box_factor", 2.5)?;
    let shapes: usize = s.get("shapes", 20)?;
    let points: usize = s.get("points", 256)?;
    cfg.check_unused()?;

    let setup = ScanSetup::new(GridSpec::new(2, cells, box_factor)?, 1.0)?;
    let ball = BallSpec::centered(2, radius_for_volume(2, setup.mass()))?;
    let mut zoo = vec![(
        "shifted ball (4,0)".to_string(),
        setup.ball.shift_cells([4, 0])?,
    )];
    zoo.extend(
        shape_zoo(&setup, shapes, run.seed)?
            .into_iter()
            .map(|z| (z.label, z.set)),
    );

    let mut rows = Vec::new();
    for (i, (label, set)) in zoo.iter().enumerate() {
        let (chain, matched) = transport_chain(set, &ball, &g, points, run.seed ^ i as u64)?;
        let (cost, gap, residual, n) = match &matched {
            Some((clouds, m)) => {
                let p = pushforward_identity_check(m, &clouds.inner, &g)?;
                (
                    Some(m.cost),
                    Some(m.duality_gap),
                    Some(p.residual),
                    clouds.outer.len(),
                )
            }
            None => (None, None, None, 0),
        };
        rows.push(Row {
            shape: i,
            label: label.clone(),
            vacuous: chain.vacuous,
            points: n,
            cost,
            duality_gap: gap,
            pushforward_residual: residual,
            max_target_radius: chain.max_target_radius,
            range_ok: chain.range_ok,
            sampled_excess: chain.sampled_excess,
            sampled_excess_stderr: chain.sampled_excess_stderr,
            grid_excess: chain.grid_excess,
            ball_below_ok: chain.ball_below_ok,
            surplus: chain.surplus,
            surplus_ok: chain.surplus_ok,
        });
    }
    run.write_csv("", &rows)?;
    let plot = Plot::new(
        "sampled against grid potential excess",
        "grid excess",
        "sampled excess",
    )
    .with(Series::new(
        "shapes",
        rows.iter()
            .map(|r| (r.grid_excess, r.sampled_excess))
            .collect(),
        Style::Markers,
    ));
    run.write_svg("", &plot)?;

    let worst = rows
        .iter()
        .filter_map(|r| r.pushforward_residual)
        .fold(0.0, f64::max);
    let chain_fail = rows
        .iter()
        .filter(|r| !(r.range_ok && r.ball_below_ok && r.surplus_ok))
        .count();
    run.verdict(
        "push-forward residual",
        worst <= 1e-12,
        format!("largest residual {worst:.3e}"),
    );
    run.verdict(
        "monotone chain",
        chain_fail == 0,
        format!("{chain_fail} of {} shapes violate a link", rows.len()),
    );
    Ok(())
}
