use anyhow::Result;
use nel_core::shapes::{shape_zoo, ScanSetup};
use nel_core::symmetrization::{
    is_steiner_symmetric, potential_monotonicity_check, steiner_symmetrize, Direction,
};
use nel_core::GridSpec;
use serde::Serialize;

use crate::config::Config;
use crate::plot::{Plot, Series, Style};
use crate::report::Run;

#[derive(Serialize)]
struct Row {
    shape: usize,
    label: String,
    axis: String,
    cells_before: usize,
    cells_after: usize,
    potential_before: f64,
    potential_after: f64,
    delta: f64,
    already_symmetric: bool,
    fixed_point: bool,
    nonincreasing: bool,
    strict: bool,
}

pub fn run(cfg: &Config, run: &mut Run) -> Result<()> {
    let s = cfg.section(run.name);
    let g = s.potential("quadratic")?;
    let cells: usize = s.get("cells", 128)?;
    let box_factor: f64 = s.get("box_factor", 2.5)?;
    let shapes: usize = s.get("shapes", 50)?;
    cfg.check_unused()?;

    let setup = ScanSetup::new(GridSpec::new(2, cells, box_factor)?, 1.0)?;
    let mut zoo = vec![("ball".to_string(), setup.ball.clone())];
    zoo.extend(
        shape_zoo(&setup, shapes, run.seed)?
            .into_iter()
            .map(|z| (z.label, z.set)),
    );

    let mut rows = Vec::new();
    for (i, (label, set)) in zoo.iter().enumerate() {
        for axis in 0..2 {
            let d = Direction::Axis(axis);
            let out = steiner_symmetrize(set, d)?;
            let m = potential_monotonicity_check(set, d, &g)?;
            rows.push(Row {
                shape: i,
                label: label.clone(),
                axis: d.label(),
                cells_before: set.count(),
                cells_after: out.set.count(),
                potential_before: m.before,
                potential_after: m.after,
                delta: m.delta,
                already_symmetric: is_steiner_symmetric(set, axis),
                fixed_point: out.set == *set,
                nonincreasing: m.nonincreasing,
                strict: m.strict,
            });
        }
    }
    run.write_csv("", &rows)?;
    let plot = Plot::new(
        "potential before and after symmetrization",
        "before",
        "after",
    )
    .with(Series::new(
        "shape × axis",
        rows.iter()
            .map(|r| (r.potential_before, r.potential_after))
            .collect(),
        Style::Markers,
    ));
    run.write_svg("", &plot)?;

    let volume_bad = rows
        .iter()
        .filter(|r| r.cells_before != r.cells_after)
        .count();
    let increases = rows.iter().filter(|r| !r.nonincreasing).count();
    let asym: Vec<&Row> = rows.iter().filter(|r| !r.already_symmetric).collect();
    let not_strict = asym.iter().filter(|r| !r.strict).count();
    let ball_fixed = rows.iter().filter(|r| r.shape == 0).all(|r| r.fixed_point);
    run.note(format!("{} rows, {} asymmetric", rows.len(), asym.len()));
    run.verdict(
        "volume preserved",
        volume_bad == 0,
        format!("{volume_bad} rows changed cell count"),
    );
    run.verdict(
        "potential nonincreasing",
        increases == 0,
        format!("{increases} increases"),
    );
    run.verdict(
        "strict on asymmetric shapes",
        not_strict == 0,
        format!(
            "{not_strict} of {} asymmetric rows without strict decrease",
            asym.len()
        ),
    );
    run.verdict("ball is a fixed point", ball_fixed, "both axes");
    Ok(())
}
