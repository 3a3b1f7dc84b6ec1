use anyhow::Result;
use nel_core::experiments::{nonexistence_scan, NonexistenceConfig};
use serde::Serialize;

use crate::config::Config;
use crate::plot::{Plot, Series, Style};
use crate::report::Run;

#[derive(Serialize)]
struct Row {
    t: f64,
    perimeter: f64,
    potential: f64,
    total: f64,
    upper_branch: f64,
    scaled_potential: f64,
}

pub fn run(cfg: &Config, run: &mut Run) -> Result<()> {
    let s = cfg.section(run.name);
    let mut nc = NonexistenceConfig::new(s.kernel()?);
    nc.cells = s.get("cells", nc.cells)?;
    nc.half_width = s.get("half_width", nc.half_width)?;
    nc.radius = s.get("radius", nc.radius)?;
    nc.start = s.get("start", nc.start)?;
    nc.step = s.get("step", nc.step)?;
    nc.steps = s.get("steps", nc.steps)?;
    cfg.check_unused()?;

    let rep = nonexistence_scan(&nc)?;
    let rows: Vec<Row> = rep
        .rows
        .iter()
        .map(|r| Row {
            t: r.t,
            perimeter: r.perimeter,
            potential: r.potential,
            total: r.total,
            upper_branch: r.upper_branch,
            scaled_potential: r.scaled_potential,
        })
        .collect();
    run.write_csv("", &rows)?;
    let plot = Plot::new("energy along upward translation", "t", "energy")
        .with(Series::new(
            "total",
            rep.rows.iter().map(|r| (r.t, r.total)).collect(),
            Style::Line,
        ))
        .with(Series::new(
            "potential",
            rep.rows.iter().map(|r| (r.t, r.potential)).collect(),
            Style::Line,
        ));
    run.write_svg("", &plot)?;

    let last = rep.rows.last().expect("at least one row");
    run.note(format!(
        "(1+y)·G at the last step {:.6e}, limit ∫_E x² = {:.6e}",
        last.scaled_potential, rep.second_moment
    ));
    run.note(format!(
        "potential at the last step {:.6e}, infimum 0 is not attained",
        last.potential
    ));
    run.verdict(
        "strict decrease",
        rep.strictly_decreasing,
        format!("{} translation steps", rep.rows.len() - 1),
    );
    run.verdict(
        "perimeter constant",
        rep.perimeter_spread <= 1e-12,
        format!("largest relative deviation {:.3e}", rep.perimeter_spread),
    );
    Ok(())
}
