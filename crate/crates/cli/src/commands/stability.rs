use anyhow::Result;
use nel_core::experiments::{stability_scan, StabilityConfig};
use serde::Serialize;

use super::FitRow;
use crate::config::Config;
use crate::plot::{Plot, Series, Style};
use crate::report::Run;

#[derive(Serialize)]
struct Row {
    family: &'static str,
    target: f64,
    param: Option<f64>,
    mass: Option<f64>,
    sym_diff: Option<f64>,
    gap: Option<f64>,
    deficit: Option<f64>,
    asymmetry: Option<f64>,
    translation: Option<f64>,
    contained: Option<bool>,
    lens_shift: Option<f64>,
    status: &'static str,
}

pub fn run(cfg: &Config, run: &mut Run) -> Result<()> {
    let s = cfg.section(run.name);
    let mut sc = StabilityConfig::new(s.kernel()?, s.potential("quadratic")?);
    sc.mass = s.get("mass", sc.mass)?;
    sc.families = s.families()?;
    sc.cells = s.get("cells", sc.cells)?;
    sc.box_factor = s.get("box_factor", sc.box_factor)?;
    sc.target_range = (
        s.get("target_min", sc.target_range.0)?,
        s.get("target_max", sc.target_range.1)?,
    );
    sc.targets = s.get("targets", sc.targets)?;
    cfg.check_unused()?;

    let rep = stability_scan(&sc)?;
    let rows: Vec<Row> = rep
        .records
        .iter()
        .map(|r| {
            let d = r.data.as_ref();
            Row {
                family: r.family.label(),
                target: r.target,
                param: r.param,
                mass: d.map(|d| d.mass),
                sym_diff: d.map(|d| d.sym_diff),
                gap: d.map(|d| d.gap),
                deficit: d.map(|d| d.deficit),
                asymmetry: d.map(|d| d.asymmetry),
                translation: d.map(|d| d.translation),
                contained: d.map(|d| d.contained),
                lens_shift: d.and_then(|d| d.lens_shift),
                status: if d.is_some() { "ok" } else { "unreachable" },
            }
        })
        .collect();
    run.write_csv("", &rows)?;

    let mut fits: Vec<FitRow> = Vec::new();
    for (f, fit) in rep.family_fits.iter().chain(&rep.contained_fits) {
        fits.push(FitRow::from(f.label(), fit));
    }
    if let Some(tf) = &rep.translate_fit {
        fits.push(FitRow::from("translate vs shift", tf));
    }
    for f in &fits {
        run.note(f.describe());
    }
    run.write_csv("_fits", &fits)?;

    let mut plot = Plot::new(
        "energy gap against distance to the ball",
        "|E Δ B|",
        "E(E) - E(B)",
    )
    .log_log();
    for &family in &sc.families {
        let pts = rep
            .records
            .iter()
            .filter(|r| r.family == family)
            .filter_map(|r| r.data.as_ref())
            .map(|d| (d.sym_diff, d.gap))
            .collect();
        plot = plot.with(Series::new(family.label(), pts, Style::Line));
    }
    run.write_svg("", &plot)?;

    let v = &rep.verdicts;
    run.note(format!(
        "ball energy {:.10}, ball volume {:.10}",
        rep.ball_energy, rep.ball_volume
    ));
    let missing = rep.records.iter().filter(|r| r.data.is_none()).count();
    run.note(format!(
        "{} rows, {missing} targets unreachable",
        rep.records.len()
    ));
    run.verdict(
        "fourth-power bound",
        v.fourth_power_ok,
        format!("min gap/d^4 = {:.6e}", v.r_hat),
    );
    run.verdict(
        "contained slope <= 2.2",
        v.contained_ok,
        match v.contained_max_slope {
            Some(s) => format!("largest contained slope {s:.4}"),
            None => "no family had 8 contained rows".into(),
        },
    );
    if let Some(ok) = v.translate_ok {
        run.verdict(
            "translate identity",
            ok,
            format!(
                "slope {} (want [1.8, 2.2]), |intercept - log|B|| {} (want <= 0.1)",
                v.translate_slope
                    .map_or("n/a".into(), |s| format!("{s:.4}")),
                v.translate_intercept_error
                    .map_or("n/a".into(), |e| format!("{e:.4}"))
            ),
        );
    }
    Ok(())
}
