use anyhow::Result;
use nel_core::modulus::{modulus_fits, modulus_scan, ModulusConfig};
use nel_core::modulus::{FamilyGap, ModulusRow};
use nel_core::shapes::Family;
use nel_core::Potential;
use serde::Serialize;

use super::FitRow;
use crate::config::Config;
use crate::plot::{Plot, Series, Style};
use crate::report::Run;

fn pick(r: &ModulusRow, f: Family) -> Option<&FamilyGap> {
    r.families.iter().find(|x| x.family == f)
}

#[derive(Serialize)]
struct Row {
    mass: f64,
    epsilon: f64,
    estimate: Option<f64>,
    normalized: Option<f64>,
    argmin: &'static str,
    translate: Option<f64>,
    ellipse: Option<f64>,
    bump1: Option<f64>,
    bump2: Option<f64>,
    translate_reached: Option<f64>,
    ellipse_reached: Option<f64>,
    bump1_reached: Option<f64>,
    bump2_reached: Option<f64>,
}

pub fn run(cfg: &Config, run: &mut Run) -> Result<()> {
    let s = cfg.section(run.name);
    let k = s.kernel()?;
    let g = s.potential("quadratic")?;
    let masses = s.log_range("mass", 0.5, 5.0, 8)?;
    let mut mc = ModulusConfig::default();
    mc.epsilons = s.log_range("epsilon", 0.05, 0.4, 8)?;
    mc.cells = s.get("cells", mc.cells)?;
    mc.box_factor = s.get("box_factor", mc.box_factor)?;
    mc.families = s.families()?;
    cfg.check_unused()?;

    let rows = modulus_scan(&masses, k, &g, &mc)?;
    let power = k.scaling_exponent() / 2.0;
    let table: Vec<Row> = rows
        .iter()
        .map(|r| Row {
            mass: r.mass,
            epsilon: r.epsilon,
            estimate: r.estimate,
            normalized: r.estimate.map(|w| w / r.mass.powf(power)),
            argmin: r.argmin.map_or("", |f| f.label()),
            translate: pick(r, Family::Translate).and_then(|x| x.gap),
            ellipse: pick(r, Family::Ellipse).and_then(|x| x.gap),
            bump1: pick(r, Family::Bump1).and_then(|x| x.gap),
            bump2: pick(r, Family::Bump2).and_then(|x| x.gap),
            translate_reached: pick(r, Family::Translate).and_then(|x| x.reached),
            ellipse_reached: pick(r, Family::Ellipse).and_then(|x| x.reached),
            bump1_reached: pick(r, Family::Bump1).and_then(|x| x.reached),
            bump2_reached: pick(r, Family::Bump2).and_then(|x| x.reached),
        })
        .collect();
    run.write_csv("", &table)?;

    let fits = modulus_fits(&rows, k);
    let mut fit_rows = Vec::new();
    for (m, f) in &fits.epsilon {
        fit_rows.push(FitRow::from(&format!("eps m={m:.4}"), f));
    }
    for (e, f) in &fits.mass {
        fit_rows.push(FitRow::from(&format!("mass eps={e:.4}"), f));
    }
    for (e, f) in &fits.normalized_mass {
        fit_rows.push(FitRow::from(&format!("normalized eps={e:.4}"), f));
    }
    for f in &fit_rows {
        run.note(f.describe());
    }
    run.write_csv("_fits", &fit_rows)?;

    let mut plot = Plot::new("empirical modulus", "ε", "ŵ_m(ε)").log_log();
    for &m in &masses {
        let pts = rows
            .iter()
            .filter(|r| r.mass == m)
            .filter_map(|r| r.estimate.map(|w| (r.epsilon, w)))
            .collect();
        plot = plot.with(Series::new(format!("m={m:.3}"), pts, Style::Line));
    }
    run.write_svg("", &plot)?;

    let missing = rows.iter().filter(|r| r.estimate.is_none()).count();
    let nonpositive = rows
        .iter()
        .filter(|r| r.estimate.is_some_and(|w| w <= 0.0))
        .count();
    run.note(format!("{} cells, {missing} missing", rows.len()));
    run.verdict(
        "positive modulus",
        nonpositive == 0,
        format!("{nonpositive} nonpositive cells"),
    );
    for (e, f) in &fits.normalized_mass {
        if let Ok(f) = f {
            run.note(format!(
                "normalized mass exponent at eps={e:.4}: {:.4} (reported only, R² {:.5})",
                f.slope, f.r_squared
            ));
        }
    }

    // Exponent checks only make sense for the quadratic potential in the plane.
    if g != Potential::quadratic() {
        return Ok(());
    }
    let check = |fs: &[(f64, nel_core::Result<nel_core::fit::FitResult>)], lo: f64, hi: f64| {
        let slopes: Vec<Option<f64>> = fs
            .iter()
            .map(|(_, f)| f.as_ref().ok().map(|f| f.slope))
            .collect();
        let ok = !slopes.is_empty()
            && slopes
                .iter()
                .all(|s| s.is_some_and(|s| (lo..=hi).contains(&s)));
        let shown: Vec<String> = slopes
            .iter()
            .map(|s| s.map_or("n/a".into(), |s| format!("{s:.3}")))
            .collect();
        (ok, shown.join(" "))
    };
    let (ok, detail) = check(&fits.epsilon, 1.85, 2.15);
    run.verdict(
        "epsilon exponent 2 ± 0.15",
        ok,
        format!("per mass: {detail}"),
    );
    let (ok, detail) = check(&fits.mass, 2.6, 3.4);
    run.verdict(
        "mass exponent 3 ± 0.4",
        ok,
        format!("per epsilon: {detail}"),
    );
    Ok(())
}
