use anyhow::{anyhow, Result};
use nel_core::energy::read_ball_constants;
use nel_core::minimizer::{critical_mass, curvature_sign_changes, energy_curve, Curvature};
use nel_core::{ball_constant, BallConstant, KernelParams, Potential};
use serde::Serialize;

use crate::config::Config;
use crate::plot::{Plot, Series, Style};
use crate::report::Run;

#[derive(Serialize)]
struct CurveRow {
    alpha: f64,
    degree: f64,
    mass: f64,
    perimeter: f64,
    potential: f64,
    total: f64,
    second_difference: Option<f64>,
    curvature: &'static str,
}

#[derive(Serialize)]
struct SummaryRow {
    alpha: f64,
    degree: f64,
    formula: f64,
    numeric: f64,
    rel_diff: f64,
    sign_changes: usize,
    ball_constant: f64,
    provenance: String,
}

/// `alpha:degree` pairs.
fn parse_cases(raw: &[String]) -> Result<Vec<(f64, f64)>> {
    raw.iter()
        .map(|c| {
            let (a, n) = c
                .split_once(':')
                .ok_or_else(|| anyhow!("case '{c}' is not alpha:degree"))?;
            Ok((a.trim().parse()?, n.trim().parse()?))
        })
        .collect()
}

pub fn run(cfg: &Config, run: &mut Run) -> Result<()> {
    let s = cfg.section(run.name);
    let cases = parse_cases(&s.list(
        "cases",
        vec!["0.5:2".to_string(), "0.3:2".into(), "0.7:4".into()],
    )?)?;
    let coeff: f64 = s.get("coeff", 1.0)?;
    let points: usize = s.get("curve_points", 41)?;
    let cache: Vec<BallConstant> = match s.opt_str("ball_constants") {
        Some(p) => read_ball_constants(&cfg.resolve(&p))?,
        None => Vec::new(),
    };
    cfg.check_unused()?;
    if points < 5 {
        anyhow::bail!("curve_points must be at least 5");
    }

    let mut curves = Vec::new();
    let mut summary = Vec::new();
    let mut plot = Plot::new("ball energy against mass", "m", "E(B(m))").log_log();
    for (alpha, degree) in cases {
        let k = KernelParams::new(2, alpha)?;
        let g = Potential::power(coeff, degree)?;
        let c = match cache.iter().find(|c| c.dim == 2 && c.alpha == alpha) {
            Some(c) => c.clone(),
            None => ball_constant(2, alpha, 1e-10)?,
        };
        let cm = critical_mass(k, &g, &c)?;
        let masses: Vec<f64> = (0..points)
            .map(|i| cm.value * 10f64.powf(-1.0 + 2.0 * i as f64 / (points - 1) as f64))
            .collect();
        let curve = energy_curve(&masses, k, &g, &c)?;
        let changes = curvature_sign_changes(&curve);
        let below_concave = curve
            .iter()
            .filter(|p| p.mass < cm.value)
            .all(|p| p.curvature.is_none_or(|c| c == Curvature::Concave));
        let above_convex = curve
            .iter()
            .filter(|p| p.mass > cm.value)
            .all(|p| p.curvature.is_none_or(|c| c == Curvature::Convex));
        for p in &curve {
            curves.push(CurveRow {
                alpha,
                degree,
                mass: p.mass,
                perimeter: p.perimeter,
                potential: p.potential,
                total: p.total,
                second_difference: p.second_difference,
                curvature: match p.curvature {
                    Some(Curvature::Concave) => "concave",
                    Some(Curvature::Convex) => "convex",
                    Some(Curvature::Flat) => "flat",
                    None => "",
                },
            });
        }
        plot = plot.with(Series::new(
            format!("α={alpha} ν={degree}"),
            curve.iter().map(|p| (p.mass, p.total)).collect(),
            Style::Line,
        ));
        let label = format!("alpha={alpha} degree={degree}");
        run.note(format!(
            "{label}: m_crit formula {:.10}, inflection {:.10}, ball constant {:.12} ({})",
            cm.value, cm.numeric, cm.ball_constant, cm.provenance
        ));
        run.verdict(
            &format!("formula vs inflection {label}"),
            cm.rel_diff <= 0.01,
            format!("relative difference {:.3e}", cm.rel_diff),
        );
        run.verdict(
            &format!("single sign change {label}"),
            changes == 1 && below_concave && above_convex,
            format!("{changes} sign changes, concave below: {below_concave}, convex above: {above_convex}"),
        );
        summary.push(SummaryRow {
            alpha,
            degree,
            formula: cm.value,
            numeric: cm.numeric,
            rel_diff: cm.rel_diff,
            sign_changes: changes,
            ball_constant: cm.ball_constant,
            provenance: cm.provenance.clone(),
        });
    }
    run.write_csv("", &curves)?;
    run.write_csv("_summary", &summary)?;
    run.write_svg("", &plot)?;
    Ok(())
}
