//! Minimal SVG line and scatter plots with optional log axes.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: [f64; 4] = [70.0, 20.0, 30.0, 50.0]; // left, right, top, bottom
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, style: Style) -> Self {
        Self {
            label: label.into(),
            points,
            style,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Default::default()
        }
    }

    pub fn log_log(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn render(&self) -> String {
        let tx = |v: f64| if self.log_x { v.log10() } else { v };
        let ty = |v: f64| if self.log_y { v.log10() } else { v };
        let usable = |&(x, y): &(f64, f64)| {
            x.is_finite() && y.is_finite() && (!self.log_x || x > 0.0) && (!self.log_y || y > 0.0)
        };
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| {
                s.points
                    .iter()
                    .filter(|p| usable(p))
                    .map(|&(x, y)| (tx(x), ty(y)))
            })
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = bounds(&pts);
        pad(&mut x0, &mut x1);
        pad(&mut y0, &mut y1);
        let pw = WIDTH - MARGIN[0] - MARGIN[1];
        let ph = HEIGHT - MARGIN[2] - MARGIN[3];
        let sx = |v: f64| MARGIN[0] + (v - x0) / (x1 - x0) * pw;
        let sy = |v: f64| MARGIN[2] + (1.0 - (v - y0) / (y1 - y0)) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#,
            MARGIN[0], MARGIN[2]
        );
        for (v, label) in ticks(x0, x1, self.log_x) {
            let x = sx(v);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{b2}" stroke="black"/><text x="{x:.2}" y="{t}" text-anchor="middle">{label}</text>"#,
                b = MARGIN[2] + ph,
                b2 = MARGIN[2] + ph + 4.0,
                t = MARGIN[2] + ph + 16.0
            );
        }
        for (v, label) in ticks(y0, y1, self.log_y) {
            let y = sy(v);
            let _ = writeln!(
                out,
                r#"<line x1="{l2}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="black"/><text x="{t}" y="{yt:.2}" text-anchor="end">{label}</text>"#,
                l = MARGIN[0],
                l2 = MARGIN[0] - 4.0,
                t = MARGIN[0] - 6.0,
                yt = y + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN[0] + pw / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{y}" text-anchor="middle" transform="rotate(-90 14 {y})">{}</text>"#,
            escape(&self.y_label),
            y = MARGIN[2] + ph / 2.0
        );
        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let p: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter(|p| usable(p))
                .map(|&(x, y)| (sx(tx(x)), sy(ty(y))))
                .collect();
            match s.style {
                Style::Line if p.len() > 1 => {
                    let coords: Vec<String> =
                        p.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                        coords.join(" ")
                    );
                }
                _ => {
                    for (x, y) in &p {
                        let _ = writeln!(
                            out,
                            r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#
                        );
                    }
                }
            }
            let ly = MARGIN[2] + 14.0 + 14.0 * i as f64;
            let lx = MARGIN[0] + 10.0;
            let _ = writeln!(
                out,
                r#"<rect x="{lx}" y="{}" width="10" height="3" fill="{color}"/><text x="{}" y="{ly}">{}</text>"#,
                ly - 4.0,
                lx + 14.0,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn bounds(pts: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    if pts.is_empty() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let mut b = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        b.0 = b.0.min(x);
        b.1 = b.1.max(x);
        b.2 = b.2.min(y);
        b.3 = b.3.max(y);
    }
    b
}

fn pad(lo: &mut f64, hi: &mut f64) {
    let span = *hi - *lo;
    let d = if span > 0.0 {
        0.05 * span
    } else {
        0.5 * lo.abs().max(1.0)
    };
    *lo -= d;
    *hi += d;
}

/// Ticks in plot coordinates with their labels. Log axes get one tick per
/// decade when the range spans one, otherwise linear ticks in log space.
fn ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    if log && hi - lo >= 1.0 {
        let mut out = Vec::new();
        let mut e = lo.ceil();
        while e <= hi {
            out.push((e, format!("1e{}", e as i32)));
            e += 1.0;
        }
        return out;
    }
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut out = Vec::new();
    let mut v = (lo / step).ceil() * step;
    while v <= hi + 1e-12 * step {
        let shown = if log { 10f64.powf(v) } else { v };
        out.push((v, fmt_tick(shown)));
        v += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_series_and_skips_bad_points() {
        let svg = Plot::new("t <1>", "x", "y")
            .log_log()
            .with(Series::new(
                "a",
                vec![(1.0, 1.0), (10.0, 100.0), (0.0, 5.0)],
                Style::Line,
            ))
            .with(Series::new("b", vec![(2.0, 3.0)], Style::Markers))
            .render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("t &lt;1&gt;"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains(">1e1<"));
    }

    #[test]
    fn empty_plot_still_valid() {
        let svg = Plot::new("e", "x", "y").render();
        assert!(svg.ends_with("</svg>\n"));
    }
}
