//! Minimal SVG line charts of the per-step metrics against time.

use std::fmt::Write as _;

use mccst_core::sim::StepReport;

const W: f64 = 640.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// One chart; `reference` draws a dashed horizontal line (e.g. R_s).
pub fn line_chart(title: &str, y_label: &str, series: &[Series], reference: Option<f64>) -> String {
    let all = series.iter().flat_map(|s| s.points.iter().copied());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in all.chain(reference.map(|r| (f64::NAN, r))) {
        if x.is_finite() {
            x0 = x0.min(x);
            x1 = x1.max(x);
        }
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>"#, W / 2.0);
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(s, r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="11">{x0:.3}</text>"#, H - PAD + 14.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{x1:.3} s</text>"#, W - PAD, H - PAD + 14.0);
    let _ = writeln!(s, r#"<text x="4" y="{}" font-family="sans-serif" font-size="11">{y0:.4}</text>"#, H - PAD);
    let _ = writeln!(s, r#"<text x="4" y="{}" font-family="sans-serif" font-size="11">{y1:.4}</text>"#, PAD);
    let _ = writeln!(s, r#"<text x="4" y="{}" font-family="sans-serif" font-size="11">{y_label}</text>"#, PAD - 12.0);
    if let Some(r) = reference {
        let _ = writeln!(s, r#"<line x1="{PAD}" x2="{}" y1="{y}" y2="{y}" stroke="gray" stroke-dasharray="4 3"/>"#, W - PAD, y = sy(r));
    }
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    for (k, ser) in series.iter().enumerate() {
        let color = palette[k % palette.len()];
        let mut d = String::new();
        for (n, &(x, y)) in ser.points.iter().enumerate() {
            let _ = write!(d, "{}{:.2} {:.2} ", if n == 0 { "M" } else { "L" }, sx(x), sy(y));
        }
        let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            W - PAD,
            PAD + 14.0 * k as f64,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    s
}

/// The four metric charts of a run, as `(file name, svg)`.
pub fn metric_plots(label: &str, reports: &[StepReport], safe_radius: f64) -> Vec<(&'static str, String)> {
    let pick = |f: &dyn Fn(&StepReport) -> Option<f64>| Series {
        label,
        points: reports.iter().filter_map(|r| f(r).map(|y| (r.time, y))).collect(),
    };
    vec![
        (
            "min_distance.svg",
            line_chart("Minimum inter-robot distance", "m", &[pick(&|r| r.min_pair_distance)], Some(safe_radius)),
        ),
        ("lambda2.svg", line_chart("Algebraic connectivity", "lambda2", &[pick(&|r| Some(r.lambda2))], Some(0.0))),
        (
            "perturbation.svg",
            line_chart("Average control perturbation", "(m/s)^2", &[pick(&|r| Some(r.perturbation))], None),
        ),
        (
            "distance_to_target.svg",
            line_chart("Average distance to target", "m", &[pick(&|r| Some(r.mean_dist_to_target))], None),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_well_formed() {
        let svg = line_chart("t", "y", &[Series { label: "a", points: vec![(0.0, 1.0), (1.0, 2.0)] }], Some(1.5));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("M48.00 312.00 L592.00 48.00"));
    }

    #[test]
    fn empty_series_does_not_panic() {
        let svg = line_chart("t", "y", &[Series { label: "a", points: vec![] }], None);
        assert!(svg.contains("</svg>"));
    }
}
