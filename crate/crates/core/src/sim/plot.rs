//! Tracking-error-over-time plot data from telemetry files, as CSV or SVG.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use super::telemetry::Telemetry;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Extracts `(t, err)` pairs, skipping rows without a reference.
pub fn error_series(label: &str, telemetry: &Telemetry) -> io::Result<ErrorSeries> {
    let missing = |c: &str| io::Error::new(io::ErrorKind::InvalidData, format!("telemetry has no '{c}' column"));
    let t = telemetry.column_index("t").ok_or_else(|| missing("t"))?;
    let e = telemetry.column_index("err").ok_or_else(|| missing("err"))?;
    let points: Vec<_> = telemetry.rows.iter().map(|r| (r[t], r[e])).filter(|(_, e)| e.is_finite()).collect();
    if points.is_empty() {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("{label}: no tracking reference in telemetry")));
    }
    Ok(ErrorSeries { label: label.to_string(), points })
}

/// Long-format CSV: `vehicle,t,error`.
pub fn to_csv(series: &[ErrorSeries]) -> String {
    let mut out = String::from("vehicle,t,error\n");
    for s in series {
        for (t, e) in &s.points {
            let _ = writeln!(out, "{},{t:.16e},{e:.16e}", s.label);
        }
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Line chart of tracking error against time.
pub fn to_svg(series: &[ErrorSeries]) -> String {
    let (w, h) = (800.0, 420.0);
    let (left, right, top, bottom) = (70.0, 20.0, 20.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;

    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut t0, mut t1, mut e1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(t, e) in all {
        t0 = t0.min(t);
        t1 = t1.max(t);
        e1 = e1.max(e);
    }
    if !(t1 > t0) {
        t1 = t0 + 1.0;
    }
    if e1 <= 0.0 {
        e1 = 1.0;
    }
    e1 *= 1.05;
    let x = |t: f64| left + (t - t0) / (t1 - t0) * pw;
    let y = |e: f64| top + ph - e / e1 * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let (tx, ey) = (t0 + f * (t1 - t0), f * e1);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{tx:.1}</text>"#,
            x(tx),
            top + ph + 18.0
        );
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{ey:.3}</text>"#, left - 6.0, y(ey) + 4.0);
        let _ = writeln!(
            svg,
            r##"<line x1="{left}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="#ddd"/>"##,
            left + pw,
            y(ey),
            y(ey)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">time [s]</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">position error [m]</text>"#,
        top + ph / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut pts = String::new();
        for &(t, e) in &s.points {
            let _ = write!(pts, "{:.2},{:.2} ", x(t), y(e));
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            pts.trim_end()
        );
        let ly = top + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" x2="{:.1}" y1="{ly:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            left + pw - 120.0,
            left + pw - 100.0,
            left + pw - 94.0,
            ly + 4.0,
            xml_escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes SVG when `out` ends in `.svg`, CSV otherwise.
pub fn write_plot(out: &Path, series: &[ErrorSeries]) -> io::Result<()> {
    let svg = out.extension().is_some_and(|e| e.eq_ignore_ascii_case("svg"));
    let text = if svg { to_svg(series) } else { to_csv(series) };
    std::fs::write(out, text)
}
