//! Minimal SVG line charts of log channels.

use std::fmt::Write;

use super::log::{LogRow, TimeSeriesLog};
use crate::error::{Error, Result};

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
/// Upper bound on drawn points per chart; longer logs are strided.
pub const MAX_POINTS: usize = 2000;

/// Channels with a default plot.
pub const PLOT_CHANNELS: [&str; 7] = ["e", "e_n", "e_p", "f_cmd", "f_c", "ratio", "theta_deg"];

/// Every channel [`render_channel`] accepts.
pub const CHANNELS: [&str; 11] =
    ["e", "e_n", "e_p", "theta_deg", "f_cmd", "f_c", "f_true", "tau_x", "tau_y", "tau_z", "ratio"];

fn value(row: &LogRow, channel: &str) -> Option<f64> {
    match channel {
        "e" => Some(row.e),
        "e_n" => Some(row.e_n),
        "e_p" => Some(row.e_p),
        "theta_deg" => Some(row.theta_deg),
        "f_cmd" => Some(row.f_cmd),
        "f_c" => Some(row.f_c),
        "f_true" => Some(row.f_true),
        "tau_x" => Some(row.tau_x),
        "tau_y" => Some(row.tau_y),
        "tau_z" => Some(row.tau_z),
        "ratio" => row.ratio,
        _ => None,
    }
}

/// Renders one channel against time. Missing values break the line.
pub fn render_channel(log: &TimeSeriesLog, channel: &str) -> Result<String> {
    if !CHANNELS.contains(&channel) {
        return Err(Error::invalid(format!("no plottable channel `{channel}`")));
    }
    let stride = log.rows.len().div_ceil(MAX_POINTS).max(1);
    let points: Vec<(f64, Option<f64>)> = log.rows.iter().step_by(stride).map(|r| (r.t, value(r, channel))).collect();

    let ts = points.iter().map(|p| p.0);
    let vs = points.iter().filter_map(|p| p.1);
    let (t0, t1) = bounds(ts);
    let (v0, v1) = bounds(vs);
    let (t1, v1) = (if t1 > t0 { t1 } else { t0 + 1.0 }, if v1 > v0 { v1 } else { v0 + 1.0 });
    let sx = |t: f64| MARGIN + (t - t0) / (t1 - t0) * (WIDTH - 2.0 * MARGIN);
    let sy = |v: f64| HEIGHT - MARGIN - (v - v0) / (v1 - v0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(svg, r#"<path d="M{x0} {y0} L{x0} {y1} L{x1} {y1}" fill="none" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<text x="{x0}" y="30" font-family="sans-serif" font-size="14">{channel}</text>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{x0}" y="{}" font-family="sans-serif" font-size="11">t = {t0:.2} s</text>"#,
        y1 + 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{x1}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{t1:.2} s</text>"#,
        y1 + 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{y1}" font-family="sans-serif" font-size="11" text-anchor="end">{v0:.3}</text>"#,
        x0 - 4.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{v1:.3}</text>"#,
        x0 - 4.0,
        y0 + 4.0
    );

    for run in points.split(|p| p.1.is_none()).filter(|r| !r.is_empty()) {
        let mut d = String::new();
        for (t, v) in run.iter().filter_map(|(t, v)| v.map(|v| (*t, v))) {
            let _ = write!(d, "{:.2},{:.2} ", sx(t), sy(v));
        }
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="steelblue"/>"#, d.trim_end());
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values
        .fold(None, |acc: Option<(f64, f64)>, v| Some(acc.map_or((v, v), |(lo, hi)| (lo.min(v), hi.max(v)))))
        .unwrap_or((0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::log::tests::row;

    #[test]
    fn renders_fixed_viewbox() {
        let mut log = TimeSeriesLog::new();
        for k in 0..10 {
            log.push(row(k as f64, 10.0 - k as f64)).unwrap();
        }
        let svg = render_channel(&log, "e").unwrap();
        assert!(svg.contains(r#"viewBox="0 0 800 400""#));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("50.00,50.00"));
        assert!(svg.contains("750.00,350.00"));
    }

    #[test]
    fn long_logs_are_strided() {
        let mut log = TimeSeriesLog::new();
        for k in 0..10 * MAX_POINTS {
            log.push(row(k as f64, 1.0)).unwrap();
        }
        let svg = render_channel(&log, "e").unwrap();
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        assert_eq!(line.matches(',').count(), MAX_POINTS);
    }

    #[test]
    fn null_values_split_the_line() {
        let mut log = TimeSeriesLog::new();
        for k in 0..9 {
            let mut r = row(k as f64, 1.0);
            r.ratio = (k != 4).then_some(k as f64);
            log.push(r).unwrap();
        }
        assert_eq!(render_channel(&log, "ratio").unwrap().matches("<polyline").count(), 2);
    }

    #[test]
    fn empty_log_and_unknown_channel() {
        assert!(render_channel(&TimeSeriesLog::new(), "f_c").unwrap().ends_with("</svg>\n"));
        assert!(render_channel(&TimeSeriesLog::new(), "coil_x").is_err());
    }
}
