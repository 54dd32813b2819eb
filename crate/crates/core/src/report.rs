//! CSV and SVG output for finished runs.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::metrics::{ClassSummary, MetricStore, Point};
use crate::qdisc::TrafficClass;
use crate::scenario::RunResult;
use crate::topology::NodeId;

#[derive(Debug, Error)]
#[error("cannot write {path}: {source}")]
pub struct ReportError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

/// Minimum significant digits printed for every real number.
pub const MIN_SIG_DIGITS: usize = 9;

/// Plain decimal rendering that round-trips through `f64::from_str` and
/// carries at least [`MIN_SIG_DIGITS`] significant digits (zero-padded).
pub fn format_number(x: f64) -> String {
    let mut s = format!("{x}");
    let digits: String = s.chars().filter(char::is_ascii_digit).collect();
    let significant = digits.trim_start_matches('0').len();
    if significant < MIN_SIG_DIGITS {
        if !s.contains('.') {
            s.push('.');
        }
        let pad = if x == 0.0 { MIN_SIG_DIGITS - 1 } else { MIN_SIG_DIGITS - significant };
        s.extend(std::iter::repeat_n('0', pad));
    }
    s
}

/// One metric family for one class (or router).
pub struct Series {
    /// File stem, e.g. `e2e_delay.voice`.
    pub name: String,
    pub title: String,
    pub y_label: String,
    pub points: Vec<Point>,
}

fn class_series(m: &MetricStore, class: TrafficClass) -> Vec<Series> {
    let c = class.name();
    let received = m.traffic_received(class);
    vec![
        Series {
            name: format!("drops.{c}"),
            title: format!("Packets dropped ({c})"),
            y_label: "drops (packets/s)".into(),
            points: m.drops(class).rate,
        },
        Series {
            name: format!("e2e_delay.{c}"),
            title: format!("End-to-end delay ({c})"),
            y_label: "mean delay (s)".into(),
            points: m.delay_series(class),
        },
        Series {
            name: format!("delay_variation.{c}"),
            title: format!("Delay variation ({c})"),
            y_label: "delay variance (s^2)".into(),
            points: m.delay_variation_series(class),
        },
        Series {
            name: format!("jitter.{c}"),
            title: format!("Interarrival jitter ({c})"),
            y_label: "jitter (s)".into(),
            points: m.jitter_series(class),
        },
        Series {
            name: format!("traffic_received_bytes.{c}"),
            title: format!("Traffic received ({c})"),
            y_label: "received (bytes/s)".into(),
            points: received.iter().map(|p| (p.time, p.bytes_per_s)).collect(),
        },
        Series {
            name: format!("traffic_received_packets.{c}"),
            title: format!("Traffic received ({c})"),
            y_label: "received (packets/s)".into(),
            points: received.iter().map(|p| (p.time, p.packets_per_s)).collect(),
        },
    ]
}

fn queuing_series(m: &MetricStore, node: NodeId) -> Option<Series> {
    Some(Series {
        name: format!("queuing_delay.router{node}"),
        title: format!("Queuing delay (router {node})"),
        y_label: "mean queuing delay (s)".into(),
        points: m.queuing_delay(node).ok()?,
    })
}

/// Every series the run produces: per-class families for classes that sent
/// traffic, plus per-router queuing delay when per-hop detail is on.
pub fn all_series(result: &RunResult) -> Vec<Series> {
    let m = &result.metrics;
    let summary = m.summarize();
    let mut out: Vec<Series> = summary
        .classes
        .iter()
        .filter(|(_, s)| s.sent > 0)
        .flat_map(|(c, _)| class_series(m, *c))
        .collect();
    out.extend(m.queuing_nodes().into_iter().filter_map(|n| queuing_series(m, n)));
    out
}

fn opt(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

pub const SUMMARY_HEADER: &str =
    "class,sent,delivered,dropped,mean_delay_s,delay_var_s2,throughput_bps,in_flight,max_delay_s";

fn summary_row(out: &mut String, label: &str, s: &ClassSummary) {
    writeln!(
        out,
        "{label},{},{},{},{},{},{},{},{}",
        s.sent,
        s.delivered,
        s.dropped,
        opt(s.mean_delay),
        opt(s.delay_var),
        format_number(s.throughput_bps),
        s.in_flight,
        opt(s.max_delay),
    )
    .expect("string write");
}

pub fn summary_csv(m: &MetricStore) -> String {
    let summary = m.summarize();
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for (class, s) in &summary.classes {
        summary_row(&mut out, class.name(), s);
    }
    summary_row(&mut out, "total", &summary.total);
    out
}

pub fn series_csv(points: &[Point]) -> String {
    let mut out = String::from("time_s,value\n");
    for &(t, v) in points {
        writeln!(out, "{},{}", format_number(t), format_number(v)).expect("string write");
    }
    out
}

/// Reads back a file written by [`series_csv`].
pub fn parse_series_csv(text: &str) -> Option<Vec<Point>> {
    let mut lines = text.lines();
    if lines.next()? != "time_s,value" {
        return None;
    }
    lines
        .map(|l| {
            let (t, v) = l.split_once(',')?;
            Some((t.parse().ok()?, v.parse().ok()?))
        })
        .collect()
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, ReportError> {
    fs::write(&path, contents).map_err(|source| ReportError {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes `summary.csv` and one `<metric>.<class>.csv` per series.
pub fn emit_csv(result: &RunResult, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    ensure_dir(dir)?;
    let mut files = vec![write(dir.join("summary.csv"), &summary_csv(&result.metrics))?];
    for s in all_series(result) {
        files.push(write(dir.join(format!("{}.csv", s.name)), &series_csv(&s.points))?);
    }
    Ok(files)
}

/// Writes one `<metric>.<class>.svg` line chart per series.
pub fn emit_svg(result: &RunResult, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    ensure_dir(dir)?;
    let end = result.metrics.end().secs();
    all_series(result)
        .into_iter()
        .map(|s| write(dir.join(format!("{}.svg", s.name)), &line_chart(&s, end)))
        .collect()
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    }
}

/// Static line chart over `[0, x_end]`.
pub fn line_chart(series: &Series, x_end: f64) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&series.title)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let _ = writeln!(svg, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#, TOP + plot_h);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">time (s)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(&series.y_label)
    );

    if series.points.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" fill="gray">no data</text>"#,
            LEFT + plot_w / 2.0,
            TOP + plot_h / 2.0
        );
    } else {
        let x_max = series
            .points
            .iter()
            .map(|p| p.0)
            .fold(x_end, f64::max)
            .max(f64::MIN_POSITIVE);
        let y_max = series.points.iter().map(|p| p.1).fold(0.0, f64::max);
        let y_max = if y_max > 0.0 { y_max } else { 1.0 };
        let sx = |x: f64| LEFT + x / x_max * plot_w;
        let sy = |y: f64| TOP + plot_h - y / y_max * plot_h;
        for (x, label) in [(0.0, "0".to_string()), (x_max, tick(x_max))] {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{label}</text>"#,
                sx(x),
                TOP + plot_h + 18.0
            );
        }
        for (y, label) in [(0.0, "0".to_string()), (y_max, tick(y_max))] {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#,
                LEFT - 6.0,
                sy(y) + 4.0
            );
        }
        let points: Vec<String> = series
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Number of vertices in the chart's polyline (0 when it has none).
pub fn polyline_point_count(svg: &str) -> usize {
    svg.split("points=\"")
        .nth(1)
        .and_then(|rest| rest.split('"').next())
        .map(|pts| pts.split_whitespace().count())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_nine_significant_digits() {
        assert_eq!(format_number(0.5), "0.500000000");
        assert_eq!(format_number(8000.0), "8000.00000");
        assert_eq!(format_number(0.0), "0.00000000");
        assert_eq!(format_number(0.0012), "0.00120000000");
        let long = 1.0 / 3.0;
        assert_eq!(format_number(long).parse::<f64>().unwrap(), long);
    }

    #[test]
    fn series_round_trip() {
        let pts = vec![(0.0, 1.0 / 3.0), (1.0, 1e-7), (2.0, 123456.789)];
        assert_eq!(parse_series_csv(&series_csv(&pts)).unwrap(), pts);
    }

    #[test]
    fn empty_chart_says_no_data() {
        let s = Series {
            name: "x".into(),
            title: "t".into(),
            y_label: "y".into(),
            points: vec![],
        };
        let svg = line_chart(&s, 10.0);
        assert!(svg.contains("no data"));
        assert_eq!(polyline_point_count(&svg), 0);
    }

    #[test]
    fn chart_has_one_vertex_per_point() {
        let s = Series {
            name: "x".into(),
            title: "a < b".into(),
            y_label: "y (s)".into(),
            points: vec![(0.0, 1.0), (1.0, 2.0), (2.0, 0.5)],
        };
        let svg = line_chart(&s, 3.0);
        assert_eq!(polyline_point_count(&svg), 3);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains("time (s)"));
    }
}
