//! Minimal SVG line charts of one metric against SUT distance.

use std::fmt::Write as _;

use super::report::CsvRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Plr,
    MeanLatency,
    P99Latency,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Plr, Metric::MeanLatency, Metric::P99Latency];

    pub fn column(self) -> &'static str {
        match self {
            Metric::Plr => "plr",
            Metric::MeanLatency => "mean_latency_us",
            Metric::P99Latency => "p99_latency_us",
        }
    }

    fn axis_label(self) -> &'static str {
        match self {
            Metric::Plr => "fraction of dropped packets",
            Metric::MeanLatency => "mean latency [us]",
            Metric::P99Latency => "99th percentile latency [us]",
        }
    }

    pub fn value(self, row: &CsvRow) -> Option<f64> {
        match self {
            Metric::Plr => row.plr,
            Metric::MeanLatency => row.mean_latency_us,
            Metric::P99Latency => row.p99_latency_us,
        }
    }
}

/// One line on the chart: `(x, y)` points, `None` where there is no data.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, Option<f64>)>,
}

impl Series {
    pub fn from_rows(label: impl Into<String>, rows: &[CsvRow], metric: Metric) -> Self {
        Series {
            label: label.into(),
            points: rows.iter().map(|r| (r.bin as f64, metric.value(r))).collect(),
        }
    }
}

const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];
const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders `series` as an SVG 1.1 document. Missing points split a series
/// into separate polylines.
pub fn emit_chart(series: &[Series], metric: Metric, title: &str) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x0, x1) = extent(xs);
    let ys = series.iter().flat_map(|s| s.points.iter().filter_map(|p| p.1));
    let (mut y0, y1) = extent(ys);
    y0 = y0.min(0.0);
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let sy = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (bx, by) = (LEFT, H - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<path d="M{bx} {TOP} L{bx} {by} L{} {by}" stroke="black" fill="none"/>"#,
        W - RIGHT
    );
    for i in 0..=5 {
        let x = x0 + (x1 - x0) * i as f64 / 5.0;
        let y = y0 + (y1 - y0) * i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{x:.0}</text>"#,
            sx(x),
            by + 16.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#,
            bx - 6.0,
            sy(y) + 4.0,
            if y1 - y0 < 10.0 { format!("{y:.3}") } else { format!("{y:.0}") }
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">SUT distance from AP [m]</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        (TOP + by) / 2.0,
        (TOP + by) / 2.0,
        metric.axis_label()
    );

    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        for run in s.points.split(|p| p.1.is_none()).filter(|r| !r.is_empty()) {
            let pts: Vec<String> = run
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y.expect("split on None"))))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
        }
        let ly = TOP + 14.0 + 16.0 * k as f64;
        let lx = W - RIGHT - 120.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-size="11">{}</text></g>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
