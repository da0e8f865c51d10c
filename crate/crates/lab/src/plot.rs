//! Self-contained SVG line plots over run records.

use std::fmt::Write as _;

use crate::error::LabError;
use crate::runner::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    NashGap,
    TrainLoglik,
    ExpectedTv,
    ExpertQueries,
    WallMs,
}

impl Metric {
    pub const NAMES: &'static [&'static str] =
        &["nash_gap", "train_loglik", "expected_tv_to_expert", "expert_queries", "wall_ms"];

    pub fn parse(s: &str) -> Result<Self, LabError> {
        Ok(match s {
            "nash_gap" => Self::NashGap,
            "train_loglik" => Self::TrainLoglik,
            "expected_tv_to_expert" => Self::ExpectedTv,
            "expert_queries" => Self::ExpertQueries,
            "wall_ms" => Self::WallMs,
            other => {
                return Err(LabError::Config(format!(
                    "unknown metric {other:?}; registered: {}",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::NashGap => "nash_gap",
            Self::TrainLoglik => "train_loglik",
            Self::ExpectedTv => "expected_tv_to_expert",
            Self::ExpertQueries => "expert_queries",
            Self::WallMs => "wall_ms",
        }
    }

    fn of(self, r: &RunRecord) -> Option<f64> {
        match self {
            Self::NashGap => r.nash_gap,
            Self::TrainLoglik => r.train_loglik,
            Self::ExpectedTv => r.expected_tv_to_expert,
            Self::ExpertQueries => r.expert_queries.map(|q| q as f64),
            Self::WallMs => r.wall_ms,
        }
    }
}

/// Mean and population standard deviation across seeds at one budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<Point>,
}

/// Groups records by (env, feature map, algorithm) in order of first
/// appearance and aggregates `metric` per budget. Failed runs and empty
/// cells are skipped.
pub fn aggregate(records: &[RunRecord], metric: Metric) -> Vec<Series> {
    let mut series: Vec<(String, Vec<(usize, Vec<f64>)>)> = Vec::new();
    for r in records.iter().filter(|r| !r.is_error()) {
        let Some(v) = metric.of(r) else { continue };
        let label = format!("{} / {} / {}", r.env, r.feature_map, r.algorithm);
        let idx = match series.iter().position(|(l, _)| *l == label) {
            Some(i) => i,
            None => {
                series.push((label, Vec::new()));
                series.len() - 1
            }
        };
        let cells = &mut series[idx].1;
        match cells.iter_mut().find(|(b, _)| *b == r.budget) {
            Some((_, vs)) => vs.push(v),
            None => cells.push((r.budget, vec![v])),
        }
    }
    series
        .into_iter()
        .map(|(label, mut cells)| {
            cells.sort_by_key(|(b, _)| *b);
            let points = cells
                .into_iter()
                .map(|(b, vs)| {
                    let n = vs.len() as f64;
                    let mean = vs.iter().sum::<f64>() / n;
                    let var = vs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    Point { x: b as f64, mean, std: var.sqrt(), n: vs.len() }
                })
                .collect();
            Series { label, points }
        })
        .collect()
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 250.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Line plot of `metric` against budget, one line per series with a
/// mean ± std band.
pub fn emit_plot(records: &[RunRecord], metric: Metric, log_x: bool) -> Result<String, LabError> {
    if records.is_empty() {
        return Err(LabError::Argument("cannot plot an empty record list".into()));
    }
    let series = aggregate(records, metric);
    let pts: Vec<&Point> = series.iter().flat_map(|s| &s.points).collect();
    if pts.is_empty() {
        return Err(LabError::Argument(format!("no successful runs report {}", metric.name())));
    }
    if log_x && pts.iter().any(|p| p.x <= 0.0) {
        return Err(LabError::Argument("log x axis needs positive budgets".into()));
    }
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let (mut x0, mut x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
        (a.min(tx(p.x)), b.max(tx(p.x)))
    });
    let (mut y0, mut y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
        (a.min(p.mean - p.std), b.max(p.mean + p.std))
    });
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (tx(x) - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    // x ticks at the budgets actually present
    let mut xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for &x in &xs {
        let px = sx(x);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{b:.2}" x2="{px:.2}" y2="{t:.2}" stroke="black"/><text x="{px:.2}" y="{l:.2}" text-anchor="middle">{x}</text>"#,
            b = TOP + ph,
            t = TOP + ph + 5.0,
            l = TOP + ph + 18.0,
        );
    }
    for i in 0..=5 {
        let y = y0 + (y1 - y0) * i as f64 / 5.0;
        let py = sy(y);
        let _ = writeln!(
            s,
            r##"<line x1="{a:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><line x1="{LEFT}" y1="{py:.2}" x2="{r:.2}" y2="{py:.2}" stroke="#dddddd"/><text x="{t:.2}" y="{ty:.2}" text-anchor="end">{y:.3}</text>"##,
            a = LEFT - 5.0,
            r = LEFT + pw,
            t = LEFT - 8.0,
            ty = py + 4.0,
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">budget{}</text>"#,
        LEFT + pw / 2.0,
        H - 10.0,
        if log_x { " (log scale)" } else { "" }
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        metric.name()
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let upper = ser.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.mean + p.std)));
        let lower = ser.points.iter().rev().map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.mean - p.std)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> =
            ser.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.mean))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        for p in &ser.points {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(p.x), sy(p.mean));
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(seed: u64, budget: usize, gap: f64) -> RunRecord {
        RunRecord {
            seed,
            env: "chain{len=8}".into(),
            feature_map: "tabular".into(),
            algorithm: "bc".into(),
            budget,
            expert_queries: Some(1),
            nash_gap: Some(gap),
            train_loglik: Some(0.0),
            expected_tv_to_expert: Some(0.0),
            wall_ms: None,
            error: None,
        }
    }

    #[test]
    fn population_std() {
        let recs = [rec(1, 10, 1.0), rec(2, 10, 3.0), rec(1, 20, 2.0)];
        let s = aggregate(&recs, Metric::NashGap);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].points[0], Point { x: 10.0, mean: 2.0, std: 1.0, n: 2 });
        assert_eq!(s[0].points[1].std, 0.0);
    }

    #[test]
    fn errors_skipped() {
        let mut bad = rec(3, 10, 100.0);
        bad.error = Some("x".into());
        let s = aggregate(&[rec(1, 10, 1.0), bad], Metric::NashGap);
        assert_eq!(s[0].points[0].n, 1);
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let recs = [rec(1, 10, 1.0), rec(2, 10, 3.0), rec(1, 100, 2.0)];
        let svg = emit_plot(&recs, Metric::NashGap, true).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<polygon").count(), 1);
    }

    #[test]
    fn empty_records_rejected() {
        assert!(matches!(emit_plot(&[], Metric::NashGap, false), Err(LabError::Argument(_))));
        assert!(Metric::parse("gap").is_err());
    }
}
