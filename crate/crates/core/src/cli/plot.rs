//! Trace plots: every successful objective in blue, the best so far in red.

use std::fmt::Write as _;

use crate::evaluator::Status;
use crate::optimizer::best_so_far;
use crate::perfdb::EvalRecord;

use super::CliError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 56.0;
const TICKS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub index: usize,
    /// Set for successful evaluations only.
    pub objective: Option<f64>,
    /// Unset until the first successful evaluation.
    pub best_so_far: Option<f64>,
}

pub fn trace_rows(records: &[EvalRecord]) -> Result<Vec<TraceRow>, CliError> {
    let best = best_so_far(records)?;
    let first = best[0].0;
    Ok(records
        .iter()
        .map(|r| TraceRow {
            index: r.index,
            objective: r.objective.filter(|_| r.status == Status::Ok),
            best_so_far: (r.index >= first).then(|| best[r.index - first].1),
        })
        .collect())
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        (lo - pad, hi + pad)
    }
}

fn decimals(step: f64) -> usize {
    (2.0 - step.log10().floor()).clamp(0.0, 9.0) as usize
}

fn points(pts: impl Iterator<Item = (f64, f64)>) -> String {
    pts.map(|(x, y)| format!("{x:.2},{y:.2}")).collect::<Vec<_>>().join(" ")
}

/// A standalone SVG document. `rows` must hold at least one objective.
pub fn render_svg(rows: &[TraceRow]) -> String {
    let ok: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.objective.map(|v| (r.index as f64, v)))
        .collect();
    let best: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.best_so_far.map(|v| (r.index as f64, v)))
        .collect();
    let (x0, x1) = span(
        rows.first().map_or(1.0, |r| r.index as f64),
        rows.last().map_or(1.0, |r| r.index as f64),
    );
    let lo = ok.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = ok.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (y0, y1) = span(lo, hi);

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    let xd = if x1 - x0 >= TICKS as f64 { 0 } else { decimals((x1 - x0) / TICKS as f64) };
    let yd = decimals((y1 - y0) / TICKS as f64);
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let xv = x0 + t * (x1 - x0);
        let x = sx(xv);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{b2:.2}" stroke="black"/><text x="{x:.2}" y="{ty:.2}" text-anchor="middle">{xv:.xd$}</text>"#,
            b = TOP + ph,
            b2 = TOP + ph + 5.0,
            ty = TOP + ph + 20.0,
        );
        let yv = y0 + t * (y1 - y0);
        let y = sy(yv);
        let _ = writeln!(
            s,
            r#"<line x1="{l2:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{tx:.2}" y="{ty:.2}" text-anchor="end">{yv:.yd$}</text>"#,
            l2 = LEFT - 5.0,
            tx = LEFT - 8.0,
            ty = y + 4.0,
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Evaluation</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 16 {cy:.2})">Runtime (s)</text>"#,
        cy = TOP + ph / 2.0
    );
    let _ = writeln!(
        s,
        r#"<polyline class="all" fill="none" stroke="blue" stroke-width="1" points="{}"/>"#,
        points(ok.iter().map(|&(x, y)| (sx(x), sy(y))))
    );
    let _ = writeln!(
        s,
        r#"<polyline class="best" fill="none" stroke="red" stroke-width="2" points="{}"/>"#,
        points(best.iter().map(|&(x, y)| (sx(x), sy(y))))
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perfdb::Clock;
    use crate::space::Configuration;

    fn rec(index: usize, objective: Option<f64>, status: Status) -> EvalRecord {
        EvalRecord {
            index,
            config: Configuration::from_slots(vec![Some(index)]),
            objective,
            elapsed: 0.0,
            status,
            duplicate_of: None,
            timestamp: Clock::Logical.stamp(index),
        }
    }

    fn polyline_points(svg: &str, class: &str) -> usize {
        let tag = format!(r#"class="{class}""#);
        let line = svg.lines().find(|l| l.contains(&tag)).unwrap();
        let pts = line.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
        pts.split_whitespace().count()
    }

    #[test]
    fn failures_are_skipped_but_best_continues() {
        let records = [
            rec(1, None, Status::CompileError),
            rec(2, Some(0.5), Status::Ok),
            rec(3, None, Status::Timeout),
            rec(4, Some(0.7), Status::Ok),
            rec(5, Some(0.2), Status::Ok),
        ];
        let rows = trace_rows(&records).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0].best_so_far, None);
        let best: Vec<_> = rows.iter().filter_map(|r| r.best_so_far).collect();
        assert_eq!(best, [0.5, 0.5, 0.5, 0.2]);
        let svg = render_svg(&rows);
        assert_eq!(polyline_points(&svg, "all"), 3);
        assert_eq!(polyline_points(&svg, "best"), 4);
        assert!(svg.contains(">Evaluation<") && svg.contains(">Runtime (s)<"));
    }

    #[test]
    fn single_record_is_a_valid_document() {
        let rows = trace_rows(&[rec(1, Some(0.3), Status::Ok)]).unwrap();
        let svg = render_svg(&rows);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(polyline_points(&svg, "all"), 1);
        assert_eq!(polyline_points(&svg, "best"), 1);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn no_success_is_an_error() {
        let r = trace_rows(&[rec(1, None, Status::RunError)]);
        assert!(matches!(r, Err(CliError::NoSuccessfulEvaluation)));
    }
}
