//! Minimal SVG line chart: success probability against `rho`, one polyline
//! per `n`.

use std::fmt::Write as _;
use std::path::Path;

use super::{Aggregate, ExperimentError};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn render_chart(aggs: &[Aggregate]) -> Result<String, ExperimentError> {
    if aggs.is_empty() {
        return Err(ExperimentError::EmptyTable);
    }
    let mut ns: Vec<usize> = aggs.iter().map(|a| a.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let (mut lo, mut hi) = aggs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), a| (l.min(a.rho), h.max(a.rho)));
    if hi - lo < 1e-12 {
        lo -= 0.05;
        hi += 0.05;
    }
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let px = |rho: f64| MARGIN + (rho - lo) / (hi - lo) * plot_w;
    let py = |p: f64| HEIGHT - MARGIN - p * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{l} {t} V{b} H{r}" fill="none" stroke="black"/>"#,
        l = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for tick in 0..=4 {
        let p = tick as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" text-anchor="end">{p}</text>"#,
            x = MARGIN - 6.0,
            y = py(p) + 4.0
        );
        let rho = lo + p * (hi - lo);
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" text-anchor="middle">{rho:.3}</text>"#,
            x = px(rho),
            y = HEIGHT - MARGIN + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{x}" y="{y}" text-anchor="middle">rho</text>"#,
        x = WIDTH / 2.0,
        y = HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{y}" transform="rotate(-90 16 {y})" text-anchor="middle">success probability</text>"#,
        y = HEIGHT / 2.0
    );
    for (idx, &n) in ns.iter().enumerate() {
        let colour = PALETTE[idx % PALETTE.len()];
        let mut pts: Vec<&Aggregate> = aggs.iter().filter(|a| a.n == n).collect();
        pts.sort_by(|a, b| a.rho.total_cmp(&b.rho));
        let path: Vec<String> = pts
            .iter()
            .map(|a| format!("{:.2},{:.2}", px(a.rho), py(a.p_success)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            path.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" fill="{colour}">N = {n}</text>"#,
            x = WIDTH - MARGIN - 90.0,
            y = MARGIN + 16.0 * (idx as f64 + 1.0)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Renders and writes the chart; nothing is written for an empty table.
pub fn write_chart(path: impl AsRef<Path>, aggs: &[Aggregate]) -> Result<(), ExperimentError> {
    let svg = render_chart(aggs)?;
    std::fs::write(path, svg)?;
    Ok(())
}
