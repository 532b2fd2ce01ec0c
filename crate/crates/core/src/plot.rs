//! Minimal SVG rendering of a p-value grid: p against m, one marker series
//! per lag, with the significance reference line.

use std::fmt::Write;

use crate::grid::PValueGrid;

pub const REFERENCE_P: f64 = 0.05;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

pub fn render_grid_svg(grid: &PValueGrid) -> String {
    let m_min = grid.cells.iter().map(|c| c.m).min().unwrap_or(1) as f64;
    let m_max = grid.cells.iter().map(|c| c.m).max().unwrap_or(1) as f64;
    let span = (m_max - m_min).max(1.0);
    let x = |m: f64| MARGIN + (m - m_min) / span * (WIDTH - 2.0 * MARGIN);
    let y = |p: f64| HEIGHT - MARGIN - p.clamp(0.0, 1.0) * (HEIGHT - 2.0 * MARGIN);

    let mut taus: Vec<usize> = grid.cells.iter().map(|c| c.tau).collect();
    taus.sort_unstable();
    taus.dedup();

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-reference-p="{REFERENCE_P}">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, grid.name());
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, y(0.0), y(1.0));
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for m in grid.cells.iter().map(|c| c.m).collect::<std::collections::BTreeSet<_>>() {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{m}</text>"#,
            x(m as f64),
            y0 + 15.0
        );
    }
    for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{p}</text>"#,
            x0 - 5.0,
            y(p) + 3.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">m</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let yr = y(REFERENCE_P);
    let _ = writeln!(
        s,
        r#"<line class="reference" x1="{x0}" y1="{yr:.1}" x2="{x1}" y2="{yr:.1}" stroke="blue" stroke-dasharray="4 2"/>"#
    );
    for (i, tau) in taus.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        for c in grid.cells.iter().filter(|c| c.tau == *tau) {
            if let Some(p) = c.p_value {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"><title>m={} tau={} p={p}</title></circle>"#,
                    x(c.m as f64),
                    y(p),
                    c.m,
                    c.tau
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" fill="{color}">tau={tau}</text>"#,
            x1 - 50.0,
            MARGIN + 14.0 * i as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Comparison, GridCell};
    use crate::quantifiers::Statistic;

    #[test]
    fn svg_has_reference_line_and_points() {
        let cell = |m, tau, p| GridCell {
            m,
            tau,
            p_value: p,
            u_statistic: None,
            method: None,
            note: None,
        };
        let grid = PValueGrid {
            comparison: Comparison::IntragroupFwdVsRev,
            statistic: Statistic::PermutationEntropy,
            groups: vec!["A".into()],
            direction: None,
            algorithm: None,
            surrogate_mode: None,
            cells: vec![cell(1, 1, Some(1.0)), cell(2, 1, Some(0.01)), cell(2, 2, None)],
        };
        let svg = render_grid_svg(&grid);
        assert!(svg.contains(r#"data-reference-p="0.05""#));
        assert!(svg.contains(r#"class="reference""#));
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
