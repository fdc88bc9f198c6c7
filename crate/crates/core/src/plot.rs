//! SVG line chart of a trajectory: one polyline per type.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::io::TrajectoryTable;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the table as an SVG document. The output depends only on the
/// table, so identical inputs give byte-identical documents.
pub fn render_plot(table: &TrajectoryTable) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let cols = table.columns.len();
    for (i, row) in table.rows.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::ColumnMismatch {
                row: i + 1,
                expected: cols + 1,
                found: row.len() + 1,
            });
        }
    }
    let t0 = table.times[0] as f64;
    let t1 = *table.times.last().unwrap() as f64;
    let span = if t1 > t0 { t1 - t0 } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |t: f64| LEFT + (t - t0) / span * plot_w;
    let sy = |y: f64| TOP + (1.0 - y.clamp(0.0, 1.0)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    // Axes.
    let (x0, y0) = (LEFT, TOP + plot_h);
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.2} {TOP:.2} L{x0:.2} {y0:.2} L{:.2} {y0:.2}" stroke="black" fill="none"/>"#,
        LEFT + plot_w
    );
    for i in 0..=4 {
        let y = i as f64 / 4.0;
        let py = sy(y);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{y:.2}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0
        );
    }
    let ticks = if t1 > t0 { 4 } else { 0 };
    for i in 0..=ticks {
        let t = t0 + span * i as f64 / 4.0;
        let px = sx(t);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 20.0,
            t.round() as u64
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">step t</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">mass</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    // Series.
    let single = table.rows.len() == 1;
    for (c, name) in table.columns.iter().enumerate() {
        let color = PALETTE[c % PALETTE.len()];
        if single {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#,
                sx(t0),
                sy(table.rows[0][c])
            );
        } else {
            let points: Vec<String> = table
                .times
                .iter()
                .zip(&table.rows)
                .map(|(&t, row)| format!("{:.2},{:.2}", sx(t as f64), sy(row[c])))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                points.join(" ")
            );
        }
        let ly = TOP + 10.0 + 18.0 * c as f64;
        let lx = WIDTH - RIGHT + 20.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: Vec<Vec<f64>>) -> TrajectoryTable {
        TrajectoryTable {
            columns: (0..rows[0].len()).map(|i| format!("x{i}")).collect(),
            times: (0..rows.len() as u64).collect(),
            rows,
        }
    }

    #[test]
    fn single_row_draws_markers() {
        let svg = render_plot(&table(vec![vec![0.5, 0.5]])).unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn one_polyline_per_type_with_legend() {
        let svg = render_plot(&table(vec![vec![0.4, 0.2, 0.4], vec![0.45, 0.1, 0.45]])).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains(">x2</text>"));
        assert!(svg.contains(">mass</text>") && svg.contains(">step t</text>"));
    }

    #[test]
    fn errors() {
        let empty = TrajectoryTable {
            columns: vec!["x0".into()],
            times: vec![],
            rows: vec![],
        };
        assert!(matches!(render_plot(&empty), Err(Error::EmptyTrajectory)));
        let mut bad = table(vec![vec![0.5, 0.5], vec![1.0, 0.0]]);
        bad.rows[1].pop();
        assert!(matches!(render_plot(&bad), Err(Error::ColumnMismatch { row: 2, .. })));
    }

    #[test]
    fn names_are_escaped() {
        let mut t = table(vec![vec![1.0]]);
        t.columns = vec!["<a&b>".into()];
        assert!(render_plot(&t).unwrap().contains("&lt;a&amp;b&gt;"));
    }
}
