//! Static SVG line chart of the rolling mean return.

use std::fmt::Write as _;

use super::curve::rolling_means;
use crate::domain::EpisodeRecord;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

pub fn render_svg(records: &[EpisodeRecord], window: usize, threshold: Option<f64>) -> String {
    let window = window.min(records.len()).max(1);
    let points: Vec<(f64, f64)> = rolling_means(records, window)
        .into_iter()
        .enumerate()
        .filter_map(|(i, m)| m.map(|m| (i as f64, m)))
        .collect();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="24" font-family="sans-serif" font-size="14">rolling {window}-episode mean return</text>"#
    );
    if points.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }

    let x_max = (records.len().max(2) - 1) as f64;
    let mut y_min = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let mut y_max = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if let Some(t) = threshold {
        y_min = y_min.min(t);
        y_max = y_max.max(t);
    }
    if y_max - y_min < 1e-9 {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let sx = |x: f64| MARGIN + x / x_max * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_min) / (y_max - y_min) * (HEIGHT - 2.0 * MARGIN);

    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{b}" stroke="black"/>"#,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="4" y="{:.1}" font-family="sans-serif" font-size="11">{y_max:.2}</text><text x="4" y="{:.1}" font-family="sans-serif" font-size="11">{y_min:.2}</text>"#,
        sy(y_max) + 4.0,
        sy(y_min)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">episode {}</text>"#,
        WIDTH - MARGIN - 60.0,
        HEIGHT - MARGIN + 20.0,
        records.len()
    );
    if let Some(t) = threshold {
        let _ = writeln!(
            svg,
            r#"<line x1="{MARGIN}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="gray" stroke-dasharray="4 4"/>"#,
            y = sy(t),
            r = WIDTH - MARGIN
        );
    }
    svg.push_str(r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points=""#);
    for (i, (x, y)) in points.iter().enumerate() {
        if i > 0 {
            svg.push(' ');
        }
        let _ = write!(svg, "{:.2},{:.2}", sx(*x), sy(*y));
    }
    svg.push_str("\"/>\n</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_polyline() {
        let records: Vec<_> = (0..20)
            .map(|i| EpisodeRecord {
                episode: i,
                steps: 1,
                undiscounted_return: i as f64,
                epsilon: 1.0,
                mean_loss: 0.0,
            })
            .collect();
        let svg = render_svg(&records, 5, Some(10.0));
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polyline"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(render_svg(&[], 100, None).contains("</svg>"));
    }
}
