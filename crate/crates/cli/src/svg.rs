//! Ternary-plot SVG for three-strategy trajectories.
//!
//! A state `x` maps to `u = x2 + x3/2`, `v = (√3/2) x3`, so the first vertex
//! sits at the origin, the second at `(1, 0)` and the third at the apex.

use std::fmt::Write as _;
use std::path::Path;

use evodyn_core::Trajectory64;

use crate::error::{CliError, Result};
use crate::table::write_text;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 693.0;
/// Pixel length of a triangle side.
pub const SIDE: f64 = 600.0;
const LEFT: f64 = (WIDTH - SIDE) / 2.0;
const BASELINE: f64 = HEIGHT - 70.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Unit-side Cartesian coordinates of a point on the 2-simplex.
pub fn ternary_uv(x: &[f64]) -> (f64, f64) {
    (x[1] + x[2] / 2.0, 3f64.sqrt() / 2.0 * x[2])
}

/// Pixel position in the SVG viewport (y grows downward).
pub fn to_pixels((u, v): (f64, f64)) -> (f64, f64) {
    (LEFT + SIDE * u, BASELINE - SIDE * v)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders every trajectory as a polyline; `labels[i]` names trajectory `i`
/// in the legend (missing labels fall back to `trajectory i`).
pub fn render_ternary_svg(trajectories: &[Trajectory64], labels: &[String]) -> Result<String> {
    for t in trajectories {
        if let Some(n) = t.dim().filter(|n| *n != 3) {
            return Err(CliError::Dimension { found: n });
        }
    }
    let corners = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].map(|c| to_pixels(ternary_uv(&c)));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<polygon points="{:.3},{:.3} {:.3},{:.3} {:.3},{:.3}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        corners[0].0, corners[0].1, corners[1].0, corners[1].1, corners[2].0, corners[2].1
    );
    let font = r#"font-family="sans-serif" font-size="16""#;
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" {font} text-anchor="end">x1</text>"#,
        corners[0].0 - 8.0,
        corners[0].1 + 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" {font} text-anchor="start">x2</text>"#,
        corners[1].0 + 8.0,
        corners[1].1 + 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" {font} text-anchor="middle">x3</text>"#,
        corners[2].0,
        corners[2].1 - 10.0
    );

    for (i, t) in trajectories.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let pixels: Vec<(f64, f64)> = t
            .records
            .iter()
            .map(|r| to_pixels(ternary_uv(r.state.coords())))
            .collect();
        let Some(&(sx, sy)) = pixels.first() else { continue };
        let points: Vec<String> = pixels.iter().map(|(px, py)| format!("{px:.3},{py:.3}")).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.2"/>"#,
            points.join(" ")
        );
        let _ = writeln!(s, r#"<circle cx="{sx:.3}" cy="{sy:.3}" r="3" fill="{colour}"/>"#);
    }

    for (i, _) in trajectories.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let label = labels
            .get(i)
            .cloned()
            .unwrap_or_else(|| format!("trajectory {}", i + 1));
        let y = 30.0 + 22.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="20" y1="{y:.3}" x2="48" y2="{y:.3}" stroke="{colour}" stroke-width="3"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="56" y="{:.3}" font-family="sans-serif" font-size="14">{}</text>"#,
            y + 5.0,
            escape(&label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_ternary_svg(trajectories: &[Trajectory64], labels: &[String], path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &render_ternary_svg(trajectories, labels)?)
}
