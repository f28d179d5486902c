//! Standalone SVG rendering of depth-versus-depth scatters.
//!
//! The output is a self-contained SVG document: one marker per pooled
//! curve, the (0,0)-(1,1) reference line, and axis labels naming the two
//! reference samples. Marker coordinates are written with six decimal
//! places so renders can be compared structurally.

use std::fmt::Write as _;

use crate::ddplot::DdPlot;

const SIZE: f64 = 640.0;
const MARGIN: f64 = 60.0;
const SPAN: f64 = SIZE - 2.0 * MARGIN;

fn x_px(v: f64) -> f64 {
    MARGIN + v * SPAN
}

fn y_px(v: f64) -> f64 {
    MARGIN + (1.0 - v) * SPAN
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render a DD-plot as an SVG document. `label_a` and `label_b` name the
/// first and second reference samples.
pub fn render_ddplot_svg(dd: &DdPlot, label_a: &str, label_b: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"  <rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);

    // frame and ticks
    let _ = writeln!(
        s,
        r#"  <rect x="{m}" y="{m}" width="{w}" height="{w}" fill="none" stroke="black" stroke-width="1"/>"#,
        m = MARGIN,
        w = SPAN
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            s,
            r#"  <line x1="{x:.6}" y1="{y0}" x2="{x:.6}" y2="{y1}" stroke="black" stroke-width="1"/>"#,
            x = x_px(tick),
            y0 = SIZE - MARGIN,
            y1 = SIZE - MARGIN + 6.0
        );
        let _ = writeln!(
            s,
            r#"  <text x="{x:.6}" y="{y}" font-size="12" text-anchor="middle">{tick}</text>"#,
            x = x_px(tick),
            y = SIZE - MARGIN + 20.0
        );
        let _ = writeln!(
            s,
            r#"  <line x1="{x0}" y1="{y:.6}" x2="{x1}" y2="{y:.6}" stroke="black" stroke-width="1"/>"#,
            x0 = MARGIN - 6.0,
            x1 = MARGIN,
            y = y_px(tick)
        );
        let _ = writeln!(
            s,
            r#"  <text x="{x}" y="{y:.6}" font-size="12" text-anchor="end" dominant-baseline="middle">{tick}</text>"#,
            x = MARGIN - 10.0,
            y = y_px(tick)
        );
    }

    // (0,0)-(1,1) reference line
    let _ = writeln!(
        s,
        r#"  <line class="diagonal" x1="{x0:.6}" y1="{y0:.6}" x2="{x1:.6}" y2="{y1:.6}" stroke="gray" stroke-width="1" stroke-dasharray="6,4"/>"#,
        x0 = x_px(0.0),
        y0 = y_px(0.0),
        x1 = x_px(1.0),
        y1 = y_px(1.0)
    );

    // markers: first sample's curves, then second sample's
    let n = dd.n();
    let _ = writeln!(s, r##"  <g class="sample-a" fill="#1f77b4" fill-opacity="0.75">"##);
    for &(dx, dy) in &dd.points()[..n] {
        let _ = writeln!(
            s,
            r#"    <circle cx="{:.6}" cy="{:.6}" r="3"/>"#,
            x_px(dx),
            y_px(dy)
        );
    }
    let _ = writeln!(s, "  </g>");
    let _ = writeln!(s, r##"  <g class="sample-b" fill="#d62728" fill-opacity="0.75">"##);
    for &(dx, dy) in &dd.points()[n..] {
        let _ = writeln!(
            s,
            r#"    <circle cx="{:.6}" cy="{:.6}" r="3"/>"#,
            x_px(dx),
            y_px(dy)
        );
    }
    let _ = writeln!(s, "  </g>");

    // axis labels name the reference samples
    let _ = writeln!(
        s,
        r#"  <text x="{x}" y="{y}" font-size="14" text-anchor="middle">depth wrt {label}</text>"#,
        x = SIZE / 2.0,
        y = SIZE - 15.0,
        label = escape(label_a)
    );
    let _ = writeln!(
        s,
        r#"  <text x="15" y="{y}" font-size="14" text-anchor="middle" transform="rotate(-90 15 {y})">depth wrt {label}</text>"#,
        y = SIZE / 2.0,
        label = escape(label_b)
    );
    let _ = writeln!(
        s,
        r#"  <text x="{x}" y="30" font-size="14" text-anchor="middle">DD-plot ({method}, n={n}, m={m})</text>"#,
        x = SIZE / 2.0,
        method = dd.method(),
        n = dd.n(),
        m = dd.m()
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{make_grid, simulate_sample, MeanFunction, ModelSpec};
    use crate::ddplot::build_ddplot;
    use crate::depth::DepthConfig;
    use crate::seed::RngSeed;

    fn markers(svg: &str) -> Vec<(f64, f64)> {
        svg.lines()
            .filter(|l| l.trim_start().starts_with("<circle"))
            .map(|l| {
                let cx = l.split("cx=\"").nth(1).unwrap().split('"').next().unwrap();
                let cy = l.split("cy=\"").nth(1).unwrap().split('"').next().unwrap();
                (cx.parse().unwrap(), cy.parse().unwrap())
            })
            .collect()
    }

    #[test]
    fn identical_samples_render_on_the_diagonal() {
        let grid = make_grid(0.0, 1.0, 10).unwrap();
        let spec = ModelSpec {
            mean: MeanFunction::Peak32,
            delta: 0.0,
            amp: 0.3,
            rate: 3.33,
        };
        let f = simulate_sample(&spec, 8, &grid, RngSeed(1)).unwrap();
        let dd = build_ddplot(&f, &f, &DepthConfig::Fm).unwrap();
        let svg = render_ddplot_svg(&dd, "a.csv", "b.csv");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("class=\"diagonal\""));
        assert!(svg.contains("depth wrt a.csv"));
        let pts = markers(&svg);
        assert_eq!(pts.len(), 16);
        // a diagonal depth pair maps to cx + cy = canvas size
        for (cx, cy) in pts {
            assert!((cx + cy - 640.0).abs() < 1e-3, "({cx}, {cy})");
        }
    }

    #[test]
    fn renders_one_marker_per_pooled_curve() {
        let grid = make_grid(0.0, 1.0, 10).unwrap();
        let spec = ModelSpec {
            mean: MeanFunction::Peak32,
            delta: 0.0,
            amp: 0.3,
            rate: 3.33,
        };
        let f = simulate_sample(&spec, 5, &grid, RngSeed(2)).unwrap();
        let g = simulate_sample(&spec, 7, &grid, RngSeed(3)).unwrap();
        let dd = build_ddplot(&f, &g, &DepthConfig::Fm).unwrap();
        let svg = render_ddplot_svg(&dd, "f", "g");
        assert_eq!(markers(&svg).len(), 12);
        // determinism
        assert_eq!(svg, render_ddplot_svg(&dd, "f", "g"));
    }
}
