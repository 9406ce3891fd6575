//! Minimal static SVG plotting for the tree and service-band figures.
//! No axes machinery beyond hour gridlines and a value scale; these files
//! are diagnostics, not publication graphics.

use crate::scenario::ScenarioTree;
use std::fmt::Write as _;
use std::path::Path;

const PALETTE: [&str; 6] = ["#c23b3b", "#2f7d32", "#2b5fb0", "#b07d2b", "#7d2bb0", "#2bb0a0"];

/// Escape text destined for an SVG text node.
fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    width: f64,
    height: f64,
    margin: f64,
    t_max: f64,
    v_min: f64,
    v_max: f64,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        self.margin + t / self.t_max * (self.width - 2.0 * self.margin)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.v_max - self.v_min).max(1e-9);
        self.height - self.margin - (v - self.v_min) / span * (self.height - 2.0 * self.margin)
    }
}

fn path_data(frame: &Frame, points: &[(f64, f64)]) -> String {
    let mut d = String::new();
    for (k, &(t, v)) in points.iter().enumerate() {
        let cmd = if k == 0 { 'M' } else { 'L' };
        let _ = write!(d, "{cmd}{:.2} {:.2} ", frame.x(t), frame.y(v));
    }
    d
}

fn header(width: f64, height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn gridlines(out: &mut String, frame: &Frame, hours: usize) {
    for h in 0..=hours {
        let x = frame.x(h as f64);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
             stroke=\"#cccccc\" stroke-width=\"0.5\"/>",
            frame.y(frame.v_max),
            frame.y(frame.v_min)
        );
        let _ = writeln!(
            out,
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"9\" text-anchor=\"middle\" \
             fill=\"#555555\">{h}</text>",
            frame.height - frame.margin / 3.0
        );
    }
    for v in [frame.v_min, 0.5 * (frame.v_min + frame.v_max), frame.v_max] {
        let _ = writeln!(
            out,
            "<text x=\"2\" y=\"{:.2}\" font-size=\"9\" fill=\"#555555\">{v:.0}</text>",
            frame.y(v)
        );
    }
}

/// Tree figure: every edge centroid as a curve segment, shaded by the
/// bundle error band, with the per-stage node budget printed on top.
pub fn write_tree_svg(tree: &ScenarioTree, path: &Path) -> std::io::Result<()> {
    let (width, height, margin) = (760.0, 420.0, 34.0);
    let samples_per_hour = 16usize;

    let mut v_min = f64::INFINITY;
    let mut v_max = f64::NEG_INFINITY;
    for &v in &tree.edge_nodes() {
        let node = &tree.nodes[v];
        let xi = node.edge_xi.as_ref().unwrap();
        let eps = node.edge_eps.as_ref().unwrap();
        let spread: f64 = eps.iter().cloned().fold(0.0, f64::max);
        let (lo, hi) = xi.hull_bounds();
        v_min = v_min.min(lo - spread);
        v_max = v_max.max(hi + spread);
    }
    if !v_min.is_finite() {
        v_min = 0.0;
        v_max = 1.0;
    }
    let frame = Frame { width, height, margin, t_max: tree.horizon as f64, v_min, v_max };

    let mut out = header(width, height);
    gridlines(&mut out, &frame, tree.horizon);
    for (idx, &v) in tree.edge_nodes().iter().enumerate() {
        let node = &tree.nodes[v];
        let xi = node.edge_xi.as_ref().unwrap();
        let eps = node.edge_eps.as_ref().unwrap();
        let t0 = (node.stage - 1) as f64;
        let color = PALETTE[idx % PALETTE.len()];

        let eval_shifted = |shift: f64, k: usize| {
            let x = k as f64 / samples_per_hour as f64;
            let value: f64 = (0..xi.coeffs().len())
                .map(|i| {
                    (xi.coeffs()[i] + shift * eps[i])
                        * crate::bernstein::basis_eval(i, xi.degree(), x).unwrap()
                })
                .sum();
            (t0 + x, value)
        };
        let upper: Vec<(f64, f64)> =
            (0..=samples_per_hour).map(|k| eval_shifted(1.0, k)).collect();
        let mut lower: Vec<(f64, f64)> =
            (0..=samples_per_hour).map(|k| eval_shifted(-1.0, k)).collect();
        lower.reverse();
        let mut region = upper.clone();
        region.extend(lower);
        let _ = writeln!(
            out,
            "<path d=\"{}Z\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>",
            path_data(&frame, &region)
        );
        let center: Vec<(f64, f64)> =
            (0..=samples_per_hour).map(|k| eval_shifted(0.0, k)).collect();
        let _ = writeln!(
            out,
            "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.4\"/>",
            path_data(&frame, &center)
        );
    }
    for (h, &c) in tree.stage_counts.iter().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\" \
             fill=\"#333333\">c={c}</text>",
            frame.x(h as f64 + 0.5),
            margin * 0.6
        );
    }
    out.push_str("</svg>\n");
    std::fs::write(path, out)
}

/// Service-band figure: shaded feasible region, the test trajectory, and
/// the aggregate schedule.
pub fn write_band_svg(
    band: &[(f64, f64, f64)],
    load: &[(f64, f64)],
    schedule: Option<&[(f64, f64)]>,
    title: &str,
    path: &Path,
) -> std::io::Result<()> {
    let (width, height, margin) = (760.0, 420.0, 34.0);
    let t_max = band.last().map(|&(t, _, _)| t).unwrap_or(1.0).max(1.0);
    let mut v_min = f64::INFINITY;
    let mut v_max = f64::NEG_INFINITY;
    for &(_, lo, hi) in band {
        v_min = v_min.min(lo);
        v_max = v_max.max(hi);
    }
    for &(_, v) in load {
        v_min = v_min.min(v);
        v_max = v_max.max(v);
    }
    let frame = Frame { width, height, margin, t_max, v_min, v_max };

    let mut out = header(width, height);
    gridlines(&mut out, &frame, t_max.ceil() as usize);
    let upper: Vec<(f64, f64)> = band.iter().map(|&(t, _, hi)| (t, hi)).collect();
    let mut lower: Vec<(f64, f64)> = band.iter().map(|&(t, lo, _)| (t, lo)).collect();
    lower.reverse();
    let mut region = upper;
    region.extend(lower);
    let _ = writeln!(
        out,
        "<path d=\"{}Z\" fill=\"#888888\" fill-opacity=\"0.35\" stroke=\"none\"/>",
        path_data(&frame, &region)
    );
    if let Some(sched) = schedule {
        let _ = writeln!(
            out,
            "<path d=\"{}\" fill=\"none\" stroke=\"#d98a16\" stroke-width=\"1.2\" \
             stroke-dasharray=\"6 3\"/>",
            path_data(&frame, sched)
        );
    }
    let _ = writeln!(
        out,
        "<path d=\"{}\" fill=\"none\" stroke=\"#2f7d32\" stroke-width=\"1.6\"/>",
        path_data(&frame, load)
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" \
         fill=\"#222222\">{}</text>",
        width / 2.0,
        margin * 0.6,
        escape(title)
    );
    out.push_str("</svg>\n");
    std::fs::write(path, out)
}
