//! Phase portraits as standalone SVG, written by hand so the bytes depend
//! only on the inputs.

use std::fmt::Write;

use anyhow::{bail, Result};

use radial_core::dynamics::Trajectory;
use radial_core::manifolds::{ManifoldCurve, Side};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Style {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub stroke: f64,
    /// Drop points farther than this from the origin.
    pub clip_radius: f64,
}

impl Default for Style {
    fn default() -> Self {
        Style { width: 640.0, height: 640.0, margin: 40.0, stroke: 1.5, clip_radius: 6.0 }
    }
}

fn colour(side: Side) -> &'static str {
    match side {
        Side::UnstablePlus => "#c0392b",
        Side::UnstableMinus => "#e67e22",
        Side::StablePlus => "#2471a3",
        Side::StableMinus => "#17a589",
    }
}

struct Frame {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
    style: Style,
}

impl Frame {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (self.style.margin + (x - self.x0) * self.sx, self.style.height - self.style.margin - (y - self.y0) * self.sy)
    }
}

fn polyline(out: &mut String, frame: &Frame, pts: &[(f64, f64)], colour: &str, class: &str, width: f64) {
    if pts.len() < 2 {
        return;
    }
    let mut d = String::new();
    for (i, &(x, y)) in pts.iter().enumerate() {
        let (px, py) = frame.map(x, y);
        let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "" } else { " " }, px, py);
    }
    let _ = writeln!(
        out,
        r#"  <polyline class="{class}" fill="none" stroke="{colour}" stroke-width="{width:.2}" points="{d}"/>"#
    );
}

/// One drawn polyline.
pub struct Series {
    pub name: String,
    pub class: String,
    pub colour: String,
    pub width: f64,
    pub points: Vec<(f64, f64)>,
}

/// Render curves in `(x, y)` together with trajectories and the marked
/// points `O` and `±P`.
pub fn render_portrait(curves: &[ManifoldCurve], trajectories: &[Trajectory], p_point: Option<(f64, f64)>, style: &Style) -> Result<String> {
    if curves.iter().all(|c| c.samples.is_empty()) && trajectories.iter().all(|t| t.states.len() < 2) {
        bail!("nothing to draw");
    }
    let clip = |(x, y): &(f64, f64)| x.hypot(*y) <= style.clip_radius;
    let mut series = Vec::new();
    for c in curves {
        series.push(Series {
            name: c.side.name().to_string(),
            class: c.side.name().to_string(),
            colour: colour(c.side).to_string(),
            width: style.stroke,
            points: std::iter::once((0.0, 0.0)).chain(c.samples.iter().map(|s| (s.state.x, s.state.y))).filter(clip).collect(),
        });
    }
    for t in trajectories {
        series.push(Series {
            name: "trajectory".into(),
            class: "trajectory".into(),
            colour: "#555555".into(),
            width: style.stroke * 0.6,
            points: t.states.iter().map(|s| (s.x, s.y)).filter(clip).collect(),
        });
    }
    let mut marks = vec![("O", (0.0, 0.0))];
    if let Some((x, y)) = p_point {
        marks.push(("P+", (x, y)));
        marks.push(("P-", (-x, -y)));
    }
    Ok(plot(&series, &marks, ("x", "y"), true, style))
}

/// Unstable curve and the stable branches shifted by multiples of `2π`,
/// drawn in the `(Θ, R)` plane.
pub fn render_overlay(unstable: &ManifoldCurve, stables: &[&ManifoldCurve], k_max: usize, style: &Style) -> Result<String> {
    if unstable.samples.is_empty() {
        bail!("nothing to draw");
    }
    let clip = |(_, r): &(f64, f64)| *r <= style.clip_radius;
    let mut series = vec![Series {
        name: unstable.side.name().to_string(),
        class: unstable.side.name().to_string(),
        colour: colour(unstable.side).to_string(),
        width: style.stroke,
        points: unstable.samples.iter().map(|s| (s.theta, s.r)).filter(clip).collect(),
    }];
    for j in 0..=k_max {
        let side = if j % 2 == 0 { Side::StablePlus } else { Side::StableMinus };
        let shift = -2.0 * (j / 2) as f64 * std::f64::consts::PI;
        if let Some(c) = stables.iter().find(|c| c.side == side) {
            series.push(Series {
                name: c.side.name().to_string(),
                class: format!("shifted-{j}"),
                colour: colour(side).to_string(),
                width: style.stroke,
                points: c.samples.iter().map(|s| (s.theta + shift, s.r)).filter(clip).collect(),
            });
        }
    }
    Ok(plot(&series, &[], ("Theta", "R"), false, style))
}

fn plot(series: &[Series], marks: &[(&str, (f64, f64))], labels: (&str, &str), square: bool, style: &Style) -> String {
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in series.iter().flat_map(|s| s.points.iter()).chain(marks.iter().map(|m| &m.1)) {
        lo = (lo.0.min(x), lo.1.min(y));
        hi = (hi.0.max(x), hi.1.max(y));
    }
    if !lo.0.is_finite() {
        lo = (-1.0, -1.0);
        hi = (1.0, 1.0);
    }
    let inner = (style.width.min(style.height) - 2.0 * style.margin).max(1.0);
    let (sx, sy) = if square {
        let span = ((hi.0 - lo.0).max(hi.1 - lo.1) * 1.05).max(1e-9);
        (inner / span, inner / span)
    } else {
        (inner / (hi.0 - lo.0).max(1e-9), inner / (hi.1 - lo.1).max(1e-9))
    };
    let frame = Frame { x0: lo.0, y0: lo.1, sx, sy, style: *style };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = style.width,
        h = style.height
    );
    let _ = writeln!(out, r#"  <rect width="100%" height="100%" fill="white"/>"#);
    let ax = if lo.1 <= 0.0 && hi.1 >= 0.0 { 0.0 } else { lo.1 };
    let ay = if lo.0 <= 0.0 && hi.0 >= 0.0 { 0.0 } else { lo.0 };
    let (x0, y0) = frame.map(lo.0, ax);
    let (x1, _) = frame.map(hi.0, ax);
    let (vx, vy0) = frame.map(ay, lo.1);
    let (_, vy1) = frame.map(ay, hi.1);
    let _ = writeln!(out, r##"  <line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="#888" stroke-width="0.8"/>"##);
    let _ = writeln!(out, r##"  <line class="axis" x1="{vx:.2}" y1="{vy0:.2}" x2="{vx:.2}" y2="{vy1:.2}" stroke="#888" stroke-width="0.8"/>"##);
    let _ = writeln!(out, r#"  <text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#, x1 - 12.0, y0 - 4.0, labels.0);
    let _ = writeln!(out, r#"  <text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#, vx + 4.0, vy1 + 12.0, labels.1);

    for s in series {
        polyline(&mut out, &frame, &s.points, &s.colour, &s.class, s.width);
    }
    for (name, (x, y)) in marks {
        let (px, py) = frame.map(*x, *y);
        let _ = writeln!(out, r#"  <circle class="fixed-point" cx="{px:.2}" cy="{py:.2}" r="3" fill="black"/>"#);
        let _ = writeln!(out, r#"  <text x="{:.2}" y="{:.2}" font-size="12">{name}</text>"#, px + 5.0, py - 5.0);
    }

    let mut entries: Vec<(&str, &str)> = Vec::new();
    for s in series {
        let e = (s.name.as_str(), s.colour.as_str());
        if !entries.contains(&e) {
            entries.push(e);
        }
    }
    let _ = writeln!(out, r#"  <g class="legend" font-size="12">"#);
    for (i, (name, col)) in entries.iter().enumerate() {
        let y = style.margin * 0.5 + 16.0 * i as f64;
        let x = style.width - style.margin - 120.0;
        let _ = writeln!(out, r#"    <line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{col}" stroke-width="2"/>"#, x + 20.0);
        let _ = writeln!(out, r#"    <text x="{:.2}" y="{:.2}">{name}</text>"#, x + 26.0, y + 4.0);
    }
    let _ = writeln!(out, "  </g>");
    out.push_str("</svg>\n");
    out
}
