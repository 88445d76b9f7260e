use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::ReportError;
use crate::metrics::StabilityCurve;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Plot area geometry.
struct Frame {
    x_min: f64,
    x_max: f64,
}

impl Frame {
    fn x(&self, interval: f64) -> f64 {
        let span = WIDTH - LEFT - RIGHT;
        if self.x_max > self.x_min {
            LEFT + (interval - self.x_min) / (self.x_max - self.x_min) * span
        } else {
            LEFT + span / 2.0
        }
    }

    fn y(&self, ratio: f64) -> f64 {
        TOP + (1.0 - ratio.clamp(0.0, 1.0)) * (HEIGHT - TOP - BOTTOM)
    }
}

/// Keep ratio versus frame interval, one polyline per labelled curve.
pub fn stability_svg(curves: &[(String, StabilityCurve)]) -> Result<String, ReportError> {
    if curves.is_empty() {
        return Err(ReportError::EmptyCurve(String::new()));
    }
    if let Some((label, _)) = curves.iter().find(|(_, c)| c.points.is_empty()) {
        return Err(ReportError::EmptyCurve(label.clone()));
    }
    let mut ticks: Vec<usize> = curves
        .iter()
        .flat_map(|(_, c)| c.points.iter().map(|p| p.interval))
        .collect();
    ticks.sort_unstable();
    ticks.dedup();
    let frame = Frame {
        x_min: ticks[0] as f64,
        x_max: *ticks.last().expect("non-empty") as f64,
    };

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">Sustained stability</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0
    );

    // horizontal gridlines and y ticks
    let _ = writeln!(s, r##"<g class="grid" stroke="#dddddd" stroke-width="1">"##);
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let y = frame.y(v);
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/>"#,
            WIDTH - RIGHT
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="y-ticks" text-anchor="end">"#);
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{v:.1}</text>"#,
            LEFT - 6.0,
            frame.y(v) + 4.0
        );
    }
    let _ = writeln!(s, "</g>");

    // axes
    let x_axis_y = frame.y(0.0);
    let _ = writeln!(
        s,
        r#"<g class="axes" stroke="black" stroke-width="1"><line x1="{LEFT:.2}" y1="{TOP:.2}" x2="{LEFT:.2}" y2="{x_axis_y:.2}"/><line x1="{LEFT:.2}" y1="{x_axis_y:.2}" x2="{:.2}" y2="{x_axis_y:.2}"/></g>"#,
        WIDTH - RIGHT
    );
    let _ = writeln!(s, r#"<g class="x-ticks" text-anchor="middle">"#);
    for t in &ticks {
        let x = frame.x(*t as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{x_axis_y:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}">{t}</text>"#,
            x_axis_y + 5.0,
            x_axis_y + 18.0
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">frame interval</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">keep_ratio</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        (TOP + HEIGHT - BOTTOM) / 2.0
    );

    for (i, (label, curve)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|p| {
                format!(
                    "{:.2},{:.2}",
                    frame.x(p.interval as f64),
                    frame.y(p.mean_keep_ratio)
                )
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="curve" data-label="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            escape(label),
            pts.join(" ")
        );
        for p in &curve.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                frame.x(p.interval as f64),
                frame.y(p.mean_keep_ratio)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(label)
        );
    }
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

pub fn plot_stability(curves: &[(String, StabilityCurve)], path: &Path) -> Result<(), ReportError> {
    let s = stability_svg(curves)?;
    fs::write(path, s).map_err(|e| ReportError::io(path, e))
}

/// y coordinate of the `keep_ratio = 1` gridline.
pub fn top_gridline_y() -> f64 {
    TOP
}
