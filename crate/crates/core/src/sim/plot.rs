//! Static SVG renderings of a trace: belief heatmap, flown path, camera
//! wedge and true target positions.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::trace::{ExecutionTrace, TraceError};

const PIXELS: f64 = 600.0;
const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Renders step `time` of `trace`. The heatmap uses the latest belief
/// snapshot at or before `time`, drawing each cell with the largest
/// per-target mass, scaled to the maximum cell.
pub fn render_step(trace: &ExecutionTrace, time: usize) -> Result<String, TraceError> {
    let step = trace
        .steps
        .get(time)
        .ok_or_else(|| TraceError::Structure(format!("trace has no step {time}")))?;
    let area = trace.header.area;
    let scale = PIXELS / area.width.max(area.height);
    let (w, h) = (area.width * scale, area.height * scale);
    // World y grows upward; SVG y grows downward.
    let px = |p: [f64; 2]| (p[0] * scale, h - p[1] * scale);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{:.0}" viewBox="0 0 {w:.2} {:.2}">"#,
        h + 24.0,
        h + 24.0
    );
    let _ = writeln!(svg, r#"<rect width="{w:.2}" height="{h:.2}" fill="white"/>"#);

    let snapshot = trace.steps[..=time]
        .iter()
        .rev()
        .find_map(|s| s.beliefs.as_ref());
    if let Some(beliefs) = snapshot.filter(|b| !b.is_empty()) {
        let g = beliefs[0].geometry;
        let combined: Vec<f64> = (0..g.cells())
            .map(|c| beliefs.iter().map(|b| b.mass[c]).fold(0.0, f64::max))
            .collect();
        let peak = combined.iter().cloned().fold(0.0, f64::max);
        if peak > 0.0 {
            let side = g.cell_size * scale;
            for (c, &m) in combined.iter().enumerate() {
                let level = m / peak;
                if level < 0.01 {
                    continue;
                }
                let center = g.center(c);
                let (x, y) = px([center[0] - g.cell_size / 2.0, center[1] + g.cell_size / 2.0]);
                let _ = writeln!(
                    svg,
                    r##"<rect x="{x:.2}" y="{y:.2}" width="{side:.2}" height="{side:.2}" fill="#000080" fill-opacity="{level:.3}"/>"##
                );
            }
        }
    }

    // Camera wedge at this step.
    let agent = step.agent;
    let s = &trace.header.sensor;
    let (ax, ay) = px([agent.x, agent.y]);
    let edge = |a: f64| px([agent.x + s.range * a.cos(), agent.y + s.range * a.sin()]);
    let (lx, ly) = edge(agent.heading + s.half_angle);
    let (rx, ry) = edge(agent.heading - s.half_angle);
    let r = s.range * scale;
    let large = if s.half_angle > std::f64::consts::FRAC_PI_2 { 1 } else { 0 };
    let _ = writeln!(
        svg,
        r##"<path d="M {ax:.2} {ay:.2} L {rx:.2} {ry:.2} A {r:.2} {r:.2} 0 {large} 0 {lx:.2} {ly:.2} Z" fill="#ffd700" fill-opacity="0.35" stroke="#b8860b"/>"##
    );

    let path: Vec<String> = trace.steps[..=time]
        .iter()
        .map(|s| {
            let (x, y) = px([s.agent.x, s.agent.y]);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="black" stroke-width="2"/>"#,
        path.join(" ")
    );
    let _ = writeln!(svg, r#"<circle cx="{ax:.2}" cy="{ay:.2}" r="4" fill="black"/>"#);

    for (i, p) in step.truth.iter().enumerate() {
        let (x, y) = px(*p);
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            svg,
            r#"<path d="M {:.2} {:.2} L {:.2} {:.2} M {:.2} {:.2} L {:.2} {:.2}" stroke="{color}" stroke-width="3"/>"#,
            x - 6.0,
            y - 6.0,
            x + 6.0,
            y + 6.0,
            x - 6.0,
            y + 6.0,
            x + 6.0,
            y - 6.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="{color}">{}</text>"#,
            x + 8.0,
            y - 8.0,
            escape(&trace.header.targets[i])
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="4" y="{:.2}" font-size="14">{} t={time} value={:.3}</text>"#,
        h + 18.0,
        escape(&trace.header.scenario),
        step.monitored
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `step_<t>.svg` for each requested time (every snapshot step when
/// `times` is empty) and returns the paths written.
pub fn write_plots(
    trace: &ExecutionTrace,
    times: &[usize],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, TraceError> {
    if trace.steps.is_empty() {
        return Err(TraceError::Structure("trace has no steps".into()));
    }
    let selected: Vec<usize> = if times.is_empty() {
        trace
            .steps
            .iter()
            .filter(|s| s.beliefs.is_some())
            .map(|s| s.time)
            .collect()
    } else {
        times.to_vec()
    };
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for t in selected {
        let svg = render_step(trace, t)?;
        let path = out_dir.join(format!("step_{t:03}.svg"));
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}
