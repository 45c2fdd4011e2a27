//! Run artifacts: per-record CSV, JSON summaries and SVG drawings. All writers
//! produce LF line endings and a fixed column order.

use std::collections::BTreeMap;
use std::fmt::Write;

use dough_core::control::RunLog;
use dough_core::geometry::{Disk, Vec2};
use dough_core::perception::ShapeState;
use dough_core::sim::{ActionKind, RollAction};
use serde::Serialize;

pub const CSV_HEADER: &str = "t,iter,action,Sx,Sy,Sz,Ex,Ey,Ez,iou,max_height,volume,components";

/// One row per record. Record 0 has no action, so its action and point columns are empty.
pub fn log_csv(log: &RunLog) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &log.records {
        let action = r.action.map(|a| a.as_str().to_string()).unwrap_or_default();
        let xyz = |p: Option<dough_core::geometry::Vec3>| match p {
            Some(p) => format!("{},{},{}", p.x, p.y, p.z),
            None => ",,".into(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            r.iteration,
            action,
            xyz(r.start),
            xyz(r.end),
            r.iou,
            r.max_height,
            r.volume,
            r.components
        )
        .unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub seed: u64,
    pub initial_iou: f64,
    pub final_iou: f64,
    pub delta_iou: f64,
    pub final_max_height: f64,
    pub termination: String,
    pub duration: f64,
    pub actions: BTreeMap<String, usize>,
    /// Volume pushed off the workspace, m³.
    pub spilled: f64,
}

impl RunSummary {
    pub fn of(log: &RunLog) -> Self {
        let actions = [ActionKind::Roll, ActionKind::ForwardShrink, ActionKind::SideShrink]
            .into_iter()
            .map(|k| (k.as_str().to_string(), log.action_count(k)))
            .collect();
        Self {
            name: log.name.clone(),
            seed: log.seed,
            initial_iou: log.initial().iou,
            final_iou: log.final_iou(),
            delta_iou: log.final_iou() - log.initial().iou,
            final_max_height: log.last().max_height,
            termination: log.termination.to_string(),
            duration: log.last().t,
            actions,
            spilled: log.spilled,
        }
    }
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

/// File-name friendly form of a condition name.
pub fn slug(name: &str) -> String {
    name.chars()
        .map(|c| match c {
            '/' | '\\' => '_',
            c if c.is_alphanumeric() || c == '.' || c == '-' || c == '_' => c,
            _ => '-',
        })
        .collect()
}

struct Frame {
    min: Vec2,
    max: Vec2,
}

impl Frame {
    /// Workspace meters to drawing millimeters, y up.
    fn x(&self, x: f64) -> f64 {
        (x - self.min.x) * 1000.0
    }

    fn y(&self, y: f64) -> f64 {
        (self.max.y - y) * 1000.0
    }
}

/// Top view of one state: occupied cells, outer contour, target outline and
/// the next planned pin path (S to E), if any.
pub fn snapshot_svg(state: &ShapeState, target: &Disk, next: Option<&RollAction>, caption: &str) -> String {
    let m = &state.mask;
    let f = Frame {
        min: m.origin,
        max: m.origin + Vec2::new(m.cols as f64, m.rows as f64) * m.resolution,
    };
    let (w, h) = (f.x(f.max.x), f.y(f.min.y));
    let res = m.resolution * 1000.0;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w:.3} {h:.3}" width="600" height="600">"#).unwrap();
    writeln!(s, r##"<rect width="{w:.3}" height="{h:.3}" fill="#ffffff"/>"##).unwrap();
    writeln!(s, r##"<defs><marker id="head" markerWidth="6" markerHeight="6" refX="5" refY="3" orient="auto"><path d="M0,0 L6,3 L0,6 z" fill="#d62728"/></marker></defs>"##).unwrap();
    // Runs of occupied cells, one rect each.
    s.push_str(r##"<g fill="#e8b86d">"##);
    s.push('\n');
    for r in 0..m.rows {
        let mut c = 0;
        while c < m.cols {
            if !m.get(r, c) {
                c += 1;
                continue;
            }
            let c0 = c;
            while c < m.cols && m.get(r, c) {
                c += 1;
            }
            let x = f.x(m.origin.x + c0 as f64 * m.resolution);
            let y = f.y(m.origin.y + (r + 1) as f64 * m.resolution);
            writeln!(s, r#"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{res:.3}"/>"#, (c - c0) as f64 * res).unwrap();
        }
    }
    s.push_str("</g>\n");
    if !state.contour.is_empty() {
        let pts: Vec<String> = state.contour.points.iter().map(|p| format!("{:.3},{:.3}", f.x(p.x), f.y(p.y))).collect();
        writeln!(s, r##"<polygon points="{}" fill="none" stroke="#8c564b" stroke-width="0.4"/>"##, pts.join(" ")).unwrap();
    }
    writeln!(
        s,
        r##"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="none" stroke="#1f77b4" stroke-width="0.6" stroke-dasharray="2,1"/>"##,
        f.x(target.center.x),
        f.y(target.center.y),
        target.radius * 1000.0
    )
    .unwrap();
    if let Some(a) = next {
        writeln!(
            s,
            r##"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#d62728" stroke-width="0.8" marker-end="url(#head)"/>"##,
            f.x(a.start.x),
            f.y(a.start.y),
            f.x(a.end.x),
            f.y(a.end.y)
        )
        .unwrap();
    }
    writeln!(s, r#"<text x="3" y="8" font-size="6" font-family="sans-serif">{}</text>"#, escape(caption)).unwrap();
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

/// Line chart of named (x, y) series with a legend.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 200.0, 30.0, 45.0);
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 <= 0.0 {
        y1 = y0 + y0.abs().max(1.0) * 0.1;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{w}" height="{h}" font-family="sans-serif">"#).unwrap();
    writeln!(s, r##"<rect width="{w}" height="{h}" fill="#ffffff"/>"##).unwrap();
    writeln!(s, r#"<text x="{}" y="18" font-size="14" text-anchor="middle">{}</text>"#, left + pw / 2.0, escape(title)).unwrap();
    writeln!(s, r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333333"/>"##).unwrap();
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#, sx(fx), top + ph + 14.0, tick(fx)).unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#, left - 4.0, sy(fy) + 3.0, tick(fy)).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 8.0, escape(x_label)).unwrap();
    writeln!(
        s,
        r#"<text x="14" y="{}" font-size="11" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    )
    .unwrap();
    for (i, (name, p)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" ")).unwrap();
        let ly = top + 12.0 + 14.0 * i as f64;
        writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, w - right + 10.0, w - right + 28.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{}" font-size="9">{}</text>"#, w - right + 32.0, ly + 3.0, escape(name)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else if a < 1.0 {
        format!("{v:.4}")
    } else {
        format!("{v:.1}")
    }
}

/// IoU and max-height over time, one series per log.
pub fn run_plots(logs: &[RunLog]) -> (String, String) {
    let label = |l: &RunLog| format!("{} s{}", l.name, l.seed);
    let iou: Vec<_> = logs.iter().map(|l| (label(l), l.records.iter().map(|r| (r.t, r.iou)).collect())).collect();
    let height: Vec<_> =
        logs.iter().map(|l| (label(l), l.records.iter().map(|r| (r.t, r.max_height * 1000.0)).collect())).collect();
    (
        line_plot("IoU over time", "time [s]", "IoU", &iou),
        line_plot("Maximum dough height", "time [s]", "height [mm]", &height),
    )
}
