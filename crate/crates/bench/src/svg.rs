//! Standalone SVG renderings of ablation surfaces and split-sweep curves.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use jamgraph::dataio::{CurvePoint, DatasetLabel, Surface};

use crate::error::{BenchError, Result};

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn label_text(label: &DatasetLabel) -> String {
    let mode = label.mode.map_or("mixed".to_string(), |m| m.to_string());
    let power = label.power_dbm.map_or("all powers".to_string(), |p| format!("{p} dBm"));
    format!("{} / {mode} / {power}", label.receiver)
}

/// Blue (low) to yellow (high) ramp for `t` in [0, 1].
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(48.0, 253.0), lerp(18.0, 231.0), lerp(140.0, 37.0))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

/// Heat map of MAE over (window, hidden dim) with the value printed in each cell.
pub fn render_surface(surface: &Surface) -> Result<String> {
    if surface.cells.is_empty() {
        return Err(BenchError::Usage("cannot render an empty surface".into()));
    }
    let windows: Vec<usize> = surface.cells.iter().map(|c| c.window).collect::<BTreeSet<_>>().into_iter().collect();
    let dims: Vec<usize> = surface.cells.iter().map(|c| c.hidden_dim).collect::<BTreeSet<_>>().into_iter().collect();
    let (lo, hi) = surface
        .cells
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.mae_cm), hi.max(c.mae_cm)));
    let span = if hi > lo { hi - lo } else { 1.0 };

    let (cw, ch) = (64.0, 40.0);
    let (left, top) = (90.0, 50.0);
    let width = left + cw * windows.len() as f64 + 130.0;
    let height = top + ch * dims.len() as f64 + 70.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{left}" y="25" font-size="14">MAE (cm) by window and hidden dim: {}</text>"#,
        escape(&label_text(&surface.label))
    );
    for (yi, &d) in dims.iter().rev().enumerate() {
        let y = top + ch * yi as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{d}</text>"#,
            left - 8.0,
            y + ch / 2.0 + 4.0
        );
        for (xi, &w) in windows.iter().enumerate() {
            let x = left + cw * xi as f64;
            match surface.cell(w, d) {
                Some(c) => {
                    let _ = writeln!(
                        s,
                        r#"<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="{}" stroke="white"><title>window {w}, hidden {d}: {:.3} cm</title></rect>"#,
                        ramp((c.mae_cm - lo) / span),
                        c.mae_cm
                    );
                    let _ = writeln!(
                        s,
                        r#"<text x="{}" y="{}" text-anchor="middle" fill="black">{:.2}</text>"#,
                        x + cw / 2.0,
                        y + ch / 2.0 + 4.0,
                        c.mae_cm
                    );
                }
                None => {
                    let _ = writeln!(s, r##"<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="#dddddd" stroke="white"/>"##);
                }
            }
        }
    }
    let base = top + ch * dims.len() as f64;
    for (xi, &w) in windows.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{w}</text>"#,
            left + cw * xi as f64 + cw / 2.0,
            base + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">window (s)</text>"#,
        left + cw * windows.len() as f64 / 2.0,
        base + 42.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">hidden dim</text>"#,
        top + ch * dims.len() as f64 / 2.0,
        top + ch * dims.len() as f64 / 2.0
    );
    let bar_x = left + cw * windows.len() as f64 + 30.0;
    for k in 0..10 {
        let t = 1.0 - k as f64 / 9.0;
        let _ = writeln!(
            s,
            r#"<rect x="{bar_x}" y="{}" width="18" height="{}" fill="{}"/>"#,
            top + k as f64 * 12.0,
            12.0,
            ramp(t)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}">{hi:.2}</text>"#, bar_x + 24.0, top + 10.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}">{lo:.2}</text>"#, bar_x + 24.0, top + 118.0);
    let _ = writeln!(s, r#"<text x="{bar_x}" y="{}">MAE (cm)</text>"#, top + 138.0);
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_surface_svg(surface: &Surface, path: &Path) -> Result<()> {
    write_file(path, &render_surface(surface)?)
}

/// One polyline per model: MAE against training fraction.
pub fn render_lines(points: &[CurvePoint]) -> Result<String> {
    if points.is_empty() {
        return Err(BenchError::Usage("cannot plot an empty curve table".into()));
    }
    let mut models: Vec<&str> = Vec::new();
    for p in points {
        if !models.contains(&p.model.as_str()) {
            models.push(&p.model);
        }
    }
    let receivers: BTreeSet<String> = points.iter().map(|p| p.receiver.to_string()).collect();
    let (x_lo, x_hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.train_fraction), b.max(p.train_fraction)));
    let y_hi = points.iter().fold(0.0_f64, |a, p| a.max(p.mae_cm)) * 1.1;
    let y_hi = if y_hi > 0.0 { y_hi } else { 1.0 };
    let x_span = if x_hi > x_lo { x_hi - x_lo } else { 1.0 };

    let (left, top, pw, ph) = (70.0, 45.0, 480.0, 300.0);
    let sx = |x: f64| left + (x - x_lo) / x_span * pw;
    let sy = |y: f64| top + ph - y / y_hi * ph;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">"#,
        left + pw + 150.0,
        top + ph + 60.0
    );
    let title = receivers.into_iter().collect::<Vec<_>>().join(", ");
    let _ = writeln!(
        s,
        r#"<text x="{left}" y="25" font-size="14">MAE by train fraction: {}</text>"#,
        escape(&title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{left} {top} V{} H{}" fill="none" stroke="black"/>"#,
        top + ph,
        left + pw
    );
    for k in 0..=4 {
        let y = y_hi * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{y:.1}</text>"#,
            left - 6.0,
            sy(y) + 4.0
        );
    }
    let xs: BTreeSet<u64> = points.iter().map(|p| p.train_fraction.to_bits()).collect();
    for bits in xs {
        let x = f64::from_bits(bits);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{x:.1}</text>"#,
            sx(x),
            top + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">train fraction (split ratio)</text>"#,
        left + pw / 2.0,
        top + ph + 42.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">MAE (cm)</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (k, model) in models.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let mut pts: Vec<&CurvePoint> = points.iter().filter(|p| p.model == *model).collect();
        pts.sort_by(|a, b| a.train_fraction.total_cmp(&b.train_fraction));
        let coords: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.train_fraction), sy(p.mae_cm)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            coords.join(" ")
        );
        let ly = top + 14.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            left + pw + 15.0,
            left + pw + 40.0,
            left + pw + 46.0,
            ly + 4.0,
            escape(model)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_lines_svg(points: &[CurvePoint], path: &Path) -> Result<()> {
    write_file(path, &render_lines(points)?)
}
