use std::fmt::Write;

use fock_phase::pointset::Tag;
use fock_phase::Complex64;

use crate::{Failure, Loaded};

const SIZE: f64 = 1000.0;
const MARGIN: f64 = 20.0;
const COLORS: [&str; 3] = ["#d62728", "#1f77b4", "#2ca02c"];

struct Canvas {
    radius: f64,
    body: String,
}

impl Canvas {
    fn new(radius: f64) -> Self {
        Self { radius, body: String::new() }
    }

    fn map(&self, z: Complex64) -> (f64, f64) {
        let scale = (SIZE - 2.0 * MARGIN) / (2.0 * self.radius);
        (SIZE / 2.0 + z.re * scale, SIZE / 2.0 - z.im * scale)
    }

    fn dot(&mut self, z: Complex64, r: f64, color: &str) {
        let (x, y) = self.map(z);
        let _ = writeln!(self.body, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{r:.2}" fill="{color}"/>"#);
    }

    fn finish(self, legend: &[(&str, &str)]) -> String {
        let mut s = format!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
        );
        s.push('\n');
        s.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
        s.push('\n');
        s.push_str(&self.body);
        for (k, (label, color)) in legend.iter().enumerate() {
            let y = 30.0 + 20.0 * k as f64;
            let _ = writeln!(s, r#"<circle cx="30" cy="{y}" r="5" fill="{color}"/>"#);
            let _ = writeln!(s, r#"<text x="42" y="{}" font-family="sans-serif" font-size="14">{label}</text>"#, y + 5.0);
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Marker radius shrinking with the number of points on the canvas.
fn dot_radius(count: usize) -> f64 {
    let spacing = (SIZE - 2.0 * MARGIN) / (count.max(1) as f64).sqrt();
    (0.3 * spacing).clamp(0.6, 4.0)
}

pub fn svg(input: &Loaded, mesh: bool) -> Result<String, Failure> {
    match input {
        Loaded::Construction(doc) => {
            let set = doc.samples()?;
            let radius = set.window_radius();
            let mut canvas = Canvas::new(radius);
            if mesh {
                for (_, p) in set.lattice().enumerate(radius) {
                    canvas.dot(p, 1.0, "#bbbbbb");
                }
            }
            let r = dot_radius(set.len());
            for (_, tag, p) in set.points() {
                canvas.dot(p, r, COLORS[tag.slot()]);
            }
            let tags: Vec<Tag> = set.tags();
            let legend: Vec<(&str, &str)> = tags.iter().map(|t| (t.as_str(), COLORS[t.slot()])).collect();
            Ok(canvas.finish(&legend))
        }
        Loaded::Lines(lines) => {
            let mut canvas = Canvas::new(lines.radius);
            let r = dot_radius(lines.points.len());
            for &p in &lines.points {
                canvas.dot(p, r, "#333333");
            }
            Ok(canvas.finish(&[("lines", "#333333")]))
        }
    }
}
