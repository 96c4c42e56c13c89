//! Space-time SVG diagrams.

use std::fmt::Write;

use pushblock::io::{GrowthDoc, Species};
use pushblock::particles::ParticleTrajectory;

const W: f64 = 800.0;
const H: f64 = 500.0;
const PAD: f64 = 40.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64>, y1: f64) -> Self {
        let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if !x0.is_finite() {
            (x0, x1) = (-1.0, 1.0);
        }
        if x1 - x0 < 1e-9 {
            x0 -= 1.0;
            x1 += 1.0;
        }
        Self { x0, x1, y0: 0.0, y1: y1.max(1.0) }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn open(title: &str, f: &Frame, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{PAD}" y="20" font-family="sans-serif" font-size="14">{title}</text>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{:.2},{:.2} H{:.2} M{:.2},{:.2} V{:.2}" stroke="black" fill="none"/>"#,
        PAD,
        H - PAD,
        W - PAD,
        PAD,
        H - PAD,
        PAD
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">x in [{:.3}, {:.3}]</text>"#, W / 2.0 - 60.0, H - 10.0, f.x0, f.x1);
    let _ = writeln!(s, r#"<text x="5" y="{:.2}" font-family="sans-serif" font-size="12">{ylabel}</text>"#, PAD - 8.0);
    s
}

/// Height profiles `h_t` drawn as step functions, one per step, shaded by `t`.
pub fn growth_svg(doc: &GrowthDoc) -> String {
    let xs = doc.steps.iter().flat_map(|p| p.inc.iter().chain(&p.dec).copied());
    let top = doc.steps.iter().map(|p| p.inc.len()).max().unwrap_or(0) as f64;
    let f = Frame::new(xs, top + 1.0);
    let mut s = open("height profiles", &f, "h");
    let last = doc.steps.len().saturating_sub(1).max(1) as f64;
    for p in &doc.steps {
        let mut events: Vec<(f64, i64)> = p.inc.iter().map(|&x| (x, 1)).chain(p.dec.iter().map(|&x| (x, -1))).collect();
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut d = format!("M{:.2},{:.2}", f.px(f.x0), f.py(0.0));
        let mut h = 0i64;
        for (x, dh) in events {
            h += dh;
            let _ = write!(d, " H{:.2} V{:.2}", f.px(x), f.py(h as f64));
        }
        let _ = write!(d, " H{:.2}", f.px(f.x1));
        let shade = (200.0 * (1.0 - p.t as f64 / last)) as u8;
        let _ = writeln!(s, r#"<path d="{d}" stroke="rgb({shade},{shade},255)" fill="none"><title>t={}</title></path>"#, p.t);
    }
    s.push_str("</svg>\n");
    s
}

/// World lines of the Y (blue) and Z (red) particles, time running upward.
pub fn particles_svg(traj: &ParticleTrajectory<f64>) -> String {
    let rows = pushblock::io::path_rows(traj);
    let f = Frame::new(rows.iter().map(|r| r.position), traj.configs().len().saturating_sub(1) as f64);
    let mut s = open("particle paths", &f, "t");
    let mut lines: std::collections::BTreeMap<(bool, u64), Vec<(usize, f64)>> = Default::default();
    for r in &rows {
        lines.entry((r.species == Species::Y, r.id)).or_default().push((r.t, r.position));
    }
    for ((is_y, id), pts) in lines {
        let colour = if is_y { "blue" } else { "red" };
        let mut d = String::new();
        for (k, (t, x)) in pts.iter().enumerate() {
            let cmd = if k == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{:.2},{:.2} ", f.px(*x), f.py(*t as f64));
        }
        let label = if is_y { "y" } else { "z" };
        let _ = writeln!(s, r#"<path d="{}" stroke="{colour}" fill="none"><title>{label}{id}</title></path>"#, d.trim_end());
        for (t, x) in &pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{colour}"/>"#, f.px(*x), f.py(*t as f64));
        }
    }
    s.push_str("</svg>\n");
    s
}
