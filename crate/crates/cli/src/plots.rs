//! Static SVG charts for the bench: payoff histograms, per-period box summaries
//! and wealth trajectories.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

const W: f64 = 640.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let widen = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x0, x1);
        let (y0, y1) = widen(y0, y1);
        Self { x0, x1, y0, y1 }
    }

    fn x(&self, v: f64) -> f64 {
        PAD + (v - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn y(&self, v: f64) -> f64 {
        H - PAD - (v - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn open(title: &str, frame: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{title}</text>"#, W / 2.0);
    let (l, r, b, t) = (PAD, W - PAD, H - PAD, PAD);
    let _ = writeln!(s, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#);
    let _ = writeln!(s, r#"<text x="{l}" y="{}" text-anchor="middle">{:.4}</text>"#, b + 16.0, frame.x0);
    let _ = writeln!(s, r#"<text x="{r}" y="{}" text-anchor="middle">{:.4}</text>"#, b + 16.0, frame.x1);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.4}</text>"#, l - 4.0, b, frame.y0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.4}</text>"#, l - 4.0, t + 4.0, frame.y1);
    s
}

fn close(mut s: String, path: &Path) -> io::Result<()> {
    s.push_str("</svg>\n");
    std::fs::write(path, s)
}

fn bounds(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}

pub fn histogram(path: &Path, title: &str, samples: &[f64], bins: usize) -> io::Result<()> {
    let (lo, hi) = bounds(samples.iter().copied());
    let bins = bins.max(1);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &x in samples {
        counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let frame = Frame::new(lo, lo + width * bins as f64, 0.0, counts.iter().copied().max().unwrap_or(1) as f64);
    let mut s = open(title, &frame);
    for (k, &c) in counts.iter().enumerate() {
        let (xa, xb) = (frame.x(lo + k as f64 * width), frame.x(lo + (k + 1) as f64 * width));
        let (ya, yb) = (frame.y(c as f64), frame.y(0.0));
        let _ = writeln!(
            s,
            r##"<rect x="{xa:.2}" y="{ya:.2}" width="{:.2}" height="{:.2}" fill="#4c72b0" stroke="white"/>"##,
            xb - xa,
            yb - ya
        );
    }
    close(s, path)
}

/// Per-period min, quartiles and max of `columns[t]`.
pub fn box_series(path: &Path, title: &str, columns: &[Vec<f64>]) -> io::Result<()> {
    let (lo, hi) = bounds(columns.iter().flatten().copied());
    let frame = Frame::new(-0.5, columns.len() as f64 - 0.5, lo, hi);
    let mut s = open(title, &frame);
    let half = 0.3 * (frame.x(1.0) - frame.x(0.0));
    for (t, col) in columns.iter().enumerate() {
        let mut v = col.clone();
        v.sort_by(f64::total_cmp);
        if v.is_empty() {
            continue;
        }
        let q = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
        let x = frame.x(t as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" x2="{x:.2}" y1="{:.2}" y2="{:.2}" stroke="black"/>"#,
            frame.y(q(0.0)),
            frame.y(q(1.0))
        );
        let (top, bottom) = (frame.y(q(0.75)), frame.y(q(0.25)));
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="#dd8452" stroke="black"/>"##,
            x - half,
            2.0 * half,
            (bottom - top).max(0.5)
        );
        let m = frame.y(q(0.5));
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" x2="{:.2}" y1="{m:.2}" y2="{m:.2}" stroke="black" stroke-width="2"/>"#,
            x - half,
            x + half
        );
    }
    close(s, path)
}

pub fn trajectories(path: &Path, title: &str, paths: &[Vec<f64>]) -> io::Result<()> {
    let (lo, hi) = bounds(paths.iter().flatten().copied());
    let len = paths.iter().map(Vec::len).max().unwrap_or(1);
    let frame = Frame::new(0.0, (len.max(2) - 1) as f64, lo.min(0.0), hi.max(0.0));
    let mut s = open(title, &frame);
    for p in paths {
        let d: Vec<String> = p
            .iter()
            .enumerate()
            .map(|(t, v)| format!("{}{:.2} {:.2}", if t == 0 { "M" } else { "L" }, frame.x(t as f64), frame.y(*v)))
            .collect();
        let _ = writeln!(s, r##"<path d="{}" stroke="#55a868" stroke-opacity="0.5" fill="none"/>"##, d.join(" "));
    }
    close(s, path)
}
