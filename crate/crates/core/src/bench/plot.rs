//! Log-log LER plots as plain SVG.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::BenchRow;
use crate::error::{Error, Result};

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct LogAxis {
    lo: f64,
    hi: f64,
    from: f64,
    to: f64,
}

impl LogAxis {
    fn new(values: impl Iterator<Item = f64>, from: f64, to: f64) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| *v > 0.0 && v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (1e-3, 1.0);
        }
        // whole decades, at least one wide
        let mut lo = 10f64.powf(lo.log10().floor());
        let hi = 10f64.powf(hi.log10().ceil());
        if hi <= lo {
            lo = hi / 10.0;
        }
        Self { lo, hi, from, to }
    }

    fn map(&self, v: f64) -> f64 {
        let v = v.max(self.lo);
        let t = (v.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10());
        self.from + t * (self.to - self.from)
    }

    fn decades(&self) -> impl Iterator<Item = i32> {
        self.lo.log10().round() as i32..=self.hi.log10().round() as i32
    }
}

/// One series per decoder, in order of first appearance; shaded bands are the
/// 95% intervals. Zero-failure points sit on the bottom axis.
pub fn render_svg(rows: &[BenchRow], title: &str) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("nothing to plot: result table is empty".into()));
    }
    let mut series: Vec<(&str, Vec<&BenchRow>)> = Vec::new();
    for r in rows {
        match series.iter_mut().find(|(name, _)| *name == r.decoder) {
            Some((_, pts)) => pts.push(r),
            None => series.push((&r.decoder, vec![r])),
        }
    }
    for (_, pts) in &mut series {
        pts.sort_by(|a, b| a.p.total_cmp(&b.p));
    }
    let x = LogAxis::new(rows.iter().map(|r| r.p), LEFT, W - RIGHT);
    let y = LogAxis::new(
        rows.iter().flat_map(|r| [r.ler, r.ci_lo, r.ci_hi]),
        H - BOTTOM,
        TOP,
    );

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        escape(title)
    );
    for e in x.decades() {
        let px = x.map(10f64.powi(e));
        let _ = writeln!(
            s,
            r##"<line x1="{px:.1}" y1="{TOP}" x2="{px:.1}" y2="{:.1}" stroke="#ddd"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">1e{e}</text>"##,
            H - BOTTOM,
            H - BOTTOM + 18.0
        );
    }
    for e in y.decades() {
        let py = y.map(10f64.powi(e));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{e}</text>"##,
            W - RIGHT,
            LEFT - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        W - RIGHT - LEFT,
        H - BOTTOM - TOP
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">physical error rate</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(22 {:.1}) rotate(-90)" text-anchor="middle">logical error rate</text>"#,
        (TOP + H - BOTTOM) / 2.0
    );

    for (i, (name, pts)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let _ = writeln!(s, r#"<g class="series" data-decoder="{}">"#, escape(name));
        if pts.len() > 1 {
            let upper = pts.iter().map(|r| (x.map(r.p), y.map(r.ci_hi)));
            let lower = pts.iter().rev().map(|r| (x.map(r.p), y.map(r.ci_lo)));
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#,
                points(upper.chain(lower))
            );
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
                points(pts.iter().map(|r| (x.map(r.p), y.map(r.ler))))
            );
        }
        for r in pts {
            let (px, py) = (x.map(r.p), y.map(r.ler));
            let _ = writeln!(
                s,
                r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="{colour}"/><circle cx="{px:.1}" cy="{py:.1}" r="3.5" fill="{colour}"/>"#,
                y.map(r.ci_lo),
                y.map(r.ci_hi)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_svg(rows: &[BenchRow], title: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_svg(rows, title)?).map_err(|e| Error::io(path, e))
}

fn points(it: impl Iterator<Item = (f64, f64)>) -> String {
    it.map(|(a, b)| format!("{a:.1},{b:.1}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
