//! Minimal deterministic SVG charts. Coordinates are printed with fixed
//! precision and nothing time-dependent is embedded, so identical inputs
//! give identical bytes.

use std::fmt::Write;

use phg_core::diagram::{HomDim, PersistenceDiagram};

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub fn dim_color(dim: HomDim) -> &'static str {
    match dim {
        HomDim::H0 => PALETTE[0],
        HomDim::H1 => PALETTE[1],
    }
}

fn n(v: f64) -> String {
    format!("{v:.2}")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl IntoIterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.into_iter().filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Axis { lo: 0.0, hi: 1.0 };
        }
        if hi - lo < 1e-12 {
            return Axis { lo: lo - 0.5, hi: hi + 0.5 };
        }
        let pad = (hi - lo) * 0.05;
        Axis { lo: lo - pad, hi: hi + pad }
    }

    fn ticks(&self) -> Vec<f64> {
        (0..=4).map(|i| self.lo + (self.hi - self.lo) * i as f64 / 4.0).collect()
    }
}

struct Chart {
    out: String,
    x: Axis,
    y: Axis,
}

impl Chart {
    fn new(title: &str, x: Axis, y: Axis, x_label: &str, y_label: &str) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
            w = WIDTH,
            h = HEIGHT
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, n(WIDTH / 2.0), escape(title));
        let mut chart = Chart { out, x, y };
        chart.axes(x_label, y_label);
        chart
    }

    fn px(&self, v: f64) -> f64 {
        MARGIN + (v - self.x.lo) / (self.x.hi - self.x.lo) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y.lo) / (self.y.hi - self.y.lo) * (HEIGHT - 2.0 * MARGIN)
    }

    fn axes(&mut self, x_label: &str, y_label: &str) {
        let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
        let _ = writeln!(
            self.out,
            r#"<path d="M{} {} H{} M{} {} V{}" stroke="black" fill="none"/>"#,
            n(x0), n(y0), n(x1), n(x0), n(y0), n(y1)
        );
        for t in self.x.ticks() {
            let x = self.px(t);
            let _ = writeln!(
                self.out,
                r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" text-anchor="middle">{4}</text>"#,
                n(x), n(y0), n(y0 + 4.0), n(y0 + 16.0), tick_label(t)
            );
        }
        for t in self.y.ticks() {
            let y = self.py(t);
            let _ = writeln!(
                self.out,
                r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><text x="{3}" y="{4}" text-anchor="end">{5}</text>"#,
                n(x0 - 4.0), n(y), n(x0), n(x0 - 6.0), n(y + 4.0), tick_label(t)
            );
        }
        let _ = writeln!(
            self.out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            n(WIDTH / 2.0), n(HEIGHT - 14.0), escape(x_label)
        );
        let _ = writeln!(
            self.out,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            n(HEIGHT / 2.0), escape(y_label)
        );
    }

    fn legend(&mut self, entries: &[(String, &str)]) {
        for (i, (label, color)) in entries.iter().enumerate() {
            let y = MARGIN + 6.0 + 14.0 * i as f64;
            let x = WIDTH - MARGIN - 110.0;
            let _ = writeln!(
                self.out,
                r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
                n(x), n(y - 9.0), n(x + 14.0), n(y), escape(label)
            );
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

/// Birth/death scatter with the diagonal; H0 blue, H1 red. Infinite deaths
/// sit on a dashed line at the top of the plot.
pub fn diagram_svg(diag: &PersistenceDiagram, title: &str) -> String {
    let coords = diag.points().iter().flat_map(|p| [p.birth, p.death]);
    let axis = Axis::fit(coords);
    let has_inf = diag.points().iter().any(|p| p.death.is_infinite());
    let y_axis = if has_inf { Axis { lo: axis.lo, hi: axis.hi + 0.1 * (axis.hi - axis.lo) } } else { axis };
    let mut c = Chart::new(title, axis, y_axis, "birth", "death");
    let lo = axis.lo;
    let hi = axis.hi;
    let _ = writeln!(
        c.out,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#888888" stroke-dasharray="4 3"/>"##,
        n(c.px(lo)), n(c.py(lo)), n(c.px(hi)), n(c.py(hi))
    );
    let inf_y = c.py(y_axis.hi - 0.02 * (y_axis.hi - y_axis.lo));
    if has_inf {
        let _ = writeln!(
            c.out,
            r##"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#888888" stroke-dasharray="2 2"/><text x="{tx}" y="{ty}">inf</text>"##,
            x0 = n(MARGIN),
            y = n(inf_y),
            x1 = n(WIDTH - MARGIN),
            tx = n(WIDTH - MARGIN + 4.0),
            ty = n(inf_y + 4.0)
        );
    }
    for p in diag.points() {
        let y = if p.death.is_finite() { c.py(p.death) } else { inf_y };
        let _ = writeln!(c.out, r#"<circle cx="{}" cy="{}" r="3" fill="{}"/>"#, n(c.px(p.birth)), n(y), dim_color(p.dim));
    }
    c.legend(&[("H0".into(), dim_color(HomDim::H0)), ("H1".into(), dim_color(HomDim::H1))]);
    c.finish()
}

/// Line chart of several series over a shared x axis.
pub fn lines_svg(x: &[f64], series: &[(String, Vec<f64>)], title: &str, x_label: &str) -> String {
    let x_axis = Axis::fit(x.iter().copied());
    let y_axis = Axis::fit(series.iter().flat_map(|(_, v)| v.iter().copied()));
    let mut c = Chart::new(title, x_axis, y_axis, x_label, "value");
    for (i, (_, values)) in series.iter().enumerate() {
        let mut d = String::new();
        for (j, (&xv, &yv)) in x.iter().zip(values).enumerate() {
            if !yv.is_finite() {
                continue;
            }
            let _ = write!(d, "{}{} {} ", if j == 0 || d.is_empty() { "M" } else { "L" }, n(c.px(xv)), n(c.py(yv)));
        }
        let _ = writeln!(
            c.out,
            r#"<path d="{}" stroke="{}" fill="none" stroke-width="1.5"/>"#,
            d.trim_end(),
            PALETTE[i % PALETTE.len()]
        );
    }
    let legend: Vec<(String, &str)> =
        series.iter().enumerate().map(|(i, (name, _))| (name.clone(), PALETTE[i % PALETTE.len()])).collect();
    c.legend(&legend);
    c.finish()
}

/// Heat grid; `values[i][j]` is drawn with row 0 at the bottom.
pub fn heatmap_svg(values: &[Vec<f64>], title: &str, x_range: (f64, f64), y_range: (f64, f64)) -> String {
    let mut c = Chart::new(title, Axis { lo: x_range.0, hi: x_range.1 }, Axis { lo: y_range.0, hi: y_range.1 }, "birth", "persistence");
    let rows = values.len();
    let cols = values.first().map_or(0, Vec::len);
    let max = values.iter().flatten().copied().fold(0.0f64, f64::max);
    let cw = (WIDTH - 2.0 * MARGIN) / cols.max(1) as f64;
    let ch = (HEIGHT - 2.0 * MARGIN) / rows.max(1) as f64;
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let level = if max > 0.0 { (255.0 * (1.0 - v / max)).round() as u8 } else { 255 };
            let _ = writeln!(
                c.out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="rgb(255,{level},{level})"/>"#,
                n(MARGIN + j as f64 * cw),
                n(HEIGHT - MARGIN - (i + 1) as f64 * ch),
                n(cw),
                n(ch)
            );
        }
    }
    c.finish()
}
