//! Minimal deterministic SVG line plots: log₂ width axis, log₁₀ value axis
//! when every value is positive, a shaded min–max band per series.

use std::fmt::Write;

use crate::figure::{Figure, Series};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let t = |v: f64| if log { v.log10() } else { v };
        let (mut lo, mut hi) = values
            .map(t)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() || !hi.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            let pad = if log { 0.5 } else { lo.abs().max(1.0) * 0.1 };
            lo -= pad;
            hi += pad;
        } else {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Axis { lo, hi, log }
    }

    /// Position in [0, 1] of a value already on the axis scale.
    fn frac(&self, t: f64) -> f64 {
        (t - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            if a <= b {
                return (a..=b).map(|k| (k as f64, format!("1e{k}"))).collect();
            }
            let mid = 0.5 * (self.lo + self.hi);
            return vec![(mid, format!("{:.3e}", 10f64.powf(mid)))];
        }
        let step = nice_step((self.hi - self.lo) / 5.0);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last)
            .map(|i| {
                let v = i as f64 * step;
                (v, format_number(v))
            })
            .collect()
    }
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn format_number(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Frame {
    x: Axis,
    y: Axis,
}

impl Frame {
    fn px(&self, m: usize) -> f64 {
        LEFT + self.x.frac((m as f64).log2()) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        let t = if self.y.log { v.log10() } else { v };
        TOP + (1.0 - self.y.frac(t)) * (HEIGHT - TOP - BOTTOM)
    }
}

fn points(frame: &Frame, s: &Series, value: impl Fn(&crate::figure::Point) -> f64) -> Vec<String> {
    s.points
        .iter()
        .map(|p| format!("{:.2},{:.2}", frame.px(p.m), frame.py(value(p))))
        .collect()
}

pub fn render(fig: &Figure) -> String {
    let all = || fig.series.iter().flat_map(|s| &s.points);
    let log_y = all().all(|p| p.min > 0.0);
    let frame = Frame {
        x: Axis::new(all().map(|p| p.m as f64), true).log2_from_log10(),
        y: Axis::new(all().flat_map(|p| [p.min, p.max]), log_y),
    };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(&format!("Figure {}: {} ({})", fig.kind, fig.kind.title(), fig.dataset))
    );
    let _ = writeln!(
        out,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333"/>"##
    );

    for (t, label) in frame.x.ticks_log2() {
        let x = LEFT + frame.x.frac(t) * plot_w;
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0,
            escape(&label)
        );
    }
    for (t, label) in frame.y.ticks() {
        let y = TOP + (1.0 - frame.y.frac(t)) * plot_h;
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            escape(&label)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">hidden width m</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(&format!("{}{}", fig.kind.y_label(), if log_y { " (log scale)" } else { "" }))
    );

    for (i, s) in fig.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut band = points(&frame, s, |p| p.max);
        band.extend(points(&frame, s, |p| p.min).into_iter().rev());
        let _ = writeln!(
            out,
            r##"<polygon points="{}" fill="#999" fill-opacity="0.25" stroke="none"/>"##,
            band.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points(&frame, s, |p| p.mean).join(" ")
        );
        for p in &s.points {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                frame.px(p.m),
                frame.py(p.mean)
            );
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

impl Axis {
    /// Converts an axis built on log₁₀ values to log₂.
    fn log2_from_log10(self) -> Axis {
        let k = std::f64::consts::LOG2_10;
        Axis { lo: self.lo * k, hi: self.hi * k, log: true }
    }

    fn ticks_log2(&self) -> Vec<(f64, String)> {
        let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
        (a..=b).map(|k| (k as f64, format!("2^{k}"))).collect()
    }
}
