//! Minimal static SVG plots: fixed canvas, linear axes, labelled ticks.

use std::fmt::Write;

use crate::dynamics::Trajectory;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        Self {
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, v: f64) -> f64 {
        LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn widen((lo, hi): (f64, f64)) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = lo.abs().max(1.0) * 0.05;
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn header(out: &mut String, title: &str, provenance: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    // XML comments may not contain "--"
    let _ = writeln!(out, "<!--\n{}\n-->", provenance.replace("--", "- -"));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );
    for i in 0..=5 {
        let s = i as f64 / 5.0;
        let xv = f.x.0 + s * (f.x.1 - f.x.0);
        let yv = f.y.0 + s * (f.y.1 - f.y.0);
        let (px, py) = (f.px(xv), f.py(yv));
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{y1}" x2="{px:.2}" y2="{}" stroke="black"/>"#,
            y1 + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
            y1 + 19.0,
            tick(xv)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            py + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{:.3}", v)
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn polyline(
    out: &mut String,
    f: &Frame,
    points: impl Iterator<Item = (f64, f64)>,
    color: &str,
    width: f64,
) {
    let mut path = String::new();
    for (x, y) in points {
        let _ = write!(path, "{:.2},{:.2} ", f.px(x), f.py(y));
    }
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
        path.trim_end()
    );
}

fn legend(out: &mut String, entries: &[(&str, &str)]) {
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = TOP + 14.0 + 16.0 * i as f64;
        let x = WIDTH - RIGHT - 150.0;
        let _ = writeln!(
            out,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#,
            x + 20.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}">{}</text>"#,
            x + 26.0,
            y + 4.0,
            escape(label)
        );
    }
}

/// Histogram of `values` with bins of `bin_width` aligned to multiples of the width.
/// Non-finite values are counted in the caption, not binned.
pub fn histogram(values: &[f64], bin_width: f64, title: &str, provenance: &str) -> String {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let (lo, hi) = range(finite.iter().copied());
    let (first, bins) = if finite.is_empty() {
        (0, 1)
    } else {
        let first = (lo / bin_width).floor() as i64;
        let last = (hi / bin_width).floor() as i64;
        (first, (last - first + 1).clamp(1, 10_000) as usize)
    };
    let mut counts = vec![0usize; bins];
    for v in &finite {
        let b = ((v / bin_width).floor() as i64 - first).clamp(0, bins as i64 - 1) as usize;
        counts[b] += 1;
    }
    let x0 = first as f64 * bin_width;
    let f = Frame::new(
        (x0.min(0.0), (x0 + bins as f64 * bin_width).max(0.0)),
        (0.0, *counts.iter().max().unwrap_or(&1) as f64 * 1.05),
    );
    let mut out = String::new();
    header(&mut out, title, provenance);
    axes(&mut out, &f, "robustness ρ", "trials");
    for (i, c) in counts.iter().enumerate() {
        if *c == 0 {
            continue;
        }
        let l = x0 + i as f64 * bin_width;
        let (px0, px1) = (f.px(l), f.px(l + bin_width));
        let (py0, py1) = (f.py(*c as f64), f.py(0.0));
        let _ = writeln!(
            out,
            r##"<rect x="{px0:.2}" y="{py0:.2}" width="{:.2}" height="{:.2}" fill="#1f77b4" stroke="white" stroke-width="0.5"/>"##,
            (px1 - px0).max(0.5),
            py1 - py0
        );
    }
    let zx = f.px(0.0);
    let _ = writeln!(
        out,
        r##"<line x1="{zx:.2}" y1="{TOP}" x2="{zx:.2}" y2="{}" stroke="#d62728" stroke-dasharray="4 3"/>"##,
        HEIGHT - BOTTOM
    );
    let dropped = values.len() - finite.len();
    if dropped > 0 {
        let _ = writeln!(
            out,
            r#"<text x="{LEFT}" y="{}">{dropped} non-finite values not shown</text>"#,
            TOP - 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Every state component against time.
pub fn time_series(traj: &Trajectory, labels: &[String], title: &str, provenance: &str) -> String {
    let t_range = (traj.t0, traj.end_time());
    let v_range = range(traj.states.iter().flatten().copied());
    let f = Frame::new(t_range, v_range);
    let mut out = String::new();
    header(&mut out, title, provenance);
    axes(&mut out, &f, "t [s]", "state");
    let mut entries = Vec::new();
    for i in 0..traj.dim() {
        let color = PALETTE[i % PALETTE.len()];
        polyline(
            &mut out,
            &f,
            traj.states
                .iter()
                .enumerate()
                .map(|(k, x)| (traj.time(k), x[i])),
            color,
            1.5,
        );
        entries.push((labels.get(i).map_or("x", String::as_str), color));
    }
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

/// First two state components of a nominal and a disturbed run, with an optional
/// goal disc `(center, radius)`.
pub fn overlay(
    nominal: &Trajectory,
    disturbed: &Trajectory,
    goal: Option<([f64; 2], f64)>,
    title: &str,
    provenance: &str,
) -> String {
    let pts = |t: &Trajectory| {
        t.states
            .iter()
            .map(|x| (x[0], x.get(1).copied().unwrap_or(0.0)))
            .collect::<Vec<_>>()
    };
    let (a, b) = (pts(nominal), pts(disturbed));
    let mut xs = range(a.iter().chain(&b).map(|p| p.0));
    let mut ys = range(a.iter().chain(&b).map(|p| p.1));
    if let Some((c, r)) = goal {
        xs = (xs.0.min(c[0] - r), xs.1.max(c[0] + r));
        ys = (ys.0.min(c[1] - r), ys.1.max(c[1] + r));
    }
    let pad = |(lo, hi): (f64, f64)| (lo - 0.05 * (hi - lo), hi + 0.05 * (hi - lo));
    let f = Frame::new(pad(xs), pad(ys));
    let mut out = String::new();
    header(&mut out, title, provenance);
    axes(&mut out, &f, "x1", "x2");
    if let Some((c, r)) = goal {
        let rx = (f.px(c[0] + r) - f.px(c[0])).abs();
        let ry = (f.py(c[1] + r) - f.py(c[1])).abs();
        let _ = writeln!(
            out,
            r##"<ellipse cx="{:.2}" cy="{:.2}" rx="{rx:.2}" ry="{ry:.2}" fill="#2ca02c" fill-opacity="0.25" stroke="#2ca02c"/>"##,
            f.px(c[0]),
            f.py(c[1])
        );
    }
    polyline(&mut out, &f, a.into_iter(), "black", 2.0);
    polyline(&mut out, &f, b.into_iter(), "#d62728", 1.5);
    legend(&mut out, &[("nominal", "black"), ("disturbed", "#d62728")]);
    out.push_str("</svg>\n");
    out
}
