//! Minimal SVG line plots and heat maps.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#000000", "#1f4fd1", "#2a9d3a", "#d62728", "#e0b000", "#8c2fc2", "#17becf", "#ff7f0e",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Dashed vertical markers.
    pub vlines: Vec<f64>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn from_values(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        } else if !log {
            let pad = 0.04 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Axis { lo, hi, log }
    }

    fn map(&self, v: f64, from: f64, to: f64) -> Option<f64> {
        let v = if self.log { v.log10() } else { v };
        v.is_finite()
            .then(|| from + (v - self.lo) / (self.hi - self.lo) * (to - from))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.floor() as i32, self.hi.ceil() as i32);
            let stride = ((b - a) / 8).max(1);
            (a..=b)
                .step_by(stride as usize)
                .map(|e| e as f64)
                .filter(|e| *e >= self.lo - 1e-9 && *e <= self.hi + 1e-9)
                .map(|e| (e, format!("1e{}", e as i32)))
                .collect()
        } else {
            nice_ticks(self.lo, self.hi, 6)
                .into_iter()
                .map(|t| (t, fmt_tick(t)))
                .collect()
        }
    }
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = write!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
    let _ = write!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );
    let _ = write!(
        out,
        r#"<text x="18" y="{y}" text-anchor="middle" transform="rotate(-90 18 {y})">{}</text>"#,
        escape(y_label),
        y = (TOP + HEIGHT - BOTTOM) / 2.0
    );
}

fn axes(out: &mut String, xa: &Axis, ya: &Axis) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = write!(
        out,
        r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for (t, label) in xa.ticks() {
        let x = x0 + (t - xa.lo) / (xa.hi - xa.lo) * (x1 - x0);
        let _ = write!(
            out,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"#,
            y0 + 5.0,
            y0 + 19.0
        );
    }
    for (t, label) in ya.ticks() {
        let y = y0 + (t - ya.lo) / (ya.hi - ya.lo) * (y1 - y0);
        let _ = write!(
            out,
            r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0
        );
    }
}

impl LinePlot {
    pub fn render(&self) -> String {
        let xa = Axis::from_values(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.0))
                .chain(self.vlines.iter().copied()),
            self.log_x,
        );
        let ya = Axis::from_values(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.1)),
            self.log_y,
        );
        let mut out = String::new();
        frame(&mut out, &self.title, &self.x_label, &self.y_label);
        axes(&mut out, &xa, &ya);
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
        for &v in &self.vlines {
            if let Some(x) = xa.map(v, x0, x1) {
                let _ = write!(
                    out,
                    r##"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{y1}" stroke="#888" stroke-dasharray="4 3"/>"##
                );
            }
        }
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .filter_map(|&(x, y)| {
                    Some(format!(
                        "{:.2},{:.2}",
                        xa.map(x, x0, x1)?,
                        ya.map(y, y0, y1)?
                    ))
                })
                .collect();
            if !pts.is_empty() {
                let _ = write!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{}"/>"#,
                    pts.join(" ")
                );
            }
            let ly = TOP + 14.0 + 16.0 * k as f64;
            let _ = write!(
                out,
                r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                x1 + 10.0,
                x1 + 30.0,
                x1 + 35.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub colorbar_label: String,
    /// Cell centres along x.
    pub xs: Vec<f64>,
    /// Cell centres along y.
    pub ys: Vec<f64>,
    /// `values[iy][ix]`; non-finite cells are left blank.
    pub values: Vec<Vec<f64>>,
}

fn viridis(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let c = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(a.0, b.0), c(a.1, b.1), c(a.2, b.2))
}

fn edges(centres: &[f64]) -> Vec<f64> {
    match centres.len() {
        0 => vec![],
        1 => vec![centres[0] - 0.5, centres[0] + 0.5],
        n => {
            let mut e = Vec::with_capacity(n + 1);
            e.push(centres[0] - 0.5 * (centres[1] - centres[0]));
            for w in centres.windows(2) {
                e.push(0.5 * (w[0] + w[1]));
            }
            e.push(centres[n - 1] + 0.5 * (centres[n - 1] - centres[n - 2]));
            e
        }
    }
}

impl Heatmap {
    pub fn render(&self) -> String {
        let xe = edges(&self.xs);
        let ye = edges(&self.ys);
        let xa = Axis {
            lo: xe.first().copied().unwrap_or(0.0),
            hi: xe.last().copied().unwrap_or(1.0),
            log: false,
        };
        let ya = Axis {
            lo: ye.first().copied().unwrap_or(0.0),
            hi: ye.last().copied().unwrap_or(1.0),
            log: false,
        };
        let finite = self.values.iter().flatten().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
        let (lo, hi) = if lo.is_finite() && hi > lo {
            (lo, hi)
        } else {
            (0.0, 1.0)
        };

        let mut out = String::new();
        frame(&mut out, &self.title, &self.x_label, &self.y_label);
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
        for (iy, row) in self.values.iter().enumerate() {
            for (ix, &v) in row.iter().enumerate() {
                if !v.is_finite() || ix + 1 >= xe.len() || iy + 1 >= ye.len() {
                    continue;
                }
                let (Some(a), Some(b)) = (xa.map(xe[ix], x0, x1), xa.map(xe[ix + 1], x0, x1))
                else {
                    continue;
                };
                let (Some(c), Some(d)) = (ya.map(ye[iy], y0, y1), ya.map(ye[iy + 1], y0, y1))
                else {
                    continue;
                };
                let _ = write!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    a.min(b),
                    c.min(d),
                    (b - a).abs() + 0.3,
                    (d - c).abs() + 0.3,
                    viridis((v - lo) / (hi - lo))
                );
            }
        }
        axes(&mut out, &xa, &ya);
        let bx = x1 + 20.0;
        let steps = 40;
        for k in 0..steps {
            let t = k as f64 / (steps - 1) as f64;
            let y = y0 - t * (y0 - y1) - (y0 - y1) / steps as f64;
            let _ = write!(
                out,
                r#"<rect x="{bx}" y="{y:.2}" width="18" height="{:.2}" fill="{}"/>"#,
                (y0 - y1) / steps as f64 + 0.5,
                viridis(t)
            );
        }
        let _ = write!(
            out,
            r#"<text x="{}" y="{}">{}</text><text x="{}" y="{}">{}</text><text x="{}" y="{}" font-size="11">{}</text>"#,
            bx + 22.0,
            y1 + 8.0,
            fmt_tick(hi),
            bx + 22.0,
            y0,
            fmt_tick(lo),
            bx,
            y1 - 8.0,
            escape(&self.colorbar_label)
        );
        out.push_str("</svg>\n");
        out
    }
}
