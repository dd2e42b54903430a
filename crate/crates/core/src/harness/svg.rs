//! Minimal self-contained SVG line plots.

use std::fmt::Write as _;

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub dashed: bool,
}

/// Shaded band between two curves sharing x values.
#[derive(Clone, Debug)]
pub struct Band {
    pub x: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub color: &'static str,
}

#[derive(Clone, Debug, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    pub bands: Vec<Band>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 55.0;

fn tf(v: f64, log: bool) -> Option<f64> {
    if log {
        (v > 0.0 && v.is_finite()).then(|| v.log10())
    } else {
        v.is_finite().then_some(v)
    }
}

fn fmt_tick(v: f64, log: bool) -> String {
    if log {
        let p = v.round() as i32;
        if (v - p as f64).abs() < 1e-9 {
            return format!("1e{p}");
        }
        return format!("{:.3}", 10f64.powf(v));
    }
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

fn ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let (a, b) = (lo.ceil() as i32, hi.floor() as i32);
        if b >= a {
            return (a..=b).map(f64::from).collect();
        }
    }
    (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl LinePlot {
    pub fn render(&self) -> String {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                if let (Some(a), Some(b)) = (tf(x, self.log_x), tf(y, self.log_y)) {
                    xs.push(a);
                    ys.push(b);
                }
            }
        }
        for b in &self.bands {
            for (i, &x) in b.x.iter().enumerate() {
                if let Some(a) = tf(x, self.log_x) {
                    xs.push(a);
                    ys.extend(tf(b.lo[i], self.log_y));
                    ys.extend(tf(b.hi[i], self.log_y));
                }
            }
        }
        let range = |v: &[f64]| {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = range(&xs);
        let (y0, y1) = range(&ys);
        let px = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
        let py = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            esc(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{ML}" y="{MT}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - ML - MR,
            H - MT - MB
        );
        for t in ticks(x0, x1, self.log_x) {
            let x = px(t);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
                H - MB,
                H - MB + 5.0,
                H - MB + 18.0,
                fmt_tick(t, self.log_x)
            );
        }
        for t in ticks(y0, y1, self.log_y) {
            let y = py(t);
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{y:.2}" x2="{ML}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                ML - 5.0,
                ML - 8.0,
                y + 4.0,
                fmt_tick(t, self.log_y)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            (ML + W - MR) / 2.0,
            H - 12.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            (MT + H - MB) / 2.0,
            esc(&self.y_label)
        );
        for b in &self.bands {
            let mut up = Vec::new();
            let mut down = Vec::new();
            for (i, &x) in b.x.iter().enumerate() {
                if let (Some(a), Some(l), Some(h)) = (
                    tf(x, self.log_x),
                    tf(b.lo[i], self.log_y),
                    tf(b.hi[i], self.log_y),
                ) {
                    up.push(format!("{:.2},{:.2}", px(a), py(h)));
                    down.push(format!("{:.2},{:.2}", px(a), py(l)));
                }
            }
            down.reverse();
            up.extend(down);
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="{}" fill-opacity="0.2" stroke="none"/>"#,
                up.join(" "),
                b.color
            );
        }
        for (k, ser) in self.series.iter().enumerate() {
            let pts: Vec<String> = ser
                .points
                .iter()
                .filter_map(|&(x, y)| {
                    Some(format!(
                        "{:.2},{:.2}",
                        px(tf(x, self.log_x)?),
                        py(tf(y, self.log_y)?)
                    ))
                })
                .collect();
            let dash = if ser.dashed {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"{dash}/>"#,
                pts.join(" "),
                ser.color
            );
            let ly = MT + 16.0 + 16.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{0}" y1="{ly}" x2="{1}" y2="{ly}" stroke="{2}" stroke-width="2"{dash}/><text x="{3}" y="{4}">{5}</text>"#,
                ML + 10.0,
                ML + 34.0,
                ser.color,
                ML + 40.0,
                ly + 4.0,
                esc(&ser.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
