//! Minimal self-contained SVG line charts.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 10] = [
    "#000000", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
    "#7f7f7f", "#17becf",
];

pub struct Series<'a> {
    pub label: &'a str,
    pub y: Vec<f64>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Renders one chart. The y axis is logarithmic when every plotted value is
/// positive; zero and non-finite points are dropped from the log view.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    x: &[f64],
    series: &[Series],
) -> String {
    let finite = series
        .iter()
        .flat_map(|s| s.y.iter().copied())
        .filter(|v| v.is_finite());
    let positive: Vec<f64> = finite.clone().filter(|&v| v > 0.0).collect();
    let log = !positive.is_empty();
    let tf = |v: f64| if log { v.log10() } else { v };
    let (mut y_lo, mut y_hi) = if log {
        bounds(positive.iter().map(|&v| v.log10())).unwrap_or((0.0, 1.0))
    } else {
        bounds(finite).unwrap_or((0.0, 1.0))
    };
    if log {
        y_lo = y_lo.floor();
        y_hi = y_hi.ceil();
    }
    if y_hi - y_lo < 1e-12 {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let (mut x_lo, mut x_hi) = bounds(x.iter().copied()).unwrap_or((0.0, 1.0));
    if x_hi - x_lo < 1e-12 {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| LEFT + (v - x_lo) / (x_hi - x_lo) * pw;
    let py = |v: f64| TOP + (1.0 - (v - y_lo) / (y_hi - y_lo)) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );

    // grid and tick labels
    for &xv in x {
        let gx = px(xv);
        let _ = writeln!(
            out,
            r##"<line x1="{gx:.2}" y1="{TOP}" x2="{gx:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##,
            TOP + ph
        );
        let _ = writeln!(
            out,
            r#"<text x="{gx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph + 18.0,
            xv
        );
    }
    let y_ticks: Vec<f64> = if log {
        (y_lo as i64..=y_hi as i64).map(|e| e as f64).collect()
    } else {
        (0..=5)
            .map(|i| y_lo + (y_hi - y_lo) * i as f64 / 5.0)
            .collect()
    };
    for t in y_ticks {
        let gy = py(t);
        let label = if log {
            format!("1e{t}")
        } else {
            format!("{t:.3}")
        };
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{gy:.2}" x2="{:.2}" y2="{gy:.2}" stroke="#e0e0e0"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
            LEFT - 6.0,
            gy + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = x
            .iter()
            .zip(&s.y)
            .filter(|(_, &v)| v.is_finite() && (!log || v > 0.0))
            .map(|(&a, &b)| format!("{:.2},{:.2}", px(a), py(tf(b))))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
                pts.join(" ")
            );
            for p in &pts {
                let (cx, cy) = p.split_once(',').expect("formatted pair");
                let _ = writeln!(
                    out,
                    r#"<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>"#
                );
            }
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 22.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 28.0,
            ly + 4.0,
            escape(s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series() {
        let x = [0.0, 5.0, 10.0];
        let s = [
            Series {
                label: "ls",
                y: vec![0.1, 0.01, 0.001],
            },
            Series {
                label: "a<b",
                y: vec![0.2, 0.02, 0.0],
            },
        ];
        let svg = line_chart("ber", "SNR (dB)", "ber", &x, &s);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a&lt;b"));
        // the zero is dropped on the log axis
        assert_eq!(svg.matches("<circle").count(), 5);
    }

    #[test]
    fn linear_axis_for_non_positive_data() {
        let svg = line_chart(
            "t",
            "x",
            "y",
            &[1.0],
            &[Series {
                label: "z",
                y: vec![0.0],
            }],
        );
        assert!(!svg.contains("1e"));
        assert!(svg.contains("<circle"));
    }
}
