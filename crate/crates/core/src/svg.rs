//! Minimal self-contained SVG charts: heatmaps and line plots.

use std::fmt::Write as _;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Diverging blue-white-red colour for a value in [-1, 1].
fn diverging(v: f64) -> String {
    let v = if v.is_finite() { v.clamp(-1.0, 1.0) } else { 0.0 };
    let fade = |t: f64| (255.0 * (1.0 - t)).round() as u8;
    let (r, g, b) = if v >= 0.0 {
        (255, fade(v), fade(v))
    } else {
        (fade(-v), fade(-v), 255)
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

pub fn heatmap(title: &str, labels: &[&str], values: &[Vec<f64>]) -> String {
    let cell = 56.0;
    let margin = 90.0;
    let n = labels.len() as f64;
    let (w, h) = (margin + n * cell + 20.0, margin + n * cell + 20.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="10" y="20" font-size="14">{}</text>"#, escape(title));
    for (i, row) in values.iter().enumerate() {
        let y = margin + i as f64 * cell;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            margin - 6.0,
            y + cell / 2.0 + 4.0,
            escape(labels[i])
        );
        for (j, &v) in row.iter().enumerate() {
            let x = margin + j as f64 * cell;
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{}" stroke="#888"/><text x="{}" y="{}" text-anchor="middle">{v:.2}</text>"##,
                diverging(v),
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            );
        }
    }
    for (j, l) in labels.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            margin + j as f64 * cell + cell / 2.0,
            margin - 8.0,
            escape(l)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub struct Series<'a> {
    pub label: &'a str,
    pub values: &'a [f64],
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Line plot of one or more series against their index.
pub fn line_plot(title: &str, series: &[Series<'_>]) -> String {
    let (w, h, pad) = (640.0, 360.0, 48.0);
    let finite = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let longest = series.iter().map(|s| s.values.len()).max().unwrap_or(0).max(2);
    let px = |i: usize| pad + (w - 2.0 * pad) * i as f64 / (longest - 1) as f64;
    let py = |v: f64| h - pad - (h - 2.0 * pad) * (v - lo) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="10" y="20" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        s,
        r##"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let _ = writeln!(s, r#"<text x="4" y="{}">{hi:.4}</text>"#, pad + 4.0);
    let _ = writeln!(s, r#"<text x="4" y="{}">{lo:.4}</text>"#, h - pad);
    for (k, ser) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = ser
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, &v)| format!("{:.2},{:.2}", px(i), py(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#,
            w - pad - 140.0,
            pad + 16.0 + 14.0 * k as f64,
            escape(ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}
