//! Minimal SVG charts: ROC polylines, accuracy/error bars and W over time.

use std::fmt::Write as _;

use crate::learn::EvalReport;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    x_range: (f64, f64),
    y_range: (f64, f64),
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let (lo, hi) = self.x_range;
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        MARGIN + t * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        let (lo, hi) = self.y_range;
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        HEIGHT - MARGIN - t * (HEIGHT - 2.0 * MARGIN)
    }
}

fn open(title: &str, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{y0}" stroke="black"/>"#,
        y0 = HEIGHT - MARGIN,
        x1 = WIDTH - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    s
}

fn polyline(s: &mut String, frame: &Frame, points: &[(f64, f64)], color: &str, dashed: bool) {
    let coords: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
        .collect();
    let dash = if dashed {
        r#" stroke-dasharray="4 4""#
    } else {
        ""
    };
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
        coords.join(" ")
    );
}

fn legend(s: &mut String, entries: &[(String, &str)]) {
    for (i, (name, color)) in entries.iter().enumerate() {
        let y = MARGIN + 14.0 * i as f64;
        let x = WIDTH - MARGIN - 150.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            y - 9.0,
            x + 14.0,
            y,
            escape(name)
        );
    }
}

/// ROC curves of several models over the chance diagonal.
pub fn roc_svg(reports: &[EvalReport]) -> String {
    let frame = Frame {
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
    };
    let mut s = open("ROC", "false positive rate", "true positive rate");
    polyline(&mut s, &frame, &[(0.0, 0.0), (1.0, 1.0)], "#999999", true);
    let mut entries = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        polyline(&mut s, &frame, &r.roc_points, color, false);
        entries.push((format!("{} (AUC {:.3})", r.model, r.auc), color));
    }
    legend(&mut s, &entries);
    s.push_str("</svg>\n");
    s
}

/// Accuracy and classification error side by side for each model.
pub fn accuracy_svg(reports: &[EvalReport]) -> String {
    let frame = Frame {
        x_range: (0.0, reports.len().max(1) as f64),
        y_range: (0.0, 1.0),
    };
    let mut s = open("Accuracy and classification error", "model", "rate");
    let slot = frame.x(1.0) - frame.x(0.0);
    let bar = slot * 0.35;
    for (i, r) in reports.iter().enumerate() {
        let left = frame.x(i as f64) + slot * 0.12;
        for (j, (v, color)) in [(r.accuracy, COLORS[0]), (r.classification_error, COLORS[1])]
            .into_iter()
            .enumerate()
        {
            let x = left + j as f64 * bar;
            let top = frame.y(v);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{top:.2}" width="{bar:.2}" height="{:.2}" fill="{color}"/>"#,
                frame.y(0.0) - top
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            left + bar,
            HEIGHT - MARGIN + 14.0,
            escape(r.model.as_str())
        );
    }
    legend(
        &mut s,
        &[
            ("accuracy".to_string(), COLORS[0]),
            ("classification error".to_string(), COLORS[1]),
        ],
    );
    s.push_str("</svg>\n");
    s
}

/// One line per `(name, [(window, W)])` series; windows share one axis.
pub fn temporal_svg(title: &str, series: &[(String, Vec<(String, f64)>)]) -> String {
    let mut windows: Vec<&str> = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|(w, _)| w.as_str()))
        .collect();
    windows.sort_unstable();
    windows.dedup();
    let y_max = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.1))
        .fold(0.0, f64::max);
    let frame = Frame {
        x_range: (0.0, windows.len().saturating_sub(1).max(1) as f64),
        y_range: (0.0, if y_max > 0.0 { y_max } else { 1.0 }),
    };
    let mut s = open(title, "window", "W");
    for (i, w) in windows.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            frame.x(i as f64),
            HEIGHT - MARGIN + 14.0,
            escape(w)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#,
        MARGIN - 4.0,
        MARGIN + 4.0,
        frame.y_range.1
    );
    let mut entries = Vec::new();
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mapped: Vec<(f64, f64)> = pts
            .iter()
            .map(|(w, v)| {
                let xi = windows.binary_search(&w.as_str()).unwrap_or(0);
                (xi as f64, *v)
            })
            .collect();
        polyline(&mut s, &frame, &mapped, color, false);
        for &(x, y) in &mapped {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                frame.x(x),
                frame.y(y)
            );
        }
        entries.push((name.clone(), color));
    }
    legend(&mut s, &entries);
    s.push_str("</svg>\n");
    s
}
