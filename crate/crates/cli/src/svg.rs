//! Two-panel line chart of the co-movement series.

use std::fmt::Write as _;

use comove::correlation::{ComovementSeries, COMOVEMENT_LABELS};

const WIDTH: f64 = 900.0;
const PANEL_HEIGHT: f64 = 260.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 40.0;
const GAP: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Panel 1: Shibor and IR against ER (1a, 1b). Panel 2: Shibor and IR
/// against PFB and CP (2a-2d).
pub fn render(series: &ComovementSeries) -> String {
    let panels: [(&str, &[usize]); 2] = [
        ("Co-movements with the excess-reserve spread", &[0, 1]),
        ("Co-movements with the bond and commercial-paper spreads", &[2, 3, 4, 5]),
    ];
    let height = TOP + 2.0 * PANEL_HEIGHT + GAP + 40.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (p, (title, columns)) in panels.iter().enumerate() {
        let y0 = TOP + p as f64 * (PANEL_HEIGHT + GAP);
        panel(&mut s, series, title, columns, y0);
    }
    s.push_str("</svg>\n");
    s
}

fn panel(s: &mut String, series: &ComovementSeries, title: &str, columns: &[usize], y0: f64) {
    let n = series.len();
    let plot_w = WIDTH - LEFT - RIGHT;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &c in columns {
        for v in series.column(c) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    let lo = (lo * 10.0).floor() / 10.0;
    let hi = ((hi * 10.0).ceil() / 10.0).max(lo + 0.1);
    let x_of = |t: usize| LEFT + plot_w * t as f64 / (n.max(2) - 1) as f64;
    let y_of = |v: f64| y0 + PANEL_HEIGHT * (hi - v) / (hi - lo);

    let _ = writeln!(s, r#"<text x="{LEFT}" y="{:.1}" font-size="14">{title}</text>"#, y0 - 12.0);
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{y0:.1}" width="{plot_w:.1}" height="{PANEL_HEIGHT}" fill="none" stroke="#444"/>"##
    );
    let steps = ((hi - lo) * 10.0).round() as usize;
    let stride = if steps > 8 { 2 } else { 1 };
    for k in (0..=steps).step_by(stride) {
        let v = lo + k as f64 / 10.0;
        let y = y_of(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let mut last_year = None;
    for (t, d) in series.dates.iter().enumerate() {
        let year = d.format("%Y").to_string();
        if last_year.as_ref() != Some(&year) {
            let x = x_of(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#444"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{year}</text>"##,
                y0 + PANEL_HEIGHT,
                y0 + PANEL_HEIGHT + 5.0,
                y0 + PANEL_HEIGHT + 18.0
            );
            last_year = Some(year);
        }
    }
    for (k, &c) in columns.iter().enumerate() {
        let mut points = String::new();
        for (t, v) in series.column(c).iter().enumerate() {
            let _ = write!(points, "{:.1},{:.1} ", x_of(t), y_of(*v));
        }
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
            points.trim_end()
        );
        let ly = y0 + 16.0 + 18.0 * k as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            COMOVEMENT_LABELS[c]
        );
    }
}
