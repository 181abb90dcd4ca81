//! Static SVG survival curves, one polyline per height.

use std::fmt::Write;

use accperc::analysis::SurvivalCurve;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders `p_hat` against `c`. Output depends only on the curve, so a
/// curve read back from CSV renders byte-identically.
pub fn render(curve: &SurvivalCurve) -> String {
    let (mut lo, mut hi) = curve
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.c), b.max(p.c)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo, hi) = (lo - 0.5, hi + 0.5);
    }
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let x = |c: f64| MARGIN + (c - lo) / (hi - lo) * plot_w;
    let y = |p: f64| HEIGHT - MARGIN - p * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}, {}</text>"#,
        WIDTH / 2.0,
        MARGIN / 2.0,
        escape(&curve.family),
        escape(&curve.distribution)
    );
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let (cx, py) = (lo + t * (hi - lo), t);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
            x(cx),
            MARGIN,
            x(cx),
            HEIGHT - MARGIN
        );
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
            MARGIN,
            y(py),
            WIDTH - MARGIN,
            y(py)
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.3}</text>"#, x(cx), HEIGHT - MARGIN + 18.0, cx);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.1}</text>"#, MARGIN - 6.0, y(py) + 4.0, py);
    }
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">c</text>"#, WIDTH / 2.0, HEIGHT - 16.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">survival fraction</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (k, h) in curve.heights().into_iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> =
            curve.at_height(h).iter().map(|p| format!("{:.2},{:.2}", x(p.c), y(p.p_hat()))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let ly = MARGIN + 16.0 + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            MARGIN + 10.0,
            MARGIN + 30.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">H = {h}</text>"#, MARGIN + 36.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    s
}
