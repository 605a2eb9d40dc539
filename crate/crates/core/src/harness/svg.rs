//! Minimal deterministic SVG line plots for loss curves.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: &[&str] = &["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// Renders named loss curves on a log10 y-axis. Output is fully
/// deterministic: fixed layout, fixed precision, no timestamps.
pub(crate) fn loss_curves_svg(title: &str, series: &[(String, Vec<f64>)]) -> String {
    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    );
    let _ = write!(
        svg,
        "<text x=\"{:.2}\" y=\"20\" font-family=\"monospace\" font-size=\"14\">{}</text>\n",
        MARGIN_L,
        escape(title)
    );

    let max_len = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let logs: Vec<Vec<f64>> = series
        .iter()
        .map(|(_, v)| v.iter().map(|&y| y.max(1e-18).log10()).collect())
        .collect();
    let finite: Vec<f64> = logs.iter().flatten().copied().filter(|v| v.is_finite()).collect();
    if max_len < 2 || finite.is_empty() {
        let _ = write!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"14\">no data</text>\n</svg>\n",
            WIDTH / 2.0 - 30.0,
            HEIGHT / 2.0
        );
        return svg;
    }
    let mut y_min = finite.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut y_max = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if y_max - y_min < 1e-9 {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x_of = |i: usize| MARGIN_L + plot_w * i as f64 / (max_len - 1) as f64;
    let y_of = |v: f64| MARGIN_T + plot_h * (1.0 - (v - y_min) / (y_max - y_min));

    // axes
    let _ = write!(
        svg,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n\
         <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        MARGIN_L,
        MARGIN_T,
        MARGIN_L,
        HEIGHT - MARGIN_B,
        MARGIN_L,
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    );
    // y ticks
    for k in 0..=4 {
        let v = y_min + (y_max - y_min) * k as f64 / 4.0;
        let y = y_of(v);
        let _ = write!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#cccccc\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">{v:.2}</text>\n",
            MARGIN_L,
            WIDTH - MARGIN_R,
            MARGIN_L - 6.0,
            y + 4.0
        );
    }
    // x ticks
    for k in 0..=4 {
        let i = (max_len - 1) * k / 4;
        let x = x_of(i);
        let _ = write!(
            svg,
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">{i}</text>\n",
            HEIGHT - MARGIN_B + 18.0
        );
    }
    let _ = write!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">iteration</text>\n\
         <text x=\"16\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\" transform=\"rotate(-90 16 {:.2})\" text-anchor=\"middle\">log10 loss</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    );

    for (s, ((name, _), log)) in series.iter().zip(&logs).enumerate() {
        if log.len() < 2 {
            continue;
        }
        let color = PALETTE[s % PALETTE.len()];
        let points: Vec<String> = log
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", x_of(i), y_of(v)))
            .collect();
        let _ = write!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        );
        let ly = MARGIN_T + 16.0 * s as f64 + 10.0;
        let _ = write!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
            WIDTH - MARGIN_R + 10.0,
            WIDTH - MARGIN_R + 34.0,
            WIDTH - MARGIN_R + 40.0,
            ly + 4.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
