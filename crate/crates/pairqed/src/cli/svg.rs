//! Self-contained SVG line plots and heatmaps. No external plotting
//! dependency; CSV stays the authoritative output and these are quick-look
//! companions with a fixed color map for reproducibility.

use ndarray::Array2;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 90.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn finite_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        mag
    } else if norm < 3.5 {
        2.0 * mag
    } else if norm < 7.5 {
        5.0 * mag
    } else {
        10.0 * mag
    };
    let first = (lo / step).ceil() * step;
    let mut out = Vec::new();
    let mut t = first;
    while t <= hi + 1e-9 * span {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if a >= 1e4 || a < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    }
}

/// Perceptually ordered fixed color map (dark blue to yellow).
fn colormap(t: f64) -> String {
    const ANCHORS: [(f64, [f64; 3]); 6] = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.2, [65.0, 68.0, 135.0]),
        (0.4, [42.0, 120.0, 142.0]),
        (0.6, [34.0, 168.0, 132.0]),
        (0.8, [122.0, 209.0, 81.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let t = t.clamp(0.0, 1.0);
    let mut rgb = ANCHORS[0].1;
    for w in ANCHORS.windows(2) {
        if t >= w[0].0 && t <= w[1].0 {
            let f = (t - w[0].0) / (w[1].0 - w[0].0);
            for k in 0..3 {
                rgb[k] = w[0].1[k] + f * (w[1].1[k] - w[0].1[k]);
            }
            break;
        }
    }
    format!(
        "#{:02x}{:02x}{:02x}",
        rgb[0].round() as u8,
        rgb[1].round() as u8,
        rgb[2].round() as u8
    )
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(title)
    )
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(xlo: f64, xhi: f64, ylo: f64, yhi: f64, xlabel: &str, ylabel: &str) -> String {
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + (x - xlo) / (xhi - xlo) * pw;
    let py = |y: f64| MARGIN_T + (1.0 - (y - ylo) / (yhi - ylo)) * ph;
    let mut s = String::new();
    s.push_str(&format!(
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n"
    ));
    for t in ticks(xlo, xhi) {
        let x = px(t);
        s.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
            MARGIN_T + ph,
            MARGIN_T + ph + 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            MARGIN_T + ph + 18.0,
            fmt_tick(t)
        ));
    }
    for t in ticks(ylo, yhi) {
        let y = py(t);
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{MARGIN_L}\" y2=\"{y}\" stroke=\"black\"/>\n",
            MARGIN_L - 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            MARGIN_L - 8.0,
            y + 4.0,
            fmt_tick(t)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
        MARGIN_L + pw / 2.0,
        HEIGHT - 12.0,
        xml_escape(xlabel)
    ));
    s.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        xml_escape(ylabel)
    ));
    s
}

/// Multi-series line plot; series share the x grid lengths pairwise.
pub fn line_plot(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[(String, Vec<f64>, Vec<f64>)],
) -> String {
    let (xlo, xhi) = finite_range(series.iter().flat_map(|s| s.1.iter().cloned()));
    let (ylo0, yhi0) = finite_range(series.iter().flat_map(|s| s.2.iter().cloned()));
    let pad = 0.05 * (yhi0 - ylo0);
    let (ylo, yhi) = (ylo0 - pad, yhi0 + pad);
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + (x - xlo) / (xhi - xlo) * pw;
    let py = |y: f64| MARGIN_T + (1.0 - (y - ylo) / (yhi - ylo)) * ph;

    let mut svg = header(title);
    svg.push_str(&axes(xlo, xhi, ylo, yhi, xlabel, ylabel));
    for (k, (name, xs, ys)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for (x, y) in xs.iter().zip(ys) {
            if !y.is_finite() {
                pen_down = false;
                continue;
            }
            path.push_str(&format!(
                "{}{:.2},{:.2} ",
                if pen_down { "L" } else { "M" },
                px(*x),
                py(*y)
            ));
            pen_down = true;
        }
        svg.push_str(&format!(
            "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            WIDTH - MARGIN_R + 8.0,
            MARGIN_T + 16.0 * (k as f64 + 1.0),
            xml_escape(name)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Heatmap of `z[[iy, ix]]` over cell-centered axes; NaN cells are gray.
pub fn heatmap(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    x_axis: &[f64],
    y_axis: &[f64],
    z: &Array2<f64>,
) -> String {
    assert_eq!(z.dim(), (y_axis.len(), x_axis.len()));
    let (zlo, zhi) = finite_range(z.iter().cloned());
    let (xlo, xhi) = (x_axis[0], *x_axis.last().unwrap());
    let (ylo, yhi) = (y_axis[0], *y_axis.last().unwrap());
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let nx = x_axis.len();
    let ny = y_axis.len();
    let cw = pw / nx as f64;
    let chh = ph / ny as f64;

    let mut svg = header(title);
    for iy in 0..ny {
        for ix in 0..nx {
            let v = z[[iy, ix]];
            let color = if v.is_finite() {
                colormap((v - zlo) / (zhi - zlo).max(f64::MIN_POSITIVE))
            } else {
                "#bbbbbb".to_string()
            };
            let x = MARGIN_L + ix as f64 * cw;
            // row 0 at the bottom
            let y = MARGIN_T + ph - (iy as f64 + 1.0) * chh;
            svg.push_str(&format!(
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\"/>\n",
                cw + 0.5,
                chh + 0.5
            ));
        }
    }
    svg.push_str(&axes(xlo, xhi, ylo, yhi, xlabel, ylabel));
    // colorbar
    let bar_x = WIDTH - MARGIN_R + 20.0;
    for k in 0..100 {
        let t = k as f64 / 99.0;
        let y = MARGIN_T + (1.0 - t) * ph;
        svg.push_str(&format!(
            "<rect x=\"{bar_x}\" y=\"{:.2}\" width=\"16\" height=\"{:.2}\" fill=\"{}\"/>\n",
            y - ph / 99.0,
            ph / 99.0 + 0.5,
            colormap(t)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
        bar_x,
        MARGIN_T - 6.0,
        fmt_tick(zhi)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
        bar_x,
        MARGIN_T + ph + 14.0,
        fmt_tick(zlo)
    ));
    svg.push_str("</svg>\n");
    svg
}
