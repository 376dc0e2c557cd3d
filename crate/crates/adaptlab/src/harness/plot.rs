//! Deterministic SVG plots: fixed canvas, fixed palette, fixed numeric
//! formatting, no timestamps. The same data always renders byte-identical
//! output, so plots can be golden-file tested and diffed.

use std::path::Path;

use crate::Result;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 500.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

/// Points drawn per series before stride downsampling kicks in.
const MAX_PLOT_POINTS: usize = 1200;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#7f7f7f",
];

#[derive(Debug, Clone)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

impl Default for PlotStyle {
    fn default() -> Self {
        PlotStyle {
            title: String::new(),
            x_label: "t (s)".to_string(),
            y_label: "position".to_string(),
        }
    }
}

fn fmt(x: f64) -> String {
    // Fixed decimal formatting keeps coordinates byte-stable.
    let s = format!("{:.3}", x);
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

/// Tick label formatting: trims trailing zeros for readability.
fn fmt_tick(x: f64) -> String {
    let s = format!("{:.4}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Round-number tick spacing covering `span` with 4 to 8 ticks.
fn tick_step(span: f64) -> f64 {
    if span <= 0.0 || !span.is_finite() {
        return 1.0;
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    step * mag
}

fn downsample(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if points.len() <= MAX_PLOT_POINTS {
        return points.to_vec();
    }
    let stride = points.len().div_ceil(MAX_PLOT_POINTS);
    let mut out: Vec<(f64, f64)> = points.iter().step_by(stride).copied().collect();
    if let Some(last) = points.last() {
        if out.last() != Some(last) {
            out.push(*last);
        }
    }
    out
}

/// Render series as one SVG document string.
pub fn render_plot(series: &[PlotSeries], style: &PlotStyle) -> String {
    let sampled: Vec<PlotSeries> = series
        .iter()
        .map(|s| PlotSeries {
            label: s.label.clone(),
            points: downsample(&s.points),
        })
        .collect();

    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in &sampled {
        for (x, y) in &s.points {
            xmin = xmin.min(*x);
            xmax = xmax.max(*x);
            ymin = ymin.min(*y);
            ymax = ymax.max(*y);
        }
    }
    if !xmin.is_finite() {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    if xmax == xmin {
        xmax = xmin + 1.0;
    }
    if ymax == ymin {
        ymax = ymin + 1.0;
    }
    let ypad = (ymax - ymin) * 0.05;
    ymin -= ypad;
    ymax += ypad;

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - xmin) / (xmax - xmin) * plot_w;
    let sy = |y: f64| MARGIN_T + (ymax - y) / (ymax - ymin) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
        w = WIDTH,
        h = HEIGHT
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Axes frame.
    svg.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n",
        fmt(MARGIN_L),
        fmt(MARGIN_T),
        fmt(plot_w),
        fmt(plot_h)
    ));

    // Ticks and grid lines.
    let xstep = tick_step(xmax - xmin);
    let mut xt = (xmin / xstep).ceil() * xstep;
    while xt <= xmax + 1e-9 {
        let px = sx(xt);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n",
            fmt(MARGIN_T),
            fmt(MARGIN_T + plot_h),
            x = fmt(px)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333\">{}</text>\n",
            fmt(px),
            fmt(MARGIN_T + plot_h + 16.0),
            fmt_tick(xt)
        ));
        xt += xstep;
    }
    let ystep = tick_step(ymax - ymin);
    let mut yt = (ymin / ystep).ceil() * ystep;
    while yt <= ymax + 1e-9 {
        let py = sy(yt);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n",
            fmt(MARGIN_L),
            fmt(MARGIN_L + plot_w),
            y = fmt(py)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\" fill=\"#333\">{}</text>\n",
            fmt(MARGIN_L - 6.0),
            fmt(py + 4.0),
            fmt_tick(yt)
        ));
        yt += ystep;
    }

    // Series polylines.
    for (i, s) in sampled.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (j, (x, y)) in s.points.iter().enumerate() {
            d.push_str(if j == 0 { "M" } else { " L" });
            d.push_str(&format!("{},{}", fmt(sx(*x)), fmt(sy(*y))));
        }
        svg.push_str(&format!(
            "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            d, color
        ));
    }

    // Legend.
    for (i, s) in sampled.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN_T + 14.0 + 16.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            fmt(MARGIN_L + 10.0),
            fmt(MARGIN_L + 34.0),
            color,
            y = fmt(y)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"#333\">{}</text>\n",
            fmt(MARGIN_L + 40.0),
            fmt(y + 4.0),
            s.label
        ));
    }

    // Labels and title.
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\" fill=\"#111\">{}</text>\n",
        fmt(WIDTH / 2.0),
        fmt(22.0),
        style.title
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" fill=\"#111\">{}</text>\n",
        fmt(MARGIN_L + plot_w / 2.0),
        fmt(HEIGHT - 12.0),
        style.x_label
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" fill=\"#111\" transform=\"rotate(-90 {} {})\">{}</text>\n",
        fmt(16.0),
        fmt(MARGIN_T + plot_h / 2.0),
        fmt(16.0),
        fmt(MARGIN_T + plot_h / 2.0),
        style.y_label
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Render and write atomically.
pub fn emit_plot(series: &[PlotSeries], style: &PlotStyle, path: &Path) -> Result<()> {
    super::write_atomic(path, render_plot(series, style).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series() -> Vec<PlotSeries> {
        vec![
            PlotSeries {
                label: "reference".into(),
                points: (0..5000)
                    .map(|k| (k as f64 * 0.001, (k as f64 * 0.01).sin()))
                    .collect(),
            },
            PlotSeries {
                label: "unknown".into(),
                points: (0..5000)
                    .map(|k| (k as f64 * 0.001, (k as f64 * 0.012).cos()))
                    .collect(),
            },
        ]
    }

    #[test]
    fn rendering_is_byte_identical() {
        let style = PlotStyle::default();
        let a = render_plot(&series(), &style);
        let b = render_plot(&series(), &style);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("reference"));
    }

    #[test]
    fn three_series_get_three_paths_and_labels() {
        let mut s = series();
        s.push(PlotSeries {
            label: "compensated".into(),
            points: vec![(0.0, 0.0), (1.0, 1.0)],
        });
        let svg = render_plot(&s, &PlotStyle::default());
        assert_eq!(svg.matches("<path").count(), 3);
        assert!(svg.contains("compensated"));
    }

    #[test]
    fn empty_series_still_renders() {
        let svg = render_plot(&[], &PlotStyle::default());
        assert!(svg.contains("</svg>"));
    }
}
