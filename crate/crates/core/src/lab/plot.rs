//! Minimal log-log SVG plots.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Markers,
    Line,
    Dashed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series {
    pub label: String,
    pub kind: SeriesKind,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Plot {
    /// File stem under `plots/`.
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(name: &str, title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            name: name.into(),
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    pub fn with(mut self, label: &str, kind: SeriesKind, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series {
            label: label.into(),
            kind,
            points,
        });
        self
    }
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn usable(p: &(f64, f64)) -> bool {
    p.0 > 0.0 && p.1 > 0.0 && p.0.is_finite() && p.1.is_finite()
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.floor() as i32, hi.ceil() as i32);
    if b - a >= 2 {
        let step = ((b - a) as f64 / 6.0).ceil().max(1.0) as i32;
        (a..=b).step_by(step as usize).map(f64::from).filter(|t| *t >= lo - 1e-9 && *t <= hi + 1e-9).collect()
    } else {
        (0..5).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect()
    }
}

fn label(exp10: f64) -> String {
    if (exp10 - exp10.round()).abs() < 1e-9 {
        format!("1e{}", exp10.round() as i32)
    } else {
        format!("{:.3}", 10f64.powf(exp10))
    }
}

/// Renders the plot with logarithmic axes. Nonpositive points are skipped;
/// a plot without usable points carries a "no data" annotation.
pub fn render_svg(plot: &Plot) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!("<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        W / 2.0,
        escape(&plot.title)
    ));
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    out.push_str(&format!(
        "<rect x=\"{x0}\" y=\"{y0}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        x1 - x0,
        y1 - y0
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        (x0 + x1) / 2.0,
        H - 14.0,
        escape(&plot.x_label)
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(&plot.y_label)
    ));

    let pts: Vec<(f64, f64)> = plot
        .series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(usable)
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    if pts.is_empty() {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"18\" fill=\"#888\">no data</text>\n",
            (x0 + x1) / 2.0,
            (y0 + y1) / 2.0
        ));
        out.push_str("</svg>\n");
        return out;
    }
    let pad = |lo: f64, hi: f64| {
        if hi - lo < 1e-9 {
            (lo - 0.5, hi + 0.5)
        } else {
            let m = 0.05 * (hi - lo);
            (lo - m, hi + m)
        }
    };
    let (lx, hx) = pad(
        pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let (ly, hy) = pad(
        pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    let sx = |v: f64| x0 + (v - lx) / (hx - lx) * (x1 - x0);
    let sy = |v: f64| y1 - (v - ly) / (hy - ly) * (y1 - y0);

    for t in ticks(lx, hx) {
        let x = sx(t);
        out.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{y1}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"black\"/>\n<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            y1 + 5.0,
            y1 + 19.0,
            label(t)
        ));
    }
    for t in ticks(ly, hy) {
        let y = sy(t);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y:.1}\" x2=\"{x0}\" y2=\"{y:.1}\" stroke=\"black\"/>\n<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            label(t)
        ));
    }

    for (k, s) in plot.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mapped: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|p| usable(p))
            .map(|(x, y)| (sx(x.log10()), sy(y.log10())))
            .collect();
        match s.kind {
            SeriesKind::Markers => {
                for (x, y) in &mapped {
                    out.push_str(&format!(
                        "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"2.5\" fill=\"{color}\" fill-opacity=\"0.6\"/>\n"
                    ));
                }
            }
            SeriesKind::Line | SeriesKind::Dashed => {
                let path: Vec<String> = mapped.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                let dash = if s.kind == SeriesKind::Dashed {
                    " stroke-dasharray=\"6 4\""
                } else {
                    ""
                };
                out.push_str(&format!(
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"{dash}/>\n",
                    path.join(" ")
                ));
            }
        }
        let ly = y0 + 16.0 + 16.0 * k as f64;
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n<text x=\"{}\" y=\"{}\">{}</text>\n",
            x1 - 170.0,
            ly - 9.0,
            x1 - 155.0,
            ly,
            escape(&s.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_plot_says_no_data() {
        let svg = render_svg(&Plot::new("x", "t", "n", "risk"));
        assert!(svg.contains("no data"));
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn plot_with_points() {
        let p = Plot::new("x", "t", "n", "risk").with(
            "median",
            SeriesKind::Line,
            vec![(64.0, 0.1), (128.0, 0.09), (256.0, 0.0)],
        );
        let svg = render_svg(&p);
        assert!(svg.contains("<polyline"));
        assert!(!svg.contains("no data"));
    }
}
