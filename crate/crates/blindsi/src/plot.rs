//! Standalone SVG figures: per-group fit boxplots and a median-versus-p
//! line chart. The markup is assembled by hand with fixed-precision
//! coordinates, so identical inputs produce identical bytes and the files
//! open anywhere without a plotting runtime.

use crate::metrics::Summary;

const WIDTH: f64 = 560.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 56.0;

const SERIES_COLORS: [&str; 3] = ["#2b5d8a", "#b03a2e", "#3a7d44"];

/// One labeled box in a boxplot.
#[derive(Debug, Clone)]
pub struct BoxSpec {
    pub label: String,
    pub summary: Summary,
}

/// One named polyline in a line chart.
#[derive(Debug, Clone)]
pub struct LineSeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Maps a data interval to pixel coordinates, padding the range so marks
/// never sit on the frame.
struct Scale {
    lo: f64,
    hi: f64,
    pixel_lo: f64,
    pixel_hi: f64,
}

impl Scale {
    fn padded(lo: f64, hi: f64, pixel_lo: f64, pixel_hi: f64) -> Self {
        // no data at all: draw an arbitrary unit axis instead of NaN marks
        let (lo, hi) = if !lo.is_finite() || !hi.is_finite() {
            (0.0, 1.0)
        } else if (hi - lo).abs() < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = 0.06 * (hi - lo);
            (lo - pad, hi + pad)
        };
        Self {
            lo,
            hi,
            pixel_lo,
            pixel_hi,
        }
    }

    fn at(&self, v: f64) -> f64 {
        self.pixel_lo + (v - self.lo) / (self.hi - self.lo) * (self.pixel_hi - self.pixel_lo)
    }
}

fn open_svg(title: &str) -> String {
    let mut s = String::with_capacity(4096);
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    s.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"26\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(title)
    ));
    s
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn y_axis(s: &mut String, scale: &Scale, label: &str) {
    let x = MARGIN_LEFT;
    s.push_str(&format!(
        "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#333\"/>\n",
        MARGIN_TOP,
        HEIGHT - MARGIN_BOTTOM
    ));
    for i in 0..=4 {
        let v = scale.lo + (scale.hi - scale.lo) * i as f64 / 4.0;
        let y = scale.at(v);
        s.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{x:.2}\" y2=\"{y:.2}\" stroke=\"#333\"/>\n",
            x - 5.0
        ));
        s.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>\n",
            WIDTH - MARGIN_RIGHT
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\">{}</text>\n",
            x - 9.0,
            y + 4.0,
            fmt(v)
        ));
    }
    s.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {:.2})\">{}</text>\n",
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        xml_escape(label)
    ));
}

fn x_axis_line(s: &mut String) {
    s.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#333\"/>\n",
        MARGIN_LEFT,
        HEIGHT - MARGIN_BOTTOM,
        WIDTH - MARGIN_RIGHT,
        HEIGHT - MARGIN_BOTTOM
    ));
}

/// Boxplot with 1.5-IQR whiskers, one box per entry.
pub fn boxplot_svg(title: &str, y_label: &str, boxes: &[BoxSpec]) -> String {
    let lo = boxes
        .iter()
        .map(|b| b.summary.whisker_low)
        .fold(f64::INFINITY, f64::min);
    let hi = boxes
        .iter()
        .map(|b| b.summary.whisker_high)
        .fold(f64::NEG_INFINITY, f64::max);
    let scale = Scale::padded(lo, hi, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);

    let mut s = open_svg(title);
    y_axis(&mut s, &scale, y_label);
    x_axis_line(&mut s);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let slot = plot_w / boxes.len() as f64;
    for (i, b) in boxes.iter().enumerate() {
        let cx = MARGIN_LEFT + slot * (i as f64 + 0.5);
        let half = 0.25 * slot;
        let cap = 0.15 * slot;
        let m = &b.summary;
        let (y_q1, y_q3) = (scale.at(m.q1), scale.at(m.q3));
        let (y_lo, y_hi) = (scale.at(m.whisker_low), scale.at(m.whisker_high));
        let y_med = scale.at(m.median);

        for (from, to) in [(y_q3, y_hi), (y_q1, y_lo)] {
            s.push_str(&format!(
                "<line x1=\"{cx:.2}\" y1=\"{from:.2}\" x2=\"{cx:.2}\" y2=\"{to:.2}\" \
                 stroke=\"#2b5d8a\"/>\n"
            ));
        }
        for y in [y_lo, y_hi] {
            s.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
                 stroke=\"#2b5d8a\"/>\n",
                cx - cap,
                cx + cap
            ));
        }
        s.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{y_q3:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"#a6c8e4\" stroke=\"#2b5d8a\"/>\n",
            cx - half,
            2.0 * half,
            y_q1 - y_q3
        ));
        s.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y_med:.2}\" x2=\"{:.2}\" y2=\"{y_med:.2}\" \
             stroke=\"#b03a2e\" stroke-width=\"2\"/>\n",
            cx - half,
            cx + half
        ));
        s.push_str(&format!(
            "<text x=\"{cx:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
            HEIGHT - MARGIN_BOTTOM + 18.0,
            xml_escape(&b.label)
        ));
    }
    s.push_str("</svg>\n");
    s
}

/// Line chart with circular markers and a legend, one polyline per series.
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, series: &[LineSeries]) -> String {
    let xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|&(x, _)| x))
        .collect();
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|&(_, y)| y))
        .collect();
    let x_scale = Scale::padded(
        xs.iter().copied().fold(f64::INFINITY, f64::min),
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        MARGIN_LEFT,
        WIDTH - MARGIN_RIGHT,
    );
    let y_scale = Scale::padded(
        ys.iter().copied().fold(f64::INFINITY, f64::min),
        ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        HEIGHT - MARGIN_BOTTOM,
        MARGIN_TOP,
    );

    let mut s = open_svg(title);
    y_axis(&mut s, &y_scale, y_label);
    x_axis_line(&mut s);

    let mut ticks: Vec<f64> = xs.clone();
    ticks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ticks.dedup();
    for &x in &ticks {
        let px = x_scale.at(x);
        s.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#333\"/>\n",
            HEIGHT - MARGIN_BOTTOM,
            HEIGHT - MARGIN_BOTTOM + 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"11\">{x:.0}</text>\n",
            HEIGHT - MARGIN_BOTTOM + 18.0
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 14.0,
        xml_escape(x_label)
    ));

    for (i, line) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        let coords: Vec<String> = line
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", x_scale.at(x), y_scale.at(y)))
            .collect();
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            coords.join(" ")
        ));
        for &(x, y) in &line.points {
            s.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"{color}\"/>\n",
                x_scale.at(x),
                y_scale.at(y)
            ));
        }
        let ly = MARGIN_TOP + 16.0 * i as f64 + 8.0;
        let lx = WIDTH - MARGIN_RIGHT - 110.0;
        s.push_str(&format!(
            "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" \
             stroke=\"{color}\" stroke-width=\"2\"/>\n",
            lx + 22.0
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{}</text>\n",
            lx + 28.0,
            ly + 4.0,
            xml_escape(&line.name)
        ));
    }
    s.push_str("</svg>\n");
    s
}
