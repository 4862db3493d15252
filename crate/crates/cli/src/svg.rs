//! Minimal SVG line and bar charts.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    pub series: Vec<Series>,
    /// `(lo, hi, value)` bars drawn behind the series on a secondary axis.
    pub bars: Vec<(f64, f64, f64)>,
    pub bar_label: String,
}

impl Chart {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_y: false,
            x_range: None,
            y_range: None,
            series: Vec::new(),
            bars: Vec::new(),
            bar_label: String::new(),
        }
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn x_range(mut self, lo: f64, hi: f64) -> Self {
        self.x_range = Some((lo, hi));
        self
    }

    pub fn y_range(mut self, lo: f64, hi: f64) -> Self {
        self.y_range = Some((lo, hi));
        self
    }

    pub fn series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn bars(mut self, label: impl Into<String>, bars: Vec<(f64, f64, f64)>) -> Self {
        self.bar_label = label.into();
        self.bars = bars;
        self
    }

    fn ty(&self, y: f64) -> Option<f64> {
        if self.log_y {
            (y > 0.0).then(|| y.log10())
        } else {
            y.is_finite().then_some(y)
        }
    }

    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let finite = |v: &[f64]| -> Option<(f64, f64)> {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo.is_finite() && hi.is_finite()).then_some((lo, hi))
        };
        let xs: Vec<f64> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0))
            .chain(self.bars.iter().flat_map(|b| [b.0, b.1]))
            .filter(|x| x.is_finite())
            .collect();
        let ys: Vec<f64> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().filter_map(|p| self.ty(p.1)))
            .collect();
        let pad = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        let x = self.x_range.or_else(|| finite(&xs)).map_or((0.0, 1.0), pad);
        let y = match self.y_range {
            Some((lo, hi)) if self.log_y => (lo.log10(), hi.log10()),
            Some(r) => r,
            None => finite(&ys).map_or((0.0, 1.0), pad),
        };
        (x, y)
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.bounds();
        let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| MARGIN_TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );

        if !self.bars.is_empty() {
            let top = self.bars.iter().map(|b| b.2).fold(0.0, f64::max).max(1.0);
            for (lo, hi, v) in &self.bars {
                let (a, b) = (sx(lo.max(x0)), sx(hi.min(x1)));
                let h = v / top * ph;
                let _ = writeln!(
                    s,
                    r##"<rect x="{a:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="#cccccc" stroke="#999999"/>"##,
                    MARGIN_TOP + ph - h,
                    (b - a).max(0.0)
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11">{} (max {top})</text>"#,
                MARGIN_LEFT + pw + 10.0,
                HEIGHT - MARGIN_BOTTOM,
                escape(&self.bar_label)
            );
        }

        // axes and ticks
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for k in 0..=5 {
            let fx = x0 + (x1 - x0) * k as f64 / 5.0;
            let fy = y0 + (y1 - y0) * k as f64 / 5.0;
            let label_y = if self.log_y { format!("1e{fy:.1}") } else { tick(fy) };
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                sx(fx),
                MARGIN_TOP + ph + 18.0,
                tick(fx)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label_y}</text>"#,
                MARGIN_LEFT - 6.0,
                sy(fy) + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + pw / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            MARGIN_TOP + ph / 2.0,
            MARGIN_TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<String> = series
                .points
                .iter()
                .filter_map(|&(x, y)| Some(format!("{:.2},{:.2}", sx(x), sy(self.ty(y)?))))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
            let ly = MARGIN_TOP + 14.0 + 16.0 * k as f64;
            let lx = MARGIN_LEFT + pw + 10.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
                ly - 4.0,
                lx + 18.0,
                ly - 4.0,
                lx + 22.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        let t = format!("{v:.2}");
        t.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
