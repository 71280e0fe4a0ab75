//! Minimal SVG line charts for reports.

use std::fmt::Write;

pub struct Series {
    pub name: String,
    /// One value per x label; `None` leaves a gap.
    pub values: Vec<Option<f64>>,
}

pub struct LineChart {
    pub title: String,
    pub y_label: String,
    pub x_labels: Vec<String>,
    pub series: Vec<Series>,
}

const W: f64 = 720.0;
const H: f64 = 360.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl LineChart {
    /// Render to SVG text. `stamp` adds a generation comment.
    pub fn render(&self, stamp: Option<&str>) -> String {
        let values = self.series.iter().flat_map(|s| s.values.iter().flatten().copied());
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = (hi - lo) * 0.05;
        let (lo, hi) = (lo - pad, hi + pad);
        let n = self.x_labels.len().max(2);
        let plot_w = W - LEFT - RIGHT;
        let plot_h = H - TOP - BOTTOM;
        let x = |i: usize| LEFT + plot_w * i as f64 / (n - 1) as f64;
        let y = |v: f64| TOP + plot_h * (hi - v) / (hi - lo);

        let mut out = String::new();
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
        if let Some(s) = stamp {
            let _ = writeln!(out, "<!-- generated {} -->", escape(s));
        }
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r##"<g stroke="#444" stroke-width="1"><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}"/><line x1="{LEFT}" y1="{}" x2="{}" y2="{}"/></g>"##,
            TOP + plot_h,
            TOP + plot_h,
            LEFT + plot_w,
            TOP + plot_h
        );
        for k in 0..=4 {
            let v = lo + (hi - lo) * k as f64 / 4.0;
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{:.4}</text>"#,
                LEFT - 6.0,
                y(v) + 3.0,
                v
            );
        }
        let step = (self.x_labels.len() / 8).max(1);
        for (i, label) in self.x_labels.iter().enumerate().step_by(step) {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
                x(i),
                TOP + plot_h + 16.0,
                escape(label)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="14" y="{}" font-family="sans-serif" font-size="11" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0,
            escape(&self.y_label)
        );

        for (k, s) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            // one path per unbroken run of values
            let mut d = String::new();
            let mut pen_down = false;
            for (i, v) in s.values.iter().enumerate() {
                match v {
                    Some(v) => {
                        let _ = write!(d, "{}{:.1},{:.1} ", if pen_down { "L" } else { "M" }, x(i), y(*v));
                        pen_down = true;
                    }
                    None => pen_down = false,
                }
            }
            let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
            let ly = TOP + 14.0 * k as f64 + 8.0;
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
                W - RIGHT + 10.0,
                W - RIGHT + 28.0,
                W - RIGHT + 32.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Trailing mean over up to `window` present values ending at each index.
pub fn rolling_mean(values: &[Option<f64>], window: usize) -> Vec<Option<f64>> {
    (0..values.len())
        .map(|i| {
            values[i]?;
            let from = (i + 1).saturating_sub(window);
            let present: Vec<f64> = values[from..=i].iter().flatten().copied().collect();
            Some(present.iter().sum::<f64>() / present.len() as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rolling_mean_skips_gaps() {
        let v = [Some(1.0), None, Some(3.0), Some(5.0)];
        assert_eq!(rolling_mean(&v, 2), vec![Some(1.0), None, Some(3.0), Some(4.0)]);
        assert_eq!(rolling_mean(&v, 12)[3], Some(3.0));
    }

    #[test]
    fn renders_series_and_stamp() {
        let chart = LineChart {
            title: "AP <rolling>".into(),
            y_label: "ap".into(),
            x_labels: vec!["2020-01".into(), "2020-02".into(), "2020-03".into()],
            series: vec![Series { name: "full".into(), values: vec![Some(0.1), None, Some(0.2)] }],
        };
        let svg = chart.render(None);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("AP &lt;rolling&gt;"));
        assert_eq!(svg.matches(" M").count() + svg.matches("\"M").count(), 2);
        assert!(!svg.contains("<!--"));
        assert!(chart.render(Some("now")).contains("<!-- generated now -->"));
    }
}
