//! Minimal self-contained SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 55.0);
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>, t: Vec<f64>, y: Vec<f64>) -> Self {
        Self { name: name.into(), t, y }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlotOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Shaded vertical band, e.g. a breaking-time bracket.
    pub band: Option<(f64, f64)>,
    /// Draw the line `y = 0` when it is in range.
    pub zero_line: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("nothing to plot: {0}")]
    Empty(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return None;
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return Some((lo - pad, hi + pad));
    }
    let pad = 0.04 * (hi - lo);
    Some((lo - pad, hi + pad))
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        format!("{:.4}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the chart as an SVG document.
pub fn render_svg(series: &[Series], opts: &PlotOptions) -> Result<String, PlotError> {
    if series.is_empty() || series.iter().all(|s| s.t.is_empty()) {
        return Err(PlotError::Empty("no points".into()));
    }
    if let Some(s) = series.iter().find(|s| s.t.len() != s.y.len()) {
        return Err(PlotError::Empty(format!("series `{}` has mismatched lengths", s.name)));
    }
    let xs = series.iter().flat_map(|s| s.t.iter().copied());
    let band = opts.band.into_iter().flat_map(|(a, b)| [a, b]);
    let (x0, x1) = bounds(xs.chain(band)).ok_or_else(|| PlotError::Empty("no finite abscissa".into()))?;
    let zero = opts.zero_line.then_some(0.0);
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.y.iter().copied()).chain(zero))
        .ok_or_else(|| PlotError::Empty("no finite ordinate".into()))?;

    let (ml, mr, mt, mb) = MARGIN;
    let (pw, ph) = (WIDTH - ml - mr, HEIGHT - mt - mb);
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| mt + (y1 - y) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&opts.title)
    );
    if let Some((a, b)) = opts.band {
        let (xa, xb) = (sx(a.min(b)), sx(a.max(b)));
        let _ = writeln!(
            out,
            r##"<rect class="band" x="{xa:.2}" y="{mt:.2}" width="{:.2}" height="{ph:.2}" fill="#f2c14e" fill-opacity="0.35"/>"##,
            xb - xa
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{ml:.2}" y="{mt:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    for k in 0..=5 {
        let fx = x0 + (x1 - x0) * k as f64 / 5.0;
        let fy = y0 + (y1 - y0) * k as f64 / 5.0;
        let (px, py) = (sx(fx), sy(fy));
        let _ = writeln!(
            out,
            r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#ccc"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            mt,
            mt + ph,
            mt + ph + 16.0,
            fmt_tick(fx)
        );
        let _ = writeln!(
            out,
            r##"<line x1="{ml:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#ccc"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            ml + pw,
            ml - 6.0,
            py + 4.0,
            fmt_tick(fy)
        );
    }
    if opts.zero_line && y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            out,
            r#"<line x1="{ml:.2}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="black" stroke-dasharray="4 3"/>"#,
            sy(0.0),
            ml + pw
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        HEIGHT - 12.0,
        escape(&opts.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0:.1}" text-anchor="middle" transform="rotate(-90 16 {0:.1})">{1}</text>"#,
        mt + ph / 2.0,
        escape(&opts.y_label)
    );
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = s
            .t
            .iter()
            .zip(&s.y)
            .filter(|(t, y)| t.is_finite() && y.is_finite())
            .map(|(&t, &y)| format!("{:.2},{:.2}", sx(t), sy(y)))
            .collect();
        if pts.len() == 1 {
            let (x, y) = pts[0].split_once(',').unwrap();
            let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
        } else if !pts.is_empty() {
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            ml + 10.0,
            mt + 16.0 + 14.0 * k as f64,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Writes the chart to `path`.
pub fn emit_plot(series: &[Series], opts: &PlotOptions, path: &Path) -> Result<(), PlotError> {
    let svg = render_svg(series, opts)?;
    std::fs::write(path, svg).map_err(|source| PlotError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_band_and_polyline() {
        let s = Series::new("-1/m", vec![0.0, 0.5, 1.0], vec![1.0, 0.5, 0.0]);
        let opts = PlotOptions {
            band: Some((0.9, 1.1)),
            zero_line: true,
            ..Default::default()
        };
        let svg = render_svg(&[s], &opts).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polyline") && svg.contains(r#"class="band""#));
    }

    #[test]
    fn single_point_is_degenerate_but_valid() {
        let s = Series::new("m", vec![0.0], vec![-1.0]);
        let svg = render_svg(&[s], &PlotOptions::default()).unwrap();
        assert!(svg.contains("<circle") && !svg.contains("NaN"));
    }

    #[test]
    fn empty_series_is_rejected() {
        assert!(render_svg(&[], &PlotOptions::default()).is_err());
        let s = Series::new("m", vec![0.0, 1.0], vec![1.0]);
        assert!(render_svg(&[s], &PlotOptions::default()).is_err());
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let s = Series::new("m", vec![0.0, 1.0], vec![1.0, 0.0]);
        let err = emit_plot(&[s], &PlotOptions::default(), Path::new("/nonexistent/dir/p.svg")).unwrap_err();
        assert!(matches!(err, PlotError::Io { .. }));
    }
}
