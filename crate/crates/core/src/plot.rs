//! Standalone SVG plot of the residual trace on a log scale.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed trace {path}: {message}")]
    Malformed { path: PathBuf, message: String },
}

/// One plotted sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualPoint {
    pub iter: usize,
    pub residual_c: f64,
    pub residual_z: f64,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

/// Reads `iter`, `residual_C` and `residual_Z` columns from a trace CSV.
pub fn read_trace(path: &Path) -> Result<Vec<ResidualPoint>, PlotError> {
    let malformed = |message: String| PlotError::Malformed { path: path.to_path_buf(), message };
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => PlotError::Io { path: path.to_path_buf(), source },
        other => malformed(format!("{other:?}")),
    })?;
    let headers = reader.headers().map_err(|e| malformed(e.to_string()))?.clone();
    let col =
        |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| malformed(format!("missing column {name}")));
    let (ci, cc, cz) = (col("iter")?, col("residual_C")?, col("residual_Z")?);
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| malformed(e.to_string()))?;
        let field = |idx: usize| record.get(idx).ok_or_else(|| malformed(format!("row {row} is short")));
        let iter = field(ci)?.parse().map_err(|_| malformed(format!("row {row}: bad iter")))?;
        let residual_c = field(cc)?.parse().map_err(|_| malformed(format!("row {row}: bad residual_C")))?;
        let residual_z = field(cz)?.parse().map_err(|_| malformed(format!("row {row}: bad residual_Z")))?;
        out.push(ResidualPoint { iter, residual_c, residual_z });
    }
    Ok(out)
}

/// Log10 of the value, with nonpositive values clamped to `floor`.
fn log_or(v: f64, floor: f64) -> f64 {
    if v > 0.0 {
        v.log10()
    } else {
        floor
    }
}

/// Renders log-scale `residual_C` and `residual_Z` curves against iteration.
///
/// The y axis spans the smallest to largest positive residual (zeros are
/// drawn at the bottom edge). A single point or constant series gets a
/// one-decade pad so the plot is never degenerate.
pub fn render_convergence_svg(points: &[ResidualPoint]) -> Result<String, PlotError> {
    if points.is_empty() {
        return Err(PlotError::EmptyTrace);
    }
    let positive: Vec<f64> = points
        .iter()
        .flat_map(|p| [p.residual_c, p.residual_z])
        .filter(|v| *v > 0.0 && v.is_finite())
        .map(f64::log10)
        .collect();
    let (mut lo, mut hi) =
        positive.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if positive.is_empty() {
        lo = -1.0;
        hi = 0.0;
    } else if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let first = points[0].iter as f64;
    let mut last = points[points.len() - 1].iter as f64;
    if last <= first {
        last = first + 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |it: f64| LEFT + (it - first) / (last - first) * plot_w;
    let sy = |lv: f64| TOP + (hi - lv.clamp(lo, hi)) / (hi - lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-ymin="{lo}" data-ymax="{hi}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ =
        writeln!(svg, r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#);
    // decade ticks inside the data range
    let mut decade = lo.ceil() as i64;
    while (decade as f64) <= hi {
        let y = sy(decade as f64);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">1e{decade}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0
        );
        decade += 1;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">iteration</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
        LEFT,
        TOP + plot_h + 16.0,
        points[0].iter,
        LEFT + plot_w,
        TOP + plot_h + 16.0,
        points[points.len() - 1].iter
    );
    for (id, color, pick) in [
        ("residual_C", "#1f77b4", (|p: &ResidualPoint| p.residual_c) as fn(&ResidualPoint) -> f64),
        ("residual_Z", "#d62728", |p: &ResidualPoint| p.residual_z),
    ] {
        let coords: Vec<String> =
            points.iter().map(|p| format!("{:.2},{:.2}", sx(p.iter as f64), sy(log_or(pick(p), lo)))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline id="{id}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" font-size="12" fill="#1f77b4">‖C(k+1) − C(k)‖²</text><text x="{:.2}" y="{:.2}" font-size="12" fill="#d62728">‖Z(k+1) − Z(k)‖²</text>"##,
        LEFT + plot_w - 150.0,
        TOP + 18.0,
        LEFT + plot_w - 150.0,
        TOP + 36.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Reads a trace CSV and writes its convergence plot to `out`.
pub fn emit_convergence_plot(trace: &Path, out: &Path) -> Result<(), PlotError> {
    let points = read_trace(trace)?;
    let svg = render_convergence_svg(&points)?;
    fs::write(out, svg).map_err(|source| PlotError::Io { path: out.to_path_buf(), source })
}
