//! Dependency-free SVG plots: loss/parameter series and 3D parameter-triple
//! scatters projected onto their spiral plane.
//!
//! Points in scatter plots are colored by epoch on a fixed linear gradient
//! from blue `#1f77b4` (window start) to red `#d62728` (window end), so the
//! direction of time is readable from color alone. Long series are decimated
//! by per-bucket min/max pairs, which preserves spikes exactly.

use std::path::Path;

use adamlab_core::analysis::{fit_spiral, triple_series, SpiralFit};
use adamlab_core::{Error, Result, Trajectory};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;

/// Cap on emitted polyline points; longer series are min/max-decimated.
pub const MAX_SERIES_POINTS: usize = 10_000;

const COLOR_START: [u8; 3] = [0x1f, 0x77, 0xb4];
const COLOR_END: [u8; 3] = [0xd6, 0x27, 0x28];

/// Epoch-gradient color: linear RGB interpolation start -> end.
pub fn epoch_color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let mix = |a: u8, b: u8| (a as f64 + t * (b as f64 - a as f64)).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(COLOR_START[0], COLOR_END[0]),
        mix(COLOR_START[1], COLOR_END[1]),
        mix(COLOR_START[2], COLOR_END[2])
    )
}

/// Options for [`render_series`].
#[derive(Debug, Clone, Default)]
pub struct SeriesPlot {
    pub title: String,
    /// Plot `log10` of the values (loss curves span many decades).
    pub log_y: bool,
    /// Epochs to mark with spike glyphs.
    pub spike_epochs: Vec<usize>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Axis ticks: about five round values covering [lo, hi].
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let range = hi - lo;
    debug_assert!(range > 0.0);
    let raw = range / 5.0;
    let mag = libm::pow(10.0, libm::floor(libm::log10(raw)));
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| range / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = libm::ceil(lo / step) * step;
    let mut out = Vec::new();
    let mut t = first;
    while t <= hi + 1e-9 * range {
        out.push(t);
        t += step;
    }
    out
}

/// Min/max decimation: at most `cap` points, keeping each bucket's extremes
/// in chronological order.
fn decimate(points: &[(f64, f64)], cap: usize) -> Vec<(f64, f64)> {
    if points.len() <= cap {
        return points.to_vec();
    }
    let buckets = cap / 2;
    let mut out = Vec::with_capacity(cap);
    for b in 0..buckets {
        let start = b * points.len() / buckets;
        let end = ((b + 1) * points.len() / buckets).max(start + 1);
        let slice = &points[start..end];
        let (mut imin, mut imax) = (0usize, 0usize);
        for (i, p) in slice.iter().enumerate() {
            if p.1 < slice[imin].1 {
                imin = i;
            }
            if p.1 > slice[imax].1 {
                imax = i;
            }
        }
        if imin == imax {
            out.push(slice[imin]);
        } else {
            out.push(slice[imin.min(imax)]);
            out.push(slice[imin.max(imax)]);
        }
    }
    out
}

struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x_lo) / (self.x_hi - self.x_lo) * (WIDTH - 2.0 * MARGIN)
    }
    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y_lo) / (self.y_hi - self.y_lo) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn svg_open(out: &mut String) {
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str, y_tick_label: impl Fn(f64) -> String) {
    let (x0, y0) = (MARGIN, HEIGHT - MARGIN);
    out.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>\n",
        WIDTH - MARGIN
    ));
    out.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{MARGIN}\" stroke=\"black\"/>\n"
    ));
    for t in ticks(frame.x_lo, frame.x_hi) {
        let x = frame.x(t);
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
            y0 + 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            y0 + 18.0,
            fmt_num(t)
        ));
    }
    for t in ticks(frame.y_lo, frame.y_hi) {
        let y = frame.y(t);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{x0}\" y2=\"{y}\" stroke=\"black\"/>\n",
            x0 - 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            x0 - 8.0,
            y + 4.0,
            esc(&y_tick_label(t))
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 15.0,
        esc(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"15\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" \
         transform=\"rotate(-90 15 {})\">{}</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        esc(y_label)
    ));
}

fn fmt_num(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        if s.is_empty() || s == "-" {
            "0".into()
        } else {
            s
        }
    }
}

/// Renders a series as an SVG polyline. A non-finite tail truncates the plot
/// with a divergence annotation; series longer than [`MAX_SERIES_POINTS`]
/// are min/max-decimated.
pub fn render_series(series: &[f64], opts: &SeriesPlot, out_path: &Path) -> Result<()> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("cannot plot an empty series".into()));
    }
    let finite_end = series.iter().position(|v| !v.is_finite()).unwrap_or(series.len());
    let diverged = finite_end < series.len();
    let visible = &series[..finite_end.max(1)];

    // Log scale clamps at the smallest positive visible value.
    let log_floor = visible.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    let use_log = opts.log_y && log_floor.is_finite();
    let tx = |v: f64| -> f64 {
        if use_log {
            libm::log10(v.max(log_floor))
        } else {
            v
        }
    };

    let points: Vec<(f64, f64)> = visible
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as f64, if v.is_finite() { tx(v) } else { 0.0 }))
        .collect();
    let points = decimate(&points, MAX_SERIES_POINTS);

    let (mut y_lo, mut y_hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    if !(y_hi > y_lo) {
        // Constant series: expand so the axis still carries ticks.
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    let frame = Frame {
        x_lo: 0.0,
        x_hi: (series.len() - 1).max(1) as f64,
        y_lo,
        y_hi,
    };

    let mut out = String::new();
    svg_open(&mut out);
    let y_label = if use_log { "log10(value)" } else { "value" };
    axes(&mut out, &frame, "epoch", y_label, fmt_num);

    let coords: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
        .collect();
    out.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"{}\"/>\n",
        coords.join(" ")
    ));

    for &e in &opts.spike_epochs {
        if e < finite_end {
            let (x, y) = (frame.x(e as f64), frame.y(tx(series[e])));
            out.push_str(&format!(
                "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"none\" stroke=\"#d62728\"/>\n"
            ));
        }
    }
    if diverged {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"#d62728\" text-anchor=\"end\">\
             diverged at epoch {finite_end}</text>\n",
            WIDTH - MARGIN,
            MARGIN + 14.0
        ));
    }
    if !opts.title.is_empty() {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"20\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
            WIDTH / 2.0,
            esc(&opts.title)
        ));
    }
    out.push_str("</svg>\n");
    std::fs::write(out_path, out)?;
    Ok(())
}

/// Renders the scatter of a parameter triple over a snapshot window,
/// projected onto its fitted spiral plane; when the geometry is degenerate
/// the raw first two coordinates are drawn with a warning annotation.
/// Exactly one circle is emitted per input point, colored by epoch.
pub fn render_scatter3(
    traj: &Trajectory,
    triple: [usize; 3],
    window: (usize, usize),
    out_path: &Path,
) -> Result<()> {
    let series = triple_series(&traj.snapshots, triple)?;
    let selected: Vec<(usize, [f64; 3])> = series
        .into_iter()
        .filter(|(e, p)| (window.0..=window.1).contains(e) && p.iter().all(|x| x.is_finite()))
        .collect();
    if selected.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no finite snapshots in window {window:?}"
        )));
    }

    let fit: Option<SpiralFit> = fit_spiral(&selected, window).ok();
    let planar: Vec<(usize, f64, f64)> = match &fit {
        Some(f) => {
            let c = f.centroid;
            let (u, v) = (f.plane_basis[0], f.plane_basis[1]);
            selected
                .iter()
                .map(|&(e, p)| {
                    let q = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
                    (
                        e,
                        q[0] * u[0] + q[1] * u[1] + q[2] * u[2],
                        q[0] * v[0] + q[1] * v[1] + q[2] * v[2],
                    )
                })
                .collect()
        }
        None => selected.iter().map(|&(e, p)| (e, p[0], p[1])).collect(),
    };

    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(_, x, y) in &planar {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if !(x_hi > x_lo) {
        x_lo -= 1.0;
        x_hi += 1.0;
    }
    if !(y_hi > y_lo) {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    let frame = Frame { x_lo, x_hi, y_lo, y_hi };

    let (e0, e1) = (planar.first().unwrap().0, planar.last().unwrap().0);
    let span = (e1 - e0).max(1) as f64;

    let mut out = String::new();
    svg_open(&mut out);
    let [i, j, k] = triple;
    let (x_label, y_label) = if fit.is_some() {
        (
            format!("plane u of (p{i}, p{j}, p{k}), epochs {}..{}", window.0, window.1),
            "plane v".to_string(),
        )
    } else {
        (format!("p{i} (raw), epochs {}..{}", window.0, window.1), format!("p{j} (raw)"))
    };
    axes(&mut out, &frame, &x_label, &y_label, fmt_num);

    for &(e, x, y) in &planar {
        let t = (e - e0) as f64 / span;
        out.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"{}\"/>\n",
            frame.x(x),
            frame.y(y),
            epoch_color(t)
        ));
    }

    if let Some(f) = &fit {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">winding {:+.2} turns, \
             plane residual rms {:.3e}</text>\n",
            WIDTH - MARGIN,
            MARGIN - 8.0,
            f.winding_number,
            f.residual_rms
        ));
    } else {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"#d62728\" text-anchor=\"end\">\
             degenerate geometry: raw coordinate projection</text>\n",
            WIDTH - MARGIN,
            MARGIN - 8.0
        ));
    }
    out.push_str("</svg>\n");
    std::fs::write(out_path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_color_endpoints() {
        assert_eq!(epoch_color(0.0), "#1f77b4");
        assert_eq!(epoch_color(1.0), "#d62728");
        assert_eq!(epoch_color(-3.0), "#1f77b4");
    }

    #[test]
    fn decimate_preserves_extremes() {
        let mut points: Vec<(f64, f64)> = (0..50_000).map(|i| (i as f64, 1.0)).collect();
        points[30_123].1 = 999.0;
        points[40_999].1 = -7.0;
        let out = decimate(&points, MAX_SERIES_POINTS);
        assert!(out.len() <= MAX_SERIES_POINTS);
        assert!(out.iter().any(|p| p.1 == 999.0), "max survives decimation");
        assert!(out.iter().any(|p| p.1 == -7.0), "min survives decimation");
        // Chronological order kept.
        assert!(out.windows(2).all(|w| w[0].0 <= w[1].0));
    }

    #[test]
    fn ticks_cover_range() {
        let t = ticks(0.0, 10.0);
        assert!(t.len() >= 2);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        let t = ticks(-1.0, 1.0);
        assert!(t.len() >= 2);
    }
}
