//! Static SVG rendering of the experiment CSV artifacts.
//!
//! Three plot kinds: precision scaling on log-log axes with the two anchored
//! reference lines, sensitivity-sweep overlay, and the per-level magnitude
//! distributions on linear axes. Output is deterministic text: fixed-precision
//! coordinates, no timestamps, so identical input bytes give identical SVG.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const SCALING_HEADER: &str = "level,n_k,T,sigma_b,precision,sensitivity,heisenberg_ref,shotnoise_ref";
pub const SWEEP_HEADER: &str = "tau0,inv_tau0,delta_b_cs,delta_b_std";
pub const PHASE_HEADER: &str = "level,n_k,bin,magnitude,normalized";

/// Residuals at or below this are solver-floor rows, skipped when plotting.
const PLOT_FLOOR: f64 = 1e-12;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 52.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Scaling,
    Sweep,
    Phase,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scaling" => Ok(PlotKind::Scaling),
            "sweep" => Ok(PlotKind::Sweep),
            "phase" => Ok(PlotKind::Phase),
            other => Err(Error::Config(format!(
                "unknown plot kind '{other}', expected scaling, sweep, or phase"
            ))),
        }
    }
}

impl PlotKind {
    fn header(self) -> &'static str {
        match self {
            PlotKind::Scaling => SCALING_HEADER,
            PlotKind::Sweep => SWEEP_HEADER,
            PlotKind::Phase => PHASE_HEADER,
        }
    }
}

/// Renders `csv_path` as the given plot kind into `out_path`.
pub fn emit_svg(csv_path: &Path, kind: PlotKind, out_path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(csv_path)?;
    let svg = render_svg(&text, kind)?;
    std::fs::write(out_path, svg)?;
    Ok(())
}

/// Pure text-to-text rendering; see [`emit_svg`].
pub fn render_svg(csv_text: &str, kind: PlotKind) -> Result<String> {
    let rows = parse_csv(csv_text, kind.header())?;
    match kind {
        PlotKind::Scaling => render_scaling(&rows),
        PlotKind::Sweep => render_sweep(&rows),
        PlotKind::Phase => render_phase(&rows),
    }
}

fn parse_csv(text: &str, expected_header: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("CSV is empty, expected a header line".into()))?;
    let expected: Vec<&str> = expected_header.split(',').collect();
    let found: Vec<&str> = header.trim_end().split(',').collect();
    for (i, exp) in expected.iter().enumerate() {
        match found.get(i) {
            Some(got) if got == exp => {}
            Some(got) => {
                return Err(Error::Format(format!(
                    "CSV header column {} is '{got}', expected '{exp}'",
                    i + 1
                )))
            }
            None => {
                return Err(Error::Format(format!(
                    "CSV header is missing column {} ('{exp}')",
                    i + 1
                )))
            }
        }
    }
    if found.len() > expected.len() {
        return Err(Error::Format(format!(
            "CSV header has unexpected extra column '{}'",
            found[expected.len()]
        )));
    }
    let mut rows = Vec::new();
    for (line_no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.trim_end().split(',').collect();
        if cells.len() != expected.len() {
            return Err(Error::Format(format!(
                "CSV row {} has {} cells, expected {}",
                line_no + 2,
                cells.len(),
                expected.len()
            )));
        }
        let mut row = Vec::with_capacity(cells.len());
        for (cell, col) in cells.iter().zip(&expected) {
            let v: f64 = cell.parse().map_err(|_| {
                Error::Format(format!(
                    "CSV row {} column '{col}' is not a number: '{cell}'",
                    line_no + 2
                ))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format(
            "CSV contains a header but no data rows".into(),
        ));
    }
    Ok(rows)
}

/// Linear map from data range to pixel range.
fn scale(v: f64, from: (f64, f64), to: (f64, f64)) -> f64 {
    if from.1 == from.0 {
        return (to.0 + to.1) / 2.0;
    }
    to.0 + (v - from.0) / (from.1 - from.0) * (to.1 - to.0)
}

fn pad_range(lo: f64, hi: f64, pad: f64) -> (f64, f64) {
    if lo == hi {
        (lo - pad, hi + pad)
    } else {
        let span = hi - lo;
        (lo - pad * span, hi + pad * span)
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        scale(x, self.x, (MARGIN_LEFT, WIDTH - MARGIN_RIGHT))
    }

    fn py(&self, y: f64) -> f64 {
        // SVG y grows downward.
        scale(y, self.y, (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP))
    }
}

fn svg_open(out: &mut String) {
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
}

fn axes_box(out: &mut String) {
    let _ = writeln!(
        out,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
        MARGIN_LEFT,
        MARGIN_TOP,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    );
}

fn axis_labels(out: &mut String, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{x_label}</text>",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 12.0
    );
    let cy = (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0;
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{cy:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {cy:.2})\">{y_label}</text>"
    );
}

/// Decade tick marks and gridlines for a log10 axis.
fn log_ticks(frame: &Frame, out: &mut String, vertical: bool) {
    let (lo, hi) = if vertical { frame.y } else { frame.x };
    let first = lo.ceil() as i64;
    let last = hi.floor() as i64;
    for d in first..=last {
        let v = d as f64;
        if vertical {
            let py = frame.py(v);
            let _ = writeln!(
                out,
                "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"#dddddd\"/>",
                MARGIN_LEFT,
                WIDTH - MARGIN_RIGHT
            );
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">1e{d}</text>",
                MARGIN_LEFT - 6.0,
                py + 4.0
            );
        } else {
            let px = frame.px(v);
            let _ = writeln!(
                out,
                "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>",
                MARGIN_TOP,
                HEIGHT - MARGIN_BOTTOM
            );
            let _ = writeln!(
                out,
                "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">1e{d}</text>",
                HEIGHT - MARGIN_BOTTOM + 18.0
            );
        }
    }
}

/// Evenly spaced tick marks for a linear axis.
fn linear_ticks(frame: &Frame, out: &mut String, vertical: bool, count: usize) {
    let (lo, hi) = if vertical { frame.y } else { frame.x };
    for i in 0..=count {
        let v = lo + (hi - lo) * i as f64 / count as f64;
        let label = if v == 0.0 || (v.abs() >= 0.01 && v.abs() < 10000.0) {
            format!("{v:.2}")
        } else {
            format!("{v:.2e}")
        };
        if vertical {
            let py = frame.py(v);
            let _ = writeln!(
                out,
                "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"#dddddd\"/>",
                MARGIN_LEFT,
                WIDTH - MARGIN_RIGHT
            );
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{label}</text>",
                MARGIN_LEFT - 6.0,
                py + 4.0
            );
        } else {
            let px = frame.px(v);
            let _ = writeln!(
                out,
                "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>",
                MARGIN_TOP,
                HEIGHT - MARGIN_BOTTOM
            );
            let _ = writeln!(
                out,
                "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{label}</text>",
                HEIGHT - MARGIN_BOTTOM + 18.0
            );
        }
    }
}

fn polyline(out: &mut String, pts: &[(f64, f64)], style: &str) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(out, "<polyline points=\"{}\" {style}/>", coords.join(" "));
}

fn circles(out: &mut String, pts: &[(f64, f64)], fill: &str) {
    for (x, y) in pts {
        let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"{fill}\"/>");
    }
}

fn legend(out: &mut String, entries: &[(&str, &str)]) {
    let x = MARGIN_LEFT + 12.0;
    for (i, (color, label)) in entries.iter().enumerate() {
        let y = MARGIN_TOP + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            x + 22.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\">{label}</text>",
            x + 28.0,
            y + 4.0
        );
    }
}

// Columns: level, n_k, T, sigma_b, precision, sensitivity, heisenberg_ref, shotnoise_ref.
fn render_scaling(rows: &[Vec<f64>]) -> Result<String> {
    let mut kept: Vec<&Vec<f64>> = rows
        .iter()
        .filter(|r| r[3] > PLOT_FLOOR && r[2] > 0.0 && r[4] > 0.0)
        .collect();
    if kept.is_empty() {
        // Floor-only run (e.g. full sampling at every level): plot as-is.
        kept = rows.iter().filter(|r| r[2] > 0.0 && r[4] > 0.0).collect();
    }
    if kept.is_empty() {
        return Err(Error::Format(
            "scaling CSV has no rows with positive resources and precision".into(),
        ));
    }
    let xs: Vec<f64> = kept.iter().map(|r| r[2].log10()).collect();
    let mut ys: Vec<f64> = Vec::new();
    for r in &kept {
        ys.push(r[4].log10());
        if r[6] > 0.0 {
            ys.push(r[6].log10());
        }
        if r[7] > 0.0 {
            ys.push(r[7].log10());
        }
    }
    let x_range = pad_range(
        xs.iter().cloned().fold(f64::INFINITY, f64::min),
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        0.05,
    );
    let y_range = pad_range(
        ys.iter().cloned().fold(f64::INFINITY, f64::min),
        ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        0.05,
    );
    let frame = Frame {
        x: x_range,
        y: y_range,
    };

    let mut out = String::new();
    svg_open(&mut out);
    log_ticks(&frame, &mut out, false);
    log_ticks(&frame, &mut out, true);
    axes_box(&mut out);
    axis_labels(&mut out, "T", "sigma_b^2 T");

    let data: Vec<(f64, f64)> = kept
        .iter()
        .map(|r| (frame.px(r[2].log10()), frame.py(r[4].log10())))
        .collect();
    let heis: Vec<(f64, f64)> = kept
        .iter()
        .filter(|r| r[6] > 0.0)
        .map(|r| (frame.px(r[2].log10()), frame.py(r[6].log10())))
        .collect();
    let shot: Vec<(f64, f64)> = kept
        .iter()
        .filter(|r| r[7] > 0.0)
        .map(|r| (frame.px(r[2].log10()), frame.py(r[7].log10())))
        .collect();
    polyline(&mut out, &heis, "fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"");
    polyline(
        &mut out,
        &shot,
        "fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"2,4\"",
    );
    polyline(&mut out, &data, "fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"");
    circles(&mut out, &data, "#1f77b4");
    legend(
        &mut out,
        &[
            ("#1f77b4", "recovered"),
            ("black", "1/T reference"),
            ("#d62728", "1/sqrt(T) reference"),
        ],
    );
    out.push_str("</svg>\n");
    Ok(out)
}

// Columns: tau0, inv_tau0, delta_b_cs, delta_b_std.
fn render_sweep(rows: &[Vec<f64>]) -> Result<String> {
    for (i, r) in rows.iter().enumerate() {
        if r[2] <= 0.0 || r[3] <= 0.0 {
            return Err(Error::Format(format!(
                "sweep CSV row {} has non-positive sensitivity",
                i + 2
            )));
        }
    }
    let mut ordered: Vec<&Vec<f64>> = rows.iter().collect();
    ordered.sort_by(|a, b| a[1].partial_cmp(&b[1]).unwrap());
    let xs: Vec<f64> = ordered.iter().map(|r| r[1]).collect();
    let ys: Vec<f64> = ordered
        .iter()
        .flat_map(|r| [r[2].log10(), r[3].log10()])
        .collect();
    let frame = Frame {
        x: pad_range(
            xs.iter().cloned().fold(f64::INFINITY, f64::min),
            xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            0.05,
        ),
        y: pad_range(
            ys.iter().cloned().fold(f64::INFINITY, f64::min),
            ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            0.1,
        ),
    };

    let mut out = String::new();
    svg_open(&mut out);
    linear_ticks(&frame, &mut out, false, 5);
    log_ticks(&frame, &mut out, true);
    axes_box(&mut out);
    axis_labels(&mut out, "1/tau0", "delta B");

    let cs: Vec<(f64, f64)> = ordered
        .iter()
        .map(|r| (frame.px(r[1]), frame.py(r[2].log10())))
        .collect();
    let std: Vec<(f64, f64)> = ordered
        .iter()
        .map(|r| (frame.px(r[1]), frame.py(r[3].log10())))
        .collect();
    polyline(&mut out, &std, "fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"");
    circles(&mut out, &std, "#d62728");
    polyline(&mut out, &cs, "fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"");
    circles(&mut out, &cs, "#1f77b4");
    legend(
        &mut out,
        &[("#1f77b4", "compressed"), ("#d62728", "standard baseline")],
    );
    out.push_str("</svg>\n");
    Ok(out)
}

// Columns: level, n_k, bin, magnitude, normalized. One stacked trace per level.
fn render_phase(rows: &[Vec<f64>]) -> Result<String> {
    let mut levels: Vec<usize> = rows.iter().map(|r| r[0] as usize).collect();
    levels.sort_unstable();
    levels.dedup();
    let max_level = *levels.last().unwrap();
    let max_bin = rows.iter().map(|r| r[2]).fold(0.0f64, f64::max);
    let frame = Frame {
        x: (0.0, max_bin.max(1.0)),
        y: (-0.2, max_level as f64 + 1.2),
    };

    let mut out = String::new();
    svg_open(&mut out);
    linear_ticks(&frame, &mut out, false, 6);
    axes_box(&mut out);
    axis_labels(&mut out, "frequency bin", "level k (offset traces)");

    for &level in &levels {
        let mut pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r[0] as usize == level)
            .map(|r| (r[2], r[4]))
            .collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let px: Vec<(f64, f64)> = pts
            .iter()
            .map(|(bin, norm)| (frame.px(*bin), frame.py(level as f64 + norm * 0.95)))
            .collect();
        // Grey tone darkens with level, mirroring denser sampling.
        let shade = 200 - (160 * level / max_level.max(1)) as i32;
        let color = format!("rgb({shade},{shade},{shade})");
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"{color}\">k={level}</text>",
            MARGIN_LEFT - 6.0,
            frame.py(level as f64) + 4.0
        );
        polyline(
            &mut out,
            &px,
            &format!("fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\""),
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scaling_csv() -> String {
        let mut s = format!("{SCALING_HEADER}\n");
        for (i, n) in [1usize, 2, 5, 9].iter().enumerate() {
            let t = *n as f64;
            let sigma = 0.5 / t;
            let p = sigma * sigma * t;
            s.push_str(&format!(
                "{i},{n},{t:.12e},{sigma:.12e},{p:.12e},{:.12e},{:.12e},{:.12e}\n",
                p.sqrt(),
                0.25 / t,
                0.25 / t.sqrt()
            ));
        }
        s
    }

    #[test]
    fn scaling_svg_has_data_and_two_references() {
        let svg = render_svg(&scaling_csv(), PlotKind::Scaling).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("1/T reference"));
    }

    #[test]
    fn identical_input_gives_identical_svg() {
        let csv = scaling_csv();
        let a = render_svg(&csv, PlotKind::Scaling).unwrap();
        let b = render_svg(&csv, PlotKind::Scaling).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn header_only_csv_is_a_format_error() {
        let err = render_svg(&format!("{SCALING_HEADER}\n"), PlotKind::Scaling).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn wrong_header_column_is_named_in_the_error() {
        let csv = "level,n_k,T,sigma,precision,sensitivity,heisenberg_ref,shotnoise_ref\n1,1,1,1,1,1,1,1\n";
        let err = render_svg(csv, PlotKind::Scaling).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("'sigma'"), "message: {msg}");
        assert!(msg.contains("'sigma_b'"), "message: {msg}");
    }

    #[test]
    fn non_numeric_cell_is_a_format_error() {
        let csv = format!("{SWEEP_HEADER}\n0.5,2.0,oops,0.3\n");
        let err = render_svg(&csv, PlotKind::Sweep).unwrap_err();
        assert!(err.to_string().contains("delta_b_cs"));
    }

    #[test]
    fn sweep_svg_renders_both_curves() {
        let csv = format!(
            "{SWEEP_HEADER}\n\
             5.76e-1,1.7361111111e0,1.2e-2,3.0e-1\n\
             2.88e-1,3.4722222222e0,8.5e-3,2.1e-1\n\
             1.44e-1,6.9444444444e0,6.0e-3,1.5e-1\n"
        );
        let svg = render_svg(&csv, PlotKind::Sweep).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("standard baseline"));
    }

    #[test]
    fn phase_svg_stacks_one_trace_per_level() {
        let mut csv = format!("{PHASE_HEADER}\n");
        for level in 0..3usize {
            for bin in 0..8usize {
                let mag = if bin == 4 { 1.0 } else { 0.1 };
                csv.push_str(&format!("{level},{},{bin},{mag:.12e},{mag:.12e}\n", 1 << level));
            }
        }
        let svg = render_svg(&csv, PlotKind::Phase).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("k=0") && svg.contains("k=2"));
    }

    #[test]
    fn emit_svg_writes_byte_identical_files() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("scaling.csv");
        std::fs::write(&csv_path, scaling_csv()).unwrap();
        let out_a = dir.path().join("a.svg");
        let out_b = dir.path().join("b.svg");
        emit_svg(&csv_path, PlotKind::Scaling, &out_a).unwrap();
        emit_svg(&csv_path, PlotKind::Scaling, &out_b).unwrap();
        let a = std::fs::read(&out_a).unwrap();
        let b = std::fs::read(&out_b).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
    }

    #[test]
    fn plot_kind_parses_known_names_only() {
        assert_eq!("scaling".parse::<PlotKind>().unwrap(), PlotKind::Scaling);
        assert_eq!("sweep".parse::<PlotKind>().unwrap(), PlotKind::Sweep);
        assert_eq!("phase".parse::<PlotKind>().unwrap(), PlotKind::Phase);
        assert!("pie".parse::<PlotKind>().is_err());
    }
}
