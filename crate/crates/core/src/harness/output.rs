//! Result files.
//!
//! An output directory receives:
//!
//! * `config.txt` with the resolved `key=value` configuration,
//! * `run_{r}.csv` per run (`run,episode,reward`, episodes 1-based),
//! * `aggregate.csv` (`episode,mean_cumavg,stderr`),
//! * `windowed.csv` (`episode,mean_windowed,stderr`),
//! * `curve.svg`, the aggregate cumulative-average curve,
//! * `colormap.csv` and `colormap.ppm` for single-state games.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::metrics::{
    aggregate_cumulative, aggregate_curves, windowed_mean, AggregatePoint, MetricSeries,
};
use crate::error::{Error, Result};
use crate::games::{colormap_grid, MatrixGameSpec};
use crate::learner::{write_snapshot, SnapshotRow};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Runs an I/O closure against a fresh buffered file.
fn write_file<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut w = create(path)?;
    body(&mut w).map_err(|e| Error::io(path, e))?;
    finish(path, w)
}

pub fn write_run_csv(path: &Path, series: &MetricSeries) -> Result<()> {
    write_file(path, |w| {
        writeln!(w, "run,episode,reward")?;
        for (k, r) in series.rewards.iter().enumerate() {
            writeln!(w, "{},{},{}", series.run, k + 1, r)?;
        }
        Ok(())
    })
}

pub fn write_aggregate_csv(path: &Path, header: &str, points: &[AggregatePoint]) -> Result<()> {
    write_file(path, |w| {
        writeln!(w, "{header}")?;
        for p in points {
            writeln!(w, "{},{},{}", p.episode, p.mean, p.stderr)?;
        }
        Ok(())
    })
}

pub fn write_config(path: &Path, cfg: &ExperimentConfig) -> Result<()> {
    write_file(path, |w| {
        for (k, v) in cfg.to_pairs() {
            writeln!(w, "{k}={v}")?;
        }
        Ok(())
    })
}

pub fn write_snapshot_csv(path: &Path, rows: &[SnapshotRow]) -> Result<()> {
    write_file(path, |w| write_snapshot(rows, w))
}

/// Colormap as CSV: `a1,a2,reward` per lattice point.
pub fn write_colormap_csv(path: &Path, spec: &MatrixGameSpec, resolution: usize) -> Result<()> {
    let grid = colormap_grid(spec, resolution)?;
    let step = 1.0 / (resolution - 1) as f64;
    write_file(path, |w| {
        writeln!(w, "a1,a2,reward")?;
        for (i, row) in grid.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                writeln!(w, "{},{},{}", i as f64 * step, j as f64 * step, v)?;
            }
        }
        Ok(())
    })
}

/// Blue (low) to red (high).
fn heat(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t).round() as u8;
    let g = (255.0 * (1.0 - (2.0 * t - 1.0).abs())).round() as u8;
    let b = (255.0 * (1.0 - t)).round() as u8;
    (r, g, b)
}

/// Colormap as a plain PPM image. Agent 1 runs down, agent 2 across.
pub fn write_colormap_ppm(path: &Path, spec: &MatrixGameSpec, resolution: usize) -> Result<()> {
    let grid = colormap_grid(spec, resolution)?;
    let lo = grid.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let hi = grid
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    write_file(path, |w| {
        writeln!(w, "P3\n{resolution} {resolution}\n255")?;
        for row in &grid {
            let line = row
                .iter()
                .map(|v| {
                    let (r, g, b) = heat((v - lo) / span);
                    format!("{r} {g} {b}")
                })
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(w, "{line}")?;
        }
        Ok(())
    })
}

/// Minimal SVG line chart of a mean curve with a ±stderr band, downsampled
/// to at most `max_points` vertices.
pub fn render_curve_svg(points: &[AggregatePoint], title: &str, max_points: usize) -> String {
    const W: f64 = 800.0;
    const H: f64 = 480.0;
    const L: f64 = 70.0;
    const R: f64 = 20.0;
    const T: f64 = 40.0;
    const B: f64 = 50.0;
    if points.is_empty() {
        return format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\"/>\n"
        );
    }
    let stride = points.len().div_ceil(max_points.max(2));
    let mut picked: Vec<&AggregatePoint> = points.iter().step_by(stride).collect();
    if picked.last().map(|p| p.episode) != points.last().map(|p| p.episode) {
        picked.push(points.last().expect("nonempty"));
    }
    let x_max = points.last().expect("nonempty").episode.max(2) as f64;
    let y_lo = picked
        .iter()
        .map(|p| p.mean - p.stderr)
        .fold(f64::INFINITY, f64::min);
    let y_hi = picked
        .iter()
        .map(|p| p.mean + p.stderr)
        .fold(f64::NEG_INFINITY, f64::max);
    let (y_lo, y_hi) = if y_hi - y_lo < 1e-9 {
        (y_lo - 1.0, y_hi + 1.0)
    } else {
        (y_lo, y_hi)
    };
    let px = |e: usize| L + (e as f64 - 1.0) / (x_max - 1.0) * (W - L - R);
    let py = |v: f64| T + (y_hi - v) / (y_hi - y_lo) * (H - T - B);

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    s.push_str(&format!(
        "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        W / 2.0,
        escape(title)
    ));
    let band: Vec<String> = picked
        .iter()
        .map(|p| format!("{:.2},{:.2}", px(p.episode), py(p.mean + p.stderr)))
        .chain(
            picked
                .iter()
                .rev()
                .map(|p| format!("{:.2},{:.2}", px(p.episode), py(p.mean - p.stderr))),
        )
        .collect();
    s.push_str(&format!(
        "<polygon points=\"{}\" fill=\"#1f77b4\" fill-opacity=\"0.2\" stroke=\"none\"/>\n",
        band.join(" ")
    ));
    let line: Vec<String> = picked
        .iter()
        .map(|p| format!("{:.2},{:.2}", px(p.episode), py(p.mean)))
        .collect();
    s.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n",
        line.join(" ")
    ));
    // Axes and ticks.
    s.push_str(&format!(
        "<path d=\"M{L},{T} V{} H{}\" fill=\"none\" stroke=\"black\"/>\n",
        H - B,
        W - R
    ));
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let v = y_lo + f * (y_hi - y_lo);
        let y = py(v);
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{L}\" y2=\"{y:.2}\" stroke=\"black\"/><text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{v:.2}</text>\n",
            L - 5.0,
            L - 8.0,
            y + 4.0
        ));
        let e = 1.0 + f * (x_max - 1.0);
        let x = px(e.round() as usize);
        s.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/><text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            H - B,
            H - B + 5.0,
            H - B + 20.0,
            e.round()
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">episode</text>\n",
        (L + W - R) / 2.0,
        H - 10.0
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">cumulative average reward</text>\n",
        (T + H - B) / 2.0,
        (T + H - B) / 2.0
    ));
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Paths of everything [`write_outputs`] produced.
#[derive(Debug, Clone, Default)]
pub struct OutputPaths {
    pub runs: Vec<PathBuf>,
    pub aggregate: PathBuf,
    pub windowed: PathBuf,
    pub curve: PathBuf,
    pub config: PathBuf,
    pub colormap: Option<(PathBuf, PathBuf)>,
}

pub fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    series: &[MetricSeries],
) -> Result<OutputPaths> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = OutputPaths {
        aggregate: dir.join("aggregate.csv"),
        windowed: dir.join("windowed.csv"),
        curve: dir.join("curve.svg"),
        config: dir.join("config.txt"),
        ..Default::default()
    };
    write_config(&paths.config, cfg)?;
    for s in series {
        let p = dir.join(format!("run_{}.csv", s.run));
        write_run_csv(&p, s)?;
        paths.runs.push(p);
    }
    let agg = aggregate_cumulative(series)?;
    write_aggregate_csv(&paths.aggregate, "episode,mean_cumavg,stderr", &agg)?;
    let windows = series
        .iter()
        .map(|s| windowed_mean(&s.rewards, cfg.params.window))
        .collect::<Result<Vec<_>>>()?;
    write_aggregate_csv(
        &paths.windowed,
        "episode,mean_windowed,stderr",
        &aggregate_curves(&windows)?,
    )?;
    let algos = cfg
        .algos
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join("+");
    let title = format!("{} / {} / {} runs", cfg.game, algos, series.len());
    let svg = render_curve_svg(&agg, &title, 1000);
    std::fs::write(&paths.curve, svg).map_err(|e| Error::io(&paths.curve, e))?;
    if cfg.game.is_matrix() {
        let spec = super::runner::matrix_spec(cfg)?;
        let csv = dir.join("colormap.csv");
        let ppm = dir.join("colormap.ppm");
        write_colormap_csv(&csv, &spec, cfg.params.colormap_resolution)?;
        write_colormap_ppm(&ppm, &spec, cfg.params.colormap_resolution)?;
        paths.colormap = Some((csv, ppm));
    }
    Ok(paths)
}
