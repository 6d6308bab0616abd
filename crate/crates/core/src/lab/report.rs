//! Report emission: CSV tables, a JSON mirror with provenance, and simple
//! SVG line plots.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{Error, Result};

/// One plotted series.
#[derive(Debug, Clone, Serialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// A simple line/scatter plot rendered to SVG.
#[derive(Debug, Clone, Serialize)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// free-form annotation drawn under the title (e.g. a fitted slope)
    pub annotation: Option<String>,
}

/// Tabular experiment output. Every row carries the config hash and master
/// seed so results stay traceable after files are moved around.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub name: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub meta: serde_json::Value,
    #[serde(skip)]
    pub plot: Option<Plot>,
}

impl Report {
    pub fn new(
        name: &str,
        config_hash: &str,
        master_seed: u64,
        columns: &[&str],
        rows: Vec<Vec<String>>,
    ) -> Self {
        let mut cols: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
        cols.push("config-hash".into());
        cols.push("master-seed".into());
        let rows = rows
            .into_iter()
            .map(|mut row| {
                assert_eq!(row.len(), columns.len(), "row width mismatch");
                row.push(config_hash.to_string());
                row.push(master_seed.to_string());
                row
            })
            .collect();
        Report {
            name: name.to_string(),
            config_hash: config_hash.to_string(),
            master_seed,
            columns: cols,
            rows,
            meta: serde_json::Value::Null,
            plot: None,
        }
    }

    pub fn csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest-roundtrip decimal formatting; deterministic for a given value.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

/// Write `{name}.csv`, `{name}.json` and (when a plot is attached)
/// `{name}.svg` into `dir`. Refuses to emit an empty table.
pub fn emit_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    if report.rows.is_empty() {
        return Err(Error::Empty(format!(
            "experiment {} produced no rows",
            report.name
        )));
    }
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();

    let csv_path = dir.join(format!("{}.csv", report.name));
    fs::write(&csv_path, report.csv())?;
    files.push(csv_path);

    #[derive(Serialize)]
    struct JsonMirror<'a> {
        name: &'a str,
        config_hash: &'a str,
        master_seed: u64,
        version: &'a str,
        prng: &'a str,
        columns: &'a [String],
        rows: &'a [Vec<String>],
        meta: &'a serde_json::Value,
    }
    let mirror = JsonMirror {
        name: &report.name,
        config_hash: &report.config_hash,
        master_seed: report.master_seed,
        version: env!("CARGO_PKG_VERSION"),
        prng: "chacha12; substream key = sha256(seed_le || '/' || label)",
        columns: &report.columns,
        rows: &report.rows,
        meta: &report.meta,
    };
    let json_path = dir.join(format!("{}.json", report.name));
    fs::write(
        &json_path,
        serde_json::to_string_pretty(&mirror).expect("report serializes"),
    )?;
    files.push(json_path);

    if let Some(plot) = &report.plot {
        let svg_path = dir.join(format!("{}.svg", report.name));
        fs::write(&svg_path, render_svg(plot))?;
        files.push(svg_path);
    }
    Ok(files)
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| span / s <= 6.0)
        .unwrap_or(mag * 10.0);
    let first = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = first;
    while t <= hi + step * 1e-9 {
        ticks.push(t);
        t += step;
    }
    ticks
}

/// Hand-rolled SVG: axes with ticks, one polyline plus point markers per
/// series, a legend, and an optional annotation line.
pub fn render_svg(plot: &Plot) -> String {
    let pts: Vec<(f64, f64)> = plot
        .series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let (mut x_lo, mut x_hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| {
            (lo.min(x), hi.max(x))
        });
    let (mut y_lo, mut y_hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| {
            (lo.min(y), hi.max(y))
        });
    if !x_lo.is_finite() {
        x_lo = 0.0;
        x_hi = 1.0;
    }
    if !y_lo.is_finite() {
        y_lo = 0.0;
        y_hi = 1.0;
    }
    if x_hi - x_lo < 1e-300 {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if y_hi - y_lo < 1e-300 {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let pad_y = 0.05 * (y_hi - y_lo);
    y_lo -= pad_y;
    y_hi += pad_y;

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| MARGIN_T + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        escape(&plot.title)
    ));
    if let Some(note) = &plot.annotation {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"40\" text-anchor=\"middle\" fill=\"#555\">{}</text>\n",
            WIDTH / 2.0,
            escape(note)
        ));
    }

    // axes
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_T + plot_h,
        MARGIN_L + plot_w,
        MARGIN_T + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_T + plot_h
    ));
    for t in nice_ticks(x_lo, x_hi) {
        let x = sx(t);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_T + plot_h + 18.0,
            fmt_tick(t)
        ));
    }
    for t in nice_ticks(y_lo, y_hi) {
        let y = sy(t);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{MARGIN_L}\" y2=\"{y}\" stroke=\"black\"/>\n",
            MARGIN_L - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_L - 8.0,
            y + 4.0,
            fmt_tick(t)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 10.0,
        escape(&plot.x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        escape(&plot.y_label)
    ));

    for (i, series) in plot.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = series
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if path.len() > 1 {
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                path.join(" ")
            ));
        }
        for p in &path {
            let (px, py) = p.split_once(',').unwrap();
            svg.push_str(&format!(
                "<circle cx=\"{px}\" cy=\"{py}\" r=\"2\" fill=\"{color}\"/>\n"
            ));
        }
        // legend entry
        let ly = MARGIN_T + 14.0 * i as f64 + 6.0;
        let lx = MARGIN_L + plot_w - 150.0;
        svg.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            lx + 18.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            lx + 24.0,
            ly + 4.0,
            escape(&series.name)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn fmt_tick(v: f64) -> String {
    let r = (v * 1e9).round() / 1e9;
    if r == 0.0 {
        "0".into()
    } else if r.abs() >= 0.001 && r.abs() < 100_000.0 {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
