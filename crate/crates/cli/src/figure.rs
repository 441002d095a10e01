//! Figure data: per-width mean, min and max over seeds of each plotted
//! series. The CSV is the source of truth; the SVG is rendered from the CSV
//! after parsing it back.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use snnbound::bounds::ours_dominant_term;
use snnbound::Method;

use crate::config::{ExperimentConfig, FigureKind};
use crate::error::{CliError, Result};
use crate::svg;
use crate::tables::{self, BoundRow, MeasureRow};

pub const FIGURE_HEADER: [&str; 5] = ["series", "m", "mean", "min", "max"];

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub m: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub kind: FigureKind,
    pub dataset: String,
    pub series: Vec<Series>,
}

impl FigureKind {
    pub fn title(self) -> &'static str {
        match self {
            FigureKind::Fig1a => "initialization term vs spectral term",
            FigureKind::Fig1b => "path norms",
            FigureKind::Fig2 => "complexity terms",
            FigureKind::Fig3 => "generalization bounds",
        }
    }

    pub fn y_label(self) -> &'static str {
        match self {
            FigureKind::Fig1a => "term value",
            FigureKind::Fig1b => "norm",
            FigureKind::Fig2 => "complexity",
            FigureKind::Fig3 => "bound on test error",
        }
    }

    /// Series that must be present for the figure to be meaningful.
    fn required(self) -> &'static [&'static str] {
        match self {
            FigureKind::Fig1a => &["init_term", "spectral_term"],
            FigureKind::Fig1b => &["kappa", "kappa_s"],
            FigureKind::Fig2 | FigureKind::Fig3 => &["pn_ours"],
        }
    }
}

/// Collects `(series, m, value)` samples and reduces them per `(series, m)`.
/// Series keep first-seen order; widths are sorted.
#[derive(Default)]
struct Accumulator {
    order: Vec<String>,
    values: BTreeMap<(usize, usize), Vec<f64>>,
}

impl Accumulator {
    fn push(&mut self, series: &str, m: usize, value: f64) {
        let idx = match self.order.iter().position(|s| s == series) {
            Some(i) => i,
            None => {
                self.order.push(series.to_string());
                self.order.len() - 1
            }
        };
        if value.is_finite() {
            self.values.entry((idx, m)).or_default().push(value);
        }
    }

    fn finish(self, kind: FigureKind, dataset: &str) -> Result<Figure> {
        let mut series: Vec<Series> = self
            .order
            .iter()
            .map(|name| Series { name: name.clone(), points: Vec::new() })
            .collect();
        for ((idx, m), vals) in self.values {
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            series[idx].points.push(Point { m, mean, min, max });
        }
        series.retain(|s| !s.points.is_empty());
        for name in kind.required() {
            if !series.iter().any(|s| s.name == *name) {
                return Err(CliError::MissingSeries(format!("{name} for figure {kind} of {dataset}")));
            }
        }
        Ok(Figure { kind, dataset: dataset.to_string(), series })
    }
}

fn datasets<'a>(names: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for n in names {
        if !out.iter().any(|o| o == n) {
            out.push(n.to_string());
        }
    }
    out
}

fn measure_figure(kind: FigureKind, dataset: &str, measures: &[MeasureRow]) -> Result<Figure> {
    let mut acc = Accumulator::default();
    for row in measures.iter().filter(|r| r.dataset == dataset) {
        let r = &row.report;
        let n = r.n as f64;
        match kind {
            FigureKind::Fig1a => {
                acc.push("init_term", row.m, r.r_v * r.init_term / ((r.c as f64).sqrt() * n));
                acc.push("spectral_term", row.m, r.r_v * r.g_act * r.b_x * r.w0_spectral / n.sqrt());
            }
            FigureKind::Fig1b => {
                acc.push("kappa", row.m, r.kappa);
                acc.push("kappa_s", row.m, r.kappa_s.unwrap_or(f64::NAN));
            }
            _ => unreachable!("bound figures go through bound_figure"),
        }
    }
    acc.finish(kind, dataset)
}

fn bound_figure(kind: FigureKind, dataset: &str, measures: &[MeasureRow], bounds: &[BoundRow]) -> Result<Figure> {
    let mut acc = Accumulator::default();
    let rows = bounds.iter().filter(|b| b.dataset == dataset);
    match kind {
        FigureKind::Fig2 => {
            for b in rows.filter(|b| Method::COMPARATORS.contains(&b.method)) {
                acc.push(b.method.id(), b.m, b.value);
            }
            for row in measures.iter().filter(|r| r.dataset == dataset) {
                acc.push(Method::PnOurs.id(), row.m, ours_dominant_term(&row.report));
            }
        }
        FigureKind::Fig3 => {
            for b in rows.filter(|b| b.method.is_generalization_bound()) {
                acc.push(b.method.id(), b.m, b.value);
            }
        }
        _ => unreachable!("measure figures go through measure_figure"),
    }
    acc.finish(kind, dataset)
}

/// All figures of `kind`, one per dataset found in the tables.
pub fn build_figures(kind: FigureKind, measures: &[MeasureRow], bounds: &[BoundRow]) -> Result<Vec<Figure>> {
    let names = match kind {
        FigureKind::Fig1a | FigureKind::Fig1b => datasets(measures.iter().map(|r| r.dataset.as_str())),
        FigureKind::Fig2 | FigureKind::Fig3 => datasets(bounds.iter().map(|r| r.dataset.as_str())),
    };
    if names.is_empty() {
        return Err(CliError::MissingSeries(format!("no rows for figure {kind}")));
    }
    names
        .iter()
        .map(|ds| match kind {
            FigureKind::Fig1a | FigureKind::Fig1b => measure_figure(kind, ds, measures),
            FigureKind::Fig2 | FigureKind::Fig3 => bound_figure(kind, ds, measures, bounds),
        })
        .collect()
}

pub fn write_figure_csv(path: &Path, fig: &Figure) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    w.write_record(FIGURE_HEADER).map_err(CliError::csv(path))?;
    for s in &fig.series {
        for p in &s.points {
            w.write_record([
                s.name.clone(),
                p.m.to_string(),
                p.mean.to_string(),
                p.min.to_string(),
                p.max.to_string(),
            ])
            .map_err(CliError::csv(path))?;
        }
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_figure_csv(path: &Path, kind: FigureKind, dataset: &str) -> Result<Figure> {
    let mut r = csv::Reader::from_path(path).map_err(CliError::csv(path))?;
    let header = r.headers().map_err(CliError::csv(path))?.clone();
    if header.iter().ne(FIGURE_HEADER) {
        return Err(CliError::Data(format!("{}: unexpected header", path.display())));
    }
    let mut series: Vec<Series> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(CliError::csv(path))?;
        let bad = || CliError::Data(format!("{}: malformed row {:?}", path.display(), rec));
        let num = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok()).ok_or_else(bad);
        let name = rec.get(0).ok_or_else(bad)?;
        let point = Point {
            m: rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(bad)?,
            mean: num(2)?,
            min: num(3)?,
            max: num(4)?,
        };
        match series.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push(point),
            None => series.push(Series { name: name.to_string(), points: vec![point] }),
        }
    }
    Ok(Figure { kind, dataset: dataset.to_string(), series })
}

pub fn figure_stem(kind: FigureKind, dataset: &str) -> String {
    format!("fig{}_{dataset}", kind.id())
}

/// Writes `figures/fig<id>_<dataset>.{csv,svg}` for the configured figures
/// and returns the SVG paths.
pub fn emit_figures(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let measures = tables::read_measures(&cfg.out.join(tables::MEASURES_CSV))?;
    let kinds: Vec<FigureKind> = cfg.figure.map_or_else(|| FigureKind::ALL.to_vec(), |k| vec![k]);
    let needs_bounds = kinds.iter().any(|k| matches!(k, FigureKind::Fig2 | FigureKind::Fig3));
    let bounds = if needs_bounds {
        tables::read_bounds(&cfg.out.join(tables::BOUNDS_CSV))?
    } else {
        Vec::new()
    };
    let dir = cfg.out.join(tables::FIGURE_DIR);
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    let mut written = Vec::new();
    for kind in kinds {
        for fig in build_figures(kind, &measures, &bounds)? {
            let stem = figure_stem(kind, &fig.dataset);
            let csv_path = dir.join(format!("{stem}.csv"));
            write_figure_csv(&csv_path, &fig)?;
            let parsed = read_figure_csv(&csv_path, kind, &fig.dataset)?;
            let svg_path = dir.join(format!("{stem}.svg"));
            fs::write(&svg_path, svg::render(&parsed)).map_err(CliError::io(&svg_path))?;
            written.push(svg_path);
        }
    }
    Ok(written)
}
