//! The `(seed, m)` sweep: train, checkpoint, measure and bound every cell.
//! Cells run in parallel; results are collected in seed-major, width-minor
//! order so every output file is byte-identical across runs.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use snnbound::bounds::all_bounds;
use snnbound::datasets::{build_binary_task, load_cifar10_dir, load_mnist_dir, subsample, Source, Split};
use snnbound::measures::measure_report;
use snnbound::model::init_kaiming;
use snnbound::trainer::sgd_train;
use snnbound::{BoundInputs, Checkpoint, Dataset, SeededRng};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::tables::{self, BoundRow, FailureRow, MeasureRow, TrainRow};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const BUILD_HASH: &str = env!("SNNBOUND_BUILD_HASH");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cell {
    pub seed: u64,
    pub m: usize,
}

pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds
        .into_iter()
        .flat_map(|seed| cfg.widths.iter().map(move |&m| Cell { seed, m }))
        .collect()
}

pub fn checkpoint_path(cfg: &ExperimentConfig, cell: Cell) -> PathBuf {
    cfg.out
        .join(tables::CHECKPOINT_DIR)
        .join(format!("{}_seed{}_m{}.ckpt", cfg.task.name(), cell.seed, cell.m))
}

/// Loads the configured task and applies the subsample, if any.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let (dir, flag) = match cfg.task.source {
        Source::Mnist => (&cfg.mnist_dir, "mnist_dir"),
        Source::Cifar10 => (&cfg.cifar_dir, "cifar_dir"),
    };
    let dir = dir
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("{} needs {flag}", cfg.task.name())))?;
    let raw = match cfg.task.source {
        Source::Mnist => load_mnist_dir(dir, Split::Train),
        Source::Cifar10 => load_cifar10_dir(dir, Split::Train),
    }
    .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let ds = build_binary_task(&raw, &cfg.task).map_err(|e| CliError::Data(e.to_string()))?;
    match cfg.subsample {
        Some(k) if k > ds.n() => Err(CliError::Config(format!(
            "subsample = {k} exceeds the {} examples of {}",
            ds.n(),
            cfg.task.name()
        ))),
        Some(k) => Ok(subsample(&ds, k, &mut SeededRng::new(cfg.subsample_seed))?),
        None => Ok(ds),
    }
}

pub fn train_cell(cfg: &ExperimentConfig, ds: &Dataset, cell: Cell) -> snnbound::Result<(Checkpoint, TrainRow)> {
    let mut rng = SeededRng::derive(cell.seed, cell.m as u64);
    let (mut params, snapshot) = init_kaiming(&mut rng, cell.m, ds.d(), 1, cfg.activation)?;
    let report = sgd_train(&mut params, &snapshot, ds, &cfg.train_config(cell.seed))?;
    let row = TrainRow {
        dataset: cfg.task.name(),
        seed: cell.seed,
        m: cell.m,
        epochs: report.epochs_run,
        final_train_error: report.final_train_error,
        final_ramp_risk: report.final_ramp_risk,
        final_loss: report.loss_curve.last().copied().unwrap_or(f64::NAN),
    };
    let ckpt = Checkpoint {
        params,
        snapshot,
        seed: cell.seed,
        epochs: report.epochs_run as u32,
        final_train_error: report.final_train_error,
    };
    Ok((ckpt, row))
}

pub fn measure_cell(cfg: &ExperimentConfig, ds: &Dataset, cell: Cell, ckpt: &Checkpoint) -> snnbound::Result<MeasureRow> {
    if ckpt.seed != cell.seed || ckpt.params.m() != cell.m {
        return Err(snnbound::Error::Checkpoint(format!(
            "checkpoint holds seed {} m {}, expected seed {} m {}",
            ckpt.seed,
            ckpt.params.m(),
            cell.seed,
            cell.m
        )));
    }
    Ok(MeasureRow {
        dataset: cfg.task.name(),
        seed: cell.seed,
        m: cell.m,
        report: measure_report(&ckpt.params, &ckpt.snapshot, ds)?,
    })
}

/// Every applicable bound for every measured cell.
pub fn bound_rows(cfg: &ExperimentConfig, measures: &[MeasureRow]) -> Result<Vec<BoundRow>> {
    let mut out = Vec::new();
    for row in measures {
        let mut inputs = BoundInputs::new(row.report.clone(), cfg.delta)?;
        inputs.reduction = cfg.reduction;
        for b in all_bounds(&inputs)? {
            out.push(BoundRow {
                dataset: row.dataset.clone(),
                seed: row.seed,
                m: row.m,
                method: b.method,
                value: b.value,
                delta: b.delta,
                data_dependent: b.data_dependent,
                qualitative: b.qualitative,
            });
        }
    }
    Ok(out)
}

fn failure(cfg: &ExperimentConfig, cell: Cell, stage: &str, err: impl ToString) -> FailureRow {
    FailureRow {
        dataset: cfg.task.name(),
        seed: cell.seed,
        m: cell.m,
        stage: stage.into(),
        error: err.to_string(),
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(CliError::io(path))
}

pub fn write_manifest(cfg: &ExperimentConfig, ds: Option<&Dataset>) -> Result<()> {
    let mut text = format!("# snnbound {VERSION} build {BUILD_HASH}\n");
    if let Some(ds) = ds {
        let (pos, neg) = ds.class_counts();
        text.push_str(&format!("# examples {} (positive {pos}, negative {neg}), d {}\n", ds.n(), ds.d()));
    }
    text.push_str(&cfg.to_text());
    let path = cfg.out.join(tables::MANIFEST);
    fs::write(&path, text).map_err(CliError::io(&path))
}

/// What a stage did: cells attempted and the ones that failed.
#[derive(Debug, Default)]
pub struct StageSummary {
    pub cells: usize,
    pub failures: Vec<FailureRow>,
}

impl StageSummary {
    fn absorb(&mut self, other: StageSummary) {
        self.cells = self.cells.max(other.cells);
        self.failures.extend(other.failures);
    }
}

pub fn run_train(cfg: &ExperimentConfig) -> Result<StageSummary> {
    let ds = load_dataset(cfg)?;
    create_dir(&cfg.out.join(tables::CHECKPOINT_DIR))?;
    let cells = cells(cfg);
    let results: Vec<_> = cells
        .par_iter()
        .map(|&cell| {
            let (ckpt, row) = train_cell(cfg, &ds, cell)?;
            ckpt.save(&checkpoint_path(cfg, cell))?;
            Ok::<_, snnbound::Error>(row)
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (cell, r) in cells.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(failure(cfg, *cell, "train", e)),
        }
    }
    tables::write_train(&cfg.out.join(tables::TRAIN_CSV), &rows)?;
    tables::write_failures(&cfg.out.join(tables::failures_file("train")), &failures)?;
    write_manifest(cfg, Some(&ds))?;
    Ok(StageSummary { cells: cells.len(), failures })
}

pub fn run_measure(cfg: &ExperimentConfig) -> Result<StageSummary> {
    let ds = load_dataset(cfg)?;
    let cells = cells(cfg);
    let results: Vec<_> = cells
        .par_iter()
        .map(|&cell| {
            let ckpt = Checkpoint::load(&checkpoint_path(cfg, cell))?;
            measure_cell(cfg, &ds, cell, &ckpt)
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (cell, r) in cells.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(failure(cfg, *cell, "measure", e)),
        }
    }
    create_dir(&cfg.out)?;
    tables::write_measures(&cfg.out.join(tables::MEASURES_CSV), &rows)?;
    tables::write_failures(&cfg.out.join(tables::failures_file("measure")), &failures)?;
    Ok(StageSummary { cells: cells.len(), failures })
}

/// Recomputes `bounds.csv` from `measures.csv`; returns the row count.
pub fn run_bounds(cfg: &ExperimentConfig) -> Result<usize> {
    let measures = tables::read_measures(&cfg.out.join(tables::MEASURES_CSV))?;
    let rows = bound_rows(cfg, &measures)?;
    tables::write_bounds(&cfg.out.join(tables::BOUNDS_CSV), &rows)?;
    Ok(rows.len())
}

/// Train, measure and bound in one pass, then emit the figures.
pub fn run_all(cfg: &ExperimentConfig) -> Result<StageSummary> {
    let ds = load_dataset(cfg)?;
    create_dir(&cfg.out.join(tables::CHECKPOINT_DIR))?;
    let cells = cells(cfg);
    let results: Vec<_> = cells
        .par_iter()
        .map(|&cell| {
            let (ckpt, train) = train_cell(cfg, &ds, cell).map_err(|e| ("train", e))?;
            ckpt.save(&checkpoint_path(cfg, cell)).map_err(|e| ("train", e))?;
            let measured = measure_cell(cfg, &ds, cell, &ckpt).map_err(|e| ("measure", e));
            Ok::<_, (&str, snnbound::Error)>((train, measured))
        })
        .collect();

    let mut train_rows = Vec::new();
    let mut measure_rows = Vec::new();
    let mut train_failures = Vec::new();
    let mut measure_failures = Vec::new();
    for (cell, r) in cells.iter().zip(results) {
        match r {
            Ok((train, Ok(measured))) => {
                train_rows.push(train);
                measure_rows.push(measured);
            }
            Ok((train, Err((stage, e)))) => {
                train_rows.push(train);
                measure_failures.push(failure(cfg, *cell, stage, e));
            }
            Err((stage, e)) => train_failures.push(failure(cfg, *cell, stage, e)),
        }
    }
    tables::write_train(&cfg.out.join(tables::TRAIN_CSV), &train_rows)?;
    tables::write_measures(&cfg.out.join(tables::MEASURES_CSV), &measure_rows)?;
    tables::write_failures(&cfg.out.join(tables::failures_file("train")), &train_failures)?;
    tables::write_failures(&cfg.out.join(tables::failures_file("measure")), &measure_failures)?;
    write_manifest(cfg, Some(&ds))?;
    run_bounds(cfg)?;

    let mut summary = StageSummary { cells: cells.len(), failures: train_failures };
    summary.absorb(StageSummary { cells: cells.len(), failures: measure_failures });
    if !measure_rows.is_empty() {
        crate::figure::emit_figures(cfg)?;
    }
    Ok(summary)
}
