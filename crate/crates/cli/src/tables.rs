//! CSV files written by the experiment driver and read back by the later
//! stages. Floats are written in the shortest form that parses back to the
//! same bits, so every derived file can be recomputed exactly.

use std::path::Path;

use snnbound::measures::MEASURE_COLUMNS;
use snnbound::{Method, MeasureReport};

use crate::error::{CliError, Result};

pub const TRAIN_CSV: &str = "train.csv";
pub const MEASURES_CSV: &str = "measures.csv";
pub const BOUNDS_CSV: &str = "bounds.csv";
pub const RAD_CSV: &str = "rad.csv";
pub const MANIFEST: &str = "manifest.txt";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const FIGURE_DIR: &str = "figures";

pub const TRAIN_HEADER: [&str; 7] = [
    "dataset",
    "seed",
    "m",
    "epochs",
    "final_train_error",
    "final_ramp_risk",
    "final_loss",
];
pub const BOUNDS_HEADER: [&str; 8] = [
    "dataset",
    "seed",
    "m",
    "method",
    "value",
    "delta",
    "data_dependent",
    "qualitative",
];
pub const FAILURES_HEADER: [&str; 5] = ["dataset", "seed", "m", "stage", "error"];

pub fn failures_file(stage: &str) -> String {
    format!("failures_{stage}.csv")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRow {
    pub dataset: String,
    pub seed: u64,
    pub m: usize,
    pub epochs: usize,
    pub final_train_error: f64,
    pub final_ramp_risk: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureRow {
    pub dataset: String,
    pub seed: u64,
    pub m: usize,
    pub report: MeasureReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub dataset: String,
    pub seed: u64,
    pub m: usize,
    pub method: Method,
    pub value: f64,
    pub delta: f64,
    pub data_dependent: bool,
    pub qualitative: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureRow {
    pub dataset: String,
    pub seed: u64,
    pub m: usize,
    pub stage: String,
    pub error: String,
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    w.write_record(header).map_err(CliError::csv(path))?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())
            .map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

/// Reads all records after checking that the header matches exactly.
fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(CliError::csv(path))?;
    let found = r.headers().map_err(CliError::csv(path))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(CliError::Data(format!(
            "{}: unexpected header {:?}",
            path.display(),
            found.iter().collect::<Vec<_>>()
        )));
    }
    r.records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(CliError::csv(path))
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| {
            let line = rec.position().map_or(0, |p| p.line());
            CliError::Data(format!("{}:{line}: bad {name} {:?}", path.display(), rec.get(i)))
        })
}

pub fn write_train(path: &Path, rows: &[TrainRow]) -> Result<()> {
    write_rows(
        path,
        &TRAIN_HEADER,
        rows.iter().map(|r| {
            [
                r.dataset.clone(),
                r.seed.to_string(),
                r.m.to_string(),
                r.epochs.to_string(),
                r.final_train_error.to_string(),
                r.final_ramp_risk.to_string(),
                r.final_loss.to_string(),
            ]
        }),
    )
}

pub fn measures_header() -> Vec<&'static str> {
    ["dataset", "seed", "m"].into_iter().chain(MEASURE_COLUMNS).collect()
}

pub fn write_measures(path: &Path, rows: &[MeasureRow]) -> Result<()> {
    write_rows(
        path,
        &measures_header(),
        rows.iter().map(|r| {
            [r.dataset.clone(), r.seed.to_string(), r.m.to_string()]
                .into_iter()
                .chain(r.report.csv_fields())
        }),
    )
}

pub fn read_measures(path: &Path) -> Result<Vec<MeasureRow>> {
    read_rows(path, &measures_header())?
        .iter()
        .map(|rec| {
            let m = field(path, rec, 2, "m")?;
            let rest: Vec<&str> = rec.iter().skip(3).collect();
            let report = MeasureReport::from_csv_fields(m, &rest).map_err(|e| {
                CliError::Data(format!("{}: {e}", path.display()))
            })?;
            Ok(MeasureRow {
                dataset: field(path, rec, 0, "dataset")?,
                seed: field(path, rec, 1, "seed")?,
                m,
                report,
            })
        })
        .collect()
}

pub fn write_bounds(path: &Path, rows: &[BoundRow]) -> Result<()> {
    write_rows(
        path,
        &BOUNDS_HEADER,
        rows.iter().map(|r| {
            [
                r.dataset.clone(),
                r.seed.to_string(),
                r.m.to_string(),
                r.method.id().to_string(),
                r.value.to_string(),
                r.delta.to_string(),
                r.data_dependent.to_string(),
                r.qualitative.to_string(),
            ]
        }),
    )
}

pub fn read_bounds(path: &Path) -> Result<Vec<BoundRow>> {
    read_rows(path, &BOUNDS_HEADER)?
        .iter()
        .map(|rec| {
            Ok(BoundRow {
                dataset: field(path, rec, 0, "dataset")?,
                seed: field(path, rec, 1, "seed")?,
                m: field(path, rec, 2, "m")?,
                method: field(path, rec, 3, "method")?,
                value: field(path, rec, 4, "value")?,
                delta: field(path, rec, 5, "delta")?,
                data_dependent: field(path, rec, 6, "data_dependent")?,
                qualitative: field(path, rec, 7, "qualitative")?,
            })
        })
        .collect()
}

pub fn write_failures(path: &Path, rows: &[FailureRow]) -> Result<()> {
    write_rows(
        path,
        &FAILURES_HEADER,
        rows.iter().map(|r| {
            [
                r.dataset.clone(),
                r.seed.to_string(),
                r.m.to_string(),
                r.stage.clone(),
                r.error.clone(),
            ]
        }),
    )
}
