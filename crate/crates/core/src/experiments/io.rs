use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdjustmentMethod, ExperimentConfig, MseRecord, ResultsTable};
use crate::error::{Error, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const STABILITY_FILE: &str = "stability.csv";
pub const METADATA_FILE: &str = "metadata.json";

const RESULTS_HEADER: [&str; 4] = ["replication", "method", "test_index", "mse"];
const STABILITY_HEADER: [&str; 3] = ["replication", "method", "stability_error"];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    /// Effective configuration, with the test grid resolved.
    pub config: ExperimentConfig,
    pub rejected_draws: usize,
    pub failed_replications: Vec<FailedReplication>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FailedReplication {
    pub replication: usize,
    pub error: String,
}

/// Writes the results, stability and metadata files into `dir`.
pub fn write_results(dir: &Path, table: &ResultsTable, config: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(RESULTS_FILE))?;
    w.write_record(RESULTS_HEADER)?;
    for r in &table.records {
        w.write_record([r.replication.to_string(), r.method.to_string(), r.test_index.to_string(), r.mse.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join(STABILITY_FILE))?;
    w.write_record(STABILITY_HEADER)?;
    for s in &table.stability {
        w.write_record([s.replication.to_string(), s.method.to_string(), s.stability_error.to_string()])?;
    }
    w.flush()?;

    let mut config = config.clone();
    config.test_grid = Some(config.grid());
    let meta = Metadata {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        rejected_draws: table.rejected_draws,
        failed_replications: table
            .failures
            .iter()
            .map(|(replication, error)| FailedReplication { replication: *replication, error: error.clone() })
            .collect(),
    };
    let mut f = fs::File::create(dir.join(METADATA_FILE))?;
    serde_json::to_writer_pretty(&mut f, &meta)?;
    writeln!(f)?;
    Ok(())
}

fn check_header(path: &Path, found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::Schema(format!(
            "{}: header {:?}, expected {:?}",
            path.display(),
            found.iter().collect::<Vec<_>>(),
            expected
        )));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(path: &Path, row: usize, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Schema(format!("{} row {row}: cannot parse '{value}'", path.display())))
}

/// Reads the results file of `dir` and recomputes stability errors.
pub fn read_results(dir: &Path) -> Result<ResultsTable> {
    let path = dir.join(RESULTS_FILE);
    let mut rdr = csv::Reader::from_path(&path)?;
    check_header(&path, rdr.headers()?, &RESULTS_HEADER)?;
    let mut table = ResultsTable::default();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        if rec.len() != RESULTS_HEADER.len() {
            return Err(Error::Schema(format!("{} row {row}: wrong field count", path.display())));
        }
        let method: AdjustmentMethod = rec[1]
            .parse()
            .map_err(|_| Error::Schema(format!("{} row {row}: unknown method '{}'", path.display(), &rec[1])))?;
        table.records.push(MseRecord {
            replication: field(&path, row, &rec[0])?,
            method,
            test_index: field(&path, row, &rec[2])?,
            mse: field(&path, row, &rec[3])?,
        });
    }
    if table.records.is_empty() {
        return Err(Error::Schema(format!("{} has no records", path.display())));
    }
    table.recompute_stability();
    Ok(table)
}
