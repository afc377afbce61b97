use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{LinearScm, Role, Task};
use crate::error::{Error, Result};

pub const SCM_FORMAT: &str = "decon-scm/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScmDocument {
    format: String,
    #[serde(default)]
    task: Task,
    names: Vec<String>,
    roles: Vec<Role>,
    theta: Vec<Vec<f64>>,
    #[serde(default)]
    mu: Option<Vec<f64>>,
    error_cov: Vec<Vec<f64>>,
}

fn dense(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(Error::Schema(format!("{what} row {bad} has {} entries, expected {n}", rows[bad].len())));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl LinearScm {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScmDocument = serde_json::from_str(text)?;
        if doc.format != SCM_FORMAT {
            return Err(Error::Schema(format!("unsupported format '{}', expected '{SCM_FORMAT}'", doc.format)));
        }
        let p = doc.names.len();
        let mu = doc.mu.unwrap_or_else(|| vec![0.0; p]);
        Self::new(
            doc.names,
            doc.roles,
            doc.task,
            dense(&doc.theta, "theta")?,
            DVector::from_vec(mu),
            dense(&doc.error_cov, "error_cov")?,
        )
    }

    pub fn to_json(&self) -> String {
        let doc = ScmDocument {
            format: SCM_FORMAT.to_string(),
            task: self.task,
            names: self.names.clone(),
            roles: self.roles.clone(),
            theta: rows(&self.theta),
            mu: Some(self.mu.iter().copied().collect()),
            error_cov: rows(&self.error_cov),
        };
        serde_json::to_string_pretty(&doc).expect("plain data serializes")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}
