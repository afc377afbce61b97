//! Role-tagged sample tables and their CSV format.
//!
//! The file layout is an optional `# provenance: <tag>` line, a header of
//! `name:role` cells, then one row per sample. Values are written with the
//! shortest decimal that round-trips exactly.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scm::{role_indices, Role};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    Simulated,
    /// Counterfactual output; the payload names the retained pathway.
    Adjusted(String),
    Loaded,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Simulated => f.write_str("simulated"),
            Provenance::Adjusted(t) => write!(f, "adjusted:{t}"),
            Provenance::Loaded => f.write_str("loaded"),
        }
    }
}

impl Provenance {
    fn parse(tag: &str) -> Self {
        match tag.trim() {
            "simulated" => Provenance::Simulated,
            t => match t.strip_prefix("adjusted:") {
                Some(target) => Provenance::Adjusted(target.to_string()),
                None => Provenance::Loaded,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    roles: Vec<Role>,
    data: DMatrix<f64>,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(names: Vec<String>, roles: Vec<Role>, data: DMatrix<f64>, provenance: Provenance) -> Result<Self> {
        if names.len() != roles.len() || names.len() != data.ncols() {
            return Err(Error::Shape(format!(
                "{} names, {} roles, {} columns",
                names.len(),
                roles.len(),
                data.ncols()
            )));
        }
        if data.nrows() == 0 {
            return Err(Error::Input("dataset must have at least one row".into()));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let n = data.nrows();
            return Err(Error::Input(format!(
                "non-finite value in column '{}' row {}",
                names[pos / n],
                pos % n
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::Input(format!("duplicate column '{name}'")));
            }
        }
        Ok(Self { names, roles, data, provenance })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn indices(&self, role: Role) -> Vec<usize> {
        role_indices(&self.roles, role)
    }

    pub fn names_with_role(&self, role: Role) -> Vec<String> {
        self.indices(role).into_iter().map(|i| self.names[i].clone()).collect()
    }

    pub fn has_role(&self, role: Role) -> bool {
        self.roles.contains(&role)
    }

    pub fn column(&self, name: &str) -> Result<DVector<f64>> {
        let i = self.index_of(name).ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        Ok(self.data.column(i).into_owned())
    }

    /// Columns in the order of `names`, as an `n × names.len()` matrix.
    pub fn columns(&self, names: &[String]) -> Result<DMatrix<f64>> {
        let idx = names
            .iter()
            .map(|n| self.index_of(n).ok_or_else(|| Error::MissingColumn(n.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.data.select_columns(&idx))
    }

    /// Copy with the named columns overwritten by the columns of `values`.
    pub fn replace_columns(&self, names: &[String], values: &DMatrix<f64>) -> Result<Self> {
        if values.ncols() != names.len() || values.nrows() != self.nrows() {
            return Err(Error::Shape(format!(
                "replacement is {}x{}, expected {}x{}",
                values.nrows(),
                values.ncols(),
                self.nrows(),
                names.len()
            )));
        }
        let mut out = self.clone();
        for (k, name) in names.iter().enumerate() {
            let i = self.index_of(name).ok_or_else(|| Error::MissingColumn(name.clone()))?;
            out.data.set_column(i, &values.column(k));
        }
        Ok(out)
    }

    /// Copy restricted to the columns not carrying `role`.
    pub fn without_role(&self, role: Role) -> Result<Self> {
        let keep: Vec<usize> = (0..self.names.len()).filter(|&i| self.roles[i] != role).collect();
        Self::new(
            keep.iter().map(|&i| self.names[i].clone()).collect(),
            keep.iter().map(|&i| self.roles[i]).collect(),
            self.data.select_columns(&keep),
            self.provenance.clone(),
        )
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# provenance: {}", self.provenance)?;
        let header: Vec<String> = self.names.iter().zip(&self.roles).map(|(n, r)| format!("{n}:{r}")).collect();
        writeln!(out, "{}", header.join(","))?;
        let mut line = String::new();
        for row in self.data.row_iter() {
            line.clear();
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&v.to_string());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let mut provenance = Provenance::Loaded;
        let mut buf = String::new();
        let header = loop {
            buf.clear();
            if reader.read_line(&mut buf)? == 0 {
                return Err(Error::Schema("missing header row".into()));
            }
            let line = buf.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(tag) = comment.trim().strip_prefix("provenance:") {
                    provenance = Provenance::parse(tag);
                }
                continue;
            }
            if !line.is_empty() {
                break line.to_string();
            }
        };
        let mut names = Vec::new();
        let mut roles = Vec::new();
        for cell in header.split(',') {
            let (name, role) = cell
                .trim()
                .rsplit_once(':')
                .ok_or_else(|| Error::Schema(format!("header cell '{cell}' is not name:role")))?;
            names.push(name.to_string());
            roles.push(role.parse::<Role>().map_err(|e| Error::Schema(e.to_string()))?);
        }
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).from_reader(reader);
        let p = names.len();
        let mut values = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != p {
                return Err(Error::Schema(format!("row {row} has {} fields, expected {p}", record.len())));
            }
            for field in record.iter() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Schema(format!("row {row}: '{field}' is not a number")))?;
                values.push(v);
            }
        }
        let n = values.len() / p.max(1);
        let data = DMatrix::from_row_slice(n, p, &values);
        Self::new(names, roles, data, provenance)
    }

    pub fn write_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        self.write_csv(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Dataset {
        let data = DMatrix::from_row_slice(3, 2, &[0.1, -2.5, 1e-300, 3.0, f64::MAX, 1.0 / 3.0]);
        Dataset::new(vec!["X".into(), "Y".into()], vec![Role::Feature, Role::Response], data, Provenance::Simulated)
            .unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let d = small();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# provenance: simulated\nX:feature,Y:response\n"));
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn adjusted_provenance_survives() {
        let d = small().with_provenance(Provenance::Adjusted("direct".into()));
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(Dataset::read_csv(buf.as_slice()).unwrap().provenance(), &Provenance::Adjusted("direct".into()));
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(Dataset::read_csv("X,Y\n1,2\n".as_bytes()), Err(Error::Schema(_))));
        assert!(matches!(Dataset::read_csv("X:feature,Y:wat\n1,2\n".as_bytes()), Err(Error::Schema(_))));
        assert!(matches!(Dataset::read_csv("X:feature\n1,2\n".as_bytes()), Err(Error::Schema(_)) | Err(Error::Csv(_))));
        assert!(matches!(Dataset::read_csv("X:feature\nabc\n".as_bytes()), Err(Error::Schema(_))));
        assert!(matches!(Dataset::read_csv("".as_bytes()), Err(Error::Schema(_))));
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        let empty = DMatrix::<f64>::zeros(0, 1);
        assert!(Dataset::new(vec!["X".into()], vec![Role::Feature], empty, Provenance::Loaded).is_err());
        let nan = DMatrix::from_element(2, 1, f64::NAN);
        assert!(Dataset::new(vec!["X".into()], vec![Role::Feature], nan, Provenance::Loaded).is_err());
    }
}
