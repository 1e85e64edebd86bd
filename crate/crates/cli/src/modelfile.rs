// SPDX-License-Identifier: Apache-2.0

//! Model files: `{"A": [[..]], "B": [[..]], "labels": [..], "rank_tol": ..}`
//! in JSON, or the same keys in TOML.
//!
//! Matrices are row-major arrays of rows. `labels` (one per state
//! coordinate) and `rank_tol` (relative tolerance of the controllability rank
//! test) are optional. Unknown keys are rejected.

use std::fs;
use std::path::Path;

use hypobridge::matcore::Matrix;
use hypobridge::{ModelSpec, Scalar};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{format} syntax error: {message}")]
    Syntax { format: Format, message: String },

    #[error("{0}")]
    Schema(String),

    #[error("{matrix}[{row}][{col}]: {message}")]
    Entry { matrix: &'static str, row: usize, col: usize, message: String },

    #[error("{matrix}[{row}]: {message}")]
    Row { matrix: &'static str, row: usize, message: String },

    #[error("{0}")]
    Invalid(hypobridge::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Toml,
}

impl Format {
    /// `.toml` selects TOML; anything else is read as JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("toml") => Format::Toml,
            _ => Format::Json,
        }
    }
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Format::Json => "JSON",
            Format::Toml => "TOML",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
}

impl ModelFile {
    pub fn from_spec(spec: &ModelSpec, labels: Option<Vec<String>>) -> Self {
        let rank_tol = spec.rank_tol();
        ModelFile {
            a: spec.a().to_rows(),
            b: spec.b().to_rows(),
            labels,
            rank_tol: (rank_tol != f64::RANK_TOL).then_some(rank_tol),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self::parse(&text, Format::from_path(path))?)
    }

    /// Parses and checks shapes. Entry errors carry zero-based `[row][col]`.
    pub fn parse(text: &str, format: Format) -> Result<Self, ModelError> {
        let syntax = |message: String| ModelError::Syntax { format, message };
        let root: Value = match format {
            Format::Json => serde_json::from_str(text).map_err(|e| syntax(e.to_string()))?,
            Format::Toml => toml::from_str(text).map_err(|e| syntax(e.to_string().trim_end().to_string()))?,
        };
        let Value::Object(mut obj) = root else {
            return Err(ModelError::Schema("model must be an object with keys A and B".into()));
        };
        let a = matrix(&mut obj, "A")?;
        let b = matrix(&mut obj, "B")?;
        let labels = match obj.remove("labels") {
            None => None,
            Some(Value::Array(items)) => Some(
                items
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| match v {
                        Value::String(s) => Ok(s),
                        other => Err(ModelError::Schema(format!("labels[{i}]: expected a string, found {}", kind(&other)))),
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            Some(other) => return Err(ModelError::Schema(format!("labels: expected an array, found {}", kind(&other)))),
        };
        let rank_tol = match obj.remove("rank_tol") {
            None => None,
            Some(Value::Number(n)) => n.as_f64(),
            Some(other) => return Err(ModelError::Schema(format!("rank_tol: expected a number, found {}", kind(&other)))),
        };
        if let Some(key) = obj.keys().next() {
            return Err(ModelError::Schema(format!("unknown key `{key}`")));
        }
        let file = ModelFile { a, b, labels, rank_tol };
        file.check_shapes()?;
        Ok(file)
    }

    fn check_shapes(&self) -> Result<(), ModelError> {
        let d = self.a.len();
        if d == 0 {
            return Err(ModelError::Schema("A must have at least one row".into()));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != d {
                return Err(ModelError::Row {
                    matrix: "A",
                    row: i,
                    message: format!("has {} entries, A must be {d}x{d}", row.len()),
                });
            }
        }
        if self.b.len() != d {
            return Err(ModelError::Schema(format!("B has {} rows, expected {d} to match A", self.b.len())));
        }
        let m = self.b[0].len();
        if m == 0 {
            return Err(ModelError::Row { matrix: "B", row: 0, message: "is empty".into() });
        }
        for (i, row) in self.b.iter().enumerate() {
            if row.len() != m {
                return Err(ModelError::Row {
                    matrix: "B",
                    row: i,
                    message: format!("has {} entries, expected {m}", row.len()),
                });
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != d {
                return Err(ModelError::Schema(format!("{} labels given for {d} coordinates", labels.len())));
            }
        }
        if let Some(tol) = self.rank_tol {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(ModelError::Schema(format!("rank_tol must lie in (0, 1), got {tol}")));
            }
        }
        Ok(())
    }

    /// Builds the model, optionally overriding the file's rank tolerance.
    pub fn to_spec(&self, rank_tol: Option<f64>) -> Result<ModelSpec, ModelError> {
        self.check_shapes()?;
        let a = Matrix::from_rows(&self.a).map_err(ModelError::Invalid)?;
        let b = Matrix::from_rows(&self.b).map_err(ModelError::Invalid)?;
        let tol = rank_tol.or(self.rank_tol).unwrap_or(f64::RANK_TOL);
        ModelSpec::with_rank_tol(a, b, tol).map_err(ModelError::Invalid)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("model files always serialize");
                s.push('\n');
                s
            }
            Format::Toml => toml::to_string(self).expect("model files always serialize"),
        }
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn matrix(obj: &mut Map<String, Value>, name: &'static str) -> Result<Vec<Vec<f64>>, ModelError> {
    let rows = match obj.remove(name) {
        Some(Value::Array(rows)) => rows,
        Some(other) => return Err(ModelError::Schema(format!("{name}: expected an array of rows, found {}", kind(&other)))),
        None => return Err(ModelError::Schema(format!("missing key `{name}`"))),
    };
    rows.into_iter()
        .enumerate()
        .map(|(i, row)| {
            let Value::Array(entries) = row else {
                return Err(ModelError::Row { matrix: name, row: i, message: format!("expected an array, found {}", kind(&row)) });
            };
            entries
                .into_iter()
                .enumerate()
                .map(|(j, v)| match v.as_f64() {
                    Some(x) if x.is_finite() => Ok(x),
                    // Non-finite TOML floats arrive as null.
                    _ => Err(ModelError::Entry {
                        matrix: name,
                        row: i,
                        col: j,
                        message: format!("expected a finite number, found {}", kind(&v)),
                    }),
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn located_entry_error() {
        let err = ModelFile::parse(r#"{"A": [[0, 0], [1, "x"]], "B": [[1], [0]]}"#, Format::Json).unwrap_err();
        assert_eq!(err, ModelError::Entry { matrix: "A", row: 1, col: 1, message: "expected a finite number, found a string".into() });
        let err = ModelFile::parse("A = [[0.0, 0.0], [1.0, nan]]\nB = [[1.0], [0.0]]\n", Format::Toml).unwrap_err();
        assert!(matches!(err, ModelError::Entry { matrix: "A", row: 1, col: 1, .. }), "{err}");
    }

    #[test]
    fn ragged_rows_and_unknown_keys() {
        let err = ModelFile::parse(r#"{"A": [[0, 0], [1]], "B": [[1], [0]]}"#, Format::Json).unwrap_err();
        assert!(matches!(err, ModelError::Row { matrix: "A", row: 1, .. }));
        let err = ModelFile::parse(r#"{"A": [[1]], "B": [[1]], "C": 3}"#, Format::Json).unwrap_err();
        assert_eq!(err, ModelError::Schema("unknown key `C`".into()));
        assert!(matches!(ModelFile::parse("{", Format::Json), Err(ModelError::Syntax { .. })));
    }

    #[test]
    fn toml_and_json_agree() {
        let json = ModelFile::parse(r#"{"A": [[0, 0], [1, 0]], "B": [[1], [0]], "labels": ["v", "q"]}"#, Format::Json).unwrap();
        let toml = ModelFile::parse("A = [[0, 0], [1, 0]]\nB = [[1], [0]]\nlabels = [\"v\", \"q\"]\n", Format::Toml).unwrap();
        assert_eq!(json, toml);
        assert_eq!(ModelFile::parse(&json.render(Format::Toml), Format::Toml).unwrap(), json);
    }
}
