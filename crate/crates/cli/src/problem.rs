//! JSON problem files.
//!
//! ```text
//! {"kind":"pwls","T":[[...],...],"b":[...]}
//! {"kind":"qp","Q":[[...],...],"b_tilde":[...],"c":0.0}
//! {"kind":"cone","A":[[...],...],"z":[...]}
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use ssn_core::{ConeInstance, DenseMatrix, PwlsProblem, QpProblem};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed problem file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field `{field}`: {message}")]
    Field {
        field: &'static str,
        message: String,
    },
    #[error("expected a `{expected}` problem, found `{found}`")]
    WrongKind {
        expected: &'static str,
        found: &'static str,
    },
}

fn field_err(field: &'static str, message: impl Into<String>) -> ProblemError {
    ProblemError::Field {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemFile {
    Pwls {
        #[serde(rename = "T")]
        t: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Qp {
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
        b_tilde: Vec<f64>,
        #[serde(default)]
        c: f64,
    },
    Cone {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        z: Vec<f64>,
    },
}

/// A parsed and validated problem.
#[derive(Debug, Clone)]
pub enum Problem {
    Pwls(PwlsProblem),
    Qp(QpProblem),
    Cone(ConeInstance),
}

fn square_matrix(field: &'static str, rows: &[Vec<f64>]) -> Result<DenseMatrix, ProblemError> {
    let n = rows.len();
    if n == 0 {
        return Err(field_err(field, "matrix is empty"));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(field_err(
                field,
                format!(
                    "row {i} has {} entries, expected {n} (square matrix)",
                    r.len()
                ),
            ));
        }
    }
    DenseMatrix::from_rows(rows).map_err(|e| field_err(field, e.to_string()))
}

fn vector_of_len(field: &'static str, v: &[f64], n: usize) -> Result<Vec<f64>, ProblemError> {
    if v.len() != n {
        return Err(field_err(
            field,
            format!("length {} does not match matrix dimension {n}", v.len()),
        ));
    }
    Ok(v.to_vec())
}

impl ProblemFile {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Pwls { .. } => "pwls",
            Self::Qp { .. } => "qp",
            Self::Cone { .. } => "cone",
        }
    }

    pub fn parse(text: &str) -> Result<Self, ProblemError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self, ProblemError> {
        let text = fs::read_to_string(path).map_err(|source| ProblemError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }

    pub fn validate(&self) -> Result<Problem, ProblemError> {
        match self {
            Self::Pwls { t, b } => {
                let t = square_matrix("T", t)?;
                let b = vector_of_len("b", b, t.rows())?;
                PwlsProblem::new(t, b)
                    .map(Problem::Pwls)
                    .map_err(|e| field_err("b", e.to_string()))
            }
            Self::Qp { q, b_tilde, c } => {
                let q = square_matrix("Q", q)?;
                let b = vector_of_len("b_tilde", b_tilde, q.rows())?;
                QpProblem::new(q, b, *c)
                    .map(Problem::Qp)
                    .map_err(|e| field_err("c", e.to_string()))
            }
            Self::Cone { a, z } => {
                let a = square_matrix("A", a)?;
                let z = vector_of_len("z", z, a.rows())?;
                ConeInstance::new(a, z)
                    .map(Problem::Cone)
                    .map_err(|e| field_err("A", e.to_string()))
            }
        }
    }

    pub fn from_pwls(p: &PwlsProblem) -> Self {
        Self::Pwls {
            t: p.t().to_rows(),
            b: p.b().to_vec(),
        }
    }

    pub fn from_qp(q: &QpProblem) -> Self {
        Self::Qp {
            q: q.q().to_rows(),
            b_tilde: q.b_tilde().to_vec(),
            c: q.c(),
        }
    }

    pub fn from_cone(ci: &ConeInstance) -> Self {
        Self::Cone {
            a: ci.a().to_rows(),
            z: ci.z().to_vec(),
        }
    }
}

impl Problem {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Pwls(_) => "pwls",
            Self::Qp(_) => "qp",
            Self::Cone(_) => "cone",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pwls(p) => p.dim(),
            Self::Qp(q) => q.dim(),
            Self::Cone(c) => c.z().len(),
        }
    }
}

/// Reads a vector file: a bare JSON array of numbers.
pub fn read_vector(path: &Path) -> Result<Vec<f64>, ProblemError> {
    let text = fs::read_to_string(path).map_err(|source| ProblemError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}
