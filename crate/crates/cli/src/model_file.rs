//! JSON model files. Matrices are stored as `{"re": [[..]], "im": [[..]]}`
//! with row-major nested arrays.

use std::collections::BTreeMap;
use std::path::Path;

use qmsep::gksl::{DensityMatrix, GkslGenerator};
use qmsep::{CMatrix, C64};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixObject {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub dim: usize,
    #[serde(rename = "H")]
    pub h: MatrixObject,
    #[serde(rename = "L")]
    pub l: Vec<MatrixObject>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<MatrixObject>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl MatrixObject {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect();
        MatrixObject { re: rows(|z| z.re), im: rows(|z| z.im) }
    }

    /// Checks that both parts are `dim × dim` and finite.
    pub fn to_matrix(&self, dim: usize, field: &str) -> CliResult<CMatrix> {
        for (part, rows) in [("re", &self.re), ("im", &self.im)] {
            if rows.len() != dim {
                return Err(CliError::Invalid(format!("{field}.{part}: expected {dim} rows, found {}", rows.len())));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != dim {
                    return Err(CliError::Invalid(format!(
                        "{field}.{part}[{i}]: expected {dim} entries, found {}",
                        row.len()
                    )));
                }
                if let Some(j) = row.iter().position(|x| !x.is_finite()) {
                    return Err(CliError::Invalid(format!("{field}.{part}[{i}][{j}]: not finite")));
                }
            }
        }
        Ok(CMatrix::from_fn(dim, dim, |i, j| C64::new(self.re[i][j], self.im[i][j])))
    }
}

fn parse_error(path: &str, e: serde_json::Error) -> CliError {
    CliError::Parse { path: path.to_string(), line: e.line(), column: e.column(), message: e.to_string() }
}

pub fn read_text(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

impl ModelFile {
    pub fn parse(bytes: &[u8], path: &str) -> CliResult<Self> {
        let model: ModelFile = serde_json::from_slice(bytes).map_err(|e| parse_error(path, e))?;
        if model.dim == 0 {
            return Err(CliError::Invalid("dim: must be positive".into()));
        }
        Ok(model)
    }

    pub fn hamiltonian(&self) -> CliResult<CMatrix> {
        self.h.to_matrix(self.dim, "H")
    }

    pub fn jumps(&self) -> CliResult<Vec<CMatrix>> {
        self.l.iter().enumerate().map(|(k, m)| m.to_matrix(self.dim, &format!("L[{k}]"))).collect()
    }

    pub fn generator(&self) -> CliResult<GkslGenerator> {
        let h = self.hamiltonian()?;
        let jumps = self.jumps()?;
        let gen = if jumps.is_empty() { GkslGenerator::hamiltonian_only(h) } else { GkslGenerator::new(h, jumps) };
        gen.map_err(|e| CliError::from(e).context("generator"))
    }

    pub fn state(&self, tol: f64) -> CliResult<Option<DensityMatrix>> {
        self.rho
            .as_ref()
            .map(|m| {
                let mat = m.to_matrix(self.dim, "rho")?;
                DensityMatrix::new(mat, tol).map_err(|e| CliError::from(e).context("rho"))
            })
            .transpose()
    }

    pub fn from_generator(gen: &GkslGenerator, rho: Option<&CMatrix>, metadata: BTreeMap<String, String>) -> Self {
        ModelFile {
            dim: gen.dim(),
            h: MatrixObject::from_matrix(gen.hamiltonian()),
            l: gen.jumps().iter().map(MatrixObject::from_matrix).collect(),
            rho: rho.map(MatrixObject::from_matrix),
            metadata,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model files serialize");
        s.push('\n');
        s
    }
}

/// Reads a standalone state file: either a bare matrix object or a model
/// file carrying `rho`.
pub fn read_state(path: &Path, dim: usize, tol: f64) -> CliResult<(DensityMatrix, Vec<u8>)> {
    let bytes = read_text(path)?;
    let name = path.display().to_string();
    let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| parse_error(&name, e))?;
    let obj = if value.get("re").is_some() {
        serde_json::from_value::<MatrixObject>(value).map_err(|e| CliError::Invalid(format!("{name}: {e}")))?
    } else {
        let model = ModelFile::parse(&bytes, &name)?;
        model.rho.ok_or_else(|| CliError::Invalid(format!("{name}: no rho field")))?
    };
    let mat = obj.to_matrix(dim, "rho")?;
    let rho = DensityMatrix::new(mat, tol).map_err(|e| CliError::from(e).context("rho"))?;
    Ok((rho, bytes))
}
