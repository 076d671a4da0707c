//! JSON encodings of matrices, states and POVMs.
//!
//! A matrix is `{"rows":r,"cols":c,"entries":[[re,im],...]}` in row-major order.
//! Density operators add `"dims"`; POVMs are `{"outcomes":[...],"operators":[...]}`
//! with an optional `"sub": true` for sub-POVMs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, CMat};
use crate::povm::Povm;
use crate::state::DensityOperator;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMat) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
        }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        if self.rows * self.cols != self.entries.len() {
            return Err(Error::Parse(format!(
                "{}x{} matrix with {} entries",
                self.rows,
                self.cols,
                self.entries.len()
            )));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.entries[i * self.cols + j];
            c64(re, im)
        }))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityJson {
    #[serde(flatten)]
    pub matrix: MatrixJson,
    #[serde(default)]
    pub dims: Option<Vec<usize>>,
}

impl DensityJson {
    pub fn from_state(rho: &DensityOperator) -> Self {
        Self {
            matrix: MatrixJson::from_matrix(rho.matrix()),
            dims: Some(rho.dims().to_vec()),
        }
    }

    pub fn to_state(&self) -> Result<DensityOperator> {
        let m = self.matrix.to_matrix()?;
        let dims = self.dims.clone().unwrap_or_else(|| vec![m.nrows()]);
        DensityOperator::new(m, dims)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmJson {
    pub outcomes: Vec<String>,
    pub operators: Vec<MatrixJson>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub sub: bool,
}

impl PovmJson {
    pub fn from_povm(m: &Povm) -> Self {
        Self {
            outcomes: m.outcomes().to_vec(),
            operators: m.operators().iter().map(MatrixJson::from_matrix).collect(),
            sub: !m.is_complete(),
        }
    }

    pub fn to_povm(&self) -> Result<Povm> {
        let ops = self
            .operators
            .iter()
            .map(MatrixJson::to_matrix)
            .collect::<Result<Vec<_>>>()?;
        let dim = ops.first().map_or(0, |m| m.nrows());
        if self.sub {
            Povm::new_sub(self.outcomes.clone(), ops, dim)
        } else {
            Povm::new(self.outcomes.clone(), ops, dim)
        }
    }
}

/// Wraps a serde_json error with its line and column.
pub fn parse_error(e: serde_json::Error) -> Error {
    // serde_json already appends "at line L column C".
    Error::Parse(e.to_string())
}

pub fn density_from_str(s: &str) -> Result<DensityOperator> {
    serde_json::from_str::<DensityJson>(s)
        .map_err(parse_error)?
        .to_state()
}

pub fn povm_from_str(s: &str) -> Result<Povm> {
    serde_json::from_str::<PovmJson>(s).map_err(parse_error)?.to_povm()
}

pub fn density_to_string(rho: &DensityOperator) -> String {
    serde_json::to_string(&DensityJson::from_state(rho)).expect("plain data")
}

pub fn povm_to_string(m: &Povm) -> String {
    serde_json::to_string(&PovmJson::from_povm(m)).expect("plain data")
}
