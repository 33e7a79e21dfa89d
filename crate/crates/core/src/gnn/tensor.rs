//! JSON container for dense tensors: `{"shape": [rows, cols], "kind": "int32", "data": [...]}`
//! with row-major data.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Number;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::{Scalar, ValueKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub kind: ValueKind,
    pub data: Vec<Number>,
}

fn number<T: Scalar>(v: T) -> Number {
    if T::KIND.is_integer() {
        Number::from(v.to_f64() as i64)
    } else {
        Number::from_f64(v.to_f64()).unwrap_or_else(|| Number::from(0))
    }
}

impl Tensor {
    pub fn from_dense<T: Scalar>(m: &DenseMatrix<T>) -> Self {
        Self {
            shape: vec![m.n_rows(), m.n_cols()],
            kind: T::KIND,
            data: m.values().iter().map(|&v| number(v)).collect(),
        }
    }

    pub fn to_dense<T: Scalar>(&self) -> Result<DenseMatrix<T>> {
        if self.kind != T::KIND {
            return Err(Error::Tensor(format!("expected {} data, found {}", T::KIND, self.kind)));
        }
        let &[rows, cols] = self.shape.as_slice() else {
            return Err(Error::Tensor(format!("expected a 2-d shape, found {:?}", self.shape)));
        };
        if rows * cols != self.data.len() {
            return Err(Error::Tensor(format!(
                "shape {rows}x{cols} needs {} values, found {}",
                rows * cols,
                self.data.len()
            )));
        }
        let values = self
            .data
            .iter()
            .enumerate()
            .map(|(i, x)| {
                x.as_f64()
                    .and_then(T::from_f64_exact)
                    .ok_or_else(|| Error::Tensor(format!("value {i} ({x}) is not a valid {}", T::KIND)))
            })
            .collect::<Result<Vec<T>>>()?;
        DenseMatrix::new(rows, cols, values)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}
