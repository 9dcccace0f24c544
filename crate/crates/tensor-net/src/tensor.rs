//! Dense row-major tensor of `f64` values.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorNetError};

/// A dense tensor with a positive-extent shape and row-major data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    /// Builds a tensor from raw data, checking the length and finiteness
    /// invariants.
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        if shape.iter().any(|&e| e == 0) {
            return Err(TensorNetError::InvalidTensor(format!(
                "zero extent in shape {shape:?}"
            )));
        }
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(TensorNetError::InvalidTensor(format!(
                "data length {} does not match shape {shape:?} (expected {n})",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(TensorNetError::InvalidTensor(
                "non-finite value in tensor data".into(),
            ));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![v],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Reinterprets the data under a new shape with the same element count.
    pub fn reshaped(&self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(TensorNetError::InvalidTensor(format!(
                "cannot reshape {:?} ({} elements) to {shape:?}",
                self.shape,
                self.data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data: self.data.clone(),
        })
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_length() {
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn from_vec_rejects_non_finite() {
        assert!(Tensor::from_vec(&[2], vec![1.0, f64::NAN]).is_err());
        assert!(Tensor::from_vec(&[2], vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn from_vec_rejects_zero_extent() {
        assert!(Tensor::from_vec(&[2, 0], vec![]).is_err());
    }
}
