//! A plain N-dimensional real tensor and its SPDT persistence.

use std::path::Path;

use crate::error::{CoreError, Result};
use crate::spdt::{self, Payload};

/// Row-major f32 tensor: a flat buffer plus a list of extents.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let count: usize = dims.iter().product();
        if count != data.len() {
            return Err(CoreError::DimensionMismatch(format!(
                "dims {:?} imply {} elements, data has {}",
                dims,
                count,
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let count = dims.iter().product();
        Self {
            dims,
            data: vec![0.0; count],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }
}

/// Read an f32 SPDT file as a tensor.
pub fn read_tensor(path: &Path) -> Result<Tensor> {
    let (dims, data) = spdt::read_f32(path)?;
    Tensor::new(dims, data)
}

/// Write a tensor as an f32 SPDT file. Round-trip is bit-exact.
pub fn write_tensor(path: &Path, tensor: &Tensor) -> Result<()> {
    spdt::write(path, &tensor.dims, &Payload::F32(tensor.data.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_identity() {
        let dir = std::env::temp_dir().join("tensor-unit");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.spdt");
        let t = Tensor::new(vec![2, 3], (0..6).map(|i| i as f32).collect()).unwrap();
        write_tensor(&path, &t).unwrap();
        let back = read_tensor(&path).unwrap();
        assert_eq!(back, t);
    }
}
