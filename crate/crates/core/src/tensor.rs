//! Dense row-major tensors with a leading batch dimension.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Shape of a dense tensor.
///
/// Activation tensors carry the batch extent first; per-sample shapes simply
/// omit it. Every extent is at least one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorShape {
    dims: Vec<usize>,
}

impl TensorShape {
    pub fn new(dims: Vec<usize>) -> Result<Self, ShapeError> {
        if dims.is_empty() {
            return Err(ShapeError::EmptyShape);
        }
        if dims.contains(&0) {
            return Err(ShapeError::ZeroExtent(dims));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn elements(&self) -> usize {
        self.dims.iter().product()
    }

    /// The same shape with a batch extent prepended.
    pub fn with_batch(&self, batch: usize) -> Result<Self, ShapeError> {
        let mut dims = Vec::with_capacity(self.dims.len() + 1);
        dims.push(batch);
        dims.extend_from_slice(&self.dims);
        Self::new(dims)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShapeError {
    EmptyShape,
    ZeroExtent(Vec<usize>),
    DataLength { expected: usize, got: usize },
    LabelCount { batch: usize, labels: usize },
    LabelOutOfRange { label: usize, num_classes: usize },
}

impl fmt::Display for ShapeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeError::EmptyShape => write!(f, "tensor shape must have rank >= 1"),
            ShapeError::ZeroExtent(dims) => write!(f, "tensor extents must be >= 1, got {dims:?}"),
            ShapeError::DataLength { expected, got } => {
                write!(f, "data length {got} does not match shape element count {expected}")
            }
            ShapeError::LabelCount { batch, labels } => {
                write!(f, "batch extent {batch} does not match label count {labels}")
            }
            ShapeError::LabelOutOfRange { label, num_classes } => {
                write!(f, "label {label} out of range for {num_classes} classes")
            }
        }
    }
}

impl core::error::Error for ShapeError {}

/// A dense row-major tensor of 64-bit reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: TensorShape,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: TensorShape, data: Vec<f64>) -> Result<Self, ShapeError> {
        if shape.elements() != data.len() {
            return Err(ShapeError::DataLength {
                expected: shape.elements(),
                got: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: TensorShape) -> Self {
        let n = shape.elements();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
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

    /// Leading (batch) extent.
    pub fn batch(&self) -> usize {
        self.shape.dims()[0]
    }

    /// Element count per sample (all extents after the batch one).
    pub fn per_sample_elements(&self) -> usize {
        self.shape.elements() / self.batch()
    }
}

/// A mini-batch of inputs with integer class labels.
#[derive(Debug, Clone)]
pub struct Batch {
    inputs: Tensor,
    labels: Vec<usize>,
}

impl Batch {
    pub fn new(inputs: Tensor, labels: Vec<usize>, num_classes: usize) -> Result<Self, ShapeError> {
        if inputs.batch() != labels.len() {
            return Err(ShapeError::LabelCount {
                batch: inputs.batch(),
                labels: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(ShapeError::LabelOutOfRange {
                label: bad,
                num_classes,
            });
        }
        Ok(Self { inputs, labels })
    }

    pub fn inputs(&self) -> &Tensor {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}
