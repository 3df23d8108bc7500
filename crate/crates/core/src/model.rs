//! Model specifications, flat parameter stores, initialization, and
//! parameter-byte / FLOP accounting over boundary ranges.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use rand::distributions::{Distribution, Uniform};

use crate::layer::{LayerError, LayerKind};
use crate::rng::{stream_rng, STREAM_INIT};

/// Wire size of one real number in all byte accounting (32-bit encoding,
/// fixed artifact-wide).
pub const BYTES_PER_REAL: u64 = 4;
/// Wire size of one class label (32-bit index).
pub const BYTES_PER_LABEL: u64 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    NoLayers,
    BadInputShape,
    /// Shape composition failed at the named layer index.
    Compose { layer: usize, source: LayerError },
    /// The chain's final shape is not a logits vector of length `num_classes`.
    BadHead { got: Vec<usize>, num_classes: usize },
    BoundaryRange { from: usize, to: usize, layers: usize },
    ParamLength { expected: usize, got: usize },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::NoLayers => write!(f, "model must contain at least one layer"),
            ModelError::BadInputShape => write!(f, "input shape extents must be >= 1"),
            ModelError::Compose { layer, source } => {
                write!(f, "shape mismatch at layer {layer}: {source}")
            }
            ModelError::BadHead { got, num_classes } => write!(
                f,
                "model output shape {got:?} is not a logits vector of length {num_classes}"
            ),
            ModelError::BoundaryRange { from, to, layers } => write!(
                f,
                "invalid boundary range [{from}, {to}] for a {layers}-layer model"
            ),
            ModelError::ParamLength { expected, got } => {
                write!(f, "parameter vector length {got}, expected {expected}")
            }
        }
    }
}

impl core::error::Error for ModelError {}

/// An ordered chain of layers mapping a fixed per-sample input shape to a
/// logits vector. Split boundaries are the gaps between top-level layers,
/// numbered `0..=layer_count()`; boundaries `1..layer_count()` are interior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    layers: Vec<LayerKind>,
    input_shape: Vec<usize>,
    num_classes: usize,
    boundary_shapes: Vec<Vec<usize>>,
    param_offsets: Vec<usize>,
}

impl ModelSpec {
    pub fn new(
        layers: Vec<LayerKind>,
        input_shape: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self, ModelError> {
        if layers.is_empty() {
            return Err(ModelError::NoLayers);
        }
        if input_shape.is_empty() || input_shape.contains(&0) || num_classes == 0 {
            return Err(ModelError::BadInputShape);
        }
        let mut boundary_shapes = Vec::with_capacity(layers.len() + 1);
        boundary_shapes.push(input_shape.clone());
        for (i, layer) in layers.iter().enumerate() {
            let next = layer
                .output_shape(boundary_shapes.last().expect("nonempty"))
                .map_err(|source| ModelError::Compose { layer: i, source })?;
            boundary_shapes.push(next);
        }
        let head = boundary_shapes.last().expect("nonempty");
        if head.as_slice() != [num_classes] {
            return Err(ModelError::BadHead {
                got: head.clone(),
                num_classes,
            });
        }
        let mut param_offsets = Vec::with_capacity(layers.len() + 1);
        let mut offset = 0usize;
        param_offsets.push(0);
        for layer in &layers {
            offset += layer.param_count();
            param_offsets.push(offset);
        }
        Ok(Self {
            layers,
            input_shape,
            num_classes,
            boundary_shapes,
            param_offsets,
        })
    }

    pub fn layers(&self) -> &[LayerKind] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Number of interior split boundaries (top-level layer gaps).
    pub fn split_boundaries(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Per-sample activation shape at boundary `b` (0 = model input,
    /// `layer_count()` = logits).
    pub fn boundary_shape(&self, boundary: usize) -> Result<&[usize], ModelError> {
        self.boundary_shapes
            .get(boundary)
            .map(Vec::as_slice)
            .ok_or(ModelError::BoundaryRange {
                from: boundary,
                to: boundary,
                layers: self.layers.len(),
            })
    }

    pub fn boundary_elements(&self, boundary: usize) -> Result<usize, ModelError> {
        Ok(self.boundary_shape(boundary)?.iter().product())
    }

    fn check_range(&self, from: usize, to: usize) -> Result<(), ModelError> {
        if from > to || to > self.layers.len() {
            return Err(ModelError::BoundaryRange {
                from,
                to,
                layers: self.layers.len(),
            });
        }
        Ok(())
    }

    /// Flat parameter index range owned by layers `[from, to)`.
    pub fn param_range(&self, from: usize, to: usize) -> Result<Range<usize>, ModelError> {
        self.check_range(from, to)?;
        Ok(self.param_offsets[from]..self.param_offsets[to])
    }

    /// Flat parameter index range owned by a single layer.
    pub fn layer_param_range(&self, layer: usize) -> Range<usize> {
        self.param_offsets[layer]..self.param_offsets[layer + 1]
    }

    pub fn param_count(&self) -> usize {
        *self.param_offsets.last().expect("nonempty")
    }
}

/// Flat trainable parameters of a model, laid out layer by layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    values: Vec<f64>,
}

impl ParameterSet {
    /// Wraps raw values without checking them against a model; lengths are
    /// validated wherever the set meets a `ModelSpec` or other sets.
    pub fn from_raw(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn from_values(spec: &ModelSpec, values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() != spec.param_count() {
            return Err(ModelError::ParamLength {
                expected: spec.param_count(),
                got: values.len(),
            });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Deterministic Glorot-style uniform initialization: weights drawn from
/// `U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out)))`, biases zero.
pub fn build_model(spec: &ModelSpec, seed: u64) -> ParameterSet {
    let mut rng = stream_rng(seed, &[STREAM_INIT]);
    let mut values = vec![0.0f64; spec.param_count()];
    for (i, layer) in spec.layers().iter().enumerate() {
        let range = spec.layer_param_range(i);
        let slot = &mut values[range];
        match *layer {
            LayerKind::Dense { inputs, outputs } => {
                fill_glorot(&mut rng, &mut slot[..inputs * outputs], inputs, outputs);
            }
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => {
                let fan_in = in_channels * kernel * kernel;
                let fan_out = out_channels * kernel * kernel;
                let w = out_channels * in_channels * kernel * kernel;
                fill_glorot(&mut rng, &mut slot[..w], fan_in, fan_out);
            }
            LayerKind::ResidualBlock { channels } => {
                let fan = channels * 9;
                let w = channels * channels * 9;
                // conv1 weights, conv1 bias, conv2 weights, conv2 bias
                fill_glorot(&mut rng, &mut slot[..w], fan, fan);
                let conv2 = w + channels;
                fill_glorot(&mut rng, &mut slot[conv2..conv2 + w], fan, fan);
            }
            _ => {}
        }
    }
    ParameterSet { values }
}

fn fill_glorot(rng: &mut rand_chacha::ChaCha8Rng, weights: &mut [f64], fan_in: usize, fan_out: usize) {
    let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
    let dist = Uniform::new_inclusive(-limit, limit);
    for w in weights {
        *w = dist.sample(rng);
    }
}

/// Wire bytes of the parameters owned by layers `[from, to)`.
pub fn param_bytes(spec: &ModelSpec, from: usize, to: usize) -> Result<u64, ModelError> {
    let range = spec.param_range(from, to)?;
    Ok(range.len() as u64 * BYTES_PER_REAL)
}

/// Forward FLOPs of layers `[from, to)` for a batch of the given size.
/// Backward cost is twice this by convention.
pub fn flops(spec: &ModelSpec, from: usize, to: usize, batch_size: usize) -> Result<u64, ModelError> {
    spec.check_range(from, to)?;
    let mut total = 0u64;
    for i in from..to {
        let input = spec.boundary_shape(i)?;
        let output = spec.boundary_shape(i + 1)?;
        total += spec.layers()[i].forward_flops(input, output);
    }
    Ok(total * batch_size as u64)
}

/// The reference model: a 1x16x16 input, a stem convolution, alternating
/// downsampling convolutions and residual blocks with channel growth, and a
/// dense head — ten top-level layers, hence exactly nine interior split
/// boundaries, with activation sizes strictly decreasing across boundaries
/// 2, 4, 6 and 8.
pub fn resmini() -> ModelSpec {
    let conv = |cin: usize, cout: usize, stride: usize| LayerKind::Conv2d {
        in_channels: cin,
        out_channels: cout,
        kernel: 3,
        stride,
        padding: 1,
    };
    ModelSpec::new(
        vec![
            conv(1, 8, 1),                          // 0: stem, 8x16x16
            conv(8, 8, 2),                          // 1: 8x8x8
            LayerKind::ResidualBlock { channels: 8 }, // 2
            conv(8, 16, 2),                         // 3: 16x4x4
            LayerKind::ResidualBlock { channels: 16 }, // 4
            conv(16, 32, 2),                        // 5: 32x2x2
            LayerKind::ResidualBlock { channels: 32 }, // 6
            conv(32, 64, 2),                        // 7: 64x1x1
            LayerKind::ResidualBlock { channels: 64 }, // 8
            LayerKind::Dense {
                inputs: 64,
                outputs: 10,
            }, // 9: head
        ],
        vec![1, 16, 16],
        10,
    )
    .expect("reference model composes")
}
