//! Layer vocabulary: shape rules, parameter counts, and forward FLOP costs.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// One element of a model's top-level chain.
///
/// Residual blocks are atomic: the identity skip connection is fully
/// contained inside the block, so split boundaries only ever fall between
/// top-level chain elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerKind {
    /// Fully connected layer. Accepts `[B, inputs]` directly, or any shape
    /// whose per-sample element count equals `inputs` (implicit flatten).
    Dense { inputs: usize, outputs: usize },
    /// 2D convolution over `[B, C, H, W]` with a square kernel.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    Relu,
    /// Max pooling over `[B, C, H, W]`, no padding.
    MaxPool { kernel: usize, stride: usize },
    /// Global average pooling: `[B, C, H, W]` -> `[B, C]`.
    AvgPoolGlobal,
    Flatten,
    /// Two same-channel 3x3 convolutions (stride 1, padding 1) with an
    /// identity skip: `y = relu(conv2(relu(conv1(x))) + x)`.
    ResidualBlock { channels: usize },
}

pub(crate) const RESIDUAL_KERNEL: usize = 3;
pub(crate) const RESIDUAL_PADDING: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerError {
    BadConfig(&'static str),
    InputRank { expected: &'static str, got: Vec<usize> },
    ChannelMismatch { expected: usize, got: usize },
    FeatureMismatch { expected: usize, got: usize },
    SpatialTooSmall { got: Vec<usize> },
}

impl fmt::Display for LayerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerError::BadConfig(msg) => write!(f, "invalid layer configuration: {msg}"),
            LayerError::InputRank { expected, got } => {
                write!(f, "expected {expected} input, got shape {got:?}")
            }
            LayerError::ChannelMismatch { expected, got } => {
                write!(f, "expected {expected} input channels, got {got}")
            }
            LayerError::FeatureMismatch { expected, got } => {
                write!(f, "expected {expected} input features, got {got}")
            }
            LayerError::SpatialTooSmall { got } => {
                write!(f, "spatial extent too small for kernel, input shape {got:?}")
            }
        }
    }
}

impl core::error::Error for LayerError {}

fn conv_extent(input: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = input + 2 * padding;
    if padded < kernel {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

impl LayerKind {
    /// Output per-sample shape for a given per-sample input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, LayerError> {
        match *self {
            LayerKind::Dense { inputs, outputs } => {
                if outputs == 0 || inputs == 0 {
                    return Err(LayerError::BadConfig("dense extents must be >= 1"));
                }
                let got: usize = input.iter().product();
                if got != inputs {
                    return Err(LayerError::FeatureMismatch {
                        expected: inputs,
                        got,
                    });
                }
                Ok(vec![outputs])
            }
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                if kernel == 0 || stride == 0 || in_channels == 0 || out_channels == 0 {
                    return Err(LayerError::BadConfig("conv extents must be >= 1"));
                }
                let [c, h, w] = expect_chw(input)?;
                if c != in_channels {
                    return Err(LayerError::ChannelMismatch {
                        expected: in_channels,
                        got: c,
                    });
                }
                let ho = conv_extent(h, kernel, stride, padding);
                let wo = conv_extent(w, kernel, stride, padding);
                match (ho, wo) {
                    (Some(ho), Some(wo)) if ho > 0 && wo > 0 => Ok(vec![out_channels, ho, wo]),
                    _ => Err(LayerError::SpatialTooSmall {
                        got: input.to_vec(),
                    }),
                }
            }
            LayerKind::Relu => Ok(input.to_vec()),
            LayerKind::MaxPool { kernel, stride } => {
                if kernel == 0 || stride == 0 {
                    return Err(LayerError::BadConfig("pool extents must be >= 1"));
                }
                let [c, h, w] = expect_chw(input)?;
                if h < kernel || w < kernel {
                    return Err(LayerError::SpatialTooSmall {
                        got: input.to_vec(),
                    });
                }
                let ho = (h - kernel) / stride + 1;
                let wo = (w - kernel) / stride + 1;
                Ok(vec![c, ho, wo])
            }
            LayerKind::AvgPoolGlobal => {
                let [c, _, _] = expect_chw(input)?;
                Ok(vec![c])
            }
            LayerKind::Flatten => Ok(vec![input.iter().product()]),
            LayerKind::ResidualBlock { channels } => {
                if channels == 0 {
                    return Err(LayerError::BadConfig("block channels must be >= 1"));
                }
                let [c, h, w] = expect_chw(input)?;
                if c != channels {
                    return Err(LayerError::ChannelMismatch {
                        expected: channels,
                        got: c,
                    });
                }
                // Stride 1, padding 1, kernel 3 preserves any spatial extent.
                Ok(vec![c, h, w])
            }
        }
    }

    /// Trainable parameter count (weights + biases).
    pub fn param_count(&self) -> usize {
        match *self {
            LayerKind::Dense { inputs, outputs } => inputs * outputs + outputs,
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => out_channels * in_channels * kernel * kernel + out_channels,
            LayerKind::ResidualBlock { channels } => {
                2 * (channels * channels * RESIDUAL_KERNEL * RESIDUAL_KERNEL + channels)
            }
            _ => 0,
        }
    }

    /// Forward FLOPs for one sample, under the artifact-wide conventions:
    /// dense `2*in*out`, conv `2*k^2*cin*cout*Ho*Wo`, element-wise and pooling
    /// layers one FLOP per element touched, bias adds excluded. Backward cost
    /// is defined as twice the forward cost.
    pub fn forward_flops(&self, input: &[usize], output: &[usize]) -> u64 {
        let in_elems: u64 = input.iter().product::<usize>() as u64;
        let out_elems: u64 = output.iter().product::<usize>() as u64;
        match *self {
            LayerKind::Dense { inputs, outputs } => 2 * inputs as u64 * outputs as u64,
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => {
                let spatial = out_elems / out_channels as u64;
                2 * (kernel * kernel) as u64 * in_channels as u64 * out_channels as u64 * spatial
            }
            LayerKind::Relu => out_elems,
            LayerKind::MaxPool { .. } => in_elems,
            LayerKind::AvgPoolGlobal => in_elems,
            LayerKind::Flatten => 0,
            LayerKind::ResidualBlock { channels } => {
                // two 3x3 convolutions plus two relus and one skip add
                let spatial = out_elems / channels as u64;
                let conv = 2 * (RESIDUAL_KERNEL * RESIDUAL_KERNEL) as u64
                    * channels as u64
                    * channels as u64
                    * spatial;
                2 * conv + 3 * out_elems
            }
        }
    }
}

fn expect_chw(input: &[usize]) -> Result<[usize; 3], LayerError> {
    match input {
        [c, h, w] => Ok([*c, *h, *w]),
        _ => Err(LayerError::InputRank {
            expected: "[C, H, W]",
            got: input.to_vec(),
        }),
    }
}
