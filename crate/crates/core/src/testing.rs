//! Reference implementations and generators used by the test suites.
//!
//! Everything here is deliberately independent of the engine's fast paths:
//! the convolution is a direct nested-loop evaluation and the gradients come
//! from central finite differences, so the suites can check the engine
//! against them rather than against itself.

use alloc::vec;
use alloc::vec::Vec;

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::layer::LayerKind;
use crate::model::ModelSpec;
use crate::tensor::{Tensor, TensorShape};

/// Direct nested-loop 2D convolution over `[B, Cin, H, W]` with explicit
/// zero padding. One addition and multiplication at a time, no reordering.
#[allow(clippy::too_many_arguments)]
pub fn naive_conv2d(
    input: &[f64],
    batch: usize,
    cin: usize,
    h: usize,
    w: usize,
    weights: &[f64],
    bias: &[f64],
    cout: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
) -> Vec<f64> {
    let ho = (h + 2 * padding - kernel) / stride + 1;
    let wo = (w + 2 * padding - kernel) / stride + 1;
    let mut out = vec![0.0f64; batch * cout * ho * wo];
    for b in 0..batch {
        for co in 0..cout {
            for oh in 0..ho {
                for ow in 0..wo {
                    let mut acc = bias[co];
                    for ci in 0..cin {
                        for kh in 0..kernel {
                            for kw in 0..kernel {
                                let ih = oh * stride + kh;
                                let iw = ow * stride + kw;
                                if ih < padding || iw < padding {
                                    continue;
                                }
                                let (ih, iw) = (ih - padding, iw - padding);
                                if ih >= h || iw >= w {
                                    continue;
                                }
                                let x = input[((b * cin + ci) * h + ih) * w + iw];
                                let wgt = weights
                                    [((co * cin + ci) * kernel + kh) * kernel + kw];
                                acc += x * wgt;
                            }
                        }
                    }
                    out[((b * cout + co) * ho + oh) * wo + ow] = acc;
                }
            }
        }
    }
    out
}

/// Central finite differences of a scalar function at `x`.
pub fn central_diff_grads<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x: &[f64],
    eps: f64,
) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut grads = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + eps;
        let plus = f(&probe);
        probe[i] = orig - eps;
        let minus = f(&probe);
        probe[i] = orig;
        grads.push((plus - minus) / (2.0 * eps));
    }
    grads
}

/// Relative agreement check with an absolute floor for near-zero values.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1.0f64.max(a.abs()).max(b.abs())
}

/// A random but composing chain model with an input batch, for equivalence
/// and round-trip style tests.
pub struct RandomModel {
    pub spec: ModelSpec,
    pub input: Tensor,
}

/// Generates a random convolutional chain (conv / relu / maxpool / residual
/// block bodies, flatten + dense head) together with a matching random
/// input batch.
pub fn random_chain_model(rng: &mut ChaCha8Rng) -> RandomModel {
    loop {
        if let Some(model) = try_random_chain(rng) {
            return model;
        }
    }
}

fn try_random_chain(rng: &mut ChaCha8Rng) -> Option<RandomModel> {
    let mut layers = Vec::new();
    let c0 = rng.gen_range(1..=3usize);
    let hw = rng.gen_range(5..=9usize);
    let mut shape = vec![c0, hw, hw];
    let body = rng.gen_range(1..=4usize);
    for _ in 0..body {
        let layer = match rng.gen_range(0..4u8) {
            0 => LayerKind::Conv2d {
                in_channels: shape[0],
                out_channels: rng.gen_range(1..=4),
                kernel: rng.gen_range(1..=3),
                stride: rng.gen_range(1..=2),
                padding: rng.gen_range(0..=1),
            },
            1 => LayerKind::Relu,
            2 => LayerKind::MaxPool {
                kernel: rng.gen_range(1..=2),
                stride: rng.gen_range(1..=2),
            },
            _ => LayerKind::ResidualBlock { channels: shape[0] },
        };
        shape = layer.output_shape(&shape).ok()?;
        if shape.iter().product::<usize>() == 0 {
            return None;
        }
        layers.push(layer);
    }
    let flat: usize = shape.iter().product();
    let classes = rng.gen_range(2..=4usize);
    layers.push(LayerKind::Flatten);
    layers.push(LayerKind::Dense {
        inputs: flat,
        outputs: classes,
    });
    let spec = ModelSpec::new(layers, vec![c0, hw, hw], classes).ok()?;
    let batch = rng.gen_range(1..=3usize);
    let n = batch * c0 * hw * hw;
    let dist = Uniform::new_inclusive(-1.0, 1.0);
    let data: Vec<f64> = (0..n).map(|_| dist.sample(rng)).collect();
    let input = Tensor::new(
        TensorShape::new(vec![batch, c0, hw, hw]).ok()?,
        data,
    )
    .ok()?;
    Some(RandomModel { spec, input })
}

/// Random values bounded away from zero, for layers with a kink at zero.
pub fn kink_safe_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let magnitude = Uniform::new_inclusive(0.1, 1.0);
    (0..n)
        .map(|_| {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            sign * magnitude.sample(rng)
        })
        .collect()
}
