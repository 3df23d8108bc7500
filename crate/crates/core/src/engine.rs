//! Exact forward/backward propagation over boundary ranges, softmax
//! cross-entropy, and plain SGD.
//!
//! `forward(spec, params, input, from, to)` runs layers `[from, to)` and
//! caches what the matching `backward` call needs. Running `[0, c)` on one
//! side and `[c, L)` on the other composes to exactly the same arithmetic as
//! a monolithic `[0, L)` pass, which is what makes split execution
//! numerically identical to local execution.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::layer::{LayerKind, RESIDUAL_KERNEL, RESIDUAL_PADDING};
use crate::model::{ModelError, ModelSpec, ParameterSet};
use crate::tensor::{Tensor, TensorShape};

#[derive(Debug, Clone, PartialEq)]
pub enum EngineError {
    Model(ModelError),
    EntryShape {
        boundary: usize,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    CacheMismatch(&'static str),
    LogitsShape(Vec<usize>),
    LabelCount { rows: usize, labels: usize },
    LabelOutOfRange { label: usize, num_classes: usize },
    GradLength { expected: usize, got: usize },
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::Model(e) => write!(f, "{e}"),
            EngineError::EntryShape {
                boundary,
                expected,
                got,
            } => write!(
                f,
                "input shape {got:?} does not match boundary {boundary} shape {expected:?}"
            ),
            EngineError::CacheMismatch(msg) => write!(f, "forward cache mismatch: {msg}"),
            EngineError::LogitsShape(got) => {
                write!(f, "expected rank-2 logits tensor, got shape {got:?}")
            }
            EngineError::LabelCount { rows, labels } => {
                write!(f, "{labels} labels for {rows} logit rows")
            }
            EngineError::LabelOutOfRange { label, num_classes } => {
                write!(f, "label {label} out of range for {num_classes} classes")
            }
            EngineError::GradLength { expected, got } => {
                write!(f, "gradient length {got}, expected {expected}")
            }
        }
    }
}

impl core::error::Error for EngineError {}

impl From<ModelError> for EngineError {
    fn from(e: ModelError) -> Self {
        EngineError::Model(e)
    }
}

enum LayerCache {
    Dense { input: Vec<f64> },
    Conv { input: Vec<f64> },
    Relu { input: Vec<f64> },
    MaxPool { argmax: Vec<u32>, in_elems: usize },
    AvgPool { in_hw: usize },
    Flatten,
    Residual {
        input: Vec<f64>,
        pre1: Vec<f64>,
        act1: Vec<f64>,
        pre_relu: Vec<f64>,
    },
}

/// Intermediates cached by [`forward`] for a later [`backward`] call.
pub struct ForwardCache {
    from_layer: usize,
    to_layer: usize,
    batch: usize,
    layers: Vec<LayerCache>,
    output_len: usize,
}

impl ForwardCache {
    pub fn from_layer(&self) -> usize {
        self.from_layer
    }

    pub fn to_layer(&self) -> usize {
        self.to_layer
    }
}

/// Gradients for the parameters owned by layers `[from_layer, to_layer)`,
/// laid out exactly like the matching slice of the full parameter vector.
#[derive(Debug, Clone)]
pub struct RangeGradients {
    pub from_layer: usize,
    pub to_layer: usize,
    pub values: Vec<f64>,
}

/// Runs layers `[from_layer, to_layer)` on `input`, whose shape must equal
/// the model's boundary-`from_layer` shape with a leading batch extent.
pub fn forward(
    spec: &ModelSpec,
    params: &ParameterSet,
    input: &Tensor,
    from_layer: usize,
    to_layer: usize,
) -> Result<(Tensor, ForwardCache), EngineError> {
    // validates the boundary range
    spec.param_range(from_layer, to_layer)?;
    if params.len() != spec.param_count() {
        return Err(ModelError::ParamLength {
            expected: spec.param_count(),
            got: params.len(),
        }
        .into());
    }
    let entry = spec.boundary_shape(from_layer)?;
    let dims = input.shape().dims();
    if dims.len() != entry.len() + 1 || &dims[1..] != entry {
        return Err(EngineError::EntryShape {
            boundary: from_layer,
            expected: entry.to_vec(),
            got: dims.to_vec(),
        });
    }
    let batch = input.batch();
    let all = params.values();

    let mut data = input.data().to_vec();
    let mut caches = Vec::with_capacity(to_layer - from_layer);
    for i in from_layer..to_layer {
        let layer = &spec.layers()[i];
        let in_shape = spec.boundary_shape(i)?;
        let out_shape = spec.boundary_shape(i + 1)?;
        let p = &all[spec.layer_param_range(i)];
        let (out, cache) = layer_forward(layer, p, data, in_shape, out_shape, batch);
        caches.push(cache);
        data = out;
    }
    let out_dims = spec.boundary_shape(to_layer)?;
    let output_len = data.len();
    let shape = TensorShape::new(
        core::iter::once(batch)
            .chain(out_dims.iter().copied())
            .collect(),
    )
    .expect("validated shape");
    let out = Tensor::new(shape, data).expect("constructed length");
    Ok((
        out,
        ForwardCache {
            from_layer,
            to_layer,
            batch,
            layers: caches,
            output_len,
        },
    ))
}

/// Reverse-mode gradients of the range run by the matching [`forward`] call.
/// Returns parameter gradients for layers `[from, to)` and the gradient with
/// respect to the range's input (the smashed-data gradient when the range
/// starts at a cut).
pub fn backward(
    spec: &ModelSpec,
    params: &ParameterSet,
    cache: &ForwardCache,
    upstream: &Tensor,
) -> Result<(RangeGradients, Tensor), EngineError> {
    if cache.to_layer > spec.layer_count() || cache.layers.len() != cache.to_layer - cache.from_layer
    {
        return Err(EngineError::CacheMismatch("cache does not match this model"));
    }
    if upstream.batch() != cache.batch || upstream.data().len() != cache.output_len {
        return Err(EngineError::CacheMismatch(
            "upstream gradient does not match cached forward output",
        ));
    }
    let batch = cache.batch;
    let all = params.values();
    let range = spec.param_range(cache.from_layer, cache.to_layer)?;
    let mut param_grads = vec![0.0f64; range.len()];
    let base = range.start;

    let mut grad = upstream.data().to_vec();
    for (slot, i) in (cache.from_layer..cache.to_layer).enumerate().rev() {
        let layer = &spec.layers()[i];
        let in_shape = spec.boundary_shape(i)?;
        let out_shape = spec.boundary_shape(i + 1)?;
        let p_range = spec.layer_param_range(i);
        let p = &all[p_range.clone()];
        let g_slot = &mut param_grads[p_range.start - base..p_range.end - base];
        let lc = &cache.layers[slot];
        grad = layer_backward(layer, p, lc, &grad, g_slot, in_shape, out_shape, batch)?;
    }
    let in_dims = spec.boundary_shape(cache.from_layer)?;
    let shape = TensorShape::new(
        core::iter::once(batch)
            .chain(in_dims.iter().copied())
            .collect(),
    )
    .expect("validated shape");
    let input_grad = Tensor::new(shape, grad).expect("constructed length");
    Ok((
        RangeGradients {
            from_layer: cache.from_layer,
            to_layer: cache.to_layer,
            values: param_grads,
        },
        input_grad,
    ))
}

/// Softmax cross-entropy averaged over the batch, with its logits gradient.
pub fn loss_and_grad(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor), EngineError> {
    let dims = logits.shape().dims();
    let [rows, classes] = match dims {
        [r, c] => [*r, *c],
        other => return Err(EngineError::LogitsShape(other.to_vec())),
    };
    if labels.len() != rows {
        return Err(EngineError::LabelCount {
            rows,
            labels: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(EngineError::LabelOutOfRange {
            label: bad,
            num_classes: classes,
        });
    }
    let data = logits.data();
    let mut grad = vec![0.0f64; data.len()];
    let mut loss = 0.0f64;
    let inv_b = 1.0 / rows as f64;
    for (b, &label) in labels.iter().enumerate() {
        let row = &data[b * classes..(b + 1) * classes];
        let g_row = &mut grad[b * classes..(b + 1) * classes];
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let mut sum = 0.0;
        for &x in row {
            sum += libm::exp(x - max);
        }
        let lse = max + libm::log(sum);
        loss += lse - row[label];
        for (j, g) in g_row.iter_mut().enumerate() {
            let softmax = libm::exp(row[j] - lse);
            *g = (softmax - if j == label { 1.0 } else { 0.0 }) * inv_b;
        }
    }
    let grad = Tensor::new(logits.shape().clone(), grad).expect("same shape");
    Ok((loss * inv_b, grad))
}

/// One plain SGD step over the full parameter vector: `params - lr * grads`.
pub fn sgd_step(
    params: &ParameterSet,
    grads: &[f64],
    lr: f64,
) -> Result<ParameterSet, EngineError> {
    if grads.len() != params.len() {
        return Err(EngineError::GradLength {
            expected: params.len(),
            got: grads.len(),
        });
    }
    let mut values = params.values().to_vec();
    apply_sgd(&mut values, grads, lr);
    // Length is unchanged, so this stays valid for the model it came from.
    Ok(ParameterSet::from_raw(values))
}

/// In-place SGD update of a parameter slice.
pub fn apply_sgd(values: &mut [f64], grads: &[f64], lr: f64) {
    debug_assert_eq!(values.len(), grads.len());
    for (v, g) in values.iter_mut().zip(grads) {
        *v -= lr * g;
    }
}

// ---------------------------------------------------------------------------
// per-layer kernels
// ---------------------------------------------------------------------------

fn layer_forward(
    layer: &LayerKind,
    params: &[f64],
    input: Vec<f64>,
    in_shape: &[usize],
    out_shape: &[usize],
    batch: usize,
) -> (Vec<f64>, LayerCache) {
    match *layer {
        LayerKind::Dense { inputs, outputs } => {
            let (w, bias) = params.split_at(inputs * outputs);
            let mut out = vec![0.0f64; batch * outputs];
            for b in 0..batch {
                let x = &input[b * inputs..(b + 1) * inputs];
                let y = &mut out[b * outputs..(b + 1) * outputs];
                for (o, y_o) in y.iter_mut().enumerate() {
                    let row = &w[o * inputs..(o + 1) * inputs];
                    let mut acc = bias[o];
                    for (wi, xi) in row.iter().zip(x) {
                        acc += wi * xi;
                    }
                    *y_o = acc;
                }
            }
            (out, LayerCache::Dense { input })
        }
        LayerKind::Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
        } => {
            let [_, h, w] = [in_shape[0], in_shape[1], in_shape[2]];
            let [ho, wo] = [out_shape[1], out_shape[2]];
            let (weights, bias) = params.split_at(out_channels * in_channels * kernel * kernel);
            let out = conv2d_forward(
                &input,
                batch,
                in_channels,
                h,
                w,
                weights,
                bias,
                out_channels,
                kernel,
                stride,
                padding,
                ho,
                wo,
            );
            (out, LayerCache::Conv { input })
        }
        LayerKind::Relu => {
            let mut out = input.clone();
            for v in out.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            (out, LayerCache::Relu { input })
        }
        LayerKind::MaxPool { kernel, stride } => {
            let [c, h, w] = [in_shape[0], in_shape[1], in_shape[2]];
            let [ho, wo] = [out_shape[1], out_shape[2]];
            let mut out = vec![0.0f64; batch * c * ho * wo];
            let mut argmax = vec![0u32; batch * c * ho * wo];
            for bc in 0..batch * c {
                let plane = &input[bc * h * w..(bc + 1) * h * w];
                let out_plane = &mut out[bc * ho * wo..(bc + 1) * ho * wo];
                let arg_plane = &mut argmax[bc * ho * wo..(bc + 1) * ho * wo];
                for oh in 0..ho {
                    for ow in 0..wo {
                        let mut best = f64::NEG_INFINITY;
                        let mut best_idx = 0u32;
                        for kh in 0..kernel {
                            let ih = oh * stride + kh;
                            for kw in 0..kernel {
                                let iw = ow * stride + kw;
                                let v = plane[ih * w + iw];
                                if v > best {
                                    best = v;
                                    best_idx = (ih * w + iw) as u32;
                                }
                            }
                        }
                        out_plane[oh * wo + ow] = best;
                        arg_plane[oh * wo + ow] = best_idx;
                    }
                }
            }
            (
                out,
                LayerCache::MaxPool {
                    argmax,
                    in_elems: h * w,
                },
            )
        }
        LayerKind::AvgPoolGlobal => {
            let [c, h, w] = [in_shape[0], in_shape[1], in_shape[2]];
            let hw = h * w;
            let mut out = vec![0.0f64; batch * c];
            for (bc, o) in out.iter_mut().enumerate() {
                let plane = &input[bc * hw..(bc + 1) * hw];
                *o = plane.iter().sum::<f64>() / hw as f64;
            }
            (out, LayerCache::AvgPool { in_hw: hw })
        }
        LayerKind::Flatten => (input, LayerCache::Flatten),
        LayerKind::ResidualBlock { channels } => {
            let [_, h, w] = [in_shape[0], in_shape[1], in_shape[2]];
            let wcount = channels * channels * RESIDUAL_KERNEL * RESIDUAL_KERNEL;
            let (w1, rest) = params.split_at(wcount);
            let (b1, rest) = rest.split_at(channels);
            let (w2, b2) = rest.split_at(wcount);

            let pre1 = conv2d_forward(
                &input, batch, channels, h, w, w1, b1, channels, RESIDUAL_KERNEL, 1,
                RESIDUAL_PADDING, h, w,
            );
            let mut act1 = pre1.clone();
            for v in act1.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let mut pre_relu = conv2d_forward(
                &act1, batch, channels, h, w, w2, b2, channels, RESIDUAL_KERNEL, 1,
                RESIDUAL_PADDING, h, w,
            );
            for (s, x) in pre_relu.iter_mut().zip(&input) {
                *s += x;
            }
            let mut out = pre_relu.clone();
            for v in out.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            (
                out,
                LayerCache::Residual {
                    input,
                    pre1,
                    act1,
                    pre_relu,
                },
            )
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn layer_backward(
    layer: &LayerKind,
    params: &[f64],
    cache: &LayerCache,
    grad_out: &[f64],
    param_grads: &mut [f64],
    in_shape: &[usize],
    out_shape: &[usize],
    batch: usize,
) -> Result<Vec<f64>, EngineError> {
    match (layer, cache) {
        (LayerKind::Dense { inputs, outputs }, LayerCache::Dense { input }) => {
            let (inputs, outputs) = (*inputs, *outputs);
            let w = &params[..inputs * outputs];
            let (dw, db) = param_grads.split_at_mut(inputs * outputs);
            let mut dx = vec![0.0f64; batch * inputs];
            for b in 0..batch {
                let x = &input[b * inputs..(b + 1) * inputs];
                let g = &grad_out[b * outputs..(b + 1) * outputs];
                let dx_row = &mut dx[b * inputs..(b + 1) * inputs];
                for (o, &g_o) in g.iter().enumerate() {
                    db[o] += g_o;
                    let w_row = &w[o * inputs..(o + 1) * inputs];
                    let dw_row = &mut dw[o * inputs..(o + 1) * inputs];
                    for ((dwi, xi), (dxi, wi)) in
                        dw_row.iter_mut().zip(x).zip(dx_row.iter_mut().zip(w_row))
                    {
                        *dwi += g_o * xi;
                        *dxi += g_o * wi;
                    }
                }
            }
            Ok(dx)
        }
        (
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            },
            LayerCache::Conv { input },
        ) => {
            let [_, h, w] = [in_shape[0], in_shape[1], in_shape[2]];
            let [ho, wo] = [out_shape[1], out_shape[2]];
            let wcount = out_channels * in_channels * kernel * kernel;
            let weights = &params[..wcount];
            let (dw, db) = param_grads.split_at_mut(wcount);
            let dx = conv2d_backward(
                input,
                batch,
                *in_channels,
                h,
                w,
                weights,
                *out_channels,
                *kernel,
                *stride,
                *padding,
                ho,
                wo,
                grad_out,
                dw,
                db,
            );
            Ok(dx)
        }
        (LayerKind::Relu, LayerCache::Relu { input }) => {
            let mut dx = grad_out.to_vec();
            for (d, &x) in dx.iter_mut().zip(input) {
                if x <= 0.0 {
                    *d = 0.0;
                }
            }
            Ok(dx)
        }
        (LayerKind::MaxPool { .. }, LayerCache::MaxPool { argmax, in_elems }) => {
            let out_hw = out_shape[1] * out_shape[2];
            let planes = batch * in_shape[0];
            let mut dx = vec![0.0f64; planes * in_elems];
            for bc in 0..planes {
                let g_plane = &grad_out[bc * out_hw..(bc + 1) * out_hw];
                let a_plane = &argmax[bc * out_hw..(bc + 1) * out_hw];
                let dx_plane = &mut dx[bc * in_elems..(bc + 1) * in_elems];
                for (&g, &a) in g_plane.iter().zip(a_plane) {
                    dx_plane[a as usize] += g;
                }
            }
            Ok(dx)
        }
        (LayerKind::AvgPoolGlobal, LayerCache::AvgPool { in_hw }) => {
            let mut dx = vec![0.0f64; grad_out.len() * in_hw];
            let scale = 1.0 / *in_hw as f64;
            for (bc, &g) in grad_out.iter().enumerate() {
                let v = g * scale;
                for d in dx[bc * in_hw..(bc + 1) * in_hw].iter_mut() {
                    *d = v;
                }
            }
            Ok(dx)
        }
        (LayerKind::Flatten, LayerCache::Flatten) => Ok(grad_out.to_vec()),
        (
            LayerKind::ResidualBlock { channels },
            LayerCache::Residual {
                input,
                pre1,
                act1,
                pre_relu,
            },
        ) => {
            let channels = *channels;
            let [_, h, w] = [in_shape[0], in_shape[1], in_shape[2]];
            let wcount = channels * channels * RESIDUAL_KERNEL * RESIDUAL_KERNEL;
            let w1 = &params[..wcount];
            let w2 = &params[wcount + channels..2 * wcount + channels];
            let (g1, rest) = param_grads.split_at_mut(wcount);
            let (gb1, rest) = rest.split_at_mut(channels);
            let (g2, gb2) = rest.split_at_mut(wcount);

            // final relu
            let mut g_sum = grad_out.to_vec();
            for (d, &s) in g_sum.iter_mut().zip(pre_relu) {
                if s <= 0.0 {
                    *d = 0.0;
                }
            }
            // conv2
            let mut g_act1 = conv2d_backward(
                act1, batch, channels, h, w, w2, channels, RESIDUAL_KERNEL, 1, RESIDUAL_PADDING,
                h, w, &g_sum, g2, gb2,
            );
            // inner relu
            for (d, &x) in g_act1.iter_mut().zip(pre1) {
                if x <= 0.0 {
                    *d = 0.0;
                }
            }
            // conv1
            let mut dx = conv2d_backward(
                input, batch, channels, h, w, w1, channels, RESIDUAL_KERNEL, 1, RESIDUAL_PADDING,
                h, w, &g_act1, g1, gb1,
            );
            // skip connection
            for (d, &g) in dx.iter_mut().zip(&g_sum) {
                *d += g;
            }
            Ok(dx)
        }
        _ => Err(EngineError::CacheMismatch(
            "cached layer kind does not match the model layer",
        )),
    }
}

/// Dot product with four independent accumulators. The summation order is
/// fixed, so results are identical on every platform and every run.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = i * 4;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in chunks * 4..a.len() {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

/// Unrolls one sample's input planes into the patch matrix
/// `col[(ci*k + kh)*k + kw][oh*wo + ow] = padded_input[ci][oh*s+kh-p][ow*s+kw-p]`.
#[allow(clippy::too_many_arguments)]
fn im2col(
    sample: &[f64],
    cin: usize,
    h: usize,
    w: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
    ho: usize,
    wo: usize,
    col: &mut [f64],
) {
    let spatial = ho * wo;
    let mut q = 0usize;
    for ci in 0..cin {
        let plane = &sample[ci * h * w..(ci + 1) * h * w];
        for kh in 0..kernel {
            for kw in 0..kernel {
                let row = &mut col[q * spatial..(q + 1) * spatial];
                for oh in 0..ho {
                    let out_row = &mut row[oh * wo..oh * wo + wo];
                    let ih = oh * stride + kh;
                    if ih < padding || ih - padding >= h {
                        out_row.fill(0.0);
                        continue;
                    }
                    let in_row = &plane[(ih - padding) * w..(ih - padding) * w + w];
                    if stride == 1 {
                        // valid ow range: padding <= ow + kw < w + padding
                        let lo = padding.saturating_sub(kw).min(wo);
                        let hi = (w + padding - kw).min(wo).max(lo);
                        out_row[..lo].fill(0.0);
                        out_row[lo..hi]
                            .copy_from_slice(&in_row[lo + kw - padding..hi + kw - padding]);
                        out_row[hi..].fill(0.0);
                    } else {
                        for (ow, o) in out_row.iter_mut().enumerate() {
                            let iw = ow * stride + kw;
                            *o = if iw >= padding && iw - padding < w {
                                in_row[iw - padding]
                            } else {
                                0.0
                            };
                        }
                    }
                }
                q += 1;
            }
        }
    }
}

/// Scatter-adds a patch-matrix gradient back onto the input planes
/// (the adjoint of [`im2col`]).
#[allow(clippy::too_many_arguments)]
fn col2im_add(
    dcol: &[f64],
    cin: usize,
    h: usize,
    w: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
    ho: usize,
    wo: usize,
    dx_sample: &mut [f64],
) {
    let spatial = ho * wo;
    let mut q = 0usize;
    for ci in 0..cin {
        let plane = &mut dx_sample[ci * h * w..(ci + 1) * h * w];
        for kh in 0..kernel {
            for kw in 0..kernel {
                let row = &dcol[q * spatial..(q + 1) * spatial];
                for oh in 0..ho {
                    let ih = oh * stride + kh;
                    if ih < padding || ih - padding >= h {
                        continue;
                    }
                    let g_row = &row[oh * wo..oh * wo + wo];
                    let dx_row = &mut plane[(ih - padding) * w..(ih - padding) * w + w];
                    if stride == 1 {
                        let lo = padding.saturating_sub(kw).min(wo);
                        let hi = (w + padding - kw).min(wo).max(lo);
                        axpy(
                            &mut dx_row[lo + kw - padding..hi + kw - padding],
                            1.0,
                            &g_row[lo..hi],
                        );
                    } else {
                        for (ow, &g) in g_row.iter().enumerate() {
                            let iw = ow * stride + kw;
                            if iw >= padding && iw - padding < w {
                                dx_row[iw - padding] += g;
                            }
                        }
                    }
                }
                q += 1;
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn conv2d_forward(
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
    ho: usize,
    wo: usize,
) -> Vec<f64> {
    let spatial = ho * wo;
    let q_rows = cin * kernel * kernel;
    let mut out = vec![0.0f64; batch * cout * spatial];
    let mut col = vec![0.0f64; q_rows * spatial];
    for b in 0..batch {
        let sample = &input[b * cin * h * w..(b + 1) * cin * h * w];
        im2col(sample, cin, h, w, kernel, stride, padding, ho, wo, &mut col);
        let out_sample = &mut out[b * cout * spatial..(b + 1) * cout * spatial];
        if spatial == 1 {
            for co in 0..cout {
                out_sample[co] = bias[co] + dot(&weights[co * q_rows..(co + 1) * q_rows], &col);
            }
        } else {
            for co in 0..cout {
                let o_plane = &mut out_sample[co * spatial..(co + 1) * spatial];
                o_plane.fill(bias[co]);
                let w_row = &weights[co * q_rows..(co + 1) * q_rows];
                for (q, &wgt) in w_row.iter().enumerate() {
                    axpy(o_plane, wgt, &col[q * spatial..(q + 1) * spatial]);
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn conv2d_backward(
    input: &[f64],
    batch: usize,
    cin: usize,
    h: usize,
    w: usize,
    weights: &[f64],
    cout: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
    ho: usize,
    wo: usize,
    grad_out: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
) -> Vec<f64> {
    let spatial = ho * wo;
    let q_rows = cin * kernel * kernel;
    let mut dx = vec![0.0f64; batch * cin * h * w];
    let mut col = vec![0.0f64; q_rows * spatial];
    let mut dcol = vec![0.0f64; q_rows * spatial];
    for b in 0..batch {
        let sample = &input[b * cin * h * w..(b + 1) * cin * h * w];
        im2col(sample, cin, h, w, kernel, stride, padding, ho, wo, &mut col);
        let g_sample = &grad_out[b * cout * spatial..(b + 1) * cout * spatial];
        dcol.fill(0.0);
        if spatial == 1 {
            for co in 0..cout {
                let g = g_sample[co];
                db[co] += g;
                axpy(&mut dw[co * q_rows..(co + 1) * q_rows], g, &col);
                axpy(&mut dcol, g, &weights[co * q_rows..(co + 1) * q_rows]);
            }
        } else {
            for co in 0..cout {
                let g_plane = &g_sample[co * spatial..(co + 1) * spatial];
                db[co] += g_plane.iter().sum::<f64>();
                let dw_row = &mut dw[co * q_rows..(co + 1) * q_rows];
                let w_row = &weights[co * q_rows..(co + 1) * q_rows];
                for q in 0..q_rows {
                    let col_row = &col[q * spatial..(q + 1) * spatial];
                    dw_row[q] += dot(g_plane, col_row);
                    axpy(
                        &mut dcol[q * spatial..(q + 1) * spatial],
                        w_row[q],
                        g_plane,
                    );
                }
            }
        }
        col2im_add(
            &dcol,
            cin,
            h,
            w,
            kernel,
            stride,
            padding,
            ho,
            wo,
            &mut dx[b * cin * h * w..(b + 1) * cin * h * w],
        );
    }
    dx
}
