//! Central finite-difference checks of every layer kind's analytic
//! gradients, for both parameters and inputs.

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use splitsim_core::engine::{backward, forward};
use splitsim_core::model::{build_model, ModelSpec, ParameterSet};
use splitsim_core::tensor::{Tensor, TensorShape};
use splitsim_core::testing::{central_diff_grads, close, kink_safe_values};
use splitsim_core::LayerKind;

const EPS: f64 = 1e-4;
const TOL: f64 = 1e-4;

/// Embeds `layer` as layer 0 of a valid model (flatten + dense head after
/// it) and checks its parameter and input gradients against central finite
/// differences of a fixed random linear functional of its output.
fn check_layer(layer: LayerKind, sample_shape: Vec<usize>, input_values: Vec<f64>, batch: usize, rng: &mut ChaCha8Rng) {
    let out_shape = layer.output_shape(&sample_shape).expect("layer composes");
    let flat: usize = out_shape.iter().product();
    let mut layers = vec![layer];
    layers.push(LayerKind::Flatten);
    layers.push(LayerKind::Dense {
        inputs: flat,
        outputs: 2,
    });
    let spec = ModelSpec::new(layers, sample_shape.clone(), 2).expect("harness composes");
    let params = build_model(&spec, rng.gen());
    let n0 = spec.param_range(0, 1).unwrap().len();

    let in_dims: Vec<usize> = std::iter::once(batch)
        .chain(sample_shape.iter().copied())
        .collect();
    let input = Tensor::new(TensorShape::new(in_dims.clone()).unwrap(), input_values).unwrap();

    let coeff_dist = Uniform::new_inclusive(0.5, 1.5);
    let coeffs: Vec<f64> = (0..batch * flat)
        .map(|_| {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            sign * coeff_dist.sample(rng)
        })
        .collect();
    let out_dims: Vec<usize> = std::iter::once(batch)
        .chain(out_shape.iter().copied())
        .collect();
    let upstream = Tensor::new(TensorShape::new(out_dims).unwrap(), coeffs.clone()).unwrap();

    // analytic gradients of L = sum_i coeffs_i * out_i
    let (out, cache) = forward(&spec, &params, &input, 0, 1).unwrap();
    assert_eq!(out.data().len(), coeffs.len());
    let (grads, input_grad) = backward(&spec, &params, &cache, &upstream).unwrap();
    assert_eq!(grads.values.len(), n0);

    let functional = |p: &ParameterSet, x: &Tensor| -> f64 {
        let (o, _) = forward(&spec, p, x, 0, 1).unwrap();
        o.data().iter().zip(&coeffs).map(|(a, c)| a * c).sum()
    };

    if n0 > 0 {
        let fd_params = central_diff_grads(
            |p0: &[f64]| {
                let mut v = params.values().to_vec();
                v[..n0].copy_from_slice(p0);
                let ps = ParameterSet::from_values(&spec, v).unwrap();
                functional(&ps, &input)
            },
            &params.values()[..n0],
            EPS,
        );
        for (i, (&a, &f)) in grads.values.iter().zip(&fd_params).enumerate() {
            assert!(
                close(a, f, TOL),
                "param grad {i}: analytic {a} vs finite difference {f}"
            );
        }
    }

    let fd_inputs = central_diff_grads(
        |x: &[f64]| {
            let t = Tensor::new(
                TensorShape::new(in_dims.clone()).unwrap(),
                x.to_vec(),
            )
            .unwrap();
            functional(&params, &t)
        },
        input.data(),
        EPS,
    );
    for (i, (&a, &f)) in input_grad.data().iter().zip(&fd_inputs).enumerate() {
        assert!(
            close(a, f, TOL),
            "input grad {i}: analytic {a} vs finite difference {f}"
        );
    }
}

fn uniform_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let dist = Uniform::new_inclusive(-1.0, 1.0);
    (0..n).map(|_| dist.sample(rng)).collect()
}

#[test]
fn dense_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..20 {
        let inputs = rng.gen_range(1..=8usize);
        let outputs = rng.gen_range(1..=6usize);
        let batch = rng.gen_range(1..=3usize);
        let values = uniform_values(&mut rng, batch * inputs);
        check_layer(
            LayerKind::Dense { inputs, outputs },
            vec![inputs],
            values,
            batch,
            &mut rng,
        );
    }
}

#[test]
fn conv2d_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..20 {
        let cin = rng.gen_range(1..=3usize);
        let cout = rng.gen_range(1..=3usize);
        let kernel = rng.gen_range(1..=3usize);
        let stride = rng.gen_range(1..=2usize);
        let padding = rng.gen_range(0..=1usize);
        let h = rng.gen_range(kernel.max(2)..=kernel + 4);
        let w = rng.gen_range(kernel.max(2)..=kernel + 4);
        let batch = rng.gen_range(1..=2usize);
        let values = uniform_values(&mut rng, batch * cin * h * w);
        check_layer(
            LayerKind::Conv2d {
                in_channels: cin,
                out_channels: cout,
                kernel,
                stride,
                padding,
            },
            vec![cin, h, w],
            values,
            batch,
            &mut rng,
        );
    }
}

#[test]
fn relu_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..20 {
        let n = rng.gen_range(1..=12usize);
        let batch = rng.gen_range(1..=3usize);
        // keep inputs away from the kink at zero
        let values = kink_safe_values(&mut rng, batch * n);
        check_layer(LayerKind::Relu, vec![n], values, batch, &mut rng);
    }
}

#[test]
fn maxpool_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for _ in 0..20 {
        let c = rng.gen_range(1..=3usize);
        let kernel = rng.gen_range(1..=3usize);
        let stride = rng.gen_range(1..=2usize);
        let h = rng.gen_range(kernel..=kernel + 4);
        let w = rng.gen_range(kernel..=kernel + 4);
        let batch = rng.gen_range(1..=2usize);
        // continuous random values: pooling ties have probability zero
        let values = uniform_values(&mut rng, batch * c * h * w);
        check_layer(
            LayerKind::MaxPool { kernel, stride },
            vec![c, h, w],
            values,
            batch,
            &mut rng,
        );
    }
}

#[test]
fn avgpool_global_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for _ in 0..20 {
        let c = rng.gen_range(1..=4usize);
        let h = rng.gen_range(1..=5usize);
        let w = rng.gen_range(1..=5usize);
        let batch = rng.gen_range(1..=3usize);
        let values = uniform_values(&mut rng, batch * c * h * w);
        check_layer(LayerKind::AvgPoolGlobal, vec![c, h, w], values, batch, &mut rng);
    }
}

#[test]
fn flatten_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    for _ in 0..20 {
        let c = rng.gen_range(1..=3usize);
        let h = rng.gen_range(1..=4usize);
        let w = rng.gen_range(1..=4usize);
        let batch = rng.gen_range(1..=3usize);
        let values = uniform_values(&mut rng, batch * c * h * w);
        check_layer(LayerKind::Flatten, vec![c, h, w], values, batch, &mut rng);
    }
}

#[test]
fn residual_block_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    for _ in 0..20 {
        let channels = rng.gen_range(1..=3usize);
        let h = rng.gen_range(1..=4usize);
        let w = rng.gen_range(1..=4usize);
        let batch = rng.gen_range(1..=2usize);
        let values = uniform_values(&mut rng, batch * channels * h * w);
        check_layer(
            LayerKind::ResidualBlock { channels },
            vec![channels, h, w],
            values,
            batch,
            &mut rng,
        );
    }
}

#[test]
fn softmax_cross_entropy_gradients() {
    use splitsim_core::engine::loss_and_grad;
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    for _ in 0..20 {
        let classes = rng.gen_range(2..=5usize);
        let batch = rng.gen_range(1..=4usize);
        let values = uniform_values(&mut rng, batch * classes);
        let labels: Vec<usize> = (0..batch).map(|_| rng.gen_range(0..classes)).collect();
        let shape = TensorShape::new(vec![batch, classes]).unwrap();
        let logits = Tensor::new(shape.clone(), values.clone()).unwrap();
        let (_, grad) = loss_and_grad(&logits, &labels).unwrap();
        let fd = central_diff_grads(
            |x: &[f64]| {
                let t = Tensor::new(shape.clone(), x.to_vec()).unwrap();
                loss_and_grad(&t, &labels).unwrap().0
            },
            &values,
            EPS,
        );
        for (&a, &f) in grad.data().iter().zip(&fd) {
            assert!(close(a, f, TOL), "loss grad: analytic {a} vs fd {f}");
        }
    }
}
