//! Split-engine properties: partition/round-trip of parameters, split
//! forward/backward equivalence with the monolithic pass, and the smashed
//! byte-size contracts on the reference model.

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use splitsim_core::engine::{backward, forward, loss_and_grad};
use splitsim_core::model::{build_model, resmini, ParameterSet};
use splitsim_core::split::{merge, smashed_bytes, split, CutIndex};
use splitsim_core::testing::random_chain_model;

fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / 1.0f64.max(x.abs()).max(y.abs()))
        .fold(0.0, f64::max)
}

/// Split execution against the monolithic pass on random models, cuts and
/// batches: forward outputs, parameter gradients and input gradients must
/// agree within 1e-6 relative error.
#[test]
fn split_execution_matches_monolithic() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..60 {
        let model = random_chain_model(&mut rng);
        let spec = &model.spec;
        let l = spec.layer_count();
        let cut = rng.gen_range(0..=l);
        let params = build_model(spec, rng.gen());
        let labels: Vec<usize> = (0..model.input.batch())
            .map(|_| rng.gen_range(0..spec.num_classes()))
            .collect();

        // monolithic
        let (logits_m, cache_m) = forward(spec, &params, &model.input, 0, l).unwrap();
        let (loss_m, dlogits) = loss_and_grad(&logits_m, &labels).unwrap();
        let (grads_m, dx_m) = backward(spec, &params, &cache_m, &dlogits).unwrap();

        // split at `cut`
        let (smashed, cache_v) = forward(spec, &params, &model.input, 0, cut).unwrap();
        let (logits_s, cache_s) = forward(spec, &params, &smashed, cut, l).unwrap();
        let (loss_s, dlogits_s) = loss_and_grad(&logits_s, &labels).unwrap();
        let (grads_rsu, smashed_grad) = backward(spec, &params, &cache_s, &dlogits_s).unwrap();
        let (grads_veh, dx_s) = backward(spec, &params, &cache_v, &smashed_grad).unwrap();

        assert!(max_rel_err(logits_m.data(), logits_s.data()) <= 1e-6, "trial {trial}");
        assert!((loss_m - loss_s).abs() <= 1e-6 * loss_m.max(1.0), "trial {trial}");
        let mut grads_joined = grads_veh.values.clone();
        grads_joined.extend_from_slice(&grads_rsu.values);
        assert_eq!(grads_joined.len(), grads_m.values.len());
        assert!(max_rel_err(&grads_joined, &grads_m.values) <= 1e-6, "trial {trial}");
        assert!(max_rel_err(dx_m.data(), dx_s.data()) <= 1e-6, "trial {trial}");
    }
}

#[test]
fn merged_model_forward_equals_never_split_forward() {
    let spec = resmini();
    let params = build_model(&spec, 40);
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let data: Vec<f64> = (0..2 * 256).map(|_| rng.gen::<f64>()).collect();
    let input = splitsim_core::Tensor::new(
        splitsim_core::TensorShape::new(vec![2, 1, 16, 16]).unwrap(),
        data,
    )
    .unwrap();
    let (expected, _) = forward(&spec, &params, &input, 0, 10).unwrap();
    for cut in 0..=10 {
        let merged = merge(&spec, &split(&spec, &params, CutIndex::new(cut)).unwrap()).unwrap();
        let (got, _) = forward(&spec, &merged, &input, 0, 10).unwrap();
        assert_eq!(got.data(), expected.data(), "cut {cut}");
    }
}

#[test]
fn resmini_cut4_slice_lengths_match_counting_oracle() {
    let spec = resmini();
    let params = build_model(&spec, 4);
    let sm = split(&spec, &params, CutIndex::new(4)).unwrap();
    // layers 0..4: 80 + 584 + 1168 + 1168 params
    assert_eq!(sm.vehicle_side.len(), 3000);
    assert_eq!(sm.rsu_side.len(), 123_778 - 3000);
}

#[test]
fn resmini_smashed_bytes_decrease_over_strategy_cuts() {
    let spec = resmini();
    let at = |cut: usize| smashed_bytes(&spec, CutIndex::new(cut), 16).unwrap();
    assert!(at(2) > at(4));
    assert!(at(4) > at(6));
    assert!(at(6) > at(8));
    // interior example from the byte contract: elements * batch * 4
    assert_eq!(at(2), 512 * 16 * 4);
}

#[test]
fn smashed_bytes_boundary_definitions() {
    let spec = resmini();
    // cut 0 counts the full raw input, cut L counts nothing
    assert_eq!(
        smashed_bytes(&spec, CutIndex::new(0), 16).unwrap(),
        256 * 16 * 4
    );
    assert_eq!(smashed_bytes(&spec, CutIndex::new(10), 16).unwrap(), 0);
    assert!(smashed_bytes(&spec, CutIndex::new(11), 16).is_err());
}

#[test]
fn smashed_bytes_interior_arithmetic() {
    // a boundary shaped 8x4x4 at batch 16 costs 8*4*4*16*4 = 8192 bytes
    use splitsim_core::model::ModelSpec;
    use splitsim_core::LayerKind;
    let spec = ModelSpec::new(
        vec![
            LayerKind::Conv2d {
                in_channels: 1,
                out_channels: 8,
                kernel: 3,
                stride: 2,
                padding: 1,
            },
            LayerKind::Flatten,
            LayerKind::Dense {
                inputs: 128,
                outputs: 2,
            },
        ],
        vec![1, 8, 8],
        2,
    )
    .unwrap();
    assert_eq!(spec.boundary_shape(1).unwrap(), &[8, 4, 4]);
    assert_eq!(smashed_bytes(&spec, CutIndex::new(1), 16).unwrap(), 8192);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// merge is the exact inverse of split, and the two sides partition the
    /// parameter vector, for any cut and any parameter values.
    #[test]
    fn merge_inverts_split(seed in 0u64..1000, cut in 0usize..=10) {
        let spec = resmini();
        let params = build_model(&spec, seed);
        let sm = split(&spec, &params, CutIndex::new(cut)).unwrap();
        prop_assert_eq!(
            sm.vehicle_side.len() + sm.rsu_side.len(),
            spec.param_count()
        );
        let back = merge(&spec, &sm).unwrap();
        prop_assert_eq!(back.values(), params.values());
    }

    /// parameter-byte and FLOP accounting are additive over any boundary
    /// partition
    #[test]
    fn accounting_additive(a in 0usize..=10, b in 0usize..=10, batch in 1usize..32) {
        let spec = resmini();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        use splitsim_core::model::{flops, param_bytes};
        prop_assert_eq!(
            param_bytes(&spec, 0, lo).unwrap() + param_bytes(&spec, lo, hi).unwrap(),
            param_bytes(&spec, 0, hi).unwrap()
        );
        prop_assert_eq!(
            flops(&spec, 0, lo, batch).unwrap() + flops(&spec, lo, hi, batch).unwrap(),
            flops(&spec, 0, hi, batch).unwrap()
        );
    }

    /// downstream gradient messages are priced identically to upstream
    /// smashed messages at every cut and batch size
    #[test]
    fn exchange_symmetry(cut in 0usize..=10, batch in 1usize..64) {
        let spec = resmini();
        let up = smashed_bytes(&spec, CutIndex::new(cut), batch).unwrap();
        let down = smashed_bytes(&spec, CutIndex::new(cut), batch).unwrap();
        prop_assert_eq!(up, down);
    }
}

#[test]
fn round_trip_of_raw_values() {
    // split/merge on handcrafted values, all cuts
    let spec = resmini();
    let values: Vec<f64> = (0..spec.param_count()).map(|i| i as f64 * 0.5 - 7.0).collect();
    let params = ParameterSet::from_values(&spec, values).unwrap();
    for cut in 0..=spec.layer_count() {
        let back = merge(&spec, &split(&spec, &params, CutIndex::new(cut)).unwrap()).unwrap();
        assert_eq!(back.values(), params.values());
    }
}
