//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `--nocapture` to see them). Every threshold is pinned in the
//! test body.

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use splitsim_cli::config::{DatasetConfig, PartitionConfig, RunConfig, VehicleConfig};
use splitsim_cli::runner::{run_experiment, run_rounds, RayonExecutor};
use splitsim_core::data::synth_dataset;
use splitsim_core::engine::{backward, forward, loss_and_grad};
use splitsim_core::model::{build_model, param_bytes, resmini, ModelSpec, ParameterSet, BYTES_PER_LABEL};
use splitsim_core::net::{RsuProfile, VehicleProfile};
use splitsim_core::orchestrator::{
    aggregate, evaluate, select_cut, AggregationMode, Fleet, HyperParams, SchemeKind,
    SelectionThresholds, Session, SessionConfig,
};
use splitsim_core::split::CutIndex;
use splitsim_core::testing::{central_diff_grads, close, kink_safe_values, random_chain_model};
use splitsim_core::{LayerKind, Tensor, TensorShape};

// ---------------------------------------------------------------------------
// shared reference configuration
// ---------------------------------------------------------------------------

/// Fleet of the reference profile: four identical vehicles whose mean rates
/// fall one per threshold band, and a roadside unit with 20x the vehicle
/// compute capacity.
fn reference_fleet_config() -> Vec<VehicleConfig> {
    [1.5e6, 3e6, 6e6, 12e6]
        .iter()
        .enumerate()
        .map(|(i, &rate)| VehicleConfig {
            id: Some(i),
            compute_capacity: 1e8,
            mean_rate: rate,
            jitter: 0.1,
            dwell_time: None,
        })
        .collect()
}

fn reference_config(scheme: &str) -> RunConfig {
    RunConfig {
        scheme: Some(scheme.into()),
        rounds: 1,
        local_epochs: 5,
        batch_size: 16,
        lr: 0.01,
        n_vehicles: 4,
        partition: PartitionConfig::Iid,
        dataset: DatasetConfig::Synth {
            num_classes: 10,
            per_class: 200,
            test_per_class: 0,
            input_shape: vec![1, 16, 16],
        },
        fleet: Some(reference_fleet_config()),
        seed: 42,
        ..RunConfig::default()
    }
}

fn bits(values: &[f64]) -> Vec<u64> {
    values.iter().map(|v| v.to_bits()).collect()
}

// ---------------------------------------------------------------------------
// 1. split equivalence
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_split_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let tol = 1e-6;
    for trial in 0..200 {
        let model = random_chain_model(&mut rng);
        let spec = &model.spec;
        let l = spec.layer_count();
        let cut = rng.gen_range(0..=l);
        let params = build_model(spec, rng.gen());
        let labels: Vec<usize> = (0..model.input.batch())
            .map(|_| rng.gen_range(0..spec.num_classes()))
            .collect();

        let (logits_m, cache_m) = forward(spec, &params, &model.input, 0, l).unwrap();
        let (_, dlogits) = loss_and_grad(&logits_m, &labels).unwrap();
        let (grads_m, dx_m) = backward(spec, &params, &cache_m, &dlogits).unwrap();

        let (smashed, cache_v) = forward(spec, &params, &model.input, 0, cut).unwrap();
        let (logits_s, cache_s) = forward(spec, &params, &smashed, cut, l).unwrap();
        let (_, dlogits_s) = loss_and_grad(&logits_s, &labels).unwrap();
        let (grads_rsu, smashed_grad) = backward(spec, &params, &cache_s, &dlogits_s).unwrap();
        let (grads_veh, dx_s) = backward(spec, &params, &cache_v, &smashed_grad).unwrap();

        let rel = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs() / 1.0f64.max(x.abs()).max(y.abs()))
                .fold(0.0, f64::max)
        };
        assert!(rel(logits_m.data(), logits_s.data()) <= tol, "trial {trial}: forward");
        let mut joined = grads_veh.values.clone();
        joined.extend_from_slice(&grads_rsu.values);
        assert!(rel(&joined, &grads_m.values) <= tol, "trial {trial}: param grads");
        assert!(rel(dx_m.data(), dx_s.data()) <= tol, "trial {trial}: input grads");
    }
    println!("ACCEPTANCE 1 (split equivalence, 200 random triples <= 1e-6): PASS");
}

// ---------------------------------------------------------------------------
// 2. gradient correctness
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_gradient_correctness() {
    let eps = 1e-4;
    let tol = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    // each generator yields a layer, its per-sample input shape, and whether
    // inputs must stay away from a kink at zero
    type LayerGen = Box<dyn Fn(&mut ChaCha8Rng) -> (LayerKind, Vec<usize>, bool)>;
    let kinds: Vec<LayerGen> = vec![
        Box::new(|r| {
            let inputs = r.gen_range(1..=8);
            (
                LayerKind::Dense {
                    inputs,
                    outputs: r.gen_range(1..=6),
                },
                vec![inputs],
                false,
            )
        }),
        Box::new(|r| {
            let cin = r.gen_range(1..=3);
            let kernel = r.gen_range(1..=3usize);
            (
                LayerKind::Conv2d {
                    in_channels: cin,
                    out_channels: r.gen_range(1..=3),
                    kernel,
                    stride: r.gen_range(1..=2),
                    padding: r.gen_range(0..=1),
                },
                vec![cin, kernel + r.gen_range(1..=4), kernel + r.gen_range(1..=4)],
                false,
            )
        }),
        Box::new(|r| (LayerKind::Relu, vec![r.gen_range(1..=12)], true)),
        Box::new(|r| {
            let kernel = r.gen_range(1..=3usize);
            (
                LayerKind::MaxPool {
                    kernel,
                    stride: r.gen_range(1..=2),
                },
                vec![
                    r.gen_range(1..=3),
                    kernel + r.gen_range(0..=3),
                    kernel + r.gen_range(0..=3),
                ],
                false,
            )
        }),
        Box::new(|r| {
            (
                LayerKind::AvgPoolGlobal,
                vec![r.gen_range(1..=4), r.gen_range(1..=5), r.gen_range(1..=5)],
                false,
            )
        }),
        Box::new(|r| {
            (
                LayerKind::Flatten,
                vec![r.gen_range(1..=3), r.gen_range(1..=4), r.gen_range(1..=4)],
                false,
            )
        }),
        Box::new(|r| {
            let channels = r.gen_range(1..=3);
            (
                LayerKind::ResidualBlock { channels },
                vec![channels, r.gen_range(1..=4), r.gen_range(1..=4)],
                false,
            )
        }),
    ];
    for make in &kinds {
        for _ in 0..20 {
            let (layer, sample_shape, kink_safe) = make(&mut rng);
            let out_shape = layer.output_shape(&sample_shape).unwrap();
            let flat: usize = out_shape.iter().product();
            let spec = ModelSpec::new(
                vec![
                    layer,
                    LayerKind::Flatten,
                    LayerKind::Dense {
                        inputs: flat,
                        outputs: 2,
                    },
                ],
                sample_shape.clone(),
                2,
            )
            .unwrap();
            let params = build_model(&spec, rng.gen());
            let n0 = spec.param_range(0, 1).unwrap().len();
            let batch = rng.gen_range(1..=2usize);
            let n_in: usize = batch * sample_shape.iter().product::<usize>();
            let values = if kink_safe {
                kink_safe_values(&mut rng, n_in)
            } else {
                let d = Uniform::new_inclusive(-1.0, 1.0);
                (0..n_in).map(|_| d.sample(&mut rng)).collect()
            };
            let in_dims: Vec<usize> = std::iter::once(batch)
                .chain(sample_shape.iter().copied())
                .collect();
            let input =
                Tensor::new(TensorShape::new(in_dims.clone()).unwrap(), values).unwrap();
            let coeffs: Vec<f64> = (0..batch * flat)
                .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 } * rng.gen_range(0.5..1.5))
                .collect();
            let out_dims: Vec<usize> = std::iter::once(batch)
                .chain(out_shape.iter().copied())
                .collect();
            let upstream =
                Tensor::new(TensorShape::new(out_dims).unwrap(), coeffs.clone()).unwrap();
            let (_, cache) = forward(&spec, &params, &input, 0, 1).unwrap();
            let (grads, input_grad) = backward(&spec, &params, &cache, &upstream).unwrap();

            let functional = |p: &ParameterSet, x: &Tensor| -> f64 {
                let (o, _) = forward(&spec, p, x, 0, 1).unwrap();
                o.data().iter().zip(&coeffs).map(|(a, c)| a * c).sum()
            };
            if n0 > 0 {
                let fd = central_diff_grads(
                    |p0| {
                        let mut v = params.values().to_vec();
                        v[..n0].copy_from_slice(p0);
                        functional(&ParameterSet::from_values(&spec, v).unwrap(), &input)
                    },
                    &params.values()[..n0],
                    eps,
                );
                for (&a, &f) in grads.values.iter().zip(&fd) {
                    assert!(close(a, f, tol), "param grad {a} vs {f}");
                }
            }
            let fd_in = central_diff_grads(
                |x| {
                    let t = Tensor::new(
                        TensorShape::new(in_dims.clone()).unwrap(),
                        x.to_vec(),
                    )
                    .unwrap();
                    functional(&params, &t)
                },
                input.data(),
                eps,
            );
            for (&a, &f) in input_grad.data().iter().zip(&fd_in) {
                assert!(close(a, f, tol), "input grad {a} vs {f}");
            }
        }
    }
    println!("ACCEPTANCE 2 (gradient correctness, all layer kinds, eps 1e-4, tol 1e-4): PASS");
}

// ---------------------------------------------------------------------------
// 3. communication-load ordering
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_communication_load_ordering() {
    let spec = resmini();
    let epochs = 5usize;
    let batch = 16usize;

    // closed-form per-round bytes for a split scheme at a given cut
    let split_expected = |cut: usize, sizes: &[usize]| -> u64 {
        let pb = param_bytes(&spec, 0, cut).unwrap();
        let mut total = 0u64;
        for &n in sizes {
            total += 2 * pb;
            for _ in 0..epochs {
                let mut left = n;
                while left > 0 {
                    let bs = left.min(batch);
                    left -= bs;
                    total += 2
                        * splitsim_core::split::smashed_bytes(&spec, CutIndex::new(cut), bs)
                            .unwrap()
                        + bs as u64 * BYTES_PER_LABEL;
                }
            }
        }
        total
    };

    let mut totals = Vec::new();
    for token in ["sl1", "sfl2", "sfl4", "sfl6", "sfl8", "fl"] {
        let cfg = reference_config(token);
        let resolved = splitsim_cli::config::resolve(&cfg).unwrap();
        let sizes: Vec<usize> = resolved.partition.sizes();
        let records = run_rounds(&resolved).unwrap();
        let got = records[0].bytes.total();
        let expected = match token {
            "fl" => sizes.len() as u64 * 2 * param_bytes(&spec, 0, 10).unwrap(),
            "sl1" => split_expected(1, &sizes),
            other => {
                let cut: usize = other[3..].parse().unwrap();
                split_expected(cut, &sizes)
            }
        };
        assert_eq!(got, expected, "{token}: closed-form identity");
        totals.push((token, got));
    }
    for pair in totals.windows(2) {
        assert!(
            pair[0].1 > pair[1].1,
            "{} ({} bytes) must exceed {} ({} bytes)",
            pair[0].0,
            pair[0].1,
            pair[1].0,
            pair[1].1
        );
    }
    let fl = totals.last().unwrap().1;
    for (token, bytes) in &totals[..totals.len() - 1] {
        assert!(bytes > &fl, "{token} must exceed fl");
    }
    println!(
        "ACCEPTANCE 3 (communication load: SL > SFL2 > SFL4 > SFL6 > SFL8 > FL, exact identities): PASS {:?}",
        totals
    );
}

// ---------------------------------------------------------------------------
// 4. latency trends
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_latency_trends() {
    // reference profile: identical vehicles, RSU at 20x vehicle capacity,
    // rates spanning all four threshold bands
    let mut walls = std::collections::BTreeMap::new();
    for token in ["asfl", "fl", "sl1"] {
        let cfg = reference_config(token);
        let resolved = splitsim_cli::config::resolve(&cfg).unwrap();
        let records = run_rounds(&resolved).unwrap();
        walls.insert(token, records[0].wall_clock_s);
    }
    let (asfl, fl, sl) = (walls["asfl"], walls["fl"], walls["sl1"]);
    assert!(asfl < fl, "ASFL {asfl} must beat FL {fl}");
    assert!(asfl < sl, "ASFL {asfl} must beat SL {sl}");

    // SL round time grows linearly in the vehicle count
    let spec = resmini();
    let mut points = Vec::new();
    for n in [1usize, 2, 4, 8] {
        let ds = synth_dataset(10, 4 * n, &[1, 16, 16], 7).unwrap(); // 40 samples per vehicle
        let part = splitsim_core::data::partition_iid(&ds, n, 7).unwrap();
        let fleet = Fleet {
            vehicles: (0..n)
                .map(|i| VehicleProfile {
                    id: i,
                    compute_capacity: 1e8,
                    mean_rate: 6e6,
                    jitter: 0.0,
                    dwell_time: None,
                })
                .collect(),
            rsu: RsuProfile {
                compute_capacity: 2e9,
                broadcast_rate: 1e9,
            },
        };
        let exec = RayonExecutor;
        let mut session = Session::new(
            SessionConfig {
                spec: &spec,
                data: &ds,
                partition: &part,
                test: None,
                fleet: &fleet,
                scheme: SchemeKind::Sl {
                    cut: CutIndex::new(1),
                },
                hp: HyperParams {
                    lr: 0.01,
                    batch_size: 16,
                    local_epochs: 5,
                },
                aggregation: AggregationMode::FedAvgMean,
                seed: 7,
            },
            &exec,
        )
        .unwrap();
        let record = session.run_round().unwrap();
        points.push((n as f64, record.wall_clock_s));
    }
    // least-squares line fit and its coefficient of determination
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    assert!(r2 > 0.99, "SL round time R^2 {r2} over N in {{1,2,4,8}}");
    println!(
        "ACCEPTANCE 4 (latency: ASFL {asfl:.2}s < FL {fl:.2}s, ASFL < SL {sl:.2}s, SL linear R^2 {r2:.6}): PASS"
    );
}

// ---------------------------------------------------------------------------
// 5. scheme-collapse oracles
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_scheme_collapse() {
    let spec = resmini();
    let ds = synth_dataset(10, 16, &[1, 16, 16], 55).unwrap(); // 40 per vehicle
    let part = splitsim_core::data::partition_iid(&ds, 4, 55).unwrap();
    let fleet_at = |rates: [f64; 4]| Fleet {
        vehicles: rates
            .iter()
            .enumerate()
            .map(|(i, &r)| VehicleProfile {
                id: i,
                compute_capacity: 1e8,
                mean_rate: r,
                jitter: 0.0,
                dwell_time: None,
            })
            .collect(),
        rsu: RsuProfile {
            compute_capacity: 2e9,
            broadcast_rate: 1e9,
        },
    };
    let hp = HyperParams {
        lr: 0.01,
        batch_size: 16,
        local_epochs: 5,
    };
    let exec = RayonExecutor;
    let run = |scheme: SchemeKind, fleet: &Fleet| -> Vec<Vec<u64>> {
        let mut session = Session::new(
            SessionConfig {
                spec: &spec,
                data: &ds,
                partition: &part,
                test: None,
                fleet,
                scheme,
                hp,
                aggregation: AggregationMode::FedAvgMean,
                seed: 55,
            },
            &exec,
        )
        .unwrap();
        (0..3)
            .map(|_| {
                session.run_round().unwrap();
                bits(session.global().values())
            })
            .collect()
    };

    // SFL with the cut at the layer count is FL, bit for bit, every round
    let fleet = fleet_at([1.5e6, 3e6, 6e6, 12e6]);
    let fl = run(SchemeKind::Fl, &fleet);
    let sfl_full = run(
        SchemeKind::Sfl {
            cut: CutIndex::new(10),
        },
        &fleet,
    );
    assert_eq!(fl, sfl_full, "SFL(cut = L) must equal FL bitwise");

    // ASFL under a constant channel is SFL at the mapped cut
    let constant = fleet_at([3e6, 3e6, 3e6, 3e6]); // band 2 -> cut 6
    let thresholds = SelectionThresholds::new(2e6, 4e6, 8e6, 16e6).unwrap();
    let asfl = run(SchemeKind::Asfl { thresholds }, &constant);
    let sfl6 = run(
        SchemeKind::Sfl {
            cut: CutIndex::new(6),
        },
        &constant,
    );
    assert_eq!(asfl, sfl6, "ASFL(constant rate) must equal SFL(mapped cut) bitwise");
    println!("ACCEPTANCE 5 (scheme collapse: SFL(L) == FL, ASFL(const) == SFL(6), 3 rounds bitwise): PASS");
}

// ---------------------------------------------------------------------------
// 6. aggregation
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_aggregation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    let dist = Uniform::new_inclusive(-2.0, 2.0);
    for _ in 0..50 {
        let n = rng.gen_range(1..=7usize);
        let len = rng.gen_range(1..=40usize);
        let base = ParameterSet::from_raw(
            (0..len).map(|_| dist.sample(&mut rng)).collect(),
        );
        let models: Vec<ParameterSet> = (0..n)
            .map(|_| {
                ParameterSet::from_raw(
                    (0..len).map(|_| dist.sample(&mut rng)).collect(),
                )
            })
            .collect();
        let got = aggregate(&base, &models, AggregationMode::FedAvgMean, None).unwrap();
        for i in 0..len {
            let mean: f64 =
                models.iter().map(|m| m.values()[i]).sum::<f64>() / n as f64;
            assert!(
                (got.values()[i] - mean).abs() <= 1e-7 * mean.abs().max(1.0),
                "mean mismatch at {i}"
            );
        }
    }
    // the printed formula, hand-checkable two-model case
    let base = ParameterSet::from_raw(vec![0.0]);
    let models = [
        ParameterSet::from_raw(vec![1.0]),
        ParameterSet::from_raw(vec![3.0]),
    ];
    let literal = aggregate(&base, &models, AggregationMode::PaperLiteral, None).unwrap();
    assert_eq!(literal.values(), &[-2.0]);
    let mean = aggregate(&base, &models, AggregationMode::FedAvgMean, None).unwrap();
    assert_eq!(mean.values(), &[2.0]);
    println!("ACCEPTANCE 6 (aggregation: fedavg-mean == mean within 1e-7, paper-literal exact): PASS");
}

// ---------------------------------------------------------------------------
// 7. cut selection
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_cut_selection() {
    let thr = SelectionThresholds::new(1e6, 2e6, 3e6, 4e6).unwrap();
    let expect = [
        (0.2e6, 8),
        (0.999e6, 8),
        (1e6, 8), // boundary: right-closed
        (1.0001e6, 6),
        (2e6, 6),
        (2.5e6, 4),
        (3e6, 4),
        (3.5e6, 2),
        (4e6, 2),
        (4.0001e6, 2), // documented clamp above r4
        (9e6, 2),
        (1e12, 2),
    ];
    for (rate, cut) in expect {
        assert_eq!(
            select_cut(rate, &thr).unwrap().value(),
            cut,
            "rate {rate}"
        );
    }
    assert!(select_cut(0.0, &thr).is_err());
    assert!(select_cut(-5.0, &thr).is_err());
    // scale invariance: scaling rates and thresholds together preserves the
    // assignment
    let mut rng = ChaCha8Rng::seed_from_u64(1007);
    for _ in 0..200 {
        let k = rng.gen_range(1e-6..1e6);
        let scaled = SelectionThresholds::new(1e6 * k, 2e6 * k, 3e6 * k, 4e6 * k).unwrap();
        let rate = rng.gen_range(1.0..6e6);
        assert_eq!(
            select_cut(rate, &thr).unwrap(),
            select_cut(rate * k, &scaled).unwrap()
        );
    }
    println!("ACCEPTANCE 7 (cut selection: bands, boundaries, clamp, scale invariance): PASS");
}

// ---------------------------------------------------------------------------
// 8. non-IID learning sanity
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_noniid_learning_sanity() {
    let make = |scheme: &str| RunConfig {
        scheme: Some(scheme.into()),
        rounds: 30,
        local_epochs: 5,
        batch_size: 16,
        lr: 0.01,
        n_vehicles: 4,
        partition: PartitionConfig::Noniid {
            labels_per_vehicle: 6,
            power_alpha: 1.0,
        },
        dataset: DatasetConfig::Synth {
            num_classes: 10,
            per_class: 200,
            test_per_class: 40,
            input_shape: vec![1, 16, 16],
        },
        fleet: Some(reference_fleet_config()),
        seed: 42,
        ..RunConfig::default()
    };

    let asfl = splitsim_cli::config::resolve(&make("asfl")).unwrap();
    let untrained = {
        let params = build_model(&asfl.spec, asfl.seed);
        evaluate(&asfl.spec, &params, asfl.test.as_ref().unwrap())
            .unwrap()
            .1
    };
    let asfl_records = run_rounds(&asfl).unwrap();
    let asfl_acc = asfl_records.last().unwrap().test_accuracy.unwrap();

    let fl = splitsim_cli::config::resolve(&make("fl")).unwrap();
    let fl_records = run_rounds(&fl).unwrap();
    let fl_acc = fl_records.last().unwrap().test_accuracy.unwrap();

    assert!(
        asfl_acc >= fl_acc - 0.02,
        "ASFL {asfl_acc} must stay within 2 points of FL {fl_acc}"
    );
    assert!(
        asfl_acc >= untrained + 0.20,
        "ASFL {asfl_acc} must improve 20 points over untrained {untrained}"
    );
    assert!(
        fl_acc >= untrained + 0.20,
        "FL {fl_acc} must improve 20 points over untrained {untrained}"
    );
    println!(
        "ACCEPTANCE 8 (non-IID sanity: untrained {untrained:.3}, FL {fl_acc:.3}, ASFL {asfl_acc:.3}): PASS"
    );
}

// ---------------------------------------------------------------------------
// 9. determinism of emitted files
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = reference_config("asfl");
    cfg.rounds = 2;
    cfg.dataset = DatasetConfig::Synth {
        num_classes: 10,
        per_class: 20,
        test_per_class: 10,
        input_shape: vec![1, 16, 16],
    };
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let a = run_experiment(&cfg, &out_a).unwrap();
    let b = run_experiment(&cfg, &out_b).unwrap();
    let bytes_a = std::fs::read(&a.metrics_path).unwrap();
    let bytes_b = std::fs::read(&b.metrics_path).unwrap();
    assert_eq!(bytes_a, bytes_b, "metrics files must be byte-identical");
    let sum_a = std::fs::read(&a.summary_path).unwrap();
    let sum_b = std::fs::read(&b.summary_path).unwrap();
    assert_eq!(sum_a, sum_b, "summary files must be byte-identical");
    let part_a = std::fs::read(&a.partition_path).unwrap();
    let part_b = std::fs::read(&b.partition_path).unwrap();
    assert_eq!(part_a, part_b, "partition exports must be byte-identical");
    println!("ACCEPTANCE 9 (byte-identical reruns at fixed seed): PASS");
}
