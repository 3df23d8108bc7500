//! Round protocols for the five training schemes.
//!
//! A [`Session`] owns the global model and advances it one round at a time,
//! emitting a [`RoundRecord`] per round. All validation happens at
//! construction: the round bodies rely on shapes, labels, cuts and profiles
//! already being consistent, so engine calls inside them cannot fail.
//!
//! Simulated time rules:
//! - FL: vehicles pipeline independently; the round takes the slowest
//!   vehicle's download + compute + upload, plus server aggregation.
//! - SL: one shared split model relayed through the server; vehicles run
//!   strictly sequentially in fleet order and the round time is the sum.
//! - SFL/ASFL: vehicles run in lockstep over local steps; per step the
//!   vehicle phase costs the slowest vehicle (parallel), the server phase
//!   costs the sum over replicas (sequential), and the gradient/backward
//!   phase again the slowest vehicle.
//! - CL: a one-time parallel raw-data upload in round 0, then server-only
//!   epochs every round.
//!
//! A vehicle whose round would outlast its dwell time is dropped: its update
//! (or its turn, for SL; its data, for CL) contributes nothing, and it never
//! uploads. Model evaluation is offline and costs no simulated time.

use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;

use crate::data::{Dataset, Partition};
use crate::engine::{self, EngineError};
use crate::model::{flops, param_bytes, ModelError, ModelSpec, ParameterSet, BYTES_PER_LABEL, BYTES_PER_REAL};
use crate::net::{
    check_dwell, comm_time, comp_time, sample_rate, NetError, RsuProfile, VehicleProfile,
};
use crate::rng::{stream_rng, POOLED_STREAM_ID, STREAM_BATCHES};
use crate::split::{smashed_bytes, CutIndex, SmashedBatch, SplitError};
use crate::tensor::Batch;

use super::aggregate::{aggregate, AggregateError, AggregationMode};
use super::executor::{StepTimes, VehicleExecutor, VehicleOutcome, VehicleTask};
use super::record::{ByteBreakdown, RoundRecord, VehicleRoundStats};
use super::selection::{select_cut, CutAssignment, SelectionError, SelectionThresholds};

#[derive(Debug, Clone, PartialEq)]
pub enum OrchError {
    Engine(EngineError),
    Split(SplitError),
    Net(NetError),
    Aggregate(AggregateError),
    Selection(SelectionError),
    Model(ModelError),
    EmptyFleet,
    FleetPartitionMismatch { vehicles: usize, lists: usize },
    UnorderedFleet { prev: usize, next: usize },
    EmptyDataset,
    EmptyVehicleData(usize),
    IndexOutOfBounds { vehicle: usize, index: usize, len: usize },
    BadHyperParams(&'static str),
    EmptyTestSet,
}

impl fmt::Display for OrchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrchError::Engine(e) => write!(f, "{e}"),
            OrchError::Split(e) => write!(f, "{e}"),
            OrchError::Net(e) => write!(f, "{e}"),
            OrchError::Aggregate(e) => write!(f, "{e}"),
            OrchError::Selection(e) => write!(f, "{e}"),
            OrchError::Model(e) => write!(f, "{e}"),
            OrchError::EmptyFleet => write!(f, "fleet must contain at least one vehicle"),
            OrchError::FleetPartitionMismatch { vehicles, lists } => {
                write!(f, "{vehicles} fleet vehicles but {lists} partition lists")
            }
            OrchError::UnorderedFleet { prev, next } => write!(
                f,
                "fleet ids must be strictly increasing, got {prev} before {next}"
            ),
            OrchError::EmptyDataset => write!(f, "training dataset is empty"),
            OrchError::EmptyVehicleData(v) => write!(f, "vehicle {v} has an empty partition"),
            OrchError::IndexOutOfBounds { vehicle, index, len } => write!(
                f,
                "vehicle {vehicle} partition index {index} out of bounds for dataset of {len}"
            ),
            OrchError::BadHyperParams(msg) => write!(f, "invalid hyperparameters: {msg}"),
            OrchError::EmptyTestSet => write!(f, "cannot evaluate on an empty dataset"),
        }
    }
}

impl core::error::Error for OrchError {}

impl From<EngineError> for OrchError {
    fn from(e: EngineError) -> Self {
        OrchError::Engine(e)
    }
}
impl From<SplitError> for OrchError {
    fn from(e: SplitError) -> Self {
        OrchError::Split(e)
    }
}
impl From<NetError> for OrchError {
    fn from(e: NetError) -> Self {
        OrchError::Net(e)
    }
}
impl From<AggregateError> for OrchError {
    fn from(e: AggregateError) -> Self {
        OrchError::Aggregate(e)
    }
}
impl From<SelectionError> for OrchError {
    fn from(e: SelectionError) -> Self {
        OrchError::Selection(e)
    }
}
impl From<ModelError> for OrchError {
    fn from(e: ModelError) -> Self {
        OrchError::Model(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub lr: f64,
    pub batch_size: usize,
    pub local_epochs: usize,
}

/// Scheme choice with its scheme-specific parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind {
    Cl,
    Fl,
    Sl { cut: CutIndex },
    Sfl { cut: CutIndex },
    Asfl { thresholds: SelectionThresholds },
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Cl => "cl",
            SchemeKind::Fl => "fl",
            SchemeKind::Sl { .. } => "sl",
            SchemeKind::Sfl { .. } => "sfl",
            SchemeKind::Asfl { .. } => "asfl",
        }
    }
}

/// The vehicles and the roadside unit they train against.
#[derive(Debug, Clone, PartialEq)]
pub struct Fleet {
    pub vehicles: Vec<VehicleProfile>,
    pub rsu: RsuProfile,
}

/// Simulated server cost of merging and averaging client models.
fn aggregation_flops(participants: usize, params: usize) -> u64 {
    (participants as u64 + 1) * params as u64
}

/// Per-epoch batch order for one vehicle: a seeded shuffle of its partition
/// chunked by batch size. Keyed by `(seed, stream id, round, epoch)` only, so
/// every scheme sees the identical batch stream, which is what makes the
/// scheme-collapse identities exact.
pub fn epoch_batches(
    indices: &[usize],
    batch_size: usize,
    seed: u64,
    stream_id: u64,
    round: u64,
    epoch: u64,
) -> Vec<Vec<usize>> {
    let mut order = indices.to_vec();
    let mut rng = stream_rng(seed, &[STREAM_BATCHES, stream_id, round, epoch]);
    order.shuffle(&mut rng);
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

/// Loss and accuracy of a model over a dataset.
pub fn evaluate(
    spec: &ModelSpec,
    params: &ParameterSet,
    ds: &Dataset,
) -> Result<(f64, f64), OrchError> {
    if ds.is_empty() {
        return Err(OrchError::EmptyTestSet);
    }
    let l = spec.layer_count();
    let classes = spec.num_classes();
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    let all: Vec<usize> = (0..ds.len()).collect();
    for chunk in all.chunks(256) {
        let batch = ds.gather(chunk);
        let (logits, _) = engine::forward(spec, params, batch.inputs(), 0, l)?;
        let (loss, _) = engine::loss_and_grad(&logits, batch.labels())?;
        loss_sum += loss * batch.len() as f64;
        for (row, &label) in logits.data().chunks(classes).zip(batch.labels()) {
            let mut best = 0usize;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            if best == label {
                correct += 1;
            }
        }
    }
    Ok((
        loss_sum / ds.len() as f64,
        correct as f64 / ds.len() as f64,
    ))
}

/// One local SGD step on the whole model (the FL path, and the split path
/// when the cut leaves the server side empty).
fn local_step(spec: &ModelSpec, params: &mut ParameterSet, batch: &Batch, lr: f64) -> f64 {
    let l = spec.layer_count();
    let (logits, cache) =
        engine::forward(spec, params, batch.inputs(), 0, l).expect("validated at construction");
    let (loss, dlogits) =
        engine::loss_and_grad(&logits, batch.labels()).expect("validated at construction");
    let (grads, _) =
        engine::backward(spec, params, &cache, &dlogits).expect("validated at construction");
    engine::apply_sgd(params.values_mut(), &grads.values, lr);
    loss
}

/// One split training step at an interior (or zero) cut: vehicle-side
/// forward, smashed-data exchange, server-side forward/backward, gradient
/// return, vehicle-side backward, then both sides update.
fn split_step(
    spec: &ModelSpec,
    params: &mut ParameterSet,
    cut: usize,
    producer: usize,
    batch: &Batch,
    lr: f64,
) -> f64 {
    let l = spec.layer_count();
    if cut == l {
        return local_step(spec, params, batch, lr);
    }
    let (activations, v_cache) =
        engine::forward(spec, params, batch.inputs(), 0, cut).expect("validated at construction");
    // the upstream message: boundary activations plus the batch labels
    let smashed = SmashedBatch {
        activations,
        labels: batch.labels().to_vec(),
        producer,
        cut: CutIndex::new(cut),
    };
    let (logits, s_cache) = engine::forward(spec, params, &smashed.activations, cut, l)
        .expect("boundary shapes compose");
    let (loss, dlogits) =
        engine::loss_and_grad(&logits, &smashed.labels).expect("validated at construction");
    let (s_grads, smashed_grad) =
        engine::backward(spec, params, &s_cache, &dlogits).expect("matching cache");
    let (v_grads, _) =
        engine::backward(spec, params, &v_cache, &smashed_grad).expect("matching cache");
    let v_range = spec.param_range(0, cut).expect("validated cut");
    engine::apply_sgd(&mut params.values_mut()[v_range], &v_grads.values, lr);
    let s_range = spec.param_range(cut, l).expect("validated cut");
    engine::apply_sgd(&mut params.values_mut()[s_range], &s_grads.values, lr);
    loss
}

/// The cross-round state: the round counter and the global model it indexes.
/// Per-vehicle split models and server-side replicas are derived from the
/// global model at every round start and live only within the round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundState {
    pub round: u64,
    pub global: ParameterSet,
}

/// A training session: the global model plus everything needed to run
/// rounds of the configured scheme.
pub struct Session<'a> {
    spec: &'a ModelSpec,
    data: &'a Dataset,
    partition: &'a Partition,
    test: Option<&'a Dataset>,
    fleet: &'a Fleet,
    scheme: SchemeKind,
    hp: HyperParams,
    aggregation: AggregationMode,
    seed: u64,
    executor: &'a dyn VehicleExecutor,
    state: RoundState,
    /// CL only: dataset indices pooled at the server during round 0.
    pooled: Vec<usize>,
}

/// Everything a [`Session`] needs, checked once at construction.
pub struct SessionConfig<'a> {
    pub spec: &'a ModelSpec,
    pub data: &'a Dataset,
    pub partition: &'a Partition,
    pub test: Option<&'a Dataset>,
    pub fleet: &'a Fleet,
    pub scheme: SchemeKind,
    pub hp: HyperParams,
    pub aggregation: AggregationMode,
    pub seed: u64,
}

impl<'a> Session<'a> {
    pub fn new(
        cfg: SessionConfig<'a>,
        executor: &'a dyn VehicleExecutor,
    ) -> Result<Self, OrchError> {
        let SessionConfig {
            spec,
            data,
            partition,
            test,
            fleet,
            scheme,
            hp,
            aggregation,
            seed,
        } = cfg;
        if fleet.vehicles.is_empty() {
            return Err(OrchError::EmptyFleet);
        }
        if fleet.vehicles.len() != partition.vehicles() {
            return Err(OrchError::FleetPartitionMismatch {
                vehicles: fleet.vehicles.len(),
                lists: partition.vehicles(),
            });
        }
        for (i, p) in fleet.vehicles.iter().enumerate() {
            p.validate()?;
            // vehicles are processed in fleet order, which therefore must be
            // ascending id order (drives server-side processing and pooling)
            if i > 0 && fleet.vehicles[i - 1].id >= p.id {
                return Err(OrchError::UnorderedFleet {
                    prev: fleet.vehicles[i - 1].id,
                    next: p.id,
                });
            }
        }
        fleet.rsu.validate()?;
        if hp.batch_size == 0 {
            return Err(OrchError::BadHyperParams("batch size must be >= 1"));
        }
        if hp.local_epochs == 0 {
            return Err(OrchError::BadHyperParams("local epochs must be >= 1"));
        }
        if !(hp.lr.is_finite() && hp.lr >= 0.0) {
            return Err(OrchError::BadHyperParams("learning rate must be finite and >= 0"));
        }
        if data.is_empty() {
            return Err(OrchError::EmptyDataset);
        }
        if data.sample_shape() != spec.input_shape() {
            return Err(OrchError::Engine(EngineError::EntryShape {
                boundary: 0,
                expected: spec.input_shape().to_vec(),
                got: data.sample_shape().to_vec(),
            }));
        }
        // fewer dataset classes than logits is fine; more would produce
        // labels the loss cannot index
        if data.num_classes() > spec.num_classes() {
            return Err(OrchError::Engine(EngineError::LabelOutOfRange {
                label: data.num_classes() - 1,
                num_classes: spec.num_classes(),
            }));
        }
        for (v, list) in partition.lists().iter().enumerate() {
            if list.is_empty() {
                return Err(OrchError::EmptyVehicleData(v));
            }
            if let Some(&bad) = list.iter().find(|&&i| i >= data.len()) {
                return Err(OrchError::IndexOutOfBounds {
                    vehicle: v,
                    index: bad,
                    len: data.len(),
                });
            }
        }
        if let Some(t) = test {
            if t.is_empty() {
                return Err(OrchError::EmptyTestSet);
            }
        }
        match scheme {
            SchemeKind::Sl { cut } | SchemeKind::Sfl { cut } => {
                CutIndex::for_model(cut.value(), spec)?;
            }
            SchemeKind::Asfl { .. } => {
                // the strategy can assign cut 8
                CutIndex::for_model(8, spec)?;
            }
            _ => {}
        }
        let global = crate::model::build_model(spec, seed);
        Ok(Self {
            spec,
            data,
            partition,
            test,
            fleet,
            scheme,
            hp,
            aggregation,
            seed,
            executor,
            state: RoundState { round: 0, global },
            pooled: Vec::new(),
        })
    }

    pub fn state(&self) -> &RoundState {
        &self.state
    }

    pub fn global(&self) -> &ParameterSet {
        &self.state.global
    }

    pub fn round(&self) -> u64 {
        self.state.round
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    fn downlink(&self, rate: f64) -> f64 {
        rate.min(self.fleet.rsu.broadcast_rate)
    }

    fn round_rates(&self) -> Vec<f64> {
        self.fleet
            .vehicles
            .iter()
            .map(|p| sample_rate(p, self.state.round, self.seed).rate)
            .collect()
    }

    /// Runs one round of the configured scheme and advances the session.
    pub fn run_round(&mut self) -> Result<RoundRecord, OrchError> {
        let mut record = match self.scheme {
            SchemeKind::Cl => self.round_cl()?,
            SchemeKind::Fl => self.round_fl()?,
            SchemeKind::Sl { cut } => self.round_sl(cut.value())?,
            SchemeKind::Sfl { cut } => {
                let assignment = CutAssignment {
                    cuts: alloc::vec![cut; self.fleet.vehicles.len()],
                };
                self.round_split_parallel(assignment, "sfl")?
            }
            SchemeKind::Asfl { thresholds } => {
                // reselect every vehicle's cut from this round's sampled rate
                let rates = self.round_rates();
                let mut cuts = Vec::with_capacity(rates.len());
                for &r in &rates {
                    cuts.push(select_cut(r, &thresholds)?);
                }
                self.round_split_parallel(CutAssignment { cuts }, "asfl")?
            }
        };
        if let Some(test) = self.test {
            let (loss, acc) = evaluate(self.spec, &self.state.global, test)?;
            record.test_loss = Some(loss);
            record.test_accuracy = Some(acc);
        }
        self.state.round += 1;
        Ok(record)
    }

    fn round_fl(&mut self) -> Result<RoundRecord, OrchError> {
        let l = self.spec.layer_count();
        let pb_full = param_bytes(self.spec, 0, l)?;
        let rates = self.round_rates();
        let (spec, data, partition, hp, seed, round) = (
            self.spec,
            self.data,
            self.partition,
            self.hp,
            self.seed,
            self.state.round,
        );
        let global = &self.state.global;
        let tasks: Vec<VehicleTask<'_>> = self
            .fleet
            .vehicles
            .iter()
            .enumerate()
            .map(|(vi, prof)| {
                let capacity = prof.compute_capacity;
                let stream = prof.id as u64;
                let indices = partition.indices(vi);
                let task: VehicleTask<'_> = alloc::boxed::Box::new(move || {
                    let mut params = global.clone();
                    let mut loss_sum = 0.0;
                    let mut samples = 0usize;
                    let mut train_flops = 0u64;
                    for epoch in 0..hp.local_epochs {
                        for idx in
                            epoch_batches(indices, hp.batch_size, seed, stream, round, epoch as u64)
                        {
                            let batch = data.gather(&idx);
                            let loss = local_step(spec, &mut params, &batch, hp.lr);
                            loss_sum += loss * batch.len() as f64;
                            samples += batch.len();
                            train_flops +=
                                3 * flops(spec, 0, l, batch.len()).expect("validated range");
                        }
                    }
                    VehicleOutcome {
                        vehicle: vi,
                        model: params.into_values(),
                        steps: Vec::new(),
                        bytes: ByteBreakdown::default(),
                        vehicle_compute_s: comp_time(train_flops, capacity)
                            .expect("validated profile"),
                        rsu_compute_s: 0.0,
                        comm_s: 0.0,
                        loss_sum,
                        loss_samples: samples,
                    }
                });
                task
            })
            .collect();
        let outcomes = self.executor.execute(tasks);

        let mut vehicles = Vec::with_capacity(outcomes.len());
        let mut survivors: Vec<usize> = Vec::new();
        let mut wall: f64 = 0.0;
        for (vi, outcome) in outcomes.iter().enumerate() {
            let prof = &self.fleet.vehicles[vi];
            let t_down = comm_time(pb_full, self.downlink(rates[vi]))?;
            let t_up = comm_time(pb_full, rates[vi])?;
            let elapsed = t_down + outcome.vehicle_compute_s + t_up;
            let survived = check_dwell(prof, elapsed);
            let mut bytes = ByteBreakdown {
                model_down: pb_full,
                ..ByteBreakdown::default()
            };
            let mut comm_s = t_down;
            if survived {
                bytes.model_up = pb_full;
                comm_s += t_up;
                survivors.push(vi);
                wall = wall.max(elapsed);
            } else {
                wall = wall.max(elapsed.min(prof.dwell_time.unwrap_or(elapsed)));
            }
            vehicles.push(VehicleRoundStats {
                id: prof.id,
                cut: None,
                rate: rates[vi],
                bytes,
                compute_s: outcome.vehicle_compute_s,
                comm_s,
                samples: outcome.loss_samples / self.hp.local_epochs.max(1),
                dropped: !survived,
            });
        }
        let agg_s = self.aggregate_survivors(&outcomes, &survivors)?;
        wall += agg_s;
        Ok(self.assemble_record("fl", vehicles, &outcomes, survivors.len(), agg_s, wall))
    }

    /// SFL and ASFL rounds: parallel vehicle phases, sequential server phase,
    /// per-vehicle cuts.
    fn round_split_parallel(
        &mut self,
        assignment: CutAssignment,
        scheme: &'static str,
    ) -> Result<RoundRecord, OrchError> {
        let cuts: Vec<usize> = assignment.cuts.iter().map(CutIndex::value).collect();
        let l = self.spec.layer_count();
        let rates = self.round_rates();
        let rsu_capacity = self.fleet.rsu.compute_capacity;
        let (spec, data, partition, hp, seed, round) = (
            self.spec,
            self.data,
            self.partition,
            self.hp,
            self.seed,
            self.state.round,
        );
        let global = &self.state.global;
        let tasks: Vec<VehicleTask<'_>> = self
            .fleet
            .vehicles
            .iter()
            .enumerate()
            .map(|(vi, prof)| {
                let capacity = prof.compute_capacity;
                let stream = prof.id as u64;
                let indices = partition.indices(vi);
                let cut = cuts[vi];
                let uplink = rates[vi];
                let downlink = self.downlink(rates[vi]);
                let task: VehicleTask<'_> = alloc::boxed::Box::new(move || {
                    let mut params = global.clone();
                    let mut steps = Vec::new();
                    let mut bytes = ByteBreakdown::default();
                    let mut loss_sum = 0.0;
                    let mut samples = 0usize;
                    let mut vehicle_s = 0.0;
                    let mut rsu_s = 0.0;
                    let mut comm_s = 0.0;
                    for epoch in 0..hp.local_epochs {
                        for idx in
                            epoch_batches(indices, hp.batch_size, seed, stream, round, epoch as u64)
                        {
                            let batch = data.gather(&idx);
                            let bs = batch.len();
                            let loss = split_step(spec, &mut params, cut, vi, &batch, hp.lr);
                            loss_sum += loss * bs as f64;
                            samples += bs;

                            let f_v = flops(spec, 0, cut, bs).expect("validated range");
                            let f_s = flops(spec, cut, l, bs).expect("validated range");
                            let t_fwd = comp_time(f_v, capacity).expect("validated profile");
                            let t_bwd = comp_time(2 * f_v, capacity).expect("validated profile");
                            let t_rsu = comp_time(3 * f_s, rsu_capacity).expect("validated profile");
                            let (up_b, down_b) = if cut == l {
                                (0, 0)
                            } else {
                                let payload =
                                    smashed_bytes(spec, CutIndex::new(cut), bs).expect("valid cut");
                                (payload + bs as u64 * BYTES_PER_LABEL, payload)
                            };
                            let t_up = comm_time(up_b, uplink).expect("validated profile");
                            let t_down = comm_time(down_b, downlink).expect("validated profile");
                            bytes.smashed_up += up_b;
                            bytes.gradient_down += down_b;
                            vehicle_s += t_fwd + t_bwd;
                            rsu_s += t_rsu;
                            comm_s += t_up + t_down;
                            steps.push(StepTimes {
                                up_phase: t_fwd + t_up,
                                rsu_phase: t_rsu,
                                down_phase: t_down + t_bwd,
                            });
                        }
                    }
                    VehicleOutcome {
                        vehicle: vi,
                        model: params.into_values(),
                        steps,
                        bytes,
                        vehicle_compute_s: vehicle_s,
                        rsu_compute_s: rsu_s,
                        comm_s,
                        loss_sum,
                        loss_samples: samples,
                    }
                });
                task
            })
            .collect();
        let outcomes = self.executor.execute(tasks);

        // model distribution and collection times
        let mut t_down = Vec::with_capacity(outcomes.len());
        let mut t_up = Vec::with_capacity(outcomes.len());
        for vi in 0..outcomes.len() {
            let pb = param_bytes(self.spec, 0, cuts[vi])?;
            t_down.push(comm_time(pb, self.downlink(rates[vi]))?);
            t_up.push(comm_time(pb, rates[vi])?);
        }
        let t_down_max = t_down.iter().copied().fold(0.0f64, f64::max);

        // lockstep rows: parallel vehicle phases (max), sequential server
        // phase (sum)
        let max_steps = outcomes.iter().map(|o| o.steps.len()).max().unwrap_or(0);
        let mut rows_total = 0.0;
        for r in 0..max_steps {
            let mut up = 0.0f64;
            let mut rsu = 0.0f64;
            let mut down = 0.0f64;
            for o in &outcomes {
                if let Some(st) = o.steps.get(r) {
                    up = up.max(st.up_phase);
                    rsu += st.rsu_phase;
                    down = down.max(st.down_phase);
                }
            }
            rows_total += up + rsu + down;
        }

        let mut vehicles = Vec::with_capacity(outcomes.len());
        let mut survivors: Vec<usize> = Vec::new();
        let mut t_up_max = 0.0f64;
        for (vi, outcome) in outcomes.iter().enumerate() {
            let prof = &self.fleet.vehicles[vi];
            let pb = param_bytes(self.spec, 0, cuts[vi])?;
            let elapsed = t_down_max + rows_total + t_up[vi];
            let survived = check_dwell(prof, elapsed);
            let mut bytes = outcome.bytes;
            bytes.model_down = pb;
            let mut comm_s = outcome.comm_s + t_down[vi];
            if survived {
                bytes.model_up = pb;
                comm_s += t_up[vi];
                t_up_max = t_up_max.max(t_up[vi]);
                survivors.push(vi);
            }
            vehicles.push(VehicleRoundStats {
                id: prof.id,
                cut: Some(cuts[vi]),
                rate: rates[vi],
                bytes,
                compute_s: outcome.vehicle_compute_s,
                comm_s,
                samples: outcome.loss_samples / self.hp.local_epochs.max(1),
                dropped: !survived,
            });
        }
        let agg_s = self.aggregate_survivors(&outcomes, &survivors)?;
        let wall = t_down_max + rows_total + t_up_max + agg_s;
        Ok(self.assemble_record(scheme, vehicles, &outcomes, survivors.len(), agg_s, wall))
    }

    fn round_sl(&mut self, cut: usize) -> Result<RoundRecord, OrchError> {
        let l = self.spec.layer_count();
        let rates = self.round_rates();
        let rsu_capacity = self.fleet.rsu.compute_capacity;
        let pb = param_bytes(self.spec, 0, cut)?;
        let mut current = self.state.global.clone();
        let mut wall = 0.0f64;
        let mut vehicles = Vec::with_capacity(self.fleet.vehicles.len());
        let mut participants = 0usize;
        let mut loss_sum_total = 0.0;
        let mut loss_samples_total = 0usize;
        let mut vehicle_s_total = 0.0;
        let mut rsu_s_total = 0.0;
        let mut comm_s_total = 0.0;
        let mut bytes_total = ByteBreakdown::default();

        for (vi, prof) in self.fleet.vehicles.iter().enumerate() {
            let uplink = rates[vi];
            let downlink = self.downlink(rates[vi]);
            let t_model = comm_time(pb, downlink)? + comm_time(pb, uplink)?;

            // The turn's duration is known analytically from the batch sizes,
            // so the dwell decision precedes any state change.
            let indices = self.partition.indices(vi);
            let mut batch_sizes = Vec::new();
            for epoch in 0..self.hp.local_epochs {
                let _ = epoch;
                let full = indices.len() / self.hp.batch_size;
                for _ in 0..full {
                    batch_sizes.push(self.hp.batch_size);
                }
                let rest = indices.len() % self.hp.batch_size;
                if rest > 0 {
                    batch_sizes.push(rest);
                }
            }
            let mut t_steps = 0.0;
            let mut bytes = ByteBreakdown::default();
            let mut vehicle_s = 0.0;
            let mut rsu_s = 0.0;
            let mut comm_steps = 0.0;
            for &bs in &batch_sizes {
                let f_v = flops(self.spec, 0, cut, bs)?;
                let f_s = flops(self.spec, cut, l, bs)?;
                let t_fwd = comp_time(f_v, prof.compute_capacity)?;
                let t_bwd = comp_time(2 * f_v, prof.compute_capacity)?;
                let t_rsu = comp_time(3 * f_s, rsu_capacity)?;
                let (up_b, down_b) = if cut == l {
                    (0, 0)
                } else {
                    let payload = smashed_bytes(self.spec, CutIndex::new(cut), bs)?;
                    (payload + bs as u64 * BYTES_PER_LABEL, payload)
                };
                let t_up = comm_time(up_b, uplink)?;
                let t_dn = comm_time(down_b, downlink)?;
                bytes.smashed_up += up_b;
                bytes.gradient_down += down_b;
                vehicle_s += t_fwd + t_bwd;
                rsu_s += t_rsu;
                comm_steps += t_up + t_dn;
                t_steps += t_fwd + t_up + t_rsu + t_dn + t_bwd;
            }
            let turn = t_model + t_steps;
            let survived = check_dwell(prof, wall + turn);
            if !survived {
                // the vehicle would leave mid-turn: it is skipped outright
                vehicles.push(VehicleRoundStats {
                    id: prof.id,
                    cut: Some(cut),
                    rate: rates[vi],
                    bytes: ByteBreakdown::default(),
                    compute_s: 0.0,
                    comm_s: 0.0,
                    samples: 0,
                    dropped: true,
                });
                continue;
            }
            let mut loss_sum = 0.0;
            let mut samples = 0usize;
            for epoch in 0..self.hp.local_epochs {
                for idx in epoch_batches(
                    indices,
                    self.hp.batch_size,
                    self.seed,
                    prof.id as u64,
                    self.state.round,
                    epoch as u64,
                ) {
                    let batch = self.data.gather(&idx);
                    let loss = split_step(self.spec, &mut current, cut, vi, &batch, self.hp.lr);
                    loss_sum += loss * batch.len() as f64;
                    samples += batch.len();
                }
            }
            bytes.model_down = pb;
            bytes.model_up = pb;
            wall += turn;
            participants += 1;
            loss_sum_total += loss_sum;
            loss_samples_total += samples;
            vehicle_s_total += vehicle_s;
            rsu_s_total += rsu_s;
            let comm_s = t_model + comm_steps;
            comm_s_total += comm_s;
            bytes_total.accumulate(&bytes);
            vehicles.push(VehicleRoundStats {
                id: prof.id,
                cut: Some(cut),
                rate: rates[vi],
                bytes,
                compute_s: vehicle_s,
                comm_s,
                samples: samples / self.hp.local_epochs.max(1),
                dropped: false,
            });
        }
        // the relayed model is the next global model; SL has no aggregation
        self.state.global = current;
        Ok(RoundRecord {
            round: self.state.round,
            scheme: "sl",
            vehicles,
            bytes: bytes_total,
            vehicle_compute_s: vehicle_s_total,
            rsu_compute_s: rsu_s_total,
            comm_s: comm_s_total,
            wall_clock_s: wall,
            train_loss: if loss_samples_total > 0 {
                loss_sum_total / loss_samples_total as f64
            } else {
                0.0
            },
            test_loss: None,
            test_accuracy: None,
            participants,
        })
    }

    fn round_cl(&mut self) -> Result<RoundRecord, OrchError> {
        let l = self.spec.layer_count();
        let rates = self.round_rates();
        let mut vehicles = Vec::with_capacity(self.fleet.vehicles.len());
        let mut bytes_total = ByteBreakdown::default();
        let mut comm_s_total = 0.0;
        let mut wall = 0.0f64;
        let mut participants = 0usize;

        if self.state.round == 0 {
            // one-time raw-data upload, vehicles in parallel
            let per_sample = self.data.per_sample_elements() as u64 * BYTES_PER_REAL;
            for (vi, prof) in self.fleet.vehicles.iter().enumerate() {
                let indices = self.partition.indices(vi);
                let data_b = indices.len() as u64 * (per_sample + BYTES_PER_LABEL);
                let t_up = comm_time(data_b, rates[vi])?;
                let survived = check_dwell(prof, t_up);
                let mut bytes = ByteBreakdown::default();
                let mut comm_s = 0.0;
                if survived {
                    bytes.smashed_up = data_b;
                    comm_s = t_up;
                    self.pooled.extend_from_slice(indices);
                    participants += 1;
                    wall = wall.max(t_up);
                }
                bytes_total.accumulate(&bytes);
                comm_s_total += comm_s;
                vehicles.push(VehicleRoundStats {
                    id: prof.id,
                    cut: None,
                    rate: rates[vi],
                    bytes,
                    compute_s: 0.0,
                    comm_s,
                    samples: if survived { indices.len() } else { 0 },
                    dropped: !survived,
                });
            }
        } else {
            participants = self.fleet.vehicles.len();
            for (vi, prof) in self.fleet.vehicles.iter().enumerate() {
                vehicles.push(VehicleRoundStats {
                    id: prof.id,
                    cut: None,
                    rate: rates[vi],
                    bytes: ByteBreakdown::default(),
                    compute_s: 0.0,
                    comm_s: 0.0,
                    samples: 0,
                    dropped: false,
                });
            }
        }

        // server-side epochs over the pooled data
        let mut loss_sum = 0.0;
        let mut samples = 0usize;
        let mut train_flops = 0u64;
        if !self.pooled.is_empty() {
            let mut params = self.state.global.clone();
            for epoch in 0..self.hp.local_epochs {
                for idx in epoch_batches(
                    &self.pooled,
                    self.hp.batch_size,
                    self.seed,
                    POOLED_STREAM_ID,
                    self.state.round,
                    epoch as u64,
                ) {
                    let batch = self.data.gather(&idx);
                    let loss = local_step(self.spec, &mut params, &batch, self.hp.lr);
                    loss_sum += loss * batch.len() as f64;
                    samples += batch.len();
                    train_flops += 3 * flops(self.spec, 0, l, batch.len())?;
                }
            }
            self.state.global = params;
        }
        let rsu_s = comp_time(train_flops, self.fleet.rsu.compute_capacity)?;
        wall += rsu_s;
        Ok(RoundRecord {
            round: self.state.round,
            scheme: "cl",
            vehicles,
            bytes: bytes_total,
            vehicle_compute_s: 0.0,
            rsu_compute_s: rsu_s,
            comm_s: comm_s_total,
            wall_clock_s: wall,
            train_loss: if samples > 0 {
                loss_sum / samples as f64
            } else {
                0.0
            },
            test_loss: None,
            test_accuracy: None,
            participants,
        })
    }

    /// Aggregates survivor whole models into the next global model and
    /// returns the simulated aggregation time. With no survivors the global
    /// model is unchanged.
    fn aggregate_survivors(
        &mut self,
        outcomes: &[VehicleOutcome],
        survivors: &[usize],
    ) -> Result<f64, OrchError> {
        if survivors.is_empty() {
            return Ok(0.0);
        }
        let models: Vec<ParameterSet> = survivors
            .iter()
            .map(|&vi| ParameterSet::from_values(self.spec, outcomes[vi].model.clone()))
            .collect::<Result<_, _>>()?;
        let sizes: Vec<f64> = survivors
            .iter()
            .map(|&vi| self.partition.indices(vi).len() as f64)
            .collect();
        let weights = match self.aggregation {
            AggregationMode::DataWeighted => Some(sizes.as_slice()),
            _ => None,
        };
        self.state.global = aggregate(&self.state.global, &models, self.aggregation, weights)?;
        let agg_flops = aggregation_flops(survivors.len(), self.spec.param_count());
        Ok(comp_time(agg_flops, self.fleet.rsu.compute_capacity)?)
    }

    fn assemble_record(
        &self,
        scheme: &'static str,
        vehicles: Vec<VehicleRoundStats>,
        outcomes: &[VehicleOutcome],
        participants: usize,
        agg_s: f64,
        wall: f64,
    ) -> RoundRecord {
        let mut bytes = ByteBreakdown::default();
        for v in &vehicles {
            bytes.accumulate(&v.bytes);
        }
        let loss_samples: usize = outcomes.iter().map(|o| o.loss_samples).sum();
        let loss_sum: f64 = outcomes.iter().map(|o| o.loss_sum).sum();
        RoundRecord {
            round: self.state.round,
            scheme,
            bytes,
            vehicle_compute_s: vehicles.iter().map(|v| v.compute_s).sum(),
            rsu_compute_s: outcomes.iter().map(|o| o.rsu_compute_s).sum::<f64>() + agg_s,
            comm_s: vehicles.iter().map(|v| v.comm_s).sum(),
            wall_clock_s: wall,
            train_loss: if loss_samples > 0 {
                loss_sum / loss_samples as f64
            } else {
                0.0
            },
            test_loss: None,
            test_accuracy: None,
            participants,
            vehicles,
        }
    }
}
