//! Execution hook for per-vehicle work.
//!
//! Vehicle-side tasks within a round are independent and may run on any
//! number of threads; results are collected in fleet order, so the outcome
//! is bit-identical regardless of the actual scheduling. The core crate only
//! ships the sequential executor; the CLI crate injects a thread-pool one.

use alloc::boxed::Box;
use alloc::vec::Vec;

use super::record::ByteBreakdown;

/// Simulated per-step phase times of one vehicle during split training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTimes {
    /// Vehicle-side forward plus smashed-data upload.
    pub up_phase: f64,
    /// Server-side forward/backward on this vehicle's replica.
    pub rsu_phase: f64,
    /// Gradient download plus vehicle-side backward and update.
    pub down_phase: f64,
}

/// Result of one vehicle's local work for a round.
#[derive(Debug, Clone)]
pub struct VehicleOutcome {
    /// Fleet index of the vehicle.
    pub vehicle: usize,
    /// Whole-model values after local training (vehicle side merged with its
    /// server-side replica).
    pub model: Vec<f64>,
    /// Lockstep phase times, one entry per local step.
    pub steps: Vec<StepTimes>,
    pub bytes: ByteBreakdown,
    pub vehicle_compute_s: f64,
    pub rsu_compute_s: f64,
    pub comm_s: f64,
    /// Sum of batch losses weighted by batch size, and the sample count.
    pub loss_sum: f64,
    pub loss_samples: usize,
}

pub type VehicleTask<'a> = Box<dyn FnOnce() -> VehicleOutcome + Send + 'a>;

/// Runs a set of independent vehicle tasks and returns their outcomes in
/// task order.
pub trait VehicleExecutor: Sync {
    fn execute<'a>(&self, tasks: Vec<VehicleTask<'a>>) -> Vec<VehicleOutcome>;
}

/// Runs every task on the calling thread.
#[derive(Debug, Default, Clone, Copy)]
pub struct SequentialExecutor;

impl VehicleExecutor for SequentialExecutor {
    fn execute<'a>(&self, tasks: Vec<VehicleTask<'a>>) -> Vec<VehicleOutcome> {
        tasks.into_iter().map(|task| task()).collect()
    }
}
