//! Per-round metrics records.

use alloc::vec::Vec;

/// Wire bytes moved during a round, by message category. For CL the one-time
/// raw-data upload is accounted under `smashed_up` (it is the only upstream
/// data payload that scheme ever sends).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ByteBreakdown {
    pub model_down: u64,
    pub smashed_up: u64,
    pub gradient_down: u64,
    pub model_up: u64,
}

impl ByteBreakdown {
    pub fn total(&self) -> u64 {
        self.model_down + self.smashed_up + self.gradient_down + self.model_up
    }

    pub fn accumulate(&mut self, other: &ByteBreakdown) {
        self.model_down += other.model_down;
        self.smashed_up += other.smashed_up;
        self.gradient_down += other.gradient_down;
        self.model_up += other.model_up;
    }
}

/// One vehicle's share of a round.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleRoundStats {
    pub id: usize,
    /// Cut used this round; `None` for schemes without a split (CL, FL).
    pub cut: Option<usize>,
    /// Sampled transmission rate (bit/s) this round.
    pub rate: f64,
    pub bytes: ByteBreakdown,
    /// Simulated seconds of vehicle-side computation.
    pub compute_s: f64,
    /// Simulated seconds this vehicle's own messages spent on the air.
    pub comm_s: f64,
    /// Samples this vehicle trained on (0 if skipped).
    pub samples: usize,
    /// True if the vehicle left the communication range before finishing;
    /// its update is discarded.
    pub dropped: bool,
}

/// Everything measured about one round.
///
/// Totals equal the sums over `vehicles`; `wall_clock_s` respects each
/// scheme's parallel (max) or sequential (sum) phase structure, while
/// `comm_s` and `vehicle_compute_s` are raw sums of per-vehicle activity.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: u64,
    pub scheme: &'static str,
    pub vehicles: Vec<VehicleRoundStats>,
    pub bytes: ByteBreakdown,
    pub vehicle_compute_s: f64,
    pub rsu_compute_s: f64,
    pub comm_s: f64,
    pub wall_clock_s: f64,
    pub train_loss: f64,
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
    /// Vehicles whose updates reached aggregation (or, for CL, whose data
    /// reached the server).
    pub participants: usize,
}

impl RoundRecord {
    /// Recomputes the totals from the per-vehicle stats; used to keep the
    /// parts-sum-to-totals invariant checkable.
    pub fn bytes_from_vehicles(&self) -> ByteBreakdown {
        let mut total = ByteBreakdown::default();
        for v in &self.vehicles {
            total.accumulate(&v.bytes);
        }
        total
    }
}
