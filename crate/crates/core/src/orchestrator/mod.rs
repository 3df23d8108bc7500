//! Round orchestration: the five training schemes, the aggregation rule,
//! the rate-threshold cut selection strategy, and per-round metrics.

mod aggregate;
mod executor;
mod record;
mod selection;
mod session;

pub use aggregate::{aggregate, AggregateError, AggregationMode};
pub use executor::{SequentialExecutor, StepTimes, VehicleExecutor, VehicleOutcome, VehicleTask};
pub use record::{ByteBreakdown, RoundRecord, VehicleRoundStats};
pub use selection::{select_cut, CutAssignment, SelectionError, SelectionThresholds};
pub use session::{
    epoch_batches, evaluate, Fleet, HyperParams, OrchError, RoundState, SchemeKind, Session,
    SessionConfig,
};
