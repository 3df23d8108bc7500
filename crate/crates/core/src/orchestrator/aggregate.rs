//! Global model aggregation.

use alloc::vec;
use core::fmt;

use crate::model::ParameterSet;

/// How per-vehicle whole models combine into the next global model.
///
/// The update principle as printed reads
/// `w_{t+1} = w_t - (1/N) * sum_n (w_n - w_t)`, whose sign moves the global
/// model *away* from the clients' mean; interpreted with a plus it is the
/// plain uniform mean. Both readings are implemented and the mean is the
/// default; `PaperLiteral` reproduces the printed sign verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationMode {
    /// Uniform elementwise mean of the client models (default).
    FedAvgMean,
    /// The printed formula, literal sign: `w_t - (1/N) sum (w_n - w_t)`.
    PaperLiteral,
    /// Mean weighted by client dataset sizes.
    DataWeighted,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AggregateError {
    EmptyModelList,
    LayoutMismatch { expected: usize, got: usize },
    WeightCount { models: usize, weights: usize },
    ZeroWeightSum,
}

impl fmt::Display for AggregateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregateError::EmptyModelList => write!(f, "cannot aggregate an empty model list"),
            AggregateError::LayoutMismatch { expected, got } => {
                write!(f, "model layout mismatch: expected {expected} values, got {got}")
            }
            AggregateError::WeightCount { models, weights } => {
                write!(f, "{weights} weights for {models} models")
            }
            AggregateError::ZeroWeightSum => write!(f, "aggregation weights sum to zero"),
        }
    }
}

impl core::error::Error for AggregateError {}

/// Combines client whole models into the next global model.
/// `weights` is only consulted in [`AggregationMode::DataWeighted`].
pub fn aggregate(
    base: &ParameterSet,
    models: &[ParameterSet],
    mode: AggregationMode,
    weights: Option<&[f64]>,
) -> Result<ParameterSet, AggregateError> {
    if models.is_empty() {
        return Err(AggregateError::EmptyModelList);
    }
    let n = base.len();
    for m in models {
        if m.len() != n {
            return Err(AggregateError::LayoutMismatch {
                expected: n,
                got: m.len(),
            });
        }
    }
    let out = match mode {
        AggregationMode::FedAvgMean => {
            let inv = 1.0 / models.len() as f64;
            let mut acc = vec![0.0f64; n];
            for m in models {
                for (a, v) in acc.iter_mut().zip(m.values()) {
                    *a += v;
                }
            }
            for a in acc.iter_mut() {
                *a *= inv;
            }
            acc
        }
        AggregationMode::PaperLiteral => {
            let inv = 1.0 / models.len() as f64;
            let mut acc = base.values().to_vec();
            for m in models {
                for ((a, v), b) in acc.iter_mut().zip(m.values()).zip(base.values()) {
                    *a -= inv * (v - b);
                }
            }
            acc
        }
        AggregationMode::DataWeighted => {
            let w = weights.ok_or(AggregateError::WeightCount {
                models: models.len(),
                weights: 0,
            })?;
            if w.len() != models.len() {
                return Err(AggregateError::WeightCount {
                    models: models.len(),
                    weights: w.len(),
                });
            }
            let total: f64 = w.iter().sum();
            if total <= 0.0 {
                return Err(AggregateError::ZeroWeightSum);
            }
            let mut acc = vec![0.0f64; n];
            for (m, &wn) in models.iter().zip(w) {
                let scale = wn / total;
                for (a, v) in acc.iter_mut().zip(m.values()) {
                    *a += scale * v;
                }
            }
            acc
        }
    };
    Ok(ParameterSet::from_raw(out))
}
