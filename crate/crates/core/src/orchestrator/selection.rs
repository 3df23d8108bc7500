//! Rate-threshold cut-layer selection.

use alloc::vec::Vec;
use core::fmt;

use crate::split::CutIndex;

/// Threshold speeds (bit/s) delimiting the four rate bands, ordered
/// `0 < r1 <= r2 <= r3 <= r4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionThresholds {
    r1: f64,
    r2: f64,
    r3: f64,
    r4: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectionError {
    BadThresholds { r1: f64, r2: f64, r3: f64, r4: f64 },
    NonPositiveRate(f64),
}

impl fmt::Display for SelectionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionError::BadThresholds { r1, r2, r3, r4 } => write!(
                f,
                "thresholds must satisfy 0 < r1 <= r2 <= r3 <= r4, got ({r1}, {r2}, {r3}, {r4})"
            ),
            SelectionError::NonPositiveRate(r) => {
                write!(f, "transmission rate must be > 0, got {r}")
            }
        }
    }
}

impl core::error::Error for SelectionError {}

impl SelectionThresholds {
    pub fn new(r1: f64, r2: f64, r3: f64, r4: f64) -> Result<Self, SelectionError> {
        if !(r1 > 0.0 && r1 <= r2 && r2 <= r3 && r3 <= r4) {
            return Err(SelectionError::BadThresholds { r1, r2, r3, r4 });
        }
        Ok(Self { r1, r2, r3, r4 })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.r1, self.r2, self.r3, self.r4]
    }
}

/// Maps a sampled transmission rate to a cut via right-closed bands:
/// `(0, r1] -> 8`, `(r1, r2] -> 6`, `(r2, r3] -> 4`, `(r3, r4] -> 2`.
/// Rates above `r4` clamp to cut 2 (fastest band); the bands leave that case
/// open and the clamp keeps the strategy total.
pub fn select_cut(rate: f64, thr: &SelectionThresholds) -> Result<CutIndex, SelectionError> {
    if rate <= 0.0 {
        return Err(SelectionError::NonPositiveRate(rate));
    }
    let cut = if rate <= thr.r1 {
        8
    } else if rate <= thr.r2 {
        6
    } else if rate <= thr.r3 {
        4
    } else {
        2
    };
    Ok(CutIndex::new(cut))
}

/// Per-vehicle cuts chosen for one round, aligned with fleet order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutAssignment {
    pub cuts: Vec<CutIndex>,
}
