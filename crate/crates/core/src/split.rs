//! Cut-index partitioning of a model into a vehicle-side and a server-side
//! sub-model, and the smashed-data exchange contract.

use alloc::vec::Vec;
use core::fmt;

use crate::model::{ModelError, ModelSpec, ParameterSet, BYTES_PER_REAL};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitError {
    CutOutOfRange { cut: usize, layers: usize },
    LayoutMismatch {
        cut: usize,
        expected_vehicle: usize,
        expected_rsu: usize,
        got_vehicle: usize,
        got_rsu: usize,
    },
    Model(ModelError),
}

impl fmt::Display for SplitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitError::CutOutOfRange { cut, layers } => {
                write!(f, "cut {cut} out of range for a {layers}-layer model")
            }
            SplitError::LayoutMismatch {
                cut,
                expected_vehicle,
                expected_rsu,
                got_vehicle,
                got_rsu,
            } => write!(
                f,
                "slice lengths ({got_vehicle}, {got_rsu}) do not match cut {cut} layout ({expected_vehicle}, {expected_rsu})"
            ),
            SplitError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SplitError {}

impl From<ModelError> for SplitError {
    fn from(e: ModelError) -> Self {
        SplitError::Model(e)
    }
}

/// A split boundary index: `0..=layer_count`. Cut 0 leaves the vehicle side
/// empty (everything runs on the server); cut `layer_count` leaves the server
/// side empty (the scheme degenerates to FL).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CutIndex(usize);

impl CutIndex {
    pub fn new(value: usize) -> Self {
        Self(value)
    }

    /// Validates the cut against a concrete model.
    pub fn for_model(value: usize, spec: &ModelSpec) -> Result<Self, SplitError> {
        if value > spec.layer_count() {
            return Err(SplitError::CutOutOfRange {
                cut: value,
                layers: spec.layer_count(),
            });
        }
        Ok(Self(value))
    }

    pub fn value(&self) -> usize {
        self.0
    }
}

impl fmt::Display for CutIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Vehicle-side and server-side parameter slices induced by a cut.
/// The two slices partition the full parameter vector; merging is lossless.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitModel {
    pub cut: CutIndex,
    pub vehicle_side: Vec<f64>,
    pub rsu_side: Vec<f64>,
}

/// Splits the flat parameters at a cut boundary.
pub fn split(
    spec: &ModelSpec,
    params: &ParameterSet,
    cut: CutIndex,
) -> Result<SplitModel, SplitError> {
    let c = CutIndex::for_model(cut.value(), spec)?.value();
    let boundary = spec.param_range(0, c)?.end;
    let values = params.values();
    Ok(SplitModel {
        cut: CutIndex(c),
        vehicle_side: values[..boundary].to_vec(),
        rsu_side: values[boundary..].to_vec(),
    })
}

/// Exact inverse of [`split`]: reassembles the full parameter vector.
pub fn merge(spec: &ModelSpec, sm: &SplitModel) -> Result<ParameterSet, SplitError> {
    let c = CutIndex::for_model(sm.cut.value(), spec)?.value();
    let expected_vehicle = spec.param_range(0, c)?.len();
    let expected_rsu = spec.param_range(c, spec.layer_count())?.len();
    if sm.vehicle_side.len() != expected_vehicle || sm.rsu_side.len() != expected_rsu {
        return Err(SplitError::LayoutMismatch {
            cut: c,
            expected_vehicle,
            expected_rsu,
            got_vehicle: sm.vehicle_side.len(),
            got_rsu: sm.rsu_side.len(),
        });
    }
    let mut values = Vec::with_capacity(expected_vehicle + expected_rsu);
    values.extend_from_slice(&sm.vehicle_side);
    values.extend_from_slice(&sm.rsu_side);
    ParameterSet::from_values(spec, values).map_err(SplitError::Model)
}

/// Wire bytes of one smashed-data message (the boundary activations for a
/// batch). Cut 0 is defined as the full raw-input bytes, cut `layer_count`
/// as zero (no exchange). The downstream gradient message has the same size
/// by definition. Label bytes are accounted separately.
pub fn smashed_bytes(spec: &ModelSpec, cut: CutIndex, batch_size: usize) -> Result<u64, SplitError> {
    let c = CutIndex::for_model(cut.value(), spec)?.value();
    if c == spec.layer_count() {
        return Ok(0);
    }
    let elems = spec.boundary_elements(c)?;
    Ok(elems as u64 * batch_size as u64 * BYTES_PER_REAL)
}

/// Boundary activations for one batch, traveling vehicle -> server together
/// with the batch labels.
#[derive(Debug, Clone)]
pub struct SmashedBatch {
    pub activations: Tensor,
    pub labels: Vec<usize>,
    pub producer: usize,
    pub cut: CutIndex,
}

impl SmashedBatch {
    /// Wire bytes of the activation payload (labels excluded).
    pub fn activation_bytes(&self) -> u64 {
        self.activations.data().len() as u64 * BYTES_PER_REAL
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, resmini};

    #[test]
    fn boundary_cuts() {
        let spec = resmini();
        let params = build_model(&spec, 1);
        let at_zero = split(&spec, &params, CutIndex::new(0)).unwrap();
        assert!(at_zero.vehicle_side.is_empty());
        assert_eq!(at_zero.rsu_side.len(), spec.param_count());
        let at_l = split(&spec, &params, CutIndex::new(spec.layer_count())).unwrap();
        assert_eq!(at_l.vehicle_side.len(), spec.param_count());
        assert!(at_l.rsu_side.is_empty());
        assert!(split(&spec, &params, CutIndex::new(11)).is_err());
    }

    #[test]
    fn merge_rejects_mismatched_cuts() {
        let spec = resmini();
        let params = build_model(&spec, 2);
        let four = split(&spec, &params, CutIndex::new(4)).unwrap();
        let six = split(&spec, &params, CutIndex::new(6)).unwrap();
        let frankenstein = SplitModel {
            cut: four.cut,
            vehicle_side: six.vehicle_side,
            rsu_side: four.rsu_side,
        };
        assert!(matches!(
            merge(&spec, &frankenstein),
            Err(SplitError::LayoutMismatch { .. })
        ));
    }

    #[test]
    fn gradient_bytes_equal_smashed_bytes() {
        // equal by definition: both are boundary elements * batch * 4
        let spec = resmini();
        for cut in 1..spec.layer_count() {
            let up = smashed_bytes(&spec, CutIndex::new(cut), 16).unwrap();
            assert_eq!(
                up,
                spec.boundary_elements(cut).unwrap() as u64 * 16 * BYTES_PER_REAL
            );
        }
        assert_eq!(
            smashed_bytes(&spec, CutIndex::new(spec.layer_count()), 16).unwrap(),
            0
        );
    }
}
