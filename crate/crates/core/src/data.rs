//! Datasets, synthetic data generation, and IID / label-skewed partitioning
//! across vehicles.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rng::{stream_rng, STREAM_PARTITION, STREAM_SYNTH};
use crate::tensor::{Batch, Tensor, TensorShape};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataError {
    Empty,
    LabelOutOfRange { label: usize, num_classes: usize },
    CountMismatch { samples: usize, labels: usize },
    TooFewSamples { samples: usize, vehicles: usize },
    BadLabelBudget { labels_per_vehicle: usize, num_classes: usize },
    Infeasible { vehicle: usize },
    BadShape,
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::Empty => write!(f, "dataset is empty"),
            DataError::LabelOutOfRange { label, num_classes } => {
                write!(f, "label {label} out of range for {num_classes} classes")
            }
            DataError::CountMismatch { samples, labels } => {
                write!(f, "{samples} samples but {labels} labels")
            }
            DataError::TooFewSamples { samples, vehicles } => {
                write!(f, "cannot partition {samples} samples across {vehicles} vehicles")
            }
            DataError::BadLabelBudget {
                labels_per_vehicle,
                num_classes,
            } => write!(
                f,
                "labels_per_vehicle {labels_per_vehicle} must be in 1..={num_classes}"
            ),
            DataError::Infeasible { vehicle } => write!(
                f,
                "not enough samples in the chosen labels to give vehicle {vehicle} any data"
            ),
            DataError::BadShape => write!(f, "sample shape extents must be >= 1"),
        }
    }
}

impl core::error::Error for DataError {}

/// A labeled dataset. Inputs are stored per sample in row-major order.
#[derive(Debug, Clone)]
pub struct Dataset {
    inputs: Vec<f64>,
    sample_shape: Vec<usize>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(
        inputs: Vec<f64>,
        sample_shape: Vec<usize>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self, DataError> {
        if sample_shape.is_empty() || sample_shape.contains(&0) || num_classes == 0 {
            return Err(DataError::BadShape);
        }
        let per_sample: usize = sample_shape.iter().product();
        if inputs.len() != labels.len() * per_sample {
            return Err(DataError::CountMismatch {
                samples: inputs.len() / per_sample.max(1),
                labels: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(DataError::LabelOutOfRange {
                label: bad,
                num_classes,
            });
        }
        Ok(Self {
            inputs,
            sample_shape,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample_shape(&self) -> &[usize] {
        &self.sample_shape
    }

    pub fn per_sample_elements(&self) -> usize {
        self.sample_shape.iter().product()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sample(&self, index: usize) -> &[f64] {
        let n = self.per_sample_elements();
        &self.inputs[index * n..(index + 1) * n]
    }

    /// Gathers the given sample indices into a batch.
    pub fn gather(&self, indices: &[usize]) -> Batch {
        let n = self.per_sample_elements();
        let mut data = Vec::with_capacity(indices.len() * n);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.sample(i));
            labels.push(self.labels[i]);
        }
        let shape = TensorShape::new(
            core::iter::once(indices.len())
                .chain(self.sample_shape.iter().copied())
                .collect(),
        )
        .expect("valid shape");
        let inputs = Tensor::new(shape, data).expect("constructed length");
        Batch::new(inputs, labels, self.num_classes).expect("labels validated at construction")
    }

    /// Splits off the first `head` samples of every class into one dataset
    /// and the rest into another. Used to derive train/test pairs from a
    /// single synthesis call so both draw from identical class templates.
    pub fn split_per_class(&self, head: usize) -> (Dataset, Dataset) {
        let mut taken = vec![0usize; self.num_classes];
        let mut head_idx = Vec::new();
        let mut tail_idx = Vec::new();
        for (i, &label) in self.labels.iter().enumerate() {
            if taken[label] < head {
                taken[label] += 1;
                head_idx.push(i);
            } else {
                tail_idx.push(i);
            }
        }
        (self.subset(&head_idx), self.subset(&tail_idx))
    }

    fn subset(&self, indices: &[usize]) -> Dataset {
        let n = self.per_sample_elements();
        let mut inputs = Vec::with_capacity(indices.len() * n);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            inputs.extend_from_slice(self.sample(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            inputs,
            sample_shape: self.sample_shape.clone(),
            labels,
            num_classes: self.num_classes,
        }
    }
}

/// Disjoint per-vehicle index lists into a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    per_vehicle: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(per_vehicle: Vec<Vec<usize>>) -> Self {
        Self { per_vehicle }
    }

    pub fn vehicles(&self) -> usize {
        self.per_vehicle.len()
    }

    pub fn indices(&self, vehicle: usize) -> &[usize] {
        &self.per_vehicle[vehicle]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.per_vehicle.iter().map(Vec::len).collect()
    }

    pub fn lists(&self) -> &[Vec<usize>] {
        &self.per_vehicle
    }
}

/// Synthesizes a dataset where class `k` is a fixed random template plus
/// Gaussian noise (sigma 0.3), clipped to `[0, 1]`. Samples are emitted
/// class-major: `per_class` samples of class 0, then class 1, and so on.
pub fn synth_dataset(
    num_classes: usize,
    per_class: usize,
    sample_shape: &[usize],
    seed: u64,
) -> Result<Dataset, DataError> {
    if num_classes == 0 || per_class == 0 || sample_shape.is_empty() || sample_shape.contains(&0) {
        return Err(DataError::BadShape);
    }
    const SIGMA: f64 = 0.3;
    let n = sample_shape.iter().product::<usize>();
    let mut inputs = Vec::with_capacity(num_classes * per_class * n);
    let mut labels = Vec::with_capacity(num_classes * per_class);
    for class in 0..num_classes {
        let mut rng = stream_rng(seed, &[STREAM_SYNTH, class as u64]);
        let template: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        for _ in 0..per_class {
            for &t in &template {
                let x = t + SIGMA * standard_normal(&mut rng);
                inputs.push(x.clamp(0.0, 1.0));
            }
            labels.push(class);
        }
    }
    Dataset::new(inputs, sample_shape.to_vec(), labels, num_classes)
}

/// One standard-normal draw via the Box-Muller transform.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

/// Shuffles the dataset and deals near-equal contiguous chunks to vehicles
/// (sizes differ by at most one).
pub fn partition_iid(ds: &Dataset, n_vehicles: usize, seed: u64) -> Result<Partition, DataError> {
    if ds.is_empty() {
        return Err(DataError::Empty);
    }
    if n_vehicles == 0 || ds.len() < n_vehicles {
        return Err(DataError::TooFewSamples {
            samples: ds.len(),
            vehicles: n_vehicles,
        });
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut rng = stream_rng(seed, &[STREAM_PARTITION]);
    order.shuffle(&mut rng);
    let base = ds.len() / n_vehicles;
    let extra = ds.len() % n_vehicles;
    let mut lists = Vec::with_capacity(n_vehicles);
    let mut start = 0;
    for v in 0..n_vehicles {
        let size = base + usize::from(v < extra);
        lists.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(Partition::new(lists))
}

/// Label-skewed partition: every vehicle draws from a fixed subset of
/// `labels_per_vehicle` labels (chosen uniformly without replacement, with
/// every label covered by at least one vehicle when feasible), and vehicle
/// sample counts follow a rank power law `(rank)^(-power_alpha)` normalized
/// to the dataset size. Per-vehicle draws that exhaust their label pools
/// simply stop early; a vehicle left with no samples at all is an error.
pub fn partition_noniid(
    ds: &Dataset,
    n_vehicles: usize,
    labels_per_vehicle: usize,
    power_alpha: f64,
    seed: u64,
) -> Result<Partition, DataError> {
    if ds.is_empty() {
        return Err(DataError::Empty);
    }
    if n_vehicles == 0 || ds.len() < n_vehicles {
        return Err(DataError::TooFewSamples {
            samples: ds.len(),
            vehicles: n_vehicles,
        });
    }
    let classes = ds.num_classes();
    if labels_per_vehicle == 0 || labels_per_vehicle > classes {
        return Err(DataError::BadLabelBudget {
            labels_per_vehicle,
            num_classes: classes,
        });
    }
    let mut rng = stream_rng(seed, &[STREAM_PARTITION, 1]);

    // Label supports: deal a shuffled label list round-robin so every label
    // is covered whenever ceil(classes / n_vehicles) <= labels_per_vehicle,
    // then fill each vehicle up to the budget uniformly at random.
    let mut dealt: Vec<usize> = (0..classes).collect();
    dealt.shuffle(&mut rng);
    let mut supports: Vec<Vec<usize>> = vec![Vec::new(); n_vehicles];
    for (i, &label) in dealt.iter().enumerate() {
        let v = i % n_vehicles;
        if supports[v].len() < labels_per_vehicle {
            supports[v].push(label);
        }
    }
    for support in supports.iter_mut() {
        let mut remaining: Vec<usize> =
            (0..classes).filter(|l| !support.contains(l)).collect();
        remaining.shuffle(&mut rng);
        while support.len() < labels_per_vehicle {
            support.push(remaining.pop().expect("budget <= classes"));
        }
        support.sort_unstable();
    }

    // Shuffled per-label index pools.
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &label) in ds.labels().iter().enumerate() {
        pools[label].push(i);
    }
    for pool in pools.iter_mut() {
        pool.shuffle(&mut rng);
    }

    // Rank power-law targets over the whole dataset.
    let weights: Vec<f64> = (0..n_vehicles)
        .map(|r| libm::pow((r + 1) as f64, -power_alpha))
        .collect();
    let weight_sum: f64 = weights.iter().sum();
    let mut targets: Vec<usize> = weights
        .iter()
        .map(|w| ((w / weight_sum) * ds.len() as f64) as usize)
        .collect();
    let mut assigned: usize = targets.iter().sum();
    // The floor rounding drops fewer than n_vehicles samples; hand the
    // remainder to the highest-weight vehicles.
    for target in targets.iter_mut() {
        if assigned >= ds.len() {
            break;
        }
        *target += 1;
        assigned += 1;
    }

    // Coverage pass first: one sample of every supported label per vehicle,
    // so the label-support invariant holds exactly. Then fill to the rank
    // targets from each vehicle's fullest remaining pool; vehicles that hit
    // dry pools simply stop short of their target.
    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n_vehicles];
    for (vehicle, support) in supports.iter().enumerate() {
        for &label in support {
            match pools[label].pop() {
                Some(i) => lists[vehicle].push(i),
                None => return Err(DataError::Infeasible { vehicle }),
            }
        }
    }
    for (vehicle, support) in supports.iter().enumerate() {
        while lists[vehicle].len() < targets[vehicle] {
            let label = support
                .iter()
                .copied()
                .filter(|&l| !pools[l].is_empty())
                .max_by_key(|&l| (pools[l].len(), classes - l));
            match label {
                Some(l) => lists[vehicle].push(pools[l].pop().expect("nonempty pool")),
                None => break,
            }
        }
        lists[vehicle].sort_unstable();
    }
    Ok(Partition::new(lists))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    fn tiny(num_classes: usize, per_class: usize) -> Dataset {
        synth_dataset(num_classes, per_class, &[4], 9).unwrap()
    }

    #[test]
    fn synth_counts_and_determinism() {
        let a = synth_dataset(10, 100, &[1, 4, 4], 3).unwrap();
        assert_eq!(a.len(), 1000);
        for class in 0..10 {
            assert_eq!(a.labels().iter().filter(|&&l| l == class).count(), 100);
        }
        let b = synth_dataset(10, 100, &[1, 4, 4], 3).unwrap();
        assert_eq!(a.inputs, b.inputs);
        assert!(a.inputs.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn iid_partition_sizes_and_coverage() {
        let ds = tiny(4, 25);
        let p = partition_iid(&ds, 4, 11).unwrap();
        assert_eq!(p.sizes(), vec![25, 25, 25, 25]);
        let all: BTreeSet<usize> = p.lists().iter().flatten().copied().collect();
        assert_eq!(all.len(), 100);
        assert_eq!(*all.iter().next_back().unwrap(), 99);
    }

    #[test]
    fn iid_rejects_empty() {
        let ds = tiny(2, 2);
        assert!(partition_iid(&ds, 5, 0).is_err());
        let empty = Dataset::new(vec![], vec![4], vec![], 2).unwrap();
        assert!(matches!(partition_iid(&empty, 1, 0), Err(DataError::Empty)));
    }

    #[test]
    fn noniid_supports_are_exact() {
        let ds = tiny(10, 30);
        let p = partition_noniid(&ds, 4, 6, 1.0, 5).unwrap();
        for v in 0..4 {
            let support: BTreeSet<usize> =
                p.indices(v).iter().map(|&i| ds.labels()[i]).collect();
            assert_eq!(support.len(), 6, "vehicle {v} support {support:?}");
        }
        // disjoint
        let mut seen = BTreeSet::new();
        for list in p.lists() {
            for &i in list {
                assert!(seen.insert(i));
            }
        }
    }

    #[test]
    fn noniid_alpha_zero_is_balanced() {
        let ds = tiny(10, 40);
        let p = partition_noniid(&ds, 4, 10, 0.0, 7).unwrap();
        let sizes = p.sizes();
        let max = *sizes.iter().max().unwrap();
        let min = *sizes.iter().min().unwrap();
        assert!(max - min <= 1, "sizes {sizes:?}");
    }

    #[test]
    fn noniid_rank_power_law() {
        // with all labels allowed the pools never conflict, so sizes follow
        // the 1, 1/2, 1/3, 1/4 weights within rounding
        let ds = tiny(10, 100);
        let p = partition_noniid(&ds, 4, 10, 1.0, 13).unwrap();
        let sizes = p.sizes();
        let weight_sum = 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
        for (rank, &size) in sizes.iter().enumerate() {
            let expected = (1.0 / (rank + 1) as f64) / weight_sum * 1000.0;
            assert!(
                (size as f64 - expected).abs() <= 2.0,
                "rank {rank} size {size} expected about {expected}"
            );
        }
        assert_eq!(sizes.iter().sum::<usize>(), 1000);
    }

    #[test]
    fn noniid_infeasible_when_labels_exhaust() {
        // 1 sample per class, 2 classes, 3 vehicles: someone gets nothing
        let ds = tiny(2, 1);
        assert!(matches!(
            partition_noniid(&ds, 2, 1, 8.0, 3),
            Ok(_) | Err(DataError::Infeasible { .. })
        ));
        let err = partition_noniid(&ds, 3, 1, 0.0, 3);
        assert!(err.is_err());
    }

    #[test]
    fn gather_preserves_order() {
        let ds = tiny(3, 5);
        let batch = ds.gather(&[2, 7, 0]);
        assert_eq!(batch.len(), 3);
        assert_eq!(batch.labels()[0], ds.labels()[2]);
        assert_eq!(batch.inputs().data()[..4], *ds.sample(2));
    }
}
