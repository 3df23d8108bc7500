//! Dataset CSV format and partition export.
//!
//! Sample files carry one row per sample: `label,pix0,pix1,...` with pixel
//! values in `[0, 1]` and exactly `input_shape` product pixels per row.

use std::collections::BTreeMap;
use std::path::Path;

use splitsim_core::data::{Dataset, Partition};

use crate::error::CliError;

pub fn load_csv(
    path: &Path,
    input_shape: &[usize],
    num_classes: usize,
) -> Result<Dataset, CliError> {
    let per_sample: usize = input_shape.iter().product();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("dataset: cannot read {}: {e}", path.display())))?;
    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            CliError::Config(format!("dataset: {} row {row}: {e}", path.display()))
        })?;
        if record.len() != per_sample + 1 {
            return Err(CliError::Config(format!(
                "dataset: {} row {row}: {} fields, expected {}",
                path.display(),
                record.len(),
                per_sample + 1
            )));
        }
        let label: usize = record[0].trim().parse().map_err(|_| {
            CliError::Config(format!(
                "dataset: {} row {row}: bad label {:?}",
                path.display(),
                &record[0]
            ))
        })?;
        if label >= num_classes {
            return Err(CliError::Config(format!(
                "dataset: {} row {row}: label {label} out of range for {num_classes} classes",
                path.display()
            )));
        }
        labels.push(label);
        for field in record.iter().skip(1) {
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::Config(format!(
                    "dataset: {} row {row}: bad pixel {field:?}",
                    path.display()
                ))
            })?;
            inputs.push(v);
        }
    }
    Dataset::new(inputs, input_shape.to_vec(), labels, num_classes)
        .map_err(|e| CliError::Config(format!("dataset: {}: {e}", path.display())))
}

pub fn write_csv(ds: &Dataset, path: &Path) -> Result<(), CliError> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    for i in 0..ds.len() {
        let mut row = Vec::with_capacity(ds.per_sample_elements() + 1);
        row.push(ds.labels()[i].to_string());
        row.extend(ds.sample(i).iter().map(|v| format!("{v}")));
        writer
            .write_record(&row)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Exports a partition as JSON mapping vehicle id to its sample indices.
pub fn write_partition_json(
    partition: &Partition,
    vehicle_ids: &[usize],
    path: &Path,
) -> Result<(), CliError> {
    let map: BTreeMap<String, &[usize]> = vehicle_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.to_string(), partition.indices(i)))
        .collect();
    let text = serde_json::to_string_pretty(&map)
        .map_err(|e| CliError::Runtime(format!("cannot serialize partition: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use splitsim_core::data::synth_dataset;

    #[test]
    fn two_row_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("two.csv");
        std::fs::write(&path, "0,0.5,0.25\n1,0.75,1.0\n").unwrap();
        let ds = load_csv(&path, &[2], 10).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.labels(), &[0, 1]);
        assert_eq!(ds.sample(1), &[0.75, 1.0]);
    }

    #[test]
    fn out_of_range_label_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "10,0.5,0.25\n").unwrap();
        let err = load_csv(&path, &[2], 10).unwrap_err();
        assert!(err.to_string().contains("label 10"), "{err}");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ragged.csv");
        std::fs::write(&path, "0,0.5,0.25\n1,0.75\n").unwrap();
        assert!(load_csv(&path, &[2], 10).is_err());
    }

    #[test]
    fn unreadable_file_is_an_error() {
        let missing = Path::new("/nonexistent/nope.csv");
        assert!(load_csv(missing, &[2], 10).is_err());
    }

    #[test]
    fn write_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("round.csv");
        let ds = synth_dataset(4, 25, &[1, 3, 3], 9).unwrap();
        write_csv(&ds, &path).unwrap();
        let back = load_csv(&path, &[1, 3, 3], 4).unwrap();
        assert_eq!(back.len(), ds.len());
        assert_eq!(back.labels(), ds.labels());
        for i in 0..ds.len() {
            for (a, b) in ds.sample(i).iter().zip(back.sample(i)) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }
}
