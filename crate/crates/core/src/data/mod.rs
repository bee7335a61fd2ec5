//! Datasets, CSV ingestion and synthetic generators.

mod csv_io;
mod generators;
mod scenarios;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, read_csv, write_csv, LabelColumn};
pub use generators::{sample_contaminated, ContaminationSpec, Generator};
pub use scenarios::{
    generate_scenario, ClusteredParams, LocalParams, RingParams, Scenario, ShrinkingParams,
    SCENARIO_NAMES,
};

/// `n` points in `ℝ^d`, stored row-major. Every coordinate is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    n: usize,
    d: usize,
}

impl Dataset {
    pub fn new(points: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDataset("dimension must be at least 1".into()));
        }
        if points.is_empty() {
            return Err(Error::InvalidDataset("dataset has no points".into()));
        }
        if points.len() % d != 0 {
            return Err(Error::InvalidDataset(format!(
                "buffer of length {} is not a multiple of d = {d}",
                points.len()
            )));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite coordinate at point {}, column {}",
                pos / d,
                pos % d
            )));
        }
        let n = points.len() / d;
        Ok(Self { points, n, d })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut points = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has {} coordinates, expected {d}",
                    row.len()
                )));
            }
            points.extend_from_slice(row);
        }
        Self::new(points, d)
    }

    /// One-dimensional dataset from scalar values.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.d)
    }

    /// Row-major coordinate buffer.
    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    /// Applies `f` to every point, producing a new dataset of dimension `d_out`.
    pub fn map_points(&self, d_out: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Result<Self> {
        let mut out = vec![0.0; self.n * d_out];
        for (src, dst) in self.rows().zip(out.chunks_exact_mut(d_out)) {
            f(src, dst);
        }
        Self::new(out, d_out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Normal,
    Anomaly,
}

impl Label {
    pub fn is_anomaly(self) -> bool {
        self == Label::Anomaly
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Label::Normal => 0,
            Label::Anomaly => 1,
        }
    }
}

/// A dataset with a normal/anomaly flag per point.
///
/// Unlabeled data carries all-normal labels and `has_labels() == false`;
/// evaluation refuses such data.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    dataset: Dataset,
    labels: Vec<Label>,
    has_labels: bool,
}

impl LabeledDataset {
    pub fn new(dataset: Dataset, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != dataset.n() {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {} points",
                labels.len(),
                dataset.n()
            )));
        }
        Ok(Self {
            dataset,
            labels,
            has_labels: true,
        })
    }

    pub fn unlabeled(dataset: Dataset) -> Self {
        let labels = vec![Label::Normal; dataset.n()];
        Self {
            dataset,
            labels,
            has_labels: false,
        }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn into_dataset(self) -> Dataset {
        self.dataset
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn has_labels(&self) -> bool {
        self.has_labels
    }

    /// Labels, or [`Error::LabelsRequired`] when the data was unlabeled.
    pub fn require_labels(&self) -> Result<&[Label]> {
        if self.has_labels {
            Ok(&self.labels)
        } else {
            Err(Error::LabelsRequired)
        }
    }

    pub fn n(&self) -> usize {
        self.dataset.n()
    }

    pub fn anomaly_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_anomaly()).count()
    }

    pub fn anomaly_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.labels[i].is_anomaly()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(Dataset::new(vec![0.0, f64::NAN], 1).is_err());
        assert!(Dataset::new(vec![0.0, f64::INFINITY], 2).is_err());
    }

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(Dataset::new(vec![], 1).is_err());
        assert!(Dataset::new(vec![1.0, 2.0, 3.0], 2).is_err());
        assert!(Dataset::new(vec![1.0], 0).is_err());
        assert!(Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn rows_are_stable() {
        let ds = Dataset::from_rows(&[[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]]).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.d(), 2);
        assert_eq!(ds.point(1), &[2.0, 3.0]);
        assert_eq!(ds.rows().count(), 3);
    }

    #[test]
    fn labels_must_match_length() {
        let ds = Dataset::from_values(&[0.0, 1.0]).unwrap();
        assert!(LabeledDataset::new(ds.clone(), vec![Label::Normal]).is_err());
        let unl = LabeledDataset::unlabeled(ds);
        assert!(!unl.has_labels());
        assert!(matches!(unl.require_labels(), Err(Error::LabelsRequired)));
        assert_eq!(unl.labels(), &[Label::Normal, Label::Normal]);
    }
}
