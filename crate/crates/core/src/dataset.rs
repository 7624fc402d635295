use crate::error::{Error, Result};
use crate::feature_map::FeatureMapConfig;
use crate::Matrix;

/// Feature rows with `±1` labels and the grouping columns used by
/// cross-validation: patient (group) id, seizure id (0 for background) and
/// whether the window overlapped its predecessor.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Matrix,
    labels: Vec<f64>,
    group_ids: Vec<u32>,
    seizure_ids: Vec<u32>,
    overlap_flags: Vec<bool>,
}

impl LabeledDataset {
    pub fn new(
        features: Matrix,
        labels: Vec<f64>,
        group_ids: Vec<u32>,
        seizure_ids: Vec<u32>,
        overlap_flags: Vec<bool>,
    ) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n
            || group_ids.len() != n
            || seizure_ids.len() != n
            || overlap_flags.len() != n
        {
            return Err(Error::Dataset(format!(
                "{n} feature rows but {} labels, {} group ids, {} seizure ids, {} overlap flags",
                labels.len(),
                group_ids.len(),
                seizure_ids.len(),
                overlap_flags.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::Dataset(format!("label {bad} is not -1 or +1")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dataset("features contain non-finite values".into()));
        }
        Ok(Self {
            features,
            labels,
            group_ids,
            seizure_ids,
            overlap_flags,
        })
    }

    /// Dataset without grouping information (one group, no seizures, no overlap).
    pub fn from_features(features: Matrix, labels: Vec<f64>) -> Result<Self> {
        let n = features.nrows();
        Self::new(features, labels, vec![0; n], vec![0; n], vec![false; n])
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn group_ids(&self) -> &[u32] {
        &self.group_ids
    }

    pub fn seizure_ids(&self) -> &[u32] {
        &self.seizure_ids
    }

    pub fn overlap_flags(&self) -> &[bool] {
        &self.overlap_flags
    }

    /// `true` for rows labelled `+1`.
    pub fn positives(&self) -> Vec<bool> {
        self.labels.iter().map(|&y| y > 0.0).collect()
    }

    pub fn row(&self, n: usize) -> Vec<f64> {
        self.features.row(n).iter().copied().collect()
    }

    pub fn column(&self, d: usize) -> Vec<f64> {
        self.features.column(d).iter().copied().collect()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(indices.iter()),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            group_ids: indices.iter().map(|&i| self.group_ids[i]).collect(),
            seizure_ids: indices.iter().map(|&i| self.seizure_ids[i]).collect(),
            overlap_flags: indices.iter().map(|&i| self.overlap_flags[i]).collect(),
        }
    }

    /// Same rows with features replaced (e.g. after scaling).
    pub fn with_features(&self, features: Matrix) -> Result<Self> {
        if features.shape() != self.features.shape() {
            return Err(Error::Dimension(format!(
                "replacement features are {:?}, dataset is {:?}",
                features.shape(),
                self.features.shape()
            )));
        }
        Self::new(
            features,
            self.labels.clone(),
            self.group_ids.clone(),
            self.seizure_ids.clone(),
            self.overlap_flags.clone(),
        )
    }

    /// Errors if the column count or any value does not fit the feature map.
    pub fn check_domain(&self, map: &FeatureMapConfig) -> Result<()> {
        if self.dims() != map.dims() {
            return Err(Error::Dimension(format!(
                "dataset has {} features, feature map has {} dimensions",
                self.dims(),
                map.dims()
            )));
        }
        for d in 0..self.dims() {
            for &x in self.features.column(d).iter() {
                map.check_domain(x, d)?;
            }
        }
        Ok(())
    }
}
