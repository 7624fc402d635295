//! Min-max scaling into `[-1, 1]`.
//!
//! Parameters are fit on training rows only. Applying them to unseen rows
//! clamps out-of-range values to the interval and reports how many entries
//! were clamped, since the feature map rejects inputs outside its hyperbox.

use crate::error::{Error, Result};
use crate::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalerParams {
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

/// Result of [`ScalerParams::apply`].
#[derive(Debug, Clone, PartialEq)]
pub struct Scaled {
    pub features: Matrix,
    pub clamped: usize,
}

impl ScalerParams {
    pub fn new(mins: Vec<f64>, maxs: Vec<f64>) -> Result<Self> {
        if mins.len() != maxs.len() || mins.is_empty() {
            return Err(Error::Dimension(format!(
                "scaler needs equal nonzero min/max lengths, got {} and {}",
                mins.len(),
                maxs.len()
            )));
        }
        for (d, (lo, hi)) in mins.iter().zip(&maxs).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi >= lo) {
                return Err(Error::Parameter(format!(
                    "feature {d}: invalid range [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { mins, maxs })
    }

    /// Column-wise min and max of the training rows.
    pub fn fit(train: &Matrix) -> Result<Self> {
        if train.nrows() == 0 || train.ncols() == 0 {
            return Err(Error::Dataset("cannot fit a scaler on an empty training set".into()));
        }
        let mins = train.column_iter().map(|c| c.min()).collect();
        let maxs = train.column_iter().map(|c| c.max()).collect();
        Self::new(mins, maxs)
    }

    pub fn dims(&self) -> usize {
        self.mins.len()
    }

    pub fn mins(&self) -> &[f64] {
        &self.mins
    }

    pub fn maxs(&self) -> &[f64] {
        &self.maxs
    }

    /// Indices of features whose training range is a single value.
    pub fn degenerate(&self) -> Vec<usize> {
        (0..self.dims())
            .filter(|&d| self.maxs[d] == self.mins[d])
            .collect()
    }

    /// Scales one value of feature `d`. Returns the value and whether it was clamped.
    pub fn scale_value(&self, x: f64, d: usize) -> (f64, bool) {
        let (lo, hi) = (self.mins[d], self.maxs[d]);
        if hi == lo {
            return (0.0, false);
        }
        let v = 2.0 * (x - lo) / (hi - lo) - 1.0;
        if v > 1.0 {
            (1.0, true)
        } else if v < -1.0 {
            (-1.0, true)
        } else {
            (v, false)
        }
    }

    pub fn apply(&self, features: &Matrix) -> Result<Scaled> {
        if features.ncols() != self.dims() {
            return Err(Error::Dimension(format!(
                "scaler fit on {} features, got {}",
                self.dims(),
                features.ncols()
            )));
        }
        let mut clamped = 0;
        let mut out = features.clone();
        for (d, mut col) in out.column_iter_mut().enumerate() {
            for v in col.iter_mut() {
                let (s, c) = self.scale_value(*v, d);
                *v = s;
                clamped += c as usize;
            }
        }
        Ok(Scaled {
            features: out,
            clamped,
        })
    }

    /// Scales a single row, clamping silently.
    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dims() {
            return Err(Error::Dimension(format!(
                "scaler fit on {} features, got {}",
                self.dims(),
                row.len()
            )));
        }
        Ok(row.iter().enumerate().map(|(d, &x)| self.scale_value(x, d).0).collect())
    }
}
