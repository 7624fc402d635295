//! Laplace basis feature maps approximating the RBF kernel on a hyperbox.
//!
//! On `[-U, U]` the Dirichlet Laplacian has eigenfunctions
//! `sin(pi i (x + U) / (2U)) / sqrt(U)` with frequencies `pi i / (2U)`.
//! Weighting each by the square root of the RBF spectral density at its
//! frequency gives features whose inner product approximates the kernel.
//! The `D`-dimensional feature is the (never materialized) tensor product of
//! the per-dimension vectors.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::Matrix;

/// Default margin of the hyperbox around data min-max scaled to `[-1, 1]`.
pub const DEFAULT_HALF_WIDTH: f64 = 1.25;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapConfig {
    basis_counts: Vec<usize>,
    half_widths: Vec<f64>,
    lengthscale: f64,
}

impl FeatureMapConfig {
    pub fn new(basis_counts: Vec<usize>, half_widths: Vec<f64>, lengthscale: f64) -> Result<Self> {
        if basis_counts.is_empty() {
            return Err(Error::Parameter("feature map needs at least one dimension".into()));
        }
        if basis_counts.len() != half_widths.len() {
            return Err(Error::Dimension(format!(
                "{} basis counts but {} half widths",
                basis_counts.len(),
                half_widths.len()
            )));
        }
        if basis_counts.contains(&0) {
            return Err(Error::Parameter("basis counts must be at least 1".into()));
        }
        if half_widths.iter().any(|&u| !(u > 0.0 && u.is_finite())) {
            return Err(Error::Parameter("half widths must be positive and finite".into()));
        }
        check_lengthscale(lengthscale)?;
        Ok(Self {
            basis_counts,
            half_widths,
            lengthscale,
        })
    }

    /// Same basis count and half width in every dimension.
    pub fn uniform(dims: usize, basis: usize, half_width: f64, lengthscale: f64) -> Result<Self> {
        Self::new(vec![basis; dims], vec![half_width; dims], lengthscale)
    }

    pub fn dims(&self) -> usize {
        self.basis_counts.len()
    }

    pub fn basis_counts(&self) -> &[usize] {
        &self.basis_counts
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    /// Copy of this configuration with a different lengthscale.
    pub fn with_lengthscale(&self, lengthscale: f64) -> Result<Self> {
        Self::new(self.basis_counts.clone(), self.half_widths.clone(), lengthscale)
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d >= self.dims() {
            return Err(Error::Dimension(format!(
                "dimension index {d} out of range for {} dimensions",
                self.dims()
            )));
        }
        Ok(())
    }

    /// Errors unless `x` lies in `[-U_d, U_d]`.
    pub fn check_domain(&self, x: f64, d: usize) -> Result<()> {
        let u = self.half_widths[d];
        if !(x >= -u && x <= u) {
            return Err(Error::Domain {
                dim: d,
                value: x,
                half_width: u,
            });
        }
        Ok(())
    }

    /// `sqrt(S(pi i / (2U_d))) / sqrt(U_d)` for `i = 1..=M_d`.
    pub fn basis_weights(&self, d: usize) -> Vec<f64> {
        let u = self.half_widths[d];
        (1..=self.basis_counts[d])
            .map(|i| {
                let omega = PI * i as f64 / (2.0 * u);
                (spectral_density_unchecked(omega, self.lengthscale) / u).sqrt()
            })
            .collect()
    }

    /// Writes `phi^(d)(x)` into `out` (length `M_d`), given precomputed
    /// [`basis_weights`](Self::basis_weights). No domain check.
    pub(crate) fn fill_local(&self, x: f64, d: usize, weights: &[f64], out: &mut [f64]) {
        let u = self.half_widths[d];
        let phase = PI * (x + u) / (2.0 * u);
        for (i, (o, w)) in out.iter_mut().zip(weights).enumerate() {
            *o = w * (phase * (i + 1) as f64).sin();
        }
    }

    /// Feature matrix `N x M_d` of one input column.
    pub fn feature_matrix(&self, column: &[f64], d: usize) -> Result<Matrix> {
        self.check_dim(d)?;
        for &x in column {
            self.check_domain(x, d)?;
        }
        let weights = self.basis_weights(d);
        let m = self.basis_counts[d];
        let mut out = Matrix::zeros(column.len(), m);
        let mut row = vec![0.0; m];
        for (n, &x) in column.iter().enumerate() {
            self.fill_local(x, d, &weights, &mut row);
            for (i, v) in row.iter().enumerate() {
                out[(n, i)] = *v;
            }
        }
        Ok(out)
    }
}

fn check_lengthscale(lengthscale: f64) -> Result<()> {
    if !(lengthscale > 0.0 && lengthscale.is_finite()) {
        return Err(Error::Parameter(format!(
            "lengthscale must be positive, got {lengthscale}"
        )));
    }
    Ok(())
}

fn spectral_density_unchecked(omega: f64, lengthscale: f64) -> f64 {
    lengthscale * (2.0 * PI).sqrt() * (-0.5 * (lengthscale * omega).powi(2)).exp()
}

/// Spectral density of the unit-variance 1-D RBF kernel,
/// `S(w) = l sqrt(2 pi) exp(-l^2 w^2 / 2)`.
pub fn rbf_spectral_density(omega: f64, lengthscale: f64) -> Result<f64> {
    check_lengthscale(lengthscale)?;
    Ok(spectral_density_unchecked(omega, lengthscale))
}

/// The local feature vector `phi^(d)(x)` of length `M_d`.
pub fn local_feature_map(x: f64, d: usize, cfg: &FeatureMapConfig) -> Result<Vec<f64>> {
    cfg.check_dim(d)?;
    cfg.check_domain(x, d)?;
    let weights = cfg.basis_weights(d);
    let mut out = vec![0.0; cfg.basis_counts[d]];
    cfg.fill_local(x, d, &weights, &mut out);
    Ok(out)
}

/// The `D` local feature vectors whose outer product is `Phi(x)`.
pub fn feature_tensor(x: &[f64], cfg: &FeatureMapConfig) -> Result<Vec<Vec<f64>>> {
    check_point(x, cfg)?;
    (0..cfg.dims())
        .map(|d| local_feature_map(x[d], d, cfg))
        .collect()
}

fn check_point(x: &[f64], cfg: &FeatureMapConfig) -> Result<()> {
    if x.len() != cfg.dims() {
        return Err(Error::Dimension(format!(
            "point has {} coordinates, feature map has {} dimensions",
            x.len(),
            cfg.dims()
        )));
    }
    Ok(())
}

/// `prod_d phi^(d)(x_d) . phi^(d)(x2_d)`, the finite-basis RBF approximation.
pub fn approx_kernel(x: &[f64], x2: &[f64], cfg: &FeatureMapConfig) -> Result<f64> {
    check_point(x, cfg)?;
    check_point(x2, cfg)?;
    let mut k = 1.0;
    for d in 0..cfg.dims() {
        let a = local_feature_map(x[d], d, cfg)?;
        let b = local_feature_map(x2[d], d, cfg)?;
        k *= a.iter().zip(&b).map(|(p, q)| p * q).sum::<f64>();
    }
    Ok(k)
}

/// `exp(-|x - x2|^2 / (2 l^2))`.
pub fn exact_rbf_kernel(x: &[f64], x2: &[f64], lengthscale: f64) -> Result<f64> {
    check_lengthscale(lengthscale)?;
    if x.len() != x2.len() {
        return Err(Error::Dimension(format!(
            "points have {} and {} coordinates",
            x.len(),
            x2.len()
        )));
    }
    let sq: f64 = x.iter().zip(x2).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((-sq / (2.0 * lengthscale * lengthscale)).exp())
}
