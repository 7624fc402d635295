//! Exact dual kernel ridge regression, `alpha = (K + lambda I)^{-1} y`.
//!
//! Exists to check the primal CPD solver and the kernel approximation
//! against a brute-force baseline, so it only supports dense solves on
//! modest sample counts.

use nalgebra::{Cholesky, DVector};

use crate::error::{Error, Result};
use crate::feature_map::{approx_kernel, exact_rbf_kernel, FeatureMapConfig};
use crate::Matrix;

/// Largest training set the oracle accepts.
pub const MAX_ORACLE_SAMPLES: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// Finite Laplace-basis approximation of the RBF kernel.
    Approx(FeatureMapConfig),
    ExactRbf { lengthscale: f64 },
}

impl Kernel {
    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        match self {
            Kernel::Approx(cfg) => approx_kernel(x, x2, cfg),
            Kernel::ExactRbf { lengthscale } => exact_rbf_kernel(x, x2, *lengthscale),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualKrrModel {
    support_points: Matrix,
    alphas: DVector<f64>,
    kernel: Kernel,
    ridge: f64,
}

impl DualKrrModel {
    pub fn support_points(&self) -> &Matrix {
        &self.support_points
    }

    pub fn alphas(&self) -> &DVector<f64> {
        &self.alphas
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Stored values: `N * D` support coordinates plus `N` coefficients.
    pub fn param_count(&self) -> usize {
        let (n, d) = self.support_points.shape();
        n * d + n
    }
}

fn rows(points: &Matrix) -> Vec<Vec<f64>> {
    points
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect()
}

/// `K[i, j] = kappa(x_i, x_j)`, symmetric by construction.
pub fn gram_matrix(points: &Matrix, kernel: &Kernel) -> Result<Matrix> {
    let pts = rows(points);
    let n = pts.len();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(&pts[i], &pts[j])?;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

pub fn dual_fit(points: &Matrix, labels: &[f64], kernel: Kernel, ridge: f64) -> Result<DualKrrModel> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::Dataset("no training points".into()));
    }
    if n > MAX_ORACLE_SAMPLES {
        return Err(Error::Parameter(format!(
            "dual oracle is limited to {MAX_ORACLE_SAMPLES} samples, got {n}"
        )));
    }
    if labels.len() != n {
        return Err(Error::Dimension(format!("{n} points but {} labels", labels.len())));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::Parameter(format!("ridge must be nonnegative, got {ridge}")));
    }
    let mut system = gram_matrix(points, &kernel)?;
    for i in 0..n {
        system[(i, i)] += ridge;
    }
    let y = DVector::from_column_slice(labels);
    let chol = Cholesky::new(system.clone())
        .ok_or_else(|| Error::Singular("K + lambda I is not positive definite".into()))?;
    let mut alphas = chol.solve(&y);
    let residual = &y - &system * &alphas;
    alphas += chol.solve(&residual);
    Ok(DualKrrModel {
        support_points: points.clone(),
        alphas,
        kernel,
        ridge,
    })
}

/// `sum_n alpha_n kappa(x, x_n)`.
pub fn dual_predict(model: &DualKrrModel, x: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (n, row) in model.support_points.row_iter().enumerate() {
        let xn: Vec<f64> = row.iter().copied().collect();
        acc += model.alphas[n] * model.kernel.eval(x, &xn)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_map::feature_tensor;
    use crate::tensor::{cpd_to_dense, CpdTensor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(seed: u64, n: usize, d: usize) -> (Matrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Matrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let y = (0..n)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        (p, y)
    }

    fn explicit_features(x: &[f64], cfg: &FeatureMapConfig) -> Vec<f64> {
        let phi = feature_tensor(x, cfg).unwrap();
        let cpd = CpdTensor::new(
            phi.iter()
                .map(|v| Matrix::from_column_slice(v.len(), 1, v))
                .collect(),
        )
        .unwrap();
        cpd_to_dense(&cpd).unwrap().values().to_vec()
    }

    #[test]
    fn gram_diagonal_and_symmetry() {
        let (p, _) = random_points(1, 12, 3);
        let k = gram_matrix(&p, &Kernel::ExactRbf { lengthscale: 0.5 }).unwrap();
        for i in 0..12 {
            assert_eq!(k[(i, i)], 1.0);
        }
        assert_eq!(k, k.transpose());
        let cfg = FeatureMapConfig::uniform(3, 6, 1.25, 0.5).unwrap();
        let ka = gram_matrix(&p, &Kernel::Approx(cfg)).unwrap();
        assert_eq!(ka, ka.transpose());
    }

    #[test]
    fn gram_is_psd_for_both_kernels() {
        let (p, _) = random_points(2, 30, 2);
        let cfg = FeatureMapConfig::uniform(2, 12, 1.25, 0.4).unwrap();
        for kernel in [Kernel::ExactRbf { lengthscale: 0.4 }, Kernel::Approx(cfg)] {
            let k = gram_matrix(&p, &kernel).unwrap();
            assert!(k.symmetric_eigenvalues().min() >= -1e-9);
        }
    }

    #[test]
    fn single_point_closed_form() {
        let p = Matrix::from_row_slice(1, 2, &[0.3, -0.4]);
        let m = dual_fit(&p, &[-1.0], Kernel::ExactRbf { lengthscale: 1.0 }, 0.5).unwrap();
        assert!((m.alphas()[0] - (-1.0 / 1.5)).abs() < 1e-15);
    }

    #[test]
    fn huge_ridge_limit() {
        let (p, y) = random_points(3, 20, 2);
        let lambda = 1e8;
        let m = dual_fit(&p, &y, Kernel::ExactRbf { lengthscale: 0.5 }, lambda).unwrap();
        for (a, yi) in m.alphas().iter().zip(&y) {
            let target = yi / lambda;
            assert!((a - target).abs() <= 0.01 * target.abs());
        }
    }

    #[test]
    fn residual_is_tiny() {
        let (p, y) = random_points(4, 40, 3);
        let kernel = Kernel::ExactRbf { lengthscale: 0.6 };
        let m = dual_fit(&p, &y, kernel.clone(), 1e-3).unwrap();
        let mut k = gram_matrix(&p, &kernel).unwrap();
        for i in 0..40 {
            k[(i, i)] += 1e-3;
        }
        let r = k * m.alphas() - DVector::from_column_slice(&y);
        assert!(r.amax() < 1e-9);
    }

    #[test]
    fn unit_coefficient_returns_kernel_value() {
        let (p, _) = random_points(5, 4, 2);
        let kernel = Kernel::ExactRbf { lengthscale: 0.7 };
        let mut m = dual_fit(&p, &[1.0, -1.0, 1.0, -1.0], kernel.clone(), 0.1).unwrap();
        m.alphas = DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]);
        let x = [0.1, 0.2];
        let x1: Vec<f64> = p.row(0).iter().copied().collect();
        assert_eq!(dual_predict(&m, &x).unwrap(), kernel.eval(&x, &x1).unwrap());
    }

    #[test]
    fn interpolates_training_labels() {
        // Well-separated points keep K well conditioned.
        let p = Matrix::from_row_slice(5, 1, &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        let y = [1.0, -1.0, 1.0, 1.0, -1.0];
        let m = dual_fit(&p, &y, Kernel::ExactRbf { lengthscale: 0.2 }, 1e-10).unwrap();
        for (i, yi) in y.iter().enumerate() {
            assert!((dual_predict(&m, &[p[(i, 0)]]).unwrap() - yi).abs() < 1e-3);
        }
    }

    #[test]
    fn primal_dual_equivalence_with_explicit_features() {
        let cfg = FeatureMapConfig::new(vec![4, 5, 3], vec![1.25; 3], 0.5).unwrap();
        let (p, y) = random_points(6, 25, 3);
        let lambda = 1e-2;
        let m = dual_fit(&p, &y, Kernel::Approx(cfg.clone()), lambda).unwrap();

        let feats: Vec<Vec<f64>> = p
            .row_iter()
            .map(|r| explicit_features(&r.iter().copied().collect::<Vec<_>>(), &cfg))
            .collect();
        let dim = feats[0].len();
        assert_eq!(dim, 60);
        let phi = Matrix::from_fn(25, dim, |i, j| feats[i][j]);
        let w = (phi.tr_mul(&phi) + Matrix::identity(dim, dim) * lambda)
            .cholesky()
            .unwrap()
            .solve(&phi.tr_mul(&DVector::from_column_slice(&y)));

        let (q, _) = random_points(7, 10, 3);
        for r in q.row_iter().chain(p.row_iter()) {
            let x: Vec<f64> = r.iter().copied().collect();
            let primal: f64 = explicit_features(&x, &cfg).iter().zip(w.iter()).map(|(a, b)| a * b).sum();
            let dual = dual_predict(&m, &x).unwrap();
            assert!((primal - dual).abs() < 1e-9, "{primal} vs {dual}");
        }
    }

    #[test]
    fn param_count_and_limits() {
        let (p, y) = random_points(8, 10, 4);
        let m = dual_fit(&p, &y, Kernel::ExactRbf { lengthscale: 1.0 }, 0.1).unwrap();
        assert_eq!(m.param_count(), 50);
        assert!(dual_fit(&p, &y[..3], Kernel::ExactRbf { lengthscale: 1.0 }, 0.1).is_err());
        // Duplicate points and no ridge: singular.
        let dup = Matrix::from_row_slice(2, 1, &[0.5, 0.5]);
        assert!(matches!(
            dual_fit(&dup, &[1.0, -1.0], Kernel::ExactRbf { lengthscale: 1.0 }, 0.0),
            Err(Error::Singular(_))
        ));
        let big = Matrix::zeros(MAX_ORACLE_SAMPLES + 1, 1);
        assert!(dual_fit(&big, &vec![1.0; MAX_ORACLE_SAMPLES + 1], Kernel::ExactRbf { lengthscale: 1.0 }, 1.0).is_err());
    }
}
