//! CPD tensors and the multilinear-algebra kernels built on them.
//!
//! Vectorization is column-major throughout: the first index varies fastest,
//! so `vec(A)[i_1 + I_1 * (i_2 + I_2 * (...))] = A[i_1, i_2, ...]`. With that
//! convention the CPD identity reads
//! `vec(A) = (A^(D) ⊙ ... ⊙ A^(1)) 1_R`, with weights absorbed into the
//! factor columns.

use crate::error::{Error, Result};
use crate::Matrix;

/// Default cap on the number of entries a dense tensor may hold.
pub const DEFAULT_DENSE_CAP: usize = 10_000_000;

/// A rank-`R` canonical polyadic decomposition.
///
/// Factor `d` has shape `M_d x R`; column `r` is the `d`-th mode vector of
/// the `r`-th rank-one component. Component scale lives in the columns
/// (see [`normalize_cpd`] for the weighted canonical form).
#[derive(Debug, Clone, PartialEq)]
pub struct CpdTensor {
    factors: Vec<Matrix>,
}

impl CpdTensor {
    pub fn new(factors: Vec<Matrix>) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| Error::Dimension("a CPD tensor needs at least one factor".into()))?;
        let rank = first.ncols();
        if rank == 0 {
            return Err(Error::Parameter("CPD rank must be at least 1".into()));
        }
        for (d, f) in factors.iter().enumerate() {
            if f.ncols() != rank {
                return Err(Error::Dimension(format!(
                    "factor {d} has {} columns, expected {rank}",
                    f.ncols()
                )));
            }
            if f.nrows() == 0 {
                return Err(Error::Dimension(format!("factor {d} has no rows")));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parameter(format!("factor {d} has non-finite entries")));
            }
        }
        Ok(Self { factors })
    }

    /// All-zero tensor with the given mode sizes.
    pub fn zeros(mode_sizes: &[usize], rank: usize) -> Result<Self> {
        Self::new(mode_sizes.iter().map(|&m| Matrix::zeros(m, rank)).collect())
    }

    pub fn rank(&self) -> usize {
        self.factors[0].ncols()
    }

    pub fn dims(&self) -> usize {
        self.factors.len()
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn factor(&self, d: usize) -> &Matrix {
        &self.factors[d]
    }

    /// Replaces factor `d`. The new factor must keep the mode size and rank.
    pub fn set_factor(&mut self, d: usize, factor: Matrix) -> Result<()> {
        let old = self
            .factors
            .get(d)
            .ok_or_else(|| Error::Dimension(format!("no factor {d}")))?;
        if old.shape() != factor.shape() {
            return Err(Error::Dimension(format!(
                "factor {d} must be {}x{}, got {}x{}",
                old.nrows(),
                old.ncols(),
                factor.nrows(),
                factor.ncols()
            )));
        }
        if factor.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("factor {d} has non-finite entries")));
        }
        self.factors[d] = factor;
        Ok(())
    }

    pub fn into_factors(self) -> Vec<Matrix> {
        self.factors
    }

    /// Rebuilds an unnormalized tensor from unit-norm factors and component
    /// weights by scaling the columns of the first factor.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.rank() {
            return Err(Error::Dimension(format!(
                "{} weights for rank {}",
                weights.len(),
                self.rank()
            )));
        }
        let mut factors = self.factors.clone();
        for (r, &w) in weights.iter().enumerate() {
            factors[0].column_mut(r).scale_mut(w);
        }
        Self::new(factors)
    }
}

/// A fully materialized tensor, column-major. Used for small-scale checks.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Dimension("shape entries must be positive".into()));
        }
        let n: usize = shape.iter().product();
        if n != values.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} needs {n} values, got {}",
                values.len()
            )));
        }
        Ok(Self { shape, values })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// The column-major vectorization.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn linear_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        let mut lin = 0;
        let mut stride = 1;
        for (&i, &n) in index.iter().zip(&self.shape) {
            debug_assert!(i < n);
            lin += i * stride;
            stride *= n;
        }
        lin
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[self.linear_index(index)]
    }

    pub fn dot(&self, other: &DenseTensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "shapes {:?} and {:?} differ",
                self.shape, other.shape
            )));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }
}

/// Column-wise Kronecker product: column `r` of the result is
/// `kron(a[:, r], b[:, r])`, so row `i * J + j` holds `a[i, r] * b[j, r]`.
pub fn khatri_rao(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.ncols() != b.ncols() {
        return Err(Error::Dimension(format!(
            "Khatri-Rao operands have {} and {} columns",
            a.ncols(),
            b.ncols()
        )));
    }
    let (i_rows, j_rows) = (a.nrows(), b.nrows());
    Ok(Matrix::from_fn(i_rows * j_rows, a.ncols(), |row, r| {
        a[(row / j_rows, r)] * b[(row % j_rows, r)]
    }))
}

/// Elementwise product of equally shaped matrices.
pub fn hadamard(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "Hadamard operands have shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.component_mul(b))
}

/// Materializes a CPD tensor, refusing tensors above [`DEFAULT_DENSE_CAP`].
pub fn cpd_to_dense(w: &CpdTensor) -> Result<DenseTensor> {
    cpd_to_dense_capped(w, DEFAULT_DENSE_CAP)
}

/// Materializes `vec(W) = (W^(D) ⊙ ... ⊙ W^(1)) 1_R`.
pub fn cpd_to_dense_capped(w: &CpdTensor, cap: usize) -> Result<DenseTensor> {
    let shape = w.mode_sizes();
    let entries = shape.iter().fold(1u128, |acc, &m| acc.saturating_mul(m as u128));
    if entries > cap as u128 {
        return Err(Error::Size { entries, cap });
    }
    let mut kr = w.factors[0].clone();
    for f in &w.factors[1..] {
        kr = khatri_rao(f, &kr)?;
    }
    let values = kr.column_sum().iter().copied().collect();
    DenseTensor::new(shape, values)
}

/// Frobenius inner product `1^T (⊛_d A^(d)T B^(d)) 1`, without densifying.
pub fn cpd_inner_product(a: &CpdTensor, b: &CpdTensor) -> Result<f64> {
    if a.mode_sizes() != b.mode_sizes() {
        return Err(Error::Dimension(format!(
            "mode sizes {:?} and {:?} differ",
            a.mode_sizes(),
            b.mode_sizes()
        )));
    }
    let mut acc = a.factors[0].tr_mul(&b.factors[0]);
    for (fa, fb) in a.factors.iter().zip(&b.factors).skip(1) {
        acc.component_mul_assign(&fa.tr_mul(fb));
    }
    Ok(acc.sum())
}

/// Number of stored parameters, `R * sum_d M_d`.
pub fn cpd_param_count(w: &CpdTensor) -> usize {
    w.rank() * w.mode_sizes().iter().sum::<usize>()
}

/// Canonical form with unit-norm columns and component weights.
///
/// A component with any all-zero column gets weight 0; its zero columns are
/// replaced by `e_1` and the rest are normalized as usual.
pub fn normalize_cpd(w: &CpdTensor) -> (CpdTensor, Vec<f64>) {
    let mut factors = w.factors.clone();
    let mut weights = vec![1.0; w.rank()];
    for f in factors.iter_mut() {
        for r in 0..f.ncols() {
            let norm = f.column(r).norm();
            if norm > 0.0 {
                f.column_mut(r).unscale_mut(norm);
                weights[r] *= norm;
            } else {
                f.column_mut(r).fill(0.0);
                f[(0, r)] = 1.0;
                weights[r] = 0.0;
            }
        }
    }
    (CpdTensor { factors }, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_cpd(rng: &mut ChaCha8Rng, modes: &[usize], rank: usize) -> CpdTensor {
        CpdTensor::new(modes.iter().map(|&m| random_matrix(rng, m, rank)).collect()).unwrap()
    }

    // Independent densification: explicit sum of outer products by index enumeration.
    fn outer_product_sum(w: &CpdTensor) -> Vec<f64> {
        let shape = w.mode_sizes();
        let total: usize = shape.iter().product();
        let mut out = vec![0.0; total];
        let mut idx = vec![0usize; shape.len()];
        for slot in out.iter_mut() {
            for r in 0..w.rank() {
                let mut p = 1.0;
                for (d, &i) in idx.iter().enumerate() {
                    p *= w.factor(d)[(i, r)];
                }
                *slot += p;
            }
            for d in 0..shape.len() {
                idx[d] += 1;
                if idx[d] < shape[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        out
    }

    #[test]
    fn khatri_rao_rank_one() {
        let a = Matrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let b = Matrix::from_column_slice(2, 1, &[3.0, 4.0]);
        let kr = khatri_rao(&a, &b).unwrap();
        assert_eq!(kr.as_slice(), &[3.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn khatri_rao_matches_elementwise_kron() {
        let a = Matrix::from_fn(2, 3, |i, j| if i == j { 1.0 } else { 0.5 * (j as f64) });
        let b = Matrix::from_element(3, 3, 1.0);
        let kr = khatri_rao(&a, &b).unwrap();
        for r in 0..3 {
            let mut kron = Vec::new();
            for i in 0..2 {
                for j in 0..3 {
                    kron.push(a[(i, r)] * b[(j, r)]);
                }
            }
            assert_eq!(kr.column(r).as_slice(), kron.as_slice());
        }
    }

    #[test]
    fn khatri_rao_shape_and_mismatch() {
        let kr = khatri_rao(&Matrix::zeros(4, 3), &Matrix::zeros(5, 3)).unwrap();
        assert_eq!(kr.shape(), (20, 3));
        assert!(matches!(
            khatri_rao(&Matrix::zeros(4, 3), &Matrix::zeros(5, 2)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn hadamard_cases() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let ones = Matrix::from_element(2, 2, 1.0);
        assert_eq!(hadamard(&a, &ones).unwrap(), a);

        let d = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let e = Matrix::from_row_slice(2, 2, &[3.0, 5.0, 7.0, 3.0]);
        assert_eq!(
            hadamard(&d, &e).unwrap(),
            Matrix::from_row_slice(2, 2, &[6.0, 0.0, 0.0, 6.0])
        );

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_matrix(&mut rng, 3, 3);
        let y = random_matrix(&mut rng, 3, 3);
        assert_eq!(hadamard(&x, &y).unwrap(), hadamard(&y, &x).unwrap());
        assert!(hadamard(&x, &Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn dense_rank_one_outer_product() {
        let w = CpdTensor::new(vec![
            Matrix::from_column_slice(2, 1, &[1.0, 2.0]),
            Matrix::from_column_slice(2, 1, &[3.0, 4.0]),
        ])
        .unwrap();
        let dense = cpd_to_dense(&w).unwrap();
        assert_eq!(dense.get(&[0, 0]), 3.0);
        assert_eq!(dense.get(&[0, 1]), 4.0);
        assert_eq!(dense.get(&[1, 0]), 6.0);
        assert_eq!(dense.get(&[1, 1]), 8.0);
    }

    #[test]
    fn dense_two_constructions_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = random_cpd(&mut rng, &[3, 4, 2], 2);
        let kr = cpd_to_dense(&w).unwrap();
        let outer = outer_product_sum(&w);
        for (a, b) in kr.values().iter().zip(&outer) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_zero_rejected_and_zero_column_gives_zero_tensor() {
        assert!(matches!(
            CpdTensor::new(vec![Matrix::zeros(3, 0)]),
            Err(Error::Parameter(_))
        ));
        let w = CpdTensor::new(vec![
            Matrix::zeros(3, 1),
            Matrix::from_column_slice(2, 1, &[1.0, 2.0]),
        ])
        .unwrap();
        assert!(cpd_to_dense(&w).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dense_cap_enforced() {
        let w = CpdTensor::zeros(&[10, 10, 10], 1).unwrap();
        assert!(matches!(cpd_to_dense_capped(&w, 999), Err(Error::Size { .. })));
        assert!(cpd_to_dense_capped(&w, 1000).is_ok());
        let big = CpdTensor::zeros(&[20; 32], 1).unwrap();
        assert!(matches!(cpd_to_dense(&big), Err(Error::Size { .. })));
    }

    #[test]
    fn non_finite_factor_rejected() {
        let mut m = Matrix::zeros(2, 1);
        m[(1, 0)] = f64::NAN;
        assert!(CpdTensor::new(vec![m]).is_err());
        assert!(CpdTensor::new(vec![]).is_err());
        assert!(CpdTensor::new(vec![Matrix::zeros(2, 2), Matrix::zeros(2, 3)]).is_err());
    }

    #[test]
    fn inner_product_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_cpd(&mut rng, &[3, 2, 4], 3);
        let b = random_cpd(&mut rng, &[3, 2, 4], 2);
        assert!(cpd_inner_product(&a, &a).unwrap() >= 0.0);

        let dense = cpd_to_dense(&a).unwrap().dot(&cpd_to_dense(&b).unwrap()).unwrap();
        assert!((cpd_inner_product(&a, &b).unwrap() - dense).abs() < 1e-10);

        let e = |i: usize| Matrix::from_fn(3, 1, |r, _| if r == i { 1.0 } else { 0.0 });
        let x = CpdTensor::new(vec![e(0), e(1)]).unwrap();
        let y = CpdTensor::new(vec![e(2), e(1)]).unwrap();
        assert_eq!(cpd_inner_product(&x, &y).unwrap(), 0.0);

        let c = random_cpd(&mut rng, &[3, 2, 5], 2);
        assert!(cpd_inner_product(&a, &c).is_err());
    }

    #[test]
    fn param_counts() {
        assert_eq!(cpd_param_count(&CpdTensor::zeros(&[20; 32], 30).unwrap()), 19_200);
        assert_eq!(cpd_param_count(&CpdTensor::zeros(&[5], 2).unwrap()), 10);
        assert_eq!(cpd_param_count(&CpdTensor::zeros(&[2, 3, 4], 1).unwrap()), 9);
    }

    #[test]
    fn normalize_cases() {
        let w = CpdTensor::new(vec![Matrix::from_column_slice(2, 1, &[3.0, 4.0])]).unwrap();
        let (n, weights) = normalize_cpd(&w);
        assert!((n.factor(0)[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((n.factor(0)[(1, 0)] - 0.8).abs() < 1e-15);
        assert!((weights[0] - 5.0).abs() < 1e-15);

        let (_, again) = normalize_cpd(&n);
        assert!((again[0] - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = random_cpd(&mut rng, &[3, 4, 2], 2);
        let (n, weights) = normalize_cpd(&w);
        let back = cpd_to_dense(&n.with_weights(&weights).unwrap()).unwrap();
        let orig = cpd_to_dense(&w).unwrap();
        for (a, b) in back.values().iter().zip(orig.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_zero_column_convention() {
        let w = CpdTensor::new(vec![
            Matrix::from_column_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]),
            Matrix::from_column_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]),
        ])
        .unwrap();
        let (n, weights) = normalize_cpd(&w);
        assert_eq!(weights[0], 0.0);
        assert_eq!(n.factor(0).column(0).as_slice(), &[1.0, 0.0]);
        let back = cpd_to_dense(&n.with_weights(&weights).unwrap()).unwrap();
        let orig = cpd_to_dense(&w).unwrap();
        for (a, b) in back.values().iter().zip(orig.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn cpd_strategy() -> impl Strategy<Value = CpdTensor> {
        (1usize..=4, 1usize..=4, any::<u64>()).prop_flat_map(|(dims, rank, seed)| {
            proptest::collection::vec(1usize..=5, dims).prop_map(move |modes| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                random_cpd(&mut rng, &modes, rank)
            })
        })
    }

    proptest! {
        #[test]
        fn two_mode_vectorization_consistency(seed in any::<u64>(), m1 in 1usize..6, m2 in 1usize..6, rank in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = random_cpd(&mut rng, &[m1, m2], rank);
            let kr = khatri_rao(w.factor(1), w.factor(0)).unwrap();
            let summed = kr * nalgebra::DVector::from_element(rank, 1.0);
            let dense = cpd_to_dense(&w).unwrap();
            for (a, b) in dense.values().iter().zip(summed.iter()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn self_inner_product_is_squared_frobenius_norm(w in cpd_strategy()) {
            let ip = cpd_inner_product(&w, &w).unwrap();
            let dense = outer_product_sum(&w);
            let sq: f64 = dense.iter().map(|v| v * v).sum();
            prop_assert!((ip - sq).abs() <= 1e-10 * sq.max(1e-300));
        }

        #[test]
        fn normalize_round_trip_and_count(w in cpd_strategy()) {
            let (n, weights) = normalize_cpd(&w);
            prop_assert_eq!(cpd_param_count(&n), cpd_param_count(&w));
            let back = cpd_to_dense(&n.with_weights(&weights).unwrap()).unwrap();
            let orig = cpd_to_dense(&w).unwrap();
            for (a, b) in back.values().iter().zip(orig.values()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            for f in n.factors() {
                for c in f.column_iter() {
                    prop_assert!((c.norm() - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
