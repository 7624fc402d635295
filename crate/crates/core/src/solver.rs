//! Alternating least squares for CPD-constrained primal kernel ridge regression.
//!
//! The objective is
//!
//! ```text
//! J(W) = sum_n (<Phi(x_n), W> - y_n)^2 + lambda <W, W>
//! ```
//!
//! with `W` a rank-`R` CPD. Fixing every factor except `W^(d)` makes `J`
//! quadratic in `vec(W^(d))`:
//!
//! * `Q^(k) = Phi^(k) W^(k)` (`N x R`) projects each sample onto the rank
//!   components of dimension `k`;
//! * `Z = ⊛_{k != d} Q^(k)` and row `n` of the design matrix is
//!   `vec(phi^(d)(x_{n,d}) z_n^T)` (column-major, index `m + M_d r`);
//! * `<W, W> = vec(W^(d))^T (H ⊗ I_{M_d}) vec(W^(d))` with
//!   `H = ⊛_{k != d} W^(k)T W^(k)`.
//!
//! Each update solves the resulting normal equations exactly, so the
//! objective never increases. Dimension `d` itself is excluded from `H`;
//! including it would count the active factor twice.

use nalgebra::{Cholesky, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::feature_map::FeatureMapConfig;
use crate::model::TkrrModel;
use crate::tensor::CpdTensor;
use crate::Matrix;

/// Rows per block when accumulating the normal equations. Fixed so the
/// summation order, and hence the result, does not depend on thread count.
const GRAM_BLOCK_ROWS: usize = 256;

/// How the factor matrices are initialized.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// I.i.d. standard normal entries from a seeded generator.
    Random { seed: u64 },
    /// Copy of an existing CPD (warm start).
    Warm(CpdTensor),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub rank: usize,
    pub ridge: f64,
    /// Full passes over `update_dims`.
    pub sweeps: usize,
    pub init: Init,
    /// Zero-based dimensions to update, in any order; `None` means all.
    pub update_dims: Option<Vec<usize>>,
}

impl TrainConfig {
    pub fn new(rank: usize, ridge: f64) -> Self {
        Self {
            rank,
            ridge,
            sweeps: 1,
            init: Init::Random { seed: 0 },
            update_dims: None,
        }
    }

    pub fn sweeps(mut self, sweeps: usize) -> Self {
        self.sweeps = sweeps;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.init = Init::Random { seed };
        self
    }

    pub fn warm(mut self, weights: CpdTensor) -> Self {
        self.init = Init::Warm(weights);
        self
    }

    pub fn update_dims(mut self, dims: Vec<usize>) -> Self {
        self.update_dims = Some(dims);
        self
    }

    fn validate(&self, dims: usize) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::Parameter("rank must be at least 1".into()));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::Parameter(format!("ridge must be nonnegative, got {}", self.ridge)));
        }
        resolve_update_dims(self.update_dims.as_deref(), dims).map(|_| ())
    }
}

/// Sorted, deduplicated update dimensions; all dimensions when `None`.
fn resolve_update_dims(requested: Option<&[usize]>, dims: usize) -> Result<Vec<usize>> {
    match requested {
        None => Ok((0..dims).collect()),
        Some([]) => Err(Error::Parameter("update_dims must not be empty".into())),
        Some(list) => {
            if let Some(&bad) = list.iter().find(|&&d| d >= dims) {
                return Err(Error::Dimension(format!(
                    "update dimension {bad} out of range for {dims} dimensions"
                )));
            }
            let mut v = list.to_vec();
            v.sort_unstable();
            v.dedup();
            Ok(v)
        }
    }
}

/// Initial factors: seeded standard normal, or a copy of the warm tensor.
pub fn init_factors(cfg: &TrainConfig, map: &FeatureMapConfig) -> Result<CpdTensor> {
    match &cfg.init {
        Init::Random { seed } => {
            if cfg.rank == 0 {
                return Err(Error::Parameter("rank must be at least 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let factors = map
                .basis_counts()
                .iter()
                .map(|&m| Matrix::from_fn(m, cfg.rank, |_, _| StandardNormal.sample(&mut rng)))
                .collect();
            CpdTensor::new(factors)
        }
        Init::Warm(w) => {
            if w.mode_sizes() != map.basis_counts() {
                return Err(Error::Dimension(format!(
                    "warm-start mode sizes {:?} do not match basis counts {:?}",
                    w.mode_sizes(),
                    map.basis_counts()
                )));
            }
            if w.rank() != cfg.rank {
                return Err(Error::Dimension(format!(
                    "warm-start rank {} does not match configured rank {}",
                    w.rank(),
                    cfg.rank
                )));
            }
            Ok(w.clone())
        }
    }
}

fn feature_matrices(features: &Matrix, map: &FeatureMapConfig) -> Result<Vec<Matrix>> {
    if features.ncols() != map.dims() {
        return Err(Error::Dimension(format!(
            "data has {} features, feature map has {} dimensions",
            features.ncols(),
            map.dims()
        )));
    }
    (0..map.dims())
        .map(|d| {
            let col: Vec<f64> = features.column(d).iter().copied().collect();
            map.feature_matrix(&col, d)
        })
        .collect()
}

/// `Q^(d)[n, r] = phi^(d)(x_{n,d}) . w_r^(d)` for every dimension.
pub fn dimension_projections(
    features: &Matrix,
    factors: &CpdTensor,
    map: &FeatureMapConfig,
) -> Result<Vec<Matrix>> {
    if factors.mode_sizes() != map.basis_counts() {
        return Err(Error::Dimension("factor mode sizes do not match the feature map".into()));
    }
    Ok(feature_matrices(features, map)?
        .iter()
        .zip(factors.factors())
        .map(|(phi, w)| phi * w)
        .collect())
}

/// `⊛_{k != d} W^(k)T W^(k)`; all ones when `D = 1`.
pub fn excluded_gram(factors: &CpdTensor, d: usize) -> Matrix {
    let r = factors.rank();
    let mut h = Matrix::from_element(r, r, 1.0);
    for (k, f) in factors.factors().iter().enumerate() {
        if k != d {
            h.component_mul_assign(&f.tr_mul(f));
        }
    }
    h
}

/// Outcome of one factor update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateRecord {
    /// Zero-based dimension that was updated.
    pub dim: usize,
    /// Objective after the update.
    pub objective: f64,
    /// The normal equations were not positive definite and the
    /// minimum-norm least-squares fallback was used.
    pub fallback: bool,
}

/// Working state of an ALS run over a fixed training set.
///
/// Caches the per-dimension feature matrices, the projections `Q^(d)` and
/// the Gram matrices `W^(d)T W^(d)` so that one update costs
/// `O(N M^2 R^2 + (M R)^3)`.
#[derive(Debug, Clone)]
pub struct AlsState {
    ridge: f64,
    labels: DVector<f64>,
    phis: Vec<Matrix>,
    projections: Vec<Matrix>,
    grams: Vec<Matrix>,
    factors: CpdTensor,
    history: Vec<f64>,
    fallback_used: bool,
}

impl AlsState {
    /// `features` must already lie inside the feature-map hyperbox.
    pub fn new(
        features: &Matrix,
        labels: &[f64],
        map: &FeatureMapConfig,
        ridge: f64,
        factors: CpdTensor,
    ) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::Dataset("training set is empty".into()));
        }
        if labels.len() != features.nrows() {
            return Err(Error::Dimension(format!(
                "{} rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if factors.mode_sizes() != map.basis_counts() {
            return Err(Error::Dimension(format!(
                "factor mode sizes {:?} do not match basis counts {:?}",
                factors.mode_sizes(),
                map.basis_counts()
            )));
        }
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::Parameter(format!("ridge must be nonnegative, got {ridge}")));
        }
        let phis = feature_matrices(features, map)?;
        let projections = phis
            .iter()
            .zip(factors.factors())
            .map(|(phi, w)| phi * w)
            .collect();
        let grams = factors.factors().iter().map(|w| w.tr_mul(w)).collect();
        Ok(Self {
            ridge,
            labels: DVector::from_column_slice(labels),
            phis,
            projections,
            grams,
            factors,
            history: Vec::new(),
            fallback_used: false,
        })
    }

    pub fn factors(&self) -> &CpdTensor {
        &self.factors
    }

    pub fn into_factors(self) -> CpdTensor {
        self.factors
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn fallback_used(&self) -> bool {
        self.fallback_used
    }

    /// Model outputs on the training rows.
    pub fn scores(&self) -> DVector<f64> {
        let mut prod = self.projections[0].clone();
        for q in &self.projections[1..] {
            prod.component_mul_assign(q);
        }
        prod.column_sum()
    }

    /// Current objective: squared loss plus `lambda <W, W>`.
    pub fn objective(&self) -> f64 {
        let loss = (self.scores() - &self.labels).norm_squared();
        let mut h = self.grams[0].clone();
        for g in &self.grams[1..] {
            h.component_mul_assign(g);
        }
        loss + self.ridge * h.sum()
    }

    fn hadamard_excluding(&self, d: usize) -> Matrix {
        let (n, r) = self.projections[0].shape();
        let mut z = Matrix::from_element(n, r, 1.0);
        for (k, q) in self.projections.iter().enumerate() {
            if k != d {
                z.component_mul_assign(q);
            }
        }
        z
    }

    /// Normal equations `(A^T A, A^T y)` for dimension `d`, accumulated in
    /// fixed row blocks.
    fn normal_equations(&self, d: usize, z: &Matrix) -> (Matrix, DVector<f64>) {
        let phi = &self.phis[d];
        let (n, m) = phi.shape();
        let r = z.ncols();
        let p = m * r;
        let blocks: Vec<(Matrix, DVector<f64>)> = (0..n)
            .step_by(GRAM_BLOCK_ROWS)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|start| {
                let rows = GRAM_BLOCK_ROWS.min(n - start);
                let mut a = Matrix::zeros(rows, p);
                for j in 0..r {
                    for i in 0..m {
                        let col = i + m * j;
                        for t in 0..rows {
                            a[(t, col)] = phi[(start + t, i)] * z[(start + t, j)];
                        }
                    }
                }
                let y = self.labels.rows(start, rows);
                (a.tr_mul(&a), a.tr_mul(&y))
            })
            .collect();
        let mut gram = Matrix::zeros(p, p);
        let mut rhs = DVector::zeros(p);
        for (g, b) in blocks {
            gram += g;
            rhs += b;
        }
        (gram, rhs)
    }

    /// Exact minimization of the objective over factor `d`.
    pub fn update(&mut self, d: usize) -> Result<UpdateRecord> {
        if d >= self.phis.len() {
            return Err(Error::Dimension(format!(
                "dimension {d} out of range for {} dimensions",
                self.phis.len()
            )));
        }
        let m = self.phis[d].ncols();
        let r = self.factors.rank();
        let z = self.hadamard_excluding(d);
        let (mut system, rhs) = self.normal_equations(d, &z);
        let h = excluded_gram(&self.factors, d);
        if self.ridge > 0.0 {
            for s in 0..r {
                for t in 0..r {
                    let v = self.ridge * h[(t, s)];
                    for i in 0..m {
                        system[(i + m * t, i + m * s)] += v;
                    }
                }
            }
        }

        let (solution, fallback) = solve_normal_equations(&system, &rhs)?;
        self.fallback_used |= fallback;
        let factor = Matrix::from_column_slice(m, r, solution.as_slice());
        self.factors.set_factor(d, factor)?;
        let w = self.factors.factor(d);
        self.projections[d] = &self.phis[d] * w;
        self.grams[d] = w.tr_mul(w);

        let objective = self.objective();
        self.history.push(objective);
        Ok(UpdateRecord {
            dim: d,
            objective,
            fallback,
        })
    }
}

/// Cholesky with one step of iterative refinement; SVD pseudo-inverse
/// (minimum-norm least squares) when the system is not positive definite.
fn solve_normal_equations(system: &Matrix, rhs: &DVector<f64>) -> Result<(DVector<f64>, bool)> {
    if let Some(chol) = Cholesky::new(system.clone()) {
        let mut x = chol.solve(rhs);
        let residual = rhs - system * &x;
        x += chol.solve(&residual);
        if x.iter().all(|v| v.is_finite()) {
            return Ok((x, false));
        }
    }
    let svd = system.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let tol = max_sv * system.nrows() as f64 * f64::EPSILON;
    let x = svd
        .solve(rhs, tol)
        .map_err(|e| Error::Singular(e.to_string()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("least-squares fallback produced non-finite values".into()));
    }
    Ok((x, true))
}

/// One factor update on `features` (already scaled), returning the new
/// factor and the objective after the update.
pub fn als_factor_update(
    d: usize,
    features: &Matrix,
    labels: &[f64],
    factors: &CpdTensor,
    ridge: f64,
    map: &FeatureMapConfig,
) -> Result<(Matrix, f64)> {
    let mut state = AlsState::new(features, labels, map, ridge, factors.clone())?;
    let rec = state.update(d)?;
    Ok((state.factors.factor(d).clone(), rec.objective))
}

/// Trains a model: `sweeps` passes over the update dimensions in ascending
/// order. `data` must already be scaled into the hyperbox; attach the scaler
/// to the returned model with [`TkrrModel::with_scaler`].
pub fn fit(data: &LabeledDataset, cfg: &TrainConfig, map: &FeatureMapConfig) -> Result<TkrrModel> {
    cfg.validate(map.dims())?;
    data.check_domain(map)?;
    let dims = resolve_update_dims(cfg.update_dims.as_deref(), map.dims())?;
    let factors = init_factors(cfg, map)?;
    let mut state = AlsState::new(data.features(), data.labels(), map, cfg.ridge, factors)?;
    for _ in 0..cfg.sweeps {
        for &d in &dims {
            state.update(d)?;
        }
    }
    let history = state.history.clone();
    let mut model = TkrrModel::new(map.clone(), state.into_factors(), cfg.ridge)?;
    model.set_history(history);
    Ok(model)
}

/// Options for warm-started fine-tuning.
#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneOptions {
    /// Full passes over the update dimensions (ignored when `max_updates` is set).
    pub sweeps: usize,
    /// Exact number of single-factor updates, cycling through the update
    /// dimensions in ascending order.
    pub max_updates: Option<usize>,
    /// Zero-based dimensions to update; `None` means all.
    pub update_dims: Option<Vec<usize>>,
}

impl Default for FinetuneOptions {
    fn default() -> Self {
        Self {
            sweeps: 1,
            max_updates: None,
            update_dims: None,
        }
    }
}

/// Warm-started ALS on new data with the source model's feature map, ridge,
/// scaler and threshold. `data` must already be scaled.
pub fn finetune(model: &TkrrModel, data: &LabeledDataset, opts: &FinetuneOptions) -> Result<TkrrModel> {
    finetune_with(model, data, opts, |_, _| {})
}

/// [`finetune`] with a callback after every factor update, e.g. to trace
/// held-out performance per update.
pub fn finetune_with<F>(
    model: &TkrrModel,
    data: &LabeledDataset,
    opts: &FinetuneOptions,
    mut observer: F,
) -> Result<TkrrModel>
where
    F: FnMut(&UpdateRecord, &TkrrModel),
{
    let map = model.feature_map();
    data.check_domain(map)?;
    let dims = resolve_update_dims(opts.update_dims.as_deref(), map.dims())?;
    let total = opts.max_updates.unwrap_or(opts.sweeps * dims.len());
    let mut out = model.clone();
    out.set_history(Vec::new());
    if total == 0 {
        return Ok(out);
    }
    let mut state = AlsState::new(
        data.features(),
        data.labels(),
        map,
        model.ridge(),
        model.weights().clone(),
    )?;
    for k in 0..total {
        let rec = state.update(dims[k % dims.len()])?;
        out.set_weights(state.factors().clone());
        out.set_history(state.history().to_vec());
        observer(&rec, &out);
    }
    Ok(out)
}

/// Score of a raw input: applies the model's scaler (if any), then the model.
pub fn predict_score(model: &TkrrModel, x: &[f64]) -> Result<f64> {
    match model.scaler() {
        Some(s) => model.score_scaled(&s.apply_row(x)?),
        None => model.score_scaled(x),
    }
}

/// `+1` if the score exceeds the model threshold, else `-1`.
pub fn predict_label(model: &TkrrModel, x: &[f64]) -> Result<f64> {
    Ok(if predict_score(model, x)? > model.threshold() {
        1.0
    } else {
        -1.0
    })
}

/// Scores of raw rows (scaled by the model's scaler first).
pub fn predict_scores(model: &TkrrModel, rows: &Matrix) -> Result<Vec<f64>> {
    model.score_batch_scaled(&model.scale_rows(rows)?)
}

/// Squared loss on scaled `data` plus `ridge <W, W>`.
pub fn objective(model: &TkrrModel, data: &LabeledDataset, ridge: f64) -> Result<f64> {
    let scores = model.score_batch_scaled(data.features())?;
    let loss: f64 = scores
        .iter()
        .zip(data.labels())
        .map(|(s, y)| (s - y).powi(2))
        .sum();
    Ok(loss + ridge * crate::tensor::cpd_inner_product(model.weights(), model.weights())?)
}
