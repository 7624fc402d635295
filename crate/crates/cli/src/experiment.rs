//! Multi-patient synthetic experiments: cohort generation, patient-
//! independent training, and the warm-start versus random-init comparison
//! on one target patient.

use rayon::prelude::*;
use tkrr_core::solver::{finetune_with, fit, init_factors, predict_scores, FinetuneOptions};
use tkrr_core::{FeatureMapConfig, LabeledDataset, ScalerParams, TkrrModel, TrainConfig};
use tkrr_eval::cv::{losi_fold, seizures_of};
use tkrr_eval::{best_f1_threshold, roc_auc};
use tkrr_signal::synth::{spaced_seizures, synthesize_recording};
use tkrr_signal::{extract_features, ExtractConfig, FeatureTable, Recording};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct CohortSpec {
    pub patients: usize,
    pub seizures_per: usize,
    pub duration_s: f64,
    pub seed: u64,
}

/// Generator seed for patient `p` (1-based) of a cohort.
pub fn patient_seed(seed: u64, patient: u32) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(patient as u64)
}

/// Patients are numbered from 1.
pub fn synthesize_cohort(spec: &CohortSpec) -> CliResult<Vec<Recording>> {
    if spec.patients == 0 {
        return Err(CliError::Usage("need at least one patient".into()));
    }
    (1..=spec.patients as u32)
        .into_par_iter()
        .map(|p| {
            let s = patient_seed(spec.seed, p);
            let seizures = spaced_seizures(spec.seizures_per, spec.duration_s, s)?;
            Ok(synthesize_recording(s, spec.duration_s, &seizures, p)?)
        })
        .collect()
}

pub fn cohort_features(recs: &[Recording], cfg: &ExtractConfig) -> CliResult<FeatureTable> {
    let mut table = FeatureTable::default();
    for r in recs {
        table.extend(extract_features(r, cfg)?)?;
    }
    Ok(table)
}

/// Hyperparameters shared by every model in an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub rank: usize,
    pub basis: usize,
    pub lengthscale: f64,
    pub ridge: f64,
    pub half_width: f64,
    pub sweeps: usize,
    pub seed: u64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            rank: 30,
            basis: 20,
            lengthscale: 0.6,
            ridge: 1e-4,
            half_width: tkrr_core::feature_map::DEFAULT_HALF_WIDTH,
            sweeps: 1,
            seed: 0,
        }
    }
}

impl ModelSpec {
    pub fn feature_map(&self, dims: usize) -> CliResult<FeatureMapConfig> {
        Ok(FeatureMapConfig::uniform(dims, self.basis, self.half_width, self.lengthscale)?)
    }
}

/// Rows of `ds` scaled into the unit box by `scaler` (out-of-range values
/// clamped), plus the clamp count.
pub fn scaled_subset(ds: &LabeledDataset, rows: &[usize], scaler: &ScalerParams) -> CliResult<(LabeledDataset, usize)> {
    let sub = ds.subset(rows);
    let s = scaler.apply(sub.features())?;
    Ok((sub.with_features(s.features)?, s.clamped))
}

/// Fits the scaler and the model on `rows`, then picks the F1-maximizing
/// threshold on the same rows.
pub fn train_model(ds: &LabeledDataset, rows: &[usize], spec: &ModelSpec) -> CliResult<TkrrModel> {
    if rows.is_empty() {
        return Err(CliError::Data("no training rows".into()));
    }
    let scaler = ScalerParams::fit(ds.subset(rows).features())?;
    let (train, _) = scaled_subset(ds, rows, &scaler)?;
    let cfg = TrainConfig::new(spec.rank, spec.ridge).sweeps(spec.sweeps).seed(spec.seed);
    let model = fit(&train, &cfg, &spec.feature_map(ds.dims())?)?.with_scaler(scaler)?;
    select_threshold(model, &train)
}

/// Sets the F1-maximizing threshold on already-scaled data; leaves the
/// model unchanged when the data has a single class.
pub fn select_threshold(mut model: TkrrModel, scaled: &LabeledDataset) -> CliResult<TkrrModel> {
    let scores = model.score_batch_scaled(scaled.features())?;
    if let Ok((t, _)) = best_f1_threshold(&scores, scaled.labels()) {
        model.set_threshold(t)?;
    }
    Ok(model)
}

/// AUROC curves for one target patient.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferResult {
    pub patient: u32,
    pub seizure: u32,
    pub train_rows: usize,
    pub test_rows: usize,
    /// Patient-independent model on the target's test rows.
    pub pi_auroc: f64,
    /// After each fine-tuning update from the PI weights.
    pub warm_curve: Vec<f64>,
    /// After each update from random weights on the same data.
    pub random_curve: Vec<f64>,
}

fn auroc_curve(
    start: &TkrrModel,
    train: &LabeledDataset,
    test: &LabeledDataset,
    updates: usize,
) -> CliResult<Vec<f64>> {
    let mut curve = Vec::with_capacity(updates);
    let mut failure = None;
    let opts = FinetuneOptions {
        sweeps: 0,
        max_updates: Some(updates),
        update_dims: None,
    };
    finetune_with(start, train, &opts, |_, m| match m.score_batch_scaled(test.features()) {
        Ok(s) => curve.push(roc_auc(&s, test.labels()).unwrap_or(f64::NAN)),
        Err(e) => failure = Some(e),
    })?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(curve),
    }
}

/// Trains a PI model on every other patient, then fine-tunes it on the
/// target's first seizure (plus matched background) and, separately,
/// trains from random weights on the same rows. Both curves are scored on
/// the target's remaining non-overlapping windows, scaled with the PI
/// scaler so only the starting weights differ.
pub fn transfer_for_patient(
    ds: &LabeledDataset,
    patient: u32,
    spec: &ModelSpec,
    updates: usize,
) -> CliResult<TransferResult> {
    let others: Vec<usize> = (0..ds.len()).filter(|&i| ds.group_ids()[i] != patient).collect();
    let pi = train_model(ds, &others, spec)?;
    let seizure = *seizures_of(ds, patient)
        .first()
        .ok_or_else(|| CliError::Data(format!("patient {patient} has no seizures")))?;
    let fold = losi_fold(ds, patient, seizure)?;
    let scaler = pi.scaler().expect("train_model attaches a scaler");
    let (train, _) = scaled_subset(ds, &fold.train, scaler)?;
    let (test, _) = scaled_subset(ds, &fold.test, scaler)?;

    let pi_scores = predict_scores(&pi, ds.subset(&fold.test).features())?;
    let pi_auroc = roc_auc(&pi_scores, test.labels())?;
    let warm_curve = auroc_curve(&pi, &train, &test, updates)?;

    let map = pi.feature_map().clone();
    let random = TkrrModel::new(
        map.clone(),
        init_factors(&TrainConfig::new(spec.rank, spec.ridge).seed(spec.seed ^ 0xabcd), &map)?,
        spec.ridge,
    )?;
    let random_curve = auroc_curve(&random, &train, &test, updates)?;
    Ok(TransferResult {
        patient,
        seizure,
        train_rows: fold.train.len(),
        test_rows: fold.test.len(),
        pi_auroc,
        warm_curve,
        random_curve,
    })
}

/// First update count (1-based) at which the mean random-init curve
/// reaches `target`, if it does.
pub fn updates_to_reach(results: &[TransferResult], target: f64) -> Option<usize> {
    let len = results.iter().map(|r| r.random_curve.len()).min()?;
    (0..len)
        .find(|&k| results.iter().map(|r| r.random_curve[k]).sum::<f64>() / results.len() as f64 >= target)
        .map(|k| k + 1)
}
