//! The six subcommands. Each writes new files plus a manifest and a short
//! summary on `out`; none modifies its inputs.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use tkrr_core::solver::{finetune_with, predict_scores, FinetuneOptions};
use tkrr_core::{LabeledDataset, TkrrModel};
use tkrr_eval::{pr_auc, roc_auc, EvaluationReport, FoldReport};
use tkrr_signal::io::{read_features, read_recording, write_features, write_recording};
use tkrr_signal::{extract_features, ExtractConfig, FeatureTable, WindowSpec};

use crate::args::{EvaluateArgs, ExtractArgs, FinetuneArgs, InspectArgs, ModelArgs, SynthArgs, TrainArgs};
use crate::error::{CliError, CliResult};
use crate::experiment::{select_threshold, synthesize_cohort, train_model, CohortSpec, ModelSpec};
use crate::manifest::{sidecar, RunManifest};

const SIGNAL_SUFFIX: &str = "_signal.csv";
const ANNOTATION_SUFFIX: &str = "_annotations.csv";

/// File pair for one patient inside a cohort directory.
pub fn recording_paths(dir: &Path, patient: u32) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("patient_{patient:02}{SIGNAL_SUFFIX}")),
        dir.join(format!("patient_{patient:02}{ANNOTATION_SUFFIX}")),
    )
}

pub fn synth(a: &SynthArgs, out: &mut dyn Write) -> CliResult<()> {
    let t = Instant::now();
    if a.seizures_per == 0 {
        return Err(CliError::Usage("--seizures-per must be at least 1".into()));
    }
    let spec = CohortSpec {
        patients: a.patients,
        seizures_per: a.seizures_per,
        duration_s: a.duration,
        seed: a.seed,
    };
    let recs = synthesize_cohort(&spec)?;
    std::fs::create_dir_all(&a.out)?;
    let mut m = RunManifest::new("synth");
    m.set("patients", a.patients)
        .set("seizures_per", a.seizures_per)
        .set("duration_s", a.duration);
    m.seed = Some(a.seed);
    for r in &recs {
        let (sig, ann) = recording_paths(&a.out, r.patient_id());
        write_recording(r, &sig, &ann)?;
        m.output(&sig).output(&ann);
    }
    m.write(&a.out.join("manifest.json"), t.elapsed())?;
    writeln!(out, "wrote {} recordings to {}", recs.len(), a.out.display())?;
    Ok(())
}

/// Patient ids with a signal file in `dir`, ascending.
fn cohort_ids(dir: &Path) -> CliResult<Vec<u32>> {
    let mut ids = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        if let Some(id) = name
            .strip_prefix("patient_")
            .and_then(|s| s.strip_suffix(SIGNAL_SUFFIX))
            .and_then(|s| s.parse::<u32>().ok())
        {
            ids.push(id);
        }
    }
    ids.sort_unstable();
    if ids.is_empty() {
        return Err(CliError::Data(format!(
            "no patient_<id>{SIGNAL_SUFFIX} files in {}",
            dir.display()
        )));
    }
    Ok(ids)
}

pub fn extract(a: &ExtractArgs, out: &mut dyn Write) -> CliResult<()> {
    let t = Instant::now();
    let cfg = ExtractConfig {
        target_hz: a.target_hz,
        band_low_hz: a.band_low,
        band_high_hz: a.band_high,
        band_order: a.band_order,
        notch_hz: a.notch,
        window: WindowSpec {
            length_s: a.window,
            ..WindowSpec::default()
        },
        ..ExtractConfig::default()
    };
    let mut m = RunManifest::new("extract");
    m.set("target_hz", cfg.target_hz)
        .set("band_low_hz", cfg.band_low_hz)
        .set("band_high_hz", cfg.band_high_hz)
        .set("band_order", cfg.band_order)
        .set("notch_hz", cfg.notch_hz)
        .set("notch_q", cfg.notch_q)
        .set("window_s", cfg.window.length_s)
        .set("seizure_overlap", cfg.window.seizure_overlap)
        .set("background_overlap", cfg.window.background_overlap);
    let mut table = FeatureTable::default();
    for id in cohort_ids(&a.input)? {
        let (sig, ann) = recording_paths(&a.input, id);
        let rec = read_recording(&sig, &ann, id)?;
        table.extend(extract_features(&rec, &cfg)?)?;
        m.input(&sig).input(&ann);
    }
    write_features(&table, &a.out)?;
    m.output(&a.out).write(&sidecar(&a.out, ".manifest.json"), t.elapsed())?;
    writeln!(out, "wrote {} rows x {} features to {}", table.len(), table.columns(), a.out.display())?;
    Ok(())
}

fn load_dataset(path: &Path) -> CliResult<LabeledDataset> {
    Ok(read_features(path)?.to_dataset()?)
}

fn load_model(path: &Path) -> CliResult<TkrrModel> {
    let text = std::fs::read_to_string(path)?;
    TkrrModel::from_text(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn check_compatible(model: &TkrrModel, ds: &LabeledDataset) -> CliResult<()> {
    if model.dims() != ds.dims() {
        return Err(CliError::Data(format!(
            "model expects {} features, feature file has {}",
            model.dims(),
            ds.dims()
        )));
    }
    Ok(())
}

fn check_patient(ds: &LabeledDataset, patient: u32) -> CliResult<()> {
    if ds.group_ids().contains(&patient) {
        Ok(())
    } else {
        Err(CliError::Data(format!("unknown patient id {patient}")))
    }
}

fn model_spec(a: &ModelArgs) -> ModelSpec {
    ModelSpec {
        rank: a.rank,
        basis: a.basis,
        lengthscale: a.lengthscale,
        ridge: a.ridge,
        half_width: a.half_width,
        sweeps: a.sweeps,
        seed: a.seed,
    }
}

fn record_model_args(m: &mut RunManifest, a: &ModelArgs) {
    m.set("rank", a.rank)
        .set("ridge", a.ridge)
        .set("lengthscale", a.lengthscale)
        .set("basis", a.basis)
        .set("half_width", a.half_width)
        .set("sweeps", a.sweeps);
    m.seed = Some(a.seed);
}

pub fn train(a: &TrainArgs, out: &mut dyn Write) -> CliResult<()> {
    let t = Instant::now();
    if a.model.rank == 0 || a.model.basis == 0 {
        return Err(CliError::Usage("--rank and --basis must be at least 1".into()));
    }
    let ds = load_dataset(&a.features)?;
    if let Some(p) = a.leave_out_patient {
        check_patient(&ds, p)?;
    }
    let rows: Vec<usize> = (0..ds.len())
        .filter(|&i| Some(ds.group_ids()[i]) != a.leave_out_patient)
        .collect();
    let model = train_model(&ds, &rows, &model_spec(&a.model))?;
    std::fs::write(&a.out, model.to_text())?;

    let history = sidecar(&a.out, ".history.csv");
    let mut csv = String::from("update,dim,objective\n");
    let d = model.dims();
    for (k, v) in model.history().iter().enumerate() {
        let _ = writeln!(csv, "{},{},{:.16e}", k + 1, k % d + 1, v);
    }
    std::fs::write(&history, csv)?;

    let mut m = RunManifest::new("train");
    record_model_args(&mut m, &a.model);
    m.set("leave_out_patient", a.leave_out_patient).set("train_rows", rows.len());
    m.input(&a.features).output(&a.out).output(&history);
    m.write(&sidecar(&a.out, ".manifest.json"), t.elapsed())?;
    writeln!(
        out,
        "trained on {} rows; parameters = {}; threshold = {:.6e}",
        rows.len(),
        model.param_count(),
        model.threshold()
    )?;
    Ok(())
}

/// Rows of `ds` passed through the model's scaler, if it has one.
fn scaled_rows(model: &TkrrModel, ds: &LabeledDataset, rows: &[usize]) -> CliResult<LabeledDataset> {
    let sub = ds.subset(rows);
    let scaled = model.scale_rows(sub.features())?;
    Ok(sub.with_features(scaled)?)
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |x| format!("{x:.16e}"))
}

pub fn finetune(a: &FinetuneArgs, out: &mut dyn Write) -> CliResult<()> {
    let t = Instant::now();
    let source = load_model(&a.model)?;
    let ds = load_dataset(&a.features)?;
    check_compatible(&source, &ds)?;
    check_patient(&ds, a.patient)?;
    let update_dims = match &a.update_dims {
        Some(dims) => {
            if dims.is_empty() || dims.iter().any(|&d| d == 0 || d > source.dims()) {
                return Err(CliError::Usage(format!(
                    "--update-dims entries must lie in 1..={}",
                    source.dims()
                )));
            }
            Some(dims.iter().map(|d| d - 1).collect())
        }
        None => None,
    };
    let fold = tkrr_eval::losi_fold(&ds, a.patient, a.seizure_id)?;
    let train = scaled_rows(&source, &ds, &fold.train)?;
    let test = scaled_rows(&source, &ds, &fold.test)?;

    let opts = FinetuneOptions {
        sweeps: 1,
        max_updates: a.max_updates,
        update_dims,
    };
    let mut curve = String::from("update,dim,objective,auroc,auprc\n");
    let mut failure = None;
    let mut updates = 0;
    let tuned = finetune_with(&source, &train, &opts, |rec, m| {
        updates += 1;
        match m.score_batch_scaled(test.features()) {
            Ok(s) => {
                let _ = writeln!(
                    curve,
                    "{},{},{:.16e},{},{}",
                    updates,
                    rec.dim + 1,
                    rec.objective,
                    fmt_metric(roc_auc(&s, test.labels()).ok()),
                    fmt_metric(pr_auc(&s, test.labels()).ok())
                );
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let tuned = select_threshold(tuned, &train)?;
    std::fs::write(&a.out, tuned.to_text())?;
    let curve_path = a.curve.clone().unwrap_or_else(|| sidecar(&a.out, ".curve.csv"));
    std::fs::write(&curve_path, curve)?;

    let mut m = RunManifest::new("finetune");
    m.set("patient", a.patient)
        .set("seizure_id", a.seizure_id)
        .set("max_updates", a.max_updates)
        .set("update_dims", a.update_dims.clone())
        .set("rank", tuned.rank())
        .set("ridge", tuned.ridge())
        .set("lengthscale", tuned.feature_map().lengthscale())
        .set("train_rows", fold.train.len())
        .set("test_rows", fold.test.len());
    m.input(&a.model).input(&a.features).output(&a.out).output(&curve_path);
    m.write(&sidecar(&a.out, ".manifest.json"), t.elapsed())?;
    writeln!(
        out,
        "fine-tuned on {} rows with {} factor updates; {} held-out rows",
        fold.train.len(),
        updates,
        fold.test.len()
    )?;
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> CliResult<()> {
    let t = Instant::now();
    let model = load_model(&a.model)?;
    let ds = load_dataset(&a.features)?;
    check_compatible(&model, &ds)?;
    if let Some(p) = a.patient {
        check_patient(&ds, p)?;
    }
    let rows: Vec<usize> = (0..ds.len())
        .filter(|&i| !ds.overlap_flags()[i] && a.patient.is_none_or(|p| ds.group_ids()[i] == p))
        .collect();
    if rows.is_empty() {
        return Err(CliError::Data("no non-overlapping rows to evaluate".into()));
    }
    let sub = ds.subset(&rows);
    let scores = predict_scores(&model, sub.features())?;
    let name = a.patient.map_or_else(|| "all".to_string(), |p| format!("patient-{p}"));
    let fold = FoldReport::compute(&name, &scores, sub.labels(), model.threshold())?;
    let report = EvaluationReport::from_folds(vec![fold]);
    let text = report.to_text();
    std::fs::write(&a.report, &text)?;

    let mut m = RunManifest::new("evaluate");
    m.set("patient", a.patient).set("threshold", model.threshold());
    m.input(&a.model).input(&a.features).output(&a.report);
    m.write(&sidecar(&a.report, ".manifest.json"), t.elapsed())?;
    write!(out, "{text}")?;
    Ok(())
}

/// `key = value` summary of a model.
pub fn describe(model: &TkrrModel) -> String {
    let map = model.feature_map();
    let join = |v: Vec<String>| v.join(" ");
    let mut s = String::new();
    let _ = writeln!(s, "dims = {}", model.dims());
    let _ = writeln!(s, "rank = {}", model.rank());
    let _ = writeln!(s, "basis_counts = {}", join(map.basis_counts().iter().map(|m| m.to_string()).collect()));
    let _ = writeln!(s, "half_widths = {}", join(map.half_widths().iter().map(|u| u.to_string()).collect()));
    let _ = writeln!(s, "lengthscale = {}", map.lengthscale());
    let _ = writeln!(s, "ridge = {}", model.ridge());
    let _ = writeln!(s, "parameters = {}", model.param_count());
    let _ = writeln!(s, "threshold = {:e}", model.threshold());
    let _ = writeln!(s, "scaler = {}", if model.scaler().is_some() { "yes" } else { "no" });
    s
}

pub fn inspect(a: &InspectArgs, out: &mut dyn Write) -> CliResult<()> {
    write!(out, "{}", describe(&load_model(&a.model)?))?;
    Ok(())
}
