//! CSV formats for recordings, annotations and feature tables.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::{FeatureRow, FeatureTable};
use crate::recording::{Annotation, Recording, SegmentLabel};

const FEATURE_META: [&str; 4] = ["patient_id", "seizure_id", "label", "overlap"];

fn csv_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Csv {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e.to_string()))
}

fn parse<T: std::str::FromStr>(path: &Path, row: usize, field: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| csv_err(path, format!("row {row}: bad {field} value {value:?}")))
}

fn header(rdr: &mut csv::Reader<File>, path: &Path) -> Result<Vec<String>> {
    Ok(rdr
        .headers()
        .map_err(|e| csv_err(path, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect())
}

/// Reads `time_s,ch1,...` plus the sidecar annotations. The sample rate is
/// inferred from the time column (rounded to 1 microhertz).
pub fn read_recording(signal: &Path, annotations: &Path, patient_id: u32) -> Result<Recording> {
    let mut rdr = reader(signal)?;
    let head = header(&mut rdr, signal)?;
    if head.len() < 2 || head[0] != "time_s" {
        return Err(csv_err(signal, "header must be time_s,ch1,..."));
    }
    let c = head.len() - 1;
    let mut times = Vec::new();
    let mut channels = vec![Vec::new(); c];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(signal, e.to_string()))?;
        if rec.len() != c + 1 {
            return Err(csv_err(signal, format!("row {}: expected {} fields", i + 1, c + 1)));
        }
        times.push(parse::<f64>(signal, i + 1, "time_s", &rec[0])?);
        for (ch, v) in channels.iter_mut().zip(rec.iter().skip(1)) {
            let x: f64 = parse(signal, i + 1, "sample", v)?;
            if !x.is_finite() {
                return Err(csv_err(signal, format!("row {}: non-finite sample", i + 1)));
            }
            ch.push(x);
        }
    }
    if times.len() < 2 {
        return Err(csv_err(signal, "need at least two samples to infer the rate"));
    }
    let span = times[times.len() - 1] - times[0];
    if span <= 0.0 {
        return Err(csv_err(signal, "time column is not increasing"));
    }
    let fs = (((times.len() - 1) as f64 / span) * 1e6).round() / 1e6;
    let anns = read_annotations(annotations)?;
    Recording::new(channels, fs, anns, patient_id)
}

pub fn read_annotations(path: &Path) -> Result<Vec<Annotation>> {
    let mut rdr = reader(path)?;
    let head = header(&mut rdr, path)?;
    if head != ["start_s", "end_s", "label", "seizure_id"] {
        return Err(csv_err(path, "header must be start_s,end_s,label,seizure_id"));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e.to_string()))?;
        let label = SegmentLabel::parse(&rec[2])
            .ok_or_else(|| csv_err(path, format!("row {}: unknown label {:?}", i + 1, &rec[2])))?;
        out.push(Annotation {
            start_s: parse(path, i + 1, "start_s", &rec[0])?,
            end_s: parse(path, i + 1, "end_s", &rec[1])?,
            label,
            seizure_id: parse(path, i + 1, "seizure_id", &rec[3])?,
        });
    }
    Ok(out)
}

pub fn write_recording(rec: &Recording, signal: &Path, annotations: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(signal).map_err(|e| csv_err(signal, e.to_string()))?;
    let mut head = vec!["time_s".to_string()];
    head.extend((1..=rec.channel_count()).map(|c| format!("ch{c}")));
    w.write_record(&head).map_err(|e| csv_err(signal, e.to_string()))?;
    let fs = rec.sample_rate();
    for i in 0..rec.samples() {
        let mut row = vec![format!("{}", i as f64 / fs)];
        row.extend(rec.channels().iter().map(|c| format!("{}", c[i])));
        w.write_record(&row).map_err(|e| csv_err(signal, e.to_string()))?;
    }
    w.flush()?;
    write_annotations(rec.annotations(), annotations)
}

pub fn write_annotations(anns: &[Annotation], path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    writeln!(f, "start_s,end_s,label,seizure_id")?;
    for a in anns {
        writeln!(f, "{},{},{},{}", a.start_s, a.end_s, a.label.as_str(), a.seizure_id)?;
    }
    Ok(())
}

pub fn feature_header(columns: usize) -> Vec<String> {
    let mut head: Vec<String> = FEATURE_META.iter().map(|s| s.to_string()).collect();
    head.extend((1..=columns).map(|i| format!("f{i:02}")));
    head
}

/// Floats are written with 17 significant digits.
pub fn write_features(table: &FeatureTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e.to_string()))?;
    w.write_record(feature_header(table.columns()))
        .map_err(|e| csv_err(path, e.to_string()))?;
    for r in &table.rows {
        let mut row = vec![
            r.patient_id.to_string(),
            r.seizure_id.to_string(),
            format!("{}", r.label as i32),
            u8::from(r.overlap).to_string(),
        ];
        row.extend(r.features.iter().map(|v| format!("{v:.16e}")));
        w.write_record(&row).map_err(|e| csv_err(path, e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features(path: &Path) -> Result<FeatureTable> {
    let mut rdr = reader(path)?;
    let head = header(&mut rdr, path)?;
    if head.len() <= FEATURE_META.len() || head[..4] != FEATURE_META {
        return Err(csv_err(path, "header must be patient_id,seizure_id,label,overlap,f01,..."));
    }
    let d = head.len() - 4;
    if head[4..] != feature_header(d)[4..] {
        return Err(csv_err(path, "feature columns must be named f01, f02, ..."));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e.to_string()))?;
        let n = i + 1;
        if rec.len() != d + 4 {
            return Err(csv_err(path, format!("row {n}: expected {} fields", d + 4)));
        }
        let label: i32 = parse(path, n, "label", &rec[2])?;
        if label != 1 && label != -1 {
            return Err(csv_err(path, format!("row {n}: label must be 1 or -1")));
        }
        let overlap = match &rec[3] {
            "0" | "false" => false,
            "1" | "true" => true,
            other => return Err(csv_err(path, format!("row {n}: bad overlap flag {other:?}"))),
        };
        let features = rec
            .iter()
            .skip(4)
            .map(|v| parse::<f64>(path, n, "feature", v))
            .collect::<Result<Vec<_>>>()?;
        if features.iter().any(|v| !v.is_finite()) {
            return Err(csv_err(path, format!("row {n}: non-finite feature")));
        }
        rows.push(FeatureRow {
            patient_id: parse(path, n, "patient_id", &rec[0])?,
            seizure_id: parse(path, n, "seizure_id", &rec[1])?,
            label: label as f64,
            overlap,
            features,
        });
    }
    Ok(FeatureTable { rows })
}
