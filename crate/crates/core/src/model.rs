//! The trained classifier and its text serialization.
//!
//! The on-disk format is line oriented, `key value...`, with every float
//! written to 17 significant digits so that a round trip is exact:
//!
//! ```text
//! format tkrr-model 1
//! dims 2
//! rank 3
//! basis_counts 4 4
//! half_widths 1.25e0 1.25e0
//! lengthscale 6.0000000000000000e-1
//! ridge 1.0000000000000000e-4
//! threshold 0.0000000000000000e0
//! scaler_min -3.0000000000000000e0 ...   (or `scaler none`)
//! scaler_max ...
//! history 2 <v1> <v2>
//! factor 1 <M_1*R values, column-major>
//! factor 2 ...
//! end
//! ```

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::feature_map::FeatureMapConfig;
use crate::scaler::ScalerParams;
use crate::tensor::{cpd_param_count, CpdTensor};
use crate::Matrix;

pub const FORMAT_NAME: &str = "tkrr-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TkrrModel {
    feature_map: FeatureMapConfig,
    weights: CpdTensor,
    ridge: f64,
    scaler: Option<ScalerParams>,
    threshold: f64,
    history: Vec<f64>,
    basis_weights: Vec<Vec<f64>>,
}

impl TkrrModel {
    pub fn new(feature_map: FeatureMapConfig, weights: CpdTensor, ridge: f64) -> Result<Self> {
        if weights.mode_sizes() != feature_map.basis_counts() {
            return Err(Error::Dimension(format!(
                "weight mode sizes {:?} do not match basis counts {:?}",
                weights.mode_sizes(),
                feature_map.basis_counts()
            )));
        }
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::Parameter(format!("ridge must be nonnegative, got {ridge}")));
        }
        let basis_weights = (0..feature_map.dims())
            .map(|d| feature_map.basis_weights(d))
            .collect();
        Ok(Self {
            feature_map,
            weights,
            ridge,
            scaler: None,
            threshold: 0.0,
            history: Vec::new(),
            basis_weights,
        })
    }

    pub fn feature_map(&self) -> &FeatureMapConfig {
        &self.feature_map
    }

    pub fn weights(&self) -> &CpdTensor {
        &self.weights
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn scaler(&self) -> Option<&ScalerParams> {
        self.scaler.as_ref()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn dims(&self) -> usize {
        self.feature_map.dims()
    }

    pub fn rank(&self) -> usize {
        self.weights.rank()
    }

    /// Stored weight count, `R * sum_d M_d`.
    pub fn param_count(&self) -> usize {
        cpd_param_count(&self.weights)
    }

    pub fn with_scaler(mut self, scaler: ScalerParams) -> Result<Self> {
        if scaler.dims() != self.dims() {
            return Err(Error::Dimension(format!(
                "scaler has {} features, model has {} dimensions",
                scaler.dims(),
                self.dims()
            )));
        }
        self.scaler = Some(scaler);
        Ok(self)
    }

    pub fn set_threshold(&mut self, threshold: f64) -> Result<()> {
        if !threshold.is_finite() {
            return Err(Error::Parameter(format!("threshold must be finite, got {threshold}")));
        }
        self.threshold = threshold;
        Ok(())
    }

    pub(crate) fn set_history(&mut self, history: Vec<f64>) {
        self.history = history;
    }

    pub(crate) fn set_weights(&mut self, weights: CpdTensor) {
        debug_assert_eq!(weights.mode_sizes(), self.weights.mode_sizes());
        self.weights = weights;
    }

    /// Score of an input already inside the hyperbox:
    /// `sum_r prod_d phi^(d)(x_d) . w_r^(d)`, in `O(D M R)`.
    pub fn score_scaled(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dims() {
            return Err(Error::Dimension(format!(
                "input has {} features, model has {} dimensions",
                x.len(),
                self.dims()
            )));
        }
        let rank = self.rank();
        let mut acc = vec![1.0; rank];
        let mut phi = Vec::new();
        for (d, &xd) in x.iter().enumerate() {
            self.feature_map.check_domain(xd, d)?;
            let factor = self.weights.factor(d);
            phi.resize(factor.nrows(), 0.0);
            self.feature_map
                .fill_local(xd, d, &self.basis_weights[d], &mut phi);
            for (r, a) in acc.iter_mut().enumerate() {
                let col = factor.column(r);
                let proj: f64 = phi.iter().zip(col.iter()).map(|(p, w)| p * w).sum();
                *a *= proj;
            }
        }
        Ok(acc.iter().sum())
    }

    /// Scores of already-scaled rows. Parallel over rows; results do not
    /// depend on the thread count.
    pub fn score_batch_scaled(&self, rows: &Matrix) -> Result<Vec<f64>> {
        (0..rows.nrows())
            .into_par_iter()
            .map(|n| {
                let x: Vec<f64> = rows.row(n).iter().copied().collect();
                self.score_scaled(&x)
            })
            .collect()
    }

    /// Applies the model's scaler (clamping) if present.
    pub fn scale_rows(&self, rows: &Matrix) -> Result<Matrix> {
        match &self.scaler {
            Some(s) => Ok(s.apply(rows)?.features),
            None => Ok(rows.clone()),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let floats = |v: &mut dyn Iterator<Item = f64>| {
            v.map(fmt_float).collect::<Vec<_>>().join(" ")
        };
        let map = &self.feature_map;
        writeln!(out, "format {FORMAT_NAME} {FORMAT_VERSION}").unwrap();
        writeln!(out, "dims {}", map.dims()).unwrap();
        writeln!(out, "rank {}", self.rank()).unwrap();
        writeln!(
            out,
            "basis_counts {}",
            map.basis_counts()
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        )
        .unwrap();
        writeln!(out, "half_widths {}", floats(&mut map.half_widths().iter().copied())).unwrap();
        writeln!(out, "lengthscale {}", fmt_float(map.lengthscale())).unwrap();
        writeln!(out, "ridge {}", fmt_float(self.ridge)).unwrap();
        writeln!(out, "threshold {}", fmt_float(self.threshold)).unwrap();
        match &self.scaler {
            Some(s) => {
                writeln!(out, "scaler_min {}", floats(&mut s.mins().iter().copied())).unwrap();
                writeln!(out, "scaler_max {}", floats(&mut s.maxs().iter().copied())).unwrap();
            }
            None => writeln!(out, "scaler none").unwrap(),
        }
        let hist = floats(&mut self.history.iter().copied());
        if hist.is_empty() {
            writeln!(out, "history 0").unwrap();
        } else {
            writeln!(out, "history {} {hist}", self.history.len()).unwrap();
        }
        for (d, f) in self.weights.factors().iter().enumerate() {
            writeln!(out, "factor {} {}", d + 1, floats(&mut f.iter().copied())).unwrap();
        }
        writeln!(out, "end").unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (line_no, header) = lines
            .next()
            .ok_or_else(|| Error::FormatVersion("empty model file".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        match parts.as_slice() {
            ["format", name, version] if *name == FORMAT_NAME => {
                if version.parse::<u32>().ok() != Some(FORMAT_VERSION) {
                    return Err(Error::FormatVersion(format!(
                        "{name} version {version} (supported: {FORMAT_VERSION})"
                    )));
                }
            }
            _ => {
                return Err(Error::FormatVersion(format!(
                    "line {line_no}: expected `format {FORMAT_NAME} {FORMAT_VERSION}`"
                )))
            }
        }

        let mut reader = Reader { lines };
        let dims: usize = reader.scalar("dims")?;
        let rank: usize = reader.scalar("rank")?;
        let basis_counts: Vec<usize> = reader.list("basis_counts", Some(dims))?;
        let half_widths: Vec<f64> = reader.list("half_widths", Some(dims))?;
        let lengthscale: f64 = reader.scalar("lengthscale")?;
        let ridge: f64 = reader.scalar("ridge")?;
        let threshold: f64 = reader.scalar("threshold")?;

        let (line, key, rest) = reader.next_entry()?;
        let scaler = match (key, rest.as_slice()) {
            ("scaler", ["none"]) => None,
            ("scaler_min", _) => {
                let mins = parse_all::<f64>(&rest, line)?;
                let maxs: Vec<f64> = reader.list("scaler_max", Some(mins.len()))?;
                Some(ScalerParams::new(mins, maxs)?)
            }
            _ => {
                return Err(Error::Format {
                    line,
                    msg: format!("expected scaler entry, found `{key}`"),
                })
            }
        };

        let (line, key, rest) = reader.next_entry()?;
        if key != "history" || rest.is_empty() {
            return Err(Error::Format {
                line,
                msg: "expected `history <count> ...`".into(),
            });
        }
        let count: usize = parse_one(rest[0], line)?;
        let history = parse_all::<f64>(&rest[1..], line)?;
        if history.len() != count {
            return Err(Error::Format {
                line,
                msg: format!("history declares {count} values, found {}", history.len()),
            });
        }

        let mut factors = Vec::with_capacity(dims);
        for (d, &m) in basis_counts.iter().enumerate() {
            let (line, key, rest) = reader.next_entry()?;
            if key != "factor" || rest.first().and_then(|s| s.parse::<usize>().ok()) != Some(d + 1) {
                return Err(Error::Format {
                    line,
                    msg: format!("expected `factor {}`", d + 1),
                });
            }
            let values = parse_all::<f64>(&rest[1..], line)?;
            if values.len() != m * rank {
                return Err(Error::Format {
                    line,
                    msg: format!("factor {} needs {} values, found {}", d + 1, m * rank, values.len()),
                });
            }
            factors.push(Matrix::from_column_slice(m, rank, &values));
        }
        let (line, key, _) = reader.next_entry()?;
        if key != "end" {
            return Err(Error::Format {
                line,
                msg: format!("expected `end`, found `{key}`"),
            });
        }

        let map = FeatureMapConfig::new(basis_counts, half_widths, lengthscale)?;
        let mut model = TkrrModel::new(map, CpdTensor::new(factors)?, ridge)?;
        if let Some(s) = scaler {
            model = model.with_scaler(s)?;
        }
        model.set_threshold(threshold)?;
        model.history = history;
        Ok(model)
    }
}

/// Formats with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

struct Reader<'a, I: Iterator<Item = (usize, &'a str)>> {
    lines: I,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Reader<'a, I> {
    fn next_entry(&mut self) -> Result<(usize, &'a str, Vec<&'a str>)> {
        let (line, text) = self.lines.next().ok_or(Error::Format {
            line: 0,
            msg: "unexpected end of file".into(),
        })?;
        let mut parts = text.split_whitespace();
        let key = parts.next().unwrap_or("");
        Ok((line, key, parts.collect()))
    }

    fn expect(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (line, found, rest) = self.next_entry()?;
        if found != key {
            return Err(Error::Format {
                line,
                msg: format!("expected `{key}`, found `{found}`"),
            });
        }
        Ok((line, rest))
    }

    fn scalar<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (line, rest) = self.expect(key)?;
        if rest.len() != 1 {
            return Err(Error::Format {
                line,
                msg: format!("`{key}` takes one value"),
            });
        }
        parse_one(rest[0], line)
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str, len: Option<usize>) -> Result<Vec<T>> {
        let (line, rest) = self.expect(key)?;
        let values = parse_all(&rest, line)?;
        if let Some(n) = len {
            if values.len() != n {
                return Err(Error::Format {
                    line,
                    msg: format!("`{key}` needs {n} values, found {}", values.len()),
                });
            }
        }
        Ok(values)
    }
}

fn parse_one<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Format {
        line,
        msg: format!("cannot parse `{s}`"),
    })
}

fn parse_all<T: std::str::FromStr>(parts: &[&str], line: usize) -> Result<Vec<T>> {
    parts.iter().map(|s| parse_one(s, line)).collect()
}
