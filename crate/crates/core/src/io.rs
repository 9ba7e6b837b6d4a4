//! Dataset input and report output.
//!
//! CSV input needs a header with `index` and `value` columns and an optional
//! `weight` column; lines starting with `#` are comments and are kept as the
//! provenance note. JSON input is an object with `index`, `value` and optional
//! `weight` arrays.
//!
//! Every float in a report is written with 17 significant digits so that a
//! write, read, write cycle reproduces the same bytes.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::generalized::{Fit, GeneralizedModel, PenaltyScale};
use crate::pava::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Json,
}

impl DataFormat {
    /// `.json` means JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => DataFormat::Json,
            _ => DataFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub index: Vec<f64>,
    pub value: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub provenance: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.value.is_empty() {
            return Err(Error::EmptyInput);
        }
        if self.index.len() != self.value.len() {
            return Err(Error::Schema(format!(
                "index has {} entries but value has {}",
                self.index.len(),
                self.value.len()
            )));
        }
        for pair in self.index.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::Schema(format!(
                    "index must be strictly increasing ({} then {})",
                    pair[0], pair[1]
                )));
            }
        }
        if let Some(w) = &self.weight {
            if w.len() != self.value.len() {
                return Err(Error::Schema(format!(
                    "weight has {} entries but value has {}",
                    w.len(),
                    self.value.len()
                )));
            }
            if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
                return Err(Error::Schema(format!(
                    "weight {v} at row {} is not strictly positive",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 over the numeric content, independent of input formatting.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for i in 0..self.len() {
            let w = self.weight.as_ref().map_or(1.0, |w| w[i]);
            h.update(self.index[i].to_le_bytes());
            h.update(self.value[i].to_le_bytes());
            h.update(w.to_le_bytes());
        }
        let bytes = h.finalize();
        let mut out = String::with_capacity(64);
        for b in bytes {
            let _ = write!(out, "{b:02x}");
        }
        out
    }
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_dataset_from(file, DataFormat::from_path(path))
}

pub fn read_dataset_from<R: Read>(reader: R, format: DataFormat) -> Result<Dataset> {
    let ds = match format {
        DataFormat::Csv => read_csv(reader)?,
        DataFormat::Json => {
            let ds: Dataset = serde_json::from_reader(reader).map_err(|e| {
                if e.is_data() {
                    Error::Schema(e.to_string())
                } else {
                    Error::Parse {
                        line: e.line(),
                        message: e.to_string(),
                    }
                }
            })?;
            ds
        }
    };
    ds.validate()?;
    Ok(ds)
}

fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    let table = read_table_from(reader)?;
    let col = |name: &str| table.headers.iter().position(|h| h == name);
    let index = col("index").ok_or_else(|| Error::Schema("missing column `index`".into()))?;
    let value = col("value").ok_or_else(|| Error::Schema("missing column `value`".into()))?;
    let weight = col("weight");
    Ok(Dataset {
        index: table.rows.iter().map(|r| r[index]).collect(),
        value: table.rows.iter().map(|r| r[value]).collect(),
        weight: weight.map(|w| table.rows.iter().map(|r| r[w]).collect()),
        provenance: table.comments.join("\n"),
    })
}

/// A numeric CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub comments: Vec<String>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_table_from(file)
}

pub fn read_table_from<R: Read>(reader: R) -> Result<Table> {
    let mut comments = Vec::new();
    let mut body = String::new();
    // Comments are stripped here so that csv line numbers can be mapped back.
    let mut line_map = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if let Some(c) = t.strip_prefix('#') {
            comments.push(c.trim().to_string());
        } else if !t.is_empty() {
            body.push_str(t);
            body.push('\n');
            line_map.push(i + 1);
        }
    }
    let src_line = |k: usize| line_map.get(k).copied().unwrap_or(line_map.len() + comments.len() + 1);
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: src_line(0),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Schema("missing header row".into()));
    }
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = src_line(k + 1);
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("`{f}` is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table {
        headers,
        rows,
        comments,
    })
}

/// Renders a float with 17 significant digits; infinities as `inf`/`-inf`.
pub fn fmt17(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn raw_number(v: f64) -> Box<RawValue> {
    let text = if v.is_finite() {
        fmt17(v)
    } else {
        format!("\"{}\"", fmt17(v))
    };
    RawValue::from_string(text).expect("formatted float is valid JSON")
}

mod f17 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        raw_number(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        let n = NumOrText::deserialize(d)?;
        n.value().map_err(de::Error::custom)
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(super) enum NumOrText {
        Num(f64),
        Text(String),
    }

    impl NumOrText {
        pub(super) fn value(&self) -> std::result::Result<f64, String> {
            match self {
                NumOrText::Num(v) => Ok(*v),
                NumOrText::Text(t) => match t.as_str() {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    "nan" => Ok(f64::NAN),
                    other => Err(format!("`{other}` is not a number")),
                },
            }
        }
    }
}

mod f17_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(|x| raw_number(*x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        Vec::<f17::NumOrText>::deserialize(d)?
            .iter()
            .map(|n| n.value().map_err(de::Error::custom))
            .collect()
    }
}

mod f17_opt {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.map(raw_number).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
        Option::<f17::NumOrText>::deserialize(d)?
            .map(|n| n.value().map_err(de::Error::custom))
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotRecord {
    #[serde(with = "f17")]
    pub lambda: f64,
    pub pieces: usize,
    pub clusters: usize,
    #[serde(with = "f17_opt")]
    pub criterion: Option<f64>,
    #[serde(with = "f17_vec")]
    pub eta: Vec<f64>,
    #[serde(with = "f17_vec")]
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub tool_version: String,
    pub input_digest: String,
    pub family: String,
    #[serde(with = "f17")]
    pub shape: f64,
    pub direction: String,
    pub penalty_scale: String,
    pub criterion: Option<String>,
    #[serde(with = "f17_opt")]
    pub selected_lambda: Option<f64>,
    #[serde(with = "f17_vec")]
    pub index: Vec<f64>,
    pub knots: Vec<KnotRecord>,
}

impl KnotRecord {
    pub fn from_fit(fit: &Fit, criterion: Option<f64>) -> Self {
        KnotRecord {
            lambda: fit.lambda,
            pieces: fit.pieces,
            clusters: fit.clusters,
            criterion,
            eta: fit.eta.clone(),
            theta: fit.theta.clone(),
        }
    }
}

impl PathReport {
    /// Empty report describing `model`; records are added with [`PathReport::push`].
    pub fn for_model(model: &GeneralizedModel, index: Vec<f64>, input_digest: String) -> Self {
        PathReport {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digest,
            family: model.family().name().to_string(),
            shape: model.family().shape,
            direction: match model.direction() {
                Direction::Increasing => "inc",
                Direction::Decreasing => "dec",
            }
            .to_string(),
            penalty_scale: match model.penalty_scale() {
                PenaltyScale::Natural => "natural",
                PenaltyScale::MeanWeight => "mean-weight",
            }
            .to_string(),
            criterion: None,
            selected_lambda: None,
            index,
            knots: Vec::new(),
        }
    }

    pub fn push(&mut self, fit: &Fit, criterion: Option<f64>) {
        self.knots.push(KnotRecord::from_fit(fit, criterion));
    }

    /// Record at `lambda`, if present.
    pub fn record(&self, lambda: f64) -> Option<&KnotRecord> {
        self.knots.iter().find(|k| k.lambda == lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    CsvLong,
}

pub fn write_report<W: Write>(report: &PathReport, format: ReportFormat, mut out: W) -> Result<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report).map_err(|e| Error::Io(e.to_string()))?;
            out.write_all(b"\n")?;
        }
        ReportFormat::CsvLong => {
            let mut w = csv::Writer::from_writer(out);
            let io = |e: csv::Error| Error::Io(e.to_string());
            w.write_record(["lambda", "index", "eta", "theta"]).map_err(io)?;
            for k in &report.knots {
                let lam = fmt17(k.lambda);
                for (i, (e, t)) in k.eta.iter().zip(&k.theta).enumerate() {
                    let idx = report.index.get(i).copied().unwrap_or((i + 1) as f64);
                    w.write_record([lam.as_str(), &fmt17(idx), &fmt17(*e), &fmt17(*t)])
                        .map_err(io)?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn read_report<R: Read>(reader: R) -> Result<PathReport> {
    serde_json::from_reader(reader).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

/// Flat `key = value` configuration with `#` comments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeyValueConfig {
    pub entries: Vec<(String, String)>,
}

impl KeyValueConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.split('#').next().unwrap_or("").trim();
            if t.is_empty() {
                continue;
            }
            let (k, v) = t.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected `key = value`, got `{t}`"),
            })?;
            let k = k.trim().to_ascii_lowercase();
            if k.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "empty key".into(),
                });
            }
            if entries.iter().any(|(e, _)| *e == k) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("duplicate key `{k}`"),
                });
            }
            entries.push((k, v.trim().to_string()));
        }
        Ok(KeyValueConfig { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Schema(format!("`{key}` must be a number, got `{v}`")))
            })
            .transpose()
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::Schema(format!("`{key}` must be a nonnegative integer, got `{v}`")))
            })
            .transpose()
    }

    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Schema(format!("`{key}` entry `{s}` is not a number")))
                    })
                    .collect()
            })
            .transpose()
    }
}
