//! Report documents, model files and experiment tables.
//!
//! A report serializes either as one JSON object or as a long CSV table with
//! columns `section,key,index,value`, one row per scalar or array element.
//! Both forms round-trip exactly: reals are written in shortest round-trip
//! form and absent optional values as `null` / an empty cell.

use std::io::{Read, Write};

use labelshift::experiment::{ExperimentKind, ResultRow};
use labelshift::{LabelSpace, ShiftReport, SoftmaxModel, WeightEstimate};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};
use crate::predictions::csv_err;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsSection {
    pub w: Vec<f64>,
    pub w_raw: Vec<f64>,
    pub mu_y: Vec<f64>,
    pub sigma_min: f64,
    pub fallback: bool,
    pub clipped: Vec<bool>,
    pub bound: Option<f64>,
}

impl From<&WeightEstimate> for WeightsSection {
    fn from(e: &WeightEstimate) -> Self {
        WeightsSection {
            w: e.w.clone(),
            w_raw: e.w_raw.clone(),
            mu_y: e.mu_y.clone(),
            sigma_min: e.sigma_min,
            fallback: e.fallback,
            clipped: e.clipped.clone(),
            bound: e.bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSection {
    pub method: String,
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub n: usize,
    pub m: usize,
}

impl From<&ShiftReport> for DetectionSection {
    fn from(r: &ShiftReport) -> Self {
        DetectionSection {
            method: r.method.name().to_string(),
            statistic: r.statistic,
            p_value: r.p_value,
            alpha: r.alpha,
            reject: r.reject,
            n: r.sample_sizes.0,
            m: r.sample_sizes.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionSection {
    pub reweighted: bool,
    pub baseline_accuracy: Option<f64>,
    pub target_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaSection {
    pub command: String,
    pub k: usize,
    pub seed: Option<u64>,
    pub version: String,
    pub core_version: String,
    /// Seconds since the epoch, taken from `SOURCE_DATE_EPOCH` when set so
    /// that reruns stay byte-identical.
    pub created: Option<u64>,
}

impl MetaSection {
    pub fn new(command: &str, space: LabelSpace, seed: Option<u64>) -> Self {
        MetaSection {
            command: command.to_string(),
            k: space.k(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            core_version: labelshift::VERSION.to_string(),
            created: std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub weights: Option<WeightsSection>,
    pub detection: Option<DetectionSection>,
    pub correction: Option<CorrectionSection>,
    pub meta: MetaSection,
}

impl ReportDocument {
    pub fn new(meta: MetaSection) -> Self {
        ReportDocument { weights: None, detection: None, correction: None, meta }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Data(format!("report: {e}")))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let value = serde_json::to_value(self).expect("report serializes");
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["section", "key", "index", "value"]).map_err(csv_err)?;
        for (section, body) in value.as_object().expect("object") {
            let Value::Object(fields) = body else { continue };
            for (key, v) in fields {
                match v {
                    Value::Array(items) => {
                        for (i, item) in items.iter().enumerate() {
                            w.write_record([section, key, &i.to_string(), &scalar_text(item)]).map_err(csv_err)?;
                        }
                    }
                    _ => w.write_record([section, key, "", &scalar_text(v)]).map_err(csv_err)?,
                }
            }
        }
        w.flush().map_err(|e| CliError::Data(e.to_string()))?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8")
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut root = Map::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != 4 {
                return Err(CliError::Data("report: expected 4 columns".into()));
            }
            let (section, key, index, text) = (&rec[0], &rec[1], &rec[2], &rec[3]);
            let fields = root
                .entry(section.to_string())
                .or_insert_with(|| Value::Object(Map::new()))
                .as_object_mut()
                .ok_or_else(|| CliError::Data("report: bad section".into()))?;
            let value = scalar_value(text);
            if index.is_empty() {
                fields.insert(key.to_string(), value);
            } else {
                let i: usize = index.parse().map_err(|_| CliError::Data(format!("report: bad index `{index}`")))?;
                let arr = fields
                    .entry(key.to_string())
                    .or_insert_with(|| Value::Array(Vec::new()))
                    .as_array_mut()
                    .ok_or_else(|| CliError::Data(format!("report: `{key}` is both scalar and array")))?;
                if i != arr.len() {
                    return Err(CliError::Data(format!("report: `{key}` index {i} out of order")));
                }
                arr.push(value);
            }
        }
        for section in ["weights", "detection", "correction"] {
            root.entry(section).or_insert(Value::Null);
        }
        serde_json::from_value(Value::Object(root)).map_err(|e| CliError::Data(format!("report: {e}")))
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Inverse of [`scalar_text`]: empty is null, JSON literals keep their type,
/// anything else is a string.
fn scalar_value(text: &str) -> Value {
    if text.is_empty() {
        return Value::Null;
    }
    match serde_json::from_str::<Value>(text) {
        Ok(v @ (Value::Bool(_) | Value::Number(_))) => v,
        _ => Value::String(text.to_string()),
    }
}

/// Parameters of a softmax model; `weights` is row-major `k × d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub k: usize,
    pub d: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ModelDocument {
    pub fn from_model(m: &SoftmaxModel) -> Self {
        ModelDocument {
            k: m.space().k(),
            d: m.d(),
            weights: m.weights().to_vec(),
            bias: m.bias().to_vec(),
        }
    }

    pub fn into_model(self) -> Result<SoftmaxModel> {
        Ok(SoftmaxModel::from_parts(LabelSpace::new(self.k)?, self.d, self.weights, self.bias)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Data(format!("model: {e}")))
    }
}

/// One experiment row as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub kind: String,
    pub shift: String,
    pub class: Option<usize>,
    pub parameter: f64,
    pub point: usize,
    pub replication: usize,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub mse_w: Option<f64>,
    pub mse_mu: Option<f64>,
    pub sigma_min: Option<f64>,
    pub p_value: Option<f64>,
    pub reject: Option<bool>,
    pub acc_source: Option<f64>,
    pub acc_baseline: Option<f64>,
    pub acc_corrected: Option<f64>,
}

pub fn kind_name(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Estimation => "estimation",
        ExperimentKind::Detection => "detection",
        ExperimentKind::Correction => "correction",
    }
}

impl TableRow {
    pub fn new(kind: ExperimentKind, r: &ResultRow) -> Self {
        TableRow {
            kind: kind_name(kind).to_string(),
            shift: r.shift.kind_name().to_string(),
            class: r.shift.class(),
            parameter: r.shift.parameter(),
            point: r.point,
            replication: r.replication,
            n: r.n,
            m: r.m,
            seed: r.seed,
            mse_w: r.mse_w,
            mse_mu: r.mse_mu,
            sigma_min: r.sigma_min,
            p_value: r.p_value,
            reject: r.reject,
            acc_source: r.acc_source,
            acc_baseline: r.acc_baseline,
            acc_corrected: r.acc_corrected,
        }
    }
}

pub fn write_table_csv<W: Write>(out: W, rows: &[TableRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}

pub fn read_table_csv<R: Read>(reader: R) -> Result<Vec<TableRow>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err)
}

pub fn table_json(rows: &[TableRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("table serializes");
    s.push('\n');
    s
}
