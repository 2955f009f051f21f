//! Prediction files: comma-separated, header required.
//!
//! Hard schema: `y_pred` and optionally `y_true`. Soft schema: `p0..p{k-1}`
//! and optionally `y_true`. Column order is free. A file with `y_true` loads
//! as a [`SourceEval`], otherwise as a [`TargetEval`].

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use labelshift::{LabelSpace, Predictions, SourceEval, TargetEval};

use crate::error::{CliError, Result};

/// Slack allowed on a probability row before it is rescaled onto the simplex.
pub const SIMPLEX_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum LoadedPredictions {
    Source(SourceEval),
    Target(TargetEval),
}

impl LoadedPredictions {
    pub fn preds(&self) -> &Predictions {
        match self {
            LoadedPredictions::Source(s) => s.preds(),
            LoadedPredictions::Target(t) => t.preds(),
        }
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match self {
            LoadedPredictions::Source(s) => Some(s.labels()),
            LoadedPredictions::Target(_) => None,
        }
    }

    pub fn len(&self) -> usize {
        self.preds().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

enum Schema {
    Hard { pred: usize },
    Soft { cols: Vec<usize> },
}

fn schema(header: &csv::StringRecord, k: usize, path: &Path) -> Result<(Schema, Option<usize>)> {
    let mut truth = None;
    let mut pred = None;
    let mut probs = vec![None; k];
    for (i, name) in header.iter().enumerate() {
        let slot = match name {
            "y_true" => &mut truth,
            "y_pred" => &mut pred,
            _ => match name.strip_prefix('p').and_then(|s| s.parse::<usize>().ok()) {
                Some(c) if c < k => &mut probs[c],
                Some(c) => {
                    return Err(CliError::parse(path, 1, format!("column `{name}` needs k > {c}")));
                }
                None => return Err(CliError::parse(path, 1, format!("unknown column `{name}`"))),
            },
        };
        if slot.replace(i).is_some() {
            return Err(CliError::parse(path, 1, format!("duplicate column `{name}`")));
        }
    }
    let n_probs = probs.iter().flatten().count();
    match (pred, n_probs) {
        (Some(p), 0) => Ok((Schema::Hard { pred: p }, truth)),
        (None, n) if n == k => Ok((Schema::Soft { cols: probs.into_iter().flatten().collect() }, truth)),
        (None, 0) => Err(CliError::parse(path, 1, "no `y_pred` or probability columns")),
        (None, n) => Err(CliError::parse(path, 1, format!("{n} probability columns for k = {k}"))),
        (Some(_), _) => Err(CliError::parse(path, 1, "both `y_pred` and probability columns")),
    }
}

fn parse_label(field: &str, space: LabelSpace, path: &Path, line: u64) -> Result<usize> {
    let label: usize = field
        .parse()
        .map_err(|_| CliError::parse(path, line, format!("`{field}` is not a class index")))?;
    if label >= space.k() {
        return Err(CliError::parse(path, line, format!("label {label} out of range for k = {}", space.k())));
    }
    Ok(label)
}

/// Parses a prediction table; `path` only labels error messages.
pub fn read_predictions<R: Read>(reader: R, path: &Path, space: LabelSpace) -> Result<LoadedPredictions> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| CliError::parse(path, 1, e.to_string()))?
        .clone();
    let k = space.k();
    let (schema, truth) = schema(&header, k, path)?;

    let mut labels = Vec::new();
    let mut hard = Vec::new();
    let mut soft = Vec::new();
    let mut row = vec![0.0; k];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if let Some(t) = truth {
            labels.push(parse_label(&rec[t], space, path, line)?);
        }
        match &schema {
            Schema::Hard { pred } => hard.push(parse_label(&rec[*pred], space, path, line)?),
            Schema::Soft { cols } => {
                for (v, &c) in row.iter_mut().zip(cols) {
                    let field = &rec[c];
                    *v = field
                        .parse()
                        .ok()
                        .filter(|x: &f64| x.is_finite() && *x >= 0.0)
                        .ok_or_else(|| CliError::parse(path, line, format!("`{field}` is not a probability")))?;
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > SIMPLEX_TOL {
                    return Err(CliError::parse(path, line, format!("probabilities sum to {sum}, not 1")));
                }
                soft.extend(row.iter().map(|v| v / sum));
            }
        }
    }
    let preds = match schema {
        Schema::Hard { .. } => Predictions::hard(hard, space)?,
        Schema::Soft { .. } => Predictions::soft_flat(soft, space)?,
    };
    if preds.is_empty() {
        return Err(CliError::Data(format!("{}: no prediction rows", path.display())));
    }
    Ok(match truth {
        Some(_) => LoadedPredictions::Source(SourceEval::new(preds, labels, space)?),
        None => LoadedPredictions::Target(TargetEval::new(preds, space)?),
    })
}

pub fn load_predictions(path: &Path, space: LabelSpace) -> Result<LoadedPredictions> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_predictions(file, path, space)
}

/// Writes `preds` under the schema matching its mode; reals are printed in
/// shortest round-trip form.
pub fn write_predictions<W: Write>(out: W, preds: &Predictions, labels: Option<&[usize]>) -> Result<()> {
    if let Some(l) = labels {
        if l.len() != preds.len() {
            return Err(CliError::Data(format!("{} labels for {} predictions", l.len(), preds.len())));
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = Vec::new();
    if labels.is_some() {
        header.push("y_true".into());
    }
    match preds {
        Predictions::Hard(_) => header.push("y_pred".into()),
        Predictions::Soft { k, .. } => header.extend((0..*k).map(|c| format!("p{c}"))),
    }
    w.write_record(&header).map_err(csv_err)?;
    let mut rec: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..preds.len() {
        rec.clear();
        if let Some(l) = labels {
            rec.push(l[i].to_string());
        }
        match preds {
            Predictions::Hard(p) => rec.push(p[i].to_string()),
            Predictions::Soft { k, probs } => rec.extend(probs[i * k..(i + 1) * k].iter().map(f64::to_string)),
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> CliError {
    CliError::Data(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use labelshift::PredictionMode;

    fn read(text: &str, k: usize) -> Result<LoadedPredictions> {
        read_predictions(text.as_bytes(), Path::new("t.csv"), LabelSpace::new(k).unwrap())
    }

    #[test]
    fn hard_source() {
        let p = read("y_true,y_pred\n0,0\n1,0\n", 2).unwrap();
        match p {
            LoadedPredictions::Source(s) => {
                assert_eq!(s.n(), 2);
                assert_eq!(s.preds().mode(), PredictionMode::Hard);
                assert_eq!(s.labels(), &[0, 1]);
            }
            _ => panic!("expected source"),
        }
    }

    #[test]
    fn soft_target() {
        let p = read("p0,p1\n0.7,0.3\n", 2).unwrap();
        assert!(matches!(&p, LoadedPredictions::Target(t) if t.m() == 1));
        assert_eq!(p.preds().mode(), PredictionMode::Soft);
    }

    #[test]
    fn off_simplex_names_line() {
        let err = read("p0,p1\n0.7,0.4\n", 2).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 2, .. }), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn small_slack_is_rescaled() {
        let p = read("p1,p0\n0.3000004,0.7\n", 2).unwrap();
        match p.preds() {
            Predictions::Soft { probs, .. } => {
                assert!((probs[0] + probs[1] - 1.0).abs() < 1e-15);
                assert!(probs[0] > probs[1]);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(read("y_true,y_pred\n0,2\n", 2), Err(CliError::Parse { line: 2, .. })));
        assert!(matches!(read("y_pred\n0\n1.5\n", 2), Err(CliError::Parse { line: 3, .. })));
        assert!(read("y_pred,p0,p1\n0,0.5,0.5\n", 2).is_err());
        assert!(read("p0\n1\n", 2).is_err());
        assert!(read("y_pred,extra\n0,1\n", 2).is_err());
        assert!(read("y_pred\n", 2).is_err());
        assert!(matches!(read("y_pred\n0\n0,1\n", 2), Err(CliError::Parse { line: 3, .. })));
    }
}
