//! Feature tables: header `y,x0..x{d-1}` for labeled data, `x0..x{d-1}`
//! for unlabeled data.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use labelshift::{Dataset, Features, LabelSpace};

use crate::error::{CliError, Result};
use crate::predictions::csv_err;

#[derive(Debug, Clone, PartialEq)]
pub enum TableData {
    Labeled(Dataset),
    Unlabeled(Features),
}

impl TableData {
    pub fn features(&self) -> &Features {
        match self {
            TableData::Labeled(d) => d.features(),
            TableData::Unlabeled(f) => f,
        }
    }

    pub fn labeled(self, path: &Path) -> Result<Dataset> {
        match self {
            TableData::Labeled(d) => Ok(d),
            TableData::Unlabeled(_) => Err(CliError::Data(format!("{}: no `y` column", path.display()))),
        }
    }
}

pub fn read_table<R: Read>(reader: R, path: &Path, space: LabelSpace) -> Result<TableData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| CliError::parse(path, 1, e.to_string()))?
        .clone();
    let labeled = header.get(0) == Some("y");
    let offset = usize::from(labeled);
    let d = header.len() - offset;
    for (j, name) in header.iter().skip(offset).enumerate() {
        if name != format!("x{j}") {
            return Err(CliError::parse(path, 1, format!("expected column `x{j}`, found `{name}`")));
        }
    }
    if d == 0 {
        return Err(CliError::parse(path, 1, "no feature columns"));
    }
    let mut labels = Vec::new();
    let mut data = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if labeled {
            let label: usize = rec[0]
                .parse()
                .ok()
                .filter(|&l| l < space.k())
                .ok_or_else(|| CliError::parse(path, line, format!("bad label `{}` for k = {}", &rec[0], space.k())))?;
            labels.push(label);
        }
        for field in rec.iter().skip(offset) {
            let x: f64 = field
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| CliError::parse(path, line, format!("`{field}` is not a finite number")))?;
            data.push(x);
        }
    }
    let rows = data.len() / d;
    let features = Features::new(rows, d, data)?;
    Ok(if labeled {
        TableData::Labeled(Dataset::new(features, labels, space)?)
    } else {
        TableData::Unlabeled(features)
    })
}

pub fn load_table(path: &Path, space: LabelSpace) -> Result<TableData> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_table(file, path, space)
}

pub fn write_table<W: Write>(out: W, features: &Features, labels: Option<&[usize]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = Vec::new();
    if labels.is_some() {
        header.push("y".into());
    }
    header.extend((0..features.cols()).map(|j| format!("x{j}")));
    w.write_record(&header).map_err(csv_err)?;
    let mut rec = Vec::with_capacity(header.len());
    for (i, row) in features.iter_rows().enumerate() {
        rec.clear();
        if let Some(l) = labels {
            rec.push(l[i].to_string());
        }
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}

pub fn write_dataset<W: Write>(out: W, data: &Dataset) -> Result<()> {
    write_table(out, data.features(), Some(data.labels()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> LabelSpace {
        LabelSpace::new(3).unwrap()
    }

    #[test]
    fn labeled_round_trip() {
        let text = "y,x0,x1\n0,0.5,-1\n2,1e-300,3.25\n";
        let t = read_table(text.as_bytes(), Path::new("d.csv"), space()).unwrap();
        let d = t.labeled(Path::new("d.csv")).unwrap();
        assert_eq!(d.labels(), &[0, 2]);
        let mut buf = Vec::new();
        write_dataset(&mut buf, &d).unwrap();
        let again = read_table(buf.as_slice(), Path::new("d.csv"), space()).unwrap();
        assert_eq!(again, TableData::Labeled(d));
    }

    #[test]
    fn unlabeled_and_errors() {
        let t = read_table("x0\n1\n2\n".as_bytes(), Path::new("d.csv"), space()).unwrap();
        assert_eq!(t.features().rows(), 2);
        assert!(t.labeled(Path::new("d.csv")).is_err());
        let p = Path::new("d.csv");
        assert!(matches!(read_table("y,x0\n3,1\n".as_bytes(), p, space()), Err(CliError::Parse { line: 2, .. })));
        assert!(read_table("y,x1\n0,1\n".as_bytes(), p, space()).is_err());
        assert!(read_table("x0\nnan\n".as_bytes(), p, space()).is_err());
        assert!(read_table("y\n0\n".as_bytes(), p, space()).is_err());
    }
}
