//! Dataset CSV ingestion and output.
//!
//! Required columns are `t` (positive integer) and `censored` (0/1). An
//! optional `weight` column carries importance weights, and an optional id
//! column can be named by the caller. Every remaining column is a feature:
//! numeric when all non-missing cells parse as numbers, otherwise categorical
//! and one-hot encoded against a sorted vocabulary. Missing numeric cells
//! become `NaN` and are counted in the [`IngestReport`].

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sbg::Observation;

const MISSING_TOKENS: [&str; 6] = ["", "NA", "NaN", "nan", "null", "NULL"];
const MAX_REPORTED_ROWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

/// Raw feature columns and how they expand into the model's feature vector.
/// Persisted inside model files so prediction-time encoding is exact.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<ColumnSpec>,
}

impl FeatureSchema {
    pub fn numeric<S: AsRef<str>>(names: &[S]) -> Self {
        Self {
            columns: names
                .iter()
                .map(|n| ColumnSpec {
                    name: n.as_ref().to_string(),
                    kind: ColumnKind::Numeric,
                })
                .collect(),
        }
    }

    /// Expanded feature names; categorical levels appear as `column=level`.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for col in &self.columns {
            match &col.kind {
                ColumnKind::Numeric => names.push(col.name.clone()),
                ColumnKind::Categorical { levels } => {
                    names.extend(levels.iter().map(|l| format!("{}={l}", col.name)))
                }
            }
        }
        names
    }

    pub fn n_features(&self) -> usize {
        self.columns
            .iter()
            .map(|c| match &c.kind {
                ColumnKind::Numeric => 1,
                ColumnKind::Categorical { levels } => levels.len(),
            })
            .sum()
    }

    /// Encodes one row of raw cells (in schema column order). Returns the
    /// feature vector and the number of missing cells.
    pub fn encode(&self, cells: &[&str]) -> Result<(Vec<f64>, usize)> {
        if cells.len() != self.columns.len() {
            return Err(Error::Input(format!(
                "expected {} feature cells, got {}",
                self.columns.len(),
                cells.len()
            )));
        }
        let mut out = Vec::with_capacity(self.n_features());
        let mut missing = 0;
        for (col, raw) in self.columns.iter().zip(cells) {
            let cell = raw.trim();
            let is_missing = MISSING_TOKENS.contains(&cell);
            missing += usize::from(is_missing);
            match &col.kind {
                ColumnKind::Numeric => {
                    if is_missing {
                        out.push(f64::NAN);
                    } else {
                        let v: f64 = cell.parse().map_err(|_| {
                            Error::Input(format!("column {:?}: {cell:?} is not numeric", col.name))
                        })?;
                        out.push(v);
                    }
                }
                ColumnKind::Categorical { levels } => {
                    // Unseen or missing levels encode as all zeros.
                    out.extend(levels.iter().map(|l| if l == cell { 1.0 } else { 0.0 }));
                }
            }
        }
        Ok((out, missing))
    }
}

/// Observations plus the metadata needed to write them back out or to encode
/// new rows consistently.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub observations: Vec<Observation>,
    pub ids: Option<Vec<String>>,
    pub schema: FeatureSchema,
}

impl Dataset {
    /// Dataset with all-numeric features.
    pub fn new(feature_names: Vec<String>, observations: Vec<Observation>) -> Self {
        let schema = FeatureSchema::numeric(&feature_names);
        Self {
            feature_names,
            observations,
            ids: None,
            schema,
        }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn censored_fraction(&self) -> f64 {
        if self.observations.is_empty() {
            return 0.0;
        }
        let c = self.observations.iter().filter(|o| o.censored).count();
        c as f64 / self.observations.len() as f64
    }

    /// Rows selected by index, keeping ids aligned.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            observations: rows.iter().map(|&i| self.observations[i].clone()).collect(),
            ids: self.ids.as_ref().map(|ids| rows.iter().map(|&i| ids[i].clone()).collect()),
            schema: self.schema.clone(),
        }
    }

    /// Writes the dataset CSV: `t,censored[,weight][,id],features...`.
    ///
    /// The weight column is emitted only when some weight differs from 1.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let with_weight = self.observations.iter().any(|o| o.weight != 1.0);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let mut header = vec!["t".to_string(), "censored".to_string()];
        if with_weight {
            header.push("weight".into());
        }
        if self.ids.is_some() {
            header.push("id".into());
        }
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header)?;
        for (i, obs) in self.observations.iter().enumerate() {
            let mut rec = vec![obs.t.to_string(), u8::from(obs.censored).to_string()];
            if with_weight {
                rec.push(format_float(obs.weight));
            }
            if let Some(ids) = &self.ids {
                rec.push(ids[i].clone());
            }
            rec.extend(obs.features.iter().map(|v| format_float(*v)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(File::create(path)?)
    }
}

/// Shortest round-tripping decimal form; `NaN` is written as an empty cell.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReadOptions {
    /// Column holding row identifiers (excluded from features).
    pub ids_column: Option<String>,
    /// Encode against an existing schema instead of inferring one.
    pub schema: Option<FeatureSchema>,
    /// Weight multiplier for censored rows, compensating for down-sampling
    /// censored rows by this factor.
    pub censored_weight: Option<f64>,
    /// When false, `t`/`censored` may be absent (prediction inputs); rows
    /// then default to `t = 1`, uncensored.
    pub require_outcomes: bool,
}

impl ReadOptions {
    pub fn training() -> Self {
        Self {
            require_outcomes: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub rows: usize,
    pub missing_cells: usize,
    /// 1-based file line numbers of rows containing missing cells.
    pub rows_with_missing: Vec<usize>,
}

pub fn read_dataset_path(path: impl AsRef<Path>, opts: &ReadOptions) -> Result<(Dataset, IngestReport)> {
    read_dataset(File::open(path)?, opts)
}

pub fn read_dataset<R: Read>(reader: R, opts: &ReadOptions) -> Result<(Dataset, IngestReport)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| header.iter().position(|h| h == name);

    let t_col = find("t");
    let c_col = find("censored");
    if opts.require_outcomes && (t_col.is_none() || c_col.is_none()) {
        return Err(Error::Input("dataset must have `t` and `censored` columns".into()));
    }
    let w_col = find("weight");
    let id_col = match &opts.ids_column {
        Some(name) => Some(
            find(name).ok_or_else(|| Error::Input(format!("id column {name:?} not found")))?,
        ),
        None => None,
    };
    let reserved = [t_col, c_col, w_col, id_col];
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|i| !reserved.contains(&Some(*i)))
        .collect();

    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;

    let schema = match &opts.schema {
        Some(schema) => {
            let names: Vec<&str> = feature_cols.iter().map(|&i| header[i].as_str()).collect();
            let expected: Vec<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
            if names != expected {
                return Err(Error::Input(format!(
                    "feature columns {names:?} do not match the model's columns {expected:?}"
                )));
            }
            schema.clone()
        }
        None => infer_schema(&header, &feature_cols, &records),
    };

    let mut observations = Vec::with_capacity(records.len());
    let mut ids = id_col.map(|_| Vec::with_capacity(records.len()));
    let mut report = IngestReport::default();
    let mut bad_rows: Vec<String> = Vec::new();

    for (k, rec) in records.iter().enumerate() {
        let line = k + 2;
        let parsed = (|| -> std::result::Result<Observation, String> {
            let t = match t_col {
                Some(i) => parse_time(&rec[i])?,
                None => 1,
            };
            let censored = match c_col {
                Some(i) => parse_flag(&rec[i])?,
                None => false,
            };
            let weight = match w_col {
                Some(i) => {
                    let w: f64 = rec[i].trim().parse().map_err(|_| "weight is not numeric".to_string())?;
                    if !(w.is_finite() && w > 0.0) {
                        return Err(format!("weight must be positive, got {w}"));
                    }
                    w
                }
                None => 1.0,
            };
            let weight = match (censored, opts.censored_weight) {
                (true, Some(k)) => weight * k,
                _ => weight,
            };
            let cells: Vec<&str> = feature_cols.iter().map(|&i| &rec[i]).collect();
            let (features, missing) = schema.encode(&cells).map_err(|e| e.to_string())?;
            if missing > 0 {
                report.missing_cells += missing;
                report.rows_with_missing.push(line);
            }
            Ok(Observation {
                t,
                censored,
                features,
                weight,
            })
        })();
        match parsed {
            Ok(obs) => observations.push(obs),
            Err(msg) => bad_rows.push(format!("line {line}: {msg}")),
        }
        if let (Some(ids), Some(i)) = (ids.as_mut(), id_col) {
            ids.push(rec[i].to_string());
        }
    }
    if !bad_rows.is_empty() {
        let shown: Vec<_> = bad_rows.iter().take(MAX_REPORTED_ROWS).cloned().collect();
        return Err(Error::Input(format!(
            "{} invalid rows: {}",
            bad_rows.len(),
            shown.join("; ")
        )));
    }
    report.rows = observations.len();
    let feature_names = schema.feature_names();
    Ok((
        Dataset {
            feature_names,
            observations,
            ids,
            schema,
        },
        report,
    ))
}

fn infer_schema(header: &[String], feature_cols: &[usize], records: &[csv::StringRecord]) -> FeatureSchema {
    let columns = feature_cols
        .iter()
        .map(|&i| {
            let cells = records.iter().map(|r| r[i].trim()).filter(|c| !MISSING_TOKENS.contains(c));
            let numeric = cells.clone().all(|c| c.parse::<f64>().is_ok());
            let kind = if numeric {
                ColumnKind::Numeric
            } else {
                let levels: BTreeSet<String> = cells.map(str::to_string).collect();
                ColumnKind::Categorical {
                    levels: levels.into_iter().collect(),
                }
            };
            ColumnSpec {
                name: header[i].clone(),
                kind,
            }
        })
        .collect();
    FeatureSchema { columns }
}

fn parse_time(cell: &str) -> std::result::Result<u32, String> {
    let cell = cell.trim();
    let v: f64 = cell.parse().map_err(|_| format!("t = {cell:?} is not a number"))?;
    if v.fract() != 0.0 || v < 0.0 || v > f64::from(u32::MAX) {
        return Err(format!("t = {cell:?} is not a nonnegative integer"));
    }
    if v == 0.0 {
        return Err("t = 0 is not allowed; times start at 1 (shift zero-based times by one time unit)".into());
    }
    Ok(v as u32)
}

fn parse_flag(cell: &str) -> std::result::Result<bool, String> {
    match cell.trim() {
        "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        other => Err(format!("censored = {other:?} must be 0 or 1")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<(Dataset, IngestReport)> {
        read_dataset(text.as_bytes(), &ReadOptions::training())
    }

    #[test]
    fn reads_numeric_and_categorical_columns() {
        let (ds, report) = read("t,censored,x,color\n1,0,0.5,red\n3,1,,blue\n2,0,1.5,red\n").unwrap();
        assert_eq!(ds.feature_names, vec!["x", "color=blue", "color=red"]);
        assert_eq!(ds.observations[0].features, vec![0.5, 0.0, 1.0]);
        assert!(ds.observations[1].features[0].is_nan());
        assert!(ds.observations[1].censored);
        assert_eq!(report.missing_cells, 1);
        assert_eq!(report.rows_with_missing, vec![3]);
    }

    #[test]
    fn rejects_invalid_rows_with_line_numbers() {
        let err = read("t,censored,x\n0,0,1\n2,2,1\n1,0,1\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(err.contains("shift"), "{err}");
        assert!(err.contains("line 3"), "{err}");
        assert!(read("t,x\n1,2\n").is_err());
        assert!(read("t,censored,weight\n1,0,-1\n").is_err());
    }

    #[test]
    fn censored_downsampling_weight() {
        let opts = ReadOptions {
            censored_weight: Some(10.0),
            ..ReadOptions::training()
        };
        let (ds, _) = read_dataset("t,censored\n1,0\n4,1\n".as_bytes(), &opts).unwrap();
        assert_eq!(ds.observations[0].weight, 1.0);
        assert_eq!(ds.observations[1].weight, 10.0);
    }

    #[test]
    fn schema_enforced_at_prediction_time() {
        let (ds, _) = read("t,censored,x,color\n1,0,0.5,red\n3,1,2,blue\n").unwrap();
        let opts = ReadOptions {
            schema: Some(ds.schema.clone()),
            ..ReadOptions::default()
        };
        let (pred, _) = read_dataset("x,color\n1,green\n2,blue\n".as_bytes(), &opts).unwrap();
        assert_eq!(pred.observations[0].features, vec![1.0, 0.0, 0.0]);
        assert_eq!(pred.observations[1].features, vec![2.0, 1.0, 0.0]);
        assert!(read_dataset("x,y\n1,2\n".as_bytes(), &opts).is_err());
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let ds = Dataset::new(
            vec!["a".into(), "b".into()],
            vec![
                Observation::event(2, vec![0.1, -3.25]),
                Observation::censored(5, vec![1e-17, f64::NAN]).with_weight(2.5),
            ],
        );
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,censored,weight,a,b\n"));
        let (back, _) = read(&text).unwrap();
        assert_eq!(back.observations[0], ds.observations[0]);
        assert_eq!(back.observations[1].features[0], 1e-17);
        assert!(back.observations[1].features[1].is_nan());
        assert_eq!(back.observations[1].weight, 2.5);
    }

    #[test]
    fn empty_file_with_header() {
        let (ds, report) = read("t,censored,x\n").unwrap();
        assert!(ds.is_empty());
        assert_eq!(report.rows, 0);
        assert_eq!(ds.feature_names, vec!["x"]);
    }
}
