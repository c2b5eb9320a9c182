//! CSV ingest and export.
//!
//! Input files carry one `prob_<class>` column per class, an optional
//! `true_label` column naming a class, and an optional `group` column. Other
//! columns are kept verbatim. Labeled outputs append one `label_<rule_id>`
//! column per rule holding a class name or [`UNCODED`].

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::labels::{GroundTruth, GroupKeys, Label, LabelAssignment};
use crate::matrix::ProbabilityMatrix;
use crate::scalar::Scalar;
use crate::simulator::SyntheticDataset;

/// Written for abstentions; never a valid class name.
pub const UNCODED: &str = "UNCODED";
pub const PROB_PREFIX: &str = "prob_";
pub const LABEL_PREFIX: &str = "label_";
pub const TRUTH_COLUMN: &str = "true_label";
pub const GROUP_COLUMN: &str = "group";

/// A parsed input file, with the raw records kept for output.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    headers: Vec<String>,
    records: Vec<Vec<String>>,
    pub probs: ProbabilityMatrix<T>,
    pub truth: Option<GroundTruth>,
    pub groups: Option<GroupKeys>,
    /// `(rule_id, column)` for every `label_` column present.
    label_columns: Vec<(String, usize)>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        _ => parse_err(line, e.to_string()),
    }
}

impl<T: Scalar> Dataset<T> {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();

        let mut prob_cols = Vec::new();
        let mut names = Vec::new();
        let (mut truth_col, mut group_col) = (None, None);
        let mut label_columns = Vec::new();
        for (j, h) in headers.iter().enumerate() {
            if headers[..j].contains(h) {
                return Err(parse_err(1, format!("duplicate column {h:?}")));
            }
            if let Some(name) = h.strip_prefix(PROB_PREFIX) {
                if name.is_empty() {
                    return Err(parse_err(1, "empty class name in probability column"));
                }
                if name == UNCODED {
                    return Err(parse_err(1, format!("{UNCODED} is reserved and cannot name a class")));
                }
                prob_cols.push(j);
                names.push(name.to_string());
            } else if h == TRUTH_COLUMN {
                truth_col = Some(j);
            } else if h == GROUP_COLUMN {
                group_col = Some(j);
            } else if let Some(rule) = h.strip_prefix(LABEL_PREFIX) {
                label_columns.push((rule.to_string(), j));
            }
        }
        if prob_cols.len() < 2 {
            return Err(parse_err(1, format!("need at least 2 {PROB_PREFIX}<class> columns, found {}", prob_cols.len())));
        }

        let k = names.len();
        let mut records = Vec::new();
        let mut lines = Vec::new();
        let mut flat = Vec::new();
        let mut truth = Vec::new();
        let mut groups = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            if rec.len() != headers.len() {
                return Err(parse_err(line, format!("expected {} fields, got {}", headers.len(), rec.len())));
            }
            for &j in &prob_cols {
                let v: f64 = rec[j]
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(line, format!("{:?} in column {} is not a number", &rec[j], headers[j])))?;
                flat.push(T::of(v));
            }
            if let Some(j) = truth_col {
                let y = names
                    .iter()
                    .position(|n| n == &rec[j])
                    .ok_or_else(|| parse_err(line, format!("unknown {TRUTH_COLUMN} {:?}", &rec[j])))?;
                truth.push(y);
            }
            if let Some(j) = group_col {
                groups.push(rec[j].to_string());
            }
            records.push(rec.iter().map(str::to_string).collect());
            lines.push(line);
        }
        if records.is_empty() {
            return Err(parse_err(2, "no data rows"));
        }
        let probs = ProbabilityMatrix::from_flat(k, flat)
            .map_err(|e| match e {
                Error::BadProbability { row, class, value } => {
                    parse_err(lines[row], format!("probability {value} for class {:?} outside [0, 1]", names[class]))
                }
                Error::RowSum { row, sum } => {
                    parse_err(lines[row], format!("probabilities sum to {sum}, more than 1e-6 away from 1"))
                }
                other => other,
            })?
            .with_class_names(names)?;
        Ok(Self {
            headers,
            records,
            probs,
            truth: truth_col.map(|_| GroundTruth::new(truth, k)).transpose()?,
            groups: group_col.map(|_| GroupKeys::new(groups)),
            label_columns,
        })
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn n_rows(&self) -> usize {
        self.records.len()
    }

    pub fn class_names(&self) -> &[String] {
        self.probs.class_names().unwrap_or_default()
    }

    /// Rule ids of the `label_` columns, in file order.
    pub fn label_rules(&self) -> impl Iterator<Item = &str> {
        self.label_columns.iter().map(|(r, _)| r.as_str())
    }

    /// Parses the `label_<rule_id>` column back into an assignment.
    pub fn labels_for(&self, rule_id: &str) -> Result<LabelAssignment> {
        let &(_, j) = self
            .label_columns
            .iter()
            .find(|(r, _)| r == rule_id)
            .ok_or_else(|| Error::InvalidParameter(format!("no column {LABEL_PREFIX}{rule_id}")))?;
        let names = self.class_names();
        let labels = self
            .records
            .iter()
            .enumerate()
            .map(|(i, rec)| {
                let v = &rec[j];
                if v == UNCODED {
                    return Ok(Label::Uncoded);
                }
                names
                    .iter()
                    .position(|n| n == v)
                    .map(Label::from)
                    .ok_or_else(|| parse_err(i + 2, format!("unknown label {v:?} in column {}", self.headers[j])))
            })
            .collect::<Result<Vec<_>>>()?;
        LabelAssignment::new(labels, names.len(), rule_id)
    }

    /// Writes every input column followed by one label column per assignment.
    pub fn write_labeled<W: Write>(&self, out: W, assignments: &[LabelAssignment]) -> Result<()> {
        let mut header = self.headers.clone();
        for a in assignments {
            if a.len() != self.n_rows() {
                return Err(Error::LengthMismatch { left: self.n_rows(), right: a.len() });
            }
            let col = format!("{LABEL_PREFIX}{}", a.rule_id);
            if header.contains(&col) {
                return Err(Error::InvalidParameter(format!("column {col} already present")));
            }
            header.push(col);
        }
        let names = self.class_names();
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&header).map_err(csv_err)?;
        let mut row: Vec<&str> = Vec::with_capacity(header.len());
        for (i, rec) in self.records.iter().enumerate() {
            row.clear();
            row.extend(rec.iter().map(String::as_str));
            for a in assignments {
                row.push(match a.labels()[i] {
                    Label::Class(c) => names[c.0].as_str(),
                    Label::Uncoded => UNCODED,
                });
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Writes a simulated dataset in the ingest schema.
pub fn write_synthetic<T: Scalar, W: Write>(out: W, data: &SyntheticDataset<T>) -> Result<()> {
    let k = data.probs.n_classes();
    let names = crate::simulator::class_names(k);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header: Vec<String> = names.iter().map(|n| format!("{PROB_PREFIX}{n}")).collect();
    header.push(TRUTH_COLUMN.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for (row, &y) in data.probs.rows().zip(data.truth.labels()) {
        let mut rec: Vec<String> = row.iter().map(|p| p.to_string()).collect();
        rec.push(names[y].clone());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{argmax_rule, threshold_rule, TieOrder};

    fn load(text: &str) -> Result<Dataset<f64>> {
        Dataset::from_reader(text.as_bytes())
    }

    #[test]
    fn parses_optional_columns() {
        let d = load("id,prob_a,prob_b,true_label,group\n1,0.6,0.4,a,x\n2,0.2,0.8,b,y\n").unwrap();
        assert_eq!(d.class_names(), ["a", "b"]);
        assert_eq!(d.truth.as_ref().unwrap().labels(), &[0, 1]);
        assert_eq!(d.groups.as_ref().unwrap().keys(), ["x", "y"]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = load("prob_a,prob_b\n0.5,0.5\n0.5,0.6\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e:?}");
        let e = load("prob_a,prob_b,true_label\n0.5,0.5,a\n0.5,0.5,c\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e:?}");
        let e = load("prob_a,prob_b\n0.5,x\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e:?}");
        assert!(matches!(load("prob_a,x\n1,2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(load("prob_UNCODED,prob_b\n0.5,0.5\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn round_trips_labels() {
        let d = load("prob_a,prob_b\n0.85,0.15\n0.7,0.3\n").unwrap();
        let ties = TieOrder::identity(2);
        let am = argmax_rule(&d.probs, &ties).unwrap();
        let th = threshold_rule(&d.probs, 0.8, &ties).unwrap();
        let mut buf = Vec::new();
        d.write_labeled(&mut buf, &[am.clone(), th.clone()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "prob_a,prob_b,label_argmax,label_threshold:0.8\n0.85,0.15,a,a\n0.7,0.3,a,UNCODED\n");
        let back = load(&text).unwrap();
        assert_eq!(back.labels_for("argmax").unwrap().labels(), am.labels());
        assert_eq!(back.labels_for("threshold:0.8").unwrap().labels(), th.labels());
    }
}
