use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use super::{parse_number, Cell, ColumnKind, Dataset, Value};
use crate::error::{Error, Result};

pub const DEFAULT_MISSING_TOKENS: [&str; 3] = ["NA", "N/A", "?"];

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub target: Option<String>,
    pub overrides: BTreeMap<String, ColumnKind>,
    /// Compared case-insensitively after trimming. Empty cells are always missing.
    pub missing_tokens: Vec<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            target: None,
            overrides: BTreeMap::new(),
            missing_tokens: DEFAULT_MISSING_TOKENS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl LoadOptions {
    pub fn with_target(target: impl Into<String>) -> Self {
        LoadOptions {
            target: Some(target.into()),
            ..Default::default()
        }
    }

    fn is_missing(&self, raw: &str) -> bool {
        let t = raw.trim();
        t.is_empty() || self.missing_tokens.iter().any(|m| m.eq_ignore_ascii_case(t))
    }
}

/// Distinct-value ceiling under which a non-numeric column is categorical.
fn categorical_limit(n_rows: usize) -> usize {
    20.max(n_rows * 5 / 100)
}

impl Dataset {
    pub fn load_csv(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let file = std::fs::File::open(path)?;
        Dataset::read_csv(file, opts)
    }

    pub fn read_csv<R: Read>(reader: R, opts: &LoadOptions) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(Error::invalid("header row missing"));
        }
        let mut raw: Vec<Vec<Option<String>>> = Vec::new();
        for record in rdr.records() {
            let record = record?;
            if record.len() != header.len() {
                let line = record.position().map(|p| p.line()).unwrap_or(0);
                return Err(Error::RaggedRow {
                    line,
                    expected: header.len(),
                    found: record.len(),
                });
            }
            raw.push(
                record
                    .iter()
                    .map(|f| (!opts.is_missing(f)).then(|| f.to_string()))
                    .collect(),
            );
        }
        if raw.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for name in opts.overrides.keys() {
            if !header.contains(name) {
                return Err(Error::UnknownColumn(name.clone()));
            }
        }

        let limit = categorical_limit(raw.len());
        let kinds: Vec<ColumnKind> = header
            .iter()
            .enumerate()
            .map(|(c, name)| {
                if let Some(k) = opts.overrides.get(name) {
                    return *k;
                }
                let present: Vec<&str> = raw.iter().filter_map(|row| row[c].as_deref()).collect();
                if present.is_empty() {
                    ColumnKind::Categorical
                } else if present.iter().all(|v| parse_number(v).is_some()) {
                    ColumnKind::Numeric
                } else if present.iter().collect::<BTreeSet<_>>().len() <= limit {
                    ColumnKind::Categorical
                } else {
                    ColumnKind::Text
                }
            })
            .collect();

        let mut rows = Vec::with_capacity(raw.len());
        for (i, row) in raw.into_iter().enumerate() {
            let cells: Vec<Cell> = row
                .into_iter()
                .enumerate()
                .map(|(c, v)| match v {
                    None => Ok(None),
                    Some(s) => Value::parse_for(kinds[c], &s).map(Some).map_err(|_| {
                        Error::invalid(format!(
                            "column '{}' declared numeric but data row {} holds '{s}'",
                            header[c],
                            i + 1
                        ))
                    }),
                })
                .collect::<Result<_>>()?;
            rows.push(cells);
        }
        let schema = header.into_iter().zip(kinds).collect();
        Dataset::from_rows(schema, rows, opts.target.as_deref())
    }

    /// Writes the table as CSV; missing cells become empty fields.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(|cell| cell.as_ref().map(|v| v.to_string()).unwrap_or_default()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ObservedDomain;

    fn load(text: &str, opts: &LoadOptions) -> Result<Dataset> {
        Dataset::read_csv(text.as_bytes(), opts)
    }

    #[test]
    fn numeric_inference() {
        let mut text = String::from("x\n");
        for i in 0..10 {
            text.push_str(&format!("{}.5\n", i));
        }
        let ds = load(&text, &LoadOptions::default()).unwrap();
        assert_eq!(ds.columns()[0].kind, ColumnKind::Numeric);
        assert_eq!(ds.columns()[0].missing_count, 0);
    }

    #[test]
    fn question_mark_is_missing() {
        let ds = load("c\na\nb\n?\na\n", &LoadOptions::default()).unwrap();
        let col = &ds.columns()[0];
        assert_eq!(col.kind, ColumnKind::Categorical);
        assert_eq!(col.missing_count, 1);
        let expected: BTreeSet<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        assert_eq!(col.observed_domain, ObservedDomain::Values { values: expected });
    }

    #[test]
    fn missing_tokens_case_insensitive() {
        let ds = load("x,y\n1,a\nna,b\nn/a,c\n,d\n2,e\n", &LoadOptions::default()).unwrap();
        assert_eq!(ds.columns()[0].kind, ColumnKind::Numeric);
        assert_eq!(ds.columns()[0].missing_count, 3);
    }

    #[test]
    fn ragged_row_reports_line() {
        let err = load("a,b,c,d,e\n1,2,3,4,5\n1,2,3,4\n", &LoadOptions::default()).unwrap_err();
        assert_eq!(err.to_string(), "ragged row at line 3: expected 5 fields, found 4");
    }

    #[test]
    fn many_distinct_strings_become_text() {
        let mut text = String::from("t\n");
        for i in 0..30 {
            text.push_str(&format!("id{i}\n"));
        }
        let ds = load(&text, &LoadOptions::default()).unwrap();
        assert_eq!(ds.columns()[0].kind, ColumnKind::Text);
    }

    #[test]
    fn overrides_win_and_target_must_exist() {
        let mut opts = LoadOptions::with_target("y");
        opts.overrides.insert("x".into(), ColumnKind::Categorical);
        let ds = load("x,y\n1,a\n2,b\n", &opts).unwrap();
        assert_eq!(ds.columns()[0].kind, ColumnKind::Categorical);
        assert_eq!(ds.target_name(), Some("y"));

        let err = load("x,y\n1,a\n", &LoadOptions::with_target("z")).unwrap_err();
        assert!(matches!(err, Error::UnknownColumn(_)));
    }

    #[test]
    fn zero_rows_and_missing_file() {
        assert!(matches!(load("a,b\n", &LoadOptions::default()), Err(Error::EmptyDataset)));
        assert!(matches!(
            Dataset::load_csv("/nonexistent/file.csv", &LoadOptions::default()),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn quoted_fields_round_trip() {
        let ds = load("name,v\n\"Smith, John\",1.25\n\"say \"\"hi\"\"\",2\n", &LoadOptions::default()).unwrap();
        let mut out = Vec::new();
        ds.write_csv(&mut out).unwrap();
        let back = Dataset::read_csv(out.as_slice(), &LoadOptions::default()).unwrap();
        assert_eq!(ds.fingerprint(), back.fingerprint());
        assert_eq!(back.text_of(0, 0).unwrap(), "Smith, John");
    }
}
