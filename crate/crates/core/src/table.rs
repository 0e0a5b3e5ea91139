//! Self-describing numeric tables and their CSV form.
//!
//! Tables carry their run configuration (and any derived quantities) as
//! `# key: value` comment lines ahead of the header row, so every emitted
//! file is reproducible from its own content. Floats are printed with
//! Rust's shortest round-trip formatting: `parse(emit(table)) == table`
//! holds exactly.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error("CSV parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Column-oriented numeric table with key/value metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            meta: Vec::new(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Shortest exact decimal form of a float: plain notation for mid-range
/// magnitudes, scientific otherwise. Always round-trips through `parse`.
pub fn fmt_float(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let m = v.abs();
    if (1e-4..1e15).contains(&m) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Emit the table as CSV: metadata comments, header, rows.
pub fn emit_csv(table: &Table) -> String {
    let mut out = String::new();
    for (k, v) in &table.meta {
        out.push_str("# ");
        out.push_str(k);
        out.push_str(": ");
        out.push_str(v);
        out.push('\n');
    }
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_float(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parse CSV emitted by [`emit_csv`], restoring metadata, header and rows.
pub fn parse_csv(text: &str) -> Result<Table, TableError> {
    let mut table = Table::default();
    let mut header_seen = false;
    for (lineno, line) in text.lines().enumerate() {
        let line_number = lineno + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim_start();
            let (k, v) = comment.split_once(": ").ok_or(TableError::Parse {
                line: line_number,
                message: "metadata comment without `key: value` form".into(),
            })?;
            table.meta.push((k.to_string(), v.to_string()));
            continue;
        }
        if !header_seen {
            table.columns = line.split(',').map(|s| s.to_string()).collect();
            header_seen = true;
            continue;
        }
        let row: Result<Vec<f64>, _> = line
            .split(',')
            .map(|cell| {
                cell.parse::<f64>().map_err(|e| TableError::Parse {
                    line: line_number,
                    message: format!("bad float {cell:?}: {e}"),
                })
            })
            .collect();
        let row = row?;
        if row.len() != table.columns.len() {
            return Err(TableError::Parse {
                line: line_number,
                message: format!(
                    "expected {} cells, found {}",
                    table.columns.len(),
                    row.len()
                ),
            });
        }
        table.rows.push(row);
    }
    if !header_seen {
        return Err(TableError::Parse {
            line: 0,
            message: "no header row".into(),
        });
    }
    Ok(table)
}
