//! Numeric CSV tables with `# key=value` metadata lines.

use std::io::Read;

use crate::error::{Error, Result};

/// Parsed numeric table. `lines[i]` is the 1-based file line of `rows[i]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
    pub lines: Vec<usize>,
}

impl Table {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Column `k` of every row.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[k]).collect()
    }

    /// Fails at the first row whose column `k` does not strictly increase.
    pub fn require_increasing(&self, k: usize) -> Result<()> {
        for i in 1..self.rows.len() {
            if !(self.rows[i][k] > self.rows[i - 1][k]) {
                return Err(Error::Parse {
                    line: self.lines[i],
                    message: format!(
                        "column {} must be strictly increasing ({} after {})",
                        k + 1,
                        self.rows[i][k],
                        self.rows[i - 1][k]
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Reads a table whose rows have between `min_cols` and `max_cols` numeric
/// fields.
///
/// Lines starting with `#` are comments; those of the form `# key=value`
/// become metadata. A first non-comment line that does not parse as
/// numbers is taken as the header. Blank lines are skipped. Non-finite
/// values are rejected.
pub fn read_table<R: Read>(mut input: R, min_cols: usize, max_cols: usize) -> Result<Table> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut table = Table::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                table
                    .metadata
                    .push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let record = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(trimmed.as_bytes())
            .records()
            .next()
            .transpose()
            .map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?
            .unwrap_or_default();
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if table.header.is_none() && table.rows.is_empty() => {
                table.header = Some(record.iter().map(str::to_string).collect());
                continue;
            }
            Err(e) => {
                return Err(Error::Parse {
                    line,
                    message: format!("non-numeric field: {e}"),
                })
            }
        };
        if values.len() < min_cols || values.len() > max_cols {
            return Err(Error::Parse {
                line,
                message: format!(
                    "expected {min_cols}..={max_cols} fields, found {}",
                    values.len()
                ),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line,
                message: format!("non-finite value {v}"),
            });
        }
        table.rows.push(values);
        table.lines.push(line);
    }
    if table.rows.is_empty() {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "no data rows".into(),
        });
    }
    Ok(table)
}
