//! Per-step CSV audit of scenario runs.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Numeric table with named columns, kept in memory and written as CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AuditTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl AuditTable {
    pub fn new(columns: &[&str]) -> Self {
        AuditTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::LengthMismatch {
                what: "audit row",
                expected: self.columns.len(),
                got: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// All values of one column.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .column_index(name)
            .ok_or_else(|| Error::InvalidArgument(format!("no audit column `{name}`")))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Shortest round-trip formatting, so a parsed CSV reproduces the
    /// values bit for bit.
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            for (i, v) in r.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v:?}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty audit".into()))?;
        let mut t = AuditTable {
            columns: header.split(',').map(str::to_string).collect(),
            rows: Vec::new(),
        };
        for (i, l) in lines.enumerate() {
            let row = l
                .split(',')
                .map(|v| {
                    v.parse::<f64>().map_err(|_| Error::ParameterSyntax {
                        line: i + 2,
                        msg: format!("bad number `{v}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            t.push(row)?;
        }
        Ok(t)
    }
}
