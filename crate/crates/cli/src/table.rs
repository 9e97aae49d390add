//! CSV ingestion and design-matrix construction.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use modereg::regression::Dataset;

/// Raw CSV contents: a header row and string cells.
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .with_context(|| format!("cannot open {}", path.display()))?;
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            bail!("{}: missing header row", path.display());
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.with_context(|| format!("{}: malformed CSV record {}", path.display(), i + 1))?;
            rows.push(record.iter().map(str::to_string).collect());
        }
        if rows.is_empty() {
            bail!("{}: no data rows", path.display());
        }
        Ok(Self { headers, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| {
            anyhow!("column '{name}' not found; available columns: {}", self.headers.join(", "))
        })
    }

    fn cell(&self, row: usize, col: usize) -> Result<&str> {
        let v = self.rows[row][col].as_str();
        if v.is_empty() || v.eq_ignore_ascii_case("na") {
            bail!("row {}, column '{}': missing value", row + 1, self.headers[col]);
        }
        Ok(v)
    }

    pub fn number(&self, row: usize, col: usize) -> Result<f64> {
        let v = self.cell(row, col)?;
        let x: f64 = v
            .parse()
            .map_err(|_| anyhow!("row {}, column '{}': cannot parse '{v}' as a number", row + 1, self.headers[col]))?;
        if !x.is_finite() {
            bail!("row {}, column '{}': value '{v}' is not finite", row + 1, self.headers[col]);
        }
        Ok(x)
    }
}

/// How one source column enters the design.
#[derive(Debug, Clone)]
enum Term {
    Numeric(String),
    /// Indicator columns for every level except the first seen.
    Dummy { name: String, levels: Vec<String> },
}

/// Covariate layout learned from the fitting data, reusable on new rows.
#[derive(Debug, Clone)]
pub struct Design {
    terms: Vec<Term>,
}

impl Design {
    /// Uses `covariates` (or every column except `response`), expanding the
    /// columns listed in `dummies`.
    pub fn learn(table: &Table, response: &str, covariates: Option<&[String]>, dummies: &[String]) -> Result<Self> {
        let names: Vec<String> = match covariates {
            Some(c) => c.to_vec(),
            None => table.headers.iter().filter(|h| h.as_str() != response).cloned().collect(),
        };
        for d in dummies {
            if !names.contains(d) {
                bail!("--dummy column '{d}' is not among the covariates");
            }
        }
        let mut terms = Vec::new();
        for name in names {
            if name == response {
                bail!("response column '{response}' cannot also be a covariate");
            }
            let col = table.column(&name)?;
            if dummies.contains(&name) {
                let mut levels: Vec<String> = Vec::new();
                for r in 0..table.rows.len() {
                    let v = table.cell(r, col)?;
                    if !levels.iter().any(|l| l == v) {
                        levels.push(v.to_string());
                    }
                }
                if levels.len() < 2 {
                    bail!("--dummy column '{name}' has a single level");
                }
                terms.push(Term::Dummy { name, levels });
            } else {
                terms.push(Term::Numeric(name));
            }
        }
        Ok(Self { terms })
    }

    pub fn column_names(&self) -> Vec<String> {
        self.terms
            .iter()
            .flat_map(|t| match t {
                Term::Numeric(n) => vec![n.clone()],
                Term::Dummy { name, levels } => levels[1..].iter().map(|l| format!("{name}-{l}")).collect(),
            })
            .collect()
    }

    pub fn rows(&self, table: &Table) -> Result<Vec<Vec<f64>>> {
        let cols: Vec<usize> = self
            .terms
            .iter()
            .map(|t| match t {
                Term::Numeric(n) | Term::Dummy { name: n, .. } => table.column(n),
            })
            .collect::<Result<_>>()?;
        (0..table.rows.len())
            .map(|r| {
                let mut row = Vec::new();
                for (term, &col) in self.terms.iter().zip(&cols) {
                    match term {
                        Term::Numeric(_) => row.push(table.number(r, col)?),
                        Term::Dummy { name, levels } => {
                            let v = table.cell(r, col)?;
                            if !levels.iter().any(|l| l == v) {
                                bail!("row {}, column '{name}': unseen level '{v}'", r + 1);
                            }
                            row.extend(levels[1..].iter().map(|l| if l == v { 1.0 } else { 0.0 }));
                        }
                    }
                }
                Ok(row)
            })
            .collect()
    }
}

/// Responses from `response`, optionally divided by `rescale`.
pub fn responses(table: &Table, response: &str, rescale: Option<f64>) -> Result<Vec<f64>> {
    let col = table.column(response)?;
    let mut y: Vec<f64> = (0..table.rows.len()).map(|r| table.number(r, col)).collect::<Result<_>>()?;
    if let Some(d) = rescale {
        let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(d > 0.0 && d.is_finite()) {
            bail!("--rescale-divisor must be a positive number, got {d}");
        }
        if d <= max {
            bail!("--rescale-divisor {d} must exceed the largest response {max}");
        }
        y.iter_mut().for_each(|v| *v /= d);
    }
    Ok(y)
}

pub fn dataset(
    table: &Table,
    response: &str,
    design: &Design,
    rescale: Option<f64>,
    squeeze: bool,
) -> Result<Dataset> {
    let y = responses(table, response, rescale)?;
    let rows = design.rows(table)?;
    Dataset::with_squeeze(y, rows, design.column_names(), squeeze).map_err(|e| match e {
        modereg::Error::BoundaryResponse { row, value } => anyhow!(
            "response in data row {} is {value}, outside (0,1); pass --squeeze to shrink boundary responses",
            row + 1
        ),
        other => other.into(),
    })
}
