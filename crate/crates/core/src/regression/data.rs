use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Responses on `(0,1)` with a covariate matrix (intercept implicit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset", into = "RawDataset")]
pub struct Dataset {
    y: Vec<f64>,
    /// Row-major `n × p`.
    x: Vec<f64>,
    p: usize,
    column_names: Vec<String>,
    squeezed: bool,
    log_y: Vec<f64>,
    log_1my: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDataset {
    y: Vec<f64>,
    x: Vec<Vec<f64>>,
    column_names: Vec<String>,
    #[serde(default)]
    squeezed: bool,
}

impl TryFrom<RawDataset> for Dataset {
    type Error = Error;

    fn try_from(raw: RawDataset) -> Result<Self> {
        let mut d = Dataset::new(raw.y, raw.x, raw.column_names)?;
        d.squeezed = raw.squeezed;
        Ok(d)
    }
}

impl From<Dataset> for RawDataset {
    fn from(d: Dataset) -> Self {
        RawDataset {
            x: (0..d.n()).map(|i| d.row(i).to_vec()).collect(),
            y: d.y,
            column_names: d.column_names,
            squeezed: d.squeezed,
        }
    }
}

/// `(y(n−1) + 0.5)/n`, mapping `[0,1]` into the open interval.
pub fn squeeze_transform(y: f64, n: usize) -> f64 {
    let n = n as f64;
    (y * (n - 1.0) + 0.5) / n
}

impl Dataset {
    /// Validated dataset; responses must lie strictly inside `(0,1)`.
    ///
    /// `rows` holds one covariate vector per response. Empty `column_names`
    /// are replaced by `x1, …, xp`.
    pub fn new(y: Vec<f64>, rows: Vec<Vec<f64>>, column_names: Vec<String>) -> Result<Self> {
        Self::build(y, rows, column_names, false)
    }

    /// Like [`Dataset::new`], but when `squeeze` is set and some response
    /// sits on `{0, 1}`, every response is squeezed once.
    pub fn with_squeeze(y: Vec<f64>, rows: Vec<Vec<f64>>, column_names: Vec<String>, squeeze: bool) -> Result<Self> {
        Self::build(y, rows, column_names, squeeze)
    }

    fn build(mut y: Vec<f64>, rows: Vec<Vec<f64>>, column_names: Vec<String>, squeeze: bool) -> Result<Self> {
        let n = y.len();
        if rows.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rows.len(),
            });
        }
        let p = rows.first().map_or(column_names.len(), Vec::len);
        let mut x = Vec::with_capacity(n * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: row.len(),
                });
            }
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!("non-finite covariate {bad} in row {i}")));
            }
            x.extend_from_slice(row);
        }
        let column_names = if column_names.is_empty() {
            (1..=p).map(|j| format!("x{j}")).collect()
        } else if column_names.len() == p {
            column_names
        } else {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: column_names.len(),
            });
        };
        if n < p + 2 {
            return Err(Error::InvalidData(format!(
                "need at least p + 2 = {} observations, got {n}",
                p + 2
            )));
        }
        for (i, &v) in y.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidData(format!("response {v} in row {i} lies outside [0,1]")));
            }
        }
        let boundary = y.iter().position(|&v| v == 0.0 || v == 1.0);
        let mut squeezed = false;
        if let Some(row) = boundary {
            if !squeeze {
                return Err(Error::BoundaryResponse { row, value: y[row] });
            }
            y.iter_mut().for_each(|v| *v = squeeze_transform(*v, n));
            squeezed = true;
        }
        Ok(Self::from_parts(y, x, p, column_names, squeezed))
    }

    fn from_parts(y: Vec<f64>, x: Vec<f64>, p: usize, column_names: Vec<String>, squeezed: bool) -> Self {
        let log_y = y.iter().map(|v| v.ln()).collect();
        let log_1my = y.iter().map(|v| (-v).ln_1p()).collect();
        Self {
            y,
            x,
            p,
            column_names,
            squeezed,
            log_y,
            log_1my,
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of covariate columns (excluding the intercept).
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Whether the squeeze transform was applied.
    pub fn squeezed(&self) -> bool {
        self.squeezed
    }

    pub(crate) fn log_y(&self, i: usize) -> f64 {
        self.log_y[i]
    }

    pub(crate) fn log_1my(&self, i: usize) -> f64 {
        self.log_1my[i]
    }

    /// Same covariates with new responses, each strictly inside `(0,1)`.
    pub fn with_responses(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: y.len(),
            });
        }
        if let Some(row) = y.iter().position(|v| !(*v > 0.0 && *v < 1.0)) {
            return Err(Error::BoundaryResponse { row, value: y[row] });
        }
        Ok(Self::from_parts(y, self.x.clone(), self.p, self.column_names.clone(), self.squeezed))
    }

    /// Rows `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.len() < self.p + 2 {
            return Err(Error::InvalidData(format!(
                "subset of {} rows is smaller than p + 2 = {}",
                indices.len(),
                self.p + 2
            )));
        }
        let mut y = Vec::with_capacity(indices.len());
        let mut x = Vec::with_capacity(indices.len() * self.p);
        for &i in indices {
            if i >= self.n() {
                return Err(Error::InvalidData(format!("row index {i} out of range")));
            }
            y.push(self.y[i]);
            x.extend_from_slice(self.row(i));
        }
        Ok(Self::from_parts(y, x, self.p, self.column_names.clone(), self.squeezed))
    }

    /// All rows except `skip`.
    pub fn without(&self, skip: usize) -> Result<Self> {
        let keep: Vec<usize> = (0..self.n()).filter(|&i| i != skip).collect();
        self.subset(&keep)
    }
}
