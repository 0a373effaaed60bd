use serde::{Deserialize, Serialize};

use super::{DataError, Result};

/// Per-column min-max scaling to [0, 1] on the fitted range.
///
/// Values outside the fitted range extrapolate affinely and are not clipped.
/// A constant column maps to 0 and inverts to its constant.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_fitted(&self) -> bool {
        !self.min.is_empty()
    }

    pub fn width(&self) -> usize {
        self.min.len()
    }

    pub fn mins(&self) -> &[f64] {
        &self.min
    }

    pub fn maxs(&self) -> &[f64] {
        &self.max
    }

    pub fn fit<R: AsRef<[f64]>>(&mut self, rows: &[R]) -> Result<()> {
        let width = rows
            .first()
            .map(|r| r.as_ref().len())
            .filter(|&w| w > 0)
            .ok_or_else(|| DataError::State("cannot fit on an empty slice".into()))?;
        let mut min = vec![f64::INFINITY; width];
        let mut max = vec![f64::NEG_INFINITY; width];
        for r in rows {
            let r = r.as_ref();
            if r.len() != width {
                return Err(DataError::State(format!("ragged rows: {} vs {width}", r.len())));
            }
            for (j, &v) in r.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DataError::Domain(format!("non-finite value in column {j}")));
                }
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        for j in 0..width {
            if max[j] == min[j] {
                log::warn!("column {j} is constant ({}); it will scale to 0", min[j]);
            }
        }
        self.min = min;
        self.max = max;
        Ok(())
    }

    fn check(&self, col: usize) -> Result<()> {
        if !self.is_fitted() {
            return Err(DataError::State("scaler used before fit".into()));
        }
        if col >= self.width() {
            return Err(DataError::State(format!(
                "column {col} out of range for width {}",
                self.width()
            )));
        }
        Ok(())
    }

    pub fn apply_value(&self, col: usize, v: f64) -> Result<f64> {
        self.check(col)?;
        let span = self.max[col] - self.min[col];
        Ok(if span == 0.0 { 0.0 } else { (v - self.min[col]) / span })
    }

    pub fn invert_value(&self, col: usize, v: f64) -> Result<f64> {
        self.check(col)?;
        Ok(self.min[col] + v * (self.max[col] - self.min[col]))
    }

    fn map_rows<R: AsRef<[f64]>>(&self, rows: &[R], f: impl Fn(usize, f64) -> Result<f64>) -> Result<Vec<Vec<f64>>> {
        rows.iter()
            .map(|r| {
                let r = r.as_ref();
                if r.len() != self.width() && self.is_fitted() {
                    return Err(DataError::State(format!(
                        "row width {} vs fitted {}",
                        r.len(),
                        self.width()
                    )));
                }
                r.iter().enumerate().map(|(j, &v)| f(j, v)).collect()
            })
            .collect()
    }

    pub fn apply<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<Vec<f64>>> {
        self.check(0)?;
        self.map_rows(rows, |j, v| self.apply_value(j, v))
    }

    pub fn invert<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<Vec<f64>>> {
        self.check(0)?;
        self.map_rows(rows, |j, v| self.invert_value(j, v))
    }
}
