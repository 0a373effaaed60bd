//! Pearson correlation, lagged cross-correlation and Fisher z significance.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::datapipe::{Column, ModalSeries};
use crate::svg;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("need at least {needed} points, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("degenerate variance: input is constant")]
    Degenerate,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("lag {lag} must be smaller than series length {len}")]
    Lag { lag: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, StatsError>;

/// Variables in the lag analysis, in output order.
pub const LAG_VARIABLES: [Column; 7] = [
    Column::Close,
    Column::News,
    Column::Media,
    Column::Open,
    Column::High,
    Column::Low,
    Column::Volumefrom,
];

/// Lags of the published significance table.
pub const DEFAULT_LAGS: [usize; 9] = [5, 10, 15, 20, 25, 30, 32, 35, 40];

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(StatsError::Length(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(StatsError::TooShort { needed: 2, got: n });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::Degenerate);
    }
    // one sqrt of the product keeps r(x, x) exactly 1
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagCorrResult {
    pub lag_days: usize,
    pub r: f64,
    pub n_effective: usize,
    /// `None` when |r| = 1, where the transform is unbounded.
    pub z: Option<f64>,
    /// `None` when |r| = 1 or fewer than four pairs.
    pub p_two_sided: Option<f64>,
}

/// Correlates `x[0..T-lag]` with `y[lag..T]`: today's `x` against `y` `lag` days later.
pub fn lagged_corr(x: &[f64], y: &[f64], lag: usize) -> Result<LagCorrResult> {
    if x.len() != y.len() {
        return Err(StatsError::Length(x.len(), y.len()));
    }
    let t = x.len();
    if lag >= t {
        return Err(StatsError::Lag { lag, len: t });
    }
    let n = t - lag;
    let r = pearson_r(&x[..n], &y[lag..])?;
    let z = fisher_z(r).ok();
    let p = fisher_p(r, n).ok();
    Ok(LagCorrResult {
        lag_days: lag,
        r,
        n_effective: n,
        z,
        p_two_sided: p,
    })
}

pub fn fisher_z(r: f64) -> Result<f64> {
    if !(r.abs() < 1.0) {
        return Err(StatsError::Domain(format!("fisher_z needs |r| < 1, got {r}")));
    }
    let a = r.abs();
    Ok((0.5 * ((1.0 + a) / (1.0 - a)).ln()).copysign(r))
}

/// Two-sided p-value of H0: rho = 0, using z·sqrt(n-3) as a standard normal score.
pub fn fisher_p(r: f64, n: usize) -> Result<f64> {
    if n < 4 {
        return Err(StatsError::TooShort { needed: 4, got: n });
    }
    let zs = fisher_z(r)? * ((n - 3) as f64).sqrt();
    Ok(libm::erfc(zs.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0))
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// All-pairs lagged correlations at one lag; `cells[a][b]` pairs `vars[a]` today with `vars[b]` later.
#[derive(Debug, Clone)]
pub struct LagMatrix {
    pub lag: usize,
    pub vars: Vec<Column>,
    pub cells: Vec<Vec<LagCorrResult>>,
}

impl LagMatrix {
    pub fn get(&self, a: Column, b: Column) -> Option<&LagCorrResult> {
        let i = self.vars.iter().position(|&v| v == a)?;
        let j = self.vars.iter().position(|&v| v == b)?;
        Some(&self.cells[i][j])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("var");
        for v in &self.vars {
            let _ = write!(out, ",{}", v.name());
        }
        out.push('\n');
        for (v, row) in self.vars.iter().zip(&self.cells) {
            out.push_str(v.name());
            for c in row {
                let _ = write!(out, ",{}", c.r);
            }
            out.push('\n');
        }
        out
    }
}

pub fn lag_matrix(ms: &ModalSeries, lags: &[usize]) -> Result<Vec<LagMatrix>> {
    lag_matrix_over(ms, &LAG_VARIABLES, lags)
}

pub fn lag_matrix_over(ms: &ModalSeries, vars: &[Column], lags: &[usize]) -> Result<Vec<LagMatrix>> {
    let cols: Vec<Vec<f64>> = vars.iter().map(|&c| ms.column(c)).collect();
    lags.iter()
        .map(|&lag| {
            let cells = cols
                .iter()
                .map(|a| cols.iter().map(|b| lagged_corr(a, b, lag)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            Ok(LagMatrix {
                lag,
                vars: vars.to_vec(),
                cells,
            })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Long format, one line per (lag, pair): `lag,var_a,var_b,r,n,z,p`.
pub fn long_csv(matrices: &[LagMatrix]) -> String {
    let mut out = String::from("lag,var_a,var_b,r,n,z,p\n");
    for m in matrices {
        for (a, row) in m.vars.iter().zip(&m.cells) {
            for (b, c) in m.vars.iter().zip(row) {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    m.lag,
                    a.name(),
                    b.name(),
                    c.r,
                    c.n_effective,
                    opt(c.z),
                    opt(c.p_two_sided)
                );
            }
        }
    }
    out
}

/// Significance summary for the sentiment pairs, one row per lag and pair.
pub fn significance_summary(matrices: &[LagMatrix], alpha: f64) -> String {
    let pairs = [(Column::News, Column::Media), (Column::News, Column::Close)];
    let mut out = String::from("lag,pair,r,n,p,significant\n");
    for m in matrices {
        for (a, b) in pairs {
            if let Some(c) = m.get(a, b) {
                let sig = c.p_two_sided.map(|p| (p < alpha).to_string()).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{}~{},{:.4},{},{},{}",
                    m.lag,
                    a.name(),
                    b.name(),
                    c.r,
                    c.n_effective,
                    c.p_two_sided.map(|p| format!("{p:.3}")).unwrap_or_default(),
                    sig
                );
            }
        }
    }
    out
}

/// Writes `lag_<k>.csv` per lag, `lagcorr_long.csv`, `lagcorr_summary.csv` and
/// optionally `heatmap_lag_<k>.svg`.
pub fn write_lag_outputs(dir: &Path, matrices: &[LagMatrix], heatmaps: bool) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for m in matrices {
        fs::write(dir.join(format!("lag_{}.csv", m.lag)), m.to_csv())?;
        if heatmaps {
            let labels: Vec<&str> = m.vars.iter().map(|v| v.name()).collect();
            let values: Vec<Vec<f64>> = m.cells.iter().map(|row| row.iter().map(|c| c.r).collect()).collect();
            let title = format!("lagged correlation, lag {} days", m.lag);
            fs::write(
                dir.join(format!("heatmap_lag_{}.svg", m.lag)),
                svg::heatmap(&title, &labels, &values),
            )?;
        }
    }
    fs::write(dir.join("lagcorr_long.csv"), long_csv(matrices))?;
    fs::write(dir.join("lagcorr_summary.csv"), significance_summary(matrices, 0.05))?;
    Ok(())
}
