use serde::{Deserialize, Serialize};

use super::scaler::MinMaxScaler;
use super::series::{pct_diff, Imputation, ModalSeries};
use super::windows::{make_windows, split_by_days, validation_start, WindowSample, VALIDATION_DAYS};
use super::{DataError, Result};

/// Scaler column holding the target; columns 0..4 are financial, 4..6 sentiment.
pub const TARGET_COLUMN: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleScope {
    /// Fit on the rows that feed training samples only.
    #[default]
    Train,
    /// Fit on every row, validation included.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrepConfig {
    pub window: usize,
    pub stationary: bool,
    pub scale_scope: ScaleScope,
    pub val_days: i64,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            window: 30,
            stationary: true,
            scale_scope: ScaleScope::Train,
            val_days: VALIDATION_DAYS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Vec<WindowSample>,
    pub val: Vec<WindowSample>,
    pub scaler: MinMaxScaler,
    pub config: PrepConfig,
    /// Content hash of the aligned input series.
    pub fingerprint: String,
    pub imputed: Imputation,
    /// Rows used to fit the scaler.
    pub scaler_rows: usize,
}

impl Prepared {
    /// USD close implied by a scaled prediction for `sample`.
    pub fn reconstruct(&self, sample: &WindowSample, scaled_pred: f64) -> Result<f64> {
        reconstruct_close(&self.scaler, self.config.stationary, sample.anchor_close, scaled_pred)
    }
}

/// Unscales a prediction and, in stationary mode, compounds it onto `anchor_close`.
pub fn reconstruct_close(scaler: &MinMaxScaler, stationary: bool, anchor_close: f64, scaled_pred: f64) -> Result<f64> {
    let y = scaler.invert_value(TARGET_COLUMN, scaled_pred)?;
    Ok(if stationary { anchor_close * (1.0 + y) } else { y })
}

/// Percentage-differences open, high, low and the target; volume and
/// sentiment keep their levels. The first day is dropped.
pub fn stationarize(ms: &ModalSeries) -> Result<ModalSeries> {
    if ms.len() < 2 {
        return Err(DataError::TooFew {
            needed: 2,
            got: ms.len(),
        });
    }
    let diffs: Vec<Vec<f64>> = (0..3)
        .map(|j| pct_diff(&ms.fin.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let target = pct_diff(&ms.target)?;
    let mut out = ms.slice(1..ms.len());
    for (i, row) in out.fin.iter_mut().enumerate() {
        row[0] = diffs[0][i];
        row[1] = diffs[1][i];
        row[2] = diffs[2][i];
    }
    out.target = target;
    Ok(out)
}

fn feature_row(ms: &ModalSeries, i: usize) -> [f64; 7] {
    let (f, s) = (ms.fin[i], ms.sent[i]);
    [f[0], f[1], f[2], f[3], s[0], s[1], ms.target[i]]
}

/// Transform, scale, window and split in one deterministic pass.
pub fn prepare(ms: &ModalSeries, cfg: &PrepConfig) -> Result<Prepared> {
    if cfg.window == 0 || cfg.val_days < 1 {
        return Err(DataError::Config("window and val_days must be positive".into()));
    }
    let base = if cfg.stationary { stationarize(ms)? } else { ms.clone() };
    let t = base.len();
    if t <= cfg.window {
        return Err(DataError::TooFew {
            needed: cfg.window + 1,
            got: t,
        });
    }
    let start = validation_start(*base.dates.last().expect("non-empty"), cfg.val_days);
    let first_val = (cfg.window..t).find(|&i| base.dates[i] >= start).unwrap_or(t);
    let fit_rows = match cfg.scale_scope {
        ScaleScope::Train => first_val,
        ScaleScope::All => t,
    };
    if fit_rows == 0 {
        return Err(DataError::TooFew { needed: 1, got: 0 });
    }
    let rows: Vec<[f64; 7]> = (0..t).map(|i| feature_row(&base, i)).collect();
    let mut scaler = MinMaxScaler::new();
    scaler.fit(&rows[..fit_rows])?;
    let scaled_rows = scaler.apply(&rows)?;

    let mut scaled = base;
    for (i, r) in scaled_rows.iter().enumerate() {
        scaled.fin[i] = [r[0], r[1], r[2], r[3]];
        scaled.sent[i] = [r[4], r[5]];
        scaled.target[i] = r[TARGET_COLUMN];
    }
    let (train, val) = split_by_days(make_windows(&scaled, cfg.window)?, cfg.val_days)?;
    Ok(Prepared {
        train,
        val,
        scaler,
        config: cfg.clone(),
        fingerprint: ms.fingerprint(),
        imputed: ms.imputed,
        scaler_rows: fit_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, NaiveDate};

    fn series(t: usize) -> ModalSeries {
        let d0 = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
        let close: Vec<f64> = (0..t)
            .map(|i| 1000.0 + 50.0 * ((i as f64) * 0.3).sin() + i as f64)
            .collect();
        ModalSeries {
            dates: (0..t).map(|i| d0 + Duration::days(i as i64)).collect(),
            fin: close
                .iter()
                .enumerate()
                .map(|(i, c)| [c - 1.0, c + 5.0, c - 6.0, 10.0 + (i % 7) as f64])
                .collect(),
            sent: (0..t)
                .map(|i| [(i % 10) as f64 / 10.0, ((i * 3) % 10) as f64 / 10.0])
                .collect(),
            target: close.clone(),
            close,
            imputed: Imputation::default(),
        }
    }

    #[test]
    fn stationary_truth_reconstructs_closes() {
        let ms = series(200);
        let prep = prepare(&ms, &PrepConfig::default()).unwrap();
        for s in prep.train.iter().chain(&prep.val) {
            let usd = prep.reconstruct(s, s.target_next).unwrap();
            assert!((usd - s.target_close).abs() / s.target_close < 1e-6);
            assert_eq!(s.target_close, ms.close[s.target_index + 1]);
        }
        assert_eq!(prep.val.len(), 70);
        assert_eq!(prep.train.len() + prep.val.len(), 199 - 30);
    }

    #[test]
    fn raw_mode_targets_are_scaled_closes() {
        let ms = series(150);
        let cfg = PrepConfig {
            stationary: false,
            ..PrepConfig::default()
        };
        let prep = prepare(&ms, &cfg).unwrap();
        for s in &prep.val {
            assert!((prep.reconstruct(s, s.target_next).unwrap() - s.target_close).abs() < 1e-9);
        }
    }

    #[test]
    fn scaler_ignores_validation_rows() {
        let mut ms = series(150);
        let n = ms.len();
        ms.fin[n - 2][3] = 1e6;
        let cfg = PrepConfig {
            stationary: false,
            ..PrepConfig::default()
        };
        let prep = prepare(&ms, &cfg).unwrap();
        let train_max = ms.fin[..prep.scaler_rows].iter().map(|r| r[3]).fold(f64::MIN, f64::max);
        assert_eq!(prep.scaler.maxs()[3], train_max);
        assert_eq!(prep.scaler_rows, n - 70);
        assert!(prep.val.last().unwrap().fin_win.row(29)[3] > 1.0);

        let all = prepare(
            &ms,
            &PrepConfig {
                scale_scope: ScaleScope::All,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(all.scaler.maxs()[3], 1e6);
    }

    #[test]
    fn deterministic() {
        let ms = series(160);
        let a = prepare(&ms, &PrepConfig::default()).unwrap();
        let b = prepare(&ms, &PrepConfig::default()).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.val, b.val);
        assert_eq!(a.fingerprint, b.fingerprint);
    }
}
