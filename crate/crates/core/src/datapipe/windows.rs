use chrono::{Duration, NaiveDate};

use super::series::ModalSeries;
use super::{DataError, Result};
use crate::ndcore::Tensor;

/// Length of the validation tail in calendar days.
pub const VALIDATION_DAYS: i64 = 70;

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    /// `L × 4` financial rows.
    pub fin_win: Tensor,
    /// `L × 2` sentiment rows.
    pub sent_win: Tensor,
    /// Target of the step right after the window, in series units.
    pub target_next: f64,
    /// USD close on the window's last day.
    pub anchor_close: f64,
    /// USD close on the target day.
    pub target_close: f64,
    pub target_date: NaiveDate,
    /// Row index of the target in the source series.
    pub target_index: usize,
}

/// Sliding windows of length `window`; sample `i` covers rows `[i, i+window)` and targets row `i+window`.
pub fn make_windows(ms: &ModalSeries, window: usize) -> Result<Vec<WindowSample>> {
    let t = ms.len();
    if window == 0 || t <= window {
        return Err(DataError::TooFew {
            needed: window + 1,
            got: t,
        });
    }
    (0..t - window)
        .map(|i| {
            let end = i + window;
            let fin: Vec<f64> = ms.fin[i..end].iter().flatten().copied().collect();
            let sent: Vec<f64> = ms.sent[i..end].iter().flatten().copied().collect();
            Ok(WindowSample {
                fin_win: Tensor::new(vec![window, 4], fin).map_err(|e| DataError::Domain(e.to_string()))?,
                sent_win: Tensor::new(vec![window, 2], sent).map_err(|e| DataError::Domain(e.to_string()))?,
                target_next: ms.target[end],
                anchor_close: ms.close[end - 1],
                target_close: ms.close[end],
                target_date: ms.dates[end],
                target_index: end,
            })
        })
        .collect()
}

/// First date belonging to the validation tail ending at `last`.
pub(crate) fn validation_start(last: NaiveDate, days: i64) -> NaiveDate {
    last - Duration::days(days - 1)
}

/// Validation gets the samples whose target falls within the final `VALIDATION_DAYS` days.
pub fn split_train_val(samples: Vec<WindowSample>) -> Result<(Vec<WindowSample>, Vec<WindowSample>)> {
    split_by_days(samples, VALIDATION_DAYS)
}

pub fn split_by_days(samples: Vec<WindowSample>, days: i64) -> Result<(Vec<WindowSample>, Vec<WindowSample>)> {
    let needed = days.max(1) as usize + 1;
    if samples.len() < needed {
        return Err(DataError::TooFew {
            needed,
            got: samples.len(),
        });
    }
    let last = samples.iter().map(|s| s.target_date).max().expect("non-empty");
    let start = validation_start(last, days);
    let (train, val): (Vec<_>, Vec<_>) = samples.into_iter().partition(|s| s.target_date < start);
    if train.is_empty() {
        return Err(DataError::TooFew { needed, got: 0 });
    }
    Ok((train, val))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datapipe::Imputation;

    fn series(t: usize) -> ModalSeries {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        ModalSeries {
            dates: (0..t).map(|i| d0 + Duration::days(i as i64)).collect(),
            fin: (0..t).map(|i| [i as f64; 4]).collect(),
            sent: (0..t).map(|i| [i as f64 / 1000.0; 2]).collect(),
            target: (0..t).map(|i| 100.0 + i as f64).collect(),
            close: (0..t).map(|i| 100.0 + i as f64).collect(),
            imputed: Imputation::default(),
        }
    }

    #[test]
    fn counts_and_indexing() {
        let ms = series(5);
        let w = make_windows(&ms, 3).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].target_date, ms.dates[3]);
        assert_eq!(w[0].fin_win.shape(), &[3, 4]);
        assert_eq!(w[1].fin_win.row(0), &[1.0; 4]);
        assert_eq!(w[0].anchor_close, 102.0);
        let targets: Vec<f64> = w.iter().map(|s| s.target_next).collect();
        assert_eq!(targets, ms.target[3..]);
        assert!(make_windows(&ms, 5).is_err());
    }

    #[test]
    fn seventy_day_tail() {
        let w = make_windows(&series(103), 3).unwrap();
        assert_eq!(w.len(), 100);
        let (train, val) = split_train_val(w.clone()).unwrap();
        assert_eq!((train.len(), val.len()), (30, 70));
        assert_eq!(val, w[30..]);
        assert!(train.iter().all(|s| s.target_date < val[0].target_date));
        let joined: Vec<_> = train.into_iter().chain(val).collect();
        assert_eq!(joined, w);
    }

    #[test]
    fn too_few_samples() {
        let w = make_windows(&series(73), 3).unwrap();
        assert!(matches!(
            split_train_val(w),
            Err(DataError::TooFew { needed: 71, got: 70 })
        ));
    }
}
