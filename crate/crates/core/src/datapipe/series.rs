use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use sha2::{Digest, Sha256};

use super::frame::{OhlcvRow, SentimentRow};
use super::{DataError, Result};
use crate::stats::pearson_r;

/// Fill value for days without sentiment records.
pub const NEUTRAL_SENTIMENT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    Open,
    High,
    Low,
    Close,
    Volumefrom,
    News,
    Media,
}

impl Column {
    pub const FIN: [Column; 4] = [Column::Open, Column::High, Column::Low, Column::Volumefrom];
    pub const SENT: [Column; 2] = [Column::News, Column::Media];

    pub fn name(self) -> &'static str {
        match self {
            Column::Open => "open",
            Column::High => "high",
            Column::Low => "low",
            Column::Close => "close",
            Column::Volumefrom => "volumefrom",
            Column::News => "news",
            Column::Media => "media",
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Column {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self> {
        [Column::Close, Column::News, Column::Media]
            .into_iter()
            .chain(Column::FIN)
            .find(|c| c.name() == s)
            .ok_or_else(|| DataError::Config(format!("unknown column `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Imputation {
    pub days: usize,
    pub cells: usize,
}

/// Aligned modalities on a shared calendar.
///
/// `target` is what the model predicts (close, or its percentage change in
/// stationary mode); `close` always holds the USD close of the same day.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalSeries {
    pub dates: Vec<NaiveDate>,
    pub fin: Vec<[f64; 4]>,
    pub sent: Vec<[f64; 2]>,
    pub target: Vec<f64>,
    pub close: Vec<f64>,
    pub imputed: Imputation,
}

impl ModalSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Financial modality only; sentiment is held at the neutral value.
    pub fn financial_only(ohlcv: &[OhlcvRow]) -> Self {
        let t = ohlcv.len();
        ModalSeries {
            dates: ohlcv.iter().map(|r| r.date).collect(),
            fin: ohlcv.iter().map(|r| [r.open, r.high, r.low, r.volumefrom]).collect(),
            sent: vec![[NEUTRAL_SENTIMENT; 2]; t],
            target: ohlcv.iter().map(|r| r.close).collect(),
            close: ohlcv.iter().map(|r| r.close).collect(),
            imputed: Imputation { days: t, cells: 2 * t },
        }
    }

    /// `Close` reads the prediction target, which is the USD close before stationarization.
    pub fn column(&self, c: Column) -> Vec<f64> {
        match c {
            Column::Open => self.fin.iter().map(|r| r[0]).collect(),
            Column::High => self.fin.iter().map(|r| r[1]).collect(),
            Column::Low => self.fin.iter().map(|r| r[2]).collect(),
            Column::Volumefrom => self.fin.iter().map(|r| r[3]).collect(),
            Column::News => self.sent.iter().map(|r| r[0]).collect(),
            Column::Media => self.sent.iter().map(|r| r[1]).collect(),
            Column::Close => self.target.clone(),
        }
    }

    /// SHA-256 over dates and every value, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for i in 0..self.len() {
            h.update(self.dates[i].format("%Y-%m-%d").to_string().as_bytes());
            for v in self.fin[i]
                .iter()
                .chain(&self.sent[i])
                .chain([&self.target[i], &self.close[i]])
            {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Rows `range` as a new series.
    pub fn slice(&self, range: std::ops::Range<usize>) -> ModalSeries {
        ModalSeries {
            dates: self.dates[range.clone()].to_vec(),
            fin: self.fin[range.clone()].to_vec(),
            sent: self.sent[range.clone()].to_vec(),
            target: self.target[range.clone()].to_vec(),
            close: self.close[range].to_vec(),
            imputed: self.imputed,
        }
    }
}

/// Inner join on the OHLCV calendar; missing sentiment cells become neutral.
pub fn align_and_impute(ohlcv: &[OhlcvRow], sentiment: &[SentimentRow]) -> Result<ModalSeries> {
    let by_date: HashMap<NaiveDate, &SentimentRow> = sentiment.iter().map(|r| (r.date, r)).collect();
    if !ohlcv.iter().any(|r| by_date.contains_key(&r.date)) {
        return Err(DataError::EmptyIntersection);
    }
    let mut ms = ModalSeries::financial_only(ohlcv);
    ms.imputed = Imputation::default();
    for (i, row) in ohlcv.iter().enumerate() {
        let s = by_date.get(&row.date);
        let news = s.and_then(|s| s.news);
        let media = s.and_then(|s| s.media);
        let missing = usize::from(news.is_none()) + usize::from(media.is_none());
        if missing > 0 {
            ms.imputed.days += 1;
            ms.imputed.cells += missing;
        }
        ms.sent[i] = [news.unwrap_or(NEUTRAL_SENTIMENT), media.unwrap_or(NEUTRAL_SENTIMENT)];
    }
    if ms.imputed.cells > 0 {
        log::info!(
            "imputed {} sentiment cells over {} days with {NEUTRAL_SENTIMENT}",
            ms.imputed.cells,
            ms.imputed.days
        );
    }
    Ok(ms)
}

/// `d_t = (p_{t+1} - p_t) / p_t`.
pub fn pct_diff(series: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = series.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
        return Err(DataError::Domain(format!(
            "percentage difference needs positive prices, got {bad}"
        )));
    }
    Ok(series.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect())
}

/// Rebuilds prices from `anchor` by compounding `diffs`; output has `diffs.len() + 1` entries.
pub fn inverse_pct_diff(anchor: f64, diffs: &[f64]) -> Result<Vec<f64>> {
    if !(anchor > 0.0) || !anchor.is_finite() {
        return Err(DataError::Domain(format!(
            "anchor price must be positive, got {anchor}"
        )));
    }
    let mut out = Vec::with_capacity(diffs.len() + 1);
    out.push(anchor);
    for &d in diffs {
        if !(d > -1.0) {
            return Err(DataError::Domain(format!("change {d} would give a non-positive price")));
        }
        let prev = *out.last().expect("non-empty");
        out.push(prev * (1.0 + d));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenEntry {
    pub name: String,
    /// `None` when the candidate is constant.
    pub r: Option<f64>,
    pub selected: bool,
}

/// Flags candidates whose |pearson r| with `close` reaches `threshold`.
pub fn correlation_screen(candidates: &[(&str, &[f64])], close: &[f64], threshold: f64) -> Result<Vec<ScreenEntry>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(DataError::Domain(format!(
            "screen threshold {threshold} outside [0, 1]"
        )));
    }
    candidates
        .iter()
        .map(|(name, xs)| {
            let r = match pearson_r(xs, close) {
                Ok(r) => Some(r),
                Err(crate::stats::StatsError::Degenerate) => None,
                Err(e) => return Err(DataError::Domain(format!("{name}: {e}"))),
            };
            Ok(ScreenEntry {
                name: name.to_string(),
                r,
                selected: r.unwrap_or(0.0).abs() >= threshold,
            })
        })
        .collect()
}
