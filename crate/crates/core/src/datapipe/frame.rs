use std::collections::HashSet;
use std::path::Path;

use chrono::NaiveDate;

use super::{DataError, Result};

pub const OHLCV_HEADER: [&str; 7] = ["date", "open", "high", "low", "close", "volumefrom", "volumeto"];
pub const SENTIMENT_HEADER: [&str; 3] = ["date", "news", "media"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Ohlcv,
    Sentiment,
}

impl Schema {
    pub fn header(self) -> &'static [&'static str] {
        match self {
            Schema::Ohlcv => &OHLCV_HEADER,
            Schema::Sentiment => &SENTIMENT_HEADER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhlcvRow {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volumefrom: f64,
    pub volumeto: f64,
}

/// One day of sentiment scores; a missing cell means no records that day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentimentRow {
    pub date: NaiveDate,
    pub news: Option<f64>,
    pub media: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawFrame {
    Ohlcv(Vec<OhlcvRow>),
    Sentiment(Vec<SentimentRow>),
}

impl RawFrame {
    pub fn len(&self) -> usize {
        match self {
            RawFrame::Ohlcv(r) => r.len(),
            RawFrame::Sentiment(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

struct Cells<'a> {
    path: &'a Path,
    row: u64,
    record: &'a csv::StringRecord,
}

impl Cells<'_> {
    fn err(&self, column: &str, message: impl Into<String>) -> DataError {
        DataError::Parse {
            path: self.path.to_path_buf(),
            row: self.row,
            column: column.to_string(),
            message: message.into(),
        }
    }

    fn raw(&self, idx: usize, column: &str) -> Result<&str> {
        self.record.get(idx).ok_or_else(|| self.err(column, "missing cell"))
    }

    fn date(&self) -> Result<NaiveDate> {
        let s = self.raw(0, "date")?;
        NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map_err(|_| self.err("date", format!("cannot parse `{s}` as YYYY-MM-DD")))
    }

    fn opt_num(&self, idx: usize, column: &str) -> Result<Option<f64>> {
        let s = self.raw(idx, column)?;
        if s.is_empty() {
            return Ok(None);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(self.err(column, format!("cannot parse `{s}` as a number"))),
        }
    }

    fn num(&self, idx: usize, column: &str) -> Result<f64> {
        self.opt_num(idx, column)?.ok_or_else(|| self.err(column, "empty cell"))
    }
}

fn read_records(path: &Path, schema: Schema) -> Result<Vec<(u64, csv::StringRecord)>> {
    let io = |e: &dyn std::fmt::Display| DataError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| io(&e))?;
    let header = rdr.headers().map_err(|e| io(&e))?.clone();
    let expected = schema.header();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(DataError::Header {
            path: path.to_path_buf(),
            expected: expected.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| io(&e))?;
        out.push((i as u64 + 1, rec));
    }
    Ok(out)
}

fn sort_and_dedup<T>(path: &Path, mut rows: Vec<T>, date: impl Fn(&T) -> NaiveDate) -> Result<Vec<T>> {
    let mut seen = HashSet::new();
    for r in &rows {
        if !seen.insert(date(r)) {
            return Err(DataError::DuplicateDate {
                path: path.to_path_buf(),
                date: date(r).to_string(),
            });
        }
    }
    rows.sort_by_key(|r| date(r));
    Ok(rows)
}

/// Parses an OHLCV file; rows are returned date-ascending. Row numbers in
/// errors count data rows from 1.
pub fn load_ohlcv(path: &Path) -> Result<Vec<OhlcvRow>> {
    let mut rows = Vec::new();
    for (row, record) in read_records(path, Schema::Ohlcv)? {
        let c = Cells {
            path,
            row,
            record: &record,
        };
        let r = OhlcvRow {
            date: c.date()?,
            open: c.num(1, "open")?,
            high: c.num(2, "high")?,
            low: c.num(3, "low")?,
            close: c.num(4, "close")?,
            volumefrom: c.num(5, "volumefrom")?,
            volumeto: c.num(6, "volumeto")?,
        };
        for (name, v) in [
            ("open", r.open),
            ("high", r.high),
            ("low", r.low),
            ("close", r.close),
            ("volumefrom", r.volumefrom),
            ("volumeto", r.volumeto),
        ] {
            if v < 0.0 {
                return Err(c.err(name, format!("negative value {v}")));
            }
        }
        if r.low > r.open.min(r.close) {
            return Err(c.err("low", format!("low {} above min(open, close)", r.low)));
        }
        if r.high < r.open.max(r.close) {
            return Err(c.err("high", format!("high {} below max(open, close)", r.high)));
        }
        rows.push(r);
    }
    sort_and_dedup(path, rows, |r| r.date)
}

pub fn load_sentiment(path: &Path) -> Result<Vec<SentimentRow>> {
    let mut rows = Vec::new();
    for (row, record) in read_records(path, Schema::Sentiment)? {
        let c = Cells {
            path,
            row,
            record: &record,
        };
        let r = SentimentRow {
            date: c.date()?,
            news: c.opt_num(1, "news")?,
            media: c.opt_num(2, "media")?,
        };
        for (name, v) in [("news", r.news), ("media", r.media)] {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(&v) {
                    return Err(c.err(name, format!("score {v} outside [0, 1]")));
                }
            }
        }
        rows.push(r);
    }
    sort_and_dedup(path, rows, |r| r.date)
}

pub fn load_csv(path: &Path, schema: Schema) -> Result<RawFrame> {
    Ok(match schema {
        Schema::Ohlcv => RawFrame::Ohlcv(load_ohlcv(path)?),
        Schema::Sentiment => RawFrame::Sentiment(load_sentiment(path)?),
    })
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| DataError::Io {
            path: parent.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    csv::Writer::from_path(path).map_err(|e| DataError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_err(path: &Path) -> impl Fn(csv::Error) -> DataError + '_ {
    move |e| DataError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn write_ohlcv(path: &Path, rows: &[OhlcvRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(OHLCV_HEADER).map_err(write_err(path))?;
    for r in rows {
        w.write_record([
            r.date.format("%Y-%m-%d").to_string(),
            r.open.to_string(),
            r.high.to_string(),
            r.low.to_string(),
            r.close.to_string(),
            r.volumefrom.to_string(),
            r.volumeto.to_string(),
        ])
        .map_err(write_err(path))?;
    }
    w.flush().map_err(|e| DataError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_sentiment(path: &Path, rows: &[SentimentRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SENTIMENT_HEADER).map_err(write_err(path))?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([r.date.format("%Y-%m-%d").to_string(), cell(r.news), cell(r.media)])
            .map_err(write_err(path))?;
    }
    w.flush().map_err(|e| DataError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
