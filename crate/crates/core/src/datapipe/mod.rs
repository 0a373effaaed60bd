//! Data ingestion and preprocessing: CSV frames, HTTP fetch, alignment,
//! stationarization, min-max scaling, windowing and the train/validation split.

mod fetch;
mod frame;
mod pipeline;
mod scaler;
mod series;
mod windows;

use std::path::PathBuf;

use thiserror::Error;

pub use fetch::{fetch_ohlcv, FetchRequest};
pub use frame::{
    load_csv, load_ohlcv, load_sentiment, write_ohlcv, write_sentiment, OhlcvRow, RawFrame, Schema, SentimentRow,
    OHLCV_HEADER, SENTIMENT_HEADER,
};
pub use pipeline::{prepare, reconstruct_close, PrepConfig, Prepared, ScaleScope, TARGET_COLUMN};
pub use scaler::MinMaxScaler;
pub use series::{
    align_and_impute, correlation_screen, inverse_pct_diff, pct_diff, Column, Imputation, ModalSeries, ScreenEntry,
    NEUTRAL_SENTIMENT,
};
pub use windows::{make_windows, split_by_days, split_train_val, WindowSample, VALIDATION_DAYS};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: header mismatch, expected `{expected}`, found `{found}`")]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}: row {row}, column `{column}`: {message}")]
    Parse {
        path: PathBuf,
        row: u64,
        column: String,
        message: String,
    },
    #[error("{path}: duplicate date {date}")]
    DuplicateDate { path: PathBuf, date: String },
    #[error("dates of the two inputs do not overlap")]
    EmptyIntersection,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("need {needed} samples, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("scaler state: {0}")]
    State(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("malformed payload: {0}")]
    Payload(String),
}

pub type Result<T> = std::result::Result<T, DataError>;
