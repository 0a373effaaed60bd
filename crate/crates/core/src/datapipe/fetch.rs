use std::path::PathBuf;
use std::time::Duration;

use chrono::{DateTime, NaiveDate};
use serde_json::Value;

use super::frame::{load_ohlcv, write_ohlcv, OhlcvRow};
use super::{DataError, Result};

const MAX_BARS_PER_REQUEST: i64 = 2000;

#[derive(Debug, Clone)]
pub struct FetchRequest {
    pub endpoint: String,
    pub symbol: String,
    pub currency: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    /// When set, results are read from and written to `<dir>/<symbol>/<start>_<end>.csv`.
    pub cache_dir: Option<PathBuf>,
    pub attempts: u32,
    pub backoff: Duration,
}

impl FetchRequest {
    pub fn new(endpoint: &str, symbol: &str, start: NaiveDate, end: NaiveDate) -> Self {
        FetchRequest {
            endpoint: endpoint.to_string(),
            symbol: symbol.to_string(),
            currency: "USD".to_string(),
            start,
            end,
            api_key_env: "CRYPTOCOMPARE_API_KEY".to_string(),
            cache_dir: None,
            attempts: 3,
            backoff: Duration::from_millis(500),
        }
    }

    pub fn cache_path(&self) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|d| {
            d.join(&self.symbol).join(format!(
                "{}_{}.csv",
                self.start.format("%Y-%m-%d"),
                self.end.format("%Y-%m-%d")
            ))
        })
    }
}

/// Downloads daily bars for `[start, end]`, serving from the cache when present.
pub fn fetch_ohlcv(req: &FetchRequest) -> Result<Vec<OhlcvRow>> {
    if req.start > req.end {
        return Err(DataError::Config(format!(
            "start {} is after end {}",
            req.start, req.end
        )));
    }
    if let Some(path) = req.cache_path().filter(|p| p.exists()) {
        log::info!("using cached bars at {}", path.display());
        return load_ohlcv(&path);
    }
    let key = std::env::var(&req.api_key_env)
        .ok()
        .filter(|k| !k.is_empty())
        .ok_or_else(|| DataError::Config(format!("environment variable {} is not set", req.api_key_env)))?;

    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(30)))
        .http_status_as_error(false)
        .build()
        .into();

    let mut rows: Vec<OhlcvRow> = Vec::new();
    let mut cursor = req.end;
    loop {
        let remaining = (cursor - req.start).num_days() + 1;
        let chunk = remaining.min(MAX_BARS_PER_REQUEST);
        let to_ts = cursor.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp();
        let body = get_with_retry(&agent, req, &key, to_ts, chunk - 1)?;
        let bars = parse_bars(&body)?;
        let got = bars.len();
        rows.extend(bars.into_iter().filter(|r| r.date >= req.start && r.date <= req.end));
        cursor -= chrono::Duration::days(chunk);
        if got == 0 || cursor < req.start {
            break;
        }
    }
    rows.sort_by_key(|r| r.date);
    rows.dedup_by_key(|r| r.date);
    if let Some(path) = req.cache_path() {
        write_ohlcv(&path, &rows)?;
    }
    Ok(rows)
}

fn get_with_retry(agent: &ureq::Agent, req: &FetchRequest, key: &str, to_ts: i64, limit: i64) -> Result<String> {
    let attempts = req.attempts.max(1);
    let mut last = String::new();
    for attempt in 0..attempts {
        if attempt > 0 {
            std::thread::sleep(req.backoff * 2u32.pow(attempt - 1));
        }
        let res = agent
            .get(&req.endpoint)
            .query("fsym", &req.symbol)
            .query("tsym", &req.currency)
            .query("toTs", to_ts.to_string())
            .query("limit", limit.to_string())
            .header("authorization", format!("Apikey {key}"))
            .call();
        match res {
            Ok(mut resp) => {
                let status = resp.status().as_u16();
                if status == 200 {
                    return resp
                        .body_mut()
                        .read_to_string()
                        .map_err(|e| DataError::Network(format!("reading body: {e}")));
                }
                last = format!("HTTP {status}");
                if status < 500 && status != 429 {
                    break;
                }
            }
            Err(e) => last = e.to_string(),
        }
        log::warn!(
            "request {} of {attempts} to {} failed: {last}",
            attempt + 1,
            req.endpoint
        );
    }
    Err(DataError::Network(format!(
        "{} after {attempts} attempts: {last}",
        req.endpoint
    )))
}

fn field(bar: &Value, name: &str) -> Result<f64> {
    bar.get(name)
        .and_then(Value::as_f64)
        .filter(|v| v.is_finite())
        .ok_or_else(|| DataError::Payload(format!("bar lacks numeric `{name}`")))
}

/// Accepts a bare array of bars or the `{"Data": {"Data": [...]}}` envelope.
fn parse_bars(body: &str) -> Result<Vec<OhlcvRow>> {
    let v: Value = serde_json::from_str(body).map_err(|e| DataError::Payload(e.to_string()))?;
    if v.get("Response").and_then(Value::as_str) == Some("Error") {
        let msg = v.get("Message").and_then(Value::as_str).unwrap_or("unspecified");
        return Err(DataError::Payload(format!("endpoint reported an error: {msg}")));
    }
    let arr = match &v {
        Value::Array(a) => a,
        _ => match v.get("Data") {
            Some(Value::Array(a)) => a,
            Some(d) => d
                .get("Data")
                .and_then(Value::as_array)
                .ok_or_else(|| DataError::Payload("no bar array under `Data.Data`".into()))?,
            None => return Err(DataError::Payload("expected an array of daily bars".into())),
        },
    };
    arr.iter()
        .map(|bar| {
            let ts = bar
                .get("time")
                .and_then(Value::as_i64)
                .ok_or_else(|| DataError::Payload("bar lacks integer `time`".into()))?;
            let date = DateTime::from_timestamp(ts, 0)
                .ok_or_else(|| DataError::Payload(format!("bad timestamp {ts}")))?
                .date_naive();
            Ok(OhlcvRow {
                date,
                open: field(bar, "open")?,
                high: field(bar, "high")?,
                low: field(bar, "low")?,
                close: field(bar, "close")?,
                volumefrom: field(bar, "volumefrom")?,
                volumeto: field(bar, "volumeto")?,
            })
        })
        .collect()
}
