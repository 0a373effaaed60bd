//! The `dam` command line: fetch, train, ablate, compare, lagcorr, report.
//!
//! Hyperparameters come from a TOML run config; flags only pick files, the
//! output directory and the seed. Exit codes follow `sysexits`: 64 usage,
//! 65 bad data, 66 missing input, 70 internal failure, and 2 for network or
//! environment problems.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dam::DamConfig;
use crate::datapipe::{
    align_and_impute, fetch_ohlcv, load_ohlcv, load_sentiment, write_ohlcv, DataError, FetchRequest, ModalSeries,
    PrepConfig,
};
use crate::stats::{lag_matrix, write_lag_outputs, DEFAULT_LAGS};
use crate::svg::{line_plot, Series};
use crate::train_eval::{
    improvements_csv, median, results_csv, run_ablation, run_comparative, run_experiment, save_run, ExperimentConfig,
    MetricsReport, TrainConfig, TrainError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ENV: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NO_INPUT: i32 = 66;
pub const EXIT_SOFTWARE: i32 = 70;

const DEFAULT_ENDPOINT: &str = "https://min-api.cryptocompare.com/data/v2/histoday";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        let code = match &e {
            DataError::Io { message, .. } if message.contains("No such file") || message.contains("not found") => {
                EXIT_NO_INPUT
            }
            DataError::Network(_) => EXIT_ENV,
            DataError::Config(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Data(d) => d.into(),
            TrainError::Config(m) => CliError::new(EXIT_USAGE, format!("invalid training config: {m}")),
            other => CliError::new(EXIT_SOFTWARE, other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::new(EXIT_SOFTWARE, format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "dam", version, about = "Dual attention forecaster for daily crypto prices")]
pub struct Cli {
    /// Log progress (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download daily OHLCV bars into the CSV format the pipeline reads.
    Fetch(FetchArgs),
    /// Train one model and write weights, manifest and metrics.
    Train(RunArgs),
    /// Train the four attention ablations under every configured seed.
    Ablate(RunArgs),
    /// Dual attention against concatenation, stationary and raw, with and without sentiment.
    Compare(RunArgs),
    /// Lagged correlation matrices and Fisher significance tests.
    Lagcorr(LagArgs),
    /// Render a run directory into a text summary and SVG plots.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[arg(long, default_value = "BTC")]
    pub symbol: String,
    #[arg(long, default_value = "USD")]
    pub currency: String,
    #[arg(long)]
    pub from: NaiveDate,
    #[arg(long)]
    pub to: NaiveDate,
    #[arg(long, default_value = DEFAULT_ENDPOINT)]
    pub endpoint: String,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "CRYPTOCOMPARE_API_KEY")]
    pub api_key_env: String,
    /// Cache root; responses land in `<cache>/<symbol>/<from>_<to>.csv`.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Accepted for uniformity; fetching is not random.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replaces the configured seed (and seed grid) with this one.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct LagArgs {
    /// Directory with `ohlcv.csv` and `sentiment.csv`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LAGS.to_vec())]
    pub lags: Vec<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write one SVG heatmap per lag.
    #[arg(long)]
    pub heatmap: bool,
    /// Accepted for uniformity; the analysis is not random.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub run_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Accepted for uniformity; reporting is not random.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub ohlcv: PathBuf,
    /// Omit for a financial-only run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment: Option<PathBuf>,
}

/// Everything one run needs, as read from TOML. Relative paths resolve
/// against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataPaths,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub prep: PrepConfig,
    #[serde(default)]
    pub model: DamConfig,
    #[serde(default)]
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::new(EXIT_USAGE, format!("bad run config: {}", e.message())))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::new(EXIT_NO_INPUT, format!("{}: {e}", path.display())))?;
        let mut cfg =
            Self::from_toml(&text).map_err(|e| CliError::new(e.code, format!("{}: {}", path.display(), e)))?;
        let base = path.parent().unwrap_or(Path::new("."));
        // join keeps absolute paths as they are
        cfg.data.ohlcv = base.join(&cfg.data.ohlcv);
        cfg.data.sentiment = cfg.data.sentiment.map(|p| base.join(p));
        cfg.out_dir = cfg.out_dir.map(|p| base.join(p));
        Ok(cfg)
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            prep: self.prep.clone(),
            model: DamConfig {
                multimodal: self.model.multimodal && self.data.sentiment.is_some(),
                ..self.model.clone()
            },
            train: self.train.clone(),
            seeds: self.seeds.clone(),
        }
    }

    fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.train.seed = s;
            self.seeds = vec![s];
        }
        self
    }

    fn validate(&self) -> CliResult<()> {
        self.experiment()
            .model
            .validate()
            .map_err(|e| CliError::new(EXIT_USAGE, e.to_string()))?;
        self.train
            .validate()
            .map_err(|e| CliError::new(EXIT_USAGE, e.to_string()))
    }
}

pub fn load_series(ohlcv: &Path, sentiment: Option<&Path>) -> CliResult<ModalSeries> {
    let bars = load_ohlcv(ohlcv)?;
    Ok(match sentiment {
        Some(p) => align_and_impute(&bars, &load_sentiment(p)?)?,
        None => ModalSeries::financial_only(&bars),
    })
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Fetch(a) => fetch(a),
        Command::Train(a) => train(a),
        Command::Ablate(a) => ablate(a),
        Command::Compare(a) => compare(a),
        Command::Lagcorr(a) => lagcorr(a),
        Command::Report(a) => report(a),
    }
}

fn fetch(a: FetchArgs) -> CliResult<()> {
    if a.from > a.to {
        return Err(CliError::new(
            EXIT_USAGE,
            format!("--from {} is after --to {}", a.from, a.to),
        ));
    }
    let req = FetchRequest {
        currency: a.currency,
        api_key_env: a.api_key_env,
        cache_dir: a.cache_dir,
        ..FetchRequest::new(&a.endpoint, &a.symbol, a.from, a.to)
    };
    let rows = fetch_ohlcv(&req).map_err(|e| match e {
        DataError::Config(m) => CliError::new(EXIT_ENV, m),
        other => other.into(),
    })?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    write_ohlcv(&a.out, &rows)?;
    println!("wrote {} bars to {}", rows.len(), a.out.display());
    Ok(())
}

/// Loads and validates the config, prepares the output directory and
/// writes the resolved-config echo.
/// `single` runs take the first listed seed when `--seed` is absent.
fn setup(a: &RunArgs, single: bool) -> CliResult<(RunConfig, ModalSeries, PathBuf)> {
    let cfg = RunConfig::read(&a.config)?;
    let seed = a
        .seed
        .or_else(|| if single { cfg.seeds.first().copied() } else { None });
    let cfg = cfg.with_seed(seed);
    cfg.validate()?;
    let out = a
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .ok_or_else(|| CliError::new(EXIT_USAGE, "no output directory: pass --out or set out_dir"))?;
    let series = load_series(&cfg.data.ohlcv, cfg.data.sentiment.as_deref())?;
    fs::create_dir_all(&out).map_err(io_err(&out))?;
    let echo = toml::to_string(&cfg).map_err(|e| CliError::new(EXIT_SOFTWARE, e.to_string()))?;
    let path = out.join("config.resolved.toml");
    fs::write(&path, echo).map_err(io_err(&path))?;
    Ok((cfg, series, out))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn write_runs(out: &Path, runs: &[MetricsReport]) -> CliResult<()> {
    let json = serde_json::to_string_pretty(runs).map_err(|e| CliError::new(EXIT_SOFTWARE, e.to_string()))?;
    write(&out.join("runs.json"), &json)
}

fn train(a: RunArgs) -> CliResult<()> {
    let (cfg, series, out) = setup(&a, true)?;
    let run = run_experiment(&series, &cfg.experiment())?;
    save_run(&out, &run)?;
    write(
        &out.join("results.csv"),
        &results_csv(std::slice::from_ref(&run.report), None),
    )?;
    let r = &run.report;
    println!(
        "{} seed {}: median AE {:.2} USD, MAPE {:.4}, best epoch {}",
        r.variant, r.seed, r.median_ae_usd, r.mape, r.best_epoch
    );
    Ok(())
}

fn ablate(a: RunArgs) -> CliResult<()> {
    let (cfg, series, out) = setup(&a, false)?;
    let runs = run_ablation(&series, &cfg.experiment())?;
    write(&out.join("ablation.csv"), &results_csv(&runs, None))?;
    write_runs(&out, &runs)?;
    print!("{}", variant_medians(&runs));
    Ok(())
}

fn compare(a: RunArgs) -> CliResult<()> {
    let (cfg, series, out) = setup(&a, false)?;
    let rep = run_comparative(&series, &cfg.experiment())?;
    write(
        &out.join("comparative.csv"),
        &results_csv(&rep.runs, Some((&rep.persistence, &rep.fingerprint))),
    )?;
    write(&out.join("improvements.csv"), &improvements_csv(&rep.improvements))?;
    write_runs(&out, &rep.runs)?;
    print!("{}", improvements_csv(&rep.improvements));
    Ok(())
}

fn lagcorr(a: LagArgs) -> CliResult<()> {
    let series = load_series(&a.data.join("ohlcv.csv"), Some(&a.data.join("sentiment.csv")))?;
    let matrices = lag_matrix(&series, &a.lags).map_err(|e| CliError::new(EXIT_DATA, e.to_string()))?;
    write_lag_outputs(&a.out, &matrices, a.heatmap).map_err(io_err(&a.out))?;
    let summary = fs::read_to_string(a.out.join("lagcorr_summary.csv")).map_err(io_err(&a.out))?;
    print!("{summary}");
    Ok(())
}

/// Median error and MAPE per (variant, mode) group, in first-seen order.
fn variant_medians(runs: &[MetricsReport]) -> String {
    let mut keys: Vec<(String, bool, bool)> = Vec::new();
    for r in runs {
        let k = (r.variant.to_string(), r.stationary, r.multimodal);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut out = format!(
        "{:<14} {:>10} {:>10} {:>6} {:>14} {:>10}\n",
        "variant", "stationary", "multimodal", "seeds", "median AE USD", "MAPE"
    );
    for (v, st, mm) in keys {
        let group: Vec<&MetricsReport> = runs
            .iter()
            .filter(|r| r.variant.to_string() == v && r.stationary == st && r.multimodal == mm)
            .collect();
        let mut ae: Vec<f64> = group.iter().map(|r| r.median_ae_usd).collect();
        let mut mp: Vec<f64> = group.iter().map(|r| r.mape).collect();
        let _ = writeln!(
            out,
            "{v:<14} {st:>10} {mm:>10} {:>6} {:>14.3} {:>10.5}",
            group.len(),
            median(&mut ae),
            median(&mut mp)
        );
    }
    out
}

fn read_predictions(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut rdr =
        csv::Reader::from_path(path).map_err(|e| CliError::new(EXIT_DATA, format!("{}: {e}", path.display())))?;
    let (mut pred, mut actual) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::new(EXIT_DATA, format!("{}: {e}", path.display())))?;
        let num = |i: usize| -> CliResult<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CliError::new(EXIT_DATA, format!("{}: bad row {:?}", path.display(), rec)))
        };
        pred.push(num(0)?);
        actual.push(num(1)?);
    }
    Ok((pred, actual))
}

fn loss_plot(title: &str, r: &MetricsReport) -> String {
    let train: Vec<f64> = r.loss_history.iter().map(|e| e.train_loss).collect();
    let val: Vec<f64> = r.loss_history.iter().map(|e| e.val_loss).collect();
    line_plot(
        title,
        &[
            Series {
                label: "train",
                values: &train,
            },
            Series {
                label: "validation",
                values: &val,
            },
        ],
    )
}

fn report(a: ReportArgs) -> CliResult<()> {
    if !a.run_dir.is_dir() {
        return Err(CliError::new(
            EXIT_NO_INPUT,
            format!("no run directory at {}", a.run_dir.display()),
        ));
    }
    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    let mut text = format!("run directory: {}\n\n", a.run_dir.display());
    let mut found = false;

    let single = a.run_dir.join("report.json");
    if single.is_file() {
        found = true;
        let body = fs::read_to_string(&single).map_err(io_err(&single))?;
        let r: MetricsReport =
            serde_json::from_str(&body).map_err(|e| CliError::new(EXIT_DATA, format!("{}: {e}", single.display())))?;
        let _ = writeln!(
            text,
            "single run: {} (stationary {}, multimodal {}), seed {}\n  median AE {:.3} USD, MAPE {:.5}, best epoch {} of {}, {} parameters\n",
            r.variant,
            r.stationary,
            r.multimodal,
            r.seed,
            r.median_ae_usd,
            r.mape,
            r.best_epoch,
            r.loss_history.len(),
            r.param_count
        );
        write(
            &a.out.join("loss.svg"),
            &loss_plot(&format!("{} loss (scaled MSE)", r.variant), &r),
        )?;
        let preds = a.run_dir.join("predictions.csv");
        if preds.is_file() {
            let (p, act) = read_predictions(&preds)?;
            let svg = line_plot(
                "validation closes (USD)",
                &[
                    Series {
                        label: "actual",
                        values: &act,
                    },
                    Series {
                        label: "predicted",
                        values: &p,
                    },
                ],
            );
            write(&a.out.join("predictions.svg"), &svg)?;
        }
    }

    let runs_path = a.run_dir.join("runs.json");
    if runs_path.is_file() {
        found = true;
        let body = fs::read_to_string(&runs_path).map_err(io_err(&runs_path))?;
        let runs: Vec<MetricsReport> = serde_json::from_str(&body)
            .map_err(|e| CliError::new(EXIT_DATA, format!("{}: {e}", runs_path.display())))?;
        let _ = writeln!(
            text,
            "grid of {} runs, medians over seeds:\n{}",
            runs.len(),
            variant_medians(&runs)
        );
        for (i, r) in runs.iter().enumerate() {
            let name = format!("loss_{i:02}_{}_{}.svg", r.variant, r.seed);
            write(
                &a.out.join(name),
                &loss_plot(&format!("{} seed {} loss", r.variant, r.seed), r),
            )?;
        }
    }

    for name in ["results.csv", "ablation.csv", "comparative.csv", "improvements.csv"] {
        let p = a.run_dir.join(name);
        if p.is_file() {
            found = true;
            let body = fs::read_to_string(&p).map_err(io_err(&p))?;
            let _ = writeln!(text, "{name}:\n{}", align_csv(&body));
        }
    }
    if !found {
        return Err(CliError::new(
            EXIT_NO_INPUT,
            format!("{} holds no report.json, runs.json or results CSV", a.run_dir.display()),
        ));
    }
    write(&a.out.join("summary.txt"), &text)?;
    print!("{text}");
    Ok(())
}

/// Pads CSV columns to a fixed-width text table.
fn align_csv(body: &str) -> String {
    let rows: Vec<Vec<&str>> = body.lines().map(|l| l.split(',').collect()).collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|j| rows.iter().filter_map(|r| r.get(j)).map(|c| c.len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(j, c)| format!("{c:<w$}", w = widths[j]))
            .collect();
        let _ = writeln!(out, "  {}", cells.join("  ").trim_end());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_names_the_key() {
        let err = RunConfig::from_toml("[data]\nohlcv = \"a.csv\"\n[train]\nlearnin_rate = 0.1\n").unwrap_err();
        assert_eq!(err.code, EXIT_USAGE);
        assert!(err.message.contains("learnin_rate"), "{}", err.message);
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = RunConfig::from_toml("[data]\nohlcv = \"a.csv\"\n").unwrap();
        assert_eq!(cfg.train, TrainConfig::default());
        assert!(!cfg.experiment().model.multimodal);
    }

    #[test]
    fn seed_flag_replaces_the_grid() {
        let cfg = RunConfig::from_toml("seeds = [1, 2, 3]\n[data]\nohlcv = \"a.csv\"\n")
            .unwrap()
            .with_seed(Some(9));
        assert_eq!(cfg.experiment().seed_list(), vec![9]);
    }

    #[test]
    fn csv_alignment_pads_columns() {
        assert_eq!(align_csv("a,bb\nccc,d\n"), "  a    bb\n  ccc  d\n");
    }
}
