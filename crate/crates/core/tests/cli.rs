use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

use chrono::{Duration, NaiveDate};
use dam_core::datapipe::{load_ohlcv, write_ohlcv, write_sentiment};
use dam_core::synthetic::synthetic_market;

fn dam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dam"))
        .args(args)
        .env_remove("DAM_CLI_TEST_KEY")
        .output()
        .expect("binary runs")
}

fn dam_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dam"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a small synthetic dataset and a fast run config into `dir`.
fn dataset(dir: &Path, days: usize) {
    let (o, sent) = synthetic_market(days, 21, 13);
    write_ohlcv(&dir.join("ohlcv.csv"), &o).unwrap();
    write_sentiment(&dir.join("sentiment.csv"), &sent).unwrap();
    std::fs::write(
        dir.join("run.toml"),
        "seeds = [1, 2]\n\
         [data]\nohlcv = \"ohlcv.csv\"\nsentiment = \"sentiment.csv\"\n\
         [prep]\nwindow = 5\nval_days = 20\n\
         [model]\nvariant = \"full\"\nd_model = 4\nhidden = 6\n\
         [train]\nepochs = 3\nbatch_size = 16\nearly_stop_patience = 3\n",
    )
    .unwrap();
}

#[test]
fn help_exits_zero_and_bad_usage_exits_64() {
    assert_eq!(dam(&["--help"]).status.code(), Some(0));
    assert_eq!(dam(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(dam(&["train"]).status.code(), Some(64));
}

#[test]
fn fetch_rejects_reversed_range() {
    let o = dam(&[
        "fetch",
        "--from",
        "2022-02-01",
        "--to",
        "2022-01-01",
        "--out",
        "/tmp/never.csv",
    ]);
    assert_eq!(o.status.code(), Some(64), "{}", stderr(&o));
    assert!(stderr(&o).contains("after"));
}

#[test]
fn fetch_without_key_exits_2() {
    let o = dam(&[
        "fetch",
        "--from",
        "2022-01-01",
        "--to",
        "2022-01-02",
        "--endpoint",
        "http://127.0.0.1:9/none",
        "--api-key-env",
        "DAM_CLI_TEST_KEY",
        "--out",
        "/tmp/never.csv",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("DAM_CLI_TEST_KEY"));
}

#[test]
fn fetch_from_mock_endpoint_writes_every_day() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let start = NaiveDate::from_ymd_opt(2022, 3, 1).unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
            }
            let bars: Vec<String> = (0..5)
                .map(|i| {
                    let t = (start + Duration::days(i))
                        .and_hms_opt(0, 0, 0)
                        .unwrap()
                        .and_utc()
                        .timestamp();
                    format!(r#"{{"time":{t},"open":10,"high":12,"low":9,"close":11,"volumefrom":5,"volumeto":55}}"#)
                })
                .collect();
            let body = format!(r#"{{"Response":"Success","Data":{{"Data":[{}]}}}}"#, bars.join(","));
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bars/ohlcv.csv");
    let endpoint = format!("http://{addr}/data/v2/histoday");
    let o = dam_env(
        &[
            "fetch",
            "--from",
            "2022-03-01",
            "--to",
            "2022-03-05",
            "--endpoint",
            &endpoint,
            "--api-key-env",
            "DAM_CLI_MOCK_KEY",
            "--out",
            s(&out),
        ],
        "DAM_CLI_MOCK_KEY",
        "secret",
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = load_ohlcv(&out).unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0].date, start);
}

#[test]
fn train_is_deterministic_and_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path(), 90);
    let cfg = dir.path().join("run.toml");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let t0 = std::time::Instant::now();
        let o = dam(&["train", "--config", s(&cfg), "--out", s(out), "--seed", "4"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(t0.elapsed().as_secs() < 120);
    }
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    for f in [
        "report.json",
        "weights.bin",
        "weights.json",
        "predictions.csv",
        "results.csv",
        "config.resolved.toml",
    ] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
    let echo = String::from_utf8(read(&a, "config.resolved.toml")).unwrap();
    assert!(echo.contains("seed = 4") && echo.contains("d_model = 4"), "{echo}");
}

#[test]
fn train_without_seed_flag_uses_first_listed_seed() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path(), 90);
    let out = dir.path().join("run");
    let o = dam(&["train", "--config", s(&dir.path().join("run.toml")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("seed 1:"));
    let echo = std::fs::read_to_string(out.join("config.resolved.toml")).unwrap();
    assert!(echo.contains("seeds = [1]"), "{echo}");
}

#[test]
fn unknown_config_key_exits_64_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path(), 90);
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[data]\nohlcv = \"ohlcv.csv\"\n[model]\nheads = 4\n").unwrap();
    let o = dam(&["train", "--config", s(&cfg), "--out", s(&dir.path().join("x"))]);
    assert_eq!(o.status.code(), Some(64));
    assert!(stderr(&o).contains("heads"), "{}", stderr(&o));
}

#[test]
fn missing_inputs_exit_66() {
    let dir = tempfile::tempdir().unwrap();
    let o = dam(&[
        "train",
        "--config",
        s(&dir.path().join("absent.toml")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(66));
    let o = dam(&[
        "report",
        "--run-dir",
        s(&dir.path().join("absent")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(66));
    std::fs::write(dir.path().join("run.toml"), "[data]\nohlcv = \"nope.csv\"\n").unwrap();
    let o = dam(&[
        "train",
        "--config",
        s(&dir.path().join("run.toml")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(66), "{}", stderr(&o));
}

#[test]
fn ablate_and_compare_tables() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path(), 90);
    let cfg = dir.path().join("run.toml");
    let abl = dir.path().join("abl");
    let o = dam(&["ablate", "--config", s(&cfg), "--out", s(&abl), "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(abl.join("ablation.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    let variants: Vec<&str> = rows.iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(variants, ["concat_only", "no_intra", "no_cross", "full"]);
    let fps: Vec<&str> = rows.iter().map(|r| r.rsplit(',').next().unwrap()).collect();
    assert!(fps.iter().all(|f| *f == fps[0] && f.len() == 64));

    let cmp = dir.path().join("cmp");
    let o = dam(&["compare", "--config", s(&cfg), "--out", s(&cmp), "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(cmp.join("comparative.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 8 + 1);
    assert!(lines.last().unwrap().starts_with("persistence,"));
    assert!(lines[1..].iter().all(|l| l.ends_with(fps[0])));
    assert!(cmp.join("improvements.csv").is_file());

    let rep = dir.path().join("rep");
    let o = dam(&["report", "--run-dir", s(&cmp), "--out", s(&rep)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = std::fs::read_to_string(rep.join("summary.txt")).unwrap();
    assert!(summary.contains("persistence") && summary.contains("grid of 8 runs"));
}

#[test]
fn report_renders_plots_offline() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path(), 90);
    let run = dir.path().join("run");
    let o = dam(&["train", "--config", s(&dir.path().join("run.toml")), "--out", s(&run)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = dir.path().join("rep");
    let o = dam(&["report", "--run-dir", s(&run), "--out", s(&rep)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["loss.svg", "predictions.svg"] {
        let svg = std::fs::read_to_string(rep.join(f)).unwrap();
        assert!(
            svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>") && svg.contains("<polyline"),
            "{f}"
        );
    }
    assert!(std::fs::read_to_string(rep.join("summary.txt"))
        .unwrap()
        .contains("median AE"));
}

#[test]
fn lagcorr_outputs_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path(), 120);
    let out = dir.path().join("lags");
    let o = dam(&["lagcorr", "--data", s(dir.path()), "--out", s(&out), "--heatmap"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for lag in [5, 10, 15, 20, 25, 30, 32, 35, 40] {
        assert!(out.join(format!("lag_{lag}.csv")).is_file());
        assert!(out.join(format!("heatmap_lag_{lag}.svg")).is_file());
    }
    let long = std::fs::read_to_string(out.join("lagcorr_long.csv")).unwrap();
    assert!(long.starts_with("lag,var_a,var_b,r,n,z,p\n"));

    let zero = dir.path().join("zero");
    let o = dam(&["lagcorr", "--data", s(dir.path()), "--out", s(&zero), "--lags", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = std::fs::read_to_string(zero.join("lag_0.csv")).unwrap();
    for (i, line) in m.lines().skip(1).enumerate() {
        let cell: f64 = line.split(',').nth(i + 1).unwrap().parse().unwrap();
        assert_eq!(cell, 1.0, "{line}");
    }

    let o = dam(&["lagcorr", "--data", s(dir.path()), "--out", s(&zero), "--lags", "5,120"]);
    assert_eq!(o.status.code(), Some(65), "{}", stderr(&o));
}
