//! Ablation on a synthetic market whose return is the product of a volume
//! channel and a news channel. Prints one row per variant and seed, then
//! the median validation error per variant.
//!
//! cargo run --release --example ablation -- [days] [seeds] [persistence] [obs_noise] [epochs] [lr] [patience] [d_model] [hidden] [window]

use dam_core::dam::{DamConfig, VariantKind};
use dam_core::datapipe::{align_and_impute, PrepConfig};
use dam_core::synthetic::ProductMarket;
use dam_core::train_eval::{median, results_csv, run_ablation, ExperimentConfig, TrainConfig, ABLATION_ORDER};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let days: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(400);
    let n_seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let persistence: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.97);
    let obs_noise: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.3);
    let epochs: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(80);
    let lr: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3e-3);
    let patience: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(15);
    let d_model: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(8);
    let hidden: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(16);
    let window: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);

    let market = ProductMarket {
        days,
        persistence,
        obs_noise,
        ..ProductMarket::default()
    };
    let (ohlcv, sentiment) = market.generate(7);
    let series = align_and_impute(&ohlcv, &sentiment)?;
    let cfg = ExperimentConfig {
        prep: PrepConfig {
            window,
            ..PrepConfig::default()
        },
        model: DamConfig::new(VariantKind::Full, d_model, hidden),
        train: TrainConfig {
            epochs,
            early_stop_patience: patience.min(epochs),
            learning_rate: lr,
            ..TrainConfig::default()
        },
        seeds: (1..=n_seeds).collect(),
    };

    let t0 = std::time::Instant::now();
    let reports = run_ablation(&series, &cfg)?;
    print!("{}", results_csv(&reports, None));
    println!();
    for v in ABLATION_ORDER {
        let mut errs: Vec<f64> = reports
            .iter()
            .filter(|r| r.variant == v)
            .map(|r| r.median_ae_usd)
            .collect();
        println!("{v:>12}  median AE* {:>9.3} USD", median(&mut errs));
    }
    println!("elapsed {:.1?}", t0.elapsed());
    Ok(())
}
