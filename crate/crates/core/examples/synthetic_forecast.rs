//! Trains the full model on a synthetic market, compares it with the
//! persistence forecast and saves the run.
//!
//! cargo run --release --example synthetic_forecast -- [out_dir]

use dam_core::dam::{DamConfig, VariantKind};
use dam_core::datapipe::{align_and_impute, prepare, PrepConfig};
use dam_core::synthetic::ProductMarket;
use dam_core::train_eval::{persistence_baseline, run_single, save_run, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "runs/synthetic_forecast".into());
    let market = ProductMarket {
        persistence: 0.95,
        obs_noise: 0.2,
        ..ProductMarket::default()
    };
    let (ohlcv, sentiment) = market.generate(3);
    let prep = prepare(
        &align_and_impute(&ohlcv, &sentiment)?,
        &PrepConfig {
            window: 10,
            ..PrepConfig::default()
        },
    )?;
    let train_cfg = TrainConfig {
        epochs: 60,
        learning_rate: 3e-3,
        early_stop_patience: 15,
        ..TrainConfig::default()
    };
    let run = run_single(&prep, &DamConfig::new(VariantKind::Full, 8, 16), &train_cfg, 1)?;
    let floor = persistence_baseline(&prep.val)?;

    for e in run.report.loss_history.iter().step_by(5) {
        println!("epoch {:>3}  train {:.5}  val {:.5}", e.epoch, e.train_loss, e.val_loss);
    }
    println!("best epoch {}", run.report.best_epoch);
    println!(
        "model        median AE {:>8.2} USD  MAPE {:.5}",
        run.report.median_ae_usd, run.report.mape
    );
    println!(
        "persistence  median AE {:>8.2} USD  MAPE {:.5}",
        floor.median_ae_usd, floor.mape
    );
    save_run(std::path::Path::new(&out), &run)?;
    println!("saved to {out}");
    Ok(())
}
