//! Writes a synthetic market to CSV, reads it back and runs the full
//! preprocessing pass, printing what each stage produced.
//!
//! cargo run --example preprocess

use dam_core::datapipe::{
    align_and_impute, correlation_screen, load_ohlcv, load_sentiment, prepare, write_ohlcv, write_sentiment, Column,
    PrepConfig,
};
use dam_core::synthetic::synthetic_market;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("dam-preprocess-example");
    std::fs::create_dir_all(&dir)?;
    let (ohlcv, sentiment) = synthetic_market(365, 5, 17);
    write_ohlcv(&dir.join("ohlcv.csv"), &ohlcv)?;
    write_sentiment(&dir.join("sentiment.csv"), &sentiment)?;

    let series = align_and_impute(
        &load_ohlcv(&dir.join("ohlcv.csv"))?,
        &load_sentiment(&dir.join("sentiment.csv"))?,
    )?;
    println!(
        "{} aligned days, {} imputed cells over {} days",
        series.len(),
        series.imputed.cells,
        series.imputed.days
    );
    println!("fingerprint {}", series.fingerprint());

    let close = series.column(Column::Close);
    let cols: Vec<(Column, Vec<f64>)> = [
        Column::Open,
        Column::High,
        Column::Low,
        Column::Volumefrom,
        Column::News,
        Column::Media,
    ]
    .into_iter()
    .map(|c| (c, series.column(c)))
    .collect();
    let named: Vec<(&str, &[f64])> = cols.iter().map(|(c, v)| (c.name(), v.as_slice())).collect();
    for e in correlation_screen(&named, &close, 0.3)? {
        println!(
            "  {:<11} r={:>7.3} selected={}",
            e.name,
            e.r.unwrap_or(f64::NAN),
            e.selected
        );
    }

    for stationary in [true, false] {
        let prep = prepare(
            &series,
            &PrepConfig {
                stationary,
                ..PrepConfig::default()
            },
        )?;
        println!(
            "stationary={stationary}: {} train / {} val windows, scaler fitted on {} rows, target range [{:.4}, {:.4}]",
            prep.train.len(),
            prep.val.len(),
            prep.scaler_rows,
            prep.scaler.mins()[6],
            prep.scaler.maxs()[6],
        );
    }
    println!("files in {}", dir.display());
    Ok(())
}
