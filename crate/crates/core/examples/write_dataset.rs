//! Writes a synthetic `ohlcv.csv`, `sentiment.csv` and `run.toml` for the
//! `dam` binary.
//!
//! cargo run --example write_dataset -- demo
//! cargo run --release --bin dam -- train --config demo/run.toml --out demo/run

use std::path::PathBuf;

use dam_core::datapipe::{write_ohlcv, write_sentiment};
use dam_core::synthetic::synthetic_market;

const RUN_TOML: &str = r#"seeds = [1, 2, 3]

[data]
ohlcv = "ohlcv.csv"
sentiment = "sentiment.csv"

[prep]
window = 10
stationary = true
scale_scope = "train"
val_days = 90

[model]
variant = "full"
d_model = 8
hidden = 16

[train]
epochs = 60
batch_size = 32
learning_rate = 0.003
optimizer = "adam"
grad_clip_norm = 1.0
early_stop_patience = 15
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "demo".into()));
    std::fs::create_dir_all(&dir)?;
    let (ohlcv, sentiment) = synthetic_market(500, 6, 21);
    write_ohlcv(&dir.join("ohlcv.csv"), &ohlcv)?;
    write_sentiment(&dir.join("sentiment.csv"), &sentiment)?;
    std::fs::write(dir.join("run.toml"), RUN_TOML)?;
    println!("wrote {} days to {}", ohlcv.len(), dir.display());
    Ok(())
}
