//! Prints the four attention maps of an untrained dual-attention model on a
//! short synthetic window.
//!
//! cargo run --example attention_weights

use dam_core::dam::{DamConfig, DamModel, VariantKind};
use dam_core::datapipe::{align_and_impute, prepare, PrepConfig};
use dam_core::ndcore::Tensor;
use dam_core::synthetic::synthetic_market;

fn show(name: &str, t: &Tensor) {
    let (rows, cols) = (t.shape()[1], t.shape()[2]);
    let t = t.reshape(&[rows, cols]).expect("batch of one");
    println!("{name} ({rows}x{cols}):");
    for i in 0..rows {
        let row: Vec<String> = t.row(i).iter().map(|w| format!("{w:.3}")).collect();
        println!("  t{i:<2} {}", row.join(" "));
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (ohlcv, sentiment) = synthetic_market(160, 3, 0);
    let prep = prepare(
        &align_and_impute(&ohlcv, &sentiment)?,
        &PrepConfig {
            window: 6,
            ..PrepConfig::default()
        },
    )?;
    let sample = &prep.val[0];
    let model = DamModel::new(DamConfig::new(VariantKind::Full, 8, 16), 11)?;
    let maps = model.attention_maps(&sample.fin_win, Some(&sample.sent_win))?;
    println!("window ending the day before {}", sample.target_date);
    for (name, map) in [
        ("financial self-attention", &maps.intra_fin),
        ("sentiment self-attention", &maps.intra_sent),
        ("financial queries over sentiment", &maps.fin_queries_sent),
        ("sentiment queries over financial", &maps.sent_queries_fin),
    ] {
        if let Some(m) = map {
            show(name, m);
        }
    }
    Ok(())
}
