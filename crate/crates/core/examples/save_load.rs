//! Saves a model, reloads it and checks the predictions match bit for bit.
//!
//! cargo run --example save_load

use dam_core::dam::{DamConfig, DamModel, VariantKind};
use dam_core::ndcore::Tensor;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("dam-save-load-example");
    let model = DamModel::new(DamConfig::new(VariantKind::Gated, 8, 16), 5)?;
    model.save(&dir)?;
    let loaded = DamModel::load(&dir)?;

    let fin = Tensor::new(vec![12, 4], (0..48).map(|i| (i as f64 * 0.13).cos().abs()).collect())?;
    let sent = Tensor::new(vec![12, 2], (0..24).map(|i| (i as f64 * 0.29).sin().abs()).collect())?;
    let (a, b) = (model.predict(&fin, Some(&sent))?, loaded.predict(&fin, Some(&sent))?);
    println!("{} parameters in {}", model.param_count(), dir.display());
    for f in ["model.toml", "weights.json", "weights.bin"] {
        println!("  {f}: {} bytes", std::fs::metadata(dir.join(f))?.len());
    }
    println!(
        "original {a:.12}  reloaded {b:.12}  identical bits: {}",
        a.to_bits() == b.to_bits()
    );
    Ok(())
}
