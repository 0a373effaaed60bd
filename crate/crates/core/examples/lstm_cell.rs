//! Steps one LSTM cell through a sequence and prints the state after each step.
//!
//! cargo run --example lstm_cell

use dam_core::layers::{lstm_step, LstmCellParams};
use dam_core::ndcore::{Initializer, ParamStore};

fn main() -> Result<(), dam_core::ndcore::NdError> {
    let mut store = ParamStore::new();
    let cell = LstmCellParams::new(&mut store, "lstm", 2, 3, &mut Initializer::new(1));
    println!("forget bias starts at {:?}", store.get(cell.b_f).data());

    let (mut h, mut c) = (vec![0.0; 3], vec![0.0; 3]);
    for t in 0..8 {
        let x = [(t as f64 * 0.8).sin(), if t % 3 == 0 { 1.0 } else { 0.0 }];
        (h, c) = lstm_step(&cell, &store, &x, &h, &c)?;
        println!("t={t} x={x:>6.3?} h={h:>7.4?} c={c:>7.4?}");
    }
    Ok(())
}
