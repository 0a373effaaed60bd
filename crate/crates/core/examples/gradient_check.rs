//! Central-difference check of backprop through attention feeding an LSTM.
//!
//! cargo run --example gradient_check

use dam_core::layers::{AttentionLayer, LstmCellParams};
use dam_core::ndcore::{Graph, Initializer, NdError, ParamStore, Tensor, Var};

fn loss(
    g: &mut Graph,
    store: &ParamStore,
    att: &AttentionLayer,
    cell: &LstmCellParams,
    x: &Tensor,
) -> Result<Var, NdError> {
    let xv = g.input(x);
    let attended = att.forward(g, store, xv, xv)?.output;
    let h = cell.run(g, store, attended)?;
    let sq = g.hadamard(h, h)?;
    g.sum(sq)
}

fn main() -> Result<(), NdError> {
    let mut init = Initializer::new(7);
    let mut store = ParamStore::new();
    let att = AttentionLayer::new(&mut store, "att", 3, 3, 4, &mut init);
    let cell = LstmCellParams::new(&mut store, "lstm", 4, 5, &mut init);
    let x = Tensor::new(vec![1, 6, 3], (0..18).map(|i| (i as f64 * 0.61).sin()).collect())?;

    let mut g = Graph::new();
    let l = loss(&mut g, &store, &att, &cell, &x)?;
    let grads = g.backward(l)?;

    let eps = 1e-5;
    println!("{:<16} {:>6} {:>12}", "tensor", "size", "rel error");
    for id in store.ids().collect::<Vec<_>>() {
        let analytic = grads
            .param(id)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; store.get(id).numel()]);
        let base = store.get(id).data().to_vec();
        let mut numeric = Vec::with_capacity(base.len());
        for k in 0..base.len() {
            let mut at = |d: f64| -> Result<f64, NdError> {
                let mut v = base.clone();
                v[k] += d;
                store.get_mut(id).set_data(v)?;
                let mut g = Graph::new();
                let l = loss(&mut g, &store, &att, &cell, &x)?;
                Ok(g.scalar(l))
            };
            numeric.push((at(eps)? - at(-eps)?) / (2.0 * eps));
        }
        store.get_mut(id).set_data(base)?;
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale: f64 =
            analytic.iter().map(|a| a * a).sum::<f64>().sqrt() + numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
        println!(
            "{:<16} {:>6} {:>12.2e}",
            store.name(id),
            analytic.len(),
            diff / scale.max(1e-12)
        );
    }
    Ok(())
}
