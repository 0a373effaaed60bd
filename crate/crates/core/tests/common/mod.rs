//! Shared test machinery: finite-difference gradient checks, independent
//! oracles and the random-case generators used by several test targets.
#![allow(dead_code)]

use dam_core::dam::{DamConfig, DamModel, VariantKind};
use dam_core::layers::{AttentionLayer, LstmCellParams};
use dam_core::ndcore::{Graph, Initializer, NdError, ParamStore, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_TOL: f64 = 1e-4;
/// Gradient norms below this are at the round-off floor of central
/// differences with `FD_STEP`, so the denominator never drops under it.
pub const NORM_FLOOR: f64 = 1e-7;

pub type Build<'a> = dyn Fn(&mut Graph, &[Var]) -> Result<Var, NdError> + 'a;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..n).map(|_| rng.random_range(-scale..scale)).collect(),
    )
    .unwrap()
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖a − n‖ / max(‖a‖ + ‖n‖, NORM_FLOOR)`.
pub fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = norm(analytic.iter().zip(numeric).map(|(a, n)| a - n));
    let scale = norm(analytic.iter().copied()) + norm(numeric.iter().copied());
    diff / scale.max(NORM_FLOOR)
}

/// Scalar objective `sum(out ⊙ R)` for a fixed random `R`, so every output
/// element carries a distinct weight.
fn project(g: &mut Graph, out: Var, proj: &Tensor) -> Result<Var, NdError> {
    let shape = g.shape(out).to_vec();
    let r = g.input(&proj.reshape(&shape).expect("projection sized to output"));
    let w = g.hadamard(out, r)?;
    g.sum(w)
}

fn eval(inputs: &[Tensor], build: &Build<'_>, proj: Option<&Tensor>) -> Result<(f64, Graph, Vec<Var>, Var), NdError> {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.input(t)).collect();
    let out = build(&mut g, &vars)?;
    let loss = match proj {
        Some(p) => project(&mut g, out, p)?,
        None => out,
    };
    Ok((g.scalar(loss), g, vars, loss))
}

/// Worst per-input relative error between backprop and central differences.
pub fn check_inputs(rng: &mut ChaCha8Rng, inputs: &[Tensor], build: &Build<'_>) -> f64 {
    let out_len = {
        let mut g = Graph::new();
        let vars: Vec<Var> = inputs.iter().map(|t| g.input(t)).collect();
        let out = build(&mut g, &vars).expect("forward");
        g.value(out).len()
    };
    let proj = Tensor::new(
        vec![out_len],
        (0..out_len).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap();
    let (_, g, vars, loss) = eval(inputs, build, Some(&proj)).expect("forward");
    let grads = g.backward(loss).expect("backward");
    let mut worst: f64 = 0.0;
    for (i, t) in inputs.iter().enumerate() {
        let analytic = grads
            .get(vars[i])
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; t.numel()]);
        let mut numeric = vec![0.0; t.numel()];
        for k in 0..t.numel() {
            let at = |delta: f64| {
                let mut moved = inputs.to_vec();
                let mut data = moved[i].data().to_vec();
                data[k] += delta;
                moved[i] = Tensor::new(t.shape().to_vec(), data).unwrap();
                eval(&moved, build, Some(&proj)).expect("forward").0
            };
            numeric[k] = (at(FD_STEP) - at(-FD_STEP)) / (2.0 * FD_STEP);
        }
        worst = worst.max(rel_err(&analytic, &numeric));
    }
    worst
}

pub type ParamBuild<'a> = dyn Fn(&mut Graph, &ParamStore) -> Result<Var, NdError> + 'a;

/// Same check over every tensor of a parameter store; `build` must return a scalar.
pub fn check_params(store: &ParamStore, build: &ParamBuild<'_>) -> f64 {
    let mut g = Graph::new();
    let loss = build(&mut g, store).expect("forward");
    let grads = g.backward(loss).expect("backward");
    let mut work = store.clone();
    let mut worst: f64 = 0.0;
    for id in store.ids() {
        let n = store.get(id).numel();
        let analytic = grads.param(id).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
        let mut numeric = vec![0.0; n];
        for k in 0..n {
            let base = store.get(id).data().to_vec();
            let mut at = |delta: f64| {
                let mut d = base.clone();
                d[k] += delta;
                work.get_mut(id).set_data(d).unwrap();
                let mut g = Graph::new();
                let loss = build(&mut g, &work).expect("forward");
                g.scalar(loss)
            };
            numeric[k] = (at(FD_STEP) - at(-FD_STEP)) / (2.0 * FD_STEP);
            work.get_mut(id).set_data(base).unwrap();
        }
        worst = worst.max(rel_err(&analytic, &numeric));
    }
    worst
}

fn dims(rng: &mut ChaCha8Rng, rank: usize) -> Vec<usize> {
    (0..rank).map(|_| rng.random_range(1..=4)).collect()
}

/// Random shape with a rank drawn from `ranks`.
fn any_dims(rng: &mut ChaCha8Rng, ranks: std::ops::RangeInclusive<usize>) -> Vec<usize> {
    let rank = rng.random_range(ranks);
    dims(rng, rank)
}

fn rand_like(rng: &mut ChaCha8Rng, ranks: std::ops::RangeInclusive<usize>, scale: f64) -> Tensor {
    let shape = any_dims(rng, ranks);
    rand_tensor(rng, &shape, scale)
}

pub struct OpCase {
    pub name: &'static str,
    pub run: fn(&mut ChaCha8Rng) -> f64,
}

/// One random instance per call for every differentiable graph op.
pub fn op_cases() -> Vec<OpCase> {
    vec![
        OpCase {
            name: "matmul",
            run: |r| {
                let (m, k, n) = (r.random_range(1..=5), r.random_range(1..=5), r.random_range(1..=5));
                let ins = [rand_tensor(r, &[m, k], 1.0), rand_tensor(r, &[k, n], 1.0)];
                check_inputs(r, &ins, &|g, v| g.matmul(v[0], v[1]))
            },
        },
        OpCase {
            name: "batch_matmul",
            run: |r| {
                let (b, m, k, n) = (
                    r.random_range(1..=3),
                    r.random_range(1..=4),
                    r.random_range(1..=4),
                    r.random_range(1..=4),
                );
                let ins = [rand_tensor(r, &[b, m, k], 1.0), rand_tensor(r, &[b, k, n], 1.0)];
                check_inputs(r, &ins, &|g, v| g.batch_matmul(v[0], v[1]))
            },
        },
        OpCase {
            name: "transpose",
            run: |r| {
                let ins = [rand_like(r, 2..=3, 1.0)];
                check_inputs(r, &ins, &|g, v| g.transpose(v[0]))
            },
        },
        OpCase {
            name: "reshape",
            run: |r| {
                let (a, b) = (r.random_range(1..=4), r.random_range(1..=4));
                let ins = [rand_tensor(r, &[a, b, 2], 1.0)];
                check_inputs(r, &ins, &|g, v| {
                    let flat = g.reshape(v[0], &[a * b * 2])?;
                    let y = g.tanh_act(flat)?;
                    g.reshape(y, &[2, a * b])
                })
            },
        },
        OpCase {
            name: "softmax_rows",
            run: |r| {
                let ins = [rand_like(r, 2..=3, 4.0)];
                check_inputs(r, &ins, &|g, v| g.softmax_rows(v[0]))
            },
        },
        OpCase {
            name: "sigmoid",
            run: |r| {
                let ins = [rand_like(r, 1..=3, 4.0)];
                check_inputs(r, &ins, &|g, v| g.sigmoid(v[0]))
            },
        },
        OpCase {
            name: "tanh",
            run: |r| {
                let ins = [rand_like(r, 1..=3, 3.0)];
                check_inputs(r, &ins, &|g, v| g.tanh_act(v[0]))
            },
        },
        OpCase {
            name: "add",
            run: |r| {
                let s = any_dims(r, 1..=3);
                let ins = [rand_tensor(r, &s, 1.0), rand_tensor(r, &s, 1.0)];
                check_inputs(r, &ins, &|g, v| g.add(v[0], v[1]))
            },
        },
        OpCase {
            name: "sub",
            run: |r| {
                let s = any_dims(r, 1..=3);
                let ins = [rand_tensor(r, &s, 1.0), rand_tensor(r, &s, 1.0)];
                check_inputs(r, &ins, &|g, v| g.sub(v[0], v[1]))
            },
        },
        OpCase {
            name: "hadamard",
            run: |r| {
                let s = any_dims(r, 1..=3);
                let ins = [rand_tensor(r, &s, 1.0), rand_tensor(r, &s, 1.0)];
                let a = check_inputs(r, &ins, &|g, v| g.hadamard(v[0], v[1]));
                let b = check_inputs(r, &ins[..1], &|g, v| g.hadamard(v[0], v[0]));
                a.max(b)
            },
        },
        OpCase {
            name: "add_bias",
            run: |r| {
                let s = any_dims(r, 2..=3);
                let ins = [rand_tensor(r, &s, 1.0), rand_tensor(r, &[s[s.len() - 1]], 1.0)];
                check_inputs(r, &ins, &|g, v| g.add_bias(v[0], v[1]))
            },
        },
        OpCase {
            name: "scale",
            run: |r| {
                let c = r.random_range(-3.0..3.0);
                let ins = [rand_like(r, 2..=2, 1.0)];
                let build = move |g: &mut Graph, v: &[Var]| g.scale(v[0], c);
                check_inputs(r, &ins, &build)
            },
        },
        OpCase {
            name: "concat",
            run: |r| {
                let rank = r.random_range(1..=3);
                let axis = r.random_range(0..rank);
                let a = dims(r, rank);
                let mut b = a.clone();
                b[axis] = r.random_range(1..=3);
                let ins = [rand_tensor(r, &a, 1.0), rand_tensor(r, &b, 1.0)];
                let build = move |g: &mut Graph, v: &[Var]| g.concat(v[0], v[1], axis);
                check_inputs(r, &ins, &build)
            },
        },
        OpCase {
            name: "select",
            run: |r| {
                let rank = r.random_range(2..=3);
                let s = dims(r, rank);
                let axis = r.random_range(0..rank);
                let index = r.random_range(0..s[axis]);
                let ins = [rand_tensor(r, &s, 1.0)];
                let build = move |g: &mut Graph, v: &[Var]| g.select(v[0], axis, index);
                check_inputs(r, &ins, &build)
            },
        },
        OpCase {
            name: "sum",
            run: |r| {
                let ins = [rand_like(r, 2..=2, 1.0)];
                check_inputs(r, &ins, &|g, v| g.sum(v[0]))
            },
        },
        OpCase {
            name: "mean",
            run: |r| {
                let ins = [rand_like(r, 3..=3, 1.0)];
                check_inputs(r, &ins, &|g, v| g.mean(v[0]))
            },
        },
        OpCase {
            name: "mse",
            run: |r| {
                let s = dims(r, 2);
                let ins = [rand_tensor(r, &s, 1.0), rand_tensor(r, &s, 1.0)];
                check_inputs(r, &ins, &|g, v| g.mse(v[0], v[1]))
            },
        },
        OpCase {
            name: "fan_out",
            run: |r| {
                let n = r.random_range(1..=4);
                let ins = [rand_tensor(r, &[n, n], 1.0)];
                check_inputs(r, &ins, &|g, v| {
                    let x = v[0];
                    let sq = g.hadamard(x, x)?;
                    let s = g.sigmoid(x)?;
                    let xt = g.transpose(x)?;
                    let mm = g.matmul(x, xt)?;
                    let a = g.add(sq, s)?;
                    g.add(a, mm)
                })
            },
        },
        OpCase {
            name: "attention",
            run: |r| {
                let (tq, tk, dq, dk, d) = (
                    r.random_range(1..=4),
                    r.random_range(1..=4),
                    r.random_range(1..=4),
                    r.random_range(1..=4),
                    r.random_range(1..=3),
                );
                let mut store = ParamStore::new();
                let layer = AttentionLayer::new(&mut store, "att", dq, dk, d, &mut Initializer::new(r.random()));
                let ins = [rand_tensor(r, &[tq, dq], 1.0), rand_tensor(r, &[tk, dk], 1.0)];
                let x = check_inputs(r, &ins, &|g, v| Ok(layer.forward(g, &store, v[0], v[1])?.output));
                let proj = rand_tensor(r, &[tq * d], 1.0);
                let p = check_params(&store, &|g, s| {
                    let (a, b) = (g.input(&ins[0]), g.input(&ins[1]));
                    let out = layer.forward(g, s, a, b)?.output;
                    project(g, out, &proj)
                });
                x.max(p)
            },
        },
        OpCase {
            name: "lstm",
            run: |r| {
                let (b, steps, input, hidden) = (
                    r.random_range(1..=3),
                    r.random_range(1..=4),
                    r.random_range(1..=3),
                    r.random_range(1..=3),
                );
                let mut store = ParamStore::new();
                let cell = LstmCellParams::new(&mut store, "lstm", input, hidden, &mut Initializer::new(r.random()));
                let ins = [rand_tensor(r, &[b, steps, input], 1.0)];
                let x = check_inputs(r, &ins, &|g, v| cell.run(g, &store, v[0]));
                let proj = rand_tensor(r, &[b * hidden], 1.0);
                let p = check_params(&store, &|g, s| {
                    let seq = g.input(&ins[0]);
                    let h = cell.run(g, s, seq)?;
                    project(g, h, &proj)
                });
                x.max(p)
            },
        },
    ]
}

fn nd<E: std::fmt::Display>(e: E) -> NdError {
    NdError::Contract(e.to_string())
}

/// Gradient check of one full model forward: all parameters and both inputs.
pub fn dam_case(r: &mut ChaCha8Rng, variant: VariantKind) -> f64 {
    let (b, l, d, hidden) = (
        r.random_range(1..=2),
        r.random_range(1..=3),
        r.random_range(1..=3),
        r.random_range(1..=3),
    );
    let model = DamModel::new(DamConfig::new(variant, d, hidden), r.random()).unwrap();
    let fin = rand_tensor(r, &[b, l, 4], 1.0);
    let sent = rand_tensor(r, &[b, l, 2], 1.0);
    let ins = [fin.clone(), sent.clone()];
    let x = check_inputs(r, &ins, &|g, v| model.forward(g, v[0], Some(v[1])).map_err(nd));
    let proj = rand_tensor(r, &[b], 1.0);
    let p = check_params(model.params(), &|g, s| {
        let mut moved = model.clone();
        moved.params_mut().load_from(s).map_err(nd)?;
        let (f, st) = (g.input(&fin), g.input(&sent));
        let y = moved.forward(g, f, Some(st)).map_err(nd)?;
        project(g, y, &proj)
    });
    x.max(p)
}

pub struct SuiteLine {
    pub name: String,
    pub instances: usize,
    pub worst: f64,
}

/// Runs every op case `instances` times and the composed model over all variants.
pub fn gradient_suite(instances: usize, seed: u64) -> Vec<SuiteLine> {
    let mut r = rng(seed);
    let mut out: Vec<SuiteLine> = op_cases()
        .into_iter()
        .map(|case| SuiteLine {
            name: case.name.to_string(),
            instances,
            worst: (0..instances).map(|_| (case.run)(&mut r)).fold(0.0, f64::max),
        })
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let v = VariantKind::ALL[i % VariantKind::ALL.len()];
        worst = worst.max(dam_case(&mut r, v));
    }
    out.push(SuiteLine {
        name: "dam_forward".into(),
        instances,
        worst,
    });
    out
}

/// Textbook triple loop.
pub fn naive_matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut s = 0.0;
            for p in 0..k {
                s += a[i * k + p] * b[p * n + j];
            }
            c[i * n + j] = s;
        }
    }
    c
}

/// Worst absolute gap between the library matmul and the triple loop.
pub fn matmul_oracle_gap(cases: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let (m, k, n) = (r.random_range(1..=24), r.random_range(1..=24), r.random_range(1..=24));
        let a = rand_tensor(&mut r, &[m, k], 1.0);
        let b = rand_tensor(&mut r, &[k, n], 1.0);
        let fast = a.matmul(&b).unwrap();
        let slow = naive_matmul(a.data(), b.data(), m, k, n);
        for (x, y) in fast.data().iter().zip(&slow) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Cell update written directly from the gate equations, one scalar at a time.
pub fn lstm_reference(store: &ParamStore, p: &LstmCellParams, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let hx: Vec<f64> = h.iter().chain(x).copied().collect();
    let gate = |w: dam_core::ndcore::ParamId, b: dam_core::ndcore::ParamId, j: usize| {
        let (w, b) = (store.get(w), store.get(b));
        let mut z = b.data()[j];
        for (row, v) in hx.iter().enumerate() {
            z += v * w.at(row, j);
        }
        z
    };
    let mut h_new = vec![0.0; p.hidden];
    let mut c_new = vec![0.0; p.hidden];
    for j in 0..p.hidden {
        let f = sigmoid(gate(p.w_f, p.b_f, j));
        let i = sigmoid(gate(p.w_i, p.b_i, j));
        let cand = gate(p.w_c, p.b_c, j).tanh();
        let o = sigmoid(gate(p.w_o, p.b_o, j));
        c_new[j] = f * c[j] + i * cand;
        h_new[j] = o * c_new[j].tanh();
    }
    (h_new, c_new)
}

pub fn lstm_oracle_gap(cases: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let (input, hidden) = (r.random_range(1..=6), r.random_range(1..=6));
        let mut store = ParamStore::new();
        let cell = LstmCellParams::new(&mut store, "cell", input, hidden, &mut Initializer::new(r.random()));
        for id in store.ids().collect::<Vec<_>>() {
            let n = store.get(id).numel();
            store
                .get_mut(id)
                .set_data((0..n).map(|_| r.random_range(-1.5..1.5)).collect())
                .unwrap();
        }
        let x: Vec<f64> = (0..input).map(|_| r.random_range(-2.0..2.0)).collect();
        let h: Vec<f64> = (0..hidden).map(|_| r.random_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..hidden).map(|_| r.random_range(-2.0..2.0)).collect();
        let (h1, c1) = dam_core::layers::lstm_step(&cell, &store, &x, &h, &c).unwrap();
        let (h2, c2) = lstm_reference(&store, &cell, &x, &h, &c);
        for (a, b) in h1.iter().chain(&c1).zip(h2.iter().chain(&c2)) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Two-step, two-feature attention composed by hand: scores, softmax, blend.
pub fn attention_reference(x: [[f64; 2]; 2], wq: [[f64; 2]; 2], wk: [[f64; 2]; 2], wv: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let proj =
        |w: [[f64; 2]; 2], row: [f64; 2]| [row[0] * w[0][0] + row[1] * w[1][0], row[0] * w[0][1] + row[1] * w[1][1]];
    let q = [proj(wq, x[0]), proj(wq, x[1])];
    let k = [proj(wk, x[0]), proj(wk, x[1])];
    let v = [proj(wv, x[0]), proj(wv, x[1])];
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        let s0 = (q[i][0] * k[0][0] + q[i][1] * k[0][1]) / 2f64.sqrt();
        let s1 = (q[i][0] * k[1][0] + q[i][1] * k[1][1]) / 2f64.sqrt();
        let (e0, e1) = (s0.exp(), s1.exp());
        let (a0, a1) = (e0 / (e0 + e1), e1 / (e0 + e1));
        out[i] = [a0 * v[0][0] + a1 * v[1][0], a0 * v[0][1] + a1 * v[1][1]];
    }
    out
}

pub fn attention_oracle_gap(cases: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    let m2 = |r: &mut ChaCha8Rng| {
        [
            [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)],
            [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)],
        ]
    };
    for _ in 0..cases {
        let (x, wq, wk, wv) = (m2(&mut r), m2(&mut r), m2(&mut r), m2(&mut r));
        let mut store = ParamStore::new();
        let layer = AttentionLayer::new(&mut store, "att", 2, 2, 2, &mut Initializer::new(0));
        for (id, w) in [
            (layer.q_proj.weight, wq),
            (layer.k_proj.weight, wk),
            (layer.v_proj.weight, wv),
        ] {
            store
                .get_mut(id)
                .set_data(w.iter().flatten().copied().collect())
                .unwrap();
        }
        let mut g = Graph::new();
        let xv = g.input(&Tensor::from_rows(&x).unwrap());
        let out = layer.forward(&mut g, &store, xv, xv).unwrap().output;
        let want = attention_reference(x, wq, wk, wv);
        for (a, b) in g.value(out).iter().zip(want.iter().flatten()) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Largest |row sum − 1| and smallest weight over attention maps of random full-model forwards.
pub fn attention_row_sums(forwards: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let (mut worst, mut min_w) = (0.0f64, f64::INFINITY);
    for i in 0..forwards {
        let variant = [VariantKind::Full, VariantKind::NoIntra, VariantKind::NoCross][i % 3];
        let model = DamModel::new(DamConfig::new(variant, r.random_range(1..=6), 3), r.random()).unwrap();
        let l = r.random_range(1..=12);
        let scale = [1.0, 10.0, 50.0][i % 3];
        let fin = rand_tensor(&mut r, &[l, 4], scale);
        let sent = rand_tensor(&mut r, &[l, 2], scale);
        let maps = model.attention_maps(&fin, Some(&sent)).unwrap();
        for m in [
            maps.intra_fin,
            maps.intra_sent,
            maps.fin_queries_sent,
            maps.sent_queries_fin,
        ]
        .into_iter()
        .flatten()
        {
            let cols = m.shape()[m.rank() - 1];
            for row in m.data().chunks(cols) {
                worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
                min_w = min_w.min(row.iter().copied().fold(f64::INFINITY, f64::min));
            }
        }
    }
    (worst, min_w)
}
