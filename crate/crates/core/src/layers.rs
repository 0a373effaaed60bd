//! Parameterized building blocks: affine projection, single-head scaled
//! dot-product attention and the LSTM cell.
//!
//! Layers hold [`ParamId`]s into a [`ParamStore`]; the store owns the values.
//! Sequence inputs are row-major `time × feature`, optionally with a leading
//! batch axis (`batch × time × feature`).

use crate::ndcore::{Graph, Initializer, NdError, ParamId, ParamStore, Result, Var};

#[derive(Debug, Clone)]
pub struct LinearLayer {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl LinearLayer {
    /// Registers `{prefix}.W` (`in × out`) and, if requested, a zero `{prefix}.b`.
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        with_bias: bool,
        init: &mut Initializer,
    ) -> Self {
        assert!(in_dim >= 1 && out_dim >= 1, "linear layer needs in, out >= 1");
        let weight = store.add_xavier(format!("{prefix}.W"), in_dim, out_dim, init);
        let bias = with_bias.then(|| store.add_constant(format!("{prefix}.b"), out_dim, 0.0));
        LinearLayer {
            weight,
            bias,
            in_dim,
            out_dim,
        }
    }

    /// `x W + b` over the last axis of a rank-2 or rank-3 input.
    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Result<Var> {
        let shape = g.shape(x).to_vec();
        let cols = *shape.last().expect("rank >= 1");
        if cols != self.in_dim {
            return Err(NdError::Shape {
                op: "linear",
                lhs: shape,
                rhs: vec![self.in_dim, self.out_dim],
            });
        }
        let rows = shape.iter().product::<usize>() / cols;
        let flat = if shape.len() == 2 {
            x
        } else {
            g.reshape(x, &[rows, cols])?
        };
        let w = g.param(store, self.weight);
        let mut y = g.matmul(flat, w)?;
        if let Some(b) = self.bias {
            let b = g.param(store, b);
            y = g.add_bias(y, b)?;
        }
        if shape.len() == 2 {
            return Ok(y);
        }
        let mut out_shape = shape;
        *out_shape.last_mut().expect("rank >= 1") = self.out_dim;
        g.reshape(y, &out_shape)
    }
}

/// Single-head attention with separate, bias-free Q/K/V projections.
#[derive(Debug, Clone)]
pub struct AttentionLayer {
    pub q_proj: LinearLayer,
    pub k_proj: LinearLayer,
    pub v_proj: LinearLayer,
    pub d_k: usize,
}

/// Result of one attention call.
#[derive(Debug, Clone, Copy)]
pub struct Attended {
    pub output: Var,
    pub weights: Var,
}

impl AttentionLayer {
    /// Queries are projected from a `query_dim`-wide source, keys and values
    /// from a `key_dim`-wide source.
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        query_dim: usize,
        key_dim: usize,
        d_k: usize,
        init: &mut Initializer,
    ) -> Self {
        assert!(d_k > 0, "attention needs d_k > 0");
        AttentionLayer {
            q_proj: LinearLayer::new(store, &format!("{prefix}.q_proj"), query_dim, d_k, false, init),
            k_proj: LinearLayer::new(store, &format!("{prefix}.k_proj"), key_dim, d_k, false, init),
            v_proj: LinearLayer::new(store, &format!("{prefix}.v_proj"), key_dim, d_k, false, init),
            d_k,
        }
    }

    /// `softmax(Q Kᵀ / sqrt(d_k)) V` with `Q` from `queries_src` and both `K`
    /// and `V` from `keys_src`.
    ///
    /// Accepts `T × d` or `B × T × d` sources; the weights come back as
    /// `T_q × T_k` (resp. `B × T_q × T_k`).
    pub fn forward(&self, g: &mut Graph, store: &ParamStore, queries_src: Var, keys_src: Var) -> Result<Attended> {
        let (qs, ks) = (g.shape(queries_src).to_vec(), g.shape(keys_src).to_vec());
        if qs.len() != ks.len() || !(2..=3).contains(&qs.len()) || (qs.len() == 3 && qs[0] != ks[0]) {
            return Err(NdError::Shape {
                op: "attention",
                lhs: qs,
                rhs: ks,
            });
        }
        let batched = qs.len() == 3;
        let (q_in, k_in) = if batched {
            (queries_src, keys_src)
        } else {
            (
                g.reshape(queries_src, &[1, qs[0], qs[1]])?,
                g.reshape(keys_src, &[1, ks[0], ks[1]])?,
            )
        };
        let q = self.q_proj.forward(g, store, q_in)?;
        let k = self.k_proj.forward(g, store, k_in)?;
        let v = self.v_proj.forward(g, store, k_in)?;
        let kt = g.transpose(k)?;
        let scores = g.batch_matmul(q, kt)?;
        let scaled = g.scale(scores, 1.0 / (self.d_k as f64).sqrt())?;
        let weights = g.softmax_rows(scaled)?;
        let output = g.batch_matmul(weights, v)?;
        if batched {
            return Ok(Attended { output, weights });
        }
        let (tq, tk) = (qs[0], ks[0]);
        Ok(Attended {
            output: g.reshape(output, &[tq, self.d_k])?,
            weights: g.reshape(weights, &[tq, tk])?,
        })
    }
}

/// LSTM cell with one weight block per gate acting on `[h_{t-1}, x_t]`.
#[derive(Debug, Clone)]
pub struct LstmCellParams {
    pub w_i: ParamId,
    pub w_f: ParamId,
    pub w_o: ParamId,
    pub w_c: ParamId,
    pub b_i: ParamId,
    pub b_f: ParamId,
    pub b_o: ParamId,
    pub b_c: ParamId,
    pub input: usize,
    pub hidden: usize,
}

/// Forget-gate bias at initialization.
pub const FORGET_BIAS_INIT: f64 = 1.0;

impl LstmCellParams {
    pub fn new(store: &mut ParamStore, prefix: &str, input: usize, hidden: usize, init: &mut Initializer) -> Self {
        assert!(input >= 1 && hidden >= 1, "lstm needs input, hidden >= 1");
        let rows = hidden + input;
        let mut w = |gate: &str| store.add_xavier(format!("{prefix}.W_{gate}"), rows, hidden, init);
        let (w_i, w_f, w_o, w_c) = (w("i"), w("f"), w("o"), w("C"));
        LstmCellParams {
            w_i,
            w_f,
            w_o,
            w_c,
            b_i: store.add_constant(format!("{prefix}.b_i"), hidden, 0.0),
            b_f: store.add_constant(format!("{prefix}.b_f"), hidden, FORGET_BIAS_INIT),
            b_o: store.add_constant(format!("{prefix}.b_o"), hidden, 0.0),
            b_c: store.add_constant(format!("{prefix}.b_C"), hidden, 0.0),
            input,
            hidden,
        }
    }

    fn gate(&self, g: &mut Graph, store: &ParamStore, hx: Var, w: ParamId, b: ParamId) -> Result<Var> {
        let w = g.param(store, w);
        let b = g.param(store, b);
        let z = g.matmul(hx, w)?;
        g.add_bias(z, b)
    }

    /// One step on `batch × input` rows; returns `(h_t, c_t)`, each `batch × hidden`.
    pub fn step(&self, g: &mut Graph, store: &ParamStore, x_t: Var, h_prev: Var, c_prev: Var) -> Result<(Var, Var)> {
        let (xs, hs, cs) = (
            g.shape(x_t).to_vec(),
            g.shape(h_prev).to_vec(),
            g.shape(c_prev).to_vec(),
        );
        let ok = xs.len() == 2 && xs[1] == self.input && hs.len() == 2 && hs == [xs[0], self.hidden] && cs == hs;
        if !ok {
            return Err(NdError::Shape {
                op: "lstm_step",
                lhs: xs,
                rhs: hs,
            });
        }
        let hx = g.concat(h_prev, x_t, 1)?;
        let i_pre = self.gate(g, store, hx, self.w_i, self.b_i)?;
        let i = g.sigmoid(i_pre)?;
        let f_pre = self.gate(g, store, hx, self.w_f, self.b_f)?;
        let f = g.sigmoid(f_pre)?;
        let c_pre = self.gate(g, store, hx, self.w_c, self.b_c)?;
        let c_tilde = g.tanh_act(c_pre)?;
        let keep = g.hadamard(f, c_prev)?;
        let write = g.hadamard(i, c_tilde)?;
        let c_t = g.add(keep, write)?;
        let o_pre = self.gate(g, store, hx, self.w_o, self.b_o)?;
        let o = g.sigmoid(o_pre)?;
        let c_act = g.tanh_act(c_t)?;
        let h_t = g.hadamard(o, c_act)?;
        Ok((h_t, c_t))
    }

    /// Runs the cell over `batch × steps × input` from a zero state and
    /// returns the final hidden state.
    pub fn run(&self, g: &mut Graph, store: &ParamStore, seq: Var) -> Result<Var> {
        let shape = g.shape(seq).to_vec();
        if shape.len() != 3 || shape[1] == 0 {
            return Err(NdError::Shape {
                op: "lstm_run",
                lhs: shape,
                rhs: vec![self.input],
            });
        }
        let zeros = crate::ndcore::Tensor::zeros(&[shape[0], self.hidden])?;
        let mut h = g.input(&zeros);
        let mut c = g.input(&zeros);
        for t in 0..shape[1] {
            let x_t = g.select(seq, 1, t)?;
            (h, c) = self.step(g, store, x_t, h, c)?;
        }
        Ok(h)
    }
}

/// Single-sample convenience wrapper around [`LstmCellParams::step`].
pub fn lstm_step(
    p: &LstmCellParams,
    store: &ParamStore,
    x_t: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    use crate::ndcore::Tensor;
    let mut g = Graph::new();
    let x = g.input(&Tensor::new(vec![1, x_t.len()], x_t.to_vec())?);
    let h = g.input(&Tensor::new(vec![1, h_prev.len()], h_prev.to_vec())?);
    let c = g.input(&Tensor::new(vec![1, c_prev.len()], c_prev.to_vec())?);
    let (h, c) = p.step(&mut g, store, x, h, c)?;
    Ok((g.value(h).to_vec(), g.value(c).to_vec()))
}
