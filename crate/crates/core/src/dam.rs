//! The dual-attention LSTM forecaster and its fusion variants.
//!
//! `Full` runs self-attention over time inside each modality, then two
//! cross-modal passes (financial rows querying sentiment rows, and the
//! reverse), concatenates both outputs feature-wise and feeds the fused rows
//! to an LSTM whose last hidden state goes through a linear head.
//! The other variants replace one or both attention stages with plain
//! concatenation or with classic additive / multiplicative / gated fusion.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layers::{AttentionLayer, LinearLayer, LstmCellParams};
use crate::ndcore::{Graph, Initializer, NdError, ParamId, ParamStore, Tensor, Var, WeightsError};

pub const FIN_FEATURES: usize = 4;
pub const SENT_FEATURES: usize = 2;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Numeric(#[from] NdError),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error(transparent)]
    Weights(#[from] WeightsError),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Fusion strategy feeding the LSTM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    Full,
    NoIntra,
    NoCross,
    ConcatOnly,
    Additive,
    Multiplicative,
    Gated,
}

impl VariantKind {
    pub const ALL: [VariantKind; 7] = [
        VariantKind::Full,
        VariantKind::NoIntra,
        VariantKind::NoCross,
        VariantKind::ConcatOnly,
        VariantKind::Additive,
        VariantKind::Multiplicative,
        VariantKind::Gated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VariantKind::Full => "full",
            VariantKind::NoIntra => "no_intra",
            VariantKind::NoCross => "no_cross",
            VariantKind::ConcatOnly => "concat_only",
            VariantKind::Additive => "additive",
            VariantKind::Multiplicative => "multiplicative",
            VariantKind::Gated => "gated",
        }
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariantKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        VariantKind::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| ModelError::Config(format!("unknown variant kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DamConfig {
    pub variant: VariantKind,
    #[serde(default = "default_true")]
    pub multimodal: bool,
    #[serde(default = "default_d_model")]
    pub d_model: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
}

fn default_true() -> bool {
    true
}
fn default_d_model() -> usize {
    16
}
fn default_hidden() -> usize {
    64
}

impl Default for DamConfig {
    fn default() -> Self {
        DamConfig {
            variant: VariantKind::Full,
            multimodal: true,
            d_model: default_d_model(),
            hidden: default_hidden(),
        }
    }
}

impl DamConfig {
    pub fn new(variant: VariantKind, d_model: usize, hidden: usize) -> Self {
        DamConfig {
            variant,
            multimodal: true,
            d_model,
            hidden,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.hidden == 0 {
            return Err(ModelError::Config("d_model and hidden must be >= 1".into()));
        }
        if !self.multimodal && !matches!(self.variant, VariantKind::Full | VariantKind::ConcatOnly) {
            return Err(ModelError::Config(format!(
                "variant `{}` needs the sentiment modality",
                self.variant
            )));
        }
        Ok(())
    }

    /// Width of each fused row handed to the LSTM.
    pub fn fused_width(&self) -> usize {
        let d = self.d_model;
        match (self.variant, self.multimodal) {
            (VariantKind::ConcatOnly, true) => FIN_FEATURES + SENT_FEATURES,
            (VariantKind::ConcatOnly, false) => FIN_FEATURES,
            (VariantKind::Full | VariantKind::NoIntra | VariantKind::NoCross, true) => 2 * d,
            _ => d,
        }
    }
}

/// Attention weight maps from one forward pass, for inspection.
#[derive(Debug, Clone)]
pub struct AttentionMaps {
    pub intra_fin: Option<Tensor>,
    pub intra_sent: Option<Tensor>,
    pub fin_queries_sent: Option<Tensor>,
    pub sent_queries_fin: Option<Tensor>,
}

#[derive(Debug, Clone)]
pub struct DamModel {
    config: DamConfig,
    params: ParamStore,
    intra_fin: Option<AttentionLayer>,
    intra_sent: Option<AttentionLayer>,
    cross_fin_q: Option<AttentionLayer>,
    cross_sent_q: Option<AttentionLayer>,
    fin_proj: Option<LinearLayer>,
    sent_proj: Option<LinearLayer>,
    fuse_bias: Option<ParamId>,
    interaction: Option<LinearLayer>,
    gate: Option<LinearLayer>,
    lstm: LstmCellParams,
    head: LinearLayer,
}

#[derive(Default)]
struct Trace {
    intra_fin: Option<Var>,
    intra_sent: Option<Var>,
    fin_queries_sent: Option<Var>,
    sent_queries_fin: Option<Var>,
}

impl DamModel {
    /// Builds a model with Xavier-initialized weights drawn from `seed`.
    pub fn new(config: DamConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new();
        let mut init = Initializer::new(seed);
        let (d, mm) = (config.d_model, config.multimodal);
        let s = &mut params;
        let i = &mut init;
        use VariantKind::*;

        let intra = matches!(config.variant, Full | NoCross);
        let intra_fin = intra.then(|| AttentionLayer::new(s, "dam.intra_fin", FIN_FEATURES, FIN_FEATURES, d, i));
        let intra_sent =
            (intra && mm).then(|| AttentionLayer::new(s, "dam.intra_sent", SENT_FEATURES, SENT_FEATURES, d, i));

        let cross = mm && matches!(config.variant, Full | NoIntra);
        let fin_proj = matches!(config.variant, NoIntra | Additive | Multiplicative | Gated)
            .then(|| LinearLayer::new(s, "dam.fin_proj", FIN_FEATURES, d, false, i));
        let sent_proj = matches!(config.variant, NoIntra | Additive | Multiplicative)
            .then(|| LinearLayer::new(s, "dam.sent_proj", SENT_FEATURES, d, false, i));
        let cross_fin_q = cross.then(|| AttentionLayer::new(s, "dam.cross_fin_q", d, d, d, i));
        let cross_sent_q = cross.then(|| AttentionLayer::new(s, "dam.cross_sent_q", d, d, d, i));
        let fuse_bias =
            matches!(config.variant, Additive | Multiplicative).then(|| s.add_constant("dam.fuse.w0", d, 0.0));
        let interaction =
            (config.variant == Multiplicative).then(|| LinearLayer::new(s, "dam.interaction", d, d, false, i));
        let gate = (config.variant == Gated).then(|| LinearLayer::new(s, "dam.gate", SENT_FEATURES, d, true, i));

        let lstm = LstmCellParams::new(s, "dam.lstm", config.fused_width(), config.hidden, i);
        let head = LinearLayer::new(s, "dam.head", config.hidden, 1, true, i);

        Ok(DamModel {
            config,
            params,
            intra_fin,
            intra_sent,
            cross_fin_q,
            cross_sent_q,
            fin_proj,
            sent_proj,
            fuse_bias,
            interaction,
            gate,
            lstm,
            head,
        })
    }

    pub fn config(&self) -> &DamConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.num_scalars()
    }

    pub fn lstm(&self) -> &LstmCellParams {
        &self.lstm
    }

    pub fn head(&self) -> &LinearLayer {
        &self.head
    }

    pub fn intra_fin(&self) -> Option<&AttentionLayer> {
        self.intra_fin.as_ref()
    }

    pub fn intra_sent(&self) -> Option<&AttentionLayer> {
        self.intra_sent.as_ref()
    }

    pub fn cross_layers(&self) -> Option<(&AttentionLayer, &AttentionLayer)> {
        self.cross_fin_q.as_ref().zip(self.cross_sent_q.as_ref())
    }

    pub fn gate(&self) -> Option<&LinearLayer> {
        self.gate.as_ref()
    }

    pub fn interaction(&self) -> Option<&LinearLayer> {
        self.interaction.as_ref()
    }

    pub fn fin_proj(&self) -> Option<&LinearLayer> {
        self.fin_proj.as_ref()
    }

    pub fn sent_proj(&self) -> Option<&LinearLayer> {
        self.sent_proj.as_ref()
    }

    fn check_width(&self, g: &Graph, x: Var, width: usize, what: &str) -> Result<()> {
        let shape = g.shape(x);
        if !(2..=3).contains(&shape.len()) || shape[shape.len() - 1] != width || shape[shape.len() - 2] == 0 {
            return Err(ModelError::Config(format!(
                "{what} window must be (batch ×) steps × {width}, got {shape:?}"
            )));
        }
        Ok(())
    }

    /// Self-attention over the time steps of one modality window.
    pub fn unimodal_attend(&self, g: &mut Graph, layer: &AttentionLayer, series: Var) -> Result<Var> {
        Ok(layer.forward(g, &self.params, series, series)?.output)
    }

    /// Both cross-modal passes, concatenated as `(fin-as-query ‖ sent-as-query)`.
    pub fn cross_modal_fuse(&self, g: &mut Graph, fin_hat: Var, sent_hat: Var) -> Result<Var> {
        self.cross_fuse_traced(g, fin_hat, sent_hat, &mut Trace::default())
    }

    fn cross_fuse_traced(&self, g: &mut Graph, fin_hat: Var, sent_hat: Var, trace: &mut Trace) -> Result<Var> {
        let (Some(fq), Some(sq)) = (&self.cross_fin_q, &self.cross_sent_q) else {
            return Err(ModelError::Config(format!(
                "variant `{}` has no cross-modal layers",
                self.config.variant
            )));
        };
        let (fs, ss) = (g.shape(fin_hat).to_vec(), g.shape(sent_hat).to_vec());
        if fs != ss {
            return Err(NdError::Shape {
                op: "cross_modal_fuse",
                lhs: fs,
                rhs: ss,
            }
            .into());
        }
        let a = fq.forward(g, &self.params, fin_hat, sent_hat)?;
        let b = sq.forward(g, &self.params, sent_hat, fin_hat)?;
        trace.fin_queries_sent = Some(a.weights);
        trace.sent_queries_fin = Some(b.weights);
        let axis = fs.len() - 1;
        Ok(g.concat(a.output, b.output, axis)?)
    }

    /// Produces the LSTM input rows for the configured variant.
    pub fn fuse(&self, g: &mut Graph, fin: Var, sent: Option<Var>) -> Result<Var> {
        self.fuse_traced(g, fin, sent, &mut Trace::default())
    }

    fn fuse_traced(&self, g: &mut Graph, fin: Var, sent: Option<Var>, trace: &mut Trace) -> Result<Var> {
        use VariantKind::*;
        self.check_width(g, fin, FIN_FEATURES, "financial")?;
        let sent = match (self.config.multimodal, sent) {
            (true, Some(s)) => {
                self.check_width(g, s, SENT_FEATURES, "sentiment")?;
                if g.shape(s)[..g.shape(s).len() - 1] != g.shape(fin)[..g.shape(fin).len() - 1] {
                    return Err(ModelError::Config(format!(
                        "window shapes disagree: {:?} vs {:?}",
                        g.shape(fin),
                        g.shape(s)
                    )));
                }
                Some(s)
            }
            (true, None) => return Err(ModelError::Config("multimodal model needs a sentiment window".into())),
            (false, _) => None,
        };
        let axis = g.shape(fin).len() - 1;
        let p = &self.params;
        let need = |l: &Option<LinearLayer>| l.clone().expect("layer present for variant");

        let fused = match (self.config.variant, sent) {
            (ConcatOnly, None) => fin,
            (ConcatOnly, Some(s)) => g.concat(fin, s, axis)?,
            (Full | NoCross, None) => {
                let layer = self.intra_fin.as_ref().expect("intra layer");
                let a = layer.forward(g, p, fin, fin)?;
                trace.intra_fin = Some(a.weights);
                a.output
            }
            (Full | NoCross, Some(s)) => {
                let fa = self.intra_fin.as_ref().expect("intra layer").forward(g, p, fin, fin)?;
                let sa = self.intra_sent.as_ref().expect("intra layer").forward(g, p, s, s)?;
                trace.intra_fin = Some(fa.weights);
                trace.intra_sent = Some(sa.weights);
                if self.config.variant == Full {
                    self.cross_fuse_traced(g, fa.output, sa.output, trace)?
                } else {
                    g.concat(fa.output, sa.output, axis)?
                }
            }
            (NoIntra, Some(s)) => {
                let fp = need(&self.fin_proj).forward(g, p, fin)?;
                let sp = need(&self.sent_proj).forward(g, p, s)?;
                self.cross_fuse_traced(g, fp, sp, trace)?
            }
            (Additive | Multiplicative, Some(s)) => {
                let fp = need(&self.fin_proj).forward(g, p, fin)?;
                let sp = need(&self.sent_proj).forward(g, p, s)?;
                let sum = g.add(fp, sp)?;
                let w0 = g.param(p, self.fuse_bias.expect("fusion bias"));
                let additive = g.add_bias(sum, w0)?;
                if self.config.variant == Additive {
                    additive
                } else {
                    let prod = g.hadamard(fp, sp)?;
                    let inter = need(&self.interaction).forward(g, p, prod)?;
                    g.add(additive, inter)?
                }
            }
            (Gated, Some(s)) => {
                let fp = need(&self.fin_proj).forward(g, p, fin)?;
                let pre = need(&self.gate).forward(g, p, s)?;
                let h = g.sigmoid(pre)?;
                g.hadamard(fp, h)?
            }
            (v, None) => {
                return Err(ModelError::Config(format!(
                    "variant `{v}` needs the sentiment modality"
                )))
            }
        };
        Ok(fused)
    }

    /// Batched forward: `B × L × 4` (and `B × L × 2`) windows to `B × 1` predictions.
    pub fn forward(&self, g: &mut Graph, fin: Var, sent: Option<Var>) -> Result<Var> {
        self.forward_traced(g, fin, sent, &mut Trace::default())
    }

    fn forward_traced(&self, g: &mut Graph, fin: Var, sent: Option<Var>, trace: &mut Trace) -> Result<Var> {
        if g.shape(fin).len() != 3 {
            return Err(ModelError::Config(format!(
                "forward expects batch × steps × features, got {:?}",
                g.shape(fin)
            )));
        }
        let fused = self.fuse_traced(g, fin, sent, trace)?;
        let h = self.lstm.run(g, &self.params, fused)?;
        Ok(self.head.forward(g, &self.params, h)?)
    }

    fn batch_inputs(&self, g: &mut Graph, fin: &Tensor, sent: Option<&Tensor>) -> (Var, Option<Var>) {
        let lift = |g: &mut Graph, t: &Tensor| {
            if t.rank() == 2 {
                let mut shape = vec![1];
                shape.extend_from_slice(t.shape());
                g.input(&t.reshape(&shape).expect("same numel"))
            } else {
                g.input(t)
            }
        };
        let f = lift(g, fin);
        let s = sent.filter(|_| self.config.multimodal).map(|t| lift(g, t));
        (f, s)
    }

    /// Prediction for one `L × 4` / `L × 2` window pair, in scaled target units.
    pub fn predict(&self, fin_win: &Tensor, sent_win: Option<&Tensor>) -> Result<f64> {
        if fin_win.rank() != 2 {
            return Err(ModelError::Config(format!(
                "expected L × 4 window, got {:?}",
                fin_win.shape()
            )));
        }
        Ok(self.predict_batch(fin_win, sent_win)?[0])
    }

    pub fn predict_batch(&self, fin: &Tensor, sent: Option<&Tensor>) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let (f, s) = self.batch_inputs(&mut g, fin, sent);
        let y = self.forward(&mut g, f, s)?;
        Ok(g.value(y).to_vec())
    }

    /// Runs one window and returns every attention map the variant computes.
    pub fn attention_maps(&self, fin_win: &Tensor, sent_win: Option<&Tensor>) -> Result<AttentionMaps> {
        let mut g = Graph::new();
        let (f, s) = self.batch_inputs(&mut g, fin_win, sent_win);
        let mut trace = Trace::default();
        self.forward_traced(&mut g, f, s, &mut trace)?;
        let take = |v: Option<Var>| v.map(|v| g.tensor(v));
        Ok(AttentionMaps {
            intra_fin: take(trace.intra_fin),
            intra_sent: take(trace.intra_sent),
            fin_queries_sent: take(trace.fin_queries_sent),
            sent_queries_fin: take(trace.sent_queries_fin),
        })
    }

    /// Writes `model.toml`, `weights.bin` and `weights.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| ModelError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        };
        fs::create_dir_all(dir).map_err(io)?;
        let text = toml::to_string(&self.config).map_err(|e| ModelError::Config(e.to_string()))?;
        fs::write(dir.join("model.toml"), text).map_err(io)?;
        self.params.save(&dir.join("weights.bin"), &dir.join("weights.json"))?;
        Ok(())
    }

    /// Loads a saved model; rejects weights whose names or shapes disagree
    /// with the stored config.
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("model.toml");
        let text = fs::read_to_string(&path).map_err(|e| ModelError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let config: DamConfig = toml::from_str(&text).map_err(|e| ModelError::Config(e.to_string()))?;
        let mut model = DamModel::new(config, 0)?;
        let stored = ParamStore::read(&dir.join("weights.bin"), &dir.join("weights.json"))?;
        model.params.load_from(&stored)?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(rows: usize, cols: usize, seed: u64) -> Tensor {
        let data = (0..rows * cols)
            .map(|i| (((i as u64 + 1) * (seed + 7) * 2654435761) % 1000) as f64 / 1000.0)
            .collect();
        Tensor::new(vec![rows, cols], data).unwrap()
    }

    fn fill(model: &mut DamModel, id: ParamId, v: f64) {
        let n = model.params.get(id).numel();
        model.params.get_mut(id).set_data(vec![v; n]).unwrap();
    }

    #[test]
    fn variant_names_round_trip() {
        for v in VariantKind::ALL {
            assert_eq!(v.as_str().parse::<VariantKind>().unwrap(), v);
        }
        assert!("dual".parse::<VariantKind>().is_err());
    }

    #[test]
    fn constant_head_ignores_input() {
        let mut m = DamModel::new(DamConfig::new(VariantKind::Full, 4, 3), 1).unwrap();
        let (w, b) = (m.head.weight, m.head.bias.unwrap());
        fill(&mut m, w, 0.0);
        fill(&mut m, b, 0.3);
        for seed in 0..3 {
            let p = m.predict(&window(5, 4, seed), Some(&window(5, 2, seed + 10))).unwrap();
            assert_eq!(p, 0.3);
        }
    }

    #[test]
    fn concat_only_keeps_raw_features() {
        let m = DamModel::new(DamConfig::new(VariantKind::ConcatOnly, 4, 3), 1).unwrap();
        let (f, s) = (window(3, 4, 1), window(3, 2, 2));
        let mut g = Graph::new();
        let fv = g.input(&f);
        let sv = g.input(&s);
        let fused = m.fuse(&mut g, fv, Some(sv)).unwrap();
        assert_eq!(g.shape(fused), &[3, 6]);
        let t = g.tensor(fused);
        for r in 0..3 {
            assert_eq!(&t.row(r)[..4], f.row(r));
            assert_eq!(&t.row(r)[4..], s.row(r));
        }
    }

    #[test]
    fn gated_with_zero_gate_halves_projection() {
        let mut m = DamModel::new(DamConfig::new(VariantKind::Gated, 3, 2), 4).unwrap();
        let gate = m.gate.clone().unwrap();
        fill(&mut m, gate.weight, 0.0);
        fill(&mut m, gate.bias.unwrap(), 0.0);
        let (f, s) = (window(4, 4, 3), window(4, 2, 5));
        let proj = f.matmul(m.params.get(m.fin_proj.as_ref().unwrap().weight)).unwrap();
        let mut g = Graph::new();
        let fv = g.input(&f);
        let sv = g.input(&s);
        let fused = m.fuse(&mut g, fv, Some(sv)).unwrap();
        for (a, b) in g.value(fused).iter().zip(proj.data()) {
            assert_eq!(*a, 0.5 * b);
        }
    }

    #[test]
    fn multiplicative_with_zero_interaction_is_additive() {
        let mut mult = DamModel::new(DamConfig::new(VariantKind::Multiplicative, 3, 2), 9).unwrap();
        let inter = mult.interaction.clone().unwrap();
        fill(&mut mult, inter.weight, 0.0);
        let add = DamModel::new(DamConfig::new(VariantKind::Additive, 3, 2), 9).unwrap();
        // copy the shared weights so both models hold the same projections
        let mut add = add;
        for (name, t) in mult.params.iter() {
            if let Some(id) = add.params.find(name) {
                add.params.get_mut(id).set_data(t.data().to_vec()).unwrap();
            }
        }
        let (f, s) = (window(4, 4, 1), window(4, 2, 1));
        let fuse = |m: &DamModel| {
            let mut g = Graph::new();
            let fv = g.input(&f);
            let sv = g.input(&s);
            let v = m.fuse(&mut g, fv, Some(sv)).unwrap();
            g.value(v).to_vec()
        };
        assert_eq!(fuse(&mult), fuse(&add));
    }

    #[test]
    fn fused_width_per_variant() {
        let d = 5;
        let widths: Vec<usize> = VariantKind::ALL
            .iter()
            .map(|&v| DamModel::new(DamConfig::new(v, d, 2), 0).unwrap().lstm.input)
            .collect();
        assert_eq!(widths, vec![10, 10, 10, 6, 5, 5, 5]);
    }

    #[test]
    fn financial_only_has_no_sentiment_params() {
        for v in [VariantKind::Full, VariantKind::ConcatOnly] {
            let cfg = DamConfig {
                multimodal: false,
                ..DamConfig::new(v, 4, 3)
            };
            let m = DamModel::new(cfg, 0).unwrap();
            assert!(m.params.iter().all(|(n, _)| !n.contains("sent")), "{v}");
            assert!(m.predict(&window(6, 4, 0), None).is_ok());
        }
        let bad = DamConfig {
            multimodal: false,
            ..DamConfig::new(VariantKind::Gated, 4, 3)
        };
        assert!(DamModel::new(bad, 0).is_err());
    }

    #[test]
    fn wrong_feature_width_rejected() {
        let m = DamModel::new(DamConfig::new(VariantKind::Full, 4, 3), 0).unwrap();
        assert!(m.predict(&window(5, 3, 0), Some(&window(5, 2, 0))).is_err());
        assert!(m.predict(&window(5, 4, 0), Some(&window(4, 2, 0))).is_err());
        assert!(m.predict(&window(5, 4, 0), None).is_err());
    }

    #[test]
    fn cross_fuse_rejects_length_mismatch() {
        let m = DamModel::new(DamConfig::new(VariantKind::Full, 3, 2), 0).unwrap();
        let mut g = Graph::new();
        let a = g.input(&window(4, 3, 0));
        let b = g.input(&window(5, 3, 0));
        assert!(m.cross_modal_fuse(&mut g, a, b).is_err());
    }

    #[test]
    fn save_load_round_trip_and_rejects_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let m = DamModel::new(DamConfig::new(VariantKind::Full, 4, 3), 11).unwrap();
        m.save(dir.path()).unwrap();
        let back = DamModel::load(dir.path()).unwrap();
        assert_eq!(back.params.to_bytes(), m.params.to_bytes());
        assert_eq!(back.config(), m.config());

        let other = DamModel::new(DamConfig::new(VariantKind::Full, 5, 3), 11).unwrap();
        other
            .params
            .save(&dir.path().join("weights.bin"), &dir.path().join("weights.json"))
            .unwrap();
        assert!(DamModel::load(dir.path()).is_err());
    }
}
