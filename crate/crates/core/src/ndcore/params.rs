//! Named parameter storage and the weight file format.
//!
//! Weights are written as one flat little-endian `f64` buffer holding every
//! tensor back to back, plus a JSON manifest listing `name`, `shape` and the
//! byte `offset` of each tensor inside the buffer.

use std::fs;
use std::path::Path;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::error::NdError;
use super::graph::Grads;
use super::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest: {0}")]
    Manifest(String),
    #[error("weights do not match model: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Tensor(#[from] NdError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightManifest {
    pub dtype: String,
    pub byte_order: String,
    pub total_bytes: usize,
    pub tensors: Vec<ManifestEntry>,
}

/// Ordered collection of named trainable tensors.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

/// Seeded source for parameter initialization.
pub struct Initializer {
    rng: ChaCha8Rng,
}

impl Initializer {
    pub fn new(seed: u64) -> Self {
        Initializer {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Xavier/Glorot uniform on `[-a, a]`, `a = sqrt(6 / (fan_in + fan_out))`.
    pub fn xavier_uniform(&mut self, fan_in: usize, fan_out: usize, n: usize) -> Vec<f64> {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-a, a).expect("finite bound");
        (0..n).map(|_| dist.sample(&mut self.rng)).collect()
    }
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    /// Registers a tensor as trainable. Names must be unique.
    pub fn add(&mut self, name: impl Into<String>, mut tensor: Tensor) -> ParamId {
        let name = name.into();
        assert!(self.find(&name).is_none(), "duplicate parameter name {name}");
        tensor.set_requires_grad(true);
        self.names.push(name);
        self.tensors.push(tensor);
        ParamId(self.tensors.len() - 1)
    }

    /// Adds an `rows × cols` matrix with Xavier-uniform entries.
    pub fn add_xavier(&mut self, name: impl Into<String>, rows: usize, cols: usize, init: &mut Initializer) -> ParamId {
        let data = init.xavier_uniform(rows, cols, rows * cols);
        let t = Tensor::new(vec![rows, cols], data).expect("finite init");
        self.add(name, t)
    }

    pub fn add_constant(&mut self, name: impl Into<String>, len: usize, value: f64) -> ParamId {
        self.add(name, Tensor::full(&[len], value).expect("finite constant"))
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    pub fn zero_grad(&mut self) {
        self.tensors.iter_mut().for_each(Tensor::zero_grad);
    }

    /// Adds the parameter gradients of one backward sweep into each tensor.
    pub fn accumulate(&mut self, grads: &Grads) {
        for (id, g) in grads.param_entries() {
            self.tensors[id.0].accumulate_grad(g);
        }
    }

    /// Global L2 norm over all accumulated gradients.
    pub fn grad_norm(&self) -> f64 {
        self.tensors
            .iter()
            .filter_map(Tensor::grad)
            .flat_map(|g| g.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Multiplies every accumulated gradient by `factor`.
    pub fn scale_grads(&mut self, factor: f64) {
        for t in &mut self.tensors {
            if let Some(g) = t.grad_mut() {
                g.iter_mut().for_each(|v| *v *= factor);
            }
        }
    }

    pub fn manifest(&self) -> WeightManifest {
        let mut offset = 0;
        let tensors = self
            .iter()
            .map(|(name, t)| {
                let e = ManifestEntry {
                    name: name.to_string(),
                    shape: t.shape().to_vec(),
                    offset,
                };
                offset += t.numel() * 8;
                e
            })
            .collect();
        WeightManifest {
            dtype: "f64".into(),
            byte_order: "little".into(),
            total_bytes: offset,
            tensors,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.num_scalars() * 8);
        for t in &self.tensors {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn save(&self, weights_path: &Path, manifest_path: &Path) -> Result<(), WeightsError> {
        write_file(weights_path, &self.to_bytes())?;
        let json = serde_json::to_string_pretty(&self.manifest()).expect("manifest serializes");
        write_file(manifest_path, json.as_bytes())
    }

    /// Reads a weight file pair into a fresh store, in manifest order.
    pub fn read(weights_path: &Path, manifest_path: &Path) -> Result<ParamStore, WeightsError> {
        let manifest_text = read_file(manifest_path)?;
        let manifest: WeightManifest =
            serde_json::from_slice(&manifest_text).map_err(|e| WeightsError::Manifest(e.to_string()))?;
        let bytes = read_file(weights_path)?;
        ParamStore::from_bytes(&manifest, &bytes)
    }

    pub fn from_bytes(manifest: &WeightManifest, bytes: &[u8]) -> Result<ParamStore, WeightsError> {
        if manifest.dtype != "f64" || manifest.byte_order != "little" {
            return Err(WeightsError::Manifest(format!(
                "unsupported encoding {} / {}",
                manifest.dtype, manifest.byte_order
            )));
        }
        if bytes.len() != manifest.total_bytes {
            return Err(WeightsError::Manifest(format!(
                "buffer holds {} bytes, manifest declares {}",
                bytes.len(),
                manifest.total_bytes
            )));
        }
        let mut store = ParamStore::new();
        for e in &manifest.tensors {
            let n: usize = e.shape.iter().product();
            let end = e.offset + n * 8;
            if end > bytes.len() || e.offset % 8 != 0 {
                return Err(WeightsError::Manifest(format!(
                    "tensor {} lies outside the buffer",
                    e.name
                )));
            }
            let data = bytes[e.offset..end]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            if store.find(&e.name).is_some() {
                return Err(WeightsError::Manifest(format!("duplicate tensor {}", e.name)));
            }
            store.add(e.name.clone(), Tensor::new(e.shape.clone(), data)?);
        }
        Ok(store)
    }

    /// Copies values from `other`, which must hold exactly the same names and shapes.
    pub fn load_from(&mut self, other: &ParamStore) -> Result<(), WeightsError> {
        if other.len() != self.len() {
            return Err(WeightsError::Mismatch(format!(
                "expected {} tensors, found {}",
                self.len(),
                other.len()
            )));
        }
        for i in 0..self.len() {
            let name = &self.names[i];
            let Some(j) = other.find(name) else {
                return Err(WeightsError::Mismatch(format!("missing tensor {name}")));
            };
            let src = other.get(j);
            if src.shape() != self.tensors[i].shape() {
                return Err(WeightsError::Mismatch(format!(
                    "{name}: expected shape {:?}, found {:?}",
                    self.tensors[i].shape(),
                    src.shape()
                )));
            }
            self.tensors[i].set_data(src.data().to_vec())?;
        }
        Ok(())
    }

    /// Flat copy of all parameter values, used to snapshot/restore weights.
    pub fn snapshot(&self) -> Vec<Vec<f64>> {
        self.tensors.iter().map(|t| t.data().to_vec()).collect()
    }

    pub fn restore(&mut self, snapshot: &[Vec<f64>]) {
        assert_eq!(snapshot.len(), self.tensors.len());
        for (t, s) in self.tensors.iter_mut().zip(snapshot) {
            t.data_mut().copy_from_slice(s);
        }
    }

    /// Visits `(index, values, grad)` for every tensor holding a gradient.
    pub(crate) fn for_each_mut(&mut self, mut f: impl FnMut(usize, &mut [f64], &[f64])) {
        for (i, t) in self.tensors.iter_mut().enumerate() {
            if let (data, Some(g)) = t.data_and_grad_mut() {
                f(i, data, g);
            }
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), WeightsError> {
    fs::write(path, bytes).map_err(|source| WeightsError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>, WeightsError> {
    fs::read(path).map_err(|source| WeightsError::Io {
        path: path.display().to_string(),
        source,
    })
}
