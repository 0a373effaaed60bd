//! Dense `f64` tensors, a recording tape for reverse-mode gradients, and
//! named parameter storage.

mod error;
mod graph;
pub(crate) mod kernels;
mod params;
mod tensor;

pub use error::{NdError, Result};
pub use graph::{Grads, Graph, Var};
pub use params::{Initializer, ManifestEntry, ParamId, ParamStore, WeightManifest, WeightsError};
pub use tensor::Tensor;
