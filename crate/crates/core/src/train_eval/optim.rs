use serde::{Deserialize, Serialize};

use crate::ndcore::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

/// Applies accumulated gradients to a parameter store.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        t: i32,
        m: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
    },
}

impl Optimizer {
    pub fn sgd(lr: f64) -> Self {
        Optimizer::Sgd { lr }
    }

    pub fn adam(lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Optimizer::Adam {
            lr,
            beta1,
            beta2,
            eps,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step(&mut self, store: &mut ParamStore) {
        match self {
            Optimizer::Sgd { lr } => {
                let lr = *lr;
                store.for_each_mut(|_, w, g| w.iter_mut().zip(g).for_each(|(w, g)| *w -= lr * g));
            }
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
                t,
                m,
                v,
            } => {
                if m.len() < store.len() {
                    m.resize(store.len(), Vec::new());
                    v.resize(store.len(), Vec::new());
                }
                *t += 1;
                let (b1, b2, lr, eps) = (*beta1, *beta2, *lr, *eps);
                let c1 = 1.0 - b1.powi(*t);
                let c2 = 1.0 - b2.powi(*t);
                store.for_each_mut(|i, w, g| {
                    let (mi, vi) = (&mut m[i], &mut v[i]);
                    if mi.len() != w.len() {
                        *mi = vec![0.0; w.len()];
                        *vi = vec![0.0; w.len()];
                    }
                    for k in 0..w.len() {
                        mi[k] = b1 * mi[k] + (1.0 - b1) * g[k];
                        vi[k] = b2 * vi[k] + (1.0 - b2) * g[k] * g[k];
                        let mhat = mi[k] / c1;
                        let vhat = vi[k] / c2;
                        w[k] -= lr * mhat / (vhat.sqrt() + eps);
                    }
                });
            }
        }
    }
}
