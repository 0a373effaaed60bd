// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dam;
pub mod datapipe;
pub mod layers;
pub mod ndcore;
pub mod stats;
pub mod svg;
pub mod synthetic;
pub mod train_eval;
