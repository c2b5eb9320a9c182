//! Independent decision rules: each row's label depends on its own
//! probability vector (and, for sampling rules, its own random stream).

pub mod independent;
pub mod rng;
pub mod tie;

pub use independent::{argmax_rule, threshold_rule, thompson_rule, topk_rule};
pub use rng::{derive_seed, RngSeed, RowStreams};
pub use tie::TieOrder;
