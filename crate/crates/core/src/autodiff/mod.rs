//! Define-by-run reverse-mode automatic differentiation over dense `f64`
//! tensors of rank 1 or 2.
//!
//! A [`Graph`] is rebuilt for every forward pass. Leaves are either
//! trainable (`param`) or constant; every operation appends one record, and
//! [`Graph::backward`] walks the records once in reverse, summing gradient
//! contributions into each input. Broadcasting is limited to a scalar
//! (shape `[1]`) combined with a tensor.

mod gradcheck;
mod graph;
mod lstm;
mod params;
mod tensor;

pub use gradcheck::{gradcheck, GradcheckReport};
pub use graph::{BackwardStats, Graph, Var};
pub use lstm::{lstm_cell, LstmVars};
pub use params::ParamSet;
pub use tensor::Tensor;
