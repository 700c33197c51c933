//! Cascaded SpMV configuration prediction and a predict-while-solve runtime.

pub mod cancel;
pub mod matrix;
pub mod kernels;
pub mod features;
pub mod inference;
pub mod solver;
pub mod bench;
pub mod cli;
