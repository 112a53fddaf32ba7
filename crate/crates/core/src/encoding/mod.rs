//! Expansion recoding of joint positions into sparse basis activations,
//! the granule/Golgi activity loop, and rate-code modulation.

mod activation;
mod calibrate;
mod golgi;
mod layout;

pub use activation::{modulate, modulate_dual_rail, Modulated, SparseActivation};
pub use calibrate::{calibrate_sparsity, mean_active_fraction};
pub use golgi::{
    closed_loop_sum, golgi_output_gain, golgi_output_threshold, line_params, solve_golgi, GolgiMode, GolgiParams,
    GolgiState, LineParams,
};
pub use layout::{BasisLayout, Clamp, Combine, FieldShape};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EncodingError {
    #[error("dimension mismatch: got {got} inputs, layout encodes {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("invalid golgi parameters: {0}")]
    Params(String),
    #[error("golgi loop is in {actual:?} mode, {requested:?} was requested")]
    Mode { requested: GolgiMode, actual: GolgiMode },
    #[error("golgi fixed point did not converge after {iterations} iterations (last |ΔO| = {last_delta:e})")]
    NonConvergence { iterations: usize, last_delta: f64 },
    #[error("sparsity calibration failed: achieved mean active fraction {achieved} for target {target}")]
    Calibration { achieved: f64, target: f64 },
}
