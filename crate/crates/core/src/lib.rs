//! Outage probability and multiplexing gain of slow, fast and opportunistic
//! fluid antenna multiple access (FAMA) under Nakagami-m fading, using a
//! block-diagonal approximation of the spatial port correlation.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`] holds the special functions (Bessel, Marcum-Q, incomplete
//!   gamma/beta) and generalized Gauss-Laguerre rules.
//! * [`correlation`] builds the Jakes correlation matrix and partitions the
//!   ports into equicorrelated blocks.
//! * [`analytic`] evaluates the conditional outage kernel, the outage
//!   probability (adaptive integral, quadrature, upper bound) and gains.
//! * [`montecarlo`] simulates the channel model directly and is used as the
//!   reference for the analytic results.

pub mod analytic;
pub mod correlation;
pub mod error;
pub mod integrate;
pub mod montecarlo;
pub mod specfun;

pub use analytic::{
    fast_params, mux_gain, ofama_gain, ofama_gain_approx, op_fast, op_slow_exact,
    op_slow_quadrature, op_slow_upper_bound, op_upper_bound, single_port_op, FastMethod,
    FastParams, GKernel, OutageEstimate, OutageMethod, SystemConfig,
};
pub use correlation::{
    block_partition, constant_structure, jakes_matrix, symmetric_eigenvalues, BlockStructure,
    CorrelationModel, CorrelationSpec, SymMatrix,
};
pub use error::{FamaError, Result};
pub use montecarlo::{
    estimate_gains, estimate_op, estimate_op_sweep, max_sir_samples, sample_trial, GainEstimate,
    McMode, McSettings, TrialBatch,
};

/// Converts a threshold in dB to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
