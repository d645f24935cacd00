//! Closed-form and numerical outage analysis of slow, fast and opportunistic
//! FAMA.

mod gain;
mod kernel;
mod outage;

pub use gain::{mux_gain, ofama_gain, ofama_gain_approx};
pub use kernel::GKernel;
pub use outage::{
    op_fast, op_slow_exact, op_slow_quadrature, op_slow_upper_bound, op_upper_bound,
    single_port_op, FastMethod, DEFAULT_QUADRATURE_ORDER, DEFAULT_REL_TOL,
};

use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// System parameters of one FAMA user: `U` users in total, desired-link
/// fading order `m`, one fading order per interferer, SIR threshold `γ`
/// (linear), `N` ports over an aperture of `W` wavelengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub users: usize,
    pub m: u32,
    pub m_interferers: Vec<u32>,
    pub gamma: f64,
    pub n_ports: usize,
    pub antenna_size: f64,
}

impl SystemConfig {
    pub fn new(
        users: usize,
        m: u32,
        m_interferers: Vec<u32>,
        gamma: f64,
        n_ports: usize,
        antenna_size: f64,
    ) -> Result<Self> {
        let cfg = Self {
            users,
            m,
            m_interferers,
            gamma,
            n_ports,
            antenna_size,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every link (desired and interfering) with the same fading order `m`.
    pub fn homogeneous(
        users: usize,
        m: u32,
        gamma: f64,
        n_ports: usize,
        antenna_size: f64,
    ) -> Result<Self> {
        Self::new(
            users,
            m,
            vec![m; users.saturating_sub(1)],
            gamma,
            n_ports,
            antenna_size,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.users < 2 {
            return domain(format!(
                "at least two users are required, got U={}",
                self.users
            ));
        }
        if self.m_interferers.len() != self.users - 1 {
            return domain(format!(
                "expected {} interferer fading orders, got {}",
                self.users - 1,
                self.m_interferers.len()
            ));
        }
        if self.m == 0 || self.m_interferers.contains(&0) {
            return domain("fading orders must be at least 1");
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return domain(format!(
                "SIR threshold must be positive and finite, got {}",
                self.gamma
            ));
        }
        if self.n_ports == 0 {
            return domain("port count N must be positive");
        }
        if !(self.antenna_size >= 0.0) || !self.antenna_size.is_finite() {
            return domain(format!(
                "antenna size W must be >= 0, got {}",
                self.antenna_size
            ));
        }
        Ok(())
    }

    /// Total interferer fading order `Ũ = Σ m_ũ`.
    pub fn u_tilde(&self) -> u32 {
        self.m_interferers.iter().sum()
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            gamma,
            ..self.clone()
        }
    }
}

/// Moment-matched single-Nakagami description of the fast-FAMA composite
/// interference: `Ũ = Σ m_ũ`, fading order `m̃` and `Û = Ũ / m̃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FastParams {
    pub u_tilde: u32,
    pub m_tilde: f64,
    pub u_hat: f64,
}

impl FastParams {
    /// Integer fading order used by the kernel-based evaluators.
    pub fn m_tilde_int(&self) -> u32 {
        (self.m_tilde.round() as u32).max(1)
    }
}

/// Moment matching of the composite interference `Σ s_ũ h_ũ`.
pub fn fast_params(m_interferers: &[u32]) -> Result<FastParams> {
    if m_interferers.is_empty() {
        return domain("fast_params needs at least one interferer");
    }
    if m_interferers.contains(&0) {
        return domain("fading orders must be at least 1");
    }
    let total: u64 = m_interferers.iter().map(|&m| m as u64).sum();
    let squares: u64 = m_interferers.iter().map(|&m| (m as u64).pow(2)).sum();
    let cross = total * total - squares;
    let u_tilde = total as f64;
    let m_tilde = u_tilde * u_tilde / (u_tilde + cross as f64);
    Ok(FastParams {
        u_tilde: total as u32,
        m_tilde,
        u_hat: u_tilde / m_tilde,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutageMethod {
    ExactIntegral,
    Quadrature,
    UpperBound,
    MonteCarlo,
}

impl OutageMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ExactIntegral => "exact_integral",
            Self::Quadrature => "quadrature",
            Self::UpperBound => "upper_bound",
            Self::MonteCarlo => "monte_carlo",
        }
    }
}

/// An outage probability with its method and error metadata. `error` is the
/// integration error estimate, or the standard error for Monte Carlo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageEstimate {
    pub value: f64,
    pub method: OutageMethod,
    pub error: f64,
    pub meta: BTreeMap<String, String>,
}

impl OutageEstimate {
    pub(crate) fn new(value: f64, method: OutageMethod, error: f64) -> Self {
        Self {
            value: value.clamp(0.0, 1.0),
            method,
            error: error.abs(),
            meta: BTreeMap::new(),
        }
    }

    pub(crate) fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }
}
