//! Special functions used by the outage kernel and the quadrature rules.
//!
//! Everything here is a pure function of its arguments. Functions that can
//! overflow for the argument ranges met in practice (`I_ν`, the Poisson and
//! gamma densities) are evaluated in scaled or logarithmic form.

pub(crate) mod bessel;
pub(crate) mod beta;
pub(crate) mod gamma;
pub(crate) mod laguerre;
pub(crate) mod marcum;

pub use bessel::{bessel_i_scaled, bessel_j0, ln_bessel_i_scaled, ln_bessel_i_scaled_seq};
pub use beta::reg_inc_beta;
pub use gamma::{
    gamma_p, gamma_q, ln_pochhammer, ln_poisson_term, log_gamma, pochhammer, poisson_term,
};
pub use laguerre::{gauss_laguerre_rule, laguerre_poly, QuadratureRule};
pub use marcum::marcum_q;
