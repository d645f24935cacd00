use crate::error::{domain, Result};
use crate::specfun::bessel::ln_bessel_i_scaled_seq;
use crate::specfun::gamma::{ln_gamma, ln_pochhammer};
use crate::specfun::marcum::marcum_q_unchecked;

/// Conditional outage kernel `G(γ; r, r̃)`.
///
/// Given the block-common variables `r` (desired link, `2m` degrees of
/// freedom) and `r̃` (interference, `2Ũ` degrees of freedom), each port of the
/// block is in outage independently with probability `G`. The closed form is a
/// Marcum-Q term minus a finite double sum of modified Bessel terms; the double
/// sum is regrouped by `s = j + k` so that the `γ`-only factors are computed
/// once per kernel, and every term is assembled in log space with the scaled
/// Bessel function so that nothing overflows.
#[derive(Debug, Clone)]
pub struct GKernel {
    gamma: f64,
    delta: f64,
    m: u32,
    u_tilde: u32,
    phi2_over: f64,
    ln_gamma_thr: f64,
    ln_prefactor: f64,
    ln_d: Vec<f64>,
    max_order: usize,
}

impl GKernel {
    pub fn new(gamma: f64, delta: f64, m: u32, u_tilde: u32) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return domain(format!(
                "SIR threshold must be positive and finite, got {gamma}"
            ));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return domain(format!("delta must lie in (0, 1), got {delta}"));
        }
        if m == 0 || u_tilde == 0 {
            return domain("fading orders m and U~ must be at least 1");
        }
        let total = m + u_tilde;
        let s_max = (total - 2) as usize;
        let ln_g = gamma.ln();
        let ln_g1 = gamma.ln_1p();
        // D_s = Σ_{k=0}^{s} (m+Ũ-s-1)_{s-k} / (s-k)! · (γ+1)^k · γ^{(s-2k)/2}
        let ln_d = (0..=s_max)
            .map(|s| {
                let base = (total as usize - s - 1) as f64;
                let terms: Vec<f64> = (0..=s)
                    .map(|k| {
                        let j = (s - k) as u32;
                        ln_pochhammer(base, j) - ln_gamma(j as f64 + 1.0)
                            + k as f64 * ln_g1
                            + 0.5 * (s as f64 - 2.0 * k as f64) * ln_g
                    })
                    .collect();
                log_sum_exp(&terms)
            })
            .collect();
        let phi2 = delta / (1.0 - delta);
        Ok(Self {
            gamma,
            delta,
            m,
            u_tilde,
            phi2_over: phi2 / (gamma + 1.0),
            ln_gamma_thr: ln_g,
            ln_prefactor: -((total - 1) as f64) * ln_g1,
            ln_d,
            max_order: (m.max(u_tilde) - 1) as usize,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn u_tilde(&self) -> u32 {
        self.u_tilde
    }

    /// `G(γ; r, r̃)` for `r, r̃ > 0`, clamped to `[0, 1]` against round-off.
    pub fn eval(&self, r: f64, r_tilde: f64) -> f64 {
        debug_assert!(r > 0.0 && r_tilde > 0.0);
        let a2 = self.phi2_over * self.gamma * r_tilde;
        let b2 = self.phi2_over * r;
        let (a, b) = (a2.sqrt(), b2.sqrt());
        let z = a * b;
        let q = marcum_q_unchecked(self.u_tilde as f64, a, b);

        let ln_bessel = ln_bessel_i_scaled_seq(self.max_order, z);
        let ln_ratio = r.ln() - r_tilde.ln();
        let one_minus_m = 1.0 - self.m as f64;
        let base = self.ln_prefactor + 0.5 * one_minus_m * (ln_ratio - self.ln_gamma_thr)
            - 0.5 * (a - b) * (a - b);
        let mut sum = 0.0;
        for (s, ln_d) in self.ln_d.iter().enumerate() {
            let order = (1 - self.m as i64 + s as i64).unsigned_abs() as usize;
            let ln_term = base + 0.5 * s as f64 * ln_ratio + ln_d + ln_bessel[order];
            sum += ln_term.exp();
        }
        (q - sum).clamp(0.0, 1.0)
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
