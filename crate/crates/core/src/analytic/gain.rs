use crate::error::{domain, Result};
use crate::specfun::reg_inc_beta;

/// Expected number of users served without outage, `U (1 - p_out)`.
pub fn mux_gain(users: usize, p_out: f64) -> f64 {
    users as f64 * (1.0 - p_out.clamp(0.0, 1.0))
}

fn check(users: usize, candidates: usize, p_out: f64) -> Result<()> {
    if users == 0 {
        return domain("U must be at least 1");
    }
    if candidates < users {
        return domain(format!(
            "M must be at least U, got M={candidates} < U={users}"
        ));
    }
    if !(0.0..=1.0).contains(&p_out) {
        return domain(format!("p_out must lie in [0, 1], got {p_out}"));
    }
    Ok(())
}

/// Opportunistic gain when the best `U` of `M` candidates are scheduled:
/// `Σ_{u=M-U+1}^{M} I_{1-p}(M-u+1, u)`.
pub fn ofama_gain(users: usize, candidates: usize, p_out: f64) -> Result<f64> {
    check(users, candidates, p_out)?;
    let x = 1.0 - p_out;
    let mut total = 0.0;
    for u in (candidates - users + 1)..=candidates {
        total += reg_inc_beta(x, (candidates - u + 1) as f64, u as f64)?;
    }
    Ok(total.clamp(0.0, users as f64))
}

/// `min(U, M (1 - p))`.
pub fn ofama_gain_approx(users: usize, candidates: usize, p_out: f64) -> Result<f64> {
    check(users, candidates, p_out)?;
    Ok((users as f64).min(candidates as f64 * (1.0 - p_out)))
}
