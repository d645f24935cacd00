use super::gamma::ln_gamma;
use crate::error::{domain, Result};
use std::f64::consts::{FRAC_PI_4, PI};

/// Zeroth-order Bessel function of the first kind.
///
/// Ascending series near the origin, Miller's backward recurrence in the
/// oscillatory mid range and the Hankel expansion beyond `|x| = 25`.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return domain(format!("bessel_j0 requires a finite argument, got {x}"));
    }
    let x = x.abs();
    Ok(if x <= 5.0 {
        j0_series(x)
    } else if x <= 25.0 {
        j0_miller(x)
    } else {
        j0_hankel(x)
    })
}

fn j0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= -q / (k * k) as f64;
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn j0_miller(x: f64) -> f64 {
    // normalisation: J0 + 2 Σ_{k≥1} J_{2k} = 1
    let start = 2 * ((x as usize + 40) / 2);
    let mut jp1 = 0.0;
    let mut j = 1e-30;
    let mut norm = 0.0;
    for n in (1..=start).rev() {
        let jm1 = 2.0 * n as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if (n - 1) % 2 == 0 && n > 1 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += j;
    j / norm
}

fn j0_hankel(x: f64) -> f64 {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0f64;
    for k in 1..60 {
        let next = term * -(((2 * k - 1) * (2 * k - 1)) as f64) / (8.0 * k as f64 * x);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        // a_k / x^k alternates between the Q (odd k) and P (even k) sums
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn check_order(nu: f64, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return domain(format!(
            "modified Bessel argument must be finite and >= 0, got {x}"
        ));
    }
    if !nu.is_finite() {
        return domain("modified Bessel order must be finite");
    }
    if nu < 0.0 {
        if nu.fract() != 0.0 {
            return domain(format!(
                "negative non-integer Bessel order {nu} is not supported"
            ));
        }
        return Ok(-nu);
    }
    Ok(nu)
}

/// `e^{-x} I_ν(x)` for `x ≥ 0`. Integer negative orders use `I_{-n} = I_n`.
pub fn bessel_i_scaled(nu: f64, x: f64) -> Result<f64> {
    let nu = check_order(nu, x)?;
    Ok(ln_i_scaled(nu, x).exp())
}

/// `ln(e^{-x} I_ν(x))`; `-∞` when the value is zero (`x = 0`, `ν > 0`).
pub fn ln_bessel_i_scaled(nu: f64, x: f64) -> Result<f64> {
    let nu = check_order(nu, x)?;
    Ok(ln_i_scaled(nu, x))
}

fn asymptotic_region(nu: f64, x: f64) -> bool {
    x > 35.0f64.max(0.5 * nu * nu)
}

pub(crate) fn ln_i_scaled(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if asymptotic_region(nu, x) {
        ln_i_asymptotic(nu, x)
    } else {
        ln_i_series(nu, x)
    }
}

fn ln_i_series(nu: f64, x: f64) -> f64 {
    // terms t_k = (x/2)^{ν+2k} / (k! Γ(ν+k+1)), summed around the largest one
    let half = 0.5 * x;
    let q = half * half;
    let peak = ((nu * nu + x * x).sqrt() - nu) * 0.5 - 1.0;
    let k0 = peak.round().max(0.0);
    let ln_t0 = (nu + 2.0 * k0) * half.ln() - ln_gamma(k0 + 1.0) - ln_gamma(nu + k0 + 1.0);
    let mut sum = 1.0;
    let mut t = 1.0;
    let mut k = k0;
    loop {
        t *= q / ((k + 1.0) * (nu + k + 1.0));
        sum += t;
        k += 1.0;
        if t < 1e-17 * sum {
            break;
        }
    }
    t = 1.0;
    k = k0;
    while k >= 1.0 {
        t *= k * (nu + k) / q;
        sum += t;
        k -= 1.0;
        if t < 1e-17 * sum {
            break;
        }
    }
    ln_t0 + sum.ln() - x
}

fn ln_i_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut sum = 1.0;
    let mut term = 1.0f64;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = term * (odd * odd - mu) / (8.0 * k as f64 * x);
        if next.abs() > term.abs() && k > 1 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum.ln() - 0.5 * (2.0 * PI * x).ln()
}

/// `ln(e^{-x} I_n(x))` for `n = 0..=n_max`.
///
/// The top two orders come from [`ln_bessel_i_scaled`]; lower orders follow
/// from the downward recurrence written for the ratios `I_{n+1}/I_n`, which is
/// stable and cannot overflow.
pub fn ln_bessel_i_scaled_seq(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; n_max + 1];
    if x == 0.0 {
        out[0] = 0.0;
        return out;
    }
    let top = n_max as f64;
    out[n_max] = ln_i_scaled(top, x);
    let mut ratio = (ln_i_scaled(top + 1.0, x) - out[n_max]).exp();
    for n in (1..=n_max).rev() {
        ratio = 1.0 / (ratio + 2.0 * n as f64 / x);
        out[n - 1] = out[n] - ratio.ln();
    }
    out
}
