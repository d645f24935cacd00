use super::gamma::ln_gamma;
use crate::error::{domain, Result};

fn beta_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("reg_inc_beta requires x in [0, 1], got {x}"));
    }
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return domain(format!("reg_inc_beta requires a, b > 0, got a={a}, b={b}"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    let value = if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_fraction(1.0 - x, b, a) / b
    };
    Ok(value.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_forms() {
        // I_x(2, 1) = x^2, I_x(1, 2) = 1 - (1-x)^2, I_x(1, 1) = x
        assert_relative_eq!(reg_inc_beta(0.5, 2.0, 1.0).unwrap(), 0.25, epsilon = 1e-15);
        for &x in &[0.01, 0.3, 0.77, 0.999] {
            assert_relative_eq!(reg_inc_beta(x, 2.0, 1.0).unwrap(), x * x, epsilon = 1e-14);
            assert_relative_eq!(
                reg_inc_beta(x, 1.0, 2.0).unwrap(),
                1.0 - (1.0 - x) * (1.0 - x),
                epsilon = 1e-14
            );
            assert_relative_eq!(reg_inc_beta(x, 1.0, 1.0).unwrap(), x, epsilon = 1e-14);
        }
    }

    #[test]
    fn endpoints_and_domain() {
        assert_eq!(reg_inc_beta(0.0, 3.0, 4.0).unwrap(), 0.0);
        assert_eq!(reg_inc_beta(1.0, 3.0, 4.0).unwrap(), 1.0);
        assert!(reg_inc_beta(-0.1, 1.0, 1.0).is_err());
        assert!(reg_inc_beta(1.1, 1.0, 1.0).is_err());
        assert!(reg_inc_beta(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn binomial_tail_identity() {
        // I_p(k, n-k+1) = P[Binomial(n, p) >= k]
        let n = 12u32;
        let p: f64 = 0.37;
        for k in 1..=n {
            let tail: f64 = (k..=n)
                .map(|i| {
                    let ln_c = ln_gamma(n as f64 + 1.0)
                        - ln_gamma(i as f64 + 1.0)
                        - ln_gamma((n - i) as f64 + 1.0);
                    (ln_c + i as f64 * p.ln() + (n - i) as f64 * (1.0 - p).ln()).exp()
                })
                .sum();
            let got = reg_inc_beta(p, k as f64, (n - k + 1) as f64).unwrap();
            assert_relative_eq!(got, tail, epsilon = 1e-13);
        }
    }

    #[test]
    fn matches_statrs() {
        for &(x, a, b) in &[(0.2, 0.5, 0.5), (0.9, 30.0, 2.0), (0.45, 100.0, 120.0)] {
            let want = statrs::function::beta::beta_reg(a, b, x);
            assert_relative_eq!(reg_inc_beta(x, a, b).unwrap(), want, epsilon = 1e-12);
        }
    }
}
