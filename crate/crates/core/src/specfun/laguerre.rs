use super::gamma::ln_gamma;
use crate::correlation::{symmetric_eigenvalues, SymMatrix};
use crate::error::{domain, FamaError, Result};
use serde::Serialize;

/// Generalized Laguerre polynomial `L^α_n(x)` by the three-term recurrence.
pub fn laguerre_poly(alpha: f64, n: usize, x: f64) -> f64 {
    laguerre_pair(alpha, n, x).0
}

/// `(L^α_n(x), L^α_{n-1}(x))`, with `L^α_{-1} = 0`.
fn laguerre_pair(alpha: f64, n: usize, x: f64) -> (f64, f64) {
    let mut cur = 1.0;
    let mut prev = 0.0;
    for j in 1..=n {
        let j = j as f64;
        let next = ((2.0 * j - 1.0 + alpha - x) * cur - (j - 1.0 + alpha) * prev) / j;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Nodes and weights of an `order`-point generalized Gauss-Laguerre rule for
/// the weight `x^α e^{-x}` on `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureRule {
    alpha: f64,
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w_i f(x_i)`, approximating `∫_0^∞ x^α e^{-x} f(x) dx`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITER: usize = 100;

/// Builds the generalized Gauss-Laguerre rule.
///
/// Nodes are the roots of `L^α_n`, found by Newton's method from the usual
/// interlacing initial guesses. Should those guesses collapse onto a repeated
/// root (large `α` relative to `n`), the eigenvalues of the Jacobi matrix are
/// used as starting points instead. Weights follow
/// `w_i = Γ(n+α+1) x_i / (n! (n+1)² [L^α_{n+1}(x_i)]²)`.
pub fn gauss_laguerre_rule(alpha: f64, order: usize) -> Result<QuadratureRule> {
    if !(alpha > -1.0) || !alpha.is_finite() {
        return domain(format!("Gauss-Laguerre alpha must exceed -1, got {alpha}"));
    }
    if order == 0 {
        return domain("Gauss-Laguerre order must be at least 1");
    }
    let nodes = match newton_from_guesses(alpha, order) {
        Some(nodes) => nodes,
        None => newton_from_jacobi_matrix(alpha, order)?,
    };
    let n = order as f64;
    let ln_front = ln_gamma(n + alpha + 1.0) - ln_gamma(n + 1.0) - 2.0 * (n + 1.0).ln();
    let weights = nodes
        .iter()
        .map(|&x| {
            let next = laguerre_poly(alpha, order + 1, x);
            (ln_front + x.ln() - 2.0 * next.abs().ln()).exp()
        })
        .collect();
    Ok(QuadratureRule {
        alpha,
        order,
        nodes,
        weights,
    })
}

fn newton_polish(alpha: f64, n: usize, mut z: f64) -> Option<f64> {
    let nf = n as f64;
    for _ in 0..NEWTON_MAX_ITER {
        let (p, prev) = laguerre_pair(alpha, n, z);
        let dp = (nf * p - (nf + alpha) * prev) / z;
        let step = p / dp;
        z -= step;
        if !z.is_finite() || z <= 0.0 {
            return None;
        }
        if step.abs() <= NEWTON_TOL * z {
            return Some(z);
        }
    }
    None
}

fn valid_nodes(nodes: &[f64]) -> bool {
    nodes.first().is_some_and(|&x| x > 0.0) && nodes.windows(2).all(|w| w[1] > w[0] * (1.0 + 1e-10))
}

fn newton_from_guesses(alpha: f64, n: usize) -> Option<Vec<f64>> {
    let nf = n as f64;
    let mut nodes: Vec<f64> = Vec::with_capacity(n);
    let mut z = 0.0;
    for i in 0..n {
        z = match i {
            0 => (1.0 + alpha) * (3.0 + 0.92 * alpha) / (1.0 + 2.4 * nf + 1.8 * alpha),
            1 => z + (15.0 + 6.25 * alpha) / (1.0 + 0.9 * alpha + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + ((1.0 + 2.55 * ai) / (1.9 * ai) + 1.26 * ai * alpha / (1.0 + 3.5 * ai))
                    * (z - nodes[i - 2])
                    / (1.0 + 0.3 * alpha)
            }
        };
        z = newton_polish(alpha, n, z)?;
        nodes.push(z);
    }
    valid_nodes(&nodes).then_some(nodes)
}

fn newton_from_jacobi_matrix(alpha: f64, n: usize) -> Result<Vec<f64>> {
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        m.set(i, i, 2.0 * i as f64 + alpha + 1.0);
        if i > 0 {
            let off = (i as f64 * (i as f64 + alpha)).sqrt();
            m.set(i, i - 1, off);
            m.set(i - 1, i, off);
        }
    }
    let mut guesses = symmetric_eigenvalues(&m)?;
    guesses.reverse();
    let nodes = guesses
        .into_iter()
        .map(|g| newton_polish(alpha, n, g.max(f64::MIN_POSITIVE)).unwrap_or(g))
        .collect::<Vec<_>>();
    if valid_nodes(&nodes) {
        Ok(nodes)
    } else {
        Err(FamaError::Convergence(format!(
            "Gauss-Laguerre node search failed for alpha={alpha}, order={n}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_values() {
        assert_eq!(laguerre_poly(3.3, 0, 7.0), 1.0);
        assert_eq!(laguerre_poly(0.0, 2, 0.0), 1.0);
        assert_relative_eq!(laguerre_poly(1.0, 2, 1.0), 0.5, epsilon = 1e-15);
        // L^α_1 = α + 1 - x; L_2 = (x² - 4x + 2)/2
        assert_relative_eq!(laguerre_poly(2.5, 1, 0.75), 2.75, epsilon = 1e-15);
        for &x in &[0.3, 1.7, 6.0] {
            assert_relative_eq!(
                laguerre_poly(0.0, 2, x),
                (x * x - 4.0 * x + 2.0) / 2.0,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn one_point_rule() {
        for &alpha in &[-0.5, 0.0, 1.0, 4.5] {
            let rule = gauss_laguerre_rule(alpha, 1).unwrap();
            assert_relative_eq!(rule.nodes()[0], alpha + 1.0, epsilon = 1e-14);
            assert_relative_eq!(
                rule.weights()[0],
                ln_gamma(alpha + 1.0).exp(),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn two_point_rule() {
        let rule = gauss_laguerre_rule(0.0, 2).unwrap();
        let s2 = 2f64.sqrt();
        assert_relative_eq!(rule.nodes()[0], 2.0 - s2, epsilon = 1e-14);
        assert_relative_eq!(rule.nodes()[1], 2.0 + s2, epsilon = 1e-14);
        assert_relative_eq!(rule.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(rule.weights()[0], (2.0 + s2) / 4.0, epsilon = 1e-14);
    }

    #[test]
    fn fifty_point_rule_moment() {
        let rule = gauss_laguerre_rule(1.0, 50).unwrap();
        assert_eq!(rule.nodes().len(), 50);
        let got = rule.integrate(|x| x.powi(3));
        assert!((got - 24.0).abs() < 1e-9);
    }

    #[test]
    fn moments_are_exact() {
        for &alpha in &[0.0, 1.0, 2.0, 7.0] {
            for &n in &[5usize, 20, 50] {
                let rule = gauss_laguerre_rule(alpha, n).unwrap();
                for k in 0..2 * n {
                    let got = rule.integrate(|x| x.powi(k as i32));
                    let want = ln_gamma(alpha + k as f64 + 1.0).exp();
                    assert_relative_eq!(got, want, max_relative = 1e-8);
                }
            }
        }
    }

    #[test]
    fn invariants_hold_over_wide_range() {
        for alpha in [-0.9, -0.5, 0.0, 0.5, 3.0, 7.0, 15.0, 26.0, 57.0] {
            for n in [1usize, 2, 3, 10, 30, 50, 80] {
                let rule = gauss_laguerre_rule(alpha, n).unwrap();
                assert!(valid_nodes(rule.nodes()), "alpha={alpha} n={n}");
                assert!(rule.weights().iter().all(|&w| w > 0.0));
                let total: f64 = rule.weights().iter().sum();
                assert_relative_eq!(total, ln_gamma(alpha + 1.0).exp(), max_relative = 1e-10);
                // every node brackets a sign change of L_n^α
                for &x in rule.nodes() {
                    let lo = laguerre_poly(alpha, n, x * (1.0 - 1e-9));
                    let hi = laguerre_poly(alpha, n, x * (1.0 + 1e-9));
                    assert!(lo * hi < 0.0, "alpha={alpha} n={n} x={x}");
                }
            }
        }
    }

    #[test]
    fn weights_match_derivative_form() {
        // w_i = Γ(n+α+1) / (n! x_i [L^α_n'(x_i)]²)
        let (alpha, n) = (1.0, 12usize);
        let rule = gauss_laguerre_rule(alpha, n).unwrap();
        for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
            let (p, prev) = laguerre_pair(alpha, n, x);
            let dp = (n as f64 * p - (n as f64 + alpha) * prev) / x;
            let alt =
                (ln_gamma(n as f64 + alpha + 1.0) - ln_gamma(n as f64 + 1.0)).exp() / (x * dp * dp);
            assert_relative_eq!(w, alt, max_relative = 1e-10);
        }
    }

    #[test]
    fn jacobi_fallback_agrees() {
        let a = newton_from_guesses(2.0, 20).unwrap();
        let b = newton_from_jacobi_matrix(2.0, 20).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, max_relative = 1e-13);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(gauss_laguerre_rule(-1.0, 5).is_err());
        assert!(gauss_laguerre_rule(0.0, 0).is_err());
    }
}
