use super::kernel::GKernel;
use super::{fast_params, OutageEstimate, OutageMethod, SystemConfig};
use crate::correlation::BlockStructure;
use crate::error::{domain, FamaError, Result};
use crate::integrate::{integrate_vec, Tolerance};
use crate::specfun::gamma::{gamma_q, ln_gamma};
use crate::specfun::{gauss_laguerre_rule, reg_inc_beta, QuadratureRule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;

/// Gauss-Laguerre order used on both axes unless told otherwise.
pub const DEFAULT_QUADRATURE_ORDER: usize = 50;
/// Relative tolerance of the adaptive double integral.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

/// Outage of a single port with Nakagami-`m` desired link against an
/// interference of total shape `u_shape` (both unit scale):
/// `Pr[X ≤ γY] = I_{γ/(1+γ)}(m, u_shape)`, equal to
/// `1 - Σ_{i<m} γ^i (Ũ)_i / (i! (γ+1)^{Ũ+i})`.
pub fn single_port_op(gamma: f64, m: u32, u_shape: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return domain(format!("SIR threshold must be positive, got {gamma}"));
    }
    if m == 0 || !(u_shape > 0.0) {
        return domain("shape parameters must be positive");
    }
    if gamma.is_infinite() {
        return Ok(1.0);
    }
    if gamma <= 1.0 {
        reg_inc_beta(gamma / (1.0 + gamma), m as f64, u_shape)
    } else {
        Ok(1.0 - reg_inc_beta(1.0 / (1.0 + gamma), u_shape, m as f64)?)
    }
}

/// Upper bound `P^UB = (single-port OP)^B`, the outage of `B` independent
/// antennas. `u_shape` may be the real `m̃` of the fast-FAMA mapping.
pub fn op_upper_bound(gamma: f64, m: u32, u_shape: f64, num_blocks: usize) -> Result<f64> {
    if num_blocks == 0 {
        return domain("block count must be positive");
    }
    Ok(single_port_op(gamma, m, u_shape)?.powi(num_blocks as i32))
}

/// Slow-FAMA upper bound for a configuration and its block structure.
pub fn op_slow_upper_bound(cfg: &SystemConfig, blocks: &BlockStructure) -> Result<OutageEstimate> {
    cfg.validate()?;
    let v = op_upper_bound(cfg.gamma, cfg.m, cfg.u_tilde() as f64, blocks.num_blocks())?;
    Ok(OutageEstimate::new(v, OutageMethod::UpperBound, 0.0))
}

fn normalizer(rule: &QuadratureRule) -> f64 {
    ln_gamma(rule.alpha() + 1.0).exp()
}

/// `Π_L [Σ_i Σ_j ŵ_i ŵ_j G(2x_i, 2x_j)^L]^{mult(L)}` with normalized weights.
fn quadrature_value(
    kernel: &GKernel,
    blocks: &BlockStructure,
    rule_i: &QuadratureRule,
    rule_j: &QuadratureRule,
) -> f64 {
    let mults = blocks.length_multiplicities();
    let norm = normalizer(rule_i) * normalizer(rule_j);
    let rows: Vec<Vec<f64>> = rule_i
        .nodes()
        .par_iter()
        .zip(rule_i.weights().par_iter())
        .map(|(&xi, &wi)| {
            let mut acc = vec![0.0; mults.len()];
            for (&xj, &wj) in rule_j.nodes().iter().zip(rule_j.weights()) {
                let g = kernel.eval(2.0 * xi, 2.0 * xj);
                for (a, &(len, _)) in acc.iter_mut().zip(&mults) {
                    *a += wi * wj * g.powi(len as i32);
                }
            }
            acc
        })
        .collect();
    let mut per_len = vec![0.0; mults.len()];
    for row in rows {
        for (p, v) in per_len.iter_mut().zip(row) {
            *p += v;
        }
    }
    per_len
        .iter()
        .zip(&mults)
        .map(|(p, &(_, mult))| (p / norm).clamp(0.0, 1.0).powi(mult as i32))
        .product()
}

fn kernel_quadrature(
    kernel: &GKernel,
    blocks: &BlockStructure,
    n_i: usize,
    n_j: usize,
) -> Result<OutageEstimate> {
    if n_i == 0 || n_j == 0 {
        return domain("quadrature orders must be positive");
    }
    let alpha_i = kernel.m() as f64 - 1.0;
    let alpha_j = kernel.u_tilde() as f64 - 1.0;
    let value = quadrature_value(
        kernel,
        blocks,
        &gauss_laguerre_rule(alpha_i, n_i)?,
        &gauss_laguerre_rule(alpha_j, n_j)?,
    );
    // error estimate from a rule of half the order
    let (h_i, h_j) = (n_i.div_ceil(2), n_j.div_ceil(2));
    let coarse = quadrature_value(
        kernel,
        blocks,
        &gauss_laguerre_rule(alpha_i, h_i)?,
        &gauss_laguerre_rule(alpha_j, h_j)?,
    );
    Ok(
        OutageEstimate::new(value, OutageMethod::Quadrature, value - coarse)
            .with_meta("n_i", n_i)
            .with_meta("n_j", n_j),
    )
}

/// `x` beyond which the Gamma(α+1) tail mass drops below `1e-30`.
fn tail_cutoff(alpha: f64) -> f64 {
    let shape = alpha + 1.0;
    let mut x = shape + 8.0 * shape.sqrt() + 30.0;
    while gamma_q(shape, x) > 1e-30 {
        x += shape.sqrt() + 5.0;
    }
    x
}

fn gamma_density(alpha: f64, ln_norm: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return if alpha == 0.0 { 1.0 } else { 0.0 };
    }
    (alpha * x.ln() - x - ln_norm).exp()
}

fn kernel_exact(kernel: &GKernel, blocks: &BlockStructure, rel_tol: f64) -> Result<OutageEstimate> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return domain(format!("rel_tol must lie in (0, 1), got {rel_tol}"));
    }
    let mults = blocks.length_multiplicities();
    let dim = mults.len();
    let alpha_m = kernel.m() as f64 - 1.0;
    let alpha_u = kernel.u_tilde() as f64 - 1.0;
    let (ln_norm_m, ln_norm_u) = (ln_gamma(alpha_m + 1.0), ln_gamma(alpha_u + 1.0));
    let breaks_m = [0.0, alpha_m + 1.0, tail_cutoff(alpha_m)];
    let breaks_u = [0.0, alpha_u + 1.0, tail_cutoff(alpha_u)];
    let inner_tol = Tolerance::relative(0.1 * rel_tol);
    let outer_tol = Tolerance::relative(rel_tol);

    let failure: RefCell<Option<FamaError>> = RefCell::new(None);
    let evaluations = RefCell::new(0usize);
    let outer = integrate_vec(
        |xt, out: &mut [f64]| {
            let w_u = gamma_density(alpha_u, ln_norm_u, xt);
            let inner = integrate_vec(
                |x, o: &mut [f64]| {
                    let g = kernel.eval(2.0 * x, 2.0 * xt);
                    let w = gamma_density(alpha_m, ln_norm_m, x);
                    for (v, &(len, _)) in o.iter_mut().zip(&mults) {
                        *v = w * g.powi(len as i32);
                    }
                },
                &breaks_m,
                dim,
                inner_tol,
            );
            match inner {
                Ok(r) => {
                    *evaluations.borrow_mut() += r.evaluations;
                    for (o, v) in out.iter_mut().zip(r.values) {
                        *o = w_u * v;
                    }
                }
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    out.fill(0.0);
                }
            }
        },
        &breaks_u,
        dim,
        outer_tol,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let mut value = 1.0;
    let mut rel_err = 0.0;
    for ((&v, &e), &(_, mult)) in outer.values.iter().zip(&outer.errors).zip(&mults) {
        let p = v.clamp(0.0, 1.0);
        value *= p.powi(mult as i32);
        if p > 0.0 {
            rel_err += mult as f64 * e / p;
        }
    }
    Ok(
        OutageEstimate::new(value, OutageMethod::ExactIntegral, value * rel_err)
            .with_meta("rel_tol", rel_tol)
            .with_meta("evaluations", evaluations.into_inner()),
    )
}

/// Exact slow-FAMA outage: the product over blocks of the double integral of
/// `G^{L_b}` against the chi-square laws of the block variables, evaluated by
/// nested adaptive Gauss-Kronrod integration to `rel_tol`. Blocks of equal
/// length share one integral.
pub fn op_slow_exact(
    cfg: &SystemConfig,
    blocks: &BlockStructure,
    rel_tol: f64,
) -> Result<OutageEstimate> {
    cfg.validate()?;
    let kernel = GKernel::new(cfg.gamma, blocks.delta(), cfg.m, cfg.u_tilde())?;
    kernel_exact(&kernel, blocks, rel_tol)
}

/// Slow-FAMA outage by generalized Gauss-Laguerre quadrature of orders
/// `(n_i, n_j)` on the desired and interference axes.
pub fn op_slow_quadrature(
    cfg: &SystemConfig,
    blocks: &BlockStructure,
    n_i: usize,
    n_j: usize,
) -> Result<OutageEstimate> {
    cfg.validate()?;
    let kernel = GKernel::new(cfg.gamma, blocks.delta(), cfg.m, cfg.u_tilde())?;
    kernel_quadrature(&kernel, blocks, n_i, n_j)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FastMethod {
    Quadrature { n_i: usize, n_j: usize },
    ExactIntegral { rel_tol: f64 },
    UpperBound,
}

/// Fast-FAMA outage through the slow-FAMA evaluators with `γ → Ûγ` and
/// `Ũ → m̃`. The kernel needs an integer shape, so kernel-based methods use
/// `round(m̃)` (recorded in `meta`); the upper bound uses the real `m̃`.
pub fn op_fast(
    cfg: &SystemConfig,
    blocks: &BlockStructure,
    method: FastMethod,
) -> Result<OutageEstimate> {
    cfg.validate()?;
    let fp = fast_params(&cfg.m_interferers)?;
    let gamma = fp.u_hat * cfg.gamma;
    let estimate = match method {
        FastMethod::UpperBound => {
            let v = op_upper_bound(gamma, cfg.m, fp.m_tilde, blocks.num_blocks())?;
            OutageEstimate::new(v, OutageMethod::UpperBound, 0.0)
        }
        FastMethod::Quadrature { n_i, n_j } => {
            let kernel = GKernel::new(gamma, blocks.delta(), cfg.m, fp.m_tilde_int())?;
            kernel_quadrature(&kernel, blocks, n_i, n_j)?
        }
        FastMethod::ExactIntegral { rel_tol } => {
            let kernel = GKernel::new(gamma, blocks.delta(), cfg.m, fp.m_tilde_int())?;
            kernel_exact(&kernel, blocks, rel_tol)?
        }
    };
    Ok(estimate
        .with_meta("m_tilde", fp.m_tilde)
        .with_meta("m_tilde_int", fp.m_tilde_int())
        .with_meta("u_hat", fp.u_hat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::constant_structure;
    use approx::assert_relative_eq;

    fn pochhammer_sum_op(gamma: f64, m: u32, ut: f64) -> f64 {
        1.0 - (0..m)
            .map(|i| {
                let i = i as f64;
                (i * gamma.ln() + ln_gamma(ut + i)
                    - ln_gamma(ut)
                    - ln_gamma(i + 1.0)
                    - (ut + i) * (gamma + 1.0).ln())
                .exp()
            })
            .sum::<f64>()
    }

    #[test]
    fn upper_bound_trivial_values() {
        assert_relative_eq!(
            op_upper_bound(1.0, 1, 1.0, 1).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            op_upper_bound(1.0, 1, 1.0, 2).unwrap(),
            0.25,
            epsilon = 1e-15
        );
        assert!(op_upper_bound(1e-12, 2, 8.0, 3).unwrap() < 1e-20);
        assert_relative_eq!(
            op_upper_bound(1e12, 2, 8.0, 3).unwrap(),
            1.0,
            epsilon = 1e-10
        );
        let v = op_upper_bound(7.0 * 0.5012, 2, 8.0 / 7.0, 3).unwrap();
        assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn single_port_matches_pochhammer_form() {
        for &(g, m, ut) in &[
            (0.1, 1, 1.0),
            (0.5012, 2, 8.0),
            (3.0, 3, 27.0),
            (8.0, 2, 8.0 / 7.0),
        ] {
            assert_relative_eq!(
                single_port_op(g, m, ut).unwrap(),
                pochhammer_sum_op(g, m, ut),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn single_port_block_reduces_to_closed_form() {
        let blocks = constant_structure(1, 0.97).unwrap();
        for &(u, m, g) in &[(2usize, 1u32, 1.0), (5, 2, 0.5012), (3, 3, 2.0)] {
            let cfg = SystemConfig::homogeneous(u, m, g, 1, 1.0).unwrap();
            let want = pochhammer_sum_op(g, m, cfg.u_tilde() as f64);
            let exact = op_slow_exact(&cfg, &blocks, 1e-9).unwrap();
            assert_relative_eq!(exact.value, want, max_relative = 1e-8);
            let quad = op_slow_quadrature(&cfg, &blocks, 50, 50).unwrap();
            assert!((quad.value - want).abs() < 1e-6);
        }
    }

    #[test]
    fn huge_threshold_means_certain_outage() {
        let blocks = BlockStructure::new(vec![40, 40, 20], 0.97, Some(1.0)).unwrap();
        let cfg = SystemConfig::homogeneous(5, 2, 1e6, 100, 1.0).unwrap();
        assert!((op_slow_exact(&cfg, &blocks, 1e-8).unwrap().value - 1.0).abs() < 1e-6);
        assert!((op_slow_quadrature(&cfg, &blocks, 50, 50).unwrap().value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn product_over_blocks() {
        let cfg = SystemConfig::homogeneous(3, 2, 0.7, 60, 1.0).unwrap();
        let joint = BlockStructure::new(vec![30, 20, 10], 0.95, None).unwrap();
        let p = op_slow_quadrature(&cfg, &joint, 30, 30).unwrap().value;
        let parts: f64 = [30usize, 20, 10]
            .iter()
            .map(|&l| {
                let b = BlockStructure::new(vec![l], 0.95, None).unwrap();
                op_slow_quadrature(&cfg, &b, 30, 30).unwrap().value
            })
            .product();
        assert_relative_eq!(p, parts, max_relative = 1e-12);
    }

    #[test]
    fn fast_equals_slow_for_two_users() {
        let blocks = BlockStructure::new(vec![35, 40, 25], 0.97, Some(1.0)).unwrap();
        for m in 1..=3 {
            let cfg = SystemConfig::homogeneous(2, m, 0.5012, 100, 1.0).unwrap();
            let slow = op_slow_quadrature(&cfg, &blocks, 30, 30).unwrap().value;
            let fast = op_fast(&cfg, &blocks, FastMethod::Quadrature { n_i: 30, n_j: 30 })
                .unwrap()
                .value;
            assert!((slow - fast).abs() <= 1e-12);
        }
    }

    #[test]
    fn fast_records_rounding() {
        let blocks = BlockStructure::new(vec![50, 50], 0.97, Some(1.0)).unwrap();
        let cfg = SystemConfig::homogeneous(5, 2, 0.5012, 100, 1.0).unwrap();
        let est = op_fast(&cfg, &blocks, FastMethod::Quadrature { n_i: 20, n_j: 20 }).unwrap();
        assert_eq!(est.meta["m_tilde_int"], "1");
        let ub = op_fast(&cfg, &blocks, FastMethod::UpperBound).unwrap();
        assert!(ub.value >= est.value);
    }

    #[test]
    fn rejects_bad_orders() {
        let blocks = constant_structure(4, 0.5).unwrap();
        let cfg = SystemConfig::homogeneous(2, 1, 1.0, 4, 1.0).unwrap();
        assert!(op_slow_quadrature(&cfg, &blocks, 0, 10).is_err());
        assert!(op_slow_exact(&cfg, &blocks, 0.0).is_err());
    }
}
