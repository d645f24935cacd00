//! Spatial correlation between fluid-antenna ports.
//!
//! The reference model is Jakes' correlation `J0(2π(n-k)W/(N-1))` for a linear
//! aperture of `W` wavelengths carrying `N` ports. For analysis it is replaced
//! by a block-diagonal matrix of `B` equicorrelated blocks with common
//! coefficient `δ`, whose sizes are read off the dominant eigenvalues of the
//! reference matrix: an `L×L` block with off-diagonal `δ` has dominant
//! eigenvalue `1 + (L-1)δ`, so each eigenvalue above the threshold is turned
//! back into a block length.

use crate::error::{domain, FamaError, Result};
use crate::specfun::bessel_j0;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default intra-block correlation.
pub const DEFAULT_DELTA: f64 = 0.97;
/// Default eigenvalue threshold for a block to be kept.
pub const DEFAULT_RHO_TH: f64 = 1.0;

/// Dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from rows; the caller is responsible for symmetry,
    /// which [`symmetric_eigenvalues`] checks.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return domain("matrix rows must all have the same length as the row count");
        }
        Ok(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self.get(i, j).powi(2);
                }
            }
        }
        s.sqrt()
    }

    fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationModel {
    Jakes,
    Constant,
}

/// Port correlation description: model, port count `N`, aperture `W`
/// (wavelengths) and, for the constant model, an optional coefficient `μ`
/// (port-to-port power correlation `μ²`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    pub model: CorrelationModel,
    pub n_ports: usize,
    pub antenna_size: f64,
    pub mu: Option<f64>,
}

impl CorrelationSpec {
    pub fn jakes(n_ports: usize, antenna_size: f64) -> Self {
        Self {
            model: CorrelationModel::Jakes,
            n_ports,
            antenna_size,
            mu: None,
        }
    }

    pub fn constant(n_ports: usize, antenna_size: f64) -> Self {
        Self {
            model: CorrelationModel::Constant,
            n_ports,
            antenna_size,
            mu: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.antenna_size >= 0.0) || !self.antenna_size.is_finite() {
            return domain(format!(
                "antenna size W must be >= 0, got {}",
                self.antenna_size
            ));
        }
        if self.n_ports == 0 {
            return domain("port count N must be positive");
        }
        if self.model == CorrelationModel::Jakes && self.n_ports < 2 {
            return domain("the Jakes model needs N >= 2 ports");
        }
        if let Some(mu) = self.mu {
            if !(0.0..1.0).contains(&mu) {
                return domain(format!(
                    "constant-model coefficient mu must be in [0, 1), got {mu}"
                ));
            }
        }
        Ok(())
    }

    /// Block structure for this correlation model: eigen-matched blocks for
    /// Jakes, a single block of `N` ports for the constant model.
    pub fn block_structure(&self, delta: f64, rho_th: f64) -> Result<BlockStructure> {
        self.validate()?;
        match self.model {
            CorrelationModel::Jakes => {
                let eig = symmetric_eigenvalues(&jakes_matrix(self)?)?;
                block_partition(&eig, self.n_ports, delta, rho_th)
            }
            CorrelationModel::Constant => {
                let coeff = match self.mu {
                    Some(mu) => mu * mu,
                    None => constant_model_delta(self.n_ports, self.antenna_size)?,
                };
                constant_structure(self.n_ports, coeff.clamp(1e-12, 1.0 - 1e-12))
            }
        }
    }
}

/// Jakes correlation matrix `[Σ]_{nk} = J0(2π(n-k)W/(N-1))`.
pub fn jakes_matrix(spec: &CorrelationSpec) -> Result<SymMatrix> {
    if spec.model != CorrelationModel::Jakes {
        return domain("jakes_matrix requires the Jakes correlation model");
    }
    spec.validate()?;
    let n = spec.n_ports;
    let scale = 2.0 * PI * spec.antenna_size / (n - 1) as f64;
    // Toeplitz: one Bessel evaluation per lag
    let lags = (0..n)
        .map(|d| bessel_j0(scale * d as f64))
        .collect::<Result<Vec<_>>>()?;
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, lags[i.abs_diff(j)]);
        }
    }
    Ok(m)
}

/// Equivalent constant correlation of a Jakes aperture: the magnitude of the
/// Jakes coefficient averaged over all distinct port pairs.
pub fn constant_model_delta(n_ports: usize, antenna_size: f64) -> Result<f64> {
    if n_ports < 2 {
        return domain("the equivalent constant correlation needs N >= 2 ports");
    }
    let n = n_ports;
    let scale = 2.0 * PI * antenna_size / (n - 1) as f64;
    let mut total = 0.0;
    for d in 1..n {
        total += (n - d) as f64 * bessel_j0(scale * d as f64)?;
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok((total / pairs).abs())
}

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix, sorted descending, by cyclic Jacobi
/// rotations.
pub fn symmetric_eigenvalues(matrix: &SymMatrix) -> Result<Vec<f64>> {
    let n = matrix.dim();
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (matrix.get(i, j), matrix.get(j, i));
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return domain(format!("matrix is not symmetric at ({i}, {j})"));
            }
        }
    }
    let mut a = matrix.clone();
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if a.off_diagonal_norm() <= JACOBI_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, p, q);
            }
        }
    }
    if !converged && a.off_diagonal_norm() > JACOBI_TOL * scale {
        return Err(FamaError::Convergence(
            "Jacobi eigenvalue sweeps did not converge".into(),
        ));
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(eig)
}

fn rotate(a: &mut SymMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    if apq == 0.0 {
        return;
    }
    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = a.dim();
    for k in 0..n {
        let (akp, akq) = (a.get(k, p), a.get(k, q));
        a.set(k, p, c * akp - s * akq);
        a.set(k, q, s * akp + c * akq);
    }
    for k in 0..n {
        let (apk, aqk) = (a.get(p, k), a.get(q, k));
        a.set(p, k, c * apk - s * aqk);
        a.set(q, k, s * apk + c * aqk);
    }
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);
}

/// Partition of `N` ports into `B` consecutive equicorrelated blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStructure {
    #[serde(rename = "B")]
    num_blocks: usize,
    lengths: Vec<usize>,
    delta: f64,
    rho_th: Option<f64>,
    #[serde(rename = "eigenvalues_used")]
    dominant_eigenvalues: Vec<f64>,
}

impl BlockStructure {
    /// Validated block structure from explicit lengths.
    pub fn new(lengths: Vec<usize>, delta: f64, rho_th: Option<f64>) -> Result<Self> {
        if lengths.is_empty() || lengths.contains(&0) {
            return domain("block lengths must be non-empty and each at least 1");
        }
        if !(delta > 0.0 && delta < 1.0) {
            return domain(format!(
                "intra-block correlation delta must lie in (0, 1), got {delta}"
            ));
        }
        if let Some(rho) = rho_th {
            if !(rho > 0.0) || !rho.is_finite() {
                return domain(format!("eigenvalue threshold must be positive, got {rho}"));
            }
        }
        Ok(Self {
            num_blocks: lengths.len(),
            lengths,
            delta,
            rho_th,
            dominant_eigenvalues: Vec::new(),
        })
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn rho_th(&self) -> Option<f64> {
        self.rho_th
    }

    pub fn dominant_eigenvalues(&self) -> &[f64] {
        &self.dominant_eigenvalues
    }

    pub fn n_ports(&self) -> usize {
        self.lengths.iter().sum()
    }

    /// Block index of every port, in port order.
    pub fn port_block_map(&self) -> Vec<usize> {
        self.lengths
            .iter()
            .enumerate()
            .flat_map(|(b, &len)| std::iter::repeat_n(b, len))
            .collect()
    }

    /// Distinct block lengths with their multiplicities, in increasing length.
    pub fn length_multiplicities(&self) -> Vec<(usize, usize)> {
        let mut sorted = self.lengths.clone();
        sorted.sort_unstable();
        let mut out: Vec<(usize, usize)> = Vec::new();
        for len in sorted {
            match out.last_mut() {
                Some((l, c)) if *l == len => *c += 1,
                _ => out.push((len, 1)),
            }
        }
        out
    }

    /// Same partition with another intra-block coefficient.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        let mut out = Self::new(self.lengths.clone(), delta, self.rho_th)?;
        out.dominant_eigenvalues = self.dominant_eigenvalues.clone();
        Ok(out)
    }
}

/// Eigenvalue-matched block partition.
///
/// `B` is the number of eigenvalues at or above `rho_th`. Block `b` receives
/// `max(1, round((λ_b - 1)/δ + 1))` ports; the total is then repaired to `N`
/// by adding or removing one port at a time, cycling over the blocks in
/// descending-eigenvalue order and never emptying a block.
pub fn block_partition(
    eigenvalues: &[f64],
    n_ports: usize,
    delta: f64,
    rho_th: f64,
) -> Result<BlockStructure> {
    if eigenvalues.len() != n_ports {
        return domain(format!(
            "expected {n_ports} eigenvalues, got {}",
            eigenvalues.len()
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return domain(format!(
            "intra-block correlation delta must lie in (0, 1), got {delta}"
        ));
    }
    if !(rho_th > 0.0) || !rho_th.is_finite() {
        return domain(format!(
            "eigenvalue threshold must be positive, got {rho_th}"
        ));
    }
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(|x, y| y.total_cmp(x));
    // tolerate round-off in eigenvalues that equal the threshold exactly
    let cut = rho_th * (1.0 - 1e-9);
    let dominant: Vec<f64> = sorted.into_iter().take_while(|&l| l >= cut).collect();
    if dominant.is_empty() {
        return domain(format!(
            "no eigenvalue reaches the threshold {rho_th}; the configuration is degenerate"
        ));
    }
    let mut lengths: Vec<usize> = dominant
        .iter()
        .map(|&l| (((l - 1.0) / delta + 1.0).round().max(1.0)) as usize)
        .collect();
    let b = lengths.len();
    let mut total: usize = lengths.iter().sum();
    let mut i = 0;
    while total < n_ports {
        lengths[i % b] += 1;
        total += 1;
        i += 1;
    }
    i = 0;
    while total > n_ports {
        let idx = i % b;
        if lengths[idx] > 1 {
            lengths[idx] -= 1;
            total -= 1;
        }
        i += 1;
    }
    let mut out = BlockStructure::new(lengths, delta, Some(rho_th))?;
    out.dominant_eigenvalues = dominant;
    Ok(out)
}

/// Single block holding every port with common correlation `delta`.
pub fn constant_structure(n_ports: usize, delta: f64) -> Result<BlockStructure> {
    if n_ports == 0 {
        return domain("port count N must be positive");
    }
    BlockStructure::new(vec![n_ports], delta, None)
}
