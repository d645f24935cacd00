//! Direct simulation of block-correlated Nakagami channels with best-port
//! selection.
//!
//! Each trial owns an independent ChaCha8 stream selected by its index, so a
//! run is a pure function of `(seed, trials)` and the worker count cannot
//! change a single sample. Outage counts are exact integers.

use crate::analytic::{
    fast_params, mux_gain, ofama_gain, OutageEstimate, OutageMethod, SystemConfig,
};
use crate::correlation::BlockStructure;
use crate::error::{domain, Result};
use crate::specfun::gamma::ln_gamma;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McMode {
    /// Interference is the sum of the interferers' channel powers.
    Slow,
    /// Interference is `|Σ s_ũ h_ũ,n|²` with unit-power Gaussian symbols.
    FastComposite,
    /// Interference is `Û Z_n`, `Z_n` built from `round(m̃)` components.
    FastNakagamiApprox,
}

impl McMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Slow => "slow",
            Self::FastComposite => "fast_composite",
            Self::FastNakagamiApprox => "fast_nakagami_approx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub trials: u64,
    pub seed: u64,
    pub mode: McMode,
}

impl McSettings {
    pub fn new(trials: u64, seed: u64, mode: McMode) -> Self {
        Self { trials, seed, mode }
    }
}

/// Per-port powers of one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialBatch {
    pub desired_power: Vec<f64>,
    pub interference_power: Vec<f64>,
    pub block_map: Vec<usize>,
}

impl TrialBatch {
    pub fn sir(&self, port: usize) -> f64 {
        self.desired_power[port] / self.interference_power[port]
    }

    pub fn max_sir(&self) -> f64 {
        max_ratio(&self.desired_power, &self.interference_power)
    }
}

fn max_ratio(num: &[f64], den: &[f64]) -> f64 {
    num.iter()
        .zip(den)
        .map(|(x, y)| x / y)
        .fold(f64::NEG_INFINITY, f64::max)
}

struct Sampler {
    phi: f64,
    lengths: Vec<usize>,
    m: usize,
    mode: McMode,
    interferers: Vec<usize>,
    approx_order: usize,
    u_hat: f64,
}

impl Sampler {
    fn new(cfg: &SystemConfig, blocks: &BlockStructure, mode: McMode) -> Result<Self> {
        cfg.validate()?;
        if blocks.n_ports() != cfg.n_ports {
            return domain(format!(
                "block structure covers {} ports but N = {}",
                blocks.n_ports(),
                cfg.n_ports
            ));
        }
        let fp = fast_params(&cfg.m_interferers)?;
        let delta = blocks.delta();
        Ok(Self {
            phi: (delta / (1.0 - delta)).sqrt(),
            lengths: blocks.lengths().to_vec(),
            m: cfg.m as usize,
            mode,
            interferers: cfg.m_interferers.iter().map(|&m| m as usize).collect(),
            approx_order: fp.m_tilde_int() as usize,
            u_hat: fp.u_hat,
        })
    }

    /// Adds `Σ_l (x + φ x_b)² + (y + φ y_b)²` over `order` components to each
    /// port's power; `common` is scratch of length `2 order`.
    fn add_power<R: Rng>(&self, rng: &mut R, order: usize, common: &mut Vec<f64>, out: &mut [f64]) {
        let mut port = 0;
        for &len in &self.lengths {
            common.clear();
            common.extend((0..2 * order).map(|_| self.phi * rng.sample::<f64, _>(StandardNormal)));
            for _ in 0..len {
                let mut p = 0.0;
                for c in common.iter() {
                    let v = rng.sample::<f64, _>(StandardNormal) + c;
                    p += v * v;
                }
                out[port] += p;
                port += 1;
            }
        }
    }

    /// Adds `s · h_n` of one interferer to the complex accumulators. The
    /// envelope of `h_n` is the Nakagami power of its `order` components and
    /// its phase is that of the first component.
    fn add_composite<R: Rng>(
        &self,
        rng: &mut R,
        order: usize,
        common: &mut Vec<f64>,
        acc: &mut [(f64, f64)],
    ) {
        let sr: f64 = rng.sample::<f64, _>(StandardNormal) * std::f64::consts::FRAC_1_SQRT_2;
        let si: f64 = rng.sample::<f64, _>(StandardNormal) * std::f64::consts::FRAC_1_SQRT_2;
        let mut port = 0;
        for &len in &self.lengths {
            common.clear();
            common.extend((0..2 * order).map(|_| self.phi * rng.sample::<f64, _>(StandardNormal)));
            for _ in 0..len {
                let mut p = 0.0;
                let (mut re, mut im) = (0.0, 0.0);
                for (k, c) in common.iter().enumerate() {
                    let v = rng.sample::<f64, _>(StandardNormal) + c;
                    p += v * v;
                    match k {
                        0 => re = v,
                        1 => im = v,
                        _ => {}
                    }
                }
                let scale = (p / (re * re + im * im)).sqrt();
                let (hr, hi) = (re * scale, im * scale);
                acc[port].0 += sr * hr - si * hi;
                acc[port].1 += sr * hi + si * hr;
                port += 1;
            }
        }
    }

    fn fill<R: Rng>(&self, rng: &mut R, s: &mut Scratch) {
        s.desired.fill(0.0);
        s.interference.fill(0.0);
        self.add_power(rng, self.m, &mut s.common, &mut s.desired);
        match self.mode {
            McMode::Slow => {
                for &order in &self.interferers {
                    self.add_power(rng, order, &mut s.common, &mut s.interference);
                }
            }
            McMode::FastComposite => {
                s.acc.fill((0.0, 0.0));
                for &order in &self.interferers {
                    self.add_composite(rng, order, &mut s.common, &mut s.acc);
                }
                for (y, (re, im)) in s.interference.iter_mut().zip(&s.acc) {
                    *y = re * re + im * im;
                }
            }
            McMode::FastNakagamiApprox => {
                self.add_power(rng, self.approx_order, &mut s.common, &mut s.interference);
                for y in s.interference.iter_mut() {
                    *y *= self.u_hat;
                }
            }
        }
    }

    fn scratch(&self) -> Scratch {
        let n = self.lengths.iter().sum();
        Scratch {
            desired: vec![0.0; n],
            interference: vec![0.0; n],
            acc: vec![(0.0, 0.0); n],
            common: Vec::new(),
        }
    }
}

struct Scratch {
    desired: Vec<f64>,
    interference: Vec<f64>,
    acc: Vec<(f64, f64)>,
    common: Vec<f64>,
}

/// The generator for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws one realization of every port's desired and interference power.
pub fn sample_trial<R: Rng>(
    cfg: &SystemConfig,
    blocks: &BlockStructure,
    mode: McMode,
    rng: &mut R,
) -> Result<TrialBatch> {
    let sampler = Sampler::new(cfg, blocks, mode)?;
    let mut s = sampler.scratch();
    sampler.fill(rng, &mut s);
    Ok(TrialBatch {
        desired_power: s.desired,
        interference_power: s.interference,
        block_map: blocks.port_block_map(),
    })
}

/// Best-port SIR of every trial, in trial order.
pub fn max_sir_samples(
    cfg: &SystemConfig,
    blocks: &BlockStructure,
    settings: &McSettings,
) -> Result<Vec<f64>> {
    if settings.trials == 0 {
        return domain("trial count must be at least 1");
    }
    let sampler = Sampler::new(cfg, blocks, settings.mode)?;
    Ok((0..settings.trials)
        .into_par_iter()
        .map_init(
            || sampler.scratch(),
            |s, i| {
                let mut rng = trial_rng(settings.seed, i);
                sampler.fill(&mut rng, s);
                max_ratio(&s.desired, &s.interference)
            },
        )
        .collect())
}

fn estimate_from(count: u64, trials: u64, settings: &McSettings, gamma: f64) -> OutageEstimate {
    let p = count as f64 / trials as f64;
    OutageEstimate::new(
        p,
        OutageMethod::MonteCarlo,
        (p * (1.0 - p) / trials as f64).sqrt(),
    )
    .with_meta("trials", trials)
    .with_meta("seed", settings.seed)
    .with_meta("mc_mode", settings.mode.as_str())
    .with_meta("outages", count)
    .with_meta("gamma", gamma)
}

/// Fraction of trials whose best-port SIR does not exceed `cfg.gamma`.
pub fn estimate_op(
    cfg: &SystemConfig,
    blocks: &BlockStructure,
    settings: &McSettings,
) -> Result<OutageEstimate> {
    Ok(estimate_op_sweep(cfg, blocks, settings, &[cfg.gamma])?.remove(0))
}

/// Outage at several thresholds from one shared set of trials; `cfg.gamma` is
/// ignored.
pub fn estimate_op_sweep(
    cfg: &SystemConfig,
    blocks: &BlockStructure,
    settings: &McSettings,
    gammas: &[f64],
) -> Result<Vec<OutageEstimate>> {
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0)) {
        return domain(format!("SIR threshold must be positive, got {g}"));
    }
    let mut sirs = max_sir_samples(cfg, blocks, settings)?;
    sirs.sort_unstable_by(f64::total_cmp);
    Ok(gammas
        .iter()
        .map(|&g| {
            let count = sirs.partition_point(|&s| s <= g) as u64;
            estimate_from(count, settings.trials, settings, g)
        })
        .collect())
}

/// Multiplexing gains evaluated at a Monte Carlo outage estimate, with
/// standard errors from the first-order delta method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainEstimate {
    pub p_out: f64,
    pub p_out_se: f64,
    pub mux_gain: f64,
    pub mux_gain_se: f64,
    pub ofama_gain: f64,
    pub ofama_gain_se: f64,
}

/// `d/dp Σ_u I_{1-p}(M-u+1, u)`.
fn ofama_gain_slope(users: usize, candidates: usize, p: f64) -> f64 {
    let x = 1.0 - p;
    let mut slope = 0.0;
    for u in (candidates - users + 1)..=candidates {
        let (a, b) = ((candidates - u + 1) as f64, u as f64);
        let ln_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
        let density = x.powi(a as i32 - 1) * (1.0 - x).powi(b as i32 - 1) * (-ln_beta).exp();
        slope -= density;
    }
    slope
}

pub fn gains_from_estimate(
    users: usize,
    candidates: usize,
    p_out: f64,
    p_out_se: f64,
) -> Result<GainEstimate> {
    let ofama = ofama_gain(users, candidates, p_out)?;
    Ok(GainEstimate {
        p_out,
        p_out_se,
        mux_gain: mux_gain(users, p_out),
        mux_gain_se: users as f64 * p_out_se,
        ofama_gain: ofama,
        ofama_gain_se: ofama_gain_slope(users, candidates, p_out).abs() * p_out_se,
    })
}

/// Monte Carlo outage plugged into the FAMA and O-FAMA gain formulas.
pub fn estimate_gains(
    cfg: &SystemConfig,
    blocks: &BlockStructure,
    settings: &McSettings,
    candidates: usize,
) -> Result<GainEstimate> {
    if candidates < cfg.users {
        return domain(format!(
            "M must be at least U, got M={candidates} < U={}",
            cfg.users
        ));
    }
    let op = estimate_op(cfg, blocks, settings)?;
    gains_from_estimate(cfg.users, candidates, op.value, op.error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::constant_structure;

    fn cfg(users: usize, m: u32, gamma: f64, n: usize) -> SystemConfig {
        SystemConfig::homogeneous(users, m, gamma, n, 1.0).unwrap()
    }

    fn corr(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (a, b) in x.iter().zip(y) {
            sxy += (a - mx) * (b - my);
            sxx += (a - mx).powi(2);
            syy += (b - my).powi(2);
        }
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn desired_power_mean() {
        let blocks = BlockStructure::new(vec![2, 2], 0.9, None).unwrap();
        let c = cfg(2, 2, 1.0, 4);
        let phi2 = 0.9 / 0.1;
        let trials = 200_000;
        let mut sum = 0.0;
        for i in 0..trials {
            let t = sample_trial(&c, &blocks, McMode::Slow, &mut trial_rng(1, i)).unwrap();
            sum += t.desired_power[0];
        }
        let mean = sum / trials as f64 / (1.0 + phi2);
        assert!((mean - 4.0).abs() < 0.04, "{mean}");
    }

    #[test]
    fn blocks_are_independent_and_ports_correlated() {
        let blocks = BlockStructure::new(vec![3, 3], 0.8, None).unwrap();
        let c = cfg(2, 1, 1.0, 6);
        let trials = 20_000;
        let (mut p0, mut p1, mut p3) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..trials {
            let t = sample_trial(&c, &blocks, McMode::Slow, &mut trial_rng(5, i)).unwrap();
            assert_eq!(t.block_map, vec![0, 0, 0, 1, 1, 1]);
            p0.push(t.desired_power[0]);
            p1.push(t.desired_power[1]);
            p3.push(t.desired_power[3]);
        }
        // field correlation within a block is φ²/(1 + φ²) = δ, power correlation δ²
        let want = 0.8 * 0.8;
        assert!((corr(&p0, &p1) - want).abs() < 0.03);
        assert!(corr(&p0, &p3).abs() < 3.0 / (trials as f64).sqrt());
    }

    #[test]
    fn reproducible_and_worker_independent() {
        let blocks = BlockStructure::new(vec![4, 3, 3], 0.97, None).unwrap();
        let c = SystemConfig::new(3, 2, vec![1, 3], 0.5, 10, 1.0).unwrap();
        for mode in [
            McMode::Slow,
            McMode::FastComposite,
            McMode::FastNakagamiApprox,
        ] {
            let s = McSettings::new(5_000, 99, mode);
            let a = max_sir_samples(&c, &blocks, &s).unwrap();
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(3)
                .build()
                .unwrap();
            let b = pool.install(|| max_sir_samples(&c, &blocks, &s).unwrap());
            let one = rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .unwrap();
            let d = one.install(|| max_sir_samples(&c, &blocks, &s).unwrap());
            assert_eq!(a, b);
            assert_eq!(a, d);
        }
    }

    #[test]
    fn single_port_rayleigh() {
        let blocks = constant_structure(1, 0.5).unwrap();
        let est = estimate_op(
            &cfg(2, 1, 1.0, 1),
            &blocks,
            &McSettings::new(100_000, 3, McMode::Slow),
        )
        .unwrap();
        assert!((est.value - 0.5).abs() < 3.0 * est.error, "{est:?}");
    }

    #[test]
    fn huge_threshold() {
        let blocks = BlockStructure::new(vec![5, 5], 0.97, None).unwrap();
        for mode in [
            McMode::Slow,
            McMode::FastComposite,
            McMode::FastNakagamiApprox,
        ] {
            let est = estimate_op(
                &cfg(4, 2, 1e9, 10),
                &blocks,
                &McSettings::new(2_000, 0, mode),
            )
            .unwrap();
            assert_eq!(est.value, 1.0);
            assert_eq!(est.error, 0.0);
        }
    }

    #[test]
    fn best_port_beats_any_fixed_port() {
        let blocks = BlockStructure::new(vec![4, 4], 0.9, None).unwrap();
        let c = cfg(3, 2, 0.5, 8);
        let (mut best, mut fixed) = (0, 0);
        for i in 0..5_000 {
            let t = sample_trial(&c, &blocks, McMode::Slow, &mut trial_rng(8, i)).unwrap();
            best += (t.max_sir() <= c.gamma) as u32;
            fixed += (t.sir(5) <= c.gamma) as u32;
            assert!(t.max_sir() >= t.sir(5));
        }
        assert!(best <= fixed);
    }

    #[test]
    fn two_user_slow_symmetry() {
        let blocks = BlockStructure::new(vec![3], 0.7, None).unwrap();
        let c = cfg(2, 2, 1.0, 3);
        let (mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0);
        let n = 50_000;
        for i in 0..n {
            let t = sample_trial(&c, &blocks, McMode::Slow, &mut trial_rng(11, i)).unwrap();
            sx += t.desired_power[1];
            sy += t.interference_power[1];
            sxx += t.desired_power[1].powi(2);
            syy += t.interference_power[1].powi(2);
        }
        assert!((sx / sy - 1.0).abs() < 0.02);
        assert!((sxx / syy - 1.0).abs() < 0.05);
    }

    #[test]
    fn composite_power_mean() {
        // E|Σ s h|² = Σ E|h|² = 2 Ũ (1 + φ²)
        let blocks = BlockStructure::new(vec![2], 0.5, None).unwrap();
        let c = SystemConfig::new(3, 1, vec![2, 1], 1.0, 2, 1.0).unwrap();
        let n = 100_000;
        let mut sum = 0.0;
        for i in 0..n {
            let t = sample_trial(&c, &blocks, McMode::FastComposite, &mut trial_rng(2, i)).unwrap();
            sum += t.interference_power[0];
        }
        let mean = sum / n as f64 / 2.0;
        assert!((mean - 6.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn sweep_matches_individual_estimates() {
        let blocks = BlockStructure::new(vec![5], 0.9, None).unwrap();
        let c = cfg(3, 1, 0.3, 5);
        let s = McSettings::new(3_000, 4, McMode::Slow);
        let sweep = estimate_op_sweep(&c, &blocks, &s, &[0.3, 1.0]).unwrap();
        assert_eq!(sweep[0], estimate_op(&c, &blocks, &s).unwrap());
        assert_eq!(
            sweep[1].value,
            estimate_op(&c.with_gamma(1.0), &blocks, &s).unwrap().value
        );
        assert!(sweep[0].value <= sweep[1].value);
    }

    #[test]
    fn gains_from_forced_estimates() {
        let g = gains_from_estimate(4, 9, 0.0, 0.0).unwrap();
        assert_eq!((g.mux_gain, g.ofama_gain), (4.0, 4.0));
        let g = gains_from_estimate(2, 2, 0.5, 0.01).unwrap();
        assert!((g.ofama_gain - 1.0).abs() < 1e-14);
        // slope of I_{1-p}(2,1) + I_{1-p}(1,2) = (1-p)² + 1 - p² is -2(1-p) - 2p = -2
        assert!((g.ofama_gain_se - 0.02).abs() < 1e-14);
        let blocks = BlockStructure::new(vec![2], 0.9, None).unwrap();
        assert!(estimate_gains(
            &cfg(3, 1, 1.0, 2),
            &blocks,
            &McSettings::new(10, 0, McMode::Slow),
            2
        )
        .is_err());
    }
}
