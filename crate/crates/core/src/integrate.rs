//! Globally adaptive Gauss-Kronrod (10/21-point) integration of vector-valued
//! integrands on finite intervals.
//!
//! Several related integrals (the same kernel raised to different powers) are
//! integrated together so every integrand evaluation is shared. An interval is
//! split while any component's error exceeds its share of the tolerance.

use crate::error::{FamaError, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_977_137_539,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// 10-point Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ...
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Result of an adaptive integration: one value and error estimate per
/// component, plus the number of integrand evaluations.
#[derive(Debug, Clone)]
pub struct Integral {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self {
            rel,
            abs: 1e-300,
            max_intervals: 4000,
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    values: Vec<f64>,
    errors: Vec<f64>,
    priority: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut e = err.abs();
    if res_asc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / res_asc).powf(1.5);
        e = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * res_abs);
    }
    e
}

/// Applies the 21-point Kronrod rule on `[a, b]`.
fn kronrod<F>(f: &mut F, a: f64, b: f64, dim: usize) -> (Vec<f64>, Vec<f64>)
where
    F: FnMut(f64, &mut [f64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv = vec![vec![0.0; dim]; 21];
    f(center, &mut fv[20]);
    for j in 0..10 {
        let dx = half * XGK[j];
        f(center - dx, &mut fv[2 * j]);
        f(center + dx, &mut fv[2 * j + 1]);
    }
    let mut values = vec![0.0; dim];
    let mut errors = vec![0.0; dim];
    for c in 0..dim {
        let fc = fv[20][c];
        let mut res_k = fc * WGK[10];
        let mut res_g = 0.0;
        let mut res_abs = (fc * WGK[10]).abs();
        for j in 0..10 {
            let (f1, f2) = (fv[2 * j][c], fv[2 * j + 1][c]);
            res_k += WGK[j] * (f1 + f2);
            res_abs += WGK[j] * (f1.abs() + f2.abs());
            if j % 2 == 1 {
                res_g += WG[j / 2] * (f1 + f2);
            }
        }
        let mean = 0.5 * res_k;
        let mut res_asc = WGK[10] * (fc - mean).abs();
        for j in 0..10 {
            res_asc += WGK[j] * ((fv[2 * j][c] - mean).abs() + (fv[2 * j + 1][c] - mean).abs());
        }
        values[c] = res_k * half;
        errors[c] = rescale_error(
            (res_k - res_g) * half,
            res_abs * half.abs(),
            res_asc * half.abs(),
        );
    }
    (values, errors)
}

/// Integrates the `dim`-component function `f` over the consecutive pieces
/// given by `breakpoints` (at least two increasing points).
pub fn integrate_vec<F>(
    mut f: F,
    breakpoints: &[f64],
    dim: usize,
    tol: Tolerance,
) -> Result<Integral>
where
    F: FnMut(f64, &mut [f64]),
{
    assert!(breakpoints.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::new();
    let mut total = vec![0.0; dim];
    let mut total_err = vec![0.0; dim];
    let mut evaluations = 0;

    let push = |heap: &mut BinaryHeap<Segment>,
                a: f64,
                b: f64,
                values: Vec<f64>,
                errors: Vec<f64>,
                scale: &[f64]| {
        let priority = errors
            .iter()
            .zip(scale)
            .map(|(e, s)| e / s)
            .fold(0.0, f64::max);
        heap.push(Segment {
            a,
            b,
            values,
            errors,
            priority,
        });
    };

    let mut initial = Vec::new();
    for w in breakpoints.windows(2) {
        let (v, e) = kronrod(&mut f, w[0], w[1], dim);
        evaluations += 21;
        for c in 0..dim {
            total[c] += v[c];
            total_err[c] += e[c];
        }
        initial.push((w[0], w[1], v, e));
    }
    let scale_of = |total: &[f64]| -> Vec<f64> {
        total
            .iter()
            .map(|t| (tol.rel * t.abs()).max(tol.abs))
            .collect()
    };
    let scale = scale_of(&total);
    for (a, b, v, e) in initial {
        push(&mut heap, a, b, v, e, &scale);
    }

    let done = |total: &[f64], err: &[f64]| {
        total
            .iter()
            .zip(err)
            .all(|(t, e)| *e <= (tol.rel * t.abs()).max(tol.abs))
    };

    while !done(&total, &total_err) {
        if heap.len() >= tol.max_intervals {
            return Err(FamaError::Convergence(format!(
                "adaptive integration did not reach rel_tol={} within {} intervals",
                tol.rel, tol.max_intervals
            )));
        }
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            return Err(FamaError::Convergence(
                "adaptive integration interval collapsed below machine precision".into(),
            ));
        }
        let (v1, e1) = kronrod(&mut f, seg.a, mid, dim);
        let (v2, e2) = kronrod(&mut f, mid, seg.b, dim);
        evaluations += 42;
        for c in 0..dim {
            total[c] += v1[c] + v2[c] - seg.values[c];
            total_err[c] += e1[c] + e2[c] - seg.errors[c];
        }
        let scale = scale_of(&total);
        push(&mut heap, seg.a, mid, v1, e1, &scale);
        push(&mut heap, mid, seg.b, v2, e2, &scale);
    }
    // recompute sums from the leaves to shed accumulated cancellation
    let mut values = vec![0.0; dim];
    let mut errors = vec![0.0; dim];
    for seg in heap.iter() {
        for c in 0..dim {
            values[c] += seg.values[c];
            errors[c] += seg.errors[c];
        }
    }
    Ok(Integral {
        values,
        errors,
        evaluations,
    })
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let r = integrate_vec(|x, out| out[0] = f(x), &[a, b], 1, tol)?;
    Ok((r.values[0], r.errors[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronrod_weights_are_consistent() {
        let k: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert_relative_eq!(k, 2.0, epsilon = 1e-15);
        assert_relative_eq!(g, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn polynomials_and_smooth_functions() {
        let (v, _) = integrate(|x| x.powi(7), 0.0, 2.0, Tolerance::relative(1e-12)).unwrap();
        assert_relative_eq!(v, 32.0, max_relative = 1e-14);
        let (v, _) = integrate(|x| (-x).exp(), 0.0, 50.0, Tolerance::relative(1e-12)).unwrap();
        assert_relative_eq!(v, 1.0 - (-50f64).exp(), max_relative = 1e-13);
        let (v, _) = integrate(|x| x.sqrt().ln(), 0.0, 1.0, Tolerance::relative(1e-10)).unwrap();
        assert_relative_eq!(v, -0.5, max_relative = 1e-9);
    }

    #[test]
    fn vector_components_share_points() {
        let r = integrate_vec(
            |x, out| {
                out[0] = x;
                out[1] = x.powi(20);
            },
            &[0.0, 0.5, 1.0],
            2,
            Tolerance::relative(1e-12),
        )
        .unwrap();
        assert_relative_eq!(r.values[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(r.values[1], 1.0 / 21.0, max_relative = 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let tol = Tolerance {
            rel: 1e-14,
            abs: 0.0,
            max_intervals: 3,
        };
        let r = integrate(|x| (1.0 / x).sin(), 1e-6, 1.0, tol);
        assert!(matches!(r, Err(FamaError::Convergence(_))));
    }
}
