use anyhow::{bail, Context, Result};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    GammaDb,
    N,
    W,
    U,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::GammaDb => "gamma_db",
            Axis::N => "N",
            Axis::W => "W",
            Axis::U => "U",
        }
    }

    fn is_integer(&self) -> bool {
        matches!(self, Axis::N | Axis::U)
    }
}

/// `AXIS=start:stop:step`, inclusive of `stop`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
}

fn parse_axis(s: &str) -> Result<Axis> {
    Ok(match s.trim().to_ascii_lowercase().as_str() {
        "gamma-db" | "gamma_db" | "gamma" => Axis::GammaDb,
        "n" => Axis::N,
        "w" => Axis::W,
        "u" => Axis::U,
        other => bail!("unknown sweep axis '{other}' (expected gamma-db, N, W or U)"),
    })
}

// 12 significant digits keeps 0.1-steps printable as 0.3, not 0.30000000000000004
fn tidy(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let digits = 12 - v.abs().log10().ceil() as i32;
    let scale = 10f64.powi(digits);
    (v * scale).round() / scale
}

pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() {
        bail!("sweep step must be positive, got {step}");
    }
    if !(start.is_finite() && stop.is_finite()) || stop < start {
        bail!("sweep range must satisfy start <= stop, got {start}:{stop}");
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        bail!("sweep has {count} points; refusing more than 100000");
    }
    Ok((0..count).map(|i| tidy(start + i as f64 * step)).collect())
}

impl FromStr for Sweep {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (axis, range) = s
            .split_once('=')
            .with_context(|| format!("sweep '{s}' must look like AXIS=start:stop:step"))?;
        let axis = parse_axis(axis)?;
        let parts: Vec<&str> = range.split(':').collect();
        let nums = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| format!("bad numbers in sweep range '{range}'"))?;
        let values = match nums.as_slice() {
            [v] => vec![*v],
            [a, b] => grid(*a, *b, 1.0)?,
            [a, b, c] => grid(*a, *b, *c)?,
            _ => bail!("sweep range '{range}' must be start:stop[:step]"),
        };
        if axis.is_integer() && values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
            bail!("sweep over {} needs positive integer values", axis.name());
        }
        Ok(Sweep { axis, values })
    }
}

/// Accepts plain integers and scientific notation such as `1e6`.
pub fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a count"))?;
    if v >= 1.0 && v.fract() == 0.0 && v <= 1e15 {
        Ok(v as u64)
    } else {
        Err(format!("'{s}' is not a positive integer count"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_grids() {
        let s: Sweep = "N=10:100:10".parse().unwrap();
        assert_eq!(s.axis, Axis::N);
        assert_eq!(s.values.len(), 10);
        assert_eq!(*s.values.last().unwrap(), 100.0);
        let s: Sweep = "gamma-db=-10:10:1".parse().unwrap();
        assert_eq!(s.values.len(), 21);
        assert_eq!(s.values[0], -10.0);
        let s: Sweep = "W=0.1:0.5:0.1".parse().unwrap();
        assert_eq!(s.values, vec![0.1, 0.2, 0.3, 0.4, 0.5]);
    }

    #[test]
    fn rejects_bad_sweeps() {
        assert!("N=10:1:1".parse::<Sweep>().is_err());
        assert!("U=1.5:3:1".parse::<Sweep>().is_err());
        assert!("X=1:2:1".parse::<Sweep>().is_err());
        assert!("gamma-db=0:1:0".parse::<Sweep>().is_err());
        assert!("N10".parse::<Sweep>().is_err());
    }

    #[test]
    fn counts() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("250"), Ok(250));
        assert!(parse_count("0.5").is_err());
        assert!(parse_count("x").is_err());
    }
}
