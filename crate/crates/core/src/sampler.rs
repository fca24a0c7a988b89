//! Dyadic Brownian sample paths on `[-1, 1]`.
//!
//! A path at level `n` holds the values `f(k / 2^n - 1)` for
//! `k = 0..=2^(n+1)`, anchored at `f(-1) = 0`.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{CounterRng, Seed};

/// Default largest admissible grid level (about 33M points).
pub const DEFAULT_MAX_LEVEL: u32 = 24;

const DOMAIN_SAMPLE: u64 = 0x5341_4d50;
const DOMAIN_REFINE: u64 = 0x5245_464e;

/// Number of grid values of a path at `level`.
pub fn path_len(level: u32) -> usize {
    (1usize << (level + 1)) + 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    level: u32,
    values: Vec<f64>,
    seed: Seed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversedPath {
    level: u32,
    values: Vec<f64>,
}

/// Path generator with a memory cap on the grid level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampler {
    max_level: u32,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler {
            max_level: DEFAULT_MAX_LEVEL,
        }
    }
}

impl Sampler {
    pub fn with_max_level(max_level: u32) -> Self {
        Sampler { max_level }
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    fn check_level(&self, level: u32) -> Result<()> {
        if level > self.max_level {
            // saturate: 2^(level+1)+1 overflows for absurd levels
            let requested = 1u64.checked_shl(level + 1).map_or(u64::MAX, |v| v + 1);
            return Err(Error::Capacity {
                what: "sample path grid points",
                requested,
                limit: (1u64 << (self.max_level + 1)) + 1,
            });
        }
        Ok(())
    }

    /// Brownian path with `2^(level+1)` i.i.d. `N(0, 2^-level)` increments.
    pub fn sample(&self, level: u32, seed: Seed) -> Result<SamplePath> {
        self.check_level(level)?;
        let rng = CounterRng::new(seed, DOMAIN_SAMPLE, level);
        let steps = 1u64 << (level + 1);
        let sd = (-(level as f64) / 2.0).exp2();
        let increments = normals(&rng, steps, sd);
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut acc = 0.0;
        values.push(acc);
        for inc in increments {
            acc += inc;
            values.push(acc);
        }
        Ok(SamplePath {
            level,
            values,
            seed,
        })
    }

    /// Brownian-bridge midpoint insertion: one level finer, coarse values kept.
    pub fn refine(&self, path: &SamplePath, seed: Seed) -> Result<SamplePath> {
        let level = path.level + 1;
        self.check_level(level)?;
        let rng = CounterRng::new(seed, DOMAIN_REFINE, level);
        let mids = path.values.len() as u64 - 1;
        let sd = (-((level + 1) as f64) / 2.0).exp2();
        let noise = normals(&rng, mids, sd);
        let mut values = Vec::with_capacity(path_len(level));
        for (k, pair) in path.values.windows(2).enumerate() {
            values.push(pair[0]);
            values.push(0.5 * (pair[0] + pair[1]) + noise[k]);
        }
        values.push(*path.values.last().expect("non-empty path"));
        Ok(SamplePath {
            level,
            values,
            seed: path.seed,
        })
    }
}

#[cfg(feature = "parallel")]
fn normals(rng: &CounterRng, count: u64, sd: f64) -> Vec<f64> {
    use rayon::prelude::*;
    (0..count)
        .into_par_iter()
        .map(|i| sd * rng.normal(i))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn normals(rng: &CounterRng, count: u64, sd: f64) -> Vec<f64> {
    (0..count).map(|i| sd * rng.normal(i)).collect()
}

/// Samples with the default memory cap.
pub fn sample(level: u32, seed: Seed) -> Result<SamplePath> {
    Sampler::default().sample(level, seed)
}

/// Refines with the default memory cap.
pub fn refine(path: &SamplePath, seed: Seed) -> Result<SamplePath> {
    Sampler::default().refine(path, seed)
}

/// Which path generator an experiment draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Brownian,
    /// The deterministic control `f(x) = x + 1`.
    Ramp,
}

/// `trials` paths indexed `0..trials`; Brownian path `i` uses `seed.trial(i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ensemble {
    pub kind: PathKind,
    pub seed: Seed,
    pub trials: u64,
}

impl Ensemble {
    pub fn brownian(seed: Seed, trials: u64) -> Self {
        Ensemble {
            kind: PathKind::Brownian,
            seed,
            trials,
        }
    }

    pub fn ramp(trials: u64) -> Self {
        Ensemble {
            kind: PathKind::Ramp,
            seed: Seed(0),
            trials,
        }
    }

    pub fn path(&self, index: u64, level: u32) -> Result<SamplePath> {
        match self.kind {
            PathKind::Brownian => sample(level, self.seed.trial(index)),
            PathKind::Ramp => {
                Sampler::default().check_level(level)?;
                Ok(SamplePath::ramp(level))
            }
        }
    }
}

/// Time-reversed Brownian motion `u -> f(1) - f(1 - u)` on `[0, 2]`.
pub fn reverse(path: &SamplePath) -> ReversedPath {
    let last = path.last();
    let values = path.values.iter().rev().map(|v| last - v).collect();
    ReversedPath {
        level: path.level,
        values,
    }
}

impl SamplePath {
    /// Wraps raw grid values; `values[0]` must be 0 and the length must match the level.
    pub fn from_values(level: u32, values: Vec<f64>, seed: Seed) -> Result<Self> {
        if values.len() != path_len(level) {
            return Err(Error::shape(format!(
                "level {level} path needs {} values, got {}",
                path_len(level),
                values.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::domain("path must be anchored at f(-1) = 0"));
        }
        Ok(SamplePath {
            level,
            values,
            seed,
        })
    }

    /// The deterministic control path `f(x) = x + 1`.
    pub fn ramp(level: u32) -> Self {
        let scale = (-(level as f64)).exp2();
        let values = (0..path_len(level)).map(|k| k as f64 * scale).collect();
        SamplePath {
            level,
            values,
            seed: Seed(0),
        }
    }

    pub fn zero(level: u32) -> Self {
        SamplePath {
            level,
            values: vec![0.0; path_len(level)],
            seed: Seed(0),
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `f(1)`.
    pub fn last(&self) -> f64 {
        *self.values.last().expect("non-empty path")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Grid time of index `k`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * (-(self.level as f64)).exp2() - 1.0
    }

    /// `f(x_b) - f(x_a)`.
    pub fn increment(&self, a_index: usize, b_index: usize) -> Result<f64> {
        let len = self.values.len();
        if b_index >= len {
            return Err(Error::Bounds {
                index: b_index,
                len,
            });
        }
        if a_index > b_index {
            return Err(Error::Bounds {
                index: a_index,
                len: b_index + 1,
            });
        }
        Ok(self.values[b_index] - self.values[a_index])
    }

    /// Writes `k,x,f` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,x,f")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{k},{:.16e},{:.16e}", self.time(k), v)?;
        }
        Ok(())
    }
}

impl ReversedPath {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Reinterprets the reversed motion as a path on `[-1, 1]`.
    pub fn into_path(self, seed: Seed) -> SamplePath {
        SamplePath {
            level: self.level,
            values: self.values,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sum::mean_and_stderr;

    #[test]
    fn level_zero_has_three_anchored_values() {
        let p = sample(0, Seed(5)).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.values()[0], 0.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample(10, Seed(42)).unwrap();
        let b = sample(10, Seed(42)).unwrap();
        assert_eq!(a.values(), b.values());
        assert_eq!(a.len(), 2049);
        assert_ne!(a.values(), sample(10, Seed(43)).unwrap().values());
    }

    #[test]
    fn capacity_limit() {
        let err = sample(40, Seed(1)).unwrap_err();
        assert!(err.is_capacity());
        assert!(Sampler::with_max_level(3).sample(4, Seed(1)).is_err());
        let coarse = Sampler::with_max_level(3).sample(3, Seed(1)).unwrap();
        assert!(Sampler::with_max_level(3).refine(&coarse, Seed(2)).is_err());
    }

    #[test]
    fn total_increment_variance_is_two() {
        let trials = 10_000u64;
        let ends: Vec<f64> = (0..trials)
            .map(|t| sample(12, Seed(1000 + t)).unwrap().last())
            .collect();
        let sq: Vec<f64> = ends.iter().map(|e| e * e).collect();
        let (var, se) = mean_and_stderr(&sq).unwrap();
        assert!((var - 2.0).abs() <= 3.0 * se, "var {var} se {se}");
    }

    #[test]
    fn increment_variance_scales_with_level() {
        let path = sample(14, Seed(77)).unwrap();
        let incs: Vec<f64> = path
            .values()
            .windows(2)
            .map(|w| (w[1] - w[0]).powi(2))
            .collect();
        let (m, se) = mean_and_stderr(&incs).unwrap();
        assert!((m - (-14f64).exp2()).abs() <= 3.0 * se);
    }

    #[test]
    fn disjoint_increments_uncorrelated() {
        let path = sample(14, Seed(78)).unwrap();
        let incs: Vec<f64> = path.values().windows(2).map(|w| w[1] - w[0]).collect();
        let products: Vec<f64> = incs.chunks_exact(2).map(|c| c[0] * c[1]).collect();
        let (m, se) = mean_and_stderr(&products).unwrap();
        assert!(m.abs() <= 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn refine_keeps_knots() {
        let p = sample(0, Seed(3)).unwrap();
        let r = refine(&p, Seed(4)).unwrap();
        assert_eq!(r.level(), 1);
        assert_eq!(r.len(), 5);
        for k in 0..3 {
            assert_eq!(r.values()[2 * k].to_bits(), p.values()[k].to_bits());
        }
        let rr = refine(&r, Seed(5)).unwrap();
        assert_eq!(rr.level(), 2);
        for k in 0..3 {
            assert_eq!(rr.values()[4 * k].to_bits(), p.values()[k].to_bits());
        }
    }

    #[test]
    fn bridge_midpoint_variance() {
        // conditional variance of the midpoint of a bridge over 2^-level is 2^-(level+2)
        let level = 3;
        let base = sample(level, Seed(11)).unwrap();
        let mut residuals = Vec::new();
        for t in 0..10_000u64 {
            let r = refine(&base, Seed(500 + t)).unwrap();
            let v = r.values();
            residuals.push((v[1] - 0.5 * (v[0] + v[2])).powi(2));
        }
        let (m, se) = mean_and_stderr(&residuals).unwrap();
        let target = (-((level + 2) as f64)).exp2();
        assert!(
            (m - target).abs() <= 3.0 * se,
            "m {m} target {target} se {se}"
        );
    }

    #[test]
    fn reverse_of_zero_and_ramp() {
        let z = reverse(&SamplePath::zero(4));
        assert!(z.values().iter().all(|&v| v == 0.0));
        let ramp = SamplePath::ramp(4);
        let r = reverse(&ramp);
        for (k, v) in r.values().iter().enumerate() {
            assert!((v - k as f64 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn reverse_invariant_and_involution() {
        let p = sample(6, Seed(8)).unwrap();
        let r = reverse(&p);
        let n = p.len() - 1;
        assert_eq!(r.values()[0], 0.0);
        for k in 0..=n {
            assert_eq!(r.values()[k], p.last() - p.values()[n - k]);
        }
        let back = reverse(&r.into_path(p.seed()));
        for (a, b) in back.values().iter().zip(p.values()) {
            assert!((a - b).abs() <= 1e-14 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn increments() {
        let p = sample(5, Seed(2)).unwrap();
        assert_eq!(p.increment(4, 4).unwrap(), 0.0);
        assert_eq!(p.increment(0, p.len() - 1).unwrap(), p.last());
        assert_eq!(p.increment(3, 17).unwrap(), p.values()[17] - p.values()[3]);
        assert!(matches!(p.increment(0, p.len()), Err(Error::Bounds { .. })));
        assert!(p.increment(5, 2).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        SamplePath::ramp(1).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,x,f");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("0,-1.0000000000000000e0,"));
    }
}
