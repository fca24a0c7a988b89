//! Gaussian moments, Cameron-Martin Lipschitz norms of the frame window,
//! and the Monte-Carlo check of the Gaussian tail estimate.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;

use crate::dyadic::DyadicTime;
use crate::error::{Error, Result};
use crate::frame::frame_difference;
use crate::par::map_indices;
use crate::rng::Seed;
use crate::sampler::{sample, Ensemble, PathKind, SamplePath};
use crate::sum::mean_and_stderr;
use crate::variation::{d_constants, d_p_lip, pvar_norm, DEFAULT_SERIES_TOL};

/// Default evaluation points for the survival function.
pub const DEFAULT_R_GRID: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 3.0];

/// `E|B_t - B_s|^{p'} = sqrt(2^{p'} / pi) Gamma((p'+1)/2) |t-s|^{p'/2}`.
pub fn gaussian_abs_moment(pprime: f64, dt: f64) -> Result<f64> {
    if !(pprime > 0.0) {
        return Err(Error::domain(format!(
            "moment order must be positive, got {pprime}"
        )));
    }
    if !(dt >= 0.0) {
        return Err(Error::domain(format!(
            "time increment must be nonnegative, got {dt}"
        )));
    }
    let c = (pprime.exp2() / std::f64::consts::PI).sqrt() * libm::tgamma((pprime + 1.0) / 2.0);
    Ok(c * dt.powf(pprime / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentCheck {
    pub estimate: f64,
    pub stderr: f64,
    pub formula: f64,
}

impl MomentCheck {
    pub fn within(&self, k: f64) -> bool {
        (self.estimate - self.formula).abs() <= k * self.stderr
    }
}

/// Monte-Carlo mean of `|f(-1 + dt) - f(-1)|^{p'}` over independent paths.
pub fn mc_moment_check(
    pprime: f64,
    dt: DyadicTime,
    level: u32,
    trials: u64,
    seed: Seed,
) -> Result<MomentCheck> {
    let formula = gaussian_abs_moment(pprime, dt.value())?;
    let offset = dt.index_at(level)? as usize;
    if trials < 2 {
        return Err(Error::domain("standard error needs at least 2 trials"));
    }
    let draws = map_indices(trials, |i| {
        sample(level, seed.trial(i)).map(|path| path.values()[offset].abs().powf(pprime))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let (estimate, stderr) = mean_and_stderr(&draws).expect("at least two draws");
    Ok(MomentCheck {
        estimate,
        stderr,
        formula,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CmWindowNorm {
    /// `sqrt(h2 - h1)`.
    pub lip_value: f64,
    /// L2 norm of the extremal direction `1_{[h1-1, h2-1)} / sqrt(h2 - h1)`.
    pub extremal_l2: f64,
    /// `sup_t |int_{h1-1+t}^{h2-1+t} g|` over the probe grid.
    pub extremal_sup: f64,
    pub argmax_t: f64,
}

const CM_PROBE_LEVEL: u32 = 12;

/// Lipschitz constant of `g -> sup_t |G(h2-1+t) - G(h1-1+t)|` in Cameron-Martin directions.
pub fn cm_window_norm(h1: f64, h2: f64) -> Result<CmWindowNorm> {
    if !(0.0 <= h1 && h1 < h2 && h2 <= 1.0) {
        return Err(Error::domain(format!(
            "need 0 <= h1 < h2 <= 1, got h1 = {h1}, h2 = {h2}"
        )));
    }
    let width = h2 - h1;
    let height = 1.0 / width.sqrt();
    let (lo, hi) = (h1 - 1.0, h2 - 1.0);
    let extremal_l2 = (height * height * width).sqrt();
    let steps = 1u32 << CM_PROBE_LEVEL;
    let mut extremal_sup = f64::NEG_INFINITY;
    let mut argmax_t = 0.0;
    for j in 0..=steps {
        let t = j as f64 / steps as f64;
        let overlap = (hi.min(hi + t) - lo.max(lo + t)).max(0.0);
        let value = height * overlap;
        if value > extremal_sup {
            extremal_sup = value;
            argmax_t = t;
        }
    }
    Ok(CmWindowNorm {
        lip_value: width.sqrt(),
        extremal_l2,
        extremal_sup,
        argmax_t,
    })
}

/// `d_p (h2 - h1)^{1/2 - 1/p}`.
pub fn lip_pvar_bound(p: f64, h1: f64, h2: f64) -> Result<f64> {
    if !(0.0 <= h1 && h1 < h2 && h2 <= 1.0) {
        return Err(Error::domain(format!(
            "need 0 <= h1 < h2 <= 1, got h1 = {h1}, h2 = {h2}"
        )));
    }
    Ok(d_p_lip(p)? * (h2 - h1).powf(0.5 - 1.0 / p))
}

/// `exp(-r^2/2) / (sqrt(2 pi) r)`.
pub fn gaussian_tail_bound(r: f64) -> f64 {
    (-r * r / 2.0).exp() / ((2.0 * std::f64::consts::PI).sqrt() * r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailParams {
    pub p: f64,
    pub alpha: f64,
    pub h1: DyadicTime,
    pub h2: DyadicTime,
    pub level: u32,
    pub trials: u64,
    pub seed: Seed,
    pub kind: PathKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationForm {
    /// `2 * mean(F)`, standing in for `2 E[F]`.
    pub twice_mean: f64,
    /// `d2 (h2 - h1)^{1/2 - 1/p}`.
    pub lipschitz: f64,
    /// Empirical `P(F >= 2 mean + r Lip)` at each r.
    pub survival: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub params: TailParams,
    pub r: Vec<f64>,
    /// Empirical `P(Z >= r)`.
    pub survival: Vec<f64>,
    pub bound: Vec<f64>,
    /// Binomial standard error of the survival estimate at the bound.
    pub binomial_se: Vec<f64>,
    /// Monte-Carlo `E[F^{p'}]` with standard error, keyed by `p'`.
    pub moments: BTreeMap<String, (f64, f64)>,
    pub d1: f64,
    pub d2: f64,
    /// `d1` computed with the moment series summed from `n = 1`.
    pub d1_from_one: f64,
    pub z_mean: f64,
    pub z_median: f64,
    pub norm_median: f64,
    pub deviation: DeviationForm,
}

impl TailReport {
    /// `survival <= bound + k * binomial_se` at every r.
    pub fn one_sided_holds(&self, k: f64) -> bool {
        self.survival
            .iter()
            .zip(&self.bound)
            .zip(&self.binomial_se)
            .all(|((s, b), se)| *s <= b + k * se)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "r,survival,bound")?;
        for ((r, s), b) in self.r.iter().zip(&self.survival).zip(&self.bound) {
            writeln!(out, "{r},{s:.16e},{b:.16e}")?;
        }
        Ok(())
    }
}

/// Empirical 50% quantile, averaging the two middle order statistics.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

fn survival_at(values: &[f64], threshold: f64) -> f64 {
    values.iter().filter(|&&v| v >= threshold).count() as f64 / values.len() as f64
}

/// Grid norm `||T_{h2} f - T_{h1} f||_p` for one path.
pub fn frame_norm(path: &SamplePath, h1: DyadicTime, h2: DyadicTime, p: f64) -> Result<f64> {
    pvar_norm(&frame_difference(path, h1, h2)?, p)
}

/// Monte-Carlo survival of `Z = ||T_{h2} - T_{h1}||_p / (d2 (h2-h1)^{1/2-1/p}) - d1`.
pub fn tail_experiment(params: TailParams, r_grid: &[f64]) -> Result<TailReport> {
    let TailParams {
        p,
        alpha,
        h1,
        h2,
        level,
        trials,
        seed,
        kind,
    } = params;
    if h1 >= h2 {
        return Err(Error::domain(format!(
            "need h1 < h2, got h1 = {h1}, h2 = {h2}"
        )));
    }
    if trials < 100 {
        return Err(Error::domain(format!(
            "tail experiment needs at least 100 trials, got {trials}"
        )));
    }
    if let Some(r) = r_grid.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::domain(format!("tail bound needs r > 0, got {r}")));
    }
    h1.index_at(level)?;
    h2.index_at(level)?;
    let constants = d_constants(alpha, alpha, p, p, DEFAULT_SERIES_TOL)?;
    let d1_from_one = constants.d_alpha_p_from_one.powf(1.0 / p) / constants.d_p_lip;
    let scale = constants.d2 * (h2.value() - h1.value()).powf(0.5 - 1.0 / p);
    let ensemble = Ensemble { kind, seed, trials };
    let norms = map_indices(trials, |i| {
        ensemble
            .path(i, level)
            .and_then(|path| frame_norm(&path, h1, h2, p))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let z: Vec<f64> = norms.iter().map(|f| f / scale - constants.d1).collect();
    let n = trials as f64;
    let bound: Vec<f64> = r_grid.iter().map(|&r| gaussian_tail_bound(r)).collect();
    let binomial_se = bound
        .iter()
        .map(|&b| {
            let q = b.min(1.0);
            (q * (1.0 - q) / n).sqrt()
        })
        .collect();
    let mut moments = BTreeMap::new();
    for order in [1.0, 2.0, p] {
        let powered: Vec<f64> = norms.iter().map(|f| f.powf(order)).collect();
        let stats = mean_and_stderr(&powered).expect("at least 100 trials");
        moments.insert(format!("{order}"), stats);
    }
    let (norm_mean, _) = mean_and_stderr(&norms).expect("at least 100 trials");
    let (z_mean, _) = mean_and_stderr(&z).expect("at least 100 trials");
    let deviation = DeviationForm {
        twice_mean: 2.0 * norm_mean,
        lipschitz: scale,
        survival: r_grid
            .iter()
            .map(|&r| survival_at(&norms, 2.0 * norm_mean + r * scale))
            .collect(),
    };
    Ok(TailReport {
        params,
        r: r_grid.to_vec(),
        survival: r_grid.iter().map(|&r| survival_at(&z, r)).collect(),
        bound,
        binomial_se,
        moments,
        d1: constants.d1,
        d2: constants.d2,
        d1_from_one,
        z_mean,
        z_median: median(&z).expect("nonempty"),
        norm_median: median(&norms).expect("nonempty"),
        deviation,
    })
}
