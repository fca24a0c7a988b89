//! Exact p-variation of discrete paths, the dyadic domination functional,
//! and the closed-form constants that control the frame process.

use serde::Serialize;

use crate::dyadic::DyadicTime;
use crate::error::{Error, Result};
use crate::frame::shifted_path;
use crate::rng::{CounterRng, Seed};
use crate::sampler::SamplePath;
use crate::sum::{compensated_sum, CompensatedSum};

/// Default cap on the length of a sequence handed to [`pvar_exact`].
pub const PVAR_MAX_LEN: usize = (1 << 13) + 1;

/// Longest sequence [`pvar_bruteforce`] will enumerate.
pub const BRUTEFORCE_MAX_LEN: usize = 20;

/// Default absolute tolerance for certified series truncation.
pub const DEFAULT_SERIES_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PVarResult {
    pub p: f64,
    /// `(sup_D sum |x_{t_i} - x_{t_{i-1}}|^p)^(1/p)`.
    pub value: f64,
    /// Increasing indices of a dissection attaining the supremum.
    pub dissection: Vec<usize>,
}

impl PVarResult {
    /// Recomputes `sum |increment|^p` over the stored dissection.
    pub fn certificate_sum(&self, seq: &[f64]) -> f64 {
        let pow = Power::new(self.p);
        self.dissection
            .windows(2)
            .map(|w| pow.abs_pow(seq[w[1]] - seq[w[0]]))
            .sum()
    }
}

/// `|x|^p` with fast paths for small integer exponents.
#[derive(Debug, Clone, Copy)]
enum Power {
    One,
    Two,
    Three,
    Four,
    Real(f64),
}

impl Power {
    fn new(p: f64) -> Self {
        match p {
            1.0 => Power::One,
            2.0 => Power::Two,
            3.0 => Power::Three,
            4.0 => Power::Four,
            x => Power::Real(x),
        }
    }

    #[inline(always)]
    fn abs_pow(self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            Power::One => a,
            Power::Two => a * a,
            Power::Three => a * a * a,
            Power::Four => {
                let s = a * a;
                s * s
            }
            Power::Real(p) => a.powf(p),
        }
    }
}

fn check_pvar_input(seq: &[f64], p: f64) -> Result<()> {
    if seq.len() < 2 {
        return Err(Error::shape(format!(
            "p-variation needs at least 2 points, got {}",
            seq.len()
        )));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::domain(format!("p-variation needs p >= 1, got {p}")));
    }
    Ok(())
}

/// Indices of the endpoints and of the strict turning points of `seq`.
///
/// For `p >= 1` merging two same-sign increments never decreases
/// `|a|^p + |b|^p`, so an optimal dissection can always be drawn from these
/// indices.
fn turning_points(seq: &[f64]) -> Vec<usize> {
    let last = seq.len() - 1;
    let mut keep = vec![0usize];
    // direction of the run ending at the last kept candidate: +1, -1, or 0 (flat so far)
    let mut dir = 0i8;
    let mut candidate = 0usize;
    for i in 1..=last {
        let step = seq[i] - seq[candidate];
        let s = if step > 0.0 {
            1
        } else if step < 0.0 {
            -1
        } else {
            0
        };
        if s == 0 {
            continue;
        }
        if dir == 0 || s == dir {
            dir = s;
            candidate = i;
        } else {
            keep.push(candidate);
            dir = s;
            candidate = i;
        }
    }
    // every value after the final candidate equals it, so the endpoint stands in for it
    keep.push(last);
    keep
}

/// Exact p-variation by dynamic programming over dissections.
///
/// `V(i) = max_{j < i} V(j) + |x_i - x_j|^p`, evaluated on the turning
/// points of the sequence. Ties resolve to the first maximizer.
pub fn pvar_exact(seq: &[f64], p: f64) -> Result<PVarResult> {
    pvar_exact_capped(seq, p, PVAR_MAX_LEN)
}

/// [`pvar_exact`] with an explicit length cap.
pub fn pvar_exact_capped(seq: &[f64], p: f64, max_len: usize) -> Result<PVarResult> {
    check_pvar_input(seq, p)?;
    if seq.len() > max_len {
        return Err(Error::Capacity {
            what: "p-variation sequence length",
            requested: seq.len() as u64,
            limit: max_len as u64,
        });
    }
    let pow = Power::new(p);
    let idx = turning_points(seq);
    let xs: Vec<f64> = idx.iter().map(|&i| seq[i]).collect();
    let m = xs.len();
    let mut best = vec![0.0f64; m];
    let mut prev = vec![0usize; m];
    for i in 1..m {
        let xi = xs[i];
        let mut top = f64::NEG_INFINITY;
        let mut arg = 0;
        for j in 0..i {
            let cand = best[j] + pow.abs_pow(xi - xs[j]);
            if cand > top {
                top = cand;
                arg = j;
            }
        }
        best[i] = top;
        prev[i] = arg;
    }
    let mut dissection = vec![idx[m - 1]];
    let mut cur = m - 1;
    while cur != 0 {
        cur = prev[cur];
        dissection.push(idx[cur]);
    }
    dissection.reverse();
    Ok(PVarResult {
        p,
        value: best[m - 1].powf(1.0 / p),
        dissection,
    })
}

/// Exhaustive p-variation over every subset of interior indices.
pub fn pvar_bruteforce(seq: &[f64], p: f64) -> Result<PVarResult> {
    check_pvar_input(seq, p)?;
    if seq.len() > BRUTEFORCE_MAX_LEN {
        return Err(Error::Capacity {
            what: "brute-force p-variation sequence length",
            requested: seq.len() as u64,
            limit: BRUTEFORCE_MAX_LEN as u64,
        });
    }
    let pow = Power::new(p);
    let interior = seq.len() - 2;
    let last = seq.len() - 1;
    let mut top = f64::NEG_INFINITY;
    let mut top_mask = 0u32;
    for mask in 0u32..(1u32 << interior) {
        let mut acc = 0.0;
        let mut from = 0usize;
        for bit in 0..interior {
            if mask & (1 << bit) != 0 {
                let to = bit + 1;
                acc += pow.abs_pow(seq[to] - seq[from]);
                from = to;
            }
        }
        acc += pow.abs_pow(seq[last] - seq[from]);
        if acc > top {
            top = acc;
            top_mask = mask;
        }
    }
    let mut dissection = vec![0];
    dissection.extend(
        (0..interior)
            .filter(|b| top_mask & (1 << b) != 0)
            .map(|b| b + 1),
    );
    dissection.push(last);
    Ok(PVarResult {
        p,
        value: top.powf(1.0 / p),
        dissection,
    })
}

/// `sup |x| + V_p(x)`.
pub fn pvar_norm(seq: &[f64], p: f64) -> Result<f64> {
    let v = pvar_exact(seq, p)?;
    Ok(sup_abs(seq) + v.value)
}

pub(crate) fn sup_abs(seq: &[f64]) -> f64 {
    seq.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn check_alpha_p(alpha: f64, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::domain(format!(
            "c(alpha, p) needs p > 1, got p = {p}"
        )));
    }
    if !(alpha > 1.0 - 1.0 / p) {
        return Err(Error::domain(format!(
            "c(alpha, p) needs alpha > 1 - 1/p = {}, got alpha = {alpha}",
            1.0 - 1.0 / p
        )));
    }
    Ok(alpha * p / (p - 1.0))
}

/// `sum_{n>=1} n^-q` for `q > 1` with a certified error bound.
///
/// Direct partial sum up to `cutoff - 1`, then the Euler-Maclaurin tail.
/// All derivatives of `x^-q` alternate in sign, so the remainder is bounded
/// by the first omitted correction term.
pub fn zeta_certified(q: f64, tol: f64) -> Result<(f64, f64)> {
    if !(q > 1.0) {
        return Err(Error::domain(format!(
            "series sum n^-q diverges for q = {q} <= 1"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    // Bernoulli corrections B_{2k} / (2k)! for k = 1..=4
    const CORR: [f64; 4] = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1_209_600.0];
    let rising = |q: f64, terms: usize| (0..terms).map(|i| q + i as f64).product::<f64>();
    let bound_at = |m: f64| CORR[3].abs() * rising(q, 7) * m.powf(-q - 7.0);
    let mut cutoff = 16.0f64;
    while bound_at(cutoff) >= tol {
        cutoff *= 2.0;
        if cutoff > 1e12 {
            return Err(Error::domain(format!("cannot certify sum n^-{q} to {tol}")));
        }
    }
    let mut acc = CompensatedSum::new();
    let top = cutoff as u64;
    for n in (1..top).rev() {
        acc.add((n as f64).powf(-q));
    }
    let m = cutoff;
    acc.add(m.powf(1.0 - q) / (q - 1.0));
    acc.add(0.5 * m.powf(-q));
    for (k, c) in CORR.iter().take(3).enumerate() {
        let order = 2 * k + 1;
        // f^{(2k+1)}(m) = -(q)_(2k+1) m^{-q-2k-1}; tail picks up -c * f^{(2k+1)}(m)
        acc.add(c * rising(q, order) * m.powf(-q - order as f64));
    }
    Ok((acc.value(), bound_at(cutoff)))
}

/// `c(alpha, p) = (sum_{n>=1} n^{-alpha p / (p-1)})^{(p-1)/p}`.
pub fn c_alpha_p(alpha: f64, p: f64, tol: f64) -> Result<f64> {
    let q = check_alpha_p(alpha, p)?;
    let (inner, _) = zeta_certified(q, tol)?;
    Ok(inner.powf((p - 1.0) / p))
}

/// Both sides of `(sum |a_i|)^p <= c(alpha,p)^p sum i^{alpha p} |a_i|^p`.
pub fn hoelder_seq_bound_check(a: &[f64], alpha: f64, p: f64) -> Result<(f64, f64)> {
    let c = c_alpha_p(alpha, p, DEFAULT_SERIES_TOL)?;
    let lhs = compensated_sum(a.iter().map(|x| x.abs())).powf(p);
    let weighted = compensated_sum(
        a.iter()
            .enumerate()
            .map(|(i, x)| ((i + 1) as f64).powf(alpha * p) * x.abs().powf(p)),
    );
    Ok((lhs, c.powf(p) * weighted))
}

/// `sum_{n >= start} (n+1)^a 2^{-b n}` for `b > 0`, truncated with a geometric tail bound.
fn poly_geometric_series(a: f64, b: f64, start: u32, tol: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::domain(format!(
            "series with rate 2^(-{b} n) diverges"
        )));
    }
    let term = |n: u32| ((n + 1) as f64).powf(a) * (-(b * n as f64)).exp2();
    let ratio = |n: u32| (((n + 2) as f64) / ((n + 1) as f64)).powf(a) * (-b).exp2();
    let mut acc = CompensatedSum::new();
    let mut n = start;
    loop {
        acc.add(term(n));
        n += 1;
        // ratios decrease in n once a >= 0, so the tail is dominated by a geometric series
        let r = ratio(n);
        if r < 1.0 && (a <= 0.0 || ratio(n) >= ratio(n + 1)) {
            let tail = term(n) / (1.0 - r);
            if tail < tol {
                break;
            }
        }
        if n > 1_000_000 {
            return Err(Error::domain(
                "polynomial-geometric series failed to converge",
            ));
        }
    }
    Ok(acc.value())
}

/// The constants of the moment bound, the Lipschitz bound and the tail estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constants {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub pprime: f64,
    pub c_alpha_p: f64,
    /// `d(alpha, p)` with its series summed from `n = 0`.
    pub d_alpha_p: f64,
    /// `d(alpha, p)` with its series summed from `n = 1`.
    pub d_alpha_p_from_one: f64,
    /// Moment constant for exponent `p'`: `d(alpha, beta, p, p')` when `p' > p`,
    /// `d(alpha, p)` when `p' = p`, `d(alpha, p)^{p'/p}` when `p' < p`.
    pub d_alpha_beta_p_pprime: f64,
    pub d_p_lip: f64,
    pub d1: f64,
    pub d2: f64,
}

fn gaussian_moment_factor(q: f64) -> f64 {
    (q.exp2() / std::f64::consts::PI).sqrt() * libm::tgamma((q + 1.0) / 2.0)
}

/// `d_p = 2^{1/p + 1/2} (1 + 2^{p/2})^{1/p}`.
pub fn d_p_lip(p: f64) -> Result<f64> {
    if !(p > 2.0) {
        return Err(Error::domain(format!("d_p needs p > 2, got p = {p}")));
    }
    Ok((1.0 / p + 0.5).exp2() * (1.0 + (p / 2.0).exp2()).powf(1.0 / p))
}

struct MomentConstant {
    from_zero: f64,
    from_one: f64,
}

fn d_alpha_p(alpha: f64, p: f64, c: f64, tol: f64) -> Result<MomentConstant> {
    let prefactor = (p / 2.0).exp2()
        * (4.0 + ((p - 1.0) / p).exp2()).powf(p)
        * c.powf(p)
        * gaussian_moment_factor(p);
    let b = p / 2.0 - 1.0;
    let s0 = poly_geometric_series(alpha * p, b, 0, tol)?;
    let s1 = poly_geometric_series(alpha * p, b, 1, tol)?;
    Ok(MomentConstant {
        from_zero: prefactor * s0,
        from_one: prefactor * s1,
    })
}

/// Every constant for the parameter tuple `(alpha, beta, p, p')`.
pub fn d_constants(alpha: f64, beta: f64, p: f64, pprime: f64, tol: f64) -> Result<Constants> {
    if !(p > 2.0) {
        return Err(Error::domain(format!("constraint p > 2 violated: p = {p}")));
    }
    if !(pprime > 2.0) {
        return Err(Error::domain(format!(
            "constraint p' > 2 violated: p' = {pprime}"
        )));
    }
    if !(alpha > 1.0 - 1.0 / p) {
        return Err(Error::domain(format!(
            "constraint alpha > 1 - 1/p = {} violated: alpha = {alpha}",
            1.0 - 1.0 / p
        )));
    }
    if pprime > p && !(beta > 1.0 - p / pprime) {
        return Err(Error::domain(format!(
            "constraint beta > 1 - p/p' = {} violated: beta = {beta}",
            1.0 - p / pprime
        )));
    }
    let c = c_alpha_p(alpha, p, tol)?;
    let d = d_alpha_p(alpha, p, c, tol)?;
    let d_pprime = if pprime > p {
        let ratio = pprime / p;
        let c_beta = c_alpha_p(beta, ratio, tol)?;
        let prefactor = (pprime / 2.0).exp2()
            * (2.0 * (2.0 + (-1.0 / p).exp2()) * c).powf(pprime)
            * c_beta.powf(ratio)
            * gaussian_moment_factor(pprime);
        let series = poly_geometric_series(
            alpha * pprime + beta * ratio,
            (0.5 - 1.0 / p) * pprime,
            0,
            tol,
        )?;
        prefactor * series
    } else if pprime == p {
        d.from_zero
    } else {
        d.from_zero.powf(pprime / p)
    };
    let dp = d_p_lip(p)?;
    Ok(Constants {
        alpha,
        beta,
        p,
        pprime,
        c_alpha_p: c,
        d_alpha_p: d.from_zero,
        d_alpha_p_from_one: d.from_one,
        d_alpha_beta_p_pprime: d_pprime,
        d_p_lip: dp,
        d1: d.from_zero.powf(1.0 / p) / dp,
        d2: 2.0 * dp,
    })
}

/// Raw dyadic sum `sum_n (n+1)^{alpha p} sum_k |f((k+1)/2^{n+n(h)} - 1) - f(k/2^{n+n(h)} - 1)|^p`,
/// over every scale the path grid resolves.
pub fn dyadic_sum(path: &SamplePath, h: DyadicTime, p: f64, alpha: f64) -> Result<f64> {
    let nh = h.n_of_h()?;
    let level = path.level();
    if nh > level {
        return Err(Error::Resolution(format!(
            "n(h) = {nh} exceeds the path level {level}"
        )));
    }
    let pow = Power::new(p);
    let v = path.values();
    let mut total = CompensatedSum::new();
    for n in 0..=(level - nh) {
        let scale = n + nh;
        let stride = 1usize << (level - scale);
        let mut inner = CompensatedSum::new();
        let mut k = 0;
        while k + stride < v.len() {
            inner.add(pow.abs_pow(v[k + stride] - v[k]));
            k += stride;
        }
        total.add(((n + 1) as f64).powf(alpha * p) * inner.value());
    }
    Ok(total.value())
}

/// `c(alpha, p) (dyadic sum)^{1/p}`, which dominates
/// `(4 + 2^{(p-1)/p})^{-1} || T_h f - T_0 f ||_p` for the grid path.
pub fn dyadic_bound(path: &SamplePath, h: DyadicTime, p: f64, alpha: f64) -> Result<f64> {
    let c = c_alpha_p(alpha, p, DEFAULT_SERIES_TOL)?;
    let s = dyadic_sum(path, h, p, alpha)?;
    Ok(c * s.powf(1.0 / p))
}

/// [`dyadic_bound`] for the window pair `(h1, h2)`, applied to the path shifted by `h1`.
pub fn window_bound(
    path: &SamplePath,
    h1: DyadicTime,
    h2: DyadicTime,
    p: f64,
    alpha: f64,
) -> Result<f64> {
    let gap = h2
        .checked_sub(&h1)
        .ok_or_else(|| Error::domain(format!("need h1 <= h2, got h1 = {h1}, h2 = {h2}")))?;
    dyadic_bound(&shifted_path(path, h1)?, gap, p, alpha)
}

/// `4 + 2^{(p-1)/p}`.
pub fn norm_bound_factor(p: f64) -> f64 {
    4.0 + ((p - 1.0) / p).exp2()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LscReport {
    pub variation: f64,
    /// `V_p(f_n)` for `n = 1..=refinements`.
    pub perturbed: Vec<f64>,
    pub min_perturbed: f64,
    pub slack: f64,
    pub holds: bool,
}

const LSC_SUPERSAMPLE: usize = 4;

/// Lower-semicontinuity probe.
///
/// `f_n` samples the polygonal interpolant of `seq` at `LSC_SUPERSAMPLE`
/// points per segment and adds deterministic noise of amplitude `2^-n`, so
/// `f_n -> f` uniformly. Checks `V_p(f) <= V_p(f_n) + slack_n` for every
/// `n`, with `slack_n = 2^p p (sup|f| + 1)^{p-1} 2^-n`; `slack` reports `slack_{n_max}`.
pub fn lsc_probe(seq: &[f64], p: f64, refinements: u32) -> Result<LscReport> {
    let variation = pvar_exact(seq, p)?.value;
    if refinements == 0 {
        return Err(Error::domain("lsc probe needs at least one refinement"));
    }
    let fine: Vec<f64> = {
        let mut out = Vec::with_capacity((seq.len() - 1) * LSC_SUPERSAMPLE + 1);
        for w in seq.windows(2) {
            for s in 0..LSC_SUPERSAMPLE {
                let lambda = s as f64 / LSC_SUPERSAMPLE as f64;
                out.push(w[0] + lambda * (w[1] - w[0]));
            }
        }
        out.push(*seq.last().unwrap());
        out
    };
    let mut perturbed = Vec::with_capacity(refinements as usize);
    for n in 1..=refinements {
        let rng = CounterRng::new(Seed(0x4c_5343), 0x4c_5343, n);
        let amplitude = (-(n as f64)).exp2();
        let f_n: Vec<f64> = fine
            .iter()
            .enumerate()
            .map(|(i, x)| x + amplitude * (2.0 * rng.uniform(i as u64) - 1.0))
            .collect();
        perturbed.push(pvar_exact_capped(&f_n, p, usize::MAX)?.value);
    }
    let min_perturbed = perturbed.iter().copied().fold(f64::INFINITY, f64::min);
    let slack_at =
        |n: u32| p.exp2() * p * (sup_abs(seq) + 1.0).powf(p - 1.0) * (-(n as f64)).exp2();
    let holds = perturbed
        .iter()
        .zip(1..=refinements)
        .all(|(v, n)| variation <= v + slack_at(n));
    Ok(LscReport {
        variation,
        perturbed,
        min_perturbed,
        slack: slack_at(refinements),
        holds,
    })
}
