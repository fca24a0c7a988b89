//! Levy area of the frame process on the dyadic grid.
//!
//! Integer coordinates are used throughout: at sum level `n` with `N = 2^n`,
//! the time index `i` stands for the time `i / N` in `[-1, 1]`, and
//! `S = sN`, `T = tN`, `D = T - S`. The increment at index `i` is
//! `B_{i+1} - B_i`.

use std::io::{self, Write};

use serde::Serialize;

use crate::dyadic::DyadicTime;
use crate::error::{Error, Result};
use crate::par::map_indices;
use crate::rng::Seed;
use crate::sampler::{reverse, Ensemble, ReversedPath, SamplePath};
use crate::sum::{mean_and_stderr, CompensatedSum};

/// Largest sum level at which region pairs may be enumerated one by one.
pub const MAX_ENUMERATION_LEVEL: u32 = 12;

/// Largest grid level of an [`AreaSurface`].
pub const MAX_SURFACE_LEVEL: u32 = 11;

/// Validated integer coordinates of a level-`n` area evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Indices {
    n: u32,
    big_n: i64,
    s: i64,
    t: i64,
}

impl Indices {
    fn new(n: u32, s: DyadicTime, t: DyadicTime) -> Result<Self> {
        if s >= t {
            return Err(Error::domain(format!(
                "area needs s < t, got s = {s}, t = {t}; use antisymmetry for s > t"
            )));
        }
        if n > 62 {
            return Err(Error::domain(format!("sum level {n} is too large")));
        }
        let gap = t.checked_sub(&s).expect("s < t");
        if gap.value() < (-(n as f64)).exp2() {
            return Err(Error::Resolution(format!(
                "t - s = {gap} is below the level-{n} resolution 2^-{n}"
            )));
        }
        let si = s.index_at(n)?;
        let ti = t.index_at(n)?;
        Ok(Indices {
            n,
            big_n: 1 << n,
            s: si as i64,
            t: ti as i64,
        })
    }

    fn d(&self) -> i64 {
        self.t - self.s
    }
}

/// Path values addressed by level-`n` time indices.
struct Grid<'a> {
    values: &'a [f64],
    stride: usize,
    offset: i64,
}

impl<'a> Grid<'a> {
    /// `B` on `[-1, 1]`: index `i` maps to `f(i / N)`.
    fn forward(path: &'a SamplePath, n: u32) -> Result<Self> {
        let stride = stride(path.level(), n)?;
        Ok(Grid {
            values: path.values(),
            stride,
            offset: 1 << n,
        })
    }

    /// `B-hat` on `[0, 2]`: index `j` maps to `B-hat(j / N)`.
    fn reversed(path: &'a ReversedPath, n: u32) -> Result<Self> {
        let stride = stride(path.level(), n)?;
        Ok(Grid {
            values: path.values(),
            stride,
            offset: 0,
        })
    }

    #[inline]
    fn at(&self, i: i64) -> f64 {
        self.values[(i + self.offset) as usize * self.stride]
    }

    #[inline]
    fn delta(&self, i: i64) -> f64 {
        self.at(i + 1) - self.at(i)
    }
}

fn stride(path_level: u32, n: u32) -> Result<usize> {
    if n > path_level {
        return Err(Error::Resolution(format!(
            "sum level {n} is finer than the path level {path_level}"
        )));
    }
    Ok(1usize << (path_level - n))
}

/// Dyadic double sum
/// `(1/2) sum_{v=1}^{N-1} sum_{u<v} (X_u Y_v - Y_u X_v)` with `X`, `Y` the
/// level-`n` increments of `T_s f` and `T_t f`, in `O(N)`.
pub fn area_double_sum(path: &SamplePath, s: DyadicTime, t: DyadicTime, n: u32) -> Result<f64> {
    let ix = Indices::new(n, s, t)?;
    let g = Grid::forward(path, n)?;
    let (x0, y0) = (ix.s - ix.big_n, ix.t - ix.big_n);
    let mut acc = CompensatedSum::new();
    let mut prefix_x = CompensatedSum::new();
    let mut prefix_y = CompensatedSum::new();
    for v in 0..ix.big_n {
        let xv = g.delta(x0 + v);
        let yv = g.delta(y0 + v);
        acc.add(yv * prefix_x.value());
        acc.add(-xv * prefix_y.value());
        prefix_x.add(xv);
        prefix_y.add(yv);
    }
    Ok(0.5 * acc.value())
}

/// Time-index pairs `(a, b)`: a step of `T_s f` and a step of `T_t f`.
pub type IndexPairs = Vec<(i64, i64)>;

/// Pairs `(row, col)` for `col` in `lo..=hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RowRange {
    pub row: i64,
    pub lo: i64,
    pub hi: i64,
}

impl RowRange {
    pub fn len(&self) -> u64 {
        (self.hi - self.lo + 1).max(0) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }
}

/// The four regions of the rearranged double sum.
///
/// A pair `(a, b)` stands for the product of the increments at time indices
/// `a` (a step of `T_s f`) and `b` (a step of `T_t f`). `rho_plus` carries
/// the positive half of the area, the three `rho_minus` sets the negative
/// half.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSets {
    pub n: u32,
    pub s: DyadicTime,
    pub t: DyadicTime,
    pub rho_plus: Vec<RowRange>,
    pub rho_minus_1: Vec<RowRange>,
    pub rho_minus_2: Vec<RowRange>,
    pub rho_minus_3: Vec<RowRange>,
}

fn nonempty(rows: impl Iterator<Item = RowRange>) -> Vec<RowRange> {
    rows.filter(|r| !r.is_empty()).collect()
}

/// Builds the four regions as contiguous per-row index ranges.
pub fn region_sets(n: u32, s: DyadicTime, t: DyadicTime) -> Result<RegionSets> {
    let ix = Indices::new(n, s, t)?;
    let (big_n, si, ti, d) = (ix.big_n, ix.s, ix.t, ix.d());
    // b - a >= D + 1
    let rho_plus = nonempty((si - big_n..si).map(|a| RowRange {
        row: a,
        lo: (ti - big_n).max(a + d + 1),
        hi: ti - 1,
    }));
    // 0 < b - a <= D - 1
    let rho_minus_1 = nonempty((si - big_n..si).map(|a| RowRange {
        row: a,
        lo: (ti - big_n).max(a + 1),
        hi: (ti - 1).min(a + d - 1),
    }));
    // b < a, both in the overlap of the two windows
    let rho_minus_2 = nonempty((ti - big_n..si).map(|a| RowRange {
        row: a,
        lo: ti - big_n,
        hi: a - 1,
    }));
    let rho_minus_3 = nonempty((ti - big_n..si).map(|a| RowRange {
        row: a,
        lo: a,
        hi: a,
    }));
    Ok(RegionSets {
        n: ix.n,
        s,
        t,
        rho_plus,
        rho_minus_1,
        rho_minus_2,
        rho_minus_3,
    })
}

fn count(rows: &[RowRange]) -> u64 {
    rows.iter().map(RowRange::len).sum()
}

fn enumerate(rows: &[RowRange]) -> Vec<(i64, i64)> {
    rows.iter()
        .flat_map(|r| (r.lo..=r.hi).map(move |c| (r.row, c)))
        .collect()
}

impl RegionSets {
    /// Cardinalities of `rho_plus`, `rho_minus_1`, `rho_minus_2`, `rho_minus_3`.
    pub fn cardinalities(&self) -> [u64; 4] {
        [
            count(&self.rho_plus),
            count(&self.rho_minus_1),
            count(&self.rho_minus_2),
            count(&self.rho_minus_3),
        ]
    }

    pub fn total_cardinality(&self) -> u64 {
        self.cardinalities().iter().sum()
    }

    fn check_enumerable(&self) -> Result<()> {
        if self.n > MAX_ENUMERATION_LEVEL {
            return Err(Error::Capacity {
                what: "region pair enumeration level",
                requested: self.n as u64,
                limit: MAX_ENUMERATION_LEVEL as u64,
            });
        }
        Ok(())
    }

    /// Every pair of every region, in the order `rho_plus`, `rho_minus_1..3`.
    pub fn pairs(&self) -> Result<[IndexPairs; 4]> {
        self.check_enumerable()?;
        Ok([
            enumerate(&self.rho_plus),
            enumerate(&self.rho_minus_1),
            enumerate(&self.rho_minus_2),
            enumerate(&self.rho_minus_3),
        ])
    }

    /// True when no pair lies in two regions.
    pub fn pairwise_disjoint(&self) -> Result<bool> {
        let mut all: Vec<(i64, i64)> = self.pairs()?.into_iter().flatten().collect();
        let total = all.len();
        all.sort_unstable();
        all.dedup();
        Ok(all.len() == total)
    }
}

/// The two halves of the double sum as explicit pair lists:
/// `{(s-1+u, t-1+v) : u < v}` and `{(s-1+v, t-1+u) : u < v}`.
pub fn triangle_pairs(
    n: u32,
    s: DyadicTime,
    t: DyadicTime,
) -> Result<(IndexPairs, IndexPairs)> {
    let ix = Indices::new(n, s, t)?;
    if n > MAX_ENUMERATION_LEVEL {
        return Err(Error::Capacity {
            what: "region pair enumeration level",
            requested: n as u64,
            limit: MAX_ENUMERATION_LEVEL as u64,
        });
    }
    let (x0, y0) = (ix.s - ix.big_n, ix.t - ix.big_n);
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for v in 1..ix.big_n {
        for u in 0..v {
            plus.push((x0 + u, y0 + v));
            minus.push((x0 + v, y0 + u));
        }
    }
    Ok((plus, minus))
}

/// Partial sums of the increment products over each region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionParts {
    pub rho_plus: f64,
    pub rho_minus_1: f64,
    pub rho_minus_2: f64,
    pub rho_minus_3: f64,
}

fn region_sum(g: &Grid<'_>, rows: &[RowRange]) -> f64 {
    let mut acc = CompensatedSum::new();
    for r in rows {
        acc.add(g.delta(r.row) * (g.at(r.hi + 1) - g.at(r.lo)));
    }
    acc.value()
}

/// `(1/2)(sum_rho_plus - sum_rho_minus_1 - sum_rho_minus_2 - sum_rho_minus_3)`.
pub fn area_by_regions(
    path: &SamplePath,
    s: DyadicTime,
    t: DyadicTime,
    n: u32,
) -> Result<(f64, RegionParts)> {
    let sets = region_sets(n, s, t)?;
    let g = Grid::forward(path, n)?;
    let parts = RegionParts {
        rho_plus: region_sum(&g, &sets.rho_plus),
        rho_minus_1: region_sum(&g, &sets.rho_minus_1),
        rho_minus_2: region_sum(&g, &sets.rho_minus_2),
        rho_minus_3: {
            let mut acc = CompensatedSum::new();
            for r in &sets.rho_minus_3 {
                let d = g.delta(r.row);
                acc.add(d * d);
            }
            acc.value()
        },
    };
    let mut total = CompensatedSum::new();
    total.add(parts.rho_plus);
    total.add(-parts.rho_minus_1);
    total.add(-parts.rho_minus_2);
    total.add(-parts.rho_minus_3);
    Ok((0.5 * total.value(), parts))
}

/// How the quadratic-variation term of the Ito form is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QvMode {
    /// Realized `sum (Delta B)^2` over the window overlap.
    Exact,
    /// The limit `1 - t + s`.
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ItoTerms {
    /// `sum_{b=T-N}^{T-1} B_{b-D} Delta_b`.
    pub lagged_integral: f64,
    /// `sum_{v=T-N}^{S-1} B_v Delta_v`.
    pub overlap_integral: f64,
    /// `sum_{j=N-S}^{2N-S-1} Bh_{j+1-D} Delta-hat_j`.
    pub reversed_lagged_integral: f64,
    /// `sum_{j=N-S}^{2N-T-1} Bh_j Delta-hat_j`.
    pub reversed_overlap_integral: f64,
    /// Sum of the four boundary products.
    pub boundary: f64,
    pub realized_qv: f64,
    pub analytic_qv: f64,
}

/// Ito-sum representation with left-endpoint Riemann sums.
///
/// In [`QvMode::Exact`] the result equals [`area_double_sum`] at every
/// finite `n`; in [`QvMode::Analytic`] it differs by
/// `(realized_qv - analytic_qv) / 2`.
pub fn area_ito_form(
    path: &SamplePath,
    s: DyadicTime,
    t: DyadicTime,
    n: u32,
    mode: QvMode,
) -> Result<f64> {
    let terms = ito_terms(path, s, t, n)?;
    let qv = match mode {
        QvMode::Exact => terms.realized_qv,
        QvMode::Analytic => terms.analytic_qv,
    };
    let mut acc = CompensatedSum::new();
    acc.add(terms.lagged_integral);
    acc.add(-terms.overlap_integral);
    acc.add(terms.reversed_lagged_integral);
    acc.add(-terms.reversed_overlap_integral);
    acc.add(terms.boundary);
    acc.add(-qv);
    Ok(0.5 * acc.value())
}

/// The individual terms of [`area_ito_form`], before halving.
pub fn ito_terms(path: &SamplePath, s: DyadicTime, t: DyadicTime, n: u32) -> Result<ItoTerms> {
    let ix = Indices::new(n, s, t)?;
    let b = Grid::forward(path, n)?;
    let rev = reverse(path);
    let bh = Grid::reversed(&rev, n)?;
    let (big_n, si, ti, d) = (ix.big_n, ix.s, ix.t, ix.d());

    let left_sum = |g: &Grid<'_>, lo: i64, hi: i64, lag: i64| {
        let mut acc = CompensatedSum::new();
        for i in lo..hi {
            acc.add(g.at(i - lag) * g.delta(i));
        }
        acc.value()
    };
    let lagged_integral = left_sum(&b, ti - big_n, ti, d);
    let overlap_integral = left_sum(&b, ti - big_n, si, 0);
    let reversed_lagged_integral = left_sum(&bh, big_n - si, 2 * big_n - si, d - 1);
    let reversed_overlap_integral = left_sum(&bh, big_n - si, 2 * big_n - ti, 0);

    let mut boundary = CompensatedSum::new();
    boundary.add(b.at(ti - big_n) * (b.at(si) - b.at(ti - big_n)));
    boundary.add(-b.at(si - big_n) * (b.at(ti) - b.at(ti - big_n)));
    boundary.add(-bh.at(2 * big_n - ti) * (bh.at(2 * big_n - si) - bh.at(2 * big_n - ti)));

    let mut qv = CompensatedSum::new();
    for i in ti - big_n..si {
        let inc = b.delta(i);
        qv.add(inc * inc);
    }
    Ok(ItoTerms {
        lagged_integral,
        overlap_integral,
        reversed_lagged_integral,
        reversed_overlap_integral,
        boundary: boundary.value(),
        realized_qv: qv.value(),
        analytic_qv: (big_n - d) as f64 / big_n as f64,
    })
}

/// `A(s, t)` on all dyadic pairs of a level-`m` grid, upper triangle stored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaSurface {
    grid_level: u32,
    sum_level: u32,
    source_level: u32,
    seed: Seed,
    /// Row-major upper triangle: `(i, j)` with `i < j`.
    upper: Vec<f64>,
}

fn triangle_offset(points: usize, i: usize, j: usize) -> usize {
    // rows 0..i hold (points - 1) + ... + (points - i) entries
    i * (2 * points - i - 1) / 2 + (j - i - 1)
}

impl AreaSurface {
    pub fn grid_level(&self) -> u32 {
        self.grid_level
    }

    pub fn sum_level(&self) -> u32 {
        self.sum_level
    }

    pub fn source_level(&self) -> u32 {
        self.source_level
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    /// Number of grid points `2^m + 1` per axis.
    pub fn points(&self) -> usize {
        (1usize << self.grid_level) + 1
    }

    /// Number of stored upper-triangle entries.
    pub fn stored(&self) -> usize {
        self.upper.len()
    }

    /// `A(i / 2^m, j / 2^m)`; antisymmetric, zero on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        let points = self.points();
        if i >= points || j >= points {
            return Err(Error::Bounds {
                index: i.max(j),
                len: points,
            });
        }
        Ok(match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.upper[triangle_offset(points, i, j)],
            std::cmp::Ordering::Greater => -self.upper[triangle_offset(points, j, i)],
        })
    }

    /// Largest `|A(x) - A(y)|` over grid neighbours `x`, `y` (one step apart in
    /// `s` or in `t`) that both keep `t - s >= min_gap`.
    pub fn off_diagonal_modulus(&self, min_gap: f64) -> f64 {
        let points = self.points();
        let h = 1.0 / (points - 1) as f64;
        let far = |i: usize, j: usize| (j as f64 - i as f64) * h >= min_gap;
        let mut worst = 0.0f64;
        for i in 0..points {
            for j in (i + 1)..points {
                if !far(i, j) {
                    continue;
                }
                let here = self.upper[triangle_offset(points, i, j)];
                if j + 1 < points && far(i, j + 1) {
                    worst = worst.max((self.upper[triangle_offset(points, i, j + 1)] - here).abs());
                }
                if i + 1 < j && far(i + 1, j) {
                    worst = worst.max((self.upper[triangle_offset(points, i + 1, j)] - here).abs());
                }
            }
        }
        worst
    }

    /// Writes `s,t,area` for the stored upper triangle.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "s,t,area")?;
        let points = self.points();
        let h = 1.0 / (points - 1) as f64;
        for i in 0..points {
            for j in (i + 1)..points {
                let a = self.upper[triangle_offset(points, i, j)];
                writeln!(out, "{},{},{a:.16e}", i as f64 * h, j as f64 * h)?;
            }
        }
        Ok(())
    }
}

/// Evaluates the area on every pair `s < t` of the level-`m` dyadic grid at sum level `n`.
pub fn area_surface(path: &SamplePath, m: u32, n: u32) -> Result<AreaSurface> {
    if m > MAX_SURFACE_LEVEL {
        return Err(Error::Capacity {
            what: "area surface grid level",
            requested: m as u64,
            limit: MAX_SURFACE_LEVEL as u64,
        });
    }
    if m > n {
        return Err(Error::Resolution(format!(
            "grid level {m} is finer than the sum level {n}"
        )));
    }
    stride(path.level(), n)?;
    let points = (1usize << m) + 1;
    let cells: Vec<(usize, usize)> = (0..points)
        .flat_map(|i| ((i + 1)..points).map(move |j| (i, j)))
        .collect();
    let upper = map_indices(cells.len() as u64, |c| {
        let (i, j) = cells[c as usize];
        let s = DyadicTime::new(i as u64, m)?;
        let t = DyadicTime::new(j as u64, m)?;
        area_double_sum(path, s, t, n)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(AreaSurface {
        grid_level: m,
        sum_level: n,
        source_level: path.level(),
        seed: path.seed(),
        upper,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalReport {
    pub s: DyadicTime,
    /// The offsets `2^-k`.
    pub offsets: Vec<f64>,
    /// Ensemble mean of `A(s - 2^-k, s)`.
    pub mean_above: Vec<f64>,
    pub se_above: Vec<f64>,
    /// Ensemble mean of `A(s, s - 2^-k)`.
    pub mean_below: Vec<f64>,
    pub se_below: Vec<f64>,
}

/// Ensemble statistics of `A(s - 2^-k, s)` and `A(s, s - 2^-k)` for each `k`.
pub fn diagonal_limit(
    ensemble: Ensemble,
    s: DyadicTime,
    offsets_k: &[u32],
    n: u32,
    level: u32,
) -> Result<DiagonalReport> {
    if ensemble.trials < 2 {
        return Err(Error::domain("diagonal ensemble needs at least 2 paths"));
    }
    let mut lefts = Vec::with_capacity(offsets_k.len());
    for &k in offsets_k {
        if k > n {
            return Err(Error::Resolution(format!(
                "offset 2^-{k} is finer than the sum level {n}"
            )));
        }
        let delta = DyadicTime::new(1, k)?;
        let left = s
            .checked_sub(&delta)
            .ok_or_else(|| Error::domain(format!("s - 2^-{k} is negative for s = {s}")))?;
        lefts.push(left);
    }
    stride(level, n)?;
    let per_path = map_indices(ensemble.trials, |i| {
        let path = ensemble.path(i, level)?;
        lefts
            .iter()
            .map(|&left| area_double_sum(&path, left, s, n))
            .collect::<Result<Vec<f64>>>()
    })
    .into_iter()
    .collect::<Result<Vec<Vec<f64>>>>()?;
    let mut report = DiagonalReport {
        s,
        offsets: offsets_k.iter().map(|&k| (-(k as f64)).exp2()).collect(),
        mean_above: Vec::new(),
        se_above: Vec::new(),
        mean_below: Vec::new(),
        se_below: Vec::new(),
    };
    for column in 0..lefts.len() {
        let above: Vec<f64> = per_path.iter().map(|row| row[column]).collect();
        let below: Vec<f64> = above.iter().map(|a| -a).collect();
        let (ma, sa) = mean_and_stderr(&above).expect("at least 2 paths");
        let (mb, sb) = mean_and_stderr(&below).expect("at least 2 paths");
        report.mean_above.push(ma);
        report.se_above.push(sa);
        report.mean_below.push(mb);
        report.se_below.push(sb);
    }
    Ok(report)
}

/// Oriented area between a planar polygonal path and its chord,
/// `(1/2) sum (x_i - x_0)(y_{i+1} - y_i) - (y_i - y_0)(x_{i+1} - x_i)`.
pub fn bv2d_levy_area(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::shape(format!(
            "coordinate lengths differ: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::shape("planar path needs at least 2 points"));
    }
    let (x0, y0) = (xs[0], ys[0]);
    let mut acc = CompensatedSum::new();
    for i in 0..xs.len() - 1 {
        acc.add((xs[i] - x0) * (ys[i + 1] - ys[i]));
        acc.add(-(ys[i] - y0) * (xs[i + 1] - xs[i]));
    }
    Ok(0.5 * acc.value())
}

/// The loop `(cos(N^2 u) / N, sin(N^2 u) / N)` on `points` mesh points of `[0, 1]`.
pub fn spiral_path(big_n: f64, points: usize) -> (Vec<f64>, Vec<f64>) {
    let w = big_n * big_n;
    (0..points)
        .map(|i| {
            let u = i as f64 / (points - 1) as f64;
            ((w * u).cos() / big_n, (w * u).sin() / big_n)
        })
        .unzip()
}
