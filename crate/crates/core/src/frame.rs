//! The frame operator `T_h f = (f(h - 1 + u))_{0 <= u <= 1}` on the dyadic grid.

use std::io::{self, Write};

use serde::Serialize;

use crate::dyadic::DyadicTime;
use crate::error::{Error, Result};
use crate::sampler::SamplePath;

/// Grid values of `T_h f`, an exact window of the source path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameEvaluation {
    source_level: u32,
    h: DyadicTime,
    values: Vec<f64>,
}

impl FrameEvaluation {
    pub fn source_level(&self) -> u32 {
        self.source_level
    }

    pub fn h(&self) -> DyadicTime {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Writes `j,u,value` rows with `u = j / 2^n`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "j,u,value")?;
        let scale = (-(self.source_level as f64)).exp2();
        for (j, v) in self.values.iter().enumerate() {
            writeln!(out, "{j},{:.16e},{:.16e}", j as f64 * scale, v)?;
        }
        Ok(())
    }
}

/// Path index of `h - 1` on the grid of `path`.
fn window_offset(path: &SamplePath, h: DyadicTime) -> Result<usize> {
    Ok(h.index_at(path.level())? as usize)
}

/// Evaluates `T_h` on the path grid. `h` must be no finer than the grid.
pub fn frame_eval(path: &SamplePath, h: DyadicTime) -> Result<FrameEvaluation> {
    let offset = window_offset(path, h)?;
    let width = 1usize << path.level();
    Ok(FrameEvaluation {
        source_level: path.level(),
        h,
        values: path.values()[offset..=offset + width].to_vec(),
    })
}

/// Grid values of `T_{h2} f - T_{h1} f`, without materializing either window.
pub fn frame_difference(path: &SamplePath, h1: DyadicTime, h2: DyadicTime) -> Result<Vec<f64>> {
    let o1 = window_offset(path, h1)?;
    let o2 = window_offset(path, h2)?;
    let width = 1usize << path.level();
    let v = path.values();
    Ok((0..=width).map(|j| v[o2 + j] - v[o1 + j]).collect())
}

fn check_same_shape(a: &FrameEvaluation, b: &FrameEvaluation) -> Result<()> {
    if a.source_level != b.source_level || a.values.len() != b.values.len() {
        return Err(Error::shape(format!(
            "frame evaluations at levels {} and {} are not comparable",
            a.source_level, b.source_level
        )));
    }
    Ok(())
}

/// `sup_u |a(u) - b(u)|` over the grid.
pub fn sup_distance(a: &FrameEvaluation, b: &FrameEvaluation) -> Result<f64> {
    check_same_shape(a, b)?;
    Ok(sup_distance_values(&a.values, &b.values))
}

fn sup_distance_values(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `g(x) = f(x + h) - f(h - 1)`, held constant for `x > 1 - h`.
///
/// `T_{h2} f - T_{h1} f = T_{h2-h1} g - T_0 g` exactly, so bounds stated for
/// `T_h - T_0` carry over to any window pair.
pub fn shifted_path(path: &SamplePath, h: DyadicTime) -> Result<SamplePath> {
    let offset = window_offset(path, h)?;
    let v = path.values();
    let base = v[offset];
    let last = v.len() - 1;
    let values = (0..v.len())
        .map(|k| v[(k + offset).min(last)] - base)
        .collect();
    SamplePath::from_values(path.level(), values, path.seed())
}

/// Dyadic polygonal approximation of the path-valued path `h -> T_h f`.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePolygonal {
    approx_level: u32,
    knots: Vec<FrameEvaluation>,
}

/// Knots of the level-`m` polygonal approximation at `h = k / 2^m`.
pub fn polygonal(path: &SamplePath, m: u32) -> Result<FramePolygonal> {
    if m > path.level() {
        return Err(Error::Alignment(format!(
            "polygonal level {m} is finer than the path level {}",
            path.level()
        )));
    }
    let knots = (0..=(1u64 << m))
        .map(|k| frame_eval(path, DyadicTime::new(k, m)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(FramePolygonal {
        approx_level: m,
        knots,
    })
}

impl FramePolygonal {
    pub fn approx_level(&self) -> u32 {
        self.approx_level
    }

    pub fn knots(&self) -> &[FrameEvaluation] {
        &self.knots
    }

    /// `X_{(k-1)/2^m} + 2^m (t - (k-1)/2^m) (X_{k/2^m} - X_{(k-1)/2^m})`, entrywise.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::domain(format!("polygonal time {t} outside [0, 1]")));
        }
        let scale = (self.approx_level as f64).exp2();
        let cells = self.knots.len() - 1;
        let left = ((t * scale).floor() as usize).min(cells);
        if left == cells {
            return Ok(self.knots[cells].values.clone());
        }
        let weight = scale * (t - left as f64 / scale);
        let a = &self.knots[left].values;
        let b = &self.knots[left + 1].values;
        Ok(a.iter().zip(b).map(|(x, y)| x + weight * (y - x)).collect())
    }
}

/// Free-function form of [`FramePolygonal::eval`].
pub fn eval_polygonal(fp: &FramePolygonal, t: f64) -> Result<Vec<f64>> {
    fp.eval(t)
}

/// Largest sup-distance between the level-`m` approximation and `T_h` over all grid `h`.
pub fn polygonal_sup_error(path: &SamplePath, m: u32) -> Result<f64> {
    let fp = polygonal(path, m)?;
    let n = path.level();
    let mut worst = 0.0f64;
    for k in 0..=(1u64 << n) {
        let h = DyadicTime::new(k, n)?;
        let exact = frame_eval(path, h)?;
        let approx = fp.eval(h.value())?;
        worst = worst.max(sup_distance_values(&approx, exact.values()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;
    use crate::sampler::sample;

    fn t(s: &str) -> DyadicTime {
        s.parse().unwrap()
    }

    #[test]
    fn left_and_right_windows() {
        let p = sample(5, Seed(1)).unwrap();
        let w = 1usize << 5;
        let left = frame_eval(&p, DyadicTime::ZERO).unwrap();
        assert_eq!(left.values(), &p.values()[..=w]);
        let right = frame_eval(&p, DyadicTime::ONE).unwrap();
        assert_eq!(right.values(), &p.values()[w..]);
    }

    #[test]
    fn ramp_window_is_shift() {
        let p = SamplePath::ramp(6);
        let h = t("5/16");
        let fe = frame_eval(&p, h).unwrap();
        for (j, v) in fe.values().iter().enumerate() {
            assert!((v - (h.value() + j as f64 / 64.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn misaligned_h_rejected() {
        let p = sample(3, Seed(2)).unwrap();
        assert!(matches!(
            frame_eval(&p, t("1/16")),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn sup_distance_cases() {
        let p = sample(6, Seed(3)).unwrap();
        let a = frame_eval(&p, t("1/4")).unwrap();
        assert_eq!(sup_distance(&a, &a).unwrap(), 0.0);
        let ramp = SamplePath::ramp(6);
        let d = sup_distance(
            &frame_eval(&ramp, t("3/4")).unwrap(),
            &frame_eval(&ramp, t("1/8")).unwrap(),
        )
        .unwrap();
        assert!((d - 0.625).abs() < 1e-14);
        let b = frame_eval(&p, t("3/8")).unwrap();
        let mut best = 0.0f64;
        for j in 0..a.values().len() {
            let diff = (a.values()[j] - b.values()[j]).abs();
            if diff > best {
                best = diff;
            }
        }
        assert_eq!(sup_distance(&a, &b).unwrap(), best);
        let other = frame_eval(&sample(5, Seed(3)).unwrap(), t("1/4")).unwrap();
        assert!(matches!(sup_distance(&a, &other), Err(Error::Shape(_))));
    }

    #[test]
    fn window_identity_and_shift_reduction() {
        let p = sample(7, Seed(4)).unwrap();
        let n = 7u32;
        let w = 1usize << n;
        let h1 = t("1/8");
        let h2 = t("5/8");
        let diff = frame_difference(&p, h1, h2).unwrap();
        let h = h2.checked_sub(&h1).unwrap();
        let base = frame_difference(&p, DyadicTime::ZERO, h).unwrap();
        let shift = h1.index_at(n).unwrap() as usize;
        for j in 0..=w {
            if j + shift <= w {
                assert_eq!(diff[j], base[j + shift]);
            }
        }
        let fe = frame_eval(&p, h2).unwrap();
        let f0 = frame_eval(&p, DyadicTime::ZERO).unwrap();
        let o = h2.index_at(n).unwrap() as usize;
        for j in 0..=w {
            assert_eq!(
                fe.values()[j] - f0.values()[j],
                p.values()[o + j] - p.values()[j]
            );
        }
    }

    #[test]
    fn shifted_path_reproduces_window_pairs() {
        let path = sample(6, Seed(3)).unwrap();
        let g = shifted_path(&path, t("3/16")).unwrap();
        assert_eq!(g.values()[0], 0.0);
        let direct = frame_difference(&path, t("3/16"), t("5/8")).unwrap();
        let gap = t("5/8").checked_sub(&t("3/16")).unwrap();
        let via = frame_difference(&g, DyadicTime::ZERO, gap).unwrap();
        for (a, b) in direct.iter().zip(&via) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(shifted_path(&path, DyadicTime::ZERO).unwrap(), path);
    }

    #[test]
    fn polygonal_knots_and_midpoints() {
        let p = sample(6, Seed(5)).unwrap();
        let fp = polygonal(&p, 3).unwrap();
        for k in 0..=8u64 {
            let h = DyadicTime::new(k, 3).unwrap();
            assert_eq!(
                fp.eval(h.value()).unwrap(),
                frame_eval(&p, h).unwrap().values()
            );
        }
        let mid = fp.eval(3.0 / 16.0).unwrap();
        let a = frame_eval(&p, t("1/8")).unwrap();
        let b = frame_eval(&p, t("1/4")).unwrap();
        for (j, m) in mid.iter().enumerate() {
            let avg = 0.5 * (a.values()[j] + b.values()[j]);
            assert!((m - avg).abs() <= 1e-15 * (1.0 + avg.abs()));
        }
        assert!(fp.eval(1.5).is_err());
        assert!(fp.eval(-0.1).is_err());
        assert!(polygonal(&p, 7).is_err());
    }

    #[test]
    fn polygonal_matches_convex_combination() {
        let p = sample(5, Seed(6)).unwrap();
        let fp = polygonal(&p, 2).unwrap();
        for i in 0..50 {
            let tt = (i as f64 * 0.618_033_988_75).fract();
            let k = (tt * 4.0).floor() as u64 + 1;
            let lo = frame_eval(&p, DyadicTime::new(k - 1, 2).unwrap()).unwrap();
            let hi = frame_eval(&p, DyadicTime::new(k, 2).unwrap()).unwrap();
            let lambda = 4.0 * (tt - (k - 1) as f64 / 4.0);
            let expected: Vec<f64> = lo
                .values()
                .iter()
                .zip(hi.values())
                .map(|(x, y)| x + lambda * (y - x))
                .collect();
            assert_eq!(fp.eval(tt).unwrap(), expected);
        }
    }

    #[test]
    fn polygonal_error_vanishes_at_grid_level() {
        let p = sample(6, Seed(7)).unwrap();
        assert_eq!(polygonal_sup_error(&p, 6).unwrap(), 0.0);
        let coarse = polygonal_sup_error(&p, 0).unwrap();
        let fine = polygonal_sup_error(&p, 5).unwrap();
        assert!(fine < coarse);
    }
}
