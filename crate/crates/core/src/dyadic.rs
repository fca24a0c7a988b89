//! Dyadic rationals in `[0, 1]`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest denominator exponent accepted for a dyadic time.
pub const MAX_DYADIC_LEVEL: u32 = 62;

/// The number `k / 2^m`, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicTime {
    k: u64,
    m: u32,
}

impl DyadicTime {
    pub const ZERO: DyadicTime = DyadicTime { k: 0, m: 0 };
    pub const ONE: DyadicTime = DyadicTime { k: 1, m: 0 };

    pub fn new(k: u64, m: u32) -> Result<Self> {
        if m > MAX_DYADIC_LEVEL {
            return Err(Error::domain(format!(
                "dyadic level {m} exceeds {MAX_DYADIC_LEVEL}"
            )));
        }
        if k > 1u64 << m {
            return Err(Error::domain(format!("{k}/2^{m} is not in [0, 1]")));
        }
        Ok(Self::reduced(k, m))
    }

    fn reduced(mut k: u64, mut m: u32) -> Self {
        if k == 0 {
            return DyadicTime::ZERO;
        }
        while m > 0 && k.is_multiple_of(2) {
            k /= 2;
            m -= 1;
        }
        DyadicTime { k, m }
    }

    /// Numerator in lowest terms.
    pub fn numerator(&self) -> u64 {
        self.k
    }

    /// Smallest level at which this time lies on the grid.
    pub fn level(&self) -> u32 {
        self.m
    }

    pub fn value(&self) -> f64 {
        self.k as f64 / (1u64 << self.m) as f64
    }

    /// Numerator over `2^level`; fails if the time is finer than that grid.
    pub fn index_at(&self, level: u32) -> Result<u64> {
        if self.m > level {
            return Err(Error::Alignment(format!(
                "{self} does not lie on the level-{level} dyadic grid"
            )));
        }
        Ok(self.k << (level - self.m))
    }

    /// `self - other`, if non-negative.
    pub fn checked_sub(&self, other: &DyadicTime) -> Option<DyadicTime> {
        let m = self.m.max(other.m);
        let a = self.k << (m - self.m);
        let b = other.k << (m - other.m);
        a.checked_sub(b).map(|k| Self::reduced(k, m))
    }

    /// `n(h)`: the unique integer with `2^-n <= h < 2^(1-n)`, computed exactly.
    pub fn n_of_h(&self) -> Result<u32> {
        if self.k == 0 {
            return Err(Error::domain("n(h) is undefined at h = 0"));
        }
        Ok(self.m - (63 - self.k.leading_zeros()))
    }
}

impl PartialOrd for DyadicTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicTime {
    fn cmp(&self, other: &Self) -> Ordering {
        let m = self.m.max(other.m);
        (self.k << (m - self.m)).cmp(&(other.k << (m - other.m)))
    }
}

impl fmt::Display for DyadicTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.m {
            0 => write!(f, "{}", self.k),
            m => write!(f, "{}/{}", self.k, 1u64 << m),
        }
    }
}

impl Serialize for DyadicTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

fn parse_denominator_exponent(den: &str) -> Result<u32> {
    if let Some(exp) = den.strip_prefix("2^") {
        return exp
            .parse::<u32>()
            .map_err(|_| Error::domain(format!("bad exponent in denominator `{den}`")));
    }
    let d: u64 = den
        .parse()
        .map_err(|_| Error::domain(format!("bad denominator `{den}`")))?;
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::domain(format!(
            "denominator {d} is not a power of two"
        )));
    }
    Ok(d.trailing_zeros())
}

impl FromStr for DyadicTime {
    type Err = Error;

    /// Accepts `k/2^m`, `k/N` with `N` a power of two, or an exact decimal such as `0.375`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let k: u64 = num
                .trim()
                .parse()
                .map_err(|_| Error::domain(format!("bad numerator in `{s}`")))?;
            let m = parse_denominator_exponent(den.trim())?;
            return DyadicTime::new(k, m);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty()
            || !int.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
        {
            return Err(Error::domain(format!("`{s}` is not a dyadic time")));
        }
        let frac = frac.trim_end_matches('0');
        if frac.len() > 19 {
            return Err(Error::domain(format!("`{s}` has too many decimal digits")));
        }
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse()
                .map_err(|_| Error::domain(format!("bad integer part in `{s}`")))?
        };
        // value = (int * 10^d + frac) / 10^d = num / (2^d 5^d); need 5^d | num
        let d = frac.len() as u32;
        let frac_val: u128 = if frac.is_empty() {
            0
        } else {
            frac.parse().unwrap()
        };
        let mut num: u128 = u128::from(int) * 10u128.pow(d) + frac_val;
        for _ in 0..d {
            if !num.is_multiple_of(5) {
                return Err(Error::domain(format!("`{s}` is not a dyadic rational")));
            }
            num /= 5;
        }
        let k = u64::try_from(num).map_err(|_| Error::domain(format!("`{s}` is out of range")))?;
        DyadicTime::new(k, d)
    }
}

/// `n(h)` for a real `h` in `(0, 1]`.
pub fn n_of_h(h: f64) -> Result<u32> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::domain(format!("n(h) needs 0 < h <= 1, got {h}")));
    }
    let mut n = 0u32;
    while h < (-(n as f64)).exp2() {
        n += 1;
    }
    Ok(n)
}
