use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use framepath::{DyadicTime, PathKind};

use crate::output::Failure;

pub const SEED_ENV: &str = "FRAMEPATH_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "framepath",
    version,
    about = "Brownian frame process experiments"
)]
pub struct RunConfig {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Base seed; FRAMEPATH_SEED overrides it when set.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Grid level of the sampled paths.
    #[arg(long, global = true, default_value_t = 12)]
    pub level: u32,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, short = 'o', global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Replace the sampler by a closed-form control path.
    #[arg(long, global = true, value_enum)]
    pub deterministic: Option<Deterministic>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Deterministic {
    /// `f(x) = x + 1`.
    Ramp,
}

#[derive(Debug, Args)]
pub struct Exponents {
    #[arg(long, default_value_t = 4.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.8)]
    pub beta: f64,
    #[arg(long, default_value_t = 6.0)]
    pub pprime: f64,
}

#[derive(Debug, Args)]
pub struct Window {
    #[arg(long, default_value = "1/4", value_parser = parse_dyadic)]
    pub h1: DyadicTime,
    #[arg(long, default_value = "1/2", value_parser = parse_dyadic)]
    pub h2: DyadicTime,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one sampled path as `k,x,f` rows.
    Sample,
    /// p-variation norm of a frame difference with its dyadic bound and constants.
    Variation {
        #[command(flatten)]
        exponents: Exponents,
        #[command(flatten)]
        window: Window,
    },
    /// Monte-Carlo survival of the normalized frame norm against the Gaussian tail bound.
    Tail {
        #[arg(long, default_value_t = 4.0)]
        p: f64,
        #[arg(long, default_value_t = 0.8)]
        alpha: f64,
        #[command(flatten)]
        window: Window,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        /// Comma-separated survival thresholds.
        #[arg(long = "r-grid", default_value = "0.5,1,1.5,2,3", value_parser = parse_reals)]
        r_grid: RealList,
    },
    /// Levy area on every dyadic pair s < t of a level-m grid.
    AreaSurface {
        #[arg(long, default_value_t = 5)]
        m: u32,
        /// Sum level; defaults to the path level.
        #[arg(long)]
        n: Option<u32>,
    },
    /// Ensemble means of A(s - 2^-k, s) and A(s, s - 2^-k).
    Diagonal {
        #[arg(long, default_value = "3/4", value_parser = parse_dyadic)]
        s: DyadicTime,
        /// Exponents k of the offsets 2^-k, as `a..b` (inclusive) or a comma list.
        #[arg(long, default_value = "4..10", value_parser = parse_offsets)]
        offsets: OffsetList,
        /// Sum level; defaults to the path level.
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, default_value_t = 200)]
        trials: u64,
    },
    /// The closed-form constants for (alpha, beta, p, p').
    Constants {
        #[command(flatten)]
        exponents: Exponents,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealList(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct OffsetList(pub Vec<u32>);

impl RunConfig {
    /// Lets `FRAMEPATH_SEED` override `--seed`.
    pub fn apply_env(&mut self) -> Result<(), Failure> {
        if let Ok(text) = std::env::var(SEED_ENV) {
            self.global.seed = text.trim().parse().map_err(|_| {
                Failure::Precondition(format!(
                    "{SEED_ENV} = `{text}` is not a 64-bit unsigned integer"
                ))
            })?;
        }
        Ok(())
    }

    pub fn path_kind(&self) -> PathKind {
        match self.global.deterministic {
            Some(Deterministic::Ramp) => PathKind::Ramp,
            None => PathKind::Brownian,
        }
    }
}

pub fn parse_dyadic(text: &str) -> Result<DyadicTime, String> {
    text.parse::<DyadicTime>().map_err(|e| e.to_string())
}

fn parse_reals(text: &str) -> Result<RealList, String> {
    text.split(',')
        .map(|item| {
            item.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{item}` is not a number"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(RealList)
}

fn parse_offsets(text: &str) -> Result<OffsetList, String> {
    let bad = |item: &str| format!("`{item}` is not a nonnegative integer");
    if let Some((a, b)) = text.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad(a))?;
        let b: u32 = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| bad(b))?;
        if a > b {
            return Err(format!("empty offset range {a}..{b}"));
        }
        return Ok(OffsetList((a..=b).collect()));
    }
    text.split(',')
        .map(|item| item.trim().parse::<u32>().map_err(|_| bad(item)))
        .collect::<Result<Vec<_>, _>>()
        .map(OffsetList)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_syntax() {
        assert_eq!(
            parse_offsets("4..10").unwrap().0,
            (4..=10).collect::<Vec<_>>()
        );
        assert_eq!(parse_offsets("4..=6").unwrap().0, vec![4, 5, 6]);
        assert_eq!(parse_offsets("3,5").unwrap().0, vec![3, 5]);
        assert!(parse_offsets("6..4").is_err());
        assert!(parse_offsets("x").is_err());
    }

    #[test]
    fn reals_syntax() {
        assert_eq!(parse_reals("0.5, 1,2").unwrap().0, vec![0.5, 1.0, 2.0]);
        assert!(parse_reals("1,a").is_err());
    }

    #[test]
    fn dyadic_flags_are_exact() {
        assert_eq!(
            parse_dyadic("3/2^3").unwrap(),
            DyadicTime::new(3, 3).unwrap()
        );
        assert_eq!(
            parse_dyadic("0.375").unwrap(),
            DyadicTime::new(3, 3).unwrap()
        );
        assert!(parse_dyadic("0.3").is_err());
        assert!(parse_dyadic("1/3").is_err());
    }

    #[test]
    fn command_line_shape() {
        let c = RunConfig::try_parse_from([
            "framepath",
            "diagonal",
            "--s",
            "3/4",
            "--offsets",
            "4..10",
            "--n",
            "14",
            "--trials",
            "200",
            "--seed",
            "1",
        ])
        .unwrap();
        assert_eq!(c.global.seed, 1);
        match c.command {
            Command::Diagonal {
                n,
                trials,
                ref offsets,
                ..
            } => {
                assert_eq!((n, trials), (Some(14), 200));
                assert_eq!(offsets.0.len(), 7);
            }
            _ => panic!("wrong subcommand"),
        }
        assert!(RunConfig::try_parse_from(["framepath", "variation", "--h1", "0.3"]).is_err());
    }
}
