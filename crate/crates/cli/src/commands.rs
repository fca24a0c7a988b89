use std::io::Write;

use serde::Serialize;

use framepath::area::{area_surface, diagonal_limit, DiagonalReport};
use framepath::frame::frame_difference;
use framepath::tail::{tail_experiment, TailParams};
use framepath::variation::{
    d_constants, norm_bound_factor, pvar_exact, window_bound, Constants, DEFAULT_SERIES_TOL,
};
use framepath::{sample, DyadicTime, Ensemble, PathKind, SamplePath, Seed};

use crate::args::{Command, Exponents, Format, RunConfig, Window};
use crate::output::{csv, json, Failure};

pub fn dispatch(config: &RunConfig) -> Result<Vec<u8>, Failure> {
    let g = &config.global;
    let seed = Seed(g.seed);
    let kind = config.path_kind();
    let one_path = |level| -> Result<SamplePath, Failure> {
        Ok(match kind {
            PathKind::Brownian => sample(level, seed)?,
            PathKind::Ramp => Ensemble::ramp(1).path(0, level)?,
        })
    };
    match &config.command {
        Command::Sample => {
            let path = one_path(g.level)?;
            match g.format.unwrap_or(Format::Csv) {
                Format::Csv => csv(|w| path.write_csv(w)),
                Format::Json => json(&path),
            }
        }
        Command::Variation { exponents, window } => {
            json_only(g.format, "variation")?;
            let path = one_path(g.level)?;
            json(&variation_report(&path, kind, exponents, window)?)
        }
        Command::Tail {
            p,
            alpha,
            window,
            trials,
            r_grid,
        } => {
            let params = TailParams {
                p: *p,
                alpha: *alpha,
                h1: window.h1,
                h2: window.h2,
                level: g.level,
                trials: *trials,
                seed,
                kind,
            };
            let report = tail_experiment(params, &r_grid.0)?;
            match g.format.unwrap_or(Format::Json) {
                Format::Csv => csv(|w| report.write_csv(w)),
                Format::Json => json(&report),
            }
        }
        Command::AreaSurface { m, n } => {
            let path = one_path(g.level)?;
            let surface = area_surface(&path, *m, n.unwrap_or(g.level))?;
            match g.format.unwrap_or(Format::Csv) {
                Format::Csv => csv(|w| surface.write_csv(w)),
                Format::Json => json(&surface),
            }
        }
        Command::Diagonal {
            s,
            offsets,
            n,
            trials,
        } => {
            let ensemble = Ensemble {
                kind,
                seed,
                trials: *trials,
            };
            let report = diagonal_limit(ensemble, *s, &offsets.0, n.unwrap_or(g.level), g.level)?;
            match g.format.unwrap_or(Format::Json) {
                Format::Csv => csv(|w| diagonal_csv(&report, w)),
                Format::Json => json(&report),
            }
        }
        Command::Constants { exponents, tol } => {
            json_only(g.format, "constants")?;
            let Exponents {
                p,
                alpha,
                beta,
                pprime,
            } = *exponents;
            json(&d_constants(alpha, beta, p, pprime, *tol)?)
        }
    }
}

fn json_only(format: Option<Format>, command: &str) -> Result<(), Failure> {
    match format {
        Some(Format::Csv) => Err(Failure::Precondition(format!("{command} writes JSON only"))),
        _ => Ok(()),
    }
}

#[derive(Debug, Serialize)]
struct VariationParams {
    p: f64,
    alpha: f64,
    beta: f64,
    pprime: f64,
    h1: DyadicTime,
    h2: DyadicTime,
    level: u32,
    seed: Seed,
    path: PathKind,
}

#[derive(Debug, Serialize)]
struct VariationReport {
    params: VariationParams,
    sup: f64,
    pvar: f64,
    pvar_norm: f64,
    dissection_len: usize,
    /// `c(alpha,p) (dyadic sum)^{1/p}`; absent when `h1 = h2`.
    dyadic_bound: Option<f64>,
    bound_factor: f64,
    /// `bound_factor * dyadic_bound / pvar_norm`; absent when the norm vanishes.
    bound_ratio: Option<f64>,
    constants: Constants,
}

fn variation_report(
    path: &SamplePath,
    kind: PathKind,
    exponents: &Exponents,
    window: &Window,
) -> Result<VariationReport, Failure> {
    let Exponents {
        p,
        alpha,
        beta,
        pprime,
    } = *exponents;
    let Window { h1, h2 } = *window;
    if h1 > h2 {
        return Err(Failure::Precondition(format!(
            "need h1 <= h2, got h1 = {h1}, h2 = {h2}"
        )));
    }
    let constants = d_constants(alpha, beta, p, pprime, DEFAULT_SERIES_TOL)?;
    let diff = frame_difference(path, h1, h2)?;
    let pv = pvar_exact(&diff, p)?;
    let sup = diff.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let norm = sup + pv.value;
    let dyadic_bound = if h1 == h2 {
        None
    } else {
        Some(window_bound(path, h1, h2, p, alpha)?)
    };
    let factor = norm_bound_factor(p);
    let bound_ratio = match dyadic_bound {
        Some(b) if norm > 0.0 => Some(factor * b / norm),
        _ => None,
    };
    Ok(VariationReport {
        params: VariationParams {
            p,
            alpha,
            beta,
            pprime,
            h1,
            h2,
            level: path.level(),
            seed: path.seed(),
            path: kind,
        },
        sup,
        pvar: pv.value,
        pvar_norm: norm,
        dissection_len: pv.dissection.len(),
        dyadic_bound,
        bound_factor: factor,
        bound_ratio,
        constants,
    })
}

fn diagonal_csv(report: &DiagonalReport, w: &mut Vec<u8>) -> std::io::Result<()> {
    writeln!(w, "offset,mean_above,se_above,mean_below,se_below")?;
    for i in 0..report.offsets.len() {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            report.offsets[i],
            report.mean_above[i],
            report.se_above[i],
            report.mean_below[i],
            report.se_below[i]
        )?;
    }
    Ok(())
}
