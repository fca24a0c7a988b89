//! Numerics for the Brownian frame process `h -> (f(h - 1 + u))_{0 <= u <= 1}`:
//! dyadic path sampling, exact p-variation with dyadic domination bounds,
//! Gaussian tail checks, and the Levy area of the frame process.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod area;
pub mod dyadic;
pub mod error;
pub mod frame;
mod par;
pub mod rng;
pub mod sampler;
pub mod sum;
pub mod tail;
pub mod variation;

pub use area::{
    area_by_regions, area_double_sum, area_ito_form, area_surface, bv2d_levy_area, diagonal_limit,
    region_sets, AreaSurface, DiagonalReport, QvMode, RegionSets,
};
pub use dyadic::{n_of_h, DyadicTime};
pub use error::{Error, Result};
pub use frame::{
    eval_polygonal, frame_difference, frame_eval, polygonal, shifted_path, sup_distance,
    FrameEvaluation, FramePolygonal,
};
pub use rng::Seed;
pub use sampler::{refine, reverse, sample, Ensemble, PathKind, ReversedPath, SamplePath, Sampler};
pub use tail::{
    cm_window_norm, gaussian_abs_moment, lip_pvar_bound, mc_moment_check, tail_experiment,
    TailParams, TailReport,
};
pub use variation::{
    c_alpha_p, d_constants, dyadic_bound, hoelder_seq_bound_check, lsc_probe, pvar_bruteforce,
    pvar_exact, pvar_norm, window_bound, Constants, PVarResult,
};
