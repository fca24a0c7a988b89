//! Browser bindings: sample a path, inspect the p-variation of a frame
//! difference, and draw the Levy area surface.

use wasm_bindgen::prelude::*;

use framepath::{area_surface, frame_difference, pvar_exact, sample, DyadicTime, Seed};

/// Largest path level the demo accepts, keeping each call interactive.
pub const DEMO_MAX_LEVEL: u32 = 13;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn checked_level(level: u32) -> Result<u32, JsError> {
    if level > DEMO_MAX_LEVEL {
        return Err(js_err(format!(
            "level {level} exceeds the demo limit {DEMO_MAX_LEVEL}"
        )));
    }
    Ok(level)
}

fn dyadic(text: &str) -> Result<DyadicTime, JsError> {
    text.parse().map_err(js_err)
}

/// Path values `f(k / 2^level - 1)`, `k = 0..=2^{level+1}`.
#[wasm_bindgen(js_name = samplePath)]
pub fn sample_path(level: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    let path = sample(checked_level(level)?, Seed(u64::from(seed))).map_err(js_err)?;
    Ok(path.values().to_vec())
}

/// The frame difference `T_{h2} f - T_{h1} f` with its p-variation.
#[wasm_bindgen]
pub struct FrameVariation {
    values: Vec<f64>,
    dissection: Vec<u32>,
    pvar: f64,
}

#[wasm_bindgen]
impl FrameVariation {
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// Indices of an optimal dissection.
    #[wasm_bindgen(getter)]
    pub fn dissection(&self) -> Vec<u32> {
        self.dissection.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn pvar(&self) -> f64 {
        self.pvar
    }
}

/// p-variation of `u -> f(h2 - 1 + u) - f(h1 - 1 + u)` on the path grid.
#[wasm_bindgen(js_name = frameVariation)]
pub fn frame_variation(
    level: u32,
    seed: u32,
    h1: &str,
    h2: &str,
    p: f64,
) -> Result<FrameVariation, JsError> {
    let path = sample(checked_level(level)?, Seed(u64::from(seed))).map_err(js_err)?;
    let values = frame_difference(&path, dyadic(h1)?, dyadic(h2)?).map_err(js_err)?;
    let result = pvar_exact(&values, p).map_err(js_err)?;
    Ok(FrameVariation {
        dissection: result.dissection.iter().map(|&i| i as u32).collect(),
        pvar: result.value,
        values,
    })
}

/// Row-major `(2^m + 1)^2` matrix of `A(i / 2^m, j / 2^m)` at sum level `level`.
#[wasm_bindgen(js_name = areaGrid)]
pub fn area_grid(level: u32, seed: u32, m: u32) -> Result<Vec<f64>, JsError> {
    let level = checked_level(level)?;
    let path = sample(level, Seed(u64::from(seed))).map_err(js_err)?;
    let surface = area_surface(&path, m, level).map_err(js_err)?;
    let points = surface.points();
    let mut grid = Vec::with_capacity(points * points);
    for i in 0..points {
        for j in 0..points {
            grid.push(surface.get(i, j).map_err(js_err)?);
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    // JsError can only be built on a wasm target, so the native tests stay on
    // the success paths.

    #[test]
    fn sample_matches_core() {
        let values = sample_path(6, 11).unwrap();
        assert_eq!(values, sample(6, Seed(11)).unwrap().values());
    }

    #[test]
    fn frame_variation_is_consistent() {
        let fv = frame_variation(8, 2, "1/4", "1/2", 4.0).unwrap();
        assert_eq!(fv.values().len(), 257);
        let d = fv.dissection();
        let sum: f64 = d
            .windows(2)
            .map(|w| (fv.values[w[1] as usize] - fv.values[w[0] as usize]).powi(4))
            .sum();
        assert!((sum.powf(0.25) - fv.pvar()).abs() <= 1e-12 * fv.pvar());
    }

    #[test]
    fn area_grid_is_antisymmetric() {
        let grid = area_grid(8, 3, 3).unwrap();
        let k = 9;
        assert_eq!(grid.len(), k * k);
        for i in 0..k {
            assert_eq!(grid[i * k + i], 0.0);
            for j in 0..k {
                assert_eq!(grid[i * k + j], -grid[j * k + i]);
            }
        }
    }
}
