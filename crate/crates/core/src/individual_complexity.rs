//! ε-complexity of an individual sampled function.
//!
//! `δ(h)` is the best-of-family reconstruction error from the uniform subgrid
//! of spacing `h`; `h*(ε)` is the smallest tabulated spacing whose error
//! exceeds `ε` (or 1 when none does), `S(ε) = ln(1/h*)` and the discrete
//! variant is `S_N(ε) = ln(N^k / ⌊h* N⌋^k)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approximation::{best_error, ApproximationMethod};
use crate::error::{Error, Result};
use crate::function_model::{uniform_subgrid, ErrorNorm, SampledFunction};
use crate::generators::{generate, GeneratorSpec};

/// Errors at or below this level count as exact recovery when locating `h*`.
pub const RECOVERY_FLOOR: f64 = 1e-12;

/// Below this value of `⌊h* N⌋` the discrete complexity is flagged coarse.
pub const COARSE_GRID_THRESHOLD: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaPoint {
    pub stride: usize,
    pub h: f64,
    /// Best-of-family error as computed.
    pub raw: f64,
    /// Running maximum of `raw`.
    pub delta: f64,
}

/// Tabulated `δ(h)` with isotonic enforcement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaCurve {
    pub points: Vec<DeltaPoint>,
    /// True when the raw errors were not already nondecreasing.
    pub raw_violation: bool,
}

impl DeltaCurve {
    /// Builds the curve from `(h, raw δ)` pairs with strictly increasing `h`.
    pub fn from_raw(raw: Vec<(usize, f64, f64)>) -> Result<Self> {
        if raw.windows(2).any(|w| w[1].1 <= w[0].1) {
            return Err(Error::InvalidArgument("spacings must be strictly increasing".into()));
        }
        let mut running = 0.0_f64;
        let mut raw_violation = false;
        let points = raw
            .into_iter()
            .map(|(stride, h, value)| {
                if value < running {
                    raw_violation = true;
                }
                running = running.max(value);
                DeltaPoint {
                    stride,
                    h,
                    raw: value,
                    delta: running,
                }
            })
            .collect();
        Ok(Self { points, raw_violation })
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_delta(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityValue {
    pub epsilon: f64,
    pub h_star: f64,
    pub s: f64,
    pub s_n: f64,
    pub n_points: usize,
    pub dim: usize,
    /// `⌊h* N⌋` fell below [`COARSE_GRID_THRESHOLD`].
    pub coarse_warning: bool,
}

/// `δ(h)` at every realizable stride `m = 1..N-1`, `h = m/(N-1)`.
pub fn delta_curve(
    f: &SampledFunction,
    family: &[ApproximationMethod],
    norm: ErrorNorm,
) -> Result<DeltaCurve> {
    if !f.is_normalized() {
        return Err(Error::NotNormalized);
    }
    let n = f.points_per_axis();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 points per axis, got {n}"
        )));
    }
    let raw = (1..n)
        .into_par_iter()
        .map(|stride| {
            let kept = uniform_subgrid(f, stride)?;
            let delta = best_error(f, &kept, family, norm)?;
            Ok((stride, stride as f64 / (n - 1) as f64, delta))
        })
        .collect::<Result<Vec<_>>>()?;
    DeltaCurve::from_raw(raw)
}

/// `inf{h : δ(h) > ε}` on the tabulated spacings, or 1 when no error exceeds `ε`.
///
/// Errors within [`RECOVERY_FLOOR`] are rounding noise and never count as
/// exceedances, so affine functions get `h*(0) = 1`.
pub fn h_star(curve: &DeltaCurve, eps: f64) -> f64 {
    let threshold = eps.max(RECOVERY_FLOOR);
    // enforced δ is nondecreasing, so the first exceedance is the infimum
    let i = curve.points.partition_point(|p| p.delta <= threshold);
    curve.points.get(i).map_or(1.0, |p| p.h)
}

/// `ln(N^k / ⌊h* N⌋^k)`.
pub fn discrete_complexity(h_star: f64, n_points: usize, dim: usize) -> Result<f64> {
    let cells = floor_cells(h_star, n_points);
    if cells == 0 {
        return Err(Error::DiscreteUndefined);
    }
    Ok(dim as f64 * ((n_points as f64).ln() - (cells as f64).ln()))
}

/// `⌊h* N⌋`, guarded against products like `0.01 · 1000` landing just below an integer.
fn floor_cells(h_star: f64, n_points: usize) -> usize {
    let product = h_star * n_points as f64;
    let nearest = product.round();
    if (product - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        product.floor() as usize
    }
}

/// Complexity values read off an existing curve.
pub fn complexity_from_curve(curve: &DeltaCurve, eps: f64, n_points: usize, dim: usize) -> Result<ComplexityValue> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("ε must be nonnegative, got {eps}")));
    }
    let hs = h_star(curve, eps);
    let s_n = discrete_complexity(hs, n_points, dim)?;
    Ok(ComplexityValue {
        epsilon: eps,
        h_star: hs,
        s: (1.0 / hs).ln(),
        s_n,
        n_points,
        dim,
        coarse_warning: floor_cells(hs, n_points) < COARSE_GRID_THRESHOLD,
    })
}

/// `S(ε)` and `S_N(ε)` for a normalized function.
pub fn complexity_at(
    f: &SampledFunction,
    eps: f64,
    family: &[ApproximationMethod],
    norm: ErrorNorm,
) -> Result<ComplexityValue> {
    let curve = delta_curve(f, family, norm)?;
    complexity_from_curve(&curve, eps, f.points_per_axis(), f.dim())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n_points: usize,
    pub s_n: f64,
    pub gap: f64,
}

/// Discrete complexity `S_N(ε)` along grid refinements of one generator.
///
/// The reference is `S(ε)` computed on the finest grid; each row reports
/// `|S_N(ε) - S_ref|`.
pub fn convergence_check(
    generator: &GeneratorSpec,
    eps: f64,
    n_list: &[usize],
    family: &[ApproximationMethod],
    norm: ErrorNorm,
) -> Result<(f64, Vec<ConvergenceRow>)> {
    if n_list.len() < 3 {
        return Err(Error::InvalidArgument("need at least 3 grid sizes".into()));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("grid sizes must be strictly increasing".into()));
    }
    let values = n_list
        .iter()
        .map(|&n| {
            let f = generate(&generator.with_points(n))?.normalize()?;
            complexity_at(&f, eps, family, norm)
        })
        .collect::<Result<Vec<_>>>()?;
    let s_ref = values.last().unwrap().s;
    let rows = values
        .iter()
        .map(|v| ConvergenceRow {
            n_points: v.n_points,
            s_n: v.s_n,
            gap: (v.s_n - s_ref).abs(),
        })
        .collect();
    Ok((s_ref, rows))
}
