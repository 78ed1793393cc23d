//! The fixed family of reconstruction methods used to recover discarded
//! grid values from retained ones.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_model::{norm_of_differences, unflatten, ErrorNorm, SampledFunction, SubgridSelection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ApproximationMethod {
    NearestNeighbor,
    /// Linear in 1-d, multilinear on tensor-product subgrids in 2-d.
    PiecewiseLinear,
    /// Natural cubic spline (zero second derivative at both ends).
    CubicSpline,
    /// Least-squares polynomial of the given degree.
    PolynomialLsq { degree: usize },
}

impl ApproximationMethod {
    /// Interpolating methods reproduce retained values exactly.
    pub fn is_interpolating(&self) -> bool {
        !matches!(self, ApproximationMethod::PolynomialLsq { .. })
    }

    /// `PiecewiseLinear, CubicSpline, PolynomialLsq(2), PolynomialLsq(5), NearestNeighbor`.
    pub fn default_family() -> Vec<ApproximationMethod> {
        vec![
            ApproximationMethod::PiecewiseLinear,
            ApproximationMethod::CubicSpline,
            ApproximationMethod::PolynomialLsq { degree: 2 },
            ApproximationMethod::PolynomialLsq { degree: 5 },
            ApproximationMethod::NearestNeighbor,
        ]
    }

    fn min_points(&self) -> usize {
        match self {
            ApproximationMethod::PolynomialLsq { degree } => degree + 1,
            _ => 2,
        }
    }

    fn supports_dim(&self, dim: usize) -> bool {
        match self {
            ApproximationMethod::NearestNeighbor | ApproximationMethod::PiecewiseLinear => {
                dim == 1 || dim == 2
            }
            ApproximationMethod::CubicSpline | ApproximationMethod::PolynomialLsq { .. } => dim == 1,
        }
    }
}

impl fmt::Display for ApproximationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproximationMethod::NearestNeighbor => write!(f, "nearest"),
            ApproximationMethod::PiecewiseLinear => write!(f, "linear"),
            ApproximationMethod::CubicSpline => write!(f, "spline"),
            ApproximationMethod::PolynomialLsq { degree } => write!(f, "poly{degree}"),
        }
    }
}

impl FromStr for ApproximationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "nearest" => Ok(ApproximationMethod::NearestNeighbor),
            "linear" => Ok(ApproximationMethod::PiecewiseLinear),
            "spline" => Ok(ApproximationMethod::CubicSpline),
            other => {
                let degree = other
                    .strip_prefix("poly")
                    .and_then(|d| d.parse::<usize>().ok())
                    .ok_or_else(|| Error::InvalidMethod(format!("unknown method '{other}'")))?;
                if degree == 0 {
                    return Err(Error::InvalidMethod("polynomial degree must be at least 1".into()));
                }
                Ok(ApproximationMethod::PolynomialLsq { degree })
            }
        }
    }
}

/// Predicted values over the whole grid and the error on discarded nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub predicted: Vec<f64>,
    pub method: ApproximationMethod,
    pub error: f64,
}

/// Rebuilds `f` from the nodes in `kept` with a single method.
///
/// The error is measured with `norm` over the discarded nodes only.
pub fn reconstruct(
    f: &SampledFunction,
    kept: &SubgridSelection,
    method: ApproximationMethod,
    norm: ErrorNorm,
) -> Result<ReconstructionResult> {
    norm.validate()?;
    if let ApproximationMethod::PolynomialLsq { degree: 0 } = method {
        return Err(Error::InvalidMethod("polynomial degree must be at least 1".into()));
    }
    if !method.supports_dim(f.dim()) {
        return Err(Error::UnsupportedDimension {
            method: method.to_string(),
            dim: f.dim(),
        });
    }
    if kept.len() < method.min_points() {
        return Err(Error::TooFewPoints {
            kept: kept.len(),
            needed: method.min_points(),
        });
    }
    if let Some(&last) = kept.kept_indices().last() {
        if last >= f.len() {
            return Err(Error::InvalidSelection(format!(
                "index {last} out of range for {} nodes",
                f.len()
            )));
        }
    }

    let idx = kept.kept_indices();
    let values = f.values();
    let mut predicted = match (f.dim(), method) {
        (1, ApproximationMethod::NearestNeighbor) => nearest_1d(values, idx),
        (1, ApproximationMethod::PiecewiseLinear) => linear_1d(values, idx),
        (1, ApproximationMethod::CubicSpline) => natural_spline_1d(values, idx),
        (1, ApproximationMethod::PolynomialLsq { degree }) => polynomial_lsq_1d(values, idx, degree)?,
        (_, ApproximationMethod::NearestNeighbor) => match TensorSubgrid::detect(f, idx) {
            Some(grid) => grid.nearest(f),
            None => nearest_brute_force(f, idx),
        },
        (_, ApproximationMethod::PiecewiseLinear) => TensorSubgrid::detect(f, idx)
            .ok_or(Error::NonTensorSubgrid)?
            .multilinear(f),
        _ => unreachable!("dimension support checked above"),
    };

    let mask = kept.mask(f.len());
    if method.is_interpolating() {
        for &i in idx {
            predicted[i] = values[i];
        }
    }
    let error = norm_of_differences(
        values
            .iter()
            .zip(&predicted)
            .zip(&mask)
            .filter(|(_, &k)| !k)
            .map(|((v, p), _)| v - p),
        norm,
    );
    Ok(ReconstructionResult {
        predicted,
        method,
        error,
    })
}

/// Lowest-error reconstruction over `family`.
///
/// Methods whose preconditions fail are skipped. Ties go to the earlier
/// family member.
pub fn best_reconstruction(
    f: &SampledFunction,
    kept: &SubgridSelection,
    family: &[ApproximationMethod],
    norm: ErrorNorm,
) -> Result<ReconstructionResult> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("approximation family is empty".into()));
    }
    let mut best: Option<ReconstructionResult> = None;
    for &method in family {
        let Ok(result) = reconstruct(f, kept, method, norm) else {
            continue;
        };
        if best.as_ref().map_or(true, |b| result.error < b.error) {
            best = Some(result);
        }
    }
    best.ok_or(Error::AllMethodsFailed)
}

/// Best-of-family error without keeping the predictions.
pub fn best_error(
    f: &SampledFunction,
    kept: &SubgridSelection,
    family: &[ApproximationMethod],
    norm: ErrorNorm,
) -> Result<f64> {
    best_reconstruction(f, kept, family, norm).map(|r| r.error)
}

fn nearest_1d(values: &[f64], idx: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    let mut j = 0;
    for (i, slot) in out.iter_mut().enumerate() {
        while j + 1 < idx.len() && idx[j + 1] <= i {
            j += 1;
        }
        let left = idx[j];
        let pick = if i <= left || j + 1 == idx.len() {
            left
        } else {
            let right = idx[j + 1];
            if right - i < i - left {
                right
            } else {
                left
            }
        };
        *slot = values[pick];
    }
    out
}

fn linear_1d(values: &[f64], idx: &[usize]) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    let first = idx[0];
    let last = *idx.last().unwrap();
    out[..first].fill(values[first]);
    out[last..].fill(values[last]);
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ya, yb) = (values[a], values[b]);
        let span = (b - a) as f64;
        for (i, slot) in out[a..b].iter_mut().enumerate() {
            let t = i as f64 / span;
            *slot = ya + (yb - ya) * t;
        }
    }
    out
}

fn natural_spline_1d(values: &[f64], idx: &[usize]) -> Vec<f64> {
    let m = idx.len();
    if m == 2 {
        return linear_1d(values, idx);
    }
    let x: Vec<f64> = idx.iter().map(|&i| i as f64).collect();
    let y: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();

    // tridiagonal system for interior second derivatives (Thomas algorithm)
    let interior = m - 2;
    let mut diag = vec![0.0; interior];
    let mut upper = vec![0.0; interior];
    let mut rhs = vec![0.0; interior];
    for r in 0..interior {
        let i = r + 1;
        diag[r] = 2.0 * (h[i - 1] + h[i]);
        upper[r] = h[i];
        rhs[r] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    for r in 1..interior {
        let lower = h[r];
        let factor = lower / diag[r - 1];
        diag[r] -= factor * upper[r - 1];
        rhs[r] -= factor * rhs[r - 1];
    }
    let mut second = vec![0.0; m];
    for r in (0..interior).rev() {
        let next = if r + 1 < interior { second[r + 2] } else { 0.0 };
        second[r + 1] = (rhs[r] - upper[r] * next) / diag[r];
    }

    let n = values.len();
    let mut out = vec![0.0; n];
    for seg in 0..m - 1 {
        let (a, b) = (idx[seg], idx[seg + 1]);
        let hs = h[seg];
        for i in a..b {
            let bw = (i as f64 - x[seg]) / hs;
            let aw = 1.0 - bw;
            out[i] = aw * y[seg]
                + bw * y[seg + 1]
                + ((aw * aw * aw - aw) * second[seg] + (bw * bw * bw - bw) * second[seg + 1]) * hs * hs
                    / 6.0;
        }
    }
    // linear continuation outside the retained hull
    let slope_left = (y[1] - y[0]) / h[0] - h[0] * second[1] / 6.0;
    for (i, slot) in out.iter_mut().enumerate().take(idx[0]) {
        *slot = y[0] + slope_left * (i as f64 - x[0]);
    }
    let last = m - 1;
    let slope_right = (y[last] - y[last - 1]) / h[last - 1] + h[last - 1] * second[last - 1] / 6.0;
    for (i, slot) in out.iter_mut().enumerate().skip(idx[last]) {
        *slot = y[last] + slope_right * (i as f64 - x[last]);
    }
    out
}

/// Chebyshev basis on `[-1, 1]` keeps the design matrix well conditioned.
fn chebyshev_row(u: f64, degree: usize, row: &mut [f64]) {
    row[0] = 1.0;
    if degree >= 1 {
        row[1] = u;
    }
    for j in 2..=degree {
        row[j] = 2.0 * u * row[j - 1] - row[j - 2];
    }
}

fn polynomial_lsq_1d(values: &[f64], idx: &[usize], degree: usize) -> Result<Vec<f64>> {
    let n = values.len();
    let scale = 2.0 / (n - 1) as f64;
    let cols = degree + 1;
    let mut row = vec![0.0; cols];
    let mut design = DMatrix::<f64>::zeros(idx.len(), cols);
    for (r, &i) in idx.iter().enumerate() {
        chebyshev_row(i as f64 * scale - 1.0, degree, &mut row);
        for (c, v) in row.iter().enumerate() {
            design[(r, c)] = *v;
        }
    }
    let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&i| values[i]));
    let coeffs = design
        .svd(true, true)
        .solve(&rhs, 1e-13)
        .map_err(|e| Error::InvalidMethod(format!("least-squares solve failed: {e}")))?;
    Ok((0..n)
        .map(|i| {
            chebyshev_row(i as f64 * scale - 1.0, degree, &mut row);
            row.iter().zip(coeffs.iter()).map(|(a, b)| a * b).sum()
        })
        .collect())
}

/// Retained nodes forming a full tensor product of per-axis node sets.
struct TensorSubgrid {
    axes: Vec<Vec<usize>>,
}

impl TensorSubgrid {
    fn detect(f: &SampledFunction, idx: &[usize]) -> Option<Self> {
        let n = f.points_per_axis();
        let dim = f.dim();
        let mut present = vec![vec![false; n]; dim];
        for &flat in idx {
            for (d, c) in unflatten(flat, n, dim).into_iter().enumerate() {
                present[d][c] = true;
            }
        }
        let axes: Vec<Vec<usize>> = present
            .iter()
            .map(|p| p.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect())
            .collect();
        // indices are unique, so equal counts mean every product node is kept
        let product = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.len()))?;
        (product == idx.len()).then_some(Self { axes })
    }

    fn nearest(&self, f: &SampledFunction) -> Vec<f64> {
        let n = f.points_per_axis();
        let near: Vec<Vec<usize>> = self.axes.iter().map(|a| nearest_on_axis(a, n)).collect();
        (0..f.len())
            .map(|flat| {
                let c = unflatten(flat, n, f.dim());
                let src = c
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (d, &ci)| acc * n + near[d][ci]);
                f.values()[src]
            })
            .collect()
    }

    fn multilinear(&self, f: &SampledFunction) -> Vec<f64> {
        let n = f.points_per_axis();
        let dim = f.dim();
        let brackets: Vec<Vec<(usize, usize, f64)>> =
            self.axes.iter().map(|a| brackets_on_axis(a, n)).collect();
        (0..f.len())
            .map(|flat| {
                let c = unflatten(flat, n, dim);
                let mut acc = 0.0;
                for corner in 0..1usize << dim {
                    let mut weight = 1.0;
                    let mut src = 0usize;
                    for d in 0..dim {
                        let (lo, hi, t) = brackets[d][c[d]];
                        let upper = corner >> d & 1 == 1;
                        weight *= if upper { t } else { 1.0 - t };
                        src = src * n + if upper { hi } else { lo };
                    }
                    if weight != 0.0 {
                        acc += weight * f.values()[src];
                    }
                }
                acc
            })
            .collect()
    }
}

fn nearest_on_axis(axis: &[usize], n: usize) -> Vec<usize> {
    let mut j = 0;
    (0..n)
        .map(|i| {
            while j + 1 < axis.len() && axis[j + 1] <= i {
                j += 1;
            }
            let left = axis[j];
            if i <= left || j + 1 == axis.len() {
                left
            } else if axis[j + 1] - i < i - left {
                axis[j + 1]
            } else {
                left
            }
        })
        .collect()
}

/// For each node: bracketing retained nodes and the weight of the upper one.
fn brackets_on_axis(axis: &[usize], n: usize) -> Vec<(usize, usize, f64)> {
    let first = axis[0];
    let last = *axis.last().unwrap();
    let mut j = 0;
    (0..n)
        .map(|i| {
            if i <= first {
                return (first, first, 0.0);
            }
            if i >= last {
                return (last, last, 0.0);
            }
            while axis[j + 1] <= i {
                j += 1;
            }
            let (lo, hi) = (axis[j], axis[j + 1]);
            (lo, hi, (i - lo) as f64 / (hi - lo) as f64)
        })
        .collect()
}

fn nearest_brute_force(f: &SampledFunction, idx: &[usize]) -> Vec<f64> {
    let n = f.points_per_axis();
    let coords: Vec<Vec<usize>> = idx.iter().map(|&k| unflatten(k, n, f.dim())).collect();
    (0..f.len())
        .map(|flat| {
            let c = unflatten(flat, n, f.dim());
            let (best, _) = coords
                .iter()
                .enumerate()
                .map(|(j, k)| {
                    let d2: usize = k.iter().zip(&c).map(|(a, b)| a.abs_diff(*b).pow(2)).sum();
                    (j, d2)
                })
                .min_by_key(|&(j, d2)| (d2, j))
                .unwrap();
            f.values()[idx[best]]
        })
        .collect()
}
