//! Sampled functions on uniform grids over the unit cube.
//!
//! A grid has `N` nodes per axis spanning `[0, 1]` inclusive (spacing
//! `1/(N-1)`), stored flat in row-major order with the last axis varying
//! fastest. A grid spacing `h` maps to the integer stride `round(h (N-1))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values of a scalar function on a uniform `k`-dimensional grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    dim: usize,
    points_per_axis: usize,
    values: Vec<f64>,
    normalized: bool,
}

impl SampledFunction {
    pub fn new(dim: usize, points_per_axis: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidFunction("dimension must be positive".into()));
        }
        if points_per_axis < 2 {
            return Err(Error::InvalidFunction(format!(
                "need at least 2 points per axis, got {points_per_axis}"
            )));
        }
        let expected = checked_pow(points_per_axis, dim)
            .ok_or_else(|| Error::InvalidFunction("grid size overflows".into()))?;
        if values.len() != expected {
            return Err(Error::InvalidFunction(format!(
                "expected {expected} values for N={points_per_axis}, k={dim}, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(format!("value at index {i} is not finite")));
        }
        Ok(Self {
            dim,
            points_per_axis,
            values,
            normalized: false,
        })
    }

    /// One-dimensional series on `[0, 1]`.
    pub fn from_series(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(1, n, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Grid spacing `1/(N-1)`.
    pub fn spacing(&self) -> f64 {
        1.0 / (self.points_per_axis - 1) as f64
    }

    /// Maximum absolute value.
    pub fn uniform_norm(&self) -> f64 {
        uniform_norm(&self.values)
    }

    /// Per-axis node indices of a flat index, first axis first.
    pub fn axis_indices(&self, flat: usize) -> Vec<usize> {
        unflatten(flat, self.points_per_axis, self.dim)
    }

    /// Divides by the uniform norm so that the largest magnitude is 1.
    ///
    /// Already-normalized functions are returned unchanged, which makes
    /// the operation idempotent bit for bit.
    pub fn normalize(&self) -> Result<Self> {
        if self.normalized {
            return Ok(self.clone());
        }
        let norm = self.uniform_norm();
        if norm == 0.0 {
            return Err(Error::ZeroFunction);
        }
        let values = self
            .values
            .iter()
            .map(|v| {
                // exact ±1 at the extremum even when division rounds
                if v.abs() == norm {
                    v.signum()
                } else {
                    v / norm
                }
            })
            .collect();
        Ok(Self {
            dim: self.dim,
            points_per_axis: self.points_per_axis,
            values,
            normalized: true,
        })
    }
}

/// Norm used to measure reconstruction errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ErrorNorm {
    /// Maximum absolute difference.
    Uniform,
    /// `(mean |a_i - b_i|^q)^(1/q)`, `q >= 1`.
    MeanPower(f64),
}

impl ErrorNorm {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ErrorNorm::Uniform => Ok(()),
            ErrorNorm::MeanPower(q) if q.is_finite() && q >= 1.0 => Ok(()),
            ErrorNorm::MeanPower(q) => Err(Error::InvalidNorm(format!(
                "mean-power exponent must be finite and >= 1, got {q}"
            ))),
        }
    }
}

impl Default for ErrorNorm {
    fn default() -> Self {
        ErrorNorm::Uniform
    }
}

/// Indices of the grid nodes kept for reconstruction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgridSelection {
    kept_indices: Vec<usize>,
    scheme_id: u64,
}

impl SubgridSelection {
    /// `kept_indices` must be nonempty, strictly ascending and below `total`.
    pub fn new(kept_indices: Vec<usize>, scheme_id: u64, total: usize) -> Result<Self> {
        if kept_indices.is_empty() {
            return Err(Error::InvalidSelection("no indices kept".into()));
        }
        if kept_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSelection(
                "indices must be strictly ascending".into(),
            ));
        }
        if *kept_indices.last().unwrap() >= total {
            return Err(Error::InvalidSelection(format!(
                "index {} out of range for {total} nodes",
                kept_indices.last().unwrap()
            )));
        }
        Ok(Self {
            kept_indices,
            scheme_id,
        })
    }

    pub fn kept_indices(&self) -> &[usize] {
        &self.kept_indices
    }

    pub fn scheme_id(&self) -> u64 {
        self.scheme_id
    }

    pub fn len(&self) -> usize {
        self.kept_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept_indices.is_empty()
    }

    /// Membership mask over `total` nodes.
    pub fn mask(&self, total: usize) -> Vec<bool> {
        let mut mask = vec![false; total];
        for &i in &self.kept_indices {
            mask[i] = true;
        }
        mask
    }
}

pub fn uniform_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Distance between two value arrays under `norm`.
pub fn error_between(a: &[f64], b: &[f64], norm: ErrorNorm) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    norm.validate()?;
    Ok(norm_of_differences(a.iter().zip(b).map(|(x, y)| x - y), norm))
}

/// Applies `norm` to a stream of differences. Empty input has error 0.
pub(crate) fn norm_of_differences<I>(diffs: I, norm: ErrorNorm) -> f64
where
    I: Iterator<Item = f64>,
{
    match norm {
        ErrorNorm::Uniform => diffs.fold(0.0_f64, |acc, d| acc.max(d.abs())),
        ErrorNorm::MeanPower(q) => {
            let (sum, count) = diffs.fold((0.0_f64, 0usize), |(s, c), d| {
                (s + d.abs().powf(q), c + 1)
            });
            if count == 0 {
                0.0
            } else {
                (sum / count as f64).powf(1.0 / q)
            }
        }
    }
}

/// Keeps every `stride`-th node along each axis plus the last node per axis.
///
/// The effective spacing is `stride / (N - 1)`.
pub fn uniform_subgrid(f: &SampledFunction, stride: usize) -> Result<SubgridSelection> {
    let n = f.points_per_axis();
    if stride == 0 || stride >= n {
        return Err(Error::StrideTooLarge {
            stride,
            points: n,
        });
    }
    let axis = axis_nodes(n, stride);
    let mut kept = Vec::with_capacity(axis.len().pow(f.dim() as u32));
    let mut counter = vec![0usize; f.dim()];
    loop {
        let flat = counter.iter().fold(0usize, |acc, &c| acc * n + axis[c]);
        kept.push(flat);
        // odometer over axis positions, last axis fastest
        let mut d = f.dim();
        loop {
            if d == 0 {
                return SubgridSelection::new(kept, stride as u64, f.len());
            }
            d -= 1;
            counter[d] += 1;
            if counter[d] < axis.len() {
                break;
            }
            counter[d] = 0;
        }
    }
}

/// Node positions kept along one axis for a given stride.
pub(crate) fn axis_nodes(n: usize, stride: usize) -> Vec<usize> {
    let mut nodes: Vec<usize> = (0..n).step_by(stride).collect();
    if *nodes.last().unwrap() != n - 1 {
        nodes.push(n - 1);
    }
    nodes
}

pub(crate) fn unflatten(mut flat: usize, n: usize, dim: usize) -> Vec<usize> {
    let mut idx = vec![0; dim];
    for d in (0..dim).rev() {
        idx[d] = flat % n;
        flat /= n;
    }
    idx
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn series(v: &[f64]) -> SampledFunction {
        SampledFunction::from_series(v.to_vec()).unwrap()
    }

    #[test]
    fn normalize_scales_by_max_abs() {
        let f = series(&[0.0, 2.0, 4.0]).normalize().unwrap();
        assert_eq!(f.values(), &[0.0, 0.5, 1.0]);
        assert!(f.is_normalized());

        let g = series(&[-3.0, 1.0]).normalize().unwrap();
        assert_eq!(g.values()[0], -1.0);
        assert_relative_eq!(g.values()[1], 1.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn normalize_rejects_zero_function() {
        assert_eq!(series(&[0.0, 0.0, 0.0]).normalize(), Err(Error::ZeroFunction));
    }

    #[test]
    fn constructor_validates() {
        assert!(SampledFunction::new(2, 3, vec![0.0; 8]).is_err());
        assert!(SampledFunction::new(1, 1, vec![0.0]).is_err());
        assert!(SampledFunction::new(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(SampledFunction::new(2, 3, vec![0.0; 9]).is_ok());
    }

    #[test]
    fn error_between_examples() {
        assert_eq!(error_between(&[1.0, 2.0], &[1.0, 2.0], ErrorNorm::Uniform).unwrap(), 0.0);
        assert_eq!(
            error_between(&[0.0, 0.0, 0.0], &[1.0, -2.0, 1.0], ErrorNorm::Uniform).unwrap(),
            2.0
        );
        assert_relative_eq!(
            error_between(&[0.0, 0.0], &[3.0, 4.0], ErrorNorm::MeanPower(2.0)).unwrap(),
            12.5_f64.sqrt(),
            max_relative = 1e-15
        );
        assert_eq!(
            error_between(&[0.0], &[0.0, 1.0], ErrorNorm::Uniform),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        );
        assert!(error_between(&[0.0], &[1.0], ErrorNorm::MeanPower(0.5)).is_err());
    }

    #[test]
    fn uniform_subgrid_examples() {
        let f = series(&[0.0; 5]);
        assert_eq!(uniform_subgrid(&f, 2).unwrap().kept_indices(), &[0, 2, 4]);
        assert_eq!(uniform_subgrid(&f, 4).unwrap().kept_indices(), &[0, 4]);
        assert_eq!(uniform_subgrid(&f, 3).unwrap().kept_indices(), &[0, 3, 4]);
        assert_eq!(
            uniform_subgrid(&f, 5),
            Err(Error::StrideTooLarge { stride: 5, points: 5 })
        );
    }

    #[test]
    fn uniform_subgrid_two_dimensional() {
        let f = SampledFunction::new(2, 5, vec![0.0; 25]).unwrap();
        let sel = uniform_subgrid(&f, 2).unwrap();
        assert_eq!(sel.kept_indices(), &[0, 2, 4, 10, 12, 14, 20, 22, 24]);
        assert_eq!(f.axis_indices(14), vec![2, 4]);
    }

    #[test]
    fn stride_one_keeps_everything() {
        let f = SampledFunction::new(2, 4, vec![1.0; 16]).unwrap();
        let sel = uniform_subgrid(&f, 1).unwrap();
        assert_eq!(sel.kept_indices(), (0..16).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn selection_validation() {
        assert!(SubgridSelection::new(vec![], 0, 4).is_err());
        assert!(SubgridSelection::new(vec![1, 1], 0, 4).is_err());
        assert!(SubgridSelection::new(vec![0, 4], 0, 4).is_err());
    }

    fn values_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1e3..1e3_f64, 2..40)
    }

    fn norm_strategy() -> impl Strategy<Value = ErrorNorm> {
        prop_oneof![
            Just(ErrorNorm::Uniform),
            (1.0..6.0_f64).prop_map(ErrorNorm::MeanPower)
        ]
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(v in values_strategy()) {
            prop_assume!(v.iter().any(|x| *x != 0.0));
            let once = series(&v).normalize().unwrap();
            let twice = once.normalize().unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert_eq!(once.uniform_norm(), 1.0);
        }

        #[test]
        fn error_is_symmetric_and_definite(
            pair in (2usize..30).prop_flat_map(|n| (
                prop::collection::vec(-10.0..10.0_f64, n),
                prop::collection::vec(-10.0..10.0_f64, n),
            )),
            norm in norm_strategy(),
        ) {
            let (a, b) = pair;
            let ab = error_between(&a, &b, norm).unwrap();
            let ba = error_between(&b, &a, norm).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert_eq!(error_between(&a, &a, norm).unwrap(), 0.0);
            prop_assert_eq!(ab == 0.0, a == b);
        }

        #[test]
        fn error_satisfies_triangle_inequality(
            triple in (2usize..30).prop_flat_map(|n| (
                prop::collection::vec(-10.0..10.0_f64, n),
                prop::collection::vec(-10.0..10.0_f64, n),
                prop::collection::vec(-10.0..10.0_f64, n),
            )),
            norm in norm_strategy(),
        ) {
            let (a, b, c) = triple;
            let ac = error_between(&a, &c, norm).unwrap();
            let ab = error_between(&a, &b, norm).unwrap();
            let bc = error_between(&b, &c, norm).unwrap();
            prop_assert!(ac <= (ab + bc) * (1.0 + 1e-12) + 1e-12);
        }
    }
}
