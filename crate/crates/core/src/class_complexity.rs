//! Exact ε-complexity of bounded sets of functions sharing a modulus of
//! continuity, measured in the uniform norm.
//!
//! For a bounded set `U` with radius `R = sup ‖x‖` in `k` dimensions the
//! complexity is `(1/R) ln(√k / (2 ω⁻¹(ε)))`. The minimax recovery error on a
//! grid of spacing `h` is `ω(√k h / 2)`, attained at the center of a cell when
//! all vertex values coincide; [`minimax_cell_error_oracle`] recomputes it by
//! brute force.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nondecreasing continuity modulus with `ω(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModulusOfContinuity {
    /// `ω(h) = L h^p`.
    Holder { l: f64, p: f64 },
    /// Piecewise-linear through `(h, ω(h))` knots starting at `(0, 0)`.
    Tabulated(Vec<(f64, f64)>),
}

impl ModulusOfContinuity {
    pub fn holder(l: f64, p: f64) -> Result<Self> {
        let m = ModulusOfContinuity::Holder { l, p };
        m.validate()?;
        Ok(m)
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        let m = ModulusOfContinuity::Tabulated(knots);
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModulusOfContinuity::Holder { l, p } => {
                if !(l.is_finite() && *l > 0.0) {
                    return Err(Error::InvalidModulus(format!("L must be positive, got {l}")));
                }
                if !(*p > 0.0 && *p <= 1.0) {
                    return Err(Error::InvalidModulus(format!("p must lie in (0, 1], got {p}")));
                }
                Ok(())
            }
            ModulusOfContinuity::Tabulated(knots) => {
                if knots.len() < 2 {
                    return Err(Error::InvalidModulus("need at least two knots".into()));
                }
                if knots[0] != (0.0, 0.0) {
                    return Err(Error::InvalidModulus("first knot must be (0, 0)".into()));
                }
                if knots.iter().any(|(h, w)| !h.is_finite() || !w.is_finite()) {
                    return Err(Error::InvalidModulus("knots must be finite".into()));
                }
                // abscissae strictly increasing, ordinates nondecreasing
                // (flat segments are where the generalized inverse matters)
                for w in knots.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::InvalidModulus(
                            "knot abscissae must be strictly increasing".into(),
                        ));
                    }
                    if w[1].1 < w[0].1 {
                        return Err(Error::InvalidModulus(
                            "knot ordinates must be nondecreasing".into(),
                        ));
                    }
                }
                if knots.last().unwrap().1 <= 0.0 {
                    return Err(Error::InvalidModulus("modulus is identically zero".into()));
                }
                Ok(())
            }
        }
    }

    /// `ω(h)`.
    pub fn eval(&self, h: f64) -> Result<f64> {
        if !(h >= 0.0) {
            return Err(Error::InvalidArgument(format!("h must be nonnegative, got {h}")));
        }
        match self {
            ModulusOfContinuity::Holder { l, p } => Ok(if h == 0.0 { 0.0 } else { l * h.powf(*p) }),
            ModulusOfContinuity::Tabulated(knots) => {
                let last = knots.last().unwrap().0;
                if h > last {
                    return Err(Error::OutOfRange { h, last });
                }
                // first knot with abscissa >= h
                let j = knots.partition_point(|(x, _)| *x < h);
                if j == 0 {
                    return Ok(knots[0].1);
                }
                let (x0, y0) = knots[j - 1];
                let (x1, y1) = knots[j];
                if h == x1 {
                    return Ok(y1);
                }
                Ok(y0 + (y1 - y0) * (h - x0) / (x1 - x0))
            }
        }
    }

    /// Generalized inverse `min{h : ω(h) = ε}`.
    pub fn inverse(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
        }
        match self {
            ModulusOfContinuity::Holder { l, p } => Ok((eps / l).powf(1.0 / p)),
            ModulusOfContinuity::Tabulated(knots) => {
                let sup = knots.last().unwrap().1;
                if eps > sup {
                    return Err(Error::NotAttained { eps, sup });
                }
                // first knot whose ordinate reaches ε; ordinates are
                // nondecreasing so everything to the left is strictly below
                let j = knots.partition_point(|(_, w)| *w < eps);
                let (x1, y1) = knots[j];
                if y1 == eps {
                    return Ok(x1);
                }
                let (x0, y0) = knots[j - 1];
                Ok(x0 + (x1 - x0) * (eps - y0) / (y1 - y0))
            }
        }
    }
}

/// A bounded set `U` in the class of functions with a given modulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub modulus: ModulusOfContinuity,
    pub radius: f64,
    pub dim: usize,
}

impl ClassSpec {
    pub fn new(modulus: ModulusOfContinuity, radius: f64, dim: usize) -> Result<Self> {
        modulus.validate()?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidClass(format!("radius must be positive, got {radius}")));
        }
        if dim == 0 {
            return Err(Error::InvalidClass("dimension must be at least 1".into()));
        }
        Ok(Self { modulus, radius, dim })
    }

    fn half_diagonal(&self) -> f64 {
        (self.dim as f64).sqrt() / 2.0
    }
}

/// Coefficients of `S_cl(ε) = A + B ln ε` for a Hölder class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderCoefficients {
    pub a: f64,
    pub b: f64,
}

impl HolderCoefficients {
    pub fn at(&self, eps: f64) -> f64 {
        self.a + self.b * eps.ln()
    }
}

/// `(1/R) ln(√k / (2 ω⁻¹(ε)))`.
///
/// Fails with [`Error::ErrorTooLarge`] when `ω⁻¹(ε) > √k/2`, where the
/// formula would turn negative.
pub fn class_complexity(spec: &ClassSpec, eps: f64) -> Result<f64> {
    let inverse = spec.modulus.inverse(eps)?;
    let half_diagonal = spec.half_diagonal();
    if inverse > half_diagonal * (1.0 + 1e-12) {
        return Err(Error::ErrorTooLarge {
            eps,
            inverse,
            half_diagonal,
        });
    }
    Ok(((half_diagonal / inverse).ln() / spec.radius).max(0.0))
}

/// Closed-form `(A, B)` for a Hölder modulus `L h^p`.
pub fn holder_coefficients(spec: &ClassSpec) -> Result<HolderCoefficients> {
    match spec.modulus {
        ModulusOfContinuity::Holder { l, p } => {
            let r = spec.radius;
            Ok(HolderCoefficients {
                a: (spec.half_diagonal().ln() + l.ln() / p) / r,
                b: -1.0 / (p * r),
            })
        }
        ModulusOfContinuity::Tabulated(_) => Err(Error::NotHolder),
    }
}

/// Minimax recovery error on a grid of spacing `h`: `ω(√k h / 2)`.
pub fn minimax_error(modulus: &ModulusOfContinuity, h: f64, dim: usize) -> Result<f64> {
    modulus.eval((dim as f64).sqrt() * h / 2.0)
}

/// Brute-force worst-case recovery error inside one grid cell.
///
/// Scans a `resolution^k` lattice of points `τ` in the cell `[0, h]^k`
/// (endpoints included) and returns `max_τ min_i ω(‖τ - t_i‖)` over the
/// `2^k` vertices `t_i`. This is the error of the midpoint estimator when
/// every vertex value is equal, the configuration that maximizes the
/// feasible interval (see [`feasible_interval`]).
pub fn minimax_cell_error_oracle(
    modulus: &ModulusOfContinuity,
    h: f64,
    dim: usize,
    resolution: usize,
) -> Result<f64> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidArgument(format!("h must lie in (0, 1], got {h}")));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!(
            "τ resolution must be at least 2, got {resolution}"
        )));
    }
    let total = (0..dim)
        .try_fold(1usize, |acc, _| acc.checked_mul(resolution))
        .ok_or_else(|| Error::InvalidArgument("τ lattice too large".into()))?;
    let step = h / (resolution - 1) as f64;
    let vertices: Vec<Vec<f64>> = (0..1usize << dim)
        .map(|mask| {
            (0..dim)
                .map(|d| if mask >> d & 1 == 1 { h } else { 0.0 })
                .collect()
        })
        .collect();

    // any partition works: max is exact and order-independent
    (0..total)
        .into_par_iter()
        .with_min_len(1024)
        .map(|flat| {
            let mut rest = flat;
            let tau: Vec<f64> = (0..dim)
                .map(|_| {
                    let j = rest % resolution;
                    rest /= resolution;
                    j as f64 * step
                })
                .collect();
            let nearest = vertices
                .iter()
                .map(|v| {
                    v.iter()
                        .zip(&tau)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            modulus.eval(nearest)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Set of values `x(τ)` consistent with known vertex values.
///
/// Given values `x(t_i)` and distances `r_i = ‖τ - t_i‖`, every admissible
/// `x(τ)` lies in `∩ [x(t_i) - ω(r_i), x(t_i) + ω(r_i)]`. The minimax
/// estimate is the midpoint and its error is half the length. Returns
/// `None` for an empty intersection (inadmissible vertex values).
pub fn feasible_interval(
    modulus: &ModulusOfContinuity,
    vertex_values: &[f64],
    distances: &[f64],
) -> Result<Option<(f64, f64)>> {
    if vertex_values.len() != distances.len() {
        return Err(Error::LengthMismatch {
            left: vertex_values.len(),
            right: distances.len(),
        });
    }
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (&x, &r) in vertex_values.iter().zip(distances) {
        let w = modulus.eval(r)?;
        lo = lo.max(x - w);
        hi = hi.min(x + w);
    }
    Ok((lo <= hi).then_some((lo, hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn holder(l: f64, p: f64) -> ModulusOfContinuity {
        ModulusOfContinuity::holder(l, p).unwrap()
    }

    fn spec(l: f64, p: f64, r: f64, k: usize) -> ClassSpec {
        ClassSpec::new(holder(l, p), r, k).unwrap()
    }

    #[test]
    fn modulus_eval_examples() {
        assert_relative_eq!(holder(1.0, 1.0).eval(0.3).unwrap(), 0.3);
        assert_relative_eq!(holder(2.0, 0.5).eval(0.25).unwrap(), 1.0);
        let tab = ModulusOfContinuity::tabulated(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_relative_eq!(tab.eval(0.5).unwrap(), 0.5);
        assert_eq!(tab.eval(0.0).unwrap(), 0.0);
        assert_eq!(holder(3.0, 0.7).eval(0.0).unwrap(), 0.0);
        assert_eq!(tab.eval(1.5), Err(Error::OutOfRange { h: 1.5, last: 1.0 }));
    }

    #[test]
    fn modulus_inverse_examples() {
        assert_relative_eq!(holder(1.0, 1.0).inverse(0.1).unwrap(), 0.1);
        assert_relative_eq!(holder(1.0, 0.5).inverse(0.5).unwrap(), 0.25);
        let flat = ModulusOfContinuity::tabulated(vec![
            (0.0, 0.0),
            (0.2, 0.5),
            (0.4, 0.5),
            (1.0, 1.0),
        ])
        .unwrap();
        assert_relative_eq!(flat.inverse(0.5).unwrap(), 0.2);
        assert_relative_eq!(flat.inverse(0.25).unwrap(), 0.1);
        assert_relative_eq!(flat.inverse(0.75).unwrap(), 0.7);
        assert!(matches!(flat.inverse(1.5), Err(Error::NotAttained { .. })));
    }

    #[test]
    fn modulus_validation() {
        assert!(ModulusOfContinuity::holder(0.0, 1.0).is_err());
        assert!(ModulusOfContinuity::holder(1.0, 1.5).is_err());
        assert!(ModulusOfContinuity::holder(1.0, 0.0).is_err());
        assert!(ModulusOfContinuity::tabulated(vec![(0.1, 0.0), (1.0, 1.0)]).is_err());
        assert!(ModulusOfContinuity::tabulated(vec![(0.0, 0.0), (0.5, 1.0), (0.4, 2.0)]).is_err());
        assert!(ModulusOfContinuity::tabulated(vec![(0.0, 0.0), (0.5, 1.0), (0.6, 0.9)]).is_err());
    }

    #[test]
    fn class_complexity_examples() {
        assert_relative_eq!(
            class_complexity(&spec(1.0, 1.0, 1.0, 1), 0.1).unwrap(),
            5.0_f64.ln(),
            max_relative = 1e-12
        );
        assert_eq!(class_complexity(&spec(1.0, 1.0, 1.0, 1), 0.5).unwrap(), 0.0);
        assert_relative_eq!(
            class_complexity(&spec(1.0, 1.0, 1.0, 4), 0.5).unwrap(),
            2.0_f64.ln(),
            max_relative = 1e-12
        );
        assert!(matches!(
            class_complexity(&spec(1.0, 1.0, 1.0, 1), 0.6),
            Err(Error::ErrorTooLarge { .. })
        ));
    }

    #[test]
    fn holder_coefficient_examples() {
        let c = holder_coefficients(&spec(1.0, 1.0, 1.0, 1)).unwrap();
        assert_relative_eq!(c.a, 0.5_f64.ln(), max_relative = 1e-12);
        assert_eq!(c.b, -1.0);
        let c = holder_coefficients(&spec(1.0, 0.5, 1.0, 1)).unwrap();
        assert_relative_eq!(c.a, -0.693_147_180_559_945_3, max_relative = 1e-12);
        assert_eq!(c.b, -2.0);
        let c = holder_coefficients(&spec(1.0, 1.0, 2.0, 1)).unwrap();
        assert_relative_eq!(c.a, -0.346_573_590_279_972_6, max_relative = 1e-12);
        assert_eq!(c.b, -0.5);

        let tab = ModulusOfContinuity::tabulated(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(
            holder_coefficients(&ClassSpec::new(tab, 1.0, 1).unwrap()),
            Err(Error::NotHolder)
        );
    }

    #[test]
    fn oracle_examples() {
        let w = holder(1.0, 1.0);
        let one = minimax_cell_error_oracle(&w, 0.2, 1, 1001).unwrap();
        assert!((one - 0.1).abs() <= 0.2 / 1000.0 + 1e-12);
        let two = minimax_cell_error_oracle(&w, 0.2, 2, 201).unwrap();
        assert!((two - 0.141_421_356_237_309_5).abs() <= 2f64.sqrt() * 0.2 / 200.0 + 1e-12);
        let tiny = minimax_cell_error_oracle(&w, 1e-9, 1, 11).unwrap();
        assert!(tiny < 1e-9);
    }

    #[test]
    fn oracle_converges_with_resolution() {
        // even resolutions miss the cell center, so the scan approaches from below
        let w = holder(1.0, 0.5);
        let h = 0.3;
        let exact = minimax_error(&w, h, 1).unwrap();
        let coarse = minimax_cell_error_oracle(&w, h, 1, 500).unwrap();
        let fine = minimax_cell_error_oracle(&w, h, 1, 1000).unwrap();
        assert!(coarse <= fine && fine <= exact + 1e-15);
        assert!((fine - coarse).abs() < w.eval(h / 499.0).unwrap());
        assert!(exact - fine <= w.eval(h / 1000.0).unwrap());
    }

    #[test]
    fn oracle_rejects_bad_input() {
        let w = holder(1.0, 1.0);
        assert!(minimax_cell_error_oracle(&w, 0.0, 1, 11).is_err());
        assert!(minimax_cell_error_oracle(&w, 1.5, 1, 11).is_err());
        assert!(minimax_cell_error_oracle(&w, 0.5, 1, 1).is_err());
    }

    #[test]
    fn oracle_is_partition_independent() {
        let w = holder(1.3, 0.7);
        let reference = minimax_cell_error_oracle(&w, 0.4, 2, 41).unwrap();
        for threads in [1, 3, 8] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let got = pool.install(|| minimax_cell_error_oracle(&w, 0.4, 2, 41).unwrap());
            assert_eq!(got.to_bits(), reference.to_bits());
        }
    }

    /// Random admissible vertex values never widen the feasible interval
    /// beyond the constant-vertex configuration.
    #[test]
    fn constant_vertices_maximize_feasible_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(k, p) in &[(1usize, 1.0), (1, 0.5), (2, 1.0), (2, 0.6), (3, 0.8)] {
            let w = holder(1.0, p);
            let h = 0.25;
            let vertices: Vec<Vec<f64>> = (0..1usize << k)
                .map(|m| (0..k).map(|d| if m >> d & 1 == 1 { h } else { 0.0 }).collect())
                .collect();
            for _ in 0..400 {
                let tau: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * h).collect();
                let dist: Vec<f64> = vertices
                    .iter()
                    .map(|v| v.iter().zip(&tau).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                    .collect();
                let (lo, hi) = feasible_interval(&w, &vec![0.3; 1 << k], &dist)
                    .unwrap()
                    .unwrap();
                let constant_half = (hi - lo) / 2.0;
                let min_omega = dist.iter().map(|&r| w.eval(r).unwrap()).fold(f64::INFINITY, f64::min);
                assert_relative_eq!(constant_half, min_omega, max_relative = 1e-12);

                // admissible perturbation: values of a function with modulus ω
                // sampled at the vertices, here x(t) = c·ω-compatible ridge
                let anchor: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * h).collect();
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let values: Vec<f64> = vertices
                    .iter()
                    .map(|v| {
                        let d = v.iter().zip(&anchor).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                        0.3 + sign * w.eval(d).unwrap() * rng.random::<f64>()
                    })
                    .collect();
                if let Some((lo2, hi2)) = feasible_interval(&w, &values, &dist).unwrap() {
                    assert!((hi2 - lo2) / 2.0 <= constant_half + 1e-12);
                }
            }
        }
    }

    #[test]
    fn class_complexity_monotonicity() {
        let eps: Vec<f64> = (1..40).map(|i| i as f64 * 0.01).collect();
        for k in 1..=4 {
            let s = spec(1.0, 0.7, 1.0, k);
            let vals: Vec<f64> = eps
                .iter()
                .filter_map(|&e| class_complexity(&s, e).ok())
                .collect();
            assert!(vals.windows(2).all(|w| w[1] <= w[0]));
        }
        let e = 0.05;
        let mut prev = f64::INFINITY;
        for r in [0.5, 1.0, 2.0, 4.0] {
            let v = class_complexity(&spec(1.0, 1.0, r, 2), e).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        let mut prev = 0.0;
        for k in 1..=6 {
            let v = class_complexity(&spec(1.0, 1.0, 1.0, k), e).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    proptest! {
        #[test]
        fn coefficients_reproduce_class_complexity(
            l in 0.2..5.0_f64,
            p in 0.1..=1.0_f64,
            r in 0.2..5.0_f64,
            k in 1usize..6,
        ) {
            let s = spec(l, p, r, k);
            let c = holder_coefficients(&s).unwrap();
            let eps_max = s.modulus.eval((k as f64).sqrt() / 2.0).unwrap();
            for i in 0..20 {
                let eps = eps_max * 10f64.powf(-4.0 * i as f64 / 19.0);
                let exact = class_complexity(&s, eps).unwrap();
                prop_assert!((c.at(eps) - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
            }
        }

        #[test]
        fn inverse_undoes_eval(l in 0.2..5.0_f64, p in 0.1..=1.0_f64, h in 1e-4..1.0_f64) {
            let w = holder(l, p);
            let back = w.inverse(w.eval(h).unwrap()).unwrap();
            prop_assert!((back - h).abs() <= 1e-12 * h.max(1e-300) * 10.0);
        }

        #[test]
        fn tabulated_inverse_undoes_eval(h in 0.0001..1.0_f64) {
            let w = ModulusOfContinuity::tabulated(vec![
                (0.0, 0.0), (0.1, 0.3), (0.5, 0.6), (1.0, 1.0),
            ]).unwrap();
            let back = w.inverse(w.eval(h).unwrap()).unwrap();
            prop_assert!((back - h).abs() <= 1e-12 * h * 10.0);
        }
    }
}
