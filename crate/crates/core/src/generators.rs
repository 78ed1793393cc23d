//! Synthetic test functions with known regularity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_model::SampledFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GeneratorKind {
    /// `a t + b`.
    Affine { a: f64, b: f64 },
    /// `Σ c_j t^j`, lowest order first.
    Polynomial { coeffs: Vec<f64> },
    /// `sin(2π freq t)`.
    Sine { freq: f64 },
    /// `Σ_{n<terms} a^n cos(b^n π t)`.
    Weierstrass { a: f64, b: u64, terms: u32 },
    /// Fractional Brownian motion by random midpoint displacement.
    FbmMidpoint { hurst: f64, seed: u64 },
    /// Trajectory of `x ↦ r x (1 - x)` starting at `x0`.
    LogisticMap { r: f64, x0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n_points: usize,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, n_points: usize) -> Self {
        Self { kind, n_points }
    }

    pub fn with_points(&self, n_points: usize) -> Self {
        Self {
            kind: self.kind.clone(),
            n_points,
        }
    }

    /// Smallest term count keeping the Weierstrass truncation below 1e-12.
    pub fn weierstrass_min_terms(a: f64) -> u32 {
        (1e12_f64.ln() / (1.0 / a).ln()).ceil() as u32
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least 2 points, got {}",
                self.n_points
            )));
        }
        match &self.kind {
            GeneratorKind::Affine { a, b } => finite(&[*a, *b]),
            GeneratorKind::Polynomial { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::InvalidSpec("polynomial needs coefficients".into()));
                }
                finite(coeffs)
            }
            GeneratorKind::Sine { freq } => finite(&[*freq]),
            GeneratorKind::Weierstrass { a, b, terms } => {
                if !(*a > 0.0 && *a < 1.0) {
                    return Err(Error::InvalidSpec(format!("Weierstrass a must lie in (0, 1), got {a}")));
                }
                if *b < 3 || b % 2 == 0 {
                    return Err(Error::InvalidSpec(format!(
                        "Weierstrass b must be an odd integer >= 3, got {b}"
                    )));
                }
                let needed = Self::weierstrass_min_terms(*a);
                if *terms < needed {
                    return Err(Error::InvalidSpec(format!(
                        "Weierstrass with a = {a} needs at least {needed} terms, got {terms}"
                    )));
                }
                Ok(())
            }
            GeneratorKind::FbmMidpoint { hurst, .. } => {
                if !(*hurst > 0.0 && *hurst < 1.0) {
                    return Err(Error::InvalidSpec(format!("Hurst index must lie in (0, 1), got {hurst}")));
                }
                Ok(())
            }
            GeneratorKind::LogisticMap { r, x0 } => {
                if !(*r > 0.0 && *r <= 4.0) {
                    return Err(Error::InvalidSpec(format!("logistic r must lie in (0, 4], got {r}")));
                }
                if !(*x0 > 0.0 && *x0 < 1.0) {
                    return Err(Error::InvalidSpec(format!("logistic x0 must lie in (0, 1), got {x0}")));
                }
                Ok(())
            }
        }
    }
}

fn finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidSpec("parameters must be finite".into()))
    }
}

/// Samples the generator on the uniform 1-d grid `i / (N - 1)`.
pub fn generate(spec: &GeneratorSpec) -> Result<SampledFunction> {
    spec.validate()?;
    let n = spec.n_points;
    let t = |i: usize| i as f64 / (n - 1) as f64;
    let values = match &spec.kind {
        GeneratorKind::Affine { a, b } => (0..n).map(|i| a * t(i) + b).collect(),
        GeneratorKind::Polynomial { coeffs } => (0..n)
            .map(|i| coeffs.iter().rev().fold(0.0, |acc, c| acc * t(i) + c))
            .collect(),
        GeneratorKind::Sine { freq } => (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * t(i)).sin())
            .collect(),
        GeneratorKind::Weierstrass { a, b, terms } => weierstrass(n, *a, *b, *terms),
        GeneratorKind::FbmMidpoint { hurst, seed } => fbm_midpoint(n, *hurst, *seed),
        GeneratorKind::LogisticMap { r, x0 } => {
            let mut x = *x0;
            (0..n)
                .map(|_| {
                    let out = x;
                    x = r * x * (1.0 - x);
                    out
                })
                .collect()
        }
    };
    SampledFunction::from_series(values)
}

/// Weierstrass sum evaluated at grid nodes with exact phase reduction.
///
/// At `t = i/(N-1)` the phase `b^n π t` reduces modulo `2π` to
/// `π (b^n i mod 2(N-1)) / (N-1)`, computed in integer arithmetic so that
/// high-frequency terms keep full precision.
fn weierstrass(n: usize, a: f64, b: u64, terms: u32) -> Vec<f64> {
    let period = 2 * (n as u128 - 1);
    let mut out = vec![0.0; n];
    let mut amplitude = 1.0;
    let mut freq_mod = 1u128 % period;
    for _ in 0..terms {
        for (i, slot) in out.iter_mut().enumerate() {
            let phase = (freq_mod * i as u128) % period;
            *slot += amplitude * (std::f64::consts::PI * phase as f64 / (n - 1) as f64).cos();
        }
        amplitude *= a;
        freq_mod = freq_mod * b as u128 % period;
    }
    out
}

/// Random midpoint displacement on `2^L + 1` nodes, truncated to `n`.
///
/// The displacement variance at refinement level `l` is
/// `(1 - 2^(2H-2)) 2^(-2Hl)`, matching fBm increments on the dyadic grid.
fn fbm_midpoint(n: usize, hurst: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = (usize::BITS - (n - 1).saturating_sub(1).leading_zeros()).max(1);
    let size = (1usize << levels) + 1;
    let mut path = vec![0.0; size];
    let gauss = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    path[size - 1] = gauss(&mut rng);
    let factor = (1.0 - 2f64.powf(2.0 * hurst - 2.0)).sqrt();
    let mut step = size - 1;
    let mut level = 1;
    while step > 1 {
        let half = step / 2;
        let sd = factor * 2f64.powf(-hurst * level as f64);
        let mut left = 0;
        while left + step < size {
            let mid = left + half;
            path[mid] = 0.5 * (path[left] + path[left + step]) + sd * gauss(&mut rng);
            left += step;
        }
        step = half;
        level += 1;
    }
    path.truncate(n);
    path
}

/// Known Hölder exponent of the generator, where one exists.
pub fn nominal_holder_exponent(spec: &GeneratorSpec) -> Option<f64> {
    match &spec.kind {
        GeneratorKind::Weierstrass { a, b, .. } => Some((1.0 / a).ln() / (*b as f64).ln()),
        GeneratorKind::FbmMidpoint { hurst, .. } => Some(*hurst),
        GeneratorKind::Affine { .. } | GeneratorKind::Polynomial { .. } | GeneratorKind::Sine { .. } => {
            Some(1.0)
        }
        GeneratorKind::LogisticMap { .. } => None,
    }
}

/// `max_t |x(t + h) - x(t)| / h^p` for each lag `h = lag/(N-1)`, `lag = 1..=max_lag`.
pub fn holder_ratio_scan(values: &[f64], exponent: f64, max_lag: usize) -> Vec<(f64, f64)> {
    let n = values.len();
    let max_lag = max_lag.min(n.saturating_sub(1));
    (1..=max_lag)
        .map(|lag| {
            let h = lag as f64 / (n - 1) as f64;
            let osc = values
                .iter()
                .zip(&values[lag..])
                .fold(0.0_f64, |acc, (a, b)| acc.max((b - a).abs()));
            (h, osc / h.powf(exponent))
        })
        .collect()
}

/// Smallest `L` with `|x(s) - x(t)| <= L |s - t|^p` over all grid pairs.
pub fn empirical_holder_constant(values: &[f64], exponent: f64) -> f64 {
    holder_ratio_scan(values, exponent, values.len().saturating_sub(1))
        .into_iter()
        .fold(0.0, |acc, (_, r)| acc.max(r))
}
