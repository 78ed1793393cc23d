//! Empirical complexity coefficients of a sampled series.
//!
//! For each retained fraction `S` the series is thinned by several randomized
//! selection schemes, the discarded values are rebuilt with the best method
//! of the family, and the minimal errors are averaged. The coefficients
//! `(A, B)` come from the ordinary least-squares line `ln ε = A + B ln S`
//! over the fractions inside the fit interval.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approximation::{best_error, ApproximationMethod};
use crate::error::{Error, Result};
use crate::function_model::{ErrorNorm, SampledFunction, SubgridSelection};

/// Errors below this are treated as exact recovery.
pub const DEGENERACY_FLOOR: f64 = 1e-12;

const INTERVAL_TOLERANCE: f64 = 1e-9;

/// How retained nodes are drawn at each fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    /// One random node per contiguous block.
    #[default]
    Stratified,
    /// Uniformly random subset (endpoints always kept).
    Uniform,
    /// Random priority order shared across fractions, so kept sets grow by inclusion.
    Nested,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub fractions: Vec<f64>,
    pub fit_interval: (f64, f64),
    pub schemes_per_fraction: usize,
    pub rng_seed: u64,
    pub family: Vec<ApproximationMethod>,
    pub norm: ErrorNorm,
    pub difference_orders: usize,
    pub selection: SelectionMode,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            fractions: default_fractions(),
            fit_interval: (0.2, 0.8),
            schemes_per_fraction: 10,
            rng_seed: 0,
            family: ApproximationMethod::default_family(),
            norm: ErrorNorm::Uniform,
            difference_orders: 0,
            selection: SelectionMode::Stratified,
        }
    }
}

/// `0.05, 0.10, …, 0.95`.
pub fn default_fractions() -> Vec<f64> {
    (1..20).map(|i| i as f64 / 20.0).collect()
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::InvalidConfig("no fractions given".into()));
        }
        if self.fractions.iter().any(|&s| !(s > 0.0 && s < 1.0)) {
            return Err(Error::InvalidConfig("fractions must lie in (0, 1)".into()));
        }
        if self.fractions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("fractions must be strictly increasing".into()));
        }
        let (alpha, beta) = self.fit_interval;
        if !(alpha > 0.0 && alpha <= beta && beta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "fit interval must satisfy 0 < α <= β < 1, got [{alpha}, {beta}]"
            )));
        }
        let inside = self.fractions.iter().filter(|&&s| in_interval(s, self.fit_interval)).count();
        if inside < 3 {
            return Err(Error::InvalidConfig(format!(
                "fit interval [{alpha}, {beta}] contains {inside} fractions; at least 3 required"
            )));
        }
        if self.schemes_per_fraction == 0 {
            return Err(Error::InvalidConfig("need at least one scheme per fraction".into()));
        }
        if self.family.is_empty() {
            return Err(Error::InvalidConfig("approximation family is empty".into()));
        }
        self.norm.validate()
    }
}

fn in_interval(s: f64, (alpha, beta): (f64, f64)) -> bool {
    s >= alpha - INTERVAL_TOLERANCE && s <= beta + INTERVAL_TOLERANCE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub fraction: f64,
    pub mean_error: f64,
    pub stddev: f64,
    pub n_schemes: usize,
}

/// Mean minimal recovery error per retained fraction, ascending in `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryErrorCurve {
    pub rows: Vec<CurveRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityCoefficients {
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
    /// Standard error of the slope; zero when fewer than 3 points or an exact fit.
    pub slope_stderr: f64,
    pub n_points_fit: usize,
    pub interval_used: (f64, f64),
    pub degenerate: bool,
}

impl ComplexityCoefficients {
    pub fn degenerate(interval: (f64, f64), n_points_fit: usize) -> Self {
        Self {
            a: 0.0,
            b: 0.0,
            r_squared: 0.0,
            slope_stderr: 0.0,
            n_points_fit,
            interval_used: interval,
            degenerate: true,
        }
    }
}

/// SplitMix64 finalizer; spreads structured inputs over the seed space.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for scheme `scheme` at fraction index `fraction`.
pub fn scheme_seed(base: u64, fraction: usize, scheme: usize) -> u64 {
    mix(mix(mix(base) ^ fraction as u64) ^ (scheme as u64).rotate_left(32))
}

fn kept_count(n_total: usize, fraction: f64) -> usize {
    let product = fraction * n_total as f64;
    let nearest = product.round();
    let count = if (product - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        product.floor() as usize
    };
    count.min(n_total)
}

fn check_selection_args(n_total: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("fraction must lie in (0, 1), got {fraction}")));
    }
    let kept = kept_count(n_total, fraction);
    if kept < 2 {
        return Err(Error::TooFewKept { fraction, kept });
    }
    Ok(kept)
}

/// One random index per contiguous block, with both boundary indices kept.
///
/// The `n_total` indices are split into `⌊S n⌋` blocks
/// `[j n / K, (j + 1) n / K)`.
pub fn stratified_selection(n_total: usize, fraction: f64, seed: u64) -> Result<SubgridSelection> {
    let blocks = check_selection_args(n_total, fraction)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept: Vec<usize> = (0..blocks)
        .map(|j| {
            let lo = j * n_total / blocks;
            let hi = (j + 1) * n_total / blocks;
            rng.random_range(lo..hi)
        })
        .collect();
    kept[0] = 0;
    kept[blocks - 1] = n_total - 1;
    SubgridSelection::new(kept, seed, n_total)
}

/// Uniformly random interior indices plus both endpoints.
pub fn uniform_selection(n_total: usize, fraction: f64, seed: u64) -> Result<SubgridSelection> {
    let count = check_selection_args(n_total, fraction)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept: Vec<usize> = index::sample(&mut rng, n_total - 2, count - 2)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    kept.push(0);
    kept.push(n_total - 1);
    kept.sort_unstable();
    SubgridSelection::new(kept, seed, n_total)
}

/// Endpoints plus the first `⌊S n⌋ - 2` interior indices of a seeded
/// random order; larger fractions with the same seed give supersets.
pub fn nested_selection(n_total: usize, fraction: f64, seed: u64) -> Result<SubgridSelection> {
    let count = check_selection_args(n_total, fraction)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (1..n_total - 1).collect();
    order.shuffle(&mut rng);
    let mut kept = order[..count - 2].to_vec();
    kept.push(0);
    kept.push(n_total - 1);
    kept.sort_unstable();
    SubgridSelection::new(kept, seed, n_total)
}

fn select(mode: SelectionMode, n_total: usize, fraction: f64, seed: u64) -> Result<SubgridSelection> {
    match mode {
        SelectionMode::Stratified => stratified_selection(n_total, fraction, seed),
        SelectionMode::Uniform => uniform_selection(n_total, fraction, seed),
        SelectionMode::Nested => nested_selection(n_total, fraction, seed),
    }
}

fn seed_for(config: &SweepConfig, fraction_index: usize, scheme: usize) -> u64 {
    match config.selection {
        // shared across fractions so that kept sets are nested
        SelectionMode::Nested => scheme_seed(config.rng_seed, usize::MAX, scheme),
        _ => scheme_seed(config.rng_seed, fraction_index, scheme),
    }
}

/// Minimal error for one selection scheme; `None` when every method failed.
fn scheme_error(
    f: &SampledFunction,
    fraction: f64,
    seed: u64,
    config: &SweepConfig,
) -> Result<Option<f64>> {
    let kept = select(config.selection, f.len(), fraction, seed)?;
    match best_error(f, &kept, &config.family, config.norm) {
        Ok(e) => Ok(Some(e)),
        Err(Error::AllMethodsFailed) => Ok(None),
        Err(e) => Err(e),
    }
}

fn summarize(fraction: f64, errors: &[Option<f64>]) -> Result<CurveRow> {
    let ok: Vec<f64> = errors.iter().flatten().copied().collect();
    if ok.is_empty() {
        return Err(Error::AllMethodsFailed);
    }
    let m = ok.len() as f64;
    let mean = ok.iter().sum::<f64>() / m;
    let stddev = if ok.len() > 1 {
        (ok.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(CurveRow {
        fraction,
        mean_error: mean,
        stddev,
        n_schemes: ok.len(),
    })
}

fn check_input(f: &SampledFunction) -> Result<()> {
    if !f.is_normalized() {
        return Err(Error::NotNormalized);
    }
    if f.dim() != 1 {
        return Err(Error::InvalidArgument(format!(
            "the fraction sweep works on 1-d series, got dimension {}",
            f.dim()
        )));
    }
    Ok(())
}

/// Mean and sample standard deviation of the minimal error over the
/// configured number of schemes at one fraction.
///
/// `fraction_index` positions the fraction in the sweep and feeds the seed
/// derivation.
pub fn error_at_fraction(
    f: &SampledFunction,
    fraction: f64,
    fraction_index: usize,
    config: &SweepConfig,
) -> Result<CurveRow> {
    check_input(f)?;
    let errors = (0..config.schemes_per_fraction)
        .into_par_iter()
        .map(|s| scheme_error(f, fraction, seed_for(config, fraction_index, s), config))
        .collect::<Result<Vec<_>>>()?;
    summarize(fraction, &errors)
}

/// Recovery-error curve over every configured fraction.
///
/// Work items are independent and reassembled in a fixed order, so the
/// result does not depend on the thread count.
pub fn sweep(f: &SampledFunction, config: &SweepConfig) -> Result<RecoveryErrorCurve> {
    config.validate()?;
    check_input(f)?;
    let m = config.schemes_per_fraction;
    let errors = (0..config.fractions.len() * m)
        .into_par_iter()
        .map(|job| {
            let (fi, s) = (job / m, job % m);
            scheme_error(f, config.fractions[fi], seed_for(config, fi, s), config)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = config
        .fractions
        .iter()
        .zip(errors.chunks(m))
        .map(|(&fraction, errs)| summarize(fraction, errs))
        .collect::<Result<Vec<_>>>()?;
    Ok(RecoveryErrorCurve { rows })
}

struct LineFit {
    intercept: f64,
    slope: f64,
    r_squared: f64,
    slope_stderr: f64,
}

fn least_squares(points: &[(f64, f64)]) -> LineFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    let slope_stderr = if points.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    LineFit {
        intercept,
        slope,
        r_squared,
        slope_stderr,
    }
}

fn fit_points(curve: &RecoveryErrorCurve, interval: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let rows: Vec<&CurveRow> = curve
        .rows
        .iter()
        .filter(|r| in_interval(r.fraction, interval))
        .collect();
    if rows.len() < 3 {
        return Err(Error::InsufficientRows { rows: rows.len() });
    }
    Ok(rows
        .iter()
        .filter(|r| r.mean_error >= DEGENERACY_FLOOR)
        .map(|r| (r.fraction.ln(), r.mean_error.ln()))
        .collect())
}

/// Least-squares fit of `ln ε̄ = A + B ln S` over rows inside `interval`.
///
/// Rows below [`DEGENERACY_FLOOR`] are dropped. With fewer than 3 left the
/// function is treated as exactly recoverable and the result is flagged
/// degenerate with `A = B = 0`.
pub fn fit_complexity(curve: &RecoveryErrorCurve, interval: (f64, f64)) -> Result<ComplexityCoefficients> {
    let points = fit_points(curve, interval)?;
    if points.len() < 3 {
        return Ok(ComplexityCoefficients::degenerate(interval, points.len()));
    }
    let fit = least_squares(&points);
    if !(fit.slope.is_finite() && fit.intercept.is_finite()) {
        return Ok(ComplexityCoefficients::degenerate(interval, points.len()));
    }
    Ok(ComplexityCoefficients {
        a: fit.intercept,
        b: fit.slope,
        r_squared: fit.r_squared,
        slope_stderr: fit.slope_stderr,
        n_points_fit: points.len(),
        interval_used: interval,
        degenerate: false,
    })
}

/// Leave-one-out sensitivity of the fitted slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeStability {
    pub max_slope_shift: f64,
    pub slope_stderr: f64,
    /// Every single-row exclusion moved the slope by less than 3 standard errors.
    pub stable: bool,
}

/// `None` when fewer than 4 usable rows remain.
pub fn slope_stability(curve: &RecoveryErrorCurve, interval: (f64, f64)) -> Result<Option<SlopeStability>> {
    let points = fit_points(curve, interval)?;
    if points.len() < 4 {
        return Ok(None);
    }
    let full = least_squares(&points);
    let max_slope_shift = (0..points.len())
        .map(|skip| {
            let rest: Vec<(f64, f64)> = points
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, p)| *p)
                .collect();
            (least_squares(&rest).slope - full.slope).abs()
        })
        .fold(0.0, f64::max);
    Ok(Some(SlopeStability {
        max_slope_shift,
        slope_stderr: full.slope_stderr,
        stable: max_slope_shift < 3.0 * full.slope_stderr,
    }))
}

/// Sweep and fit in one call.
pub fn estimate_coefficients(
    f: &SampledFunction,
    config: &SweepConfig,
) -> Result<(RecoveryErrorCurve, ComplexityCoefficients)> {
    let curve = sweep(f, config)?;
    let coefficients = fit_complexity(&curve, config.fit_interval)?;
    Ok((curve, coefficients))
}

/// Raw forward differences applied `order` times.
pub fn forward_differences(values: &[f64], order: usize) -> Vec<f64> {
    let mut out = values.to_vec();
    for _ in 0..order {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    out
}

/// Renormalized `order`-th forward-difference series; order 0 returns `f`.
///
/// Differences no larger than `2^order · 1e-12 · ‖f‖_C` are rounding noise
/// (e.g. second differences of affine data) and yield [`Error::ZeroFunction`].
pub fn difference_series(f: &SampledFunction, order: usize) -> Result<SampledFunction> {
    if f.dim() != 1 {
        return Err(Error::InvalidArgument("differences need a 1-d series".into()));
    }
    if order == 0 {
        return Ok(f.clone());
    }
    let n = f.len();
    if n < order + 2 {
        return Err(Error::OrderTooHigh { order, points: n });
    }
    let diffs = forward_differences(f.values(), order);
    let noise = 2f64.powi(order as i32) * DEGENERACY_FLOOR * f.uniform_norm();
    if diffs.iter().all(|d| d.abs() <= noise) {
        return Err(Error::ZeroFunction);
    }
    SampledFunction::from_series(diffs)?.normalize()
}

/// Coefficients of one difference order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderProfile {
    pub order: usize,
    pub curve: Option<RecoveryErrorCurve>,
    pub coefficients: ComplexityCoefficients,
    /// Why the order could not be estimated, if it failed.
    pub failure: Option<String>,
}

/// Coefficients for `f` and its difference series up to `config.difference_orders`.
///
/// A failing order is reported as degenerate with its reason and does not
/// stop the remaining orders.
pub fn coefficient_profile(f: &SampledFunction, config: &SweepConfig) -> Result<Vec<OrderProfile>> {
    config.validate()?;
    Ok((0..=config.difference_orders)
        .map(|order| {
            let outcome = difference_series(f, order)
                .and_then(|g| g.normalize())
                .and_then(|g| estimate_coefficients(&g, config));
            match outcome {
                Ok((curve, coefficients)) => OrderProfile {
                    order,
                    curve: Some(curve),
                    coefficients,
                    failure: None,
                },
                Err(e) => OrderProfile {
                    order,
                    curve: None,
                    coefficients: ComplexityCoefficients::degenerate(config.fit_interval, 0),
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect())
}
