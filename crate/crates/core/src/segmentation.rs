//! Sliding-window complexity coefficients and change detection on them.
//!
//! Each window is normalized on its own and reduced to its coefficient pair
//! `(A, B)`. Changes in the data-generating mechanism show up as shifts in
//! this two-dimensional track, located by binary segmentation with a CUSUM
//! statistic and a seeded permutation null.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficient_estimation::{estimate_coefficients, scheme_seed, SweepConfig};
use crate::error::{Error, Result};
use crate::function_model::SampledFunction;

pub const MIN_WINDOW_LENGTH: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_length: usize,
    pub hop: usize,
    pub estimation: SweepConfig,
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_length < MIN_WINDOW_LENGTH {
            return Err(Error::InvalidWindow(format!(
                "window length must be at least {MIN_WINDOW_LENGTH}, got {}",
                self.window_length
            )));
        }
        if self.hop == 0 {
            return Err(Error::InvalidWindow("hop must be at least 1".into()));
        }
        self.estimation.validate()
    }
}

/// Coefficients of one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub start: usize,
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
    pub degenerate: bool,
}

/// Coefficient pair for every window `[start, start + W)` with `start` a
/// multiple of the hop.
pub fn coefficient_track(series: &SampledFunction, cfg: &WindowConfig) -> Result<Vec<TrackPoint>> {
    cfg.validate()?;
    if series.dim() != 1 {
        return Err(Error::InvalidArgument("segmentation needs a 1-d series".into()));
    }
    let len = series.len();
    let w = cfg.window_length;
    if len < w {
        return Err(Error::SeriesTooShort { len, window: w });
    }
    let starts: Vec<usize> = (0..=len - w).step_by(cfg.hop).collect();
    starts
        .into_par_iter()
        .map(|start| {
            let window = SampledFunction::from_series(series.values()[start..start + w].to_vec())?;
            let normalized = match window.normalize() {
                Ok(f) => f,
                Err(Error::ZeroFunction) => return Ok(degenerate_point(start)),
                Err(e) => return Err(e),
            };
            let (_, c) = estimate_coefficients(&normalized, &cfg.estimation)?;
            Ok(TrackPoint {
                start,
                a: c.a,
                b: c.b,
                r_squared: c.r_squared,
                degenerate: c.degenerate,
            })
        })
        .collect()
}

fn degenerate_point(start: usize) -> TrackPoint {
    TrackPoint {
        start,
        a: 0.0,
        b: 0.0,
        r_squared: 0.0,
        degenerate: true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub window_length: usize,
    /// Minimum distance in samples between reported change points.
    pub min_separation: usize,
    pub threshold_multiplier: f64,
    pub permutations: usize,
    pub seed: u64,
}

impl DetectorConfig {
    /// Separation `W`, multiplier 1.5 and 199 permutations.
    pub fn new(window_length: usize) -> Self {
        Self {
            window_length,
            min_separation: window_length,
            threshold_multiplier: 1.5,
            permutations: 199,
            seed: 0,
        }
    }
}

/// One tested split of a track segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateStat {
    /// Estimated change location in samples.
    pub index: usize,
    pub statistic: f64,
    /// 95th percentile of the permutation null.
    pub null_quantile: f64,
    pub threshold: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationResult {
    pub tracks: Vec<TrackPoint>,
    pub change_points: Vec<usize>,
    pub detector_stats: Vec<CandidateStat>,
}

/// Locates shifts in the `(A, B)` track.
///
/// Both coordinates are standardized by median and MAD. On each segment the
/// split maximizing `‖Σ_{i<k} (z_i - z̄)‖² / n` is tested against
/// `threshold_multiplier` times the 95th percentile of the same maximum over
/// seeded permutations; accepted splits recurse on both sides.
pub fn detect_changes(tracks: &[TrackPoint], cfg: &DetectorConfig) -> Result<SegmentationResult> {
    if !(cfg.threshold_multiplier.is_finite() && cfg.threshold_multiplier > 0.0) {
        return Err(Error::InvalidArgument("threshold multiplier must be positive".into()));
    }
    if cfg.permutations == 0 {
        return Err(Error::InvalidArgument("need at least one permutation".into()));
    }
    let usable: Vec<&TrackPoint> = tracks.iter().filter(|t| !t.degenerate).collect();
    if usable.len() < 4 {
        return Err(Error::TooFewWindows { usable: usable.len() });
    }
    let za = robust_z(&usable.iter().map(|t| t.a).collect::<Vec<_>>());
    let zb = robust_z(&usable.iter().map(|t| t.b).collect::<Vec<_>>());
    let z: Vec<[f64; 2]> = za.into_iter().zip(zb).map(|(a, b)| [a, b]).collect();
    let centers: Vec<f64> = usable
        .iter()
        .map(|t| t.start as f64 + cfg.window_length as f64 / 2.0)
        .collect();

    let mut change_points = Vec::new();
    let mut detector_stats = Vec::new();
    // explicit stack keeps the traversal order fixed
    let mut stack = vec![(0usize, z.len())];
    while let Some((lo, hi)) = stack.pop() {
        if hi - lo < 4 {
            continue;
        }
        let segment = &z[lo..hi];
        let (statistic, split) = max_cusum(segment);
        if statistic <= 0.0 {
            continue;
        }
        let null_quantile = permutation_quantile(segment, cfg, lo, hi);
        let threshold = cfg.threshold_multiplier * null_quantile;
        let k = lo + split;
        let index = ((centers[k - 1] + centers[k]) / 2.0).round() as usize;
        let separated = change_points
            .iter()
            .all(|&c: &usize| c.abs_diff(index) >= cfg.min_separation);
        let accepted = statistic > threshold && separated;
        detector_stats.push(CandidateStat {
            index,
            statistic,
            null_quantile,
            threshold,
            accepted,
        });
        if accepted {
            change_points.push(index);
            stack.push((k, hi));
            stack.push((lo, k));
        }
    }
    change_points.sort_unstable();
    Ok(SegmentationResult {
        tracks: tracks.to_vec(),
        change_points,
        detector_stats,
    })
}

/// Track and detection in one pass.
pub fn segment(series: &SampledFunction, window: &WindowConfig, detector: &DetectorConfig) -> Result<SegmentationResult> {
    let tracks = coefficient_track(series, window)?;
    detect_changes(&tracks, detector)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// `(x - median) / (1.4826 MAD)`; falls back to the mean absolute deviation
/// when the MAD vanishes, and to zeros for a constant input.
fn robust_z(values: &[f64]) -> Vec<f64> {
    let center = median(&mut values.to_vec());
    let mut deviations: Vec<f64> = values.iter().map(|v| (v - center).abs()).collect();
    let mut scale = 1.4826 * median(&mut deviations);
    if scale == 0.0 {
        scale = deviations.iter().sum::<f64>() / deviations.len() as f64 * 1.2533;
    }
    if scale == 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - center) / scale).collect()
}

/// Maximum over splits `k = 1..n-1` of the squared centered partial sum,
/// divided by `n`, and the maximizing `k`.
fn max_cusum(z: &[[f64; 2]]) -> (f64, usize) {
    let n = z.len() as f64;
    let mean = z
        .iter()
        .fold([0.0, 0.0], |acc, p| [acc[0] + p[0] / n, acc[1] + p[1] / n]);
    let mut partial = [0.0, 0.0];
    let mut best = (0.0, 1);
    for (k, p) in z.iter().enumerate().take(z.len() - 1) {
        partial[0] += p[0] - mean[0];
        partial[1] += p[1] - mean[1];
        let stat = (partial[0] * partial[0] + partial[1] * partial[1]) / n;
        if stat > best.0 {
            best = (stat, k + 1);
        }
    }
    best
}

fn permutation_quantile(segment: &[[f64; 2]], cfg: &DetectorConfig, lo: usize, hi: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(scheme_seed(cfg.seed, lo, hi));
    let mut shuffled = segment.to_vec();
    let mut stats: Vec<f64> = (0..cfg.permutations)
        .map(|_| {
            shuffled.shuffle(&mut rng);
            max_cusum(&shuffled).0
        })
        .collect();
    stats.sort_by(|a, b| a.total_cmp(b));
    // empirical quantile, nearest-rank
    let rank = ((0.95 * stats.len() as f64).ceil() as usize).clamp(1, stats.len());
    stats[rank - 1]
}
