//! Voxelwise prediction accuracy, synchrony, lag estimation and significance.

pub mod stats;

use std::collections::BTreeMap;

use crate::encoder::ridge::fold_ranges;
use crate::encoder::{ridge_cv_select, RidgeConfig};
use crate::error::{Error, Result};
use crate::numerics::{pearson, Matrix};

pub use stats::{benjamini_hochberg, correlation_p_value, student_t_cdf};

/// Per-voxel score with degenerate flags.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelScoreMap {
    pub scores: Vec<f64>,
    pub degenerate: Vec<bool>,
}

impl VoxelScoreMap {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Mean over all voxels, degenerate ones counting as 0.
    pub fn mean(&self) -> f64 {
        if self.scores.is_empty() {
            return 0.0;
        }
        self.scores.iter().sum::<f64>() / self.scores.len() as f64
    }
}

/// Pearson r over time for every column of two T×V matrices.
pub fn pearson_per_voxel(predicted: &Matrix, measured: &Matrix) -> Result<VoxelScoreMap> {
    if predicted.rows() != measured.rows() || predicted.cols() != measured.cols() {
        return Err(Error::Shape(format!(
            "predicted is {}x{}, measured is {}x{}",
            predicted.rows(),
            predicted.cols(),
            measured.rows(),
            measured.cols()
        )));
    }
    if predicted.rows() < 3 {
        return Err(Error::invalid(format!("need at least 3 time points, got {}", predicted.rows())));
    }
    let mut scores = Vec::with_capacity(predicted.cols());
    let mut degenerate = Vec::with_capacity(predicted.cols());
    for v in 0..predicted.cols() {
        match pearson(&predicted.column(v), &measured.column(v)) {
            Some(r) => {
                scores.push(r);
                degenerate.push(false);
            }
            None => {
                scores.push(0.0);
                degenerate.push(true);
            }
        }
    }
    Ok(VoxelScoreMap { scores, degenerate })
}

/// Inter-group correlation of pre-averaged group timecourses.
pub fn synchrony_map(group_a_mean: &Matrix, group_b_mean: &Matrix) -> Result<VoxelScoreMap> {
    pearson_per_voxel(group_a_mean, group_b_mean)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepValue {
    Mean(f64),
    Empty,
}

impl SweepValue {
    pub fn mean(&self) -> Option<f64> {
        match self {
            SweepValue::Mean(m) => Some(*m),
            SweepValue::Empty => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweep {
    pub thresholds: Vec<f64>,
    pub mean_scores: Vec<SweepValue>,
    pub voxel_counts: Vec<usize>,
}

impl ThresholdSweep {
    /// CSV with header `threshold,voxel_count,mean_R`; empty sets print `empty`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,voxel_count,mean_R\n");
        for ((t, n), m) in self.thresholds.iter().zip(&self.voxel_counts).zip(&self.mean_scores) {
            let m = match m {
                SweepValue::Mean(v) => format!("{v}"),
                SweepValue::Empty => "empty".to_string(),
            };
            out.push_str(&format!("{},{},{}\n", format_threshold(*t), n, m));
        }
        out
    }
}

fn format_threshold(t: f64) -> String {
    let s = format!("{:.6}", t);
    let s = s.trim_end_matches('0');
    if s.ends_with('.') {
        format!("{s}0")
    } else {
        s.to_string()
    }
}

/// `start`, `start+step`, ... up to `stop` inclusive (within a small tolerance).
pub fn threshold_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::invalid(format!("bad threshold range {start}:{stop}:{step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

pub fn default_thresholds() -> Vec<f64> {
    threshold_range(0.15, 0.75, 0.05).expect("static range")
}

/// Mean score over voxels with synchrony strictly above each threshold.
pub fn accuracy_threshold_sweep(
    scores: &VoxelScoreMap,
    synchrony: &VoxelScoreMap,
    thresholds: &[f64],
) -> Result<ThresholdSweep> {
    if scores.len() != synchrony.len() {
        return Err(Error::Shape(format!(
            "{} scores but {} synchrony values",
            scores.len(),
            synchrony.len()
        )));
    }
    for w in thresholds.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("thresholds must be strictly ascending"));
        }
    }
    if thresholds.iter().any(|t| !(0.0..1.0).contains(t)) {
        return Err(Error::invalid("thresholds must lie in [0, 1)"));
    }
    let mut mean_scores = Vec::with_capacity(thresholds.len());
    let mut voxel_counts = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let mut sum = 0.0;
        let mut n = 0usize;
        for v in 0..scores.len() {
            if !synchrony.degenerate[v] && synchrony.scores[v] > t {
                sum += scores.scores[v];
                n += 1;
            }
        }
        voxel_counts.push(n);
        mean_scores.push(if n == 0 { SweepValue::Empty } else { SweepValue::Mean(sum / n as f64) });
    }
    Ok(ThresholdSweep { thresholds: thresholds.to_vec(), mean_scores, voxel_counts })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagScore {
    pub lag: usize,
    pub mean_r: f64,
    pub fold_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagEstimate {
    pub best_lag: usize,
    pub per_lag: Vec<LagScore>,
}

impl LagEstimate {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lag,mean_R,fold_std\n");
        for s in &self.per_lag {
            out.push_str(&format!("{},{},{}\n", s.lag, s.mean_r, s.fold_std));
        }
        out
    }
}

/// Cross-validated lag scan.
///
/// `features` row t is the stimulus at time t and `responses` row t the
/// measured response at time t. Every lag is scored on the same frames
/// `0..min(F, T-max_lag)` so the sample count does not change with the lag. Within
/// each of `folds` contiguous outer folds the penalty is chosen by an inner
/// CV on the remaining frames, and the score is the voxel-mean Pearson R on
/// the held-out fold.
pub fn estimate_lag(
    features: &Matrix,
    responses: &Matrix,
    lags: &[usize],
    ridge: &RidgeConfig,
    folds: usize,
) -> Result<LagEstimate> {
    if lags.is_empty() {
        return Err(Error::invalid("no lags given"));
    }
    if folds < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {folds}")));
    }
    ridge.validate()?;
    let t_total = responses.rows();
    let max_lag = *lags.iter().max().unwrap();
    if max_lag >= t_total {
        return Err(Error::invalid(format!("lag {max_lag} exhausts the {t_total} samples")));
    }
    let n = features.rows().min(t_total - max_lag);
    let outer = fold_ranges(n, folds)?;
    if outer.iter().any(|r| r.len() < 3) {
        return Err(Error::invalid(format!("{n} frames are too few for {folds} folds")));
    }
    let x = features.select_rows(&(0..n).collect::<Vec<_>>());
    let mut per_lag = Vec::with_capacity(lags.len());
    for &lag in lags {
        let y = responses.select_rows(&(lag..lag + n).collect::<Vec<_>>());
        let mut fold_scores = Vec::with_capacity(outer.len());
        for range in &outer {
            let train_idx: Vec<usize> = (0..n).filter(|i| !range.contains(i)).collect();
            let test_idx: Vec<usize> = range.clone().collect();
            let selection = ridge_cv_select(&x.select_rows(&train_idx), &y.select_rows(&train_idx), ridge)?;
            let pred = selection.fit.predict(&x.select_rows(&test_idx));
            let scores = pearson_per_voxel(&pred, &y.select_rows(&test_idx))?;
            fold_scores.push(scores.mean());
        }
        let k = fold_scores.len() as f64;
        let mean_r = fold_scores.iter().sum::<f64>() / k;
        let fold_std = (fold_scores.iter().map(|s| (s - mean_r).powi(2)).sum::<f64>() / k).sqrt();
        per_lag.push(LagScore { lag, mean_r, fold_std });
    }
    let mut best = &per_lag[0];
    for s in &per_lag[1..] {
        if s.mean_r > best.mean_r || (s.mean_r == best.mean_r && s.lag < best.lag) {
            best = s;
        }
    }
    Ok(LagEstimate { best_lag: best.lag, per_lag })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceResult {
    /// `None` for degenerate voxels.
    pub p_values: Vec<Option<f64>>,
    pub mask: Vec<bool>,
}

/// Two-sided correlation p-values with Benjamini-Hochberg control at `q`.
pub fn significance_mask(scores: &VoxelScoreMap, n_samples: usize, q: f64) -> Result<SignificanceResult> {
    if n_samples < 4 {
        return Err(Error::invalid(format!("need at least 4 samples, got {n_samples}")));
    }
    let mut p_values = Vec::with_capacity(scores.len());
    for (r, &deg) in scores.scores.iter().zip(&scores.degenerate) {
        p_values.push(if deg { None } else { Some(correlation_p_value(r.clamp(-1.0, 1.0), n_samples)?) });
    }
    let mask = benjamini_hochberg(&p_values, q)?;
    Ok(SignificanceResult { p_values, mask })
}

/// Mean score per nonzero ROI label, skipping degenerate voxels.
pub fn roi_means(scores: &VoxelScoreMap, labels: &[i64]) -> Result<BTreeMap<i64, (f64, usize)>> {
    if labels.len() != scores.len() {
        return Err(Error::Shape(format!("{} labels for {} voxels", labels.len(), scores.len())));
    }
    let mut acc: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for (v, &label) in labels.iter().enumerate() {
        if label == 0 || scores.degenerate[v] {
            continue;
        }
        let e = acc.entry(label).or_insert((0.0, 0));
        e.0 += scores.scores[v];
        e.1 += 1;
    }
    for e in acc.values_mut() {
        e.0 /= e.1 as f64;
    }
    Ok(acc)
}
