//! Saliency-prediction metrics: SIM, CC, NSS, AUC and shuffled AUC.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::attention::{kde_density_map, KdeEvaluation};
use crate::error::{Error, Result};
use crate::numerics::{bilinear_resize, mean, pearson, population_std, Grid2D, DEGENERATE_STD};

/// Added before taking logs of density predictions.
pub const LOG_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PredictionScale {
    #[default]
    Density,
    LogDensity,
    Arbitrary,
}

impl PredictionScale {
    pub fn as_str(&self) -> &'static str {
        match self {
            PredictionScale::Density => "density",
            PredictionScale::LogDensity => "log_density",
            PredictionScale::Arbitrary => "arbitrary",
        }
    }
}

impl fmt::Display for PredictionScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PredictionScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "density" => Ok(Self::Density),
            "log_density" | "log-density" => Ok(Self::LogDensity),
            "arbitrary" => Ok(Self::Arbitrary),
            _ => Err(Error::invalid(format!("unknown prediction scale '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyPrediction {
    pub frame_id: u64,
    pub values: Grid2D,
    pub scale: PredictionScale,
}

impl SaliencyPrediction {
    pub fn new(frame_id: u64, values: Grid2D, scale: PredictionScale) -> Result<Self> {
        if values.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("prediction for frame {frame_id}")));
        }
        if scale == PredictionScale::Density {
            if values.values().iter().any(|&v| v < 0.0) {
                return Err(Error::invalid(format!("density prediction for frame {frame_id} has negative values")));
            }
            if (values.sum() - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!(
                    "density prediction for frame {frame_id} sums to {}",
                    values.sum()
                )));
            }
        }
        Ok(Self { frame_id, values, scale })
    }

    /// Bilinear resize to the fixation grid; density maps are clamped and renormalized.
    pub fn resized(&self, height: usize, width: usize) -> Result<Self> {
        if self.values.height() == height && self.values.width() == width {
            return Ok(self.clone());
        }
        let mut values = bilinear_resize(&self.values, height, width)?;
        if self.scale == PredictionScale::Density {
            values.values_mut().iter_mut().for_each(|v| *v = v.max(0.0));
            let s = values.sum();
            if !(s > 0.0) {
                return Err(Error::Degenerate(format!("resized prediction for frame {} has no mass", self.frame_id)));
            }
            values.values_mut().iter_mut().for_each(|v| *v /= s);
        }
        Ok(Self { frame_id: self.frame_id, values, scale: self.scale })
    }

    /// Values used for ranking and correlation: log density for density maps.
    pub fn ranking_values(&self) -> Vec<f64> {
        match self.scale {
            PredictionScale::Density => self.values.values().iter().map(|p| (p + LOG_EPSILON).ln()).collect(),
            _ => self.values.values().to_vec(),
        }
    }

    /// Values on the density scale used by SIM.
    pub fn density_values(&self) -> Vec<f64> {
        match self.scale {
            PredictionScale::LogDensity => self.values.values().iter().map(|l| l.exp()).collect(),
            _ => self.values.values().to_vec(),
        }
    }
}

/// Fixated cells of one frame with multiplicity counts.
#[derive(Debug, Clone, PartialEq)]
pub struct FixationSet {
    pub frame_id: u64,
    height: usize,
    width: usize,
    counts: BTreeMap<usize, usize>,
}

impl FixationSet {
    pub fn new(frame_id: u64, height: usize, width: usize, cells: &[(usize, usize)]) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for &(r, c) in cells {
            if r >= height || c >= width {
                return Err(Error::invalid(format!("fixation cell ({r}, {c}) outside {height}x{width}")));
            }
            *counts.entry(r * width + c).or_insert(0) += 1;
        }
        Ok(Self { frame_id, height, width, counts })
    }

    /// Integerizes pixel coordinates `(x, y)` in a `stim_h`×`stim_w` stimulus
    /// onto a `height`×`width` grid.
    pub fn from_points(
        frame_id: u64,
        points: &[(f64, f64)],
        stimulus: (usize, usize),
        grid: (usize, usize),
    ) -> Result<Self> {
        let (sh, sw) = stimulus;
        let (h, w) = grid;
        let cells: Vec<(usize, usize)> = points
            .iter()
            .map(|&(x, y)| {
                let r = ((y * h as f64 / sh as f64).floor().max(0.0) as usize).min(h - 1);
                let c = ((x * w as f64 / sw as f64).floor().max(0.0) as usize).min(w - 1);
                (r, c)
            })
            .collect();
        Self::new(frame_id, h, w, &cells)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `(flat index, multiplicity)` in ascending index order.
    pub fn counts(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.counts.iter().map(|(&i, &n)| (i, n))
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn cells(&self) -> BTreeSet<usize> {
        self.counts.keys().copied().collect()
    }
}

fn check_shape(pred: &SaliencyPrediction, h: usize, w: usize) -> Result<()> {
    if pred.values.height() != h || pred.values.width() != w {
        return Err(Error::Shape(format!(
            "prediction is {}x{}, expected {h}x{w}",
            pred.values.height(),
            pred.values.width()
        )));
    }
    Ok(())
}

fn shift_normalize(values: &[f64], what: &str) -> Result<Vec<f64>> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = values.iter().map(|v| v - lo).collect();
    let s: f64 = shifted.iter().sum();
    if !(s > 0.0) {
        return Err(Error::Degenerate(format!("{what} has zero mass after shifting to min 0")));
    }
    Ok(shifted.into_iter().map(|v| v / s).collect())
}

/// Histogram intersection of the shift-normalized maps.
pub fn metric_sim(pred: &SaliencyPrediction, truth: &Grid2D) -> Result<f64> {
    check_shape(pred, truth.height(), truth.width())?;
    let p = shift_normalize(&pred.density_values(), "prediction")?;
    let q = shift_normalize(truth.values(), "truth map")?;
    Ok(p.iter().zip(&q).map(|(a, b)| a.min(*b)).sum())
}

pub fn metric_cc(pred: &SaliencyPrediction, truth: &Grid2D) -> Result<f64> {
    check_shape(pred, truth.height(), truth.width())?;
    pearson(&pred.ranking_values(), truth.values())
        .ok_or_else(|| Error::Degenerate("CC needs non-constant maps".into()))
}

pub fn metric_nss(pred: &SaliencyPrediction, fixations: &FixationSet) -> Result<f64> {
    check_shape(pred, fixations.height, fixations.width)?;
    if fixations.is_empty() {
        return Err(Error::invalid(format!("frame {} has no fixations", fixations.frame_id)));
    }
    let v = pred.ranking_values();
    let m = mean(&v);
    let sd = population_std(&v);
    if sd < DEGENERATE_STD {
        return Err(Error::Degenerate("NSS needs a non-constant prediction".into()));
    }
    let mut acc = 0.0;
    for (i, n) in fixations.counts() {
        acc += n as f64 * (v[i] - m) / sd;
    }
    Ok(acc / fixations.total() as f64)
}

/// Mann-Whitney AUC of weighted positives against unit-weight negatives, ties ½.
fn mann_whitney(values: &[f64], positives: &[(usize, usize)], negatives: &[usize]) -> f64 {
    let mut neg: Vec<f64> = negatives.iter().map(|&i| values[i]).collect();
    neg.sort_by(f64::total_cmp);
    // 2·wins + ties, in integers, so the only rounding is the final division
    let mut twice: u128 = 0;
    let mut n_pos: u128 = 0;
    for &(i, n) in positives {
        let v = values[i];
        let below = neg.partition_point(|&x| x < v);
        let not_above = neg.partition_point(|&x| x <= v);
        twice += n as u128 * (2 * below + (not_above - below)) as u128;
        n_pos += n as u128;
    }
    twice as f64 / (2.0 * n_pos as f64 * neg.len() as f64)
}

pub fn metric_auc(pred: &SaliencyPrediction, fixations: &FixationSet) -> Result<f64> {
    check_shape(pred, fixations.height, fixations.width)?;
    let cells = fixations.height * fixations.width;
    if fixations.is_empty() || fixations.counts.len() == cells {
        return Err(Error::Degenerate("AUC needs fixated and non-fixated cells".into()));
    }
    let positives: Vec<(usize, usize)> = fixations.counts().collect();
    let negatives: Vec<usize> = (0..cells).filter(|i| !fixations.counts.contains_key(i)).collect();
    Ok(mann_whitney(&pred.ranking_values(), &positives, &negatives))
}

pub fn metric_sauc(pred: &SaliencyPrediction, fixations: &FixationSet, shuffled: &FixationSet) -> Result<f64> {
    check_shape(pred, fixations.height, fixations.width)?;
    check_shape(pred, shuffled.height, shuffled.width)?;
    if fixations.is_empty() {
        return Err(Error::invalid(format!("frame {} has no fixations", fixations.frame_id)));
    }
    let negatives: Vec<usize> =
        shuffled.counts.keys().copied().filter(|i| !fixations.counts.contains_key(i)).collect();
    if negatives.is_empty() {
        return Err(Error::Degenerate("shuffled negative set is empty after removing positives".into()));
    }
    let positives: Vec<(usize, usize)> = fixations.counts().collect();
    Ok(mann_whitney(&pred.ranking_values(), &positives, &negatives))
}

/// Union of the fixated cells of every set except `exclude_frame`, multiplicity 1.
pub fn shuffled_negatives(sets: &[FixationSet], exclude_frame: u64) -> Result<FixationSet> {
    let first = sets.first().ok_or_else(|| Error::invalid("no fixation sets"))?;
    let mut counts = BTreeMap::new();
    for s in sets.iter().filter(|s| s.frame_id != exclude_frame) {
        if s.height != first.height || s.width != first.width {
            return Err(Error::Shape("fixation sets on different grids".into()));
        }
        for &i in s.counts.keys() {
            counts.insert(i, 1);
        }
    }
    Ok(FixationSet { frame_id: exclude_frame, height: first.height, width: first.width, counts })
}

/// Ground-truth density for SIM and CC: a Gaussian KDE of the frame's gaze points.
pub fn fixation_density_map(points: &[(f64, f64)], sigma: f64, height: usize, width: usize) -> Result<Grid2D> {
    kde_density_map(points, sigma, height, width, KdeEvaluation::Truncated)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameScores {
    pub frame_id: u64,
    pub sim: f64,
    pub cc: f64,
    pub nss: f64,
    pub auc: f64,
    pub sauc: Option<f64>,
}

pub const METRIC_NAMES: [&str; 5] = ["SIM", "CC", "NSS", "AUC", "sAUC"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation over frames divided by √n; 0 for a single frame.
    pub stderr: f64,
    pub frames: usize,
}

fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len();
    if n == 0 {
        return MetricSummary { mean: f64::NAN, stderr: f64::NAN, frames: 0 };
    }
    let m = values.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    } else {
        0.0
    };
    MetricSummary { mean: m, stderr, frames: n }
}

/// Mean and standard error per metric in `METRIC_NAMES` order.
pub fn aggregate(frames: &[FrameScores]) -> Vec<(&'static str, MetricSummary)> {
    let pick = |f: fn(&FrameScores) -> Option<f64>| -> MetricSummary {
        summarize(&frames.iter().filter_map(f).collect::<Vec<_>>())
    };
    vec![
        ("SIM", pick(|s| Some(s.sim))),
        ("CC", pick(|s| Some(s.cc))),
        ("NSS", pick(|s| Some(s.nss))),
        ("AUC", pick(|s| Some(s.auc))),
        ("sAUC", pick(|s| s.sauc)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb(h: usize, w: usize, v: Vec<f64>) -> SaliencyPrediction {
        SaliencyPrediction::new(0, Grid2D::new(h, w, v).unwrap(), PredictionScale::Arbitrary).unwrap()
    }

    fn fix(h: usize, w: usize, flat: &[usize]) -> FixationSet {
        let cells: Vec<(usize, usize)> = flat.iter().map(|&i| (i / w, i % w)).collect();
        FixationSet::new(0, h, w, &cells).unwrap()
    }

    #[test]
    fn sim_examples() {
        let p = arb(1, 2, vec![0.5, 0.5]);
        let q = Grid2D::new(1, 2, vec![0.0, 1.0]).unwrap();
        assert_eq!(metric_sim(&arb(1, 2, vec![0.0, 1.0]), &q).unwrap(), 1.0);
        let d = Grid2D::new(1, 2, vec![1.0, 0.0]).unwrap();
        assert_eq!(metric_sim(&arb(1, 2, vec![0.0, 1.0]), &d).unwrap(), 0.0);
        assert!(metric_sim(&p, &q).is_err(), "constant prediction has no mass after shifting");
    }

    #[test]
    fn sim_of_min_zero_maps_is_plain_intersection() {
        let p = arb(1, 3, vec![0.0, 0.5, 0.5]);
        let q = Grid2D::new(1, 3, vec![0.0, 0.25, 0.75]).unwrap();
        assert!((metric_sim(&p, &q).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn cc_example() {
        let p = arb(1, 4, vec![0.0, 1.0, 2.0, 3.0]);
        let q = Grid2D::new(1, 4, vec![0.0, 1.0, 1.0, 3.0]).unwrap();
        assert!((metric_cc(&p, &q).unwrap() - 4.5 / 23.75f64.sqrt()).abs() < 1e-12);
        let neg = Grid2D::new(1, 4, vec![0.0, -1.0, -2.0, -3.0]).unwrap();
        assert!((metric_cc(&p, &neg).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn nss_examples() {
        let p = arb(1, 2, vec![0.0, 1.0]);
        assert_eq!(metric_nss(&p, &fix(1, 2, &[1])).unwrap(), 1.0);
        let q = arb(2, 2, vec![0.1, 0.7, 0.3, 2.0]);
        assert!(metric_nss(&q, &fix(2, 2, &[0, 1, 2, 3])).unwrap().abs() < 1e-15);
        let once = metric_nss(&q, &fix(2, 2, &[3, 0])).unwrap();
        let twice = metric_nss(&q, &fix(2, 2, &[3, 3, 0])).unwrap();
        assert!(twice > once);
        assert!(metric_nss(&arb(1, 2, vec![1.0, 1.0]), &fix(1, 2, &[0])).is_err());
    }

    #[test]
    fn auc_examples() {
        let p = arb(1, 4, vec![0.9, 0.8, 0.1, 0.2]);
        assert_eq!(metric_auc(&p, &fix(1, 4, &[1, 3])).unwrap(), 0.5);
        assert_eq!(metric_auc(&p, &fix(1, 4, &[0, 1])).unwrap(), 1.0);
        assert_eq!(metric_auc(&arb(1, 4, vec![2.0; 4]), &fix(1, 4, &[2])).unwrap(), 0.5);
        assert!(metric_auc(&p, &fix(1, 4, &[0, 1, 2, 3])).is_err());
    }

    #[test]
    fn sauc_example() {
        let p = arb(1, 4, vec![0.3, 0.5, 0.4, 0.9]);
        let pos = fix(1, 4, &[1]);
        let neg = fix(1, 4, &[0, 2]);
        assert_eq!(metric_sauc(&p, &pos, &neg).unwrap(), 1.0);
        assert!(metric_sauc(&p, &pos, &fix(1, 4, &[1])).is_err());
    }

    #[test]
    fn shuffled_negatives_dedupe_other_frames() {
        let mk = |id, flat: &[usize]| {
            let cells: Vec<_> = flat.iter().map(|&i| (0, i)).collect();
            FixationSet::new(id, 1, 5, &cells).unwrap()
        };
        let sets = vec![mk(1, &[0, 1]), mk(2, &[1, 1, 2]), mk(3, &[4])];
        let s = shuffled_negatives(&sets, 1).unwrap();
        assert_eq!(s.counts().collect::<Vec<_>>(), vec![(1, 1), (2, 1), (4, 1)]);
    }

    #[test]
    fn density_predictions_rank_on_log_scale() {
        let g = Grid2D::new(1, 4, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let p = SaliencyPrediction::new(0, g, PredictionScale::Density).unwrap();
        let q = Grid2D::new(1, 4, vec![0.1f64, 0.2, 0.3, 0.4].iter().map(|v| (v + LOG_EPSILON).ln()).collect())
            .unwrap();
        assert!((metric_cc(&p, &q).unwrap() - 1.0).abs() < 1e-12);
        assert!(SaliencyPrediction::new(0, Grid2D::filled(1, 2, 0.2), PredictionScale::Density).is_err());
    }

    #[test]
    fn from_points_integerizes_half_open() {
        let s = FixationSet::from_points(7, &[(0.0, 0.0), (1279.9, 719.9), (640.0, 360.0)], (720, 1280), (23, 32))
            .unwrap();
        assert_eq!(s.cells(), [0, 22 * 32 + 31, 11 * 32 + 16].into_iter().collect());
    }

    #[test]
    fn aggregate_uses_sample_stderr() {
        let f = |v| FrameScores { frame_id: 0, sim: v, cc: v, nss: v, auc: v, sauc: None };
        let agg = aggregate(&[f(1.0), f(3.0)]);
        assert_eq!(agg[0].1.mean, 2.0);
        assert!((agg[0].1.stderr - 1.0).abs() < 1e-15);
        assert_eq!(agg[4].1.frames, 0);
    }

    proptest! {
        #[test]
        fn ranking_metrics_affine_invariant(
            v in prop::collection::vec(-5.0f64..5.0, 16),
            a in 0.1f64..10.0, b in -3.0f64..3.0,
            pos in prop::collection::btree_set(0usize..16, 1..8),
        ) {
            let pos: Vec<usize> = pos.into_iter().collect();
            let f = fix(4, 4, &pos);
            let p = arb(4, 4, v.clone());
            let q = arb(4, 4, v.iter().map(|x| a * x + b).collect());
            prop_assume!(population_std(&v) > 1e-6);
            prop_assert_eq!(metric_auc(&p, &f).ok(), metric_auc(&q, &f).ok());
            prop_assert!((metric_nss(&p, &f).unwrap() - metric_nss(&q, &f).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn sim_symmetric(
            p in prop::collection::vec(0.0f64..1.0, 9),
            q in prop::collection::vec(0.0f64..1.0, 9),
        ) {
            let gp = Grid2D::new(3, 3, p.clone()).unwrap();
            let gq = Grid2D::new(3, 3, q.clone()).unwrap();
            let a = metric_sim(&arb(3, 3, p), &gq);
            let b = metric_sim(&arb(3, 3, q), &gp);
            if let (Ok(a), Ok(b)) = (a, b) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
