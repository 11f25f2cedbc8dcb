//! Attention maps: learned saliency, center-weighted and gaze-weighted maps,
//! and attention-weighted spatial pooling.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numerics::{self, bilinear_resize, gaussian_kernel2d, Grid2D};

/// Side length of the blur applied to rectified saliency.
pub const BLUR_SIZE: usize = 5;
/// Standard deviation (in feature cells) of the saliency blur.
pub const BLUR_SIGMA: f64 = 1.0;
/// Default spatial side length of the learned attention kernel.
pub const ATTENTION_KERNEL_SIZE: usize = 5;

/// Tolerance on the unit-mass invariant of [`AttentionMap`].
pub const MASS_TOLERANCE: f64 = 1e-9;

/// One frame's feature grid, laid out height × width × channels with the
/// channel index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub frame_id: u64,
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(frame_id: u64, height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::invalid(format!(
                "feature dims must be positive, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::Shape(format!(
                "feature map {height}x{width}x{channels} needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature map {frame_id} at index {i}")));
        }
        Ok(Self { frame_id, height, width, channels, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn cells(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Feature vector at flat cell index `i` (row-major over the grid).
    #[inline]
    pub fn cell(&self, i: usize) -> &[f64] {
        &self.data[i * self.channels..(i + 1) * self.channels]
    }

    /// One channel as a grid.
    pub fn channel(&self, c: usize) -> Grid2D {
        Grid2D::from_fn(self.height, self.width, |r, col| {
            self.data[(r * self.width + col) * self.channels + c]
        })
    }
}

/// Learned attention filter: `size × size × channels`, channel fastest, one
/// output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionKernel {
    size: usize,
    channels: usize,
    weights: Vec<f64>,
}

impl AttentionKernel {
    pub fn new(size: usize, channels: usize, weights: Vec<f64>) -> Result<Self> {
        if size == 0 || size % 2 == 0 {
            return Err(Error::invalid(format!("attention kernel size must be odd, got {size}")));
        }
        if weights.len() != size * size * channels {
            return Err(Error::Shape(format!(
                "attention kernel {size}x{size}x{channels} needs {} weights, got {}",
                size * size * channels,
                weights.len()
            )));
        }
        Ok(Self { size, channels, weights })
    }

    pub fn zeros(size: usize, channels: usize) -> Self {
        Self { size, channels, weights: vec![0.0; size * size * channels] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    #[inline]
    fn tap(&self, ky: usize, kx: usize) -> &[f64] {
        let o = (ky * self.size + kx) * self.channels;
        &self.weights[o..o + self.channels]
    }
}

/// Rectified, blurred saliency over the feature grid (nonnegative).
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMapRaw {
    values: Grid2D,
}

impl SaliencyMapRaw {
    pub fn values(&self) -> &Grid2D {
        &self.values
    }
}

/// Nonnegative weights over a grid that sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    values: Grid2D,
}

impl AttentionMap {
    pub fn new(values: Grid2D) -> Result<Self> {
        if values.values().iter().any(|&v| v < 0.0) {
            return Err(Error::invalid("attention map has negative weights"));
        }
        let total = values.sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::invalid(format!("attention map sums to {total}, expected 1")));
        }
        Ok(Self { values })
    }

    /// Clamps negatives to zero and rescales to unit mass.
    pub fn normalize(mut values: Grid2D) -> Result<Self> {
        values.values_mut().iter_mut().for_each(|v| *v = v.max(0.0));
        let total = values.sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Degenerate("attention map has no positive mass".into()));
        }
        values.values_mut().iter_mut().for_each(|v| *v /= total);
        Ok(Self { values })
    }

    pub fn uniform(height: usize, width: usize) -> Self {
        let n = (height * width) as f64;
        Self { values: Grid2D::filled(height, width, 1.0 / n) }
    }

    pub fn values(&self) -> &Grid2D {
        &self.values
    }

    pub fn into_grid(self) -> Grid2D {
        self.values
    }
}

/// Attention-weighted (or plain) spatial sum of a feature map, one value per
/// channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledFeature {
    pub values: Vec<f64>,
}

/// A single gaze sample in stimulus pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixation {
    pub frame_id: u64,
    pub subject_id: u64,
    pub x: f64,
    pub y: f64,
}

/// Gaze samples for a set of frames, with a per-frame index.
#[derive(Debug, Clone, PartialEq)]
pub struct FixationTable {
    stimulus_width: usize,
    stimulus_height: usize,
    rows: Vec<Fixation>,
    by_frame: BTreeMap<u64, Vec<usize>>,
}

impl FixationTable {
    pub fn new(stimulus_height: usize, stimulus_width: usize, rows: Vec<Fixation>) -> Result<Self> {
        if stimulus_height == 0 || stimulus_width == 0 {
            return Err(Error::invalid("stimulus dimensions must be positive"));
        }
        let mut by_frame: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, f) in rows.iter().enumerate() {
            if !in_bounds(f.x, stimulus_width) || !in_bounds(f.y, stimulus_height) {
                return Err(Error::invalid(format!(
                    "fixation {i} at ({}, {}) outside [0, {stimulus_width}) x [0, {stimulus_height})",
                    f.x, f.y
                )));
            }
            by_frame.entry(f.frame_id).or_default().push(i);
        }
        Ok(Self { stimulus_width, stimulus_height, rows, by_frame })
    }

    pub fn stimulus_width(&self) -> usize {
        self.stimulus_width
    }

    pub fn stimulus_height(&self) -> usize {
        self.stimulus_height
    }

    pub fn rows(&self) -> &[Fixation] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn frame_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.by_frame.keys().copied()
    }

    /// Gaze points `(x, y)` recorded for one frame (empty if none).
    pub fn points_for(&self, frame_id: u64) -> Vec<(f64, f64)> {
        self.by_frame
            .get(&frame_id)
            .map(|idx| idx.iter().map(|&i| (self.rows[i].x, self.rows[i].y)).collect())
            .unwrap_or_default()
    }

    pub fn all_points(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|f| (f.x, f.y)).collect()
    }

    /// Keeps the rows whose frame id satisfies `keep`.
    pub fn filter_frames(&self, keep: impl Fn(u64) -> bool) -> Self {
        let rows = self.rows.iter().copied().filter(|f| keep(f.frame_id)).collect();
        Self::new(self.stimulus_height, self.stimulus_width, rows).expect("subset of a valid table")
    }
}

fn in_bounds(v: f64, extent: usize) -> bool {
    v.is_finite() && v >= 0.0 && v < extent as f64
}

/// Intermediates of the saliency forward pass kept for backpropagation.
#[derive(Debug, Clone)]
pub struct SaliencyTrace {
    /// Filter response before rectification.
    pub pre_activation: Grid2D,
    pub saliency: SaliencyMapRaw,
}

fn blur_kernel() -> Grid2D {
    gaussian_kernel2d(BLUR_SIZE, BLUR_SIGMA)
        .expect("constant blur parameters are valid")
        .weights()
        .clone()
}

/// Multi-channel "same" cross-correlation of the attention kernel with the
/// feature map, producing one output channel.
fn attention_filter(features: &FeatureMap, kernel: &AttentionKernel) -> Grid2D {
    let (h, w) = (features.height(), features.width());
    let r = (kernel.size() / 2) as isize;
    Grid2D::from_fn(h, w, |row, col| {
        let mut acc = 0.0;
        for ky in 0..kernel.size() {
            let rr = row as isize + ky as isize - r;
            if rr < 0 || rr >= h as isize {
                continue;
            }
            for kx in 0..kernel.size() {
                let cc = col as isize + kx as isize - r;
                if cc < 0 || cc >= w as isize {
                    continue;
                }
                let f = features.cell(rr as usize * w + cc as usize);
                acc += kernel.tap(ky, kx).iter().zip(f).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        acc
    })
}

fn check_kernel(features: &FeatureMap, kernel: &AttentionKernel) -> Result<()> {
    if kernel.channels() != features.channels() {
        return Err(Error::Shape(format!(
            "attention kernel has {} channels, features have {}",
            kernel.channels(),
            features.channels()
        )));
    }
    Ok(())
}

/// Learned saliency: Gaussian blur (5×5, σ=1) of the rectified filter response.
pub fn saliency_forward(features: &FeatureMap, kernel: &AttentionKernel) -> Result<SaliencyMapRaw> {
    Ok(saliency_forward_traced(features, kernel)?.saliency)
}

pub fn saliency_forward_traced(features: &FeatureMap, kernel: &AttentionKernel) -> Result<SaliencyTrace> {
    check_kernel(features, kernel)?;
    let pre = attention_filter(features, kernel);
    let mut rectified = pre.clone();
    rectified.values_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    let blurred = numerics::convolve2d_same(&rectified, blur_kernel())?;
    Ok(SaliencyTrace { pre_activation: pre, saliency: SaliencyMapRaw { values: blurred } })
}

/// Gradient of a scalar loss with respect to the attention kernel, given the
/// gradient with respect to the saliency map.
pub fn saliency_backward(
    features: &FeatureMap,
    kernel: &AttentionKernel,
    trace: &SaliencyTrace,
    grad_saliency: &Grid2D,
) -> Result<Vec<f64>> {
    check_kernel(features, kernel)?;
    let mut grad_pre = numerics::convolve2d_same_adjoint(grad_saliency, blur_kernel())?;
    for (g, &u) in grad_pre.values_mut().iter_mut().zip(trace.pre_activation.values()) {
        if u <= 0.0 {
            *g = 0.0;
        }
    }
    let (h, w, ch) = (features.height(), features.width(), features.channels());
    let size = kernel.size();
    let r = (size / 2) as isize;
    let mut grad = vec![0.0; size * size * ch];
    for row in 0..h {
        for col in 0..w {
            let g = grad_pre.get(row, col);
            if g == 0.0 {
                continue;
            }
            for ky in 0..size {
                let rr = row as isize + ky as isize - r;
                if rr < 0 || rr >= h as isize {
                    continue;
                }
                for kx in 0..size {
                    let cc = col as isize + kx as isize - r;
                    if cc < 0 || cc >= w as isize {
                        continue;
                    }
                    let f = features.cell(rr as usize * w + cc as usize);
                    let o = (ky * size + kx) * ch;
                    for (d, &v) in grad[o..o + ch].iter_mut().zip(f) {
                        *d += g * v;
                    }
                }
            }
        }
    }
    Ok(grad)
}

/// `A_i = exp(S_i) / Σ_j exp(S_j)` over every grid cell, computed after
/// subtracting `max(S)`.
pub fn spatial_softmax(saliency: &Grid2D) -> Result<AttentionMap> {
    if saliency.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("saliency map".into()));
    }
    let m = saliency.max();
    let mut out = saliency.clone();
    out.values_mut().iter_mut().for_each(|v| *v = (*v - m).exp());
    let total = out.sum();
    out.values_mut().iter_mut().for_each(|v| *v /= total);
    Ok(AttentionMap { values: out })
}

/// Vector-Jacobian product of the spatial softmax:
/// `dS_i = A_i (dA_i − Σ_j A_j dA_j)`.
pub fn softmax_backward(attention: &AttentionMap, grad_attention: &Grid2D) -> Grid2D {
    let a = attention.values().values();
    let g = grad_attention.values();
    let dot: f64 = a.iter().zip(g).map(|(x, y)| x * y).sum();
    let values = a.iter().zip(g).map(|(x, y)| x * (y - dot)).collect();
    Grid2D::new(attention.values().height(), attention.values().width(), values)
        .expect("same shape as the attention map")
}

/// `f[c] = Σ_i A_i · F_i[c]`, or the unweighted spatial sum when no attention
/// map is given.
pub fn modulate_and_pool(features: &FeatureMap, attention: Option<&AttentionMap>) -> Result<PooledFeature> {
    let ch = features.channels();
    let mut out = vec![0.0; ch];
    match attention {
        Some(a) => {
            let grid = a.values();
            if grid.height() != features.height() || grid.width() != features.width() {
                return Err(Error::Shape(format!(
                    "attention grid {}x{} does not match features {}x{}",
                    grid.height(),
                    grid.width(),
                    features.height(),
                    features.width()
                )));
            }
            for (i, &wt) in grid.values().iter().enumerate() {
                for (o, &v) in out.iter_mut().zip(features.cell(i)) {
                    *o += wt * v;
                }
            }
        }
        None => {
            for i in 0..features.cells() {
                for (o, &v) in out.iter_mut().zip(features.cell(i)) {
                    *o += v;
                }
            }
        }
    }
    Ok(PooledFeature { values: out })
}

/// Gradient of the pooled vector with respect to the attention weights:
/// `dA_i = Σ_c df[c] · F_i[c]`.
pub fn pool_backward(features: &FeatureMap, grad_pooled: &[f64]) -> Grid2D {
    Grid2D::from_fn(features.height(), features.width(), |r, c| {
        features
            .cell(r * features.width() + c)
            .iter()
            .zip(grad_pooled)
            .map(|(a, b)| a * b)
            .sum()
    })
}

/// How densely to evaluate a kernel density estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KdeEvaluation {
    /// Every point contributes to every pixel.
    #[default]
    Exact,
    /// Contributions beyond 4σ (per axis) are dropped.
    Truncated,
}

/// Isotropic Gaussian KDE evaluated at pixel centers `(col + 0.5, row + 0.5)`:
/// `p(x) = (1/N) Σ_k exp(−‖x − g_k‖² / 2σ²) / (2πσ²)`.
pub fn kde_density_map(
    points: &[(f64, f64)],
    sigma: f64,
    out_height: usize,
    out_width: usize,
    evaluation: KdeEvaluation,
) -> Result<Grid2D> {
    if points.is_empty() {
        return Err(Error::invalid("density estimate needs at least one point"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("kde sigma must be positive, got {sigma}")));
    }
    if out_height == 0 || out_width == 0 {
        return Err(Error::invalid("kde output dimensions must be positive"));
    }
    let inv = 1.0 / (2.0 * sigma * sigma);
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma * points.len() as f64);
    let reach = 4.0 * sigma;

    // Separable: each point contributes gy ⊗ gx.
    let mut acc = vec![0.0; out_height * out_width];
    let mut gx = vec![0.0; out_width];
    let mut gy = vec![0.0; out_height];
    for &(x, y) in points {
        let (c0, c1, r0, r1) = match evaluation {
            KdeEvaluation::Exact => (0, out_width, 0, out_height),
            KdeEvaluation::Truncated => (
                window_start(x, reach),
                window_end(x, reach, out_width),
                window_start(y, reach),
                window_end(y, reach, out_height),
            ),
        };
        if c0 >= c1 || r0 >= r1 {
            continue;
        }
        for c in c0..c1 {
            let d = c as f64 + 0.5 - x;
            gx[c] = (-d * d * inv).exp();
        }
        for r in r0..r1 {
            let d = r as f64 + 0.5 - y;
            gy[r] = (-d * d * inv).exp();
        }
        for r in r0..r1 {
            let row = &mut acc[r * out_width..(r + 1) * out_width];
            let wy = gy[r];
            for c in c0..c1 {
                row[c] += wy * gx[c];
            }
        }
    }
    acc.iter_mut().for_each(|v| *v *= norm);
    Grid2D::new(out_height, out_width, acc)
}

fn window_start(center: f64, reach: f64) -> usize {
    (center - reach - 0.5).ceil().max(0.0) as usize
}

fn window_end(center: f64, reach: f64, extent: usize) -> usize {
    let end = (center + reach - 0.5).floor() + 1.0;
    (end.max(0.0) as usize).min(extent)
}

/// Mean log-density of `eval` points under the KDE built from `train`,
/// computed with log-sum-exp so distant points do not underflow.
pub fn kde_mean_log_likelihood(train: &[(f64, f64)], eval: &[(f64, f64)], sigma: f64) -> Result<f64> {
    if train.is_empty() || eval.is_empty() {
        return Err(Error::invalid("log-likelihood needs nonempty train and eval sets"));
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("kde sigma must be positive, got {sigma}")));
    }
    let inv = 1.0 / (2.0 * sigma * sigma);
    let log_norm = -(2.0 * std::f64::consts::PI * sigma * sigma).ln() - (train.len() as f64).ln();
    let mut exps = vec![0.0; train.len()];
    let mut total = 0.0;
    for &(x, y) in eval {
        let mut m = f64::NEG_INFINITY;
        for (e, &(gx, gy)) in exps.iter_mut().zip(train) {
            *e = -((x - gx).powi(2) + (y - gy).powi(2)) * inv;
            m = m.max(*e);
        }
        let s: f64 = exps.iter().map(|e| (e - m).exp()).sum();
        total += m + s.ln() + log_norm;
    }
    Ok(total / eval.len() as f64)
}

/// Stimulus-independent attention: KDE over all training gaze points with the
/// candidate σ that maximizes validation log-likelihood, resized to the
/// feature grid and renormalized.
pub fn center_attention_map(
    train: &FixationTable,
    validation: &FixationTable,
    sigma_candidates: &[f64],
    grid_height: usize,
    grid_width: usize,
) -> Result<(AttentionMap, f64)> {
    if train.is_empty() || validation.is_empty() {
        return Err(Error::invalid("center attention needs nonempty train and validation fixations"));
    }
    if sigma_candidates.is_empty() {
        return Err(Error::invalid("no sigma candidates"));
    }
    let train_pts = train.all_points();
    let val_pts = validation.all_points();
    let mut best: Option<(f64, f64)> = None;
    for &sigma in sigma_candidates {
        let ll = kde_mean_log_likelihood(&train_pts, &val_pts, sigma)?;
        if best.is_none_or(|(_, b)| ll > b) {
            best = Some((sigma, ll));
        }
    }
    let (sigma, _) = best.expect("candidates nonempty");
    let map = center_attention_map_with_sigma(train, sigma, grid_height, grid_width)?;
    Ok((map, sigma))
}

pub fn center_attention_map_with_sigma(
    fixations: &FixationTable,
    sigma: f64,
    grid_height: usize,
    grid_width: usize,
) -> Result<AttentionMap> {
    density_to_attention(
        &fixations.all_points(),
        sigma,
        fixations.stimulus_height(),
        fixations.stimulus_width(),
        grid_height,
        grid_width,
    )
}

fn density_to_attention(
    points: &[(f64, f64)],
    sigma: f64,
    stimulus_height: usize,
    stimulus_width: usize,
    grid_height: usize,
    grid_width: usize,
) -> Result<AttentionMap> {
    let density = kde_density_map(points, sigma, stimulus_height, stimulus_width, KdeEvaluation::Exact)?;
    let resized = bilinear_resize(&density, grid_height, grid_width)?;
    AttentionMap::normalize(resized)
}

/// Per-frame attention from that frame's gaze points: KDE at stimulus
/// resolution, bilinear resize to the feature grid, clamp and renormalize.
/// Frames without gaze fall back to `fallback` (normally the center map).
pub fn gaze_attention_map(
    frame_fixations: &[(f64, f64)],
    sigma: f64,
    stimulus: (usize, usize),
    grid: (usize, usize),
    fallback: Option<&AttentionMap>,
) -> Result<AttentionMap> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("gaze sigma must be positive, got {sigma}")));
    }
    if frame_fixations.is_empty() {
        return match fallback {
            Some(map) if map.values().height() == grid.0 && map.values().width() == grid.1 => Ok(map.clone()),
            Some(_) => Err(Error::Shape("fallback attention map does not match the grid".into())),
            None => Err(Error::invalid("frame has no fixations and no fallback map")),
        };
    }
    density_to_attention(frame_fixations, sigma, stimulus.0, stimulus.1, grid.0, grid.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fmap(h: usize, w: usize, c: usize, f: impl Fn(usize) -> f64) -> FeatureMap {
        FeatureMap::new(0, h, w, c, (0..h * w * c).map(f).collect()).unwrap()
    }

    #[test]
    fn zero_features_or_kernel_give_zero_saliency() {
        let zeros = fmap(4, 5, 3, |_| 0.0);
        let k = AttentionKernel::new(5, 3, (0..75).map(|i| i as f64 * 0.01).collect()).unwrap();
        assert!(saliency_forward(&zeros, &k).unwrap().values().values().iter().all(|&v| v == 0.0));

        let f = fmap(4, 5, 3, |i| (i as f64).sin());
        let zk = AttentionKernel::zeros(5, 3);
        assert!(saliency_forward(&f, &zk).unwrap().values().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_cell_saliency_is_rectified() {
        let f = FeatureMap::new(0, 1, 1, 2, vec![1.0, 2.0]).unwrap();
        let mut k = AttentionKernel::zeros(5, 2);
        let center = (2 * 5 + 2) * 2;
        k.weights_mut()[center] = 3.0;
        k.weights_mut()[center + 1] = -5.0;
        let s = saliency_forward(&f, &k).unwrap();
        assert_eq!(s.values().values(), &[0.0]);

        k.weights_mut()[center + 1] = 5.0;
        let trace = saliency_forward_traced(&f, &k).unwrap();
        assert_eq!(trace.pre_activation.values(), &[13.0]);
        // only the blur center tap lands inside a 1x1 grid
        let center_w = gaussian_kernel2d(5, 1.0).unwrap().weights().get(2, 2);
        assert!((trace.saliency.values().get(0, 0) - 13.0 * center_w).abs() < 1e-12);
    }

    #[test]
    fn channel_mismatch_rejected() {
        let f = fmap(3, 3, 2, |_| 1.0);
        let k = AttentionKernel::zeros(5, 3);
        assert!(matches!(saliency_forward(&f, &k), Err(Error::Shape(_))));
    }

    #[test]
    fn softmax_cases() {
        let uniform = spatial_softmax(&Grid2D::filled(2, 2, 0.7)).unwrap();
        assert!(uniform.values().values().iter().all(|&v| (v - 0.25).abs() < 1e-15));

        let s = Grid2D::new(2, 2, vec![2f64.ln(), 0.0, 0.0, 0.0]).unwrap();
        let a = spatial_softmax(&s).unwrap();
        let expected = [0.4, 0.2, 0.2, 0.2];
        for (v, e) in a.values().values().iter().zip(expected) {
            assert!((v - e).abs() < 1e-15);
        }

        let shifted = Grid2D::new(2, 2, s.values().iter().map(|v| v + 123.4).collect()).unwrap();
        let b = spatial_softmax(&shifted).unwrap();
        for (x, y) in a.values().values().iter().zip(b.values().values()) {
            assert!((x - y).abs() < 1e-12);
        }

        let bad = Grid2D::from_fn(1, 2, |_, c| if c == 0 { 1.0 } else { 0.0 });
        let mut bad = bad;
        bad.values_mut()[1] = f64::NAN;
        assert!(spatial_softmax(&bad).is_err());
    }

    #[test]
    fn softmax_handles_large_saliency() {
        let s = Grid2D::new(1, 3, vec![1000.0, 999.0, -50.0]).unwrap();
        let a = spatial_softmax(&s).unwrap();
        assert!((a.values().sum() - 1.0).abs() < 1e-12);
        assert!(a.values().values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn softmax_gradient_is_orthogonal_to_ones() {
        let s = Grid2D::from_fn(3, 4, |r, c| (r as f64 * 0.7 - c as f64 * 0.3).sin());
        let a = spatial_softmax(&s).unwrap();
        let g = Grid2D::from_fn(3, 4, |r, c| (r * 4 + c) as f64 - 5.5);
        let ds = softmax_backward(&a, &g);
        assert!(ds.sum().abs() < 1e-10);
    }

    #[test]
    fn pooling_cases() {
        let f = fmap(2, 3, 2, |i| i as f64 + 1.0);
        let uniform = AttentionMap::uniform(2, 3);
        let pooled = modulate_and_pool(&f, Some(&uniform)).unwrap();
        for c in 0..2 {
            let mean: f64 = (0..6).map(|i| f.cell(i)[c]).sum::<f64>() / 6.0;
            assert!((pooled.values[c] - mean).abs() < 1e-12);
        }

        let mut hot = Grid2D::zeros(2, 3);
        hot.set(1, 2, 1.0);
        let hot = AttentionMap::new(hot).unwrap();
        let pooled = modulate_and_pool(&f, Some(&hot)).unwrap();
        assert_eq!(pooled.values, f.cell(5));

        let f = FeatureMap::new(0, 1, 2, 1, vec![2.0, 4.0]).unwrap();
        let a = AttentionMap::new(Grid2D::new(1, 2, vec![0.25, 0.75]).unwrap()).unwrap();
        assert_eq!(modulate_and_pool(&f, Some(&a)).unwrap().values, vec![3.5]);
        assert_eq!(modulate_and_pool(&f, None).unwrap().values, vec![6.0]);

        let wrong = AttentionMap::uniform(2, 2);
        assert!(modulate_and_pool(&f, Some(&wrong)).is_err());
    }

    #[test]
    fn attention_map_validation() {
        assert!(AttentionMap::new(Grid2D::new(1, 2, vec![0.5, 0.6]).unwrap()).is_err());
        assert!(AttentionMap::new(Grid2D::new(1, 2, vec![-0.5, 1.5]).unwrap()).is_err());
        assert!(AttentionMap::normalize(Grid2D::zeros(2, 2)).is_err());
        let a = AttentionMap::normalize(Grid2D::new(1, 3, vec![-1.0, 1.0, 3.0]).unwrap()).unwrap();
        assert_eq!(a.values().values(), &[0.0, 0.25, 0.75]);
    }

    #[test]
    fn kde_single_point_peaks_at_its_pixel() {
        let d = kde_density_map(&[(6.5, 3.5)], 2.0, 10, 12, KdeEvaluation::Exact).unwrap();
        assert_eq!(d.argmax(), (3, 6));
    }

    #[test]
    fn kde_closed_form_at_one_sigma() {
        let sigma = 1.5;
        // point at a pixel center; the pixel one row below is exactly σ away
        let d = kde_density_map(&[(4.5, 2.0)], sigma, 8, 8, KdeEvaluation::Exact).unwrap();
        let at = d.get(3, 4); // center (4.5, 3.5): distance 1.5
        let expected = (-0.5f64).exp() / (2.0 * std::f64::consts::PI * sigma * sigma);
        assert!((at - expected).abs() < 1e-15);
    }

    #[test]
    fn kde_symmetric_points_give_symmetric_map() {
        let d = kde_density_map(&[(2.3, 4.0), (7.7, 4.0)], 1.7, 8, 10, KdeEvaluation::Exact).unwrap();
        for r in 0..8 {
            for c in 0..10 {
                assert!((d.get(r, c) - d.get(r, 9 - c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kde_truncation_is_close_to_exact() {
        let pts = [(10.2, 5.1), (3.3, 9.9), (17.0, 17.0)];
        let exact = kde_density_map(&pts, 2.0, 20, 20, KdeEvaluation::Exact).unwrap();
        let trunc = kde_density_map(&pts, 2.0, 20, 20, KdeEvaluation::Truncated).unwrap();
        let peak = exact.max();
        for (a, b) in exact.values().iter().zip(trunc.values()) {
            assert!((a - b).abs() <= peak * 1e-3);
        }
    }

    #[test]
    fn kde_rejects_empty_and_bad_sigma() {
        assert!(kde_density_map(&[], 1.0, 4, 4, KdeEvaluation::Exact).is_err());
        assert!(kde_density_map(&[(1.0, 1.0)], 0.0, 4, 4, KdeEvaluation::Exact).is_err());
    }

    #[test]
    fn log_likelihood_matches_direct_density() {
        let train = [(1.0, 2.0), (3.0, 1.5), (2.2, 2.2)];
        let eval = [(2.0, 2.0), (0.5, 0.5)];
        let sigma = 0.8;
        let ll = kde_mean_log_likelihood(&train, &eval, sigma).unwrap();
        let direct: f64 = eval
            .iter()
            .map(|&(x, y)| {
                let p: f64 = train
                    .iter()
                    .map(|&(gx, gy)| {
                        (-((x - gx) * (x - gx) + (y - gy) * (y - gy)) / (2.0 * sigma * sigma)).exp()
                            / (2.0 * std::f64::consts::PI * sigma * sigma)
                    })
                    .sum::<f64>()
                    / 3.0;
                p.ln()
            })
            .sum::<f64>()
            / 2.0;
        assert!((ll - direct).abs() < 1e-12);
    }

    fn table(h: usize, w: usize, pts: &[(u64, f64, f64)]) -> FixationTable {
        let rows = pts
            .iter()
            .enumerate()
            .map(|(i, &(frame_id, x, y))| Fixation { frame_id, subject_id: i as u64, x, y })
            .collect();
        FixationTable::new(h, w, rows).unwrap()
    }

    #[test]
    fn fixation_table_rejects_out_of_bounds() {
        let rows = vec![Fixation { frame_id: 0, subject_id: 0, x: 1280.0, y: 5.0 }];
        assert!(FixationTable::new(720, 1280, rows).is_err());
        let t = table(720, 1280, &[(3, 1.0, 1.0), (1, 2.0, 2.0), (3, 4.0, 4.0)]);
        assert_eq!(t.points_for(3), vec![(1.0, 1.0), (4.0, 4.0)]);
        assert!(t.points_for(2).is_empty());
        assert_eq!(t.frame_ids().collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn center_map_concentrates_on_a_single_location() {
        // 40x60 stimulus onto a 4x6 grid: cell (1, 2) samples the stimulus at (25, 15)
        let pts: Vec<_> = (0..5).map(|f| (f, 25.0, 15.0)).collect();
        let t = table(40, 60, &pts);
        let (map, sigma) = center_attention_map(&t, &t, &[0.5, 30.0], 4, 6).unwrap();
        assert_eq!(sigma, 0.5);
        assert_eq!(map.values().argmax(), (1, 2));
        assert!(map.values().get(1, 2) > 0.99);
        assert!((map.values().sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn center_map_rejects_empty_inputs() {
        let t = table(10, 10, &[(0, 1.0, 1.0)]);
        let empty = FixationTable::new(10, 10, vec![]).unwrap();
        assert!(center_attention_map(&empty, &t, &[1.0], 2, 2).is_err());
        assert!(center_attention_map(&t, &empty, &[1.0], 2, 2).is_err());
        assert!(center_attention_map(&t, &t, &[], 2, 2).is_err());
    }

    #[test]
    fn gaze_map_centered_fixation() {
        let a = gaze_attention_map(&[(32.0, 24.0)], 4.0, (48, 64), (5, 7), None).unwrap();
        assert_eq!(a.values().argmax(), (2, 3));
        assert!((a.values().sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaze_map_mirrored_fixations_are_symmetric() {
        let a = gaze_attention_map(&[(13.0, 20.0), (51.0, 20.0)], 5.0, (48, 64), (6, 8), None).unwrap();
        let g = a.values();
        for r in 0..6 {
            for c in 0..8 {
                assert!((g.get(r, c) - g.get(r, 7 - c)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gaze_map_falls_back_when_frame_has_no_gaze() {
        let center = AttentionMap::uniform(3, 4);
        let a = gaze_attention_map(&[], 2.0, (30, 40), (3, 4), Some(&center)).unwrap();
        assert_eq!(a, center);
        assert!(gaze_attention_map(&[], 2.0, (30, 40), (3, 4), None).is_err());
        assert!(gaze_attention_map(&[(1.0, 1.0)], 0.0, (30, 40), (3, 4), None).is_err());
    }
}
