//! Encoding models from feature maps to voxel responses.
//!
//! A model pools a feature map into a vector (optionally through an
//! attention map, which may itself be learned) and maps it to voxel
//! responses with a linear or convolutional head. Gradients of the mean
//! squared error are computed by hand-written reverse-mode passes.

pub mod head;
pub mod ridge;
pub mod train;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::attention::{
    self, AttentionKernel, AttentionMap, FeatureMap, FixationTable, SaliencyTrace, ATTENTION_KERNEL_SIZE,
};
use crate::error::{Error, Result};
use crate::numerics::Grid2D;
use crate::rng::SeedStream;

pub use head::{ConvHead, ConvHeadShape, Head, LinearHead};
pub use ridge::{ridge_cv_select, ridge_fit, RidgeConfig, RidgeFit, RidgeSelection};
pub use train::{predict_pairs, targets_matrix, train_encoder, Adam, EpochLoss, TrainOutcome};

/// How features are spatially reduced before the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttentionMode {
    /// Unweighted spatial sum.
    None,
    /// One stimulus-independent map from all training gaze.
    Center,
    /// Per-frame maps from that frame's gaze.
    Gaze,
    /// Saliency computed by a trainable filter, normalized by spatial softmax.
    Learned,
    /// No pooling: the flattened feature map feeds the head.
    NoPool,
}

impl AttentionMode {
    pub const ALL: [AttentionMode; 5] =
        [AttentionMode::None, AttentionMode::Center, AttentionMode::Gaze, AttentionMode::Learned, AttentionMode::NoPool];

    pub fn as_str(&self) -> &'static str {
        match self {
            AttentionMode::None => "none",
            AttentionMode::Center => "center",
            AttentionMode::Gaze => "gaze",
            AttentionMode::Learned => "learned",
            AttentionMode::NoPool => "nopool",
        }
    }

    pub fn needs_fixations(&self) -> bool {
        matches!(self, AttentionMode::Center | AttentionMode::Gaze)
    }
}

impl fmt::Display for AttentionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttentionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AttentionMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown attention mode '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadKind {
    Linear,
    Conv,
}

impl HeadKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            HeadKind::Linear => "linear",
            HeadKind::Conv => "conv",
        }
    }
}

impl FromStr for HeadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(HeadKind::Linear),
            "conv" => Ok(HeadKind::Conv),
            _ => Err(Error::invalid(format!("unknown head '{s}'"))),
        }
    }
}

/// How head parameters are fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Gradient training with Adam.
    Adam,
    /// Closed-form ridge with a cross-validated penalty (linear head only).
    Ridge,
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(Solver::Adam),
            "ridge" => Ok(Solver::Ridge),
            _ => Err(Error::invalid(format!("unknown solver '{s}'"))),
        }
    }
}

impl Solver {
    pub fn as_str(&self) -> &'static str {
        match self {
            Solver::Adam => "adam",
            Solver::Ridge => "ridge",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub attention_mode: AttentionMode,
    pub head: HeadKind,
    pub solver: Solver,
    pub lag_seconds: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Width of the conv head's fully connected layer. `None` picks 1024,
    /// or 256 without pooling.
    pub hidden_units: Option<usize>,
    pub conv_head: ConvHeadShape,
    /// Voxel volume predicted by the conv head; defaults to the dataset's grid.
    pub output_dims: Option<[usize; 3]>,
    /// Mini-batch size; 0 means full batch.
    pub batch_size: usize,
    /// Independent Adam runs from different initializations; the one with
    /// the lowest final validation loss (training loss without validation
    /// data) is kept.
    pub restarts: usize,
    pub kernel_size: usize,
    /// Gaze KDE bandwidth in stimulus pixels. `None` selects from `sigma_candidates`.
    pub sigma: Option<f64>,
    pub sigma_candidates: Vec<f64>,
    pub ridge: RidgeConfig,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            attention_mode: AttentionMode::Learned,
            head: HeadKind::Linear,
            solver: Solver::Adam,
            lag_seconds: 4,
            epochs: 25,
            learning_rate: 1e-4,
            seed: 0,
            hidden_units: None,
            conv_head: ConvHeadShape::default(),
            output_dims: None,
            batch_size: 0,
            restarts: 1,
            kernel_size: ATTENTION_KERNEL_SIZE,
            sigma: None,
            sigma_candidates: vec![5.0, 10.0, 20.0, 40.0],
            ridge: RidgeConfig::default(),
        }
    }
}

impl EncoderConfig {
    pub fn resolved_hidden_units(&self) -> usize {
        self.hidden_units.unwrap_or(match self.attention_mode {
            AttentionMode::NoPool => 256,
            _ => 1024,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid(format!("learning rate must be nonnegative, got {}", self.learning_rate)));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        if self.kernel_size == 0 || self.kernel_size % 2 == 0 {
            return Err(Error::invalid(format!("kernel size must be odd, got {}", self.kernel_size)));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0) {
                return Err(Error::invalid(format!("sigma must be positive, got {s}")));
            }
        }
        if self.sigma.is_none() && self.sigma_candidates.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::invalid("sigma candidates must be positive"));
        }
        if self.solver == Solver::Ridge {
            if self.head != HeadKind::Linear {
                return Err(Error::invalid("ridge solver requires the linear head"));
            }
            if self.attention_mode == AttentionMode::Learned {
                return Err(Error::invalid("learned attention cannot be fitted with the ridge solver"));
            }
            self.ridge.validate()?;
        }
        Ok(())
    }
}

/// Voxel-grid geometry for the conv head: the volume and which of its cells
/// are predicted (flat row-major indices).
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGeometry {
    pub dims: [usize; 3],
    pub voxel_index: Vec<usize>,
}

impl VoxelGeometry {
    /// Every cell of `dims`, in row-major order.
    pub fn full(dims: [usize; 3]) -> Self {
        Self { dims, voxel_index: (0..dims.iter().product()).collect() }
    }

    pub fn from_mask(dims: [usize; 3], mask: &[f64]) -> Result<Self> {
        if mask.len() != dims.iter().product::<usize>() {
            return Err(Error::Shape(format!("voxel mask has {} cells, grid {dims:?}", mask.len())));
        }
        let voxel_index = mask.iter().enumerate().filter(|(_, &m)| m != 0.0).map(|(i, _)| i).collect();
        Ok(Self { dims, voxel_index })
    }
}

/// Spatial dims and channel count the model expects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl FeatureShape {
    pub fn of(f: &FeatureMap) -> Self {
        Self { height: f.height(), width: f.width(), channels: f.channels() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    pub config: EncoderConfig,
    pub feature_shape: FeatureShape,
    /// Present iff the attention mode is learned.
    pub attention_kernel: Option<AttentionKernel>,
    pub head: Head,
    /// Center map for center mode; fallback map for gaze frames without gaze.
    pub fixed_attention: Option<AttentionMap>,
    /// Per-voxel training statistics used to standardize targets.
    pub target_mean: Vec<f64>,
    pub target_std: Vec<f64>,
}

impl EncoderModel {
    /// Builds a model with zeroed parameters.
    pub fn new(
        config: EncoderConfig,
        feature_shape: FeatureShape,
        voxels: usize,
        geometry: Option<&VoxelGeometry>,
    ) -> Result<Self> {
        config.validate()?;
        if voxels == 0 {
            return Err(Error::invalid("model needs at least one voxel"));
        }
        let inputs = match config.attention_mode {
            AttentionMode::NoPool => feature_shape.height * feature_shape.width * feature_shape.channels,
            _ => feature_shape.channels,
        };
        let head = match config.head {
            HeadKind::Linear => Head::Linear(LinearHead::zeros(inputs, voxels)),
            HeadKind::Conv => {
                let geometry = match (config.output_dims, geometry) {
                    (Some(dims), Some(g)) if g.dims == dims => g.clone(),
                    (Some(dims), _) => VoxelGeometry::full(dims),
                    (None, Some(g)) => g.clone(),
                    (None, None) => return Err(Error::invalid("conv head needs output dims or a voxel grid")),
                };
                if geometry.voxel_index.len() != voxels {
                    return Err(Error::Shape(format!(
                        "voxel grid selects {} voxels, responses have {voxels}",
                        geometry.voxel_index.len()
                    )));
                }
                Head::Conv(ConvHead::new(
                    inputs,
                    config.resolved_hidden_units(),
                    &config.conv_head,
                    geometry.dims,
                    geometry.voxel_index,
                )?)
            }
        };
        let attention_kernel = (config.attention_mode == AttentionMode::Learned)
            .then(|| AttentionKernel::zeros(config.kernel_size, feature_shape.channels));
        Ok(Self {
            config,
            feature_shape,
            attention_kernel,
            head,
            fixed_attention: None,
            target_mean: vec![0.0; voxels],
            target_std: vec![1.0; voxels],
        })
    }

    pub fn voxels(&self) -> usize {
        self.head.outputs()
    }

    /// Seeded uniform fan-in initialization of every trainable tensor.
    pub fn init_parameters(&mut self) {
        self.init_parameters_from(&SeedStream::new(self.config.seed));
    }

    pub(crate) fn init_parameters_from(&mut self, stream: &SeedStream) {
        if let Some(k) = &mut self.attention_kernel {
            let fan = k.size() * k.size() * k.channels();
            let bound = 1.0 / (fan as f64).sqrt();
            let mut rng = stream.rng("init/attention.kernel");
            k.weights_mut().iter_mut().for_each(|v| *v = rng.random_range(-bound..=bound));
        }
        self.head.init_uniform(|name| stream.rng(&format!("init/{name}")));
    }

    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.attention_kernel.is_some() {
            names.push("attention.kernel".to_string());
        }
        names.extend(self.head.param_names());
        names
    }

    pub fn parameter_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        if let Some(k) = &self.attention_kernel {
            shapes.push(vec![k.size(), k.size(), k.channels()]);
        }
        shapes.extend(self.head.param_shapes());
        shapes
    }

    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut p: Vec<&[f64]> = Vec::new();
        if let Some(k) = &self.attention_kernel {
            p.push(k.weights());
        }
        p.extend(self.head.params());
        p
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut p: Vec<&mut [f64]> = Vec::new();
        if let Some(k) = &mut self.attention_kernel {
            p.push(k.weights_mut());
        }
        p.extend(self.head.params_mut());
        p
    }

    /// Attention map to use for `frame_id` under a fixed-attention mode.
    /// Gaze frames without recorded gaze use the center map.
    pub fn frame_attention(&self, frame_id: u64, fixations: Option<&FixationTable>) -> Result<Option<AttentionMap>> {
        match self.config.attention_mode {
            AttentionMode::Gaze => {
                let fixations =
                    fixations.ok_or_else(|| Error::invalid("gaze attention needs a fixation table"))?;
                let sigma = self.config.sigma.ok_or_else(|| Error::invalid("gaze model has no sigma"))?;
                let map = attention::gaze_attention_map(
                    &fixations.points_for(frame_id),
                    sigma,
                    (fixations.stimulus_height(), fixations.stimulus_width()),
                    (self.feature_shape.height, self.feature_shape.width),
                    self.fixed_attention.as_ref(),
                )?;
                Ok(Some(map))
            }
            AttentionMode::Center => Ok(self.fixed_attention.clone()),
            _ => Ok(None),
        }
    }

    /// Maps standardized predictions back to response units.
    pub fn denormalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.target_mean).zip(&self.target_std).map(|((v, m), s)| v * s + m).collect()
    }

    /// Standardizes raw targets with the training statistics.
    pub fn normalize_target(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.target_mean).zip(&self.target_std).map(|((v, m), s)| (v - m) / s).collect()
    }

    fn check_features(&self, features: &FeatureMap) -> Result<()> {
        if FeatureShape::of(features) != self.feature_shape {
            return Err(Error::Shape(format!(
                "features {}x{}x{} do not match model {}x{}x{}",
                features.height(),
                features.width(),
                features.channels(),
                self.feature_shape.height,
                self.feature_shape.width,
                self.feature_shape.channels
            )));
        }
        Ok(())
    }
}

/// Everything the forward pass produced for one sample.
#[derive(Debug, Clone)]
struct ForwardTrace {
    saliency: Option<SaliencyTrace>,
    attention: Option<AttentionMap>,
    head_input: Vec<f64>,
    head_trace: head::HeadTrace,
    output: Vec<f64>,
}

fn forward_traced(
    model: &EncoderModel,
    features: &FeatureMap,
    frame_attention: Option<&AttentionMap>,
) -> Result<ForwardTrace> {
    model.check_features(features)?;
    let mut saliency = None;
    let (head_input, attention) = match model.config.attention_mode {
        AttentionMode::NoPool => (features.data().to_vec(), None),
        AttentionMode::None => (attention::modulate_and_pool(features, None)?.values, None),
        AttentionMode::Learned => {
            let kernel = model.attention_kernel.as_ref().expect("learned model has a kernel");
            let trace = attention::saliency_forward_traced(features, kernel)?;
            let a = attention::spatial_softmax(trace.saliency.values())?;
            saliency = Some(trace);
            (attention::modulate_and_pool(features, Some(&a))?.values, Some(a))
        }
        AttentionMode::Center => {
            let a = model
                .fixed_attention
                .as_ref()
                .ok_or_else(|| Error::invalid("center model has no attention map"))?;
            (attention::modulate_and_pool(features, Some(a))?.values, Some(a.clone()))
        }
        AttentionMode::Gaze => {
            let a = frame_attention.ok_or_else(|| Error::invalid("gaze mode needs a per-frame attention map"))?;
            (attention::modulate_and_pool(features, Some(a))?.values, Some(a.clone()))
        }
    };
    let (output, head_trace) = model.head.forward(&head_input);
    if let Some(i) = output.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("prediction for voxel {i} of frame {}", features.frame_id)));
    }
    Ok(ForwardTrace { saliency, attention, head_input, head_trace, output })
}

/// Predicted (standardized) responses for one frame plus the attention map
/// that was applied, if any. Gaze models need the frame's map in
/// `frame_attention`.
pub fn encoder_forward(
    model: &EncoderModel,
    features: &FeatureMap,
    frame_attention: Option<&AttentionMap>,
) -> Result<(Vec<f64>, Option<AttentionMap>)> {
    let t = forward_traced(model, features, frame_attention)?;
    Ok((t.output, t.attention))
}

/// One training example for [`encoder_backward`].
#[derive(Debug, Clone, Copy)]
pub struct BatchItem<'a> {
    pub features: &'a FeatureMap,
    pub attention: Option<&'a AttentionMap>,
    pub target: &'a [f64],
}

/// Loss and gradients aligned with [`EncoderModel::parameters`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub loss: f64,
    pub tensors: Vec<Vec<f64>>,
    /// Gradient with respect to the saliency map of each sample (learned mode).
    pub saliency: Vec<Grid2D>,
}

/// Mean squared error over batch and voxels and its exact gradient with
/// respect to every trainable tensor.
pub fn encoder_backward(model: &EncoderModel, batch: &[BatchItem<'_>]) -> Result<Gradients> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let voxels = model.voxels();
    let names = model.parameter_names();
    let mut tensors: Vec<Vec<f64>> = model.parameters().iter().map(|p| vec![0.0; p.len()]).collect();
    let head_offset = usize::from(model.attention_kernel.is_some());
    let scale = 2.0 / (batch.len() * voxels) as f64;
    let mut loss = 0.0;
    let mut saliency_grads = Vec::new();

    for item in batch {
        if item.target.len() != voxels {
            return Err(Error::Shape(format!("target has {} voxels, model {voxels}", item.target.len())));
        }
        let t = forward_traced(model, item.features, item.attention)?;
        let mut grad_out = Vec::with_capacity(voxels);
        for (y, target) in t.output.iter().zip(item.target) {
            let r = y - target;
            loss += r * r;
            grad_out.push(scale * r);
        }
        let grad_input = model.head.backward(&t.head_input, &t.head_trace, &grad_out, &mut tensors[head_offset..]);

        if let (Some(kernel), Some(trace), Some(a)) = (&model.attention_kernel, &t.saliency, &t.attention) {
            let grad_attention = attention::pool_backward(item.features, &grad_input);
            let grad_saliency = attention::softmax_backward(a, &grad_attention);
            let gk = attention::saliency_backward(item.features, kernel, trace, &grad_saliency)?;
            for (acc, g) in tensors[0].iter_mut().zip(gk) {
                *acc += g;
            }
            saliency_grads.push(grad_saliency);
        }
    }
    loss /= (batch.len() * voxels) as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss".into()));
    }
    for (name, g) in names.iter().zip(&tensors) {
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of {name} at index {i}")));
        }
    }
    Ok(Gradients { loss, tensors, saliency: saliency_grads })
}

/// Mean squared error of the model over a set of samples.
pub fn mean_squared_error(model: &EncoderModel, batch: &[BatchItem<'_>]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let mut total = 0.0;
    for item in batch {
        let (y, _) = encoder_forward(model, item.features, item.attention)?;
        total += y.iter().zip(item.target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(total / (batch.len() * model.voxels()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(h: usize, w: usize, c: usize, seed: f64) -> FeatureMap {
        FeatureMap::new(
            0,
            h,
            w,
            c,
            (0..h * w * c).map(|i| ((i as f64 + seed) * 0.731).sin() + 0.5).collect(),
        )
        .unwrap()
    }

    fn linear_model(mode: AttentionMode, shape: FeatureShape, voxels: usize) -> EncoderModel {
        let config = EncoderConfig { attention_mode: mode, seed: 3, ..Default::default() };
        let mut m = EncoderModel::new(config, shape, voxels, None).unwrap();
        m.init_parameters();
        m
    }

    #[test]
    fn zero_kernel_matches_uniform_pooling() {
        let f = features(3, 4, 5, 0.0);
        let shape = FeatureShape::of(&f);
        let mut learned = linear_model(AttentionMode::Learned, shape, 6);
        learned.attention_kernel = Some(AttentionKernel::zeros(5, 5));
        let (y, a) = encoder_forward(&learned, &f, None).unwrap();
        let a = a.unwrap();
        assert!(a.values().values().iter().all(|v| (v - 1.0 / 12.0).abs() < 1e-15));

        let pooled = attention::modulate_and_pool(&f, Some(&AttentionMap::uniform(3, 4))).unwrap();
        let expected = learned.head.forward(&pooled.values).0;
        for (p, q) in y.iter().zip(expected) {
            assert!((p - q).abs() < 1e-12);
        }

        // none mode with the same head sees n times the uniform pooled vector
        let mut none = linear_model(AttentionMode::None, shape, 6);
        none.head = learned.head.clone();
        let sum = attention::modulate_and_pool(&f, None).unwrap();
        for (s, p) in sum.values.iter().zip(&pooled.values) {
            assert!((s / 12.0 - p).abs() < 1e-12);
        }
        let (y_none, a_none) = encoder_forward(&none, &f, None).unwrap();
        assert!(a_none.is_none());
        assert_eq!(y_none, none.head.forward(&sum.values).0);
    }

    #[test]
    fn tiny_linear_config_matches_dense_algebra() {
        // 2x2x3 features, 4 voxels, center-style fixed attention
        let f = FeatureMap::new(0, 2, 2, 3, vec![1., 2., 3., 4., 5., 6., 7., 8., 9., 10., 11., 12.]).unwrap();
        let shape = FeatureShape::of(&f);
        let mut m = linear_model(AttentionMode::Center, shape, 4);
        m.fixed_attention = Some(AttentionMap::new(Grid2D::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap()).unwrap());
        let w: Vec<f64> = (0..12).map(|i| i as f64 * 0.5 - 2.0).collect();
        let b = vec![1.0, -1.0, 0.5, 0.0];
        m.head = Head::Linear(LinearHead { inputs: 3, outputs: 4, weight: w.clone(), bias: b.clone() });
        // pooled: f[c] = Σ_i a_i F_i[c]
        let pooled = [
            0.1 * 1. + 0.2 * 4. + 0.3 * 7. + 0.4 * 10.,
            0.1 * 2. + 0.2 * 5. + 0.3 * 8. + 0.4 * 11.,
            0.1 * 3. + 0.2 * 6. + 0.3 * 9. + 0.4 * 12.,
        ];
        let (y, _) = encoder_forward(&m, &f, None).unwrap();
        for o in 0..4 {
            let e = b[o] + (0..3).map(|i| w[o * 3 + i] * pooled[i]).sum::<f64>();
            assert!((y[o] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn one_hot_pooled_input_reproduces_weight_column() {
        let mut f = FeatureMap::new(0, 1, 2, 3, vec![0.0; 6]).unwrap();
        f = FeatureMap::new(f.frame_id, 1, 2, 3, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let mut m = linear_model(AttentionMode::None, FeatureShape::of(&f), 2);
        m.head = Head::Linear(LinearHead { inputs: 3, outputs: 2, weight: vec![1., 2., 3., 4., 5., 6.], bias: vec![0.1, 0.2] });
        let (y, _) = encoder_forward(&m, &f, None).unwrap();
        assert!((y[0] - 2.1).abs() < 1e-15 && (y[1] - 5.2).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let f = features(3, 4, 5, 0.0);
        let m = linear_model(AttentionMode::None, FeatureShape { height: 3, width: 4, channels: 6 }, 2);
        assert!(matches!(encoder_forward(&m, &f, None), Err(Error::Shape(_))));
    }

    #[test]
    fn zero_parameters_and_targets_give_zero_loss_and_gradient() {
        let f = FeatureMap::new(0, 2, 2, 2, vec![0.0; 8]).unwrap();
        let config = EncoderConfig { attention_mode: AttentionMode::Learned, ..Default::default() };
        let m = EncoderModel::new(config, FeatureShape::of(&f), 3, None).unwrap();
        let target = [0.0; 3];
        let g = encoder_backward(&m, &[BatchItem { features: &f, attention: None, target: &target }]).unwrap();
        assert_eq!(g.loss, 0.0);
        assert!(g.tensors.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn saliency_gradient_sums_to_zero() {
        let f = features(4, 4, 3, 1.0);
        let m = linear_model(AttentionMode::Learned, FeatureShape::of(&f), 5);
        let target = [0.3, -0.2, 1.0, 0.0, 0.7];
        let g = encoder_backward(&m, &[BatchItem { features: &f, attention: None, target: &target }]).unwrap();
        assert_eq!(g.saliency.len(), 1);
        assert!(g.saliency[0].sum().abs() < 1e-10);
    }

    #[test]
    fn gaze_mode_requires_a_map() {
        let f = features(2, 2, 2, 0.0);
        let m = linear_model(AttentionMode::Gaze, FeatureShape::of(&f), 1);
        assert!(encoder_forward(&m, &f, None).is_err());
        let a = AttentionMap::uniform(2, 2);
        assert!(encoder_forward(&m, &f, Some(&a)).is_ok());
    }

    #[test]
    fn config_validation() {
        let mut c = EncoderConfig { solver: Solver::Ridge, ..Default::default() };
        assert!(c.validate().is_err()); // learned + ridge
        c.attention_mode = AttentionMode::None;
        assert!(c.validate().is_ok());
        c.head = HeadKind::Conv;
        assert!(c.validate().is_err());
        assert_eq!(EncoderConfig { attention_mode: AttentionMode::NoPool, ..Default::default() }.resolved_hidden_units(), 256);
        assert_eq!(EncoderConfig::default().resolved_hidden_units(), 1024);
        assert!("bogus".parse::<AttentionMode>().is_err());
        for m in AttentionMode::ALL {
            assert_eq!(m.as_str().parse::<AttentionMode>().unwrap(), m);
        }
    }
}
