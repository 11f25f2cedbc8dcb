use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::{
    encoder_backward, mean_squared_error, ridge_cv_select, AttentionMode, BatchItem, EncoderConfig, EncoderModel,
    FeatureShape, Head, Solver, VoxelGeometry,
};
use crate::attention::{self, AttentionMap, FixationTable};
use crate::error::{Error, Result};
use crate::io::dataset::Pair;
use crate::numerics::{Matrix, DEGENERATE_STD};
use crate::rng::SeedStream;

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    steps: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(learning_rate: f64, sizes: &[usize]) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            steps: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn steps(&self) -> i32 {
        self.steps
    }

    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: &[Vec<f64>]) {
        self.steps += 1;
        let c1 = 1.0 - self.beta1.powi(self.steps);
        let c2 = 1.0 - self.beta2.powi(self.steps);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    /// 0 is the loss before any update.
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: EncoderModel,
    pub trace: Vec<EpochLoss>,
}

/// Per-frame attention maps for the fixed-attention modes.
#[derive(Debug, Clone, Default)]
pub struct AttentionPlan {
    pub sigma: Option<f64>,
    pub center: Option<AttentionMap>,
    pub per_frame: BTreeMap<u64, AttentionMap>,
}

/// Builds the center map (and per-frame gaze maps) for the given splits.
/// The bandwidth is `config.sigma` if set, otherwise the candidate that
/// maximizes validation gaze log-likelihood.
pub fn plan_attention(
    config: &EncoderConfig,
    fixations: Option<&FixationTable>,
    train_frames: &[u64],
    validation_frames: &[u64],
    grid: (usize, usize),
) -> Result<AttentionPlan> {
    let mode = config.attention_mode;
    if !mode.needs_fixations() {
        return Ok(AttentionPlan::default());
    }
    let fixations = fixations.ok_or_else(|| Error::invalid(format!("{mode} attention needs fixations")))?;
    let in_train: std::collections::BTreeSet<u64> = train_frames.iter().copied().collect();
    let in_val: std::collections::BTreeSet<u64> = validation_frames.iter().copied().collect();
    let train_fix = fixations.filter_frames(|f| in_train.contains(&f));
    if train_fix.is_empty() {
        return Err(Error::invalid("no fixations recorded for training frames"));
    }
    let (center, sigma) = match config.sigma {
        Some(s) => (attention::center_attention_map_with_sigma(&train_fix, s, grid.0, grid.1)?, s),
        None => {
            let val_fix = fixations.filter_frames(|f| in_val.contains(&f));
            if val_fix.is_empty() {
                return Err(Error::invalid("selecting sigma needs fixations on validation frames"));
            }
            attention::center_attention_map(&train_fix, &val_fix, &config.sigma_candidates, grid.0, grid.1)?
        }
    };
    let mut per_frame = BTreeMap::new();
    if mode == AttentionMode::Gaze {
        for &f in train_frames.iter().chain(validation_frames) {
            let map = attention::gaze_attention_map(
                &fixations.points_for(f),
                sigma,
                (fixations.stimulus_height(), fixations.stimulus_width()),
                grid,
                Some(&center),
            )?;
            per_frame.insert(f, map);
        }
    }
    Ok(AttentionPlan { sigma: Some(sigma), center: Some(center), per_frame })
}

fn target_stats(pairs: &[Pair], voxels: usize) -> (Vec<f64>, Vec<f64>) {
    let n = pairs.len() as f64;
    let mut mean = vec![0.0; voxels];
    for p in pairs {
        for (m, v) in mean.iter_mut().zip(&p.target) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; voxels];
    for p in pairs {
        for ((s, v), m) in var.iter_mut().zip(&p.target).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd < DEGENERATE_STD {
                1.0
            } else {
                sd
            }
        })
        .collect();
    (mean, std)
}

struct Prepared {
    targets: Vec<Vec<f64>>,
    attention: Vec<Option<AttentionMap>>,
}

fn prepare(model: &EncoderModel, pairs: &[Pair], plan: &AttentionPlan) -> Prepared {
    let targets = pairs.iter().map(|p| model.normalize_target(&p.target)).collect();
    let attention = pairs.iter().map(|p| plan.per_frame.get(&p.frame_id).cloned()).collect();
    Prepared { targets, attention }
}

fn batch_items<'a>(pairs: &'a [Pair], prep: &'a Prepared, idx: &[usize]) -> Vec<BatchItem<'a>> {
    idx.iter()
        .map(|&i| BatchItem {
            features: &pairs[i].features,
            attention: prep.attention[i].as_ref(),
            target: &prep.targets[i],
        })
        .collect()
}

/// Fits an encoding model.
///
/// Targets are standardized per voxel with training statistics. With the
/// Adam solver, parameters start from a seeded uniform fan-in draw and are
/// updated for `config.epochs` passes (full batch unless `batch_size` is
/// set; mini-batch order is reshuffled from the seed each epoch). The
/// returned trace holds the full training (and validation) loss before
/// training and after every epoch.
pub fn train_encoder(
    config: &EncoderConfig,
    train: &[Pair],
    validation: &[Pair],
    fixations: Option<&FixationTable>,
    geometry: Option<&VoxelGeometry>,
) -> Result<TrainOutcome> {
    config.validate()?;
    let first = train.first().ok_or_else(|| Error::invalid("training set is empty"))?;
    let shape = FeatureShape::of(&first.features);
    let voxels = first.target.len();
    for p in train.iter().chain(validation) {
        if FeatureShape::of(&p.features) != shape || p.target.len() != voxels {
            return Err(Error::Shape(format!("frame {} does not match the first training pair", p.frame_id)));
        }
    }

    let mut model = EncoderModel::new(config.clone(), shape, voxels, geometry)?;
    let train_frames: Vec<u64> = train.iter().map(|p| p.frame_id).collect();
    let val_frames: Vec<u64> = validation.iter().map(|p| p.frame_id).collect();
    let plan = plan_attention(config, fixations, &train_frames, &val_frames, (shape.height, shape.width))?;
    model.config.sigma = plan.sigma.or(config.sigma);
    model.fixed_attention = plan.center.clone();
    let (mean, std) = target_stats(train, voxels);
    model.target_mean = mean;
    model.target_std = std;
    model.init_parameters();

    let train_prep = prepare(&model, train, &plan);
    let val_prep = prepare(&model, validation, &plan);
    let all_train: Vec<usize> = (0..train.len()).collect();
    let all_val: Vec<usize> = (0..validation.len()).collect();

    let losses = |model: &EncoderModel, epoch: usize| -> Result<EpochLoss> {
        let train_loss = mean_squared_error(model, &batch_items(train, &train_prep, &all_train))?;
        let validation_loss = if validation.is_empty() {
            None
        } else {
            Some(mean_squared_error(model, &batch_items(validation, &val_prep, &all_val))?)
        };
        if !train_loss.is_finite() || validation_loss.is_some_and(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("loss after epoch {epoch}")));
        }
        Ok(EpochLoss { epoch, train_loss, validation_loss })
    };

    let mut trace = vec![losses(&model, 0)?];

    if config.solver == Solver::Ridge {
        fit_ridge_head(&mut model, train, &train_prep)?;
        trace.push(losses(&model, 1)?);
        return Ok(TrainOutcome { model, trace });
    }

    let mut best: Option<(f64, EncoderModel, Vec<EpochLoss>)> = None;
    for restart in 0..config.restarts {
        // restart 0 uses the configured seed directly so a single run is unchanged
        let stream = match restart {
            0 => SeedStream::new(config.seed),
            r => SeedStream::new(SeedStream::new(config.seed).seed_for(&format!("restart/{r}"))),
        };
        let mut run = model.clone();
        if restart > 0 {
            run.init_parameters_from(&stream);
        }
        let mut run_trace = if restart == 0 { trace.clone() } else { vec![losses(&run, 0)?] };
        let sizes: Vec<usize> = run.parameters().iter().map(|p| p.len()).collect();
        let mut adam = Adam::new(config.learning_rate, &sizes);
        let mut order = all_train.clone();
        let mut shuffle = stream.rng("shuffle");
        let batch = if config.batch_size == 0 { train.len() } else { config.batch_size.min(train.len()) };
        for epoch in 1..=config.epochs {
            if batch < train.len() {
                order.shuffle(&mut shuffle);
            }
            for chunk in order.chunks(batch) {
                let grads = encoder_backward(&run, &batch_items(train, &train_prep, chunk)).map_err(|e| match e {
                    Error::NonFinite(what) => {
                        Error::NonFinite(format!("{what} (epoch {epoch}, step {})", adam.steps() + 1))
                    }
                    other => other,
                })?;
                adam.step(run.parameters_mut(), &grads.tensors);
            }
            run_trace.push(losses(&run, epoch)?);
        }
        let last = run_trace.last().expect("trace has the initial entry");
        let score = last.validation_loss.unwrap_or(last.train_loss);
        if best.as_ref().is_none_or(|(b, _, _)| score < *b) {
            best = Some((score, run, run_trace));
        }
    }
    let (_, model, trace) = best.expect("at least one restart");
    Ok(TrainOutcome { model, trace })
}

fn fit_ridge_head(model: &mut EncoderModel, train: &[Pair], prep: &Prepared) -> Result<()> {
    let mut rows = Vec::with_capacity(train.len());
    for (p, a) in train.iter().zip(&prep.attention) {
        rows.push(head_input(model, p, a.as_ref())?);
    }
    let x = Matrix::from_rows(&rows)?;
    let y = Matrix::from_rows(&prep.targets)?;
    let selection = ridge_cv_select(&x, &y, &model.config.ridge)?;
    let Head::Linear(h) = &mut model.head else {
        return Err(Error::invalid("ridge solver requires the linear head"));
    };
    for o in 0..h.outputs {
        for i in 0..h.inputs {
            h.weight[o * h.inputs + i] = selection.fit.weights.get(i, o);
        }
    }
    h.bias.clone_from(&selection.fit.bias);
    Ok(())
}

/// The vector the head sees for one pair under a fixed (non-learned) mode.
pub fn head_input(model: &EncoderModel, pair: &Pair, frame_attention: Option<&AttentionMap>) -> Result<Vec<f64>> {
    Ok(match model.config.attention_mode {
        AttentionMode::NoPool => pair.features.data().to_vec(),
        AttentionMode::None => attention::modulate_and_pool(&pair.features, None)?.values,
        AttentionMode::Center => {
            attention::modulate_and_pool(&pair.features, model.fixed_attention.as_ref())?.values
        }
        AttentionMode::Gaze => attention::modulate_and_pool(&pair.features, frame_attention)?.values,
        AttentionMode::Learned => return Err(Error::invalid("learned attention has no fixed head input")),
    })
}

/// Predictions in response units for each pair (rows in pair order), with
/// the attention map applied to each frame.
pub fn predict_pairs(
    model: &EncoderModel,
    pairs: &[Pair],
    fixations: Option<&FixationTable>,
) -> Result<(Matrix, Vec<Option<AttentionMap>>)> {
    let mut rows = Vec::with_capacity(pairs.len());
    let mut maps = Vec::with_capacity(pairs.len());
    for p in pairs {
        let frame_map = model.frame_attention(p.frame_id, fixations)?;
        let (z, applied) = super::encoder_forward(model, &p.features, frame_map.as_ref())?;
        rows.push(model.denormalize(&z));
        maps.push(applied);
    }
    if rows.is_empty() {
        return Ok((Matrix::zeros(0, model.voxels()), maps));
    }
    Ok((Matrix::from_rows(&rows)?, maps))
}

/// Measured responses of `pairs` as a matrix.
pub fn targets_matrix(pairs: &[Pair]) -> Result<Matrix> {
    Matrix::from_rows(&pairs.iter().map(|p| p.target.as_slice()).collect::<Vec<_>>())
}
