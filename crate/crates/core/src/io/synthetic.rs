//! Synthetic datasets with a planted attention kernel.
//!
//! Features are rectified smooth Gaussian fields, z-scored per channel. A
//! planted kernel V* produces per-frame attention A* through the
//! saliency/softmax forward pass, optionally perturbed by a smooth latent
//! field the features do not carry (attention drivers only gaze can see).
//! A planted linear head maps the attention-pooled features to voxel
//! signals (standardized to unit variance per voxel), and two noisy group
//! recordings of that signal are averaged into the responses. Response row
//! `t` carries the signal of frame `t - lag`; rows before the first frame
//! come from extra pre-roll frames that are not written out. Gaze samples
//! are drawn from A* upsampled to stimulus resolution.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{format_dims, parse_dims2, parse_dims3, render, KeyValues};
use super::dataset::{feature_map_tensor, matrix_tensor, Pair, PairedSplits};
use super::fixations::fixations_to_csv;
use super::manifest::{DatasetManifest, FrameEntry, Split};
use super::tensor::{write_tensor, Tensor};
use crate::attention::{
    modulate_and_pool, saliency_forward, spatial_softmax, AttentionKernel, AttentionMap, FeatureMap, Fixation,
    FixationTable,
};
use crate::error::{Error, Result};
use crate::evalmetrics::synchrony_map;
use crate::numerics::{bilinear_resize, convolve2d_same, gaussian_kernel2d, Grid2D, Matrix};
use crate::rng::{SeedStream, StreamRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub train_frames: usize,
    pub val_frames: usize,
    pub test_frames: usize,
    pub grid: (usize, usize),
    pub channels: usize,
    /// Voxel volume; every cell is a voxel.
    pub voxel_grid: [usize; 3],
    pub stimulus: (usize, usize),
    pub kernel_size: usize,
    /// Planted kernel entries are N(0, kernel_scale² / fan_in); larger
    /// values give peakier A*.
    pub kernel_scale: f64,
    /// Std of the smooth per-frame field added to the planted saliency
    /// before the softmax. Zero keeps A* a pure function of the features.
    pub latent_attention: f64,
    pub feature_smoothness: f64,
    pub lag: usize,
    pub noise_std: f64,
    /// Per-voxel noise multipliers are log-uniform in [1/spread, spread].
    pub voxel_noise_spread: f64,
    pub gaze_samples: usize,
    /// Written to the manifest; carves validation frames off the training block.
    pub train_val_ratio: Option<(u32, u32)>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            train_frames: 500,
            val_frames: 0,
            test_frames: 100,
            grid: (8, 8),
            channels: 64,
            voxel_grid: [2, 5, 2],
            stimulus: (64, 64),
            kernel_size: 5,
            kernel_scale: 6.0,
            latent_attention: 0.0,
            feature_smoothness: 1.0,
            lag: 3,
            noise_std: 0.1,
            voxel_noise_spread: 1.0,
            gaze_samples: 50,
            train_val_ratio: Some((9, 1)),
        }
    }
}

const SPEC_KEYS: [&str; 17] = [
    "seed",
    "train_frames",
    "val_frames",
    "test_frames",
    "grid",
    "channels",
    "voxel_grid",
    "stimulus",
    "kernel_size",
    "kernel_scale",
    "latent_attention",
    "feature_smoothness",
    "lag",
    "noise_std",
    "voxel_noise_spread",
    "gaze_samples",
    "train_val_ratio",
];

impl SyntheticSpec {
    pub fn frames(&self) -> usize {
        self.train_frames + self.val_frames + self.test_frames
    }

    pub fn voxels(&self) -> usize {
        self.voxel_grid.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("train_frames", self.train_frames),
            ("test_frames", self.test_frames),
            ("grid height", self.grid.0),
            ("grid width", self.grid.1),
            ("channels", self.channels),
            ("voxels", self.voxels()),
            ("stimulus height", self.stimulus.0),
            ("stimulus width", self.stimulus.1),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        if self.kernel_size % 2 == 0 {
            return Err(Error::invalid("kernel_size must be odd"));
        }
        if !(self.noise_std >= 0.0)
            || !(self.kernel_scale >= 0.0)
            || !(self.latent_attention >= 0.0)
            || !(self.feature_smoothness > 0.0)
        {
            return Err(Error::invalid(
                "noise_std, kernel_scale and latent_attention must be >= 0, feature_smoothness > 0",
            ));
        }
        if !(self.voxel_noise_spread >= 1.0) {
            return Err(Error::invalid("voxel_noise_spread must be >= 1"));
        }
        Ok(())
    }

    pub fn parse(kv: &KeyValues) -> Result<Self> {
        kv.reject_unknown(&SPEC_KEYS)?;
        let mut s = Self::default();
        let wrap = |key: &str, e: Error| {
            let line = kv.all(key).last().map(|e| e.line).unwrap_or(0);
            kv.error(line, format!("{key}: {e}"))
        };
        if let Some(v) = kv.parsed("seed")? {
            s.seed = v;
        }
        if let Some(v) = kv.parsed("train_frames")? {
            s.train_frames = v;
        }
        if let Some(v) = kv.parsed("val_frames")? {
            s.val_frames = v;
        }
        if let Some(v) = kv.parsed("test_frames")? {
            s.test_frames = v;
        }
        if let Some(v) = kv.get("grid") {
            s.grid = parse_dims2(v).map_err(|e| wrap("grid", e))?;
        }
        if let Some(v) = kv.parsed("channels")? {
            s.channels = v;
        }
        if let Some(v) = kv.get("voxel_grid") {
            s.voxel_grid = parse_dims3(v).map_err(|e| wrap("voxel_grid", e))?;
        }
        if let Some(v) = kv.get("stimulus") {
            s.stimulus = parse_dims2(v).map_err(|e| wrap("stimulus", e))?;
        }
        if let Some(v) = kv.parsed("kernel_size")? {
            s.kernel_size = v;
        }
        if let Some(v) = kv.parsed("kernel_scale")? {
            s.kernel_scale = v;
        }
        if let Some(v) = kv.parsed("latent_attention")? {
            s.latent_attention = v;
        }
        if let Some(v) = kv.parsed("feature_smoothness")? {
            s.feature_smoothness = v;
        }
        if let Some(v) = kv.parsed("lag")? {
            s.lag = v;
        }
        if let Some(v) = kv.parsed("noise_std")? {
            s.noise_std = v;
        }
        if let Some(v) = kv.parsed("voxel_noise_spread")? {
            s.voxel_noise_spread = v;
        }
        if let Some(v) = kv.parsed("gaze_samples")? {
            s.gaze_samples = v;
        }
        match kv.get("train_val_ratio") {
            Some("none") => s.train_val_ratio = None,
            Some(v) => {
                let bad = || wrap("train_val_ratio", Error::invalid(format!("bad ratio '{v}'")));
                let (a, b) = v.split_once(':').ok_or_else(bad)?;
                s.train_val_ratio = Some((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?));
            }
            None => {}
        }
        s.validate()?;
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let mut p: Vec<(String, String)> = vec![
            ("seed".into(), self.seed.to_string()),
            ("train_frames".into(), self.train_frames.to_string()),
            ("val_frames".into(), self.val_frames.to_string()),
            ("test_frames".into(), self.test_frames.to_string()),
            ("grid".into(), format_dims(&[self.grid.0, self.grid.1])),
            ("channels".into(), self.channels.to_string()),
            ("voxel_grid".into(), format_dims(&self.voxel_grid)),
            ("stimulus".into(), format_dims(&[self.stimulus.0, self.stimulus.1])),
            ("kernel_size".into(), self.kernel_size.to_string()),
            ("kernel_scale".into(), self.kernel_scale.to_string()),
            ("latent_attention".into(), self.latent_attention.to_string()),
            ("feature_smoothness".into(), self.feature_smoothness.to_string()),
            ("lag".into(), self.lag.to_string()),
            ("noise_std".into(), self.noise_std.to_string()),
            ("voxel_noise_spread".into(), self.voxel_noise_spread.to_string()),
            ("gaze_samples".into(), self.gaze_samples.to_string()),
        ];
        p.push((
            "train_val_ratio".into(),
            self.train_val_ratio.map(|(a, b)| format!("{a}:{b}")).unwrap_or_else(|| "none".into()),
        ));
        render(&p)
    }
}

/// Everything the generator produces, in memory.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub spec: SyntheticSpec,
    /// Frames `0..N`; ids equal indices.
    pub features: Vec<FeatureMap>,
    pub splits: Vec<Split>,
    pub truth_attention: Vec<AttentionMap>,
    pub kernel: AttentionKernel,
    /// V×C, row-major.
    pub head_weights: Vec<f64>,
    /// (N + lag)×V.
    pub responses: Matrix,
    pub group_a: Matrix,
    pub group_b: Matrix,
    /// Noise-free standardized signal per frame, N×V.
    pub clean_signal: Matrix,
    pub fixations: FixationTable,
}

fn standardize(v: &[f64]) -> Vec<f64> {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt().max(1e-12);
    v.iter().map(|x| (x - m) / sd).collect()
}

fn smooth_field(
    rng: &mut StreamRng,
    h: usize,
    w: usize,
    c: usize,
    smoothness: f64,
    frame_id: u64,
    rectify: bool,
) -> Result<FeatureMap> {
    let radius = (2.0 * smoothness).ceil() as usize;
    let kernel = gaussian_kernel2d(2 * radius + 1, smoothness)?;
    let mut data = vec![0.0; h * w * c];
    for ch in 0..c {
        let noise = Grid2D::from_fn(h, w, |_, _| rng.sample::<f64, _>(StandardNormal));
        let smooth = convolve2d_same(&noise, &kernel)?;
        // rectify, then z-score the channel like standardized network activations
        let mut z = standardize(smooth.values());
        if rectify {
            z = standardize(&z.into_iter().map(|x| x.max(0.0)).collect::<Vec<_>>());
        }
        for (i, x) in z.into_iter().enumerate() {
            data[i * c + ch] = x;
        }
    }
    FeatureMap::new(frame_id, h, w, c, data)
}

fn planted_attention(f: &FeatureMap, kernel: &AttentionKernel, latent: Option<&Grid2D>) -> Result<AttentionMap> {
    let s = saliency_forward(f, kernel)?;
    match latent {
        None => spatial_softmax(s.values()),
        Some(z) => {
            let summed: Vec<f64> = s.values().values().iter().zip(z.values()).map(|(a, b)| a + b).collect();
            spatial_softmax(&Grid2D::new(f.height(), f.width(), summed)?)
        }
    }
}

/// Draws `n` points from `density` (a stimulus-resolution probability map),
/// uniformly within the chosen pixel.
fn sample_points(rng: &mut StreamRng, density: &Grid2D, n: usize) -> Vec<(f64, f64)> {
    let mut cdf = Vec::with_capacity(density.len());
    let mut acc = 0.0;
    for &p in density.values() {
        acc += p;
        cdf.push(acc);
    }
    let w = density.width();
    (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * acc;
            let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            let (r, c) = (i / w, i % w);
            let x = (c as f64 + rng.random::<f64>()).min(w as f64 - 1e-9);
            let y = (r as f64 + rng.random::<f64>()).min(density.height() as f64 - 1e-9);
            (x, y)
        })
        .collect()
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let streams = SeedStream::new(spec.seed);
    let (h, w) = spec.grid;
    let c = spec.channels;
    let n = spec.frames();
    let v = spec.voxels();
    let lag = spec.lag;

    // scaled by 1/sqrt(fan_in) so map sharpness does not depend on the channel count
    let mut krng = streams.rng("planted/kernel");
    let fan = spec.kernel_size * spec.kernel_size * c;
    let kstd = spec.kernel_scale / (fan as f64).sqrt();
    let kweights: Vec<f64> = (0..fan)
        .map(|_| kstd * krng.sample::<f64, _>(StandardNormal))
        .collect();
    let kernel = AttentionKernel::new(spec.kernel_size, c, kweights)?;

    let mut hrng = streams.rng("planted/head");
    let head_weights: Vec<f64> = (0..v * c).map(|_| hrng.sample::<f64, _>(StandardNormal)).collect();

    let mut frng = streams.rng("features");
    let mut prng = streams.rng("features/preroll");
    let mut features = Vec::with_capacity(n);
    for t in 0..n {
        features.push(smooth_field(&mut frng, h, w, c, spec.feature_smoothness, t as u64, true)?);
    }
    let preroll: Vec<FeatureMap> = (0..lag)
        .map(|_| smooth_field(&mut prng, h, w, c, spec.feature_smoothness, u64::MAX, true))
        .collect::<Result<_>>()?;

    // raw signal for the pre-roll frames followed by the real frames
    let mut lrng = streams.rng("attention/latent");
    let mut truth_attention = Vec::with_capacity(n);
    let mut raw = Vec::with_capacity((n + lag) * v);
    for (i, f) in preroll.iter().chain(&features).enumerate() {
        let latent = if spec.latent_attention > 0.0 {
            let z = smooth_field(&mut lrng, h, w, 1, spec.feature_smoothness, 0, false)?;
            Some(Grid2D::new(h, w, z.data().iter().map(|x| spec.latent_attention * x).collect())?)
        } else {
            None
        };
        let a = planted_attention(f, &kernel, latent.as_ref())?;
        let pooled = modulate_and_pool(f, Some(&a))?.values;
        for vi in 0..v {
            raw.push((0..c).map(|ci| head_weights[vi * c + ci] * pooled[ci]).sum::<f64>());
        }
        if i >= lag {
            truth_attention.push(a);
        }
    }
    // standardize each voxel over the real frames
    for vi in 0..v {
        let col: Vec<f64> = (lag..n + lag).map(|t| raw[t * v + vi]).collect();
        let m = col.iter().sum::<f64>() / n as f64;
        let sd = (col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64).sqrt();
        let sd = if sd < 1e-12 { 1.0 } else { sd };
        for t in 0..n + lag {
            raw[t * v + vi] = (raw[t * v + vi] - m) / sd;
        }
    }
    let clean_signal = Matrix::new(n, v, raw[lag * v..].to_vec())?;

    let mut vrng = streams.rng("noise/voxel_scale");
    let ln_spread = spec.voxel_noise_spread.ln();
    let voxel_sd: Vec<f64> = (0..v)
        .map(|_| spec.noise_std * (ln_spread * (2.0 * vrng.random::<f64>() - 1.0)).exp())
        .collect();
    let mut arng = streams.rng("noise/group_a");
    let mut brng = streams.rng("noise/group_b");
    let rows = n + lag;
    let mut ga = vec![0.0; rows * v];
    let mut gb = vec![0.0; rows * v];
    let mut resp = vec![0.0; rows * v];
    for t in 0..rows {
        for vi in 0..v {
            let i = t * v + vi;
            let s = std::f64::consts::SQRT_2 * voxel_sd[vi];
            ga[i] = raw[i] + s * arng.sample::<f64, _>(StandardNormal);
            gb[i] = raw[i] + s * brng.sample::<f64, _>(StandardNormal);
            resp[i] = 0.5 * (ga[i] + gb[i]);
        }
    }

    let mut grng = streams.rng("gaze");
    let mut rows_fix = Vec::with_capacity(n * spec.gaze_samples);
    for (t, a) in truth_attention.iter().enumerate() {
        let up = bilinear_resize(a.values(), spec.stimulus.0, spec.stimulus.1)?;
        let up = AttentionMap::normalize(up)?;
        for (k, (x, y)) in sample_points(&mut grng, up.values(), spec.gaze_samples).into_iter().enumerate() {
            rows_fix.push(Fixation { frame_id: t as u64, subject_id: k as u64, x, y });
        }
    }
    let fixations = FixationTable::new(spec.stimulus.0, spec.stimulus.1, rows_fix)?;

    let splits = (0..n)
        .map(|t| {
            if t < spec.train_frames {
                Split::Train
            } else if t < spec.train_frames + spec.val_frames {
                Split::Val
            } else {
                Split::Test
            }
        })
        .collect();

    Ok(SyntheticDataset {
        spec: spec.clone(),
        features,
        splits,
        truth_attention,
        kernel,
        head_weights,
        responses: Matrix::new(rows, v, resp)?,
        group_a: Matrix::new(rows, v, ga)?,
        group_b: Matrix::new(rows, v, gb)?,
        clean_signal,
        fixations,
    })
}

/// Training settings known to work on generated data (see the README).
pub fn suggested_training(spec: &SyntheticSpec) -> Vec<(String, String)> {
    // bandwidths from a quarter to two grid cells, in stimulus pixels
    let cell = spec.stimulus.0 as f64 / spec.grid.0 as f64;
    let sigmas: Vec<f64> = [0.25, 0.5, 1.0, 2.0].iter().map(|f| f * cell).collect();
    vec![
        ("lag".into(), spec.lag.to_string()),
        ("epochs".into(), "200".into()),
        ("lr".into(), "0.003".into()),
        ("batch_size".into(), "32".into()),
        // the learned kernel lands in an overfitting basin from ~40% of draws
        ("restarts".into(), "8".into()),
        ("sigma_candidates".into(), super::config::format_list(&sigmas)),
        ("seed".into(), spec.seed.to_string()),
    ]
}

impl SyntheticDataset {
    pub fn manifest(&self, root: &Path) -> DatasetManifest {
        DatasetManifest {
            root: root.to_path_buf(),
            responses: PathBuf::from("responses.atn"),
            fixations: Some(PathBuf::from("fixations.csv")),
            lag_seconds: self.spec.lag,
            stimulus: self.spec.stimulus,
            voxel_grid: Some(self.spec.voxel_grid),
            voxel_mask: None,
            truth_attention: Some(PathBuf::from("truth_attention.atn")),
            train_val_ratio: if self.spec.val_frames == 0 { self.spec.train_val_ratio } else { None },
            weights_sha256: None,
            frames: self
                .splits
                .iter()
                .enumerate()
                .map(|(t, &split)| FrameEntry { split, frame_id: t as u64, path: feature_path(t) })
                .collect(),
        }
    }

    /// The pairs `pair_dataset` would build from the written files.
    pub fn pairs(&self) -> PairedSplits {
        let manifest = self.manifest(Path::new(""));
        let [train, val, test] = manifest.split_frames();
        let lag = self.spec.lag;
        let build = |entries: Vec<&FrameEntry>| -> Vec<Pair> {
            entries
                .iter()
                .map(|e| {
                    let t = e.frame_id as usize;
                    Pair { frame_id: e.frame_id, features: self.features[t].clone(), target: self.responses.row(t + lag).to_vec() }
                })
                .collect()
        };
        PairedSplits { train: build(train), validation: build(val), test: build(test), dropped: 0 }
    }

    /// Writes the dataset under `dir`: features, responses, group means and
    /// their synchrony, fixations, ground-truth attention, planted
    /// parameters, `manifest.cfg` and `train.cfg`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let fdir = dir.join("features");
        fs::create_dir_all(&fdir).map_err(|e| Error::io(&fdir, e))?;
        for (t, f) in self.features.iter().enumerate() {
            write_tensor(dir.join(feature_path(t)), &feature_map_tensor(f))?;
        }
        write_tensor(dir.join("responses.atn"), &matrix_tensor(&self.responses))?;
        write_tensor(dir.join("group_a.atn"), &matrix_tensor(&self.group_a))?;
        write_tensor(dir.join("group_b.atn"), &matrix_tensor(&self.group_b))?;
        let sync = synchrony_map(&self.group_a, &self.group_b)?;
        write_tensor(dir.join("synchrony.atn"), &Tensor::new(vec![sync.len()], sync.scores)?)?;
        let (h, w) = self.spec.grid;
        let mut truth = Vec::with_capacity(self.truth_attention.len() * h * w);
        for a in &self.truth_attention {
            truth.extend_from_slice(a.values().values());
        }
        write_tensor(dir.join("truth_attention.atn"), &Tensor::new(vec![self.truth_attention.len(), h, w], truth)?)?;
        let k = &self.kernel;
        write_tensor(dir.join("planted_kernel.atn"), &Tensor::new(vec![k.size(), k.size(), k.channels()], k.weights().to_vec())?)?;
        write_tensor(
            dir.join("planted_head.atn"),
            &Tensor::new(vec![self.spec.voxels(), self.spec.channels], self.head_weights.clone())?,
        )?;
        let fix = dir.join("fixations.csv");
        fs::write(&fix, fixations_to_csv(&self.fixations)).map_err(|e| Error::io(&fix, e))?;
        self.manifest(dir).save(dir.join("manifest.cfg"))?;
        let spec_path = dir.join("spec.cfg");
        fs::write(&spec_path, self.spec.to_text()).map_err(|e| Error::io(&spec_path, e))?;
        let train_path = dir.join("train.cfg");
        fs::write(&train_path, render(&suggested_training(&self.spec))).map_err(|e| Error::io(&train_path, e))
    }
}

fn feature_path(t: usize) -> PathBuf {
    PathBuf::from(format!("features/f{t:06}.atn"))
}
