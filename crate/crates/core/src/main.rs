use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use neuroattn::attention::{
    center_attention_map_with_sigma, gaze_attention_map, modulate_and_pool, AttentionMap, FixationTable,
};
use neuroattn::encoder::{predict_pairs, targets_matrix, train_encoder, AttentionMode, EncoderConfig, HeadKind, RidgeConfig, Solver};
use neuroattn::evalmetrics::{
    accuracy_threshold_sweep, default_thresholds, estimate_lag, pearson_per_voxel, roi_means, significance_mask,
    threshold_range, VoxelScoreMap,
};
use neuroattn::io::checkpoint::{apply_config, load_model, save_model, CONFIG_KEYS};
use neuroattn::io::config::{parse_dims2, KeyValues};
use neuroattn::io::dataset::{load_feature_map, load_geometry, load_manifest_fixations, load_responses, pair_dataset};
use neuroattn::io::fixations::load_fixations;
use neuroattn::io::synthetic::{generate, SyntheticSpec};
use neuroattn::io::{read_tensor, write_tensor, DatasetManifest, Split, Tensor};
use neuroattn::numerics::{Grid2D, Matrix};
use neuroattn::rsa::{build_rdm, rsa_compare};
use neuroattn::saliency::{
    aggregate, fixation_density_map, metric_auc, metric_cc, metric_nss, metric_sauc, metric_sim, shuffled_negatives,
    FixationSet, FrameScores, PredictionScale, SaliencyPrediction,
};
use neuroattn::{Error, Result};

#[derive(Parser)]
#[command(name = "neuroattn", version, about = "Attention-modulated encoding models and their evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset with planted attention.
    GenSynthetic(GenArgs),
    /// Build center or per-frame gaze attention maps from fixations.
    MakeAttention(MakeAttentionArgs),
    /// Train an encoding model.
    Train(TrainArgs),
    /// Score a trained model on a split.
    Eval(EvalArgs),
    /// Cross-validated scan over response lags.
    EstimateLag(LagArgs),
    /// Saliency metrics of predicted maps against fixations.
    SaliencyMetrics(SaliencyArgs),
    /// Kendall tau between model and neural RDMs.
    Rsa(RsaArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapKind {
    Center,
    Gaze,
}

#[derive(Args)]
struct MakeAttentionArgs {
    #[arg(long, value_enum)]
    mode: MapKind,
    #[arg(long)]
    fixations: PathBuf,
    /// KDE bandwidth in stimulus pixels.
    #[arg(long)]
    sigma: f64,
    /// Feature grid, HxW.
    #[arg(long)]
    grid: String,
    /// Stimulus size, HxW.
    #[arg(long)]
    stimulus: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// key = value file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<AttentionMode>,
    #[arg(long)]
    head: Option<HeadKind>,
    #[arg(long)]
    solver: Option<Solver>,
    #[arg(long)]
    lag: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Independent initializations; the lowest validation loss wins.
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Per-voxel synchrony (length-V tensor) for the threshold sweep.
    #[arg(long)]
    synchrony: Option<PathBuf>,
    /// start:stop:step
    #[arg(long)]
    thresholds: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    fdr: f64,
    #[arg(long, default_value = "test")]
    split: Split,
    /// Integer labels per voxel; writes per-ROI means next to the report.
    #[arg(long)]
    roi_mask: Option<PathBuf>,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum LagFeatures {
    /// Pool under each frame's gaze map.
    Gaze,
    /// Pool under the center map.
    Center,
    /// Unweighted sum over the grid.
    None,
    /// Whole feature map, flattened.
    Flat,
}

#[derive(Args)]
struct LagArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// `a..b` (inclusive) or a comma list.
    #[arg(long, default_value = "1..7")]
    lags: String,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, value_enum, default_value = "gaze")]
    features: LagFeatures,
    /// KDE bandwidth for gaze/center pooling; defaults to one grid cell.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct SaliencyArgs {
    /// Directory of fNNNNNN.atn prediction maps.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    fixations: PathBuf,
    #[arg(long)]
    stimulus: String,
    /// Evaluation grid, HxW; defaults to the stimulus size.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value = "density")]
    scale: PredictionScale,
    /// Bandwidth of the ground-truth density, in stimulus pixels.
    #[arg(long, default_value_t = 20.0)]
    sigma: f64,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct RsaArgs {
    /// Directory of `layer__regime.atn` condition-by-dimension matrices.
    #[arg(long)]
    model_reps: PathBuf,
    /// Condition-by-voxel responses.
    #[arg(long)]
    responses: PathBuf,
    #[arg(long)]
    roi_mask: Option<PathBuf>,
    /// Skip per-dimension z-scoring before the RDMs.
    #[arg(long)]
    raw: bool,
    #[arg(long)]
    report: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenSynthetic(a) => gen_synthetic(a),
        Command::MakeAttention(a) => make_attention(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::EstimateLag(a) => lag(a),
        Command::SaliencyMetrics(a) => saliency_metrics(a),
        Command::Rsa(a) => rsa(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `out.csv` + `frames` -> `out.frames.csv`
fn sibling(report: &Path, tag: &str) -> PathBuf {
    let stem = report.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = report.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    report.with_file_name(format!("{stem}.{tag}.{ext}"))
}

fn frame_file(dir: &Path, id: u64) -> PathBuf {
    dir.join(format!("f{id:06}.atn"))
}

fn grid_tensor(g: &Grid2D) -> Tensor {
    Tensor::new(vec![g.height(), g.width()], g.values().to_vec()).expect("grid dims")
}

fn gen_synthetic(a: GenArgs) -> Result<()> {
    let spec = SyntheticSpec::parse(&KeyValues::load(&a.spec)?)?;
    let data = generate(&spec)?;
    data.write(&a.out)?;
    println!(
        "wrote {} frames, {} voxels, lag {} to {}",
        spec.frames(),
        spec.voxels(),
        spec.lag,
        a.out.display()
    );
    Ok(())
}

fn make_attention(a: MakeAttentionArgs) -> Result<()> {
    let grid = parse_dims2(&a.grid)?;
    let stimulus = parse_dims2(&a.stimulus)?;
    let table = load_fixations(&a.fixations, stimulus.0, stimulus.1)?;
    if table.is_empty() {
        return Err(Error::invalid("fixation table is empty"));
    }
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let center = center_attention_map_with_sigma(&table, a.sigma, grid.0, grid.1)?;
    match a.mode {
        MapKind::Center => {
            write_tensor(a.out.join("center.atn"), &grid_tensor(center.values()))?;
            println!("wrote center map to {}", a.out.display());
        }
        MapKind::Gaze => {
            let ids: Vec<u64> = table.frame_ids().collect();
            for &id in &ids {
                let map = gaze_attention_map(&table.points_for(id), a.sigma, stimulus, grid, Some(&center))?;
                write_tensor(frame_file(&a.out, id), &grid_tensor(map.values()))?;
            }
            println!("wrote {} gaze maps to {}", ids.len(), a.out.display());
        }
    }
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let manifest = DatasetManifest::load(&a.manifest)?;
    let mut config = EncoderConfig { lag_seconds: manifest.lag_seconds, ..Default::default() };
    if let Some(path) = &a.config {
        let kv = KeyValues::load(path)?;
        kv.reject_unknown(&CONFIG_KEYS)?;
        apply_config(&mut config, &kv)?;
    }
    if let Some(v) = a.mode {
        config.attention_mode = v;
    }
    if let Some(v) = a.head {
        config.head = v;
    }
    if let Some(v) = a.solver {
        config.solver = v;
    }
    if let Some(v) = a.lag {
        config.lag_seconds = v;
    }
    if let Some(v) = a.epochs {
        config.epochs = v;
    }
    if let Some(v) = a.lr {
        config.learning_rate = v;
    }
    if let Some(v) = a.seed {
        config.seed = v;
    }
    if let Some(v) = a.batch_size {
        config.batch_size = v;
    }
    if let Some(v) = a.restarts {
        config.restarts = v;
    }
    if let Some(v) = a.sigma {
        config.sigma = Some(v);
    }
    config.validate()?;

    let responses = load_responses(manifest.resolve(&manifest.responses))?;
    let pairs = pair_dataset(&manifest, &responses, config.lag_seconds)?;
    let fixations =
        if config.attention_mode.needs_fixations() { load_manifest_fixations(&manifest)? } else { None };
    let geometry =
        if config.head == HeadKind::Conv { load_geometry(&manifest, responses.cols())? } else { None };
    let outcome = train_encoder(&config, &pairs.train, &pairs.validation, fixations.as_ref(), geometry.as_ref())?;
    save_model(&a.out, &outcome.model, &outcome.trace)?;

    let last = outcome.trace.last().expect("trace has the initial epoch");
    println!(
        "trained {} ({} train, {} val, {} dropped by lag {}); final train loss {:.6}{}",
        config.attention_mode,
        pairs.train.len(),
        pairs.validation.len(),
        pairs.dropped,
        config.lag_seconds,
        last.train_loss,
        last.validation_loss.map(|v| format!(", val loss {v:.6}")).unwrap_or_default()
    );
    Ok(())
}

/// A per-voxel vector from a tensor of any shape with V elements.
fn voxel_vector(path: &Path, voxels: usize) -> Result<Vec<f64>> {
    let t = read_tensor(path)?;
    if t.len() != voxels {
        return Err(Error::Shape(format!("{}: {} values for {voxels} voxels", path.display(), t.len())));
    }
    Ok(t.into_data())
}

fn eval(a: EvalArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let manifest = DatasetManifest::load(&a.manifest)?;
    let responses = load_responses(manifest.resolve(&manifest.responses))?;
    if responses.cols() != model.voxels() {
        return Err(Error::Shape(format!("model predicts {} voxels, responses have {}", model.voxels(), responses.cols())));
    }
    let pairs = pair_dataset(&manifest, &responses, model.config.lag_seconds)?;
    let split = pairs.split(a.split);
    if split.len() < 4 {
        return Err(Error::invalid(format!("{} split has {} frames; at least 4 are needed", a.split.as_str(), split.len())));
    }
    let fixations =
        if model.config.attention_mode == AttentionMode::Gaze { load_manifest_fixations(&manifest)? } else { None };
    let (pred, _) = predict_pairs(&model, split, fixations.as_ref())?;
    let scores = pearson_per_voxel(&pred, &targets_matrix(split)?)?;
    let significance = significance_mask(&scores, split.len(), a.fdr)?;

    let thresholds = match &a.thresholds {
        Some(s) => {
            let parts: Vec<&str> = s.split(':').collect();
            let [start, stop, step] = parts[..] else {
                return Err(Error::invalid(format!("thresholds must be start:stop:step, got '{s}'")));
            };
            let num = |v: &str| v.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad threshold '{v}'")));
            threshold_range(num(start)?, num(stop)?, num(step)?)?
        }
        None => default_thresholds(),
    };
    let report = match &a.synchrony {
        Some(path) => {
            let values = voxel_vector(path, scores.len())?;
            let synchrony = VoxelScoreMap { degenerate: vec![false; values.len()], scores: values };
            accuracy_threshold_sweep(&scores, &synchrony, &thresholds)?.to_csv()
        }
        None => format!("threshold,voxel_count,mean_R\nall,{},{}\n", scores.len(), scores.mean()),
    };
    write_text(&a.report, &report)?;

    let mut voxels = String::from("voxel,R,p_value,significant\n");
    for i in 0..scores.len() {
        let r = if scores.degenerate[i] { String::new() } else { scores.scores[i].to_string() };
        let p = significance.p_values[i].map(|p| p.to_string()).unwrap_or_default();
        voxels.push_str(&format!("{i},{r},{p},{}\n", u8::from(significance.mask[i])));
    }
    write_text(&sibling(&a.report, "voxels"), &voxels)?;

    if let Some(path) = &a.roi_mask {
        let labels: Vec<i64> = voxel_vector(path, scores.len())?.iter().map(|&v| v.round() as i64).collect();
        let mut out = String::from("roi,voxel_count,mean_R\n");
        for (label, (mean, count)) in roi_means(&scores, &labels)? {
            out.push_str(&format!("{label},{count},{mean}\n"));
        }
        write_text(&sibling(&a.report, "roi"), &out)?;
    }
    println!(
        "{} frames: mean R {:.4}, {} of {} voxels significant at q={}",
        split.len(),
        scores.mean(),
        significance.mask.iter().filter(|&&m| m).count(),
        scores.len(),
        a.fdr
    );
    Ok(())
}

fn parse_lags(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::invalid(format!("bad lag list '{s}'"));
    let lags: Vec<usize> = match s.split_once("..") {
        Some((a, b)) => {
            let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if a > b {
                return Err(bad());
            }
            (a..=b).collect()
        }
        None => s.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?,
    };
    if lags.is_empty() {
        return Err(bad());
    }
    Ok(lags)
}

fn lag(a: LagArgs) -> Result<()> {
    let manifest = DatasetManifest::load(&a.manifest)?;
    let responses = load_responses(manifest.resolve(&manifest.responses))?;
    let lags = parse_lags(&a.lags)?;
    let mut frames: Vec<_> = manifest.frames.iter().collect();
    frames.sort_by_key(|f| f.frame_id);
    if frames.iter().enumerate().any(|(i, f)| f.frame_id != i as u64) {
        return Err(Error::invalid("lag estimation needs frame ids 0..N without gaps"));
    }
    let fixations: Option<FixationTable> = match a.features {
        LagFeatures::Gaze | LagFeatures::Center => Some(
            load_manifest_fixations(&manifest)?
                .ok_or_else(|| Error::invalid("gaze or center pooling needs fixations in the manifest"))?,
        ),
        _ => None,
    };
    let mut rows = Vec::with_capacity(frames.len());
    let mut center: Option<AttentionMap> = None;
    for f in &frames {
        let fm = load_feature_map(manifest.resolve(&f.path), f.frame_id)?;
        let grid = (fm.height(), fm.width());
        let sigma = a.sigma.unwrap_or(manifest.stimulus.0 as f64 / grid.0 as f64);
        let row = match (a.features, &fixations) {
            (LagFeatures::Flat, _) => fm.data().to_vec(),
            (LagFeatures::None, _) => modulate_and_pool(&fm, None)?.values,
            (kind, Some(fix)) => {
                if center.is_none() {
                    center = Some(center_attention_map_with_sigma(fix, sigma, grid.0, grid.1)?);
                }
                let map = match kind {
                    LagFeatures::Gaze => {
                        gaze_attention_map(&fix.points_for(f.frame_id), sigma, manifest.stimulus, grid, center.as_ref())?
                    }
                    _ => center.clone().expect("set above"),
                };
                modulate_and_pool(&fm, Some(&map))?.values
            }
            _ => unreachable!("fixations loaded for pooled modes"),
        };
        rows.push(row);
    }
    let x = Matrix::from_rows(&rows)?;
    let estimate = estimate_lag(&x, &responses, &lags, &RidgeConfig::default(), a.folds)?;
    write_text(&a.report, &estimate.to_csv())?;
    println!("best lag {}", estimate.best_lag);
    Ok(())
}

fn frame_id_of(path: &Path) -> Option<u64> {
    if path.extension()? != "atn" {
        return None;
    }
    path.file_stem()?.to_str()?.strip_prefix('f')?.parse().ok()
}

fn saliency_metrics(a: SaliencyArgs) -> Result<()> {
    let stimulus = parse_dims2(&a.stimulus)?;
    let grid = match &a.grid {
        Some(g) => parse_dims2(g)?,
        None => stimulus,
    };
    if !(a.sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {}", a.sigma)));
    }
    let table = load_fixations(&a.fixations, stimulus.0, stimulus.1)?;
    let mut preds: BTreeMap<u64, PathBuf> = BTreeMap::new();
    for entry in fs::read_dir(&a.pred).map_err(|e| Error::io(&a.pred, e))? {
        let path = entry.map_err(|e| Error::io(&a.pred, e))?.path();
        if let Some(id) = frame_id_of(&path) {
            preds.insert(id, path);
        }
    }
    let mut sets = Vec::new();
    for &id in preds.keys() {
        let points = table.points_for(id);
        if !points.is_empty() {
            sets.push(FixationSet::from_points(id, &points, stimulus, grid)?);
        }
    }
    if sets.is_empty() {
        return Err(Error::invalid("no predicted frame has fixations"));
    }
    let (sy, sx) = (grid.0 as f64 / stimulus.0 as f64, grid.1 as f64 / stimulus.1 as f64);
    let mut frames = Vec::with_capacity(sets.len());
    for set in &sets {
        let id = set.frame_id;
        let t = read_tensor(&preds[&id])?;
        let [h, w] = *t.dims() else {
            return Err(Error::Shape(format!("{}: prediction maps are 2-d", preds[&id].display())));
        };
        let pred = SaliencyPrediction::new(id, Grid2D::new(h, w, t.into_data())?, a.scale)?.resized(grid.0, grid.1)?;
        let scaled: Vec<(f64, f64)> = table.points_for(id).iter().map(|&(x, y)| (x * sx, y * sy)).collect();
        let truth = fixation_density_map(&scaled, a.sigma * sy, grid.0, grid.1)?;
        let sauc = match shuffled_negatives(&sets, id) {
            Ok(neg) => metric_sauc(&pred, set, &neg).ok(),
            Err(_) => None,
        };
        frames.push(FrameScores {
            frame_id: id,
            sim: metric_sim(&pred, &truth)?,
            cc: metric_cc(&pred, &truth)?,
            nss: metric_nss(&pred, set)?,
            auc: metric_auc(&pred, set)?,
            sauc,
        });
    }
    let mut summary = String::from("metric,mean,stderr\n");
    for (name, s) in aggregate(&frames) {
        summary.push_str(&format!("{name},{},{}\n", s.mean, s.stderr));
    }
    write_text(&a.report, &summary)?;
    let mut per_frame = String::from("frame_id,SIM,CC,NSS,AUC,sAUC\n");
    for f in &frames {
        let sauc = f.sauc.map(|v| v.to_string()).unwrap_or_default();
        per_frame.push_str(&format!("{},{},{},{},{},{sauc}\n", f.frame_id, f.sim, f.cc, f.nss, f.auc));
    }
    write_text(&sibling(&a.report, "frames"), &per_frame)?;
    let skipped = preds.len() - frames.len();
    println!("scored {} frames{}", frames.len(), if skipped > 0 { format!(" ({skipped} without fixations skipped)") } else { String::new() });
    Ok(())
}

fn matrix_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let t = read_tensor(path)?;
    let [rows, cols] = *t.dims() else {
        return Err(Error::Shape(format!("{}: expected a 2-d condition matrix, got dims {:?}", path.display(), t.dims())));
    };
    Ok(t.data().chunks(cols.max(1)).take(rows).map(<[f64]>::to_vec).collect())
}

fn rsa(a: RsaArgs) -> Result<()> {
    let neural = matrix_rows(&a.responses)?;
    let voxels = neural.first().map_or(0, Vec::len);
    let rois: Vec<(String, Vec<usize>)> = match &a.roi_mask {
        Some(path) => {
            let labels = voxel_vector(path, voxels)?;
            let mut by_label: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
            for (i, &l) in labels.iter().enumerate() {
                let l = l.round() as i64;
                if l != 0 {
                    by_label.entry(l).or_default().push(i);
                }
            }
            by_label.into_iter().map(|(l, idx)| (l.to_string(), idx)).collect()
        }
        None => vec![("all".into(), (0..voxels).collect())],
    };
    let mut neural_rdms = Vec::with_capacity(rois.len());
    for (name, idx) in &rois {
        let vecs: Vec<Vec<f64>> = neural.iter().map(|row| idx.iter().map(|&i| row[i]).collect()).collect();
        neural_rdms.push((name, build_rdm(&vecs, !a.raw)?));
    }

    let mut reps: Vec<(String, String, PathBuf)> = Vec::new();
    for entry in fs::read_dir(&a.model_reps).map_err(|e| Error::io(&a.model_reps, e))? {
        let path = entry.map_err(|e| Error::io(&a.model_reps, e))?.path();
        if path.extension().is_none_or(|e| e != "atn") {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let (layer, regime) = stem
            .split_once("__")
            .ok_or_else(|| Error::invalid(format!("{}: expected layer__regime.atn", path.display())))?;
        reps.push((layer.to_string(), regime.to_string(), path.clone()));
    }
    if reps.is_empty() {
        return Err(Error::invalid(format!("no representation files in {}", a.model_reps.display())));
    }
    reps.sort();
    let mut out = String::from("layer,regime,roi,tau_a\n");
    for (layer, regime, path) in &reps {
        let vecs = matrix_rows(path)?;
        if vecs.len() != neural.len() {
            return Err(Error::Shape(format!(
                "{}: {} conditions, responses have {}",
                path.display(),
                vecs.len(),
                neural.len()
            )));
        }
        let model_rdm = build_rdm(&vecs, !a.raw)?;
        for (roi, neural_rdm) in &neural_rdms {
            out.push_str(&format!("{layer},{regime},{roi},{}\n", rsa_compare(&model_rdm, neural_rdm)?));
        }
    }
    write_text(&a.report, &out)?;
    println!("compared {} representations against {} neural RDMs", reps.len(), neural_rdms.len());
    Ok(())
}
