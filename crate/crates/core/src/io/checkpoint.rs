//! Model checkpoints: a directory holding `model.cfg`, one tensor file per
//! parameter, the training statistics and the loss trace.

use std::fs;
use std::path::Path;

use super::config::{format_dims, format_list, parse_dims3, parse_list, KeyValues};
use super::tensor::{read_tensor, write_tensor, Tensor};
use crate::attention::AttentionMap;
use crate::encoder::{
    ConvHeadShape, EncoderConfig, EncoderModel, EpochLoss, FeatureShape, Head, RidgeConfig, VoxelGeometry,
};
use crate::error::{Error, Result};
use crate::numerics::Grid2D;

/// Keys accepted by [`apply_config`].
pub const CONFIG_KEYS: [&str; 18] = [
    "mode",
    "head",
    "solver",
    "lag",
    "epochs",
    "lr",
    "seed",
    "hidden_units",
    "coarse",
    "stage_channels",
    "output_dims",
    "batch_size",
    "restarts",
    "kernel_size",
    "sigma",
    "sigma_candidates",
    "ridge_lambdas",
    "ridge_folds",
];

pub fn config_to_pairs(c: &EncoderConfig) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = vec![
        ("mode".into(), c.attention_mode.to_string()),
        ("head".into(), c.head.as_str().into()),
        ("solver".into(), c.solver.as_str().into()),
        ("lag".into(), c.lag_seconds.to_string()),
        ("epochs".into(), c.epochs.to_string()),
        ("lr".into(), c.learning_rate.to_string()),
        ("seed".into(), c.seed.to_string()),
    ];
    if let Some(h) = c.hidden_units {
        out.push(("hidden_units".into(), h.to_string()));
    }
    out.push(("coarse".into(), format_dims(&c.conv_head.coarse)));
    out.push((
        "stage_channels".into(),
        c.conv_head.stage_channels.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
    ));
    if let Some(d) = c.output_dims {
        out.push(("output_dims".into(), format_dims(&d)));
    }
    out.push(("batch_size".into(), c.batch_size.to_string()));
    out.push(("restarts".into(), c.restarts.to_string()));
    out.push(("kernel_size".into(), c.kernel_size.to_string()));
    if let Some(s) = c.sigma {
        out.push(("sigma".into(), s.to_string()));
    }
    out.push(("sigma_candidates".into(), format_list(&c.sigma_candidates)));
    out.push(("ridge_lambdas".into(), format_list(&c.ridge.lambda_grid)));
    out.push(("ridge_folds".into(), c.ridge.folds.to_string()));
    out
}

/// Overwrites the fields of `c` named in `kv`, ignoring keys outside
/// [`CONFIG_KEYS`].
pub fn apply_config(c: &mut EncoderConfig, kv: &KeyValues) -> Result<()> {
    let wrap = |key: &str, e: Error| {
        let line = kv.all(key).last().map(|e| e.line).unwrap_or(0);
        kv.error(line, format!("{key}: {e}"))
    };
    if let Some(v) = kv.parsed("mode")? {
        c.attention_mode = v;
    }
    if let Some(v) = kv.parsed("head")? {
        c.head = v;
    }
    if let Some(v) = kv.parsed("solver")? {
        c.solver = v;
    }
    if let Some(v) = kv.parsed("lag")? {
        c.lag_seconds = v;
    }
    if let Some(v) = kv.parsed("epochs")? {
        c.epochs = v;
    }
    if let Some(v) = kv.parsed("lr")? {
        c.learning_rate = v;
    }
    if let Some(v) = kv.parsed("seed")? {
        c.seed = v;
    }
    if let Some(v) = kv.parsed("hidden_units")? {
        c.hidden_units = Some(v);
    }
    if let Some(v) = kv.get("coarse") {
        c.conv_head.coarse = parse_dims3(v).map_err(|e| wrap("coarse", e))?;
    }
    if let Some(v) = kv.get("stage_channels") {
        c.conv_head.stage_channels = v
            .split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| Error::invalid(format!("bad channel count '{s}'"))))
            .collect::<Result<_>>()
            .map_err(|e| wrap("stage_channels", e))?;
    }
    if let Some(v) = kv.get("output_dims") {
        c.output_dims = Some(parse_dims3(v).map_err(|e| wrap("output_dims", e))?);
    }
    if let Some(v) = kv.parsed("batch_size")? {
        c.batch_size = v;
    }
    if let Some(v) = kv.parsed("restarts")? {
        c.restarts = v;
    }
    if let Some(v) = kv.parsed("kernel_size")? {
        c.kernel_size = v;
    }
    if let Some(v) = kv.parsed("sigma")? {
        c.sigma = Some(v);
    }
    if let Some(v) = kv.get("sigma_candidates") {
        c.sigma_candidates = parse_list(v).map_err(|e| wrap("sigma_candidates", e))?;
    }
    if let Some(v) = kv.get("ridge_lambdas") {
        c.ridge.lambda_grid = parse_list(v).map_err(|e| wrap("ridge_lambdas", e))?;
    }
    if let Some(v) = kv.parsed("ridge_folds")? {
        c.ridge.folds = v;
    }
    Ok(())
}

fn write(dir: &Path, name: &str, t: &Tensor) -> Result<()> {
    write_tensor(dir.join(format!("{name}.atn")), t)
}

fn vector(v: &[f64]) -> Tensor {
    Tensor::new(vec![v.len()], v.to_vec()).expect("1-d tensor")
}

pub fn trace_csv(trace: &[EpochLoss]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss\n");
    for e in trace {
        let val = e.validation_loss.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, val));
    }
    out
}

pub fn save_model(dir: impl AsRef<Path>, model: &EncoderModel, trace: &[EpochLoss]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut pairs = config_to_pairs(&model.config);
    let s = model.feature_shape;
    pairs.push(("feature_shape".into(), format_dims(&[s.height, s.width, s.channels])));
    pairs.push(("voxels".into(), model.voxels().to_string()));
    let cfg = super::config::render(&pairs);
    let cfg_path = dir.join("model.cfg");
    fs::write(&cfg_path, cfg).map_err(|e| Error::io(&cfg_path, e))?;

    for ((name, shape), values) in
        model.parameter_names().iter().zip(model.parameter_shapes()).zip(model.parameters())
    {
        write(dir, name, &Tensor::new(shape, values.to_vec())?)?;
    }
    if let Head::Conv(h) = &model.head {
        let idx: Vec<f64> = h.voxel_index.iter().map(|&i| i as f64).collect();
        write(dir, "voxel_index", &vector(&idx))?;
    }
    if let Some(a) = &model.fixed_attention {
        let g = a.values();
        write(dir, "fixed_attention", &Tensor::new(vec![g.height(), g.width()], g.values().to_vec())?)?;
    }
    write(dir, "target_mean", &vector(&model.target_mean))?;
    write(dir, "target_std", &vector(&model.target_std))?;
    let trace_path = dir.join("trace.csv");
    fs::write(&trace_path, trace_csv(trace)).map_err(|e| Error::io(&trace_path, e))
}

pub fn load_model(dir: impl AsRef<Path>) -> Result<EncoderModel> {
    let dir = dir.as_ref();
    let kv = KeyValues::load(dir.join("model.cfg"))?;
    let mut config = EncoderConfig { ridge: RidgeConfig::default(), conv_head: ConvHeadShape::default(), ..Default::default() };
    apply_config(&mut config, &kv)?;
    let [h, w, c] = parse_dims3(kv.get("feature_shape").ok_or_else(|| kv.error(0, "missing feature_shape"))?)?;
    let voxels: usize = kv.required("voxels")?;
    let geometry = match (config.head, config.output_dims) {
        (crate::encoder::HeadKind::Conv, Some(dims)) => {
            let idx = read_tensor(dir.join("voxel_index.atn"))?;
            Some(VoxelGeometry { dims, voxel_index: idx.data().iter().map(|&v| v as usize).collect() })
        }
        _ => None,
    };
    let shape = FeatureShape { height: h, width: w, channels: c };
    let mut model = EncoderModel::new(config, shape, voxels, geometry.as_ref())?;

    let names = model.parameter_names();
    let shapes = model.parameter_shapes();
    let loaded: Vec<Tensor> = names
        .iter()
        .map(|n| read_tensor(dir.join(format!("{n}.atn"))))
        .collect::<Result<_>>()?;
    for ((t, shape), name) in loaded.iter().zip(&shapes).zip(&names) {
        if t.dims() != shape.as_slice() {
            return Err(Error::Shape(format!("parameter {name} has dims {:?}, expected {shape:?}", t.dims())));
        }
    }
    for (dst, t) in model.parameters_mut().into_iter().zip(&loaded) {
        dst.copy_from_slice(t.data());
    }
    let fixed = dir.join("fixed_attention.atn");
    if fixed.exists() {
        let t = read_tensor(&fixed)?;
        let [gh, gw] = t.dims() else {
            return Err(Error::Shape("fixed attention must be 2-d".into()));
        };
        model.fixed_attention = Some(AttentionMap::new(Grid2D::new(*gh, *gw, t.data().to_vec())?)?);
    }
    let mean = read_tensor(dir.join("target_mean.atn"))?;
    let std = read_tensor(dir.join("target_std.atn"))?;
    if mean.len() != voxels || std.len() != voxels {
        return Err(Error::Shape("target statistics do not match the voxel count".into()));
    }
    model.target_mean = mean.into_data();
    model.target_std = std.into_data();
    Ok(model)
}
