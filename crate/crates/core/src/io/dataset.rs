use std::path::Path;

use super::manifest::{DatasetManifest, Split};
use super::tensor::{read_tensor, Tensor};
use crate::attention::{FeatureMap, FixationTable};
use crate::encoder::VoxelGeometry;
use crate::error::{Error, Result};
use crate::io::fixations::load_fixations;
use crate::numerics::Matrix;

/// One stimulus frame and the response it is trained to predict.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub frame_id: u64,
    pub features: FeatureMap,
    pub target: Vec<f64>,
}

/// Index-level pairing: `(split, frame_id)` to response row `frame_id + lag`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub kept: Vec<(Split, u64, usize)>,
    pub dropped: usize,
}

/// Frames whose lagged row falls at or past `t_total` are dropped and counted.
pub fn align_frames(frames: &[(Split, u64)], t_total: usize, lag: usize) -> Result<Alignment> {
    if lag >= t_total {
        return Err(Error::invalid(format!("lag {lag} leaves no responses out of {t_total}")));
    }
    let mut kept = Vec::with_capacity(frames.len());
    let mut dropped = 0;
    for &(split, id) in frames {
        if id as usize >= t_total {
            return Err(Error::invalid(format!("frame {id} has no response row (T = {t_total})")));
        }
        let row = id as usize + lag;
        if row < t_total {
            kept.push((split, id, row));
        } else {
            dropped += 1;
        }
    }
    Ok(Alignment { kept, dropped })
}

#[derive(Debug, Clone, Default)]
pub struct PairedSplits {
    pub train: Vec<Pair>,
    pub validation: Vec<Pair>,
    pub test: Vec<Pair>,
    pub dropped: usize,
}

impl PairedSplits {
    pub fn split(&self, s: Split) -> &[Pair] {
        match s {
            Split::Train => &self.train,
            Split::Val => &self.validation,
            Split::Test => &self.test,
        }
    }
}

/// Reads an H×W×C tensor file as a feature map.
pub fn load_feature_map(path: impl AsRef<Path>, frame_id: u64) -> Result<FeatureMap> {
    let path = path.as_ref();
    let t = read_tensor(path)?;
    match *t.dims() {
        [h, w, c] => FeatureMap::new(frame_id, h, w, c, t.into_data()),
        _ => Err(Error::Shape(format!("{}: feature tensors are HxWxC, got dims {:?}", path.display(), t.dims()))),
    }
}

pub fn feature_map_tensor(f: &FeatureMap) -> Tensor {
    Tensor::new(vec![f.height(), f.width(), f.channels()], f.data().to_vec()).expect("consistent feature map")
}

/// Reads a T×V response tensor.
pub fn load_responses(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let t = read_tensor(path)?;
    match *t.dims() {
        [rows, cols] => Matrix::new(rows, cols, t.into_data()),
        _ => Err(Error::Shape(format!("{}: responses are TxV, got dims {:?}", path.display(), t.dims()))),
    }
}

pub fn matrix_tensor(m: &Matrix) -> Tensor {
    Tensor::new(vec![m.rows(), m.cols()], m.data().to_vec()).expect("consistent matrix")
}

pub fn load_manifest_fixations(manifest: &DatasetManifest) -> Result<Option<FixationTable>> {
    manifest
        .fixations
        .as_ref()
        .map(|p| load_fixations(manifest.resolve(p), manifest.stimulus.0, manifest.stimulus.1))
        .transpose()
}

/// Voxel layout from the manifest: the mask (if any) over `voxel_grid`, or
/// the full grid when its size matches the response width.
pub fn load_geometry(manifest: &DatasetManifest, voxels: usize) -> Result<Option<VoxelGeometry>> {
    let Some(grid) = manifest.voxel_grid else {
        return Ok(None);
    };
    let geometry = match &manifest.voxel_mask {
        Some(p) => {
            let t = read_tensor(manifest.resolve(p))?;
            if t.dims() != grid {
                return Err(Error::Shape(format!("voxel mask dims {:?} differ from grid {grid:?}", t.dims())));
            }
            VoxelGeometry::from_mask(grid, t.data())?
        }
        None => VoxelGeometry::full(grid),
    };
    if geometry.voxel_index.len() != voxels {
        return Err(Error::Shape(format!(
            "voxel geometry covers {} voxels, responses have {voxels}",
            geometry.voxel_index.len()
        )));
    }
    Ok(Some(geometry))
}

/// Pairs every manifest frame with the response row `lag` steps later.
pub fn pair_dataset(manifest: &DatasetManifest, responses: &Matrix, lag: usize) -> Result<PairedSplits> {
    let [train, val, test] = manifest.split_frames();
    let tagged: Vec<(Split, u64, &Path)> = train
        .iter()
        .map(|f| (Split::Train, f.frame_id, f.path.as_path()))
        .chain(val.iter().map(|f| (Split::Val, f.frame_id, f.path.as_path())))
        .chain(test.iter().map(|f| (Split::Test, f.frame_id, f.path.as_path())))
        .collect();
    let index: Vec<(Split, u64)> = tagged.iter().map(|&(s, id, _)| (s, id)).collect();
    let alignment = align_frames(&index, responses.rows(), lag)?;
    let mut out = PairedSplits { dropped: alignment.dropped, ..Default::default() };
    let mut kept = alignment.kept.iter().peekable();
    for &(split, id, path) in &tagged {
        let Some(&&(_, kid, row)) = kept.peek() else { break };
        if kid != id {
            continue;
        }
        kept.next();
        let features = load_feature_map(manifest.resolve(path), id)?;
        let pair = Pair { frame_id: id, features, target: responses.row(row).to_vec() };
        match split {
            Split::Train => out.train.push(pair),
            Split::Val => out.validation.push(pair),
            Split::Test => out.test.push(pair),
        }
    }
    Ok(out)
}
