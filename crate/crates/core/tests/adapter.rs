//! The feature-extraction adapter's side of the contract: what it writes
//! must load, pair and train without any conversion.

use std::path::{Path, PathBuf};
use std::process::Command;

use neuroattn::io::dataset::load_feature_map;
use neuroattn::io::{pair_dataset, read_tensor, DatasetManifest};

// written byte by byte rather than through the toolkit's own writer
fn tensor_bytes(dims: &[u64], dtype: u8, payload: &[u8]) -> Vec<u8> {
    let mut b = b"ATTN0001".to_vec();
    b.extend((dims.len() as u32).to_le_bytes());
    dims.iter().for_each(|d| b.extend(d.to_le_bytes()));
    b.push(dtype);
    b.extend_from_slice(payload);
    b
}

fn value(frame: usize, i: usize) -> f32 {
    ((frame * 7919 + i) % 1009) as f32 / 1009.0 - 0.5
}

#[test]
fn full_size_feature_frames_load_pair_and_train() {
    let (h, w, c) = (23usize, 32usize, 2048usize);
    let (frames, lag, voxels) = (12usize, 2usize, 5usize);
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("features")).unwrap();
    let mut manifest = String::from("responses = responses.atn\nlag_seconds = 2\nstimulus = 720x1280\n");
    manifest.push_str(&format!("weights_sha256 = {}\n", "ab".repeat(32)));
    for f in 0..frames {
        let payload: Vec<u8> = (0..h * w * c).flat_map(|i| value(f, i).to_le_bytes()).collect();
        let rel = format!("features/f{f:06}.atn");
        std::fs::write(dir.path().join(&rel), tensor_bytes(&[h as u64, w as u64, c as u64], 1, &payload)).unwrap();
        let split = if f < 9 { "train" } else { "test" };
        manifest.push_str(&format!("frame = {split} {f} {rel}\n"));
    }
    let rows = frames + lag;
    let responses: Vec<u8> = (0..rows * voxels).flat_map(|i| ((i * 37 % 11) as f64).to_le_bytes()).collect();
    std::fs::write(dir.path().join("responses.atn"), tensor_bytes(&[rows as u64, voxels as u64], 2, &responses)).unwrap();
    let mpath = dir.path().join("manifest.cfg");
    std::fs::write(&mpath, &manifest).unwrap();

    let m = DatasetManifest::load(&mpath).unwrap();
    assert_eq!(m.weights_sha256.as_deref(), Some("ab".repeat(32).as_str()));
    assert_eq!(DatasetManifest::parse(&m.to_text(), &mpath).unwrap(), m);
    let f3 = load_feature_map(m.resolve(&m.frames[3].path), 3).unwrap();
    assert_eq!((f3.height(), f3.width(), f3.channels()), (h, w, c));
    // cell (1, 2), channel 5 in H×W×C order
    let i = (w + 2) * c + 5;
    assert_eq!(f3.data()[i], f64::from(value(3, i)));

    let y = read_tensor(dir.path().join("responses.atn")).unwrap();
    let y = neuroattn::numerics::Matrix::new(rows, voxels, y.into_data()).unwrap();
    let pairs = pair_dataset(&m, &y, lag).unwrap();
    assert_eq!((pairs.train.len(), pairs.test.len(), pairs.dropped), (9, 3, 0));
    assert_eq!(pairs.train[4].target, y.row(4 + lag));

    let model = dir.path().join("model");
    let out = Command::new(env!("CARGO_BIN_EXE_neuroattn"))
        .args(["train", "--manifest", mpath.to_str().unwrap(), "--mode", "none", "--solver", "ridge"])
        .args(["--out", model.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn adapter_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../adapters/feature-extract")
}

fn python_with_torch() -> bool {
    Command::new("python3")
        .args(["-c", "import torch, torchvision, cv2, PIL"])
        .output()
        .is_ok_and(|o| o.status.success())
}

#[test]
fn python_extractor_output_reads_back() {
    if !python_with_torch() {
        eprintln!("skipped: python3 with torch/torchvision is not available");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    std::fs::create_dir(&frames).unwrap();
    let mut ppm = b"P6\n1280 720\n255\n".to_vec();
    ppm.resize(ppm.len() + 720 * 1280 * 3, 0);
    std::fs::write(frames.join("0000.ppm"), &ppm).unwrap();
    std::fs::write(frames.join("0001.ppm"), &ppm).unwrap();

    let out_dir = dir.path().join("out");
    let out = Command::new("python3")
        .args(["-m", "neuroattn_extract.cli", "--in", frames.to_str().unwrap(), "--seed", "0"])
        .args(["--layer", "res5", "--out", out_dir.to_str().unwrap()])
        .env("PYTHONPATH", adapter_dir())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let t0 = read_tensor(out_dir.join("features/f000000.atn")).unwrap();
    let t1 = read_tensor(out_dir.join("features/f000001.atn")).unwrap();
    assert_eq!(t0.dims(), &[23, 40, 2048]);
    assert!(t0.data().iter().all(|v| v.is_finite()));
    assert_eq!(t0, t1);

    // the adapter leaves the responses to the caller
    std::fs::write(out_dir.join("responses.atn"), tensor_bytes(&[6, 1], 2, &[0u8; 48])).unwrap();
    let m = DatasetManifest::load(out_dir.join("manifest.cfg")).unwrap();
    assert_eq!((m.stimulus, m.frames.len(), m.lag_seconds), ((720, 1280), 2, 4));
    assert_eq!(m.weights_sha256.map(|s| s.len()), Some(64));
}
