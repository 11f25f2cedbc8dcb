use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use neuroattn::io::{write_tensor, Tensor};
use neuroattn_ffi::*;

fn last_error() -> String {
    let p = na_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn cpath(p: &std::path::Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

#[test]
fn buffer_functions() {
    let mut out = 0.0;
    let x = [1.0, 2.0, 3.0, 4.0];
    let y = [1.0, 2.0, 2.0, 4.0];
    unsafe {
        assert_eq!(na_pearson(x.as_ptr(), y.as_ptr(), 4, &mut out), NaStatus::Ok);
        assert!((out - 4.5 / 23.75f64.sqrt()).abs() < 1e-12);

        let a = [1.0, 2.0, 3.0];
        let b = [3.0, 2.0, 1.0];
        assert_eq!(na_kendall_tau_a(a.as_ptr(), b.as_ptr(), 3, &mut out), NaStatus::Ok);
        assert_eq!(out, -1.0);

        let s = [0.0, 0.0, 0.0, 0.0];
        let mut soft = [0.0; 4];
        assert_eq!(na_spatial_softmax(s.as_ptr(), 2, 2, soft.as_mut_ptr()), NaStatus::Ok);
        assert_eq!(soft, [0.25; 4]);

        let sal = [0.9, 0.8, 0.1, 0.2];
        let (rows, cols) = ([0usize, 1], [1usize, 1]);
        assert_eq!(na_metric_auc(sal.as_ptr(), 2, 2, rows.as_ptr(), cols.as_ptr(), 2, &mut out), NaStatus::Ok);
        assert_eq!(out, 0.5);

        assert_eq!(na_correlation_p_value(0.5, 20, &mut out), NaStatus::Ok);
        assert!((out - 0.0248).abs() < 1e-4);

        let ps = [0.01, f64::NAN, 0.04, 0.03, 0.5];
        let mut mask = [9u8; 5];
        assert_eq!(na_benjamini_hochberg(ps.as_ptr(), 5, 0.05, mask.as_mut_ptr()), NaStatus::Ok);
        // m = 4 after dropping the NaN; thresholds 0.0125, 0.025, 0.0375, 0.05
        assert_eq!(mask, [1, 0, 0, 0, 0]);
        let ps = [0.01, f64::NAN, 0.02, 0.03, 0.5];
        assert_eq!(na_benjamini_hochberg(ps.as_ptr(), 5, 0.05, mask.as_mut_ptr()), NaStatus::Ok);
        assert_eq!(mask, [1, 0, 1, 1, 0]);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut out = 0.0;
    let c = [2.0, 2.0, 2.0];
    let x = [1.0, 2.0, 3.0];
    unsafe {
        assert_eq!(na_pearson(c.as_ptr(), x.as_ptr(), 3, &mut out), NaStatus::Degenerate);
        assert!(last_error().contains("constant"));
        assert_eq!(na_pearson(ptr::null(), x.as_ptr(), 3, &mut out), NaStatus::NullPointer);
        assert_eq!(na_correlation_p_value(0.5, 3, &mut out), NaStatus::InvalidArgument);
        let p = [0.1, 0.2, 0.3];
        assert_eq!(na_benjamini_hochberg(p.as_ptr(), 3, 0.05, ptr::null_mut()), NaStatus::NullPointer);
        assert_eq!(na_benjamini_hochberg(p.as_ptr(), 3, 1.5, ptr::null_mut()), NaStatus::InvalidArgument);
        // a successful call clears the message
        assert_eq!(na_pearson(x.as_ptr(), x.as_ptr(), 3, &mut out), NaStatus::Ok);
    }
    assert!(na_last_error_message().is_null());
}

#[test]
fn tensor_handles() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.atn");
    write_tensor(&path, &Tensor::new(vec![2, 3], (0..6).map(f64::from).collect()).unwrap()).unwrap();
    unsafe {
        let mut t: *mut NaTensor = ptr::null_mut();
        assert_eq!(na_tensor_read(cpath(&path).as_ptr(), &mut t), NaStatus::Ok);
        assert_eq!(na_tensor_ndim(t), 2);
        assert_eq!(na_tensor_len(t), 6);
        let mut dims = [0usize; 1];
        assert_eq!(na_tensor_dims(t, dims.as_mut_ptr(), 1), NaStatus::BufferTooSmall);
        let mut dims = [0usize; 2];
        assert_eq!(na_tensor_dims(t, dims.as_mut_ptr(), 2), NaStatus::Ok);
        assert_eq!(dims, [2, 3]);
        assert_eq!(std::slice::from_raw_parts(na_tensor_data(t), 6)[5], 5.0);
        na_tensor_free(t);

        std::fs::write(&path, b"NOTATENSOR").unwrap();
        let mut bad: *mut NaTensor = ptr::null_mut();
        assert_eq!(na_tensor_read(cpath(&path).as_ptr(), &mut bad), NaStatus::Format);
        assert!(bad.is_null());

        let d = [3usize];
        let v = [1.0, 2.0];
        assert_eq!(na_tensor_new(d.as_ptr(), 1, v.as_ptr(), 2, &mut bad), NaStatus::ShapeMismatch);
        na_tensor_free(ptr::null_mut());
    }
}

#[test]
fn model_prediction_matches_library() {
    use neuroattn::encoder::{encoder_forward, AttentionMode, EncoderConfig, EncoderModel, FeatureShape};
    use neuroattn::io::checkpoint::save_model;
    use neuroattn::attention::FeatureMap;

    let shape = FeatureShape { height: 3, width: 4, channels: 2 };
    let config = EncoderConfig { attention_mode: AttentionMode::Learned, kernel_size: 3, seed: 5, ..Default::default() };
    let mut model = EncoderModel::new(config, shape, 5, None).unwrap();
    model.init_parameters();
    let dir = tempfile::tempdir().unwrap();
    save_model(dir.path(), &model, &[]).unwrap();

    let data: Vec<f64> = (0..24).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
    let f = FeatureMap::new(0, 3, 4, 2, data.clone()).unwrap();
    let expected = model.denormalize(&encoder_forward(&model, &f, None).unwrap().0);
    unsafe {
        let mut m: *mut NaModel = ptr::null_mut();
        assert_eq!(na_model_load(cpath(dir.path()).as_ptr(), &mut m), NaStatus::Ok);
        assert_eq!(na_model_voxels(m), 5);
        let mut t: *mut NaTensor = ptr::null_mut();
        assert_eq!(na_tensor_new([3usize, 4, 2].as_ptr(), 3, data.as_ptr(), 24, &mut t), NaStatus::Ok);
        let mut out = [0.0; 5];
        assert_eq!(na_model_predict(m, t, out.as_mut_ptr(), 4), NaStatus::BufferTooSmall);
        assert_eq!(na_model_predict(m, t, out.as_mut_ptr(), 5), NaStatus::Ok);
        assert_eq!(out.to_vec(), expected);
        na_tensor_free(t);
        na_model_free(m);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/neuroattn.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}

/// Compiles a C program against the header and static library when a C
/// compiler is on PATH.
#[test]
fn c_program_links_and_runs() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libneuroattn_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let manifest = env!("CARGO_MANIFEST_DIR");
    let status = Command::new("cc")
        .args([&format!("{manifest}/tests/c/smoke.c"), "-I", &format!("{manifest}/include")])
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).arg(dir.path().join("c.atn")).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
