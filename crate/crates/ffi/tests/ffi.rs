use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use rpmixer::cli::{prepare, Checkpoint, ExperimentConfig};
use rpmixer::data::save_binary;
use rpmixer::eval::evaluate_forecaster;
use rpmixer::model::{build_model, Forecaster};
use rpmixer::training::fit;
use rpmixer::{SeededRng, Tensor};
use rpmixer_ffi::*;

fn small_config(dataset: Option<&Path>) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.n_block = 2;
    c.max_epochs = 2;
    c.synthetic.nodes = 5;
    c.synthetic.steps = 600;
    c.dataset = dataset.map(Path::to_path_buf);
    c
}

fn cstr(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(rpmx_last_error()) }.to_string_lossy().into_owned()
}

/// Trains a small model through the library and writes its checkpoint.
fn trained_checkpoint(dir: &Path) -> (ExperimentConfig, std::path::PathBuf) {
    let config = small_config(None);
    let data = prepare(&config).unwrap();
    let model = build_model::<f32>(&config.model_config(5, 1)).unwrap();
    let outcome = fit(model, &data.train, &data.val, &data.scaler, &config.train_config()).unwrap();
    let path = dir.join("model.rpck");
    Checkpoint::from_model(&config, &outcome.model, Some(&outcome.optimizer), outcome.history.best_val)
        .save(&path)
        .unwrap();
    (config, path)
}

#[test]
fn model_roundtrip_matches_library_forward() {
    let dir = tempfile::tempdir().unwrap();
    let (_, path) = trained_checkpoint(dir.path());
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { rpmx_model_load(cstr(&path).as_ptr(), &mut model) }, RpmxStatus::Ok);
    assert!(!model.is_null());

    let (mut n, mut d, mut tp, mut tf) = (0, 0, 0, 0);
    assert_eq!(unsafe { rpmx_model_dims(model, &mut n, &mut d, &mut tp, &mut tf) }, RpmxStatus::Ok);
    assert_eq!((n, d, tp, tf), (5, 1, 12, 12));
    let mut params = 0;
    assert_eq!(unsafe { rpmx_model_num_params(model, &mut params) }, RpmxStatus::Ok);

    let reference = Checkpoint::load(&path).unwrap().model().unwrap();
    assert_eq!(params, reference.num_params());
    let x: Tensor<f32> = SeededRng::new(1).randn(&[3, 5, 12]);
    let expected = reference.predict(&x).unwrap();
    let mut out = vec![0.0f32; 3 * 5 * 12];
    let status = unsafe { rpmx_model_predict(model, x.data().as_ptr(), 3, out.as_mut_ptr(), out.len()) };
    assert_eq!(status, RpmxStatus::Ok);
    let bits = |v: &[f32]| v.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&out), bits(expected.data()));

    let status = unsafe { rpmx_model_predict(model, x.data().as_ptr(), 3, out.as_mut_ptr(), 7) };
    assert_eq!(status, RpmxStatus::Dimension);
    assert!(last_error().contains("180"), "{}", last_error());
    unsafe { rpmx_model_free(model) };
}

#[test]
fn evaluate_matches_library_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let (config, path) = trained_checkpoint(dir.path());
    let data = prepare(&config).unwrap();
    let series_path = dir.path().join("series.rpmx");
    save_binary(&data.raw, &series_path).unwrap();

    let mut model = ptr::null_mut();
    let mut dataset = ptr::null_mut();
    unsafe {
        assert_eq!(rpmx_model_load(cstr(&path).as_ptr(), &mut model), RpmxStatus::Ok);
        assert_eq!(rpmx_dataset_load(cstr(&series_path).as_ptr(), 15, &mut dataset), RpmxStatus::Ok);
    }
    let mut got = RpmxMetrics::default();
    let status = unsafe { rpmx_model_evaluate(model, dataset, RpmxSplit::Test as u32, &mut got) };
    assert_eq!(status, RpmxStatus::Ok, "{}", last_error());

    let reference = Checkpoint::load(&path).unwrap().model().unwrap();
    let want = evaluate_forecaster(&reference, &data.test, &data.scaler, 64, config.mask_zero)
        .unwrap()
        .average();
    assert!((got.mae - want.mae).abs() < 1e-9 * want.mae.max(1.0));
    assert!((got.rmse - want.rmse).abs() < 1e-9 * want.rmse.max(1.0));

    let status = unsafe { rpmx_model_evaluate(model, dataset, 7, &mut got) };
    assert_eq!(status, RpmxStatus::InvalidArgument);

    let mut wrong = ptr::null_mut();
    assert_eq!(unsafe { rpmx_dataset_synthetic(9, 400, 0, &mut wrong) }, RpmxStatus::Ok);
    let status = unsafe { rpmx_model_evaluate(model, wrong, RpmxSplit::Test as u32, &mut got) };
    assert_eq!(status, RpmxStatus::Dimension);
    let msg = last_error();
    assert!(msg.contains("5 nodes") && msg.contains("9 nodes"), "{msg}");
    unsafe {
        rpmx_dataset_free(wrong);
        rpmx_dataset_free(dataset);
        rpmx_model_free(model);
    }
}

#[test]
fn dataset_handles_expose_values() {
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { rpmx_dataset_synthetic(4, 300, 2, &mut ds) }, RpmxStatus::Ok);
    let (mut n, mut d, mut t) = (0, 0, 0);
    assert_eq!(unsafe { rpmx_dataset_dims(ds, &mut n, &mut d, &mut t) }, RpmxStatus::Ok);
    assert_eq!((n, d, t), (4, 1, 300));
    assert_eq!(unsafe { rpmx_dataset_dims(ds, ptr::null_mut(), ptr::null_mut(), &mut t) }, RpmxStatus::Ok);

    let mut values = vec![0.0f32; n * d * t];
    assert_eq!(
        unsafe { rpmx_dataset_copy_values(ds, values.as_mut_ptr(), values.len()) },
        RpmxStatus::Ok
    );
    let mut config = ExperimentConfig::default();
    config.seed = 2;
    config.synthetic.nodes = 4;
    config.synthetic.steps = 300;
    let expected = rpmixer::cli::load_raw(&config).unwrap();
    assert_eq!(values, expected.values.data());
    assert_eq!(
        unsafe { rpmx_dataset_copy_values(ds, values.as_mut_ptr(), 3) },
        RpmxStatus::Dimension
    );
    unsafe { rpmx_dataset_free(ds) };
}

#[test]
fn errors_map_to_status_codes() {
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { rpmx_model_load(ptr::null(), &mut model) }, RpmxStatus::NullPointer);
    assert!(model.is_null());
    assert!(last_error().contains("path"));

    let missing = CString::new("/nonexistent/model.rpck").unwrap();
    assert_eq!(unsafe { rpmx_model_load(missing.as_ptr(), &mut model) }, RpmxStatus::Io);
    assert!(last_error().contains("/nonexistent/model.rpck"));

    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.rpck");
    std::fs::write(&junk, b"not a checkpoint").unwrap();
    assert_eq!(unsafe { rpmx_model_load(cstr(&junk).as_ptr(), &mut model) }, RpmxStatus::Format);

    let mut n = 0;
    assert_eq!(unsafe { rpmx_model_num_params(ptr::null(), &mut n) }, RpmxStatus::NullPointer);
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { rpmx_dataset_synthetic(0, 10, 0, &mut ds) }, RpmxStatus::Config);
    assert!(ds.is_null());

    assert_eq!(unsafe { rpmx_dataset_synthetic(2, 10, 0, &mut ds) }, RpmxStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe {
        rpmx_dataset_free(ds);
        rpmx_model_free(ptr::null_mut());
        rpmx_dataset_free(ptr::null_mut());
    }
    let version = unsafe { CStr::from_ptr(rpmx_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api_and_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("rpmixer.h");
    let text = std::fs::read_to_string(&header).expect("header generated by the build script");
    for name in [
        "rpmx_last_error",
        "rpmx_model_load",
        "rpmx_model_free",
        "rpmx_model_dims",
        "rpmx_model_predict",
        "rpmx_model_evaluate",
        "rpmx_dataset_load",
        "rpmx_dataset_free",
        "RPMX_STATUS_OK",
        "typedef struct RpmxModel RpmxModel",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("probe.c");
    std::fs::write(
        &source,
        "#include \"rpmixer.h\"\nint main(void) { RpmxModel *m = 0; return rpmx_model_load(\"x\", &m) == RPMX_STATUS_OK; }\n",
    )
    .unwrap();
    let include = header.parent().unwrap();
    match Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(include)
        .arg(&source)
        .output()
    {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("no C compiler found; syntax check skipped"),
    }
}
