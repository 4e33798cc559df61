//! C ABI for the rpmixer engine.
//!
//! Every fallible function returns an [`RpmxStatus`]; on failure the message is
//! available from [`rpmx_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use rpmixer::cli::{prepare_series, Checkpoint, ExperimentConfig};
use rpmixer::data::{load_dataset, synthetic_generate, CsvOptions, RawSeries, SyntheticSpec, SYNTHETIC_SEED_OFFSET};
use rpmixer::eval::evaluate_forecaster;
use rpmixer::model::{Forecaster, RpMixer};
use rpmixer::{Error, Tensor};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RpmxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Dimension = 5,
    Config = 6,
    Numeric = 7,
    Unsupported = 8,
    Panic = 9,
}

/// Data split selector, passed to [`rpmx_model_evaluate`] as its integer value.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RpmxSplit {
    Train = 0,
    Val = 1,
    Test = 2,
}

/// Average metrics over the forecast horizon, on the original scale.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RpmxMetrics {
    pub mae: f64,
    pub rmse: f64,
    /// Percent.
    pub mape: f64,
}

/// Trained model plus the configuration it was trained with.
pub struct RpmxModel {
    config: ExperimentConfig,
    model: RpMixer<f32>,
}

/// A multivariate series of shape nodes × features × steps.
pub struct RpmxDataset {
    series: RawSeries,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(error: &Error) -> RpmxStatus {
    match error {
        Error::Dimension { .. } => RpmxStatus::Dimension,
        Error::NonFinite { .. } | Error::UndefinedMetric(_) => RpmxStatus::Numeric,
        Error::Config(_) => RpmxStatus::Config,
        Error::Unsupported(_) => RpmxStatus::Unsupported,
        Error::Usage(_) | Error::Empty(_) => RpmxStatus::InvalidArgument,
        Error::Parse { .. } | Error::Format { .. } => RpmxStatus::Format,
        Error::Io { .. } => RpmxStatus::Io,
    }
}

struct Failure(RpmxStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RpmxStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(RpmxStatus::InvalidArgument, message.into())
}

/// Runs `body`, converting errors and panics to a status and recording the message.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> RpmxStatus {
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure(RpmxStatus::Panic, format!("internal panic: {msg}")))
    });
    match outcome {
        Ok(()) => {
            set_last_error("");
            RpmxStatus::Ok
        }
        Err(Failure(status, message)) => {
            set_last_error(&message);
            status
        }
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    let text = CStr::from_ptr(path).to_str().map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(text))
}

unsafe fn out_arg<'a, T>(out: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    out.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(h: *const T, what: &str) -> Result<&'a T, Failure> {
    h.as_ref().ok_or_else(|| null(what))
}

/// Message describing the last failure on this thread; empty after a success.
/// The pointer stays valid until the next rpmx call on the same thread.
#[no_mangle]
pub extern "C" fn rpmx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rpmx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a checkpoint written by `rpmixer train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rpmx_model_load(path: *const c_char, out: *mut *mut RpmxModel) -> RpmxStatus {
    guard(|| {
        let slot = out_arg(out, "out")?;
        *slot = ptr::null_mut();
        let ck = Checkpoint::load(path_arg(path)?)?;
        let model = ck.model()?;
        *slot = Box::into_raw(Box::new(RpmxModel {
            config: ck.config,
            model,
        }));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from `rpmx_model_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rpmx_model_free(model: *mut RpmxModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Shape contract of a model. Any output pointer may be null.
///
/// # Safety
/// `model` must be a live handle; non-null outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn rpmx_model_dims(
    model: *const RpmxModel,
    nodes: *mut usize,
    features: *mut usize,
    t_past: *mut usize,
    t_future: *mut usize,
) -> RpmxStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let c = m.model.config();
        for (p, v) in [(nodes, c.nodes), (features, c.features), (t_past, c.t_past), (t_future, c.t_future)] {
            if let Some(slot) = p.as_mut() {
                *slot = v;
            }
        }
        Ok(())
    })
}

/// Number of trainable parameters.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rpmx_model_num_params(model: *const RpmxModel, out: *mut usize) -> RpmxStatus {
    guard(|| {
        let m = handle(model, "model")?;
        *out_arg(out, "out")? = m.model.num_params();
        Ok(())
    })
}

/// Forecasts a batch in the model's standardized space.
///
/// `input` holds `batch × nodes × (features·t_past)` values, each node row
/// feature-major; `output` receives `batch × nodes × t_future` values and
/// `output_len` must equal that count.
///
/// # Safety
/// `input` must point to `batch·nodes·features·t_past` floats and `output`
/// to `output_len` writable floats.
#[no_mangle]
pub unsafe extern "C" fn rpmx_model_predict(
    model: *const RpmxModel,
    input: *const f32,
    batch: usize,
    output: *mut f32,
    output_len: usize,
) -> RpmxStatus {
    guard(|| {
        let m = handle(model, "model")?;
        if input.is_null() {
            return Err(null("input"));
        }
        if output.is_null() {
            return Err(null("output"));
        }
        if batch == 0 {
            return Err(invalid("batch must be positive"));
        }
        let c = m.model.config();
        let width = c.features * c.t_past;
        let expected = batch * c.nodes * c.t_future;
        if output_len != expected {
            return Err(Failure(
                RpmxStatus::Dimension,
                format!(
                    "output holds {output_len} values, forecast needs {batch}×{}×{} = {expected}",
                    c.nodes, c.t_future
                ),
            ));
        }
        let x = std::slice::from_raw_parts(input, batch * c.nodes * width).to_vec();
        let y = m.model.predict(&Tensor::new(vec![batch, c.nodes, width], x)?)?;
        std::slice::from_raw_parts_mut(output, output_len).copy_from_slice(y.data());
        Ok(())
    })
}

/// Evaluates a model on one split of a dataset with the model's own
/// windowing, split ratios and standardization settings.
///
/// # Safety
/// Both handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rpmx_model_evaluate(
    model: *const RpmxModel,
    dataset: *const RpmxDataset,
    split: u32,
    out: *mut RpmxMetrics,
) -> RpmxStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let d = handle(dataset, "dataset")?;
        let slot = out_arg(out, "out")?;
        let c = m.model.config();
        if split > RpmxSplit::Test as u32 {
            return Err(invalid(format!("split {split} is not an RpmxSplit value")));
        }
        if d.series.nodes() != c.nodes || d.series.features() != c.features {
            return Err(Failure(
                RpmxStatus::Dimension,
                format!(
                    "model expects {} nodes × {} features, dataset has {} nodes × {} features",
                    c.nodes,
                    c.features,
                    d.series.nodes(),
                    d.series.features()
                ),
            ));
        }
        let prepared = prepare_series(&m.config, d.series.clone())?;
        let data = match split {
            s if s == RpmxSplit::Train as u32 => &prepared.train,
            s if s == RpmxSplit::Val as u32 => &prepared.val,
            s if s == RpmxSplit::Test as u32 => &prepared.test,
            _ => unreachable!("split validated above"),
        };
        let avg = evaluate_forecaster(&m.model, data, &prepared.scaler, 256, m.config.mask_zero)?.average();
        *slot = RpmxMetrics {
            mae: avg.mae,
            rmse: avg.rmse,
            mape: avg.mape,
        };
        Ok(())
    })
}

/// Loads a dataset: `.csv` files (one column per node, one row per step,
/// `interval_minutes` apart) or the binary format written by `rpmixer generate`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rpmx_dataset_load(
    path: *const c_char,
    interval_minutes: u32,
    out: *mut *mut RpmxDataset,
) -> RpmxStatus {
    guard(|| {
        let slot = out_arg(out, "out")?;
        *slot = ptr::null_mut();
        let options = CsvOptions {
            interval_minutes,
            ..CsvOptions::default()
        };
        let series = load_dataset(path_arg(path)?, &options)?;
        *slot = Box::into_raw(Box::new(RpmxDataset { series }));
        Ok(())
    })
}

/// Generates the default synthetic periodic dataset at the given size.
/// `seed` is the experiment seed, matching `rpmixer generate --seed`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rpmx_dataset_synthetic(
    nodes: usize,
    steps: usize,
    seed: u64,
    out: *mut *mut RpmxDataset,
) -> RpmxStatus {
    guard(|| {
        let slot = out_arg(out, "out")?;
        *slot = ptr::null_mut();
        let spec = SyntheticSpec {
            nodes,
            steps,
            seed: seed.wrapping_add(SYNTHETIC_SEED_OFFSET),
            ..SyntheticSpec::default()
        };
        let series = synthetic_generate(&spec)?;
        *slot = Box::into_raw(Box::new(RpmxDataset { series }));
        Ok(())
    })
}

/// Releases a dataset; null is ignored.
///
/// # Safety
/// `dataset` must come from an rpmx constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rpmx_dataset_free(dataset: *mut RpmxDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Shape of a dataset. Any output pointer may be null.
///
/// # Safety
/// `dataset` must be a live handle; non-null outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn rpmx_dataset_dims(
    dataset: *const RpmxDataset,
    nodes: *mut usize,
    features: *mut usize,
    steps: *mut usize,
) -> RpmxStatus {
    guard(|| {
        let d = handle(dataset, "dataset")?;
        let s = &d.series;
        for (p, v) in [(nodes, s.nodes()), (features, s.features()), (steps, s.steps())] {
            if let Some(slot) = p.as_mut() {
                *slot = v;
            }
        }
        Ok(())
    })
}

/// Copies all values, laid out nodes × features × steps, into `buffer`;
/// `len` must equal that count.
///
/// # Safety
/// `dataset` must be a live handle and `buffer` must hold `len` floats.
#[no_mangle]
pub unsafe extern "C" fn rpmx_dataset_copy_values(
    dataset: *const RpmxDataset,
    buffer: *mut f32,
    len: usize,
) -> RpmxStatus {
    guard(|| {
        let d = handle(dataset, "dataset")?;
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        let values = d.series.values.data();
        if len != values.len() {
            return Err(Failure(
                RpmxStatus::Dimension,
                format!("buffer holds {len} values, dataset has {}", values.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buffer, len).copy_from_slice(values);
        Ok(())
    })
}
