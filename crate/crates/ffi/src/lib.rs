//! C bindings for `gpann`.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `*_new`/`*_load`/`*_run` function and released by the matching `*_free`.
//! Fallible functions return a [`GpannStatus`]; the message of the last
//! failure on the calling thread is available from
//! [`gpann_last_error_message`]. Strings returned by the library are owned by
//! the caller and must be released with [`gpann_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gpann::data::{load_csv, normalize, parse_csv, split, CsvSchema, Dataset, SplitFractions};
use gpann::decoder::decode_node;
use gpann::evolution::{run_with_holdout, EvolutionConfig, RunReport};
use gpann::grammar::Node;
use gpann::network::Network;
use gpann::Error;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpannStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    InvalidConfig = 4,
    Io = 5,
    Parse = 6,
    Data = 7,
    Internal = 8,
    Panic = 9,
}

/// A loaded dataset.
pub struct GpannDataset(Dataset);

/// Evolution parameters.
pub struct GpannConfig(EvolutionConfig);

/// The outcome of one run.
pub struct GpannReport(RunReport);

/// A decoded feedforward network.
pub struct GpannNetwork(Network);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> GpannStatus {
    match err {
        Error::InvalidConfig { .. } | Error::BudgetTooSmall { .. } => GpannStatus::InvalidConfig,
        Error::Io { .. } => GpannStatus::Io,
        Error::Parse { .. } | Error::InconsistentWidth { .. } | Error::Csv(_) | Error::Json(_) => {
            GpannStatus::Parse
        }
        Error::ShapeMismatch { .. }
        | Error::EmptyDataset
        | Error::EmptyFile
        | Error::DegenerateSplit { .. } => GpannStatus::Data,
        Error::InvalidTree(_) => GpannStatus::InvalidArgument,
        Error::Fold { source, .. } => status_of(source),
        _ => GpannStatus::Internal,
    }
}

enum Failure {
    Status(GpannStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GpannStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GpannStatus::Ok,
        Ok(Err(Failure::Status(s, msg))) => {
            set_last_error(msg);
            s
        }
        Ok(Err(Failure::Lib(e))) => {
            let s = status_of(&e);
            set_last_error(e.to_string());
            s
        }
        Err(_) => {
            set_last_error("panic inside gpann".into());
            GpannStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Status(GpannStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(GpannStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn obj<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::Status(GpannStatus::NullPointer, format!("{name} is null")))
}

fn out_ptr<T>(out: *mut T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure::Status(GpannStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Version string, statically allocated.
#[no_mangle]
pub extern "C" fn gpann_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the last failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gpann_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gpann_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a CSV file with a header row and the class in the last column,
/// min-max normalizing the features.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gpann_dataset_load_csv(
    path: *const c_char,
    out: *mut *mut GpannDataset,
) -> GpannStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let path = str_arg(path, "path")?;
        let ds = normalize(&load_csv(path, &CsvSchema::default())?);
        *out = Box::into_raw(Box::new(GpannDataset(ds)));
        Ok(())
    })
}

/// Same as [`gpann_dataset_load_csv`] but reads CSV text from memory.
///
/// # Safety
/// `name` and `text` must be NUL-terminated strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gpann_dataset_parse_csv(
    name: *const c_char,
    text: *const c_char,
    out: *mut *mut GpannDataset,
) -> GpannStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let name = str_arg(name, "name")?;
        let text = str_arg(text, "text")?;
        let ds = normalize(&parse_csv(name, text, &CsvSchema::default())?);
        *out = Box::into_raw(Box::new(GpannDataset(ds)));
        Ok(())
    })
}

/// Splits `ds` into a training and a test part. `test_fraction` must be in
/// (0, 1).
///
/// # Safety
/// `ds` must be a live dataset handle and both out pointers valid.
#[no_mangle]
pub unsafe extern "C" fn gpann_dataset_split(
    ds: *const GpannDataset,
    test_fraction: f64,
    seed: u64,
    train_out: *mut *mut GpannDataset,
    test_out: *mut *mut GpannDataset,
) -> GpannStatus {
    guard(|| {
        out_ptr(train_out, "train_out")?;
        out_ptr(test_out, "test_out")?;
        let ds = obj(ds, "ds")?;
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Failure::Status(
                GpannStatus::InvalidArgument,
                format!("test fraction {test_fraction} is not in (0, 1)"),
            ));
        }
        let fr = SplitFractions::new(1.0 - test_fraction, 0.0, test_fraction);
        let (tr, _, te) = split(&ds.0, fr, true, seed)?;
        let tr = tr.ok_or(Error::DegenerateSplit { part: "train" })?;
        let te = te.ok_or(Error::DegenerateSplit { part: "test" })?;
        *train_out = Box::into_raw(Box::new(GpannDataset(tr)));
        *test_out = Box::into_raw(Box::new(GpannDataset(te)));
        Ok(())
    })
}

/// Number of rows, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn gpann_dataset_len(ds: *const GpannDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn gpann_dataset_input_width(ds: *const GpannDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.input_width())
}

/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn gpann_dataset_target_width(ds: *const GpannDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.target_width())
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gpann_dataset_free(ds: *mut GpannDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Default parameters. Never null.
#[no_mangle]
pub extern "C" fn gpann_config_new() -> *mut GpannConfig {
    Box::into_raw(Box::new(GpannConfig(EvolutionConfig::default())))
}

/// Parses parameters from TOML text. Missing keys keep their defaults.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gpann_config_from_toml(
    text: *const c_char,
    out: *mut *mut GpannConfig,
) -> GpannStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let text = str_arg(text, "text")?;
        let cfg: EvolutionConfig = toml::from_str(text)
            .map_err(|e| Failure::Status(GpannStatus::Parse, e.to_string()))?;
        cfg.validate()?;
        *out = Box::into_raw(Box::new(GpannConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn gpann_config_set_seed(cfg: *mut GpannConfig, seed: u64) -> GpannStatus {
    guard(|| {
        let cfg = cfg
            .as_mut()
            .ok_or_else(|| Failure::Status(GpannStatus::NullPointer, "cfg is null".into()))?;
        cfg.0.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn gpann_config_set_effort_budget(
    cfg: *mut GpannConfig,
    budget: u64,
) -> GpannStatus {
    guard(|| {
        let cfg = cfg
            .as_mut()
            .ok_or_else(|| Failure::Status(GpannStatus::NullPointer, "cfg is null".into()))?;
        cfg.0.effort_budget = budget;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn gpann_config_set_population_size(
    cfg: *mut GpannConfig,
    size: usize,
) -> GpannStatus {
    guard(|| {
        let cfg = cfg
            .as_mut()
            .ok_or_else(|| Failure::Status(GpannStatus::NullPointer, "cfg is null".into()))?;
        cfg.0.population_size = size;
        Ok(())
    })
}

/// Checks the parameters without running anything.
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn gpann_config_validate(cfg: *const GpannConfig) -> GpannStatus {
    guard(|| {
        obj(cfg, "cfg")?.0.validate()?;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gpann_config_free(cfg: *mut GpannConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Evolves a network on `train`. `test` may be null.
///
/// # Safety
/// `cfg` and `train` must be live handles, `test` null or live, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gpann_run(
    cfg: *const GpannConfig,
    train: *const GpannDataset,
    test: *const GpannDataset,
    out: *mut *mut GpannReport,
) -> GpannStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let cfg = obj(cfg, "cfg")?;
        let train = obj(train, "train")?;
        let test = test.as_ref().map(|t| &t.0);
        let report = run_with_holdout(&cfg.0, &train.0, test)?;
        *out = Box::into_raw(Box::new(GpannReport(report)));
        Ok(())
    })
}

/// Test-set accuracy, or NaN when no test set was given or `r` is null.
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn gpann_report_test_accuracy(r: *const GpannReport) -> f64 {
    r.as_ref()
        .and_then(|r| r.0.test_accuracy)
        .unwrap_or(f64::NAN)
}

/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn gpann_report_train_fitness(r: *const GpannReport) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.train_fitness)
}

/// Training-set evaluations spent.
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn gpann_report_effort_used(r: *const GpannReport) -> u64 {
    r.as_ref().map_or(0, |r| r.0.effort_used)
}

/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn gpann_report_neuron_count(r: *const GpannReport) -> usize {
    r.as_ref().map_or(0, |r| r.0.reachable_neurons)
}

/// The full report as JSON. Free with [`gpann_string_free`].
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn gpann_report_to_json(r: *const GpannReport) -> *mut c_char {
    let Some(r) = r.as_ref() else {
        set_last_error("r is null".into());
        return ptr::null_mut();
    };
    match serde_json::to_string_pretty(&r.0) {
        Ok(s) => into_c_string(s),
        Err(e) => {
            set_last_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Copies out the best network of a run.
///
/// # Safety
/// `r` must be a live report handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gpann_report_network(
    r: *const GpannReport,
    out: *mut *mut GpannNetwork,
) -> GpannStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let r = obj(r, "r")?;
        *out = Box::into_raw(Box::new(GpannNetwork(r.0.best_network.clone())));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gpann_report_free(r: *mut GpannReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Decodes an s-expression genotype such as `(ANN (N1 IN0 0.5))`.
///
/// # Safety
/// `tree` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gpann_network_from_tree(
    tree: *const c_char,
    input_count: usize,
    out: *mut *mut GpannNetwork,
) -> GpannStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let root: Node = str_arg(tree, "tree")?.parse()?;
        let net = decode_node(&root, input_count)?;
        *out = Box::into_raw(Box::new(GpannNetwork(net)));
        Ok(())
    })
}

/// Reads a network previously written by [`gpann_network_to_json`].
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gpann_network_from_json(
    json: *const c_char,
    out: *mut *mut GpannNetwork,
) -> GpannStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let net = Network::from_json(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(GpannNetwork(net)));
        Ok(())
    })
}

/// # Safety
/// `net` must be null or a live network handle.
#[no_mangle]
pub unsafe extern "C" fn gpann_network_input_count(net: *const GpannNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.input_count())
}

/// # Safety
/// `net` must be null or a live network handle.
#[no_mangle]
pub unsafe extern "C" fn gpann_network_output_count(net: *const GpannNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.output_count())
}

/// Runs one pattern through the network. `input` holds `input_len` values
/// and `output` has room for `output_len` values; both lengths must match
/// the network exactly.
///
/// # Safety
/// `net` must be a live handle; `input` and `output` must point to arrays of
/// the given lengths.
#[no_mangle]
pub unsafe extern "C" fn gpann_network_forward(
    net: *const GpannNetwork,
    input: *const f64,
    input_len: usize,
    output: *mut f64,
    output_len: usize,
) -> GpannStatus {
    guard(|| {
        let net = obj(net, "net")?;
        out_ptr(output, "output")?;
        if input.is_null() {
            return Err(Failure::Status(GpannStatus::NullPointer, "input is null".into()));
        }
        if output_len != net.0.output_count() {
            return Err(Error::ShapeMismatch {
                expected: net.0.output_count(),
                found: output_len,
            }
            .into());
        }
        let x = std::slice::from_raw_parts(input, input_len);
        let y = net.0.forward(x)?;
        std::slice::from_raw_parts_mut(output, output_len).copy_from_slice(&y);
        Ok(())
    })
}

/// Graphviz rendering. Free with [`gpann_string_free`].
///
/// # Safety
/// `net` must be null or a live network handle.
#[no_mangle]
pub unsafe extern "C" fn gpann_network_to_dot(net: *const GpannNetwork) -> *mut c_char {
    match net.as_ref() {
        Some(n) => into_c_string(n.0.to_dot()),
        None => {
            set_last_error("net is null".into());
            ptr::null_mut()
        }
    }
}

/// JSON rendering. Free with [`gpann_string_free`].
///
/// # Safety
/// `net` must be null or a live network handle.
#[no_mangle]
pub unsafe extern "C" fn gpann_network_to_json(net: *const GpannNetwork) -> *mut c_char {
    match net.as_ref() {
        Some(n) => into_c_string(n.0.to_json()),
        None => {
            set_last_error("net is null".into());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `net` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gpann_network_free(net: *mut GpannNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}
