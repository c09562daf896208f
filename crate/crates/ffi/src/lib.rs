//! C ABI over `cir_core`.
//!
//! Objects cross the boundary as opaque pointers created by a `cir_*_new` or
//! `cir_*_create` function and released by the matching `cir_*_free`. Every
//! fallible call returns a [`CirStatus`]; on failure the message is available
//! from [`cir_last_error`] on the same thread until the next failing call.
//! Strings returned by the library are owned by the caller and must be
//! released with [`cir_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cir_core::analysis::linear_cka;
use cir_core::config::ExperimentConfig;
use cir_core::distributions::{materialize_pmf, PmfKind, PmfSpec};
use cir_core::harness::{self, RunOptions};
use cir_core::rng::{seeded, SeededRng};
use cir_core::sampling::{generate_sampling_stream, SamplingConfig};
use cir_core::slot::{generate_slot_stream, SlotConfig};
use cir_core::stream::Stream;
use cir_core::{Error, LabeledDataset, ReplayBuffer, StoragePolicy, SyntheticSpec};
use ndarray::ArrayView2;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CirStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    InvalidData = 4,
    Io = 5,
    Numerical = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// First-occurrence distribution family for [`cir_pmf_materialize`] and
/// [`cir_stream_sampling`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CirPmfKind {
    /// `param` is the exponent.
    Zipf = 0,
    /// `param` is the mean.
    Poisson = 1,
    /// `param` is the success probability.
    Geometric = 2,
    /// `param` is ignored.
    Uniform = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CirPolicy {
    Reservoir = 0,
    ClassBalanced = 1,
    FrequencyAware = 2,
}

/// Labelled dataset (opaque).
pub struct CirDataset {
    inner: LabeledDataset,
}

/// Generated stream (opaque).
pub struct CirStream {
    inner: Stream,
}

/// Replay buffer with its own RNG (opaque).
pub struct CirBuffer {
    inner: ReplayBuffer,
    rng: SeededRng,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(CirStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidConfig(_) => CirStatus::InvalidConfig,
            Error::InvalidData(_) | Error::ShapeMismatch(_) => CirStatus::InvalidData,
            Error::Numerical(_) => CirStatus::Numerical,
            Error::Io { .. } | Error::Checkpoint { .. } | Error::Csv(_) => CirStatus::Io,
            Error::Json(_) => CirStatus::InvalidData,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: CirStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, converting errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CirStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CirStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            CirStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(CirStatus::NullPointer, format!("{what} is null")))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| fail(CirStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(CirStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(CirStatus::NullPointer, format!("{what} is null")));
    }
    out.write(value);
    Ok(())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(CirStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CirStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("interior NULs replaced")
        .into_raw()
}

fn pmf_kind(kind: CirPmfKind, param: f64) -> PmfKind {
    match kind {
        CirPmfKind::Zipf => PmfKind::Zipf { exponent: param },
        CirPmfKind::Poisson => PmfKind::Poisson { mean: param },
        CirPmfKind::Geometric => PmfKind::Geometric { p: param },
        CirPmfKind::Uniform => PmfKind::Uniform,
    }
}

fn policy(p: CirPolicy) -> StoragePolicy {
    match p {
        CirPolicy::Reservoir => StoragePolicy::Reservoir,
        CirPolicy::ClassBalanced => StoragePolicy::ClassBalanced,
        CirPolicy::FrequencyAware => StoragePolicy::FrequencyAware,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cir_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn cir_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Writes the truncated, renormalised pmf over `support_len` experiences
/// into `out` (capacity `support_len`).
///
/// # Safety
/// `out` must point to `support_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cir_pmf_materialize(
    kind: CirPmfKind,
    param: f64,
    support_len: usize,
    out: *mut f64,
) -> CirStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(CirStatus::NullPointer, "out is null"));
        }
        let pmf = materialize_pmf(&PmfSpec::new(pmf_kind(kind, param), support_len))?;
        std::slice::from_raw_parts_mut(out, support_len).copy_from_slice(pmf.as_slice());
        Ok(())
    })
}

/// Gaussian-blob dataset; returns the training split.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn cir_dataset_synthetic(
    classes: usize,
    per_class: usize,
    dim: usize,
    spread: f64,
    seed: u64,
    out: *mut *mut CirDataset,
) -> CirStatus {
    guard(|| {
        let data = cir_core::dataset::make_synthetic_dataset(
            &SyntheticSpec::new(classes, per_class, dim, spread),
            &mut seeded(seed),
        )?;
        let handle = Box::into_raw(Box::new(CirDataset { inner: data.train }));
        write_out(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// Dataset from row-major `features` (`rows × dim`) and `labels`.
///
/// # Safety
/// `features` must hold `rows * dim` doubles and `labels` `rows` values.
#[no_mangle]
pub unsafe extern "C" fn cir_dataset_from_arrays(
    features: *const f64,
    labels: *const usize,
    rows: usize,
    dim: usize,
    num_classes: usize,
    out: *mut *mut CirDataset,
) -> CirStatus {
    guard(|| {
        let len = rows
            .checked_mul(dim)
            .ok_or_else(|| fail(CirStatus::InvalidArgument, "rows * dim overflows"))?;
        let x = slice(features, len, "features")?;
        let y = slice(labels, rows, "labels")?;
        let x = ndarray::Array2::from_shape_vec((rows, dim), x.to_vec())
            .map_err(|e| fail(CirStatus::InvalidArgument, e.to_string()))?;
        let ds = LabeledDataset::new(x, y.to_vec(), num_classes)?;
        let handle = Box::into_raw(Box::new(CirDataset { inner: ds }));
        write_out(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// # Safety
/// `ds` must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn cir_dataset_len(ds: *const CirDataset, out: *mut usize) -> CirStatus {
    guard(|| write_out(out, borrow(ds, "dataset")?.inner.len(), "out"))
}

/// # Safety
/// `ds` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn cir_dataset_free(ds: *mut CirDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Slot-based stream with `experiences` experiences of `slots` slots each.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn cir_stream_slot(
    ds: *const CirDataset,
    experiences: usize,
    slots: usize,
    seed: u64,
    out: *mut *mut CirStream,
) -> CirStatus {
    guard(|| {
        let ds = borrow(ds, "dataset")?;
        let stream = generate_slot_stream(&ds.inner, &SlotConfig::new(experiences, slots, seed))?;
        let handle = Box::into_raw(Box::new(CirStream { inner: stream }));
        write_out(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// Sampling-based stream. `repetition` holds one probability per class.
///
/// # Safety
/// `repetition` must hold `repetition_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cir_stream_sampling(
    ds: *const CirDataset,
    experiences: usize,
    experience_size: usize,
    first_kind: CirPmfKind,
    first_param: f64,
    repetition: *const f64,
    repetition_len: usize,
    seed: u64,
    out: *mut *mut CirStream,
) -> CirStatus {
    guard(|| {
        let ds = borrow(ds, "dataset")?;
        let cfg = SamplingConfig {
            experiences,
            experience_size,
            first_occurrence: pmf_kind(first_kind, first_param),
            repetition: slice(repetition, repetition_len, "repetition")?.to_vec(),
            seed,
        };
        let (_, stream) = generate_sampling_stream(&ds.inner, &cfg)?;
        let handle = Box::into_raw(Box::new(CirStream { inner: stream }));
        write_out(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// # Safety
/// `stream` must be a live stream handle.
#[no_mangle]
pub unsafe extern "C" fn cir_stream_len(stream: *const CirStream, out: *mut usize) -> CirStatus {
    guard(|| write_out(out, borrow(stream, "stream")?.inner.len(), "out"))
}

/// Copies the instance indices of one experience into `buf`. `written`
/// receives the experience size; if `capacity` is smaller, nothing is copied
/// and `CIR_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `buf` must hold `capacity` writable values.
#[no_mangle]
pub unsafe extern "C" fn cir_stream_experience(
    stream: *const CirStream,
    index: usize,
    buf: *mut usize,
    capacity: usize,
    written: *mut usize,
) -> CirStatus {
    guard(|| {
        let stream = borrow(stream, "stream")?;
        let exp = stream.inner.experiences.get(index).ok_or_else(|| {
            fail(
                CirStatus::InvalidArgument,
                format!("experience {index} out of range for {} experiences", stream.inner.len()),
            )
        })?;
        write_out(written, exp.instances.len(), "written")?;
        if capacity < exp.instances.len() {
            return Err(fail(
                CirStatus::BufferTooSmall,
                format!("experience {index} has {} instances", exp.instances.len()),
            ));
        }
        if !exp.instances.is_empty() {
            if buf.is_null() {
                return Err(fail(CirStatus::NullPointer, "buf is null"));
            }
            std::slice::from_raw_parts_mut(buf, exp.instances.len()).copy_from_slice(&exp.instances);
        }
        Ok(())
    })
}

/// Stream manifest as JSON; free the result with [`cir_string_free`].
///
/// # Safety
/// `stream` must be a live stream handle.
#[no_mangle]
pub unsafe extern "C" fn cir_stream_manifest_json(
    stream: *const CirStream,
    out: *mut *mut c_char,
) -> CirStatus {
    guard(|| {
        let json = borrow(stream, "stream")?.inner.to_manifest_json(None)?;
        write_out(out, into_c_string(json), "out")
    })
}

/// # Safety
/// `stream` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn cir_stream_free(stream: *mut CirStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// # Safety
/// `out` must be a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn cir_buffer_new(
    policy_kind: CirPolicy,
    capacity: usize,
    seed: u64,
    out: *mut *mut CirBuffer,
) -> CirStatus {
    guard(|| {
        let handle = Box::into_raw(Box::new(CirBuffer {
            inner: ReplayBuffer::new(policy(policy_kind), capacity),
            rng: seeded(seed),
        }));
        write_out(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// Feeds one experience of `(instance, label)` pairs to the buffer.
///
/// # Safety
/// `instances` and `labels` must each hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn cir_buffer_update(
    buffer: *mut CirBuffer,
    instances: *const usize,
    labels: *const usize,
    len: usize,
) -> CirStatus {
    guard(|| {
        let buffer = borrow_mut(buffer, "buffer")?;
        let xs = slice(instances, len, "instances")?;
        let ys = slice(labels, len, "labels")?;
        let data: Vec<(usize, usize)> = xs.iter().copied().zip(ys.iter().copied()).collect();
        buffer.inner.update(&data, &mut buffer.rng);
        Ok(())
    })
}

/// # Safety
/// `buffer` must be a live buffer handle.
#[no_mangle]
pub unsafe extern "C" fn cir_buffer_len(buffer: *const CirBuffer, out: *mut usize) -> CirStatus {
    guard(|| write_out(out, borrow(buffer, "buffer")?.inner.len(), "out"))
}

/// Copies stored `(instance, label)` pairs into two arrays of `capacity`.
/// Same size protocol as [`cir_stream_experience`].
///
/// # Safety
/// `instances` and `labels` must each hold `capacity` writable values.
#[no_mangle]
pub unsafe extern "C" fn cir_buffer_contents(
    buffer: *const CirBuffer,
    instances: *mut usize,
    labels: *mut usize,
    capacity: usize,
    written: *mut usize,
) -> CirStatus {
    guard(|| {
        let samples = borrow(buffer, "buffer")?.inner.samples();
        write_out(written, samples.len(), "written")?;
        if capacity < samples.len() {
            return Err(fail(
                CirStatus::BufferTooSmall,
                format!("buffer holds {} samples", samples.len()),
            ));
        }
        if samples.is_empty() {
            return Ok(());
        }
        if instances.is_null() || labels.is_null() {
            return Err(fail(CirStatus::NullPointer, "output array is null"));
        }
        for (i, s) in samples.iter().enumerate() {
            instances.add(i).write(s.instance);
            labels.add(i).write(s.class);
        }
        Ok(())
    })
}

/// # Safety
/// `buffer` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn cir_buffer_free(buffer: *mut CirBuffer) {
    if !buffer.is_null() {
        drop(Box::from_raw(buffer));
    }
}

/// Linear CKA between row-major `x` (`rows × cols_x`) and `y` (`rows × cols_y`).
///
/// # Safety
/// `x` and `y` must hold `rows * cols_x` and `rows * cols_y` doubles.
#[no_mangle]
pub unsafe extern "C" fn cir_linear_cka(
    x: *const f64,
    cols_x: usize,
    y: *const f64,
    cols_y: usize,
    rows: usize,
    out: *mut f64,
) -> CirStatus {
    guard(|| {
        let len = |c: usize| {
            rows.checked_mul(c)
                .ok_or_else(|| fail(CirStatus::InvalidArgument, "matrix size overflows"))
        };
        let xs = slice(x, len(cols_x)?, "x")?;
        let ys = slice(y, len(cols_y)?, "y")?;
        let xv = ArrayView2::from_shape((rows, cols_x), xs)
            .map_err(|e| fail(CirStatus::InvalidArgument, e.to_string()))?;
        let yv = ArrayView2::from_shape((rows, cols_y), ys)
            .map_err(|e| fail(CirStatus::InvalidArgument, e.to_string()))?;
        write_out(out, linear_cka(xv, yv)?, "out")
    })
}

/// Runs the experiment described by a TOML config file and returns the run
/// summary as JSON. Free `summary_json` with [`cir_string_free`].
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `summary_json` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn cir_run_config(
    config_path: *const c_char,
    summary_json: *mut *mut c_char,
) -> CirStatus {
    guard(|| {
        let path = c_str(config_path, "config_path")?;
        let cfg = ExperimentConfig::load(Path::new(path), &[])?;
        let summary = harness::run(&cfg, &RunOptions::default())?;
        if !summary_json.is_null() {
            let json = serde_json::to_string(&summary).map_err(Error::from)?;
            summary_json.write(into_c_string(json));
        }
        Ok(())
    })
}
