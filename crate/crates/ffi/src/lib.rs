//! C ABI over the kmpar clustering library.
//!
//! Datasets and center sets cross the boundary as opaque handles. Every
//! fallible call returns a [`KmparStatus`]; on failure the message is kept in
//! a thread-local slot readable through [`kmpar_last_error_message`]. Panics
//! never unwind into C: they are caught and reported as `KMPAR_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kmpar::data::{load_table, Delimiter, TableSchema};
use kmpar::{cost, lloyd_run, seed_centers, Algorithm, CenterSet, Dataset, Error, LloydConfig, Rounds, SeedingSpec};

/// Result code of every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KmparStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    EmptyInput = 4,
    Parse = 5,
    Io = 6,
    Panic = 7,
}

/// Seeding algorithm.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KmparAlgorithm {
    Random = 0,
    KmeansPlusPlus = 1,
    KmeansParallel = 2,
    Partition = 3,
}

/// Seeding options. Obtain defaults from [`kmpar_init_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KmparInitOptions {
    pub algorithm: KmparAlgorithm,
    pub k: usize,
    /// Oversampling factor ℓ; a value `<= 0` means `2k`.
    pub oversampling: f64,
    /// Sampling rounds; `0` picks `⌈log₂ ψ⌉`.
    pub rounds: u32,
    /// Draw exactly ℓ points per round instead of Bernoulli sampling.
    pub exact_l: bool,
    /// Worker shards; `0` uses the default plan.
    pub shards: usize,
    /// Partition group count; `0` uses `⌈√(n/k)⌉`.
    pub partition_groups: usize,
    pub seed: u64,
}

/// Lloyd refinement options.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KmparLloydOptions {
    pub tol: f64,
    /// Step cap; `0` runs until convergence.
    pub max_iters: usize,
}

/// Outcome of [`kmpar_lloyd`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KmparLloydReport {
    pub final_cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Opaque point set.
pub struct KmparDataset(Dataset);

/// Opaque center set.
pub struct KmparCenters(CenterSet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(err: &Error) -> KmparStatus {
    match err {
        Error::DimensionMismatch { .. } => KmparStatus::DimensionMismatch,
        Error::EmptyCenters | Error::EmptyDataset => KmparStatus::EmptyInput,
        Error::Parse { .. } | Error::Csv(_) | Error::Json(_) => KmparStatus::Parse,
        Error::Io { .. } => KmparStatus::Io,
        _ => KmparStatus::InvalidArgument,
    }
}

struct Failure(KmparStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(KmparStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> KmparStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => KmparStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("internal panic: {msg}"));
            KmparStatus::Panic
        }
    }
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn in_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Creates a dataset from `n * dim` row-major coordinates and optional
/// per-point weights (`weights` may be null).
///
/// # Safety
/// `coords` must point to `n * dim` doubles, `weights` to `n` doubles or be
/// null, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kmpar_dataset_new(
    coords: *const f64,
    n: usize,
    dim: usize,
    weights: *const f64,
    out: *mut *mut KmparDataset,
) -> KmparStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        if coords.is_null() {
            return Err(null("coords"));
        }
        let len = n
            .checked_mul(dim)
            .ok_or_else(|| Failure(KmparStatus::InvalidArgument, "n * dim overflows".into()))?;
        let values = std::slice::from_raw_parts(coords, len).to_vec();
        let mut data = Dataset::new(values, dim)?;
        if !weights.is_null() {
            data = data.with_weights(std::slice::from_raw_parts(weights, n).to_vec())?;
        }
        *out = Box::into_raw(Box::new(KmparDataset(data)));
        Ok(())
    })
}

/// Loads a delimited text table.
///
/// `delimiter` is one of `"auto"`, `"comma"` or `"whitespace"` (null means
/// auto). `categorical` lists `n_categorical` zero-based symbolic columns
/// and may be null when the count is zero.
///
/// # Safety
/// `path` and a non-null `delimiter` must be NUL-terminated strings,
/// `categorical` must point to `n_categorical` entries, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kmpar_dataset_load(
    path: *const c_char,
    delimiter: *const c_char,
    categorical: *const usize,
    n_categorical: usize,
    skip_header: bool,
    out: *mut *mut KmparDataset,
) -> KmparStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        if path.is_null() {
            return Err(null("path"));
        }
        let utf8 = |p: *const c_char, what: &str| {
            CStr::from_ptr(p)
                .to_str()
                .map_err(|_| Failure(KmparStatus::InvalidArgument, format!("{what} is not UTF-8")))
        };
        let path = utf8(path, "path")?;
        let delimiter = if delimiter.is_null() {
            Delimiter::Auto
        } else {
            utf8(delimiter, "delimiter")?
                .parse()
                .map_err(|e| Failure(KmparStatus::InvalidArgument, e))?
        };
        let categorical_columns = if n_categorical == 0 {
            Vec::new()
        } else if categorical.is_null() {
            return Err(null("categorical"));
        } else {
            std::slice::from_raw_parts(categorical, n_categorical).to_vec()
        };
        let schema = TableSchema {
            delimiter,
            categorical_columns,
            skip_header,
        };
        *out = Box::into_raw(Box::new(KmparDataset(load_table(path, &schema)?)));
        Ok(())
    })
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kmpar_dataset_len(data: *const KmparDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.len())
}

/// Point dimension, or 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kmpar_dataset_dim(data: *const KmparDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.dim())
}

/// Releases a dataset. Null is ignored.
///
/// # Safety
/// `data` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kmpar_dataset_free(data: *mut KmparDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Default seeding options for `k` clusters: k-means|| with ℓ = 2k,
/// five rounds, seed 0.
#[no_mangle]
pub extern "C" fn kmpar_init_options_default(k: usize) -> KmparInitOptions {
    KmparInitOptions {
        algorithm: KmparAlgorithm::KmeansParallel,
        k,
        oversampling: 0.0,
        rounds: 5,
        exact_l: false,
        shards: 0,
        partition_groups: 0,
        seed: 0,
    }
}

/// Default Lloyd options: relative tolerance 1e-6, no step cap.
#[no_mangle]
pub extern "C" fn kmpar_lloyd_options_default() -> KmparLloydOptions {
    KmparLloydOptions {
        tol: LloydConfig::default().tol,
        max_iters: 0,
    }
}

fn seeding_spec(opts: &KmparInitOptions) -> SeedingSpec {
    SeedingSpec {
        algorithm: match opts.algorithm {
            KmparAlgorithm::Random => Algorithm::Random,
            KmparAlgorithm::KmeansPlusPlus => Algorithm::Kmpp,
            KmparAlgorithm::KmeansParallel => Algorithm::Kmpar,
            KmparAlgorithm::Partition => Algorithm::Partition,
        },
        k: opts.k,
        oversampling: if opts.oversampling > 0.0 {
            opts.oversampling
        } else {
            2.0 * opts.k as f64
        },
        rounds: if opts.rounds == 0 { Rounds::Auto } else { Rounds::Fixed(opts.rounds) },
        exact_l: opts.exact_l,
        shards: if opts.shards == 0 {
            kmpar::ShardPlan::default_shards()
        } else {
            opts.shards
        },
        partition_groups: (opts.partition_groups > 0).then_some(opts.partition_groups),
        seed: opts.seed,
    }
}

/// Seeds `opts.k` centers on `data`.
///
/// # Safety
/// `data` and `opts` must be live pointers, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kmpar_initialize(
    data: *const KmparDataset,
    opts: *const KmparInitOptions,
    out: *mut *mut KmparCenters,
) -> KmparStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let data = in_ref(data, "data")?;
        let opts = in_ref(opts, "opts")?;
        let seeding = seed_centers(&data.0, &seeding_spec(opts))?;
        *out = Box::into_raw(Box::new(KmparCenters(seeding.centers)));
        Ok(())
    })
}

/// Refines `centers` in place with Lloyd iterations. `report` may be null.
///
/// # Safety
/// `data`, `centers` and `opts` must be live pointers; `report` must be null
/// or writable.
#[no_mangle]
pub unsafe extern "C" fn kmpar_lloyd(
    data: *const KmparDataset,
    centers: *mut KmparCenters,
    opts: *const KmparLloydOptions,
    report: *mut KmparLloydReport,
) -> KmparStatus {
    guard(|| {
        let data = in_ref(data, "data")?;
        let centers = out_ptr(centers, "centers")?;
        let opts = in_ref(opts, "opts")?;
        let cfg = LloydConfig {
            tol: opts.tol,
            max_iters: (opts.max_iters > 0).then_some(opts.max_iters),
        };
        let result = lloyd_run(&data.0, &centers.0, &cfg)?;
        if let Some(r) = report.as_mut() {
            *r = KmparLloydReport {
                final_cost: result.final_cost,
                iterations: result.iterations,
                converged: result.converged,
            };
        }
        centers.0 = result.centers;
        Ok(())
    })
}

/// Weighted k-means cost of `centers` on `data`.
///
/// # Safety
/// `data` and `centers` must be live handles, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kmpar_cost(
    data: *const KmparDataset,
    centers: *const KmparCenters,
    out: *mut f64,
) -> KmparStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let data = in_ref(data, "data")?;
        let centers = in_ref(centers, "centers")?;
        *out = cost(&data.0, &centers.0)?;
        Ok(())
    })
}

/// Number of centers, or 0 for a null handle.
///
/// # Safety
/// `centers` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kmpar_centers_len(centers: *const KmparCenters) -> usize {
    centers.as_ref().map_or(0, |c| c.0.len())
}

/// Center dimension, or 0 for a null handle.
///
/// # Safety
/// `centers` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kmpar_centers_dim(centers: *const KmparCenters) -> usize {
    centers.as_ref().map_or(0, |c| c.0.dim())
}

/// Copies the row-major center coordinates into `buf`, which must hold
/// `capacity` doubles; at least `len * dim` are required.
///
/// # Safety
/// `centers` must be a live handle and `buf` must point to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn kmpar_centers_copy(
    centers: *const KmparCenters,
    buf: *mut f64,
    capacity: usize,
) -> KmparStatus {
    guard(|| {
        let centers = in_ref(centers, "centers")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let coords = centers.0.coords();
        if capacity < coords.len() {
            return Err(Failure(
                KmparStatus::InvalidArgument,
                format!("buffer holds {capacity} values, need {}", coords.len()),
            ));
        }
        ptr::copy_nonoverlapping(coords.as_ptr(), buf, coords.len());
        Ok(())
    })
}

/// Releases a center set. Null is ignored.
///
/// # Safety
/// `centers` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kmpar_centers_free(centers: *mut KmparCenters) {
    if !centers.is_null() {
        drop(Box::from_raw(centers));
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn kmpar_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kmpar_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::EmptyDataset), KmparStatus::EmptyInput);
        assert_eq!(
            status_of(&Error::DimensionMismatch { expected: 1, got: 2 }),
            KmparStatus::DimensionMismatch
        );
        assert_eq!(status_of(&Error::InvalidArgument("x".into())), KmparStatus::InvalidArgument);
    }

    #[test]
    fn panics_are_contained() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, KmparStatus::Panic);
        let msg = unsafe { CStr::from_ptr(kmpar_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }

    #[test]
    fn default_spec_uses_two_k() {
        let spec = seeding_spec(&kmpar_init_options_default(7));
        assert_eq!(spec.oversampling, 14.0);
        assert_eq!(spec.rounds, Rounds::Fixed(5));
        assert!(spec.shards >= 1);
    }
}
