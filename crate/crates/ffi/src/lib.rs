//! C ABI over `tolerant-cs`.
//!
//! Conventions:
//!
//! * Every fallible function returns a [`TcsStatus`] and writes results through
//!   out-pointers. On failure the out-pointers are left untouched and
//!   [`tcs_last_error_message`] describes the error on the calling thread.
//! * Matrices and recovery results are opaque handles owned by the caller and
//!   released with their `_free` function. Freeing `NULL` is a no-op.
//! * Complex arrays are passed as separate real and imaginary `double` arrays.
//!   Matrix entries are column-major.
//! * Column and support indices are 1-based.
//! * Panics never cross the boundary; they surface as [`TcsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use tolerant_cs::coherence::CorrelationTable;
use tolerant_cs::{dtomp, rho_d, welch_bound, Error, MatrixKind, MatrixSpec, RecoveryResult, SensingMatrix, SupportSet, C64};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcsStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed input: bad dimensions, indices, specs.
    InvalidArgument = 2,
    /// Numerical or runtime failure, e.g. a rank-deficient refit.
    Runtime = 3,
    /// A caller-provided buffer has the wrong length.
    BufferSize = 4,
    Panic = 5,
}

/// Matrix families accepted by [`tcs_matrix_build`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcsMatrixKind {
    FConsecBegin = 0,
    FConsecutive = 1,
    FRand = 2,
    FnXStatBlocks = 3,
    RGauss = 4,
    XiInflated = 5,
}

impl TcsMatrixKind {
    fn from_raw(raw: u32) -> Option<MatrixKind> {
        MatrixKind::ALL.get(raw as usize).copied()
    }
}

/// Opaque sensing matrix with its correlation table.
pub struct TcsMatrix {
    matrix: SensingMatrix,
    table: CorrelationTable,
}

/// Opaque DtOMP result.
pub struct TcsRecovery {
    result: RecoveryResult,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TcsGuaranteeReport {
    pub d: usize,
    pub s: usize,
    pub mu_d: f64,
    pub welch: f64,
    pub mu_c_d_2s: f64,
    pub mu_c_d_2s_minus_1: f64,
    pub thm2_holds: bool,
    pub corollary_mu_d_holds: bool,
    pub corollary_cumulative_holds: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

enum Failure {
    Null(&'static str),
    Buffer(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TcsStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => TcsStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            TcsStatus::NullPointer
        }
        Ok(Err(Failure::Buffer(msg))) => {
            set_last_error(msg);
            TcsStatus::BufferSize
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            if e.is_input_error() {
                TcsStatus::InvalidArgument
            } else {
                TcsStatus::Runtime
            }
        }
        Err(_) => {
            set_last_error("internal panic".into());
            TcsStatus::Panic
        }
    }
}

unsafe fn non_null<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn input_slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output_slice<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

fn expect_len(got: usize, want: usize, what: &str) -> Result<(), Failure> {
    if got == want {
        Ok(())
    } else {
        Err(Failure::Buffer(format!("{what}: buffer holds {got} values, {want} required")))
    }
}

/// Message of the last failed call on this thread, or `NULL`. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn tcs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tcs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds an `m x n` matrix of the given [`TcsMatrixKind`].
///
/// # Safety
/// `out_matrix` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tcs_matrix_build(
    kind: u32,
    m: usize,
    n: usize,
    seed: u64,
    inflation_d: usize,
    out_matrix: *mut *mut TcsMatrix,
) -> TcsStatus {
    guard(|| {
        let slot = out(out_matrix, "out_matrix")?;
        let kind = TcsMatrixKind::from_raw(kind)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown matrix kind {kind}")))?;
        let spec = MatrixSpec::new(kind, m, n).with_seed(seed).with_inflation(inflation_d);
        let matrix = tolerant_cs::build(&spec)?;
        let table = CorrelationTable::new(&matrix)?;
        *slot = Box::into_raw(Box::new(TcsMatrix { matrix, table }));
        Ok(())
    })
}

/// # Safety
/// `matrix` must be `NULL` or a handle from [`tcs_matrix_build`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tcs_matrix_free(matrix: *mut TcsMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// # Safety
/// `matrix` must be a live handle; `rows` and `cols` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tcs_matrix_dims(matrix: *const TcsMatrix, rows: *mut usize, cols: *mut usize) -> TcsStatus {
    guard(|| {
        let h = non_null(matrix, "matrix")?;
        let (r, c) = (out(rows, "rows")?, out(cols, "cols")?);
        *r = h.matrix.n_rows();
        *c = h.matrix.n_cols();
        Ok(())
    })
}

/// Copies the entries column-major into two arrays of exactly `rows * cols` values.
///
/// # Safety
/// `re` and `im` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn tcs_matrix_entries(
    matrix: *const TcsMatrix,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> TcsStatus {
    guard(|| {
        let h = non_null(matrix, "matrix")?;
        let entries = h.matrix.entries();
        expect_len(len, entries.len(), "entries")?;
        let (re, im) = (output_slice(re, len, "re")?, output_slice(im, len, "im")?);
        for (k, z) in entries.iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// `matrix` must be a live handle, `out_value` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tcs_coherence(matrix: *const TcsMatrix, out_value: *mut f64) -> TcsStatus {
    guard(|| {
        let h = non_null(matrix, "matrix")?;
        let slot = out(out_value, "out_value")?;
        *slot = h.table.coherence()?;
        Ok(())
    })
}

/// # Safety
/// `matrix` must be a live handle, `out_value` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tcs_d_coherence(matrix: *const TcsMatrix, d: usize, out_value: *mut f64) -> TcsStatus {
    guard(|| {
        let h = non_null(matrix, "matrix")?;
        let slot = out(out_value, "out_value")?;
        *slot = h.table.d_coherence(d)?;
        Ok(())
    })
}

/// # Safety
/// `matrix` must be a live handle, `out_value` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tcs_cumulative_d_coherence(
    matrix: *const TcsMatrix,
    d: usize,
    k: usize,
    out_value: *mut f64,
) -> TcsStatus {
    guard(|| {
        let h = non_null(matrix, "matrix")?;
        let slot = out(out_value, "out_value")?;
        *slot = h.table.cumulative_d_coherence(d, k)?;
        Ok(())
    })
}

/// # Safety
/// `out_value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tcs_welch_bound(m: usize, n: usize, out_value: *mut f64) -> TcsStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = welch_bound(m, n)?;
        Ok(())
    })
}

/// # Safety
/// `matrix` must be a live handle, `out_report` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tcs_check_theorem2(
    matrix: *const TcsMatrix,
    d: usize,
    s: usize,
    out_report: *mut TcsGuaranteeReport,
) -> TcsStatus {
    guard(|| {
        let h = non_null(matrix, "matrix")?;
        let slot = out(out_report, "out_report")?;
        let r = h.table.check_theorem2(d, s)?;
        *slot = TcsGuaranteeReport {
            d: r.d,
            s: r.s,
            mu_d: r.mu_d,
            welch: r.welch,
            mu_c_d_2s: r.mu_c_d_2s,
            mu_c_d_2s_minus_1: r.mu_c_d_2s_minus_1,
            thm2_holds: r.thm2_holds,
            corollary_mu_d_holds: r.corollary_mu_d_holds,
            corollary_cumulative_holds: r.corollary_cumulative_holds,
        };
        Ok(())
    })
}

/// Runs DtOMP on the measurement `y` (length = matrix rows).
///
/// # Safety
/// `y_re` and `y_im` must be valid for `y_len` reads, `out_result` for writes.
#[no_mangle]
pub unsafe extern "C" fn tcs_dtomp(
    matrix: *const TcsMatrix,
    y_re: *const f64,
    y_im: *const f64,
    y_len: usize,
    s: usize,
    d: usize,
    out_result: *mut *mut TcsRecovery,
) -> TcsStatus {
    guard(|| {
        let h = non_null(matrix, "matrix")?;
        let slot = out(out_result, "out_result")?;
        let (re, im) = (input_slice(y_re, y_len, "y_re")?, input_slice(y_im, y_len, "y_im")?);
        let y: Vec<C64> = re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect();
        let result = dtomp(&h.matrix, &y, s, d)?;
        *slot = Box::into_raw(Box::new(TcsRecovery { result }));
        Ok(())
    })
}

/// # Safety
/// `recovery` must be `NULL` or a handle from [`tcs_dtomp`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tcs_recovery_free(recovery: *mut TcsRecovery) {
    if !recovery.is_null() {
        drop(Box::from_raw(recovery));
    }
}

/// Number of recovered indices.
///
/// # Safety
/// `recovery` must be a live handle, `out_len` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tcs_recovery_support_len(recovery: *const TcsRecovery, out_len: *mut usize) -> TcsStatus {
    guard(|| {
        let h = non_null(recovery, "recovery")?;
        *out(out_len, "out_len")? = h.result.support.len();
        Ok(())
    })
}

/// Copies the sorted 1-based support into a buffer of exactly the support length.
///
/// # Safety
/// `indices` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn tcs_recovery_support(recovery: *const TcsRecovery, indices: *mut usize, len: usize) -> TcsStatus {
    guard(|| {
        let h = non_null(recovery, "recovery")?;
        expect_len(len, h.result.support.len(), "support")?;
        output_slice(indices, len, "indices")?.copy_from_slice(h.result.support.indices());
        Ok(())
    })
}

/// Copies the length-`N` estimate into two arrays of exactly `N` values.
///
/// # Safety
/// `re` and `im` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn tcs_recovery_estimate(
    recovery: *const TcsRecovery,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> TcsStatus {
    guard(|| {
        let h = non_null(recovery, "recovery")?;
        let est = &h.result.estimate;
        expect_len(len, est.len(), "estimate")?;
        let (re, im) = (output_slice(re, len, "re")?, output_slice(im, len, "im")?);
        for (k, z) in est.iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}

/// True when DtOMP stopped early for lack of admissible candidates.
///
/// # Safety
/// `recovery` must be a live handle, `out_flag` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tcs_recovery_exhausted(recovery: *const TcsRecovery, out_flag: *mut bool) -> TcsStatus {
    guard(|| {
        let h = non_null(recovery, "recovery")?;
        *out(out_flag, "out_flag")? = h.result.exhausted;
        Ok(())
    })
}

/// Fraction of the true support within distance `d` of the recovered support.
/// Both index lists are 1-based over `1..=n`.
///
/// # Safety
/// The index arrays must be valid for their lengths, `out_value` for writes.
#[no_mangle]
pub unsafe extern "C" fn tcs_rho_d(
    true_indices: *const usize,
    true_len: usize,
    recovered_indices: *const usize,
    recovered_len: usize,
    n: usize,
    d: usize,
    out_value: *mut f64,
) -> TcsStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let t = SupportSet::new(input_slice(true_indices, true_len, "true_indices")?.iter().copied(), n)?;
        let r = SupportSet::new(input_slice(recovered_indices, recovered_len, "recovered_indices")?.iter().copied(), n)?;
        *slot = rho_d(&t, &r, d)?;
        Ok(())
    })
}
