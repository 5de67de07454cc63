//! C ABI over `heom-core`.
//!
//! Objects are opaque handles created by `heom_*_new`/`heom_*_from_*` and released
//! with the matching `heom_*_free`. Every function returns a [`HeomStatus`]; on
//! failure the message is available from [`heom_last_error`] on the same thread.
//! Complex arrays are passed as separate real and imaginary buffers, row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use heom_core::assembly::{assemble, TruncatedLiouvillian, TruncationKind};
use heom_core::bath::{aaa_fit_bose, mode_subset, spin_boson_model, FitTarget, RationalBathFit, SpinBosonParams};
use heom_core::cli::ConfigDocument;
use heom_core::hierarchy::{build_truncation_capped, HeomModel as CoreModel};
use heom_core::{spectra, HeomError};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeomStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SizeCap = 3,
    Numerical = 4,
    Parse = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeomKind {
    Naive = 0,
    Schur = 1,
}

/// A validated HEOM model.
pub struct HeomModel(CoreModel);

/// An assembled truncated Liouvillian.
pub struct HeomMatrix(TruncatedLiouvillian);

/// A rational fit of the Bose function.
pub struct HeomFit(RationalBathFit);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &HeomError) -> HeomStatus {
    match e {
        HeomError::SizeCap { .. } => HeomStatus::SizeCap,
        HeomError::Config(_) => HeomStatus::Parse,
        HeomError::Numerical(_) | HeomError::Residual { .. } | HeomError::Fit(_) => HeomStatus::Numerical,
        _ => HeomStatus::InvalidArgument,
    }
}

struct Fail(HeomStatus, String);

impl From<HeomError> for Fail {
    fn from(e: HeomError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HeomStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            HeomStatus::Ok
        }
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            HeomStatus::Panic
        }
    }
}

fn null() -> Fail {
    Fail(HeomStatus::NullPointer, "null pointer argument".into())
}

unsafe fn href<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    unsafe { p.as_ref() }.ok_or_else(null)
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    unsafe { p.as_mut() }.ok_or_else(null)
}

unsafe fn buf<'a>(p: *mut f64, len: usize, need: usize) -> Result<&'a mut [f64], Fail> {
    if len < need {
        return Err(Fail(HeomStatus::BufferTooSmall, format!("buffer holds {len}, need {need}")));
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(unsafe { std::slice::from_raw_parts_mut(p, need) })
}

/// Copy the last error message of this thread into `dst` (NUL-terminated).
/// `*needed` receives the length including the terminator.
///
/// # Safety
/// `dst` must point to `cap` writable bytes or be null with `cap == 0`.
#[no_mangle]
pub unsafe extern "C" fn heom_last_error(dst: *mut c_char, cap: usize, needed: *mut usize) -> HeomStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    let n = msg.len() + 1;
    if let Some(needed) = unsafe { needed.as_mut() } {
        *needed = n;
    }
    if cap < n {
        return HeomStatus::BufferTooSmall;
    }
    if dst.is_null() {
        return HeomStatus::NullPointer;
    }
    unsafe {
        std::ptr::copy_nonoverlapping(msg.as_ptr(), dst as *mut u8, msg.len());
        *dst.add(msg.len()) = 0;
    }
    HeomStatus::Ok
}

/// Build a model from a TOML config document (the CLI format).
///
/// # Safety
/// `toml` must be a NUL-terminated string; `model` a valid out pointer.
#[no_mangle]
pub unsafe extern "C" fn heom_model_from_config(toml: *const c_char, model: *mut *mut HeomModel) -> HeomStatus {
    guard(|| {
        let slot = unsafe { out(model) }?;
        if toml.is_null() {
            return Err(null());
        }
        let text = unsafe { CStr::from_ptr(toml) }
            .to_str()
            .map_err(|e| Fail(HeomStatus::Parse, format!("config is not UTF-8: {e}")))?;
        let m = ConfigDocument::parse(text)?.model()?;
        *slot = Box::into_raw(Box::new(HeomModel(m)));
        Ok(())
    })
}

/// Spin-boson model with an AAA fit of `n_poles` poles. Fluctuation modes with
/// ν > `nu_max` are dropped; pass a negative `nu_max` to keep all of them.
///
/// # Safety
/// `model` must be a valid out pointer.
#[no_mangle]
pub unsafe extern "C" fn heom_model_spin_boson(
    alpha: f64,
    omega0: f64,
    eta: f64,
    temperature: f64,
    lambda: f64,
    n_poles: usize,
    nu_max: f64,
    model: *mut *mut HeomModel,
) -> HeomStatus {
    guard(|| {
        let slot = unsafe { out(model) }?;
        let p = SpinBosonParams { alpha, omega0, eta, temperature, lambda, n_fit_poles: n_poles };
        let fit = aaa_fit_bose(temperature, lambda, FitTarget::Poles(n_poles))?;
        let full = spin_boson_model(&p, &fit)?;
        let m = if nu_max < 0.0 { full } else { mode_subset(&full, nu_max) };
        *slot = Box::into_raw(Box::new(HeomModel(m)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn heom_model_free(model: *mut HeomModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// System dimension and number of bath modes.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn heom_model_dims(model: *const HeomModel, dim: *mut usize, n_modes: *mut usize) -> HeomStatus {
    guard(|| {
        let m = unsafe { href(model) }?;
        *unsafe { out(dim) }? = m.0.dim();
        *unsafe { out(n_modes) }? = m.0.n_modes();
        Ok(())
    })
}

/// Assemble the truncation `Re γ_n ≤ gamma_star`. `size_cap == 0` uses the default cap.
///
/// # Safety
/// `model` must be valid; `matrix` a valid out pointer.
#[no_mangle]
pub unsafe extern "C" fn heom_assemble(
    model: *const HeomModel,
    gamma_star: f64,
    kind: HeomKind,
    size_cap: usize,
    matrix: *mut *mut HeomMatrix,
) -> HeomStatus {
    guard(|| {
        let m = unsafe { href(model) }?;
        let slot = unsafe { out(matrix) }?;
        let cap = if size_cap == 0 { heom_core::hierarchy::DEFAULT_SIZE_CAP } else { size_cap };
        let trunc = build_truncation_capped(&m.0, gamma_star, cap)?;
        let kind = match kind {
            HeomKind::Naive => TruncationKind::Naive,
            HeomKind::Schur => TruncationKind::SchurTerminated,
        };
        *slot = Box::into_raw(Box::new(HeomMatrix(assemble(&m.0, &trunc, kind)?)));
        Ok(())
    })
}

/// # Safety
/// `matrix` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn heom_matrix_free(matrix: *mut HeomMatrix) {
    if !matrix.is_null() {
        drop(unsafe { Box::from_raw(matrix) });
    }
}

/// Matrix order and number of hierarchy indices.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn heom_matrix_size(matrix: *const HeomMatrix, order: *mut usize, n_indices: *mut usize) -> HeomStatus {
    guard(|| {
        let l = unsafe { href(matrix) }?;
        *unsafe { out(order) }? = l.0.size();
        *unsafe { out(n_indices) }? = l.0.truncation.len();
        Ok(())
    })
}

/// Copy the matrix row-major into `re`/`im`, each of length `len ≥ order²`.
///
/// # Safety
/// `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn heom_matrix_copy(matrix: *const HeomMatrix, re: *mut f64, im: *mut f64, len: usize) -> HeomStatus {
    guard(|| {
        let l = unsafe { href(matrix) }?;
        let n = l.0.size();
        let re = unsafe { buf(re, len, n * n) }?;
        let im = unsafe { buf(im, len, n * n) }?;
        for i in 0..n {
            for j in 0..n {
                let z = l.0.matrix[(i, j)];
                re[i * n + j] = z.re;
                im[i * n + j] = z.im;
            }
        }
        Ok(())
    })
}

/// Eigenvalues sorted by descending real part, then descending imaginary part.
///
/// # Safety
/// `re` and `im` must point to `len ≥ order` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn heom_matrix_eigenvalues(matrix: *const HeomMatrix, re: *mut f64, im: *mut f64, len: usize) -> HeomStatus {
    guard(|| {
        let l = unsafe { href(matrix) }?;
        let n = l.0.size();
        let re = unsafe { buf(re, len, n) }?;
        let im = unsafe { buf(im, len, n) }?;
        let ev = spectra::sorted(&spectra::eigenvalues(&l.0)?);
        for (k, z) in ev.iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}

/// Stability at relative tolerance `tol_rel` (times the Frobenius norm).
/// `*stable` is 1 when no eigenvalue has real part above the tolerance.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn heom_matrix_stability(
    matrix: *const HeomMatrix,
    tol_rel: f64,
    stable: *mut i32,
    abscissa: *mut f64,
) -> HeomStatus {
    guard(|| {
        let l = unsafe { href(matrix) }?;
        if !(tol_rel.is_finite() && tol_rel >= 0.0) {
            return Err(Fail(HeomStatus::InvalidArgument, format!("tolerance {tol_rel} must be finite and nonnegative")));
        }
        let s = unsafe { out(stable) }?;
        let a = unsafe { out(abscissa) }?;
        let rep = spectra::stability_report(&l.0, tol_rel)?;
        *s = rep.stable as i32;
        *a = rep.spectral_abscissa;
        Ok(())
    })
}

/// Symmetrized AAA fit of the Bose function with `n_poles` poles.
///
/// # Safety
/// `fit` must be a valid out pointer.
#[no_mangle]
pub unsafe extern "C" fn heom_fit_bath(temperature: f64, lambda: f64, n_poles: usize, fit: *mut *mut HeomFit) -> HeomStatus {
    guard(|| {
        let slot = unsafe { out(fit) }?;
        let f = aaa_fit_bose(temperature, lambda, FitTarget::Poles(n_poles))?;
        *slot = Box::into_raw(Box::new(HeomFit(f)));
        Ok(())
    })
}

/// # Safety
/// `fit` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn heom_fit_free(fit: *mut HeomFit) {
    if !fit.is_null() {
        drop(unsafe { Box::from_raw(fit) });
    }
}

/// Number of poles and maximum relative validation error.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn heom_fit_info(fit: *const HeomFit, n_poles: *mut usize, max_rel_error: *mut f64) -> HeomStatus {
    guard(|| {
        let f = unsafe { href(fit) }?;
        *unsafe { out(n_poles) }? = f.0.len();
        *unsafe { out(max_rel_error) }? = f.0.max_rel_error;
        Ok(())
    })
}

/// Pole positions ν (descending) and residues r.
///
/// # Safety
/// `nu` and `r` must point to `len ≥ n_poles` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn heom_fit_poles(fit: *const HeomFit, nu: *mut f64, r: *mut f64, len: usize) -> HeomStatus {
    guard(|| {
        let f = unsafe { href(fit) }?;
        let n = f.0.len();
        unsafe { buf(nu, len, n) }?.copy_from_slice(&f.0.nu);
        unsafe { buf(r, len, n) }?.copy_from_slice(&f.0.r);
        Ok(())
    })
}
