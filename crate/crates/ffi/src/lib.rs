//! C ABI for qaxiom.
//!
//! Every function returns a [`QaxStatus`]; on failure the message is available from
//! [`qax_last_error_message`] on the same thread. Complex arrays are interleaved
//! `re, im` pairs and matrices are row-major. Handles are opaque and must be
//! released with their `_free` function.
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the stated length, and handles
//! must come from this library and not be used after `_free`. Null pointers are
//! reported as `QAX_STATUS_NULL_POINTER` rather than dereferenced.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use qaxiom::context::{context_from_observable, ContextRegistry};
use qaxiom::elementary::context_values;
use qaxiom::ensemble::{born_distribution, QuantumState};
use qaxiom::gns::{GnsSpace, StateFunctional};
use qaxiom::kochen_specker::{ks_noncontextual_search, RaySet};
use qaxiom::oscillator::{fock_oracle_green, two_point, wick_green};
use qaxiom::{AlgebraDescriptor, AlgebraElement, CMatrix, CVector, Error, C64};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QaxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotHermitian = 4,
    Degenerate = 5,
    NonPositive = 6,
    MalformedRays = 7,
    OrderTooLarge = 8,
    CutoffTooSmall = 9,
    Panic = 99,
}

/// Ray set handle.
pub struct QaxRaySet(RaySet);

/// GNS space handle.
pub struct QaxGnsSpace(GnsSpace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> QaxStatus {
    match err {
        Error::DimensionMismatch { .. } | Error::AlgebraMismatch | Error::OffBlockEntry { .. } => {
            QaxStatus::DimensionMismatch
        }
        Error::NotHermitian { .. } => QaxStatus::NotHermitian,
        Error::Degenerate => QaxStatus::Degenerate,
        Error::NonPositiveFunctional(_) | Error::NonPositiveFrequency(_) => QaxStatus::NonPositive,
        Error::MalformedRays(_) => QaxStatus::MalformedRays,
        Error::OrderTooLarge { .. } => QaxStatus::OrderTooLarge,
        Error::CutoffTooSmall { .. } => QaxStatus::CutoffTooSmall,
        _ => QaxStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QaxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            QaxStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            QaxStatus::NullPointer
        }
        Ok(Err(Failure::Lib(err))) => {
            set_error(err.to_string());
            status_of(&err)
        }
        Err(_) => {
            set_error("internal panic".into());
            QaxStatus::Panic
        }
    }
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn write_complex(z: C64, re: *mut f64, im: *mut f64) -> Result<(), Failure> {
    *out(re, "out_re")? = z.re;
    *out(im, "out_im")? = z.im;
    Ok(())
}

fn complex_vector(data: &[f64]) -> CVector {
    CVector::from_iterator(data.len() / 2, data.chunks_exact(2).map(|c| C64::new(c[0], c[1])))
}

fn complex_matrix(data: &[f64], n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        C64::new(data[k], data[k + 1])
    })
}

/// Message of the last failed call on this thread, or NULL. Valid until the next
/// call into the library from the same thread.
#[no_mangle]
pub extern "C" fn qax_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// `G(t1, t2) = e^{-i w |t1 - t2|} / (2 w)`.
#[no_mangle]
pub unsafe extern "C" fn qax_two_point(t1: f64, t2: f64, omega: f64, out_re: *mut f64, out_im: *mut f64) -> QaxStatus {
    guard(|| write_complex(two_point(t1, t2, omega)?, out_re, out_im))
}

/// Vacuum Green's function of `n` times by Wick pairing.
#[no_mangle]
pub unsafe extern "C" fn qax_wick_green(
    times: *const f64,
    n: usize,
    omega: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> QaxStatus {
    guard(|| {
        let t = slice_in(times, n, "times")?;
        write_complex(wick_green(t, omega)?, out_re, out_im)
    })
}

/// Vacuum Green's function on a Fock truncation with `cutoff` levels.
#[no_mangle]
pub unsafe extern "C" fn qax_fock_green(
    times: *const f64,
    n: usize,
    omega: f64,
    cutoff: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> QaxStatus {
    guard(|| {
        let t = slice_in(times, n, "times")?;
        write_complex(fock_oracle_green(t, omega, cutoff)?, out_re, out_im)
    })
}

/// Born probabilities of `state` (n complex entries) over the eigenbasis of the
/// nondegenerate Hermitian `observable` (n x n complex). Writes the probabilities
/// and matching eigenvalues, in the canonical order of the context, to arrays of
/// length `n`.
#[no_mangle]
pub unsafe extern "C" fn qax_born_distribution(
    state: *const f64,
    observable: *const f64,
    n: usize,
    out_probabilities: *mut f64,
    out_values: *mut f64,
) -> QaxStatus {
    guard(|| {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()).into());
        }
        let s = slice_in(state, 2 * n, "state")?;
        let a = slice_in(observable, 2 * n * n, "observable")?;
        if out_probabilities.is_null() {
            return Err(Failure::Null("out_probabilities"));
        }
        if out_values.is_null() {
            return Err(Failure::Null("out_values"));
        }
        let algebra = AlgebraDescriptor::full(n);
        let obs = AlgebraElement::new(algebra.clone(), complex_matrix(a, n))?;
        let registry = ContextRegistry::new();
        let ctx = context_from_observable(&obs, &registry)?;
        let psi = QuantumState::new(algebra, complex_vector(s))?;
        let probs = born_distribution(&psi, &ctx)?;
        let values = context_values(&ctx, &obs)?;
        slice::from_raw_parts_mut(out_probabilities, n).copy_from_slice(&probs);
        slice::from_raw_parts_mut(out_values, n).copy_from_slice(&values);
        Ok(())
    })
}

/// Parses a NUL-terminated CSV of `x,y,z` rays.
#[no_mangle]
pub unsafe extern "C" fn qax_rayset_from_csv(text: *const c_char, out_set: *mut *mut QaxRaySet) -> QaxStatus {
    guard(|| {
        if text.is_null() {
            return Err(Failure::Null("text"));
        }
        let slot = out(out_set, "out_set")?;
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| Error::MalformedRays("input is not UTF-8".into()))?;
        *slot = Box::into_raw(Box::new(QaxRaySet(RaySet::from_csv(s)?)));
        Ok(())
    })
}

/// The built-in 33-ray set of Peres.
#[no_mangle]
pub unsafe extern "C" fn qax_rayset_peres33(out_set: *mut *mut QaxRaySet) -> QaxStatus {
    guard(|| {
        *out(out_set, "out_set")? = Box::into_raw(Box::new(QaxRaySet(RaySet::peres33())));
        Ok(())
    })
}

/// Number of rays, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn qax_rayset_len(set: *const QaxRaySet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn qax_rayset_free(set: *mut QaxRaySet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Exhaustive search for a noncontextual assignment. `out_sat` receives 1 or 0.
/// When satisfiable and `out_assignment` is not NULL, it receives one value per ray.
#[no_mangle]
pub unsafe extern "C" fn qax_ks_search(
    set: *const QaxRaySet,
    out_sat: *mut i32,
    out_nodes: *mut u64,
    out_assignment: *mut u8,
) -> QaxStatus {
    guard(|| {
        let set = set.as_ref().ok_or(Failure::Null("set"))?;
        let rep = ks_noncontextual_search(&set.0)?;
        *out(out_sat, "out_sat")? = rep.is_sat() as i32;
        if let Some(nodes) = out_nodes.as_mut() {
            *nodes = rep.nodes;
        }
        if let (Some(a), false) = (rep.assignment(), out_assignment.is_null()) {
            slice::from_raw_parts_mut(out_assignment, a.len()).copy_from_slice(a);
        }
        Ok(())
    })
}

/// GNS space of the vector state `state` (n complex entries) on the full n x n
/// algebra.
#[no_mangle]
pub unsafe extern "C" fn qax_gns_vector_state(state: *const f64, n: usize, out_space: *mut *mut QaxGnsSpace) -> QaxStatus {
    guard(|| {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()).into());
        }
        let s = slice_in(state, 2 * n, "state")?;
        let slot = out(out_space, "out_space")?;
        let psi = QuantumState::new(AlgebraDescriptor::full(n), complex_vector(s))?;
        let space = GnsSpace::build(&StateFunctional::from_vector_state(&psi));
        *slot = Box::into_raw(Box::new(QaxGnsSpace(space)));
        Ok(())
    })
}

/// GNS space of the normalized trace on the full n x n algebra.
#[no_mangle]
pub unsafe extern "C" fn qax_gns_tracial(n: usize, out_space: *mut *mut QaxGnsSpace) -> QaxStatus {
    guard(|| {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()).into());
        }
        let slot = out(out_space, "out_space")?;
        let space = GnsSpace::build(&StateFunctional::tracial(AlgebraDescriptor::full(n)));
        *slot = Box::into_raw(Box::new(QaxGnsSpace(space)));
        Ok(())
    })
}

/// Dimension of the GNS space, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn qax_gns_rank(space: *const QaxGnsSpace) -> usize {
    space.as_ref().map_or(0, |s| s.0.rank())
}

/// `<Phi(I), Pi(S) Phi(I)>` for an n x n complex element `element`.
#[no_mangle]
pub unsafe extern "C" fn qax_gns_vacuum_expectation(
    space: *const QaxGnsSpace,
    element: *const f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> QaxStatus {
    guard(|| {
        let space = &space.as_ref().ok_or(Failure::Null("space"))?.0;
        let algebra = space.functional().algebra().clone();
        let n = algebra.dimension();
        let m = slice_in(element, 2 * n * n, "element")?;
        let s = AlgebraElement::new(algebra, complex_matrix(m, n))?;
        write_complex(space.vacuum_expectation(&s)?, out_re, out_im)
    })
}

#[no_mangle]
pub unsafe extern "C" fn qax_gns_free(space: *mut QaxGnsSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}
