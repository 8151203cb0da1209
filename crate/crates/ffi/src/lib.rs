//! C ABI for `qudit-bloch`.
//!
//! Every fallible function returns a [`QbStatus`]. On failure a message is
//! stored per thread and can be copied out with [`qb_last_error_message`].
//! Matrices cross the boundary as separate row-major real and imaginary
//! arrays; callers own all buffers except [`QbBasis`] handles.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use qudit_bloch::algebra::{bloch_decompose, bloch_reconstruct, gen_gellmann_basis_with, BasisSet, BlochState, Ordering, DEFAULT_BASIS_CAP};
use qudit_bloch::linalg::{c, CMat};
use qudit_bloch::{composite, dynamics, elliptic, rigidbody, Error};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Shape = 3,
    NotHermitian = 4,
    CapExceeded = 5,
    StepUnderflow = 6,
    SingularInertia = 7,
    Separatrix = 8,
    RepeatedMoments = 9,
    Degenerate = 10,
    Resonance = 11,
    NotStationary = 12,
    Numerical = 13,
    Panic = 14,
}

/// Element ordering for [`qb_basis_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QbOrdering {
    /// All symmetric, then antisymmetric, then diagonal elements.
    Grouped = 0,
    /// Gell-Mann order (λ1..λ8 at d = 3).
    Standard = 1,
}

/// Opaque generalized Gell-Mann basis.
pub struct QbBasis(BasisSet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let s = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn status_of(e: &Error) -> QbStatus {
    match e {
        Error::InvalidInput(_) => QbStatus::InvalidInput,
        Error::Shape { .. } => QbStatus::Shape,
        Error::NotHermitian { .. } => QbStatus::NotHermitian,
        Error::CapExceeded { .. } => QbStatus::CapExceeded,
        Error::StepUnderflow { .. } => QbStatus::StepUnderflow,
        Error::SingularInertia { .. } => QbStatus::SingularInertia,
        Error::Separatrix { .. } => QbStatus::Separatrix,
        Error::RepeatedMoments(_) => QbStatus::RepeatedMoments,
        Error::Degenerate(..) => QbStatus::Degenerate,
        Error::Resonance => QbStatus::Resonance,
        Error::NotStationary(_) => QbStatus::NotStationary,
        Error::Numerical(_) => QbStatus::Numerical,
    }
}

impl From<Error> for QbStatus {
    fn from(e: Error) -> Self {
        set_error(e.to_string());
        status_of(&e)
    }
}

fn null(what: &str) -> QbStatus {
    set_error(format!("null pointer: {what}"));
    QbStatus::NullPointer
}

fn guard(f: impl FnOnce() -> Result<(), QbStatus>) -> QbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QbStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            QbStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], QbStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `n` readable elements at `p`.
    Ok(unsafe { slice::from_raw_parts(p, n) })
}

unsafe fn output<'a, T>(p: *mut T, n: usize, what: &str) -> Result<&'a mut [T], QbStatus> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `n` writable elements at `p`.
    Ok(unsafe { slice::from_raw_parts_mut(p, n) })
}

unsafe fn basis_ref<'a>(b: *const QbBasis) -> Result<&'a BasisSet, QbStatus> {
    if b.is_null() {
        return Err(null("basis"));
    }
    // SAFETY: non-null handles come from qb_basis_new.
    Ok(unsafe { &(*b).0 })
}

unsafe fn read_matrix(re: *const f64, im: *const f64, d: usize, what: &str) -> Result<CMat, QbStatus> {
    let re = unsafe { input(re, d * d, what)? };
    let im = unsafe { input(im, d * d, what)? };
    Ok(CMat::from_fn(d, d, |i, j| c(re[i * d + j], im[i * d + j])))
}

unsafe fn write_matrix(m: &CMat, re: *mut f64, im: *mut f64, what: &str) -> Result<(), QbStatus> {
    let (r, cc) = m.shape();
    let re = unsafe { output(re, r * cc, what)? };
    let im = unsafe { output(im, r * cc, what)? };
    for i in 0..r {
        for j in 0..cc {
            re[i * cc + j] = m[(i, j)].re;
            im[i * cc + j] = m[(i, j)].im;
        }
    }
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (nul-terminated,
/// truncated to `len`) and returns the full message length without the nul.
/// Returns 0 when no error has been recorded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qb_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: caller guarantees `len` writable bytes.
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn qb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds the su(d) basis and stores a new handle in `*out`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn qb_basis_new(d: usize, ordering: QbOrdering, out: *mut *mut QbBasis) -> QbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ord = match ordering {
            QbOrdering::Grouped => Ordering::Grouped,
            QbOrdering::Standard => Ordering::Standard,
        };
        let b = gen_gellmann_basis_with(d, ord, DEFAULT_BASIS_CAP)?;
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(Box::new(QbBasis(b))) };
        Ok(())
    })
}

/// Releases a handle from [`qb_basis_new`]; null is ignored.
///
/// # Safety
/// `b` must be null or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qb_basis_free(b: *mut QbBasis) {
    if !b.is_null() {
        // SAFETY: the handle was created by Box::into_raw in qb_basis_new.
        drop(unsafe { Box::from_raw(b) });
    }
}

/// Hilbert-space dimension d, or 0 for a null handle.
///
/// # Safety
/// `b` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qb_basis_dim(b: *const QbBasis) -> usize {
    unsafe { basis_ref(b) }.map_or(0, |b| b.d)
}

/// Number of basis elements d² − 1, or 0 for a null handle.
///
/// # Safety
/// `b` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qb_basis_len(b: *const QbBasis) -> usize {
    unsafe { basis_ref(b) }.map_or(0, |b| b.len())
}

/// Writes element `k` (0-based) as d×d row-major real and imaginary parts.
///
/// # Safety
/// `b` must be a live handle; `re` and `im` must hold d² doubles each.
#[no_mangle]
pub unsafe extern "C" fn qb_basis_element(b: *const QbBasis, k: usize, re: *mut f64, im: *mut f64) -> QbStatus {
    guard(|| {
        let b = unsafe { basis_ref(b)? };
        if k >= b.len() {
            return Err(Error::InvalidInput(format!("element index {k} out of range 0..{}", b.len())).into());
        }
        unsafe { write_matrix(&b.elements[k], re, im, "element") }
    })
}

/// f_ijk (0-based indices).
///
/// # Safety
/// `b` must be a live handle and `out` a writable double.
#[no_mangle]
pub unsafe extern "C" fn qb_basis_f(b: *const QbBasis, i: usize, j: usize, k: usize, out: *mut f64) -> QbStatus {
    structure_constant(b, i, j, k, out, true)
}

/// g_ijk (0-based indices).
///
/// # Safety
/// `b` must be a live handle and `out` a writable double.
#[no_mangle]
pub unsafe extern "C" fn qb_basis_g(b: *const QbBasis, i: usize, j: usize, k: usize, out: *mut f64) -> QbStatus {
    structure_constant(b, i, j, k, out, false)
}

unsafe fn structure_constant(b: *const QbBasis, i: usize, j: usize, k: usize, out: *mut f64, antisym: bool) -> QbStatus {
    guard(|| {
        let b = unsafe { basis_ref(b)? };
        let n = b.len();
        if i >= n || j >= n || k >= n {
            return Err(Error::InvalidInput(format!("index out of range 0..{n}")).into());
        }
        let out = unsafe { output(out, 1, "out")? };
        out[0] = if antisym { b.f.get(i, j, k) } else { b.g.get(i, j, k) };
        Ok(())
    })
}

/// Decomposes a Hermitian d×d operator into its scalar part Tr(A)/d and
/// the d² − 1 coefficients Tr(AΛ_k)/2.
///
/// # Safety
/// `re`, `im` must hold d² doubles; `scalar` one double; `vec` d² − 1 doubles.
#[no_mangle]
pub unsafe extern "C" fn qb_decompose(b: *const QbBasis, re: *const f64, im: *const f64, scalar: *mut f64, vec: *mut f64) -> QbStatus {
    guard(|| {
        let b = unsafe { basis_ref(b)? };
        let m = unsafe { read_matrix(re, im, b.d, "operator")? };
        let st = bloch_decompose(&m, b)?;
        let sc = unsafe { output(scalar, 1, "scalar")? };
        sc[0] = st.scalar;
        unsafe { output(vec, b.len(), "vec")? }.copy_from_slice(st.vec.as_slice());
        Ok(())
    })
}

/// Inverse of [`qb_decompose`].
///
/// # Safety
/// `vec` must hold d² − 1 doubles; `re`, `im` d² doubles each.
#[no_mangle]
pub unsafe extern "C" fn qb_reconstruct(b: *const QbBasis, scalar: f64, vec: *const f64, re: *mut f64, im: *mut f64) -> QbStatus {
    guard(|| {
        let b = unsafe { basis_ref(b)? };
        let v = unsafe { input(vec, b.len(), "vec")? };
        let m = bloch_reconstruct(&BlochState::from_slice(scalar, v), b)?;
        unsafe { write_matrix(&m, re, im, "operator") }
    })
}

/// Jacobi elliptic functions sn, cn, dn of argument `u` and modulus `k`.
///
/// # Safety
/// `sn`, `cn`, `dn` must be writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qb_jacobi_elliptic(u: f64, k: f64, sn: *mut f64, cn: *mut f64, dn: *mut f64) -> QbStatus {
    guard(|| {
        let (s, cc, d) = elliptic::jacobi_elliptic(u, k)?;
        unsafe {
            output(sn, 1, "sn")?[0] = s;
            output(cn, 1, "cn")?[0] = cc;
            output(dn, 1, "dn")?[0] = d;
        }
        Ok(())
    })
}

/// Integrates the generalized Euler equations; `out` receives `ntimes` rows
/// of d² − 1 angular-velocity components.
///
/// # Safety
/// `omega0` and `moments` must hold d² − 1 doubles, `times` `ntimes`
/// doubles and `out` ntimes·(d² − 1) doubles.
#[no_mangle]
pub unsafe extern "C" fn qb_integrate_euler(
    b: *const QbBasis,
    omega0: *const f64,
    moments: *const f64,
    times: *const f64,
    ntimes: usize,
    tol: f64,
    out: *mut f64,
) -> QbStatus {
    guard(|| {
        let b = unsafe { basis_ref(b)? };
        let n = b.len();
        let w0 = unsafe { input(omega0, n, "omega0")? };
        let m = unsafe { input(moments, n, "moments")? };
        let ts = unsafe { input(times, ntimes, "times")? };
        let out = unsafe { output(out, ntimes * n, "out")? };
        let tr = rigidbody::integrate_euler(w0, m, b, ts, tol)?;
        for (row, s) in out.chunks_mut(n).zip(&tr.states) {
            row.copy_from_slice(s.vec.as_slice());
        }
        Ok(())
    })
}

/// Exact von Neumann propagation; `out` receives `ntimes` rows of Bloch coefficients.
///
/// # Safety
/// Matrix arguments must hold d² doubles each, `times` `ntimes` doubles and
/// `out` ntimes·(d² − 1) doubles.
#[no_mangle]
pub unsafe extern "C" fn qb_propagate_spectral(
    b: *const QbBasis,
    h_re: *const f64,
    h_im: *const f64,
    rho_re: *const f64,
    rho_im: *const f64,
    times: *const f64,
    ntimes: usize,
    out: *mut f64,
) -> QbStatus {
    guard(|| {
        let b = unsafe { basis_ref(b)? };
        let n = b.len();
        let h = unsafe { read_matrix(h_re, h_im, b.d, "hamiltonian")? };
        let rho = unsafe { read_matrix(rho_re, rho_im, b.d, "rho")? };
        let ts = unsafe { input(times, ntimes, "times")? };
        let out = unsafe { output(out, ntimes * n, "out")? };
        let tr = dynamics::propagate_spectral(&h, &rho, ts, b)?;
        for (row, s) in out.chunks_mut(n).zip(&tr.states) {
            row.copy_from_slice(s.vec.as_slice());
        }
        Ok(())
    })
}

/// Wootters concurrence of a 4×4 two-qubit density matrix.
///
/// # Safety
/// `re`, `im` must hold 16 doubles each; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qb_concurrence(re: *const f64, im: *const f64, out: *mut f64) -> QbStatus {
    guard(|| {
        let rho = unsafe { read_matrix(re, im, 4, "rho")? };
        let v = composite::concurrence_density(&rho)?;
        let o = unsafe { output(out, 1, "out")? };
        o[0] = v;
        Ok(())
    })
}

/// Amplitudes of the oscillating entangled state on n parties of dimension d
/// at time `t`; `re` and `im` receive d^n doubles each.
///
/// # Safety
/// `omegas` must hold `nomegas` doubles; `re`, `im` d^n doubles each.
#[no_mangle]
pub unsafe extern "C" fn qb_oscillating_state(
    d: usize,
    n: usize,
    omegas: *const f64,
    nomegas: usize,
    k_ref: usize,
    t: f64,
    re: *mut f64,
    im: *mut f64,
) -> QbStatus {
    guard(|| {
        let w = unsafe { input(omegas, nomegas, "omegas")? };
        let psi = composite::oscillating_state(d, n, w, k_ref, t)?;
        let re = unsafe { output(re, psi.len(), "re")? };
        let im = unsafe { output(im, psi.len(), "im")? };
        for (k, z) in psi.iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}
