use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use qudit_bloch_ffi::*;

fn new_basis(d: usize, ordering: QbOrdering) -> *mut QbBasis {
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { qb_basis_new(d, ordering, &mut b) }, QbStatus::Ok);
    assert!(!b.is_null());
    b
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { qb_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn basis_handle_round_trip() {
    let b = new_basis(3, QbOrdering::Standard);
    unsafe {
        assert_eq!(qb_basis_dim(b), 3);
        assert_eq!(qb_basis_len(b), 8);
        let (mut re, mut im) = ([0.0; 9], [0.0; 9]);
        assert_eq!(qb_basis_element(b, 1, re.as_mut_ptr(), im.as_mut_ptr()), QbStatus::Ok);
        // λ2 = [[0, −i, 0], [i, 0, 0], [0, 0, 0]]
        assert_eq!((im[1], im[3]), (-1.0, 1.0));
        let mut f = 0.0;
        assert_eq!(qb_basis_f(b, 0, 1, 2, &mut f), QbStatus::Ok);
        assert!((f - 1.0).abs() < 1e-14);
        let mut g = 0.0;
        assert_eq!(qb_basis_g(b, 0, 0, 7, &mut g), QbStatus::Ok);
        assert!((g - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        qb_basis_free(b);
    }
}

#[test]
fn decompose_reconstruct_inverse() {
    let b = new_basis(2, QbOrdering::Grouped);
    let re = [0.7, 0.1, 0.1, 0.3];
    let im = [0.0, -0.2, 0.2, 0.0];
    let (mut s, mut v) = (0.0, [0.0; 3]);
    unsafe {
        assert_eq!(qb_decompose(b, re.as_ptr(), im.as_ptr(), &mut s, v.as_mut_ptr()), QbStatus::Ok);
        assert!((s - 0.5).abs() < 1e-15);
        assert!((v[0] - 0.1).abs() < 1e-15 && (v[1] - 0.2).abs() < 1e-15 && (v[2] - 0.2).abs() < 1e-15);
        let (mut re2, mut im2) = ([0.0; 4], [0.0; 4]);
        assert_eq!(qb_reconstruct(b, s, v.as_ptr(), re2.as_mut_ptr(), im2.as_mut_ptr()), QbStatus::Ok);
        for k in 0..4 {
            assert!((re2[k] - re[k]).abs() < 1e-15 && (im2[k] - im[k]).abs() < 1e-15);
        }
        qb_basis_free(b);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { qb_basis_new(1, QbOrdering::Grouped, &mut b) }, QbStatus::InvalidInput);
    assert!(b.is_null());
    assert!(last_error().contains("invalid input"));

    let b = new_basis(2, QbOrdering::Grouped);
    let re = [1.0, 0.5, 0.0, 0.0];
    let im = [0.0; 4];
    let (mut s, mut v) = (0.0, [0.0; 3]);
    assert_eq!(unsafe { qb_decompose(b, re.as_ptr(), im.as_ptr(), &mut s, v.as_mut_ptr()) }, QbStatus::NotHermitian);
    assert!(last_error().contains("Hermitian"));
    assert_eq!(unsafe { qb_decompose(b, ptr::null(), im.as_ptr(), &mut s, v.as_mut_ptr()) }, QbStatus::NullPointer);
    let mut f = 0.0;
    assert_eq!(unsafe { qb_basis_f(b, 0, 1, 9, &mut f) }, QbStatus::InvalidInput);
    unsafe { qb_basis_free(b) };
    unsafe { qb_basis_free(ptr::null_mut()) };
    assert_eq!(unsafe { qb_basis_len(ptr::null()) }, 0);
}

#[test]
fn elliptic_limits() {
    let (mut sn, mut cn, mut dn) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { qb_jacobi_elliptic(0.4, 0.0, &mut sn, &mut cn, &mut dn) }, QbStatus::Ok);
    assert!((sn - 0.4f64.sin()).abs() < 1e-15 && (cn - 0.4f64.cos()).abs() < 1e-15 && dn == 1.0);
    assert_eq!(unsafe { qb_jacobi_elliptic(0.4, 1.5, &mut sn, &mut cn, &mut dn) }, QbStatus::InvalidInput);
}

#[test]
fn euler_integration_conserves_energy() {
    let b = new_basis(2, QbOrdering::Grouped);
    let w0 = [1.0, 0.3, 0.5];
    let m = [3.0, 2.0, 1.0];
    let times: Vec<f64> = (0..=50).map(|i| i as f64 * 0.2).collect();
    let mut out = vec![0.0; times.len() * 3];
    let st = unsafe { qb_integrate_euler(b, w0.as_ptr(), m.as_ptr(), times.as_ptr(), times.len(), 1e-12, out.as_mut_ptr()) };
    assert_eq!(st, QbStatus::Ok);
    let energy = |w: &[f64]| 0.5 * (0..3).map(|k| m[k] * w[k] * w[k]).sum::<f64>();
    let e0 = energy(&w0);
    for row in out.chunks(3) {
        assert!((energy(row) - e0).abs() < 1e-10 * e0);
    }
    unsafe { qb_basis_free(b) };
}

#[test]
fn spectral_propagation_of_qubit_precesses() {
    let b = new_basis(2, QbOrdering::Grouped);
    // H = σ3/2, ρ0 = (1 + σ1)/2
    let (h_re, h_im) = ([0.5, 0.0, 0.0, -0.5], [0.0; 4]);
    let (r_re, r_im) = ([0.5, 0.5, 0.5, 0.5], [0.0; 4]);
    let times = [0.0, 0.5, 1.0];
    let mut out = [0.0; 9];
    let st = unsafe { qb_propagate_spectral(b, h_re.as_ptr(), h_im.as_ptr(), r_re.as_ptr(), r_im.as_ptr(), times.as_ptr(), 3, out.as_mut_ptr()) };
    assert_eq!(st, QbStatus::Ok);
    for (k, t) in times.iter().enumerate() {
        let row = &out[3 * k..3 * k + 3];
        assert!((row[0] - 0.5 * t.cos()).abs() < 1e-14);
        assert!((row[1] - 0.5 * t.sin()).abs() < 1e-14);
        assert!(row[2].abs() < 1e-14);
    }
    unsafe { qb_basis_free(b) };
}

#[test]
fn oscillating_state_concurrence() {
    let t = 0.3;
    let (mut re, mut im) = ([0.0; 4], [0.0; 4]);
    let w = [1.0];
    assert_eq!(unsafe { qb_oscillating_state(2, 2, w.as_ptr(), 1, 0, t, re.as_mut_ptr(), im.as_mut_ptr()) }, QbStatus::Ok);
    let mut rho_re = [0.0; 16];
    let mut rho_im = [0.0; 16];
    for i in 0..4 {
        for j in 0..4 {
            rho_re[i * 4 + j] = re[i] * re[j] + im[i] * im[j];
            rho_im[i * 4 + j] = im[i] * re[j] - re[i] * im[j];
        }
    }
    let mut cc = 0.0;
    assert_eq!(unsafe { qb_concurrence(rho_re.as_ptr(), rho_im.as_ptr(), &mut cc) }, QbStatus::Ok);
    assert!((cc - (2.0 * t).sin().abs()).abs() < 1e-12);
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(qb_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/qudit_bloch.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in ["qb_basis_new", "qb_basis_free", "qb_decompose", "qb_integrate_euler", "QB_STATUS_RESONANCE", "typedef struct QbBasis QbBasis"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(out) = Command::new(compiler).args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang]).arg(&header).output() else {
            continue;
        };
        assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
