//! Dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn trace(a: &CMat) -> C64 {
    a.diagonal().iter().sum()
}

/// Tr(AB) without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Largest deviation from Hermiticity and where it occurs.
pub fn hermitian_deviation(a: &CMat) -> (f64, usize, usize) {
    let n = a.nrows();
    let mut best = (0.0, 0, 0);
    for i in 0..n {
        for j in 0..n {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            if d > best.0 {
                best = (d, i, j);
            }
        }
    }
    best
}

pub fn ensure_square(a: &CMat) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape { expected: a.nrows(), got: a.ncols() });
    }
    Ok(())
}

pub fn ensure_hermitian(a: &CMat, tol: f64) -> Result<()> {
    ensure_square(a)?;
    let (max_dev, row, col) = hermitian_deviation(a);
    if max_dev > tol {
        return Err(Error::NotHermitian { max_dev, row, col });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues ascend; each eigenvector is rescaled so that its
/// largest-magnitude component is real and positive (first index wins ties).
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    let herm = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let se = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]).then(i.cmp(&j)));
    let mut vals = Vec::with_capacity(n);
    let mut vecs = CMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vals.push(se.eigenvalues[k]);
        let v = se.eigenvectors.column(k);
        let mut arg = 0;
        let mut mag = -1.0;
        for r in 0..n {
            if v[r].norm() > mag + 1e-14 {
                mag = v[r].norm();
                arg = r;
            }
        }
        let phase = if mag > 0.0 { v[arg].conj() / mag } else { C64::new(1.0, 0.0) };
        for r in 0..n {
            vecs[(r, col)] = v[r] * phase;
        }
    }
    (vals, vecs)
}

/// exp(-i H t) for Hermitian H.
pub fn unitary_propagator(h: &CMat, t: f64) -> CMat {
    let (vals, vecs) = eigh(h);
    let n = h.nrows();
    let phases = CMat::from_diagonal(&DVector::from_iterator(
        n,
        vals.iter().map(|e| C64::from_polar(1.0, -e * t)),
    ));
    &vecs * phases * vecs.adjoint()
}

/// Eigenvalues of a real square matrix, as complex numbers.
pub fn real_eigenvalues(a: &RMat) -> Vec<C64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    a.complex_eigenvalues().iter().copied().collect()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn to_complex(a: &RMat) -> CMat {
    a.map(|x| C64::new(x, 0.0))
}

/// Partial transpose of a (dA*dB)-square matrix on party 0 (A) or 1 (B).
pub fn partial_transpose(rho: &CMat, da: usize, db: usize, party: usize) -> CMat {
    let n = da * db;
    let mut out = CMat::zeros(n, n);
    for i in 0..da {
        for j in 0..db {
            for k in 0..da {
                for l in 0..db {
                    let v = rho[(i * db + j, k * db + l)];
                    let (r, c) = if party == 0 {
                        (k * db + j, i * db + l)
                    } else {
                        (i * db + l, k * db + j)
                    };
                    out[(r, c)] = v;
                }
            }
        }
    }
    out
}
