//! Composite systems: tensor-product Gell-Mann bases, multipartite Bloch
//! coefficients and their equations of motion, the Heisenberg dimer,
//! separability checks and oscillating entangled states.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde_json::{json, Value};

use crate::algebra::{bloch_decompose, gen_gellmann_basis, gen_gellmann_basis_with, BasisSet, Ordering, DEFAULT_BASIS_CAP};
use crate::dynamics::SpectralPropagator;
use crate::error::{Error, Result};
use crate::linalg::{c, commutator, eigh, ensure_hermitian, identity, kron, partial_transpose, CMat, C64};
use crate::rigidbody::angular_bloch_vector;

/// Default cap on the total Hilbert-space dimension d^n.
pub const DEFAULT_COMPOSITE_CAP: usize = 64;

pub type CVec = DVector<C64>;

fn check_dims(d: usize, n: usize, cap: usize) -> Result<usize> {
    if d < 2 || n < 1 {
        return Err(Error::InvalidInput(format!("need d ≥ 2 and n ≥ 1, got d = {d}, n = {n}")));
    }
    let total = d.checked_pow(n as u32).unwrap_or(usize::MAX);
    if total > cap {
        return Err(Error::CapExceeded { what: "d^n", value: total, cap });
    }
    Ok(total)
}

/// Non-empty subsets of {0..n−1}, by size then lexicographically.
pub fn party_subsets(n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|p| mask & (1 << p) != 0).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn multi_index(mut flat: usize, m: usize, base: usize) -> Vec<usize> {
    let mut ks = vec![0; m];
    for slot in ks.iter_mut().rev() {
        *slot = flat % base;
        flat /= base;
    }
    ks
}

/// Label of one tensor-product element: parties carrying λ's and their local indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductLabel {
    pub subset: Vec<usize>,
    pub local: Vec<usize>,
}

/// Tensor-product Gell-Mann basis over n parties of dimension d.
#[derive(Debug, Clone)]
pub struct ProductBasis {
    pub d: usize,
    pub n: usize,
    pub local: BasisSet,
    pub labels: Vec<ProductLabel>,
}

impl ProductBasis {
    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Dense matrix of element `idx`.
    pub fn element(&self, idx: usize) -> CMat {
        let lab = &self.labels[idx];
        let mut m = CMat::zeros(self.dim(), self.dim());
        for_each_entry(&self.local, self.n, &lab.subset, &lab.local, |r, col, v| m[(r, col)] += v);
        m
    }

    /// Tr(λ_a λ_a) = 2^m d^{n−m} for an element on m parties.
    pub fn norm_sq(&self, idx: usize) -> f64 {
        let m = self.labels[idx].subset.len();
        2f64.powi(m as i32) * (self.d as f64).powi((self.n - m) as i32)
    }
}

/// Visits the nonzero entries of ⊗_p op_p, with op_p = λ_{k} on the subset and 1 elsewhere.
fn for_each_entry(local: &BasisSet, n: usize, subset: &[usize], ks: &[usize], mut visit: impl FnMut(usize, usize, C64)) {
    let d = local.d;
    let ident: Vec<(usize, usize, C64)> = (0..d).map(|i| (i, i, c(1.0, 0.0))).collect();
    let mut ops: Vec<&[(usize, usize, C64)]> = vec![ident.as_slice(); n];
    for (p, &k) in subset.iter().zip(ks) {
        ops[*p] = local.sparse_element(k);
    }
    let mut choice = vec![0usize; n];
    loop {
        let (mut r, mut col, mut v) = (0usize, 0usize, c(1.0, 0.0));
        for p in 0..n {
            let (a, b, x) = ops[p][choice[p]];
            r = r * d + a;
            col = col * d + b;
            v *= x;
        }
        visit(r, col, v);
        let mut p = n;
        loop {
            if p == 0 {
                return;
            }
            p -= 1;
            choice[p] += 1;
            if choice[p] < ops[p].len() {
                break;
            }
            choice[p] = 0;
        }
    }
}

pub fn product_basis(d: usize, n: usize) -> Result<ProductBasis> {
    product_basis_with(d, n, DEFAULT_COMPOSITE_CAP)
}

/// Product basis with an explicit cap on d^n.
///
/// Orthogonality of the product elements follows from that of the local
/// set together with the identity; the local Gram matrix is checked here.
pub fn product_basis_with(d: usize, n: usize, cap: usize) -> Result<ProductBasis> {
    check_dims(d, n, cap)?;
    let local = gen_gellmann_basis_with(d, Ordering::Grouped, DEFAULT_BASIS_CAP)?;
    let nl = local.len();
    let mut ops = vec![identity(d)];
    ops.extend(local.elements.iter().cloned());
    for a in 0..ops.len() {
        for b in 0..ops.len() {
            let tr = (&ops[a] * &ops[b]).trace();
            let want = match (a == b, a == 0) {
                (true, true) => d as f64,
                (true, false) => 2.0,
                _ => 0.0,
            };
            if (tr - c(want, 0.0)).norm() > 1e-12 {
                return Err(Error::Numerical(format!("local basis not orthogonal at ({a}, {b})")));
            }
        }
    }
    let mut labels = Vec::new();
    for subset in party_subsets(n) {
        let m = subset.len();
        for flat in 0..nl.pow(m as u32) {
            labels.push(ProductLabel { subset: subset.clone(), local: multi_index(flat, m, nl) });
        }
    }
    Ok(ProductBasis { d, n, local, labels })
}

/// Expansion ρ = scalar·1 + Σ_S Σ_k c_{S,k} λ_{S,k} over party subsets S.
///
/// Each tensor is stored flattened row-major with shape (d² − 1)^|S|.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeCoefficients {
    pub d: usize,
    pub n: usize,
    pub scalar: f64,
    pub tensors: BTreeMap<Vec<usize>, Vec<f64>>,
}

impl CompositeCoefficients {
    pub fn zeros(d: usize, n: usize) -> Self {
        let nl = d * d - 1;
        let tensors = party_subsets(n).into_iter().map(|s| {
            let len = nl.pow(s.len() as u32);
            (s, vec![0.0; len])
        });
        CompositeCoefficients { d, n, scalar: 0.0, tensors: tensors.collect() }
    }

    pub fn tensor(&self, subset: &[usize]) -> &[f64] {
        &self.tensors[subset]
    }

    pub fn tensor_mut(&mut self, subset: &[usize]) -> &mut Vec<f64> {
        self.tensors.get_mut(subset).expect("subset present")
    }

    /// max |a − b| over all coefficients including the scalar.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m = (self.scalar - other.scalar).abs();
        for (k, v) in &self.tensors {
            if let Some(w) = other.tensors.get(k) {
                for (a, b) in v.iter().zip(w) {
                    m = m.max((a - b).abs());
                }
            } else {
                m = f64::INFINITY;
            }
        }
        m
    }

    /// Subset-labeled JSON with 1-based party labels.
    pub fn to_json(&self) -> Value {
        let mut tensors = serde_json::Map::new();
        for s in party_subsets(self.n) {
            let key = s.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(",");
            tensors.insert(key, json!(self.tensors[&s]));
        }
        json!({ "d": self.d, "n": self.n, "scalar": self.scalar, "tensors": tensors })
    }
}

/// Coefficients c = Tr(A λ_S)/(2^m d^{n−m}) of a Hermitian operator on (C^d)^⊗n.
pub fn multipartite_decompose(op: &CMat, d: usize, n: usize) -> Result<CompositeCoefficients> {
    let total = check_dims(d, n, DEFAULT_COMPOSITE_CAP)?;
    if op.nrows() != total || op.ncols() != total {
        return Err(Error::Shape { expected: total, got: op.nrows() });
    }
    ensure_hermitian(op, 1e-10)?;
    Ok(decompose_with(op, d, n, &gen_gellmann_basis(d)?))
}

fn decompose_with(op: &CMat, d: usize, n: usize, local: &BasisSet) -> CompositeCoefficients {
    let nl = local.len();
    let mut out = CompositeCoefficients::zeros(d, n);
    out.scalar = op.trace().re / (d.pow(n as u32) as f64);
    for (subset, tensor) in out.tensors.iter_mut() {
        let m = subset.len();
        let norm = 2f64.powi(m as i32) * (d as f64).powi((n - m) as i32);
        for (flat, slot) in tensor.iter_mut().enumerate() {
            let ks = multi_index(flat, m, nl);
            let mut acc = c(0.0, 0.0);
            for_each_entry(local, n, subset, &ks, |r, col, v| acc += op[(col, r)] * v);
            *slot = acc.re / norm;
        }
    }
    out
}

pub fn multipartite_reconstruct(coeffs: &CompositeCoefficients) -> Result<CMat> {
    let total = check_dims(coeffs.d, coeffs.n, DEFAULT_COMPOSITE_CAP)?;
    let local = gen_gellmann_basis(coeffs.d)?;
    reconstruct_with(coeffs, total, &local)
}

fn reconstruct_with(coeffs: &CompositeCoefficients, total: usize, local: &BasisSet) -> Result<CMat> {
    let nl = local.len();
    let mut m = identity(total) * c(coeffs.scalar, 0.0);
    for s in party_subsets(coeffs.n) {
        let tensor = coeffs
            .tensors
            .get(&s)
            .ok_or_else(|| Error::InvalidInput(format!("missing coefficient tensor for parties {s:?}")))?;
        let want = nl.pow(s.len() as u32);
        if tensor.len() != want {
            return Err(Error::Shape { expected: want, got: tensor.len() });
        }
        for (flat, &x) in tensor.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let ks = multi_index(flat, s.len(), nl);
            for_each_entry(local, coeffs.n, &s, &ks, |r, col, v| m[(r, col)] += v * x);
        }
    }
    Ok(m)
}

fn check_pair(a: &CompositeCoefficients, b: &CompositeCoefficients) -> Result<()> {
    if a.d != b.d || a.n != b.n {
        return Err(Error::InvalidInput(format!("state is (d, n) = ({}, {}) but Hamiltonian is ({}, {})", a.d, a.n, b.d, b.n)));
    }
    Ok(())
}

/// Coefficient derivatives of −i[H, ρ] by reconstruct, commute, decompose.
pub fn multipartite_bloch_rhs(coeffs: &CompositeCoefficients, hcoeffs: &CompositeCoefficients) -> Result<CompositeCoefficients> {
    check_pair(coeffs, hcoeffs)?;
    let total = check_dims(coeffs.d, coeffs.n, DEFAULT_COMPOSITE_CAP)?;
    let local = gen_gellmann_basis(coeffs.d)?;
    let rho = reconstruct_with(coeffs, total, &local)?;
    let h = reconstruct_with(hcoeffs, total, &local)?;
    let rhodot = commutator(&h, &rho) * c(0.0, -1.0);
    let mut out = decompose_with(&rhodot, coeffs.d, coeffs.n, &local);
    out.scalar = 0.0;
    Ok(out)
}

/// Bipartite coefficient derivatives from the hand expansion.
///
/// With ρ = ρ_0 + r_j λ_j⊗1 + s_k 1⊗λ_k + t_jk λ_j⊗λ_k and H likewise
/// (a_j, b_k, c_jk):
///
/// ṙ_l = 2 f_ijl a_i r_j + (4/d) f_ijl c_ik t_jk
/// ṡ_l = 2 f_ijl b_i s_j + (4/d) f_kml c_ik t_im
/// ṫ_lp = 2 f_ijl a_i t_jp + 2 f_ijp b_i t_lj + 2 f_ijl c_ip r_j + 2 f_ijp c_li s_j
///        + 2 (f_ijl g_kmp + g_ijl f_kmp) c_ik t_jm
pub fn bipartite_bloch_rhs(coeffs: &CompositeCoefficients, hcoeffs: &CompositeCoefficients) -> Result<CompositeCoefficients> {
    check_pair(coeffs, hcoeffs)?;
    if coeffs.n != 2 {
        return Err(Error::InvalidInput(format!("bipartite equations need n = 2, got {}", coeffs.n)));
    }
    let d = coeffs.d;
    let basis = gen_gellmann_basis(d)?;
    let nl = basis.len();
    let (r, s, t) = (coeffs.tensor(&[0]), coeffs.tensor(&[1]), coeffs.tensor(&[0, 1]));
    let (a, b, cc) = (hcoeffs.tensor(&[0]), hcoeffs.tensor(&[1]), hcoeffs.tensor(&[0, 1]));
    let at = |x: &[f64], i: usize, j: usize| x[i * nl + j];
    let mut out = CompositeCoefficients::zeros(d, 2);
    let mut rd = vec![0.0; nl];
    let mut sd = vec![0.0; nl];
    let mut td = vec![0.0; nl * nl];
    let dd = d as f64;
    for &(i, j, l, f) in basis.f.entries() {
        rd[l] += 2.0 * f * a[i] * r[j];
        sd[l] += 2.0 * f * b[i] * s[j];
        for k in 0..nl {
            rd[l] += 4.0 / dd * f * at(cc, i, k) * at(t, j, k);
            sd[l] += 4.0 / dd * f * at(cc, k, i) * at(t, k, j);
            // party-1 rotation of t, and coupling acting on r
            td[l * nl + k] += 2.0 * f * (a[i] * at(t, j, k) + at(cc, i, k) * r[j]);
            // party-2 rotation of t, and coupling acting on s
            td[k * nl + l] += 2.0 * f * (b[i] * at(t, k, j) + at(cc, k, i) * s[j]);
        }
    }
    for &(i, j, l, f) in basis.f.entries() {
        for &(k, m, p, g) in basis.g.entries() {
            let w = 2.0 * f * g;
            td[l * nl + p] += w * at(cc, i, k) * at(t, j, m);
            // the g ⊗ f half, with the roles of the two entries swapped
            td[p * nl + l] += w * at(cc, k, i) * at(t, m, j);
        }
    }
    *out.tensor_mut(&[0]) = rd;
    *out.tensor_mut(&[1]) = sd;
    *out.tensor_mut(&[0, 1]) = td;
    Ok(out)
}

/// H = J Σ σ_k⊗σ_k + (B/2)(1⊗σ_3 + σ_3⊗1) and its coefficients.
pub fn heisenberg_dimer(j: f64, b: f64) -> Result<(CMat, CompositeCoefficients)> {
    let basis = gen_gellmann_basis(2)?;
    let id = identity(2);
    let mut h = CMat::zeros(4, 4);
    for s in &basis.elements {
        h += kron(s, s) * c(j, 0.0);
    }
    let s3 = &basis.elements[2];
    h += (kron(&id, s3) + kron(s3, &id)) * c(b / 2.0, 0.0);
    let coeffs = multipartite_decompose(&h, 2, 2)?;
    Ok((h, coeffs))
}

/// Two-qubit Fano form ρ = ¼ 1⊗1 + r_j σ_j⊗1 + s_k 1⊗σ_k + t_jk σ_j⊗σ_k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimerState {
    pub r: [f64; 3],
    pub s: [f64; 3],
    pub t: [[f64; 3]; 3],
}

impl DimerState {
    pub fn from_coefficients(cf: &CompositeCoefficients) -> Result<Self> {
        if cf.d != 2 || cf.n != 2 {
            return Err(Error::InvalidInput("dimer state needs d = 2, n = 2".into()));
        }
        let (r, s, t) = (cf.tensor(&[0]), cf.tensor(&[1]), cf.tensor(&[0, 1]));
        let mut out = DimerState { r: [r[0], r[1], r[2]], s: [s[0], s[1], s[2]], t: [[0.0; 3]; 3] };
        for j in 0..3 {
            for k in 0..3 {
                out.t[j][k] = t[j * 3 + k];
            }
        }
        Ok(out)
    }

    pub fn to_coefficients(&self) -> CompositeCoefficients {
        let mut cf = CompositeCoefficients::zeros(2, 2);
        cf.scalar = 0.25;
        *cf.tensor_mut(&[0]) = self.r.to_vec();
        *cf.tensor_mut(&[1]) = self.s.to_vec();
        *cf.tensor_mut(&[0, 1]) = self.t.iter().flatten().copied().collect();
        cf
    }

    pub fn from_density(rho: &CMat) -> Result<Self> {
        Self::from_coefficients(&multipartite_decompose(rho, 2, 2)?)
    }

    pub fn to_density(&self) -> Result<CMat> {
        multipartite_reconstruct(&self.to_coefficients())
    }

    pub fn as_vec(&self) -> Vec<f64> {
        let mut v = self.r.to_vec();
        v.extend_from_slice(&self.s);
        v.extend(self.t.iter().flatten());
        v
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.as_vec().iter().zip(other.as_vec()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

fn eps(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Dimer equations of motion in Fano components.
///
/// ṙ_j = B ε_3mj r_m + 2J ε_nmj t_mn
/// ṡ_k = B ε_3mk s_m + 2J ε_mnk t_mn
/// ṫ_jk = 2J (ε_kmj r_m + ε_jmk s_m) + B (ε_3mj t_mk + ε_3mk t_jm)
pub fn dimer_rhs(st: &DimerState, j: f64, b: f64) -> DimerState {
    let mut out = DimerState { r: [0.0; 3], s: [0.0; 3], t: [[0.0; 3]; 3] };
    for x in 0..3 {
        for m in 0..3 {
            out.r[x] += b * eps(2, m, x) * st.r[m];
            out.s[x] += b * eps(2, m, x) * st.s[m];
            for n in 0..3 {
                out.r[x] += 2.0 * j * eps(n, m, x) * st.t[m][n];
                out.s[x] += 2.0 * j * eps(m, n, x) * st.t[m][n];
            }
        }
    }
    for x in 0..3 {
        for y in 0..3 {
            let mut v = 0.0;
            for m in 0..3 {
                v += 2.0 * j * (eps(y, m, x) * st.r[m] + eps(x, m, y) * st.s[m]);
                v += b * (eps(2, m, x) * st.t[m][y] + eps(2, m, y) * st.t[x][m]);
            }
            out.t[x][y] = v;
        }
    }
    out
}

/// Fano components along the exact dimer flow, from the spectral propagator
/// with observables σ_j⊗1, 1⊗σ_k and σ_j⊗σ_k.
pub fn dimer_spectral_solution(rho0: &CMat, j: f64, b: f64, times: &[f64]) -> Result<Vec<DimerState>> {
    check_density(rho0, 1e-10)?;
    let (h, _) = heisenberg_dimer(j, b)?;
    let sp = SpectralPropagator::new(&h, rho0)?;
    let basis = gen_gellmann_basis(2)?;
    let id = identity(2);
    let obs_r: Vec<CMat> = basis.elements.iter().map(|s| kron(s, &id)).collect();
    let obs_s: Vec<CMat> = basis.elements.iter().map(|s| kron(&id, s)).collect();
    times
        .iter()
        .map(|&t| {
            let rho = sp.density_at(t);
            let ev = |o: &CMat| (&rho * o).trace().re / 4.0;
            let mut st = DimerState { r: [0.0; 3], s: [0.0; 3], t: [[0.0; 3]; 3] };
            for x in 0..3 {
                st.r[x] = ev(&obs_r[x]);
                st.s[x] = ev(&obs_s[x]);
                for y in 0..3 {
                    st.t[x][y] = ev(&kron(&basis.elements[x], &basis.elements[y]));
                }
            }
            Ok(st)
        })
        .collect()
}

/// Hermitian, unit trace and PSD within `tol`.
pub fn check_density(rho: &CMat, tol: f64) -> Result<()> {
    ensure_hermitian(rho, tol)?;
    let tr = rho.trace();
    if (tr - c(1.0, 0.0)).norm() > tol {
        return Err(Error::InvalidInput(format!("density matrix trace {} ≠ 1", tr.re)));
    }
    let (ev, _) = eigh(rho);
    if ev[0] < -tol {
        return Err(Error::InvalidInput(format!("density matrix has negative eigenvalue {}", ev[0])));
    }
    Ok(())
}

/// Minimum eigenvalue of the partial transpose on `party` (0 or 1).
pub fn ppt_check(rho: &CMat, dims: (usize, usize), party: usize) -> Result<f64> {
    let (da, db) = dims;
    if rho.nrows() != da * db || rho.ncols() != da * db {
        return Err(Error::Shape { expected: da * db, got: rho.nrows() });
    }
    if party > 1 {
        return Err(Error::InvalidInput(format!("party must be 0 or 1, got {party}")));
    }
    ensure_hermitian(rho, 1e-10)?;
    Ok(eigh(&partial_transpose(rho, da, db, party)).0[0])
}

/// NPT threshold for [`ppt_check`].
pub const NPT_TOL: f64 = 1e-10;

/// One convex term of a separable state: weight and one local Bloch vector per party.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTerm {
    pub weight: f64,
    pub factors: Vec<Vec<f64>>,
}

/// Coefficients of Σ_ν w_ν ⊗_p ρ_p^ν with ρ_p = 1/d + Σ_k v_k λ_k.
///
/// Subset tensors are Σ_ν w_ν d^{−(n−m)} Π_{p∈S} v^{(p)}_{k_p}.
pub fn separable_product_build(d: usize, terms: &[ProductTerm]) -> Result<CompositeCoefficients> {
    let n = terms.first().map(|t| t.factors.len()).ok_or_else(|| Error::InvalidInput("no product terms".into()))?;
    check_dims(d, n, DEFAULT_COMPOSITE_CAP)?;
    let basis = gen_gellmann_basis(d)?;
    let nl = basis.len();
    let wsum: f64 = terms.iter().map(|t| t.weight).sum();
    if terms.iter().any(|t| t.weight < 0.0) || (wsum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput("weights must be non-negative and sum to 1".into()));
    }
    for (nu, t) in terms.iter().enumerate() {
        if t.factors.len() != n {
            return Err(Error::Shape { expected: n, got: t.factors.len() });
        }
        for v in &t.factors {
            if v.len() != nl {
                return Err(Error::Shape { expected: nl, got: v.len() });
            }
            let st = crate::algebra::BlochState::density(d, v);
            let rho = crate::algebra::bloch_reconstruct(&st, &basis)?;
            check_density(&rho, 1e-10).map_err(|e| Error::InvalidInput(format!("term {nu}: invalid local state ({e})")))?;
        }
    }
    let mut out = CompositeCoefficients::zeros(d, n);
    out.scalar = 1.0 / (d.pow(n as u32) as f64);
    for (subset, tensor) in out.tensors.iter_mut() {
        let m = subset.len();
        let pre = (d as f64).powi(-((n - m) as i32));
        for (flat, slot) in tensor.iter_mut().enumerate() {
            let ks = multi_index(flat, m, nl);
            *slot = terms
                .iter()
                .map(|t| t.weight * pre * subset.iter().zip(&ks).map(|(&p, &k)| t.factors[p][k]).product::<f64>())
                .sum();
        }
    }
    Ok(out)
}

/// Givens cascade amplitudes for angles θ_1..θ_{M−1}:
/// β_0 = Π cos θ_m, β_p = sin θ_p Π_{m>p} cos θ_m.
pub fn givens_amplitudes(angles: &[f64]) -> Vec<f64> {
    (0..=angles.len())
        .map(|p| {
            let tail: f64 = angles[p..].iter().map(|a| a.cos()).product();
            if p == 0 {
                tail
            } else {
                angles[p - 1].sin() * tail
            }
        })
        .collect()
}

/// Oscillating entangled pure state on n parties of dimension d.
///
/// One frequency ω: cos ωt|k…k⟩ + sin ωt|d−1…d−1⟩ (k ≠ d−1).
/// d − 1 frequencies (d > 2): cos ω_0 t|k…k⟩ + sin ω_0 t Σ_{j≠k} β_j|j…j⟩ with
/// β the Givens cascade over the angles ω_1 t … ω_{d−2} t, states j ≠ k ascending.
pub fn oscillating_state(d: usize, n: usize, omegas: &[f64], k_ref: usize, t: f64) -> Result<CVec> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least two parties, got {n}")));
    }
    let total = check_dims(d, n, DEFAULT_COMPOSITE_CAP)?;
    if k_ref >= d {
        return Err(Error::InvalidInput(format!("reference level {k_ref} out of range 0..{d}")));
    }
    let diag = |j: usize| (0..n).fold(0, |acc, _| acc * d + j);
    let mut psi = CVec::zeros(total);
    let w0 = *omegas.first().ok_or_else(|| Error::InvalidInput("need at least one frequency".into()))?;
    psi[diag(k_ref)] = c((w0 * t).cos(), 0.0);
    if omegas.len() == 1 && (d == 2 || k_ref != d - 1) {
        let target = if k_ref == d - 1 { 0 } else { d - 1 };
        psi[diag(target)] = c((w0 * t).sin(), 0.0);
    } else if omegas.len() == d - 1 {
        let angles: Vec<f64> = omegas[1..].iter().map(|w| w * t).collect();
        let betas = givens_amplitudes(&angles);
        let others = (0..d).filter(|&j| j != k_ref);
        for (j, beta) in others.zip(betas) {
            psi[diag(j)] = c((w0 * t).sin() * beta, 0.0);
        }
    } else {
        return Err(Error::InvalidInput(format!("expected 1 or {} frequencies, got {}", d - 1, omegas.len())));
    }
    Ok(psi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementMeasures {
    /// Two-qubit concurrence; `None` unless d_A = d_B = 2.
    pub concurrence: Option<f64>,
    /// Base-2 entropy of the squared Schmidt coefficients.
    pub entropy: f64,
    pub schmidt: Vec<f64>,
}

pub fn entanglement_measures(psi: &CVec, dims: (usize, usize)) -> Result<EntanglementMeasures> {
    let (da, db) = dims;
    if psi.len() != da * db {
        return Err(Error::Shape { expected: da * db, got: psi.len() });
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("state norm {norm} ≠ 1")));
    }
    let m = CMat::from_fn(da, db, |i, j| psi[i * db + j]);
    let schmidt: Vec<f64> = m.singular_values().iter().copied().collect();
    let entropy = schmidt
        .iter()
        .map(|s| s * s)
        .filter(|p| *p > 1e-300)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0);
    let concurrence = (da == 2 && db == 2).then(|| 2.0 * (psi[0] * psi[3] - psi[1] * psi[2]).norm());
    Ok(EntanglementMeasures { concurrence, entropy, schmidt })
}

/// Wootters concurrence of a two-qubit density matrix.
pub fn concurrence_density(rho: &CMat) -> Result<f64> {
    if rho.nrows() != 4 || rho.ncols() != 4 {
        return Err(Error::Shape { expected: 4, got: rho.nrows() });
    }
    ensure_hermitian(rho, 1e-10)?;
    let sy = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
    let yy = kron(&sy, &sy);
    let tilde = &yy * rho.conjugate() * &yy;
    let (ev, v) = eigh(rho);
    // Eigenvalues at rounding level are zero; their square roots would not be.
    let floor = 8.0 * f64::EPSILON * ev.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let sqrt_rho = &v * CMat::from_diagonal(&DVector::from_iterator(4, ev.iter().map(|e| c(root_above(*e, floor), 0.0)))) * v.adjoint();
    let r = &sqrt_rho * tilde * &sqrt_rho;
    let r = (&r + r.adjoint()) * c(0.5, 0.0);
    let (mut lam, _) = eigh(&r);
    let floor = 8.0 * f64::EPSILON * lam.iter().fold(0.0f64, |m, e| m.max(e.abs())).max(floor * floor);
    lam.iter_mut().for_each(|x| *x = root_above(*x, floor));
    lam.sort_by(|a, b| b.total_cmp(a));
    Ok((lam[0] - lam[1] - lam[2] - lam[3]).max(0.0))
}

fn root_above(x: f64, floor: f64) -> f64 {
    if x > floor {
        x.sqrt()
    } else {
        0.0
    }
}

/// Reduced density matrix of one party of a pure state on (C^d)^⊗n.
pub fn reduced_density(psi: &CVec, d: usize, n: usize, party: usize) -> Result<CMat> {
    let total = check_dims(d, n, usize::MAX)?;
    if psi.len() != total {
        return Err(Error::Shape { expected: total, got: psi.len() });
    }
    if party >= n {
        return Err(Error::InvalidInput(format!("party {party} out of range 0..{n}")));
    }
    let stride = d.pow((n - 1 - party) as u32);
    let mut out = CMat::zeros(d, d);
    for a in 0..total {
        let ia = (a / stride) % d;
        let rest = a - ia * stride;
        for ib in 0..d {
            let b = rest + ib * stride;
            out[(ia, ib)] += psi[a] * psi[b].conj();
        }
    }
    Ok(out)
}

pub fn purity(rho: &CMat) -> f64 {
    (rho * rho).trace().re
}

/// Decomposition of the constant-generator example H = ω(|00⟩⟨11| + |11⟩⟨00|)
/// in the SU(4) basis, plus the angular vector ℓ along its flow from |00⟩.
#[derive(Debug, Clone)]
pub struct ConstantHamiltonianReport {
    pub ordering: Ordering,
    /// 1-based indices and values of the nonzero Hamiltonian coefficients.
    pub h_nonzero: Vec<(usize, f64)>,
    /// 1-based indices and values of the nonzero ℓ components at t = 0.
    pub ell_nonzero: Vec<(usize, f64)>,
    /// max_t |ℓ(t) − ℓ(0)| over the sample times.
    pub ell_drift: f64,
}

pub fn verify_constant_hamiltonian_bloch(omega: f64, ordering: Ordering, times: &[f64]) -> Result<ConstantHamiltonianReport> {
    let basis = gen_gellmann_basis_with(4, ordering, DEFAULT_BASIS_CAP)?;
    let mut h = CMat::zeros(4, 4);
    h[(0, 3)] = c(omega, 0.0);
    h[(3, 0)] = c(omega, 0.0);
    let hs = bloch_decompose(&h, &basis)?;
    let nz = |v: &[f64]| -> Vec<(usize, f64)> {
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
        v.iter().enumerate().filter(|(_, x)| x.abs() > 1e-12 * scale).map(|(i, x)| (i + 1, *x)).collect()
    };
    let h_nonzero = nz(hs.vec.as_slice());
    let mut rho0 = CMat::zeros(4, 4);
    rho0[(0, 0)] = c(1.0, 0.0);
    let sp = SpectralPropagator::new(&h, &rho0)?;
    let mut ells = Vec::with_capacity(times.len().max(1));
    for &t in times.iter().chain(std::iter::once(&0.0)).take(times.len().max(1)) {
        let rho = sp.density_at(t);
        let rhodot = commutator(&h, &rho) * c(0.0, -1.0);
        let st = bloch_decompose(&rho, &basis)?;
        let sd = crate::algebra::decompose_unchecked(&rhodot, &basis);
        ells.push(angular_bloch_vector(&st, &sd.vec, &basis)?);
    }
    let ell0 = ells[0].clone();
    let ell_drift = ells.iter().fold(0.0f64, |m, e| m.max((e - &ell0).amax()));
    Ok(ConstantHamiltonianReport { ordering, h_nonzero, ell_nonzero: nz(ell0.as_slice()), ell_drift })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMat {
        let a = CMat::from_fn(dim, dim, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        (&a + a.adjoint()) * c(0.5, 0.0)
    }

    fn random_density(dim: usize, rng: &mut ChaCha8Rng) -> CMat {
        let a = CMat::from_fn(dim, dim, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let r = &a * a.adjoint();
        let tr = r.trace();
        r / tr
    }

    fn bell() -> CMat {
        let s = 0.5f64.sqrt();
        let psi = CVec::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        &psi * psi.adjoint()
    }

    #[test]
    fn product_basis_counts() {
        assert_eq!(product_basis(2, 1).unwrap().len(), 3);
        let pb = product_basis(2, 2).unwrap();
        assert_eq!(pb.len(), 15);
        let pb = product_basis(2, 3).unwrap();
        let count = |m: usize| pb.labels.iter().filter(|l| l.subset.len() == m).count();
        assert_eq!((count(1), count(2), count(3)), (9, 27, 27));
        assert!(matches!(product_basis(3, 4), Err(Error::CapExceeded { .. })));
        for a in [0, 5, 20, 50] {
            for b in [0, 5, 20, 50] {
                let tr = (pb.element(a) * pb.element(b)).trace().re;
                let want = if a == b { pb.norm_sq(a) } else { 0.0 };
                assert!((tr - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bell_and_product_coefficients() {
        let cf = multipartite_decompose(&bell(), 2, 2).unwrap();
        assert!((cf.scalar - 0.25).abs() < 1e-15);
        assert!(cf.tensor(&[0]).iter().chain(cf.tensor(&[1])).all(|x| x.abs() < 1e-15));
        let t = cf.tensor(&[0, 1]);
        let want = [0.25, 0.0, 0.0, 0.0, -0.25, 0.0, 0.0, 0.0, 0.25];
        for (a, b) in t.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pa = random_density(2, &mut rng);
        let pbm = random_density(2, &mut rng);
        let cf = multipartite_decompose(&kron(&pa, &pbm), 2, 2).unwrap();
        let (r, s, t) = (cf.tensor(&[0]), cf.tensor(&[1]), cf.tensor(&[0, 1]));
        for j in 0..3 {
            for k in 0..3 {
                assert!((t[j * 3 + k] - 4.0 * r[j] * s[k]).abs() < 1e-14);
            }
        }
        let mixed = identity(8) * c(0.125, 0.0);
        let cf = multipartite_decompose(&mixed, 2, 3).unwrap();
        assert!(cf.tensors.values().flatten().all(|x| *x == 0.0));
        assert_eq!(cf.tensors.len(), 7);
    }

    #[test]
    fn reconstruct_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (d, n) in [(2usize, 2usize), (3, 2), (2, 3)] {
            let rho = random_density(d.pow(n as u32), &mut rng);
            let cf = multipartite_decompose(&rho, d, n).unwrap();
            let back = multipartite_reconstruct(&cf).unwrap();
            assert!(crate::linalg::max_abs(&(back - &rho)) < 1e-12);
        }
    }

    #[test]
    fn bipartite_dual_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [2, 3] {
            for _ in 0..10 {
                let rho = multipartite_decompose(&random_density(d * d, &mut rng), d, 2).unwrap();
                let h = multipartite_decompose(&random_hermitian(d * d, &mut rng), d, 2).unwrap();
                let a = bipartite_bloch_rhs(&rho, &h).unwrap();
                let b = multipartite_bloch_rhs(&rho, &h).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-12, "d = {d}: {}", a.max_abs_diff(&b));
            }
        }
    }

    #[test]
    fn local_field_leaves_other_party_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = kron(&random_density(2, &mut rng), &random_density(2, &mut rng));
        let h = kron(&random_hermitian(2, &mut rng), &identity(2));
        let d = bipartite_bloch_rhs(&multipartite_decompose(&rho, 2, 2).unwrap(), &multipartite_decompose(&h, 2, 2).unwrap()).unwrap();
        assert!(d.tensor(&[1]).iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn dimer_spectrum_and_coefficients() {
        let (h, cf) = heisenberg_dimer(0.7, 0.0).unwrap();
        let ev = eigh(&h).0;
        for (a, b) in ev.iter().zip([-2.1, 0.7, 0.7, 0.7]) {
            assert!((a - b).abs() < 1e-12);
        }
        let (h, _) = heisenberg_dimer(0.0, 0.4).unwrap();
        for (a, b) in eigh(&h).0.iter().zip([-0.4, 0.0, 0.0, 0.4]) {
            assert!((a - b).abs() < 1e-12);
        }
        let (_, cf2) = heisenberg_dimer(0.7, 0.4).unwrap();
        assert!((cf2.tensor(&[0])[2] - 0.2).abs() < 1e-15 && (cf2.tensor(&[1])[2] - 0.2).abs() < 1e-15);
        let t = cf.tensor(&[0, 1]);
        assert!((t[0] - 0.7).abs() < 1e-15 && (t[4] - 0.7).abs() < 1e-15 && (t[8] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn dimer_rhs_matches_generic_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (_, hc) = heisenberg_dimer(0.8, 0.3).unwrap();
        let rho = multipartite_decompose(&random_density(4, &mut rng), 2, 2).unwrap();
        let generic = DimerState::from_coefficients(&multipartite_bloch_rhs(&rho, &hc).unwrap()).unwrap();
        let hand = dimer_rhs(&DimerState::from_coefficients(&rho).unwrap(), 0.8, 0.3);
        assert!(hand.max_abs_diff(&generic) < 1e-14);
    }

    #[test]
    fn dimer_exchange_symmetry() {
        let mut rho0 = CMat::zeros(4, 4);
        rho0[(0, 0)] = c(1.0, 0.0);
        let sol = dimer_spectral_solution(&rho0, 1.0, 0.0, &[0.0, 0.3, 1.1]).unwrap();
        for st in &sol {
            assert!((st.r[2] - st.s[2]).abs() < 1e-14);
        }
        let mixed = identity(4) * c(0.25, 0.0);
        let sol = dimer_spectral_solution(&mixed, 1.0, 0.5, &[0.0, 2.0]).unwrap();
        assert!(sol.iter().all(|s| s.as_vec().iter().all(|x| x.abs() < 1e-15)));
    }

    #[test]
    fn ppt_examples() {
        assert!((ppt_check(&bell(), (2, 2), 0).unwrap() + 0.5).abs() < 1e-14);
        let werner = |p: f64| bell() * c(p, 0.0) + identity(4) * c((1.0 - p) / 4.0, 0.0);
        // λ_min of the partial transpose is (1 − 3p)/4
        for p in [0.2, 1.0 / 3.0, 0.5] {
            assert!((ppt_check(&werner(p), (2, 2), 1).unwrap() - (1.0 - 3.0 * p) / 4.0).abs() < 1e-14);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let prod = kron(&random_density(2, &mut rng), &random_density(3, &mut rng));
        assert!(ppt_check(&prod, (2, 3), 0).unwrap() >= -1e-14);
    }

    #[test]
    fn separable_build_is_ppt() {
        let terms = vec![
            ProductTerm { weight: 0.6, factors: vec![vec![0.0, 0.0, 0.5], vec![0.5, 0.0, 0.0]] },
            ProductTerm { weight: 0.4, factors: vec![vec![0.0, 0.5, 0.0], vec![0.0, 0.0, -0.5]] },
        ];
        let cf = separable_product_build(2, &terms).unwrap();
        let rho = multipartite_reconstruct(&cf).unwrap();
        check_density(&rho, 1e-12).unwrap();
        assert!(ppt_check(&rho, (2, 2), 0).unwrap() >= -NPT_TOL);
        let bad = vec![ProductTerm { weight: 1.0, factors: vec![vec![0.0, 0.0, 0.9], vec![0.0; 3]] }];
        assert!(separable_product_build(2, &bad).is_err());
    }

    #[test]
    fn oscillating_states() {
        let psi = oscillating_state(2, 2, &[1.0], 0, std::f64::consts::FRAC_PI_4).unwrap();
        let m = entanglement_measures(&psi, (2, 2)).unwrap();
        assert!((m.concurrence.unwrap() - 1.0).abs() < 1e-15 && (m.entropy - 1.0).abs() < 1e-12);
        let psi = oscillating_state(2, 2, &[1.0], 0, 0.0).unwrap();
        let m = entanglement_measures(&psi, (2, 2)).unwrap();
        assert_eq!((m.concurrence.unwrap(), m.entropy), (0.0, 0.0));
        for t in [0.3, 1.7, 4.2] {
            let psi = oscillating_state(2, 2, &[1.3], 0, t).unwrap();
            let m = entanglement_measures(&psi, (2, 2)).unwrap();
            assert!((m.concurrence.unwrap() - (2.6 * t).sin().abs()).abs() < 1e-14);
        }
        let psi = oscillating_state(3, 2, &[1.0], 0, 0.4).unwrap();
        assert!((psi[8].re - 0.4f64.sin()).abs() < 1e-15);
        for t in [0.0, 0.9, 2.3] {
            let psi = oscillating_state(3, 3, &[1.0, 0.7], 1, t).unwrap();
            assert!((psi.norm() - 1.0).abs() < 1e-12);
        }
        assert!(oscillating_state(3, 2, &[1.0], 5, 0.0).is_err());
    }

    #[test]
    fn separability_times_restore_purity() {
        for (d, n) in [(2, 3), (3, 2)] {
            let omegas = vec![1.0; d - 1];
            for k in 0..4 {
                let t = k as f64 * std::f64::consts::FRAC_PI_2;
                let psi = oscillating_state(d, n, &omegas, 0, t).unwrap();
                for p in 0..n {
                    let r = reduced_density(&psi, d, n, p).unwrap();
                    assert!((purity(&r) - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn wootters_matches_pure_formula() {
        for t in [0.1, 0.8, 2.0] {
            let psi = oscillating_state(2, 2, &[1.0], 0, t).unwrap();
            let rho = &psi * psi.adjoint();
            let c1 = concurrence_density(&rho).unwrap();
            assert!((c1 - (2.0 * t).sin().abs()).abs() < 1e-7, "{c1}");
        }
    }

    #[test]
    fn constant_hamiltonian_single_component() {
        let rep = verify_constant_hamiltonian_bloch(0.9, Ordering::Standard, &[0.0, 0.5, 1.3]).unwrap();
        assert_eq!(rep.h_nonzero.len(), 1);
        assert_eq!(rep.h_nonzero[0].0, 9);
        assert!((rep.h_nonzero[0].1 - 0.9).abs() < 1e-15);
        assert!(rep.ell_drift < 1e-12);
    }
}
