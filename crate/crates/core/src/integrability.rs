//! Numerical integrability checks: Lax pairs, Uhlenbeck integrals for the
//! Neumann model, Gaudin residues, and operator-valued constants of motion.

use nalgebra::DVector;

use crate::algebra::{bloch_decompose, bloch_reconstruct, BasisSet};
use crate::dynamics::{relative_drift, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{c, commutator, ensure_hermitian, trace, CMat, RMat, RVec};
use crate::ode::{integrate, OdeOptions};

/// Default probe values of the spectral parameter.
pub const DEFAULT_LAMBDAS: [f64; 3] = [0.5, 1.0, 2.0];

/// X_ij = Σ_k ε_ijk v_k.
pub fn levi_civita_matrix(v: &[f64]) -> RMat {
    RMat::from_row_slice(3, 3, &[0.0, v[2], -v[1], -v[2], 0.0, v[0], v[1], -v[0], 0.0])
}

/// Diagonal D with I_i = D_j + D_k for (i, j, k) cyclic, i.e. D_i = ½(I_j + I_k − I_i).
///
/// With J = DΩ + ΩD (equivalently J_ij = Σ ε_ijk ℓ_k, ℓ = Iω) the λ-free part of
/// L̇ − [M, L] cancels identically.
pub fn lax_inertia_diagonal(moments: [f64; 3]) -> RMat {
    let [a, b, cc] = moments;
    RMat::from_diagonal(&RVec::from_vec(vec![0.5 * (b + cc - a), 0.5 * (a + cc - b), 0.5 * (a + b - cc)]))
}

/// L(λ) = I² + J/λ, M(λ) = Ω + λI for the Euler top.
#[derive(Debug, Clone)]
pub struct LaxPair {
    pub inertia: RMat,
    pub j: RMat,
    pub omega: RMat,
    pub lambda_samples: Vec<f64>,
}

impl LaxPair {
    pub fn l(&self, lambda: f64) -> Result<RMat> {
        check_lambda(lambda)?;
        Ok(&self.inertia * &self.inertia + &self.j / lambda)
    }

    pub fn m(&self, lambda: f64) -> Result<RMat> {
        check_lambda(lambda)?;
        Ok(&self.omega + &self.inertia * lambda)
    }

    /// Coefficients (c0, c1, c2) of tr L(λ)² = c0 + c1/λ + c2/λ²; ℓ² = −c2/2.
    pub fn trace_l2_coefficients(&self) -> [f64; 3] {
        let i2 = &self.inertia * &self.inertia;
        [(&i2 * &i2).trace(), 2.0 * (&i2 * &self.j).trace(), (&self.j * &self.j).trace()]
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("spectral parameter λ = {lambda} must be finite and nonzero")));
    }
    Ok(())
}

fn is_antisymmetric(a: &RMat) -> bool {
    a.is_square() && (a + a.transpose()).amax() <= 1e-12 * a.amax().max(1.0)
}

pub fn lax_pair_euler(j_mat: &RMat, inertia: &RMat, omega: &RMat) -> Result<LaxPair> {
    let n = j_mat.nrows();
    if inertia.shape() != (n, n) || omega.shape() != (n, n) {
        return Err(Error::Shape { expected: n, got: inertia.nrows() });
    }
    if !is_antisymmetric(j_mat) || !is_antisymmetric(omega) {
        return Err(Error::InvalidInput("J and Ω must be antisymmetric".into()));
    }
    Ok(LaxPair { inertia: inertia.clone(), j: j_mat.clone(), omega: omega.clone(), lambda_samples: DEFAULT_LAMBDAS.to_vec() })
}

/// Lax pair of a qubit Euler state ω with principal moments.
pub fn lax_pair_from_omega(omega: &[f64], moments: [f64; 3]) -> Result<LaxPair> {
    let ell: Vec<f64> = omega.iter().zip(moments.iter()).map(|(w, i)| w * i).collect();
    lax_pair_euler(&levi_civita_matrix(&ell), &lax_inertia_diagonal(moments), &levi_civita_matrix(omega))
}

/// ‖L̇ − [M, L]‖_max at each interior sample (indices 2..len−2) of a uniformly
/// sampled ω trajectory, with L̇ from the five-point central stencil.
pub fn lax_residuals(times: &[f64], omegas: &[Vec<f64>], moments: [f64; 3], lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    if times.len() != omegas.len() || times.len() < 5 {
        return Err(Error::InvalidInput("need at least five samples with matching times".into()));
    }
    let h = times[1] - times[0];
    if !(h > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
        return Err(Error::InvalidInput("Lax residual needs a uniform increasing grid".into()));
    }
    let ls: Vec<RMat> = omegas
        .iter()
        .map(|w| lax_pair_from_omega(w, moments).and_then(|p| p.l(lambda)))
        .collect::<Result<_>>()?;
    (2..times.len() - 2)
        .map(|i| {
            let ldot = (&ls[i - 2] - &ls[i - 1] * 8.0 + &ls[i + 1] * 8.0 - &ls[i + 2]) / (12.0 * h);
            let m = lax_pair_from_omega(&omegas[i], moments)?.m(lambda)?;
            let comm = &m * &ls[i] - &ls[i] * &m;
            Ok((ldot - comm).amax())
        })
        .collect()
}

/// Maximum of [`lax_residuals`].
pub fn lax_residual_series(times: &[f64], omegas: &[Vec<f64>], moments: [f64; 3], lambda: f64) -> Result<f64> {
    Ok(lax_residuals(times, omegas, moments, lambda)?.into_iter().fold(0.0, f64::max))
}

/// Shifted pair L(λ) = −i(𝒞 + K/λ), M = −iK with K a Hamiltonian; the Lax
/// equation holds along the Heisenberg flow 𝒞̇ = −i[K, 𝒞].
#[derive(Debug, Clone)]
pub struct ShiftedLaxPair {
    pub c: CMat,
    pub k: CMat,
}

impl ShiftedLaxPair {
    pub fn l(&self, lambda: f64) -> Result<CMat> {
        check_lambda(lambda)?;
        Ok((&self.c + &self.k / c(lambda, 0.0)) * c(0.0, -1.0))
    }

    pub fn m(&self) -> CMat {
        &self.k * c(0.0, -1.0)
    }
}

/// K = Σ_k (ω_k/2) Λ_k over the diagonal (Cartan) elements only.
pub fn cartan_operator(omega: &[f64], basis: &BasisSet) -> CMat {
    let mut v = vec![0.0; basis.len()];
    for (k, kind) in basis.kinds.iter().enumerate() {
        if matches!(kind, crate::algebra::ElementKind::Diagonal(_)) {
            v[k] = 0.5 * omega[k];
        }
    }
    basis.combine(&v)
}

/// ℓ̇_k = Σ f_kmn ℓ_m ω_n, the coadjoint flow of the quadratic AKS Hamiltonian.
pub fn aks_ell_dot(ell: &[f64], omega: &[f64], basis: &BasisSet) -> RVec {
    let mut out = RVec::zeros(basis.len());
    for &(k, m, n, v) in basis.f.entries() {
        out[k] += v * ell[m] * omega[n];
    }
    out
}

/// Uhlenbeck integrals with their sum and ½ Σ 𝒦_k F_k.
#[derive(Debug, Clone, PartialEq)]
pub struct Uhlenbeck {
    pub f: Vec<f64>,
    pub sum: f64,
    pub hamiltonian: f64,
}

/// F_k = q_k² + Σ_{l≠k} J_kl²/(𝒦_k − 𝒦_l), J_kl = q_k p_l − q_l p_k.
pub fn uhlenbeck_integrals(q: &[f64], p: &[f64], kdiag: &[f64]) -> Result<Uhlenbeck> {
    let n = q.len();
    if p.len() != n || kdiag.len() != n {
        return Err(Error::Shape { expected: n, got: p.len().min(kdiag.len()) });
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if (kdiag[a] - kdiag[b]).abs() <= 1e-10 {
                return Err(Error::Degenerate(a, b));
            }
        }
    }
    let mut f = vec![0.0; n];
    for k in 0..n {
        f[k] = q[k] * q[k];
        for l in 0..n {
            if l != k {
                let jkl = q[k] * p[l] - q[l] * p[k];
                f[k] += jkl * jkl / (kdiag[k] - kdiag[l]);
            }
        }
    }
    let sum = f.iter().sum();
    let hamiltonian = 0.5 * f.iter().zip(kdiag).map(|(a, b)| a * b).sum::<f64>();
    Ok(Uhlenbeck { f, sum, hamiltonian })
}

/// q̈_m = −R²𝒦_m q_m − q_m Σ_l (q̇_l²/R² − 𝒦_l q_l²).
pub fn neumann_rhs(q: &[f64], qdot: &[f64], kdiag: &[f64], radius: f64) -> Result<RVec> {
    let n = q.len();
    if qdot.len() != n || kdiag.len() != n {
        return Err(Error::Shape { expected: n, got: qdot.len().min(kdiag.len()) });
    }
    let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - radius).abs() > 1e-8 {
        return Err(Error::InvalidInput(format!("|q| = {norm} is off the sphere of radius {radius}")));
    }
    let mut out = RVec::zeros(n);
    neumann_into(q, qdot, kdiag, radius, out.as_mut_slice());
    Ok(out)
}

fn neumann_into(q: &[f64], qdot: &[f64], kdiag: &[f64], radius: f64, out: &mut [f64]) {
    let r2 = radius * radius;
    let lag: f64 = (0..q.len()).map(|l| qdot[l] * qdot[l] / r2 - kdiag[l] * q[l] * q[l]).sum();
    for m in 0..q.len() {
        out[m] = -r2 * kdiag[m] * q[m] - q[m] * lag;
    }
}

/// Same force as [`neumann_into`] on the sphere, with the multiplier chosen so
/// that |q|² - R² obeys a damped linear equation off the sphere.
fn constrained_neumann_into(q: &[f64], qdot: &[f64], kdiag: &[f64], radius: f64, out: &mut [f64]) {
    const GAMMA: f64 = 10.0;
    let r2 = radius * radius;
    let q2: f64 = q.iter().map(|x| x * x).sum();
    let p2: f64 = qdot.iter().map(|x| x * x).sum();
    let qp: f64 = q.iter().zip(qdot).map(|(a, b)| a * b).sum();
    let kq2: f64 = q.iter().zip(kdiag).map(|(x, k)| k * x * x).sum();
    let lag = (p2 - r2 * kq2 + 2.0 * GAMMA * qp + 0.5 * GAMMA * GAMMA * (q2 - r2)) / q2;
    for m in 0..q.len() {
        out[m] = -r2 * kdiag[m] * q[m] - q[m] * lag;
    }
}

/// Conserved energy of [`neumann_rhs`]: Σ_{m<n} J_mn²/(2R²) + (R²/2) Σ 𝒦_m q_m².
///
/// On the unit sphere this is ½ Σ_{m<n} J_mn² + ½ Σ 𝒦_m q_m².
pub fn neumann_hamiltonian(q: &[f64], p: &[f64], kdiag: &[f64], radius: f64) -> f64 {
    let r2 = radius * radius;
    let mut kin = 0.0;
    for m in 0..q.len() {
        for n in (m + 1)..q.len() {
            let j = q[m] * p[n] - q[n] * p[m];
            kin += j * j;
        }
    }
    kin / (2.0 * r2) + 0.5 * r2 * q.iter().zip(kdiag).map(|(x, k)| k * x * x).sum::<f64>()
}

/// Integrates the Neumann model; monitors F_k (`uhlenbeck_k`), their sum,
/// the Hamiltonian and |q|.
pub fn integrate_neumann(q0: &[f64], p0: &[f64], kdiag: &[f64], radius: f64, times: &[f64], tol: f64) -> Result<Trajectory> {
    neumann_rhs(q0, p0, kdiag, radius)?;
    let n = q0.len();
    let mut y0 = q0.to_vec();
    y0.extend_from_slice(p0);
    let ys = integrate(
        |_, y, dy| {
            let (q, p) = y.split_at(n);
            dy[..n].copy_from_slice(p);
            constrained_neumann_into(q, p, kdiag, radius, &mut dy[n..]);
        },
        &y0,
        times,
        &OdeOptions::with_tol(tol),
    )?;
    let mut tr = Trajectory { d: 0, times: times.to_vec(), states: Vec::new(), monitors: Vec::new() };
    let mut fs = vec![Vec::new(); n];
    let mut sums = Vec::new();
    let mut ham = Vec::new();
    let mut norms = Vec::new();
    for y in &ys {
        let (q, p) = y.split_at(n);
        let u = uhlenbeck_integrals(q, p, kdiag)?;
        for k in 0..n {
            fs[k].push(u.f[k]);
        }
        sums.push(u.sum);
        ham.push(neumann_hamiltonian(q, p, kdiag, radius));
        norms.push(q.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    tr.states = ys.into_iter().map(|y| crate::algebra::BlochState::new(0.0, DVector::from_vec(y))).collect();
    for (k, f) in fs.into_iter().enumerate() {
        tr.push_monitor(&format!("uhlenbeck_{}", k + 1), f);
    }
    tr.push_monitor("uhlenbeck_sum", sums);
    tr.push_monitor("hamiltonian", ham);
    tr.push_monitor("radius", norms);
    Ok(tr)
}

/// Gaudin residues F_j and ℋ = ½ Σ λ_j F_j.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaudin {
    pub f: Vec<f64>,
    pub hamiltonian: f64,
}

fn gaudin_check(blocks: &[RMat], lambdas: &[f64]) -> Result<()> {
    if blocks.len() != lambdas.len() || blocks.is_empty() {
        return Err(Error::InvalidInput("need one pole per block".into()));
    }
    let n = blocks[0].nrows();
    if blocks.iter().any(|b| b.shape() != (n, n)) {
        return Err(Error::InvalidInput("blocks must be square of equal size".into()));
    }
    for a in 0..lambdas.len() {
        for b in (a + 1)..lambdas.len() {
            if (lambdas[a] - lambdas[b]).abs() <= 1e-12 {
                return Err(Error::Degenerate(a, b));
            }
        }
    }
    Ok(())
}

/// F_j = ½ tr(A_j²) + Σ_{k≠j} tr(A_j A_k)/(λ_j − λ_k) for L(λ) = Σ_j A_j/(λ − λ_j).
///
/// The sum is the residue of ½ tr L(λ)² at λ_j; the first term is its
/// double-pole coefficient, the diagonal term of the single-pole case.
pub fn gaudin_residuals(blocks: &[RMat], lambdas: &[f64]) -> Result<Gaudin> {
    gaudin_check(blocks, lambdas)?;
    let m = blocks.len();
    let mut f = vec![0.0; m];
    for j in 0..m {
        f[j] = 0.5 * (&blocks[j] * &blocks[j]).trace();
        for k in 0..m {
            if k != j {
                f[j] += (&blocks[j] * &blocks[k]).trace() / (lambdas[j] - lambdas[k]);
            }
        }
    }
    let hamiltonian = 0.5 * f.iter().zip(lambdas).map(|(a, b)| a * b).sum::<f64>();
    Ok(Gaudin { f, hamiltonian })
}

/// Lie-Poisson flow Ȧ_k = [∇_{A_k} G, A_k] of G = Σ_j w_j F_j.
pub fn gaudin_flow_rhs(blocks: &[RMat], lambdas: &[f64], weights: &[f64]) -> Result<Vec<RMat>> {
    gaudin_check(blocks, lambdas)?;
    let m = blocks.len();
    if weights.len() != m {
        return Err(Error::Shape { expected: m, got: weights.len() });
    }
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let mut grad = &blocks[k] * weights[k];
        for j in 0..m {
            if j == k {
                continue;
            }
            let inv = 1.0 / (lambdas[j] - lambdas[k]);
            // ∂F_j/∂A_k for j ≠ k, plus the cross part of ∂F_k/∂A_k
            grad += &blocks[j] * (weights[j] * inv - weights[k] * inv);
        }
        out.push(&grad * &blocks[k] - &blocks[k] * &grad);
    }
    Ok(out)
}

/// Integrates [`gaudin_flow_rhs`] and returns F_j on the grid (`gaudin_j` monitors).
pub fn integrate_gaudin(blocks: &[RMat], lambdas: &[f64], weights: &[f64], times: &[f64], tol: f64) -> Result<Trajectory> {
    gaudin_check(blocks, lambdas)?;
    let n = blocks[0].nrows();
    let m = blocks.len();
    let pack = |bs: &[RMat]| bs.iter().flat_map(|b| b.iter().copied().collect::<Vec<_>>()).collect::<Vec<f64>>();
    let unpack = |y: &[f64]| (0..m).map(|k| RMat::from_column_slice(n, n, &y[k * n * n..(k + 1) * n * n])).collect::<Vec<_>>();
    let mut failure = None;
    let ys = integrate(
        |_, y, dy| match gaudin_flow_rhs(&unpack(y), lambdas, weights) {
            Ok(r) => dy.copy_from_slice(&pack(&r)),
            Err(e) => failure = Some(e),
        },
        &pack(blocks),
        times,
        &OdeOptions::with_tol(tol),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let mut series = vec![Vec::new(); m];
    for y in &ys {
        let g = gaudin_residuals(&unpack(y), lambdas)?;
        for j in 0..m {
            series[j].push(g.f[j]);
        }
    }
    let mut tr = Trajectory { d: 0, times: times.to_vec(), states: Vec::new(), monitors: Vec::new() };
    for (j, s) in series.into_iter().enumerate() {
        tr.push_monitor(&format!("gaudin_{}", j + 1), s);
    }
    Ok(tr)
}

/// Named conserved-quantity series with drift per entry.
#[derive(Debug, Clone, Default)]
pub struct FirstIntegralReport {
    pub names: Vec<String>,
    pub values_over_time: Vec<Vec<f64>>,
    pub max_relative_drift: Vec<f64>,
}

impl FirstIntegralReport {
    pub fn push(&mut self, name: &str, values: Vec<f64>) {
        self.max_relative_drift.push(relative_drift(&values));
        self.names.push(name.to_string());
        self.values_over_time.push(values);
    }

    pub fn drift(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.max_relative_drift[i])
    }
}

/// Trace invariants of ℌ^k, 𝒞^k and 𝔈 = ½{𝒞, ℌ}, plus the ω-Casimirs, along a von Neumann trajectory.
pub fn operator_constants_report(h: &CMat, traj: &Trajectory, basis: &BasisSet, kmax: usize) -> Result<FirstIntegralReport> {
    if kmax < 2 {
        return Err(Error::InvalidInput("kmax must be at least 2".into()));
    }
    ensure_hermitian(h, 1e-10)?;
    let hs = bloch_decompose(h, basis)?;
    let frak_h = basis.combine(hs.vec.as_slice());
    let omega: Vec<f64> = hs.vec.iter().map(|x| 2.0 * x).collect();
    let mut report = FirstIntegralReport::default();
    let n = traj.states.len();
    let mut pow = frak_h.clone();
    for k in 1..=kmax {
        let v = trace(&pow).re;
        report.push(&format!("tr_H^{k}"), vec![v; n]);
        pow = &pow * &frak_h;
    }
    let mut c_pows = vec![Vec::with_capacity(n); kmax];
    let mut e1 = Vec::with_capacity(n);
    let mut e2 = Vec::with_capacity(n);
    let mut om1 = Vec::with_capacity(n);
    let mut om2 = Vec::with_capacity(n);
    let (c1, c2) = crate::rigidbody::casimirs(&omega, basis);
    for s in &traj.states {
        let rho = bloch_reconstruct(s, basis)?;
        let rhodot = commutator(h, &rho) * c(0.0, -1.0);
        let cop = crate::rigidbody::angular_operator(&rho, &rhodot);
        let mut p = cop.clone();
        for slot in c_pows.iter_mut() {
            slot.push(trace(&p).re);
            p = &p * &cop;
        }
        let e = (&cop * &frak_h + &frak_h * &cop) * c(0.5, 0.0);
        e1.push(trace(&e).re);
        e2.push(trace(&(&e * &e)).re);
        om1.push(c1);
        om2.push(c2);
    }
    for (k, v) in c_pows.into_iter().enumerate() {
        report.push(&format!("tr_C^{}", k + 1), v);
    }
    report.push("tr_E", e1);
    report.push("tr_E^2", e2);
    report.push("casimir_1", om1);
    report.push("casimir_2", om2);
    Ok(report)
}
