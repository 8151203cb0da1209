//! Euler-Poinsot layer: angular Bloch vector, Bloch inertia tensor,
//! generalized Euler equations and their closed-form solutions.

use nalgebra::{DVector, SymmetricEigen};

use crate::algebra::{BasisSet, BlochState};
use crate::dynamics::Trajectory;
use crate::elliptic::{complete_k, jacobi_elliptic};
use crate::error::{Error, Result};
use crate::linalg::{c, commutator, CMat, RMat, RVec};
use crate::ode::{integrate, integrate_projected, OdeOptions};

/// Principal Bloch moments with the diagonalizing frame.
#[derive(Debug, Clone)]
pub struct InertiaSpectrum {
    /// Moments sorted descending; ties keep the original index order.
    pub moments: Vec<f64>,
    /// Orthogonal matrix whose columns are the principal axes.
    pub frame: RMat,
    /// The tensor before the principal-axis transformation.
    pub raw: RMat,
}

/// Angular velocity and angular Bloch vector in the principal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerState {
    pub omega: RVec,
    pub ell: RVec,
}

impl EulerState {
    pub fn from_omega(omega: RVec, moments: &[f64]) -> Self {
        let ell = DVector::from_iterator(omega.len(), omega.iter().zip(moments).map(|(w, i)| w * i));
        EulerState { omega, ell }
    }
}

/// ℓ_i = Σ_{j,k} f_ijk ρ_j ρ̇_k.
pub fn angular_bloch_vector(rho: &BlochState, rhodot: &RVec, basis: &BasisSet) -> Result<RVec> {
    let n = basis.len();
    if rho.vec.len() != n || rhodot.len() != n {
        return Err(Error::Shape { expected: n, got: rho.vec.len().min(rhodot.len()) });
    }
    let mut ell = RVec::zeros(n);
    for &(i, j, k, v) in basis.f.entries() {
        ell[i] += v * rho.vec[j] * rhodot[k];
    }
    Ok(ell)
}

/// The operator ℓ⃗·Λ⃗ = (1/2i)[ρ, ρ̇] whose coefficients are the angular Bloch vector.
pub fn angular_operator(rho: &CMat, rhodot: &CMat) -> CMat {
    commutator(rho, rhodot) * c(0.0, -0.5)
}

/// Raw tensor I_ab = Σ_ν λ_ν Σ_{j,l,m} f_ajl f_lbm ρ_jν ρ_mν, then principal axes.
pub fn inertia_tensor(mixture: &[(f64, RVec)], basis: &BasisSet) -> Result<InertiaSpectrum> {
    let n = basis.len();
    let mut total = 0.0;
    for (w, v) in mixture {
        if *w < 0.0 {
            return Err(Error::InvalidInput(format!("negative mixture weight {w}")));
        }
        if v.len() != n {
            return Err(Error::Shape { expected: n, got: v.len() });
        }
        total += w;
    }
    if mixture.is_empty() || (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("mixture weights sum to {total}, expected 1")));
    }
    let mut raw = RMat::zeros(n, n);
    for (w, rho) in mixture {
        // A_al = Σ_j f_ajl ρ_j and Σ_m f_lbm ρ_m = A_bl, so the tensor is A Aᵀ.
        let mut a = RMat::zeros(n, n);
        for &(x, j, l, v) in basis.f.entries() {
            a[(x, l)] += v * rho[j];
        }
        raw += (&a * a.transpose()) * *w;
    }
    let raw = (&raw + raw.transpose()) * 0.5;
    Ok(principal_axes(raw))
}

fn principal_axes(raw: RMat) -> InertiaSpectrum {
    let n = raw.nrows();
    let eig = SymmetricEigen::new(raw.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let mut frame = RMat::zeros(n, n);
    let mut moments = Vec::with_capacity(n);
    for (col, &k) in order.iter().enumerate() {
        moments.push(eig.eigenvalues[k]);
        let v = eig.eigenvectors.column(k);
        let mut best = 0;
        for r in 0..n {
            if v[r].abs() > v[best].abs() + 1e-12 {
                best = r;
            }
        }
        let s = if v[best] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            frame[(r, col)] = s * v[r];
        }
    }
    InertiaSpectrum { moments, frame, raw }
}

/// ω̇_j = (1/I_j) Σ_{k<l} (I_k − I_l) f_jkl ω_k ω_l.
///
/// Summing over ordered pairs only matches the qubit form
/// I_1 ω̇_1 = (I_2 − I_3) ω_2 ω_3; the unrestricted double sum counts each pair twice.
pub fn euler_rhs(omega: &[f64], moments: &[f64], basis: &BasisSet) -> Result<RVec> {
    let n = basis.len();
    if omega.len() != n || moments.len() != n {
        return Err(Error::Shape { expected: n, got: omega.len().min(moments.len()) });
    }
    let mut num = vec![0.0; n];
    for &(j, k, l, v) in basis.f.entries() {
        num[j] += 0.5 * (moments[k] - moments[l]) * v * omega[k] * omega[l];
    }
    let mut out = RVec::zeros(n);
    for j in 0..n {
        if moments[j] > 0.0 {
            out[j] = num[j] / moments[j];
        } else if num[j] != 0.0 || moments[j] < 0.0 {
            return Err(Error::SingularInertia { index: j, value: moments[j] });
        }
    }
    Ok(out)
}

fn euler_rhs_into(basis: &BasisSet, moments: &[f64], w: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for &(j, k, l, v) in basis.f.entries() {
        out[j] += 0.5 * (moments[k] - moments[l]) * v * w[k] * w[l];
    }
    for j in 0..out.len() {
        out[j] = if moments[j] > 0.0 { out[j] / moments[j] } else { 0.0 };
    }
}

/// ℋ = ½ Σ I_k ω_k².
pub fn euler_energy(omega: &[f64], moments: &[f64]) -> f64 {
    0.5 * omega.iter().zip(moments).map(|(w, i)| i * w * w).sum::<f64>()
}

/// ℓ² = Σ I_k² ω_k².
pub fn euler_ell_squared(omega: &[f64], moments: &[f64]) -> f64 {
    omega.iter().zip(moments).map(|(w, i)| (i * w).powi(2)).sum()
}

/// Quadratic and cubic Casimirs Σ x_k² and Σ g_ijk x_i x_j x_k.
pub fn casimirs(x: &[f64], basis: &BasisSet) -> (f64, f64) {
    let c1 = x.iter().map(|v| v * v).sum();
    let c2 = basis.g.entries().iter().map(|&(i, j, k, v)| v * x[i] * x[j] * x[k]).sum();
    (c1, c2)
}

/// Integrates the generalized Euler equations; monitors ℋ, ℓ² and the
/// Casimirs of ℓ = Iω (`casimir_1`, `casimir_2`).
pub fn integrate_euler(omega0: &[f64], moments: &[f64], basis: &BasisSet, times: &[f64], tol: f64) -> Result<Trajectory> {
    euler_rhs(omega0, moments, basis)?;
    let ys = integrate(|_, w, dw| euler_rhs_into(basis, moments, w, dw), omega0, times, &OdeOptions::with_tol(tol))?;
    euler_trajectory(ys, moments, basis, times)
}

/// [`integrate_euler`] with every accepted step projected back onto the
/// initial level sets of ℋ and ℓ². Removes the secular drift of an explicit
/// Runge-Kutta scheme over long horizons; the monitored ℋ and ℓ² then only
/// show the projection residual.
pub fn integrate_euler_projected(omega0: &[f64], moments: &[f64], basis: &BasisSet, times: &[f64], tol: f64) -> Result<Trajectory> {
    euler_rhs(omega0, moments, basis)?;
    let (h0, l0) = (euler_energy(omega0, moments), euler_ell_squared(omega0, moments));
    let ys = integrate_projected(
        |_, w, dw| euler_rhs_into(basis, moments, w, dw),
        |w| project_onto_integrals(w, moments, h0, l0),
        omega0,
        times,
        &OdeOptions::with_tol(tol),
    )?;
    euler_trajectory(ys, moments, basis, times)
}

/// Moves ω along span{∇ℋ, ∇ℓ²} (taken at the input point) until ℋ = h0 and
/// ℓ² = l0, by Newton iteration on the two coefficients.
fn project_onto_integrals(w: &mut [f64], moments: &[f64], h0: f64, l0: f64) -> bool {
    let n = w.len();
    let g1: Vec<f64> = w.iter().zip(moments).map(|(x, i)| i * x).collect();
    let g2: Vec<f64> = w.iter().zip(moments).map(|(x, i)| 2.0 * i * i * x).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let (n11, n22, n12) = (dot(&g1, &g1), dot(&g2, &g2), dot(&g1, &g2));
    let base = w.to_vec();
    if n11 == 0.0 || n11 * n22 - n12 * n12 <= 1e-12 * n11 * n22 {
        // gradients parallel: a rescaling fixes both integrals
        let e = euler_energy(w, moments);
        if e <= 0.0 || e == h0 {
            return false;
        }
        let s = (h0 / e).sqrt();
        w.iter_mut().for_each(|x| *x *= s);
        return true;
    }
    let (mut a, mut b) = (0.0, 0.0);
    let mut cur = base.clone();
    for _ in 0..4 {
        let r1 = euler_energy(&cur, moments) - h0;
        let r2 = euler_ell_squared(&cur, moments) - l0;
        if r1 == 0.0 && r2 == 0.0 {
            break;
        }
        let c1: Vec<f64> = cur.iter().zip(moments).map(|(x, i)| i * x).collect();
        let c2: Vec<f64> = cur.iter().zip(moments).map(|(x, i)| 2.0 * i * i * x).collect();
        let (j11, j12, j21, j22) = (dot(&c1, &g1), dot(&c1, &g2), dot(&c2, &g1), dot(&c2, &g2));
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        a -= (j22 * r1 - j12 * r2) / det;
        b -= (-j21 * r1 + j11 * r2) / det;
        for k in 0..n {
            cur[k] = base[k] + a * g1[k] + b * g2[k];
        }
    }
    if a == 0.0 && b == 0.0 {
        return false;
    }
    w.copy_from_slice(&cur);
    true
}

fn euler_trajectory(ys: Vec<Vec<f64>>, moments: &[f64], basis: &BasisSet, times: &[f64]) -> Result<Trajectory> {
    let mut tr = Trajectory { d: basis.d, times: times.to_vec(), states: Vec::new(), monitors: Vec::new() };
    let mut energy = Vec::new();
    let mut ell2 = Vec::new();
    let mut c1 = Vec::new();
    let mut c2 = Vec::new();
    for w in &ys {
        energy.push(euler_energy(w, moments));
        ell2.push(euler_ell_squared(w, moments));
        let ell: Vec<f64> = w.iter().zip(moments).map(|(a, b)| a * b).collect();
        let (a, b) = casimirs(&ell, basis);
        c1.push(a);
        c2.push(b);
    }
    tr.states = ys.into_iter().map(|w| BlochState::new(0.0, DVector::from_vec(w))).collect();
    tr.push_monitor("energy", energy);
    tr.push_monitor("ell_squared", ell2);
    tr.push_monitor("casimir_1", c1);
    if basis.d > 2 {
        tr.push_monitor("casimir_2", c2);
    }
    Ok(tr)
}

/// Branch of the asymmetric-top solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopBranch {
    /// ϖ below the middle moment: rotation near the smallest-moment axis.
    Lower,
    /// ϖ above the middle moment: rotation near the largest-moment axis.
    Upper,
}

/// Closed-form data of a torque-free asymmetric top in ascending moment order.
#[derive(Debug, Clone)]
pub struct AsymmetricTop {
    /// Position of each ascending-order moment in the caller's labeling.
    pub perm: [usize; 3],
    pub sorted: [f64; 3],
    pub branch: TopBranch,
    pub gamma: [f64; 3],
    pub rate: f64,
    pub modulus: f64,
    /// Real period of the motion, 4K(k)/n.
    pub period: f64,
    odd: bool,
}

impl AsymmetricTop {
    /// Builds the solution with ω(0) on the positive (ω_a, 0, ω_c) half-plane.
    pub fn new(moments: [f64; 3], ell: f64, energy: f64) -> Result<Self> {
        let mut perm = [0usize, 1, 2];
        perm.sort_by(|&a, &b| moments[a].total_cmp(&moments[b]));
        let s = [moments[perm[0]], moments[perm[1]], moments[perm[2]]];
        if s.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidInput(format!("moments must be positive: {moments:?}")));
        }
        if (s[1] - s[0]).abs() <= 1e-12 * s[2] || (s[2] - s[1]).abs() <= 1e-12 * s[2] {
            return Err(Error::RepeatedMoments(moments.to_vec()));
        }
        if !(ell > 0.0 && energy > 0.0) {
            return Err(Error::InvalidInput("ell and H must be positive".into()));
        }
        let (i1, i2, i3) = (s[0], s[1], s[2]);
        let l2 = ell * ell;
        let varpi = l2 / (2.0 * energy);
        let sigma = 1.0 / varpi;
        if !(varpi > i1 && varpi < i3) {
            return Err(Error::InvalidInput(format!("ell^2/2H = {varpi} outside ({i1}, {i3})")));
        }
        if (varpi - i2).abs() <= 1e-10 * i2 {
            return Err(Error::Separatrix { varpi });
        }
        let g1 = ell * ((1.0 - sigma * i3) / (i1 * i1 - i1 * i3)).sqrt();
        let g3 = ell * ((1.0 - sigma * i1) / (i3 * i3 - i1 * i3)).sqrt();
        let (branch, g2, rate, k2) = if varpi < i2 {
            (
                TopBranch::Lower,
                ell * ((1.0 - sigma * i1) / (i2 * i2 - i1 * i2)).sqrt(),
                ell * ((i1 - i2) * (1.0 - sigma * i3) / (i1 * i2 * i3)).sqrt(),
                (i2 - i3) / (i1 - i2) * (1.0 - sigma * i1) / (sigma * i3 - 1.0),
            )
        } else {
            (
                TopBranch::Upper,
                ell * ((1.0 - sigma * i3) / (i2 * i2 - i2 * i3)).sqrt(),
                ell * ((i2 - i3) * (sigma * i1 - 1.0) / (i1 * i2 * i3)).sqrt(),
                (i1 - i2) / (i2 - i3) * (1.0 - sigma * i3) / (sigma * i1 - 1.0),
            )
        };
        let modulus = k2.clamp(0.0, 1.0).sqrt();
        let period = 4.0 * complete_k(modulus)? / rate;
        // odd relabelings reverse orientation; flip the sn component to compensate
        let odd = (perm[0] > perm[1]) as u8 + (perm[0] > perm[2]) as u8 + (perm[1] > perm[2]) as u8;
        Ok(AsymmetricTop { perm, sorted: s, branch, gamma: [g1, g2, g3], rate, modulus, period, odd: odd % 2 == 1 })
    }

    /// ω(t) in the caller's labeling.
    pub fn omega(&self, t: f64) -> Result<[f64; 3]> {
        let (sn, cn, dn) = jacobi_elliptic(self.rate * t, self.modulus)?;
        let w = match self.branch {
            TopBranch::Lower => [self.gamma[0] * dn, self.gamma[1] * sn, self.gamma[2] * cn],
            TopBranch::Upper => [self.gamma[0] * cn, self.gamma[1] * sn, self.gamma[2] * dn],
        };
        let mut out = [0.0; 3];
        for a in 0..3 {
            out[self.perm[a]] = w[a];
        }
        if self.odd {
            out[self.perm[1]] = -out[self.perm[1]];
        }
        Ok(out)
    }
}

/// ω(t) of the asymmetric top with conserved ℓ and ℋ.
pub fn analytic_asymmetric_top(moments: [f64; 3], ell: f64, energy: f64, t: f64) -> Result<[f64; 3]> {
    AsymmetricTop::new(moments, ell, energy)?.omega(t)
}

/// Symmetric top with I_1 = I_2: ω_3 constant, (ω_1, ω_2) rotating at ζ = ω_30 (I_1 − I_3)/I_1.
pub fn symmetric_top_solution(omega0: [f64; 3], moments: [f64; 3], t: f64) -> Result<[f64; 3]> {
    let [i1, i2, _] = moments;
    if (i1 - i2).abs() > 1e-12 * i1.abs().max(1.0) {
        return Err(Error::InvalidInput(format!("symmetric top needs I1 = I2, got {i1} and {i2}")));
    }
    if !(i1 > 0.0) {
        return Err(Error::SingularInertia { index: 0, value: i1 });
    }
    let zeta = symmetric_top_frequency(omega0[2], moments);
    let (s, cz) = (zeta * t).sin_cos();
    Ok([omega0[0] * cz + omega0[1] * s, omega0[1] * cz - omega0[0] * s, omega0[2]])
}

/// ζ = ω_30 (I_1 − I_3)/I_1 (signed precession rate).
pub fn symmetric_top_frequency(omega30: f64, moments: [f64; 3]) -> f64 {
    omega30 * (moments[0] - moments[2]) / moments[0]
}

/// Polhode axis ratios and separatrix slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polhode {
    pub s1: f64,
    pub s3: f64,
    pub separatrix_slope: f64,
}

/// s1, s3 and the separatrix slope with moments sorted I_1 > I_2 > I_3.
pub fn polhode_geometry(moments: [f64; 3]) -> Result<Polhode> {
    let mut s = moments;
    s.sort_by(|a, b| b.total_cmp(a));
    if s.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidInput(format!("moments must be positive: {moments:?}")));
    }
    let [i1, i2, i3] = s;
    if i1 - i2 <= 1e-12 * i1 || i2 - i3 <= 1e-12 * i1 {
        return Err(Error::RepeatedMoments(moments.to_vec()));
    }
    let s1 = (i2 * (i2 - i1) / (i3 * (i3 - i1))).sqrt();
    let s3 = (i1 * (i3 - i1) / (i2 * (i3 - i2))).sqrt();
    // I_1(I_2 − I_1)/(I_3(I_2 − I_3)) is negative whenever I_2 is the middle
    // moment; the separatrix ℓ² = 2ℋI_2 has the slope of its magnitude.
    let slope = (-(i1 * (i2 - i1)) / (i3 * (i2 - i3))).sqrt();
    Ok(Polhode { s1, s3, separatrix_slope: slope })
}
