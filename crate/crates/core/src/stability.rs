//! Linear and nonlinear stability: Routh-Hurwitz classification, the
//! intermediate-axis analysis for qubit and SU(3) tops, and Energy-Casimir.

use crate::algebra::{gen_gellmann_basis, BasisSet, ElementKind, Ordering};
use crate::error::{Error, Result};
use crate::linalg::{real_eigenvalues, RMat, C64};
use crate::rigidbody::{euler_rhs, integrate_euler};

/// Real-part threshold separating the three classes.
pub const SPECTRAL_TOL: f64 = 1e-10;
/// Relative window for ω_{(0)3}² = 3ω_{(0)8}².
pub const RESONANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    AsymptoticallyStable,
    MarginallyStable,
    Unstable,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::AsymptoticallyStable => "asymptotically-stable",
            Classification::MarginallyStable => "marginally-stable",
            Classification::Unstable => "unstable",
        }
    }

    pub fn is_stable(self) -> bool {
        self != Classification::Unstable
    }
}

#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub eigenvalues: Vec<C64>,
    pub classification: Classification,
    /// Per-axis (or per-block) classification; empty for a bare Routh-Hurwitz test.
    pub axis_flags: Vec<Classification>,
    /// Oscillation frequencies or growth rates |Ω|; repeated-moment axes are omitted.
    pub characteristic_frequencies: Vec<f64>,
}

pub fn classify(eigenvalues: &[C64]) -> Classification {
    if eigenvalues.iter().all(|z| z.re < -SPECTRAL_TOL) {
        Classification::AsymptoticallyStable
    } else if eigenvalues.iter().all(|z| z.re <= SPECTRAL_TOL) {
        Classification::MarginallyStable
    } else {
        Classification::Unstable
    }
}

pub fn routh_hurwitz(jmat: &RMat) -> StabilityVerdict {
    let eigenvalues = if jmat.nrows() == 0 { Vec::new() } else { real_eigenvalues(jmat) };
    StabilityVerdict {
        classification: classify(&eigenvalues),
        eigenvalues,
        axis_flags: Vec::new(),
        characteristic_frequencies: Vec::new(),
    }
}

/// ∂ω̇_j/∂ω_m = (1/I_j) Σ_l (I_m − I_l) f_jml ω_l.
pub fn euler_jacobian(omega: &[f64], moments: &[f64], basis: &BasisSet) -> Result<RMat> {
    let n = basis.len();
    if omega.len() != n || moments.len() != n {
        return Err(Error::Shape { expected: n, got: omega.len().min(moments.len()) });
    }
    let mut l = linearization(omega, moments, basis);
    for j in 0..n {
        if !(moments[j] > 0.0) {
            return Err(Error::SingularInertia { index: j, value: moments[j] });
        }
        for m in 0..n {
            l[(j, m)] /= moments[j];
        }
    }
    Ok(l)
}

/// L_jm = I_j ∂ω̇_j/∂ω_m, so that I_j δω̇_j = Σ_m L_jm δω_m.
fn linearization(omega: &[f64], moments: &[f64], basis: &BasisSet) -> RMat {
    let n = basis.len();
    let mut l = RMat::zeros(n, n);
    for &(j, m, k, v) in basis.f.entries() {
        l[(j, m)] += (moments[m] - moments[k]) * v * omega[k];
    }
    l
}

/// Ω² = −ω_0² (I_k − I_m)(I_j − I_m)/(I_k I_j) for spin ω_0 about axis m
/// (0-based); positive values are growth rates squared.
pub fn qubit_frequency_sq(moments: [f64; 3], axis: usize, omega0: f64) -> f64 {
    let (k, j) = ((axis + 1) % 3, (axis + 2) % 3);
    let m = axis;
    -omega0 * omega0 * (moments[k] - moments[m]) * (moments[j] - moments[m]) / (moments[k] * moments[j])
}

fn axis_class(freq_sq: f64, scale: f64) -> Classification {
    if freq_sq > SPECTRAL_TOL * scale {
        Classification::Unstable
    } else {
        Classification::MarginallyStable
    }
}

/// Linear stability of steady spin |ω_0| about `axis` (0-based) of a qubit top.
///
/// `axis_flags` holds the verdict for each of the three axes at the same
/// spin rate; the spectrum is that of the Jacobian about the requested axis.
pub fn intermediate_axis_qubit(moments: [f64; 3], axis: usize, omega0: f64) -> Result<StabilityVerdict> {
    if axis > 2 {
        return Err(Error::InvalidInput(format!("axis index {axis} out of range 0..3")));
    }
    if let Some(i) = moments.iter().position(|m| !(*m > 0.0)) {
        return Err(Error::SingularInertia { index: i, value: moments[i] });
    }
    let basis = gen_gellmann_basis(2)?;
    let mut w = [0.0; 3];
    w[axis] = omega0;
    let jac = euler_jacobian(&w, &moments, &basis)?;
    let mut verdict = routh_hurwitz(&jac);
    let scale = omega0 * omega0;
    verdict.axis_flags = (0..3).map(|a| axis_class(qubit_frequency_sq(moments, a, omega0), scale)).collect();
    let f2 = qubit_frequency_sq(moments, axis, omega0);
    if f2.abs() > SPECTRAL_TOL * scale.max(f64::MIN_POSITIVE) {
        verdict.characteristic_frequencies.push(f2.abs().sqrt());
    }
    Ok(verdict)
}

/// |δω(t)| = |ω(t) − ω_0 e_axis| for a perturbed steady spin.
pub fn perturbation_growth(moments: [f64; 3], axis: usize, omega0: f64, delta: [f64; 3], times: &[f64], tol: f64) -> Result<Vec<f64>> {
    let basis = gen_gellmann_basis(2)?;
    let mut w0 = delta;
    w0[axis] += omega0;
    let tr = integrate_euler(&w0, &moments, &basis, times, tol)?;
    Ok(tr
        .states
        .iter()
        .map(|s| {
            let mut d2 = 0.0;
            for k in 0..3 {
                let base = if k == axis { omega0 } else { 0.0 };
                d2 += (s.vec[k] - base).powi(2);
            }
            d2.sqrt()
        })
        .collect())
}

/// Least-squares slope of ln y against t.
pub fn fit_growth_exponent(times: &[f64], series: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = times.iter().zip(series).filter(|(_, y)| **y > 0.0).map(|(t, y)| (*t, y.ln())).collect();
    if pts.len() < 2 {
        return Err(Error::InvalidInput("need at least two positive samples".into()));
    }
    let n = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / n, sy / n);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt).powi(2)));
    Ok(num / den)
}

/// One 2×2 block of the SU(3) linearization at a Cartan point.
#[derive(Debug, Clone)]
pub struct Su3Block {
    /// 0-based basis indices of the block.
    pub indices: (usize, usize),
    /// Jacobian restricted to the block.
    pub jacobian: RMat,
    pub eigenvalues: Vec<C64>,
    /// Effective moment I_H of the root direction.
    pub inertia_h: f64,
    /// Prefactor α_H in λ² = α_H (I_j − I_H)(I_k − I_H)/(I_j I_k).
    pub alpha: f64,
    pub frequency_sq: f64,
    /// Whether I_H lies strictly between the two block moments.
    pub h_between: bool,
    pub classification: Classification,
}

#[derive(Debug, Clone)]
pub struct Su3Linearization {
    /// L_kj with I_k δω̇_k = Σ_j L_kj δω_j.
    pub l: RMat,
    pub jacobian: RMat,
    pub blocks: Vec<Su3Block>,
    pub verdict: StabilityVerdict,
}

pub fn is_resonant(omega03: f64, omega08: f64) -> bool {
    let scale = (omega03 * omega03).max(omega08 * omega08);
    (omega03 * omega03 - 3.0 * omega08 * omega08).abs() <= RESONANCE_TOL * scale
}

fn check_su3(moments: &[f64], basis: &BasisSet) -> Result<()> {
    if basis.d != 3 || basis.ordering != Ordering::Standard {
        return Err(Error::InvalidInput("SU(3) analysis needs the d = 3 basis in standard ordering".into()));
    }
    if moments.len() != 8 {
        return Err(Error::Shape { expected: 8, got: moments.len() });
    }
    if let Some(i) = moments.iter().position(|m| !(*m > 0.0)) {
        return Err(Error::SingularInertia { index: i, value: moments[i] });
    }
    Ok(())
}

/// Linearized SU(3) Euler equations at ω_0 = ω_{(0)3} e_3 + ω_{(0)8} e_8.
///
/// The blocks (1,2), (4,5), (6,7) carry the roots; with
/// a = ω_{(0)3} + √3 ω_{(0)8} and b = √3 ω_{(0)8} − ω_{(0)3}:
/// I_H1 = I_3, α_H1 = −ω_{(0)3}²; I_H2 = (I_3 ω_{(0)3} + √3 I_8 ω_{(0)8})/a, α_H2 = −a²/4;
/// I_H3 = (−I_3 ω_{(0)3} + √3 I_8 ω_{(0)8})/b, α_H3 = −b²/4.
pub fn linearize_euler_su3(moments: &[f64], omega03: f64, omega08: f64, basis: &BasisSet) -> Result<Su3Linearization> {
    check_su3(moments, basis)?;
    if is_resonant(omega03, omega08) {
        return Err(Error::Resonance);
    }
    let i3 = basis.index_of(ElementKind::Diagonal(1)).expect("λ3");
    let i8 = basis.index_of(ElementKind::Diagonal(2)).expect("λ8");
    let mut w = vec![0.0; 8];
    w[i3] = omega03;
    w[i8] = omega08;
    let rhs = euler_rhs(&w, moments, basis)?;
    let res = rhs.amax();
    if res > 1e-12 {
        return Err(Error::NotStationary(res));
    }
    let l = linearization(&w, moments, basis);
    let jacobian = euler_jacobian(&w, moments, basis)?;
    let s3 = 3f64.sqrt();
    let a = omega03 + s3 * omega08;
    let b = s3 * omega08 - omega03;
    let roots = [
        ((0, 1), moments[i3], -omega03 * omega03),
        ((3, 4), (moments[i3] * omega03 + s3 * moments[i8] * omega08) / a, -a * a / 4.0),
        ((5, 6), (-moments[i3] * omega03 + s3 * moments[i8] * omega08) / b, -b * b / 4.0),
    ];
    let scale = omega03 * omega03 + omega08 * omega08;
    let mut blocks = Vec::with_capacity(3);
    for ((j, k), ih, alpha) in roots {
        let sub = RMat::from_row_slice(2, 2, &[jacobian[(j, j)], jacobian[(j, k)], jacobian[(k, j)], jacobian[(k, k)]]);
        let eigenvalues = real_eigenvalues(&sub);
        let (ij, ik) = (moments[j], moments[k]);
        let frequency_sq = alpha * (ij - ih) * (ik - ih) / (ij * ik);
        blocks.push(Su3Block {
            indices: (j, k),
            classification: classify(&eigenvalues),
            jacobian: sub,
            eigenvalues,
            inertia_h: ih,
            alpha,
            frequency_sq,
            h_between: ih > ij.min(ik) && ih < ij.max(ik),
        });
    }
    let mut verdict = routh_hurwitz(&jacobian);
    verdict.axis_flags = blocks.iter().map(|b| b.classification).collect();
    verdict.characteristic_frequencies = blocks
        .iter()
        .filter(|b| b.frequency_sq.abs() > SPECTRAL_TOL * scale)
        .map(|b| b.frequency_sq.abs().sqrt())
        .collect();
    Ok(Su3Linearization { l, jacobian, blocks, verdict })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearVerdict {
    Stable,
    Unstable,
    Inconclusive,
}

impl NonlinearVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            NonlinearVerdict::Stable => "stable",
            NonlinearVerdict::Unstable => "unstable",
            NonlinearVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnergyCasimirReport {
    pub mu: f64,
    pub nu: f64,
    /// h_j = ½ ∂²𝔜/∂ω_j² at ω_0 for all eight directions.
    pub hessian_diagonal: Vec<f64>,
    /// ½ of the central-difference Hessian of 𝔜.
    pub hessian_fd: RMat,
    /// Eigenvalues of the finite-difference Hessian on the orbit tangent space (the six root directions).
    pub tangent_eigenvalues: Vec<f64>,
    /// max |∇𝔜(ω_0)|.
    pub first_variation: f64,
    pub nonlinear_stable: NonlinearVerdict,
}

/// μ and ν for which the Cartan point is critical for 𝔜 = ℋ + μ𝒞_1 + ν𝒞_2.
pub fn energy_casimir_multipliers(moments: &[f64], omega03: f64, omega08: f64) -> Result<(f64, f64)> {
    if moments.len() != 8 {
        return Err(Error::Shape { expected: 8, got: moments.len() });
    }
    if is_resonant(omega03, omega08) {
        return Err(Error::Resonance);
    }
    let (i3, i8) = (moments[2], moments[7]);
    let den = omega03 * omega03 - 3.0 * omega08 * omega08;
    let mu = (-i3 * omega03 * omega03 + (i3 + 2.0 * i8) * omega08 * omega08) / (2.0 * den);
    let nu = (i3 - i8) * omega08 / (3f64.sqrt() * den);
    Ok((mu, nu))
}

/// Closed forms of h_1 = h_2, h_4 = h_5 and h_6 = h_7 (indices 0, 3, 5).
pub fn energy_casimir_closed_form(moments: &[f64], omega03: f64, omega08: f64) -> Result<[f64; 3]> {
    energy_casimir_multipliers(moments, omega03, omega08)?;
    let (i1, i3, i4, i6, i8) = (moments[0], moments[2], moments[3], moments[5], moments[7]);
    let (w3, w8) = (omega03, omega08);
    let den = 2.0 * (w3 * w3 - 3.0 * w8 * w8);
    let s3 = 3f64.sqrt();
    let hi = ((i4 - i3) * w3 * w3 + s3 * (i3 - i8) * w3 * w8 + 3.0 * (i8 - i4) * w8 * w8) / den;
    let hk = ((i6 - i3) * w3 * w3 - s3 * (i3 - i8) * w3 * w8 + 3.0 * (i8 - i6) * w8 * w8) / den;
    Ok([(i1 - i3) / 2.0, hi, hk])
}

/// 𝔜 = ½ Σ I ω² + Σ_k μ_k 𝒞_k with 𝒞_1 = Σ ω², 𝒞_2 = Σ g ωωω.
pub fn energy_casimir_function(omega: &[f64], moments: &[f64], mu: &[f64], basis: &BasisSet) -> f64 {
    let (c1, c2) = crate::rigidbody::casimirs(omega, basis);
    let cs = [c1, c2];
    crate::rigidbody::euler_energy(omega, moments) + mu.iter().zip(cs).map(|(m, c)| m * c).sum::<f64>()
}

/// ∇𝔜 = I_j ω_j + 2μ ω_j + 3ν Σ g_jkl ω_k ω_l.
pub fn energy_casimir_gradient(omega: &[f64], moments: &[f64], mu: &[f64], basis: &BasisSet) -> Result<Vec<f64>> {
    let n = basis.len();
    if omega.len() != n || moments.len() != n {
        return Err(Error::Shape { expected: n, got: omega.len().min(moments.len()) });
    }
    if mu.len() > 2 {
        return Err(Error::InvalidInput("only the quadratic and cubic Casimirs are supported".into()));
    }
    let m1 = mu.first().copied().unwrap_or(0.0);
    let m2 = mu.get(1).copied().unwrap_or(0.0);
    let mut g: Vec<f64> = (0..n).map(|j| (moments[j] + 2.0 * m1) * omega[j]).collect();
    if m2 != 0.0 {
        for &(j, k, l, v) in basis.g.entries() {
            g[j] += 3.0 * m2 * v * omega[k] * omega[l];
        }
    }
    Ok(g)
}

/// max-norm of ∇𝔜 at ω_0; zero exactly at critical points.
pub fn critical_point_check(omega0: &[f64], moments: &[f64], mu: &[f64], basis: &BasisSet) -> Result<f64> {
    Ok(energy_casimir_gradient(omega0, moments, mu, basis)?.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

pub fn energy_casimir_su3(moments: &[f64], omega03: f64, omega08: f64, basis: &BasisSet) -> Result<EnergyCasimirReport> {
    check_su3(moments, basis)?;
    let (mu, nu) = energy_casimir_multipliers(moments, omega03, omega08)?;
    let mut w = vec![0.0; 8];
    w[2] = omega03;
    w[7] = omega08;
    let mus = [mu, nu];
    let first_variation = critical_point_check(&w, moments, &mus, basis)?;
    let hessian_diagonal: Vec<f64> = (0..8)
        .map(|j| {
            let gs: f64 = (0..8).map(|l| basis.g.get(j, j, l) * w[l]).sum();
            0.5 * (moments[j] + 2.0 * mu + 6.0 * nu * gs)
        })
        .collect();
    let step = 1e-5 * (omega03.abs() + omega08.abs()).max(1.0);
    let mut hessian_fd = RMat::zeros(8, 8);
    for k in 0..8 {
        let mut wp = w.clone();
        let mut wm = w.clone();
        wp[k] += step;
        wm[k] -= step;
        let gp = energy_casimir_gradient(&wp, moments, &mus, basis)?;
        let gm = energy_casimir_gradient(&wm, moments, &mus, basis)?;
        for j in 0..8 {
            hessian_fd[(j, k)] = 0.25 * (gp[j] - gm[j]) / step;
        }
    }
    let tangent = [0usize, 1, 3, 4, 5, 6];
    let sub = RMat::from_fn(6, 6, |r, c| 0.5 * (hessian_fd[(tangent[r], tangent[c])] + hessian_fd[(tangent[c], tangent[r])]));
    let mut tangent_eigenvalues: Vec<f64> = sub.symmetric_eigen().eigenvalues.iter().copied().collect();
    tangent_eigenvalues.sort_by(f64::total_cmp);
    let hs: Vec<f64> = tangent.iter().map(|&j| hessian_diagonal[j]).collect();
    let scale = moments.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let nonlinear_stable = if hs.iter().all(|h| *h >= 0.0) {
        NonlinearVerdict::Stable
    } else if first_variation <= 1e-10 * scale.max(1.0) * (omega03.abs() + omega08.abs()).max(1.0) {
        NonlinearVerdict::Unstable
    } else {
        NonlinearVerdict::Inconclusive
    };
    Ok(EnergyCasimirReport { mu, nu, hessian_diagonal, hessian_fd, tangent_eigenvalues, first_variation, nonlinear_stable })
}
