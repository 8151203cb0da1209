//! Bloch generators, Bloch-equation integrators, and operator-level propagators.

use nalgebra::DVector;

use crate::algebra::{bloch_reconstruct, decompose_unchecked, BasisSet, BlochState};
use crate::error::{Error, Result};
use crate::linalg::{c, commutator, ensure_hermitian, ensure_square, eigh, unitary_propagator, CMat, RMat, RVec, C64};
use crate::ode::{integrate, OdeOptions};

/// Overall sign s in J_kl = s · 2 Σ_m f_klm h_m.
///
/// Fixed against the decomposition of −i[H, ρ]; see [`calibrate_generator_sign`].
pub const GENERATOR_SIGN: f64 = -1.0;

/// First and second order generators of the Bloch equations for a constant h.
#[derive(Debug, Clone)]
pub struct BlochGenerator {
    pub d: usize,
    pub j: RMat,
    pub k: RMat,
}

/// Time grid, Bloch states and named monitor series.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub d: usize,
    pub times: Vec<f64>,
    pub states: Vec<BlochState>,
    pub monitors: Vec<(String, Vec<f64>)>,
}

impl Trajectory {
    pub fn monitor(&self, name: &str) -> Option<&[f64]> {
        self.monitors.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn push_monitor(&mut self, name: &str, values: Vec<f64>) {
        self.monitors.retain(|(n, _)| n != name);
        self.monitors.push((name.to_string(), values));
    }

    /// Adds purity and Bloch-length monitors computed from the states.
    pub fn add_state_monitors(&mut self) {
        let d = self.d;
        let purity = self.states.iter().map(|s| s.purity(d)).collect();
        let length = self.states.iter().map(|s| s.vec.norm()).collect();
        self.push_monitor("purity", purity);
        self.push_monitor("bloch_length", length);
    }

    /// [`relative_drift`] of a named monitor.
    pub fn max_relative_drift(&self, name: &str) -> Option<f64> {
        self.monitor(name).map(relative_drift)
    }

    /// Drift summary for all monitors, in monitor order.
    pub fn drift_summary(&self) -> Vec<(String, f64)> {
        self.monitors.iter().map(|(n, v)| (n.clone(), relative_drift(v))).collect()
    }
}

/// max_t |x(t) − x(0)| / |x(0)|, or the absolute drift when |x(0)| < 1e-12.
pub fn relative_drift(series: &[f64]) -> f64 {
    let Some(&x0) = series.first() else { return 0.0 };
    let scale = if x0.abs() > 1e-12 { x0.abs() } else { 1.0 };
    series.iter().fold(0.0f64, |m, &x| m.max((x - x0).abs())) / scale
}

/// d/dt ρ⃗ = J ρ⃗ evaluated without materializing J.
fn bloch_rhs_into(basis: &BasisSet, h: &[f64], rho: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for &(k, l, m, v) in basis.f.entries() {
        out[k] += GENERATOR_SIGN * 2.0 * v * h[m] * rho[l];
    }
}

/// J_kl = s · 2 Σ_m f_klm h_m with s = [`GENERATOR_SIGN`].
pub fn generator_matrix(h: &[f64], basis: &BasisSet) -> RMat {
    let n = basis.len();
    let mut j = RMat::zeros(n, n);
    for &(k, l, m, v) in basis.f.entries() {
        j[(k, l)] += GENERATOR_SIGN * 2.0 * v * h[m];
    }
    j
}

pub fn bloch_generator(h: &BlochState, basis: &BasisSet) -> Result<BlochGenerator> {
    if h.vec.len() != basis.len() {
        return Err(Error::Shape { expected: basis.len(), got: h.vec.len() });
    }
    let j = generator_matrix(h.vec.as_slice(), basis);
    let k = &j * &j;
    Ok(BlochGenerator { d: basis.d, j, k })
}

/// Determines the generator sign by comparing J against −i[H, ρ] for the
/// first basis element as H and every basis element as ρ.
pub fn calibrate_generator_sign(basis: &BasisSet) -> f64 {
    let n = basis.len();
    let mut plus = 0.0;
    let mut minus = 0.0;
    let mut h = vec![0.0; n];
    h[0] = 1.0;
    let mut raw = RMat::zeros(n, n);
    for &(k, l, m, v) in basis.f.entries() {
        raw[(k, l)] += 2.0 * v * h[m];
    }
    for l in 0..n {
        let dr = commutator(&basis.elements[0], &basis.elements[l]) * c(0.0, -1.0);
        let s = decompose_unchecked(&dr, basis);
        for k in 0..n {
            plus += (s.vec[k] - raw[(k, l)]).abs();
            minus += (s.vec[k] + raw[(k, l)]).abs();
        }
    }
    if plus <= minus {
        1.0
    } else {
        -1.0
    }
}

/// Bloch equation state derivative from the operator route: decomposition of −i[H, ρ].
pub fn operator_rhs(h: &BlochState, rho: &BlochState, basis: &BasisSet) -> Result<RVec> {
    let hm = bloch_reconstruct(h, basis)?;
    let rm = bloch_reconstruct(rho, basis)?;
    let dr = commutator(&hm, &rm) * c(0.0, -1.0);
    Ok(decompose_unchecked(&dr, basis).vec)
}

fn check_density(rho0: &BlochState, basis: &BasisSet) -> Result<()> {
    if rho0.vec.len() != basis.len() {
        return Err(Error::Shape { expected: basis.len(), got: rho0.vec.len() });
    }
    if (rho0.scalar - 1.0 / basis.d as f64).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "density state scalar part {} differs from 1/d = {}",
            rho0.scalar,
            1.0 / basis.d as f64
        )));
    }
    Ok(())
}

fn trajectory_from(basis: &BasisSet, scalar: f64, times: &[f64], ys: Vec<Vec<f64>>) -> Trajectory {
    let states = ys.into_iter().map(|y| BlochState::new(scalar, DVector::from_vec(y))).collect();
    let mut tr = Trajectory { d: basis.d, times: times.to_vec(), states, monitors: Vec::new() };
    tr.add_state_monitors();
    tr
}

/// Integrates d/dt ρ⃗ = J(t) ρ⃗ for a time-dependent coefficient vector h⃗(t).
pub fn propagate_bloch_ode<F>(h_of_t: F, rho0: &BlochState, times: &[f64], tol: f64, basis: &BasisSet) -> Result<Trajectory>
where
    F: Fn(f64) -> RVec,
{
    check_density(rho0, basis)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let n = basis.len();
    let ys = integrate(
        |t, y, dy| {
            let h = h_of_t(t);
            bloch_rhs_into(basis, &h.as_slice()[..n], y, dy);
        },
        rho0.vec.as_slice(),
        times,
        &OdeOptions::with_tol(tol),
    )?;
    Ok(trajectory_from(basis, rho0.scalar, times, ys))
}

/// Constant-h variant of [`propagate_bloch_ode`]; also records the energy Tr(Hρ).
pub fn propagate_bloch_ode_const(h: &BlochState, rho0: &BlochState, times: &[f64], tol: f64, basis: &BasisSet) -> Result<Trajectory> {
    check_density(rho0, basis)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let gen = bloch_generator(h, basis)?;
    let ys = integrate(
        |_, y, dy| {
            let n = y.len();
            for k in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += gen.j[(k, l)] * y[l];
                }
                dy[k] = s;
            }
        },
        rho0.vec.as_slice(),
        times,
        &OdeOptions::with_tol(tol),
    )?;
    let mut tr = trajectory_from(basis, rho0.scalar, times, ys);
    let d = basis.d as f64;
    let energy = tr.states.iter().map(|s| d * h.scalar * s.scalar + 2.0 * h.vec.dot(&s.vec)).collect();
    tr.push_monitor("energy", energy);
    Ok(tr)
}

/// Integrates ρ̈⃗ = K ρ⃗ with K = J², or returns the harmonic closed form when
/// ρ⃗0 and ρ̇⃗0 both lie in the −ω² eigenspace of K.
pub fn propagate_second_order(
    h: &BlochState,
    rho0: &BlochState,
    rhodot0: &RVec,
    times: &[f64],
    tol: f64,
    basis: &BasisSet,
) -> Result<Trajectory> {
    check_density(rho0, basis)?;
    let gen = bloch_generator(h, basis)?;
    let expected = &gen.j * &rho0.vec;
    if rhodot0.len() != expected.len() {
        return Err(Error::Shape { expected: expected.len(), got: rhodot0.len() });
    }
    let mismatch = (rhodot0 - &expected).norm();
    if mismatch > 1e-8 {
        return Err(Error::InvalidInput(format!("rhodot0 inconsistent with J rho0: |diff| = {mismatch:e}")));
    }
    if let Some(omega) = harmonic_frequency(&gen.k, &rho0.vec, rhodot0) {
        let a = rho0.vec.clone();
        let b = if omega > 0.0 { rhodot0 / omega } else { RVec::zeros(a.len()) };
        let ys = times
            .iter()
            .map(|&t| {
                let v = if omega > 0.0 { &a * (omega * t).cos() + &b * (omega * t).sin() } else { a.clone() };
                v.as_slice().to_vec()
            })
            .collect();
        let mut tr = trajectory_from(basis, rho0.scalar, times, ys);
        tr.push_monitor("omega", vec![omega; times.len()]);
        return Ok(tr);
    }
    let n = basis.len();
    let mut y0 = rho0.vec.as_slice().to_vec();
    y0.extend_from_slice(rhodot0.as_slice());
    let ys = integrate(
        |_, y, dy| {
            for i in 0..n {
                dy[i] = y[n + i];
                let mut s = 0.0;
                for l in 0..n {
                    s += gen.k[(i, l)] * y[l];
                }
                dy[n + i] = s;
            }
        },
        &y0,
        times,
        &OdeOptions::with_tol(tol),
    )?;
    let ys = ys.into_iter().map(|mut y| {
        y.truncate(n);
        y
    });
    Ok(trajectory_from(basis, rho0.scalar, times, ys.collect()))
}

/// ω ≥ 0 such that K x = −ω² x for both x = ρ⃗0 and x = ρ̇⃗0, if it exists.
fn harmonic_frequency(k: &RMat, a: &RVec, b: &RVec) -> Option<f64> {
    let scale = k.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let mut lambda = None;
    for x in [a, b] {
        let xx = x.norm_squared();
        if xx < 1e-28 {
            continue;
        }
        let kx = k * x;
        let l = x.dot(&kx) / xx;
        if (&kx - x * l).norm() > 1e-12 * scale * xx.sqrt() {
            return None;
        }
        match lambda {
            None => lambda = Some(l),
            Some(l0) if (l0 - l).abs() <= 1e-12 * scale => {}
            _ => return None,
        }
    }
    let l = lambda.unwrap_or(0.0);
    if l > 1e-12 * scale {
        return None;
    }
    Some((-l).max(0.0).sqrt())
}

/// Cached eigendecomposition of a constant Hamiltonian.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    pub energies: Vec<f64>,
    pub vectors: CMat,
    rho_e: CMat,
}

impl SpectralPropagator {
    pub fn new(h: &CMat, rho0: &CMat) -> Result<Self> {
        ensure_hermitian(h, 1e-10)?;
        ensure_square(rho0)?;
        if rho0.nrows() != h.nrows() {
            return Err(Error::Shape { expected: h.nrows(), got: rho0.nrows() });
        }
        let (energies, vectors) = eigh(h);
        let rho_e = vectors.adjoint() * rho0 * &vectors;
        Ok(SpectralPropagator { energies, vectors, rho_e })
    }

    /// ρ(t) = Σ_{m,n} e^{−i(E_m − E_n)t} ρ_mn(0) |E_m⟩⟨E_n| over the full spectrum.
    pub fn density_at(&self, t: f64) -> CMat {
        let n = self.energies.len();
        let mut r = self.rho_e.clone();
        for m in 0..n {
            for k in 0..n {
                r[(m, k)] *= C64::from_polar(1.0, -(self.energies[m] - self.energies[k]) * t);
            }
        }
        &self.vectors * r * self.vectors.adjoint()
    }
}

/// Exact propagation for a constant Hermitian H, returned as Bloch states.
pub fn propagate_spectral(h: &CMat, rho0: &CMat, times: &[f64], basis: &BasisSet) -> Result<Trajectory> {
    if h.nrows() != basis.d {
        return Err(Error::Shape { expected: basis.d, got: h.nrows() });
    }
    let sp = SpectralPropagator::new(h, rho0)?;
    let states = times.iter().map(|&t| decompose_unchecked(&sp.density_at(t), basis)).collect();
    let mut tr = Trajectory { d: basis.d, times: times.to_vec(), states, monitors: Vec::new() };
    tr.add_state_monitors();
    Ok(tr)
}

/// Time-ordered propagation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeOrdering {
    /// U ← exp(−i H(t_mid) Δt) U per step.
    Midpoint,
    /// Dyson series truncated at the given order (0, 1 or 2).
    Dyson(usize),
}

/// ρ(t_end) under a time-dependent Hamiltonian.
pub fn propagate_timeordered<F>(h_of_t: F, rho0: &CMat, t_end: f64, steps: usize, mode: TimeOrdering) -> Result<CMat>
where
    F: Fn(f64) -> CMat,
{
    ensure_square(rho0)?;
    if steps == 0 {
        return Err(Error::InvalidInput("steps must be at least 1".into()));
    }
    let n = rho0.nrows();
    if t_end == 0.0 {
        return Ok(rho0.clone());
    }
    match mode {
        TimeOrdering::Midpoint => {
            let dt = t_end / steps as f64;
            let mut u = CMat::identity(n, n);
            for s in 0..steps {
                let h = h_of_t((s as f64 + 0.5) * dt);
                if h.nrows() != n {
                    return Err(Error::Shape { expected: n, got: h.nrows() });
                }
                u = unitary_propagator(&h, dt) * u;
            }
            Ok(&u * rho0 * u.adjoint())
        }
        TimeOrdering::Dyson(order) => {
            if order > 2 {
                return Err(Error::InvalidInput(format!("Dyson order {order} exceeds 2")));
            }
            let mut rho = rho0.clone();
            if order == 0 {
                return Ok(rho);
            }
            let minus_i = c(0.0, -1.0);
            let first = |t1: f64| commutator(&h_of_t(t1), rho0) * minus_i;
            rho += gauss_legendre(&first, 0.0, t_end, steps);
            if order == 2 {
                let second = |t1: f64| {
                    let inner = gauss_legendre(&first, 0.0, t1, steps);
                    commutator(&h_of_t(t1), &inner) * minus_i
                };
                rho += gauss_legendre(&second, 0.0, t_end, steps);
            }
            Ok(rho)
        }
    }
}

/// Composite 5-point Gauss-Legendre quadrature of a matrix-valued integrand.
fn gauss_legendre<F: Fn(f64) -> CMat>(f: &F, a: f64, b: f64, panels: usize) -> CMat {
    const X: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let h = (b - a) / panels as f64;
    let mut acc: Option<CMat> = None;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in X.iter().zip(W.iter()) {
            let v = f(mid + 0.5 * h * x) * c(0.5 * h * w, 0.0);
            acc = Some(match acc {
                None => v,
                Some(s) => s + v,
            });
        }
    }
    acc.expect("at least one panel")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{bloch_decompose, gen_gellmann_basis};
    use crate::linalg::max_abs;

    #[test]
    fn sign_is_locked() {
        for d in 2..=4 {
            let b = gen_gellmann_basis(d).unwrap();
            assert_eq!(calibrate_generator_sign(&b), GENERATOR_SIGN);
        }
    }

    #[test]
    fn qubit_generator_rotates_about_axis_three() {
        let b = gen_gellmann_basis(2).unwrap();
        let g = bloch_generator(&BlochState::from_slice(0.0, &[0.0, 0.0, 0.75]), &b).unwrap();
        // ρ̇ = ω × ρ with ω = 2h
        assert!((g.j[(1, 0)] - 1.5).abs() < 1e-15);
        assert!((g.j[(0, 1)] + 1.5).abs() < 1e-15);
        assert!((&g.j + g.j.transpose()).amax() < 1e-12);
    }

    #[test]
    fn zero_field_is_zero_generator() {
        let b = gen_gellmann_basis(3).unwrap();
        let g = bloch_generator(&BlochState::from_slice(0.0, &[0.0; 8]), &b).unwrap();
        assert_eq!(g.j.amax(), 0.0);
    }

    #[test]
    fn circle_in_the_12_plane() {
        let b = gen_gellmann_basis(2).unwrap();
        let w = 1.3;
        let h = BlochState::from_slice(0.0, &[0.0, 0.0, w / 2.0]);
        let rho0 = BlochState::density(2, &[0.5, 0.0, 0.0]);
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let tr = propagate_bloch_ode_const(&h, &rho0, &times, 1e-11, &b).unwrap();
        for (t, s) in times.iter().zip(&tr.states) {
            assert!((s.vec[0] - 0.5 * (w * t).cos()).abs() < 1e-9);
            assert!((s.vec[1] - 0.5 * (w * t).sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn spectral_phase_for_sigma3() {
        let b = gen_gellmann_basis(2).unwrap();
        let w = 0.8;
        let h = b.elements[2].clone() * c(w / 2.0, 0.0);
        let rho0 = CMat::from_element(2, 2, c(0.5, 0.0));
        let sp = SpectralPropagator::new(&h, &rho0).unwrap();
        let t = 2.1;
        let r = sp.density_at(t);
        assert!((r[(0, 1)] - C64::from_polar(0.5, -w * t)).norm() < 1e-14);
        assert!(max_abs(&(sp.density_at(0.0) - rho0)) < 1e-15);
    }

    #[test]
    fn second_order_closed_form() {
        let b = gen_gellmann_basis(2).unwrap();
        let h = BlochState::from_slice(0.0, &[0.0, 0.0, 0.4]);
        let rho0 = BlochState::density(2, &[0.3, 0.1, 0.0]);
        let g = bloch_generator(&h, &b).unwrap();
        let rd = &g.j * &rho0.vec;
        let times: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let tr = propagate_second_order(&h, &rho0, &rd, &times, 1e-10, &b).unwrap();
        assert!((tr.monitor("omega").unwrap()[0] - 0.8).abs() < 1e-14);
        let ode = propagate_bloch_ode_const(&h, &rho0, &times, 1e-11, &b).unwrap();
        for (x, y) in tr.states.iter().zip(&ode.states) {
            assert!((&x.vec - &y.vec).amax() < 1e-8);
        }
        let bad = RVec::from_vec(vec![1.0, 0.0, 0.0]);
        assert!(propagate_second_order(&h, &rho0, &bad, &times, 1e-10, &b).is_err());
    }

    #[test]
    fn second_order_general_integrates() {
        let b = gen_gellmann_basis(2).unwrap();
        let h = BlochState::from_slice(0.0, &[0.2, -0.1, 0.4]);
        let rho0 = BlochState::density(2, &[0.3, 0.1, 0.2]);
        let g = bloch_generator(&h, &b).unwrap();
        let rd = &g.j * &rho0.vec;
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
        let tr = propagate_second_order(&h, &rho0, &rd, &times, 1e-12, &b).unwrap();
        assert!(tr.monitor("omega").is_none());
        let ode = propagate_bloch_ode_const(&h, &rho0, &times, 1e-12, &b).unwrap();
        for (x, y) in tr.states.iter().zip(&ode.states) {
            assert!((&x.vec - &y.vec).amax() < 1e-8);
        }
    }

    #[test]
    fn midpoint_matches_spectral_for_constant_h() {
        let b = gen_gellmann_basis(3).unwrap();
        let h = b.combine(&[0.3, -0.2, 0.1, 0.5, 0.0, 0.2, -0.4, 0.1]);
        let rho0 = bloch_reconstruct(&BlochState::density(3, &[0.1, 0.0, 0.05, 0.0, 0.1, 0.0, 0.0, 0.1]), &b).unwrap();
        let exact = SpectralPropagator::new(&h, &rho0).unwrap().density_at(1.0);
        let mid = propagate_timeordered(|_| h.clone(), &rho0, 1.0, 1000, TimeOrdering::Midpoint).unwrap();
        assert!(max_abs(&(mid - &exact)) < 1e-10);
        let zero = propagate_timeordered(|_| h.clone(), &rho0, 0.0, 3, TimeOrdering::Midpoint).unwrap();
        assert!(max_abs(&(zero - &rho0)) < 1e-15);
        let s = bloch_decompose(&exact, &b).unwrap();
        assert!((s.scalar - 1.0 / 3.0).abs() < 1e-14);
    }
}
