//! Command implementations. Each returns an [`Outcome`] describing the
//! artifacts it wrote, the checks it ran and a JSON summary.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use super::config::{Command, Method, OperatorSpec, ScenarioConfig, StabilityMode, StabilitySpec};
use super::output::{matrix_json, read_csv, write_json, Table};
use crate::algebra::{bloch_decompose, bloch_reconstruct, gen_gellmann_basis, gen_gellmann_basis_with, BasisSet, BlochState, Ordering, DEFAULT_BASIS_CAP};
use crate::composite::{self, DimerState};
use crate::dynamics::{propagate_bloch_ode_const, propagate_spectral};
use crate::error::Error;
use crate::integrability::{lax_pair_from_omega, lax_residuals, operator_constants_report};
use crate::linalg::{c, eigh, ensure_hermitian, identity, CMat, RMat, C64};
use crate::rigidbody::{euler_rhs, integrate_euler, integrate_euler_projected, polhode_geometry, symmetric_top_solution, AsymmetricTop};
use crate::stability;

/// Largest allowed |analytic − numeric| for the closed-form qubit top.
pub const CLOSED_FORM_TOL: f64 = 1e-6;
/// Largest allowed ‖L̇ − [M, L]‖ along a trajectory.
pub const LAX_RESIDUAL_TOL: f64 = 1e-7;
/// Largest allowed finite-difference residual of the dimer equations.
pub const DIMER_RESIDUAL_TOL: f64 = 1e-6;
/// Largest allowed deviation of the concurrence from |sin 2ωt|.
pub const CONCURRENCE_TOL: f64 = 1e-9;
/// Relative error allowed between the fitted and predicted growth exponent.
pub const GROWTH_RTOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(Vec<String>),
    Input(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error:\n  {}", m.join("\n  ")),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::StepUnderflow { .. } | Error::Numerical(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, pass: value <= limit }
    }

    pub fn to_json(&self) -> Value {
        json!({ "name": self.name, "value": self.value, "limit": self.limit, "pass": self.pass })
    }
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub artifacts: Vec<String>,
    /// File whose monitor columns produced `drift`.
    pub drift_source: Option<String>,
    /// (name, relative drift, absolute drift).
    pub drift: Vec<(String, f64, f64)>,
    pub checks: Vec<Check>,
    pub summary: Value,
}

/// max_t |x(t) − x(0)|.
pub fn absolute_drift(series: &[f64]) -> f64 {
    let Some(&x0) = series.first() else { return 0.0 };
    series.iter().fold(0.0f64, |m, &x| m.max((x - x0).abs()))
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    out: &'a Path,
    outcome: Outcome,
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn csv(&mut self, name: &str, t: &Table) -> CResult<()> {
        t.write_csv(&self.path(name))?;
        self.outcome.artifacts.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, v: &Value) -> CResult<()> {
        write_json(&self.path(name), v)?;
        self.outcome.artifacts.push(name.to_string());
        Ok(())
    }

    /// Records the drift of every monitor column and checks it against the
    /// invariant tolerance (relative, or absolute for near-zero quantities).
    fn drift_from(&mut self, source: &str, t: &Table) {
        let tol = self.cfg.invariant_tol;
        self.outcome.drift_source = Some(source.to_string());
        for (name, rel) in t.drift() {
            let abs = absolute_drift(t.column(&name).expect("monitor column"));
            self.outcome.checks.push(Check { name: format!("drift:{name}"), value: rel.min(abs), limit: tol, pass: rel.min(abs) <= tol });
            self.outcome.drift.push((name, rel, abs));
        }
    }

    fn check(&mut self, ch: Check) {
        self.outcome.checks.push(ch);
    }
}

pub fn execute(cfg: &ScenarioConfig, out: &Path) -> CResult<Outcome> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut ctx = Ctx { cfg, out, outcome: Outcome::default() };
    match cfg.command {
        Command::Basis => basis(&mut ctx)?,
        Command::Evolve => evolve(&mut ctx)?,
        Command::Euler => euler(&mut ctx)?,
        Command::Stability => stability_cmd(&mut ctx)?,
        Command::LaxCheck => lax_check(&mut ctx)?,
        Command::Dimer => dimer(&mut ctx)?,
        Command::Entangle => entangle(&mut ctx)?,
    }
    Ok(ctx.outcome)
}

fn basis(ctx: &mut Ctx) -> CResult<()> {
    let b = gen_gellmann_basis_with(ctx.cfg.d, ctx.cfg.ordering, DEFAULT_BASIS_CAP)?;
    ctx.json("basis.json", &b.to_json())?;
    ctx.outcome.summary = json!({ "d": b.d, "count": b.len() });
    Ok(())
}

fn random_pure_state(dim: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut psi: Vec<C64> = (0..dim).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|z| *z /= norm);
    CMat::from_fn(dim, dim, |i, j| psi[i] * psi[j].conj())
}

/// Dense matrix of a Hamiltonian (`is_state = false`) or density operator.
fn operator_matrix(spec: &OperatorSpec, dim: usize, basis: &BasisSet, is_state: bool, seed: u64) -> CResult<CMat> {
    let what = if is_state { "state" } else { "hamiltonian" };
    let m = match spec {
        OperatorSpec::Coefficients(v) => {
            let n = dim * dim - 1;
            let st = if v.len() == n {
                BlochState::from_slice(if is_state { 1.0 / dim as f64 } else { 0.0 }, v)
            } else if v.len() == n + 1 {
                BlochState::from_slice(v[0], &v[1..])
            } else {
                return Err(CliError::Config(vec![format!("field `{what}.coefficients` needs {n} or {} entries for dimension {dim}, got {}", n + 1, v.len())]));
            };
            bloch_reconstruct(&st, basis)?
        }
        OperatorSpec::Matrix(m) => {
            if m.nrows() != dim {
                return Err(CliError::Config(vec![format!("`{what}` matrix is {0}×{0}, expected {dim}×{dim}", m.nrows())]));
            }
            m.clone()
        }
        OperatorSpec::Model { name, j, b, omega } if name == "dimer" => {
            if dim != 4 {
                return Err(CliError::Config(vec![format!("model `dimer` needs d = 2, n = 2 (dimension 4), got dimension {dim}")]));
            }
            composite::heisenberg_dimer(*j, *b)?.0
        }
        OperatorSpec::Model { omega, .. } => {
            let mut m = CMat::zeros(dim, dim);
            m[(0, dim - 1)] = c(*omega, 0.0);
            m[(dim - 1, 0)] = c(*omega, 0.0);
            m
        }
        OperatorSpec::Named { name, level } => match name.as_str() {
            "basis" => {
                if *level >= dim {
                    return Err(CliError::Config(vec![format!("field `{what}.level` = {level} out of range 0..{dim}")]));
                }
                let mut m = CMat::zeros(dim, dim);
                m[(*level, *level)] = c(1.0, 0.0);
                m
            }
            "maximally-mixed" => identity(dim) / c(dim as f64, 0.0),
            _ => random_pure_state(dim, seed),
        },
    };
    if is_state {
        composite::check_density(&m, 1e-8)?;
    } else {
        ensure_hermitian(&m, 1e-10)?;
    }
    Ok(m)
}

fn total_dim(d: usize, n: usize) -> CResult<usize> {
    d.checked_pow(n as u32)
        .filter(|&t| t <= composite::DEFAULT_COMPOSITE_CAP)
        .ok_or_else(|| CliError::Input(format!("d^n exceeds the cap {}", composite::DEFAULT_COMPOSITE_CAP)))
}

fn subset_label(subset: &[usize]) -> String {
    subset.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(".")
}

fn evolve(ctx: &mut Ctx) -> CResult<()> {
    let cfg = ctx.cfg;
    let dim = total_dim(cfg.d, cfg.n)?;
    let basis = gen_gellmann_basis_with(dim, cfg.ordering, DEFAULT_BASIS_CAP)?;
    let h = operator_matrix(cfg.hamiltonian.as_ref().expect("validated"), dim, &basis, false, cfg.seed)?;
    let rho0 = operator_matrix(cfg.state.as_ref().expect("validated"), dim, &basis, true, cfg.seed)?;
    let hb = bloch_decompose(&h, &basis)?;
    let traj = match cfg.method {
        Method::Spectral => propagate_spectral(&h, &rho0, &cfg.times, &basis)?,
        Method::Ode => {
            let mut tr = propagate_bloch_ode_const(&hb, &bloch_decompose(&rho0, &basis)?, &cfg.times, cfg.ode_tol, &basis)?;
            tr.add_state_monitors();
            tr
        }
    };

    let mut table = Table::default();
    table.push("time", cfg.times.clone());
    for k in 0..basis.len() {
        table.push(format!("vec_{}", k + 1), traj.states.iter().map(|s| s.vec[k]).collect());
    }
    let purity = traj.states.iter().map(|s| s.purity(dim)).collect();
    let length = traj.states.iter().map(|s| s.vec.norm()).collect();
    let energy = traj.states.iter().map(|s| dim as f64 * hb.scalar * s.scalar + 2.0 * hb.vec.dot(&s.vec)).collect();
    table.push_monitor("purity", purity);
    table.push_monitor("bloch_length", length);
    table.push_monitor("energy", energy);
    let report = operator_constants_report(&h, &traj, &basis, 4)?;
    for (name, values) in report.names.iter().zip(report.values_over_time) {
        table.push_monitor(name, values);
    }
    ctx.csv("trajectory.csv", &table)?;
    ctx.drift_from("trajectory.csv", &table);

    let mut monitors = Map::new();
    for name in &table.monitors {
        monitors.insert(name.clone(), json!(table.column(name)));
    }
    let mirror = json!({
        "d": dim,
        "ordering": basis.ordering,
        "times": cfg.times,
        "scalar": traj.states.first().map(|s| s.scalar),
        "states": traj.states.iter().map(|s| s.vec.as_slice().to_vec()).collect::<Vec<_>>(),
        "monitors": monitors,
    });
    ctx.json("trajectory.json", &mirror)?;

    if cfg.n > 1 {
        let mut comp = Table::default();
        comp.push("time", cfg.times.clone());
        let coeffs = traj
            .states
            .iter()
            .map(|s| composite::multipartite_decompose(&bloch_reconstruct(s, &basis)?, cfg.d, cfg.n))
            .collect::<crate::Result<Vec<_>>>()?;
        comp.push("scalar", coeffs.iter().map(|cf| cf.scalar).collect());
        for subset in composite::party_subsets(cfg.n) {
            let label = subset_label(&subset);
            for k in 0..coeffs[0].tensor(&subset).len() {
                comp.push(format!("c{label}_{}", k + 1), coeffs.iter().map(|cf| cf.tensor(&subset)[k]).collect());
            }
        }
        ctx.csv("composite.csv", &comp)?;
    }
    ctx.outcome.summary = json!({
        "dimension": dim,
        "method": match cfg.method { Method::Spectral => "spectral", Method::Ode => "ode" },
        "samples": cfg.times.len(),
        "hamiltonian_bloch": { "scalar": hb.scalar, "vec": hb.vec.as_slice() },
    });
    Ok(())
}

const REFLECTIONS: [[f64; 3]; 4] = [[1.0, 1.0, 1.0], [-1.0, -1.0, 1.0], [-1.0, 1.0, -1.0], [1.0, -1.0, -1.0]];

/// Phase shift and π-rotation that place `w0` on the closed-form orbit.
fn align_top(top: &AsymmetricTop, w0: [f64; 3], moments: [f64; 3], basis: &BasisSet) -> crate::Result<(f64, [f64; 3], f64)> {
    let dist2 = |t: f64, s: &[f64; 3]| -> crate::Result<f64> {
        let w = top.omega(t)?;
        Ok((0..3).map(|k| (s[k] * w[k] - w0[k]).powi(2)).sum())
    };
    // g(t) = ½ d/dt |S ω(t) − w0|², zero at the aligned phase
    let g = |t: f64, s: &[f64; 3]| -> crate::Result<f64> {
        let w = top.omega(t)?;
        let wd = euler_rhs(&w, &moments, basis)?;
        Ok((0..3).map(|k| (s[k] * w[k] - w0[k]) * s[k] * wd[k]).sum())
    };
    let samples = 1024;
    let dt = top.period / samples as f64;
    let mut best = (f64::INFINITY, 0.0, REFLECTIONS[0]);
    for s in REFLECTIONS {
        for i in 0..samples {
            let t = i as f64 * dt;
            let e = dist2(t, &s)?;
            if e < best.0 {
                best = (e, t, s);
            }
        }
    }
    let (_, mut t, s) = best;
    // secant refinement on g
    let (mut a, mut b) = (t - 0.5 * dt, t + 0.5 * dt);
    let (mut ga, mut gb) = (g(a, &s)?, g(b, &s)?);
    for _ in 0..60 {
        if gb == ga {
            break;
        }
        let next = b - gb * (b - a) / (gb - ga);
        if !next.is_finite() || (next - t).abs() > dt {
            break;
        }
        t = next;
        a = b;
        ga = gb;
        b = next;
        gb = g(b, &s)?;
        if (b - a).abs() <= 1e-15 * top.period {
            break;
        }
    }
    Ok((t, s, dist2(t, &s)?.sqrt()))
}

fn euler(ctx: &mut Ctx) -> CResult<()> {
    let cfg = ctx.cfg;
    let spec = cfg.euler.as_ref().expect("validated");
    let basis = gen_gellmann_basis_with(cfg.d, cfg.ordering, DEFAULT_BASIS_CAP)?;
    let integrator = if spec.project { integrate_euler_projected } else { integrate_euler };
    let traj = integrator(&spec.omega0, &spec.moments, &basis, &cfg.times, cfg.ode_tol)?;
    let n = basis.len();
    let mut table = Table::default();
    table.push("time", cfg.times.clone());
    for k in 0..n {
        table.push(format!("omega_{}", k + 1), traj.states.iter().map(|s| s.vec[k]).collect());
    }
    for (name, values) in &traj.monitors {
        table.push_monitor(name, values.clone());
    }
    let mut summary = Map::new();
    if cfg.d == 2 && spec.analytic {
        let m = [spec.moments[0], spec.moments[1], spec.moments[2]];
        let w0 = [spec.omega0[0], spec.omega0[1], spec.omega0[2]];
        let tie = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        let analytic: Option<Vec<[f64; 3]>> = if tie(m[0], m[1]) {
            summary.insert("closed_form".into(), json!("symmetric"));
            Some(cfg.times.iter().map(|&t| symmetric_top_solution(w0, m, t)).collect::<crate::Result<_>>()?)
        } else if tie(m[1], m[2]) || tie(m[0], m[2]) {
            summary.insert("closed_form".into(), json!("unavailable: the symmetric closed form needs I1 = I2"));
            None
        } else {
            let ell = crate::rigidbody::euler_ell_squared(&w0, &m).sqrt();
            let energy = crate::rigidbody::euler_energy(&w0, &m);
            match AsymmetricTop::new(m, ell, energy) {
                Ok(top) => {
                    let (shift, signs, miss) = align_top(&top, w0, m, &basis)?;
                    summary.insert(
                        "closed_form".into(),
                        json!({
                            "kind": "asymmetric",
                            "branch": format!("{:?}", top.branch).to_lowercase(),
                            "modulus": top.modulus,
                            "period": top.period,
                            "phase_shift": shift,
                            "reflection": signs,
                            "initial_mismatch": miss,
                        }),
                    );
                    Some(
                        cfg.times
                            .iter()
                            .map(|&t| top.omega(t + shift).map(|w| [signs[0] * w[0], signs[1] * w[1], signs[2] * w[2]]))
                            .collect::<crate::Result<_>>()?,
                    )
                }
                Err(Error::Separatrix { varpi }) => {
                    summary.insert("closed_form".into(), json!(format!("unavailable: separatrix, ell^2/2H = {varpi}")));
                    None
                }
                Err(e) => return Err(e.into()),
            }
        };
        if let Some(an) = analytic {
            let mut dev = 0.0f64;
            for k in 0..3 {
                let col: Vec<f64> = an.iter().map(|w| w[k]).collect();
                let num = table.column(&format!("omega_{}", k + 1)).expect("omega column");
                dev = dev.max(num.iter().zip(&col).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())));
                table.push(format!("analytic_{}", k + 1), col);
            }
            ctx.check(Check::at_most("closed_form_deviation", dev, CLOSED_FORM_TOL));
        }
        if let Ok(p) = polhode_geometry(m) {
            summary.insert("polhode".into(), json!({ "s1": p.s1, "s3": p.s3, "separatrix_slope": p.separatrix_slope }));
        }
    }
    ctx.csv("euler.csv", &table)?;
    ctx.drift_from("euler.csv", &table);
    let mut cloud = Table::default();
    for k in 0..n {
        cloud.push(format!("ell_{}", k + 1), traj.states.iter().map(|s| s.vec[k] * spec.moments[k]).collect());
    }
    ctx.csv("polhode.csv", &cloud)?;
    ctx.outcome.summary = Value::Object(summary);
    Ok(())
}

fn complex_list(zs: &[C64]) -> Value {
    Value::Array(zs.iter().map(|z| json!([z.re, z.im])).collect())
}

struct StabilityPoint {
    verdict: Value,
    checks: Vec<Check>,
    growth: Option<Table>,
    stable: bool,
}

fn stability_point(s: &StabilitySpec, times: &[f64], ode_tol: f64) -> CResult<StabilityPoint> {
    let mut checks = Vec::new();
    let mut growth = None;
    let verdict = match s.mode {
        StabilityMode::Qubit => {
            let m = [s.moments[0], s.moments[1], s.moments[2]];
            let v = stability::intermediate_axis_qubit(m, s.axis, s.omega0)?;
            let freq_sq = stability::qubit_frequency_sq(m, s.axis, s.omega0);
            let mut out = json!({
                "mode": "qubit",
                "axis": s.axis + 1,
                "classification": v.classification.as_str(),
                "eigenvalues": complex_list(&v.eigenvalues),
                "axis_flags": v.axis_flags.iter().map(|f| f.as_str()).collect::<Vec<_>>(),
                "characteristic_frequencies": v.characteristic_frequencies,
                "frequency_sq": freq_sq,
            });
            if s.growth {
                let mut delta = [s.perturbation; 3];
                delta[s.axis] = 0.0;
                let d0 = s.perturbation * 2f64.sqrt();
                let series = stability::perturbation_growth(m, s.axis, s.omega0, delta, times, ode_tol)?;
                let mut t = Table::default();
                t.push("time", times.to_vec());
                t.push("delta_norm", series.clone());
                t.push("ratio", series.iter().map(|x| x / d0).collect());
                growth = Some(t);
                let max_ratio = series.iter().fold(0.0f64, |a, x| a.max(x / d0));
                out["max_growth_ratio"] = json!(max_ratio);
                if v.classification.is_stable() {
                    checks.push(Check::at_most("bounded_perturbation", max_ratio, 10.0));
                } else {
                    // linear regime: past the transient and well below the spin rate
                    let (ts, ys): (Vec<f64>, Vec<f64>) = times
                        .iter()
                        .zip(&series)
                        .filter(|(_, y)| **y >= 10.0 * d0 && **y <= 1e-2 * s.omega0.abs())
                        .map(|(t, y)| (*t, *y))
                        .unzip();
                    let predicted = freq_sq.sqrt();
                    match stability::fit_growth_exponent(&ts, &ys) {
                        Ok(fit) => {
                            out["fitted_exponent"] = json!(fit);
                            checks.push(Check::at_most("growth_exponent", (fit - predicted).abs() / predicted, GROWTH_RTOL));
                        }
                        Err(_) => out["fitted_exponent"] = json!("unavailable: linear regime not reached on the time grid"),
                    }
                }
            }
            out
        }
        StabilityMode::Su3 => {
            let basis = gen_gellmann_basis_with(3, Ordering::Standard, DEFAULT_BASIS_CAP)?;
            let lin = stability::linearize_euler_su3(&s.moments, s.omega03, s.omega08, &basis)?;
            let blocks: Vec<Value> = lin
                .blocks
                .iter()
                .map(|b| {
                    json!({
                        "indices": [b.indices.0 + 1, b.indices.1 + 1],
                        "eigenvalues": complex_list(&b.eigenvalues),
                        "inertia_h": b.inertia_h,
                        "alpha": b.alpha,
                        "frequency_sq": b.frequency_sq,
                        "h_between": b.h_between,
                        "classification": b.classification.as_str(),
                    })
                })
                .collect();
            json!({
                "mode": "su3",
                "omega03": s.omega03,
                "omega08": s.omega08,
                "classification": lin.verdict.classification.as_str(),
                "eigenvalues": complex_list(&lin.verdict.eigenvalues),
                "blocks": blocks,
            })
        }
        StabilityMode::EnergyCasimir => {
            let basis = gen_gellmann_basis_with(3, Ordering::Standard, DEFAULT_BASIS_CAP)?;
            let rep = stability::energy_casimir_su3(&s.moments, s.omega03, s.omega08, &basis)?;
            let cf = stability::energy_casimir_closed_form(&s.moments, s.omega03, s.omega08)?;
            let fd_dev = (0..8).fold(0.0f64, |m, j| m.max((rep.hessian_fd[(j, j)] - rep.hessian_diagonal[j]).abs()));
            checks.push(Check::at_most("critical_point", rep.first_variation, 1e-8));
            checks.push(Check::at_most("hessian_fd_deviation", fd_dev, 1e-6));
            json!({
                "mode": "energy-casimir",
                "omega03": s.omega03,
                "omega08": s.omega08,
                "mu": rep.mu,
                "nu": rep.nu,
                "hessian_diagonal": rep.hessian_diagonal,
                "closed_form": { "h1": cf[0], "h_i": cf[1], "h_k": cf[2] },
                "tangent_eigenvalues": rep.tangent_eigenvalues,
                "first_variation": rep.first_variation,
                "nonlinear": rep.nonlinear_stable.as_str(),
            })
        }
        StabilityMode::Jacobian => {
            let rows = s.jacobian.as_ref().expect("validated");
            let n = rows.len();
            let j = RMat::from_fn(n, n, |r, c| rows[r][c]);
            let v = stability::routh_hurwitz(&j);
            json!({
                "mode": "jacobian",
                "classification": v.classification.as_str(),
                "eigenvalues": complex_list(&v.eigenvalues),
            })
        }
    };
    let stable = match verdict.get("nonlinear") {
        Some(v) => v == "stable",
        None => verdict["classification"] != "unstable",
    };
    Ok(StabilityPoint { verdict, checks, growth, stable })
}

fn stability_cmd(ctx: &mut Ctx) -> CResult<()> {
    let cfg = ctx.cfg;
    if !cfg.sweep.is_empty() {
        return stability_sweep(ctx);
    }
    let p = stability_point(cfg.stability.as_ref().expect("validated"), &cfg.times, cfg.ode_tol)?;
    if let Some(t) = &p.growth {
        ctx.csv("growth.csv", t)?;
    }
    p.checks.into_iter().for_each(|c| ctx.check(c));
    ctx.json("verdict.json", &p.verdict)?;
    ctx.outcome.summary = json!({ "classification": p.verdict["classification"] });
    Ok(())
}

/// Runs every grid point on a pool of scoped threads; results are merged in
/// grid order, so the artifacts do not depend on scheduling.
fn stability_sweep(ctx: &mut Ctx) -> CResult<()> {
    let cfg = ctx.cfg;
    let points = &cfg.sweep;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(points.len());
    let mut results: Vec<Option<CResult<StabilityPoint>>> = (0..points.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..points.len()).step_by(workers).map(|i| (i, stability_point(&points[i], &cfg.times, cfg.ode_tol))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("sweep worker panicked") {
                results[i] = Some(r);
            }
        }
    });

    let nm = points[0].moments.len();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); nm + 5];
    let mut entries = Vec::new();
    let mut stable_count = 0;
    for (i, (spec, res)) in points.iter().zip(results).enumerate() {
        let p = res.expect("every point assigned").map_err(|e| match e {
            CliError::Config(m) => CliError::Config(m.into_iter().map(|m| format!("sweep point {}: {m}", i + 1)).collect()),
            other => other,
        })?;
        for c in p.checks {
            ctx.check(Check { name: format!("point{}:{}", i + 1, c.name), ..c });
        }
        stable_count += p.stable as usize;
        let row: Vec<f64> = spec
            .moments
            .iter()
            .copied()
            .chain([(spec.axis + 1) as f64, spec.omega0, spec.omega03, spec.omega08, if p.stable { 1.0 } else { 0.0 }])
            .collect();
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
        entries.push(json!({
            "index": i + 1,
            "moments": spec.moments,
            "axis": spec.axis + 1,
            "omega0": spec.omega0,
            "omega03": spec.omega03,
            "omega08": spec.omega08,
            "stable": p.stable,
            "verdict": p.verdict,
        }));
    }
    let mut t = Table::default();
    t.push("index", (1..=points.len()).map(|i| i as f64).collect());
    let names = (1..=nm).map(|k| format!("I_{k}")).chain(["axis", "omega0", "omega03", "omega08", "stable"].map(String::from));
    for (name, col) in names.zip(cols) {
        t.push(name, col);
    }
    ctx.csv("sweep.csv", &t)?;
    ctx.json("sweep.json", &json!({ "points": entries }))?;
    ctx.outcome.summary = json!({ "points": points.len(), "stable": stable_count });
    Ok(())
}

fn lax_check(ctx: &mut Ctx) -> CResult<()> {
    let cfg = ctx.cfg;
    let spec = cfg.lax.as_ref().expect("validated");
    let m = spec.moments;
    let (times, omegas, source) = match &spec.trajectory {
        Some(path) => {
            let t = read_csv(path).map_err(CliError::Input)?;
            let col = |name: &str| {
                t.column(name)
                    .map(<[f64]>::to_vec)
                    .ok_or_else(|| CliError::Input(format!("{}: missing column `{name}`", path.display())))
            };
            let times = col("time")?;
            let w: Vec<Vec<f64>> = (1..=3).map(|k| col(&format!("omega_{k}"))).collect::<CResult<_>>()?;
            let omegas: Vec<Vec<f64>> = (0..times.len()).map(|i| vec![w[0][i], w[1][i], w[2][i]]).collect();
            (times, omegas, path.display().to_string())
        }
        None => {
            let basis = gen_gellmann_basis(2)?;
            let w0 = spec.omega0.expect("validated");
            let tr = integrate_euler(&w0, &m, &basis, &cfg.times, cfg.ode_tol)?;
            (cfg.times.clone(), tr.states.iter().map(|s| s.vec.as_slice().to_vec()).collect(), "integrated".to_string())
        }
    };
    let mut table = Table::default();
    table.push("time", times.clone());
    let coeffs = omegas.iter().map(|w| lax_pair_from_omega(w, m).map(|p| p.trace_l2_coefficients())).collect::<crate::Result<Vec<_>>>()?;
    for k in 0..3 {
        table.push_monitor(&format!("trL2_c{k}"), coeffs.iter().map(|c| c[k]).collect());
    }
    table.push_monitor("energy", omegas.iter().map(|w| crate::rigidbody::euler_energy(w, &m)).collect());
    table.push_monitor("ell_squared", omegas.iter().map(|w| crate::rigidbody::euler_ell_squared(w, &m)).collect());
    ctx.csv("lax.csv", &table)?;
    ctx.drift_from("lax.csv", &table);

    let mut res = Table::default();
    res.push("time", times.get(2..times.len().saturating_sub(2)).unwrap_or_default().to_vec());
    let mut residual_max = Map::new();
    for &lambda in &spec.lambdas {
        let r = lax_residuals(&times, &omegas, m, lambda)?;
        let worst = r.iter().copied().fold(0.0, f64::max);
        residual_max.insert(format!("{lambda}"), json!(worst));
        ctx.check(Check::at_most(format!("lax_residual:{lambda}"), worst, LAX_RESIDUAL_TOL));
        res.push(format!("residual_{lambda}"), r);
    }
    ctx.csv("lax_residual.csv", &res)?;
    let drift: Map<String, Value> = ctx.outcome.drift.iter().map(|(n, r, a)| (n.clone(), json!({ "relative": r, "absolute": a }))).collect();
    let report = json!({
        "source": source,
        "moments": m,
        "lambdas": spec.lambdas,
        "residual_max": residual_max,
        "drift": drift,
    });
    ctx.json("lax.json", &report)?;
    ctx.outcome.summary = json!({ "residual_max": report["residual_max"] });
    Ok(())
}

/// max over interior samples of |five-point derivative − f(state)|.
fn fd_residual(times: &[f64], xs: &[Vec<f64>], rhs: &[Vec<f64>]) -> CResult<f64> {
    if times.len() < 5 {
        return Err(CliError::Config(vec!["the finite-difference residual needs at least five samples".into()]));
    }
    let h = times[1] - times[0];
    if times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
        return Err(CliError::Config(vec!["the finite-difference residual needs a uniform time grid".into()]));
    }
    let mut worst = 0.0f64;
    for i in 2..times.len() - 2 {
        for k in 0..xs[i].len() {
            let d = (xs[i - 2][k] - 8.0 * xs[i - 1][k] + 8.0 * xs[i + 1][k] - xs[i + 2][k]) / (12.0 * h);
            worst = worst.max((d - rhs[i][k]).abs());
        }
    }
    Ok(worst)
}

fn dimer(ctx: &mut Ctx) -> CResult<()> {
    let cfg = ctx.cfg;
    let (j, b) = cfg.dimer;
    let basis4 = gen_gellmann_basis(4)?;
    let rho0 = match &cfg.state {
        Some(spec) => operator_matrix(spec, 4, &basis4, true, cfg.seed)?,
        None => operator_matrix(&OperatorSpec::Named { name: "basis".into(), level: 1 }, 4, &basis4, true, cfg.seed)?,
    };
    let (h, _) = composite::heisenberg_dimer(j, b)?;
    let states = composite::dimer_spectral_solution(&rho0, j, b, &cfg.times)?;
    let vecs: Vec<Vec<f64>> = states.iter().map(DimerState::as_vec).collect();
    let mut table = Table::default();
    table.push("time", cfg.times.clone());
    let names = (1..=3)
        .map(|k| format!("r_{k}"))
        .chain((1..=3).map(|k| format!("s_{k}")))
        .chain((1..=3).flat_map(|x| (1..=3).map(move |y| format!("t_{x}{y}"))));
    for (k, name) in names.enumerate() {
        table.push(name, vecs.iter().map(|v| v[k]).collect());
    }
    let rhos = states.iter().map(DimerState::to_density).collect::<crate::Result<Vec<_>>>()?;
    table.push_monitor("purity", rhos.iter().map(composite::purity).collect());
    table.push_monitor("energy", rhos.iter().map(|r| (&h * r).trace().re).collect());
    ctx.csv("dimer.csv", &table)?;
    ctx.drift_from("dimer.csv", &table);

    let rhs: Vec<Vec<f64>> = states.iter().map(|s| composite::dimer_rhs(s, j, b).as_vec()).collect();
    let residual = fd_residual(&cfg.times, &vecs, &rhs)?;
    ctx.check(Check::at_most("dimer_fd_residual", residual, DIMER_RESIDUAL_TOL));
    let (mut spectrum, _) = eigh(&h);
    spectrum.sort_by(f64::total_cmp);
    if b == 0.0 {
        let expect = [-3.0 * j, j, j, j];
        let mut e = expect;
        e.sort_by(f64::total_cmp);
        let dev = spectrum.iter().zip(e).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        ctx.check(Check::at_most("spectrum", dev, 1e-12));
    }
    ctx.outcome.summary = json!({
        "j": j,
        "b": b,
        "spectrum": spectrum,
        "fd_residual": residual,
        "initial_state": matrix_json(&rho0),
    });
    Ok(())
}

fn entangle(ctx: &mut Ctx) -> CResult<()> {
    let cfg = ctx.cfg;
    let e = &cfg.entangle;
    let total = total_dim(e.d, e.n)?;
    let rest = total / e.d;
    let mut conc = Vec::new();
    let mut entropy = Vec::new();
    let mut rpur = Vec::new();
    let mut norm = Vec::new();
    let mut states = Vec::new();
    for &t in &cfg.times {
        let psi = composite::oscillating_state(e.d, e.n, &e.omegas, e.k_ref, t)?;
        let m = composite::entanglement_measures(&psi, (e.d, rest))?;
        if let Some(cc) = m.concurrence {
            conc.push(cc);
        }
        entropy.push(m.entropy);
        rpur.push(composite::purity(&composite::reduced_density(&psi, e.d, e.n, 0)?));
        norm.push(psi.norm());
        states.push(Value::Array(psi.iter().map(|z| json!([z.re, z.im])).collect()));
    }
    let mut table = Table::default();
    table.push("time", cfg.times.clone());
    let two_qubits = e.d == 2 && e.n == 2;
    if two_qubits {
        table.push("concurrence", conc.clone());
    }
    table.push("entropy", entropy);
    table.push("reduced_purity", rpur);
    table.push_monitor("norm", norm);
    ctx.csv("entangle.csv", &table)?;
    ctx.drift_from("entangle.csv", &table);
    ctx.json("state.json", &json!({ "d": e.d, "n": e.n, "times": cfg.times, "states": states }))?;
    if two_qubits && e.omegas.len() == 1 {
        let w = e.omegas[0];
        let dev = cfg.times.iter().zip(&conc).fold(0.0f64, |m, (t, cc)| m.max((cc - (2.0 * w * t).sin().abs()).abs()));
        ctx.check(Check::at_most("concurrence_closed_form", dev, CONCURRENCE_TOL));
    }
    ctx.outcome.summary = json!({ "d": e.d, "n": e.n, "omegas": e.omegas, "k_ref": e.k_ref });
    Ok(())
}
