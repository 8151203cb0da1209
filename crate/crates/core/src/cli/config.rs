//! Scenario configuration: TOML schema, defaults and validation.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{json, Value};

use crate::algebra::Ordering;
use crate::linalg::{c, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Basis,
    Evolve,
    Euler,
    Stability,
    LaxCheck,
    Dimer,
    Entangle,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Basis,
        Command::Evolve,
        Command::Euler,
        Command::Stability,
        Command::LaxCheck,
        Command::Dimer,
        Command::Entangle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Basis => "basis",
            Command::Evolve => "evolve",
            Command::Euler => "euler",
            Command::Stability => "stability",
            Command::LaxCheck => "lax-check",
            Command::Dimer => "dimer",
            Command::Entangle => "entangle",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// A matrix entry: a real number or a `[re, im]` pair.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOperator {
    coefficients: Option<Vec<f64>>,
    matrix: Option<Vec<Vec<Entry>>>,
    matrix_file: Option<PathBuf>,
    model: Option<String>,
    named: Option<String>,
    level: Option<usize>,
    j: Option<f64>,
    b: Option<f64>,
    omega: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    d: Option<usize>,
    n: Option<usize>,
    ordering: Option<Ordering>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    t0: Option<f64>,
    t1: Option<f64>,
    steps: Option<usize>,
    points: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    ode: Option<f64>,
    invariant: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEuler {
    moments: Option<Vec<f64>>,
    omega0: Option<Vec<f64>>,
    analytic: Option<bool>,
    project: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStability {
    mode: Option<String>,
    moments: Option<Vec<f64>>,
    axis: Option<usize>,
    omega0: Option<f64>,
    omega03: Option<f64>,
    omega08: Option<f64>,
    perturbation: Option<f64>,
    growth: Option<bool>,
    jacobian: Option<Vec<Vec<f64>>>,
}

/// Grid axes for `stability --sweep`; each defaults to the single base value.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    moments: Option<Vec<Vec<f64>>>,
    axis: Option<Vec<usize>>,
    omega0: Option<Vec<f64>>,
    omega03: Option<Vec<f64>>,
    omega08: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLax {
    moments: Option<Vec<f64>>,
    omega0: Option<Vec<f64>>,
    lambdas: Option<Vec<f64>>,
    trajectory: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDimer {
    j: Option<f64>,
    b: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntangle {
    d: Option<usize>,
    n: Option<usize>,
    omegas: Option<Vec<f64>>,
    k_ref: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<String>,
    seed: Option<u64>,
    method: Option<String>,
    system: Option<RawSystem>,
    hamiltonian: Option<RawOperator>,
    state: Option<RawOperator>,
    time: Option<RawTime>,
    tolerances: Option<RawTolerances>,
    euler: Option<RawEuler>,
    stability: Option<RawStability>,
    sweep: Option<RawSweep>,
    lax: Option<RawLax>,
    dimer: Option<RawDimer>,
    entangle: Option<RawEntangle>,
    output: Option<RawOutput>,
}

/// Hamiltonian or state specification.
#[derive(Debug, Clone)]
pub enum OperatorSpec {
    /// Bloch coefficients; for states the scalar part is 1/D.
    Coefficients(Vec<f64>),
    Matrix(CMat),
    /// Heisenberg `dimer` (coupling j, field b) or `pair-flip`
    /// ω(|0…0⟩⟨d−1…d−1| + h.c.) Hamiltonian.
    Model { name: String, j: f64, b: f64, omega: f64 },
    /// `basis` (level), `maximally-mixed` or `random` states.
    Named { name: String, level: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Spectral,
    Ode,
}

#[derive(Debug, Clone)]
pub struct EulerSpec {
    pub moments: Vec<f64>,
    pub omega0: Vec<f64>,
    pub analytic: bool,
    /// Project each step back onto the ℋ and ℓ² level sets.
    pub project: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityMode {
    Qubit,
    Su3,
    EnergyCasimir,
    Jacobian,
}

#[derive(Debug, Clone)]
pub struct StabilitySpec {
    pub mode: StabilityMode,
    pub moments: Vec<f64>,
    /// 0-based axis for the qubit analysis.
    pub axis: usize,
    pub omega0: f64,
    pub omega03: f64,
    pub omega08: f64,
    pub perturbation: f64,
    pub growth: bool,
    pub jacobian: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct LaxSpec {
    pub moments: [f64; 3],
    /// Initial ω when the trajectory is integrated here.
    pub omega0: Option<[f64; 3]>,
    pub lambdas: Vec<f64>,
    /// Trajectory CSV with `time` and `omega_1..omega_3` columns.
    pub trajectory: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct EntangleSpec {
    pub d: usize,
    pub n: usize,
    pub omegas: Vec<f64>,
    pub k_ref: usize,
}

/// Fully resolved scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub command: Command,
    pub seed: u64,
    pub method: Method,
    pub d: usize,
    pub n: usize,
    pub ordering: Ordering,
    pub hamiltonian: Option<OperatorSpec>,
    pub state: Option<OperatorSpec>,
    pub times: Vec<f64>,
    pub ode_tol: f64,
    pub invariant_tol: f64,
    pub euler: Option<EulerSpec>,
    pub stability: Option<StabilitySpec>,
    /// Grid points of a stability sweep, in declared order; empty unless `--sweep`.
    pub sweep: Vec<StabilitySpec>,
    pub lax: Option<LaxSpec>,
    pub dimer: (f64, f64),
    pub entangle: EntangleSpec,
    pub out_dir: PathBuf,
    /// Dotted names of every field filled from a default.
    pub defaulted: Vec<String>,
}

/// Diagnostics collected while resolving a configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigError {
    pub messages: Vec<String>,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.messages.join("\n"))
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn one(msg: impl Into<String>) -> Self {
        ConfigError { messages: vec![msg.into()] }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub d: Option<usize>,
    pub ordering: Option<Ordering>,
    pub sweep: bool,
}

struct Resolver {
    defaulted: Vec<String>,
    errors: Vec<String>,
}

impl Resolver {
    fn or<T: Clone>(&mut self, v: Option<T>, name: &str, default: T) -> T {
        match v {
            Some(x) => x,
            None => {
                self.defaulted.push(name.to_string());
                default
            }
        }
    }

    fn require<T>(&mut self, v: Option<T>, name: &str) -> Option<T> {
        if v.is_none() {
            self.errors.push(format!("missing required field `{name}`"));
        }
        v
    }

    fn positive(&mut self, v: f64, name: &str) -> f64 {
        if !(v > 0.0 && v.is_finite()) {
            self.errors.push(format!("field `{name}` must be positive and finite, got {v}"));
        }
        v
    }
}

const REQUIRED_FIELDS: &str = "required fields by command: evolve needs `hamiltonian` and `state`; \
euler needs `euler.moments` and `euler.omega0`; stability needs `stability.mode` and `stability.moments` \
(or `stability.jacobian`); lax-check needs `lax.moments` and `lax.omega0` or `lax.trajectory`; \
basis, dimer and entangle need nothing beyond `command`";

pub fn load(path: &Path, ov: &Overrides) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::one(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse(&text, base, ov)
}

/// Parses TOML text; relative `matrix_file` paths resolve against `base`.
pub fn parse(text: &str, base: &Path, ov: &Overrides) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::one(e.to_string().trim_end().to_string()))?;
    resolve(raw, base, ov)
}

/// Configuration with no file: only the command-line values and defaults.
pub fn from_overrides(ov: &Overrides) -> Result<ScenarioConfig, ConfigError> {
    resolve(RawConfig::default(), Path::new("."), ov)
}

fn resolve(raw: RawConfig, base: &Path, ov: &Overrides) -> Result<ScenarioConfig, ConfigError> {
    let mut r = Resolver { defaulted: Vec::new(), errors: Vec::new() };
    let command = match (&raw.command, ov.command) {
        (Some(s), cli) => match Command::parse(s) {
            Some(c) if cli.is_none() || cli == Some(c) => Some(c),
            Some(c) => {
                r.errors.push(format!("field `command` is `{}` but the `{}` subcommand was invoked", c.name(), cli.unwrap().name()));
                None
            }
            None => {
                let names: Vec<_> = Command::ALL.iter().map(|c| c.name()).collect();
                r.errors.push(format!("field `command`: unknown command `{s}` (expected one of {})", names.join(", ")));
                None
            }
        },
        (None, Some(c)) => Some(c),
        (None, None) => {
            r.errors.push("missing required field `command`".into());
            r.errors.push(REQUIRED_FIELDS.into());
            None
        }
    };
    let seed = match ov.seed {
        Some(s) => s,
        None => r.or(raw.seed, "seed", 0),
    };
    let method = match raw.method.as_deref() {
        None => r.or(None, "method", Method::Spectral),
        Some("spectral") => Method::Spectral,
        Some("ode") => Method::Ode,
        Some(other) => {
            r.errors.push(format!("field `method`: expected `spectral` or `ode`, got `{other}`"));
            Method::Spectral
        }
    };
    let sys = raw.system.unwrap_or_default();
    let d = match ov.d {
        Some(d) => d,
        None => r.or(sys.d, "system.d", 2),
    };
    if d < 2 {
        r.errors.push(format!("field `system.d` must be at least 2, got {d}"));
    }
    let n = r.or(sys.n, "system.n", 1);
    if n < 1 {
        r.errors.push("field `system.n` must be at least 1".into());
    }
    let ordering = match ov.ordering {
        Some(o) => o,
        None => r.or(sys.ordering, "system.ordering", Ordering::Grouped),
    };

    // finite-difference residuals need a fine default grid
    let default_steps = match command {
        Some(Command::LaxCheck) | Some(Command::Dimer) => 2000,
        _ => 100,
    };
    let times = resolve_time(&mut r, raw.time.unwrap_or_default(), default_steps);

    let tol = raw.tolerances.unwrap_or_default();
    let ode_tol = match ov.tol {
        Some(t) => r.positive(t, "--tol"),
        None => {
            let t = r.or(tol.ode, "tolerances.ode", 1e-12);
            r.positive(t, "tolerances.ode")
        }
    };
    let invariant_tol = r.or(tol.invariant, "tolerances.invariant", 1e-8);
    r.positive(invariant_tol, "tolerances.invariant");

    let needs = |c: Command| command == Some(c);
    let hamiltonian = match raw.hamiltonian {
        Some(h) => resolve_operator(&mut r, h, "hamiltonian", base),
        None => {
            if needs(Command::Evolve) {
                r.errors.push("missing required field `hamiltonian`".into());
            }
            None
        }
    };
    let state = match raw.state {
        Some(s) => resolve_operator(&mut r, s, "state", base),
        None => {
            if needs(Command::Evolve) {
                r.errors.push("missing required field `state`".into());
            }
            if needs(Command::Dimer) {
                r.defaulted.push("state".into());
            }
            None
        }
    };

    let euler = if needs(Command::Euler) {
        let e = raw.euler.unwrap_or_default();
        let moments = r.require(e.moments, "euler.moments");
        let omega0 = r.require(e.omega0, "euler.omega0");
        let analytic = r.or(e.analytic, "euler.analytic", true);
        let project = r.or(e.project, "euler.project", false);
        let nl = d * d - 1;
        if let (Some(m), Some(w)) = (&moments, &omega0) {
            if m.len() != nl || w.len() != nl {
                r.errors.push(format!("fields `euler.moments` and `euler.omega0` need {nl} entries for d = {d}"));
            }
            if m.iter().any(|x| !(*x > 0.0)) {
                r.errors.push("field `euler.moments` must be positive".into());
            }
        }
        moments.zip(omega0).map(|(moments, omega0)| EulerSpec { moments, omega0, analytic, project })
    } else {
        None
    };

    let stability = if needs(Command::Stability) {
        Some(resolve_stability(&mut r, raw.stability.unwrap_or_default()))
    } else {
        None
    };

    let sweep = match (raw.sweep, &stability) {
        (Some(sw), Some(base)) => resolve_sweep(&mut r, sw, base),
        (Some(_), None) => {
            r.errors.push("field `sweep`: sweeps apply to the stability command only".into());
            Vec::new()
        }
        (None, _) => Vec::new(),
    };
    if ov.sweep && stability.is_none() {
        r.errors.push("--sweep applies to the stability command only".into());
    } else if ov.sweep && sweep.is_empty() {
        r.errors.push("--sweep needs a `[sweep]` table with at least one grid axis".into());
    }
    let sweep = if ov.sweep { sweep } else { Vec::new() };

    let lax = if needs(Command::LaxCheck) {
        let l = raw.lax.unwrap_or_default();
        let moments = r.require(l.moments, "lax.moments");
        let trajectory = l.trajectory.map(|p| if p.is_absolute() { p } else { base.join(p) });
        if let Some(p) = &trajectory {
            if !p.is_file() {
                r.errors.push(format!("field `lax.trajectory`: {} does not exist", p.display()));
            }
        }
        let omega0 = if trajectory.is_none() { r.require(l.omega0, "lax.omega0") } else { l.omega0 };
        let lambdas = r.or(l.lambdas, "lax.lambdas", crate::integrability::DEFAULT_LAMBDAS.to_vec());
        if lambdas.is_empty() || lambdas.iter().any(|x| *x == 0.0 || !x.is_finite()) {
            r.errors.push("field `lax.lambdas` must be non-empty, finite and nonzero".into());
        }
        let three = |v: &[f64]| (v.len() == 3).then(|| [v[0], v[1], v[2]]);
        match moments {
            Some(m) => {
                let omega0 = omega0.map(|w| three(&w));
                if three(&m).is_none() || matches!(omega0, Some(None)) {
                    r.errors.push("fields `lax.moments` and `lax.omega0` need three entries".into());
                    None
                } else {
                    Some(LaxSpec { moments: three(&m).unwrap(), omega0: omega0.flatten(), lambdas, trajectory })
                }
            }
            None => None,
        }
    } else {
        None
    };

    let dm = raw.dimer.unwrap_or_default();
    let dimer = if needs(Command::Dimer) {
        (r.or(dm.j, "dimer.j", 1.0), r.or(dm.b, "dimer.b", 0.0))
    } else {
        (dm.j.unwrap_or(1.0), dm.b.unwrap_or(0.0))
    };

    let en = raw.entangle.unwrap_or_default();
    let entangle = if needs(Command::Entangle) {
        let spec = EntangleSpec {
            d: r.or(en.d, "entangle.d", 2),
            n: r.or(en.n, "entangle.n", 2),
            omegas: r.or(en.omegas, "entangle.omegas", vec![1.0]),
            k_ref: r.or(en.k_ref, "entangle.k_ref", 0),
        };
        if spec.d < 2 || spec.n < 2 {
            r.errors.push("fields `entangle.d` and `entangle.n` must be at least 2".into());
        }
        spec
    } else {
        EntangleSpec { d: 2, n: 2, omegas: vec![1.0], k_ref: 0 }
    };

    let out_dir = match &ov.out {
        Some(p) => p.clone(),
        None => r.or(raw.output.and_then(|o| o.dir), "output.dir", PathBuf::from("out")),
    };

    if !r.errors.is_empty() {
        return Err(ConfigError { messages: r.errors });
    }
    Ok(ScenarioConfig {
        command: command.expect("checked above"),
        seed,
        method,
        d,
        n,
        ordering,
        hamiltonian,
        state,
        times,
        ode_tol,
        invariant_tol,
        euler,
        stability,
        sweep,
        lax,
        dimer,
        entangle,
        out_dir,
        defaulted: r.defaulted,
    })
}

fn resolve_time(r: &mut Resolver, t: RawTime, default_steps: usize) -> Vec<f64> {
    if let Some(points) = t.points {
        if t.t0.is_some() || t.t1.is_some() || t.steps.is_some() {
            r.errors.push("field `time.points` excludes `time.t0`, `time.t1` and `time.steps`".into());
        }
        if points.is_empty() || points.windows(2).any(|w| !(w[1] > w[0])) {
            r.errors.push("field `time.points` must be non-empty and strictly increasing".into());
        }
        return points;
    }
    let t0 = r.or(t.t0, "time.t0", 0.0);
    let t1 = r.or(t.t1, "time.t1", 10.0);
    let steps = r.or(t.steps, "time.steps", default_steps);
    if !(t1 > t0) || steps == 0 {
        r.errors.push(format!("fields `time.t0`/`time.t1`/`time.steps`: need t1 > t0 and steps ≥ 1 (got {t0}, {t1}, {steps})"));
        return vec![t0];
    }
    crate::ode::linspace(t0, t1, steps)
}

fn resolve_operator(r: &mut Resolver, op: RawOperator, section: &str, base: &Path) -> Option<OperatorSpec> {
    let given = [op.coefficients.is_some(), op.matrix.is_some(), op.matrix_file.is_some(), op.model.is_some(), op.named.is_some()];
    if given.iter().filter(|x| **x).count() != 1 {
        r.errors.push(format!(
            "section `{section}` needs exactly one of `coefficients`, `matrix`, `matrix_file`, `model`, `named`"
        ));
        return None;
    }
    if let Some(v) = op.coefficients {
        return Some(OperatorSpec::Coefficients(v));
    }
    if let Some(rows) = op.matrix {
        return matrix_from_rows(r, &rows, &format!("{section}.matrix")).map(OperatorSpec::Matrix);
    }
    if let Some(file) = op.matrix_file {
        let path = if file.is_absolute() { file } else { base.join(file) };
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                r.errors.push(format!("field `{section}.matrix_file`: {}: {e}", path.display()));
                return None;
            }
        };
        let rows: Vec<Vec<Entry>> = match serde_json::from_str(&text) {
            Ok(rows) => rows,
            Err(e) => {
                r.errors.push(format!("field `{section}.matrix_file`: {}: {e}", path.display()));
                return None;
            }
        };
        return matrix_from_rows(r, &rows, &format!("{section}.matrix_file")).map(OperatorSpec::Matrix);
    }
    if let Some(name) = op.model {
        let (j, b, omega) = match (section, name.as_str()) {
            ("hamiltonian", "dimer") => (r.or(op.j, "hamiltonian.j", 1.0), r.or(op.b, "hamiltonian.b", 0.0), 0.0),
            ("hamiltonian", "pair-flip") => (0.0, 0.0, r.or(op.omega, "hamiltonian.omega", 1.0)),
            _ => {
                r.errors.push(format!("field `{section}.model`: unknown model `{name}` (expected `dimer` or `pair-flip` for the Hamiltonian)"));
                return None;
            }
        };
        return Some(OperatorSpec::Model { name, j, b, omega });
    }
    let name = op.named.expect("one field given");
    if section != "state" || !matches!(name.as_str(), "basis" | "maximally-mixed" | "random") {
        r.errors.push(format!("field `{section}.named`: unknown state `{name}` (expected `basis`, `maximally-mixed` or `random`)"));
        return None;
    }
    let level = r.or(op.level, &format!("{section}.level"), 0);
    Some(OperatorSpec::Named { name, level })
}

fn matrix_from_rows(r: &mut Resolver, rows: &[Vec<Entry>], field: &str) -> Option<CMat> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|row| row.len() != n) {
        r.errors.push(format!("field `{field}` must be a non-empty square matrix"));
        return None;
    }
    Some(CMat::from_fn(n, n, |i, j| match rows[i][j] {
        Entry::Real(x) => c(x, 0.0),
        Entry::Complex([re, im]) => c(re, im),
    }))
}

fn resolve_stability(r: &mut Resolver, s: RawStability) -> StabilitySpec {
    let mode = match s.mode.as_deref() {
        Some("qubit") => StabilityMode::Qubit,
        Some("su3") => StabilityMode::Su3,
        Some("energy-casimir") => StabilityMode::EnergyCasimir,
        Some("jacobian") => StabilityMode::Jacobian,
        Some(other) => {
            r.errors.push(format!("field `stability.mode`: unknown mode `{other}` (expected qubit, su3, energy-casimir, jacobian)"));
            StabilityMode::Qubit
        }
        None => {
            r.errors.push("missing required field `stability.mode`".into());
            StabilityMode::Qubit
        }
    };
    let moments = if mode == StabilityMode::Jacobian {
        s.moments.unwrap_or_default()
    } else {
        r.require(s.moments, "stability.moments").unwrap_or_default()
    };
    let want = match mode {
        StabilityMode::Qubit => 3,
        StabilityMode::Su3 | StabilityMode::EnergyCasimir => 8,
        StabilityMode::Jacobian => moments.len(),
    };
    if !moments.is_empty() && moments.len() != want {
        r.errors.push(format!("field `stability.moments` needs {want} entries"));
    }
    let (mut axis, mut omega0, mut omega03, mut omega08, mut perturbation, mut growth) = (0, 1.0, 0.0, 0.0, 1e-6, false);
    match mode {
        StabilityMode::Qubit => {
            axis = r.or(s.axis, "stability.axis", 2);
            if !(1..=3).contains(&axis) {
                r.errors.push(format!("field `stability.axis` must be 1, 2 or 3, got {axis}"));
            }
            axis = axis.saturating_sub(1);
            omega0 = r.or(s.omega0, "stability.omega0", 1.0);
            perturbation = r.or(s.perturbation, "stability.perturbation", 1e-6);
            growth = r.or(s.growth, "stability.growth", true);
        }
        StabilityMode::Su3 | StabilityMode::EnergyCasimir => {
            omega03 = r.or(s.omega03, "stability.omega03", 1.0);
            omega08 = r.or(s.omega08, "stability.omega08", 0.0);
        }
        StabilityMode::Jacobian => {
            if s.jacobian.is_none() {
                r.errors.push("missing required field `stability.jacobian`".into());
            }
        }
    }
    if let Some(j) = &s.jacobian {
        if j.iter().any(|row| row.len() != j.len()) {
            r.errors.push("field `stability.jacobian` must be square".into());
        }
    }
    StabilitySpec { mode, moments, axis, omega0, omega03, omega08, perturbation, growth, jacobian: s.jacobian }
}

fn resolve_sweep(r: &mut Resolver, sw: RawSweep, base: &StabilitySpec) -> Vec<StabilitySpec> {
    if base.mode == StabilityMode::Jacobian {
        r.errors.push("field `sweep`: the jacobian mode has no parameters to sweep".into());
        return Vec::new();
    }
    if sw.moments.is_none() && sw.axis.is_none() && sw.omega0.is_none() && sw.omega03.is_none() && sw.omega08.is_none() {
        r.errors.push("field `sweep` declares no grid axis".into());
        return Vec::new();
    }
    let moments = sw.moments.unwrap_or_else(|| vec![base.moments.clone()]);
    let axes = sw.axis.unwrap_or_else(|| vec![base.axis + 1]);
    let omega0 = sw.omega0.unwrap_or_else(|| vec![base.omega0]);
    let omega03 = sw.omega03.unwrap_or_else(|| vec![base.omega03]);
    let omega08 = sw.omega08.unwrap_or_else(|| vec![base.omega08]);
    for (name, len) in [("moments", moments.len()), ("axis", axes.len()), ("omega0", omega0.len()), ("omega03", omega03.len()), ("omega08", omega08.len())] {
        if len == 0 {
            r.errors.push(format!("field `sweep.{name}` must not be empty"));
        }
    }
    let want = if base.mode == StabilityMode::Qubit { 3 } else { 8 };
    if let Some(k) = moments.iter().position(|m| m.len() != want) {
        r.errors.push(format!("field `sweep.moments`: entry {} needs {want} entries", k + 1));
    }
    if let Some(a) = axes.iter().find(|a| !(1..=3).contains(*a)) {
        r.errors.push(format!("field `sweep.axis`: axes must be 1, 2 or 3, got {a}"));
    }
    let mut points = Vec::new();
    for m in &moments {
        for &axis in &axes {
            for &w0 in &omega0 {
                for &w3 in &omega03 {
                    for &w8 in &omega08 {
                        points.push(StabilitySpec { moments: m.clone(), axis: axis.saturating_sub(1), omega0: w0, omega03: w3, omega08: w8, ..base.clone() });
                    }
                }
            }
        }
    }
    points
}

fn spec_json(op: &Option<OperatorSpec>) -> Value {
    match op {
        None => Value::Null,
        Some(OperatorSpec::Coefficients(v)) => json!({ "coefficients": v }),
        Some(OperatorSpec::Matrix(m)) => json!({ "matrix": super::output::matrix_json(m) }),
        Some(OperatorSpec::Model { name, j, b, omega }) => json!({ "model": name, "j": j, "b": b, "omega": omega }),
        Some(OperatorSpec::Named { name, level }) => json!({ "named": name, "level": level }),
    }
}

impl ScenarioConfig {
    /// Resolved inputs echoed into the manifest.
    pub fn echo(&self) -> Value {
        let mut v = json!({
            "command": self.command.name(),
            "seed": self.seed,
            "method": match self.method { Method::Spectral => "spectral", Method::Ode => "ode" },
            "system": { "d": self.d, "n": self.n, "ordering": match self.ordering { Ordering::Grouped => "grouped", Ordering::Standard => "standard" } },
            "hamiltonian": spec_json(&self.hamiltonian),
            "state": spec_json(&self.state),
            "time": { "t0": self.times.first(), "t1": self.times.last(), "samples": self.times.len() },
            "tolerances": { "ode": self.ode_tol, "invariant": self.invariant_tol },
            "defaulted": self.defaulted,
        });
        let obj = v.as_object_mut().expect("object");
        if let Some(e) = &self.euler {
            obj.insert("euler".into(), json!({ "moments": e.moments, "omega0": e.omega0, "analytic": e.analytic, "project": e.project }));
        }
        if let Some(s) = &self.stability {
            obj.insert(
                "stability".into(),
                json!({
                    "mode": format!("{:?}", s.mode).to_lowercase(),
                    "moments": s.moments, "axis": s.axis + 1, "omega0": s.omega0,
                    "omega03": s.omega03, "omega08": s.omega08,
                    "perturbation": s.perturbation, "growth": s.growth,
                }),
            );
        }
        if !self.sweep.is_empty() {
            obj.insert("sweep".into(), json!({ "points": self.sweep.len() }));
        }
        if let Some(l) = &self.lax {
            obj.insert(
                "lax".into(),
                json!({ "moments": l.moments, "omega0": l.omega0, "lambdas": l.lambdas, "trajectory": l.trajectory.as_ref().map(|p| p.display().to_string()) }),
            );
        }
        if self.command == Command::Dimer {
            obj.insert("dimer".into(), json!({ "j": self.dimer.0, "b": self.dimer.1 }));
        }
        if self.command == Command::Entangle {
            let e = &self.entangle;
            obj.insert("entangle".into(), json!({ "d": e.d, "n": e.n, "omegas": e.omegas, "k_ref": e.k_ref }));
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str) -> Result<ScenarioConfig, ConfigError> {
        parse(text, Path::new("."), &Overrides::default())
    }

    #[test]
    fn empty_file_lists_command() {
        let e = p("").unwrap_err();
        assert!(e.messages.iter().any(|m| m.contains("`command`")));
    }

    #[test]
    fn dimer_defaults_enumerated() {
        let c = p("command = \"dimer\"\n").unwrap();
        for f in ["dimer.j", "dimer.b", "time.t1", "tolerances.ode", "seed"] {
            assert!(c.defaulted.iter().any(|d| d == f), "{f}");
        }
    }

    #[test]
    fn negative_tolerance_named() {
        let e = p("command = \"dimer\"\n[tolerances]\node = -1e-9\n").unwrap_err();
        assert!(e.messages.iter().any(|m| m.contains("tolerances.ode")));
    }

    #[test]
    fn unknown_field_rejected_with_location() {
        let e = p("command = \"dimer\"\nbogus = 1\n").unwrap_err();
        assert!(e.to_string().contains("bogus") && e.to_string().contains("line"));
    }

    #[test]
    fn evolve_requires_operators() {
        let e = p("command = \"evolve\"\n").unwrap_err();
        assert!(e.messages.iter().any(|m| m.contains("`hamiltonian`")));
        assert!(e.messages.iter().any(|m| m.contains("`state`")));
    }

    #[test]
    fn missing_matrix_file_reported() {
        let e = p("command = \"evolve\"\n[hamiltonian]\nmatrix_file = \"nope.json\"\n[state]\nnamed = \"basis\"\n").unwrap_err();
        assert!(e.messages.iter().any(|m| m.contains("hamiltonian.matrix_file")));
    }

    #[test]
    fn time_points_must_increase() {
        let e = p("command = \"dimer\"\n[time]\npoints = [0.0, 1.0, 1.0]\n").unwrap_err();
        assert!(e.messages.iter().any(|m| m.contains("time.points")));
    }
}
