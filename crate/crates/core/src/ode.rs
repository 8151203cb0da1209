//! Adaptive Dormand-Prince 5(4) integrator sampled on a fixed output grid.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-10, h_init: None, h_min: 1e-14, max_steps: 50_000_000 }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions { rtol: tol, atol: tol, ..Default::default() }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*, the embedded 4th-order error weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates y' = f(t, y) and returns y at every grid time.
///
/// The grid must be nondecreasing; the first entry is the initial time.
pub fn integrate<F>(f: F, y0: &[f64], grid: &[f64], opts: &OdeOptions) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    integrate_projected(f, |_| false, y0, grid, opts)
}

/// As [`integrate`], applying `project` to the state after every accepted
/// step; `project` returns whether it changed the state.
pub fn integrate_projected<F, P>(mut f: F, mut project: P, y0: &[f64], grid: &[f64], opts: &OdeOptions) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    P: FnMut(&mut [f64]) -> bool,
{
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    if grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidInput("time grid must be nondecreasing".into()));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::InvalidInput("tolerances must be positive".into()));
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = grid[0];
    let mut out = Vec::with_capacity(grid.len());
    out.push(y.clone());

    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    f(t, &y, &mut k[0]);

    let span = grid[grid.len() - 1] - grid[0];
    let mut h = opts.h_init.unwrap_or_else(|| {
        let y_norm = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let f_norm = k[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let guess = if f_norm > 0.0 { 0.01 * (y_norm.max(1e-3)) / f_norm } else { 1e-3 };
        guess.min(span.max(1e-3)).max(1e-8)
    });
    let mut steps = 0usize;

    for &t_target in &grid[1..] {
        while t < t_target {
            if steps >= opts.max_steps {
                return Err(Error::Numerical(format!("step budget exhausted at t = {t}")));
            }
            let remaining = t_target - t;
            let last = h >= remaining;
            let hs = if last { remaining } else { h };
            if hs < opts.h_min && !last {
                return Err(Error::StepUnderflow { t });
            }
            stage(&y, &k, hs, &[A21], &mut tmp);
            f(t + C2 * hs, &tmp, &mut k[1]);
            stage(&y, &k, hs, &[A31, A32], &mut tmp);
            f(t + C3 * hs, &tmp, &mut k[2]);
            stage(&y, &k, hs, &[A41, A42, A43], &mut tmp);
            f(t + C4 * hs, &tmp, &mut k[3]);
            stage(&y, &k, hs, &[A51, A52, A53, A54], &mut tmp);
            f(t + C5 * hs, &tmp, &mut k[4]);
            stage(&y, &k, hs, &[A61, A62, A63, A64, A65], &mut tmp);
            f(t + hs, &tmp, &mut k[5]);
            for i in 0..n {
                ynew[i] = y[i] + hs * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
            }
            let t_new = if last { t_target } else { t + hs };
            f(t_new, &ynew, &mut k[6]);
            let mut err = 0.0;
            for i in 0..n {
                let e = hs
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sc) * (e / sc);
            }
            err = if n > 0 { (err / n as f64).sqrt() } else { 0.0 };
            steps += 1;
            if !err.is_finite() {
                h = hs * 0.1;
                if h < opts.h_min {
                    return Err(Error::StepUnderflow { t });
                }
                continue;
            }
            if err <= 1.0 {
                t = t_new;
                std::mem::swap(&mut y, &mut ynew);
                if project(&mut y) {
                    f(t, &y, &mut k[0]);
                } else {
                    k.swap(0, 6);
                }
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // keep the step proposal when the accepted step was truncated by the grid
                if !last || hs >= h {
                    h = hs * fac;
                } else {
                    h = h.max(hs * fac);
                }
            } else {
                h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if h < opts.h_min {
                    return Err(Error::StepUnderflow { t });
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

fn stage(y: &[f64], k: &[Vec<f64>], h: f64, a: &[f64], out: &mut [f64]) {
    for i in 0..y.len() {
        let mut s = 0.0;
        for (j, aj) in a.iter().enumerate() {
            s += aj * k[j][i];
        }
        out[i] = y[i] + h * s;
    }
}

/// Uniform grid of `n` intervals on [t0, t1] (n + 1 points).
pub fn linspace(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return vec![t0];
    }
    (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect()
}
