//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report always reaches stdout.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use qudit_bloch::algebra::{bloch_decompose, gen_gellmann_basis, gen_gellmann_basis_with, Ordering, DEFAULT_BASIS_CAP};
use qudit_bloch::cli;
use qudit_bloch::composite::{
    bipartite_bloch_rhs, concurrence_density, dimer_rhs, dimer_spectral_solution, heisenberg_dimer, multipartite_bloch_rhs,
    multipartite_decompose, oscillating_state, ppt_check, purity, reduced_density, DimerState,
};
use qudit_bloch::dynamics::{propagate_bloch_ode, propagate_bloch_ode_const, propagate_spectral, relative_drift, SpectralPropagator};
use qudit_bloch::integrability::{integrate_neumann, lax_residual_series, operator_constants_report, DEFAULT_LAMBDAS};
use qudit_bloch::linalg::{c, eigh, CMat};
use qudit_bloch::ode::linspace;
use qudit_bloch::rigidbody::{euler_rhs, integrate_euler, AsymmetricTop};
use qudit_bloch::stability::{
    energy_casimir_multipliers, energy_casimir_su3, fit_growth_exponent, linearize_euler_su3, perturbation_growth, qubit_frequency_sq,
};
use qudit_bloch::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{five_point, random_density, random_hermitian};

struct Outcome {
    id: &'static str,
    name: &'static str,
    pass: bool,
    detail: String,
    /// Reason a failure is expected and accepted.
    waiver: Option<&'static str>,
}

fn outcome(id: &'static str, name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, name, pass, detail, waiver: None }
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let times = linspace(0.0, 10.0, 50);
    let mut worst = 0.0f64;
    for d in [2, 3, 4] {
        let basis = gen_gellmann_basis(d).unwrap();
        for _ in 0..50 {
            let h = random_hermitian(&mut rng, d);
            let rho = random_density(&mut rng, d);
            let hv = bloch_decompose(&h, &basis).unwrap().vec;
            let r0 = bloch_decompose(&rho, &basis).unwrap();
            let ode = propagate_bloch_ode(|_| hv.clone(), &r0, &times, 1e-10, &basis).unwrap();
            let exact = propagate_spectral(&h, &rho, &times, &basis).unwrap();
            for (a, b) in ode.states.iter().zip(&exact.states) {
                worst = worst.max((&a.vec - &b.vec).amax());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        "1",
        "oracle equivalence (ODE vs spectral, d = 2, 3, 4)",
        worst < 1e-7 && secs < 60.0,
        format!("max deviation {worst:.2e} (< 1e-7), runtime {secs:.1} s (< 60 s)"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let times = linspace(0.0, 100.0, 200);
    let mut worst: (f64, String) = (0.0, String::new());
    let mut note = |name: &str, series: &[f64]| {
        let v = relative_drift(series);
        if v >= worst.0 {
            worst = (v, name.to_string());
        }
    };
    for d in [2, 3, 4] {
        let basis = gen_gellmann_basis(d).unwrap();
        for _ in 0..3 {
            let h = random_hermitian(&mut rng, d);
            let rho = random_density(&mut rng, d);
            let hb = bloch_decompose(&h, &basis).unwrap();
            let mut tr = propagate_bloch_ode_const(&hb, &bloch_decompose(&rho, &basis).unwrap(), &times, 1e-12, &basis).unwrap();
            tr.add_state_monitors();
            for name in ["purity", "bloch_length", "energy"] {
                note(&format!("d={d} {name}"), tr.monitor(name).unwrap());
            }
            let rep = operator_constants_report(&h, &tr, &basis, 4).unwrap();
            for (name, series) in rep.names.iter().zip(&rep.values_over_time) {
                if name.starts_with("tr_H^") || name == "tr_E" {
                    note(&format!("d={d} {name}"), series);
                }
            }
        }
    }
    let basis3 = gen_gellmann_basis_with(3, Ordering::Standard, DEFAULT_BASIS_CAP).unwrap();
    for _ in 0..3 {
        let moments: Vec<f64> = (0..8).map(|_| rng.gen_range(0.5..3.0)).collect();
        let w0: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tr = integrate_euler(&w0, &moments, &basis3, &times, 1e-12).unwrap();
        for name in ["casimir_1", "casimir_2"] {
            note(&format!("SU(3) Euler {name}"), tr.monitor(name).unwrap());
        }
    }
    outcome(
        "2",
        "conservation over t in [0, 100]",
        worst.0 < 1e-8,
        format!("worst relative drift {:.2e} ({}) (< 1e-8)", worst.0, worst.1),
    )
}

fn criterion_3() -> Outcome {
    let m = [3.0, 2.0, 1.0];
    let basis = gen_gellmann_basis(2).unwrap();
    let mut dev = 0.0f64;
    let mut residual = 0.0f64;
    for varpi in [1.5, 2.5] {
        let top = AsymmetricTop::new(m, 1.0, 1.0 / (2.0 * varpi)).unwrap();
        let times = linspace(0.0, 20.0 * top.period, 4000);
        let w0 = top.omega(0.0).unwrap();
        let num = integrate_euler(&w0, &m, &basis, &times, 1e-12).unwrap();
        for (t, s) in times.iter().zip(&num.states) {
            dev = dev.max(max_dev(&top.omega(*t).unwrap(), s.vec.as_slice()));
        }
        let h = 1e-3;
        for t in linspace(0.0, 2.0 * top.period, 200) {
            let w = |dt: f64| top.omega(t + dt).unwrap();
            let (a, b, cc, d) = (w(-2.0 * h), w(-h), w(h), w(2.0 * h));
            let fd: Vec<f64> = (0..3).map(|k| (a[k] - 8.0 * b[k] + 8.0 * cc[k] - d[k]) / (12.0 * h)).collect();
            let rhs = euler_rhs(&w(0.0), &m, &basis).unwrap();
            residual = residual.max(max_dev(&fd, rhs.as_slice()));
        }
    }
    outcome(
        "3",
        "closed-form asymmetric top, both branches, 20 periods",
        dev < 1e-6 && residual < 1e-8,
        format!("max |analytic - numeric| {dev:.2e} (< 1e-6), Euler residual {residual:.2e} (< 1e-8)"),
    )
}

fn criterion_4() -> Outcome {
    let m = [3.0, 2.0, 1.0];
    let eps = 1e-6;
    let omega = qubit_frequency_sq(m, 1, 1.0).sqrt();
    let times = linspace(0.0, 20.0, 400);
    let series = perturbation_growth(m, 1, 1.0, [eps, 0.0, eps], &times, 1e-12).unwrap();
    let d0 = eps * 2f64.sqrt();
    let (ts, ys): (Vec<f64>, Vec<f64>) =
        times.iter().zip(&series).filter(|(_, y)| **y >= 10.0 * d0 && **y <= 1e-3).map(|(t, y)| (*t, *y)).unzip();
    let fit = fit_growth_exponent(&ts, &ys).unwrap();
    let rel = (fit - omega).abs() / omega;
    let mut bounded = 0.0f64;
    for axis in [0usize, 2] {
        let f2 = qubit_frequency_sq(m, axis, 1.0);
        let period = 2.0 * PI / (-f2).sqrt();
        let times = linspace(0.0, 100.0 * period, 4000);
        let mut delta = [eps; 3];
        delta[axis] = 0.0;
        let s = perturbation_growth(m, axis, 1.0, delta, &times, 1e-12).unwrap();
        bounded = bounded.max(s.iter().fold(0.0f64, |a, y| a.max(y / d0)));
    }
    outcome(
        "4",
        "intermediate axis theorem (qubit, I = (3, 2, 1))",
        rel < 0.05 && bounded <= 10.0,
        format!("fitted {fit:.6} vs Omega {omega:.6} (rel err {rel:.2e} < 5%), stable-axis max growth {bounded:.2}x (<= 10x)"),
    )
}

/// (criterion with the corrected orientation, literal interval condition).
fn criterion_5() -> (Outcome, Outcome) {
    let basis = gen_gellmann_basis_with(3, Ordering::Standard, DEFAULT_BASIS_CAP).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s3 = 3f64.sqrt();
    let (mut agree, mut literal, mut total, mut ih_dev) = (0usize, 0usize, 0usize, 0.0f64);
    let mut points = 0;
    while points < 200 {
        let mo: Vec<f64> = (0..8).map(|_| rng.gen_range(0.5..5.0)).collect();
        let (w3, w8): (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let (a, b) = (w3 + s3 * w8, s3 * w8 - w3);
        if (a * b).abs() < 0.05 * (w3 * w3).max(w8 * w8) {
            continue;
        }
        points += 1;
        let lin = linearize_euler_su3(&mo, w3, w8, &basis).unwrap();
        let ih = [mo[2], (mo[2] * w3 + s3 * mo[7] * w8) / a, (-mo[2] * w3 + s3 * mo[7] * w8) / b];
        for (blk, ((j, k), h)) in [(0usize, 1usize), (3, 4), (5, 6)].into_iter().zip(ih).enumerate() {
            let jm = &lin.jacobian;
            let (tr, det) = (jm[(j, j)] + jm[(k, k)], jm[(j, j)] * jm[(k, k)] - jm[(j, k)] * jm[(k, j)]);
            let scale = jm.amax().max(1e-300);
            let imaginary = tr.abs() <= 1e-10 * scale && tr * tr - 4.0 * det <= 1e-10 * scale * scale;
            let inside = h > mo[j].min(mo[k]) && h < mo[j].max(mo[k]);
            ih_dev = ih_dev.max((lin.blocks[blk].inertia_h - h).abs() / h.abs().max(1.0));
            total += 1;
            agree += (imaginary == !inside) as usize;
            literal += (imaginary == inside) as usize;
        }
    }
    let resonance = matches!(linearize_euler_su3(&[2.0; 8], s3, 1.0, &basis), Err(Error::Resonance))
        && matches!(energy_casimir_multipliers(&[2.0; 8], -s3 * 0.4, 0.4), Err(Error::Resonance));
    let corrected = outcome(
        "5",
        "SU(3) stability, I_H outside (I_j, I_k), 200 points",
        agree == total && resonance && ih_dev < 1e-12,
        format!("{agree}/{total} blocks agree, I_H oracle dev {ih_dev:.1e}, resonance rejected: {resonance}"),
    );
    let mut lit = outcome(
        "5*",
        "SU(3) stability, literal interval condition I_H in (I_j, I_k)",
        literal == total,
        format!("{literal}/{total} blocks agree"),
    );
    lit.waiver = Some("the printed interval conditions mark the unstable blocks; see the decisions ledger");
    (corrected, lit)
}

fn criterion_6() -> Outcome {
    let basis = gen_gellmann_basis_with(3, Ordering::Standard, DEFAULT_BASIS_CAP).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let s3 = 3f64.sqrt();
    let (mut dh, mut dm, mut dfd, mut grad) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let (i1, i3, i4, i8) = (rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0));
        let mo = [i1, i1, i3, i4, i4, i4, i4, i8];
        let (w3, w8): (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let den = w3 * w3 - 3.0 * w8 * w8;
        if den.abs() < 0.05 {
            continue;
        }
        let mu = (-i3 * w3 * w3 + (i3 + 2.0 * i8) * w8 * w8) / (2.0 * den);
        let nu = (i3 - i8) * w8 / (s3 * den);
        let h1 = (i1 - i3) / 2.0;
        let hi = ((i4 - i3) * w3 * w3 + s3 * (i3 - i8) * w3 * w8 + 3.0 * (i8 - i4) * w8 * w8) / (2.0 * den);
        let hk = ((i4 - i3) * w3 * w3 - s3 * (i3 - i8) * w3 * w8 + 3.0 * (i8 - i4) * w8 * w8) / (2.0 * den);
        let rep = energy_casimir_su3(&mo, w3, w8, &basis).unwrap();
        dm = dm.max((rep.mu - mu).abs()).max((rep.nu - nu).abs());
        for (idx, v) in [(0, h1), (1, h1), (3, hi), (4, hi), (5, hk), (6, hk)] {
            dh = dh.max((rep.hessian_diagonal[idx] - v).abs());
            dfd = dfd.max((rep.hessian_fd[(idx, idx)] - v).abs());
        }
        grad = grad.max(rep.first_variation);
    }
    outcome(
        "6",
        "Energy-Casimir multipliers and Hessian (symmetric case)",
        dh < 1e-10 && dm < 1e-10 && dfd < 1e-6,
        format!("Hessian dev {dh:.1e} (< 1e-10), multiplier dev {dm:.1e} (< 1e-10), FD dev {dfd:.1e} (< 1e-6), |grad| {grad:.1e}"),
    )
}

fn criterion_7() -> Outcome {
    let m = [3.0, 2.0, 1.0];
    let basis = gen_gellmann_basis(2).unwrap();
    let times = linspace(0.0, 10.0, 2000);
    let mut lax = 0.0f64;
    for varpi in [1.5, 2.5] {
        let top = AsymmetricTop::new(m, 1.0, 1.0 / (2.0 * varpi)).unwrap();
        let tr = integrate_euler(&top.omega(0.0).unwrap(), &m, &basis, &times, 1e-12).unwrap();
        let omegas: Vec<Vec<f64>> = tr.states.iter().map(|s| s.vec.as_slice().to_vec()).collect();
        for lambda in DEFAULT_LAMBDAS {
            lax = lax.max(lax_residual_series(&times, &omegas, m, lambda).unwrap());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let k = [0.5, 1.3, 2.1, 3.4];
    let (mut drift, mut sum_dev) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let mut q: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nq = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        q.iter_mut().for_each(|x| *x /= nq);
        let mut p: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dot: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        p.iter_mut().zip(&q).for_each(|(a, b)| *a -= dot * b);
        let tr = integrate_neumann(&q, &p, &k, 1.0, &linspace(0.0, 20.0, 400), 1e-12).unwrap();
        for j in 1..=4 {
            drift = drift.max(relative_drift(tr.monitor(&format!("uhlenbeck_{j}")).unwrap()));
        }
        sum_dev = sum_dev.max(tr.monitor("uhlenbeck_sum").unwrap().iter().fold(0.0f64, |a, s| a.max((s - 1.0).abs())));
    }
    outcome(
        "7",
        "Lax residual and Uhlenbeck integrals",
        lax < 1e-7 && drift < 1e-8 && sum_dev < 1e-12,
        format!("Lax residual {lax:.1e} (< 1e-7), F_k drift {drift:.1e} (< 1e-8), |sum F - 1| {sum_dev:.1e} (< 1e-12)"),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let times = linspace(0.0, 5.0, 2000);
    let h = times[1] - times[0];
    let mut residual = 0.0f64;
    for _ in 0..20 {
        let (j, b) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let rho = random_density(&mut rng, 4);
        let states = dimer_spectral_solution(&rho, j, b, &times).unwrap();
        let xs: Vec<Vec<f64>> = states.iter().map(DimerState::as_vec).collect();
        for (i, fd) in five_point(h, &xs).into_iter().enumerate() {
            residual = residual.max(max_dev(&fd, &dimer_rhs(&states[i + 2], j, b).as_vec()));
        }
    }
    let mut spec = 0.0f64;
    for j in [1.0, 0.37, -2.0] {
        let (hm, _) = heisenberg_dimer(j, 0.0).unwrap();
        let (mut ev, _) = eigh(&hm);
        ev.sort_by(f64::total_cmp);
        let mut want = [-3.0 * j, j, j, j];
        want.sort_by(f64::total_cmp);
        spec = spec.max(max_dev(&ev, &want));
    }
    outcome(
        "8",
        "Heisenberg dimer equations and B = 0 spectrum",
        residual < 1e-6 && spec < 1e-12,
        format!("FD residual {residual:.1e} (< 1e-6), spectrum dev {spec:.1e} (< 1e-12)"),
    )
}

fn criterion_9() -> Outcome {
    let w = 1.3;
    let mut h = CMat::zeros(4, 4);
    h[(0, 3)] = c(w, 0.0);
    h[(3, 0)] = c(w, 0.0);
    let mut rho0 = CMat::zeros(4, 4);
    rho0[(0, 0)] = c(1.0, 0.0);
    let sp = SpectralPropagator::new(&h, &rho0).unwrap();
    let mut conc = 0.0f64;
    for t in linspace(0.0, 4.0 * PI / w, 400) {
        let cc = concurrence_density(&sp.density_at(t)).unwrap();
        conc = conc.max((cc - (2.0 * w * t).sin().abs()).abs());
    }
    let mut ppt = f64::INFINITY;
    let mut maximal = 0.0f64;
    for n in 0..8 {
        let t_sep = n as f64 * PI / (2.0 * w);
        ppt = ppt.min(ppt_check(&sp.density_at(t_sep), (2, 2), 1).unwrap());
        let t_max = (2 * n + 1) as f64 * PI / (4.0 * w);
        maximal = maximal.max((concurrence_density(&sp.density_at(t_max)).unwrap() - 1.0).abs());
    }
    let mut purity_dev = 0.0f64;
    let mut generic_min = 1.0f64;
    for (d, n, omegas) in [(2usize, 3usize, vec![w]), (3, 2, vec![w]), (3, 2, vec![w, w])] {
        for k in 0..6 {
            let t = k as f64 * PI / (2.0 * w);
            let psi = oscillating_state(d, n, &omegas, 0, t).unwrap();
            for party in 0..n {
                purity_dev = purity_dev.max((purity(&reduced_density(&psi, d, n, party).unwrap()) - 1.0).abs());
            }
        }
        let psi = oscillating_state(d, n, &omegas, 0, 0.3 / w).unwrap();
        generic_min = generic_min.min(purity(&reduced_density(&psi, d, n, 0).unwrap()));
    }
    outcome(
        "9",
        "entanglement oscillation",
        conc < 1e-9 && ppt >= -1e-10 && maximal < 1e-9 && purity_dev < 1e-12 && generic_min < 0.99,
        format!(
            "|C - |sin 2wt|| {conc:.1e} (< 1e-9), min PT eigenvalue at separable times {ppt:.1e} (>= -1e-10), |C - 1| at maximal times {maximal:.1e}, reduced purity dev {purity_dev:.1e}"
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let d = 2 + i % 2;
        let rho = random_density(&mut rng, d * d);
        let h = random_hermitian(&mut rng, d * d);
        let rc = multipartite_decompose(&rho, d, 2).unwrap();
        let hc = multipartite_decompose(&h, d, 2).unwrap();
        let hand = bipartite_bloch_rhs(&rc, &hc).unwrap();
        let generic = multipartite_bloch_rhs(&rc, &hc).unwrap();
        worst = worst.max(hand.max_abs_diff(&generic));
    }
    outcome("10", "dual-path bipartite RHS, 100 instances", worst < 1e-10, format!("max deviation {worst:.1e} (< 1e-10)"))
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("evolve.toml");
    std::fs::write(
        &cfg,
        "command = \"evolve\"\nseed = 7\nmethod = \"ode\"\n[system]\nd = 2\nn = 2\n[hamiltonian]\nmodel = \"dimer\"\nj = 0.8\nb = 0.3\n[state]\nnamed = \"random\"\n",
    )
    .unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let args = ["qudit-bloch", "evolve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        let code = cli::run_from_args(args, &mut Vec::new(), &mut Vec::new());
        (code, std::fs::read(out.join("trajectory.csv")).unwrap(), out)
    };
    let (c1, csv1, out1) = run("a");
    let (c2, csv2, _) = run("b");
    let identical = csv1 == csv2 && c1 == 0 && c2 == 0;
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out1.join("manifest.json")).unwrap()).unwrap();
    let table = cli::output::read_csv(&out1.join("trajectory.csv")).unwrap();
    let series = manifest["drift"]["series"].as_object().unwrap();
    let mut matches = !series.is_empty();
    for (name, v) in series {
        let col = table.column(name).unwrap();
        let ok = v["relative"].as_f64() == Some(relative_drift(col)) && v["absolute"].as_f64() == Some(cli::commands::absolute_drift(col));
        if !ok {
            eprintln!("drift mismatch for {name}: manifest {v}, csv {} {}", relative_drift(col), cli::commands::absolute_drift(col));
        }
        matches &= ok;
    }
    outcome(
        "11",
        "CLI determinism and manifest drift recomputation",
        identical && matches,
        format!("byte-identical CSV: {identical}, {} drift entries recomputed exactly: {matches}", series.len()),
    )
}

fn main() {
    let mut results = vec![criterion_1(), criterion_2(), criterion_3(), criterion_4()];
    let (c5, c5_literal) = criterion_5();
    results.push(c5);
    results.push(c5_literal);
    results.extend([criterion_6(), criterion_7(), criterion_8(), criterion_9(), criterion_10(), criterion_11()]);

    println!("\nacceptance criteria");
    let mut failed = 0;
    for r in &results {
        let tag = match (r.pass, r.waiver) {
            (true, _) => "PASS",
            (false, Some(_)) => "FAIL (documented)",
            (false, None) => {
                failed += 1;
                "FAIL"
            }
        };
        println!("[{tag}] {:>3} {}: {}", r.id, r.name, r.detail);
        if let (false, Some(w)) = (r.pass, r.waiver) {
            println!("           {w}");
        }
    }
    println!();
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
