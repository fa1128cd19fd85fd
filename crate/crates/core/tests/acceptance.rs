//! Acceptance suite: one PASS/FAIL line per criterion. Run with
//! `cargo test -p fradic --test acceptance`.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use fradic::controllability::{build_gramian, strategic_test};
use fradic::dynamics::{
    apply_h, apply_h_star, control_inner, dual_pairing, free_evolution, kernel_antiderivative, mild_solution,
    ControlSignal, FractionalSystem, InitialKind,
};
use fradic::error::Error;
use fradic::hum::{minimum_energy_certificate, solve, HumProblem, Target};
use fradic::mlf::ml;
use fradic::spectral::{
    actuator_coefficients, cross_mass_matrix, extend_by_zero, restrict, Actuator, Interval, Region, SpectralBasis,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn example51(alpha: f64, n: usize) -> FractionalSystem {
    let basis = SpectralBasis::dirichlet_laplacian(n, Interval::unit()).unwrap();
    FractionalSystem::new(alpha, 1.0, basis, vec![Actuator::zone(0.0, 0.5)]).unwrap()
}

/// The smooth reachable profile used as the regional bump target.
fn bump_control() -> ControlSignal {
    ControlSignal::piecewise_constant(vec![0.0, 0.5, 1.0], DMatrix::from_column_slice(2, 1, &[1.0, -0.5])).unwrap()
}

fn mittag_leffler() -> Outcome {
    let start = Instant::now();
    let mut exp_err = 0.0_f64;
    for k in 0..1000 {
        let z = -50.0 + 55.0 * k as f64 / 999.0;
        exp_err = exp_err.max((ml(1.0, 1.0, z).unwrap() - z.exp()).abs() / z.exp());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut id_err = 0.0_f64;
    for _ in 0..1000 {
        let alpha = rng.gen_range(0.01..0.99);
        let beta = rng.gen_range(1.01..3.0);
        let z = rng.gen_range(-100.0..1.0);
        let e = ml(alpha, beta, z).unwrap();
        let e1 = ml(alpha, beta - 1.0, z).unwrap();
        let e2 = fradic::mlf::mittag_leffler_3(&fradic::mlf::MlfParams::new(alpha, beta).with_mu(2.0), z).unwrap();
        let residual = (alpha * e2 - (e1 + (1.0 + alpha - beta) * e)).abs() / (1.0 + e1.abs());
        id_err = id_err.max(residual);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        exp_err <= 1e-10 && id_err <= 1e-9 && secs < 1.0,
        format!("max rel err vs exp {exp_err:.2e} (tol 1e-10), identity residual {id_err:.2e} (tol 1e-9), {secs:.2} s (< 1 s)"),
    )
}

fn random_control(rng: &mut ChaCha8Rng, p: usize) -> ControlSignal {
    if rng.gen_bool(0.5) {
        let cells = rng.gen_range(1..12);
        let mut edges: Vec<f64> = (0..cells - 1).map(|_| rng.gen_range(0.0..1.0)).collect();
        edges.push(0.0);
        edges.push(1.0);
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup();
        let values = DMatrix::from_fn(edges.len() - 1, p, |_, _| rng.gen_range(-1.0..1.0));
        ControlSignal::piecewise_constant(edges, values).unwrap()
    } else {
        let c: Vec<[f64; 3]> = (0..p).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.5..8.0)]).collect();
        ControlSignal::function(p, move |t| DVector::from_fn(c.len(), |m, _| c[m][0] + c[m][1] * (c[m][2] * t).sin()))
    }
}

fn duality() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let basis = SpectralBasis::dirichlet_laplacian(16, Interval::unit()).unwrap();
    let acts = vec![Actuator::zone(0.0, 0.5), Actuator::pointwise(0.3)];
    let systems: Vec<FractionalSystem> = [0.6, 0.75, 0.9]
        .iter()
        .map(|&a| FractionalSystem::new(a, 1.0, basis.clone(), acts.clone()).unwrap())
        .collect();
    let mut worst = 0.0_f64;
    for k in 0..100 {
        let sys = &systems[k % 3];
        let u = random_control(&mut rng, 2);
        let v = DVector::<f64>::from_fn(16, |_, _| rng.gen_range(-1.0..1.0));
        let hu = apply_h(sys, &u).unwrap();
        let scale = (hu.norm() * v.norm()).max(f64::MIN_POSITIVE);
        worst = worst.max((hu.dot(&v) - dual_pairing(sys, &u, &v).unwrap()).abs() / scale);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-8 && secs < 10.0,
        format!("max |<Hu,v> - <u,H*v>| / (|Hu||v|) {worst:.2e} (tol 1e-8) over 100 pairs, {secs:.2} s (< 10 s)"),
    )
}

fn negative_example() -> Outcome {
    let basis = SpectralBasis::dirichlet_laplacian(16, Interval::unit()).unwrap();
    let act = Actuator::zone(0.0, 0.5);
    let rep = strategic_test(std::slice::from_ref(&act), &basis, 16).unwrap();
    let failed = rep.failed_levels();
    let coeffs = actuator_coefficients(&act, &basis).unwrap();
    let worst = failed.iter().map(|&j| coeffs[j - 1].abs()).fold(0.0, f64::max);
    let certified = rep.failures.iter().all(|f| f.certified == Some(true));
    outcome(
        failed == [4, 8, 12, 16] && worst <= 1e-14 && certified && !rep.strategic,
        format!("failed levels {failed:?}, max |coefficient| {worst:.1e} (tol 1e-14), exact zeros certified: {certified}"),
    )
}

fn regional_example() -> Outcome {
    let start = Instant::now();
    let sys = example51(0.75, 16);
    let region = Region::new(0.25, 0.75).unwrap();
    let gram = build_gramian(&sys, &region, None).unwrap();
    let target = apply_h(&sys, &bump_control()).unwrap();
    let sol = solve(&HumProblem::new(sys.clone(), region.clone(), Target::Modal(target))).unwrap();

    // forward simulation of u* as a function of time, independent of the Gramian assembly
    let g_ext = sol.regularized.g_extended.clone();
    let probe = sys.clone();
    let b = sys.horizon();
    let u = ControlSignal::function(1, move |t| {
        if t < b { apply_h_star(&probe, &g_ext, t).unwrap() } else { DVector::zeros(1) }
    });
    let reached = restrict(&mild_solution(&sys, &u, b).unwrap(), &region, sys.basis()).unwrap();
    let grid = region.grid();
    let diff: Vec<f64> = reached.iter().zip(&sol.target_samples).map(|(a, z)| a - z).collect();
    let forward = grid.norm(&diff) / sol.target_norm;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        gram.positive_definite && forward <= 1e-3 && sol.relative_residual() <= 1e-3 && secs < 60.0,
        format!(
            "N_omega {} lambda_min {:.2e} > tau_pd {:.2e}; bump residual {:.2e} (forward) / {:.2e} (algebraic) of |z_b| (tol 1e-3), {secs:.2} s (< 60 s)",
            gram.n_omega,
            gram.smallest_eigenvalue,
            gram.pd_tolerance,
            forward,
            sol.relative_residual()
        ),
    )
}

/// Piecewise-constant discretisation on cells graded toward `b`.
fn graded_cells(b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| b * (1.0 - (1.0 - k as f64 / n as f64).powi(4))).collect()
}

fn minimum_energy() -> Outcome {
    let sys = example51(0.75, 8);
    let region = Region::new(0.25, 0.75).unwrap();
    let target = apply_h(&sys, &bump_control()).unwrap();
    let prob = HumProblem::new(sys.clone(), region.clone(), Target::Modal(target.clone()))
        .with_epsilon(0.0)
        .with_omega_modes(5);
    let sol = solve(&prob).unwrap();
    let gram = &sol.gramian;

    let edges = graded_cells(1.0, 200);
    let widths = DVector::from_fn(200, |k, _| edges[k + 1] - edges[k]);
    let beta = actuator_coefficients(&Actuator::zone(0.0, 0.5), sys.basis()).unwrap();
    let mut h = DMatrix::zeros(8, 200);
    for i in 0..8 {
        let lambda = sys.basis().eigenvalue(i);
        for k in 0..200 {
            let f = |s: f64| kernel_antiderivative(0.75, lambda, 1.0 - s).unwrap();
            h[(i, k)] = beta[i] * (f(edges[k]) - f(edges[k + 1]));
        }
    }
    let a = &gram.restriction * h;
    let rhs = extend_by_zero(&sol.target_samples, &region, &gram.omega_basis).unwrap();
    let dinv_at = DMatrix::from_fn(200, a.nrows(), |k, j| a[(j, k)] / widths[k]);
    let gram_d = &a * &dinv_at;
    let chol = gram_d.clone().cholesky().expect("discrete Gramian is positive definite");
    let mult = chol.solve(&rhs);
    let u_h = &dinv_at * &mult;
    let oracle_energy = rhs.dot(&mult);
    let rel_energy = (sol.energy() - oracle_energy).abs() / oracle_energy;

    let to_signal = |c: &DVector<f64>| {
        ControlSignal::piecewise_constant(edges.clone(), DMatrix::from_column_slice(200, 1, c.as_slice())).unwrap()
    };
    let uh_signal = to_signal(&u_h);
    let ustar = &sol.control;
    let dist2 = sol.energy() - 2.0 * control_inner(&sys, ustar, &uh_signal).unwrap() + u_h.dot(&u_h.component_mul(&widths));
    let control_gap = dist2.max(0.0).sqrt() / sol.energy().sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let alternatives: Vec<ControlSignal> = (0..10)
        .map(|_| {
            let nu = DVector::from_fn(200, |_, _| rng.gen_range(-1.0..1.0));
            let proj = &dinv_at * chol.solve(&(&a * &nu));
            to_signal(&(&u_h + nu - proj))
        })
        .collect();
    let cert = minimum_energy_certificate(&prob, &sol, &alternatives).unwrap();
    let feasible = cert.entries.iter().all(|e| e.residual <= 1e-3 * sol.target_norm);
    let orth = cert.max_normalized_orthogonality;
    outcome(
        rel_energy <= 0.01 && control_gap <= 0.02 && orth <= 1e-6 && feasible && cert.minimal,
        format!(
            "HUM energy {:.6e} vs least-norm oracle {oracle_energy:.6e} (rel {rel_energy:.2e}, tol 1e-2); control L2 gap {control_gap:.2e} (tol 2e-2); \
             max normalised orthogonality {orth:.2e} (tol 1e-6) over 10 feasible alternatives; all costlier: {}",
            sol.energy(),
            cert.minimal
        ),
    )
}

fn classical_limit() -> Outcome {
    let n = 8;
    let b = 0.5;
    let basis = SpectralBasis::dirichlet_laplacian(n, Interval::unit()).unwrap();
    let act = Actuator::zone(0.0, 0.5);
    let z0 = DVector::from_fn(n, |i, _| [1.0, 0.0, 0.5].get(i).copied().unwrap_or(0.0));
    let sys = FractionalSystem::new(1.0, b, basis.clone(), vec![act.clone()])
        .unwrap()
        .with_initial(z0.clone(), InitialKind::ClassicalLimit)
        .unwrap();
    let beta = actuator_coefficients(&act, &basis).unwrap();
    let lambda = |i: usize| ((i + 1) as f64 * PI).powi(2);

    // simulate: z_i(t) = e^{-λt} z0 + β Σ u_k ∫ e^{-λ(t-s)} ds over the cells
    let edges = [0.0, 0.25, 0.5];
    let vals = [2.0, 1.0];
    let u = ControlSignal::piecewise_constant(edges.to_vec(), DMatrix::from_column_slice(2, 1, &vals)).unwrap();
    let mut sim_err = 0.0_f64;
    for &t in &[0.05, 0.1, 0.2, 0.3, 0.4, 0.5] {
        let z = mild_solution(&sys, &u, t).unwrap();
        for i in 0..n {
            let l = lambda(i);
            let mut exact = (-l * t).exp() * z0[i];
            for k in 0..2 {
                let (s0, s1) = (edges[k].min(t), edges[k + 1].min(t));
                exact += beta[i] * vals[k] * ((-l * (t - s1)).exp() - (-l * (t - s0)).exp()) / l;
            }
            sim_err = sim_err.max((z[i] - exact).abs());
        }
    }

    // Gramian: K_il = β_i β_l (1 − e^{−(λ_i+λ_l) b}) / (λ_i + λ_l)
    let k_exact = DMatrix::from_fn(n, n, |i, l| {
        let s = lambda(i) + lambda(l);
        beta[i] * beta[l] * (1.0 - (-s * b).exp()) / s
    });
    let region = Region::new(0.25, 0.75).unwrap();
    let gram = build_gramian(&sys, &region, None).unwrap();
    let k_err = (sys.gram_kernel().unwrap() - &k_exact).amax() / k_exact.amax();
    let r = cross_mass_matrix(&region, &gram.omega_basis, &basis).unwrap();
    let w_exact = &r * &k_exact * r.transpose();
    let w_err = (&gram.matrix - &w_exact).amax() / w_exact.amax();

    // HUM: u*(t) = Σ β_i e^{−λ_i(b−t)} (Rᵀg)_i with (W + εI) g = f from the closed-form W
    let target = free_evolution(&sys, b).unwrap() + apply_h(&sys, &u).unwrap();
    let sol = solve(&HumProblem::new(sys.clone(), region.clone(), Target::Modal(target))).unwrap();
    let psi = free_evolution(&sys, b).unwrap();
    let f = extend_by_zero(&sol.target_samples, &region, &gram.omega_basis).unwrap() - &r * &psi;
    let shifted = &w_exact + DMatrix::identity(gram.n_omega, gram.n_omega) * sol.epsilon;
    let g = shifted.cholesky().unwrap().solve(&f);
    let v = r.transpose() * &g;
    let energy_exact = g.dot(&(&w_exact * &g));
    let energy_err = (sol.energy() - energy_exact).abs() / energy_exact;
    let mut u_err = 0.0_f64;
    let mut u_scale = 0.0_f64;
    for (k, &t) in sol.sample_times.iter().enumerate() {
        let exact: f64 = (0..n).map(|i| beta[i] * (-lambda(i) * (b - t)).exp() * v[i]).sum();
        u_err = u_err.max((sol.samples[(k, 0)] - exact).abs());
        u_scale = u_scale.max(exact.abs());
    }
    let u_rel = u_err / u_scale;
    let worst = sim_err.max(k_err).max(w_err).max(energy_err).max(u_rel);
    outcome(
        worst <= 1e-6,
        format!(
            "simulate {sim_err:.1e}, modal Gramian {k_err:.1e}, regional Gramian {w_err:.1e}, HUM energy {energy_err:.1e}, u* {u_rel:.1e} (tol 1e-6)"
        ),
    )
}

fn unreachable_mode() -> Outcome {
    let sys = example51(0.75, 16);
    let region = Region::whole(Interval::unit());
    let target = DVector::from_fn(16, |i, _| if i == 3 { 1.0 } else { 0.0 });
    let mut lowest = f64::INFINITY;
    for k in 2..=12 {
        let eps = 10f64.powi(-k);
        let prob = HumProblem::new(sys.clone(), region.clone(), Target::Modal(target.clone())).with_epsilon(eps);
        lowest = lowest.min(solve(&prob).unwrap().relative_residual());
    }
    outcome(lowest > 0.5, format!("min residual / |z_b| over eps in 1e-2..1e-12: {lowest:.6} (must exceed 0.5)"))
}

fn integrability_guard() -> Outcome {
    let diagnostic = "Gramian time-integral non-integrable: 2(α−1) ≤ −1";
    let region = Region::new(0.25, 0.75).unwrap();
    let mut lib_ok = true;
    for alpha in [0.5, 0.35, 0.1] {
        let sys = example51(alpha, 16);
        let gram = build_gramian(&sys, &region, None);
        let hum = solve(&HumProblem::new(sys.clone(), region.clone(), Target::Zero));
        for r in [gram.map(|_| ()), hum.map(|_| ())] {
            lib_ok &= matches!(&r, Err(e @ Error::NonIntegrable { .. }) if e.to_string().starts_with(diagnostic));
        }
        lib_ok &= strategic_test(sys.actuators(), sys.basis(), 16).is_ok();
    }
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/example51-low-order.cfg");
    let out_dir = tempfile::tempdir().unwrap();
    let run = |cmd: &str| {
        Command::new(env!("CARGO_BIN_EXE_fradic"))
            .args([cmd, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out_dir.path())
            .output()
            .unwrap()
    };
    let mut codes = Vec::new();
    let mut cli_ok = true;
    for cmd in ["gramian", "hum"] {
        let o = run(cmd);
        codes.push(o.status.code());
        cli_ok &= o.status.code() == Some(3) && String::from_utf8_lossy(&o.stderr).contains(diagnostic);
    }
    let o = run("strategic");
    codes.push(o.status.code());
    let strategic_ok = matches!(o.status.code(), Some(0) | Some(2)) && out_dir.path().join("strategic.csv").exists();
    outcome(
        lib_ok && cli_ok && strategic_ok,
        format!("library errors for alpha in {{0.5, 0.35, 0.1}}: {lib_ok}; CLI exit codes gramian/hum/strategic {codes:?}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("Mittag-Leffler correctness", mittag_leffler),
        ("duality", duality),
        ("whole-domain obstruction", negative_example),
        ("regional controllability", regional_example),
        ("minimum-energy certificate", minimum_energy),
        ("classical heat limit", classical_limit),
        ("unreachable mode robustness", unreachable_mode),
        ("integrability guard", integrability_guard),
    ];
    let mut passed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        passed += o.pass as usize;
        println!("{} criterion {} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
    }
    println!("{passed}/{} criteria passed", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
