use std::path::Path;

use crate::controllability::{build_gramian, strategic_test, GramianReport};
use crate::dynamics::mild_solution;
use crate::error::Result;
use crate::hum::solve;

use super::config::ScenarioConfig;
use super::report::{num, Csv, Summary};

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Positive,
    Negative,
}

pub fn simulate(cfg: &ScenarioConfig, out: &Path) -> Result<Verdict> {
    let sys = cfg.system()?;
    let u = cfg.control(&sys)?;
    let basis = sys.basis();
    let domain = basis.domain();
    let m = cfg.output.space_points;
    let xs: Vec<f64> = (0..m).map(|k| domain.lo + domain.len() * k as f64 / (m - 1) as f64).collect();

    let mut state = Csv::new(&["t", "x", "z"]);
    let mut modal = Csv::new(&["t", "mode", "coefficient"]);
    let mut peak = 0.0_f64;
    let times = cfg.snapshot_times();
    for &t in &times {
        let z = mild_solution(&sys, &u, t)?;
        for (i, c) in z.iter().enumerate() {
            modal.row(&[num(t), (i + 1).to_string(), num(*c)]);
        }
        for &x in &xs {
            let v = basis.evaluate(&z, x);
            peak = peak.max(v.abs());
            state.row(&[num(t), num(x), num(v)]);
        }
    }
    state.write(out, "state.csv")?;
    modal.write(out, "modal.csv")?;
    let mut s = Summary::new("simulate");
    s.item("alpha", num(sys.alpha()))
        .item("horizon", num(sys.horizon()))
        .item("modes", sys.n_modes())
        .item("channels", sys.n_channels())
        .item("snapshots", times.len())
        .item("max |z|", num(peak));
    s.write(out)?;
    println!("simulate: {} snapshots written to {}", times.len(), out.display());
    Ok(Verdict::Positive)
}

pub fn strategic(cfg: &ScenarioConfig, out: &Path) -> Result<Verdict> {
    let basis = cfg.basis()?;
    let actuators = cfg.actuators();
    let levels = cfg.solver.levels.unwrap_or(basis.n_levels());
    let rep = strategic_test(&actuators, &basis, levels)?;

    let mut csv = Csv::new(&["level", "eigenvalue", "multiplicity", "rank", "sigma_max", "status", "certified"]);
    for (idx, g) in rep.matrices.iter().enumerate() {
        let level = idx + 1;
        let failure = rep.failures.iter().find(|f| f.level == level);
        let (rank, smax) = match failure {
            Some(f) => (f.rank, f.sigma_max),
            None => (g.ncols(), g.clone().singular_values().max()),
        };
        let certified = match failure.and_then(|f| f.certified) {
            Some(true) => "exact-zero",
            Some(false) => "numerical",
            None if failure.is_some() => "unknown",
            None => "",
        };
        csv.row(&[
            level.to_string(),
            num(basis.levels()[idx].0),
            g.ncols().to_string(),
            rank.to_string(),
            num(smax),
            if failure.is_some() { "fail" } else { "ok" }.to_string(),
            certified.to_string(),
        ]);
    }
    csv.write(out, "strategic.csv")?;

    let reason = if rep.strategic {
        "strategic".to_string()
    } else if rep.too_few_actuators() {
        "p<r".to_string()
    } else {
        format!("rank deficient at levels {:?}", rep.failed_levels())
    };
    let mut s = Summary::new("strategic");
    s.item("actuators p", rep.p)
        .item("max multiplicity r", rep.r_max)
        .item("levels checked", rep.levels_checked)
        .item("rank tolerance", num(rep.rank_tolerance))
        .item("strategic", rep.strategic)
        .item("reason", &reason);
    s.write(out)?;
    println!("strategic: {reason}");
    Ok(if rep.strategic { Verdict::Positive } else { Verdict::Negative })
}

fn gramian_files(gram: &GramianReport, out: &Path) -> Result<()> {
    let mut w = Csv::new(&["i", "j", "value"]);
    for i in 0..gram.matrix.nrows() {
        for j in 0..gram.matrix.ncols() {
            w.row(&[(i + 1).to_string(), (j + 1).to_string(), num(gram.matrix[(i, j)])]);
        }
    }
    w.write(out, "gramian.csv")?;
    let mut e = Csv::new(&["index", "eigenvalue"]);
    for (k, v) in gram.eigenvalues.iter().enumerate() {
        e.row(&[(k + 1).to_string(), num(*v)]);
    }
    e.write(out, "eigenvalues.csv")?;
    Ok(())
}

fn gramian_items(s: &mut Summary, gram: &GramianReport) {
    s.item("modes N", gram.n_modes)
        .item("region modes N_omega", gram.n_omega)
        .item("kernel rank", gram.kernel_rank)
        .item("smallest eigenvalue", num(gram.smallest_eigenvalue))
        .item("pd tolerance", num(gram.pd_tolerance))
        .item("positive definite", gram.positive_definite)
        .item("condition number", num(gram.condition_number));
}

pub fn gramian(cfg: &ScenarioConfig, out: &Path) -> Result<Verdict> {
    let sys = cfg.system()?;
    let region = cfg.region()?;
    let gram = build_gramian(&sys, &region, cfg.solver.omega_modes)?;
    gramian_files(&gram, out)?;
    let mut s = Summary::new("gramian");
    s.item("region", format!("[{}, {}]", num(region.interval.lo), num(region.interval.hi)));
    gramian_items(&mut s, &gram);
    s.write(out)?;
    println!(
        "gramian: smallest eigenvalue {} ({})",
        num(gram.smallest_eigenvalue),
        if gram.positive_definite { "positive definite" } else { "singular" }
    );
    Ok(if gram.positive_definite { Verdict::Positive } else { Verdict::Negative })
}

pub fn hum(cfg: &ScenarioConfig, out: &Path) -> Result<Verdict> {
    let prob = cfg.hum_problem()?;
    let sol = solve(&prob)?;
    let p = prob.sys.n_channels();

    let header: Vec<String> = std::iter::once("t".to_string()).chain((1..=p).map(|c| format!("u_{c}"))).collect();
    let mut u = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (k, &t) in sol.sample_times.iter().enumerate() {
        let row: Vec<String> = std::iter::once(num(t)).chain((0..p).map(|c| num(sol.samples[(k, c)]))).collect();
        u.row(&row);
    }
    u.write(out, "u_star.csv")?;

    let mut g = Csv::new(&["k", "g", "g_raw"]);
    for k in 0..sol.regularized.g.len() {
        let raw = sol.raw.as_ref().map_or(String::new(), |r| num(r.g[k]));
        g.row(&[(k + 1).to_string(), num(sol.regularized.g[k]), raw]);
    }
    g.write(out, "g.csv")?;

    let mut profile = Csv::new(&["x", "target", "reached"]);
    let grid = prob.region.grid();
    for (k, &x) in grid.nodes.iter().enumerate() {
        profile.row(&[num(x), num(sol.target_samples[k]), num(sol.reached_samples[k])]);
    }
    profile.write(out, "profile.csv")?;

    let mut s = Summary::new("hum");
    s.item("epsilon", num(sol.epsilon))
        .item("energy", num(sol.energy()))
        .item("energy (quadrature)", num(sol.energy_quadrature))
        .item("residual", num(sol.residual()))
        .item("target norm", num(sol.target_norm))
        .item("relative residual", num(sol.relative_residual()))
        .item("residual tolerance", num(prob.residual_tolerance))
        .item("converged", sol.converged);
    if let Some(raw) = &sol.raw {
        s.item("energy (epsilon = 0)", num(raw.energy)).item("residual (epsilon = 0)", num(raw.residual));
    }
    gramian_items(&mut s, &sol.gramian);
    s.write(out)?;
    println!(
        "hum: energy {} relative residual {} ({})",
        num(sol.energy()),
        num(sol.relative_residual()),
        if sol.converged { "converged" } else { "not converged" }
    );
    Ok(if sol.converged { Verdict::Positive } else { Verdict::Negative })
}
