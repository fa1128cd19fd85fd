//! Regional minimum-energy steering by the Hilbert Uniqueness Method.
//!
//! In region coordinates the HUM operator `Λ = p_ω H H* p_ω*` is the Gramian
//! `W` of [`build_gramian`]. Solving `Λ g = z_b − p_ω ψ̃(b)` gives the optimal
//! control `u* = H* p_ω* g`, whose energy is `gᵀ W g`. The reached state is then
//! recomputed from `u*` and compared with the target on the region grid.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::controllability::{build_gramian, GramianReport};
use crate::dynamics::{apply_h, apply_h_star, control_energy, control_inner, free_evolution, ControlSignal, FractionalSystem};
use crate::error::{Error, Result};
use crate::spectral::{extend_by_zero, restrict, Region, SpectralVector};

/// Relative Tikhonov shift used when none is given: `ε = 1e-10 · trace(W)/N_ω`.
pub const DEFAULT_EPS_REL: f64 = 1e-10;
/// Default number of control samples on `[0, b)`.
pub const DEFAULT_GRID_POINTS: usize = 201;
/// Default relative residual below which a solve counts as converged.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    /// `(W + εI) g = rhs` by Cholesky.
    #[default]
    Direct,
    /// Eigen-decomposition of `W`, discarding eigenvalues below `ε`.
    TruncatedSpectrum,
}

/// Desired state on ω.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Zero,
    /// Values at the region's quadrature nodes.
    Samples(Vec<f64>),
    /// Modal coefficients on Ω, restricted to ω.
    Modal(SpectralVector),
}

#[derive(Debug, Clone)]
pub struct HumProblem {
    pub sys: FractionalSystem,
    pub region: Region,
    pub target: Target,
    /// Tikhonov shift; `None` selects `DEFAULT_EPS_REL · trace(W)/N_ω`.
    pub epsilon: Option<f64>,
    pub solver: SolverKind,
    /// Region coordinates; `None` selects the resolvable rank of the modal Gramian.
    pub n_omega: Option<usize>,
    pub grid_points: usize,
    pub residual_tolerance: f64,
}

impl HumProblem {
    pub fn new(sys: FractionalSystem, region: Region, target: Target) -> Self {
        Self {
            sys,
            region,
            target,
            epsilon: None,
            solver: SolverKind::default(),
            n_omega: None,
            grid_points: DEFAULT_GRID_POINTS,
            residual_tolerance: DEFAULT_RESIDUAL_TOL,
        }
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon = Some(eps);
        self
    }

    pub fn with_solver(mut self, solver: SolverKind) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_omega_modes(mut self, n: usize) -> Self {
        self.n_omega = Some(n);
        self
    }

    /// Target values at the region's quadrature nodes.
    pub fn target_samples(&self) -> Result<Vec<f64>> {
        let n = self.region.grid().len();
        match &self.target {
            Target::Zero => Ok(vec![0.0; n]),
            Target::Samples(s) if s.len() == n => Ok(s.clone()),
            Target::Samples(s) => Err(Error::invalid(format!(
                "target has {} samples, region grid has {n} nodes",
                s.len()
            ))),
            Target::Modal(c) => restrict(c, &self.region, self.sys.basis()),
        }
    }
}

/// `Λ` in region coordinates.
pub fn assemble_lambda(prob: &HumProblem) -> Result<GramianReport> {
    build_gramian(&prob.sys, &prob.region, prob.n_omega)
}

/// Multiplier and its diagnostics for one choice of regularisation.
#[derive(Debug, Clone)]
pub struct HumBranch {
    /// `g` in region coordinates.
    pub g: DVector<f64>,
    /// `p_ω* g` in modal coordinates.
    pub g_extended: SpectralVector,
    pub energy: f64,
    /// `‖p_ω z(b, u*) − z_b‖_{L²(ω)}`.
    pub residual: f64,
    pub final_state: SpectralVector,
}

#[derive(Debug, Clone)]
pub struct HumSolution {
    pub gramian: GramianReport,
    pub epsilon: f64,
    pub solver: SolverKind,
    /// Regularised solution.
    pub regularized: HumBranch,
    /// `ε = 0` solution; `None` when `W` is numerically singular.
    pub raw: Option<HumBranch>,
    /// `u* = H* p_ω* g` of the regularised branch.
    pub control: ControlSignal,
    pub sample_times: Vec<f64>,
    /// Control samples, rows = `sample_times`, columns = channels.
    pub samples: DMatrix<f64>,
    /// `∫‖u*‖²` recomputed from the control by quadrature.
    pub energy_quadrature: f64,
    pub target_norm: f64,
    pub target_samples: Vec<f64>,
    /// Reached state at the region's quadrature nodes.
    pub reached_samples: Vec<f64>,
    pub converged: bool,
}

impl HumSolution {
    pub fn energy(&self) -> f64 {
        self.regularized.energy
    }

    pub fn residual(&self) -> f64 {
        self.regularized.residual
    }

    pub fn relative_residual(&self) -> f64 {
        if self.target_norm > 0.0 {
            self.regularized.residual / self.target_norm
        } else {
            self.regularized.residual
        }
    }

    pub fn condition_number(&self) -> f64 {
        self.gramian.condition_number
    }
}

/// Sample times clustered toward `b`, the last one at `b − 1e-6·b`.
pub fn control_grid(horizon: f64, points: usize) -> Vec<f64> {
    let m = points.max(2);
    let mut t: Vec<f64> = (0..m)
        .map(|k| horizon * (std::f64::consts::FRAC_PI_2 * k as f64 / (m - 1) as f64).sin())
        .collect();
    t[m - 1] = horizon * (1.0 - 1e-6);
    if m > 2 && t[m - 2] >= t[m - 1] {
        t[m - 2] = 0.5 * (t[m - 3] + t[m - 1]);
    }
    t
}

fn solve_direct(w: &DMatrix<f64>, rhs: &DVector<f64>, eps: f64) -> Option<DVector<f64>> {
    let n = w.nrows();
    let shifted = w + DMatrix::identity(n, n) * eps;
    let chol = shifted.cholesky()?;
    let g = chol.solve(rhs);
    g.iter().all(|x| x.is_finite()).then_some(g)
}

fn solve_truncated(w: &DMatrix<f64>, rhs: &DVector<f64>, cutoff: f64) -> DVector<f64> {
    let eig = SymmetricEigen::new(w.clone());
    let mut g = DVector::zeros(w.nrows());
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff {
            let q = eig.eigenvectors.column(k);
            g += q * (q.dot(rhs) / lambda);
        }
    }
    g
}

fn branch(
    prob: &HumProblem,
    gram: &GramianReport,
    psi_b: &SpectralVector,
    target: &[f64],
    g: DVector<f64>,
) -> Result<HumBranch> {
    let g_extended = gram.restriction.transpose() * &g;
    let energy = g.dot(&(&gram.matrix * &g));
    let final_state = psi_b + prob.sys.gram_kernel()? * &g_extended;
    let residual = l2_misfit(prob, &final_state, target)?;
    Ok(HumBranch { g, g_extended, energy, residual, final_state })
}

fn l2_misfit(prob: &HumProblem, state: &SpectralVector, target: &[f64]) -> Result<f64> {
    let reached = restrict(state, &prob.region, prob.sys.basis())?;
    let diff: Vec<f64> = reached.iter().zip(target).map(|(a, b)| a - b).collect();
    Ok(prob.region.grid().norm(&diff))
}

/// HUM solve with forward verification.
pub fn solve(prob: &HumProblem) -> Result<HumSolution> {
    let gram = assemble_lambda(prob)?;
    let grid = prob.region.grid();
    let target = prob.target_samples()?;
    let target_norm = grid.norm(&target);

    let psi_b = free_evolution(&prob.sys, prob.sys.horizon())?;
    let target_modal = extend_by_zero(&target, &prob.region, &gram.omega_basis)?;
    let rhs = target_modal - &gram.restriction * &psi_b;

    let n_omega = gram.n_omega as f64;
    let eps = prob.epsilon.unwrap_or(DEFAULT_EPS_REL * gram.matrix.trace() / n_omega);
    if !(eps >= 0.0) {
        return Err(Error::invalid(format!("regularisation must be non-negative, got {eps}")));
    }

    let g = match prob.solver {
        SolverKind::Direct => solve_direct(&gram.matrix, &rhs, eps).ok_or_else(|| {
            Error::Singular(format!(
                "Gramian is not numerically positive definite (smallest eigenvalue {:e}); \
                 increase epsilon or the mode count",
                gram.smallest_eigenvalue
            ))
        })?,
        SolverKind::TruncatedSpectrum => solve_truncated(&gram.matrix, &rhs, eps),
    };
    let regularized = branch(prob, &gram, &psi_b, &target, g)?;

    let raw = if eps == 0.0 {
        Some(regularized.clone())
    } else {
        let g0 = match prob.solver {
            SolverKind::Direct => solve_direct(&gram.matrix, &rhs, 0.0),
            SolverKind::TruncatedSpectrum => Some(solve_truncated(&gram.matrix, &rhs, gram.pd_tolerance)),
        };
        match g0 {
            Some(g0) => Some(branch(prob, &gram, &psi_b, &target, g0)?),
            None => {
                log::warn!("unregularised Gramian solve failed; only the regularised branch is reported");
                None
            }
        }
    };

    let control = ControlSignal::Adjoint { v: regularized.g_extended.clone() };
    let sample_times = control_grid(prob.sys.horizon(), prob.grid_points);
    let mut samples = DMatrix::zeros(sample_times.len(), prob.sys.n_channels());
    for (k, &t) in sample_times.iter().enumerate() {
        samples.set_row(k, &apply_h_star(&prob.sys, &regularized.g_extended, t)?.transpose());
    }
    let energy_quadrature = control_energy(&prob.sys, &control)?;
    let reached_samples = restrict(&regularized.final_state, &prob.region, prob.sys.basis())?;

    let scale = if target_norm > 0.0 { target_norm } else { 1.0 };
    let converged = regularized.residual <= prob.residual_tolerance * scale;
    if !converged {
        log::warn!(
            "HUM residual {:e} exceeds {:e} of the target norm",
            regularized.residual,
            prob.residual_tolerance
        );
    }
    Ok(HumSolution {
        gramian: gram,
        epsilon: eps,
        solver: prob.solver,
        regularized,
        raw,
        control,
        sample_times,
        samples,
        energy_quadrature,
        target_norm,
        target_samples: target,
        reached_samples,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateEntry {
    pub energy: f64,
    /// `‖p_ω z(b, u1) − z_b‖_{L²(ω)}`.
    pub residual: f64,
    /// `∫⟨u*, u* − u1⟩`.
    pub orthogonality: f64,
    /// `orthogonality / (‖u*‖ ‖u* − u1‖)`.
    pub normalized_orthogonality: f64,
    pub energy_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub optimal_energy: f64,
    pub entries: Vec<CertificateEntry>,
    pub energy_tolerance: f64,
    /// All alternatives cost at least `J(u*) − energy_tolerance`.
    pub minimal: bool,
    pub max_normalized_orthogonality: f64,
}

/// Compares `u*` against controls that also reach the target.
pub fn minimum_energy_certificate(
    prob: &HumProblem,
    sol: &HumSolution,
    alternatives: &[ControlSignal],
) -> Result<CertificateReport> {
    let sys = &prob.sys;
    let ustar = &sol.control;
    let j_star = control_energy(sys, ustar)?;
    let tol = 1e-8 * j_star.max(f64::MIN_POSITIVE);
    let psi_b = free_evolution(sys, sys.horizon())?;
    let mut entries = Vec::with_capacity(alternatives.len());
    for u1 in alternatives {
        let energy = control_energy(sys, u1)?;
        let cross = control_inner(sys, ustar, u1)?;
        let orthogonality = j_star - cross;
        let dist2 = (j_star - 2.0 * cross + energy).max(0.0);
        let denom = (j_star * dist2).sqrt();
        let normalized_orthogonality = if denom > 0.0 { orthogonality.abs() / denom } else { 0.0 };
        let state = &psi_b + apply_h(sys, u1)?;
        let residual = l2_misfit(prob, &state, &sol.target_samples)?;
        entries.push(CertificateEntry {
            energy,
            residual,
            orthogonality,
            normalized_orthogonality,
            energy_ok: energy >= j_star - tol,
        });
    }
    Ok(CertificateReport {
        optimal_energy: j_star,
        minimal: entries.iter().all(|e| e.energy_ok),
        max_normalized_orthogonality: entries.iter().map(|e| e.normalized_orthogonality).fold(0.0, f64::max),
        entries,
        energy_tolerance: tol,
    })
}
