//! Strategic-actuator rank test and the regional controllability Gramian.
//!
//! The Gramian is expressed in the region's own Dirichlet sine basis
//! `η_1, …, η_{N_ω}`: with `R_kl = (η_k, ξ_l)_{L²(ω)}` and `K` the full modal
//! Gramian of [`FractionalSystem::gram_kernel`], `W = R K Rᵀ` represents
//! `p_ω H H* p_ω*`. Because every high-mode kernel behaves like the same
//! power of `s` near `s = 0`, `K` has a small numerical rank in double precision,
//! and `N_ω` defaults to that rank.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dynamics::FractionalSystem;
use crate::error::{Error, Result};
use crate::spectral::{
    actuator_coefficients, coefficient_is_exact_zero, cross_mass_matrix, Actuator, Region, SpectralBasis,
};

/// Relative singular-value threshold of the rank test.
pub const RANK_REL_TOL: f64 = 1e-9;
/// Relative eigenvalue threshold for positive definiteness, scaled by `trace/N`.
pub const PD_REL_TOL: f64 = 1e-10;
/// Eigenvalue threshold of `K`, relative to its largest eigenvalue, defining the default `N_ω`.
pub const RESOLVABLE_REL_TOL: f64 = 1e-8;

/// `G_j`: entry `(i, k)` is `(p_{D_i} g_i, ξ_{jk})`, a `p × r_j` matrix. `j` is 1-based.
pub fn build_gj(actuators: &[Actuator], basis: &SpectralBasis, j: usize) -> Result<DMatrix<f64>> {
    if j == 0 || j > basis.n_levels() {
        return Err(Error::invalid(format!("level {j} outside 1..={}", basis.n_levels())));
    }
    let modes = basis.level_modes(j - 1);
    let coeffs = actuators
        .iter()
        .map(|a| actuator_coefficients(a, basis))
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(actuators.len(), modes.len(), |i, k| coeffs[i][modes.start + k]))
}

fn rank(m: &DMatrix<f64>, tol: f64) -> (usize, f64) {
    if m.is_empty() {
        return (0, 0.0);
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    (sv.iter().filter(|&&s| s > tol).count(), smax)
}

/// A mode level at which the rank condition fails.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategicFailure {
    /// 1-based level index.
    pub level: usize,
    pub rank: usize,
    pub multiplicity: usize,
    /// Largest singular value of `G_j`.
    pub sigma_max: f64,
    /// `Some(true)` when every entry of `G_j` is certified zero in exact arithmetic.
    pub certified: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategicReport {
    pub strategic: bool,
    pub p: usize,
    pub r_max: usize,
    /// Number of eigenvalue levels examined.
    pub levels_checked: usize,
    pub rank_tolerance: f64,
    pub failures: Vec<StrategicFailure>,
    pub matrices: Vec<DMatrix<f64>>,
}

impl StrategicReport {
    pub fn too_few_actuators(&self) -> bool {
        self.p < self.r_max
    }

    pub fn failed_levels(&self) -> Vec<usize> {
        self.failures.iter().map(|f| f.level).collect()
    }
}

/// Checks `p ≥ max r_j` and `rank G_j = r_j` for the first `levels` eigenvalue levels.
pub fn strategic_test(actuators: &[Actuator], basis: &SpectralBasis, levels: usize) -> Result<StrategicReport> {
    if levels == 0 {
        return Err(Error::invalid("at least one mode level must be checked"));
    }
    if actuators.is_empty() {
        return Err(Error::invalid("at least one actuator is required"));
    }
    let levels = levels.min(basis.n_levels());
    let matrices = (1..=levels).map(|j| build_gj(actuators, basis, j)).collect::<Result<Vec<_>>>()?;
    let scale = matrices.iter().map(|g| rank(g, 0.0).1).fold(0.0, f64::max);
    let tol = RANK_REL_TOL * scale;
    let r_max = basis.levels()[..levels].iter().map(|l| l.1).max().unwrap_or(0);

    let mut failures = Vec::new();
    for (idx, g) in matrices.iter().enumerate() {
        let j = idx + 1;
        let r_j = g.ncols();
        let (rk, smax) = rank(g, tol);
        if rk < r_j {
            let modes = basis.level_modes(idx);
            let certified = actuators.iter().try_fold(true, |all, a| {
                modes.clone().try_fold(all, |acc, m| coefficient_is_exact_zero(a, basis, m).map(|z| acc && z))
            });
            failures.push(StrategicFailure { level: j, rank: rk, multiplicity: r_j, sigma_max: smax, certified });
        }
    }
    let strategic = actuators.len() >= r_max && failures.is_empty();
    Ok(StrategicReport {
        strategic,
        p: actuators.len(),
        r_max,
        levels_checked: levels,
        rank_tolerance: tol,
        failures,
        matrices,
    })
}

/// Number of eigenvalues of a positive semi-definite `K` above `PD_REL_TOL · trace / N`.
pub fn numerical_rank(k: &DMatrix<f64>) -> usize {
    let n = k.nrows().max(1);
    let tol = PD_REL_TOL * k.trace() / n as f64;
    k.clone().symmetric_eigenvalues().iter().filter(|&&e| e > tol).count()
}

#[derive(Debug, Clone)]
pub struct GramianReport {
    /// `W = R K Rᵀ`, `N_ω × N_ω`.
    pub matrix: DMatrix<f64>,
    /// Eigenvalues of `W`, ascending.
    pub eigenvalues: DVector<f64>,
    pub smallest_eigenvalue: f64,
    pub positive_definite: bool,
    pub pd_tolerance: f64,
    /// `λ_max / λ_min` (infinite when `λ_min ≤ 0`).
    pub condition_number: f64,
    pub horizon: f64,
    /// Truncation `N` of the state basis.
    pub n_modes: usize,
    /// Dimension `N_ω` of the region coordinates.
    pub n_omega: usize,
    /// Numerical rank of the full modal Gramian `K`.
    pub kernel_rank: usize,
    /// Region basis `η_k`.
    pub omega_basis: SpectralBasis,
    /// `R`, `N_ω × N`.
    pub restriction: DMatrix<f64>,
}

/// Number of eigenvalues of `K` above `RESOLVABLE_REL_TOL · λ_max`.
pub fn resolvable_rank(k: &DMatrix<f64>) -> usize {
    let ev = k.clone().symmetric_eigenvalues();
    let top = ev.iter().copied().fold(0.0_f64, f64::max);
    ev.iter().filter(|&&e| e > RESOLVABLE_REL_TOL * top).count()
}

/// Assembles and analyses the ω-projected Gramian. `n_omega = None` selects
/// `resolvable_rank(K)`.
pub fn build_gramian(sys: &FractionalSystem, region: &Region, n_omega: Option<usize>) -> Result<GramianReport> {
    let k = sys.gram_kernel()?;
    let kernel_rank = numerical_rank(k);
    let n_omega = n_omega.unwrap_or_else(|| resolvable_rank(k)).max(1);
    let omega_basis = SpectralBasis::dirichlet_laplacian(n_omega, region.interval)?;
    let r = cross_mass_matrix(region, &omega_basis, sys.basis())?;
    let w = &r * k * r.transpose();
    let w = (&w + w.transpose()) * 0.5;
    let eig = SymmetricEigen::new(w.clone());
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let smallest = ev[0];
    let largest = *ev.last().unwrap();
    let pd_tolerance = PD_REL_TOL * w.trace() / n_omega as f64;
    let positive_definite = smallest > pd_tolerance;
    let condition_number = if smallest > 0.0 { largest / smallest } else { f64::INFINITY };
    Ok(GramianReport {
        matrix: w,
        eigenvalues: DVector::from_vec(ev),
        smallest_eigenvalue: smallest,
        positive_definite,
        pd_tolerance,
        condition_number,
        horizon: sys.horizon(),
        n_modes: sys.n_modes(),
        n_omega,
        kernel_rank,
        omega_basis,
        restriction: r,
    })
}
