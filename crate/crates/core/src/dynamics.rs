//! Mild solutions, the control-to-state map `H`, its adjoint `H*` and the
//! HUM adjoint state, all diagonal in the spectral basis.
//!
//! With `k_i(τ) = τ^{α−1} E_{α,α}(−λ_i τ^α)` and actuator coefficients
//! `β_i^{(m)}`:
//!
//! ```text
//! (Hu)_i      = Σ_m β_i^{(m)} ∫_0^b k_i(b−s) u_m(s) ds
//! (H*v)_m(t)  = Σ_i β_i^{(m)} k_i(b−t) v_i
//! ```
//!
//! Piecewise-constant and piecewise-linear controls are integrated exactly
//! through the antiderivatives `∫_0^τ k = τ^α E_{α,α+1}(−λτ^α)` and
//! `∫_0^τ r k(r) dr = τ^{α+1}[E_{α,α+1} − E_{α,α+2}](−λτ^α)`. Controls of the
//! form `H*v` are integrated against the kernel with the `2α−2` weighted rule,
//! which is where the Gramian lives.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mlf::{kernel_weight, ml};
use crate::quadrature::{adaptive_integrate, GradedRule, SingularRule, WeightedRule};
use crate::spectral::{actuator_coefficients, check_len, Actuator, SpectralBasis, SpectralVector};

/// How the initial datum enters the free evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialKind {
    /// `lim_{t→0⁺} D^{α−1} z = z_0`: `c_i(t) = t^{α−1} E_{α,α}(−λ_i t^α) z_{0,i}`.
    WeightedRl,
    /// `lim_{t→0⁺} z = z_0`: `c_i(t) = E_{α,1}(−λ_i t^α) z_{0,i}`.
    #[default]
    ClassicalLimit,
}

/// A controlled fractional diffusion system in spectral coordinates.
#[derive(Clone)]
pub struct FractionalSystem {
    alpha: f64,
    horizon: f64,
    basis: SpectralBasis,
    actuators: Vec<Actuator>,
    /// `N × p`, column `m` holds `β^{(m)}`.
    actuator_matrix: DMatrix<f64>,
    initial: SpectralVector,
    initial_kind: InitialKind,
    gram: OnceLock<DMatrix<f64>>,
    table: OnceLock<KernelTable>,
}

/// `E_{α,α}(−λ_i (b−s)^α)` at the nodes of the `α−1` graded rule on `[0, b]`.
#[derive(Debug, Clone)]
struct KernelTable {
    times: Vec<f64>,
    weights: Vec<f64>,
    /// Rows: nodes; columns: modes.
    values: DMatrix<f64>,
}

impl fmt::Debug for FractionalSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FractionalSystem")
            .field("alpha", &self.alpha)
            .field("horizon", &self.horizon)
            .field("modes", &self.basis.n_modes())
            .field("actuators", &self.actuators)
            .field("initial_kind", &self.initial_kind)
            .finish()
    }
}

impl FractionalSystem {
    /// System with zero initial state. `alpha ∈ (0, 1]`; `alpha = 1` is the heat equation.
    pub fn new(alpha: f64, horizon: f64, basis: SpectralBasis, actuators: Vec<Actuator>) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::domain(format!("fractional order must lie in (0, 1], got {alpha}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::domain(format!("time horizon must be positive, got {horizon}")));
        }
        if actuators.is_empty() {
            return Err(Error::invalid("at least one actuator is required"));
        }
        let cols = actuators
            .iter()
            .map(|a| actuator_coefficients(a, &basis))
            .collect::<Result<Vec<_>>>()?;
        let actuator_matrix = DMatrix::from_columns(&cols);
        let initial = DVector::zeros(basis.n_modes());
        Ok(Self {
            alpha,
            horizon,
            basis,
            actuators,
            actuator_matrix,
            initial,
            initial_kind: InitialKind::default(),
            gram: OnceLock::new(),
            table: OnceLock::new(),
        })
    }

    pub fn with_initial(mut self, z0: SpectralVector, kind: InitialKind) -> Result<Self> {
        check_len(&z0, &self.basis)?;
        self.initial = z0;
        self.initial_kind = kind;
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }
    pub fn actuators(&self) -> &[Actuator] {
        &self.actuators
    }
    pub fn actuator_matrix(&self) -> &DMatrix<f64> {
        &self.actuator_matrix
    }
    pub fn initial(&self) -> &SpectralVector {
        &self.initial
    }
    pub fn initial_kind(&self) -> InitialKind {
        self.initial_kind
    }
    pub fn n_modes(&self) -> usize {
        self.basis.n_modes()
    }
    pub fn n_channels(&self) -> usize {
        self.actuators.len()
    }

    /// `k_i(τ) = τ^{α−1} E_{α,α}(−λ_i τ^α)` for every mode.
    pub fn kernel(&self, tau: f64) -> Result<DVector<f64>> {
        if !(tau > 0.0) && self.alpha < 1.0 {
            return Err(Error::domain(format!("kernel is singular at elapsed time {tau}")));
        }
        let scale = tau.powf(self.alpha - 1.0);
        let mut out = DVector::zeros(self.n_modes());
        for (i, &lambda) in self.basis.eigenvalues().iter().enumerate() {
            out[i] = scale * kernel_weight(self.alpha, lambda, tau)?;
        }
        Ok(out)
    }

    /// `N × N` matrix `K = (ββᵀ) ∘ ∫_0^b s^{2α−2} E_{α,α}(−λ_i s^α) E_{α,α}(−λ_l s^α) ds`,
    /// the Gramian `HH*` in full spectral coordinates.
    pub fn gram_kernel(&self) -> Result<&DMatrix<f64>> {
        if let Some(k) = self.gram.get() {
            return Ok(k);
        }
        let k = self.assemble_gram_kernel()?;
        Ok(self.gram.get_or_init(|| k))
    }

    fn horizon_table(&self) -> Result<&KernelTable> {
        if let Some(t) = self.table.get() {
            return Ok(t);
        }
        let rule = GradedRule::with_defaults(self.alpha - 1.0)?;
        let (times, weights) = rule.time_nodes(self.horizon);
        let mut values = DMatrix::zeros(times.len(), self.n_modes());
        for (k, &s) in times.iter().enumerate() {
            for (i, &lambda) in self.basis.eigenvalues().iter().enumerate() {
                values[(k, i)] = kernel_weight(self.alpha, lambda, self.horizon - s)?;
            }
        }
        Ok(self.table.get_or_init(|| KernelTable { times, weights, values }))
    }

    fn assemble_gram_kernel(&self) -> Result<DMatrix<f64>> {
        if self.alpha <= 0.5 {
            return Err(Error::NonIntegrable { alpha: self.alpha });
        }
        let n = self.n_modes();
        let rule = GradedRule::with_defaults(2.0 * self.alpha - 2.0)?;
        let scale = self.horizon.powf(rule.gamma() + 1.0);
        // Rows: quadrature nodes; columns: modes; entries √w E_{α,α}(−λ_i τ^α).
        let nodes = rule.nodes();
        let mut e = DMatrix::zeros(nodes.len(), n);
        for (k, (&t, &w)) in nodes.iter().zip(rule.weights()).enumerate() {
            let tau = self.horizon * t;
            let sw = (w * scale).sqrt();
            for (i, &lambda) in self.basis.eigenvalues().iter().enumerate() {
                e[(k, i)] = sw * kernel_weight(self.alpha, lambda, tau)?;
            }
        }
        let time = e.transpose() * &e;
        let c = &self.actuator_matrix * self.actuator_matrix.transpose();
        let k = time.component_mul(&c);
        Ok((&k + k.transpose()) * 0.5)
    }
}

/// Closure-backed control channel values.
pub type ControlFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// A control `u ∈ L²(0, b; R^p)`.
#[derive(Clone)]
pub enum ControlSignal {
    Zero { channels: usize },
    /// Linear interpolation of `values` (rows = `times`, columns = channels).
    Sampled { times: Vec<f64>, values: DMatrix<f64> },
    /// Constant on each cell `[edges[k], edges[k+1])` (rows = cells, columns = channels).
    PiecewiseConstant { edges: Vec<f64>, values: DMatrix<f64> },
    /// `u = H* v` for the system it is used with.
    Adjoint { v: SpectralVector },
    Function { channels: usize, f: ControlFn },
    /// `Σ c_k u_k`.
    Sum(Vec<(f64, ControlSignal)>),
}

impl fmt::Debug for ControlSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero { channels } => write!(f, "Zero({channels})"),
            Self::Sampled { times, values } => write!(f, "Sampled({} x {})", times.len(), values.ncols()),
            Self::PiecewiseConstant { edges, values } => {
                write!(f, "PiecewiseConstant({} x {})", edges.len().saturating_sub(1), values.ncols())
            }
            Self::Adjoint { v } => write!(f, "Adjoint({} modes)", v.len()),
            Self::Function { channels, .. } => write!(f, "Function({channels})"),
            Self::Sum(parts) => f.debug_list().entries(parts.iter().map(|p| &p.1)).finish(),
        }
    }
}

impl ControlSignal {
    pub fn function<F>(channels: usize, f: F) -> Self
    where
        F: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    {
        Self::Function { channels, f: Arc::new(f) }
    }

    pub fn sampled(times: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        if times.len() < 2 || values.nrows() != times.len() {
            return Err(Error::invalid("sampled control needs ≥ 2 times and one row per time"));
        }
        check_increasing(&times)?;
        Ok(Self::Sampled { times, values })
    }

    pub fn piecewise_constant(edges: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        if edges.len() < 2 || values.nrows() + 1 != edges.len() {
            return Err(Error::invalid("piecewise-constant control needs one row per cell"));
        }
        check_increasing(&edges)?;
        Ok(Self::PiecewiseConstant { edges, values })
    }

    pub fn scaled(self, c: f64) -> Self {
        Self::Sum(vec![(c, self)])
    }

    /// `a·self + b·other`.
    pub fn combine(self, a: f64, other: ControlSignal, b: f64) -> Self {
        Self::Sum(vec![(a, self), (b, other)])
    }

    fn channels(&self, sys: &FractionalSystem) -> usize {
        match self {
            Self::Zero { channels } | Self::Function { channels, .. } => *channels,
            Self::Sampled { values, .. } | Self::PiecewiseConstant { values, .. } => values.ncols(),
            Self::Adjoint { .. } => sys.n_channels(),
            Self::Sum(parts) => parts.first().map_or(sys.n_channels(), |p| p.1.channels(sys)),
        }
    }

    fn check(&self, sys: &FractionalSystem) -> Result<()> {
        match self {
            Self::Sum(parts) => return parts.iter().try_for_each(|p| p.1.check(sys)),
            Self::Adjoint { v } => return check_len(v, sys.basis()),
            Self::Sampled { times, .. } => check_covers(times, sys.horizon())?,
            Self::PiecewiseConstant { edges, .. } => check_covers(edges, sys.horizon())?,
            Self::Zero { .. } | Self::Function { .. } => {}
        }
        if self.channels(sys) != sys.n_channels() {
            return Err(Error::invalid(format!(
                "control has {} channels, system has {} actuators",
                self.channels(sys),
                sys.n_channels()
            )));
        }
        Ok(())
    }

    /// `u(t)`; for adjoint controls `t < b` is required when `α < 1`.
    pub fn value(&self, sys: &FractionalSystem, t: f64) -> Result<DVector<f64>> {
        Ok(match self {
            Self::Zero { channels } => DVector::zeros(*channels),
            Self::Sampled { times, values } => {
                let k = locate(times, t);
                let (t0, t1) = (times[k], times[k + 1]);
                let theta = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
                (values.row(k) * (1.0 - theta) + values.row(k + 1) * theta).transpose()
            }
            Self::PiecewiseConstant { edges, values } => values.row(locate(edges, t)).transpose(),
            Self::Adjoint { v } => apply_h_star(sys, v, t)?,
            Self::Function { f, .. } => f(t),
            Self::Sum(parts) => {
                let mut out = DVector::zeros(self.channels(sys));
                for (c, u) in parts {
                    out += u.value(sys, t)? * *c;
                }
                out
            }
        })
    }
}

fn check_increasing(xs: &[f64]) -> Result<()> {
    if xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("control breakpoints must be finite and strictly increasing"));
    }
    Ok(())
}

fn check_covers(xs: &[f64], horizon: f64) -> Result<()> {
    let tol = 1e-12 * horizon;
    if xs[0] > tol || *xs.last().unwrap() < horizon - tol {
        return Err(Error::invalid(format!(
            "control breakpoints [{}, {}] do not cover [0, {horizon}]",
            xs[0],
            xs.last().unwrap()
        )));
    }
    Ok(())
}

/// Index `k` with `xs[k] ≤ t < xs[k+1]`, clamped to the valid cells.
fn locate(xs: &[f64], t: f64) -> usize {
    let k = xs.partition_point(|&x| x <= t);
    k.saturating_sub(1).min(xs.len() - 2)
}

/// `∫_0^τ r^{α−1} E_{α,α}(−λ r^α) dr = τ^α E_{α,α+1}(−λτ^α)`.
pub fn kernel_antiderivative(alpha: f64, lambda: f64, tau: f64) -> Result<f64> {
    if tau <= 0.0 {
        return Ok(0.0);
    }
    let ta = tau.powf(alpha);
    Ok(ta * ml(alpha, alpha + 1.0, -lambda * ta)?)
}

/// `∫_0^τ r^α E_{α,α}(−λ r^α) dr = τ^{α+1}[E_{α,α+1} − E_{α,α+2}](−λτ^α)`.
pub fn kernel_first_moment(alpha: f64, lambda: f64, tau: f64) -> Result<f64> {
    if tau <= 0.0 {
        return Ok(0.0);
    }
    let ta = tau.powf(alpha);
    let z = -lambda * ta;
    Ok(tau * ta * (ml(alpha, alpha + 1.0, z)? - ml(alpha, alpha + 2.0, z)?))
}

/// Modal integrals `∫_0^h k_i(h−s) u_m(s) ds` as an `N × p` matrix.
fn duhamel_matrix(sys: &FractionalSystem, u: &ControlSignal, h: f64) -> Result<DMatrix<f64>> {
    let n = sys.n_modes();
    let p = sys.n_channels();
    let alpha = sys.alpha();
    let lambdas = sys.basis().eigenvalues();
    let mut out = DMatrix::zeros(n, p);
    match u {
        ControlSignal::Zero { .. } => {}
        ControlSignal::PiecewiseConstant { edges, values } => {
            for (i, &lambda) in lambdas.iter().enumerate() {
                let mut f_prev = kernel_antiderivative(alpha, lambda, h - edges[0].max(0.0))?;
                for c in 0..values.nrows() {
                    let s1 = edges[c + 1].min(h);
                    if edges[c] >= h {
                        break;
                    }
                    let f_next = kernel_antiderivative(alpha, lambda, h - s1)?;
                    let weight = f_prev - f_next;
                    for m in 0..p {
                        out[(i, m)] += weight * values[(c, m)];
                    }
                    f_prev = f_next;
                }
            }
        }
        ControlSignal::Sampled { times, values } => {
            for (i, &lambda) in lambdas.iter().enumerate() {
                for c in 0..times.len() - 1 {
                    let (s0, s1) = (times[c].max(0.0), times[c + 1].min(h));
                    if s0 >= s1 {
                        continue;
                    }
                    let (tau0, tau1) = (h - s0, h - s1);
                    let df = kernel_antiderivative(alpha, lambda, tau0)? - kernel_antiderivative(alpha, lambda, tau1)?;
                    let dg = kernel_first_moment(alpha, lambda, tau0)? - kernel_first_moment(alpha, lambda, tau1)?;
                    let dt = times[c + 1] - times[c];
                    for m in 0..p {
                        let slope = (values[(c + 1, m)] - values[(c, m)]) / dt;
                        let at_s0 = values[(c, m)] + slope * (s0 - times[c]);
                        out[(i, m)] += (at_s0 + slope * tau0) * df - slope * dg;
                    }
                }
            }
        }
        ControlSignal::Function { f, .. } if (h - sys.horizon()).abs() <= 1e-14 * h => {
            let table = sys.horizon_table()?;
            for (k, (&s, &w)) in table.times.iter().zip(&table.weights).enumerate() {
                let us = f(s);
                for i in 0..n {
                    let e = table.values[(k, i)] * w;
                    for m in 0..p {
                        out[(i, m)] += e * us[m];
                    }
                }
            }
        }
        ControlSignal::Function { f, .. } => {
            let rule = GradedRule::with_defaults(alpha - 1.0)?;
            let (times, weights) = rule.time_nodes(h);
            for (&s, &w) in times.iter().zip(&weights) {
                let us = f(s);
                for (i, &lambda) in lambdas.iter().enumerate() {
                    let e = kernel_weight(alpha, lambda, h - s)? * w;
                    for m in 0..p {
                        out[(i, m)] += e * us[m];
                    }
                }
            }
        }
        ControlSignal::Adjoint { .. } => {
            return Err(Error::invalid("adjoint controls are mixed into modes, not channels"));
        }
        ControlSignal::Sum(parts) => {
            for (c, part) in parts {
                out += duhamel_matrix(sys, part, h)? * *c;
            }
        }
    }
    Ok(out)
}

/// Modal response at horizon `h ≤ b` to an adjoint control `u = H*v`.
fn adjoint_response(sys: &FractionalSystem, v: &SpectralVector, h: f64) -> Result<SpectralVector> {
    let b = sys.horizon();
    if (h - b).abs() <= 1e-14 * b {
        return Ok(sys.gram_kernel()? * v);
    }
    let alpha = sys.alpha();
    let rule = GradedRule::with_defaults(alpha - 1.0)?;
    let (times, weights) = rule.time_nodes(h);
    let beta = sys.actuator_matrix();
    let mut acc = DMatrix::<f64>::zeros(sys.n_modes(), sys.n_channels());
    for (&s, &w) in times.iter().zip(&weights) {
        let us = apply_h_star(sys, v, s)?;
        for (i, &lambda) in sys.basis().eigenvalues().iter().enumerate() {
            let e = kernel_weight(alpha, lambda, h - s)? * w;
            for m in 0..us.len() {
                acc[(i, m)] += e * us[m];
            }
        }
    }
    Ok(DVector::from_fn(sys.n_modes(), |i, _| (0..sys.n_channels()).map(|m| beta[(i, m)] * acc[(i, m)]).sum()))
}

fn duhamel(sys: &FractionalSystem, u: &ControlSignal, h: f64) -> Result<SpectralVector> {
    let beta = sys.actuator_matrix();
    let mut out = {
        let d = duhamel_matrix(sys, &without_adjoint(sys, u), h)?;
        DVector::from_fn(sys.n_modes(), |i, _| (0..sys.n_channels()).map(|m| beta[(i, m)] * d[(i, m)]).sum())
    };
    for (c, v) in adjoint_parts(u, 1.0) {
        out += adjoint_response(sys, &v, h)? * c;
    }
    Ok(out)
}

/// The control with all adjoint components replaced by zero.
fn without_adjoint(sys: &FractionalSystem, u: &ControlSignal) -> ControlSignal {
    match u {
        ControlSignal::Adjoint { .. } => ControlSignal::Zero { channels: sys.n_channels() },
        ControlSignal::Sum(parts) => {
            ControlSignal::Sum(parts.iter().map(|(c, p)| (*c, without_adjoint(sys, p))).collect())
        }
        other => other.clone(),
    }
}

/// Flattened adjoint components `(coefficient, v)`.
fn adjoint_parts(u: &ControlSignal, scale: f64) -> Vec<(f64, SpectralVector)> {
    match u {
        ControlSignal::Adjoint { v } => vec![(scale, v.clone())],
        ControlSignal::Sum(parts) => parts.iter().flat_map(|(c, p)| adjoint_parts(p, scale * c)).collect(),
        _ => Vec::new(),
    }
}

/// Free evolution of the initial datum at time `t`.
pub fn free_evolution(sys: &FractionalSystem, t: f64) -> Result<SpectralVector> {
    let z0 = sys.initial();
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be non-negative, got {t}")));
    }
    if z0.iter().all(|&c| c == 0.0) {
        return Ok(DVector::zeros(z0.len()));
    }
    let alpha = sys.alpha();
    let lambdas = sys.basis().eigenvalues();
    match sys.initial_kind() {
        InitialKind::WeightedRl => {
            if t == 0.0 && alpha < 1.0 {
                return Err(Error::domain("weighted initial condition is unbounded at t = 0"));
            }
            let scale = t.powf(alpha - 1.0);
            let mut out = DVector::zeros(z0.len());
            for i in 0..z0.len() {
                out[i] = scale * kernel_weight(alpha, lambdas[i], t)? * z0[i];
            }
            Ok(out)
        }
        InitialKind::ClassicalLimit => {
            let ta = t.powf(alpha);
            let mut out = DVector::zeros(z0.len());
            for i in 0..z0.len() {
                out[i] = ml(alpha, 1.0, -lambdas[i] * ta)? * z0[i];
            }
            Ok(out)
        }
    }
}

/// `Hu`, the state reached at `t = b` from rest.
pub fn apply_h(sys: &FractionalSystem, u: &ControlSignal) -> Result<SpectralVector> {
    u.check(sys)?;
    duhamel(sys, u, sys.horizon())
}

/// `(H*v)(t) = B* (b−t)^{α−1} K*_α(b−t) v`.
pub fn apply_h_star(sys: &FractionalSystem, v: &SpectralVector, t: f64) -> Result<DVector<f64>> {
    check_len(v, sys.basis())?;
    let b = sys.horizon();
    if !(t >= 0.0 && t <= b) {
        return Err(Error::domain(format!("time {t} outside [0, {b}]")));
    }
    let phi = adjoint_state_phi(sys, v, t)?;
    Ok(sys.actuator_matrix().transpose() * phi)
}

/// Mild solution `z(t) = free_evolution(t) + ∫_0^t k(t−s) B u(s) ds`.
pub fn mild_solution(sys: &FractionalSystem, u: &ControlSignal, t: f64) -> Result<SpectralVector> {
    let b = sys.horizon();
    if !(t > 0.0 && t <= b * (1.0 + 1e-14)) {
        return Err(Error::domain(format!("time {t} outside (0, {b}]")));
    }
    u.check(sys)?;
    Ok(free_evolution(sys, t)? + duhamel(sys, u, t.min(b))?)
}

/// HUM adjoint state `φ(t) = (b−t)^{α−1} K*_α(b−t) p_ω* g`, given `p_ω* g` in modal form.
pub fn adjoint_state_phi(sys: &FractionalSystem, extended_g: &SpectralVector, t: f64) -> Result<SpectralVector> {
    check_len(extended_g, sys.basis())?;
    let b = sys.horizon();
    if !(t >= 0.0 && t <= b) {
        return Err(Error::domain(format!("time {t} outside [0, {b}]")));
    }
    if t == b && sys.alpha() < 1.0 {
        return Err(Error::domain("adjoint state is singular at t = b"));
    }
    Ok(sys.kernel(b - t)?.component_mul(extended_g))
}

/// `⟨u, w⟩_{L²(0,b;R^p)}`.
pub fn control_inner(sys: &FractionalSystem, u: &ControlSignal, w: &ControlSignal) -> Result<f64> {
    u.check(sys)?;
    w.check(sys)?;
    let b = sys.horizon();
    let (au, aw) = (adjoint_parts(u, 1.0), adjoint_parts(w, 1.0));
    let (ru, rw) = (without_adjoint(sys, u), without_adjoint(sys, w));
    let mut total = 0.0;
    // adjoint × adjoint through the Gram kernel
    if !au.is_empty() && !aw.is_empty() {
        let k = sys.gram_kernel()?;
        for (cu, vu) in &au {
            for (cw, vw) in &aw {
                total += cu * cw * vu.dot(&(k * vw));
            }
        }
    }
    // adjoint × regular through duality at horizon b
    for (c, v) in &au {
        total += c * v.dot(&duhamel(sys, &rw, b)?);
    }
    for (c, v) in &aw {
        total += c * v.dot(&duhamel(sys, &ru, b)?);
    }
    total += regular_inner(sys, &ru, &rw)?;
    Ok(total)
}

/// `∫_0^b ‖u‖²`.
pub fn control_energy(sys: &FractionalSystem, u: &ControlSignal) -> Result<f64> {
    control_inner(sys, u, u)
}

fn breakpoints(u: &ControlSignal, out: &mut Vec<f64>) -> bool {
    match u {
        ControlSignal::Zero { .. } => true,
        ControlSignal::Sampled { times, .. } => {
            out.extend_from_slice(times);
            true
        }
        ControlSignal::PiecewiseConstant { edges, .. } => {
            out.extend_from_slice(edges);
            true
        }
        ControlSignal::Sum(parts) => parts.iter().fold(true, |acc, p| breakpoints(&p.1, out) && acc),
        _ => false,
    }
}

/// Inner product of controls without adjoint components: exact Gauss–Legendre
/// on the merged breakpoints when both are piecewise polynomial, a composite
/// rule otherwise.
fn regular_inner(sys: &FractionalSystem, u: &ControlSignal, w: &ControlSignal) -> Result<f64> {
    let b = sys.horizon();
    let mut cuts = vec![0.0, b];
    let piecewise = breakpoints(u, &mut cuts) & breakpoints(w, &mut cuts);
    let order = if piecewise { 2 } else { 16 };
    if !piecewise {
        cuts.extend((1..64).map(|k| b * k as f64 / 64.0));
    }
    cuts.retain(|&x| (0.0..=b).contains(&x));
    cuts.sort_by(|a, c| a.partial_cmp(c).unwrap());
    cuts.dedup();
    let gl = SingularRule::new(0.0, order)?;
    let mut total = 0.0;
    for win in cuts.windows(2) {
        let (a, c) = (win[0], win[1]);
        for (&x, &wt) in gl.nodes().iter().zip(gl.weights()) {
            let t = a + (c - a) * x;
            total += (c - a) * wt * u.value(sys, t)?.dot(&w.value(sys, t)?);
        }
    }
    Ok(total)
}

/// `⟨u, H*v⟩_{L²}` by direct quadrature, independent of how [`apply_h`]
/// integrates `u`: adaptive Gauss–Kronrod between the control's breakpoints and
/// the `α−1` weighted rule on the last piece, where `H*v` is singular.
pub fn dual_pairing(sys: &FractionalSystem, u: &ControlSignal, v: &SpectralVector) -> Result<f64> {
    u.check(sys)?;
    check_len(v, sys.basis())?;
    let b = sys.horizon();
    let mut cuts = vec![0.0, b];
    breakpoints(u, &mut cuts);
    cuts.retain(|&x| (0.0..=b).contains(&x));
    cuts.sort_by(|a, c| a.partial_cmp(c).unwrap());
    cuts.dedup();
    let last = cuts[cuts.len() - 2];
    let beta = sys.actuator_matrix();

    let mut total = 0.0;
    if last > 0.0 {
        let mut failure = None;
        let integrand = |s: f64| match (u.value(sys, s), apply_h_star(sys, v, s)) {
            (Ok(us), Ok(hv)) => us.dot(&hv),
            (Err(e), _) | (_, Err(e)) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        let est = adaptive_integrate(integrand, &cuts[..cuts.len() - 1], 1e-13, 0.0, 4000);
        if let Some(e) = failure {
            return Err(e);
        }
        total += est.value;
    }

    // (H*v)(s) without its (b−s)^{α−1} factor, which the rule carries.
    let smooth_part = |s: f64| -> Result<DVector<f64>> {
        let tau = b - s;
        let mut e = DVector::zeros(sys.n_modes());
        for (i, &lambda) in sys.basis().eigenvalues().iter().enumerate() {
            e[i] = kernel_weight(sys.alpha(), lambda, tau)? * v[i];
        }
        Ok(beta.transpose() * e)
    };
    if last == 0.0 {
        let table = sys.horizon_table()?;
        let bv = beta.transpose();
        for (k, (&s, &w)) in table.times.iter().zip(&table.weights).enumerate() {
            let e = table.values.row(k).transpose().component_mul(v);
            total += w * u.value(sys, s)?.dot(&(&bv * e));
        }
    } else {
        let rule = GradedRule::with_defaults(sys.alpha() - 1.0)?;
        let len = b - last;
        let scale = len.powf(rule.gamma() + 1.0);
        for (&t, &w) in rule.nodes().iter().zip(rule.weights()) {
            let s = b - len * t;
            total += scale * w * u.value(sys, s)?.dot(&smooth_part(s)?);
        }
    }
    Ok(total)
}
