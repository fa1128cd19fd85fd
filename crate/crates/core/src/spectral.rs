//! Eigenstructure of the Dirichlet Laplacian on an interval, actuator and
//! region geometry, and the spatial inner products built from them.
//!
//! Eigenfunctions are always the orthonormal sines of the domain. A basis may
//! group consecutive sines into one eigenvalue level, which is how a synthetic
//! basis with multiplicities `r_j > 1` is expressed.

use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::{SingularRule, WeightedRule};

/// Coefficients `(z, ξ_jk)` of a function in a [`SpectralBasis`], flattened over `(j, k)`.
pub type SpectralVector = DVector<f64>;

/// Default spatial quadrature resolution, in nodes per unit length.
pub const DEFAULT_SPATIAL_RESOLUTION: usize = 512;
const SPATIAL_PANEL_ORDER: usize = 8;

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("interval [{lo}, {hi}] is empty or not finite")));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.contains(other.lo) && self.contains(other.hi)
    }
}

/// Truncated eigenbasis of `−A`: sines `ξ_m(x) = √(2/L) sin(mπ(x−lo)/L)` grouped
/// into levels with strictly increasing eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    domain: Interval,
    levels: Vec<(f64, usize)>,
    mode_lambda: Vec<f64>,
    mode_level: Vec<usize>,
}

impl SpectralBasis {
    /// First `n` Dirichlet eigenpairs: `λ_i = (iπ/L)²`, all simple.
    pub fn dirichlet_laplacian(n: usize, domain: Interval) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("mode count must be at least 1"));
        }
        let l = domain.len();
        let levels = (1..=n).map(|i| ((i as f64 * PI / l).powi(2), 1)).collect::<Vec<_>>();
        Self::grouped_sine(domain, &levels)
    }

    /// Sines assigned in order to the given `(eigenvalue, multiplicity)` levels.
    pub fn grouped_sine(domain: Interval, levels: &[(f64, usize)]) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("basis needs at least one eigenvalue level"));
        }
        let mut prev = 0.0;
        let mut mode_lambda = Vec::new();
        let mut mode_level = Vec::new();
        for (j, &(lambda, r)) in levels.iter().enumerate() {
            if !(lambda > prev) || !lambda.is_finite() {
                return Err(Error::invalid(format!(
                    "eigenvalues must be positive and strictly increasing (level {} has {lambda})",
                    j + 1
                )));
            }
            if r == 0 {
                return Err(Error::invalid(format!("level {} has zero multiplicity", j + 1)));
            }
            prev = lambda;
            for _ in 0..r {
                mode_lambda.push(lambda);
                mode_level.push(j);
            }
        }
        Ok(Self { domain, levels: levels.to_vec(), mode_lambda, mode_level })
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// Total number of modes `Σ r_j`.
    pub fn n_modes(&self) -> usize {
        self.mode_lambda.len()
    }

    /// Number of distinct eigenvalue levels.
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[(f64, usize)] {
        &self.levels
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.mode_lambda
    }

    pub fn eigenvalue(&self, mode: usize) -> f64 {
        self.mode_lambda[mode]
    }

    pub fn level_of(&self, mode: usize) -> usize {
        self.mode_level[mode]
    }

    pub fn max_multiplicity(&self) -> usize {
        self.levels.iter().map(|l| l.1).max().unwrap_or(0)
    }

    /// Flattened mode indices of level `j` (0-based).
    pub fn level_modes(&self, j: usize) -> Range<usize> {
        let start: usize = self.levels[..j].iter().map(|l| l.1).sum();
        start..start + self.levels[j].1
    }

    /// Sine index (1-based frequency) of a flattened mode.
    pub fn frequency(&self, mode: usize) -> usize {
        mode + 1
    }

    /// `ξ_mode(x)`.
    pub fn eval(&self, mode: usize, x: f64) -> f64 {
        let l = self.domain.len();
        let k = self.frequency(mode) as f64;
        (2.0 / l).sqrt() * (k * PI * (x - self.domain.lo) / l).sin()
    }

    /// `Σ_m c_m ξ_m(x)`.
    pub fn evaluate(&self, coeffs: &SpectralVector, x: f64) -> f64 {
        coeffs.iter().enumerate().map(|(m, c)| c * self.eval(m, x)).sum()
    }

    /// Copy of this basis truncated to its first `n` levels.
    pub fn truncated(&self, n_levels: usize) -> Result<Self> {
        Self::grouped_sine(self.domain, &self.levels[..n_levels.min(self.levels.len())])
    }
}

/// Spatial support of an actuator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActuatorKind {
    /// Zone actuator on `[a1, a2]` with constant distribution.
    Zone { a1: f64, a2: f64 },
    /// Pointwise actuator `δ(x − σ)`.
    Pointwise { sigma: f64 },
}

/// An actuator `(D, g)` with spatially constant gain.
#[derive(Debug, Clone, PartialEq)]
pub struct Actuator {
    pub kind: ActuatorKind,
    pub gain: f64,
    pub label: String,
}

impl Actuator {
    pub fn zone(a1: f64, a2: f64) -> Self {
        Self { kind: ActuatorKind::Zone { a1, a2 }, gain: 1.0, label: format!("zone[{a1},{a2}]") }
    }

    pub fn pointwise(sigma: f64) -> Self {
        Self { kind: ActuatorKind::Pointwise { sigma }, gain: 1.0, label: format!("point({sigma})") }
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.gain = gain;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn validate(&self, domain: &Interval) -> Result<()> {
        if !self.gain.is_finite() {
            return Err(Error::invalid(format!("actuator {} has non-finite gain", self.label)));
        }
        match self.kind {
            ActuatorKind::Zone { a1, a2 } => {
                if !(a1 <= a2) || !domain.contains(a1) || !domain.contains(a2) {
                    return Err(Error::domain(format!(
                        "zone [{a1}, {a2}] of actuator {} is not inside [{}, {}]",
                        self.label, domain.lo, domain.hi
                    )));
                }
            }
            ActuatorKind::Pointwise { sigma } => {
                if !domain.contains(sigma) {
                    return Err(Error::domain(format!(
                        "point {sigma} of actuator {} is not inside [{}, {}]",
                        self.label, domain.lo, domain.hi
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `g_m = (p_D g, ξ_m)`: zone integrals in closed form, point evaluations for
/// pointwise actuators.
pub fn actuator_coefficients(act: &Actuator, basis: &SpectralBasis) -> Result<SpectralVector> {
    let domain = basis.domain();
    act.validate(&domain)?;
    let l = domain.len();
    let norm = (2.0 / l).sqrt();
    let coeffs = (0..basis.n_modes()).map(|m| {
        let k = basis.frequency(m) as f64;
        let v = match act.kind {
            ActuatorKind::Zone { a1, a2 } => {
                let u1 = (a1 - domain.lo) / l;
                let u2 = (a2 - domain.lo) / l;
                // ∫ sin = (L/kπ)(cos kπu1 − cos kπu2), written as a product of sines.
                norm * 2.0 * l / (k * PI)
                    * (k * PI * (u1 + u2) / 2.0).sin()
                    * (k * PI * (u2 - u1) / 2.0).sin()
            }
            ActuatorKind::Pointwise { sigma } => basis.eval(m, sigma),
        };
        act.gain * v
    });
    Ok(DVector::from_iterator(basis.n_modes(), coeffs))
}

/// Exact decision whether the coefficient of `mode` vanishes, available when
/// the actuator geometry is rational in the domain's normalized coordinate.
pub fn coefficient_is_exact_zero(act: &Actuator, basis: &SpectralBasis, mode: usize) -> Option<bool> {
    if act.gain == 0.0 {
        return Some(true);
    }
    let domain = basis.domain();
    let l = domain.len();
    let k = basis.frequency(mode) as i128;
    let integer_multiple = |num: i128, den: i128| num % den == 0;
    match act.kind {
        ActuatorKind::Zone { a1, a2 } => {
            let (p1, q1) = as_rational((a1 - domain.lo) / l)?;
            let (p2, q2) = as_rational((a2 - domain.lo) / l)?;
            // k(u1+u2)/2 ∈ Z or k(u2−u1)/2 ∈ Z
            let den = 2 * q1 * q2;
            let sum = k * (p1 * q2 + p2 * q1);
            let diff = k * (p2 * q1 - p1 * q2);
            Some(integer_multiple(sum, den) || integer_multiple(diff, den))
        }
        ActuatorKind::Pointwise { sigma } => {
            let (p, q) = as_rational((sigma - domain.lo) / l)?;
            Some(integer_multiple(k * p, q))
        }
    }
}

/// Small-denominator rational `p/q` equal to `x` to within rounding.
fn as_rational(x: f64) -> Option<(i128, i128)> {
    const MAX_DEN: i128 = 1_000_000;
    let tol = 4.0 * f64::EPSILON * x.abs().max(1.0);
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        if a.abs() > 1e12 {
            return None;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > MAX_DEN {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= tol {
            return Some((h1, k1));
        }
        let frac = r - a;
        if frac == 0.0 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

/// Composite Gauss–Legendre nodes and weights on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SpatialGrid {
    pub fn new(interval: Interval, nodes_per_unit: usize) -> Self {
        let panels = ((nodes_per_unit as f64 * interval.len()) / SPATIAL_PANEL_ORDER as f64)
            .ceil()
            .max(1.0) as usize;
        let rule = SingularRule::new(0.0, SPATIAL_PANEL_ORDER).expect("Legendre rule");
        let h = interval.len() / panels as f64;
        let mut nodes = Vec::with_capacity(panels * SPATIAL_PANEL_ORDER);
        let mut weights = Vec::with_capacity(panels * SPATIAL_PANEL_ORDER);
        for p in 0..panels {
            let a = interval.lo + p as f64 * h;
            for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
                nodes.push(a + h * x);
                weights.push(h * w);
            }
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫ f g` from samples at the nodes.
    pub fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights.iter().zip(f).zip(g).map(|((w, a), b)| w * a * b).sum()
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        self.dot(f, f).sqrt()
    }
}

/// Subregion `ω ⊆ Ω` with its spatial quadrature resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub interval: Interval,
    /// Quadrature nodes per unit length.
    pub resolution: usize,
}

impl Region {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        Ok(Self { interval: Interval::new(lo, hi)?, resolution: DEFAULT_SPATIAL_RESOLUTION })
    }

    pub fn whole(domain: Interval) -> Self {
        Self { interval: domain, resolution: DEFAULT_SPATIAL_RESOLUTION }
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution.max(SPATIAL_PANEL_ORDER);
        self
    }

    pub fn grid(&self) -> SpatialGrid {
        SpatialGrid::new(self.interval, self.resolution)
    }

    fn check_inside(&self, basis: &SpectralBasis) -> Result<()> {
        let d = basis.domain();
        if !d.contains_interval(&self.interval) {
            return Err(Error::domain(format!(
                "region [{}, {}] is not inside the domain [{}, {}]",
                self.interval.lo, self.interval.hi, d.lo, d.hi
            )));
        }
        Ok(())
    }
}

/// Samples `ξ_m(x_k)` as an `(nodes × modes)` matrix.
fn basis_samples(basis: &SpectralBasis, nodes: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(nodes.len(), basis.n_modes(), |k, m| basis.eval(m, nodes[k]))
}

/// `M_ij = (ξ_i, ξ_j)_{L²(ω)}`.
pub fn region_mass_matrix(region: &Region, basis: &SpectralBasis) -> Result<DMatrix<f64>> {
    cross_mass_matrix(region, basis, basis)
}

/// `R_kl = (η_k, ξ_l)_{L²(ω)}` between two bases, `(left modes × right modes)`.
pub fn cross_mass_matrix(
    region: &Region,
    left: &SpectralBasis,
    right: &SpectralBasis,
) -> Result<DMatrix<f64>> {
    region.check_inside(right)?;
    let grid = region.grid();
    let a = basis_samples(left, &grid.nodes);
    let b = basis_samples(right, &grid.nodes);
    let w = DVector::from_column_slice(&grid.weights);
    let wb = DMatrix::from_fn(b.nrows(), b.ncols(), |k, m| w[k] * b[(k, m)]);
    let mut r = a.transpose() * wb;
    if std::ptr::eq(left, right) {
        r = (&r + r.transpose()) * 0.5;
    }
    Ok(r)
}

/// `p_ω z`: samples of `Σ c_m ξ_m` at the region's quadrature nodes.
pub fn restrict(z: &SpectralVector, region: &Region, basis: &SpectralBasis) -> Result<Vec<f64>> {
    region.check_inside(basis)?;
    check_len(z, basis)?;
    Ok(region.grid().nodes.iter().map(|&x| basis.evaluate(z, x)).collect())
}

/// `(p_ω* f, ξ_m)` for `f` sampled at the region's quadrature nodes.
pub fn extend_by_zero(samples: &[f64], region: &Region, basis: &SpectralBasis) -> Result<SpectralVector> {
    region.check_inside(basis)?;
    let grid = region.grid();
    if samples.len() != grid.len() {
        return Err(Error::invalid(format!(
            "expected {} samples on the region grid, got {}",
            grid.len(),
            samples.len()
        )));
    }
    Ok(DVector::from_fn(basis.n_modes(), |m, _| {
        grid.nodes
            .iter()
            .zip(&grid.weights)
            .zip(samples)
            .map(|((&x, &w), &f)| w * f * basis.eval(m, x))
            .sum()
    }))
}

pub(crate) fn check_len(z: &SpectralVector, basis: &SpectralBasis) -> Result<()> {
    if z.len() != basis.n_modes() {
        return Err(Error::invalid(format!(
            "spectral vector has {} entries, basis has {} modes",
            z.len(),
            basis.n_modes()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_basis(n: usize) -> SpectralBasis {
        SpectralBasis::dirichlet_laplacian(n, Interval::unit()).unwrap()
    }

    #[test]
    fn laplacian_examples() {
        let b = unit_basis(1);
        assert!((b.eigenvalue(0) - PI * PI).abs() < 1e-12);
        assert!((b.eval(0, 0.5) - 2f64.sqrt()).abs() < 1e-15);
        let b = unit_basis(32);
        for m in 0..32 {
            assert!(b.eval(m, 0.0).abs() < 1e-15);
            assert!(b.eval(m, 1.0).abs() < 1e-13);
        }
        assert!(SpectralBasis::dirichlet_laplacian(0, Interval::unit()).is_err());
    }

    #[test]
    fn grouped_levels() {
        let b = SpectralBasis::grouped_sine(Interval::unit(), &[(1.0, 2), (4.0, 1)]).unwrap();
        assert_eq!(b.n_modes(), 3);
        assert_eq!(b.n_levels(), 2);
        assert_eq!(b.level_modes(0), 0..2);
        assert_eq!(b.level_modes(1), 2..3);
        assert_eq!(b.max_multiplicity(), 2);
        assert!(SpectralBasis::grouped_sine(Interval::unit(), &[(4.0, 1), (1.0, 1)]).is_err());
        assert!(SpectralBasis::grouped_sine(Interval::unit(), &[(1.0, 0)]).is_err());
    }

    #[test]
    fn orthonormal_under_spatial_quadrature() {
        let b = unit_basis(32);
        let m = region_mass_matrix(&Region::whole(Interval::unit()), &b).unwrap();
        let err = (m - DMatrix::<f64>::identity(32, 32)).amax();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn zone_coefficients_match_paper_form() {
        let b = unit_basis(16);
        let g = actuator_coefficients(&Actuator::zone(0.0, 0.5), &b).unwrap();
        for m in 0..16 {
            let i = (m + 1) as f64;
            let paper = 2f64.sqrt() / (i * PI) * (1.0 - (i * PI / 2.0).cos());
            assert!((g[m] - paper).abs() < 1e-15, "mode {i}: {} vs {paper}", g[m]);
        }
        assert!(g[3].abs() <= 1e-14);
        let p = actuator_coefficients(&Actuator::pointwise(0.5), &b).unwrap();
        assert!((p[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zone_coefficients_match_quadrature_on_shifted_domain() {
        let d = Interval::new(-1.0, 2.0).unwrap();
        let b = SpectralBasis::dirichlet_laplacian(10, d).unwrap();
        let act = Actuator::zone(-0.3, 1.1).with_gain(2.5);
        let g = actuator_coefficients(&act, &b).unwrap();
        let grid = SpatialGrid::new(Interval::new(-0.3, 1.1).unwrap(), 512);
        for m in 0..10 {
            let q: f64 = grid.nodes.iter().zip(&grid.weights).map(|(&x, &w)| w * 2.5 * b.eval(m, x)).sum();
            assert!((g[m] - q).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_actuators_outside_domain() {
        let b = unit_basis(4);
        assert!(actuator_coefficients(&Actuator::zone(0.5, 1.5), &b).is_err());
        assert!(actuator_coefficients(&Actuator::zone(0.6, 0.5), &b).is_err());
        assert!(actuator_coefficients(&Actuator::pointwise(-0.1), &b).is_err());
    }

    #[test]
    fn exact_zero_certificates() {
        let b = unit_basis(16);
        let act = Actuator::zone(0.0, 0.5);
        let zeros: Vec<usize> = (0..16)
            .filter(|&m| coefficient_is_exact_zero(&act, &b, m).unwrap())
            .map(|m| m + 1)
            .collect();
        assert_eq!(zeros, vec![4, 8, 12, 16]);
        let irr = Actuator::zone(0.0, 0.5f64.sqrt());
        assert_eq!(coefficient_is_exact_zero(&irr, &b, 3), None);
        let pt = Actuator::pointwise(0.25);
        assert_eq!(coefficient_is_exact_zero(&pt, &b, 3), Some(true));
        assert_eq!(coefficient_is_exact_zero(&pt, &b, 2), Some(false));
    }

    #[test]
    fn rational_detection() {
        assert_eq!(as_rational(0.5), Some((1, 2)));
        assert_eq!(as_rational(0.25), Some((1, 4)));
        assert_eq!(as_rational(1.0 / 3.0), Some((1, 3)));
        assert_eq!(as_rational(0.0), Some((0, 1)));
        assert_eq!(as_rational(PI / 4.0), None);
    }

    #[test]
    fn regional_mass_matrix_entries() {
        let b = unit_basis(16);
        let r = Region::new(0.25, 0.75).unwrap();
        let m = region_mass_matrix(&r, &b).unwrap();
        assert!((m[(0, 0)] - (0.5 + 1.0 / PI)).abs() < 1e-12);
        // ∫_{1/4}^{3/4} ξ_i ξ_4 dx by antiderivative
        for i in 1..=16usize {
            let f = |x: f64| {
                if i == 4 {
                    x - (8.0 * PI * x).sin() / (8.0 * PI)
                } else {
                    let (a, c) = ((i as f64 - 4.0) * PI, (i as f64 + 4.0) * PI);
                    (a * x).sin() / a - (c * x).sin() / c
                }
            };
            let exact = f(0.75) - f(0.25);
            assert!((m[(i - 1, 3)] - exact).abs() < 1e-12, "i={i}");
        }
        let eig = m.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e > -1e-10 && e < 1.0 + 1e-10));
    }

    #[test]
    fn restrict_and_extend() {
        let b = unit_basis(8);
        let whole = Region::whole(Interval::unit());
        let e1 = DVector::from_fn(8, |m, _| if m == 0 { 1.0 } else { 0.0 });
        let back = extend_by_zero(&restrict(&e1, &whole, &b).unwrap(), &whole, &b).unwrap();
        assert!((back - &e1).amax() < 1e-12);

        let r = Region::new(0.25, 0.75).unwrap();
        let zero = vec![0.0; r.grid().len()];
        assert_eq!(extend_by_zero(&zero, &r, &b).unwrap().amax(), 0.0);

        let e4 = DVector::from_fn(8, |m, _| if m == 3 { 1.0 } else { 0.0 });
        let col = extend_by_zero(&restrict(&e4, &r, &b).unwrap(), &r, &b).unwrap();
        let m = region_mass_matrix(&r, &b).unwrap();
        assert!((col - m.column(3)).amax() < 1e-14);
    }
}
