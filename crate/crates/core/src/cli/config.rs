//! Scenario files: one TOML document per scenario, unknown keys rejected.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{free_evolution, ControlSignal, FractionalSystem, InitialKind};
use crate::error::{Error, Result};
use crate::hum::{HumProblem, SolverKind, Target, DEFAULT_GRID_POINTS, DEFAULT_RESIDUAL_TOL};
use crate::spectral::{Actuator, Interval, Region, SpectralBasis, DEFAULT_SPATIAL_RESOLUTION};

pub const DEFAULT_MODES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub system: SystemConfig,
    pub actuators: Vec<ActuatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub alpha: f64,
    #[serde(rename = "b")]
    pub horizon: f64,
    /// Truncation `N`; ignored when `levels` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(default = "unit_domain")]
    pub domain: [f64; 2],
    /// Explicit `(eigenvalue, multiplicity)` levels over a sine basis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<(f64, usize)>>,
    /// Modal coefficients of the initial state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(default)]
    pub initial_kind: InitialKindConfig,
}

fn unit_domain() -> [f64; 2] {
    [0.0, 1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKindConfig {
    #[default]
    ClassicalLimit,
    WeightedRl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ActuatorConfig {
    Zone {
        a1: f64,
        a2: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        gain: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Pointwise {
        sigma: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        gain: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub lo: f64,
    pub hi: f64,
    /// Spatial quadrature nodes per unit length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetConfig {
    Zero,
    /// `amplitude · sin²(π(x − center + half_width)/(2 half_width))` on `|x − center| ≤ half_width`.
    Bump { center: f64, half_width: f64, #[serde(default = "one")] amplitude: f64 },
    Gaussian { center: f64, width: f64, #[serde(default = "one")] amplitude: f64 },
    /// `amplitude · ξ_mode`, 1-based.
    Mode { mode: usize, #[serde(default = "one")] amplitude: f64 },
    /// Two-column CSV `x,value`, linearly interpolated onto the region grid.
    Samples { file: PathBuf },
    /// State reached at `b` under a piecewise-constant control.
    Reachable { edges: Vec<f64>, values: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ControlConfig {
    Zero,
    /// Rows are cells `[edges[k], edges[k+1])`, columns are channels.
    PiecewiseConstant { edges: Vec<f64>, values: Vec<Vec<f64>> },
    /// Linear interpolation between rows at `times`.
    Sampled { times: Vec<f64>, values: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKindConfig {
    #[default]
    Direct,
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub method: SolverKindConfig,
    /// `N_ω`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_modes: Option<usize>,
    /// Eigenvalue levels examined by the strategic test; all by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_residual_tol")]
    pub residual_tolerance: f64,
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_residual_tol() -> f64 {
    DEFAULT_RESIDUAL_TOL
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            method: SolverKindConfig::default(),
            omega_modes: None,
            levels: None,
            grid_points: DEFAULT_GRID_POINTS,
            residual_tolerance: DEFAULT_RESIDUAL_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Snapshot times for `simulate`; ten equispaced times in `(0, b]` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    /// Spatial points of the `simulate` grid, endpoints included.
    #[serde(default = "default_space_points")]
    pub space_points: usize,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_space_points() -> usize {
    101
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir(), times: None, space_points: default_space_points() }
    }
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config(format!("{what}: values must be a non-empty rectangular table")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(TargetConfig::Samples { file }) = &mut cfg.target {
            if file.is_relative() {
                if let Some(parent) = path.parent() {
                    *file = parent.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Builds every model object once so that errors surface before any output is written.
    pub fn validate(&self) -> Result<()> {
        let sys = self.system()?;
        if let Some(r) = &self.region {
            let region = self.region_from(r)?;
            if !sys.basis().domain().contains_interval(&region.interval) {
                return Err(Error::Config(format!("region [{}, {}] lies outside the domain", r.lo, r.hi)));
            }
        }
        if let Some(c) = &self.control {
            self.control_signal(c, &sys)?;
        }
        if let Some(TargetConfig::Reachable { edges, values }) = &self.target {
            ControlSignal::piecewise_constant(edges.clone(), rows_to_matrix(values, "target")?)?;
        }
        if let Some(TargetConfig::Mode { mode, .. }) = &self.target {
            if *mode == 0 || *mode > sys.n_modes() {
                return Err(Error::Config(format!("target mode {mode} outside 1..={}", sys.n_modes())));
            }
        }
        if let Some(eps) = self.solver.epsilon {
            if !(eps >= 0.0) {
                return Err(Error::Config(format!("epsilon must be non-negative, got {eps}")));
            }
        }
        if self.solver.grid_points < 2 || self.output.space_points < 2 {
            return Err(Error::Config("grid sizes must be at least 2".into()));
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<Interval> {
        Interval::new(self.system.domain[0], self.system.domain[1])
    }

    pub fn basis(&self) -> Result<SpectralBasis> {
        let domain = self.domain()?;
        match &self.system.levels {
            Some(levels) => SpectralBasis::grouped_sine(domain, levels),
            None => SpectralBasis::dirichlet_laplacian(self.system.modes.unwrap_or(DEFAULT_MODES), domain),
        }
    }

    pub fn actuators(&self) -> Vec<Actuator> {
        self.actuators
            .iter()
            .map(|a| match a {
                ActuatorConfig::Zone { a1, a2, gain, label } => {
                    let act = Actuator::zone(*a1, *a2).with_gain(*gain);
                    label.as_ref().map_or(act.clone(), |l| act.with_label(l.clone()))
                }
                ActuatorConfig::Pointwise { sigma, gain, label } => {
                    let act = Actuator::pointwise(*sigma).with_gain(*gain);
                    label.as_ref().map_or(act.clone(), |l| act.with_label(l.clone()))
                }
            })
            .collect()
    }

    pub fn system(&self) -> Result<FractionalSystem> {
        let basis = self.basis()?;
        let n = basis.n_modes();
        let sys = FractionalSystem::new(self.system.alpha, self.system.horizon, basis, self.actuators())?;
        let kind = match self.system.initial_kind {
            InitialKindConfig::ClassicalLimit => InitialKind::ClassicalLimit,
            InitialKindConfig::WeightedRl => InitialKind::WeightedRl,
        };
        match &self.system.initial {
            None => Ok(sys),
            Some(c) if c.len() <= n => {
                let mut z0 = DVector::zeros(n);
                z0.rows_mut(0, c.len()).copy_from_slice(c);
                sys.with_initial(z0, kind)
            }
            Some(c) => Err(Error::Config(format!("initial state has {} coefficients for {n} modes", c.len()))),
        }
    }

    fn region_from(&self, r: &RegionConfig) -> Result<Region> {
        let region = Region::new(r.lo, r.hi)?;
        Ok(region.with_resolution(r.resolution.unwrap_or(DEFAULT_SPATIAL_RESOLUTION)))
    }

    /// The configured region, or the whole domain.
    pub fn region(&self) -> Result<Region> {
        match &self.region {
            Some(r) => self.region_from(r),
            None => Ok(Region::whole(self.domain()?)),
        }
    }

    fn control_signal(&self, c: &ControlConfig, sys: &FractionalSystem) -> Result<ControlSignal> {
        match c {
            ControlConfig::Zero => Ok(ControlSignal::Zero { channels: sys.n_channels() }),
            ControlConfig::PiecewiseConstant { edges, values } => {
                ControlSignal::piecewise_constant(edges.clone(), rows_to_matrix(values, "control")?)
            }
            ControlConfig::Sampled { times, values } => {
                ControlSignal::sampled(times.clone(), rows_to_matrix(values, "control")?)
            }
        }
    }

    /// The configured control, zero when absent.
    pub fn control(&self, sys: &FractionalSystem) -> Result<ControlSignal> {
        match &self.control {
            Some(c) => self.control_signal(c, sys),
            None => Ok(ControlSignal::Zero { channels: sys.n_channels() }),
        }
    }

    pub fn target(&self, sys: &FractionalSystem, region: &Region) -> Result<Target> {
        let nodes = region.grid().nodes;
        let sampled = |f: &dyn Fn(f64) -> f64| Target::Samples(nodes.iter().map(|&x| f(x)).collect());
        Ok(match self.target.as_ref().unwrap_or(&TargetConfig::Zero) {
            TargetConfig::Zero => Target::Zero,
            TargetConfig::Bump { center, half_width, amplitude } => sampled(&|x| {
                let s = (x - center) / half_width;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    amplitude * (std::f64::consts::FRAC_PI_2 * (s + 1.0)).sin().powi(2)
                }
            }),
            TargetConfig::Gaussian { center, width, amplitude } => {
                sampled(&|x| amplitude * (-0.5 * ((x - center) / width).powi(2)).exp())
            }
            TargetConfig::Mode { mode, amplitude } => {
                let basis = sys.basis();
                sampled(&|x| amplitude * basis.eval(mode - 1, x))
            }
            TargetConfig::Samples { file } => {
                let (xs, ys) = read_profile(file)?;
                sampled(&|x| interpolate(&xs, &ys, x))
            }
            TargetConfig::Reachable { edges, values } => {
                let u = ControlSignal::piecewise_constant(edges.clone(), rows_to_matrix(values, "target")?)?;
                Target::Modal(free_evolution(sys, sys.horizon())? + crate::dynamics::apply_h(sys, &u)?)
            }
        })
    }

    pub fn hum_problem(&self) -> Result<HumProblem> {
        let sys = self.system()?;
        let region = self.region()?;
        let target = self.target(&sys, &region)?;
        let mut prob = HumProblem::new(sys, region, target).with_solver(match self.solver.method {
            SolverKindConfig::Direct => SolverKind::Direct,
            SolverKindConfig::Truncated => SolverKind::TruncatedSpectrum,
        });
        prob.epsilon = self.solver.epsilon;
        prob.n_omega = self.solver.omega_modes;
        prob.grid_points = self.solver.grid_points;
        prob.residual_tolerance = self.solver.residual_tolerance;
        Ok(prob)
    }

    /// Snapshot times of `simulate`.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let b = self.system.horizon;
        self.output.times.clone().unwrap_or_else(|| (1..=10).map(|k| b * k as f64 / 10.0).collect())
    }
}

fn read_profile(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read target samples {}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let parsed = (fields.next().map(str::parse::<f64>), fields.next().map(str::parse::<f64>));
        match parsed {
            (Some(Ok(x)), Some(Ok(y))) => {
                xs.push(x);
                ys.push(y);
            }
            _ if lineno == 0 => continue,
            _ => return Err(Error::Config(format!("{}:{}: expected `x,value`", path.display(), lineno + 1))),
        }
    }
    if xs.len() < 2 || xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config(format!("{}: need ≥ 2 rows with increasing x", path.display())));
    }
    Ok((xs, ys))
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[k - 1], xs[k]);
    let theta = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
    ys[k - 1] * (1.0 - theta) + ys[k] * theta
}
