//! Run configuration, stored as JSON. Matrices are row-major nested arrays.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use dlyap_core::ddesim::{HistorySpec, OracleOptions};
use dlyap_core::odec::uniform_grid;
use dlyap_core::{Matrix, SpectrumThresholds, TimeDelaySystem, Vector, Weight};
use serde::{Deserialize, Serialize};

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub q: Rows,
    #[serde(default)]
    pub tau_grid: TauGrid,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub a0: Rows,
    pub a1: Rows,
    pub h: f64,
    pub kernel: KernelConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    /// `A_D(θ) = Cd e^{Ad θ} Bd`
    Factored { ad: Rows, bd: Rows, cd: Rows },
    /// `A_D(θ) = sin(ωθ) B0 + cos(ωθ) B1`
    Harmonic { b0: Rows, b1: Rows, frequency: f64 },
    /// No distributed delay.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TauGrid {
    Count(usize),
    Points(Vec<f64>),
}

impl Default for TauGrid {
    fn default() -> Self {
        TauGrid::Count(201)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Initial horizon; `max(20 h, 20)` when absent.
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub steps_per_delay: usize,
    /// Point-mass initial values `φ(0)` for the cost checks.
    pub histories: Vec<Vec<f64>>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            horizon: None,
            dt: None,
            steps_per_delay: 100,
            histories: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub spectrum_violated: f64,
    pub spectrum_borderline: f64,
    pub oracle: f64,
    pub cost: f64,
    pub residual_dde: f64,
    pub residual_algebraic: f64,
    pub residual_collapsed: f64,
    pub flip: f64,
    pub symmetry: f64,
    pub endpoints: f64,
    pub tail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            spectrum_violated: 1e-12,
            spectrum_borderline: 1e-8,
            oracle: 1e-3,
            cost: 1e-3,
            residual_dde: 1e-5,
            residual_algebraic: 1e-6,
            residual_collapsed: 1e-6,
            flip: 1e-8,
            symmetry: 1e-9,
            endpoints: 1e-9,
            tail: 1e-5,
        }
    }
}

impl Tolerances {
    /// Applies a `name=value` override.
    pub fn set(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (name, value) = spec.split_once('=').ok_or_else(|| {
            ConfigError::new(format!("tolerance override '{spec}' is not name=value"))
        })?;
        let value: f64 = value.trim().parse().map_err(|_| {
            ConfigError::new(format!("tolerance '{name}': '{value}' is not a number"))
        })?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(ConfigError::new(format!(
                "tolerance '{name}' must be positive and finite"
            )));
        }
        let slot = match name.trim() {
            "spectrum_violated" => &mut self.spectrum_violated,
            "spectrum_borderline" => &mut self.spectrum_borderline,
            "oracle" => &mut self.oracle,
            "cost" => &mut self.cost,
            "residual_dde" => &mut self.residual_dde,
            "residual_algebraic" => &mut self.residual_algebraic,
            "residual_collapsed" => &mut self.residual_collapsed,
            "flip" => &mut self.flip,
            "symmetry" => &mut self.symmetry,
            "endpoints" => &mut self.endpoints,
            "tail" => &mut self.tail,
            other => return Err(ConfigError::new(format!("unknown tolerance '{other}'"))),
        };
        *slot = value;
        Ok(())
    }

    pub fn thresholds(&self) -> SpectrumThresholds {
        SpectrumThresholds {
            violated: self.spectrum_violated,
            borderline: self.spectrum_borderline,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("dlyap-out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl ConfigError {
    fn new(msg: impl Into<String>) -> Self {
        ConfigError(msg.into())
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn to_matrix(rows: &Rows, what: &str) -> Result<Matrix, ConfigError> {
    let r = rows.len();
    if r == 0 {
        return Err(ConfigError::new(format!("{what}: matrix has no rows")));
    }
    let c = rows[0].len();
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != c) {
        return Err(ConfigError::new(format!(
            "{what}: row {} has {} entries, row 1 has {c}",
            i + 1,
            row.len()
        )));
    }
    if c == 0 {
        return Err(ConfigError::new(format!("{what}: matrix has no columns")));
    }
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn to_rows(m: &Matrix) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::new(format!("config parse error: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError::new(format!("{}: {}", path.display(), e.0)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn build_system(&self) -> Result<TimeDelaySystem, ConfigError> {
        let s = &self.system;
        let a0 = to_matrix(&s.a0, "system.a0")?;
        let a1 = to_matrix(&s.a1, "system.a1")?;
        let n = a0.nrows();
        let built = match &s.kernel {
            KernelConfig::Factored { ad, bd, cd } => TimeDelaySystem::new(
                a0,
                a1,
                to_matrix(ad, "system.kernel.factored.ad")?,
                to_matrix(bd, "system.kernel.factored.bd")?,
                to_matrix(cd, "system.kernel.factored.cd")?,
                s.h,
            ),
            KernelConfig::Harmonic { b0, b1, frequency } => TimeDelaySystem::with_harmonic_kernel(
                a0,
                a1,
                &to_matrix(b0, "system.kernel.harmonic.b0")?,
                &to_matrix(b1, "system.kernel.harmonic.b1")?,
                *frequency,
                s.h,
            ),
            KernelConfig::None => TimeDelaySystem::new(
                a0,
                a1,
                Matrix::zeros(1, 1),
                Matrix::zeros(1, n),
                Matrix::zeros(n, 1),
                s.h,
            ),
        };
        built.map_err(|e| ConfigError::new(format!("system: {e}")))
    }

    pub fn weight(&self) -> Result<Weight, ConfigError> {
        Weight::new(to_matrix(&self.q, "q")?).map_err(|e| ConfigError::new(format!("q: {e}")))
    }

    /// Points on `[0, h]` (count form) or the explicit list, each checked
    /// against `[-h, h]`.
    pub fn taus(&self, h: f64) -> Result<Vec<f64>, ConfigError> {
        let taus = match &self.tau_grid {
            TauGrid::Count(0) => return Err(ConfigError::new("tau_grid.count must be positive")),
            TauGrid::Count(k) => uniform_grid(h, *k),
            TauGrid::Points(p) => p.clone(),
        };
        if taus.is_empty() {
            return Err(ConfigError::new("tau_grid has no points"));
        }
        if let Some(t) = taus.iter().find(|t| !(t.abs() <= h)) {
            return Err(ConfigError::new(format!(
                "tau_grid: τ = {t} lies outside [-{h}, {h}]"
            )));
        }
        Ok(taus)
    }

    pub fn histories(&self, n: usize) -> Result<Vec<HistorySpec>, ConfigError> {
        self.simulation
            .histories
            .iter()
            .enumerate()
            .map(|(i, x0)| {
                if x0.len() != n {
                    return Err(ConfigError::new(format!(
                        "simulation.histories[{i}] has {} entries, system has n = {n}",
                        x0.len()
                    )));
                }
                Ok(HistorySpec::point_mass(&Vector::from_column_slice(x0)))
            })
            .collect()
    }

    pub fn oracle_options(&self) -> OracleOptions {
        OracleOptions {
            horizon: self.simulation.horizon,
            dt: self.simulation.dt,
            steps_per_delay: self.simulation.steps_per_delay,
            tail_tolerance: self.tolerances.tail,
            ..OracleOptions::default()
        }
    }

    /// The two-state plant with `A_D(θ) = sin(πθ)·0.3I + cos(πθ)·0.3A1`.
    pub fn example1() -> Self {
        let a1 = vec![vec![0.0, 1.0], vec![-1.0, 0.0]];
        RunConfig {
            system: SystemConfig {
                a0: vec![vec![-1.0, 0.0], vec![0.0, -1.0]],
                a1,
                h: 1.0,
                kernel: KernelConfig::Harmonic {
                    b0: vec![vec![0.3, 0.0], vec![0.0, 0.3]],
                    b1: vec![vec![0.0, 0.3], vec![-0.3, 0.0]],
                    frequency: PI,
                },
            },
            q: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            tau_grid: TauGrid::Count(201),
            simulation: SimulationConfig {
                histories: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                ..SimulationConfig::default()
            },
            tolerances: Tolerances::default(),
            output: OutputConfig::default(),
        }
    }
}
