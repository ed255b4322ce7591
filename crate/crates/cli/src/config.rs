//! Experiment configuration. A config file is merged over the defaults of
//! the scenario family selected by the subcommand, so every key is optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tamewave_core::grid::read_field;
use tamewave_core::mellin::ModelOperatorSpec;
use tamewave_core::nashmoser::NashMoserConfig;
use tamewave_core::problem::{EquationKind, MetricFamily, NonlinearitySpec, ProblemSpec};
use tamewave_core::scenario::{default_metric, default_nonlinearity, ForcingSpec, Scenario};
use tamewave_core::tame::SmoothFunctionSpec;
use tamewave_core::{Error, Field, Grid};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Which scenario supplies the defaults.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Wave,
    KleinGordon,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    pub seed: u64,
    pub grid: GridConfig,
    pub operator: ModelOperatorSpec,
    pub metric: MetricFamily,
    pub nonlinearity: NonlinearitySpec,
    pub forcing: ForcingConfig,
    pub nash_moser: NashMoserConfig,
    pub expansion: ExpansionConfig,
    pub linear: LinearConfig,
    pub resonances: ResonanceConfig,
    pub smoothing_audit: SmoothingAuditConfig,
    pub tame_audit: TameAuditConfig,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_t: usize,
    pub n_y: usize,
    pub t_max: f64,
}

/// Pulse forcing, or a field file written by another subcommand.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    pub amplitude: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub modulation: f64,
    pub mode: i64,
    /// Relative paths are resolved against the config file's directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionConfig {
    pub alpha: f64,
    pub window: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConfig {
    pub modes: Vec<i64>,
    pub window: [f64; 2],
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    pub k_max: u32,
    pub search_bound: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingAuditConfig {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub thetas: Vec<f64>,
    pub samples: usize,
    pub theta0: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TameAuditConfig {
    pub ops: Vec<String>,
    pub s: f64,
    pub mu: f64,
    pub samples: usize,
    /// Reciprocal audit: `w / (a + u)` with `min(a + u) = c0`.
    pub a: f64,
    pub c0: f64,
    pub function: SmoothFunctionSpec,
    /// Repeat every audit on the grid refined 2× in each direction.
    pub refine: bool,
}

impl Config {
    pub fn defaults(family: Family) -> Config {
        let wave = family == Family::Wave;
        let (grid, operator, alpha, window, linear_window) = if wave {
            (
                GridConfig { n_t: 4096, n_y: 16, t_max: 40.0 },
                ModelOperatorSpec::wave(0.5, 1.0),
                0.2,
                [14.0, 39.0],
                [10.0, 35.0],
            )
        } else {
            (
                GridConfig { n_t: 32768, n_y: 16, t_max: 512.0 },
                ModelOperatorSpec::klein_gordon(0.5, 1.0, 0.1),
                0.0125,
                [100.0, 500.0],
                [100.0, 400.0],
            )
        };
        let kind = if wave { EquationKind::Wave } else { EquationKind::KleinGordon };
        let pulse = ForcingSpec::pulse(0.01);
        Config {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            grid,
            operator,
            metric: default_metric(),
            nonlinearity: default_nonlinearity(kind),
            forcing: ForcingConfig {
                amplitude: pulse.amplitude,
                t_lo: pulse.t_lo,
                t_hi: pulse.t_hi,
                modulation: pulse.modulation,
                mode: pulse.mode,
                file: None,
            },
            nash_moser: NashMoserConfig {
                alpha,
                ..NashMoserConfig::default()
            },
            expansion: ExpansionConfig { alpha, window },
            linear: LinearConfig {
                modes: vec![0, 1, 2],
                window: linear_window,
            },
            resonances: ResonanceConfig {
                k_max: 2,
                search_bound: 10.0,
            },
            smoothing_audit: SmoothingAuditConfig {
                s: vec![0.0, 1.0, 2.0, 3.0],
                t: vec![0.0, 1.0, 2.0, 3.0],
                thetas: (2..=8).map(|e| 2f64.powi(e)).collect(),
                samples: 50,
                theta0: 256.0,
            },
            tame_audit: TameAuditConfig {
                ops: vec!["product".into(), "reciprocal".into(), "composition".into()],
                s: 2.0,
                mu: 2.1,
                samples: 100,
                a: 1.0,
                c0: 0.5,
                function: SmoothFunctionSpec::Sine,
                refine: true,
            },
        }
    }

    /// Reads `path` (if any) and merges it over the family defaults.
    pub fn load(path: Option<&Path>, family: Family) -> Result<(Config, PathBuf), CliError> {
        let defaults = toml::Table::try_from(Config::defaults(family))
            .map_err(|e| CliError::Parse(format!("default config: {e}")))?;
        let (user, base_dir) = match path {
            None => (toml::Table::new(), PathBuf::from(".")),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", p.display())))?;
                let table: toml::Table = text
                    .parse()
                    .map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))?;
                let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (table, dir)
            }
        };
        match user.get("schema_version") {
            None if path.is_some() => {
                return Err(CliError::Parse("missing schema_version".into()));
            }
            Some(v) if v.as_integer() != Some(SCHEMA_VERSION as i64) => {
                return Err(CliError::Parse(format!(
                    "unsupported schema_version {v}, expected {SCHEMA_VERSION}"
                )));
            }
            _ => {}
        }
        let merged = merge(defaults, user);
        let cfg: Config = toml::Value::Table(merged)
            .try_into()
            .map_err(|e| CliError::Parse(format!("{e}")))?;
        Ok((cfg, base_dir))
    }

    pub fn grid(&self) -> Result<Grid, Error> {
        Grid::new(self.grid.n_t, self.grid.n_y, self.grid.t_max)
    }

    pub fn forcing_field(&self, grid: Grid, base_dir: &Path) -> Result<Field, CliError> {
        let f = &self.forcing;
        if let Some(file) = &f.file {
            let path = base_dir.join(file);
            if !path.exists() {
                return Err(CliError::Io(format!("forcing file {} does not exist", path.display())));
            }
            let field = read_field(&path)?;
            field.check_grid(&Field::zeros(grid))?;
            return Ok(field);
        }
        let spec = ForcingSpec {
            amplitude: f.amplitude,
            t_lo: f.t_lo,
            t_hi: f.t_hi,
            modulation: f.modulation,
            mode: f.mode,
        };
        spec.validate(&grid)?;
        Ok(spec.sample(grid))
    }

    pub fn problem(&self, base_dir: &Path) -> Result<ProblemSpec, CliError> {
        let grid = self.grid()?;
        let forcing = self.forcing_field(grid, base_dir)?;
        Ok(ProblemSpec::new(
            self.operator,
            self.metric.clone(),
            self.nonlinearity.clone(),
            forcing,
        )?)
    }

    pub fn scenario(&self, name: &str, base_dir: &Path) -> Result<Scenario, CliError> {
        let window = (self.expansion.window[0], self.expansion.window[1]);
        Ok(Scenario::new(
            name,
            self.problem(base_dir)?,
            self.nash_moser.clone(),
            self.expansion.alpha,
            window,
        )?)
    }
}

/// Recursive table merge; values from `over` win, nested tables merge.
fn merge(mut base: toml::Table, over: toml::Table) -> toml::Table {
    for (key, value) in over {
        match (base.remove(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                base.insert(key, toml::Value::Table(merge(b, o)));
            }
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
    base
}
