//! Ready-made quasilinear scenarios and the end-to-end solve: Nash-Moser
//! iteration, expansion of the result, and verification at refined y
//! resolution.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{bsobolev_norm, refine_y, Field, Grid, SobolevIndex};
use crate::mellin::{extract_expansion, find_resonances, spectral_gap, ExpansionDecomposition, ModelOperatorSpec};
use crate::nashmoser::{run, NashMoserConfig, NashMoserOutcome};
use crate::problem::{
    residual, EquationKind, MetricFamily, MetricMode, NonlinearTerm, NonlinearitySpec, ProblemSpec, Selector,
};
use crate::profiles::bump;
use crate::smoothing::Mollifier;

/// `amplitude · bump(t; t_lo, t_hi) · (1 + modulation·cos(mode·y))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingSpec {
    pub amplitude: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    #[serde(default)]
    pub modulation: f64,
    #[serde(default)]
    pub mode: i64,
}

impl ForcingSpec {
    pub fn pulse(amplitude: f64) -> Self {
        ForcingSpec {
            amplitude,
            t_lo: 1.0,
            t_hi: 2.0,
            modulation: 0.5,
            mode: 1,
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::config(format!(
                "forcing amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        if !(self.t_lo > 0.0 && self.t_hi > self.t_lo && self.t_hi < grid.t_max) {
            return Err(Error::config(format!(
                "forcing window ({}, {}) must lie inside (0, {})",
                self.t_lo, self.t_hi, grid.t_max
            )));
        }
        Ok(())
    }

    pub fn sample(&self, grid: Grid) -> Field {
        if self.amplitude == 0.0 {
            return Field::zeros(grid);
        }
        let s = *self;
        Field::from_real_fn(grid, s.t_lo, move |t, y| {
            s.amplitude * bump(t, s.t_lo, s.t_hi) * (1.0 + s.modulation * (s.mode as f64 * y).cos())
        })
    }
}

/// Quadratic nonlinearity `(∂_t u)² − (∂_y u)² + ½ u ∂_t u`.
pub fn default_nonlinearity(kind: EquationKind) -> NonlinearitySpec {
    NonlinearitySpec {
        kind,
        terms: vec![
            NonlinearTerm {
                coeff: 1.0,
                power: 0,
                selectors: vec![Selector::T, Selector::T],
            },
            NonlinearTerm {
                coeff: -1.0,
                power: 0,
                selectors: vec![Selector::Y, Selector::Y],
            },
            NonlinearTerm {
                coeff: 0.5,
                power: 1,
                selectors: vec![Selector::T],
            },
        ],
    }
}

/// `c² = c0²(1 + u/2)`.
pub fn default_metric() -> MetricFamily {
    MetricFamily {
        coeffs: vec![0.5],
        gradient: 0.0,
        mode: MetricMode::Value,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub problem: ProblemSpec,
    pub nash_moser: NashMoserConfig,
    /// Weight of the remainder in the expansion.
    pub alpha: f64,
    pub fit_window: (f64, f64),
}

/// Slowest decay rate among non-stationary resonant terms: the gap when the
/// leading resonance is at 0, otherwise `−Im σ_1`.
pub fn slowest_decay(base: &ModelOperatorSpec, n_y: usize) -> Result<f64> {
    let rs = find_resonances(base, (n_y / 2) as u32, 10.0)?;
    let (s1, gap) = spectral_gap(&rs)?;
    Ok(if s1.norm() < 1e-12 { gap } else { -s1.im })
}

impl Scenario {
    /// Checks the truncation rule `t_max ≥ 10 / slowest decay`.
    pub fn new(
        name: impl Into<String>,
        problem: ProblemSpec,
        nash_moser: NashMoserConfig,
        alpha: f64,
        fit_window: (f64, f64),
    ) -> Result<Self> {
        let g = *problem.grid();
        let rate = slowest_decay(&problem.base, g.n_y)?;
        if g.t_max < 10.0 / rate {
            return Err(Error::config(format!(
                "t_max = {} is below 10 / slowest decay rate = {:.3}",
                g.t_max,
                10.0 / rate
            )));
        }
        nash_moser.validate()?;
        Ok(Scenario {
            name: name.into(),
            problem,
            nash_moser,
            alpha,
            fit_window,
        })
    }

    /// Quasilinear damped wave on a 4096×16 grid with `t_max = 40`.
    pub fn wave(forcing: ForcingSpec) -> Result<Self> {
        let grid = Grid::new(4096, 16, 40.0)?;
        forcing.validate(&grid)?;
        let problem = ProblemSpec::new(
            ModelOperatorSpec::wave(0.5, 1.0),
            default_metric(),
            default_nonlinearity(EquationKind::Wave),
            forcing.sample(grid),
        )?;
        let cfg = NashMoserConfig {
            alpha: 0.2,
            ..NashMoserConfig::default()
        };
        Scenario::new("wave", problem, cfg, 0.2, (14.0, 39.0))
    }

    /// Klein-Gordon variant, mass 0.1, on a 32768×16 grid with `t_max = 512`.
    pub fn klein_gordon(forcing: ForcingSpec) -> Result<Self> {
        let grid = Grid::new(32768, 16, 512.0)?;
        forcing.validate(&grid)?;
        let problem = ProblemSpec::new(
            ModelOperatorSpec::klein_gordon(0.5, 1.0, 0.1),
            default_metric(),
            default_nonlinearity(EquationKind::KleinGordon),
            forcing.sample(grid),
        )?;
        let cfg = NashMoserConfig {
            alpha: 0.0125,
            ..NashMoserConfig::default()
        };
        Scenario::new("klein-gordon", problem, cfg, 0.0125, (100.0, 500.0))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuasilinearSolution {
    pub outcome: NashMoserOutcome,
    pub expansion: ExpansionDecomposition,
    /// Leading resonance of the frozen operator.
    pub sigma1: Complex64,
    /// Fitted exponent nearest `sigma1` with its amplitude; only set when
    /// `sigma1` is not the zero resonance.
    pub leading_term: Option<(Complex64, Complex64)>,
    /// `−tail_slope` of the remainder.
    pub decay_rate: Option<f64>,
    /// Unweighted L² residual after spectral refinement to twice the y resolution.
    pub refined_residual: f64,
}

/// Runs the Nash-Moser iteration and post-processes the result.
pub fn solve_scenario(sc: &Scenario) -> Result<QuasilinearSolution> {
    let outcome = run(&sc.problem, &sc.nash_moser, &Mollifier)?;
    let expansion = extract_expansion(&outcome.u, sc.alpha, sc.fit_window)?;
    let rs = find_resonances(&sc.problem.base, 0, 10.0)?;
    let (sigma1, _) = spectral_gap(&rs)?;
    let leading_term = if sigma1.norm() < 1e-12 {
        None
    } else {
        expansion.term_near(sigma1)
    };
    let decay_rate = expansion.tail_slope.map(|s| -s);
    let refined_residual = refined_residual(&sc.problem, &outcome.u)?;
    Ok(QuasilinearSolution {
        outcome,
        expansion,
        sigma1,
        leading_term,
        decay_rate,
        refined_residual,
    })
}

/// Residual of `u` re-evaluated at twice the y resolution.
pub fn refined_residual(problem: &ProblemSpec, u: &Field) -> Result<f64> {
    let fine = problem.with_forcing(refine_y(&problem.forcing, 2)?);
    let r = residual(&fine, &refine_y(u, 2)?)?;
    bsobolev_norm(&r, SobolevIndex::unweighted(0.0))
}
