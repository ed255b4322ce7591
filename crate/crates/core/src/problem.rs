//! Quasilinear model problems
//!
//! ```text
//!   ∂_t²u + γ∂_t u + (m² + e0)u − ∂_y(c²(u, ∂_y u) ∂_y u) − q(u, ∂_t u, ∂_y u) = f
//! ```
//!
//! with `c² = c0²(1 + Σ_k κ_k u^k) + κ_y (∂_y u)²` and
//! `q = Σ_j a_j u^{e_j} Π_k X_{jk} u`, `X ∈ {∂_t, ∂_y}`.
//!
//! The discrete residual at interior row `n` is
//!
//! ```text
//!   E_n = (u_{n+1} − 2u_n + u_{n−1})/dt² + γ(u_{n+1} − u_{n−1})/(2dt)
//!         + (m² + e0)(u_{n+1} + u_{n−1})/2 − ∂_y(c² ∂_y u)_n − q_n − f_n
//! ```
//!
//! with `∂_t u` in `q` replaced by the centered difference and `∂_y` spectral.
//! Rows 0 and `n_t − 1` carry no equation: the first two rows are fixed to
//! zero by the vanishing Cauchy data, and the last row has no successor.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::linsolve::LinearOpSpec;
use crate::mellin::ModelOperatorSpec;
use crate::spectral::dy_rows;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Hyperbolicity floor for `c²` and for the linearized principal coefficient.
pub const C_MIN: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricMode {
    /// `c²` depends on `u` only.
    Value,
    /// `c²` also depends on `∂_y u` through `κ_y (∂_y u)²`.
    ValueAndGradient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricFamily {
    /// `κ_1, κ_2, …`: coefficients of `u, u², …` in `c²/c0² − 1`.
    pub coeffs: Vec<f64>,
    #[serde(default)]
    pub gradient: f64,
    pub mode: MetricMode,
}

impl MetricFamily {
    pub fn flat() -> Self {
        MetricFamily {
            coeffs: Vec::new(),
            gradient: 0.0,
            mode: MetricMode::Value,
        }
    }

    fn gradient_coeff(&self) -> f64 {
        match self.mode {
            MetricMode::Value => 0.0,
            MetricMode::ValueAndGradient => self.gradient,
        }
    }

    /// `(c², ∂c²/∂u, ∂c²/∂u_y)`.
    fn eval(&self, c0: f64, u: Complex64, uy: Complex64) -> (Complex64, Complex64, Complex64) {
        let c02 = c0 * c0;
        let mut val = Complex64::new(1.0, 0.0);
        let mut der = ZERO;
        let mut pow = Complex64::new(1.0, 0.0); // u^{k-1}
        for (idx, kappa) in self.coeffs.iter().enumerate() {
            let k = (idx + 1) as f64;
            der += pow * (k * kappa);
            pow *= u;
            val += pow * *kappa;
        }
        let kg = self.gradient_coeff();
        (c02 * val + kg * uy * uy, c02 * der, 2.0 * kg * uy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    T,
    Y,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearTerm {
    pub coeff: f64,
    /// Power `e_j` of the undifferentiated factor.
    pub power: u32,
    /// Derivative factors `X_{jk}`; their number is `N_j`.
    pub selectors: Vec<Selector>,
}

impl NonlinearTerm {
    fn counts(&self) -> (i32, i32) {
        let nt = self.selectors.iter().filter(|s| **s == Selector::T).count() as i32;
        (nt, self.selectors.len() as i32 - nt)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationKind {
    /// Every term carries a derivative (`N_j ≥ 1`), so constants solve the
    /// unforced equation.
    Wave,
    /// Only `e_j + N_j ≥ 2` is required.
    KleinGordon,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub kind: EquationKind,
    pub terms: Vec<NonlinearTerm>,
}

impl NonlinearitySpec {
    pub fn validate(&self) -> Result<()> {
        for (j, term) in self.terms.iter().enumerate() {
            let n = term.selectors.len() as u32;
            if term.power + n < 2 {
                return Err(Error::Specification(format!(
                    "term {j} is not at least quadratic (e={}, N={n})",
                    term.power
                )));
            }
            if self.kind == EquationKind::Wave && n == 0 {
                return Err(Error::Specification(format!(
                    "term {j} has no derivative factor, which the wave family forbids"
                )));
            }
            if !term.coeff.is_finite() {
                return Err(Error::Specification(format!("term {j} has a non-finite coefficient")));
            }
        }
        Ok(())
    }

    /// `(q, q_u, q_{u_t}, q_{u_y})` at one point.
    fn eval(&self, u: Complex64, ut: Complex64, uy: Complex64) -> [Complex64; 4] {
        let mut out = [ZERO; 4];
        for term in &self.terms {
            let (nt, ny) = term.counts();
            let e = term.power as i32;
            let a = term.coeff;
            let pu = u.powi(e);
            let pt = ut.powi(nt);
            let py = uy.powi(ny);
            out[0] += a * pu * pt * py;
            if e > 0 {
                out[1] += a * e as f64 * u.powi(e - 1) * pt * py;
            }
            if nt > 0 {
                out[2] += a * pu * nt as f64 * ut.powi(nt - 1) * py;
            }
            if ny > 0 {
                out[3] += a * pu * pt * ny as f64 * uy.powi(ny - 1);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub base: ModelOperatorSpec,
    pub metric: MetricFamily,
    pub nonlinearity: NonlinearitySpec,
    pub forcing: Field,
}

impl ProblemSpec {
    pub fn new(
        base: ModelOperatorSpec,
        metric: MetricFamily,
        nonlinearity: NonlinearitySpec,
        forcing: Field,
    ) -> Result<Self> {
        base.validate()?;
        nonlinearity.validate()?;
        forcing.check_finite()?;
        if metric.coeffs.iter().any(|c| !c.is_finite()) || !metric.gradient.is_finite() {
            return Err(Error::config("metric coefficients must be finite"));
        }
        Ok(ProblemSpec {
            base,
            metric,
            nonlinearity,
            forcing,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.forcing.grid()
    }

    pub fn with_forcing(&self, forcing: Field) -> ProblemSpec {
        ProblemSpec {
            forcing,
            ..self.clone()
        }
    }
}

/// Pointwise first derivatives of `u`: centered in t (zero on the first and
/// last rows) and spectral in y.
pub(crate) fn derivatives(u: &Field) -> (Vec<Complex64>, Vec<Complex64>) {
    let g = u.grid();
    let (n_t, n_y) = (g.n_t, g.n_y);
    let uy = dy_rows(u.values(), n_t, n_y);
    let mut ut = vec![ZERO; g.len()];
    for n in 1..n_t.saturating_sub(1) {
        for j in 0..n_y {
            ut[n * n_y + j] = (u.at(n + 1, j) - u.at(n - 1, j)) / (2.0 * g.dt);
        }
    }
    (ut, uy)
}

fn check_metric(c2: Complex64, idx: usize, g: &Grid) -> Result<()> {
    if !(c2.re >= C_MIN) {
        return Err(Error::domain(format!(
            "wave speed squared {} below {C_MIN} at t={}, y={}: amplitude outside the metric family's range",
            c2.re,
            g.t(idx / g.n_y),
            g.y(idx % g.n_y)
        )));
    }
    Ok(())
}

/// Discrete `φ(u) = P(u)u − q(u, du) − f` on interior rows.
pub fn residual(problem: &ProblemSpec, u: &Field) -> Result<Field> {
    u.check_finite()?;
    u.check_grid(&problem.forcing)?;
    let g = *u.grid();
    let (n_t, n_y, dt) = (g.n_t, g.n_y, g.dt);
    let (ut, uy) = derivatives(u);
    let mut flux = vec![ZERO; g.len()];
    for (idx, f) in flux.iter_mut().enumerate() {
        let (c2, _, _) = problem.metric.eval(problem.base.c0, u.values()[idx], uy[idx]);
        check_metric(c2, idx, &g)?;
        *f = c2 * uy[idx];
    }
    let dflux = dy_rows(&flux, n_t, n_y);
    let gamma = problem.base.gamma;
    let z = problem.base.zeroth();
    let mut out = vec![ZERO; g.len()];
    for n in 1..n_t.saturating_sub(1) {
        for j in 0..n_y {
            let idx = n * n_y + j;
            let up = u.at(n + 1, j);
            let uc = u.at(n, j);
            let um = u.at(n - 1, j);
            let q = problem.nonlinearity.eval(uc, ut[idx], uy[idx])[0];
            out[idx] = (up - 2.0 * uc + um) / (dt * dt)
                + gamma * (up - um) / (2.0 * dt)
                + z * (up + um) * 0.5
                - dflux[idx]
                - q
                - problem.forcing.values()[idx];
        }
    }
    let floor = u.support_floor().min(problem.forcing.support_floor()) - dt;
    let r = Field::from_parts(g, out, floor);
    r.check_finite().map_err(|e| Error::solver(format!("residual overflow: {e}")))?;
    Ok(r)
}

/// Exact derivative of the discrete residual map at `u`.
pub fn linearize(problem: &ProblemSpec, u: &Field) -> Result<LinearOpSpec> {
    u.check_finite()?;
    u.check_grid(&problem.forcing)?;
    let g = *u.grid();
    let (ut, uy) = derivatives(u);
    let len = g.len();
    let mut speed = vec![ZERO; len];
    let mut flux_zeroth = vec![ZERO; len];
    let mut a_t = vec![ZERO; len];
    let mut a_y = vec![ZERO; len];
    let mut zeta = vec![ZERO; len];
    for idx in 0..len {
        let uv = u.values()[idx];
        let (c2, dc2_du, dc2_duy) = problem.metric.eval(problem.base.c0, uv, uy[idx]);
        check_metric(c2, idx, &g)?;
        speed[idx] = c2 + uy[idx] * dc2_duy;
        flux_zeroth[idx] = dc2_du * uy[idx];
        let [_, qu, qut, quy] = problem.nonlinearity.eval(uv, ut[idx], uy[idx]);
        zeta[idx] = -qu;
        a_t[idx] = -qut;
        a_y[idx] = -quy;
    }
    let wrap = |v: Vec<Complex64>| Field::from_parts(g, v, 0.0);
    LinearOpSpec::new(
        problem.base,
        wrap(speed),
        wrap(flux_zeroth),
        wrap(a_t),
        wrap(a_y),
        wrap(zeta),
    )
}
