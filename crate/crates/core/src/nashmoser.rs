//! Nash-Moser iteration with smoothing.
//!
//! Step `k` uses `θ_k = θ_0^{(5/4)^k}` and `λ_k = exp(Σ_{j<k} θ_j^{-1/2})`.
//! With `t_b` the support floor of the forcing and `a_k = t_b − ln λ_k`:
//!
//! ```text
//!   r_k     = φ(u_k)
//!   Δ_k     = −ψ(S_k u_k) S_k r_k
//!   u_{k+1} = u_k + Δ_k
//! ```
//!
//! where `S_k` is the smoothing operator with its cutoff anchored at `a_k`
//! and `ψ(v)` solves the equation linearized at `v`. The output of `S_k`
//! vanishes below `a_k − θ_k^{-1/2} = a_{k+1}`, so every iterate is supported
//! in `{t > t_b − ln λ_∞}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{bsobolev_norm, bsobolev_norms, Field, SobolevIndex, Window};
use crate::linsolve::solve_forward;
use crate::problem::{linearize, residual, ProblemSpec};
use crate::smoothing::{apply_smoothing_anchored, Mollifier};

pub fn required_regularity(d: u64) -> u64 {
    16 * d * d + 43 * d + 24
}

pub fn schedule_theta(theta0: f64, k: u32) -> Result<f64> {
    if !(theta0 > 1.0) {
        return Err(Error::Schedule(format!("theta0 must exceed 1, got {theta0}")));
    }
    let v = theta0.powf(1.25f64.powi(k as i32));
    if !v.is_finite() {
        return Err(Error::Schedule(format!(
            "theta_{k} overflows for theta0={theta0}; the iteration must stop earlier"
        )));
    }
    Ok(v)
}

/// `ln λ_k = Σ_{j<k} θ_j^{-1/2}`.
pub fn log_lambda_shift(theta0: f64, k: u32) -> Result<f64> {
    if !(theta0 > 1.0) {
        return Err(Error::Schedule(format!("theta0 must exceed 1, got {theta0}")));
    }
    let mut sum = 0.0;
    for j in 0..k {
        // θ_j = θ0^{(5/4)^j}; once it overflows the remaining terms are zero
        let e = 1.25f64.powi(j as i32) * theta0.ln() * -0.5;
        sum += e.exp();
    }
    Ok(sum)
}

pub fn lambda_shift(theta0: f64, k: u32) -> Result<f64> {
    Ok(log_lambda_shift(theta0, k)?.exp())
}

/// `λ_∞`, summed until the terms stop contributing.
pub fn lambda_limit(theta0: f64) -> Result<f64> {
    lambda_shift(theta0, 200)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NashMoserConfig {
    /// Loss-of-derivatives parameter; reported, and used for `required_regularity`.
    pub d: u32,
    pub theta0: f64,
    /// Trust radius for `‖u_k − u_0‖` at the highest solution-norm order.
    pub delta: f64,
    pub max_iters: u32,
    pub residual_tol: f64,
    /// Largest admissible initial residual.
    pub smallness: f64,
    /// Weight of the residual norm.
    pub alpha: f64,
    /// Order of the residual norm used for termination.
    pub residual_order: f64,
    /// Orders standing in for `d, 2d, 3d` in the solution norms.
    pub norm_orders: [f64; 3],
}

impl Default for NashMoserConfig {
    fn default() -> Self {
        NashMoserConfig {
            d: 6,
            theta0: 256.0,
            delta: 1.0,
            max_iters: 12,
            residual_tol: 1e-8,
            smallness: 1.0,
            alpha: 0.0,
            residual_order: 0.0,
            norm_orders: [1.0, 2.0, 3.0],
        }
    }
}

impl NashMoserConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::config(format!("d must be at least 2, got {}", self.d)));
        }
        if !(self.theta0 >= 256.0) {
            return Err(Error::config(format!(
                "theta0 must be at least 256 for the dilation bound, got {}",
                self.theta0
            )));
        }
        if !(self.delta > 0.0) || !(self.residual_tol > 0.0) || !(self.smallness > 0.0) {
            return Err(Error::config("delta, residual_tol and smallness must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be positive"));
        }
        if self.residual_order < 0.0 || self.norm_orders.iter().any(|s| *s < 0.0) {
            return Err(Error::config("norm orders must be non-negative"));
        }
        Ok(())
    }

    pub fn required_regularity(&self) -> u64 {
        required_regularity(self.d as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceStep {
    pub k: u32,
    pub theta: f64,
    pub lambda: f64,
    pub residual_norm: f64,
    pub solution_norms: [f64; 3],
    /// `‖u_{k+1} − u_k‖` at the middle order; absent on the final step.
    pub step_norm: Option<f64>,
    pub support_floor: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IterationTrace {
    pub steps: Vec<TraceStep>,
}

impl IterationTrace {
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "k,theta,lambda,residual,norm_low,norm_mid,norm_high,step_norm,support_floor"
        )?;
        for s in &self.steps {
            let step = s.step_norm.map(|v| format!("{v:.16e}")).unwrap_or_default();
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
                s.k,
                s.theta,
                s.lambda,
                s.residual_norm,
                s.solution_norms[0],
                s.solution_norms[1],
                s.solution_norms[2],
                step,
                s.support_floor
            )?;
        }
        Ok(())
    }
}

/// The nonlinear map and its linearized solution operator.
pub trait NashMoserSystem {
    fn residual(&self, u: &Field) -> Result<Field>;
    /// Solves the equation linearized at `at` with right-hand side `rhs`.
    fn solve_linearized(&self, at: &Field, rhs: &Field) -> Result<Field>;
    fn initial(&self) -> Field;
    /// Support floor of the data; the anchor of the first smoothing step.
    fn base_floor(&self) -> f64;
}

pub trait Smoother {
    /// Smooths `u` with parameter θ, cutoff anchored at `anchor`.
    fn smooth(&self, u: &Field, theta: f64, anchor: f64) -> Result<Field>;
}

impl Smoother for Mollifier {
    fn smooth(&self, u: &Field, theta: f64, anchor: f64) -> Result<Field> {
        apply_smoothing_anchored(u, theta, anchor, self)
    }
}

impl NashMoserSystem for ProblemSpec {
    fn residual(&self, u: &Field) -> Result<Field> {
        residual(self, u)
    }

    fn solve_linearized(&self, at: &Field, rhs: &Field) -> Result<Field> {
        solve_forward(&linearize(self, at)?, rhs)
    }

    fn initial(&self) -> Field {
        Field::zeros(*self.grid())
    }

    fn base_floor(&self) -> f64 {
        self.forcing.support_floor().min(self.grid().t_max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NashMoserOutcome {
    pub u: Field,
    pub trace: IterationTrace,
    pub iterations: u32,
}

pub fn run<P: NashMoserSystem, S: Smoother>(
    system: &P,
    cfg: &NashMoserConfig,
    smoother: &S,
) -> Result<NashMoserOutcome> {
    cfg.validate()?;
    let u0 = system.initial();
    let mut u = u0.clone();
    let base = system.base_floor();
    let mut trace = IterationTrace::default();
    let mut growth = 0;
    let mut prev_res = f64::INFINITY;
    let high = cfg.norm_orders[2];
    for k in 0..=cfg.max_iters {
        let theta = schedule_theta(cfg.theta0, k)?;
        let log_lambda = log_lambda_shift(cfg.theta0, k)?;
        let r = system.residual(&u)?;
        let res = bsobolev_norm(&r, SobolevIndex::new(cfg.residual_order, cfg.alpha)?)?;
        let norms = bsobolev_norms(&u, &cfg.norm_orders, 0.0, Window::Tapered)?;
        trace.steps.push(TraceStep {
            k,
            theta,
            lambda: log_lambda.exp(),
            residual_norm: res,
            solution_norms: [norms[0], norms[1], norms[2]],
            step_norm: None,
            support_floor: u.support_floor(),
        });
        if k == 0 && res > cfg.smallness {
            return Err(Error::config(format!(
                "initial residual {res:.3e} exceeds the smallness threshold {:.3e}",
                cfg.smallness
            )));
        }
        if res < cfg.residual_tol {
            return Ok(NashMoserOutcome {
                u,
                trace,
                iterations: k,
            });
        }
        if res > prev_res {
            growth += 1;
            if growth >= 3 {
                return Err(Error::Convergence {
                    message: format!("residual grew for 3 consecutive steps (now {res:.3e})"),
                    trace: Box::new(trace),
                });
            }
        } else {
            growth = 0;
        }
        prev_res = res;
        if k == cfg.max_iters {
            break;
        }
        let anchor = base - log_lambda;
        let su = smoother.smooth(&u, theta, anchor)?;
        let sr = smoother.smooth(&r, theta, anchor)?;
        let delta = system.solve_linearized(&su, &sr)?;
        let next_floor = anchor - theta.powf(-0.5);
        let next = u.sub(&delta)?.with_floor(next_floor.min(u.support_floor()))?;
        let step = bsobolev_norm(&next.sub(&u)?, SobolevIndex::unweighted(cfg.norm_orders[1]))?;
        if let Some(last) = trace.steps.last_mut() {
            last.step_norm = Some(step);
        }
        let dist = bsobolev_norm(&next.sub(&u0)?, SobolevIndex::unweighted(high))?;
        if dist >= cfg.delta {
            return Err(Error::TrustRegion {
                message: format!(
                    "iterate left the trust region: distance {dist:.3e} >= delta {:.3e} at step {}",
                    cfg.delta,
                    k + 1
                ),
                trace: Box::new(trace),
            });
        }
        u = next;
    }
    Err(Error::Convergence {
        message: format!(
            "residual {prev_res:.3e} above tolerance {:.3e} after {} iterations",
            cfg.residual_tol, cfg.max_iters
        ),
        trace: Box::new(trace),
    })
}
