//! Forward solution operator for linear operators of the form
//!
//! ```text
//!   (Lv)_n = (v_{n+1} − 2v_n + v_{n−1})/dt² + (γ + a_t)(v_{n+1} − v_{n−1})/(2dt)
//!            + (m² + e0)(v_{n+1} + v_{n−1})/2
//!            − ∂_y(speed ∂_y v_n + b v_n) + a_y ∂_y v_n + ζ v_n
//! ```
//!
//! on interior rows, which is the linearization of the discrete residual of
//! [`crate::problem`]. The sweep starts from `v_0 = v_1 = 0` and solves row
//! `n` for `v_{n+1}`; damping and mass enter implicitly through a pointwise
//! diagonal, the y-transport explicitly.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::audit::{fit_line, fit_loglog, RatioEntry, TameConstantReport};
use crate::error::{Error, Result};
use crate::grid::{bsobolev_norm, Field, Grid, SobolevIndex};
use crate::mellin::{extract_expansion, ModelOperatorSpec};
use crate::problem::{linearize, ProblemSpec, C_MIN};
use crate::spectral::{fft1, signed_index, Direction};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct LinearOpSpec {
    pub base: ModelOperatorSpec,
    /// Principal coefficient of `−∂_y(· ∂_y v)`; must stay above `C_MIN`.
    pub speed: Field,
    /// `b` in `−∂_y(b v)`.
    pub flux_zeroth: Field,
    pub first_order_t: Field,
    pub first_order_y: Field,
    pub zeroth: Field,
}

impl LinearOpSpec {
    pub fn new(
        base: ModelOperatorSpec,
        speed: Field,
        flux_zeroth: Field,
        first_order_t: Field,
        first_order_y: Field,
        zeroth: Field,
    ) -> Result<Self> {
        base.validate()?;
        for f in [&flux_zeroth, &first_order_t, &first_order_y, &zeroth] {
            speed.check_grid(f)?;
            f.check_finite()?;
        }
        speed.check_finite()?;
        let g = speed.grid();
        if let Some(idx) = speed.values().iter().position(|c| !(c.re >= C_MIN)) {
            return Err(Error::domain(format!(
                "hyperbolicity lost: speed {} < {C_MIN} at t={}, y={}",
                speed.values()[idx].re,
                g.t(idx / g.n_y),
                g.y(idx % g.n_y)
            )));
        }
        Ok(LinearOpSpec {
            base,
            speed,
            flux_zeroth,
            first_order_t,
            first_order_y,
            zeroth,
        })
    }

    /// The frozen operator: speed `c0²`, all other coefficients zero.
    pub fn constant(base: ModelOperatorSpec, grid: Grid) -> Result<Self> {
        let c2 = base.c0 * base.c0;
        let z = Field::from_real_fn(grid, 0.0, |_, _| 0.0);
        LinearOpSpec::new(
            base,
            Field::from_real_fn(grid, 0.0, |_, _| c2),
            z.clone(),
            z.clone(),
            z.clone(),
            z,
        )
    }

    pub fn grid(&self) -> &Grid {
        self.speed.grid()
    }

    /// `Lv` on interior rows; rows 0 and `n_t − 1` are zero.
    pub fn apply(&self, v: &Field) -> Result<Field> {
        self.speed.check_grid(v)?;
        let g = *self.grid();
        let (n_t, n_y, dt) = (g.n_t, g.n_y, g.dt);
        let mut out = vec![ZERO; g.len()];
        let mut work = RowWork::new(n_y);
        let z = self.base.zeroth();
        for n in 1..n_t.saturating_sub(1) {
            let spatial = work.spatial(self, n, v.row(n));
            for j in 0..n_y {
                let idx = n * n_y + j;
                let (up, uc, um) = (v.at(n + 1, j), v.at(n, j), v.at(n - 1, j));
                let damp = self.base.gamma + self.first_order_t.values()[idx];
                out[idx] = (up - 2.0 * uc + um) / (dt * dt)
                    + damp * (up - um) / (2.0 * dt)
                    + z * (up + um) * 0.5
                    + spatial[j];
            }
        }
        Ok(Field::from_parts(g, out, v.support_floor() - dt))
    }
}

/// Scratch space for the y-part of the operator on one row.
struct RowWork {
    n_y: usize,
    spec: Vec<Complex64>,
    vy: Vec<Complex64>,
    flux: Vec<Complex64>,
    out: Vec<Complex64>,
}

impl RowWork {
    fn new(n_y: usize) -> Self {
        RowWork {
            n_y,
            spec: vec![ZERO; n_y],
            vy: vec![ZERO; n_y],
            flux: vec![ZERO; n_y],
            out: vec![ZERO; n_y],
        }
    }

    /// Spectral `∂_y` with the Nyquist mode dropped.
    fn dy(n_y: usize, input: &[Complex64], spec: &mut [Complex64], out: &mut [Complex64]) {
        spec.copy_from_slice(input);
        fft1(spec, Direction::Forward);
        let scale = 1.0 / n_y as f64;
        for (j, c) in spec.iter_mut().enumerate() {
            if n_y % 2 == 0 && j == n_y / 2 {
                *c = ZERO;
            } else {
                *c *= Complex64::new(0.0, signed_index(j, n_y) as f64 * scale);
            }
        }
        fft1(spec, Direction::Inverse);
        out.copy_from_slice(spec);
    }

    /// `−∂_y(speed ∂_y v + b v) + a_y ∂_y v + ζ v` at row `n`.
    fn spatial(&mut self, op: &LinearOpSpec, n: usize, row: &[Complex64]) -> &[Complex64] {
        let n_y = self.n_y;
        Self::dy(n_y, row, &mut self.spec, &mut self.vy);
        let speed = op.speed.row(n);
        let b = op.flux_zeroth.row(n);
        for j in 0..n_y {
            self.flux[j] = speed[j] * self.vy[j] + b[j] * row[j];
        }
        let flux = self.flux.clone();
        Self::dy(n_y, &flux, &mut self.spec, &mut self.out);
        let ay = op.first_order_y.row(n);
        let zeta = op.zeroth.row(n);
        for j in 0..n_y {
            self.out[j] = -self.out[j] + ay[j] * self.vy[j] + zeta[j] * row[j];
        }
        &self.out
    }
}

/// Solves `Lv = f` forward in t with `v_0 = v_1 = 0`. Row 0 and the last row
/// of `f` are not used.
pub fn solve_forward(l: &LinearOpSpec, f: &Field) -> Result<Field> {
    l.speed.check_grid(f)?;
    f.check_finite()?;
    let g = *l.grid();
    let (n_t, n_y, dt) = (g.n_t, g.n_y, g.dt);
    let max_speed = l.speed.values().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let kmax = (n_y / 2) as f64;
    let cfl = dt * max_speed.sqrt() * kmax;
    if cfl >= 2.0 {
        return Err(Error::solver(format!(
            "explicit y-transport unstable: dt*sqrt(max speed)*k_max = {cfl:.3} >= 2 (dt={dt}, max speed={max_speed})"
        )));
    }
    let z = l.base.zeroth();
    let mut v = vec![ZERO; g.len()];
    if f.is_zero() {
        return Ok(Field::from_parts(g, v, f.support_floor()));
    }
    // rows below the first forced equation stay zero
    let start = g.first_row_at_or_above(f.support_floor()).max(1);
    let mut work = RowWork::new(n_y);
    let mut prev = vec![ZERO; n_y];
    let mut cur = vec![ZERO; n_y];
    for n in start..n_t.saturating_sub(1) {
        prev.copy_from_slice(&v[(n - 1) * n_y..n * n_y]);
        cur.copy_from_slice(&v[n * n_y..(n + 1) * n_y]);
        let spatial = work.spatial(l, n, &cur);
        for j in 0..n_y {
            let idx = n * n_y + j;
            let damp = l.base.gamma + l.first_order_t.values()[idx];
            let diag = 1.0 / (dt * dt) + damp / (2.0 * dt) + 0.5 * z;
            if diag.norm() < 1e-8 / (dt * dt) {
                return Err(Error::solver(format!(
                    "singular time step at t={}, y={}",
                    g.t(n),
                    g.y(j)
                )));
            }
            let explicit = (-2.0 * cur[j] + prev[j]) / (dt * dt) - damp * prev[j] / (2.0 * dt)
                + 0.5 * z * prev[j]
                + spatial[j];
            let next = (f.values()[idx] - explicit) / diag;
            if !next.re.is_finite() || !next.im.is_finite() {
                return Err(Error::solver(format!("solution blew up at t={}", g.t(n + 1))));
            }
            v[(n + 1) * n_y + j] = next;
        }
    }
    Ok(Field::from_parts(g, v, f.support_floor()))
}

/// Discrete energy `E_{n+1/2}` for operators with t-independent speed and no
/// lower-order coefficients; non-increasing whenever `f` vanishes.
pub fn discrete_energy(l: &LinearOpSpec, u: &Field) -> Vec<f64> {
    let g = *l.grid();
    let (n_t, n_y, dt, dy) = (g.n_t, g.n_y, g.dt, g.dy);
    let z = l.base.zeroth();
    let mut spec = vec![ZERO; n_y];
    let mut grad_prev = vec![ZERO; n_y];
    let mut grad_next = vec![ZERO; n_y];
    let mut out = Vec::with_capacity(n_t - 1);
    RowWork::dy(n_y, u.row(0), &mut spec, &mut grad_prev);
    for n in 0..n_t - 1 {
        RowWork::dy(n_y, u.row(n + 1), &mut spec, &mut grad_next);
        let speed = l.speed.row(n.max(1));
        let mut e = 0.0;
        for j in 0..n_y {
            let a = u.at(n + 1, j);
            let b = u.at(n, j);
            e += ((a - b) / dt).norm_sqr();
            e += (speed[j] * grad_next[j] * grad_prev[j].conj()).re;
            e += 0.5 * z * (a.norm_sqr() + b.norm_sqr());
        }
        out.push(e * dy);
        std::mem::swap(&mut grad_prev, &mut grad_next);
    }
    out
}

/// Decay rate of the y-Fourier mode `k` of `u` over `window`: minus the
/// slope of `log sqrt(|a|² + |a′/ω|²)`, where `a(t)` is the mode coefficient.
/// For `ω = 0` the slope of `log |a′|` is used instead, which ignores a
/// limiting constant. `None` if the mode is at roundoff level on the window.
pub fn mode_decay_rate(u: &Field, k: i64, omega: f64, window: (f64, f64)) -> Option<f64> {
    let g = *u.grid();
    let (ta, tb) = window;
    let first = g.first_row_at_or_above(ta).max(1);
    let last = ((tb / g.dt).floor() as usize).min(g.n_t - 2);
    if last <= first {
        return None;
    }
    let coeff = |i: usize| -> Complex64 {
        u.row(i)
            .iter()
            .enumerate()
            .map(|(j, v)| v * Complex64::from_polar(1.0, -(k as f64) * g.y(j)))
            .sum::<Complex64>()
            / g.n_y as f64
    };
    // envelopes below this are roundoff, not signal
    let floor = 1e-10 * u.max_abs();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in first..=last {
        let d = (coeff(i + 1) - coeff(i - 1)).norm() / (2.0 * g.dt);
        let e = if omega > 0.0 {
            (coeff(i).norm_sqr() + (d / omega).powi(2)).sqrt()
        } else {
            d
        };
        if e > floor {
            xs.push(g.t(i));
            ys.push(e.ln());
        }
    }
    fit_line(&xs, &ys).map(|f| -f.slope)
}

/// Norm on the expansion space: `|c| + ‖u − cχ‖_{s,α}`.
pub fn x_norm(u: &Field, s: f64, alpha: f64, window: (f64, f64)) -> Result<f64> {
    let e = extract_expansion(u, alpha, window)?;
    Ok(e.constant.norm() + bsobolev_norm(&e.remainder, SobolevIndex::new(s, alpha)?)?)
}

/// Inputs for [`audit_solution_tame`].
#[derive(Clone, Debug)]
pub struct SolutionTameAudit<'a> {
    /// Problem whose linearization at `v` defines `L(v)`.
    pub problem: &'a ProblemSpec,
    pub coefficients: &'a [Field],
    pub f: &'a Field,
    pub s: f64,
    pub s0: f64,
    /// Weight used for both the data norms and the expansion space.
    pub alpha: f64,
    pub window: (f64, f64),
}

/// Ratios `‖S_v f‖_{X^{s,α}} / (‖f‖_{s+3,α} + ‖f‖_{s0,α}‖v‖_{X^{s+4,α}})`
/// over the coefficient family. The reported slope is that of
/// `log ‖S_v f‖_X` against `log ‖v‖_{X^{s+4,α}}`.
pub fn audit_solution_tame(a: &SolutionTameAudit<'_>) -> Result<TameConstantReport> {
    if !(a.s >= a.s0 && a.s0 > 3.0) {
        return Err(Error::config(format!(
            "need s >= s0 > 3, got s={}, s0={}",
            a.s, a.s0
        )));
    }
    let f_hi = bsobolev_norm(a.f, SobolevIndex::new(a.s + 3.0, a.alpha)?)?;
    let f_lo = bsobolev_norm(a.f, SobolevIndex::new(a.s0, a.alpha)?)?;
    let rows: Vec<(f64, f64, f64)> = a
        .coefficients
        .par_iter()
        .map(|v| -> Result<(f64, f64, f64)> {
            let l = linearize(a.problem, v)?;
            let u = solve_forward(&l, a.f)?;
            let lhs = x_norm(&u, a.s, a.alpha, a.window)?;
            let v_hi = x_norm(v, a.s + 4.0, a.alpha, a.window)?;
            Ok((v_hi, lhs, lhs / (f_hi + f_lo * v_hi)))
        })
        .collect::<Result<_>>()?;
    let entries = rows
        .iter()
        .enumerate()
        .map(|(i, (v_hi, _, ratio))| RatioEntry {
            label: "coefficient_high_norm".into(),
            param: *v_hi,
            sample: i,
            ratio: *ratio,
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(TameConstantReport::new("solution-operator", entries).with_slope(fit_loglog(&xs, &ys)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_rate_of_damped_oscillation() {
        let g = Grid::new(2048, 8, 40.0).unwrap();
        let u = Field::from_real_fn(g, 0.0, |t, y| (-0.3 * t).exp() * (2.0 * t).cos() * (2.0 * y).sin());
        let r = mode_decay_rate(&u, 2, 2.0, (5.0, 35.0)).unwrap();
        assert!((r - 0.3).abs() < 0.01, "{r}");
        assert!(mode_decay_rate(&Field::zeros(g), 1, 1.0, (5.0, 35.0)).is_none());
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let g = Grid::new(128, 8, 10.0).unwrap();
        let l = LinearOpSpec::constant(ModelOperatorSpec::wave(0.5, 1.0), g).unwrap();
        let u = solve_forward(&l, &Field::zeros(g)).unwrap();
        assert!(u.is_zero());
    }

    #[test]
    fn low_speed_is_rejected() {
        let g = Grid::new(16, 4, 4.0).unwrap();
        let z = Field::from_real_fn(g, 0.0, |_, _| 0.0);
        let slow = Field::from_real_fn(g, 0.0, |_, _| 0.05);
        let r = LinearOpSpec::new(
            ModelOperatorSpec::wave(0.5, 1.0),
            slow,
            z.clone(),
            z.clone(),
            z.clone(),
            z,
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn cfl_violation_is_solver_error() {
        let g = Grid::new(16, 64, 16.0).unwrap();
        let l = LinearOpSpec::constant(ModelOperatorSpec::wave(0.5, 1.0), g).unwrap();
        let f = Field::from_real_fn(g, 1.0, |_, _| 1.0);
        assert!(matches!(solve_forward(&l, &f), Err(Error::Solver(_))));
    }

    #[test]
    fn solution_satisfies_discrete_equation() {
        let g = Grid::new(512, 8, 20.0).unwrap();
        let l = LinearOpSpec::constant(ModelOperatorSpec::klein_gordon(0.5, 1.0, 0.3), g).unwrap();
        let f = Field::from_real_fn(g, 1.0, |t, y| crate::profiles::bump(t, 1.0, 2.0) * (1.0 + y.sin()));
        let u = solve_forward(&l, &f).unwrap();
        let r = l.apply(&u).unwrap();
        for n in 1..g.n_t - 1 {
            for j in 0..g.n_y {
                assert!((r.at(n, j) - f.at(n, j)).norm() < 1e-8);
            }
        }
    }
}
