//! Pointwise nonlinear operations on fields and empirical audits of their
//! tame estimates.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{safe_ratio, RatioEntry, TameConstantReport};
use crate::error::{Error, Result};
use crate::grid::{bsobolev_norms, Field, Grid, Window};
use crate::sampling::{item_rng, TrigPoly};
use crate::spectral::{fft_rows, Direction};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Pointwise product; the support floor is the higher of the two.
pub fn product(u: &Field, v: &Field) -> Result<Field> {
    u.check_grid(v)?;
    let floor = u.support_floor().max(v.support_floor());
    let values = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| a * b)
        .collect();
    Ok(Field::from_parts(*u.grid(), values, floor))
}

/// Product evaluated on a grid padded by 3/2 in y, which removes aliasing
/// of quadratic terms in the periodic direction.
pub fn product_dealiased(u: &Field, v: &Field) -> Result<Field> {
    u.check_grid(v)?;
    let g = *u.grid();
    let n = g.n_y;
    let np = 3 * n / 2;
    if np == 0 || n < 2 {
        return product(u, v);
    }
    let pad = |f: &Field| -> Vec<Complex64> {
        let mut spec = f.values().to_vec();
        fft_rows(&mut spec, g.n_t, n, Direction::Forward);
        let mut out = vec![ZERO; g.n_t * np];
        for i in 0..g.n_t {
            let src = &spec[i * n..(i + 1) * n];
            let dst = &mut out[i * np..(i + 1) * np];
            for (j, c) in src.iter().enumerate() {
                let k = g.k(j);
                if 2 * k.unsigned_abs() as usize == n {
                    continue;
                }
                let jp = if k >= 0 { k as usize } else { (np as i64 + k) as usize };
                dst[jp] = *c;
            }
            // per-row inverse of length np
            crate::spectral::fft1(dst, Direction::Inverse);
            for x in dst.iter_mut() {
                *x /= n as f64;
            }
        }
        out
    };
    let a = pad(u);
    let b = pad(v);
    let mut prod: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let mut values = vec![ZERO; g.len()];
    for i in 0..g.n_t {
        let row = &mut prod[i * np..(i + 1) * np];
        crate::spectral::fft1(row, Direction::Forward);
        let dst = &mut values[i * n..(i + 1) * n];
        for (j, d) in dst.iter_mut().enumerate() {
            let k = g.k(j);
            if 2 * k.unsigned_abs() as usize == n {
                continue;
            }
            let jp = if k >= 0 { k as usize } else { (np as i64 + k) as usize };
            *d = row[jp] / np as f64;
        }
        crate::spectral::fft1(dst, Direction::Inverse);
    }
    let floor = u.support_floor().max(v.support_floor());
    Ok(Field::from_parts(g, values, floor))
}

/// `w / (a + u)` on the support of `w`, zero elsewhere. Every point where
/// `w ≠ 0` must satisfy `|a + u| ≥ c0`.
pub fn reciprocal(w: &Field, a: f64, u: &Field, c0: f64) -> Result<Field> {
    w.check_grid(u)?;
    if !(c0 > 0.0) {
        return Err(Error::config(format!("lower bound c0 must be positive, got {c0}")));
    }
    let g = *w.grid();
    let mut values = Vec::with_capacity(g.len());
    for (idx, (wv, uv)) in w.values().iter().zip(u.values()).enumerate() {
        if *wv == ZERO {
            values.push(ZERO);
            continue;
        }
        let den = uv + a;
        if den.norm() < c0 {
            return Err(Error::domain(format!(
                "|a+u| = {} < c0 = {c0} at t={}, y={}",
                den.norm(),
                g.t(idx / g.n_y),
                g.y(idx % g.n_y)
            )));
        }
        values.push(wv / den);
    }
    Ok(Field::from_parts(g, values, w.support_floor()))
}

/// Smooth scalar function with `F(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothFunctionSpec {
    /// `Σ coeffs[n] x^n`.
    Polynomial { coeffs: Vec<f64> },
    Sine,
    ExpMinusOne,
    /// Interpolant through `(xs, ys)`, piecewise linear (`degree = 1`) or
    /// natural cubic spline (`degree = 3`). Constant extension outside.
    Tabulated { xs: Vec<f64>, ys: Vec<f64>, degree: u8 },
}

impl SmoothFunctionSpec {
    pub fn identity() -> Self {
        SmoothFunctionSpec::Polynomial {
            coeffs: vec![0.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let SmoothFunctionSpec::Tabulated { xs, ys, degree } = self {
            if xs.len() != ys.len() || xs.len() < 2 {
                return Err(Error::Specification("tabulated function needs matching xs/ys with at least two points".into()));
            }
            if xs.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Specification("tabulated xs must be increasing".into()));
            }
            if *degree != 1 && *degree != 3 {
                return Err(Error::Specification(format!("unsupported spline degree {degree}")));
            }
        }
        let f0 = self.eval(0.0);
        if f0 != 0.0 {
            return Err(Error::Specification(format!("F(0) must vanish, got {f0}")));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SmoothFunctionSpec::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            SmoothFunctionSpec::Sine => x.sin(),
            SmoothFunctionSpec::ExpMinusOne => x.exp_m1(),
            SmoothFunctionSpec::Tabulated { xs, ys, degree } => spline(xs, ys, *degree, x).0,
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            SmoothFunctionSpec::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (n, c)| acc * x + n as f64 * c),
            SmoothFunctionSpec::Sine => x.cos(),
            SmoothFunctionSpec::ExpMinusOne => x.exp(),
            SmoothFunctionSpec::Tabulated { xs, ys, degree } => spline(xs, ys, *degree, x).1,
        }
    }
}

/// Value and derivative of the interpolant at `x`.
fn spline(xs: &[f64], ys: &[f64], degree: u8, x: f64) -> (f64, f64) {
    let n = xs.len();
    if x <= xs[0] {
        return (ys[0], 0.0);
    }
    if x >= xs[n - 1] {
        return (ys[n - 1], 0.0);
    }
    let i = xs.partition_point(|v| *v <= x) - 1;
    let h = xs[i + 1] - xs[i];
    let a = (xs[i + 1] - x) / h;
    let b = (x - xs[i]) / h;
    if degree == 1 {
        return (a * ys[i] + b * ys[i + 1], (ys[i + 1] - ys[i]) / h);
    }
    let m = natural_second_derivatives(xs, ys);
    let val = a * ys[i]
        + b * ys[i + 1]
        + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
    let der = (ys[i + 1] - ys[i]) / h
        + (-(3.0 * a * a - 1.0) * m[i] + (3.0 * b * b - 1.0) * m[i + 1]) * h / 6.0;
    (val, der)
}

fn natural_second_derivatives(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior equations
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        let diag = 2.0 * (h0 + h1);
        let rhs = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        let denom = diag - h0 * c_prime[i - 1];
        c_prime[i] = h1 / denom;
        d_prime[i] = (rhs - h0 * d_prime[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = d_prime[i] - c_prime[i] * m[i + 1];
    }
    m
}

/// Pointwise `F(u)` for a real field `u`.
pub fn compose_smooth(f: &SmoothFunctionSpec, u: &Field) -> Result<Field> {
    f.validate()?;
    if !u.is_real(0.0) {
        return Err(Error::data("composition requires a real-valued field"));
    }
    Ok(u.map(|v| Complex64::new(f.eval(v.re), 0.0)))
}

/// Pointwise `F'(u)·δ`.
pub fn compose_derivative(f: &SmoothFunctionSpec, u: &Field, delta: &Field) -> Result<Field> {
    u.zip(delta, |a, d| d * f.derivative(a.re))
}

#[derive(Clone, Debug, PartialEq)]
pub enum TameOp {
    Product,
    /// `w / (a + u)` with `u` scaled so that `min(a + u) = c0`.
    Reciprocal { a: f64, c0: f64 },
    Composition(SmoothFunctionSpec),
}

impl TameOp {
    pub fn parse(id: &str) -> Result<TameOp> {
        match id {
            "product" => Ok(TameOp::Product),
            "reciprocal" => Ok(TameOp::Reciprocal { a: 1.0, c0: 0.5 }),
            "composition" => Ok(TameOp::Composition(SmoothFunctionSpec::Sine)),
            other => Err(Error::config(format!("unknown tame operation '{other}'"))),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            TameOp::Product => "product",
            TameOp::Reciprocal { .. } => "reciprocal",
            TameOp::Composition(_) => "composition",
        }
    }
}

/// Sampling setup for tame audits: random trigonometric polynomials with
/// `|j| ≤ jmax`, `|k| ≤ kmax` on a cylinder of period `t_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TameAuditSetup {
    pub grid: Grid,
    pub jmax: i64,
    pub kmax: i64,
    pub amplitudes: [f64; 3],
}

impl TameAuditSetup {
    pub fn coarse() -> Self {
        TameAuditSetup {
            grid: Grid::new(128, 32, 16.0).expect("valid grid"),
            jmax: 12,
            kmax: 4,
            amplitudes: [0.25, 0.5, 1.0],
        }
    }

    /// Same functions, twice the resolution in each direction.
    pub fn refined(&self) -> Self {
        let g = self.grid;
        TameAuditSetup {
            grid: Grid::new(2 * g.n_t, 2 * g.n_y, g.t_max).expect("valid grid"),
            ..*self
        }
    }
}

const TRIG_DECAY: f64 = 1.0;

/// Measured LHS / structural RHS for the chosen operation over random fields
/// and an amplitude sweep, RHS constant 1.
///
/// * product: `‖uv‖_s / (‖u‖_μ‖v‖_s + ‖u‖_s‖v‖_μ)`
/// * reciprocal: `‖w/(a+u)‖_s / (‖w‖_s + ‖w‖_μ(1 + ‖u‖_s))`
/// * composition: `‖F(u)‖_s / (1 + ‖u‖_s)`, with `u` scaled to sup norm `amp`
pub fn audit_tame(
    op: &TameOp,
    s: f64,
    mu: f64,
    setup: &TameAuditSetup,
    samples: usize,
    rng_seed: u64,
) -> Result<TameConstantReport> {
    if !(mu > 1.0) {
        return Err(Error::config(format!("mu must exceed 1 in two dimensions, got {mu}")));
    }
    if s < 0.0 {
        return Err(Error::config(format!("order must be non-negative, got {s}")));
    }
    if let TameOp::Composition(f) = op {
        f.validate()?;
    }
    if let TameOp::Reciprocal { c0, a } = op {
        if !(*c0 > 0.0 && *c0 < *a) {
            return Err(Error::config(format!("need 0 < c0 < a, got c0={c0}, a={a}")));
        }
    }
    let orders = [s, mu];
    let g = setup.grid;
    let period = g.t_max;
    let per_sample: Vec<Vec<RatioEntry>> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<Vec<RatioEntry>> {
            let mut rng = item_rng(rng_seed, i as u64);
            let p = TrigPoly::random(period, setup.jmax, setup.kmax, TRIG_DECAY, &mut rng);
            let q = TrigPoly::random(period, setup.jmax, setup.kmax, TRIG_DECAY, &mut rng);
            let raw_u = p.sample(g);
            let raw_v = q.sample(g);
            let norms = |f: &Field| bsobolev_norms(f, &orders, 0.0, Window::Periodic);
            let mut out = Vec::new();
            for &amp in &setup.amplitudes {
                let ratio = match op {
                    TameOp::Product => {
                        let u = raw_u.scale(amp.into());
                        let v = raw_v.scale(amp.into());
                        let lhs = norms(&product(&u, &v)?)?[0];
                        let nu = norms(&u)?;
                        let nv = norms(&v)?;
                        safe_ratio(lhs, nu[1] * nv[0] + nu[0] * nv[1])
                    }
                    TameOp::Reciprocal { a, c0 } => {
                        let u = reciprocal_perturbation(&raw_u, *a, *c0, amp);
                        let w = raw_v.scale(amp.into());
                        let lhs = norms(&reciprocal(&w, *a, &u, *c0 * (1.0 - 1e-12))?)?[0];
                        let nw = norms(&w)?;
                        let nu = norms(&u)?;
                        safe_ratio(lhs, nw[0] + nw[1] * (1.0 + nu[0]))
                    }
                    TameOp::Composition(f) => {
                        let u = raw_u.scale((amp / raw_u.max_abs()).into());
                        let lhs = norms(&compose_smooth(f, &u)?)?[0];
                        safe_ratio(lhs, 1.0 + norms(&u)?[0])
                    }
                };
                out.push(RatioEntry {
                    label: "amplitude".into(),
                    param: amp,
                    sample: i,
                    ratio,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(TameConstantReport::new(
        op.id(),
        per_sample.into_iter().flatten().collect(),
    ))
}

/// Rescales `raw` so that `a + u` attains its minimum `a − (a − c0)` = `c0`
/// at full amplitude; smaller amplitudes stay further from the bound.
fn reciprocal_perturbation(raw: &Field, a: f64, c0: f64, amp: f64) -> Field {
    let peak = raw.values().iter().map(|v| v.re).fold(0.0, f64::max);
    if peak == 0.0 || amp == 0.0 {
        return raw.scale(0.0.into());
    }
    raw.scale(Complex64::new(-(a - c0) * amp / peak, 0.0))
}

/// Growth factor `c0^{-1} max(c0^{-⌈s⌉}, 1)` of the reciprocal estimate.
pub fn reciprocal_envelope(c0: f64, s: f64) -> f64 {
    c0.recip() * c0.powf(-s.ceil()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(32, 8, 8.0).unwrap()
    }

    #[test]
    fn product_with_zero() {
        let u = Field::zeros(grid());
        let v = Field::from_real_fn(grid(), 0.0, |t, y| t + y);
        assert!(product(&u, &v).unwrap().is_zero());
    }

    #[test]
    fn product_floor_is_max() {
        let u = Field::from_real_fn(grid(), 1.0, |_, _| 1.0);
        let v = Field::from_real_fn(grid(), 3.0, |_, _| 2.0);
        assert_eq!(product(&u, &v).unwrap().support_floor(), 3.0);
    }

    #[test]
    fn grid_mismatch() {
        let u = Field::zeros(grid());
        let v = Field::zeros(Grid::new(64, 8, 8.0).unwrap());
        assert!(matches!(product(&u, &v), Err(Error::Config(_))));
    }

    #[test]
    fn reciprocal_trivial_cases() {
        let w = Field::from_real_fn(grid(), 0.0, |t, y| (t * y).sin());
        let z = Field::zeros(grid());
        assert_eq!(reciprocal(&w, 1.0, &z, 0.5).unwrap(), w);
        let half = reciprocal(&w, 2.0, &z, 0.5).unwrap();
        for (a, b) in half.values().iter().zip(w.values()) {
            assert_eq!(*a * 2.0, *b);
        }
    }

    #[test]
    fn reciprocal_reports_violation() {
        let w = Field::from_real_fn(grid(), 0.0, |_, _| 1.0);
        let u = Field::from_real_fn(grid(), 0.0, |t, _| -t / 8.0);
        let e = reciprocal(&w, 1.0, &u, 0.5).unwrap_err();
        assert!(matches!(e, Error::Domain(_)));
    }

    #[test]
    fn composition_requires_vanishing_at_zero() {
        let f = SmoothFunctionSpec::Polynomial {
            coeffs: vec![1.0, 1.0],
        };
        let u = Field::zeros(grid());
        assert!(matches!(compose_smooth(&f, &u), Err(Error::Specification(_))));
    }

    #[test]
    fn identity_composition() {
        let u = Field::from_real_fn(grid(), 0.0, |t, y| t.sin() * y.cos());
        assert_eq!(compose_smooth(&SmoothFunctionSpec::identity(), &u).unwrap(), u);
    }

    #[test]
    fn spline_reproduces_cubic_data_smoothly() {
        let xs: Vec<f64> = (-5..=5).map(|i| i as f64 * 0.2).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let f = SmoothFunctionSpec::Tabulated {
            xs,
            ys,
            degree: 3,
        };
        f.validate().unwrap();
        assert!((f.eval(0.3) - 0.3f64.sin()).abs() < 1e-3);
        assert!((f.derivative(0.3) - 0.3f64.cos()).abs() < 1e-2);
    }

    #[test]
    fn unknown_op() {
        assert!(matches!(TameOp::parse("quotient"), Err(Error::Config(_))));
    }

    #[test]
    fn envelope_values() {
        assert_eq!(reciprocal_envelope(0.5, 2.0), 8.0);
        assert_eq!(reciprocal_envelope(2.0, 2.0), 0.5);
    }
}
