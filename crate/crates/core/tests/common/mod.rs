#![allow(dead_code)]

//! Independent reference solvers shared by the integration tests. Nothing
//! here calls into the time stepper or the FFT code of the library.

use std::f64::consts::TAU;

use num_complex::Complex64;
use tamewave_core::problem::{NonlinearitySpec, Selector};
use tamewave_core::Field;

/// Derivative of a real periodic sample vector by a direct DFT sum,
/// dropping the Nyquist mode.
pub fn dft_derivative(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for (k, c) in coeffs.iter_mut().enumerate() {
        for (j, v) in u.iter().enumerate() {
            *c += v * Complex64::from_polar(1.0, -TAU * (k * j) as f64 / n as f64);
        }
        *c /= n as f64;
    }
    (0..n)
        .map(|j| {
            let mut acc = 0.0;
            for (k, c) in coeffs.iter().enumerate() {
                if 2 * k == n {
                    continue;
                }
                let kk = if 2 * k < n { k as f64 } else { k as f64 - n as f64 };
                acc += (c * Complex64::new(0.0, kk) * Complex64::from_polar(1.0, TAU * (k * j) as f64 / n as f64)).re;
            }
            acc
        })
        .collect()
}

/// Continuous-in-time quasilinear wave
/// `u_tt + γu_t + zu − ∂_y(c0²(1 + Σκ_k u^k)∂_y u) − q(u, u_t, u_y) = f(t, y)`
/// integrated by classical RK4 from zero data.
pub struct WaveOracle<'a> {
    pub gamma: f64,
    pub c0: f64,
    pub zeroth: f64,
    pub kappa: Vec<f64>,
    pub q: &'a NonlinearitySpec,
    pub forcing: &'a dyn Fn(f64, f64) -> f64,
}

impl WaveOracle<'_> {
    fn q_value(&self, u: f64, ut: f64, uy: f64) -> f64 {
        self.q
            .terms
            .iter()
            .map(|term| {
                let mut v = term.coeff * u.powi(term.power as i32);
                for s in &term.selectors {
                    v *= match s {
                        Selector::T => ut,
                        Selector::Y => uy,
                    };
                }
                v
            })
            .sum()
    }

    fn rhs(&self, t: f64, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = u.len();
        let uy = dft_derivative(u);
        let flux: Vec<f64> = (0..n)
            .map(|j| {
                let mut c2 = 1.0;
                let mut p = 1.0;
                for k in &self.kappa {
                    p *= u[j];
                    c2 += k * p;
                }
                self.c0 * self.c0 * c2 * uy[j]
            })
            .collect();
        let dflux = dft_derivative(&flux);
        let acc = (0..n)
            .map(|j| {
                let y = TAU * j as f64 / n as f64;
                -self.gamma * v[j] - self.zeroth * u[j] + dflux[j] + self.q_value(u[j], v[j], uy[j]) + (self.forcing)(t, y)
            })
            .collect();
        (v.to_vec(), acc)
    }

    /// Samples `u(n·dt_out, ·)` for `n < n_out` using `substeps` RK4 steps per
    /// output interval.
    pub fn solve(&self, n_y: usize, dt_out: f64, n_out: usize, substeps: usize) -> Vec<Vec<f64>> {
        let h = dt_out / substeps as f64;
        let mut u = vec![0.0; n_y];
        let mut v = vec![0.0; n_y];
        let mut out = vec![u.clone()];
        let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
        for step in 0..(n_out - 1) * substeps {
            let t = step as f64 * h;
            let (k1u, k1v) = self.rhs(t, &u, &v);
            let (k2u, k2v) = self.rhs(t + 0.5 * h, &axpy(&u, 0.5 * h, &k1u), &axpy(&v, 0.5 * h, &k1v));
            let (k3u, k3v) = self.rhs(t + 0.5 * h, &axpy(&u, 0.5 * h, &k2u), &axpy(&v, 0.5 * h, &k2v));
            let (k4u, k4v) = self.rhs(t + h, &axpy(&u, h, &k3u), &axpy(&v, h, &k3v));
            for j in 0..n_y {
                u[j] += h / 6.0 * (k1u[j] + 2.0 * k2u[j] + 2.0 * k3u[j] + k4u[j]);
                v[j] += h / 6.0 * (k1v[j] + 2.0 * k2v[j] + 2.0 * k3v[j] + k4v[j]);
            }
            if (step + 1) % substeps == 0 {
                out.push(u.clone());
            }
        }
        out
    }
}

/// Quadrature L² distance between a field's real part and sampled rows.
pub fn l2_distance(u: &Field, rows: &[Vec<f64>]) -> f64 {
    let g = u.grid();
    let mut sum = 0.0;
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            sum += (u.at(i, j).re - v).powi(2);
        }
    }
    (sum * g.dt * g.dy).sqrt()
}

/// Roots of `−σ² − iγσ + c` from the quadratic formula.
pub fn quadratic_resonances(gamma: f64, c: f64) -> [Complex64; 2] {
    // σ² + iγσ − c = 0  →  σ = (−iγ ± sqrt(−γ² + 4c)) / 2
    let disc = Complex64::new(4.0 * c - gamma * gamma, 0.0).sqrt();
    let b = Complex64::new(0.0, -gamma);
    [(b + disc) / 2.0, (b - disc) / 2.0]
}

/// RK4 for the scalar ODE `u'' + γu' + z u = f(t)` from zero data, sampled
/// at `n·dt_out`.
pub fn ode_oracle(gamma: f64, z: f64, f: &dyn Fn(f64) -> f64, dt_out: f64, n_out: usize, substeps: usize) -> Vec<f64> {
    let h = dt_out / substeps as f64;
    let (mut u, mut v) = (0.0, 0.0);
    let mut out = vec![0.0];
    let rhs = |t: f64, u: f64, v: f64| (v, f(t) - gamma * v - z * u);
    for step in 0..(n_out - 1) * substeps {
        let t = step as f64 * h;
        let (a1, b1) = rhs(t, u, v);
        let (a2, b2) = rhs(t + 0.5 * h, u + 0.5 * h * a1, v + 0.5 * h * b1);
        let (a3, b3) = rhs(t + 0.5 * h, u + 0.5 * h * a2, v + 0.5 * h * b2);
        let (a4, b4) = rhs(t + h, u + h * a3, v + h * b3);
        u += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        v += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        if (step + 1) % substeps == 0 {
            out.push(u);
        }
    }
    out
}
