//! Deterministic random test fields.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::grid::{Field, Grid};
use crate::spectral::{fft2, Direction};

/// Independent stream for item `i` of a run seeded with `seed`.
pub fn item_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

fn normal_pair<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Real field whose discrete spectrum has Gaussian coefficients with envelope
/// `⟨ξ⟩^{-decay}` over the whole grid lattice. Periodic in both directions.
pub fn rough_field<R: Rng>(grid: Grid, decay: f64, rng: &mut R) -> Field {
    let mut data = vec![Complex64::new(0.0, 0.0); grid.len()];
    for i in 0..grid.n_t {
        let tau = grid.tau(i);
        for j in 0..grid.n_y {
            let k = grid.k(j) as f64;
            let env = (1.0 + tau * tau + k * k).powf(-decay / 2.0);
            data[i * grid.n_y + j] = normal_pair(rng) * env;
        }
    }
    fft2(&mut data, grid.n_t, grid.n_y, Direction::Inverse);
    let scale = 1.0 / (grid.len() as f64).sqrt();
    let values = data.iter().map(|v| Complex64::new(v.re * scale, 0.0)).collect();
    Field::new(grid, values, 0.0).expect("finite by construction")
}

/// Coefficients of a real trigonometric polynomial in `(t, y)` with period
/// `period` in t, frequencies `|j| <= jmax`, `|k| <= kmax`. Independent of any
/// grid so the same function can be sampled at several resolutions.
#[derive(Clone, Debug)]
pub struct TrigPoly {
    pub period: f64,
    pub jmax: i64,
    pub kmax: i64,
    coeffs: Vec<Complex64>,
}

impl TrigPoly {
    pub fn random<R: Rng>(period: f64, jmax: i64, kmax: i64, decay: f64, rng: &mut R) -> Self {
        let mut coeffs = Vec::new();
        for j in -jmax..=jmax {
            let tau = TAU * j as f64 / period;
            for k in -kmax..=kmax {
                let env = (1.0 + tau * tau + (k * k) as f64).powf(-decay / 2.0);
                coeffs.push(normal_pair(rng) * env);
            }
        }
        TrigPoly {
            period,
            jmax,
            kmax,
            coeffs,
        }
    }

    pub fn sample(&self, grid: Grid) -> Field {
        let nk = (2 * self.kmax + 1) as usize;
        let ys: Vec<Vec<Complex64>> = (0..grid.n_y)
            .map(|jy| {
                let y = grid.y(jy);
                (-self.kmax..=self.kmax)
                    .map(|k| Complex64::from_polar(1.0, k as f64 * y))
                    .collect()
            })
            .collect();
        Field::from_real_fn(grid, 0.0, |t, y| {
            let jy = (y / grid.dy).round() as usize;
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, j) in (-self.jmax..=self.jmax).enumerate() {
                let et = Complex64::from_polar(1.0, TAU * j as f64 * t / self.period);
                let row = &self.coeffs[a * nk..(a + 1) * nk];
                let inner: Complex64 = row.iter().zip(&ys[jy]).map(|(c, e)| c * e).sum();
                acc += et * inner;
            }
            acc.re
        })
    }
}
