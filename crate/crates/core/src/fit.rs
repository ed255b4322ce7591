//! Exponential-sum fitting of uniformly sampled signals (Prony's method with
//! weighted least-squares amplitudes).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::poly;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Model `Σ a_j e^{-iσ_j (t − t_ref)}`: fixed exponents first, then free ones.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpFit {
    pub t_ref: f64,
    pub fixed: Vec<(Complex64, Complex64)>,
    pub free: Vec<(Complex64, Complex64)>,
    /// Weighted RMS misfit `(h Σ w²|m − model|²)^{1/2}` on the fitted samples.
    pub misfit: f64,
}

impl ExpFit {
    pub fn eval(&self, t: f64) -> Complex64 {
        self.fixed
            .iter()
            .chain(&self.free)
            .map(|(sigma, a)| a * (-Complex64::i() * sigma * (t - self.t_ref)).exp())
            .sum()
    }
}

/// Fits `data[n] ≈ model(t0 + n h)` with the `fixed` exponents always present
/// and up to `max_free` additional exponents found by linear prediction.
/// The model order with the smallest weighted misfit wins; ties go to the
/// smaller order.
pub fn fit_exponentials(
    t0: f64,
    h: f64,
    data: &[Complex64],
    weights: &[f64],
    fixed: &[Complex64],
    max_free: usize,
) -> ExpFit {
    let rho_fixed: Vec<Complex64> = fixed
        .iter()
        .map(|s| (-Complex64::i() * s * h).exp())
        .collect();
    // annihilate the fixed part
    let mut d = data.to_vec();
    for r in &rho_fixed {
        d = d.windows(2).map(|w| w[1] - r * w[0]).collect();
    }
    let scale = data.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let dnorm = d.iter().map(|v| v.norm()).fold(0.0, f64::max);

    let mut best = amplitudes(t0, h, data, weights, fixed, &[]);
    if dnorm <= 1e-13 * scale || scale == 0.0 {
        return best;
    }
    let target = 1e-13 * weighted_norm(h, data, weights);
    for order in 1..=max_free {
        if d.len() < 2 * order + 1 {
            break;
        }
        let Some(rhos) = prediction_roots(&d, order) else {
            continue;
        };
        let free: Vec<Complex64> = rhos
            .into_iter()
            .filter(|r| {
                let m = r.norm();
                m > 1e-8 && m <= 1.0 + 1e-9 && rho_fixed.iter().all(|f| (r - f).norm() > 1e-7)
            })
            .map(|r| Complex64::i() * r.ln() / h)
            .collect();
        let fit = amplitudes(t0, h, data, weights, fixed, &free);
        if fit.misfit < 0.5 * best.misfit {
            best = fit;
        }
        if best.misfit <= target {
            break;
        }
    }
    best
}

fn weighted_norm(h: f64, data: &[Complex64], weights: &[f64]) -> f64 {
    (h * data
        .iter()
        .zip(weights)
        .map(|(v, w)| w * w * v.norm_sqr())
        .sum::<f64>())
    .sqrt()
}

/// Roots of the characteristic polynomial of the order-`p` linear predictor.
fn prediction_roots(d: &[Complex64], p: usize) -> Option<Vec<Complex64>> {
    let rows = d.len() - p;
    let a = DMatrix::from_fn(rows, p, |n, i| d[n + i]);
    let b = DVector::from_fn(rows, |n, _| -d[n + p]);
    let coef = a.svd(true, true).solve(&b, 1e-14).ok()?;
    let mut char_poly: Vec<Complex64> = coef.iter().copied().collect();
    char_poly.push(ONE);
    Some(poly::roots(&char_poly))
}

fn amplitudes(
    t0: f64,
    h: f64,
    data: &[Complex64],
    weights: &[f64],
    fixed: &[Complex64],
    free: &[Complex64],
) -> ExpFit {
    let sigmas: Vec<Complex64> = fixed.iter().chain(free).copied().collect();
    let n = data.len();
    let basis = |row: usize, col: usize| -> Complex64 {
        (-Complex64::i() * sigmas[col] * (row as f64 * h)).exp()
    };
    let coeffs: Vec<Complex64> = if sigmas.is_empty() {
        Vec::new()
    } else {
        let a = DMatrix::from_fn(n, sigmas.len(), |r, c| basis(r, c) * weights[r]);
        let b = DVector::from_fn(n, |r, _| data[r] * weights[r]);
        match a.svd(true, true).solve(&b, 1e-14) {
            Ok(x) => x.iter().copied().collect(),
            Err(_) => vec![ZERO; sigmas.len()],
        }
    };
    let resid: Vec<Complex64> = (0..n)
        .map(|r| {
            data[r]
                - coeffs
                    .iter()
                    .enumerate()
                    .map(|(c, a)| a * basis(r, c))
                    .sum::<Complex64>()
        })
        .collect();
    let pairs: Vec<(Complex64, Complex64)> = sigmas.into_iter().zip(coeffs).collect();
    let (fx, fr) = pairs.split_at(fixed.len());
    ExpFit {
        t_ref: t0,
        fixed: fx.to_vec(),
        free: fr.to_vec(),
        misfit: weighted_norm(h, &resid, weights),
    }
}
