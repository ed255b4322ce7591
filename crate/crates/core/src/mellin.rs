//! Normal-operator analysis for the damped wave / Klein-Gordon model
//! `∂_t² + γ∂_t − c0²∂_y² + m² + e0` on the cylinder.
//!
//! Per circle mode `k`, the substitution `u = e^{−iσt} e^{iky}` turns the
//! operator into the quadratic symbol
//! `P̂_k(σ) = −σ² − iγσ + c0²k² + m² + e0`; its roots are the resonances.
//! A resonance with `Im σ < 0` contributes a term decaying like `e^{Im σ · t}`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_exponentials, ExpFit};
use crate::grid::Field;
use crate::poly;
use crate::profiles::boundary_cutoff;
use crate::spectral::dy_rows;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelOperatorSpec {
    pub gamma: f64,
    pub c0: f64,
    #[serde(default)]
    pub mass: f64,
    #[serde(default)]
    pub extra_zeroth: f64,
}

impl ModelOperatorSpec {
    pub fn wave(gamma: f64, c0: f64) -> Self {
        ModelOperatorSpec {
            gamma,
            c0,
            mass: 0.0,
            extra_zeroth: 0.0,
        }
    }

    pub fn klein_gordon(gamma: f64, c0: f64, mass: f64) -> Self {
        ModelOperatorSpec {
            mass,
            ..Self::wave(gamma, c0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !(self.c0 > 0.0) || !(self.mass >= 0.0) {
            return Err(Error::config(format!(
                "model operator needs gamma > 0, c0 > 0, mass >= 0 (got {}, {}, {})",
                self.gamma, self.c0, self.mass
            )));
        }
        if !self.extra_zeroth.is_finite() {
            return Err(Error::config("extra_zeroth must be finite"));
        }
        Ok(())
    }

    /// Constant zeroth-order coefficient `m² + e0`.
    pub fn zeroth(&self) -> f64 {
        self.mass * self.mass + self.extra_zeroth
    }

    /// Ascending coefficients of `P̂_k` as a polynomial in σ.
    pub fn symbol_coeffs(&self, k: i64) -> [Complex64; 3] {
        let k2 = (k * k) as f64;
        [
            Complex64::new(self.c0 * self.c0 * k2 + self.zeroth(), 0.0),
            Complex64::new(0.0, -self.gamma),
            Complex64::new(-1.0, 0.0),
        ]
    }
}

pub fn normal_symbol(spec: &ModelOperatorSpec, k: i64, sigma: Complex64) -> Complex64 {
    poly::eval(&spec.symbol_coeffs(k), sigma)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResonanceSet {
    pub modes: BTreeMap<i64, Vec<Complex64>>,
    pub search_bound: f64,
}

impl ResonanceSet {
    /// All resonances, sorted by decreasing imaginary part.
    pub fn all(&self) -> Vec<(i64, Complex64)> {
        let mut v: Vec<(i64, Complex64)> = self
            .modes
            .iter()
            .flat_map(|(k, rs)| rs.iter().map(move |s| (*k, *s)))
            .collect();
        v.sort_by(|a, b| b.1.im.total_cmp(&a.1.im).then(a.1.re.total_cmp(&b.1.re)));
        v
    }
}

pub fn find_resonances(spec: &ModelOperatorSpec, k_max: u32, search_bound: f64) -> Result<ResonanceSet> {
    spec.validate()?;
    if !(search_bound > 0.0) {
        return Err(Error::config(format!("search bound must be positive, got {search_bound}")));
    }
    let k_max = k_max as i64;
    let mut modes = BTreeMap::new();
    for k in -k_max..=k_max {
        let mut rs: Vec<Complex64> = poly::roots(&spec.symbol_coeffs(k))
            .into_iter()
            .filter(|s| s.im >= -search_bound)
            .collect();
        rs.sort_by(|a, b| b.im.total_cmp(&a.im).then(a.re.total_cmp(&b.re)));
        modes.insert(k, rs);
    }
    Ok(ResonanceSet {
        modes,
        search_bound,
    })
}

/// Leading resonance and the decay rate `−Im σ` of the next distinct level.
/// Returns an infinite gap when all resonances share one level.
pub fn spectral_gap(rs: &ResonanceSet) -> Result<(Complex64, f64)> {
    let all = rs.all();
    let Some(&(_, sigma1)) = all.first() else {
        return Err(Error::data("empty resonance set"));
    };
    let gap = all
        .iter()
        .map(|(_, s)| s.im)
        .find(|im| *im < sigma1.im - 1e-9)
        .map(|im| -im)
        .unwrap_or(f64::INFINITY);
    Ok((sigma1, gap))
}

/// Applies the discrete normal operator on interior rows `1..n_t−1`; the
/// first and last rows of the result are zero. Same stencil as the forward
/// solver at zero coefficients.
pub fn apply_normal_operator(spec: &ModelOperatorSpec, u: &Field) -> Result<Field> {
    u.check_finite()?;
    let g = *u.grid();
    let (n_t, n_y) = (g.n_t, g.n_y);
    let uyy = dy_rows(&dy_rows(u.values(), n_t, n_y), n_t, n_y);
    let mut out = vec![ZERO; g.len()];
    let dt = g.dt;
    let c2 = spec.c0 * spec.c0;
    let z = spec.zeroth();
    for n in 1..n_t.saturating_sub(1) {
        for j in 0..n_y {
            let up = u.at(n + 1, j);
            let uc = u.at(n, j);
            let um = u.at(n - 1, j);
            out[n * n_y + j] = (up - 2.0 * uc + um) / (dt * dt)
                + spec.gamma * (up - um) / (2.0 * dt)
                + z * (up + um) * 0.5
                - c2 * uyy[n * n_y + j];
        }
    }
    Ok(Field::from_parts(g, out, u.support_floor() - dt))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionDecomposition {
    pub constant: Complex64,
    /// `u − constant·χ`.
    pub remainder: Field,
    pub alpha: f64,
    /// Weighted least-squares misfit of the tail fit of the circle average.
    pub fit_residual: f64,
    /// `e^{αt}`-weighted L² norm of the remainder over the fit window.
    pub tail_norm: f64,
    /// Slope of `log ‖remainder(t,·)‖_{L²}` over the window (windowed
    /// averages); `None` when the remainder vanishes there.
    pub tail_slope: Option<f64>,
    pub window: (f64, f64),
    /// Full exponential-sum model of the circle average.
    pub tail_fit: ExpFit,
}

impl ExpansionDecomposition {
    /// Free exponent closest to `target` and its amplitude referred to `t = 0`.
    pub fn term_near(&self, target: Complex64) -> Option<(Complex64, Complex64)> {
        let t_ref = self.tail_fit.t_ref;
        self.tail_fit
            .free
            .iter()
            .min_by(|a, b| (a.0 - target).norm().total_cmp(&(b.0 - target).norm()))
            .map(|(s, a)| (*s, a * (Complex64::i() * s * t_ref).exp()))
    }
}

/// Number of free exponentials tried by the tail fit.
pub const MAX_TAIL_TERMS: usize = 4;
const FIT_SAMPLES: usize = 400;

/// Splits `u` into `c·χ` plus a remainder, fitting the circle average of `u`
/// over `t_fit_window` by a constant plus decaying exponentials.
pub fn extract_expansion(u: &Field, alpha: f64, t_fit_window: (f64, f64)) -> Result<ExpansionDecomposition> {
    u.check_finite()?;
    let g = *u.grid();
    let (ta, tb) = t_fit_window;
    if !(alpha > 0.0) {
        return Err(Error::config(format!("expansion weight must be positive, got {alpha}")));
    }
    if !(ta > 0.0 && tb < g.t_max && tb > ta) {
        return Err(Error::config(format!(
            "fit window ({ta}, {tb}) must lie inside (0, {})",
            g.t_max
        )));
    }
    if tb - ta < 5.0 / alpha {
        return Err(Error::config(format!(
            "fit window length {} is shorter than 5/alpha = {}",
            tb - ta,
            5.0 / alpha
        )));
    }
    let first = g.first_row_at_or_above(ta);
    let last = ((tb / g.dt).floor() as usize).min(g.n_t - 1);
    let count = last + 1 - first;
    let stride = count.div_ceil(FIT_SAMPLES).max(1);
    let rows: Vec<usize> = (first..=last).step_by(stride).collect();
    let h = stride as f64 * g.dt;
    let t0 = g.t(first);
    let data: Vec<Complex64> = rows.iter().map(|&i| u.row_mean(i)).collect();
    let weights: Vec<f64> = rows.iter().map(|&i| (alpha * g.t(i)).exp()).collect();
    let tail_fit = fit_exponentials(t0, h, &data, &weights, &[ZERO], MAX_TAIL_TERMS);
    let constant = tail_fit.fixed[0].1;

    let mut values = u.values().to_vec();
    for i in 0..g.n_t {
        let chi = boundary_cutoff(g.t(i));
        if chi != 0.0 {
            for v in &mut values[i * g.n_y..(i + 1) * g.n_y] {
                *v -= constant * chi;
            }
        }
    }
    let floor = if constant == ZERO {
        u.support_floor()
    } else {
        u.support_floor().min(1.0)
    };
    let remainder = Field::from_parts(g, values, floor);

    let tail_norm = ((first..=last)
        .map(|i| (2.0 * alpha * g.t(i)).exp() * remainder.row_l2(i).powi(2))
        .sum::<f64>()
        * g.dt)
        .sqrt();
    let tail_slope = decay_slope(&remainder, ta, tb);
    Ok(ExpansionDecomposition {
        constant,
        remainder,
        alpha,
        fit_residual: tail_fit.misfit,
        tail_norm,
        tail_slope,
        window: (ta, tb),
        tail_fit,
    })
}

/// Slope of `log` of the windowed RMS of `‖u(t,·)‖_{L²}` against t over
/// `[ta, tb]`. Averaging over blocks of length `min(2π, (tb−ta)/8)` removes
/// oscillation at the circle-mode frequencies.
pub fn decay_slope(u: &Field, ta: f64, tb: f64) -> Option<f64> {
    let g = u.grid();
    let block_len = (std::f64::consts::TAU).min((tb - ta) / 8.0);
    let per_block = ((block_len / g.dt).round() as usize).max(1);
    let first = g.first_row_at_or_above(ta);
    let last = ((tb / g.dt).floor() as usize).min(g.n_t - 1);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut i = first;
    while i + per_block <= last + 1 {
        let ms: f64 = (i..i + per_block).map(|r| u.row_l2(r).powi(2)).sum::<f64>() / per_block as f64;
        if ms > 0.0 {
            xs.push(g.t(i) + 0.5 * (per_block - 1) as f64 * g.dt);
            ys.push(0.5 * ms.ln());
        }
        i += per_block;
    }
    crate::audit::fit_line(&xs, &ys).map(|f| f.slope)
}
