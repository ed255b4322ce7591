//! The discretized cylinder `[0, t_max) × S^1` in log coordinates `t = -log x`,
//! complex fields sampled on it, and weighted b-Sobolev norms.
//!
//! Supports are one-sided: a field carries a `support_floor` below which every
//! sample is exactly zero. Smoothing may push the floor down (towards the
//! boundary at `t = 0`), never up.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::taper;
use crate::spectral::{fft2, signed_index, Direction};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest exponent accepted by `weight_apply` before reporting overflow.
const MAX_WEIGHT_EXPONENT: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n_t: usize,
    pub n_y: usize,
    pub t_max: f64,
    pub dt: f64,
    pub dy: f64,
}

pub fn make_grid(n_t: usize, n_y: usize, t_max: f64) -> Result<Grid> {
    Grid::new(n_t, n_y, t_max)
}

impl Grid {
    pub fn new(n_t: usize, n_y: usize, t_max: f64) -> Result<Self> {
        if !n_t.is_power_of_two() || !n_y.is_power_of_two() {
            return Err(Error::config(format!(
                "grid sizes must be powers of two, got n_t={n_t}, n_y={n_y}"
            )));
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::config(format!("t_max must be positive, got {t_max}")));
        }
        Ok(Grid {
            n_t,
            n_y,
            t_max,
            dt: t_max / n_t as f64,
            dy: TAU / n_y as f64,
        })
    }

    pub fn len(&self) -> usize {
        self.n_t * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy
    }

    /// Dual variable in t for FFT bin `i`.
    pub fn tau(&self, i: usize) -> f64 {
        TAU * signed_index(i, self.n_t) as f64 / self.t_max
    }

    /// Integer Fourier mode on the circle for FFT bin `j`.
    pub fn k(&self, j: usize) -> i64 {
        signed_index(j, self.n_y)
    }

    /// First row index with `t_i >= floor`.
    pub fn first_row_at_or_above(&self, floor: f64) -> usize {
        if floor <= 0.0 {
            return 0;
        }
        let i = (floor / self.dt).ceil() as usize;
        // guard against rounding: t(i-1) may still be >= floor
        let mut i = i.min(self.n_t);
        while i > 0 && self.t(i - 1) >= floor {
            i -= 1;
        }
        while i < self.n_t && self.t(i) < floor {
            i += 1;
        }
        i
    }

    fn taper_width(&self) -> f64 {
        (self.t_max / 4.0).min(2.0)
    }

    fn same_as(&self, other: &Grid) -> bool {
        self.n_t == other.n_t && self.n_y == other.n_y && self.t_max == other.t_max
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevIndex {
    pub s: f64,
    pub alpha: f64,
}

impl SobolevIndex {
    pub fn new(s: f64, alpha: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() || !alpha.is_finite() {
            return Err(Error::config(format!(
                "invalid Sobolev index (s={s}, alpha={alpha})"
            )));
        }
        Ok(SobolevIndex { s, alpha })
    }

    pub fn unweighted(s: f64) -> Self {
        SobolevIndex { s, alpha: 0.0 }
    }
}

/// How a field is made periodic in t before transforming.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Window {
    /// Smooth taper to zero over the last `min(2, t_max/4)` of the cylinder.
    #[default]
    Tapered,
    /// No taper; the field is treated as periodic in t.
    Periodic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
    support_floor: f64,
}

impl Field {
    /// Builds a field, zeroing every row below `support_floor`.
    pub fn from_fn(grid: Grid, support_floor: f64, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let start = grid.first_row_at_or_above(support_floor);
        let mut values = vec![ZERO; grid.len()];
        for i in start..grid.n_t {
            let t = grid.t(i);
            for j in 0..grid.n_y {
                values[i * grid.n_y + j] = f(t, grid.y(j));
            }
        }
        Field {
            grid,
            values,
            support_floor,
        }
    }

    pub fn from_real_fn(grid: Grid, support_floor: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(grid, support_floor, |t, y| Complex64::new(f(t, y), 0.0))
    }

    pub fn zeros(grid: Grid) -> Self {
        Field {
            grid,
            values: vec![ZERO; grid.len()],
            support_floor: grid.t_max,
        }
    }

    /// Validating constructor: values must be finite and vanish below the floor.
    pub fn new(grid: Grid, values: Vec<Complex64>, support_floor: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::data(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::data(format!(
                "non-finite sample at row {}, column {}",
                idx / grid.n_y,
                idx % grid.n_y
            )));
        }
        let start = grid.first_row_at_or_above(support_floor);
        if let Some(idx) = values[..start * grid.n_y].iter().position(|v| *v != ZERO) {
            return Err(Error::data(format!(
                "nonzero sample at row {} below support floor {support_floor}",
                idx / grid.n_y
            )));
        }
        Ok(Field {
            grid,
            values,
            support_floor,
        })
    }

    /// Wraps values without validation, zeroing rows below the floor.
    pub(crate) fn from_parts(grid: Grid, mut values: Vec<Complex64>, support_floor: f64) -> Self {
        let start = grid.first_row_at_or_above(support_floor);
        values[..start * grid.n_y].fill(ZERO);
        Field {
            grid,
            values,
            support_floor,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn support_floor(&self) -> f64 {
        self.support_floor
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.values[i * self.grid.n_y..(i + 1) * self.grid.n_y]
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.n_y + j]
    }

    /// Lowers the declared floor. Raising it is refused unless the field
    /// already vanishes there.
    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        if floor > self.support_floor {
            let start = self.grid.first_row_at_or_above(floor);
            if self.values[..start * self.grid.n_y].iter().any(|v| *v != ZERO) {
                return Err(Error::data(format!(
                    "cannot raise support floor to {floor}: field is nonzero below it"
                )));
            }
        }
        self.support_floor = floor;
        Ok(self)
    }

    /// t-coordinate of the first row holding a nonzero sample, if any.
    pub fn measured_floor(&self) -> Option<f64> {
        self.values
            .chunks(self.grid.n_y)
            .position(|row| row.iter().any(|v| *v != ZERO))
            .map(|i| self.grid.t(i))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == ZERO)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.im.abs() <= tol)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field::from_parts(
            self.grid,
            self.values.iter().map(|v| f(*v)).collect(),
            self.support_floor,
        )
    }

    pub fn scale(&self, c: Complex64) -> Field {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip(other, |a, b| a - b)
    }

    /// Pointwise combination; the result floor is the lower of the two.
    pub fn zip(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Field> {
        self.check_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(Field::from_parts(
            self.grid,
            values,
            self.support_floor.min(other.support_floor),
        ))
    }

    pub fn check_grid(&self, other: &Field) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::config(format!(
                "grid mismatch: {}x{} (t_max={}) vs {}x{} (t_max={})",
                self.grid.n_t,
                self.grid.n_y,
                self.grid.t_max,
                other.grid.n_t,
                other.grid.n_y,
                other.grid.t_max
            )));
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<()> {
        match self
            .values
            .iter()
            .position(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            Some(idx) => Err(Error::data(format!(
                "non-finite sample at row {}, column {}",
                idx / self.grid.n_y,
                idx % self.grid.n_y
            ))),
            None => Ok(()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Discrete L² norm with quadrature weights `dt·dy`.
    pub fn l2(&self) -> f64 {
        let sum: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (sum * self.grid.dt * self.grid.dy).sqrt()
    }

    /// L² norm over the circle of row `i`.
    pub fn row_l2(&self, i: usize) -> f64 {
        let sum: f64 = self.row(i).iter().map(|v| v.norm_sqr()).sum();
        (sum * self.grid.dy).sqrt()
    }

    /// Average over the circle of row `i` (the k = 0 mode).
    pub fn row_mean(&self, i: usize) -> Complex64 {
        self.row(i).iter().sum::<Complex64>() / self.grid.n_y as f64
    }

    pub fn real_part(&self) -> Field {
        self.map(|v| Complex64::new(v.re, 0.0))
    }
}

/// Normalized 2-D spectrum of `window · e^{αt} · u`, scaled so that the sum of
/// squared magnitudes is the quadrature L² norm squared.
pub fn weighted_spectrum(u: &Field, alpha: f64, window: Window) -> Result<Vec<Complex64>> {
    u.check_finite()?;
    let g = u.grid;
    let mut data = u.values.clone();
    for i in 0..g.n_t {
        let t = g.t(i);
        let exponent = alpha * t;
        if exponent > MAX_WEIGHT_EXPONENT {
            return Err(Error::data(format!(
                "weight e^(alpha t) overflows at t={t} (alpha={alpha})"
            )));
        }
        let mut w = exponent.exp();
        if window == Window::Tapered {
            w *= taper(t, g.t_max, g.taper_width());
        }
        for v in &mut data[i * g.n_y..(i + 1) * g.n_y] {
            *v *= w;
        }
    }
    fft2(&mut data, g.n_t, g.n_y, Direction::Forward);
    let scale = (g.dt * g.dy / g.len() as f64).sqrt();
    for v in &mut data {
        *v *= scale;
    }
    Ok(data)
}

/// `(1 + τ² + k²)` for every bin of the grid, row-major.
pub fn japanese_squared(g: &Grid) -> Vec<f64> {
    let mut out = Vec::with_capacity(g.len());
    for i in 0..g.n_t {
        let tau = g.tau(i);
        for j in 0..g.n_y {
            let k = g.k(j) as f64;
            out.push(1.0 + tau * tau + k * k);
        }
    }
    out
}

/// Norm of an already computed spectrum at order `s`.
pub fn spectrum_norm(spec: &[Complex64], weights: &[f64], s: f64) -> f64 {
    spec.iter()
        .zip(weights)
        .map(|(v, w)| w.powf(s) * v.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Weighted b-Sobolev norm `‖u‖_{H_b^{s,α}}` with the default tapered window.
pub fn bsobolev_norm(u: &Field, idx: SobolevIndex) -> Result<f64> {
    bsobolev_norm_with(u, idx, Window::Tapered)
}

pub fn bsobolev_norm_with(u: &Field, idx: SobolevIndex, window: Window) -> Result<f64> {
    let spec = weighted_spectrum(u, idx.alpha, window)?;
    Ok(spectrum_norm(&spec, &japanese_squared(&u.grid), idx.s))
}

/// Norms at several orders sharing one transform.
pub fn bsobolev_norms(u: &Field, orders: &[f64], alpha: f64, window: Window) -> Result<Vec<f64>> {
    let spec = weighted_spectrum(u, alpha, window)?;
    let weights = japanese_squared(&u.grid);
    Ok(orders
        .iter()
        .map(|s| spectrum_norm(&spec, &weights, *s))
        .collect())
}

/// Pointwise multiplication by `e^{αt}`.
pub fn weight_apply(u: &Field, alpha: f64) -> Result<Field> {
    u.check_finite()?;
    let g = u.grid;
    let top = alpha * g.t(g.n_t - 1);
    if top > MAX_WEIGHT_EXPONENT {
        return Err(Error::data(format!(
            "weight e^(alpha t) overflows: alpha*t reaches {top} (alpha={alpha}, t_max={})",
            g.t_max
        )));
    }
    let mut values = u.values.clone();
    for i in 0..g.n_t {
        let w = (alpha * g.t(i)).exp();
        for v in &mut values[i * g.n_y..(i + 1) * g.n_y] {
            *v *= w;
        }
    }
    Ok(Field::from_parts(g, values, u.support_floor))
}

/// Forward then inverse 2-D transform.
pub fn fourier_roundtrip(u: &Field) -> Result<Field> {
    u.check_finite()?;
    let g = u.grid;
    let mut data = u.values.clone();
    fft2(&mut data, g.n_t, g.n_y, Direction::Forward);
    fft2(&mut data, g.n_t, g.n_y, Direction::Inverse);
    let scale = 1.0 / g.len() as f64;
    for v in &mut data {
        *v *= scale;
    }
    Ok(Field::from_parts(g, data, u.support_floor))
}

/// Spectral interpolation to a grid with `factor` times as many points in y.
/// The Nyquist coefficient is split evenly between `±n_y/2`.
pub fn refine_y(u: &Field, factor: usize) -> Result<Field> {
    u.check_finite()?;
    let g = u.grid;
    let fine = Grid::new(g.n_t, g.n_y * factor, g.t_max)?;
    let n = g.n_y;
    let nf = fine.n_y;
    let mut spec = u.values.clone();
    crate::spectral::fft_rows(&mut spec, g.n_t, n, Direction::Forward);
    let mut out = vec![ZERO; fine.len()];
    for i in 0..g.n_t {
        let src = &spec[i * n..(i + 1) * n];
        let dst = &mut out[i * nf..(i + 1) * nf];
        for (j, c) in src.iter().enumerate() {
            let c = c / n as f64;
            if n > 1 && factor > 1 && 2 * j == n {
                dst[j] += 0.5 * c;
                dst[nf - j] += 0.5 * c;
            } else {
                let k = signed_index(j, n);
                let jf = if k >= 0 { k as usize } else { (nf as i64 + k) as usize };
                dst[jf] += c;
            }
        }
    }
    crate::spectral::fft_rows(&mut out, g.n_t, nf, Direction::Inverse);
    Ok(Field::from_parts(fine, out, u.support_floor))
}

#[derive(Debug, Serialize, Deserialize)]
struct FieldHeader {
    n_t: usize,
    n_y: usize,
    t_max: f64,
    support_floor: f64,
    value_kind: String,
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".toml");
    p.into()
}

/// Writes interleaved little-endian `(re, im)` f64 pairs plus a TOML sidecar
/// at `<path>.toml`.
pub fn write_field(u: &Field, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(u.values.len() * 16);
    for v in &u.values {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    fs::write(path, bytes)?;
    let header = FieldHeader {
        n_t: u.grid.n_t,
        n_y: u.grid.n_y,
        t_max: u.grid.t_max,
        support_floor: u.support_floor,
        value_kind: "complex64-interleaved-le".into(),
    };
    let text = toml::to_string(&header).map_err(|e| Error::data(e.to_string()))?;
    fs::write(sidecar_path(path), text)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<Field> {
    let text = fs::read_to_string(sidecar_path(path))?;
    let header: FieldHeader =
        toml::from_str(&text).map_err(|e| Error::data(format!("bad field header: {e}")))?;
    if header.value_kind != "complex64-interleaved-le" {
        return Err(Error::data(format!("unknown value kind {}", header.value_kind)));
    }
    let grid = Grid::new(header.n_t, header.n_y, header.t_max)?;
    let bytes = fs::read(path)?;
    if bytes.len() != grid.len() * 16 {
        return Err(Error::data(format!(
            "field file holds {} bytes, header implies {}",
            bytes.len(),
            grid.len() * 16
        )));
    }
    let values = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    Field::new(grid, values, header.support_floor)
}
