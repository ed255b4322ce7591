//! FFT plumbing for row-major `n_t × n_y` complex arrays.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Unnormalized 1-D transform in place.
pub fn fft1(data: &mut [Complex64], dir: Direction) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let plan = match dir {
            Direction::Forward => p.plan_fft_forward(data.len()),
            Direction::Inverse => p.plan_fft_inverse(data.len()),
        };
        plan.process(data);
    });
}

/// Transform every row (the y direction) in place, unnormalized.
pub fn fft_rows(data: &mut [Complex64], n_t: usize, n_y: usize, dir: Direction) {
    debug_assert_eq!(data.len(), n_t * n_y);
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let plan = match dir {
            Direction::Forward => p.plan_fft_forward(n_y),
            Direction::Inverse => p.plan_fft_inverse(n_y),
        };
        plan.process(data);
    });
}

/// Transform every column (the t direction) in place, unnormalized.
pub fn fft_cols(data: &mut [Complex64], n_t: usize, n_y: usize, dir: Direction) {
    debug_assert_eq!(data.len(), n_t * n_y);
    let mut col = vec![Complex64::new(0.0, 0.0); n_t];
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let plan = match dir {
            Direction::Forward => p.plan_fft_forward(n_t),
            Direction::Inverse => p.plan_fft_inverse(n_t),
        };
        for j in 0..n_y {
            for i in 0..n_t {
                col[i] = data[i * n_y + j];
            }
            plan.process(&mut col);
            for i in 0..n_t {
                data[i * n_y + j] = col[i];
            }
        }
    });
}

/// Unnormalized 2-D transform.
pub fn fft2(data: &mut [Complex64], n_t: usize, n_y: usize, dir: Direction) {
    fft_rows(data, n_t, n_y, dir);
    fft_cols(data, n_t, n_y, dir);
}

/// Signed integer index of FFT bin `j` out of `n`; the Nyquist bin maps to
/// `+n/2`.
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Spectral y-derivative of each row. The Nyquist mode is dropped, which
/// keeps the derivative of a real field real.
pub fn dy_rows(data: &[Complex64], n_t: usize, n_y: usize) -> Vec<Complex64> {
    let mut out = data.to_vec();
    fft_rows(&mut out, n_t, n_y, Direction::Forward);
    let scale = 1.0 / n_y as f64;
    for row in out.chunks_mut(n_y) {
        for (j, v) in row.iter_mut().enumerate() {
            let k = signed_index(j, n_y);
            if n_y % 2 == 0 && j == n_y / 2 {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v *= Complex64::new(0.0, k as f64) * scale;
            }
        }
    }
    fft_rows(&mut out, n_t, n_y, Direction::Inverse);
    out
}
