//! Roots of complex polynomials from companion-matrix eigenvalues, refined by
//! Newton's method on the original polynomial.

use nalgebra::DMatrix;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Horner evaluation of `Σ coeffs[n] z^n` and its derivative.
pub fn eval_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

pub fn eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    eval_with_derivative(coeffs, z).0
}

fn trim(coeffs: &[Complex64]) -> &[Complex64] {
    let mut n = coeffs.len();
    while n > 0 && coeffs[n - 1] == ZERO {
        n -= 1;
    }
    &coeffs[..n]
}

/// All roots of `Σ coeffs[n] z^n`, coefficients in ascending order.
///
/// Exactly vanishing low-order coefficients are deflated, so a root at zero
/// is returned as exactly zero. Returns an empty list for constants.
pub fn roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let coeffs = trim(coeffs);
    if coeffs.len() < 2 {
        return Vec::new();
    }
    let zeros = coeffs.iter().take_while(|c| **c == ZERO).count();
    let reduced = &coeffs[zeros..];
    let mut out = vec![ZERO; zeros];
    let deg = reduced.len() - 1;
    if deg == 0 {
        return out;
    }
    let lead = reduced[deg];
    let mut companion = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -reduced[i] / lead;
    }
    let eig = companion
        .schur()
        .eigenvalues()
        .expect("complex Schur form is triangular");
    for z in eig.iter() {
        out.push(polish(reduced, *z));
    }
    out
}

/// Newton refinement; keeps the starting point if an iterate fails to
/// improve the residual.
pub fn polish(coeffs: &[Complex64], z0: Complex64) -> Complex64 {
    let mut z = z0;
    let mut best = eval(coeffs, z).norm();
    for _ in 0..50 {
        let (p, dp) = eval_with_derivative(coeffs, z);
        if p == ZERO || dp == ZERO {
            break;
        }
        let next = z - p / dp;
        let r = eval(coeffs, next).norm();
        if !(r < best) {
            break;
        }
        best = r;
        z = next;
    }
    z
}
