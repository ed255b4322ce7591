//! Smooth scalar profiles: the C^∞ step, compactly supported bumps, and the
//! boundary cutoff used by the expansion decomposition.

/// `e^{-1/x}` for `x > 0`, zero otherwise.
fn flat(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// C^∞ step: 0 for `x <= 0`, 1 for `x >= 1`, monotone in between.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = flat(x);
        a / (a + flat(1.0 - x))
    }
}

/// Compactly supported C^∞ bump on `[lo, hi]`, peak value 1 at the midpoint.
pub fn bump(t: f64, lo: f64, hi: f64) -> f64 {
    if t <= lo || t >= hi {
        return 0.0;
    }
    let s = (2.0 * t - lo - hi) / (hi - lo);
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / q).exp()
    }
}

/// Boundary cutoff χ in log coordinates: 0 for `t <= 1`, 1 for `t >= 2`.
pub fn boundary_cutoff(t: f64) -> f64 {
    smooth_step(t - 1.0)
}

/// Taper applied before the periodic transform in t: 1 up to
/// `t_max - width`, smoothly decreasing to 0 at `t_max`.
pub fn taper(t: f64, t_max: f64, width: f64) -> f64 {
    1.0 - smooth_step((t - (t_max - width)) / width)
}
