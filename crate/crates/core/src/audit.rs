//! Measured-constant reports shared by the smoothing, product and solution
//! operator audits.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// One measured ratio `LHS / RHS` with the RHS constant set to 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioEntry {
    /// What was varied, e.g. `theta`, `amplitude`, `high_norm`.
    pub label: String,
    pub param: f64,
    pub sample: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TameConstantReport {
    pub estimate_id: String,
    pub ratios: Vec<RatioEntry>,
    pub max_ratio: f64,
    pub slope: Option<f64>,
    /// Two-sided 95% interval for the slope.
    pub slope_ci: Option<(f64, f64)>,
}

impl TameConstantReport {
    pub fn new(estimate_id: impl Into<String>, ratios: Vec<RatioEntry>) -> Self {
        let max_ratio = ratios.iter().map(|r| r.ratio).fold(0.0, f64::max);
        TameConstantReport {
            estimate_id: estimate_id.into(),
            ratios,
            max_ratio,
            slope: None,
            slope_ci: None,
        }
    }

    pub fn with_slope(mut self, fit: Option<LineFit>) -> Self {
        if let Some(fit) = fit {
            self.slope = Some(fit.slope);
            self.slope_ci = Some((fit.slope - 1.96 * fit.slope_se, fit.slope + 1.96 * fit.slope_se));
        }
        self
    }

    /// Largest ratio among entries with the given parameter value.
    pub fn max_at(&self, param: f64) -> f64 {
        self.ratios
            .iter()
            .filter(|r| r.param == param)
            .map(|r| r.ratio)
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W, header: bool) -> Result<()> {
        if header {
            writeln!(out, "estimate_id,label,param,sample_id,ratio")?;
        }
        for r in &self.ratios {
            writeln!(
                out,
                "{},{},{:.16e},{},{:.16e}",
                self.estimate_id, r.label, r.param, r.sample, r.ratio
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x`. Needs two distinct x.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if n > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        slope,
        intercept,
        slope_se,
    })
}

/// Log-log fit over strictly positive pairs.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    fit_line(&lx, &ly)
}

/// Ratio with the convention `0/0 = 0`.
pub fn safe_ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 2.0).abs() < 1e-14);
        assert!(f.slope_se < 1e-12);
    }

    #[test]
    fn degenerate_x() {
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_none());
        assert!(fit_line(&[1.0], &[0.0]).is_none());
    }

    #[test]
    fn max_ratio_of_empty_is_zero() {
        let r = TameConstantReport::new("x", vec![]);
        assert_eq!(r.max_ratio, 0.0);
    }
}
