//! Least-squares line fits used for decay exponents and scaling exponents.

use crate::error::{Error, Result};

/// Ordinary least-squares line with the usual diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_se: f64,
    pub points: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { expected: xs.len(), found: ys.len() });
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::TooFewFitPoints { points: n });
    }
    let nf = n as f64;
    let x_bar = xs.iter().sum::<f64>() / nf;
    let y_bar = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - x_bar) * (y - y_bar)).sum();
    let syy: f64 = ys.iter().map(|y| (y - y_bar).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Numerical { what: "degenerate fit: all abscissae equal".into() });
    }
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let slope_se = (ss_res / (nf - 2.0) / sxx).sqrt();
    Ok(LineFit { slope, intercept, r_squared, slope_se, points: n })
}

/// Fits `y = c·x^slope` by regressing ln y on ln x. Pairs with a
/// non-positive coordinate carry no information in log scale and are
/// dropped; at least 3 must survive.
pub fn power_law_fit(points: &[(f64, f64)]) -> Result<LineFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    linear_fit(&xs, &ys)
}
