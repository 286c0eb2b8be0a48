//! Least-squares fits used to classify depth series as power laws or
//! exponentials.

use crate::error::{Error, Result};

/// Result of a two-parameter fit on a transformed axis pair.
#[derive(Debug, Clone, Copy)]
pub struct FitResult {
    /// Power-law exponent, or exponential rate per layer.
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination on the transformed axes.
    pub r_squared: f64,
    /// Root-mean-square residual on the transformed axes.
    pub residual_norm: f64,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> FitResult {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let r = y - (intercept + slope * x);
        ss_res += r * r;
    }
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    FitResult {
        slope,
        intercept,
        r_squared,
        residual_norm: (ss_res / n).sqrt(),
    }
}

fn prepare(series: &[(f64, f64)], ell_start: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|&(l, _)| l >= ell_start).collect();
    if pts.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "fit needs at least 3 points with ell >= {ell_start}, got {}",
            pts.len()
        )));
    }
    if pts.iter().any(|&(_, v)| v == 0.0 || !v.is_finite()) {
        return Err(Error::InvalidInput("fit values must be nonzero and finite".into()));
    }
    Ok(pts.into_iter().unzip())
}

/// Least-squares line on `(log ell, log |value|)`.
pub fn fit_power_law(series: &[(f64, f64)], ell_start: f64) -> Result<FitResult> {
    let (ls, vs) = prepare(series, ell_start)?;
    if ls.iter().any(|&l| l <= 0.0) {
        return Err(Error::InvalidInput("power-law fit needs positive ell".into()));
    }
    let xs: Vec<f64> = ls.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = vs.iter().map(|v| v.abs().ln()).collect();
    Ok(least_squares(&xs, &ys))
}

/// Least-squares line on `(ell, log |value|)`.
pub fn fit_exponential(series: &[(f64, f64)], ell_start: f64) -> Result<FitResult> {
    let (ls, vs) = prepare(series, ell_start)?;
    let ys: Vec<f64> = vs.iter().map(|v| v.abs().ln()).collect();
    Ok(least_squares(&ls, &ys))
}

/// Which of the two models explains the series better (lower RMS residual).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesModel {
    PowerLaw,
    Exponential,
}

pub fn select_model(series: &[(f64, f64)], ell_start: f64) -> Result<(SeriesModel, FitResult, FitResult)> {
    let p = fit_power_law(series, ell_start)?;
    let e = fit_exponential(series, ell_start)?;
    let winner = if p.residual_norm <= e.residual_norm {
        SeriesModel::PowerLaw
    } else {
        SeriesModel::Exponential
    };
    Ok((winner, p, e))
}
