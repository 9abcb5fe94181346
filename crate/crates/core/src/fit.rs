//! Ordinary least-squares line fits for log-log slope estimation.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (zero for an exact two-point fit).
    pub slope_stderr: f64,
    pub points: usize,
}

/// Least-squares fit of `ys` against `xs`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::Fit("x and y lengths differ".into()));
    }
    if n < 2 {
        return Err(Error::Fit(format!("need at least 2 points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all x values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        points: n,
    })
}

/// Slope of `log y` against `log x`.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly)
}
