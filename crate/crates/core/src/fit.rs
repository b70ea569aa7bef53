//! Decay-rate fitting for amplitude time series.

use serde::{Deserialize, Serialize};

/// A fitted decay law for one observable.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayFit {
    pub label: String,
    /// Independent coordinate of the family (|xi|, s, ...), if any.
    pub parameter: Option<f64>,
    /// Samples (t, amplitude) the fit was computed from.
    pub samples: Vec<(f64, f64)>,
    /// Fitted exponent: algebraic fits report sigma in (1+t)^(-sigma),
    /// exponential fits report kappa in exp(-kappa t).
    pub fitted_rate: f64,
    pub prefactor: f64,
    /// Root-mean-square residual of the regression in log space.
    pub residual: f64,
    /// Expected exponent, when a prediction exists.
    pub expected_rate: Option<f64>,
}

impl DecayFit {
    pub fn matches_expected(&self, tol: f64) -> bool {
        match self.expected_rate {
            Some(e) => (self.fitted_rate - e).abs() <= tol,
            None => true,
        }
    }
}

fn linear_regression(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = 0.0;
    for (a, b) in x.iter().zip(y) {
        let r = b - (intercept + slope * a);
        ss += r * r;
    }
    (slope, intercept, (ss / n).sqrt())
}

/// Fit `amplitude ~ prefactor * (1+t)^(-sigma)` on samples within the window.
pub fn fit_algebraic(
    label: impl Into<String>,
    samples: &[(f64, f64)],
    window: (f64, f64),
    expected: Option<f64>,
) -> DecayFit {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, a)| *t >= window.0 && *t <= window.1 && *a > 0.0)
        .cloned()
        .collect();
    let x: Vec<f64> = pts.iter().map(|(t, _)| (1.0 + t).ln()).collect();
    let y: Vec<f64> = pts.iter().map(|(_, a)| a.ln()).collect();
    let (slope, intercept, residual) = linear_regression(&x, &y);
    DecayFit {
        label: label.into(),
        parameter: None,
        samples: pts,
        fitted_rate: -slope,
        prefactor: intercept.exp(),
        residual,
        expected_rate: expected,
    }
}

/// Fit `amplitude ~ prefactor * exp(-kappa t)` on samples within the window.
pub fn fit_exponential(
    label: impl Into<String>,
    samples: &[(f64, f64)],
    window: (f64, f64),
    expected: Option<f64>,
) -> DecayFit {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, a)| *t >= window.0 && *t <= window.1 && *a > 0.0)
        .cloned()
        .collect();
    let x: Vec<f64> = pts.iter().map(|(t, _)| *t).collect();
    let y: Vec<f64> = pts.iter().map(|(_, a)| a.ln()).collect();
    let (slope, intercept, residual) = linear_regression(&x, &y);
    DecayFit {
        label: label.into(),
        parameter: None,
        samples: pts,
        fitted_rate: -slope,
        prefactor: intercept.exp(),
        residual,
        expected_rate: expected,
    }
}

/// Log-log slope of amplitude against a parameter (e.g. |xi|) at fixed time.
pub fn loglog_slope(pairs: &[(f64, f64)]) -> f64 {
    let x: Vec<f64> = pairs.iter().map(|(p, _)| p.ln()).collect();
    let y: Vec<f64> = pairs.iter().map(|(_, a)| a.ln()).collect();
    linear_regression(&x, &y).0
}

/// CSV rows for a list of fits (label, parameter, fitted, expected, residual).
pub fn fits_to_csv(fits: &[DecayFit]) -> String {
    let mut out = String::from("label,parameter,fitted_rate,expected_rate,residual\n");
    for f in fits {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            f.label,
            f.parameter.map(|p| p.to_string()).unwrap_or_default(),
            f.fitted_rate,
            f.expected_rate.map(|e| e.to_string()).unwrap_or_default(),
            f.residual
        ));
    }
    out
}
