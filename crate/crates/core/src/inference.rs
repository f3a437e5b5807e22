//! Posterior summaries: pointwise credible bands, derivative curves,
//! fitted intensities and the AMSE fit metric.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{dot, intensity_from_paths, rescaled_times, CoefPaths, CountSeries, Design, ModelSpec};
use crate::sampler::FitResult;

/// Which curve to summarize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FunctionSelector {
    Mu,
    /// AR coefficient `a_i`, 1-based lag.
    Ar(usize),
    /// Feedback coefficient `b_k`, 1-based lag.
    Ch(usize),
    /// First derivative of `μ`.
    MuDerivative,
}

impl fmt::Display for FunctionSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSelector::Mu => write!(f, "mu"),
            FunctionSelector::Ar(i) => write!(f, "a_{i}"),
            FunctionSelector::Ch(k) => write!(f, "b_{k}"),
            FunctionSelector::MuDerivative => write!(f, "mu_deriv"),
        }
    }
}

impl FromStr for FunctionSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lag = |rest: &str| rest.parse::<usize>().ok().filter(|&v| v > 0);
        match s {
            "mu" => Ok(FunctionSelector::Mu),
            "mu_deriv" => Ok(FunctionSelector::MuDerivative),
            _ => {
                if let Some(i) = s.strip_prefix("a_").and_then(lag) {
                    Ok(FunctionSelector::Ar(i))
                } else if let Some(k) = s.strip_prefix("b_").and_then(lag) {
                    Ok(FunctionSelector::Ch(k))
                } else {
                    Err(Error::UnknownFunction(s.to_string()))
                }
            }
        }
    }
}

impl FunctionSelector {
    /// Every curve a model carries, derivative included.
    pub fn all_for(spec: &ModelSpec) -> Vec<FunctionSelector> {
        let mut v = vec![FunctionSelector::Mu];
        v.extend((1..=spec.p).map(FunctionSelector::Ar));
        v.extend((1..=spec.q).map(FunctionSelector::Ch));
        v.push(FunctionSelector::MuDerivative);
        v
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionSummary {
    pub which: FunctionSelector,
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl FunctionSummary {
    /// Fraction of grid points whose band contains `truth`.
    pub fn coverage(&self, truth: impl Fn(f64) -> f64) -> f64 {
        let inside = self
            .grid
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .filter(|(x, (lo, hi))| {
                let v = truth(**x);
                **lo <= v && v <= **hi
            })
            .count();
        inside as f64 / self.grid.len() as f64
    }

    pub fn median_band_width(&self) -> f64 {
        let w: Vec<f64> = self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).collect();
        quantile_sorted(&sorted(w), 0.5)
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    assert!(!v.is_empty());
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// The default summary grid `t/T`, `t = 1..T`.
pub fn default_grid(len: usize) -> Vec<f64> {
    rescaled_times(len)
}

/// Pointwise posterior mean and 2.5% / 97.5% quantiles of a curve.
pub fn summarize_function(fit: &FitResult, which: FunctionSelector, grid: &[f64]) -> Result<FunctionSummary> {
    if fit.is_empty() {
        return Err(Error::EmptyFit);
    }
    let spec = &fit.spec;
    match which {
        FunctionSelector::Ar(i) if i == 0 || i > spec.p => {
            return Err(Error::UnknownFunction(which.to_string()));
        }
        FunctionSelector::Ch(k) if k == 0 || k > spec.q => {
            return Err(Error::UnknownFunction(which.to_string()));
        }
        _ => {}
    }
    if let Some(x) = grid.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::OutOfDomain(*x));
    }

    // Basis rows on the grid, one matrix per family used.
    let (basis, k) = match which {
        FunctionSelector::Mu | FunctionSelector::MuDerivative => (&spec.mu_basis, spec.mu_basis.len()),
        FunctionSelector::Ar(_) => (&spec.ar_basis, spec.ar_basis.len()),
        FunctionSelector::Ch(_) => (&spec.ch_basis, spec.ch_basis.len()),
    };
    let rows: Vec<f64> = if which == FunctionSelector::MuDerivative {
        let mut m = Vec::with_capacity(grid.len() * k);
        for &x in grid {
            m.extend(basis.eval_derivative(x, 1)?);
        }
        m
    } else {
        basis.design_matrix(grid)?
    };

    let n = fit.len();
    // values[g * n + d]
    let mut values = vec![0.0; grid.len() * n];
    for (d, state) in fit.states().enumerate() {
        let coefs: Vec<f64> = match which {
            FunctionSelector::Mu | FunctionSelector::MuDerivative => state.beta().iter().map(|b| b.exp()).collect(),
            FunctionSelector::Ar(i) => {
                let m = state.weights()[i - 1];
                state.theta_row(i).iter().map(|t| t * m).collect()
            }
            FunctionSelector::Ch(kk) => {
                let m = state.weights()[spec.p + kk - 1];
                state.eta_row(kk).iter().map(|t| t * m).collect()
            }
        };
        for (g, row) in rows.chunks(k).enumerate() {
            values[g * n + d] = dot(row, &coefs);
        }
    }

    let mut mean = Vec::with_capacity(grid.len());
    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    for col in values.chunks(n) {
        mean.push(col.iter().sum::<f64>() / n as f64);
        let s = sorted(col.to_vec());
        lower.push(quantile_sorted(&s, 0.025));
        upper.push(quantile_sorted(&s, 0.975));
    }
    Ok(FunctionSummary {
        which,
        grid: grid.to_vec(),
        mean,
        lower,
        upper,
    })
}

/// Summary of `dμ/dx` computed from B-spline derivatives.
pub fn summarize_derivative(fit: &FitResult, grid: &[f64]) -> Result<FunctionSummary> {
    summarize_function(fit, FunctionSelector::MuDerivative, grid)
}

/// Posterior mean of the per-draw intensity paths.
pub fn fitted_intensity(fit: &FitResult, series: &CountSeries) -> Result<Vec<f64>> {
    if fit.is_empty() {
        return Err(Error::EmptyFit);
    }
    let design = Design::new(&fit.spec, series.len());
    let x = series.as_f64();
    let mut acc = vec![0.0; series.len()];
    for state in fit.states() {
        let paths = CoefPaths::new(state, &design);
        let lam = intensity_from_paths(&paths, &x, state.lambda0().unwrap_or(0.0));
        for (a, l) in acc.iter_mut().zip(lam) {
            *a += l;
        }
    }
    let n = fit.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// `(1/T) Σ_t (X_t − λ̂_t)²`.
pub fn amse(series: &CountSeries, lambda_hat: &[f64]) -> Result<f64> {
    if series.len() != lambda_hat.len() {
        return Err(Error::LengthMismatch {
            left: series.len(),
            right: lambda_hat.len(),
        });
    }
    let sse: f64 = series
        .values()
        .iter()
        .zip(lambda_hat)
        .map(|(&x, l)| (x as f64 - l).powi(2))
        .sum();
    Ok(sse / series.len() as f64)
}
