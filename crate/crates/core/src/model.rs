//! Time-varying Poisson autoregression (AR) and INGARCH models.
//!
//! The conditional intensity at time `t` is
//!
//! ```text
//! λ_t = μ(t/T) + Σ_i a_i(t/T) X_{t-i} + Σ_k b_k(t/T) λ_{t-k}
//! ```
//!
//! with the feedback sum present only for INGARCH. The coefficient functions
//! are B-spline expansions whose coefficients are constrained so that every
//! parameter value yields `μ > 0`, `0 ≤ a_i, b_k` and `sup_x Σ a_i + Σ b_k < 1`:
//!
//! * `μ(x)   = Σ_j exp(β_j) B_j(x)`
//! * `a_i(x) = M_i Σ_j θ_ij B_j(x)`, `θ_ij ∈ [0, 1]`
//! * `b_k(x) = M_{p+k} Σ_j η_kj B_j(x)`, `η_kj ∈ [0, 1]`
//! * `M = softmax(δ_0, …, δ_{p+q})` with `M_0` an unused slack weight.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::SplineBasis;

/// An observed count series `X_1..X_T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSeries {
    values: Vec<u64>,
    labels: Option<Vec<String>>,
}

impl CountSeries {
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSpec("count series must be non-empty".into()));
        }
        Ok(CountSeries {
            values,
            labels: None,
        })
    }

    pub fn with_labels(values: Vec<u64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: labels.len(),
            });
        }
        let mut s = Self::new(values)?;
        s.labels = Some(labels);
        Ok(s)
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().map(|&v| v as f64).sum::<f64>() / self.len() as f64
    }

    pub(crate) fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ar,
    Ingarch,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Ar => f.write_str("ar"),
            ModelKind::Ingarch => f.write_str("ingarch"),
        }
    }
}

/// Prior hyperparameters: `δ_l ~ N(0, c1)`, `β_j ~ N(0, c2)`,
/// `λ_0 ~ InvGamma(d1, d1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub c1: f64,
    pub c2: f64,
    pub d1: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            c1: 100.0,
            c2: 100.0,
            d1: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub p: usize,
    pub q: usize,
    pub mu_basis: SplineBasis,
    pub ar_basis: SplineBasis,
    pub ch_basis: SplineBasis,
    pub hyper: Hyperparameters,
}

impl ModelSpec {
    /// Builds a validated spec using one basis for all coefficient families.
    pub fn new(
        kind: ModelKind,
        p: usize,
        q: usize,
        basis: SplineBasis,
        hyper: Hyperparameters,
    ) -> Result<Self> {
        let spec = ModelSpec {
            kind,
            p,
            q,
            mu_basis: basis.clone(),
            ar_basis: basis.clone(),
            ch_basis: basis,
            hyper,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// TVBARC(p) with the default cubic basis and default priors.
    pub fn ar(p: usize) -> Self {
        Self::new(ModelKind::Ar, p, 0, SplineBasis::default(), Hyperparameters::default())
            .expect("valid default AR spec")
    }

    /// TVBINGARCH(p, q) with the default cubic basis and default priors.
    pub fn ingarch(p: usize, q: usize) -> Self {
        Self::new(ModelKind::Ingarch, p, q, SplineBasis::default(), Hyperparameters::default())
            .expect("valid default INGARCH spec")
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == ModelKind::Ar && self.q != 0 {
            return Err(Error::InvalidSpec("AR model must have q = 0".into()));
        }
        let h = &self.hyper;
        for (name, v) in [("c1", h.c1), ("c2", h.c2), ("d1", h.d1)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidSpec(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        Layout {
            k_mu: self.mu_basis.len(),
            k_ar: self.ar_basis.len(),
            k_ch: self.ch_basis.len(),
            p: self.p,
            q: self.q,
            has_lambda0: self.kind == ModelKind::Ingarch,
        }
    }

    /// Number of weights `M_1..M_{p+q}`.
    pub fn n_weights(&self) -> usize {
        self.p + self.q
    }
}

/// Positions of each parameter family inside the flat coordinate vector:
/// `β | θ (p × K₂, row-major) | η (q × K₃) | δ (p+q+1) | λ₀ (INGARCH only)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub k_mu: usize,
    pub k_ar: usize,
    pub k_ch: usize,
    pub p: usize,
    pub q: usize,
    pub has_lambda0: bool,
}

impl Layout {
    pub fn beta(&self) -> Range<usize> {
        0..self.k_mu
    }

    pub fn theta(&self) -> Range<usize> {
        let s = self.k_mu;
        s..s + self.p * self.k_ar
    }

    pub fn eta(&self) -> Range<usize> {
        let s = self.theta().end;
        s..s + self.q * self.k_ch
    }

    pub fn delta(&self) -> Range<usize> {
        let s = self.eta().end;
        s..s + self.p + self.q + 1
    }

    pub fn lambda0(&self) -> Option<usize> {
        self.has_lambda0.then(|| self.delta().end)
    }

    pub fn dim(&self) -> usize {
        self.delta().end + usize::from(self.has_lambda0)
    }

    /// Human-readable coordinate names, used as CSV headers.
    pub fn names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim());
        names.extend((1..=self.k_mu).map(|j| format!("beta_{j}")));
        for i in 1..=self.p {
            names.extend((1..=self.k_ar).map(|j| format!("theta_{i}_{j}")));
        }
        for k in 1..=self.q {
            names.extend((1..=self.k_ch).map(|j| format!("eta_{k}_{j}")));
        }
        names.extend((0..=self.p + self.q).map(|l| format!("delta_{l}")));
        if self.has_lambda0 {
            names.push("lambda0".into());
        }
        names
    }
}

/// Sampler coordinates for one posterior draw, stored flat in [`Layout`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamState {
    layout: Layout,
    values: Vec<f64>,
}

impl ParamState {
    pub fn from_flat(layout: Layout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.dim() {
            return Err(Error::InvalidState(format!(
                "expected {} coordinates, got {}",
                layout.dim(),
                values.len()
            )));
        }
        let s = ParamState { layout, values };
        s.validate()?;
        Ok(s)
    }

    /// Builds a state from its parts; `theta` and `eta` are one row per lag.
    pub fn new(
        spec: &ModelSpec,
        beta: Vec<f64>,
        theta: Vec<Vec<f64>>,
        eta: Vec<Vec<f64>>,
        delta: Vec<f64>,
        lambda0: Option<f64>,
    ) -> Result<Self> {
        let layout = spec.layout();
        let mut v = beta;
        for row in theta {
            if row.len() != layout.k_ar {
                return Err(Error::InvalidState("theta row has wrong length".into()));
            }
            v.extend(row);
        }
        for row in eta {
            if row.len() != layout.k_ch {
                return Err(Error::InvalidState("eta row has wrong length".into()));
            }
            v.extend(row);
        }
        v.extend(delta);
        match (layout.has_lambda0, lambda0) {
            (true, Some(l)) => v.push(l),
            (false, None) => {}
            (true, None) => return Err(Error::InvalidState("INGARCH state needs lambda0".into())),
            (false, Some(_)) => return Err(Error::InvalidState("AR state has no lambda0".into())),
        }
        Self::from_flat(layout, v)
    }

    /// The starting point used by the sampler: `μ` near the sample mean,
    /// all weights equal, `θ = η = 0.5`.
    pub fn initial(spec: &ModelSpec, series: &CountSeries) -> Self {
        let layout = spec.layout();
        let mean = series.mean();
        let mut v = vec![0.0; layout.dim()];
        let b0 = (mean + 1.0).ln() - (layout.k_mu as f64).ln();
        v[layout.beta()].fill(b0);
        v[layout.theta()].fill(0.5);
        v[layout.eta()].fill(0.5);
        if let Some(i) = layout.lambda0() {
            v[i] = mean + 1.0;
        }
        ParamState { layout, values: v }
    }

    /// Checks the box and positivity invariants.
    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("state coordinate {v}")));
        }
        let l = &self.layout;
        let boxed = self.values[l.theta()].iter().chain(&self.values[l.eta()]);
        if let Some(v) = boxed.copied().find(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidState(format!("theta/eta value {v} outside [0, 1]")));
        }
        if let Some(i) = l.lambda0() {
            if self.values[i] <= 0.0 {
                return Err(Error::InvalidState("lambda0 must be positive".into()));
            }
        }
        Ok(())
    }

    pub(crate) fn from_flat_unchecked(layout: Layout, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), layout.dim());
        ParamState { layout, values }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.values
    }

    pub fn beta(&self) -> &[f64] {
        &self.values[self.layout.beta()]
    }

    /// Row `i` (1-based lag) of θ.
    pub fn theta_row(&self, i: usize) -> &[f64] {
        let s = self.layout.theta().start + (i - 1) * self.layout.k_ar;
        &self.values[s..s + self.layout.k_ar]
    }

    /// Row `k` (1-based lag) of η.
    pub fn eta_row(&self, k: usize) -> &[f64] {
        let s = self.layout.eta().start + (k - 1) * self.layout.k_ch;
        &self.values[s..s + self.layout.k_ch]
    }

    pub fn delta(&self) -> &[f64] {
        &self.values[self.layout.delta()]
    }

    pub fn lambda0(&self) -> Option<f64> {
        self.layout.lambda0().map(|i| self.values[i])
    }

    /// Weights `M_1..M_{p+q}`.
    pub fn weights(&self) -> Vec<f64> {
        softmax_weights(self.delta())
    }
}

/// Softmax over `δ_0..δ_n` returning `M_1..M_n`; `M_0` is the slack mass.
pub fn transform_weights(delta: &[f64]) -> Result<Vec<f64>> {
    if delta.is_empty() {
        return Err(Error::InvalidState("delta must contain at least the slack index".into()));
    }
    if let Some(v) = delta.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("delta coordinate {v}")));
    }
    Ok(softmax_weights(delta))
}

pub(crate) fn softmax_weights(delta: &[f64]) -> Vec<f64> {
    let max = delta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = delta.iter().map(|d| (d - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps[1..].iter().map(|e| e / total).collect()
}

fn check_x(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain(x));
    }
    Ok(())
}

/// `μ(x) = Σ_j exp(β_j) B_j(x)`.
pub fn eval_mu(state: &ParamState, spec: &ModelSpec, x: f64) -> Result<f64> {
    check_x(x)?;
    let b = spec.mu_basis.eval(x)?;
    Ok(state.beta().iter().zip(&b).map(|(beta, bj)| beta.exp() * bj).sum())
}

/// `dμ/dx` of the given order.
pub fn eval_mu_derivative(state: &ParamState, spec: &ModelSpec, x: f64, order: usize) -> Result<f64> {
    let b = spec.mu_basis.eval_derivative(x, order)?;
    Ok(state.beta().iter().zip(&b).map(|(beta, bj)| beta.exp() * bj).sum())
}

/// AR coefficient `a_i(x)` for lag `i` in `1..=p`.
pub fn eval_ar_coef(state: &ParamState, spec: &ModelSpec, i: usize, x: f64) -> Result<f64> {
    if i == 0 || i > spec.p {
        return Err(Error::LagOutOfRange {
            index: i,
            max: spec.p,
        });
    }
    check_x(x)?;
    let m = state.weights()[i - 1];
    let b = spec.ar_basis.eval(x)?;
    Ok(m * dot(state.theta_row(i), &b))
}

/// Feedback coefficient `b_k(x)` for lag `k` in `1..=q`.
pub fn eval_ch_coef(state: &ParamState, spec: &ModelSpec, k: usize, x: f64) -> Result<f64> {
    if k == 0 || k > spec.q {
        return Err(Error::LagOutOfRange {
            index: k,
            max: spec.q,
        });
    }
    check_x(x)?;
    let m = state.weights()[spec.p + k - 1];
    let b = spec.ch_basis.eval(x)?;
    Ok(m * dot(state.eta_row(k), &b))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Basis rows evaluated at the rescaled times `t/T`, `t = 1..T`.
#[derive(Debug, Clone)]
pub struct Design {
    pub(crate) len: usize,
    pub(crate) mu: Vec<f64>,
    pub(crate) ar: Vec<f64>,
    pub(crate) ch: Vec<f64>,
}

impl Design {
    pub fn new(spec: &ModelSpec, len: usize) -> Self {
        let grid = rescaled_times(len);
        let build = |b: &SplineBasis, used: bool| {
            if used {
                b.design_matrix(&grid).expect("rescaled times lie in [0, 1]")
            } else {
                Vec::new()
            }
        };
        Design {
            len,
            mu: build(&spec.mu_basis, true),
            ar: build(&spec.ar_basis, spec.p > 0),
            ch: build(&spec.ch_basis, spec.q > 0),
        }
    }
}

/// Rescaled time points `t/T` for `t = 1..=len`.
pub fn rescaled_times(len: usize) -> Vec<f64> {
    (1..=len).map(|t| t as f64 / len as f64).collect()
}

/// Coefficient curves evaluated along the design grid, `t = 1..T` (0-based rows).
pub(crate) struct CoefPaths {
    pub mu: Vec<f64>,
    /// `a_i(t/T)`, `p` rows of length `T`.
    pub ar: Vec<Vec<f64>>,
    /// `b_k(t/T)`, `q` rows of length `T`.
    pub ch: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl CoefPaths {
    pub fn new(state: &ParamState, design: &Design) -> Self {
        let l = state.layout();
        let n = design.len;
        let exp_beta: Vec<f64> = state.beta().iter().map(|b| b.exp()).collect();
        let mu = design.mu.chunks(l.k_mu).map(|row| dot(row, &exp_beta)).collect();
        let weights = state.weights();
        let ar = (1..=l.p)
            .map(|i| {
                let (m, th) = (weights[i - 1], state.theta_row(i));
                design.ar.chunks(l.k_ar).take(n).map(|row| m * dot(row, th)).collect()
            })
            .collect();
        let ch = (1..=l.q)
            .map(|k| {
                let (m, et) = (weights[l.p + k - 1], state.eta_row(k));
                design.ch.chunks(l.k_ch).take(n).map(|row| m * dot(row, et)).collect()
            })
            .collect();
        CoefPaths {
            mu,
            ar,
            ch,
            weights,
        }
    }
}

/// Runs the intensity recursion along precomputed coefficient paths.
/// Pre-sample counts are 0; `λ_0` is the state's value and earlier
/// intensities are 0.
pub(crate) fn intensity_from_paths(paths: &CoefPaths, x: &[f64], lambda0: f64) -> Vec<f64> {
    let n = x.len();
    let mut lambda = vec![0.0; n];
    for t in 0..n {
        // Row t is time t+1.
        let mut l = paths.mu[t];
        for (i, a) in paths.ar.iter().enumerate() {
            if t > i {
                l += a[t] * x[t - i - 1];
            }
        }
        for (k, b) in paths.ch.iter().enumerate() {
            let lag = k + 1;
            let prev = match (t + 1).cmp(&lag) {
                std::cmp::Ordering::Greater => lambda[t - lag],
                std::cmp::Ordering::Equal => lambda0,
                std::cmp::Ordering::Less => 0.0,
            };
            l += b[t] * prev;
        }
        lambda[t] = l;
    }
    lambda
}

/// Conditional intensities `λ_1..λ_T` of `series` under `state`.
pub fn intensity_path(state: &ParamState, spec: &ModelSpec, series: &CountSeries) -> Vec<f64> {
    let design = Design::new(spec, series.len());
    let paths = CoefPaths::new(state, &design);
    intensity_from_paths(&paths, &series.as_f64(), state.lambda0().unwrap_or(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintReport {
    /// Max over the grid of `Σ_i a_i(x) + Σ_k b_k(x)`.
    pub max_memory: f64,
    /// Min over the grid of `1 - Σ_i a_i(x) - Σ_k b_k(x)`, computed without cancellation.
    pub min_margin: f64,
    /// Min over the grid of `μ(x)`.
    pub min_mu: f64,
    /// Smallest individual coefficient value seen on the grid.
    pub min_coef: f64,
    pub pass: bool,
}

/// Evaluates the stationarity constraints on an equidistant grid over `[0, 1]`.
///
/// `min_margin` is `1 - Σ a_i - Σ b_k` computed as
/// `M_0 + Σ_i M_i Σ_j (1 - θ_ij) B_j(x)`, which stays accurate when the
/// slack weight is far below the f64 spacing at 1 and the plain sum rounds
/// to exactly 1.
pub fn check_constraints(state: &ParamState, spec: &ModelSpec, grid_size: usize) -> Result<ConstraintReport> {
    if grid_size < 2 {
        return Err(Error::InvalidSpec(format!("grid size must be at least 2, got {grid_size}")));
    }
    let delta = state.delta();
    let max = delta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = delta.iter().map(|d| (d - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let slack = exps[0] / total;
    let weights: Vec<f64> = exps[1..].iter().map(|e| e / total).collect();
    let exp_beta: Vec<f64> = state.beta().iter().map(|b| b.exp()).collect();
    let mut max_memory = f64::NEG_INFINITY;
    let mut min_margin = f64::INFINITY;
    let mut min_mu = f64::INFINITY;
    let mut min_coef = f64::INFINITY;
    for g in 0..grid_size {
        let x = g as f64 / (grid_size - 1) as f64;
        min_mu = min_mu.min(dot(&spec.mu_basis.eval(x)?, &exp_beta));
        let mut total = 0.0;
        let mut margin = slack;
        let rows = (1..=spec.p)
            .map(|i| (&spec.ar_basis, weights[i - 1], state.theta_row(i)))
            .chain((1..=spec.q).map(|k| (&spec.ch_basis, weights[spec.p + k - 1], state.eta_row(k))));
        for (basis, m, coefs) in rows {
            let b = basis.eval(x)?;
            let c = m * dot(coefs, &b);
            min_coef = min_coef.min(c);
            total += c;
            margin += m * coefs.iter().zip(&b).map(|(t, bj)| (1.0 - t) * bj).sum::<f64>();
        }
        max_memory = max_memory.max(total);
        min_margin = min_margin.min(margin);
    }
    if !min_coef.is_finite() {
        min_coef = 0.0;
    }
    Ok(ConstraintReport {
        max_memory,
        min_margin,
        min_mu,
        min_coef,
        pass: min_margin > 0.0 && max_memory <= 1.0 && min_mu > 0.0 && min_coef >= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn state_with(spec: &ModelSpec, beta: f64, theta: f64, eta: f64, delta: Vec<f64>, lambda0: Option<f64>) -> ParamState {
        let l = spec.layout();
        ParamState::new(
            spec,
            vec![beta; l.k_mu],
            vec![vec![theta; l.k_ar]; l.p],
            vec![vec![eta; l.k_ch]; l.q],
            delta,
            lambda0,
        )
        .unwrap()
    }

    #[test]
    fn weights_examples() {
        assert!(approx(transform_weights(&[0.0, 0.0]).unwrap()[0], 0.5, 1e-15));
        assert!(approx(transform_weights(&[0.0, 3f64.ln()]).unwrap()[0], 0.75, 1e-15));
        assert!(transform_weights(&[0.0, f64::NAN]).is_err());
        assert!(transform_weights(&[0.0, f64::INFINITY]).is_err());
        assert!(transform_weights(&[]).is_err());
    }

    #[test]
    fn weights_survive_large_inputs() {
        let m = transform_weights(&[800.0, 801.0, 0.0]).unwrap();
        assert!(m.iter().all(|v| v.is_finite()));
        assert_eq!(m.len(), 2);
        assert!((m[0] - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-12);
        assert!(m[1] >= 0.0);
        assert!(m.iter().sum::<f64>() < 1.0);
    }

    #[test]
    fn mu_constant_cases() {
        let spec = ModelSpec::ar(0);
        let s = state_with(&spec, 0.0, 0.0, 0.0, vec![0.0], None);
        let s10 = state_with(&spec, 10f64.ln(), 0.0, 0.0, vec![0.0], None);
        for x in [0.0, 0.25, 0.61, 1.0] {
            assert!(approx(eval_mu(&s, &spec, x).unwrap(), 1.0, 1e-14));
            assert!(approx(eval_mu(&s10, &spec, x).unwrap(), 10.0, 1e-12));
        }
    }

    #[test]
    fn ar_coef_examples() {
        let spec = ModelSpec::ar(1);
        let m = 0.5; // delta = (0, 0)
        for (theta, expect) in [(1.0, m), (0.0, 0.0), (0.5, m / 2.0)] {
            let s = state_with(&spec, 0.0, theta, 0.0, vec![0.0, 0.0], None);
            for x in [0.0, 0.33, 1.0] {
                assert!(approx(eval_ar_coef(&s, &spec, 1, x).unwrap(), expect, 1e-14));
            }
        }
        let s = state_with(&spec, 0.0, 0.5, 0.0, vec![0.0, 0.0], None);
        assert!(matches!(eval_ar_coef(&s, &spec, 0, 0.5), Err(Error::LagOutOfRange { .. })));
        assert!(matches!(eval_ar_coef(&s, &spec, 2, 0.5), Err(Error::LagOutOfRange { .. })));
    }

    #[test]
    fn ch_coef_examples() {
        let spec = ModelSpec::ingarch(1, 1);
        let delta = vec![0.0, 0.0, 0.0];
        let m = 1.0 / 3.0;
        for (eta, expect) in [(1.0, m), (0.0, 0.0), (0.5, m / 2.0)] {
            let s = state_with(&spec, 0.0, 0.2, eta, delta.clone(), Some(1.0));
            for x in [0.0, 0.5, 1.0] {
                assert!(approx(eval_ch_coef(&s, &spec, 1, x).unwrap(), expect, 1e-14));
            }
        }
        let s = state_with(&spec, 0.0, 0.2, 0.2, delta, Some(1.0));
        assert!(eval_ch_coef(&s, &spec, 2, 0.5).is_err());
    }

    #[test]
    fn state_invariants() {
        let spec = ModelSpec::ingarch(1, 1);
        let l = spec.layout();
        let mut v = ParamState::initial(&spec, &CountSeries::new(vec![1, 2]).unwrap()).into_flat();
        v[l.theta().start] = 1.2;
        assert!(ParamState::from_flat(l, v.clone()).is_err());
        v[l.theta().start] = 0.5;
        v[l.lambda0().unwrap()] = 0.0;
        assert!(ParamState::from_flat(l, v).is_err());
        assert!(ParamState::from_flat(l, vec![0.0; 3]).is_err());
    }

    #[test]
    fn layout_names_cover_every_coordinate() {
        let spec = ModelSpec::ingarch(2, 1);
        let l = spec.layout();
        assert_eq!(l.names().len(), l.dim());
        assert_eq!(l.dim(), 8 + 16 + 8 + 4 + 1);
        assert_eq!(l.names()[8], "theta_1_1");
        assert_eq!(l.names().last().unwrap(), "lambda0");
    }

    #[test]
    fn spec_rejects_bad_hyperparameters() {
        let mut h = Hyperparameters::default();
        h.c1 = 0.0;
        assert!(ModelSpec::new(ModelKind::Ar, 1, 0, SplineBasis::default(), h).is_err());
        assert!(ModelSpec::new(ModelKind::Ar, 1, 1, SplineBasis::default(), Hyperparameters::default()).is_err());
    }

    #[test]
    fn no_memory_intensity_is_mu() {
        let spec = ModelSpec::ar(0);
        let s = state_with(&spec, 0.7, 0.0, 0.0, vec![0.0], None);
        let series = CountSeries::new(vec![3, 0, 5, 9]).unwrap();
        let lam = intensity_path(&s, &spec, &series);
        for (t, l) in lam.iter().enumerate() {
            let mu = eval_mu(&s, &spec, (t + 1) as f64 / 4.0).unwrap();
            assert!(approx(*l, mu, 1e-13));
        }
    }

    #[test]
    fn ar1_hand_recursion() {
        // μ = 1, a_1 = 0.5 (θ = 1, δ = (0, 0)).
        let spec = ModelSpec::ar(1);
        let s = state_with(&spec, 0.0, 1.0, 0.0, vec![0.0, 0.0], None);
        let series = CountSeries::new(vec![2, 4, 6]).unwrap();
        let lam = intensity_path(&s, &spec, &series);
        for (got, want) in lam.iter().zip([1.0, 2.0, 3.0]) {
            assert!(approx(*got, want, 1e-13), "{lam:?}");
        }
    }

    #[test]
    fn ingarch11_hand_recursion() {
        // μ = 1; M = (0.3, 0.2) with slack 0.5, θ = η = 1.
        let spec = ModelSpec::ingarch(1, 1);
        let delta = vec![0.5f64.ln(), 0.3f64.ln(), 0.2f64.ln()];
        let s = state_with(&spec, 0.0, 1.0, 1.0, delta, Some(5.0));
        let series = CountSeries::new(vec![3, 1]).unwrap();
        let lam = intensity_path(&s, &spec, &series);

        // Scalar recursion oracle.
        let (mu, a, b) = (1.0, 0.3, 0.2);
        let x = [3.0, 1.0];
        let mut prev_lambda = 5.0;
        let mut prev_x = 0.0;
        let mut oracle = Vec::new();
        for xt in x {
            let l = mu + a * prev_x + b * prev_lambda;
            oracle.push(l);
            prev_lambda = l;
            prev_x = xt;
        }
        assert!(approx(oracle[0], 2.0, 1e-12) && approx(oracle[1], 2.3, 1e-12));
        for (g, o) in lam.iter().zip(&oracle) {
            assert!(approx(*g, *o, 1e-12), "{lam:?} vs {oracle:?}");
        }
    }

    #[test]
    fn ingarch_second_lag_sees_lambda0_once() {
        // q = 2: λ_1 uses λ_{-1} = 0 for lag 2; λ_2 uses λ_0 for lag 2.
        let spec = ModelSpec::ingarch(0, 2);
        let delta = vec![0.0, 0.0, 0.0];
        let s = state_with(&spec, 0.0, 0.0, 1.0, delta, Some(6.0));
        let series = CountSeries::new(vec![1, 1, 1]).unwrap();
        let lam = intensity_path(&s, &spec, &series);
        let m = 1.0 / 3.0;
        let l1 = 1.0 + m * 6.0;
        let l2 = 1.0 + m * l1 + m * 6.0;
        let l3 = 1.0 + m * l2 + m * l1;
        for (g, w) in lam.iter().zip([l1, l2, l3]) {
            assert!(approx(*g, w, 1e-12));
        }
    }

    #[test]
    fn saturated_weights_stay_below_one() {
        let spec = ModelSpec::ingarch(2, 1);
        let s = state_with(&spec, 0.0, 1.0, 1.0, vec![0.0; 4], Some(1.0));
        let r = check_constraints(&s, &spec, 1001).unwrap();
        assert!(approx(r.max_memory, 3.0 / 4.0, 1e-12));
        assert!(r.pass);
        assert!(check_constraints(&s, &spec, 1).is_err());
    }

    #[test]
    fn margin_survives_weight_rounding_to_one() {
        // Slack weight exp(-37.67) is below half an ulp of 1, so M_1 rounds to 1.
        let spec = ModelSpec::ar(1);
        let mut theta = vec![0.5; 8];
        theta[0] = 1.0;
        let s = ParamState::new(&spec, vec![0.0; 8], vec![theta], vec![], vec![-21.16, 16.51], None).unwrap();
        assert_eq!(s.weights()[0], 1.0);
        let r = check_constraints(&s, &spec, 1001).unwrap();
        assert_eq!(r.max_memory, 1.0);
        let slack = (-37.67f64).exp();
        assert!((r.min_margin - slack).abs() < 1e-3 * slack);
        assert!(r.pass);
    }

    #[test]
    fn constraint_report_matches_direct_evaluation() {
        let spec = ModelSpec::ingarch(2, 1);
        let l = spec.layout();
        let mut v: Vec<f64> = (0..l.dim()).map(|i| ((i * 37 % 17) as f64) / 17.0).collect();
        for d in &mut v[l.delta()] {
            *d = *d * 4.0 - 2.0;
        }
        *v.last_mut().unwrap() = 3.0;
        let s = ParamState::from_flat(l, v).unwrap();
        let r = check_constraints(&s, &spec, 101).unwrap();
        let mut max = f64::NEG_INFINITY;
        let mut min_mu = f64::INFINITY;
        for g in 0..101 {
            let x = g as f64 / 100.0;
            let tot = eval_ar_coef(&s, &spec, 1, x).unwrap()
                + eval_ar_coef(&s, &spec, 2, x).unwrap()
                + eval_ch_coef(&s, &spec, 1, x).unwrap();
            max = max.max(tot);
            min_mu = min_mu.min(eval_mu(&s, &spec, x).unwrap());
        }
        assert!(approx(r.max_memory, max, 1e-14));
        assert!(approx(r.min_margin, 1.0 - max, 1e-14));
        assert!(approx(r.min_mu, min_mu, 1e-14));
        assert!(r.pass);
    }
}
