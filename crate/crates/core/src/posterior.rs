//! Log posterior density of the count models and its gradient.
//!
//! Poisson log-factorial constants are dropped. For AR models the likelihood
//! conditions on the first `p` observations; INGARCH sums over every
//! observation using zero pre-sample counts and the sampled `λ_0`.
//!
//! The analytic gradient is computed in reverse mode through the intensity
//! recursion: with `r_t = X_t/λ_t − 1` on the likelihood rows, the adjoint
//! `g_t = r_t + Σ_k b_k(t_{+k}) g_{t+k}` collects every path by which `λ_t`
//! feeds later intensities. The `λ_0` coordinate uses central differences by
//! default.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{
    dot, intensity_from_paths, CoefPaths, CountSeries, Design, Layout, ModelKind, ModelSpec,
    ParamState,
};
use crate::simgen::{simulate, TrueFunctions};

/// Gradient of the log posterior, laid out like [`ParamState`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    layout: Layout,
    values: Vec<f64>,
}

impl GradientVector {
    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn beta(&self) -> &[f64] {
        &self.values[self.layout.beta()]
    }

    pub fn theta_row(&self, i: usize) -> &[f64] {
        let s = self.layout.theta().start + (i - 1) * self.layout.k_ar;
        &self.values[s..s + self.layout.k_ar]
    }

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

    /// Largest coordinate-wise `|a − b| / max(|a|, |b|, 1)`.
    pub fn max_relative_error(&self, other: &GradientVector) -> f64 {
        max_relative_error(&self.values, &other.values)
    }
}

pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// How the `λ_0` partial derivative is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Lambda0Gradient {
    #[default]
    FiniteDifference,
    Analytic,
}

/// A model bound to one data series, with the basis design precomputed.
#[derive(Debug, Clone)]
pub struct Posterior {
    spec: ModelSpec,
    layout: Layout,
    x: Vec<f64>,
    design: Design,
    start: usize,
    lambda0_mode: Lambda0Gradient,
}

impl Posterior {
    pub fn new(spec: &ModelSpec, series: &CountSeries) -> Result<Self> {
        spec.validate()?;
        let start = match spec.kind {
            ModelKind::Ar => spec.p.min(series.len()),
            ModelKind::Ingarch => 0,
        };
        Ok(Posterior {
            spec: spec.clone(),
            layout: spec.layout(),
            x: series.as_f64(),
            design: Design::new(spec, series.len()),
            start,
            lambda0_mode: Lambda0Gradient::default(),
        })
    }

    pub fn with_lambda0_gradient(mut self, mode: Lambda0Gradient) -> Self {
        self.lambda0_mode = mode;
        self
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn in_support(&self, v: &[f64]) -> bool {
        let l = &self.layout;
        let boxed = v[l.theta()].iter().chain(&v[l.eta()]);
        if !boxed.into_iter().all(|t| (0.0..=1.0).contains(t)) {
            return false;
        }
        if let Some(i) = l.lambda0() {
            if !(v[i] > 0.0) {
                return false;
            }
        }
        v.iter().all(|t| t.is_finite())
    }

    fn log_prior(&self, v: &[f64]) -> f64 {
        let l = &self.layout;
        let h = &self.spec.hyper;
        let beta: f64 = v[l.beta()].iter().map(|b| b * b).sum();
        let delta: f64 = v[l.delta()].iter().map(|d| d * d).sum();
        let mut lp = -beta / (2.0 * h.c2) - delta / (2.0 * h.c1);
        if let Some(i) = l.lambda0() {
            lp += -(h.d1 + 1.0) * v[i].ln() - h.d1 / v[i];
        }
        lp
    }

    fn log_likelihood(&self, lambda: &[f64]) -> f64 {
        let mut ll = 0.0;
        for (l, x) in lambda[self.start..].iter().zip(&self.x[self.start..]) {
            ll -= l;
            if *x > 0.0 {
                ll += x * l.ln();
            }
        }
        ll
    }

    /// Log posterior at the flat coordinates `v`; `-∞` outside the support.
    pub fn log_density(&self, v: &[f64]) -> f64 {
        if v.len() != self.layout.dim() || !self.in_support(v) {
            return f64::NEG_INFINITY;
        }
        let state = ParamState::from_flat_unchecked(self.layout, v.to_vec());
        let paths = CoefPaths::new(&state, &self.design);
        let lambda = intensity_from_paths(&paths, &self.x, state.lambda0().unwrap_or(0.0));
        let ll = self.log_likelihood(&lambda);
        if ll.is_nan() {
            return f64::NEG_INFINITY;
        }
        ll + self.log_prior(v)
    }

    pub fn log_posterior(&self, state: &ParamState) -> f64 {
        self.log_density(state.as_flat())
    }

    /// Analytic gradient of every coordinate except `λ_0` written into `out`;
    /// returns the log posterior. `out[λ_0]` is filled only when
    /// `with_lambda0` is set, following the configured [`Lambda0Gradient`].
    pub fn log_density_and_grad(&self, v: &[f64], out: &mut [f64], with_lambda0: bool) -> f64 {
        let l = self.layout;
        out.fill(0.0);
        if v.len() != l.dim() || !self.in_support(v) {
            return f64::NEG_INFINITY;
        }
        let state = ParamState::from_flat_unchecked(l, v.to_vec());
        let paths = CoefPaths::new(&state, &self.design);
        let lambda0 = state.lambda0().unwrap_or(0.0);
        let lambda = intensity_from_paths(&paths, &self.x, lambda0);
        let ll = self.log_likelihood(&lambda);
        if !ll.is_finite() {
            return f64::NEG_INFINITY;
        }
        let n = self.x.len();

        // Adjoint of λ_t.
        let mut g = vec![0.0; n];
        for t in (0..n).rev() {
            let mut acc = if t >= self.start { self.x[t] / lambda[t] - 1.0 } else { 0.0 };
            for (k, b) in paths.ch.iter().enumerate() {
                let later = t + k + 1;
                if later < n {
                    acc += b[later] * g[later];
                }
            }
            g[t] = acc;
        }

        let h = &self.spec.hyper;
        // β
        {
            let gb = &mut out[l.beta()];
            for (row, gt) in self.design.mu.chunks(l.k_mu).zip(&g) {
                for (acc, b) in gb.iter_mut().zip(row) {
                    *acc += gt * b;
                }
            }
            for (acc, beta) in gb.iter_mut().zip(state.beta()) {
                *acc = *acc * beta.exp() - beta / h.c2;
            }
        }

        // θ and η, plus ∂ℓ/∂M for each weight.
        let weights = &paths.weights;
        let mut g_weight = vec![0.0; weights.len()];
        for i in 1..=l.p {
            let s = l.theta().start + (i - 1) * l.k_ar;
            let row_grad = &mut out[s..s + l.k_ar];
            for t in i..n {
                let w = g[t] * self.x[t - i];
                if w == 0.0 {
                    continue;
                }
                let row = &self.design.ar[t * l.k_ar..(t + 1) * l.k_ar];
                for (acc, b) in row_grad.iter_mut().zip(row) {
                    *acc += w * b;
                }
            }
            g_weight[i - 1] = dot(row_grad, state.theta_row(i));
            let m = weights[i - 1];
            row_grad.iter_mut().for_each(|v| *v *= m);
        }
        for k in 1..=l.q {
            let s = l.eta().start + (k - 1) * l.k_ch;
            let row_grad = &mut out[s..s + l.k_ch];
            for t in (k - 1)..n {
                let prev = if t >= k { lambda[t - k] } else { lambda0 };
                let w = g[t] * prev;
                let row = &self.design.ch[t * l.k_ch..(t + 1) * l.k_ch];
                for (acc, b) in row_grad.iter_mut().zip(row) {
                    *acc += w * b;
                }
            }
            g_weight[l.p + k - 1] = dot(row_grad, state.eta_row(k));
            let m = weights[l.p + k - 1];
            row_grad.iter_mut().for_each(|v| *v *= m);
        }

        // δ through the softmax, slack index 0 included.
        {
            let delta = state.delta();
            let slack = 1.0 - weights.iter().sum::<f64>();
            let mixed: f64 = g_weight.iter().zip(weights).map(|(gw, m)| gw * m).sum();
            let gd = &mut out[l.delta()];
            gd[0] = -slack * mixed - delta[0] / h.c1;
            for i in 1..gd.len() {
                let m = weights[i - 1];
                gd[i] = m * (g_weight[i - 1] - mixed) - delta[i] / h.c1;
            }
        }

        let lp = ll + self.log_prior(v);
        if let (Some(idx), true) = (l.lambda0(), with_lambda0) {
            out[idx] = match self.lambda0_mode {
                Lambda0Gradient::Analytic => {
                    let mut d = 0.0;
                    for (k, b) in paths.ch.iter().enumerate() {
                        if k < n {
                            d += b[k] * g[k];
                        }
                    }
                    d - (h.d1 + 1.0) / lambda0 + h.d1 / (lambda0 * lambda0)
                }
                Lambda0Gradient::FiniteDifference => self.lambda0_fd(v),
            };
        }
        lp
    }

    /// Central difference of the log posterior in `λ_0`.
    pub fn lambda0_fd(&self, v: &[f64]) -> f64 {
        let Some(idx) = self.layout.lambda0() else {
            return 0.0;
        };
        let l0 = v[idx];
        let h = (1e-5 * l0.max(1.0)).min(0.5 * l0);
        let mut w = v.to_vec();
        w[idx] = l0 + h;
        let up = self.log_density(&w);
        w[idx] = l0 - h;
        let dn = self.log_density(&w);
        (up - dn) / (2.0 * h)
    }

    pub fn gradient(&self, state: &ParamState) -> GradientVector {
        let mut out = vec![0.0; self.layout.dim()];
        self.log_density_and_grad(state.as_flat(), &mut out, true);
        GradientVector {
            layout: self.layout,
            values: out,
        }
    }

    /// Coordinate-wise central differences of the log posterior.
    pub fn finite_diff(&self, state: &ParamState, h: f64) -> Result<FiniteDiffGradient> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidStep(h));
        }
        let l = self.layout;
        let mut v = state.as_flat().to_vec();
        let mut out = vec![0.0; l.dim()];
        let mut clipped = Vec::new();
        let boxed = |i: usize| l.theta().contains(&i) || l.eta().contains(&i);
        for i in 0..l.dim() {
            let orig = v[i];
            let (mut lo, mut hi) = (orig - h, orig + h);
            if boxed(i) {
                lo = lo.max(0.0);
                hi = hi.min(1.0);
            } else if Some(i) == l.lambda0() && lo <= 0.0 {
                lo = 0.5 * orig;
            }
            if lo != orig - h || hi != orig + h {
                clipped.push(i);
            }
            v[i] = hi;
            let up = self.log_density(&v);
            v[i] = lo;
            let dn = self.log_density(&v);
            v[i] = orig;
            out[i] = (up - dn) / (hi - lo);
        }
        Ok(FiniteDiffGradient {
            gradient: GradientVector {
                layout: l,
                values: out,
            },
            clipped,
        })
    }
}

/// Finite-difference gradient plus the coordinates whose stencil had to be
/// clipped to stay inside the support.
#[derive(Debug, Clone)]
pub struct FiniteDiffGradient {
    pub gradient: GradientVector,
    pub clipped: Vec<usize>,
}

pub fn log_posterior(state: &ParamState, spec: &ModelSpec, series: &CountSeries) -> Result<f64> {
    Ok(Posterior::new(spec, series)?.log_posterior(state))
}

pub fn grad_log_posterior(state: &ParamState, spec: &ModelSpec, series: &CountSeries) -> Result<GradientVector> {
    Ok(Posterior::new(spec, series)?.gradient(state))
}

pub fn finite_diff_grad(
    state: &ParamState,
    spec: &ModelSpec,
    series: &CountSeries,
    h: f64,
) -> Result<FiniteDiffGradient> {
    Posterior::new(spec, series)?.finite_diff(state, h)
}

/// Draws a random state strictly inside the box constraints.
pub fn random_interior_state<R: Rng>(spec: &ModelSpec, rng: &mut R) -> ParamState {
    let l = spec.layout();
    let mut v = vec![0.0; l.dim()];
    for b in &mut v[l.beta()] {
        *b = rng.random_range(-0.5..2.5);
    }
    for t in &mut v[l.theta().start..l.eta().end] {
        *t = rng.random_range(0.05..0.95);
    }
    for d in &mut v[l.delta()] {
        let z: f64 = StandardNormal.sample(rng);
        *d = z;
    }
    if let Some(i) = l.lambda0() {
        v[i] = rng.random_range(0.5..20.0);
    }
    ParamState::from_flat(l, v).expect("interior state is valid")
}

#[derive(Debug, Clone)]
pub struct GradcheckReport {
    pub n_states: usize,
    pub n_series: usize,
    pub max_relative_error: f64,
    pub clipped: usize,
}

/// Compares the analytic gradient (analytic `λ_0` included) with central
/// differences at `n_states` random interior states on each of `n_series`
/// simulated series.
pub fn gradcheck(
    spec: &ModelSpec,
    n_series: usize,
    n_states: usize,
    len: usize,
    h: f64,
    seed: u64,
) -> Result<GradcheckReport> {
    let truth = TrueFunctions::for_orders(spec.kind, spec.p, spec.q);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut clipped = 0;
    for _ in 0..n_series {
        let sim = simulate(&truth, spec.kind, len, rng.random())?;
        let post = Posterior::new(spec, &sim.series)?.with_lambda0_gradient(Lambda0Gradient::Analytic);
        for _ in 0..n_states {
            let state = random_interior_state(spec, &mut rng);
            let analytic = post.gradient(&state);
            let fd = post.finite_diff(&state, h)?;
            clipped += fd.clipped.len();
            worst = worst.max(analytic.max_relative_error(&fd.gradient));
        }
    }
    Ok(GradcheckReport {
        n_states,
        n_series,
        max_relative_error: worst,
        clipped,
    })
}
