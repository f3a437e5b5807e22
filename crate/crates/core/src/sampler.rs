//! Blocked Hamiltonian Monte Carlo with a fixed number of leapfrog steps.
//!
//! Each iteration updates the coordinate blocks in turn, holding the others
//! fixed. Box-constrained coordinates that leave `[0, 1]` during a leapfrog
//! step are mapped to the nearest boundary point. During burn-in the step
//! size of every block is shrunk or grown every `adapt_interval` iterations
//! to keep its acceptance rate inside the target window; afterwards it is
//! frozen.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CountSeries, Layout, ModelSpec, ParamState};
use crate::posterior::Posterior;

/// What happens to a box-constrained coordinate that leaves `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryRule {
    /// Map to the nearest boundary point.
    #[default]
    Clamp,
    /// Reflect off the wall and flip the momentum component.
    Reflect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockScheme {
    /// `{β}, {δ}, {θ ∪ η}, {λ₀}`.
    Merged,
    /// `{β}, {δ}, {θ}, {η}, {λ₀}`.
    Split,
    /// `{β}, {θ ∪ η ∪ δ}, {λ₀}`: every coordinate of the memory coefficients together.
    /// The weights and their scale trade off against each other, so moving
    /// them separately can freeze one of the two blocks.
    #[default]
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub n_leapfrog: usize,
    pub step_size_init: f64,
    pub target_accept: (f64, f64),
    pub adapt_interval: usize,
    pub shrink: f64,
    pub grow: f64,
    /// Halve the log adaptation factor of a block whenever its adjustment
    /// reverses direction, and double it again (up to the full factor) when
    /// two adjustments agree.
    pub damping: bool,
    pub n_iter: usize,
    pub n_burnin: usize,
    pub seed: u64,
    pub block_scheme: BlockScheme,
    pub boundary: BoundaryRule,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_leapfrog: 30,
            step_size_init: 0.01,
            target_accept: (0.6, 0.8),
            adapt_interval: 100,
            shrink: 0.8,
            grow: 1.25,
            damping: true,
            n_iter: 10_000,
            n_burnin: 5_000,
            seed: 1,
            block_scheme: BlockScheme::Joint,
            boundary: BoundaryRule::Clamp,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.target_accept;
        let bad = |m: &str| Err(Error::InvalidSampler(m.to_string()));
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return bad("acceptance window must satisfy 0 < low < high < 1");
        }
        if self.n_burnin >= self.n_iter {
            return bad("n_burnin must be smaller than n_iter");
        }
        if self.n_leapfrog == 0 {
            return bad("n_leapfrog must be positive");
        }
        if !(self.step_size_init > 0.0 && self.step_size_init.is_finite()) {
            return bad("step_size_init must be positive");
        }
        if self.adapt_interval == 0 {
            return bad("adapt_interval must be positive");
        }
        if !(0.0 < self.shrink && self.shrink < 1.0 && self.grow > 1.0) {
            return bad("need 0 < shrink < 1 < grow");
        }
        Ok(())
    }
}

/// A contiguous group of coordinates updated jointly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub name: String,
    pub range: Range<usize>,
    /// The part of `range` whose coordinates live in `[0, 1]`.
    pub boxed: Range<usize>,
}

impl Block {
    /// A block that is either entirely box-constrained or entirely free.
    pub fn new(name: impl Into<String>, range: Range<usize>, bounded: bool) -> Self {
        let boxed = if bounded { range.clone() } else { range.start..range.start };
        Block {
            name: name.into(),
            range,
            boxed,
        }
    }

    /// A block whose coordinates in `boxed` are box-constrained.
    pub fn with_box(name: impl Into<String>, range: Range<usize>, boxed: Range<usize>) -> Self {
        assert!(boxed.is_empty() || (range.start <= boxed.start && boxed.end <= range.end));
        Block {
            name: name.into(),
            range,
            boxed,
        }
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }
}

/// Blocks of a model layout, empty ones dropped.
pub fn model_blocks(layout: &Layout, scheme: BlockScheme) -> Vec<Block> {
    let mut blocks = vec![Block::new("beta", layout.beta(), false)];
    if scheme != BlockScheme::Joint {
        blocks.push(Block::new("delta", layout.delta(), false));
    }
    match scheme {
        BlockScheme::Merged => {
            blocks.push(Block::new("weights", layout.theta().start..layout.eta().end, true));
        }
        BlockScheme::Split => {
            blocks.push(Block::new("theta", layout.theta(), true));
            blocks.push(Block::new("eta", layout.eta(), true));
        }
        BlockScheme::Joint => {
            let boxed = layout.theta().start..layout.eta().end;
            blocks.push(Block::with_box("memory", boxed.start..layout.delta().end, boxed));
        }
    }
    if let Some(i) = layout.lambda0() {
        blocks.push(Block::new("lambda0", i..i + 1, false));
    }
    blocks.retain(|b| !b.is_empty());
    blocks
}

/// A log density that can supply the gradient of one block at a time.
pub trait BlockTarget {
    fn dim(&self) -> usize;

    fn log_density(&self, x: &[f64]) -> f64;

    /// Log density at `x`; the gradient with respect to `block`'s
    /// coordinates goes into `grad` (length `block.len()`).
    fn log_density_and_grad(&self, x: &[f64], block: &Block, grad: &mut [f64]) -> f64;
}

impl BlockTarget for Posterior {
    fn dim(&self) -> usize {
        self.layout().dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        Posterior::log_density(self, x)
    }

    fn log_density_and_grad(&self, x: &[f64], block: &Block, grad: &mut [f64]) -> f64 {
        let l0 = self.layout().lambda0();
        if block.len() == 1 && Some(block.range.start) == l0 {
            let lp = Posterior::log_density(self, x);
            grad[0] = if lp.is_finite() { self.lambda0_fd(x) } else { 0.0 };
            return lp;
        }
        let mut full = vec![0.0; x.len()];
        let wants_l0 = l0.is_some_and(|i| block.range.contains(&i));
        let lp = Posterior::log_density_and_grad(self, x, &mut full, wants_l0);
        grad.copy_from_slice(&full[block.range.clone()]);
        lp
    }
}

/// Mutable state of one chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub position: Vec<f64>,
    /// Always equal to the target's log density at `position`.
    pub log_post: f64,
    pub step_sizes: Vec<f64>,
    /// Sum of Metropolis acceptance probabilities in the current window.
    pub window_accept_sum: Vec<f64>,
    pub window_proposed: Vec<usize>,
    pub iteration: usize,
}

impl ChainState {
    pub fn new<T: BlockTarget>(target: &T, position: Vec<f64>, n_blocks: usize, step_size: f64) -> Result<Self> {
        let log_post = target.log_density(&position);
        if !log_post.is_finite() {
            return Err(Error::NonFiniteStart(log_post));
        }
        Ok(ChainState {
            position,
            log_post,
            step_sizes: vec![step_size; n_blocks],
            window_accept_sum: vec![0.0; n_blocks],
            window_proposed: vec![0; n_blocks],
            iteration: 0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub accepted: bool,
    /// `min(1, exp(−ΔH))`, zero for diverging trajectories.
    pub accept_prob: f64,
}

fn apply_boundary(x: &mut [f64], p: &mut [f64], rule: BoundaryRule) {
    match rule {
        BoundaryRule::Clamp => {
            for v in x.iter_mut() {
                *v = v.clamp(0.0, 1.0);
            }
        }
        BoundaryRule::Reflect => {
            for (v, m) in x.iter_mut().zip(p.iter_mut()) {
                while !(0.0..=1.0).contains(v) && v.is_finite() {
                    if *v > 1.0 {
                        *v = 2.0 - *v;
                    } else {
                        *v = -*v;
                    }
                    *m = -*m;
                }
            }
        }
    }
}

/// One HMC update of `block` with identity mass matrix.
pub fn hmc_transition<T: BlockTarget, R: Rng>(
    target: &T,
    chain: &mut ChainState,
    block_index: usize,
    block: &Block,
    n_leapfrog: usize,
    boundary: BoundaryRule,
    rng: &mut R,
) -> Transition {
    let eps = chain.step_sizes[block_index];
    let r = block.range.clone();
    let d = r.len();
    let mut x = chain.position.clone();
    let mut p: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let kinetic = |p: &[f64]| 0.5 * p.iter().map(|v| v * v).sum::<f64>();
    let h0 = -chain.log_post + kinetic(&p);

    let mut grad = vec![0.0; d];
    let mut lp = target.log_density_and_grad(&x, block, &mut grad);
    let mut diverged = !lp.is_finite();
    if !diverged {
        for _ in 0..n_leapfrog {
            for (m, g) in p.iter_mut().zip(&grad) {
                *m += 0.5 * eps * g;
            }
            for (v, m) in x[r.clone()].iter_mut().zip(&p) {
                *v += eps * m;
            }
            if !block.boxed.is_empty() {
                let b = block.boxed.clone();
                apply_boundary(&mut x[b.clone()], &mut p[b.start - r.start..b.end - r.start], boundary);
            }
            lp = target.log_density_and_grad(&x, block, &mut grad);
            if !lp.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                diverged = true;
                break;
            }
            for (m, g) in p.iter_mut().zip(&grad) {
                *m += 0.5 * eps * g;
            }
        }
    }

    chain.window_proposed[block_index] += 1;
    let log_ratio = if diverged { f64::NEG_INFINITY } else { h0 - (-lp + kinetic(&p)) };
    if !log_ratio.is_finite() && log_ratio != f64::INFINITY {
        return Transition {
            accepted: false,
            accept_prob: 0.0,
        };
    }
    let accept_prob = log_ratio.min(0.0).exp();
    chain.window_accept_sum[block_index] += accept_prob;
    let u: f64 = rng.random();
    let accepted = u < accept_prob;
    if accepted {
        chain.position = x;
        chain.log_post = lp;
    }
    Transition {
        accepted,
        accept_prob,
    }
}

/// Multiplicative step-size update from a window's acceptance rate.
pub fn adapt_step_size(step: f64, acceptance: f64, config: &SamplerConfig) -> f64 {
    adapt_step_size_scaled(step, acceptance, config, 1.0)
}

fn adapt_step_size_scaled(step: f64, acceptance: f64, config: &SamplerConfig, power: f64) -> f64 {
    let (lo, hi) = config.target_accept;
    if acceptance < lo {
        step * config.shrink.powf(power)
    } else if acceptance > hi {
        step * config.grow.powf(power)
    } else {
        step
    }
}

const MIN_DAMPING_POWER: f64 = 1.0 / 16.0;

/// Per-block state of the damped adaptation.
#[derive(Debug, Clone, Copy)]
struct Damping {
    power: f64,
    last: i8,
}

impl Damping {
    fn update(&mut self, acceptance: f64, config: &SamplerConfig) -> f64 {
        if !config.damping {
            return 1.0;
        }
        let (lo, hi) = config.target_accept;
        let dir = if acceptance < lo {
            -1
        } else if acceptance > hi {
            1
        } else {
            return self.power;
        };
        if self.last == -dir {
            self.power = (self.power * 0.5).max(MIN_DAMPING_POWER);
        } else if self.last == dir {
            self.power = (self.power * 2.0).min(1.0);
        }
        self.last = dir;
        self.power
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AdaptationRecord {
    pub iteration: usize,
    pub block: usize,
    pub acceptance: f64,
    pub step_size: f64,
}

/// Raw output of [`run_sampler`].
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub draws: Vec<Vec<f64>>,
    pub log_posteriors: Vec<f64>,
    pub adaptation: Vec<AdaptationRecord>,
    pub step_sizes: Vec<f64>,
    /// Post-burn-in acceptance rate per block.
    pub acceptance: Vec<f64>,
}

/// Runs one chain on an arbitrary target, retaining post-burn-in draws.
pub fn run_sampler<T: BlockTarget, R: Rng>(
    target: &T,
    init: Vec<f64>,
    blocks: &[Block],
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<ChainOutput> {
    config.validate()?;
    let mut chain = ChainState::new(target, init, blocks.len(), config.step_size_init)?;
    let keep = config.n_iter - config.n_burnin;
    let mut draws = Vec::with_capacity(keep);
    let mut log_posteriors = Vec::with_capacity(keep);
    let mut adaptation = Vec::new();
    let mut post_accepted = vec![0usize; blocks.len()];
    let mut damping = vec![Damping { power: 1.0, last: 0 }; blocks.len()];

    for it in 1..=config.n_iter {
        chain.iteration = it;
        for (bi, block) in blocks.iter().enumerate() {
            let tr = hmc_transition(target, &mut chain, bi, block, config.n_leapfrog, config.boundary, rng);
            if it > config.n_burnin && tr.accepted {
                post_accepted[bi] += 1;
            }
        }
        if it <= config.n_burnin && it % config.adapt_interval == 0 {
            for bi in 0..blocks.len() {
                let rate = chain.window_accept_sum[bi] / chain.window_proposed[bi].max(1) as f64;
                let power = damping[bi].update(rate, config);
                chain.step_sizes[bi] = adapt_step_size_scaled(chain.step_sizes[bi], rate, config, power);
                adaptation.push(AdaptationRecord {
                    iteration: it,
                    block: bi,
                    acceptance: rate,
                    step_size: chain.step_sizes[bi],
                });
            }
        }
        if it % config.adapt_interval == 0 || it == config.n_burnin {
            chain.window_accept_sum.fill(0.0);
            chain.window_proposed.fill(0);
        }
        if it > config.n_burnin {
            draws.push(chain.position.clone());
            log_posteriors.push(chain.log_post);
        }
    }
    Ok(ChainOutput {
        draws,
        log_posteriors,
        adaptation,
        step_sizes: chain.step_sizes,
        acceptance: post_accepted.iter().map(|&a| a as f64 / keep as f64).collect(),
    })
}

/// One retained posterior draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub chain: usize,
    pub iteration: usize,
    pub log_posterior: f64,
    pub state: ParamState,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainDiagnostics {
    pub chain: usize,
    pub blocks: Vec<String>,
    pub step_sizes: Vec<f64>,
    pub acceptance: Vec<f64>,
    pub adaptation: Vec<AdaptationRecord>,
}

/// Posterior draws from one or more chains, in chain order.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub config: SamplerConfig,
    pub draws: Vec<Draw>,
    pub chains: Vec<ChainDiagnostics>,
}

impl FitResult {
    pub fn states(&self) -> impl Iterator<Item = &ParamState> {
        self.draws.iter().map(|d| &d.state)
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// A fit made of the given states, for post-processing tests and for
    /// reloading draws from disk.
    pub fn from_states(spec: ModelSpec, states: Vec<ParamState>) -> Self {
        let draws = states
            .into_iter()
            .enumerate()
            .map(|(i, state)| Draw {
                chain: 0,
                iteration: i + 1,
                log_posterior: f64::NAN,
                state,
            })
            .collect();
        FitResult {
            spec,
            config: SamplerConfig::default(),
            draws,
            chains: Vec::new(),
        }
    }
}

fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

fn run_one(post: &Posterior, series: &CountSeries, config: &SamplerConfig, chain: usize) -> Result<(Vec<Draw>, ChainDiagnostics)> {
    let layout = post.layout();
    let blocks = model_blocks(&layout, config.block_scheme);
    let init = ParamState::initial(post.spec(), series).into_flat();
    let mut rng = chain_rng(config.seed, chain);
    let out = run_sampler(post, init, &blocks, config, &mut rng)?;
    let draws = out
        .draws
        .into_iter()
        .zip(out.log_posteriors)
        .enumerate()
        .map(|(i, (v, lp))| Draw {
            chain,
            iteration: config.n_burnin + i + 1,
            log_posterior: lp,
            state: ParamState::from_flat_unchecked(layout, v),
        })
        .collect();
    let diag = ChainDiagnostics {
        chain,
        blocks: blocks.iter().map(|b| b.name.clone()).collect(),
        step_sizes: out.step_sizes,
        acceptance: out.acceptance,
        adaptation: out.adaptation,
    };
    Ok((draws, diag))
}

/// Fits `spec` to `series` with a single chain.
pub fn run_chain(spec: &ModelSpec, series: &CountSeries, config: &SamplerConfig) -> Result<FitResult> {
    run_chains(spec, series, config, 1)
}

/// Runs `n_chains` independent chains in parallel, one RNG stream each.
pub fn run_chains(spec: &ModelSpec, series: &CountSeries, config: &SamplerConfig, n_chains: usize) -> Result<FitResult> {
    config.validate()?;
    if n_chains == 0 {
        return Err(Error::InvalidSampler("need at least one chain".into()));
    }
    let post = Posterior::new(spec, series)?;
    let results: Vec<Result<(Vec<Draw>, ChainDiagnostics)>> = if n_chains == 1 {
        vec![run_one(&post, series, config, 0)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..n_chains)
                .map(|c| {
                    let post = &post;
                    s.spawn(move || run_one(post, series, config, c))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
        })
    };
    let mut draws = Vec::new();
    let mut chains = Vec::new();
    for r in results {
        let (d, c) = r?;
        draws.extend(d);
        chains.push(c);
    }
    Ok(FitResult {
        spec: spec.clone(),
        config: config.clone(),
        draws,
        chains,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Flat(usize);

    impl BlockTarget for Flat {
        fn dim(&self) -> usize {
            self.0
        }
        fn log_density(&self, _: &[f64]) -> f64 {
            0.0
        }
        fn log_density_and_grad(&self, _: &[f64], _: &Block, grad: &mut [f64]) -> f64 {
            grad.fill(0.0);
            0.0
        }
    }

    /// Independent Gaussian with the given standard deviations.
    struct Gauss(Vec<f64>);

    impl BlockTarget for Gauss {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn log_density(&self, x: &[f64]) -> f64 {
            -0.5 * x.iter().zip(&self.0).map(|(v, s)| (v / s).powi(2)).sum::<f64>()
        }
        fn log_density_and_grad(&self, x: &[f64], block: &Block, grad: &mut [f64]) -> f64 {
            for (g, i) in grad.iter_mut().zip(block.range.clone()) {
                *g = -x[i] / self.0[i].powi(2);
            }
            self.log_density(x)
        }
    }

    #[test]
    fn flat_target_always_accepts() {
        let t = Flat(3);
        let block = Block::new("all", 0..3, false);
        let mut chain = ChainState::new(&t, vec![0.0; 3], 1, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let tr = hmc_transition(&t, &mut chain, 0, &block, 30, BoundaryRule::Clamp, &mut rng);
            assert!(tr.accepted);
            assert_eq!(tr.accept_prob, 1.0);
        }
    }

    #[test]
    fn clamp_maps_to_nearest_boundary() {
        let mut x = vec![1.2, -0.3, 0.4];
        let mut p = vec![1.0, -1.0, 0.5];
        apply_boundary(&mut x, &mut p, BoundaryRule::Clamp);
        assert_eq!(x, vec![1.0, 0.0, 0.4]);
        assert_eq!(p, vec![1.0, -1.0, 0.5]);
    }

    #[test]
    fn reflect_flips_momentum() {
        let mut x = vec![1.2, -0.3, 0.4];
        let mut p = vec![1.0, -1.0, 0.5];
        apply_boundary(&mut x, &mut p, BoundaryRule::Reflect);
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 0.3).abs() < 1e-15);
        assert_eq!(p, vec![-1.0, 1.0, 0.5]);
    }

    #[test]
    fn adaptation_rule() {
        let c = SamplerConfig::default();
        assert_eq!(adapt_step_size(0.1, 0.7, &c), 0.1);
        assert!(adapt_step_size(0.1, 0.3, &c) < 0.1);
        assert!(adapt_step_size(0.1, 0.95, &c) > 0.1);
        assert_eq!(adapt_step_size(0.1, 0.6, &c), 0.1);
        assert_eq!(adapt_step_size(0.1, 0.8, &c), 0.1);
    }

    #[test]
    fn config_validation() {
        let mut c = SamplerConfig::default();
        c.validate().unwrap();
        c.n_burnin = c.n_iter;
        assert!(c.validate().is_err());
        let c = SamplerConfig {
            target_accept: (0.8, 0.6),
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = SamplerConfig {
            n_leapfrog: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn standard_gaussian_moments() {
        let t = Gauss(vec![1.0]);
        let blocks = [Block::new("x", 0..1, false)];
        let config = SamplerConfig {
            n_iter: 6000,
            n_burnin: 1000,
            n_leapfrog: 10,
            step_size_init: 0.1,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = run_sampler(&t, vec![0.5], &blocks, &config, &mut rng).unwrap();
        assert_eq!(out.draws.len(), 5000);
        let xs: Vec<f64> = out.draws.iter().map(|d| d[0]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.1, "mean {mean}");
        assert!((var - 1.0).abs() < 0.15, "var {var}");
    }

    #[test]
    fn cached_log_post_matches_target() {
        let t = Gauss(vec![1.0, 0.2, 3.0]);
        let blocks = [Block::new("a", 0..2, false), Block::new("b", 2..3, false)];
        let mut chain = ChainState::new(&t, vec![0.1, 0.1, 0.1], 2, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for i in 0..200 {
            let bi = i % 2;
            hmc_transition(&t, &mut chain, bi, &blocks[bi], 15, BoundaryRule::Clamp, &mut rng);
            assert_eq!(chain.log_post, t.log_density(&chain.position));
        }
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let spec = ModelSpec::ingarch(1, 1);
        let series = CountSeries::new(vec![1, 2, 3]).unwrap();
        let post = Posterior::new(&spec, &series).unwrap();
        let mut init = ParamState::initial(&spec, &series).into_flat();
        init[spec.layout().lambda0().unwrap()] = -1.0;
        assert!(matches!(ChainState::new(&post, init, 1, 0.1), Err(Error::NonFiniteStart(_))));
    }

    #[test]
    fn block_layouts() {
        let ar = ModelSpec::ar(1).layout();
        let names: Vec<_> = model_blocks(&ar, BlockScheme::Merged).into_iter().map(|b| b.name).collect();
        assert_eq!(names, ["beta", "delta", "weights"]);
        let ig = ModelSpec::ingarch(1, 1).layout();
        let blocks = model_blocks(&ig, BlockScheme::Merged);
        assert_eq!(blocks.len(), 4);
        assert_eq!(blocks[2].range, ig.theta().start..ig.eta().end);
        assert_eq!(blocks[2].boxed, blocks[2].range);
        assert!(blocks[1].boxed.is_empty());
        assert_eq!(model_blocks(&ig, BlockScheme::Split).len(), 5);
        let none = ModelSpec::ar(0).layout();
        assert_eq!(model_blocks(&none, BlockScheme::Merged).len(), 2);
        let joint = model_blocks(&ig, BlockScheme::Joint);
        let names: Vec<_> = joint.iter().map(|b| b.name.as_str()).collect();
        assert_eq!(names, ["beta", "memory", "lambda0"]);
        assert_eq!(joint[1].range, ig.theta().start..ig.delta().end);
        assert_eq!(joint[1].boxed, ig.theta().start..ig.eta().end);
    }
}
