use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use tvcount::model::{ModelKind, ModelSpec};
use tvcount::sampler::{run_chain, run_sampler, Block, BlockTarget, SamplerConfig};
use tvcount::simgen::{simulate, TrueFunctions};

/// Correlated bivariate Gaussian, zero mean, unit variances, correlation `rho`.
struct Bivariate {
    rho: f64,
}

impl Bivariate {
    fn precision(&self) -> [[f64; 2]; 2] {
        let d = 1.0 - self.rho * self.rho;
        [[1.0 / d, -self.rho / d], [-self.rho / d, 1.0 / d]]
    }
}

impl BlockTarget for Bivariate {
    fn dim(&self) -> usize {
        2
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        let p = self.precision();
        -0.5 * (p[0][0] * x[0] * x[0] + 2.0 * p[0][1] * x[0] * x[1] + p[1][1] * x[1] * x[1])
    }
    fn log_density_and_grad(&self, x: &[f64], block: &Block, grad: &mut [f64]) -> f64 {
        let p = self.precision();
        let full = [-(p[0][0] * x[0] + p[0][1] * x[1]), -(p[1][0] * x[0] + p[1][1] * x[1])];
        for (g, i) in grad.iter_mut().zip(block.range.clone()) {
            *g = full[i];
        }
        self.log_density(x)
    }
}

fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn bivariate_gaussian_marginals_and_projection_pass_ks() {
    let target = Bivariate { rho: 0.6 };
    let blocks = [Block::new("xy", 0..2, false)];
    let config = SamplerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let out = run_sampler(&target, vec![1.0, -1.0], &blocks, &config, &mut rng).unwrap();
    assert_eq!(out.draws.len(), 5000);
    let std = Normal::new(0.0, 1.0).unwrap();
    for i in 0..2 {
        let d = ks_distance(out.draws.iter().map(|v| v[i]).collect(), |x| std.cdf(x));
        assert!(d < 0.05, "marginal {i}: KS {d}");
    }
    // x + y has variance 2(1 + rho).
    let sum = Normal::new(0.0, (2.0 * 1.6f64).sqrt()).unwrap();
    let d = ks_distance(out.draws.iter().map(|v| v[0] + v[1]).collect(), |x| sum.cdf(x));
    assert!(d < 0.05, "x + y: KS {d}");
}

#[test]
fn split_blocks_still_target_the_joint() {
    let target = Bivariate { rho: 0.6 };
    let blocks = [Block::new("x", 0..1, false), Block::new("y", 1..2, false)];
    let config = SamplerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let out = run_sampler(&target, vec![0.0, 0.0], &blocks, &config, &mut rng).unwrap();
    let std = Normal::new(0.0, 1.0).unwrap();
    for i in 0..2 {
        let d = ks_distance(out.draws.iter().map(|v| v[i]).collect(), |x| std.cdf(x));
        assert!(d < 0.05, "marginal {i}: KS {d}");
    }
}

#[test]
fn ar1_t500_block_acceptance_is_tuned() {
    let truth = TrueFunctions::preset("ar1").unwrap();
    let sim = simulate(&truth, ModelKind::Ar, 500, 1).unwrap();
    let config = SamplerConfig::default();
    let fit = run_chain(&ModelSpec::ar(1), &sim.series, &config).unwrap();
    let diag = &fit.chains[0];
    assert_eq!(diag.blocks, ["beta", "memory"]);
    for (b, a) in diag.blocks.iter().zip(&diag.acceptance) {
        assert!((0.5..=0.9).contains(a), "block {b}: acceptance {a}");
    }
    // Adaptation stops at the end of burn-in.
    assert!(diag.adaptation.iter().all(|r| r.iteration <= config.n_burnin));
    let last: Vec<f64> = diag.adaptation.iter().rev().take(diag.blocks.len()).rev().map(|r| r.step_size).collect();
    assert_eq!(last, diag.step_sizes);
    for s in fit.states() {
        s.validate().unwrap();
    }
}

#[test]
fn ingarch_fit_keeps_lambda0_positive_and_boxes_respected() {
    let truth = TrueFunctions::preset("ingarch11").unwrap();
    let sim = simulate(&truth, ModelKind::Ingarch, 120, 2).unwrap();
    let config = SamplerConfig {
        n_iter: 1000,
        n_burnin: 500,
        ..Default::default()
    };
    let fit = run_chain(&ModelSpec::ingarch(1, 1), &sim.series, &config).unwrap();
    assert_eq!(fit.chains[0].blocks, ["beta", "memory", "lambda0"]);
    for s in fit.states() {
        assert!(s.lambda0().unwrap() > 0.0);
        s.validate().unwrap();
    }
}
