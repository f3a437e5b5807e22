//! Synthetic count series drawn from known coefficient curves.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::model::{CountSeries, ModelKind};

pub type Curve = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Ground-truth `μ`, `a_i` and `b_k` curves on `[0, 1]`.
#[derive(Clone)]
pub struct TrueFunctions {
    pub name: String,
    pub mu: Curve,
    pub ar: Vec<Curve>,
    pub ch: Vec<Curve>,
}

impl fmt::Debug for TrueFunctions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrueFunctions")
            .field("name", &self.name)
            .field("p", &self.ar.len())
            .field("q", &self.ch.len())
            .finish()
    }
}

fn curve(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Curve {
    Arc::new(f)
}

fn bump(height: f64) -> Curve {
    curve(move |x: f64| height * (-(x - 0.5).powi(2) / 0.1).exp())
}

pub const PRESETS: [&str; 3] = ["ar1", "ar2", "ingarch11"];

impl TrueFunctions {
    /// Named simulation designs:
    ///
    /// * `ar1`: `μ(x) = 10 exp(−(x−0.5)²/0.1)`, `a_1(x) = 0.3(x−1)² + 0.1`
    /// * `ar2`: as `ar1` plus `a_2(x) = 0.4x² + 0.1`
    /// * `ingarch11`: `μ(x) = 25 exp(−(x−0.5)²/0.1)`, `a_1(x) = 0.4x² + 0.1`,
    ///   `b_1(x) = 0.1 sin(πx) + 0.2`
    pub fn preset(name: &str) -> Result<Self> {
        let a_lag1 = || curve(|x: f64| 0.3 * (x - 1.0).powi(2) + 0.1);
        let a_quad = || curve(|x: f64| 0.4 * x * x + 0.1);
        let t = match name {
            "ar1" => TrueFunctions {
                name: name.into(),
                mu: bump(10.0),
                ar: vec![a_lag1()],
                ch: vec![],
            },
            "ar2" => TrueFunctions {
                name: name.into(),
                mu: bump(10.0),
                ar: vec![a_lag1(), a_quad()],
                ch: vec![],
            },
            "ingarch11" => TrueFunctions {
                name: name.into(),
                mu: bump(25.0),
                ar: vec![a_quad()],
                ch: vec![curve(|x: f64| 0.1 * (PI * x).sin() + 0.2)],
            },
            other => return Err(Error::UnknownFunction(other.to_string())),
        };
        Ok(t)
    }

    /// Constant curves, mostly for tests.
    pub fn constant(mu: f64, ar: &[f64], ch: &[f64]) -> Self {
        TrueFunctions {
            name: "constant".into(),
            mu: curve(move |_| mu),
            ar: ar.iter().map(|&a| curve(move |_| a)).collect(),
            ch: ch.iter().map(|&b| curve(move |_| b)).collect(),
        }
    }

    /// The matching preset when there is one, otherwise a smooth design that
    /// splits a memory budget of 0.6 evenly over the lags.
    pub fn for_orders(kind: ModelKind, p: usize, q: usize) -> Self {
        let preset = match (kind, p, q) {
            (ModelKind::Ar, 1, 0) => Some("ar1"),
            (ModelKind::Ar, 2, 0) => Some("ar2"),
            (ModelKind::Ingarch, 1, 1) => Some("ingarch11"),
            _ => None,
        };
        if let Some(name) = preset {
            return Self::preset(name).expect("known preset");
        }
        let share = 0.6 / (p + q).max(1) as f64;
        TrueFunctions {
            name: format!("{kind}{p}{q}"),
            mu: bump(10.0),
            ar: (0..p).map(|_| curve(move |x: f64| share * (0.5 + 0.5 * x))).collect(),
            ch: (0..q)
                .map(|_| curve(move |x: f64| share * (0.6 + 0.4 * (PI * x).sin())))
                .collect(),
        }
    }

    pub fn p(&self) -> usize {
        self.ar.len()
    }

    pub fn q(&self) -> usize {
        self.ch.len()
    }

    /// Checks `μ > 0`, `0 ≤ a_i, b_k ≤ 1` and `Σ a_i + Σ b_k < 1` on a
    /// 1001-point grid.
    pub fn validate(&self) -> Result<()> {
        for g in 0..=1000 {
            let x = g as f64 / 1000.0;
            let mu = (self.mu)(x);
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::InvalidTruth(format!("mu({x}) = {mu}")));
            }
            let mut total = 0.0;
            for c in self.ar.iter().chain(&self.ch) {
                let v = c(x);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidTruth(format!("coefficient {v} at x = {x}")));
                }
                total += v;
            }
            if total >= 1.0 {
                return Err(Error::InvalidTruth(format!("memory sum {total} at x = {x}")));
            }
        }
        Ok(())
    }
}

/// A simulated series with its true intensity path.
#[derive(Debug, Clone)]
pub struct SimulatedSeries {
    pub series: CountSeries,
    pub lambda: Vec<f64>,
}

/// Draws `X_t ~ Poisson(λ_t)` sequentially, starting the recursion cold
/// (all pre-sample counts and intensities zero).
pub fn simulate(truth: &TrueFunctions, kind: ModelKind, len: usize, seed: u64) -> Result<SimulatedSeries> {
    if len == 0 {
        return Err(Error::InvalidSpec("series length must be at least 1".into()));
    }
    if kind == ModelKind::Ar && truth.q() > 0 {
        return Err(Error::InvalidTruth("AR model cannot carry feedback curves".into()));
    }
    truth.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(len);
    let mut lambda: Vec<f64> = Vec::with_capacity(len);
    for t in 1..=len {
        let r = t as f64 / len as f64;
        let mut l = (truth.mu)(r);
        for (i, a) in truth.ar.iter().enumerate() {
            if t > i + 1 {
                l += a(r) * x[t - i - 2] as f64;
            }
        }
        for (k, b) in truth.ch.iter().enumerate() {
            if t > k + 1 {
                l += b(r) * lambda[t - k - 2];
            }
        }
        let draw: f64 = Poisson::new(l)
            .map_err(|e| Error::InvalidTruth(format!("intensity {l}: {e}")))?
            .sample(&mut rng);
        x.push(draw as u64);
        lambda.push(l);
    }
    Ok(SimulatedSeries {
        series: CountSeries::new(x)?,
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_values_at_half() {
        let ar1 = TrueFunctions::preset("ar1").unwrap();
        assert!(((ar1.mu)(0.5) - 10.0).abs() < 1e-12);
        assert!(((ar1.ar[0])(0.5) - 0.175).abs() < 1e-12);
        let ig = TrueFunctions::preset("ingarch11").unwrap();
        assert!(((ig.ch[0])(0.5) - 0.3).abs() < 1e-12);
        assert!(((ig.mu)(0.5) - 25.0).abs() < 1e-12);
        let ar2 = TrueFunctions::preset("ar2").unwrap();
        assert!(((ar2.ar[1])(0.5) - 0.2).abs() < 1e-12);
        assert!(TrueFunctions::preset("garma").is_err());
    }

    #[test]
    fn presets_satisfy_constraints() {
        for name in PRESETS {
            TrueFunctions::preset(name).unwrap().validate().unwrap();
        }
        for (p, q) in [(0, 0), (3, 0), (2, 2), (0, 1)] {
            let kind = if q == 0 { ModelKind::Ar } else { ModelKind::Ingarch };
            TrueFunctions::for_orders(kind, p, q).validate().unwrap();
        }
    }

    #[test]
    fn invalid_truth_rejected() {
        let zero_mu = TrueFunctions::constant(0.0, &[], &[]);
        assert!(matches!(simulate(&zero_mu, ModelKind::Ar, 10, 1), Err(Error::InvalidTruth(_))));
        let explosive = TrueFunctions::constant(1.0, &[0.6], &[0.5]);
        assert!(simulate(&explosive, ModelKind::Ingarch, 10, 1).is_err());
        let ok = TrueFunctions::constant(1.0, &[0.3], &[0.3]);
        assert!(simulate(&ok, ModelKind::Ar, 10, 1).is_err());
        assert!(simulate(&ok, ModelKind::Ingarch, 0, 1).is_err());
    }

    #[test]
    fn iid_poisson_mean() {
        let t = TrueFunctions::constant(5.0, &[], &[]);
        let sim = simulate(&t, ModelKind::Ar, 10_000, 42).unwrap();
        let mean = sim.series.mean();
        // 3σ for the mean of 10 000 Poisson(5) draws.
        let sigma = (5.0f64 / 10_000.0).sqrt();
        assert!((mean - 5.0).abs() < 3.0 * sigma, "mean {mean}");
        assert!(sim.lambda.iter().all(|&l| l == 5.0));
    }

    #[test]
    fn seed_determinism() {
        let t = TrueFunctions::preset("ingarch11").unwrap();
        let a = simulate(&t, ModelKind::Ingarch, 300, 7).unwrap();
        let b = simulate(&t, ModelKind::Ingarch, 300, 7).unwrap();
        let c = simulate(&t, ModelKind::Ingarch, 300, 8).unwrap();
        assert_eq!(a.series, b.series);
        assert_eq!(a.lambda, b.lambda);
        assert_ne!(a.series, c.series);
    }

    #[test]
    fn lambda_follows_recursion() {
        let t = TrueFunctions::constant(2.0, &[0.25], &[0.5]);
        let sim = simulate(&t, ModelKind::Ingarch, 50, 3).unwrap();
        let x = sim.series.values();
        assert_eq!(sim.lambda[0], 2.0);
        for i in 1..50 {
            let want = 2.0 + 0.25 * x[i - 1] as f64 + 0.5 * sim.lambda[i - 1];
            assert!((sim.lambda[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn replication_means_track_true_lambda() {
        // Small T, many replications: per-time mean of X_t within 3σ of λ_t.
        let t = TrueFunctions::preset("ar1").unwrap();
        let len = 8;
        let reps = 1000;
        let lambda = simulate(&t, ModelKind::Ar, len, 0).unwrap().lambda;
        let mut sums = vec![0.0; len];
        let mut sq = vec![0.0; len];
        for r in 0..reps {
            let s = simulate(&t, ModelKind::Ar, len, 1000 + r).unwrap();
            for (i, &v) in s.series.values().iter().enumerate() {
                sums[i] += v as f64;
                sq[i] += (v as f64).powi(2);
            }
        }
        // λ_1 is deterministic; later λ_t are random, so compare with the
        // mean of the unconditional recursion E[X_t] = μ_t + a_t E[X_{t-1}].
        let mut expect = vec![0.0; len];
        for i in 0..len {
            let r = (i + 1) as f64 / len as f64;
            expect[i] = (t.mu)(r) + if i > 0 { (t.ar[0])(r) * expect[i - 1] } else { 0.0 };
        }
        assert!((expect[0] - lambda[0]).abs() < 1e-12);
        for i in 0..len {
            let m = sums[i] / reps as f64;
            let var = sq[i] / reps as f64 - m * m;
            let se = (var / reps as f64).sqrt();
            assert!((m - expect[i]).abs() < 3.0 * se + 1e-9, "t={i}: {m} vs {}", expect[i]);
        }
    }
}
