use tvcount::inference::{default_grid, fitted_intensity, summarize_derivative, summarize_function, FunctionSelector};
use tvcount::model::{eval_ar_coef, eval_ch_coef, eval_mu, ModelKind, ModelSpec};
use tvcount::sampler::{run_chain, FitResult, SamplerConfig};
use tvcount::simgen::{simulate, TrueFunctions};

fn fit_ar1(len: usize) -> (TrueFunctions, FitResult) {
    let truth = TrueFunctions::preset("ar1").unwrap();
    let sim = simulate(&truth, ModelKind::Ar, len, 1).unwrap();
    let fit = run_chain(&ModelSpec::ar(1), &sim.series, &SamplerConfig::default()).unwrap();
    (truth, fit)
}

#[test]
fn ar1_recovery_bands_and_derivative() {
    let (truth, big) = fit_ar1(1000);
    let grid = default_grid(1000);

    let mu = summarize_function(&big, FunctionSelector::Mu, &grid).unwrap();
    let a1 = summarize_function(&big, FunctionSelector::Ar(1), &grid).unwrap();
    let cov_mu = mu.coverage(|x| (truth.mu)(x));
    let cov_a1 = a1.coverage(|x| (truth.ar[0])(x));
    assert!(cov_mu >= 0.8, "mu coverage {cov_mu}");
    assert!(cov_a1 >= 0.8, "a_1 coverage {cov_a1}");
    for s in [&mu, &a1] {
        for i in 0..grid.len() {
            assert!(s.lower[i] <= s.mean[i] && s.mean[i] <= s.upper[i], "{} at {}", s.which, grid[i]);
        }
    }

    // The true mean is a bump symmetric about 0.5, so the fitted slope
    // should flip sign once near the middle.
    let fine: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let d = summarize_derivative(&big, &fine).unwrap();
    let at = |x: f64| d.mean[(x * 200.0).round() as usize];
    assert!(at(0.3) > 0.0 && at(0.7) < 0.0);
    let crossings: Vec<f64> = (1..fine.len())
        .filter(|&i| (0.2..=0.8).contains(&fine[i]) && d.mean[i - 1] > 0.0 && d.mean[i] <= 0.0)
        .map(|i| fine[i])
        .collect();
    assert_eq!(crossings.len(), 1, "crossings {crossings:?}");
    assert!((crossings[0] - 0.5).abs() < 0.1, "sign change at {}", crossings[0]);

    // Bands tighten with more data.
    let (_, small) = fit_ar1(100);
    let mu_small = summarize_function(&small, FunctionSelector::Mu, &grid).unwrap();
    assert!(
        mu_small.median_band_width() > mu.median_band_width(),
        "T=100 width {} vs T=1000 width {}",
        mu_small.median_band_width(),
        mu.median_band_width()
    );
}

#[test]
fn ingarch_fitted_intensity_matches_brute_force_average() {
    let truth = TrueFunctions::preset("ingarch11").unwrap();
    let sim = simulate(&truth, ModelKind::Ingarch, 80, 5).unwrap();
    let spec = ModelSpec::ingarch(1, 1);
    let config = SamplerConfig {
        n_iter: 400,
        n_burnin: 200,
        ..Default::default()
    };
    let fit = run_chain(&spec, &sim.series, &config).unwrap();
    let got = fitted_intensity(&fit, &sim.series).unwrap();

    let x = sim.series.values();
    let n = x.len();
    let mut want = vec![0.0; n];
    for s in fit.states() {
        // lambda at t = 0 is the sampled start value; counts before t = 1 are zero.
        let mut prev_lambda = s.lambda0().unwrap();
        let mut prev_x = 0.0;
        for t in 1..=n {
            let u = t as f64 / n as f64;
            let lam = eval_mu(s, &spec, u).unwrap()
                + eval_ar_coef(s, &spec, 1, u).unwrap() * prev_x
                + eval_ch_coef(s, &spec, 1, u).unwrap() * prev_lambda;
            want[t - 1] += lam / fit.len() as f64;
            prev_lambda = lam;
            prev_x = x[t - 1] as f64;
        }
    }
    for t in 0..n {
        assert!(
            (got[t] - want[t]).abs() <= 1e-10 * want[t].abs().max(1.0),
            "t={}: {} vs {}",
            t + 1,
            got[t],
            want[t]
        );
    }
}
