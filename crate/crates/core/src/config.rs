//! Flat run configuration shared by the config file and the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{parse_date, ColumnNames, CountFormat, LoadOptions};
use crate::model::{Hyperparameters, ModelKind, ModelSpec};
use crate::sampler::{BlockScheme, BoundaryRule, SamplerConfig};
use crate::spline::{SplineBasis, DEFAULT_DEGREE, DEFAULT_KNOTS};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "TVCOUNT_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "tvcount-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub p: usize,
    pub q: usize,
    pub degree: usize,
    pub knots: usize,
    pub c1: f64,
    pub c2: f64,
    pub d1: f64,

    pub n_iter: usize,
    pub n_burnin: usize,
    pub n_leapfrog: usize,
    pub step_size: f64,
    pub adapt_interval: usize,
    pub accept_low: f64,
    pub accept_high: f64,
    pub shrink: f64,
    pub grow: f64,
    pub damping: bool,
    pub block_scheme: BlockScheme,
    pub boundary: BoundaryRule,
    pub seed: u64,
    pub chains: usize,

    pub input: Option<PathBuf>,
    pub region: Option<String>,
    pub date_from: Option<String>,
    pub date_to: Option<String>,
    pub format: CountFormat,
    pub date_column: String,
    pub region_column: String,
    pub count_column: String,

    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let h = Hyperparameters::default();
        let s = SamplerConfig::default();
        let c = ColumnNames::default();
        RunConfig {
            model: ModelKind::Ar,
            p: 1,
            q: 0,
            degree: DEFAULT_DEGREE,
            knots: DEFAULT_KNOTS,
            c1: h.c1,
            c2: h.c2,
            d1: h.d1,
            n_iter: s.n_iter,
            n_burnin: s.n_burnin,
            n_leapfrog: s.n_leapfrog,
            step_size: s.step_size_init,
            adapt_interval: s.adapt_interval,
            accept_low: s.target_accept.0,
            accept_high: s.target_accept.1,
            shrink: s.shrink,
            grow: s.grow,
            damping: s.damping,
            block_scheme: s.block_scheme,
            boundary: s.boundary,
            seed: s.seed,
            chains: 1,
            input: None,
            region: None,
            date_from: None,
            date_to: None,
            format: CountFormat::Auto,
            date_column: c.date,
            region_column: c.region,
            count_column: c.count,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let basis = SplineBasis::new(self.degree, self.knots)?;
        let hyper = Hyperparameters {
            c1: self.c1,
            c2: self.c2,
            d1: self.d1,
        };
        ModelSpec::new(self.model, self.p, self.q, basis, hyper)
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        let s = SamplerConfig {
            n_leapfrog: self.n_leapfrog,
            step_size_init: self.step_size,
            target_accept: (self.accept_low, self.accept_high),
            adapt_interval: self.adapt_interval,
            shrink: self.shrink,
            grow: self.grow,
            damping: self.damping,
            n_iter: self.n_iter,
            n_burnin: self.n_burnin,
            seed: self.seed,
            block_scheme: self.block_scheme,
            boundary: self.boundary,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn load_options(&self) -> Result<LoadOptions> {
        let date = |s: &Option<String>| s.as_deref().map(parse_date).transpose();
        Ok(LoadOptions {
            region: self.region.clone(),
            date_range: (date(&self.date_from)?, date(&self.date_to)?),
            format: self.format,
            columns: ColumnNames {
                date: self.date_column.clone(),
                region: self.region_column.clone(),
                count: self.count_column.clone(),
            },
        })
    }

    /// Explicit setting, then the environment, then a fixed fallback.
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR))
    }

    pub fn validate(&self) -> Result<()> {
        self.model_spec()?;
        self.sampler_config()?;
        self.load_options()?;
        if self.chains == 0 {
            return Err(Error::Config("chains must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_settings() {
        let c = RunConfig::default();
        assert_eq!((c.c1, c.c2, c.d1), (100.0, 100.0, 0.1));
        assert_eq!((c.n_iter, c.n_burnin, c.n_leapfrog), (10_000, 5_000, 30));
        assert_eq!(c.knots, 6);
        let spec = c.model_spec().unwrap();
        assert_eq!(spec.mu_basis.len(), 8);
        c.validate().unwrap();
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"model": "ingarch", "p": 1, "q": 1, "seed": 9}"#).unwrap();
        assert_eq!(c.model, ModelKind::Ingarch);
        assert_eq!(c.seed, 9);
        assert_eq!(c.n_iter, 10_000);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let c = RunConfig {
            q: 2,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = RunConfig {
            n_burnin: 20_000,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = RunConfig {
            date_from: Some("yesterday".into()),
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = RunConfig {
            chains: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
