//! Count-series ingestion and output artifacts.
//!
//! Two input layouts are understood:
//!
//! * long: one row per observation with `date`, `region` and `count`
//!   columns (names configurable; `date` and `region` optional);
//! * wide: the Johns Hopkins / Kaggle `time_series_covid_19_*.csv` layout
//!   with `Province/State, Country/Region, Lat, Long` followed by one
//!   cumulative column per date. Detected from a `Country/Region` header
//!   together with date-valued headers.
//!
//! Rows sharing a date within the selected region are summed (provinces).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::FunctionSummary;
use crate::model::{CountSeries, ModelSpec, ParamState};
use crate::sampler::{Draw, FitResult};
use crate::simgen::SimulatedSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountFormat {
    /// Wide files are cumulative, long files daily.
    #[default]
    Auto,
    Daily,
    Cumulative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnNames {
    pub date: String,
    pub region: String,
    pub count: String,
}

impl Default for ColumnNames {
    fn default() -> Self {
        ColumnNames {
            date: "date".into(),
            region: "region".into(),
            count: "count".into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub region: Option<String>,
    /// Inclusive date bounds.
    pub date_range: (Option<NaiveDate>, Option<NaiveDate>),
    pub format: CountFormat,
    pub columns: ColumnNames,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputLayout {
    Long,
    Wide,
}

#[derive(Debug, Clone)]
pub struct LoadedSeries {
    pub series: CountSeries,
    pub layout: InputLayout,
    /// Whether the file was differenced from cumulative totals.
    pub differenced: bool,
    /// Output positions where a negative daily difference was clamped to 0.
    pub clamped: Vec<usize>,
}

pub fn parse_date(s: &str) -> Result<NaiveDate> {
    let s = s.trim();
    // chrono reads "20" as the year 20 under %Y, so short years pick %y.
    let short_year = s.contains('/') && s.rsplit('/').next().is_some_and(|y| y.len() == 2);
    let slash = if short_year { "%m/%d/%y" } else { "%m/%d/%Y" };
    for fmt in ["%Y-%m-%d", slash] {
        if let Ok(d) = NaiveDate::parse_from_str(s, fmt) {
            return Ok(d);
        }
    }
    Err(Error::BadDate(s.to_string()))
}

fn parse_count(s: &str) -> Option<f64> {
    let v: f64 = s.trim().parse().ok()?;
    (v.is_finite() && v.fract() == 0.0).then_some(v)
}

struct Raw {
    dates: Vec<Option<String>>,
    values: Vec<f64>,
}

fn read_long(path: &Path, opts: &LoadOptions) -> Result<Raw> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let count_col = col(&opts.columns.count).ok_or_else(|| Error::MissingColumn {
        column: opts.columns.count.clone(),
        path: path.to_path_buf(),
    })?;
    let date_col = col(&opts.columns.date);
    let region_col = col(&opts.columns.region);
    if opts.region.is_some() && region_col.is_none() {
        return Err(Error::MissingColumn {
            column: opts.columns.region.clone(),
            path: path.to_path_buf(),
        });
    }

    let mut order: Vec<Option<String>> = Vec::new();
    let mut totals: Vec<f64> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut regions_seen: Vec<String> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i as u64 + 2, |p| p.line());
        if let Some(rc) = region_col {
            let r = rec.get(rc).unwrap_or("");
            if !regions_seen.iter().any(|s| s == r) {
                regions_seen.push(r.to_string());
            }
            if let Some(want) = &opts.region {
                if r != want {
                    continue;
                }
            }
        }
        let raw = rec.get(count_col).unwrap_or("");
        let v = parse_count(raw).ok_or_else(|| Error::BadRow {
            path: path.to_path_buf(),
            line,
            reason: format!("count `{raw}` is not an integer"),
        })?;
        match date_col.map(|c| rec.get(c).unwrap_or("").to_string()) {
            Some(d) => {
                if let Some(&k) = index.get(&d) {
                    totals[k] += v;
                } else {
                    index.insert(d.clone(), totals.len());
                    order.push(Some(d));
                    totals.push(v);
                }
            }
            None => {
                order.push(None);
                totals.push(v);
            }
        }
    }
    if let Some(want) = &opts.region {
        if !regions_seen.iter().any(|r| r == want) {
            return Err(Error::MissingRegion {
                region: want.clone(),
                path: path.to_path_buf(),
            });
        }
    } else if regions_seen.len() > 1 {
        return Err(Error::Config(format!(
            "{} holds {} regions; select one with --region",
            path.display(),
            regions_seen.len()
        )));
    }
    Ok(Raw {
        dates: order,
        values: totals,
    })
}

fn read_wide(path: &Path, region: Option<&str>) -> Result<Raw> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let country_col = headers.iter().position(|h| h == "Country/Region").expect("checked by caller");
    let province_col = headers.iter().position(|h| h == "Province/State");
    let first_date = headers
        .iter()
        .position(|h| parse_date(h).is_ok())
        .ok_or_else(|| Error::MissingColumn {
            column: "<date columns>".into(),
            path: path.to_path_buf(),
        })?;
    let region = region.ok_or_else(|| Error::Config("wide layout requires --region".into()))?;

    let mut by_province = vec![0.0; headers.len() - first_date];
    let mut by_country = by_province.clone();
    let (mut hit_province, mut hit_country) = (false, false);
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i as u64 + 2, |p| p.line());
        let province = province_col.and_then(|c| rec.get(c)).unwrap_or("");
        let country = rec.get(country_col).unwrap_or("");
        let target = if province == region {
            hit_province = true;
            &mut by_province
        } else if country == region {
            hit_country = true;
            &mut by_country
        } else {
            continue;
        };
        for (j, acc) in target.iter_mut().enumerate() {
            let raw = rec.get(first_date + j).unwrap_or("");
            *acc += parse_count(raw).ok_or_else(|| Error::BadRow {
                path: path.to_path_buf(),
                line,
                reason: format!("count `{raw}` is not an integer"),
            })?;
        }
    }
    let values = match (hit_province, hit_country) {
        (true, _) => by_province,
        (false, true) => by_country,
        (false, false) => {
            return Err(Error::MissingRegion {
                region: region.to_string(),
                path: path.to_path_buf(),
            })
        }
    };
    let dates = headers.iter().skip(first_date).map(|h| Some(h.to_string())).collect();
    Ok(Raw { dates, values })
}

/// Daily increments from cumulative totals; the first row is the anchor.
/// Negative increments are clamped to 0 and their positions reported.
pub fn difference_cumulative(totals: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut out = Vec::with_capacity(totals.len().saturating_sub(1));
    let mut clamped = Vec::new();
    for (i, w) in totals.windows(2).enumerate() {
        let d = w[1] - w[0];
        if d < 0.0 {
            clamped.push(i);
            out.push(0);
        } else {
            out.push(d as u64);
        }
    }
    (out, clamped)
}

/// Loads one region's count series from a long or wide CSV file.
pub fn load_count_series(path: &Path, opts: &LoadOptions) -> Result<LoadedSeries> {
    let headers = csv::ReaderBuilder::new().from_path(path)?.headers()?.clone();
    let wide = headers.iter().any(|h| h.trim() == "Country/Region")
        && headers.iter().any(|h| parse_date(h).is_ok());
    let layout = if wide {
        InputLayout::Wide
    } else {
        InputLayout::Long
    };
    let mut raw = match layout {
        InputLayout::Wide => read_wide(path, opts.region.as_deref())?,
        InputLayout::Long => read_long(path, opts)?,
    };

    // Chronological order when every label is a date.
    let parsed: Option<Vec<NaiveDate>> = raw
        .dates
        .iter()
        .map(|d| d.as_deref().and_then(|s| parse_date(s).ok()))
        .collect();
    let (lo, hi) = opts.date_range;
    if let Some(dates) = parsed {
        let mut idx: Vec<usize> = (0..dates.len()).collect();
        idx.sort_by_key(|&i| dates[i]);
        idx.retain(|&i| lo.is_none_or(|l| dates[i] >= l) && hi.is_none_or(|h| dates[i] <= h));
        raw = Raw {
            dates: idx.iter().map(|&i| raw.dates[i].clone()).collect(),
            values: idx.iter().map(|&i| raw.values[i]).collect(),
        };
    } else if lo.is_some() || hi.is_some() {
        let bad = raw
            .dates
            .iter()
            .find_map(|d| match d {
                Some(s) if parse_date(s).is_err() => Some(s.clone()),
                _ => None,
            })
            .unwrap_or_else(|| "<no date column>".into());
        return Err(Error::BadDate(bad));
    }

    let cumulative = match opts.format {
        CountFormat::Auto => layout == InputLayout::Wide,
        CountFormat::Daily => false,
        CountFormat::Cumulative => true,
    };
    let (values, labels, clamped) = if cumulative {
        let (v, c) = difference_cumulative(&raw.values);
        for &i in &c {
            warn!("negative daily increment at position {} clamped to 0", i + 1);
        }
        (v, raw.dates.into_iter().skip(1).collect::<Vec<_>>(), c)
    } else {
        if let Some(i) = raw.values.iter().position(|&v| v < 0.0) {
            return Err(Error::BadRow {
                path: path.to_path_buf(),
                line: i as u64 + 2,
                reason: "negative daily count".into(),
            });
        }
        (raw.values.iter().map(|&v| v as u64).collect(), raw.dates, Vec::new())
    };
    if values.is_empty() {
        return Err(Error::EmptySelection(path.to_path_buf()));
    }
    let labels: Option<Vec<String>> = labels.into_iter().collect();
    let series = match labels {
        Some(l) => CountSeries::with_labels(values, l)?,
        None => CountSeries::new(values)?,
    };
    Ok(LoadedSeries {
        series,
        layout,
        differenced: cumulative,
        clamped,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes `date,region,count`, using `1..T` when the series has no labels.
pub fn write_series_csv(path: &Path, series: &CountSeries, region: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["date", "region", "count"])?;
    for (i, v) in series.values().iter().enumerate() {
        let date = series.labels().map_or_else(|| (i + 1).to_string(), |l| l[i].clone());
        w.write_record([date, region.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `t,x,count,lambda,mu,a_1..,b_1..` for a simulated series.
pub fn write_truth_csv(path: &Path, sim: &SimulatedSeries, truth: &crate::simgen::TrueFunctions) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["t".to_string(), "x".into(), "count".into(), "lambda".into(), "mu".into()];
    header.extend((1..=truth.p()).map(|i| format!("a_{i}")));
    header.extend((1..=truth.q()).map(|k| format!("b_{k}")));
    w.write_record(&header)?;
    let n = sim.series.len();
    for (i, (&c, &l)) in sim.series.values().iter().zip(&sim.lambda).enumerate() {
        let x = (i + 1) as f64 / n as f64;
        let mut row = vec![(i + 1).to_string(), x.to_string(), c.to_string(), l.to_string(), (truth.mu)(x).to_string()];
        row.extend(truth.ar.iter().chain(&truth.ch).map(|f| f(x).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per retained draw: `chain,iteration,log_posterior,<coordinates>`.
pub fn write_draws_csv(path: &Path, fit: &FitResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["chain".to_string(), "iteration".into(), "log_posterior".into()];
    header.extend(fit.spec.layout().names());
    w.write_record(&header)?;
    for d in &fit.draws {
        let mut row = vec![d.chain.to_string(), d.iteration.to_string(), d.log_posterior.to_string()];
        row.extend(d.state.as_flat().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_draws_csv(path: &Path, spec: &ModelSpec) -> Result<FitResult> {
    let layout = spec.layout();
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let names = layout.names();
    if headers.len() != names.len() + 3 || headers.iter().skip(3).zip(&names).any(|(h, n)| h != n) {
        return Err(Error::Config(format!(
            "{} does not match the model layout",
            path.display()
        )));
    }
    let mut draws = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |reason: String| Error::BadRow {
            path: path.to_path_buf(),
            line: i as u64 + 2,
            reason,
        };
        let nums: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| bad(e.to_string())))
            .collect::<Result<_>>()?;
        let state = ParamState::from_flat(layout, nums[3..].to_vec()).map_err(|e| bad(e.to_string()))?;
        draws.push(Draw {
            chain: nums[0] as usize,
            iteration: nums[1] as usize,
            log_posterior: nums[2],
            state,
        });
    }
    let mut fit = FitResult::from_states(spec.clone(), Vec::new());
    fit.draws = draws;
    Ok(fit)
}

/// Writes `x,mean,lower,upper`.
pub fn write_summary_csv(path: &Path, summary: &FunctionSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["x", "mean", "lower", "upper"])?;
    for i in 0..summary.grid.len() {
        w.write_record([
            summary.grid[i].to_string(),
            summary.mean[i].to_string(),
            summary.lower[i].to_string(),
            summary.upper[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `t,date,count,lambda_hat`.
pub fn write_intensity_csv(path: &Path, series: &CountSeries, lambda_hat: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["t", "date", "count", "lambda_hat"])?;
    for (i, (c, l)) in series.values().iter().zip(lambda_hat).enumerate() {
        let date = series.labels().map_or_else(String::new, |l| l[i].clone());
        w.write_record([(i + 1).to_string(), date, c.to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Paths of the artifacts produced by a fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitArtifacts {
    pub draws: PathBuf,
    pub summaries: Vec<PathBuf>,
    pub intensity: PathBuf,
    pub report: PathBuf,
}
