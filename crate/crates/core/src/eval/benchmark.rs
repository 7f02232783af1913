use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ari;
use crate::data::{load_dataset, make_blobs, normalize, sample_constraints, CsvFormat, Dataset, Normalization};
use crate::error::{Error, Result};
use crate::lsmi::{LsmiConfig, DEFAULT_CENTER_CAP, DEFAULT_FOLDS};
use crate::model_select::{grid_search, SearchGrid};
use crate::solver::{cluster, SolverParams};

/// Number of links per run: an absolute count, or a fraction of the
/// `n(n-1)/2` sample pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LinkCount {
    Count(u64),
    Fraction(f64),
}

impl LinkCount {
    pub fn resolve(self, n: usize) -> Result<usize> {
        let available = n * n.saturating_sub(1) / 2;
        let count = match self {
            LinkCount::Count(k) => k as usize,
            LinkCount::Fraction(f) => {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::InvalidParameter(format!("link fraction {f} outside [0, 1]")));
                }
                (f * available as f64).round() as usize
            }
        };
        if count > available {
            return Err(Error::TooManyLinks {
                requested: count,
                available,
            });
        }
        Ok(count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    Blobs {
        n_per_class: usize,
        classes: usize,
        dim: usize,
        separation: f64,
        #[serde(default)]
        seed: u64,
    },
}

/// Where the benchmark data comes from. Files must be labeled CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    File {
        path: PathBuf,
        #[serde(default)]
        normalize: Normalization,
    },
    Generated { generator: Generator },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    pub t: usize,
    pub gamma: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchLsmi {
    pub center_cap: usize,
    pub folds: usize,
}

impl Default for BenchLsmi {
    fn default() -> Self {
        Self {
            center_cap: DEFAULT_CENTER_CAP,
            folds: DEFAULT_FOLDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub dataset: DatasetSource,
    /// Number of clusters; defaults to the number of label values.
    #[serde(default)]
    pub classes: Option<usize>,
    pub link_counts: Vec<LinkCount>,
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grids: SearchGrid,
    /// Skip model selection and use these hyperparameters for every run.
    #[serde(default)]
    pub fixed: Option<FixedParams>,
    #[serde(default)]
    pub lsmi: BenchLsmi,
}

impl BenchmarkConfig {
    /// Reads a JSON config; relative dataset paths are taken relative to the
    /// config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        if let DatasetSource::File { path: data, .. } = &mut cfg.dataset {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(cfg)
    }

    pub fn method(&self) -> &'static str {
        if self.fixed.is_some() {
            "3smic-fixed"
        } else {
            "3smic"
        }
    }

    fn dataset(&self) -> Result<Dataset> {
        match &self.dataset {
            DatasetSource::File { path, normalize: scheme } => {
                Ok(normalize(&load_dataset(path, CsvFormat::Labeled)?, *scheme))
            }
            DatasetSource::Generated {
                generator:
                    Generator::Blobs {
                        n_per_class,
                        classes,
                        dim,
                        separation,
                        seed,
                    },
            } => make_blobs(*n_per_class, *classes, *dim, *separation, *seed),
        }
    }
}

/// One clustering run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub links: usize,
    pub run: usize,
    pub seed: u64,
    pub ari: f64,
    pub params: SolverParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub links: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub method: String,
    pub points: Vec<SeriesPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub dataset: String,
    pub n: usize,
    pub classes: usize,
    pub link_counts: Vec<usize>,
    pub seeds: Vec<u64>,
    pub series: Vec<SeriesSummary>,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
    pub config: BenchmarkConfig,
}

impl BenchmarkReport {
    /// Long format: `dataset,method,links,run,seed,ari`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "dataset,method,links,run,seed,ari")?;
        let method = self.config.method();
        for r in &self.records {
            writeln!(out, "{},{method},{},{},{},{}", self.dataset, r.links, r.run + 1, r.seed, r.ari)?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn one_run(ds: &Dataset, truth: &[usize], c: usize, links: usize, seed: u64, cfg: &BenchmarkConfig) -> Result<(f64, SolverParams)> {
    let cs = sample_constraints(truth, links, seed)?;
    let (labels, params) = match cfg.fixed {
        Some(f) => {
            let params = SolverParams {
                t: f.t,
                gamma: f.gamma,
                eta: f.eta,
            };
            (cluster(ds, &cs, &params, c)?.labels, params)
        }
        None => {
            let lsmi = LsmiConfig {
                folds: cfg.lsmi.folds,
                center_cap: cfg.lsmi.center_cap,
                seed,
                ..LsmiConfig::default()
            };
            let out = grid_search(ds, &cs, c, &cfg.grids, &lsmi)?;
            (out.best.labels, out.best.params)
        }
    };
    Ok((ari(&labels, truth)?, params))
}

/// Runs every (link count, run) pair. Run `r` samples its links with seed
/// `config.seed + r`.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if config.runs == 0 {
        return Err(Error::InvalidParameter("benchmark needs at least one run".into()));
    }
    if config.link_counts.is_empty() {
        return Err(Error::InvalidParameter("link_counts must not be empty".into()));
    }
    let ds = config.dataset()?;
    let truth = ds.labels.clone().ok_or(Error::MissingLabels)?;
    let c = config.classes.or(ds.classes).ok_or(Error::MissingLabels)?;
    let link_counts = config
        .link_counts
        .iter()
        .map(|l| l.resolve(ds.n()))
        .collect::<Result<Vec<_>>>()?;
    let seeds: Vec<u64> = (0..config.runs as u64).map(|r| config.seed.wrapping_add(r)).collect();

    let jobs: Vec<(usize, usize)> = (0..link_counts.len())
        .flat_map(|k| (0..config.runs).map(move |r| (k, r)))
        .collect();
    let outcomes: Vec<Result<(f64, SolverParams)>> = jobs
        .par_iter()
        .map(|&(k, r)| one_run(&ds, &truth, c, link_counts[k], seeds[r], config))
        .collect();

    let mut records = Vec::with_capacity(jobs.len());
    for (&(k, r), outcome) in jobs.iter().zip(outcomes) {
        let (score, params) = outcome?;
        log::info!("links={} run={} ari={score:.4}", link_counts[k], r + 1);
        records.push(RunRecord {
            links: link_counts[k],
            run: r,
            seed: seeds[r],
            ari: score,
            params,
        });
    }
    let points = link_counts
        .iter()
        .enumerate()
        .map(|(k, &links)| {
            let values: Vec<f64> = records[k * config.runs..(k + 1) * config.runs].iter().map(|r| r.ari).collect();
            let (mean, std) = mean_std(&values);
            SeriesPoint {
                links,
                mean,
                std,
                runs: values.len(),
            }
        })
        .collect();
    Ok(BenchmarkReport {
        dataset: config.name.clone().unwrap_or_else(|| ds.name.clone()),
        n: ds.n(),
        classes: c,
        link_counts,
        seeds,
        series: vec![SeriesSummary {
            method: config.method().to_string(),
            points,
        }],
        records,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob_config(runs: usize, links: Vec<LinkCount>) -> BenchmarkConfig {
        BenchmarkConfig {
            name: None,
            dataset: DatasetSource::Generated {
                generator: Generator::Blobs {
                    n_per_class: 20,
                    classes: 2,
                    dim: 2,
                    separation: 6.0,
                    seed: 1,
                },
            },
            classes: None,
            link_counts: links,
            runs,
            seed: 10,
            grids: SearchGrid::default(),
            fixed: Some(FixedParams { t: 5, gamma: 1.0, eta: 1.0 }),
            lsmi: BenchLsmi::default(),
        }
    }

    #[test]
    fn link_counts_parse_as_counts_or_fractions() {
        let v: Vec<LinkCount> = serde_json::from_str("[0, 10, 0.03]").unwrap();
        assert_eq!(v, vec![LinkCount::Count(0), LinkCount::Count(10), LinkCount::Fraction(0.03)]);
        assert_eq!(LinkCount::Fraction(0.03).resolve(200).unwrap(), 597);
        assert!(LinkCount::Count(50).resolve(10).is_err());
        assert!(LinkCount::Fraction(1.5).resolve(10).is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let text = r#"{
            "dataset": {"generator": {"kind": "blobs", "n_per_class": 10, "classes": 2, "dim": 2, "separation": 4.0}},
            "link_counts": [0, 5],
            "runs": 2,
            "grids": {"t": [3]}
        }"#;
        let cfg: BenchmarkConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.grids.t, vec![3]);
        assert_eq!(cfg.grids.gamma.len(), 6);
        assert_eq!(cfg.method(), "3smic");
        let back: BenchmarkConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);

        let file: DatasetSource = serde_json::from_str(r#"{"path": "x.csv", "normalize": "zscore"}"#).unwrap();
        assert_eq!(
            file,
            DatasetSource::File {
                path: "x.csv".into(),
                normalize: Normalization::ZScore
            }
        );
    }

    #[test]
    fn zero_runs_is_an_error() {
        assert!(run_benchmark(&blob_config(0, vec![LinkCount::Count(0)])).is_err());
    }

    #[test]
    fn report_shape_and_reproducibility() {
        let cfg = blob_config(3, vec![LinkCount::Count(0), LinkCount::Count(10)]);
        let a = run_benchmark(&cfg).unwrap();
        let b = run_benchmark(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 6);
        assert_eq!(a.series[0].points.len(), 2);
        assert!(a.series[0].points.iter().all(|p| p.std >= 0.0 && p.runs == 3));
        assert_eq!(a.seeds, vec![10, 11, 12]);
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 7);
    }

    #[test]
    fn zero_links_match_unsupervised_clustering() {
        let cfg = blob_config(1, vec![LinkCount::Count(0)]);
        let report = run_benchmark(&cfg).unwrap();
        let ds = cfg.dataset().unwrap();
        let plain = crate::solver::smic(&ds, 5, 2).unwrap();
        let expected = ari(&plain, ds.labels.as_ref().unwrap()).unwrap();
        assert_eq!(report.records[0].ari, expected);
    }
}
