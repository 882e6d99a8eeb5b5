//! Repeated seeded experiments comparing an unmitigated model with a tuned
//! one on identical splits.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::{fit, predict, ClassifierConfig};
use crate::cot::{cot_multi, cot_opt, cot_phi, OptConfig, TuneMethod, TuneSummary};
use crate::fairea::{build_all_baselines, classify, BaselineConfig, TradeoffPoint, TradeoffRegion};
use crate::metrics::{evaluate, group_fairness, performance, FairnessMetric, MetricsBundle, PerformanceMetric};
use crate::stats::{compare, TestResult};
use crate::tabular::{load_csv, split_indices, Dataset, Schema};
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Original,
    #[serde(alias = "phi")]
    CotPhi,
    #[serde(alias = "opt")]
    CotOpt,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Original => "original",
            Self::CotPhi => "phi",
            Self::CotOpt => "opt",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "original" => Ok(Self::Original),
            "phi" | "cot_phi" | "cot-phi" => Ok(Self::CotPhi),
            "opt" | "cot_opt" | "cot-opt" => Ok(Self::CotOpt),
            _ => Err(Error::Config(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data_path: Option<PathBuf>,
    pub schema_path: Option<PathBuf>,
    pub method: Method,
    /// Attributes to tune and evaluate; the first one drives the
    /// single-attribute metrics and the trade-off baseline.
    pub attrs: Vec<String>,
    pub runs: usize,
    /// Run `i` uses seed `seed_base + i` for splitting, tuning and baselines.
    pub seed_base: u64,
    pub train_fraction: f64,
    pub classifier: ClassifierConfig,
    pub opt: OptConfig,
    pub baseline: BaselineConfig,
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data_path: None,
            schema_path: None,
            method: Method::Original,
            attrs: Vec::new(),
            runs: 20,
            seed_base: 0,
            train_fraction: 0.7,
            classifier: ClassifierConfig::default(),
            opt: OptConfig::default(),
            baseline: BaselineConfig::default(),
            output_path: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.attrs.is_empty() {
            return Err(Error::Config("at least one attribute is required".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction {} not in (0, 1)",
                self.train_fraction
            )));
        }
        self.classifier.validate()?;
        self.opt.pso.validate()
    }
}

/// Per-attribute tuning outcome without the flipped row list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningRecord {
    pub attribute: String,
    pub flips: usize,
    pub proportion_applied: f64,
    pub phi_before: Option<f64>,
    pub phi_after: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_loss: Option<f64>,
}

impl From<&TuneSummary> for TuningRecord {
    fn from(s: &TuneSummary) -> Self {
        Self {
            attribute: s.attribute.clone(),
            flips: s.flips(),
            proportion_applied: s.proportion_applied,
            phi_before: s.phi_before,
            phi_after: s.phi_after,
            best_loss: s.search.as_ref().map(|x| x.best_loss),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRecord {
    pub fairness_metric: FairnessMetric,
    pub performance_metric: PerformanceMetric,
    pub fairness: f64,
    pub performance: f64,
    pub region: TradeoffRegion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_index: usize,
    pub seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
    pub original: MetricsBundle,
    pub method: MetricsBundle,
    pub tuning: Vec<TuningRecord>,
    pub tradeoff: Vec<TradeoffRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateEntry {
    pub metric: String,
    pub original_mean: f64,
    pub method_mean: f64,
    pub absolute_change: f64,
    /// `(method - original) / original`, or the absolute change when the
    /// original mean is zero (see `relative_is_absolute`).
    pub relative_change: f64,
    pub relative_is_absolute: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub metrics: Vec<AggregateEntry>,
    /// `"<fairness>-<performance>"` to region name to run count.
    pub regions: BTreeMap<String, BTreeMap<String, usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTest {
    pub metric: String,
    #[serde(flatten)]
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistics {
    /// Set when fewer than two runs exist; `tests` is then empty.
    pub insufficient_sample: bool,
    pub tests: Vec<MetricTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub cotune: String,
    pub report_format: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            cotune: env!("CARGO_PKG_VERSION").to_string(),
            report_format: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config_echo: ExperimentConfig,
    pub per_run: Vec<RunRecord>,
    pub aggregate: Aggregate,
    pub statistics: Statistics,
    pub versions: Versions,
}

/// One run plus the split it used, for auditing.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    /// Training data after the method was applied.
    pub tuned_train: Dataset,
}

/// Loads the data named in `cfg` and runs the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let schema_path = cfg
        .schema_path
        .as_ref()
        .ok_or_else(|| Error::Config("schema_path is required".into()))?;
    let data_path = cfg
        .data_path
        .as_ref()
        .ok_or_else(|| Error::Config("data_path is required".into()))?;
    let schema = Schema::from_json_file(schema_path)?;
    let data = load_csv(data_path, &schema)?;
    run_experiment_on(&data, cfg)
}

/// Runs the experiment on an in-memory dataset.
pub fn run_experiment_on(data: &Dataset, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    for a in &cfg.attrs {
        data.schema().sensitive_index(a)?;
    }
    let per_run = par::map_indexed(cfg.runs, |i| run_once(data, cfg, i).map(|o| o.record))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate(&per_run);
    let statistics = statistics(&per_run)?;
    Ok(ExperimentReport {
        config_echo: cfg.clone(),
        per_run,
        aggregate,
        statistics,
        versions: Versions::default(),
    })
}

/// Run `run_index` of the experiment.
pub fn run_once(data: &Dataset, cfg: &ExperimentConfig, run_index: usize) -> Result<RunOutcome> {
    let seed = cfg.seed_base + run_index as u64;
    let stage = |name: &'static str| move |e: Error| e.context(format!("run {run_index}: {name}"));

    let (train_idx, test_idx) = split_indices(data.n_rows(), cfg.train_fraction, seed).map_err(stage("split"))?;
    let train = data.select(&train_idx).map_err(stage("split"))?;
    let test = data.select(&test_idx).map_err(stage("split"))?;

    let base_model = fit(&train, &cfg.classifier, seed).map_err(stage("fitting original"))?;
    let base_pred = predict(&base_model, &test).map_err(stage("predicting original"))?;
    let original = evaluate(&test, &base_pred, &cfg.attrs).map_err(stage("evaluating original"))?;

    let (tuned, stages) = match cfg.method {
        Method::Original => (train.clone(), Vec::new()),
        Method::CotPhi | Method::CotOpt => {
            let opt = OptConfig {
                classifier: cfg.classifier.clone(),
                ..cfg.opt.clone()
            };
            if cfg.attrs.len() == 1 {
                let r = if cfg.method == Method::CotPhi {
                    cot_phi(&train, &cfg.attrs[0], seed)
                } else {
                    cot_opt(&train, &cfg.attrs[0], &opt, seed)
                }
                .map_err(stage("tuning"))?;
                (r.dataset, vec![r.summary])
            } else {
                let method = if cfg.method == Method::CotPhi {
                    TuneMethod::Phi
                } else {
                    TuneMethod::Opt
                };
                let r = cot_multi(&train, &cfg.attrs, method, &opt, seed).map_err(stage("tuning"))?;
                (r.dataset, r.stages)
            }
        }
    };

    let (method_pred, method) = if cfg.method == Method::Original {
        (base_pred.clone(), original.clone())
    } else {
        let model = fit(&tuned, &cfg.classifier, seed).map_err(stage("fitting tuned"))?;
        let pred = predict(&model, &test).map_err(stage("predicting tuned"))?;
        let m = evaluate(&test, &pred, &cfg.attrs).map_err(stage("evaluating tuned"))?;
        (pred, m)
    };

    let a = test.sensitive(&cfg.attrs[0])?;
    let curves = build_all_baselines(
        test.labels(),
        &base_pred,
        a,
        &cfg.baseline.rates,
        cfg.baseline.repeats,
        seed,
    )
    .map_err(stage("baseline"))?;
    let group = group_fairness(test.labels(), &method_pred, a).map_err(stage("baseline"))?;
    let perf = performance(test.labels(), &method_pred).map_err(stage("baseline"))?;
    let tradeoff = curves
        .iter()
        .map(|(fm, pm, curve)| {
            let point = TradeoffPoint {
                fairness: fm.of(&group),
                performance: pm.of(&perf),
            };
            TradeoffRecord {
                fairness_metric: *fm,
                performance_metric: *pm,
                fairness: point.fairness,
                performance: point.performance,
                region: classify(point, curve),
            }
        })
        .collect();

    Ok(RunOutcome {
        record: RunRecord {
            run_index,
            seed,
            train_rows: train.n_rows(),
            test_rows: test.n_rows(),
            original,
            method,
            tuning: stages.iter().map(TuningRecord::from).collect(),
            tradeoff,
        },
        train_indices: train_idx,
        test_indices: test_idx,
        tuned_train: tuned,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn column(runs: &[RunRecord], metric: &str, method: bool) -> Vec<f64> {
    runs.iter()
        .map(|r| {
            let b = if method { &r.method } else { &r.original };
            b.named_values()
                .into_iter()
                .find(|(n, _)| *n == metric)
                .map_or(f64::NAN, |(_, v)| v)
        })
        .collect()
}

fn aggregate(runs: &[RunRecord]) -> Aggregate {
    let names: Vec<&str> = runs[0].original.named_values().into_iter().map(|(n, _)| n).collect();
    let metrics = names
        .into_iter()
        .map(|name| {
            let o = mean(&column(runs, name, false));
            let m = mean(&column(runs, name, true));
            let absolute = m - o;
            let (relative, flagged) = if o == 0.0 {
                (absolute, true)
            } else {
                (absolute / o, false)
            };
            AggregateEntry {
                metric: name.to_string(),
                original_mean: o,
                method_mean: m,
                absolute_change: absolute,
                relative_change: relative,
                relative_is_absolute: flagged,
            }
        })
        .collect();

    let mut regions: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for r in runs {
        for t in &r.tradeoff {
            let key = format!("{}-{}", t.fairness_metric, t.performance_metric);
            let counts = regions.entry(key).or_insert_with(|| {
                TradeoffRegion::ALL.iter().map(|g| (g.name().to_string(), 0)).collect()
            });
            *counts.get_mut(t.region.name()).expect("all regions present") += 1;
        }
    }
    Aggregate { metrics, regions }
}

/// Fairness metrics compared between original and method runs.
pub fn tested_metrics(runs: &[RunRecord]) -> Vec<&'static str> {
    let mut out = vec!["spd", "aod", "eod"];
    if runs.first().is_some_and(|r| r.original.ispd.is_some()) {
        out.extend(["ispd", "iaod", "ieod"]);
    }
    out
}

fn statistics(runs: &[RunRecord]) -> Result<Statistics> {
    if runs.len() < 2 {
        return Ok(Statistics {
            insufficient_sample: true,
            tests: Vec::new(),
        });
    }
    let tests = tested_metrics(runs)
        .into_iter()
        .map(|name| {
            Ok(MetricTest {
                metric: name.to_string(),
                result: compare(&column(runs, name, false), &column(runs, name, true))?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Statistics {
        insufficient_sample: false,
        tests,
    })
}
