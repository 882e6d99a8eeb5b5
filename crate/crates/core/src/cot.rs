//! Correlation tuning transforms.
//!
//! All transforms only rewrite sensitive-attribute values of rows with the
//! favorable label; features, labels and row order are never touched. The
//! rows to flip are a prefix of one seeded permutation of the candidate set,
//! so a larger proportion always flips a superset of a smaller one.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, ClassifierConfig, Predictor};
use crate::correlation::{adjustment_count, adjustment_proportion, contingency, phi};
use crate::metrics::{evaluate, MetricsBundle};
use crate::optimizer::{minimize_scalar_anchored, PsoConfig};
use crate::tabular::{split, Dataset};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneDirection {
    /// Privileged favorable rows become unprivileged.
    #[default]
    PrivilegedToUnprivileged,
    /// Unprivileged favorable rows become privileged.
    UnprivilegedToPrivileged,
}

impl TuneDirection {
    fn source_value(self) -> u8 {
        match self {
            Self::PrivilegedToUnprivileged => 1,
            Self::UnprivilegedToPrivileged => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TuneMethod {
    Phi,
    Opt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    #[default]
    Single,
    Intersectional,
}

/// Outcome of the proportion search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub best_proportion: f64,
    pub best_loss: f64,
    pub evaluations: usize,
}

/// What one tuning stage did to one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneSummary {
    pub attribute: String,
    pub direction: TuneDirection,
    /// Sorted row indices whose attribute was flipped.
    pub flipped_indices: Vec<usize>,
    pub proportion_applied: f64,
    /// `None` when a group or label class is empty.
    pub phi_before: Option<f64>,
    pub phi_after: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSummary>,
}

impl TuneSummary {
    pub fn flips(&self) -> usize {
        self.flipped_indices.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub dataset: Dataset,
    pub summary: TuneSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiTuneResult {
    pub dataset: Dataset,
    /// One entry per attribute, in application order.
    pub stages: Vec<TuneSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptConfig {
    pub pso: PsoConfig,
    /// Share of the training data held out to score candidate proportions.
    pub validation_fraction: f64,
    pub classifier: ClassifierConfig,
    pub loss_kind: LossKind,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            pso: PsoConfig::default(),
            validation_fraction: 0.2,
            classifier: ClassifierConfig::default(),
            loss_kind: LossKind::Single,
        }
    }
}

fn phi_of(d: &Dataset, attr: &str) -> Result<Option<f64>> {
    let t = contingency(d, attr)?;
    Ok(phi(&t).ok())
}

/// Rows eligible for flipping, in seeded order.
fn candidate_order(d: &Dataset, attr: &str, direction: TuneDirection, seed: u64) -> Result<Vec<usize>> {
    let a = d.sensitive(attr)?;
    let source = direction.source_value();
    let mut rows: Vec<usize> = a
        .iter()
        .zip(d.labels())
        .enumerate()
        .filter(|(_, (&ai, &y))| ai == source && y == 1)
        .map(|(i, _)| i)
        .collect();
    rows.shuffle(&mut rng::stream(seed, rng::FLIP));
    Ok(rows)
}

/// Flips the first `count` candidates of the seeded order.
pub fn apply_count(
    train: &Dataset,
    attr: &str,
    count: usize,
    direction: TuneDirection,
    seed: u64,
) -> Result<TuneResult> {
    let order = candidate_order(train, attr, direction, seed)?;
    if count > order.len() {
        return Err(Error::Candidate(format!(
            "{attr} (requested {count} flips, {} candidates)",
            order.len()
        )));
    }
    let mut flipped = order[..count].to_vec();
    flipped.sort_unstable();
    let mut column = train.sensitive(attr)?.to_vec();
    for &i in &flipped {
        column[i] ^= 1;
    }
    let dataset = train.with_sensitive(attr, column)?;
    let proportion_applied = if order.is_empty() {
        0.0
    } else {
        count as f64 / order.len() as f64
    };
    Ok(TuneResult {
        summary: TuneSummary {
            attribute: attr.to_string(),
            direction,
            flipped_indices: flipped,
            proportion_applied,
            phi_before: phi_of(train, attr)?,
            phi_after: phi_of(&dataset, attr)?,
            search: None,
        },
        dataset,
    })
}

/// Number of candidates flipped for proportion `p` of `m` candidates.
fn flips_for(p: f64, m: usize) -> usize {
    // the epsilon keeps p = k/m from landing just below k
    ((p * m as f64 + 1e-9).floor() as usize).min(m)
}

/// Flips `floor(p * candidates)` favorable rows of the source group.
pub fn apply_proportion(
    train: &Dataset,
    attr: &str,
    p: f64,
    direction: TuneDirection,
    seed: u64,
) -> Result<TuneResult> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("proportion {p} not in [0, 1]")));
    }
    let m = candidate_order(train, attr, direction, seed)?.len();
    if m == 0 && p > 0.0 {
        return Err(Error::Candidate(attr.to_string()));
    }
    let mut result = apply_count(train, attr, flips_for(p, m), direction, seed)?;
    result.summary.proportion_applied = p;
    Ok(result)
}

/// Analytic tuning: flips the number of privileged favorable rows that
/// brings Phi closest to zero.
pub fn cot_phi(train: &Dataset, attr: &str, seed: u64) -> Result<TuneResult> {
    let table = contingency(train, attr)?;
    let k = adjustment_count(&table)? as usize;
    let mut result = apply_count(train, attr, k, TuneDirection::PrivilegedToUnprivileged, seed)?;
    result.summary.proportion_applied = if table.n11 == 0 {
        0.0
    } else {
        k as f64 / table.n11 as f64
    };
    Ok(result)
}

/// `(1 - F1) + (1 - accuracy) + SPD + AOD + EOD` with gap magnitudes.
pub fn loss_single(m: &MetricsBundle) -> f64 {
    (1.0 - m.f1) + (1.0 - m.accuracy) + m.spd.abs() + m.aod.abs() + m.eod.abs()
}

/// `(1 - F1) + (1 - accuracy) + ISPD + IAOD + IEOD`. Bundles without
/// intersectional values (a single attribute) fall back to the
/// two-subgroup equivalents SPD, AOD, EOD.
pub fn loss_intersectional(m: &MetricsBundle) -> f64 {
    let ispd = m.ispd.unwrap_or(m.spd);
    let iaod = m.iaod.unwrap_or(m.aod);
    let ieod = m.ieod.unwrap_or(m.eod);
    (1.0 - m.f1) + (1.0 - m.accuracy) + ispd.abs() + iaod.abs() + ieod.abs()
}

/// Validation loss of a classifier trained on a tuned inner training split.
///
/// Construction does the inner split once; [`OptObjective::evaluate`] is pure
/// and caches by flip count, since all proportions that flip the same number
/// of candidates yield the same tuned dataset.
pub struct OptObjective<'c, C: Classifier> {
    inner_train: Dataset,
    validation: Dataset,
    attr: String,
    loss_attrs: Vec<String>,
    loss_kind: LossKind,
    classifier: &'c C,
    seed: u64,
    candidates: usize,
    cache: Mutex<HashMap<usize, f64>>,
}

impl<'c, C: Classifier> OptObjective<'c, C> {
    pub fn new(
        train: &Dataset,
        attr: &str,
        loss_attrs: &[String],
        loss_kind: LossKind,
        validation_fraction: f64,
        classifier: &'c C,
        seed: u64,
    ) -> Result<Self> {
        if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
            return Err(Error::Config(format!(
                "validation_fraction {validation_fraction} not in (0, 1)"
            )));
        }
        let (inner_train, validation) = split(train, 1.0 - validation_fraction, seed)
            .map_err(|e| e.context("inner validation split"))?;
        let positives = inner_train.labels().iter().filter(|&&y| y == 1).count();
        if positives == 0 || positives == inner_train.n_rows() {
            return Err(Error::Training(format!(
                "inner training split of {} rows has a single label class",
                inner_train.n_rows()
            )));
        }
        let candidates =
            candidate_order(&inner_train, attr, TuneDirection::PrivilegedToUnprivileged, seed)?.len();
        let mut loss_attrs = loss_attrs.to_vec();
        if loss_attrs.is_empty() {
            loss_attrs.push(attr.to_string());
        }
        Ok(Self {
            inner_train,
            validation,
            attr: attr.to_string(),
            loss_attrs,
            loss_kind,
            classifier,
            seed,
            candidates,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn inner_train(&self) -> &Dataset {
        &self.inner_train
    }

    pub fn validation(&self) -> &Dataset {
        &self.validation
    }

    /// Metrics on the validation split after tuning the inner training split
    /// with proportion `p`.
    pub fn metrics(&self, p: f64) -> Result<MetricsBundle> {
        let count = flips_for(p.clamp(0.0, 1.0), self.candidates);
        self.metrics_for_count(count)
    }

    fn metrics_for_count(&self, count: usize) -> Result<MetricsBundle> {
        let tuned = apply_count(
            &self.inner_train,
            &self.attr,
            count,
            TuneDirection::PrivilegedToUnprivileged,
            self.seed,
        )?;
        let model = self.classifier.fit(&tuned.dataset, self.seed)?;
        let pred = model.predict(&self.validation)?;
        let attrs: &[String] = match self.loss_kind {
            LossKind::Single => std::slice::from_ref(&self.attr),
            LossKind::Intersectional => &self.loss_attrs,
        };
        evaluate(&self.validation, &pred, attrs)
    }

    /// Loss at proportion `p`; `+inf` when the metrics are undefined (for
    /// example a validation group without positives).
    pub fn evaluate(&self, p: f64) -> f64 {
        let count = flips_for(p.clamp(0.0, 1.0), self.candidates);
        if let Some(&v) = self.cache.lock().expect("cache poisoned").get(&count) {
            return v;
        }
        let loss = match self.metrics_for_count(count) {
            Ok(m) => match self.loss_kind {
                LossKind::Single => loss_single(&m),
                LossKind::Intersectional => loss_intersectional(&m),
            },
            Err(_) => f64::INFINITY,
        };
        self.cache.lock().expect("cache poisoned").insert(count, loss);
        loss
    }
}

/// Searches the flip proportion with the built-in classifier from `cfg`.
pub fn cot_opt(train: &Dataset, attr: &str, cfg: &OptConfig, seed: u64) -> Result<TuneResult> {
    cot_opt_with(train, attr, &[attr.to_string()], cfg, &cfg.classifier, seed)
}

/// Proportion search with any classifier. `loss_attrs` are the attributes
/// whose subgroups enter an intersectional loss.
///
/// The swarm's first two particles start at `p = 0` and at the analytic
/// proportion, so the result is never worse on the validation loss than
/// either of them.
pub fn cot_opt_with<C: Classifier>(
    train: &Dataset,
    attr: &str,
    loss_attrs: &[String],
    cfg: &OptConfig,
    classifier: &C,
    seed: u64,
) -> Result<TuneResult> {
    let objective = OptObjective::new(
        train,
        attr,
        loss_attrs,
        cfg.loss_kind,
        cfg.validation_fraction,
        classifier,
        seed,
    )?;
    let mut anchors = vec![0.0];
    if let Ok(p) = adjustment_proportion(&contingency(objective.inner_train(), attr)?) {
        anchors.push(p);
    }
    let pso = PsoConfig {
        lower: cfg.pso.lower.max(0.0),
        upper: cfg.pso.upper.min(1.0),
        ..cfg.pso.clone()
    };
    let found = minimize_scalar_anchored(|p| objective.evaluate(p), &pso, seed, &anchors)?;
    if !found.f_best.is_finite() {
        return Err(Error::GroupSupport(format!(
            "validation metrics undefined for every proportion tried on `{attr}`"
        )));
    }
    let mut result = apply_proportion(
        train,
        attr,
        found.x_best,
        TuneDirection::PrivilegedToUnprivileged,
        seed,
    )?;
    result.summary.search = Some(SearchSummary {
        best_proportion: found.x_best,
        best_loss: found.f_best,
        evaluations: found.evaluations,
    });
    Ok(result)
}

/// Tunes several attributes in sequence, each stage working on the output
/// of the previous one. The optimizing variant scores every stage with the
/// intersectional loss over all of `attrs`.
pub fn cot_multi(
    train: &Dataset,
    attrs: &[String],
    method: TuneMethod,
    cfg: &OptConfig,
    seed: u64,
) -> Result<MultiTuneResult> {
    cot_multi_with(train, attrs, method, cfg, &cfg.classifier, seed)
}

pub fn cot_multi_with<C: Classifier>(
    train: &Dataset,
    attrs: &[String],
    method: TuneMethod,
    cfg: &OptConfig,
    classifier: &C,
    seed: u64,
) -> Result<MultiTuneResult> {
    if attrs.len() < 2 {
        return Err(Error::Config(format!(
            "multi-attribute tuning needs at least two attributes, got {}",
            attrs.len()
        )));
    }
    for a in attrs {
        train.schema().sensitive_index(a)?;
    }
    let stage_cfg = OptConfig {
        loss_kind: LossKind::Intersectional,
        ..cfg.clone()
    };
    let mut current = train.clone();
    let mut stages = Vec::with_capacity(attrs.len());
    for attr in attrs {
        let step = match method {
            TuneMethod::Phi => cot_phi(&current, attr, seed),
            TuneMethod::Opt => cot_opt_with(&current, attr, attrs, &stage_cfg, classifier, seed),
        }
        .map_err(|e| e.context(format!("tuning attribute `{attr}`")))?;
        current = step.dataset;
        stages.push(step.summary);
    }
    Ok(MultiTuneResult {
        dataset: current,
        stages,
    })
}
