//! Performance metrics, single-attribute group fairness, intersectional
//! fairness and the per-group true positive rates.
//!
//! Fairness gaps are reported as magnitudes. Any `0/0` ratio evaluates to 0.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::tabular::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn from_predictions(y_true: &[u8], y_pred: &[u8]) -> Result<Self> {
        check_lengths(y_true.len(), y_pred.len(), "y_pred")?;
        let mut c = Self::default();
        for (&t, &p) in y_true.iter().zip(y_pred) {
            match (t == 1, p == 1) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn check_lengths(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected == 0 {
        return Err(Error::Shape("no instances to evaluate".into()));
    }
    if expected != got {
        return Err(Error::Shape(format!(
            "{what} has length {got}, expected {expected}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub mcc: f64,
}

impl Performance {
    pub fn from_counts(c: &ConfusionCounts) -> Self {
        let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let accuracy = ratio(tp + tn, tp + fp + tn + fn_);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        let mcc_den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
        let mcc = ratio(tp * tn - fp * fn_, mcc_den).clamp(-1.0, 1.0);
        Self {
            precision,
            recall,
            accuracy,
            f1,
            mcc,
        }
    }
}

pub fn performance(y_true: &[u8], y_pred: &[u8]) -> Result<Performance> {
    Ok(Performance::from_counts(&ConfusionCounts::from_predictions(
        y_true, y_pred,
    )?))
}

/// Favorable-prediction rates of one group, overall and by true label.
#[derive(Debug, Clone, Copy, Default)]
struct GroupRates {
    n: u64,
    n_pos: u64,
    n_neg: u64,
    pred_pos: u64,
    tp: u64,
    fp: u64,
}

impl GroupRates {
    fn add(&mut self, y: u8, p: u8) {
        self.n += 1;
        let p = u64::from(p == 1);
        self.pred_pos += p;
        if y == 1 {
            self.n_pos += 1;
            self.tp += p;
        } else {
            self.n_neg += 1;
            self.fp += p;
        }
    }

    fn favorable_rate(&self) -> f64 {
        ratio(self.pred_pos as f64, self.n as f64)
    }

    fn tpr(&self) -> f64 {
        ratio(self.tp as f64, self.n_pos as f64)
    }

    fn fpr(&self) -> f64 {
        ratio(self.fp as f64, self.n_neg as f64)
    }

    fn check_support(&self, group: &str) -> Result<()> {
        if self.n == 0 {
            Err(Error::GroupSupport(format!("no instances in {group}")))
        } else if self.n_pos == 0 {
            Err(Error::GroupSupport(format!("no favorable-label instances in {group}")))
        } else if self.n_neg == 0 {
            Err(Error::GroupSupport(format!("no unfavorable-label instances in {group}")))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupFairness {
    pub spd: f64,
    pub aod: f64,
    pub eod: f64,
    pub tpr_unprivileged: f64,
    pub tpr_privileged: f64,
}

/// Gaps between the unprivileged (`a = 0`) and privileged (`a = 1`) groups.
///
/// Both groups must contain favorable and unfavorable true labels.
pub fn group_fairness(y_true: &[u8], y_pred: &[u8], a: &[u8]) -> Result<GroupFairness> {
    check_lengths(y_true.len(), y_pred.len(), "y_pred")?;
    check_lengths(y_true.len(), a.len(), "attribute")?;
    let mut groups = [GroupRates::default(); 2];
    for ((&y, &p), &ai) in y_true.iter().zip(y_pred).zip(a) {
        groups[usize::from(ai == 1)].add(y, p);
    }
    let [unpriv, priv_] = groups;
    unpriv.check_support("the unprivileged group (a=0)")?;
    priv_.check_support("the privileged group (a=1)")?;

    let tpr_diff = unpriv.tpr() - priv_.tpr();
    let fpr_diff = unpriv.fpr() - priv_.fpr();
    Ok(GroupFairness {
        spd: (unpriv.favorable_rate() - priv_.favorable_rate()).abs(),
        aod: 0.5 * (fpr_diff + tpr_diff).abs(),
        eod: tpr_diff.abs(),
        tpr_unprivileged: unpriv.tpr(),
        tpr_privileged: priv_.tpr(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionalFairness {
    pub ispd: f64,
    pub iaod: f64,
    pub ieod: f64,
}

/// Worst-case (max - min) rate gaps across the subgroups present in
/// `subgroup_ids`. Every present subgroup needs both true-label classes.
pub fn intersectional_fairness(
    y_true: &[u8],
    y_pred: &[u8],
    subgroup_ids: &[usize],
) -> Result<IntersectionalFairness> {
    check_lengths(y_true.len(), y_pred.len(), "y_pred")?;
    check_lengths(y_true.len(), subgroup_ids.len(), "subgroup ids")?;
    let mut groups: BTreeMap<usize, GroupRates> = BTreeMap::new();
    for ((&y, &p), &s) in y_true.iter().zip(y_pred).zip(subgroup_ids) {
        groups.entry(s).or_default().add(y, p);
    }
    if groups.len() < 2 {
        return Err(Error::GroupSupport(format!(
            "need at least two subgroups, found {}",
            groups.len()
        )));
    }
    for (id, g) in &groups {
        g.check_support(&format!("subgroup {id}"))?;
    }
    let spread = |f: &dyn Fn(&GroupRates) -> f64| {
        let (lo, hi) = groups
            .values()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        hi - lo
    };
    Ok(IntersectionalFairness {
        ispd: spread(&|g| g.favorable_rate()),
        iaod: 0.5 * spread(&|g| g.fpr() + g.tpr()),
        ieod: spread(&|g| g.tpr()),
    })
}

/// Subgroup id per row: the attribute values read as a binary number, first
/// attribute as the most significant bit.
pub fn subgroups(d: &Dataset, attrs: &[impl AsRef<str>]) -> Result<Vec<usize>> {
    if attrs.is_empty() {
        return Err(Error::Schema("no attributes given for subgroups".into()));
    }
    let columns = attrs
        .iter()
        .map(|a| d.sensitive(a.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..d.n_rows())
        .map(|r| columns.iter().fold(0, |id, col| (id << 1) | usize::from(col[r])))
        .collect())
}

/// Everything measured for one set of predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    /// Attribute the single-attribute gaps refer to.
    pub attribute: String,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub mcc: f64,
    pub spd: f64,
    pub aod: f64,
    pub eod: f64,
    pub tpr_unprivileged: f64,
    pub tpr_privileged: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ispd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iaod: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ieod: Option<f64>,
    /// Single-attribute gaps for every attribute when more than one is
    /// evaluated.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_attribute: BTreeMap<String, GroupFairness>,
}

impl MetricsBundle {
    pub fn from_parts(
        attribute: &str,
        perf: Performance,
        group: GroupFairness,
        inter: Option<IntersectionalFairness>,
    ) -> Self {
        Self {
            attribute: attribute.to_string(),
            precision: perf.precision,
            recall: perf.recall,
            accuracy: perf.accuracy,
            f1: perf.f1,
            mcc: perf.mcc,
            spd: group.spd,
            aod: group.aod,
            eod: group.eod,
            tpr_unprivileged: group.tpr_unprivileged,
            tpr_privileged: group.tpr_privileged,
            ispd: inter.map(|i| i.ispd),
            iaod: inter.map(|i| i.iaod),
            ieod: inter.map(|i| i.ieod),
            per_attribute: BTreeMap::new(),
        }
    }

    /// Named scalar metrics in a fixed order; intersectional entries only
    /// when present.
    pub fn named_values(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("precision", self.precision),
            ("recall", self.recall),
            ("accuracy", self.accuracy),
            ("f1", self.f1),
            ("mcc", self.mcc),
            ("spd", self.spd),
            ("aod", self.aod),
            ("eod", self.eod),
            ("tpr_unprivileged", self.tpr_unprivileged),
            ("tpr_privileged", self.tpr_privileged),
        ];
        for (name, v) in [("ispd", self.ispd), ("iaod", self.iaod), ("ieod", self.ieod)] {
            if let Some(v) = v {
                out.push((name, v));
            }
        }
        out
    }
}

/// Evaluates predictions on `d`. Single-attribute gaps use `attrs[0]`;
/// intersectional gaps are added when `attrs` has two or more entries.
pub fn evaluate(d: &Dataset, y_pred: &[u8], attrs: &[impl AsRef<str>]) -> Result<MetricsBundle> {
    let first = attrs
        .first()
        .ok_or_else(|| Error::Schema("no attribute to evaluate".into()))?
        .as_ref();
    evaluate_raw(d.labels(), y_pred, &named_columns(d, attrs)?).map(|mut b| {
        b.attribute = first.to_string();
        b
    })
}

fn named_columns<'a>(d: &'a Dataset, attrs: &[impl AsRef<str>]) -> Result<Vec<(String, &'a [u8])>> {
    attrs
        .iter()
        .map(|a| Ok((a.as_ref().to_string(), d.sensitive(a.as_ref())?)))
        .collect()
}

/// [`evaluate`] over bare vectors: `attrs` pairs an attribute name with its
/// `0/1` column.
pub fn evaluate_raw(y_true: &[u8], y_pred: &[u8], attrs: &[(String, &[u8])]) -> Result<MetricsBundle> {
    let (first_name, first_col) = attrs
        .first()
        .ok_or_else(|| Error::Schema("no attribute to evaluate".into()))?;
    let perf = performance(y_true, y_pred)?;
    let group = group_fairness(y_true, y_pred, first_col)
        .map_err(|e| e.context(format!("attribute `{first_name}`")))?;
    let inter = if attrs.len() >= 2 {
        let ids: Vec<usize> = (0..y_true.len())
            .map(|r| attrs.iter().fold(0, |id, (_, col)| (id << 1) | usize::from(col[r])))
            .collect();
        Some(intersectional_fairness(y_true, y_pred, &ids)?)
    } else {
        None
    };
    let mut bundle = MetricsBundle::from_parts(first_name, perf, group, inter);
    if attrs.len() >= 2 {
        for (name, col) in attrs {
            let g = group_fairness(y_true, y_pred, col)
                .map_err(|e| e.context(format!("attribute `{name}`")))?;
            bundle.per_attribute.insert(name.clone(), g);
        }
    }
    Ok(bundle)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FairnessMetric {
    Spd,
    Aod,
    Eod,
}

impl FairnessMetric {
    pub const ALL: [FairnessMetric; 3] = [Self::Spd, Self::Aod, Self::Eod];

    pub fn of(self, g: &GroupFairness) -> f64 {
        match self {
            Self::Spd => g.spd,
            Self::Aod => g.aod,
            Self::Eod => g.eod,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Spd => "spd",
            Self::Aod => "aod",
            Self::Eod => "eod",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerformanceMetric {
    Accuracy,
    Precision,
    Recall,
    F1,
    Mcc,
}

impl PerformanceMetric {
    pub const ALL: [PerformanceMetric; 5] = [
        Self::Accuracy,
        Self::Precision,
        Self::Recall,
        Self::F1,
        Self::Mcc,
    ];

    pub fn of(self, p: &Performance) -> f64 {
        match self {
            Self::Accuracy => p.accuracy,
            Self::Precision => p.precision,
            Self::Recall => p.recall,
            Self::F1 => p.f1,
            Self::Mcc => p.mcc,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Accuracy => "accuracy",
            Self::Precision => "precision",
            Self::Recall => "recall",
            Self::F1 => "f1",
            Self::Mcc => "mcc",
        }
    }
}

macro_rules! impl_name_parsing {
    ($ty:ty) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                Self::ALL
                    .into_iter()
                    .find(|m| m.name().eq_ignore_ascii_case(s))
                    .ok_or_else(|| Error::Config(format!("unknown metric `{s}`")))
            }
        }
    };
}

impl_name_parsing!(FairnessMetric);
impl_name_parsing!(PerformanceMetric);
