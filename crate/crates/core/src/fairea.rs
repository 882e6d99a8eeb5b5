//! Fairness/performance trade-off baseline.
//!
//! The baseline is traced by replacing a growing share of the original
//! model's predictions with the majority label and measuring the metric pair
//! at each share. A mitigated model is then placed in one of five regions
//! relative to the unmitigated origin and that curve.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::metrics::{group_fairness, performance, FairnessMetric, PerformanceMetric};
use crate::{par, rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    /// Bias value; smaller is better.
    pub fairness: f64,
    /// Performance value; larger is better.
    pub performance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselinePoint {
    pub mutation_rate: f64,
    pub fairness: f64,
    pub performance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineCurve {
    /// Sorted by mutation rate; the first point is the origin at rate 0.
    pub points: Vec<BaselinePoint>,
    pub origin: TradeoffPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeoffRegion {
    WinWin,
    Good,
    Poor,
    Inverted,
    LoseLose,
}

impl TradeoffRegion {
    pub const ALL: [TradeoffRegion; 5] = [
        Self::WinWin,
        Self::Good,
        Self::Poor,
        Self::Inverted,
        Self::LoseLose,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::WinWin => "win_win",
            Self::Good => "good",
            Self::Poor => "poor",
            Self::Inverted => "inverted",
            Self::LoseLose => "lose_lose",
        }
    }
}

/// Mutation rates 0.1, 0.2, ..., 1.0.
pub fn default_rates() -> Vec<f64> {
    (1..=10).map(|i| f64::from(i) / 10.0).collect()
}

pub const DEFAULT_REPEATS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub rates: Vec<f64>,
    pub repeats: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            rates: default_rates(),
            repeats: DEFAULT_REPEATS,
        }
    }
}

fn validate_rates(rates: &[f64], repeats: usize) -> Result<Vec<f64>> {
    if repeats == 0 {
        return Err(Error::Config("baseline needs at least one repeat".into()));
    }
    let mut sorted = rates.to_vec();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(Error::Config(format!("duplicate mutation rate {}", w[0])));
        }
    }
    if let Some(r) = sorted.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
        return Err(Error::Config(format!("mutation rate {r} not in (0, 1]")));
    }
    Ok(sorted)
}

/// Majority true label; ties go to the favorable label.
fn majority(y_true: &[u8]) -> u8 {
    let ones = y_true.iter().filter(|&&y| y == 1).count();
    u8::from(2 * ones >= y_true.len())
}

/// Metric values for one mutated prediction vector.
struct MutationScores {
    fairness: [f64; 3],
    performance: [f64; 5],
}

fn score(y_true: &[u8], y_pred: &[u8], a: &[u8]) -> Result<MutationScores> {
    let g = group_fairness(y_true, y_pred, a)?;
    let p = performance(y_true, y_pred)?;
    Ok(MutationScores {
        fairness: FairnessMetric::ALL.map(|m| m.of(&g)),
        performance: PerformanceMetric::ALL.map(|m| m.of(&p)),
    })
}

/// Averaged scores per rate (in sorted order), computed once and shared by
/// every metric pair.
fn mutation_grid(
    y_true: &[u8],
    y_pred: &[u8],
    a: &[u8],
    rates: &[f64],
    repeats: usize,
    seed: u64,
) -> Result<(MutationScores, Vec<MutationScores>)> {
    let origin = score(y_true, y_pred, a)?;
    let target = majority(y_true);
    let n = y_true.len();
    let jobs: Vec<(usize, usize)> = (0..rates.len())
        .flat_map(|r| (0..repeats).map(move |k| (r, k)))
        .collect();
    let scored = par::map_slice(&jobs, |&(r, k)| {
        let count = ((rates[r] * n as f64 + 1e-9).floor() as usize).min(n);
        let stream = rng::FAIREA + ((r as u64) << 16) + k as u64;
        let mut mutated = y_pred.to_vec();
        for i in index::sample(&mut rng::stream(seed, stream), n, count) {
            mutated[i] = target;
        }
        score(y_true, &mutated, a)
    });
    let mut averaged = Vec::with_capacity(rates.len());
    let mut scored = scored.into_iter();
    for _ in rates {
        let mut acc = MutationScores {
            fairness: [0.0; 3],
            performance: [0.0; 5],
        };
        for _ in 0..repeats {
            let s = scored.next().expect("one score per job")?;
            acc.fairness.iter_mut().zip(s.fairness).for_each(|(a, v)| *a += v);
            acc.performance.iter_mut().zip(s.performance).for_each(|(a, v)| *a += v);
        }
        acc.fairness.iter_mut().for_each(|v| *v /= repeats as f64);
        acc.performance.iter_mut().for_each(|v| *v /= repeats as f64);
        averaged.push(acc);
    }
    Ok((origin, averaged))
}

fn curve_from(
    origin: &MutationScores,
    grid: &[MutationScores],
    rates: &[f64],
    fm: FairnessMetric,
    pm: PerformanceMetric,
) -> BaselineCurve {
    let fi = FairnessMetric::ALL.iter().position(|&m| m == fm).expect("listed");
    let pi = PerformanceMetric::ALL.iter().position(|&m| m == pm).expect("listed");
    let origin = TradeoffPoint {
        fairness: origin.fairness[fi],
        performance: origin.performance[pi],
    };
    let mut points = vec![BaselinePoint {
        mutation_rate: 0.0,
        fairness: origin.fairness,
        performance: origin.performance,
    }];
    points.extend(rates.iter().zip(grid).map(|(&rate, s)| BaselinePoint {
        mutation_rate: rate,
        fairness: s.fairness[fi],
        performance: s.performance[pi],
    }));
    BaselineCurve { points, origin }
}

/// Baseline for one fairness/performance pair.
#[allow(clippy::too_many_arguments)]
pub fn build_baseline(
    y_true: &[u8],
    y_pred_original: &[u8],
    a: &[u8],
    fairness_metric: FairnessMetric,
    performance_metric: PerformanceMetric,
    rates: &[f64],
    repeats: usize,
    seed: u64,
) -> Result<BaselineCurve> {
    let rates = validate_rates(rates, repeats)?;
    let (origin, grid) = mutation_grid(y_true, y_pred_original, a, &rates, repeats, seed)?;
    Ok(curve_from(&origin, &grid, &rates, fairness_metric, performance_metric))
}

/// Baselines for all fifteen metric pairs from one set of mutations, in
/// `FairnessMetric::ALL x PerformanceMetric::ALL` order. Each curve equals
/// what [`build_baseline`] returns for the same pair and seed.
pub fn build_all_baselines(
    y_true: &[u8],
    y_pred_original: &[u8],
    a: &[u8],
    rates: &[f64],
    repeats: usize,
    seed: u64,
) -> Result<Vec<(FairnessMetric, PerformanceMetric, BaselineCurve)>> {
    let rates = validate_rates(rates, repeats)?;
    let (origin, grid) = mutation_grid(y_true, y_pred_original, a, &rates, repeats, seed)?;
    Ok(FairnessMetric::ALL
        .into_iter()
        .flat_map(|fm| PerformanceMetric::ALL.into_iter().map(move |pm| (fm, pm)))
        .map(|(fm, pm)| (fm, pm, curve_from(&origin, &grid, &rates, fm, pm)))
        .collect())
}

impl BaselineCurve {
    /// Baseline performance at `fairness`, linear between curve points ordered
    /// by fairness and clamped to the ends.
    pub fn performance_at(&self, fairness: f64) -> f64 {
        let mut pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .map(|p| (p.fairness, p.performance))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        if fairness <= first.0 {
            return first.1;
        }
        if fairness >= last.0 {
            return last.1;
        }
        for w in pts.windows(2) {
            let ((f0, p0), (f1, p1)) = (w[0], w[1]);
            if fairness >= f0 && fairness <= f1 && f1 > f0 {
                return p0 + (p1 - p0) * (fairness - f0) / (f1 - f0);
            }
        }
        last.1
    }
}

/// Region of `candidate` relative to the curve's origin and baseline.
/// Improvements are strict; a candidate exactly on the baseline is `Good`.
pub fn classify(candidate: TradeoffPoint, curve: &BaselineCurve) -> TradeoffRegion {
    let fairer = candidate.fairness < curve.origin.fairness;
    let better = candidate.performance > curve.origin.performance;
    match (fairer, better) {
        (true, true) => TradeoffRegion::WinWin,
        (false, true) => TradeoffRegion::Inverted,
        (false, false) => TradeoffRegion::LoseLose,
        (true, false) => {
            if candidate.performance >= curve.performance_at(candidate.fairness) {
                TradeoffRegion::Good
            } else {
                TradeoffRegion::Poor
            }
        }
    }
}
