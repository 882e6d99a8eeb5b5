//! Two-sample rank statistics: Mann-Whitney U with a normal approximation,
//! and Cliff's delta.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// p-values below this are reported as significant.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// `|delta|` at or above this is a large effect.
pub const LARGE_EFFECT: f64 = 0.428;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub u_statistic: f64,
    pub p_value: f64,
    pub significant: bool,
    pub delta: f64,
    pub large_effect: bool,
}

fn check_nonempty(x: &[f64], y: &[f64]) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Size(format!(
            "rank tests need two non-empty samples, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Two-sided Mann-Whitney U test.
///
/// U counts pairs with `x > y` plus half the ties (midranks). The p-value
/// uses the normal approximation with tie-corrected variance and a 0.5
/// continuity correction. A fully tied pooled sample has zero variance and
/// yields `p = 1`.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<MannWhitney> {
    check_nonempty(x, y)?;
    let (n1, n2) = (x.len(), y.len());
    let mut pooled: Vec<(f64, bool)> = x
        .iter()
        .map(|&v| (v, true))
        .chain(y.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    let n = pooled.len();
    let mut rank_sum_x = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let midrank = (i + 1 + j) as f64 / 2.0;
        let in_x = pooled[i..j].iter().filter(|p| p.1).count();
        rank_sum_x += midrank * in_x as f64;
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }

    let (n1f, n2f, nf) = (n1 as f64, n2 as f64, n as f64);
    let u = rank_sum_x - n1f * (n1f + 1.0) / 2.0;
    let mean = n1f * n2f / 2.0;
    let variance = if n > 1 {
        n1f * n2f / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)))
    } else {
        0.0
    };
    let p = if variance <= 0.0 {
        1.0
    } else {
        let z = ((u - mean).abs() - 0.5).max(0.0) / variance.sqrt();
        (libm::erfc(z / std::f64::consts::SQRT_2)).clamp(0.0, 1.0)
    };
    Ok(MannWhitney { u, p })
}

/// `(#{x_i > y_j} - #{x_i < y_j}) / (|x| |y|)`.
pub fn cliffs_delta(x: &[f64], y: &[f64]) -> Result<f64> {
    check_nonempty(x, y)?;
    let mut ys = y.to_vec();
    ys.sort_by(f64::total_cmp);
    let mut dominance: i64 = 0;
    for &xi in x {
        let below = ys.partition_point(|&v| v < xi);
        let not_above = ys.partition_point(|&v| v <= xi);
        let above = ys.len() - not_above;
        dominance += below as i64 - above as i64;
    }
    Ok(dominance as f64 / (x.len() * y.len()) as f64)
}

pub fn is_large_effect(delta: f64) -> bool {
    delta.abs() >= LARGE_EFFECT
}

/// U-test and effect size of `x` against `y`.
pub fn compare(x: &[f64], y: &[f64]) -> Result<TestResult> {
    let mw = mann_whitney_u(x, y)?;
    let delta = cliffs_delta(x, y)?;
    Ok(TestResult {
        u_statistic: mw.u,
        p_value: mw.p,
        significant: mw.p < SIGNIFICANCE_LEVEL,
        delta,
        large_effect: is_large_effect(delta),
    })
}
