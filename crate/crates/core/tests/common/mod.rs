//! Fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use cotune::correlation::ContingencyTable;
use cotune::tabular::{synthesize, Dataset, SynthSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(counts: (u64, u64, u64, u64), feature_dim: usize, seed: u64) -> Dataset {
    let (a, b, c, d) = counts;
    synthesize(&SynthSpec::new(ContingencyTable::new(a, b, c, d), feature_dim, 1.0, 1.0, seed)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..=1u8)).collect()
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Performance from pair-by-pair counting: (precision, recall, accuracy, f1, mcc).
pub fn performance_oracle(y: &[u8], p: &[u8]) -> [f64; 5] {
    let count = |t: u8, q: u8| y.iter().zip(p).filter(|&(&a, &b)| a == t && b == q).count();
    let (tp, fp, tn, fn_) = (count(1, 1), count(0, 1), count(0, 0), count(1, 0));
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let accuracy = ratio(tp + tn, y.len());
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let den = ((tp + fp) as f64 * (tp + fn_) as f64 * (tn + fp) as f64 * (tn + fn_) as f64).sqrt();
    let mcc = if den == 0.0 {
        0.0
    } else {
        (tp as f64 * tn as f64 - fp as f64 * fn_ as f64) / den
    };
    [precision, recall, accuracy, f1, mcc]
}

/// (positive rate, TPR, FPR) of the rows where `member` holds, or `None`
/// when a conditioning set is empty.
pub fn rates_oracle(y: &[u8], p: &[u8], member: impl Fn(usize) -> bool) -> Option<(f64, f64, f64)> {
    let rows: Vec<usize> = (0..y.len()).filter(|&i| member(i)).collect();
    let pos: Vec<usize> = rows.iter().copied().filter(|&i| y[i] == 1).collect();
    let neg: Vec<usize> = rows.iter().copied().filter(|&i| y[i] == 0).collect();
    if rows.is_empty() || pos.is_empty() || neg.is_empty() {
        return None;
    }
    let hits = |set: &[usize]| set.iter().filter(|&&i| p[i] == 1).count() as f64 / set.len() as f64;
    Some((hits(&rows), hits(&pos), hits(&neg)))
}

/// (spd, aod, eod) with magnitudes, or `None` on missing support.
pub fn group_oracle(y: &[u8], p: &[u8], a: &[u8]) -> Option<(f64, f64, f64)> {
    let (r0, t0, f0) = rates_oracle(y, p, |i| a[i] == 0)?;
    let (r1, t1, f1) = rates_oracle(y, p, |i| a[i] == 1)?;
    Some(((r0 - r1).abs(), 0.5 * ((f0 - f1) + (t0 - t1)).abs(), (t0 - t1).abs()))
}

/// (ispd, iaod, ieod) over the subgroups present in `ids`.
pub fn intersectional_oracle(y: &[u8], p: &[u8], ids: &[usize]) -> Option<(f64, f64, f64)> {
    let mut distinct: Vec<usize> = ids.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let rates: Vec<(f64, f64, f64)> = distinct
        .iter()
        .map(|&s| rates_oracle(y, p, |i| ids[i] == s))
        .collect::<Option<_>>()?;
    let spread = |f: &dyn Fn(&(f64, f64, f64)) -> f64| {
        let v: Vec<f64> = rates.iter().map(f).collect();
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    Some((spread(&|r| r.0), 0.5 * spread(&|r| r.1 + r.2), spread(&|r| r.1)))
}

/// U of `x` by counting pairs (ties count one half).
pub fn u_oracle(x: &[f64], y: &[f64]) -> f64 {
    let mut u = 0.0;
    for &a in x {
        for &b in y {
            if a > b {
                u += 1.0;
            } else if a == b {
                u += 0.5;
            }
        }
    }
    u
}

pub fn delta_oracle(x: &[f64], y: &[f64]) -> f64 {
    let mut d = 0i64;
    for &a in x {
        for &b in y {
            d += i64::from(a > b) - i64::from(a < b);
        }
    }
    d as f64 / (x.len() * y.len()) as f64
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Pearson correlation of every feature column with the label, as bits.
pub fn feature_label_correlations(d: &Dataset) -> Vec<u64> {
    let y: Vec<f64> = d.labels().iter().map(|&v| f64::from(v)).collect();
    (0..d.n_features())
        .map(|j| pearson(&d.feature_column(j), &y).to_bits())
        .collect()
}

/// Brute-force flip count: smallest k in the feasible range minimizing
/// |phi| of `(n11 - k, n10, n01 + k, n00)`, compared exactly.
pub fn brute_force_k(t: &ContingencyTable) -> u64 {
    let (n11, n10, n01, n00) = (t.n11 as i128, t.n10 as i128, t.n01 as i128, t.n00 as i128);
    // label marginals do not change with k, so |phi| orders like cross^2 / (g1 * g0)
    let key = |k: i128| {
        let cross = (n11 - k) * n00 - n10 * (n01 + k);
        let g1 = n11 - k + n10;
        let g0 = n01 + k + n00;
        ((cross * cross) as u128, (g1 * g0) as u128)
    };
    let mut best = 0i128;
    for k in 1..=n11 {
        if n11 - k + n10 == 0 {
            break;
        }
        let (cn, cd) = key(k);
        let (bn, bd) = key(best);
        if cn * bd < bn * cd {
            best = k;
        }
    }
    best as u64
}
