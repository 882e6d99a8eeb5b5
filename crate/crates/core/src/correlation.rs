//! Contingency tables between a binary sensitive attribute and the label,
//! the Phi-coefficient, and the analytic number of privileged/favorable rows
//! whose attribute must be flipped to bring Phi as close to zero as integers
//! allow.

use serde::{Deserialize, Serialize};

use crate::tabular::Dataset;
use crate::{Error, Result};

/// Joint counts of (attribute, label). The first digit is the attribute
/// (1 = privileged), the second the label (1 = favorable).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub n11: u64,
    pub n10: u64,
    pub n01: u64,
    pub n00: u64,
}

impl ContingencyTable {
    pub const fn new(n11: u64, n10: u64, n01: u64, n00: u64) -> Self {
        Self { n11, n10, n01, n00 }
    }

    pub fn total(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    pub fn privileged(&self) -> u64 {
        self.n11 + self.n10
    }

    pub fn unprivileged(&self) -> u64 {
        self.n01 + self.n00
    }

    pub fn favorable(&self) -> u64 {
        self.n11 + self.n01
    }

    pub fn unfavorable(&self) -> u64 {
        self.n10 + self.n00
    }

    /// Table after moving `k` rows from (a=1, y=1) to (a=0, y=1).
    ///
    /// Panics if `k > n11`.
    pub fn after_flips(&self, k: u64) -> Self {
        assert!(k <= self.n11, "cannot flip {k} of {} candidates", self.n11);
        Self::new(self.n11 - k, self.n10, self.n01 + k, self.n00)
    }

    /// Rows swapped between groups: privileged becomes unprivileged.
    pub fn swap_groups(&self) -> Self {
        Self::new(self.n01, self.n00, self.n11, self.n10)
    }

    pub fn scaled(&self, c: u64) -> Self {
        Self::new(self.n11 * c, self.n10 * c, self.n01 * c, self.n00 * c)
    }

    /// `n11 * n00 - n10 * n01`, the numerator of Phi.
    pub fn cross_product(&self) -> i128 {
        self.n11 as i128 * self.n00 as i128 - self.n10 as i128 * self.n01 as i128
    }

    fn zero_marginal(&self) -> Option<&'static str> {
        if self.privileged() == 0 {
            Some("no privileged rows")
        } else if self.unprivileged() == 0 {
            Some("no unprivileged rows")
        } else if self.favorable() == 0 {
            Some("no favorable labels")
        } else if self.unfavorable() == 0 {
            Some("no unfavorable labels")
        } else {
            None
        }
    }

    pub fn is_phi_defined(&self) -> bool {
        self.zero_marginal().is_none()
    }
}

/// Counts rows of `d` by (`attr`, label).
pub fn contingency(d: &Dataset, attr: &str) -> Result<ContingencyTable> {
    let a = d.sensitive(attr)?;
    let mut t = ContingencyTable::new(0, 0, 0, 0);
    for (&ai, &yi) in a.iter().zip(d.labels()) {
        match (ai, yi) {
            (1, 1) => t.n11 += 1,
            (1, _) => t.n10 += 1,
            (_, 1) => t.n01 += 1,
            _ => t.n00 += 1,
        }
    }
    Ok(t)
}

/// Phi-coefficient of a 2x2 table.
pub fn phi(t: &ContingencyTable) -> Result<f64> {
    if let Some(why) = t.zero_marginal() {
        return Err(Error::UndefinedCorrelation(format!("{why} in {t:?}")));
    }
    let num = t.n11 as f64 * t.n00 as f64 - t.n10 as f64 * t.n01 as f64;
    let groups = t.privileged() as f64 * t.unprivileged() as f64;
    let labels = t.favorable() as f64 * t.unfavorable() as f64;
    Ok((num / (groups * labels).sqrt()).clamp(-1.0, 1.0))
}

/// Number of (a=1, y=1) rows to flip to a=0 so that Phi of the resulting
/// table is as close to zero as an integer count allows.
///
/// The real-valued zero crossing is `k* = (n11*n00 - n10*n01) / (n00 + n10)`;
/// the result is whichever of its two integer neighbours has the smaller
/// `|phi|` (ties go to the smaller count). Counts that would empty the
/// privileged group are infeasible, so the result never exceeds
/// `min(n11, n11 + n10 - 1)`. Non-positive Phi yields 0.
pub fn adjustment_count(t: &ContingencyTable) -> Result<u64> {
    phi(t)?;
    let cross = t.cross_product();
    if cross <= 0 {
        return Ok(0);
    }
    let cross = cross as u128;
    let denom = t.unfavorable() as u128;
    let floor = (cross / denom) as u64;
    let ceil = floor + u64::from(!cross.is_multiple_of(denom));
    let max_feasible = t.n11.min(t.privileged() - 1);
    let lo = floor.min(max_feasible);
    let hi = ceil.min(max_feasible);
    if lo == hi {
        return Ok(lo);
    }
    match compare_abs_phi(&t.after_flips(lo), &t.after_flips(hi)) {
        std::cmp::Ordering::Greater => Ok(hi),
        _ => Ok(lo),
    }
}

/// `adjustment_count / n11`.
pub fn adjustment_proportion(t: &ContingencyTable) -> Result<f64> {
    if t.n11 == 0 {
        return Err(Error::Proportion(format!(
            "no privileged favorable rows in {t:?}"
        )));
    }
    Ok(adjustment_count(t)? as f64 / t.n11 as f64)
}

/// Orders two tables by `|phi|`, assuming both have the same label
/// marginals. Exact integer arithmetic when it fits in 128 bits.
fn compare_abs_phi(a: &ContingencyTable, b: &ContingencyTable) -> std::cmp::Ordering {
    // phi^2 = cross^2 / (groups * labels); label marginals cancel.
    let exact = || -> Option<std::cmp::Ordering> {
        let ca = a.cross_product().unsigned_abs();
        let cb = b.cross_product().unsigned_abs();
        let ga = (a.privileged() as u128).checked_mul(a.unprivileged() as u128)?;
        let gb = (b.privileged() as u128).checked_mul(b.unprivileged() as u128)?;
        let lhs = ca.checked_mul(ca)?.checked_mul(gb)?;
        let rhs = cb.checked_mul(cb)?.checked_mul(ga)?;
        Some(lhs.cmp(&rhs))
    };
    exact().unwrap_or_else(|| {
        let pa = phi(a).map(f64::abs).unwrap_or(f64::INFINITY);
        let pb = phi(b).map(f64::abs).unwrap_or(f64::INFINITY);
        pa.total_cmp(&pb)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(n11: u64, n10: u64, n01: u64, n00: u64) -> ContingencyTable {
        ContingencyTable::new(n11, n10, n01, n00)
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(&t(25, 25, 25, 25)).unwrap(), 0.0);
        assert_eq!(phi(&t(50, 0, 0, 50)).unwrap(), 1.0);
        // (1200 - 200) / sqrt(50*50*40*60)
        let expected = 1000.0 / 6_000_000f64.sqrt();
        assert!((phi(&t(30, 20, 10, 40)).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.40825).abs() < 1e-5);
    }

    #[test]
    fn phi_zero_marginal_is_an_error() {
        assert!(matches!(
            phi(&t(5, 0, 0, 0)),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(phi(&t(3, 4, 0, 0)).is_err());
        assert!(phi(&t(0, 4, 0, 6)).is_err());
    }

    #[test]
    fn adjustment_examples() {
        assert_eq!(adjustment_count(&t(25, 25, 25, 25)).unwrap(), 0);
        assert_eq!(adjustment_count(&t(30, 20, 10, 40)).unwrap(), 17);
        // k* = 50 would empty the privileged group.
        assert_eq!(adjustment_count(&t(50, 0, 0, 50)).unwrap(), 49);
        assert_eq!(adjustment_count(&t(10, 30, 20, 40)).unwrap(), 0);
    }

    #[test]
    fn adjustment_neighbours_for_fixture() {
        let base = t(30, 20, 10, 40);
        let at16 = phi(&base.after_flips(16)).unwrap().abs();
        let at17 = phi(&base.after_flips(17)).unwrap().abs();
        assert!(at17 < at16);
        assert!((at17 - 0.0087).abs() < 1e-4);
        assert!((at16 - 0.017).abs() < 1e-3);
    }

    #[test]
    fn proportion_examples() {
        assert_eq!(adjustment_proportion(&t(25, 25, 25, 25)).unwrap(), 0.0);
        assert!((adjustment_proportion(&t(30, 20, 10, 40)).unwrap() - 17.0 / 30.0).abs() < 1e-15);
        assert_eq!(adjustment_proportion(&t(10, 10, 10, 10)).unwrap(), 0.0);
        assert_eq!(adjustment_proportion(&t(20, 20, 20, 20)).unwrap(), 0.0);
        assert!(matches!(
            adjustment_proportion(&t(0, 10, 5, 5)),
            Err(Error::Proportion(_))
        ));
    }

    #[test]
    fn large_tables_fall_back_to_float_comparison() {
        let big = t(3_000_000_000, 2_000_000_000, 1_000_000_000, 4_000_000_000);
        let k = adjustment_count(&big).unwrap();
        assert!(phi(&big.after_flips(k)).unwrap().abs() < 1e-9);
    }

    fn table() -> impl Strategy<Value = ContingencyTable> {
        (1u64..500, 0u64..500, 0u64..500, 1u64..500)
            .prop_map(|(a, b, c, d)| t(a, b, c, d))
            .prop_filter("phi defined", |t| t.is_phi_defined())
    }

    proptest! {
        #[test]
        fn phi_in_unit_interval(t in table()) {
            let p = phi(&t).unwrap();
            prop_assert!((-1.0..=1.0).contains(&p));
        }

        #[test]
        fn swapping_groups_negates_phi(t in table()) {
            prop_assert_eq!(phi(&t.swap_groups()).unwrap(), -phi(&t).unwrap());
        }

        #[test]
        fn phi_is_scale_invariant(t in table(), c in 1u64..20) {
            prop_assert!((phi(&t.scaled(c)).unwrap() - phi(&t).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn adjustment_never_increases_abs_phi(t in table()) {
            let before = phi(&t).unwrap();
            let k = adjustment_count(&t).unwrap();
            prop_assert!(k <= t.n11);
            let after = phi(&t.after_flips(k)).unwrap();
            if before > 0.0 {
                prop_assert!(after.abs() <= before.abs());
            } else {
                prop_assert_eq!(k, 0);
            }
        }
    }
}
