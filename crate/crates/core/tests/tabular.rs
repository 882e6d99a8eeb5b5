mod common;

use common::*;
use cotune::tabular::{
    contaminate, contaminate_with_report, read_csv, split, split_indices, subsample, write_csv, write_csv_to,
    load_csv, Dataset, Schema, SensitiveAttribute,
};
use cotune::Error;
use proptest::prelude::*;

fn schema(dim: usize) -> Schema {
    Schema {
        label_column: "label".into(),
        favorable_value: "good".into(),
        unfavorable_value: Some("bad".into()),
        sensitive_attributes: vec![
            SensitiveAttribute {
                column: "sex".into(),
                privileged_value: "M".into(),
                unprivileged_value: Some("F".into()),
            },
            SensitiveAttribute {
                column: "race".into(),
                privileged_value: "1".into(),
                unprivileged_value: Some("0".into()),
            },
        ],
        feature_columns: (0..dim).map(|j| format!("f{j}")).collect(),
    }
}

prop_compose! {
    fn dataset()(n in 1usize..30, dim in 1usize..4)
        (rows in proptest::collection::vec(
            (proptest::collection::vec(-1e6f64..1e6, dim), 0u8..=1, 0u8..=1, 0u8..=1), n),
         dim in Just(dim))
        -> Dataset
    {
        let features = rows.iter().flat_map(|r| r.0.clone()).collect();
        let sex = rows.iter().map(|r| r.1).collect();
        let race = rows.iter().map(|r| r.2).collect();
        let labels = rows.iter().map(|r| r.3).collect();
        Dataset::new(schema(dim), features, vec![sex, race], labels).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip(d in dataset()) {
        let mut buf = Vec::new();
        write_csv_to(&d, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), d.schema()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn split_is_disjoint_and_exhaustive(n in 2usize..500, frac in 0.05f64..0.95, seed in any::<u64>()) {
        let n_train = (frac * n as f64).floor() as usize;
        if n_train == 0 || n_train == n {
            prop_assert!(split_indices(n, frac, seed).is_err());
            return Ok(());
        }
        let (train, test) = split_indices(n, frac, seed).unwrap();
        prop_assert_eq!(train.len(), n_train);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn contamination_leaves_labels_and_attributes(d in dataset(), m in 0.0f64..0.9, o in 0.0f64..0.9, s in 0.0f64..3.0) {
        let c = contaminate(&d, m, s, o, 7).unwrap();
        prop_assert_eq!(c.labels(), d.labels());
        prop_assert_eq!(c.sensitive_columns(), d.sensitive_columns());
        prop_assert_eq!(c.n_rows(), d.n_rows());
    }
}

#[test]
fn file_round_trip_and_token_encoding() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, "f0,sex,race,label\n1.5,M,1,good\n2,F,0,bad\n-3,M,0,good\n4e2,F,1,bad\n").unwrap();
    let d = load_csv(&path, &schema(1)).unwrap();
    assert_eq!(d.sensitive("sex").unwrap(), &[1, 0, 1, 0]);
    assert_eq!(d.labels(), &[1, 0, 1, 0]);
    assert_eq!(d.features(), &[1.5, 2.0, -3.0, 400.0]);
    let out = dir.path().join("out.csv");
    write_csv(&d, &out).unwrap();
    assert_eq!(load_csv(&out, &schema(1)).unwrap(), d);
}

#[test]
fn ingestion_errors() {
    let s = schema(1);
    assert!(matches!(read_csv("".as_bytes(), &s), Err(Error::Schema(_))));
    let third = "f0,sex,race,label\n1,M,1,good\n2,F,0,bad\n3,M,0,maybe\n";
    assert!(matches!(read_csv(third.as_bytes(), &s), Err(Error::Cardinality { .. })));
    let missing = "f0,sex,label\n1,M,good\n";
    match read_csv(missing.as_bytes(), &s) {
        Err(Error::Schema(msg)) => assert!(msg.contains("race"), "{msg}"),
        other => panic!("{other:?}"),
    }
    let bad = "f0,sex,race,label\n1,M,1,good\nx,F,0,bad\n";
    assert!(matches!(read_csv(bad.as_bytes(), &s), Err(Error::Parse { row: 1, .. })));
}

#[test]
fn split_examples() {
    let d = fixture((3, 2, 2, 3), 1, 0);
    let (train, test) = split(&d, 0.7, 4).unwrap();
    assert_eq!((train.n_rows(), test.n_rows()), (7, 3));
    assert_eq!(split(&d, 0.7, 4).unwrap(), (train, test));
    let (a, _) = split_indices(1000, 0.7, 1).unwrap();
    let (b, _) = split_indices(1000, 0.7, 2).unwrap();
    let sorted = |mut v: Vec<usize>| {
        v.sort_unstable();
        v
    };
    assert_ne!(sorted(a), sorted(b));
}

#[test]
fn subsample_membership() {
    let d = fixture((300, 200, 100, 400), 2, 1);
    let s = subsample(&d, 100, 3).unwrap();
    assert_eq!(s.n_rows(), 100);
    for r in 0..s.n_rows() {
        assert!((0..d.n_rows()).any(|i| d.feature_row(i) == s.feature_row(r)));
    }
    assert_eq!(subsample(&d, 100, 3).unwrap(), s);
    assert_eq!(subsample(&d, d.n_rows(), 9).unwrap(), d);
    assert!(subsample(&d, 0, 0).is_err());
}

/// Smallest and largest counts of the central 99% of Binomial(n, p).
fn binomial_99(n: u64, p: f64) -> (u64, u64) {
    let mut pmf = vec![0.0; n as usize + 1];
    pmf[0] = (1.0 - p).powi(n as i32);
    for k in 1..=n as usize {
        pmf[k] = pmf[k - 1] * (n as f64 - k as f64 + 1.0) / k as f64 * p / (1.0 - p);
    }
    let mut cdf = 0.0;
    let mut lo = None;
    let mut hi = n;
    for (k, v) in pmf.iter().enumerate() {
        cdf += v;
        if lo.is_none() && cdf >= 0.005 {
            lo = Some(k as u64);
        }
        if cdf >= 0.995 {
            hi = k as u64;
            break;
        }
    }
    (lo.unwrap(), hi)
}

#[test]
fn imputed_cell_count_is_binomial() {
    let d = fixture((25, 25, 25, 25), 5, 8);
    let (lo, hi) = binomial_99(500, 0.1);
    let mut inside = 0;
    for seed in 0..20 {
        let (c, report) = contaminate_with_report(&d, 0.1, 0.0, 0.0, seed).unwrap();
        assert_eq!(report.outlier_cells, 0);
        let changed = c.features().iter().zip(d.features()).filter(|(a, b)| a != b).count();
        assert!(changed <= report.imputed_cells);
        if (lo..=hi).contains(&(report.imputed_cells as u64)) {
            inside += 1;
        }
    }
    // each seed lands inside with probability 0.99
    assert!(inside >= 18, "{inside} of 20 inside [{lo}, {hi}]");
    assert_eq!(contaminate(&d, 0.0, 0.0, 0.0, 1).unwrap(), d);
}
