//! Binary-labeled tabular datasets.
//!
//! Labels and sensitive attributes are stored as `0/1` bytes: `1` is the
//! favorable label and the privileged group. The raw CSV tokens behind those
//! encodings are kept in the [`Schema`] so that datasets can be written back
//! out unchanged.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::correlation::ContingencyTable;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitiveAttribute {
    pub column: String,
    /// Token encoded as `a = 1`.
    pub privileged_value: String,
    /// Token encoded as `a = 0`; learned from the data when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unprivileged_value: Option<String>,
}

impl SensitiveAttribute {
    pub fn new(column: impl Into<String>, privileged_value: impl Into<String>) -> Self {
        Self {
            column: column.into(),
            privileged_value: privileged_value.into(),
            unprivileged_value: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub label_column: String,
    /// Token encoded as `y = 1`.
    pub favorable_value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unfavorable_value: Option<String>,
    pub sensitive_attributes: Vec<SensitiveAttribute>,
    /// Numeric feature columns in order. Empty means "every other column"
    /// when loading a CSV.
    #[serde(default)]
    pub feature_columns: Vec<String>,
}

impl Schema {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn sensitive_names(&self) -> impl Iterator<Item = &str> {
        self.sensitive_attributes.iter().map(|s| s.column.as_str())
    }

    pub fn sensitive_index(&self, column: &str) -> Result<usize> {
        self.sensitive_attributes
            .iter()
            .position(|s| s.column == column)
            .ok_or_else(|| Error::Schema(format!("unknown sensitive attribute `{column}`")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensitive_attributes.is_empty() {
            return Err(Error::Schema("no sensitive attribute declared".into()));
        }
        let mut seen = BTreeSet::new();
        seen.insert(self.label_column.as_str());
        for s in &self.sensitive_attributes {
            if !seen.insert(s.column.as_str()) {
                return Err(Error::Schema(format!(
                    "column `{}` declared more than once",
                    s.column
                )));
            }
        }
        for f in &self.feature_columns {
            if seen.contains(f.as_str()) {
                return Err(Error::Schema(format!(
                    "column `{f}` cannot be both a feature and a label/sensitive column"
                )));
            }
        }
        let distinct: BTreeSet<_> = self.feature_columns.iter().collect();
        if distinct.len() != self.feature_columns.len() {
            return Err(Error::Schema("duplicate feature column".into()));
        }
        Ok(())
    }
}

/// An immutable feature matrix with binary sensitive columns and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    n_rows: usize,
    features: Vec<f64>,
    sensitive: Vec<Vec<u8>>,
    labels: Vec<u8>,
}

impl Dataset {
    /// `features` is row-major with `schema.feature_columns.len()` columns;
    /// `sensitive` follows `schema.sensitive_attributes` order.
    pub fn new(
        mut schema: Schema,
        features: Vec<f64>,
        sensitive: Vec<Vec<u8>>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        schema.validate()?;
        let n = labels.len();
        if n == 0 {
            return Err(Error::Size("dataset has no rows".into()));
        }
        let d = schema.feature_columns.len();
        if features.len() != n * d {
            return Err(Error::Shape(format!(
                "feature matrix has {} cells, expected {n} x {d}",
                features.len()
            )));
        }
        if sensitive.len() != schema.sensitive_attributes.len() {
            return Err(Error::Shape(format!(
                "{} sensitive columns given, schema declares {}",
                sensitive.len(),
                schema.sensitive_attributes.len()
            )));
        }
        check_binary(&schema.label_column, &labels, n)?;
        for (attr, col) in schema.sensitive_attributes.iter().zip(&sensitive) {
            check_binary(&attr.column, col, n)?;
        }
        if schema.unfavorable_value.is_none() && labels.contains(&0) {
            schema.unfavorable_value = Some(other_token(&schema.favorable_value));
        }
        for (attr, col) in schema.sensitive_attributes.iter_mut().zip(&sensitive) {
            if attr.unprivileged_value.is_none() && col.contains(&0) {
                attr.unprivileged_value = Some(other_token(&attr.privileged_value));
            }
        }
        Ok(Self {
            schema,
            n_rows: n,
            features,
            sensitive,
            labels,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.schema.feature_columns.len()
    }

    /// Row-major feature matrix.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature_row(&self, row: usize) -> &[f64] {
        let d = self.n_features();
        &self.features[row * d..(row + 1) * d]
    }

    pub fn feature_column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.feature_row(r)[col]).collect()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn sensitive(&self, column: &str) -> Result<&[u8]> {
        Ok(&self.sensitive[self.schema.sensitive_index(column)?])
    }

    /// Sensitive columns in schema order.
    pub fn sensitive_columns(&self) -> &[Vec<u8>] {
        &self.sensitive
    }

    /// Copy of `self` with one sensitive column replaced.
    pub fn with_sensitive(&self, column: &str, values: Vec<u8>) -> Result<Self> {
        let idx = self.schema.sensitive_index(column)?;
        let mut sensitive = self.sensitive.clone();
        sensitive[idx] = values;
        Self::new(
            self.schema.clone(),
            self.features.clone(),
            sensitive,
            self.labels.clone(),
        )
    }

    /// Copy of `self` with the feature matrix replaced.
    pub fn with_features(&self, features: Vec<f64>) -> Result<Self> {
        Self::new(
            self.schema.clone(),
            features,
            self.sensitive.clone(),
            self.labels.clone(),
        )
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let d = self.n_features();
        let mut features = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            if i >= self.n_rows {
                return Err(Error::Size(format!(
                    "row index {i} out of range for {} rows",
                    self.n_rows
                )));
            }
            features.extend_from_slice(self.feature_row(i));
        }
        let sensitive = self
            .sensitive
            .iter()
            .map(|col| indices.iter().map(|&i| col[i]).collect())
            .collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(self.schema.clone(), features, sensitive, labels)
    }
}

fn check_binary(column: &str, values: &[u8], n: usize) -> Result<()> {
    if values.len() != n {
        return Err(Error::Shape(format!(
            "column `{column}` has {} values, expected {n}",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|&&v| v > 1) {
        return Err(Error::Cardinality {
            column: column.to_string(),
            tokens: vec!["0".into(), "1".into(), v.to_string()],
        });
    }
    Ok(())
}

fn other_token(positive: &str) -> String {
    if positive == "0" { "1" } else { "0" }.to_string()
}

/// Maps a binary column's raw tokens to `0/1`.
struct BinaryCodec<'a> {
    column: &'a str,
    positive: &'a str,
    negative: Option<String>,
}

impl BinaryCodec<'_> {
    fn encode(&mut self, token: &str) -> Result<u8> {
        if token == self.positive {
            return Ok(1);
        }
        match &self.negative {
            Some(neg) if neg == token => Ok(0),
            Some(neg) => Err(Error::Cardinality {
                column: self.column.to_string(),
                tokens: vec![self.positive.to_string(), neg.clone(), token.to_string()],
            }),
            None => {
                self.negative = Some(token.to_string());
                Ok(0)
            }
        }
    }
}

/// Reads a headed CSV and encodes it according to `schema`.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    };

    let label_idx = find(&schema.label_column)?;
    let sens_idx = schema
        .sensitive_attributes
        .iter()
        .map(|s| find(&s.column))
        .collect::<Result<Vec<_>>>()?;

    let mut schema = schema.clone();
    if schema.feature_columns.is_empty() {
        schema.feature_columns = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx && !sens_idx.contains(i))
            .map(|(_, h)| h.clone())
            .collect();
    }
    let feat_idx = schema
        .feature_columns
        .iter()
        .map(|f| find(f))
        .collect::<Result<Vec<_>>>()?;

    let mut label_codec = BinaryCodec {
        column: &schema.label_column,
        positive: &schema.favorable_value,
        negative: schema.unfavorable_value.clone(),
    };
    let mut sens_codecs: Vec<_> = schema
        .sensitive_attributes
        .iter()
        .map(|s| BinaryCodec {
            column: &s.column,
            positive: &s.privileged_value,
            negative: s.unprivileged_value.clone(),
        })
        .collect();

    let mut features = Vec::new();
    let mut sensitive = vec![Vec::new(); sens_idx.len()];
    let mut labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let cell = |i: usize| record.get(i).map(str::trim).unwrap_or("");
        for (&i, name) in feat_idx.iter().zip(&schema.feature_columns) {
            let raw = cell(i);
            let value: f64 = raw.parse().map_err(|_| Error::Parse {
                row,
                column: name.clone(),
                value: raw.to_string(),
            })?;
            features.push(value);
        }
        labels.push(label_codec.encode(cell(label_idx))?);
        for ((codec, &i), col) in sens_codecs.iter_mut().zip(&sens_idx).zip(&mut sensitive) {
            col.push(codec.encode(cell(i))?);
        }
    }

    let unfavorable = label_codec.negative;
    let unprivileged: Vec<_> = sens_codecs.into_iter().map(|c| c.negative).collect();
    schema.unfavorable_value = unfavorable;
    for (attr, neg) in schema.sensitive_attributes.iter_mut().zip(unprivileged) {
        attr.unprivileged_value = neg;
    }
    Dataset::new(schema, features, sensitive, labels)
}

/// Writes features, then sensitive columns, then the label, using the
/// schema's raw tokens.
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(d, file)
}

pub fn write_csv_to<W: std::io::Write>(d: &Dataset, writer: W) -> Result<()> {
    let schema = d.schema();
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = schema.feature_columns.iter().map(String::as_str).collect();
    header.extend(schema.sensitive_names());
    header.push(&schema.label_column);
    w.write_record(&header)?;

    let token = |v: u8, pos: &str, neg: &Option<String>| -> String {
        if v == 1 {
            pos.to_string()
        } else {
            neg.clone().unwrap_or_else(|| other_token(pos))
        }
    };
    let mut record = Vec::with_capacity(header.len());
    for r in 0..d.n_rows() {
        record.clear();
        record.extend(d.feature_row(r).iter().map(|x| x.to_string()));
        for (attr, col) in schema.sensitive_attributes.iter().zip(d.sensitive_columns()) {
            record.push(token(col[r], &attr.privileged_value, &attr.unprivileged_value));
        }
        record.push(token(
            d.labels()[r],
            &schema.favorable_value,
            &schema.unfavorable_value,
        ));
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Seeded shuffle of `0..n`, cut into a train prefix of
/// `floor(train_fraction * n)` indices and the remaining test indices.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::Size(format!("cannot split {n} rows")));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} not in (0, 1)"
        )));
    }
    let n_train = (train_fraction * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Size(format!(
            "fraction {train_fraction} of {n} rows leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, rng::SPLIT));
    let test = order.split_off(n_train);
    Ok((order, test))
}

/// Train/test split; rows keep their shuffled order.
pub fn split(d: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(d.n_rows(), train_fraction, seed)?;
    Ok((d.select(&train)?, d.select(&test)?))
}

/// Additional sensitive attribute drawn per row from the label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraAttribute {
    pub name: String,
    /// P(a = 1 | y = 1).
    pub privileged_rate_favorable: f64,
    /// P(a = 1 | y = 0).
    pub privileged_rate_unfavorable: f64,
}

/// Recipe for a synthetic dataset with an exact contingency table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub counts: ContingencyTable,
    pub feature_dim: usize,
    /// Shift of every feature's mean for favorable rows.
    pub group_signal: f64,
    pub noise_sd: f64,
    pub seed: u64,
    /// Shift of every feature's mean for privileged rows; non-zero values
    /// make the features a proxy for the attribute.
    #[serde(default)]
    pub proxy_signal: f64,
    #[serde(default = "default_attribute")]
    pub attribute: String,
    #[serde(default)]
    pub extra_attributes: Vec<ExtraAttribute>,
}

fn default_attribute() -> String {
    "a".into()
}

impl SynthSpec {
    pub fn new(counts: ContingencyTable, feature_dim: usize, group_signal: f64, noise_sd: f64, seed: u64) -> Self {
        Self {
            counts,
            feature_dim,
            group_signal,
            noise_sd,
            seed,
            proxy_signal: 0.0,
            attribute: default_attribute(),
            extra_attributes: Vec::new(),
        }
    }

    pub fn schema(&self) -> Schema {
        let mut sensitive = vec![SensitiveAttribute {
            column: self.attribute.clone(),
            privileged_value: "1".into(),
            unprivileged_value: Some("0".into()),
        }];
        sensitive.extend(self.extra_attributes.iter().map(|e| SensitiveAttribute {
            column: e.name.clone(),
            privileged_value: "1".into(),
            unprivileged_value: Some("0".into()),
        }));
        Schema {
            label_column: "y".into(),
            favorable_value: "1".into(),
            unfavorable_value: Some("0".into()),
            sensitive_attributes: sensitive,
            feature_columns: (0..self.feature_dim).map(|j| format!("x{j}")).collect(),
        }
    }
}

/// Builds a dataset whose primary attribute has exactly `spec.counts`.
///
/// Feature `j` of a row with attribute `a` and label `y` is
/// `group_signal * y + proxy_signal * a + noise_sd * z` with `z ~ N(0, 1)`.
/// Row order is shuffled.
pub fn synthesize(spec: &SynthSpec) -> Result<Dataset> {
    let c = spec.counts;
    let nonzero = [c.n11, c.n10, c.n01, c.n00].iter().filter(|&&v| v > 0).count();
    if nonzero < 2 {
        return Err(Error::Size(format!(
            "synthetic counts {c:?} need at least two non-empty cells"
        )));
    }
    if spec.feature_dim == 0 {
        return Err(Error::Config("feature_dim must be at least 1".into()));
    }
    if !(spec.noise_sd > 0.0) {
        return Err(Error::Config(format!("noise_sd {} must be positive", spec.noise_sd)));
    }
    for e in &spec.extra_attributes {
        for p in [e.privileged_rate_favorable, e.privileged_rate_unfavorable] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("rate {p} for `{}` not in [0, 1]", e.name)));
            }
        }
    }

    let mut cells: Vec<(u8, u8)> = Vec::with_capacity(c.total() as usize);
    for (a, y, count) in [(1, 1, c.n11), (1, 0, c.n10), (0, 1, c.n01), (0, 0, c.n00)] {
        cells.extend(std::iter::repeat_n((a, y), count as usize));
    }
    let mut rng = rng::stream(spec.seed, rng::SYNTH);
    cells.shuffle(&mut rng);

    let n = cells.len();
    let mut features = Vec::with_capacity(n * spec.feature_dim);
    let mut primary = Vec::with_capacity(n);
    let mut extras = vec![Vec::with_capacity(n); spec.extra_attributes.len()];
    let mut labels = Vec::with_capacity(n);
    for &(a, y) in &cells {
        let mean = spec.group_signal * f64::from(y) + spec.proxy_signal * f64::from(a);
        for _ in 0..spec.feature_dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            features.push(mean + spec.noise_sd * z);
        }
        for (e, col) in spec.extra_attributes.iter().zip(&mut extras) {
            let p = if y == 1 {
                e.privileged_rate_favorable
            } else {
                e.privileged_rate_unfavorable
            };
            col.push(u8::from(rng.random::<f64>() < p));
        }
        primary.push(a);
        labels.push(y);
    }
    let mut sensitive = vec![primary];
    sensitive.extend(extras);
    Dataset::new(spec.schema(), features, sensitive, labels)
}

/// Uniform sample of `n_keep` rows without replacement, original order kept.
pub fn subsample(d: &Dataset, n_keep: usize, seed: u64) -> Result<Dataset> {
    if n_keep == 0 || n_keep > d.n_rows() {
        return Err(Error::Size(format!(
            "cannot keep {n_keep} of {} rows",
            d.n_rows()
        )));
    }
    let mut picked = index::sample(&mut rng::stream(seed, rng::SUBSAMPLE), d.n_rows(), n_keep).into_vec();
    picked.sort_unstable();
    d.select(&picked)
}

/// Counts of cells touched by [`contaminate_with_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContaminationReport {
    pub imputed_cells: usize,
    pub outlier_cells: usize,
}

/// Perturbs feature cells only; see [`contaminate_with_report`].
pub fn contaminate(
    d: &Dataset,
    missing_rate: f64,
    noise_sd: f64,
    outlier_rate: f64,
    seed: u64,
) -> Result<Dataset> {
    contaminate_with_report(d, missing_rate, noise_sd, outlier_rate, seed).map(|(d, _)| d)
}

/// Per feature cell, independently: with probability `missing_rate` the
/// value is replaced by its column's median (computed before any
/// perturbation); Gaussian noise of `noise_sd` column standard deviations
/// is added; with probability `outlier_rate` the value is multiplied by 10.
/// Labels and sensitive columns are untouched.
pub fn contaminate_with_report(
    d: &Dataset,
    missing_rate: f64,
    noise_sd: f64,
    outlier_rate: f64,
    seed: u64,
) -> Result<(Dataset, ContaminationReport)> {
    if !(0.0..1.0).contains(&missing_rate) {
        return Err(Error::Config(format!("missing_rate {missing_rate} not in [0, 1)")));
    }
    if !(0.0..1.0).contains(&outlier_rate) {
        return Err(Error::Config(format!("outlier_rate {outlier_rate} not in [0, 1)")));
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::Config(format!("noise_sd {noise_sd} must be non-negative")));
    }
    let n = d.n_rows();
    let dim = d.n_features();
    let (medians, sds): (Vec<f64>, Vec<f64>) = (0..dim)
        .map(|j| {
            let col = d.feature_column(j);
            (median(&col), population_sd(&col))
        })
        .unzip();

    let mut rng = rng::stream(seed, rng::CONTAMINATE);
    let mut report = ContaminationReport::default();
    let mut features = d.features().to_vec();
    for r in 0..n {
        for j in 0..dim {
            // Always draw all three so the stream layout is independent of rates.
            let u_missing: f64 = rng.random();
            let z: f64 = StandardNormal.sample(&mut rng);
            let u_outlier: f64 = rng.random();
            let cell = &mut features[r * dim + j];
            if u_missing < missing_rate {
                *cell = medians[j];
                report.imputed_cells += 1;
            }
            if noise_sd > 0.0 {
                *cell += noise_sd * sds[j] * z;
            }
            if u_outlier < outlier_rate {
                *cell *= 10.0;
                report.outlier_cells += 1;
            }
        }
    }
    Ok((d.with_features(features)?, report))
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn population_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{contingency, phi};

    fn schema() -> Schema {
        Schema {
            label_column: "income".into(),
            favorable_value: ">50K".into(),
            unfavorable_value: None,
            sensitive_attributes: vec![SensitiveAttribute::new("sex", "M")],
            feature_columns: vec![],
        }
    }

    #[test]
    fn loads_and_encodes() {
        let csv = "age,sex,hours,income\n30,M,40,>50K\n25,F,20,<=50K\n50,M,60,<=50K\n41,F,38,>50K\n";
        let d = read_csv(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(d.n_rows(), 4);
        assert_eq!(d.schema().feature_columns, vec!["age", "hours"]);
        assert_eq!(d.sensitive("sex").unwrap().iter().map(|&v| v as u32).sum::<u32>(), 2);
        assert_eq!(d.labels(), &[1, 0, 0, 1]);
        assert_eq!(d.feature_row(2), &[50.0, 60.0]);
        assert_eq!(d.schema().unfavorable_value.as_deref(), Some("<=50K"));
    }

    #[test]
    fn empty_file_is_a_schema_error() {
        let err = read_csv("".as_bytes(), &schema()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
    }

    #[test]
    fn missing_column_is_named() {
        let err = read_csv("age,sex\n1,M\n".as_bytes(), &schema()).unwrap_err();
        assert!(err.to_string().contains("income"), "{err}");
    }

    #[test]
    fn third_label_token_is_rejected() {
        let s = Schema {
            label_column: "ok".into(),
            favorable_value: "yes".into(),
            ..schema()
        };
        let csv = "x,sex,ok\n1,M,yes\n2,F,no\n3,F,maybe\n";
        let err = read_csv(csv.as_bytes(), &s).unwrap_err();
        assert!(matches!(err, Error::Cardinality { ref column, .. } if column == "ok"), "{err}");
    }

    #[test]
    fn bad_number_reports_row() {
        let csv = "age,sex,income\n1,M,>50K\nabc,F,>50K\n";
        match read_csv(csv.as_bytes(), &schema()).unwrap_err() {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "age");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn schema_rejects_overlap_and_empty_sensitive() {
        let mut s = schema();
        s.feature_columns = vec!["sex".into()];
        assert!(s.validate().is_err());
        let mut s = schema();
        s.sensitive_attributes.clear();
        assert!(s.validate().is_err());
    }

    fn fixture() -> Dataset {
        synthesize(&SynthSpec::new(ContingencyTable::new(30, 20, 10, 40), 3, 1.0, 1.0, 9)).unwrap()
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = synthesize(&SynthSpec::new(ContingencyTable::new(3, 2, 2, 3), 2, 1.0, 1.0, 1)).unwrap();
        let (tr, te) = split(&d, 0.7, 5).unwrap();
        assert_eq!((tr.n_rows(), te.n_rows()), (7, 3));
        let again = split(&d, 0.7, 5).unwrap();
        assert_eq!(tr, again.0);
        assert_eq!(te, again.1);
    }

    #[test]
    fn split_errors() {
        assert!(matches!(split_indices(1, 0.7, 0), Err(Error::Size(_))));
        assert!(split_indices(10, 1.0, 0).is_err());
        assert!(split_indices(2, 0.3, 0).is_err());
    }

    #[test]
    fn split_differs_across_seeds() {
        let (a, _) = split_indices(1000, 0.7, 1).unwrap();
        let (b, _) = split_indices(1000, 0.7, 2).unwrap();
        let sa: BTreeSet<_> = a.into_iter().collect();
        let sb: BTreeSet<_> = b.into_iter().collect();
        assert_ne!(sa, sb);
    }

    #[test]
    fn split_is_a_partition() {
        let (mut tr, te) = split_indices(257, 0.7, 3).unwrap();
        tr.extend(te);
        tr.sort_unstable();
        assert_eq!(tr, (0..257).collect::<Vec<_>>());
    }

    #[test]
    fn synthesize_hits_counts() {
        let d = fixture();
        let t = contingency(&d, "a").unwrap();
        assert_eq!(t, ContingencyTable::new(30, 20, 10, 40));
        let balanced = synthesize(&SynthSpec::new(ContingencyTable::new(25, 25, 25, 25), 2, 1.0, 1.0, 0)).unwrap();
        assert_eq!(phi(&contingency(&balanced, "a").unwrap()).unwrap(), 0.0);
        assert!((phi(&t).unwrap() - 0.4082).abs() < 1e-4);
    }

    #[test]
    fn synthesize_rejects_degenerate_counts() {
        let zero = SynthSpec::new(ContingencyTable::new(0, 0, 0, 0), 2, 1.0, 1.0, 0);
        assert!(matches!(synthesize(&zero), Err(Error::Size(_))));
        let single = SynthSpec::new(ContingencyTable::new(5, 0, 0, 0), 2, 1.0, 1.0, 0);
        assert!(matches!(synthesize(&single), Err(Error::Size(_))));
    }

    #[test]
    fn csv_round_trip_of_loaded_data() {
        let csv = "age,sex,income\n30,M,>50K\n25.5,F,<=50K\n";
        let d = read_csv(csv.as_bytes(), &schema()).unwrap();
        let mut buf = Vec::new();
        write_csv_to(&d, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), d.schema()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn subsample_behaviour() {
        let d = fixture();
        assert_eq!(subsample(&d, d.n_rows(), 3).unwrap(), d);
        let s = subsample(&d, 10, 3).unwrap();
        assert_eq!(s.n_rows(), 10);
        assert_eq!(s, subsample(&d, 10, 3).unwrap());
        assert!(subsample(&d, 0, 3).is_err());
        assert!(subsample(&d, 101, 3).is_err());
    }

    #[test]
    fn contaminate_identity_and_label_preservation() {
        let d = fixture();
        assert_eq!(contaminate(&d, 0.0, 0.0, 0.0, 4).unwrap(), d);
        let c = contaminate(&d, 0.3, 0.5, 0.1, 4).unwrap();
        assert_eq!(c.labels(), d.labels());
        assert_eq!(c.sensitive_columns(), d.sensitive_columns());
        assert_ne!(c.features(), d.features());
        assert!(contaminate(&d, 1.0, 0.0, 0.0, 4).is_err());
        assert!(contaminate(&d, 0.0, -1.0, 0.0, 4).is_err());
    }
}
