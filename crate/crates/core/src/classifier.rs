//! Logistic regression trained by full-batch gradient descent, and the
//! [`Classifier`] trait that lets other models plug into the tuning loop and
//! the experiment harness.

use serde::{Deserialize, Serialize};

use crate::tabular::Dataset;
use crate::{Error, Result};

/// Something that can be fitted on a [`Dataset`].
pub trait Classifier: Sync {
    type Model: Predictor;

    fn fit(&self, train: &Dataset, seed: u64) -> Result<Self::Model>;
}

/// A fitted model producing `0/1` predictions.
pub trait Predictor: Send + Sync {
    fn predict(&self, d: &Dataset) -> Result<Vec<u8>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub threshold: f64,
    /// Append the sensitive columns (schema order) to the inputs.
    pub include_sensitive_as_features: bool,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 300,
            l2: 1e-4,
            threshold: 0.5,
            include_sensitive_as_features: true,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning_rate {} must be positive", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::Config(format!("l2 {} must be non-negative", self.l2)));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold {} not in (0, 1)", self.threshold)));
        }
        Ok(())
    }
}

impl Classifier for ClassifierConfig {
    type Model = TrainedModel;

    fn fit(&self, train: &Dataset, seed: u64) -> Result<TrainedModel> {
        fit(train, self, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_means: Vec<f64>,
    pub feature_sds: Vec<f64>,
    pub config: ClassifierConfig,
}

impl Predictor for TrainedModel {
    fn predict(&self, d: &Dataset) -> Result<Vec<u8>> {
        predict(self, d)
    }
}

/// Raw (unstandardized) model inputs: features, then sensitive columns if
/// configured. Row-major.
fn raw_inputs(d: &Dataset, cfg: &ClassifierConfig) -> (Vec<f64>, usize) {
    let n_sens = if cfg.include_sensitive_as_features {
        d.sensitive_columns().len()
    } else {
        0
    };
    let cols = d.n_features() + n_sens;
    let mut out = Vec::with_capacity(d.n_rows() * cols);
    for r in 0..d.n_rows() {
        out.extend_from_slice(d.feature_row(r));
        if n_sens > 0 {
            out.extend(d.sensitive_columns().iter().map(|c| f64::from(c[r])));
        }
    }
    (out, cols)
}

/// Standardized design matrix with binary targets; exposes the training
/// objective and its gradient.
#[derive(Debug, Clone)]
pub struct Design {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
    targets: Vec<f64>,
}

impl Design {
    pub fn new(values: Vec<f64>, rows: usize, cols: usize, targets: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols || targets.len() != rows || rows == 0 {
            return Err(Error::Shape(format!(
                "design of {} cells and {} targets does not match {rows} x {cols}",
                values.len(),
                targets.len()
            )));
        }
        Ok(Self {
            values,
            rows,
            cols,
            targets,
        })
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    fn logit(&self, r: usize, w: &[f64], b: f64) -> f64 {
        self.row(r).iter().zip(w).map(|(x, w)| x * w).sum::<f64>() + b
    }

    /// Mean binary cross-entropy plus `l2 / 2 * |w|^2` (bias unpenalized).
    pub fn loss(&self, w: &[f64], b: f64, l2: f64) -> f64 {
        let data: f64 = (0..self.rows)
            .map(|r| {
                let z = self.logit(r, w, b);
                softplus(z) - self.targets[r] * z
            })
            .sum::<f64>()
            / self.rows as f64;
        data + 0.5 * l2 * w.iter().map(|w| w * w).sum::<f64>()
    }

    /// Gradient of [`Design::loss`] with respect to `(w, b)`.
    pub fn gradient(&self, w: &[f64], b: f64, l2: f64) -> (Vec<f64>, f64) {
        let mut gw = vec![0.0; self.cols];
        let mut gb = 0.0;
        for r in 0..self.rows {
            let residual = sigmoid(self.logit(r, w, b)) - self.targets[r];
            for (g, x) in gw.iter_mut().zip(self.row(r)) {
                *g += residual * x;
            }
            gb += residual;
        }
        let n = self.rows as f64;
        for (g, w) in gw.iter_mut().zip(w) {
            *g = *g / n + l2 * w;
        }
        (gw, gb / n)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn column_stats(values: &[f64], rows: usize, cols: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows as f64;
    let mut means = vec![0.0; cols];
    for r in 0..rows {
        for (m, x) in means.iter_mut().zip(&values[r * cols..(r + 1) * cols]) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut vars = vec![0.0; cols];
    for r in 0..rows {
        for ((v, x), m) in vars.iter_mut().zip(&values[r * cols..(r + 1) * cols]).zip(&means) {
            *v += (x - m).powi(2);
        }
    }
    let sds = vars
        .into_iter()
        .map(|v| {
            let sd = (v / n).sqrt();
            if sd > 0.0 { sd } else { 1.0 }
        })
        .collect();
    (means, sds)
}

fn standardize(values: &mut [f64], cols: usize, means: &[f64], sds: &[f64]) {
    for row in values.chunks_mut(cols.max(1)) {
        for ((x, m), s) in row.iter_mut().zip(means).zip(sds) {
            *x = (*x - m) / s;
        }
    }
}

/// Fits logistic regression. Deterministic; `seed` is accepted for
/// interface parity with stochastic classifiers and currently unused.
pub fn fit(train: &Dataset, cfg: &ClassifierConfig, _seed: u64) -> Result<TrainedModel> {
    fit_impl(train, cfg, false).map(|(m, _)| m)
}

/// [`fit`] plus the training objective after every epoch (index 0 is the
/// objective of the zero-initialized model).
pub fn fit_with_trace(train: &Dataset, cfg: &ClassifierConfig, _seed: u64) -> Result<(TrainedModel, Vec<f64>)> {
    fit_impl(train, cfg, true)
}

fn fit_impl(train: &Dataset, cfg: &ClassifierConfig, trace_loss: bool) -> Result<(TrainedModel, Vec<f64>)> {
    cfg.validate()?;
    let positives = train.labels().iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == train.n_rows() {
        return Err(Error::Training(format!(
            "training set of {} rows has a single label class",
            train.n_rows()
        )));
    }
    let (mut values, cols) = raw_inputs(train, cfg);
    let rows = train.n_rows();
    let (means, sds) = column_stats(&values, rows, cols);
    standardize(&mut values, cols, &means, &sds);
    let targets = train.labels().iter().map(|&y| f64::from(y)).collect();
    let design = Design::new(values, rows, cols, targets)?;

    let mut w = vec![0.0; cols];
    let mut b = 0.0;
    let mut trace = Vec::new();
    if trace_loss {
        trace.push(design.loss(&w, b, cfg.l2));
    }
    for _ in 0..cfg.epochs {
        let (gw, gb) = design.gradient(&w, b, cfg.l2);
        for (w, g) in w.iter_mut().zip(&gw) {
            *w -= cfg.learning_rate * g;
        }
        b -= cfg.learning_rate * gb;
        if trace_loss {
            trace.push(design.loss(&w, b, cfg.l2));
        }
    }
    Ok((
        TrainedModel {
            weights: w,
            bias: b,
            feature_means: means,
            feature_sds: sds,
            config: cfg.clone(),
        },
        trace,
    ))
}

/// Probability of the favorable label per row.
pub fn predict_proba(model: &TrainedModel, d: &Dataset) -> Result<Vec<f64>> {
    let (mut values, cols) = raw_inputs(d, &model.config);
    if cols != model.weights.len() {
        return Err(Error::Shape(format!(
            "model expects {} inputs, dataset provides {cols}",
            model.weights.len()
        )));
    }
    standardize(&mut values, cols, &model.feature_means, &model.feature_sds);
    Ok((0..d.n_rows())
        .map(|r| {
            let row = &values[r * cols..(r + 1) * cols];
            sigmoid(row.iter().zip(&model.weights).map(|(x, w)| x * w).sum::<f64>() + model.bias)
        })
        .collect())
}

/// `1` where the predicted probability reaches the threshold.
pub fn predict(model: &TrainedModel, d: &Dataset) -> Result<Vec<u8>> {
    Ok(predict_proba(model, d)?
        .into_iter()
        .map(|p| u8::from(p >= model.config.threshold))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::ContingencyTable;
    use crate::tabular::{synthesize, Schema, SensitiveAttribute, SynthSpec};

    fn one_dim(xs: &[f64], ys: &[u8]) -> Dataset {
        let schema = Schema {
            label_column: "y".into(),
            favorable_value: "1".into(),
            unfavorable_value: None,
            sensitive_attributes: vec![SensitiveAttribute::new("a", "1")],
            feature_columns: vec!["x".into()],
        };
        let a = (0..xs.len()).map(|i| (i % 2) as u8).collect();
        Dataset::new(schema, xs.to_vec(), vec![a], ys.to_vec()).unwrap()
    }

    fn separable() -> Dataset {
        let xs = [-3.0, -2.5, -2.0, -1.5, -1.0, 1.0, 1.5, 2.0, 2.5, 3.0];
        let ys = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        one_dim(&xs, &ys)
    }

    #[test]
    fn separable_data_is_fit_exactly() {
        let d = separable();
        let m = fit(&d, &ClassifierConfig::default(), 0).unwrap();
        assert_eq!(predict(&m, &d).unwrap(), d.labels());
    }

    #[test]
    fn single_class_is_a_training_error() {
        let d = one_dim(&[1.0, 2.0, 3.0], &[1, 1, 1]);
        assert!(matches!(fit(&d, &ClassifierConfig::default(), 0), Err(Error::Training(_))));
    }

    #[test]
    fn zero_model_predicts_favorable_at_the_tie() {
        let d = separable();
        let m = TrainedModel {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            feature_means: vec![0.0, 0.0],
            feature_sds: vec![1.0, 1.0],
            config: ClassifierConfig::default(),
        };
        assert!(predict(&m, &d).unwrap().iter().all(|&p| p == 1));
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let d = separable();
        let mut m = fit(&d, &ClassifierConfig::default(), 0).unwrap();
        m.weights.push(1.0);
        assert!(matches!(predict(&m, &d), Err(Error::Shape(_))));
    }

    #[test]
    fn beats_majority_rate_on_signal() {
        let d = synthesize(&SynthSpec::new(ContingencyTable::new(300, 200, 100, 400), 5, 1.0, 1.0, 3)).unwrap();
        let m = fit(&d, &ClassifierConfig::default(), 0).unwrap();
        let pred = predict(&m, &d).unwrap();
        let acc = pred.iter().zip(d.labels()).filter(|(p, y)| p == y).count() as f64 / 1000.0;
        // majority class: 600 unfavorable of 1000
        assert!(acc > 0.6, "accuracy {acc}");
    }

    #[test]
    fn training_loss_is_non_increasing() {
        let d = synthesize(&SynthSpec::new(ContingencyTable::new(60, 40, 20, 80), 4, 0.7, 1.0, 8)).unwrap();
        let (_, trace) = fit_with_trace(&d, &ClassifierConfig::default(), 0).unwrap();
        assert_eq!(trace.len(), 301);
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn predictions_are_pure() {
        let d = separable();
        let m = fit(&d, &ClassifierConfig::default(), 0).unwrap();
        assert_eq!(predict(&m, &d).unwrap(), predict(&m, &d).unwrap());
        assert_eq!(m, fit(&d, &ClassifierConfig::default(), 0).unwrap());
    }
}
