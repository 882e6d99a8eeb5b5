//! `cotune` command line.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data or validation
//! errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use super::experiment::{run_experiment, ExperimentConfig, Method};
use super::report::emit_report;
use crate::correlation::{adjustment_count, adjustment_proportion, contingency, phi, ContingencyTable};
use crate::cot::{cot_multi, cot_opt, cot_phi, LossKind, OptConfig, TuneMethod, TuneSummary};
use crate::fairea::{
    build_all_baselines, build_baseline, classify, default_rates, BaselineCurve, TradeoffPoint, TradeoffRegion,
    DEFAULT_REPEATS,
};
use crate::metrics::{evaluate_raw, FairnessMetric, PerformanceMetric};
use crate::tabular::{load_csv, synthesize, write_csv, Schema, SynthSpec};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "cotune", version, about = "Correlation tuning for fairer binary classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tune a dataset and write the result plus a JSON sidecar.
    Tune(TuneArgs),
    /// Score predictions: performance and fairness metrics as JSON.
    Metrics(MetricsArgs),
    /// Run a repeated experiment and write report.json and tradeoff.csv.
    Experiment(ExperimentArgs),
    /// Generate a synthetic dataset from a JSON spec.
    Synth(SynthArgs),
    /// Build trade-off baselines from predictions.
    Baseline(BaselineArgs),
    /// Contingency table, phi and analytic flip count per attribute.
    Phi(PhiArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Original,
    Phi,
    Opt,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LossArg {
    Single,
    Intersectional,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Single => LossKind::Single,
            LossArg::Intersectional => LossKind::Intersectional,
        }
    }
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[command(flatten)]
    input: DataArgs,
    /// Attributes in tuning order.
    #[arg(long, value_delimiter = ',', required = true)]
    attrs: Vec<String>,
    #[arg(long, value_enum, default_value = "phi")]
    method: MethodArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    loss: Option<LossArg>,
    /// Tuned CSV.
    #[arg(long)]
    out: PathBuf,
    /// Sidecar JSON; defaults to the output path with a `.json` extension.
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// CSV with `y_true`, `y_pred` and one 0/1 column per attribute.
    #[arg(long)]
    predictions: PathBuf,
    /// Attribute columns; defaults to every other column.
    #[arg(long, value_delimiter = ',')]
    attrs: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// JSON config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_delimiter = ',')]
    attrs: Vec<String>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed_base: Option<u64>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long, value_enum)]
    loss: Option<LossArg>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the matching schema JSON.
    #[arg(long)]
    schema_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    /// CSV with `y_true`, `y_pred` and the attribute column.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long, default_value = "a")]
    attr: String,
    /// Single fairness metric; all fifteen pairs when omitted together
    /// with --performance.
    #[arg(long)]
    fairness: Option<FairnessMetric>,
    #[arg(long)]
    performance: Option<PerformanceMetric>,
    #[arg(long, value_delimiter = ',')]
    rates: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Column of candidate predictions to classify against each curve.
    #[arg(long)]
    candidate: Option<String>,
    /// Directory for baseline.json and baseline.csv; JSON goes to stdout
    /// otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PhiArgs {
    #[command(flatten)]
    input: DataArgs,
    /// Defaults to every sensitive attribute in the schema.
    #[arg(long, value_delimiter = ',')]
    attrs: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Tune(a) => tune(a),
        Command::Metrics(a) => metrics(a),
        Command::Experiment(a) => experiment(a),
        Command::Synth(a) => synth(a),
        Command::Baseline(a) => baseline(a),
        Command::Phi(a) => phi_report(a),
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    method: &'static str,
    seed: u64,
    flips: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi_before: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi_after: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    proportion: Option<f64>,
    stages: &'a [TuneSummary],
}

fn tune(a: TuneArgs) -> Result<()> {
    let schema = Schema::from_json_file(&a.input.schema)?;
    let data = load_csv(&a.input.data, &schema)?;
    let mut cfg = OptConfig::default();
    if let Some(l) = a.loss {
        cfg.loss_kind = l.into();
    }
    let (tuned, stages) = match (a.method, a.attrs.as_slice()) {
        (MethodArg::Original, _) => {
            return Err(Error::Config("tune needs --method phi or opt".into()));
        }
        (MethodArg::Phi, [attr]) => {
            let r = cot_phi(&data, attr, a.seed)?;
            (r.dataset, vec![r.summary])
        }
        (MethodArg::Opt, [attr]) => {
            let r = cot_opt(&data, attr, &cfg, a.seed)?;
            (r.dataset, vec![r.summary])
        }
        (m, attrs) => {
            let method = if matches!(m, MethodArg::Phi) {
                TuneMethod::Phi
            } else {
                TuneMethod::Opt
            };
            let r = cot_multi(&data, attrs, method, &cfg, a.seed)?;
            (r.dataset, r.stages)
        }
    };
    write_csv(&tuned, &a.out)?;
    let single = (stages.len() == 1).then(|| &stages[0]);
    let sidecar = Sidecar {
        method: if matches!(a.method, MethodArg::Phi) { "phi" } else { "opt" },
        seed: a.seed,
        flips: stages.iter().map(TuneSummary::flips).sum(),
        phi_before: single.and_then(|s| s.phi_before),
        phi_after: single.and_then(|s| s.phi_after),
        proportion: single.map(|s| s.proportion_applied),
        stages: &stages,
    };
    let path = a.sidecar.unwrap_or_else(|| a.out.with_extension("json"));
    write_json(&sidecar, Some(&path))
}

/// Reads a CSV of 0/1 columns keyed by header.
fn read_binary_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<u8>>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut cols = vec![Vec::new(); headers.len()];
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        for (j, field) in rec.iter().enumerate() {
            let v = match field.trim() {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::Parse {
                        row,
                        column: headers[j].clone(),
                        value: other.to_string(),
                    })
                }
            };
            cols[j].push(v);
        }
    }
    Ok((headers, cols))
}

fn column<'a>(headers: &[String], cols: &'a [Vec<u8>], name: &str) -> Result<&'a [u8]> {
    headers
        .iter()
        .position(|h| h == name)
        .map(|j| cols[j].as_slice())
        .ok_or_else(|| Error::Schema(format!("column `{name}` not found")))
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let (headers, cols) = read_binary_columns(&a.predictions)?;
    let y_true = column(&headers, &cols, "y_true")?;
    let y_pred = column(&headers, &cols, "y_pred")?;
    let names: Vec<String> = if a.attrs.is_empty() {
        headers
            .iter()
            .filter(|h| *h != "y_true" && *h != "y_pred")
            .cloned()
            .collect()
    } else {
        a.attrs
    };
    let attrs = names
        .iter()
        .map(|n| Ok((n.clone(), column(&headers, &cols, n)?)))
        .collect::<Result<Vec<_>>>()?;
    let bundle = evaluate_raw(y_true, y_pred, &attrs)?;
    write_json(&bundle, a.out.as_deref())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::from_json_file(p)?,
        None => ExperimentConfig::default(),
    };
    if a.data.is_some() {
        cfg.data_path = a.data;
    }
    if a.schema.is_some() {
        cfg.schema_path = a.schema;
    }
    if let Some(m) = a.method {
        cfg.method = match m {
            MethodArg::Original => Method::Original,
            MethodArg::Phi => Method::CotPhi,
            MethodArg::Opt => Method::CotOpt,
        };
    }
    if !a.attrs.is_empty() {
        cfg.attrs = a.attrs;
    }
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
    if let Some(s) = a.seed_base {
        cfg.seed_base = s;
    }
    if let Some(f) = a.train_fraction {
        cfg.train_fraction = f;
    }
    if let Some(l) = a.loss {
        cfg.opt.loss_kind = l.into();
    }
    if a.out.is_some() {
        cfg.output_path = a.out;
    }
    let out = cfg
        .output_path
        .clone()
        .ok_or_else(|| Error::Config("an output directory is required (--out)".into()))?;
    let report = run_experiment(&cfg)?;
    let (json, csv) = emit_report(&report, &out)?;
    eprintln!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let text = fs::read_to_string(&a.spec).map_err(|e| Error::io(&a.spec, e))?;
    let spec: SynthSpec = serde_json::from_str(&text)?;
    let d = synthesize(&spec)?;
    write_csv(&d, &a.out)?;
    if let Some(p) = &a.schema_out {
        write_json(&spec.schema(), Some(p))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CurveReport {
    fairness_metric: FairnessMetric,
    performance_metric: PerformanceMetric,
    curve: BaselineCurve,
    #[serde(skip_serializing_if = "Option::is_none")]
    candidate: Option<TradeoffPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    region: Option<TradeoffRegion>,
}

fn baseline(a: BaselineArgs) -> Result<()> {
    let (headers, cols) = read_binary_columns(&a.predictions)?;
    let y_true = column(&headers, &cols, "y_true")?;
    let y_pred = column(&headers, &cols, "y_pred")?;
    let attr = column(&headers, &cols, &a.attr)?;
    let rates = if a.rates.is_empty() { default_rates() } else { a.rates };
    let curves = match (a.fairness, a.performance) {
        (None, None) => build_all_baselines(y_true, y_pred, attr, &rates, a.repeats, a.seed)?,
        (f, p) => {
            let f = f.unwrap_or(FairnessMetric::Spd);
            let p = p.unwrap_or(PerformanceMetric::Accuracy);
            vec![(f, p, build_baseline(y_true, y_pred, attr, f, p, &rates, a.repeats, a.seed)?)]
        }
    };
    let candidate = match &a.candidate {
        Some(name) => {
            let pred = column(&headers, &cols, name)?;
            let g = crate::metrics::group_fairness(y_true, pred, attr)?;
            let p = crate::metrics::performance(y_true, pred)?;
            Some((g, p))
        }
        None => None,
    };
    let reports: Vec<CurveReport> = curves
        .into_iter()
        .map(|(fm, pm, curve)| {
            let point = candidate.as_ref().map(|(g, p)| TradeoffPoint {
                fairness: fm.of(g),
                performance: pm.of(p),
            });
            CurveReport {
                fairness_metric: fm,
                performance_metric: pm,
                region: point.map(|pt| classify(pt, &curve)),
                candidate: point,
                curve,
            }
        })
        .collect();
    match &a.out {
        None => write_json(&reports, None),
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            write_json(&reports, Some(&dir.join("baseline.json")))?;
            let path = dir.join("baseline.csv");
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["fairness_metric", "performance_metric", "mutation_rate", "fairness", "performance"])?;
            for r in &reports {
                for p in &r.curve.points {
                    w.write_record([
                        r.fairness_metric.to_string(),
                        r.performance_metric.to_string(),
                        p.mutation_rate.to_string(),
                        p.fairness.to_string(),
                        p.performance.to_string(),
                    ])?;
                }
            }
            w.flush().map_err(|e| Error::io(&path, e))
        }
    }
}

#[derive(Serialize)]
struct PhiEntry {
    attribute: String,
    counts: ContingencyTable,
    phi: Option<f64>,
    flips: Option<u64>,
    proportion: Option<f64>,
}

fn phi_report(a: PhiArgs) -> Result<()> {
    let schema = Schema::from_json_file(&a.input.schema)?;
    let data = load_csv(&a.input.data, &schema)?;
    let attrs: Vec<String> = if a.attrs.is_empty() {
        schema.sensitive_names().map(str::to_string).collect()
    } else {
        a.attrs
    };
    let entries = attrs
        .into_iter()
        .map(|attr| {
            let t = contingency(&data, &attr)?;
            Ok(PhiEntry {
                counts: t,
                phi: phi(&t).ok(),
                flips: adjustment_count(&t).ok(),
                proportion: adjustment_proportion(&t).ok(),
                attribute: attr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_json(&entries, a.out.as_deref())
}
