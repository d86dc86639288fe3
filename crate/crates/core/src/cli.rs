//! Command-line front end.
//!
//! Every command reads an optional JSON [`RunConfig`] (`--config`), applies
//! flag overrides, runs, and writes `<command>.config.json` (the effective
//! configuration) and `<command>.status.json` into the run directory. The run
//! directory is `--run-dir` if given, otherwise the directory of the first
//! output file. Commands that only print to stdout and have no run directory write
//! no artifacts.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::basis::{self, Basis, WeightVector};
use crate::diffusion::{self, DiffusionCheckpoint, DiffusionTrainConfig, LatentSpec};
use crate::error::{Error, Result};
use crate::experiments::{self, derive_seed, seed_offsets, FeatureVsClassConfig, NgmgVsBceConfig};
use crate::losses::LossName;
use crate::metrics::{self, W1Evaluator};
use crate::net::{self, Activation, Mlp, Sample, TrainConfig};
use crate::ngmg;
use crate::plot::{self, PlotSpec, Series};
use crate::quadrature::DEFAULT_GRID_POINTS;
use crate::transport::{self, TransportConfig, UpdateRule};

// ---------------------------------------------------------------------------
// Configuration document

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data: Option<PathBuf>,
    pub basis: Option<PathBuf>,
    pub p: Option<PathBuf>,
    pub q: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub init: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub basis_out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub curve: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub run_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub n_components: usize,
    /// `None` uses the component spacing.
    pub scale: Option<f64>,
    pub support_pad: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_components: 64,
            scale: None,
            support_pad: basis::DEFAULT_SUPPORT_PAD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct W1Config {
    pub grid_points: usize,
    /// Samples drawn from each mixture for the empirical estimate.
    pub samples: usize,
}

impl Default for W1Config {
    fn default() -> Self {
        Self {
            grid_points: DEFAULT_GRID_POINTS,
            samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NgmgConfig {
    /// `None` uses twice the basis spacing.
    pub kernel_scale: Option<f64>,
    pub check_prop2: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub hidden_activation: Activation,
    /// Leading CSV columns used as inputs; the rest are targets.
    pub input_columns: usize,
    pub train: TrainConfig,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            hidden_activation: Activation::Tanh,
            input_columns: 1,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusionConfig {
    pub hidden: Vec<usize>,
    /// Leading CSV columns holding the data coordinates.
    pub data_dim: usize,
    pub t_max: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub code_len: usize,
    /// Hidden width of the classifier head; `None` trains without a head.
    pub head_hidden: Option<usize>,
    pub train: DiffusionTrainConfig,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128],
            data_dim: 2,
            t_max: diffusion::DEFAULT_STEPS,
            beta_start: diffusion::DEFAULT_BETA_START,
            beta_end: diffusion::DEFAULT_BETA_END,
            code_len: 8,
            head_hidden: None,
            train: DiffusionTrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub n_samples: usize,
    /// Names of the active attributes.
    pub features: Vec<String>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            n_samples: 100,
            features: Vec::new(),
        }
    }
}

/// Everything a run depends on. Every field has a default and unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub master_seed: u64,
    pub paths: Paths,
    pub fit: FitConfig,
    pub w1: W1Config,
    pub ngmg: NgmgConfig,
    pub transport: TransportConfig,
    pub mlp: MlpConfig,
    pub diffusion: DiffusionConfig,
    pub sample: SampleConfig,
    pub feature_vs_class: FeatureVsClassConfig,
    pub ngmg_vs_bce: NgmgVsBceConfig,
}

// ---------------------------------------------------------------------------
// Arguments

#[derive(Debug, Parser)]
#[command(name = "ngmg", version, about = "GMM expansion, Wasserstein distances and NGMG tools")]
pub struct Cli {
    /// JSON run configuration; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed for every random stream
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for the config echo and status file
    #[arg(long, global = true, value_name = "DIR")]
    pub run_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit GMM-expansion weights to one-value-per-line data
    Fit(FitArgs),
    /// Integral, vectorized and empirical W1 between two weight vectors
    W1(W1Args),
    /// NGMG of the deficit between two weight vectors
    Ngmg(NgmgArgs),
    /// Transport an initial weight vector onto a target
    Transport(TransportArgs),
    /// Train a multi-label MLP on a CSV dataset
    TrainMlp(TrainMlpArgs),
    /// Train a GMM-conditioned diffusion model on a CSV dataset
    TrainDiffusion(TrainDiffusionArgs),
    /// Draw samples from a trained diffusion checkpoint
    Sample(SampleArgs),
    /// Run a comparative experiment
    Exp {
        #[command(subcommand)]
        experiment: ExpCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExpCommand {
    /// Defect rates of feature- versus class-conditioned diffusion
    FeatureVsClass(FeatureVsClassArgs),
    /// Test MSE of NGMG entropy versus BCE training
    NgmgVsBce(NgmgVsBceArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Number of components
    #[arg(long)]
    pub n: Option<usize>,
    /// Shared component scale
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Support padding in units of sigma
    #[arg(long)]
    pub pad: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Basis output; defaults to the weights path with extension `.basis.json`
    #[arg(long)]
    pub basis_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct W1Args {
    #[arg(long)]
    pub basis: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<PathBuf>,
    #[arg(long)]
    pub q: Option<PathBuf>,
    /// Quadrature nodes
    #[arg(long)]
    pub grid: Option<usize>,
    /// Samples per mixture for the empirical estimate
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NgmgArgs {
    #[arg(long)]
    pub basis: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<PathBuf>,
    #[arg(long)]
    pub q: Option<PathBuf>,
    #[arg(long)]
    pub sigma_kernel: Option<f64>,
    /// Also report the W1 identity residual
    #[arg(long)]
    pub check_prop2: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransportArgs {
    /// Basis file; a unit-spacing basis is used when omitted
    #[arg(long)]
    pub basis: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub sigma_kernel: Option<f64>,
    /// gravitational or additive
    #[arg(long)]
    pub rule: Option<String>,
    /// Trace CSV (iter,w1,ngmg_norm)
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Final weight vector
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainMlpArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated hidden widths
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// bce, ngmg_literal, ngmg_two_sided or mse
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub inputs: Option<usize>,
    /// Loss curve CSV (iter,loss)
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainDiffusionArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub beta_start: Option<f64>,
    #[arg(long)]
    pub beta_end: Option<f64>,
    #[arg(long)]
    pub code_len: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// Attach a classifier head with this hidden width
    #[arg(long)]
    pub head_hidden: Option<usize>,
    #[arg(long)]
    pub lambda_cls: Option<f64>,
    #[arg(long)]
    pub classifier_loss: Option<String>,
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated names of the active attributes
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeatureVsClassArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NgmgVsBceArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// File helpers

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn emit_plot(series: &[Series], spec: &PlotSpec, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    plot::emit_plot(series, spec, path)
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::invalid(format!("missing required --{flag}")))
}

/// One value per line; blank lines and `#` comments are skipped.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: not a number: {line:?}", i + 1)))?;
        if !v.is_finite() {
            return Err(Error::Parse(format!("line {}: non-finite value", i + 1)));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Parse("data file contains no values".into()));
    }
    Ok(out)
}

/// Numeric CSV with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn parse_table(text: &str) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse(format!("row {}: bad number {f:?}", i + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("table has no rows".into()));
    }
    Ok(Table { header, rows })
}

fn binary_attribute(v: f64, row: usize) -> Result<u8> {
    match v {
        x if x == 0.0 => Ok(0),
        x if x == 1.0 => Ok(1),
        _ => Err(Error::Parse(format!("row {}: attributes must be 0 or 1, got {v}", row + 2))),
    }
}

// ---------------------------------------------------------------------------
// Dispatch

/// What a command reports back for the status file.
struct Outcome {
    outputs: Vec<PathBuf>,
    seeds: Value,
    details: Value,
}

impl Outcome {
    fn new(outputs: Vec<PathBuf>, details: Value) -> Self {
        Self {
            outputs,
            seeds: json!({}),
            details,
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Fit(_) => "fit",
        Command::W1(_) => "w1",
        Command::Ngmg(_) => "ngmg",
        Command::Transport(_) => "transport",
        Command::TrainMlp(_) => "train-mlp",
        Command::TrainDiffusion(_) => "train-diffusion",
        Command::Sample(_) => "sample",
        Command::Exp {
            experiment: ExpCommand::FeatureVsClass(_),
        } => "feature-vs-class",
        Command::Exp {
            experiment: ExpCommand::NgmgVsBce(_),
        } => "ngmg-vs-bce",
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_some<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

/// Builds the effective configuration: file values, then flags.
pub fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg: RunConfig = match &cli.config {
        Some(path) => read_json(path)?,
        None => RunConfig::default(),
    };
    cfg.command = command_name(&cli.command).to_string();
    set(&mut cfg.master_seed, cli.seed);
    set_some(&mut cfg.paths.run_dir, cli.run_dir.clone());
    let p = &mut cfg.paths;
    match &cli.command {
        Command::Fit(a) => {
            set_some(&mut p.data, a.data.clone());
            set_some(&mut p.out, a.out.clone());
            set_some(&mut p.basis_out, a.basis_out.clone());
            set(&mut cfg.fit.n_components, a.n);
            set_some(&mut cfg.fit.scale, a.sigma);
            set(&mut cfg.fit.support_pad, a.pad);
        }
        Command::W1(a) => {
            set_some(&mut p.basis, a.basis.clone());
            set_some(&mut p.p, a.p.clone());
            set_some(&mut p.q, a.q.clone());
            set_some(&mut p.out, a.out.clone());
            set(&mut cfg.w1.grid_points, a.grid);
            set(&mut cfg.w1.samples, a.samples);
        }
        Command::Ngmg(a) => {
            set_some(&mut p.basis, a.basis.clone());
            set_some(&mut p.p, a.p.clone());
            set_some(&mut p.q, a.q.clone());
            set_some(&mut p.out, a.out.clone());
            set_some(&mut cfg.ngmg.kernel_scale, a.sigma_kernel);
            cfg.ngmg.check_prop2 |= a.check_prop2;
        }
        Command::Transport(a) => {
            set_some(&mut p.basis, a.basis.clone());
            set_some(&mut p.target, a.target.clone());
            set_some(&mut p.init, a.init.clone());
            set_some(&mut p.trace, a.trace.clone());
            set_some(&mut p.out, a.out.clone());
            set_some(&mut p.plot, a.plot.clone());
            let t = &mut cfg.transport;
            set(&mut t.step_size, a.eta);
            set(&mut t.tolerance, a.eps);
            set(&mut t.max_iters, a.max_iters);
            set_some(&mut t.kernel_scale, a.sigma_kernel);
            if let Some(rule) = &a.rule {
                t.rule = match rule.as_str() {
                    "gravitational" => UpdateRule::Gravitational,
                    "additive" => UpdateRule::Additive,
                    other => return Err(Error::invalid(format!("unknown transport rule {other:?}"))),
                };
            }
            t.record_trace = false;
        }
        Command::TrainMlp(a) => {
            set_some(&mut p.data, a.data.clone());
            set_some(&mut p.out, a.out.clone());
            set_some(&mut p.curve, a.curve.clone());
            set_some(&mut p.plot, a.plot.clone());
            let m = &mut cfg.mlp;
            set(&mut m.hidden, a.hidden.clone());
            set(&mut m.input_columns, a.inputs);
            if let Some(l) = &a.loss {
                m.train.loss_name = l.parse()?;
            }
            set(&mut m.train.learning_rate, a.lr);
            set(&mut m.train.batch_size, a.batch_size);
            set(&mut m.train.iterations, a.iters);
            m.train.seed = derive_seed(cfg.master_seed, seed_offsets::TRAIN);
        }
        Command::TrainDiffusion(a) => {
            set_some(&mut p.data, a.data.clone());
            set_some(&mut p.out, a.out.clone());
            set_some(&mut p.curve, a.curve.clone());
            set_some(&mut p.plot, a.plot.clone());
            let d = &mut cfg.diffusion;
            set(&mut d.hidden, a.hidden.clone());
            set(&mut d.t_max, a.steps);
            set(&mut d.beta_start, a.beta_start);
            set(&mut d.beta_end, a.beta_end);
            set(&mut d.code_len, a.code_len);
            set_some(&mut d.head_hidden, a.head_hidden);
            set(&mut d.train.learning_rate, a.lr);
            set(&mut d.train.batch_size, a.batch_size);
            set(&mut d.train.iterations, a.iters);
            set(&mut d.train.lambda_cls, a.lambda_cls);
            if let Some(l) = &a.classifier_loss {
                d.train.classifier_loss = l.parse()?;
            }
            d.train.seed = derive_seed(cfg.master_seed, seed_offsets::TRAIN);
        }
        Command::Sample(a) => {
            set_some(&mut p.model, a.model.clone());
            set_some(&mut p.out, a.out.clone());
            set(&mut cfg.sample.n_samples, a.n);
            set(&mut cfg.sample.features, a.features.clone());
        }
        Command::Exp { experiment } => match experiment {
            ExpCommand::FeatureVsClass(a) => {
                set_some(&mut p.out_dir, a.out_dir.clone());
                set_some(&mut p.plot, a.plot.clone());
                set(&mut cfg.feature_vs_class.n_seeds, a.seeds);
                set(&mut cfg.feature_vs_class.train.iterations, a.iters);
                cfg.feature_vs_class.master_seed = cfg.master_seed;
            }
            ExpCommand::NgmgVsBce(a) => {
                set_some(&mut p.out_dir, a.out_dir.clone());
                set_some(&mut p.plot, a.plot.clone());
                set(&mut cfg.ngmg_vs_bce.trials, a.trials);
                set(&mut cfg.ngmg_vs_bce.train.iterations, a.iters);
                cfg.ngmg_vs_bce.master_seed = cfg.master_seed;
            }
        },
    }
    Ok(cfg)
}

fn run_dir(cfg: &RunConfig) -> Option<PathBuf> {
    let p = &cfg.paths;
    if let Some(d) = &p.run_dir {
        return Some(d.clone());
    }
    if let Some(d) = &p.out_dir {
        return Some(d.clone());
    }
    [&p.out, &p.trace, &p.curve, &p.plot]
        .into_iter()
        .find_map(|o| o.as_ref())
        .map(|o| o.parent().map(Path::to_path_buf).unwrap_or_default())
        .map(|d| if d.as_os_str().is_empty() { PathBuf::from(".") } else { d })
}

fn seed_doc(master: u64, names: &[(&str, u64)]) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("master".into(), json!(master));
    for (name, offset) in names {
        map.insert((*name).into(), json!(derive_seed(master, *offset)));
    }
    Value::Object(map)
}

fn run_command(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command.as_str() {
        "fit" => cmd_fit(cfg),
        "w1" => cmd_w1(cfg),
        "ngmg" => cmd_ngmg(cfg),
        "transport" => cmd_transport(cfg),
        "train-mlp" => cmd_train_mlp(cfg),
        "train-diffusion" => cmd_train_diffusion(cfg),
        "sample" => cmd_sample(cfg),
        "feature-vs-class" => cmd_feature_vs_class(cfg),
        "ngmg-vs-bce" => cmd_ngmg_vs_bce(cfg),
        other => Err(Error::invalid(format!("unknown command {other:?}"))),
    }
}

fn write_status(dir: &Path, command: &str, result: &Result<Outcome>) -> Result<()> {
    let status = match result {
        Ok(o) => json!({
            "command": command,
            "status": "ok",
            "exit_code": 0,
            "outputs": o.outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "seeds": o.seeds,
            "details": o.details,
        }),
        Err(e) => json!({
            "command": command,
            "status": "error",
            "exit_code": e.exit_code(),
            "message": e.to_string(),
        }),
    };
    write_json(&dir.join(format!("{command}.status.json")), &status)
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cfg = match effective_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let dir = run_dir(&cfg);
    if let Some(d) = &dir {
        if let Err(e) = write_json(&d.join(format!("{}.config.json", cfg.command)), &cfg) {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    }
    let result = run_command(&cfg);
    if let Some(d) = &dir {
        if let Err(e) = write_status(d, &cfg.command, &result) {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    }
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

// ---------------------------------------------------------------------------
// Commands

fn default_basis_out(out: &Path) -> PathBuf {
    out.with_extension("basis.json")
}

fn cmd_fit(cfg: &RunConfig) -> Result<Outcome> {
    let data_path = required(&cfg.paths.data, "data")?;
    let out = required(&cfg.paths.out, "out")?;
    let data = parse_values(&read_text(data_path)?)?;
    let (lo, hi) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let n = cfg.fit.n_components;
    let scale = cfg.fit.scale.unwrap_or_else(|| basis::default_scale(n, lo, hi));
    let b = basis::build_basis(n, lo, hi, scale, cfg.fit.support_pad)?;
    let fit = basis::fit_weights(&b, &data)?;
    let basis_out = cfg.paths.basis_out.clone().unwrap_or_else(|| default_basis_out(out));
    write_json(out, &fit.weights)?;
    write_json(&basis_out, &b)?;
    log::info!("fitted {n} components to {} values", data.len());
    Ok(Outcome::new(
        vec![out.to_path_buf(), basis_out],
        json!({ "n_values": data.len(), "scale": scale, "degenerate": fit.degenerate }),
    ))
}

fn load_pair(cfg: &RunConfig) -> Result<(Basis, WeightVector, WeightVector)> {
    let b: Basis = read_json(required(&cfg.paths.basis, "basis")?)?;
    let p: WeightVector = read_json(required(&cfg.paths.p, "p")?)?;
    let q: WeightVector = read_json(required(&cfg.paths.q, "q")?)?;
    crate::error::check_len(b.n_components(), p.len())?;
    crate::error::check_len(b.n_components(), q.len())?;
    Ok((b, p, q))
}

fn cmd_w1(cfg: &RunConfig) -> Result<Outcome> {
    let (b, p, q) = load_pair(cfg)?;
    if cfg.w1.samples == 0 {
        return Err(Error::invalid("the empirical estimate needs at least one sample"));
    }
    let ev = W1Evaluator::new(&b, cfg.w1.grid_points)?;
    let integral = ev.w1_integral(&p, &q)?;
    let vectorized = ev.w1_vectorized(&p, &q)?;
    let mut rng_p = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, seed_offsets::SAMPLE));
    let mut rng_q = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, seed_offsets::SAMPLE + 1));
    let xs = basis::sample_mixture(&b, &p, cfg.w1.samples, &mut rng_p)?;
    let ys = basis::sample_mixture(&b, &q, cfg.w1.samples, &mut rng_q)?;
    let empirical = metrics::w1_empirical(&xs, &ys)?;
    let csv = format!("w1_integral,w1_vectorized,w1_empirical\n{integral},{vectorized},{empirical}\n");
    print!("{csv}");
    let mut outputs = Vec::new();
    if let Some(out) = &cfg.paths.out {
        write_text(out, &csv)?;
        outputs.push(out.clone());
    }
    let mut o = Outcome::new(
        outputs,
        json!({ "w1_integral": integral, "w1_vectorized": vectorized, "w1_empirical": empirical }),
    );
    o.seeds = seed_doc(cfg.master_seed, &[("samples_p", seed_offsets::SAMPLE), ("samples_q", seed_offsets::SAMPLE + 1)]);
    Ok(o)
}

fn cmd_ngmg(cfg: &RunConfig) -> Result<Outcome> {
    let (b, p, q) = load_pair(cfg)?;
    let scale = cfg.ngmg.kernel_scale.unwrap_or_else(|| ngmg::default_kernel_scale(&b));
    let kernel = ngmg::kernel(&b, scale)?;
    let g = ngmg::ngmg_gradient(&kernel, &ngmg::deficit_weights(&p, &q)?)?;
    let mut csv = String::from("index,mean,ngmg\n");
    for (i, (m, v)) in b.means().iter().zip(&g).enumerate() {
        csv.push_str(&format!("{i},{m},{v}\n"));
    }
    let mut details = json!({ "kernel_scale": scale, "ngmg_norm": g.iter().sum::<f64>() });
    let prop2 = if cfg.ngmg.check_prop2 {
        let ev = W1Evaluator::with_default_grid(&b)?;
        let via_ngmg = ngmg::prop2_w1_with(&ev, &kernel, &p, &q)?;
        let direct = ev.w1_vectorized(&p, &q)?;
        let residual = (via_ngmg - direct).abs();
        details["prop2_w1"] = json!(via_ngmg);
        details["w1_vectorized"] = json!(direct);
        details["prop2_residual"] = json!(residual);
        Some(format!("prop2_w1,w1_vectorized,residual\n{via_ngmg},{direct},{residual}\n"))
    } else {
        None
    };
    let mut outputs = Vec::new();
    match &cfg.paths.out {
        Some(out) => {
            write_text(out, &csv)?;
            outputs.push(out.clone());
            if let Some(s) = &prop2 {
                print!("{s}");
            }
        }
        None => {
            print!("{csv}");
            if let Some(s) = &prop2 {
                print!("\n{s}");
            }
        }
    }
    Ok(Outcome::new(outputs, details))
}

fn cmd_transport(cfg: &RunConfig) -> Result<Outcome> {
    let target: WeightVector = read_json(required(&cfg.paths.target, "target")?)?;
    let init: WeightVector = read_json(required(&cfg.paths.init, "init")?)?;
    let b = match &cfg.paths.basis {
        Some(path) => read_json(path)?,
        None => Basis::unit_grid(target.len())?,
    };
    let outcome = transport::transport(&b, &target, &init, &cfg.transport)?;
    let mut outputs = Vec::new();
    if let Some(path) = &cfg.paths.trace {
        write_text(path, &outcome.trace.to_csv())?;
        outputs.push(path.clone());
    }
    if let Some(path) = &cfg.paths.out {
        write_json(path, &outcome.weights)?;
        outputs.push(path.clone());
    }
    if let Some(path) = &cfg.paths.plot {
        let recs = &outcome.trace.records;
        let series = [
            Series::new("W1", recs.iter().map(|r| (r.iter as f64, r.w1)).collect()),
            Series::new("||NGMG||1", recs.iter().map(|r| (r.iter as f64, r.ngmg_norm)).collect()),
        ];
        let spec = PlotSpec {
            title: "Transport trace".into(),
            x_label: "iteration".into(),
            y_label: "value".into(),
            log_y: false,
        };
        emit_plot(&series, &spec, path)?;
        outputs.push(path.clone());
    }
    let last = outcome.trace.last().expect("trace has the initial record");
    let status = match outcome.status {
        transport::TransportStatus::Converged => "converged",
        transport::TransportStatus::MaxItersReached => "max_iters_reached",
    };
    println!("status,iterations,w1,loss\n{status},{},{},{}", last.iter, last.w1, last.loss);
    Ok(Outcome::new(
        outputs,
        json!({
            "status": status,
            "iterations": last.iter,
            "initial_w1": outcome.trace.first().map(|r| r.w1),
            "final_w1": last.w1,
            "final_loss": last.loss,
        }),
    ))
}

fn curve_csv(values: &[f64]) -> String {
    let mut s = String::from("iter,loss\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&format!("{i},{v}\n"));
    }
    s
}

fn write_curve(cfg: &RunConfig, curve: &[f64], title: &str, outputs: &mut Vec<PathBuf>) -> Result<()> {
    if let Some(path) = &cfg.paths.curve {
        write_text(path, &curve_csv(curve))?;
        outputs.push(path.clone());
    }
    if let Some(path) = &cfg.paths.plot {
        let spec = PlotSpec {
            title: title.into(),
            x_label: "iteration".into(),
            y_label: "loss".into(),
            log_y: false,
        };
        emit_plot(&[Series::from_values("train loss", curve)], &spec, path)?;
        outputs.push(path.clone());
    }
    Ok(())
}

fn cmd_train_mlp(cfg: &RunConfig) -> Result<Outcome> {
    let table = parse_table(&read_text(required(&cfg.paths.data, "data")?)?)?;
    let out = required(&cfg.paths.out, "out")?;
    let m = &cfg.mlp;
    let n_in = m.input_columns;
    if n_in == 0 || n_in >= table.header.len() {
        return Err(Error::invalid(format!(
            "input columns must leave at least one target column (have {} columns)",
            table.header.len()
        )));
    }
    let dataset: Vec<Sample> = table
        .rows
        .iter()
        .map(|r| Sample {
            input: r[..n_in].to_vec(),
            target: r[n_in..].to_vec(),
        })
        .collect();
    let mut sizes = vec![n_in];
    sizes.extend_from_slice(&m.hidden);
    sizes.push(table.header.len() - n_in);
    let output_activation = if m.train.loss_name == LossName::Mse {
        Activation::Identity
    } else {
        Activation::Sigmoid
    };
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, seed_offsets::INIT));
    let model = Mlp::new(&sizes, m.hidden_activation, output_activation, &mut init_rng)?;
    let (trained, curve) = net::train(&model, &dataset, &m.train)?;
    write_text(out, &(trained.to_json()? + "\n"))?;
    let mut outputs = vec![out.to_path_buf()];
    write_curve(cfg, &curve, "MLP training loss", &mut outputs)?;
    let mut o = Outcome::new(
        outputs,
        json!({ "samples": dataset.len(), "final_loss": curve.last(), "loss": m.train.loss_name }),
    );
    o.seeds = seed_doc(cfg.master_seed, &[("init", seed_offsets::INIT), ("train", seed_offsets::TRAIN)]);
    Ok(o)
}

fn cmd_train_diffusion(cfg: &RunConfig) -> Result<Outcome> {
    let table = parse_table(&read_text(required(&cfg.paths.data, "data")?)?)?;
    let out = required(&cfg.paths.out, "out")?;
    let d = &cfg.diffusion;
    if d.data_dim == 0 || d.data_dim >= table.header.len() {
        return Err(Error::invalid("the dataset needs data columns followed by at least one attribute column"));
    }
    let data_names = table.header[..d.data_dim].to_vec();
    let feature_names = table.header[d.data_dim..].to_vec();
    let points: Vec<Vec<f64>> = table.rows.iter().map(|r| r[..d.data_dim].to_vec()).collect();
    let attrs = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| r[d.data_dim..].iter().map(|&v| binary_attribute(v, i)).collect())
        .collect::<Result<Vec<Vec<u8>>>>()?;

    let schedule = diffusion::build_schedule(d.t_max, d.beta_start, d.beta_end)?;
    let spec = LatentSpec::new(feature_names.len(), d.code_len);
    spec.validate()?;
    let mut latent_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, seed_offsets::LATENT));
    let dataset = diffusion::assign_latents(&spec, &points, &attrs, &mut latent_rng)?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, seed_offsets::INIT));
    let mut model = diffusion::Denoiser::new(d.data_dim, spec.latent_dim(), &d.hidden, &mut init_rng)?;
    if let Some(h) = d.head_hidden {
        model = model.with_classifier(h, feature_names.len(), &mut init_rng)?;
    }
    let trained = diffusion::train_denoiser(&model, &schedule, &dataset, Some(&spec), &d.train)?;
    let ckpt = DiffusionCheckpoint {
        schedule,
        latent_spec: spec,
        data_names,
        feature_names,
        denoiser: trained.model,
    };
    write_json(out, &ckpt)?;
    let mut outputs = vec![out.to_path_buf()];
    write_curve(cfg, &trained.loss_curve, "Diffusion training loss", &mut outputs)?;
    let mut o = Outcome::new(
        outputs,
        json!({ "samples": dataset.len(), "final_loss": trained.loss_curve.last() }),
    );
    o.seeds = seed_doc(
        cfg.master_seed,
        &[
            ("latent", seed_offsets::LATENT),
            ("init", seed_offsets::INIT),
            ("train", seed_offsets::TRAIN),
        ],
    );
    Ok(o)
}

fn cmd_sample(cfg: &RunConfig) -> Result<Outcome> {
    let ckpt: DiffusionCheckpoint = read_json(required(&cfg.paths.model, "model")?)?;
    let out = required(&cfg.paths.out, "out")?;
    let mut attrs = vec![0u8; ckpt.feature_names.len()];
    for f in &cfg.sample.features {
        let idx = ckpt
            .feature_names
            .iter()
            .position(|n| n == f)
            .ok_or_else(|| Error::invalid(format!("unknown feature {f:?}; known: {}", ckpt.feature_names.join(","))))?;
        attrs[idx] = 1;
    }
    let predictor = ckpt.predictor();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, seed_offsets::SAMPLE));
    let mut csv = ckpt.data_names.join(",") + "\n";
    for _ in 0..cfg.sample.n_samples {
        let latent = diffusion::sample_latent(&ckpt.latent_spec, &attrs, &mut rng)?;
        let x = diffusion::sample(&predictor, &ckpt.schedule, ckpt.denoiser.data_dim, &latent.flatten(), &mut rng)?;
        csv.push_str(&x.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        csv.push('\n');
    }
    write_text(out, &csv)?;
    let mut o = Outcome::new(
        vec![out.to_path_buf()],
        json!({ "n_samples": cfg.sample.n_samples, "features": cfg.sample.features }),
    );
    o.seeds = seed_doc(cfg.master_seed, &[("sample", seed_offsets::SAMPLE)]);
    Ok(o)
}

fn experiment_seeds(master: u64, n: usize) -> Value {
    json!({
        "master": master,
        "trial_seeds": "master + trial index",
        "offsets": {
            "data": seed_offsets::DATA,
            "init": seed_offsets::INIT,
            "train": seed_offsets::TRAIN,
            "latent": seed_offsets::LATENT,
            "sample": seed_offsets::SAMPLE,
            "reference": seed_offsets::REFERENCE,
        },
        "trials": n,
    })
}

fn sign_test_csv(wins: usize, ties: usize, trials: usize, p: f64) -> String {
    format!("wins,ties,trials,p_value\n{wins},{ties},{trials},{p}\n")
}

fn cmd_feature_vs_class(cfg: &RunConfig) -> Result<Outcome> {
    let dir = required(&cfg.paths.out_dir, "out-dir")?;
    let fc = &cfg.feature_vs_class;
    let s = experiments::run_feature_vs_class(fc)?;

    let mut trials = String::from(
        "seed,tau,n_samples,feature_defects,feature_defect_rate,class_defects,class_defect_rate,feature_final_loss,class_final_loss\n",
    );
    for t in &s.trials {
        trials.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            t.seed,
            t.feature.tau,
            t.feature.n_samples,
            t.feature.n_defects,
            t.feature.defect_rate,
            t.class.n_defects,
            t.class.defect_rate,
            t.feature_final_loss,
            t.class_final_loss
        ));
    }
    let summary = format!(
        "arm,seeds,mean_defect_rate,se_defect_rate\nfeature,{n},{},{}\nclass,{n},{},{}\n",
        s.feature_mean,
        s.feature_se,
        s.class_mean,
        s.class_se,
        n = s.trials.len()
    );
    let mut conditions = String::from("seed,arm,condition,n_samples,n_defects\n");
    for t in &s.trials {
        for (arm, r) in [("feature", &t.feature), ("class", &t.class)] {
            for c in &r.per_condition {
                conditions.push_str(&format!("{},{arm},{},{},{}\n", t.seed, c.condition, c.n_samples, c.n_defects));
            }
        }
    }
    let files = [
        ("trials.csv", trials),
        ("summary.csv", summary),
        ("conditions.csv", conditions),
        (
            "sign_test.csv",
            sign_test_csv(s.feature_wins, s.ties, s.trials.len(), s.sign_test_p),
        ),
    ];
    let mut outputs = Vec::new();
    for (name, text) in &files {
        let path = dir.join(name);
        write_text(&path, text)?;
        outputs.push(path);
    }
    if let Some(path) = &cfg.paths.plot {
        let series = [
            Series::new(
                "feature",
                s.trials.iter().enumerate().map(|(i, t)| (i as f64, t.feature.defect_rate)).collect(),
            ),
            Series::new(
                "class",
                s.trials.iter().enumerate().map(|(i, t)| (i as f64, t.class.defect_rate)).collect(),
            ),
        ];
        let spec = PlotSpec {
            title: "Defect rate per seed".into(),
            x_label: "seed index".into(),
            y_label: "defect rate".into(),
            log_y: false,
        };
        emit_plot(&series, &spec, path)?;
        outputs.push(path.clone());
    }
    println!(
        "feature {:.4} ± {:.4}, class {:.4} ± {:.4}, feature wins {}/{}, sign test p = {:.4}",
        s.feature_mean,
        s.feature_se,
        s.class_mean,
        s.class_se,
        s.feature_wins,
        s.trials.len(),
        s.sign_test_p
    );
    let mut o = Outcome::new(
        outputs,
        json!({
            "feature_mean": s.feature_mean,
            "class_mean": s.class_mean,
            "feature_wins": s.feature_wins,
            "sign_test_p": s.sign_test_p,
        }),
    );
    o.seeds = experiment_seeds(fc.master_seed, fc.n_seeds);
    Ok(o)
}

fn cmd_ngmg_vs_bce(cfg: &RunConfig) -> Result<Outcome> {
    let dir = required(&cfg.paths.out_dir, "out-dir")?;
    let nb = &cfg.ngmg_vs_bce;
    let s = experiments::run_ngmg_vs_bce(nb)?;

    let mut trials = String::from("trial,seed,loss,test_mse,final_train_loss\n");
    for t in &s.trials {
        trials.push_str(&format!(
            "{},{},{},{},{}\n",
            t.trial, t.seed, t.loss_name, t.test_mse, t.final_train_loss
        ));
    }
    let mut summary = String::from("arm,trials,mean_test_mse,se_test_mse\n");
    for a in &s.arms {
        summary.push_str(&format!("{},{},{},{}\n", a.loss_name, nb.trials, a.mean_mse, a.se_mse));
    }
    let files = [
        ("trials.csv", trials),
        ("summary.csv", summary),
        ("sign_test.csv", sign_test_csv(s.second_arm_wins, s.ties, nb.trials, s.sign_test_p)),
    ];
    let mut outputs = Vec::new();
    for (name, text) in &files {
        let path = dir.join(name);
        write_text(&path, text)?;
        outputs.push(path);
    }
    if let Some(path) = &cfg.paths.plot {
        let series: Vec<Series> = nb
            .arms
            .iter()
            .map(|&arm| {
                Series::new(
                    arm.as_str(),
                    s.per_arm(arm).iter().map(|t| (t.trial as f64, t.test_mse)).collect(),
                )
            })
            .collect();
        let spec = PlotSpec {
            title: "Test MSE per trial".into(),
            x_label: "trial".into(),
            y_label: "test MSE".into(),
            log_y: false,
        };
        emit_plot(&series, &spec, path)?;
        outputs.push(path.clone());
    }
    for a in &s.arms {
        println!("{}: test MSE {:.5} ± {:.5}", a.loss_name, a.mean_mse, a.se_mse);
    }
    println!(
        "{} wins {}/{}, sign test p = {:.4}",
        nb.arms[1], s.second_arm_wins, nb.trials, s.sign_test_p
    );
    let mut o = Outcome::new(
        outputs,
        json!({
            "arms": s.arms,
            "second_arm_wins": s.second_arm_wins,
            "ties": s.ties,
            "sign_test_p": s.sign_test_p,
        }),
    );
    o.seeds = experiment_seeds(nb.master_seed, nb.trials);
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"transport": {"eta": 1}}"#).is_err());
        let cfg: RunConfig = serde_json::from_str(r#"{"master_seed": 7}"#).unwrap();
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.fit, FitConfig::default());
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"master_seed": 3, "transport": {"tolerance": 0.5, "max_iters": 9}}"#).unwrap();
        let cli = Cli::try_parse_from([
            "ngmg",
            "--config",
            path.to_str().unwrap(),
            "transport",
            "--eps",
            "0.01",
        ])
        .unwrap();
        let cfg = effective_config(&cli).unwrap();
        assert_eq!(cfg.command, "transport");
        assert_eq!(cfg.master_seed, 3);
        assert_eq!(cfg.transport.tolerance, 0.01);
        assert_eq!(cfg.transport.max_iters, 9);
    }

    #[test]
    fn parse_values_reports_line() {
        assert_eq!(parse_values("1\n\n# c\n2.5\n").unwrap(), vec![1.0, 2.5]);
        let err = parse_values("1\nx\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
        assert!(parse_values("\n").is_err());
    }

    #[test]
    fn parse_table_reads_header() {
        let t = parse_table("x,y,A_1\n0.5,1,0\n1.5,2,1\n").unwrap();
        assert_eq!(t.header, vec!["x", "y", "A_1"]);
        assert_eq!(t.rows[1], vec![1.5, 2.0, 1.0]);
        assert!(parse_table("x,y\n1,z\n").is_err());
    }

    #[test]
    fn basis_out_default() {
        assert_eq!(default_basis_out(Path::new("run/w.json")), PathBuf::from("run/w.basis.json"));
    }
}
