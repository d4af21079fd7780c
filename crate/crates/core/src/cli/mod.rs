//! Command-line front end.
//!
//! Every subcommand reads its options from flags and, optionally, a TOML or
//! JSON file given with `--config` whose keys are the long flag names. Flags
//! win over file values. Reports are JSON documents that carry the tool
//! version, the resolved options and SHA-256 digests of every input, so the
//! same inputs always produce the same bytes.
//!
//! Exit codes: 0 success, 2 usage, 3 invalid input, 4 numeric degeneracy.

mod commands;
mod source;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use commands::{figures, read_triangle_reports, JsdReport, LmcReport, SweepReport, TrainLog};
pub use source::{dataset_digest, path_digest, DataSource};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Version of the JSON document layout written by every command.
pub const DOCUMENT_VERSION: u32 = 1;

/// Envelope around every report the CLI writes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub format: String,
    pub format_version: u32,
    pub tool_version: String,
    pub config: Value,
    pub inputs: BTreeMap<String, String>,
    pub report: T,
}

impl<T: Serialize> Document<T> {
    pub fn new(kind: &str, config: Value, inputs: BTreeMap<String, String>, report: T) -> Self {
        Document {
            format: format!("trisim.{kind}"),
            format_version: DOCUMENT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            inputs,
            report,
        }
    }

    pub fn to_json(&self) -> Result<String, Error> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

impl<T: DeserializeOwned> Document<T> {
    /// Reads a document and checks that it holds a report of the given kind.
    pub fn read(path: &Path, kind: &str) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let head: Value = serde_json::from_str(&text)?;
        let format = head.get("format").and_then(Value::as_str).unwrap_or("");
        if format != format!("trisim.{kind}") {
            return Err(Error::Format(format!("{}: expected a trisim.{kind} document, found {format:?}", path.display())));
        }
        if head.get("format_version").and_then(Value::as_u64) != Some(DOCUMENT_VERSION as u64) {
            return Err(Error::Format(format!("{}: unsupported document version", path.display())));
        }
        Ok(serde_json::from_value(head)?)
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Run(e) => match e {
                Error::InvalidArgument(_) => EXIT_USAGE,
                Error::Degenerate(_) | Error::Divergence { .. } => EXIT_NUMERIC,
                _ => EXIT_INPUT,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn usage(flag: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("--{flag}: {msg}"))
}

pub(crate) fn required<T: Clone>(v: &Option<T>, flag: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| usage(flag, "is required"))
}

#[derive(Parser, Debug)]
#[command(name = "trisim", version, about = "Static, functional and sparsity similarity of model pairs")]
pub struct Cli {
    /// TOML or JSON file whose keys mirror the long flag names.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Stamp figures with the current time (off by default so reruns are byte-identical).
    #[arg(long, global = true)]
    pub timestamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a seeded toy MLP.
    ToyTrain(ToyTrainArgs),
    /// Dump activations and/or predictions of a toy checkpoint.
    ExtractToy(ExtractArgs),
    /// CKA and Procrustes matrices between two activation sets.
    Static(StaticArgs),
    /// Accuracy along the interpolation path between two checkpoints.
    Lmc(LmcArgs),
    /// Predictive Jensen-Shannon divergence between two prediction sets.
    Jsd(JsdArgs),
    /// Global magnitude pruning sweep of two checkpoints.
    Sweep(SweepArgs),
    /// All three views for one pair of checkpoints.
    Triangle(TriangleArgs),
    /// Correlation and disagreement statistics over a directory of triangle reports.
    Crossview(CrossviewArgs),
    /// Render the figures for a report document.
    Plot(PlotArgs),
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ToyTrainArgs {
    /// Layer widths, input first, e.g. 8:64:32:5.
    #[arg(long)]
    pub arch: Option<String>,
    /// Seed for initialisation and batch order.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Blobs dataset as N,SPREAD[,SEED] (N points per class).
    #[arg(long)]
    pub blobs: Option<String>,
    /// Training data: blobs:N,SPREAD[,SEED], a CSV file or a dataset directory.
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Output checkpoint directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExtractArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<String>,
    /// activations, predictions or both.
    #[arg(long)]
    pub what: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct StaticArgs {
    /// Activation-set directory of model A.
    #[arg(long)]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for cka.csv and procrustes.csv.
    #[arg(long)]
    pub csv_dir: Option<PathBuf>,
    /// Directory for heatmaps.
    #[arg(long)]
    pub svg_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct LmcArgs {
    /// Checkpoint directory of model A.
    #[arg(long)]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// Evaluation data: blobs:N,SPREAD[,SEED], a CSV file or a dataset directory.
    #[arg(long)]
    pub data: Option<String>,
    /// Number of alphas or a 0:1:STEP grid.
    #[arg(long)]
    pub alphas: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct JsdArgs {
    /// Prediction-set directory of model A.
    #[arg(long)]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// mean_dist or per_sample.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// Accuracy data.
    #[arg(long)]
    pub data: Option<String>,
    /// Inputs for activation capture.
    #[arg(long)]
    pub probe: Option<String>,
    /// Sparsity grid START:STOP:STEP.
    #[arg(long)]
    pub levels: Option<String>,
    /// Also record the barrier between each model and its pruned self.
    #[arg(long)]
    #[serde(default)]
    pub self_lmc: bool,
    #[arg(long)]
    pub alphas: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TriangleArgs {
    #[arg(long)]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub probe: Option<String>,
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long)]
    pub alphas: Option<String>,
    #[arg(long)]
    pub jsd_mode: Option<String>,
    /// CKA/Procrustes gap that flags a disagreement.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CrossviewArgs {
    /// Directory of triangle report documents (*.json).
    #[arg(long)]
    pub reports: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct PlotArgs {
    /// Any report document written by this tool.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Overlays the flags that were given onto the values from the config file.
///
/// Unset flags serialise as `null` (or `false` for switches) and leave the
/// file value in place.
pub fn resolve<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> CliResult<(T, Value)> {
    let mut merged = match config {
        Some(path) => read_config(path)?,
        None => Value::Object(Default::default()),
    };
    let Value::Object(over) = serde_json::to_value(flags).map_err(Error::from)? else {
        unreachable!("argument structs serialise to objects")
    };
    let base = merged.as_object_mut().expect("checked in read_config");
    for (k, v) in over {
        if !(v.is_null() || v == Value::Bool(false)) {
            base.insert(k, v);
        }
    }
    base.retain(|_, v| !v.is_null());
    let args = serde_json::from_value(merged.clone())
        .map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))?;
    Ok((args, merged))
}

fn read_config(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(&text)
            .map_err(|e| usage("config", format!("{}: {e}", path.display())))?,
        _ => {
            let t: toml::Value =
                toml::from_str(&text).map_err(|e| usage("config", format!("{}: {e}", path.display())))?;
            serde_json::to_value(t).map_err(Error::from)?
        }
    };
    if !value.is_object() {
        return Err(usage("config", "expected a table of flag names"));
    }
    Ok(value)
}

fn configure_threads() -> CliResult<()> {
    if let Ok(raw) = std::env::var("TRISIM_THREADS") {
        let n: usize = raw
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| CliError::Usage(format!("TRISIM_THREADS must be a positive integer, got {raw:?}")))?;
        // Fails only if a pool already exists, which keeps the earlier size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match configure_threads().and_then(|_| commands::dispatch(&cli)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("trisim: {e}");
            e.exit_code()
        }
    }
}
