use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::source::{parse_alphas, parse_grid};
use super::*;
use crate::fsutil::{atomic_dir, atomic_write};
use crate::metrics::{layerwise_similarity_matrix, predictive_similarity, JsdMode, MetricKind};
use crate::plot::{self, FigureOptions, Series};
use crate::pruning::{sparsity_sweep, validate_levels, Probe, SparsitySweepResult};
use crate::tensorio::{ActivationSet, ArchSpec, Checkpoint, PredictionSet};
use crate::toymodel::{capture_activations, init_mlp, predictions, train_sgd, Dataset, EpochLog, TrainConfig};
use crate::triangle::{
    barrier_height, build_triangle_report, crossview_stats, lmc_curve, self_lmc_under_pruning, CrossViewStats,
    FunctionalPanel, LmcCurve, SelfLmcPoint, StaticPanel, TriangleConfig, TriangleReport,
    DEFAULT_DISAGREEMENT_THRESHOLD,
};

const DEFAULT_LEVELS: &str = "0:0.9:0.1";
const DEFAULT_ALPHAS: usize = 11;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub model_id: String,
    pub dataset_id: String,
    pub final_accuracy: f64,
    pub epochs: Vec<EpochLog>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmcReport {
    pub model_a: String,
    pub model_b: String,
    pub dataset_id: String,
    pub curve: LmcCurve,
    pub barrier: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsdReport {
    pub model_a: String,
    pub model_b: String,
    pub dataset_id: String,
    pub mode: JsdMode,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub model_a: String,
    pub model_b: String,
    pub eval_id: String,
    pub probe_id: String,
    pub sweep: SparsitySweepResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_lmc_a: Option<Vec<SelfLmcPoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_lmc_b: Option<Vec<SelfLmcPoint>>,
}

pub(super) fn dispatch(cli: &Cli) -> CliResult<()> {
    let cfg = cli.config.as_deref();
    let fig = FigureOptions { timestamp: cli.timestamp.then(now) };
    match &cli.command {
        Command::ToyTrain(a) => toy_train(resolve(a, cfg)?, &fig),
        Command::ExtractToy(a) => extract_toy(resolve(a, cfg)?),
        Command::Static(a) => static_cmd(resolve(a, cfg)?, &fig),
        Command::Lmc(a) => lmc(resolve(a, cfg)?, &fig),
        Command::Jsd(a) => jsd(resolve(a, cfg)?),
        Command::Sweep(a) => sweep(resolve(a, cfg)?, &fig),
        Command::Triangle(a) => triangle(resolve(a, cfg)?, &fig),
        Command::Crossview(a) => crossview(resolve(a, cfg)?, &fig),
        Command::Plot(a) => plot_cmd(resolve(a, cfg)?.0, &fig),
    }
}

fn now() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("generated at unix time {secs}")
}

fn source(spec: &Option<String>, flag: &str) -> CliResult<DataSource> {
    required(spec, flag)?.parse().map_err(|e| usage(flag, e))
}

fn load_for(src: &DataSource, arch: &ArchSpec) -> CliResult<Dataset> {
    Ok(src.load(arch.input_dim, arch.n_classes())?)
}

fn levels(spec: &Option<String>) -> CliResult<Vec<f64>> {
    let levels = parse_grid(spec.as_deref().unwrap_or(DEFAULT_LEVELS)).map_err(|e| usage("levels", e))?;
    validate_levels(&levels).map_err(|e| usage("levels", e))?;
    Ok(levels)
}

fn alphas(spec: &Option<String>) -> CliResult<usize> {
    spec.as_deref().map_or(Ok(DEFAULT_ALPHAS), |s| parse_alphas(s).map_err(|e| usage("alphas", e)))
}

fn threshold(t: Option<f64>) -> CliResult<f64> {
    match t {
        None => Ok(DEFAULT_DISAGREEMENT_THRESHOLD),
        Some(t) if t >= 0.0 && t.is_finite() => Ok(t),
        Some(t) => Err(usage("threshold", format!("must be a finite value >= 0, got {t}"))),
    }
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => Ok(atomic_write(path, text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit<T: Serialize>(doc: &Document<T>, out: &Option<PathBuf>, svg_dir: &Option<PathBuf>, fig: &FigureOptions) -> CliResult<()> {
    let json = doc.to_json()?;
    if let Some(dir) = svg_dir {
        let value: Value = serde_json::from_str(&json).map_err(Error::from)?;
        write_figures(dir, &figures(&value, fig)?)?;
    }
    write_or_print(out, &json)
}

fn write_figures(dir: &Path, figs: &[(String, String)]) -> CliResult<()> {
    for (name, svg) in figs {
        atomic_write(dir.join(name), svg.as_bytes())?;
    }
    Ok(())
}

fn toy_train((args, config): (ToyTrainArgs, Value), fig: &FigureOptions) -> CliResult<()> {
    let arch: ArchSpec = required(&args.arch, "arch")?.parse().map_err(|e| usage("arch", e))?;
    let src = match (&args.blobs, &args.data) {
        (Some(b), None) => DataSource::blobs(b).map_err(|e| usage("blobs", e))?,
        (None, Some(_)) => source(&args.data, "data")?,
        (None, None) => return Err(usage("data", "a dataset is required (--data or --blobs)")),
        (Some(_), Some(_)) => return Err(usage("blobs", "cannot be combined with --data")),
    };
    let out = required(&args.out, "out")?;
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        learning_rate: args.lr.unwrap_or(d.learning_rate),
        momentum: args.momentum.unwrap_or(d.momentum),
        epochs: args.epochs.unwrap_or(d.epochs),
        batch_size: args.batch_size.unwrap_or(d.batch_size),
        seed: args.seed.unwrap_or(d.seed),
    };
    cfg.validate()?;
    let data = load_for(&src, &arch)?;
    let outcome = train_sgd(&init_mlp(&arch, cfg.seed)?, &data, &cfg)?;
    let log = TrainLog {
        model_id: outcome.checkpoint.model_id.clone(),
        dataset_id: data.id.clone(),
        final_accuracy: outcome.log.last().map_or(0.0, |e| e.accuracy),
        epochs: outcome.log,
    };
    let doc = Document::new("train_log", config, BTreeMap::from([("data".into(), dataset_digest(&data))]), &log);
    let json = doc.to_json()?;
    let value: Value = serde_json::from_str(&json).map_err(Error::from)?;
    let figs = figures(&value, fig)?;
    atomic_dir(&out, |tmp| {
        outcome.checkpoint.save(tmp)?;
        atomic_write(tmp.join("train_log.json"), json.as_bytes())?;
        for (name, svg) in &figs {
            atomic_write(tmp.join(name), svg.as_bytes())?;
        }
        Ok(())
    })?;
    println!("{}: train accuracy {:.4} on {}", log.model_id, log.final_accuracy, log.dataset_id);
    Ok(())
}

fn extract_toy((args, _): (ExtractArgs, Value)) -> CliResult<()> {
    let path = required(&args.checkpoint, "checkpoint")?;
    let ckpt = Checkpoint::load(&path)?;
    let data = load_for(&source(&args.data, "data")?, ckpt.arch())?;
    let out = required(&args.out, "out")?;
    let what = args.what.as_deref().unwrap_or("both");
    let acts = || capture_activations(&ckpt, data.x().view(), &data.id);
    let preds = || predictions(&ckpt, data.x().view(), &data.id);
    match what {
        "activations" => acts()?.save(&out)?,
        "predictions" => preds()?.save(&out)?,
        "both" => {
            let (a, p) = (acts()?, preds()?);
            atomic_dir(&out, |tmp| {
                a.save(tmp.join("activations"))?;
                p.save(tmp.join("predictions"))
            })?
        }
        other => return Err(usage("what", format!("expected activations, predictions or both, got {other:?}"))),
    }
    println!("{}: wrote {what} for {} samples of {}", ckpt.model_id, data.len(), data.id);
    Ok(())
}

fn static_cmd((args, config): (StaticArgs, Value), fig: &FigureOptions) -> CliResult<()> {
    let (pa, pb) = (required(&args.a, "a")?, required(&args.b, "b")?);
    let (a, b) = (ActivationSet::load(&pa)?, ActivationSet::load(&pb)?);
    let panel = StaticPanel::new(
        layerwise_similarity_matrix(&a, &b, MetricKind::Cka)?,
        layerwise_similarity_matrix(&a, &b, MetricKind::Procrustes)?,
    )?;
    if let Some(dir) = &args.csv_dir {
        atomic_write(dir.join("cka.csv"), panel.cka.to_csv()?.as_bytes())?;
        atomic_write(dir.join("procrustes.csv"), panel.procrustes.to_csv()?.as_bytes())?;
    }
    let inputs = BTreeMap::from([("a".into(), path_digest(&pa)?), ("b".into(), path_digest(&pb)?)]);
    emit(&Document::new("static", config, inputs, &panel), &args.out, &args.svg_dir, fig)
}

fn lmc((args, config): (LmcArgs, Value), fig: &FigureOptions) -> CliResult<()> {
    let (pa, pb) = (required(&args.a, "a")?, required(&args.b, "b")?);
    let (a, b) = (Checkpoint::load(&pa)?, Checkpoint::load(&pb)?);
    let n = alphas(&args.alphas)?;
    let data = load_for(&source(&args.data, "data")?, a.arch())?;
    let curve = lmc_curve(&a, &b, &data, n)?;
    let report = LmcReport {
        model_a: a.model_id.clone(),
        model_b: b.model_id.clone(),
        dataset_id: data.id.clone(),
        barrier: barrier_height(&curve),
        curve,
    };
    let inputs = BTreeMap::from([
        ("a".into(), path_digest(&pa)?),
        ("b".into(), path_digest(&pb)?),
        ("data".into(), dataset_digest(&data)),
    ]);
    emit(&Document::new("lmc", config, inputs, &report), &args.out, &args.svg_dir, fig)
}

fn jsd((args, config): (JsdArgs, Value)) -> CliResult<()> {
    let (pa, pb) = (required(&args.a, "a")?, required(&args.b, "b")?);
    let mode: JsdMode = match &args.mode {
        Some(m) => m.parse().map_err(|e| usage("mode", e))?,
        None => JsdMode::default(),
    };
    let (a, b) = (PredictionSet::load(&pa)?, PredictionSet::load(&pb)?);
    if a.dataset_id != b.dataset_id {
        return Err(Error::DatasetMismatch { a: a.dataset_id, b: b.dataset_id }.into());
    }
    let report = JsdReport {
        score: predictive_similarity(&a, &b, mode)?,
        model_a: a.model_id,
        model_b: b.model_id,
        dataset_id: a.dataset_id,
        mode,
    };
    let inputs = BTreeMap::from([("a".into(), path_digest(&pa)?), ("b".into(), path_digest(&pb)?)]);
    emit(&Document::new("jsd", config, inputs, &report), &args.out, &None, &FigureOptions::default())
}

fn probe_for(spec: &Option<String>, arch: &ArchSpec) -> CliResult<(Probe, String)> {
    if spec.is_none() {
        return Err(usage("probe", "is required; activations are never taken from --data implicitly"));
    }
    let data = load_for(&source(spec, "probe")?, arch)?;
    Ok((Probe::from(&data), dataset_digest(&data)))
}

fn sweep((args, config): (SweepArgs, Value), fig: &FigureOptions) -> CliResult<()> {
    let (pa, pb) = (required(&args.a, "a")?, required(&args.b, "b")?);
    let levels = levels(&args.levels)?;
    let n = alphas(&args.alphas)?;
    let (a, b) = (Checkpoint::load(&pa)?, Checkpoint::load(&pb)?);
    let eval = load_for(&source(&args.data, "data")?, a.arch())?;
    let (probe, probe_digest) = probe_for(&args.probe, a.arch())?;
    let result = sparsity_sweep(&a, &b, &eval, &probe, &levels)?;
    let (self_lmc_a, self_lmc_b) = if args.self_lmc {
        (
            Some(self_lmc_under_pruning(&a, &eval, &levels, n)?),
            Some(self_lmc_under_pruning(&b, &eval, &levels, n)?),
        )
    } else {
        (None, None)
    };
    if let Some(path) = &args.csv {
        atomic_write(path, result.to_csv()?.as_bytes())?;
    }
    let report = SweepReport {
        model_a: a.model_id.clone(),
        model_b: b.model_id.clone(),
        eval_id: eval.id.clone(),
        probe_id: probe.id.clone(),
        sweep: result,
        self_lmc_a,
        self_lmc_b,
    };
    let inputs = BTreeMap::from([
        ("a".into(), path_digest(&pa)?),
        ("b".into(), path_digest(&pb)?),
        ("data".into(), dataset_digest(&eval)),
        ("probe".into(), probe_digest),
    ]);
    emit(&Document::new("sweep", config, inputs, &report), &args.out, &args.svg_dir, fig)
}

fn triangle((args, config): (TriangleArgs, Value), fig: &FigureOptions) -> CliResult<()> {
    let (pa, pb) = (required(&args.a, "a")?, required(&args.b, "b")?);
    let tc = TriangleConfig {
        levels: levels(&args.levels)?,
        n_alphas: alphas(&args.alphas)?,
        jsd_mode: match &args.jsd_mode {
            Some(m) => m.parse().map_err(|e| usage("jsd-mode", e))?,
            None => JsdMode::default(),
        },
        threshold: threshold(args.threshold)?,
    };
    let (a, b) = (Checkpoint::load(&pa)?, Checkpoint::load(&pb)?);
    let eval = load_for(&source(&args.data, "data")?, a.arch())?;
    let (probe, probe_digest) = probe_for(&args.probe, a.arch())?;
    let report = build_triangle_report(&a, &b, &eval, &probe, &tc)?;
    let inputs = BTreeMap::from([
        ("a".into(), path_digest(&pa)?),
        ("b".into(), path_digest(&pb)?),
        ("data".into(), dataset_digest(&eval)),
        ("probe".into(), probe_digest),
    ]);
    emit(&Document::new("triangle", config, inputs, &report), &args.out, &args.svg_dir, fig)
}

/// Triangle documents in `dir`, sorted by file name; other JSON documents are skipped.
pub fn read_triangle_reports(dir: &Path) -> Result<Vec<(String, Document<TriangleReport>)>, Error> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let head: Value = serde_json::from_str(&text)?;
        if head.get("format").and_then(Value::as_str) != Some("trisim.triangle") {
            continue;
        }
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        out.push((name, Document::read(&path, "triangle")?));
    }
    Ok(out)
}

fn crossview((args, config): (CrossviewArgs, Value), fig: &FigureOptions) -> CliResult<()> {
    let dir = required(&args.reports, "reports")?;
    let t = threshold(args.threshold)?;
    let docs = read_triangle_reports(&dir)?;
    let mut inputs = BTreeMap::new();
    for (name, _) in &docs {
        inputs.insert(name.clone(), path_digest(&dir.join(name))?);
    }
    let reports: Vec<TriangleReport> = docs.into_iter().map(|(_, d)| d.report).collect();
    let stats = crossview_stats(&reports, t)?;
    eprintln!(
        "{} pairs, r = {:.4}, {} disagreements at threshold {t}",
        stats.n_pairs,
        stats.pearson_r,
        stats.disagreements.len()
    );
    emit(&Document::new("crossview", config, inputs, &stats), &args.out, &args.svg_dir, fig)
}

fn plot_cmd(args: PlotArgs, fig: &FigureOptions) -> CliResult<()> {
    let path = required(&args.report, "report")?;
    let out = required(&args.out_dir, "out-dir")?;
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(Error::from)?;
    let figs = figures(&value, fig)?;
    write_figures(&out, &figs)?;
    for (name, _) in &figs {
        println!("{}", out.join(name).display());
    }
    Ok(())
}

fn part<T: serde::de::DeserializeOwned>(doc: &Value) -> Result<T, Error> {
    Ok(serde_json::from_value(doc.get("report").cloned().unwrap_or(Value::Null))?)
}

fn triangle_figures(r: &TriangleReport, fig: &FigureOptions) -> Vec<(String, String)> {
    let mut figs = vec![
        ("cka_heatmap.svg".to_string(), plot::heatmap(&r.static_panel.cka, fig)),
        ("procrustes_heatmap.svg".to_string(), plot::heatmap(&r.static_panel.procrustes, fig)),
    ];
    if let FunctionalPanel::Lmc { curve, barrier } = &r.functional {
        let title = format!("Interpolation {} to {} (barrier {barrier:.3})", r.model_a, r.model_b);
        figs.push(("lmc.svg".into(), plot::lmc_chart(curve, &title, fig)));
    }
    figs.push(("sweep.svg".into(), plot::sweep_chart(&r.sparsity, &format!("Pruning sweep {}", r.pair_id()), fig)));
    figs
}

/// SVG figures for a report document, as `(file name, contents)`.
pub fn figures(doc: &Value, fig: &FigureOptions) -> Result<Vec<(String, String)>, Error> {
    let format = doc.get("format").and_then(Value::as_str).unwrap_or("");
    Ok(match format {
        "trisim.static" => {
            let p: StaticPanel = part(doc)?;
            vec![
                ("cka_heatmap.svg".into(), plot::heatmap(&p.cka, fig)),
                ("procrustes_heatmap.svg".into(), plot::heatmap(&p.procrustes, fig)),
            ]
        }
        "trisim.lmc" => {
            let r: LmcReport = part(doc)?;
            let title = format!("Interpolation {} to {} (barrier {:.3})", r.model_a, r.model_b, r.barrier);
            vec![("lmc.svg".into(), plot::lmc_chart(&r.curve, &title, fig))]
        }
        "trisim.sweep" => {
            let r: SweepReport = part(doc)?;
            let mut figs =
                vec![("sweep.svg".into(), plot::sweep_chart(&r.sweep, &format!("Pruning sweep {} vs {}", r.model_a, r.model_b), fig))];
            for (tag, pts, cka, id) in [
                ("a", &r.self_lmc_a, &r.sweep.self_sim_a, &r.model_a),
                ("b", &r.self_lmc_b, &r.sweep.self_sim_b, &r.model_b),
            ] {
                if let Some(pts) = pts {
                    let title = format!("{id}: barrier to pruned self vs self CKA");
                    figs.push((format!("self_lmc_{tag}.svg"), plot::self_lmc_chart(pts, cka, &title, fig)));
                }
            }
            figs
        }
        "trisim.triangle" => triangle_figures(&part(doc)?, fig),
        "trisim.crossview" => {
            let s: CrossViewStats = part(doc)?;
            vec![("crossview.svg".into(), plot::crossview_chart(&s, fig))]
        }
        "trisim.train_log" => {
            let log: TrainLog = part(doc)?;
            let xs: Vec<f64> = log.epochs.iter().map(|e| e.epoch as f64).collect();
            let series = [
                Series::new("loss", &xs, log.epochs.iter().map(|e| Some(e.loss))),
                Series::new("accuracy", &xs, log.epochs.iter().map(|e| Some(e.accuracy))),
            ];
            vec![("training.svg".into(), plot::line_chart(&format!("Training {}", log.model_id), "epoch", "value", &series, fig))]
        }
        "trisim.jsd" => Vec::new(),
        other => return Err(Error::Format(format!("not a trisim report document (format {other:?})"))),
    })
}
