//! Experiment orchestration: configuration, dataset preparation, run
//! manifests, and the train / eval / curve / sweep / embed entry points
//! behind the CLI.
//!
//! Reports are CSV; undefined metrics are emitted as empty cells with the
//! reason in a trailing notes column so they never poison aggregates.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{
    build_snapshots, filter_transient_links, ingest_edge_list, load_snapshots, make_windows,
    split_windows, DatasetSplit, EdgeListFormat, SampleWindow, SnapshotSequence,
};
use crate::metrics::{
    auc_exact, auc_prev, auc_sampled, avg_clustering, avg_degree, degree_importance,
    edge_betweenness, error_rate, gmauc, misprediction_counts, prauc_new,
    top_fraction_error_rate, MetricsReport, TOP_IMPORTANCE_FRACTION,
};
use crate::model::{
    binarize, embed, forward, load_checkpoint, save_checkpoint, ModelConfig, ModelParams,
    BINARIZE_THRESHOLD,
};
use crate::numeric::SeededRng;
use crate::synth::{random_phases, synth_generate, synth_generate_drifting, SyntheticSpec};
use crate::train::{train, LossConfig, Optimizer, TrainHistory, TrainOptions};

/// Fully resolved run configuration. Defaults match the standard protocol:
/// 320 snapshots, 8-interval transient filter, N=10 history, 230/80 split.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Edge-list file or exported snapshot directory; `None` selects the
    /// synthetic generator.
    pub dataset: Option<PathBuf>,
    pub snapshots: usize,
    pub horizon: usize,
    pub window_len: usize,
    pub train_count: usize,
    pub encoder_dims: Vec<usize>,
    pub lstm_dims: Vec<usize>,
    /// Hidden decoder widths; the n-wide output layer is appended
    /// automatically once the node count is known.
    pub decoder_hidden: Vec<usize>,
    pub loss: LossConfig,
    pub epochs: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub stateful_lstm: bool,
    /// AUC sample count; 0 switches the report to the exact rank statistic.
    pub metric_samples: usize,
    pub synth_n: usize,
    pub synth_period: usize,
    pub synth_density: f64,
    pub synth_noise: f64,
    /// Every how many snapshots the synthetic phase edge sets mutate;
    /// 0 disables drift.
    pub drift_every: usize,
    pub drift_mutations: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: None,
            snapshots: 320,
            horizon: 8,
            window_len: 10,
            train_count: 230,
            encoder_dims: vec![128],
            lstm_dims: vec![256, 256],
            decoder_hidden: Vec::new(),
            loss: LossConfig::default(),
            epochs: 500,
            seed: 1,
            optimizer: Optimizer::Sgd,
            stateful_lstm: false,
            metric_samples: 10_000,
            synth_n: 30,
            synth_period: 2,
            synth_density: 0.15,
            synth_noise: 0.0,
            drift_every: 0,
            drift_mutations: 8,
        }
    }
}

/// Parses the flat key-value config format. `[section]` headers are
/// organizational only; keys are globally unique. `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("malformed section header {line:?}"),
                });
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: lineno + 1,
            msg: format!("expected `key = value`, got {line:?}"),
        })?;
        let key = key.trim().to_string();
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("duplicate key {key:?}"),
            });
        }
    }
    Ok(map)
}

pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_config_text(&fs::read_to_string(path)?)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value {value:?} for {key}")))
}

fn parse_dims(key: &str, value: &str) -> Result<Vec<usize>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

impl ExperimentConfig {
    /// Builds a config from defaults plus a merged key-value map (config file
    /// first, then flag overrides — the caller layers them so flags win).
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (key, value) in map {
            match key.as_str() {
                "dataset" => cfg.dataset = Some(PathBuf::from(value)),
                "snapshots" => cfg.snapshots = parse_num(key, value)?,
                "horizon" => cfg.horizon = parse_num(key, value)?,
                "window_len" => cfg.window_len = parse_num(key, value)?,
                "train_count" => cfg.train_count = parse_num(key, value)?,
                "encoder" => cfg.encoder_dims = parse_dims(key, value)?,
                "lstm" => cfg.lstm_dims = parse_dims(key, value)?,
                "decoder" => cfg.decoder_hidden = parse_dims(key, value)?,
                "beta" => cfg.loss.beta = parse_num(key, value)?,
                "alpha" => cfg.loss.alpha = parse_num(key, value)?,
                "lr" => cfg.loss.learning_rate = parse_num(key, value)?,
                "epochs" => cfg.epochs = parse_num(key, value)?,
                "seed" => cfg.seed = parse_num(key, value)?,
                "optimizer" => cfg.optimizer = value.parse()?,
                "stateful_lstm" => cfg.stateful_lstm = parse_num(key, value)?,
                "metric_samples" => cfg.metric_samples = parse_num(key, value)?,
                "synth_n" => cfg.synth_n = parse_num(key, value)?,
                "synth_period" => cfg.synth_period = parse_num(key, value)?,
                "synth_density" => cfg.synth_density = parse_num(key, value)?,
                "synth_noise" => cfg.synth_noise = parse_num(key, value)?,
                "drift_every" => cfg.drift_every = parse_num(key, value)?,
                "drift_mutations" => cfg.drift_mutations = parse_num(key, value)?,
                other => {
                    return Err(Error::InvalidArgument(format!("unknown config key {other:?}")))
                }
            }
        }
        Ok(cfg)
    }

    pub fn model_config(&self, n: usize) -> ModelConfig {
        let mut decoder_dims = self.decoder_hidden.clone();
        decoder_dims.push(n);
        ModelConfig {
            n,
            window_len: self.window_len,
            encoder_dims: self.encoder_dims.clone(),
            lstm_dims: self.lstm_dims.clone(),
            decoder_dims,
        }
    }

    fn dims_str(dims: &[usize]) -> String {
        dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
    }

    /// All resolved keys in config-file syntax; reading this back through
    /// `parse_config_text`/`from_map` reproduces the run.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[data]");
        if let Some(d) = &self.dataset {
            let _ = writeln!(s, "dataset = {}", d.display());
        }
        let _ = writeln!(s, "snapshots = {}", self.snapshots);
        let _ = writeln!(s, "horizon = {}", self.horizon);
        let _ = writeln!(s, "[model]");
        let _ = writeln!(s, "window_len = {}", self.window_len);
        let _ = writeln!(s, "encoder = {}", Self::dims_str(&self.encoder_dims));
        let _ = writeln!(s, "lstm = {}", Self::dims_str(&self.lstm_dims));
        let _ = writeln!(s, "decoder = {}", Self::dims_str(&self.decoder_hidden));
        let _ = writeln!(s, "[train]");
        let _ = writeln!(s, "train_count = {}", self.train_count);
        let _ = writeln!(s, "beta = {}", self.loss.beta);
        let _ = writeln!(s, "alpha = {}", self.loss.alpha);
        let _ = writeln!(s, "lr = {}", self.loss.learning_rate);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "optimizer = {}", self.optimizer);
        let _ = writeln!(s, "stateful_lstm = {}", self.stateful_lstm);
        let _ = writeln!(s, "metric_samples = {}", self.metric_samples);
        let _ = writeln!(s, "[synth]");
        let _ = writeln!(s, "synth_n = {}", self.synth_n);
        let _ = writeln!(s, "synth_period = {}", self.synth_period);
        let _ = writeln!(s, "synth_density = {}", self.synth_density);
        let _ = writeln!(s, "synth_noise = {}", self.synth_noise);
        let _ = writeln!(s, "drift_every = {}", self.drift_every);
        let _ = writeln!(s, "drift_mutations = {}", self.drift_mutations);
        s
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Builds the snapshot sequence for a config and returns it with a sha256
/// digest of its inputs (file bytes, or the synthetic spec text).
pub fn prepare_dataset(cfg: &ExperimentConfig) -> Result<(SnapshotSequence, String)> {
    match &cfg.dataset {
        Some(path) if path.is_dir() => {
            let seq = load_snapshots(path)?;
            let mut h = Sha256::new();
            h.update(fs::read(path.join("manifest.txt"))?);
            for snap in &seq.snapshots {
                h.update(fs::read(path.join(format!("{}.edges", snap.index)))?);
            }
            let digest = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
            Ok((seq, digest))
        }
        Some(path) => {
            let bytes = fs::read(path)?;
            let digest = sha256_hex(&bytes);
            let edges = ingest_edge_list(&bytes[..], EdgeListFormat::Auto)?;
            let seq = build_snapshots(&edges, cfg.snapshots)?;
            let seq = filter_transient_links(&seq, cfg.horizon)?;
            Ok((seq, digest))
        }
        None => {
            let mut phase_rng = SeededRng::new(cfg.seed).derive("phases");
            let spec = SyntheticSpec {
                n: cfg.synth_n,
                period: cfg.synth_period,
                phases: random_phases(
                    cfg.synth_n,
                    cfg.synth_period,
                    cfg.synth_density,
                    &mut phase_rng,
                ),
                noise: cfg.synth_noise,
                snapshots: cfg.snapshots,
            };
            let seq = if cfg.drift_every > 0 {
                synth_generate_drifting(&spec, cfg.drift_every, cfg.drift_mutations, cfg.seed)?
            } else {
                synth_generate(&spec, cfg.seed)?
            };
            let desc = format!(
                "synthetic n={} period={} density={} noise={} snapshots={} drift={}x{} seed={}",
                spec.n,
                spec.period,
                cfg.synth_density,
                spec.noise,
                spec.snapshots,
                cfg.drift_every,
                cfg.drift_mutations,
                cfg.seed
            );
            Ok((seq, sha256_hex(desc.as_bytes())))
        }
    }
}

pub fn prepare_split(cfg: &ExperimentConfig, seq: &SnapshotSequence) -> Result<DatasetSplit> {
    let windows = make_windows(seq, cfg.window_len)?;
    split_windows(windows, cfg.train_count)
}

fn write_manifest(out_dir: &Path, cfg: &ExperimentConfig, digest: &str, stage: &str) -> Result<()> {
    // The manifest doubles as a replayable config file, so the non-config
    // provenance lines are comments.
    let mut s = String::new();
    let _ = writeln!(s, "# run manifest ({stage})");
    let _ = writeln!(s, "# input_sha256 = {digest}");
    s.push_str(&cfg.to_config_text());
    fs::write(out_dir.join("manifest.txt"), s)?;
    Ok(())
}

pub struct TrainOutputs {
    pub checkpoint: PathBuf,
    pub history: TrainHistory,
    pub params: ModelParams,
    pub model_config: ModelConfig,
}

fn stage(err: Error, label: &str) -> Error {
    match err {
        Error::Io(e) => Error::Io(e),
        Error::Parse { line, msg } => Error::Parse { line, msg: format!("{label}: {msg}") },
        Error::Shape(m) => Error::Shape(format!("{label}: {m}")),
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{label}: {m}")),
        Error::UndefinedMetric(m) => Error::UndefinedMetric(format!("{label}: {m}")),
        other => other,
    }
}

pub fn run_train(cfg: &ExperimentConfig, out_dir: &Path) -> Result<TrainOutputs> {
    fs::create_dir_all(out_dir)?;
    let (seq, digest) = prepare_dataset(cfg).map_err(|e| stage(e, "dataset"))?;
    let split = prepare_split(cfg, &seq).map_err(|e| stage(e, "windowing"))?;
    let model_config = cfg.model_config(seq.node_count());
    let options = TrainOptions {
        optimizer: cfg.optimizer,
        stateful_lstm: cfg.stateful_lstm,
        clip_norm: None,
    };
    let (params, history) =
        train(&split, &model_config, &cfg.loss, cfg.epochs, cfg.seed, &options)
            .map_err(|e| stage(e, "training"))?;
    write_manifest(out_dir, cfg, &digest, "train")?;
    let checkpoint = out_dir.join("model.ckpt");
    save_checkpoint(&checkpoint, &params, &model_config, cfg.seed, cfg.epochs)?;
    fs::write(out_dir.join("history.csv"), history.to_csv())?;
    Ok(TrainOutputs { checkpoint, history, params, model_config })
}

/// Scores one test window and fills a [`MetricsReport`]. `delta` is the
/// 1-based offset of the window past the training period.
pub fn evaluate_window(
    params: &ModelParams,
    window: &SampleWindow,
    delta: usize,
    metric_samples: usize,
    seed: u64,
) -> Result<MetricsReport> {
    let (scores, _) = forward(params, window)?;
    let predicted = binarize(&scores, BINARIZE_THRESHOLD);
    let prev = window.prev();
    let target = &window.target;
    let n = target.node_count();

    let mut added = 0usize;
    let mut removed = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            match (prev.has_edge(i, j), target.has_edge(i, j)) {
                (false, true) => added += 1,
                (true, false) => removed += 1,
                _ => {}
            }
        }
    }

    let mut report = MetricsReport { delta, added, removed, ..MetricsReport::default() };
    let note = |r: &mut MetricsReport, what: &str, e: Error| {
        r.notes.push(format!("{what}: {e}"));
    };

    let auc = if metric_samples == 0 {
        auc_exact(&scores, target)
    } else {
        let mut rng = SeededRng::new(seed).derive(&format!("auc-{}", window.t));
        auc_sampled(&scores, target, metric_samples, &mut rng)
    };
    match auc {
        Ok(v) => report.auc = Some(v),
        Err(e) => note(&mut report, "auc", e),
    }

    let pn = prauc_new(&scores, prev, target);
    let ap = auc_prev(&scores, prev, target);
    match (&pn, &ap) {
        (Ok(p), Ok(a)) => match gmauc(p.value, *a, added, removed) {
            Ok(v) => report.gmauc = Some(v),
            Err(e) => note(&mut report, "gmauc", e),
        },
        _ => report.notes.push("gmauc: undefined factor".into()),
    }
    match pn {
        Ok(p) => {
            report.prauc_new = Some(p.value);
            if p.degenerate {
                report.notes.push("prauc_new: no added links, value is baseline".into());
            }
        }
        Err(e) => note(&mut report, "prauc_new", e),
    }
    match ap {
        Ok(a) => report.auc_prev = Some(a),
        Err(e) => note(&mut report, "auc_prev", e),
    }

    let (n_false, n_true) = misprediction_counts(&predicted, target);
    report.n_false = n_false;
    report.n_true = n_true;
    match error_rate(&predicted, target) {
        Ok(v) => report.error_rate = Some(v),
        Err(e) => note(&mut report, "error_rate", e),
    }
    let dc = degree_importance(target);
    match top_fraction_error_rate(&predicted, &dc, TOP_IMPORTANCE_FRACTION) {
        Ok(v) => report.er_top_dc = Some(v),
        Err(e) => note(&mut report, "er_top_dc", e),
    }
    let ebc = edge_betweenness(target);
    match top_fraction_error_rate(&predicted, &ebc, TOP_IMPORTANCE_FRACTION) {
        Ok(v) => report.er_top_ebc = Some(v),
        Err(e) => note(&mut report, "er_top_ebc", e),
    }
    Ok(report)
}

const EVAL_COLUMNS: &[&str] = &[
    "auc",
    "gmauc",
    "prauc_new",
    "auc_prev",
    "error_rate",
    "er_top_degree",
    "er_top_betweenness",
];

fn report_values(r: &MetricsReport) -> [Option<f64>; 7] {
    [r.auc, r.gmauc, r.prauc_new, r.auc_prev, r.error_rate, r.er_top_dc, r.er_top_ebc]
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Arithmetic means over the rows where each metric is defined.
pub fn aggregate_reports(reports: &[&MetricsReport]) -> [Option<f64>; 7] {
    let mut out = [None; 7];
    for (c, slot) in out.iter_mut().enumerate() {
        let vals: Vec<f64> = reports.iter().filter_map(|r| report_values(r)[c]).collect();
        if !vals.is_empty() {
            *slot = Some(vals.iter().sum::<f64>() / vals.len() as f64);
        }
    }
    out
}

fn eval_csv(reports: &[MetricsReport]) -> String {
    let mut s = format!("window,delta,{},notes\n", EVAL_COLUMNS.join(","));
    for (i, r) in reports.iter().enumerate() {
        let _ = write!(s, "{},{}", i + 1, r.delta);
        for v in report_values(r) {
            let _ = write!(s, ",{}", cell(v));
        }
        let _ = writeln!(s, ",{}", r.notes.join("; "));
    }
    let refs: Vec<&MetricsReport> = reports.iter().collect();
    let first = reports.len().min(20);
    for (label, subset) in [("first20", &refs[..first]), ("all", &refs[..])] {
        let _ = write!(s, "{label},");
        for v in aggregate_reports(subset) {
            let _ = write!(s, ",{}", cell(v));
        }
        let _ = writeln!(s, ",");
    }
    s
}

#[derive(Debug)]
pub struct EvalOutputs {
    pub reports: Vec<MetricsReport>,
    pub csv_path: PathBuf,
}

fn load_for_eval(
    checkpoint: &Path,
    cfg: &ExperimentConfig,
) -> Result<(ModelParams, DatasetSplit, String)> {
    let (params, model_config, _, _) = load_checkpoint(checkpoint)?;
    let (seq, digest) = prepare_dataset(cfg).map_err(|e| stage(e, "dataset"))?;
    if model_config.n != seq.node_count() {
        return Err(Error::Shape(format!(
            "checkpoint was trained on n={}, dataset has n={}",
            model_config.n,
            seq.node_count()
        )));
    }
    if model_config.window_len != cfg.window_len {
        return Err(Error::Shape(format!(
            "checkpoint window_len {} != configured {}",
            model_config.window_len, cfg.window_len
        )));
    }
    let split = prepare_split(cfg, &seq).map_err(|e| stage(e, "windowing"))?;
    Ok((params, split, digest))
}

pub fn run_eval(checkpoint: &Path, cfg: &ExperimentConfig, out_dir: &Path) -> Result<EvalOutputs> {
    fs::create_dir_all(out_dir)?;
    let (params, split, digest) = load_for_eval(checkpoint, cfg)?;
    if split.test.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let mut reports = Vec::with_capacity(split.test.len());
    for (d, window) in split.test.iter().enumerate() {
        reports.push(evaluate_window(&params, window, d + 1, cfg.metric_samples, cfg.seed)?);
    }
    write_manifest(out_dir, cfg, &digest, "eval")?;
    let csv_path = out_dir.join("eval.csv");
    fs::write(&csv_path, eval_csv(&reports))?;
    Ok(EvalOutputs { reports, csv_path })
}

pub struct CurveOutputs {
    pub reports: Vec<MetricsReport>,
    pub curve_path: PathBuf,
    pub structure_path: PathBuf,
}

/// One row per Δ = 1..|test| plus a structural companion file with the
/// average degree and clustering of each target snapshot.
pub fn run_curve(checkpoint: &Path, cfg: &ExperimentConfig, out_dir: &Path) -> Result<CurveOutputs> {
    fs::create_dir_all(out_dir)?;
    let (params, split, digest) = load_for_eval(checkpoint, cfg)?;
    if split.test.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let mut reports = Vec::with_capacity(split.test.len());
    let mut curve = String::from("delta,auc,gmauc,error_rate,notes\n");
    let mut structure = String::from("delta,avg_degree,avg_clustering\n");
    for (d, window) in split.test.iter().enumerate() {
        let r = evaluate_window(&params, window, d + 1, cfg.metric_samples, cfg.seed)?;
        let _ = writeln!(
            curve,
            "{},{},{},{},{}",
            r.delta,
            cell(r.auc),
            cell(r.gmauc),
            cell(r.error_rate),
            r.notes.join("; ")
        );
        let _ = writeln!(
            structure,
            "{},{},{}",
            r.delta,
            avg_degree(&window.target),
            avg_clustering(&window.target)
        );
        reports.push(r);
    }
    write_manifest(out_dir, cfg, &digest, "curve")?;
    let curve_path = out_dir.join("curve.csv");
    let structure_path = out_dir.join("structure.csv");
    fs::write(&curve_path, curve)?;
    fs::write(&structure_path, structure)?;
    Ok(CurveOutputs { reports, curve_path, structure_path })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    WindowLen,
    Beta,
    Width,
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" | "window-len" | "window_len" => Ok(SweepParameter::WindowLen),
            "beta" => Ok(SweepParameter::Beta),
            "width" => Ok(SweepParameter::Width),
            other => Err(Error::InvalidArgument(format!(
                "unknown sweep parameter {other:?} (expected N, beta, or width)"
            ))),
        }
    }
}

/// Trains one model per value with a shared seed and reports test-set means.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    parameter: SweepParameter,
    values: &[f64],
    out_dir: &Path,
) -> Result<PathBuf> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    fs::create_dir_all(out_dir)?;
    let mut csv = format!("value,{}\n", EVAL_COLUMNS.join(","));
    for &value in values {
        let mut point = cfg.clone();
        match parameter {
            SweepParameter::WindowLen => point.window_len = value as usize,
            SweepParameter::Beta => point.loss.beta = value,
            SweepParameter::Width => {
                let w = value as usize;
                point.encoder_dims = vec![w];
                point.lstm_dims = vec![w; cfg.lstm_dims.len().max(1)];
            }
        }
        let run_dir = out_dir.join(format!("value_{value}"));
        let outputs = run_train(&point, &run_dir)?;
        let eval = run_eval(&outputs.checkpoint, &point, &run_dir)?;
        let refs: Vec<&MetricsReport> = eval.reports.iter().collect();
        let _ = write!(csv, "{value}");
        for v in aggregate_reports(&refs) {
            let _ = write!(csv, ",{}", cell(v));
        }
        csv.push('\n');
    }
    let path = out_dir.join("sweep.csv");
    fs::write(&path, csv)?;
    Ok(path)
}

/// Writes the stacked-LSTM output H for the last test window as an n x d CSV.
pub fn run_embed(checkpoint: &Path, cfg: &ExperimentConfig, out_path: &Path) -> Result<()> {
    let (params, split, _) = load_for_eval(checkpoint, cfg)?;
    let window = split
        .test
        .last()
        .ok_or_else(|| Error::InvalidArgument("empty test set".into()))?;
    let h = embed(&params, window)?;
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut s = String::new();
    for i in 0..h.rows {
        for j in 0..h.cols {
            if j > 0 {
                s.push(',');
            }
            let _ = write!(s, "{}", h.get(i, j));
        }
        s.push('\n');
    }
    fs::write(out_path, s)?;
    Ok(())
}
