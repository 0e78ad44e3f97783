use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use elstmd::experiment::{
    load_config_file, run_curve, run_embed, run_eval, run_sweep, run_train, ExperimentConfig,
    SweepParameter,
};
use elstmd::graph::{
    build_snapshots, export_snapshots, filter_transient_links, ingest_edge_list, EdgeListFormat,
};
use elstmd::{Error, Result};

#[derive(Parser)]
#[command(
    name = "elstmd",
    about = "Dynamic network link prediction: encoder / stacked-LSTM / decoder pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Shared flags; anything given here overrides the config file.
#[derive(Args, Clone)]
struct CommonArgs {
    /// Flat key-value config file; flags win over file entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Edge-list file or exported snapshot directory. Omit for the synthetic
    /// benchmark generator.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Number of snapshots to slice the time span into.
    #[arg(long)]
    snapshots: Option<usize>,
    /// Transient-link filter horizon in snapshot intervals.
    #[arg(long)]
    horizon: Option<usize>,
    /// Historical snapshots per sample (N).
    #[arg(long)]
    window_len: Option<usize>,
    /// Windows assigned to training; the rest are test.
    #[arg(long)]
    train_count: Option<usize>,
    /// Penalty coefficient on existing links.
    #[arg(long)]
    beta: Option<f64>,
    /// Regularization tradeoff.
    #[arg(long)]
    alpha: Option<f64>,
    /// Learning rate.
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `sgd` (default) or `adam`.
    #[arg(long)]
    optimizer: Option<String>,
    /// Carry LSTM state across training windows within an epoch.
    #[arg(long)]
    stateful_lstm: bool,
    #[arg(long, default_value = "runs/out")]
    out_dir: PathBuf,
    /// AUC sample count; 0 uses the exact rank statistic.
    #[arg(long)]
    metric_samples: Option<usize>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut map: BTreeMap<String, String> = match &self.config {
            Some(path) => load_config_file(path)?,
            None => BTreeMap::new(),
        };
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                map.insert(k.to_string(), v);
            }
        };
        set("dataset", self.dataset.as_ref().map(|p| p.display().to_string()));
        set("snapshots", self.snapshots.map(|v| v.to_string()));
        set("horizon", self.horizon.map(|v| v.to_string()));
        set("window_len", self.window_len.map(|v| v.to_string()));
        set("train_count", self.train_count.map(|v| v.to_string()));
        set("beta", self.beta.map(|v| v.to_string()));
        set("alpha", self.alpha.map(|v| v.to_string()));
        set("lr", self.lr.map(|v| v.to_string()));
        set("epochs", self.epochs.map(|v| v.to_string()));
        set("seed", self.seed.map(|v| v.to_string()));
        set("optimizer", self.optimizer.clone());
        if self.stateful_lstm {
            set("stateful_lstm", Some("true".into()));
        }
        set("metric_samples", self.metric_samples.map(|v| v.to_string()));
        ExperimentConfig::from_map(&map)
    }

    fn checkpoint_path(&self, explicit: &Option<PathBuf>) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.out_dir.join("model.ckpt"))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse an edge list into filtered snapshots and export them.
    Ingest {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate the synthetic benchmark and export its snapshots.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Train a model; writes manifest, checkpoint, and loss history.
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Score the test windows of a trained checkpoint.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Defaults to <out-dir>/model.ckpt.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Per-horizon metric curve plus structural companion file.
    Curve {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train once per value of one hyperparameter and tabulate the results.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// One of: N, beta, width.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
    },
    /// Write node embeddings (stacked-LSTM output) for the last test window.
    Embed {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { common } => {
            let cfg = common.resolve()?;
            let path = cfg.dataset.clone().ok_or_else(|| {
                Error::InvalidArgument("ingest requires --dataset".into())
            })?;
            let file = std::fs::File::open(&path)?;
            let edges = ingest_edge_list(file, EdgeListFormat::Auto)?;
            let seq = build_snapshots(&edges, cfg.snapshots)?;
            let seq = filter_transient_links(&seq, cfg.horizon)?;
            export_snapshots(&common.out_dir, &seq, Some(cfg.horizon))?;
            println!(
                "ingested {} nodes into {} snapshots at {}",
                seq.node_count(),
                seq.len(),
                common.out_dir.display()
            );
        }
        Command::Synth { common } => {
            let mut cfg = common.resolve()?;
            cfg.dataset = None;
            let (seq, digest) = elstmd::experiment::prepare_dataset(&cfg)?;
            export_snapshots(&common.out_dir, &seq, None)?;
            println!(
                "generated {} synthetic snapshots (n={}) at {} (sha256 {})",
                seq.len(),
                seq.node_count(),
                common.out_dir.display(),
                digest
            );
        }
        Command::Train { common } => {
            let cfg = common.resolve()?;
            let outputs = run_train(&cfg, &common.out_dir)?;
            let last = outputs.history.epochs.last().expect("at least one epoch");
            println!(
                "trained {} epochs, final loss {:.6}; checkpoint {}",
                outputs.history.epochs.len(),
                last.total,
                outputs.checkpoint.display()
            );
        }
        Command::Eval { common, checkpoint } => {
            let cfg = common.resolve()?;
            let ckpt = common.checkpoint_path(&checkpoint);
            let outputs = run_eval(&ckpt, &cfg, &common.out_dir)?;
            println!("wrote {} window rows to {}", outputs.reports.len(), outputs.csv_path.display());
        }
        Command::Curve { common, checkpoint } => {
            let cfg = common.resolve()?;
            let ckpt = common.checkpoint_path(&checkpoint);
            let outputs = run_curve(&ckpt, &cfg, &common.out_dir)?;
            println!(
                "wrote {} and {}",
                outputs.curve_path.display(),
                outputs.structure_path.display()
            );
        }
        Command::Sweep { common, param, values } => {
            let cfg = common.resolve()?;
            let parameter: SweepParameter = param.parse()?;
            let values: Vec<f64> = values
                .split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidArgument(format!("bad sweep value {v:?}"))
                    })
                })
                .collect::<Result<_>>()?;
            let path = run_sweep(&cfg, parameter, &values, &common.out_dir)?;
            println!("wrote {}", path.display());
        }
        Command::Embed { common, checkpoint } => {
            let cfg = common.resolve()?;
            let ckpt = common.checkpoint_path(&checkpoint);
            let out = common.out_dir.join("embed.csv");
            run_embed(&ckpt, &cfg, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
