//! The `aqt` command-line harness.
//!
//! Subcommands cover the full pipeline: `sample` simulated measurements,
//! `train` the autoregressive model, `eval` fidelities, `reconstruct`
//! density matrices, and the `sweep-scaling` / `sweep-error` experiment
//! grids. Every run creates a directory named `<timestamp>-<confighash>`
//! (or uses `--run-dir` verbatim) containing a `manifest.json` with the
//! fully resolved configuration and the crate version, plus the artifacts.
//!
//! Exit codes: 0 success, 2 validation/usage errors, 3 capacity errors,
//! 4 numeric failures.

mod commands;
mod sweep;

use crate::error::{AqtError, Result};
use crate::model::{TrainOptions, TransformerConfig};
use crate::states::{faulty_qubit_state, ghz, ProductOperatorEnsemble};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "aqt", version, about = "Quantum state reconstruction from IC-POVM data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw measurement outcomes from a simulated state.
    Sample(commands::SampleArgs),
    /// Train the autoregressive model on a dataset file.
    Train(commands::TrainArgs),
    /// Score a trained model: classical fidelity (exact or sampled) or
    /// quantum fidelity via reconstruction.
    Eval(commands::EvalArgs),
    /// Reconstruct a density matrix from a checkpoint or a dataset.
    Reconstruct(commands::ReconstructArgs),
    /// Sample-complexity sweep: minimal training-set size reaching a target
    /// classical fidelity per qubit count.
    SweepScaling(sweep::SweepScalingArgs),
    /// Error-model sweep: quantum fidelity of reconstructions of the
    /// faulty-qubit state across error rates.
    SweepError(sweep::SweepErrorArgs),
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sample(args) => commands::run_sample(args),
        Command::Train(args) => commands::run_train(args),
        Command::Eval(args) => commands::run_eval(args),
        Command::Reconstruct(args) => commands::run_reconstruct(args),
        Command::SweepScaling(args) => sweep::run_sweep_scaling(args),
        Command::SweepError(args) => sweep::run_sweep_error(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Target-state specification: `ghz:<n>` or `faulty:<p>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StateSpec {
    Ghz(usize),
    Faulty(f64),
}

impl StateSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, value) = text.split_once(':').ok_or_else(|| {
            AqtError::Validation(format!(
                "state spec {text:?} must look like ghz:<n> or faulty:<p>"
            ))
        })?;
        match kind {
            "ghz" => {
                let n: usize = value.parse().map_err(|_| {
                    AqtError::Validation(format!("bad qubit count in state spec {text:?}"))
                })?;
                if n == 0 {
                    return Err(AqtError::Validation("ghz qubit count must be >= 1".into()));
                }
                Ok(StateSpec::Ghz(n))
            }
            "faulty" => {
                let p: f64 = value.parse().map_err(|_| {
                    AqtError::Validation(format!("bad error rate in state spec {text:?}"))
                })?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(AqtError::Validation(format!(
                        "faulty error rate {p} outside [0, 1]"
                    )));
                }
                Ok(StateSpec::Faulty(p))
            }
            other => Err(AqtError::Validation(format!(
                "unknown state kind {other:?}; expected ghz or faulty"
            ))),
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            StateSpec::Ghz(n) => *n,
            StateSpec::Faulty(_) => 3,
        }
    }

    pub fn build(&self) -> Result<ProductOperatorEnsemble> {
        match self {
            StateSpec::Ghz(n) => ghz(*n),
            StateSpec::Faulty(p) => faulty_qubit_state(*p),
        }
    }
}

impl std::fmt::Display for StateSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateSpec::Ghz(n) => write!(f, "ghz:{n}"),
            StateSpec::Faulty(p) => write!(f, "faulty:{p}"),
        }
    }
}

/// Where a run's artifacts land.
#[derive(Args, Clone, Debug)]
pub struct RunDirArgs {
    /// Use this exact directory for the run's artifacts.
    #[arg(long)]
    run_dir: Option<PathBuf>,
    /// Root under which auto-named run directories are created.
    #[arg(long, default_value = "runs")]
    runs_root: PathBuf,
}

pub struct RunContext {
    pub dir: PathBuf,
}

impl RunContext {
    /// Creates the run directory: `--run-dir` verbatim, or
    /// `<runs-root>/<UTC timestamp>-<sha256(config)[..8]>`.
    pub fn create<C: Serialize>(args: &RunDirArgs, config: &C) -> Result<Self> {
        let dir = match &args.run_dir {
            Some(d) => d.clone(),
            None => {
                let encoded = serde_json::to_vec(config)
                    .map_err(|e| AqtError::Format(format!("config encode: {e}")))?;
                let digest = Sha256::digest(&encoded);
                let hash8: String = digest[..4].iter().map(|b| format!("{b:02x}")).collect();
                let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
                args.runs_root.join(format!("{stamp}-{hash8}"))
            }
        };
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `manifest.json` with the resolved config and crate version.
    pub fn write_manifest<C: Serialize>(&self, command: &str, config: &C) -> Result<()> {
        let manifest = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
        });
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| AqtError::Format(format!("manifest encode: {e}")))?;
        std::fs::write(self.path("manifest.json"), text)?;
        Ok(())
    }
}

/// Model-size flags shared by training commands.
#[derive(Args, Clone, Debug)]
pub struct ModelFlags {
    /// Transformer layers (desk default 2).
    #[arg(long)]
    pub layers: Option<usize>,
    /// Embedding dimension (desk default 64).
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Attention heads (default 4).
    #[arg(long)]
    pub heads: Option<usize>,
    /// Feed-forward width (default 4x embedding).
    #[arg(long)]
    pub ff_dim: Option<usize>,
    /// Use the full-size configuration (6 layers, 256-dim embedding).
    #[arg(long, default_value_t = false)]
    pub paper_scale: bool,
    /// Parameter initialization seed.
    #[arg(long)]
    pub model_seed: Option<u64>,
}

impl ModelFlags {
    pub fn resolve(&self, n_qubits: usize, file: Option<&ModelConfigFile>) -> TransformerConfig {
        let file = file.cloned().unwrap_or_default();
        let base = if self.paper_scale || file.paper_scale.unwrap_or(false) {
            TransformerConfig::paper_scale(n_qubits, 0)
        } else {
            TransformerConfig::desk(n_qubits, 0)
        };
        let embed_dim = self.embed_dim.or(file.embed_dim).unwrap_or(base.embed_dim);
        TransformerConfig {
            n_layers: self.layers.or(file.layers).unwrap_or(base.n_layers),
            embed_dim,
            n_heads: self.heads.or(file.heads).unwrap_or(base.n_heads),
            ff_dim: self.ff_dim.or(file.ff_dim).unwrap_or(4 * embed_dim),
            max_len: n_qubits,
            seed: self.model_seed.or(file.model_seed).unwrap_or(0),
        }
    }
}

/// Training flags shared by training commands.
#[derive(Args, Clone, Debug)]
pub struct TrainFlags {
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub adam_eps: Option<f64>,
    /// Seed for shuffling and the held-out split.
    #[arg(long)]
    pub train_seed: Option<u64>,
    #[arg(long, default_value_t = false)]
    pub no_shuffle: bool,
    /// Held-out fraction for early stopping (0 disables the split).
    #[arg(long)]
    pub heldout_frac: Option<f64>,
    /// Early-stopping patience in epochs.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Per-epoch multiplicative learning-rate decay (1 disables).
    #[arg(long)]
    pub lr_decay: Option<f64>,
}

impl TrainFlags {
    pub fn resolve(&self, file: Option<&TrainConfigFile>) -> TrainOptions {
        let file = file.cloned().unwrap_or_default();
        let d = TrainOptions::default();
        TrainOptions {
            learning_rate: self.lr.or(file.lr).unwrap_or(d.learning_rate),
            batch_size: self.batch_size.or(file.batch_size).unwrap_or(d.batch_size),
            epochs: self.epochs.or(file.epochs).unwrap_or(d.epochs),
            beta1: self.beta1.or(file.beta1).unwrap_or(d.beta1),
            beta2: self.beta2.or(file.beta2).unwrap_or(d.beta2),
            epsilon: self.adam_eps.or(file.adam_eps).unwrap_or(d.epsilon),
            seed: self.train_seed.or(file.train_seed).unwrap_or(d.seed),
            shuffle: if self.no_shuffle {
                false
            } else {
                file.shuffle.unwrap_or(d.shuffle)
            },
            heldout_fraction: self
                .heldout_frac
                .or(file.heldout_frac)
                .unwrap_or(d.heldout_fraction),
            patience: self.patience.or(file.patience).unwrap_or(d.patience),
            lr_decay: self.lr_decay.or(file.lr_decay).unwrap_or(d.lr_decay),
        }
    }
}

/// `[model]` section of a config file.
#[derive(Clone, Debug, Default, Deserialize)]
pub struct ModelConfigFile {
    pub layers: Option<usize>,
    pub embed_dim: Option<usize>,
    pub heads: Option<usize>,
    pub ff_dim: Option<usize>,
    pub paper_scale: Option<bool>,
    pub model_seed: Option<u64>,
}

/// `[train]` section of a config file.
#[derive(Clone, Debug, Default, Deserialize)]
pub struct TrainConfigFile {
    pub lr: Option<f64>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub adam_eps: Option<f64>,
    pub train_seed: Option<u64>,
    pub shuffle: Option<bool>,
    pub heldout_frac: Option<f64>,
    pub patience: Option<usize>,
    pub lr_decay: Option<f64>,
}

/// Config file schema: optional `[model]` and `[train]` tables whose keys
/// mirror the long CLI flags. Flags given on the command line win.
#[derive(Clone, Debug, Default, Deserialize)]
pub struct ConfigFile {
    pub model: Option<ModelConfigFile>,
    pub train: Option<TrainConfigFile>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str(&text)
                    .map_err(|e| AqtError::Validation(format!("config file {p:?}: {e}")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_spec_parsing() {
        assert_eq!(StateSpec::parse("ghz:4").unwrap(), StateSpec::Ghz(4));
        assert_eq!(
            StateSpec::parse("faulty:0.25").unwrap(),
            StateSpec::Faulty(0.25)
        );
        assert!(StateSpec::parse("ghz:0").is_err());
        assert!(StateSpec::parse("faulty:1.5").is_err());
        assert!(StateSpec::parse("bell:2").is_err());
        assert!(StateSpec::parse("ghz").is_err());
    }

    #[test]
    fn state_spec_round_trips_display() {
        for text in ["ghz:7", "faulty:0.3"] {
            let spec = StateSpec::parse(text).unwrap();
            assert_eq!(StateSpec::parse(&spec.to_string()).unwrap(), spec);
        }
    }

    #[test]
    fn config_file_overrides_defaults_but_not_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "[train]\nlr = 0.01\nepochs = 7\n").unwrap();
        let file = ConfigFile::load(Some(&path)).unwrap();
        let flags = TrainFlags {
            lr: Some(0.5),
            batch_size: None,
            epochs: None,
            beta1: None,
            beta2: None,
            adam_eps: None,
            train_seed: None,
            no_shuffle: false,
            heldout_frac: None,
            patience: None,
            lr_decay: None,
        };
        let opts = flags.resolve(file.train.as_ref());
        assert_eq!(opts.learning_rate, 0.5); // flag wins
        assert_eq!(opts.epochs, 7); // file fills the gap
        assert_eq!(opts.batch_size, TrainOptions::default().batch_size);
    }
}
