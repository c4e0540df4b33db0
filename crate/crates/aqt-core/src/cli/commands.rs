//! `sample`, `train`, `eval` and `reconstruct` subcommands.

use super::{ConfigFile, ModelFlags, RunContext, RunDirArgs, StateSpec, TrainFlags};
use crate::error::{AqtError, Result};
use crate::fidelity::{classical_fidelity_exact, classical_fidelity_sampled, project_to_psd, quantum_fidelity};
use crate::model::{load_checkpoint, save_checkpoint, train, TrainError, TransformerModel};
use crate::povm::{pauli4_frame, sample_with_source, OutcomeDataset, ProbKernel};
use crate::reconstruct::{
    linear_inversion, mle_reconstruct, physical_fit_from_model, reconstruct_from_model,
    save_density_matrix, DensityMatrix, MleOptions, MleResult, MLE_QUBIT_CAP,
};
use crate::rng::RNG_ALGORITHM;
use clap::{Args, ValueEnum};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Args)]
pub struct SampleArgs {
    /// Target state: ghz:<n> or faulty:<p>.
    #[arg(long)]
    state: String,
    /// Number of measurement outcomes to draw.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset file path (defaults to dataset.txt inside the run dir).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    run: RunDirArgs,
}

pub fn run_sample(args: SampleArgs) -> Result<()> {
    let spec = StateSpec::parse(&args.state)?;
    if args.n == 0 {
        return Err(AqtError::Validation("--n must be >= 1".into()));
    }
    let config = serde_json::json!({
        "state": spec.to_string(),
        "n": args.n,
        "seed": args.seed,
        "out": args.out.as_ref().map(|p| p.display().to_string()),
    });
    let run = RunContext::create(&args.run, &config)?;
    run.write_manifest("sample", &config)?;

    let state = spec.build()?;
    let frame = pauli4_frame();
    let source = format!("{spec};rng={RNG_ALGORITHM}");
    let data = sample_with_source(&state, &frame, args.n, args.seed, source)?;
    let path = args.out.clone().unwrap_or_else(|| run.path("dataset.txt"));
    data.save(&path)?;
    println!(
        "wrote {} outcomes of {} qubits to {}",
        data.len(),
        data.n_qubits,
        path.display()
    );

    if data.n_qubits <= 6 {
        print_probability_summary(&state, &data)?;
    }
    Ok(())
}

fn print_probability_summary(
    state: &crate::states::ProductOperatorEnsemble,
    data: &OutcomeDataset,
) -> Result<()> {
    let frame = pauli4_frame();
    let kernel = ProbKernel::new(state, &frame);
    let mut rows: Vec<(Vec<u8>, f64, usize)> = data
        .counts()
        .into_iter()
        .map(|(a, c)| {
            let p = kernel.prob(&a)?;
            Ok((a, p, c))
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
    println!("exact probabilities of the most likely observed outcomes:");
    println!("  outcome      p_exact   count");
    for (a, p, c) in rows.iter().take(10) {
        let s: String = a.iter().map(|&x| char::from(b'0' + x)).collect();
        println!("  {s:<12} {p:.6}  {c}");
    }
    let covered: f64 = rows.iter().map(|(_, p, _)| p).sum();
    println!(
        "  ({} distinct outcomes observed, covering {covered:.4} exact mass)",
        rows.len()
    );
    Ok(())
}

#[derive(Args)]
pub struct TrainArgs {
    /// Dataset file in the aqt-dataset v1 format.
    #[arg(long)]
    dataset: PathBuf,
    /// Checkpoint output path (defaults to model.ckpt inside the run dir).
    #[arg(long)]
    checkpoint_out: Option<PathBuf>,
    /// Loss-trace CSV path (defaults to trace.csv inside the run dir).
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// TOML config file with [model] and [train] tables.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    train: TrainFlags,
    #[command(flatten)]
    run: RunDirArgs,
}

pub fn run_train(args: TrainArgs) -> Result<()> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let dataset = OutcomeDataset::load(&args.dataset)?;
    let config = args.model.resolve(dataset.n_qubits, file.model.as_ref());
    let opts = args.train.resolve(file.train.as_ref());
    config.validate()?;
    opts.validate()?;

    let resolved = serde_json::json!({
        "dataset": args.dataset.display().to_string(),
        "model": config,
        "train": opts,
    });
    let run = RunContext::create(&args.run, &resolved)?;
    run.write_manifest("train", &resolved)?;
    let ckpt_path = args
        .checkpoint_out
        .clone()
        .unwrap_or_else(|| run.path("model.ckpt"));
    let trace_path = args
        .trace_out
        .clone()
        .unwrap_or_else(|| run.path("trace.csv"));

    let model = TransformerModel::init(config)?;
    let output = match train(model, &dataset, &opts) {
        Ok(out) => out,
        Err(e) => match *e {
            TrainError::Invalid(err) => return Err(err),
            TrainError::Numeric { message, last_good } => {
                save_checkpoint(&last_good.model, Some(&opts), &ckpt_path)?;
                write_trace_csv(&trace_path, &last_good.trace)?;
                eprintln!(
                    "training diverged; last good checkpoint written to {}",
                    ckpt_path.display()
                );
                return Err(AqtError::Numeric(message));
            }
        },
    };
    save_checkpoint(&output.model, Some(&opts), &ckpt_path)?;
    write_trace_csv(&trace_path, &output.trace)?;
    let last = output.trace.last().expect("at least one epoch");
    println!(
        "trained {} epochs (best {}, early stop: {}); final train nll {:.6}{}",
        output.trace.len(),
        output.best_epoch,
        output.stopped_early,
        last.train_nll,
        match last.heldout_nll {
            Some(h) => format!(", heldout nll {h:.6}"),
            None => String::new(),
        }
    );
    println!("checkpoint: {}", ckpt_path.display());
    println!("trace: {}", trace_path.display());
    Ok(())
}

fn write_trace_csv(path: &Path, trace: &[crate::model::EpochRecord]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# aqt-csv v1 train-trace")?;
    writeln!(w, "epoch,train_nll,heldout_nll")?;
    for r in trace {
        match r.heldout_nll {
            Some(h) => writeln!(w, "{},{:.6},{:.6}", r.epoch, r.train_nll, h)?,
            None => writeln!(w, "{},{:.6},", r.epoch, r.train_nll)?,
        }
    }
    w.flush()?;
    Ok(())
}

/// How a raw frame inversion becomes a PSD state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Projection {
    /// Physical fit when the qubit count allows it, else eigenvalue clipping.
    Auto,
    /// Clip negative eigenvalues and renormalize the trace.
    Clip,
    /// Maximum-likelihood fit of the model distribution (PSD by construction).
    Physical,
}

/// Makes the model's raw frame inversion PSD by the chosen route.
/// Returns the projected state and its distance from the raw inversion.
fn project_model_reconstruction(
    model: &TransformerModel,
    frame: &crate::povm::PovmFrame,
    projection: Projection,
    raw: &DensityMatrix,
) -> Result<(DensityMatrix, f64)> {
    let physical = match projection {
        Projection::Clip => false,
        Projection::Physical => true,
        Projection::Auto => model.n_qubits() <= MLE_QUBIT_CAP,
    };
    if physical {
        let fit = physical_fit_from_model(
            model,
            frame,
            &MleOptions {
                max_iters: physical_fit_iters(model.n_qubits()),
                tol: 1e-13,
                initial: None,
            },
        )?;
        let distance = fit.rho.matrix.sub(&raw.matrix)?.frobenius_norm();
        Ok((fit.rho, distance))
    } else {
        let (projected, distance) = project_to_psd(&raw.matrix)?;
        Ok((projected, distance))
    }
}

/// Iteration budget for the physical fit; the per-iteration cost grows
/// as 16^n, so larger systems get shallower (still likelihood-converged
/// in practice) fits.
pub(super) fn physical_fit_iters(n_qubits: usize) -> usize {
    match n_qubits {
        0..=4 => 20_000,
        5 => 6_000,
        _ => 2_500,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvalWhich {
    /// Sampled classical fidelity (Monte Carlo from the model).
    FcSampled,
    /// Exact classical fidelity (4^n enumeration, n <= 8).
    FcExact,
    /// Quantum fidelity of the projected reconstruction against the state.
    Fq,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Reference state: ghz:<n> or faulty:<p>.
    #[arg(long)]
    state: String,
    #[arg(long, value_enum)]
    which: EvalWhich,
    /// Draws for the sampled estimator.
    #[arg(long, default_value_t = 100_000)]
    n_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Density-matrix export path for `fq` (defaults into the run dir).
    #[arg(long)]
    dm_out: Option<PathBuf>,
    /// PSD projection route for `fq`.
    #[arg(long, value_enum, default_value_t = Projection::Auto)]
    projection: Projection,
    #[command(flatten)]
    run: RunDirArgs,
}

pub fn run_eval(args: EvalArgs) -> Result<()> {
    let spec = StateSpec::parse(&args.state)?;
    let (model, _meta) = load_checkpoint(&args.checkpoint)?;
    if model.n_qubits() != spec.n_qubits() {
        return Err(AqtError::Validation(format!(
            "checkpoint is for {} qubits but state {} has {}",
            model.n_qubits(),
            spec,
            spec.n_qubits()
        )));
    }
    let config = serde_json::json!({
        "checkpoint": args.checkpoint.display().to_string(),
        "state": spec.to_string(),
        "which": format!("{:?}", args.which),
        "n_samples": args.n_samples,
        "seed": args.seed,
        "projection": format!("{:?}", args.projection),
    });
    let run = RunContext::create(&args.run, &config)?;
    run.write_manifest("eval", &config)?;

    let state = spec.build()?;
    let frame = pauli4_frame();
    match args.which {
        EvalWhich::FcSampled => {
            let kernel = ProbKernel::new(&state, &frame);
            let est =
                classical_fidelity_sampled(|a| kernel.prob(a), &model, args.n_samples, args.seed)?;
            println!(
                "fc_sampled value={:.6} std_error={:.6} n_samples={}",
                est.value, est.std_error, est.n_samples
            );
        }
        EvalWhich::FcExact => {
            let kernel = ProbKernel::new(&state, &frame);
            let est = classical_fidelity_exact(
                |a| kernel.prob(a),
                |a| model.prob(a),
                model.n_qubits(),
            )?;
            println!("fc_exact value={:.6}", est.value);
        }
        EvalWhich::Fq => {
            let raw = reconstruct_from_model(&model, &frame)?;
            let (projected, distance) =
                project_model_reconstruction(&model, &frame, args.projection, &raw)?;
            let target = DensityMatrix::new(spec.n_qubits(), state.to_dense()?, true)?;
            let fq = quantum_fidelity(&projected, &target)?;
            let dm_path = args
                .dm_out
                .clone()
                .unwrap_or_else(|| run.path("reconstruction.json"));
            save_density_matrix(&projected, &dm_path)?;
            println!(
                "fq value={fq:.6} projection_distance={distance:.6} dm={}",
                dm_path.display()
            );
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReconstructMethod {
    /// Frame inversion of the trained model's distribution.
    Aqt,
    /// Frame inversion of empirical frequencies.
    Linear,
    /// Iterative maximum likelihood.
    Mle,
}

#[derive(Args)]
pub struct ReconstructArgs {
    /// Trained model (required for --method aqt).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Dataset file (required for --method linear and mle).
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: ReconstructMethod,
    /// Reference state for fidelity and corner-mass reporting.
    #[arg(long)]
    state: Option<String>,
    /// Projected density-matrix export (defaults into the run dir).
    #[arg(long)]
    dm_out: Option<PathBuf>,
    /// Bar-plot CSV of absolute matrix elements (defaults into the run dir).
    #[arg(long)]
    bars_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    mle_max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    mle_tol: f64,
    /// Draws for the sampled classical fidelity report (aqt + --state).
    #[arg(long, default_value_t = 20_000)]
    fc_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// PSD projection route for --method aqt.
    #[arg(long, value_enum, default_value_t = Projection::Auto)]
    projection: Projection,
    #[command(flatten)]
    run: RunDirArgs,
}

pub fn run_reconstruct(args: ReconstructArgs) -> Result<()> {
    let spec = args.state.as_deref().map(StateSpec::parse).transpose()?;
    let config = serde_json::json!({
        "checkpoint": args.checkpoint.as_ref().map(|p| p.display().to_string()),
        "dataset": args.dataset.as_ref().map(|p| p.display().to_string()),
        "method": format!("{:?}", args.method),
        "state": spec.as_ref().map(|s| s.to_string()),
        "mle_max_iters": args.mle_max_iters,
        "mle_tol": args.mle_tol,
        "fc_samples": args.fc_samples,
        "seed": args.seed,
        "projection": format!("{:?}", args.projection),
    });
    let run = RunContext::create(&args.run, &config)?;
    run.write_manifest("reconstruct", &config)?;
    let dm_path = args.dm_out.clone().unwrap_or_else(|| run.path("dm.json"));
    let bars_path = args.bars_out.clone().unwrap_or_else(|| run.path("bars.csv"));

    let projected: DensityMatrix = match args.method {
        ReconstructMethod::Aqt => {
            let ckpt = args.checkpoint.as_ref().ok_or_else(|| {
                AqtError::Validation("--method aqt needs --checkpoint".into())
            })?;
            let (model, _) = load_checkpoint(ckpt)?;
            let frame = pauli4_frame();
            let raw = reconstruct_from_model(&model, &frame)?;
            save_density_matrix(&raw, &run.path("dm_raw.json"))?;
            let (projected, distance) =
                project_model_reconstruction(&model, &frame, args.projection, &raw)?;
            println!("projection_distance={distance:.6}");
            if let Some(spec) = &spec {
                if spec.n_qubits() == model.n_qubits() {
                    let state = spec.build()?;
                    let kernel = ProbKernel::new(&state, &frame);
                    let est = classical_fidelity_sampled(
                        |a| kernel.prob(a),
                        &model,
                        args.fc_samples,
                        args.seed,
                    )?;
                    println!(
                        "fc_sampled value={:.6} std_error={:.6} n_samples={}",
                        est.value, est.std_error, est.n_samples
                    );
                }
            }
            projected
        }
        ReconstructMethod::Linear => {
            let path = args.dataset.as_ref().ok_or_else(|| {
                AqtError::Validation("--method linear needs --dataset".into())
            })?;
            let dataset = OutcomeDataset::load(path)?;
            let frame = pauli4_frame();
            let raw = linear_inversion(&dataset, &frame)?;
            save_density_matrix(&raw, &run.path("dm_raw.json"))?;
            let (projected, distance) = project_to_psd(&raw.matrix)?;
            println!("projection_distance={distance:.6}");
            projected
        }
        ReconstructMethod::Mle => {
            let path = args.dataset.as_ref().ok_or_else(|| {
                AqtError::Validation("--method mle needs --dataset".into())
            })?;
            let dataset = OutcomeDataset::load(path)?;
            let frame = pauli4_frame();
            let MleResult {
                rho,
                converged,
                iterations,
                log_likelihood,
            } = mle_reconstruct(
                &dataset,
                &frame,
                &MleOptions {
                    max_iters: args.mle_max_iters,
                    tol: args.mle_tol,
                    initial: None,
                },
            )?;
            println!(
                "mle iterations={iterations} converged={converged} log_likelihood={:.6}",
                log_likelihood.last().copied().unwrap_or(f64::NAN)
            );
            if !converged {
                eprintln!("warning: MLE hit the iteration cap; returning the best iterate");
            }
            rho
        }
    };

    save_density_matrix(&projected, &dm_path)?;
    write_bars_csv(&bars_path, &projected)?;
    println!("dm={} bars={}", dm_path.display(), bars_path.display());

    if let Some(spec) = &spec {
        if spec.n_qubits() == projected.n_qubits && spec.n_qubits() <= 8 {
            let target = DensityMatrix::new(spec.n_qubits(), spec.build()?.to_dense()?, true)?;
            let fq = quantum_fidelity(&projected, &target)?;
            println!("fq_vs_state value={fq:.6}");
        }
        if let StateSpec::Ghz(_) = spec {
            println!(
                "off_corner_fraction={:.6}",
                crate::reconstruct::off_corner_fraction(&projected)
            );
        }
    }
    Ok(())
}

fn write_bars_csv(path: &Path, dm: &DensityMatrix) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# aqt-csv v1 dm-bars")?;
    writeln!(w, "row,col,abs")?;
    let dim = dm.dim();
    for i in 0..dim {
        for j in 0..dim {
            writeln!(w, "{},{},{:.9e}", i, j, dm.matrix[(i, j)].norm())?;
        }
    }
    w.flush()?;
    Ok(())
}
