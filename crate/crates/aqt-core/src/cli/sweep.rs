//! Experiment sweeps: sample-complexity scaling and the error-model grid.
//!
//! Grid points run serially, each fully isolated: its own dataset seed,
//! training seed and evaluation stream. Result CSVs carry only
//! deterministic columns so reruns with the same seeds are byte-identical;
//! wall-clock times go to a separate timings CSV.

use super::{ConfigFile, ModelFlags, RunContext, RunDirArgs, StateSpec};
use crate::error::{AqtError, Result};
use crate::fidelity::{classical_fidelity_sampled, quantum_fidelity};
use crate::model::{train, TrainError, TransformerModel};
use crate::povm::{pauli4_frame, sample_with_source, ProbKernel};
use crate::reconstruct::{physical_fit_from_model, reconstruct_from_model, DensityMatrix, MleOptions};
use crate::rng::RNG_ALGORITHM;
use crate::states::ghz;
use clap::Args;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

fn parse_usize_list(text: &str, what: &str) -> Result<Vec<usize>> {
    let items: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| AqtError::Validation(format!("bad {what} list {text:?}")))?;
    if items.is_empty() {
        return Err(AqtError::Validation(format!("{what} list is empty")));
    }
    Ok(items)
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>> {
    let items: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| AqtError::Validation(format!("bad {what} list {text:?}")))?;
    if items.is_empty() {
        return Err(AqtError::Validation(format!("{what} list is empty")));
    }
    Ok(items)
}

/// Trains a model for one grid point. Seeds not pinned by flags fall back
/// to the point seed, keeping grid points independent but reproducible.
#[allow(clippy::too_many_arguments)]
fn train_point(
    state: &crate::states::ProductOperatorEnsemble,
    spec_text: String,
    n_samples: usize,
    point_seed: u64,
    model_flags: &ModelFlags,
    train_flags: &super::TrainFlags,
    file: &ConfigFile,
) -> Result<TransformerModel> {
    let frame = pauli4_frame();
    let data = sample_with_source(
        state,
        &frame,
        n_samples,
        point_seed,
        format!("{spec_text};rng={RNG_ALGORITHM}"),
    )?;
    let mut config = model_flags.resolve(state.n_qubits(), file.model.as_ref());
    if model_flags.model_seed.is_none()
        && file.model.as_ref().and_then(|m| m.model_seed).is_none()
    {
        config.seed = point_seed;
    }
    let mut opts = train_flags.resolve(file.train.as_ref());
    if train_flags.train_seed.is_none()
        && file.train.as_ref().and_then(|t| t.train_seed).is_none()
    {
        opts.seed = point_seed;
    }
    let model = TransformerModel::init(config)?;
    match train(model, &data, &opts) {
        Ok(out) => Ok(out.model),
        Err(e) => match *e {
            TrainError::Invalid(err) => Err(err),
            TrainError::Numeric { message, .. } => Err(AqtError::Numeric(message)),
        },
    }
}

#[derive(Args)]
pub struct SweepScalingArgs {
    /// Comma-separated qubit counts, e.g. 4,6,8,10.
    #[arg(long)]
    qubits: String,
    /// Strictly increasing comma-separated training-set sizes.
    #[arg(long)]
    ladder: String,
    /// Classical-fidelity target defining N_s*.
    #[arg(long, default_value_t = 0.99)]
    threshold: f64,
    /// Comma-separated seeds; fidelities are averaged over them.
    #[arg(long, default_value = "1")]
    seeds: String,
    /// Draws for each sampled classical fidelity.
    #[arg(long, default_value_t = 20_000)]
    fc_samples: usize,
    /// TOML config file with [model] and [train] tables.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    train: super::TrainFlags,
    #[command(flatten)]
    run: RunDirArgs,
}

pub fn run_sweep_scaling(args: SweepScalingArgs) -> Result<()> {
    let qubits = parse_usize_list(&args.qubits, "qubits")?;
    let ladder = parse_usize_list(&args.ladder, "ladder")?;
    if ladder.windows(2).any(|w| w[1] <= w[0]) || ladder[0] == 0 {
        return Err(AqtError::Validation(
            "ladder must be strictly increasing and positive".into(),
        ));
    }
    let seeds: Vec<u64> = parse_usize_list(&args.seeds, "seeds")?
        .into_iter()
        .map(|s| s as u64)
        .collect();
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(AqtError::Validation("threshold must lie in [0, 1]".into()));
    }
    let file = ConfigFile::load(args.config.as_deref())?;

    let resolved = serde_json::json!({
        "qubits": qubits,
        "ladder": ladder,
        "threshold": args.threshold,
        "seeds": seeds,
        "fc_samples": args.fc_samples,
        "protocol": "ascend the ladder per qubit count; N_s* is the first size whose seed-averaged sampled F_C reaches the threshold, provided a smaller tested size stayed below it; larger sizes are skipped once the crossing is bracketed",
    });
    let run = RunContext::create(&args.run, &resolved)?;
    run.write_manifest("sweep-scaling", &resolved)?;

    let mut results: Vec<(usize, usize, f64, f64, u64)> = Vec::new();
    let mut timings: Vec<(usize, usize, u64, f64)> = Vec::new();
    let mut ns_star: Vec<(usize, Option<usize>, &'static str)> = Vec::new();

    for &n_q in &qubits {
        let state = ghz(n_q)?;
        let frame = pauli4_frame();
        let kernel = ProbKernel::new(&state, &frame);
        let mut below_seen = false;
        let mut resolution: (Option<usize>, &'static str) = (None, "unresolved-above");
        for &n_s in &ladder {
            let mut fc_sum = 0.0;
            for &seed in &seeds {
                let t0 = Instant::now();
                let model = train_point(
                    &state,
                    format!("ghz:{n_q}"),
                    n_s,
                    seed,
                    &args.model,
                    &args.train,
                    &file,
                )?;
                let est = classical_fidelity_sampled(
                    |a| kernel.prob(a),
                    &model,
                    args.fc_samples,
                    seed,
                )?;
                let wall = t0.elapsed().as_secs_f64();
                eprintln!(
                    "[sweep-scaling] n_q={n_q} n_s={n_s} seed={seed} fc={:.4} ({wall:.1}s)",
                    est.value
                );
                results.push((n_q, n_s, est.value, est.std_error, seed));
                timings.push((n_q, n_s, seed, wall));
                fc_sum += est.value;
            }
            let fc_mean = fc_sum / seeds.len() as f64;
            if fc_mean >= args.threshold {
                if below_seen {
                    resolution = (Some(n_s), "resolved");
                } else {
                    resolution = (None, "unresolved-below");
                }
                break;
            }
            below_seen = true;
        }
        ns_star.push((n_q, resolution.0, resolution.1));
    }

    write_scaling_results(&run.path("results.csv"), &results)?;
    write_ns_star(&run.path("ns_star.csv"), &ns_star)?;
    write_timings(
        &run.path("timings.csv"),
        "sweep-scaling-timings",
        &timings
            .iter()
            .map(|&(q, s, seed, w)| (format!("{q},{s},{seed}"), w))
            .collect::<Vec<_>>(),
        "n_qubits,n_samples,seed",
    )?;
    for (n_q, star, status) in &ns_star {
        match star {
            Some(s) => println!("n_qubits={n_q} ns_star={s} status={status}"),
            None => println!("n_qubits={n_q} ns_star= status={status}"),
        }
    }
    println!("results: {}", run.path("results.csv").display());
    Ok(())
}

fn write_scaling_results(path: &Path, rows: &[(usize, usize, f64, f64, u64)]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# aqt-csv v1 sweep-scaling-results")?;
    writeln!(w, "n_qubits,n_samples,fc_value,fc_std_error,seed")?;
    for (q, s, v, e, seed) in rows {
        writeln!(w, "{q},{s},{v:.6},{e:.6},{seed}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_ns_star(path: &Path, rows: &[(usize, Option<usize>, &'static str)]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# aqt-csv v1 sweep-scaling-nsstar")?;
    writeln!(w, "n_qubits,ns_star,status")?;
    for (q, star, status) in rows {
        match star {
            Some(s) => writeln!(w, "{q},{s},{status}")?,
            None => writeln!(w, "{q},,{status}")?,
        }
    }
    w.flush()?;
    Ok(())
}

fn write_timings(path: &Path, schema: &str, rows: &[(String, f64)], key_cols: &str) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# aqt-csv v1 {schema}")?;
    writeln!(w, "{key_cols},wall_seconds")?;
    for (key, wall) in rows {
        writeln!(w, "{key},{wall:.3}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Args)]
pub struct SweepErrorArgs {
    /// Comma-separated error rates in [0, 1], e.g. 0,0.1,0.2,0.3.
    #[arg(long)]
    p_list: String,
    /// Training samples per grid point.
    #[arg(long, default_value_t = 60_000)]
    n: usize,
    /// Comma-separated seeds; one pipeline run per (p, seed).
    #[arg(long, default_value = "1")]
    seeds: String,
    /// TOML config file with [model] and [train] tables.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    train: super::TrainFlags,
    #[command(flatten)]
    run: RunDirArgs,
}

pub fn run_sweep_error(args: SweepErrorArgs) -> Result<()> {
    let p_list = parse_f64_list(&args.p_list, "p")?;
    if p_list.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(AqtError::Validation("p values must lie in [0, 1]".into()));
    }
    if args.n == 0 {
        return Err(AqtError::Validation("--n must be >= 1".into()));
    }
    let seeds: Vec<u64> = parse_usize_list(&args.seeds, "seeds")?
        .into_iter()
        .map(|s| s as u64)
        .collect();
    let file = ConfigFile::load(args.config.as_deref())?;

    let resolved = serde_json::json!({
        "p_list": p_list,
        "n": args.n,
        "seeds": seeds,
        "projection": "physical maximum-likelihood fit of the model distribution; projection_distance is the Frobenius distance from the raw frame inversion to the fitted state",
    });
    let run = RunContext::create(&args.run, &resolved)?;
    run.write_manifest("sweep-error", &resolved)?;

    let frame = pauli4_frame();
    let ghz_target = DensityMatrix::new(3, ghz(3)?.to_dense()?, true)?;
    let mut rows: Vec<(f64, f64, f64, f64, f64, u64)> = Vec::new();
    let mut timings: Vec<(String, f64)> = Vec::new();

    for &p in &p_list {
        let spec = StateSpec::Faulty(p);
        let state = spec.build()?;
        let err_target = DensityMatrix::new(3, state.to_dense()?, true)?;
        for &seed in &seeds {
            let t0 = Instant::now();
            let model = train_point(
                &state,
                spec.to_string(),
                args.n,
                seed,
                &args.model,
                &args.train,
                &file,
            )?;
            let raw = reconstruct_from_model(&model, &frame)?;
            let fit = physical_fit_from_model(
                &model,
                &frame,
                &MleOptions {
                    max_iters: super::commands::physical_fit_iters(3),
                    tol: 1e-13,
                    initial: None,
                },
            )?;
            let distance = fit.rho.matrix.sub(&raw.matrix)?.frobenius_norm();
            let fq_ghz = quantum_fidelity(&fit.rho, &ghz_target)?;
            let fq_err = quantum_fidelity(&fit.rho, &err_target)?;
            let wall = t0.elapsed().as_secs_f64();
            eprintln!(
                "[sweep-error] p={p} seed={seed} fq_ghz={fq_ghz:.4} fq_err={fq_err:.4} ({wall:.1}s)"
            );
            rows.push((p, fq_ghz, (fq_ghz - (1.0 - p)).abs(), fq_err, distance, seed));
            timings.push((format!("{p},{seed}"), wall));
        }
    }

    let path = run.path("results.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(w, "# aqt-csv v1 sweep-error-results")?;
    writeln!(w, "p,fq_vs_ghz,abs_dev,fq_vs_err,projection_distance,seed")?;
    for (p, fq, dev, fqe, dist, seed) in &rows {
        writeln!(w, "{p},{fq:.6},{dev:.6},{fqe:.6},{dist:.6},{seed}")?;
    }
    w.flush()?;
    write_timings(
        &run.path("timings.csv"),
        "sweep-error-timings",
        &timings,
        "p,seed",
    )?;
    for (p, fq, dev, fqe, _, seed) in &rows {
        println!("p={p} seed={seed} fq_vs_ghz={fq:.4} abs_dev={dev:.4} fq_vs_err={fqe:.4}");
    }
    println!("results: {}", path.display());
    Ok(())
}
