//! Reconstruction scores: classical fidelity (exact and sampled) and
//! quantum fidelity, plus the PSD projection frame-inverted matrices need
//! before quantum fidelity makes sense.

use crate::error::{AqtError, Result};
use crate::linalg::{hermitian_eig, matmul, psd_sqrt, ComplexMatrix};
use crate::model::TransformerModel;
use crate::povm::for_each_outcome;
use crate::reconstruct::DensityMatrix;

/// Exact classical fidelity enumerates `4^n` outcomes.
pub const EXACT_FC_QUBIT_CAP: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FidelityMethod {
    Exact,
    Sampled,
}

/// A fidelity value with its sampling uncertainty.
///
/// For sampled estimates `std_error` is the sample standard deviation of
/// `sqrt(p0/p1)` over the draws divided by `sqrt(n)`; exact values carry
/// zero error.
#[derive(Clone, Copy, Debug)]
pub struct FidelityEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub method: FidelityMethod,
}

fn checked_prob(p: f64, which: &str) -> Result<f64> {
    if !p.is_finite() || p < -1e-12 {
        return Err(AqtError::Domain(format!(
            "{which} evaluator returned invalid probability {p}"
        )));
    }
    Ok(p.max(0.0))
}

/// Exact Bhattacharyya overlap `sum_a sqrt(p0(a) p1(a))` over all `4^n`
/// outcomes.
pub fn classical_fidelity_exact<F0, F1>(
    p0: F0,
    p1: F1,
    n_qubits: usize,
) -> Result<FidelityEstimate>
where
    F0: Fn(&[u8]) -> Result<f64>,
    F1: Fn(&[u8]) -> Result<f64>,
{
    if n_qubits == 0 {
        return Err(AqtError::Domain("n_qubits must be >= 1".into()));
    }
    if n_qubits > EXACT_FC_QUBIT_CAP {
        return Err(AqtError::Capacity(format!(
            "exact classical fidelity caps at {EXACT_FC_QUBIT_CAP} qubits, got {n_qubits}"
        )));
    }
    let mut total = 0.0;
    let mut failure: Option<AqtError> = None;
    for_each_outcome(n_qubits, |a| {
        if failure.is_some() {
            return;
        }
        let q0 = p0(a).and_then(|p| checked_prob(p, "p0"));
        let q1 = p1(a).and_then(|p| checked_prob(p, "p1"));
        match (q0, q1) {
            (Ok(q0), Ok(q1)) => total += (q0 * q1).sqrt(),
            (Err(e), _) | (_, Err(e)) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(FidelityEstimate {
        value: total.clamp(0.0, 1.0),
        std_error: 0.0,
        n_samples: 4usize.pow(n_qubits as u32),
        method: FidelityMethod::Exact,
    })
}

/// Monte Carlo estimate `mean_{a ~ p1} sqrt(p0(a) / p1(a))` drawing from
/// the model with the usual per-draw stream seeding.
///
/// Repeated draws are deduplicated before evaluation, so the cost scales
/// with the number of distinct outcomes, not `n_samples`.
pub fn classical_fidelity_sampled<F0>(
    p0: F0,
    model: &TransformerModel,
    n_samples: usize,
    seed: u64,
) -> Result<FidelityEstimate>
where
    F0: Fn(&[u8]) -> Result<f64>,
{
    if n_samples == 0 {
        return Err(AqtError::Validation("n_samples must be >= 1".into()));
    }
    let draws = model.sample(n_samples, seed)?;
    let counts = draws.counts();
    let distinct: Vec<Vec<u8>> = counts.keys().cloned().collect();
    let log_p1 = model.log_probs(&distinct)?;
    let mut mean = 0.0;
    let mut ratios = Vec::with_capacity(distinct.len());
    for (a, lp1) in distinct.iter().zip(&log_p1) {
        let q0 = checked_prob(p0(a)?, "p0")?;
        // p1 > 0 since a was drawn from it; the direct ratio makes the
        // estimator exactly 1 when p0 is the model itself
        let r = (q0 / lp1.exp()).sqrt();
        let m = counts[a] as f64;
        mean += m * r;
        ratios.push((m, r));
    }
    mean /= n_samples as f64;
    let std_error = if n_samples >= 2 {
        let ss: f64 = ratios.iter().map(|(m, r)| m * (r - mean) * (r - mean)).sum();
        (ss / (n_samples - 1) as f64).sqrt() / (n_samples as f64).sqrt()
    } else {
        0.0
    };
    Ok(FidelityEstimate {
        value: mean,
        std_error,
        n_samples,
        method: FidelityMethod::Sampled,
    })
}

fn check_density_input(dm: &DensityMatrix, which: &str) -> Result<()> {
    let herm = dm.matrix.hermiticity_error();
    if herm > 1e-8 {
        return Err(AqtError::Domain(format!(
            "{which} deviates from Hermitian by {herm:.3e}"
        )));
    }
    let tr = dm.matrix.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(AqtError::Domain(format!("{which} has trace {tr}, expected 1")));
    }
    let (evals, _) = hermitian_eig(&dm.matrix)?;
    if let Some(min) = evals.first() {
        if *min < -1e-9 {
            return Err(AqtError::Domain(format!(
                "{which} has eigenvalue {min:.3e}; project to PSD first"
            )));
        }
    }
    Ok(())
}

/// Quantum (Uhlmann) fidelity `(Tr sqrt(sqrt(rho0) rho1 sqrt(rho0)))^2`,
/// clamped to `[0, 1]`. Both inputs must be PSD within 1e-9; project raw
/// frame inversions first.
pub fn quantum_fidelity(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64> {
    if rho0.n_qubits != rho1.n_qubits {
        return Err(AqtError::Shape(format!(
            "qubit counts differ: {} vs {}",
            rho0.n_qubits, rho1.n_qubits
        )));
    }
    check_density_input(rho0, "rho0")?;
    check_density_input(rho1, "rho1")?;
    let s0 = psd_sqrt(&rho0.matrix.hermitized())?;
    let inner = matmul(&matmul(&s0, &rho1.matrix)?, &s0)?.hermitized();
    let (evals, _) = hermitian_eig(&inner)?;
    // eigenvalues below the numerical rank floor are roundoff; without the
    // cutoff their square roots bias the trace upward
    let lmax = evals.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = lmax * 1e-14;
    let trace_sqrt: f64 = evals
        .iter()
        .filter(|&&l| l > cutoff)
        .map(|l| l.sqrt())
        .sum();
    Ok((trace_sqrt * trace_sqrt).clamp(0.0, 1.0))
}

/// Projects a Hermitian, roughly unit-trace matrix to the nearest
/// eigenvalue-clipped trace-1 PSD matrix. Returns the projected state and
/// the Frobenius norm of the change, which callers should surface as a
/// reconstruction-quality diagnostic.
pub fn project_to_psd(m: &ComplexMatrix) -> Result<(DensityMatrix, f64)> {
    if !m.is_square() {
        return Err(AqtError::Shape(format!(
            "project_to_psd: {}x{} is not square",
            m.rows(),
            m.cols()
        )));
    }
    let dim = m.rows();
    let n_qubits = dim.trailing_zeros() as usize;
    if dim == 0 || dim != (1usize << n_qubits) {
        return Err(AqtError::Shape(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    let herm = m.hermiticity_error();
    if herm > 1e-8 {
        return Err(AqtError::Domain(format!(
            "matrix deviates from Hermitian by {herm:.3e}; symmetrize first"
        )));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > 1e-6 {
        return Err(AqtError::Domain(format!(
            "matrix trace {tr} too far from 1"
        )));
    }
    let sym = m.hermitized();
    let (evals, vecs) = hermitian_eig(&sym)?;
    let clipped: Vec<f64> = evals.iter().map(|l| l.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(AqtError::Domain(
            "all eigenvalues non-positive; nothing to project onto".into(),
        ));
    }
    let mut scaled = vecs.clone();
    for j in 0..dim {
        let w = clipped[j] / total;
        for i in 0..dim {
            scaled[(i, j)] *= w;
        }
    }
    let projected = matmul(&scaled, &vecs.adjoint())?.hermitized();
    let distance = projected.sub(m)?.frobenius_norm();
    let dm = DensityMatrix::new(n_qubits, projected, true)?;
    Ok((dm, distance))
}
