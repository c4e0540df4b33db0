//! Density matrices from models, empirical frequencies, and iterative
//! maximum likelihood.
//!
//! The first two paths plug outcome weights into the dual-frame identity
//! `rho = sum_a w(a) N_{a_0} ⊗ ... ⊗ N_{a_{n-1}}`; with exact probabilities
//! the identity is exact, with noisy weights the result stays Hermitian and
//! unit-trace but may be indefinite, which the `projected` flag records.
//! Outcome sums run in fixed lexicographic order with pairwise (tree)
//! summation so results are stable and reproducible.

use crate::error::{AqtError, Result};
use crate::linalg::{kron, matmul, ComplexMatrix};
use crate::model::TransformerModel;
use crate::povm::{for_each_outcome, multi_qubit_dual, OutcomeDataset, PovmFrame};
use num_complex::Complex64;
use serde::Deserialize;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Frame-inversion reconstructions enumerate all `4^n` outcomes.
pub const RECONSTRUCT_QUBIT_CAP: usize = 8;
/// The iterative MLE works on dense POVM elements; keep it small.
pub const MLE_QUBIT_CAP: usize = 6;

/// A dense density matrix tagged with its PSD status.
///
/// `projected = false` marks a raw frame inversion that may be indefinite;
/// `true` means PSD was enforced (or holds by construction, as for MLE).
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub n_qubits: usize,
    pub matrix: ComplexMatrix,
    pub projected: bool,
}

impl DensityMatrix {
    /// Wraps a matrix, checking shape, Hermiticity (1e-10) and unit trace
    /// (1e-10).
    pub fn new(n_qubits: usize, matrix: ComplexMatrix, projected: bool) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(AqtError::Shape(format!(
                "density matrix for {n_qubits} qubits must be {dim}x{dim}, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let herm = matrix.hermiticity_error();
        if herm > 1e-10 {
            return Err(AqtError::Domain(format!(
                "matrix deviates from Hermitian by {herm:.3e}"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(AqtError::Domain(format!("matrix trace is {tr}, expected 1")));
        }
        Ok(Self {
            n_qubits,
            matrix,
            projected,
        })
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }
}

/// Pairwise tree sum of `w(a) * dual(a)` over lexicographically sorted
/// `(outcome, weight)` pairs.
fn weighted_dual_sum(
    pairs: &[(Vec<u8>, f64)],
    frame: &PovmFrame,
    n_qubits: usize,
) -> Result<ComplexMatrix> {
    fn tree(
        pairs: &[(Vec<u8>, f64)],
        frame: &PovmFrame,
    ) -> Result<ComplexMatrix> {
        if pairs.len() == 1 {
            let (a, w) = &pairs[0];
            return Ok(multi_qubit_dual(frame, a)?.scale(Complex64::new(*w, 0.0)));
        }
        let mid = pairs.len() / 2;
        let left = tree(&pairs[..mid], frame)?;
        let right = tree(&pairs[mid..], frame)?;
        left.add(&right)
    }
    if pairs.is_empty() {
        return Err(AqtError::Domain("no outcomes to sum".into()));
    }
    debug_assert!(pairs.windows(2).all(|w| w[0].0 <= w[1].0));
    debug_assert!(pairs.iter().all(|(a, _)| a.len() == n_qubits));
    tree(pairs, frame)
}

/// `rho_1 = sum_a p_model(a) * dual(a)`, symmetrized; raw (not projected).
pub fn reconstruct_from_model(
    model: &TransformerModel,
    frame: &PovmFrame,
) -> Result<DensityMatrix> {
    let n = model.n_qubits();
    if n > RECONSTRUCT_QUBIT_CAP {
        return Err(AqtError::Capacity(format!(
            "model reconstruction caps at {RECONSTRUCT_QUBIT_CAP} qubits, got {n}"
        )));
    }
    let probs = model.all_outcome_probs()?;
    let mut pairs = Vec::with_capacity(probs.len());
    let mut idx = 0;
    for_each_outcome(n, |a| {
        pairs.push((a.to_vec(), probs[idx]));
        idx += 1;
    });
    let rho = weighted_dual_sum(&pairs, frame, n)?.hermitized();
    DensityMatrix::new(n, rho, false).map_err(|e| match e {
        AqtError::Domain(msg) => AqtError::Numeric(format!(
            "model reconstruction produced an invalid matrix: {msg}"
        )),
        other => other,
    })
}

/// `rho = sum_a fhat(a) * dual(a)` over empirical frequencies; raw.
pub fn linear_inversion(dataset: &OutcomeDataset, frame: &PovmFrame) -> Result<DensityMatrix> {
    if dataset.is_empty() {
        return Err(AqtError::Domain("empty dataset".into()));
    }
    let n = dataset.n_qubits;
    if n > RECONSTRUCT_QUBIT_CAP {
        return Err(AqtError::Capacity(format!(
            "linear inversion caps at {RECONSTRUCT_QUBIT_CAP} qubits, got {n}"
        )));
    }
    let total = dataset.len() as f64;
    let pairs: Vec<(Vec<u8>, f64)> = dataset
        .counts()
        .into_iter()
        .map(|(a, c)| (a, c as f64 / total))
        .collect();
    let rho = weighted_dual_sum(&pairs, frame, n)?.hermitized();
    DensityMatrix::new(n, rho, false).map_err(|e| match e {
        AqtError::Domain(msg) => {
            AqtError::Numeric(format!("linear inversion produced an invalid matrix: {msg}"))
        }
        other => other,
    })
}

/// Stopping rule and start point for [`mle_reconstruct`].
#[derive(Clone, Debug)]
pub struct MleOptions {
    pub max_iters: usize,
    /// Stop when the log-likelihood gain per iteration drops below this.
    pub tol: f64,
    /// Warm start; the maximally mixed state when absent.
    pub initial: Option<DensityMatrix>,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            tol: 1e-10,
            initial: None,
        }
    }
}

#[derive(Debug)]
pub struct MleResult {
    pub rho: DensityMatrix,
    pub converged: bool,
    pub iterations: usize,
    /// Log-likelihood after each iteration; non-decreasing for the
    /// unregularized update.
    pub log_likelihood: Vec<f64>,
}

/// Iterative `rho <- R rho R / Tr(...)` maximum-likelihood fit of a
/// dataset's empirical frequencies, with
/// `R = sum_a (fhat(a) / p_rho(a)) * M_{a_0} ⊗ ... ⊗ M_{a_{n-1}}`.
///
/// The iterate stays PSD and unit-trace by construction. If some observed
/// outcome gets zero predicted probability the iterate is mixed with
/// `1e-9 * I / 2^n` once and iteration continues.
pub fn mle_reconstruct(
    dataset: &OutcomeDataset,
    frame: &PovmFrame,
    opts: &MleOptions,
) -> Result<MleResult> {
    if dataset.is_empty() {
        return Err(AqtError::Domain("empty dataset".into()));
    }
    let total = dataset.len() as f64;
    let observed: Vec<(Vec<u8>, f64)> = dataset
        .counts()
        .into_iter()
        .map(|(a, c)| (a, c as f64 / total))
        .collect();
    mle_fit(&observed, dataset.n_qubits, frame, opts)
}

/// Maximum-likelihood fit of the model's exact outcome distribution: the
/// physical (PSD by construction) state whose POVM statistics are closest
/// in likelihood to `p_model`. This is the physical alternative to clipping
/// the eigenvalues of the raw frame inversion, and loses far less fidelity
/// on near-pure states.
pub fn physical_fit_from_model(
    model: &TransformerModel,
    frame: &PovmFrame,
    opts: &MleOptions,
) -> Result<MleResult> {
    let n = model.n_qubits();
    if n > MLE_QUBIT_CAP {
        return Err(AqtError::Capacity(format!(
            "physical fit caps at {MLE_QUBIT_CAP} qubits, got {n}"
        )));
    }
    let probs = model.all_outcome_probs()?;
    let mut weights = Vec::with_capacity(probs.len());
    let mut idx = 0;
    for_each_outcome(n, |a| {
        // zero-probability outcomes contribute nothing to the likelihood
        if probs[idx] > 0.0 {
            weights.push((a.to_vec(), probs[idx]));
        }
        idx += 1;
    });
    mle_fit(&weights, n, frame, opts)
}

/// Shared R rho R driver over lexicographically sorted `(outcome, weight)`
/// pairs with positive weights summing to ~1.
///
/// Each iteration evaluates all outcome probabilities and assembles the
/// R operator through the tensor-product structure of the POVM, so the
/// per-iteration cost is `O(n 4^n)` rather than per-outcome dense kron
/// products.
fn mle_fit(
    observed: &[(Vec<u8>, f64)],
    n: usize,
    frame: &PovmFrame,
    opts: &MleOptions,
) -> Result<MleResult> {
    if observed.is_empty() {
        return Err(AqtError::Domain("no outcomes to fit".into()));
    }
    if n > MLE_QUBIT_CAP {
        return Err(AqtError::Capacity(format!(
            "MLE caps at {MLE_QUBIT_CAP} qubits, got {n}"
        )));
    }
    if opts.max_iters == 0 {
        return Err(AqtError::Validation("max_iters must be >= 1".into()));
    }
    let dim = 1usize << n;
    let total_outcomes = 4usize.pow(n as u32);

    // dense lexicographic weight vector
    let mut weights = vec![0.0f64; total_outcomes];
    for (a, f) in observed {
        if a.len() != n {
            return Err(AqtError::Shape(format!(
                "outcome has {} symbols, expected {n}",
                a.len()
            )));
        }
        if a.iter().any(|&s| s >= 4) {
            return Err(AqtError::Domain("outcome symbol >= 4".into()));
        }
        let mut idx = 0usize;
        for &s in a {
            idx = idx * 4 + s as usize;
        }
        weights[idx] += *f;
    }
    let support: Vec<usize> = (0..total_outcomes)
        .filter(|&i| weights[i] > 0.0)
        .collect();

    let mut rho = match &opts.initial {
        Some(start) => {
            if start.n_qubits != n {
                return Err(AqtError::Shape(format!(
                    "initial state has {} qubits, dataset has {n}",
                    start.n_qubits
                )));
            }
            start.matrix.clone()
        }
        None => ComplexMatrix::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0)),
    };
    let mut log_likelihood = Vec::new();
    let mut best: Option<(f64, ComplexMatrix)> = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut probs = Vec::with_capacity(total_outcomes);
    let mut ratios = vec![0.0f64; total_outcomes];

    for _ in 0..opts.max_iters {
        iterations += 1;
        // predicted probabilities, with one regularization retry on zeros
        for attempt in 0..2 {
            dense_outcome_probs(&rho, frame, n, &mut probs);
            if support.iter().all(|&i| probs[i] > 1e-12) {
                break;
            }
            if attempt == 0 {
                let mix = 1e-9;
                rho = rho.scale(Complex64::new(1.0 - mix, 0.0));
                for i in 0..dim {
                    rho[(i, i)] += Complex64::new(mix / dim as f64, 0.0);
                }
            } else {
                return Err(AqtError::Numeric(
                    "observed outcome keeps zero probability after regularization".into(),
                ));
            }
        }

        let mut ll = 0.0;
        for &i in &support {
            ll += weights[i] * probs[i].ln();
            ratios[i] = weights[i] / probs[i];
        }
        log_likelihood.push(ll);
        if best.as_ref().map_or(true, |(b, _)| ll > *b) {
            best = Some((ll, rho.clone()));
        }
        if log_likelihood.len() >= 2 {
            let gain = ll - log_likelihood[log_likelihood.len() - 2];
            if gain.abs() < opts.tol {
                converged = true;
                break;
            }
        }

        let r_op = weighted_element_sum(&ratios, frame, n)
            .ok_or_else(|| AqtError::Numeric("empty R operator".into()))?;
        let next = matmul(&matmul(&r_op, &rho)?, &r_op)?.hermitized();
        let tr = next.trace().re;
        if !(tr.is_finite() && tr > 0.0) {
            return Err(AqtError::Numeric(format!("MLE iterate trace became {tr}")));
        }
        rho = next.scale(Complex64::new(1.0 / tr, 0.0));
    }

    let (_, best_rho) = best.expect("at least one iterate");
    let rho = DensityMatrix::new(n, best_rho, true)?;
    Ok(MleResult {
        rho,
        converged,
        iterations,
        log_likelihood,
    })
}

/// Contracts the first qubit of `x` against a single-qubit operator:
/// `y[(i,j)] = sum_{u,v} x[(u D + i, v D + j)] m[(v,u)]` with `D = dim/2`.
fn contract_first_qubit(x: &ComplexMatrix, m: &ComplexMatrix) -> ComplexMatrix {
    let half = x.rows() / 2;
    ComplexMatrix::from_fn(half, half, |i, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for u in 0..2 {
            for v in 0..2 {
                acc += x[(u * half + i, v * half + j)] * m[(v, u)];
            }
        }
        acc
    })
}

/// All `4^n` outcome probabilities `Tr(rho M_{a_0} ⊗ ... ⊗ M_{a_{n-1}})`
/// of a dense state, in lexicographic outcome order.
fn dense_outcome_probs(rho: &ComplexMatrix, frame: &PovmFrame, n: usize, out: &mut Vec<f64>) {
    fn rec(x: &ComplexMatrix, frame: &PovmFrame, remaining: usize, out: &mut Vec<f64>) {
        for s in 0..4 {
            let y = contract_first_qubit(x, frame.element(s));
            if remaining == 1 {
                out.push(y[(0, 0)].re);
            } else {
                rec(&y, frame, remaining - 1, out);
            }
        }
    }
    out.clear();
    rec(rho, frame, n, out);
}

/// `sum_a w_a M_{a_0} ⊗ ... ⊗ M_{a_{n-1}}` over a dense lexicographic
/// weight vector, exploiting the product structure and skipping zero
/// blocks. `None` when every weight is zero.
fn weighted_element_sum(weights: &[f64], frame: &PovmFrame, n: usize) -> Option<ComplexMatrix> {
    debug_assert_eq!(weights.len(), 4usize.pow(n as u32));
    let one = Complex64::new(1.0, 0.0);
    if n == 1 {
        let mut acc: Option<ComplexMatrix> = None;
        for s in 0..4 {
            if weights[s] != 0.0 {
                let a = acc.get_or_insert_with(|| ComplexMatrix::zeros(2, 2));
                a.add_scaled_assign(frame.element(s), Complex64::new(weights[s], 0.0));
            }
        }
        return acc;
    }
    let quarter = weights.len() / 4;
    let mut acc: Option<ComplexMatrix> = None;
    for s in 0..4 {
        let block = &weights[s * quarter..(s + 1) * quarter];
        if let Some(child) = weighted_element_sum(block, frame, n - 1) {
            let term = kron(frame.element(s), &child).expect("kron within dense cap");
            match &mut acc {
                None => acc = Some(term),
                Some(a) => a.add_scaled_assign(&term, one),
            }
        }
    }
    acc
}

/// Fraction of total absolute matrix mass outside the four GHZ corner
/// elements `{0, 2^n - 1} x {0, 2^n - 1}`; 0 for an exact GHZ state.
pub fn off_corner_fraction(dm: &DensityMatrix) -> f64 {
    let dim = dm.dim();
    let last = dim - 1;
    let mut total = 0.0;
    let mut corners = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let a = dm.matrix[(i, j)].norm();
            total += a;
            if (i == 0 || i == last) && (j == 0 || j == last) {
                corners += a;
            }
        }
    }
    if total == 0.0 {
        return 0.0;
    }
    1.0 - corners / total
}

/// Writes the density-matrix export format: a JSON document
/// `{format, n_qubits, basis_convention, projected, real, imag}` with
/// row-major matrices printed to 17 significant digits.
pub fn save_density_matrix(dm: &DensityMatrix, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let dim = dm.dim();
    writeln!(w, "{{")?;
    writeln!(w, "  \"format\": \"aqt-dm v1\",")?;
    writeln!(w, "  \"n_qubits\": {},", dm.n_qubits)?;
    writeln!(w, "  \"basis_convention\": \"qubit0-most-significant\",")?;
    writeln!(w, "  \"projected\": {},", dm.projected)?;
    for (field, part) in [("real", 0), ("imag", 1)] {
        writeln!(w, "  \"{field}\": [")?;
        for i in 0..dim {
            write!(w, "    [")?;
            for j in 0..dim {
                let z = dm.matrix[(i, j)];
                let v = if part == 0 { z.re } else { z.im };
                write!(w, "{v:.16e}")?;
                if j + 1 < dim {
                    write!(w, ", ")?;
                }
            }
            writeln!(w, "]{}", if i + 1 < dim { "," } else { "" })?;
        }
        writeln!(w, "  ]{}", if field == "real" { "," } else { "" })?;
    }
    writeln!(w, "}}")?;
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct DmFile {
    format: String,
    n_qubits: usize,
    basis_convention: String,
    projected: bool,
    real: Vec<Vec<f64>>,
    imag: Vec<Vec<f64>>,
}

/// Reads the density-matrix export format.
pub fn load_density_matrix(path: &Path) -> Result<DensityMatrix> {
    let text = std::fs::read_to_string(path)?;
    let file: DmFile =
        serde_json::from_str(&text).map_err(|e| AqtError::Format(format!("dm parse: {e}")))?;
    if file.format != "aqt-dm v1" {
        return Err(AqtError::Format(format!(
            "unsupported density-matrix format {:?}",
            file.format
        )));
    }
    if file.basis_convention != "qubit0-most-significant" {
        return Err(AqtError::Format(format!(
            "unsupported basis convention {:?}",
            file.basis_convention
        )));
    }
    let dim = 1usize << file.n_qubits;
    if file.real.len() != dim || file.imag.len() != dim {
        return Err(AqtError::Format("matrix row count mismatch".into()));
    }
    let mut matrix = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        if file.real[i].len() != dim || file.imag[i].len() != dim {
            return Err(AqtError::Format(format!("row {i} length mismatch")));
        }
        for j in 0..dim {
            let z = Complex64::new(file.real[i][j], file.imag[i][j]);
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(AqtError::Format(format!("non-finite entry at ({i},{j})")));
            }
            matrix[(i, j)] = z;
        }
    }
    DensityMatrix::new(file.n_qubits, matrix, file.projected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{TransformerConfig, TransformerModel};
    use crate::povm::{pauli4_frame, sample, ProbKernel};
    use crate::states::{basis_product_state, faulty_qubit_state, ghz};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn exact_pairs(
        state: &crate::states::ProductOperatorEnsemble,
        frame: &PovmFrame,
    ) -> Vec<(Vec<u8>, f64)> {
        let kernel = ProbKernel::new(state, frame);
        let mut pairs = Vec::new();
        for_each_outcome(state.n_qubits(), |a| {
            pairs.push((a.to_vec(), kernel.prob(a).unwrap()));
        });
        pairs
    }

    #[test]
    fn frame_inversion_is_exact_for_exact_probabilities() {
        let frame = pauli4_frame();
        for state in [
            ghz(2).unwrap(),
            ghz(3).unwrap(),
            ghz(4).unwrap(),
            faulty_qubit_state(0.3).unwrap(),
        ] {
            let pairs = exact_pairs(&state, &frame);
            let rho = weighted_dual_sum(&pairs, &frame, state.n_qubits()).unwrap();
            let expect = state.to_dense().unwrap();
            let dev = rho.sub(&expect).unwrap().max_abs();
            assert!(dev <= 1e-9, "n={} dev={dev:.3e}", state.n_qubits());
        }
    }

    #[test]
    fn model_head_with_exact_conditionals_reconstructs_ground_state() {
        // zero hidden weights + log-prob bias head gives an exactly uniform
        // context, so the model emits p = (1/3, 1/6, 1/6, 1/3) per position
        let mut model = TransformerModel::init(TransformerConfig {
            n_layers: 1,
            embed_dim: 8,
            n_heads: 2,
            ff_dim: 16,
            max_len: 1,
            seed: 0,
        })
        .unwrap();
        let target = [1.0f64 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0];
        for (k, t) in target.iter().enumerate() {
            model.params_mut().out_bias[k] = t.ln();
        }
        let frame = pauli4_frame();
        let rho = reconstruct_from_model(&model, &frame).unwrap();
        let expect = basis_product_state(&[0]).unwrap().to_dense().unwrap();
        assert!(rho.matrix.sub(&expect).unwrap().max_abs() <= 1e-6);
        assert!(!rho.projected);
    }

    #[test]
    fn uniform_model_reconstruction_matches_direct_dual_average() {
        let model = TransformerModel::init(TransformerConfig {
            n_layers: 1,
            embed_dim: 8,
            n_heads: 2,
            ff_dim: 16,
            max_len: 1,
            seed: 1,
        })
        .unwrap();
        let frame = pauli4_frame();
        let rho = reconstruct_from_model(&model, &frame).unwrap();
        let mut expect = ComplexMatrix::zeros(2, 2);
        for a in 0..4 {
            expect.add_scaled_assign(frame.dual(a), c(0.25, 0.0));
        }
        assert!(rho.matrix.sub(&expect).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn model_reconstruction_equals_linear_inversion_of_its_distribution() {
        // uniform model vs the uniform dataset containing each outcome once
        let model =
            TransformerModel::init(TransformerConfig::desk(2, 3)).unwrap();
        let frame = pauli4_frame();
        let rho_model = reconstruct_from_model(&model, &frame).unwrap();
        let mut outcomes = Vec::new();
        for_each_outcome(2, |a| outcomes.push(a.to_vec()));
        let data = OutcomeDataset {
            n_qubits: 2,
            povm_name: "pauli4".into(),
            seed: 0,
            source: "enumeration".into(),
            outcomes,
        };
        let rho_inv = linear_inversion(&data, &frame).unwrap();
        let dev = rho_model.matrix.sub(&rho_inv.matrix).unwrap().max_abs();
        assert!(dev <= 1e-12, "dev={dev:.3e}");
    }

    #[test]
    fn linear_inversion_exact_weighted_enumeration_recovers_ghz2() {
        let frame = pauli4_frame();
        let state = ghz(2).unwrap();
        let kernel = ProbKernel::new(&state, &frame);
        // outcome probabilities have denominator 72, so 144 copies weight
        // each outcome integrally
        let scale = 144usize;
        let mut outcomes = Vec::new();
        for_each_outcome(2, |a| {
            let count = kernel.prob(a).unwrap() * scale as f64;
            assert!(
                (count - count.round()).abs() <= 1e-9,
                "non-integral count {count}"
            );
            for _ in 0..count.round() as usize {
                outcomes.push(a.to_vec());
            }
        });
        assert_eq!(outcomes.len(), scale);
        let data = OutcomeDataset {
            n_qubits: 2,
            povm_name: "pauli4".into(),
            seed: 0,
            source: "exact-weighted".into(),
            outcomes,
        };
        let rho = linear_inversion(&data, &frame).unwrap();
        let expect = state.to_dense().unwrap();
        assert!(rho.matrix.sub(&expect).unwrap().max_abs() <= 1e-10);
    }

    #[test]
    fn linear_inversion_is_hermitian_unit_trace_on_small_samples() {
        let frame = pauli4_frame();
        let state = ghz(3).unwrap();
        let data = sample(&state, &frame, 100, 8).unwrap();
        let rho = linear_inversion(&data, &frame).unwrap();
        assert!(rho.matrix.hermiticity_error() == 0.0);
        assert!((rho.matrix.trace() - c(1.0, 0.0)).norm() <= 1e-12);
        assert!(!rho.projected);
    }

    #[test]
    fn linear_inversion_rejects_empty_and_oversized() {
        let frame = pauli4_frame();
        let empty = OutcomeDataset {
            n_qubits: 2,
            povm_name: "pauli4".into(),
            seed: 0,
            source: "none".into(),
            outcomes: vec![],
        };
        assert!(matches!(
            linear_inversion(&empty, &frame),
            Err(AqtError::Domain(_))
        ));
        let big = OutcomeDataset {
            n_qubits: 9,
            povm_name: "pauli4".into(),
            seed: 0,
            source: "big".into(),
            outcomes: vec![vec![0; 9]],
        };
        assert!(matches!(
            linear_inversion(&big, &frame),
            Err(AqtError::Capacity(_))
        ));
    }

    fn exact_ground_state_dataset() -> OutcomeDataset {
        // exact p = (1/3, 1/6, 1/6, 1/3) scaled by 6
        OutcomeDataset {
            n_qubits: 1,
            povm_name: "pauli4".into(),
            seed: 0,
            source: "exact".into(),
            outcomes: vec![
                vec![0u8],
                vec![0u8],
                vec![1u8],
                vec![2u8],
                vec![3u8],
                vec![3u8],
            ],
        }
    }

    #[test]
    fn mle_update_fixes_the_exact_frequency_optimum() {
        // at rho = |0><0| with exact frequencies, R = sum_a M_a = I, so the
        // update must not move
        let frame = pauli4_frame();
        let data = exact_ground_state_dataset();
        let expect = basis_product_state(&[0]).unwrap().to_dense().unwrap();
        let opts = MleOptions {
            max_iters: 10,
            tol: 1e-15,
            initial: Some(DensityMatrix::new(1, expect.clone(), true).unwrap()),
        };
        let result = mle_reconstruct(&data, &frame, &opts).unwrap();
        let dev = result.rho.matrix.sub(&expect).unwrap().max_abs();
        assert!(dev <= 1e-8, "dev={dev:.3e} after {} iters", result.iterations);
        assert!(result.converged);
        assert!(result.rho.projected);
    }

    #[test]
    fn mle_approaches_the_exact_frequency_optimum_from_scratch() {
        // the optimum is rank-1 (a boundary point), where R rho R converges
        // sublinearly; check steady approach rather than full convergence
        let frame = pauli4_frame();
        let data = exact_ground_state_dataset();
        let expect = basis_product_state(&[0]).unwrap().to_dense().unwrap();
        let opts = MleOptions {
            max_iters: 5000,
            tol: 0.0,
            initial: None,
        };
        let result = mle_reconstruct(&data, &frame, &opts).unwrap();
        let dev = result.rho.matrix.sub(&expect).unwrap().max_abs();
        assert!(dev <= 1e-3, "dev={dev:.3e} after {} iters", result.iterations);
    }

    #[test]
    fn mle_log_likelihood_is_non_decreasing() {
        let frame = pauli4_frame();
        let state = faulty_qubit_state(0.2).unwrap();
        let data = sample(&state, &frame, 2000, 4).unwrap();
        let result = mle_reconstruct(&data, &frame, &MleOptions::default()).unwrap();
        assert!(result.iterations > 10);
        for w in result.log_likelihood.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-12,
                "log-likelihood decreased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn mle_respects_qubit_cap() {
        let frame = pauli4_frame();
        let data = OutcomeDataset {
            n_qubits: 7,
            povm_name: "pauli4".into(),
            seed: 0,
            source: "big".into(),
            outcomes: vec![vec![0; 7]],
        };
        assert!(matches!(
            mle_reconstruct(&data, &frame, &MleOptions::default()),
            Err(AqtError::Capacity(_))
        ));
    }

    #[test]
    fn density_matrix_export_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.json");
        let dense = faulty_qubit_state(0.4).unwrap().to_dense().unwrap();
        let dm = DensityMatrix::new(3, dense, false).unwrap();
        save_density_matrix(&dm, &path).unwrap();
        let loaded = load_density_matrix(&path).unwrap();
        assert_eq!(loaded.n_qubits, 3);
        assert!(!loaded.projected);
        assert!(loaded.matrix.sub(&dm.matrix).unwrap().max_abs() <= 1e-15);
        // spot-check the format fields
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"format\": \"aqt-dm v1\""));
        assert!(text.contains("\"basis_convention\": \"qubit0-most-significant\""));
    }

    #[test]
    fn density_matrix_load_rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{\"format\": \"aqt-dm v9\"}").unwrap();
        assert!(matches!(
            load_density_matrix(&path),
            Err(AqtError::Format(_))
        ));
    }

    #[test]
    fn density_matrix_validation() {
        let bad = ComplexMatrix::two_by_two(c(1.0, 0.0), c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0));
        assert!(matches!(
            DensityMatrix::new(1, bad, false),
            Err(AqtError::Domain(_))
        ));
        let wrong_dim = ComplexMatrix::identity(3);
        assert!(matches!(
            DensityMatrix::new(1, wrong_dim, false),
            Err(AqtError::Shape(_))
        ));
    }
}
