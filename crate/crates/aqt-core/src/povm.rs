//! The Pauli-4 POVM: outcome probabilities, sampling and dual frames.
//!
//! Measurement outcomes are strings of symbols in `{0,1,2,3}`, one per
//! qubit (0-indexed). Probabilities for ensemble states factor through
//! per-qubit traces, so evaluation and sampling cost
//! `O(terms * n_qubits)` per outcome regardless of Hilbert-space size.
//!
//! Any informationally complete 4-element single-qubit POVM can be wrapped
//! in a [`PovmFrame`]; [`pauli4_frame`] builds the concrete one used
//! throughout.

use crate::error::{AqtError, Result};
use crate::linalg::{kron, matmul, ComplexMatrix};
use crate::rng::{stream_rng, RNG_ALGORITHM};
use crate::states::ProductOperatorEnsemble;
use num_complex::Complex64;
use rand::Rng;
use std::collections::BTreeMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

/// Number of outcomes per qubit.
pub const N_OUTCOMES: usize = 4;

/// A single-qubit IC-POVM together with its overlap matrix and dual frame.
#[derive(Clone, Debug)]
pub struct PovmFrame {
    name: String,
    /// The four POVM elements `M_a`, each 2x2 Hermitian PSD.
    elements: Vec<ComplexMatrix>,
    /// Overlap matrix `T_ab = Tr(M_a M_b)`.
    overlap: [[f64; 4]; 4],
    /// Dual elements `N_a = sum_b (T^-1)_ab M_b`.
    duals: Vec<ComplexMatrix>,
}

/// Min eigenvalue of a 2x2 Hermitian matrix, in closed form.
fn min_eig_2x2(m: &ComplexMatrix) -> f64 {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    mid - rad
}

/// Gauss-Jordan inverse of a 4x4 real matrix; also returns the determinant.
fn invert4(t: &[[f64; 4]; 4]) -> (Option<[[f64; 4]; 4]>, f64) {
    let mut a = *t;
    let mut inv = [[0.0; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut det = 1.0;
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-14 {
            return (None, 0.0);
        }
        if pivot != col {
            a.swap(pivot, col);
            inv.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        for j in 0..4 {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..4 {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in 0..4 {
                        a[i][j] -= f * a[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    (Some(inv), det)
}

impl PovmFrame {
    /// Validates the POVM axioms and informational completeness, then
    /// derives the overlap matrix and dual frame.
    pub fn new(name: impl Into<String>, elements: Vec<ComplexMatrix>) -> Result<Self> {
        if elements.len() != N_OUTCOMES {
            return Err(AqtError::Shape(format!(
                "frame needs {N_OUTCOMES} elements, got {}",
                elements.len()
            )));
        }
        for (a, m) in elements.iter().enumerate() {
            if m.rows() != 2 || m.cols() != 2 {
                return Err(AqtError::Shape(format!("element {a} is not 2x2")));
            }
            if m.hermiticity_error() > 1e-12 {
                return Err(AqtError::Domain(format!("element {a} is not Hermitian")));
            }
            if min_eig_2x2(m) < -1e-12 {
                return Err(AqtError::Domain(format!(
                    "element {a} has negative eigenvalue {:.3e}",
                    min_eig_2x2(m)
                )));
            }
        }
        let mut sum = ComplexMatrix::zeros(2, 2);
        for m in &elements {
            sum.add_scaled_assign(m, Complex64::new(1.0, 0.0));
        }
        let dev = sum.sub(&ComplexMatrix::identity(2))?.max_abs();
        if dev > 1e-12 {
            return Err(AqtError::Domain(format!(
                "elements sum to identity only within {dev:.3e}"
            )));
        }

        let mut overlap = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                overlap[a][b] = matmul(&elements[a], &elements[b])?.trace().re;
            }
        }
        let (inv, det) = invert4(&overlap);
        if det.abs() <= 1e-9 {
            return Err(AqtError::Domain(format!(
                "overlap matrix is singular (det = {det:.3e}); POVM is not informationally complete"
            )));
        }
        let inv = inv.unwrap();
        let duals: Vec<ComplexMatrix> = (0..4)
            .map(|a| {
                let mut n = ComplexMatrix::zeros(2, 2);
                for b in 0..4 {
                    n.add_scaled_assign(&elements[b], Complex64::new(inv[a][b], 0.0));
                }
                n
            })
            .collect();

        let frame = Self {
            name: name.into(),
            elements,
            overlap,
            duals,
        };
        frame.check_frame_identity()?;
        Ok(frame)
    }

    /// Frame identity `sigma = sum_a Tr(sigma M_a) N_a` on the Pauli basis,
    /// which spans all Hermitian 2x2 matrices.
    fn check_frame_identity(&self) -> Result<()> {
        let c = Complex64::new;
        let paulis = [
            ComplexMatrix::identity(2),
            ComplexMatrix::two_by_two(c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)),
            ComplexMatrix::two_by_two(c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)),
            ComplexMatrix::two_by_two(c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)),
        ];
        for sigma in &paulis {
            let mut rec = ComplexMatrix::zeros(2, 2);
            for a in 0..4 {
                let w = matmul(sigma, &self.elements[a])?.trace();
                rec.add_scaled_assign(&self.duals[a], w);
            }
            if rec.sub(sigma)?.max_abs() > 1e-10 {
                return Err(AqtError::Numeric(
                    "dual frame does not reproduce the Pauli basis".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn element(&self, a: usize) -> &ComplexMatrix {
        &self.elements[a]
    }

    pub fn overlap(&self) -> &[[f64; 4]; 4] {
        &self.overlap
    }

    pub fn duals(&self) -> &[ComplexMatrix] {
        &self.duals
    }

    pub fn dual(&self, a: usize) -> &ComplexMatrix {
        &self.duals[a]
    }
}

/// The Pauli-4 POVM:
/// `M_0 = |0><0|/3`, `M_1 = |+><+|/3`, `M_2 = |+i><+i|/3`,
/// `M_3 = I - M_0 - M_1 - M_2`.
pub fn pauli4_frame() -> PovmFrame {
    let c = Complex64::new;
    let third = 1.0 / 3.0;
    let sixth = 1.0 / 6.0;
    let m0 = ComplexMatrix::two_by_two(c(third, 0.), c(0., 0.), c(0., 0.), c(0., 0.));
    let m1 = ComplexMatrix::two_by_two(c(sixth, 0.), c(sixth, 0.), c(sixth, 0.), c(sixth, 0.));
    let m2 = ComplexMatrix::two_by_two(c(sixth, 0.), c(0., -sixth), c(0., sixth), c(sixth, 0.));
    let mut m3 = ComplexMatrix::identity(2);
    for m in [&m0, &m1, &m2] {
        m3.add_scaled_assign(m, c(-1.0, 0.0));
    }
    PovmFrame::new("pauli4", vec![m0, m1, m2, m3]).expect("pauli4 construction is exact")
}

/// Precomputed per-term trace tables for one `(state, frame)` pair.
///
/// `prob` and the sampler run entirely off these tables.
pub struct ProbKernel {
    n_qubits: usize,
    coeffs: Vec<Complex64>,
    /// `sym_traces[((t * n_qubits) + i) * 4 + s] = Tr(factor_{t,i} M_s)`
    sym_traces: Vec<Complex64>,
    /// `suffix[t * (n_qubits + 1) + i] = prod_{j >= i} Tr(factor_{t,j})`
    suffix: Vec<Complex64>,
}

impl ProbKernel {
    pub fn new(state: &ProductOperatorEnsemble, frame: &PovmFrame) -> Self {
        let n = state.n_qubits();
        let terms = state.terms();
        let mut coeffs = Vec::with_capacity(terms.len());
        let mut sym_traces = Vec::with_capacity(terms.len() * n * 4);
        let mut suffix = vec![Complex64::new(1.0, 0.0); terms.len() * (n + 1)];
        for (t, term) in terms.iter().enumerate() {
            coeffs.push(term.coeff);
            for f in &term.factors {
                for m in frame.elements() {
                    let tr = f[(0, 0)] * m[(0, 0)]
                        + f[(0, 1)] * m[(1, 0)]
                        + f[(1, 0)] * m[(0, 1)]
                        + f[(1, 1)] * m[(1, 1)];
                    sym_traces.push(tr);
                }
            }
            for i in (0..n).rev() {
                let ft = term.factors[i].trace();
                suffix[t * (n + 1) + i] = ft * suffix[t * (n + 1) + i + 1];
            }
        }
        Self {
            n_qubits: n,
            coeffs,
            sym_traces,
            suffix,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    fn sym_trace(&self, t: usize, qubit: usize, symbol: usize) -> Complex64 {
        self.sym_traces[(t * self.n_qubits + qubit) * 4 + symbol]
    }

    /// Exact outcome probability `p(a)`, clamped to `[0, 1]`.
    pub fn prob(&self, a: &[u8]) -> Result<f64> {
        if a.len() != self.n_qubits {
            return Err(AqtError::Shape(format!(
                "outcome has {} symbols, state has {} qubits",
                a.len(),
                self.n_qubits
            )));
        }
        if let Some(&bad) = a.iter().find(|&&s| s >= 4) {
            return Err(AqtError::Domain(format!("outcome symbol {bad} >= 4")));
        }
        let mut total = Complex64::new(0.0, 0.0);
        for t in 0..self.coeffs.len() {
            let mut prod = self.coeffs[t];
            for (i, &s) in a.iter().enumerate() {
                prod *= self.sym_trace(t, i, s as usize);
            }
            total += prod;
        }
        debug_assert!(total.im.abs() <= 1e-12);
        Ok(total.re.clamp(0.0, 1.0))
    }

    /// Draws one outcome by walking the exact sequential conditionals
    /// `p(a_k | a_1..a_{k-1})`.
    fn sample_one(&self, rng: &mut impl Rng, out: &mut Vec<u8>) {
        let n = self.n_qubits;
        let mut running: Vec<Complex64> = self.coeffs.clone();
        out.clear();
        for i in 0..n {
            let mut weights = [0.0f64; 4];
            for (t, r) in running.iter().enumerate() {
                let tail = self.suffix[t * (n + 1) + i + 1];
                for (s, w) in weights.iter_mut().enumerate() {
                    *w += (r * self.sym_trace(t, i, s) * tail).re;
                }
            }
            for w in weights.iter_mut() {
                *w = w.max(0.0);
            }
            let total: f64 = weights.iter().sum();
            let u = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = 3usize;
            for (s, w) in weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    chosen = s;
                    break;
                }
            }
            out.push(chosen as u8);
            for (t, r) in running.iter_mut().enumerate() {
                *r *= self.sym_trace(t, i, chosen);
            }
        }
    }
}

/// Exact outcome probability for a single string; builds the trace tables on
/// every call, so loops over many outcomes should use [`ProbKernel`].
pub fn outcome_prob(
    state: &ProductOperatorEnsemble,
    frame: &PovmFrame,
    a: &[u8],
) -> Result<f64> {
    ProbKernel::new(state, frame).prob(a)
}

/// Draws `n_samples` i.i.d. outcomes from the exact distribution.
///
/// Sample `i` uses its own ChaCha12 stream derived from `(seed, i)`, so the
/// result is independent of how the index range is partitioned across
/// threads.
pub fn sample(
    state: &ProductOperatorEnsemble,
    frame: &PovmFrame,
    n_samples: usize,
    seed: u64,
) -> Result<OutcomeDataset> {
    sample_with_source(
        state,
        frame,
        n_samples,
        seed,
        format!("simulated;rng={RNG_ALGORITHM}"),
    )
}

/// [`sample`] with caller-supplied provenance text.
pub fn sample_with_source(
    state: &ProductOperatorEnsemble,
    frame: &PovmFrame,
    n_samples: usize,
    seed: u64,
    source: String,
) -> Result<OutcomeDataset> {
    if n_samples == 0 {
        return Err(AqtError::Validation("n_samples must be >= 1".into()));
    }
    let kernel = ProbKernel::new(state, frame);
    let mut outcomes = Vec::with_capacity(n_samples);
    let mut buf = Vec::with_capacity(kernel.n_qubits());
    for i in 0..n_samples {
        let mut rng = stream_rng(seed, i as u64);
        kernel.sample_one(&mut rng, &mut buf);
        outcomes.push(buf.clone());
    }
    Ok(OutcomeDataset {
        n_qubits: kernel.n_qubits(),
        povm_name: frame.name().to_string(),
        seed,
        source,
        outcomes,
    })
}

/// Tensor-product dual element `N_{a_0} ⊗ N_{a_1} ⊗ ...` for a full outcome
/// string, qubit 0 as the most significant factor.
pub fn multi_qubit_dual(frame: &PovmFrame, a: &[u8]) -> Result<ComplexMatrix> {
    if a.is_empty() {
        return Err(AqtError::Domain("empty outcome string".into()));
    }
    if a.len() > crate::states::DENSE_QUBIT_CAP {
        return Err(AqtError::Capacity(format!(
            "multi_qubit_dual: {} qubits exceeds the {}-qubit dense cap",
            a.len(),
            crate::states::DENSE_QUBIT_CAP
        )));
    }
    if let Some(&bad) = a.iter().find(|&&s| s >= 4) {
        return Err(AqtError::Domain(format!("outcome symbol {bad} >= 4")));
    }
    let mut out = frame.dual(a[0] as usize).clone();
    for &s in &a[1..] {
        out = kron(&out, frame.dual(s as usize))?;
    }
    Ok(out)
}

/// A collection of measurement outcome strings plus provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDataset {
    pub n_qubits: usize,
    pub povm_name: String,
    pub seed: u64,
    pub source: String,
    pub outcomes: Vec<Vec<u8>>,
}

impl OutcomeDataset {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Occurrence counts per distinct outcome, lexicographically ordered.
    pub fn counts(&self) -> BTreeMap<Vec<u8>, usize> {
        let mut map = BTreeMap::new();
        for a in &self.outcomes {
            *map.entry(a.clone()).or_insert(0) += 1;
        }
        map
    }

    /// Writes the normative dataset format:
    ///
    /// ```text
    /// # aqt-dataset v1 n_qubits=<N> povm=<name> seed=<s> source=<text>
    /// <one outcome per line, N characters from {0,1,2,3}>
    /// ```
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(
            w,
            "# aqt-dataset v1 n_qubits={} povm={} seed={} source={}",
            self.n_qubits, self.povm_name, self.seed, self.source
        )?;
        let mut line = String::with_capacity(self.n_qubits + 1);
        for a in &self.outcomes {
            line.clear();
            for &s in a {
                line.push(char::from(b'0' + s));
            }
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses the normative dataset format, reporting the offending line
    /// number on malformed input.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| AqtError::Format("empty dataset file".into()))??;
        let (n_qubits, povm_name, seed, source) = parse_header(&header)?;
        let mut outcomes = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let line = line?;
            if line.is_empty() && outcomes.len() == idx {
                // ignore a trailing blank line only
                continue;
            }
            if line.len() != n_qubits {
                return Err(AqtError::Format(format!(
                    "line {line_no}: expected {n_qubits} symbols, got {}",
                    line.len()
                )));
            }
            let mut a = Vec::with_capacity(n_qubits);
            for ch in line.bytes() {
                if !(b'0'..=b'3').contains(&ch) {
                    return Err(AqtError::Format(format!(
                        "line {line_no}: invalid symbol {:?}",
                        char::from(ch)
                    )));
                }
                a.push(ch - b'0');
            }
            outcomes.push(a);
        }
        if outcomes.is_empty() {
            return Err(AqtError::Format("dataset has no outcomes".into()));
        }
        Ok(Self {
            n_qubits,
            povm_name,
            seed,
            source,
            outcomes,
        })
    }
}

fn parse_header(header: &str) -> Result<(usize, String, u64, String)> {
    let rest = header
        .strip_prefix("# aqt-dataset v1 ")
        .ok_or_else(|| AqtError::Format("line 1: not an aqt-dataset v1 header".into()))?;
    let n_qubits_part = rest
        .strip_prefix("n_qubits=")
        .ok_or_else(|| AqtError::Format("line 1: missing n_qubits field".into()))?;
    let (n_str, rest) = n_qubits_part
        .split_once(' ')
        .ok_or_else(|| AqtError::Format("line 1: truncated header".into()))?;
    let n_qubits: usize = n_str
        .parse()
        .map_err(|_| AqtError::Format(format!("line 1: bad n_qubits value {n_str:?}")))?;
    if n_qubits == 0 {
        return Err(AqtError::Format("line 1: n_qubits must be >= 1".into()));
    }
    let povm_part = rest
        .strip_prefix("povm=")
        .ok_or_else(|| AqtError::Format("line 1: missing povm field".into()))?;
    let (povm_name, rest) = povm_part
        .split_once(' ')
        .ok_or_else(|| AqtError::Format("line 1: truncated header".into()))?;
    let seed_part = rest
        .strip_prefix("seed=")
        .ok_or_else(|| AqtError::Format("line 1: missing seed field".into()))?;
    let (seed_str, source_part) = seed_part
        .split_once(' ')
        .ok_or_else(|| AqtError::Format("line 1: truncated header".into()))?;
    let seed: u64 = seed_str
        .parse()
        .map_err(|_| AqtError::Format(format!("line 1: bad seed value {seed_str:?}")))?;
    let source = source_part
        .strip_prefix("source=")
        .ok_or_else(|| AqtError::Format("line 1: missing source field".into()))?;
    Ok((n_qubits, povm_name.to_string(), seed, source.to_string()))
}

/// Visits all `4^n` outcome strings in lexicographic order
/// (first symbol most significant).
pub fn for_each_outcome(n_qubits: usize, mut f: impl FnMut(&[u8])) {
    let total = 4usize.pow(n_qubits as u32);
    let mut a = vec![0u8; n_qubits];
    for idx in 0..total {
        for (i, slot) in a.iter_mut().enumerate() {
            *slot = ((idx >> (2 * (n_qubits - 1 - i))) & 3) as u8;
        }
        f(&a);
    }
}
