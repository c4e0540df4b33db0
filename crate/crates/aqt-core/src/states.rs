//! Target states in a rank-structured representation.
//!
//! A [`ProductOperatorEnsemble`] stores an operator as a weighted sum of
//! tensor-product terms, one 2x2 factor per qubit. GHZ states, the
//! faulty-qubit mixture and product states all fit in a handful of terms,
//! which lets [`crate::povm`] evaluate outcome probabilities in
//! `O(terms * n_qubits)` at any qubit count instead of touching the
//! 2^n-dimensional Hilbert space.
//!
//! Basis convention (normative for every file format in this crate):
//! qubit 0 is the most significant bit of the computational-basis index,
//! so |100> maps to index 4.

use crate::error::{AqtError, Result};
use crate::linalg::{kron, ComplexMatrix};
use num_complex::Complex64;

/// Dense conversion is capped at 2^12-dimensional Hilbert spaces.
pub const DENSE_QUBIT_CAP: usize = 12;

/// One tensor-product term: `coeff * factor_0 ⊗ factor_1 ⊗ ... `.
#[derive(Clone, Debug)]
pub struct ProductTerm {
    pub coeff: Complex64,
    /// One 2x2 factor per qubit, qubit 0 first.
    pub factors: Vec<ComplexMatrix>,
}

/// A Hermitian, unit-trace operator stored as a sum of product terms.
#[derive(Clone, Debug)]
pub struct ProductOperatorEnsemble {
    n_qubits: usize,
    terms: Vec<ProductTerm>,
}

/// `|s><t|` for single-qubit basis labels `s`, `t`.
fn ketbra(s: usize, t: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2, 2);
    m[(s, t)] = Complex64::new(1.0, 0.0);
    m
}

impl ProductOperatorEnsemble {
    /// Assembles an ensemble, checking the structural invariants: every term
    /// carries one factor per qubit, the term multiset is closed under
    /// adjoint, and the total trace is 1.
    pub fn new(n_qubits: usize, terms: Vec<ProductTerm>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(AqtError::Domain("ensemble needs at least one qubit".into()));
        }
        for (k, t) in terms.iter().enumerate() {
            if t.factors.len() != n_qubits {
                return Err(AqtError::Shape(format!(
                    "term {k} has {} factors, expected {n_qubits}",
                    t.factors.len()
                )));
            }
            if t.factors.iter().any(|f| f.rows() != 2 || f.cols() != 2) {
                return Err(AqtError::Shape(format!("term {k} has a non-2x2 factor")));
            }
        }
        let ensemble = Self { n_qubits, terms };
        let tr = ensemble.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(AqtError::Domain(format!(
                "ensemble trace is {tr}, expected 1"
            )));
        }
        if !ensemble.is_adjoint_closed(1e-12) {
            return Err(AqtError::Domain(
                "ensemble term multiset is not closed under adjoint".into(),
            ));
        }
        Ok(ensemble)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[ProductTerm] {
        &self.terms
    }

    /// `sum_terms coeff * prod_i Tr(factor_i)`.
    pub fn trace(&self) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.factors
                        .iter()
                        .map(|f| f.trace())
                        .product::<Complex64>()
            })
            .sum()
    }

    /// Checks that the adjoint of every term appears in the ensemble, which
    /// makes the represented operator Hermitian term-by-term.
    fn is_adjoint_closed(&self, tol: f64) -> bool {
        let term_dist = |a: &ProductTerm, b: &ProductTerm| -> f64 {
            let mut d = (a.coeff - b.coeff).norm();
            for (fa, fb) in a.factors.iter().zip(&b.factors) {
                d = d.max(fa.sub(fb).map(|m| m.max_abs()).unwrap_or(f64::INFINITY));
            }
            d
        };
        self.terms.iter().all(|t| {
            let adj = ProductTerm {
                coeff: t.coeff.conj(),
                factors: t.factors.iter().map(|f| f.adjoint()).collect(),
            };
            self.terms.iter().any(|u| term_dist(&adj, u) <= tol)
        })
    }

    /// Dense 2^n x 2^n matrix, qubit 0 as the most significant bit.
    pub fn to_dense(&self) -> Result<ComplexMatrix> {
        if self.n_qubits > DENSE_QUBIT_CAP {
            return Err(AqtError::Capacity(format!(
                "to_dense: {} qubits exceeds the {DENSE_QUBIT_CAP}-qubit dense cap",
                self.n_qubits
            )));
        }
        let dim = 1usize << self.n_qubits;
        let mut out = ComplexMatrix::zeros(dim, dim);
        for t in &self.terms {
            let mut prod = t.factors[0].clone();
            for f in &t.factors[1..] {
                prod = kron(&prod, f)?;
            }
            out.add_scaled_assign(&prod, t.coeff);
        }
        Ok(out)
    }
}

/// The n-qubit GHZ state `(|0...0> + |1...1>)/sqrt(2)` as a density operator:
/// four product terms `1/2 |s><t|^{⊗n}` for `s, t` in `{0, 1}`.
pub fn ghz(n_qubits: usize) -> Result<ProductOperatorEnsemble> {
    if n_qubits == 0 {
        return Err(AqtError::Domain("ghz: n_qubits must be >= 1".into()));
    }
    let half = Complex64::new(0.5, 0.0);
    let terms = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .iter()
        .map(|&(s, t)| ProductTerm {
            coeff: half,
            factors: vec![ketbra(s, t); n_qubits],
        })
        .collect();
    ProductOperatorEnsemble::new(n_qubits, terms)
}

/// The 3-qubit faulty-qubit mixture: with probability `1 - p` the GHZ state,
/// with probability `p` the state with qubit 0 flipped,
/// `(|100> + |011>)/sqrt(2)`.
pub fn faulty_qubit_state(p: f64) -> Result<ProductOperatorEnsemble> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(AqtError::Domain(format!(
            "faulty_qubit_state: p = {p} outside [0, 1]"
        )));
    }
    let mut terms = Vec::with_capacity(8);
    for &(s, t) in &[(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
        // GHZ block, weight (1 - p)
        terms.push(ProductTerm {
            coeff: Complex64::new(0.5 * (1.0 - p), 0.0),
            factors: vec![ketbra(s, t); 3],
        });
        // flipped-qubit-0 block, weight p
        terms.push(ProductTerm {
            coeff: Complex64::new(0.5 * p, 0.0),
            factors: vec![ketbra(1 - s, 1 - t), ketbra(s, t), ketbra(s, t)],
        });
    }
    ProductOperatorEnsemble::new(3, terms)
}

/// A pure product state `|b_0 b_1 ... b_{n-1}>` as a one-term ensemble.
pub fn basis_product_state(bits: &[usize]) -> Result<ProductOperatorEnsemble> {
    if bits.is_empty() {
        return Err(AqtError::Domain("product state needs at least one qubit".into()));
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(AqtError::Domain("product state bits must be 0 or 1".into()));
    }
    let terms = vec![ProductTerm {
        coeff: Complex64::new(1.0, 0.0),
        factors: bits.iter().map(|&b| ketbra(b, b)).collect(),
    }];
    ProductOperatorEnsemble::new(bits.len(), terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eig, matmul};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ghz_single_qubit_is_plus_projector() {
        let dense = ghz(1).unwrap().to_dense().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((dense[(i, j)] - c(0.5, 0.0)).norm() <= 1e-15);
            }
        }
    }

    #[test]
    fn ghz_three_qubits_has_half_at_corners() {
        let dense = ghz(3).unwrap().to_dense().unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let corner = (i == 0 || i == 7) && (j == 0 || j == 7);
                let expect = if corner { 0.5 } else { 0.0 };
                assert!(
                    (dense[(i, j)] - c(expect, 0.0)).norm() <= 1e-15,
                    "entry ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn ghz_is_pure_unit_trace() {
        let dense = ghz(3).unwrap().to_dense().unwrap();
        assert!((dense.trace() - c(1.0, 0.0)).norm() <= 1e-12);
        let sq = matmul(&dense, &dense).unwrap();
        assert!((sq.trace() - c(1.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn ghz_dense_has_exactly_four_nonzeros_at_any_size() {
        for n in 1..=8 {
            let dense = ghz(n).unwrap().to_dense().unwrap();
            let nonzeros = dense
                .entries()
                .iter()
                .filter(|z| z.norm() > 1e-15)
                .count();
            assert_eq!(nonzeros, 4, "n={n}");
            assert!(dense
                .entries()
                .iter()
                .all(|z| z.norm() <= 1e-15 || (z - c(0.5, 0.0)).norm() <= 1e-15));
        }
    }

    #[test]
    fn ghz_rejects_zero_qubits() {
        assert!(matches!(ghz(0), Err(AqtError::Domain(_))));
    }

    #[test]
    fn faulty_p0_equals_ghz() {
        let a = faulty_qubit_state(0.0).unwrap().to_dense().unwrap();
        let b = ghz(3).unwrap().to_dense().unwrap();
        assert!(a.sub(&b).unwrap().max_abs() <= 1e-15);
    }

    #[test]
    fn faulty_p1_is_flipped_ghz() {
        let dense = faulty_qubit_state(1.0).unwrap().to_dense().unwrap();
        // |psi> = (|100> + |011>)/sqrt(2): indices 4 and 3
        for i in 0..8 {
            for j in 0..8 {
                let corner = (i == 3 || i == 4) && (j == 3 || j == 4);
                let expect = if corner { 0.5 } else { 0.0 };
                assert!(
                    (dense[(i, j)] - c(expect, 0.0)).norm() <= 1e-15,
                    "entry ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn faulty_overlap_with_ghz_is_one_minus_p() {
        // <GHZ| rho_err |GHZ> = 1 - p, forced by <GHZ|psi> = 0.
        let p = 0.3;
        let rho = faulty_qubit_state(p).unwrap().to_dense().unwrap();
        let ghz_dense = ghz(3).unwrap().to_dense().unwrap();
        // overlap = Tr(rho * |GHZ><GHZ|)
        let overlap = matmul(&rho, &ghz_dense).unwrap().trace();
        assert!((overlap - c(1.0 - p, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn faulty_rank_two_spectrum() {
        let p = 0.25;
        let dense = faulty_qubit_state(p).unwrap().to_dense().unwrap();
        let (evals, _) = hermitian_eig(&dense).unwrap();
        let mut sorted = evals.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((sorted[0] - (1.0 - p)).abs() <= 1e-12);
        assert!((sorted[1] - p).abs() <= 1e-12);
        for ev in &sorted[2..] {
            assert!(ev.abs() <= 1e-12);
        }
    }

    #[test]
    fn faulty_rejects_out_of_range_p() {
        assert!(matches!(faulty_qubit_state(-0.1), Err(AqtError::Domain(_))));
        assert!(matches!(faulty_qubit_state(1.1), Err(AqtError::Domain(_))));
    }

    #[test]
    fn faulty_half_is_even_mixture() {
        let dense = faulty_qubit_state(0.5).unwrap().to_dense().unwrap();
        // direct summation oracle: 0.5 * ghz + 0.5 * psi-projector
        let ghz_dense = ghz(3).unwrap().to_dense().unwrap();
        let psi_dense = faulty_qubit_state(1.0).unwrap().to_dense().unwrap();
        let expect = ghz_dense.scale(c(0.5, 0.0)).add(&psi_dense.scale(c(0.5, 0.0))).unwrap();
        assert!(dense.sub(&expect).unwrap().max_abs() <= 1e-15);
    }

    #[test]
    fn to_dense_is_hermitian_for_all_constructors() {
        for e in [ghz(4).unwrap(), faulty_qubit_state(0.2).unwrap()] {
            let dense = e.to_dense().unwrap();
            assert!(dense.hermiticity_error() <= 1e-12);
            assert!((dense.trace() - c(1.0, 0.0)).norm() <= 1e-12);
        }
    }

    #[test]
    fn to_dense_respects_qubit_cap() {
        let e = ghz(13).unwrap();
        assert!(matches!(e.to_dense(), Err(AqtError::Capacity(_))));
    }

    #[test]
    fn ghz_two_qubit_corners() {
        let dense = ghz(2).unwrap().to_dense().unwrap();
        for &(i, j) in &[(0usize, 0usize), (0, 3), (3, 0), (3, 3)] {
            assert!((dense[(i, j)] - c(0.5, 0.0)).norm() <= 1e-15);
        }
    }

    #[test]
    fn basis_product_state_dense() {
        let e = basis_product_state(&[1, 0]).unwrap();
        let dense = e.to_dense().unwrap();
        // |10> -> index 2
        for i in 0..4 {
            for j in 0..4 {
                let expect = if (i, j) == (2, 2) { 1.0 } else { 0.0 };
                assert!((dense[(i, j)] - c(expect, 0.0)).norm() <= 1e-15);
            }
        }
    }
}
