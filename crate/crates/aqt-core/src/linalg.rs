//! Dense complex matrices and the spectral routines the rest of the crate
//! builds on.
//!
//! Everything is 64-bit complex, row-major and immutable-by-convention:
//! operations return fresh matrices. Dense sizes are capped (default
//! 2^26 entries, i.e. 2^13 x 2^13) because density-matrix work is only done
//! at small qubit counts; larger systems stay in the rank-structured
//! representation of [`crate::states`].

use crate::error::{AqtError, Result};
use num_complex::Complex64;

/// Default cap on dense results, in entries (2^13 x 2^13).
pub const DEFAULT_DENSE_CAP: usize = 1 << 26;

/// Tolerance for accepting a matrix as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(8) {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self { rows, cols, entries }
    }

    /// Builds a matrix from a row-major entry list, validating length and
    /// finiteness.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(AqtError::Shape(format!(
                "expected {}x{}={} entries, got {}",
                rows,
                cols,
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(AqtError::Domain("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, entries })
    }

    /// 2x2 matrix from rows `[[a, b], [c, d]]`.
    pub fn two_by_two(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self {
            rows: 2,
            cols: 2,
            entries: vec![a, b, c, d],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, w: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z * w).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(AqtError::Shape(format!(
                "add: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// In-place `self += w * other`. Shapes must already match.
    pub(crate) fn add_scaled_assign(&mut self, other: &Self, w: Complex64) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += w * b;
        }
    }

    /// Largest entry magnitude (max norm).
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-norm distance from the adjoint; 0 for exactly Hermitian matrices.
    pub fn hermiticity_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols.min(self.rows) {
                err = err.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        err
    }

    /// `(self + self†) / 2`.
    pub fn hermitized(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.cols + j]
    }
}

/// Standard matrix product.
pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols != b.rows {
        return Err(AqtError::Shape(format!(
            "matmul: {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = ComplexMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a[(i, k)];
            if aik == Complex64::new(0.0, 0.0) {
                continue;
            }
            let brow = &b.entries[k * b.cols..(k + 1) * b.cols];
            let orow = &mut out.entries[i * b.cols..(i + 1) * b.cols];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
    Ok(out)
}

/// Kronecker product `a ⊗ b` under the default dense cap.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    kron_with_cap(a, b, DEFAULT_DENSE_CAP)
}

/// Kronecker product with an explicit entry-count cap.
pub fn kron_with_cap(a: &ComplexMatrix, b: &ComplexMatrix, cap: usize) -> Result<ComplexMatrix> {
    let rows = a.rows.checked_mul(b.rows);
    let cols = a.cols.checked_mul(b.cols);
    let entries = rows.and_then(|r| cols.and_then(|c| r.checked_mul(c)));
    match entries {
        Some(n) if n <= cap => {}
        _ => {
            return Err(AqtError::Capacity(format!(
                "kron result {}x{} by {}x{} exceeds cap of {} entries",
                a.rows, a.cols, b.rows, b.cols, cap
            )))
        }
    }
    let (rows, cols) = (rows.unwrap(), cols.unwrap());
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for p in 0..b.rows {
                for q in 0..b.cols {
                    out[(i * b.rows + p, j * b.cols + q)] = aij * b[(p, q)];
                }
            }
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns of a unitary matrix. The input must be Hermitian to within
/// [`HERMITICITY_TOL`]; symmetrize first if it is not (see
/// [`ComplexMatrix::hermitized`]).
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !m.is_square() {
        return Err(AqtError::Shape(format!(
            "hermitian_eig: {}x{} is not square",
            m.rows, m.cols
        )));
    }
    let herm_err = m.hermiticity_error();
    if herm_err > HERMITICITY_TOL {
        return Err(AqtError::Domain(format!(
            "hermitian_eig: matrix deviates from Hermitian by {herm_err:.3e} (tol {HERMITICITY_TOL:.0e})"
        )));
    }
    let n = m.rows;
    // Work on the exactly-Hermitian average so roundoff in the input cannot
    // leak into complex eigenvalue residues.
    let mut fm = faer::Mat::<faer::c64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            fm[(i, j)] = faer::c64::new(z.re, z.im);
        }
    }
    let evd = fm
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| AqtError::Numeric(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].re.partial_cmp(&s[j].re).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&k| s[k].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| {
        let z = u[(i, order[j])];
        Complex64::new(z.re, z.im)
    });
    Ok((eigenvalues, eigenvectors))
}

/// Positive-semidefinite square root of a Hermitian PSD matrix.
///
/// Eigenvalues in `[-1e-9, 0)` are treated as roundoff and clipped to zero;
/// anything more negative is rejected as an unprojected non-physical matrix.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    const NEG_EVAL_TOL: f64 = -1e-9;
    let (evals, vecs) = hermitian_eig(m)?;
    if let Some(min) = evals.first() {
        if *min < NEG_EVAL_TOL {
            return Err(AqtError::Domain(format!(
                "psd_sqrt: eigenvalue {min:.3e} below {NEG_EVAL_TOL:.0e}; project to PSD first"
            )));
        }
    }
    let n = m.rows;
    // S = V diag(sqrt(lambda)) V†
    let mut scaled = vecs.clone();
    for j in 0..n {
        let r = evals[j].max(0.0).sqrt();
        for i in 0..n {
            scaled[(i, j)] *= r;
        }
    }
    matmul(&scaled, &vecs.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        })
    }

    fn random_hermitian(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
        random_matrix(rng, n, n).hermitized()
    }

    fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    #[test]
    fn matmul_identity_leaves_input_unchanged() {
        let mut rng = crate::rng::stream_rng(1, 0);
        let m = random_matrix(&mut rng, 2, 2);
        let id = ComplexMatrix::identity(2);
        assert_eq!(matmul(&id, &m).unwrap(), m);
        assert_eq!(matmul(&m, &id).unwrap(), m);
    }

    #[test]
    fn matmul_permutation_action() {
        let x = ComplexMatrix::two_by_two(c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.));
        let v = ComplexMatrix::from_entries(2, 1, vec![c(1., 0.), c(0., 0.)]).unwrap();
        let out = matmul(&x, &v).unwrap();
        assert_eq!(out[(0, 0)], c(0., 0.));
        assert_eq!(out[(1, 0)], c(1., 0.));
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let mut rng = crate::rng::stream_rng(2, 0);
        let a = random_matrix(&mut rng, 3, 4);
        let b = random_matrix(&mut rng, 4, 2);
        let fast = matmul(&a, &b).unwrap();
        // independent naive oracle
        let mut oracle = ComplexMatrix::zeros(3, 2);
        for i in 0..3 {
            for j in 0..2 {
                let mut acc = c(0., 0.);
                for k in 0..4 {
                    acc += a[(i, k)] * b[(k, j)];
                }
                oracle[(i, j)] = acc;
            }
        }
        assert!(max_diff(&fast, &oracle) <= 1e-13);
    }

    #[test]
    fn matmul_shape_mismatch_rejected() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(2, 3);
        assert!(matches!(matmul(&a, &b), Err(AqtError::Shape(_))));
    }

    #[test]
    fn matmul_associativity_on_random_triples() {
        let mut rng = crate::rng::stream_rng(3, 0);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 3, 5);
            let b = random_matrix(&mut rng, 5, 4);
            let cm = random_matrix(&mut rng, 4, 3);
            let left = matmul(&matmul(&a, &b).unwrap(), &cm).unwrap();
            let right = matmul(&a, &matmul(&b, &cm).unwrap()).unwrap();
            let scale = left.max_abs().max(1.0);
            assert!(max_diff(&left, &right) / scale <= 1e-10);
        }
    }

    #[test]
    fn kron_identities() {
        let id2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&id2, &id2).unwrap(), ComplexMatrix::identity(4));

        let p0 = ComplexMatrix::two_by_two(c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.));
        let p1 = ComplexMatrix::two_by_two(c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.));
        let k = kron(&p0, &p1).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if (i, j) == (1, 1) { 1.0 } else { 0.0 };
                assert_eq!(k[(i, j)], c(expect, 0.));
            }
        }
    }

    #[test]
    fn kron_mixed_product_identity() {
        let mut rng = crate::rng::stream_rng(4, 0);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 2, 2);
            let b = random_matrix(&mut rng, 2, 2);
            let cc = random_matrix(&mut rng, 2, 2);
            let d = random_matrix(&mut rng, 2, 2);
            let lhs = matmul(&kron(&a, &b).unwrap(), &kron(&cc, &d).unwrap()).unwrap();
            let rhs = kron(&matmul(&a, &cc).unwrap(), &matmul(&b, &d).unwrap()).unwrap();
            assert!(max_diff(&lhs, &rhs) <= 1e-12);
        }
    }

    #[test]
    fn kron_capacity_error() {
        let big = ComplexMatrix::zeros(1 << 7, 1 << 7);
        let err = kron_with_cap(&big, &big, 1 << 26).map(|_| ());
        // 2^14 x 2^14 = 2^28 entries > 2^26
        assert!(matches!(err, Err(AqtError::Capacity(_))));
    }

    #[test]
    fn eig_diagonal_matrix_sorted_ascending() {
        let m = ComplexMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                c([3.0, 1.0, 2.0][i], 0.0)
            } else {
                c(0., 0.)
            }
        });
        let (evals, _) = hermitian_eig(&m).unwrap();
        assert!((evals[0] - 1.0).abs() < 1e-14);
        assert!((evals[1] - 2.0).abs() < 1e-14);
        assert!((evals[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eig_pauli_x_spectrum() {
        let x = ComplexMatrix::two_by_two(c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.));
        let (evals, _) = hermitian_eig(&x).unwrap();
        assert!((evals[0] + 1.0).abs() < 1e-14);
        assert!((evals[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_round_trip_and_unitarity() {
        let mut rng = crate::rng::stream_rng(5, 0);
        let m = random_hermitian(&mut rng, 8);
        let (evals, v) = hermitian_eig(&m).unwrap();
        // V diag(lambda) V† reproduces the input
        let mut scaled = v.clone();
        for j in 0..8 {
            for i in 0..8 {
                scaled[(i, j)] *= evals[j];
            }
        }
        let rec = matmul(&scaled, &v.adjoint()).unwrap();
        assert!(max_diff(&rec, &m) <= 1e-10 * m.max_abs().max(1e-30));
        // columns orthonormal
        let gram = matmul(&v.adjoint(), &v).unwrap();
        assert!(max_diff(&gram, &ComplexMatrix::identity(8)) <= 1e-10);
        // eigenvalue sum equals trace
        let tr = m.trace();
        let sum: f64 = evals.iter().sum();
        assert!((sum - tr.re).abs() <= 1e-10 * tr.re.abs().max(1.0));
    }

    // The dense cap is sized for 2^10-dimensional density matrices; the
    // round-trip contract has to hold there too, not just at toy sizes.
    #[test]
    fn eig_round_trip_at_1024() {
        let mut rng = crate::rng::stream_rng(6, 0);
        let n = 1024;
        let m = random_hermitian(&mut rng, n);
        let (evals, v) = hermitian_eig(&m).unwrap();
        let mut scaled = v.clone();
        for j in 0..n {
            for i in 0..n {
                scaled[(i, j)] *= evals[j];
            }
        }
        let rec = matmul(&scaled, &v.adjoint()).unwrap();
        assert!(max_diff(&rec, &m) <= 1e-10 * m.max_abs());
    }

    #[test]
    fn eig_rejects_non_square_and_non_hermitian() {
        assert!(matches!(
            hermitian_eig(&ComplexMatrix::zeros(2, 3)),
            Err(AqtError::Shape(_))
        ));
        let m = ComplexMatrix::two_by_two(c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.));
        assert!(matches!(hermitian_eig(&m), Err(AqtError::Domain(_))));
    }

    #[test]
    fn psd_sqrt_closed_forms() {
        let id = ComplexMatrix::identity(3);
        assert!(max_diff(&psd_sqrt(&id).unwrap(), &id) <= 1e-12);

        let m = ComplexMatrix::two_by_two(c(4., 0.), c(0., 0.), c(0., 0.), c(9., 0.));
        let s = psd_sqrt(&m).unwrap();
        assert!((s[(0, 0)] - c(2., 0.)).norm() <= 1e-12);
        assert!((s[(1, 1)] - c(3., 0.)).norm() <= 1e-12);
    }

    #[test]
    fn psd_sqrt_round_trips_on_random_psd() {
        let mut rng = crate::rng::stream_rng(7, 0);
        let a = random_matrix(&mut rng, 6, 6);
        let m = matmul(&a.adjoint(), &a).unwrap().hermitized();
        let s = psd_sqrt(&m).unwrap();
        assert!(s.hermiticity_error() <= 1e-10);
        let sq = matmul(&s, &s).unwrap();
        assert!(max_diff(&sq, &m) <= 1e-8);
    }

    #[test]
    fn psd_sqrt_fixes_projectors() {
        // |+><+| is idempotent, so it is its own square root.
        let h = 0.5;
        let p = ComplexMatrix::two_by_two(c(h, 0.), c(h, 0.), c(h, 0.), c(h, 0.));
        let s = psd_sqrt(&p).unwrap();
        assert!(max_diff(&s, &p) <= 1e-12);
    }

    #[test]
    fn psd_sqrt_rejects_indefinite() {
        let m = ComplexMatrix::two_by_two(c(1., 0.), c(0., 0.), c(0., 0.), c(-0.5, 0.));
        assert!(matches!(psd_sqrt(&m), Err(AqtError::Domain(_))));
    }

    #[test]
    fn from_entries_validates() {
        assert!(matches!(
            ComplexMatrix::from_entries(2, 2, vec![c(0., 0.); 3]),
            Err(AqtError::Shape(_))
        ));
        assert!(matches!(
            ComplexMatrix::from_entries(1, 1, vec![c(f64::NAN, 0.)]),
            Err(AqtError::Domain(_))
        ));
    }
}
