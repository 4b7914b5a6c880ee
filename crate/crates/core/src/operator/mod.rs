//! Dense complex operators on a finite one-particle Hilbert space and
//! validated density matrices.
//!
//! Everything here is a plain value: construct once, share freely.

mod fock;

pub use fock::{fock_expectation, FockSectorRep, Statistics};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

/// Square complex matrix. Entries are dimensionless unless the context says otherwise.
pub type ComplexMatrix = DMatrix<Complex64>;

pub const DEFAULT_HERM_TOL: f64 = 1e-10;
pub const DEFAULT_PSD_TOL: f64 = 1e-10;
pub const DEFAULT_TRACE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("statistics flags differ between operator and state")]
    StatisticsMismatch,
    #[error("matrix is empty")]
    Empty,
    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("density matrix rejected: {}", describe_violations(.0))]
    InvalidState(Vec<Violation>),
}

/// One violated density-matrix invariant together with its measured residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    /// Max-norm of `M - M†`.
    NotHermitian(f64),
    /// Smallest eigenvalue of the Hermitized matrix.
    NotPositive(f64),
    /// The trace itself (real part).
    TraceDeviation(f64),
}

fn describe_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| match v {
            Violation::NotHermitian(r) => format!("not Hermitian (residual {r:e})"),
            Violation::NotPositive(e) => format!("not positive (min eigenvalue {e:e})"),
            Violation::TraceDeviation(t) => format!("trace deviation (trace {t})"),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub herm: f64,
    pub psd: f64,
    pub trace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: DEFAULT_HERM_TOL,
            psd: DEFAULT_PSD_TOL,
            trace: DEFAULT_TRACE_TOL,
        }
    }
}

impl Tolerances {
    pub const ZERO: Tolerances = Tolerances {
        herm: 0.0,
        psd: 0.0,
        trace: 0.0,
    };
}

/// Measured residuals of the three density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateResiduals {
    pub herm_residual: f64,
    pub min_eig: f64,
    pub trace: Complex64,
}

impl StateResiduals {
    pub fn measure(m: &ComplexMatrix) -> Self {
        Self {
            herm_residual: hermiticity_residual(m),
            min_eig: min_eigenvalue(m),
            trace: m.trace(),
        }
    }

    pub fn trace_dev(&self) -> f64 {
        (self.trace - Complex64::new(1.0, 0.0)).norm()
    }

    fn violations(&self, tol: &Tolerances) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.herm_residual > tol.herm {
            out.push(Violation::NotHermitian(self.herm_residual));
        }
        if self.min_eig < -tol.psd {
            out.push(Violation::NotPositive(self.min_eig));
        }
        if self.trace_dev() > tol.trace {
            out.push(Violation::TraceDeviation(self.trace.re));
        }
        out
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    tol: Tolerances,
}

impl DensityMatrix {
    /// Validate `entries` against the three state invariants.
    pub fn new(entries: ComplexMatrix, tol: Tolerances) -> Result<Self, OperatorError> {
        check_square_finite(&entries)?;
        let violations = StateResiduals::measure(&entries).violations(&tol);
        if !violations.is_empty() {
            return Err(OperatorError::InvalidState(violations));
        }
        Ok(Self {
            matrix: entries,
            tol,
        })
    }

    /// Wraps a matrix produced by an integrator without validating it.
    /// Monitors report how far it has drifted from the state invariants.
    pub(crate) fn from_evolved(matrix: ComplexMatrix, tol: Tolerances) -> Self {
        Self { matrix, tol }
    }

    pub fn pure(psi: &[Complex64]) -> Result<Self, OperatorError> {
        let v = nalgebra::DVector::from_column_slice(psi);
        let n = v.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(OperatorError::Empty);
        }
        let v = v / Complex64::new(n, 0.0);
        Self::new(&v * v.adjoint(), Tolerances::default())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn residuals(&self) -> StateResiduals {
        StateResiduals::measure(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn population(&self, i: usize) -> f64 {
        self.matrix[(i, i)].re
    }
}

/// `Σ_{f,g} A_{fg} w_{gf}`, i.e. `Tr(A w)`.
pub fn expectation(a: &ComplexMatrix, w: &DensityMatrix) -> Result<Complex64, OperatorError> {
    check_same_dim(a, w.matrix())?;
    Ok(trace_product(a, w.matrix()))
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    a.iter()
        .zip(b.transpose().iter())
        .map(|(x, y)| x * y)
        .sum()
}

pub fn check_square_finite(m: &ComplexMatrix) -> Result<(), OperatorError> {
    if m.nrows() != m.ncols() {
        return Err(OperatorError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.is_empty() {
        return Err(OperatorError::Empty);
    }
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(OperatorError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn check_same_dim(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<(), OperatorError> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(OperatorError::DimensionMismatch {
            expected: b.nrows(),
            got: a.nrows(),
        });
    }
    Ok(())
}

/// `‖M − M†‖_max`.
pub fn hermiticity_residual(m: &ComplexMatrix) -> f64 {
    max_norm(&(m - m.adjoint()))
}

pub fn max_norm(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `(M + M†) / 2`.
pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues of the Hermitized matrix, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(hermitize(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    hermitian_eigenvalues(m)[0]
}

/// Eigenpairs of the Hermitized matrix, ascending by eigenvalue.
pub fn hermitian_eigenpairs(m: &ComplexMatrix) -> Vec<(f64, nalgebra::DVector<Complex64>)> {
    let eig = SymmetricEigen::new(hermitize(m));
    let mut pairs: Vec<_> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &l)| (l, eig.eigenvectors.column(k).into_owned()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Commutator `[A, B]`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Anticommutator `{A, B}`.
pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b + b * a
}

/// Kronecker product with the first factor on the slow (outer) index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real_diag(values: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|&x| c(x, 0.0)),
    ))
}

/// `|i⟩⟨j|` in dimension `d`.
pub fn matrix_unit(d: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(i, j)] = c(1.0, 0.0);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn from_real(rows: &[&[f64]]) -> ComplexMatrix {
        let n = rows.len();
        ComplexMatrix::from_fn(n, n, |i, j| c(rows[i][j], 0.0))
    }

    #[test]
    fn projector_is_valid_with_zero_tolerance() {
        let w = DensityMatrix::new(real_diag(&[1.0, 0.0]), Tolerances::ZERO).unwrap();
        assert_eq!(w.dim(), 2);
        assert_eq!(w.purity(), 1.0);
    }

    #[test]
    fn trace_deviation_is_reported() {
        let err = DensityMatrix::new(real_diag(&[0.5, 0.6]), Tolerances::default()).unwrap_err();
        match err {
            OperatorError::InvalidState(v) => {
                assert_eq!(v.len(), 1);
                let Violation::TraceDeviation(t) = v[0] else {
                    panic!("{v:?}")
                };
                assert!((t - 1.1).abs() < 1e-15);
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn negative_eigenvalue_is_reported() {
        let m = from_real(&[&[0.5, 0.6], &[0.6, 0.5]]);
        let err = DensityMatrix::new(m, Tolerances::default()).unwrap_err();
        let OperatorError::InvalidState(v) = err else {
            panic!()
        };
        assert_eq!(v.len(), 1);
        let Violation::NotPositive(e) = v[0] else {
            panic!("{v:?}")
        };
        assert!((e + 0.1).abs() < 1e-14);
    }

    #[test]
    fn every_violation_is_listed() {
        let mut m = from_real(&[&[0.5, 0.6], &[0.6, 0.7]]);
        m[(0, 1)] = c(0.6, 0.3);
        let OperatorError::InvalidState(v) = DensityMatrix::new(m, Tolerances::default()).unwrap_err()
        else {
            panic!()
        };
        assert!(v.iter().any(|x| matches!(x, Violation::NotHermitian(r) if (r - 0.3).abs() < 1e-15)));
        assert!(v.iter().any(|x| matches!(x, Violation::TraceDeviation(_))));
    }

    #[test]
    fn rejects_nonfinite_and_nonsquare() {
        let mut m = real_diag(&[1.0, 0.0]);
        m[(1, 0)] = c(f64::NAN, 0.0);
        assert_eq!(
            DensityMatrix::new(m, Tolerances::default()),
            Err(OperatorError::NonFinite { row: 1, col: 0 })
        );
        let r = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            DensityMatrix::new(r, Tolerances::default()),
            Err(OperatorError::NotSquare { .. })
        ));
    }

    #[test]
    fn expectation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = sample::density_matrix(&mut rng, 3);
        let one = expectation(&ComplexMatrix::identity(3, 3), &w).unwrap();
        assert!((one - c(1.0, 0.0)).norm() < 1e-14);

        let w = DensityMatrix::new(real_diag(&[0.3, 0.7]), Tolerances::default()).unwrap();
        let e = expectation(&real_diag(&[1.0, 0.0]), &w).unwrap();
        assert!((e - c(0.3, 0.0)).norm() < 1e-16);

        assert!(matches!(
            expectation(&ComplexMatrix::identity(2, 2), &sample::density_matrix(&mut rng, 3)),
            Err(OperatorError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn expectation_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = sample::hermitian(&mut rng, 4, 1.0);
            let w = sample::density_matrix(&mut rng, 4);
            let mut brute = c(0.0, 0.0);
            for f in 0..4 {
                for g in 0..4 {
                    brute += a[(f, g)] * w.matrix()[(g, f)];
                }
            }
            let e = expectation(&a, &w).unwrap();
            assert!((e - brute).norm() < 1e-14);
            assert!(e.im.abs() <= 1e-12);
        }
    }

    #[test]
    fn revalidation_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 1..6 {
            let w = sample::density_matrix(&mut rng, d);
            let again = DensityMatrix::new(w.matrix().clone(), w.tolerances()).unwrap();
            assert_eq!(again, w);
        }
    }
}
