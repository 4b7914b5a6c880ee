//! Linear maps on `d×d` operators and their complete positivity.
//!
//! Vectorization is column-stacking throughout: `vec(X)[i + j·d] = X[i, j]`,
//! which is also nalgebra's storage order. Under it
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`, so a Kraus operator `M` contributes
//! `conj(M) ⊗ M` to the superoperator.
//!
//! The Choi matrix is `C = Σ_ij E_ij ⊗ Φ(E_ij)`, with row index `i·d + a`
//! for block `i` and entry `a`. Maps are stored in the Schrödinger picture;
//! the Heisenberg dual is recovered through the adjoint.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::operator::{
    c, hermitian_eigenpairs, hermiticity_residual, matrix_unit, max_norm, min_eigenvalue,
    ComplexMatrix,
};
use crate::sample;

pub const DEFAULT_CP_TOL: f64 = 1e-10;

/// Choi matrices whose Hermiticity residual exceeds this are not physical
/// map candidates.
pub const HERMITICITY_PRESERVING_TOL: f64 = 1e-8;

/// Upper bound on `n·d` for the explicit tensor-extension probe.
pub const EXTENSION_CAP: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("map is not Hermiticity preserving (Choi residual {0:e})")]
    NotHermiticityPreserving(f64),
    #[error("map is not completely positive (min Choi eigenvalue {0:e})")]
    NotCp(f64),
    #[error("extension size n·d = {0} exceeds the cap of {EXTENSION_CAP}")]
    ResourceCap(usize),
    #[error("operator dimension {got} does not match map dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Kraus set is empty")]
    EmptyKraus,
}

/// Column-stacking vectorization.
pub fn vec_of(x: &ComplexMatrix) -> DVector<Complex64> {
    DVector::from_column_slice(x.as_slice())
}

pub fn unvec(v: &DVector<Complex64>, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(d, d, v.as_slice())
}

/// `d²×d²` matrix acting on `vec(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperoperatorMap {
    dim: usize,
    matrix: ComplexMatrix,
}

impl SuperoperatorMap {
    pub fn from_matrix(dim: usize, matrix: ComplexMatrix) -> Result<Self, ChannelError> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(ChannelError::DimensionMismatch {
                expected: dim * dim,
                got: matrix.nrows(),
            });
        }
        Ok(Self { dim, matrix })
    }

    /// Builds the superoperator column by column from the action on matrix units.
    pub fn from_fn<F>(dim: usize, mut f: F) -> Self
    where
        F: FnMut(&ComplexMatrix) -> ComplexMatrix,
    {
        let d2 = dim * dim;
        let mut matrix = ComplexMatrix::zeros(d2, d2);
        for j in 0..dim {
            for i in 0..dim {
                let image = f(&matrix_unit(dim, i, j));
                matrix.column_mut(i + j * dim).copy_from(&vec_of(&image));
            }
        }
        Self { dim, matrix }
    }

    /// `X ↦ Σ M X M†`.
    pub fn from_kraus(kraus: &KrausSet) -> Self {
        let d = kraus.dim;
        let mut matrix = ComplexMatrix::zeros(d * d, d * d);
        for m in &kraus.operators {
            matrix += m.map(|z| z.conj()).kronecker(m);
        }
        Self { dim: d, matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: ComplexMatrix::identity(dim * dim, dim * dim),
        }
    }

    pub fn transpose(dim: usize) -> Self {
        Self::from_fn(dim, |x| x.transpose())
    }

    /// `X ↦ Tr(X)·1/d`.
    pub fn depolarizing(dim: usize) -> Self {
        let scale = 1.0 / dim as f64;
        Self::from_fn(dim, |x| ComplexMatrix::identity(dim, dim) * (x.trace() * scale))
    }

    /// `X ↦ U† X U`.
    pub fn conjugation(u: &ComplexMatrix) -> Self {
        let dim = u.nrows();
        let u_dag = u.adjoint();
        Self::from_fn(dim, |x| &u_dag * x * u)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SuperoperatorMap, b: f64) -> Result<Self, ChannelError> {
        if self.dim != other.dim {
            return Err(ChannelError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            matrix: self.matrix.scale(a) + other.matrix.scale(b),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Schrödinger action `Φ(X)`.
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        unvec(&(&self.matrix * vec_of(x)), self.dim)
    }

    /// Hilbert–Schmidt adjoint `Φ†`, i.e. `Tr(Φ†(A)† X) = Tr(A† Φ(X))`.
    pub fn hs_adjoint(&self) -> SuperoperatorMap {
        Self {
            dim: self.dim,
            matrix: self.matrix.adjoint(),
        }
    }

    /// Heisenberg dual `Φ'` defined by `Tr(Φ'(A) ρ) = Tr(A Φ(ρ))`,
    /// equal to `Φ†(A†)†`.
    pub fn apply_heisenberg(&self, a: &ComplexMatrix) -> ComplexMatrix {
        let adj = &self.matrix.adjoint();
        unvec(&(adj * vec_of(&a.adjoint())), self.dim).adjoint()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    matrix: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn from_matrix(dim: usize, matrix: ComplexMatrix) -> Result<Self, ChannelError> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(ChannelError::DimensionMismatch {
                expected: dim * dim,
                got: matrix.nrows(),
            });
        }
        Ok(Self { dim, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix)
    }

    /// Inverse reshuffle: `S[a + b·d, i + j·d] = C[i·d + a, j·d + b]`.
    pub fn to_superoperator(&self) -> SuperoperatorMap {
        let d = self.dim;
        let matrix = ComplexMatrix::from_fn(d * d, d * d, |row, col| {
            let (a, b) = (row % d, row / d);
            let (i, j) = (col % d, col / d);
            self.matrix[(i * d + a, j * d + b)]
        });
        SuperoperatorMap { dim: d, matrix }
    }
}

/// `C = Σ_ij E_ij ⊗ Φ(E_ij)`.
pub fn choi_of(map: &SuperoperatorMap) -> ChoiMatrix {
    let d = map.dim;
    let matrix = ComplexMatrix::from_fn(d * d, d * d, |row, col| {
        let (i, a) = (row / d, row % d);
        let (j, b) = (col / d, col % d);
        // Φ(E_ij)[a, b] is column (i + j·d) of S at row (a + b·d)
        map.matrix[(a + b * d, i + j * d)]
    });
    ChoiMatrix { dim: d, matrix }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    dim: usize,
    operators: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self, ChannelError> {
        let first = operators.first().ok_or(ChannelError::EmptyKraus)?;
        let dim = first.nrows();
        for m in &operators {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(ChannelError::DimensionMismatch {
                    expected: dim,
                    got: m.nrows().max(m.ncols()),
                });
            }
        }
        Ok(Self { dim, operators })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    /// `Σ M X M†`
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.operators
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, m| {
                acc + m * x * m.adjoint()
            })
    }

    /// `Σ M† X M`
    pub fn apply_heisenberg(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.operators
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, m| {
                acc + m.adjoint() * x * m
            })
    }

    /// `‖Σ M† M − 1‖_max`, zero for trace-preserving sets.
    pub fn trace_preservation_residual(&self) -> f64 {
        let s = self
            .operators
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, m| {
                acc + m.adjoint() * m
            });
        max_norm(&(s - ComplexMatrix::identity(self.dim, self.dim)))
    }

    /// `‖Σ M M† − 1‖_max`, zero for unital sets.
    pub fn unitality_residual(&self) -> f64 {
        let s = self
            .operators
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, m| {
                acc + m * m.adjoint()
            });
        max_norm(&(s - ComplexMatrix::identity(self.dim, self.dim)))
    }

    pub fn to_superoperator(&self) -> SuperoperatorMap {
        SuperoperatorMap::from_kraus(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CpVerdict {
    Cp { min_eig: f64 },
    NotCp { min_eig: f64 },
}

impl CpVerdict {
    pub fn is_cp(&self) -> bool {
        matches!(self, CpVerdict::Cp { .. })
    }

    pub fn min_eig(&self) -> f64 {
        match *self {
            CpVerdict::Cp { min_eig } | CpVerdict::NotCp { min_eig } => min_eig,
        }
    }
}

/// CP iff the smallest eigenvalue of the Hermitized Choi matrix is `≥ −tol`.
pub fn is_completely_positive(map: &SuperoperatorMap, tol: f64) -> Result<CpVerdict, ChannelError> {
    let choi = choi_of(map);
    let herm = choi.hermiticity_residual();
    if herm > HERMITICITY_PRESERVING_TOL {
        return Err(ChannelError::NotHermiticityPreserving(herm));
    }
    let min_eig = choi.min_eigenvalue();
    Ok(if min_eig >= -tol {
        CpVerdict::Cp { min_eig }
    } else {
        CpVerdict::NotCp { min_eig }
    })
}

/// Finite data `(n, {ψ_i}, {B_i})` for which
/// `Σ_ij ⟨ψ_i| Φ'(B_i† B_j) |ψ_j⟩ < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpWitness {
    pub n: usize,
    pub vectors: Vec<DVector<Complex64>>,
    pub operators: Vec<ComplexMatrix>,
    pub value: f64,
}

impl CpWitness {
    /// Evaluates the positivity sum literally through the Heisenberg dual.
    pub fn recompute(&self, map: &SuperoperatorMap) -> Complex64 {
        let mut total = c(0.0, 0.0);
        for i in 0..self.n {
            for j in 0..self.n {
                let product = self.operators[i].adjoint() * &self.operators[j];
                let image = map.apply_heisenberg(&product);
                total += self.vectors[i].dotc(&(image * &self.vectors[j]));
            }
        }
        total
    }
}

/// Builds a violation witness from the most negative Choi eigenvector, or
/// `None` when the smallest Choi eigenvalue is `≥ −tol`.
///
/// With `v` the eigenvector, reshape it column-stacked into `V`
/// (`V[a, i] = v[i·d + a]`), take `ψ_i = e_i` and `B_i = |e_0⟩⟨u_i|` where
/// `u_i` is column `i` of `V`. Then `B_i† B_j = |u_i⟩⟨u_j|` and
/// `⟨e_i|Φ'(|u_i⟩⟨u_j|)|e_j⟩ = ⟨u_j|Φ(E_ji)|u_i⟩`, so the double sum
/// collapses to `⟨v|C|v⟩ = λ_min`.
pub fn cp_witness(map: &SuperoperatorMap, tol: f64) -> Option<CpWitness> {
    let d = map.dim;
    let choi = choi_of(map);
    let (lambda, v) = hermitian_eigenpairs(&choi.matrix).into_iter().next()?;
    if lambda >= -tol {
        return None;
    }
    let vmat = ComplexMatrix::from_column_slice(d, d, v.as_slice());
    let vectors: Vec<DVector<Complex64>> = (0..d)
        .map(|i| {
            let mut e = DVector::zeros(d);
            e[i] = c(1.0, 0.0);
            e
        })
        .collect();
    let operators: Vec<ComplexMatrix> = (0..d)
        .map(|i| {
            let mut b = ComplexMatrix::zeros(d, d);
            let u = vmat.column(i);
            for a in 0..d {
                b[(0, a)] = u[a].conj();
            }
            b
        })
        .collect();
    let mut witness = CpWitness {
        n: d,
        vectors,
        operators,
        value: 0.0,
    };
    witness.value = witness.recompute(map).re;
    Some(witness)
}

/// Spectral factorization of a PSD Choi matrix: `M_k = √λ_k · unvec(v_k)`
/// for every eigenvalue above `tol`.
pub fn kraus_of(choi: &ChoiMatrix, tol: f64) -> Result<KrausSet, ChannelError> {
    let d = choi.dim;
    let pairs = hermitian_eigenpairs(&choi.matrix);
    if let Some(&(lambda, _)) = pairs.first() {
        if lambda < -tol {
            return Err(ChannelError::NotCp(lambda));
        }
    }
    let mut operators: Vec<ComplexMatrix> = pairs
        .into_iter()
        .rev()
        .filter(|(l, _)| *l > tol)
        .map(|(l, v)| ComplexMatrix::from_column_slice(d, d, v.as_slice()) * c(l.sqrt(), 0.0))
        .collect();
    if operators.is_empty() {
        // zero map
        operators.push(ComplexMatrix::zeros(d, d));
    }
    Ok(KrausSet { dim: d, operators })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionReport {
    pub n: usize,
    pub samples: usize,
    /// Most negative eigenvalue of `(Φ ⊗ 1_n)(|ψ⟩⟨ψ|)` over all probes.
    pub min_eig: f64,
    /// Whether the maximally entangled probe was part of the sample set.
    pub max_entangled_included: bool,
}

/// `(Φ ⊗ 1_n)(ρ)` with the system index slow: `ρ[(a·n + α), (b·n + β)]`.
pub fn apply_extended(map: &SuperoperatorMap, n: usize, rho: &ComplexMatrix) -> ComplexMatrix {
    let d = map.dim;
    let mut out = ComplexMatrix::zeros(d * n, d * n);
    for alpha in 0..n {
        for beta in 0..n {
            let block = ComplexMatrix::from_fn(d, d, |a, b| rho[(a * n + alpha, b * n + beta)]);
            let image = map.apply(&block);
            for a in 0..d {
                for b in 0..d {
                    out[(a * n + alpha, b * n + beta)] = image[(a, b)];
                }
            }
        }
    }
    out
}

/// Probes positivity of `Φ ⊗ 1_n` on random pure product-space states.
/// When `n ≥ d` the maximally entangled state `Σ_i |i⟩|i⟩/√d` is always
/// among the probes.
pub fn tensor_extension_positive(
    map: &SuperoperatorMap,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<ExtensionReport, ChannelError> {
    let d = map.dim;
    let total = n * d;
    if total > EXTENSION_CAP {
        return Err(ChannelError::ResourceCap(total));
    }
    let mut probes: Vec<DVector<Complex64>> = Vec::with_capacity(samples + 1);
    let max_entangled_included = n >= d;
    if max_entangled_included {
        let mut omega = DVector::zeros(total);
        let amp = 1.0 / (d as f64).sqrt();
        for i in 0..d {
            omega[i * n + i] = c(amp, 0.0);
        }
        probes.push(omega);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    probes.extend((0..samples).map(|_| sample::pure_vector(&mut rng, total)));

    let min_eig = probes
        .iter()
        .map(|psi| min_eigenvalue(&apply_extended(map, n, &(psi * psi.adjoint()))))
        .fold(f64::INFINITY, f64::min);
    Ok(ExtensionReport {
        n,
        samples: probes.len(),
        min_eig,
        max_entangled_included,
    })
}
