//! Seeded random operators for sweeps, probes and property checks.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::operator::{ComplexMatrix, DensityMatrix, Tolerances};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box–Muller
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard complex Gaussian entries times `scale`.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |_, _| complex_gaussian(rng) * scale)
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> ComplexMatrix {
    let g = ginibre(rng, d, scale);
    (&g + g.adjoint()).scale(0.5)
}

/// Haar-ish unitary from the QR factorization of a Ginibre matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    let g = ginibre(rng, d, 1.0);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let z = r[(j, j)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Normalized random pure state vector.
pub fn pure_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DVector<Complex64> {
    let v = DVector::from_fn(d, |_, _| complex_gaussian(rng));
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

/// Full-rank random density matrix `G G† / Tr(G G†)`.
pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityMatrix {
    let g = ginibre(rng, d, 1.0);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let m = crate::operator::hermitize(&m.scale(1.0 / tr));
    DensityMatrix::new(m, Tolerances::default()).expect("Wishart sample is a valid state")
}

/// `count` random operators rescaled so that `Σ M_k† M_k = 1`.
pub fn trace_preserving_kraus<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    count: usize,
) -> Vec<ComplexMatrix> {
    let raw: Vec<ComplexMatrix> = (0..count).map(|_| ginibre(rng, d, 1.0)).collect();
    let s = raw
        .iter()
        .fold(ComplexMatrix::zeros(d, d), |acc, m| acc + m.adjoint() * m);
    // S^{-1/2}
    let eig = nalgebra::SymmetricEigen::new(crate::operator::hermitize(&s));
    let inv_sqrt = DVector::from_iterator(
        d,
        eig.eigenvalues.iter().map(|&l| Complex64::new(1.0 / l.sqrt(), 0.0)),
    );
    let v = &eig.eigenvectors;
    let s_inv_half = v * ComplexMatrix::from_diagonal(&inv_sqrt) * v.adjoint();
    raw.into_iter().map(|m| m * &s_inv_half).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::max_norm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = unitary(&mut rng, 4);
        assert!(max_norm(&(u.adjoint() * &u - ComplexMatrix::identity(4, 4))) < 1e-13);
    }

    #[test]
    fn kraus_sample_is_trace_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ks = trace_preserving_kraus(&mut rng, 3, 4);
        let s = ks
            .iter()
            .fold(ComplexMatrix::zeros(3, 3), |acc, m| acc + m.adjoint() * m);
        assert!(max_norm(&(s - ComplexMatrix::identity(3, 3))) < 1e-12);
    }
}
