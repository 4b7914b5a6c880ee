//! Explicit Fock-space construction restricted to one microsystem.
//!
//! The ladder operators act on occupation-number vectors of a small Fock
//! space (cutoff 1 per mode for fermions, 2 for bosons), so the one-particle
//! expectation value computed here never goes through the reduced matrix
//! contraction in [`super::expectation`]. It serves as the brute-force check
//! of that contraction.

use nalgebra::DVector;
use num_complex::Complex64;

use super::{check_square_finite, ComplexMatrix, DensityMatrix, OperatorError, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistics {
    Fermi,
    Bose,
}

/// A one-particle matrix together with the mode count and particle statistics
/// it is lifted with, `Â = Σ a†_f A_fg a_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockSectorRep {
    pub modes: usize,
    pub statistics: Statistics,
    pub one_particle_matrix: ComplexMatrix,
}

impl FockSectorRep {
    pub fn new(matrix: ComplexMatrix, statistics: Statistics) -> Result<Self, OperatorError> {
        check_square_finite(&matrix)?;
        Ok(Self {
            modes: matrix.nrows(),
            statistics,
            one_particle_matrix: matrix,
        })
    }
}

struct FockSpace {
    modes: usize,
    statistics: Statistics,
    /// occupation cutoff + 1
    radix: usize,
    dim: usize,
}

impl FockSpace {
    fn new(modes: usize, statistics: Statistics) -> Self {
        let radix = match statistics {
            Statistics::Fermi => 2,
            Statistics::Bose => 3,
        };
        Self {
            modes,
            statistics,
            radix,
            dim: radix.pow(modes as u32),
        }
    }

    fn occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.radix.pow(mode as u32)) % self.radix
    }

    fn total_occupation(&self, index: usize) -> usize {
        (0..self.modes).map(|m| self.occupation(index, m)).sum()
    }

    /// Jordan–Wigner sign for fermions; bosons commute.
    fn exchange_sign(&self, index: usize, mode: usize) -> f64 {
        match self.statistics {
            Statistics::Bose => 1.0,
            Statistics::Fermi => {
                let before: usize = (0..mode).map(|m| self.occupation(index, m)).sum();
                if before.is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    fn annihilate(&self, mode: usize, v: &DVector<Complex64>) -> DVector<Complex64> {
        let step = self.radix.pow(mode as u32);
        let mut out = DVector::zeros(self.dim);
        for (idx, amp) in v.iter().enumerate() {
            let n = self.occupation(idx, mode);
            if n == 0 || *amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let factor = (n as f64).sqrt() * self.exchange_sign(idx, mode);
            out[idx - step] += amp * factor;
        }
        out
    }

    fn create(&self, mode: usize, v: &DVector<Complex64>) -> DVector<Complex64> {
        let step = self.radix.pow(mode as u32);
        let mut out = DVector::zeros(self.dim);
        for (idx, amp) in v.iter().enumerate() {
            let n = self.occupation(idx, mode);
            if n + 1 >= self.radix || *amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let factor = ((n + 1) as f64).sqrt() * self.exchange_sign(idx, mode);
            out[idx + step] += amp * factor;
        }
        out
    }

    fn vacuum(&self) -> DVector<Complex64> {
        let mut v = DVector::zeros(self.dim);
        v[0] = Complex64::new(1.0, 0.0);
        v
    }

    fn unit(&self, index: usize) -> DVector<Complex64> {
        let mut v = DVector::zeros(self.dim);
        v[index] = Complex64::new(1.0, 0.0);
        v
    }

    /// `Σ_{f,g} A_fg a†_f a_g |v⟩`
    fn apply_bilinear(&self, a: &ComplexMatrix, v: &DVector<Complex64>) -> DVector<Complex64> {
        let mut out = DVector::zeros(self.dim);
        for g in 0..self.modes {
            let lowered = self.annihilate(g, v);
            for f in 0..self.modes {
                let coeff = a[(f, g)];
                if coeff != Complex64::new(0.0, 0.0) {
                    out += self.create(f, &lowered) * coeff;
                }
            }
        }
        out
    }
}

/// `Tr(A ρ)` with `A = Σ a†_f A_fg a_g` and `ρ = Σ a†_g |0⟩⟨0| a_f w_gf`, both
/// assembled in the explicit one-particle sector of the Fock space. The
/// matter state is the trivial one.
pub fn fock_expectation(
    rep_a: &FockSectorRep,
    rep_w: &FockSectorRep,
) -> Result<Complex64, OperatorError> {
    if rep_a.modes != rep_w.modes {
        return Err(OperatorError::DimensionMismatch {
            expected: rep_w.modes,
            got: rep_a.modes,
        });
    }
    DensityMatrix::new(rep_w.one_particle_matrix.clone(), Tolerances::default())?;
    if rep_a.statistics != rep_w.statistics {
        return Err(OperatorError::StatisticsMismatch);
    }
    let space = FockSpace::new(rep_a.modes, rep_a.statistics);
    let n = space.modes;

    let sector: Vec<usize> = (0..space.dim)
        .filter(|&i| space.total_occupation(i) == 1)
        .collect();
    assert_eq!(sector.len(), n, "one-particle sector must have one state per mode");

    let vacuum = space.vacuum();
    let basis: Vec<DVector<Complex64>> = sector.iter().map(|&i| space.unit(i)).collect();
    // a†_g|0⟩ for every mode
    let raised: Vec<DVector<Complex64>> = (0..n).map(|g| space.create(g, &vacuum)).collect();

    let a = &rep_a.one_particle_matrix;
    let w = &rep_w.one_particle_matrix;

    let mut a_sector = ComplexMatrix::zeros(n, n);
    for (col, e_g) in basis.iter().enumerate() {
        let image = space.apply_bilinear(a, e_g);
        for (row, e_f) in basis.iter().enumerate() {
            a_sector[(row, col)] = e_f.dotc(&image);
        }
    }

    // ⟨e_r| ρ |e_s⟩ = Σ_{g,f} w_gf ⟨e_r|a†_g|0⟩ ⟨0|a_f|e_s⟩
    let mut rho_sector = ComplexMatrix::zeros(n, n);
    for (r, e_r) in basis.iter().enumerate() {
        for (s, e_s) in basis.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for g in 0..n {
                let bra = e_r.dotc(&raised[g]);
                if bra == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for f in 0..n {
                    let ket = vacuum.dotc(&space.annihilate(f, e_s));
                    acc += w[(g, f)] * bra * ket;
                }
            }
            rho_sector[(r, s)] = acc;
        }
    }

    let mut tr = Complex64::new(0.0, 0.0);
    for r in 0..n {
        for s in 0..n {
            tr += a_sector[(r, s)] * rho_sector[(s, r)];
        }
    }
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{c, expectation};
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_mode() {
        for stats in [Statistics::Fermi, Statistics::Bose] {
            let a = FockSectorRep::new(ComplexMatrix::from_element(1, 1, c(2.0, 0.0)), stats).unwrap();
            let w = FockSectorRep::new(ComplexMatrix::from_element(1, 1, c(1.0, 0.0)), stats).unwrap();
            assert_eq!(fock_expectation(&a, &w).unwrap(), c(2.0, 0.0));
        }
    }

    #[test]
    fn number_operator_counts_one_particle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = sample::density_matrix(&mut rng, 3);
        for stats in [Statistics::Fermi, Statistics::Bose] {
            let a = FockSectorRep::new(ComplexMatrix::identity(3, 3), stats).unwrap();
            let wr = FockSectorRep::new(w.matrix().clone(), stats).unwrap();
            let v = fock_expectation(&a, &wr).unwrap();
            assert!((v - c(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn five_modes_agree_with_reduced_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = sample::hermitian(&mut rng, 5, 1.0);
        let w = sample::density_matrix(&mut rng, 5);
        let reduced = expectation(&a, &w).unwrap();
        let fermi = fock_expectation(
            &FockSectorRep::new(a.clone(), Statistics::Fermi).unwrap(),
            &FockSectorRep::new(w.matrix().clone(), Statistics::Fermi).unwrap(),
        )
        .unwrap();
        let bose = fock_expectation(
            &FockSectorRep::new(a, Statistics::Bose).unwrap(),
            &FockSectorRep::new(w.matrix().clone(), Statistics::Bose).unwrap(),
        )
        .unwrap();
        assert!((fermi - reduced).norm() < 1e-12);
        assert!((bose - reduced).norm() < 1e-12);
        // statistics flag has no effect in this sector
        assert!((fermi - bose).norm() < 1e-13);
    }

    #[test]
    fn rejects_mismatched_modes_and_invalid_state() {
        let a = FockSectorRep::new(ComplexMatrix::identity(2, 2), Statistics::Fermi).unwrap();
        let w = FockSectorRep::new(ComplexMatrix::identity(3, 3).scale(1.0 / 3.0), Statistics::Fermi)
            .unwrap();
        assert!(matches!(
            fock_expectation(&a, &w),
            Err(OperatorError::DimensionMismatch { .. })
        ));
        let bad = FockSectorRep::new(ComplexMatrix::identity(2, 2), Statistics::Fermi).unwrap();
        assert!(matches!(
            fock_expectation(&a, &bad),
            Err(OperatorError::InvalidState(_))
        ));
    }

    #[test]
    fn fermion_ladder_signs_anticommute() {
        let space = FockSpace::new(3, Statistics::Fermi);
        let vac = space.vacuum();
        let ab = space.create(0, &space.create(2, &vac));
        let ba = space.create(2, &space.create(0, &vac));
        assert!((ab + ba).norm() < 1e-15);
        let boson = FockSpace::new(2, Statistics::Bose);
        let twice = boson.create(1, &boson.create(1, &boson.vacuum()));
        assert!((twice.norm() - 2f64.sqrt()).abs() < 1e-15);
    }
}
