//! Lindblad generators assembled from the optical closed forms.
//!
//! Time is measured in units of the traversal time `t_D = D·m/p₀`, so every
//! rate below is already multiplied by `t_D` and the beam velocity cancels.

use num_complex::Complex64;
use serde::Serialize;

use super::{
    attenuation_exponent, momentum_transfer, phase_shift, Beam, Medium, OpticsError, Quadrature,
};
use crate::lindblad::{
    build_generator, evolve, EvolutionConfig, GammaMode, Integrator, LindbladGenerator,
};
use crate::operator::{c, ComplexMatrix, DensityMatrix};

/// Forward beam state plus `n_dirs` diffuse directions.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringScenario {
    pub n_dirs: usize,
    /// Quadrature whose panels are the diffuse directions.
    pub quadrature: Quadrature,
    /// Representative polar angle of each direction (panel midpoint in `cos θ`).
    pub theta: Vec<f64>,
    /// Momentum transfer at the representative angle.
    pub q: Vec<f64>,
    /// Solid angle of each direction; they sum to 4π.
    pub solid_angle: Vec<f64>,
    /// `rate_i·t_D = n₀·b²·D·∫_{panel i} dΩ S`.
    pub rates: Vec<f64>,
    pub forward_index: usize,
    pub generator: LindbladGenerator,
}

impl ScatteringScenario {
    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// The pure forward beam.
    pub fn initial_state(&self) -> DensityMatrix {
        let mut psi = vec![c(0.0, 0.0); self.n_dirs + 1];
        psi[self.forward_index] = c(1.0, 0.0);
        DensityMatrix::pure(&psi).expect("unit vector")
    }
}

/// Splits the sphere into `n_dirs` polar slices of equal `cos θ` width, each
/// integrated with `quad.order` Gauss–Legendre nodes, and couples the forward
/// state to each slice with `L_i = √rate_i·|i⟩⟨0|`. `Γ` is derived, so the
/// forward population decays as `e^{−Σ s}` while the trace is conserved. The
/// forward state also carries the real optical potential as an energy
/// `−χ` (scaled units).
pub fn build_scattering_generator(
    medium: &Medium,
    beam: &Beam,
    n_dirs: usize,
    quad: &Quadrature,
) -> Result<ScatteringScenario, OpticsError> {
    if n_dirs == 0 {
        return Err(OpticsError::Domain {
            name: "n_dirs",
            constraint: ">= 1",
        });
    }
    let quadrature = Quadrature::new(quad.order, n_dirs)?;
    let k0 = beam.k0();
    let b = medium.b();
    let prefactor = medium.number_density * b * b * medium.thickness;

    let weighted = quadrature.panel_integrals(|mu| medium.structure.eval(momentum_transfer(k0, mu)))?;
    let solid_angle = quadrature.panel_integrals(|_| Ok(1.0))?;
    let rates: Vec<f64> = weighted.iter().map(|w| prefactor * w).collect();

    let width = 2.0 / n_dirs as f64;
    let mid_mu: Vec<f64> = (0..n_dirs).map(|p| 1.0 - (p as f64 + 0.5) * width).collect();
    let theta = mid_mu.iter().map(|mu| mu.acos()).collect();
    let q = mid_mu.iter().map(|&mu| momentum_transfer(k0, mu)).collect();

    let d = n_dirs + 1;
    let mut v = ComplexMatrix::zeros(d, d);
    v[(0, 0)] = c(-phase_shift(medium, beam), 0.0);
    let ls = rates
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut l = ComplexMatrix::zeros(d, d);
            l[(i + 1, 0)] = c(r.sqrt(), 0.0);
            l
        })
        .collect();
    let generator = build_generator(ComplexMatrix::zeros(d, d), v, ls, GammaMode::Derived)?;

    Ok(ScatteringScenario {
        n_dirs,
        quadrature,
        theta,
        q,
        solid_angle,
        rates,
        forward_index: 0,
        generator,
    })
}

/// Two paths and a diffuse sink: path 0 crosses the medium (energy `−χ`,
/// loss rate `Σ` into the sink), path 1 is free.
pub fn interferometer_generator(medium: &Medium, beam: &Beam, quad: &Quadrature) -> Result<LindbladGenerator, OpticsError> {
    let chi = phase_shift(medium, beam);
    let sigma = attenuation_exponent(medium, beam, quad)?;
    let mut v = ComplexMatrix::zeros(3, 3);
    v[(0, 0)] = c(-chi, 0.0);
    let mut l = ComplexMatrix::zeros(3, 3);
    l[(2, 0)] = c(sigma.sqrt(), 0.0);
    Ok(build_generator(ComplexMatrix::zeros(3, 3), v, vec![l], GammaMode::Derived)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterferometerResult {
    /// `arg(w_01)` after one traversal, wrapped to `(−π, π]`.
    pub chi: f64,
    /// `2|w_01|`.
    pub contrast: f64,
    /// `−n₀·b·λ·D`
    pub chi_closed_form: f64,
    /// `e^{−Σ/2}`
    pub contrast_closed_form: f64,
    pub sigma: f64,
}

/// Evolves the equal superposition of the two paths for one traversal time
/// and reads phase and fringe contrast off the path coherence.
pub fn interferometer_contrast(
    medium: &Medium,
    beam: &Beam,
    quad: &Quadrature,
    integrator: Integrator,
) -> Result<InterferometerResult, OpticsError> {
    let gen = interferometer_generator(medium, beam, quad)?;
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    let w0 = DensityMatrix::pure(&[c(amp, 0.0), c(amp, 0.0), c(0.0, 0.0)])?;
    let config = EvolutionConfig {
        monitor_every: usize::MAX,
        ..EvolutionConfig::new(gen.default_dt(), 1.0, integrator)
    };
    let traj = evolve(&gen, &w0, &config)?;
    let w01: Complex64 = traj.last().matrix()[(0, 1)];
    let sigma = attenuation_exponent(medium, beam, quad)?;
    Ok(InterferometerResult {
        chi: w01.arg(),
        contrast: 2.0 * w01.norm(),
        chi_closed_form: phase_shift(medium, beam),
        contrast_closed_form: (-sigma / 2.0).exp(),
        sigma,
    })
}

/// `a − b` reduced to `(−π, π]`.
pub fn wrapped_phase_difference(a: f64, b: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut d = (a - b).rem_euclid(tau);
    if d > std::f64::consts::PI {
        d -= tau;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::StructureFunction;

    fn worked_example() -> (Medium, Beam) {
        (
            Medium::new(1e-3, 5.0, 1e6, StructureFunction::default()).unwrap(),
            Beam::new(2.0).unwrap(),
        )
    }

    #[test]
    fn single_direction_two_level_decay() {
        let (mut m, beam) = worked_example();
        // large exponent so the decay is visible
        m.thickness = 1e10;
        let q = Quadrature::default();
        let sc = build_scattering_generator(&m, &beam, 1, &q).unwrap();
        let sigma = attenuation_exponent(&m, &beam, &q).unwrap();
        assert!((sc.total_rate() / sigma - 1.0).abs() < 1e-12);
        let cfg = EvolutionConfig {
            monitor_every: 100,
            ..EvolutionConfig::new(sc.generator.default_dt(), 2.0, Integrator::Rk4)
        };
        let traj = evolve(&sc.generator, &sc.initial_state(), &cfg).unwrap();
        for (t, w) in traj.times.iter().zip(&traj.states) {
            let exact = (-sigma * t).exp();
            assert!((w.population(0) - exact).abs() <= 1e-9 * exact.max(1e-3));
            assert!((w.population(1) - (1.0 - exact)).abs() < 1e-9);
        }
    }

    #[test]
    fn rates_sum_to_attenuation_exponent() {
        let (m, beam) = worked_example();
        let q = Quadrature::with_order(16).unwrap();
        let sc = build_scattering_generator(&m, &beam, 12, &q).unwrap();
        let sigma = attenuation_exponent(&m, &beam, &sc.quadrature).unwrap();
        assert!((sc.total_rate() / sigma - 1.0).abs() <= 1e-12);
        assert_eq!(sc.generator.dim(), 13);
        let omega: f64 = sc.solid_angle.iter().sum();
        assert!((omega - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(sc.q.windows(2).all(|w| w[1] > w[0]));
        assert!(build_scattering_generator(&m, &beam, 0, &q).is_err());
    }

    #[test]
    fn worked_example_interferometer() {
        let (m, beam) = worked_example();
        let q = Quadrature::default();
        let r = interferometer_contrast(&m, &beam, &q, Integrator::Rk4).unwrap();
        assert!(wrapped_phase_difference(r.chi, -0.1).abs() < 1e-6);
        let sigma = 1e-3 * 4.0 * std::f64::consts::PI * 2.5e-9 * 1e6;
        assert!((r.contrast - (-sigma / 2.0).exp()).abs() < 1e-6);
        assert_eq!(r.chi_closed_form, phase_shift(&m, &beam));
    }

    #[test]
    fn vacuum_interferometer() {
        let (mut m, beam) = worked_example();
        m.scattering_length_fm = 0.0;
        let r = interferometer_contrast(&m, &beam, &Quadrature::default(), Integrator::Rk4).unwrap();
        assert!(r.chi.abs() < 1e-15);
        assert!((r.contrast - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_wrapping() {
        assert!((wrapped_phase_difference(3.0, -3.0) - (6.0 - std::f64::consts::TAU)).abs() < 1e-15);
        assert_eq!(wrapped_phase_difference(0.5, 0.25), 0.25);
    }
}
