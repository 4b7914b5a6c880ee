//! Neutron optics in a homogeneous medium: refraction and phase shift from
//! the coherent scattering length, attenuation of the coherent wave by
//! diffuse scattering weighted with the static structure function, and the
//! balance between the two.
//!
//! Lengths are in Å (the scattering length is given in fm and converted),
//! wavenumbers in Å⁻¹. Every reported prediction is dimensionless; the beam
//! velocity `p₀/m` always cancels against the traversal time `t_D = D·m/p₀`.
//! Elastic kinematics: `q = 2 k₀ sin(θ/2) = k₀ √(2(1 − cos θ))`.

mod quadrature;
mod scenario;
mod structure;

pub use quadrature::{Quadrature, SphereNode, DEFAULT_ORDER};
pub use scenario::{
    build_scattering_generator, interferometer_contrast, interferometer_generator, wrapped_phase_difference,
    InterferometerResult, ScatteringScenario,
};
pub use structure::StructureFunction;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::lindblad::LindbladError;
use crate::operator::OperatorError;

/// 1 fm in Å.
pub const FM_TO_ANGSTROM: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("structure function is negative ({value}) at q = {q} 1/Å")]
    NegativeStructure { q: f64, value: f64 },
    #[error("invalid structure table: {0}")]
    Table(String),
    #[error("invalid quadrature: {0}")]
    Quadrature(String),
    #[error("invalid {name}: {constraint}")]
    Domain {
        name: &'static str,
        constraint: &'static str,
    },
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Medium {
    /// Number density `n₀` [Å⁻³].
    pub number_density: f64,
    /// Coherent scattering length `b` [fm], real.
    pub scattering_length_fm: f64,
    /// Sample thickness `D` [Å].
    pub thickness: f64,
    pub structure: StructureFunction,
}

impl Medium {
    pub fn new(
        number_density: f64,
        scattering_length_fm: f64,
        thickness: f64,
        structure: StructureFunction,
    ) -> Result<Self, OpticsError> {
        let m = Self {
            number_density,
            scattering_length_fm,
            thickness,
            structure,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        if !(self.number_density >= 0.0 && self.number_density.is_finite()) {
            return Err(OpticsError::Domain {
                name: "n_o",
                constraint: ">= 0",
            });
        }
        if !(self.thickness >= 0.0 && self.thickness.is_finite()) {
            return Err(OpticsError::Domain {
                name: "D",
                constraint: ">= 0",
            });
        }
        if !self.scattering_length_fm.is_finite() {
            return Err(OpticsError::Domain {
                name: "b",
                constraint: "finite",
            });
        }
        Ok(())
    }

    /// `b` in Å.
    pub fn b(&self) -> f64 {
        self.scattering_length_fm * FM_TO_ANGSTROM
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Beam {
    /// Wavelength `λ` [Å].
    pub wavelength: f64,
}

impl Beam {
    pub fn new(wavelength: f64) -> Result<Self, OpticsError> {
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(OpticsError::Domain {
                name: "lambda",
                constraint: "> 0",
            });
        }
        Ok(Self { wavelength })
    }

    /// `k₀ = 2π/λ` [Å⁻¹], identified with `p₀/ħ`.
    pub fn k0(&self) -> f64 {
        TAU / self.wavelength
    }
}

/// Elastic momentum transfer at polar angle `θ`, given `cos θ`.
pub fn momentum_transfer(k0: f64, cos_theta: f64) -> f64 {
    k0 * (2.0 * (1.0 - cos_theta)).max(0.0).sqrt()
}

/// `n ≃ 1 − (λ²/2π)·b·n₀`
pub fn refractive_index(medium: &Medium, beam: &Beam) -> f64 {
    1.0 - refractive_index_decrement(medium, beam)
}

/// `1 − n = (λ²/2π)·b·n₀`, evaluated without the cancellation of `1 − n`.
pub fn refractive_index_decrement(medium: &Medium, beam: &Beam) -> f64 {
    beam.wavelength * beam.wavelength / TAU * medium.b() * medium.number_density
}

/// Phase `χ = −n₀·b·λ·D` [rad] picked up relative to vacuum.
pub fn phase_shift(medium: &Medium, beam: &Beam) -> f64 {
    -medium.number_density * medium.b() * beam.wavelength * medium.thickness
}

/// `∫ dΩ S(q(θ))` over the full sphere.
pub fn structure_solid_angle_integral(
    medium: &Medium,
    beam: &Beam,
    quad: &Quadrature,
) -> Result<f64, OpticsError> {
    let k0 = beam.k0();
    quad.integrate(|mu| medium.structure.eval(momentum_transfer(k0, mu)))
}

/// Total diffusion cross section per particle, `σ_d = b² ∫ dΩ S(q)` [Å²].
pub fn diffusion_cross_section(
    medium: &Medium,
    beam: &Beam,
    quad: &Quadrature,
) -> Result<f64, OpticsError> {
    let b = medium.b();
    Ok(b * b * structure_solid_angle_integral(medium, beam, quad)?)
}

/// `Σ = n₀·σ_d·D`: forward intensity falls as `e^{−Σ}`, the coherent
/// amplitude as `e^{−Σ/2}`.
pub fn attenuation_exponent(medium: &Medium, beam: &Beam, quad: &Quadrature) -> Result<f64, OpticsError> {
    Ok(medium.number_density * diffusion_cross_section(medium, beam, quad)? * medium.thickness)
}

/// Dimensionless bracket of the corrected optical potential,
/// `n₀·(b − i·(b²/4π)·k₀·∫dΩ S)` [Å⁻²]; the potential is `(2πħ²/m)` times this.
pub fn complex_optical_potential(
    medium: &Medium,
    beam: &Beam,
    quad: &Quadrature,
) -> Result<Complex64, OpticsError> {
    let b = medium.b();
    let integral = structure_solid_angle_integral(medium, beam, quad)?;
    Ok(Complex64::new(
        medium.number_density * b,
        -medium.number_density * b * b / (4.0 * PI) * beam.k0() * integral,
    ))
}

/// Rates per unit path length [Å⁻¹] on both sides of the optical theorem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpticalBalance {
    /// Intensity decay implied by the imaginary potential,
    /// `2|Im U|/ħ · (m/p₀) = 4π|Im bracket|/k₀`.
    pub coherent_rate: f64,
    /// Trace of the incoherent term over the velocity, `n₀·σ_d`.
    pub incoherent_rate: f64,
    pub residual: f64,
}

/// Compares the attenuation implied by the imaginary potential (evaluated
/// with `potential_quad`) with the incoherent-term trace (evaluated with
/// `incoherent_quad`). The two are the same number up to quadrature error.
pub fn optical_balance(
    medium: &Medium,
    beam: &Beam,
    potential_quad: &Quadrature,
    incoherent_quad: &Quadrature,
) -> Result<OpticalBalance, OpticsError> {
    let u = complex_optical_potential(medium, beam, potential_quad)?;
    let coherent_rate = 4.0 * PI * u.im.abs() / beam.k0();
    let incoherent_rate = medium.number_density * diffusion_cross_section(medium, beam, incoherent_quad)?;
    let scale = coherent_rate.abs().max(incoherent_rate.abs());
    let residual = if scale == 0.0 {
        0.0
    } else {
        (coherent_rate - incoherent_rate).abs() / scale
    };
    Ok(OpticalBalance {
        coherent_rate,
        incoherent_rate,
        residual,
    })
}

/// Relative mismatch of the optical-theorem balance with a shared quadrature.
pub fn optical_theorem_residual(medium: &Medium, beam: &Beam, quad: &Quadrature) -> Result<f64, OpticsError> {
    Ok(optical_balance(medium, beam, quad, quad)?.residual)
}

/// All closed-form predictions for one medium and beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpticsSummary {
    pub refractive_index_minus_one: f64,
    pub chi: f64,
    pub sigma_d: f64,
    pub sigma: f64,
    pub potential_re: f64,
    pub potential_im: f64,
    pub optical_theorem_residual: f64,
    pub contrast: f64,
}

pub fn summarize(medium: &Medium, beam: &Beam, quad: &Quadrature) -> Result<OpticsSummary, OpticsError> {
    let sigma = attenuation_exponent(medium, beam, quad)?;
    let u = complex_optical_potential(medium, beam, quad)?;
    Ok(OpticsSummary {
        refractive_index_minus_one: -refractive_index_decrement(medium, beam),
        chi: phase_shift(medium, beam),
        sigma_d: diffusion_cross_section(medium, beam, quad)?,
        sigma,
        potential_re: u.re,
        potential_im: u.im,
        optical_theorem_residual: optical_theorem_residual(medium, beam, quad)?,
        contrast: (-sigma / 2.0).exp(),
    })
}
