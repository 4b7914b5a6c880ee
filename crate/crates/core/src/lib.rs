//! Completely positive dynamics for a one-particle statistical operator.
//!
//! * [`operator`]: dense operators, validated density matrices and the
//!   explicit Fock-sector expectation value.
//! * [`channel`]: superoperator, Choi and Kraus forms of linear maps on
//!   operators, complete-positivity decisions and violation witnesses.
//! * [`lindblad`]: generators of Lindblad form, the exactly positive
//!   first-order Kraus step, RK4 integration and trajectories.
//! * [`optics`]: refractive index, phase shift, diffuse-scattering
//!   attenuation and the optical-theorem balance for neutrons in a
//!   homogeneous medium, plus Lindblad scenarios built from them.
//! * [`io`]: plain-text matrix and structure-function formats and
//!   trajectory export.

pub mod channel;
pub mod io;
pub mod lindblad;
pub mod operator;
pub mod optics;
pub mod sample;

pub use num_complex::Complex64;
