//! Master equation of Lindblad form for the one-particle statistical operator
//! (ħ = 1):
//!
//! ```text
//! dw/dt = −i[H₀ + V, w] − {Γ, w} + Σ_k L_k w L_k†
//! ```
//!
//! Trace is conserved exactly when `Γ = ½ Σ L_k† L_k`, since then
//! `Tr(−{Γ, w} + Σ L w L†) = −2 Tr(Γ w) + Tr(Σ L† L w) = 0`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{KrausSet, SuperoperatorMap};
use crate::operator::{
    check_same_dim, check_square_finite, hermiticity_residual, hermitize, max_norm,
    min_eigenvalue, ComplexMatrix, DensityMatrix, OperatorError, StateResiduals,
};
use crate::sample;

/// Hermiticity tolerance for `H₀`, `V` and `Γ`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// `Γ` may dip this far below zero and still count as positive.
pub const GAMMA_PSD_TOL: f64 = 1e-10;
/// Recorded eigenvalues below this raise a positivity-breach warning.
pub const POSITIVITY_BREACH_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LindbladError {
    #[error("{which} is not Hermitian (residual {residual:e})")]
    NotHermitian { which: &'static str, residual: f64 },
    #[error("Gamma is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("{which} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        which: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GammaMode {
    /// `Γ = ½ Σ L† L`
    Derived,
    Explicit(ComplexMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladGenerator {
    h0: ComplexMatrix,
    v: ComplexMatrix,
    gamma: ComplexMatrix,
    ls: Vec<ComplexMatrix>,
    gamma_residual: f64,
    /// `H₀ + V − iΓ`
    effective: ComplexMatrix,
}

fn require_hermitian(which: &'static str, m: &ComplexMatrix) -> Result<(), LindbladError> {
    let residual = hermiticity_residual(m);
    if residual > HERMITIAN_TOL {
        return Err(LindbladError::NotHermitian { which, residual });
    }
    Ok(())
}

fn require_dim(which: &'static str, m: &ComplexMatrix, d: usize) -> Result<(), LindbladError> {
    check_square_finite(m)?;
    if m.nrows() != d {
        return Err(LindbladError::DimensionMismatch {
            which,
            expected: d,
            got: m.nrows(),
        });
    }
    Ok(())
}

/// `½ Σ L† L`
pub fn half_sum_ldag_l(ls: &[ComplexMatrix], d: usize) -> ComplexMatrix {
    ls.iter()
        .fold(ComplexMatrix::zeros(d, d), |acc, l| acc + l.adjoint() * l)
        .scale(0.5)
}

/// Validates the operators and assembles the generator. In derived mode
/// `Γ = ½ Σ L† L`; in explicit mode the given `Γ` is kept and its distance
/// from that value is stored as `gamma_residual`.
pub fn build_generator(
    h0: ComplexMatrix,
    v: ComplexMatrix,
    ls: Vec<ComplexMatrix>,
    gamma_mode: GammaMode,
) -> Result<LindbladGenerator, LindbladError> {
    check_square_finite(&h0)?;
    let d = h0.nrows();
    require_dim("V", &v, d)?;
    for l in &ls {
        require_dim("L", l, d)?;
    }
    require_hermitian("H0", &h0)?;
    require_hermitian("V", &v)?;

    let derived = half_sum_ldag_l(&ls, d);
    let (gamma, gamma_residual) = match gamma_mode {
        GammaMode::Derived => (derived, 0.0),
        GammaMode::Explicit(gamma) => {
            require_dim("Gamma", &gamma, d)?;
            require_hermitian("Gamma", &gamma)?;
            let min_eig = min_eigenvalue(&gamma);
            if min_eig < -GAMMA_PSD_TOL {
                return Err(LindbladError::NotPositive(min_eig));
            }
            let residual = max_norm(&(&gamma - &derived));
            (gamma, residual)
        }
    };
    let effective = &h0 + &v - &gamma * Complex64::i();
    Ok(LindbladGenerator {
        h0,
        v,
        gamma,
        ls,
        gamma_residual,
        effective,
    })
}

impl LindbladGenerator {
    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn h0(&self) -> &ComplexMatrix {
        &self.h0
    }

    pub fn v(&self) -> &ComplexMatrix {
        &self.v
    }

    pub fn gamma(&self) -> &ComplexMatrix {
        &self.gamma
    }

    pub fn ls(&self) -> &[ComplexMatrix] {
        &self.ls
    }

    pub fn gamma_residual(&self) -> f64 {
        self.gamma_residual
    }

    pub fn hamiltonian(&self) -> ComplexMatrix {
        &self.h0 + &self.v
    }

    /// Right-hand side on an arbitrary matrix, written with the effective
    /// non-Hermitian `K = H − iΓ`: `−i K w + i w K† + Σ L w L†`.
    pub fn apply(&self, w: &ComplexMatrix) -> ComplexMatrix {
        let mut out = (&self.effective * w - w * self.effective.adjoint()) * -Complex64::i();
        for l in &self.ls {
            out += l * w * l.adjoint();
        }
        out
    }

    /// `1e−3 / max(‖H₀+V‖, ‖Γ‖, max_k ‖L_k‖²)` with max-norms; `1e−3` for
    /// the zero generator.
    pub fn default_dt(&self) -> f64 {
        let scale = max_norm(&self.hamiltonian())
            .max(max_norm(&self.gamma))
            .max(self.ls.iter().map(|l| max_norm(l).powi(2)).fold(0.0, f64::max));
        if scale > 0.0 {
            1e-3 / scale
        } else {
            1e-3
        }
    }

    /// The generator itself as a superoperator.
    pub fn superoperator(&self) -> SuperoperatorMap {
        SuperoperatorMap::from_fn(self.dim(), |x| self.apply(x))
    }

    /// Kraus operators of one first-order step,
    /// `M₀ = 1 − i·dt·(H₀+V) − dt·Γ` and `M_k = √dt·L_k`.
    pub fn kraus_step_set(&self, dt: f64) -> KrausSet {
        let d = self.dim();
        let m0 = ComplexMatrix::identity(d, d) - &self.effective * Complex64::new(0.0, dt);
        let sdt = Complex64::new(dt.sqrt(), 0.0);
        let mut ops = vec![m0];
        ops.extend(self.ls.iter().map(|l| l * sdt));
        KrausSet::new(ops).expect("non-empty, square")
    }
}

/// `dw/dt` for a validated state.
pub fn rhs(gen: &LindbladGenerator, w: &DensityMatrix) -> Result<ComplexMatrix, LindbladError> {
    check_same_dim(w.matrix(), &gen.h0).map_err(|_| LindbladError::DimensionMismatch {
        which: "state",
        expected: gen.dim(),
        got: w.dim(),
    })?;
    Ok(gen.apply(w.matrix()))
}

fn kraus_step_raw(gen: &LindbladGenerator, w: &ComplexMatrix, dt: f64, renormalize: bool) -> ComplexMatrix {
    let d = gen.dim();
    let m0 = ComplexMatrix::identity(d, d) - &gen.effective * Complex64::new(0.0, dt);
    let mut out = &m0 * w * m0.adjoint();
    for l in &gen.ls {
        out += (l * w * l.adjoint()).scale(dt);
    }
    if renormalize {
        let tr = out.trace().re;
        out /= Complex64::new(tr, 0.0);
    }
    out
}

fn rk4_step_raw(gen: &LindbladGenerator, w: &ComplexMatrix, dt: f64) -> ComplexMatrix {
    let k1 = gen.apply(w);
    let k2 = gen.apply(&(w + &k1 * Complex64::new(dt / 2.0, 0.0)));
    let k3 = gen.apply(&(w + &k2 * Complex64::new(dt / 2.0, 0.0)));
    let k4 = gen.apply(&(w + &k3 * Complex64::new(dt, 0.0)));
    let incr = (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(dt / 6.0, 0.0);
    hermitize(&(w + incr))
}

/// One step of the exactly completely positive first-order map
/// `w ↦ M₀ w M₀† + dt·Σ L w L†`. The trace deviates from one by O(dt²)
/// unless `renormalize` is set.
pub fn step_kraus(gen: &LindbladGenerator, w: &DensityMatrix, dt: f64, renormalize: bool) -> DensityMatrix {
    DensityMatrix::from_evolved(kraus_step_raw(gen, w.matrix(), dt, renormalize), w.tolerances())
}

/// Classical fourth-order Runge–Kutta step, Hermitized afterwards.
pub fn step_rk4(gen: &LindbladGenerator, w: &DensityMatrix, dt: f64) -> DensityMatrix {
    DensityMatrix::from_evolved(rk4_step_raw(gen, w.matrix(), dt), w.tolerances())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Rk4,
    KrausStep,
}

impl std::str::FromStr for Integrator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rk4" => Ok(Integrator::Rk4),
            "kraus_step" | "kraus-step" | "kraus" => Ok(Integrator::KrausStep),
            other => Err(format!("unknown integrator `{other}` (rk4 | kraus_step)")),
        }
    }
}

impl std::fmt::Display for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Integrator::Rk4 => "rk4",
            Integrator::KrausStep => "kraus_step",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    pub integrator: Integrator,
    pub renormalize: bool,
    pub monitor_every: usize,
}

impl EvolutionConfig {
    pub fn new(dt: f64, t_final: f64, integrator: Integrator) -> Self {
        Self {
            dt,
            t_final,
            integrator,
            renormalize: false,
            monitor_every: 1,
        }
    }

    pub fn validate(&self) -> Result<(), LindbladError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(LindbladError::InvalidConfig(format!("dt = {} must be > 0", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(LindbladError::InvalidConfig(format!(
                "t_final = {} must be >= 0",
                self.t_final
            )));
        }
        if self.t_final > 0.0 && self.dt > self.t_final {
            return Err(LindbladError::InvalidConfig(format!(
                "dt = {} exceeds t_final = {}",
                self.dt, self.t_final
            )));
        }
        if self.monitor_every == 0 {
            return Err(LindbladError::InvalidConfig("monitor_every must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monitor {
    pub trace_dev: f64,
    pub min_eig: f64,
    pub herm_residual: f64,
}

impl From<StateResiduals> for Monitor {
    fn from(r: StateResiduals) -> Self {
        Self {
            trace_dev: r.trace_dev(),
            min_eig: r.min_eig,
            herm_residual: r.herm_residual,
        }
    }
}

/// Recorded when a stored state's smallest eigenvalue falls below
/// `−POSITIVITY_BREACH_TOL`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivityBreach {
    pub time: f64,
    pub min_eig: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub monitors: Vec<Monitor>,
    pub breaches: Vec<PositivityBreach>,
}

impl Trajectory {
    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    fn record(&mut self, t: f64, w: DensityMatrix) {
        let monitor = Monitor::from(w.residuals());
        if monitor.min_eig < -POSITIVITY_BREACH_TOL {
            self.breaches.push(PositivityBreach {
                time: t,
                min_eig: monitor.min_eig,
            });
        }
        self.times.push(t);
        self.states.push(w);
        self.monitors.push(monitor);
    }
}

/// Integrates from 0 to `t_final`, storing the initial state, every
/// `monitor_every`-th step and the final state. The last step is shortened
/// when `t_final` is not a multiple of `dt`.
pub fn evolve(
    gen: &LindbladGenerator,
    w0: &DensityMatrix,
    config: &EvolutionConfig,
) -> Result<Trajectory, LindbladError> {
    config.validate()?;
    if w0.dim() != gen.dim() {
        return Err(LindbladError::DimensionMismatch {
            which: "initial state",
            expected: gen.dim(),
            got: w0.dim(),
        });
    }
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        monitors: Vec::new(),
        breaches: Vec::new(),
    };
    traj.record(0.0, w0.clone());
    if config.t_final == 0.0 {
        return Ok(traj);
    }

    let steps = ((config.t_final / config.dt) - 1e-9).ceil().max(1.0) as usize;
    let tol = w0.tolerances();
    let mut w = w0.matrix().clone();
    for k in 1..=steps {
        let t_prev = (k - 1) as f64 * config.dt;
        let (t, h) = if k == steps {
            (config.t_final, config.t_final - t_prev)
        } else {
            (k as f64 * config.dt, config.dt)
        };
        w = match config.integrator {
            Integrator::Rk4 => rk4_step_raw(gen, &w, h),
            Integrator::KrausStep => kraus_step_raw(gen, &w, h, config.renormalize),
        };
        if k % config.monitor_every == 0 || k == steps {
            traj.record(t, DensityMatrix::from_evolved(w.clone(), tol));
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorReport {
    pub gamma_residual: f64,
    /// `max |Tr rhs(w)|` over the sampled states.
    pub trace_rate_bound: f64,
    pub h0_herm_residual: f64,
    pub v_herm_residual: f64,
    pub gamma_herm_residual: f64,
    pub conserves_trace: bool,
}

/// Measures how far the generator is from conserving particle number.
pub fn validate_generator(gen: &LindbladGenerator, tol: f64, samples: usize, seed: u64) -> GeneratorReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = gen.dim();
    let trace_rate_bound = (0..samples.max(1))
        .map(|_| {
            let w = sample::density_matrix(&mut rng, d);
            gen.apply(w.matrix()).trace().norm()
        })
        .fold(0.0, f64::max);
    GeneratorReport {
        gamma_residual: gen.gamma_residual,
        trace_rate_bound,
        h0_herm_residual: hermiticity_residual(&gen.h0),
        v_herm_residual: hermiticity_residual(&gen.v),
        gamma_herm_residual: hermiticity_residual(&gen.gamma),
        conserves_trace: gen.gamma_residual <= tol,
    }
}

/// Seeded random generator with derived `Γ`, for sweeps and property checks.
pub fn random_generator<R: rand::Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    n_ls: usize,
    scale: f64,
) -> LindbladGenerator {
    let h0 = sample::hermitian(rng, d, scale);
    let v = sample::hermitian(rng, d, 0.5 * scale);
    let ls = (0..n_ls)
        .map(|_| sample::ginibre(rng, d, (0.5 * scale).sqrt()))
        .collect();
    build_generator(h0, v, ls, GammaMode::Derived).expect("random operators are consistent")
}
