//! Browser bindings. Each export returns a JSON string; the plain `*_json`
//! functions carry the logic so they can be tested natively.

use lindoptics::channel::{choi_of, cp_witness, is_completely_positive, SuperoperatorMap, DEFAULT_CP_TOL};
use lindoptics::lindblad::{build_generator, evolve, EvolutionConfig, GammaMode, Integrator};
use lindoptics::operator::{c, hermitian_eigenvalues, hermitize, real_diag, ComplexMatrix, DensityMatrix, Tolerances};
use lindoptics::optics::{interferometer_contrast, Beam, Medium, Quadrature, StructureFunction};
use serde_json::json;
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 400;

/// Phase and contrast after one traversal for `points` thicknesses spaced
/// logarithmically in `[d_min, d_max]` (Å).
pub fn interferometer_sweep_json(
    n_o: f64,
    b_fm: f64,
    lambda: f64,
    d_min: f64,
    d_max: f64,
    points: usize,
) -> Result<String, String> {
    if !(d_min > 0.0 && d_max >= d_min) {
        return Err("need 0 < D_min <= D_max".into());
    }
    if !(2..=64).contains(&points) {
        return Err("points must be in 2..=64".into());
    }
    // the step count grows with |chi|; keep the page responsive
    if (n_o * b_fm * 1e-5 * lambda * d_max).abs() > 200.0 {
        return Err("|chi| at D_max exceeds 200 rad; lower D_max".into());
    }
    let beam = Beam::new(lambda).map_err(|e| e.to_string())?;
    let quad = Quadrature::default();
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let d = d_min * (d_max / d_min).powf(i as f64 / (points - 1) as f64);
        let m = Medium::new(n_o, b_fm, d, StructureFunction::default()).map_err(|e| e.to_string())?;
        let r = interferometer_contrast(&m, &beam, &quad, Integrator::Rk4).map_err(|e| e.to_string())?;
        rows.push(json!({
            "D": d,
            "chi": r.chi,
            "chi_closed_form": r.chi_closed_form,
            "contrast": r.contrast,
            "contrast_closed_form": r.contrast_closed_form,
            "Sigma": r.sigma,
        }));
    }
    Ok(json!({ "rows": rows }).to_string())
}

/// Excited-state population of a decaying two-level system next to `e^{−γt}`.
pub fn amplitude_damping_json(gamma: f64, t_final: f64, dt: f64, integrator: &str) -> Result<String, String> {
    if !(gamma > 0.0 && t_final > 0.0 && dt > 0.0 && dt <= t_final) {
        return Err("need gamma > 0, t_final > 0 and 0 < dt <= t_final".into());
    }
    if t_final / dt > 1e6 {
        return Err("more than 10^6 steps; increase dt".into());
    }
    let integrator: Integrator = integrator.parse()?;
    let mut l = ComplexMatrix::zeros(2, 2);
    l[(0, 1)] = c(gamma.sqrt(), 0.0);
    let zero = ComplexMatrix::zeros(2, 2);
    let gen = build_generator(zero.clone(), zero, vec![l], GammaMode::Derived).map_err(|e| e.to_string())?;
    let w0 = DensityMatrix::new(real_diag(&[0.0, 1.0]), Tolerances::default()).map_err(|e| e.to_string())?;
    let steps = (t_final / dt).ceil() as usize;
    let config = EvolutionConfig {
        monitor_every: (steps / MAX_POINTS).max(1),
        ..EvolutionConfig::new(dt, t_final, integrator)
    };
    let traj = evolve(&gen, &w0, &config).map_err(|e| e.to_string())?;
    let population: Vec<f64> = traj.states.iter().map(|w| w.population(1)).collect();
    let exact: Vec<f64> = traj.times.iter().map(|t| (-gamma * t).exp()).collect();
    let max_error = population.iter().zip(&exact).map(|(p, e)| (p - e).abs()).fold(0.0, f64::max);
    Ok(json!({
        "t": traj.times,
        "population": population,
        "exact": exact,
        "min_eig": traj.monitors.iter().map(|m| m.min_eig).collect::<Vec<_>>(),
        "max_error": max_error,
    })
    .to_string())
}

/// CP check of `(1 − p)·base + p·transpose` with base `identity` or
/// `depolarizing`.
pub fn cp_mixture_json(p: f64, base: &str, dim: usize) -> Result<String, String> {
    if !(0.0..=1.0).contains(&p) {
        return Err("p must lie in [0, 1]".into());
    }
    if !(1..=6).contains(&dim) {
        return Err("dimension must be in 1..=6".into());
    }
    let base_map = match base {
        "identity" => SuperoperatorMap::identity(dim),
        "depolarizing" => SuperoperatorMap::depolarizing(dim),
        other => return Err(format!("unknown base map `{other}`")),
    };
    let map = base_map
        .combine(1.0 - p, &SuperoperatorMap::transpose(dim), p)
        .map_err(|e| e.to_string())?;
    let verdict = is_completely_positive(&map, DEFAULT_CP_TOL).map_err(|e| e.to_string())?;
    let spectrum = hermitian_eigenvalues(&hermitize(choi_of(&map).matrix()));
    let witness = cp_witness(&map, DEFAULT_CP_TOL).map(|w| json!({"n": w.n, "value": w.recompute(&map).re}));
    Ok(json!({
        "cp": verdict.is_cp(),
        "min_eig": verdict.min_eig(),
        "choi_spectrum": spectrum,
        "witness": witness,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn interferometer_sweep(
    n_o: f64,
    b_fm: f64,
    lambda: f64,
    d_min: f64,
    d_max: f64,
    points: usize,
) -> Result<String, JsError> {
    interferometer_sweep_json(n_o, b_fm, lambda, d_min, d_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn amplitude_damping(gamma: f64, t_final: f64, dt: f64, integrator: &str) -> Result<String, JsError> {
    amplitude_damping_json(gamma, t_final, dt, integrator).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn cp_mixture(p: f64, base: &str, dim: usize) -> Result<String, JsError> {
    cp_mixture_json(p, base, dim).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: Result<String, String>) -> Value {
        serde_json::from_str(&s.unwrap()).unwrap()
    }

    #[test]
    fn interferometer_matches_closed_form() {
        let v = parse(interferometer_sweep_json(1e-3, 5.0, 2.0, 1e5, 1e7, 3));
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 3);
        let mid = &rows[1];
        assert!((mid["D"].as_f64().unwrap() - 1e6).abs() < 1e-6);
        assert!((mid["chi"].as_f64().unwrap() + 0.1).abs() < 1e-6);
        assert!((mid["contrast"].as_f64().unwrap() - mid["contrast_closed_form"].as_f64().unwrap()).abs() < 1e-9);
        assert!(interferometer_sweep_json(1e-3, 5.0, 2.0, 1e5, 1e12, 3).is_err());
    }

    #[test]
    fn damping_curve() {
        let v = parse(amplitude_damping_json(1.0, 2.0, 1e-3, "rk4"));
        assert!(v["max_error"].as_f64().unwrap() < 1e-9);
        assert!(v["t"].as_array().unwrap().len() <= MAX_POINTS + 2);
        let k = parse(amplitude_damping_json(1.0, 2.0, 1e-2, "kraus_step"));
        assert!(k["max_error"].as_f64().unwrap() > 1e-4);
        assert!(amplitude_damping_json(1.0, 2.0, 1e-3, "euler").is_err());
    }

    #[test]
    fn mixture_boundaries() {
        let v = parse(cp_mixture_json(0.0, "identity", 2));
        assert_eq!(v["cp"], true);
        assert_eq!(v["witness"], Value::Null);
        let v = parse(cp_mixture_json(1.0, "identity", 2));
        assert_eq!(v["cp"], false);
        assert!((v["min_eig"].as_f64().unwrap() + 1.0).abs() < 1e-12);
        assert!(v["witness"]["value"].as_f64().unwrap() < 0.0);
        // p·transpose + (1−p)·depolarizing turns non-CP above p = 1/3
        assert_eq!(parse(cp_mixture_json(0.3, "depolarizing", 2))["cp"], true);
        assert_eq!(parse(cp_mixture_json(0.36, "depolarizing", 2))["cp"], false);
        assert!(cp_mixture_json(1.5, "identity", 2).is_err());
    }
}
