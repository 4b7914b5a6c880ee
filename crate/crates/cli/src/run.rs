//! Scenario dispatch and output writing.

use std::io::Write;
use std::path::{Path, PathBuf};

use lindoptics::channel::{
    cp_witness, is_completely_positive, tensor_extension_positive, ChannelError, ChoiMatrix, CpVerdict, KrausSet,
    SuperoperatorMap,
};
use lindoptics::io::{self, format_f64};
use lindoptics::lindblad::{
    build_generator, evolve, random_generator, validate_generator, EvolutionConfig, GammaMode, LindbladGenerator,
};
use lindoptics::operator::{c, real_diag, ComplexMatrix, DensityMatrix, Tolerances};
use lindoptics::optics::{
    attenuation_exponent, build_scattering_generator, interferometer_contrast, summarize, wrapped_phase_difference, Beam, Medium, Quadrature,
    StructureFunction,
};
use lindoptics::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::config::{
    parse_config, ConfigError, CpSettings, EvolveSettings, MapSource, Model, NamedMap, OpticsSettings, OutputFormat,
    RunConfig, Scenario, SweepParameter,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Invalid(_) => EXIT_INVALID,
            RunError::Io(_) => EXIT_IO,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub path: PathBuf,
    pub exit_code: i32,
    /// Numeric breaches found during the run; they set exit code 3.
    pub breaches: Vec<String>,
}

/// Reads, parses and rebases a config file, then checks its input files.
pub fn load_config(path: &Path) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    cfg.rebase(path.parent().unwrap_or(Path::new(".")));
    check_inputs(&cfg)?;
    Ok(cfg)
}

fn read_input(key: &str, path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Input {
        key: key.to_string(),
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load_matrix_list(key: &str, path: &Path) -> Result<Vec<ComplexMatrix>, ConfigError> {
    io::parse_matrix_list(&read_input(key, path)?).map_err(|e| ConfigError::Input {
        key: key.to_string(),
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load_matrix(key: &str, path: &Path) -> Result<ComplexMatrix, ConfigError> {
    io::parse_matrix(&read_input(key, path)?).map_err(|e| ConfigError::Input {
        key: key.to_string(),
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load_structure(path: &Option<PathBuf>) -> Result<StructureFunction, ConfigError> {
    match path {
        None => Ok(StructureFunction::default()),
        Some(p) => io::parse_structure_table(&read_input("medium.s_table", p)?).map_err(|e| ConfigError::Input {
            key: "medium.s_table".into(),
            path: p.clone(),
            message: e.to_string(),
        }),
    }
}

/// Every referenced file exists and parses.
pub fn check_inputs(cfg: &RunConfig) -> Result<(), RunError> {
    if let Some(o) = &cfg.optics {
        load_structure(&o.s_table)?;
    }
    if let Some(e) = &cfg.evolve {
        evolve_inputs(e, cfg.seed)?;
    }
    if let Some(c) = &cfg.cp {
        cp_map(c)?;
    }
    Ok(())
}

fn invalid(e: impl std::fmt::Display) -> RunError {
    RunError::Invalid(e.to_string())
}

// ---------------------------------------------------------------- optics

struct Point {
    columns: Vec<&'static str>,
    values: Vec<f64>,
    breach: Option<String>,
}

fn optics_inputs(o: &OpticsSettings, structure: &StructureFunction) -> Result<(Medium, Beam, Quadrature), RunError> {
    let medium = Medium::new(o.n_o, o.b, o.d, structure.clone()).map_err(invalid)?;
    let beam = Beam::new(o.lambda).map_err(invalid)?;
    let quad = Quadrature::new(o.order, o.panels).map_err(invalid)?;
    Ok((medium, beam, quad))
}

fn optics_point(o: &OpticsSettings, structure: &StructureFunction) -> Result<Point, RunError> {
    let (medium, beam, quad) = optics_inputs(o, structure)?;
    let s = summarize(&medium, &beam, &quad).map_err(invalid)?;
    let mut columns = vec![
        "chi",
        "refractive_index_minus_one",
        "sigma_d",
        "Sigma",
        "potential_re",
        "potential_im",
        "optical_theorem_residual",
        "contrast",
    ];
    let mut values = vec![
        s.chi,
        s.refractive_index_minus_one,
        s.sigma_d,
        s.sigma,
        s.potential_re,
        s.potential_im,
        s.optical_theorem_residual,
        s.contrast,
    ];
    let mut breach = None;
    if let Some(n_dirs) = o.n_dirs {
        let sc = build_scattering_generator(&medium, &beam, n_dirs, &quad).map_err(invalid)?;
        let sigma = attenuation_exponent(&medium, &beam, &sc.quadrature).map_err(invalid)?;
        let config = EvolutionConfig {
            monitor_every: usize::MAX,
            ..EvolutionConfig::new(sc.generator.default_dt().min(o.s_final), o.s_final, o.integrator)
        };
        let traj = evolve(&sc.generator, &sc.initial_state(), &config).map_err(invalid)?;
        let last = traj.last();
        let m = traj.monitors.last().expect("final state is recorded");
        columns.extend(["forward_population", "forward_closed_form", "trace_dev", "min_eig"]);
        values.extend([
            last.population(sc.forward_index),
            (-sigma * o.s_final).exp(),
            m.trace_dev,
            m.min_eig,
        ]);
        if let Some(b) = traj.breaches.first() {
            breach = Some(format!("positivity breach at s = {}: min eigenvalue {}", b.time, b.min_eig));
        }
    }
    Ok(Point { columns, values, breach })
}

fn interferometer_point(o: &OpticsSettings, structure: &StructureFunction) -> Result<Point, RunError> {
    let (medium, beam, quad) = optics_inputs(o, structure)?;
    let r = interferometer_contrast(&medium, &beam, &quad, o.integrator).map_err(invalid)?;
    Ok(Point {
        columns: vec!["chi", "contrast", "chi_closed_form", "contrast_closed_form", "phase_error", "Sigma"],
        values: vec![
            r.chi,
            r.contrast,
            r.chi_closed_form,
            r.contrast_closed_form,
            wrapped_phase_difference(r.chi, r.chi_closed_form),
            r.sigma,
        ],
        breach: None,
    })
}

fn with_parameter(o: &OpticsSettings, p: SweepParameter, value: f64) -> OpticsSettings {
    let mut o = o.clone();
    match p {
        SweepParameter::NumberDensity => o.n_o = value,
        SweepParameter::ScatteringLength => o.b = value,
        SweepParameter::Thickness => o.d = value,
        SweepParameter::Wavelength => o.lambda = value,
    }
    o
}

/// Evaluates `f` on every index with up to `jobs` threads; results keep index order.
fn fan_out<T: Send>(n: usize, jobs: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let jobs = jobs.clamp(1, n.max(1));
    if jobs == 1 {
        return (0..n).map(f).collect();
    }
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        let f = &f;
        let handles: Vec<_> = (0..jobs)
            .map(|j| scope.spawn(move || (j..n).step_by(jobs).map(|i| (i, f(i))).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            for (i, v) in h.join().expect("worker panicked") {
                slots[i] = Some(v);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every index evaluated")).collect()
}

struct Report {
    meta: Vec<(String, Value)>,
    csv_body: String,
    json: Map<String, Value>,
    breaches: Vec<String>,
}

fn table_csv(columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn optics_report(cfg: &RunConfig, jobs: usize) -> Result<Report, RunError> {
    let o = cfg.optics.as_ref().expect("optics settings");
    let structure = load_structure(&o.s_table)?;
    let point = if cfg.scenario == Scenario::Interferometer {
        interferometer_point
    } else {
        optics_point
    };
    let settings: Vec<(Option<f64>, OpticsSettings)> = match &cfg.sweep {
        None => vec![(None, o.clone())],
        Some(s) => s.values.iter().map(|&v| (Some(v), with_parameter(o, s.parameter, v))).collect(),
    };
    let points = fan_out(settings.len(), jobs, |i| point(&settings[i].1, &structure))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let sweep_name = cfg.sweep.as_ref().map(|s| s.parameter.name());
    let mut columns: Vec<&str> = sweep_name.into_iter().collect();
    columns.extend(points[0].columns.iter().copied());
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    let mut breaches = Vec::new();
    for ((swept, _), p) in settings.iter().zip(&points) {
        let mut values: Vec<f64> = swept.iter().copied().collect();
        values.extend(&p.values);
        if values.iter().any(|v| !v.is_finite()) {
            breaches.push(format!("non-finite result at row {}", rows.len()));
        }
        if let Some(b) = &p.breach {
            breaches.push(b.clone());
        }
        rows.push(values.iter().map(|&v| format_f64(v)).collect());
        let obj: Map<String, Value> = columns.iter().map(|c| c.to_string()).zip(values.iter().map(|&v| json!(v))).collect();
        json_rows.push(Value::Object(obj));
    }
    let mut json = Map::new();
    json.insert("rows".into(), Value::Array(json_rows));
    Ok(Report {
        meta: Vec::new(),
        csv_body: table_csv(&columns, &rows),
        json,
        breaches,
    })
}

// ---------------------------------------------------------------- evolve

fn excited_state(d: usize) -> DensityMatrix {
    let mut diag = vec![0.0; d];
    diag[d - 1] = 1.0;
    DensityMatrix::new(real_diag(&diag), Tolerances::default()).expect("basis projector")
}

fn evolve_inputs(e: &EvolveSettings, seed: u64) -> Result<(LindbladGenerator, DensityMatrix), RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w0_file = match &e.w0 {
        Some(p) => Some(
            DensityMatrix::new(load_matrix("evolution.w0", p)?, Tolerances::default())
                .map_err(|err| invalid(format!("evolution.w0: {err}")))?,
        ),
        None => None,
    };
    let (gen, default_w0) = match &e.model {
        Model::AmplitudeDamping { rate } => {
            let mut l = ComplexMatrix::zeros(2, 2);
            l[(0, 1)] = c(rate.sqrt(), 0.0);
            let zero = ComplexMatrix::zeros(2, 2);
            let gen = build_generator(zero.clone(), zero, vec![l], GammaMode::Derived).map_err(invalid)?;
            (gen, excited_state(2))
        }
        Model::Random { dim, n_ls, scale } => {
            let gen = random_generator(&mut rng, *dim, *n_ls, *scale);
            let w = sample::density_matrix(&mut rng, *dim);
            (gen, w)
        }
        Model::Files { h0, v, gamma, ls } => {
            let h0 = h0.as_ref().map(|p| load_matrix("evolution.h0", p)).transpose()?;
            let v = v.as_ref().map(|p| load_matrix("evolution.v", p)).transpose()?;
            let gamma = gamma.as_ref().map(|p| load_matrix("evolution.gamma", p)).transpose()?;
            let ls = ls.as_ref().map(|p| load_matrix_list("evolution.ls", p)).transpose()?;
            let d = h0
                .as_ref()
                .or(v.as_ref())
                .or(gamma.as_ref())
                .or(ls.as_ref().and_then(|l| l.first()))
                .map(|m| m.nrows())
                .or(w0_file.as_ref().map(|w| w.dim()))
                .expect("config requires at least one matrix");
            let zero = ComplexMatrix::zeros(d, d);
            let mode = match gamma {
                Some(g) => GammaMode::Explicit(g),
                None => GammaMode::Derived,
            };
            let gen = build_generator(
                h0.unwrap_or_else(|| zero.clone()),
                v.unwrap_or_else(|| zero.clone()),
                ls.unwrap_or_default(),
                mode,
            )
            .map_err(invalid)?;
            let mut psi = vec![c(0.0, 0.0); d];
            psi[0] = c(1.0, 0.0);
            (gen, DensityMatrix::pure(&psi).expect("basis vector"))
        }
    };
    let w0 = w0_file.unwrap_or(default_w0);
    if w0.dim() != gen.dim() {
        return Err(invalid(format!(
            "evolution.w0 is {0}x{0} but the generator acts on dimension {1}",
            w0.dim(),
            gen.dim()
        )));
    }
    Ok((gen, w0))
}

fn evolve_report(cfg: &RunConfig) -> Result<Report, RunError> {
    let e = cfg.evolve.as_ref().expect("evolve settings");
    let (gen, w0) = evolve_inputs(e, cfg.seed)?;
    let dt = e.dt.unwrap_or_else(|| gen.default_dt().min(e.t_final));
    let config = EvolutionConfig {
        dt,
        t_final: e.t_final,
        integrator: e.integrator,
        renormalize: e.renormalize,
        monitor_every: e.monitor_every,
    };
    let traj = evolve(&gen, &w0, &config).map_err(invalid)?;
    let report = validate_generator(&gen, lindoptics::lindblad::GAMMA_PSD_TOL, 8, cfg.seed);
    let meta = vec![
        ("dt_used".to_string(), json!(dt)),
        ("gamma_residual".to_string(), json!(report.gamma_residual)),
        ("trace_rate_bound".to_string(), json!(report.trace_rate_bound)),
        ("conserves_trace".to_string(), json!(report.conserves_trace)),
    ];
    let breaches = traj
        .breaches
        .iter()
        .map(|b| format!("positivity breach at t = {}: min eigenvalue {}", b.time, b.min_eig))
        .collect();
    let mut json = Map::new();
    if let Value::Object(t) = io::trajectory_json(&traj, cfg.output.include_states) {
        json.extend(t);
    }
    Ok(Report {
        meta,
        csv_body: io::trajectory_csv(&traj, cfg.output.include_states),
        json,
        breaches,
    })
}

// ---------------------------------------------------------------- cp-check

fn square_root_dim(key: &str, n: usize) -> Result<usize, RunError> {
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(invalid(format!("{key}: a {n}x{n} matrix is not d²xd²")));
    }
    Ok(d)
}

fn cp_map(c: &CpSettings) -> Result<(SuperoperatorMap, Option<KrausSet>), RunError> {
    Ok(match &c.source {
        MapSource::Named { map, dim } => (
            match map {
                NamedMap::Identity => SuperoperatorMap::identity(*dim),
                NamedMap::Transpose => SuperoperatorMap::transpose(*dim),
                NamedMap::Depolarizing => SuperoperatorMap::depolarizing(*dim),
            },
            None,
        ),
        MapSource::Kraus(p) => {
            let k = KrausSet::new(load_matrix_list("cp.kraus", p)?).map_err(invalid)?;
            (SuperoperatorMap::from_kraus(&k), Some(k))
        }
        MapSource::Superoperator(p) => {
            let m = load_matrix("cp.superoperator", p)?;
            let d = square_root_dim("cp.superoperator", m.nrows())?;
            (SuperoperatorMap::from_matrix(d, m).map_err(invalid)?, None)
        }
        MapSource::Choi(p) => {
            let m = load_matrix("cp.choi", p)?;
            let d = square_root_dim("cp.choi", m.nrows())?;
            (ChoiMatrix::from_matrix(d, m).map_err(invalid)?.to_superoperator(), None)
        }
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

fn cp_report(cfg: &RunConfig) -> Result<Report, RunError> {
    let c = cfg.cp.as_ref().expect("cp settings");
    let (map, kraus) = cp_map(c)?;
    let verdict = is_completely_positive(&map, c.tol).map_err(|e| match e {
        ChannelError::NotHermiticityPreserving(r) => {
            invalid(format!("map is not Hermiticity preserving (Choi residual {r})"))
        }
        e => invalid(e),
    })?;
    let witness = cp_witness(&map, c.tol);
    let extension = c
        .extension_n
        .map(|n| tensor_extension_positive(&map, n, c.samples, cfg.seed))
        .transpose()
        .map_err(invalid)?;
    let verdict_name = match verdict {
        CpVerdict::Cp { .. } => "CP",
        CpVerdict::NotCp { .. } => "NotCP",
    };
    let witness_value = witness.as_ref().map(|w| w.recompute(&map).re);
    let columns = [
        "verdict",
        "min_choi_eig",
        "witness_n",
        "witness_value",
        "extension_n",
        "extension_min_eig",
        "trace_preservation_residual",
    ];
    let row = vec![
        verdict_name.to_string(),
        format_f64(verdict.min_eig()),
        witness.as_ref().map(|w| w.n.to_string()).unwrap_or_default(),
        opt(witness_value),
        extension.as_ref().map(|x| x.n.to_string()).unwrap_or_default(),
        opt(extension.as_ref().map(|x| x.min_eig)),
        opt(kraus.as_ref().map(|k| k.trace_preservation_residual())),
    ];
    let mut json = Map::new();
    json.insert("verdict".into(), json!(verdict_name));
    json.insert("min_choi_eig".into(), json!(verdict.min_eig()));
    json.insert(
        "witness".into(),
        witness
            .as_ref()
            .map(|w| json!({"n": w.n, "value": w.value, "recomputed": witness_value}))
            .unwrap_or(Value::Null),
    );
    json.insert(
        "extension".into(),
        extension
            .as_ref()
            .map(|x| json!({"n": x.n, "samples": x.samples, "min_eig": x.min_eig, "max_entangled_included": x.max_entangled_included}))
            .unwrap_or(Value::Null),
    );
    json.insert(
        "trace_preservation_residual".into(),
        json!(kraus.as_ref().map(|k| k.trace_preservation_residual())),
    );
    Ok(Report {
        meta: Vec::new(),
        csv_body: table_csv(&columns, &[row]),
        json,
        breaches: Vec::new(),
    })
}

// ---------------------------------------------------------------- output

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "none".into(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => format_f64(f),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(a) => out.push((prefix.to_string(), a.iter().map(scalar).collect::<Vec<_>>().join(", "))),
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn render(cfg: &RunConfig, report: &Report, format: OutputFormat) -> String {
    let resolved = cfg.resolved();
    match format {
        OutputFormat::Csv => {
            let mut entries = Vec::new();
            flatten("", &resolved, &mut entries);
            let mut out = String::new();
            for (k, v) in entries {
                out.push_str(&format!("# {k} = {v}\n"));
            }
            for (k, v) in &report.meta {
                out.push_str(&format!("# result.{k} = {}\n", scalar(v)));
            }
            out.push_str(&report.csv_body);
            out
        }
        OutputFormat::Json => {
            let mut obj = Map::new();
            obj.insert("config".into(), resolved);
            if !report.meta.is_empty() {
                obj.insert("meta".into(), Value::Object(report.meta.iter().cloned().collect()));
            }
            obj.extend(report.json.clone());
            let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("serializable");
            s.push('\n');
            s
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), RunError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e: std::io::Error| RunError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Loads `config_path`, applies the overrides, runs the scenario and writes
/// the result file.
pub fn run(config_path: &Path, overrides: &Overrides) -> Result<RunOutcome, RunError> {
    let mut cfg = load_config(config_path)?;
    if let Some(f) = overrides.format {
        cfg.output.format = f;
    }
    if let Some(s) = overrides.seed {
        cfg.seed = s;
    }
    let out_path = match (&overrides.output, &cfg.output.path) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) if p.is_relative() => config_path.parent().unwrap_or(Path::new(".")).join(p),
        (None, Some(p)) => p.clone(),
        (None, None) => config_path.with_extension(cfg.output.format.extension()),
    };
    let jobs = overrides.jobs.unwrap_or(1);
    let report = match cfg.scenario {
        Scenario::Optics | Scenario::Interferometer => optics_report(&cfg, jobs)?,
        Scenario::Evolve => evolve_report(&cfg)?,
        Scenario::CpCheck => cp_report(&cfg)?,
    };
    write_atomic(&out_path, &render(&cfg, &report, cfg.output.format))?;
    let exit_code = if report.breaches.is_empty() { EXIT_OK } else { EXIT_NUMERIC };
    Ok(RunOutcome {
        path: out_path,
        exit_code,
        breaches: report.breaches,
    })
}
