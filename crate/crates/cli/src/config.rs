//! `key = value` run configuration with `[section]` headers and `#` comments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lindoptics::lindblad::Integrator;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{name}`{}", suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownKey {
        line: usize,
        name: String,
        suggestion: Option<String>,
    },
    #[error("{}`{key}` must be {constraint}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Domain {
        key: String,
        constraint: String,
        line: Option<usize>,
    },
    #[error("`{key}` ({}): {message}", path.display())]
    Input {
        key: String,
        path: PathBuf,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    CpCheck,
    Evolve,
    Optics,
    Interferometer,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::CpCheck => "cp-check",
            Scenario::Evolve => "evolve",
            Scenario::Optics => "optics",
            Scenario::Interferometer => "interferometer",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err("one of csv, json".into()),
        }
    }
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpticsSettings {
    pub n_o: f64,
    /// fm
    pub b: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub lambda: f64,
    /// `None` means S ≡ 1.
    pub s_table: Option<PathBuf>,
    pub order: usize,
    pub panels: usize,
    pub n_dirs: Option<usize>,
    pub s_final: f64,
    pub integrator: Integrator,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum Model {
    Files {
        h0: Option<PathBuf>,
        v: Option<PathBuf>,
        gamma: Option<PathBuf>,
        ls: Option<PathBuf>,
    },
    AmplitudeDamping {
        rate: f64,
    },
    Random {
        dim: usize,
        n_ls: usize,
        scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveSettings {
    #[serde(flatten)]
    pub model: Model,
    pub w0: Option<PathBuf>,
    /// `None` picks the generator's default step.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub integrator: Integrator,
    pub renormalize: bool,
    pub monitor_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedMap {
    Identity,
    Transpose,
    Depolarizing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapSource {
    Kraus(PathBuf),
    Superoperator(PathBuf),
    Choi(PathBuf),
    Named { map: NamedMap, dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpSettings {
    pub source: MapSource,
    pub tol: f64,
    pub extension_n: Option<usize>,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepParameter {
    #[serde(rename = "n_o")]
    NumberDensity,
    #[serde(rename = "b")]
    ScatteringLength,
    #[serde(rename = "D")]
    Thickness,
    #[serde(rename = "lambda")]
    Wavelength,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            Self::NumberDensity => "n_o",
            Self::ScatteringLength => "b",
            Self::Thickness => "D",
            Self::Wavelength => "lambda",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSettings {
    /// Left out of the embedded config.
    #[serde(skip)]
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
    pub include_states: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub optics: Option<OpticsSettings>,
    pub evolve: Option<EvolveSettings>,
    pub cp: Option<CpSettings>,
    pub sweep: Option<Sweep>,
    pub output: OutputSettings,
}

impl RunConfig {
    /// Every setting the run uses, defaults included.
    pub fn resolved(&self) -> Value {
        let mut v = json!({
            "scenario": self.scenario,
            "seed": self.seed,
            "output": self.output,
        });
        if let Some(o) = &self.optics {
            v["optics"] = json!(o);
        }
        if let Some(e) = &self.evolve {
            v["evolution"] = json!(e);
        }
        if let Some(c) = &self.cp {
            v["cp"] = json!(c);
        }
        if let Some(s) = &self.sweep {
            v["sweep"] = json!(s);
        }
        v
    }

    /// Makes relative input paths relative to `dir`.
    pub fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = dir.join(&*path);
                }
            }
        };
        if let Some(o) = &mut self.optics {
            fix(&mut o.s_table);
        }
        if let Some(e) = &mut self.evolve {
            fix(&mut e.w0);
            if let Model::Files { h0, v, gamma, ls } = &mut e.model {
                fix(h0);
                fix(v);
                fix(gamma);
                fix(ls);
            }
        }
        if let Some(c) = &mut self.cp {
            if let MapSource::Kraus(p) | MapSource::Superoperator(p) | MapSource::Choi(p) = &mut c.source {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("", &["scenario", "seed"]),
    ("medium", &["n_o", "b", "D", "s_table"]),
    ("beam", &["lambda"]),
    ("quadrature", &["order", "panels"]),
    ("scattering", &["n_dirs", "s_final"]),
    (
        "evolution",
        &[
            "model", "rate", "dim", "n_ls", "scale", "h0", "v", "gamma", "ls", "w0", "dt",
            "t_final", "integrator", "renormalize", "monitor_every",
        ],
    ),
    ("cp", &["map", "dim", "kraus", "superoperator", "choi", "tol", "extension_n", "samples"]),
    ("sweep", &["parameter", "values"]),
    ("output", &["path", "format", "include_states"]),
];

fn suggest<'a>(name: &str, candidates: impl Iterator<Item = &'a str>) -> Option<String> {
    candidates
        .map(|c| (strsim::levenshtein(name, c), c))
        .filter(|&(d, _)| d <= 2)
        .min()
        .map(|(_, c)| c.to_string())
}

struct Entry {
    value: String,
    line: usize,
}

struct Raw {
    entries: BTreeMap<(String, String), Entry>,
}

impl Raw {
    fn qualified(section: &str, key: &str) -> String {
        if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        }
    }

    fn domain(section: &str, key: &str, constraint: &str, line: Option<usize>) -> ConfigError {
        ConfigError::Domain {
            key: Self::qualified(section, key),
            constraint: constraint.to_string(),
            line,
        }
    }

    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    fn has(&self, section: &str, key: &str) -> bool {
        self.get(section, key).is_some()
    }

    fn parsed<T: FromStr>(&self, section: &str, key: &str, what: &str) -> Result<Option<(T, usize)>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(|v| Some((v, e.line)))
                .map_err(|_| Self::domain(section, key, what, Some(e.line))),
        }
    }

    fn real(&self, section: &str, key: &str, check: fn(f64) -> bool, constraint: &str) -> Result<Option<f64>, ConfigError> {
        match self.parsed::<f64>(section, key, constraint)? {
            None => Ok(None),
            Some((v, _)) if v.is_finite() && check(v) => Ok(Some(v)),
            Some((_, line)) => Err(Self::domain(section, key, constraint, Some(line))),
        }
    }

    fn required_real(&self, section: &str, key: &str, check: fn(f64) -> bool, constraint: &str) -> Result<f64, ConfigError> {
        self.real(section, key, check, constraint)?
            .ok_or_else(|| Self::domain(section, key, &format!("set ({constraint})"), None))
    }

    fn count(&self, section: &str, key: &str, min: usize) -> Result<Option<usize>, ConfigError> {
        let constraint = format!("an integer >= {min}");
        match self.parsed::<usize>(section, key, &constraint)? {
            None => Ok(None),
            Some((v, _)) if v >= min => Ok(Some(v)),
            Some((_, line)) => Err(Self::domain(section, key, &constraint, Some(line))),
        }
    }

    fn boolean(&self, section: &str, key: &str) -> Result<Option<bool>, ConfigError> {
        Ok(self.parsed::<bool>(section, key, "true or false")?.map(|(v, _)| v))
    }

    fn path(&self, section: &str, key: &str) -> Option<PathBuf> {
        self.get(section, key).map(|e| PathBuf::from(&e.value))
    }

    fn integrator(&self) -> Result<Integrator, ConfigError> {
        Ok(self
            .parsed::<Integrator>("evolution", "integrator", "one of rk4, kraus_step")?
            .map(|(v, _)| v)
            .unwrap_or(Integrator::Rk4))
    }
}

fn positive(x: f64) -> bool {
    x > 0.0
}

fn non_negative(x: f64) -> bool {
    x >= 0.0
}

fn any(_: f64) -> bool {
    true
}

fn tokenize(text: &str) -> Result<Raw, ConfigError> {
    let mut entries = BTreeMap::new();
    let mut section = String::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Parse {
                line: line_no,
                message: format!("unterminated section header `{line}`"),
            })?;
            let name = name.trim();
            if !SECTIONS.iter().any(|(s, _)| !s.is_empty() && *s == name) {
                return Err(ConfigError::UnknownKey {
                    line: line_no,
                    name: format!("[{name}]"),
                    suggestion: suggest(name, SECTIONS.iter().map(|(s, _)| *s).filter(|s| !s.is_empty()))
                        .map(|s| format!("[{s}]")),
                });
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: line_no,
            message: format!("expected `key = value`, found `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("expected `key = value`, found `{line}`"),
            });
        }
        let keys = SECTIONS
            .iter()
            .find(|(s, _)| *s == section)
            .map(|(_, k)| *k)
            .expect("section was checked");
        if !keys.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line: line_no,
                name: Raw::qualified(&section, key),
                suggestion: suggest(key, keys.iter().copied()).map(|k| Raw::qualified(&section, &k)),
            });
        }
        let k = (section.clone(), key.to_string());
        if let Some(prev) = entries.get(&k) {
            let prev: &Entry = prev;
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("`{}` already set on line {}", Raw::qualified(&section, key), prev.line),
            });
        }
        entries.insert(
            k,
            Entry {
                value: value.to_string(),
                line: line_no,
            },
        );
    }
    Ok(Raw { entries })
}

fn optics_settings(raw: &Raw, sweep: Option<&Sweep>) -> Result<OpticsSettings, ConfigError> {
    let swept = |name: &str| sweep.is_some_and(|s| s.parameter.name() == name);
    // a swept parameter may be left out of its section
    let req = |section: &str, key: &str, check: fn(f64) -> bool, constraint: &str| -> Result<f64, ConfigError> {
        if swept(key) {
            Ok(raw.real(section, key, check, constraint)?.unwrap_or(f64::NAN))
        } else {
            raw.required_real(section, key, check, constraint)
        }
    };
    Ok(OpticsSettings {
        n_o: req("medium", "n_o", non_negative, ">= 0")?,
        b: req("medium", "b", any, "a finite number")?,
        d: req("medium", "D", non_negative, ">= 0")?,
        lambda: req("beam", "lambda", positive, "> 0")?,
        s_table: raw.path("medium", "s_table"),
        order: raw.count("quadrature", "order", 2)?.unwrap_or(lindoptics::optics::DEFAULT_ORDER),
        panels: raw.count("quadrature", "panels", 1)?.unwrap_or(1),
        n_dirs: raw.count("scattering", "n_dirs", 1)?,
        s_final: raw.real("scattering", "s_final", positive, "> 0")?.unwrap_or(1.0),
        integrator: raw.integrator()?,
    })
}

fn evolve_settings(raw: &Raw) -> Result<EvolveSettings, ConfigError> {
    let model_name = raw.get("evolution", "model").map(|e| (e.value.as_str(), e.line));
    let model = match model_name {
        None | Some(("files", _)) => {
            let m = Model::Files {
                h0: raw.path("evolution", "h0"),
                v: raw.path("evolution", "v"),
                gamma: raw.path("evolution", "gamma"),
                ls: raw.path("evolution", "ls"),
            };
            if !["h0", "v", "gamma", "ls", "w0"].iter().any(|k| raw.has("evolution", k)) {
                return Err(Raw::domain(
                    "evolution",
                    "h0",
                    "set (model = files needs at least one of h0, v, gamma, ls, w0)",
                    None,
                ));
            }
            m
        }
        Some(("amplitude_damping", _)) => Model::AmplitudeDamping {
            rate: raw.required_real("evolution", "rate", positive, "> 0")?,
        },
        Some(("random", _)) => {
            let dim = raw.count("evolution", "dim", 1)?.unwrap_or(2);
            if dim > 64 {
                return Err(Raw::domain("evolution", "dim", "<= 64", raw.get("evolution", "dim").map(|e| e.line)));
            }
            Model::Random {
                dim,
                n_ls: raw.count("evolution", "n_ls", 0)?.unwrap_or(2),
                scale: raw.real("evolution", "scale", positive, "> 0")?.unwrap_or(1.0),
            }
        }
        Some((_, line)) => {
            return Err(Raw::domain("evolution", "model", "one of files, amplitude_damping, random", Some(line)))
        }
    };
    let t_final = raw.required_real("evolution", "t_final", positive, "> 0")?;
    let dt = raw.real("evolution", "dt", positive, "> 0")?;
    if let Some(dt) = dt {
        if dt > t_final {
            return Err(Raw::domain("evolution", "dt", "<= t_final", raw.get("evolution", "dt").map(|e| e.line)));
        }
    }
    Ok(EvolveSettings {
        model,
        w0: raw.path("evolution", "w0"),
        dt,
        t_final,
        integrator: raw.integrator()?,
        renormalize: raw.boolean("evolution", "renormalize")?.unwrap_or(false),
        monitor_every: raw.count("evolution", "monitor_every", 1)?.unwrap_or(1),
    })
}

fn cp_settings(raw: &Raw) -> Result<CpSettings, ConfigError> {
    let given: Vec<&str> = ["map", "kraus", "superoperator", "choi"]
        .into_iter()
        .filter(|k| raw.has("cp", k))
        .collect();
    if given.len() != 1 {
        return Err(Raw::domain(
            "cp",
            "map",
            "set exactly once (one of map, kraus, superoperator, choi)",
            given.get(1).and_then(|k| raw.get("cp", k)).map(|e| e.line),
        ));
    }
    let source = match given[0] {
        "kraus" => MapSource::Kraus(raw.path("cp", "kraus").expect("present")),
        "superoperator" => MapSource::Superoperator(raw.path("cp", "superoperator").expect("present")),
        "choi" => MapSource::Choi(raw.path("cp", "choi").expect("present")),
        _ => {
            let e = raw.get("cp", "map").expect("present");
            let map = match e.value.as_str() {
                "identity" => NamedMap::Identity,
                "transpose" => NamedMap::Transpose,
                "depolarizing" => NamedMap::Depolarizing,
                _ => return Err(Raw::domain("cp", "map", "one of identity, transpose, depolarizing", Some(e.line))),
            };
            MapSource::Named {
                map,
                dim: raw.count("cp", "dim", 1)?.unwrap_or(2),
            }
        }
    };
    Ok(CpSettings {
        source,
        tol: raw.real("cp", "tol", non_negative, ">= 0")?.unwrap_or(lindoptics::channel::DEFAULT_CP_TOL),
        extension_n: raw.count("cp", "extension_n", 1)?,
        samples: raw.count("cp", "samples", 0)?.unwrap_or(16),
    })
}

fn sweep_settings(raw: &Raw, scenario: Scenario) -> Result<Option<Sweep>, ConfigError> {
    let Some(p) = raw.get("sweep", "parameter") else {
        if let Some(e) = raw.get("sweep", "values") {
            return Err(Raw::domain("sweep", "parameter", "set when sweep.values is", Some(e.line)));
        }
        return Ok(None);
    };
    if !matches!(scenario, Scenario::Optics | Scenario::Interferometer) {
        return Err(Raw::domain("sweep", "parameter", "used only with optics or interferometer", Some(p.line)));
    }
    let parameter = match p.value.as_str() {
        "n_o" => SweepParameter::NumberDensity,
        "b" => SweepParameter::ScatteringLength,
        "D" => SweepParameter::Thickness,
        "lambda" => SweepParameter::Wavelength,
        _ => return Err(Raw::domain("sweep", "parameter", "one of n_o, b, D, lambda", Some(p.line))),
    };
    let e = raw
        .get("sweep", "values")
        .ok_or_else(|| Raw::domain("sweep", "values", "set (comma-separated numbers)", None))?;
    let values = e
        .value
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Raw::domain("sweep", "values", "a comma-separated list of numbers", Some(e.line)))?;
    let ok = |v: f64| match parameter {
        SweepParameter::Wavelength => v > 0.0,
        SweepParameter::ScatteringLength => v.is_finite(),
        _ => v >= 0.0,
    };
    if values.is_empty() || !values.iter().all(|&v| v.is_finite() && ok(v)) {
        let constraint = match parameter {
            SweepParameter::Wavelength => "finite and > 0",
            SweepParameter::ScatteringLength => "finite",
            _ => "finite and >= 0",
        };
        return Err(Raw::domain("sweep", "values", constraint, Some(e.line)));
    }
    Ok(Some(Sweep { parameter, values }))
}

/// Parses and validates the text. Input files are only checked by
/// `crate::inputs::load`.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw = tokenize(text)?;
    let scenario_entry = raw
        .get("", "scenario")
        .ok_or_else(|| Raw::domain("", "scenario", "set (one of cp-check, evolve, optics, interferometer)", None))?;
    let scenario = match scenario_entry.value.as_str() {
        "cp-check" => Scenario::CpCheck,
        "evolve" => Scenario::Evolve,
        "optics" => Scenario::Optics,
        "interferometer" => Scenario::Interferometer,
        _ => {
            return Err(Raw::domain(
                "",
                "scenario",
                "one of cp-check, evolve, optics, interferometer",
                Some(scenario_entry.line),
            ))
        }
    };
    let seed = raw.parsed::<u64>("", "seed", "a non-negative integer")?.map(|(v, _)| v).unwrap_or(0);
    let sweep = sweep_settings(&raw, scenario)?;
    let (optics, evolve, cp) = match scenario {
        Scenario::Optics | Scenario::Interferometer => (Some(optics_settings(&raw, sweep.as_ref())?), None, None),
        Scenario::Evolve => (None, Some(evolve_settings(&raw)?), None),
        Scenario::CpCheck => (None, None, Some(cp_settings(&raw)?)),
    };
    let format = match raw.get("output", "format") {
        None => OutputFormat::Csv,
        Some(e) => e
            .value
            .parse()
            .map_err(|c: String| Raw::domain("output", "format", &c, Some(e.line)))?,
    };
    Ok(RunConfig {
        scenario,
        seed,
        optics,
        evolve,
        cp,
        sweep,
        output: OutputSettings {
            path: raw.path("output", "path"),
            format,
            include_states: raw.boolean("output", "include_states")?.unwrap_or(false),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_OPTICS: &str = "scenario = optics\n[medium]\nn_o = 1e-3\nb = 5\nD = 1e6\n[beam]\nlambda = 2\n";

    #[test]
    fn minimal_optics_fills_defaults() {
        let cfg = parse_config(MINIMAL_OPTICS).unwrap();
        let o = cfg.optics.unwrap();
        assert_eq!(o.order, 64);
        assert_eq!(o.panels, 1);
        assert_eq!(o.s_table, None);
        assert_eq!((o.n_o, o.b, o.d, o.lambda), (1e-3, 5.0, 1e6, 2.0));
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.output.format, OutputFormat::Csv);
    }

    #[test]
    fn negative_lambda_is_a_domain_error() {
        let text = MINIMAL_OPTICS.replace("lambda = 2", "lambda = -2");
        match parse_config(&text).unwrap_err() {
            ConfigError::Domain { key, constraint, line } => {
                assert_eq!(key, "beam.lambda");
                assert_eq!(constraint, "> 0");
                assert_eq!(line, Some(7));
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn misspelled_key_gets_a_suggestion() {
        let text = MINIMAL_OPTICS.replace("lambda = 2", "lamda = 2");
        match parse_config(&text).unwrap_err() {
            ConfigError::UnknownKey { line, name, suggestion } => {
                assert_eq!(line, 7);
                assert_eq!(name, "beam.lamda");
                assert_eq!(suggestion.as_deref(), Some("beam.lambda"));
            }
            e => panic!("{e:?}"),
        }
        let err = parse_config("scenario = optics\n[mediun]\n").unwrap_err();
        assert!(err.to_string().contains("did you mean `[medium]`"), "{err}");
        let err = parse_config("scenario = optics\nzzzzzz = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { suggestion: None, .. }));
    }

    #[test]
    fn syntax_errors_name_the_line() {
        assert!(matches!(parse_config("scenario optics\n"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(
            parse_config("scenario = optics\n[medium\n"),
            Err(ConfigError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("scenario = optics\nscenario = evolve\n"),
            Err(ConfigError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn missing_required_key() {
        let text = MINIMAL_OPTICS.replace("D = 1e6\n", "");
        match parse_config(&text).unwrap_err() {
            ConfigError::Domain { key, line, .. } => {
                assert_eq!(key, "medium.D");
                assert_eq!(line, None);
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn evolve_and_cp_sections() {
        let cfg = parse_config(
            "scenario = evolve\n[evolution]\nmodel = amplitude_damping\nrate = 0.5\nt_final = 2\nintegrator = kraus_step\n",
        )
        .unwrap();
        let e = cfg.evolve.unwrap();
        assert_eq!(e.model, Model::AmplitudeDamping { rate: 0.5 });
        assert_eq!(e.integrator, Integrator::KrausStep);
        assert_eq!(e.dt, None);
        assert!(parse_config("scenario = evolve\n[evolution]\nt_final = 1\n").is_err());
        assert!(parse_config("scenario = evolve\n[evolution]\nmodel = random\nt_final = 1\ndt = 2\n").is_err());

        let cfg = parse_config("scenario = cp-check\n[cp]\nmap = transpose\nextension_n = 2\n").unwrap();
        let c = cfg.cp.unwrap();
        assert_eq!(c.source, MapSource::Named { map: NamedMap::Transpose, dim: 2 });
        assert_eq!(c.extension_n, Some(2));
        assert!(parse_config("scenario = cp-check\n[cp]\nmap = identity\nkraus = k.txt\n").is_err());
    }

    #[test]
    fn sweep_values() {
        let text = format!("{MINIMAL_OPTICS}[sweep]\nparameter = D\nvalues = 1e5, 1e6,1e7\n");
        let s = parse_config(&text).unwrap().sweep.unwrap();
        assert_eq!(s.parameter, SweepParameter::Thickness);
        assert_eq!(s.values, vec![1e5, 1e6, 1e7]);
        let bad = format!("{MINIMAL_OPTICS}[sweep]\nparameter = lambda\nvalues = 1, -1\n");
        assert!(parse_config(&bad).is_err());
        // swept parameter need not appear in its section
        let text = "scenario = optics\n[medium]\nn_o = 1e-3\nb = 5\n[beam]\nlambda = 2\n[sweep]\nparameter = D\nvalues = 1\n";
        assert!(parse_config(text).is_ok());
    }

    #[test]
    fn resolved_config_lists_defaults() {
        let v = parse_config(MINIMAL_OPTICS).unwrap().resolved();
        assert_eq!(v["optics"]["order"], 64);
        assert_eq!(v["optics"]["D"], 1e6);
        assert_eq!(v["scenario"], "optics");
        assert!(v.get("evolution").is_none());
    }
}
