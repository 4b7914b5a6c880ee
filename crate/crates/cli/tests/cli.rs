use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lindoptics(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lindoptics"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const OPTICS: &str = "scenario = optics\n[medium]\nn_o = 1e-3\nb = 5\nD = 1e6\n[beam]\nlambda = 2\n";

#[test]
fn identity_kraus_file_is_cp() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "id.txt", "# identity channel\n1+0j 0+0j\n0+0j 1+0j\n");
    write(dir.path(), "cp.conf", "scenario = cp-check\n[cp]\nkraus = id.txt\nextension_n = 2\nsamples = 8\n");
    let out = lindoptics(&["run", "cp.conf", "--format", "json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&dir.path().join("cp.json"));
    assert_eq!(v["verdict"], "CP");
    assert!(v["min_choi_eig"].as_f64().unwrap() >= -1e-12);
    assert_eq!(v["witness"], Value::Null);
    assert!(v["extension"]["min_eig"].as_f64().unwrap() >= -1e-12);
    assert!(v["trace_preservation_residual"].as_f64().unwrap() < 1e-15);
    assert_eq!(v["config"]["cp"]["samples"], 8);
}

#[test]
fn optics_row_matches_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "o.conf", OPTICS);
    let out = lindoptics(&["run", "o.conf", "--output", "res.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("res.csv")).unwrap();
    // resolved config with defaults comes first
    assert!(text.contains("# optics.order = 64\n"));
    assert!(text.contains("# optics.s_table = none\n"));
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 2);
    let header: Vec<&str> = data[0].split(',').collect();
    let row: Vec<f64> = data[1].split(',').map(|x| x.parse().unwrap()).collect();
    let get = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    let b = 5e-5;
    assert!((get("chi") + 0.1).abs() < 1e-12);
    assert!((get("sigma_d") / (4.0 * std::f64::consts::PI * b * b) - 1.0).abs() < 1e-12);
    assert!((get("Sigma") - 1e-3 * get("sigma_d") * 1e6).abs() < 1e-18);
    assert!(get("optical_theorem_residual") <= 1e-12);
    // 17 significant digits
    let mantissa = data[1].split(',').next().unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17);
}

#[test]
fn explicit_gamma_drift_is_data_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "h0.txt", "1 0\n0 -1\n");
    write(dir.path(), "gamma.txt", "0.1 0\n0 0.1\n");
    write(dir.path(), "w0.txt", "0.5 0.5\n0.5 0.5\n");
    write(
        dir.path(),
        "e.conf",
        "scenario = evolve\n[evolution]\nh0 = h0.txt\ngamma = gamma.txt\nw0 = w0.txt\ndt = 0.01\nt_final = 1\nmonitor_every = 10\n",
    );
    let out = lindoptics(&["run", "e.conf"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert!(text.contains("# result.conserves_trace = false"));
    let last = text.lines().last().unwrap();
    let trace_dev: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    // Tr w(t) = e^{−0.2 t}
    assert!((trace_dev - (1.0 - (-0.2f64).exp())).abs() < 1e-9, "{trace_dev}");
}

#[test]
fn positivity_breach_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "b.conf",
        "scenario = evolve\n[evolution]\nmodel = amplitude_damping\nrate = 1\ndt = 3\nt_final = 3\n",
    );
    let out = lindoptics(&["run", "b.conf"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("positivity breach"));
    // results are still written
    assert!(dir.path().join("b.csv").exists());
}

#[test]
fn validation_failures_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write(p, "typo.conf", &OPTICS.replace("lambda", "lamda"));
    let out = lindoptics(&["validate", "typo.conf"], p);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 7") && err.contains("beam.lambda"), "{err}");

    write(p, "neg.conf", &OPTICS.replace("lambda = 2", "lambda = -2"));
    let out = lindoptics(&["run", "neg.conf"], p);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`beam.lambda` must be > 0"));
    assert!(!p.join("neg.csv").exists());

    write(p, "missing.conf", "scenario = optics\n[medium]\nn_o = 1\nb = 1\nD = 1\ns_table = nowhere.txt\n[beam]\nlambda = 1\n");
    let out = lindoptics(&["validate", "missing.conf"], p);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("medium.s_table"));

    write(p, "bad_table.txt", "0 1\n0.5 -1\n");
    write(p, "bt.conf", "scenario = optics\n[medium]\nn_o = 1\nb = 1\nD = 1\ns_table = bad_table.txt\n[beam]\nlambda = 1\n");
    assert_eq!(lindoptics(&["run", "bt.conf"], p).status.code(), Some(2));

    write(p, "nh.txt", "0 1\n0 0\n");
    write(p, "nh.conf", "scenario = evolve\n[evolution]\nh0 = nh.txt\nt_final = 1\n");
    let out = lindoptics(&["validate", "nh.conf"], p);
    assert_eq!(out.status.code(), Some(2));

    write(p, "ok.conf", OPTICS);
    assert_eq!(lindoptics(&["validate", "ok.conf"], p).status.code(), Some(0));
    assert!(!p.join("ok.csv").exists(), "validate must not write output");
}

#[test]
fn s_table_and_scattering_grid() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let mut table = String::from("# q [1/A]  S(q)\n");
    for i in 0..=1000 {
        let q = i as f64 * 0.01;
        table.push_str(&format!("{q} {}\n", 1.0 - 0.5 * (-q * q).exp()));
    }
    write(p, "s.txt", &table);
    write(
        p,
        "g.conf",
        &(OPTICS.replace("D = 1e6\n", "D = 1e8\ns_table = s.txt\n")
            + "[scattering]\nn_dirs = 6\ns_final = 2\n[output]\nformat = json\n"),
    );
    let out = lindoptics(&["run", "g.conf"], p);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&p.join("g.json"));
    let row = &v["rows"][0];
    let pop = row["forward_population"].as_f64().unwrap();
    let closed = row["forward_closed_form"].as_f64().unwrap();
    assert!((pop / closed - 1.0).abs() < 1e-4);
    assert!(row["trace_dev"].as_f64().unwrap() < 1e-9);
    assert!(v["config"]["optics"]["s_table"].as_str().unwrap().ends_with("s.txt"));
}

#[test]
fn output_is_atomic_and_leaves_no_temporaries() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write(p, "o.conf", OPTICS);
    std::fs::write(p.join("o.csv"), "stale").unwrap();
    assert_eq!(lindoptics(&["run", "o.conf"], p).status.code(), Some(0));
    let names: Vec<String> = std::fs::read_dir(p)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(sorted, vec!["o.conf", "o.csv"]);
    assert!(std::fs::read_to_string(p.join("o.csv")).unwrap().starts_with("# "));
}

#[test]
fn seed_changes_random_runs_and_is_embedded() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write(p, "r.conf", "scenario = evolve\nseed = 1\n[evolution]\nmodel = random\ndim = 2\nt_final = 0.1\n");
    lindoptics(&["run", "r.conf", "--output", "a.csv"], p);
    lindoptics(&["run", "r.conf", "--output", "b.csv", "--seed", "2"], p);
    let a = std::fs::read_to_string(p.join("a.csv")).unwrap();
    let b = std::fs::read_to_string(p.join("b.csv")).unwrap();
    assert!(a.contains("# seed = 1\n"));
    assert!(b.contains("# seed = 2\n"));
    assert_ne!(a.lines().last(), b.lines().last());
}

#[test]
fn sweep_rows_follow_the_sweep_order() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write(
        p,
        "s.conf",
        &format!("{OPTICS}[sweep]\nparameter = b\nvalues = 3, -1, 2, 0, 7\n[output]\nformat = json\n"),
    );
    let out = lindoptics(&["run", "s.conf", "--jobs", "4"], p);
    assert_eq!(out.status.code(), Some(0));
    let v = read_json(&p.join("s.json"));
    let bs: Vec<f64> = v["rows"].as_array().unwrap().iter().map(|r| r["b"].as_f64().unwrap()).collect();
    assert_eq!(bs, vec![3.0, -1.0, 2.0, 0.0, 7.0]);
    for r in v["rows"].as_array().unwrap() {
        let b = r["b"].as_f64().unwrap();
        assert!((r["chi"].as_f64().unwrap() - (-0.02 * b)).abs() < 1e-12);
    }
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "conf") {
            let out = lindoptics(&["validate", path.to_str().unwrap()], &dir);
            assert_eq!(out.status.code(), Some(0), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
            n += 1;
        }
    }
    assert!(n >= 4);
}
