use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use gaugecenter::run::{parse_config, RunManifest};
use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("gaugecenter-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn run(sub: &str, config: &str, dir: &Path, extra: &[&str]) -> (i32, String) {
    let cfg = dir.join("config.toml");
    fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gaugecenter"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn records(dir: &Path) -> Vec<Value> {
    fs::read_to_string(dir.join("out/results.jsonl")).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

const EXACT_PLAQUETTE: &str = r#"
schema = 1
group = "Z2"
beta = 0.5

[geometry]
shape = "cube"
dim = 2
n = 1

[exact]
"#;

#[test]
fn exact_golden_holds_tanh_beta() {
    let d = scratch("golden");
    let (code, err) = run("exact", EXACT_PLAQUETTE, &d, &[]);
    assert_eq!(code, 0, "{err}");
    let golden: Value = serde_json::from_str(&fs::read_to_string(d.join("out/golden.json")).unwrap()).unwrap();
    let w = golden["observables"]["plaquette"].as_f64().unwrap();
    assert!((w - 0.5f64.tanh()).abs() < 1e-12, "{w}");
    assert_eq!(golden["group"], "Z2");
    assert_eq!(golden["geometry"]["shape"], "cube");
}

const SIMULATE: &str = r#"
schema = 1
seed = 42
group = "Z2"
beta = 0.5

[geometry]
shape = "grid"
extent = [4, 4]

[sampler]
therm = 100
sweeps = 1000
chains = 2

[simulate]
loops = [{ r = 1, t = 1 }, { r = 2, t = 1 }]
"#;

#[test]
fn simulate_with_a_fixed_seed_is_reproducible() {
    let (a, b) = (scratch("sim-a"), scratch("sim-b"));
    assert_eq!(run("simulate", SIMULATE, &a, &["--threads", "1"]).0, 0);
    assert_eq!(run("simulate", SIMULATE, &b, &["--threads", "1"]).0, 0);
    let digest = |d: &Path| {
        let m: RunManifest = serde_json::from_str(&fs::read_to_string(d.join("out/manifest.json")).unwrap()).unwrap();
        m.outputs
    };
    let (da, db) = (digest(&a), digest(&b));
    assert_eq!(da["summary.csv"], db["summary.csv"]);
    assert_eq!(da["results.jsonl"], db["results.jsonl"]);

    let c = scratch("sim-c");
    assert_eq!(run("simulate", SIMULATE, &c, &["--seed", "7"]).0, 0);
    assert_ne!(digest(&c)["summary.csv"], da["summary.csv"]);

    let recs = records(&a);
    let measurements = recs.iter().filter(|r| r["kind"] == "measurement").count();
    assert_eq!(measurements, 2 * 1000 * 3);
    let csv = fs::read_to_string(a.join("out/summary.csv")).unwrap();
    assert!(csv.starts_with("observable,R,T,re_mean,im_mean,stderr,n_eff"));
}

#[test]
fn wilson_recovers_a_synthetic_string_tension() {
    let cells: Vec<String> = (1..=3)
        .flat_map(|r| (1..=3).map(move |t| (r, t)))
        .map(|(r, t)| format!("{{ r = {r}, t = {t}, mean = {:e}, stderr = 0.0 }}", (-0.3 * (r * t) as f64).exp()))
        .collect();
    let cfg = format!(
        "schema = 1\ngroup = \"Z2\"\nbeta = 1.0\n[geometry]\nshape = \"cube\"\ndim = 2\nn = 1\n[wilson]\nsource = \"table\"\ntable = [{}]\n",
        cells.join(", ")
    );
    let d = scratch("wilson");
    let (code, err) = run("wilson", &cfg, &d, &[]);
    assert_eq!(code, 0, "{err}");
    let fit = records(&d).into_iter().find(|r| r["kind"] == "fit").unwrap();
    let sigma = fit["fit"]["area"]["sigma"].as_f64().unwrap();
    assert!((sigma - 0.3).abs() < 1e-9, "{sigma}");
}

#[test]
fn schema_violations_exit_with_code_two_and_name_the_key() {
    let d = scratch("bad");
    let (code, err) = run("exact", &EXACT_PLAQUETTE.replace("beta = 0.5", "beta = 0.5\ncolour = 3"), &d, &[]);
    assert_eq!(code, 2);
    assert!(err.contains("colour"), "{err}");

    let (code, err) = run("exact", &format!("{SIMULATE}\n[sampler.extra]\n"), &d, &[]);
    assert_eq!(code, 2);
    assert!(err.contains("sampler"), "{err}");

    let (code, _) = run("exact", &EXACT_PLAQUETTE.replace("\"Z2\"", "\"Z1\""), &d, &[]);
    assert_eq!(code, 2);
    let (code, _) = run("corr", EXACT_PLAQUETTE, &d, &[]);
    assert_eq!(code, 2);
    let (code, _) = run("exact", &EXACT_PLAQUETTE.replace("\"Z2\"", "\"SU2\""), &d, &[]);
    assert_eq!(code, 2);
}

#[test]
fn state_cap_exits_with_code_three() {
    let d = scratch("cap");
    let cfg = EXACT_PLAQUETTE.replace("[exact]", "[exact]\nmethod = \"enumerate\"");
    let (code, err) = run("exact", &cfg, &d, &["--cap-states", "100"]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn flat_correlations_exit_with_code_four_after_writing_results() {
    let cfg = r#"
schema = 1
group = "Z2"
beta = 0.0

[geometry]
shape = "grid"
extent = [4, 3]

[corr]
method = "exact"
f = { kind = "plaquette", base = [0, 0], axes = [0, 1] }
g = { kind = "plaquette", base = [0, 0], axes = [0, 1] }
axis = 0
shifts = [1, 2]
"#;
    let d = scratch("corr");
    let (code, _) = run("corr", cfg, &d, &[]);
    assert_eq!(code, 4);
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(d.join("out/manifest.json")).unwrap()).unwrap();
    assert!(m.insufficient.is_some());
    assert_eq!(records(&d).iter().filter(|r| r["kind"] == "point").count(), 2);
}

#[test]
fn manifest_config_parses_back_to_itself() {
    let d = scratch("roundtrip");
    assert_eq!(run("simulate", SIMULATE, &d, &["--seed", "9", "--cap-states", "1000"]).0, 0);
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(d.join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(m.seed, 9);
    assert_eq!(m.config.cap_states, Some(1000));
    let echoed = fs::read_to_string(d.join("out/config.resolved.toml")).unwrap();
    assert_eq!(parse_config(&echoed).unwrap(), m.config);

    // Re-running the echoed config reproduces the outputs.
    let e = scratch("roundtrip-again");
    assert_eq!(run("simulate", &echoed, &e, &[]).0, 0);
    let m2: RunManifest = serde_json::from_str(&fs::read_to_string(e.join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(m2.outputs["summary.csv"], m.outputs["summary.csv"]);
    assert_eq!(m2.config, m.config);
    assert!(m.finished_unix_ms >= m.started_unix_ms);
}

#[test]
fn couple_writes_profile_and_certificates() {
    let cfg = r#"
schema = 1
group = "Z2"
beta = 0.3

[geometry]
shape = "slab"
dim = 2
m = 2
n = 1

[boundary]
mode = "identity"

[couple]
"#;
    let d = scratch("couple");
    let (code, err) = run("couple", cfg, &d, &[]);
    assert_eq!(code, 0, "{err}");
    let r = &records(&d)[0];
    assert!(r["profile"].as_array().unwrap().iter().all(|p| p["rho"].as_f64().unwrap() <= 1.0));
    assert!(r["certificates"].as_array().unwrap().iter().all(|c| c["all_consistent"] == true));
    assert!(r["iterations_used"].as_u64().unwrap() >= 1);
    let csv = fs::read_to_string(d.join("out/summary.csv")).unwrap();
    assert!(csv.starts_with("edge,dist_to_spatial_boundary,rho"));
}
