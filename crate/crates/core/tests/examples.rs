//! Every quick example runs to completion. `cargo test` builds the example
//! binaries next to the test executables.

use std::path::PathBuf;
use std::process::Command;

const QUICK: &[&str] = &[
    "groups_and_reps",
    "lattice_geometry",
    "heat_bath_wilson",
    "exact_area_law",
    "center_symmetry",
    "link_norm",
    "optimal_coupling",
    "cube_coupling",
    "gradient_identity",
    "potential_fit",
    "correlation_decay",
    "run_config",
];

fn examples_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().join("examples")
}

#[test]
fn quick_examples_run() {
    let dir = examples_dir();
    for name in QUICK {
        let path = dir.join(format!("{name}{}", std::env::consts::EXE_SUFFIX));
        assert!(path.exists(), "{} was not built", path.display());
        let out = Command::new(&path).output().unwrap();
        assert!(out.status.success(), "{name} failed:\n{}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stdout.is_empty(), "{name} printed nothing");
    }
}

#[test]
fn slab_coupling_example_runs_briefly() {
    let path = examples_dir().join(format!("slab_coupling{}", std::env::consts::EXE_SUFFIX));
    let out = Command::new(&path).arg("2").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
