//! Drive the experiment runner from an inline config, as the command line
//! tool does, and print where the artifacts went.

use gaugecenter::run::{run, Overrides, Subcommand};

const CONFIG: &str = r#"
schema = 1
seed = 42
group = "Z2"
beta = 0.5

[geometry]
shape = "cube"
dim = 2
n = 1

[exact]
factorization = true
loops = [{ r = 1, t = 1 }, { r = 1, t = 2 }, { r = 2, t = 2 }]
"#;

fn main() -> gaugecenter::Result<()> {
    let dir = std::env::temp_dir().join(format!("gaugecenter-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("exact.toml");
    std::fs::write(&path, CONFIG)?;
    let outcome = run(Subcommand::Exact, &path, &dir.join("out"), &Overrides::default())?;
    println!("exit code {}", outcome.exit_code());
    for (name, digest) in &outcome.manifest.outputs {
        println!("{name}: {digest}");
    }
    print!("{}", std::fs::read_to_string(dir.join("out/summary.csv"))?);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
