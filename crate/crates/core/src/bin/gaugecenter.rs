use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use gaugecenter::run::{run, Overrides, Subcommand};

#[derive(Parser)]
#[command(name = "gaugecenter", version, about = "Lattice gauge theory experiments driven by TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Monte Carlo estimates of Wilson loops
    Simulate(Common),
    /// Exact expectations and golden files for small cyclic-group lattices
    Exact(Common),
    /// Wilson loop table and potential fits
    Wilson(Common),
    /// Chain-variable expectations over boundary condition ensembles
    CenterTest(Common),
    /// Iterated slab couplings, or randomized coupling-lemma checks
    Couple(Common),
    /// Correlation decay scans
    Corr(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Largest enumerated state space.
    #[arg(long, value_name = "U64")]
    cap_states: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (cmd, common) = match cli.command {
        Command::Simulate(c) => (Subcommand::Simulate, c),
        Command::Exact(c) => (Subcommand::Exact, c),
        Command::Wilson(c) => (Subcommand::Wilson, c),
        Command::CenterTest(c) => (Subcommand::CenterTest, c),
        Command::Couple(c) => (Subcommand::Couple, c),
        Command::Corr(c) => (Subcommand::Corr, c),
    };
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let ov = Overrides { seed: common.seed, cap_states: common.cap_states, threads: common.threads };
    match run(cmd, &common.config, &common.out, &ov) {
        Ok(outcome) => {
            if let Some(why) = &outcome.output.insufficient {
                eprintln!("warning: statistically insufficient: {why}");
            }
            eprintln!("wrote {}", common.out.display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
