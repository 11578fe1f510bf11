use clap::{Args, Parser, Subcommand};
use ltmor::config::load_config;
use ltmor::experiment::{execute, Mode, Summary};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ltmor",
    about = "Reduced-order wave-equation solver driven by Laplace-domain sampling",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: basis construction, reduced marches, reference, errors
    Run(CommonArgs),
    /// Snapshot solves and basis construction only; writes the basis file
    Offline(CommonArgs),
    /// Reduced marches and errors against a previously written basis file
    Online(CommonArgs),
    /// High-fidelity reference march only
    Reference(CommonArgs),
    /// Error table over the whole sampling-size grid
    Study(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Size of the thread pool used for the snapshot solves
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the configured random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Basis file to write (offline) or read (online); default <out>/basis.bin
    #[arg(long)]
    basis: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, mode) = match cli.command {
        Command::Run(a) => (a, ModeArg::Run),
        Command::Offline(a) => (a, ModeArg::Offline),
        Command::Online(a) => (a, ModeArg::Online),
        Command::Reference(a) => (a, ModeArg::Reference),
        Command::Study(a) => (a, ModeArg::Study),
    };
    match run(args, mode) {
        Ok(summary) => {
            print_summary(&summary);
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

enum ModeArg {
    Run,
    Offline,
    Online,
    Reference,
    Study,
}

fn run(args: CommonArgs, mode: ModeArg) -> ltmor::Result<Summary> {
    let mut cfg = load_config(&args.config)?;
    if let Some(out) = args.out {
        cfg.output.directory = out;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = args.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| ltmor::Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    let mode = match mode {
        ModeArg::Run => Mode::Run,
        ModeArg::Offline => Mode::Offline { basis_out: args.basis },
        ModeArg::Online => Mode::Online { basis_in: args.basis },
        ModeArg::Reference => Mode::Reference,
        ModeArg::Study => Mode::Study,
    };
    execute(&cfg, &mode)
}

fn print_summary(summary: &Summary) {
    for row in &summary.rows {
        println!(
            "R = {:3}  M = {:3}  rel_L2 = {:.3e}  rel_H1 = {:.3e}",
            row.r, row.m, row.l2, row.h1
        );
    }
    if let Some(floor) = &summary.floor {
        match floor.analytic {
            Some(a) => println!(
                "consistency floor: analytic {:.3e}, quadrature {:.3e}",
                a, floor.quadrature
            ),
            None => println!("consistency floor: quadrature {:.3e}", floor.quadrature),
        }
    }
    let t = &summary.timing;
    for (phase, seconds) in t.rows() {
        println!("{phase:18} {seconds:10.3} s");
    }
    if let Some(speed_up) = summary.speed_up {
        println!(
            "speed-up: {:.2}x (high-fidelity {:.3} s vs reduced {:.3} s)",
            speed_up,
            t.hf_total,
            t.rb_total()
        );
    }
    for msg in &summary.messages {
        println!("{msg}");
    }
    println!("reports written to {}", summary.out_dir.display());
}
