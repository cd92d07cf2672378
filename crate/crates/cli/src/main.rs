use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twopt_cli::{mso_check_equiv, mso_normalize, run_criterion, solve, validate, CommandOutput, Exit, CRITERIA};

#[derive(Parser)]
#[command(name = "twopt", version, about = "Optimum-width tree decompositions through dealternated separation forests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a decomposition against its graph.
    Validate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        td: PathBuf,
    },
    /// Rebuild a valid decomposition at optimum width.
    Solve {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        td: PathBuf,
        /// Write the decomposition here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Add phase timings to the report.
        #[arg(long)]
        timings: bool,
    },
    /// Transduction pipelines.
    Mso {
        #[command(subcommand)]
        command: MsoCommand,
    },
    /// Run acceptance criteria.
    Suite {
        /// Run only this criterion.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=CRITERIA as i64))]
        criterion: Option<u8>,
        /// Worker threads for independent instances.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Subcommand)]
enum MsoCommand {
    /// Print the normal form of a pipeline.
    Normalize {
        #[arg(long)]
        pipeline: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two pipelines, or a pipeline and its normal form, on random structures.
    CheckEquiv {
        #[arg(long)]
        pipeline: PathBuf,
        #[arg(long)]
        pipeline2: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(0..=4))]
        universe_max: u8,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
    },
}

fn read(path: &Path) -> Result<String, CommandOutput> {
    fs::read_to_string(path).map_err(|e| CommandOutput::error(Exit::ParseError, format!("{}: {e}", path.display())))
}

fn emit(out: CommandOutput, to: Option<&Path>) -> ExitCode {
    let mut stdout = out.stdout;
    if let Some(path) = to {
        if out.exit == Exit::Ok {
            if let Err(e) = fs::write(path, &stdout) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(Exit::ParseError.code());
            }
        }
        stdout.clear();
    }
    print!("{stdout}");
    eprint!("{}", out.stderr);
    let _ = std::io::stdout().flush();
    ExitCode::from(out.exit.code())
}

fn run(command: Command) -> Result<ExitCode, CommandOutput> {
    Ok(match command {
        Command::Validate { graph, td } => emit(validate(&read(&graph)?, &read(&td)?), None),
        Command::Solve { graph, td, out, timings } => {
            let instance = graph.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let solved = solve(&instance, &read(&graph)?, &read(&td)?, timings);
            emit(solved.output, out.as_deref())
        }
        Command::Mso { command: MsoCommand::Normalize { pipeline, out } } => {
            emit(mso_normalize(&read(&pipeline)?), out.as_deref())
        }
        Command::Mso { command: MsoCommand::CheckEquiv { pipeline, pipeline2, trials, universe_max, rng_seed } } => {
            let second = pipeline2.as_deref().map(read).transpose()?;
            let first = read(&pipeline)?;
            emit(mso_check_equiv(&first, second.as_deref(), trials, universe_max.into(), rng_seed), None)
        }
        Command::Suite { criterion, jobs } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| CommandOutput::error(Exit::CheckFailed, e))?;
            let ids: Vec<usize> = match criterion {
                Some(c) => vec![c.into()],
                None => (1..=CRITERIA).collect(),
            };
            let mut all = true;
            for id in ids {
                let result = pool.install(|| run_criterion(id));
                println!("{result}");
                all &= result.passed;
            }
            ExitCode::from(if all { Exit::Ok } else { Exit::CheckFailed }.code())
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::ParseError.code() } else { Exit::Ok.code() });
        }
    };
    run(cli.command).unwrap_or_else(|out| emit(out, None))
}
