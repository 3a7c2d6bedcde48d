use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use afem_param::driver::{
    fit_rate, output, run_experiment, MarkingStrategy, ProblemSource, RunConfig, DEFAULT_WINDOW,
};

#[derive(Parser)]
#[command(name = "afem-param", version, about = "Adaptive FEM for parameter identification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive loop and report one line per level.
    Run(RunArgs),
    /// Fit the log-log slope of a column of a results file.
    Rate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Built-in experiment.
    #[arg(long, value_parser = ["single", "multi"], conflicts_with = "problem", required_unless_present = "problem")]
    experiment: Option<String>,
    /// TOML problem file.
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, value_enum, default_value_t = Strategy::Weighted)]
    marking: Strategy,
    #[arg(long, default_value_t = 50_000)]
    max_elements: usize,
    #[arg(long, default_value_t = 0.0)]
    rho_tol: f64,
    /// Standard deviation of the measurement noise.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solve for the parameter on the last level only (weighted marking).
    #[arg(long)]
    final_p_only: bool,
    /// CSV file for the per-level records.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the final mesh to this file.
    #[arg(long)]
    dump_mesh: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Weighted,
    Classical,
}

fn run(args: RunArgs) -> afem_param::Result<()> {
    let source = match (args.experiment, args.problem) {
        (Some(name), _) => ProblemSource::Builtin(name),
        (None, Some(path)) => ProblemSource::File(path),
        (None, None) => unreachable!("clap requires one source"),
    };
    let experiment = source.load()?;
    let config = RunConfig {
        source,
        theta: args.theta,
        marking: match args.marking {
            Strategy::Weighted => MarkingStrategy::Weighted,
            Strategy::Classical => MarkingStrategy::Classical,
        },
        max_elements: args.max_elements,
        rho_tol: args.rho_tol,
        sigma: args.sigma,
        seed: args.seed,
        solve_p_every_level: !args.final_p_only,
        output: args.out,
    };
    let header = output::csv_header(experiment.problem.n_q());
    println!("{}", header.join("\t"));
    let dump = args.dump_mesh;
    run_experiment(&experiment, &config, |state| {
        let row = output::csv_row(state.record, experiment.problem.n_q());
        println!("{}", row.join("\t"));
        if let (true, Some(path)) = (state.is_final, &dump) {
            state.space.mesh().write_dump(BufWriter::new(File::create(path)?))?;
        }
        Ok(())
    })?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Rate { input, column, window } => output::read_column(&input, &column)
            .and_then(|(n, q)| fit_rate(&n, &q, window))
            .map(|slope| println!("{slope:.6}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
