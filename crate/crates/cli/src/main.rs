use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ltv_bootstrap::report::{evaluate, select_groups, write_plot_csv, EvaluateOptions};
use ltv_bootstrap::retro::{run_retrospective, write_replicates_csv, write_summary_csv, RetrospectiveConfig};
use ltv_bootstrap::sim::{crossover_scenario, simulate, SimScenario};
use ltv_bootstrap::{load_daily_csv, save_daily_csv, BootstrapConfig, Decision, Error, ExtrapolationConfig};

/// Exit status when the test group wins an evaluation.
const EXIT_TEST_WINS: u8 = 10;

#[derive(Debug, Parser)]
#[command(name = "ltvab", version, about = "Early lifetime-value decisions for A/B tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bootstrap both groups of a daily CSV and decide the winner.
    ///
    /// Exits 0 when control is chosen and 10 when test is chosen.
    Evaluate(EvaluateArgs),
    /// Replay the early-decision protocol over many simulated experiments.
    Retrospective(RetrospectiveArgs),
    /// Simulate one experiment and write its daily series as CSV.
    Simulate(SimulateArgs),
    /// Print a preset scenario as JSON.
    Scenario {
        #[arg(value_enum, default_value_t = Preset::Crossover)]
        preset: Preset,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Crossover,
}

#[derive(Debug, clap::Args)]
struct EvaluateArgs {
    /// CSV with header group,day,avg_revenue[,weekday]
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    control: String,
    #[arg(long)]
    test: String,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 365)]
    horizon: u32,
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Report path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// Added to every avg_revenue before the log transform.
    #[arg(long)]
    log_offset: Option<f64>,
    /// Sum observed days from the refitted curve instead of the pseudo-data.
    #[arg(long)]
    observed_from_model: bool,
}

#[derive(Debug, clap::Args)]
struct RetrospectiveArgs {
    /// Flat JSON scenario file.
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    experiments: usize,
    /// Master seed; defaults to the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override both groups' cohort size.
    #[arg(long)]
    users: Option<usize>,
    /// Override the scenario's decision day.
    #[arg(long)]
    evaluation_day: Option<u32>,
    /// Override the scenario's day for the true winner.
    #[arg(long)]
    truth_day: Option<u32>,
    /// Lifetime horizon of the extrapolation, independent of the truth day.
    #[arg(long, default_value_t = 365)]
    horizon: u32,
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    observed_from_model: bool,
    /// Summary JSON path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Accuracy table CSV.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Per-replicate CSV.
    #[arg(long)]
    replicates: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct SimulateArgs {
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    users: Option<usize>,
    /// Keep only days up to this one (e.g. the evaluation day).
    #[arg(long)]
    through_day: Option<u32>,
    #[arg(long)]
    output: PathBuf,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 20,
        Error::Parse { .. } => 21,
        Error::DuplicateDay { .. } => 22,
        Error::NonPositiveResponse { .. } => 23,
        Error::DegenerateDesign(_) => 24,
        Error::MissingCovariate { .. } => 25,
        Error::HorizonTooShort { .. } => 26,
        Error::DegenerateResample { .. } => 27,
        Error::LengthMismatch { .. } => 28,
        Error::ZeroVariance => 29,
        Error::InvalidSeries(_) => 30,
        Error::InvalidConfig(_) => 31,
        Error::Json(_) => 32,
        Error::GroupSelection(_) => 33,
        Error::Replicate { source, .. } => exit_code(source),
    }
}

fn load_scenario(path: Option<&Path>, preset: Option<Preset>) -> Result<SimScenario, Error> {
    match (path, preset) {
        (Some(path), _) => SimScenario::from_json(&fs::read_to_string(path)?),
        (None, Some(Preset::Crossover)) => Ok(crossover_scenario()),
        (None, None) => Err(Error::InvalidConfig("pass --scenario <file> or --preset".into())),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run_evaluate(args: &EvaluateArgs) -> Result<Decision, Error> {
    let groups = load_daily_csv(&args.input, args.log_offset)?;
    let (control, test) = select_groups(groups, &args.control, &args.test)?;
    let options = EvaluateOptions {
        bootstrap: BootstrapConfig {
            iterations: args.iterations,
            seed: args.seed,
            horizon: ExtrapolationConfig {
                horizon: args.horizon,
                include_observed_pseudo: !args.observed_from_model,
            },
        },
        alpha: args.alpha,
        log_offset: args.log_offset,
    };
    let report = evaluate(&control, &test, &options)?;
    write_output(args.output.as_deref(), &report.to_json()?)?;
    if let Some(path) = &args.plot_data {
        write_plot_csv(BufWriter::new(File::create(path)?), &report, &control, &test)?;
    }
    Ok(report.decision)
}

fn run_retro(args: &RetrospectiveArgs) -> Result<(), Error> {
    let mut scenario = load_scenario(args.scenario.as_deref(), args.preset)?;
    if let Some(users) = args.users {
        scenario = scenario.with_users(users);
    }
    scenario.evaluation_day = args.evaluation_day.unwrap_or(scenario.evaluation_day);
    scenario.truth_day = args.truth_day.unwrap_or(scenario.truth_day);
    let config = RetrospectiveConfig {
        n_experiments: args.experiments,
        master_seed: args.seed.unwrap_or(scenario.seed),
        iterations: args.iterations,
        horizon: ExtrapolationConfig {
            horizon: args.horizon,
            include_observed_pseudo: !args.observed_from_model,
        },
        alpha: args.alpha,
    };
    let (summary, outcomes) = run_retrospective(&scenario, &config)?;
    write_output(args.output.as_deref(), &summary.to_json()?)?;
    if let Some(path) = &args.table {
        write_summary_csv(BufWriter::new(File::create(path)?), &summary)?;
    }
    if let Some(path) = &args.replicates {
        write_replicates_csv(BufWriter::new(File::create(path)?), &outcomes)?;
    }
    eprintln!(
        "standard: {}/{} ({:.1}%)  proposed: {}/{} ({:.1}%)",
        summary.standard.success,
        summary.n_experiments,
        100.0 * summary.standard.accuracy,
        summary.proposed.success,
        summary.n_experiments,
        100.0 * summary.proposed.accuracy,
    );
    Ok(())
}

fn run_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let mut scenario = load_scenario(args.scenario.as_deref(), args.preset)?;
    if let Some(seed) = args.seed {
        scenario = scenario.with_seed(seed);
    }
    if let Some(users) = args.users {
        scenario = scenario.with_users(users);
    }
    let experiment = simulate(&scenario)?;
    let mut series = vec![experiment.control.series()?, experiment.test.series()?];
    if let Some(day) = args.through_day {
        series = series.iter().map(|s| s.truncated(day)).collect::<Result<_, _>>()?;
    }
    save_daily_csv(&args.output, &series)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Evaluate(args) => run_evaluate(args).map(|d| match d {
            Decision::Control => 0,
            Decision::Test => EXIT_TEST_WINS,
        }),
        Command::Retrospective(args) => run_retro(args).map(|()| 0),
        Command::Simulate(args) => run_simulate(args).map(|()| 0),
        Command::Scenario {
            preset: Preset::Crossover,
        } => crossover_scenario()
            .to_json()
            .map(|text| println!("{text}"))
            .map(|()| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
