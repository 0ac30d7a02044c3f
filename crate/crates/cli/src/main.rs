use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use athena_core::fitness::CATALOG_IDS;
use athena_core::harness::io::{read_table, read_trace_csv, write_trace_csv};
use athena_core::harness::{
    compare, run_experiment, ExperimentConfig, ExperimentReport, InlineSpec, Mode, ProblemSpec, SuiteConfig,
};
use athena_core::models::{builtin, simulate, DEFAULT_DT};
use athena_core::search::{encode_inputs, falsify, Assumption, Outcome, SearchConfig};
use athena_core::signals::TimeGrid;
use athena_core::stl::{parse, robustness, Trace};
use clap::{Args, Parser, Subcommand};

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

/// Search-based falsification of temporal-logic requirements on plant models.
#[derive(Parser)]
#[command(name = "athena", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one falsification search. Exits 1 when no failure is found.
    Falsify(FalsifyArgs),
    /// Run repeated experiments from a suite configuration file.
    Bench(BenchArgs),
    /// Print the robustness of a formula on a trace CSV.
    Robustness {
        #[arg(long, allow_hyphen_values = true)]
        formula: String,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Simulate a built-in plant on inputs from a CSV and write the trace CSV.
    Simulate {
        #[arg(long)]
        plant: String,
        /// CSV with `time,<input>,...`, linearly interpolated onto the grid.
        #[arg(long)]
        inputs: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// Defaults to the plant's benchmark horizon.
        #[arg(long)]
        horizon: Option<f64>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank-sum comparison of the iteration counts in two reports.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// List the shipped requirements.
    Catalog,
}

#[derive(Args)]
struct FalsifyArgs {
    /// Catalog requirement id, e.g. CC1.
    #[arg(long, conflicts_with_all = ["plant", "formula", "manual", "assumption"])]
    catalog: Option<String>,
    #[arg(long, requires_all = ["formula", "manual", "assumption", "auto_scale"])]
    plant: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    formula: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    manual: Option<String>,
    /// Assumption as JSON text or a path to a JSON file.
    #[arg(long)]
    assumption: Option<String>,
    #[arg(long)]
    auto_scale: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, default_value = "athena")]
    mode: Mode,
    /// Linear p schedule for athena mode, `START,END`.
    #[arg(long, value_parser = parse_pair)]
    schedule: Option<(f64, f64)>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    max_iters: usize,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
    /// Directory for testcase.json, inputs.csv and run.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured repetitions.
    #[arg(long)]
    reps: Option<usize>,
    /// Comma-separated modes overriding the configured list.
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<Mode>>,
    #[arg(long, env = "ATHENA_JOBS")]
    jobs: Option<usize>,
    #[arg(long, default_value = "bench-results")]
    out: PathBuf,
    /// Leave timing out of the reports so reruns are byte-identical.
    #[arg(long)]
    no_timestamp: bool,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected START,END")?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}"));
    Ok((num(a)?, num(b)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> CliResult<ExitCode> {
    match command {
        Command::Falsify(args) => run_falsify(args),
        Command::Bench(args) => run_bench(args),
        Command::Robustness { formula, trace } => {
            let formula = parse(&formula)?;
            let trace = read_trace_csv(BufReader::new(File::open(&trace).map_err(|e| with_path(&trace, e))?))?;
            println!("{}", robustness(&formula, &trace)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { plant, inputs, dt, horizon, out } => {
            let plant = builtin(&plant)?;
            let grid = TimeGrid::new(horizon.unwrap_or_else(|| plant.horizon()), dt)?;
            let table = read_table(BufReader::new(File::open(&inputs).map_err(|e| with_path(&inputs, e))?))?;
            let sim = simulate(plant.as_ref(), &table.resample(&grid)?, &grid)?;
            write_csv_to(&sim.trace, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { a, b } => {
            let c = compare(&read_report(&a)?, &read_report(&b)?)?;
            println!("{}", serde_json::to_string_pretty(&c)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Catalog => {
            for id in CATALOG_IDS {
                let e = athena_core::fitness::catalog(id)?;
                println!("{id:5} {:13} {}", e.plant, e.formula_text);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_falsify(args: FalsifyArgs) -> CliResult<ExitCode> {
    let problem = match (&args.catalog, &args.plant) {
        (Some(id), _) => ProblemSpec::Catalog(id.clone()),
        (None, Some(plant)) => ProblemSpec::Inline(InlineSpec {
            name: None,
            plant: plant.clone(),
            formula: args.formula.clone().unwrap_or_default(),
            manual: args.manual.clone().unwrap_or_default(),
            assumption: read_assumption(args.assumption.as_deref().unwrap_or_default())?,
            auto_scale: args.auto_scale.unwrap_or(1.0),
            horizon: args.horizon,
        }),
        (None, None) => return Err("falsify needs --catalog or --plant/--formula/--manual/--assumption".into()),
    };
    let mut cfg = ExperimentConfig::new(problem, args.mode);
    cfg.schedule = args.schedule;
    cfg.dt = args.dt;
    cfg.threshold = args.threshold;
    cfg.repetitions = 1;
    cfg.search = SearchConfig { max_iterations: args.max_iters, seed: args.seed, ..SearchConfig::default() };
    let prepared = cfg.prepare()?;
    let problem = prepared.as_problem();
    let result = falsify(&problem, &cfg.search)?;

    match &result.outcome {
        Outcome::FailureFound(tc) => println!(
            "{}: failure found at iteration {} (robustness {})",
            prepared.problem.name,
            tc.iteration + 1,
            tc.robustness
        ),
        Outcome::NoFailureFound => println!(
            "{}: no failure found in {} iterations (best robustness {})",
            prepared.problem.name, result.iterations_used, result.best_robustness
        ),
    }

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| with_path(dir, e))?;
        let params = match &result.outcome {
            Outcome::FailureFound(tc) => &tc.parameters,
            Outcome::NoFailureFound => &result.best_parameters,
        };
        let mut signals = encode_inputs(&prepared.problem.assumption, params, &prepared.grid)?;
        let mut inputs = Trace::new(prepared.grid);
        for ia in &prepared.problem.assumption.inputs {
            if let Some(signal) = signals.remove(&ia.port) {
                inputs.insert(ia.port.clone(), signal.into_values())?;
            }
        }
        write_csv_to(&inputs, Some(&dir.join("inputs.csv")))?;
        write_text(&dir.join("testcase.json"), &(serde_json::to_string_pretty(&result.outcome)? + "\n"))?;
        write_text(&dir.join("run.json"), &(serde_json::to_string_pretty(&result)? + "\n"))?;
    }
    Ok(if result.failure_found() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run_bench(args: BenchArgs) -> CliResult<ExitCode> {
    let text = fs::read_to_string(&args.config).map_err(|e| with_path(&args.config, e))?;
    let mut suite: SuiteConfig = serde_json::from_str(&text)?;
    if let Some(reps) = args.reps {
        suite.repetitions = reps;
    }
    if let Some(modes) = args.modes {
        suite.modes = modes;
    }
    if args.jobs == Some(0) {
        return Err("--jobs must be at least 1".into());
    }
    let experiments = suite.experiments()?;
    fs::create_dir_all(&args.out).map_err(|e| with_path(&args.out, e))?;
    for cfg in &experiments {
        let mut report = run_experiment(cfg, args.jobs)?;
        if args.no_timestamp {
            report.timing = None;
        }
        let stem = format!("{}_{}", report.requirement, report.mode);
        write_text(&args.out.join(format!("{stem}.json")), &report.to_json()?)?;
        let csv_path = args.out.join(format!("{stem}.csv"));
        report.write_runs_csv(BufWriter::new(File::create(&csv_path).map_err(|e| with_path(&csv_path, e))?))?;
        let mean = report.iteration_stats.map_or("-".to_owned(), |s| format!("{:.1}", s.mean));
        println!(
            "{:6} {:9} {:5.1}% ({}/{}) mean iterations {mean}",
            report.requirement, report.mode, report.percentage, report.failures, report.repetitions
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn read_assumption(arg: &str) -> CliResult<Assumption> {
    let text = if arg.trim_start().starts_with('[') {
        arg.to_owned()
    } else {
        fs::read_to_string(arg).map_err(|e| with_path(Path::new(arg), e))?
    };
    let a: Assumption = serde_json::from_str(&text)?;
    a.validate()?;
    Ok(a)
}

fn read_report(path: &Path) -> CliResult<ExperimentReport> {
    let text = fs::read_to_string(path).map_err(|e| with_path(path, e))?;
    Ok(ExperimentReport::from_json(&text)?)
}

fn write_csv_to(trace: &Trace, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(|e| with_path(p, e))?);
            write_trace_csv(trace, &mut w)?;
            w.flush()?;
        }
        None => write_trace_csv(trace, io::stdout().lock())?,
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| with_path(path, e).into())
}

fn with_path(path: &Path, e: io::Error) -> String {
    format!("{}: {e}", path.display())
}
