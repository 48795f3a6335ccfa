use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tfmp_core::formulation::formulate;
use tfmp_core::harness::report::ScenarioOptions;
use tfmp_core::harness::{
    emit_instance, generate_instance, load_instance, run_experiment, run_scenario, GenerationError, GeneratorParams,
    Mode, ReportFormat, ScenarioError,
};
use tfmp_core::polyhedral::{
    affine_dimension, classify_faces, enumerate_feasible, implicit_equality_rank, verify_main_theorem, LabError,
    DEFAULT_CAP,
};

const INFEASIBLE: u8 = 1;
const INPUT_ERROR: u8 = 2;
const INTERNAL_LIMIT: u8 = 3;

#[derive(Parser)]
#[command(name = "tfmp", version, about = "Arrives-by air traffic flow model: solve, analyse, generate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file and print the per-flight schedule.
    Solve(SolveArgs),
    /// Enumerate the feasible 0/1 points of a tiny instance and study its rows.
    Analyze(AnalyzeArgs),
    /// Write a random instance.
    Gen(GenArgs),
    /// Count how often the relaxation of random instances is integral.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
#[group(multiple = false)]
struct ModeFlags {
    /// Solve the LP relaxation (default).
    #[arg(long)]
    relax: bool,
    /// Solve the 0/1 program by branch-and-bound.
    #[arg(long)]
    exact: bool,
    /// Solve only the flights in conflict, growing the set as needed.
    #[arg(long)]
    decompose: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
    JsonLines,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[command(flatten)]
    mode: ModeFlags,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
}

#[derive(Args)]
struct AnalyzeArgs {
    instance: PathBuf,
    /// Refuse to enumerate more free columns than this.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    /// Random objectives for the hull comparison.
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenParams {
    #[arg(long, default_value_t = 4)]
    flights: usize,
    #[arg(long, default_value_t = 6)]
    sectors: usize,
    #[arg(long, default_value_t = 10)]
    horizon: i64,
    /// Share of flights continuing an earlier flight's aircraft, in [0, 1].
    #[arg(long, default_value_t = 0.2)]
    continued_fraction: f64,
    /// Capacity as a share of zero-delay peak demand, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    tightness: f64,
    #[arg(long, default_value_t = 1)]
    ground_hold: u32,
    #[arg(long, default_value_t = 1)]
    air_hold: u32,
    #[arg(long, default_value_t = 0)]
    early: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GenParams {
    fn params(&self) -> GeneratorParams {
        GeneratorParams {
            flights: self.flights,
            sectors: self.sectors,
            horizon: self.horizon,
            continued_fraction: self.continued_fraction,
            capacity_tightness: self.tightness,
            max_ground_hold: self.ground_hold,
            max_air_hold: self.air_hold,
            allow_early: self.early,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    gen: GenParams,
    /// Write here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[command(flatten)]
    gen: GenParams,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Analyze(a) => analyze(a),
        Command::Gen(a) => gen(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

type Failure = (u8, String);

fn solve(a: SolveArgs) -> Result<(), Failure> {
    let mode = if a.mode.exact {
        Mode::Exact
    } else if a.mode.decompose {
        Mode::Decompose
    } else {
        Mode::Relax
    };
    let format = match a.format {
        FormatArg::Table => ReportFormat::Table,
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::JsonLines => ReportFormat::JsonLines,
    };
    let report = run_scenario(&a.instance, mode, &ScenarioOptions::default())
        .map_err(|e: ScenarioError| (e.exit_code() as u8, e.to_string()))?;
    print!("{}", report.render(format));
    Ok(())
}

fn lab_failure(e: LabError) -> Failure {
    let code = match e {
        LabError::EmptyPointSet => INFEASIBLE,
        _ => INTERNAL_LIMIT,
    };
    (code, e.to_string())
}

fn analyze(a: AnalyzeArgs) -> Result<(), Failure> {
    let inst = load_instance(&a.instance).map_err(|e| (INPUT_ERROR, e.to_string()))?;
    let form = formulate(&inst).map_err(|e| (INFEASIBLE, e.to_string()))?;
    let sys = &form.system;
    let points = enumerate_feasible(sys, a.cap).map_err(lab_failure)?;
    if points.is_empty() {
        return Err(lab_failure(LabError::EmptyPointSet));
    }
    let dim = affine_dimension(&points.points);
    let rank = implicit_equality_rank(sys, &points.points);
    println!(
        "columns={} rows={} points={} dimension={dim} implicit_equality_rank={rank}",
        sys.num_columns,
        sys.rows.len(),
        points.len()
    );
    let faces = classify_faces(sys, &points).map_err(lab_failure)?;
    let facets = faces.iter().filter(|f| f.is_facet).count();
    println!("facets={facets} of {} rows", faces.len());
    for f in &faces {
        println!(
            "  row {:>4}  face_dim={:>3}  {}  {}",
            f.row,
            f.face_dim,
            if f.is_facet { "facet" } else { "     " },
            f.row_tag.describe(&inst)
        );
    }
    let theorem = verify_main_theorem(sys, &points, a.trials, a.seed).map_err(lab_failure)?;
    println!(
        "objectives={} seed={} hull_agreements={} relaxation_matches={} relaxation_below={} relaxation_above={}",
        theorem.trials,
        theorem.seed,
        theorem.hull_agreements,
        theorem.matches,
        theorem.relaxation_strictly_below,
        theorem.relaxation_above
    );
    Ok(())
}

fn gen(a: GenArgs) -> Result<(), Failure> {
    let inst = generate_instance(&a.gen.params(), a.gen.seed).map_err(|e| match e {
        GenerationError::Params(_) => (INPUT_ERROR, e.to_string()),
        _ => (INTERNAL_LIMIT, e.to_string()),
    })?;
    let text = format!("# generated with seed {}\n{}", a.gen.seed, emit_instance(&inst));
    match a.output {
        Some(path) => fs::write(&path, text).map_err(|e| (INPUT_ERROR, format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn experiment(a: ExperimentArgs) -> Result<(), Failure> {
    if a.count == 0 {
        return Err((INPUT_ERROR, "count must be at least 1".into()));
    }
    let params = a.gen.params();
    // Surface bad parameters as an input error rather than a run of failures.
    if let Err(e @ GenerationError::Params(_)) = generate_instance(&params, a.gen.seed) {
        return Err((INPUT_ERROR, e.to_string()));
    }
    let stats = run_experiment(a.count, &params, a.gen.seed);
    println!("{}", stats.to_json());
    println!("{}", stats.summary());
    Ok(())
}
