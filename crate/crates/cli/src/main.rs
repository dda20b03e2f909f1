use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use minwowa::experiments::{
    gen_instance, run_benchmark, summarize, write_records_csv, write_summary_csv, BenchmarkRecord, CellKey,
    ExactStatus, ExperimentConfig, ProblemSpec, WeightMode, DEFAULT_Q_FRACTION,
};
use minwowa::io::{read_instance, read_solution, write_instance, write_solution};
use minwowa::{approx_solve, brute_force, build_mip, exact_bb, export_lp, Error, Instance, ProofStatus};

/// Scenario optimization under the weighted OWA criterion.
///
/// Element indices are 0-based everywhere. For assignment instances element
/// `r * m + c` assigns row `r` to column `c`.
#[derive(Parser)]
#[command(name = "minwowa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Selection,
    Assignment,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Aggregated costs plus the deterministic solver.
    Approx,
    /// Built-in branch and bound.
    Bb,
    /// Enumerate every feasible solution.
    Brute,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Number of elements (selection).
    #[arg(long, required_if_eq("kind", "selection"))]
    n: Option<usize>,
    /// Side of the bipartite graph (assignment).
    #[arg(long, required_if_eq("kind", "assignment"))]
    m: Option<usize>,
    /// Elements to choose; defaults to a quarter of n, rounded half up.
    #[arg(long)]
    q: Option<usize>,
    /// Number of scenarios.
    #[arg(short = 'K')]
    k: usize,
    /// Weight generator parameter in (0, 1).
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance as JSON.
    Generate(GenerateArgs),
    /// Solve an instance and print `value=.. method=.. status=.. bound=..`.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "bb")]
        method: Method,
        /// Seconds before branch and bound stops with its incumbent.
        #[arg(long, default_value_t = 3600.0)]
        time_limit: f64,
        /// Where to write the solution JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print scenario costs, rank weights and the criterion value of a solution.
    Eval {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Write the mixed-integer model in LP format.
    ExportMip {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark grid from a JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
        /// Per-cell aggregates.
        #[arg(long)]
        summary_csv: Option<PathBuf>,
        /// Worker threads; defaults to one per core.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

enum Failure {
    Io(String),
    Usage(String),
    Infeasible(String),
    NotMonotone(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::NotMonotone(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Io(m) | Failure::Usage(m) | Failure::Infeasible(m) | Failure::NotMonotone(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible(_) => Failure::Infeasible(e.to_string()),
            Error::Unsupported(_) => Failure::NotMonotone(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Instance, Failure> {
    Ok(read_instance(&read(path)?)?)
}

/// Rounded to 12 decimals so `6.000000000000001` prints as `6.0`.
fn num(x: f64) -> String {
    format!("{:?}", (x * 1e12).round() / 1e12)
}

fn list(xs: impl IntoIterator<Item = f64>) -> String {
    xs.into_iter().map(num).collect::<Vec<_>>().join(",")
}

fn generate(args: &GenerateArgs) -> Result<(), Failure> {
    let spec = match args.kind {
        Kind::Selection => {
            ProblemSpec::Selection { n: args.n.unwrap_or_default(), q: args.q, q_fraction: DEFAULT_Q_FRACTION }
        }
        Kind::Assignment => ProblemSpec::Assignment { m: args.m.unwrap_or_default() },
    };
    let inst = gen_instance(&spec, args.k, WeightMode::Alpha(args.alpha), args.seed)?;
    write(&args.out, &write_instance(&inst))
}

fn solve(input: &Path, method: Method, time_limit: f64, out: Option<&Path>) -> Result<(), Failure> {
    let inst = load(input)?;
    let (solution, value, name, status, bound) = match method {
        Method::Approx => {
            let r = approx_solve(&inst)?;
            (r.solution, r.wowa_objective, "approx", "feasible", r.ratio_bound.map(num))
        }
        Method::Bb => {
            if time_limit.is_nan() || time_limit < 0.0 {
                return Err(Failure::Usage(format!("time limit {time_limit} must be nonnegative")));
            }
            let r = exact_bb(&inst, Duration::from_secs_f64(time_limit))?;
            (r.solution, r.objective, "bb", r.status.as_str(), None)
        }
        Method::Brute => {
            let r = brute_force(&inst)?;
            (r.solution, r.objective, "brute", ProofStatus::Optimal.as_str(), None)
        }
    };
    if let Some(path) = out {
        write(path, &write_solution(&solution))?;
    }
    println!("value={} method={name} status={status} bound={}", num(value), bound.as_deref().unwrap_or("-"));
    Ok(())
}

fn eval(input: &Path, solution: &Path) -> Result<(), Failure> {
    let inst = load(input)?;
    let sol = read_solution(&read(solution)?)?;
    let costs = inst.scenario_costs(&sol)?;
    let ranks = inst.rank_weights(&sol)?;
    let order: Vec<String> = ranks.permutation.iter().map(usize::to_string).collect();
    println!("scenario_costs={}", list(costs));
    println!("omega={}", list(ranks.omegas.iter().copied()));
    println!("order={}", order.join(","));
    println!("value={}", num(inst.wowa_value(&sol)?));
    Ok(())
}

fn export_mip(input: &Path, out: &Path) -> Result<(), Failure> {
    let inst = load(input)?;
    let model = build_mip(&inst).map_err(|e| match e {
        Error::Unsupported(msg) => {
            Failure::NotMonotone(format!("{msg}; the model needs nonincreasing weights v_1 >= ... >= v_K"))
        }
        other => other.into(),
    })?;
    write(out, &export_lp(&model)?)?;
    println!(
        "variables={} binaries={} constraints={}",
        model.variables.len(),
        model.binary_count(),
        model.constraints.len()
    );
    Ok(())
}

fn report_cell(cell: &CellKey, records: &[BenchmarkRecord]) {
    let optimal = records.iter().filter(|r| r.exact_status == ExactStatus::Optimal).count();
    let devs: Vec<f64> = records.iter().filter_map(|r| r.deviation_pct).collect();
    let mean =
        if devs.is_empty() { "-".to_string() } else { format!("{:.3}", devs.iter().sum::<f64>() / devs.len() as f64) };
    eprintln!(
        "cell kind={} size={} K={} alpha={} instances={} optimal={optimal} mean_deviation_pct={mean}",
        cell.problem.name(),
        cell.problem.size(),
        cell.k,
        cell.alpha,
        records.len(),
    );
}

fn bench(config: &Path, out_csv: &Path, summary_csv: Option<&Path>, jobs: Option<usize>) -> Result<(), Failure> {
    let cfg = ExperimentConfig::from_json(&read(config)?)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let records = pool.install(|| run_benchmark(&cfg, &report_cell))?;
    write_records_csv(create(out_csv)?, &records)?;
    if let Some(path) = summary_csv {
        write_summary_csv(create(path)?, &summarize(&records)?)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(args) => generate(args),
        Command::Solve { input, method, time_limit, out } => solve(input, *method, *time_limit, out.as_deref()),
        Command::Eval { input, solution } => eval(input, solution),
        Command::ExportMip { input, out } => export_mip(input, out),
        Command::Bench { config, out_csv, summary_csv, jobs } => bench(config, out_csv, summary_csv.as_deref(), *jobs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
