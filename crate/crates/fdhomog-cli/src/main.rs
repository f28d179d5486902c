//! Command-line entry point: simulate curves, run homogeneity tests on
//! CSV data, render DD-plots to SVG, and drive Monte-Carlo experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fdhomog::curves::{
    load_sample_csv, make_grid, simulate_sample, write_sample_csv, CsvLayout, FunctionalSample,
    MeanFunction, ModelSpec,
};
use fdhomog::ddplot::{bootstrap_test, build_ddplot, NullScheme};
use fdhomog::depth::{DepthConfig, Fd2Config, PairBudget, RpConfig, DEFAULT_NUM_PROJECTIONS};
use fdhomog::flores::flores_test;
use fdhomog::plot::render_ddplot_svg;
use fdhomog::sim::{builtin_model, ExperimentSuite};
use fdhomog::{Error, RngSeed};

// internal seed fan-out tags, shared with the experiment harness
const TAG_RP_DIRECTIONS: u64 = 101;
const TAG_FD2_PAIRS: u64 = 102;

/// Grids parsed from separate files may differ by decimal round-trips.
const GRID_TOLERANCE: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "fdhomog",
    version,
    about = "Depth-based homogeneity testing for functional data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate Gaussian-process curves and write them as CSV.
    Simulate(SimulateArgs),
    /// Run a homogeneity test on two CSV curve files.
    Test(TestArgs),
    /// Render the DD-plot of two CSV curve files as SVG.
    Ddplot(DdplotArgs),
    /// Run a Monte-Carlo power/size experiment suite from a JSON spec.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Builtin model id (0..=5); alternative to the explicit flags below.
    #[arg(long, conflicts_with_all = ["mean", "delta", "amp", "rate"])]
    model: Option<u8>,
    /// Mean function for an explicit model.
    #[arg(long, value_enum)]
    mean: Option<MeanArg>,
    /// Mean shift for an explicit model.
    #[arg(long)]
    delta: Option<f64>,
    /// Covariance amplitude for an explicit model.
    #[arg(long)]
    amp: Option<f64>,
    /// Covariance decay rate for an explicit model.
    #[arg(long)]
    rate: Option<f64>,
    /// Number of curves.
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Number of grid points.
    #[arg(long, default_value_t = 30)]
    grid: usize,
    /// Domain start.
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    /// Domain end.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeanArg {
    Peak32,
    Peak12,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Fm,
    Rp,
    Fd2,
    Flores,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    /// Pooled relabeling: resample the pooled sample into two new samples.
    Relabel,
    /// Resample only the evaluation set; reference samples stay fixed.
    #[value(name = "literal-h-star", alias = "literal-H*")]
    LiteralHStar,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    file_a: PathBuf,
    #[arg(long)]
    file_b: PathBuf,
    /// fm | rp | fd2 run the DD-plot test with that depth; flores runs the
    /// deepest-curve baseline (FM depth).
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 500)]
    boot: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bootstrap null scheme for the DD-plot tests.
    #[arg(long, value_enum, default_value = "relabel")]
    null_scheme: SchemeArg,
    /// Random projections (rp only).
    #[arg(long, default_value_t = DEFAULT_NUM_PROJECTIONS)]
    projections: usize,
    /// Grid-point pairs averaged by fd2: "all" or a count.
    #[arg(long, default_value = "all")]
    pair_budget: String,
    /// Write the full TestResult JSON here (printed to stdout otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DdplotArgs {
    #[arg(long)]
    file_a: PathBuf,
    #[arg(long)]
    file_b: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, default_value_t = DEFAULT_NUM_PROJECTIONS)]
    projections: usize,
    #[arg(long, default_value = "all")]
    pair_budget: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment suite spec.
    #[arg(long)]
    spec: PathBuf,
    /// Output prefix: writes <out>.csv (or .json) and <out>-summary.json.
    #[arg(long)]
    out: PathBuf,
    /// Power table format.
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Test(args) => cmd_test(args),
        Command::Ddplot(args) => cmd_ddplot(args),
        Command::Experiment(args) => cmd_experiment(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// FDHOMOG_THREADS caps worker parallelism; absence means all cores.
fn init_thread_pool() {
    if let Ok(value) = std::env::var("FDHOMOG_THREADS") {
        match value.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring invalid FDHOMOG_THREADS={value:?}"),
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let spec = match args.model {
        Some(id) => builtin_model(id)?,
        None => {
            let (mean, delta, amp, rate) = match (args.mean, args.delta, args.amp, args.rate) {
                (Some(m), Some(d), Some(k), Some(c)) => (m, d, k, c),
                _ => {
                    return Err(Error::InvalidArgument(
                        "pass --model or all of --mean/--delta/--amp/--rate".into(),
                    ))
                }
            };
            ModelSpec {
                mean: match mean {
                    MeanArg::Peak32 => MeanFunction::Peak32,
                    MeanArg::Peak12 => MeanFunction::Peak12,
                },
                delta,
                amp,
                rate,
            }
        }
    };
    let grid = make_grid(args.a, args.b, args.grid)?;
    let sample = simulate_sample(&spec, args.n, &grid, RngSeed(args.seed))?;
    write_sample_csv(&sample, &args.out)?;
    println!("wrote {} curves on {} points to {}", args.n, args.grid, args.out.display());
    Ok(())
}

/// Load two curve files and reconcile their grids within tolerance.
fn load_pair(
    path_a: &Path,
    path_b: &Path,
) -> Result<(FunctionalSample, FunctionalSample), Error> {
    let a = load_sample_csv(path_a, CsvLayout::Auto)?;
    let b = load_sample_csv(path_b, CsvLayout::Auto)?;
    if a.grid() == b.grid() {
        return Ok((a, b));
    }
    if a.grid().approx_eq(b.grid(), GRID_TOLERANCE) {
        let rebound = b.with_grid(a.grid().clone())?;
        return Ok((a, rebound));
    }
    Err(Error::GridMismatch)
}

fn parse_pair_budget(text: &str, grid_len: usize) -> Result<PairBudget, Error> {
    if text == "all" {
        return Ok(PairBudget::All);
    }
    let count: usize = text
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("--pair-budget must be 'all' or a count, got {text:?}")))?;
    if count == 0 {
        return Err(Error::InvalidArgument("--pair-budget must be at least 1".into()));
    }
    let total = grid_len * (grid_len - 1) / 2;
    if count > total {
        eprintln!("warning: pair budget {count} exceeds the {total} available pairs; using all");
    }
    Ok(PairBudget::Count(count))
}

fn depth_config(
    method: MethodArg,
    projections: usize,
    pair_budget: &str,
    grid_len: usize,
    seed: RngSeed,
) -> Result<DepthConfig, Error> {
    Ok(match method {
        MethodArg::Fm | MethodArg::Flores => DepthConfig::Fm,
        MethodArg::Rp => DepthConfig::Rp(RpConfig {
            num_projections: projections,
            direction_seed: seed.derive(TAG_RP_DIRECTIONS),
        }),
        MethodArg::Fd2 => DepthConfig::Fd2(Fd2Config {
            pair_budget: parse_pair_budget(pair_budget, grid_len)?,
            pair_seed: seed.derive(TAG_FD2_PAIRS),
        }),
    })
}

fn cmd_test(args: TestArgs) -> Result<(), Error> {
    let (a, b) = load_pair(&args.file_a, &args.file_b)?;
    let seed = RngSeed(args.seed);
    let depth = depth_config(args.method, args.projections, &args.pair_budget, a.grid().len(), seed)?;
    let result = match args.method {
        MethodArg::Flores => flores_test(&a, &b, &depth, args.alpha, args.boot, seed)?,
        _ => {
            let scheme = match args.null_scheme {
                SchemeArg::Relabel => NullScheme::Relabel,
                SchemeArg::LiteralHStar => NullScheme::LiteralHStar,
            };
            bootstrap_test(&a, &b, &depth, args.alpha, args.boot, seed, scheme)?
        }
    };
    let json = result.to_json();
    match &args.out {
        Some(path) => std::fs::write(path, &json)?,
        None => println!("{json}"),
    }
    let verdict = if result.reject { "REJECT" } else { "FAIL-TO-REJECT" };
    println!("{verdict} p={}", result.p_adjusted);
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_ddplot(args: DdplotArgs) -> Result<(), Error> {
    if matches!(args.method, MethodArg::Flores) {
        return Err(Error::InvalidArgument(
            "ddplot takes a depth method: fm, rp, or fd2".into(),
        ));
    }
    let (a, b) = load_pair(&args.file_a, &args.file_b)?;
    let seed = RngSeed(args.seed);
    let depth = depth_config(args.method, args.projections, &args.pair_budget, a.grid().len(), seed)?;
    let dd = build_ddplot(&a, &b, &depth)?;
    let svg = render_ddplot_svg(&dd, &stem(&args.file_a), &stem(&args.file_b));
    std::fs::write(&args.out, svg)?;
    println!("wrote DD-plot ({} points) to {}", dd.points().len(), args.out.display());
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.spec)?;
    let suite = ExperimentSuite::from_json(&text)?;
    let table = suite.run()?;
    let summary = table.summary();

    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let table_path = match args.format {
        FormatArg::Csv => {
            let path = args.out.with_extension("csv");
            std::fs::write(&path, table.to_csv())?;
            path
        }
        FormatArg::Json => {
            let path = args.out.with_extension("json");
            std::fs::write(&path, table.to_json())?;
            path
        }
    };
    let summary_path = summary_path(&args.out);
    std::fs::write(&summary_path, summary.to_json())?;
    println!(
        "wrote {} rows to {} and summary to {}",
        table.rows.len(),
        table_path.display(),
        summary_path.display()
    );
    Ok(())
}

fn summary_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "experiment".into());
    name.push_str("-summary.json");
    out.with_file_name(name)
}
