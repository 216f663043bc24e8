//! Command-line driver: instance generation, relaxation solving, rounding
//! trials, Monte-Carlo simulation, shared-randomness comparison, and the
//! exact oracle.
//!
//! Exit codes: 0 success, 1 usage or data errors, 2 violated runtime
//! assertions (feasibility or dominance).

use budget_assign::colgen::{LpMode, SolveLimits};
use budget_assign::exact;
use budget_assign::gen::{
    self, BudgetSpec, GenParams, GridRlppParams, MaxKCoverInstance, RlppInstance, WelfareRule,
};
use budget_assign::harness::{
    self, compare, simulate, write_best_csv, write_trials_csv, HarnessError, RunOptions,
};
use budget_assign::model::{scale_budget, Instance};
use budget_assign::rounding::Algorithm;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Duration;

#[derive(Parser)]
#[command(
    name = "budget-assign",
    about = "Budgeted capacitated assignment: column generation and randomized rounding"
)]
struct Cli {
    /// Master seed for all randomized subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for trial batches (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for generated CSV files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Random,
    Mkc,
    RlppMkc,
    RlppGrid,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitArg {
    /// Core instance schema (bins/items/links).
    Core,
    /// Line-planning schema (graph/lines/trips).
    Rlpp,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Scaled,
}

#[derive(Clone, Copy, ValueEnum)]
enum WelfareArg {
    Binary,
    CarMiles,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random, reduction, or grid line-planning instance.
    Generate {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Schema for line-planning kinds; reductions to the core schema
        /// happen at load time either way.
        #[arg(long, value_enum, default_value = "rlpp")]
        emit: EmitArg,
        #[arg(long, default_value_t = 4)]
        bins: usize,
        #[arg(long, default_value_t = 10)]
        items: usize,
        /// Budget as a multiple of the most expensive configuration.
        #[arg(long, default_value_t = 4.0)]
        budget_ratio: f64,
        /// Absolute budget; overrides the ratio when set.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long, default_value_t = false)]
        uniform_rewards: bool,
        #[arg(long, default_value_t = false)]
        zero_assign_costs: bool,
        /// Elements of the cover universe (mkc kinds).
        #[arg(long, default_value_t = 6)]
        elements: usize,
        /// Number of sets (mkc kinds).
        #[arg(long, default_value_t = 4)]
        sets: usize,
        /// Sets that may be picked (mkc kinds).
        #[arg(long, default_value_t = 2)]
        cover_k: usize,
        #[arg(long, default_value_t = 8)]
        width: usize,
        #[arg(long, default_value_t = 6)]
        height: usize,
        #[arg(long, default_value_t = 24)]
        lines: usize,
        #[arg(long, default_value_t = 220)]
        trips: usize,
        #[arg(long, default_value_t = 4)]
        capacity: u32,
        #[arg(long, value_enum, default_value = "car-miles")]
        welfare: WelfareArg,
        #[arg(long, default_value_t = 0.0)]
        walk_radius: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the configuration-LP relaxation by column generation.
    SolveLp {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        timeout_secs: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run rounding trials of one algorithm and write the raw trial CSV.
    Round {
        input: PathBuf,
        #[arg(long)]
        alg: String,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Derive substreams without an algorithm salt so runs of different
        /// algorithms replay identical randomness.
        #[arg(long, default_value_t = false)]
        shared_randomness: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo simulation: trials, aggregates, and best-so-far curve.
    Simulate {
        input: PathBuf,
        #[arg(long)]
        alg: String,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Drop this many leading realizations from the best-so-far CSV.
        #[arg(long, default_value_t = 0)]
        skip_first: usize,
    },
    /// Run several algorithms with shared randomness and check dominance.
    Compare {
        input: PathBuf,
        /// Comma-separated algorithm list.
        #[arg(long, value_delimiter = ',')]
        algs: Vec<String>,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = true)]
        shared: bool,
        #[arg(long, default_value_t = 0)]
        skip_first: usize,
    },
    /// Brute-force optimum of a tiny instance.
    Exact {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    // Usage problems exit 1; code 2 is reserved for violated runtime
    // assertions (clap would otherwise exit 2 on bad flags).
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[derive(Debug)]
struct CliError {
    message: String,
    assertion: bool,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { message: message.into(), assertion: false }
    }

    fn exit_code(&self) -> u8 {
        if self.assertion {
            2
        } else {
            1
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        let assertion = matches!(
            e,
            HarnessError::DominanceViolated { .. } | HarnessError::FeasibilityViolated { .. }
        );
        CliError { message: e.to_string(), assertion }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

/// Loads either schema: files with a `lines` key are line-planning
/// instances and are mapped onto the core model.
fn load_instance(path: &Path) -> Result<Instance, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    if value.get("lines").is_some() {
        let rlpp = RlppInstance::from_json(&text)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        gen::rlpp_build(&rlpp).map_err(|e| CliError::usage(e.to_string()))
    } else {
        Instance::from_json(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }
}

fn parse_alg(name: &str) -> Result<Algorithm, CliError> {
    Algorithm::from_str(name).map_err(CliError::usage)
}

#[derive(Serialize)]
struct LpColumnOut {
    bin: usize,
    items: Vec<usize>,
    cost: f64,
    x: f64,
}

#[derive(Serialize)]
struct LpSolutionOut {
    lp_value: f64,
    converged: bool,
    budget_used: f64,
    columns: Vec<LpColumnOut>,
}

fn random_mkc(elements: usize, sets: usize, k: usize, seed: u64) -> Result<MaxKCoverInstance, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut families = Vec::with_capacity(sets);
    use rand::Rng;
    for _ in 0..sets {
        let size = rng.random_range(1..=elements.min(4));
        let mut set = Vec::with_capacity(size);
        while set.len() < size {
            let e = rng.random_range(0..elements);
            if !set.contains(&e) {
                set.push(e);
            }
        }
        families.push(set);
    }
    MaxKCoverInstance::new(elements, families, k).map_err(|e| CliError::usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate {
            kind,
            emit,
            bins,
            items,
            budget_ratio,
            budget,
            uniform_rewards,
            zero_assign_costs,
            elements,
            sets,
            cover_k,
            width,
            height,
            lines,
            trips,
            capacity,
            welfare,
            walk_radius,
            out,
        } => {
            let welfare = match welfare {
                WelfareArg::Binary => WelfareRule::Binary { walk_radius },
                WelfareArg::CarMiles => WelfareRule::CarMilesSaved,
            };
            let text = match kind {
                KindArg::Random => {
                    let params = GenParams {
                        bins,
                        items,
                        assign_cost: if zero_assign_costs { (0.0, 0.0) } else { (0.0, 0.5) },
                        uniform_rewards,
                        budget: match budget {
                            Some(b) => BudgetSpec::Absolute(b),
                            None => BudgetSpec::TargetRatio(budget_ratio),
                        },
                        ..GenParams::default()
                    };
                    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                    let instance = gen::random_instance(&params, &mut rng)
                        .map_err(|e| CliError::usage(e.to_string()))?;
                    instance.to_json()
                }
                KindArg::Mkc => {
                    let mkc = random_mkc(elements, sets, cover_k, cli.seed)?;
                    gen::from_max_k_cover(&mkc).to_json()
                }
                KindArg::RlppMkc => {
                    let mkc = random_mkc(elements, sets, cover_k, cli.seed)?;
                    let rlpp = gen::rlpp_from_max_k_cover(&mkc);
                    match emit {
                        EmitArg::Rlpp => rlpp.to_json(),
                        EmitArg::Core => gen::rlpp_build(&rlpp)
                            .map_err(|e| CliError::usage(e.to_string()))?
                            .to_json(),
                    }
                }
                KindArg::RlppGrid => {
                    let params = GridRlppParams {
                        width,
                        height,
                        lines,
                        trips,
                        bus_capacity: capacity,
                        budget: budget.unwrap_or(GridRlppParams::default().budget),
                        welfare,
                        ..GridRlppParams::default()
                    };
                    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                    let rlpp = gen::rlpp_grid(&params, &mut rng)
                        .map_err(|e| CliError::usage(e.to_string()))?;
                    match emit {
                        EmitArg::Rlpp => rlpp.to_json(),
                        EmitArg::Core => gen::rlpp_build(&rlpp)
                            .map_err(|e| CliError::usage(e.to_string()))?
                            .to_json(),
                    }
                }
            };
            fs::write(&out, text)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::SolveLp { input, mode, epsilon, max_iters, timeout_secs, out } => {
            let instance = load_instance(&input)?;
            let scaled = scale_budget(&instance)
                .map_err(|e| CliError::usage(e.to_string()))?;
            let mode = match mode {
                ModeArg::Exact => LpMode::Exact,
                ModeArg::Scaled => LpMode::Scaled { epsilon },
            };
            let mut limits = SolveLimits::default();
            if let Some(n) = max_iters {
                limits.max_rounds = n;
            }
            if let Some(secs) = timeout_secs {
                limits.timeout = Some(Duration::from_secs_f64(secs));
            }
            let frac = budget_assign::colgen::solve_relaxation(&scaled, mode, &limits)
                .map_err(|e| CliError::usage(e.to_string()))?;
            let payload = LpSolutionOut {
                lp_value: frac.lp_value,
                converged: frac.converged,
                budget_used: frac.budget_used,
                columns: frac
                    .columns
                    .iter()
                    .zip(&frac.values)
                    .map(|(c, &x)| LpColumnOut {
                        bin: c.bin,
                        items: c.items.clone(),
                        cost: c.cost,
                        x,
                    })
                    .collect(),
            };
            fs::write(&out, serde_json::to_string_pretty(&payload).expect("serializable"))?;
            println!(
                "lp_value {} converged {} columns {}",
                frac.lp_value,
                frac.converged,
                frac.columns.len()
            );
            Ok(())
        }
        Command::Round { input, alg, epsilon, trials, shared_randomness, out } => {
            let instance = load_instance(&input)?;
            let algorithm = parse_alg(&alg)?;
            let opts = RunOptions {
                epsilon,
                trials,
                seed: cli.seed,
                shared_streams: shared_randomness,
                ..RunOptions::default()
            };
            let stats = simulate(&instance, algorithm, &opts)?;
            let mut buf = Vec::new();
            write_trials_csv(&stats, &mut buf)?;
            fs::write(&out, buf)?;
            println!(
                "{algorithm}: mean {} se {} discard-rate {} over {trials} trials (lp {})",
                stats.mean, stats.std_error, stats.discard_rate, stats.lp_value
            );
            Ok(())
        }
        Command::Simulate { input, alg, epsilon, trials, skip_first } => {
            let instance = load_instance(&input)?;
            let algorithm = parse_alg(&alg)?;
            let opts = RunOptions {
                epsilon,
                trials,
                seed: cli.seed,
                ..RunOptions::default()
            };
            let stats = simulate(&instance, algorithm, &opts)?;
            fs::create_dir_all(&cli.out_dir)?;
            let trials_path = cli.out_dir.join(format!("{algorithm}_trials.csv"));
            let best_path = cli.out_dir.join(format!("{algorithm}_best.csv"));
            let mut buf = Vec::new();
            write_trials_csv(&stats, &mut buf)?;
            fs::write(&trials_path, buf)?;
            let mut buf = Vec::new();
            write_best_csv(&stats, skip_first, &mut buf)?;
            fs::write(&best_path, buf)?;
            println!(
                "{algorithm}: mean {} se {} discard-rate {} lp {} -> {}, {}",
                stats.mean,
                stats.std_error,
                stats.discard_rate,
                stats.lp_value,
                trials_path.display(),
                best_path.display()
            );
            Ok(())
        }
        Command::Compare { input, algs, epsilon, trials, shared, skip_first } => {
            let instance = load_instance(&input)?;
            if algs.is_empty() {
                return Err(CliError::usage("--algs requires at least one algorithm"));
            }
            let algorithms: Vec<Algorithm> =
                algs.iter().map(|a| parse_alg(a)).collect::<Result<_, _>>()?;
            let opts = RunOptions {
                epsilon,
                trials,
                seed: cli.seed,
                shared_streams: shared,
                ..RunOptions::default()
            };
            let report = compare(&instance, &algorithms, &opts)?;
            fs::create_dir_all(&cli.out_dir)?;
            for stats in &report.stats {
                let trials_path = cli.out_dir.join(format!("{}_trials.csv", stats.algorithm));
                let best_path = cli.out_dir.join(format!("{}_best.csv", stats.algorithm));
                let mut buf = Vec::new();
                write_trials_csv(stats, &mut buf)?;
                fs::write(&trials_path, buf)?;
                let mut buf = Vec::new();
                harness::write_best_csv(stats, skip_first, &mut buf)?;
                fs::write(&best_path, buf)?;
                println!(
                    "{}: mean {} se {} discard-rate {} lp {}",
                    stats.algorithm, stats.mean, stats.std_error, stats.discard_rate, stats.lp_value
                );
            }
            for pair in &report.dominance {
                println!(
                    "dominance {} >= {}: {}/{} trials",
                    pair.better, pair.worse, pair.satisfied, pair.trials
                );
            }
            Ok(())
        }
        Command::Exact { input, out } => {
            let instance = load_instance(&input)?;
            let solution = exact::brute_force(&instance)
                .map_err(|e| CliError::usage(e.to_string()))?;
            #[derive(Serialize)]
            struct ExactOut {
                objective: f64,
                total_cost: f64,
                open: Vec<bool>,
                assigned: Vec<Vec<usize>>,
            }
            let payload = ExactOut {
                objective: solution.objective,
                total_cost: solution.total_cost,
                open: solution.open.clone(),
                assigned: solution.assigned.clone(),
            };
            fs::write(&out, serde_json::to_string_pretty(&payload).expect("serializable"))?;
            println!("objective {} cost {}", solution.objective, solution.total_cost);
            Ok(())
        }
    }
}
