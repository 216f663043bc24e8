//! Monte-Carlo experiment driver: solves the required relaxation once, runs
//! seeded rounding trials in parallel, re-verifies every solution, and
//! aggregates statistics and best-so-far curves.
//!
//! Determinism: a trial's randomness is fully determined by
//! `(seed, trial index, algorithm salt)`, and aggregation is a serial
//! reduce over the trial-indexed records, so results do not depend on the
//! worker count.

use crate::colgen::{solve_relaxation, ColgenError, FractionalSolution, LpMode, SolveLimits};
use crate::model::{check_feasible, scale_budget, Instance, ModelError, ScaledInstance};
use crate::rounding::{plan, Algorithm, RoundingError, RoundingPath, RoundingPlan};
use crate::stream::TrialStreams;
use rayon::prelude::*;
use std::fmt;
use std::io::{self, Write};

#[derive(Debug)]
pub enum HarnessError {
    Model(ModelError),
    Colgen(ColgenError),
    Rounding(RoundingError),
    /// The fractional solution violated an LP row invariant.
    RelaxationInvalid(String),
    /// A rounding produced an infeasible non-discarded solution.
    FeasibilityViolated { algorithm: Algorithm, trial: u64, report: String },
    /// A shared-randomness dominance guarantee failed.
    DominanceViolated { better: Algorithm, worse: Algorithm, trial: u64 },
    Io(io::Error),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Model(e) => write!(f, "{e}"),
            HarnessError::Colgen(e) => write!(f, "{e}"),
            HarnessError::Rounding(e) => write!(f, "{e}"),
            HarnessError::RelaxationInvalid(msg) => {
                write!(f, "fractional solution violates an LP invariant: {msg}")
            }
            HarnessError::FeasibilityViolated { algorithm, trial, report } => {
                write!(f, "{algorithm} trial {trial} infeasible: {report}")
            }
            HarnessError::DominanceViolated { better, worse, trial } => {
                write!(f, "dominance violated at trial {trial}: {better} < {worse}")
            }
            HarnessError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<ModelError> for HarnessError {
    fn from(e: ModelError) -> Self {
        HarnessError::Model(e)
    }
}

impl From<ColgenError> for HarnessError {
    fn from(e: ColgenError) -> Self {
        HarnessError::Colgen(e)
    }
}

impl From<RoundingError> for HarnessError {
    fn from(e: RoundingError) -> Self {
        HarnessError::Rounding(e)
    }
}

impl From<io::Error> for HarnessError {
    fn from(e: io::Error) -> Self {
        HarnessError::Io(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub objective: f64,
    pub feasible: bool,
    pub path: RoundingPath,
}

/// Per-algorithm simulation output: raw records plus aggregates.
#[derive(Debug, Clone)]
pub struct TrialStats {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub seed: u64,
    pub lp_value: f64,
    pub records: Vec<TrialRecord>,
    /// Mean objective over non-discarded trials.
    pub mean: f64,
    /// Standard error of that mean.
    pub std_error: f64,
    pub discard_rate: f64,
    /// Running maximum of kept objectives, one entry per trial.
    pub best_so_far: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub epsilon: f64,
    pub trials: u64,
    pub seed: u64,
    /// Replay identical substreams across algorithms.
    pub shared_streams: bool,
    pub lp_limits: SolveLimits,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            epsilon: 0.25,
            trials: 1000,
            seed: 0,
            shared_streams: true,
            lp_limits: SolveLimits::default(),
        }
    }
}

fn aggregate(
    algorithm: Algorithm,
    epsilon: f64,
    seed: u64,
    lp_value: f64,
    records: Vec<TrialRecord>,
) -> TrialStats {
    let kept: Vec<f64> = records
        .iter()
        .filter(|r| r.path != RoundingPath::Discarded)
        .map(|r| r.objective)
        .collect();
    let mean = if kept.is_empty() { 0.0 } else { kept.iter().sum::<f64>() / kept.len() as f64 };
    let std_error = if kept.len() > 1 {
        let var = kept.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (kept.len() - 1) as f64;
        (var / kept.len() as f64).sqrt()
    } else {
        0.0
    };
    let discard_rate = if records.is_empty() {
        0.0
    } else {
        records.iter().filter(|r| r.path == RoundingPath::Discarded).count() as f64
            / records.len() as f64
    };
    let mut best_so_far = Vec::with_capacity(records.len());
    let mut best = 0.0f64;
    for r in &records {
        if r.path != RoundingPath::Discarded {
            best = best.max(r.objective);
        }
        best_so_far.push(best);
    }
    TrialStats { algorithm, epsilon, seed, lp_value, records, mean, std_error, discard_rate, best_so_far }
}

fn run_plan(
    plan: &RoundingPlan<'_>,
    scaled: &ScaledInstance,
    opts: &RunOptions,
) -> Result<Vec<TrialRecord>, HarnessError> {
    let salt = if opts.shared_streams { String::new() } else { plan.algorithm.cli_name().to_string() };
    let records: Vec<Result<TrialRecord, HarnessError>> = (0..opts.trials)
        .into_par_iter()
        .map(|trial| {
            let mut streams = TrialStreams::new(opts.seed, trial, &salt);
            let out = plan.run_trial(&mut streams);
            let feasible = match &out.solution {
                Some(sol) => {
                    let report = check_feasible(scaled.base(), sol)?;
                    if !report.all_ok() {
                        return Err(HarnessError::FeasibilityViolated {
                            algorithm: plan.algorithm,
                            trial,
                            report: report.to_string(),
                        });
                    }
                    true
                }
                None => false,
            };
            Ok(TrialRecord { trial, objective: out.objective(), feasible, path: out.path })
        })
        .collect();
    records.into_iter().collect()
}

/// Solves the relaxation the algorithm rounds, then runs `trials` seeded
/// rounding trials, re-verifying every kept solution.
pub fn simulate(
    instance: &Instance,
    algorithm: Algorithm,
    opts: &RunOptions,
) -> Result<TrialStats, HarnessError> {
    let scaled = scale_budget(instance)?;
    let mode = algorithm.lp_mode(opts.epsilon);
    let frac = solve_relaxation(&scaled, mode, &opts.lp_limits)?;
    frac.verify(instance, mode.budget_rhs(scaled.normalized_budget()))
        .map_err(HarnessError::RelaxationInvalid)?;
    let plan = plan(algorithm, &scaled, &frac, opts.epsilon)?;
    let records = run_plan(&plan, &scaled, opts)?;
    Ok(aggregate(algorithm, opts.epsilon, opts.seed, frac.lp_value, records))
}

/// Pairs whose objectives are provably ordered under shared randomness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominancePair {
    pub better: Algorithm,
    pub worse: Algorithm,
    /// Trials where `better >= worse` held.
    pub satisfied: u64,
    pub trials: u64,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub stats: Vec<TrialStats>,
    /// Populated only in shared-randomness mode.
    pub dominance: Vec<DominancePair>,
}

/// Runs several algorithms on one instance. In shared mode all algorithms
/// replay identical substreams per trial and the known dominance orderings
/// are checked trial by trial; a violation is an error.
pub fn compare(
    instance: &Instance,
    algorithms: &[Algorithm],
    opts: &RunOptions,
) -> Result<CompareReport, HarnessError> {
    let scaled = scale_budget(instance)?;
    let mut frac_exact: Option<FractionalSolution> = None;
    let mut frac_scaled: Option<FractionalSolution> = None;
    for alg in algorithms {
        let slot = match alg.lp_mode(opts.epsilon) {
            LpMode::Exact => &mut frac_exact,
            LpMode::Scaled { .. } => &mut frac_scaled,
        };
        if slot.is_none() {
            let mode = alg.lp_mode(opts.epsilon);
            let frac = solve_relaxation(&scaled, mode, &opts.lp_limits)?;
            frac.verify(instance, mode.budget_rhs(scaled.normalized_budget()))
                .map_err(HarnessError::RelaxationInvalid)?;
            *slot = Some(frac);
        }
    }

    let mut stats = Vec::with_capacity(algorithms.len());
    for &alg in algorithms {
        let frac = match alg.lp_mode(opts.epsilon) {
            LpMode::Exact => frac_exact.as_ref().expect("solved above"),
            LpMode::Scaled { .. } => frac_scaled.as_ref().expect("solved above"),
        };
        let plan = plan(alg, &scaled, frac, opts.epsilon)?;
        let records = run_plan(&plan, &scaled, opts)?;
        stats.push(aggregate(alg, opts.epsilon, opts.seed, frac.lp_value, records));
    }

    let mut dominance = Vec::new();
    if opts.shared_streams {
        let ordered_pairs = [
            (Algorithm::ScaledGreedyRound, Algorithm::BaselineRound),
            (Algorithm::MagicianRound, Algorithm::PerItemMagicianRound),
        ];
        for (better, worse) in ordered_pairs {
            let (Some(hi), Some(lo)) = (
                stats.iter().find(|s| s.algorithm == better),
                stats.iter().find(|s| s.algorithm == worse),
            ) else {
                continue;
            };
            let mut satisfied = 0;
            for (a, b) in hi.records.iter().zip(&lo.records) {
                if a.objective >= b.objective - 1e-9 {
                    satisfied += 1;
                } else {
                    return Err(HarnessError::DominanceViolated { better, worse, trial: a.trial });
                }
            }
            dominance.push(DominancePair { better, worse, satisfied, trials: opts.trials });
        }
    }
    Ok(CompareReport { stats, dominance })
}

/// Raw per-trial CSV: `trial,objective,feasible,path`.
pub fn write_trials_csv<W: Write>(stats: &TrialStats, mut out: W) -> io::Result<()> {
    writeln!(out, "trial,objective,feasible,path")?;
    for r in &stats.records {
        writeln!(out, "{},{},{},{}", r.trial, r.objective, r.feasible, r.path.as_str())?;
    }
    Ok(())
}

/// Best-so-far CSV: `trial,best_objective`. `skip` drops the first
/// realizations from the plot (a display option; statistics are unaffected).
pub fn write_best_csv<W: Write>(stats: &TrialStats, skip: usize, mut out: W) -> io::Result<()> {
    writeln!(out, "trial,best_objective")?;
    for (i, best) in stats.best_so_far.iter().enumerate().skip(skip) {
        writeln!(out, "{},{}", i, best)?;
    }
    Ok(())
}

/// Re-parses a raw trials CSV (the inverse of [`write_trials_csv`]).
pub fn parse_trials_csv(text: &str) -> Result<Vec<TrialRecord>, String> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line != "trial,objective,feasible,path" {
                return Err(format!("unexpected header: {line}"));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(format!("line {lineno}: expected 4 fields"));
        }
        let path = match fields[3] {
            "direct" => RoundingPath::Direct,
            "magician-fallback" => RoundingPath::MagicianFallback,
            "greedy-fallback" => RoundingPath::GreedyFallback,
            "discarded" => RoundingPath::Discarded,
            other => return Err(format!("line {lineno}: unknown path {other}")),
        };
        out.push(TrialRecord {
            trial: fields[0].parse().map_err(|e| format!("line {lineno}: {e}"))?,
            objective: fields[1].parse().map_err(|e| format!("line {lineno}: {e}"))?,
            feasible: fields[2].parse().map_err(|e| format!("line {lineno}: {e}"))?,
            path,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::reference_2x2;

    fn magician_friendly() -> Instance {
        let mut inst = reference_2x2();
        inst.set_budget(3.0);
        inst
    }

    #[test]
    fn magician_algorithms_reject_small_budget_ratio() {
        let mut inst = reference_2x2();
        inst.set_budget(0.9);
        let opts = RunOptions { trials: 10, ..RunOptions::default() };
        match simulate(&inst, Algorithm::MagicianRound, &opts) {
            Err(HarnessError::Rounding(_)) => {}
            other => panic!("expected a rounding error, got {:?}", other.map(|s| s.mean)),
        }
    }

    #[test]
    fn single_trial_reproducible() {
        let inst = magician_friendly();
        let opts = RunOptions { trials: 1, seed: 99, ..RunOptions::default() };
        let a = simulate(&inst, Algorithm::MagicianRound, &opts).unwrap();
        let b = simulate(&inst, Algorithm::MagicianRound, &opts).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.records.len(), 1);
    }

    #[test]
    fn aggregates_match_reexport() {
        let inst = magician_friendly();
        let opts = RunOptions { trials: 200, seed: 5, ..RunOptions::default() };
        let stats = simulate(&inst, Algorithm::ScaledGreedyRound, &opts).unwrap();

        let mut buf = Vec::new();
        write_trials_csv(&stats, &mut buf).unwrap();
        let parsed = parse_trials_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(parsed.len(), stats.records.len());
        let kept: Vec<f64> = parsed
            .iter()
            .filter(|r| r.path != RoundingPath::Discarded)
            .map(|r| r.objective)
            .collect();
        let mean = kept.iter().sum::<f64>() / kept.len() as f64;
        assert!((mean - stats.mean).abs() < 1e-12);
    }

    #[test]
    fn best_so_far_is_monotone() {
        let inst = magician_friendly();
        let opts = RunOptions { trials: 300, seed: 2, ..RunOptions::default() };
        let stats = simulate(&inst, Algorithm::BaselineRound, &opts).unwrap();
        for pair in stats.best_so_far.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
        assert_eq!(stats.best_so_far.len(), 300);
    }

    #[test]
    fn compare_shared_checks_dominance() {
        let inst = magician_friendly();
        let opts = RunOptions { trials: 500, seed: 4, ..RunOptions::default() };
        let report = compare(
            &inst,
            &[
                Algorithm::BaselineRound,
                Algorithm::ScaledGreedyRound,
                Algorithm::MagicianRound,
                Algorithm::PerItemMagicianRound,
            ],
            &opts,
        )
        .unwrap();
        assert_eq!(report.dominance.len(), 2);
        for pair in &report.dominance {
            assert_eq!(pair.satisfied, 500, "{pair:?}");
        }
    }

    #[test]
    fn compare_unshared_reports_no_dominance() {
        let inst = magician_friendly();
        let opts = RunOptions {
            trials: 50,
            seed: 4,
            shared_streams: false,
            ..RunOptions::default()
        };
        let report = compare(
            &inst,
            &[Algorithm::BaselineRound, Algorithm::ScaledGreedyRound],
            &opts,
        )
        .unwrap();
        assert!(report.dominance.is_empty());
    }

    #[test]
    fn csv_outputs_are_byte_identical_across_runs() {
        let inst = magician_friendly();
        let opts = RunOptions { trials: 120, seed: 77, ..RunOptions::default() };
        let mut first = Vec::new();
        let mut second = Vec::new();
        for buf in [&mut first, &mut second] {
            let stats = simulate(&inst, Algorithm::MagicianRound, &opts).unwrap();
            write_trials_csv(&stats, &mut *buf).unwrap();
            write_best_csv(&stats, 0, &mut *buf).unwrap();
        }
        assert_eq!(first, second);
    }

    #[test]
    fn empty_stats_export_headers_only() {
        let stats = aggregate(Algorithm::BaselineRound, 0.25, 0, 0.0, Vec::new());
        let mut buf = Vec::new();
        write_trials_csv(&stats, &mut buf).unwrap();
        assert_eq!(std::str::from_utf8(&buf).unwrap(), "trial,objective,feasible,path\n");
        let mut buf = Vec::new();
        write_best_csv(&stats, 0, &mut buf).unwrap();
        assert_eq!(std::str::from_utf8(&buf).unwrap(), "trial,best_objective\n");
    }
}
