//! Randomized rounding of fractional configuration-LP solutions into
//! feasible assignments.
//!
//! Six variants share one skeleton: draw one configuration (or none) per bin
//! from the fractional values, try the pruned direct assignment, and when it
//! busts the budget fall back to a feasibility-preserving selection:
//!
//! * `alg1` gates bins through a conservative magician fed the rounded-up
//!   cost distributions, so the fallback provably fits the budget.
//! * `alg2` re-orders bins by reward density and keeps a greedy prefix of
//!   the sampled bins; it requires zero assignment costs and rounds the
//!   full-budget relaxation.
//! * `baseline` simply discards budget-violating draws.
//! * `alg6` is the greedy variant driven by the epsilon-scaled solution, so
//!   it shares draws with `baseline` and dominates it realization by
//!   realization.
//! * `alg3` additionally gates each item through its own magician walking
//!   the bins in reverse, which is what the guarantees actually bound; it
//!   never beats `alg1` on shared randomness.
//! * `alg4` replaces the per-item magician by keeping the last
//!   `assign_limit` sampled bins (requires uniform per-item rewards).
//!
//! Plans are built once per fractional solution (the magician tables are
//! trial-independent); each trial replays them with named substreams so
//! paired algorithms see identical randomness.

use crate::colgen::{round_up_costs, FractionalSolution, LpMode, RoundedCostGrid};
use crate::magician::{policy_for_boxes, BoxDistribution, DecisionPolicy, MagicianError, PolicyReplay};
use crate::model::{check_feasible, AssignmentSolution, Instance, ModelError, ScaledInstance};
use crate::stream::TrialStreams;
use rand::Rng;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Magician-gated rounding of the epsilon-scaled relaxation.
    MagicianRound,
    /// Density-ordered greedy rounding of the full relaxation; zero
    /// assignment costs only.
    GreedyRound,
    /// Discard-on-violation rounding of the epsilon-scaled relaxation.
    BaselineRound,
    /// Greedy rounding driven by the epsilon-scaled relaxation.
    ScaledGreedyRound,
    /// Magician-gated rounding with per-item magicians in reverse bin order.
    PerItemMagicianRound,
    /// Magician-gated rounding keeping the tail of sampled bins per item;
    /// uniform rewards only.
    UniformRewardRound,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::MagicianRound,
        Algorithm::GreedyRound,
        Algorithm::BaselineRound,
        Algorithm::ScaledGreedyRound,
        Algorithm::PerItemMagicianRound,
        Algorithm::UniformRewardRound,
    ];

    /// Command-line token.
    pub fn cli_name(&self) -> &'static str {
        match self {
            Algorithm::MagicianRound => "alg1",
            Algorithm::GreedyRound => "alg2",
            Algorithm::BaselineRound => "baseline",
            Algorithm::ScaledGreedyRound => "alg6",
            Algorithm::PerItemMagicianRound => "alg3",
            Algorithm::UniformRewardRound => "alg4",
        }
    }

    /// Which relaxation the algorithm rounds.
    pub fn lp_mode(&self, epsilon: f64) -> LpMode {
        match self {
            Algorithm::GreedyRound => LpMode::Exact,
            _ => LpMode::Scaled { epsilon },
        }
    }

    pub fn uses_bin_magician(&self) -> bool {
        matches!(
            self,
            Algorithm::MagicianRound
                | Algorithm::PerItemMagicianRound
                | Algorithm::UniformRewardRound
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .iter()
            .find(|a| a.cli_name() == s)
            .copied()
            .ok_or_else(|| format!("unknown algorithm '{s}' (expected alg1|alg2|baseline|alg6|alg3|alg4)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RoundingError {
    Colgen(crate::colgen::ColgenError),
    Magician(MagicianError),
    Model(ModelError),
    /// Magician variants need a normalized budget above one; smaller
    /// instances belong to the exact or greedy paths.
    BudgetRatioTooSmall(f64),
    NonzeroAssignCosts { bin: usize, item: usize },
    NonUniformRewards { item: usize },
}

impl fmt::Display for RoundingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoundingError::Colgen(e) => write!(f, "{e}"),
            RoundingError::Magician(e) => write!(f, "{e}"),
            RoundingError::Model(e) => write!(f, "{e}"),
            RoundingError::BudgetRatioTooSmall(k) => write!(
                f,
                "normalized budget {k} <= 1: use the exact or greedy algorithm"
            ),
            RoundingError::NonzeroAssignCosts { bin, item } => write!(
                f,
                "greedy rounding requires zero assignment costs, found one at ({bin}, {item})"
            ),
            RoundingError::NonUniformRewards { item } => {
                write!(f, "uniform-reward rounding requires equal rewards, item {item} varies")
            }
        }
    }
}

impl std::error::Error for RoundingError {}

impl From<crate::colgen::ColgenError> for RoundingError {
    fn from(e: crate::colgen::ColgenError) -> Self {
        RoundingError::Colgen(e)
    }
}

impl From<MagicianError> for RoundingError {
    fn from(e: MagicianError) -> Self {
        RoundingError::Magician(e)
    }
}

impl From<ModelError> for RoundingError {
    fn from(e: ModelError) -> Self {
        RoundingError::Model(e)
    }
}

/// One categorical draw per bin: the chosen column index (into the
/// fractional solution) or `None` for the empty set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledConfigs {
    pub per_bin: Vec<Option<usize>>,
}

/// Which branch produced the final assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundingPath {
    Direct,
    MagicianFallback,
    GreedyFallback,
    Discarded,
}

impl RoundingPath {
    pub fn as_str(&self) -> &'static str {
        match self {
            RoundingPath::Direct => "direct",
            RoundingPath::MagicianFallback => "magician-fallback",
            RoundingPath::GreedyFallback => "greedy-fallback",
            RoundingPath::Discarded => "discarded",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RoundingOutcome {
    /// `None` only on the discarded path.
    pub solution: Option<AssignmentSolution>,
    pub path: RoundingPath,
    /// Per-bin magician decisions where a bin magician ran.
    pub bin_open_decisions: Option<Vec<bool>>,
    /// Objective of the branch not taken, for analysis.
    pub alternate_objective: Option<f64>,
}

impl RoundingOutcome {
    pub fn objective(&self) -> f64 {
        self.solution.as_ref().map_or(0.0, |s| s.objective)
    }
}

/// Draws one configuration per bin: column `j` of bin `l` with probability
/// `values[j]`, the empty set with the leftover probability. Consumes
/// exactly one uniform draw per bin so paired algorithms stay aligned.
pub fn sample_configurations(
    frac: &FractionalSolution,
    num_bins: usize,
    rng: &mut impl Rng,
) -> SampledConfigs {
    let by_bin = frac.columns_by_bin(num_bins);
    let mut per_bin = Vec::with_capacity(num_bins);
    for cols in &by_bin {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        for &j in cols {
            acc += frac.values[j];
            if u < acc {
                chosen = Some(j);
                break;
            }
        }
        per_bin.push(chosen);
    }
    SampledConfigs { per_bin }
}

/// Enforces the per-item assignment limits on a tentative assignment: an
/// item held by more bins than its limit keeps only the bins with the
/// highest rewards, ties to the lowest bin index.
pub fn prune_assign_limits(instance: &Instance, tentative: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let num_items = instance.num_items();
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); num_items];
    for (l, items) in tentative.iter().enumerate() {
        for &p in items {
            holders[p].push(l);
        }
    }
    let mut keep = tentative;
    for (p, bins) in holders.iter_mut().enumerate() {
        let limit = instance.item(p).assign_limit as usize;
        if bins.len() <= limit {
            continue;
        }
        bins.sort_by(|&a, &b| {
            instance
                .reward(b, p)
                .partial_cmp(&instance.reward(a, p))
                .unwrap()
                .then_with(|| a.cmp(&b))
        });
        for &l in &bins[limit..] {
            keep[l].retain(|&q| q != p);
        }
    }
    keep
}

struct MagicianPlanData {
    grid: RoundedCostGrid,
    bin_policy: DecisionPolicy,
    /// `alg3` only: one reverse-order policy per item.
    item_policies: Option<Vec<DecisionPolicy>>,
}

enum PlanKind {
    Baseline,
    Greedy { order: Vec<usize> },
    Magician(Box<MagicianPlanData>),
}

/// Trial-independent preparation for one `(algorithm, fractional solution)`
/// pair: per-bin column tables plus whatever tables the variant needs.
pub struct RoundingPlan<'a> {
    pub algorithm: Algorithm,
    scaled: &'a ScaledInstance,
    frac: &'a FractionalSolution,
    kind: PlanKind,
}

fn require_zero_assign_costs(instance: &Instance) -> Result<(), RoundingError> {
    for l in 0..instance.num_bins() {
        for (p, link) in instance.compatible_items(l) {
            if link.cost != 0.0 {
                return Err(RoundingError::NonzeroAssignCosts { bin: l, item: p });
            }
        }
    }
    Ok(())
}

fn require_uniform_rewards(instance: &Instance) -> Result<(), RoundingError> {
    for p in 0..instance.num_items() {
        let mut seen: Option<f64> = None;
        for l in 0..instance.num_bins() {
            if let Some(link) = instance.link(l, p) {
                match seen {
                    None => seen = Some(link.reward),
                    Some(v) if (v - link.reward).abs() > 1e-12 => {
                        return Err(RoundingError::NonUniformRewards { item: p });
                    }
                    Some(_) => {}
                }
            }
        }
    }
    Ok(())
}

/// Reward density order: nonincreasing
/// `(sum_S X_lS * reward(S)) / (open_cost_l * sum_S X_lS)` with `0/0 = 0`,
/// ties to the lower bin index.
fn density_order(scaled: &ScaledInstance, frac: &FractionalSolution) -> Vec<usize> {
    let instance = scaled.base();
    let num_bins = instance.num_bins();
    let mut mass = vec![0.0; num_bins];
    let mut value = vec![0.0; num_bins];
    for (col, &x) in frac.columns.iter().zip(&frac.values) {
        mass[col.bin] += x;
        value[col.bin] += x * col.reward_sum(instance);
    }
    let ratio: Vec<f64> = (0..num_bins)
        .map(|l| {
            let den = instance.bin(l).open_cost * mass[l];
            let r = value[l] / den;
            if r.is_nan() {
                0.0
            } else {
                r
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..num_bins).collect();
    order.sort_by(|&a, &b| ratio[b].partial_cmp(&ratio[a]).unwrap().then_with(|| a.cmp(&b)));
    order
}

fn bin_box_distributions(
    scaled: &ScaledInstance,
    frac: &FractionalSolution,
    grid: &RoundedCostGrid,
) -> Result<Vec<BoxDistribution>, MagicianError> {
    let num_bins = scaled.base().num_bins();
    let by_bin = frac.columns_by_bin(num_bins);
    let mut boxes = Vec::with_capacity(num_bins);
    for cols in &by_bin {
        let mut entries: Vec<(u64, f64)> = Vec::with_capacity(cols.len() + 1);
        let mut acc = 0.0;
        for &j in cols {
            let x = frac.values[j].clamp(0.0, 1.0);
            entries.push((grid.units[j], x));
            acc += x;
        }
        entries.push((0, (1.0 - acc).max(0.0)));
        boxes.push(BoxDistribution::from_units(grid.grid, entries)?);
    }
    Ok(boxes)
}

/// Builds the trial-independent plan. Magician variants compute the cost
/// round-up and all threshold tables here; greedy variants the bin order.
pub fn plan<'a>(
    algorithm: Algorithm,
    scaled: &'a ScaledInstance,
    frac: &'a FractionalSolution,
    epsilon: f64,
) -> Result<RoundingPlan<'a>, RoundingError> {
    let instance = scaled.base();
    let kind = match algorithm {
        Algorithm::BaselineRound => PlanKind::Baseline,
        Algorithm::GreedyRound | Algorithm::ScaledGreedyRound => {
            require_zero_assign_costs(instance)?;
            PlanKind::Greedy { order: density_order(scaled, frac) }
        }
        Algorithm::MagicianRound
        | Algorithm::PerItemMagicianRound
        | Algorithm::UniformRewardRound => {
            let k = scaled.normalized_budget();
            if k <= 1.0 {
                return Err(RoundingError::BudgetRatioTooSmall(k));
            }
            if algorithm == Algorithm::UniformRewardRound {
                require_uniform_rewards(instance)?;
            }
            let grid = round_up_costs(scaled, frac, epsilon)?;
            let gamma = 1.0 - 1.0 / k.sqrt();
            let boxes = bin_box_distributions(scaled, frac, &grid)?;
            let bin_policy = policy_for_boxes(gamma, k, grid.grid, &boxes)?;

            let item_policies = if algorithm == Algorithm::PerItemMagicianRound {
                let num_bins = instance.num_bins();
                let mut policies = Vec::with_capacity(instance.num_items());
                for p in 0..instance.num_items() {
                    // Box order runs from the last bin down to the first.
                    let mut boxes = Vec::with_capacity(num_bins);
                    for l in (0..num_bins).rev() {
                        let mass: f64 = frac
                            .columns
                            .iter()
                            .zip(&frac.values)
                            .filter(|(c, _)| c.bin == l && c.contains(p))
                            .map(|(_, &x)| x)
                            .sum();
                        boxes.push(BoxDistribution::bernoulli(mass.clamp(0.0, 1.0))?);
                    }
                    let limit = f64::from(instance.item(p).assign_limit);
                    let gamma_p = 1.0 - 1.0 / (limit + 3.0).sqrt();
                    policies.push(policy_for_boxes(gamma_p, limit, 1, &boxes)?);
                }
                Some(policies)
            } else {
                None
            };
            PlanKind::Magician(Box::new(MagicianPlanData { grid, bin_policy, item_policies }))
        }
    };
    Ok(RoundingPlan { algorithm, scaled, frac, kind })
}

impl RoundingPlan<'_> {
    pub fn fractional(&self) -> &FractionalSolution {
        self.frac
    }

    /// Runs one rounding trial off the given substreams.
    pub fn run_trial(&self, streams: &mut TrialStreams) -> RoundingOutcome {
        let instance = self.scaled.base();
        let sampled = sample_configurations(self.frac, instance.num_bins(), &mut streams.sample);
        match &self.kind {
            PlanKind::Baseline => self.run_baseline(&sampled),
            PlanKind::Greedy { order } => self.run_greedy(order, &sampled),
            PlanKind::Magician(data) => self.run_magician(data, &sampled, streams),
        }
    }

    fn sampled_items(&self, sampled: &SampledConfigs) -> Vec<Vec<usize>> {
        let instance = self.scaled.base();
        let mut tentative = vec![Vec::new(); instance.num_bins()];
        for (l, chosen) in sampled.per_bin.iter().enumerate() {
            if let Some(j) = chosen {
                tentative[l] = self.frac.columns[*j].items.clone();
            }
        }
        tentative
    }

    /// Prunes, opens every bin that kept an item, and assembles the solution.
    fn assemble(&self, tentative: Vec<Vec<usize>>) -> AssignmentSolution {
        let instance = self.scaled.base();
        let pruned = prune_assign_limits(instance, tentative);
        let open: Vec<bool> = pruned.iter().map(|items| !items.is_empty()).collect();
        AssignmentSolution::build(instance, open, pruned)
    }

    fn assert_feasible(&self, sol: &AssignmentSolution) {
        let report = check_feasible(self.scaled.base(), sol)
            .expect("rounding built a dimension-consistent solution");
        assert!(
            report.all_ok(),
            "{} fallback must be feasible, got {report}",
            self.algorithm
        );
    }

    fn run_baseline(&self, sampled: &SampledConfigs) -> RoundingOutcome {
        let direct = self.assemble(self.sampled_items(sampled));
        let report = check_feasible(self.scaled.base(), &direct).expect("dimensions match");
        if report.budget_ok {
            debug_assert!(report.all_ok());
            RoundingOutcome {
                solution: Some(direct),
                path: RoundingPath::Direct,
                bin_open_decisions: None,
                alternate_objective: None,
            }
        } else {
            RoundingOutcome {
                solution: None,
                path: RoundingPath::Discarded,
                bin_open_decisions: None,
                alternate_objective: Some(direct.objective),
            }
        }
    }

    fn run_greedy(&self, order: &[usize], sampled: &SampledConfigs) -> RoundingOutcome {
        let direct = self.assemble(self.sampled_items(sampled));
        let report = check_feasible(self.scaled.base(), &direct).expect("dimensions match");

        // Prefix pass: walk bins in density order, paying each sampled bin's
        // scaled cost; assign while the running budget stays nonnegative.
        // Once it dips below zero it never recovers, so the kept bins form a
        // prefix of the sampled ones.
        let mut budget = self.scaled.normalized_budget();
        let mut tentative = vec![Vec::new(); self.scaled.base().num_bins()];
        for &l in order {
            if let Some(j) = sampled.per_bin[l] {
                budget -= self.scaled.scaled_cost(self.frac.columns[j].cost);
                if budget >= -1e-12 {
                    tentative[l] = self.frac.columns[j].items.clone();
                }
            }
        }
        let fallback = self.assemble(tentative);
        self.assert_feasible(&fallback);

        if report.budget_ok {
            debug_assert!(report.all_ok());
            RoundingOutcome {
                solution: Some(direct),
                path: RoundingPath::Direct,
                bin_open_decisions: None,
                alternate_objective: Some(fallback.objective),
            }
        } else {
            RoundingOutcome {
                solution: Some(fallback),
                path: RoundingPath::GreedyFallback,
                bin_open_decisions: None,
                alternate_objective: Some(direct.objective),
            }
        }
    }

    fn run_magician(
        &self,
        data: &MagicianPlanData,
        sampled: &SampledConfigs,
        streams: &mut TrialStreams,
    ) -> RoundingOutcome {
        let instance = self.scaled.base();
        let num_bins = instance.num_bins();

        // Bin magician pass: one coin per bin; opened bins pay the rounded
        // cost of their sampled configuration (zero when none was drawn).
        let mut replay = PolicyReplay::new(&data.bin_policy);
        let mut opened = vec![false; num_bins];
        for l in 0..num_bins {
            let coin: f64 = streams.bin_coins.random();
            if replay.open_next(coin) {
                opened[l] = true;
                let units = sampled.per_bin[l].map_or(0, |j| data.grid.units[j]);
                replay
                    .record_loss_units(units)
                    .expect("threshold bound keeps rounded losses within the budget");
            }
        }

        let fallback_tentative: Vec<Vec<usize>> = match (&data.item_policies, self.algorithm) {
            (Some(policies), _) => {
                // Per-item magicians decide in reverse bin order; the loss of
                // the (item, bin) box is one when the bin sampled the item.
                let mut keep = vec![Vec::new(); num_bins];
                for (p, policy) in policies.iter().enumerate() {
                    let mut item_replay = PolicyReplay::new(policy);
                    for l in (0..num_bins).rev() {
                        let coin: f64 = streams.item_coins.random();
                        let open = item_replay.open_next(coin);
                        if open {
                            let in_bin = sampled.per_bin[l]
                                .is_some_and(|j| self.frac.columns[j].contains(p));
                            item_replay
                                .record_loss_units(u64::from(in_bin))
                                .expect("item magician stays within its limit");
                            if in_bin && opened[l] {
                                keep[l].push(p);
                            }
                        }
                    }
                }
                for items in &mut keep {
                    items.sort_unstable();
                }
                keep
            }
            (None, Algorithm::UniformRewardRound) => {
                // Keep each item's last `assign_limit` sampled bins, then
                // intersect with the opened ones.
                let mut keep = vec![Vec::new(); num_bins];
                for p in 0..instance.num_items() {
                    let holders: Vec<usize> = (0..num_bins)
                        .filter(|&l| {
                            sampled.per_bin[l].is_some_and(|j| self.frac.columns[j].contains(p))
                        })
                        .collect();
                    let limit = instance.item(p).assign_limit as usize;
                    let tail_start = holders.len().saturating_sub(limit);
                    for &l in &holders[tail_start..] {
                        if opened[l] {
                            keep[l].push(p);
                        }
                    }
                }
                for items in &mut keep {
                    items.sort_unstable();
                }
                keep
            }
            (None, _) => {
                // Assign the sampled set of every opened bin, then prune.
                let mut keep = vec![Vec::new(); num_bins];
                for l in 0..num_bins {
                    if opened[l] {
                        if let Some(j) = sampled.per_bin[l] {
                            keep[l] = self.frac.columns[j].items.clone();
                        }
                    }
                }
                keep
            }
        };

        let fallback = self.assemble(fallback_tentative);
        self.assert_feasible(&fallback);

        // The analysis variants have no direct branch; the headline variant
        // prefers the direct assignment whenever it fits the budget.
        if self.algorithm == Algorithm::MagicianRound {
            let direct = self.assemble(self.sampled_items(sampled));
            let report = check_feasible(instance, &direct).expect("dimensions match");
            if report.budget_ok {
                debug_assert!(report.all_ok());
                return RoundingOutcome {
                    solution: Some(direct),
                    path: RoundingPath::Direct,
                    bin_open_decisions: Some(opened),
                    alternate_objective: Some(fallback.objective),
                };
            }
            let direct_objective = direct.objective;
            return RoundingOutcome {
                solution: Some(fallback),
                path: RoundingPath::MagicianFallback,
                bin_open_decisions: Some(opened),
                alternate_objective: Some(direct_objective),
            };
        }
        RoundingOutcome {
            solution: Some(fallback),
            path: RoundingPath::MagicianFallback,
            bin_open_decisions: Some(opened),
            alternate_objective: None,
        }
    }
}

/// One-shot wrappers building the plan and running a single trial. Batch
/// callers should build the plan once and replay it.
pub fn magician_round(
    scaled: &ScaledInstance,
    frac: &FractionalSolution,
    epsilon: f64,
    streams: &mut TrialStreams,
) -> Result<RoundingOutcome, RoundingError> {
    Ok(plan(Algorithm::MagicianRound, scaled, frac, epsilon)?.run_trial(streams))
}

pub fn greedy_round(
    scaled: &ScaledInstance,
    frac: &FractionalSolution,
    streams: &mut TrialStreams,
) -> Result<RoundingOutcome, RoundingError> {
    Ok(plan(Algorithm::GreedyRound, scaled, frac, 0.5)?.run_trial(streams))
}

pub fn baseline_round(
    scaled: &ScaledInstance,
    frac: &FractionalSolution,
    streams: &mut TrialStreams,
) -> Result<RoundingOutcome, RoundingError> {
    Ok(plan(Algorithm::BaselineRound, scaled, frac, 0.5)?.run_trial(streams))
}

pub fn scaled_greedy_round(
    scaled: &ScaledInstance,
    frac: &FractionalSolution,
    streams: &mut TrialStreams,
) -> Result<RoundingOutcome, RoundingError> {
    Ok(plan(Algorithm::ScaledGreedyRound, scaled, frac, 0.5)?.run_trial(streams))
}

pub fn per_item_magician_round(
    scaled: &ScaledInstance,
    frac: &FractionalSolution,
    epsilon: f64,
    streams: &mut TrialStreams,
) -> Result<RoundingOutcome, RoundingError> {
    Ok(plan(Algorithm::PerItemMagicianRound, scaled, frac, epsilon)?.run_trial(streams))
}

pub fn uniform_reward_round(
    scaled: &ScaledInstance,
    frac: &FractionalSolution,
    epsilon: f64,
    streams: &mut TrialStreams,
) -> Result<RoundingOutcome, RoundingError> {
    Ok(plan(Algorithm::UniformRewardRound, scaled, frac, epsilon)?.run_trial(streams))
}
