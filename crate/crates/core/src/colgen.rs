//! Configuration-LP relaxation solved by column generation.
//!
//! The restricted master maximizes total reward over the columns generated
//! so far, subject to one convexity row per bin, one assignment-limit row
//! per item, and the (scaled) budget row. The pricing subproblem for bin `l`
//! maximizes reduced reward over the bin's interval packing polytope; its
//! constraint matrix has consecutive ones, so vertex optima are integral and
//! every priced column is a genuine configuration.
//!
//! Costs here live in the normalized domain: all configuration costs divided
//! by the most expensive one, budget equal to `normalized_budget`, or
//! `normalized_budget * (1 - epsilon)` in epsilon-scaled mode.

use crate::lp::{self, LinearProgram, LpError, LpStatus, VarBound};
use crate::model::{Configuration, Instance, ModelError, ScaledInstance};
use std::collections::HashSet;
use std::fmt;
use std::time::{Duration, Instant};

/// A pricing run reports a violated column only when its reduced value
/// clears this margin.
pub const PRICE_EPS: f64 = 1e-7;
/// Row-satisfaction slack for fractional solutions.
pub const MASTER_EPS: f64 = 1e-9;

/// Largest admitted round-up grid size; finer grids make the magician's
/// loss table unreasonably large.
const MAX_GRID: u64 = 200_000_000;

/// Idle master columns are purged after this many zero-value rounds.
const PURGE_AFTER: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpMode {
    /// Budget row at the full normalized budget.
    Exact,
    /// Budget row shrunk to `normalized_budget * (1 - epsilon)`, leaving room
    /// for the cost round-up.
    Scaled { epsilon: f64 },
}

impl LpMode {
    pub fn budget_rhs(&self, normalized_budget: f64) -> f64 {
        match self {
            LpMode::Exact => normalized_budget,
            LpMode::Scaled { epsilon } => normalized_budget * (1.0 - epsilon),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveLimits {
    pub max_rounds: usize,
    pub timeout: Option<Duration>,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits { max_rounds: 10_000, timeout: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColgenError {
    Model(ModelError),
    Lp(LpError),
    BadEpsilon(f64),
    GridTooLarge { bins: usize, epsilon: f64, grid: u128 },
    /// The rounded costs of the fractional solution exceed the normalized
    /// budget; this indicates an upstream bug, not bad data.
    RoundUpOverflow { total: f64, budget: f64 },
}

impl fmt::Display for ColgenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColgenError::Model(e) => write!(f, "{e}"),
            ColgenError::Lp(e) => write!(f, "{e}"),
            ColgenError::BadEpsilon(eps) => write!(f, "epsilon must lie in (0,1), got {eps}"),
            ColgenError::GridTooLarge { bins, epsilon, grid } => write!(
                f,
                "round-up grid {grid} too large for {bins} bins at epsilon {epsilon}"
            ),
            ColgenError::RoundUpOverflow { total, budget } => write!(
                f,
                "rounded costs {total} exceed normalized budget {budget}: upstream bug"
            ),
        }
    }
}

impl std::error::Error for ColgenError {}

impl From<ModelError> for ColgenError {
    fn from(e: ModelError) -> Self {
        ColgenError::Model(e)
    }
}

impl From<LpError> for ColgenError {
    fn from(e: LpError) -> Self {
        ColgenError::Lp(e)
    }
}

/// Dual multipliers of the master rows: one price per bin convexity row,
/// one per item limit row, and one for the budget row.
#[derive(Debug, Clone)]
pub struct DualPrices {
    pub bin_price: Vec<f64>,
    pub item_price: Vec<f64>,
    pub budget_price: f64,
}

/// Sparse fractional solution of the configuration LP: columns that carry
/// positive mass and their values.
#[derive(Debug, Clone)]
pub struct FractionalSolution {
    pub columns: Vec<Configuration>,
    pub values: Vec<f64>,
    pub lp_value: f64,
    /// Cost mass in the same units as the LP that produced the solution
    /// (normalized units under column generation).
    pub budget_used: f64,
    pub converged: bool,
    /// Master objective after each round; nondecreasing.
    pub round_values: Vec<f64>,
}

impl FractionalSolution {
    pub fn zero() -> Self {
        FractionalSolution {
            columns: Vec::new(),
            values: Vec::new(),
            lp_value: 0.0,
            budget_used: 0.0,
            converged: true,
            round_values: Vec::new(),
        }
    }

    /// Column indices grouped by bin, in column order.
    pub fn columns_by_bin(&self, num_bins: usize) -> Vec<Vec<usize>> {
        let mut by_bin = vec![Vec::new(); num_bins];
        for (idx, col) in self.columns.iter().enumerate() {
            by_bin[col.bin].push(idx);
        }
        by_bin
    }

    /// Total mass assigned to item `p` across all columns.
    pub fn item_mass(&self, p: usize) -> f64 {
        self.columns
            .iter()
            .zip(&self.values)
            .filter(|(c, _)| c.contains(p))
            .map(|(_, &x)| x)
            .sum()
    }

    /// Checks the LP row invariants against the given budget right-hand side
    /// (in the same cost units as `budget_used`).
    pub fn verify(&self, instance: &Instance, budget_rhs: f64) -> Result<(), String> {
        let mut bin_mass = vec![0.0; instance.num_bins()];
        for (col, &x) in self.columns.iter().zip(&self.values) {
            if !(0.0..=1.0 + MASTER_EPS).contains(&x) {
                return Err(format!("column value {x} outside [0,1]"));
            }
            bin_mass[col.bin] += x;
        }
        for (l, &mass) in bin_mass.iter().enumerate() {
            if mass > 1.0 + MASTER_EPS {
                return Err(format!("bin {l} carries mass {mass} > 1"));
            }
        }
        for p in 0..instance.num_items() {
            let mass = self.item_mass(p);
            let limit = f64::from(instance.item(p).assign_limit);
            if mass > limit + MASTER_EPS {
                return Err(format!("item {p} carries mass {mass} > limit {limit}"));
            }
        }
        if self.budget_used > budget_rhs + MASTER_EPS {
            return Err(format!(
                "budget use {} exceeds {budget_rhs}",
                self.budget_used
            ));
        }
        Ok(())
    }
}

/// Builds the master LP over the given columns. Row order: bin convexity
/// rows, item limit rows, then the budget row; `col_cost` supplies each
/// column's coefficient in the budget row.
pub(crate) fn build_master(
    instance: &Instance,
    columns: &[Configuration],
    budget_rhs: f64,
    col_cost: &dyn Fn(&Configuration) -> f64,
) -> LinearProgram {
    let num_bins = instance.num_bins();
    let num_items = instance.num_items();
    let m = num_bins + num_items + 1;
    let n = columns.len();
    let mut rows = vec![vec![0.0; n]; m];
    let mut rhs = vec![0.0; m];
    for l in 0..num_bins {
        rhs[l] = 1.0;
    }
    for p in 0..num_items {
        rhs[num_bins + p] = f64::from(instance.item(p).assign_limit);
    }
    rhs[m - 1] = budget_rhs;
    for (j, col) in columns.iter().enumerate() {
        rows[col.bin][j] = 1.0;
        for &p in &col.items {
            rows[num_bins + p][j] = 1.0;
        }
        rows[m - 1][j] = col_cost(col);
    }
    LinearProgram {
        maximize: columns.iter().map(|c| c.reward_sum(instance)).collect(),
        rows,
        rhs,
        bounds: vec![VarBound::Unbounded; n],
        snap_integral: false,
    }
}

fn extract_duals(instance: &Instance, duals: &[f64]) -> DualPrices {
    let num_bins = instance.num_bins();
    let num_items = instance.num_items();
    DualPrices {
        bin_price: duals[..num_bins].iter().map(|&y| y.max(0.0)).collect(),
        item_price: duals[num_bins..num_bins + num_items].iter().map(|&y| y.max(0.0)).collect(),
        budget_price: duals[num_bins + num_items].max(0.0),
    }
}

/// Pricing oracle for one bin: maximizes the reduced reward
/// `sum_p (v_lp - item_price_p - budget_price * assign_cost_lp) x_p` over the
/// bin's interval packing polytope. Returns the priced configuration and its
/// reduced value when it beats the bin's convexity price by more than
/// [`PRICE_EPS`], otherwise `None`.
pub fn price_bin(
    scaled: &ScaledInstance,
    l: usize,
    duals: &DualPrices,
) -> Result<Option<(Configuration, f64)>, ColgenError> {
    let instance = scaled.base();
    let mut ids = Vec::new();
    let mut entries = Vec::new();
    for (p, link) in instance.compatible_items(l) {
        let weight =
            link.reward - duals.item_price[p] - duals.budget_price * scaled.scaled_cost(link.cost);
        if weight > 1e-11 {
            ids.push(p);
            entries.push((link.interval.lo, link.interval.hi, weight));
        }
    }
    let threshold = duals.bin_price[l] + duals.budget_price * scaled.scaled_open_cost(l);
    if entries.is_empty() {
        return Ok(None);
    }
    let lp = lp::interval_packing_lp(&instance.bin(l).capacity, &entries);
    let res = lp::solve(&lp)?;
    debug_assert_eq!(res.status, LpStatus::Optimal);
    let chosen: Vec<usize> = ids
        .iter()
        .zip(&res.primal)
        .filter(|(_, &x)| x > 0.5)
        .map(|(&p, _)| p)
        .collect();
    if chosen.is_empty() {
        return Ok(None);
    }
    let reduced = res.objective - threshold;
    if reduced <= PRICE_EPS {
        return Ok(None);
    }
    let config = Configuration::new(instance, l, chosen)
        .map_err(|msg| ColgenError::Model(ModelError::Parse(msg)))?;
    Ok(Some((config, reduced)))
}

/// Runs the pricing oracle bin by bin and reports the first violated column.
pub fn separation(
    scaled: &ScaledInstance,
    duals: &DualPrices,
) -> Result<Option<(Configuration, f64)>, ColgenError> {
    for l in 0..scaled.base().num_bins() {
        if let Some(hit) = price_bin(scaled, l, duals)? {
            return Ok(Some(hit));
        }
    }
    Ok(None)
}

/// Solves the configuration-LP relaxation by column generation.
///
/// The master starts from one greedy column per bin (its highest-reward
/// feasible singleton) so duals always exist, then alternates master solves
/// with one pricing pass over all bins, adding every violated column found.
/// Stops when no bin prices a violated column (`converged = true`) or when
/// the round or wall-clock limit hits, in which case the current restricted
/// optimum is returned with `converged = false`.
pub fn solve_relaxation(
    scaled: &ScaledInstance,
    mode: LpMode,
    limits: &SolveLimits,
) -> Result<FractionalSolution, ColgenError> {
    if let LpMode::Scaled { epsilon } = mode {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ColgenError::BadEpsilon(epsilon));
        }
    }
    let instance = scaled.base();
    let budget_rhs = mode.budget_rhs(scaled.normalized_budget());
    let started = Instant::now();

    let mut columns: Vec<Configuration> = Vec::new();
    let mut seen: HashSet<(usize, Vec<usize>)> = HashSet::new();
    for l in 0..instance.num_bins() {
        let best = instance
            .compatible_items(l)
            .filter(|&(p, _)| instance.singleton_fits(l, p))
            .max_by(|(pa, a), (pb, b)| {
                a.reward
                    .partial_cmp(&b.reward)
                    .unwrap()
                    .then_with(|| pb.cmp(pa))
            });
        if let Some((p, _)) = best {
            let config = Configuration::new(instance, l, vec![p])
                .map_err(|msg| ColgenError::Model(ModelError::Parse(msg)))?;
            seen.insert((l, config.items.clone()));
            columns.push(config);
        }
    }

    let cost_of = |c: &Configuration| scaled.scaled_cost(c.cost);
    let mut round_values = Vec::new();
    let mut converged = false;
    let mut rounds = 0usize;
    let mut idle_rounds: Vec<u32> = vec![0; columns.len()];
    // Re-solves start from the previous optimal basis. The hint stores
    // structural indices in the current column order; they survive purging
    // because basic columns are never purged.
    let mut warm: Option<Vec<usize>> = None;
    let (values, lp_value) = loop {
        let master = build_master(instance, &columns, budget_rhs, &cost_of);
        let res = match &warm {
            Some(hint) => lp::solve_with_basis(&master, hint)?,
            None => lp::solve(&master)?,
        };
        debug_assert_eq!(res.status, LpStatus::Optimal, "master LP is always feasible");
        round_values.push(res.objective);

        let timed_out = limits.timeout.is_some_and(|t| started.elapsed() >= t);
        if rounds >= limits.max_rounds || timed_out {
            break (res.primal, res.objective);
        }
        let duals = extract_duals(instance, &res.duals);
        let mut priced = Vec::new();
        for l in 0..instance.num_bins() {
            if let Some((config, _)) = price_bin(scaled, l, &duals)? {
                if !seen.contains(&(l, config.items.clone())) {
                    priced.push(config);
                }
            }
        }
        if priced.is_empty() {
            converged = true;
            break (res.primal, res.objective);
        }

        // Keep the master lean: a column idle (nonbasic at zero) for several
        // consecutive rounds is dropped and may be re-priced later; basic
        // columns always stay so the warm basis survives the renumbering.
        let n_old = columns.len();
        let mut basic = vec![false; n_old];
        for &j in &res.basis {
            if j < n_old {
                basic[j] = true;
            }
        }
        let mut map = vec![usize::MAX; n_old];
        let mut kept = Vec::with_capacity(n_old + priced.len());
        let mut kept_idle = Vec::with_capacity(n_old);
        for (j, col) in columns.into_iter().enumerate() {
            let active = basic[j] || res.primal[j] > 1e-12;
            let streak = if active { 0 } else { idle_rounds[j] + 1 };
            if active || streak < PURGE_AFTER {
                map[j] = kept.len();
                kept.push(col);
                kept_idle.push(streak);
            } else {
                seen.remove(&(col.bin, col.items));
            }
        }
        columns = kept;
        idle_rounds = kept_idle;
        for config in priced {
            seen.insert((config.bin, config.items.clone()));
            columns.push(config);
            idle_rounds.push(0);
        }
        // Slack indices shift to sit after the grown column block.
        let n_next = columns.len();
        warm = Some(
            res.basis
                .iter()
                .map(|&j| if j < n_old { map[j] } else { j - n_old + n_next })
                .collect(),
        );
        rounds += 1;
    };

    let mut out_columns = Vec::new();
    let mut out_values = Vec::new();
    let mut budget_used = 0.0;
    for (col, &x) in columns.iter().zip(&values) {
        if x > 1e-12 {
            budget_used += scaled.scaled_cost(col.cost) * x;
            out_columns.push(col.clone());
            out_values.push(x);
        }
    }
    Ok(FractionalSolution {
        columns: out_columns,
        values: out_values,
        lp_value,
        budget_used,
        converged,
        round_values,
    })
}

/// Cost grid for the round-up: costs are rounded *up* to multiples of
/// `1 / bins^(2 exponent)`, stored as integer grid units so downstream
/// dynamic programming stays exact.
#[derive(Debug, Clone)]
pub struct RoundedCostGrid {
    pub exponent: u32,
    /// Number of grid cells per unit of normalized cost.
    pub grid: u64,
    /// Rounded cost per column, in grid units (`rounded = units / grid`).
    pub units: Vec<u64>,
}

impl RoundedCostGrid {
    pub fn rounded_cost(&self, column: usize) -> f64 {
        self.units[column] as f64 / self.grid as f64
    }
}

/// The grid exponent: `1 + ceil(log_bins(2 / epsilon))`.
pub fn round_up_exponent(num_bins: usize, epsilon: f64) -> u32 {
    let inner = (2.0 / epsilon).ln() / (num_bins as f64).ln();
    1 + (inner - 1e-9).ceil().max(0.0) as u32
}

/// Grid resolution `bins^(2 exponent)`, guarded against absurd sizes.
pub fn grid_size(num_bins: usize, epsilon: f64) -> Result<u64, ColgenError> {
    let exponent = round_up_exponent(num_bins, epsilon);
    let grid = (num_bins as u128).pow(2 * exponent);
    if grid > u128::from(MAX_GRID) {
        return Err(ColgenError::GridTooLarge { bins: num_bins, epsilon, grid });
    }
    Ok(grid as u64)
}

pub(crate) fn cost_to_units(scaled_cost: f64, grid: u64) -> u64 {
    let t = scaled_cost * grid as f64;
    let nearest = t.round();
    let units = if (t - nearest).abs() <= 1e-6 { nearest } else { t.ceil() };
    (units.max(0.0) as u64).min(grid)
}

/// Rounds every column cost of an epsilon-scaled solution up to the grid and
/// verifies that the rounded total still fits the normalized budget.
pub fn round_up_costs(
    scaled: &ScaledInstance,
    solution: &FractionalSolution,
    epsilon: f64,
) -> Result<RoundedCostGrid, ColgenError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(ColgenError::BadEpsilon(epsilon));
    }
    let num_bins = scaled.base().num_bins();
    let exponent = round_up_exponent(num_bins, epsilon);
    let grid = grid_size(num_bins, epsilon)?;
    let units: Vec<u64> = solution
        .columns
        .iter()
        .map(|col| cost_to_units(scaled.scaled_cost(col.cost), grid))
        .collect();
    let total: f64 = units
        .iter()
        .zip(&solution.values)
        .map(|(&u, &x)| (u as f64 / grid as f64) * x)
        .sum();
    let budget = scaled.normalized_budget();
    if total > budget + MASTER_EPS {
        return Err(ColgenError::RoundUpOverflow { total, budget });
    }
    Ok(RoundedCostGrid { exponent, grid, units })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{scale_budget, Bin, Instance, Item, Link, WeightInterval};
    use crate::testkit::reference_2x2;

    fn pricing_fixture(capacity: u32) -> (ScaledInstance, DualPrices) {
        let bins = vec![
            Bin { capacity: vec![capacity], open_cost: 1.0 },
            Bin { capacity: vec![1], open_cost: 1.0 },
        ];
        let items = vec![Item { assign_limit: 1 }, Item { assign_limit: 1 }];
        let mut inst = Instance::new(bins, items, 2.0);
        inst.set_link(
            0,
            0,
            Link { interval: WeightInterval::new(0, 1), reward: 2.0, cost: 0.0 },
        );
        inst.set_link(
            0,
            1,
            Link { interval: WeightInterval::new(0, 1), reward: 1.0, cost: 0.0 },
        );
        inst.set_link(
            1,
            0,
            Link { interval: WeightInterval::new(0, 1), reward: 1.0, cost: 0.0 },
        );
        let scaled = scale_budget(&inst).unwrap();
        let duals = DualPrices {
            bin_price: vec![0.0, 0.0],
            item_price: vec![0.0, 0.0],
            budget_price: 0.0,
        };
        (scaled, duals)
    }

    #[test]
    fn pricing_returns_none_when_no_positive_reward() {
        let (scaled, mut duals) = pricing_fixture(1);
        duals.item_price = vec![5.0, 5.0];
        assert!(price_bin(&scaled, 0, &duals).unwrap().is_none());
    }

    #[test]
    fn pricing_picks_best_singleton_under_tight_capacity() {
        let (scaled, mut duals) = pricing_fixture(1);
        duals.bin_price[0] = 0.5;
        let (config, reduced) = price_bin(&scaled, 0, &duals).unwrap().unwrap();
        assert_eq!(config.items, vec![0]);
        assert!((reduced - 1.5).abs() < 1e-9);
    }

    #[test]
    fn pricing_packs_both_items_with_room() {
        let (scaled, mut duals) = pricing_fixture(2);
        duals.bin_price[0] = 2.9;
        let (config, reduced) = price_bin(&scaled, 0, &duals).unwrap().unwrap();
        assert_eq!(config.items, vec![0, 1]);
        assert!((reduced - 0.1).abs() < 1e-9);
    }

    #[test]
    fn separation_quiet_under_huge_bin_prices() {
        let (scaled, mut duals) = pricing_fixture(2);
        duals.bin_price = vec![100.0, 100.0];
        assert!(separation(&scaled, &duals).unwrap().is_none());
    }

    #[test]
    fn separation_finds_best_packing_under_zero_duals() {
        let (scaled, duals) = pricing_fixture(2);
        let (config, reduced) = separation(&scaled, &duals).unwrap().unwrap();
        assert_eq!(config.bin, 0);
        assert_eq!(config.items, vec![0, 1]);
        assert!((reduced - 3.0).abs() < 1e-9);
    }

    #[test]
    fn separation_silent_at_optimality() {
        let inst = reference_2x2();
        let scaled = scale_budget(&inst).unwrap();
        let sol =
            solve_relaxation(&scaled, LpMode::Exact, &SolveLimits::default()).unwrap();
        assert!(sol.converged);
        // Re-derive duals from the final master and re-run separation.
        let cost_of = |c: &Configuration| scaled.scaled_cost(c.cost);
        let master = build_master(&inst, &sol.columns, scaled.normalized_budget(), &cost_of);
        let res = lp::solve(&master).unwrap();
        let duals = extract_duals(&inst, &res.duals);
        assert!(separation(&scaled, &duals).unwrap().is_none());
    }

    #[test]
    fn reference_instance_relaxation_value() {
        let inst = reference_2x2();
        let scaled = scale_budget(&inst).unwrap();
        let sol =
            solve_relaxation(&scaled, LpMode::Exact, &SolveLimits::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.lp_value - 4.0).abs() < 1e-6, "lp = {}", sol.lp_value);
        sol.verify(&inst, scaled.normalized_budget()).unwrap();
    }

    #[test]
    fn scaled_mode_keeps_guaranteed_fraction() {
        let inst = reference_2x2();
        let scaled = scale_budget(&inst).unwrap();
        let sol = solve_relaxation(
            &scaled,
            LpMode::Scaled { epsilon: 0.5 },
            &SolveLimits::default(),
        )
        .unwrap();
        assert!(sol.converged);
        assert!((sol.lp_value - 2.0).abs() < 1e-6, "lp = {}", sol.lp_value);
        assert!(sol.lp_value >= (1.0 - 0.5) * 4.0 - 1e-9);
        sol.verify(&inst, scaled.normalized_budget() * 0.5).unwrap();
    }

    #[test]
    fn zero_budget_yields_zero_solution() {
        let mut inst = reference_2x2();
        inst.set_budget(0.0);
        let scaled = scale_budget(&inst).unwrap();
        let sol =
            solve_relaxation(&scaled, LpMode::Exact, &SolveLimits::default()).unwrap();
        assert_eq!(sol.lp_value, 0.0);
        assert!(sol.values.iter().all(|&x| x <= 1e-12));
    }

    #[test]
    fn master_values_are_nondecreasing() {
        let inst = reference_2x2();
        let scaled = scale_budget(&inst).unwrap();
        let sol =
            solve_relaxation(&scaled, LpMode::Exact, &SolveLimits::default()).unwrap();
        for pair in sol.round_values.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "{:?}", sol.round_values);
        }
    }

    #[test]
    fn round_limit_flags_unconverged() {
        let inst = reference_2x2();
        let scaled = scale_budget(&inst).unwrap();
        let limits = SolveLimits { max_rounds: 0, timeout: None };
        let sol = solve_relaxation(&scaled, LpMode::Exact, &limits).unwrap();
        assert!(!sol.converged);
    }

    #[test]
    fn timeout_returns_current_master_solution() {
        let inst = reference_2x2();
        let scaled = scale_budget(&inst).unwrap();
        let limits = SolveLimits {
            max_rounds: 10_000,
            timeout: Some(std::time::Duration::ZERO),
        };
        let sol = solve_relaxation(&scaled, LpMode::Exact, &limits).unwrap();
        assert!(!sol.converged);
        // The warm-start pool already contains the best singletons, so the
        // first master is meaningful even under an instant timeout.
        assert!(sol.lp_value > 0.0);
        sol.verify(&inst, scaled.normalized_budget()).unwrap();
    }

    #[test]
    fn exponent_matches_hand_values() {
        // log_2(2/0.5) = 2, so the exponent is 3 and the grid 2^6 = 64.
        assert_eq!(round_up_exponent(2, 0.5), 3);
        assert_eq!(grid_size(2, 0.5).unwrap(), 64);
        // log_8(8) = 1 exactly.
        assert_eq!(round_up_exponent(8, 0.25), 2);
        assert_eq!(grid_size(8, 0.25).unwrap(), 4096);
    }

    #[test]
    fn cost_rounding_hand_values() {
        assert_eq!(cost_to_units(1.0, 64), 64);
        assert_eq!(cost_to_units(0.0, 64), 0);
        // 0.30 * 64 = 19.2 rounds up to 20 units = 0.3125.
        assert_eq!(cost_to_units(0.30, 64), 20);
        assert!((20.0_f64 / 64.0 - 0.3125).abs() < 1e-15);
    }

    #[test]
    fn round_up_respects_budget_and_grid_bounds() {
        let inst = reference_2x2();
        let scaled = scale_budget(&inst).unwrap();
        let eps = 0.5;
        let sol = solve_relaxation(
            &scaled,
            LpMode::Scaled { epsilon: eps },
            &SolveLimits::default(),
        )
        .unwrap();
        let grid = round_up_costs(&scaled, &sol, eps).unwrap();
        for (j, col) in sol.columns.iter().enumerate() {
            let c = scaled.scaled_cost(col.cost);
            let rounded = grid.rounded_cost(j);
            assert!(rounded >= c - 1e-12);
            assert!(rounded - c < 1.0 / grid.grid as f64 + 1e-12);
        }
        let total: f64 = sol
            .values
            .iter()
            .enumerate()
            .map(|(j, &x)| grid.rounded_cost(j) * x)
            .sum();
        assert!(total <= scaled.normalized_budget() + 1e-9);
    }
}
