//! Problem data model: bins with multi-dimensional capacities, items with
//! consecutive-ones weight intervals, assignment solutions, and budget
//! normalization.
//!
//! An instance has `L` bins and `P` items. Bin `l` carries an opening cost
//! and an integer capacity vector. Each compatible `(bin, item)` pair carries
//! a half-open interval `[lo, hi)` of capacity dimensions the item occupies
//! (one unit in each), a reward, and an assignment cost. A single budget
//! bounds the total of opening and assignment costs, and each item may be
//! placed in at most `assign_limit` distinct bins.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Relative slack allowed when checking budget-like real constraints.
pub const FEAS_EPS: f64 = 1e-9;
/// Relative error allowed when round-tripping cost scaling.
pub const SCALE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    DimensionMismatch(String),
    /// No bin admits a nonempty feasible configuration.
    TrivialInstance,
    /// Every configuration has cost zero, so the normalized budget is undefined.
    UndefinedScale,
    Parse(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            ModelError::TrivialInstance => {
                write!(f, "trivial instance: no bin admits a nonempty configuration")
            }
            ModelError::UndefinedScale => {
                write!(f, "normalized budget undefined: maximum configuration cost is zero")
            }
            ModelError::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for ModelError {}

/// Half-open run `[lo, hi)` of capacity dimensions occupied by an item.
///
/// The consecutive-ones structure of the weight vectors makes this interval
/// representation lossless, and per-dimension load checks run off a
/// difference array instead of dense 0/1 vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightInterval {
    pub lo: u32,
    pub hi: u32,
}

impl WeightInterval {
    pub fn new(lo: u32, hi: u32) -> Self {
        WeightInterval { lo, hi }
    }

    pub fn len(&self) -> u32 {
        self.hi.saturating_sub(self.lo)
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
}

/// Data attached to a compatible `(bin, item)` pair. Incompatible pairs are
/// not stored at all; they contribute zero reward and cost and are excluded
/// from pricing and rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub interval: WeightInterval,
    pub reward: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    /// Integer capacity per dimension; the length is the bin's dimension count.
    pub capacity: Vec<u32>,
    pub open_cost: f64,
}

impl Bin {
    pub fn dims(&self) -> usize {
        self.capacity.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Item {
    /// Maximum number of distinct bins this item may be assigned to.
    pub assign_limit: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    bins: Vec<Bin>,
    items: Vec<Item>,
    /// Dense `L * P` table; `None` marks an incompatible pair.
    links: Vec<Option<Link>>,
    budget: f64,
}

impl Instance {
    pub fn new(bins: Vec<Bin>, items: Vec<Item>, budget: f64) -> Self {
        let links = vec![None; bins.len() * items.len()];
        Instance { bins, items, links, budget }
    }

    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn set_budget(&mut self, budget: f64) {
        self.budget = budget;
    }

    pub fn bin(&self, l: usize) -> &Bin {
        &self.bins[l]
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn item(&self, p: usize) -> &Item {
        &self.items[p]
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn link(&self, l: usize, p: usize) -> Option<&Link> {
        self.links[l * self.items.len() + p].as_ref()
    }

    pub fn set_link(&mut self, l: usize, p: usize, link: Link) {
        let idx = l * self.items.len() + p;
        self.links[idx] = Some(link);
    }

    pub fn reward(&self, l: usize, p: usize) -> f64 {
        self.link(l, p).map_or(0.0, |lk| lk.reward)
    }

    pub fn assign_cost(&self, l: usize, p: usize) -> f64 {
        self.link(l, p).map_or(0.0, |lk| lk.cost)
    }

    /// Items compatible with bin `l`, in item order.
    pub fn compatible_items(&self, l: usize) -> impl Iterator<Item = (usize, &Link)> {
        let base = l * self.items.len();
        self.links[base..base + self.items.len()]
            .iter()
            .enumerate()
            .filter_map(|(p, lk)| lk.as_ref().map(|lk| (p, lk)))
    }

    /// Smallest assignment limit over all items.
    pub fn min_assign_limit(&self) -> u32 {
        self.items.iter().map(|it| it.assign_limit).min().unwrap_or(1)
    }

    /// Whether the given item set respects bin `l`'s capacity in every
    /// dimension. Runs a difference array over the intervals.
    pub fn fits(&self, l: usize, items: &[usize]) -> bool {
        let dims = self.bins[l].dims();
        let mut delta = vec![0i64; dims + 1];
        for &p in items {
            match self.link(l, p) {
                Some(lk) => {
                    delta[lk.interval.lo as usize] += 1;
                    delta[lk.interval.hi as usize] -= 1;
                }
                None => return false,
            }
        }
        let mut load = 0i64;
        for (i, d) in delta[..dims].iter().enumerate() {
            load += d;
            if load > i64::from(self.bins[l].capacity[i]) {
                return false;
            }
        }
        true
    }

    /// Whether item `p` alone fits in bin `l`.
    pub fn singleton_fits(&self, l: usize, p: usize) -> bool {
        match self.link(l, p) {
            Some(lk) => {
                let lo = lk.interval.lo as usize;
                let hi = lk.interval.hi as usize;
                hi <= self.bins[l].dims() && self.bins[l].capacity[lo..hi].iter().all(|&c| c >= 1)
            }
            None => false,
        }
    }

    /// Opening cost of bin `l` plus the assignment costs of `items` there.
    pub fn config_cost(&self, l: usize, items: &[usize]) -> f64 {
        self.bins[l].open_cost + items.iter().map(|&p| self.assign_cost(l, p)).sum::<f64>()
    }

    /// Collects every invariant violation as a human-readable message.
    /// An empty list certifies a well-formed instance.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.num_bins() < 2 {
            out.push(format!("L >= 2 required, got L = {}", self.num_bins()));
        }
        if !(self.budget >= 0.0) || !self.budget.is_finite() {
            out.push(format!("budget must be finite and nonnegative, got {}", self.budget));
        }
        for (l, bin) in self.bins.iter().enumerate() {
            if bin.dims() == 0 {
                out.push(format!("bin {l}: capacity vector is empty"));
            }
            if !(bin.open_cost >= 0.0) || !bin.open_cost.is_finite() {
                out.push(format!("bin {l}: open cost must be finite and nonnegative"));
            }
        }
        for (p, item) in self.items.iter().enumerate() {
            if item.assign_limit == 0 {
                out.push(format!("item {p}: assignment limit must be positive"));
            }
        }
        for l in 0..self.num_bins() {
            for p in 0..self.num_items() {
                let Some(lk) = self.link(l, p) else { continue };
                let dims = self.bins[l].dims() as u32;
                if lk.interval.lo >= lk.interval.hi || lk.interval.hi > dims {
                    out.push(format!(
                        "link ({l},{p}): interval [{},{}) outside [0,{dims})",
                        lk.interval.lo, lk.interval.hi
                    ));
                }
                if !(lk.reward >= 0.0) || !lk.reward.is_finite() {
                    out.push(format!("link ({l},{p}): reward must be finite and nonnegative"));
                }
                if !(lk.cost >= 0.0) || !lk.cost.is_finite() {
                    out.push(format!("link ({l},{p}): cost must be finite and nonnegative"));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile::from(self);
        serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        file.into_instance()
    }
}

/// A nonempty, capacity-feasible item set for one bin: one column of the
/// configuration LP. The cost aggregates the bin opening cost and the
/// per-item assignment costs.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub bin: usize,
    /// Sorted, duplicate-free item ids.
    pub items: Vec<usize>,
    pub cost: f64,
}

impl Configuration {
    /// Builds and checks a configuration: nonempty, compatible items only,
    /// capacity respected in every dimension.
    pub fn new(instance: &Instance, bin: usize, mut items: Vec<usize>) -> Result<Self, String> {
        items.sort_unstable();
        items.dedup();
        if items.is_empty() {
            return Err(format!("bin {bin}: empty configurations are not admitted"));
        }
        for &p in &items {
            if instance.link(bin, p).is_none() {
                return Err(format!("bin {bin}: item {p} is incompatible"));
            }
        }
        if !instance.fits(bin, &items) {
            return Err(format!("bin {bin}: items {items:?} exceed capacity"));
        }
        let cost = instance.config_cost(bin, &items);
        Ok(Configuration { bin, items, cost })
    }

    pub fn contains(&self, p: usize) -> bool {
        self.items.binary_search(&p).is_ok()
    }

    pub fn reward_sum(&self, instance: &Instance) -> f64 {
        self.items.iter().map(|&p| instance.reward(self.bin, p)).sum()
    }
}

/// A 0/1 assignment: which bins are open and which items sit in each bin.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentSolution {
    pub open: Vec<bool>,
    /// Per bin, the sorted items assigned to it.
    pub assigned: Vec<Vec<usize>>,
    pub objective: f64,
    pub total_cost: f64,
}

impl AssignmentSolution {
    pub fn empty(instance: &Instance) -> Self {
        AssignmentSolution {
            open: vec![false; instance.num_bins()],
            assigned: vec![Vec::new(); instance.num_bins()],
            objective: 0.0,
            total_cost: 0.0,
        }
    }

    /// Assembles a solution and fills in its objective and total cost.
    pub fn build(instance: &Instance, open: Vec<bool>, mut assigned: Vec<Vec<usize>>) -> Self {
        for items in &mut assigned {
            items.sort_unstable();
            items.dedup();
        }
        let mut objective = 0.0;
        let mut total_cost = 0.0;
        for l in 0..instance.num_bins() {
            if open[l] {
                total_cost += instance.bin(l).open_cost;
            }
            for &p in &assigned[l] {
                objective += instance.reward(l, p);
                total_cost += instance.assign_cost(l, p);
            }
        }
        AssignmentSolution { open, assigned, objective, total_cost }
    }
}

/// Outcome of the four feasibility checks on an assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub budget_ok: bool,
    pub capacity_ok: bool,
    pub limit_ok: bool,
    pub linkage_ok: bool,
}

impl FeasibilityReport {
    pub fn all_ok(&self) -> bool {
        self.budget_ok && self.capacity_ok && self.limit_ok && self.linkage_ok
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "budget={} capacity={} limit={} linkage={}",
            self.budget_ok, self.capacity_ok, self.limit_ok, self.linkage_ok
        )
    }
}

/// Checks budget, per-dimension capacity, per-item assignment limits, and
/// the open/assign linkage. Budget allows `FEAS_EPS` relative slack; the
/// integer checks are exact.
pub fn check_feasible(
    instance: &Instance,
    sol: &AssignmentSolution,
) -> Result<FeasibilityReport, ModelError> {
    if sol.open.len() != instance.num_bins() || sol.assigned.len() != instance.num_bins() {
        return Err(ModelError::DimensionMismatch(format!(
            "solution covers {} bins, instance has {}",
            sol.open.len(),
            instance.num_bins()
        )));
    }
    for items in &sol.assigned {
        if let Some(&p) = items.iter().find(|&&p| p >= instance.num_items()) {
            return Err(ModelError::DimensionMismatch(format!(
                "item id {p} out of range for {} items",
                instance.num_items()
            )));
        }
    }

    let mut capacity_ok = true;
    let mut linkage_ok = true;
    let mut cost = 0.0;
    let mut uses = vec![0u32; instance.num_items()];
    for l in 0..instance.num_bins() {
        if sol.open[l] {
            cost += instance.bin(l).open_cost;
        }
        if !sol.assigned[l].is_empty() && !sol.open[l] {
            linkage_ok = false;
        }
        // Closed bins have zero effective capacity, so any assigned item
        // also breaches the capacity rows.
        if !sol.assigned[l].is_empty() {
            let within = sol.open[l] && instance.fits(l, &sol.assigned[l]);
            if !within {
                capacity_ok = false;
            }
        }
        for &p in &sol.assigned[l] {
            uses[p] += 1;
            cost += instance.assign_cost(l, p);
            if instance.link(l, p).is_none() {
                capacity_ok = false;
            }
        }
    }
    let limit_ok =
        uses.iter().zip(instance.items()).all(|(&u, item)| u <= item.assign_limit);
    let budget_ok = cost <= instance.budget() + FEAS_EPS * instance.budget().max(1.0);
    Ok(FeasibilityReport { budget_ok, capacity_ok, limit_ok, linkage_ok })
}

/// Total reward of the assignment.
pub fn objective(instance: &Instance, sol: &AssignmentSolution) -> Result<f64, ModelError> {
    if sol.assigned.len() != instance.num_bins() {
        return Err(ModelError::DimensionMismatch(format!(
            "solution covers {} bins, instance has {}",
            sol.assigned.len(),
            instance.num_bins()
        )));
    }
    let mut total = 0.0;
    for (l, items) in sol.assigned.iter().enumerate() {
        for &p in items {
            total += instance.reward(l, p);
        }
    }
    Ok(total)
}

/// An instance together with its budget normalization: after dividing all
/// configuration costs by the most expensive feasible configuration, costs
/// lie in `[0, 1]` with maximum exactly 1 and the budget becomes
/// `normalized_budget`.
#[derive(Debug, Clone)]
pub struct ScaledInstance {
    base: Instance,
    normalized_budget: f64,
    max_config_cost: f64,
}

impl ScaledInstance {
    pub fn base(&self) -> &Instance {
        &self.base
    }

    /// Budget in units of the most expensive configuration.
    pub fn normalized_budget(&self) -> f64 {
        self.normalized_budget
    }

    pub fn max_config_cost(&self) -> f64 {
        self.max_config_cost
    }

    pub fn scaled_cost(&self, cost: f64) -> f64 {
        cost / self.max_config_cost
    }

    pub fn scaled_open_cost(&self, l: usize) -> f64 {
        self.base.bin(l).open_cost / self.max_config_cost
    }

    pub fn scaled_assign_cost(&self, l: usize, p: usize) -> f64 {
        self.base.assign_cost(l, p) / self.max_config_cost
    }

    pub fn unscale(&self, scaled_cost: f64) -> f64 {
        scaled_cost * self.max_config_cost
    }
}

/// Largest cost of any nonempty feasible configuration, computed exactly:
/// per bin, a cost-maximizing interval packing (integral by the
/// consecutive-ones structure) plus the opening cost; then the max over bins
/// that admit at least one feasible singleton.
pub fn max_config_cost(instance: &Instance) -> Result<f64, ModelError> {
    let mut best: Option<f64> = None;
    for l in 0..instance.num_bins() {
        let feasible: Vec<(usize, &Link)> = instance
            .compatible_items(l)
            .filter(|&(p, _)| instance.singleton_fits(l, p))
            .collect();
        if feasible.is_empty() {
            continue;
        }
        let entries: Vec<(u32, u32, f64)> = feasible
            .iter()
            .filter(|(_, lk)| lk.cost > 0.0)
            .map(|(_, lk)| (lk.interval.lo, lk.interval.hi, lk.cost))
            .collect();
        let packing = if entries.is_empty() {
            0.0
        } else {
            let lp = crate::lp::interval_packing_lp(&instance.bin(l).capacity, &entries);
            let res = crate::lp::solve(&lp).map_err(|e| ModelError::Parse(e.to_string()))?;
            res.objective
        };
        let total = instance.bin(l).open_cost + packing;
        best = Some(best.map_or(total, |b: f64| b.max(total)));
    }
    best.ok_or(ModelError::TrivialInstance)
}

/// Normalizes the budget: `normalized_budget = B / max_config_cost`.
pub fn scale_budget(instance: &Instance) -> Result<ScaledInstance, ModelError> {
    let max_cost = max_config_cost(instance)?;
    if max_cost <= 0.0 {
        return Err(ModelError::UndefinedScale);
    }
    Ok(ScaledInstance {
        normalized_budget: instance.budget() / max_cost,
        max_config_cost: max_cost,
        base: instance.clone(),
    })
}

// --- instance file format ----------------------------------------------
//
// A single JSON document:
//   { "L": …, "P": …, "bins": [{"n": …, "f": […], "c": …}],
//     "items": [{"rho": …}], "links": [{"l": …, "p": …, "lo": …, "hi": …,
//     "v": …, "c": …}], "B": … }
// Absent links mark incompatible pairs. Indices are 0-based, reals decimal.

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    #[serde(rename = "L")]
    num_bins: usize,
    #[serde(rename = "P")]
    num_items: usize,
    bins: Vec<BinFile>,
    items: Vec<ItemFile>,
    links: Vec<LinkFile>,
    #[serde(rename = "B")]
    budget: f64,
}

#[derive(Serialize, Deserialize)]
struct BinFile {
    n: usize,
    f: Vec<u32>,
    c: f64,
}

#[derive(Serialize, Deserialize)]
struct ItemFile {
    rho: u32,
}

#[derive(Serialize, Deserialize)]
struct LinkFile {
    l: usize,
    p: usize,
    lo: u32,
    hi: u32,
    v: f64,
    c: f64,
}

impl From<&Instance> for InstanceFile {
    fn from(instance: &Instance) -> Self {
        let mut links = Vec::new();
        for l in 0..instance.num_bins() {
            for (p, lk) in instance.compatible_items(l) {
                links.push(LinkFile {
                    l,
                    p,
                    lo: lk.interval.lo,
                    hi: lk.interval.hi,
                    v: lk.reward,
                    c: lk.cost,
                });
            }
        }
        InstanceFile {
            num_bins: instance.num_bins(),
            num_items: instance.num_items(),
            bins: instance
                .bins()
                .iter()
                .map(|b| BinFile { n: b.dims(), f: b.capacity.clone(), c: b.open_cost })
                .collect(),
            items: instance.items().iter().map(|it| ItemFile { rho: it.assign_limit }).collect(),
            links,
            budget: instance.budget(),
        }
    }
}

impl InstanceFile {
    fn into_instance(self) -> Result<Instance, ModelError> {
        if self.bins.len() != self.num_bins {
            return Err(ModelError::Parse(format!(
                "L = {} but {} bins listed",
                self.num_bins,
                self.bins.len()
            )));
        }
        if self.items.len() != self.num_items {
            return Err(ModelError::Parse(format!(
                "P = {} but {} items listed",
                self.num_items,
                self.items.len()
            )));
        }
        let mut bins = Vec::with_capacity(self.num_bins);
        for (l, b) in self.bins.into_iter().enumerate() {
            if b.f.len() != b.n {
                return Err(ModelError::Parse(format!(
                    "bin {l}: n = {} but {} capacities listed",
                    b.n,
                    b.f.len()
                )));
            }
            bins.push(Bin { capacity: b.f, open_cost: b.c });
        }
        let items: Vec<Item> =
            self.items.into_iter().map(|it| Item { assign_limit: it.rho }).collect();
        let mut instance = Instance::new(bins, items, self.budget);
        for lk in self.links {
            if lk.l >= instance.num_bins() || lk.p >= instance.num_items() {
                return Err(ModelError::Parse(format!(
                    "link ({}, {}) out of range",
                    lk.l, lk.p
                )));
            }
            instance.set_link(
                lk.l,
                lk.p,
                Link {
                    interval: WeightInterval::new(lk.lo, lk.hi),
                    reward: lk.v,
                    cost: lk.c,
                },
            );
        }
        Ok(instance)
    }
}
