//! Brute-force oracles for tiny instances: configuration enumeration, the
//! exact 0/1 optimum, and the fully-enumerated configuration LP. These exist
//! to certify the column-generation and rounding paths, not to be fast.

use crate::colgen::{build_master, FractionalSolution};
use crate::lp::{self, LpError, LpStatus};
use crate::model::{
    check_feasible, AssignmentSolution, Configuration, Instance, ModelError, FEAS_EPS,
};
use std::fmt;

/// Most compatible items a single bin may have before enumeration refuses.
const MAX_COMPAT_ITEMS: usize = 20;
/// Cap on the per-bin configuration product explored by `brute_force`.
const MAX_SEARCH_NODES: u128 = 1 << 24;
/// Cap on the total column count accepted by `full_lp`.
const MAX_COLUMNS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum ExactError {
    TooLarge(String),
    Model(ModelError),
    Lp(LpError),
}

impl fmt::Display for ExactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactError::TooLarge(msg) => write!(f, "instance too large for oracle: {msg}"),
            ExactError::Model(e) => write!(f, "{e}"),
            ExactError::Lp(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ExactError {}

impl From<ModelError> for ExactError {
    fn from(e: ModelError) -> Self {
        ExactError::Model(e)
    }
}

impl From<LpError> for ExactError {
    fn from(e: LpError) -> Self {
        ExactError::Lp(e)
    }
}

/// Enumerates every nonempty capacity-feasible item set of bin `l`, in
/// lexicographic order of the sorted item lists.
pub fn enumerate_configs(instance: &Instance, l: usize) -> Result<Vec<Configuration>, ExactError> {
    let compatible: Vec<usize> = instance.compatible_items(l).map(|(p, _)| p).collect();
    if compatible.len() > MAX_COMPAT_ITEMS {
        return Err(ExactError::TooLarge(format!(
            "bin {l} has {} compatible items, limit {MAX_COMPAT_ITEMS}",
            compatible.len()
        )));
    }
    struct Enumerate<'a> {
        instance: &'a Instance,
        bin: usize,
        compatible: &'a [usize],
        load: Vec<u32>,
        current: Vec<usize>,
        out: Vec<Configuration>,
    }

    impl Enumerate<'_> {
        fn run(&mut self, start: usize) {
            for idx in start..self.compatible.len() {
                let p = self.compatible[idx];
                let iv = self.instance.link(self.bin, p).expect("compatible").interval;
                let capacity = &self.instance.bin(self.bin).capacity;
                let fits = (iv.lo..iv.hi).all(|i| self.load[i as usize] < capacity[i as usize]);
                if !fits {
                    continue;
                }
                for i in iv.lo..iv.hi {
                    self.load[i as usize] += 1;
                }
                self.current.push(p);
                self.out.push(Configuration {
                    bin: self.bin,
                    items: self.current.clone(),
                    cost: self.instance.config_cost(self.bin, &self.current),
                });
                self.run(idx + 1);
                self.current.pop();
                for i in iv.lo..iv.hi {
                    self.load[i as usize] -= 1;
                }
            }
        }
    }

    let mut search = Enumerate {
        instance,
        bin: l,
        compatible: &compatible,
        load: vec![0u32; instance.bin(l).dims()],
        current: Vec::new(),
        out: Vec::new(),
    };
    search.run(0);
    Ok(search.out)
}

fn enumerate_all(instance: &Instance) -> Result<Vec<Vec<Configuration>>, ExactError> {
    (0..instance.num_bins()).map(|l| enumerate_configs(instance, l)).collect()
}

/// Exhaustive optimum of the 0/1 assignment problem. The search walks the
/// per-bin configuration lists (plus "closed") in order, pruning on budget,
/// per-item limits, and an optimistic reward bound, so the winner is the
/// lexicographically first maximizer and deterministic.
pub fn brute_force(instance: &Instance) -> Result<AssignmentSolution, ExactError> {
    let per_bin = enumerate_all(instance)?;
    let mut nodes: u128 = 1;
    for configs in &per_bin {
        nodes = nodes.saturating_mul(configs.len() as u128 + 1);
        if nodes > MAX_SEARCH_NODES {
            return Err(ExactError::TooLarge(format!(
                "configuration product exceeds {MAX_SEARCH_NODES} nodes"
            )));
        }
    }

    let rewards: Vec<Vec<f64>> = per_bin
        .iter()
        .map(|configs| configs.iter().map(|c| c.reward_sum(instance)).collect())
        .collect();
    // suffix_best[l] bounds the reward obtainable from bins l..L.
    let mut suffix_best = vec![0.0; instance.num_bins() + 1];
    for l in (0..instance.num_bins()).rev() {
        let best_here = rewards[l].iter().cloned().fold(0.0, f64::max);
        suffix_best[l] = suffix_best[l + 1] + best_here;
    }

    struct Search<'a> {
        instance: &'a Instance,
        per_bin: &'a [Vec<Configuration>],
        rewards: &'a [Vec<f64>],
        suffix_best: &'a [f64],
        budget_cap: f64,
        uses: Vec<u32>,
        choice: Vec<Option<usize>>,
        best_value: f64,
        best_choice: Vec<Option<usize>>,
    }

    impl Search<'_> {
        fn run(&mut self, l: usize, spent: f64, value: f64) {
            if value + self.suffix_best[l] <= self.best_value {
                return;
            }
            if l == self.per_bin.len() {
                if value > self.best_value {
                    self.best_value = value;
                    self.best_choice = self.choice.clone();
                }
                return;
            }
            self.choice[l] = None;
            self.run(l + 1, spent, value);
            'configs: for (idx, config) in self.per_bin[l].iter().enumerate() {
                if spent + config.cost > self.budget_cap {
                    continue;
                }
                for &p in &config.items {
                    if self.uses[p] >= self.instance.item(p).assign_limit {
                        continue 'configs;
                    }
                }
                for &p in &config.items {
                    self.uses[p] += 1;
                }
                self.choice[l] = Some(idx);
                self.run(l + 1, spent + config.cost, value + self.rewards[l][idx]);
                self.choice[l] = None;
                for &p in &config.items {
                    self.uses[p] -= 1;
                }
            }
        }
    }

    let mut search = Search {
        instance,
        per_bin: &per_bin,
        rewards: &rewards,
        suffix_best: &suffix_best,
        budget_cap: instance.budget() + FEAS_EPS * instance.budget().max(1.0),
        uses: vec![0; instance.num_items()],
        choice: vec![None; instance.num_bins()],
        best_value: -1.0,
        best_choice: vec![None; instance.num_bins()],
    };
    search.run(0, 0.0, 0.0);

    let mut open = vec![false; instance.num_bins()];
    let mut assigned = vec![Vec::new(); instance.num_bins()];
    for (l, choice) in search.best_choice.iter().enumerate() {
        if let Some(idx) = choice {
            open[l] = true;
            assigned[l] = per_bin[l][*idx].items.clone();
        }
    }
    let solution = AssignmentSolution::build(instance, open, assigned);
    let report = check_feasible(instance, &solution)?;
    assert!(report.all_ok(), "oracle produced an infeasible optimum: {report}");
    Ok(solution)
}

/// Solves the configuration LP over *all* enumerated columns, in original
/// cost units against the instance budget. Certifies column generation.
pub fn full_lp(instance: &Instance) -> Result<FractionalSolution, ExactError> {
    let per_bin = enumerate_all(instance)?;
    let columns: Vec<Configuration> = per_bin.into_iter().flatten().collect();
    if columns.is_empty() {
        return Ok(FractionalSolution::zero());
    }
    if columns.len() > MAX_COLUMNS {
        return Err(ExactError::TooLarge(format!(
            "{} columns exceed the {MAX_COLUMNS} cap",
            columns.len()
        )));
    }
    let master = build_master(instance, &columns, instance.budget(), &|c| c.cost);
    let res = lp::solve(&master)?;
    debug_assert_eq!(res.status, LpStatus::Optimal);

    let mut out_columns = Vec::new();
    let mut out_values = Vec::new();
    let mut budget_used = 0.0;
    for (col, &x) in columns.iter().zip(&res.primal) {
        if x > 1e-12 {
            budget_used += col.cost * x;
            out_columns.push(col.clone());
            out_values.push(x);
        }
    }
    Ok(FractionalSolution {
        columns: out_columns,
        values: out_values,
        lp_value: res.objective,
        budget_used,
        converged: true,
        round_values: vec![res.objective],
    })
}
