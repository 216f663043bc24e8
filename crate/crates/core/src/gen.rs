//! Instance generation: random desk-scale instances, max-k-cover reduction
//! instances (which double as adversarial generators), and the line-planning
//! mapping onto the core model.

use crate::model::{Bin, Instance, Item, Link, WeightInterval};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum GenError {
    InvalidParams(String),
    InvalidLine { line: usize, message: String },
    Disconnected { from: usize, to: usize },
    Parse(String),
}

impl fmt::Display for GenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenError::InvalidParams(msg) => write!(f, "invalid generator parameters: {msg}"),
            GenError::InvalidLine { line, message } => write!(f, "line {line}: {message}"),
            GenError::Disconnected { from, to } => {
                write!(f, "graph disconnected: no path from node {from} to node {to}")
            }
            GenError::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for GenError {}

/// How the generated budget is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetSpec {
    Absolute(f64),
    /// Budget chosen so the normalized budget (budget over the most
    /// expensive configuration) equals this ratio.
    TargetRatio(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub bins: usize,
    pub items: usize,
    /// Inclusive range of capacity dimensions per bin.
    pub dims: (usize, usize),
    /// Inclusive range of each capacity entry.
    pub capacity: (u32, u32),
    pub open_cost: (f64, f64),
    pub assign_cost: (f64, f64),
    pub reward: (f64, f64),
    /// Probability that a (bin, item) pair is incompatible.
    pub incompatible_prob: f64,
    /// Inclusive range of per-item assignment limits.
    pub assign_limit: (u32, u32),
    /// Give every item one reward shared across bins.
    pub uniform_rewards: bool,
    pub budget: BudgetSpec,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            bins: 4,
            items: 10,
            dims: (1, 3),
            capacity: (1, 3),
            open_cost: (0.5, 2.0),
            assign_cost: (0.0, 0.0),
            reward: (0.5, 3.0),
            incompatible_prob: 0.15,
            assign_limit: (1, 2),
            uniform_rewards: false,
            budget: BudgetSpec::TargetRatio(4.0),
        }
    }
}

fn draw(rng: &mut impl Rng, range: (f64, f64)) -> f64 {
    if range.0 >= range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

fn draw_u32(rng: &mut impl Rng, range: (u32, u32)) -> u32 {
    rng.random_range(range.0..=range.1.max(range.0))
}

/// Draws a valid instance. Capacities start at one, so every link is a
/// feasible singleton and the instance always admits a configuration; if
/// the incompatibility draw removes every link, one is forced back in.
pub fn random_instance(params: &GenParams, rng: &mut impl Rng) -> Result<Instance, GenError> {
    if params.bins < 2 {
        return Err(GenError::InvalidParams(format!(
            "at least 2 bins required, got {}",
            params.bins
        )));
    }
    if params.items == 0 {
        return Err(GenError::InvalidParams("at least one item required".into()));
    }
    if params.capacity.0 < 1 {
        return Err(GenError::InvalidParams("capacity entries must be positive".into()));
    }
    if !(0.0..1.0).contains(&params.incompatible_prob) {
        return Err(GenError::InvalidParams(format!(
            "incompatible probability {} outside [0,1)",
            params.incompatible_prob
        )));
    }

    let bins: Vec<Bin> = (0..params.bins)
        .map(|_| {
            let dims = rng.random_range(params.dims.0.max(1)..=params.dims.1.max(params.dims.0));
            Bin {
                capacity: (0..dims).map(|_| draw_u32(rng, params.capacity)).collect(),
                open_cost: draw(rng, params.open_cost),
            }
        })
        .collect();
    let items: Vec<Item> = (0..params.items)
        .map(|_| Item { assign_limit: draw_u32(rng, params.assign_limit) })
        .collect();
    let item_rewards: Vec<f64> =
        (0..params.items).map(|_| draw(rng, params.reward)).collect();

    let mut instance = Instance::new(bins, items, 0.0);
    let mut any_link = false;
    for l in 0..params.bins {
        let dims = instance.bin(l).dims() as u32;
        for p in 0..params.items {
            if rng.random::<f64>() < params.incompatible_prob {
                continue;
            }
            let lo = rng.random_range(0..dims);
            let hi = rng.random_range(lo + 1..=dims);
            let reward = if params.uniform_rewards {
                item_rewards[p]
            } else {
                draw(rng, params.reward)
            };
            instance.set_link(
                l,
                p,
                Link {
                    interval: WeightInterval::new(lo, hi),
                    reward,
                    cost: draw(rng, params.assign_cost),
                },
            );
            any_link = true;
        }
    }
    if !any_link {
        instance.set_link(
            0,
            0,
            Link {
                interval: WeightInterval::new(0, 1),
                reward: draw(rng, params.reward),
                cost: draw(rng, params.assign_cost),
            },
        );
    }

    let budget = match params.budget {
        BudgetSpec::Absolute(b) => b,
        BudgetSpec::TargetRatio(ratio) => {
            let max_cost = crate::model::max_config_cost(&instance)
                .map_err(|e| GenError::InvalidParams(e.to_string()))?;
            ratio * max_cost
        }
    };
    instance.set_budget(budget);
    debug_assert!(instance.validate().is_empty(), "{:?}", instance.validate());
    Ok(instance)
}

/// Choose `k` of the given subsets maximizing the size of their union.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxKCoverInstance {
    pub num_elements: usize,
    /// Sorted, duplicate-free element lists; all nonempty.
    pub sets: Vec<Vec<usize>>,
    pub k: usize,
}

impl MaxKCoverInstance {
    pub fn new(
        num_elements: usize,
        sets: Vec<Vec<usize>>,
        k: usize,
    ) -> Result<Self, GenError> {
        let mut cleaned = Vec::with_capacity(sets.len());
        for (i, mut set) in sets.into_iter().enumerate() {
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return Err(GenError::InvalidParams(format!("set {i} is empty")));
            }
            if set.iter().any(|&e| e >= num_elements) {
                return Err(GenError::InvalidParams(format!(
                    "set {i} references an element outside 0..{num_elements}"
                )));
            }
            cleaned.push(set);
        }
        Ok(MaxKCoverInstance { num_elements, sets: cleaned, k })
    }

    /// Exhaustive cover optimum; the fidelity oracle for both reductions.
    pub fn cover_optimum(&self) -> usize {
        let num_sets = self.sets.len();
        assert!(num_sets <= 20, "cover enumeration capped at 20 sets");
        let k = self.k.min(num_sets);
        let masks: Vec<u64> = self
            .sets
            .iter()
            .map(|set| set.iter().fold(0u64, |m, &e| m | (1 << e)))
            .collect();
        let mut best = 0;
        for pick in 0u32..(1 << num_sets) {
            if pick.count_ones() as usize != k {
                continue;
            }
            let mut union = 0u64;
            for (j, &mask) in masks.iter().enumerate() {
                if pick & (1 << j) != 0 {
                    union |= mask;
                }
            }
            best = best.max(union.count_ones() as usize);
        }
        best
    }
}

/// Encodes max-k-cover in the core model: one bin per set with a 0/1
/// capacity vector marking covered elements, one unit-reward item per
/// element occupying its own dimension everywhere, unit opening costs, and
/// budget `k`. The exact optimum equals the cover optimum.
pub fn from_max_k_cover(mkc: &MaxKCoverInstance) -> Instance {
    let n = mkc.num_elements;
    let bins: Vec<Bin> = mkc
        .sets
        .iter()
        .map(|set| {
            let mut capacity = vec![0u32; n];
            for &e in set {
                capacity[e] = 1;
            }
            Bin { capacity, open_cost: 1.0 }
        })
        .collect();
    let items = vec![Item { assign_limit: 1 }; n];
    let mut instance = Instance::new(bins, items, mkc.k as f64);
    for l in 0..mkc.sets.len() {
        for e in 0..n {
            instance.set_link(
                l,
                e,
                Link {
                    interval: WeightInterval::new(e as u32, e as u32 + 1),
                    reward: 1.0,
                    cost: 0.0,
                },
            );
        }
    }
    instance
}

// --- line planning ------------------------------------------------------

/// Welfare rule for passenger-line matchings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WelfareRule {
    /// Worth 1 whenever the matching is usable: at least one trip endpoint
    /// lies within the walk radius of the line (radius 0 = on the line).
    Binary { walk_radius: f64 },
    /// Worth the direct-trip distance minus the first/last-mile legs,
    /// floored at zero; nonpositive savings make the pair incompatible.
    CarMilesSaved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RlppLine {
    /// Node sequence; each consecutive pair must be a graph edge.
    pub stops: Vec<usize>,
    pub frequency: u32,
    pub cost: f64,
}

/// A line-planning instance: pick lines under an operating budget and
/// assign each passenger to at most one picked line, respecting the
/// per-edge capacity `bus_capacity * frequency`.
#[derive(Debug, Clone, PartialEq)]
pub struct RlppInstance {
    pub num_nodes: usize,
    /// Undirected weighted edges `(u, v, length)`.
    pub edges: Vec<(usize, usize, f64)>,
    pub lines: Vec<RlppLine>,
    pub bus_capacity: u32,
    /// Passenger trips `(origin, destination)`.
    pub trips: Vec<(usize, usize)>,
    pub welfare: WelfareRule,
    pub budget: f64,
}

impl RlppInstance {
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.bus_capacity < 1 {
            out.push("bus capacity must be at least 1".into());
        }
        for (i, &(u, v, len)) in self.edges.iter().enumerate() {
            if u >= self.num_nodes || v >= self.num_nodes {
                out.push(format!("edge {i} endpoint outside 0..{}", self.num_nodes));
            }
            if !(len >= 0.0) || !len.is_finite() {
                out.push(format!("edge {i} has invalid length {len}"));
            }
        }
        let mut adjacent = std::collections::HashSet::new();
        for &(u, v, _) in &self.edges {
            adjacent.insert((u.min(v), u.max(v)));
        }
        for (l, line) in self.lines.iter().enumerate() {
            if line.stops.len() < 2 {
                out.push(format!("line {l} has fewer than two stops"));
            }
            if line.frequency < 1 {
                out.push(format!("line {l} frequency must be at least 1"));
            }
            for pair in line.stops.windows(2) {
                let key = (pair[0].min(pair[1]), pair[0].max(pair[1]));
                if !adjacent.contains(&key) {
                    out.push(format!(
                        "line {l}: stops {} and {} are not joined by an edge",
                        pair[0], pair[1]
                    ));
                }
            }
        }
        for (p, &(o, d)) in self.trips.iter().enumerate() {
            if o >= self.num_nodes || d >= self.num_nodes {
                out.push(format!("trip {p} endpoint outside 0..{}", self.num_nodes));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RlppFile::from(self)).expect("serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, GenError> {
        let file: RlppFile =
            serde_json::from_str(text).map_err(|e| GenError::Parse(e.to_string()))?;
        Ok(file.into_instance())
    }
}

/// All-pairs shortest paths over the undirected weighted graph.
fn shortest_paths(num_nodes: usize, edges: &[(usize, usize, f64)]) -> Vec<f64> {
    let n = num_nodes;
    let mut dist = vec![f64::INFINITY; n * n];
    for i in 0..n {
        dist[i * n + i] = 0.0;
    }
    for &(u, v, len) in edges {
        if len < dist[u * n + v] {
            dist[u * n + v] = len;
            dist[v * n + u] = len;
        }
    }
    for mid in 0..n {
        for a in 0..n {
            let base = dist[a * n + mid];
            if base.is_infinite() {
                continue;
            }
            for b in 0..n {
                let via = base + dist[mid * n + b];
                if via < dist[a * n + b] {
                    dist[a * n + b] = via;
                }
            }
        }
    }
    dist
}

/// Maps a line-planning instance onto the core model: each line becomes a
/// bin with one capacity dimension per edge (all entries
/// `bus_capacity * frequency`), each passenger an item with assignment
/// limit 1 and zero assignment cost, and the ridden sub-path a consecutive
/// interval of edge indices.
///
/// Boarding and alighting stops are chosen to minimize the first-mile plus
/// last-mile shortest-path distance, ties to the earliest boarding stop.
pub fn rlpp_build(rlpp: &RlppInstance) -> Result<Instance, GenError> {
    let violations = rlpp.validate();
    if let Some(first) = violations.into_iter().next() {
        return Err(GenError::InvalidParams(first));
    }
    let n = rlpp.num_nodes;
    let dist = shortest_paths(n, &rlpp.edges);
    let d = |a: usize, b: usize| dist[a * n + b];

    // The savings rule needs every trip's direct distance.
    if rlpp.welfare == WelfareRule::CarMilesSaved {
        for &(origin, dest) in &rlpp.trips {
            if d(origin, dest).is_infinite() {
                return Err(GenError::Disconnected { from: origin, to: dest });
            }
        }
    }

    let bins: Vec<Bin> = rlpp
        .lines
        .iter()
        .map(|line| Bin {
            capacity: vec![rlpp.bus_capacity * line.frequency; line.stops.len() - 1],
            open_cost: line.cost,
        })
        .collect();
    let items = vec![Item { assign_limit: 1 }; rlpp.trips.len()];
    let mut instance = Instance::new(bins, items, rlpp.budget);

    for (l, line) in rlpp.lines.iter().enumerate() {
        for (p, &(origin, dest)) in rlpp.trips.iter().enumerate() {
            // Best boarding/alighting stop pair by access distance.
            let mut best: Option<(f64, usize, usize)> = None;
            for (a, &board) in line.stops.iter().enumerate() {
                for (b, &alight) in line.stops.iter().enumerate() {
                    if a == b {
                        continue;
                    }
                    let access = d(origin, board) + d(alight, dest);
                    if access.is_finite()
                        && best.is_none_or(|(acc, ba, bb)| {
                            access < acc - 1e-12
                                || ((access - acc).abs() <= 1e-12 && (a, b) < (ba, bb))
                        })
                    {
                        best = Some((access, a, b));
                    }
                }
            }
            let Some((access, a, b)) = best else { continue };
            let interval = WeightInterval::new(a.min(b) as u32, a.max(b) as u32);
            let reward = match rlpp.welfare {
                WelfareRule::Binary { walk_radius } => {
                    let origin_near =
                        line.stops.iter().any(|&s| d(origin, s) <= walk_radius + 1e-12);
                    let dest_near =
                        line.stops.iter().any(|&s| d(dest, s) <= walk_radius + 1e-12);
                    if origin_near || dest_near {
                        1.0
                    } else {
                        continue;
                    }
                }
                WelfareRule::CarMilesSaved => {
                    let savings = d(origin, dest) - access;
                    if savings <= 1e-12 {
                        continue;
                    }
                    savings
                }
            };
            instance.set_link(l, p, Link { interval, reward, cost: 0.0 });
        }
    }
    Ok(instance)
}

/// Encodes max-k-cover as a line-planning instance on a complete unit-length
/// graph: element `i` becomes the trip `2i -> 2i+1`, and the line of a set
/// threads its elements' trip edges with unit-capacity buses. Building the
/// core instance from it reproduces the cover optimum.
pub fn rlpp_from_max_k_cover(mkc: &MaxKCoverInstance) -> RlppInstance {
    let n = mkc.num_elements;
    let num_nodes = 2 * n;
    let mut edges = Vec::new();
    for u in 0..num_nodes {
        for v in u + 1..num_nodes {
            edges.push((u, v, 1.0));
        }
    }
    let lines = mkc
        .sets
        .iter()
        .map(|set| {
            let mut stops = Vec::with_capacity(2 * set.len());
            for &e in set {
                stops.push(2 * e);
                stops.push(2 * e + 1);
            }
            RlppLine { stops, frequency: 1, cost: 1.0 }
        })
        .collect();
    RlppInstance {
        num_nodes,
        edges,
        lines,
        bus_capacity: 1,
        trips: (0..n).map(|i| (2 * i, 2 * i + 1)).collect(),
        welfare: WelfareRule::Binary { walk_radius: 0.0 },
        budget: mkc.k as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRlppParams {
    pub width: usize,
    pub height: usize,
    pub lines: usize,
    pub trips: usize,
    pub bus_capacity: u32,
    pub frequency: (u32, u32),
    /// Operating cost per unit of line length.
    pub cost_per_length: f64,
    pub budget: f64,
    pub welfare: WelfareRule,
}

impl Default for GridRlppParams {
    fn default() -> Self {
        GridRlppParams {
            width: 8,
            height: 6,
            lines: 24,
            trips: 220,
            bus_capacity: 4,
            frequency: (1, 3),
            cost_per_length: 1.0,
            budget: 30.0,
            welfare: WelfareRule::CarMilesSaved,
        }
    }
}

/// Random grid-graph line pool: L-shaped routes (along a row, then down a
/// column) over a width x height lattice with jittered edge lengths, plus
/// uniformly drawn passenger trips.
pub fn rlpp_grid(params: &GridRlppParams, rng: &mut impl Rng) -> Result<RlppInstance, GenError> {
    let (w, h) = (params.width, params.height);
    if w < 2 || h < 2 {
        return Err(GenError::InvalidParams("grid must be at least 2 x 2".into()));
    }
    if params.lines == 0 || params.trips == 0 {
        return Err(GenError::InvalidParams("need at least one line and one trip".into()));
    }
    let node = |r: usize, c: usize| r * w + c;
    let mut edges = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if c + 1 < w {
                edges.push((node(r, c), node(r, c + 1), rng.random_range(0.5..1.5)));
            }
            if r + 1 < h {
                edges.push((node(r, c), node(r + 1, c), rng.random_range(0.5..1.5)));
            }
        }
    }
    let edge_len: std::collections::HashMap<(usize, usize), f64> = edges
        .iter()
        .map(|&(u, v, len)| ((u.min(v), u.max(v)), len))
        .collect();

    let mut lines = Vec::with_capacity(params.lines);
    while lines.len() < params.lines {
        let (r1, c1) = (rng.random_range(0..h), rng.random_range(0..w));
        let (r2, c2) = (rng.random_range(0..h), rng.random_range(0..w));
        if (r1, c1) == (r2, c2) {
            continue;
        }
        let mut stops = vec![node(r1, c1)];
        let mut c = c1;
        while c != c2 {
            c = if c < c2 { c + 1 } else { c - 1 };
            stops.push(node(r1, c));
        }
        let mut r = r1;
        while r != r2 {
            r = if r < r2 { r + 1 } else { r - 1 };
            stops.push(node(r, c2));
        }
        let length: f64 = stops
            .windows(2)
            .map(|pair| edge_len[&(pair[0].min(pair[1]), pair[0].max(pair[1]))])
            .sum();
        lines.push(RlppLine {
            stops,
            frequency: draw_u32(rng, params.frequency),
            cost: length * params.cost_per_length,
        });
    }

    let num_nodes = w * h;
    let mut trips = Vec::with_capacity(params.trips);
    while trips.len() < params.trips {
        let o = rng.random_range(0..num_nodes);
        let d = rng.random_range(0..num_nodes);
        if o != d {
            trips.push((o, d));
        }
    }
    Ok(RlppInstance {
        num_nodes,
        edges,
        lines,
        bus_capacity: params.bus_capacity,
        trips,
        welfare: params.welfare,
        budget: params.budget,
    })
}

// --- line-planning file format -------------------------------------------

#[derive(Serialize, Deserialize)]
struct RlppFile {
    nodes: usize,
    edges: Vec<(usize, usize, f64)>,
    lines: Vec<RlppLineFile>,
    capacity: u32,
    trips: Vec<(usize, usize)>,
    welfare: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    walk_radius: Option<f64>,
    #[serde(rename = "B")]
    budget: f64,
}

#[derive(Serialize, Deserialize)]
struct RlppLineFile {
    stops: Vec<usize>,
    frequency: u32,
    cost: f64,
}

impl From<&RlppInstance> for RlppFile {
    fn from(rlpp: &RlppInstance) -> Self {
        let (welfare, walk_radius) = match rlpp.welfare {
            WelfareRule::Binary { walk_radius } => ("binary".to_string(), Some(walk_radius)),
            WelfareRule::CarMilesSaved => ("car-miles".to_string(), None),
        };
        RlppFile {
            nodes: rlpp.num_nodes,
            edges: rlpp.edges.clone(),
            lines: rlpp
                .lines
                .iter()
                .map(|l| RlppLineFile {
                    stops: l.stops.clone(),
                    frequency: l.frequency,
                    cost: l.cost,
                })
                .collect(),
            capacity: rlpp.bus_capacity,
            trips: rlpp.trips.clone(),
            welfare,
            walk_radius,
            budget: rlpp.budget,
        }
    }
}

impl RlppFile {
    fn into_instance(self) -> RlppInstance {
        let welfare = match self.welfare.as_str() {
            "car-miles" => WelfareRule::CarMilesSaved,
            _ => WelfareRule::Binary { walk_radius: self.walk_radius.unwrap_or(0.0) },
        };
        RlppInstance {
            num_nodes: self.nodes,
            edges: self.edges,
            lines: self
                .lines
                .into_iter()
                .map(|l| RlppLine { stops: l.stops, frequency: l.frequency, cost: l.cost })
                .collect(),
            bus_capacity: self.capacity,
            trips: self.trips,
            welfare,
            budget: self.budget,
        }
    }
}
