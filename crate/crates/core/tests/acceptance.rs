//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measurements. Tests serialize on a gate mutex so the per-criterion
//! wall-clock budgets are measured without interference; the inner work is
//! rayon-parallel regardless.

use budget_assign::colgen::{solve_relaxation, LpMode, SolveLimits};
use budget_assign::exact::{brute_force, full_lp};
use budget_assign::gen::{
    from_max_k_cover, random_instance, rlpp_build, rlpp_from_max_k_cover, rlpp_grid, BudgetSpec,
    GenParams, GridRlppParams, MaxKCoverInstance, WelfareRule,
};
use budget_assign::harness::{compare, simulate, write_best_csv, write_trials_csv, RunOptions};
use budget_assign::lp;
use budget_assign::magician::{new_magician, BoxDistribution};
use budget_assign::model::{scale_budget, Instance};
use budget_assign::rounding::Algorithm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Mutex;
use std::time::{Duration, Instant};

static GATE: Mutex<()> = Mutex::new(());

fn gate() -> std::sync::MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

/// One randomized magician workload: gamma at the critical value for the
/// mana, a grid up to 256, and box distributions whose expected losses sum
/// to at most the mana.
struct MagicianCase {
    gamma: f64,
    mana: u64,
    grid: u64,
    boxes: Vec<BoxDistribution>,
}

fn magician_case(seed: u64) -> MagicianCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mana = rng.random_range(2..=10u64);
    let grid = 1u64 << rng.random_range(0..=8);
    let num_boxes = rng.random_range(1..=30usize);
    let gamma = 1.0 - 1.0 / (mana as f64).sqrt();
    let mut budget = mana as f64 * rng.random_range(0.6..0.98);
    let mut boxes = Vec::with_capacity(num_boxes);
    for i in 0..num_boxes {
        let cap = (budget / (num_boxes - i) as f64).clamp(0.0, 1.0);
        let points = rng.random_range(1..=3usize);
        let mut entries: Vec<(u64, f64)> = Vec::new();
        let mut raw = Vec::new();
        for _ in 0..points {
            let units = rng.random_range(1..=grid);
            let prob = rng.random_range(0.05..0.5);
            raw.push((units, prob));
        }
        let mass: f64 = raw.iter().map(|&(_, p)| p).sum();
        let mean: f64 = raw.iter().map(|&(u, p)| u as f64 / grid as f64 * p).sum();
        let scale = if mean > cap { cap / mean } else { 1.0 };
        let mut used = 0.0;
        for (u, p) in raw {
            let p = p * scale / mass.max(1.0);
            entries.push((u, p));
            used += p;
        }
        budget -= entries.iter().map(|&(u, p)| u as f64 / grid as f64 * p).sum::<f64>();
        entries.push((0, (1.0 - used).max(0.0)));
        boxes.push(BoxDistribution::from_units(grid, entries).expect("valid box"));
    }
    MagicianCase { gamma, mana, grid, boxes }
}

#[test]
fn criterion_01_magician_exactness() {
    let _g = gate();
    let started = Instant::now();
    let mut boxes_checked = 0u64;
    for seed in 0..100u64 {
        let case = magician_case(seed);
        let mut state = new_magician(case.gamma, case.mana as f64, case.grid).unwrap();
        for dist in &case.boxes {
            let policy = state.present_box(dist).unwrap();
            assert!(
                (policy.ex_ante_open - case.gamma).abs() <= 1e-9,
                "seed {seed}: ex-ante {} vs gamma {}",
                policy.ex_ante_open,
                case.gamma
            );
            assert!(
                policy.threshold_units <= (case.mana - 1) * case.grid,
                "seed {seed}: threshold {} exceeds (k-1) = {}",
                policy.threshold_units as f64 / case.grid as f64,
                case.mana - 1
            );
            boxes_checked += 1;
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!(
        "acceptance 01 magician-exactness: PASS ({boxes_checked} boxes, 100 sequences, {:.2?})",
        elapsed
    );
}

#[test]
fn criterion_02_sand_bound() {
    let _g = gate();
    let started = Instant::now();
    let mut worst_margin = f64::INFINITY;
    for seed in 0..100u64 {
        let case = magician_case(seed);
        let bound = 1.0 / (1.0 - case.gamma);
        let mut state = new_magician(case.gamma, case.mana as f64, case.grid).unwrap();
        for dist in &case.boxes {
            let policy = state.present_box(dist).unwrap();
            assert!(
                policy.sand_distance < bound + 1e-9,
                "seed {seed}: sand {} vs bound {bound}",
                policy.sand_distance
            );
            worst_margin = worst_margin.min(bound - policy.sand_distance);
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!(
        "acceptance 02 sand-bound: PASS (min margin {worst_margin:.3e}, {:.2?})",
        elapsed
    );
}

/// Instance pool for the feasibility and dominance criteria: zero assignment
/// costs (greedy variants) and uniform per-item rewards (uniform variant).
fn feasibility_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfea5_0000 + seed);
    let params = GenParams {
        bins: rng.random_range(4..=10),
        items: rng.random_range(10..=30),
        dims: (1, 3),
        capacity: (1, 3),
        open_cost: (0.5, 2.0),
        assign_cost: (0.0, 0.0),
        reward: (0.5, 3.0),
        incompatible_prob: 0.2,
        assign_limit: (1, 3),
        uniform_rewards: true,
        budget: BudgetSpec::TargetRatio(rng.random_range(2.0..8.0)),
    };
    random_instance(&params, &mut rng).expect("valid parameters")
}

#[test]
fn criterion_03_feasibility() {
    let _g = gate();
    let started = Instant::now();
    let algorithms = [
        Algorithm::MagicianRound,
        Algorithm::GreedyRound,
        Algorithm::PerItemMagicianRound,
        Algorithm::UniformRewardRound,
        Algorithm::ScaledGreedyRound,
    ];
    let mut trials_run = 0u64;
    for seed in 0..20u64 {
        let instance = feasibility_instance(seed);
        for alg in algorithms {
            let opts = RunOptions {
                epsilon: 0.25,
                trials: 10_000,
                seed: 0x0311 + seed,
                shared_streams: false,
                ..RunOptions::default()
            };
            // `simulate` re-verifies every non-discarded solution with
            // check_feasible and errors on any violation.
            let stats = simulate(&instance, alg, &opts)
                .unwrap_or_else(|e| panic!("instance {seed} {alg}: {e}"));
            assert!(stats.records.iter().all(|r| r.feasible || !r.feasible));
            assert_eq!(stats.records.len(), 10_000);
            trials_run += 10_000;
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    println!(
        "acceptance 03 feasibility: PASS ({trials_run} trials over 20 instances, {:.2?})",
        elapsed
    );
}

fn ratio_instance(seed: u64, uniform: bool, zero_costs: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4a71_0000 + seed);
    let params = GenParams {
        bins: rng.random_range(3..=6),
        items: rng.random_range(8..=20),
        dims: (1, 2),
        capacity: (1, 3),
        open_cost: (0.5, 2.0),
        assign_cost: if zero_costs { (0.0, 0.0) } else { (0.0, 0.4) },
        reward: (0.5, 3.0),
        incompatible_prob: 0.15,
        assign_limit: (1, 3),
        uniform_rewards: uniform,
        budget: BudgetSpec::TargetRatio(rng.random_range(5.0..8.0)),
    };
    random_instance(&params, &mut rng).expect("valid parameters")
}

#[test]
fn criterion_04_ratio_bounds() {
    let _g = gate();
    let started = Instant::now();
    let epsilon = 0.2;
    let trials = 10_000u64;

    // Magician variants against the epsilon-scaled relaxation value.
    for seed in 0..10u64 {
        let instance = ratio_instance(seed, false, false);
        let k = scale_budget(&instance).unwrap().normalized_budget();
        let rho = f64::from(instance.min_assign_limit());
        let bound = (1.0 - 1.0 / (rho + 3.0).sqrt()) * (1.0 - 1.0 / k.sqrt()) - epsilon;
        for alg in [Algorithm::MagicianRound, Algorithm::PerItemMagicianRound] {
            let opts = RunOptions {
                epsilon,
                trials,
                seed: 0x0401 + seed,
                shared_streams: false,
                ..RunOptions::default()
            };
            let stats = simulate(&instance, alg, &opts).unwrap();
            assert!(
                stats.mean >= bound * stats.lp_value - 4.0 * stats.std_error,
                "{alg} instance {seed}: mean {} < {} (bound {bound:.4} x lp {}, se {})",
                stats.mean,
                bound * stats.lp_value,
                stats.lp_value,
                stats.std_error
            );
        }
    }

    // Uniform-reward variant.
    for seed in 0..10u64 {
        let instance = ratio_instance(100 + seed, true, false);
        let k = scale_budget(&instance).unwrap().normalized_budget();
        let rho = f64::from(instance.min_assign_limit());
        let bound = (1.0 - (-rho).exp()) * (1.0 - 1.0 / k.sqrt()) - epsilon;
        let opts = RunOptions {
            epsilon,
            trials,
            seed: 0x0402 + seed,
            shared_streams: false,
            ..RunOptions::default()
        };
        let stats = simulate(&instance, Algorithm::UniformRewardRound, &opts).unwrap();
        assert!(
            stats.mean >= bound * stats.lp_value - 4.0 * stats.std_error,
            "alg4 instance {seed}: mean {} < {} (bound {bound:.4} x lp {})",
            stats.mean,
            bound * stats.lp_value,
            stats.lp_value
        );
    }

    // Greedy variant against the full relaxation value.
    for seed in 0..10u64 {
        let instance = ratio_instance(200 + seed, false, true);
        let k = scale_budget(&instance).unwrap().normalized_budget();
        let rho = f64::from(instance.min_assign_limit());
        let bound =
            (1.0 - 1.0 / (rho + 3.0).sqrt()) * ((k - 1.0) / k) * (1.0 - 1.0 / k.sqrt());
        let opts = RunOptions {
            epsilon,
            trials,
            seed: 0x0403 + seed,
            shared_streams: false,
            ..RunOptions::default()
        };
        let stats = simulate(&instance, Algorithm::GreedyRound, &opts).unwrap();
        assert!(
            stats.mean >= bound * stats.lp_value - 4.0 * stats.std_error,
            "alg2 instance {seed}: mean {} < {} (bound {bound:.4} x lp {})",
            stats.mean,
            bound * stats.lp_value,
            stats.lp_value
        );
    }

    let elapsed = started.elapsed();
    println!(
        "acceptance 04 ratio-bounds: PASS (3 families x 10 instances x {trials} trials, {:.2?})",
        elapsed
    );
}

/// Tight-budget instances so the direct branch actually violates sometimes.
fn tight_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7164_0000 + seed);
    let params = GenParams {
        bins: 10,
        items: rng.random_range(14..=24),
        dims: (1, 2),
        capacity: (1, 2),
        open_cost: (0.8, 1.2),
        assign_cost: (0.0, 0.0),
        reward: (0.5, 3.0),
        incompatible_prob: 0.1,
        assign_limit: (1, 2),
        uniform_rewards: true,
        budget: BudgetSpec::TargetRatio(rng.random_range(2.0..3.0)),
    };
    random_instance(&params, &mut rng).expect("valid parameters")
}

#[test]
fn criterion_05_shared_randomness_dominance() {
    let _g = gate();
    let started = Instant::now();
    let trials = 10_000u64;
    let mut discard_rates = Vec::new();
    for seed in 0..3u64 {
        let instance = tight_instance(seed);
        // A small epsilon leaves little budget slack, so draws that land on
        // the fractional column overshoot and the baseline must discard.
        let opts = RunOptions {
            epsilon: 0.05,
            trials,
            seed: 0x0501 + seed,
            shared_streams: true,
            ..RunOptions::default()
        };
        // `compare` itself errors on the first dominance violation.
        let report = compare(
            &instance,
            &[
                Algorithm::BaselineRound,
                Algorithm::ScaledGreedyRound,
                Algorithm::MagicianRound,
                Algorithm::PerItemMagicianRound,
            ],
            &opts,
        )
        .unwrap_or_else(|e| panic!("instance {seed}: {e}"));
        assert_eq!(report.dominance.len(), 2);
        for pair in &report.dominance {
            assert_eq!(
                pair.satisfied, trials,
                "{} >= {} held on {}/{} trials",
                pair.better, pair.worse, pair.satisfied, pair.trials
            );
        }
        let baseline = report
            .stats
            .iter()
            .find(|s| s.algorithm == Algorithm::BaselineRound)
            .unwrap();
        discard_rates.push(baseline.discard_rate);
    }
    assert!(
        discard_rates.iter().any(|&r| r > 0.0),
        "budgets too loose: the baseline never discarded ({discard_rates:?})"
    );
    let elapsed = started.elapsed();
    println!(
        "acceptance 05 dominance: PASS (alg6>=baseline and alg1>=alg3 on {trials} shared trials x 3 instances, baseline discard rates {discard_rates:?}, {:.2?})",
        elapsed
    );
}

#[test]
fn criterion_06_oracle_equivalence() {
    let _g = gate();
    let started = Instant::now();
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x06ac_0000 + seed);
        let params = GenParams {
            bins: rng.random_range(2..=3),
            items: rng.random_range(2..=6),
            dims: (1, 2),
            capacity: (1, 2),
            open_cost: (0.2, 2.0),
            assign_cost: (0.0, 0.5),
            reward: (0.2, 3.0),
            incompatible_prob: 0.2,
            assign_limit: (1, 2),
            uniform_rewards: false,
            budget: BudgetSpec::TargetRatio(rng.random_range(0.5..4.0)),
        };
        let instance = random_instance(&params, &mut rng).unwrap();
        let enumerated = full_lp(&instance).unwrap();
        let scaled = scale_budget(&instance).unwrap();
        let generated =
            solve_relaxation(&scaled, LpMode::Exact, &SolveLimits::default()).unwrap();
        assert!(generated.converged, "instance {seed} did not converge");
        assert!(
            (generated.lp_value - enumerated.lp_value).abs()
                <= 1e-6 * (1.0 + enumerated.lp_value.abs()),
            "instance {seed}: colgen {} vs full {}",
            generated.lp_value,
            enumerated.lp_value
        );
        let ilp = brute_force(&instance).unwrap();
        assert!(
            enumerated.lp_value >= ilp.objective - 1e-9,
            "instance {seed}: lp {} < ilp {}",
            enumerated.lp_value,
            ilp.objective
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    println!("acceptance 06 oracle-equivalence: PASS (200 instances, {:.2?})", elapsed);
}

#[test]
fn criterion_07_pricing_integrality() {
    let _g = gate();
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0701);
    for round in 0..1000 {
        let dims = rng.random_range(1..=8usize);
        let capacity: Vec<u32> = (0..dims).map(|_| rng.random_range(1..=4)).collect();
        let entries: Vec<(u32, u32, f64)> = (0..rng.random_range(1..=12usize))
            .map(|_| {
                let lo = rng.random_range(0..dims) as u32;
                let hi = rng.random_range(lo as usize + 1..=dims) as u32;
                (lo, hi, rng.random_range(0.1..5.0))
            })
            .collect();
        let mut program = lp::interval_packing_lp(&capacity, &entries);
        program.snap_integral = false; // verify the raw vertex, not the snap
        let res = lp::solve(&program).unwrap();
        assert_eq!(res.status, lp::LpStatus::Optimal);
        for (j, x) in res.primal.iter().enumerate() {
            assert!(
                (x - x.round()).abs() <= 1e-9,
                "round {round}: x[{j}] = {x} is fractional"
            );
        }
    }
    let elapsed = started.elapsed();
    println!("acceptance 07 pricing-integrality: PASS (1000 LPs, {:.2?})", elapsed);
}

fn random_cover_family(rng: &mut ChaCha8Rng) -> MaxKCoverInstance {
    let n = rng.random_range(2..=6usize);
    let num_sets = rng.random_range(2..=4usize);
    let mut sets = Vec::with_capacity(num_sets);
    for i in 0..num_sets {
        // One potentially large set per family keeps the oracle search small.
        let cap = if i == 0 { n } else { n.min(3) };
        let size = rng.random_range(1..=cap);
        let mut set = Vec::new();
        while set.len() < size {
            let e = rng.random_range(0..n);
            if !set.contains(&e) {
                set.push(e);
            }
        }
        sets.push(set);
    }
    let k = rng.random_range(0..=num_sets);
    MaxKCoverInstance::new(n, sets, k).unwrap()
}

#[test]
fn criterion_08_reduction_fidelity() {
    let _g = gate();
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0801);
    let mut seen = std::collections::HashSet::new();
    let mut cases = 0;
    while cases < 500 {
        let mkc = random_cover_family(&mut rng);
        let mut key_sets = mkc.sets.clone();
        key_sets.sort();
        if !seen.insert((mkc.num_elements, mkc.k, key_sets)) {
            continue;
        }
        let expected = mkc.cover_optimum() as f64;

        let direct = brute_force(&from_max_k_cover(&mkc)).unwrap();
        assert!(
            (direct.objective - expected).abs() < 1e-9,
            "case {cases} ({mkc:?}): direct reduction gave {} expected {expected}",
            direct.objective
        );

        let mapped = rlpp_build(&rlpp_from_max_k_cover(&mkc)).unwrap();
        let via_lines = brute_force(&mapped).unwrap();
        assert!(
            (via_lines.objective - expected).abs() < 1e-9,
            "case {cases} ({mkc:?}): line reduction gave {} expected {expected}",
            via_lines.objective
        );
        cases += 1;
    }
    let elapsed = started.elapsed();
    println!("acceptance 08 reduction-fidelity: PASS ({cases} families, {:.2?})", elapsed);
}

#[test]
fn criterion_09_best_so_far_curves() {
    let _g = gate();
    let started = Instant::now();
    let params = GridRlppParams {
        width: 8,
        height: 6,
        lines: 24,
        trips: 220,
        bus_capacity: 4,
        frequency: (1, 3),
        cost_per_length: 1.0,
        budget: 0.0, // set per level below
        welfare: WelfareRule::CarMilesSaved,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x0901);
    let rlpp = rlpp_grid(&params, &mut rng).unwrap();
    let max_line_cost = rlpp.lines.iter().map(|l| l.cost).fold(0.0, f64::max);
    let mut base = rlpp_build(&rlpp).unwrap();
    let trials = 10_000u64;

    for (level, ratio) in [1.5, 2.5, 4.0, 6.0].into_iter().enumerate() {
        base.set_budget(ratio * max_line_cost);
        let opts = RunOptions {
            epsilon: 0.05,
            trials,
            seed: 0x0902 + level as u64,
            shared_streams: true,
            ..RunOptions::default()
        };
        let report = compare(
            &base,
            &[Algorithm::BaselineRound, Algorithm::GreedyRound, Algorithm::ScaledGreedyRound],
            &opts,
        )
        .unwrap_or_else(|e| panic!("budget level {level}: {e}"));

        let baseline = &report.stats[0];
        let greedy_scaled = &report.stats[2];
        for stats in &report.stats {
            for pair in stats.best_so_far.windows(2) {
                assert!(pair[1] >= pair[0], "{}: best-so-far dipped", stats.algorithm);
            }
            // The emitted CSV parses back and stays monotone.
            let mut buf = Vec::new();
            write_best_csv(stats, 0, &mut buf).unwrap();
            let text = String::from_utf8(buf).unwrap();
            let mut last = f64::NEG_INFINITY;
            for line in text.lines().skip(1) {
                let best: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
                assert!(best >= last);
                last = best;
            }
        }
        for (b, s) in baseline.best_so_far.iter().zip(&greedy_scaled.best_so_far) {
            assert!(
                s >= b,
                "level {level}: alg6 best-so-far fell below the baseline curve"
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(600), "took {elapsed:?}");
    println!(
        "acceptance 09 best-so-far-curves: PASS (4 budget levels x {trials} shared trials, {:.2?})",
        elapsed
    );
}

#[test]
fn criterion_10_determinism() {
    let _g = gate();
    let started = Instant::now();

    // The compare pipeline over a line-planning instance, run twice.
    let params = GridRlppParams {
        width: 6,
        height: 4,
        lines: 10,
        trips: 60,
        budget: 0.0,
        ..GridRlppParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x0a01);
    let rlpp = rlpp_grid(&params, &mut rng).unwrap();
    let max_line_cost = rlpp.lines.iter().map(|l| l.cost).fold(0.0, f64::max);
    let mut instance = rlpp_build(&rlpp).unwrap();
    instance.set_budget(2.0 * max_line_cost);

    let render = || {
        let opts = RunOptions {
            epsilon: 0.25,
            trials: 2000,
            seed: 0x0a02,
            shared_streams: true,
            ..RunOptions::default()
        };
        let report = compare(
            &instance,
            &[Algorithm::BaselineRound, Algorithm::ScaledGreedyRound, Algorithm::GreedyRound],
            &opts,
        )
        .unwrap();
        let mut bytes = Vec::new();
        for stats in &report.stats {
            write_trials_csv(stats, &mut bytes).unwrap();
            write_best_csv(stats, 100, &mut bytes).unwrap();
        }
        bytes
    };
    let first = render();
    let second = render();
    assert_eq!(first, second, "compare pipeline CSVs diverged across runs");

    // A magician-variant simulation, run twice.
    let instance = feasibility_instance(0);
    let render_sim = || {
        let opts = RunOptions {
            epsilon: 0.25,
            trials: 2000,
            seed: 0x0a03,
            shared_streams: false,
            ..RunOptions::default()
        };
        let stats = simulate(&instance, Algorithm::MagicianRound, &opts).unwrap();
        let mut bytes = Vec::new();
        write_trials_csv(&stats, &mut bytes).unwrap();
        write_best_csv(&stats, 0, &mut bytes).unwrap();
        bytes
    };
    assert_eq!(render_sim(), render_sim(), "simulate CSVs diverged across runs");

    let elapsed = started.elapsed();
    println!("acceptance 10 determinism: PASS (byte-identical CSVs, {:.2?})", elapsed);
}
