//! Cross-module flows at the library level: reduction instances through the
//! full solve-and-round pipeline, and line-planning instances end to end.

use budget_assign::colgen::{solve_relaxation, LpMode, SolveLimits};
use budget_assign::exact::{brute_force, full_lp};
use budget_assign::gen::{
    from_max_k_cover, rlpp_build, rlpp_grid, GridRlppParams, MaxKCoverInstance, WelfareRule,
};
use budget_assign::harness::{compare, simulate, RunOptions};
use budget_assign::model::scale_budget;
use budget_assign::rounding::{Algorithm, RoundingPath};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Magician rounding on a cover-reduction instance: the normalized budget is
/// the cover parameter, every draw stays feasible, and the Monte-Carlo mean
/// respects the guarantee against the scaled relaxation.
#[test]
fn cover_reduction_through_magician_rounding() {
    let mkc = MaxKCoverInstance::new(
        6,
        vec![vec![0, 1, 2], vec![2, 3], vec![3, 4, 5], vec![0, 5]],
        3,
    )
    .unwrap();
    let instance = from_max_k_cover(&mkc);
    let scaled = scale_budget(&instance).unwrap();
    assert!((scaled.normalized_budget() - 3.0).abs() < 1e-12);

    let eps = 0.25;
    let opts = RunOptions { epsilon: eps, trials: 4000, seed: 31, ..RunOptions::default() };
    let stats = simulate(&instance, Algorithm::MagicianRound, &opts).unwrap();
    assert_eq!(stats.discard_rate, 0.0);
    assert!(stats.records.iter().all(|r| r.feasible));

    let k = 3.0_f64;
    let bound = (1.0 - 1.0 / 4.0_f64.sqrt()) * (1.0 - 1.0 / k.sqrt()) - eps;
    assert!(stats.mean >= bound * stats.lp_value - 4.0 * stats.std_error);

    // The exact optimum equals the enumerated cover optimum, and no rounded
    // solution can beat it.
    let optimum = brute_force(&instance).unwrap().objective;
    assert!((optimum - mkc.cover_optimum() as f64).abs() < 1e-9);
    assert!(stats.records.iter().all(|r| r.objective <= optimum + 1e-9));
}

/// The relaxation value sits between the exact optimum and the rounding
/// outcomes on both relaxation modes of one instance.
#[test]
fn relaxation_brackets_rounding_and_optimum() {
    let mkc =
        MaxKCoverInstance::new(5, vec![vec![0, 1], vec![1, 2, 3], vec![3, 4]], 2).unwrap();
    let instance = from_max_k_cover(&mkc);
    let scaled = scale_budget(&instance).unwrap();

    let exact_lp = solve_relaxation(&scaled, LpMode::Exact, &SolveLimits::default()).unwrap();
    let enumerated = full_lp(&instance).unwrap();
    assert!((exact_lp.lp_value - enumerated.lp_value).abs() <= 1e-6);

    let scaled_lp = solve_relaxation(
        &scaled,
        LpMode::Scaled { epsilon: 0.5 },
        &SolveLimits::default(),
    )
    .unwrap();
    assert!(scaled_lp.lp_value >= 0.5 * exact_lp.lp_value - 1e-9);
    assert!(scaled_lp.lp_value <= exact_lp.lp_value + 1e-9);

    let ilp = brute_force(&instance).unwrap().objective;
    assert!(exact_lp.lp_value >= ilp - 1e-9);
}

/// A small grid line-planning instance end to end: build, solve, compare
/// with shared randomness, and check the dominance pairs and curve shapes.
#[test]
fn line_planning_compare_pipeline() {
    let params = GridRlppParams {
        width: 5,
        height: 4,
        lines: 10,
        trips: 40,
        bus_capacity: 2,
        frequency: (1, 2),
        cost_per_length: 1.0,
        budget: 0.0,
        welfare: WelfareRule::CarMilesSaved,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x71e);
    let rlpp = rlpp_grid(&params, &mut rng).unwrap();
    let max_cost = rlpp.lines.iter().map(|l| l.cost).fold(0.0, f64::max);
    let mut instance = rlpp_build(&rlpp).unwrap();
    instance.set_budget(2.2 * max_cost);

    let opts = RunOptions { epsilon: 0.05, trials: 3000, seed: 9, ..RunOptions::default() };
    let report = compare(
        &instance,
        &[Algorithm::BaselineRound, Algorithm::ScaledGreedyRound, Algorithm::GreedyRound],
        &opts,
    )
    .unwrap();
    assert_eq!(report.dominance.len(), 1);
    assert_eq!(report.dominance[0].satisfied, 3000);

    for stats in &report.stats {
        for pair in stats.best_so_far.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
        if stats.algorithm != Algorithm::BaselineRound {
            assert!(stats.records.iter().all(|r| r.path != RoundingPath::Discarded));
        }
        assert!(stats.mean <= stats.lp_value + 1e-6);
    }
}
