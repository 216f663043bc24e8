//! Shared fixtures for unit tests.

use crate::model::{Bin, Instance, Item, Link, WeightInterval};

/// Two bins, two items, one capacity dimension of size 1 per bin, opening
/// cost 1, zero assignment costs, budget 2, assignment limit 1. Rewards are
/// 2 on the diagonal and 1 off it, so the exact optimum assigns each item to
/// its own bin for an objective of 4.
pub fn reference_2x2() -> Instance {
    let bins = vec![
        Bin { capacity: vec![1], open_cost: 1.0 },
        Bin { capacity: vec![1], open_cost: 1.0 },
    ];
    let items = vec![Item { assign_limit: 1 }, Item { assign_limit: 1 }];
    let mut inst = Instance::new(bins, items, 2.0);
    for l in 0..2 {
        for p in 0..2 {
            let reward = if l == p { 2.0 } else { 1.0 };
            inst.set_link(
                l,
                p,
                Link { interval: WeightInterval::new(0, 1), reward, cost: 0.0 },
            );
        }
    }
    inst
}
