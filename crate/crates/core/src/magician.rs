//! The conservative magician: an online rule that opens each of a sequence
//! of boxes with ex-ante probability exactly `gamma` while the cumulative
//! stochastic losses (mana spent) stay within a fixed budget.
//!
//! Before seeing box `i` the rule knows the ex-ante distribution of the mana
//! `W_i` lost so far. It opens the box when `W_i` falls strictly below a
//! threshold `theta_i = min { w : P[W_i <= w] >= gamma }`, and on a tie
//! `W_i = theta_i` it opens with the probability that tops the mass below
//! the thresholdic up to exactly `gamma`. The distribution of `W_{i+1}` then
//! follows by exact dynamic programming on a finite grid: every loss is a
//! multiple of `1 / grid`, so the probability-mass vector stays exact up to
//! float rounding.
//!
//! With losses in `[0, 1]`, total expected loss at most the mana `k`, and
//! `gamma <= 1 - 1/sqrt(k)` (or `1 - 1/sqrt(k+3)` for Bernoulli losses with
//! integer `k`), the thresholds never exceed `k - 1`, so an opened box can
//! always pay its loss.

use std::fmt;

/// Ex-ante opening probabilities must match `gamma` to this tolerance.
pub const EXACTNESS_EPS: f64 = 1e-9;

/// Upper bound on `mana * grid`, the length of the probability-mass vector.
const MAX_STATE: u64 = 20_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum MagicianError {
    BadGamma(f64),
    BadMana(f64),
    BadGrid(u64),
    StateTooLarge { mana: f64, grid: u64 },
    BadDistribution(String),
    LossOffGrid { units: u64, grid: u64 },
    DecideBeforePresent,
    PresentWhileLossPending,
    LossWithoutOpen,
    /// Recording this loss would overdraw the mana; with admissible inputs
    /// the threshold bound rules this out, so hitting it signals a bug.
    ManaOverdraft { spent: f64, loss: f64, mana: f64 },
}

impl fmt::Display for MagicianError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MagicianError::BadGamma(g) => write!(f, "gamma must lie in [0, 1), got {g}"),
            MagicianError::BadMana(k) => write!(f, "mana must be positive, got {k}"),
            MagicianError::BadGrid(g) => write!(f, "grid must be positive, got {g}"),
            MagicianError::StateTooLarge { mana, grid } => {
                write!(f, "mana {mana} at grid {grid} exceeds the state cap")
            }
            MagicianError::BadDistribution(msg) => write!(f, "bad box distribution: {msg}"),
            MagicianError::LossOffGrid { units, grid } => {
                write!(f, "loss of {units} grid units exceeds the unit interval at grid {grid}")
            }
            MagicianError::DecideBeforePresent => write!(f, "decide called before present_box"),
            MagicianError::PresentWhileLossPending => {
                write!(f, "present_box called while an opened box's loss is unreported")
            }
            MagicianError::LossWithoutOpen => write!(f, "record_loss without an opened box"),
            MagicianError::ManaOverdraft { spent, loss, mana } => write!(
                f,
                "threshold bound violated: spent {spent} + loss {loss} exceeds mana {mana}"
            ),
        }
    }
}

impl std::error::Error for MagicianError {}

/// Finite loss distribution for one box, on the magician's grid: losses are
/// `units / grid` with `units <= grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDistribution {
    grid: u64,
    /// Sorted by units; probabilities sum to 1.
    support: Vec<(u64, f64)>,
}

impl BoxDistribution {
    pub fn from_units(grid: u64, mut entries: Vec<(u64, f64)>) -> Result<Self, MagicianError> {
        if grid == 0 {
            return Err(MagicianError::BadGrid(grid));
        }
        entries.sort_by_key(|&(u, _)| u);
        let mut support: Vec<(u64, f64)> = Vec::with_capacity(entries.len());
        for (units, prob) in entries {
            if units > grid {
                return Err(MagicianError::LossOffGrid { units, grid });
            }
            if !(prob >= -1e-12) || !prob.is_finite() {
                return Err(MagicianError::BadDistribution(format!(
                    "probability {prob} at {units} units"
                )));
            }
            match support.last_mut() {
                Some(last) if last.0 == units => last.1 += prob,
                _ => support.push((units, prob.max(0.0))),
            }
        }
        let total: f64 = support.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(MagicianError::BadDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(BoxDistribution { grid, support })
    }

    /// Builds from real-valued losses in `[0, 1]` that lie on the grid.
    pub fn on_grid(grid: u64, entries: &[(f64, f64)]) -> Result<Self, MagicianError> {
        let mut units = Vec::with_capacity(entries.len());
        for &(loss, prob) in entries {
            let t = loss * grid as f64;
            let nearest = t.round();
            if (t - nearest).abs() > 1e-6 || loss < 0.0 {
                return Err(MagicianError::BadDistribution(format!(
                    "loss {loss} is not a multiple of 1/{grid}"
                )));
            }
            units.push((nearest as u64, prob));
        }
        Self::from_units(grid, units)
    }

    /// Loss 1 with probability `p`, else 0, on the integer grid.
    pub fn bernoulli(p: f64) -> Result<Self, MagicianError> {
        Self::from_units(1, vec![(0, 1.0 - p), (1, p)])
    }

    pub fn grid(&self) -> u64 {
        self.grid
    }

    pub fn support(&self) -> &[(u64, f64)] {
        &self.support
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().map(|&(u, p)| u as f64 * p).sum::<f64>() / self.grid as f64
    }
}

/// Per-box decision data: open strictly below `threshold`, open with
/// probability `tie_prob` exactly at it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxPolicy {
    pub threshold_units: u64,
    pub tie_prob: f64,
    /// Spent-mana distance measure at the start of the round:
    /// `sum_w (threshold + 1 - w) P[W = w]` over `w <= threshold + 1`.
    pub sand_distance: f64,
    /// DP-computed opening probability; equals gamma up to float noise.
    pub ex_ante_open: f64,
}

impl BoxPolicy {
    pub fn threshold(&self, grid: u64) -> f64 {
        self.threshold_units as f64 / grid as f64
    }
}

#[derive(Debug, Clone)]
pub struct MagicianState {
    gamma: f64,
    mana: f64,
    grid: u64,
    mana_units: u64,
    /// Probability mass of the lost-mana distribution, indexed in grid units.
    pmf: Vec<f64>,
    history: Vec<BoxPolicy>,
    pending: Option<BoxPolicy>,
    awaiting_loss: bool,
    spent_units: u64,
}

pub fn new_magician(gamma: f64, mana: f64, grid: u64) -> Result<MagicianState, MagicianError> {
    MagicianState::new(gamma, mana, grid)
}

impl MagicianState {
    pub fn new(gamma: f64, mana: f64, grid: u64) -> Result<Self, MagicianError> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(MagicianError::BadGamma(gamma));
        }
        if !(mana > 0.0) || !mana.is_finite() {
            return Err(MagicianError::BadMana(mana));
        }
        if grid == 0 {
            return Err(MagicianError::BadGrid(grid));
        }
        let state_size = mana * grid as f64;
        if state_size > MAX_STATE as f64 {
            return Err(MagicianError::StateTooLarge { mana, grid });
        }
        Ok(MagicianState {
            gamma,
            mana,
            grid,
            mana_units: (mana * grid as f64 + 1e-9).floor() as u64,
            pmf: vec![1.0],
            history: Vec::new(),
            pending: None,
            awaiting_loss: false,
            spent_units: 0,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mana(&self) -> f64 {
        self.mana
    }

    pub fn grid(&self) -> u64 {
        self.grid
    }

    pub fn boxes_seen(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &[BoxPolicy] {
        &self.history
    }

    /// Realized mana spent on the live path, in grid units.
    pub fn spent_units(&self) -> u64 {
        self.spent_units
    }

    pub fn spent(&self) -> f64 {
        self.spent_units as f64 / self.grid as f64
    }

    /// Computes the threshold and tie probability for the next box from the
    /// current lost-mana distribution, then advances that distribution by
    /// exact dynamic programming. Returns the box's decision policy.
    pub fn present_box(&mut self, dist: &BoxDistribution) -> Result<BoxPolicy, MagicianError> {
        if self.awaiting_loss {
            return Err(MagicianError::PresentWhileLossPending);
        }
        if dist.grid != self.grid {
            return Err(MagicianError::BadDistribution(format!(
                "box grid {} does not match magician grid {}",
                dist.grid, self.grid
            )));
        }

        // theta = smallest grid point with cumulative mass >= gamma. The
        // total mass is 1 and gamma < 1, so the scan always terminates; the
        // fallback to the last grid point only absorbs float drift.
        let mut cum = 0.0;
        let mut theta = self.pmf.len() - 1;
        let mut below = 1.0 - self.pmf[theta];
        for (w, &mass) in self.pmf.iter().enumerate() {
            cum += mass;
            if cum >= self.gamma - 1e-12 {
                theta = w;
                below = cum - mass;
                break;
            }
        }
        let mass_at = self.pmf[theta];
        let tie_prob = if mass_at <= 0.0 {
            // Zero mass at the threshold only happens when the mass strictly
            // below already equals gamma; any tie probability works and 1
            // keeps the formula total at gamma.
            1.0
        } else {
            ((self.gamma - below) / mass_at).clamp(0.0, 1.0)
        };
        let ex_ante_open = below + tie_prob * mass_at;
        assert!(
            (ex_ante_open - self.gamma).abs() <= EXACTNESS_EPS,
            "ex-ante opening probability {ex_ante_open} drifted from gamma {}",
            self.gamma
        );

        let sand_cap = theta as u64 + self.grid;
        let mut sand = 0.0;
        for (w, &mass) in self.pmf.iter().enumerate() {
            if (w as u64) > sand_cap {
                break;
            }
            sand += (sand_cap - w as u64) as f64 / self.grid as f64 * mass;
        }

        // Move the opened fraction of each grid point at or below theta
        // right by the box's loss distribution.
        let max_units = dist.support.last().map_or(0, |&(u, _)| u) as usize;
        let new_len = self.pmf.len().max(theta + max_units + 1);
        if new_len as u64 > MAX_STATE {
            return Err(MagicianError::StateTooLarge { mana: self.mana, grid: self.grid });
        }
        let mut next = vec![0.0; new_len];
        for (w, &mass) in self.pmf.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let open_frac = if w < theta {
                1.0
            } else if w == theta {
                tie_prob
            } else {
                0.0
            };
            let moved = mass * open_frac;
            next[w] += mass - moved;
            if moved > 0.0 {
                for &(units, prob) in &dist.support {
                    next[w + units as usize] += moved * prob;
                }
            }
        }
        debug_assert!(
            (next.iter().sum::<f64>() - 1.0).abs() < 1e-9,
            "probability mass drifted"
        );
        self.pmf = next;

        let policy = BoxPolicy {
            threshold_units: theta as u64,
            tie_prob,
            sand_distance: sand,
            ex_ante_open,
        };
        self.history.push(policy);
        self.pending = Some(policy);
        Ok(policy)
    }

    /// Live-path decision for the box most recently presented. Depends only
    /// on the mana spent so far and the tie-break coin, never on the box's
    /// own realized loss (which is revealed afterwards via `record_loss`).
    pub fn decide(&mut self, rng: &mut impl rand::Rng) -> Result<bool, MagicianError> {
        let policy = self.pending.take().ok_or(MagicianError::DecideBeforePresent)?;
        let coin: f64 = rng.random();
        let open = self.spent_units < policy.threshold_units
            || (self.spent_units == policy.threshold_units && coin < policy.tie_prob);
        if open {
            self.awaiting_loss = true;
        }
        Ok(open)
    }

    /// Reports the realized loss of the opened box, in fractions of a unit.
    pub fn record_loss(&mut self, loss: f64) -> Result<(), MagicianError> {
        let t = loss * self.grid as f64;
        let nearest = t.round();
        if (t - nearest).abs() > 1e-6 || !(0.0..=1.0 + 1e-12).contains(&loss) {
            return Err(MagicianError::BadDistribution(format!(
                "loss {loss} is not on the grid"
            )));
        }
        self.record_loss_units(nearest as u64)
    }

    pub fn record_loss_units(&mut self, units: u64) -> Result<(), MagicianError> {
        if !self.awaiting_loss {
            return Err(MagicianError::LossWithoutOpen);
        }
        if units > self.grid {
            return Err(MagicianError::LossOffGrid { units, grid: self.grid });
        }
        if self.spent_units + units > self.mana_units {
            return Err(MagicianError::ManaOverdraft {
                spent: self.spent(),
                loss: units as f64 / self.grid as f64,
                mana: self.mana,
            });
        }
        self.spent_units += units;
        self.awaiting_loss = false;
        Ok(())
    }
}

/// The full threshold/tie table for a fixed sequence of boxes, computed once
/// ex ante; live trials replay it in O(1) per box.
#[derive(Debug, Clone)]
pub struct DecisionPolicy {
    pub gamma: f64,
    pub mana: f64,
    pub grid: u64,
    pub mana_units: u64,
    pub boxes: Vec<BoxPolicy>,
}

pub fn policy_for_boxes(
    gamma: f64,
    mana: f64,
    grid: u64,
    boxes: &[BoxDistribution],
) -> Result<DecisionPolicy, MagicianError> {
    let mut state = MagicianState::new(gamma, mana, grid)?;
    let mut out = Vec::with_capacity(boxes.len());
    for dist in boxes {
        out.push(state.present_box(dist)?);
    }
    Ok(DecisionPolicy {
        gamma,
        mana,
        grid,
        mana_units: state.mana_units,
        boxes: out,
    })
}

/// Sequential live-path replay of a [`DecisionPolicy`].
#[derive(Debug, Clone)]
pub struct PolicyReplay<'a> {
    policy: &'a DecisionPolicy,
    next_box: usize,
    spent_units: u64,
    awaiting_loss: bool,
}

impl<'a> PolicyReplay<'a> {
    pub fn new(policy: &'a DecisionPolicy) -> Self {
        PolicyReplay { policy, next_box: 0, spent_units: 0, awaiting_loss: false }
    }

    /// Decides the next box given a tie-break coin in `[0, 1)`.
    pub fn open_next(&mut self, coin: f64) -> bool {
        debug_assert!(!self.awaiting_loss, "loss of the previous box unreported");
        let policy = self.policy.boxes[self.next_box];
        self.next_box += 1;
        let open = self.spent_units < policy.threshold_units
            || (self.spent_units == policy.threshold_units && coin < policy.tie_prob);
        self.awaiting_loss = open;
        open
    }

    pub fn record_loss_units(&mut self, units: u64) -> Result<(), MagicianError> {
        if !self.awaiting_loss {
            return Err(MagicianError::LossWithoutOpen);
        }
        if self.spent_units + units > self.policy.mana_units {
            return Err(MagicianError::ManaOverdraft {
                spent: self.spent_units as f64 / self.policy.grid as f64,
                loss: units as f64 / self.policy.grid as f64,
                mana: self.policy.mana,
            });
        }
        self.spent_units += units;
        self.awaiting_loss = false;
        Ok(())
    }
}
