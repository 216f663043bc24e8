//! Dense bounded-variable primal simplex producing vertex optima.
//!
//! Solves `max c·x  s.t.  A x <= b,  0 <= x_j <= u_j` with `u_j` either 1 or
//! unbounded. Both the restricted master and the per-bin pricing subproblem
//! run through here. Vertex (basic) optima matter: the pricing constraint
//! matrix has the interval (consecutive-ones) column structure, so its
//! vertices are integral and the `snap_integral` flag rounds them cleanly.
//!
//! Pivot selection: largest reduced cost (ties to the smallest index) while
//! the objective makes progress. On a degenerate stall the rule switches to
//! Bland's order: smallest eligible index enters, smallest index among
//! blocking ties leaves, and the entering variable's own bound competes by
//! its index. Bland's rule rules out cycling, so the loop always terminates.

use std::fmt;

/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-9;
/// Reduced-cost optimality tolerance.
pub const OPT_TOL: f64 = 1e-9;
/// Vertices within this distance of an integer are snapped when the
/// `snap_integral` flag is set.
pub const SNAP_TOL: f64 = 1e-6;

const RATE_TOL: f64 = 1e-9;
/// Pivot elements below this are numerically dangerous; the ratio test
/// prefers bigger ones among the tied blocking rows and retries off a fresh
/// factorization before accepting one.
const PIVOT_TOL: f64 = 1e-8;
const REFACTOR_EVERY: usize = 128;
/// Consecutive non-improving pivots before the entering rule falls back to
/// Bland's anti-cycling order.
const STALL_LIMIT: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarBound {
    /// `0 <= x_j <= 1`.
    Unit,
    /// `0 <= x_j`.
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Objective coefficients, maximized.
    pub maximize: Vec<f64>,
    /// Dense constraint rows, all of sense `<=`.
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub bounds: Vec<VarBound>,
    /// Set when the constraint matrix is known totally unimodular with
    /// integer data, so the vertex optimum is integral and safe to snap.
    pub snap_integral: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    /// Structural variable values (empty unless Optimal).
    pub primal: Vec<f64>,
    /// One dual multiplier per row, nonnegative for `<=` rows.
    pub duals: Vec<f64>,
    pub objective: f64,
    /// Basic variable per row at the final vertex (structural variables
    /// first, then slacks); reusable as a warm-start hint.
    pub basis: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpError {
    Malformed(String),
    /// The Bland pivot loop exceeded its iteration guard.
    DegeneracyLimit,
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::Malformed(msg) => write!(f, "malformed LP: {msg}"),
            LpError::DegeneracyLimit => write!(f, "degeneracy limit exceeded"),
        }
    }
}

impl std::error::Error for LpError {}

/// Builds the interval packing LP for one bin: maximize the total weight of
/// fractionally selected entries subject to per-dimension capacity, where
/// entry `(lo, hi, w)` occupies one unit of every dimension in `[lo, hi)`.
/// The constraint matrix has consecutive ones down each column, hence is
/// totally unimodular and the flag for integral snapping is set.
pub fn interval_packing_lp(capacity: &[u32], entries: &[(u32, u32, f64)]) -> LinearProgram {
    let m = capacity.len();
    let n = entries.len();
    let mut rows = vec![vec![0.0; n]; m];
    for (j, &(lo, hi, _)) in entries.iter().enumerate() {
        for row in rows.iter_mut().take(hi as usize).skip(lo as usize) {
            row[j] = 1.0;
        }
    }
    LinearProgram {
        maximize: entries.iter().map(|&(_, _, w)| w).collect(),
        rows,
        rhs: capacity.iter().map(|&c| f64::from(c)).collect(),
        bounds: vec![VarBound::Unit; n],
        snap_integral: true,
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpResult, LpError> {
    validate(lp)?;
    Simplex::new(lp).run()
}

/// Like [`solve`], but seeds the simplex from a previous vertex basis
/// (one variable index per row; slacks are `n + row`). The hint is
/// best-effort: if it is structurally invalid, singular, or primal
/// infeasible, the solver falls back to the cold start.
pub fn solve_with_basis(lp: &LinearProgram, hint: &[usize]) -> Result<LpResult, LpError> {
    validate(lp)?;
    let mut simplex = Simplex::new(lp);
    if simplex.try_warm_start(hint) {
        simplex.run_phase_two()
    } else {
        simplex.run()
    }
}

fn validate(lp: &LinearProgram) -> Result<(), LpError> {
    let n = lp.maximize.len();
    if lp.bounds.len() != n {
        return Err(LpError::Malformed(format!(
            "{} bounds for {n} variables",
            lp.bounds.len()
        )));
    }
    if lp.rows.len() != lp.rhs.len() {
        return Err(LpError::Malformed(format!(
            "{} rows but {} right-hand sides",
            lp.rows.len(),
            lp.rhs.len()
        )));
    }
    for (i, row) in lp.rows.iter().enumerate() {
        if row.len() != n {
            return Err(LpError::Malformed(format!("row {i} has {} entries", row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(LpError::Malformed(format!("row {i} has a non-finite entry")));
        }
    }
    if lp.rhs.iter().any(|v| !v.is_finite()) || lp.maximize.iter().any(|v| !v.is_finite()) {
        return Err(LpError::Malformed("non-finite objective or rhs entry".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    Lower,
    Upper,
}

struct Simplex<'a> {
    lp: &'a LinearProgram,
    n: usize,
    m: usize,
    /// Number of artificial variables appended after slacks.
    n_art: usize,
    /// Rows whose artificial variable exists (rhs < 0), by artificial index.
    art_rows: Vec<usize>,
    /// Structural columns cached column-major: `cols[j*m + i] = rows[i][j]`.
    cols: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    /// Dense basis inverse, row-major m x m.
    binv: Vec<f64>,
    /// Values of the basic variables, one per row.
    xb: Vec<f64>,
    /// Upper bound per variable; artificials get 0 after phase one.
    upper: Vec<f64>,
    cost: Vec<f64>,
    pivots: usize,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LinearProgram) -> Self {
        let n = lp.maximize.len();
        let m = lp.rows.len();
        let art_rows: Vec<usize> =
            (0..m).filter(|&i| lp.rhs[i] < 0.0).collect();
        let n_art = art_rows.len();
        let total = n + m + n_art;

        let mut upper = Vec::with_capacity(total);
        for b in &lp.bounds {
            upper.push(match b {
                VarBound::Unit => 1.0,
                VarBound::Unbounded => f64::INFINITY,
            });
        }
        upper.extend(std::iter::repeat_n(f64::INFINITY, m + n_art));

        let mut state = vec![VarState::Lower; total];
        let mut basis = vec![0usize; m];
        let mut xb = vec![0.0; m];
        let mut next_art = 0;
        for i in 0..m {
            if lp.rhs[i] < 0.0 {
                let a = n + m + next_art;
                next_art += 1;
                basis[i] = a;
                xb[i] = -lp.rhs[i];
            } else {
                basis[i] = n + i;
                xb[i] = lp.rhs[i];
            }
            state[basis[i]] = VarState::Basic;
        }

        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            // Artificial columns are -e_i, so their basis inverse rows flip sign.
            binv[i * m + i] = if lp.rhs[i] < 0.0 { -1.0 } else { 1.0 };
        }

        let mut cols = vec![0.0; n * m];
        for (i, row) in lp.rows.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                cols[j * m + i] = a;
            }
        }

        Simplex {
            lp,
            n,
            m,
            n_art,
            art_rows,
            cols,
            basis,
            state,
            binv,
            xb,
            upper,
            cost: vec![0.0; total],
            pivots: 0,
        }
    }

    fn total_vars(&self) -> usize {
        self.n + self.m + self.n_art
    }

    /// Writes column `j` of the full constraint matrix into `out`.
    fn column(&self, j: usize, out: &mut [f64]) {
        out.fill(0.0);
        if j < self.n {
            out.copy_from_slice(&self.cols[j * self.m..(j + 1) * self.m]);
        } else if j < self.n + self.m {
            out[j - self.n] = 1.0;
        } else {
            out[self.art_rows[j - self.n - self.m]] = -1.0;
        }
    }

    /// Reduced cost of variable `j` under duals `y`.
    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            let col = &self.cols[j * self.m..(j + 1) * self.m];
            let mut d = self.cost[j];
            for (yk, ck) in y.iter().zip(col) {
                d -= yk * ck;
            }
            d
        } else if j < self.n + self.m {
            self.cost[j] - y[j - self.n]
        } else {
            self.cost[j] + y[self.art_rows[j - self.n - self.m]]
        }
    }

    /// Installs a previous basis if it is valid for this LP and primal
    /// feasible. Nonbasic variables rest at their lower bound, which is
    /// exact for LPs without upper-bounded variables and a legal starting
    /// point otherwise.
    fn try_warm_start(&mut self, hint: &[usize]) -> bool {
        let m = self.m;
        if hint.len() != m {
            return false;
        }
        let mut seen = vec![false; self.n + m];
        for &j in hint {
            if j >= self.n + m || seen[j] || self.upper[j] == 0.0 {
                return false;
            }
            seen[j] = true;
        }
        let old_basis = self.basis.clone();
        let old_state = self.state.clone();
        for s in self.state.iter_mut() {
            *s = VarState::Lower;
        }
        self.basis.copy_from_slice(hint);
        for &j in hint {
            self.state[j] = VarState::Basic;
        }
        if !self.refactor() {
            self.basis = old_basis;
            self.state = old_state;
            self.refactor();
            return false;
        }
        let feasible = (0..m).all(|i| {
            self.xb[i] >= -FEAS_TOL && self.xb[i] <= self.upper[self.basis[i]] + FEAS_TOL
        });
        if !feasible {
            self.basis = old_basis;
            self.state = old_state;
            self.refactor();
            return false;
        }
        true
    }

    fn run_phase_two(mut self) -> Result<LpResult, LpError> {
        for a in 0..self.n_art {
            self.upper[self.n + self.m + a] = 0.0;
        }
        self.cost.fill(0.0);
        self.cost[..self.n].copy_from_slice(&self.lp.maximize);
        if self.pivot_loop()? {
            return Ok(LpResult {
                status: LpStatus::Unbounded,
                primal: Vec::new(),
                duals: Vec::new(),
                objective: f64::INFINITY,
                basis: Vec::new(),
            });
        }
        self.refactor();
        Ok(self.extract())
    }

    fn run(mut self) -> Result<LpResult, LpError> {
        if self.n_art > 0 {
            for a in 0..self.n_art {
                self.cost[self.n + self.m + a] = -1.0;
            }
            self.pivot_loop()?;
            let infeas: f64 = (0..self.m)
                .filter(|&i| self.basis[i] >= self.n + self.m)
                .map(|i| self.xb[i])
                .sum();
            if infeas > 1e-7 {
                return Ok(LpResult {
                    status: LpStatus::Infeasible,
                    primal: Vec::new(),
                    duals: Vec::new(),
                    objective: 0.0,
                    basis: Vec::new(),
                });
            }
            self.purge_artificials();
        }
        self.run_phase_two()
    }

    /// Pins remaining artificials to zero and pivots basic ones out where a
    /// substitute column exists; rows with none are redundant and keep their
    /// artificial basic at value zero.
    fn purge_artificials(&mut self) {
        for a in 0..self.n_art {
            self.upper[self.n + self.m + a] = 0.0;
        }
        let mut col = vec![0.0; self.m];
        let mut w = vec![0.0; self.m];
        for r in 0..self.m {
            if self.basis[r] < self.n + self.m {
                continue;
            }
            let mut replacement = None;
            for j in 0..self.n + self.m {
                if self.state[j] == VarState::Basic {
                    continue;
                }
                self.column(j, &mut col);
                let mut wr = 0.0;
                for i in 0..self.m {
                    wr += self.binv[r * self.m + i] * col[i];
                }
                if wr.abs() > 1e-7 {
                    replacement = Some(j);
                    break;
                }
            }
            if let Some(j) = replacement {
                self.column(j, &mut col);
                self.apply_binv(&col, &mut w);
                let old = self.basis[r];
                self.update_binv(r, &w);
                self.state[old] = VarState::Lower;
                self.basis[r] = j;
                self.state[j] = VarState::Basic;
                // Degenerate swap: the artificial sat at zero, so values hold.
                self.xb[r] = 0.0;
            }
        }
    }

    fn apply_binv(&self, col: &[f64], out: &mut [f64]) {
        for i in 0..self.m {
            let mut acc = 0.0;
            let row = &self.binv[i * self.m..(i + 1) * self.m];
            for (k, &c) in col.iter().enumerate() {
                if c != 0.0 {
                    acc += row[k] * c;
                }
            }
            out[i] = acc;
        }
    }

    /// Row-reduces the basis inverse against pivot column `w` at row `r`.
    fn update_binv(&mut self, r: usize, w: &[f64]) {
        let m = self.m;
        let pivot = w[r];
        for k in 0..m {
            self.binv[r * m + k] /= pivot;
        }
        for i in 0..m {
            if i == r {
                continue;
            }
            let factor = w[i];
            if factor != 0.0 {
                for k in 0..m {
                    self.binv[i * m + k] -= factor * self.binv[r * m + k];
                }
            }
        }
    }

    /// Rebuilds the basis inverse and basic values from scratch. Returns
    /// false (leaving the inverse unusable) when the basis is singular,
    /// which only happens for bad warm-start hints.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        if m == 0 {
            return true;
        }
        // Gauss-Jordan inversion of the basis matrix.
        let mut aug = vec![0.0; m * 2 * m];
        let mut col = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            self.column(j, &mut col);
            for i in 0..m {
                aug[i * 2 * m + r] = col[i];
            }
        }
        for i in 0..m {
            aug[i * 2 * m + m + i] = 1.0;
        }
        for c in 0..m {
            let mut best = c;
            for r in c + 1..m {
                if aug[r * 2 * m + c].abs() > aug[best * 2 * m + c].abs() {
                    best = r;
                }
            }
            if best != c {
                for k in 0..2 * m {
                    aug.swap(c * 2 * m + k, best * 2 * m + k);
                }
            }
            let pivot = aug[c * 2 * m + c];
            if pivot.abs() <= 1e-12 {
                return false;
            }
            for k in 0..2 * m {
                aug[c * 2 * m + k] /= pivot;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let factor = aug[r * 2 * m + c];
                if factor != 0.0 {
                    for k in 0..2 * m {
                        aug[r * 2 * m + k] -= factor * aug[c * 2 * m + k];
                    }
                }
            }
        }
        for i in 0..m {
            for k in 0..m {
                self.binv[i * m + k] = aug[i * 2 * m + m + k];
            }
        }
        // xb = Binv (b - sum of upper-bound nonbasic columns).
        let mut resid = self.lp.rhs.clone();
        for j in 0..self.total_vars() {
            if self.state[j] == VarState::Upper {
                self.column(j, &mut col);
                for i in 0..m {
                    resid[i] -= col[i] * self.upper[j];
                }
            }
        }
        let input = resid.clone();
        self.apply_binv(&input, &mut col);
        self.xb.copy_from_slice(&col);
        true
    }

    /// Current objective value of the working cost vector.
    fn working_objective(&self) -> f64 {
        let mut obj = 0.0;
        for (r, &j) in self.basis.iter().enumerate() {
            let c = self.cost[j];
            if c != 0.0 {
                obj += c * self.xb[r];
            }
        }
        for j in 0..self.n {
            if self.state[j] == VarState::Upper {
                obj += self.cost[j] * self.upper[j];
            }
        }
        obj
    }

    /// Pivot loop. Returns true when the objective is unbounded.
    fn pivot_loop(&mut self) -> Result<bool, LpError> {
        let m = self.m;
        let limit = 2000 + 200 * (self.total_vars() + m);
        let mut col = vec![0.0; m];
        let mut w = vec![0.0; m];
        let mut duals = vec![0.0; m];
        let mut ratios = vec![0.0; m];
        let mut stalled = 0u32;
        let mut pivots_at_refactor = self.pivots;
        let mut last_obj = self.working_objective();

        for _ in 0..limit {
            // y = c_B B^-1, accumulated row-wise over the inverse.
            duals.fill(0.0);
            for (r, &j) in self.basis.iter().enumerate() {
                let cb = self.cost[j];
                if cb != 0.0 {
                    let row = &self.binv[r * m..(r + 1) * m];
                    for (d, &v) in duals.iter_mut().zip(row) {
                        *d += cb * v;
                    }
                }
            }

            // Entering rule: largest reduced-cost improvement, ties to the
            // smallest index; under a stall, Bland's smallest eligible index.
            let bland = stalled >= STALL_LIMIT;
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.total_vars() {
                if self.state[j] == VarState::Basic || self.upper[j] == 0.0 {
                    continue;
                }
                let d = self.reduced_cost(j, &duals);
                let profit = match self.state[j] {
                    VarState::Lower => d,
                    VarState::Upper => -d,
                    VarState::Basic => unreachable!(),
                };
                if profit > OPT_TOL {
                    if bland {
                        entering = Some((j, profit));
                        break;
                    }
                    if entering.is_none_or(|(_, best)| profit > best) {
                        entering = Some((j, profit));
                    }
                }
            }
            let Some((e, _)) = entering else {
                return Ok(false);
            };

            let sign = if self.state[e] == VarState::Lower { 1.0 } else { -1.0 };
            self.column(e, &mut col);
            self.apply_binv(&col, &mut w);

            // Two-pass ratio test. Pass one finds the tightest step; pass
            // two picks the blocking row among the near-ties: the largest
            // pivot element for stability, or the smallest variable index
            // under Bland's rule (the entering variable's own bound counts
            // by its index). A dangerously small pivot triggers one retry
            // from a fresh factorization.
            let mut retried = false;
            let (t, block) = loop {
                for i in 0..m {
                    let rate = -sign * w[i];
                    ratios[i] = if rate < -RATE_TOL {
                        self.xb[i].max(0.0) / -rate
                    } else if rate > RATE_TOL && self.upper[self.basis[i]].is_finite() {
                        (self.upper[self.basis[i]] - self.xb[i]).max(0.0) / rate
                    } else {
                        f64::INFINITY
                    };
                }
                let mut t_min = self.upper[e];
                for &r in ratios.iter() {
                    t_min = t_min.min(r);
                }
                if t_min.is_infinite() {
                    return Ok(true);
                }
                let tie = t_min + 1e-9 * (1.0 + t_min.abs().min(1e6));
                let mut block: Option<usize> = None;
                for i in 0..m {
                    if ratios[i] > tie {
                        continue;
                    }
                    let better = match block {
                        None => true,
                        Some(r) => {
                            if bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                w[i].abs() > w[r].abs()
                            }
                        }
                    };
                    if better {
                        block = Some(i);
                    }
                }
                // The entering variable's own bound flip competes with the
                // tied rows; flipping needs no pivot, so outside Bland mode
                // it wins every tie.
                if self.upper[e] <= tie {
                    let flip = match block {
                        None => true,
                        Some(r) => !bland || e < self.basis[r],
                    };
                    if flip {
                        block = None;
                    }
                }
                if let Some(r) = block {
                    // Retry once off a fresh factorization, unless it is
                    // fresh already.
                    if w[r].abs() < PIVOT_TOL
                        && !retried
                        && self.pivots >= pivots_at_refactor + 8
                    {
                        retried = true;
                        self.refactor();
                        pivots_at_refactor = self.pivots;
                        self.apply_binv(&col, &mut w);
                        continue;
                    }
                    break (ratios[r].max(0.0), Some(r));
                }
                break (self.upper[e], None);
            };

            for i in 0..m {
                let rate = -sign * w[i];
                if rate != 0.0 {
                    self.xb[i] += rate * t;
                }
            }

            match block {
                None => {
                    // The entering variable runs to its opposite bound.
                    self.state[e] = if sign > 0.0 { VarState::Upper } else { VarState::Lower };
                }
                Some(r) => {
                    let leaving = self.basis[r];
                    let rate = -sign * w[r];
                    self.state[leaving] =
                        if rate < 0.0 { VarState::Lower } else { VarState::Upper };
                    let entering_value = if sign > 0.0 { t } else { self.upper[e] - t };
                    self.update_binv(r, &w);
                    self.basis[r] = e;
                    self.state[e] = VarState::Basic;
                    self.xb[r] = entering_value;
                    self.pivots += 1;
                    if self.pivots >= pivots_at_refactor + REFACTOR_EVERY {
                        self.refactor();
                        pivots_at_refactor = self.pivots;
                    }
                }
            }

            let obj = self.working_objective();
            if obj > last_obj + 1e-12 * (1.0 + last_obj.abs()) {
                stalled = 0;
                last_obj = obj;
            } else {
                stalled += 1;
            }
        }
        Err(LpError::DegeneracyLimit)
    }

    fn extract(&self) -> LpResult {
        let mut primal = vec![0.0; self.n];
        for j in 0..self.n {
            primal[j] = match self.state[j] {
                VarState::Lower => 0.0,
                VarState::Upper => self.upper[j],
                VarState::Basic => {
                    let r = self.basis.iter().position(|&b| b == j).expect("basic var has a row");
                    self.xb[r]
                }
            };
            if primal[j].abs() < 1e-12 {
                primal[j] = 0.0;
            }
        }
        if self.lp.snap_integral {
            for v in &mut primal {
                let nearest = v.round();
                if (*v - nearest).abs() <= SNAP_TOL {
                    *v = nearest;
                }
            }
        }

        let m = self.m;
        let mut duals = vec![0.0; m];
        for i in 0..m {
            let mut acc = 0.0;
            for r in 0..m {
                let cb = self.cost[self.basis[r]];
                if cb != 0.0 {
                    acc += cb * self.binv[r * m + i];
                }
            }
            // Duals of <= rows are nonnegative at optimality; shave float dust.
            duals[i] = if acc < 0.0 && acc > -1e-7 { 0.0 } else { acc };
        }

        let objective = primal
            .iter()
            .zip(&self.lp.maximize)
            .map(|(x, c)| x * c)
            .sum();
        LpResult {
            status: LpStatus::Optimal,
            primal,
            duals,
            objective,
            basis: self.basis.clone(),
        }
    }
}
