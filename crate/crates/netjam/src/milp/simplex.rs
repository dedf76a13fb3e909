//! Bounded-variable revised simplex with a product-form basis inverse.
//!
//! The solver keeps the basis inverse as a sequence of eta transformations
//! refreshed by periodic refactorization, prices with Dantzig's rule and
//! falls back to Bland's rule on stalls, and reaches feasibility with a
//! composite phase 1 that prices the infeasibility gradient. Rows and
//! columns are equilibrated to powers of two beforehand; model coefficients
//! span many orders of magnitude (femtowatt noise terms next to unit
//! cardinality rows), and the equilibration keeps pivots trustworthy.
//!
//! Invariant maintained throughout: `basis[i]` is the variable whose value
//! occupies row `i` of any FTRAN result. Iteration pivots preserve this by
//! construction; refactorization restores it by reordering the basis into
//! pivot-row order.

use super::SolveError;
use crate::formulate::RowSense;

// -- numerics ----------------------------------------------------------------

/// Feasibility tolerance on scaled variable bounds.
const FEAS_TOL: f64 = 1e-9;
/// Reduced-cost tolerance for declaring optimality.
const COST_TOL: f64 = 1e-9;
/// Smallest pivot magnitude accepted without refactorizing first.
const PIVOT_TOL: f64 = 1e-8;
/// Entries below this are treated as structural zeros during ratio tests.
const RATIO_SKIP: f64 = 1e-11;
/// Pivots between refactorizations.
const REFACTOR_INTERVAL: usize = 64;
/// Consecutive degenerate iterations before switching to Bland's rule.
const STALL_LIMIT: usize = 200;
/// Residual bound accepted on the scaled system at optimality.
const RESIDUAL_TOL: f64 = 1e-7;

/// One row of the LP in `terms (sense) rhs` form.
#[derive(Debug, Clone)]
pub(crate) struct LpRow {
    pub terms: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// A linear program in minimize orientation over bounded variables.
#[derive(Debug, Clone)]
pub(crate) struct LpProblem {
    pub n: usize,
    pub costs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LpRow>,
}

/// Solver outcome on the original (unscaled) problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub(crate) struct LpOutcome {
    pub status: LpStatus,
    /// Structural variable values (empty unless optimal).
    pub values: Vec<f64>,
    /// Objective value in minimize orientation (unscaled).
    pub objective: f64,
    /// Row duals (empty unless optimal).
    pub duals: Vec<f64>,
    /// Structural reduced costs (empty unless optimal).
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

pub(crate) fn solve_lp(problem: &LpProblem, max_iterations: usize) -> Result<LpOutcome, SolveError> {
    let mut tableau = Tableau::build(problem)?;
    match tableau.run(max_iterations, false) {
        Ok(outcome) => Ok(outcome),
        Err(SolveError::Numerical(_)) => {
            // One clean retry from the all-logical basis with conservative
            // pricing before giving up.
            let mut retry = Tableau::build(problem)?;
            retry.run(max_iterations, true)
        }
        Err(e) => Err(e),
    }
}

// -- internal state -----------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VState {
    Basic,
    AtLower,
    AtUpper,
}

/// Elementary transformation: applying it to a vector divides entry `row`
/// by `pivot` and subtracts multiples from the other listed entries.
struct Eta {
    row: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

enum Block {
    /// Entering variable travels to its own opposite bound.
    Flip(f64),
    /// The basic in row `row` leaves toward `state` after step `theta`.
    Pivot { theta: f64, row: usize, state: VState },
    Unbounded,
}

struct Tableau {
    m: usize,
    n_struct: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    costs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    basis: Vec<usize>,
    vstate: Vec<VState>,
    x: Vec<f64>,
    etas: Vec<Eta>,
    pivots_since_refactor: usize,
    iterations: usize,
}

impl Tableau {
    fn build(problem: &LpProblem) -> Result<Self, SolveError> {
        let m = problem.rows.len();
        let n_struct = problem.n;
        let n = n_struct + m;
        for (j, (&l, &u)) in problem.lower.iter().zip(&problem.upper).enumerate() {
            if !(l.is_finite() && u.is_finite()) || l > u {
                return Err(SolveError::InvalidModel(format!(
                    "structural variable {j} has bounds [{l}, {u}]"
                )));
            }
        }

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in problem.rows.iter().enumerate() {
            for &(j, c) in &row.terms {
                if j >= n_struct {
                    return Err(SolveError::InvalidModel(format!(
                        "row {i} references variable {j} of {n_struct}"
                    )));
                }
                if !c.is_finite() {
                    return Err(SolveError::InvalidModel(format!(
                        "row {i} has a non-finite coefficient"
                    )));
                }
                if c != 0.0 {
                    cols[j].push((i, c));
                }
            }
        }
        // Merge duplicate variable mentions within a row.
        for col in cols.iter_mut().take(n_struct) {
            col.sort_unstable_by_key(|(i, _)| *i);
            col.dedup_by(|later, first| {
                if later.0 == first.0 {
                    first.1 += later.1;
                    true
                } else {
                    false
                }
            });
        }

        let mut lower = problem.lower.clone();
        let mut upper = problem.upper.clone();
        let mut costs = problem.costs.clone();
        costs.resize(n, 0.0);
        let mut rhs = Vec::with_capacity(m);
        for (i, row) in problem.rows.iter().enumerate() {
            let logical = n_struct + i;
            cols[logical].push((i, 1.0));
            let (l, u) = match row.sense {
                RowSense::Le => (0.0, f64::INFINITY),
                RowSense::Ge => (f64::NEG_INFINITY, 0.0),
                RowSense::Eq => (0.0, 0.0),
            };
            lower.push(l);
            upper.push(u);
            rhs.push(row.rhs);
        }

        let (row_scale, col_scale) = equilibrate(&cols, m, n_struct);
        let mut tableau = Tableau {
            m,
            n_struct,
            n,
            cols,
            costs,
            lower,
            upper,
            rhs,
            row_scale,
            col_scale,
            basis: Vec::new(),
            vstate: Vec::new(),
            x: Vec::new(),
            etas: Vec::new(),
            pivots_since_refactor: 0,
            iterations: 0,
        };
        tableau.apply_scaling();
        tableau.reset_to_logical_basis();
        Ok(tableau)
    }

    fn apply_scaling(&mut self) {
        for (j, col) in self.cols.iter_mut().enumerate() {
            for (i, c) in col.iter_mut() {
                *c *= self.row_scale[*i] * self.col_scale[j];
            }
        }
        for j in 0..self.n {
            let g = self.col_scale[j];
            self.costs[j] *= g;
            if self.lower[j].is_finite() {
                self.lower[j] /= g;
            }
            if self.upper[j].is_finite() {
                self.upper[j] /= g;
            }
        }
        for i in 0..self.m {
            self.rhs[i] *= self.row_scale[i];
        }
    }

    fn reset_to_logical_basis(&mut self) {
        self.basis = (self.n_struct..self.n).collect();
        self.vstate = vec![VState::AtLower; self.n];
        for j in 0..self.n_struct {
            // Structural bounds are finite; rest at the smaller-magnitude one.
            self.vstate[j] = if self.lower[j].abs() <= self.upper[j].abs() {
                VState::AtLower
            } else {
                VState::AtUpper
            };
        }
        for j in self.n_struct..self.n {
            self.vstate[j] = VState::Basic;
        }
        self.x = vec![0.0; self.n];
        for j in 0..self.n_struct {
            self.x[j] = match self.vstate[j] {
                VState::AtLower => self.lower[j],
                VState::AtUpper => self.upper[j],
                VState::Basic => unreachable!(),
            };
        }
        self.etas.clear();
        self.pivots_since_refactor = 0;
        self.recompute_basics();
    }

    // -- basis inverse ---------------------------------------------------------

    fn ftran(&self, v: &mut [f64]) {
        for eta in &self.etas {
            let zr = v[eta.row] / eta.pivot;
            if zr != 0.0 {
                for &(i, a) in &eta.entries {
                    v[i] -= a * zr;
                }
            }
            v[eta.row] = zr;
        }
    }

    fn btran(&self, w: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut acc = w[eta.row];
            for &(i, a) in &eta.entries {
                acc -= a * w[i];
            }
            w[eta.row] = acc / eta.pivot;
        }
    }

    /// Rebuilds the eta sequence from the current basis set by Gaussian
    /// elimination with partial pivoting over unassigned rows, then reorders
    /// the basis into pivot-row order. Columns that turn out dependent are
    /// swapped for fresh logicals.
    fn factorize(&mut self) -> Result<(), SolveError> {
        for _attempt in 0..2 {
            self.etas.clear();
            let mut new_basis = vec![usize::MAX; self.m];
            let mut assigned = vec![false; self.m];
            let mut failed: Vec<usize> = Vec::new();
            // Logical columns first: they tend to pivot on their own row
            // without fill-in. Ties broken by index for determinism.
            let mut order = self.basis.clone();
            order.sort_unstable_by_key(|&v| (v < self.n_struct, v));
            let mut work = vec![0.0; self.m];
            for &var in &order {
                work.iter_mut().for_each(|w| *w = 0.0);
                for &(i, c) in &self.cols[var] {
                    work[i] = c;
                }
                self.ftran(&mut work);
                let mut best = usize::MAX;
                let mut best_mag = 1e-10;
                for (i, &w) in work.iter().enumerate() {
                    if !assigned[i] && w.abs() > best_mag {
                        best_mag = w.abs();
                        best = i;
                    }
                }
                if best == usize::MAX {
                    failed.push(var);
                    continue;
                }
                assigned[best] = true;
                new_basis[best] = var;
                let entries: Vec<(usize, f64)> = work
                    .iter()
                    .enumerate()
                    .filter(|&(i, &w)| i != best && w.abs() > 1e-13)
                    .map(|(i, &w)| (i, w))
                    .collect();
                self.etas.push(Eta {
                    row: best,
                    pivot: work[best],
                    entries,
                });
            }
            if failed.is_empty() {
                self.basis = new_basis;
                self.pivots_since_refactor = 0;
                return Ok(());
            }
            // Repair: dependent basics leave for a bound and each unpivoted
            // row takes its own logical back, then factorize once more.
            for &var in &failed {
                self.vstate[var] = if self.lower[var].is_finite() {
                    VState::AtLower
                } else {
                    VState::AtUpper
                };
                self.x[var] = match self.vstate[var] {
                    VState::AtLower => self.lower[var],
                    _ => self.upper[var],
                };
            }
            for row in 0..self.m {
                if assigned[row] {
                    continue;
                }
                let logical = self.n_struct + row;
                if self.vstate[logical] == VState::Basic && !failed.contains(&logical) {
                    return Err(SolveError::Numerical(
                        "basis repair found its logical already basic".into(),
                    ));
                }
                self.vstate[logical] = VState::Basic;
                new_basis[row] = logical;
            }
            self.basis = new_basis;
        }
        Err(SolveError::Numerical("basis factorization failed".into()))
    }

    /// Recomputes basic values from the bound values of the nonbasics.
    fn recompute_basics(&mut self) {
        let mut work = self.rhs.clone();
        for j in 0..self.n {
            if self.vstate[j] != VState::Basic && self.x[j] != 0.0 {
                for &(i, c) in &self.cols[j] {
                    work[i] -= c * self.x[j];
                }
            }
        }
        self.ftran(&mut work);
        for (row, &var) in self.basis.iter().enumerate() {
            self.x[var] = work[row];
        }
    }

    // -- pricing ----------------------------------------------------------------

    fn infeasibility(&self, var: usize) -> f64 {
        let x = self.x[var];
        if x < self.lower[var] - FEAS_TOL {
            self.lower[var] - x
        } else if x > self.upper[var] + FEAS_TOL {
            x - self.upper[var]
        } else {
            0.0
        }
    }

    fn total_infeasibility(&self) -> f64 {
        self.basis.iter().map(|&v| self.infeasibility(v)).sum()
    }

    fn feasibility_threshold(&self) -> f64 {
        FEAS_TOL * self.m as f64
    }

    /// Dual prices for the current phase: phase 1 prices the infeasibility
    /// gradient of the basics, phase 2 their true costs.
    fn basis_prices(&self, phase1: bool) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (row, &var) in self.basis.iter().enumerate() {
            y[row] = if phase1 {
                let x = self.x[var];
                if x < self.lower[var] - FEAS_TOL {
                    -1.0
                } else if x > self.upper[var] + FEAS_TOL {
                    1.0
                } else {
                    0.0
                }
            } else {
                self.costs[var]
            };
        }
        self.btran(&mut y);
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64], phase1: bool) -> f64 {
        let c = if phase1 { 0.0 } else { self.costs[j] };
        c - self.cols[j].iter().map(|&(i, a)| y[i] * a).sum::<f64>()
    }

    /// Picks an entering variable, returning `(index, direction)`.
    fn price(&self, y: &[f64], phase1: bool, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n {
            match self.vstate[j] {
                VState::Basic => continue,
                _ if self.lower[j] == self.upper[j] => continue,
                _ => {}
            }
            let d = self.reduced_cost(j, y, phase1);
            let dir = match self.vstate[j] {
                VState::AtLower if d < -COST_TOL => 1.0,
                VState::AtUpper if d > COST_TOL => -1.0,
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if best.map_or(true, |(_, _, mag)| d.abs() > mag) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    // -- ratio test ---------------------------------------------------------------

    fn ratio_test(&self, entering: usize, dir: f64, alpha: &[f64], phase1: bool, bland: bool) -> Block {
        let gap = self.upper[entering] - self.lower[entering];
        let mut theta = gap; // may be +inf
        let mut choice: Option<(usize, VState, f64)> = None;
        for (row, &a) in alpha.iter().enumerate() {
            if a.abs() <= RATIO_SKIP {
                continue;
            }
            let var = self.basis[row];
            let x = self.x[var];
            let (l, u) = (self.lower[var], self.upper[var]);
            let rate = -dir * a;
            let candidate = if phase1 && x < l - FEAS_TOL {
                // Infeasible below: blocks only once it climbs back to its
                // lower bound; sinking further is already priced in.
                (rate > 0.0).then(|| ((l - x) / rate, VState::AtLower))
            } else if phase1 && x > u + FEAS_TOL {
                (rate < 0.0).then(|| ((x - u) / -rate, VState::AtUpper))
            } else if rate > 0.0 {
                u.is_finite().then(|| ((u - x).max(0.0) / rate, VState::AtUpper))
            } else {
                l.is_finite().then(|| ((x - l).max(0.0) / -rate, VState::AtLower))
            };
            let Some((t, state)) = candidate else { continue };
            let better = if t < theta - 1e-12 {
                true
            } else if t > theta + 1e-12 {
                false
            } else if bland {
                choice.map_or(true, |(r, _, _)| var < self.basis[r])
            } else {
                choice.map_or(true, |(_, _, mag)| a.abs() > mag)
            };
            if better {
                theta = t.min(theta);
                choice = Some((row, state, a.abs()));
            }
        }
        match choice {
            Some((row, state, _)) => Block::Pivot {
                theta: theta.max(0.0),
                row,
                state,
            },
            None if theta.is_finite() => Block::Flip(theta),
            None => Block::Unbounded,
        }
    }

    fn apply_step(&mut self, entering: usize, dir: f64, theta: f64, alpha: &[f64]) {
        if theta != 0.0 {
            self.x[entering] += dir * theta;
            for (row, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let var = self.basis[row];
                    self.x[var] -= dir * theta * a;
                }
            }
        }
    }

    // -- main loop -----------------------------------------------------------------

    fn run(&mut self, max_iterations: usize, bland_from_start: bool) -> Result<LpOutcome, SolveError> {
        self.factorize()?;
        self.recompute_basics();
        let mut phase1 = self.total_infeasibility() > self.feasibility_threshold();
        let mut bland = bland_from_start;
        let mut stall = 0usize;
        let mut alpha = vec![0.0; self.m];
        let mut reference = if phase1 {
            self.total_infeasibility()
        } else {
            self.current_cost()
        };

        loop {
            self.iterations += 1;
            if self.iterations > max_iterations {
                return Err(SolveError::IterationLimit(max_iterations));
            }
            if self.pivots_since_refactor >= REFACTOR_INTERVAL {
                self.factorize()?;
                self.recompute_basics();
            }
            if phase1 && self.total_infeasibility() <= self.feasibility_threshold() {
                phase1 = false;
                stall = 0;
                if !bland_from_start {
                    bland = false;
                }
                reference = self.current_cost();
            }

            let y = self.basis_prices(phase1);
            let Some((entering, dir)) = self.price(&y, phase1, bland) else {
                if phase1 {
                    if self.total_infeasibility() > self.feasibility_threshold() {
                        return Ok(self.conclude(LpStatus::Infeasible));
                    }
                    phase1 = false;
                    continue;
                }
                return self.finish_optimal();
            };

            alpha.iter_mut().for_each(|a| *a = 0.0);
            for &(i, c) in &self.cols[entering] {
                alpha[i] = c;
            }
            self.ftran(&mut alpha);

            match self.ratio_test(entering, dir, &alpha, phase1, bland) {
                Block::Unbounded => {
                    if phase1 {
                        return Err(SolveError::Numerical(
                            "unbounded infeasibility descent".into(),
                        ));
                    }
                    return Ok(self.conclude(LpStatus::Unbounded));
                }
                Block::Flip(theta) => {
                    self.apply_step(entering, dir, theta, &alpha);
                    self.vstate[entering] = match self.vstate[entering] {
                        VState::AtLower => VState::AtUpper,
                        VState::AtUpper => VState::AtLower,
                        VState::Basic => unreachable!("entering variable is nonbasic"),
                    };
                }
                Block::Pivot { theta, row, state } => {
                    if alpha[row].abs() < PIVOT_TOL && self.pivots_since_refactor > 0 {
                        // Distrust a tiny pivot on a stale inverse: rebuild
                        // and retry the whole iteration.
                        self.factorize()?;
                        self.recompute_basics();
                        continue;
                    }
                    self.apply_step(entering, dir, theta, &alpha);
                    let leaving = self.basis[row];
                    self.vstate[leaving] = state;
                    self.x[leaving] = match state {
                        VState::AtLower => self.lower[leaving],
                        VState::AtUpper => self.upper[leaving],
                        VState::Basic => unreachable!("leaving variable moves to a bound"),
                    };
                    let entries: Vec<(usize, f64)> = alpha
                        .iter()
                        .enumerate()
                        .filter(|&(i, &a)| i != row && a.abs() > 1e-13)
                        .map(|(i, &a)| (i, a))
                        .collect();
                    self.etas.push(Eta {
                        row,
                        pivot: alpha[row],
                        entries,
                    });
                    self.basis[row] = entering;
                    self.vstate[entering] = VState::Basic;
                    self.pivots_since_refactor += 1;
                }
            }

            // Stall bookkeeping: long runs without measurable progress flip
            // pricing to Bland's rule, which cannot cycle.
            let progress = if phase1 {
                self.total_infeasibility()
            } else {
                self.current_cost()
            };
            if progress < reference - 1e-12 * (1.0 + reference.abs()) {
                reference = progress;
                stall = 0;
                if !bland_from_start {
                    bland = false;
                }
            } else {
                stall += 1;
                if stall > STALL_LIMIT {
                    bland = true;
                }
            }
        }
    }

    fn current_cost(&self) -> f64 {
        (0..self.n).map(|j| self.costs[j] * self.x[j]).sum()
    }

    fn finish_optimal(&mut self) -> Result<LpOutcome, SolveError> {
        // Refresh the inverse and basic values, then insist the scaled
        // system is numerically consistent before reporting success.
        self.factorize()?;
        self.recompute_basics();
        let worst_bound = self
            .basis
            .iter()
            .map(|&v| self.infeasibility(v))
            .fold(0.0, f64::max);
        let mut residual = self.rhs.clone();
        for j in 0..self.n {
            if self.x[j] != 0.0 {
                for &(i, c) in &self.cols[j] {
                    residual[i] -= c * self.x[j];
                }
            }
        }
        let worst_row = residual.iter().fold(0.0, |acc: f64, r| acc.max(r.abs()));
        if worst_bound > RESIDUAL_TOL || worst_row > RESIDUAL_TOL {
            return Err(SolveError::Numerical(format!(
                "optimal candidate fails residual check (bound {worst_bound:.3e}, row {worst_row:.3e})"
            )));
        }
        Ok(self.conclude(LpStatus::Optimal))
    }

    fn conclude(&self, status: LpStatus) -> LpOutcome {
        if status != LpStatus::Optimal {
            return LpOutcome {
                status,
                values: Vec::new(),
                objective: 0.0,
                duals: Vec::new(),
                reduced_costs: Vec::new(),
                iterations: self.iterations,
            };
        }
        let values: Vec<f64> = (0..self.n_struct)
            .map(|j| self.x[j] * self.col_scale[j])
            .collect();
        let y = self.basis_prices(false);
        let duals: Vec<f64> = (0..self.m).map(|i| y[i] * self.row_scale[i]).collect();
        let reduced_costs: Vec<f64> = (0..self.n_struct)
            .map(|j| self.reduced_cost(j, &y, false) / self.col_scale[j])
            .collect();
        let objective = self.current_cost();
        LpOutcome {
            status,
            values,
            objective,
            duals,
            reduced_costs,
            iterations: self.iterations,
        }
    }
}

// -- scaling -------------------------------------------------------------------

/// Geometric-mean equilibration rounded to powers of two, three sweeps.
fn equilibrate(cols: &[Vec<(usize, f64)>], m: usize, n_struct: usize) -> (Vec<f64>, Vec<f64>) {
    let mut row_scale = vec![1.0f64; m];
    let mut col_scale = vec![1.0f64; n_struct];
    for _ in 0..3 {
        let mut row_min = vec![f64::INFINITY; m];
        let mut row_max = vec![0.0f64; m];
        for (j, col) in cols.iter().enumerate().take(n_struct) {
            for &(i, c) in col {
                let v = (c * row_scale[i] * col_scale[j]).abs();
                if v > 0.0 {
                    row_min[i] = row_min[i].min(v);
                    row_max[i] = row_max[i].max(v);
                }
            }
        }
        for i in 0..m {
            if row_max[i] > 0.0 {
                row_scale[i] *= pow2_near(1.0 / (row_min[i] * row_max[i]).sqrt());
            }
        }
        for (j, col) in cols.iter().enumerate().take(n_struct) {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for &(i, c) in col {
                let v = (c * row_scale[i] * col_scale[j]).abs();
                if v > 0.0 {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            if hi > 0.0 {
                col_scale[j] *= pow2_near(1.0 / (lo * hi).sqrt());
            }
        }
    }
    // Logical columns scale to exactly 1 so slack bounds stay clean.
    let mut full_col_scale = col_scale;
    full_col_scale.extend((0..m).map(|i| 1.0 / row_scale[i]));
    (row_scale, full_col_scale)
}

/// Nearest power of two, clamped to sane exponents.
fn pow2_near(v: f64) -> f64 {
    if !v.is_finite() || v <= 0.0 {
        return 1.0;
    }
    let e = v.log2().round().clamp(-60.0, 60.0) as i32;
    f64::from_bits(((1023 + e) as u64) << 52)
}

// -- tests ---------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn row(terms: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> LpRow {
        LpRow { terms, sense, rhs }
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn pow2_rounds_to_nearest_power() {
        assert_eq!(pow2_near(1.0), 1.0);
        assert_eq!(pow2_near(5.0), 4.0);
        assert_eq!(pow2_near(6.0), 8.0);
        assert_eq!(pow2_near(0.3), 0.25);
        assert_eq!(pow2_near(0.0), 1.0);
    }

    #[test]
    fn maximizing_via_negated_costs_on_a_triangle() {
        // max x + y s.t. x + y <= 1, bounds [0, 1]: optimum 1.
        let p = LpProblem {
            n: 2,
            costs: vec![-1.0, -1.0],
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
            rows: vec![row(vec![(0, 1.0), (1, 1.0)], RowSense::Le, 1.0)],
        };
        let out = solve_lp(&p, 1000).expect("solves");
        assert_eq!(out.status, LpStatus::Optimal);
        assert_close(out.objective, -1.0, 1e-9);
        assert_close(out.values[0] + out.values[1], 1.0, 1e-9);
    }

    #[test]
    fn two_constraint_diet_problem() {
        // min 2x + 3y s.t. x + y >= 4, x + 2y >= 6, x,y in [0, 10].
        // Optimum at (2, 2): cost 10.
        let p = LpProblem {
            n: 2,
            costs: vec![2.0, 3.0],
            lower: vec![0.0, 0.0],
            upper: vec![10.0, 10.0],
            rows: vec![
                row(vec![(0, 1.0), (1, 1.0)], RowSense::Ge, 4.0),
                row(vec![(0, 1.0), (1, 2.0)], RowSense::Ge, 6.0),
            ],
        };
        let out = solve_lp(&p, 1000).expect("solves");
        assert_eq!(out.status, LpStatus::Optimal);
        assert_close(out.objective, 10.0, 1e-8);
        assert_close(out.values[0], 2.0, 1e-8);
        assert_close(out.values[1], 2.0, 1e-8);
    }

    #[test]
    fn equality_rows_force_the_unique_point() {
        // x + y = 3, x - y = 1 -> (2, 1).
        let p = LpProblem {
            n: 2,
            costs: vec![1.0, 1.0],
            lower: vec![-10.0, -10.0],
            upper: vec![10.0, 10.0],
            rows: vec![
                row(vec![(0, 1.0), (1, 1.0)], RowSense::Eq, 3.0),
                row(vec![(0, 1.0), (1, -1.0)], RowSense::Eq, 1.0),
            ],
        };
        let out = solve_lp(&p, 1000).expect("solves");
        assert_eq!(out.status, LpStatus::Optimal);
        assert_close(out.values[0], 2.0, 1e-8);
        assert_close(out.values[1], 1.0, 1e-8);
    }

    #[test]
    fn infeasible_system_is_reported() {
        // x <= 1 and x >= 2 with x in [0, 10].
        let p = LpProblem {
            n: 1,
            costs: vec![1.0],
            lower: vec![0.0],
            upper: vec![10.0],
            rows: vec![
                row(vec![(0, 1.0)], RowSense::Le, 1.0),
                row(vec![(0, 1.0)], RowSense::Ge, 2.0),
            ],
        };
        let out = solve_lp(&p, 1000).expect("terminates");
        assert_eq!(out.status, LpStatus::Infeasible);
    }

    #[test]
    fn bound_flip_handles_upper_bounded_improvement() {
        // min -x with x in [0, 5] and a vacuous row: x flips to 5.
        let p = LpProblem {
            n: 1,
            costs: vec![-1.0],
            lower: vec![0.0],
            upper: vec![5.0],
            rows: vec![row(vec![(0, 1.0)], RowSense::Le, 100.0)],
        };
        let out = solve_lp(&p, 100).expect("solves");
        assert_eq!(out.status, LpStatus::Optimal);
        assert_close(out.values[0], 5.0, 1e-9);
    }

    #[test]
    fn badly_scaled_coefficients_survive_equilibration() {
        // Mixes 1e-13-scale and unit-scale rows, the span seen in jamming
        // models where noise sits near -114 dBmW and budgets near 1e1. The
        // secondary cost stays well above the dual tolerance so the optimal
        // vertex is unambiguous.
        let p = LpProblem {
            n: 2,
            costs: vec![-1.0, -1e-3],
            lower: vec![0.0, 0.0],
            upper: vec![1e4, 1e4],
            rows: vec![
                row(vec![(0, 1e-13), (1, 2e-13)], RowSense::Le, 5e-10),
                row(vec![(0, 1.0)], RowSense::Le, 4000.0),
            ],
        };
        let out = solve_lp(&p, 1000).expect("solves");
        assert_eq!(out.status, LpStatus::Optimal);
        // Row 2 caps x0 at 4000 (4e-10 <= 5e-10 leaves room), then row 1
        // allows x1 = (5e-10 - 4e-10) / 2e-13 = 500.
        assert_close(out.values[0], 4000.0, 1e-5);
        assert_close(out.values[1], 500.0, 1e-5);
    }

    #[test]
    fn duality_identity_holds_at_optimum() {
        let p = LpProblem {
            n: 3,
            costs: vec![3.0, -2.0, 1.0],
            lower: vec![0.0, 0.0, -2.0],
            upper: vec![4.0, 3.0, 2.0],
            rows: vec![
                row(vec![(0, 1.0), (1, 2.0), (2, -1.0)], RowSense::Le, 6.0),
                row(vec![(0, 2.0), (1, -1.0), (2, 1.0)], RowSense::Ge, -3.0),
                row(vec![(0, 1.0), (1, 1.0), (2, 1.0)], RowSense::Le, 5.0),
            ],
        };
        let out = solve_lp(&p, 1000).expect("solves");
        assert_eq!(out.status, LpStatus::Optimal);
        // With zero-cost logical columns the strong-duality identity reads
        // c*x = y*b + sum_j d_j x_j over structural columns.
        let dual_side: f64 = out
            .duals
            .iter()
            .zip(&p.rows)
            .map(|(y, r)| y * r.rhs)
            .sum::<f64>()
            + out
                .reduced_costs
                .iter()
                .zip(&out.values)
                .map(|(d, x)| d * x)
                .sum::<f64>();
        assert_close(out.objective, dual_side, 1e-7);
    }

    #[test]
    fn degenerate_transportation_lp_terminates() {
        // A flow-style LP with many ties to provoke degenerate pivots.
        let rows = vec![
            row(vec![(0, 1.0), (1, 1.0)], RowSense::Eq, 1.0),
            row(vec![(2, 1.0), (3, 1.0)], RowSense::Eq, 1.0),
            row(vec![(0, 1.0), (2, 1.0)], RowSense::Eq, 1.0),
            row(vec![(1, 1.0), (3, 1.0)], RowSense::Eq, 1.0),
        ];
        let p = LpProblem {
            n: 4,
            costs: vec![1.0, 2.0, 3.0, 1.0],
            lower: vec![0.0; 4],
            upper: vec![1.0; 4],
            rows,
        };
        let out = solve_lp(&p, 1000).expect("solves");
        assert_eq!(out.status, LpStatus::Optimal);
        assert_close(out.objective, 2.0, 1e-8);
    }

    #[test]
    fn redundant_equalities_trigger_basis_repair_not_failure() {
        // Row 3 = row 1 + row 2; the basis of structural columns is rank
        // deficient, exercising the repair path.
        let rows = vec![
            row(vec![(0, 1.0), (1, 1.0)], RowSense::Eq, 2.0),
            row(vec![(0, 1.0), (1, -1.0)], RowSense::Eq, 0.0),
            row(vec![(0, 2.0), (1, 0.0)], RowSense::Eq, 2.0),
        ];
        let p = LpProblem {
            n: 2,
            costs: vec![1.0, 1.0],
            lower: vec![-5.0, -5.0],
            upper: vec![5.0, 5.0],
            rows,
        };
        let out = solve_lp(&p, 1000).expect("solves");
        assert_eq!(out.status, LpStatus::Optimal);
        assert_close(out.values[0], 1.0, 1e-8);
        assert_close(out.values[1], 1.0, 1e-8);
    }

    #[test]
    fn random_dense_lps_agree_with_feasibility_and_duality() {
        // Deterministic xorshift stream; checks internal consistency on a
        // spread of random bounded LPs.
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for case in 0..60 {
            let n = 2 + (next() * 5.0) as usize;
            let m = 1 + (next() * 5.0) as usize;
            let costs: Vec<f64> = (0..n).map(|_| next() * 4.0 - 2.0).collect();
            let lower: Vec<f64> = (0..n).map(|_| next() * -2.0).collect();
            let upper: Vec<f64> = lower.iter().map(|l| l + 0.5 + next() * 3.0).collect();
            let rows: Vec<LpRow> = (0..m)
                .map(|_| {
                    let terms: Vec<(usize, f64)> =
                        (0..n).map(|j| (j, next() * 4.0 - 2.0)).collect();
                    let sense = if next() < 0.5 { RowSense::Le } else { RowSense::Ge };
                    row(terms, sense, next() * 6.0 - 3.0)
                })
                .collect();
            let p = LpProblem {
                n,
                costs,
                lower,
                upper,
                rows,
            };
            let out = solve_lp(&p, 5000).unwrap_or_else(|e| panic!("case {case}: {e}"));
            if out.status != LpStatus::Optimal {
                continue;
            }
            for (j, &x) in out.values.iter().enumerate() {
                assert!(
                    x >= p.lower[j] - 1e-7 && x <= p.upper[j] + 1e-7,
                    "case {case}: variable {j} out of bounds: {x}"
                );
            }
            for (i, r) in p.rows.iter().enumerate() {
                let lhs: f64 = r.terms.iter().map(|&(j, c)| c * out.values[j]).sum();
                let ok = match r.sense {
                    RowSense::Le => lhs <= r.rhs + 1e-6,
                    RowSense::Ge => lhs >= r.rhs - 1e-6,
                    RowSense::Eq => (lhs - r.rhs).abs() <= 1e-6,
                };
                assert!(ok, "case {case}: row {i} violated: {lhs} vs {}", r.rhs);
            }
            let primal: f64 = p.costs.iter().zip(&out.values).map(|(c, x)| c * x).sum();
            assert_close(primal, out.objective, 1e-6);
            let dual_side: f64 = out
                .duals
                .iter()
                .zip(&p.rows)
                .map(|(y, r)| y * r.rhs)
                .sum::<f64>()
                + out
                    .reduced_costs
                    .iter()
                    .zip(&out.values)
                    .map(|(d, x)| d * x)
                    .sum::<f64>();
            assert_close(primal, dual_side, 1e-5);
        }
    }
}
