//! Exact mixed-integer linear solving on top of an in-crate LP core.
//!
//! [`lp_relaxation`] solves the continuous relaxation of a model and exposes
//! duals for independent verification. [`bb_solve`] runs LP-relaxation
//! branch and bound: best-bound node selection (depth, then insertion order
//! as tie-breaks), branching on the most fractional binary, and the
//! one-branch child explored first. A caller-supplied callback inspects
//! every improving integral candidate and may reject it with a globally
//! valid cut; cuts join every LP solved afterwards, and if a later cut
//! invalidates the stored incumbent the tree restarts from the root with
//! the cut pool intact, so the returned solution always satisfies every cut
//! issued during the run.

mod simplex;

use crate::formulate::{LinearConstraint, MilpModel, ObjSense, RowSense, VarKind};
use simplex::{solve_lp, LpProblem, LpRow, LpStatus};
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};
use thiserror::Error;

/// Tolerance within which a relaxation value counts as integral.
pub const INT_TOL: f64 = 1e-6;
/// Feasibility tolerance applied when vetting integral candidates.
pub const CANDIDATE_TOL: f64 = 1e-6;

/// Errors surfaced by the LP and branch-and-bound layers.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("iteration limit {0} exhausted")]
    IterationLimit(usize),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("callback failure: {0}")]
    Callback(String),
}

/// Continuous relaxation outcome in the model's own orientation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelaxationStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solution of a continuous relaxation.
///
/// At optimality the reported duals and reduced costs satisfy
/// `objective = sum_i duals[i] * rhs[i] + sum_j reduced_costs[j] * values[j]`
/// in the model's orientation, which callers can use as an independent
/// optimality certificate.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: RelaxationStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

/// Verdict a candidate callback returns for an improving integral point.
#[derive(Debug, Clone)]
pub enum CandidateDecision {
    Accept,
    /// Reject the candidate and add these rows to every future relaxation.
    /// At least one row must exclude the candidate that triggered them.
    Cut(Vec<LinearConstraint>),
}

/// Callback invoked on improving integral candidates: `(values, objective)`.
pub type CandidateCallback<'a> =
    dyn FnMut(&[f64], f64) -> Result<CandidateDecision, SolveError> + 'a;

/// Search budget and tolerances for [`bb_solve`].
#[derive(Debug, Clone)]
pub struct BbOptions {
    /// Maximum number of nodes taken from the queue.
    pub node_limit: Option<usize>,
    /// Wall-clock budget for the whole search.
    pub time_limit: Option<Duration>,
    /// Relative optimality gap below which nodes are discarded; 0 is exact.
    pub relative_gap: f64,
    /// Try a rounding pass on the root relaxation to seed the incumbent.
    pub root_rounding: bool,
    /// Simplex iteration budget per relaxation.
    pub lp_iteration_limit: usize,
    /// Known feasible point used to seed the incumbent (full variable
    /// vector, binaries integral). It passes through the same cleanup,
    /// feasibility check and candidate callback as any other incumbent; a
    /// seed that fails cleanup or gets cut is dropped, not an error.
    pub initial_incumbent: Option<Vec<f64>>,
    /// Declares that the objective takes integer values at every integral
    /// point, so nodes whose bound falls short of the incumbent plus one
    /// are discarded. Setting this on a model with fractional objective
    /// coefficients makes the search incorrect.
    pub integral_objective: bool,
}

impl Default for BbOptions {
    fn default() -> Self {
        Self {
            node_limit: None,
            time_limit: None,
            relative_gap: 0.0,
            root_rounding: true,
            lp_iteration_limit: 200_000,
            initial_incumbent: None,
            integral_objective: false,
        }
    }
}

/// Termination state of a branch-and-bound run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbStatus {
    /// Search tree exhausted; the incumbent is optimal for the model plus
    /// all cuts issued during the run (within `relative_gap`).
    Optimal,
    /// No integral point satisfies the model plus the issued cuts.
    Infeasible,
    /// A node or time budget stopped the search early.
    BudgetExhausted,
}

/// Result of a branch-and-bound run.
#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: BbStatus,
    /// Best accepted point (empty when none was found).
    pub values: Vec<f64>,
    /// Objective of `values` in the model orientation.
    pub objective: f64,
    /// Valid bound on the best attainable objective.
    pub best_bound: f64,
    pub nodes: usize,
    /// Cuts accumulated through callback rejections, in issue order.
    pub cuts: Vec<LinearConstraint>,
}

/// Solves the continuous relaxation of `model`.
pub fn lp_relaxation(model: &MilpModel) -> Result<LpSolution, SolveError> {
    let sign = orientation_sign(model.sense());
    let problem = assemble_problem(model, &[], &[], None)?;
    let out = solve_lp(&problem, BbOptions::default().lp_iteration_limit)?;
    let status = match out.status {
        LpStatus::Optimal => RelaxationStatus::Optimal,
        LpStatus::Infeasible => RelaxationStatus::Infeasible,
        LpStatus::Unbounded => RelaxationStatus::Unbounded,
    };
    Ok(LpSolution {
        status,
        values: out.values,
        objective: -sign * out.objective,
        duals: out.duals.iter().map(|y| -sign * y).collect(),
        reduced_costs: out.reduced_costs.iter().map(|d| -sign * d).collect(),
        iterations: out.iterations,
    })
}

fn orientation_sign(sense: ObjSense) -> f64 {
    match sense {
        ObjSense::Maximize => 1.0,
        ObjSense::Minimize => -1.0,
    }
}

/// Builds the minimize-orientation LP for `model` plus `cuts`, with branch
/// fixes and (optionally) every binary pinned to a rounded candidate.
fn assemble_problem(
    model: &MilpModel,
    cuts: &[LinearConstraint],
    fixes: &[(usize, bool)],
    pin_binaries: Option<&[f64]>,
) -> Result<LpProblem, SolveError> {
    let n = model.n_vars();
    let sign = orientation_sign(model.sense());
    let mut costs = vec![0.0; n];
    for &(v, c) in model.objective() {
        costs[v] += -sign * c;
    }
    let mut lower: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();
    if let Some(candidate) = pin_binaries {
        for (v, var) in model.vars().iter().enumerate() {
            if var.kind == VarKind::Binary {
                let b = candidate[v].round().clamp(0.0, 1.0);
                lower[v] = b;
                upper[v] = b;
            }
        }
    }
    for &(v, hi) in fixes {
        let b = if hi { 1.0 } else { 0.0 };
        lower[v] = b;
        upper[v] = b;
    }
    let rows = model
        .rows()
        .iter()
        .chain(cuts.iter())
        .map(|r| LpRow {
            terms: r.terms.clone(),
            sense: r.sense,
            rhs: r.rhs,
        })
        .collect();
    Ok(LpProblem {
        n,
        costs,
        lower,
        upper,
        rows,
    })
}

/// Derives binary fixings implied row by row: whenever one value of a
/// binary leaves a row unsatisfiable even with every other variable at its
/// most helpful bound, the opposite value is forced. Runs to a fixpoint over
/// the model rows. Returns `None` when some row cannot be satisfied at all.
fn probe_fixes(model: &MilpModel) -> Option<Vec<(usize, bool)>> {
    let n = model.n_vars();
    let mut lower: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();
    let mut fixed: Vec<Option<bool>> = vec![None; n];
    loop {
        let mut changed = false;
        for row in model.rows() {
            let tol = 1e-9 * (1.0 + row.rhs.abs());
            let mut max_act = 0.0;
            let mut min_act = 0.0;
            for &(v, c) in &row.terms {
                max_act += if c > 0.0 { c * upper[v] } else { c * lower[v] };
                min_act += if c > 0.0 { c * lower[v] } else { c * upper[v] };
            }
            let need_ge = row.sense != RowSense::Le;
            let need_le = row.sense != RowSense::Ge;
            if (need_ge && max_act < row.rhs - tol) || (need_le && min_act > row.rhs + tol) {
                return None;
            }
            for &(v, c) in &row.terms {
                if model.var(v).kind != VarKind::Binary || fixed[v].is_some() || c == 0.0 {
                    continue;
                }
                // Activity extremes still count this variable as free (the
                // wider range only makes the test more conservative).
                let contrib_max = c.max(0.0);
                let contrib_min = c.min(0.0);
                let viable = |b: f64| {
                    let ma = max_act - contrib_max + c * b;
                    let mi = min_act - contrib_min + c * b;
                    !(need_ge && ma < row.rhs - tol) && !(need_le && mi > row.rhs + tol)
                };
                match (viable(0.0), viable(1.0)) {
                    (false, false) => return None,
                    (true, true) => {}
                    (can_zero, _) => {
                        let forced = !can_zero;
                        fixed[v] = Some(forced);
                        let fv = if forced { 1.0 } else { 0.0 };
                        lower[v] = fv;
                        upper[v] = fv;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Some(
        fixed
            .iter()
            .enumerate()
            .filter_map(|(v, f)| f.map(|b| (v, b)))
            .collect(),
    )
}

// -- branch and bound -----------------------------------------------------------

struct Node {
    /// Valid objective bound inherited from the parent relaxation
    /// (internal maximize orientation; the root carries +infinity).
    key: f64,
    depth: usize,
    seq: u64,
    fixes: Vec<(usize, bool)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key
            .total_cmp(&other.key)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Search<'m> {
    model: &'m MilpModel,
    options: BbOptions,
    sign: f64,
    binaries: Vec<usize>,
    /// Fixings implied by the model rows alone; they hold in every node and
    /// survive restarts (cuts only shrink the feasible set further).
    probed: Vec<(usize, bool)>,
    cuts: Vec<LinearConstraint>,
    incumbent: Option<(Vec<f64>, f64)>,
    heap: BinaryHeap<Node>,
    seq: u64,
    nodes: usize,
    pruned_bound: f64,
    started: Instant,
}

enum NodeFate {
    Finished,
    Restart,
}

impl<'m> Search<'m> {
    fn new(model: &'m MilpModel, options: BbOptions) -> Self {
        let binaries = (0..model.n_vars())
            .filter(|&v| model.var(v).kind == VarKind::Binary)
            .collect();
        Search {
            model,
            options,
            sign: orientation_sign(model.sense()),
            binaries,
            probed: Vec::new(),
            cuts: Vec::new(),
            incumbent: None,
            heap: BinaryHeap::new(),
            seq: 0,
            nodes: 0,
            pruned_bound: f64::NEG_INFINITY,
            started: Instant::now(),
        }
    }

    fn push_root(&mut self) {
        let seq = self.next_seq();
        let fixes = self.probed.clone();
        self.heap.push(Node {
            key: f64::INFINITY,
            depth: 0,
            seq,
            fixes,
        });
    }

    /// Installs a caller-supplied feasible point as the starting incumbent.
    /// Structural mistakes (wrong length, fractional binaries) are errors;
    /// a seed that fails the cleanup solve or gets cut by the callback is
    /// silently dropped.
    fn seed_incumbent(
        &mut self,
        start: Vec<f64>,
        callback: &mut Option<&mut CandidateCallback<'_>>,
    ) -> Result<(), SolveError> {
        if start.len() != self.model.n_vars() {
            return Err(SolveError::InvalidModel(format!(
                "warm start has {} values, model has {} variables",
                start.len(),
                self.model.n_vars()
            )));
        }
        if let Some(&v) = self
            .binaries
            .iter()
            .find(|&&v| (start[v] - start[v].round()).abs() > INT_TOL)
        {
            return Err(SolveError::InvalidModel(format!(
                "warm start leaves binary variable {v} fractional ({})",
                start[v]
            )));
        }
        let Some((values, obj)) = self.clean_candidate(&[], &start)? else {
            return Ok(());
        };
        // No incumbent exists yet, so a cut here cannot force a restart.
        let _ = self.offer_candidate(values, obj, callback)?;
        Ok(())
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn out_of_budget(&self) -> bool {
        if let Some(limit) = self.options.node_limit {
            if self.nodes >= limit {
                return true;
            }
        }
        if let Some(limit) = self.options.time_limit {
            if self.started.elapsed() >= limit {
                return true;
            }
        }
        false
    }

    /// Cutoff above which a bound still holds interest.
    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            None => f64::NEG_INFINITY,
            Some((_, obj)) => {
                let mut slack = (1e-9 * (1.0 + obj.abs()))
                    .max(self.options.relative_gap * obj.abs().max(1.0));
                if self.options.integral_objective {
                    // The next attainable objective is a full unit away;
                    // the margin absorbs integrality-tolerance drift.
                    slack = slack.max(1.0 - 1e-3);
                }
                obj + slack
            }
        }
    }

    fn solve_relaxation(
        &self,
        fixes: &[(usize, bool)],
        pin: Option<&[f64]>,
    ) -> Result<simplex::LpOutcome, SolveError> {
        let problem = assemble_problem(self.model, &self.cuts, fixes, pin)?;
        solve_lp(&problem, self.options.lp_iteration_limit)
    }

    /// Internal-orientation objective of a relaxation outcome.
    fn internal_objective(&self, out: &simplex::LpOutcome) -> f64 {
        -out.objective
    }

    fn most_fractional(&self, values: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &v in &self.binaries {
            let frac_gap = (values[v] - values[v].round()).abs();
            if frac_gap > INT_TOL {
                let distance = (values[v] - 0.5).abs();
                if best.map_or(true, |(_, d)| distance < d) {
                    best = Some((v, distance));
                }
            }
        }
        best.map(|(v, _)| v)
    }

    /// Vets an integral-valued relaxation point: re-solves with binaries
    /// pinned so continuous variables take clean feasible values, then runs
    /// the feasibility check. Returns the cleaned point and its internal
    /// objective.
    fn clean_candidate(
        &self,
        fixes: &[(usize, bool)],
        raw: &[f64],
    ) -> Result<Option<(Vec<f64>, f64)>, SolveError> {
        let out = self.solve_relaxation(fixes, Some(raw))?;
        if out.status != LpStatus::Optimal {
            return Ok(None);
        }
        let mut values = out.values;
        for &v in &self.binaries {
            values[v] = values[v].round().clamp(0.0, 1.0);
        }
        if !self.model.is_feasible(&values, CANDIDATE_TOL)
            || !self
                .cuts
                .iter()
                .all(|cut| cut.satisfied(&values, CANDIDATE_TOL))
        {
            return Ok(None);
        }
        let internal = self.sign * self.model.objective_value(&values);
        Ok(Some((values, internal)))
    }

    /// Runs the candidate through the callback; may install cuts. Returns
    /// `Restart` when a new cut invalidates the stored incumbent.
    fn offer_candidate(
        &mut self,
        values: Vec<f64>,
        internal_obj: f64,
        callback: &mut Option<&mut CandidateCallback<'_>>,
    ) -> Result<NodeFate, SolveError> {
        let model_obj = self.sign * internal_obj;
        let decision = match callback {
            None => CandidateDecision::Accept,
            Some(cb) => cb(&values, model_obj)?,
        };
        match decision {
            CandidateDecision::Accept => {
                self.incumbent = Some((values, internal_obj));
                Ok(NodeFate::Finished)
            }
            CandidateDecision::Cut(cuts) => {
                if cuts.is_empty() {
                    return Err(SolveError::Callback(
                        "rejection carried no cuts".into(),
                    ));
                }
                for cut in &cuts {
                    for (v, _) in &cut.terms {
                        if *v >= self.model.n_vars() {
                            return Err(SolveError::InvalidModel(format!(
                                "cut references variable {v} of {}",
                                self.model.n_vars()
                            )));
                        }
                    }
                }
                if cuts.iter().all(|cut| cut.satisfied(&values, CANDIDATE_TOL)) {
                    return Err(SolveError::Callback(
                        "cuts do not exclude the candidate that raised them".into(),
                    ));
                }
                let invalidates_incumbent = self.incumbent.as_ref().is_some_and(|(inc, _)| {
                    cuts.iter().any(|cut| !cut.satisfied(inc, CANDIDATE_TOL))
                });
                self.cuts.extend(cuts);
                if invalidates_incumbent {
                    self.incumbent = None;
                    Ok(NodeFate::Restart)
                } else {
                    Ok(NodeFate::Finished)
                }
            }
        }
    }

    /// Processes one node to completion. The loop re-solves the node after
    /// every cut installed from within it.
    fn process_node(
        &mut self,
        node: Node,
        callback: &mut Option<&mut CandidateCallback<'_>>,
    ) -> Result<NodeFate, SolveError> {
        let mut rounding_left = self.options.root_rounding && node.depth == 0;
        loop {
            let out = self.solve_relaxation(&node.fixes, None)?;
            match out.status {
                LpStatus::Infeasible => return Ok(NodeFate::Finished),
                LpStatus::Unbounded => {
                    return Err(SolveError::Numerical(
                        "unbounded relaxation in branch and bound".into(),
                    ))
                }
                LpStatus::Optimal => {}
            }
            let bound = self.internal_objective(&out);
            if bound <= self.cutoff() {
                self.pruned_bound = self.pruned_bound.max(bound);
                return Ok(NodeFate::Finished);
            }

            match self.most_fractional(&out.values) {
                None => {
                    let Some((values, obj)) = self.clean_candidate(&node.fixes, &out.values)?
                    else {
                        return Ok(NodeFate::Finished);
                    };
                    if obj <= self.cutoff() {
                        self.pruned_bound = self.pruned_bound.max(bound);
                        return Ok(NodeFate::Finished);
                    }
                    match self.offer_candidate(values, obj, callback)? {
                        NodeFate::Restart => return Ok(NodeFate::Restart),
                        NodeFate::Finished => {
                            if self.incumbent.is_some() {
                                // Accepted: the node is fathomed.
                                return Ok(NodeFate::Finished);
                            }
                            // A cut rejected the candidate; re-solve this
                            // node against the enlarged cut pool.
                            continue;
                        }
                    }
                }
                Some(branch_var) => {
                    if rounding_left {
                        rounding_left = false;
                        if let Some((values, obj)) =
                            self.clean_candidate(&node.fixes, &out.values)?
                        {
                            if obj > self.cutoff() {
                                match self.offer_candidate(values, obj, callback)? {
                                    NodeFate::Restart => return Ok(NodeFate::Restart),
                                    NodeFate::Finished => {}
                                }
                            }
                        }
                        // Whatever happened, continue with the same node so
                        // new cuts or the new incumbent take effect.
                        continue;
                    }
                    // One-branch first: its candidates activate devices and
                    // claims, which matters for cut-generating callers.
                    for hi in [true, false] {
                        let mut fixes = node.fixes.clone();
                        fixes.push((branch_var, hi));
                        let seq = self.next_seq();
                        self.heap.push(Node {
                            key: bound,
                            depth: node.depth + 1,
                            seq,
                            fixes,
                        });
                    }
                    return Ok(NodeFate::Finished);
                }
            }
        }
    }

    fn best_remaining_bound(&self) -> f64 {
        let heap_best = self
            .heap
            .iter()
            .map(|n| n.key)
            .fold(f64::NEG_INFINITY, f64::max);
        let incumbent_obj = self
            .incumbent
            .as_ref()
            .map_or(f64::NEG_INFINITY, |(_, o)| *o);
        heap_best.max(self.pruned_bound).max(incumbent_obj)
    }

    fn into_solution(mut self, status: BbStatus) -> MilpSolution {
        let best_bound = self.sign * self.best_remaining_bound();
        let (values, objective) = match self.incumbent.take() {
            Some((v, internal)) => (v, self.sign * internal),
            None => (Vec::new(), f64::NAN),
        };
        MilpSolution {
            status,
            values,
            objective,
            best_bound,
            nodes: self.nodes,
            cuts: self.cuts,
        }
    }
}

/// Solves `model` to integral optimality (within the configured gap) by
/// LP-relaxation branch and bound. See the module documentation for the
/// callback and cut protocol.
pub fn bb_solve(
    model: &MilpModel,
    mut options: BbOptions,
    mut callback: Option<&mut CandidateCallback<'_>>,
) -> Result<MilpSolution, SolveError> {
    if model.objective().is_empty() && model.n_vars() == 0 {
        return Err(SolveError::InvalidModel("empty model".into()));
    }
    let warm = options.initial_incumbent.take();
    let mut search = Search::new(model, options);
    let Some(probed) = probe_fixes(model) else {
        return Ok(search.into_solution(BbStatus::Infeasible));
    };
    search.probed = probed;
    if let Some(start) = warm {
        search.seed_incumbent(start, &mut callback)?;
    }
    search.push_root();

    while let Some(node) = search.heap.pop() {
        if search.out_of_budget() {
            search.heap.push(node);
            return Ok(search.into_solution(BbStatus::BudgetExhausted));
        }
        if node.key <= search.cutoff() {
            search.pruned_bound = search.pruned_bound.max(node.key.min(search.cutoff()));
            continue;
        }
        search.nodes += 1;
        match search.process_node(node, &mut callback)? {
            NodeFate::Finished => {}
            NodeFate::Restart => {
                search.heap.clear();
                search.push_root();
            }
        }
    }

    let status = if search.incumbent.is_some() {
        BbStatus::Optimal
    } else {
        BbStatus::Infeasible
    };
    Ok(search.into_solution(status))
}

// -- tests ---------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulate::{LinearConstraint, MilpModel, ObjSense, RowSense, RowTag, VarTag};

    fn binary_model(objective: &[f64], rows: Vec<(Vec<f64>, RowSense, f64)>) -> MilpModel {
        let mut model = MilpModel::new(ObjSense::Maximize);
        let vars: Vec<usize> = (0..objective.len())
            .map(|t| model.add_binary(VarTag::Claim { t }))
            .collect();
        for (round, (coeffs, sense, rhs)) in rows.into_iter().enumerate() {
            let terms = coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(j, c)| (vars[j], *c))
                .collect();
            model
                .add_row(LinearConstraint {
                    terms,
                    sense,
                    rhs,
                    tag: RowTag::Cut { round },
                    indicator: None,
                })
                .expect("valid row");
        }
        model
            .set_objective(
                objective
                    .iter()
                    .enumerate()
                    .map(|(j, c)| (vars[j], *c))
                    .collect(),
            )
            .expect("valid objective");
        model
    }

    /// Exhaustive 0/1 reference optimum for pure binary models.
    fn brute_force(model: &MilpModel) -> Option<(Vec<f64>, f64)> {
        let n = model.n_vars();
        assert!(n <= 20, "brute force guard");
        let mut best: Option<(Vec<f64>, f64)> = None;
        for mask in 0..(1u32 << n) {
            let values: Vec<f64> = (0..n).map(|v| f64::from((mask >> v) & 1)).collect();
            if !model.is_feasible(&values, 1e-9) {
                continue;
            }
            let obj = model.objective_value(&values);
            let better = match (&best, model.sense()) {
                (None, _) => true,
                (Some((_, b)), ObjSense::Maximize) => obj > *b + 1e-12,
                (Some((_, b)), ObjSense::Minimize) => obj < *b - 1e-12,
            };
            if better {
                best = Some((values, obj));
            }
        }
        best
    }

    #[test]
    fn knapsack_matches_brute_force() {
        let model = binary_model(
            &[10.0, 13.0, 7.0, 11.0, 4.0],
            vec![(vec![3.0, 4.0, 2.0, 3.0, 1.0], RowSense::Le, 7.0)],
        );
        let sol = bb_solve(&model, BbOptions::default(), None).expect("solves");
        assert_eq!(sol.status, BbStatus::Optimal);
        let (_, reference) = brute_force(&model).expect("feasible");
        assert!(
            (sol.objective - reference).abs() < 1e-9,
            "bb {} vs brute force {reference}",
            sol.objective
        );
        assert!((sol.best_bound - reference).abs() < 1e-6 || sol.best_bound >= reference);
    }

    #[test]
    fn random_binary_programs_match_brute_force() {
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for case in 0..50 {
            let n = 3 + (next() * 6.0) as usize;
            let m = 1 + (next() * 3.0) as usize;
            let objective: Vec<f64> = (0..n).map(|_| (next() * 20.0).round() / 2.0).collect();
            let rows: Vec<(Vec<f64>, RowSense, f64)> = (0..m)
                .map(|_| {
                    let coeffs: Vec<f64> = (0..n).map(|_| (next() * 6.0).round()).collect();
                    let total: f64 = coeffs.iter().sum();
                    let sense = if next() < 0.8 { RowSense::Le } else { RowSense::Ge };
                    let rhs = match sense {
                        RowSense::Le => (total * (0.3 + 0.4 * next())).round(),
                        _ => (total * 0.2 * next()).round(),
                    };
                    (coeffs, sense, rhs)
                })
                .collect();
            let model = binary_model(&objective, rows);
            let sol = bb_solve(&model, BbOptions::default(), None)
                .unwrap_or_else(|e| panic!("case {case}: {e}"));
            match brute_force(&model) {
                None => assert_eq!(sol.status, BbStatus::Infeasible, "case {case}"),
                Some((_, reference)) => {
                    assert_eq!(sol.status, BbStatus::Optimal, "case {case}");
                    assert!(
                        (sol.objective - reference).abs() < 1e-7,
                        "case {case}: bb {} vs brute force {reference}",
                        sol.objective
                    );
                    assert!(
                        model.is_feasible(&sol.values, 1e-6),
                        "case {case}: infeasible incumbent"
                    );
                }
            }
        }
    }

    #[test]
    fn mixed_model_optimizes_continuous_part() {
        // max 5 z0 + 4 z1 + x with x <= 2 z0 (x in [0, 10]), z0 + z1 <= 1.
        // Best: z0 = 1, x = 2 -> 7 over z1's 4.
        let mut model = MilpModel::new(ObjSense::Maximize);
        let z0 = model.add_binary(VarTag::Claim { t: 0 });
        let z1 = model.add_binary(VarTag::Claim { t: 1 });
        let x = model.add_continuous(VarTag::TrxPower { s: 0 }, 0.0, 10.0);
        model
            .add_row(LinearConstraint {
                terms: vec![(x, 1.0), (z0, -2.0)],
                sense: RowSense::Le,
                rhs: 0.0,
                tag: RowTag::Cut { round: 0 },
                indicator: None,
            })
            .unwrap();
        model
            .add_row(LinearConstraint {
                terms: vec![(z0, 1.0), (z1, 1.0)],
                sense: RowSense::Le,
                rhs: 1.0,
                tag: RowTag::Cut { round: 1 },
                indicator: None,
            })
            .unwrap();
        model
            .set_objective(vec![(z0, 5.0), (z1, 4.0), (x, 1.0)])
            .unwrap();
        let sol = bb_solve(&model, BbOptions::default(), None).expect("solves");
        assert_eq!(sol.status, BbStatus::Optimal);
        assert!((sol.objective - 7.0).abs() < 1e-7, "got {}", sol.objective);
        assert!((sol.values[x] - 2.0).abs() < 1e-6);
        assert!((sol.values[z0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_binary_program_is_detected() {
        let model = binary_model(
            &[1.0, 1.0],
            vec![
                (vec![1.0, 1.0], RowSense::Ge, 3.0), // impossible for two binaries
            ],
        );
        let sol = bb_solve(&model, BbOptions::default(), None).expect("terminates");
        assert_eq!(sol.status, BbStatus::Infeasible);
        assert!(sol.values.is_empty());
    }

    #[test]
    fn node_limit_reports_budget_exhaustion_with_valid_bound() {
        // Capacity 8 leaves the relaxation fractional at the root, so a
        // one-node budget cannot prove optimality.
        let model = binary_model(
            &[10.0, 13.0, 7.0, 11.0, 4.0, 9.0, 6.0],
            vec![(vec![3.0, 4.0, 2.0, 3.0, 1.0, 3.0, 2.0], RowSense::Le, 8.0)],
        );
        let options = BbOptions {
            node_limit: Some(1),
            root_rounding: false,
            ..BbOptions::default()
        };
        let sol = bb_solve(&model, options, None).expect("terminates");
        assert_eq!(sol.status, BbStatus::BudgetExhausted);
        let (_, reference) = brute_force(&model).expect("feasible");
        assert!(
            sol.best_bound >= reference - 1e-7,
            "bound {} below optimum {reference}",
            sol.best_bound
        );
    }

    #[test]
    fn probing_fixes_forced_binaries_before_branching() {
        // x0 + x1 >= 2 forces both variables to one; the root relaxation is
        // already integral and the search finishes in a single node.
        let model = binary_model(
            &[-1.0, -1.0, 5.0],
            vec![(vec![1.0, 1.0, 0.0], RowSense::Ge, 2.0)],
        );
        let sol = bb_solve(&model, BbOptions::default(), None).expect("solves");
        assert_eq!(sol.status, BbStatus::Optimal);
        assert_eq!(sol.nodes, 1);
        assert!(sol.values[0] > 0.5 && sol.values[1] > 0.5);
        assert!((sol.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn probing_detects_unsatisfiable_rows_without_search() {
        let model = binary_model(&[1.0, 1.0], vec![(vec![1.0, 1.0], RowSense::Ge, 3.0)]);
        let sol = bb_solve(&model, BbOptions::default(), None).expect("terminates");
        assert_eq!(sol.status, BbStatus::Infeasible);
        assert_eq!(sol.nodes, 0);
        assert!(sol.values.is_empty());
    }

    #[test]
    fn integral_objective_prunes_unit_gaps_and_stays_exact() {
        // LP optimum 2.5 vs integer optimum 2: with a seeded incumbent and
        // the integrality declaration, the root bound is already conclusive.
        let model = binary_model(
            &[1.0, 1.0, 1.0],
            vec![(vec![2.0, 2.0, 2.0], RowSense::Le, 5.0)],
        );
        let options = BbOptions {
            integral_objective: true,
            initial_incumbent: Some(vec![1.0, 1.0, 0.0]),
            ..BbOptions::default()
        };
        let sol = bb_solve(&model, options, None).expect("solves");
        assert_eq!(sol.status, BbStatus::Optimal);
        assert_eq!(sol.nodes, 1, "unit-gap root should be pruned immediately");
        assert!((sol.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn integral_objective_matches_plain_search_on_random_count_models() {
        let mut state = 0xD1B54A32D192ED03u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for case in 0..30 {
            let n = 3 + (next() * 6.0) as usize;
            let objective = vec![1.0; n];
            let coeffs: Vec<f64> = (0..n).map(|_| 1.0 + (next() * 5.0).round()).collect();
            let rhs = (coeffs.iter().sum::<f64>() * (0.2 + 0.5 * next())).round();
            let model = binary_model(&objective, vec![(coeffs, RowSense::Le, rhs)]);
            let plain = bb_solve(&model, BbOptions::default(), None)
                .unwrap_or_else(|e| panic!("case {case}: {e}"));
            let floored = bb_solve(
                &model,
                BbOptions {
                    integral_objective: true,
                    ..BbOptions::default()
                },
                None,
            )
            .unwrap_or_else(|e| panic!("case {case}: {e}"));
            assert_eq!(plain.status, floored.status, "case {case}");
            if plain.status == BbStatus::Optimal {
                assert!(
                    (plain.objective - floored.objective).abs() < 1e-9,
                    "case {case}: {} vs {}",
                    plain.objective,
                    floored.objective
                );
            }
        }
    }

    #[test]
    fn relative_gap_accepts_near_optimal_incumbents() {
        let model = binary_model(
            &[10.0, 13.0, 7.0, 11.0, 4.0],
            vec![(vec![3.0, 4.0, 2.0, 3.0, 1.0], RowSense::Le, 7.0)],
        );
        let options = BbOptions {
            relative_gap: 0.5,
            ..BbOptions::default()
        };
        let sol = bb_solve(&model, options, None).expect("solves");
        assert_eq!(sol.status, BbStatus::Optimal);
        let (_, reference) = brute_force(&model).expect("feasible");
        assert!(sol.objective >= reference * 0.5 - 1e-9);
        assert!(sol.best_bound >= reference - 1e-7);
    }

    #[test]
    fn callback_cut_redirects_the_search() {
        // Cutting every candidate that selects item 0 forces the runner-up.
        let model = binary_model(
            &[10.0, 6.0, 5.0],
            vec![(vec![2.0, 2.0, 2.0], RowSense::Le, 4.0)],
        );
        let mut calls = 0usize;
        let mut callback = |values: &[f64], _obj: f64| {
            calls += 1;
            if values[0] > 0.5 {
                Ok(CandidateDecision::Cut(vec![LinearConstraint {
                    terms: vec![(0, 1.0)],
                    sense: RowSense::Le,
                    rhs: 0.0,
                    tag: RowTag::Cut { round: 0 },
                    indicator: None,
                }]))
            } else {
                Ok(CandidateDecision::Accept)
            }
        };
        let sol = bb_solve(
            &model,
            BbOptions::default(),
            Some(&mut callback as &mut CandidateCallback<'_>),
        )
        .expect("solves");
        assert_eq!(sol.status, BbStatus::Optimal);
        assert!(sol.values[0] < 0.5, "item 0 should be cut away");
        assert!((sol.objective - 11.0).abs() < 1e-7, "got {}", sol.objective);
        assert!(!sol.cuts.is_empty());
        assert!(calls >= 2);
    }

    #[test]
    fn cut_invalidating_the_incumbent_restarts_the_search() {
        // Objective 2 z0 + z1 + 4 z2 with z1 + z2 <= 1 and 2 z0 + z2 <= 2.
        // Candidate order is (1,1,0) then (0,0,1); the second candidate's
        // cut z1 + z2 <= 0 excludes both it and the stored incumbent, so
        // the search must restart and land on (1,0,0).
        let model = binary_model(
            &[2.0, 1.0, 4.0],
            vec![
                (vec![0.0, 1.0, 1.0], RowSense::Le, 1.0),
                (vec![2.0, 0.0, 1.0], RowSense::Le, 2.0),
            ],
        );
        let mut calls = 0usize;
        let mut callback = |_values: &[f64], _obj: f64| {
            calls += 1;
            if calls == 2 {
                Ok(CandidateDecision::Cut(vec![LinearConstraint {
                    terms: vec![(1, 1.0), (2, 1.0)],
                    sense: RowSense::Le,
                    rhs: 0.0,
                    tag: RowTag::Cut { round: 0 },
                    indicator: None,
                }]))
            } else {
                Ok(CandidateDecision::Accept)
            }
        };
        let options = BbOptions {
            root_rounding: false,
            ..BbOptions::default()
        };
        let sol = bb_solve(
            &model,
            options,
            Some(&mut callback as &mut CandidateCallback<'_>),
        )
        .expect("solves");
        assert_eq!(sol.status, BbStatus::Optimal);
        assert_eq!(sol.cuts.len(), 1);
        assert!(calls >= 3, "restart should re-visit candidates: {calls} calls");
        assert!((sol.objective - 2.0).abs() < 1e-7, "got {}", sol.objective);
        assert!(sol.values[1] < 0.5 && sol.values[2] < 0.5);
        assert!(
            sol.cuts.iter().all(|c| c.satisfied(&sol.values, 1e-9)),
            "final incumbent must satisfy every issued cut"
        );
    }

    #[test]
    fn callback_cut_that_keeps_its_candidate_is_rejected() {
        let model = binary_model(&[3.0, 2.0], vec![(vec![1.0, 1.0], RowSense::Le, 2.0)]);
        let mut callback = |_values: &[f64], _obj: f64| {
            Ok(CandidateDecision::Cut(vec![LinearConstraint {
                terms: vec![(0, 1.0), (1, 1.0)],
                sense: RowSense::Le,
                rhs: 5.0, // vacuous: excludes nothing
                tag: RowTag::Cut { round: 0 },
                indicator: None,
            }]))
        };
        let err = bb_solve(
            &model,
            BbOptions::default(),
            Some(&mut callback as &mut CandidateCallback<'_>),
        )
        .expect_err("must refuse non-separating cut");
        assert!(matches!(err, SolveError::Callback(_)));
    }

    #[test]
    fn lp_relaxation_reports_duality_consistent_values() {
        let model = binary_model(
            &[10.0, 13.0, 7.0],
            vec![(vec![3.0, 4.0, 2.0], RowSense::Le, 5.0)],
        );
        let lp = lp_relaxation(&model).expect("solves");
        assert_eq!(lp.status, RelaxationStatus::Optimal);
        assert!(lp.objective > 13.0, "relaxation beats integral points");
        let dual_side: f64 = lp
            .duals
            .iter()
            .zip(model.rows())
            .map(|(y, r)| y * r.rhs)
            .sum::<f64>()
            + lp
                .reduced_costs
                .iter()
                .zip(&lp.values)
                .map(|(d, x)| d * x)
                .sum::<f64>();
        assert!(
            (lp.objective - dual_side).abs() < 1e-7,
            "duality identity: {} vs {dual_side}",
            lp.objective
        );
    }

    #[test]
    fn minimize_orientation_round_trips() {
        let mut model = MilpModel::new(ObjSense::Minimize);
        let z0 = model.add_binary(VarTag::Claim { t: 0 });
        let z1 = model.add_binary(VarTag::Claim { t: 1 });
        model
            .add_row(LinearConstraint {
                terms: vec![(z0, 1.0), (z1, 1.0)],
                sense: RowSense::Ge,
                rhs: 1.0,
                tag: RowTag::Cut { round: 0 },
                indicator: None,
            })
            .unwrap();
        model.set_objective(vec![(z0, 3.0), (z1, 5.0)]).unwrap();
        let sol = bb_solve(&model, BbOptions::default(), None).expect("solves");
        assert_eq!(sol.status, BbStatus::Optimal);
        assert!((sol.objective - 3.0).abs() < 1e-9);
        assert!((sol.values[z0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn determinism_across_repeat_solves() {
        let model = binary_model(
            &[10.0, 13.0, 7.0, 11.0, 4.0, 3.5],
            vec![
                (vec![3.0, 4.0, 2.0, 3.0, 1.0, 2.0], RowSense::Le, 8.0),
                (vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0], RowSense::Le, 2.0),
            ],
        );
        let a = bb_solve(&model, BbOptions::default(), None).expect("solves");
        let b = bb_solve(&model, BbOptions::default(), None).expect("solves");
        assert_eq!(a.values, b.values);
        assert_eq!(a.nodes, b.nodes);
        assert!((a.objective - b.objective).abs() == 0.0);
    }
}
