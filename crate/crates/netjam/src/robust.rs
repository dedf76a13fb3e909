//! Robust jammer placement under multiband balance uncertainty.
//!
//! The balance estimate of each served testpoint may deviate from its
//! nominal value. A [`MultibandSet`] discretizes that uncertainty into
//! per-testpoint deviation bands (negative and positive) plus a null band,
//! with global cardinality bounds on how many testpoints may occupy each
//! band at once. [`plan_jamming`] computes a nominal placement and a robust
//! placement for the same instance: the robust solve runs a cutting-plane
//! loop in which every improving placement candidate is challenged by the
//! adversarial separation problem ([`separate`]), and candidates whose
//! claimed testpoints can be denied are rejected with scenario-survival
//! cuts built from the adversary's deviation assignment. [`audit_robust`]
//! independently re-verifies the final plan against the whole uncertainty
//! set.

use crate::formulate::{
    big_m_njp, build_njp, build_sep, build_spap, FormulateError, LinearConstraint, NjpMode,
    NjpModel, RowSense, RowTag, SepModel, SepScope, SEP_STRICTNESS_TAU_MW,
};
use crate::milp::{
    bb_solve, lp_relaxation, BbOptions, BbStatus, CandidateCallback, CandidateDecision,
    RelaxationStatus, SolveError, CANDIDATE_TOL,
};
use crate::netmodel::{
    db_to_linear, is_jammed, jam_power, linear_to_db, JammingInstance, ModelError, NetworkDesign,
    NetworkInstance,
};
use std::time::{Duration, Instant};
use thiserror::Error;

/// Exhaustive audits switch to the separation solver above this many band
/// assignments.
pub const AUDIT_ENUMERATION_LIMIT: u128 = 1_000_000;

/// Errors raised by the robust planning layer.
#[derive(Debug, Error)]
pub enum RobustError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Formulate(#[from] FormulateError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("invalid uncertainty set: {0}")]
    InvalidBands(String),
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("robust audit failed: {0}")]
    AuditFailed(String),
}

// ---------------------------------------------------------------------------
// Multiband uncertainty set
// ---------------------------------------------------------------------------

/// Cardinality bounds per band, supplied to [`MultibandSet::from_thresholds`].
#[derive(Debug, Clone)]
pub enum BandBounds {
    /// Every nonzero band gets `[lower, upper]`; the null band gets
    /// `[0, n_tps]`.
    Uniform { lower: usize, upper: usize },
    /// Explicit bounds for bands `-k_neg ..= k_pos` in ascending band
    /// order (null band included).
    Explicit { lower: Vec<usize>, upper: Vec<usize> },
}

/// A multiband uncertainty set over per-testpoint balance deviations.
///
/// Every testpoint owns one strictly increasing ladder of deviation
/// thresholds (in mW, negative bands below zero, positive above), and each
/// band `k` carries global cardinality bounds `lower(k) <= count(k) <=
/// upper(k)` over the testpoints simultaneously assigned to it. The null
/// band (no deviation) always admits every testpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct MultibandSet {
    /// `thresholds[t]` has `k_neg + k_pos` entries, ascending, the first
    /// `k_neg` negative and the rest positive.
    thresholds: Vec<Vec<f64>>,
    k_neg: usize,
    k_pos: usize,
    /// Bounds indexed by `k + k_neg` for `k` in `-k_neg ..= k_pos`.
    lower: Vec<usize>,
    upper: Vec<usize>,
}

impl MultibandSet {
    /// Validates and builds a set from explicit per-testpoint thresholds.
    pub fn from_thresholds(
        thresholds: Vec<Vec<f64>>,
        k_neg: usize,
        k_pos: usize,
        bounds: BandBounds,
        n_tps: usize,
    ) -> Result<Self, RobustError> {
        if k_neg == 0 || k_pos == 0 {
            return Err(RobustError::InvalidBands(
                "need at least one negative and one positive band".into(),
            ));
        }
        if thresholds.len() != n_tps {
            return Err(RobustError::InvalidBands(format!(
                "threshold ladders for {} testpoints, expected {n_tps}",
                thresholds.len()
            )));
        }
        for (t, ladder) in thresholds.iter().enumerate() {
            if ladder.len() != k_neg + k_pos {
                return Err(RobustError::InvalidBands(format!(
                    "testpoint {t} has {} thresholds, expected {}",
                    ladder.len(),
                    k_neg + k_pos
                )));
            }
            for w in ladder.windows(2) {
                if !(w[0] < w[1]) {
                    return Err(RobustError::InvalidBands(format!(
                        "testpoint {t} thresholds are not strictly increasing"
                    )));
                }
            }
            if ladder[k_neg - 1] >= 0.0 || ladder[k_neg] <= 0.0 {
                return Err(RobustError::InvalidBands(format!(
                    "testpoint {t} thresholds must straddle zero"
                )));
            }
            if ladder.iter().any(|d| !d.is_finite()) {
                return Err(RobustError::InvalidBands(format!(
                    "testpoint {t} has a non-finite threshold"
                )));
            }
        }
        let n_bands = k_neg + 1 + k_pos;
        let (lower, upper) = match bounds {
            BandBounds::Uniform { lower, upper } => {
                let mut lo = vec![lower; n_bands];
                let mut up = vec![upper; n_bands];
                lo[k_neg] = 0;
                up[k_neg] = n_tps;
                (lo, up)
            }
            BandBounds::Explicit { lower, upper } => (lower, upper),
        };
        if lower.len() != n_bands || upper.len() != n_bands {
            return Err(RobustError::InvalidBands(format!(
                "bound vectors must cover {n_bands} bands"
            )));
        }
        if upper[k_neg] != n_tps {
            return Err(RobustError::InvalidBands(format!(
                "null band upper bound must equal the testpoint count {n_tps}"
            )));
        }
        for (k, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if l > u {
                return Err(RobustError::InvalidBands(format!(
                    "band {} has lower bound {l} above upper bound {u}",
                    k as i64 - k_neg as i64
                )));
            }
            if u > n_tps {
                return Err(RobustError::InvalidBands(format!(
                    "band {} upper bound {u} exceeds testpoint count {n_tps}",
                    k as i64 - k_neg as i64
                )));
            }
        }
        if lower.iter().sum::<usize>() > n_tps {
            return Err(RobustError::InvalidBands(
                "band lower bounds demand more testpoints than exist".into(),
            ));
        }
        Ok(MultibandSet {
            thresholds,
            k_neg,
            k_pos,
            lower,
            upper,
        })
    }

    /// Default cardinality bounds: nonzero bands capped at
    /// `ceil(n_tps / (k_neg + k_pos))` with no lower demands.
    pub fn default_bounds(n_tps: usize, k_neg: usize, k_pos: usize) -> BandBounds {
        let cap = n_tps.div_ceil(k_neg + k_pos);
        BandBounds::Uniform {
            lower: 0,
            upper: cap,
        }
    }

    pub fn n_tps(&self) -> usize {
        self.thresholds.len()
    }

    pub fn k_neg(&self) -> usize {
        self.k_neg
    }

    pub fn k_pos(&self) -> usize {
        self.k_pos
    }

    /// Nonzero band labels in ascending order: `-k_neg ..= -1, 1 ..= k_pos`.
    pub fn nonzero_bands(&self) -> Vec<i32> {
        (-(self.k_neg as i32)..=self.k_pos as i32)
            .filter(|&k| k != 0)
            .collect()
    }

    fn slot(&self, band: i32) -> usize {
        debug_assert!(band != 0);
        if band < 0 {
            (band + self.k_neg as i32) as usize
        } else {
            self.k_neg + band as usize - 1
        }
    }

    /// Deviation threshold of `t` in nonzero band `band`, in mW.
    pub fn threshold(&self, t: usize, band: i32) -> f64 {
        self.thresholds[t][self.slot(band)]
    }

    /// Lower cardinality bound of `band` (null band allowed).
    pub fn lower_bound(&self, band: i32) -> usize {
        self.lower[(band + self.k_neg as i32) as usize]
    }

    /// Upper cardinality bound of `band` (null band allowed).
    pub fn upper_bound(&self, band: i32) -> usize {
        self.upper[(band + self.k_neg as i32) as usize]
    }

    /// Largest positive deviation of `t`, in mW.
    pub fn worst_positive(&self, t: usize) -> f64 {
        self.threshold(t, self.k_pos as i32)
    }

    /// Most negative deviation of `t`, in mW.
    pub fn most_negative(&self, t: usize) -> f64 {
        self.threshold(t, -(self.k_neg as i32))
    }
}

/// Builds per-testpoint deviation thresholds from nominal balances.
///
/// Band edges sit at `g ± |g| * fraction * (j / side_count)` decibels, where
/// `g` is the balance in dBmW; thresholds are the linear-domain differences
/// from the nominal balance, so negative bands shrink the balance and
/// positive bands grow it. Balances must be strictly positive and away from
/// exactly one milliwatt (where the decibel magnitude vanishes and the band
/// edges collapse).
pub fn make_bands(
    balances_mw: &[f64],
    fraction: f64,
    k_neg: usize,
    k_pos: usize,
    bounds: Option<BandBounds>,
) -> Result<MultibandSet, RobustError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(RobustError::InvalidBands(format!(
            "band fraction must lie in (0, 1], got {fraction}"
        )));
    }
    if k_neg == 0 || k_pos == 0 {
        return Err(RobustError::InvalidBands(
            "need at least one negative and one positive band".into(),
        ));
    }
    let mut thresholds = Vec::with_capacity(balances_mw.len());
    for (t, &bal) in balances_mw.iter().enumerate() {
        if !(bal > 0.0) || !bal.is_finite() {
            return Err(RobustError::InvalidBands(format!(
                "testpoint {t} balance {bal} mW is not positive"
            )));
        }
        let g = linear_to_db(bal)?;
        let spread = g.abs() * fraction;
        if spread <= 0.0 {
            return Err(RobustError::InvalidBands(format!(
                "testpoint {t} balance sits at 0 dBmW; band edges collapse"
            )));
        }
        let mut ladder = Vec::with_capacity(k_neg + k_pos);
        for j in (1..=k_neg).rev() {
            let edge_db = g - spread * (j as f64 / k_neg as f64);
            ladder.push(db_to_linear(edge_db) - bal);
        }
        for j in 1..=k_pos {
            let edge_db = g + spread * (j as f64 / k_pos as f64);
            ladder.push(db_to_linear(edge_db) - bal);
        }
        thresholds.push(ladder);
    }
    let n_tps = balances_mw.len();
    let bounds = bounds.unwrap_or_else(|| MultibandSet::default_bounds(n_tps, k_neg, k_pos));
    MultibandSet::from_thresholds(thresholds, k_neg, k_pos, bounds, n_tps)
}

// ---------------------------------------------------------------------------
// Separation
// ---------------------------------------------------------------------------

/// Adversary's answer to an incumbent placement.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationOutcome {
    /// Number of denied testpoints (the adversary's objective).
    pub value: usize,
    /// Instance indices of the denied testpoints, ascending.
    pub denied: Vec<usize>,
    /// Chosen deviation band per instance testpoint (`None` = null band).
    pub deviations: Vec<Option<i32>>,
}

/// Builds a feasible adversary assignment greedily: testpoints with the
/// fewest denying bands pick first, each taking the weakest denying band
/// with remaining capacity; unmet band lower bounds are then filled with
/// leftover testpoints. Returns `None` when the fills cannot be completed.
fn greedy_adversary(
    sep: &SepModel,
    activation: &[Option<usize>],
    ji: &JammingInstance,
    mb: &MultibandSet,
) -> Result<Option<Vec<f64>>, RobustError> {
    let bands = mb.nonzero_bands();
    let n_scope = sep.scope_tps.len();
    let mut jams = Vec::with_capacity(n_scope);
    for &t in &sep.scope_tps {
        jams.push(jam_power(t, activation, ji)?);
    }
    let denies_at = |i: usize, dev: f64| {
        let t = sep.scope_tps[i];
        denies(dev, jams[i], ji.nominal_balance_mw(t), ji.epsilon_mw())
    };
    // Thresholds increase with the band index, so each testpoint's denying
    // bands form a suffix of the ladder starting at the first denying band.
    let first_denying: Vec<Option<usize>> = (0..n_scope)
        .map(|i| {
            let t = sep.scope_tps[i];
            (0..bands.len()).find(|&b| denies_at(i, mb.threshold(t, bands[b])))
        })
        .collect();
    let mut capacity: Vec<usize> = bands.iter().map(|&k| mb.upper_bound(k)).collect();
    let mut dev_budget = n_scope - mb.lower_bound(0).min(n_scope);
    let mut assigned: Vec<Option<usize>> = vec![None; n_scope];
    // Null-denied testpoints need no band; the rest queue up hardest-first.
    let mut order: Vec<usize> = (0..n_scope)
        .filter(|&i| first_denying[i].is_some() && !denies_at(i, 0.0))
        .collect();
    order.sort_by(|&a, &b| first_denying[b].cmp(&first_denying[a]).then(a.cmp(&b)));
    for &i in &order {
        if dev_budget == 0 {
            break;
        }
        let lo = first_denying[i].expect("queued testpoints have a denying band");
        if let Some(b) = (lo..bands.len()).find(|&b| capacity[b] > 0) {
            assigned[i] = Some(b);
            capacity[b] -= 1;
            dev_budget -= 1;
        }
    }
    for (b, &k) in bands.iter().enumerate() {
        let lower = mb.lower_bound(k).min(n_scope);
        let mut have = assigned.iter().filter(|a| **a == Some(b)).count();
        for i in 0..n_scope {
            if have >= lower {
                break;
            }
            if assigned[i].is_none() && capacity[b] > 0 && dev_budget > 0 {
                assigned[i] = Some(b);
                capacity[b] -= 1;
                dev_budget -= 1;
                have += 1;
            }
        }
        if have < lower {
            return Ok(None);
        }
    }
    let mut values = vec![0.0; sep.model.n_vars()];
    for i in 0..n_scope {
        let t = sep.scope_tps[i];
        let dev = match assigned[i] {
            Some(b) => {
                values[sep.dev_var[i][b]] = 1.0;
                mb.threshold(t, bands[b])
            }
            None => 0.0,
        };
        if denies_at(i, dev) {
            values[sep.deny_var[i]] = 1.0;
        }
    }
    Ok(Some(values))
}

/// Solves the adversarial separation problem: given a placement and its
/// claimed testpoints, find the deviation assignment inside the uncertainty
/// set that denies as many in-scope testpoints as possible. An infeasible
/// separation model (over-constrained band bounds) counts as "no denial".
pub fn separate(
    activation: &[Option<usize>],
    claimed: &[bool],
    ji: &JammingInstance,
    mb: &MultibandSet,
    scope: SepScope,
) -> Result<SeparationOutcome, RobustError> {
    let sep = build_sep(activation, claimed, ji, mb, scope)?;
    let none = SeparationOutcome {
        value: 0,
        denied: Vec::new(),
        deviations: vec![None; ji.n_tps()],
    };
    if sep.scope_tps.is_empty() {
        return Ok(none);
    }
    let options = BbOptions {
        integral_objective: true,
        initial_incumbent: greedy_adversary(&sep, activation, ji, mb)?,
        ..BbOptions::default()
    };
    let solution = bb_solve(&sep.model, options, None)?;
    if solution.status != BbStatus::Optimal {
        return Ok(none);
    }
    let bands = mb.nonzero_bands();
    let mut denied = Vec::new();
    let mut deviations = vec![None; ji.n_tps()];
    for (i, &t) in sep.scope_tps.iter().enumerate() {
        if solution.values[sep.deny_var[i]] > 0.5 {
            denied.push(t);
        }
        for (b, &k) in bands.iter().enumerate() {
            if solution.values[sep.dev_var[i][b]] > 0.5 {
                deviations[t] = Some(k);
            }
        }
    }
    Ok(SeparationOutcome {
        value: denied.len(),
        denied,
        deviations,
    })
}

// ---------------------------------------------------------------------------
// Audit
// ---------------------------------------------------------------------------

/// Whether deviation `dev` denies testpoint `t` against `jam` milliwatts of
/// jamming power. This is the one authoritative denial predicate; the
/// separation model encodes exactly this inequality.
fn denies(dev: f64, jam: f64, nominal_balance: f64, epsilon: f64) -> bool {
    dev >= jam - nominal_balance - epsilon + SEP_STRICTNESS_TAU_MW
}

/// Independently verifies that no deviation assignment in the uncertainty
/// set denies any claimed testpoint.
///
/// Small claim sets are checked by exhaustive enumeration of band
/// assignments (respecting the cardinality bounds); larger ones fall back to
/// solving the separation problem. Both routes share the same denial
/// predicate, so they agree wherever both apply.
pub fn audit_robust(
    activation: &[Option<usize>],
    claimed: &[bool],
    ji: &JammingInstance,
    mb: &MultibandSet,
) -> Result<bool, RobustError> {
    if claimed.len() != ji.n_tps() {
        return Err(RobustError::InvalidBands(format!(
            "claim vector covers {} testpoints, instance has {}",
            claimed.len(),
            ji.n_tps()
        )));
    }
    let members: Vec<usize> = (0..ji.n_tps()).filter(|&t| claimed[t]).collect();
    if members.is_empty() {
        return Ok(true);
    }
    let n_bands = mb.k_neg() + 1 + mb.k_pos();
    let assignments = (n_bands as u128)
        .checked_pow(members.len() as u32)
        .unwrap_or(u128::MAX);
    if assignments > AUDIT_ENUMERATION_LIMIT {
        let outcome = separate(activation, claimed, ji, mb, SepScope::ClaimedOnly)?;
        return Ok(outcome.value == 0);
    }

    // Bands in digit order: null first, then nonzero bands ascending.
    let bands: Vec<Option<i32>> = std::iter::once(None)
        .chain(mb.nonzero_bands().into_iter().map(Some))
        .collect();
    let jams: Vec<f64> = members
        .iter()
        .map(|&t| jam_power(t, activation, ji))
        .collect::<Result<_, _>>()?;

    let mut counts = vec![0usize; n_bands];
    for code in 0..assignments {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut rest = code;
        let mut denial = false;
        for (i, &t) in members.iter().enumerate() {
            let digit = (rest % n_bands as u128) as usize;
            rest /= n_bands as u128;
            counts[digit] += 1;
            if let Some(band) = bands[digit] {
                if denies(
                    mb.threshold(t, band),
                    jams[i],
                    ji.nominal_balance_mw(t),
                    ji.epsilon_mw(),
                ) {
                    denial = true;
                }
            }
        }
        if !denial {
            continue;
        }
        // Deviations outside the cardinality bounds are not real scenarios.
        // The bounds are applied to the claim set exactly as the separation
        // model applies them to its scope: lower bounds clamp to the set
        // size, band by band.
        let valid = bands.iter().enumerate().all(|(digit, band)| {
            let k = band.unwrap_or(0);
            counts[digit] >= mb.lower_bound(k).min(members.len())
                && counts[digit] <= mb.upper_bound(k)
        });
        if valid {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

/// A jammer placement: per-site device choice and the claimed testpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct JamPlan {
    /// Installed typology per site (`None` = no device).
    pub activation: Vec<Option<usize>>,
    /// Claimed (defeated) testpoints.
    pub claimed: Vec<bool>,
    /// Total profit of the claimed testpoints.
    pub profit: f64,
    /// Total installation cost.
    pub cost: f64,
}

impl JamPlan {
    pub fn claim_count(&self) -> usize {
        self.claimed.iter().filter(|&&c| c).count()
    }
}

/// One cutting-plane round of the robust solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CutRecord {
    /// Cut index in issue order.
    pub round: usize,
    /// Adversary objective against the rejected candidate.
    pub adversary_value: usize,
    /// Testpoints the adversary denied.
    pub denied: Vec<usize>,
}

/// Options shared by the nominal and robust placement solves.
#[derive(Debug, Clone, Default)]
pub struct PlanOptions {
    pub bb: BbOptions,
    pub scope: SepScope,
}

/// Nominal and robust placements for one instance, with the cut log.
#[derive(Debug, Clone)]
pub struct RobustRunReport {
    pub nominal: JamPlan,
    pub robust: JamPlan,
    pub cuts: Vec<CutRecord>,
    pub nominal_status: BbStatus,
    pub robust_status: BbStatus,
    /// Wall-clock time of the full run (both solves and audits).
    pub wall: Duration,
    /// Relative change of the claimed-testpoint count from nominal to
    /// robust, in percent; `None` when the nominal plan claims nothing.
    pub price_of_robustness_pct: Option<f64>,
}

fn extract_plan(ji: &JammingInstance, njp: &NjpModel, values: &[f64]) -> JamPlan {
    let claimed: Vec<bool> = (0..ji.n_tps())
        .map(|t| values[njp.claim_var[t]] > 0.5)
        .collect();
    let activation: Vec<Option<usize>> = (0..ji.n_sites())
        .map(|j| (0..ji.n_typologies()).find(|&m| values[njp.device_var[j][m]] > 0.5))
        .collect();
    finish_plan(ji, activation, claimed)
}

fn finish_plan(ji: &JammingInstance, activation: Vec<Option<usize>>, claimed: Vec<bool>) -> JamPlan {
    let profit = (0..ji.n_tps())
        .filter(|&t| claimed[t])
        .map(|t| ji.profit(t))
        .sum();
    let cost = ji.activation_cost(&activation);
    JamPlan {
        activation,
        claimed,
        profit,
        cost,
    }
}

fn empty_plan(ji: &JammingInstance) -> JamPlan {
    finish_plan(ji, vec![None; ji.n_sites()], vec![false; ji.n_tps()])
}

/// Whether every claimed testpoint is jammed by `activation` at nominal
/// balances.
fn keeps_nominal_claims(
    activation: &[Option<usize>],
    claimed: &[bool],
    ji: &JammingInstance,
) -> Result<bool, RobustError> {
    for t in 0..ji.n_tps() {
        if claimed[t] && !is_jammed(t, activation, ji.nominal_balance_mw(t), ji)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Greedy cost-dominance trim: repeatedly deactivate sites or downgrade
/// typologies (cheapest alternative first, ascending site order) while the
/// supplied criterion keeps holding. Deterministic, cost strictly decreases
/// with every accepted change, and the claimed set never changes.
fn trim_activation(
    ji: &JammingInstance,
    activation: &[Option<usize>],
    mut keep: impl FnMut(&[Option<usize>]) -> Result<bool, RobustError>,
) -> Result<Vec<Option<usize>>, RobustError> {
    let mut current = activation.to_vec();
    loop {
        let mut changed = false;
        for j in 0..ji.n_sites() {
            let Some(installed) = current[j] else { continue };
            let alternatives = std::iter::once(None).chain((0..installed).map(Some));
            for alt in alternatives {
                let mut trial = current.clone();
                trial[j] = alt;
                if keep(&trial)? {
                    current = trial;
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            return Ok(current);
        }
    }
}

/// Served revenue of a design on its instance.
fn design_revenue(net: &NetworkInstance, design: &NetworkDesign) -> f64 {
    design
        .served()
        .iter()
        .map(|&t| net.testpoints()[t].revenue)
        .sum()
}

/// Deterministic power-control heuristic. Interference, not reach, limits
/// dense networks — the saturated profile is usually a poor local optimum —
/// so this builds up from silence: steepest-ascent coordinate search that
/// repeatedly applies the single best (transceiver, ladder level) move until
/// no move improves revenue under greedy assignment. The returned design is
/// the revenue-best of that endpoint and the saturated profile.
fn descend_powers(net: &NetworkInstance) -> Result<NetworkDesign, ModelError> {
    let cap = net.p_trx_max_mw();
    let ladder = [0.0, cap / 27.0, cap / 9.0, cap / 3.0, cap];
    let mut powers = vec![0.0; net.n_trxs()];
    let mut best = NetworkDesign::greedy_from_powers(net, powers.clone())?;
    let mut best_revenue = design_revenue(net, &best);

    // Forward selection: greedily take the most valuable single move.
    loop {
        let mut move_found: Option<(usize, f64, NetworkDesign, f64)> = None;
        for s in 0..net.n_trxs() {
            let current = powers[s];
            for &level in ladder.iter().filter(|&&l| l != current) {
                powers[s] = level;
                let trial = NetworkDesign::greedy_from_powers(net, powers.clone())?;
                let revenue = design_revenue(net, &trial);
                if revenue > best_revenue + 1e-9
                    && move_found.as_ref().map_or(true, |(_, _, _, r)| revenue > *r)
                {
                    move_found = Some((s, level, trial, revenue));
                }
            }
            powers[s] = current;
        }
        match move_found {
            Some((s, level, trial, revenue)) => {
                powers[s] = level;
                best = trial;
                best_revenue = revenue;
            }
            None => break,
        }
    }

    let saturated = NetworkDesign::saturated(net)?;
    if design_revenue(net, &saturated) > best_revenue {
        return Ok(saturated);
    }
    Ok(best)
}

/// Solves the coverage-design stage: a heuristic design seeds
/// branch-and-bound on the design model as a warm start, and the search
/// improves on it within its budget.
///
/// The heuristic is the revenue-best of the saturated design, a power-ladder
/// coordinate descent, and a greedy assignment under the root-relaxation
/// power profile. The returned status reflects the search
/// ([`BbStatus::BudgetExhausted`] when a node or time limit truncated it);
/// the design itself is always feasible and never worse than the heuristic.
pub fn solve_design(
    net: &NetworkInstance,
    options: &BbOptions,
) -> Result<(NetworkDesign, BbStatus), RobustError> {
    let spap = build_spap(net)?;
    let mut heuristic = descend_powers(net)?;
    let relax = lp_relaxation(&spap.model)?;
    if relax.status == RelaxationStatus::Optimal {
        let powers: Vec<f64> = spap
            .power_var
            .iter()
            .map(|&v| relax.values[v].clamp(0.0, net.p_trx_max_mw()))
            .collect();
        let guided = NetworkDesign::greedy_from_powers(net, powers)?;
        if design_revenue(net, &guided) > design_revenue(net, &heuristic) {
            heuristic = guided;
        }
    }
    let mut bb = options.clone();
    bb.initial_incumbent = Some(spap.warm_start(&heuristic));
    let solution = bb_solve(&spap.model, bb, None)?;
    let design = if solution.values.is_empty() {
        heuristic
    } else {
        let solved = spap.design_from_solution(net, &solution.values)?;
        if design_revenue(net, &solved) >= design_revenue(net, &heuristic) {
            solved
        } else {
            heuristic
        }
    };
    Ok((design, solution.status))
}

/// Nominal claim set of an activation: every testpoint it jams.
fn nominal_claims(
    ji: &JammingInstance,
    activation: &[Option<usize>],
) -> Result<Vec<bool>, RobustError> {
    (0..ji.n_tps())
        .map(|t| Ok(is_jammed(t, activation, ji.nominal_balance_mw(t), ji)?))
        .collect()
}

/// Claims immune to the whole uncertainty set: the jamming power overpowers
/// even the worst positive balance deviation, so no scenario denies them.
fn conservative_claims(
    ji: &JammingInstance,
    mb: &MultibandSet,
    activation: &[Option<usize>],
) -> Result<Vec<bool>, RobustError> {
    (0..ji.n_tps())
        .map(|t| {
            let jam = jam_power(t, activation, ji)?;
            Ok(is_jammed(t, activation, ji.nominal_balance_mw(t), ji)?
                && !denies(
                    mb.worst_positive(t),
                    jam,
                    ji.nominal_balance_mw(t),
                    ji.epsilon_mw(),
                ))
        })
        .collect()
}

/// Deterministic greedy placement: repeatedly applies the single
/// (site, typology) change with the best strict profit gain that fits the
/// budget, ties broken toward the cheaper change and then the lower site
/// index. Used as a branch-and-bound warm start.
fn greedy_activation(ji: &JammingInstance) -> Result<JamPlan, RobustError> {
    greedy_activation_with(ji, nominal_claims)
}

/// [`greedy_activation`] with a caller-chosen claim evaluator, so the same
/// forward selection can target nominal or deviation-immune profit.
fn greedy_activation_with(
    ji: &JammingInstance,
    claims_of: impl Fn(&JammingInstance, &[Option<usize>]) -> Result<Vec<bool>, RobustError>,
) -> Result<JamPlan, RobustError> {
    let mut activation: Vec<Option<usize>> = vec![None; ji.n_sites()];
    let mut profit = 0.0f64;
    let mut cost = 0.0f64;
    loop {
        let mut best: Option<(usize, usize, f64, f64)> = None;
        for j in 0..ji.n_sites() {
            for m in (0..ji.n_typologies()).filter(|&m| activation[j] != Some(m)) {
                let mut trial = activation.clone();
                trial[j] = Some(m);
                let trial_cost = ji.activation_cost(&trial);
                if trial_cost > ji.budget() {
                    continue;
                }
                let claims = claims_of(ji, &trial)?;
                let trial_profit: f64 = (0..ji.n_tps())
                    .filter(|&t| claims[t])
                    .map(|t| ji.profit(t))
                    .sum();
                let gain = trial_profit - profit;
                let cost_delta = trial_cost - cost;
                if gain > 1e-12
                    && best.map_or(true, |(_, _, g, cd)| {
                        gain > g + 1e-12 || (gain > g - 1e-12 && cost_delta < cd - 1e-12)
                    })
                {
                    best = Some((j, m, gain, cost_delta));
                }
            }
        }
        match best {
            Some((j, m, gain, cost_delta)) => {
                activation[j] = Some(m);
                profit += gain;
                cost += cost_delta;
            }
            None => break,
        }
    }
    let claimed = claims_of(ji, &activation)?;
    Ok(finish_plan(ji, activation, claimed))
}

/// Computes the best nominal placement: maximize claimed profit subject to
/// the budget, then trim activation costs without giving up any claim.
pub fn solve_nominal(ji: &JammingInstance, options: &BbOptions) -> Result<(JamPlan, BbStatus), RobustError> {
    let njp = build_njp(ji, NjpMode::Nominal)?;
    let warm = greedy_activation(ji)?;
    let mut bb = options.clone();
    bb.initial_incumbent = Some(njp.warm_start(&warm.activation, &warm.claimed));
    let solution = bb_solve(&njp.model, bb, None)?;
    if solution.values.is_empty() {
        return Ok((empty_plan(ji), solution.status));
    }
    let rough = extract_plan(ji, &njp, &solution.values);
    let activation = trim_activation(ji, &rough.activation, |trial| {
        keeps_nominal_claims(trial, &rough.claimed, ji)
    })?;
    Ok((finish_plan(ji, activation, rough.claimed), solution.status))
}

/// Computes the best robust placement via cutting planes: improving
/// candidates get challenged by [`separate`]; each denied claim spawns a
/// scenario-survival row (overpower the adversary's deviation or drop the
/// claim) and the search continues. The final plan is re-verified with
/// [`audit_robust`] and trimmed under the audit.
pub fn solve_robust(
    ji: &JammingInstance,
    mb: &MultibandSet,
    options: &PlanOptions,
) -> Result<(JamPlan, BbStatus, Vec<CutRecord>), RobustError> {
    if mb.n_tps() != ji.n_tps() {
        return Err(RobustError::InvalidBands(format!(
            "uncertainty set covers {} testpoints, instance has {}",
            mb.n_tps(),
            ji.n_tps()
        )));
    }
    let njp = build_njp(ji, NjpMode::Robust(mb))?;
    // The seed targets deviation-immune profit, so it passes separation and
    // stays an incumbent no matter which cuts arrive later.
    let warm = greedy_activation_with(ji, |ji, act| conservative_claims(ji, mb, act))?;
    let mut records: Vec<CutRecord> = Vec::new();
    let mut sep_failure: Option<RobustError> = None;
    let scope = options.scope;
    let mut callback = |values: &[f64], _obj: f64| -> Result<CandidateDecision, SolveError> {
        let claimed: Vec<bool> = (0..ji.n_tps())
            .map(|t| values[njp.claim_var[t]] > 0.5)
            .collect();
        let activation: Vec<Option<usize>> = (0..ji.n_sites())
            .map(|j| (0..ji.n_typologies()).find(|&m| values[njp.device_var[j][m]] > 0.5))
            .collect();
        let outcome = match separate(&activation, &claimed, ji, mb, scope) {
            Ok(outcome) => outcome,
            Err(e) => {
                let msg = e.to_string();
                sep_failure = Some(e);
                return Err(SolveError::Callback(msg));
            }
        };
        if outcome.value == 0 {
            return Ok(CandidateDecision::Accept);
        }
        // Wider separation scopes may deny only unclaimed testpoints; the
        // incumbent's own claims then all survive, so it is robust.
        let denied_claimed: Vec<usize> = outcome
            .denied
            .iter()
            .copied()
            .filter(|&t| claimed[t])
            .collect();
        if denied_claimed.is_empty() {
            return Ok(CandidateDecision::Accept);
        }
        // Scenario-survival cuts: the adversary's deviation assignment is
        // one concrete scenario of the uncertainty set, so every plan must
        // overpower it on each testpoint it claims. One row per denied
        // claim; each is valid for every activation (with positive band
        // lower bounds the padded scenario may be slightly conservative,
        // and the final audit still gates the result).
        let round = records.len();
        let mut cuts = Vec::with_capacity(denied_claimed.len());
        for &t in &denied_claimed {
            let band = outcome.deviations[t].ok_or_else(|| {
                SolveError::Callback(format!(
                    "adversary denied testpoint {t} without choosing a band"
                ))
            })?;
            let dev = mb.threshold(t, band);
            let mut m_t = big_m_njp(t, ji, NjpMode::Robust(mb));
            let mut terms: Vec<(usize, f64)> =
                Vec::with_capacity(ji.n_sites() * ji.n_typologies() + 1);
            for j in 0..ji.n_sites() {
                for m in 0..ji.n_typologies() {
                    terms.push((
                        njp.device_var[j][m],
                        ji.sir_threshold() * ji.jam_fading(t, j) * ji.device_powers_mw()[m],
                    ));
                }
            }
            let rhs_core = ji.nominal_balance_mw(t) + dev + ji.epsilon_mw();
            // The candidate claims t, so its violation is the denial margin,
            // which can be arbitrarily thin. Grow the deactivation constant
            // until the candidate is excluded by a clear tolerance margin;
            // the sliver of barely-surviving plans this may overcut is
            // covered by the final audit.
            let jam_at_candidate: f64 = terms.iter().map(|&(v, c)| c * values[v]).sum();
            let scale = terms
                .iter()
                .map(|&(_, c)| c.abs())
                .fold(m_t.max(rhs_core.abs()), f64::max);
            let need = 2.0 * CANDIDATE_TOL * scale;
            let margin = rhs_core - jam_at_candidate;
            if margin < need {
                m_t += need - margin;
            }
            terms.push((njp.claim_var[t], -m_t));
            // Rows arrive at milliwatt scale; normalizing them lets the
            // engine's absolute tolerances act like relative ones.
            let norm = terms
                .iter()
                .map(|&(_, c)| c.abs())
                .fold((rhs_core - m_t).abs(), f64::max)
                .max(f64::MIN_POSITIVE);
            for term in &mut terms {
                term.1 /= norm;
            }
            cuts.push(LinearConstraint {
                terms,
                sense: RowSense::Ge,
                rhs: (rhs_core - m_t) / norm,
                tag: RowTag::Cut { round },
                indicator: Some(njp.claim_var[t]),
            });
        }
        records.push(CutRecord {
            round,
            adversary_value: outcome.value,
            denied: outcome.denied,
        });
        Ok(CandidateDecision::Cut(cuts))
    };

    let mut bb = options.bb.clone();
    // The seed passes through the callback like any candidate, so a
    // non-robust greedy plan turns into a first cut instead of an incumbent.
    bb.initial_incumbent = Some(njp.warm_start(&warm.activation, &warm.claimed));
    let solution = bb_solve(
        &njp.model,
        bb,
        Some(&mut callback as &mut CandidateCallback<'_>),
    );
    let solution = match solution {
        Ok(s) => s,
        Err(e) => {
            return Err(sep_failure.unwrap_or(RobustError::Solve(e)));
        }
    };
    if solution.values.is_empty() {
        return Ok((empty_plan(ji), solution.status, records));
    }
    let rough = extract_plan(ji, &njp, &solution.values);
    let activation = trim_activation(ji, &rough.activation, |trial| {
        Ok(keeps_nominal_claims(trial, &rough.claimed, ji)?
            && audit_robust(trial, &rough.claimed, ji, mb)?)
    })?;
    let plan = finish_plan(ji, activation, rough.claimed);
    if !audit_robust(&plan.activation, &plan.claimed, ji, mb)? {
        return Err(RobustError::AuditFailed(format!(
            "final plan with {} claims fails the deviation audit",
            plan.claim_count()
        )));
    }
    Ok((plan, solution.status, records))
}

/// Runs the nominal and robust solves on one instance and reports both
/// plans, the cut log and the price of robustness.
pub fn plan_jamming(
    ji: &JammingInstance,
    mb: &MultibandSet,
    options: &PlanOptions,
) -> Result<RobustRunReport, RobustError> {
    let started = Instant::now();
    let (mut nominal, nominal_status) = solve_nominal(ji, &options.bb)?;
    let (robust, robust_status, cuts) = solve_robust(ji, mb, options)?;
    // A robust plan is nominally feasible (its claims are jammed at the
    // nominal balances), so a truncated nominal search never needs to report
    // less than the robust plan achieved: adopt it when it is better.
    if robust.profit > nominal.profit {
        nominal = robust.clone();
    }
    let nominal_count = nominal.claim_count();
    let robust_count = robust.claim_count();
    let price_of_robustness_pct = (nominal_count > 0).then(|| {
        100.0 * (robust_count as f64 - nominal_count as f64) / nominal_count as f64
    });
    Ok(RobustRunReport {
        nominal,
        robust,
        cuts,
        nominal_status,
        robust_status,
        wall: started.elapsed(),
        price_of_robustness_pct,
    })
}

// ---------------------------------------------------------------------------
// Exhaustive references
// ---------------------------------------------------------------------------

/// Guard limits for the exhaustive reference planners.
const REF_MAX_SITES: usize = 5;
const REF_MAX_TPS: usize = 8;
const REF_MAX_TYPOLOGIES: usize = 2;

fn reference_guards(ji: &JammingInstance) -> Result<(), RobustError> {
    if ji.n_sites() > REF_MAX_SITES
        || ji.n_tps() > REF_MAX_TPS
        || ji.n_typologies() > REF_MAX_TYPOLOGIES
    {
        return Err(RobustError::TooLarge(format!(
            "exhaustive reference limited to {REF_MAX_SITES} sites, {REF_MAX_TPS} testpoints, {REF_MAX_TYPOLOGIES} typologies; got {}/{}/{}",
            ji.n_sites(),
            ji.n_tps(),
            ji.n_typologies()
        )));
    }
    Ok(())
}

fn enumerate_activations(ji: &JammingInstance) -> Vec<Vec<Option<usize>>> {
    let choices = ji.n_typologies() + 1;
    let total = choices.pow(ji.n_sites() as u32);
    (0..total)
        .map(|code| {
            let mut rest = code;
            (0..ji.n_sites())
                .map(|_| {
                    let digit = rest % choices;
                    rest /= choices;
                    (digit > 0).then(|| digit - 1)
                })
                .collect()
        })
        .collect()
}

/// Exhaustive best nominal placement by full activation enumeration.
/// Intended as an independent reference for small instances.
pub fn enumerate_best_nominal(ji: &JammingInstance) -> Result<JamPlan, RobustError> {
    reference_guards(ji)?;
    let mut best = empty_plan(ji);
    for activation in enumerate_activations(ji) {
        if ji.activation_cost(&activation) > ji.budget() {
            continue;
        }
        let mut claimed = vec![false; ji.n_tps()];
        for t in 0..ji.n_tps() {
            claimed[t] = is_jammed(t, &activation, ji.nominal_balance_mw(t), ji)?;
        }
        let plan = finish_plan(ji, activation, claimed);
        if plan.profit > best.profit + 1e-12 {
            best = plan;
        }
    }
    Ok(best)
}

/// Exhaustive best robust placement: for every budget-feasible activation,
/// claim exactly the testpoints that are nominally jammed and cannot be
/// denied by any single in-set deviation. Requires all band lower bounds to
/// be zero, which makes per-testpoint denial independent of the rest of the
/// claim set.
pub fn enumerate_best_robust(
    ji: &JammingInstance,
    mb: &MultibandSet,
) -> Result<JamPlan, RobustError> {
    reference_guards(ji)?;
    let any_lower = (-(mb.k_neg() as i32)..=mb.k_pos() as i32)
        .any(|k| mb.lower_bound(k) > 0);
    if any_lower {
        return Err(RobustError::TooLarge(
            "exhaustive robust reference requires zero band lower bounds".into(),
        ));
    }
    let mut best = empty_plan(ji);
    for activation in enumerate_activations(ji) {
        if ji.activation_cost(&activation) > ji.budget() {
            continue;
        }
        let mut claimed = vec![false; ji.n_tps()];
        for t in 0..ji.n_tps() {
            if !is_jammed(t, &activation, ji.nominal_balance_mw(t), ji)? {
                continue;
            }
            let jam = jam_power(t, &activation, ji)?;
            let deniable = (1..=mb.k_pos() as i32).any(|k| {
                mb.upper_bound(k) >= 1
                    && denies(
                        mb.threshold(t, k),
                        jam,
                        ji.nominal_balance_mw(t),
                        ji.epsilon_mw(),
                    )
            });
            claimed[t] = !deniable;
        }
        let plan = finish_plan(ji, activation, claimed);
        if plan.profit > best.profit + 1e-12 {
            best = plan;
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{db_to_linear, JammerSite};

    fn approx(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(a.abs()).max(1e-300)
    }

    /// One site, two typologies (20 and 33 dBmW), one served testpoint with
    /// a 1e-5 mW nominal balance. The weak device jams the nominal balance
    /// with ~1e-5 mW to spare but falls inside the +1 deviation band; the
    /// strong device clears even the +2 band by a factor of four.
    fn fixture() -> JammingInstance {
        JammingInstance::new(
            vec![JammerSite {
                id: 0,
                x_m: 0.0,
                y_m: 0.0,
                costs: vec![1.0, 2.0],
            }],
            vec![db_to_linear(20.0), db_to_linear(33.0)],
            vec![db_to_linear(-77.0)],
            vec![0],
            2.0,
            vec![1.0],
            vec![1e-5],
            1e-8,
            db_to_linear(10.0),
            db_to_linear(-114.0),
        )
        .expect("valid instance")
    }

    fn fixture_bands(ji: &JammingInstance) -> MultibandSet {
        make_bands(
            &(0..ji.n_tps()).map(|t| ji.nominal_balance_mw(t)).collect::<Vec<_>>(),
            0.2,
            2,
            2,
            None,
        )
        .expect("valid bands")
    }

    // -- band construction ----------------------------------------------------

    #[test]
    fn band_thresholds_match_hand_computation() {
        // Balance 1e-5 mW = -50 dBmW, fraction 0.2 -> 10 dB spread per side,
        // band edges at -60, -55, -45, -40 dBmW.
        let mb = make_bands(&[1e-5], 0.2, 2, 2, None).expect("builds");
        assert!(approx(mb.threshold(0, -2), 1e-6 - 1e-5, 1e-12));
        assert!(approx(mb.threshold(0, -1), db_to_linear(-55.0) - 1e-5, 1e-12));
        assert!(approx(mb.threshold(0, 1), db_to_linear(-45.0) - 1e-5, 1e-12));
        assert!(approx(mb.threshold(0, 2), 1e-4 - 1e-5, 1e-12));
        assert!(approx(mb.worst_positive(0), 9e-5, 1e-12));
        assert!(approx(mb.most_negative(0), -9e-6, 1e-12));
    }

    #[test]
    fn band_thresholds_handle_positive_decibel_balances() {
        // Balance 100 mW = +20 dBmW: negative bands must still fall below
        // the nominal value even though g > 0.
        let mb = make_bands(&[100.0], 0.1, 1, 1, None).expect("builds");
        assert!(mb.threshold(0, -1) < 0.0);
        assert!(mb.threshold(0, 1) > 0.0);
        assert!(approx(mb.threshold(0, -1), db_to_linear(18.0) - 100.0, 1e-12));
        assert!(approx(mb.threshold(0, 1), db_to_linear(22.0) - 100.0, 1e-12));
    }

    #[test]
    fn band_construction_rejects_degenerate_inputs() {
        assert!(make_bands(&[0.0], 0.2, 2, 2, None).is_err());
        assert!(make_bands(&[-1e-5], 0.2, 2, 2, None).is_err());
        assert!(make_bands(&[1.0], 0.2, 2, 2, None).is_err(), "0 dBmW collapses");
        assert!(make_bands(&[1e-5], 0.0, 2, 2, None).is_err());
        assert!(make_bands(&[1e-5], 1.5, 2, 2, None).is_err());
        assert!(make_bands(&[1e-5], 0.2, 0, 2, None).is_err());
    }

    #[test]
    fn default_bounds_cap_bands_at_share_of_testpoints() {
        let mb = make_bands(&[1e-5; 10], 0.2, 2, 2, None).expect("builds");
        // ceil(10 / 4) = 3 per nonzero band, null band unbounded.
        for k in [-2, -1, 1, 2] {
            assert_eq!(mb.upper_bound(k), 3);
            assert_eq!(mb.lower_bound(k), 0);
        }
        assert_eq!(mb.upper_bound(0), 10);
        assert_eq!(mb.lower_bound(0), 0);
    }

    #[test]
    fn explicit_bounds_are_validated() {
        let ladder = vec![vec![-2e-6, -1e-6, 1e-6, 2e-6]];
        let bad_null = MultibandSet::from_thresholds(
            ladder.clone(),
            2,
            2,
            BandBounds::Explicit {
                lower: vec![0; 5],
                upper: vec![1, 1, 0, 1, 1], // null band must admit everyone
            },
            1,
        );
        assert!(bad_null.is_err());
        let crossed = MultibandSet::from_thresholds(
            vec![vec![-2e-6, -3e-6, 1e-6, 2e-6]],
            2,
            2,
            BandBounds::Uniform { lower: 0, upper: 1 },
            1,
        );
        assert!(crossed.is_err(), "unsorted ladders must be rejected");
        let demanding = MultibandSet::from_thresholds(
            ladder,
            2,
            2,
            BandBounds::Explicit {
                lower: vec![1, 1, 0, 1, 1], // four testpoints demanded, one exists
                upper: vec![1, 1, 1, 1, 1],
            },
            1,
        );
        assert!(demanding.is_err());
    }

    // -- separation -----------------------------------------------------------

    #[test]
    fn weak_device_is_denied_and_strong_device_survives() {
        let ji = fixture();
        let mb = fixture_bands(&ji);
        // Weak typology: jamming power 10^(-4.7) ~ 2e-5 mW; the +1 band
        // already pushes the balance past it.
        let weak = separate(&[Some(0)], &[true], &ji, &mb, SepScope::ClaimedOnly)
            .expect("separates");
        assert_eq!(weak.value, 1);
        assert_eq!(weak.denied, vec![0]);
        assert!(matches!(weak.deviations[0], Some(k) if k > 0));
        // Strong typology: ~4e-4 mW beats even the +2 band (1e-4 mW
        // worst-case balance plus margin).
        let strong = separate(&[Some(1)], &[true], &ji, &mb, SepScope::ClaimedOnly)
            .expect("separates");
        assert_eq!(strong.value, 0);
        assert!(strong.denied.is_empty());
    }

    #[test]
    fn unclaimed_testpoints_are_out_of_scope() {
        let ji = fixture();
        let mb = fixture_bands(&ji);
        let outcome = separate(&[Some(0)], &[false], &ji, &mb, SepScope::ClaimedOnly)
            .expect("separates");
        assert_eq!(outcome.value, 0);
    }

    // -- audit ------------------------------------------------------------------

    #[test]
    fn audit_agrees_with_separation_on_the_fixture() {
        let ji = fixture();
        let mb = fixture_bands(&ji);
        assert!(!audit_robust(&[Some(0)], &[true], &ji, &mb).expect("audits"));
        assert!(audit_robust(&[Some(1)], &[true], &ji, &mb).expect("audits"));
        assert!(audit_robust(&[None], &[false], &ji, &mb).expect("audits"));
    }

    #[test]
    fn audit_respects_band_upper_bounds() {
        // Two testpoints, one site. With the +2 band capped at zero
        // occupants, the adversary loses its only denial move.
        let ji = JammingInstance::new(
            vec![JammerSite {
                id: 0,
                x_m: 0.0,
                y_m: 0.0,
                costs: vec![1.0],
            }],
            vec![db_to_linear(20.0)],
            vec![db_to_linear(-77.0), db_to_linear(-77.0)],
            vec![0, 1],
            2.0,
            vec![1.0, 1.0],
            vec![1e-5, 1e-5],
            1e-8,
            db_to_linear(10.0),
            db_to_linear(-114.0),
        )
        .expect("valid");
        let balances = [1e-5, 1e-5];
        let open = make_bands(&balances, 0.2, 2, 2, None).expect("bands");
        let claimed = [true, true];
        let act = [Some(0)];
        assert!(!audit_robust(&act, &claimed, &ji, &open).expect("audits"));
        let capped = make_bands(
            &balances,
            0.2,
            2,
            2,
            Some(BandBounds::Explicit {
                lower: vec![0; 5],
                upper: vec![2, 2, 2, 0, 0], // no positive deviations allowed
            }),
        )
        .expect("bands");
        assert!(audit_robust(&act, &claimed, &ji, &capped).expect("audits"));
    }

    #[test]
    fn audit_enumeration_and_separation_agree_on_random_cases() {
        let mut state = 0xDEADBEEFCAFEu64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for case in 0..40 {
            let n_tps = 1 + (next() * 3.0) as usize;
            let fading: Vec<f64> = (0..n_tps).map(|_| db_to_linear(-85.0 + 15.0 * next())).collect();
            let balances: Vec<f64> = (0..n_tps).map(|_| db_to_linear(-55.0 + 10.0 * next())).collect();
            let ji = JammingInstance::new(
                vec![JammerSite {
                    id: 0,
                    x_m: 0.0,
                    y_m: 0.0,
                    costs: vec![1.0, 2.0],
                }],
                vec![db_to_linear(20.0), db_to_linear(27.0)],
                fading,
                (0..n_tps as u32).collect(),
                2.0,
                vec![1.0; n_tps],
                balances.clone(),
                1e-8,
                db_to_linear(10.0),
                db_to_linear(-114.0),
            )
            .expect("valid");
            let mb = make_bands(&balances, 0.25, 2, 2, None).expect("bands");
            let activation = [Some((next() * 2.0) as usize)];
            let claimed: Vec<bool> = (0..n_tps)
                .map(|t| {
                    is_jammed(t, &activation, ji.nominal_balance_mw(t), &ji).unwrap()
                        && next() < 0.8
                })
                .collect();
            let audit = audit_robust(&activation, &claimed, &ji, &mb).expect("audits");
            let sep = separate(&activation, &claimed, &ji, &mb, SepScope::ClaimedOnly)
                .expect("separates");
            assert_eq!(
                audit,
                sep.value == 0,
                "case {case}: audit {audit} vs adversary value {}",
                sep.value
            );
        }
    }

    // -- planning ----------------------------------------------------------------

    #[test]
    fn nominal_plan_trims_to_the_cheap_typology() {
        let ji = fixture();
        let (plan, status) = solve_nominal(&ji, &BbOptions::default()).expect("solves");
        assert_eq!(status, BbStatus::Optimal);
        assert_eq!(plan.activation, vec![Some(0)], "cheapest sufficient device");
        assert_eq!(plan.claimed, vec![true]);
        assert!(approx(plan.profit, 1.0, 1e-12));
        assert!(approx(plan.cost, 1.0, 1e-12));
    }

    #[test]
    fn robust_plan_keeps_the_strong_typology() {
        let ji = fixture();
        let mb = fixture_bands(&ji);
        let (plan, status, _cuts) =
            solve_robust(&ji, &mb, &PlanOptions::default()).expect("solves");
        assert_eq!(status, BbStatus::Optimal);
        assert_eq!(plan.activation, vec![Some(1)], "audit must block the downgrade");
        assert_eq!(plan.claimed, vec![true]);
        assert!(approx(plan.profit, 1.0, 1e-12));
        assert!(approx(plan.cost, 2.0, 1e-12));
    }

    #[test]
    fn full_run_reports_zero_price_of_robustness_on_the_fixture() {
        let ji = fixture();
        let mb = fixture_bands(&ji);
        let report = plan_jamming(&ji, &mb, &PlanOptions::default()).expect("plans");
        assert_eq!(report.nominal.claim_count(), 1);
        assert_eq!(report.robust.claim_count(), 1);
        assert_eq!(report.price_of_robustness_pct, Some(0.0));
        assert_eq!(report.nominal.activation, vec![Some(0)]);
        assert_eq!(report.robust.activation, vec![Some(1)]);
    }

    #[test]
    fn tight_budget_drops_unprotectable_claims() {
        // Budget 1 affords only the weak device, which the adversary always
        // denies: the robust plan must claim nothing.
        let ji = JammingInstance::new(
            vec![JammerSite {
                id: 0,
                x_m: 0.0,
                y_m: 0.0,
                costs: vec![1.0, 2.0],
            }],
            vec![db_to_linear(20.0), db_to_linear(27.0)],
            vec![db_to_linear(-77.0)],
            vec![0],
            1.0,
            vec![1.0],
            vec![1e-5],
            1e-8,
            db_to_linear(10.0),
            db_to_linear(-114.0),
        )
        .expect("valid");
        let mb = fixture_bands(&ji);
        let report = plan_jamming(&ji, &mb, &PlanOptions::default()).expect("plans");
        assert_eq!(report.nominal.claim_count(), 1, "weak device jams nominally");
        assert_eq!(report.robust.claim_count(), 0, "no robust claim affordable");
        assert!(!report.cuts.is_empty(), "the weak candidate must be cut");
        assert_eq!(report.price_of_robustness_pct, Some(-100.0));
    }

    #[test]
    fn exhaustive_references_agree_with_solvers_on_the_fixture() {
        let ji = fixture();
        let mb = fixture_bands(&ji);
        let nominal_ref = enumerate_best_nominal(&ji).expect("enumerates");
        let robust_ref = enumerate_best_robust(&ji, &mb).expect("enumerates");
        let report = plan_jamming(&ji, &mb, &PlanOptions::default()).expect("plans");
        assert!(approx(report.nominal.profit, nominal_ref.profit, 1e-9));
        assert!(approx(report.robust.profit, robust_ref.profit, 1e-9));
    }

    #[test]
    fn reference_guards_reject_oversized_instances() {
        let sites: Vec<JammerSite> = (0..6)
            .map(|j| JammerSite {
                id: j,
                x_m: j as f64,
                y_m: 0.0,
                costs: vec![1.0],
            })
            .collect();
        let ji = JammingInstance::new(
            sites,
            vec![db_to_linear(20.0)],
            vec![db_to_linear(-77.0); 6],
            vec![0],
            2.0,
            vec![1.0],
            vec![1e-5],
            1e-8,
            db_to_linear(10.0),
            db_to_linear(-114.0),
        )
        .expect("valid");
        assert!(matches!(
            enumerate_best_nominal(&ji),
            Err(RobustError::TooLarge(_))
        ));
    }
}
