//! Domain model for SIR-based wireless coverage and jamming.
//!
//! A network instance couples a set of testpoints (demand locations) with a
//! set of transceivers. A testpoint is covered by transceiver `s` when its
//! signal-to-interference ratio exceeds a threshold `delta`:
//!
//! ```text
//! SIR = a[t][s] * p[s] / (noise + sum over o != s of a[t][o] * p[o]) >= delta
//! ```
//!
//! The same condition in linear form is the coverage balance
//!
//! ```text
//! balance = a[t][s] * p[s] - delta * sum(a[t][o] * p[o]) - delta * noise
//! ```
//!
//! which is nonnegative exactly when the testpoint is covered. A jammer
//! placement defeats the coverage of a testpoint when the threshold-scaled
//! jamming power it receives strictly exceeds that balance; strictness is
//! realised with a small positive margin `epsilon` carried by the jamming
//! instance.
//!
//! Every quantity in this module is linear (milliwatts for powers, plain
//! ratios for fading and thresholds). Decibel values are converted at the
//! boundary with [`db_to_linear`] and [`linear_to_db`].

use thiserror::Error;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Validation and arithmetic failures for domain data.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    /// A decibel conversion was asked for a nonpositive linear value.
    #[error("cannot express nonpositive linear value {0} in decibels")]
    NonpositiveLinear(f64),
    /// An index was out of range for the instance.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    /// Instance data violated a structural requirement.
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    /// A design referenced the wrong instance or broke a coverage rule.
    #[error("invalid design: {0}")]
    InvalidDesign(String),
}

// ---------------------------------------------------------------------------
// Decibel arithmetic
// ---------------------------------------------------------------------------

/// A value on the decibel scale (dB for ratios, dBmW for powers).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decibel(pub f64);

/// A nonnegative value on the linear scale (mW for powers, ratio otherwise).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPower(pub f64);

impl Decibel {
    /// Converts to the linear scale: `10^(db / 10)`.
    pub fn to_linear(self) -> LinearPower {
        LinearPower(db_to_linear(self.0))
    }
}

impl LinearPower {
    /// Converts to the decibel scale; fails for nonpositive values.
    pub fn to_db(self) -> Result<Decibel, ModelError> {
        linear_to_db(self.0).map(Decibel)
    }
}

/// Converts a decibel value to the linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a positive linear value to decibels: `10 * log10(v)`.
///
/// Zero has no decibel representation and negative powers are meaningless,
/// so both are rejected.
pub fn linear_to_db(v: f64) -> Result<f64, ModelError> {
    if v <= 0.0 {
        return Err(ModelError::NonpositiveLinear(v));
    }
    Ok(10.0 * v.log10())
}

// ---------------------------------------------------------------------------
// Network instance
// ---------------------------------------------------------------------------

/// A demand location that the network may serve.
#[derive(Debug, Clone, PartialEq)]
pub struct Testpoint {
    pub id: u32,
    pub x_m: f64,
    pub y_m: f64,
    /// Revenue collected when this testpoint is served. Positive.
    pub revenue: f64,
}

/// A transceiver site with adjustable emission power.
#[derive(Debug, Clone, PartialEq)]
pub struct Trx {
    pub id: u32,
    pub x_m: f64,
    pub y_m: f64,
}

/// Immutable description of a wireless network scenario.
///
/// `fading(t, s)` is the linear power gain from transceiver `s` to testpoint
/// `t`; gains lie in `[0, 1]`. The SIR threshold and the noise floor are
/// shared by all testpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInstance {
    testpoints: Vec<Testpoint>,
    trxs: Vec<Trx>,
    /// Row-major `|T| x |S|` linear gains.
    fading: Vec<f64>,
    noise_mw: f64,
    sir_threshold: f64,
    p_trx_max_mw: f64,
}

impl NetworkInstance {
    /// Validates and assembles an instance.
    ///
    /// Requirements: at least one testpoint and one transceiver, fading of
    /// shape `|T| x |S|` with entries in `[0, 1]`, positive noise, threshold
    /// and power cap, positive revenues, and unique ids within each family.
    pub fn new(
        testpoints: Vec<Testpoint>,
        trxs: Vec<Trx>,
        fading: Vec<f64>,
        noise_mw: f64,
        sir_threshold: f64,
        p_trx_max_mw: f64,
    ) -> Result<Self, ModelError> {
        if testpoints.is_empty() {
            return Err(ModelError::InvalidInstance("no testpoints".into()));
        }
        if trxs.is_empty() {
            return Err(ModelError::InvalidInstance("no transceivers".into()));
        }
        if fading.len() != testpoints.len() * trxs.len() {
            return Err(ModelError::InvalidInstance(format!(
                "fading has {} entries, expected {}",
                fading.len(),
                testpoints.len() * trxs.len()
            )));
        }
        if let Some(bad) = fading.iter().find(|a| !(0.0..=1.0).contains(*a) || a.is_nan()) {
            return Err(ModelError::InvalidInstance(format!(
                "fading gain {bad} outside [0, 1]"
            )));
        }
        if !(noise_mw > 0.0) {
            return Err(ModelError::InvalidInstance(format!(
                "noise must be positive, got {noise_mw} mW"
            )));
        }
        if !(sir_threshold > 0.0) {
            return Err(ModelError::InvalidInstance(format!(
                "SIR threshold must be positive, got {sir_threshold}"
            )));
        }
        if !(p_trx_max_mw > 0.0) {
            return Err(ModelError::InvalidInstance(format!(
                "transceiver power cap must be positive, got {p_trx_max_mw} mW"
            )));
        }
        if let Some(t) = testpoints.iter().find(|t| !(t.revenue > 0.0)) {
            return Err(ModelError::InvalidInstance(format!(
                "testpoint {} has nonpositive revenue",
                t.id
            )));
        }
        let mut tp_ids: Vec<u32> = testpoints.iter().map(|t| t.id).collect();
        tp_ids.sort_unstable();
        tp_ids.dedup();
        if tp_ids.len() != testpoints.len() {
            return Err(ModelError::InvalidInstance("duplicate testpoint ids".into()));
        }
        let mut trx_ids: Vec<u32> = trxs.iter().map(|s| s.id).collect();
        trx_ids.sort_unstable();
        trx_ids.dedup();
        if trx_ids.len() != trxs.len() {
            return Err(ModelError::InvalidInstance("duplicate transceiver ids".into()));
        }
        Ok(Self {
            testpoints,
            trxs,
            fading,
            noise_mw,
            sir_threshold,
            p_trx_max_mw,
        })
    }

    pub fn n_tps(&self) -> usize {
        self.testpoints.len()
    }

    pub fn n_trxs(&self) -> usize {
        self.trxs.len()
    }

    pub fn testpoints(&self) -> &[Testpoint] {
        &self.testpoints
    }

    pub fn trxs(&self) -> &[Trx] {
        &self.trxs
    }

    /// Linear gain from transceiver `s` to testpoint `t`.
    pub fn fading(&self, t: usize, s: usize) -> f64 {
        self.fading[t * self.trxs.len() + s]
    }

    pub fn noise_mw(&self) -> f64 {
        self.noise_mw
    }

    /// Coverage threshold `delta` on the linear scale.
    pub fn sir_threshold(&self) -> f64 {
        self.sir_threshold
    }

    /// Per-transceiver emission cap in mW.
    pub fn p_trx_max_mw(&self) -> f64 {
        self.p_trx_max_mw
    }

    fn check_tp(&self, t: usize) -> Result<(), ModelError> {
        if t >= self.testpoints.len() {
            return Err(ModelError::IndexOutOfRange(format!(
                "testpoint {t} of {}",
                self.testpoints.len()
            )));
        }
        Ok(())
    }

    fn check_trx(&self, s: usize) -> Result<(), ModelError> {
        if s >= self.trxs.len() {
            return Err(ModelError::IndexOutOfRange(format!(
                "transceiver {s} of {}",
                self.trxs.len()
            )));
        }
        Ok(())
    }

    fn check_powers(&self, powers_mw: &[f64]) -> Result<(), ModelError> {
        if powers_mw.len() != self.trxs.len() {
            return Err(ModelError::InvalidDesign(format!(
                "power vector has {} entries, expected {}",
                powers_mw.len(),
                self.trxs.len()
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Coverage arithmetic
// ---------------------------------------------------------------------------

/// Signal-to-interference ratio at testpoint `t` when served by `s`.
///
/// Returns the linear ratio `a[t][s] p[s] / (noise + sum of other received
/// powers)`; the denominator is always positive because noise is.
pub fn compute_sir(
    t: usize,
    s: usize,
    powers_mw: &[f64],
    net: &NetworkInstance,
) -> Result<f64, ModelError> {
    net.check_tp(t)?;
    net.check_trx(s)?;
    net.check_powers(powers_mw)?;
    let signal = net.fading(t, s) * powers_mw[s];
    let interference: f64 = (0..net.n_trxs())
        .filter(|&o| o != s)
        .map(|o| net.fading(t, o) * powers_mw[o])
        .sum();
    Ok(signal / (net.noise_mw() + interference))
}

/// Coverage balance of testpoint `t` under server `s`, in mW.
///
/// `a[t][s] p[s] - delta * sum(a[t][o] p[o], o != s) - delta * noise`; the
/// testpoint is covered exactly when the balance is nonnegative, and the
/// value is the interference headroom a jammer must overcome.
pub fn compute_delta_sir(
    t: usize,
    s: usize,
    powers_mw: &[f64],
    net: &NetworkInstance,
) -> Result<f64, ModelError> {
    net.check_tp(t)?;
    net.check_trx(s)?;
    net.check_powers(powers_mw)?;
    let delta = net.sir_threshold();
    let signal = net.fading(t, s) * powers_mw[s];
    let interference: f64 = (0..net.n_trxs())
        .filter(|&o| o != s)
        .map(|o| net.fading(t, o) * powers_mw[o])
        .sum();
    Ok(signal - delta * interference - delta * net.noise_mw())
}

// ---------------------------------------------------------------------------
// Network design
// ---------------------------------------------------------------------------

/// A coverage plan: emission powers plus a server assignment per testpoint.
///
/// `server[t]` is `None` for unserved testpoints. Balances are stored for
/// served testpoints only and always computed from the powers, never trusted
/// from a caller.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkDesign {
    powers_mw: Vec<f64>,
    server: Vec<Option<usize>>,
    balance_mw: Vec<Option<f64>>,
}

/// Feasibility slack allowed when validating a design against its instance.
pub const DESIGN_FEASIBILITY_TOL: f64 = 1e-6;

impl NetworkDesign {
    /// Builds a design from powers and a per-testpoint server choice,
    /// computing coverage balances along the way.
    ///
    /// Fails when powers fall outside `[0, p_trx_max]`, a server index is out
    /// of range, or a served testpoint has a negative balance beyond
    /// [`DESIGN_FEASIBILITY_TOL`] relative to the threshold-scaled noise.
    pub fn from_assignment(
        net: &NetworkInstance,
        powers_mw: Vec<f64>,
        server: Vec<Option<usize>>,
    ) -> Result<Self, ModelError> {
        net.check_powers(&powers_mw)?;
        if server.len() != net.n_tps() {
            return Err(ModelError::InvalidDesign(format!(
                "server map has {} entries, expected {}",
                server.len(),
                net.n_tps()
            )));
        }
        let cap = net.p_trx_max_mw();
        for (s, &p) in powers_mw.iter().enumerate() {
            if !(0.0..=cap * (1.0 + DESIGN_FEASIBILITY_TOL)).contains(&p) || p.is_nan() {
                return Err(ModelError::InvalidDesign(format!(
                    "power of transceiver {s} is {p} mW, outside [0, {cap}]"
                )));
            }
        }
        let slack = DESIGN_FEASIBILITY_TOL * net.sir_threshold() * net.noise_mw();
        let mut balance_mw = vec![None; net.n_tps()];
        for (t, srv) in server.iter().enumerate() {
            if let Some(s) = srv {
                let b = compute_delta_sir(t, *s, &powers_mw, net)?;
                if b < -slack {
                    return Err(ModelError::InvalidDesign(format!(
                        "testpoint {t} assigned to transceiver {s} is not covered \
                         (balance {b} mW)"
                    )));
                }
                balance_mw[t] = Some(b);
            }
        }
        Ok(Self {
            powers_mw,
            server,
            balance_mw,
        })
    }

    pub fn powers_mw(&self) -> &[f64] {
        &self.powers_mw
    }

    /// Server of testpoint `t`, or `None` when unserved.
    pub fn server(&self, t: usize) -> Option<usize> {
        self.server[t]
    }

    /// Indices of served testpoints, ascending.
    pub fn served(&self) -> Vec<usize> {
        (0..self.server.len())
            .filter(|&t| self.server[t].is_some())
            .collect()
    }

    /// Coverage balance of `t` in mW, present exactly for served testpoints.
    pub fn balance_mw(&self, t: usize) -> Option<f64> {
        self.balance_mw[t]
    }

    pub fn n_served(&self) -> usize {
        self.server.iter().filter(|s| s.is_some()).count()
    }

    /// Greedy design for a fixed power profile: every testpoint takes the
    /// transceiver with the largest nonnegative coverage balance, or stays
    /// unserved when none covers it. Always feasible for valid powers.
    pub fn greedy_from_powers(net: &NetworkInstance, powers_mw: Vec<f64>) -> Result<Self, ModelError> {
        let mut server = Vec::with_capacity(net.n_tps());
        for t in 0..net.n_tps() {
            let mut best: Option<(usize, f64)> = None;
            for s in 0..net.n_trxs() {
                let b = compute_delta_sir(t, s, &powers_mw, net)?;
                if b >= 0.0 && best.map_or(true, |(_, bb)| b > bb) {
                    best = Some((s, b));
                }
            }
            server.push(best.map(|(s, _)| s));
        }
        Self::from_assignment(net, powers_mw, server)
    }

    /// The saturated design: every transceiver at full power, assignments
    /// greedy. A deterministic fallback when exact design optimization is
    /// truncated.
    pub fn saturated(net: &NetworkInstance) -> Result<Self, ModelError> {
        Self::greedy_from_powers(net, vec![net.p_trx_max_mw(); net.n_trxs()])
    }
}

// ---------------------------------------------------------------------------
// Jamming instance
// ---------------------------------------------------------------------------

/// A candidate jammer location with per-typology installation costs.
#[derive(Debug, Clone, PartialEq)]
pub struct JammerSite {
    pub id: u32,
    pub x_m: f64,
    pub y_m: f64,
    /// Cost of installing typology `m` here; strictly increasing in `m`.
    pub costs: Vec<f64>,
}

/// Input of the jammer placement problem for one designed network.
///
/// Testpoints are re-indexed: index `t` below ranges over the served set of
/// the underlying design, with `served_tp_ids` mapping back to instance ids.
/// `nominal_balance_mw[t]` is the planner's estimate of the coverage balance,
/// which the robust layer treats as uncertain.
#[derive(Debug, Clone, PartialEq)]
pub struct JammingInstance {
    sites: Vec<JammerSite>,
    /// Emission power of typology `m` in mW; strictly increasing.
    device_powers_mw: Vec<f64>,
    /// Row-major `|T'| x |J|` linear gains from site `j` to served TP `t`.
    jam_fading: Vec<f64>,
    served_tp_ids: Vec<u32>,
    budget: f64,
    profits: Vec<f64>,
    nominal_balance_mw: Vec<f64>,
    epsilon_mw: f64,
    sir_threshold: f64,
    noise_mw: f64,
}

/// Floor for the jamming strictness margin, in mW.
pub const EPSILON_FLOOR_MW: f64 = 1e-12;

/// Default strictness margin for a set of balance estimates.
///
/// One thousandth of the smallest estimate, but never below the
/// threshold-scaled noise contribution of that testpoint, and never below
/// [`EPSILON_FLOOR_MW`]. The margin scales with the instance so the strict
/// inequality "jamming power exceeds the balance" is meaningful at any power
/// level.
pub fn default_epsilon_mw(nominal_balance_mw: &[f64], sir_threshold: f64, noise_mw: f64) -> f64 {
    let floor_per_tp = sir_threshold * noise_mw;
    let scale = nominal_balance_mw
        .iter()
        .map(|b| b.max(floor_per_tp))
        .fold(f64::INFINITY, f64::min);
    if scale.is_finite() {
        (1e-3 * scale).max(EPSILON_FLOOR_MW)
    } else {
        EPSILON_FLOOR_MW
    }
}

impl JammingInstance {
    /// Validates and assembles a jamming instance.
    ///
    /// Typology powers must be strictly increasing, and so must the cost
    /// ladder of every site (a stronger device never costs less). Profits
    /// and balance estimates must be positive, fading gains must lie in
    /// `[0, 1]`, and the strictness margin must be positive.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        sites: Vec<JammerSite>,
        device_powers_mw: Vec<f64>,
        jam_fading: Vec<f64>,
        served_tp_ids: Vec<u32>,
        budget: f64,
        profits: Vec<f64>,
        nominal_balance_mw: Vec<f64>,
        epsilon_mw: f64,
        sir_threshold: f64,
        noise_mw: f64,
    ) -> Result<Self, ModelError> {
        if sites.is_empty() {
            return Err(ModelError::InvalidInstance("no jammer sites".into()));
        }
        if device_powers_mw.is_empty() {
            return Err(ModelError::InvalidInstance("no device typologies".into()));
        }
        if !device_powers_mw.windows(2).all(|w| w[0] < w[1]) || !(device_powers_mw[0] > 0.0) {
            return Err(ModelError::InvalidInstance(
                "device powers must be positive and strictly increasing".into(),
            ));
        }
        for site in &sites {
            if site.costs.len() != device_powers_mw.len() {
                return Err(ModelError::InvalidInstance(format!(
                    "site {} has {} costs, expected {}",
                    site.id,
                    site.costs.len(),
                    device_powers_mw.len()
                )));
            }
            if !site.costs.windows(2).all(|w| w[0] < w[1]) || !(site.costs[0] > 0.0) {
                return Err(ModelError::InvalidInstance(format!(
                    "site {} costs must be positive and strictly increasing",
                    site.id
                )));
            }
        }
        let n_tp = served_tp_ids.len();
        if jam_fading.len() != n_tp * sites.len() {
            return Err(ModelError::InvalidInstance(format!(
                "jam fading has {} entries, expected {}",
                jam_fading.len(),
                n_tp * sites.len()
            )));
        }
        if let Some(bad) = jam_fading.iter().find(|a| !(0.0..=1.0).contains(*a) || a.is_nan()) {
            return Err(ModelError::InvalidInstance(format!(
                "jam fading gain {bad} outside [0, 1]"
            )));
        }
        if profits.len() != n_tp || nominal_balance_mw.len() != n_tp {
            return Err(ModelError::InvalidInstance(
                "profits and balance estimates must cover every served testpoint".into(),
            ));
        }
        if let Some(p) = profits.iter().find(|p| !(**p > 0.0)) {
            return Err(ModelError::InvalidInstance(format!(
                "nonpositive profit {p}"
            )));
        }
        if let Some(b) = nominal_balance_mw.iter().find(|b| !(**b > 0.0)) {
            return Err(ModelError::InvalidInstance(format!(
                "nonpositive balance estimate {b} mW"
            )));
        }
        if !(budget > 0.0) {
            return Err(ModelError::InvalidInstance(format!(
                "budget must be positive, got {budget}"
            )));
        }
        if !(epsilon_mw > 0.0) {
            return Err(ModelError::InvalidInstance(format!(
                "strictness margin must be positive, got {epsilon_mw} mW"
            )));
        }
        if !(sir_threshold > 0.0) || !(noise_mw > 0.0) {
            return Err(ModelError::InvalidInstance(
                "threshold and noise must be positive".into(),
            ));
        }
        Ok(Self {
            sites,
            device_powers_mw,
            jam_fading,
            served_tp_ids,
            budget,
            profits,
            nominal_balance_mw,
            epsilon_mw,
            sir_threshold,
            noise_mw,
        })
    }

    pub fn n_tps(&self) -> usize {
        self.served_tp_ids.len()
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_typologies(&self) -> usize {
        self.device_powers_mw.len()
    }

    pub fn sites(&self) -> &[JammerSite] {
        &self.sites
    }

    pub fn device_powers_mw(&self) -> &[f64] {
        &self.device_powers_mw
    }

    /// Linear gain from jammer site `j` to served testpoint `t`.
    pub fn jam_fading(&self, t: usize, j: usize) -> f64 {
        self.jam_fading[t * self.sites.len() + j]
    }

    pub fn served_tp_ids(&self) -> &[u32] {
        &self.served_tp_ids
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn profit(&self, t: usize) -> f64 {
        self.profits[t]
    }

    pub fn profits(&self) -> &[f64] {
        &self.profits
    }

    /// Estimated coverage balance of served testpoint `t` in mW.
    pub fn nominal_balance_mw(&self, t: usize) -> f64 {
        self.nominal_balance_mw[t]
    }

    pub fn nominal_balances_mw(&self) -> &[f64] {
        &self.nominal_balance_mw
    }

    pub fn epsilon_mw(&self) -> f64 {
        self.epsilon_mw
    }

    pub fn sir_threshold(&self) -> f64 {
        self.sir_threshold
    }

    pub fn noise_mw(&self) -> f64 {
        self.noise_mw
    }

    /// Cost of installing typology `m` at site `j`.
    pub fn cost(&self, j: usize, m: usize) -> f64 {
        self.sites[j].costs[m]
    }

    /// Total cost of an activation map.
    pub fn activation_cost(&self, activation: &[Option<usize>]) -> f64 {
        activation
            .iter()
            .enumerate()
            .filter_map(|(j, m)| m.map(|m| self.cost(j, m)))
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Jamming arithmetic
// ---------------------------------------------------------------------------

/// Threshold-scaled jamming power received at served testpoint `t`, in mW.
///
/// `activation[j]` is the typology installed at site `j`, if any. The value
/// is `delta * sum(a[t][j] * P[m_j])`, the quantity that competes against
/// the coverage balance.
pub fn jam_power(
    t: usize,
    activation: &[Option<usize>],
    ji: &JammingInstance,
) -> Result<f64, ModelError> {
    if t >= ji.n_tps() {
        return Err(ModelError::IndexOutOfRange(format!(
            "served testpoint {t} of {}",
            ji.n_tps()
        )));
    }
    if activation.len() != ji.n_sites() {
        return Err(ModelError::IndexOutOfRange(format!(
            "activation map has {} entries, expected {}",
            activation.len(),
            ji.n_sites()
        )));
    }
    let mut total = 0.0;
    for (j, m) in activation.iter().enumerate() {
        if let Some(m) = m {
            if *m >= ji.n_typologies() {
                return Err(ModelError::IndexOutOfRange(format!(
                    "typology {m} of {}",
                    ji.n_typologies()
                )));
            }
            total += ji.jam_fading(t, j) * ji.device_powers_mw()[*m];
        }
    }
    Ok(ji.sir_threshold() * total)
}

/// Whether an activation defeats the coverage of testpoint `t` whose balance
/// is `balance_mw`.
///
/// Jamming succeeds when the received jamming power reaches the balance plus
/// the instance's strictness margin. Monotone: more sites or stronger
/// typologies never turn a jammed testpoint back into a covered one.
pub fn is_jammed(
    t: usize,
    activation: &[Option<usize>],
    balance_mw: f64,
    ji: &JammingInstance,
) -> Result<bool, ModelError> {
    Ok(jam_power(t, activation, ji)? >= balance_mw + ji.epsilon_mw())
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
