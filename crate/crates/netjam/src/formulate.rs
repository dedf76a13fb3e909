//! Mixed-integer linear models for the three optimization stages.
//!
//! [`build_spap`] produces the coverage-design model (choose emission powers
//! and at most one server per testpoint to maximize served revenue),
//! [`build_njp`] the jammer-placement model (choose device activations under
//! a budget to maximize the profit of defeated testpoints) and [`build_sep`]
//! the adversarial separation model (choose balance deviations inside a
//! multiband uncertainty set to deny as many claimed testpoints as
//! possible).
//!
//! All indicator ("big-M") constants are the tightest values that make the
//! guarded row vacuous when its indicator variable is 0; each builder
//! records the indicator on the row so that vacuousness can be audited
//! mechanically, see [`MilpModel::deactivated_row_holds`].

use crate::netmodel::{jam_power, JammingInstance, ModelError, NetworkDesign, NetworkInstance};
use crate::robust::MultibandSet;
use std::fmt::Write as _;
use thiserror::Error;

/// Strictness slack used to express "strictly greater" denial conditions in
/// closed MILP form, in mW. One order below [`crate::netmodel::EPSILON_FLOOR_MW`]
/// so it never dominates a genuine strictness margin.
pub const SEP_STRICTNESS_TAU_MW: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Model types
// ---------------------------------------------------------------------------

/// Errors raised while assembling or inspecting a model.
#[derive(Debug, Error, PartialEq)]
pub enum FormulateError {
    #[error("variable index {0} out of range")]
    BadVariable(usize),
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("invalid model input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Variable domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

/// Domain meaning of a variable, used for reporting and plan extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarTag {
    /// Emission power of transceiver `s` (mW).
    TrxPower { s: usize },
    /// Testpoint `t` is served by transceiver `s`.
    Assign { t: usize, s: usize },
    /// Served testpoint `t` is claimed as jammed.
    Claim { t: usize },
    /// Device of typology `m` is installed at site `j`.
    Device { j: usize, m: usize },
    /// Separation: claimed testpoint `t` is denied.
    Deny { t: usize },
    /// Separation: balance of testpoint `t` deviates into band `k` (nonzero).
    Deviate { t: usize, band: i32 },
}

/// Domain meaning of a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowTag {
    /// SIR coverage of testpoint `t` when served by `s`.
    Coverage { t: usize, s: usize },
    /// At most one server for testpoint `t`.
    SingleServer { t: usize },
    /// Jamming condition backing the claim on testpoint `t`.
    JamCondition { t: usize },
    /// Installation budget.
    Budget,
    /// At most one typology at site `j`.
    SingleDevice { j: usize },
    /// Separation: denial of testpoint `t` requires a sufficient deviation.
    DenialSupport { t: usize },
    /// Separation: denial of testpoint `t` implies one of its sufficient
    /// bands is chosen (redundant at integral points, tightens the
    /// relaxation).
    DenialCover { t: usize },
    /// Separation: at most one deviation band for testpoint `t`.
    SingleBand { t: usize },
    /// Separation: upper cardinality bound of band `k`.
    BandUpper { band: i32 },
    /// Separation: lower cardinality bound of band `k`.
    BandLower { band: i32 },
    /// Separation: lower cardinality bound of the null band, rewritten over
    /// the nonzero-band variables.
    NullBandLower,
    /// Robustness cut added in cutting-plane round `round`.
    Cut { round: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub tag: VarTag,
}

/// Row sense of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// A linear row `terms (sense) rhs`, optionally guarded by an indicator
/// variable: the row is constructed to hold vacuously whenever the indicator
/// equals 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
    pub tag: RowTag,
    pub indicator: Option<usize>,
}

impl LinearConstraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|(v, c)| c * values[*v]).sum()
    }

    pub fn satisfied(&self, values: &[f64], tol: f64) -> bool {
        let lhs = self.activity(values);
        match self.sense {
            RowSense::Le => lhs <= self.rhs + tol,
            RowSense::Ge => lhs >= self.rhs - tol,
            RowSense::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

/// Objective direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjSense {
    Maximize,
    Minimize,
}

/// A mixed-integer linear model with tagged variables and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    vars: Vec<Variable>,
    rows: Vec<LinearConstraint>,
    objective: Vec<(usize, f64)>,
    sense: ObjSense,
}

impl MilpModel {
    pub fn new(sense: ObjSense) -> Self {
        Self {
            vars: Vec::new(),
            rows: Vec::new(),
            objective: Vec::new(),
            sense,
        }
    }

    /// Adds a continuous variable with finite bounds.
    pub fn add_continuous(&mut self, tag: VarTag, lower: f64, upper: f64) -> usize {
        debug_assert!(lower.is_finite() && upper.is_finite() && lower <= upper);
        self.vars.push(Variable {
            kind: VarKind::Continuous,
            lower,
            upper,
            tag,
        });
        self.vars.len() - 1
    }

    /// Adds a binary variable.
    pub fn add_binary(&mut self, tag: VarTag) -> usize {
        self.vars.push(Variable {
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 1.0,
            tag,
        });
        self.vars.len() - 1
    }

    /// Adds a row after checking that every referenced variable exists and
    /// every coefficient is finite.
    pub fn add_row(&mut self, row: LinearConstraint) -> Result<usize, FormulateError> {
        for (v, c) in &row.terms {
            if *v >= self.vars.len() {
                return Err(FormulateError::BadVariable(*v));
            }
            if !c.is_finite() {
                return Err(FormulateError::NonFinite(format!("row {:?}", row.tag)));
            }
        }
        if !row.rhs.is_finite() {
            return Err(FormulateError::NonFinite(format!("rhs of {:?}", row.tag)));
        }
        if let Some(ind) = row.indicator {
            if ind >= self.vars.len() {
                return Err(FormulateError::BadVariable(ind));
            }
        }
        self.rows.push(row);
        Ok(self.rows.len() - 1)
    }

    pub fn set_objective(&mut self, terms: Vec<(usize, f64)>) -> Result<(), FormulateError> {
        for (v, c) in &terms {
            if *v >= self.vars.len() {
                return Err(FormulateError::BadVariable(*v));
            }
            if !c.is_finite() {
                return Err(FormulateError::NonFinite("objective".into()));
            }
        }
        self.objective = terms;
        Ok(())
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var(&self, v: usize) -> &Variable {
        &self.vars[v]
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[LinearConstraint] {
        &self.rows
    }

    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn sense(&self) -> ObjSense {
        self.sense
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|(v, c)| c * values[*v]).sum()
    }

    /// Whether `values` satisfies every row and every bound within `tol`,
    /// with binaries within `tol` of an integer.
    pub fn is_feasible(&self, values: &[f64], tol: f64) -> bool {
        if values.len() != self.vars.len() {
            return false;
        }
        for (v, var) in self.vars.iter().enumerate() {
            let x = values[v];
            if x < var.lower - tol || x > var.upper + tol {
                return false;
            }
            if var.kind == VarKind::Binary && (x - x.round()).abs() > tol {
                return false;
            }
        }
        self.rows.iter().all(|r| r.satisfied(values, tol))
    }

    /// Checks that a guarded row holds for every choice of the remaining
    /// variables once its indicator is fixed to 0.
    ///
    /// The proof is interval arithmetic over the variable bounds, refined by
    /// one structural fact: deviation variables of a single testpoint are
    /// mutually exclusive, so at most one of them contributes. Rows without
    /// an indicator return `true`.
    pub fn deactivated_row_holds(&self, row: &LinearConstraint) -> bool {
        let Some(ind) = row.indicator else {
            return true;
        };
        let mut worst = 0.0;
        let mut dev_groups: Vec<(usize, f64)> = Vec::new();
        for (v, c) in &row.terms {
            if *v == ind {
                continue;
            }
            let var = &self.vars[*v];
            if let VarTag::Deviate { t, .. } = var.tag {
                // Track the worst single-band contribution per testpoint.
                let w = match row.sense {
                    RowSense::Ge => (c * var.lower).min(c * var.upper).min(0.0),
                    _ => (c * var.lower).max(c * var.upper).max(0.0),
                };
                match dev_groups.iter_mut().find(|(g, _)| *g == t) {
                    Some((_, acc)) => {
                        if row.sense == RowSense::Ge {
                            *acc = acc.min(w);
                        } else {
                            *acc = acc.max(w);
                        }
                    }
                    None => dev_groups.push((t, w)),
                }
                continue;
            }
            worst += match row.sense {
                RowSense::Ge => (c * var.lower).min(c * var.upper),
                _ => (c * var.lower).max(c * var.upper),
            };
        }
        worst += dev_groups.iter().map(|(_, w)| w).sum::<f64>();
        let slack = 1e-9 * (1.0 + row.rhs.abs());
        match row.sense {
            RowSense::Ge => worst >= row.rhs - slack,
            RowSense::Le => worst <= row.rhs + slack,
            RowSense::Eq => false,
        }
    }

    /// Human-readable variable name derived from the tag.
    pub fn var_name(&self, v: usize) -> String {
        match self.vars[v].tag {
            VarTag::TrxPower { s } => format!("p_s{s}"),
            VarTag::Assign { t, s } => format!("x_t{t}_s{s}"),
            VarTag::Claim { t } => format!("z_t{t}"),
            VarTag::Device { j, m } => format!("y_j{j}_m{m}"),
            VarTag::Deny { t } => format!("v_t{t}"),
            VarTag::Deviate { t, band } => {
                if band < 0 {
                    format!("w_t{t}_kn{}", -band)
                } else {
                    format!("w_t{t}_kp{band}")
                }
            }
        }
    }

    fn row_name(&self, r: usize) -> String {
        match self.rows[r].tag {
            RowTag::Coverage { t, s } => format!("cov_t{t}_s{s}"),
            RowTag::SingleServer { t } => format!("one_srv_t{t}"),
            RowTag::JamCondition { t } => format!("jam_t{t}"),
            RowTag::Budget => "budget".into(),
            RowTag::SingleDevice { j } => format!("one_dev_j{j}"),
            RowTag::DenialSupport { t } => format!("deny_t{t}"),
            RowTag::DenialCover { t } => format!("deny_cover_t{t}"),
            RowTag::SingleBand { t } => format!("one_band_t{t}"),
            RowTag::BandUpper { band } => {
                if band < 0 {
                    format!("band_up_kn{}", -band)
                } else {
                    format!("band_up_kp{band}")
                }
            }
            RowTag::BandLower { band } => {
                if band < 0 {
                    format!("band_lo_kn{}", -band)
                } else {
                    format!("band_lo_kp{band}")
                }
            }
            RowTag::NullBandLower => "band_lo_null".into(),
            RowTag::Cut { round } => format!("cut{round}"),
        }
    }

    /// Renders the model as LP-format-style plain text.
    ///
    /// Grammar (one item per line, `E` is a `{:e}`-formatted float):
    ///
    /// ```text
    /// model     := header objective "Subject To" row* "Bounds" bound*
    ///              ("Binaries" name*)? "End"
    /// header    := "\ netjam model export, format 1"
    /// objective := ("Maximize" | "Minimize") " obj:" term*
    /// row       := " " name ":" term* (" <= " | " >= " | " = ") E
    /// term      := (" + " | " - ") E " " name
    /// bound     := " " E " <= " name " <= " E
    /// ```
    ///
    /// Variable and row names are stable across runs for a fixed builder.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        out.push_str("\\ netjam model export, format 1\n");
        out.push_str(match self.sense {
            ObjSense::Maximize => "Maximize\n",
            ObjSense::Minimize => "Minimize\n",
        });
        out.push_str(" obj:");
        self.write_terms(&mut out, &self.objective);
        out.push('\n');
        out.push_str("Subject To\n");
        for (r, row) in self.rows.iter().enumerate() {
            let _ = write!(out, " {}:", self.row_name(r));
            self.write_terms(&mut out, &row.terms);
            let op = match row.sense {
                RowSense::Le => "<=",
                RowSense::Ge => ">=",
                RowSense::Eq => "=",
            };
            let _ = write!(out, " {} {:e}", op, row.rhs);
            out.push('\n');
        }
        out.push_str("Bounds\n");
        for v in 0..self.vars.len() {
            let var = &self.vars[v];
            let _ = write!(
                out,
                " {:e} <= {} <= {:e}\n",
                var.lower,
                self.var_name(v),
                var.upper
            );
        }
        let binaries: Vec<String> = (0..self.vars.len())
            .filter(|&v| self.vars[v].kind == VarKind::Binary)
            .map(|v| self.var_name(v))
            .collect();
        if !binaries.is_empty() {
            out.push_str("Binaries\n ");
            out.push_str(&binaries.join(" "));
            out.push('\n');
        }
        out.push_str("End\n");
        out
    }

    fn write_terms(&self, out: &mut String, terms: &[(usize, f64)]) {
        for (v, c) in terms {
            let sign = if *c < 0.0 { '-' } else { '+' };
            let _ = write!(out, " {} {:e} {}", sign, c.abs(), self.var_name(*v));
        }
    }
}

// ---------------------------------------------------------------------------
// Coverage design model
// ---------------------------------------------------------------------------

/// Coverage-design model together with its variable maps.
#[derive(Debug, Clone)]
pub struct SpapModel {
    pub model: MilpModel,
    /// `power_var[s]` is the emission power variable of transceiver `s`.
    pub power_var: Vec<usize>,
    /// `assign_var[t][s]` is the assignment variable of pair `(t, s)`.
    pub assign_var: Vec<Vec<usize>>,
}

/// Tightest constant deactivating the coverage row of pair `(t, s)`.
///
/// With the assignment off, the row's left side is at worst
/// `-delta * sum(a[t][o] * P_cap, o != s)` (server power at zero, every
/// interferer at the cap), so the constant must cover that plus the
/// threshold-scaled noise.
pub fn big_m_spap(t: usize, s: usize, net: &NetworkInstance) -> f64 {
    let delta = net.sir_threshold();
    let interference_cap: f64 = (0..net.n_trxs())
        .filter(|&o| o != s)
        .map(|o| net.fading(t, o) * net.p_trx_max_mw())
        .sum();
    delta * net.noise_mw() + delta * interference_cap
}

/// Builds the coverage-design model: maximize served revenue subject to one
/// guarded SIR row per (testpoint, transceiver) pair and at most one server
/// per testpoint. Powers are continuous in `[0, p_trx_max]`.
pub fn build_spap(net: &NetworkInstance) -> Result<SpapModel, FormulateError> {
    let mut model = MilpModel::new(ObjSense::Maximize);
    let power_var: Vec<usize> = (0..net.n_trxs())
        .map(|s| model.add_continuous(VarTag::TrxPower { s }, 0.0, net.p_trx_max_mw()))
        .collect();
    let assign_var: Vec<Vec<usize>> = (0..net.n_tps())
        .map(|t| {
            (0..net.n_trxs())
                .map(|s| model.add_binary(VarTag::Assign { t, s }))
                .collect()
        })
        .collect();

    let delta = net.sir_threshold();
    for t in 0..net.n_tps() {
        for s in 0..net.n_trxs() {
            let m_ts = big_m_spap(t, s, net);
            let mut terms = Vec::with_capacity(net.n_trxs() + 1);
            for o in 0..net.n_trxs() {
                let coeff = if o == s {
                    net.fading(t, s)
                } else {
                    -delta * net.fading(t, o)
                };
                terms.push((power_var[o], coeff));
            }
            terms.push((assign_var[t][s], -m_ts));
            model.add_row(LinearConstraint {
                terms,
                sense: RowSense::Ge,
                rhs: delta * net.noise_mw() - m_ts,
                tag: RowTag::Coverage { t, s },
                indicator: Some(assign_var[t][s]),
            })?;
        }
        model.add_row(LinearConstraint {
            terms: (0..net.n_trxs()).map(|s| (assign_var[t][s], 1.0)).collect(),
            sense: RowSense::Le,
            rhs: 1.0,
            tag: RowTag::SingleServer { t },
            indicator: None,
        })?;
    }

    let objective = (0..net.n_tps())
        .flat_map(|t| {
            let revenue = net.testpoints()[t].revenue;
            (0..net.n_trxs()).map(move |s| (t, s, revenue))
        })
        .map(|(t, s, revenue)| (assign_var[t][s], revenue))
        .collect();
    model.set_objective(objective)?;
    Ok(SpapModel {
        model,
        power_var,
        assign_var,
    })
}

impl SpapModel {
    /// Extracts the coverage design encoded by a solution vector of this
    /// model: transceiver powers from the continuous variables and each
    /// testpoint's server from its rounded assignment variables.
    pub fn design_from_solution(
        &self,
        net: &NetworkInstance,
        values: &[f64],
    ) -> Result<NetworkDesign, FormulateError> {
        if values.len() != self.model.n_vars() {
            return Err(FormulateError::BadInput(format!(
                "solution has {} values, model has {} variables",
                values.len(),
                self.model.n_vars()
            )));
        }
        let powers: Vec<f64> = self
            .power_var
            .iter()
            .map(|&v| values[v].clamp(0.0, net.p_trx_max_mw()))
            .collect();
        let server: Vec<Option<usize>> = self
            .assign_var
            .iter()
            .map(|row| row.iter().position(|&v| values[v] >= 0.5))
            .collect();
        Ok(NetworkDesign::from_assignment(net, powers, server)?)
    }

    /// Encodes a feasible design as a solution vector of this model,
    /// suitable as a branch-and-bound warm start.
    pub fn warm_start(&self, design: &NetworkDesign) -> Vec<f64> {
        let mut values = vec![0.0; self.model.n_vars()];
        for (s, &v) in self.power_var.iter().enumerate() {
            values[v] = design.powers_mw()[s];
        }
        for (t, row) in self.assign_var.iter().enumerate() {
            if let Some(s) = design.server(t) {
                values[row[s]] = 1.0;
            }
        }
        values
    }
}

// ---------------------------------------------------------------------------
// Jammer placement model
// ---------------------------------------------------------------------------

/// Whether a placement model treats balance estimates as certain or as
/// uncertain within a multiband set.
#[derive(Debug, Clone, Copy)]
pub enum NjpMode<'a> {
    Nominal,
    Robust(&'a MultibandSet),
}

/// Jammer-placement model together with its variable maps.
#[derive(Debug, Clone)]
pub struct NjpModel {
    pub model: MilpModel,
    /// `claim_var[t]` marks served testpoint `t` as jammed.
    pub claim_var: Vec<usize>,
    /// `device_var[j][m]` activates typology `m` at site `j`.
    pub device_var: Vec<Vec<usize>>,
}

/// Tightest constant deactivating the jamming row of testpoint `t`.
///
/// Nominal mode covers the estimated balance plus the strictness margin;
/// robust mode additionally covers the worst positive balance deviation so
/// the row stays deactivatable in any cutting-plane round.
pub fn big_m_njp(t: usize, ji: &JammingInstance, mode: NjpMode<'_>) -> f64 {
    let base = ji.nominal_balance_mw(t) + ji.epsilon_mw();
    match mode {
        NjpMode::Nominal => base.max(0.0),
        NjpMode::Robust(mb) => (base + mb.worst_positive(t)).max(0.0),
    }
}

/// Builds the jammer-placement model: maximize the profit of claimed
/// testpoints subject to a guarded jamming row per testpoint, the budget and
/// at most one typology per site.
pub fn build_njp(ji: &JammingInstance, mode: NjpMode<'_>) -> Result<NjpModel, FormulateError> {
    if let NjpMode::Robust(mb) = mode {
        if mb.n_tps() != ji.n_tps() {
            return Err(FormulateError::BadInput(format!(
                "uncertainty set covers {} testpoints, instance has {}",
                mb.n_tps(),
                ji.n_tps()
            )));
        }
    }
    let mut model = MilpModel::new(ObjSense::Maximize);
    let claim_var: Vec<usize> = (0..ji.n_tps())
        .map(|t| model.add_binary(VarTag::Claim { t }))
        .collect();
    let device_var: Vec<Vec<usize>> = (0..ji.n_sites())
        .map(|j| {
            (0..ji.n_typologies())
                .map(|m| model.add_binary(VarTag::Device { j, m }))
                .collect()
        })
        .collect();

    let delta = ji.sir_threshold();
    for t in 0..ji.n_tps() {
        let m_t = big_m_njp(t, ji, mode);
        let mut terms = Vec::with_capacity(ji.n_sites() * ji.n_typologies() + 1);
        for j in 0..ji.n_sites() {
            for m in 0..ji.n_typologies() {
                terms.push((
                    device_var[j][m],
                    delta * ji.jam_fading(t, j) * ji.device_powers_mw()[m],
                ));
            }
        }
        terms.push((claim_var[t], -m_t));
        model.add_row(LinearConstraint {
            terms,
            sense: RowSense::Ge,
            rhs: ji.nominal_balance_mw(t) + ji.epsilon_mw() - m_t,
            tag: RowTag::JamCondition { t },
            indicator: Some(claim_var[t]),
        })?;
    }

    let budget_terms: Vec<(usize, f64)> = (0..ji.n_sites())
        .flat_map(|j| (0..ji.n_typologies()).map(move |m| (j, m)))
        .map(|(j, m)| (device_var[j][m], ji.cost(j, m)))
        .collect();
    model.add_row(LinearConstraint {
        terms: budget_terms,
        sense: RowSense::Le,
        rhs: ji.budget(),
        tag: RowTag::Budget,
        indicator: None,
    })?;

    for j in 0..ji.n_sites() {
        model.add_row(LinearConstraint {
            terms: (0..ji.n_typologies())
                .map(|m| (device_var[j][m], 1.0))
                .collect(),
            sense: RowSense::Le,
            rhs: 1.0,
            tag: RowTag::SingleDevice { j },
            indicator: None,
        })?;
    }

    model.set_objective(
        (0..ji.n_tps())
            .map(|t| (claim_var[t], ji.profit(t)))
            .collect(),
    )?;
    Ok(NjpModel {
        model,
        claim_var,
        device_var,
    })
}

impl NjpModel {
    /// Encodes a placement and its claim set as a solution vector of this
    /// model, suitable as a branch-and-bound warm start.
    pub fn warm_start(&self, activation: &[Option<usize>], claimed: &[bool]) -> Vec<f64> {
        let mut values = vec![0.0; self.model.n_vars()];
        for (t, &c) in claimed.iter().enumerate() {
            if c {
                values[self.claim_var[t]] = 1.0;
            }
        }
        for (j, &choice) in activation.iter().enumerate() {
            if let Some(m) = choice {
                values[self.device_var[j][m]] = 1.0;
            }
        }
        values
    }
}

// ---------------------------------------------------------------------------
// Separation model
// ---------------------------------------------------------------------------

/// Which testpoints the adversary may deny.
///
/// `ClaimedOnly` restricts the separation to testpoints the incumbent claims,
/// which makes every generated cut remove the incumbent. `AllServed` keeps
/// the full served set in scope; denials of unclaimed testpoints then
/// inflate the adversary value without touching the incumbent, so cuts may
/// fail to separate. `ClaimedOnly` is the default everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SepScope {
    #[default]
    ClaimedOnly,
    AllServed,
}

/// Separation model together with its variable maps.
#[derive(Debug, Clone)]
pub struct SepModel {
    pub model: MilpModel,
    /// Testpoints in scope, ascending instance order.
    pub scope_tps: Vec<usize>,
    /// `deny_var[i]` marks `scope_tps[i]` as denied.
    pub deny_var: Vec<usize>,
    /// `dev_var[i][b]` puts `scope_tps[i]` in the `b`-th nonzero band (bands
    /// ordered `-k_neg, .., -1, 1, .., k_pos`).
    pub dev_var: Vec<Vec<usize>>,
}

/// Tightest constant deactivating the denial row of testpoint `t` against
/// jamming power `jam_mw`: the gap left by the most negative deviation.
pub fn big_m_sep(t: usize, jam_mw: f64, ji: &JammingInstance, mb: &MultibandSet) -> f64 {
    (jam_mw - ji.nominal_balance_mw(t) - mb.most_negative(t)).max(0.0)
}

/// Builds the separation model for an incumbent placement.
///
/// The adversary maximizes the number of denied in-scope testpoints. Denial
/// of `t` requires its balance deviation to reach the incumbent's jamming
/// power at `t` minus the strictness margin (a strict excess, closed with
/// [`SEP_STRICTNESS_TAU_MW`]); deviations pick at most one nonzero band per
/// testpoint and obey the per-band cardinality bounds, with lower bounds
/// clamped to the scope size.
pub fn build_sep(
    activation: &[Option<usize>],
    claimed: &[bool],
    ji: &JammingInstance,
    mb: &MultibandSet,
    scope: SepScope,
) -> Result<SepModel, FormulateError> {
    if claimed.len() != ji.n_tps() {
        return Err(FormulateError::BadInput(format!(
            "claim vector covers {} testpoints, instance has {}",
            claimed.len(),
            ji.n_tps()
        )));
    }
    if mb.n_tps() != ji.n_tps() {
        return Err(FormulateError::BadInput(format!(
            "uncertainty set covers {} testpoints, instance has {}",
            mb.n_tps(),
            ji.n_tps()
        )));
    }
    let scope_tps: Vec<usize> = match scope {
        SepScope::ClaimedOnly => (0..ji.n_tps()).filter(|&t| claimed[t]).collect(),
        SepScope::AllServed => (0..ji.n_tps()).collect(),
    };

    let mut model = MilpModel::new(ObjSense::Maximize);
    let deny_var: Vec<usize> = scope_tps
        .iter()
        .map(|&t| model.add_binary(VarTag::Deny { t }))
        .collect();
    let bands = mb.nonzero_bands();
    let dev_var: Vec<Vec<usize>> = scope_tps
        .iter()
        .map(|&t| {
            bands
                .iter()
                .map(|&k| model.add_binary(VarTag::Deviate { t, band: k }))
                .collect()
        })
        .collect();

    let n_scope = scope_tps.len();
    for (i, &t) in scope_tps.iter().enumerate() {
        let jam = jam_power(t, activation, ji)?;
        let m_t = big_m_sep(t, jam, ji, mb);
        let gap = jam - ji.nominal_balance_mw(t) - ji.epsilon_mw() + SEP_STRICTNESS_TAU_MW;
        let mut terms: Vec<(usize, f64)> = bands
            .iter()
            .enumerate()
            .map(|(b, &k)| (dev_var[i][b], mb.threshold(t, k)))
            .collect();
        terms.push((deny_var[i], -m_t));
        model.add_row(LinearConstraint {
            terms,
            sense: RowSense::Ge,
            rhs: gap - m_t,
            tag: RowTag::DenialSupport { t },
            indicator: Some(deny_var[i]),
        })?;
        // Denial needs a band whose threshold reaches the gap (unless the
        // null band already does). The row repeats what the support row
        // says at integral points but keeps the relaxation from carrying
        // near-one denial values backed by no band.
        if gap > 0.0 {
            let mut cover: Vec<(usize, f64)> = bands
                .iter()
                .enumerate()
                .filter(|&(_, &k)| mb.threshold(t, k) >= gap)
                .map(|(b, _)| (dev_var[i][b], 1.0))
                .collect();
            cover.push((deny_var[i], -1.0));
            model.add_row(LinearConstraint {
                terms: cover,
                sense: RowSense::Ge,
                rhs: 0.0,
                tag: RowTag::DenialCover { t },
                indicator: None,
            })?;
        }
        model.add_row(LinearConstraint {
            terms: (0..bands.len()).map(|b| (dev_var[i][b], 1.0)).collect(),
            sense: RowSense::Le,
            rhs: 1.0,
            tag: RowTag::SingleBand { t },
            indicator: None,
        })?;
    }

    for (b, &k) in bands.iter().enumerate() {
        let column: Vec<(usize, f64)> = (0..n_scope).map(|i| (dev_var[i][b], 1.0)).collect();
        model.add_row(LinearConstraint {
            terms: column.clone(),
            sense: RowSense::Le,
            rhs: mb.upper_bound(k) as f64,
            tag: RowTag::BandUpper { band: k },
            indicator: None,
        })?;
        let lower = mb.lower_bound(k).min(n_scope);
        if lower > 0 {
            model.add_row(LinearConstraint {
                terms: column,
                sense: RowSense::Ge,
                rhs: lower as f64,
                tag: RowTag::BandLower { band: k },
                indicator: None,
            })?;
        }
    }
    // A null-band lower bound caps how many testpoints may deviate at all.
    let null_lower = mb.lower_bound(0).min(n_scope);
    if null_lower > 0 {
        model.add_row(LinearConstraint {
            terms: (0..n_scope)
                .flat_map(|i| (0..bands.len()).map(move |b| (i, b)))
                .map(|(i, b)| (dev_var[i][b], 1.0))
                .collect(),
            sense: RowSense::Le,
            rhs: (n_scope - null_lower) as f64,
            tag: RowTag::NullBandLower,
            indicator: None,
        })?;
    }

    model.set_objective((0..n_scope).map(|i| (deny_var[i], 1.0)).collect())?;
    Ok(SepModel {
        model,
        scope_tps,
        deny_var,
        dev_var,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{db_to_linear, JammerSite, JammingInstance, NetworkInstance, Testpoint, Trx};
    use crate::robust::{BandBounds, MultibandSet};

    fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn small_net() -> NetworkInstance {
        NetworkInstance::new(
            vec![
                Testpoint { id: 0, x_m: 0.0, y_m: 0.0, revenue: 1.0 },
                Testpoint { id: 1, x_m: 1.0, y_m: 0.0, revenue: 2.0 },
            ],
            vec![
                Trx { id: 0, x_m: 0.0, y_m: 1.0 },
                Trx { id: 1, x_m: 1.0, y_m: 1.0 },
                Trx { id: 2, x_m: 2.0, y_m: 1.0 },
            ],
            vec![0.5, 0.25, 0.125, 0.2, 0.4, 0.1],
            2.0,
            3.0,
            5.0,
        )
        .expect("valid instance")
    }

    fn single_tp_jamming() -> JammingInstance {
        JammingInstance::new(
            vec![JammerSite { id: 0, x_m: 0.0, y_m: 0.0, costs: vec![1.0, 2.0] }],
            vec![db_to_linear(20.0), db_to_linear(27.0)],
            vec![db_to_linear(-77.0)],
            vec![0],
            2.0,
            vec![1.0],
            vec![1e-5],
            1e-8,
            db_to_linear(10.0),
            db_to_linear(-114.0),
        )
        .expect("valid jamming instance")
    }

    fn example_bands(ji: &JammingInstance) -> MultibandSet {
        MultibandSet::from_thresholds(
            vec![vec![-9e-6, -6.837722339831622e-6, 2.1622776601683787e-5, 9e-5]],
            2,
            2,
            BandBounds::Uniform {
                upper: ji.n_tps(),
                lower: 0,
            },
            ji.n_tps(),
        )
        .expect("valid set")
    }

    // -- coverage model -------------------------------------------------------

    #[test]
    fn spap_shape_matches_instance() {
        let net = small_net();
        let spap = build_spap(&net).expect("builds");
        assert_eq!(spap.model.n_vars(), 3 + 2 * 3);
        assert_eq!(spap.model.n_rows(), 2 * 3 + 2);
        assert_eq!(spap.model.objective().len(), 6);
        assert_eq!(spap.model.sense(), ObjSense::Maximize);
    }

    #[test]
    fn spap_big_m_with_no_interferers_is_threshold_scaled_noise() {
        let net = NetworkInstance::new(
            vec![Testpoint { id: 0, x_m: 0.0, y_m: 0.0, revenue: 1.0 }],
            vec![Trx { id: 0, x_m: 0.0, y_m: 0.0 }],
            vec![0.5],
            2.0,
            3.0,
            5.0,
        )
        .expect("valid");
        assert!(approx_eq(big_m_spap(0, 0, &net), 6.0, 1e-12));
    }

    #[test]
    fn spap_big_m_with_two_interferers_matches_hand_value() {
        let net = small_net();
        // t = 0, s = 0: delta*noise + delta*(0.25 + 0.125)*cap = 6 + 3*0.375*5.
        assert!(approx_eq(big_m_spap(0, 0, &net), 6.0 + 5.625, 1e-12));
    }

    #[test]
    fn spap_rows_deactivate_cleanly() {
        let net = small_net();
        let spap = build_spap(&net).expect("builds");
        for row in spap.model.rows() {
            assert!(
                spap.model.deactivated_row_holds(row),
                "row {:?} is not vacuous at indicator 0",
                row.tag
            );
        }
    }

    #[test]
    fn spap_feasibility_check_accepts_a_served_assignment() {
        let net = small_net();
        let spap = build_spap(&net).expect("builds");
        // Serve t0 from s0 at full power, everything else off.
        let mut values = vec![0.0; spap.model.n_vars()];
        values[spap.power_var[0]] = 5.0;
        values[spap.assign_var[0][0]] = 1.0;
        // Balance: 0.5*5 - 3*0 - 3*2 = -3.5 < 0, so this must be infeasible.
        assert!(!spap.model.is_feasible(&values, 1e-9));
        // With lower noise the same assignment becomes coverable.
        let fading: Vec<f64> = (0..2)
            .flat_map(|t| (0..3).map(move |s| (t, s)))
            .map(|(t, s)| net.fading(t, s))
            .collect();
        let net2 = NetworkInstance::new(
            net.testpoints().to_vec(),
            net.trxs().to_vec(),
            fading,
            0.1,
            3.0,
            5.0,
        )
        .expect("valid");
        let spap2 = build_spap(&net2).expect("builds");
        let mut values2 = vec![0.0; spap2.model.n_vars()];
        values2[spap2.power_var[0]] = 5.0;
        values2[spap2.assign_var[0][0]] = 1.0;
        assert!(spap2.model.is_feasible(&values2, 1e-9));
    }

    // -- placement model ------------------------------------------------------

    #[test]
    fn njp_shape_and_nominal_big_m() {
        let ji = single_tp_jamming();
        let njp = build_njp(&ji, NjpMode::Nominal).expect("builds");
        assert_eq!(njp.model.n_vars(), 1 + 2);
        assert_eq!(njp.model.n_rows(), 1 + 1 + 1);
        assert!(approx_eq(big_m_njp(0, &ji, NjpMode::Nominal), 1e-5 + 1e-8, 1e-20));
    }

    #[test]
    fn njp_robust_big_m_adds_worst_positive_deviation() {
        let ji = single_tp_jamming();
        let mb = example_bands(&ji);
        let m = big_m_njp(0, &ji, NjpMode::Robust(&mb));
        assert!(approx_eq(m, 1e-5 + 9e-5 + 1e-8, 1e-18), "got {m}");
    }

    #[test]
    fn njp_rows_deactivate_cleanly() {
        let ji = single_tp_jamming();
        let mb = example_bands(&ji);
        for mode in [NjpMode::Nominal, NjpMode::Robust(&mb)] {
            let njp = build_njp(&ji, mode).expect("builds");
            for row in njp.model.rows() {
                assert!(
                    njp.model.deactivated_row_holds(row),
                    "row {:?} is not vacuous at indicator 0",
                    row.tag
                );
            }
        }
    }

    #[test]
    fn njp_accepts_weak_device_claim() {
        let ji = single_tp_jamming();
        let njp = build_njp(&ji, NjpMode::Nominal).expect("builds");
        let mut values = vec![0.0; njp.model.n_vars()];
        values[njp.claim_var[0]] = 1.0;
        values[njp.device_var[0][0]] = 1.0;
        assert!(njp.model.is_feasible(&values, 1e-12));
        assert!(approx_eq(njp.model.objective_value(&values), 1.0, 1e-12));
        // Claiming without any device must violate the jamming row.
        values[njp.device_var[0][0]] = 0.0;
        assert!(!njp.model.is_feasible(&values, 1e-12));
    }

    // -- separation model -----------------------------------------------------

    #[test]
    fn sep_big_m_matches_frozen_example() {
        let ji = single_tp_jamming();
        let mb = example_bands(&ji);
        // Strong-device jamming power is 1e-4 mW; the most negative
        // deviation is -9e-6 mW.
        let m = big_m_sep(0, 1e-4, &ji, &mb);
        assert!(approx_eq(m, 9.9e-5, 1e-18), "got {m}");
    }

    #[test]
    fn sep_shape_and_scope() {
        let ji = single_tp_jamming();
        let mb = example_bands(&ji);
        let sep = build_sep(&[Some(0)], &[true], &ji, &mb, SepScope::ClaimedOnly)
            .expect("builds");
        assert_eq!(sep.scope_tps, vec![0]);
        // One denial + four deviation variables.
        assert_eq!(sep.model.n_vars(), 5);
        // Denial row, denial-cover row, single-band row, four band-upper
        // rows.
        assert_eq!(sep.model.n_rows(), 3 + 4);
        let unclaimed = build_sep(&[Some(0)], &[false], &ji, &mb, SepScope::ClaimedOnly)
            .expect("builds");
        assert_eq!(unclaimed.scope_tps.len(), 0);
        let all = build_sep(&[Some(0)], &[false], &ji, &mb, SepScope::AllServed)
            .expect("builds");
        assert_eq!(all.scope_tps, vec![0]);
    }

    #[test]
    fn sep_rows_deactivate_cleanly() {
        let ji = single_tp_jamming();
        let mb = example_bands(&ji);
        let sep = build_sep(&[Some(1)], &[true], &ji, &mb, SepScope::ClaimedOnly)
            .expect("builds");
        for row in sep.model.rows() {
            assert!(
                sep.model.deactivated_row_holds(row),
                "row {:?} is not vacuous at indicator 0",
                row.tag
            );
        }
    }

    #[test]
    fn sep_denial_requires_a_sufficient_band() {
        let ji = single_tp_jamming();
        let mb = example_bands(&ji);
        // Weak device: jamming power 10^(-4.7), margin over the balance is
        // about 9.95e-6, within reach of band +1 (2.16e-5).
        let sep = build_sep(&[Some(0)], &[true], &ji, &mb, SepScope::ClaimedOnly)
            .expect("builds");
        let mut values = vec![0.0; sep.model.n_vars()];
        values[sep.deny_var[0]] = 1.0;
        values[sep.dev_var[0][2]] = 1.0; // band +1
        assert!(sep.model.is_feasible(&values, 1e-15));
        // Denial without any deviation must fail.
        values[sep.dev_var[0][2]] = 0.0;
        assert!(!sep.model.is_feasible(&values, 1e-15));
        // A negative band cannot support denial either.
        values[sep.dev_var[0][0]] = 1.0;
        assert!(!sep.model.is_feasible(&values, 1e-15));
    }

    // -- export ---------------------------------------------------------------

    #[test]
    fn lp_export_contains_expected_sections_and_names() {
        let ji = single_tp_jamming();
        let njp = build_njp(&ji, NjpMode::Nominal).expect("builds");
        let text = njp.model.to_lp_format();
        assert!(text.starts_with("\\ netjam model export, format 1\n"));
        assert!(text.contains("Maximize"));
        assert!(text.contains("Subject To"));
        assert!(text.contains("jam_t0:"));
        assert!(text.contains("budget:"));
        assert!(text.contains("one_dev_j0:"));
        assert!(text.contains("z_t0"));
        assert!(text.contains("y_j0_m1"));
        assert!(text.contains("Binaries"));
        assert!(text.ends_with("End\n"));
    }

    #[test]
    fn lp_export_is_deterministic() {
        let ji = single_tp_jamming();
        let a = build_njp(&ji, NjpMode::Nominal).expect("builds").model.to_lp_format();
        let b = build_njp(&ji, NjpMode::Nominal).expect("builds").model.to_lp_format();
        assert_eq!(a, b);
    }
}
