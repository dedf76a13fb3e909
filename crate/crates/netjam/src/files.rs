//! JSON persistence for scenarios, coverage designs and placement reports.
//!
//! Every file begins with a `schema` string (`netjam-<kind>/<version>`) that
//! loads are checked against. Power quantities are stored as tagged decibel
//! objects (`{"value": -114.0, "unit": "dBmW"}`) so units survive on disk; a
//! power of zero milliwatts has no decibel form and is stored as `null`.
//! Dimensionless gains (fading) stay linear. Writes go through a sibling
//! temp file and an atomic rename, so readers never observe half-written
//! JSON.

use crate::instgen::Scenario;
use crate::milp::BbStatus;
use crate::netmodel::{
    db_to_linear, linear_to_db, JammerSite, ModelError, NetworkDesign, NetworkInstance, Testpoint,
    Trx,
};
use crate::robust::{BandBounds, CutRecord, JamPlan, MultibandSet};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write as _;
use std::path::Path;
use thiserror::Error;

pub const SCENARIO_SCHEMA: &str = "netjam-scenario/1";
pub const DESIGN_SCHEMA: &str = "netjam-design/1";
pub const REPORT_SCHEMA: &str = "netjam-report/1";

const DBMW_UNIT: &str = "dBmW";
const DB_UNIT: &str = "dB";

/// Errors raised while reading or writing instance files.
#[derive(Debug, Error)]
pub enum FileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("unexpected schema: {0}")]
    Schema(String),
    #[error("bad file contents: {0}")]
    Data(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

// ---------------------------------------------------------------------------
// Tagged quantities
// ---------------------------------------------------------------------------

/// A decibel quantity with an explicit unit tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbTag {
    pub value: f64,
    pub unit: String,
}

fn power_to_tag(mw: f64) -> Result<Option<DbTag>, FileError> {
    if mw == 0.0 {
        return Ok(None);
    }
    Ok(Some(DbTag {
        value: linear_to_db(mw)?,
        unit: DBMW_UNIT.to_string(),
    }))
}

fn power_from_tag(tag: &Option<DbTag>, what: &str) -> Result<f64, FileError> {
    match tag {
        None => Ok(0.0),
        Some(t) if t.unit == DBMW_UNIT => Ok(db_to_linear(t.value)),
        Some(t) => Err(FileError::Data(format!(
            "{what}: expected unit {DBMW_UNIT}, got {}",
            t.unit
        ))),
    }
}

fn ratio_to_tag(v: f64) -> Result<DbTag, FileError> {
    Ok(DbTag {
        value: linear_to_db(v)?,
        unit: DB_UNIT.to_string(),
    })
}

fn ratio_from_tag(tag: &DbTag, what: &str) -> Result<f64, FileError> {
    if tag.unit != DB_UNIT {
        return Err(FileError::Data(format!(
            "{what}: expected unit {DB_UNIT}, got {}",
            tag.unit
        )));
    }
    Ok(db_to_linear(tag.value))
}

fn required_power(tag: &Option<DbTag>, what: &str) -> Result<f64, FileError> {
    let mw = power_from_tag(tag, what)?;
    if mw == 0.0 {
        return Err(FileError::Data(format!("{what}: must be positive")));
    }
    Ok(mw)
}

/// A gain matrix stored in decibels with an explicit unit tag; a linear
/// gain of zero has no decibel form and is stored as `null`.
#[derive(Debug, Serialize, Deserialize)]
struct GainMatrixDto {
    unit: String,
    /// One row per testpoint.
    rows_db: Vec<Vec<Option<f64>>>,
}

fn gains_to_dto(
    n_rows: usize,
    n_cols: usize,
    gain: impl Fn(usize, usize) -> f64,
) -> Result<GainMatrixDto, FileError> {
    let mut rows_db = Vec::with_capacity(n_rows);
    for t in 0..n_rows {
        let mut row = Vec::with_capacity(n_cols);
        for c in 0..n_cols {
            let g = gain(t, c);
            row.push(if g == 0.0 { None } else { Some(linear_to_db(g)?) });
        }
        rows_db.push(row);
    }
    Ok(GainMatrixDto {
        unit: DB_UNIT.to_string(),
        rows_db,
    })
}

fn gains_from_dto(
    dto: &GainMatrixDto,
    n_rows: usize,
    n_cols: usize,
    what: &str,
) -> Result<Vec<f64>, FileError> {
    if dto.unit != DB_UNIT {
        return Err(FileError::Data(format!(
            "{what}: expected unit {DB_UNIT}, got {}",
            dto.unit
        )));
    }
    if dto.rows_db.len() != n_rows {
        return Err(FileError::Data(format!(
            "{what}: {} rows, expected {n_rows}",
            dto.rows_db.len()
        )));
    }
    let mut flat = Vec::with_capacity(n_rows * n_cols);
    for (t, row) in dto.rows_db.iter().enumerate() {
        if row.len() != n_cols {
            return Err(FileError::Data(format!(
                "{what}: row {t} has {} entries, expected {n_cols}",
                row.len()
            )));
        }
        flat.extend(row.iter().map(|v| v.map_or(0.0, db_to_linear)));
    }
    Ok(flat)
}

// ---------------------------------------------------------------------------
// Atomic writes
// ---------------------------------------------------------------------------

fn write_atomic(path: &Path, contents: &str) -> Result<(), FileError> {
    let file_name = path
        .file_name()
        .ok_or_else(|| FileError::Data(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".partial");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes plain text through the same temp-file-and-rename path used for
/// JSON documents, so readers never observe a half-written file.
pub fn write_text_atomic(path: &Path, contents: &str) -> Result<(), FileError> {
    write_atomic(path, contents)
}

fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FileError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, &text)
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, FileError> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn check_schema(found: &str, expected: &str) -> Result<(), FileError> {
    if found == expected {
        Ok(())
    } else {
        Err(FileError::Schema(format!(
            "expected {expected}, found {found}"
        )))
    }
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct TestpointDto {
    id: u32,
    x_m: f64,
    y_m: f64,
    revenue: f64,
    profit: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrxDto {
    id: u32,
    x_m: f64,
    y_m: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SiteDto {
    id: u32,
    x_m: f64,
    y_m: f64,
    costs: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    schema: String,
    seed: u64,
    noise: DbTag,
    sir_threshold: DbTag,
    p_trx_max: Option<DbTag>,
    testpoints: Vec<TestpointDto>,
    trxs: Vec<TrxDto>,
    sites: Vec<SiteDto>,
    device_powers: Vec<Option<DbTag>>,
    budget: f64,
    /// Transceiver-to-testpoint gains.
    fading: GainMatrixDto,
    /// Site-to-testpoint gains.
    jam_fading: GainMatrixDto,
}

/// Writes a scenario to `path` as schema-tagged JSON.
pub fn save_scenario(path: &Path, scenario: &Scenario) -> Result<(), FileError> {
    let net = &scenario.net;
    let file = ScenarioFile {
        schema: SCENARIO_SCHEMA.to_string(),
        seed: scenario.seed,
        noise: DbTag {
            value: linear_to_db(net.noise_mw())?,
            unit: DBMW_UNIT.to_string(),
        },
        sir_threshold: ratio_to_tag(net.sir_threshold())?,
        p_trx_max: power_to_tag(net.p_trx_max_mw())?,
        testpoints: net
            .testpoints()
            .iter()
            .enumerate()
            .map(|(t, tp)| TestpointDto {
                id: tp.id,
                x_m: tp.x_m,
                y_m: tp.y_m,
                revenue: tp.revenue,
                profit: scenario.profits[t],
            })
            .collect(),
        trxs: net
            .trxs()
            .iter()
            .map(|trx| TrxDto {
                id: trx.id,
                x_m: trx.x_m,
                y_m: trx.y_m,
            })
            .collect(),
        sites: scenario
            .sites
            .iter()
            .map(|s| SiteDto {
                id: s.id,
                x_m: s.x_m,
                y_m: s.y_m,
                costs: s.costs.clone(),
            })
            .collect(),
        device_powers: scenario
            .device_powers_mw
            .iter()
            .map(|&p| power_to_tag(p))
            .collect::<Result<_, _>>()?,
        budget: scenario.budget,
        fading: gains_to_dto(net.n_tps(), net.n_trxs(), |t, s| net.fading(t, s))?,
        jam_fading: gains_to_dto(net.n_tps(), scenario.sites.len(), |t, j| {
            scenario.jam_fading[t * scenario.sites.len() + j]
        })?,
    };
    save_json(path, &file)
}

/// Loads and validates a scenario written by [`save_scenario`].
pub fn load_scenario(path: &Path) -> Result<Scenario, FileError> {
    let file: ScenarioFile = load_json(path)?;
    check_schema(&file.schema, SCENARIO_SCHEMA)?;
    let n_tps = file.testpoints.len();
    let n_trxs = file.trxs.len();
    let n_sites = file.sites.len();
    let fading = gains_from_dto(&file.fading, n_tps, n_trxs, "fading")?;
    let jam_fading = gains_from_dto(&file.jam_fading, n_tps, n_sites, "jam fading")?;
    let testpoints: Vec<Testpoint> = file
        .testpoints
        .iter()
        .map(|d| Testpoint {
            id: d.id,
            x_m: d.x_m,
            y_m: d.y_m,
            revenue: d.revenue,
        })
        .collect();
    let trxs: Vec<Trx> = file
        .trxs
        .iter()
        .map(|d| Trx {
            id: d.id,
            x_m: d.x_m,
            y_m: d.y_m,
        })
        .collect();
    let net = NetworkInstance::new(
        testpoints,
        trxs,
        fading,
        power_from_tag(&Some(file.noise.clone()), "noise")?,
        ratio_from_tag(&file.sir_threshold, "sir_threshold")?,
        required_power(&file.p_trx_max, "p_trx_max")?,
    )?;
    Ok(Scenario {
        net,
        sites: file
            .sites
            .iter()
            .map(|d| JammerSite {
                id: d.id,
                x_m: d.x_m,
                y_m: d.y_m,
                costs: d.costs.clone(),
            })
            .collect(),
        device_powers_mw: file
            .device_powers
            .iter()
            .map(|t| required_power(t, "device power"))
            .collect::<Result<_, _>>()?,
        budget: file.budget,
        profits: file.testpoints.iter().map(|d| d.profit).collect(),
        jam_fading,
        seed: file.seed,
    })
}

// ---------------------------------------------------------------------------
// Design files
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct DesignFile {
    schema: String,
    /// Emission power per transceiver, scenario order; `null` means off.
    trx_powers: Vec<Option<DbTag>>,
    /// Serving transceiver id per testpoint, scenario order.
    server: Vec<Option<u32>>,
    /// Exact coverage balance per testpoint (informational; recomputed on
    /// load).
    balances: Vec<Option<DbTag>>,
    /// Perturbed balance estimate per testpoint: what the placement stage
    /// will treat as nominal (informational; recomputed on load).
    balance_estimates: Vec<Option<DbTag>>,
}

fn optional_power_tag(mw: Option<f64>) -> Result<Option<DbTag>, FileError> {
    match mw {
        Some(v) if v > 0.0 => Ok(Some(DbTag {
            value: linear_to_db(v)?,
            unit: DBMW_UNIT.to_string(),
        })),
        _ => Ok(None),
    }
}

/// Writes a coverage design to `path` as schema-tagged JSON, including the
/// scenario-seeded balance estimates the placement stage will use.
pub fn save_design(
    path: &Path,
    scenario: &Scenario,
    design: &NetworkDesign,
) -> Result<(), FileError> {
    let net = &scenario.net;
    let estimates = crate::instgen::balance_estimates(scenario, design)
        .map_err(|e| FileError::Data(format!("balance estimates: {e}")))?;
    let file = DesignFile {
        schema: DESIGN_SCHEMA.to_string(),
        trx_powers: design
            .powers_mw()
            .iter()
            .map(|&p| power_to_tag(p))
            .collect::<Result<_, _>>()?,
        server: (0..net.n_tps())
            .map(|t| design.server(t).map(|s| net.trxs()[s].id))
            .collect(),
        balances: (0..net.n_tps())
            .map(|t| optional_power_tag(design.balance_mw(t)))
            .collect::<Result<_, FileError>>()?,
        balance_estimates: estimates
            .iter()
            .map(|&e| optional_power_tag(e))
            .collect::<Result<_, FileError>>()?,
    };
    save_json(path, &file)
}

/// Loads a coverage design for `net`, revalidating feasibility and
/// recomputing balances.
pub fn load_design(path: &Path, net: &NetworkInstance) -> Result<NetworkDesign, FileError> {
    let file: DesignFile = load_json(path)?;
    check_schema(&file.schema, DESIGN_SCHEMA)?;
    if file.trx_powers.len() != net.n_trxs() {
        return Err(FileError::Data(format!(
            "design has {} transceiver powers, scenario has {}",
            file.trx_powers.len(),
            net.n_trxs()
        )));
    }
    if file.server.len() != net.n_tps() {
        return Err(FileError::Data(format!(
            "design assigns {} testpoints, scenario has {}",
            file.server.len(),
            net.n_tps()
        )));
    }
    let powers: Vec<f64> = file
        .trx_powers
        .iter()
        .enumerate()
        .map(|(s, tag)| power_from_tag(tag, &format!("transceiver {s} power")))
        .collect::<Result<_, _>>()?;
    let server: Vec<Option<usize>> = file
        .server
        .iter()
        .enumerate()
        .map(|(t, id)| match id {
            None => Ok(None),
            Some(id) => net
                .trxs()
                .iter()
                .position(|trx| trx.id == *id)
                .map(Some)
                .ok_or_else(|| {
                    FileError::Data(format!("testpoint {t} serves unknown transceiver id {id}"))
                }),
        })
        .collect::<Result<_, _>>()?;
    Ok(NetworkDesign::from_assignment(net, powers, server)?)
}

// ---------------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PlanDto {
    /// Installed typology index per site, scenario order; `null` = nothing.
    activation: Vec<Option<usize>>,
    /// Claim flag per served testpoint, instance order.
    claimed: Vec<bool>,
    profit: f64,
    cost: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct BandsDto {
    k_neg: usize,
    k_pos: usize,
    /// Deviation thresholds per served testpoint over the nonzero bands in
    /// ascending band order, linear milliwatts (signed).
    thresholds_mw: Vec<Vec<f64>>,
    /// Cardinality lower bounds for bands `-k_neg ..= k_pos`.
    lower: Vec<usize>,
    /// Cardinality upper bounds for bands `-k_neg ..= k_pos`.
    upper: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CutDto {
    round: usize,
    adversary_value: usize,
    denied: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportFile {
    schema: String,
    mode: String,
    /// Ids of the served testpoints the placement instance ranges over.
    served_tp_ids: Vec<u32>,
    nominal: PlanDto,
    nominal_status: String,
    robust: Option<PlanDto>,
    robust_status: Option<String>,
    bands: Option<BandsDto>,
    cuts: Vec<CutDto>,
    price_of_robustness_pct: Option<f64>,
    wall_seconds: f64,
}

/// In-memory form of a placement report file.
#[derive(Debug, Clone)]
pub struct ReportData {
    pub served_tp_ids: Vec<u32>,
    pub nominal: JamPlan,
    pub nominal_status: BbStatus,
    /// Present exactly for robust runs.
    pub robust: Option<(JamPlan, BbStatus)>,
    /// The uncertainty set of a robust run.
    pub bands: Option<MultibandSet>,
    pub cuts: Vec<CutRecord>,
    pub price_of_robustness_pct: Option<f64>,
    pub wall_seconds: f64,
}

fn status_to_str(status: BbStatus) -> &'static str {
    match status {
        BbStatus::Optimal => "optimal",
        BbStatus::Infeasible => "infeasible",
        BbStatus::BudgetExhausted => "budget-exhausted",
    }
}

fn status_from_str(s: &str) -> Result<BbStatus, FileError> {
    match s {
        "optimal" => Ok(BbStatus::Optimal),
        "infeasible" => Ok(BbStatus::Infeasible),
        "budget-exhausted" => Ok(BbStatus::BudgetExhausted),
        other => Err(FileError::Data(format!("unknown solve status {other:?}"))),
    }
}

fn plan_to_dto(plan: &JamPlan) -> PlanDto {
    PlanDto {
        activation: plan.activation.clone(),
        claimed: plan.claimed.clone(),
        profit: plan.profit,
        cost: plan.cost,
    }
}

fn plan_from_dto(dto: &PlanDto) -> JamPlan {
    JamPlan {
        activation: dto.activation.clone(),
        claimed: dto.claimed.clone(),
        profit: dto.profit,
        cost: dto.cost,
    }
}

fn bands_to_dto(mb: &MultibandSet) -> BandsDto {
    let nonzero = mb.nonzero_bands();
    let all_bands = -(mb.k_neg() as i32)..=mb.k_pos() as i32;
    BandsDto {
        k_neg: mb.k_neg(),
        k_pos: mb.k_pos(),
        thresholds_mw: (0..mb.n_tps())
            .map(|t| nonzero.iter().map(|&k| mb.threshold(t, k)).collect())
            .collect(),
        lower: all_bands.clone().map(|k| mb.lower_bound(k)).collect(),
        upper: all_bands.map(|k| mb.upper_bound(k)).collect(),
    }
}

fn bands_from_dto(dto: &BandsDto) -> Result<MultibandSet, FileError> {
    let n_tps = dto.thresholds_mw.len();
    MultibandSet::from_thresholds(
        dto.thresholds_mw.clone(),
        dto.k_neg,
        dto.k_pos,
        BandBounds::Explicit {
            lower: dto.lower.clone(),
            upper: dto.upper.clone(),
        },
        n_tps,
    )
    .map_err(|e| FileError::Data(format!("bands: {e}")))
}

/// Writes a placement report to `path` as schema-tagged JSON.
pub fn save_report(path: &Path, report: &ReportData) -> Result<(), FileError> {
    let file = ReportFile {
        schema: REPORT_SCHEMA.to_string(),
        mode: if report.robust.is_some() {
            "robust".to_string()
        } else {
            "nominal".to_string()
        },
        served_tp_ids: report.served_tp_ids.clone(),
        nominal: plan_to_dto(&report.nominal),
        nominal_status: status_to_str(report.nominal_status).to_string(),
        robust: report.robust.as_ref().map(|(p, _)| plan_to_dto(p)),
        robust_status: report
            .robust
            .as_ref()
            .map(|(_, s)| status_to_str(*s).to_string()),
        bands: report.bands.as_ref().map(bands_to_dto),
        cuts: report
            .cuts
            .iter()
            .map(|c| CutDto {
                round: c.round,
                adversary_value: c.adversary_value,
                denied: c.denied.clone(),
            })
            .collect(),
        price_of_robustness_pct: report.price_of_robustness_pct,
        wall_seconds: report.wall_seconds,
    };
    save_json(path, &file)
}

/// Loads a placement report written by [`save_report`].
pub fn load_report(path: &Path) -> Result<ReportData, FileError> {
    let file: ReportFile = load_json(path)?;
    check_schema(&file.schema, REPORT_SCHEMA)?;
    let robust = match (&file.robust, &file.robust_status) {
        (Some(plan), Some(status)) => Some((plan_from_dto(plan), status_from_str(status)?)),
        (None, None) => None,
        _ => {
            return Err(FileError::Data(
                "robust plan and status must be present together".into(),
            ))
        }
    };
    Ok(ReportData {
        served_tp_ids: file.served_tp_ids,
        nominal: plan_from_dto(&file.nominal),
        nominal_status: status_from_str(&file.nominal_status)?,
        robust,
        bands: file.bands.as_ref().map(bands_from_dto).transpose()?,
        cuts: file
            .cuts
            .iter()
            .map(|c| CutRecord {
                round: c.round,
                adversary_value: c.adversary_value,
                denied: c.denied.clone(),
            })
            .collect(),
        price_of_robustness_pct: file.price_of_robustness_pct,
        wall_seconds: file.wall_seconds,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
