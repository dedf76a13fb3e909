//! Command-line surface: scenario generation, coverage design, jammer
//! placement, batch experiments and plan auditing.
//!
//! Verbs:
//! - `generate`: write a seeded synthetic scenario file.
//! - `design`: solve the coverage design for a scenario and write it.
//! - `jam`: place jamming devices (nominal or robust) and write a report.
//! - `audit`: re-verify a report against its scenario and design.
//! - `batch`: run the whole pipeline over many seeds/specs into a CSV.
//!
//! Exit codes: 0 success, 2 validation error, 3 a node/time limit truncated
//! a search (result files are still written), 4 solver or audit failure.

use crate::files::{self, FileError, ReportData};
use crate::instgen::{self, GenError, GenParams, Scenario};
use crate::milp::{BbOptions, BbStatus, SolveError};
use crate::netmodel::{is_jammed, JammingInstance, ModelError, NetworkDesign};
use crate::robust::{
    self, make_bands, BandBounds, MultibandSet, PlanOptions, RobustError, RobustRunReport,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};
use thiserror::Error;

pub const BATCH_SCHEMA: &str = "netjam-batch/1";

/// Fixed header of every report CSV.
pub const CSV_HEADER: &str = "ID,|T|,|S|,|T*|,|J|,#JAM(Nom),#JAM(Rob),PoR%,#Cuts,wall-seconds";

/// Relative tolerance for re-checking profits and costs during audits.
const AUDIT_MONEY_TOL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

/// A command failure carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, bad files, infeasible parameter combinations.
    #[error("{0}")]
    Input(String),
    /// A node or time limit truncated a search; partial results were
    /// written where possible.
    #[error("{0}")]
    Limit(String),
    /// The solver failed, or a produced plan did not withstand auditing.
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Limit(_) => 3,
            CliError::Solver(_) => 4,
        }
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::IterationLimit(_) => CliError::Limit(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<RobustError> for CliError {
    fn from(e: RobustError) -> Self {
        match e {
            RobustError::Model(m) => m.into(),
            RobustError::Formulate(f) => CliError::Input(f.to_string()),
            RobustError::Solve(s) => s.into(),
            RobustError::InvalidBands(_) | RobustError::TooLarge(_) => {
                CliError::Input(e.to_string())
            }
            RobustError::AuditFailed(_) => CliError::Solver(e.to_string()),
        }
    }
}

// ---------------------------------------------------------------------------
// Argument grammar
// ---------------------------------------------------------------------------

/// Wireless-network jamming workbench: generate scenarios, design coverage,
/// place jamming devices nominally or robustly, and audit the results.
#[derive(Debug, Parser)]
#[command(name = "netjam", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic scenario file.
    Generate(GenerateArgs),
    /// Solve the coverage design for a scenario and write the design file.
    Design(DesignArgs),
    /// Place jamming devices against a designed network; write a report.
    Jam(JamArgs),
    /// Re-verify a placement report against its scenario and design.
    Audit(AuditArgs),
    /// Run generate/design/jam over many seeds or a run-spec file into CSV.
    Batch(BatchArgs),
}

#[derive(Debug, Args, Clone)]
pub struct GenFlags {
    /// Seed of the scenario's random stream.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Number of testpoints (uniform grid).
    #[arg(long, default_value_t = 100)]
    pub tps: usize,
    /// Number of transceivers.
    #[arg(long, default_value_t = 10)]
    pub trxs: usize,
    /// Number of candidate jammer sites.
    #[arg(long, default_value_t = 15)]
    pub jammers: usize,
    /// Number of jamming-device typologies (1-3).
    #[arg(long, default_value_t = 3)]
    pub typologies: usize,
    /// Side of the square service area in meters
    /// [default: 100 * sqrt(tps), one 100 m cell per testpoint].
    #[arg(long)]
    pub area: Option<f64>,
    /// Budget as a fraction of the summed cheapest-typology costs.
    #[arg(long = "budget-frac", default_value_t = 0.5)]
    pub budget_frac: f64,
}

impl GenFlags {
    fn params(&self) -> GenParams {
        GenParams {
            seed: self.seed,
            n_tps: self.tps,
            n_trxs: self.trxs,
            n_sites: self.jammers,
            n_typologies: self.typologies,
            area_m: self.area.unwrap_or_else(|| instgen::default_area_m(self.tps)),
            budget_fraction: self.budget_frac,
            ..GenParams::default()
        }
    }
}

#[derive(Debug, Args, Clone)]
pub struct SolveFlags {
    /// Stop branch-and-bound after this many nodes.
    #[arg(long = "node-limit")]
    pub node_limit: Option<usize>,
    /// Stop branch-and-bound after this many seconds.
    #[arg(long = "time-limit", value_name = "SECONDS")]
    pub time_limit: Option<f64>,
    /// Accept incumbents within this relative optimality gap.
    #[arg(long, default_value_t = 0.0)]
    pub gap: f64,
}

impl SolveFlags {
    fn bb_options(&self) -> BbOptions {
        BbOptions {
            node_limit: self.node_limit,
            time_limit: self.time_limit.map(Duration::from_secs_f64),
            relative_gap: self.gap,
            ..BbOptions::default()
        }
    }
}

/// Numbers of negative and positive deviation bands, parsed from `N+P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandCounts {
    pub neg: usize,
    pub pos: usize,
}

fn parse_band_counts(s: &str) -> Result<BandCounts, String> {
    let (neg, pos) = s
        .split_once('+')
        .ok_or_else(|| format!("expected N+P (for example 2+2), got {s:?}"))?;
    let neg: usize = neg
        .trim()
        .parse()
        .map_err(|_| format!("bad negative band count in {s:?}"))?;
    let pos: usize = pos
        .trim()
        .parse()
        .map_err(|_| format!("bad positive band count in {s:?}"))?;
    if neg == 0 || pos == 0 {
        return Err("need at least one band on each side".to_string());
    }
    Ok(BandCounts { neg, pos })
}

#[derive(Debug, Args, Clone)]
pub struct BandFlags {
    /// Half-width of the deviation range as a fraction of the balance's
    /// decibel magnitude.
    #[arg(long = "band-frac", default_value_t = 0.2)]
    pub band_frac: f64,
    /// Negative+positive deviation band counts.
    #[arg(long, default_value = "2+2", value_parser = parse_band_counts)]
    pub bands: BandCounts,
    /// Override the per-band cardinality upper bound
    /// [default: ceil(|T*| / bands)].
    #[arg(long = "band-upper")]
    pub band_upper: Option<usize>,
    /// Override the per-band cardinality lower bound [default: 0].
    #[arg(long = "band-lower")]
    pub band_lower: Option<usize>,
}

impl BandFlags {
    fn build(&self, ji: &JammingInstance) -> Result<MultibandSet, CliError> {
        let bounds = uniform_bounds(
            ji.n_tps(),
            self.bands,
            self.band_lower,
            self.band_upper,
        );
        Ok(make_bands(
            ji.nominal_balances_mw(),
            self.band_frac,
            self.bands.neg,
            self.bands.pos,
            Some(bounds),
        )?)
    }
}

fn uniform_bounds(
    n_tps: usize,
    bands: BandCounts,
    lower: Option<usize>,
    upper: Option<usize>,
) -> BandBounds {
    let default_cap = n_tps.div_ceil(bands.neg + bands.pos);
    BandBounds::Uniform {
        lower: lower.unwrap_or(0),
        upper: upper.unwrap_or(default_cap),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Trust the balance estimates exactly.
    Nominal,
    /// Guard the plan against estimate deviations inside the multiband set.
    Robust,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub gen: GenFlags,
    /// Output scenario file (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Scenario file produced by `generate`.
    pub scenario: PathBuf,
    /// Output design file (JSON).
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub solve: SolveFlags,
}

#[derive(Debug, Args)]
pub struct JamArgs {
    /// Scenario file produced by `generate`.
    pub scenario: PathBuf,
    /// Design file produced by `design`.
    pub design: PathBuf,
    /// Placement mode.
    #[arg(long, value_enum, default_value_t = Mode::Robust)]
    pub mode: Mode,
    #[command(flatten)]
    pub bands: BandFlags,
    #[command(flatten)]
    pub solve: SolveFlags,
    /// Output report file (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Scenario file the report was produced from.
    pub scenario: PathBuf,
    /// Design file the report was produced from.
    pub design: PathBuf,
    /// Report file to verify.
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// Run-spec file (JSON, schema netjam-batch/1) with one entry per row;
    /// mutually exclusive with --seeds.
    #[arg(long, conflicts_with = "seeds")]
    pub spec: Option<PathBuf>,
    /// Seeds for rows sharing the generation flags: a single number, a
    /// comma list (1,2,3) or an inclusive range (1-15).
    #[arg(long)]
    pub seeds: Option<String>,
    #[command(flatten)]
    pub gen: GenFlags,
    #[command(flatten)]
    pub bands: BandFlags,
    #[command(flatten)]
    pub solve: SolveFlags,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
    /// Keep per-row scenario/design/report files in this directory.
    #[arg(long)]
    pub dir: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// CSV rows
// ---------------------------------------------------------------------------

/// One result row of the fixed report table.
#[derive(Debug, Clone)]
pub struct RowResult {
    pub id: String,
    pub n_tps: usize,
    pub n_trxs: usize,
    pub n_served: usize,
    pub n_sites: usize,
    pub jam_nominal: usize,
    /// `None` for nominal-only runs.
    pub jam_robust: Option<usize>,
    pub por_pct: Option<f64>,
    pub cuts: usize,
    pub wall_s: f64,
    /// Whether any solve in the row was truncated by a limit.
    pub truncated: bool,
}

fn csv_row(r: &RowResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{:.2}",
        r.id,
        r.n_tps,
        r.n_trxs,
        r.n_served,
        r.n_sites,
        r.jam_nominal,
        r.jam_robust.map_or_else(|| "NA".into(), |v| v.to_string()),
        r.por_pct.map_or_else(|| "NA".into(), |v| format!("{v:.2}")),
        r.cuts,
        r.wall_s,
    )
}

fn mean_line(rows: &[RowResult]) -> String {
    fn mean(values: impl Iterator<Item = f64>, count: usize) -> Option<f64> {
        (count > 0).then(|| values.sum::<f64>() / count as f64)
    }
    let n = rows.len();
    let fmt = |v: Option<f64>| v.map_or_else(|| "NA".into(), |v| format!("{v:.2}"));
    let nominal = mean(rows.iter().map(|r| r.jam_nominal as f64), n);
    let robust_rows: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.jam_robust.map(|v| v as f64))
        .collect();
    let robust = mean(robust_rows.iter().copied(), robust_rows.len());
    let por_rows: Vec<f64> = rows.iter().filter_map(|r| r.por_pct).collect();
    let por = mean(por_rows.iter().copied(), por_rows.len());
    let cuts = mean(rows.iter().map(|r| r.cuts as f64), n);
    let wall = mean(rows.iter().map(|r| r.wall_s), n);
    format!(
        "MEAN,,,,,{},{},{},{},{}",
        fmt(nominal),
        fmt(robust),
        fmt(por),
        fmt(cuts),
        fmt(wall)
    )
}

// ---------------------------------------------------------------------------
// Command bodies
// ---------------------------------------------------------------------------

/// Runs a parsed command line. Messages go to stdout; the error (if any)
/// carries the process exit code.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => cmd_generate(&args),
        Command::Design(args) => cmd_design(&args),
        Command::Jam(args) => cmd_jam(&args),
        Command::Audit(args) => cmd_audit(&args),
        Command::Batch(args) => cmd_batch(&args),
    }
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let scenario = instgen::generate(&args.gen.params())?;
    files::save_scenario(&args.out, &scenario)?;
    println!(
        "scenario: |T|={} |S|={} |J|={} typologies={} budget={:.3} seed={} -> {}",
        scenario.net.n_tps(),
        scenario.net.n_trxs(),
        scenario.sites.len(),
        scenario.device_powers_mw.len(),
        scenario.budget,
        scenario.seed,
        args.out.display()
    );
    Ok(())
}

fn cmd_design(args: &DesignArgs) -> Result<(), CliError> {
    let scenario = files::load_scenario(&args.scenario)?;
    let (design, status) = robust::solve_design(&scenario.net, &args.solve.bb_options())?;
    files::save_design(&args.out, &scenario, &design)?;
    let revenue: f64 = design
        .served()
        .iter()
        .map(|&t| scenario.net.testpoints()[t].revenue)
        .sum();
    println!(
        "design: |T*|={} of {} (revenue {:.3}) -> {}",
        design.n_served(),
        scenario.net.n_tps(),
        revenue,
        args.out.display()
    );
    if status == BbStatus::BudgetExhausted {
        return Err(CliError::Limit(format!(
            "design search truncated by the node/time limit; best design written to {}",
            args.out.display()
        )));
    }
    Ok(())
}

fn load_pipeline_inputs(
    scenario_path: &Path,
    design_path: &Path,
) -> Result<(Scenario, NetworkDesign, JammingInstance), CliError> {
    let scenario = files::load_scenario(scenario_path)?;
    let design = files::load_design(design_path, &scenario.net)?;
    let ji = instgen::jamming_instance(&scenario, &design)?;
    Ok((scenario, design, ji))
}

fn cmd_jam(args: &JamArgs) -> Result<(), CliError> {
    let (scenario, design, ji) = load_pipeline_inputs(&args.scenario, &args.design)?;
    let options = PlanOptions {
        bb: args.solve.bb_options(),
        ..PlanOptions::default()
    };
    let (report, row) = match args.mode {
        Mode::Nominal => {
            let started = Instant::now();
            let (plan, status) = robust::solve_nominal(&ji, &options.bb)?;
            let wall = started.elapsed();
            let row = RowResult {
                id: format!("S{}", scenario.seed),
                n_tps: scenario.net.n_tps(),
                n_trxs: scenario.net.n_trxs(),
                n_served: design.n_served(),
                n_sites: ji.n_sites(),
                jam_nominal: plan.claim_count(),
                jam_robust: None,
                por_pct: None,
                cuts: 0,
                wall_s: wall.as_secs_f64(),
                truncated: status == BbStatus::BudgetExhausted,
            };
            let report = ReportData {
                served_tp_ids: ji.served_tp_ids().to_vec(),
                nominal: plan,
                nominal_status: status,
                robust: None,
                bands: None,
                cuts: Vec::new(),
                price_of_robustness_pct: None,
                wall_seconds: wall.as_secs_f64(),
            };
            (report, row)
        }
        Mode::Robust => {
            let mb = args.bands.build(&ji)?;
            let run = robust::plan_jamming(&ji, &mb, &options)?;
            let row = robust_row(format!("S{}", scenario.seed), &scenario, &design, &ji, &run);
            (report_data(&ji, mb, run), row)
        }
    };
    files::save_report(&args.out, &report)?;
    println!("{CSV_HEADER}");
    println!("{}", csv_row(&row));
    println!("report -> {}", args.out.display());
    if row.truncated {
        return Err(CliError::Limit(format!(
            "placement search truncated by the node/time limit; report written to {}",
            args.out.display()
        )));
    }
    Ok(())
}

fn robust_row(
    id: String,
    scenario: &Scenario,
    design: &NetworkDesign,
    ji: &JammingInstance,
    run: &RobustRunReport,
) -> RowResult {
    RowResult {
        id,
        n_tps: scenario.net.n_tps(),
        n_trxs: scenario.net.n_trxs(),
        n_served: design.n_served(),
        n_sites: ji.n_sites(),
        jam_nominal: run.nominal.claim_count(),
        jam_robust: Some(run.robust.claim_count()),
        por_pct: run.price_of_robustness_pct,
        cuts: run.cuts.len(),
        wall_s: run.wall.as_secs_f64(),
        truncated: run.nominal_status == BbStatus::BudgetExhausted
            || run.robust_status == BbStatus::BudgetExhausted,
    }
}

fn report_data(ji: &JammingInstance, mb: MultibandSet, run: RobustRunReport) -> ReportData {
    ReportData {
        served_tp_ids: ji.served_tp_ids().to_vec(),
        nominal: run.nominal,
        nominal_status: run.nominal_status,
        robust: Some((run.robust, run.robust_status)),
        bands: Some(mb),
        cuts: run.cuts,
        price_of_robustness_pct: run.price_of_robustness_pct,
        wall_seconds: run.wall.as_secs_f64(),
    }
}

fn cmd_audit(args: &AuditArgs) -> Result<(), CliError> {
    let (_, _, ji) = load_pipeline_inputs(&args.scenario, &args.design)?;
    let report = files::load_report(&args.report)?;
    if report.served_tp_ids != ji.served_tp_ids() {
        return Err(CliError::Input(
            "report serves different testpoints than the scenario/design pair".into(),
        ));
    }
    audit_plan(&report.nominal, &ji, "nominal")?;
    println!(
        "audit: nominal plan ok ({} claims, cost {:.3})",
        report.nominal.claim_count(),
        report.nominal.cost
    );
    if let Some((robust_plan, _)) = &report.robust {
        let mb = report.bands.as_ref().ok_or_else(|| {
            CliError::Input("robust report lacks its uncertainty set".into())
        })?;
        if mb.n_tps() != ji.n_tps() {
            return Err(CliError::Input(format!(
                "uncertainty set covers {} testpoints, instance has {}",
                mb.n_tps(),
                ji.n_tps()
            )));
        }
        audit_plan(robust_plan, &ji, "robust")?;
        match robust::audit_robust(&robust_plan.activation, &robust_plan.claimed, &ji, mb) {
            Ok(true) => {}
            Ok(false) => {
                return Err(CliError::Solver(
                    "robust plan loses a claimed testpoint under an admissible deviation".into(),
                ))
            }
            Err(e) => return Err(e.into()),
        }
        println!(
            "audit: robust plan ok ({} claims, cost {:.3}) under every admissible deviation",
            robust_plan.claim_count(),
            robust_plan.cost
        );
    }
    println!("audit passed");
    Ok(())
}

fn audit_plan(
    plan: &robust::JamPlan,
    ji: &JammingInstance,
    label: &str,
) -> Result<(), CliError> {
    if plan.activation.len() != ji.n_sites() || plan.claimed.len() != ji.n_tps() {
        return Err(CliError::Input(format!(
            "{label} plan dimensions do not match the instance"
        )));
    }
    let cost = ji.activation_cost(&plan.activation);
    if (cost - plan.cost).abs() > AUDIT_MONEY_TOL * (1.0 + cost.abs()) {
        return Err(CliError::Solver(format!(
            "{label} plan states cost {} but the activations cost {cost}",
            plan.cost
        )));
    }
    if cost > ji.budget() * (1.0 + AUDIT_MONEY_TOL) {
        return Err(CliError::Solver(format!(
            "{label} plan cost {cost} exceeds the budget {}",
            ji.budget()
        )));
    }
    let profit: f64 = (0..ji.n_tps())
        .filter(|&t| plan.claimed[t])
        .map(|t| ji.profit(t))
        .sum();
    if (profit - plan.profit).abs() > AUDIT_MONEY_TOL * (1.0 + profit.abs()) {
        return Err(CliError::Solver(format!(
            "{label} plan states profit {} but the claims yield {profit}",
            plan.profit
        )));
    }
    for t in 0..ji.n_tps() {
        if plan.claimed[t] && !is_jammed(t, &plan.activation, ji.nominal_balance_mw(t), ji)? {
            return Err(CliError::Solver(format!(
                "{label} plan claims testpoint {t} but does not jam it at the nominal balance"
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Batch
// ---------------------------------------------------------------------------

fn default_typologies() -> usize {
    3
}
fn default_budget_frac() -> f64 {
    0.5
}
fn default_band_frac() -> f64 {
    0.2
}
fn default_bands() -> String {
    "2+2".to_string()
}

/// One row of a batch run-spec file. Omitted fields take the same defaults
/// as the corresponding flags.
#[derive(Debug, Clone, Deserialize)]
struct RunSpec {
    #[serde(default)]
    id: Option<String>,
    seed: u64,
    tps: usize,
    trxs: usize,
    jammers: usize,
    #[serde(default = "default_typologies")]
    typologies: usize,
    #[serde(default)]
    area: Option<f64>,
    #[serde(default = "default_budget_frac")]
    budget_frac: f64,
    #[serde(default = "default_band_frac")]
    band_frac: f64,
    #[serde(default = "default_bands")]
    bands: String,
    #[serde(default)]
    band_lower: Option<usize>,
    #[serde(default)]
    band_upper: Option<usize>,
    #[serde(default)]
    node_limit: Option<usize>,
    #[serde(default)]
    time_limit: Option<f64>,
    #[serde(default)]
    gap: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct BatchFile {
    schema: String,
    runs: Vec<RunSpec>,
}

impl RunSpec {
    fn id(&self) -> String {
        self.id.clone().unwrap_or_else(|| format!("S{}", self.seed))
    }

    fn gen_flags(&self) -> GenFlags {
        GenFlags {
            seed: self.seed,
            tps: self.tps,
            trxs: self.trxs,
            jammers: self.jammers,
            typologies: self.typologies,
            area: self.area,
            budget_frac: self.budget_frac,
        }
    }

    fn band_flags(&self) -> Result<BandFlags, CliError> {
        Ok(BandFlags {
            band_frac: self.band_frac,
            bands: parse_band_counts(&self.bands).map_err(CliError::Input)?,
            band_upper: self.band_upper,
            band_lower: self.band_lower,
        })
    }

    fn solve_flags(&self) -> SolveFlags {
        SolveFlags {
            node_limit: self.node_limit,
            time_limit: self.time_limit,
            gap: self.gap.unwrap_or(0.0),
        }
    }
}

fn parse_seed_list(s: &str) -> Result<Vec<u64>, CliError> {
    let s = s.trim();
    let parse_one = |v: &str| -> Result<u64, CliError> {
        v.trim()
            .parse()
            .map_err(|_| CliError::Input(format!("bad seed {v:?}")))
    };
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once('-') {
        let (a, b) = (parse_one(a)?, parse_one(b)?);
        if a > b {
            return Err(CliError::Input(format!("empty seed range {s:?}")));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(parse_one).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(CliError::Input("no seeds given".into()));
    }
    Ok(seeds)
}

fn batch_runs(args: &BatchArgs) -> Result<Vec<RunSpec>, CliError> {
    let runs: Vec<RunSpec> = if let Some(spec_path) = &args.spec {
        let text = std::fs::read_to_string(spec_path)
            .map_err(|e| CliError::Input(format!("{}: {e}", spec_path.display())))?;
        let file: BatchFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", spec_path.display())))?;
        if file.schema != BATCH_SCHEMA {
            return Err(CliError::Input(format!(
                "unexpected schema: expected {BATCH_SCHEMA}, found {}",
                file.schema
            )));
        }
        file.runs
    } else if let Some(seeds) = &args.seeds {
        parse_seed_list(seeds)?
            .into_iter()
            .map(|seed| RunSpec {
                id: None,
                seed,
                tps: args.gen.tps,
                trxs: args.gen.trxs,
                jammers: args.gen.jammers,
                typologies: args.gen.typologies,
                area: args.gen.area,
                budget_frac: args.gen.budget_frac,
                band_frac: args.bands.band_frac,
                bands: format!("{}+{}", args.bands.bands.neg, args.bands.bands.pos),
                band_lower: args.bands.band_lower,
                band_upper: args.bands.band_upper,
                node_limit: args.solve.node_limit,
                time_limit: args.solve.time_limit,
                gap: Some(args.solve.gap),
            })
            .collect()
    } else {
        return Err(CliError::Input("need either --spec or --seeds".into()));
    };
    if runs.is_empty() {
        return Err(CliError::Input("the batch has no runs".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for run in &runs {
        if !seen.insert(run.seed) {
            return Err(CliError::Input(format!(
                "duplicate seed {} in the batch",
                run.seed
            )));
        }
    }
    Ok(runs)
}

/// Full pipeline for one batch row: generate, design, robust jam.
fn run_row(spec: &RunSpec, artifacts: Option<&Path>) -> Result<RowResult, CliError> {
    let id = spec.id();
    let scenario = instgen::generate(&spec.gen_flags().params())?;
    let solve = spec.solve_flags();
    let (design, design_status) = robust::solve_design(&scenario.net, &solve.bb_options())?;
    let ji = instgen::jamming_instance(&scenario, &design)?;
    let mb = spec.band_flags()?.build(&ji)?;
    let options = PlanOptions {
        bb: solve.bb_options(),
        ..PlanOptions::default()
    };
    let run = robust::plan_jamming(&ji, &mb, &options)?;
    let mut row = robust_row(id.clone(), &scenario, &design, &ji, &run);
    row.truncated |= design_status == BbStatus::BudgetExhausted;
    if let Some(dir) = artifacts {
        files::save_scenario(&dir.join(format!("{id}-scenario.json")), &scenario)?;
        files::save_design(&dir.join(format!("{id}-design.json")), &scenario, &design)?;
        files::save_report(
            &dir.join(format!("{id}-report.json")),
            &report_data(&ji, mb, run),
        )?;
    }
    Ok(row)
}

fn cmd_batch(args: &BatchArgs) -> Result<(), CliError> {
    let runs = batch_runs(args)?;
    if let Some(dir) = &args.dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    }
    let mut rows: Vec<RowResult> = Vec::new();
    let mut worst: Option<CliError> = None;
    for spec in &runs {
        match run_row(spec, args.dir.as_deref()) {
            Ok(row) => {
                println!("{}", csv_row(&row));
                if row.truncated && worst.is_none() {
                    worst = Some(CliError::Limit(format!(
                        "row {} truncated by its node/time limit",
                        row.id
                    )));
                }
                rows.push(row);
            }
            Err(e) => {
                eprintln!("row {} failed: {e}", spec.id());
                let escalate = worst
                    .as_ref()
                    .map_or(true, |w| e.exit_code() > w.exit_code());
                if escalate {
                    worst = Some(e);
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(worst.unwrap_or_else(|| CliError::Solver("every batch row failed".into())));
    }
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&csv_row(row));
        csv.push('\n');
    }
    csv.push_str(&mean_line(&rows));
    csv.push('\n');
    files::write_text_atomic(&args.out, &csv)?;
    let mean_por = {
        let vals: Vec<f64> = rows.iter().filter_map(|r| r.por_pct).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    println!(
        "batch: {} of {} rows ok, mean PoR% = {} -> {}",
        rows.len(),
        runs.len(),
        mean_por.map_or_else(|| String::from("NA"), |v| format!("{v:.2}")),
        args.out.display()
    );
    match worst {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_counts_parse_and_reject() {
        assert_eq!(
            parse_band_counts("2+2").unwrap(),
            BandCounts { neg: 2, pos: 2 }
        );
        assert_eq!(
            parse_band_counts("1+3").unwrap(),
            BandCounts { neg: 1, pos: 3 }
        );
        assert!(parse_band_counts("4").is_err());
        assert!(parse_band_counts("0+2").is_err());
        assert!(parse_band_counts("a+b").is_err());
    }

    #[test]
    fn seed_lists_parse_in_all_forms() {
        assert_eq!(parse_seed_list("7").unwrap(), vec![7]);
        assert_eq!(parse_seed_list("1,2,9").unwrap(), vec![1, 2, 9]);
        assert_eq!(parse_seed_list("3-6").unwrap(), vec![3, 4, 5, 6]);
        assert!(parse_seed_list("6-3").is_err());
        assert!(parse_seed_list("x").is_err());
    }

    #[test]
    fn csv_rows_follow_the_fixed_layout() {
        let row = RowResult {
            id: "I1".into(),
            n_tps: 100,
            n_trxs: 6,
            n_served: 65,
            n_sites: 15,
            jam_nominal: 12,
            jam_robust: Some(9),
            por_pct: Some(-25.0),
            cuts: 3,
            wall_s: 1.234,
            truncated: false,
        };
        assert_eq!(csv_row(&row), "I1,100,6,65,15,12,9,-25.00,3,1.23");
        let nominal_only = RowResult {
            jam_robust: None,
            por_pct: None,
            ..row
        };
        assert_eq!(
            csv_row(&nominal_only),
            "I1,100,6,65,15,12,NA,NA,3,1.23"
        );
        assert_eq!(
            CSV_HEADER,
            "ID,|T|,|S|,|T*|,|J|,#JAM(Nom),#JAM(Rob),PoR%,#Cuts,wall-seconds"
        );
    }

    #[test]
    fn mean_line_averages_numeric_columns() {
        let base = RowResult {
            id: "a".into(),
            n_tps: 1,
            n_trxs: 1,
            n_served: 1,
            n_sites: 1,
            jam_nominal: 2,
            jam_robust: Some(1),
            por_pct: Some(-50.0),
            cuts: 1,
            wall_s: 1.0,
            truncated: false,
        };
        let other = RowResult {
            id: "b".into(),
            jam_nominal: 4,
            jam_robust: Some(3),
            por_pct: Some(-25.0),
            cuts: 3,
            wall_s: 3.0,
            ..base.clone()
        };
        assert_eq!(
            mean_line(&[base, other]),
            "MEAN,,,,,3.00,2.00,-37.50,2.00,2.00"
        );
    }

    #[test]
    fn exit_codes_match_the_documented_contract() {
        assert_eq!(CliError::Input("x".into()).exit_code(), 2);
        assert_eq!(CliError::Limit("x".into()).exit_code(), 3);
        assert_eq!(CliError::Solver("x".into()).exit_code(), 4);
        let e: CliError = SolveError::IterationLimit(9).into();
        assert_eq!(e.exit_code(), 3);
        let e: CliError = SolveError::Numerical("bad".into()).into();
        assert_eq!(e.exit_code(), 4);
        let e: CliError = RobustError::AuditFailed("bad".into()).into();
        assert_eq!(e.exit_code(), 4);
        let e: CliError = RobustError::InvalidBands("bad".into()).into();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn uniform_bounds_default_to_the_band_share_cap() {
        let b = uniform_bounds(10, BandCounts { neg: 2, pos: 2 }, None, None);
        match b {
            BandBounds::Uniform { lower, upper } => {
                assert_eq!(lower, 0);
                assert_eq!(upper, 3, "ceil(10/4)");
            }
            other => panic!("unexpected bounds {other:?}"),
        }
        let b = uniform_bounds(10, BandCounts { neg: 2, pos: 2 }, Some(1), Some(0));
        match b {
            BandBounds::Uniform { lower, upper } => {
                assert_eq!(lower, 1);
                assert_eq!(upper, 0);
            }
            other => panic!("unexpected bounds {other:?}"),
        }
    }

    #[test]
    fn cli_grammar_parses_representative_lines() {
        let cli = Cli::try_parse_from([
            "netjam", "generate", "--seed", "42", "--tps", "100", "--trxs", "6", "--jammers",
            "15", "--out", "sc.json",
        ])
        .expect("parses");
        match cli.command {
            Command::Generate(a) => {
                assert_eq!(a.gen.seed, 42);
                assert_eq!(a.gen.tps, 100);
                assert_eq!(a.gen.trxs, 6);
                assert_eq!(a.gen.jammers, 15);
            }
            other => panic!("unexpected command {other:?}"),
        }
        let cli = Cli::try_parse_from([
            "netjam", "jam", "sc.json", "d.json", "--mode", "nominal", "--band-frac", "0.3",
            "--bands", "1+2", "--node-limit", "10", "--time-limit", "1.5", "--out", "r.json",
        ])
        .expect("parses");
        match cli.command {
            Command::Jam(a) => {
                assert_eq!(a.mode, Mode::Nominal);
                assert_eq!(a.bands.band_frac, 0.3);
                assert_eq!(a.bands.bands, BandCounts { neg: 1, pos: 2 });
                assert_eq!(a.solve.node_limit, Some(10));
                assert_eq!(a.solve.time_limit, Some(1.5));
            }
            other => panic!("unexpected command {other:?}"),
        }
        assert!(Cli::try_parse_from(["netjam", "jam", "--bands", "nope"]).is_err());
    }
}
