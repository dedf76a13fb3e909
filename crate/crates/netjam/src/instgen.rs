//! Seeded synthetic scenario generation.
//!
//! A scenario covers a square service area: testpoints on a uniform grid,
//! transceivers and candidate jammer sites placed uniformly at random, and
//! log-distance path loss linking every pair. A log-normal population field
//! over the testpoints drives revenues, jamming profits, installation costs
//! and the budget. Given a coverage design for the scenario,
//! [`jamming_instance`] assembles the placement-stage input, replacing each
//! exact balance with a seeded estimate (multiplicative decibel jitter) the
//! way a field-measuring attacker would hold one.
//!
//! All randomness flows from one explicitly seeded stream in a fixed
//! sampling order (population, transceiver positions, site positions, then
//! balance jitter on a derived stream), so equal seeds reproduce scenarios
//! bit for bit.

use crate::netmodel::{
    db_to_linear, default_epsilon_mw, linear_to_db, JammerSite, JammingInstance, ModelError,
    NetworkDesign, NetworkInstance, Testpoint, Trx,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use thiserror::Error;

/// Errors raised during scenario generation.
#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generation parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Relative half-width of the decibel jitter applied to balance estimates.
pub const BALANCE_JITTER: f64 = 0.05;
/// Balances are floored at this multiple of the threshold-scaled noise
/// before decibel conversions, so barely-covered testpoints stay usable.
pub const BALANCE_FLOOR_FACTOR: f64 = 1e-3;
/// Stream offset separating balance jitter from scenario layout sampling.
const JITTER_STREAM_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

/// Knobs for [`generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    /// Seed of the scenario's random stream.
    pub seed: u64,
    /// Number of testpoints (uniform grid over the area).
    pub n_tps: usize,
    /// Number of transceivers (uniform random positions).
    pub n_trxs: usize,
    /// Number of candidate jammer sites (uniform random positions).
    pub n_sites: usize,
    /// Number of device typologies drawn from the power/cost ladders.
    pub n_typologies: usize,
    /// Side of the square service area, meters.
    pub area_m: f64,
    /// Path-loss offset at one meter, dB.
    pub l0_db: f64,
    /// Path-loss exponent.
    pub gamma: f64,
    pub noise_dbmw: f64,
    pub sir_threshold_db: f64,
    pub p_trx_max_dbmw: f64,
    /// Emission power ladder of jamming devices, dBmW, strictly increasing.
    pub device_powers_dbmw: Vec<f64>,
    /// Base installation cost ladder, strictly increasing.
    pub device_base_costs: Vec<f64>,
    /// Budget as a fraction of the summed cheapest-typology costs.
    pub budget_fraction: f64,
    /// Log-normal sigma of the population field.
    pub pop_sigma: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            seed: 1,
            n_tps: 100,
            n_trxs: 10,
            n_sites: 15,
            n_typologies: 3,
            area_m: 1000.0,
            l0_db: 40.0,
            gamma: 3.5,
            noise_dbmw: -114.0,
            sir_threshold_db: 10.0,
            p_trx_max_dbmw: 30.0,
            device_powers_dbmw: vec![20.0, 27.0, 33.0],
            device_base_costs: vec![1.0, 2.0, 4.0],
            budget_fraction: 0.5,
            pop_sigma: 0.8,
        }
    }
}

/// A generated scenario: the coverage-design input plus everything the
/// placement stage will need once a design exists.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub net: NetworkInstance,
    pub sites: Vec<JammerSite>,
    /// Device emission powers, mW, ascending.
    pub device_powers_mw: Vec<f64>,
    pub budget: f64,
    /// Jamming profit per testpoint (full testpoint set).
    pub profits: Vec<f64>,
    /// Site-to-testpoint fading, row-major `n_tps x n_sites`, in [0, 1].
    pub jam_fading: Vec<f64>,
    pub seed: u64,
}

/// Log-distance propagation attenuation `-(l0 + 10 gamma log10(d))` in dB.
pub fn path_loss_db(distance_m: f64, l0_db: f64, gamma: f64) -> Result<f64, GenError> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(GenError::BadParams(format!(
            "path loss needs a positive distance, got {distance_m} m"
        )));
    }
    Ok(-(l0_db + 10.0 * gamma * distance_m.log10()))
}

/// [`path_loss_db`] as a linear gain, clamped into [0, 1] with distances
/// floored at one meter (inside the reference distance the model saturates).
pub fn path_loss_gain(distance_m: f64, l0_db: f64, gamma: f64) -> f64 {
    let db = path_loss_db(distance_m.max(1.0), l0_db, gamma)
        .expect("floored distance is positive");
    db_to_linear(db).clamp(0.0, 1.0)
}

/// Default area side for a testpoint count: one 100 m x 100 m cell per
/// testpoint, keeping territory density constant across instance sizes.
pub fn default_area_m(n_tps: usize) -> f64 {
    100.0 * (n_tps as f64).sqrt()
}

fn distance(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()
}

fn validate(params: &GenParams) -> Result<(), GenError> {
    if params.n_tps == 0 || params.n_trxs == 0 || params.n_sites == 0 {
        return Err(GenError::BadParams(
            "need at least one testpoint, transceiver and site".into(),
        ));
    }
    if params.n_typologies == 0
        || params.n_typologies > params.device_powers_dbmw.len()
        || params.n_typologies > params.device_base_costs.len()
    {
        return Err(GenError::BadParams(format!(
            "typology count {} exceeds the power/cost ladders",
            params.n_typologies
        )));
    }
    if !(params.area_m > 0.0) {
        return Err(GenError::BadParams("area must be positive".into()));
    }
    if !(params.budget_fraction > 0.0) {
        return Err(GenError::BadParams("budget fraction must be positive".into()));
    }
    if !(params.pop_sigma > 0.0) {
        return Err(GenError::BadParams("population sigma must be positive".into()));
    }
    Ok(())
}

/// Generates a scenario from `params`. Equal parameters (including the
/// seed) produce identical scenarios.
pub fn generate(params: &GenParams) -> Result<Scenario, GenError> {
    validate(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // Testpoints on a uniform grid, row-major from the area corner.
    let side = (params.n_tps as f64).sqrt().ceil() as usize;
    let spacing = params.area_m / side as f64;
    let mut raw_pop = Vec::with_capacity(params.n_tps);
    let pop_dist = LogNormal::new(0.0, params.pop_sigma)
        .map_err(|e| GenError::BadParams(format!("population distribution: {e}")))?;
    for _ in 0..params.n_tps {
        raw_pop.push(pop_dist.sample(&mut rng));
    }
    let pop_min = raw_pop.iter().copied().fold(f64::INFINITY, f64::min);
    let pop_max = raw_pop.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm_pop: Vec<f64> = raw_pop
        .iter()
        .map(|&v| {
            if pop_max > pop_min {
                0.1 + 0.9 * (v - pop_min) / (pop_max - pop_min)
            } else {
                1.0
            }
        })
        .collect();
    let testpoints: Vec<Testpoint> = (0..params.n_tps)
        .map(|i| Testpoint {
            id: i as u32,
            x_m: ((i % side) as f64 + 0.5) * spacing,
            y_m: ((i / side) as f64 + 0.5) * spacing,
            revenue: 1.0 + 9.0 * norm_pop[i],
        })
        .collect();

    let trxs: Vec<Trx> = (0..params.n_trxs)
        .map(|i| Trx {
            id: i as u32,
            x_m: rng.gen_range(0.0..params.area_m),
            y_m: rng.gen_range(0.0..params.area_m),
        })
        .collect();
    let site_positions: Vec<(f64, f64)> = (0..params.n_sites)
        .map(|_| {
            (
                rng.gen_range(0.0..params.area_m),
                rng.gen_range(0.0..params.area_m),
            )
        })
        .collect();

    let fading: Vec<f64> = testpoints
        .iter()
        .flat_map(|tp| {
            trxs.iter().map(|trx| {
                path_loss_gain(
                    distance(tp.x_m, tp.y_m, trx.x_m, trx.y_m),
                    params.l0_db,
                    params.gamma,
                )
            })
        })
        .collect();
    let net = NetworkInstance::new(
        testpoints,
        trxs,
        fading,
        db_to_linear(params.noise_dbmw),
        db_to_linear(params.sir_threshold_db),
        db_to_linear(params.p_trx_max_dbmw),
    )?;

    // Installation costs scale with the population around each site.
    let base = &params.device_base_costs[..params.n_typologies];
    let sites: Vec<JammerSite> = site_positions
        .iter()
        .enumerate()
        .map(|(j, &(x, y))| {
            let nearest = net
                .testpoints()
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    distance(a.x_m, a.y_m, x, y).total_cmp(&distance(b.x_m, b.y_m, x, y))
                })
                .map(|(t, _)| t)
                .unwrap_or(0);
            JammerSite {
                id: j as u32,
                x_m: x,
                y_m: y,
                costs: base
                    .iter()
                    .map(|c| c * (1.0 + norm_pop[nearest]))
                    .collect(),
            }
        })
        .collect();
    let budget = params.budget_fraction * sites.iter().map(|s| s.costs[0]).sum::<f64>();

    let jam_fading: Vec<f64> = net
        .testpoints()
        .iter()
        .flat_map(|tp| {
            sites.iter().map(|site| {
                path_loss_gain(
                    distance(tp.x_m, tp.y_m, site.x_m, site.y_m),
                    params.l0_db,
                    params.gamma,
                )
            })
        })
        .collect();
    let profits: Vec<f64> = norm_pop.iter().map(|p| 1.0 + 9.0 * p).collect();
    let device_powers_mw: Vec<f64> = params.device_powers_dbmw[..params.n_typologies]
        .iter()
        .map(|&p| db_to_linear(p))
        .collect();

    Ok(Scenario {
        net,
        sites,
        device_powers_mw,
        budget,
        profits,
        jam_fading,
        seed: params.seed,
    })
}

/// The attacker's balance estimate per testpoint (`None` for unserved
/// ones): the design's exact balance floored at a small positive value and
/// perturbed multiplicatively in the decibel domain. Seeded by the
/// scenario, so reruns agree.
pub fn balance_estimates(
    scenario: &Scenario,
    design: &NetworkDesign,
) -> Result<Vec<Option<f64>>, GenError> {
    let net = &scenario.net;
    let floor = BALANCE_FLOOR_FACTOR * net.sir_threshold() * net.noise_mw();
    let mut jitter_rng =
        ChaCha8Rng::seed_from_u64(scenario.seed.wrapping_add(JITTER_STREAM_OFFSET));
    let mut estimates = Vec::with_capacity(net.n_tps());
    for t in 0..net.n_tps() {
        match design.balance_mw(t) {
            None => estimates.push(None),
            Some(true_balance) => {
                let g = linear_to_db(true_balance.max(floor))?;
                let estimate_db = g * (1.0 + BALANCE_JITTER * jitter_rng.gen_range(-1.0..=1.0));
                estimates.push(Some(db_to_linear(estimate_db)));
            }
        }
    }
    Ok(estimates)
}

/// Assembles the placement-stage instance for a coverage design of the same
/// scenario.
///
/// Served testpoints keep their design balances, floored at a small multiple
/// of the threshold-scaled noise and then perturbed multiplicatively in the
/// decibel domain (seeded by the scenario, so reruns agree). The strictness
/// margin defaults from the resulting estimates.
pub fn jamming_instance(
    scenario: &Scenario,
    design: &NetworkDesign,
) -> Result<JammingInstance, GenError> {
    let net = &scenario.net;
    let served = design.served();
    if served.is_empty() {
        return Err(GenError::BadParams(
            "the design serves no testpoints; nothing to jam".into(),
        ));
    }
    let estimates = balance_estimates(scenario, design)?;
    let balances: Vec<f64> = served
        .iter()
        .map(|&t| estimates[t].expect("served testpoints have estimates"))
        .collect();
    let jam_fading: Vec<f64> = served
        .iter()
        .flat_map(|&t| {
            (0..scenario.sites.len()).map(move |j| scenario.jam_fading[t * scenario.sites.len() + j])
        })
        .collect();
    let epsilon = default_epsilon_mw(&balances, net.sir_threshold(), net.noise_mw());
    Ok(JammingInstance::new(
        scenario.sites.clone(),
        scenario.device_powers_mw.clone(),
        jam_fading,
        served.iter().map(|&t| net.testpoints()[t].id).collect(),
        scenario.budget,
        served.iter().map(|&t| scenario.profits[t]).collect(),
        balances,
        epsilon,
        net.sir_threshold(),
        net.noise_mw(),
    )?)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn small_params() -> GenParams {
        GenParams {
            n_tps: 4,
            n_trxs: 1,
            n_sites: 2,
            n_typologies: 2,
            area_m: 100.0,
            ..GenParams::default()
        }
    }

    #[test]
    fn path_loss_matches_hand_values() {
        // d = 1 m: attenuation is exactly -l0.
        assert_eq!(path_loss_db(1.0, 30.0, 3.0).unwrap(), -30.0);
        // d = 10 m, gamma 3: one decade adds 30 dB.
        assert!((path_loss_db(10.0, 30.0, 3.0).unwrap() - -60.0).abs() < 1e-12);
        assert!((path_loss_gain(1.0, 30.0, 3.0) - 1e-3).abs() < 1e-18);
        // d = 100 m, gamma 3: loss = 30 + 60 = 90 dB.
        assert!((path_loss_gain(100.0, 30.0, 3.0) - 1e-9).abs() < 1e-24);
        // Nonpositive distances are rejected in the decibel form...
        assert!(path_loss_db(0.0, 30.0, 3.0).is_err());
        assert!(path_loss_db(-2.0, 30.0, 3.0).is_err());
        // ...while the gain form floors distances below one meter.
        assert_eq!(
            path_loss_gain(0.2, 30.0, 3.0),
            path_loss_gain(1.0, 30.0, 3.0)
        );
        // Gains never exceed one even for negative losses.
        assert_eq!(path_loss_gain(1.0, -10.0, 3.0), 1.0);
    }

    #[test]
    fn gains_shrink_with_distance() {
        let mut last = path_loss_gain(1.0, 40.0, 3.5);
        for d in [2.0, 5.0, 20.0, 80.0, 500.0, 4000.0] {
            let g = path_loss_gain(d, 40.0, 3.5);
            assert!(g <= last, "gain must not grow with distance");
            assert!((0.0..=1.0).contains(&g));
            last = g;
        }
    }

    #[test]
    fn generated_shapes_and_ranges_hold() {
        let params = GenParams {
            seed: 11,
            n_tps: 9,
            n_trxs: 3,
            n_sites: 4,
            n_typologies: 3,
            area_m: 300.0,
            ..GenParams::default()
        };
        let sc = generate(&params).expect("generates");
        assert_eq!(sc.net.n_tps(), 9);
        assert_eq!(sc.net.n_trxs(), 3);
        assert_eq!(sc.sites.len(), 4);
        assert_eq!(sc.jam_fading.len(), 9 * 4);
        assert_eq!(sc.device_powers_mw.len(), 3);
        for t in 0..9 {
            let tp = &sc.net.testpoints()[t];
            assert!(tp.revenue >= 1.0 && tp.revenue <= 10.0);
            assert!(sc.profits[t] >= 1.0 && sc.profits[t] <= 10.0);
            assert!(tp.x_m >= 0.0 && tp.x_m <= 300.0);
            for s in 0..3 {
                let a = sc.net.fading(t, s);
                assert!((0.0..=1.0).contains(&a));
            }
        }
        for site in &sc.sites {
            assert!(site.costs[0] >= 1.0, "population scaling only adds cost");
            assert!(site.costs.windows(2).all(|w| w[0] < w[1]));
        }
        let cheapest_total: f64 = sc.sites.iter().map(|s| s.costs[0]).sum();
        assert!((sc.budget - 0.5 * cheapest_total).abs() < 1e-12);
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let params = GenParams {
            seed: 42,
            ..small_params()
        };
        let a = generate(&params).expect("generates");
        let b = generate(&params).expect("generates");
        assert_eq!(a, b);
        let other = GenParams { seed: 43, ..params };
        let c = generate(&other).expect("generates");
        assert_ne!(a, c, "different seeds must differ");
    }

    #[test]
    fn grid_testpoints_tile_the_area() {
        let params = GenParams {
            n_tps: 16,
            area_m: 400.0,
            ..small_params()
        };
        let sc = generate(&params).expect("generates");
        // 4x4 grid with 100 m spacing: first point at (50, 50).
        let tp0 = &sc.net.testpoints()[0];
        assert!((tp0.x_m - 50.0).abs() < 1e-9 && (tp0.y_m - 50.0).abs() < 1e-9);
        let tp5 = &sc.net.testpoints()[5];
        assert!((tp5.x_m - 150.0).abs() < 1e-9 && (tp5.y_m - 150.0).abs() < 1e-9);
    }

    #[test]
    fn jamming_instance_jitters_balances_within_five_percent_db() {
        let params = GenParams {
            seed: 5,
            ..small_params()
        };
        let sc = generate(&params).expect("generates");
        // One transceiver at full power serves everything in a 100 m area.
        let powers = vec![sc.net.p_trx_max_mw()];
        let server: Vec<Option<usize>> = vec![Some(0); sc.net.n_tps()];
        let design = NetworkDesign::from_assignment(&sc.net, powers, server).expect("covers");
        let ji = jamming_instance(&sc, &design).expect("assembles");
        assert_eq!(ji.n_tps(), 4);
        assert_eq!(ji.n_sites(), 2);
        for (i, &t) in design.served().iter().enumerate() {
            let true_db = linear_to_db(design.balance_mw(t).unwrap()).unwrap();
            let est_db = linear_to_db(ji.nominal_balance_mw(i)).unwrap();
            assert!(
                (est_db - true_db).abs() <= 0.05 * true_db.abs() + 1e-9,
                "estimate {est_db} dBmW strays from {true_db} dBmW"
            );
        }
        let again = jamming_instance(&sc, &design).expect("assembles");
        assert_eq!(
            ji.nominal_balance_mw(0),
            again.nominal_balance_mw(0),
            "jitter must be reproducible"
        );
    }

    #[test]
    fn empty_designs_are_rejected() {
        let params = GenParams {
            seed: 5,
            ..small_params()
        };
        let sc = generate(&params).expect("generates");
        let design = NetworkDesign::from_assignment(
            &sc.net,
            vec![0.0],
            vec![None; sc.net.n_tps()],
        )
        .expect("valid empty design");
        assert!(jamming_instance(&sc, &design).is_err());
    }

    #[test]
    fn parameter_validation_rejects_nonsense() {
        let mut p = small_params();
        p.n_typologies = 9;
        assert!(generate(&p).is_err());
        let mut p = small_params();
        p.area_m = 0.0;
        assert!(generate(&p).is_err());
        let mut p = small_params();
        p.n_tps = 0;
        assert!(generate(&p).is_err());
    }

    #[test]
    fn default_area_keeps_cell_size_constant() {
        assert_eq!(default_area_m(100), 1000.0);
        assert!((default_area_m(224) - 100.0 * 224f64.sqrt()).abs() < 1e-9);
    }
}
