//! Scratch sizing probe; not part of the public surface.

use std::time::Instant;

use netjam::formulate::{build_spap, SepScope};
use netjam::instgen::{default_area_m, generate, jamming_instance, GenParams};
use netjam::milp::{bb_solve, lp_relaxation, BbOptions};
use netjam::robust::{
    audit_robust, make_bands, plan_jamming, separate, solve_design, solve_nominal, PlanOptions,
};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_tps: usize = args.get(1).and_then(|v| v.parse().ok()).unwrap_or(100);
    let n_trxs: usize = args.get(2).and_then(|v| v.parse().ok()).unwrap_or(6);
    let n_sites: usize = args.get(3).and_then(|v| v.parse().ok()).unwrap_or(15);
    let seed: u64 = args.get(4).and_then(|v| v.parse().ok()).unwrap_or(1);
    let node_limit: Option<usize> = args.get(5).and_then(|v| v.parse().ok());

    let params = GenParams {
        seed,
        n_tps,
        n_trxs,
        n_sites,
        area_m: default_area_m(n_tps),
        ..GenParams::default()
    };
    let scenario = generate(&params).expect("generate");

    // Exhaustive on/off subsets at full power (small n_trxs only).
    if n_trxs <= 12 {
        let net = &scenario.net;
        let cap = net.p_trx_max_mw();
        let mut best = (0usize, 0u32);
        for mask in 0u32..(1 << n_trxs) {
            let powers: Vec<f64> = (0..n_trxs)
                .map(|s| if mask & (1 << s) != 0 { cap } else { 0.0 })
                .collect();
            let d = netjam::netmodel::NetworkDesign::greedy_from_powers(net, powers)
                .expect("greedy");
            if d.n_served() > best.0 {
                best = (d.n_served(), mask);
            }
        }
        println!(
            "best on/off subset: {} served with mask {:06b} ({} active)",
            best.0,
            best.1,
            best.1.count_ones()
        );
    }

    let spap = build_spap(&scenario.net).expect("spap");
    println!(
        "spap: {} vars, {} rows",
        spap.model.n_vars(),
        spap.model.n_rows()
    );
    let t_lp = Instant::now();
    let relax = lp_relaxation(&spap.model).expect("relax");
    println!(
        "root LP: obj {:.3}, {:.2}s",
        relax.objective,
        t_lp.elapsed().as_secs_f64()
    );

    let options = BbOptions {
        node_limit,
        time_limit: Some(std::time::Duration::from_secs(120)),
        ..BbOptions::default()
    };
    let t0 = Instant::now();
    let (design, status) = solve_design(&scenario.net, &options).expect("design");
    println!(
        "design: |T*|={} of {} ({:.0}%), status {:?}, {:.2}s",
        design.n_served(),
        n_tps,
        100.0 * design.n_served() as f64 / n_tps as f64,
        status,
        t0.elapsed().as_secs_f64()
    );

    let ji = jamming_instance(&scenario, &design).expect("jamming instance");
    println!(
        "jamming instance: |T*|={} |J|={} |M|={} budget={:.2}",
        ji.served_tp_ids().len(),
        ji.n_sites(),
        ji.n_typologies(),
        ji.budget()
    );
    let mb = make_bands(ji.nominal_balances_mw(), 0.2, 2, 2, None).expect("bands");

    let t1 = Instant::now();
    let (nominal, nom_status) = solve_nominal(&ji, &options).expect("nominal");
    println!(
        "nominal: claims={} profit={:.2} ({:?}) {:.2}s",
        nominal.claim_count(),
        nominal.profit,
        nom_status,
        t1.elapsed().as_secs_f64()
    );

    let t2 = Instant::now();
    let outcome = separate(
        &nominal.activation,
        &nominal.claimed,
        &ji,
        &mb,
        SepScope::ClaimedOnly,
    )
    .expect("separate");
    println!(
        "separate vs nominal: V={} {:.2}s",
        outcome.value,
        t2.elapsed().as_secs_f64()
    );

    let t3 = Instant::now();
    let ok = audit_robust(&nominal.activation, &nominal.claimed, &ji, &mb).expect("audit");
    println!("audit vs nominal: {} {:.2}s", ok, t3.elapsed().as_secs_f64());

    let plan_options = PlanOptions {
        bb: options.clone(),
        ..PlanOptions::default()
    };
    let t4 = Instant::now();
    let report = plan_jamming(&ji, &mb, &plan_options).expect("plan");
    println!(
        "jam: nom={} ({:?}) rob={} ({:?}) por={:?} cuts={} {:.2}s",
        report.nominal.claim_count(),
        report.nominal_status,
        report.robust.claim_count(),
        report.robust_status,
        report.price_of_robustness_pct,
        report.cuts.len(),
        t4.elapsed().as_secs_f64()
    );
}
