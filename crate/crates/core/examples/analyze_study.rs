//! Simulate a within-subjects study (every participant does both
//! interfaces), then run the three-way repeated-measures ANOVA and the
//! paired duration test on the resulting metrics table.
//!
//! cargo run -p crm-core --example analyze_study [participants]

use crm_core::session::{
    session_metrics, simulate_session, InterfaceKind, MemorySink, MetricsRow, SessionConfig, SimulatedAgent,
    SimulatedParticipant, SimulationOptions,
};
use crm_core::stats::{dataset_from_rows, duration_pairs, paired_t, rm_anova, write_anova_csv, Summary};
use crm_core::stimulus::{build_condition_grid, Manifest, RenderOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(16);
    let grid = build_condition_grid();
    let mut rows: Vec<MetricsRow> = Vec::new();
    for p in 0..n {
        for (k, interface) in [InterfaceKind::Plain, InterfaceKind::Embodied].into_iter().enumerate() {
            let seed = 1000 * p + k as u64;
            let trials = Manifest::plan(&grid, seed, 44_100, RenderOptions::default()).trials;
            let config = SessionConfig::new(format!("s{p}-{interface}"), format!("P{p:02}"), interface, seed);
            let mut who = SimulatedParticipant::new(0.55 + 0.02 * p as f64, 0.5, seed);
            let session = simulate_session(
                config,
                &trials,
                &mut who,
                Box::new(MemorySink::new()),
                Box::new(SimulatedAgent::new()),
                SimulationOptions::default(),
            )?;
            rows.extend(session_metrics(&session.header(), session.records())?.rows());
        }
    }
    println!("{} participants, {} metrics rows\n", n, rows.len());

    let table = rm_anova(&dataset_from_rows(&rows)?)?;
    write_anova_csv(&table, std::io::stdout().lock())?;

    let (_, plain, embodied) = duration_pairs(&rows);
    let t = paired_t(&plain, &embodied)?;
    let (sp, se) = (Summary::of(&plain)?, Summary::of(&embodied)?);
    println!(
        "\nduration: plain {:.2} ± {:.2} min, embodied {:.2} ± {:.2} min, t({}) = {:.2}, p = {:.3}",
        sp.mean, sp.sd, se.mean, se.sd, t.df, t.t, t.p
    );
    Ok(())
}
