//! Run a complete embodied-interface session with a simulated participant,
//! replay its event log and print the per-cell scores.
//!
//! cargo run -p crm-core --example simulate_session

use crm_core::session::{
    read_log, session_metrics, simulate_session, InterfaceKind, MemorySink, SessionConfig, SessionState,
    SimulatedAgent, SimulatedParticipant, SimulationOptions, TrialPlan,
};
use crm_core::stimulus::{build_condition_grid, Manifest, RenderOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = Manifest::plan(&build_condition_grid(), 7, 44_100, RenderOptions::default()).trials;
    let config = SessionConfig::new("demo", "P01", InterfaceKind::Embodied, 7);
    let sink = MemorySink::new();
    let agent = SimulatedAgent::new();
    let mut participant = SimulatedParticipant::new(0.85, 0.5, 1);
    let session = simulate_session(
        config,
        &trials,
        &mut participant,
        Box::new(sink.clone()),
        Box::new(agent.clone()),
        SimulationOptions::default(),
    )?;

    let log = sink.contents();
    println!("{} log lines, {} bytes", log.lines().count(), log.len());
    println!("agent actions: {}", agent.actions().len());

    let (header, records) = read_log(log.as_bytes())?;
    let replayed = SessionState::replay(&header.config, &TrialPlan::from_trials(&header.trials)?, &records)?;
    println!("replay matches live state: {}", &replayed == session.state());

    let metrics = session_metrics(&header, &records)?;
    println!("data collection took {:.2} min", metrics.duration_min);
    for row in metrics.rows() {
        println!(
            "TMR {:>3} dB, dF0 {:>5}, dVTL {:>4}: {:5.1}% correct",
            row.tmr, row.delta_f0, row.delta_vtl, row.percent_correct
        );
    }
    Ok(())
}
