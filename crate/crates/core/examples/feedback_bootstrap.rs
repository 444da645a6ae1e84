//! How much session time the embodied interface's nods and shakes add, as
//! a function of accuracy.
//!
//! cargo run -p crm-core --example feedback_bootstrap

use crm_core::stats::bootstrap_feedback_duration;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for p in [0.5, 0.7, 0.9, 1.0] {
        let r = bootstrap_feedback_duration(p, 91, (2.5, 3.2), 10_000, 1)?;
        println!("p(correct) {p:.1}: {:.2} min (sd {:.1} s over {} reps)", r.mean_min, r.sd_s, r.reps);
    }
    Ok(())
}
