use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub mean_s: f64,
    pub mean_min: f64,
    pub sd_s: f64,
    pub reps: usize,
}

/// Monte-Carlo total feedback time over `n_trials` responses, each correct
/// with probability `p_correct`. Replicate `r` draws from its own ChaCha
/// stream, so the result does not depend on thread scheduling.
pub fn bootstrap_feedback_duration(
    p_correct: f64,
    n_trials: usize,
    latencies: (f64, f64),
    reps: usize,
    seed: u64,
) -> Result<BootstrapResult, StatsError> {
    if !(0.0..=1.0).contains(&p_correct) {
        return Err(StatsError::Invalid(format!("probability {p_correct} outside [0, 1]")));
    }
    if n_trials == 0 {
        return Err(StatsError::TooFew { what: "trials", needed: 1, got: 0 });
    }
    if reps == 0 {
        return Err(StatsError::TooFew { what: "replicates", needed: 1, got: 0 });
    }
    let (correct, incorrect) = latencies;
    let totals: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            (0..n_trials).map(|_| if rng.random_bool(p_correct) { correct } else { incorrect }).sum()
        })
        .collect();
    let mean = totals.iter().sum::<f64>() / reps as f64;
    let sd = if reps > 1 {
        (totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(BootstrapResult { mean_s: mean, mean_min: mean / 60.0, sd_s: sd, reps })
}
