//! Render one participant's full stimulus set: 4 training and 91
//! experimental mixtures plus the manifest.
//!
//! cargo run -p crm-core --example build_stimuli [out_dir] [seed]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use crm_core::stimulus::{build_condition_grid, pregenerate_corpus, Corpus, RenderOptions, TrialCondition, MANIFEST_FILE};

fn describe(c: &TrialCondition) -> String {
    match c.voice {
        Some(v) => format!("TMR {} dB, {v}", c.tmr),
        None => format!("TMR {}", c.tmr),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("crm-stimuli"));
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2024);

    let grid = build_condition_grid();
    println!("{} cells, {} experimental trials", grid.cells.len(), grid.total_trials());
    let corpus = Corpus::synthetic(1, 44_100);

    let started = Instant::now();
    let manifest = pregenerate_corpus(&grid, &corpus, seed, &out, RenderOptions::default())?;
    println!("rendered {} stimuli in {:.2?} to {}", manifest.trials.len(), started.elapsed(), out.display());

    let mut per_cell: BTreeMap<String, usize> = BTreeMap::new();
    for t in manifest.experimental() {
        *per_cell.entry(describe(&t.condition)).or_default() += 1;
    }
    for (cell, n) in &per_cell {
        println!("  {cell}: {n}");
    }
    for t in manifest.training() {
        println!("training {}: {} ({})", t.index, t.target, describe(&t.condition));
    }
    println!("manifest: {}", out.join(MANIFEST_FILE).display());
    Ok(())
}
