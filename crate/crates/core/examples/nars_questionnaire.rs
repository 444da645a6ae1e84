//! Score NARS responses and test each subscale against the neutral total.
//!
//! cargo run -p crm-core --example nars_questionnaire

use crm_core::stats::{nars_score, nars_table, NarsScore};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let responses: [[u8; 14]; 6] = [
        [2, 3, 2, 2, 3, 2, 4, 3, 4, 3, 4, 2, 3, 2],
        [1, 2, 2, 3, 2, 2, 3, 3, 4, 4, 3, 2, 2, 3],
        [3, 3, 2, 2, 2, 1, 4, 4, 3, 3, 4, 1, 2, 2],
        [2, 2, 1, 2, 3, 2, 3, 4, 4, 3, 3, 2, 2, 1],
        [2, 1, 2, 2, 2, 3, 4, 3, 3, 4, 4, 3, 2, 2],
        [3, 2, 3, 2, 2, 2, 3, 3, 4, 3, 4, 2, 3, 2],
    ];
    let scores: Vec<NarsScore> = responses.iter().map(|r| nars_score(r)).collect::<Result<_, _>>()?;
    for (i, s) in scores.iter().enumerate() {
        println!("respondent {}: S1 {:>2}  S2 {:>2}  S3 {:>2}", i + 1, s.s1, s.s2, s.s3);
    }
    println!();
    for row in nars_table(&scores)? {
        println!(
            "{}: mean {:.2} (neutral {}), t({}) = {:.2}, p = {:.4}",
            row.subscale, row.summary.mean, row.expected, row.test.df, row.test.t, row.test.p
        );
    }
    Ok(())
}
