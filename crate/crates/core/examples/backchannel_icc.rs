//! Tally backchannel behaviours coded by two people and report their
//! agreement as ICC(2,k).
//!
//! cargo run -p crm-core --example backchannel_icc

use crm_core::stats::{backchannel_tally, icc_2k, read_coded_behaviours, Behavior};

const CODED: &str = "\
coder,interface,behavior,segment
A,embodied,smiling,p01
A,embodied,laughing,p01
A,embodied,laughing,p01
A,embodied,laughing,p01
A,embodied,laughing,p01
B,embodied,laughing,p01
B,embodied,laughing,p01
B,embodied,laughing,p01
A,embodied,grimacing,p01
A,embodied,grimacing,p01
A,embodied,grimacing,p01
B,embodied,grimacing,p01
B,embodied,grimacing,p01
A,embodied,smiling,p02
B,embodied,smiling,p02
B,embodied,laughing,p02
B,embodied,frowning,p02
A,embodied,grimacing,p02
A,embodied,grimacing,p02
B,embodied,grimacing,p02
B,embodied,grimacing,p02
A,plain,smiling,p03
A,plain,smiling,p03
B,plain,smiling,p03
B,plain,smiling,p03
B,plain,laughing,p03
A,plain,frowning,p03
A,plain,frowning,p03
A,plain,frowning,p03
A,plain,frowning,p03
B,plain,frowning,p03
B,plain,frowning,p03
B,plain,frowning,p03
B,plain,frowning,p03
A,plain,grimacing,p03
A,plain,grimacing,p03
B,plain,grimacing,p03
A,embodied,laughing,p04
A,embodied,laughing,p04
B,embodied,laughing,p04
B,embodied,laughing,p04
A,embodied,frowning,p04
A,embodied,frowning,p04
A,embodied,frowning,p04
A,embodied,frowning,p04
B,embodied,frowning,p04
B,embodied,frowning,p04
B,embodied,frowning,p04
A,embodied,grimacing,p04
A,embodied,grimacing,p04
A,embodied,grimacing,p04
A,embodied,grimacing,p04
B,embodied,grimacing,p04
B,embodied,grimacing,p04
B,embodied,grimacing,p04
A,embodied,smiling,p05
B,embodied,smiling,p05
A,embodied,frowning,p05
A,embodied,frowning,p05
A,embodied,frowning,p05
B,embodied,frowning,p05
B,embodied,frowning,p05
B,embodied,frowning,p05
B,embodied,frowning,p05
A,embodied,grimacing,p05
A,embodied,grimacing,p05
B,embodied,grimacing,p05
B,embodied,grimacing,p05
A,plain,smiling,p06
A,plain,laughing,p06
A,plain,laughing,p06
A,plain,laughing,p06
B,plain,laughing,p06
B,plain,laughing,p06
B,plain,laughing,p06
A,plain,frowning,p06
A,plain,frowning,p06
A,plain,frowning,p06
B,plain,frowning,p06
B,plain,frowning,p06
A,plain,grimacing,p06
A,plain,grimacing,p06
A,plain,grimacing,p06
A,plain,grimacing,p06
B,plain,grimacing,p06
B,plain,grimacing,p06
B,plain,grimacing,p06
B,plain,grimacing,p06
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let events = read_coded_behaviours(CODED.as_bytes())?;
    let tally = backchannel_tally(&events);
    tally.write_csv(std::io::stdout().lock())?;
    println!();
    for behavior in Behavior::ALL {
        match icc_2k(&tally.rating_matrix(behavior)) {
            Ok(r) => println!("{}: ICC(2,k) = {:.3} over {} segments", behavior.as_str(), r.icc, r.items),
            Err(e) => println!("{}: {e}", behavior.as_str()),
        }
    }
    Ok(())
}
