// Entropy and turbulence of a few hand-written pathways.

use std::error::Error;

use seqpath::indicators::{indicator_table, write_indicator_csv};
use seqpath::sequence::{parse_wide_str, WideOptions};

const WIDE: &str = "\
id,w1,w2,w3,w4,w5,w6,w7,w8
steady,3/3,3/3,3/3,3/3,3/3,3/3,3/3,3/3
drift,3/3,3/3,2/3,2/3,1/3,1/3,0/3,0/3
erratic,0/3,3/3,0/3,3/3,1/3,2/3,1/3,2/3
";

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let set = parse_wide_str(WIDE, &WideOptions::default(), None)?;
    let rows = indicator_table(&set);
    for r in &rows {
        println!("{:<8} entropy {:.3}  turbulence {:.3}", r.subject_id, r.entropy, r.turbulence);
    }
    assert!(rows[0].turbulence == 1.0 && rows[2].turbulence > rows[1].turbulence);

    let mut csv = Vec::new();
    write_indicator_csv(&rows, set.alphabet().states(), &mut csv)?;
    print!("{}", String::from_utf8(csv)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
