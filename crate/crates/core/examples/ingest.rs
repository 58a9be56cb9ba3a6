// Read a wide table, convert it to spells and back.

use std::error::Error;

use seqpath::sequence::{parse_wide_str, spells_to_wide, wide_to_spells, write_spells, WideOptions};

const WIDE: &str = "\
id,w1,w2,w3,w4,w5,w6
P001,0/3,0/3,1/3,1/3,2/3,3/3
P002,3/3,3/3,3/3,2/3,2/3,2/3
P003,1/3,0/3,0/3,0/3,0/3,0/3
";

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let set = parse_wide_str(WIDE, &WideOptions::default(), None)?;
    println!("{} sequences of length {}, alphabet {:?}", set.len(), set.length(), set.alphabet().states());

    let spells = wide_to_spells(&set);
    let mut out = Vec::new();
    write_spells(&spells, &mut out)?;
    print!("{}", String::from_utf8(out)?);

    let back = spells_to_wide(&spells, set.alphabet())?;
    assert_eq!(back, set);
    println!("spell round trip ok");
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
