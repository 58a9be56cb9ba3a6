// A custom three-state generator with its reproducibility header.

use std::error::Error;

use seqpath::descriptives::transition_matrix;
use seqpath::synth::{generate_sequences, GeneratorSpec};
use seqpath::Alphabet;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let alphabet = Alphabet::new(["home", "ward", "icu"])?;
    let transition = vec![vec![0.90, 0.08, 0.02], vec![0.30, 0.60, 0.10], vec![0.05, 0.45, 0.50]];
    let spec = GeneratorSpec::new(alphabet, vec![0.2, 0.7, 0.1], transition, 1000, 30, 2024)?;
    print!("{}", spec.header());

    let set = generate_sequences(&spec)?;
    assert_eq!(set, generate_sequences(&spec)?);
    let tm = transition_matrix(&set)?;
    for (i, row) in tm.probs.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|p| format!("{p:.3}")).collect();
        println!("{:<5} {}", tm.states[i], cells.join(" "));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
