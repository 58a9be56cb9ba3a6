// Cohort-level summaries of a simulated cohort.

use std::error::Error;

use seqpath::descriptives::{describe, representativeness};
use seqpath::dissimilarity::{pairwise_matrix, Metric};
use seqpath::synth::{generate_sequences, GeneratorSpec};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let set = generate_sequences(&GeneratorSpec::treatment_coverage(500, 52, 11)?)?;
    let report = describe(&set, 5);

    let tm = report.transition_matrix.as_ref().ok_or("no transitions")?;
    println!("weekly transition rates");
    for (i, row) in tm.probs.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|p| format!("{p:.3}")).collect();
        println!("  {} -> {}", tm.states[i], cells.join(" "));
    }
    println!("modal pathway starts {:?}", &report.modal_sequence[..8]);
    println!("{} distinct sequences; most frequent:", report.frequency.distinct);
    for e in &report.frequency.entries {
        println!("  {:>3} x  share {:.3}", e.count, e.share);
    }

    let d = pairwise_matrix(&set, &Metric::Lcs, None)?;
    let scores = representativeness(&set, &d, 0.1)?;
    let (best, score) = scores.iter().enumerate().fold((0, 0.0), |m, (i, &s)| if s > m.1 { (i, s) } else { m });
    println!("most representative: {} ({score:.3})", set.sequences()[best].subject_id());
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
