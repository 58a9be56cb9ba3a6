// Cox models of a simulated outcome on clusters and indicator strata.

use std::error::Error;

use seqpath::clustering::{cut_tree, ward_cluster};
use seqpath::dissimilarity::{pairwise_matrix, Metric};
use seqpath::indicators::indicator_table;
use seqpath::survival::{build_design, univariable_and_adjusted, CoxOptions, Ties};
use seqpath::synth::{generate_outcomes, generate_sequences, GeneratorSpec};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let set = generate_sequences(&GeneratorSpec::treatment_coverage(800, 52, 21)?)?;
    let labels = cut_tree(&ward_cluster(&pairwise_matrix(&set, &Metric::Lcs, None)?)?, 3)?;
    let ids: Vec<String> = set.subject_ids().map(String::from).collect();
    let outcomes = generate_outcomes(&ids, &labels, &[1.0, 1.8, 1.6], 0.02, 104.0, 21)?;
    println!("{} subjects, {} events", outcomes.len(), outcomes.events());

    let design = build_design(&labels, &indicator_table(&set), &outcomes)?;
    let report = univariable_and_adjusted(&design, &CoxOptions::default())?;
    print!("{}", report.render_text());

    let breslow = CoxOptions {
        ties: Ties::Breslow,
        ..CoxOptions::default()
    };
    let alt = univariable_and_adjusted(&design, &breslow)?;
    println!("Breslow adjusted HR for Cluster 2: {:.3}", alt.adjusted.hazard_ratios[0]);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
