// Profile clusters against baseline covariates.

use std::error::Error;

use seqpath::clustering::{cut_tree, ward_cluster};
use seqpath::descriptives::{cluster_profile, CovariateTable};
use seqpath::dissimilarity::{pairwise_matrix, Metric};
use seqpath::rng::StreamRng;
use seqpath::synth::{generate_sequences, GeneratorSpec};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let set = generate_sequences(&GeneratorSpec::treatment_coverage(400, 52, 4)?)?;
    let labels = cut_tree(&ward_cluster(&pairwise_matrix(&set, &Metric::Lcs, None)?)?, 3)?;

    let mut covariates = CovariateTable::new(vec!["sex".into(), "age".into()]);
    for (i, id) in set.subject_ids().enumerate() {
        let mut rng = StreamRng::new(99, i as u64);
        let sex = if rng.uniform() < 0.5 { "F" } else { "M" };
        let age = 55.0 + 20.0 * rng.uniform();
        covariates.insert(id, vec![sex.into(), format!("{age:.0}")])?;
    }

    let report = cluster_profile(&set, &labels, &covariates)?;
    print!("{}", report.render_text());
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
