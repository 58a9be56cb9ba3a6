// The four distance families on one cohort, plus matrix I/O.

use std::error::Error;

use seqpath::dissimilarity::{
    dhd_costs, pairwise_matrix, transition_rate_costs, DissimilarityMatrix, Metric, SubstitutionCostMatrix,
};
use seqpath::synth::{generate_sequences, GeneratorSpec};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let set = generate_sequences(&GeneratorSpec::treatment_coverage(200, 52, 5)?)?;
    let trate = transition_rate_costs(&set)?;
    println!("transition-rate cost 0/3 <-> 1/3: {:.3}", trate.cost(0, 1));

    let metrics = [
        Metric::Om(trate.clone()),
        Metric::Om(SubstitutionCostMatrix::constant(4, 2.0, 1.0)?),
        Metric::Lcs,
        Metric::Hamming(None),
        Metric::Dhd(dhd_costs(&set)?),
    ];
    for m in &metrics {
        let d = pairwise_matrix(&set, m, None)?;
        println!("{:<8} d(0,1) = {:>7.3}   max = {:>7.3}", m.tag(), d.get(0, 1), d.max());
    }

    // Hand-tuned costs may break the triangle inequality.
    let skewed = SubstitutionCostMatrix::user(
        4,
        vec![0.0, 0.5, 3.0, 4.0, 0.5, 0.0, 0.5, 3.0, 3.0, 0.5, 0.0, 0.5, 4.0, 3.0, 0.5, 0.0],
        1.0,
    )?;
    println!("cost-level triangle violations: {}", skewed.triangle_violations());
    let d = pairwise_matrix(&set, &Metric::Om(skewed), None)?;
    let audit = d.triangle_audit(1000, 0);
    println!("sampled triangle audit: {}/{} violated", audit.violations, audit.checked);

    let mut bin = Vec::new();
    d.write_binary(&mut bin)?;
    let back = DissimilarityMatrix::read_binary(bin.as_slice())?;
    assert_eq!(back.packed(), d.packed());
    println!("binary matrix: {} bytes for n = {}", bin.len(), d.n());
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
