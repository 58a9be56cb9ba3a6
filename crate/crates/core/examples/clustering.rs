// Ward clustering with a silhouette scan over k.

use std::error::Error;

use seqpath::clustering::{cut_tree, silhouette_profile, ward_cluster};
use seqpath::dissimilarity::{pairwise_matrix, Metric};
use seqpath::synth::{generate_sequences, GeneratorSpec};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let set = generate_sequences(&GeneratorSpec::treatment_coverage(300, 52, 2)?)?;
    let d = pairwise_matrix(&set, &Metric::Lcs, None)?;
    let tree = ward_cluster(&d)?;
    let last = tree.merges().last().ok_or("empty tree")?;
    println!("{} merges, final height {:.2}, inversions {}", tree.merges().len(), last.height, tree.inversions());

    for (k, s) in silhouette_profile(&d, &tree, 2..=6) {
        println!("k = {k}: average silhouette {s:.3}");
    }
    let labels = cut_tree(&tree, 3)?;
    println!("k = 3 sizes {:?}", labels.sizes());

    let ids: Vec<String> = set.subject_ids().map(String::from).collect();
    let mut csv = Vec::new();
    labels.write_csv(&ids, &mut csv)?;
    println!("{}", String::from_utf8(csv)?.lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
