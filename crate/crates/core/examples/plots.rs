// Write the SVG suite for a clustered cohort.

use std::error::Error;

use seqpath::clustering::{cut_tree, ward_cluster};
use seqpath::dissimilarity::{pairwise_matrix, Metric};
use seqpath::plots::{render_suite, PlotConfig, SortKey};
use seqpath::synth::{generate_sequences, GeneratorSpec};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let set = generate_sequences(&GeneratorSpec::treatment_coverage(300, 52, 8)?)?;
    let labels = cut_tree(&ward_cluster(&pairwise_matrix(&set, &Metric::Lcs, None)?)?, 3)?;
    let config = PlotConfig::for_alphabet(set.alphabet()).with_size(900, 540)?.with_sort(SortKey::Cluster);

    let dir = std::env::temp_dir().join("seqpath-plots");
    std::fs::create_dir_all(&dir)?;
    for (name, svg) in render_suite(&set, Some(&labels), &config, "cohort", 10)? {
        std::fs::write(dir.join(&name), svg)?;
        println!("wrote {}", dir.join(name).display());
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
