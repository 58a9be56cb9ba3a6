// Drive the command line in-process: simulate a cohort, then run every
// stage on it from the generated config.

use std::error::Error;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = std::env::temp_dir().join("seqpath-pipeline");
    let out = dir.to_str().ok_or("temp dir is not UTF-8")?;
    let simulate = ["seqpath", "simulate", "--n", "400", "--seed", "3", "--metric", "lcs", "--out-dir", out];
    if seqpath::cli::run(simulate) != 0 {
        return Err("simulate failed".into());
    }
    let config = dir.join("pipeline.toml");
    let pipeline = ["seqpath", "pipeline", "--config", config.to_str().unwrap_or_default(), "--k", "3"];
    if seqpath::cli::run(pipeline) != 0 {
        return Err("pipeline failed".into());
    }
    let mut names: Vec<String> = std::fs::read_dir(dir.join("results"))?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()?;
    names.sort();
    println!("{}", names.join("\n"));
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
