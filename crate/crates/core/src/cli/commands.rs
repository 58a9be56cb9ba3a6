use std::collections::HashMap;
use std::path::Path;

use crate::clustering::{cut_tree, silhouette_profile, ward_cluster, ClusterAssignment};
use crate::descriptives::{cluster_profile, describe, CovariateTable, FrequencyTable};
use crate::dissimilarity::{
    dhd_costs, pairwise_matrix, transition_rate_costs, DissimilarityMatrix, Metric, SubstitutionCostMatrix,
};
use crate::indicators::{indicator_table, write_indicator_csv, IndicatorRow};
use crate::plots::{render_suite, PlotConfig, SortKey};
use crate::sequence::{parse_spells, parse_wide, spells_to_wide, wide_to_spells, write_spells, write_wide, Alphabet, SequenceSet, WideOptions};
use crate::survival::{build_design, univariable_and_adjusted, CoxOptions, OutcomeTable, Ties};
use crate::synth::{generate_outcomes, generate_sequences, coverage_transitions, GeneratorSpec};

use super::manifest::Run;
use super::{
    AssocArgs, Cli, CliError, ClusterArgs, Command, DescribeArgs, DistArgs, DistParams, IndicatorsArgs, IngestArgs, InputFormat,
    KParams, MatrixFormat, MetricKind, PipelineArgs, PlotArgs, PlotParams, ProfileArgs, SeqInput, SimulateArgs, SortArg, TiesArg,
};

pub(super) fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let params = cli.command.parameters();
    let name = cli.command.name();
    match &cli.command {
        Command::Ingest(a) => ingest(Run::start(name, params, &a.out.out_dir)?, a),
        Command::Describe(a) => describe_cmd(Run::start(name, params, &a.out.out_dir)?, a),
        Command::Indicators(a) => indicators_cmd(Run::start(name, params, &a.out.out_dir)?, a),
        Command::Dist(a) => dist_cmd(Run::start(name, params, &a.out.out_dir)?, a, cli.threads),
        Command::Cluster(a) => cluster_cmd(Run::start(name, params, &a.out.out_dir)?, a),
        Command::Profile(a) => profile_cmd(Run::start(name, params, &a.out.out_dir)?, a),
        Command::Assoc(a) => assoc_cmd(Run::start(name, params, &a.out.out_dir)?, a),
        Command::Plot(a) => plot_cmd(Run::start(name, params, &a.out.out_dir)?, a),
        Command::Simulate(a) => simulate_cmd(Run::start(name, params, &a.out.out_dir)?, a, cli.threads),
        Command::Pipeline(a) => pipeline_cmd(Run::start(name, params, &a.out.out_dir)?, a, cli.threads),
    }
}

fn bytes_of<E>(f: impl FnOnce(&mut Vec<u8>) -> Result<(), E>) -> Result<Vec<u8>, CliError>
where
    E: std::fmt::Display,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::computation(format!("cannot render output: {e}")))?;
    Ok(buf)
}

fn json_bytes<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s.into_bytes()
}

fn load_alphabet(run: &mut Run, path: Option<&Path>) -> Result<Option<Alphabet>, CliError> {
    path.map(|p| {
        let text = run.read_text(p)?;
        Alphabet::from_json(&text).map_err(CliError::from)
    })
    .transpose()
}

fn load_sequences(run: &mut Run, input: &SeqInput) -> Result<SequenceSet, CliError> {
    let alphabet = load_alphabet(run, input.alphabet.as_deref())?;
    let bytes = run.read(&input.sequences)?;
    let set = match input.input_format {
        InputFormat::Wide => {
            let opts = WideOptions {
                id_column: input.id_column.clone(),
                ..WideOptions::default()
            };
            parse_wide(bytes.as_slice(), &opts, alphabet.as_ref())?
        }
        InputFormat::Spells => {
            let spells = parse_spells(bytes.as_slice())?;
            let alphabet = match alphabet {
                Some(a) => a,
                None => {
                    let mut states: Vec<&str> = Vec::new();
                    for s in &spells {
                        if !states.contains(&s.state.as_str()) {
                            states.push(&s.state);
                        }
                    }
                    Alphabet::new(states)?
                }
            };
            spells_to_wide(&spells, &alphabet)?
        }
    };
    Ok(set)
}

fn ids_of(set: &SequenceSet) -> Vec<String> {
    set.subject_ids().map(str::to_string).collect()
}

/// Reorders an `id,cluster` file to the sequence order of `set`.
fn load_clusters(run: &mut Run, path: &Path, set: &SequenceSet) -> Result<ClusterAssignment, CliError> {
    let bytes = run.read(path)?;
    let (ids, assignment) = ClusterAssignment::read_csv(bytes.as_slice())?;
    let by_id: HashMap<&str, usize> = ids.iter().map(String::as_str).zip(assignment.labels().iter().copied()).collect();
    let labels = set
        .subject_ids()
        .map(|id| {
            by_id
                .get(id)
                .copied()
                .ok_or_else(|| CliError::validation(format!("{}: no cluster for subject {id:?}", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ClusterAssignment::from_labels(labels)?)
}

fn ingest(mut run: Run, a: &IngestArgs) -> Result<(), CliError> {
    let set = load_sequences(&mut run, &a.input)?;
    run.write("sequences.csv", &bytes_of(|w| write_wide(&set, "t", w))?)?;
    run.write("alphabet.json", format!("{}\n", set.alphabet().to_json()).as_bytes())?;
    if a.spells {
        run.write("spells.csv", &bytes_of(|w| write_spells(&wide_to_spells(&set), w))?)?;
    }
    println!("{} sequences of length {} over {} states", set.len(), set.length(), set.alphabet().len());
    run.finish()
}

fn frequency_csv(set: &SequenceSet, freq: &FrequencyTable) -> Result<Vec<u8>, CliError> {
    bytes_of(|buf| -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["rank", "count", "share", "sequence"])?;
        for (r, e) in freq.entries.iter().enumerate() {
            let mut spells: Vec<String> = Vec::new();
            let mut i = 0;
            while i < e.states.len() {
                let mut j = i;
                while j < e.states.len() && e.states[j] == e.states[i] {
                    j += 1;
                }
                spells.push(format!("({},{})", set.alphabet().state(e.states[i]), j - i));
                i = j;
            }
            w.write_record([(r + 1).to_string(), e.count.to_string(), e.share.to_string(), spells.join("-")])?;
        }
        w.flush()?;
        Ok(())
    })
}

fn stage_describe(run: &mut Run, set: &SequenceSet, top: usize) -> Result<(), CliError> {
    let report = describe(set, top);
    match &report.transition_matrix {
        Some(tm) => {
            run.write("transition.csv", &bytes_of(|w| tm.write_csv(w))?)?;
            if !tm.unobserved_rows.is_empty() {
                let names: Vec<&str> = tm.unobserved_rows.iter().map(|&s| set.alphabet().state(s)).collect();
                run.warn(format!("states never followed by a transition: {}", names.join(", ")));
            }
        }
        None => run.warn("sequences of length 1 have no transitions"),
    }
    run.write("distribution.csv", &bytes_of(|w| report.state_distribution.write_csv(w))?)?;
    run.write("frequency.csv", &frequency_csv(set, &report.frequency)?)?;
    run.write("describe.json", &json_bytes(&report))?;
    Ok(())
}

fn describe_cmd(mut run: Run, a: &DescribeArgs) -> Result<(), CliError> {
    let set = load_sequences(&mut run, &a.input)?;
    stage_describe(&mut run, &set, a.top)?;
    run.finish()
}

fn stage_indicators(run: &mut Run, set: &SequenceSet) -> Result<Vec<IndicatorRow>, CliError> {
    let rows = indicator_table(set);
    run.write("indicators.csv", &bytes_of(|w| write_indicator_csv(&rows, set.alphabet().states(), w))?)?;
    Ok(rows)
}

fn indicators_cmd(mut run: Run, a: &IndicatorsArgs) -> Result<(), CliError> {
    let set = load_sequences(&mut run, &a.input)?;
    stage_indicators(&mut run, &set)?;
    run.finish()
}

fn substitution_costs(run: &mut Run, set: &SequenceSet, p: &DistParams, default: &str) -> Result<SubstitutionCostMatrix, CliError> {
    let a = set.alphabet().len();
    let spec = p.costs.as_deref().unwrap_or(default);
    let costs = match spec {
        "trate" => transition_rate_costs(set)?.with_indel(p.indel)?,
        "constant" => SubstitutionCostMatrix::constant(a, p.sub_cost, p.indel)?,
        "unit" => SubstitutionCostMatrix::constant(a, 1.0, p.indel)?,
        file => {
            let bytes = run.read(Path::new(file))?;
            let costs = SubstitutionCostMatrix::read_csv(bytes.as_slice(), set.alphabet(), p.indel)?;
            let v = costs.triangle_violations();
            if v > 0 {
                run.warn(format!("substitution costs violate the triangle inequality on {v} state triples"));
            }
            costs
        }
    };
    if !costs.unobserved_states().is_empty() {
        let names: Vec<&str> = costs.unobserved_states().iter().map(|&s| set.alphabet().state(s)).collect();
        run.warn(format!("no transitions observed out of {}; their costs use zero rates", names.join(", ")));
    }
    Ok(costs)
}

fn stage_dist(run: &mut Run, set: &SequenceSet, p: &DistParams, threads: Option<usize>, write: bool) -> Result<DissimilarityMatrix, CliError> {
    let user_costs = p.costs.as_deref().is_some_and(|c| !matches!(c, "trate" | "constant" | "unit"));
    let metric = match p.metric {
        MetricKind::Lcs => Metric::Lcs,
        MetricKind::Dhd => Metric::Dhd(dhd_costs(set)?),
        MetricKind::Om => Metric::Om(substitution_costs(run, set, p, "trate")?),
        MetricKind::Hamming => Metric::Hamming(Some(substitution_costs(run, set, p, "unit")?)),
    };
    if write {
        if let Metric::Om(c) | Metric::Hamming(Some(c)) = &metric {
            run.write("costs.csv", &bytes_of(|w| c.write_csv(set.alphabet(), w))?)?;
        }
    }
    let d = pairwise_matrix(set, &metric, threads)?;
    if user_costs && p.audit_samples > 0 {
        let audit = d.triangle_audit(p.audit_samples, p.audit_seed);
        if audit.violations > 0 {
            run.warn(format!(
                "triangle inequality fails on {} of {} sampled triples",
                audit.violations, audit.checked
            ));
        }
    }
    if write {
        let binary = match p.format {
            MatrixFormat::Binary => true,
            MatrixFormat::Csv => false,
            MatrixFormat::Auto => set.len() > p.binary_threshold,
        };
        if binary {
            run.write("distances.bin", &bytes_of(|w| d.write_binary(w))?)?;
            let mut ids = ids_of(set).join("\n");
            ids.push('\n');
            run.write("distances.ids.txt", ids.as_bytes())?;
        } else {
            run.write("distances.csv", &bytes_of(|w| d.write_csv(&ids_of(set), w))?)?;
        }
    }
    Ok(d)
}

fn dist_cmd(mut run: Run, a: &DistArgs, threads: Option<usize>) -> Result<(), CliError> {
    let set = load_sequences(&mut run, &a.input)?;
    let d = stage_dist(&mut run, &set, &a.dist, threads, true)?;
    println!("{} x {} {} distances, max {}", d.n(), d.n(), d.metric_tag(), d.max());
    run.finish()
}

fn check_k(k: &KParams, n: usize) -> Result<(), CliError> {
    if let Some(k) = k.k {
        if k == 0 || k > n {
            return Err(CliError::validation(format!("--k must be between 1 and {n}, got {k}")));
        }
    }
    if k.k_min == 0 || k.k_min > k.k_max {
        return Err(CliError::validation(format!("invalid k range {}..={}", k.k_min, k.k_max)));
    }
    Ok(())
}

fn stage_cluster(run: &mut Run, d: &DissimilarityMatrix, ids: &[String], k: &KParams) -> Result<ClusterAssignment, CliError> {
    check_k(k, d.n())?;
    let tree = ward_cluster(d)?;
    if tree.inversions() > 0 {
        run.warn(format!("dendrogram has {} height inversions", tree.inversions()));
    }
    run.write("dendrogram.json", format!("{}\n", tree.to_json()).as_bytes())?;
    let lo = k.k_min.max(2);
    let hi = k.k_max.min(d.n().saturating_sub(1));
    let profile = silhouette_profile(d, &tree, lo..=hi);
    let mut sil = String::from("k,silhouette\n");
    for (kk, s) in &profile {
        sil.push_str(&format!("{kk},{s}\n"));
    }
    run.write("silhouette.csv", sil.as_bytes())?;
    let chosen = match k.k {
        Some(k) => k,
        None => profile
            .iter()
            .fold(None, |best: Option<(usize, f64)>, &(kk, s)| match best {
                Some((_, bs)) if bs >= s => best,
                _ => Some((kk, s)),
            })
            .map(|(kk, _)| kk)
            .ok_or_else(|| CliError::validation("no k in the silhouette range; pass --k"))?,
    };
    if k.k.is_none() {
        run.warn(format!("no --k given; using k = {chosen}, the best average silhouette in silhouette.csv"));
    }
    let labels = cut_tree(&tree, chosen)?;
    run.write("clusters.csv", &bytes_of(|w| labels.write_csv(ids, w))?)?;
    Ok(labels)
}

fn read_matrix(run: &mut Run, path: &Path) -> Result<(Option<Vec<String>>, DissimilarityMatrix), CliError> {
    let bytes = run.read(path)?;
    if bytes.starts_with(b"SQDM") {
        Ok((None, DissimilarityMatrix::read_binary(bytes.as_slice())?))
    } else {
        let (ids, d) = DissimilarityMatrix::read_csv(bytes.as_slice())?;
        Ok((Some(ids), d))
    }
}

fn cluster_cmd(mut run: Run, a: &ClusterArgs) -> Result<(), CliError> {
    let (csv_ids, d) = read_matrix(&mut run, &a.dist)?;
    let ids = if let Some(seq) = &a.sequences {
        let input = SeqInput {
            sequences: seq.clone(),
            alphabet: None,
            input_format: InputFormat::Wide,
            id_column: a.id_column.clone(),
        };
        ids_of(&load_sequences(&mut run, &input)?)
    } else if let Some(ids) = csv_ids {
        ids
    } else {
        let sidecar = a.dist.with_extension("ids.txt");
        if sidecar.exists() {
            run.read_text(&sidecar)?.lines().map(str::to_string).collect()
        } else {
            (1..=d.n()).map(|i| i.to_string()).collect()
        }
    };
    if ids.len() != d.n() {
        return Err(CliError::validation(format!("{} ids for a {} x {} matrix", ids.len(), d.n(), d.n())));
    }
    let labels = stage_cluster(&mut run, &d, &ids, &a.k)?;
    println!("k = {}, sizes {:?}", labels.k(), labels.sizes());
    run.finish()
}

fn stage_profile(run: &mut Run, set: &SequenceSet, labels: &ClusterAssignment, covariates: Option<&Path>) -> Result<(), CliError> {
    let table = match covariates {
        Some(p) => {
            let bytes = run.read(p)?;
            CovariateTable::read_csv(bytes.as_slice())?
        }
        None => {
            let mut t = CovariateTable::new(Vec::new());
            for id in set.subject_ids() {
                t.insert(id, Vec::new())?;
            }
            t
        }
    };
    let report = cluster_profile(set, labels, &table)?;
    for v in &report.variables {
        if let crate::descriptives::ProfileVariable::Categorical { name, low_expected: true, .. } = v {
            run.warn(format!("{name}: expected counts below 5, chi-squared p-value is approximate"));
        }
    }
    let text = report.render_text();
    run.write("profile.txt", text.as_bytes())?;
    run.write("profile.csv", &bytes_of(|w| report.write_csv(w))?)?;
    run.write("profile.json", &json_bytes(&report))?;
    Ok(())
}

fn profile_cmd(mut run: Run, a: &ProfileArgs) -> Result<(), CliError> {
    let set = load_sequences(&mut run, &a.input)?;
    let labels = load_clusters(&mut run, &a.clusters, &set)?;
    stage_profile(&mut run, &set, &labels, a.covariates.as_deref())?;
    print!("{}", std::fs::read_to_string(a.out.out_dir.join("profile.txt")).unwrap_or_default());
    run.finish()
}

fn ties(t: TiesArg) -> Ties {
    match t {
        TiesArg::Efron => Ties::Efron,
        TiesArg::Breslow => Ties::Breslow,
    }
}

fn stage_assoc(
    run: &mut Run,
    labels: &ClusterAssignment,
    indicators: &[IndicatorRow],
    outcomes: &Path,
    t: TiesArg,
) -> Result<String, CliError> {
    let bytes = run.read(outcomes)?;
    let table = OutcomeTable::read_csv(bytes.as_slice())?;
    let design = build_design(labels, indicators, &table)?;
    let opts = CoxOptions {
        ties: ties(t),
        ..CoxOptions::default()
    };
    let report = univariable_and_adjusted(&design, &opts)?;
    if !report.adjusted.converged {
        run.warn("adjusted Cox fit reached the iteration limit before converging");
    }
    let text = report.render_text();
    run.write("cox.txt", text.as_bytes())?;
    run.write("cox.csv", &bytes_of(|w| report.write_csv(w))?)?;
    run.write("cox.json", &json_bytes(&report))?;
    Ok(text)
}

fn assoc_cmd(mut run: Run, a: &AssocArgs) -> Result<(), CliError> {
    let set = load_sequences(&mut run, &a.input)?;
    let labels = load_clusters(&mut run, &a.clusters, &set)?;
    let text = stage_assoc(&mut run, &labels, &indicator_table(&set), &a.outcomes, a.ties)?;
    print!("{text}");
    run.finish()
}

fn stage_plot(run: &mut Run, set: &SequenceSet, labels: Option<&ClusterAssignment>, p: &PlotParams) -> Result<(), CliError> {
    let sort = match p.sort {
        SortArg::Input => SortKey::Input,
        SortArg::FirstState => SortKey::FirstState,
        SortArg::Cluster => SortKey::Cluster,
    };
    let config = PlotConfig::for_alphabet(set.alphabet())
        .with_legend(!p.no_legend)
        .with_size(p.width, p.height)?
        .with_sort(sort);
    for (name, svg) in render_suite(set, labels, &config, &p.prefix, p.top)? {
        run.write(&name, svg.as_bytes())?;
    }
    Ok(())
}

fn plot_cmd(mut run: Run, a: &PlotArgs) -> Result<(), CliError> {
    let set = load_sequences(&mut run, &a.input)?;
    let labels = a.clusters.as_deref().map(|p| load_clusters(&mut run, p, &set)).transpose()?;
    stage_plot(&mut run, &set, labels.as_ref(), &a.plot)?;
    run.finish()
}

/// Reads a `from\to,<states>` CSV into rows ordered like `alphabet`.
fn read_transition(run: &mut Run, path: &Path, alphabet: &Alphabet) -> Result<Vec<Vec<f64>>, CliError> {
    let bytes = run.read(path)?;
    let bad = |m: String| CliError::validation(format!("{}: {m}", path.display()));
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes.as_slice());
    let header: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
    let cols = header
        .iter()
        .map(|h| alphabet.index_of(h).ok_or_else(|| bad(format!("unknown state {h:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let a = alphabet.len();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; a];
    for rec in rdr.records() {
        let rec = rec?;
        let from = alphabet.index_of(&rec[0]).ok_or_else(|| bad(format!("unknown state {:?}", &rec[0])))?;
        let mut row = vec![0.0; a];
        for (c, &to) in cols.iter().enumerate() {
            let v = rec.get(c + 1).unwrap_or("");
            row[to] = v.parse().map_err(|_| bad(format!("{v:?} is not a number")))?;
        }
        rows[from] = Some(row);
    }
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or_else(|| bad(format!("no row for state {}", alphabet.state(i)))))
        .collect()
}

fn simulate_cmd(mut run: Run, a: &SimulateArgs, threads: Option<usize>) -> Result<(), CliError> {
    run.set_seed(a.seed);
    let mut spec = match &a.transition {
        Some(path) => {
            let alphabet = load_alphabet(&mut run, a.alphabet.as_deref())?
                .ok_or_else(|| CliError::validation("--transition needs --alphabet"))?;
            let matrix = read_transition(&mut run, path, &alphabet)?;
            GeneratorSpec::uniform(alphabet, matrix, a.n, a.t, a.seed)?
        }
        None => GeneratorSpec::uniform(Alphabet::treatment_coverage(), coverage_transitions(), a.n, a.t, a.seed)?,
    };
    if let Some(path) = &a.initial_from {
        let input = SeqInput {
            sequences: path.clone(),
            alphabet: None,
            input_format: InputFormat::Wide,
            id_column: "id".into(),
        };
        let bytes = run.read(&input.sequences)?;
        let cohort = parse_wide(bytes.as_slice(), &WideOptions::default(), Some(spec.alphabet()))?;
        spec = spec.with_initial_from(&cohort)?;
    }
    let set = generate_sequences(&spec)?;
    let header = spec.header();
    let mut wide = header.clone().into_bytes();
    write_wide(&set, "t", &mut wide)?;
    run.write("sequences.csv", &wide)?;
    run.write("alphabet.json", format!("{}\n", spec.alphabet().to_json()).as_bytes())?;

    let mut pipeline = String::from("# written by `seqpath simulate`\n");
    pipeline.push_str("sequences = \"sequences.csv\"\nalphabet = \"alphabet.json\"\nout_dir = \"results\"\n");
    pipeline.push_str(&format!("metric = \"{}\"\n", serde_json::to_value(a.dist.metric).expect("enum").as_str().expect("string")));
    if let Some(c) = &a.dist.costs {
        pipeline.push_str(&format!("costs = \"{c}\"\n"));
    }
    pipeline.push_str(&format!("sub_cost = {:?}\nindel = {:?}\n", a.dist.sub_cost, a.dist.indel));

    if !a.no_outcomes {
        if a.hr.is_empty() {
            return Err(CliError::validation("--hr needs at least one value"));
        }
        let d = stage_dist(&mut run, &set, &a.dist, threads, false)?;
        let k = KParams {
            k: Some(a.hr.len()),
            k_min: 2,
            k_max: 2,
        };
        check_k(&k, set.len())?;
        let tree = ward_cluster(&d)?;
        let labels = cut_tree(&tree, a.hr.len())?;
        let ids = ids_of(&set);
        let outcomes = generate_outcomes(&ids, &labels, &a.hr, a.baseline_rate, a.censor_time, a.seed)?;
        let hr: Vec<String> = a.hr.iter().map(|h| h.to_string()).collect();
        let mut out = format!(
            "{header}# outcomes: exponential, rate {} x hr[cluster], hr = {}, censored at {}\n",
            a.baseline_rate,
            hr.join(" "),
            a.censor_time
        )
        .into_bytes();
        outcomes.write_csv(&mut out)?;
        run.write("outcomes.csv", &out)?;
        run.write("simulated_clusters.csv", &bytes_of(|w| labels.write_csv(&ids, w))?)?;
        pipeline.push_str(&format!("outcomes = \"outcomes.csv\"\nk = {}\n", a.hr.len()));
        println!(
            "{} sequences, {} events, cluster sizes {:?}",
            set.len(),
            outcomes.events(),
            labels.sizes()
        );
    } else {
        println!("{} sequences", set.len());
    }
    run.write("pipeline.toml", pipeline.as_bytes())?;
    run.finish()
}

fn pipeline_cmd(mut run: Run, a: &PipelineArgs, threads: Option<usize>) -> Result<(), CliError> {
    let set = load_sequences(&mut run, &a.input)?;
    run.write("alphabet.json", format!("{}\n", set.alphabet().to_json()).as_bytes())?;
    stage_describe(&mut run, &set, a.plot.top)?;
    let indicators = stage_indicators(&mut run, &set)?;
    let d = stage_dist(&mut run, &set, &a.dist, threads, true)?;
    let labels = stage_cluster(&mut run, &d, &ids_of(&set), &a.k)?;
    stage_profile(&mut run, &set, &labels, a.covariates.as_deref())?;
    if let Some(outcomes) = &a.outcomes {
        let text = stage_assoc(&mut run, &labels, &indicators, outcomes, a.ties)?;
        print!("{text}");
    }
    stage_plot(&mut run, &set, Some(&labels), &a.plot)?;
    println!("{} sequences, k = {}, cluster sizes {:?}", set.len(), labels.k(), labels.sizes());
    run.finish()
}
