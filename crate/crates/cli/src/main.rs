use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use wmprc_core::design::alliance_row;
use wmprc_core::indices::{classify_strength, minr, rank_correlation};
use wmprc_core::ingest::csv::write_matches;
use wmprc_core::ingest::import::{import_mapped_csv, ColumnMap};
use wmprc_core::ingest::{read_matches_csv, EventDataset, Source, TbaClient};
use wmprc_core::report::{criteria_csv, digest, summary_csv, summary_json, ModelFile, SummaryMetadata};
use wmprc_core::simulator::{make_scenario, run_experiment, synthetic_design, ExperimentConfig};
use wmprc_core::trace::{trace_diff, ChainTrace};
use wmprc_core::{
    generate_candidates, predict_outcome, predict_prob, predict_score, select, ClusteredModel, Criterion,
    Error, Method, Result, TOOL_VERSION,
};

#[derive(Parser)]
#[command(name = "wmprc", version, about = "Latent-cluster robot strength ratings for three-on-three matches")]
struct Cli {
    /// Directory for emitted files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Upper bound on worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Canonical match CSV.
    #[arg(long, conflicts_with = "event", required_unless_present = "event")]
    input: Option<PathBuf>,
    /// Event key to load from The Blue Alliance instead of a file.
    #[arg(long)]
    event: Option<String>,
    /// Match ids to drop, comma-separated.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
    #[arg(long, env = "TBA_AUTH_KEY", hide_env_values = true, default_value = "")]
    tba_key: String,
    #[arg(long, env = "CACHE_DIR", default_value = ".wmprc-cache")]
    cache_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a candidate chain, select a model, write model.json, criteria.csv and trace.json.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "tcl", value_parser = parse_method)]
        method: Method,
        #[arg(long, default_value = "mspeb_d", value_parser = parse_criterion)]
        criterion: Criterion,
        /// Recorded in the outputs; the fit itself is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Predict a hypothetical match from a fitted model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Three robot ids, comma-separated.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        red: Vec<String>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        blue: Vec<String>,
    },
    /// MINR and rank correlation between two fitted models of the same roster.
    Indices {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
    },
    /// Run a simulation experiment from a TOML config; writes summary.csv and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Convert a match table with other column names into the canonical CSV.
    Import {
        #[arg(long)]
        input: PathBuf,
        /// Column mapping, e.g. `match_id=Match,red_score=Red Score`; unmapped fields keep their names.
        #[arg(long, default_value = "")]
        map: String,
        /// Output file name inside --out-dir (default: input file name).
        #[arg(long)]
        output: Option<String>,
    },
    /// Download an event's qualification matches into <out-dir>/<event>.csv.
    Fetch {
        #[command(flatten)]
        data: DataArgs,
    },
    /// First point where two trace.json files disagree.
    TraceDiff {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
    },
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_criterion(s: &str) -> std::result::Result<Criterion, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Dataset plus the digest of the bytes it was read from.
fn load(data: &DataArgs) -> Result<(EventDataset, String)> {
    match (&data.input, &data.event) {
        (Some(path), _) => {
            let bytes = fs::read(path)?;
            Ok((read_matches_csv(path, &data.exclude)?, digest(&bytes)))
        }
        (None, Some(event)) => {
            let client = TbaClient::new(data.tba_key.clone(), &data.cache_dir);
            let ds = client.event_matches(event, &data.exclude)?;
            let bytes = fs::read(client.cache_path(event))?;
            Ok((ds, digest(&bytes)))
        }
        (None, None) => Err(Error::Validation("either --input or --event is required".into())),
    }
}

fn write(out_dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn provenance(input_digest: &str, seed: u64) -> String {
    format!("# tool_version={TOOL_VERSION} input_digest={input_digest} seed={seed}\n")
}

fn fit(cli: &Cli, data: &DataArgs, method: Method, criterion: Criterion, seed: u64) -> Result<Value> {
    let (ds, input_digest) = load(data)?;
    let design = ds.design()?;
    let chain = generate_candidates(&design, method)?;
    let sel = select(&chain, criterion)?;
    let file = ModelFile::new(
        &sel.model,
        &ds.roster,
        &sel.table,
        &ds.event,
        method.name(),
        Some(criterion),
        &input_digest,
        seed,
        &ds.excluded,
    );
    let model_path = write(&cli.out_dir, "model.json", &file.to_json()?)?;
    let curve = provenance(&input_digest, seed) + &criteria_csv(&sel.table);
    let curve_path = write(&cli.out_dir, "criteria.csv", &curve)?;
    let trace = json!({
        "tool_version": TOOL_VERSION,
        "input_digest": input_digest,
        "seed": seed,
        "trace": ChainTrace::from_chain(&chain, &ds.roster),
    });
    let trace_path = write(&cli.out_dir, "trace.json", &(serde_json::to_string_pretty(&trace)? + "\n"))?;
    Ok(json!({
        "event": ds.event,
        "matches": design.m(),
        "robots": design.k(),
        "method": method.name(),
        "criterion": criterion.name(),
        "c": sel.c,
        "cluster_sizes": sel.model.assignment().sizes(),
        "theta": sel.model.theta(),
        "files": [model_path, curve_path, trace_path],
    }))
}

fn read_model(path: &Path) -> Result<ModelFile> {
    ModelFile::from_json(&fs::read_to_string(path)?)
}

fn predict(model: &Path, red: &[String], blue: &[String]) -> Result<Value> {
    let file = read_model(model)?;
    let m = file.model()?;
    let x = alliance_row(&file.roster()?, red, blue)?;
    Ok(json!({
        "y_hat": predict_score(&m, &x)?,
        "p_hat": predict_prob(&m, &x)?,
        "d_hat": predict_outcome(&m, &x)?,
    }))
}

/// `right` with its robots put in the order of `left`'s roster.
fn align(left: &ModelFile, right: &ModelFile) -> Result<ClusteredModel> {
    let model = right.model()?;
    if left.roster == right.roster {
        return Ok(model);
    }
    let roster = right.roster()?;
    let mut labels = Vec::with_capacity(left.roster.len());
    for id in &left.roster {
        let i = roster
            .index_of(id)
            .ok_or_else(|| Error::Validation(format!("robot `{id}` is missing from {}", right.event)))?;
        labels.push(model.assignment().label(i));
    }
    if labels.len() != roster.len() {
        return Err(Error::Validation("models cover different rosters".into()));
    }
    let g = wmprc_core::ClusterAssignment::new(labels, model.clusters())?;
    ClusteredModel::from_parts(g, model.theta().to_vec(), vec![])
}

fn indices(left: &Path, right: &Path) -> Result<Value> {
    let (a_file, b_file) = (read_model(left)?, read_model(right)?);
    let a = a_file.model()?;
    let b = align(&a_file, &b_file)?;
    let (mi, rc) = (minr(&a, &b)?, rank_correlation(&a, &b)?);
    Ok(json!({
        "minr": mi,
        "minr_label": classify_strength(mi).name(),
        "rc": rc,
        "rc_label": classify_strength(rc).name(),
    }))
}

fn simulate(cli: &Cli, config: &Path, seed: Option<u64>) -> Result<Value> {
    let config_bytes = fs::read(config)?;
    let cfg = ExperimentConfig::load(config)?;
    let mut spec = cfg.spec.clone();
    if let Some(s) = seed {
        spec.master_seed = s;
    }
    if cli.threads.is_some() {
        spec.threads = cli.threads;
    }
    let (design, source, schedule_digest) = match &cfg.schedule {
        Some(path) => {
            let bytes = fs::read(path)?;
            (read_matches_csv(path, &cfg.exclude)?.design()?, "file", digest(&bytes))
        }
        None => {
            let (_, design) = synthetic_design(cfg.scenario.robots(), cfg.scenario.matches(), spec.master_seed)?;
            let rows = format!("{:?}", design.alliances());
            (design, "synthetic", digest(rows.as_bytes()))
        }
    };
    let truth = make_scenario(cfg.scenario, cfg.sigma_multiplier, &design)?;
    let summary = run_experiment(&truth, &design, &spec)?;
    let meta = SummaryMetadata {
        schema_version: 1,
        tool_version: TOOL_VERSION.to_owned(),
        config_digest: digest(&config_bytes),
        schedule_digest,
        schedule_source: source.to_owned(),
        sigma_multiplier: cfg.sigma_multiplier,
        methods: spec.methods.iter().map(|m| m.name().to_owned()).collect(),
        criteria: spec.criteria.iter().map(|c| c.name().to_owned()).collect(),
        epsilon: spec.chain.epsilon,
        max_iter: spec.chain.max_iter,
    };
    let csv = provenance(&meta.config_digest, spec.master_seed) + &summary_csv(&summary);
    let csv_path = write(&cli.out_dir, "summary.csv", &csv)?;
    let json_path = write(&cli.out_dir, "summary.json", &summary_json(&summary, &meta)?)?;
    Ok(json!({
        "scenario": summary.scenario,
        "sigma": summary.sigma,
        "reps": summary.reps,
        "schedule_source": source,
        "files": [csv_path, json_path],
    }))
}

fn import(cli: &Cli, input: &Path, map: &str, output: Option<&str>) -> Result<Value> {
    let map = ColumnMap::parse(map)?;
    let file = fs::File::open(input)?;
    let matches = import_mapped_csv(file, &map, &input.display().to_string())?;
    let name = output.map(str::to_owned).unwrap_or_else(|| {
        input.file_name().map_or_else(|| "matches.csv".to_owned(), |n| n.to_string_lossy().into_owned())
    });
    let mut bytes = Vec::new();
    write_matches(&matches, &mut bytes)?;
    let path = write(&cli.out_dir, &name, &String::from_utf8(bytes).expect("CSV writer emits UTF-8"))?;
    Ok(json!({ "matches": matches.len(), "file": path }))
}

fn fetch(cli: &Cli, data: &DataArgs) -> Result<Value> {
    let Some(event) = &data.event else {
        return Err(Error::Validation("fetch needs --event".into()));
    };
    let (ds, _) = load(data)?;
    let mut bytes = Vec::new();
    write_matches(&ds.matches, &mut bytes)?;
    let path = write(&cli.out_dir, &format!("{event}.csv"), &String::from_utf8(bytes).expect("CSV writer emits UTF-8"))?;
    Ok(json!({
        "event": ds.event,
        "matches": ds.matches.len(),
        "robots": ds.roster.len(),
        "from_cache": ds.source == Source::Cache,
        "file": path,
    }))
}

/// Accepts both a bare trace and the wrapped form written by `fit`.
fn read_trace(path: &Path) -> Result<ChainTrace> {
    let v: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let inner = v.get("trace").cloned().unwrap_or(v);
    Ok(serde_json::from_value(inner)?)
}

fn run(cli: &Cli) -> Result<Value> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Validation("--threads must be at least 1".into()));
        }
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Fit { data, method, criterion, seed } => fit(cli, data, *method, *criterion, *seed),
        Command::Predict { model, red, blue } => predict(model, red, blue),
        Command::Indices { left, right } => indices(left, right),
        Command::Simulate { config, seed } => simulate(cli, config, *seed),
        Command::Import { input, map, output } => import(cli, input, map, output.as_deref()),
        Command::Fetch { data } => fetch(cli, data),
        Command::TraceDiff { left, right } => {
            let d = trace_diff(&read_trace(left)?, &read_trace(right)?);
            Ok(json!({ "divergence": d }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("JSON values serialize"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let err = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{err}");
            ExitCode::FAILURE
        }
    }
}
