use std::path::PathBuf;
use std::sync::Arc;

use riskbench_core::canonical::Timestamp;
use riskbench_core::registry::{default_home, DatasetCard, DatasetFilter, DatasetRef, Registry};
use riskbench_core::scoring::{score, validate_submission};
use riskbench_core::synthgen::{generate, preset, SyntheticConfig};
use riskbench_core::tasks::{load_task, materialize_registered, template, SplitSpec, TaskSpec};
use riskbench_service::{system_clock, Evidence, Service};
use serde_json::{json, Value};

use crate::args::*;
use crate::error::{read_input, CliError};

pub fn run(cli: Cli) -> Result<Value, CliError> {
    let home = cli.home.clone().unwrap_or_else(default_home);
    match cli.command {
        Command::Generate(a) => run_generate(a),
        Command::Register(a) => run_register(&home, a),
        Command::List(a) => run_list(&home, a),
        Command::Verify(a) => run_verify(&home, a),
        Command::Materialize(a) => run_materialize(&home, a),
        Command::Score(a) => run_score(&home, a),
        Command::Submit(a) => run_submit(&home, a),
        Command::Leaderboard(a) => run_leaderboard(&home, a),
        Command::Serve(a) => run_serve(&home, a),
    }
}

fn to_value<T: serde::Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("output serializes")
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &std::path::Path, code: &'static str) -> Result<T, CliError> {
    let bytes = read_input(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::user(code, format!("{}: {e}", path.display())))
}

fn run_generate(a: GenerateArgs) -> Result<Value, CliError> {
    let mut config: SyntheticConfig = match (&a.config, &a.preset) {
        (Some(path), _) => {
            let text = String::from_utf8(read_input(path)?)
                .map_err(|_| CliError::user("INVALID_CONFIG", format!("{} is not UTF-8", path.display())))?;
            SyntheticConfig::from_json(&text)?
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => return Err(CliError::usage("pass --config or --preset")),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(n) = a.n_players {
        config.n_players = n;
    }
    if let Some(s) = a.signal_strength {
        config.signal_strength = s;
    }
    if let Some(p) = a.prevalence {
        config.prevalence = p;
    }
    let dataset = generate(&config)?;
    dataset.write_to_dir(&a.out)?;
    Ok(json!({
        "out": a.out,
        "dataset": dataset.card.dataset_ref().map(|r| r.to_string()).ok(),
        "config_sha256": dataset.manifest.config_sha256,
        "counts": dataset.manifest.counts,
        "label_allocation": dataset.manifest.label_allocation,
    }))
}

fn run_register(home: &std::path::Path, a: RegisterArgs) -> Result<Value, CliError> {
    let registry = Registry::open(home)?;
    let dataset = match (a.dir, a.events, a.labels, a.card) {
        (Some(dir), ..) => {
            if !dir.is_dir() {
                return Err(CliError::user("INPUT_NOT_READABLE", format!("{} is not a directory", dir.display())));
            }
            let card: DatasetCard = parse_json(&dir.join("card.json"), "CARD_MISMATCH")?;
            let manifest = dir.join("manifest.json");
            let manifest = manifest.exists().then(|| read_input(&manifest)).transpose()?;
            registry.register_bytes(
                &read_input(&dir.join("events.csv"))?,
                &read_input(&dir.join("labels.csv"))?,
                &card,
                manifest.as_deref(),
            )?
        }
        (None, Some(events), Some(labels), Some(card)) => {
            let card: DatasetCard = parse_json(&card, "CARD_MISMATCH")?;
            let manifest = a.manifest.as_deref().map(read_input).transpose()?;
            registry.register_bytes(&read_input(&events)?, &read_input(&labels)?, &card, manifest.as_deref())?
        }
        _ => return Err(CliError::usage("pass a dataset directory or --events, --labels and --card")),
    };
    let index = registry.index()?;
    let entry = index.entry(&dataset).expect("just registered");
    Ok(json!({ "dataset": dataset.to_string(), "checksums": entry.checksums }))
}

fn run_list(home: &std::path::Path, a: ListArgs) -> Result<Value, CliError> {
    let registry = Registry::open(home)?;
    let filter = DatasetFilter {
        vertical: a.vertical,
        engagement_level: a.engagement_level,
        min_horizon_days: a.min_horizon_days,
        max_horizon_days: a.max_horizon_days,
    };
    Ok(to_value(&registry.list(&filter)?))
}

fn run_verify(home: &std::path::Path, a: VerifyArgs) -> Result<Value, CliError> {
    let registry = Registry::open(home)?;
    let dataset: DatasetRef = a.dataset.parse()?;
    let report = registry.verify(&dataset)?;
    if !report.pass {
        // The report is still useful on stdout; the error line goes to stderr.
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        return Err(CliError::user(
            "INTEGRITY_FAILURE",
            format!("{dataset}: {} do not match the index", report.failed_files().join(", ")),
        ));
    }
    Ok(to_value(&report))
}

/// Latest registered dataset whose card lists the template, when the user
/// did not name one.
fn dataset_for_template(registry: &Registry, task: &str) -> Result<DatasetRef, CliError> {
    let mut matches: Vec<DatasetRef> = Vec::new();
    for entry in registry.list(&DatasetFilter::default())? {
        let lists_task = entry.card.benchmark_tasks.iter().any(|t| t.task_id.eq_ignore_ascii_case(task));
        if lists_task && !matches.iter().any(|m| m.id == entry.dataset.id) {
            matches.push(entry.dataset);
        }
    }
    match matches.len() {
        1 => Ok(matches.remove(0)),
        0 => Err(CliError::user("UNKNOWN_DATASET", format!("no registered dataset lists task {task}; pass --dataset"))),
        _ => Err(CliError::usage(format!("several datasets list task {task}; pass --dataset"))),
    }
}

fn run_materialize(home: &std::path::Path, a: MaterializeArgs) -> Result<Value, CliError> {
    let registry = Registry::open(home)?;
    let mut spec: TaskSpec = match (&a.spec, &a.task) {
        (Some(path), _) => parse_json(path, "INVALID_SPEC")?,
        (None, Some(task)) => {
            let tpl = template(task).ok_or_else(|| CliError::user("UNKNOWN_TASK", format!("no built-in task {task}")))?;
            let dataset = match &a.dataset {
                Some(d) => d.parse()?,
                None => dataset_for_template(&registry, tpl.id)?,
            };
            let card = registry
                .index()?
                .entry(&dataset)
                .map(|e| e.card.clone())
                .ok_or_else(|| CliError::user("UNKNOWN_DATASET", format!("unknown dataset {dataset}")))?;
            tpl.spec_for(&dataset, &card)
        }
        (None, None) => return Err(CliError::usage("pass --task or --spec")),
    };
    if let Some(id) = a.task_id {
        spec.task_id = id;
    }
    if a.train_fraction.is_some() || a.salt.is_some() {
        spec.split = SplitSpec {
            train_fraction: a.train_fraction.unwrap_or(spec.split.train_fraction),
            salt: a.salt.unwrap_or(spec.split.salt),
            ..spec.split
        };
    }
    let (bundle, dir) = materialize_registered(&registry, &spec, a.force)?;
    Ok(json!({
        "task_id": spec.task_id,
        "dir": dir,
        "card": bundle.card,
        "n_train_players": bundle.train_labels.len(),
        "n_test_players": bundle.answer_key.len(),
    }))
}

fn now_or(text: Option<&str>) -> Result<Timestamp, CliError> {
    match text {
        Some(t) => Timestamp::parse(t).ok_or_else(|| CliError::usage(format!("invalid timestamp {t:?}"))),
        None => Ok(system_clock()()),
    }
}

fn run_score(home: &std::path::Path, a: ScoreArgs) -> Result<Value, CliError> {
    let registry = Registry::open(home)?;
    let scored_at = now_or(a.scored_at.as_deref())?;
    let bundle = load_task(&registry, &a.task)?;
    let bytes = read_input(&a.file)?;
    let preds = validate_submission(&bytes, &bundle)?;
    Ok(to_value(&score(&preds, &bundle, scored_at)?))
}

fn evidence(a: EvidenceArgs) -> Evidence {
    Evidence {
        code_url: a.code_url,
        publication_ref: a.publication_ref,
        container_digest: a.container_digest,
    }
    .normalized()
}

fn remote_url(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path.trim_start_matches('/'))
}

fn remote_json(response: reqwest::blocking::Response) -> Result<Value, CliError> {
    let status = response.status();
    let body: Value = response
        .bytes()
        .map_err(|e| e.to_string())
        .and_then(|b| serde_json::from_slice(&b).map_err(|e| e.to_string()))
        .map_err(|e| CliError::internal("REMOTE_FAILURE", format!("unreadable response: {e}")))?;
    if status.is_success() {
        return Ok(body);
    }
    let message = format!(
        "server answered {status}: {} {}",
        body["code"].as_str().unwrap_or("ERROR"),
        body["message"].as_str().unwrap_or_default()
    );
    if status.is_client_error() {
        Err(CliError::user("REMOTE_REJECTED", message))
    } else {
        Err(CliError::internal("REMOTE_FAILURE", message))
    }
}

fn remote_error(e: reqwest::Error) -> CliError {
    CliError::user("REMOTE_UNREACHABLE", format!("request failed: {e}"))
}

fn run_submit(home: &std::path::Path, a: SubmitArgs) -> Result<Value, CliError> {
    let bytes = read_input(&a.file)?;
    let evidence = evidence(a.evidence);
    if let Some(base) = a.remote {
        let file_name = a
            .file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "predictions.csv".into());
        let form = reqwest::blocking::multipart::Form::new()
            .text("submitter", a.submitter)
            .text("evidence", serde_json::to_string(&evidence).expect("evidence serializes"))
            .part("file", reqwest::blocking::multipart::Part::bytes(bytes).file_name(file_name));
        let response = reqwest::blocking::Client::new()
            .post(remote_url(&base, &format!("tasks/{}/submissions", a.task)))
            .multipart(form)
            .send()
            .map_err(remote_error)?;
        return remote_json(response);
    }
    let service = Service::new(Registry::open(home)?, system_clock())?;
    let record = service.record_submission(&a.task, &a.submitter, &bytes, evidence)?;
    Ok(to_value(&record))
}

fn run_leaderboard(home: &std::path::Path, a: LeaderboardArgs) -> Result<Value, CliError> {
    if let Some(base) = a.remote {
        let response = reqwest::blocking::get(remote_url(&base, &format!("tasks/{}/leaderboard", a.task)))
            .map_err(remote_error)?;
        return remote_json(response);
    }
    let service = Service::new(Registry::open(home)?, system_clock())?;
    Ok(to_value(&service.leaderboard(&a.task)?))
}

fn run_serve(home: &std::path::Path, a: ServeArgs) -> Result<Value, CliError> {
    let service = Arc::new(Service::new(Registry::open(home)?, system_clock())?);
    let addr = std::net::SocketAddr::new(a.host, a.port);
    let runtime = tokio::runtime::Runtime::new()?;
    eprintln!("riskbench serving {} on http://{addr}", PathBuf::from(home).display());
    runtime
        .block_on(riskbench_service::serve(service, addr))
        .map_err(|e| CliError::user("SERVE_FAILED", format!("cannot serve on {addr}: {e}")))?;
    Ok(json!({ "stopped": true }))
}
