//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskbench_core::canonical::{parse_events, Activity, EventRecord, Timestamp, TransactionStatus, SECONDS_PER_DAY};
use riskbench_core::registry::{Registry, StoredDataset};
use riskbench_core::scoring::{
    roc_auc, score, validate_submission, write_submission, BinaryConfusion, Metric, Prediction, ScoreReport,
};
use riskbench_core::synthgen::{generate, preset, GeneratedDataset};
use riskbench_core::tasks::{
    materialize, materialize_registered, pgsi_to_binary, pgsi_to_bucket, scan_for_leaks, template, TaskBundle,
    TaskKind, TEST_EVENTS_FILE,
};
use riskbench_service::{router, system_clock, Service};
use serde_json::Value;
use tower::ServiceExt;

/// Absolute tolerance for comparing metric values with their oracles.
const METRIC_TOLERANCE: f64 = 1e-12;
const ORACLE_INSTANCES: usize = 1000;
const ORACLE_MAX_N: usize = 20;
const EARLY_RISK_PLAYERS: usize = 5_465;
const EARLY_RISK_SESSIONS: f64 = 105_677.0;
const SESSION_TOLERANCE: f64 = 0.05;
const SIGNAL_PLAYERS: u32 = 5_000;
const SIGNAL_MIN_AUC: f64 = 0.65;
const NULL_AUC_RANGE: (f64, f64) = (0.45, 0.55);

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn FnOnce() -> Check + 'a>);

fn ensure(condition: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(message())
    }
}

fn within(label: &str, started: Instant, limit: Duration) -> Result<(), String> {
    let elapsed = started.elapsed();
    ensure(elapsed < limit, || format!("{label} took {elapsed:.2?}, limit {limit:?}"))
}

fn stored(data: &GeneratedDataset) -> StoredDataset {
    StoredDataset {
        dataset: data.card.dataset_ref().unwrap(),
        card: data.card.clone(),
        events: data.events.clone(),
        labels: data.labels.clone(),
    }
}

/// Declined share of each test player's deposits; 0 without deposits.
fn declined_rate<'a>(test_events: impl IntoIterator<Item = &'a EventRecord>) -> BTreeMap<String, Prediction> {
    let mut counts: BTreeMap<String, (u32, u32)> = BTreeMap::new();
    for e in test_events {
        let c = counts.entry(e.player_id.clone()).or_default();
        if let Activity::Deposit(t) = &e.activity {
            c.1 += 1;
            c.0 += u32::from(t.status == TransactionStatus::Declined);
        }
    }
    counts
        .into_iter()
        .map(|(p, (d, n))| (p, Prediction::Score(if n == 0 { 0.0 } else { f64::from(d) / f64::from(n) })))
        .collect()
}

fn submission_bytes(preds: &BTreeMap<String, Prediction>) -> Vec<u8> {
    write_submission(TaskKind::Binary, preds.iter().map(|(p, v)| (p.as_str(), v)))
}

fn max_span_days(events: &[EventRecord]) -> f64 {
    let mut span: BTreeMap<&str, (i64, i64)> = BTreeMap::new();
    for e in events {
        let t = e.start_time.unix();
        let s = span.entry(&e.player_id).or_insert((t, t));
        s.0 = s.0.min(t);
        s.1 = s.1.max(t);
    }
    span.values().map(|(lo, hi)| (hi - lo) as f64 / SECONDS_PER_DAY as f64).fold(0.0, f64::max)
}

fn pathology() -> Check {
    let started = Instant::now();
    let mut config = preset("early_risk").unwrap();
    config.n_players = 400;
    let data = stored(&generate(&config).unwrap());
    let mut spec = template("B1").unwrap().spec_for(&data.dataset, &data.card);
    spec.split.train_fraction = 0.5;
    // Search split salts for a test set whose prevalence is exactly 0.10.
    let bundle = (0..2000)
        .find_map(|k| {
            spec.split.salt = format!("pathology-{k}");
            let bundle = materialize(&spec, &data).unwrap();
            let positives = bundle.answer_key.iter().filter(|(_, t)| *t == "1").count();
            (positives * 10 == bundle.answer_key.len()).then_some(bundle)
        })
        .ok_or("no salt gives an exact 0.10 test prevalence")?;
    let zeros: BTreeMap<String, Prediction> =
        bundle.answer_key.players().map(|p| (p.to_string(), Prediction::Score(0.0))).collect();
    let preds = validate_submission(&submission_bytes(&zeros), &bundle).map_err(|e| e.to_string())?;
    let report = score(&preds, &bundle, Timestamp::from_unix(0)).map_err(|e| e.to_string())?;

    let near = |m: Metric, v: f64| m.value().is_some_and(|x| (x - v).abs() <= METRIC_TOLERANCE);
    ensure((report.prevalence - 0.1).abs() <= METRIC_TOLERANCE, || format!("prevalence {}", report.prevalence))?;
    ensure(near(report.accuracy, 0.9), || format!("accuracy {}", report.accuracy))?;
    ensure(near(report.sensitivity, 0.0), || format!("sensitivity {}", report.sensitivity))?;
    ensure(report.precision.is_undefined(), || format!("precision {}", report.precision))?;
    ensure((report.no_information_rate - 0.9).abs() <= METRIC_TOLERANCE, || {
        format!("no_information_rate {}", report.no_information_rate)
    })?;
    within("pathology", started, Duration::from_secs(1))?;
    Ok(format!(
        "n_test={} accuracy={} sensitivity={} precision={} nir={:.4} salt={}",
        report.n_players, report.accuracy, report.sensitivity, report.precision, report.no_information_rate,
        bundle.spec.split.salt
    ))
}

fn scale() -> Check {
    let started = Instant::now();
    let generated = generate(&preset("early_risk").unwrap()).unwrap();
    let players = generated.labels.len();
    let sessions = generated.manifest.counts.sessions as f64;
    ensure(players == EARLY_RISK_PLAYERS, || format!("{players} players"))?;
    ensure((sessions / EARLY_RISK_SESSIONS - 1.0).abs() <= SESSION_TOLERANCE, || {
        format!("{sessions} sessions")
    })?;
    let data = stored(&generated);
    let mut spans = Vec::new();
    for (task, limit) in [("B1", 7.0), ("B2", 1.0)] {
        let spec = template(task).unwrap().spec_for(&data.dataset, &data.card);
        let bundle = materialize(&spec, &data).map_err(|e| e.to_string())?;
        let span = max_span_days(&bundle.test_events);
        ensure(span <= limit, || format!("{task} test events span {span:.3} days"))?;
        spans.push(format!("{task} max span {span:.3}d"));
    }
    within("scale", started, Duration::from_secs(60))?;
    Ok(format!("players={players} sessions={sessions} {}", spans.join(", ")))
}

fn brute_auc(pairs: &[(f64, bool)]) -> Option<f64> {
    let mut wins = 0.0;
    let mut total = 0u64;
    for p in pairs.iter().filter(|p| p.1) {
        for n in pairs.iter().filter(|p| !p.1) {
            total += 1;
            if p.0 > n.0 {
                wins += 1.0;
            } else if p.0 == n.0 {
                wins += 0.5;
            }
        }
    }
    (total > 0).then(|| wins / total as f64)
}

fn metric_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut auc_checked = 0;
    let ratio = |n: u64, d: u64| (d > 0).then(|| n as f64 / d as f64);
    let agrees = |m: Metric, e: Option<f64>| match (m.value(), e) {
        (Some(a), Some(b)) => (a - b).abs() <= METRIC_TOLERANCE,
        (None, None) => true,
        _ => false,
    };
    for instance in 0..ORACLE_INSTANCES {
        let n = rng.random_range(1..=ORACLE_MAX_N);
        let coarse = rng.random_bool(0.5);
        let pairs: Vec<(f64, bool)> = (0..n)
            .map(|_| {
                let s = if coarse { f64::from(rng.random_range(0..=4u32)) / 4.0 } else { rng.random::<f64>() };
                (s, rng.random_bool(0.4))
            })
            .collect();
        let t = f64::from(rng.random_range(0..=4u32)) / 4.0;
        let count = |pred: bool, actual: bool| pairs.iter().filter(|(s, y)| (*s >= t) == pred && *y == actual).count() as u64;
        let (tp, fp, tn, fn_) = (count(true, true), count(true, false), count(false, false), count(false, true));
        let m = BinaryConfusion::from_scores(pairs.iter().copied(), t).metrics();
        let precision = ratio(tp, tp + fp);
        let sensitivity = ratio(tp, tp + fn_);
        let f1 = precision.and(sensitivity).and(ratio(2 * tp, 2 * tp + fp + fn_));
        let ok = agrees(m.accuracy, ratio(tp + tn, n as u64))
            && agrees(m.sensitivity, sensitivity)
            && agrees(m.specificity, ratio(tn, tn + fp))
            && agrees(m.precision, precision)
            && agrees(m.f1, f1);
        ensure(ok, || format!("instance {instance}: binary metrics disagree on {pairs:?} at {t}"))?;
        match (roc_auc(&pairs), brute_auc(&pairs)) {
            (Ok(a), Some(b)) if (a - b).abs() <= METRIC_TOLERANCE => auc_checked += 1,
            (Err(_), None) => {}
            (a, b) => return Err(format!("instance {instance}: auc {a:?} vs oracle {b:?}")),
        }
    }
    Ok(format!(
        "{ORACLE_INSTANCES} instances (n <= {ORACLE_MAX_N}), {auc_checked} with both classes, tol {METRIC_TOLERANCE:e}"
    ))
}

fn label_rules() -> Check {
    for score in 0u8..=27 {
        let binary = pgsi_to_binary(score, 5).map_err(|e| e.to_string())?;
        ensure(binary == u8::from(score >= 5), || format!("binary({score}) = {binary}"))?;
        let expected = match score {
            0 => "0",
            1 | 2 => "1-2",
            3 | 4 => "3-4",
            5..=7 => "5-7",
            _ => "8+",
        };
        let bucket = pgsi_to_bucket(score).map_err(|e| e.to_string())?;
        ensure(bucket == expected, || format!("bucket({score}) = {bucket}"))?;
    }
    ensure(pgsi_to_binary(28, 5).is_err() && pgsi_to_bucket(28).is_err(), || "28 was accepted".into())?;
    Ok("scores 0-27 map correctly, 28 is rejected".into())
}

fn cli(home: &Path, args: &[&str]) -> Result<Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_riskbench"))
        .args(args)
        .env("RISKBENCH_HOME", home)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("riskbench {args:?}: {}", String::from_utf8_lossy(&out.stderr))
    })?;
    serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn determinism() -> Check {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for run in ["first", "second"] {
        let home = root.path().join(run);
        let data = home.join("generated");
        let data_s = data.display().to_string();
        cli(&home, &["generate", "--preset", "lottery", "--n-players", "600", "--out", &data_s])?;
        cli(&home, &["register", &data_s])?;
        cli(&home, &["materialize", "--task", "L1"])?;
        let task_dir = home.join("tasks").join("L1");
        let test = parse_events(&fs::read(task_dir.join(TEST_EVENTS_FILE)).unwrap()[..]).unwrap();
        let preds = home.join("preds.csv");
        fs::write(&preds, submission_bytes(&declined_rate(&test.events))).unwrap();
        let mut report = cli(&home, &["score", "--task", "L1", "--file", &preds.display().to_string()])?;
        report.as_object_mut().unwrap().remove("scored_at");
        runs.push((files_under(&data), files_under(&task_dir), report.to_string()));
    }
    let (a, b) = (&runs[0], &runs[1]);
    ensure(a.0 == b.0, || "generated files differ".into())?;
    ensure(a.1 == b.1, || "materialized bundles differ".into())?;
    ensure(a.2 == b.2, || "score reports differ".into())?;
    Ok(format!("{} generated files, {} bundle files, report identical", a.0.len(), a.1.len()))
}

fn signal_and_null() -> Check {
    let mut aucs = Vec::new();
    for strength in [1.0, 0.0] {
        let mut config = preset("early_risk").unwrap();
        config.n_players = SIGNAL_PLAYERS;
        config.signal_strength = strength;
        let data = stored(&generate(&config).unwrap());
        let mut spec = template("B1").unwrap().spec_for(&data.dataset, &data.card);
        spec.split.train_fraction = 0.2;
        let bundle = materialize(&spec, &data).map_err(|e| e.to_string())?;
        let preds = validate_submission(&submission_bytes(&declined_rate(&bundle.test_events)), &bundle)
            .map_err(|e| e.to_string())?;
        let report = score(&preds, &bundle, Timestamp::from_unix(0)).map_err(|e| e.to_string())?;
        aucs.push(report.primary_metric.value.value().ok_or("AUC undefined")?);
    }
    let (signal, null) = (aucs[0], aucs[1]);
    ensure(signal >= SIGNAL_MIN_AUC, || format!("AUC {signal:.4} at signal_strength 1"))?;
    ensure((NULL_AUC_RANGE.0..=NULL_AUC_RANGE.1).contains(&null), || {
        format!("AUC {null:.4} at signal_strength 0")
    })?;
    Ok(format!("declined-rate AUC {signal:.4} at strength 1, {null:.4} at strength 0 (n={SIGNAL_PLAYERS})"))
}

struct EndToEnd {
    elapsed: Duration,
    rank: u64,
    badge: String,
    metric: f64,
    leak_findings: Vec<String>,
    responses: Vec<(String, String)>,
    bundle: TaskBundle,
}

async fn request(service: &Arc<Service>, request: Request<Body>) -> (StatusCode, String) {
    let response = router(service.clone()).oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8_lossy(&bytes).into_owned())
}

fn multipart(file: &[u8], submitter: &str) -> (String, Vec<u8>) {
    let boundary = "acceptance-boundary";
    let mut body = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"submitter\"\r\n\r\n{submitter}\r\n\
         --{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"preds.csv\"\r\n\r\n"
    )
    .into_bytes();
    body.extend_from_slice(file);
    body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
    (format!("multipart/form-data; boundary={boundary}"), body)
}

fn end_to_end_run() -> Result<EndToEnd, String> {
    let started = Instant::now();
    let home = tempfile::tempdir().map_err(|e| e.to_string())?;
    let registry = Registry::open(home.path()).map_err(|e| e.to_string())?;
    let generated = generate(&preset("early_risk").unwrap()).map_err(|e| e.to_string())?;
    let out = home.path().join("generated");
    generated.write_to_dir(&out).map_err(|e| e.to_string())?;
    let dataset = registry.register_dir(&out).map_err(|e| e.to_string())?;
    let integrity = registry.verify(&dataset).map_err(|e| e.to_string())?;
    ensure(integrity.pass, || format!("verify failed: {:?}", integrity.failed_files()))?;
    let spec = template("B1").unwrap().spec_for(&dataset, &generated.card);
    let (_, task_dir) = materialize_registered(&registry, &spec, false).map_err(|e| e.to_string())?;

    // The submitter only sees the public test events.
    let public = parse_events(&fs::read(task_dir.join(TEST_EVENTS_FILE)).unwrap()[..]).map_err(|e| e.to_string())?;
    let file = submission_bytes(&declined_rate(&public.events));
    let bundle = TaskBundle::load(&task_dir).map_err(|e| e.to_string())?;
    validate_submission(&file, &bundle).map_err(|e| e.to_string())?;
    let leak_findings = scan_for_leaks(&task_dir).map_err(|e| e.to_string())?;

    let service = Arc::new(Service::new(registry, system_clock()).map_err(|e| e.to_string())?);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let mut responses = Vec::new();
    let board: Value = runtime.block_on(async {
        let (content_type, body) = multipart(&file, "acceptance");
        let post = Request::post("/tasks/B1/submissions")
            .header("content-type", content_type)
            .body(Body::from(body))
            .unwrap();
        let (status, created) = request(&service, post).await;
        ensure(status == StatusCode::CREATED, || format!("submit returned {status}: {created}"))?;
        let id = serde_json::from_str::<Value>(&created).unwrap()["submission_id"].as_str().unwrap().to_string();
        responses.push(("POST /tasks/B1/submissions".to_string(), created));
        for uri in [
            "/datasets".to_string(),
            format!("/datasets/{}", dataset.id),
            "/tasks".into(),
            "/tasks/B1".into(),
            format!("/submissions/{id}/report"),
            "/tasks/B1/leaderboard".into(),
        ] {
            let (status, text) = request(&service, Request::get(&uri).body(Body::empty()).unwrap()).await;
            ensure(status == StatusCode::OK, || format!("GET {uri} returned {status}"))?;
            responses.push((format!("GET {uri}"), text));
        }
        serde_json::from_str(&responses.last().unwrap().1).map_err(|e| e.to_string())
    })?;
    let top = &board["entries"][0];
    let report_text = &responses[0].1;
    let recorded: Value = serde_json::from_str(report_text).unwrap();
    ScoreReport::from_json(recorded["report"].to_string().as_bytes()).map_err(|e| e.to_string())?;
    Ok(EndToEnd {
        elapsed: started.elapsed(),
        rank: top["rank"].as_u64().unwrap_or(0),
        badge: top["badge"].as_str().unwrap_or_default().to_string(),
        metric: top["primary_metric"]["value"].as_f64().unwrap_or(f64::NAN),
        leak_findings,
        responses,
        bundle,
    })
}

fn leakage(run: &EndToEnd) -> Check {
    ensure(run.leak_findings.is_empty(), || run.leak_findings.join("; "))?;
    let key_rows: Vec<String> = run.bundle.answer_key.iter().map(|(p, t)| format!("{p},{t}")).collect();
    for (what, body) in &run.responses {
        if let Some(p) = run.bundle.answer_key.players().find(|p| body.contains(p)) {
            return Err(format!("{what} mentions test player {p}"));
        }
        if let Some(row) = key_rows.iter().find(|r| body.contains(r.as_str())) {
            return Err(format!("{what} contains key row {row}"));
        }
    }
    Ok(format!(
        "bundle public files clean, {} API responses free of {} test players",
        run.responses.len(),
        run.bundle.answer_key.len()
    ))
}

fn end_to_end(run: &EndToEnd) -> Check {
    ensure(run.rank == 1, || format!("rank {}", run.rank))?;
    ensure(run.badge == "BRONZE", || format!("badge {}", run.badge))?;
    ensure(run.elapsed < Duration::from_secs(90), || format!("took {:.2?}", run.elapsed))?;
    Ok(format!("rank 1, BRONZE, AUC {:.4}, {:.2?}", run.metric, run.elapsed))
}

fn guarded(f: impl FnOnce() -> Check) -> Check {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(result) => result,
        Err(panic) => Err(panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    }
}

fn main() -> ExitCode {
    let e2e = catch_unwind(end_to_end_run).unwrap_or_else(|_| Err("end-to-end run panicked".into()));
    let e2e = &e2e;
    let from_e2e = |f: fn(&EndToEnd) -> Check| move || e2e.as_ref().map_err(Clone::clone).and_then(f);
    let criteria: Vec<Criterion> = vec![
        ("pathology", Box::new(pathology)),
        ("scale", Box::new(scale)),
        ("metric-oracle", Box::new(metric_oracle)),
        ("label-rules", Box::new(label_rules)),
        ("determinism", Box::new(determinism)),
        ("leakage", Box::new(from_e2e(leakage))),
        ("signal-null", Box::new(signal_and_null)),
        ("end-to-end", Box::new(from_e2e(end_to_end))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let result = guarded(check);
        let (tag, detail) = match &result {
            Ok(detail) => ("PASS", detail.clone()),
            Err(reason) => {
                failed += 1;
                ("FAIL", reason.clone())
            }
        };
        println!("{tag} {} {name:<14} {detail} [{:.2?}]", i + 1, started.elapsed());
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
