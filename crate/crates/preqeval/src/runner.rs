//! The deterministic run driver. Outputs live under
//! `<out>/<config digest>/<seed>/`, so a config names its results; a
//! completed run is never re-executed unless forced, and `verify`
//! re-executes one seed to prove the bytes still come out identical.

use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use preqeval_core::curriculum::TaskData;
use preqeval_core::tasks::{generate, split};
use preqeval_core::{
    blockwise_codelength, decode_labels, encode_labels, exact_online_codelength,
    measured_vs_theoretical, pretrain_then_finetune, run_random_uniform, run_sequential,
    Bitstream, Dataset, EvalMode, FeatureVector, FitRegime, LearnerState, MetricPoint,
    MetricSeries,
};
use serde::{Deserialize, Serialize};

use crate::config::{config_digest, ExperimentConfig, ExperimentKind};
use crate::{csv_out, jsonl, AppError, AppResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    /// "ok" or "failed: <reason>".
    pub status: String,
    /// Artifact file names relative to `<run dir>/<seed>/`.
    pub artifacts: Vec<String>,
}

/// What a run left on disk. Timestamps are bookkeeping only — they are
/// excluded from determinism comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_digest: String,
    pub kind: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub seeds: Vec<SeedOutcome>,
    /// Seed-aggregated artifacts relative to the run dir.
    pub aggregates: Vec<String>,
}

impl RunRecord {
    pub fn all_ok(&self) -> bool {
        !self.seeds.is_empty() && self.seeds.iter().all(|s| s.status == "ok")
    }
}

pub struct RunOutcome {
    pub record: RunRecord,
    pub cached: bool,
    pub dir: PathBuf,
}

/// Output root precedence: CLI flag, then the config, then PREQEVAL_OUT,
/// then `./out`.
pub fn resolve_out_dir(cli: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = cli {
        return dir.to_path_buf();
    }
    if let Some(dir) = &config.out_dir {
        return PathBuf::from(dir);
    }
    if let Some(dir) = std::env::var_os("PREQEVAL_OUT") {
        return PathBuf::from(dir);
    }
    PathBuf::from("out")
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Write-temp-then-rename, so readers never observe a partial artifact.
fn atomic_write(path: &Path, bytes: &[u8]) -> AppResult<()> {
    let parent = path.parent().unwrap_or(Path::new("."));
    let base = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| String::from("artifact"));
    let tmp = parent.join(format!(
        ".{base}.tmp{}",
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    fs::write(&tmp, bytes).map_err(|e| AppError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| AppError::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> AppResult<Vec<u8>> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| AppError::Data(format!("serialize: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Artifact names one seed produced, in write order.
struct SeedProducts {
    artifacts: Vec<String>,
}

impl SeedProducts {
    fn new() -> Self {
        SeedProducts { artifacts: Vec::new() }
    }

    fn write(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> AppResult<()> {
        atomic_write(&dir.join(name), bytes)?;
        self.artifacts.push(String::from(name));
        Ok(())
    }
}

/// The single dataset of a single-source experiment: an external JSONL file
/// (shared by every seed) or the one generated task, reseeded per seed.
fn source_dataset(config: &ExperimentConfig, seed: u64) -> AppResult<Dataset> {
    if let Some(path) = &config.dataset {
        jsonl::load_jsonl(Path::new(path))
    } else {
        Ok(generate(&config.reseeded_spec(&config.tasks[0].spec, seed))?)
    }
}

/// Generate and split every configured task for one seed.
fn build_task_data(config: &ExperimentConfig, seed: u64) -> AppResult<Vec<TaskData>> {
    let split_seed = config.reseeded_split_seed(seed);
    config
        .tasks
        .iter()
        .map(|t| {
            let data = generate(&config.reseeded_spec(&t.spec, seed))?;
            let (train, eval) = split(&data, config.eval_fraction, split_seed)?;
            Ok(TaskData {
                id: t.spec.task_id.clone(),
                head: String::from(t.head_name()),
                train,
                eval,
            })
        })
        .collect()
}

fn execute_seed(config: &ExperimentConfig, seed: u64, dir: &Path) -> AppResult<SeedProducts> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let mut out = SeedProducts::new();
    let hyper = config.reseeded_hyper(seed);
    let protocol = config.reseeded_protocol(seed);

    match config.kind {
        ExperimentKind::Codelength => {
            let data = source_dataset(config, seed)?;
            let plan = config.plan.as_ref().expect("validated").resolve(data.len())?;
            let report = match config.mode {
                EvalMode::PerExample => {
                    exact_online_codelength(config.learner, &hyper, &data, config.regime)?
                }
                EvalMode::Blockwise => {
                    blockwise_codelength(config.learner, &protocol, &data, &plan)?
                }
            };
            out.write(dir, "report.json", &to_json(&report)?)?;
            out.write(dir, "blocks.csv", csv_out::blocks_csv(&report, seed).as_bytes())?;
        }
        ExperimentKind::Compress => {
            let data = source_dataset(config, seed)?;
            let plan = config.plan.as_ref().expect("validated").resolve(data.len())?;
            let encoded =
                encode_labels(config.learner, &protocol, &data, &plan, config.precision)?;
            let comparison =
                measured_vs_theoretical(&encoded.stream, &encoded.stats, &encoded.report)?;
            #[derive(Serialize)]
            struct StatsOut<'a> {
                stats: &'a preqeval_core::CoderStats,
                comparison: &'a preqeval_core::CodingComparison,
            }
            out.write(dir, "stream.pqac", &encoded.stream.to_bytes())?;
            out.write(dir, "report.json", &to_json(&encoded.report)?)?;
            out.write(
                dir,
                "stats.json",
                &to_json(&StatsOut { stats: &encoded.stats, comparison: &comparison })?,
            )?;
        }
        ExperimentKind::Decompress => {
            let data = source_dataset(config, seed)?;
            let stream_path = Path::new(config.bitstream.as_ref().expect("validated"));
            let bytes = fs::read(stream_path).map_err(|e| AppError::io(stream_path, e))?;
            let stream = Bitstream::from_bytes(&bytes)?;
            let plan = config.plan.as_ref().expect("validated").resolve(data.len())?;
            let features: Vec<FeatureVector> =
                data.examples().iter().map(|e| e.features.clone()).collect();
            let labels = decode_labels(
                config.learner,
                &protocol,
                &features,
                data.feature_spec(),
                &plan,
                &stream,
            )?;
            out.write(dir, "labels.json", &to_json(&labels)?)?;
        }
        ExperimentKind::Curve => {
            let data = source_dataset(config, seed)?;
            let (train, eval) = split(&data, config.eval_fraction, config.reseeded_split_seed(seed))?;
            let plan = config.plan.as_ref().expect("validated").resolve(train.len())?;
            let series =
                preqeval_core::prequential::learning_curve(config.learner, &hyper, &train, &eval, &plan, config.regime)?;
            out.write(dir, "series.csv", csv_out::series_csv(&series, "examples_seen", seed).as_bytes())?;
            out.write(dir, "report.json", &to_json(&series)?)?;
        }
        ExperimentKind::Continual | ExperimentKind::Multitask => {
            let tasks = build_task_data(config, seed)?;
            let eval_ids: Vec<String> = tasks.iter().map(|t| t.id.clone()).collect();
            let schedule = config.reseeded_schedule(seed).expect("validated");
            let report = match config.kind {
                ExperimentKind::Continual => {
                    run_sequential(config.learner, &hyper, &schedule, &tasks, &eval_ids)?
                }
                _ => run_random_uniform(config.learner, &hyper, &schedule, &tasks, &eval_ids)?,
            };
            out.write(dir, "report.json", &to_json(&report)?)?;
            out.write(dir, "series.csv", csv_out::series_csv(&report.series, "iteration", seed).as_bytes())?;
        }
        ExperimentKind::CrossMatrix => {
            let tasks = build_task_data(config, seed)?;
            let states = tasks
                .iter()
                .map(|t| {
                    Ok(LearnerState::init(
                        config.learner,
                        t.train.label_space(),
                        t.train.feature_spec(),
                        hyper.clone(),
                    )?
                    .fit(&t.train, &t.head, FitRegime::WarmStart)?)
                })
                .collect::<AppResult<Vec<LearnerState>>>()?;
            let scores = preqeval_core::cross_variant_matrix(&states, &tasks)?;
            let task_ids: Vec<String> = tasks.iter().map(|t| t.id.clone()).collect();
            #[derive(Serialize)]
            struct MatrixOut<'a> {
                task_ids: &'a [String],
                scores: &'a [Vec<f64>],
            }
            out.write(
                dir,
                "matrix.json",
                &to_json(&MatrixOut { task_ids: &task_ids, scores: &scores })?,
            )?;
            out.write(dir, "matrix.csv", csv_out::matrix_csv(&task_ids, &scores, seed).as_bytes())?;
        }
        ExperimentKind::PretrainFinetune => {
            let mut tasks = build_task_data(config, seed)?;
            let target_id = config.target.as_ref().expect("validated");
            let position = tasks
                .iter()
                .position(|t| &t.id == target_id)
                .expect("validated: target is a configured task");
            let target = tasks.remove(position);
            let plan = config
                .plan
                .as_ref()
                .expect("validated")
                .resolve(target.train.len())?;
            let schedule = config.reseeded_schedule(seed).expect("validated");
            let report = pretrain_then_finetune(
                config.learner,
                &hyper,
                &schedule,
                &tasks,
                &target,
                &protocol,
                &plan,
            )?;
            out.write(dir, "report.json", &to_json(&report)?)?;
            out.write(dir, "series.csv", csv_out::series_csv(&report.series, "iteration", seed).as_bytes())?;
        }
    }
    Ok(out)
}

/// Minimal reader for the CSVs this crate writes: comma-delimited,
/// `"`-quoted fields with doubled-quote escapes. Blank lines are skipped.
fn parse_csv(text: &str) -> Vec<Vec<String>> {
    let mut records = Vec::new();
    let mut fields: Vec<String> = Vec::new();
    let mut cur = String::new();
    let mut saw_any = false;
    let mut in_quotes = false;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if in_quotes {
            match c {
                '"' if chars.peek() == Some(&'"') => {
                    chars.next();
                    cur.push('"');
                }
                '"' => in_quotes = false,
                _ => cur.push(c),
            }
            continue;
        }
        match c {
            '"' => {
                in_quotes = true;
                saw_any = true;
            }
            ',' => {
                fields.push(core::mem::take(&mut cur));
                saw_any = true;
            }
            '\r' => {}
            '\n' => {
                if saw_any {
                    fields.push(core::mem::take(&mut cur));
                    records.push(core::mem::take(&mut fields));
                    saw_any = false;
                }
            }
            _ => {
                cur.push(c);
                saw_any = true;
            }
        }
    }
    if saw_any {
        fields.push(cur);
        records.push(fields);
    }
    records
}

/// Read a shared-schema CSV (`<x>,metric,value,task,seed`) back into a
/// series. `label` names the file in errors. Returns the x column name too,
/// so aggregation preserves it.
fn parse_series_csv(text: &str, label: &str) -> AppResult<(String, MetricSeries)> {
    let records = parse_csv(text);
    let Some(header) = records.first() else {
        return Err(AppError::Data(format!("{label}: empty CSV")));
    };
    if header.len() != 5 || header[1..] != ["metric", "value", "task", "seed"] {
        return Err(AppError::Data(format!(
            "{label}: unexpected header `{}`",
            header.join(",")
        )));
    }
    let x_name = header[0].clone();
    let mut series = MetricSeries::default();
    for (row, record) in records.iter().enumerate().skip(1) {
        let bad = |what: &str| AppError::Data(format!("{label} row {row}: {what}"));
        if record.len() != 5 {
            return Err(bad("expected 5 fields"));
        }
        series.push(MetricPoint {
            examples_seen: record[0].parse().map_err(|_| bad("bad x value"))?,
            metric: record[1].clone(),
            value: record[2].parse().map_err(|_| bad("bad metric value"))?,
            task: record[3].clone(),
            seed: record[4].parse().map_err(|_| bad("bad seed"))?,
        });
    }
    Ok((x_name, series))
}

/// Read a long-form matrix CSV back into task ids (in encounter order) and a
/// square score matrix.
fn parse_matrix_csv(text: &str, label: &str) -> AppResult<(Vec<String>, Vec<Vec<f64>>)> {
    let records = parse_csv(text);
    let Some(header) = records.first() else {
        return Err(AppError::Data(format!("{label}: empty CSV")));
    };
    if header[..] != ["train_task", "eval_task", "accuracy", "seed"] {
        return Err(AppError::Data(format!(
            "{label}: unexpected header `{}`",
            header.join(",")
        )));
    }
    let mut ids: Vec<String> = Vec::new();
    let mut cells: Vec<f64> = Vec::new();
    for (row, record) in records.iter().enumerate().skip(1) {
        let bad = |what: &str| AppError::Data(format!("{label} row {row}: {what}"));
        if record.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        if !ids.contains(&record[0]) {
            ids.push(record[0].clone());
        }
        cells.push(record[2].parse().map_err(|_| bad("bad accuracy"))?);
    }
    if cells.len() != ids.len() * ids.len() {
        return Err(AppError::Data(format!(
            "{label}: {} cells do not form a {n}x{n} matrix",
            cells.len(),
            n = ids.len()
        )));
    }
    let scores = cells.chunks(ids.len().max(1)).map(<[f64]>::to_vec).collect();
    Ok((ids, scores))
}

/// Rebuild the seed-aggregated CSVs of a completed run from its per-seed
/// shared-schema artifacts, and return the file names written into
/// `run_dir`. `run` calls this once all seeds finish; calling it again
/// reproduces the same bytes, since per-seed values round-trip through their
/// CSVs exactly.
pub fn emit_curves(record: &RunRecord, run_dir: &Path) -> AppResult<Vec<String>> {
    if !record.all_ok() {
        let detail = record
            .seeds
            .iter()
            .find(|s| s.status != "ok")
            .map(|s| format!("seed {} {}", s.seed, s.status))
            .unwrap_or_else(|| String::from("no seeds recorded"));
        return Err(AppError::Data(format!(
            "incomplete run {}: {detail}",
            record.config_digest
        )));
    }

    let mut x_name: Option<String> = None;
    let mut series: Vec<MetricSeries> = Vec::new();
    let mut task_ids: Option<Vec<String>> = None;
    let mut matrices: Vec<Vec<Vec<f64>>> = Vec::new();
    for seed in &record.seeds {
        let seed_dir = run_dir.join(seed.seed.to_string());
        for name in &seed.artifacts {
            if name != "series.csv" && name != "blocks.csv" && name != "matrix.csv" {
                continue;
            }
            let path = seed_dir.join(name);
            let text = fs::read_to_string(&path).map_err(|e| AppError::io(&path, e))?;
            let label = format!("{}/{name}", seed.seed);
            if name == "matrix.csv" {
                let (ids, scores) = parse_matrix_csv(&text, &label)?;
                match &task_ids {
                    Some(existing) if *existing != ids => {
                        return Err(AppError::Data(format!(
                            "{label}: task ids differ from other seeds"
                        )));
                    }
                    Some(_) => {}
                    None => task_ids = Some(ids),
                }
                matrices.push(scores);
            } else {
                let (x, parsed) = parse_series_csv(&text, &label)?;
                match &x_name {
                    Some(existing) if *existing != x => {
                        return Err(AppError::Data(format!(
                            "{label}: x column `{x}` differs from `{existing}`"
                        )));
                    }
                    Some(_) => {}
                    None => x_name = Some(x),
                }
                series.push(parsed);
            }
        }
    }

    let mut written = Vec::new();
    if let Some(x) = &x_name {
        let csv = csv_out::aggregate_csv(&series, x);
        atomic_write(&run_dir.join("aggregate.csv"), csv.as_bytes())?;
        written.push(String::from("aggregate.csv"));
    }
    if let Some(ids) = &task_ids {
        let csv = csv_out::matrix_aggregate_csv(ids, &matrices);
        atomic_write(&run_dir.join("matrix_aggregate.csv"), csv.as_bytes())?;
        written.push(String::from("matrix_aggregate.csv"));
    }
    Ok(written)
}

fn load_record(path: &Path) -> AppResult<RunRecord> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| AppError::Data(format!("{}: {e}", path.display())))
}

/// Locate the recorded run of a config under `out_root`. Errors with
/// "no run found" when the config has never been run there.
pub fn load_run(config: &ExperimentConfig, out_root: &Path) -> AppResult<(RunRecord, PathBuf)> {
    let digest = config_digest(config);
    let run_dir = out_root.join(&digest);
    let record_path = run_dir.join("run_record.json");
    if !record_path.exists() {
        return Err(AppError::NoRun(format!(
            "no run found for config {digest} under {}",
            out_root.display()
        )));
    }
    Ok((load_record(&record_path)?, run_dir))
}

/// Execute every seed of the config (in parallel up to `workers`), write all
/// artifacts under `<out_root>/<digest>/`, and record the run. A previously
/// completed run is returned as cached unless `force` is set.
pub fn run(
    config: &ExperimentConfig,
    out_root: &Path,
    force: bool,
    workers: usize,
) -> AppResult<RunOutcome> {
    let digest = config_digest(config);
    let run_dir = out_root.join(&digest);
    let record_path = run_dir.join("run_record.json");
    if !force && record_path.exists() {
        let record = load_record(&record_path)?;
        let same_seeds = record.seeds.iter().map(|s| s.seed).collect::<Vec<_>>() == config.seeds;
        if record.all_ok() && same_seeds {
            return Ok(RunOutcome { record, cached: true, dir: run_dir });
        }
    }

    let started = now_unix();
    fs::create_dir_all(&run_dir).map_err(|e| AppError::io(&run_dir, e))?;

    let jobs: Mutex<VecDeque<(usize, u64)>> =
        Mutex::new(config.seeds.iter().copied().enumerate().collect());
    let results: Mutex<Vec<Option<SeedOutcome>>> =
        Mutex::new(config.seeds.iter().map(|_| None).collect());
    let worker_count = workers.max(1).min(config.seeds.len());
    std::thread::scope(|scope| {
        for _ in 0..worker_count {
            scope.spawn(|| loop {
                let job = jobs.lock().expect("queue lock").pop_front();
                let Some((index, seed)) = job else { break };
                let seed_dir = run_dir.join(seed.to_string());
                let entry = match execute_seed(config, seed, &seed_dir) {
                    Ok(products) => SeedOutcome {
                        seed,
                        status: String::from("ok"),
                        artifacts: products.artifacts,
                    },
                    Err(e) => SeedOutcome {
                        seed,
                        status: format!("failed: {e}"),
                        artifacts: Vec::new(),
                    },
                };
                results.lock().expect("results lock")[index] = Some(entry);
            });
        }
    });

    let results = results.into_inner().expect("results lock");
    let seeds: Vec<SeedOutcome> =
        results.into_iter().map(|entry| entry.expect("every job ran")).collect();

    let mut record = RunRecord {
        config_digest: digest,
        kind: String::from(config.kind.name()),
        started_unix: started,
        finished_unix: 0,
        seeds,
        aggregates: Vec::new(),
    };
    if record.all_ok() {
        record.aggregates = emit_curves(&record, &run_dir)?;
    }
    record.finished_unix = now_unix();
    atomic_write(&record_path, &to_json(&record)?)?;
    Ok(RunOutcome { record, cached: false, dir: run_dir })
}

/// Re-execute the first recorded seed and demand byte-identical artifacts.
/// Returns a human-readable summary on success.
pub fn verify(config: &ExperimentConfig, out_root: &Path) -> AppResult<String> {
    let (record, run_dir) = load_run(config, out_root)?;
    let digest = &record.config_digest;
    let Some(first) = record.seeds.first() else {
        return Err(AppError::NoRun(format!("run {digest} recorded no seeds")));
    };
    if first.status != "ok" {
        return Err(AppError::NoRun(format!(
            "seed {} of run {digest} did not complete: {}",
            first.seed, first.status
        )));
    }

    let scratch = tempfile::tempdir().map_err(|e| AppError::Io(format!("temp dir: {e}")))?;
    let fresh = execute_seed(config, first.seed, scratch.path())?;

    if fresh.artifacts != first.artifacts {
        return Err(AppError::Determinism(format!(
            "artifact set changed: recorded {:?}, re-run produced {:?}",
            first.artifacts, fresh.artifacts
        )));
    }
    let stored_dir = run_dir.join(first.seed.to_string());
    for name in &fresh.artifacts {
        let stored_path = stored_dir.join(name);
        let stored = fs::read(&stored_path).map_err(|e| AppError::io(&stored_path, e))?;
        let fresh_path = scratch.path().join(name);
        let renewed = fs::read(&fresh_path).map_err(|e| AppError::io(&fresh_path, e))?;
        if stored != renewed {
            let at = stored
                .iter()
                .zip(&renewed)
                .position(|(a, b)| a != b)
                .unwrap_or_else(|| stored.len().min(renewed.len()));
            return Err(AppError::Determinism(format!(
                "`{name}` differs from the stored artifact: {} vs {} bytes, first difference at byte {at}",
                renewed.len(),
                stored.len()
            )));
        }
    }
    Ok(format!(
        "seed {} of {digest}: {} artifacts byte-identical",
        first.seed,
        fresh.artifacts.len()
    ))
}
