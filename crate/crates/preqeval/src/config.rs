//! TOML experiment configs. Parsing is strict — unknown keys anywhere in
//! the file are rejected, and validation reports every violation at once —
//! because a silently ignored typo would corrupt an experiment. A parsed
//! config is fully normalized (all defaults filled), and its content digest
//! names the output directory: same digest, same outputs.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use preqeval_core::{
    rng, CurriculumSchedule, EvalMode, EvaluationProtocol, FirstBlockCode, FitRegime, HyperParams,
    LearnerKind, TaskSpec,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Codelength,
    Compress,
    Decompress,
    Curve,
    Continual,
    Multitask,
    CrossMatrix,
    PretrainFinetune,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Codelength => "codelength",
            ExperimentKind::Compress => "compress",
            ExperimentKind::Decompress => "decompress",
            ExperimentKind::Curve => "curve",
            ExperimentKind::Continual => "continual",
            ExperimentKind::Multitask => "multitask",
            ExperimentKind::CrossMatrix => "cross_matrix",
            ExperimentKind::PretrainFinetune => "pretrain_finetune",
        }
    }

    fn needs_plan(&self) -> bool {
        matches!(
            self,
            ExperimentKind::Codelength
                | ExperimentKind::Compress
                | ExperimentKind::Decompress
                | ExperimentKind::Curve
                | ExperimentKind::PretrainFinetune
        )
    }

    fn needs_split(&self) -> bool {
        matches!(
            self,
            ExperimentKind::Curve
                | ExperimentKind::Continual
                | ExperimentKind::Multitask
                | ExperimentKind::CrossMatrix
                | ExperimentKind::PretrainFinetune
        )
    }

    fn single_source(&self) -> bool {
        matches!(
            self,
            ExperimentKind::Codelength
                | ExperimentKind::Compress
                | ExperimentKind::Decompress
                | ExperimentKind::Curve
        )
    }
}

/// Block boundaries, either listed explicitly or cut at a fixed size (with
/// a final partial block when the size does not divide the dataset).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundaries: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<usize>,
}

impl PlanConfig {
    pub fn resolve(&self, n: usize) -> AppResult<preqeval_core::BlockPlan> {
        match (&self.boundaries, self.block_size) {
            (Some(b), None) => Ok(preqeval_core::BlockPlan::from_boundaries(b.clone())?),
            (None, Some(size)) => Ok(preqeval_core::BlockPlan::uniform_blocks(n, size)?),
            _ => unreachable!("validated: exactly one of boundaries/block_size"),
        }
    }
}

/// A generated task plus the head it trains through (defaults to its own
/// task id, i.e. a private head).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigTask {
    pub spec: TaskSpec,
    pub head: Option<String>,
}

impl ConfigTask {
    pub fn head_name(&self) -> &str {
        self.head.as_deref().unwrap_or(&self.spec.task_id)
    }
}

/// A fully validated, fully normalized experiment description. Everything a
/// run produces is a deterministic function of this value (minus `out_dir`,
/// which only says where to put it).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub learner: LearnerKind,
    pub seeds: Vec<u64>,
    pub precision: u8,
    pub out_dir: Option<String>,
    pub hyper: HyperParams,
    /// Hyperparameter grid for blockwise carryover; always contains `hyper`.
    pub candidates: Vec<HyperParams>,
    pub mode: EvalMode,
    pub regime: FitRegime,
    pub plan: Option<PlanConfig>,
    pub tasks: Vec<ConfigTask>,
    pub dataset: Option<String>,
    pub bitstream: Option<String>,
    pub schedule: Option<CurriculumSchedule>,
    pub target: Option<String>,
    pub eval_fraction: f64,
    pub split_seed: u64,
}

impl ExperimentConfig {
    pub fn protocol(&self) -> EvaluationProtocol {
        EvaluationProtocol {
            mode: self.mode,
            regime: self.regime,
            default_hyper: self.hyper.clone(),
            candidate_hypers: self.candidates.clone(),
            first_block_code: FirstBlockCode::Uniform,
        }
    }

    /// The spec for `task`, reseeded for one run seed: every stochastic
    /// input is re-derived so each seed is an independent replicate.
    pub fn reseeded_spec(&self, spec: &TaskSpec, run_seed: u64) -> TaskSpec {
        let mut out = spec.clone();
        out.seed = rng::derive(spec.seed, run_seed);
        out
    }

    pub fn reseeded_hyper(&self, run_seed: u64) -> HyperParams {
        let mut out = self.hyper.clone();
        out.init_seed = rng::derive(out.init_seed, run_seed);
        out
    }

    pub fn reseeded_candidates(&self, run_seed: u64) -> Vec<HyperParams> {
        self.candidates
            .iter()
            .map(|c| {
                let mut out = c.clone();
                out.init_seed = rng::derive(out.init_seed, run_seed);
                out
            })
            .collect()
    }

    pub fn reseeded_schedule(&self, run_seed: u64) -> Option<CurriculumSchedule> {
        self.schedule.as_ref().map(|s| match s {
            CurriculumSchedule::RandomUniform {
                task_ids,
                total_iterations,
                sampling_seed,
                eval_interval,
            } => CurriculumSchedule::RandomUniform {
                task_ids: task_ids.clone(),
                total_iterations: *total_iterations,
                sampling_seed: rng::derive(*sampling_seed, run_seed),
                eval_interval: *eval_interval,
            },
            sequential => sequential.clone(),
        })
    }

    pub fn reseeded_split_seed(&self, run_seed: u64) -> u64 {
        rng::derive(self.split_seed, run_seed)
    }

    pub fn reseeded_protocol(&self, run_seed: u64) -> EvaluationProtocol {
        EvaluationProtocol {
            mode: self.mode,
            regime: self.regime,
            default_hyper: self.reseeded_hyper(run_seed),
            candidate_hypers: self.reseeded_candidates(run_seed),
            first_block_code: FirstBlockCode::Uniform,
        }
    }
}

/// Hex-truncated SHA-256 of the canonical JSON form, `out_dir` excluded:
/// where outputs land is not part of what they are.
pub fn config_digest(config: &ExperimentConfig) -> String {
    let mut identity = config.clone();
    identity.out_dir = None;
    let json = serde_json::to_vec(&identity).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(&json);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

// ------------------------------------------------------------------------
// Raw deserialization targets: everything optional, defaults filled later.

#[derive(Deserialize, Default, Clone)]
struct RawHyper {
    learning_rate: Option<f64>,
    l2: Option<f64>,
    iterations: Option<u64>,
    batch_size: Option<u64>,
    smoothing_alpha: Option<f64>,
    hidden_width: Option<u64>,
    init_seed: Option<u64>,
}

impl RawHyper {
    fn merged(&self, base: &HyperParams) -> HyperParams {
        HyperParams {
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            l2: self.l2.unwrap_or(base.l2),
            iterations: self.iterations.unwrap_or(base.iterations),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            smoothing_alpha: self.smoothing_alpha.unwrap_or(base.smoothing_alpha),
            hidden_width: self.hidden_width.unwrap_or(base.hidden_width),
            init_seed: self.init_seed.unwrap_or(base.init_seed),
        }
    }
}

#[derive(Deserialize)]
struct RawProtocol {
    mode: Option<EvalMode>,
    regime: Option<FitRegime>,
}

#[derive(Deserialize)]
struct RawTask {
    #[serde(flatten)]
    spec: TaskSpec,
    head: Option<String>,
}

#[derive(Deserialize)]
struct RawConfig {
    kind: Option<ExperimentKind>,
    learner: Option<LearnerKind>,
    seeds: Option<Vec<u64>>,
    precision: Option<u8>,
    out_dir: Option<String>,
    hyper: Option<RawHyper>,
    candidates: Option<Vec<RawHyper>>,
    protocol: Option<RawProtocol>,
    plan: Option<PlanConfig>,
    task: Option<Vec<RawTask>>,
    dataset: Option<String>,
    bitstream: Option<String>,
    schedule: Option<CurriculumSchedule>,
    target: Option<String>,
    eval_fraction: Option<f64>,
    split_seed: Option<u64>,
}

// ------------------------------------------------------------------------
// Unknown-key scan. Serde stops at the first problem; this pass walks the
// whole tree first so one parse reports every typo.

const ROOT_KEYS: &[&str] = &[
    "kind", "learner", "seeds", "precision", "out_dir", "hyper", "candidates", "protocol",
    "plan", "task", "dataset", "bitstream", "schedule", "target", "eval_fraction", "split_seed",
];
const HYPER_KEYS: &[&str] = &[
    "learning_rate", "l2", "iterations", "batch_size", "smoothing_alpha", "hidden_width",
    "init_seed",
];
const PROTOCOL_KEYS: &[&str] = &["mode", "regime"];
const PLAN_KEYS: &[&str] = &["boundaries", "block_size"];
const TASK_KEYS: &[&str] = &["task_id", "n", "seed", "label_permutation", "generator", "head"];
const BLOBS_KEYS: &[&str] = &["kind", "means", "sigma", "rotation"];
const BOW_KEYS: &[&str] = &[
    "kind", "num_topics", "vocab", "concentration", "doc_len_range", "remap_offset",
];
const SEQUENTIAL_KEYS: &[&str] = &["kind", "phases", "eval_interval"];
const PHASE_KEYS: &[&str] = &["task", "iterations"];
const RANDOM_UNIFORM_KEYS: &[&str] = &[
    "kind", "task_ids", "total_iterations", "sampling_seed", "eval_interval",
];

fn scan_flat(value: &toml::Value, ctx: &str, allowed: &[&str], out: &mut Vec<String>) {
    if let Some(table) = value.as_table() {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                out.push(format!("unknown key `{key}` in {ctx}"));
            }
        }
    }
}

fn scan_tagged(
    value: &toml::Value,
    ctx: &str,
    variants: &[(&str, &[&str])],
    out: &mut Vec<String>,
) {
    let Some(table) = value.as_table() else { return };
    let kind = table.get("kind").and_then(|v| v.as_str());
    match kind {
        None => out.push(format!("missing `kind` in {ctx}")),
        Some(k) => match variants.iter().find(|(name, _)| *name == k) {
            Some((_, allowed)) => scan_flat(value, ctx, allowed, out),
            None => {
                let names: Vec<&str> = variants.iter().map(|(n, _)| *n).collect();
                out.push(format!(
                    "unknown kind {k:?} in {ctx} (expected one of {})",
                    names.join(", ")
                ));
            }
        },
    }
}

fn scan_array(value: &toml::Value, mut each: impl FnMut(&toml::Value, usize)) {
    if let Some(items) = value.as_array() {
        for (i, item) in items.iter().enumerate() {
            each(item, i);
        }
    }
}

fn scan_config(root: &toml::Value, out: &mut Vec<String>) {
    scan_flat(root, "the top level", ROOT_KEYS, out);
    let Some(table) = root.as_table() else { return };
    if let Some(v) = table.get("hyper") {
        scan_flat(v, "[hyper]", HYPER_KEYS, out);
    }
    if let Some(v) = table.get("candidates") {
        scan_array(v, |item, i| {
            scan_flat(item, &format!("[[candidates]] #{i}"), HYPER_KEYS, out)
        });
    }
    if let Some(v) = table.get("protocol") {
        scan_flat(v, "[protocol]", PROTOCOL_KEYS, out);
    }
    if let Some(v) = table.get("plan") {
        scan_flat(v, "[plan]", PLAN_KEYS, out);
    }
    if let Some(v) = table.get("task") {
        scan_array(v, |item, i| {
            let ctx = format!("[[task]] #{i}");
            scan_flat(item, &ctx, TASK_KEYS, out);
            if let Some(generator) = item.as_table().and_then(|t| t.get("generator")) {
                scan_tagged(
                    generator,
                    &format!("{ctx}.generator"),
                    &[("gaussian_blobs", BLOBS_KEYS), ("bow_topics", BOW_KEYS)],
                    out,
                );
            }
        });
    }
    if let Some(v) = table.get("schedule") {
        scan_tagged(
            v,
            "[schedule]",
            &[
                ("sequential", SEQUENTIAL_KEYS),
                ("random_uniform", RANDOM_UNIFORM_KEYS),
            ],
            out,
        );
        if let Some(phases) = v.as_table().and_then(|t| t.get("phases")) {
            scan_array(phases, |item, i| {
                scan_flat(item, &format!("[[schedule.phases]] #{i}"), PHASE_KEYS, out)
            });
        }
    }
}

// ------------------------------------------------------------------------
// Validation and normalization.

fn check_hyper(label: &str, hyper: &HyperParams, out: &mut Vec<String>) {
    let mut fail = |msg: String| out.push(format!("{label}: {msg}"));
    if !(hyper.learning_rate > 0.0 && hyper.learning_rate.is_finite()) {
        fail(format!(
            "learning_rate {} violates learning_rate > 0",
            hyper.learning_rate
        ));
    }
    if !(hyper.l2 >= 0.0 && hyper.l2.is_finite()) {
        fail(format!("l2 {} violates l2 >= 0", hyper.l2));
    }
    if !(hyper.smoothing_alpha > 0.0 && hyper.smoothing_alpha.is_finite()) {
        fail(format!(
            "smoothing_alpha {} violates smoothing_alpha > 0",
            hyper.smoothing_alpha
        ));
    }
    if hyper.iterations == 0 {
        fail(String::from("iterations must be at least 1"));
    }
    if hyper.batch_size == 0 {
        fail(String::from("batch_size must be at least 1"));
    }
    if hyper.hidden_width == 0 {
        fail(String::from("hidden_width must be at least 1"));
    }
}

fn validate(raw: RawConfig, violations: &mut Vec<String>) -> Option<ExperimentConfig> {
    let kind = raw.kind;
    if kind.is_none() {
        violations.push(String::from("missing required key `kind`"));
    }
    if raw.learner.is_none() {
        violations.push(String::from("missing required key `learner`"));
    }

    let seeds = raw.seeds.unwrap_or_else(|| vec![0]);
    if seeds.is_empty() {
        violations.push(String::from("`seeds` must list at least one seed"));
    }
    if seeds.iter().collect::<BTreeSet<_>>().len() != seeds.len() {
        violations.push(String::from("`seeds` contains duplicates"));
    }

    let precision = raw.precision.unwrap_or(16);
    if !(8..=30).contains(&precision) {
        violations.push(format!(
            "precision {precision} outside the supported range 8..=30"
        ));
    }

    let eval_fraction = raw.eval_fraction.unwrap_or(0.25);
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
        violations.push(format!(
            "eval_fraction {eval_fraction} violates 0 < eval_fraction < 1"
        ));
    }

    let hyper = raw.hyper.clone().unwrap_or_default().merged(&HyperParams::default());
    check_hyper("hyper", &hyper, violations);
    let mut candidates: Vec<HyperParams> = raw
        .candidates
        .as_deref()
        .unwrap_or_default()
        .iter()
        .map(|c| c.merged(&hyper))
        .collect();
    for (i, c) in candidates.iter().enumerate() {
        check_hyper(&format!("candidates #{i}"), c, violations);
    }
    if !candidates.contains(&hyper) {
        // The default is always part of the grid; block 2 needs it.
        candidates.insert(0, hyper.clone());
    }

    let mode = raw.protocol.as_ref().and_then(|p| p.mode).unwrap_or(EvalMode::Blockwise);
    // Retrain-per-prefix is the default where it is affordable (block
    // granularity); per-example evaluation warm-starts by default because
    // N from-scratch refits rarely are.
    let regime = raw.protocol.as_ref().and_then(|p| p.regime).unwrap_or(match mode {
        EvalMode::Blockwise => FitRegime::FromScratch,
        EvalMode::PerExample => FitRegime::WarmStart,
    });

    let tasks: Vec<ConfigTask> = raw
        .task
        .unwrap_or_default()
        .into_iter()
        .map(|t| ConfigTask { spec: t.spec, head: t.head })
        .collect();
    let mut ids = BTreeSet::new();
    for t in &tasks {
        if let Err(e) = t.spec.validate() {
            violations.push(format!("task {:?}: {e}", t.spec.task_id));
        }
        if !ids.insert(t.spec.task_id.clone()) {
            violations.push(format!("duplicate task id {:?}", t.spec.task_id));
        }
        if t.head.as_deref() == Some("") {
            violations.push(format!("task {:?}: head name is empty", t.spec.task_id));
        }
    }

    if let Some(plan) = &raw.plan {
        match (&plan.boundaries, plan.block_size) {
            (Some(_), Some(_)) | (None, None) => violations.push(String::from(
                "[plan] needs exactly one of `boundaries` or `block_size`",
            )),
            (Some(b), None) if b.is_empty() => {
                violations.push(String::from("[plan] boundaries must be non-empty"))
            }
            (None, Some(0)) => violations.push(String::from("[plan] block_size must be at least 1")),
            _ => {}
        }
    }

    let kind = kind?;

    // Kind-specific key usage: required inputs present, irrelevant ones absent.
    let mut require = |cond: bool, msg: &str| {
        if !cond {
            violations.push(format!("{}: {msg}", kind.name()));
        }
    };
    let sources = usize::from(raw.dataset.is_some()) + tasks.len();
    if kind.single_source() {
        require(
            sources == 1,
            "needs exactly one data source: either `dataset` or a single [[task]]",
        );
    } else {
        require(!tasks.is_empty(), "needs at least one [[task]]");
        require(raw.dataset.is_none(), "`dataset` applies only to single-dataset experiments");
    }
    require(
        raw.plan.is_some() == kind.needs_plan(),
        if kind.needs_plan() { "requires a [plan]" } else { "does not use a [plan]" },
    );
    require(
        raw.bitstream.is_some() == matches!(kind, ExperimentKind::Decompress),
        if matches!(kind, ExperimentKind::Decompress) {
            "requires `bitstream`"
        } else {
            "`bitstream` applies only to decompress"
        },
    );
    require(
        raw.target.is_some() == matches!(kind, ExperimentKind::PretrainFinetune),
        if matches!(kind, ExperimentKind::PretrainFinetune) {
            "requires `target`"
        } else {
            "`target` applies only to pretrain_finetune"
        },
    );
    if !kind.needs_split() {
        require(raw.eval_fraction.is_none(), "does not use `eval_fraction`");
        require(raw.split_seed.is_none(), "does not use `split_seed`");
    }

    match kind {
        ExperimentKind::Continual => match &raw.schedule {
            Some(CurriculumSchedule::Sequential { phases, .. }) => {
                for p in phases {
                    if !ids.contains(&p.task) {
                        violations.push(format!("schedule phase names unknown task {:?}", p.task));
                    }
                }
            }
            _ => violations.push(String::from("continual: requires a sequential [schedule]")),
        },
        ExperimentKind::Multitask | ExperimentKind::PretrainFinetune => match &raw.schedule {
            Some(CurriculumSchedule::RandomUniform { task_ids, .. }) => {
                for id in task_ids {
                    if !ids.contains(id) {
                        violations.push(format!("schedule names unknown task {id:?}"));
                    }
                    if raw.target.as_deref() == Some(id) {
                        violations.push(format!(
                            "target {id:?} may not appear in the pretraining schedule"
                        ));
                    }
                }
            }
            _ => violations.push(format!(
                "{}: requires a random_uniform [schedule]",
                kind.name()
            )),
        },
        _ => {
            if raw.schedule.is_some() {
                violations.push(format!("{}: does not use a [schedule]", kind.name()));
            }
        }
    }
    if kind == ExperimentKind::PretrainFinetune {
        match &raw.target {
            Some(t) if !ids.contains(t) => {
                violations.push(format!("target {t:?} is not among the [[task]] ids"))
            }
            _ => {}
        }
        if tasks.len() < 2 {
            violations.push(String::from(
                "pretrain_finetune: needs the target plus at least one pretraining task",
            ));
        }
    }
    if kind == ExperimentKind::CrossMatrix {
        let mut classes = tasks.iter().map(|t| t.spec.num_classes());
        if let Some(first) = classes.next() {
            if classes.any(|k| k != first) {
                violations.push(String::from(
                    "cross_matrix: all variants must share one label space",
                ));
            }
        }
    }

    Some(ExperimentConfig {
        kind,
        learner: raw.learner?,
        seeds,
        precision,
        out_dir: raw.out_dir,
        hyper,
        candidates,
        mode,
        regime,
        plan: raw.plan,
        tasks,
        dataset: raw.dataset,
        bitstream: raw.bitstream,
        schedule: raw.schedule,
        target: raw.target,
        eval_fraction,
        split_seed: raw.split_seed.unwrap_or(41),
    })
}

pub fn parse_config_str(text: &str) -> AppResult<ExperimentConfig> {
    let value: toml::Value = toml::from_str(text)
        .map_err(|e| AppError::Config(vec![format!("TOML syntax: {e}")]))?;
    let mut violations = Vec::new();
    scan_config(&value, &mut violations);
    let raw: RawConfig = match value.try_into() {
        Ok(raw) => raw,
        Err(e) => {
            violations.push(format!("{e}"));
            return Err(AppError::Config(violations));
        }
    };
    let config = validate(raw, &mut violations);
    match (config, violations.is_empty()) {
        (Some(config), true) => Ok(config),
        (_, _) => Err(AppError::Config(violations)),
    }
}

pub fn parse_config(path: &Path) -> AppResult<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_config_str(&text)
}
