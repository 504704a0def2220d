//! Training curricula over several tasks and the measurements that make
//! transfer visible: zero-shot scores before any target-task step,
//! accuracy series along the schedule, peak-minus-final forgetting, and
//! pretrained-versus-cold codelength on a finetuning target. Tasks train
//! a shared body (when the learner has one) through per-task heads; head
//! sharing is explicit — two tasks conflict exactly when they name the
//! same head.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Example};
use crate::error::{Error, Result};
use crate::learner::{BatchStream, HyperParams, LearnerKind, LearnerState};
use crate::prequential::{
    run_blockwise, BlockPlan, CodelengthReport, EvaluationProtocol, FirstBlockBits, MetricPoint,
    MetricSeries,
};
use crate::rng;

/// One task as the curriculum sees it: a stable id for schedules to name,
/// the head it trains, and fixed train/eval sets (the eval set never
/// changes across phases, so series points are comparable).
#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    pub id: String,
    pub head: String,
    pub train: Dataset,
    pub eval: Dataset,
}

impl TaskData {
    /// Conventional bundle: id and head both named by the train set's task.
    pub fn new(train: Dataset, eval: Dataset) -> Self {
        let id = String::from(train.task_id());
        TaskData { head: id.clone(), id, train, eval }
    }

    /// Same data, but training through a differently named head.
    pub fn with_head(mut self, head: &str) -> Self {
        self.head = String::from(head);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialPhase {
    pub task: String,
    pub iterations: u64,
}

/// What to train on and for how long. Iterations are mini-batch updates;
/// the random-uniform curriculum draws the task of each batch i.i.d.
/// uniformly from its task set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurriculumSchedule {
    Sequential {
        phases: Vec<SequentialPhase>,
        eval_interval: u64,
    },
    RandomUniform {
        task_ids: Vec<String>,
        /// May be zero: the degenerate curriculum that trains nothing.
        total_iterations: u64,
        sampling_seed: u64,
        eval_interval: u64,
    },
}

impl CurriculumSchedule {
    pub fn eval_interval(&self) -> u64 {
        match self {
            CurriculumSchedule::Sequential { eval_interval, .. }
            | CurriculumSchedule::RandomUniform { eval_interval, .. } => *eval_interval,
        }
    }

    fn validate(&self, known: &BTreeMap<&str, &TaskData>) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidSchedule(msg));
        if self.eval_interval() == 0 {
            return fail(String::from("eval interval must be positive"));
        }
        let check = |id: &str| -> Result<()> {
            if known.contains_key(id) {
                Ok(())
            } else {
                Err(Error::UnknownTask(id.to_string()))
            }
        };
        match self {
            CurriculumSchedule::Sequential { phases, .. } => {
                if phases.is_empty() {
                    return fail(String::from("no phases"));
                }
                for p in phases {
                    if p.iterations == 0 {
                        return fail(format!("phase on {:?} has zero iterations", p.task));
                    }
                    check(&p.task)?;
                }
            }
            CurriculumSchedule::RandomUniform { task_ids, .. } => {
                if task_ids.is_empty() {
                    return fail(String::from("empty task set"));
                }
                for id in task_ids {
                    check(id)?;
                }
            }
        }
        Ok(())
    }

    /// The task index each batch of a random-uniform schedule trains on,
    /// deterministic in the sampling seed.
    pub fn sample_sequence(&self) -> Result<Vec<usize>> {
        match self {
            CurriculumSchedule::RandomUniform { task_ids, total_iterations, sampling_seed, .. } => {
                let mut rng = rng::seeded(*sampling_seed);
                Ok((0..*total_iterations)
                    .map(|_| rng.random_range(0..task_ids.len()))
                    .collect())
            }
            CurriculumSchedule::Sequential { .. } => Err(Error::InvalidSchedule(String::from(
                "sampling is defined only for random-uniform schedules",
            ))),
        }
    }
}

/// Peak-minus-final accuracy over a task's recorded series. The paper this
/// mirrors shows forgetting as curves; the scalar is this artifact's choice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForgettingRecord {
    pub peak: f64,
    pub final_score: f64,
    pub drop: f64,
}

/// Cold-start versus pretrained blockwise codelength on the same target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodelengthPair {
    pub cold: CodelengthReport,
    pub pretrained: CodelengthReport,
}

/// Everything a curriculum run measures. Maps are ordered by task id, so
/// serialization is stable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub series: MetricSeries,
    /// Accuracy before any training step of the run (or, for a finetuning
    /// target, before any target-task step).
    pub zero_shot: BTreeMap<String, f64>,
    pub forgetting: BTreeMap<String, ForgettingRecord>,
    pub final_scores: BTreeMap<String, f64>,
    pub codelength_comparison: Option<CodelengthPair>,
}

/// Max/last/difference over the accuracy points recorded for `task`.
pub fn forgetting_metric(series: &MetricSeries, task: &str) -> Result<ForgettingRecord> {
    let mut peak = f64::NEG_INFINITY;
    let mut last = None;
    for p in series.points.iter().filter(|p| p.task == task && p.metric == "accuracy") {
        if p.value > peak {
            peak = p.value;
        }
        last = Some(p.value);
    }
    let final_score =
        last.ok_or_else(|| Error::EmptySeries(task.to_string()))?;
    Ok(ForgettingRecord { peak, final_score, drop: peak - final_score })
}

/// Accuracy of `state` on the task's eval set with no training on it.
pub fn zero_shot_eval(state: &LearnerState, task: &TaskData) -> Result<f64> {
    state.accuracy(task.eval.examples(), &task.head)
}

/// score[i][j] = accuracy of the variant-i-trained state on variant j's
/// eval set, predicted through state i's own head. The diagonal is
/// in-distribution.
pub fn cross_variant_matrix(
    states: &[LearnerState],
    variants: &[TaskData],
) -> Result<Vec<Vec<f64>>> {
    if states.len() != variants.len() || states.is_empty() {
        return Err(Error::MismatchedReports(format!(
            "{} states for {} variants",
            states.len(),
            variants.len()
        )));
    }
    let k = variants[0].eval.label_space();
    for v in variants {
        if v.eval.label_space() != k {
            return Err(Error::LabelSpaceMismatch(format!(
                "variant {:?} has a different label space",
                v.id
            )));
        }
    }
    let mut matrix = Vec::with_capacity(states.len());
    for (state, own) in states.iter().zip(variants) {
        if state.head_num_classes(&own.head)? != k.num_classes() {
            return Err(Error::LabelSpaceMismatch(format!(
                "state head {:?} does not match the variants' label space",
                own.head
            )));
        }
        let mut row = Vec::with_capacity(variants.len());
        for v in variants {
            row.push(state.accuracy(v.eval.examples(), &own.head)?);
        }
        matrix.push(row);
    }
    Ok(matrix)
}

/// The batch-granular training loop shared by every curriculum: one state,
/// one persistent shuffle stream per task (so revisiting a task continues
/// its epoch schedule instead of restarting it).
struct Trainer<'a> {
    state: LearnerState,
    tasks: BTreeMap<&'a str, &'a TaskData>,
    streams: BTreeMap<&'a str, BatchStream>,
    batch_size: usize,
    indices: Vec<usize>,
    batch: Vec<Example>,
}

impl<'a> Trainer<'a> {
    fn new(kind: LearnerKind, hyper: &HyperParams, tasks: &'a [TaskData]) -> Result<Self> {
        let first = tasks
            .first()
            .ok_or_else(|| Error::InvalidSchedule(String::from("no tasks supplied")))?;
        let feature_spec = first.train.feature_spec();
        let mut state =
            LearnerState::init(kind, first.train.label_space(), feature_spec, hyper.clone())?;
        let mut by_id: BTreeMap<&str, &TaskData> = BTreeMap::new();
        for t in tasks {
            if t.train.feature_spec() != feature_spec || t.eval.feature_spec() != feature_spec {
                return Err(Error::FeatureMismatch(format!(
                    "task {:?} does not share the run's feature layout",
                    t.id
                )));
            }
            if t.eval.label_space() != t.train.label_space() {
                return Err(Error::LabelSpaceMismatch(format!(
                    "task {:?}: train and eval label spaces differ",
                    t.id
                )));
            }
            if by_id.insert(&t.id, t).is_some() {
                return Err(Error::InvalidSchedule(format!("duplicate task id {:?}", t.id)));
            }
            if state.has_head(&t.head) {
                if state.head_num_classes(&t.head)? != t.train.label_space().num_classes() {
                    return Err(Error::LabelSpaceMismatch(format!(
                        "tasks sharing head {:?} disagree on label-space size",
                        t.head
                    )));
                }
            } else {
                state = state.add_head(&t.head, t.train.label_space())?;
            }
        }
        Ok(Trainer {
            state,
            tasks: by_id,
            streams: BTreeMap::new(),
            batch_size: hyper.batch_size as usize,
            indices: Vec::new(),
            batch: Vec::new(),
        })
    }

    fn task(&self, id: &str) -> Result<&'a TaskData> {
        self.tasks
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownTask(id.to_string()))
    }

    fn train_one_batch(&mut self, id: &str) -> Result<()> {
        let task = self.task(id)?;
        let stream = self
            .streams
            .entry(task.id.as_str())
            .or_insert_with(|| BatchStream::new(task.train.len(), task.train.ordering_seed()));
        stream.next_batch(self.batch_size, &mut self.indices);
        self.batch.clear();
        self.batch
            .extend(self.indices.iter().map(|&i| task.train.examples()[i].clone()));
        self.state.absorb_batch(&self.batch, &task.head)
    }

    fn eval_point(
        &self,
        series: &mut MetricSeries,
        iteration: u64,
        eval_tasks: &[&'a TaskData],
        seed: u64,
    ) -> Result<()> {
        for t in eval_tasks {
            series.push(MetricPoint {
                examples_seen: iteration,
                metric: String::from("accuracy"),
                value: self.state.accuracy(t.eval.examples(), &t.head)?,
                task: t.id.clone(),
                seed,
            });
        }
        Ok(())
    }
}

fn collect_eval_tasks<'a>(
    trainer: &Trainer<'a>,
    eval_ids: &[String],
) -> Result<Vec<&'a TaskData>> {
    eval_ids.iter().map(|id| trainer.task(id)).collect()
}

fn summarize(
    series: MetricSeries,
    eval_tasks: &[&TaskData],
    codelength_comparison: Option<CodelengthPair>,
) -> Result<TransferReport> {
    let mut zero_shot = BTreeMap::new();
    let mut forgetting = BTreeMap::new();
    let mut final_scores = BTreeMap::new();
    for t in eval_tasks {
        let first = series
            .points
            .iter()
            .find(|p| p.task == t.id && p.metric == "accuracy")
            .ok_or_else(|| Error::EmptySeries(t.id.clone()))?;
        zero_shot.insert(t.id.clone(), first.value);
        let record = forgetting_metric(&series, &t.id)?;
        final_scores.insert(t.id.clone(), record.final_score);
        forgetting.insert(t.id.clone(), record);
    }
    Ok(TransferReport { series, zero_shot, forgetting, final_scores, codelength_comparison })
}

/// Train the schedule's phases in order on one warm-started state,
/// evaluating every task in `eval_ids` at iteration 0, every
/// `eval_interval` iterations, and at each phase boundary.
pub fn run_sequential(
    kind: LearnerKind,
    hyper: &HyperParams,
    schedule: &CurriculumSchedule,
    tasks: &[TaskData],
    eval_ids: &[String],
) -> Result<TransferReport> {
    let CurriculumSchedule::Sequential { phases, eval_interval } = schedule else {
        return Err(Error::InvalidSchedule(String::from(
            "sequential run needs a sequential schedule",
        )));
    };
    let mut trainer = Trainer::new(kind, hyper, tasks)?;
    schedule.validate(&trainer.tasks)?;
    let eval_tasks = collect_eval_tasks(&trainer, eval_ids)?;
    let seed = hyper.init_seed;

    let mut series = MetricSeries::default();
    trainer.eval_point(&mut series, 0, &eval_tasks, seed)?;
    let mut iteration = 0u64;
    let mut last_eval = 0u64;
    for phase in phases {
        for _ in 0..phase.iterations {
            iteration += 1;
            trainer.train_one_batch(&phase.task)?;
            if iteration.is_multiple_of(*eval_interval) {
                trainer.eval_point(&mut series, iteration, &eval_tasks, seed)?;
                last_eval = iteration;
            }
        }
        if last_eval != iteration {
            trainer.eval_point(&mut series, iteration, &eval_tasks, seed)?;
            last_eval = iteration;
        }
    }
    summarize(series, &eval_tasks, None)
}

fn random_uniform_run(
    kind: LearnerKind,
    hyper: &HyperParams,
    schedule: &CurriculumSchedule,
    tasks: &[TaskData],
    eval_ids: &[String],
) -> Result<(TransferReport, LearnerState)> {
    let CurriculumSchedule::RandomUniform { task_ids, total_iterations, eval_interval, .. } =
        schedule
    else {
        return Err(Error::InvalidSchedule(String::from(
            "random-uniform run needs a random-uniform schedule",
        )));
    };
    let mut trainer = Trainer::new(kind, hyper, tasks)?;
    schedule.validate(&trainer.tasks)?;
    let eval_tasks = collect_eval_tasks(&trainer, eval_ids)?;
    let draws = schedule.sample_sequence()?;
    let seed = hyper.init_seed;

    let mut series = MetricSeries::default();
    trainer.eval_point(&mut series, 0, &eval_tasks, seed)?;
    let mut last_eval = 0u64;
    for (i, &pick) in draws.iter().enumerate() {
        let iteration = i as u64 + 1;
        trainer.train_one_batch(&task_ids[pick])?;
        if iteration.is_multiple_of(*eval_interval) {
            trainer.eval_point(&mut series, iteration, &eval_tasks, seed)?;
            last_eval = iteration;
        }
    }
    if last_eval != *total_iterations {
        trainer.eval_point(&mut series, *total_iterations, &eval_tasks, seed)?;
    }
    let report = summarize(series, &eval_tasks, None)?;
    Ok((report, trainer.state))
}

/// Train on a uniformly sampled task per batch; the draw sequence is fixed
/// by the schedule's sampling seed. With a single task in the set this is
/// identical to a one-phase sequential run of the same length.
pub fn run_random_uniform(
    kind: LearnerKind,
    hyper: &HyperParams,
    schedule: &CurriculumSchedule,
    tasks: &[TaskData],
    eval_ids: &[String],
) -> Result<TransferReport> {
    random_uniform_run(kind, hyper, schedule, tasks, eval_ids).map(|(report, _)| report)
}

/// Random-uniform pretraining on `pretrain`, then a blockwise codelength
/// run on the target, starting from the pretrained state. When the target's
/// head was trained during pretraining, its first block is coded by the
/// pretrained model's actual predictions instead of the uniform code; a
/// cold-start report on the same target and plan rides along for
/// comparison. With zero pretraining iterations and a candidate grid that
/// shares the run's init seed, the two reports coincide.
pub fn pretrain_then_finetune(
    kind: LearnerKind,
    hyper: &HyperParams,
    schedule: &CurriculumSchedule,
    pretrain: &[TaskData],
    target: &TaskData,
    protocol: &EvaluationProtocol,
    plan: &BlockPlan,
) -> Result<TransferReport> {
    if pretrain.iter().any(|t| t.id == target.id) {
        return Err(Error::InvalidSchedule(format!(
            "target {:?} appears in the pretraining set",
            target.id
        )));
    }
    let eval_ids: Vec<String> = pretrain.iter().map(|t| t.id.clone()).collect();
    let (mut report, state) = random_uniform_run(kind, hyper, schedule, pretrain, &eval_ids)?;

    // Target zero-shot, before any target-task step. A missing head means
    // the untrained-head score, i.e. pure chance behavior.
    let zero_shot_state;
    let scorer = if state.has_head(&target.head) {
        &state
    } else {
        zero_shot_state = state.add_head(&target.head, target.eval.label_space())?;
        &zero_shot_state
    };
    report
        .zero_shot
        .insert(target.id.clone(), zero_shot_eval(scorer, target)?);

    let first_block = if state.has_head(&target.head) {
        FirstBlockBits::ByPredictions
    } else {
        FirstBlockBits::Uniform
    };
    let pretrained = run_blockwise(
        Some(&state),
        kind,
        protocol,
        &target.train,
        plan,
        &target.head,
        first_block,
        None,
    )?;
    let cold = run_blockwise(
        None,
        kind,
        protocol,
        &target.train,
        plan,
        &target.head,
        FirstBlockBits::Uniform,
        None,
    )?;
    report.codelength_comparison = Some(CodelengthPair { cold, pretrained });
    Ok(report)
}
