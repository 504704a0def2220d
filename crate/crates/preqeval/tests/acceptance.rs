//! The release gate. Each test checks one exit criterion and prints a
//! single PASS/FAIL line; `cargo test --test acceptance -- --nocapture`
//! shows the full scoreboard.

use preqeval::config::parse_config_str;
use preqeval::{run, verify};
use preqeval_core::curriculum::TaskData;
use preqeval_core::rng;
use preqeval_core::tasks::{generate, split};
use preqeval_core::{
    blockwise_codelength, cross_variant_matrix, decode_labels, encode_labels,
    exact_online_codelength, forgetting_metric, measured_vs_theoretical, pretrain_then_finetune,
    run_random_uniform, run_sequential, switching_codelength, BlockPlan, BlockRecord,
    CodelengthReport, CurriculumSchedule, Dataset, EvalMode, EvaluationProtocol, Example,
    FeatureSpec, FeatureVector, FitRegime, GeneratorParams, HyperParams, IdentityCost,
    LabelSpace, LearnerKind, LearnerState, SequentialPhase, TaskSpec,
};
use rand::Rng;

fn conclude(id: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {id}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{id}: {detail}");
}

/// Random dense dataset; labels carry no signal, which is exactly what the
/// coding oracles need.
fn synth_dense(n: usize, k: u32, seed: u64) -> Dataset {
    let mut rng = rng::seeded(seed);
    let examples = (0..n)
        .map(|_| Example {
            features: FeatureVector::Dense(vec![
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]),
            label: rng.random_range(0..k),
        })
        .collect();
    Dataset::new(
        examples,
        LabelSpace::new(k).unwrap(),
        FeatureSpec::Dense { dim: 2 },
        format!("synth{seed}"),
        seed,
    )
    .unwrap()
}

fn blob_spec(task_id: &str, n: usize, seed: u64, rotation: f64) -> TaskSpec {
    TaskSpec {
        generator: GeneratorParams::GaussianBlobs {
            means: vec![vec![-2.0, 0.0], vec![2.0, 0.0]],
            sigma: 0.9,
            rotation,
        },
        n,
        seed,
        task_id: String::from(task_id),
        label_permutation: None,
    }
}

fn task_data(spec: &TaskSpec, split_seed: u64) -> TaskData {
    let data = generate(spec).unwrap();
    let (train, eval) = split(&data, 0.25, split_seed).unwrap();
    TaskData::new(train, eval)
}

#[test]
fn criterion_01_uniform_code_oracle() {
    let mut worst = 0.0f64;
    for case in 0..50u64 {
        let mut rng = rng::seeded(rng::derive(101, case));
        let n = rng.random_range(1..=300);
        let k = rng.random_range(2..=12);
        let data = synth_dense(n, k, rng::derive(102, case));
        let ideal = n as f64 * (k as f64).log2();

        let hyper = HyperParams::default();
        let exact =
            exact_online_codelength(LearnerKind::Uniform, &hyper, &data, FitRegime::WarmStart)
                .unwrap();
        let plan = BlockPlan::uniform_blocks(n, rng.random_range(1..=n)).unwrap();
        let protocol =
            EvaluationProtocol::single(EvalMode::Blockwise, FitRegime::WarmStart, hyper);
        let blockwise =
            blockwise_codelength(LearnerKind::Uniform, &protocol, &data, &plan).unwrap();

        worst = worst
            .max((exact.total_bits - ideal).abs())
            .max((blockwise.total_bits - ideal).abs());
    }
    conclude(
        "01 uniform-code oracle",
        worst <= 1e-9,
        &format!("worst |codelength − N·log2(K)| = {worst:.3e} bits over 50 cases"),
    );
}

#[test]
fn criterion_02_laplace_oracle() {
    let hyper = HyperParams::default(); // smoothing_alpha = 1
    let fixed = Dataset::new(
        [0u32, 1, 0, 0]
            .iter()
            .map(|&label| Example { features: FeatureVector::Dense(vec![0.0]), label })
            .collect(),
        LabelSpace::new(2).unwrap(),
        FeatureSpec::Dense { dim: 1 },
        String::from("laplace"),
        0,
    )
    .unwrap();
    let fixed_bits =
        exact_online_codelength(LearnerKind::Prior, &hyper, &fixed, FitRegime::WarmStart)
            .unwrap()
            .total_bits;
    let fixed_err = (fixed_bits - 4.32193).abs();

    // The closed-form sequential probability: p(y) = (count_y + α)/(seen + Kα).
    let mut worst_per_example = 0.0f64;
    for case in 0..100u64 {
        let mut rng = rng::seeded(rng::derive(201, case));
        let n = rng.random_range(1..=60);
        let k = rng.random_range(2..=6);
        let data = synth_dense(n, k, rng::derive(202, case));
        let measured =
            exact_online_codelength(LearnerKind::Prior, &hyper, &data, FitRegime::WarmStart)
                .unwrap()
                .total_bits;
        let mut counts = vec![0.0f64; k as usize];
        let mut seen = 0.0f64;
        let mut oracle = 0.0f64;
        for ex in data.examples() {
            let p = (counts[ex.label as usize] + 1.0) / (seen + k as f64);
            oracle -= p.log2();
            counts[ex.label as usize] += 1.0;
            seen += 1.0;
        }
        worst_per_example = worst_per_example.max((measured - oracle).abs() / n as f64);
    }
    conclude(
        "02 Laplace oracle",
        fixed_err <= 1e-3 && worst_per_example <= 1e-6,
        &format!(
            "[0,1,0,0] gives {fixed_bits:.6} bits (err {fixed_err:.2e}); worst sequential-oracle error {worst_per_example:.3e} bits/example over 100 sequences"
        ),
    );
}

#[test]
fn criterion_03_per_example_blockwise_equivalence() {
    let mut worst = 0.0f64;
    for case in 0..20u64 {
        let mut rng = rng::seeded(rng::derive(301, case));
        let n = rng.random_range(5..=40);
        let k = rng.random_range(2..=4);
        let data = synth_dense(n, k, rng::derive(302, case));
        let kind = match case % 3 {
            0 => LearnerKind::Prior,
            1 => LearnerKind::LogisticRegression,
            _ => LearnerKind::Mlp,
        };
        let regime = if case % 2 == 0 { FitRegime::WarmStart } else { FitRegime::FromScratch };
        let hyper = HyperParams {
            iterations: 6,
            batch_size: 4,
            hidden_width: 4,
            init_seed: rng::derive(303, case),
            ..HyperParams::default()
        };
        let exact = exact_online_codelength(kind, &hyper, &data, regime).unwrap();
        let protocol = EvaluationProtocol::single(EvalMode::PerExample, regime, hyper);
        let plan = BlockPlan::per_example(n).unwrap();
        let unit = blockwise_codelength(kind, &protocol, &data, &plan).unwrap();
        worst = worst.max((exact.total_bits - unit.total_bits).abs());
    }
    conclude(
        "03 per-example/blockwise equivalence",
        worst <= 1e-6,
        &format!("worst |exact − unit-blockwise| = {worst:.3e} bits over 20 datasets"),
    );
}

#[test]
fn criterion_04_coder_soundness() {
    let mut worst_gap: f64 = f64::NEG_INFINITY;
    let mut best_gap: f64 = f64::INFINITY;
    for case in 0..1000u64 {
        let mut rng = rng::seeded(rng::derive(401, case));
        let n = rng.random_range(1..=24);
        let k = rng.random_range(2..=8);
        let data = synth_dense(n, k, rng::derive(402, case));
        let kind = match case % 5 {
            0 | 1 => LearnerKind::Uniform,
            2 | 3 => LearnerKind::Prior,
            _ => LearnerKind::LogisticRegression,
        };
        let hyper = HyperParams { iterations: 2, batch_size: 4, ..HyperParams::default() };
        let protocol =
            EvaluationProtocol::single(EvalMode::Blockwise, FitRegime::WarmStart, hyper);
        let plan = BlockPlan::uniform_blocks(n, rng.random_range(1..=n)).unwrap();
        let precision = rng.random_range(8..=30);

        let encoded = encode_labels(kind, &protocol, &data, &plan, precision).unwrap();
        let features: Vec<FeatureVector> =
            data.examples().iter().map(|e| e.features.clone()).collect();
        let decoded = decode_labels(
            kind,
            &protocol,
            &features,
            data.feature_spec(),
            &plan,
            &encoded.stream,
        )
        .unwrap();
        let truth: Vec<u32> = data.examples().iter().map(|e| e.label).collect();
        assert_eq!(decoded, truth, "case {case}: decode mismatch");

        let comparison =
            measured_vs_theoretical(&encoded.stream, &encoded.stats, &encoded.report).unwrap();
        worst_gap = worst_gap.max(comparison.gap_bits);
        best_gap = best_gap.min(comparison.gap_bits);

        let again = encode_labels(kind, &protocol, &data, &plan, precision).unwrap();
        assert_eq!(
            encoded.stream.to_bytes(),
            again.stream.to_bytes(),
            "case {case}: re-encode differs"
        );
    }
    conclude(
        "04 coder soundness",
        (-1.0..=32.0).contains(&best_gap) && (-1.0..=32.0).contains(&worst_gap),
        &format!(
            "1000 round trips decoded exactly, re-encodes byte-identical, payload gap within [{best_gap:.3}, {worst_gap:.3}] bits of quantized ideal"
        ),
    );
}

#[test]
fn criterion_05_gradient_checks() {
    let mut worst = 0.0f64;
    for case in 0..100u64 {
        let mut rng = rng::seeded(rng::derive(501, case));
        let k = rng.random_range(2..=5);
        let n = rng.random_range(6..=20);
        let data = synth_dense(n, k, rng::derive(502, case));
        let kind = if case % 2 == 0 { LearnerKind::LogisticRegression } else { LearnerKind::Mlp };
        let hyper = HyperParams {
            iterations: 5,
            batch_size: 4,
            hidden_width: rng.random_range(2..=8),
            l2: if case % 4 == 0 { 0.01 } else { 0.0 },
            init_seed: rng::derive(503, case),
            ..HyperParams::default()
        };
        let state = LearnerState::init(kind, data.label_space(), data.feature_spec(), hyper)
            .unwrap()
            .fit(&data, data.task_id(), FitRegime::WarmStart)
            .unwrap();
        let probe = &data.examples()[rng.random_range(0..n)];
        let rel = state.gradient_check(probe, data.task_id(), 1e-5).unwrap();
        worst = worst.max(rel);
    }
    conclude(
        "05 gradient checks",
        worst <= 1e-4,
        &format!("worst analytic-vs-central-difference discrepancy {worst:.3e} over 100 cases"),
    );
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &slot in &idx[i..=j] {
            out[slot] = mid;
        }
        i = j + 1;
    }
    out
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..x.len() {
        cov += (rx[i] - mx) * (ry[i] - my);
        vx += (rx[i] - mx).powi(2);
        vy += (ry[i] - my).powi(2);
    }
    cov / (vx.sqrt() * vy.sqrt())
}

#[test]
fn criterion_06_codelength_accuracy_correlation() {
    let learners = [
        LearnerKind::Uniform,
        LearnerKind::Prior,
        LearnerKind::NaiveBayes,
        LearnerKind::LogisticRegression,
    ];
    let mut bits = Vec::new();
    let mut accuracy = Vec::new();
    for seed in 0..10u64 {
        let spec = TaskSpec {
            generator: GeneratorParams::BowTopics {
                num_topics: 3,
                vocab: 30,
                concentration: 0.2,
                doc_len_range: (8, 20),
                remap_offset: 0,
            },
            n: 240,
            seed: rng::derive(601, seed),
            task_id: String::from("bow"),
            label_permutation: None,
        };
        let data = generate(&spec).unwrap();
        let (train, eval) = split(&data, 0.25, rng::derive(602, seed)).unwrap();
        let plan = BlockPlan::uniform_blocks(train.len(), 30).unwrap();
        for kind in learners {
            let hyper = HyperParams { init_seed: rng::derive(603, seed), ..HyperParams::default() };
            let protocol =
                EvaluationProtocol::single(EvalMode::Blockwise, FitRegime::WarmStart, hyper.clone());
            let report = blockwise_codelength(kind, &protocol, &train, &plan).unwrap();
            let mut state =
                LearnerState::init(kind, train.label_space(), train.feature_spec(), hyper)
                    .unwrap()
                    .fit(&train, train.task_id(), FitRegime::WarmStart)
                    .unwrap();
            if !state.has_head(train.task_id()) {
                state = state.add_head(train.task_id(), train.label_space()).unwrap();
            }
            bits.push(report.total_bits);
            accuracy.push(state.accuracy(eval.examples(), eval.task_id()).unwrap());
        }
    }
    let rho = spearman(&bits, &accuracy);
    conclude(
        "06 codelength-accuracy correlation",
        rho <= -0.7,
        &format!("Spearman(total bits, final accuracy) = {rho:.3} over 4 learners x 10 seeds"),
    );
}

#[test]
fn criterion_07_transfer_benefit() {
    let mut cheaper = 0;
    let mut above_chance = 0;
    for seed in 0..10u64 {
        let pretrain = task_data(
            &blob_spec("pre", 160, rng::derive(701, seed), 0.25),
            rng::derive(702, seed),
        )
        .with_head("shared");
        let target = task_data(
            &blob_spec("tgt", 160, rng::derive(703, seed), 0.0),
            rng::derive(704, seed),
        )
        .with_head("shared");
        let hyper = HyperParams { init_seed: rng::derive(705, seed), ..HyperParams::default() };
        let schedule = CurriculumSchedule::RandomUniform {
            task_ids: vec![String::from("pre")],
            total_iterations: 120,
            sampling_seed: rng::derive(706, seed),
            eval_interval: 40,
        };
        let protocol =
            EvaluationProtocol::single(EvalMode::Blockwise, FitRegime::WarmStart, hyper.clone());
        let plan = BlockPlan::uniform_blocks(target.train.len(), 15).unwrap();
        let report = pretrain_then_finetune(
            LearnerKind::LogisticRegression,
            &hyper,
            &schedule,
            &[pretrain],
            &target,
            &protocol,
            &plan,
        )
        .unwrap();
        let pair = report.codelength_comparison.unwrap();
        if pair.pretrained.total_bits < pair.cold.total_bits {
            cheaper += 1;
        }
        if report.zero_shot["tgt"] > 0.5 {
            above_chance += 1;
        }
    }
    conclude(
        "07 transfer benefit",
        cheaper >= 9 && above_chance >= 9,
        &format!(
            "pretraining cut target codelength in {cheaper}/10 seeds; zero-shot beat 1/K in {above_chance}/10"
        ),
    );
}

#[test]
fn criterion_08_generalization_gap() {
    let rotations = [0.0, 2.0944, 4.1888];
    let mut passing = 0;
    for seed in 0..10u64 {
        let variants: Vec<TaskData> = rotations
            .iter()
            .enumerate()
            .map(|(i, &rot)| {
                task_data(
                    &blob_spec(&format!("rot{i}"), 160, rng::derive(801 + i as u64, seed), rot),
                    rng::derive(810, seed),
                )
            })
            .collect();
        let hyper = HyperParams {
            learning_rate: 0.2,
            iterations: 60,
            init_seed: rng::derive(811, seed),
            ..HyperParams::default()
        };
        let states: Vec<LearnerState> = variants
            .iter()
            .map(|t| {
                LearnerState::init(
                    LearnerKind::LogisticRegression,
                    t.train.label_space(),
                    t.train.feature_spec(),
                    hyper.clone(),
                )
                .unwrap()
                .fit(&t.train, &t.head, FitRegime::WarmStart)
                .unwrap()
            })
            .collect();
        let scores = cross_variant_matrix(&states, &variants).unwrap();
        let ok = (0..3).all(|i| {
            (0..3).all(|j| i == j || scores[i][i] >= scores[i][j] + 0.05)
        });
        if ok {
            passing += 1;
        }
    }
    conclude(
        "08 generalization gap",
        passing >= 9,
        &format!("diagonal led every row off-diagonal by >= 0.05 in {passing}/10 seeds"),
    );
}

#[test]
fn criterion_09_forgetting_vs_curriculum() {
    let mut passing = 0;
    for seed in 0..10u64 {
        // Conflicting pair: identical features, flipped labels.
        let gen_seed = rng::derive(901, seed);
        let split_seed = rng::derive(902, seed);
        let spec_a = blob_spec("a", 160, gen_seed, 0.0);
        let mut spec_b = blob_spec("b", 160, gen_seed, 0.0);
        spec_b.label_permutation = Some(vec![1, 0]);
        let hyper = HyperParams { init_seed: rng::derive(903, seed), ..HyperParams::default() };

        // Shared head, one task after the other: the second phase overwrites
        // the first task's decision rule.
        let shared = vec![
            task_data(&spec_a, split_seed).with_head("shared"),
            task_data(&spec_b, split_seed).with_head("shared"),
        ];
        let sequential = CurriculumSchedule::Sequential {
            phases: vec![
                SequentialPhase { task: String::from("a"), iterations: 120 },
                SequentialPhase { task: String::from("b"), iterations: 120 },
            ],
            eval_interval: 30,
        };
        let ids = vec![String::from("a"), String::from("b")];
        let sequential_report = run_sequential(
            LearnerKind::LogisticRegression,
            &hyper,
            &sequential,
            &shared,
            &ids,
        )
        .unwrap();
        let drop = forgetting_metric(&sequential_report.series, "a").unwrap().drop;

        // Separate heads, random mixture: nothing to overwrite.
        let separate = vec![task_data(&spec_a, split_seed), task_data(&spec_b, split_seed)];
        let mixture = CurriculumSchedule::RandomUniform {
            task_ids: ids.clone(),
            total_iterations: 240,
            sampling_seed: rng::derive(904, seed),
            eval_interval: 60,
        };
        let mixed_report = run_random_uniform(
            LearnerKind::LogisticRegression,
            &hyper,
            &mixture,
            &separate,
            &ids,
        )
        .unwrap();

        let mut within = true;
        for task in ["a", "b"] {
            let solo_tasks = vec![task_data(
                if task == "a" { &spec_a } else { &spec_b },
                split_seed,
            )];
            let solo = CurriculumSchedule::RandomUniform {
                task_ids: vec![String::from(task)],
                total_iterations: 120,
                sampling_seed: rng::derive(905, seed),
                eval_interval: 60,
            };
            let baseline = run_random_uniform(
                LearnerKind::LogisticRegression,
                &hyper,
                &solo,
                &solo_tasks,
                &[String::from(task)],
            )
            .unwrap()
            .final_scores[task];
            if (mixed_report.final_scores[task] - baseline).abs() > 0.05 {
                within = false;
            }
        }
        if drop >= 0.3 && within {
            passing += 1;
        }
    }
    conclude(
        "09 forgetting vs curriculum",
        passing >= 9,
        &format!(
            "shared-head sequential forgot (drop >= 0.3) while separate-head mixture stayed within 0.05 of baselines in {passing}/10 seeds"
        ),
    );
}

#[test]
fn criterion_10_switching_bound() {
    let mut worst_slack = f64::INFINITY;
    for case in 0..100u64 {
        let mut rng = rng::seeded(rng::derive(1001, case));
        let models = rng.random_range(2..=6);
        let blocks = rng.random_range(1..=8);
        let sizes: Vec<usize> = (0..blocks).map(|_| rng.random_range(1..=20)).collect();
        let protocol = EvaluationProtocol::single(
            EvalMode::Blockwise,
            FitRegime::WarmStart,
            HyperParams::default(),
        );
        let reports: Vec<CodelengthReport> = (0..models)
            .map(|m| {
                let mut end = 0;
                let mut total = 0.0;
                let blocks: Vec<BlockRecord> = sizes
                    .iter()
                    .enumerate()
                    .map(|(i, &sz)| {
                        end += sz;
                        let bits = rng.random_range(0.0..50.0);
                        total += bits;
                        BlockRecord {
                            index: i + 1,
                            examples: sz,
                            end,
                            bits,
                            accuracy: 0.0,
                            hyper_index: if i == 0 { None } else { Some(0) },
                            model: None,
                        }
                    })
                    .collect();
                CodelengthReport {
                    learner: format!("model{m}"),
                    dataset_id: String::from("synthetic"),
                    dataset_digest: String::from("shared"),
                    examples: end,
                    num_classes: 2,
                    protocol: protocol.clone(),
                    blocks,
                    total_bits: total,
                }
            })
            .collect();
        let switched = switching_codelength(&reports, IdentityCost::On).unwrap();
        let best_single = reports
            .iter()
            .map(|r| r.total_bits)
            .fold(f64::INFINITY, f64::min);
        let bound = best_single + (blocks as f64 - 1.0) * (models as f64).log2();
        worst_slack = worst_slack.min(bound - switched.total_bits);
    }
    conclude(
        "10 switching bound",
        worst_slack >= -1e-9,
        &format!(
            "switching total stayed under min-single + (M−1)·log2(models) with worst slack {worst_slack:.6} bits over 100 sets"
        ),
    );
}

#[test]
fn criterion_11_end_to_end_determinism() {
    let base_task = r#"
[[task]]
task_id = "blob"
n = 60
seed = 7

[task.generator]
kind = "gaussian_blobs"
means = [[-2.0, 0.0], [2.0, 0.0]]
sigma = 0.9
"#;
    let two_tasks = r#"
[[task]]
task_id = "a"
n = 60
seed = 3

[task.generator]
kind = "gaussian_blobs"
means = [[-2.0, 0.0], [2.0, 0.0]]
sigma = 0.9

[[task]]
task_id = "b"
n = 60
seed = 4

[task.generator]
kind = "gaussian_blobs"
means = [[0.0, -2.0], [0.0, 2.0]]
sigma = 0.9
"#;
    let header = "learner = \"logistic_regression\"\nseeds = [0]\n";
    let plan = "\n[plan]\nblock_size = 15\n";
    let mut configs = vec![
        format!("kind = \"codelength\"\n{header}{plan}{base_task}"),
        format!("kind = \"compress\"\n{header}{plan}{base_task}"),
        format!("kind = \"curve\"\n{header}{plan}{base_task}"),
        format!(
            "kind = \"continual\"\n{header}\n[schedule]\nkind = \"sequential\"\neval_interval = 20\n\n[[schedule.phases]]\ntask = \"a\"\niterations = 40\n\n[[schedule.phases]]\ntask = \"b\"\niterations = 40\n{two_tasks}"
        ),
        format!(
            "kind = \"multitask\"\n{header}\n[schedule]\nkind = \"random_uniform\"\ntask_ids = [\"a\", \"b\"]\ntotal_iterations = 60\nsampling_seed = 5\neval_interval = 20\n{two_tasks}"
        ),
        format!("kind = \"cross_matrix\"\n{header}{two_tasks}"),
        format!(
            "kind = \"pretrain_finetune\"\ntarget = \"b\"\n{header}{plan}\n[schedule]\nkind = \"random_uniform\"\ntask_ids = [\"a\"]\ntotal_iterations = 60\nsampling_seed = 5\neval_interval = 20\n{two_tasks}"
        ),
    ];

    let root = tempfile::tempdir().unwrap();
    // Decompress needs a stream to read: produce it with the compress config.
    let compress = parse_config_str(&configs[1]).unwrap();
    let compressed = run(&compress, root.path(), false, 1).unwrap();
    assert!(compressed.record.all_ok(), "{:?}", compressed.record.seeds);
    let stream = compressed.dir.join("0").join("stream.pqac");
    configs.push(format!(
        "kind = \"decompress\"\nbitstream = {:?}\n{header}{plan}{base_task}",
        stream.to_str().unwrap()
    ));

    let mut verified = Vec::new();
    for text in &configs {
        let config = parse_config_str(text).unwrap();
        let outcome = run(&config, root.path(), false, 1).unwrap();
        assert!(
            outcome.record.all_ok(),
            "{}: {:?}",
            config.kind.name(),
            outcome.record.seeds
        );
        verify(&config, root.path())
            .unwrap_or_else(|e| panic!("{}: verify failed: {e}", config.kind.name()));
        verified.push(config.kind.name());
    }
    verified.sort_unstable();
    conclude(
        "11 end-to-end determinism",
        verified.len() == 8,
        &format!("verify re-ran byte-identical for every kind: {}", verified.join(", ")),
    );
}
