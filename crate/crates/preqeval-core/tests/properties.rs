//! Randomized contract checks over the public API. Each property encodes
//! an invariant the rest of the system leans on; shrinking gives minimal
//! counterexamples when one breaks.

use proptest::prelude::*;

use preqeval_core::coder::quantize_probs;
use preqeval_core::rng;
use preqeval_core::tasks::{apply_shift, generate};
use preqeval_core::{
    blockwise_codelength, decode_labels, encode_labels, exact_online_codelength,
    hyperparameter_carryover, switching_codelength, BlockPlan, BlockRecord, CodelengthReport,
    Dataset, EvalMode, EvaluationProtocol, Example, FeatureSpec, FeatureVector, FitRegime,
    GeneratorParams, HyperParams, IdentityCost, LabelSpace, LearnerKind, LearnerState, Shift,
    TaskSpec, EPSILON_FLOOR,
};
use rand::Rng;

fn dense_dataset(n: usize, k: u32, dim: usize, seed: u64) -> Dataset {
    let mut rng = rng::seeded(seed);
    let examples = (0..n)
        .map(|_| Example {
            features: FeatureVector::Dense(
                (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect(),
            ),
            label: rng.random_range(0..k),
        })
        .collect();
    Dataset::new(
        examples,
        LabelSpace::new(k).unwrap(),
        FeatureSpec::Dense { dim: dim as u32 },
        format!("dense{seed}"),
        seed,
    )
    .unwrap()
}

fn sparse_dataset(n: usize, k: u32, vocab: u32, seed: u64) -> Dataset {
    let mut rng = rng::seeded(seed);
    let examples = (0..n)
        .map(|_| {
            let tokens = rng.random_range(1..=6);
            let mut counts = std::collections::BTreeMap::new();
            for _ in 0..tokens {
                *counts.entry(rng.random_range(0..vocab)).or_insert(0u32) += 1;
            }
            Example {
                features: FeatureVector::Sparse(counts.into_iter().collect()),
                label: rng.random_range(0..k),
            }
        })
        .collect();
    Dataset::new(
        examples,
        LabelSpace::new(k).unwrap(),
        FeatureSpec::Sparse { vocab },
        format!("sparse{seed}"),
        seed,
    )
    .unwrap()
}

fn quick_hyper(seed: u64) -> HyperParams {
    HyperParams {
        iterations: 4,
        batch_size: 4,
        hidden_width: 4,
        init_seed: seed,
        ..HyperParams::default()
    }
}

fn all_kinds() -> [LearnerKind; 5] {
    [
        LearnerKind::Uniform,
        LearnerKind::Prior,
        LearnerKind::NaiveBayes,
        LearnerKind::LogisticRegression,
        LearnerKind::Mlp,
    ]
}

fn dataset_for(kind: LearnerKind, n: usize, k: u32, seed: u64) -> Dataset {
    if kind == LearnerKind::NaiveBayes {
        sparse_dataset(n, k, 12, seed)
    } else {
        dense_dataset(n, k, 3, seed)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every prediction is a floored distribution: sums to one, no entry
    /// below the probability floor, none above one.
    #[test]
    fn predictions_are_floored_distributions(
        kind_ix in 0usize..5,
        n in 4usize..24,
        k in 2u32..6,
        seed in any::<u64>(),
    ) {
        let kind = all_kinds()[kind_ix];
        let data = dataset_for(kind, n, k, seed);
        let mut state = LearnerState::init(kind, data.label_space(), data.feature_spec(), quick_hyper(seed))
            .unwrap()
            .fit(&data, data.task_id(), FitRegime::WarmStart)
            .unwrap();
        if !state.has_head(data.task_id()) {
            state = state.add_head(data.task_id(), data.label_space()).unwrap();
        }
        for ex in data.examples() {
            let dist = state.predict(&ex.features, data.task_id()).unwrap();
            let sum: f64 = dist.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9, "sum {sum}");
            for &p in dist.probs() {
                prop_assert!((EPSILON_FLOOR - 1e-15..=1.0 + 1e-12).contains(&p), "p {p}");
            }
        }
    }

    /// The class-prior learner is exactly the Laplace estimator:
    /// p(y) = (count(y)+α) / (n+αK) after any label sequence.
    #[test]
    fn prior_learner_matches_laplace_closed_form(
        labels in prop::collection::vec(0u32..4, 1..40),
        alpha in prop::sample::select(vec![0.5f64, 1.0, 2.0]),
    ) {
        let k = 4u32;
        let examples: Vec<Example> = labels
            .iter()
            .map(|&label| Example { features: FeatureVector::Dense(vec![0.0]), label })
            .collect();
        let data = Dataset::new(
            examples,
            LabelSpace::new(k).unwrap(),
            FeatureSpec::Dense { dim: 1 },
            String::from("labels"),
            0,
        )
        .unwrap();
        let hyper = HyperParams { smoothing_alpha: alpha, ..HyperParams::default() };
        let state = LearnerState::init(LearnerKind::Prior, data.label_space(), data.feature_spec(), hyper)
            .unwrap()
            .fit(&data, data.task_id(), FitRegime::WarmStart)
            .unwrap();
        let dist = state.predict(&data.examples()[0].features, data.task_id()).unwrap();
        let n = labels.len() as f64;
        for y in 0..k {
            let count = labels.iter().filter(|&&l| l == y).count() as f64;
            let expected = (count + alpha) / (n + alpha * k as f64);
            prop_assert_eq!(dist.probs()[y as usize], expected);
        }
    }

    /// Quantization always lands on total mass 2^precision with every
    /// weight at least one, and re-quantizing its own probabilities is a
    /// fixed point.
    #[test]
    fn quantization_sums_and_is_idempotent(
        raw in prop::collection::vec(1e-9f64..1.0, 2..12),
        precision in 8u8..=30,
    ) {
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let q = quantize_probs(&probs, precision).unwrap();
        prop_assert_eq!(q.weights().iter().sum::<u64>(), 1u64 << precision);
        prop_assert!(q.weights().iter().all(|&w| w >= 1));
        let again = quantize_probs(&q.dequantize(), precision).unwrap();
        prop_assert_eq!(again.weights(), q.weights());
    }

    /// Extreme skew still leaves every class codable.
    #[test]
    fn quantization_floors_survive_skew(k in 2usize..10, precision in 8u8..=30) {
        let mut probs = vec![EPSILON_FLOOR / 2.0; k];
        probs[0] = 1.0 - EPSILON_FLOOR / 2.0 * (k as f64 - 1.0);
        let q = quantize_probs(&probs, precision).unwrap();
        prop_assert!(q.weights().iter().all(|&w| w >= 1));
        prop_assert_eq!(q.weights().iter().sum::<u64>(), 1u64 << precision);
    }

    /// Encode → decode recovers the labels bit-exactly, and the stream is
    /// reproducible.
    #[test]
    fn coder_round_trips(
        n in 1usize..14,
        k in 2u32..6,
        seed in any::<u64>(),
        block in 1usize..8,
        precision in 8u8..=30,
        prior in any::<bool>(),
    ) {
        let kind = if prior { LearnerKind::Prior } else { LearnerKind::Uniform };
        let data = dense_dataset(n, k, 2, seed);
        let plan = BlockPlan::uniform_blocks(n, block.min(n)).unwrap();
        let protocol = EvaluationProtocol::single(
            EvalMode::Blockwise,
            FitRegime::WarmStart,
            HyperParams::default(),
        );
        let out = encode_labels(kind, &protocol, &data, &plan, precision).unwrap();
        let features: Vec<FeatureVector> =
            data.examples().iter().map(|e| e.features.clone()).collect();
        let decoded =
            decode_labels(kind, &protocol, &features, data.feature_spec(), &plan, &out.stream)
                .unwrap();
        let truth: Vec<u32> = data.examples().iter().map(|e| e.label).collect();
        prop_assert_eq!(decoded, truth);
        let again = encode_labels(kind, &protocol, &data, &plan, precision).unwrap();
        prop_assert_eq!(out.stream.to_bytes(), again.stream.to_bytes());
    }

    /// Per-block and total codelengths are never negative, and the uniform
    /// learner prices exactly N·log₂K under any plan and regime.
    #[test]
    fn codelengths_are_nonnegative_and_uniform_is_exact(
        n in 1usize..60,
        k in 2u32..8,
        seed in any::<u64>(),
        block in 1usize..12,
        warm in any::<bool>(),
    ) {
        let regime = if warm { FitRegime::WarmStart } else { FitRegime::FromScratch };
        let data = dense_dataset(n, k, 2, seed);
        let plan = BlockPlan::uniform_blocks(n, block.min(n)).unwrap();

        let prior = blockwise_codelength(
            LearnerKind::Prior,
            &EvaluationProtocol::single(EvalMode::Blockwise, regime, HyperParams::default()),
            &data,
            &plan,
        )
        .unwrap();
        prop_assert!(prior.total_bits >= 0.0);
        prop_assert!(prior.blocks.iter().all(|b| b.bits >= 0.0));

        let uniform = exact_online_codelength(
            LearnerKind::Uniform,
            &HyperParams::default(),
            &data,
            regime,
        )
        .unwrap();
        let ideal = n as f64 * f64::from(k).log2();
        prop_assert!((uniform.total_bits - ideal).abs() <= 1e-9);
    }

    /// The carryover rule: no completed block yet → the default wins;
    /// otherwise lowest bits on the previous block, ties to the first
    /// listed candidate.
    #[test]
    fn carryover_picks_first_minimum(
        bits in prop::collection::vec(0.0f64..100.0, 1..8),
        tie in any::<bool>(),
    ) {
        let mut bits = bits;
        if tie && bits.len() >= 2 {
            let last = bits.len() - 1;
            bits[last] = bits[0];
        }
        let candidates: Vec<HyperParams> = (0..bits.len())
            .map(|i| HyperParams { learning_rate: 0.1 + i as f64 * 0.01, ..HyperParams::default() })
            .collect();
        let protocol = EvaluationProtocol {
            mode: EvalMode::Blockwise,
            regime: FitRegime::WarmStart,
            default_hyper: candidates[0].clone(),
            candidate_hypers: candidates.clone(),
            first_block_code: preqeval_core::FirstBlockCode::Uniform,
        };
        prop_assert_eq!(hyperparameter_carryover(&protocol, None).unwrap(), &candidates[0]);
        let chosen = hyperparameter_carryover(&protocol, Some(&bits)).unwrap();
        let mut best = 0usize;
        for (i, &b) in bits.iter().enumerate() {
            if b < bits[best] {
                best = i;
            }
        }
        prop_assert_eq!(chosen, &candidates[best]);
    }

    /// Switching never beats the bound: best single model plus identity
    /// bits for every block after the first.
    #[test]
    fn switching_stays_under_bound(
        sizes in prop::collection::vec(1usize..20, 1..8),
        models in 2usize..6,
        seed in any::<u64>(),
    ) {
        let mut rng = rng::seeded(seed);
        let protocol = EvaluationProtocol::single(
            EvalMode::Blockwise,
            FitRegime::WarmStart,
            HyperParams::default(),
        );
        let reports: Vec<CodelengthReport> = (0..models)
            .map(|m| {
                let mut end = 0usize;
                let mut total = 0.0;
                let blocks: Vec<BlockRecord> = sizes
                    .iter()
                    .enumerate()
                    .map(|(i, &sz)| {
                        end += sz;
                        let bits = rng.random_range(0.0..40.0);
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
                    learner: format!("m{m}"),
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
        let best = reports.iter().map(|r| r.total_bits).fold(f64::INFINITY, f64::min);
        let bound = best + (sizes.len() as f64 - 1.0) * (models as f64).log2();
        prop_assert!(switched.total_bits <= bound + 1e-9);
    }

    /// Task generation is a pure function of the spec, and class marginals
    /// stay within sampling error of uniform.
    #[test]
    fn generation_is_deterministic_with_sane_marginals(
        seed in any::<u64>(),
        k in 2usize..4,
        n in 300usize..700,
    ) {
        let spec = TaskSpec {
            generator: GeneratorParams::GaussianBlobs {
                means: (0..k).map(|i| vec![i as f64 * 3.0, 0.0]).collect(),
                sigma: 1.0,
                rotation: 0.0,
            },
            n,
            seed,
            task_id: String::from("blob"),
            label_permutation: None,
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        prop_assert_eq!(&a, &b);
        let tolerance = 2.0 / (n as f64).sqrt();
        for y in 0..k as u32 {
            let freq = a.examples().iter().filter(|e| e.label == y).count() as f64 / n as f64;
            prop_assert!(
                (freq - 1.0 / k as f64).abs() <= tolerance,
                "class {y} frequency {freq}"
            );
        }
    }

    /// Two rotations commute exactly: the shifted spec only accumulates an
    /// angle, so application order cannot matter.
    #[test]
    fn rotations_commute(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let spec = TaskSpec {
            generator: GeneratorParams::GaussianBlobs {
                means: vec![vec![-2.0, 0.0], vec![2.0, 0.0]],
                sigma: 1.0,
                rotation: 0.0,
            },
            n: 40,
            seed,
            task_id: String::from("blob"),
            label_permutation: None,
        };
        let ab = apply_shift(
            &apply_shift(&spec, &Shift::Rotate { angle: a }).unwrap(),
            &Shift::Rotate { angle: b },
        )
        .unwrap();
        let ba = apply_shift(
            &apply_shift(&spec, &Shift::Rotate { angle: b }).unwrap(),
            &Shift::Rotate { angle: a },
        )
        .unwrap();
        prop_assert_eq!(generate(&ab).unwrap(), generate(&ba).unwrap());
    }

    /// Fitting one head leaves other heads' predictions bitwise unchanged
    /// for every learner without a shared body.
    #[test]
    fn head_isolation_is_exact_without_shared_body(
        kind_ix in 0usize..3,
        seed in any::<u64>(),
    ) {
        let kind = [LearnerKind::Prior, LearnerKind::NaiveBayes, LearnerKind::LogisticRegression]
            [kind_ix];
        let data_a = dataset_for(kind, 16, 3, seed);
        let data_b = dataset_for(kind, 10, 3, seed.wrapping_add(1));
        let state = LearnerState::init(kind, data_a.label_space(), data_a.feature_spec(), quick_hyper(seed))
            .unwrap()
            .add_head("other", data_b.label_space())
            .unwrap();
        let before: Vec<Vec<f64>> = data_b
            .examples()
            .iter()
            .map(|e| state.predict(&e.features, "other").unwrap().probs().to_vec())
            .collect();
        let trained = state.fit(&data_a, data_a.task_id(), FitRegime::WarmStart).unwrap();
        let after: Vec<Vec<f64>> = data_b
            .examples()
            .iter()
            .map(|e| trained.predict(&e.features, "other").unwrap().probs().to_vec())
            .collect();
        prop_assert_eq!(before, after);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// The hyperparameters selected for each block depend only on earlier
    /// blocks: rewriting a block's labels never changes the selection made
    /// at that block or before it.
    #[test]
    fn hyper_selection_is_causal(seed in any::<u64>(), victim in 1usize..=4) {
        let n = 48usize;
        let data = dense_dataset(n, 3, 2, seed);
        let plan = BlockPlan::uniform_blocks(n, 12).unwrap();
        let candidates = vec![
            HyperParams { learning_rate: 0.02, iterations: 4, batch_size: 4, ..HyperParams::default() },
            HyperParams { learning_rate: 0.4, iterations: 4, batch_size: 4, ..HyperParams::default() },
        ];
        let protocol = EvaluationProtocol {
            mode: EvalMode::Blockwise,
            regime: FitRegime::WarmStart,
            default_hyper: candidates[0].clone(),
            candidate_hypers: candidates,
            first_block_code: preqeval_core::FirstBlockCode::Uniform,
        };
        let full = blockwise_codelength(LearnerKind::LogisticRegression, &protocol, &data, &plan)
            .unwrap();

        // Rewrite every label inside the (1-based) victim block.
        let range = plan.block_range(victim);
        let mut rng = rng::seeded(seed.wrapping_add(99));
        let examples: Vec<Example> = data
            .examples()
            .iter()
            .enumerate()
            .map(|(i, e)| Example {
                features: e.features.clone(),
                label: if range.contains(&i) { rng.random_range(0..3) } else { e.label },
            })
            .collect();
        let mutated = Dataset::new(
            examples,
            data.label_space(),
            data.feature_spec(),
            String::from(data.task_id()),
            data.ordering_seed(),
        )
        .unwrap();
        let altered =
            blockwise_codelength(LearnerKind::LogisticRegression, &protocol, &mutated, &plan)
                .unwrap();

        // Block v's contents can only influence selections from block v+1
        // on; everything through block v must be untouched.
        for i in 0..victim {
            prop_assert_eq!(
                full.blocks[i].hyper_index,
                altered.blocks[i].hyper_index,
                "selection for block {} moved when only block {} changed",
                i + 1,
                victim
            );
        }
    }
}

/// The l2 term must actually reach the update rule.
#[test]
fn l2_regularizer_changes_training() {
    let data = dense_dataset(60, 3, 3, 7);
    let base = HyperParams { iterations: 30, ..HyperParams::default() };
    let plain = LearnerState::init(
        LearnerKind::LogisticRegression,
        data.label_space(),
        data.feature_spec(),
        base.clone(),
    )
    .unwrap()
    .fit(&data, data.task_id(), FitRegime::WarmStart)
    .unwrap();
    let ridged = LearnerState::init(
        LearnerKind::LogisticRegression,
        data.label_space(),
        data.feature_spec(),
        HyperParams { l2: 0.1, ..base },
    )
    .unwrap()
    .fit(&data, data.task_id(), FitRegime::WarmStart)
    .unwrap();
    assert_ne!(plain.to_bytes(), ridged.to_bytes());
}
