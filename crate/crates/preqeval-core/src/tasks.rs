//! Deterministic synthetic task generators. A `TaskSpec` pins down every
//! byte of the dataset it generates — generator parameters, example count,
//! and seed — so experiments are reproducible artifacts. A `TaskFamily`
//! derives shifted variants of one base task (rotated or translated inputs,
//! remapped vocabulary, permuted labels) that keep the underlying concept
//! while changing the distribution, which is what separates learning a task
//! from memorizing a dataset.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Example, FeatureSpec, FeatureVector, LabelSpace};
use crate::error::{Error, Result};
use crate::rng;

/// Salt for the dataset's transmission-order shuffle stream.
const SALT_SHUFFLE: u64 = 0x7368_7566_666c_6531;
/// Salt for the ordering seed handed to the dataset (drives training-time
/// batch shuffles downstream).
const SALT_ORDER: u64 = 0x6f72_6465_7269_6e67;

/// What the examples are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorParams {
    /// Dense features: class-conditional isotropic Gaussians, optionally
    /// rotated in the plane of the first two coordinates.
    GaussianBlobs {
        /// One mean vector per class; all the same dimension.
        means: Vec<Vec<f64>>,
        sigma: f64,
        #[serde(default)]
        rotation: f64,
    },
    /// Sparse features: documents of token counts drawn from per-topic word
    /// distributions (symmetric Dirichlet with the given concentration).
    BowTopics {
        num_topics: u32,
        vocab: u32,
        concentration: f64,
        /// Inclusive range of tokens per document.
        doc_len_range: (u32, u32),
        /// Cyclic vocabulary remap applied to emitted token indices.
        #[serde(default)]
        remap_offset: u32,
    },
}

/// A fully specified generation recipe: `generate` maps equal specs to
/// byte-identical datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub generator: GeneratorParams,
    pub n: usize,
    pub seed: u64,
    pub task_id: String,
    /// Applied to raw class indices after feature generation, so permuted
    /// variants keep their features byte-identical to the base.
    #[serde(default)]
    pub label_permutation: Option<Vec<u32>>,
}

impl TaskSpec {
    pub fn num_classes(&self) -> u32 {
        match &self.generator {
            GeneratorParams::GaussianBlobs { means, .. } => means.len() as u32,
            GeneratorParams::BowTopics { num_topics, .. } => *num_topics,
        }
    }

    pub fn feature_spec(&self) -> FeatureSpec {
        match &self.generator {
            GeneratorParams::GaussianBlobs { means, .. } => {
                FeatureSpec::Dense { dim: means.first().map_or(0, |m| m.len() as u32) }
            }
            GeneratorParams::BowTopics { vocab, .. } => FeatureSpec::Sparse { vocab: *vocab },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidTaskSpec(msg));
        if self.n == 0 {
            return fail(String::from("n must be at least 1"));
        }
        let k = self.num_classes();
        if k < 2 {
            return fail(format!("{k} classes; need at least 2"));
        }
        match &self.generator {
            GeneratorParams::GaussianBlobs { means, sigma, rotation } => {
                let d = means[0].len();
                if d == 0 {
                    return fail(String::from("means must have at least one dimension"));
                }
                if means.iter().any(|m| m.len() != d) {
                    return fail(String::from("means differ in dimension"));
                }
                if *sigma <= 0.0 || sigma.is_nan() {
                    return fail(format!("sigma {sigma} must be positive"));
                }
                if !rotation.is_finite() {
                    return fail(String::from("rotation must be finite"));
                }
                if *rotation != 0.0 && d < 2 {
                    return fail(String::from("rotation needs at least 2 dimensions"));
                }
            }
            GeneratorParams::BowTopics { num_topics, vocab, concentration, doc_len_range, remap_offset } => {
                if vocab < num_topics {
                    return fail(format!("vocabulary {vocab} smaller than {num_topics} topics"));
                }
                if *concentration <= 0.0 || concentration.is_nan() {
                    return fail(format!("concentration {concentration} must be positive"));
                }
                if doc_len_range.0 == 0 || doc_len_range.0 > doc_len_range.1 {
                    return fail(format!(
                        "document length range {}..={} is invalid",
                        doc_len_range.0, doc_len_range.1
                    ));
                }
                if remap_offset >= vocab {
                    return fail(format!("remap offset {remap_offset} outside vocabulary"));
                }
            }
        }
        if let Some(p) = &self.label_permutation {
            validate_permutation(p, k)?;
        }
        Ok(())
    }
}

fn validate_permutation(p: &[u32], k: u32) -> Result<()> {
    let mut seen = vec![false; k as usize];
    if p.len() != k as usize {
        return Err(Error::InvalidTaskSpec(format!(
            "permutation of length {} over {k} labels",
            p.len()
        )));
    }
    for &y in p {
        if y >= k || seen[y as usize] {
            return Err(Error::InvalidTaskSpec(format!(
                "not a permutation of 0..{k}"
            )));
        }
        seen[y as usize] = true;
    }
    Ok(())
}

/// A distribution shift that turns one task spec into a variant of the same
/// underlying task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shift {
    /// Rotate dense inputs in the plane of the first two coordinates.
    /// Angles compose additively, so a rotation followed by its negation
    /// restores the original spec exactly.
    Rotate { angle: f64 },
    /// Translate every class mean by the same amount in every coordinate:
    /// pure covariate shift, decision boundary shape preserved.
    ShiftMeans { delta: f64 },
    /// Cyclically relabel the vocabulary; token statistics are preserved
    /// under the bijection.
    RemapVocab { offset: u32 },
    /// Change what the classes are called without touching the features.
    PermuteLabels { permutation: Vec<u32> },
}

/// A base task plus the shifts that define its variants. `specs()` yields
/// the base first, then one spec per variant with `::v<i>` appended to the
/// task id; all share the base seed, so variant datasets differ from the
/// base only by the shift itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFamily {
    pub base: TaskSpec,
    pub variants: Vec<Shift>,
}

impl TaskFamily {
    pub fn specs(&self) -> Result<Vec<TaskSpec>> {
        let mut out = vec![self.base.clone()];
        for (i, shift) in self.variants.iter().enumerate() {
            let mut spec = apply_shift(&self.base, shift)?;
            spec.task_id = format!("{}::v{}", self.base.task_id, i + 1);
            out.push(spec);
        }
        Ok(out)
    }
}

/// Apply a shift to a spec, yielding the variant's spec. The task id is
/// left untouched: shifts describe distributions, not experiment naming.
pub fn apply_shift(spec: &TaskSpec, shift: &Shift) -> Result<TaskSpec> {
    spec.validate()?;
    let mut out = spec.clone();
    match (&mut out.generator, shift) {
        (GeneratorParams::GaussianBlobs { means, rotation, .. }, Shift::Rotate { angle }) => {
            if means[0].len() < 2 {
                return Err(Error::IncompatibleShift(String::from(
                    "rotation needs at least 2 dimensions",
                )));
            }
            *rotation += angle;
        }
        (GeneratorParams::GaussianBlobs { means, .. }, Shift::ShiftMeans { delta }) => {
            for mean in means {
                for coord in mean {
                    *coord += delta;
                }
            }
        }
        (GeneratorParams::BowTopics { vocab, remap_offset, .. }, Shift::RemapVocab { offset }) => {
            *remap_offset = (*remap_offset + offset % *vocab) % *vocab;
        }
        (_, Shift::PermuteLabels { permutation }) => {
            let k = spec.num_classes();
            validate_permutation(permutation, k)?;
            let current = out
                .label_permutation
                .unwrap_or_else(|| (0..k).collect());
            out.label_permutation =
                Some(current.iter().map(|&y| permutation[y as usize]).collect());
        }
        (GeneratorParams::BowTopics { .. }, Shift::Rotate { .. } | Shift::ShiftMeans { .. }) => {
            return Err(Error::IncompatibleShift(String::from(
                "geometric shifts need dense features",
            )));
        }
        (GeneratorParams::GaussianBlobs { .. }, Shift::RemapVocab { .. }) => {
            return Err(Error::IncompatibleShift(String::from(
                "vocabulary remap needs sparse features",
            )));
        }
    }
    out.validate()?;
    Ok(out)
}

/// Generate the dataset a spec describes. Class labels are stratified
/// (balanced to within one example) before a seed-determined shuffle fixes
/// the transmission order; features never depend on the label permutation,
/// so permuted variants share their features with the base byte for byte.
pub fn generate(spec: &TaskSpec) -> Result<Dataset> {
    spec.validate()?;
    let k = spec.num_classes();
    let mut master = rng::seeded(spec.seed);

    let mut examples: Vec<Example> = Vec::with_capacity(spec.n);
    match &spec.generator {
        GeneratorParams::GaussianBlobs { means, sigma, rotation } => {
            let d = means[0].len();
            for i in 0..spec.n {
                let raw = (i as u32) % k;
                let mean = &means[raw as usize];
                let mut x: Vec<f64> = (0..d)
                    .map(|j| {
                        let z: f64 = master.sample(StandardNormal);
                        mean[j] + sigma * z
                    })
                    .collect();
                if *rotation != 0.0 {
                    let (sin, cos) = (libm::sin(*rotation), libm::cos(*rotation));
                    let (a, b) = (x[0], x[1]);
                    x[0] = cos * a - sin * b;
                    x[1] = sin * a + cos * b;
                }
                examples.push(Example { features: FeatureVector::Dense(x), label: raw });
            }
        }
        GeneratorParams::BowTopics { num_topics, vocab, concentration, doc_len_range, remap_offset } => {
            // Per-topic word distributions: normalized Gamma draws, i.e. a
            // symmetric Dirichlet sample. Cumulative form for inversion.
            let gamma = Gamma::new(*concentration, 1.0)
                .map_err(|e| Error::InvalidTaskSpec(format!("concentration: {e}")))?;
            let mut topic_cdfs: Vec<Vec<f64>> = Vec::with_capacity(*num_topics as usize);
            for _ in 0..*num_topics {
                let weights: Vec<f64> = (0..*vocab).map(|_| gamma.sample(&mut master)).collect();
                let total: f64 = weights.iter().sum();
                let mut cdf = Vec::with_capacity(weights.len());
                let mut acc = 0.0;
                for w in weights {
                    acc += w / total;
                    cdf.push(acc);
                }
                topic_cdfs.push(cdf);
            }
            for i in 0..spec.n {
                let raw = (i as u32) % k;
                let cdf = &topic_cdfs[raw as usize];
                let len = master.random_range(doc_len_range.0..=doc_len_range.1);
                let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
                for _ in 0..len {
                    let u: f64 = master.random();
                    let token = cdf.partition_point(|&c| c <= u) as u32;
                    let token = token.min(*vocab - 1);
                    let token = (token + remap_offset) % vocab;
                    *counts.entry(token).or_insert(0) += 1;
                }
                examples.push(Example {
                    features: FeatureVector::Sparse(counts.into_iter().collect()),
                    label: raw,
                });
            }
        }
    }

    if let Some(p) = &spec.label_permutation {
        for ex in &mut examples {
            ex.label = p[ex.label as usize];
        }
    }

    // Transmission order: a label-independent Fisher-Yates shuffle.
    let mut shuffle = rng::seeded(rng::derive(spec.seed, SALT_SHUFFLE));
    for i in (1..examples.len()).rev() {
        let j = shuffle.random_range(0..=i);
        examples.swap(i, j);
    }

    Dataset::new(
        examples,
        LabelSpace::new(k)?,
        spec.feature_spec(),
        spec.task_id.clone(),
        rng::derive(spec.seed, SALT_ORDER),
    )
}

/// Deterministic stratified split. Every class contributes
/// round(eval_fraction · count) examples to the eval side, clamped so both
/// sides keep at least one example of each class; within each side the
/// original transmission order is preserved.
pub fn split(data: &Dataset, eval_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
        return Err(Error::InvalidSplit(format!(
            "eval fraction {eval_fraction} outside (0, 1)"
        )));
    }
    let k = data.label_space().num_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k as usize];
    for (i, ex) in data.examples().iter().enumerate() {
        by_class[ex.label as usize].push(i);
    }
    let mut to_eval = vec![false; data.len()];
    for (class, indices) in by_class.iter().enumerate() {
        if indices.len() < 2 {
            return Err(Error::InvalidSplit(format!(
                "class {class} has {} examples; need at least 2 to split",
                indices.len()
            )));
        }
        let want = libm::round(eval_fraction * indices.len() as f64) as usize;
        let want = want.clamp(1, indices.len() - 1);
        let mut order: Vec<usize> = indices.clone();
        let mut rng = rng::seeded(rng::derive(seed, class as u64));
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        for &idx in &order[..want] {
            to_eval[idx] = true;
        }
    }

    let side = |eval: bool| -> Result<Dataset> {
        let examples: Vec<Example> = data
            .examples()
            .iter()
            .zip(&to_eval)
            .filter(|(_, &e)| e == eval)
            .map(|(ex, _)| ex.clone())
            .collect();
        Dataset::new(
            examples,
            data.label_space(),
            data.feature_spec(),
            String::from(data.task_id()),
            data.ordering_seed(),
        )
    };
    Ok((side(false)?, side(true)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::{FitRegime, HyperParams, LearnerKind, LearnerState};

    fn blob_spec(n: usize, seed: u64) -> TaskSpec {
        TaskSpec {
            generator: GeneratorParams::GaussianBlobs {
                means: vec![vec![-2.0, 0.0], vec![2.0, 0.0]],
                sigma: 1.0,
                rotation: 0.0,
            },
            n,
            seed,
            task_id: String::from("blobs"),
            label_permutation: None,
        }
    }

    fn bow_spec(n: usize, seed: u64) -> TaskSpec {
        TaskSpec {
            generator: GeneratorParams::BowTopics {
                num_topics: 3,
                vocab: 12,
                concentration: 0.3,
                doc_len_range: (3, 8),
                remap_offset: 0,
            },
            n,
            seed,
            task_id: String::from("bow"),
            label_permutation: None,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        for spec in [blob_spec(40, 7), bow_spec(40, 7)] {
            let a = generate(&spec).unwrap();
            let b = generate(&spec).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.content_digest(), b.content_digest());
        }
    }

    #[test]
    fn labels_are_balanced_within_one_example() {
        for spec in [blob_spec(41, 3), bow_spec(41, 3)] {
            let data = generate(&spec).unwrap();
            let k = data.label_space().num_classes() as usize;
            let mut counts = vec![0usize; k];
            for ex in data.examples() {
                counts[ex.label as usize] += 1;
            }
            let (min, max) =
                (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            assert!(max - min <= 1, "{counts:?}");
            // Empirical marginals against the balanced target.
            let n = data.len() as f64;
            for &c in &counts {
                assert!((c as f64 / n - 1.0 / k as f64).abs() <= 2.0 / libm::sqrt(n));
            }
        }
    }

    #[test]
    fn one_dimensional_blobs_match_the_gaussian_oracle() {
        // Means ±2, σ=1: the optimal rule thresholds at 0 and scores
        // Φ(2) ≈ 0.9772 in expectation.
        let spec = TaskSpec {
            generator: GeneratorParams::GaussianBlobs {
                means: vec![vec![-2.0], vec![2.0]],
                sigma: 1.0,
                rotation: 0.0,
            },
            n: 10_000,
            seed: 11,
            task_id: String::from("oracle"),
            label_permutation: None,
        };
        let data = generate(&spec).unwrap();
        let hits = data
            .examples()
            .iter()
            .filter(|ex| {
                let x = match &ex.features {
                    FeatureVector::Dense(v) => v[0],
                    FeatureVector::Sparse(_) => unreachable!(),
                };
                u32::from(x > 0.0) == ex.label
            })
            .count();
        let accuracy = hits as f64 / data.len() as f64;
        assert!((accuracy - 0.9772).abs() < 0.02, "bayes rule scored {accuracy}");
    }

    #[test]
    fn trained_logistic_learner_approaches_the_oracle() {
        let spec = TaskSpec {
            generator: GeneratorParams::GaussianBlobs {
                means: vec![vec![-2.0], vec![2.0]],
                sigma: 1.0,
                rotation: 0.0,
            },
            n: 2_000,
            seed: 13,
            task_id: String::from("oracle-train"),
            label_permutation: None,
        };
        let data = generate(&spec).unwrap();
        let (train, eval) = split(&data, 0.25, 99).unwrap();
        let state = LearnerState::init(
            LearnerKind::LogisticRegression,
            data.label_space(),
            data.feature_spec(),
            HyperParams { iterations: 400, ..HyperParams::default() },
        )
        .unwrap()
        .add_head("oracle-train", data.label_space())
        .unwrap()
        .fit(&train, "oracle-train", FitRegime::WarmStart)
        .unwrap();
        let accuracy = state.accuracy(eval.examples(), "oracle-train").unwrap();
        assert!((accuracy - 0.9772).abs() < 0.03, "logistic scored {accuracy}");
    }

    #[test]
    fn permuted_labels_keep_features_byte_identical() {
        let base = generate(&blob_spec(30, 5)).unwrap();
        let spec =
            apply_shift(&blob_spec(30, 5), &Shift::PermuteLabels { permutation: vec![1, 0] })
                .unwrap();
        let permuted = generate(&spec).unwrap();
        for (a, b) in base.examples().iter().zip(permuted.examples()) {
            assert_eq!(a.features, b.features);
            assert_eq!(b.label, 1 - a.label);
        }
    }

    #[test]
    fn zero_rotation_is_the_identity() {
        let spec = blob_spec(25, 9);
        let rotated = apply_shift(&spec, &Shift::Rotate { angle: 0.0 }).unwrap();
        assert_eq!(spec, rotated);
        assert_eq!(generate(&spec).unwrap(), generate(&rotated).unwrap());
    }

    #[test]
    fn rotation_and_its_inverse_cancel() {
        let spec = blob_spec(25, 9);
        let angle = core::f64::consts::FRAC_PI_4;
        let there = apply_shift(&spec, &Shift::Rotate { angle }).unwrap();
        let back = apply_shift(&there, &Shift::Rotate { angle: -angle }).unwrap();
        assert_eq!(spec, back);
        assert_eq!(
            generate(&spec).unwrap().content_digest(),
            generate(&back).unwrap().content_digest()
        );
        // The rotated variant itself is a different dataset.
        assert_ne!(
            generate(&spec).unwrap().content_digest(),
            generate(&there).unwrap().content_digest()
        );
    }

    #[test]
    fn rotations_commute_on_exactly_representable_angles() {
        // Angles that are dyadic rationals add exactly, so the two orders
        // produce identical specs and identical bytes.
        let spec = blob_spec(20, 21);
        let (a, b) = (0.25, 0.5);
        let ab = apply_shift(&apply_shift(&spec, &Shift::Rotate { angle: a }).unwrap(), &Shift::Rotate { angle: b }).unwrap();
        let ba = apply_shift(&apply_shift(&spec, &Shift::Rotate { angle: b }).unwrap(), &Shift::Rotate { angle: a }).unwrap();
        assert_eq!(ab, ba);
        assert_eq!(generate(&ab).unwrap(), generate(&ba).unwrap());
    }

    #[test]
    fn incompatible_shifts_are_rejected() {
        let bow = bow_spec(10, 1);
        let blobs = blob_spec(10, 1);
        assert!(matches!(
            apply_shift(&bow, &Shift::Rotate { angle: 1.0 }),
            Err(Error::IncompatibleShift(_))
        ));
        assert!(matches!(
            apply_shift(&bow, &Shift::ShiftMeans { delta: 1.0 }),
            Err(Error::IncompatibleShift(_))
        ));
        assert!(matches!(
            apply_shift(&blobs, &Shift::RemapVocab { offset: 3 }),
            Err(Error::IncompatibleShift(_))
        ));
        // Rotation on one-dimensional blobs has no plane to act in.
        let thin = TaskSpec {
            generator: GeneratorParams::GaussianBlobs {
                means: vec![vec![-2.0], vec![2.0]],
                sigma: 1.0,
                rotation: 0.0,
            },
            n: 10,
            seed: 1,
            task_id: String::from("thin"),
            label_permutation: None,
        };
        assert!(matches!(
            apply_shift(&thin, &Shift::Rotate { angle: 1.0 }),
            Err(Error::IncompatibleShift(_))
        ));
    }

    #[test]
    fn vocabulary_remap_permutes_token_indices() {
        let base = generate(&bow_spec(30, 17)).unwrap();
        let spec = apply_shift(&bow_spec(30, 17), &Shift::RemapVocab { offset: 5 }).unwrap();
        let remapped = generate(&spec).unwrap();
        for (a, b) in base.examples().iter().zip(remapped.examples()) {
            assert_eq!(a.label, b.label);
            let (ta, tb) = match (&a.features, &b.features) {
                (FeatureVector::Sparse(ta), FeatureVector::Sparse(tb)) => (ta, tb),
                _ => unreachable!(),
            };
            let mut moved: Vec<(u32, u32)> =
                ta.iter().map(|&(t, c)| ((t + 5) % 12, c)).collect();
            moved.sort_unstable();
            assert_eq!(&moved, tb);
        }
    }

    #[test]
    fn family_yields_base_plus_named_variants() {
        let family = TaskFamily {
            base: blob_spec(12, 2),
            variants: vec![
                Shift::Rotate { angle: 0.5 },
                Shift::PermuteLabels { permutation: vec![1, 0] },
            ],
        };
        let specs = family.specs().unwrap();
        assert_eq!(specs.len(), 3);
        assert_eq!(specs[0], family.base);
        assert_eq!(specs[1].task_id, "blobs::v1");
        assert_eq!(specs[2].task_id, "blobs::v2");
        assert_eq!(specs[1].seed, family.base.seed);
    }

    #[test]
    fn split_is_stratified_deterministic_and_disjoint() {
        let data = generate(&blob_spec(100, 23)).unwrap();
        let (train, eval) = split(&data, 0.5, 77).unwrap();
        assert_eq!(train.len(), 50);
        assert_eq!(eval.len(), 50);
        for side in [&train, &eval] {
            let ones = side.examples().iter().filter(|e| e.label == 1).count();
            assert_eq!(ones, 25);
        }
        let (train2, eval2) = split(&data, 0.5, 77).unwrap();
        assert_eq!(train, train2);
        assert_eq!(eval, eval2);

        let train_hashes: alloc::collections::BTreeSet<[u8; 32]> =
            train.examples().iter().map(|e| e.content_hash()).collect();
        assert!(eval.examples().iter().all(|e| !train_hashes.contains(&e.content_hash())));

        // Different seed, different split.
        let (train3, _) = split(&data, 0.5, 78).unwrap();
        assert_ne!(train, train3);
    }

    #[test]
    fn split_rejects_bad_fractions_and_tiny_classes() {
        let data = generate(&blob_spec(100, 23)).unwrap();
        assert!(matches!(split(&data, 0.0, 1), Err(Error::InvalidSplit(_))));
        assert!(matches!(split(&data, 1.0, 1), Err(Error::InvalidSplit(_))));

        let lopsided = Dataset::new(
            vec![
                Example { features: FeatureVector::Dense(vec![0.0]), label: 0 },
                Example { features: FeatureVector::Dense(vec![1.0]), label: 0 },
                Example { features: FeatureVector::Dense(vec![2.0]), label: 1 },
            ],
            LabelSpace::new(2).unwrap(),
            FeatureSpec::Dense { dim: 1 },
            String::from("lopsided"),
            0,
        )
        .unwrap();
        assert!(matches!(split(&lopsided, 0.5, 1), Err(Error::InvalidSplit(_))));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = blob_spec(10, 1);
        spec.n = 0;
        assert!(matches!(generate(&spec), Err(Error::InvalidTaskSpec(_))));

        let mut spec = blob_spec(10, 1);
        spec.generator = GeneratorParams::GaussianBlobs {
            means: vec![vec![0.0, 0.0], vec![1.0]],
            sigma: 1.0,
            rotation: 0.0,
        };
        assert!(matches!(generate(&spec), Err(Error::InvalidTaskSpec(_))));

        let mut spec = bow_spec(10, 1);
        spec.generator = GeneratorParams::BowTopics {
            num_topics: 5,
            vocab: 3,
            concentration: 0.3,
            doc_len_range: (1, 4),
            remap_offset: 0,
        };
        assert!(matches!(generate(&spec), Err(Error::InvalidTaskSpec(_))));

        let mut spec = blob_spec(10, 1);
        spec.label_permutation = Some(vec![0, 0]);
        assert!(matches!(generate(&spec), Err(Error::InvalidTaskSpec(_))));
    }
}
