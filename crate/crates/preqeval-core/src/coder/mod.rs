//! Lossless label coding that realizes the blockwise codelength as an
//! actual bitstream. The encoder runs the blockwise protocol with all
//! labels in hand and arithmetic-codes each label under the distribution
//! the protocol predicts for it; the decoder, holding only the features,
//! replays the identical protocol, decoding each block and then training
//! on it exactly as the encoder did. Because both sides train on the same
//! bytes in the same order, their models stay bit-identical and the stream
//! length realizes the reported codelength up to quantization and a
//! two-bit termination.

mod arith;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::data::{Dataset, Example, FeatureSpec, FeatureVector, LabelSpace};
use crate::error::{Error, Result};
use crate::learner::{HyperParams, LearnerKind, PredictiveDistribution};
use crate::prequential::engine::ProtocolRun;
use crate::prequential::{
    run_blockwise, BlockPlan, CodelengthReport, EvalMode, EvaluationProtocol, FirstBlockBits,
    FirstBlockCode,
};
use crate::stats::KahanSum;

pub const MIN_PRECISION: u8 = 8;
pub const MAX_PRECISION: u8 = 30;
pub const DEFAULT_PRECISION: u8 = 16;

pub const STREAM_MAGIC: [u8; 4] = *b"PQAC";
pub const STREAM_VERSION: u16 = 1;

fn check_precision(precision: u8) -> Result<()> {
    if (MIN_PRECISION..=MAX_PRECISION).contains(&precision) {
        Ok(())
    } else {
        Err(Error::InvalidPrecision(precision))
    }
}

/// Integer weights summing to exactly 2^precision, every symbol ≥ 1. This
/// is the alphabet the arithmetic coder actually codes with, so encoder
/// and decoder must derive identical weights from identical probabilities
/// — `quantize` is deterministic down to the bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedDistribution {
    weights: Vec<u64>,
    precision: u8,
}

impl QuantizedDistribution {
    pub fn from_weights(weights: Vec<u64>, precision: u8) -> Result<Self> {
        check_precision(precision)?;
        let total = 1u64 << precision;
        if weights.len() < 2 {
            return Err(Error::LabelSpaceTooSmall { num_classes: weights.len() as u32 });
        }
        if weights.contains(&0) {
            return Err(Error::MalformedStream(String::from(
                "every symbol weight must be positive",
            )));
        }
        let sum: u64 = weights.iter().sum();
        if sum != total {
            return Err(Error::MalformedStream(format!(
                "weights sum to {sum}, expected 2^{precision}"
            )));
        }
        Ok(QuantizedDistribution { weights, precision })
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn precision(&self) -> u8 {
        self.precision
    }

    fn total(&self) -> u64 {
        1u64 << self.precision
    }

    /// Cumulative weight range [lo, hi) of `symbol`.
    fn cumulative_range(&self, symbol: u32) -> (u64, u64) {
        let mut lo = 0u64;
        for &w in &self.weights[..symbol as usize] {
            lo += w;
        }
        (lo, lo + self.weights[symbol as usize])
    }

    /// The exact probabilities the coder charges for: w / 2^precision.
    /// Quantizing these again reproduces the same weights.
    pub fn dequantize(&self) -> Vec<f64> {
        let scale = self.total() as f64;
        self.weights.iter().map(|&w| w as f64 / scale).collect()
    }

    /// Ideal code cost of `symbol` in bits: precision − log₂(weight).
    pub fn bits_for(&self, symbol: u32) -> f64 {
        f64::from(self.precision) - libm::log2(self.weights[symbol as usize] as f64)
    }
}

/// Largest-remainder rounding of p·2^precision. Deficit goes to the
/// largest remainders (ties to the lowest index); zero weights are lifted
/// to one at the expense of the largest weight (ties to the lowest index),
/// so every symbol stays decodable.
pub fn quantize_probs(probs: &[f64], precision: u8) -> Result<QuantizedDistribution> {
    check_precision(precision)?;
    let total = 1u64 << precision;
    if probs.len() < 2 {
        return Err(Error::LabelSpaceTooSmall { num_classes: probs.len() as u32 });
    }
    if probs.len() as u64 > total {
        return Err(Error::InvalidPrecision(precision));
    }
    let scale = total as f64;
    let mut weights = Vec::with_capacity(probs.len());
    let mut order: Vec<(usize, f64)> = Vec::with_capacity(probs.len());
    for (i, &p) in probs.iter().enumerate() {
        let target = p * scale;
        let floor = libm::floor(target);
        weights.push(floor as u64);
        order.push((i, target - floor));
    }

    let assigned: u64 = weights.iter().sum();
    if assigned < total {
        let mut deficit = total - assigned;
        order.sort_by(|a, b| {
            b.1.partial_cmp(&a.1).expect("remainders are finite").then(a.0.cmp(&b.0))
        });
        for &(i, _) in &order {
            if deficit == 0 {
                break;
            }
            weights[i] += 1;
            deficit -= 1;
        }
    } else {
        // Floating-point dust can push the floors one past the total.
        let mut surplus = assigned - total;
        while surplus > 0 {
            let largest = largest_index(&weights);
            weights[largest] -= 1;
            surplus -= 1;
        }
    }

    while let Some(zero) = weights.iter().position(|&w| w == 0) {
        let largest = largest_index(&weights);
        weights[zero] = 1;
        weights[largest] -= 1;
    }

    QuantizedDistribution::from_weights(weights, precision)
}

/// Quantize a learner's predictive distribution for coding.
pub fn quantize(dist: &PredictiveDistribution, precision: u8) -> Result<QuantizedDistribution> {
    quantize_probs(dist.probs(), precision)
}

fn largest_index(weights: &[u64]) -> usize {
    let mut best = 0usize;
    for (i, &w) in weights.iter().enumerate().skip(1) {
        if w > weights[best] {
            best = i;
        }
    }
    best
}

/// A self-describing coded label sequence. The header pins down everything
/// the decoder must agree on before it can trust its replayed protocol:
/// learner and protocol digests, label-space size, example count, coding
/// precision, and the ordering seed that drives training-time shuffles.
/// The checksum covers the decoded label sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitstream {
    pub num_classes: u32,
    pub num_examples: u64,
    pub precision: u8,
    pub learner_digest: [u8; 32],
    pub protocol_digest: [u8; 32],
    pub ordering_seed: u64,
    pub payload_bits: u64,
    payload: Vec<u8>,
    pub checksum: u32,
}

impl Bitstream {
    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(101 + self.payload.len());
        out.extend_from_slice(&STREAM_MAGIC);
        out.extend_from_slice(&STREAM_VERSION.to_le_bytes());
        out.extend_from_slice(&self.num_classes.to_le_bytes());
        out.extend_from_slice(&self.num_examples.to_le_bytes());
        out.push(self.precision);
        out.extend_from_slice(&self.learner_digest);
        out.extend_from_slice(&self.protocol_digest);
        out.extend_from_slice(&self.ordering_seed.to_le_bytes());
        out.extend_from_slice(&self.payload_bits.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(&self.checksum.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4)?;
        if magic != STREAM_MAGIC {
            return Err(Error::MalformedStream(String::from("bad magic")));
        }
        let version = u16::from_le_bytes(r.take(2)?.try_into().expect("len 2"));
        if version != STREAM_VERSION {
            return Err(Error::MalformedStream(format!("unsupported version {version}")));
        }
        let num_classes = u32::from_le_bytes(r.take(4)?.try_into().expect("len 4"));
        let num_examples = u64::from_le_bytes(r.take(8)?.try_into().expect("len 8"));
        let precision = r.take(1)?[0];
        check_precision(precision)
            .map_err(|_| Error::MalformedStream(format!("precision {precision} out of range")))?;
        let learner_digest: [u8; 32] = r.take(32)?.try_into().expect("len 32");
        let protocol_digest: [u8; 32] = r.take(32)?.try_into().expect("len 32");
        let ordering_seed = u64::from_le_bytes(r.take(8)?.try_into().expect("len 8"));
        let payload_bits = u64::from_le_bytes(r.take(8)?.try_into().expect("len 8"));
        let payload_len = usize::try_from(payload_bits.div_ceil(8))
            .map_err(|_| Error::MalformedStream(String::from("payload length overflows")))?;
        let payload = r.take(payload_len)?.to_vec();
        let checksum = u32::from_le_bytes(r.take(4)?.try_into().expect("len 4"));
        if r.pos != bytes.len() {
            return Err(Error::MalformedStream(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        if LabelSpace::new(num_classes).is_err() {
            return Err(Error::MalformedStream(format!(
                "label space of {num_classes} classes"
            )));
        }
        Ok(Bitstream {
            num_classes,
            num_examples,
            precision,
            learner_digest,
            protocol_digest,
            ordering_seed,
            payload_bits,
            payload,
            checksum,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::MalformedStream(format!(
                "need {} bytes at offset {}, have {}",
                n,
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
}

/// Digest of the learner specification the two sides must share: the kind,
/// the label-space size, and the feature layout.
pub fn learner_digest(kind: LearnerKind, num_classes: u32, feature_spec: FeatureSpec) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"PQLN\x01");
    h.update(kind.name().as_bytes());
    h.update(num_classes.to_le_bytes());
    match feature_spec {
        FeatureSpec::Dense { dim } => {
            h.update([0u8]);
            h.update(dim.to_le_bytes());
        }
        FeatureSpec::Sparse { vocab } => {
            h.update([1u8]);
            h.update(vocab.to_le_bytes());
        }
    }
    h.finalize().into()
}

fn update_hyper(h: &mut Sha256, hp: &HyperParams) {
    h.update(hp.learning_rate.to_bits().to_le_bytes());
    h.update(hp.l2.to_bits().to_le_bytes());
    h.update(hp.iterations.to_le_bytes());
    h.update(hp.batch_size.to_le_bytes());
    h.update(hp.smoothing_alpha.to_bits().to_le_bytes());
    h.update(hp.hidden_width.to_le_bytes());
    h.update(hp.init_seed.to_le_bytes());
}

/// Digest of the coding contract: evaluation protocol, block plan, and
/// coding precision.
pub fn protocol_digest(
    protocol: &EvaluationProtocol,
    plan: &BlockPlan,
    precision: u8,
) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"PQPR\x01");
    h.update([match protocol.mode {
        EvalMode::PerExample => 0u8,
        EvalMode::Blockwise => 1u8,
    }]);
    h.update([match protocol.regime {
        crate::learner::FitRegime::WarmStart => 0u8,
        crate::learner::FitRegime::FromScratch => 1u8,
    }]);
    h.update([match protocol.first_block_code {
        FirstBlockCode::Uniform => 0u8,
    }]);
    update_hyper(&mut h, &protocol.default_hyper);
    h.update((protocol.candidate_hypers.len() as u64).to_le_bytes());
    for cand in &protocol.candidate_hypers {
        update_hyper(&mut h, cand);
    }
    h.update((plan.boundaries().len() as u64).to_le_bytes());
    for &b in plan.boundaries() {
        h.update((b as u64).to_le_bytes());
    }
    h.update([precision]);
    h.finalize().into()
}

fn label_checksum(labels: impl IntoIterator<Item = u32>) -> u32 {
    let mut crc = crc32fast::Hasher::new();
    for label in labels {
        crc.update(&label.to_le_bytes());
    }
    crc.finalize()
}

/// What the encoder measured alongside the stream it produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoderStats {
    /// Actual payload length in bits (termination included).
    pub payload_bits: u64,
    /// Σ per-symbol ideal bits under the quantized coding distributions.
    pub ideal_quantized_bits: f64,
    /// The blockwise codelength itself, before quantization.
    pub unquantized_bits: f64,
}

pub struct EncodeOutput {
    pub stream: Bitstream,
    pub stats: CoderStats,
    /// The blockwise report of the run that produced the stream.
    pub report: CodelengthReport,
}

/// Code the labels of `data` under the blockwise protocol: block 1 with
/// the quantized uniform distribution, later blocks with the quantized
/// predictions of the models the protocol selects. An empty dataset yields
/// a header-only stream.
pub fn encode_labels(
    kind: LearnerKind,
    protocol: &EvaluationProtocol,
    data: &Dataset,
    plan: &BlockPlan,
    precision: u8,
) -> Result<EncodeOutput> {
    check_precision(precision)?;
    protocol.validate()?;
    let num_classes = data.label_space().num_classes();
    let header = |payload_bits: u64, payload: Vec<u8>, checksum: u32| Bitstream {
        num_classes,
        num_examples: data.len() as u64,
        precision,
        learner_digest: learner_digest(kind, num_classes, data.feature_spec()),
        protocol_digest: protocol_digest(protocol, plan, precision),
        ordering_seed: data.ordering_seed(),
        payload_bits,
        payload,
        checksum,
    };

    if data.is_empty() {
        let report = CodelengthReport {
            learner: kind.name().to_string(),
            dataset_id: data.task_id().to_string(),
            dataset_digest: crate::data::digest_hex(&data.content_digest()),
            examples: 0,
            num_classes,
            protocol: protocol.clone(),
            blocks: Vec::new(),
            total_bits: 0.0,
        };
        return Ok(EncodeOutput {
            stream: header(0, Vec::new(), label_checksum([])),
            stats: CoderStats {
                payload_bits: 0,
                ideal_quantized_bits: 0.0,
                unquantized_bits: 0.0,
            },
            report,
        });
    }

    let mut encoder = arith::Encoder::new();
    let mut ideal = KahanSum::new();
    let mut quantize_error: Option<Error> = None;
    let mut sink = |dist: &PredictiveDistribution, label: u32| {
        if quantize_error.is_some() {
            return;
        }
        match quantize(dist, precision) {
            Ok(q) => {
                ideal.add(q.bits_for(label));
                encoder.encode(&q, label);
            }
            Err(e) => quantize_error = Some(e),
        }
    };
    let report = run_blockwise(
        None,
        kind,
        protocol,
        data,
        plan,
        data.task_id(),
        FirstBlockBits::Uniform,
        Some(&mut sink),
    )?;
    if let Some(e) = quantize_error {
        return Err(e);
    }

    let (payload, payload_bits) = encoder.finish();
    let checksum = label_checksum(data.examples().iter().map(|ex| ex.label));
    Ok(EncodeOutput {
        stream: header(payload_bits, payload, checksum),
        stats: CoderStats {
            payload_bits,
            ideal_quantized_bits: ideal.value(),
            unquantized_bits: report.total_bits,
        },
        report,
    })
}

/// Recover the label sequence from a stream given only the features, by
/// replaying the encoder's protocol: decode a block under the current
/// models, train on the decoded labels, repeat. Digests are checked before
/// any symbol is decoded; the label checksum is checked after all are.
pub fn decode_labels(
    kind: LearnerKind,
    protocol: &EvaluationProtocol,
    features: &[FeatureVector],
    feature_spec: FeatureSpec,
    plan: &BlockPlan,
    stream: &Bitstream,
) -> Result<Vec<u32>> {
    protocol.validate()?;
    check_precision(stream.precision)?;
    let label_space = LabelSpace::new(stream.num_classes)?;
    if learner_digest(kind, stream.num_classes, feature_spec) != stream.learner_digest {
        return Err(Error::DigestMismatch(String::from(
            "learner specification does not match the stream header",
        )));
    }
    if protocol_digest(protocol, plan, stream.precision) != stream.protocol_digest {
        return Err(Error::DigestMismatch(String::from(
            "protocol or block plan does not match the stream header",
        )));
    }
    if stream.num_examples != features.len() as u64 {
        return Err(Error::MalformedStream(format!(
            "stream codes {} labels but {} feature vectors were supplied",
            stream.num_examples,
            features.len()
        )));
    }
    for f in features {
        f.conforms(&feature_spec)?;
    }

    if features.is_empty() {
        if stream.payload_bits != 0 {
            return Err(Error::MalformedStream(String::from(
                "empty label sequence with a non-empty payload",
            )));
        }
        if stream.checksum != label_checksum([]) {
            return Err(Error::CorruptPayload);
        }
        return Ok(Vec::new());
    }
    if plan.total_examples() != features.len() {
        return Err(Error::InvalidPlan(format!(
            "plan covers {} examples but {} feature vectors were supplied",
            plan.total_examples(),
            features.len()
        )));
    }

    let mut run = ProtocolRun::new(
        None,
        kind,
        label_space,
        feature_spec,
        stream.ordering_seed,
        protocol,
        "decoded",
    )?;
    let uniform = PredictiveDistribution::uniform(stream.num_classes);
    let mut decoder = arith::Decoder::new(arith::BitReader::new(&stream.payload, stream.payload_bits));
    let mut labels: Vec<u32> = Vec::with_capacity(features.len());
    let mut examples: Vec<Example> = Vec::with_capacity(features.len());
    for i in 1..=plan.num_blocks() {
        let range = plan.block_range(i);
        let model = run.coding_choice().map(|c| run.model(c));
        for pos in range.clone() {
            let dist = match model {
                Some(m) => m.predict(&features[pos], run.head())?,
                None => uniform.clone(),
            };
            let quantized = quantize(&dist, stream.precision)?;
            let label = decoder.decode(&quantized).ok_or(Error::CorruptPayload)?;
            labels.push(label);
            examples.push(Example { features: features[pos].clone(), label });
        }
        run.complete_block(&examples, range)?;
    }

    if label_checksum(labels.iter().copied()) != stream.checksum {
        return Err(Error::CorruptPayload);
    }
    Ok(labels)
}

/// Measured stream length against the ideal quantized codelength.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodingComparison {
    pub measured_bits: f64,
    pub theoretical_bits: f64,
    /// measured − theoretical; the coder's whole overhead, termination
    /// included.
    pub gap_bits: f64,
}

/// Line up a stream, the encoder's measurements, and the blockwise report
/// of the run that produced them. Errors when the three do not describe
/// the same run.
pub fn measured_vs_theoretical(
    stream: &Bitstream,
    stats: &CoderStats,
    report: &CodelengthReport,
) -> Result<CodingComparison> {
    if stats.payload_bits != stream.payload_bits {
        return Err(Error::DigestMismatch(String::from(
            "stats were measured on a different stream",
        )));
    }
    if LearnerKind::from_name(&report.learner).is_none() {
        return Err(Error::DigestMismatch(format!(
            "report learner {:?} is not a codable single learner",
            report.learner
        )));
    }
    if report.examples as u64 != stream.num_examples
        || report.num_classes != stream.num_classes
    {
        return Err(Error::DigestMismatch(String::from(
            "report and stream describe different data",
        )));
    }
    if !report.blocks.is_empty() {
        let plan = report.plan()?;
        if protocol_digest(&report.protocol, &plan, stream.precision) != stream.protocol_digest {
            return Err(Error::DigestMismatch(String::from(
                "report protocol does not match the stream header",
            )));
        }
    }
    let measured_bits = stream.payload_bits as f64;
    let theoretical_bits = stats.ideal_quantized_bits;
    Ok(CodingComparison {
        measured_bits,
        theoretical_bits,
        gap_bits: measured_bits - theoretical_bits,
    })
}
