//! Canonical learner-state bytes: magic "PQLS", versioned header, then
//! parameters in a fixed field order, all little-endian. Heads are written
//! in sorted name order, so equal states always produce equal bytes.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::data::{FeatureSpec, LabelSpace};
use crate::error::{Error, Result};

use super::{Body, Head, HeadParams, HyperParams, LearnerKind, LearnerState};

const MAGIC: &[u8; 4] = b"PQLS";
const VERSION: u16 = 1;

fn kind_tag(kind: LearnerKind) -> u8 {
    match kind {
        LearnerKind::Uniform => 0,
        LearnerKind::Prior => 1,
        LearnerKind::NaiveBayes => 2,
        LearnerKind::LogisticRegression => 3,
        LearnerKind::Mlp => 4,
    }
}

fn kind_from_tag(tag: u8) -> Result<LearnerKind> {
    Ok(match tag {
        0 => LearnerKind::Uniform,
        1 => LearnerKind::Prior,
        2 => LearnerKind::NaiveBayes,
        3 => LearnerKind::LogisticRegression,
        4 => LearnerKind::Mlp,
        other => return Err(Error::MalformedState(alloc::format!("unknown kind tag {other}"))),
    })
}

pub(super) fn encode(state: &LearnerState) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(kind_tag(state.kind()));
    out.extend_from_slice(&state.label_space().num_classes().to_le_bytes());
    match state.feature_spec() {
        FeatureSpec::Dense { dim } => {
            out.push(0);
            out.extend_from_slice(&dim.to_le_bytes());
        }
        FeatureSpec::Sparse { vocab } => {
            out.push(1);
            out.extend_from_slice(&vocab.to_le_bytes());
        }
    }
    let h = state.hyper();
    out.extend_from_slice(&h.learning_rate.to_le_bytes());
    out.extend_from_slice(&h.l2.to_le_bytes());
    out.extend_from_slice(&h.iterations.to_le_bytes());
    out.extend_from_slice(&h.batch_size.to_le_bytes());
    out.extend_from_slice(&h.smoothing_alpha.to_le_bytes());
    out.extend_from_slice(&h.hidden_width.to_le_bytes());
    out.extend_from_slice(&h.init_seed.to_le_bytes());
    out.extend_from_slice(&state.trained_on_count().to_le_bytes());

    match &state.body {
        Body::None => {}
        Body::Mlp { w1, b1 } => {
            write_f64s(&mut out, w1);
            write_f64s(&mut out, b1);
        }
    }

    out.extend_from_slice(&(state.heads.len() as u64).to_le_bytes());
    for (name, head) in &state.heads {
        out.extend_from_slice(&(name.len() as u64).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&head.num_classes.to_le_bytes());
        match &head.params {
            HeadParams::Unit => {}
            HeadParams::Counts { label_counts } => write_u64s(&mut out, label_counts),
            HeadParams::TokenCounts { label_counts, token_counts } => {
                write_u64s(&mut out, label_counts);
                write_u64s(&mut out, token_counts);
            }
            HeadParams::Linear { weights, bias } => {
                write_f64s(&mut out, weights);
                write_f64s(&mut out, bias);
            }
        }
    }
    out
}

fn write_f64s(out: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn write_u64s(out: &mut Vec<u8>, xs: &[u64]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::MalformedState(alloc::format!(
                "truncated: needed {n} bytes at offset {}, have {}",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.f64()?);
        }
        Ok(out)
    }

    fn u64s(&mut self, n: usize) -> Result<Vec<u64>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.u64()?);
        }
        Ok(out)
    }
}

pub(super) fn decode(bytes: &[u8]) -> Result<LearnerState> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::MalformedState(String::from("bad magic, expected PQLS")));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::MalformedState(alloc::format!("unsupported version {version}")));
    }
    let kind = kind_from_tag(r.u8()?)?;
    let label_space = LabelSpace::new(r.u32()?)?;
    let feature_spec = match r.u8()? {
        0 => FeatureSpec::Dense { dim: r.u32()? },
        1 => FeatureSpec::Sparse { vocab: r.u32()? },
        other => {
            return Err(Error::MalformedState(alloc::format!("unknown feature tag {other}")))
        }
    };
    let hyper = HyperParams {
        learning_rate: r.f64()?,
        l2: r.f64()?,
        iterations: r.u64()?,
        batch_size: r.u64()?,
        smoothing_alpha: r.f64()?,
        hidden_width: r.u64()?,
        init_seed: r.u64()?,
    };
    hyper.validate_for(kind)?;
    let trained_on_count = r.u64()?;

    let in_dim = feature_spec.input_dim();
    let body = match kind {
        LearnerKind::Mlp => {
            let h = hyper.hidden_width as usize;
            Body::Mlp { w1: r.f64s(h * in_dim)?, b1: r.f64s(h)? }
        }
        _ => Body::None,
    };

    let num_heads = r.u64()? as usize;
    let mut heads = BTreeMap::new();
    let mut prev_name: Option<String> = None;
    for _ in 0..num_heads {
        let name_len = r.u64()? as usize;
        let name = core::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::MalformedState(String::from("head name is not utf-8")))?
            .to_string();
        if let Some(prev) = &prev_name {
            if *prev >= name {
                return Err(Error::MalformedState(String::from(
                    "head names out of order; encoding is not canonical",
                )));
            }
        }
        let k = r.u32()?;
        if k < 2 {
            return Err(Error::MalformedState(alloc::format!("head '{name}' has {k} classes")));
        }
        let params = match kind {
            LearnerKind::Uniform => HeadParams::Unit,
            LearnerKind::Prior => HeadParams::Counts { label_counts: r.u64s(k as usize)? },
            LearnerKind::NaiveBayes => HeadParams::TokenCounts {
                label_counts: r.u64s(k as usize)?,
                token_counts: r.u64s(k as usize * in_dim)?,
            },
            LearnerKind::LogisticRegression => HeadParams::Linear {
                weights: r.f64s(k as usize * in_dim)?,
                bias: r.f64s(k as usize)?,
            },
            LearnerKind::Mlp => {
                let h = hyper.hidden_width as usize;
                HeadParams::Linear { weights: r.f64s(k as usize * h)?, bias: r.f64s(k as usize)? }
            }
        };
        prev_name = Some(name.clone());
        heads.insert(name, Head { num_classes: k, params });
    }
    if r.pos != bytes.len() {
        return Err(Error::MalformedState(alloc::format!(
            "{} trailing bytes after state",
            bytes.len() - r.pos
        )));
    }
    Ok(LearnerState {
        kind,
        label_space,
        feature_spec,
        hyper,
        trained_on_count,
        body,
        heads,
    })
}
