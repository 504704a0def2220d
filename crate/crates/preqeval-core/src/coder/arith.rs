//! Binary arithmetic coder over integer weights. The coding loop uses only
//! fixed-width integer arithmetic (64-bit registers, 128-bit products), so
//! identical inputs produce identical bits on every platform.
//!
//! The interval [low, high) lives in a 62-bit window. Each symbol narrows
//! it proportionally to its weight; whenever the interval falls into one
//! half of the window a bit is emitted and the interval doubles. Straddles
//! of the midpoint are counted as pending bits and resolved later — the
//! classic carry handling.

use alloc::vec::Vec;

use super::QuantizedDistribution;

const CODE_BITS: u32 = 62;
const WHOLE: u64 = 1 << CODE_BITS;
const HALF: u64 = WHOLE / 2;
const QUARTER: u64 = WHOLE / 4;
const THREE_QUARTERS: u64 = 3 * (WHOLE / 4);

/// MSB-first bit sink backed by bytes.
#[derive(Default)]
pub(super) struct BitWriter {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitWriter {
    fn push(&mut self, bit: bool) {
        let offset = (self.bit_len % 8) as u8;
        if offset == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().expect("pushed above") |= 0x80 >> offset;
        }
        self.bit_len += 1;
    }

    fn into_parts(self) -> (Vec<u8>, u64) {
        (self.bytes, self.bit_len)
    }
}

/// MSB-first bit source; reads past the recorded length yield zeros, which
/// the termination convention makes unambiguous.
pub(super) struct BitReader<'a> {
    bytes: &'a [u8],
    bit_len: u64,
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub(super) fn new(bytes: &'a [u8], bit_len: u64) -> Self {
        BitReader { bytes, bit_len, pos: 0 }
    }

    fn next(&mut self) -> u64 {
        if self.pos >= self.bit_len {
            return 0;
        }
        let byte = self.bytes[(self.pos / 8) as usize];
        let bit = (byte >> (7 - (self.pos % 8) as u8)) & 1;
        self.pos += 1;
        bit as u64
    }
}

/// Scaled interval boundary: low + span·cum/total, the one formula both
/// encoder and decoder must share.
fn boundary(low: u64, span: u64, cum: u64, total: u64) -> u64 {
    low + ((span as u128 * cum as u128) / total as u128) as u64
}

pub(super) struct Encoder {
    low: u64,
    high: u64,
    pending: u64,
    out: BitWriter,
}

impl Encoder {
    pub(super) fn new() -> Self {
        Encoder { low: 0, high: WHOLE, pending: 0, out: BitWriter::default() }
    }

    fn emit(&mut self, bit: bool) {
        self.out.push(bit);
        for _ in 0..self.pending {
            self.out.push(!bit);
        }
        self.pending = 0;
    }

    pub(super) fn encode(&mut self, dist: &QuantizedDistribution, symbol: u32) {
        let total = dist.total();
        let (cum_lo, cum_hi) = dist.cumulative_range(symbol);
        let span = self.high - self.low;
        self.high = boundary(self.low, span, cum_hi, total);
        self.low = boundary(self.low, span, cum_lo, total);
        loop {
            if self.high <= HALF {
                self.emit(false);
                self.low *= 2;
                self.high *= 2;
            } else if self.low >= HALF {
                self.emit(true);
                self.low = (self.low - HALF) * 2;
                self.high = (self.high - HALF) * 2;
            } else if self.low >= QUARTER && self.high <= THREE_QUARTERS {
                self.pending += 1;
                self.low = (self.low - QUARTER) * 2;
                self.high = (self.high - QUARTER) * 2;
            } else {
                break;
            }
        }
    }

    /// Flush enough bits to pin a point inside the final interval. Costs
    /// pending + 2 bits (2 when nothing is pending).
    pub(super) fn finish(mut self) -> (Vec<u8>, u64) {
        self.pending += 1;
        let bit = self.low >= QUARTER;
        self.emit(bit);
        self.out.into_parts()
    }
}

pub(super) struct Decoder<'a> {
    low: u64,
    high: u64,
    value: u64,
    reader: BitReader<'a>,
}

impl<'a> Decoder<'a> {
    pub(super) fn new(mut reader: BitReader<'a>) -> Self {
        let mut value = 0u64;
        for _ in 0..CODE_BITS {
            value = (value << 1) | reader.next();
        }
        Decoder { low: 0, high: WHOLE, value, reader }
    }

    /// Recover the symbol whose interval contains the code value, using the
    /// encoder's own boundary arithmetic. Returns None when the value lies
    /// in no interval, which only a corrupt stream can produce.
    pub(super) fn decode(&mut self, dist: &QuantizedDistribution) -> Option<u32> {
        let total = dist.total();
        let span = self.high - self.low;
        let mut cum = 0u64;
        let mut hit = None;
        for (s, &w) in dist.weights().iter().enumerate() {
            let lo = boundary(self.low, span, cum, total);
            let hi = boundary(self.low, span, cum + w, total);
            if self.value >= lo && self.value < hi {
                hit = Some((s as u32, lo, hi));
                break;
            }
            cum += w;
        }
        let (symbol, lo, hi) = hit?;
        self.low = lo;
        self.high = hi;
        loop {
            if self.high <= HALF {
                self.low *= 2;
                self.high *= 2;
                self.value = (self.value << 1) | self.reader.next();
            } else if self.low >= HALF {
                self.low = (self.low - HALF) * 2;
                self.high = (self.high - HALF) * 2;
                self.value = ((self.value - HALF) << 1) | self.reader.next();
            } else if self.low >= QUARTER && self.high <= THREE_QUARTERS {
                self.low = (self.low - QUARTER) * 2;
                self.high = (self.high - QUARTER) * 2;
                self.value = ((self.value - QUARTER) << 1) | self.reader.next();
            } else {
                break;
            }
        }
        Some(symbol)
    }
}
