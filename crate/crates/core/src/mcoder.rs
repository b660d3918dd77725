//! Multiplication-free adaptive binary arithmetic coder (the CABAC M-coder).
//!
//! Probabilities of the least probable symbol are restricted to 64
//! representative values `p_s = 0.5 * alpha^s`, `alpha = (0.01875 / 0.5)^(1/63)`,
//! and each context is the pair (state index, MPS value). The code interval
//! is a 9-bit register; its two most significant bits below the leading one
//! select one of four precomputed LPS subrange widths.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const NUM_STATES: usize = 64;
/// Highest state reachable by adaptation; 63 is reserved for termination.
pub const MAX_ADAPTIVE_STATE: u8 = 62;
pub const P_MIN: f64 = 0.01875;
pub const P_MAX: f64 = 0.5;

/// Range cell representatives: midpoints of `[256,320)`, `[320,384)`, `[384,448)`, `[448,512)`.
pub const RANGE_REPRESENTATIVES: [f64; 4] = [288.0, 352.0, 416.0, 480.0];

#[rustfmt::skip]
pub const RANGE_TAB_LPS: [[u8; 4]; NUM_STATES] = [
    [128, 176, 208, 240], [128, 167, 197, 227], [128, 158, 187, 216], [123, 150, 178, 205],
    [116, 142, 169, 195], [111, 135, 160, 185], [105, 128, 152, 175], [100, 122, 144, 166],
    [95, 116, 137, 158], [90, 110, 130, 150], [85, 104, 123, 142], [81, 99, 117, 135],
    [77, 94, 111, 128], [73, 89, 105, 122], [69, 85, 100, 116], [66, 80, 95, 110],
    [62, 76, 90, 104], [59, 72, 86, 99], [56, 69, 81, 94], [53, 65, 77, 89],
    [51, 62, 73, 85], [48, 59, 69, 80], [46, 56, 66, 76], [43, 53, 63, 72],
    [41, 50, 59, 69], [39, 48, 56, 65], [37, 45, 54, 62], [35, 43, 51, 59],
    [33, 41, 48, 56], [32, 39, 46, 53], [30, 37, 43, 50], [29, 35, 41, 48],
    [27, 33, 39, 45], [26, 31, 37, 43], [24, 30, 35, 41], [23, 28, 33, 39],
    [22, 27, 32, 37], [21, 26, 30, 35], [20, 24, 29, 33], [19, 23, 27, 31],
    [18, 22, 26, 30], [17, 21, 25, 28], [16, 20, 23, 27], [15, 19, 22, 25],
    [14, 18, 21, 24], [14, 17, 20, 23], [13, 16, 19, 22], [12, 15, 18, 21],
    [12, 14, 17, 20], [11, 14, 16, 19], [11, 13, 15, 18], [10, 12, 15, 17],
    [10, 12, 14, 16], [9, 11, 13, 15], [9, 11, 12, 14], [8, 10, 12, 14],
    [8, 9, 11, 13], [7, 9, 11, 12], [7, 9, 10, 12], [7, 8, 10, 11],
    [6, 8, 9, 11], [6, 7, 9, 10], [6, 7, 8, 9], [2, 2, 2, 2],
];

#[rustfmt::skip]
pub const TRANS_IDX_LPS: [u8; NUM_STATES] = [
    0, 0, 1, 2, 2, 4, 4, 5, 6, 7, 8, 9, 9, 11, 11, 12,
    13, 13, 15, 15, 16, 16, 18, 18, 19, 19, 21, 21, 22, 22, 23, 24,
    24, 25, 26, 26, 27, 27, 28, 29, 29, 30, 30, 30, 31, 32, 32, 33,
    33, 33, 34, 34, 35, 35, 35, 36, 36, 36, 37, 37, 37, 38, 38, 63,
];

/// Adaptation step `alpha` of the state recursion.
pub fn alpha() -> f64 {
    (P_MIN / P_MAX).powf(1.0 / 63.0)
}

/// Representative LPS probability of state `sigma`.
pub fn representative_probability(sigma: usize) -> f64 {
    match sigma {
        0 => P_MAX,
        63 => P_MIN,
        s => P_MAX * alpha().powi(s as i32),
    }
}

/// Probability state tables driving the engine.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTables {
    pub p_lps: [f64; NUM_STATES],
    pub range_lps: [[u8; 4]; NUM_STATES],
    pub next_mps: [u8; NUM_STATES],
    pub next_lps: [u8; NUM_STATES],
}

impl StateTables {
    /// Representative probabilities and MPS transitions come from the closed
    /// form; the LPS range and LPS transition tables are the published integer
    /// constants, which the closed form reproduces only to within one unit.
    pub fn build() -> Self {
        let mut p_lps = [0.0; NUM_STATES];
        let mut next_mps = [0u8; NUM_STATES];
        for s in 0..NUM_STATES {
            p_lps[s] = representative_probability(s);
            next_mps[s] = if s == 63 {
                63
            } else {
                (s as u8 + 1).min(MAX_ADAPTIVE_STATE)
            };
        }
        Self {
            p_lps,
            range_lps: RANGE_TAB_LPS,
            next_mps,
            next_lps: TRANS_IDX_LPS,
        }
    }

    /// `min(128, round(p_s * R_r))` for the first cell, `round(p_s * R_r)` for the others.
    pub fn model_range_lps(sigma: usize, rho: usize) -> f64 {
        let v = (representative_probability(sigma) * RANGE_REPRESENTATIVES[rho]).round();
        if rho == 0 {
            v.min(128.0)
        } else {
            v
        }
    }

    /// Fractional state index whose probability equals the LPS update
    /// `alpha * p_s + (1 - alpha)`.
    pub fn model_lps_target(sigma: usize) -> f64 {
        let a = alpha();
        let p = a * representative_probability(sigma) + (1.0 - a);
        (p / P_MAX).ln() / a.ln()
    }

    /// Checks the tables against the closed-form model and the structural rules
    /// the engine relies on.
    pub fn self_check(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::TableCheck(msg));
        if self.p_lps[0] != P_MAX || self.p_lps[63] != P_MIN {
            return fail("probability endpoints".into());
        }
        for s in 0..63 {
            for r in 0..4 {
                let model = Self::model_range_lps(s, r);
                let got = f64::from(self.range_lps[s][r]);
                if (got - model).abs() > 1.0 {
                    return fail(format!("range_lps[{s}][{r}] = {got}, model {model}"));
                }
                if s > 0 && self.range_lps[s][r] > self.range_lps[s - 1][r] {
                    return fail(format!("range_lps column {r} increases at state {s}"));
                }
            }
            let target = Self::model_lps_target(s);
            if (f64::from(self.next_lps[s]) - target).abs() >= 1.0 {
                return fail(format!("next_lps[{s}] = {} vs {target:.3}", self.next_lps[s]));
            }
            if usize::from(self.next_lps[s]) > s {
                return fail(format!("next_lps[{s}] moves towards lower LPS probability"));
            }
            if self.next_mps[s] != (s as u8 + 1).min(MAX_ADAPTIVE_STATE) {
                return fail(format!("next_mps[{s}]"));
            }
        }
        if self.range_lps[63] != [2; 4] || self.next_lps[63] != 63 || self.next_mps[63] != 63 {
            return fail("termination state 63".into());
        }
        Ok(())
    }
}

/// Process-wide tables, verified on first use. A failed check aborts.
pub fn tables() -> &'static StateTables {
    static TABLES: OnceLock<StateTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let t = StateTables::build();
        if let Err(e) = t.self_check() {
            panic!("{e}");
        }
        t
    })
}

/// Adaptive probability model of one binary source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Context {
    sigma: u8,
    mps: u8,
}

impl Context {
    /// Starts at p_LPS = 0.5 with MPS 0.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_state(sigma: u8, mps: u8) -> Self {
        assert!(sigma <= MAX_ADAPTIVE_STATE && mps <= 1);
        Self { sigma, mps }
    }

    pub fn sigma(&self) -> u8 {
        self.sigma
    }

    pub fn mps(&self) -> u8 {
        self.mps
    }

    pub fn p_lps(&self) -> f64 {
        tables().p_lps[self.sigma as usize]
    }

    #[inline]
    fn update(&mut self, t: &StateTables, bin: u8) {
        if bin == self.mps {
            self.sigma = t.next_mps[self.sigma as usize];
        } else {
            if self.sigma == 0 {
                self.mps ^= 1;
            }
            self.sigma = t.next_lps[self.sigma as usize];
        }
    }
}

#[derive(Debug, Default, Clone)]
struct BitWriter {
    bytes: Vec<u8>,
    acc: u8,
    nbits: u8,
    total: u64,
}

impl BitWriter {
    #[inline]
    fn put(&mut self, bit: u8) {
        self.acc = (self.acc << 1) | bit;
        self.nbits += 1;
        self.total += 1;
        if self.nbits == 8 {
            self.bytes.push(self.acc);
            self.acc = 0;
            self.nbits = 0;
        }
    }

    fn into_bytes(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            self.bytes.push(self.acc << (8 - self.nbits));
        }
        self.bytes
    }
}

/// Arithmetic encoder. Call [`Encoder::finish`] to terminate the stream.
#[derive(Debug, Clone)]
pub struct Encoder {
    low: u32,
    range: u32,
    outstanding: u64,
    first_bit: bool,
    out: BitWriter,
    tables: &'static StateTables,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: 510,
            outstanding: 0,
            first_bit: true,
            out: BitWriter::default(),
            tables: tables(),
        }
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    /// Bits committed so far, counting bits still pending carry resolution.
    pub fn bits_written(&self) -> u64 {
        self.out.total + self.outstanding
    }

    #[inline]
    fn put_bit(&mut self, bit: u8) {
        if self.first_bit {
            self.first_bit = false;
        } else {
            self.out.put(bit);
        }
        while self.outstanding > 0 {
            self.out.put(1 - bit);
            self.outstanding -= 1;
        }
    }

    #[inline]
    fn renorm(&mut self) {
        while self.range < 256 {
            if self.low < 256 {
                self.put_bit(0);
            } else if self.low >= 512 {
                self.low -= 512;
                self.put_bit(1);
            } else {
                self.low -= 256;
                self.outstanding += 1;
            }
            self.range <<= 1;
            self.low <<= 1;
        }
    }

    /// Codes `bin` with the adaptive model `ctx` and updates the model.
    #[inline]
    pub fn encode(&mut self, ctx: &mut Context, bin: u8) {
        let t = self.tables;
        let q = ((self.range >> 6) & 3) as usize;
        let r_lps = u32::from(t.range_lps[ctx.sigma as usize][q]);
        self.range -= r_lps;
        if bin != ctx.mps {
            self.low += self.range;
            self.range = r_lps;
        }
        ctx.update(t, bin);
        self.renorm();
    }

    /// Codes `bin` at probability one half.
    #[inline]
    pub fn encode_bypass(&mut self, bin: u8) {
        self.low <<= 1;
        if bin != 0 {
            self.low += self.range;
        }
        if self.low >= 1024 {
            self.put_bit(1);
            self.low -= 1024;
        } else if self.low < 512 {
            self.put_bit(0);
        } else {
            self.low -= 512;
            self.outstanding += 1;
        }
    }

    /// Codes the end-of-stream symbol, flushes the registers and pads the final
    /// byte with zeros. The last bit before the padding is always one.
    pub fn finish(mut self) -> Vec<u8> {
        self.range -= 2;
        self.low += self.range;
        self.range = 2;
        self.renorm();
        self.put_bit(((self.low >> 9) & 1) as u8);
        let tail = ((self.low >> 7) & 3) | 1;
        self.out.put(((tail >> 1) & 1) as u8);
        self.out.put((tail & 1) as u8);
        self.out.into_bytes()
    }
}

/// Arithmetic decoder over a terminated stream.
#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    data: &'a [u8],
    bitpos: usize,
    range: u32,
    offset: u32,
    tables: &'static StateTables,
}

impl<'a> Decoder<'a> {
    pub fn new(data: &'a [u8]) -> Result<Self> {
        let mut d = Self {
            data,
            bitpos: 0,
            range: 510,
            offset: 0,
            tables: tables(),
        };
        for _ in 0..9 {
            d.offset = (d.offset << 1) | d.read_bit()?;
        }
        if d.offset >= 510 {
            return Err(Error::Corrupt("arithmetic decoder offset out of range".into()));
        }
        Ok(d)
    }

    /// Byte offset of the next unread bit.
    pub fn byte_offset(&self) -> usize {
        self.bitpos / 8
    }

    #[inline]
    fn read_bit(&mut self) -> Result<u32> {
        let byte = self.bitpos / 8;
        let b = *self.data.get(byte).ok_or(Error::Truncated { offset: byte })?;
        let bit = (b >> (7 - self.bitpos % 8)) & 1;
        self.bitpos += 1;
        Ok(u32::from(bit))
    }

    #[inline]
    pub fn decode(&mut self, ctx: &mut Context) -> Result<u8> {
        let t = self.tables;
        let q = ((self.range >> 6) & 3) as usize;
        let r_lps = u32::from(t.range_lps[ctx.sigma as usize][q]);
        self.range -= r_lps;
        let bin = if self.offset >= self.range {
            self.offset -= self.range;
            self.range = r_lps;
            ctx.mps ^ 1
        } else {
            ctx.mps
        };
        ctx.update(t, bin);
        while self.range < 256 {
            self.range <<= 1;
            self.offset = (self.offset << 1) | self.read_bit()?;
        }
        Ok(bin)
    }

    #[inline]
    pub fn decode_bypass(&mut self) -> Result<u8> {
        self.offset = (self.offset << 1) | self.read_bit()?;
        if self.offset >= self.range {
            self.offset -= self.range;
            Ok(1)
        } else {
            Ok(0)
        }
    }

    /// Reads the end-of-stream symbol and checks that only zero padding
    /// remains in the input.
    pub fn finish(mut self) -> Result<()> {
        self.range -= 2;
        if self.offset < self.range {
            return Err(Error::Corrupt(format!(
                "missing end-of-stream marker near byte offset {}",
                self.byte_offset()
            )));
        }
        let used = self.bitpos.div_ceil(8);
        if used != self.data.len() {
            return Err(Error::Corrupt(format!(
                "{} trailing bytes after end of stream at byte offset {used}",
                self.data.len().saturating_sub(used)
            )));
        }
        if !self.bitpos.is_multiple_of(8) {
            let last = self.data[used - 1];
            let pad = 8 - self.bitpos % 8;
            if last & ((1u8 << pad) - 1) != 0 {
                return Err(Error::Corrupt("non-zero padding after end of stream".into()));
            }
        }
        Ok(())
    }
}
