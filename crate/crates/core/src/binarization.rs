//! Truncated unary, 0th-order Exp-Golomb and their UEG0 concatenation.
//!
//! UEG0 codes `abs_coeff_level_minus1`: a truncated unary prefix with cutoff
//! 14 whose bins are context coded, followed for values of 14 and above by an
//! EG0 suffix of `v - 14` whose bins are bypass coded.

use crate::error::{Error, Result};

pub const UEG0_CUTOFF: u32 = 14;

/// A binarized value. The first `ctx_coded` bins are context coded, the rest bypass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BinString {
    pub bins: Vec<u8>,
    pub ctx_coded: usize,
}

impl BinString {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn clear(&mut self) {
        self.bins.clear();
        self.ctx_coded = 0;
    }

    pub fn prefix(&self) -> &[u8] {
        &self.bins[..self.ctx_coded]
    }

    pub fn suffix(&self) -> &[u8] {
        &self.bins[self.ctx_coded..]
    }
}

impl std::fmt::Display for BinString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.bins {
            f.write_str(if b == 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

fn push_tu(v: u32, cutoff: u32, out: &mut Vec<u8>) {
    let ones = v.min(cutoff);
    out.extend(std::iter::repeat_n(1, ones as usize));
    if v < cutoff {
        out.push(0);
    }
}

fn push_eg0(v: u32, out: &mut Vec<u8>) {
    let v1 = u64::from(v) + 1;
    let l = 63 - v1.leading_zeros();
    out.extend(std::iter::repeat_n(1, l as usize));
    out.push(0);
    let rem = v1 - (1u64 << l);
    for bit in (0..l).rev() {
        out.push(((rem >> bit) & 1) as u8);
    }
}

pub fn tu_encode(v: u32, cutoff: u32) -> BinString {
    let mut bins = Vec::new();
    push_tu(v, cutoff, &mut bins);
    let ctx_coded = bins.len();
    BinString { bins, ctx_coded }
}

pub fn eg0_encode(v: u32) -> BinString {
    let mut bins = Vec::new();
    push_eg0(v, &mut bins);
    BinString { bins, ctx_coded: 0 }
}

pub fn ueg0_encode(v: u32) -> BinString {
    let mut out = BinString::default();
    ueg0_encode_into(v, &mut out);
    out
}

/// [`ueg0_encode`] into a reusable buffer.
pub fn ueg0_encode_into(v: u32, out: &mut BinString) {
    out.clear();
    push_tu(v, UEG0_CUTOFF, &mut out.bins);
    out.ctx_coded = out.bins.len();
    if v >= UEG0_CUTOFF {
        push_eg0(v - UEG0_CUTOFF, &mut out.bins);
    }
}

/// Where decoded bins come from. `prefix_bin(k)` yields the k-th truncated
/// unary bin (context coded), `suffix_bin` yields an Exp-Golomb bin (bypass).
pub trait BinSource {
    fn prefix_bin(&mut self, k: u32) -> Result<u8>;
    fn suffix_bin(&mut self) -> Result<u8>;
}

pub fn ueg0_decode<S: BinSource + ?Sized>(src: &mut S) -> Result<u32> {
    let mut v = 0;
    while v < UEG0_CUTOFF {
        if src.prefix_bin(v)? == 0 {
            return Ok(v);
        }
        v += 1;
    }
    let mut l = 0u32;
    while src.suffix_bin()? == 1 {
        l += 1;
        if l > 31 {
            return Err(Error::Corrupt("exp-golomb prefix longer than 31 bins".into()));
        }
    }
    let mut rem: u64 = 0;
    for _ in 0..l {
        rem = (rem << 1) | u64::from(src.suffix_bin()?);
    }
    let value = (1u64 << l) - 1 + rem + u64::from(UEG0_CUTOFF);
    u32::try_from(value).map_err(|_| Error::Corrupt(format!("level {value} overflows")))
}

/// Replays a plain bin slice; running out is a truncation error at the bin offset.
#[derive(Debug)]
pub struct SliceSource<'a> {
    bins: &'a [u8],
    pos: usize,
}

impl<'a> SliceSource<'a> {
    pub fn new(bins: &'a [u8]) -> Self {
        Self { bins, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    fn next(&mut self) -> Result<u8> {
        let b = *self.bins.get(self.pos).ok_or(Error::Truncated { offset: self.pos })?;
        self.pos += 1;
        Ok(b)
    }
}

impl BinSource for SliceSource<'_> {
    fn prefix_bin(&mut self, _k: u32) -> Result<u8> {
        self.next()
    }

    fn suffix_bin(&mut self) -> Result<u8> {
        self.next()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bins(s: &str) -> Vec<u8> {
        s.bytes().map(|c| c - b'0').collect()
    }

    fn ones(n: usize) -> String {
        "1".repeat(n)
    }

    #[test]
    fn truncated_unary() {
        assert_eq!(tu_encode(0, 14).to_string(), "0");
        assert_eq!(tu_encode(3, 14).to_string(), "1110");
        assert_eq!(tu_encode(14, 14).to_string(), ones(14));
        assert_eq!(tu_encode(20, 14).to_string(), ones(14));
    }

    #[test]
    fn exp_golomb_order_zero() {
        assert_eq!(eg0_encode(0).to_string(), "0");
        assert_eq!(eg0_encode(1).to_string(), "100");
        assert_eq!(eg0_encode(2).to_string(), "101");
        assert_eq!(eg0_encode(6).to_string(), "11011");
        assert_eq!(eg0_encode(u32::MAX).len(), 65);
    }

    #[test]
    fn ueg0_layout() {
        assert_eq!(ueg0_encode(5).to_string(), "111110");
        assert_eq!(ueg0_encode(5).ctx_coded, 6);
        assert_eq!(ueg0_encode(14).to_string(), ones(14) + "0");
        assert_eq!(ueg0_encode(17).to_string(), ones(14) + "11000");
        let b = ueg0_encode(17);
        assert_eq!(b.ctx_coded, 14);
        assert_eq!(b.suffix(), &bins("11000")[..]);
    }

    #[test]
    fn ueg0_decode_examples() {
        let cases = [("0", 0), ("1110", 3)];
        for (s, v) in cases {
            assert_eq!(ueg0_decode(&mut SliceSource::new(&bins(s))).unwrap(), v);
        }
        let s = bins(&(ones(14) + "101"));
        assert_eq!(ueg0_decode(&mut SliceSource::new(&s)).unwrap(), 16);
        assert_eq!(
            ueg0_decode(&mut SliceSource::new(&[])),
            Err(Error::Truncated { offset: 0 })
        );
        let cut = bins(&(ones(14) + "11"));
        assert!(matches!(
            ueg0_decode(&mut SliceSource::new(&cut)),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn extreme_values_round_trip() {
        for v in [u32::MAX, u32::MAX - 14, u32::MAX / 2, 1 << 20] {
            let b = ueg0_encode(v);
            let mut src = SliceSource::new(&b.bins);
            assert_eq!(ueg0_decode(&mut src).unwrap(), v);
            assert_eq!(src.position(), b.len());
        }
    }
}
