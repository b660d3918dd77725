//! Transform-coefficient style comparison coder.
//!
//! Significance and last flags use position-dependent context banks (capped
//! at 16 positions). The first level bin selects one of four contexts by the
//! number of levels already coded in the block; the remaining truncated-unary
//! bins share one context. A last flag set to one ends the significance scan;
//! the final position never carries a last flag.
//!
//! Per block the significance map is sent first, then magnitude and sign of
//! each significant component in scan order.

use crate::binarization::BinString;
use crate::codec::{decode_level, encode_level, encode_sign};
use crate::error::Result;
use crate::mcoder::{Context, Decoder, Encoder};

pub const POSITION_CONTEXTS: usize = 16;
pub const LEVEL_FIRST_CONTEXTS: usize = 4;
const LEVEL_REST: usize = LEVEL_FIRST_CONTEXTS;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BaselineContexts {
    pub sig: [Context; POSITION_CONTEXTS],
    pub last: [Context; POSITION_CONTEXTS],
    /// First-bin contexts followed by the shared context for later bins.
    pub level: [Context; LEVEL_FIRST_CONTEXTS + 1],
}

fn pos_ctx(m: usize) -> usize {
    m.min(POSITION_CONTEXTS - 1)
}

impl BaselineContexts {
    pub const COUNT: usize = 2 * POSITION_CONTEXTS + LEVEL_FIRST_CONTEXTS + 1;

    pub fn new() -> Self {
        Self::default()
    }

    pub fn encode_block(&mut self, enc: &mut Encoder, indices: &[i32], buf: &mut BinString) {
        let n = indices.len();
        let last_sig = indices.iter().rposition(|&i| i != 0);
        for (m, &i) in indices.iter().enumerate() {
            let sig = i != 0;
            enc.encode(&mut self.sig[pos_ctx(m)], u8::from(sig));
            if sig && m + 1 < n {
                let is_last = last_sig == Some(m);
                enc.encode(&mut self.last[pos_ctx(m)], u8::from(is_last));
                if is_last {
                    break;
                }
            }
        }
        for (prior, &i) in indices.iter().filter(|&&i| i != 0).enumerate() {
            let first = prior.min(LEVEL_FIRST_CONTEXTS - 1);
            encode_level(enc, i.unsigned_abs() - 1, &mut self.level, first, LEVEL_REST, buf);
            encode_sign(enc, i);
        }
    }

    pub fn decode_block(&mut self, dec: &mut Decoder, out: &mut [i32]) -> Result<()> {
        let n = out.len();
        out.fill(0);
        for (m, slot) in out.iter_mut().enumerate() {
            if dec.decode(&mut self.sig[pos_ctx(m)])? == 1 {
                *slot = 1;
                if m + 1 < n && dec.decode(&mut self.last[pos_ctx(m)])? == 1 {
                    break;
                }
            }
        }
        for (prior, slot) in out.iter_mut().filter(|s| **s != 0).enumerate() {
            let first = prior.min(LEVEL_FIRST_CONTEXTS - 1);
            let mag = decode_level(dec, &mut self.level, first, LEVEL_REST)?;
            *slot = if dec.decode_bypass()? == 1 { -mag } else { mag };
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(blocks: &[Vec<i32>]) -> (Vec<Vec<i32>>, BaselineContexts, BaselineContexts) {
        let mut enc = Encoder::new();
        let mut ectx = BaselineContexts::new();
        let mut buf = BinString::default();
        for b in blocks {
            ectx.encode_block(&mut enc, b, &mut buf);
        }
        let bytes = enc.finish();
        let mut dec = Decoder::new(&bytes).unwrap();
        let mut dctx = BaselineContexts::new();
        let out = blocks
            .iter()
            .map(|b| {
                let mut o = vec![0; b.len()];
                dctx.decode_block(&mut dec, &mut o).unwrap();
                o
            })
            .collect();
        dec.finish().unwrap();
        (out, ectx, dctx)
    }

    #[test]
    fn context_census() {
        assert_eq!(BaselineContexts::COUNT, 37);
    }

    #[test]
    fn degenerate_and_edge_scans() {
        let blocks = vec![
            vec![0; 6],
            vec![0, 0, 0, 0, 0, 9],
            vec![3, 0, 0, 0, 0, 0],
            vec![-1, 2, -3, 4, -5, 6],
            vec![7],
            vec![0],
        ];
        let (out, e, d) = round_trip(&blocks);
        assert_eq!(out, blocks);
        assert_eq!(e, d);
    }

    #[test]
    fn implied_last_position_codes_no_last_flag() {
        // Only the last position is significant: no last flag is touched.
        let mut enc = Encoder::new();
        let mut c = BaselineContexts::new();
        c.encode_block(&mut enc, &[0, 0, 0, 1], &mut BinString::default());
        assert!(c.last.iter().all(|ctx| *ctx == Context::new()));
        assert_ne!(c.sig[3], Context::new());

        // Significant at position 2 of 4 and last: exactly one last flag coded, then stop.
        let mut c = BaselineContexts::new();
        c.encode_block(&mut enc, &[0, 1, 0, 0], &mut BinString::default());
        assert_ne!(c.last[1], Context::new());
        assert_eq!(c.sig[2], Context::new());
        assert_eq!(c.sig[3], Context::new());
    }

    #[test]
    fn long_vectors_share_capped_contexts() {
        let blocks: Vec<Vec<i32>> = (0..40)
            .map(|j| (0..100).map(|m| ((m * 7 + j * 3) % 11) - 5).collect())
            .collect();
        let (out, e, d) = round_trip(&blocks);
        assert_eq!(out, blocks);
        assert_eq!(e, d);
    }
}
