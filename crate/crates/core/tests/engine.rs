use bcs_core::mcoder::{tables, Context, Decoder, Encoder, MAX_ADAPTIVE_STATE, TRANS_IDX_LPS};
use bcs_core::rng::Xoshiro256pp;
use proptest::prelude::*;

// Typed in from the published standard tables, independent of the engine's constants.
#[rustfmt::skip]
const PUBLISHED_RANGE_LPS: [[u8; 4]; 64] = [
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
const PUBLISHED_TRANS_LPS: [u8; 64] = [
    0, 0, 1, 2, 2, 4, 4, 5, 6, 7, 8, 9, 9, 11, 11, 12,
    13, 13, 15, 15, 16, 16, 18, 18, 19, 19, 21, 21, 22, 22, 23, 24,
    24, 25, 26, 26, 27, 27, 28, 29, 29, 30, 30, 30, 31, 32, 32, 33,
    33, 33, 34, 34, 35, 35, 35, 36, 36, 36, 37, 37, 37, 38, 38, 63,
];

#[test]
fn tables_match_published_constants() {
    let t = tables();
    assert_eq!(t.range_lps, PUBLISHED_RANGE_LPS);
    assert_eq!(t.next_lps, PUBLISHED_TRANS_LPS);
    assert_eq!(TRANS_IDX_LPS, PUBLISHED_TRANS_LPS);
    assert_eq!(t.next_mps[5], 6);
    assert_eq!(t.next_mps[62], 62);
}

/// A coding operation: `Some(k)` uses context `k`, `None` is a bypass bin.
#[derive(Debug, Clone, Copy)]
struct Op {
    ctx: Option<usize>,
    bin: u8,
}

fn ops(max_contexts: usize) -> impl Strategy<Value = Vec<Op>> {
    // per-context skew makes adaptation reach deep states
    (1..=max_contexts, prop::collection::vec(0.0f64..1.0, max_contexts)).prop_flat_map(move |(n, skew)| {
        prop::collection::vec((0..=n, 0.0f64..1.0), 0..3000).prop_map(move |raw| {
            raw.into_iter()
                .map(|(k, u)| {
                    if k == n {
                        Op {
                            ctx: None,
                            bin: u8::from(u < 0.5),
                        }
                    } else {
                        Op {
                            ctx: Some(k),
                            bin: u8::from(u < skew[k] * skew[k]),
                        }
                    }
                })
                .collect()
        })
    })
}

fn encode(ops: &[Op], n: usize) -> (Vec<u8>, Vec<Context>) {
    let mut ctxs = vec![Context::new(); n];
    let mut enc = Encoder::new();
    for op in ops {
        match op.ctx {
            Some(k) => enc.encode(&mut ctxs[k], op.bin),
            None => enc.encode_bypass(op.bin),
        }
    }
    (enc.finish(), ctxs)
}

proptest! {
    #[test]
    fn mixed_streams_round_trip(ops in ops(8)) {
        let (bytes, enc_ctxs) = encode(&ops, 8);
        let mut ctxs = vec![Context::new(); 8];
        let mut dec = Decoder::new(&bytes).unwrap();
        for op in &ops {
            let bin = match op.ctx {
                Some(k) => dec.decode(&mut ctxs[k]).unwrap(),
                None => dec.decode_bypass().unwrap(),
            };
            prop_assert_eq!(bin, op.bin);
        }
        dec.finish().unwrap();
        prop_assert_eq!(&ctxs, &enc_ctxs);
        for c in &enc_ctxs {
            prop_assert!(c.sigma() <= MAX_ADAPTIVE_STATE);
        }
    }

    #[test]
    fn distinct_bin_sequences_give_distinct_streams(ops in ops(4), flip in any::<prop::sample::Index>()) {
        prop_assume!(!ops.is_empty());
        let mut other = ops.clone();
        let i = flip.index(other.len());
        other[i].bin ^= 1;
        prop_assert_ne!(encode(&ops, 4).0, encode(&other, 4).0);
    }

    #[test]
    fn truncation_never_panics(ops in ops(3), cut in any::<prop::sample::Index>()) {
        let (bytes, _) = encode(&ops, 3);
        let short = &bytes[..cut.index(bytes.len())];
        if let Ok(mut dec) = Decoder::new(short) {
            let mut ctxs = [Context::new(); 3];
            let mut ok = true;
            for op in &ops {
                let r = match op.ctx {
                    Some(k) => dec.decode(&mut ctxs[k]),
                    None => dec.decode_bypass(),
                };
                if r.is_err() {
                    ok = false;
                    break;
                }
            }
            if ok {
                prop_assert!(dec.finish().is_err());
            }
        }
    }
}

/// The engine should lose almost nothing against the ideal code length of
/// the probabilities its own state machine assigns.
#[test]
fn coded_length_tracks_model_cost() {
    let mut rng = Xoshiro256pp::seed_from_u64(3);
    for p in [0.5, 0.1, 0.02] {
        let mut ctx = Context::new();
        let mut enc = Encoder::new();
        let mut ideal = 0.0;
        for _ in 0..200_000 {
            let bin = u8::from(rng.next_open01() < p);
            let p_lps = ctx.p_lps();
            ideal -= if bin == ctx.mps() { 1.0 - p_lps } else { p_lps }.log2();
            enc.encode(&mut ctx, bin);
        }
        let bits = 8.0 * enc.finish().len() as f64;
        assert!(bits < ideal * 1.005 + 16.0, "p = {p}: {bits} vs {ideal}");
        assert!(bits > ideal * 0.99, "p = {p}: {bits} vs {ideal}");
    }
}
