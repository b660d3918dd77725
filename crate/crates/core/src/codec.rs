//! Syntax decomposition of quantization index vectors, the single-context
//! entropy coder, and the full encode / decode pipeline for both schemes.
//!
//! For each component the significance flag is coded with one shared context.
//! A significant component is followed immediately by its magnitude minus one
//! (UEG0: truncated-unary bins on a second shared context, Exp-Golomb suffix
//! bypass) and its sign (bypass). Contexts persist across all blocks of an
//! image. No last-position flag is sent.

use crate::binarization::{ueg0_decode, ueg0_encode_into, BinSource, BinString};
use crate::cabac_baseline::BaselineContexts;
use crate::container::{Container, Header, Scheme, FORMAT_VERSION};
use crate::dpcm::{self, LoopState, Quantizer};
use crate::error::{Error, Result};
use crate::image_io::{assemble, partition, BlockGrid, EdgeMode, GrayImage};
use crate::mcoder::{Context, Decoder, Encoder};
use crate::rng::PRNG_ID_XOSHIRO_BOX_MULLER;
use crate::sensing::MeasurementMatrix;

/// Index vector split into its three syntax elements.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SyntaxStream {
    pub sig_flags: Vec<bool>,
    pub levels_minus1: Vec<u32>,
    /// `true` for negative.
    pub signs: Vec<bool>,
}

pub fn decompose(indices: &[i32]) -> SyntaxStream {
    let mut ss = SyntaxStream::default();
    for &i in indices {
        ss.sig_flags.push(i != 0);
        if i != 0 {
            ss.levels_minus1.push(i.unsigned_abs() - 1);
            ss.signs.push(i < 0);
        }
    }
    ss
}

pub fn recompose(ss: &SyntaxStream) -> Result<Vec<i32>> {
    let sig = ss.sig_flags.iter().filter(|&&f| f).count();
    if sig != ss.levels_minus1.len() || sig != ss.signs.len() {
        return Err(Error::Syntax(format!(
            "{sig} significant flags but {} levels and {} signs",
            ss.levels_minus1.len(),
            ss.signs.len()
        )));
    }
    let mut levels = ss.levels_minus1.iter().zip(&ss.signs);
    ss.sig_flags
        .iter()
        .map(|&f| {
            if !f {
                return Ok(0);
            }
            let (&l, &neg) = levels.next().unwrap();
            let mag = i32::try_from(u64::from(l) + 1).map_err(|_| Error::Syntax(format!("level {l} overflows")))?;
            Ok(if neg { -mag } else { mag })
        })
        .collect()
}

/// Codes `v` with UEG0: prefix bin 0 on `ctxs[first]`, later prefix bins on `ctxs[rest]`.
pub(crate) fn encode_level(
    enc: &mut Encoder,
    v: u32,
    ctxs: &mut [Context],
    first: usize,
    rest: usize,
    buf: &mut BinString,
) {
    ueg0_encode_into(v, buf);
    for (k, &bin) in buf.prefix().iter().enumerate() {
        let c = if k == 0 { first } else { rest };
        enc.encode(&mut ctxs[c], bin);
    }
    for &bin in buf.suffix() {
        enc.encode_bypass(bin);
    }
}

pub(crate) struct LevelSource<'x, 'a> {
    pub dec: &'x mut Decoder<'a>,
    pub ctxs: &'x mut [Context],
    pub first: usize,
    pub rest: usize,
}

impl BinSource for LevelSource<'_, '_> {
    fn prefix_bin(&mut self, k: u32) -> Result<u8> {
        let c = if k == 0 { self.first } else { self.rest };
        self.dec.decode(&mut self.ctxs[c])
    }

    fn suffix_bin(&mut self) -> Result<u8> {
        self.dec.decode_bypass()
    }
}

pub(crate) fn decode_level(dec: &mut Decoder, ctxs: &mut [Context], first: usize, rest: usize) -> Result<i32> {
    let v = ueg0_decode(&mut LevelSource { dec, ctxs, first, rest })?;
    i32::try_from(u64::from(v) + 1).map_err(|_| Error::Corrupt(format!("level {v} overflows")))
}

pub(crate) fn encode_sign(enc: &mut Encoder, i: i32) {
    enc.encode_bypass(u8::from(i < 0));
}

/// Contexts of the proposed scheme: one for significance, one for level bins.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContextSet {
    pub sig: Context,
    /// Shared by all truncated-unary level bins.
    pub level: [Context; 1],
}

impl ContextSet {
    pub const COUNT: usize = 2;

    pub fn new() -> Self {
        Self::default()
    }

    pub fn encode_block(&mut self, enc: &mut Encoder, indices: &[i32], buf: &mut BinString) {
        for &i in indices {
            enc.encode(&mut self.sig, u8::from(i != 0));
            if i != 0 {
                encode_level(enc, i.unsigned_abs() - 1, &mut self.level, 0, 0, buf);
                encode_sign(enc, i);
            }
        }
    }

    pub fn decode_block(&mut self, dec: &mut Decoder, out: &mut [i32]) -> Result<()> {
        for slot in out.iter_mut() {
            *slot = if dec.decode(&mut self.sig)? == 0 {
                0
            } else {
                let mag = decode_level(dec, &mut self.level, 0, 0)?;
                if dec.decode_bypass()? == 1 {
                    -mag
                } else {
                    mag
                }
            };
        }
        Ok(())
    }
}

enum SchemeContexts {
    Proposed(ContextSet),
    Cabac(Box<BaselineContexts>),
}

impl SchemeContexts {
    fn new(scheme: Scheme) -> Self {
        match scheme {
            Scheme::Proposed => Self::Proposed(ContextSet::new()),
            Scheme::CabacStyle => Self::Cabac(Box::default()),
        }
    }
}

/// Number of adaptive contexts a scheme allocates per stream.
pub fn context_count(scheme: Scheme) -> usize {
    match scheme {
        Scheme::Proposed => ContextSet::COUNT,
        Scheme::CabacStyle => BaselineContexts::COUNT,
    }
}

/// Entropy codes the index vectors of one image in block order and terminates the stream.
pub fn encode_indices(blocks: &[Vec<i32>], scheme: Scheme) -> Vec<u8> {
    let mut enc = Encoder::new();
    let mut buf = BinString::default();
    match SchemeContexts::new(scheme) {
        SchemeContexts::Proposed(mut c) => {
            for b in blocks {
                c.encode_block(&mut enc, b, &mut buf);
            }
        }
        SchemeContexts::Cabac(mut c) => {
            for b in blocks {
                c.encode_block(&mut enc, b, &mut buf);
            }
        }
    }
    enc.finish()
}

/// Inverse of [`encode_indices`] for `count` blocks of `len` components.
pub fn decode_indices(payload: &[u8], scheme: Scheme, count: usize, len: usize) -> Result<Vec<Vec<i32>>> {
    let mut dec = Decoder::new(payload)?;
    let mut ctxs = SchemeContexts::new(scheme);
    let mut blocks = Vec::with_capacity(count);
    for _ in 0..count {
        let mut b = vec![0; len];
        match &mut ctxs {
            SchemeContexts::Proposed(c) => c.decode_block(&mut dec, &mut b)?,
            SchemeContexts::Cabac(c) => c.decode_block(&mut dec, &mut b)?,
        }
        blocks.push(b);
    }
    dec.finish()?;
    Ok(blocks)
}

/// Everything needed to code one image at one rate point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodecParams {
    pub seed: u64,
    pub block_size: usize,
    pub measurements: usize,
    pub step: f64,
    pub scheme: Scheme,
    pub edge_mode: EdgeMode,
}

impl CodecParams {
    pub fn header(&self, img: &GrayImage) -> Result<Header> {
        let narrow = |v: usize, what: &str, max: usize| {
            if v > max {
                Err(Error::InvalidParameter(format!("{what} {v} exceeds {max}")))
            } else {
                Ok(v)
            }
        };
        let h = Header {
            version: FORMAT_VERSION,
            prng_id: PRNG_ID_XOSHIRO_BOX_MULLER,
            width: narrow(img.width(), "width", u16::MAX as usize)? as u16,
            height: narrow(img.height(), "height", u16::MAX as usize)? as u16,
            block_size: narrow(self.block_size, "block size", u8::MAX as usize)? as u8,
            measurements: narrow(self.measurements, "measurements", u16::MAX as usize)? as u16,
            quant_step: self.step,
            seed: self.seed,
            scheme: self.scheme,
        };
        h.validate()?;
        Ok(h)
    }
}

/// Sensing and DPCM front end output for one image.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub grid_dims: (usize, usize),
    /// True measurements `y` per block.
    pub measurements: Vec<Vec<f64>>,
    pub indices: Vec<Vec<i32>>,
    /// Encoder feedback reconstructions `y_hat` per block.
    pub recon: Vec<Vec<f64>>,
}

impl Analysis {
    pub fn total_indices(&self) -> usize {
        self.indices.iter().map(Vec::len).sum()
    }

    /// Mean of `(y - y_hat)^2` over all measurements.
    pub fn measurement_mse(&self) -> f64 {
        let (mut sum, mut n) = (0.0, 0usize);
        for (y, yh) in self.measurements.iter().zip(&self.recon) {
            for (a, b) in y.iter().zip(yh) {
                sum += (a - b) * (a - b);
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

/// Runs partition, measurement and the DPCM loop with a given matrix.
/// Block grid dimensions and per-block measurement vectors.
pub type MeasuredImage = ((usize, usize), Vec<Vec<f64>>);

/// Measures every block of the image with `matrix`, in raster order.
pub fn measure_image(
    img: &GrayImage,
    matrix: &MeasurementMatrix,
    block_size: usize,
    edge_mode: EdgeMode,
) -> Result<MeasuredImage> {
    let grid = partition(img, block_size, edge_mode)?;
    let ys = grid
        .blocks
        .iter()
        .map(|b| matrix.measure(b))
        .collect::<Result<Vec<_>>>()?;
    Ok(((grid.blocks_x, grid.blocks_y), ys))
}

/// Runs the DPCM loop over already computed measurements.
pub fn quantize_measurements(grid_dims: (usize, usize), measurements: Vec<Vec<f64>>, step: f64) -> Result<Analysis> {
    let q = Quantizer::new(step)?;
    let len = measurements.first().map_or(0, Vec::len);
    let mut state = LoopState::new(len);
    let mut indices = Vec::with_capacity(measurements.len());
    let mut recon = Vec::with_capacity(measurements.len());
    for y in &measurements {
        indices.push(dpcm::encode_block(y, &mut state, &q)?);
        recon.push(state.prediction().to_vec());
    }
    Ok(Analysis {
        grid_dims,
        measurements,
        indices,
        recon,
    })
}

pub fn analyze_with(
    img: &GrayImage,
    matrix: &MeasurementMatrix,
    block_size: usize,
    step: f64,
    edge_mode: EdgeMode,
) -> Result<Analysis> {
    let (dims, ys) = measure_image(img, matrix, block_size, edge_mode)?;
    quantize_measurements(dims, ys, step)
}

pub fn analyze(img: &GrayImage, p: &CodecParams) -> Result<Analysis> {
    let matrix = MeasurementMatrix::generate(p.seed, p.measurements, p.block_size)?;
    analyze_with(img, &matrix, p.block_size, p.step, p.edge_mode)
}

/// Encoder output: the container plus the front-end state it was built from.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub container: Container,
    pub analysis: Analysis,
}

pub fn encode_image_detailed(img: &GrayImage, p: &CodecParams) -> Result<Encoded> {
    let header = p.header(img)?;
    let analysis = analyze(img, p)?;
    let payload = encode_indices(&analysis.indices, p.scheme);
    if payload.len() > u32::MAX as usize {
        return Err(Error::InvalidParameter("payload exceeds 4 GiB".into()));
    }
    Ok(Encoded {
        container: Container { header, payload },
        analysis,
    })
}

pub fn encode_image(img: &GrayImage, p: &CodecParams) -> Result<Container> {
    encode_image_detailed(img, p).map(|e| e.container)
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub indices: Vec<Vec<i32>>,
    pub recon: Vec<Vec<f64>>,
    /// `Phi^T y_hat` per block, reassembled, rounded and clamped.
    pub preview: GrayImage,
}

pub fn decode_image(c: &Container) -> Result<Decoded> {
    let h = &c.header;
    h.validate()?;
    let b = usize::from(h.block_size);
    let m = usize::from(h.measurements);
    let (w, ht) = (usize::from(h.width), usize::from(h.height));
    let count = h.block_count();
    let matrix = MeasurementMatrix::generate(h.seed, m, b)?;
    let q = Quantizer::new(h.quant_step)?;
    let indices = decode_indices(&c.payload, h.scheme, count, m)?;
    let mut state = LoopState::new(m);
    let mut recon = Vec::with_capacity(count);
    let mut blocks = Vec::with_capacity(count);
    for idx in &indices {
        let yhat = dpcm::decode_block(idx, &mut state, &q)?;
        blocks.push(matrix.backproject(&yhat)?);
        recon.push(yhat);
    }
    let grid = BlockGrid {
        block_size: b,
        blocks_x: w.div_ceil(b),
        blocks_y: ht.div_ceil(b),
        blocks,
    };
    let preview = assemble(&grid, w, ht)?;
    Ok(Decoded {
        indices,
        recon,
        preview,
    })
}

/// Fraction of blocks in which each position holds a non-zero index.
pub fn significance_position_profile(blocks: &[Vec<i32>]) -> Result<Vec<f64>> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::InvalidParameter("no blocks".into()))?;
    let mut counts = vec![0usize; first.len()];
    for b in blocks {
        if b.len() != counts.len() {
            return Err(Error::LengthMismatch {
                expected: counts.len(),
                actual: b.len(),
            });
        }
        for (c, &i) in counts.iter_mut().zip(b) {
            *c += usize::from(i != 0);
        }
    }
    let n = blocks.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decompose_examples() {
        let ss = decompose(&[0, -3, 0, 7]);
        assert_eq!(ss.sig_flags, vec![false, true, false, true]);
        assert_eq!(ss.levels_minus1, vec![2, 6]);
        assert_eq!(ss.signs, vec![true, false]);

        let ss = decompose(&[0; 5]);
        assert!(ss.sig_flags.iter().all(|f| !f));
        assert!(ss.levels_minus1.is_empty() && ss.signs.is_empty());

        let ss = decompose(&[1]);
        assert_eq!(
            (ss.sig_flags, ss.levels_minus1, ss.signs),
            (vec![true], vec![0], vec![false])
        );
    }

    #[test]
    fn recompose_inverts_and_checks_counts() {
        for v in [vec![0, -3, 0, 7], vec![0; 5], vec![1], vec![i32::MAX, -i32::MAX]] {
            assert_eq!(recompose(&decompose(&v)).unwrap(), v);
        }
        let bad = SyntaxStream {
            sig_flags: vec![true, true],
            levels_minus1: vec![0],
            signs: vec![false],
        };
        assert!(matches!(recompose(&bad), Err(Error::Syntax(_))));
    }

    #[test]
    fn last_component_significant_round_trips() {
        let blocks = vec![vec![0, 0, 0, 5], vec![0, 0, 0, -1], vec![0, 0, 0, 0]];
        for scheme in [Scheme::Proposed, Scheme::CabacStyle] {
            let bytes = encode_indices(&blocks, scheme);
            assert_eq!(decode_indices(&bytes, scheme, 3, 4).unwrap(), blocks);
        }
    }

    #[test]
    fn proposed_scheme_uses_two_contexts() {
        assert_eq!(context_count(Scheme::Proposed), 2);
        assert_eq!(context_count(Scheme::CabacStyle), 37);
    }

    #[test]
    fn profile_examples() {
        assert_eq!(
            significance_position_profile(&[vec![0, 0], vec![0, 0]]).unwrap(),
            vec![0.0, 0.0]
        );
        assert_eq!(
            significance_position_profile(&[vec![1, -2], vec![3, 4]]).unwrap(),
            vec![1.0, 1.0]
        );
        assert_eq!(
            significance_position_profile(&[vec![1, 0], vec![0, 0]]).unwrap(),
            vec![0.5, 0.0]
        );
        assert!(significance_position_profile(&[]).is_err());
    }

    #[test]
    fn all_zero_image() {
        let img = GrayImage::filled(16, 16, 0).unwrap();
        let p = CodecParams {
            seed: 1,
            block_size: 16,
            measurements: 32,
            step: 4.0,
            scheme: Scheme::Proposed,
            edge_mode: EdgeMode::Strict,
        };
        let c = encode_image(&img, &p).unwrap();
        assert!(c.payload.len() <= 8, "payload {} bytes", c.payload.len());
        let d = decode_image(&c).unwrap();
        assert!(d.indices.iter().flatten().all(|&i| i == 0));
        assert!(d.recon.iter().flatten().all(|&v| v == 0.0));
        assert!(d.preview.samples().iter().all(|&v| v == 0));
    }

    #[test]
    fn padded_image_round_trips() {
        let samples: Vec<u8> = (0..(20 * 13)).map(|i| (i * 7 % 256) as u8).collect();
        let img = GrayImage::new(20, 13, samples).unwrap();
        let p = CodecParams {
            seed: 3,
            block_size: 8,
            measurements: 64,
            step: 0.05,
            scheme: Scheme::CabacStyle,
            edge_mode: EdgeMode::Replicate,
        };
        let enc = encode_image_detailed(&img, &p).unwrap();
        let bytes = enc.container.to_bytes();
        let d = decode_image(&Container::from_bytes(&bytes).unwrap()).unwrap();
        assert_eq!(d.indices, enc.analysis.indices);
        // square matrix with a fine step: the preview is the image up to rounding
        assert_eq!((d.preview.width(), d.preview.height()), (20, 13));
        for (a, b) in d.preview.samples().iter().zip(img.samples()) {
            assert!((i32::from(*a) - i32::from(*b)).abs() <= 1);
        }
        let strict = CodecParams {
            edge_mode: EdgeMode::Strict,
            ..p
        };
        assert!(encode_image(&img, &strict).is_err());
    }
}
