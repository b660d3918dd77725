//! 8-bit grayscale images, binary PGM I/O and raster block partitioning.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                actual: samples.len(),
            });
        }
        Ok(Self { width, height, samples })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }
}

/// How [`partition`] treats images whose sides are not multiples of the block size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeMode {
    /// Reject the image.
    #[default]
    Strict,
    /// Pad right and bottom by repeating the last column / row.
    Replicate,
}

/// Blocks of an image in raster order, each a row-major `B*B` real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid {
    pub block_size: usize,
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub blocks: Vec<Vec<f64>>,
}

impl BlockGrid {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// Number of blocks along a side of `len` pixels, rounding up.
pub fn blocks_along(len: usize, block_size: usize) -> usize {
    len.div_ceil(block_size)
}

fn skip_ws_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            c if c.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
}

fn header_uint(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u32> {
    skip_ws_and_comments(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::PgmHeader(format!("missing {what}")));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::PgmHeader(format!("{what} out of range")))
}

/// Parses a binary (P5) PGM with maxval 255.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::PgmMagic);
    }
    let mut pos = 2;
    if pos >= bytes.len() || !(bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
        return Err(Error::PgmMagic);
    }
    let width = header_uint(bytes, &mut pos, "width")? as usize;
    let height = header_uint(bytes, &mut pos, "height")? as usize;
    let maxval = header_uint(bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(Error::PgmMaxval(maxval));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(c) if c.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::PgmHeader("missing separator after maxval".into())),
    }
    if width == 0 || height == 0 {
        return Err(Error::PgmHeader(format!("zero dimension {width}x{height}")));
    }
    let expected = width * height;
    let found = bytes.len() - pos;
    if found < expected {
        return Err(Error::PgmTruncated { expected, found });
    }
    GrayImage::new(width, height, bytes[pos..pos + expected].to_vec())
}

pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.samples);
    out
}

/// Splits `img` into non-overlapping `block_size` x `block_size` blocks in raster order.
pub fn partition(img: &GrayImage, block_size: usize, mode: EdgeMode) -> Result<BlockGrid> {
    if block_size == 0 {
        return Err(Error::Geometry("block size must be positive".into()));
    }
    let divisible = img.width.is_multiple_of(block_size) && img.height.is_multiple_of(block_size);
    if !divisible && mode == EdgeMode::Strict {
        return Err(Error::Geometry(format!(
            "{}x{} image is not a multiple of block size {block_size}",
            img.width, img.height
        )));
    }
    let blocks_x = blocks_along(img.width, block_size);
    let blocks_y = blocks_along(img.height, block_size);
    let mut blocks = Vec::with_capacity(blocks_x * blocks_y);
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            let mut block = Vec::with_capacity(block_size * block_size);
            for dy in 0..block_size {
                let y = (by * block_size + dy).min(img.height - 1);
                for dx in 0..block_size {
                    let x = (bx * block_size + dx).min(img.width - 1);
                    block.push(f64::from(img.get(x, y)));
                }
            }
            blocks.push(block);
        }
    }
    Ok(BlockGrid {
        block_size,
        blocks_x,
        blocks_y,
        blocks,
    })
}

/// Inverse of [`partition`]: writes blocks back, cropping any padding, and
/// rounds (half away from zero) and clamps real values to `[0, 255]`.
pub fn assemble(grid: &BlockGrid, width: usize, height: usize) -> Result<GrayImage> {
    let b = grid.block_size;
    if b == 0
        || width == 0
        || height == 0
        || grid.blocks_x != blocks_along(width, b)
        || grid.blocks_y != blocks_along(height, b)
        || grid.blocks.len() != grid.blocks_x * grid.blocks_y
    {
        return Err(Error::Geometry(format!(
            "{}x{} grid of {b}-blocks does not cover a {width}x{height} image",
            grid.blocks_x, grid.blocks_y
        )));
    }
    if let Some(bad) = grid.blocks.iter().find(|blk| blk.len() != b * b) {
        return Err(Error::LengthMismatch {
            expected: b * b,
            actual: bad.len(),
        });
    }
    let mut samples = vec![0u8; width * height];
    for (j, block) in grid.blocks.iter().enumerate() {
        let (bx, by) = (j % grid.blocks_x, j / grid.blocks_x);
        for dy in 0..b {
            let y = by * b + dy;
            if y >= height {
                break;
            }
            for dx in 0..b {
                let x = bx * b + dx;
                if x >= width {
                    break;
                }
                samples[y * width + x] = to_pixel(block[dy * b + dx]);
            }
        }
    }
    GrayImage::new(width, height, samples)
}

fn to_pixel(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    v.round().clamp(0.0, 255.0) as u8
}
