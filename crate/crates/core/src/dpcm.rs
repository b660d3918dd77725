//! Measurement-domain DPCM with a uniform midtread scalar quantizer.
//!
//! Each block's measurements are predicted by the reconstructed measurements
//! of the previous block (zero before the first block). The residual is
//! quantized, and the encoder reconstructs exactly as the decoder does so both
//! predictors stay bit-identical.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    step: f64,
}

impl Quantizer {
    pub fn new(step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quantizer step must be positive and finite, got {step}"
            )));
        }
        Ok(Self { step })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `sign(d) * floor(|d| / q + 1/2)`.
    pub fn quantize(&self, d: f64) -> Result<i32> {
        if !d.is_finite() {
            return Err(Error::InvalidParameter(format!("cannot quantize {d}")));
        }
        let mag = (d.abs() / self.step + 0.5).floor();
        if mag > i32::MAX as f64 {
            return Err(Error::InvalidParameter(format!(
                "residual {d} overflows the index range at step {}",
                self.step
            )));
        }
        let mag = mag as i32;
        Ok(if d < 0.0 { -mag } else { mag })
    }

    pub fn dequantize(&self, index: i32) -> f64 {
        f64::from(index) * self.step
    }
}

/// One-block delay buffer holding the previous reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopState {
    prev: Vec<f64>,
}

impl LoopState {
    pub fn new(len: usize) -> Self {
        Self { prev: vec![0.0; len] }
    }

    pub fn prediction(&self) -> &[f64] {
        &self.prev
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.prev.len() {
            return Err(Error::LengthMismatch {
                expected: self.prev.len(),
                actual: len,
            });
        }
        Ok(())
    }
}

/// Quantizes one block's prediction residual and advances the loop.
/// Returns the indices; the state then holds this block's reconstruction.
pub fn encode_block(y: &[f64], state: &mut LoopState, q: &Quantizer) -> Result<Vec<i32>> {
    state.check(y.len())?;
    let mut indices = Vec::with_capacity(y.len());
    for (ym, prev) in y.iter().zip(state.prev.iter_mut()) {
        let i = q.quantize(ym - *prev)?;
        *prev += q.dequantize(i);
        indices.push(i);
    }
    Ok(indices)
}

/// Reconstructs one block from its indices and advances the loop.
pub fn decode_block(indices: &[i32], state: &mut LoopState, q: &Quantizer) -> Result<Vec<f64>> {
    state.check(indices.len())?;
    for (&i, prev) in indices.iter().zip(state.prev.iter_mut()) {
        *prev += q.dequantize(i);
    }
    Ok(state.prev.clone())
}
