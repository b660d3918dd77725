//! Zero-order entropy of quantization indices as a bitrate estimate.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Histogram = HashMap<i32, u64>;

pub fn histogram<I: IntoIterator<Item = i32>>(indices: I) -> Histogram {
    let mut h = Histogram::new();
    for i in indices {
        *h.entry(i).or_insert(0) += 1;
    }
    h
}

/// Shannon entropy `-sum p log2 p` of a histogram, in bits per symbol.
pub fn entropy_of(hist: &Histogram) -> Result<f64> {
    let total: u64 = hist.values().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("entropy of an empty index set".into()));
    }
    let n = total as f64;
    let h: f64 = hist
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    // a single symbol gives -1 * log2(1) = -0.0
    Ok(h.max(0.0))
}

/// Entropy of the empirical distribution of all indices, pooled.
pub fn zero_order_entropy<I: IntoIterator<Item = i32>>(indices: I) -> Result<f64> {
    entropy_of(&histogram(indices))
}

pub fn bpp_from_entropy(bits_per_index: f64, total_indices: usize, pixel_count: usize) -> Result<f64> {
    if pixel_count == 0 {
        return Err(Error::InvalidParameter("zero pixels".into()));
    }
    Ok(bits_per_index * total_indices as f64 / pixel_count as f64)
}
