//! Block measurement matrix generation and per-block measurement.

use crate::error::{Error, Result};
use crate::rng::NormalStream;

const DEGENERATE_NORM: f64 = 1e-12;

/// Row-orthonormal Gaussian matrix shared by every block of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    rows: usize,
    cols: usize,
    seed: u64,
    data: Vec<f64>,
}

impl MeasurementMatrix {
    /// Draws `rows * block_size^2` standard normals in row-major order from
    /// the seeded stream, then orthonormalizes the rows with two passes of
    /// modified Gram-Schmidt. A row whose residual collapses is redrawn from
    /// the same stream.
    pub fn generate(seed: u64, rows: usize, block_size: usize) -> Result<Self> {
        let cols = block_size * block_size;
        if rows == 0 || rows > cols {
            return Err(Error::InvalidParameter(format!(
                "measurements per block must be in 1..={cols}, got {rows}"
            )));
        }
        let mut normals = NormalStream::new(seed);
        let mut data: Vec<f64> = (0..rows * cols).map(|_| normals.next_normal()).collect();

        for i in 0..rows {
            loop {
                let (done, row) = data.split_at_mut(i * cols);
                let row = &mut row[..cols];
                for _pass in 0..2 {
                    for k in 0..i {
                        let q = &done[k * cols..(k + 1) * cols];
                        let proj = dot(row, q);
                        for (r, qv) in row.iter_mut().zip(q) {
                            *r -= proj * qv;
                        }
                    }
                }
                let norm = dot(row, row).sqrt();
                if norm >= DEGENERATE_NORM {
                    row.iter_mut().for_each(|r| *r /= norm);
                    break;
                }
                row.iter_mut().for_each(|r| *r = normals.next_normal());
            }
        }
        Ok(Self { rows, cols, seed, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn subrate(&self) -> f64 {
        self.rows as f64 / self.cols as f64
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.data[m * self.cols..(m + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    /// `y = Phi x`.
    pub fn measure(&self, block: &[f64]) -> Result<Vec<f64>> {
        if block.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                actual: block.len(),
            });
        }
        Ok((0..self.rows).map(|m| dot(self.row(m), block)).collect())
    }

    /// `x = Phi^T y`, the minimum-norm preimage of `y`.
    pub fn backproject(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::LengthMismatch {
                expected: self.rows,
                actual: y.len(),
            });
        }
        let mut x = vec![0.0; self.cols];
        for (m, &ym) in y.iter().enumerate() {
            for (xv, phi) in x.iter_mut().zip(self.row(m)) {
                *xv += ym * phi;
            }
        }
        Ok(x)
    }

    /// Little-endian serialization of the entries, for reproducibility checks.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.data.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Measurements per block for a target subrate: `round(subrate * B^2)`, at least one.
pub fn measurements_for_subrate(subrate: f64, block_size: usize) -> Result<usize> {
    if !(subrate > 0.0 && subrate <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "subrate must be in (0, 1], got {subrate}"
        )));
    }
    let cols = block_size * block_size;
    Ok(((subrate * cols as f64).round() as usize).clamp(1, cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xoshiro256pp;

    fn gram_error(m: &MeasurementMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..m.rows() {
            for k in 0..m.rows() {
                let expect = if i == k { 1.0 } else { 0.0 };
                worst = worst.max((dot(m.row(i), m.row(k)) - expect).abs());
            }
        }
        worst
    }

    // Partial-pivot LU determinant, independent of the Gram-Schmidt path.
    fn lu_det(mut a: Vec<f64>, n: usize) -> f64 {
        let mut det = 1.0;
        for c in 0..n {
            let p = (c..n)
                .max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs()))
                .unwrap();
            if p != c {
                for k in 0..n {
                    a.swap(c * n + k, p * n + k);
                }
                det = -det;
            }
            let piv = a[c * n + c];
            det *= piv;
            for r in c + 1..n {
                let f = a[r * n + c] / piv;
                for k in c..n {
                    a[r * n + k] -= f * a[c * n + k];
                }
            }
        }
        det
    }

    #[test]
    fn rows_are_orthonormal() {
        let m = MeasurementMatrix::generate(7, 3, 4).unwrap();
        assert!(gram_error(&m) < 1e-9);
    }

    #[test]
    fn regeneration_is_identical() {
        let a = MeasurementMatrix::generate(7, 3, 4).unwrap();
        let b = MeasurementMatrix::generate(7, 3, 4).unwrap();
        assert_eq!(a.to_le_bytes(), b.to_le_bytes());
        let c = MeasurementMatrix::generate(8, 3, 4).unwrap();
        assert_ne!(a.to_le_bytes(), c.to_le_bytes());
    }

    #[test]
    fn square_matrix_has_unit_determinant() {
        let m = MeasurementMatrix::generate(7, 16, 4).unwrap();
        let det = lu_det(m.entries().to_vec(), 16);
        assert!((det.abs() - 1.0).abs() < 1e-6, "det = {det}");
    }

    #[test]
    fn rejects_bad_row_counts() {
        assert!(MeasurementMatrix::generate(1, 0, 4).is_err());
        assert!(MeasurementMatrix::generate(1, 17, 4).is_err());
    }

    #[test]
    fn measure_examples() {
        let m = MeasurementMatrix::generate(3, 5, 4).unwrap();
        assert!(m.measure(&[0.0; 16]).unwrap().iter().all(|&v| v == 0.0));

        let x = m.backproject(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let y = m.measure(&x).unwrap();
        for (i, v) in y.iter().enumerate() {
            let e = if i == 0 { 1.0 } else { 0.0 };
            assert!((v - e).abs() < 1e-9);
        }
        assert!(matches!(m.measure(&[0.0; 15]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(m.backproject(&[0.0; 4]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn square_case_is_an_isometry_and_invertible() {
        let m = MeasurementMatrix::generate(11, 16, 4).unwrap();
        let mut r = Xoshiro256pp::seed_from_u64(5);
        let x: Vec<f64> = (0..16).map(|_| r.next_open01() * 255.0).collect();
        let y = m.measure(&x).unwrap();
        let nx = dot(&x, &x).sqrt();
        let ny = dot(&y, &y).sqrt();
        assert!((nx - ny).abs() < 1e-9);
        let back = m.backproject(&y).unwrap();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn backprojection_is_a_projection() {
        let m = MeasurementMatrix::generate(2, 40, 8).unwrap();
        let mut r = Xoshiro256pp::seed_from_u64(6);
        let x: Vec<f64> = (0..64).map(|_| r.next_open01() * 255.0).collect();
        let y = m.measure(&x).unwrap();
        let y2 = m.measure(&m.backproject(&y).unwrap()).unwrap();
        for (a, b) in y.iter().zip(&y2) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(m.backproject(&vec![0.0; 40]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn subrate_to_rows() {
        assert_eq!(measurements_for_subrate(0.05, 16).unwrap(), 13);
        assert_eq!(measurements_for_subrate(1.0, 16).unwrap(), 256);
        assert!(measurements_for_subrate(0.0, 16).is_err());
        assert!(measurements_for_subrate(1.5, 16).is_err());
        assert!(measurements_for_subrate(f64::NAN, 16).is_err());
    }
}
