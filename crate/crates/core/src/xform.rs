//! Orthonormal DCT-II sparsifying basis.
//!
//! Signals are column-major vectorized `q x p` power maps. In separable mode
//! the transform is `Psi = Psi_p kron Psi_q`: a length-`q` DCT down every
//! column followed by a length-`p` DCT along every row. Vector mode applies
//! a single length-`n` DCT to the vectorized map as-is.
//!
//! Transforms are direct matrix products against precomputed cosine tables.
//! The sizes involved are a few hundred points, so no fast algorithm is used.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DctMode {
    Vector1d,
    /// Factor sizes `(q, p)`: rows and columns of the underlying map.
    Separable2d {
        q: usize,
        p: usize,
    },
}

/// Row-major orthonormal DCT-II matrix of size `n x n`.
///
/// `C[k][m] = c_k * cos(pi * (2m + 1) * k / (2n))`, with `c_0 = sqrt(1/n)`
/// and `c_k = sqrt(2/n)` otherwise.
pub fn dct_matrix(n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    let nf = n as f64;
    for k in 0..n {
        let scale = if k == 0 {
            (1.0 / nf).sqrt()
        } else {
            (2.0 / nf).sqrt()
        };
        for m in 0..n {
            c[k * n + m] = scale * (PI * (2 * m + 1) as f64 * k as f64 / (2.0 * nf)).cos();
        }
    }
    c
}

#[derive(Debug, Clone)]
pub struct DctBasis {
    n: usize,
    mode: DctMode,
    // Vector1d: one table of size n. Separable2d: tables for q then p.
    tables: Vec<Vec<f64>>,
}

impl DctBasis {
    pub fn vector(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("DCT length must be positive"));
        }
        Ok(Self {
            n,
            mode: DctMode::Vector1d,
            tables: vec![dct_matrix(n)],
        })
    }

    pub fn separable(q: usize, p: usize) -> Result<Self> {
        if q == 0 || p == 0 {
            return Err(Error::invalid("DCT factor sizes must be positive"));
        }
        Ok(Self {
            n: q * p,
            mode: DctMode::Separable2d { q, p },
            tables: vec![dct_matrix(q), dct_matrix(p)],
        })
    }

    pub fn new(mode: DctMode, n: usize) -> Result<Self> {
        match mode {
            DctMode::Vector1d => Self::vector(n),
            DctMode::Separable2d { q, p } => {
                if q * p != n {
                    return Err(Error::invalid(format!(
                        "factor sizes {q}x{p} do not give n = {n}"
                    )));
                }
                Self::separable(q, p)
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> DctMode {
        self.mode
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::invalid(format!(
                "vector length {len} does not match DCT length {}",
                self.n
            )));
        }
        Ok(())
    }

    /// `x_hat = Psi * x`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let mut out = vec![0.0; self.n];
        self.apply(x, &mut out, false);
        Ok(out)
    }

    /// `x = Psi^T * x_hat`.
    pub fn inverse(&self, x_hat: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x_hat.len())?;
        let mut out = vec![0.0; self.n];
        self.apply(x_hat, &mut out, true);
        Ok(out)
    }

    /// Length-checked-by-caller transform into `out`.
    pub(crate) fn apply(&self, input: &[f64], out: &mut [f64], transpose: bool) {
        match self.mode {
            DctMode::Vector1d => matvec(&self.tables[0], self.n, input, 1, out, 1, transpose),
            DctMode::Separable2d { q, p } => {
                let mut tmp = vec![0.0; self.n];
                // Columns are contiguous (stride 1), rows have stride q.
                for col in 0..p {
                    let s = col * q;
                    matvec(
                        &self.tables[0],
                        q,
                        &input[s..s + q],
                        1,
                        &mut tmp[s..s + q],
                        1,
                        transpose,
                    );
                }
                for row in 0..q {
                    matvec(
                        &self.tables[1],
                        p,
                        &tmp[row..],
                        q,
                        &mut out[row..],
                        q,
                        transpose,
                    );
                }
            }
        }
    }
}

/// `y = C x` (or `C^T x`) for a row-major square `C`, with strided access.
fn matvec(
    c: &[f64],
    n: usize,
    x: &[f64],
    x_stride: usize,
    y: &mut [f64],
    y_stride: usize,
    transpose: bool,
) {
    for k in 0..n {
        let mut acc = 0.0;
        if transpose {
            for m in 0..n {
                acc += c[m * n + k] * x[m * x_stride];
            }
        } else {
            let row = &c[k * n..(k + 1) * n];
            for m in 0..n {
                acc += row[m] * x[m * x_stride];
            }
        }
        y[k * y_stride] = acc;
    }
}

pub fn dct_forward(basis: &DctBasis, x: &[f64]) -> Result<Vec<f64>> {
    basis.forward(x)
}

pub fn dct_inverse(basis: &DctBasis, x_hat: &[f64]) -> Result<Vec<f64>> {
    basis.inverse(x_hat)
}

/// Share of total energy held by the `ceil(fraction * n)` largest-magnitude
/// coefficients.
pub fn energy_compaction(x_hat: &[f64], fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "fraction {fraction} outside (0, 1]"
        )));
    }
    let mut energy: Vec<f64> = x_hat.iter().map(|v| v * v).collect();
    let total: f64 = energy.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("coefficient vector has no energy"));
    }
    energy.sort_by(|a, b| b.total_cmp(a));
    let keep = ((fraction * energy.len() as f64).ceil() as usize).min(energy.len());
    let kept: f64 = energy[..keep].iter().sum();
    Ok((kept / total).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_is_dc_only() {
        let basis = DctBasis::vector(8).unwrap();
        let c = 2.5;
        let xh = basis.forward(&[c; 8]).unwrap();
        assert!((xh[0] - c * 8f64.sqrt()).abs() < 1e-12);
        for v in &xh[1..] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn dc_basis_function_inverts_to_ones() {
        let basis = DctBasis::vector(6).unwrap();
        let mut xh = vec![0.0; 6];
        xh[0] = 6f64.sqrt();
        for v in basis.inverse(&xh).unwrap() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn four_point_against_explicit_matrix() {
        // Hand-built 4x4 DCT-II, written out independently of dct_matrix.
        let x = [1.0, 2.0, 3.0, 4.0];
        let mut expected = [0.0; 4];
        for (k, e) in expected.iter_mut().enumerate() {
            let ck = if k == 0 { 0.5 } else { 0.5f64.sqrt() };
            *e = ck
                * x.iter()
                    .enumerate()
                    .map(|(m, xm)| xm * ((2 * m + 1) as f64 * k as f64 * PI / 8.0).cos())
                    .sum::<f64>();
        }
        let got = DctBasis::vector(4).unwrap().forward(&x).unwrap();
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() < 1e-12);
        }
        assert!((got[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_rejected() {
        let basis = DctBasis::separable(3, 4).unwrap();
        assert!(basis.forward(&[0.0; 11]).is_err());
        assert!(basis.inverse(&[0.0; 13]).is_err());
        assert!(DctBasis::new(DctMode::Separable2d { q: 3, p: 4 }, 10).is_err());
        assert!(DctBasis::vector(0).is_err());
    }

    #[test]
    fn compaction_edges() {
        let mut one_hot = vec![0.0; 10];
        one_hot[3] = -2.0;
        assert_eq!(energy_compaction(&one_hot, 0.1).unwrap(), 1.0);
        assert_eq!(energy_compaction(&[1.0, -3.0, 0.5], 1.0).unwrap(), 1.0);
        assert!(energy_compaction(&[0.0; 4], 0.5).is_err());
        assert!(energy_compaction(&[1.0], 0.0).is_err());
        let half = energy_compaction(&[1.0, 1.0, 1.0, 1.0], 0.5).unwrap();
        assert!((half - 0.5).abs() < 1e-15);
    }
}
