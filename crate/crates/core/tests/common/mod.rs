//! Independent reference constructions shared by the integration suites.
//!
//! Nothing here calls into the transform or operator code under test: the
//! DCT matrix, Kronecker products and the LASSO reference solver are built
//! from their textbook definitions.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Row-major dense matrix.
#[derive(Debug, Clone)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn mul(&self, b: &Mat) -> Mat {
        assert_eq!(self.cols, b.rows);
        let mut out = Mat::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                for j in 0..b.cols {
                    out.data[i * b.cols + j] += a * b.at(k, j);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j) * x[j]).sum())
            .collect()
    }

    pub fn t(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.at(i, j));
            }
        }
        out
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }
}

/// Orthonormal DCT-II matrix straight from the definition.
pub fn dct2(n: usize) -> Mat {
    let mut m = Mat::zeros(n, n);
    for k in 0..n {
        let ck = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        for j in 0..n {
            m.set(
                k,
                j,
                ck * (PI * (2 * j + 1) as f64 * k as f64 / (2 * n) as f64).cos(),
            );
        }
    }
    m
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let mut out = Mat::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out.set(i * b.rows + k, j * b.cols + l, a.at(i, j) * b.at(k, l));
                }
            }
        }
    }
    out
}

/// `S1` (`p x m1`) and `S2` (`m2 x q`) from index lists.
pub fn selections(p: usize, q: usize, tx: &[usize], rx: &[usize]) -> (Mat, Mat) {
    let mut s1 = Mat::zeros(p, tx.len());
    for (k, &i) in tx.iter().enumerate() {
        s1.set(i, k, 1.0);
    }
    let mut s2 = Mat::zeros(rx.len(), q);
    for (k, &j) in rx.iter().enumerate() {
        s2.set(k, j, 1.0);
    }
    (s1, s2)
}

/// Explicit `(S1^T kron S2) * Psi^{-1}` for the separable basis
/// `Psi = Psi_p kron Psi_q`.
pub fn explicit_operator(p: usize, q: usize, tx: &[usize], rx: &[usize]) -> Mat {
    let (s1, s2) = selections(p, q, tx, rx);
    let a = kron(&s1.t(), &s2);
    let psi = kron(&dct2(p), &dct2(q));
    a.mul(&psi.t())
}

pub fn lasso_objective(b: &Mat, y: &[f64], x: &[f64], lambda: f64) -> f64 {
    let bx = b.mul_vec(x);
    0.5 * bx.iter().zip(y).map(|(a, c)| (a - c).powi(2)).sum::<f64>()
        + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
}

/// Cyclic coordinate descent on an explicit matrix, run until a full sweep
/// moves no coordinate by more than `1e-15` (or `max_sweeps`).
pub fn coordinate_descent(b: &Mat, y: &[f64], lambda: f64, max_sweeps: usize) -> Vec<f64> {
    let n = b.cols;
    let col_sq: Vec<f64> = (0..n)
        .map(|j| (0..b.rows).map(|i| b.at(i, j).powi(2)).sum())
        .collect();
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = y.to_vec();
    for _ in 0..max_sweeps {
        let mut max_move = 0.0f64;
        for j in 0..n {
            if col_sq[j] == 0.0 {
                continue;
            }
            let rho: f64 = (0..b.rows).map(|i| b.at(i, j) * r[i]).sum::<f64>() + col_sq[j] * x[j];
            let new = if rho > lambda {
                (rho - lambda) / col_sq[j]
            } else if rho < -lambda {
                (rho + lambda) / col_sq[j]
            } else {
                0.0
            };
            let delta = new - x[j];
            if delta != 0.0 {
                for (i, ri) in r.iter_mut().enumerate() {
                    *ri -= b.at(i, j) * delta;
                }
                x[j] = new;
                max_move = max_move.max(delta.abs());
            }
        }
        if max_move < 1e-15 {
            break;
        }
    }
    x
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
