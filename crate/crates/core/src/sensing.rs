//! Random beam-pair subsampling and the matrix-free measurement operator.
//!
//! The transmitter probes `m1` randomly chosen beams and the receiver sweeps
//! one shared set of `m2` randomly chosen combiners for every probe, so the
//! sampled powers form the submatrix `Y = S2 * Phi * S1`. With column-major
//! vectorization this is `vec(Y) = (S1^T kron S2) vec(Phi)`, and composing
//! with the inverse DCT gives the operator the solver works against.

use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::channelsynth::PowerMap;
use crate::error::{Error, Result};
use crate::xform::DctBasis;

/// Which TX and RX beams get measured.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePlan {
    tx_indices: Vec<usize>,
    rx_indices: Vec<usize>,
    p: usize,
    q: usize,
}

impl SamplePlan {
    pub fn new(tx_indices: Vec<usize>, rx_indices: Vec<usize>, p: usize, q: usize) -> Result<Self> {
        check_index_set("tx", &tx_indices, p)?;
        check_index_set("rx", &rx_indices, q)?;
        Ok(Self {
            tx_indices,
            rx_indices,
            p,
            q,
        })
    }

    /// Every beam pair, in codebook order.
    pub fn full(p: usize, q: usize) -> Result<Self> {
        Self::new((0..p).collect(), (0..q).collect(), p, q)
    }

    pub fn tx_indices(&self) -> &[usize] {
        &self.tx_indices
    }

    pub fn rx_indices(&self) -> &[usize] {
        &self.rx_indices
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn m1(&self) -> usize {
        self.tx_indices.len()
    }

    pub fn m2(&self) -> usize {
        self.rx_indices.len()
    }

    /// Number of measurements `m = m1 * m2`.
    pub fn m(&self) -> usize {
        self.m1() * self.m2()
    }

    pub fn n(&self) -> usize {
        self.p * self.q
    }

    pub fn fraction(&self) -> f64 {
        self.m() as f64 / self.n() as f64
    }

    /// Column-major position of map entry `(rx, tx)`.
    fn map_offset(&self, k: usize, l: usize) -> usize {
        self.rx_indices[k] + self.tx_indices[l] * self.q
    }
}

fn check_index_set(label: &str, idx: &[usize], size: usize) -> Result<()> {
    if idx.is_empty() || idx.len() > size {
        return Err(Error::invalid(format!(
            "{label} selection has {} entries, need 1..={size}",
            idx.len()
        )));
    }
    let mut seen = vec![false; size];
    for &i in idx {
        if i >= size {
            return Err(Error::invalid(format!(
                "{label} index {i} out of range 0..{size}"
            )));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::invalid(format!("{label} index {i} repeated")));
        }
    }
    Ok(())
}

/// Uniform sampling without replacement of `m1` TX beams and `m2` RX beams.
/// Indices are returned in ascending order.
pub fn draw_plan<R: Rng + ?Sized>(
    rng: &mut R,
    p: usize,
    q: usize,
    m1: usize,
    m2: usize,
) -> Result<SamplePlan> {
    if m1 == 0 || m1 > p {
        return Err(Error::invalid(format!("m1 = {m1} must be in 1..={p}")));
    }
    if m2 == 0 || m2 > q {
        return Err(Error::invalid(format!("m2 = {m2} must be in 1..={q}")));
    }
    let mut tx = index::sample(rng, p, m1).into_vec();
    let mut rx = index::sample(rng, q, m2).into_vec();
    tx.sort_unstable();
    rx.sort_unstable();
    SamplePlan::new(tx, rx, p, q)
}

/// Small dense real matrix, row-major. Used for explicit reference
/// constructions; the solver never builds one.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }
}

/// Binary selection matrices `S1` (`p x m1`) and `S2` (`m2 x q`).
pub fn selection_matrices(plan: &SamplePlan) -> (DenseMatrix, DenseMatrix) {
    let mut s1 = DenseMatrix::zeros(plan.p, plan.m1());
    for (k, &i) in plan.tx_indices.iter().enumerate() {
        s1.set(i, k, 1.0);
    }
    let mut s2 = DenseMatrix::zeros(plan.m2(), plan.q);
    for (k, &j) in plan.rx_indices.iter().enumerate() {
        s2.set(k, j, 1.0);
    }
    (s1, s2)
}

/// Sampled powers plus the plan that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    /// `m2 x m1`, row-major: `y[k * m1 + l]` is RX sample `k`, TX sample `l`.
    y: Vec<f64>,
    plan: SamplePlan,
    noise_sigma: f64,
}

impl MeasurementSet {
    pub fn plan(&self) -> &SamplePlan {
        &self.plan
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.y[k * self.plan.m1() + l]
    }

    /// `(m2, m1)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.plan.m2(), self.plan.m1())
    }

    /// Column-major `vec(Y)`, the solver's measurement vector.
    pub fn vec(&self) -> Vec<f64> {
        let (m2, m1) = self.shape();
        let mut out = vec![0.0; m2 * m1];
        for k in 0..m2 {
            for l in 0..m1 {
                out[k + l * m2] = self.get(k, l);
            }
        }
        out
    }

    /// `rx_codebook_idx,tx_codebook_idx,power_linear`, one row per sample.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("rx_codebook_idx,tx_codebook_idx,power_linear\n");
        for (k, &rx) in self.plan.rx_indices.iter().enumerate() {
            for (l, &tx) in self.plan.tx_indices.iter().enumerate() {
                let _ = writeln!(out, "{rx},{tx},{}", self.get(k, l));
            }
        }
        out
    }
}

/// Reads the planned entries of `phi`, adding `N(0, sigma^2)` noise per entry
/// and clamping at zero. With `noise_sigma == 0` no randomness is consumed.
pub fn sample<R: Rng + ?Sized>(
    phi: &PowerMap,
    plan: &SamplePlan,
    noise_sigma: f64,
    rng: &mut R,
) -> Result<MeasurementSet> {
    if plan.p != phi.p() || plan.q != phi.q() {
        return Err(Error::invalid(format!(
            "plan is for {}x{} but map is {}x{}",
            plan.q,
            plan.p,
            phi.q(),
            phi.p()
        )));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::invalid(format!(
            "noise_sigma must be >= 0, got {noise_sigma}"
        )));
    }
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut y = Vec::with_capacity(plan.m());
    for &rx in &plan.rx_indices {
        for &tx in &plan.tx_indices {
            let eta = if noise_sigma > 0.0 {
                noise.sample(rng)
            } else {
                0.0
            };
            y.push((phi.get(rx, tx) + eta).max(0.0));
        }
    }
    Ok(MeasurementSet {
        y,
        plan: plan.clone(),
        noise_sigma,
    })
}

/// `A * Psi^{-1}` applied without forming either matrix.
#[derive(Debug, Clone, Copy)]
pub struct MeasurementOperator<'a> {
    plan: &'a SamplePlan,
    basis: &'a DctBasis,
}

impl<'a> MeasurementOperator<'a> {
    pub fn new(plan: &'a SamplePlan, basis: &'a DctBasis) -> Result<Self> {
        if basis.n() != plan.n() {
            return Err(Error::invalid(format!(
                "basis length {} does not match plan size {}",
                basis.n(),
                plan.n()
            )));
        }
        Ok(Self { plan, basis })
    }

    pub fn plan(&self) -> &SamplePlan {
        self.plan
    }

    pub fn basis(&self) -> &DctBasis {
        self.basis
    }

    /// Rows of the operator (measurements).
    pub fn m(&self) -> usize {
        self.plan.m()
    }

    /// Columns of the operator (coefficients).
    pub fn n(&self) -> usize {
        self.plan.n()
    }

    /// `vec(S2 * unvec(Psi^T x_hat) * S1)`.
    pub fn forward(&self, x_hat: &[f64]) -> Result<Vec<f64>> {
        if x_hat.len() != self.n() {
            return Err(Error::invalid(format!(
                "coefficient vector has length {}, expected {}",
                x_hat.len(),
                self.n()
            )));
        }
        let mut phi = vec![0.0; self.n()];
        let mut out = vec![0.0; self.m()];
        self.forward_into(x_hat, &mut phi, &mut out);
        Ok(out)
    }

    /// Exact adjoint: scatter `y` into an `n`-vector, then apply `Psi`.
    pub fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.m() {
            return Err(Error::invalid(format!(
                "measurement vector has length {}, expected {}",
                y.len(),
                self.m()
            )));
        }
        let mut scratch = vec![0.0; self.n()];
        let mut out = vec![0.0; self.n()];
        self.adjoint_into(y, &mut scratch, &mut out);
        Ok(out)
    }

    pub(crate) fn forward_into(&self, x_hat: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        self.basis.apply(x_hat, scratch, true);
        let m2 = self.plan.m2();
        for l in 0..self.plan.m1() {
            for k in 0..m2 {
                out[k + l * m2] = scratch[self.plan.map_offset(k, l)];
            }
        }
    }

    pub(crate) fn adjoint_into(&self, y: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        scratch.iter_mut().for_each(|v| *v = 0.0);
        let m2 = self.plan.m2();
        for l in 0..self.plan.m1() {
            for k in 0..m2 {
                scratch[self.plan.map_offset(k, l)] = y[k + l * m2];
            }
        }
        self.basis.apply(scratch, out, false);
    }

    /// Power-iteration estimate of the spectral norm, started from a fixed
    /// all-ones vector so the result is deterministic.
    pub fn estimate_norm(&self, iters: usize) -> f64 {
        let n = self.n();
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut scratch = vec![0.0; n];
        let mut av = vec![0.0; self.m()];
        let mut w = vec![0.0; n];
        let mut sigma = 0.0;
        for _ in 0..iters.max(1) {
            self.forward_into(&v, &mut scratch, &mut av);
            self.adjoint_into(&av, &mut scratch, &mut w);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            sigma = norm.sqrt();
            v.iter_mut().zip(&w).for_each(|(vi, wi)| *vi = wi / norm);
        }
        sigma
    }
}

pub fn forward_apply(plan: &SamplePlan, basis: &DctBasis, x_hat: &[f64]) -> Result<Vec<f64>> {
    MeasurementOperator::new(plan, basis)?.forward(x_hat)
}

pub fn adjoint_apply(plan: &SamplePlan, basis: &DctBasis, y: &[f64]) -> Result<Vec<f64>> {
    MeasurementOperator::new(plan, basis)?.adjoint(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn map_from_fn(q: usize, p: usize, f: impl Fn(usize, usize) -> f64) -> PowerMap {
        let mut v = Vec::new();
        for j in 0..q {
            for i in 0..p {
                v.push(f(j, i));
            }
        }
        PowerMap::from_row_major(q, p, v).unwrap()
    }

    #[test]
    fn default_quarter_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let plan = draw_plan(&mut rng, 19, 36, 9, 19).unwrap();
        assert_eq!(plan.m(), 171);
        assert_eq!(plan.n(), 684);
        assert_eq!(plan.fraction(), 0.25);
    }

    #[test]
    fn full_draw_covers_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let plan = draw_plan(&mut rng, 4, 5, 4, 5).unwrap();
        assert_eq!(plan, SamplePlan::full(4, 5).unwrap());
        assert_eq!(plan.fraction(), 1.0);
    }

    #[test]
    fn draw_is_deterministic_and_checked() {
        let a = draw_plan(&mut ChaCha8Rng::seed_from_u64(9), 19, 36, 9, 19).unwrap();
        let b = draw_plan(&mut ChaCha8Rng::seed_from_u64(9), 19, 36, 9, 19).unwrap();
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(draw_plan(&mut rng, 3, 3, 4, 1).is_err());
        assert!(draw_plan(&mut rng, 3, 3, 1, 4).is_err());
        assert!(draw_plan(&mut rng, 3, 3, 0, 1).is_err());
    }

    #[test]
    fn plan_rejects_duplicates() {
        assert!(SamplePlan::new(vec![0, 0], vec![1], 3, 3).is_err());
        assert!(SamplePlan::new(vec![3], vec![1], 3, 3).is_err());
    }

    #[test]
    fn single_tx_selection() {
        let plan = SamplePlan::new(vec![2], vec![0], 3, 1).unwrap();
        let (s1, _) = selection_matrices(&plan);
        assert_eq!((s1.rows, s1.cols), (3, 1));
        assert_eq!(s1.data, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn identity_plan_gives_identity() {
        let plan = SamplePlan::full(3, 2).unwrap();
        let (s1, s2) = selection_matrices(&plan);
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(s1.get(r, c), if r == c { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(s2.data, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn noiseless_sample_is_submatrix() {
        let phi = map_from_fn(5, 4, |j, i| (j * 10 + i) as f64);
        let plan = SamplePlan::new(vec![1, 3], vec![0, 2, 4], 4, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ms = sample(&phi, &plan, 0.0, &mut rng).unwrap();
        assert_eq!(ms.shape(), (3, 2));
        for (k, &rx) in plan.rx_indices().iter().enumerate() {
            for (l, &tx) in plan.tx_indices().iter().enumerate() {
                assert_eq!(ms.get(k, l), phi.get(rx, tx));
            }
        }
        let full = sample(&phi, &SamplePlan::full(4, 5).unwrap(), 0.0, &mut rng).unwrap();
        assert_eq!(full.vec(), phi.vec());
    }

    #[test]
    fn noisy_sample_reproducible_and_nonnegative() {
        let phi = map_from_fn(6, 5, |j, i| 0.01 * (j + i) as f64);
        let plan = SamplePlan::full(5, 6).unwrap();
        let a = sample(&phi, &plan, 0.05, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let b = sample(&phi, &plan, 0.05, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a, b);
        assert!(a.vec().iter().all(|v| *v >= 0.0));
        assert_ne!(a.vec(), phi.vec());
    }

    #[test]
    fn sample_dimension_mismatch() {
        let phi = map_from_fn(2, 2, |_, _| 1.0);
        let plan = SamplePlan::full(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample(&phi, &plan, 0.0, &mut rng).is_err());
        let ok = SamplePlan::full(2, 2).unwrap();
        assert!(sample(&phi, &ok, -1.0, &mut rng).is_err());
    }

    #[test]
    fn measurement_csv_rows() {
        let phi = map_from_fn(3, 3, |j, i| (j * 3 + i) as f64);
        let plan = SamplePlan::new(vec![0, 2], vec![1], 3, 3).unwrap();
        let ms = sample(&phi, &plan, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(
            ms.to_csv_string(),
            "rx_codebook_idx,tx_codebook_idx,power_linear\n1,0,3\n1,2,5\n"
        );
    }

    #[test]
    fn full_plan_operator_is_plain_dct() {
        let basis = DctBasis::separable(4, 3).unwrap();
        let plan = SamplePlan::full(3, 4).unwrap();
        let x: Vec<f64> = (0..12).map(|v| (v as f64).sin()).collect();
        let fwd = forward_apply(&plan, &basis, &x).unwrap();
        let inv = basis.inverse(&x).unwrap();
        let adj = adjoint_apply(&plan, &basis, &x).unwrap();
        let dct = basis.forward(&x).unwrap();
        for i in 0..12 {
            assert!((fwd[i] - inv[i]).abs() < 1e-14);
            assert!((adj[i] - dct[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let basis = DctBasis::separable(4, 3).unwrap();
        let plan = SamplePlan::new(vec![0, 2], vec![1, 3], 3, 4).unwrap();
        assert!(forward_apply(&plan, &basis, &[0.0; 12])
            .unwrap()
            .iter()
            .all(|v| *v == 0.0));
        assert!(adjoint_apply(&plan, &basis, &[0.0; 4])
            .unwrap()
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn operator_length_checks() {
        let basis = DctBasis::separable(4, 3).unwrap();
        let plan = SamplePlan::new(vec![0, 2], vec![1, 3], 3, 4).unwrap();
        assert!(forward_apply(&plan, &basis, &[0.0; 11]).is_err());
        assert!(adjoint_apply(&plan, &basis, &[0.0; 5]).is_err());
        let wrong = DctBasis::vector(10).unwrap();
        assert!(MeasurementOperator::new(&plan, &wrong).is_err());
    }

    #[test]
    fn norm_estimate_at_most_one() {
        let basis = DctBasis::separable(36, 19).unwrap();
        let plan = draw_plan(&mut ChaCha8Rng::seed_from_u64(4), 19, 36, 9, 19).unwrap();
        let op = MeasurementOperator::new(&plan, &basis).unwrap();
        let est = op.estimate_norm(50);
        assert!(est <= 1.0 + 1e-12, "{est}");
        assert!(est > 0.99, "{est}");
    }
}
