//! Synthetic channels and ground-truth power maps.
//!
//! Two generators are provided. The ray-sum route builds a narrowband
//! channel matrix from discrete paths and projects it onto a pair of
//! codebooks. The direct route draws a smooth multi-cluster map in the
//! beam-index domain without committing to any channel model, which is
//! closer to the dense, scattered indoor profiles the recovery targets.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;

use crate::arraygeom::{ula_steering, SteeringCodebook};
use crate::error::{Error, Result};

/// One propagation path: complex gain, departure and arrival azimuths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: Complex64,
    pub aod_deg: f64,
    pub aoa_deg: f64,
}

/// Sum-of-paths narrowband channel between a `t`-element transmitter and an
/// `r`-element receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterChannel {
    paths: Vec<Path>,
    t: usize,
    r: usize,
}

impl ClusterChannel {
    pub fn new(paths: Vec<Path>, t: usize, r: usize) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::invalid("channel needs at least one path"));
        }
        if t == 0 || r == 0 {
            return Err(Error::invalid("array sizes must be positive"));
        }
        for (idx, path) in paths.iter().enumerate() {
            for angle in [path.aod_deg, path.aoa_deg] {
                if !angle.is_finite() || !(-90.0..=90.0).contains(&angle) {
                    return Err(Error::invalid(format!(
                        "path {idx} angle {angle} deg outside [-90, 90]"
                    )));
                }
            }
            if !(path.gain.re.is_finite() && path.gain.im.is_finite()) {
                return Err(Error::invalid(format!("path {idx} gain is not finite")));
            }
        }
        let total: f64 = paths.iter().map(|p| p.gain.norm_sqr()).sum();
        if !(total > 0.0) {
            return Err(Error::invalid("total path power must be positive"));
        }
        Ok(Self { paths, t, r })
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn r(&self) -> usize {
        self.r
    }
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }
}

/// `H = sum_l g_l * a_r(aoa_l) * a_t(aod_l)^H`, shape `r x t`.
pub fn channel_matrix(ch: &ClusterChannel) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(ch.r, ch.t);
    for path in &ch.paths {
        // Angles were range-checked by the constructor.
        let a_r = ula_steering(path.aoa_deg, ch.r).expect("validated aoa");
        let a_t = ula_steering(path.aod_deg, ch.t).expect("validated aod");
        for (row, ar) in a_r.iter().enumerate() {
            for (col, at) in a_t.iter().enumerate() {
                h.data[row * ch.t + col] += path.gain * ar * at.conj();
            }
        }
    }
    h
}

/// Received power over every (RX beam, TX beam) pair.
///
/// Rows index the RX codebook (`q` of them), columns the TX codebook (`p`).
/// All entries are linear power and nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMap {
    q: usize,
    p: usize,
    values: Vec<f64>,
}

impl PowerMap {
    /// Row-major values, `values[rx * p + tx]`.
    pub fn from_row_major(q: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if q == 0 || p == 0 {
            return Err(Error::invalid("power map dimensions must be positive"));
        }
        if values.len() != q * p {
            return Err(Error::invalid(format!(
                "expected {} values for a {q}x{p} map, got {}",
                q * p,
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(format!(
                "power at rx {} tx {} is {} (must be finite and >= 0)",
                idx / p,
                idx % p,
                values[idx]
            )));
        }
        Ok(Self { q, p, values })
    }

    /// Inverse of [`PowerMap::vec`]. Negative entries are clamped to zero;
    /// the number clamped is returned alongside the map.
    pub fn from_vec_clamped(q: usize, p: usize, x: &[f64]) -> Result<(Self, usize)> {
        if x.len() != q * p {
            return Err(Error::invalid(format!(
                "vector length {} does not match {q}x{p}",
                x.len()
            )));
        }
        let mut clamped = 0;
        let mut values = vec![0.0; q * p];
        for i in 0..p {
            for j in 0..q {
                let v = x[j + i * q];
                values[j * p + i] = if v < 0.0 {
                    clamped += 1;
                    0.0
                } else {
                    v
                };
            }
        }
        Ok((Self::from_row_major(q, p, values)?, clamped))
    }

    /// Number of RX beams (rows).
    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of TX beams (columns).
    pub fn p(&self) -> usize {
        self.p
    }

    /// Total beam pairs `n = p * q`.
    pub fn n(&self) -> usize {
        self.p * self.q
    }

    pub fn get(&self, rx: usize, tx: usize) -> f64 {
        self.values[rx * self.p + tx]
    }

    pub fn row_major(&self) -> &[f64] {
        &self.values
    }

    /// Column-major vectorization: entry `(rx, tx)` lands at `rx + tx * q`.
    pub fn vec(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n()];
        for j in 0..self.q {
            for i in 0..self.p {
                x[j + i * self.q] = self.values[j * self.p + i];
            }
        }
        x
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_row_major(self.q, self.p, self.values.iter().map(|v| v * c).collect())
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Serializes to `rx_idx,tx_idx,power_linear`, row-major.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("rx_idx,tx_idx,power_linear\n");
        for j in 0..self.q {
            for i in 0..self.p {
                let _ = writeln!(out, "{j},{i},{}", self.get(j, i));
            }
        }
        out
    }
}

/// `values[j][i] = |w_j^H H f_i|^2`, the exhaustive-search ground truth.
pub fn power_map(
    h: &ComplexMatrix,
    tx: &SteeringCodebook,
    rx: &SteeringCodebook,
) -> Result<PowerMap> {
    if tx.n_elems() != h.cols() || rx.n_elems() != h.rows() {
        return Err(Error::invalid(format!(
            "channel is {}x{} but codebooks have r={} t={}",
            h.rows(),
            h.cols(),
            rx.n_elems(),
            tx.n_elems()
        )));
    }
    // Precompute H f_i for every TX beam, then project onto each w_j.
    let hf: Vec<Vec<Complex64>> = tx
        .vectors()
        .iter()
        .map(|f| {
            (0..h.rows())
                .map(|r| (0..h.cols()).map(|c| h.get(r, c) * f[c]).sum())
                .collect()
        })
        .collect();
    let (q, p) = (rx.len(), tx.len());
    let mut values = Vec::with_capacity(q * p);
    for w in rx.vectors() {
        for hfi in &hf {
            let s: Complex64 = w.iter().zip(hfi).map(|(wk, x)| wk.conj() * x).sum();
            values.push(s.norm_sqr());
        }
    }
    PowerMap::from_row_major(q, p, values)
}

/// Parameters of the direct multi-cluster map generator.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectMapParams {
    /// TX codebook size (columns).
    pub p: usize,
    /// RX codebook size (rows).
    pub q: usize,
    pub n_clusters: usize,
    /// Secondary clusters peak between `-dynamic_range_db` and
    /// `-0.25 * dynamic_range_db` relative to the dominant one.
    pub dynamic_range_db: f64,
    /// Uniform floor relative to the peak; `f64::NEG_INFINITY` disables it.
    pub floor_db: f64,
}

impl Default for DirectMapParams {
    fn default() -> Self {
        Self {
            p: 19,
            q: 36,
            n_clusters: 2,
            dynamic_range_db: 10.0,
            floor_db: -30.0,
        }
    }
}

/// Placement of one Gaussian cluster, in beam-index units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub rx_center: usize,
    pub tx_center: usize,
    pub rx_width: f64,
    pub tx_width: f64,
    pub level_db: f64,
}

/// Draws the cluster layout used by [`synth_power_map_direct`].
pub fn draw_blobs<R: Rng + ?Sized>(rng: &mut R, params: &DirectMapParams) -> Result<Vec<Blob>> {
    if params.n_clusters == 0 {
        return Err(Error::invalid("n_clusters must be at least 1"));
    }
    if !(params.dynamic_range_db > 0.0) {
        return Err(Error::invalid("dynamic_range_db must be positive"));
    }
    if params.p == 0 || params.q == 0 {
        return Err(Error::invalid("map dimensions must be positive"));
    }
    if params.floor_db.is_nan() || params.floor_db >= 0.0 {
        return Err(Error::invalid("floor_db must be below the peak (negative)"));
    }
    let mut blobs = Vec::with_capacity(params.n_clusters);
    for c in 0..params.n_clusters {
        let level_db = if c == 0 {
            0.0
        } else {
            -params.dynamic_range_db * rng.gen_range(0.25..=1.0)
        };
        blobs.push(Blob {
            rx_center: rng.gen_range(0..params.q),
            tx_center: rng.gen_range(0..params.p),
            rx_width: rng.gen_range(1.0..2.0),
            tx_width: rng.gen_range(1.0..2.0),
            level_db,
        });
    }
    Ok(blobs)
}

/// Renders blobs plus floor into a linear-power map.
pub fn render_blobs(p: usize, q: usize, blobs: &[Blob], floor_db: f64) -> Result<PowerMap> {
    let floor = 10f64.powf(floor_db / 10.0);
    let mut values = vec![floor; q * p];
    for b in blobs {
        let peak = 10f64.powf(b.level_db / 10.0);
        for j in 0..q {
            let dj = (j as f64 - b.rx_center as f64) / b.rx_width;
            for i in 0..p {
                let di = (i as f64 - b.tx_center as f64) / b.tx_width;
                values[j * p + i] += peak * (-0.5 * (dj * dj + di * di)).exp();
            }
        }
    }
    PowerMap::from_row_major(q, p, values)
}

/// Smooth multi-cluster map drawn directly in the beam-index domain.
///
/// One dominant Gaussian cluster at 0 dB, `n_clusters - 1` weaker clusters at
/// random centers, and a uniform floor `floor_db` below the peak. Fully
/// determined by the RNG state.
pub fn synth_power_map_direct<R: Rng + ?Sized>(
    rng: &mut R,
    params: &DirectMapParams,
) -> Result<PowerMap> {
    let blobs = draw_blobs(rng, params)?;
    render_blobs(params.p, params.q, &blobs, params.floor_db)
}

/// Random sum-of-paths channel: a unit-gain dominant path plus `n_paths - 1`
/// weaker paths 3 to 15 dB down with random phase. Angles are drawn
/// uniformly from the given spans (which must lie within [-90, 90]).
pub fn synth_cluster_channel<R: Rng + ?Sized>(
    rng: &mut R,
    t: usize,
    r: usize,
    n_paths: usize,
    aod_span: (f64, f64),
    aoa_span: (f64, f64),
) -> Result<ClusterChannel> {
    if n_paths == 0 {
        return Err(Error::invalid("n_paths must be at least 1"));
    }
    let draw = |rng: &mut R, (lo, hi): (f64, f64)| {
        if lo == hi {
            lo
        } else {
            rng.gen_range(lo..=hi)
        }
    };
    let mut paths = Vec::with_capacity(n_paths);
    for l in 0..n_paths {
        let mag = if l == 0 {
            1.0
        } else {
            10f64.powf(-rng.gen_range(3.0..15.0) / 20.0)
        };
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        paths.push(Path {
            gain: Complex64::from_polar(mag, phase),
            aod_deg: draw(rng, aod_span),
            aoa_deg: draw(rng, aoa_span),
        });
    }
    ClusterChannel::new(paths, t, r)
}
