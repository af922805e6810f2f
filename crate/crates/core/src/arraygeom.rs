//! Phased-array steering vectors and beam codebooks.
//!
//! Synthetic codebooks use a half-wavelength uniform linear array with a
//! uniform `1/sqrt(n)` taper. Real codebooks can be loaded from CSV, so
//! nothing downstream depends on the array model.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;
const LOAD_RENORM_TOL: f64 = 1e-6;

/// Half-wavelength ULA response toward `theta_deg` (broadside = 0).
///
/// Element `k` is `exp(i*pi*k*sin(theta)) / sqrt(n_elems)`.
pub fn ula_steering(theta_deg: f64, n_elems: usize) -> Result<Vec<Complex64>> {
    if n_elems == 0 {
        return Err(Error::invalid("n_elems must be at least 1"));
    }
    if !theta_deg.is_finite() || !(-90.0..=90.0).contains(&theta_deg) {
        return Err(Error::invalid(format!(
            "steering angle {theta_deg} deg outside [-90, 90]"
        )));
    }
    Ok(steer_unchecked(theta_deg, n_elems))
}

fn steer_unchecked(theta_deg: f64, n_elems: usize) -> Vec<Complex64> {
    let amp = 1.0 / (n_elems as f64).sqrt();
    let s = theta_deg.to_radians().sin();
    (0..n_elems)
        .map(|k| Complex64::from_polar(amp, PI * k as f64 * s))
        .collect()
}

/// Maps an azimuth in `[-180, 180]` onto the ULA's front half-plane.
///
/// A linear array cannot tell `theta` from `180 - theta`, so a beam that is
/// mechanically pointed behind broadside has the same electrical response as
/// its mirror image in front.
fn fold_to_front(theta_deg: f64) -> f64 {
    if theta_deg > 90.0 {
        180.0 - theta_deg
    } else if theta_deg < -90.0 {
        -180.0 - theta_deg
    } else {
        theta_deg
    }
}

/// Ordered set of unit-norm steering vectors with their pointing angles.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringCodebook {
    vectors: Vec<Vec<Complex64>>,
    angles_deg: Vec<f64>,
    n_elems: usize,
}

impl SteeringCodebook {
    /// Builds a codebook after checking every invariant: non-empty, equal
    /// lengths, strictly increasing angles, unit-norm vectors.
    pub fn new(angles_deg: Vec<f64>, vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        if angles_deg.is_empty() {
            return Err(Error::invalid("codebook must contain at least one beam"));
        }
        if angles_deg.len() != vectors.len() {
            return Err(Error::invalid(format!(
                "{} angles but {} vectors",
                angles_deg.len(),
                vectors.len()
            )));
        }
        if angles_deg.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid(
                "codebook angles must be strictly increasing",
            ));
        }
        let n_elems = vectors[0].len();
        if n_elems == 0 {
            return Err(Error::invalid("codebook vectors must be non-empty"));
        }
        for (idx, v) in vectors.iter().enumerate() {
            if v.len() != n_elems {
                return Err(Error::invalid(format!(
                    "beam {idx} has {} elements, expected {n_elems}",
                    v.len()
                )));
            }
            let norm = l2_norm(v);
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::invalid(format!(
                    "beam {idx} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(Self {
            vectors,
            angles_deg,
            n_elems,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn n_elems(&self) -> usize {
        self.n_elems
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    pub fn vector(&self, idx: usize) -> &[Complex64] {
        &self.vectors[idx]
    }

    /// Index of the beam whose angle equals `angle_deg` (within 1e-9).
    pub fn index_of_angle(&self, angle_deg: f64) -> Option<usize> {
        self.angles_deg
            .iter()
            .position(|a| (a - angle_deg).abs() < 1e-9)
    }

    /// Serializes to the codebook CSV schema
    /// (`angle_deg,re_0,im_0,re_1,im_1,...`).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("angle_deg");
        for k in 0..self.n_elems {
            let _ = write!(out, ",re_{k},im_{k}");
        }
        out.push('\n');
        for (angle, v) in self.angles_deg.iter().zip(&self.vectors) {
            let _ = write!(out, "{angle}");
            for c in v {
                let _ = write!(out, ",{},{}", c.re, c.im);
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Codebook steering at `start, start+step, ...` up to and including `stop`.
///
/// Angles beyond +-90 deg are allowed here (a mechanically rotated receiver)
/// and are folded onto the front half-plane before computing the response.
pub fn build_uniform_codebook(
    start_deg: f64,
    stop_deg: f64,
    step_deg: f64,
    n_elems: usize,
) -> Result<SteeringCodebook> {
    if !(step_deg > 0.0) || !step_deg.is_finite() {
        return Err(Error::invalid(format!(
            "step must be positive, got {step_deg}"
        )));
    }
    if !(start_deg <= stop_deg) {
        return Err(Error::invalid(format!(
            "start {start_deg} must not exceed stop {stop_deg}"
        )));
    }
    if start_deg < -180.0 || stop_deg > 180.0 {
        return Err(Error::invalid("codebook span must lie within [-180, 180]"));
    }
    if n_elems == 0 {
        return Err(Error::invalid("n_elems must be at least 1"));
    }
    // Integer stepping avoids accumulated drift; the slack admits `stop`
    // when (stop - start) / step is integral up to rounding.
    let count = ((stop_deg - start_deg) / step_deg + 1e-9).floor() as usize + 1;
    let angles: Vec<f64> = (0..count)
        .map(|k| start_deg + k as f64 * step_deg)
        .collect();
    let vectors = angles
        .iter()
        .map(|&a| steer_unchecked(fold_to_front(a), n_elems))
        .collect();
    SteeringCodebook::new(angles, vectors)
}

/// Loads a codebook CSV. Rows whose norm is off by less than 1e-6 are
/// re-normalized; anything worse is rejected with the offending line.
pub fn load_codebook(path: &Path) -> Result<SteeringCodebook> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_codebook(&text, path)
}

fn parse_codebook(text: &str, path: &Path) -> Result<SteeringCodebook> {
    let load_err = |line: usize, message: String| Error::Load {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| load_err(1, e.to_string()))?
        .clone();
    if headers.len() < 3 || (headers.len() - 1) % 2 != 0 || &headers[0] != "angle_deg" {
        return Err(load_err(
            1,
            "header must be angle_deg followed by re_k,im_k pairs".into(),
        ));
    }
    let n_elems = (headers.len() - 1) / 2;

    let mut angles = Vec::new();
    let mut vectors = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let line = row_idx + 2;
        let record = record.map_err(|e| load_err(line, e.to_string()))?;
        if record.len() != headers.len() {
            return Err(load_err(
                line,
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        let nums = record
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| load_err(line, format!("bad number: {e}")))?;
        if nums.iter().any(|x| !x.is_finite()) {
            return Err(load_err(line, "non-finite value".into()));
        }
        let mut v: Vec<Complex64> = (0..n_elems)
            .map(|k| Complex64::new(nums[1 + 2 * k], nums[2 + 2 * k]))
            .collect();
        let norm = l2_norm(&v);
        if (norm - 1.0).abs() >= LOAD_RENORM_TOL {
            return Err(load_err(line, format!("beam norm {norm} is not 1")));
        }
        if norm != 1.0 {
            v.iter_mut().for_each(|c| *c /= norm);
        }
        angles.push(nums[0]);
        vectors.push(v);
    }
    SteeringCodebook::new(angles, vectors).map_err(|e| load_err(0, e.to_string()))
}
