//! LASSO recovery of sparse DCT coefficients.
//!
//! Minimizes `0.5 * ||y - B x||^2 + lambda * ||x||_1` where `B = A Psi^{-1}`
//! is the matrix-free measurement operator and `lambda = omega * sigma`.
//! The solver is accelerated proximal gradient with a function-value
//! restart: whenever the momentum step would raise the objective it is
//! discarded and the iteration restarts from the last accepted point, so the
//! recorded objective never increases.

use crate::channelsynth::PowerMap;
use crate::error::{Error, Result};
use crate::sensing::{MeasurementOperator, SamplePlan};
use crate::xform::DctBasis;

/// Fraction of the null threshold used when no penalty is given.
pub const DEFAULT_KAPPA: f64 = 0.05;

const NORM_ITERS: usize = 30;
const LIPSCHITZ_PAD: f64 = 1.01;

#[derive(Debug, Clone, PartialEq)]
pub struct LassoConfig {
    /// Regularization weight.
    pub omega: f64,
    /// Noise standard deviation in linear power units; the l1 weight is
    /// `omega * sigma`.
    pub sigma: f64,
    pub max_iters: usize,
    /// Relative objective change below which the solver may stop.
    pub tol: f64,
    /// Gradient step. `None` uses `1/L` from a power-iteration bound.
    pub step: Option<f64>,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            omega: 0.0,
            sigma: 1.0,
            max_iters: 5000,
            tol: 1e-8,
            step: None,
        }
    }
}

impl LassoConfig {
    /// Config whose l1 weight is exactly `penalty` (`omega = penalty`,
    /// `sigma = 1`).
    pub fn with_penalty(penalty: f64) -> Self {
        Self {
            omega: penalty,
            ..Self::default()
        }
    }

    pub fn penalty(&self) -> f64 {
        self.omega * self.sigma
    }

    fn validate(&self) -> Result<()> {
        if !(self.omega >= 0.0) || !self.omega.is_finite() {
            return Err(Error::invalid(format!(
                "omega must be >= 0, got {}",
                self.omega
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::invalid(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if let Some(step) = self.step {
            if !(step > 0.0) || !step.is_finite() {
                return Err(Error::invalid(format!("step must be positive, got {step}")));
            }
        }
        Ok(())
    }
}

/// Reconstructed `q x p` map. Entries may be slightly negative; use
/// [`ReconstructedMap::clamped`] before treating it as power.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedMap {
    q: usize,
    p: usize,
    /// Column-major, as produced by the inverse transform.
    values: Vec<f64>,
}

impl ReconstructedMap {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, rx: usize, tx: usize) -> f64 {
        self.values[rx + tx * self.q]
    }

    pub fn vec(&self) -> &[f64] {
        &self.values
    }

    /// Nonnegative power map plus the number of entries that were clamped.
    pub fn clamped(&self) -> (PowerMap, usize) {
        PowerMap::from_vec_clamped(self.q, self.p, &self.values)
            .expect("dimensions fixed at construction")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub x_hat: Vec<f64>,
    pub phi_hat: ReconstructedMap,
    pub iters_used: usize,
    /// Objective after each iteration, starting with the initial point.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    /// The l1 weight actually used.
    pub penalty: f64,
    pub step: f64,
    /// Largest violation of the subgradient optimality conditions at `x_hat`.
    pub certificate_residual: f64,
    /// Negative entries in `phi_hat`, clamped when the map is consumed.
    pub negative_entries: usize,
}

impl RecoveryResult {
    pub fn final_objective(&self) -> f64 {
        *self
            .objective_trace
            .last()
            .expect("trace holds the initial objective")
    }
}

/// Elementwise `sign(v) * max(|v| - lambda, 0)`.
pub fn soft_threshold(v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(v.iter().map(|&x| shrink(x, lambda)).collect())
}

#[inline]
fn shrink(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

/// `kappa * ||B^T y||_inf`. Any `kappa >= 1` makes zero the optimal solution.
pub fn choose_penalty(op: &MeasurementOperator<'_>, y: &[f64], kappa: f64) -> Result<f64> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!("kappa must be >= 0, got {kappa}")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("measurements must be finite"));
    }
    let corr = op.adjoint(y)?;
    Ok(kappa * corr.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Tolerance used by the optimality certificate.
pub fn certificate_tolerance(penalty: f64) -> f64 {
    1e-6 * (penalty + 1.0)
}

/// Largest violation of the LASSO subgradient conditions, given the smooth
/// gradient `grad = B^T (B x - y)`.
pub fn certificate_residual(x: &[f64], grad: &[f64], penalty: f64) -> f64 {
    x.iter()
        .zip(grad)
        .map(|(&xi, &gi)| {
            if xi == 0.0 {
                (gi.abs() - penalty).max(0.0)
            } else {
                (gi + xi.signum() * penalty).abs()
            }
        })
        .fold(0.0, f64::max)
}

pub fn solve_lasso(
    plan: &SamplePlan,
    basis: &DctBasis,
    y: &[f64],
    config: &LassoConfig,
) -> Result<RecoveryResult> {
    solve(&MeasurementOperator::new(plan, basis)?, y, config)
}

/// Runs the solver to convergence or `max_iters`.
///
/// A run is declared converged when the relative objective decrease of an
/// accepted step falls below `tol` and the subgradient certificate holds to
/// within [`certificate_tolerance`]. Hitting the cap is not an error; the
/// result just carries `converged == false`.
pub fn solve(
    op: &MeasurementOperator<'_>,
    y: &[f64],
    config: &LassoConfig,
) -> Result<RecoveryResult> {
    config.validate()?;
    let (m, n) = (op.m(), op.n());
    if y.len() != m {
        return Err(Error::invalid(format!(
            "expected {m} measurements, got {}",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("measurements must be finite"));
    }
    let lambda = config.penalty();
    let lipschitz = {
        let norm = op.estimate_norm(NORM_ITERS);
        (norm * norm * LIPSCHITZ_PAD).max(f64::MIN_POSITIVE)
    };
    let step = match config.step {
        Some(s) if s > 1.0 / lipschitz => {
            return Err(Error::invalid(format!(
                "step {s} exceeds 1/L = {}",
                1.0 / lipschitz
            )))
        }
        Some(s) => s,
        None => 1.0 / lipschitz,
    };
    let cert_tol = certificate_tolerance(lambda);

    let objective = |bx: &[f64], x: &[f64]| {
        let fit: f64 = bx.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        0.5 * fit + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    };

    let mut scratch = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut bx = vec![0.0; m];
    let mut fx = objective(&bx, &x);
    let mut z = x.clone();
    let mut bz = bx.clone();
    let mut t = 1.0f64;
    let mut at_anchor = true;

    let mut grad = vec![0.0; n];
    let mut resid = vec![0.0; m];
    let mut x_new = vec![0.0; n];
    let mut bx_new = vec![0.0; m];

    let mut trace = Vec::with_capacity(config.max_iters.min(10_000) + 1);
    trace.push(fx);
    let mut converged = false;
    let mut iters_used = 0;
    let mut certificate = f64::INFINITY;

    for iter in 1..=config.max_iters {
        iters_used = iter;
        resid
            .iter_mut()
            .zip(bz.iter().zip(y))
            .for_each(|(r, (a, b))| *r = a - b);
        op.adjoint_into(&resid, &mut scratch, &mut grad);
        for i in 0..n {
            x_new[i] = shrink(z[i] - step * grad[i], step * lambda);
        }
        op.forward_into(&x_new, &mut scratch, &mut bx_new);
        let f_new = objective(&bx_new, &x_new);

        if f_new > fx {
            if at_anchor {
                // A plain proximal step from the accepted point cannot
                // increase the objective except through rounding.
                trace.push(fx);
                certificate = current_certificate(
                    op,
                    &x,
                    &bx,
                    y,
                    lambda,
                    &mut scratch,
                    &mut resid,
                    &mut grad,
                );
                converged = certificate <= cert_tol;
                break;
            }
            z.copy_from_slice(&x);
            bz.copy_from_slice(&bx);
            t = 1.0;
            at_anchor = true;
            trace.push(fx);
            continue;
        }

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for i in 0..n {
            z[i] = x_new[i] + beta * (x_new[i] - x[i]);
        }
        for i in 0..m {
            bz[i] = bx_new[i] + beta * (bx_new[i] - bx[i]);
        }
        let rel = if fx > 0.0 { (fx - f_new) / fx } else { 0.0 };
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut bx, &mut bx_new);
        fx = f_new;
        t = t_next;
        at_anchor = beta == 0.0;
        trace.push(fx);

        if rel < config.tol {
            certificate =
                current_certificate(op, &x, &bx, y, lambda, &mut scratch, &mut resid, &mut grad);
            if certificate <= cert_tol {
                converged = true;
                break;
            }
        }
    }
    if !certificate.is_finite() {
        certificate =
            current_certificate(op, &x, &bx, y, lambda, &mut scratch, &mut resid, &mut grad);
    }

    let mut phi = vec![0.0; n];
    op.basis().apply(&x, &mut phi, true);
    let negative_entries = phi.iter().filter(|v| **v < 0.0).count();
    let plan = op.plan();
    Ok(RecoveryResult {
        x_hat: x,
        phi_hat: ReconstructedMap {
            q: plan.q(),
            p: plan.p(),
            values: phi,
        },
        iters_used,
        objective_trace: trace,
        converged,
        penalty: lambda,
        step,
        certificate_residual: certificate,
        negative_entries,
    })
}

#[allow(clippy::too_many_arguments)]
fn current_certificate(
    op: &MeasurementOperator<'_>,
    x: &[f64],
    bx: &[f64],
    y: &[f64],
    lambda: f64,
    scratch: &mut [f64],
    resid: &mut [f64],
    grad: &mut [f64],
) -> f64 {
    resid
        .iter_mut()
        .zip(bx.iter().zip(y))
        .for_each(|(r, (a, b))| *r = a - b);
    op.adjoint_into(resid, scratch, grad);
    certificate_residual(x, grad, lambda)
}
