//! Beam selection, accuracy metrics, and the Monte Carlo harness.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channelsynth::PowerMap;
use crate::error::{Error, Result};
use crate::lasso::{self, LassoConfig, RecoveryResult, DEFAULT_KAPPA};
use crate::sensing::{self, MeasurementOperator, MeasurementSet};
use crate::xform::{DctBasis, DctMode};

/// A chosen (RX, TX) beam pair and the map value it was chosen at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamChoice {
    pub tx_idx: usize,
    pub rx_idx: usize,
    pub value_linear: f64,
}

impl BeamChoice {
    pub fn same_pair(&self, other: &BeamChoice) -> bool {
        self.tx_idx == other.tx_idx && self.rx_idx == other.rx_idx
    }
}

/// Argmax over all pairs. Ties go to the lowest RX index, then lowest TX.
pub fn select_best(map: &PowerMap) -> BeamChoice {
    let mut best = BeamChoice {
        tx_idx: 0,
        rx_idx: 0,
        value_linear: map.get(0, 0),
    };
    for rx in 0..map.q() {
        for tx in 0..map.p() {
            let v = map.get(rx, tx);
            if v > best.value_linear {
                best = BeamChoice {
                    tx_idx: tx,
                    rx_idx: rx,
                    value_linear: v,
                };
            }
        }
    }
    best
}

/// The `n = pq`-measurement baseline: argmax of the true map.
pub fn exhaustive_search(phi_true: &PowerMap) -> BeamChoice {
    select_best(phi_true)
}

/// `||Phi - Phi_hat||_F^2 / ||Phi||_F^2`.
pub fn nmse(phi_true: &PowerMap, phi_hat: &PowerMap) -> Result<f64> {
    if phi_true.q() != phi_hat.q() || phi_true.p() != phi_hat.p() {
        return Err(Error::invalid(format!(
            "map shapes differ: {}x{} vs {}x{}",
            phi_true.q(),
            phi_true.p(),
            phi_hat.q(),
            phi_hat.p()
        )));
    }
    let energy: f64 = phi_true.row_major().iter().map(|v| v * v).sum();
    if !(energy > 0.0) {
        return Err(Error::invalid("true map has zero energy"));
    }
    let err: f64 = phi_true
        .row_major()
        .iter()
        .zip(phi_hat.row_major())
        .map(|(a, b)| (a - b.max(0.0)).powi(2))
        .sum();
    Ok(err / energy)
}

/// Loss in dB between the exhaustive-search optimum and the true power at the
/// chosen pair. `+inf` when the chosen pair has zero true power.
pub fn rss_loss_db(phi_true: &PowerMap, cs_choice: &BeamChoice) -> Result<f64> {
    if cs_choice.rx_idx >= phi_true.q() || cs_choice.tx_idx >= phi_true.p() {
        return Err(Error::invalid(format!(
            "choice (rx {}, tx {}) outside {}x{} map",
            cs_choice.rx_idx,
            cs_choice.tx_idx,
            phi_true.q(),
            phi_true.p()
        )));
    }
    let oracle = exhaustive_search(phi_true);
    if oracle.same_pair(cs_choice) {
        return Ok(0.0);
    }
    let achieved = phi_true.get(cs_choice.rx_idx, cs_choice.tx_idx);
    if achieved == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((10.0 * (oracle.value_linear / achieved).log10()).max(0.0))
}

/// How the l1 weight is set for each trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyRule {
    /// `kappa * ||B^T y||_inf`, recomputed from each trial's measurements.
    Relative(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub penalty: PenaltyRule,
    pub max_iters: usize,
    pub tol: f64,
    pub separable: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let base = LassoConfig::default();
        Self {
            penalty: PenaltyRule::Relative(DEFAULT_KAPPA),
            max_iters: base.max_iters,
            tol: base.tol,
            separable: true,
        }
    }
}

impl SolverSettings {
    pub fn basis_for(&self, q: usize, p: usize) -> Result<DctBasis> {
        if self.separable {
            DctBasis::separable(q, p)
        } else {
            DctBasis::new(DctMode::Vector1d, q * p)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub m1: usize,
    pub m2: usize,
    pub fraction: f64,
    pub nmse: f64,
    /// `+inf` when the chosen pair carries no true power.
    pub rss_loss_db: f64,
    pub exact_hit: bool,
    pub cs_choice: BeamChoice,
    pub oracle_choice: BeamChoice,
    pub iters: usize,
    pub converged: bool,
    pub final_objective: f64,
    pub penalty: f64,
    pub negative_entries: usize,
}

/// A trial's report together with its intermediate products.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub report: TrialReport,
    pub measurements: MeasurementSet,
    pub recovery: RecoveryResult,
    pub phi_hat: PowerMap,
}

/// Ground truth plus everything needed to run trials against it.
#[derive(Debug, Clone)]
pub struct Experiment<'a> {
    phi_true: &'a PowerMap,
    basis: DctBasis,
    noise_sigma: f64,
    solver: SolverSettings,
    oracle: BeamChoice,
}

impl<'a> Experiment<'a> {
    pub fn new(phi_true: &'a PowerMap, noise_sigma: f64, solver: SolverSettings) -> Result<Self> {
        if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
            return Err(Error::invalid(format!(
                "noise_sigma must be >= 0, got {noise_sigma}"
            )));
        }
        let (PenaltyRule::Relative(v) | PenaltyRule::Fixed(v)) = solver.penalty;
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!(
                "penalty parameter must be >= 0, got {v}"
            )));
        }
        let basis = solver.basis_for(phi_true.q(), phi_true.p())?;
        Ok(Self {
            phi_true,
            basis,
            noise_sigma,
            solver,
            oracle: exhaustive_search(phi_true),
        })
    }

    pub fn phi_true(&self) -> &PowerMap {
        self.phi_true
    }

    pub fn oracle(&self) -> BeamChoice {
        self.oracle
    }

    /// Plan, sample, recover, select, score. One RNG seeded from `seed`
    /// drives both the plan and the noise.
    pub fn run_trial(&self, m1: usize, m2: usize, trial: usize, seed: u64) -> Result<TrialOutcome> {
        let (p, q) = (self.phi_true.p(), self.phi_true.q());
        let fraction = (m1 * m2) as f64 / (p * q) as f64;
        let wrap = |source: Error| Error::Trial {
            trial,
            fraction,
            seed,
            source: Box::new(source),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = sensing::draw_plan(&mut rng, p, q, m1, m2).map_err(wrap)?;
        let measurements =
            sensing::sample(self.phi_true, &plan, self.noise_sigma, &mut rng).map_err(wrap)?;
        let y = measurements.vec();
        let op = MeasurementOperator::new(&plan, &self.basis).map_err(wrap)?;
        let penalty = match self.solver.penalty {
            PenaltyRule::Relative(kappa) => lasso::choose_penalty(&op, &y, kappa).map_err(wrap)?,
            PenaltyRule::Fixed(v) => v,
        };
        let config = LassoConfig {
            max_iters: self.solver.max_iters,
            tol: self.solver.tol,
            ..LassoConfig::with_penalty(penalty)
        };
        let recovery = lasso::solve(&op, &y, &config).map_err(wrap)?;
        let (phi_hat, _) = recovery.phi_hat.clamped();
        let cs_choice = select_best(&phi_hat);
        let report = TrialReport {
            trial,
            seed,
            m1,
            m2,
            fraction,
            nmse: nmse(self.phi_true, &phi_hat).map_err(wrap)?,
            rss_loss_db: rss_loss_db(self.phi_true, &cs_choice).map_err(wrap)?,
            exact_hit: cs_choice.same_pair(&self.oracle),
            cs_choice,
            oracle_choice: self.oracle,
            iters: recovery.iters_used,
            converged: recovery.converged,
            final_objective: recovery.final_objective(),
            penalty,
            negative_entries: recovery.negative_entries,
        };
        Ok(TrialOutcome {
            report,
            measurements,
            recovery,
            phi_hat,
        })
    }

    /// Runs `trials` trials per `(m1, m2)` pair. Trial `t` uses seed
    /// `base_seed + t` at every pair, so pairs are compared on common
    /// random numbers. Trials run in parallel; aggregation is sequential in
    /// trial order, so results do not depend on scheduling.
    pub fn monte_carlo(
        &self,
        pairs: &[(usize, usize)],
        trials: usize,
        base_seed: u64,
    ) -> Result<MonteCarloResult> {
        if trials == 0 {
            return Err(Error::invalid("trials_per_point must be at least 1"));
        }
        let mut rows = Vec::with_capacity(pairs.len());
        let mut reports = Vec::with_capacity(pairs.len() * trials);
        for &(m1, m2) in pairs {
            let point: Vec<TrialReport> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    self.run_trial(m1, m2, t, base_seed.wrapping_add(t as u64))
                        .map(|o| o.report)
                })
                .collect::<Result<_>>()?;
            rows.push(AggregateRow::from_reports(m1, m2, &point));
            reports.extend(point);
        }
        rows.sort_by(|a, b| a.fraction.total_cmp(&b.fraction).then(a.m1.cmp(&b.m1)));
        reports.sort_by(|a, b| {
            a.fraction
                .total_cmp(&b.fraction)
                .then(a.m1.cmp(&b.m1))
                .then(a.trial.cmp(&b.trial))
        });
        Ok(MonteCarloResult { rows, reports })
    }
}

/// Single trial with a freshly built basis.
#[allow(clippy::too_many_arguments)]
pub fn run_trial(
    phi_true: &PowerMap,
    p: usize,
    q: usize,
    m1: usize,
    m2: usize,
    noise_sigma: f64,
    solver: &SolverSettings,
    seed: u64,
) -> Result<TrialReport> {
    if phi_true.p() != p || phi_true.q() != q {
        return Err(Error::invalid(format!(
            "map is {}x{}, expected {q}x{p}",
            phi_true.q(),
            phi_true.p()
        )));
    }
    Ok(Experiment::new(phi_true, noise_sigma, solver.clone())?
        .run_trial(m1, m2, 0, seed)?
        .report)
}

pub fn monte_carlo(
    phi_true: &PowerMap,
    pairs: &[(usize, usize)],
    trials_per_point: usize,
    noise_sigma: f64,
    solver: &SolverSettings,
    base_seed: u64,
) -> Result<Vec<AggregateRow>> {
    Ok(Experiment::new(phi_true, noise_sigma, solver.clone())?
        .monte_carlo(pairs, trials_per_point, base_seed)?
        .rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub fraction: f64,
    pub m1: usize,
    pub m2: usize,
    pub mean_nmse: f64,
    /// Mean over trials with finite loss; NaN if there are none.
    pub mean_rss_loss_db: f64,
    pub hit_rate: f64,
    pub trials: usize,
    pub infinite_loss_count: usize,
}

impl AggregateRow {
    pub fn from_reports(m1: usize, m2: usize, reports: &[TrialReport]) -> Self {
        let trials = reports.len();
        let fraction = reports.first().map_or(f64::NAN, |r| r.fraction);
        let mean_nmse = reports.iter().map(|r| r.nmse).sum::<f64>() / trials as f64;
        let finite: Vec<f64> = reports
            .iter()
            .map(|r| r.rss_loss_db)
            .filter(|v| v.is_finite())
            .collect();
        let mean_rss_loss_db = if finite.is_empty() {
            f64::NAN
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        let hits = reports.iter().filter(|r| r.exact_hit).count();
        Self {
            fraction,
            m1,
            m2,
            mean_nmse,
            mean_rss_loss_db,
            hit_rate: hits as f64 / trials as f64,
            trials,
            infinite_loss_count: trials - finite.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub rows: Vec<AggregateRow>,
    pub reports: Vec<TrialReport>,
}

pub const AGGREGATE_HEADER: &str =
    "fraction,m1,m2,mean_nmse,mean_rss_loss_db,hit_rate,trials,infinite_loss_count";

pub const TRIALS_HEADER: &str = "fraction,m1,m2,trial,seed,nmse,rss_loss_db,exact_hit,\
cs_rx_idx,cs_tx_idx,oracle_rx_idx,oracle_tx_idx,iters,converged,final_objective,penalty,negative_entries";

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.fraction,
            r.m1,
            r.m2,
            r.mean_nmse,
            r.mean_rss_loss_db,
            r.hit_rate,
            r.trials,
            r.infinite_loss_count
        );
    }
    out
}

pub fn trials_csv(reports: &[TrialReport]) -> String {
    let mut out = String::from(TRIALS_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.fraction,
            r.m1,
            r.m2,
            r.trial,
            r.seed,
            r.nmse,
            r.rss_loss_db,
            r.exact_hit,
            r.cs_choice.rx_idx,
            r.cs_choice.tx_idx,
            r.oracle_choice.rx_idx,
            r.oracle_choice.tx_idx,
            r.iters,
            r.converged,
            r.final_objective,
            r.penalty,
            r.negative_entries
        );
    }
    out
}

/// Picks `(m1, m2)` for a target fraction of `p * q` measurements.
///
/// Minimizes `|m1*m2/n - fraction| + 0.1 * |m1/p - m2/q|`: hit the fraction
/// first, then prefer sampling both codebooks at similar rates. Ties go to
/// the smaller `m1`.
pub fn balanced_split(p: usize, q: usize, fraction: f64) -> Result<(usize, usize)> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "fraction {fraction} outside (0, 1]"
        )));
    }
    if p == 0 || q == 0 {
        return Err(Error::invalid("codebook sizes must be positive"));
    }
    let n = (p * q) as f64;
    let mut best = (1, 1);
    let mut best_score = f64::INFINITY;
    for m1 in 1..=p {
        for m2 in 1..=q {
            let score = ((m1 * m2) as f64 / n - fraction).abs()
                + 0.1 * (m1 as f64 / p as f64 - m2 as f64 / q as f64).abs();
            if score < best_score - 1e-15 {
                best_score = score;
                best = (m1, m2);
            }
        }
    }
    Ok(best)
}
