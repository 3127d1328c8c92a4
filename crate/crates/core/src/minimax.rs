//! Family-relative minimax rules: `inf` over a parametric estimator family
//! of the worst-case risk.
//!
//! The outer problem is solved by Nelder-Mead from several seeded random
//! starts; the inner problem is [`worst_case_risk`]. Results are minimax
//! only relative to the chosen family.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::model::{EstimatorSpec, GaussianLocationModel, Interval};
use crate::optim::{lex_cmp, nelder_mead, NelderMeadOptions};
use crate::risk::{worst_case_risk, WorstCaseOptions, WorstCaseResult};
use crate::seed::derive_seed;

/// A parametric slice of the estimator space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// `gamma * mean(X) + beta`; parameters `[gamma, beta]`.
    AffineMean {
        gamma_range: Interval,
        beta_range: Interval,
    },
    /// `median(X) + beta`; parameter `[beta]`.
    MedianShift { beta_range: Interval },
}

impl FamilySpec {
    pub fn affine(gamma_range: Interval, beta_range: Interval) -> Self {
        Self::AffineMean {
            gamma_range,
            beta_range,
        }
    }

    pub fn dim(&self) -> usize {
        self.ranges().len()
    }

    pub fn ranges(&self) -> Vec<Interval> {
        match self {
            Self::AffineMean {
                gamma_range,
                beta_range,
            } => vec![*gamma_range, *beta_range],
            Self::MedianShift { beta_range } => vec![*beta_range],
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            Self::AffineMean { .. } => &["gamma", "beta"],
            Self::MedianShift { .. } => &["beta"],
        }
    }

    pub fn estimator(&self, params: &[f64]) -> Result<EstimatorSpec> {
        if params.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "family expects {} parameters, got {}",
                self.dim(),
                params.len()
            )));
        }
        Ok(match self {
            Self::AffineMean { .. } => EstimatorSpec::affine(params[0], params[1]),
            Self::MedianShift { .. } => EstimatorSpec::median(params[0]),
        })
    }

    pub fn contains(&self, params: &[f64]) -> bool {
        params.len() == self.dim() && self.ranges().iter().zip(params).all(|(r, p)| r.contains(*p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimaxOptions {
    pub restarts: usize,
    /// Master seed; restart `i` starts from a point drawn with
    /// `derive_seed(seed, i)`.
    pub seed: u64,
    pub worst_case: WorstCaseOptions,
    /// Largest final simplex size accepted as converged.
    pub step_tol: f64,
    /// Largest relative spread of restart values accepted as converged.
    pub agreement_tol: f64,
    /// Simplex size at which each restart stops.
    pub xtol: f64,
    pub max_evaluations: usize,
}

impl Default for MinimaxOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            seed: 0,
            worst_case: WorstCaseOptions::default(),
            step_tol: 1e-5,
            agreement_tol: 1e-4,
            xtol: 1e-10,
            max_evaluations: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub value: f64,
    pub iterations: usize,
    pub simplex_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxResult {
    pub best_params: Vec<f64>,
    pub param_names: Vec<String>,
    pub minimax_value: f64,
    /// Worst-case evaluation at `best_params`.
    pub inner_results: WorstCaseResult,
    pub outer_iterations: usize,
    pub converged: bool,
    pub restarts: Vec<RestartSummary>,
}

impl MinimaxResult {
    /// Turns a non-converged result into [`Error::NotConverged`].
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            return Ok(self);
        }
        Err(Error::NotConverged {
            step: self.restarts.iter().map(|r| r.simplex_size).fold(0.0, f64::max),
            spread: self.restart_spread(),
        })
    }

    /// Largest relative gap between a restart's value and the best value.
    pub fn restart_spread(&self) -> f64 {
        let scale = self.minimax_value.abs().max(f64::MIN_POSITIVE);
        self.restarts
            .iter()
            .map(|r| (r.value - self.minimax_value) / scale)
            .fold(0.0, f64::max)
    }
}

/// `R_loss(family(params))`, the worst-case risk at a parameter vector.
pub fn family_worst_case(
    model: &GaussianLocationModel,
    family: &FamilySpec,
    params: &[f64],
    loss: &LossSpec,
    theta_interval: &Interval,
    opts: &WorstCaseOptions,
) -> Result<WorstCaseResult> {
    let est = family.estimator(params)?;
    worst_case_risk(model, &est, loss, theta_interval, opts)
}

pub fn solve_minimax(
    model: &GaussianLocationModel,
    family: &FamilySpec,
    loss: &LossSpec,
    theta_interval: &Interval,
    opts: &MinimaxOptions,
) -> Result<MinimaxResult> {
    loss.validate()?;
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    let ranges = family.ranges();
    let bounds: Vec<(f64, f64)> = ranges.iter().map(|r| (r.lo, r.hi)).collect();
    let nm = NelderMeadOptions {
        initial_step: 0.1,
        xtol: opts.xtol,
        max_evaluations: opts.max_evaluations,
    };
    let objective = |x: &[f64]| {
        family_worst_case(model, family, x, loss, theta_interval, &opts.worst_case).map(|r| r.sup_value)
    };

    let runs: Vec<_> = (0..opts.restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, i as u64));
            let x0: Vec<f64> = ranges.iter().map(|r| rng.random_range(r.lo..=r.hi)).collect();
            nelder_mead(objective, &x0, &bounds, &nm)
        })
        .collect::<Result<_>>()?;

    let best = runs
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value).then_with(|| lex_cmp(&a.x, &b.x)))
        .expect("at least one restart");
    let inner = family_worst_case(model, family, &best.x, loss, theta_interval, &opts.worst_case)?;

    let restarts: Vec<RestartSummary> = runs
        .iter()
        .map(|r| RestartSummary {
            value: r.value,
            iterations: r.iterations,
            simplex_size: r.simplex_size,
        })
        .collect();
    let mut result = MinimaxResult {
        best_params: best.x.clone(),
        param_names: family.param_names().iter().map(|s| s.to_string()).collect(),
        minimax_value: inner.sup_value,
        inner_results: inner,
        outer_iterations: runs.iter().map(|r| r.iterations).sum(),
        converged: false,
        restarts,
    };
    result.converged = best.simplex_size < opts.step_tol && result.restart_spread() < opts.agreement_tol;
    Ok(result)
}

/// Minimax rules for several losses and the distances between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizabilityReport {
    pub rows: Vec<RealizabilityRow>,
    /// Euclidean distances between the optimal parameter vectors.
    pub distances: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizabilityRow {
    pub loss: LossSpec,
    pub result: MinimaxResult,
}

pub fn realizability_report(
    model: &GaussianLocationModel,
    family: &FamilySpec,
    losses: &[LossSpec],
    theta_interval: &Interval,
    opts: &MinimaxOptions,
) -> Result<RealizabilityReport> {
    if losses.len() < 2 {
        return Err(Error::InsufficientLosses(losses.len()));
    }
    let rows: Vec<RealizabilityRow> = losses
        .par_iter()
        .map(|loss| {
            solve_minimax(model, family, loss, theta_interval, opts).map(|result| RealizabilityRow {
                loss: loss.clone(),
                result,
            })
        })
        .collect::<Result<_>>()?;
    let distances = rows
        .iter()
        .map(|a| {
            rows.iter()
                .map(|b| euclidean(&a.result.best_params, &b.result.best_params))
                .collect()
        })
        .collect();
    Ok(RealizabilityReport { rows, distances })
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
