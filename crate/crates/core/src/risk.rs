//! Pointwise risk `R_L(theta, delta) = E_theta[L(theta, delta(X))]` and its
//! supremum over a parameter interval.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::model::{ErrorLaw, EstimatorSpec, GaussianLocationModel, Interval, McSettings};
use crate::optim::golden_section_max;
use crate::quadrature::{normal_expectation, DEFAULT_ORDER};

/// How a pointwise risk is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskMethod {
    /// Panelized Gauss-Legendre with `nodes` points per panel.
    Quadrature { nodes: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

impl RiskMethod {
    pub fn quadrature() -> Self {
        Self::Quadrature {
            nodes: DEFAULT_ORDER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub value: f64,
    pub method: RiskMethod,
    /// Zero for quadrature.
    pub std_error: f64,
    /// Integrand evaluations (quadrature) or draws (Monte Carlo).
    pub evaluations: usize,
}

/// Risk of `est` under `loss` at `theta`.
pub fn risk(
    model: &GaussianLocationModel,
    est: &EstimatorSpec,
    loss: &LossSpec,
    theta: f64,
    method: RiskMethod,
) -> Result<RiskEstimate> {
    loss.validate()?;
    est.validate()?;
    match method {
        RiskMethod::Quadrature { nodes } => {
            if nodes == 0 {
                return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
            }
            let (mu, s) = match est {
                EstimatorSpec::AffineMean { gamma, beta } => {
                    ((gamma - 1.0) * theta + beta, gamma.abs() * model.mean_sd())
                }
                _ => return Err(Error::QuadratureUnsupported(est.name())),
            };
            let e = gaussian_risk(loss, mu, s, nodes);
            finite(theta, e.value)?;
            Ok(RiskEstimate {
                value: e.value,
                method,
                std_error: 0.0,
                evaluations: e.evaluations,
            })
        }
        RiskMethod::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::InvalidArgument("Monte Carlo needs at least two samples".into()));
            }
            let draws = crate::model::simulate_estimates(model, est, theta, samples, seed)?;
            let losses: Vec<f64> = draws.iter().map(|d| loss.eval(theta, *d)).collect();
            let (mean, sd) = mean_sd(&losses);
            finite(theta, mean)?;
            Ok(RiskEstimate {
                value: mean,
                method,
                std_error: sd / (samples as f64).sqrt(),
                evaluations: samples,
            })
        }
    }
}

/// `E[L(mu + s Z)]` for a loss expressed in the error.
pub(crate) fn gaussian_risk(loss: &LossSpec, mu: f64, s: f64, nodes: usize) -> crate::quadrature::Expectation {
    let kinks = loss.breakpoints();
    normal_expectation(|e| loss.eval_error(e), mu, s, &kinks, nodes)
}

/// Risk computed from an explicit error law.
pub fn risk_from_law(loss: &LossSpec, law: &ErrorLaw, nodes: usize) -> Result<f64> {
    loss.validate()?;
    let v = match law {
        ErrorLaw::AffineGaussian { mu, s } => gaussian_risk(loss, *mu, *s, nodes).value,
        ErrorLaw::Empirical { samples, .. } => {
            if samples.is_empty() {
                return Err(Error::InvalidArgument("empty error sample".into()));
            }
            samples.iter().map(|e| loss.eval_error(*e)).sum::<f64>() / samples.len() as f64
        }
    };
    finite(f64::NAN, v)?;
    Ok(v)
}

fn finite(theta: f64, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteRisk { theta, value })
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Quadrature and Monte Carlo risks side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crosscheck {
    pub quad: RiskEstimate,
    pub mc: RiskEstimate,
    /// `|quad - mc| / mc.std_error`; zero when both agree exactly.
    pub z_score: f64,
}

pub fn crosscheck_risk(
    model: &GaussianLocationModel,
    est: &EstimatorSpec,
    loss: &LossSpec,
    theta: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<Crosscheck> {
    let quad = risk(model, est, loss, theta, RiskMethod::quadrature())?;
    let mc = risk(
        model,
        est,
        loss,
        theta,
        RiskMethod::MonteCarlo {
            samples: mc_samples,
            seed,
        },
    )?;
    let diff = (quad.value - mc.value).abs();
    let z_score = if mc.std_error > 0.0 {
        diff / mc.std_error
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(Crosscheck { quad, mc, z_score })
}

/// Worst-case search settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseOptions {
    /// Evenly spaced scan points over the interval, at least 16.
    pub grid: usize,
    /// Golden-section refinement stops below this bracket width.
    pub refine_tol: f64,
    /// Quadrature order for rules with a Gaussian error law.
    pub nodes: usize,
    /// Monte Carlo settings for all other rules. The same seed is reused
    /// at every `theta`, so the simulated risk curve is deterministic.
    pub mc: McSettings,
}

impl Default for WorstCaseOptions {
    fn default() -> Self {
        Self {
            grid: 256,
            refine_tol: 1e-6,
            nodes: DEFAULT_ORDER,
            mc: McSettings::new(100_000, 0),
        }
    }
}

impl WorstCaseOptions {
    fn method_for(&self, est: &EstimatorSpec) -> RiskMethod {
        match est {
            EstimatorSpec::AffineMean { .. } => RiskMethod::Quadrature { nodes: self.nodes },
            _ => RiskMethod::MonteCarlo {
                samples: self.mc.samples,
                seed: self.mc.seed,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseResult {
    pub sup_value: f64,
    pub argmax_theta: f64,
    pub grid_points: usize,
    pub refinement_tol: f64,
    /// The risk does not depend on `theta`; `sup_value` is that constant.
    pub constant_in_theta: bool,
}

/// `sup_theta R_L(theta, est)` over `interval`.
///
/// Location-equivariant rules have a `theta`-free risk, which is evaluated
/// once at the midpoint and flagged. Otherwise the interval is scanned on
/// an even grid and the best grid cell is refined by golden-section search.
pub fn worst_case_risk(
    model: &GaussianLocationModel,
    est: &EstimatorSpec,
    loss: &LossSpec,
    interval: &Interval,
    opts: &WorstCaseOptions,
) -> Result<WorstCaseResult> {
    worst_case_risk_with(model, est, loss, interval, opts, opts.method_for(est))
}

/// [`worst_case_risk`] with an explicit pointwise risk method.
pub fn worst_case_risk_with(
    model: &GaussianLocationModel,
    est: &EstimatorSpec,
    loss: &LossSpec,
    interval: &Interval,
    opts: &WorstCaseOptions,
    method: RiskMethod,
) -> Result<WorstCaseResult> {
    if opts.grid < 16 {
        return Err(Error::InvalidArgument(format!(
            "worst-case grid needs at least 16 points, got {}",
            opts.grid
        )));
    }
    if !(opts.refine_tol > 0.0) {
        return Err(Error::InvalidArgument("refine_tol must be positive".into()));
    }
    let eval = |theta: f64| risk(model, est, loss, theta, method).map(|r| r.value);

    if est.is_location_equivariant() {
        let theta = interval.midpoint();
        return Ok(WorstCaseResult {
            sup_value: eval(theta)?,
            argmax_theta: theta,
            grid_points: 1,
            refinement_tol: opts.refine_tol,
            constant_in_theta: true,
        });
    }

    let grid = interval.linspace(opts.grid);
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&t| eval(t))
        .collect::<Result<_>>()?;
    // First maximum wins ties, so the scan is order independent.
    let best = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, v)| if *v > values[b] { i } else { b });

    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let refined = golden_section_max(eval, lo, hi, opts.refine_tol)?;

    let (sup_value, argmax_theta) = if refined.value > values[best] {
        (refined.value, refined.x)
    } else {
        (values[best], grid[best])
    };
    Ok(WorstCaseResult {
        sup_value,
        argmax_theta,
        grid_points: grid.len(),
        refinement_tol: opts.refine_tol,
        constant_in_theta: false,
    })
}

/// Whether doubling the quadrature order changes the risk by less than
/// `tol` (relative to `max(1, |risk|)`).
pub fn quadrature_converged(
    model: &GaussianLocationModel,
    est: &EstimatorSpec,
    loss: &LossSpec,
    theta: f64,
    nodes: usize,
    tol: f64,
) -> Result<bool> {
    let a = risk(model, est, loss, theta, RiskMethod::Quadrature { nodes })?.value;
    let b = risk(model, est, loss, theta, RiskMethod::Quadrature { nodes: 2 * nodes })?.value;
    Ok((a - b).abs() < tol * a.abs().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::scale_loss;
    use crate::model::error_law;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit(n: usize) -> GaussianLocationModel {
        GaussianLocationModel::new(n, 1.0).unwrap()
    }

    fn quad(model: &GaussianLocationModel, est: &EstimatorSpec, loss: &LossSpec, theta: f64) -> f64 {
        risk(model, est, loss, theta, RiskMethod::quadrature()).unwrap().value
    }

    fn sym3() -> Interval {
        Interval::new(-3.0, 3.0).unwrap()
    }

    #[test]
    fn closed_form_risks() {
        let mean = EstimatorSpec::affine(1.0, 0.0);
        for theta in [-7.0, 0.0, 2.5] {
            assert_relative_eq!(quad(&unit(4), &mean, &LossSpec::canonical(2.0), theta), 0.25, max_relative = 1e-12);
            assert_relative_eq!(
                quad(&unit(1), &mean, &LossSpec::canonical(1.0), theta),
                (2.0 / PI).sqrt(),
                max_relative = 1e-10
            );
            assert_relative_eq!(quad(&unit(1), &mean, &LossSpec::canonical(4.0), theta), 3.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn quadrature_is_rejected_for_simulated_rules() {
        let err = risk(&unit(3), &EstimatorSpec::median(0.0), &LossSpec::canonical(2.0), 0.0, RiskMethod::quadrature())
            .unwrap_err();
        assert!(matches!(err, Error::QuadratureUnsupported(_)));
    }

    #[test]
    fn monte_carlo_reports_standard_error() {
        let r = risk(
            &unit(1),
            &EstimatorSpec::affine(1.0, 0.0),
            &LossSpec::canonical(2.0),
            0.0,
            RiskMethod::MonteCarlo { samples: 100_000, seed: 5 },
        )
        .unwrap();
        // sd of Z^2 is sqrt(2).
        assert_relative_eq!(r.std_error, (2.0f64 / 1e5).sqrt(), max_relative = 0.05);
        assert!((r.value - 1.0).abs() < 4.0 * r.std_error);
    }

    #[test]
    fn crosscheck_examples() {
        let c = crosscheck_risk(&unit(1), &EstimatorSpec::affine(1.0, 0.0), &LossSpec::canonical(2.0), 0.0, 1_000_000, 3)
            .unwrap();
        assert!(c.z_score < 4.0, "z {}", c.z_score);
        let c = crosscheck_risk(&unit(1), &EstimatorSpec::affine(0.8, 0.0), &LossSpec::canonical(2.5), 2.0, 1_000_000, 3)
            .unwrap();
        assert!(c.z_score < 4.0, "z {}", c.z_score);
        let c = crosscheck_risk(&unit(1), &EstimatorSpec::affine(0.0, 0.0), &LossSpec::canonical(2.0), 0.0, 10_000, 1)
            .unwrap();
        assert_eq!(c.quad.value, 0.0);
        assert_eq!(c.mc.value, 0.0);
        assert_eq!(c.z_score, 0.0);
    }

    #[test]
    fn risk_from_law_matches_direct_risk() {
        let model = unit(2);
        let est = EstimatorSpec::affine(0.7, 0.2);
        let loss = LossSpec::huber(0.5);
        let law = error_law(&model, &est, 1.3, McSettings::new(10_000, 0)).unwrap();
        assert_eq!(risk_from_law(&loss, &law, DEFAULT_ORDER).unwrap(), quad(&model, &est, &loss, 1.3));
    }

    #[test]
    fn doubling_nodes_changes_little() {
        for p in [1.2, 1.5, 2.0, 2.5, 3.3, 5.0] {
            for (gamma, beta, theta) in [(1.0, 0.0, 0.0), (0.8, 0.3, 2.0), (1.3, -0.4, -1.0)] {
                let ok = quadrature_converged(
                    &unit(3),
                    &EstimatorSpec::affine(gamma, beta),
                    &LossSpec::canonical(p),
                    theta,
                    DEFAULT_ORDER,
                    1e-10,
                )
                .unwrap();
                assert!(ok, "p={p} gamma={gamma} beta={beta} theta={theta}");
            }
        }
        assert!(quadrature_converged(&unit(1), &EstimatorSpec::affine(0.9, 0.1), &LossSpec::huber(1.0), 0.4, DEFAULT_ORDER, 1e-10)
            .unwrap());
    }

    #[test]
    fn worst_case_examples() {
        let opts = WorstCaseOptions::default();
        let wc = worst_case_risk(&unit(1), &EstimatorSpec::affine(1.0, 0.0), &LossSpec::canonical(2.0), &sym3(), &opts)
            .unwrap();
        assert!(wc.constant_in_theta);
        assert_relative_eq!(wc.sup_value, 1.0, max_relative = 1e-12);

        // gamma^2 + (1 - gamma)^2 theta^2 peaks at the end points.
        let wc = worst_case_risk(&unit(1), &EstimatorSpec::affine(0.8, 0.0), &LossSpec::canonical(2.0), &sym3(), &opts)
            .unwrap();
        assert!(!wc.constant_in_theta);
        assert_relative_eq!(wc.sup_value, 1.0, max_relative = 1e-10);
        assert_eq!(wc.argmax_theta.abs(), 3.0);

        // mu^4 + 6 mu^2 s^2 + 3 s^4 with mu = -0.3, s = 0.9.
        let wc = worst_case_risk(&unit(1), &EstimatorSpec::affine(0.9, 0.0), &LossSpec::canonical(4.0), &sym3(), &opts)
            .unwrap();
        let expected = 0.1f64.powi(4) * 81.0 + 6.0 * 0.01 * 9.0 * 0.81 + 3.0 * 0.9f64.powi(4);
        assert_relative_eq!(wc.sup_value, expected, max_relative = 1e-10);
    }

    #[test]
    fn worst_case_keeps_end_point_maximum() {
        let opts = WorstCaseOptions { grid: 16, ..Default::default() };
        let wc = worst_case_risk(
            &unit(1),
            &EstimatorSpec::affine(0.5, 0.3),
            &LossSpec::canonical(2.0),
            &Interval::new(-2.0, 1.0).unwrap(),
            &opts,
        )
        .unwrap();
        // mu = -0.5 theta + 0.3 is largest in magnitude at theta = -2.
        assert_eq!(wc.argmax_theta, -2.0);
        assert_relative_eq!(wc.sup_value, 0.25 + 1.3f64.powi(2), max_relative = 1e-12);
    }

    #[test]
    fn worst_case_rejects_small_grids() {
        let opts = WorstCaseOptions { grid: 8, ..Default::default() };
        assert!(worst_case_risk(&unit(1), &EstimatorSpec::affine(0.5, 0.0), &LossSpec::canonical(2.0), &sym3(), &opts)
            .is_err());
    }

    #[test]
    fn worst_case_scales_with_the_loss() {
        let opts = WorstCaseOptions::default();
        let est = EstimatorSpec::affine(0.85, 0.2);
        let loss = LossSpec::canonical(2.5);
        let base = worst_case_risk(&unit(2), &est, &loss, &sym3(), &opts).unwrap();
        for lambda in [0.1, 3.0, 7.0] {
            let scaled = worst_case_risk(&unit(2), &est, &scale_loss(&loss, lambda).unwrap(), &sym3(), &opts).unwrap();
            assert_relative_eq!(scaled.sup_value, lambda * base.sup_value, max_relative = 1e-8);
            assert_eq!(scaled.argmax_theta, base.argmax_theta);
        }
    }

    #[test]
    fn median_worst_case_is_flagged_constant() {
        let opts = WorstCaseOptions {
            mc: McSettings::new(20_000, 11),
            ..Default::default()
        };
        let wc = worst_case_risk(&unit(5), &EstimatorSpec::median(0.0), &LossSpec::canonical(2.0), &sym3(), &opts).unwrap();
        assert!(wc.constant_in_theta);
        assert!(wc.sup_value > 0.2 && wc.sup_value < 0.35);
    }
}
