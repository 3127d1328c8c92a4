//! Certificates that a minimax rule for one power class is not minimax for
//! another.
//!
//! Starting from the family-relative minimax point `x*` for `L_p`, the
//! worst-case `L_q` risk is differentiated by central differences in
//! parameter space. Moving along `v = -g / |g|` lowers the `L_q` worst case
//! to first order while the `L_p` worst case, being stationary at `x*`,
//! moves only to second order. The certificate records both changes over a
//! halving ladder of step sizes and the fitted order of the `L_p` change.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{abs_pow, classify_exponent, ClassifierWindow, LossSpec};
use crate::minimax::{family_worst_case, realizability_report, solve_minimax, FamilySpec, MinimaxOptions, MinimaxResult};
use crate::model::{EstimatorSpec, GaussianLocationModel, Interval, McSettings};
use crate::quadrature::{normal_expectation, DEFAULT_ORDER};
use crate::risk::{worst_case_risk_with, RiskMethod, WorstCaseOptions, WorstCaseResult};

/// Central-difference gradient of the worst-case risk in family parameters.
pub fn grad_worst_case(
    model: &GaussianLocationModel,
    family: &FamilySpec,
    params: &[f64],
    loss: &LossSpec,
    theta_interval: &Interval,
    h: f64,
    opts: &WorstCaseOptions,
) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let ranges = family.ranges();
    if params.len() != ranges.len() {
        return Err(Error::InvalidArgument(format!(
            "family expects {} parameters, got {}",
            ranges.len(),
            params.len()
        )));
    }
    for (i, (r, x)) in ranges.iter().zip(params).enumerate() {
        if !(r.contains(x - h) && r.contains(x + h)) {
            return Err(Error::InvalidArgument(format!(
                "parameter {i} = {x} is within {h} of its range [{}, {}]",
                r.lo, r.hi
            )));
        }
    }
    (0..params.len())
        .into_par_iter()
        .map(|i| {
            let mut up = params.to_vec();
            let mut down = params.to_vec();
            up[i] += h;
            down[i] -= h;
            let fu = family_worst_case(model, family, &up, loss, theta_interval, opts)?.sup_value;
            let fd = family_worst_case(model, family, &down, loss, theta_interval, opts)?.sup_value;
            Ok((fu - fd) / (2.0 * h))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// `L_q` descends along `v` while the `L_p` change is second order.
    Refuted,
    /// No ladder step lowered the `L_q` worst case.
    NoDescentInFamily,
    /// `x*` is stationary for the `L_q` worst case as well.
    StationaryBoth,
    /// `L_q` descends but the `L_p` change is not of second order, so `x*`
    /// is not a clean stationary point for `L_p`.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    pub alpha: f64,
    pub delta_rp: f64,
    pub delta_rq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefutationCertificate {
    /// Fitted exponents of the two losses.
    pub p: f64,
    pub q: f64,
    pub delta_star_params: Vec<f64>,
    pub rp_star: f64,
    pub rq_star: f64,
    pub gradient_p: Vec<f64>,
    pub gradient_p_norm: f64,
    pub gradient_q: Vec<f64>,
    pub gradient_q_norm: f64,
    /// `-g / |g|`, or zeros when `g` is below tolerance.
    pub direction: Vec<f64>,
    /// Largest ladder step that lowered the `L_q` worst case.
    pub alpha: f64,
    pub delta_rq: f64,
    pub delta_rp: f64,
    /// Slope of `log |delta_rp|` against `log alpha` over the smallest
    /// descending steps.
    pub taylor_slope_p: Option<f64>,
    pub ladder: Vec<LadderStep>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefutationOptions {
    pub minimax: MinimaxOptions,
    /// Central-difference step in parameter space.
    pub fd_step: f64,
    /// Gradient norms below `stationarity_tol * worst-case value` count as
    /// zero.
    pub stationarity_tol: f64,
    pub alpha0: f64,
    pub halvings: usize,
    /// Number of smallest descending steps used in the slope fit.
    pub taylor_points: usize,
    pub slope_range: (f64, f64),
    /// Minimum gap between fitted exponents for distinct classes.
    pub class_gap: f64,
    pub classifier: ClassifierWindow,
}

impl Default for RefutationOptions {
    fn default() -> Self {
        Self {
            minimax: MinimaxOptions::default(),
            fd_step: 1e-4,
            stationarity_tol: 1e-2,
            alpha0: 0.1,
            halvings: 8,
            taylor_points: 4,
            slope_range: (1.7, 2.3),
            class_gap: 0.05,
            classifier: ClassifierWindow::default(),
        }
    }
}

impl RefutationOptions {
    /// `alpha0, alpha0 / 2, ...`, strictly decreasing.
    pub fn alpha_ladder(&self) -> Vec<f64> {
        (0..=self.halvings)
            .map(|k| self.alpha0 * 0.5f64.powi(k as i32))
            .collect()
    }
}

fn class_exponents(loss_p: &LossSpec, loss_q: &LossSpec, opts: &RefutationOptions) -> Result<(f64, f64)> {
    let p = classify_exponent(loss_p, 0.0, opts.classifier)?.p_hat;
    let q = classify_exponent(loss_q, 0.0, opts.classifier)?.p_hat;
    if p <= 1.0 || q <= 1.0 || (p - q).abs() <= opts.class_gap {
        return Err(Error::ClassPrecondition { p, q });
    }
    Ok((p, q))
}

/// Solves the `L_p` minimax problem and tests whether its solution can be
/// improved for `L_q`.
pub fn refute_joint_minimaxity(
    model: &GaussianLocationModel,
    family: &FamilySpec,
    loss_p: &LossSpec,
    loss_q: &LossSpec,
    theta_interval: &Interval,
    opts: &RefutationOptions,
) -> Result<RefutationCertificate> {
    class_exponents(loss_p, loss_q, opts)?;
    let optimum = solve_minimax(model, family, loss_p, theta_interval, &opts.minimax)?;
    refute_at_optimum(model, family, loss_p, loss_q, theta_interval, &optimum, opts)
}

/// [`refute_joint_minimaxity`] from an already computed `L_p` optimum.
pub fn refute_at_optimum(
    model: &GaussianLocationModel,
    family: &FamilySpec,
    loss_p: &LossSpec,
    loss_q: &LossSpec,
    theta_interval: &Interval,
    optimum: &MinimaxResult,
    opts: &RefutationOptions,
) -> Result<RefutationCertificate> {
    let (p, q) = class_exponents(loss_p, loss_q, opts)?;
    let wc = &opts.minimax.worst_case;
    let x_star = optimum.best_params.clone();
    let worst = |x: &[f64], loss: &LossSpec| family_worst_case(model, family, x, loss, theta_interval, wc).map(|r| r.sup_value);

    let rp_star = worst(&x_star, loss_p)?;
    let rq_star = worst(&x_star, loss_q)?;
    let gradient_p = grad_worst_case(model, family, &x_star, loss_p, theta_interval, opts.fd_step, wc)?;
    let gradient_q = grad_worst_case(model, family, &x_star, loss_q, theta_interval, opts.fd_step, wc)?;
    let gradient_p_norm = norm(&gradient_p);
    let gradient_q_norm = norm(&gradient_q);

    let mut cert = RefutationCertificate {
        p,
        q,
        delta_star_params: x_star.clone(),
        rp_star,
        rq_star,
        gradient_p,
        gradient_p_norm,
        gradient_q: gradient_q.clone(),
        gradient_q_norm,
        direction: vec![0.0; x_star.len()],
        alpha: 0.0,
        delta_rq: 0.0,
        delta_rp: 0.0,
        taylor_slope_p: None,
        ladder: Vec::new(),
        verdict: Verdict::StationaryBoth,
    };
    if gradient_q_norm <= opts.stationarity_tol * rq_star.abs() {
        return Ok(cert);
    }

    let direction: Vec<f64> = gradient_q.iter().map(|g| -g / gradient_q_norm).collect();
    let trial_points: Vec<(f64, Vec<f64>)> = opts
        .alpha_ladder()
        .into_iter()
        .map(|alpha| {
            let x: Vec<f64> = x_star.iter().zip(&direction).map(|(x, v)| x + alpha * v).collect();
            (alpha, x)
        })
        .filter(|(_, x)| family.contains(x))
        .collect();
    let ladder: Vec<LadderStep> = trial_points
        .par_iter()
        .map(|(alpha, x)| {
            Ok(LadderStep {
                alpha: *alpha,
                delta_rp: worst(x, loss_p)? - rp_star,
                delta_rq: worst(x, loss_q)? - rq_star,
            })
        })
        .collect::<Result<_>>()?;
    cert.direction = direction;

    let descending: Vec<&LadderStep> = ladder.iter().filter(|s| s.delta_rq < 0.0).collect();
    match descending.first() {
        None => {
            if let Some(last) = ladder.last() {
                cert.alpha = last.alpha;
                cert.delta_rp = last.delta_rp;
                cert.delta_rq = last.delta_rq;
            }
            cert.verdict = Verdict::NoDescentInFamily;
        }
        Some(first) => {
            cert.alpha = first.alpha;
            cert.delta_rp = first.delta_rp;
            cert.delta_rq = first.delta_rq;
            let tail = &descending[descending.len().saturating_sub(opts.taylor_points)..];
            cert.taylor_slope_p = log_log_slope(tail);
            let (lo, hi) = opts.slope_range;
            cert.verdict = match cert.taylor_slope_p {
                Some(s) if (lo..=hi).contains(&s) => Verdict::Refuted,
                _ => Verdict::Inconclusive,
            };
        }
    }
    cert.ladder = ladder;
    Ok(cert)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Least-squares slope of `log |delta_rp|` on `log alpha`; `None` with
/// fewer than two usable steps.
fn log_log_slope(steps: &[&LadderStep]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .filter(|s| s.delta_rp != 0.0 && s.delta_rp.is_finite())
        .map(|s| (s.alpha.ln(), s.delta_rp.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Worst-case risks of a rule and of its sign perturbation toward
/// `theta_star`, both by Monte Carlo with common random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignPerturbationReport {
    pub base: WorstCaseResult,
    pub perturbed: WorstCaseResult,
}

/// Compares `base` with `base + epsilon * sgn(theta_star - base)`. An
/// `epsilon` of zero leaves the rule unchanged.
#[allow(clippy::too_many_arguments)]
pub fn sign_perturbation_risk(
    model: &GaussianLocationModel,
    base: &EstimatorSpec,
    epsilon: f64,
    theta_star: f64,
    loss: &LossSpec,
    theta_interval: &Interval,
    mc: McSettings,
    opts: &WorstCaseOptions,
) -> Result<SignPerturbationReport> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be non-negative, got {epsilon}")));
    }
    let perturbed = if epsilon == 0.0 {
        base.clone()
    } else {
        EstimatorSpec::sign_perturbed(base.clone(), epsilon, theta_star)?
    };
    let method = RiskMethod::MonteCarlo {
        samples: mc.samples,
        seed: mc.seed,
    };
    Ok(SignPerturbationReport {
        base: worst_case_risk_with(model, base, loss, theta_interval, opts, method)?,
        perturbed: worst_case_risk_with(model, &perturbed, loss, theta_interval, opts, method)?,
    })
}

fn check_appendix_args(n: usize, q: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("q must exceed 1, got {q}")));
    }
    Ok(())
}

/// `f(alpha) = E|Z / sqrt(n) - alpha|^q`: the `L_q` risk of the sample mean
/// shifted by `-alpha` under unit variance.
pub fn appendix_f(alpha: f64, n: usize, q: f64) -> Result<f64> {
    check_appendix_args(n, q)?;
    let s = 1.0 / (n as f64).sqrt();
    Ok(normal_expectation(|e| abs_pow(e, q), -alpha, s, &[0.0], DEFAULT_ORDER).value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    /// `-q E[(W - alpha) |W - alpha|^(q - 2)]` with `W = Z / sqrt(n)`.
    Analytic,
    /// Central difference of [`appendix_f`] with step [`FD_STEP`].
    FiniteDifference,
}

pub const FD_STEP: f64 = 1e-5;

pub fn appendix_fprime(alpha: f64, n: usize, q: f64, mode: DerivativeMode) -> Result<f64> {
    check_appendix_args(n, q)?;
    match mode {
        DerivativeMode::Analytic => {
            let s = 1.0 / (n as f64).sqrt();
            let e = normal_expectation(
                |e: f64| e.signum() * abs_pow(e, q - 1.0),
                -alpha,
                s,
                &[0.0],
                DEFAULT_ORDER,
            );
            Ok(-q * e.value)
        }
        DerivativeMode::FiniteDifference => {
            let up = appendix_f(alpha + FD_STEP, n, q)?;
            let down = appendix_f(alpha - FD_STEP, n, q)?;
            Ok((up - down) / (2.0 * FD_STEP))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixRow {
    pub alpha: f64,
    pub f: f64,
    pub fprime_analytic: f64,
    pub fprime_fd: f64,
}

pub fn appendix_table(alphas: &[f64], n: usize, q: f64) -> Result<Vec<AppendixRow>> {
    alphas
        .iter()
        .map(|&alpha| {
            Ok(AppendixRow {
                alpha,
                f: appendix_f(alpha, n, q)?,
                fprime_analytic: appendix_fprime(alpha, n, q, DerivativeMode::Analytic)?,
                fprime_fd: appendix_fprime(alpha, n, q, DerivativeMode::FiniteDifference)?,
            })
        })
        .collect()
}

/// Sign of `f'(alpha)` over the rows with `alpha > 0`: the shift `-alpha`
/// raises the `L_q` risk exactly when every such derivative is positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlopeSignSummary {
    pub positive_alphas: usize,
    pub positive_slopes: usize,
    pub negative_slopes: usize,
}

impl SlopeSignSummary {
    pub fn from_rows(rows: &[AppendixRow]) -> Self {
        let pos: Vec<&AppendixRow> = rows.iter().filter(|r| r.alpha > 0.0).collect();
        Self {
            positive_alphas: pos.len(),
            positive_slopes: pos.iter().filter(|r| r.fprime_analytic > 0.0).count(),
            negative_slopes: pos.iter().filter(|r| r.fprime_analytic < 0.0).count(),
        }
    }

    /// Whether `f'(alpha) < 0` held for every positive `alpha`.
    pub fn decreasing_claim_holds(&self) -> bool {
        self.positive_alphas > 0 && self.negative_slopes == self.positive_alphas
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionClass {
    pub exponent: f64,
    pub params: Vec<f64>,
    pub value: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub classes: Vec<PartitionClass>,
    /// True iff every witness is [`Verdict::Refuted`].
    pub pairwise_disjoint: bool,
    /// One certificate per ordered pair `(i, j)`, `i != j`, testing the
    /// class-`i` minimax rule against class `j`.
    pub witnesses: Vec<RefutationCertificate>,
}

/// Checks that the canonical power losses with the given exponents have
/// pairwise distinct minimax rules within `family`.
pub fn exclusivity_partition_check(
    model: &GaussianLocationModel,
    family: &FamilySpec,
    exponents: &[f64],
    theta_interval: &Interval,
    opts: &RefutationOptions,
) -> Result<PartitionReport> {
    if exponents.len() < 2 {
        return Err(Error::InsufficientClasses(exponents.len()));
    }
    for (i, p) in exponents.iter().enumerate() {
        if !(*p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("exponents must exceed 1, got {p}")));
        }
        if exponents[..i].iter().any(|q| (p - q).abs() <= opts.class_gap) {
            return Err(Error::InvalidArgument(format!("exponent {p} is listed twice")));
        }
    }
    let losses: Vec<LossSpec> = exponents.iter().map(|p| LossSpec::canonical(*p)).collect();
    let report = realizability_report(model, family, &losses, theta_interval, &opts.minimax)?;

    let pairs: Vec<(usize, usize)> = (0..losses.len())
        .flat_map(|i| (0..losses.len()).filter(move |j| *j != i).map(move |j| (i, j)))
        .collect();
    let witnesses: Vec<RefutationCertificate> = pairs
        .par_iter()
        .map(|&(i, j)| {
            refute_at_optimum(
                model,
                family,
                &losses[i],
                &losses[j],
                theta_interval,
                &report.rows[i].result,
                opts,
            )
        })
        .collect::<Result<_>>()?;

    let classes = exponents
        .iter()
        .zip(&report.rows)
        .map(|(p, row)| PartitionClass {
            exponent: *p,
            params: row.result.best_params.clone(),
            value: row.result.minimax_value,
            converged: row.result.converged,
        })
        .collect();
    let pairwise_disjoint = witnesses.iter().all(|w| w.verdict == Verdict::Refuted);
    Ok(PartitionReport {
        classes,
        pairwise_disjoint,
        witnesses,
    })
}
