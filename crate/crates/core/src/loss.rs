//! Loss functions, positive scaling, and power-class membership.
//!
//! Every loss here is a symmetric function of the error `t = theta - a`.
//! Power-class membership (`L ~ c |t|^p` as `t -> 0`) is decided by a
//! log-log regression of `L(theta0, theta0 + h)` on `h` over a geometric
//! window of small `h`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    /// `c * |t|^p`.
    Power { p: f64, c: f64 },
    /// `lambda * inner`.
    Scaled { lambda: f64, inner: Box<LossSpec> },
    /// Pointwise sum of the terms.
    Sum { terms: Vec<LossSpec> },
    /// `t^2 / 2` for `|t| <= k`, else `k |t| - k^2 / 2`.
    Huber { k: f64 },
}

impl LossSpec {
    pub fn power(p: f64, c: f64) -> Self {
        Self::Power { p, c }
    }

    /// `|t|^p`, the canonical member of its power class.
    pub fn canonical(p: f64) -> Self {
        Self::Power { p, c: 1.0 }
    }

    pub fn huber(k: f64) -> Self {
        Self::Huber { k }
    }

    pub fn sum(terms: Vec<LossSpec>) -> Self {
        Self::Sum { terms }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidLoss(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            Self::Power { p, c } => {
                positive("p", *p)?;
                positive("c", *c)
            }
            Self::Scaled { lambda, inner } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return Err(Error::NonPositiveScale(*lambda));
                }
                inner.validate()
            }
            Self::Sum { terms } => {
                if terms.is_empty() {
                    return Err(Error::InvalidLoss("sum needs at least one term".into()));
                }
                terms.iter().try_for_each(LossSpec::validate)
            }
            Self::Huber { k } => positive("k", *k),
        }
    }

    /// `L(theta, a)`.
    pub fn eval(&self, theta: f64, a: f64) -> f64 {
        self.eval_error(theta - a)
    }

    /// The loss as a function of the error `t = theta - a`.
    pub fn eval_error(&self, t: f64) -> f64 {
        match self {
            Self::Power { p, c } => c * abs_pow(t, *p),
            Self::Scaled { lambda, inner } => lambda * inner.eval_error(t),
            Self::Sum { terms } => terms.iter().map(|l| l.eval_error(t)).sum(),
            Self::Huber { k } => {
                let a = t.abs();
                if a <= *k {
                    0.5 * t * t
                } else {
                    k * a - 0.5 * k * k
                }
            }
        }
    }

    /// Error values at which the loss fails to be smooth, sorted and
    /// deduplicated. Quadrature splits its panels at these points.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breakpoints(&mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn collect_breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            Self::Power { p, .. } => {
                let even_integer = p.fract() == 0.0 && (*p as u64) % 2 == 0;
                if !even_integer {
                    out.push(0.0);
                }
            }
            Self::Scaled { inner, .. } => inner.collect_breakpoints(out),
            Self::Sum { terms } => terms.iter().for_each(|l| l.collect_breakpoints(out)),
            Self::Huber { k } => {
                out.push(-k);
                out.push(*k);
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Power { p, c } => format!("power(p={p}, c={c})"),
            Self::Scaled { lambda, inner } => format!("scaled({lambda}, {})", inner.describe()),
            Self::Sum { terms } => {
                let parts: Vec<String> = terms.iter().map(LossSpec::describe).collect();
                format!("sum[{}]", parts.join(", "))
            }
            Self::Huber { k } => format!("huber(k={k})"),
        }
    }
}

/// `|t|^p`, exact for small integer exponents.
pub(crate) fn abs_pow(t: f64, p: f64) -> f64 {
    let a = t.abs();
    if p.fract() == 0.0 && p <= 16.0 {
        a.powi(p as i32)
    } else {
        a.powf(p)
    }
}

/// `lambda * loss`. Losses form a cone: only positive multiples stay losses.
pub fn scale_loss(loss: &LossSpec, lambda: f64) -> Result<LossSpec> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::NonPositiveScale(lambda));
    }
    loss.validate()?;
    Ok(LossSpec::Scaled {
        lambda,
        inner: Box::new(loss.clone()),
    })
}

/// Geometric range of offsets `h` used by [`classify_exponent`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierWindow {
    pub h_min: f64,
    pub h_max: f64,
    pub points: usize,
}

impl Default for ClassifierWindow {
    fn default() -> Self {
        Self {
            h_min: 1e-5,
            h_max: 1e-2,
            points: 16,
        }
    }
}

impl ClassifierWindow {
    pub fn new(h_min: f64, h_max: f64, points: usize) -> Result<Self> {
        let w = Self { h_min, h_max, points };
        w.validate()?;
        Ok(w)
    }

    fn validate(&self) -> Result<()> {
        if !(self.h_min > 0.0 && self.h_min < self.h_max && self.h_max < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "classifier window needs 0 < h_min < h_max < 1, got ({}, {})",
                self.h_min, self.h_max
            )));
        }
        if self.points < 8 {
            return Err(Error::InvalidArgument(format!(
                "classifier needs at least 8 points, got {}",
                self.points
            )));
        }
        Ok(())
    }

    fn offsets(&self) -> Vec<f64> {
        let (a, b) = (self.h_min.ln(), self.h_max.ln());
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| (a + (b - a) * i as f64 / last).exp())
            .collect()
    }
}

/// Result of fitting `log L = log c + p log h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentClassification {
    pub p_hat: f64,
    pub c_hat: f64,
    pub window: (f64, f64),
    /// Largest absolute residual of the log-log fit.
    pub fit_residual: f64,
}

pub fn classify_exponent(
    loss: &LossSpec,
    theta0: f64,
    window: ClassifierWindow,
) -> Result<ExponentClassification> {
    loss.validate()?;
    window.validate()?;
    let hs = window.offsets();
    let mut xs = Vec::with_capacity(hs.len());
    let mut ys = Vec::with_capacity(hs.len());
    for &h in &hs {
        let v = loss.eval(theta0, theta0 + h);
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::DegenerateLoss { h });
        }
        xs.push(h.ln());
        ys.push(v.ln());
    }

    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let fit_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);

    Ok(ExponentClassification {
        p_hat: slope,
        c_hat: intercept.exp(),
        window: (window.h_min, window.h_max),
        fit_residual,
    })
}

/// Whether two losses fall in the same power class, judged by their fitted
/// exponents at `theta0 = 0` over the default window.
pub fn same_class(loss1: &LossSpec, loss2: &LossSpec, tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let w = ClassifierWindow::default();
    let a = classify_exponent(loss1, 0.0, w)?;
    let b = classify_exponent(loss2, 0.0, w)?;
    Ok((a.p_hat - b.p_hat).abs() <= tol)
}
