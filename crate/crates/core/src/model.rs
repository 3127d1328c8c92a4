//! The Gaussian location model, parameter intervals and estimator families.
//!
//! Estimators are plain data ([`EstimatorSpec`]) evaluated against a simulated
//! sample; none of them can observe the true parameter.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// A closed parameter interval `[lo, hi]` with finite bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Finite stand-in for the whole real line.
    pub const UNBOUNDED_PROXY: Interval = Interval { lo: -50.0, hi: 50.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    /// `points` evenly spaced values including both endpoints.
    pub fn linspace(&self, points: usize) -> Vec<f64> {
        match points {
            0 => Vec::new(),
            1 => vec![self.midpoint()],
            _ => {
                let step = self.width() / (points - 1) as f64;
                (0..points)
                    .map(|i| {
                        if i + 1 == points {
                            self.hi
                        } else {
                            self.lo + step * i as f64
                        }
                    })
                    .collect()
            }
        }
    }
}

/// `X_1, ..., X_n` i.i.d. `Normal(theta, sigma^2)` with known `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianLocationModel {
    pub n: usize,
    pub sigma: f64,
}

impl GaussianLocationModel {
    pub fn new(n: usize, sigma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("sample size must be at least 1".into()));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidModel(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { n, sigma })
    }

    /// Standard deviation of the sample mean, `sigma / sqrt(n)`.
    pub fn mean_sd(&self) -> f64 {
        self.sigma / (self.n as f64).sqrt()
    }
}

/// A decision rule `delta(X)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorSpec {
    /// `gamma * mean(X) + beta`.
    AffineMean { gamma: f64, beta: f64 },
    /// `median(X) + beta`; even sample sizes use the midpoint of the two
    /// central order statistics.
    SampleMedian { beta: f64 },
    /// `base(X) + epsilon * sgn(theta_star - base(X))`, with `sgn(0) = 0`.
    SignPerturbed {
        base: Box<EstimatorSpec>,
        epsilon: f64,
        theta_star: f64,
    },
}

impl EstimatorSpec {
    pub fn affine(gamma: f64, beta: f64) -> Self {
        Self::AffineMean { gamma, beta }
    }

    pub fn median(beta: f64) -> Self {
        Self::SampleMedian { beta }
    }

    pub fn sign_perturbed(base: EstimatorSpec, epsilon: f64, theta_star: f64) -> Result<Self> {
        let spec = Self::SignPerturbed {
            base: Box::new(base),
            epsilon,
            theta_star,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidEstimator(format!("{name} must be finite, got {v}")))
            }
        };
        match self {
            Self::AffineMean { gamma, beta } => {
                finite("gamma", *gamma)?;
                finite("beta", *beta)
            }
            Self::SampleMedian { beta } => finite("beta", *beta),
            Self::SignPerturbed {
                base,
                epsilon,
                theta_star,
            } => {
                if matches!(**base, Self::SignPerturbed { .. }) {
                    return Err(Error::InvalidEstimator(
                        "sign perturbations cannot be nested".into(),
                    ));
                }
                if !(epsilon.is_finite() && *epsilon > 0.0) {
                    return Err(Error::InvalidEstimator(format!(
                        "epsilon must be positive, got {epsilon}"
                    )));
                }
                finite("theta_star", *theta_star)?;
                base.validate()
            }
        }
    }

    /// True when the law of `delta(X) - theta` does not depend on `theta`.
    pub fn is_location_equivariant(&self) -> bool {
        match self {
            Self::AffineMean { gamma, .. } => *gamma == 1.0,
            Self::SampleMedian { .. } => true,
            Self::SignPerturbed { .. } => false,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::AffineMean { gamma, beta } => format!("affine(gamma={gamma}, beta={beta})"),
            Self::SampleMedian { beta } => format!("median(beta={beta})"),
            Self::SignPerturbed {
                base,
                epsilon,
                theta_star,
            } => format!(
                "sign_perturbed({}, epsilon={epsilon}, theta_star={theta_star})",
                base.name()
            ),
        }
    }

    /// Evaluates the rule on one sample simulated from `rng`. Affine rules
    /// draw the sample mean directly; `buf` is scratch space for rules that
    /// need the full sample.
    fn draw<R: rand::Rng>(
        &self,
        model: &GaussianLocationModel,
        theta: f64,
        rng: &mut R,
        buf: &mut Vec<f64>,
    ) -> f64 {
        match self {
            Self::AffineMean { gamma, beta } => {
                let z: f64 = StandardNormal.sample(rng);
                let mean = theta + model.mean_sd() * z;
                gamma * mean + beta
            }
            Self::SampleMedian { beta } => {
                buf.clear();
                buf.extend((0..model.n).map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    theta + model.sigma * z
                }));
                median_in_place(buf) + beta
            }
            Self::SignPerturbed {
                base,
                epsilon,
                theta_star,
            } => {
                let b = base.draw(model, theta, rng, buf);
                b + epsilon * sign(theta_star - b)
            }
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Median of a non-empty buffer; reorders the buffer.
pub(crate) fn median_in_place(xs: &mut [f64]) -> f64 {
    let n = xs.len();
    let mid = n / 2;
    let (lower, upper, _) = xs.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower_max + upper)
    }
}

/// Monte Carlo size and seed for rules without a closed-form error law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub samples: usize,
    pub seed: u64,
}

impl McSettings {
    /// Smallest sample count accepted for an empirical error law.
    pub const MIN_SAMPLES: usize = 10_000;

    pub fn new(samples: usize, seed: u64) -> Self {
        Self { samples, seed }
    }
}

/// Law of the estimation error `delta(X) - theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorLaw {
    /// `mu + s * Z` with `Z ~ Normal(0, 1)`.
    AffineGaussian { mu: f64, s: f64 },
    /// Simulated errors, reproducible from `seed`.
    Empirical { samples: Vec<f64>, seed: u64 },
}

/// Law of `delta(X) - theta` under `P_theta`.
///
/// Affine rules get the exact Gaussian law; other rules are simulated with
/// `mc`, which must provide at least [`McSettings::MIN_SAMPLES`] draws.
pub fn error_law(
    model: &GaussianLocationModel,
    est: &EstimatorSpec,
    theta: f64,
    mc: McSettings,
) -> Result<ErrorLaw> {
    est.validate()?;
    match est {
        EstimatorSpec::AffineMean { gamma, beta } => Ok(ErrorLaw::AffineGaussian {
            mu: (gamma - 1.0) * theta + beta,
            s: gamma.abs() * model.mean_sd(),
        }),
        _ => {
            if mc.samples < McSettings::MIN_SAMPLES {
                return Err(Error::InvalidArgument(format!(
                    "empirical error laws need at least {} samples, got {}",
                    McSettings::MIN_SAMPLES,
                    mc.samples
                )));
            }
            let mut samples = simulate_estimates(model, est, theta, mc.samples, mc.seed)?;
            samples.iter_mut().for_each(|x| *x -= theta);
            Ok(ErrorLaw::Empirical {
                samples,
                seed: mc.seed,
            })
        }
    }
}

/// Draws per independently seeded chunk in [`simulate_estimates`].
pub const SIMULATION_CHUNK: usize = 1 << 16;

/// `count` independent draws of `delta(X)` under `P_theta`.
///
/// Draws are produced in chunks of [`SIMULATION_CHUNK`]; chunk `k` uses a
/// ChaCha8 stream seeded with `derive_seed(seed, k)`. The output is
/// therefore identical for any thread count.
pub fn simulate_estimates(
    model: &GaussianLocationModel,
    est: &EstimatorSpec,
    theta: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    est.validate()?;
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    if !theta.is_finite() {
        return Err(Error::InvalidArgument(format!("theta must be finite, got {theta}")));
    }
    let chunks = count.div_ceil(SIMULATION_CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let len = SIMULATION_CHUNK.min(count - k * SIMULATION_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
            let mut buf = Vec::with_capacity(model.n);
            (0..len)
                .map(|_| est.draw(model, theta, &mut rng, &mut buf))
                .collect()
        })
        .collect();
    Ok(parts.concat())
}
