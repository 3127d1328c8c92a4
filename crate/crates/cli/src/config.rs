//! Run configuration: a TOML document with named sections.
//!
//! ```toml
//! seed = 7
//!
//! [model]
//! n = 1
//! sigma = 1.0
//!
//! [theta]
//! lo = -3.0
//! hi = 3.0
//!
//! [losses.l2]
//! kind = "power"
//! p = 2.0
//!
//! [losses.l2x3]
//! kind = "scaled"
//! lambda = 3.0
//! inner = "l2"
//! ```
//!
//! Losses refer to each other by name (`inner`, `terms`). Command sections
//! (`[risk]`, `[minimax]`, `[exclusivity]`, `[appendix]`, `[classify]`) are
//! only read by the command that needs them.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use minmax_lab::{
    ClassifierWindow, EstimatorSpec, FamilySpec, GaussianLocationModel, Interval, LossSpec,
    McSettings, MinimaxOptions, RefutationOptions, WorstCaseOptions,
};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    model: RawModel,
    theta: Option<RawInterval>,
    #[serde(default)]
    losses: BTreeMap<String, RawLoss>,
    estimator: Option<toml::Value>,
    family: Option<RawFamily>,
    risk: Option<RawRisk>,
    minimax: Option<RawMinimax>,
    exclusivity: Option<RawExclusivity>,
    appendix: Option<RawAppendix>,
    classify: Option<RawClassify>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    n: usize,
    #[serde(default = "one")]
    sigma: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInterval {
    lo: f64,
    hi: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawLoss {
    Power {
        p: f64,
        #[serde(default = "one")]
        c: f64,
    },
    Scaled {
        lambda: f64,
        inner: String,
    },
    Sum {
        terms: Vec<String>,
    },
    Huber {
        k: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawFamily {
    Affine {
        #[serde(default = "default_gamma_range")]
        gamma: [f64; 2],
        #[serde(default = "default_beta_range")]
        beta: [f64; 2],
    },
    MedianShift {
        #[serde(default = "default_beta_range")]
        beta: [f64; 2],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRisk {
    loss: String,
    #[serde(default = "default_method")]
    method: MethodKind,
    theta: Option<Vec<f64>>,
    theta_points: Option<usize>,
    nodes: Option<usize>,
    samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMinimax {
    loss: Option<String>,
    restarts: Option<usize>,
    grid: Option<usize>,
    refine_tol: Option<f64>,
    nodes: Option<usize>,
    samples: Option<usize>,
    step_tol: Option<f64>,
    agreement_tol: Option<f64>,
    max_evaluations: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExclusivity {
    exponents: Vec<f64>,
    fd_step: Option<f64>,
    stationarity_tol: Option<f64>,
    alpha0: Option<f64>,
    halvings: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAppendix {
    #[serde(default = "one_usize")]
    n: usize,
    q: f64,
    alphas: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClassify {
    losses: Option<Vec<String>>,
    #[serde(default)]
    theta0: f64,
    h_min: Option<f64>,
    h_max: Option<f64>,
    points: Option<usize>,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_gamma_range() -> [f64; 2] {
    [0.0, 1.5]
}

fn default_beta_range() -> [f64; 2] {
    [-1.0, 1.0]
}

fn default_method() -> MethodKind {
    MethodKind::Quadrature
}

/// A parsed configuration with every loss reference resolved.
#[derive(Debug)]
pub struct RunConfig {
    /// Seed from the file, possibly overridden on the command line.
    pub seed: Option<u64>,
    pub model: GaussianLocationModel,
    pub theta: Interval,
    pub losses: BTreeMap<String, LossSpec>,
    estimator: Option<toml::Value>,
    family: Option<RawFamily>,
    risk: Option<RawRisk>,
    minimax: Option<RawMinimax>,
    exclusivity: Option<RawExclusivity>,
    appendix: Option<RawAppendix>,
    classify: Option<RawClassify>,
}

pub struct RiskPlan {
    pub loss_name: String,
    pub loss: LossSpec,
    pub estimator: EstimatorSpec,
    pub method: MethodKind,
    pub thetas: Vec<f64>,
    pub nodes: usize,
    pub samples: usize,
    pub seed: Option<u64>,
}

pub struct MinimaxPlan {
    pub loss_name: String,
    pub loss: LossSpec,
    pub family: FamilySpec,
    pub options: MinimaxOptions,
}

pub struct ExclusivityPlan {
    pub family: FamilySpec,
    pub exponents: Vec<f64>,
    pub options: RefutationOptions,
}

pub struct AppendixPlan {
    pub n: usize,
    pub q: f64,
    pub alphas: Vec<f64>,
}

pub struct ClassifyPlan {
    pub losses: Vec<(String, LossSpec)>,
    pub theta0: f64,
    pub window: ClassifierWindow,
}

impl RunConfig {
    pub fn parse(text: &str, seed_override: Option<u64>) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let model = GaussianLocationModel::new(raw.model.n, raw.model.sigma)?;
        let theta = match raw.theta {
            Some(t) => Interval::new(t.lo, t.hi)?,
            None => Interval::UNBOUNDED_PROXY,
        };
        let losses = resolve_losses(&raw.losses)?;
        Ok(Self {
            seed: seed_override.or(raw.seed),
            model,
            theta,
            losses,
            estimator: raw.estimator,
            family: raw.family,
            risk: raw.risk,
            minimax: raw.minimax,
            exclusivity: raw.exclusivity,
            appendix: raw.appendix,
            classify: raw.classify,
        })
    }

    /// Seed written to output headers; zero when none was given.
    pub fn seed_or_default(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn require_seed(&self, what: &str) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| {
            CliError::Config(format!("missing `seed`: {what} uses Monte Carlo and needs a seed"))
        })
    }

    fn loss(&self, name: &str) -> Result<LossSpec, CliError> {
        self.losses
            .get(name)
            .cloned()
            .ok_or_else(|| CliError::Config(format!("unknown loss `{name}`")))
    }

    fn family(&self) -> Result<FamilySpec, CliError> {
        let range = |r: [f64; 2]| Interval::new(r[0], r[1]).map_err(CliError::from);
        Ok(match &self.family {
            None => FamilySpec::affine(range(default_gamma_range())?, range(default_beta_range())?),
            Some(RawFamily::Affine { gamma, beta }) => FamilySpec::affine(range(*gamma)?, range(*beta)?),
            Some(RawFamily::MedianShift { beta }) => FamilySpec::MedianShift {
                beta_range: range(*beta)?,
            },
        })
    }

    fn minimax_options(&self, family: &FamilySpec) -> Result<MinimaxOptions, CliError> {
        let d = MinimaxOptions::default();
        let empty = RawMinimax::default();
        let m = self.minimax.as_ref().unwrap_or(&empty);
        let wc = WorstCaseOptions::default();
        let simulated = matches!(family, FamilySpec::MedianShift { .. });
        let seed = if simulated {
            self.require_seed("the median family")?
        } else {
            self.seed_or_default()
        };
        Ok(MinimaxOptions {
            restarts: m.restarts.unwrap_or(d.restarts),
            seed,
            worst_case: WorstCaseOptions {
                grid: m.grid.unwrap_or(wc.grid),
                refine_tol: m.refine_tol.unwrap_or(wc.refine_tol),
                nodes: m.nodes.unwrap_or(wc.nodes),
                mc: McSettings::new(m.samples.unwrap_or(wc.mc.samples), seed),
            },
            step_tol: m.step_tol.unwrap_or(d.step_tol),
            agreement_tol: m.agreement_tol.unwrap_or(d.agreement_tol),
            xtol: d.xtol,
            max_evaluations: m.max_evaluations.unwrap_or(d.max_evaluations),
        })
    }

    pub fn risk_plan(&self) -> Result<RiskPlan, CliError> {
        let r = self.risk.as_ref().ok_or_else(|| missing("risk"))?;
        let estimator = self.estimator()?;
        let thetas = match (&r.theta, r.theta_points) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("give either `risk.theta` or `risk.theta_points`, not both".into()))
            }
            (Some(t), None) => t.clone(),
            (None, points) => self.theta.linspace(points.unwrap_or(11)),
        };
        if thetas.is_empty() || thetas.iter().any(|t| !t.is_finite()) {
            return Err(CliError::Config("`risk.theta` must be a non-empty list of finite values".into()));
        }
        let seed = match r.method {
            MethodKind::MonteCarlo => Some(self.require_seed("the risk method")?),
            MethodKind::Quadrature => None,
        };
        Ok(RiskPlan {
            loss_name: r.loss.clone(),
            loss: self.loss(&r.loss)?,
            estimator,
            method: r.method,
            thetas,
            nodes: r.nodes.unwrap_or(minmax_lab::quadrature::DEFAULT_ORDER),
            samples: r.samples.unwrap_or(100_000),
            seed,
        })
    }

    pub fn minimax_plan(&self) -> Result<MinimaxPlan, CliError> {
        let m = self.minimax.as_ref().ok_or_else(|| missing("minimax"))?;
        let loss_name = m
            .loss
            .clone()
            .ok_or_else(|| CliError::Config("missing `minimax.loss`".into()))?;
        let family = self.family()?;
        Ok(MinimaxPlan {
            loss: self.loss(&loss_name)?,
            loss_name,
            options: self.minimax_options(&family)?,
            family,
        })
    }

    pub fn exclusivity_plan(&self) -> Result<ExclusivityPlan, CliError> {
        let e = self.exclusivity.as_ref().ok_or_else(|| missing("exclusivity"))?;
        let family = self.family()?;
        let d = RefutationOptions::default();
        let options = RefutationOptions {
            minimax: self.minimax_options(&family)?,
            fd_step: e.fd_step.unwrap_or(d.fd_step),
            stationarity_tol: e.stationarity_tol.unwrap_or(d.stationarity_tol),
            alpha0: e.alpha0.unwrap_or(d.alpha0),
            halvings: e.halvings.unwrap_or(d.halvings),
            ..d
        };
        Ok(ExclusivityPlan {
            family,
            exponents: e.exponents.clone(),
            options,
        })
    }

    pub fn appendix_plan(&self) -> Result<AppendixPlan, CliError> {
        let a = self.appendix.as_ref().ok_or_else(|| missing("appendix"))?;
        let alphas = a
            .alphas
            .clone()
            .unwrap_or_else(|| (0..=10).map(|i| i as f64 / 10.0).collect());
        Ok(AppendixPlan {
            n: a.n,
            q: a.q,
            alphas,
        })
    }

    pub fn classify_plan(&self) -> Result<ClassifyPlan, CliError> {
        let empty = RawClassify::default();
        let c = self.classify.as_ref().unwrap_or(&empty);
        let names: Vec<String> = match &c.losses {
            Some(names) => names.clone(),
            None => self.losses.keys().cloned().collect(),
        };
        if names.is_empty() {
            return Err(CliError::Config("no losses to classify".into()));
        }
        let losses = names
            .into_iter()
            .map(|n| self.loss(&n).map(|l| (n, l)))
            .collect::<Result<_, _>>()?;
        let d = ClassifierWindow::default();
        let window = ClassifierWindow::new(
            c.h_min.unwrap_or(d.h_min),
            c.h_max.unwrap_or(d.h_max),
            c.points.unwrap_or(d.points),
        )?;
        Ok(ClassifyPlan {
            losses,
            theta0: c.theta0,
            window,
        })
    }

    fn estimator(&self) -> Result<EstimatorSpec, CliError> {
        let v = self.estimator.as_ref().ok_or_else(|| missing("estimator"))?;
        let est = parse_estimator(v, "estimator")?;
        est.validate()?;
        Ok(est)
    }
}

fn missing(section: &str) -> CliError {
    CliError::Config(format!("missing `[{section}]` section"))
}

fn resolve_losses(raw: &BTreeMap<String, RawLoss>) -> Result<BTreeMap<String, LossSpec>, CliError> {
    fn build(
        name: &str,
        raw: &BTreeMap<String, RawLoss>,
        visiting: &mut BTreeSet<String>,
    ) -> Result<LossSpec, CliError> {
        let def = raw
            .get(name)
            .ok_or_else(|| CliError::Config(format!("unknown loss `{name}`")))?;
        if !visiting.insert(name.to_string()) {
            return Err(CliError::Config(format!("loss `{name}` refers to itself")));
        }
        let spec = match def {
            RawLoss::Power { p, c } => LossSpec::power(*p, *c),
            RawLoss::Huber { k } => LossSpec::huber(*k),
            RawLoss::Scaled { lambda, inner } => {
                let inner = build(inner, raw, visiting)?;
                minmax_lab::scale_loss(&inner, *lambda)?
            }
            RawLoss::Sum { terms } => LossSpec::sum(
                terms
                    .iter()
                    .map(|t| build(t, raw, visiting))
                    .collect::<Result<_, _>>()?,
            ),
        };
        visiting.remove(name);
        spec.validate()?;
        Ok(spec)
    }
    raw.keys()
        .map(|name| Ok((name.clone(), build(name, raw, &mut BTreeSet::new())?)))
        .collect()
}

/// Reads an estimator table. Any field given as the string `theta` would
/// make the rule depend on the unknown parameter and is rejected.
fn parse_estimator(v: &toml::Value, path: &str) -> Result<EstimatorSpec, CliError> {
    let table = v
        .as_table()
        .ok_or_else(|| CliError::Config(format!("`{path}` must be a table")))?;
    for (key, value) in table {
        if let toml::Value::String(s) = value {
            if s.trim().eq_ignore_ascii_case("theta") {
                return Err(minmax_lab::Error::OracleEstimator {
                    field: format!("{path}.{key}"),
                }
                .into());
            }
        }
    }
    let kind = table
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or_else(|| CliError::Config(format!("missing `{path}.kind`")))?;
    let allowed: &[&str] = match kind {
        "affine" => &["kind", "gamma", "beta"],
        "median" => &["kind", "beta"],
        "sign_perturbed" => &["kind", "base", "epsilon", "theta_star"],
        other => return Err(CliError::Config(format!("unknown estimator kind `{other}` in `{path}`"))),
    };
    if let Some(extra) = table.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(CliError::Config(format!("unknown field `{path}.{extra}`")));
    }
    let num = |key: &str, default: Option<f64>| -> Result<f64, CliError> {
        match table.get(key) {
            Some(toml::Value::Float(x)) => Ok(*x),
            Some(toml::Value::Integer(i)) => Ok(*i as f64),
            Some(_) => Err(CliError::Config(format!("`{path}.{key}` must be a number"))),
            None => default.ok_or_else(|| CliError::Config(format!("missing `{path}.{key}`"))),
        }
    };
    Ok(match kind {
        "affine" => EstimatorSpec::affine(num("gamma", Some(1.0))?, num("beta", Some(0.0))?),
        "median" => EstimatorSpec::median(num("beta", Some(0.0))?),
        _ => {
            let base = table
                .get("base")
                .ok_or_else(|| CliError::Config(format!("missing `{path}.base`")))?;
            let base = parse_estimator(base, &format!("{path}.base"))?;
            EstimatorSpec::sign_perturbed(base, num("epsilon", None)?, num("theta_star", None)?)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[model]\nn = 4\n[losses.l2]\nkind = \"power\"\np = 2.0\n";

    #[test]
    fn losses_resolve_by_reference() {
        let text = format!(
            "{BASE}[losses.l2x3]\nkind = \"scaled\"\nlambda = 3.0\ninner = \"l2\"\n\
             [losses.mix]\nkind = \"sum\"\nterms = [\"l2\", \"l2x3\"]\n"
        );
        let cfg = RunConfig::parse(&text, None).unwrap();
        assert_eq!(
            cfg.losses["l2x3"],
            LossSpec::Scaled {
                lambda: 3.0,
                inner: Box::new(LossSpec::canonical(2.0))
            }
        );
        assert!(matches!(&cfg.losses["mix"], LossSpec::Sum { terms } if terms.len() == 2));
        assert_eq!(cfg.theta, Interval::UNBOUNDED_PROXY);
    }

    #[test]
    fn dangling_and_cyclic_references_fail() {
        let text = format!("{BASE}[losses.bad]\nkind = \"scaled\"\nlambda = 2.0\ninner = \"nope\"\n");
        assert!(matches!(RunConfig::parse(&text, None), Err(CliError::Config(_))));
        let text = format!("{BASE}[losses.loop]\nkind = \"sum\"\nterms = [\"loop\"]\n");
        assert!(matches!(RunConfig::parse(&text, None), Err(CliError::Config(_))));
    }

    #[test]
    fn oracle_estimator_is_rejected() {
        let text = format!("{BASE}[estimator]\nkind = \"affine\"\ngamma = 0.0\nbeta = \"theta\"\n[risk]\nloss = \"l2\"\n");
        let cfg = RunConfig::parse(&text, None).unwrap();
        let err = cfg.risk_plan().err().unwrap();
        assert!(matches!(err, CliError::Core(minmax_lab::Error::OracleEstimator { ref field }) if field == "estimator.beta"));
    }

    #[test]
    fn seed_override_wins() {
        let text = format!("seed = 3\n{BASE}");
        assert_eq!(RunConfig::parse(&text, Some(9)).unwrap().seed, Some(9));
        assert_eq!(RunConfig::parse(&text, None).unwrap().seed, Some(3));
    }

    #[test]
    fn monte_carlo_needs_a_seed() {
        let text = format!(
            "{BASE}[estimator]\nkind = \"median\"\n[risk]\nloss = \"l2\"\nmethod = \"monte_carlo\"\n"
        );
        let cfg = RunConfig::parse(&text, None).unwrap();
        let Err(CliError::Config(msg)) = cfg.risk_plan() else {
            panic!("expected a config error")
        };
        assert!(msg.contains("seed"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = format!("{BASE}[modle]\nn = 1\n");
        assert!(RunConfig::parse(&text, None).is_err());
    }
}
