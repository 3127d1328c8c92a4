//! Frequentist risk under power-type losses in the Gaussian location model.
//!
//! The crate evaluates pointwise and worst-case risk of estimators
//! ([`risk`]), solves minimax problems over parametric estimator families
//! ([`minimax`]), classifies losses by their local exponent ([`loss`]), and
//! builds certificates that a minimax rule for one power class is not
//! minimax for another ([`exclusivity`]).
//!
//! ```
//! use minmax_lab::{risk, EstimatorSpec, GaussianLocationModel, LossSpec, RiskMethod};
//!
//! let model = GaussianLocationModel::new(4, 1.0).unwrap();
//! let mean = EstimatorSpec::affine(1.0, 0.0);
//! let r = risk(&model, &mean, &LossSpec::canonical(2.0), 0.3, RiskMethod::quadrature()).unwrap();
//! assert!((r.value - 0.25).abs() < 1e-12);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exclusivity;
pub mod loss;
pub mod minimax;
pub mod model;
pub mod optim;
pub mod quadrature;
pub mod risk;
pub mod seed;

pub use error::{Error, Result};
pub use exclusivity::{
    appendix_f, appendix_fprime, appendix_table, exclusivity_partition_check, grad_worst_case,
    refute_at_optimum, refute_joint_minimaxity, sign_perturbation_risk, AppendixRow,
    DerivativeMode, LadderStep, PartitionClass, PartitionReport, RefutationCertificate,
    RefutationOptions, SignPerturbationReport, SlopeSignSummary, Verdict,
};
pub use loss::{
    classify_exponent, same_class, scale_loss, ClassifierWindow, ExponentClassification, LossSpec,
};
pub use minimax::{
    family_worst_case, realizability_report, solve_minimax, FamilySpec, MinimaxOptions,
    MinimaxResult, RealizabilityReport, RealizabilityRow,
};
pub use model::{
    error_law, simulate_estimates, ErrorLaw, EstimatorSpec, GaussianLocationModel, Interval,
    McSettings,
};
pub use risk::{
    crosscheck_risk, quadrature_converged, risk, risk_from_law, worst_case_risk,
    worst_case_risk_with, Crosscheck, RiskEstimate, RiskMethod, WorstCaseOptions, WorstCaseResult,
};
