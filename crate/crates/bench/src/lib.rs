//! Shared fixtures for the benchmarks.

use minmax_lab::{FamilySpec, GaussianLocationModel, Interval};

pub fn unit_model() -> GaussianLocationModel {
    GaussianLocationModel::new(1, 1.0).expect("valid model")
}

pub fn bounded_theta() -> Interval {
    Interval::new(-3.0, 3.0).expect("valid interval")
}

pub fn affine_family() -> FamilySpec {
    FamilySpec::affine(
        Interval::new(0.0, 1.5).expect("valid interval"),
        Interval::new(-1.0, 1.0).expect("valid interval"),
    )
}
