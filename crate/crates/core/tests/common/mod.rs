#![allow(dead_code)]

use minmax_lab::{FamilySpec, GaussianLocationModel, Interval};

pub fn unit() -> GaussianLocationModel {
    GaussianLocationModel::new(1, 1.0).unwrap()
}

pub fn affine_family() -> FamilySpec {
    FamilySpec::affine(Interval::new(0.0, 1.5).unwrap(), Interval::new(-1.0, 1.0).unwrap())
}

pub fn theta(m: f64) -> Interval {
    Interval::new(-m, m).unwrap()
}

/// Worst-case L4 risk of `gamma * mean` on `[-m, m]` with n = 1:
/// `mu^4 + 6 mu^2 s^2 + 3 s^4` at `mu = (1 - gamma) m`, `s = gamma`.
pub fn l4_poly(gamma: f64, m: f64) -> f64 {
    let mu = (1.0 - gamma) * m;
    mu.powi(4) + 6.0 * mu * mu * gamma * gamma + 3.0 * gamma.powi(4)
}

/// Worst-case L2 risk of `gamma * mean` on `[-m, m]` with n = 1.
pub fn l2_poly(gamma: f64, m: f64) -> f64 {
    gamma * gamma + (1.0 - gamma).powi(2) * m * m
}

/// Brute-force minimizer of `f` over `[lo, hi]` on a uniform grid.
pub fn scan_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> (f64, f64) {
    (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .map(|x| (x, f(x)))
        .fold((f64::NAN, f64::INFINITY), |best, (x, v)| if v < best.1 { (x, v) } else { best })
}
