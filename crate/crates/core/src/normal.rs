//! Standard normal CDF/quantile/pdf, shared by the entry laws and the
//! goodness-of-fit metrics. Thin wrappers over statrs.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters are valid")
}

pub(crate) fn cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

pub(crate) fn pdf(x: f64) -> f64 {
    std_normal().pdf(x)
}

/// Inverse CDF; `p` must lie in (0, 1).
pub(crate) fn quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}
