//! Covariances of the limit fields, regime constants, spectral quantities
//! and exact finite-size covariances.

mod exact;
mod identities;
mod regime;
mod spectral;

pub use exact::{
    conditional_cov, exact_cov_pinned, exact_cov_sn, overlap_coefficients, overlap_count,
    parseval_cov, partial_sum_kernel,
};
pub use identities::{check_integrate_r, harmonizable_fbm_integral, IdentityCheck};
pub use regime::{
    normalization, regime_constants, Limit, NRule, RegimeKind, RegimeSpec,
};
pub use spectral::{
    cov_g, cov_g_with, poisson_kernel, psi, psi_with, r_hat, scaling_check, scaling_exponent, CovG, CovGOptions,
};

use crate::special::{beta, gamma};

/// `(s^2H + t^2H - |s - t|^2H) / 2`; `H = 1` gives `s t`.
pub fn fbm_cov(h: f64, s: f64, t: f64) -> f64 {
    if h == 1.0 {
        return s * t;
    }
    let e = 2.0 * h;
    0.5 * (s.powf(e) + t.powf(e) - (s - t).abs().powf(e))
}

/// Fractional Brownian sheet covariance: product of the per-axis factors.
pub fn fbs_cov(h: [f64; 2], s: [f64; 2], t: [f64; 2]) -> f64 {
    fbm_cov(h[0], s[0], t[0]) * fbm_cov(h[1], s[1], t[1])
}

/// `prod_k sqrt(Γ(3 - 2H_k) / (H_k (2H_k - 1)))`.
pub fn sigma_independent(h1: f64, h2: f64) -> f64 {
    [h1, h2]
        .iter()
        .map(|&h| (gamma(3.0 - 2.0 * h) / (h * (2.0 * h - 1.0))).sqrt())
        .product()
}

/// `C_H = π / (H Γ(2H) sin(Hπ))`, the constant in the harmonizable
/// representation of fractional Brownian motion.
pub fn c_harmonizable(h: f64) -> f64 {
    use std::f64::consts::PI;
    PI / (h * gamma(2.0 * h) * (h * PI).sin())
}

/// `B(H - 1/2, 3/2 - H) C_H`.
pub fn c_frak(h: f64) -> f64 {
    beta(h - 0.5, 1.5 - h) * c_harmonizable(h)
}

/// Source of the constants used by the regime formulas. The validation
/// suite takes this as a trait object so its checks can be exercised
/// against deliberately wrong constants.
pub trait TheoryConstants: Sync {
    fn c_frak(&self, h: f64) -> f64;
    fn c_harmonizable(&self, h: f64) -> f64;
}

/// The closed-form constants.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClosedForm;

impl TheoryConstants for ClosedForm {
    fn c_frak(&self, h: f64) -> f64 {
        c_frak(h)
    }

    fn c_harmonizable(&self, h: f64) -> f64 {
        c_harmonizable(h)
    }
}
