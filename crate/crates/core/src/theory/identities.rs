//! Closed-form integrals used to validate the quadrature machinery.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::NodeSet;
use crate::special::beta;

use super::{c_harmonizable, fbm_cov};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub numeric: f64,
    pub closed_form: f64,
    /// Quadrature error estimate of `numeric` (tail bounds included).
    pub error_estimate: f64,
}

impl IdentityCheck {
    pub fn relative_error(&self) -> f64 {
        ((self.numeric - self.closed_form) / self.closed_form).abs()
    }
}

/// Decades of geometric grading on each side of the crossover.
const CROSSOVER_SPAN: i32 = 12;

/// `∫_0^∞ r^-γ / ((r w)^(-2/α) + θ²) dr` by quadrature, next to
/// `(α/2) B(H - 1/2, 3/2 - H) w^(γ-1) / |θ|^(2H-1)` with
/// `H = (3 - α(γ - 1)) / 2`. The integral diverges unless `H ∈ (1/2, 3/2)`,
/// in which case the call is rejected.
pub fn check_integrate_r(alpha: f64, gamma_: f64, w: f64, theta: f64) -> Result<IdentityCheck> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid("alpha", format!("must lie in (0, 2), got {alpha}")));
    }
    if !(w > 0.0 && w < 1.0) {
        return Err(invalid("w", format!("must lie in (0, 1), got {w}")));
    }
    if theta == 0.0 || !theta.is_finite() {
        return Err(invalid("theta", "must be finite and nonzero"));
    }
    let h = (3.0 - alpha * (gamma_ - 1.0)) / 2.0;
    if !(h > 0.5 && h < 1.5) {
        return Err(invalid(
            "gamma",
            format!("H = {h} lies outside (1/2, 3/2); the integral diverges"),
        ));
    }
    let th2 = theta * theta;
    let closed_form = alpha / 2.0 * beta(h - 0.5, 1.5 - h) * w.powf(gamma_ - 1.0)
        / theta.abs().powf(2.0 * h - 1.0);

    let crossover = theta.abs().powf(-alpha) / w;
    let r_lo = crossover * 2f64.powi(-CROSSOVER_SPAN);
    let r_hi = crossover * 2f64.powi(CROSSOVER_SPAN);
    let f = |r: f64| r.powf(-gamma_) / ((r * w).powf(-2.0 / alpha) + th2);

    // below r_lo: expand 1 / (1 + θ² (r w)^(2/α)) in powers of θ² (r w)^(2/α)
    let lower = {
        let mut acc = 0.0;
        for j in 0..40 {
            let e = 2.0 * (j + 1) as f64 / alpha - gamma_ + 1.0;
            let term = th2.powi(j) * w.powf(2.0 * (j + 1) as f64 / alpha) * r_lo.powf(e) / e;
            acc += if j % 2 == 0 { term } else { -term };
            if term.abs() < 1e-18 * acc.abs() {
                break;
            }
        }
        acc
    };
    // above r_hi: expand 1 / (θ² + (r w)^(-2/α)) in powers of (r w)^(-2/α) / θ²
    let upper = {
        let mut acc = 0.0;
        for j in 0..40 {
            let e = gamma_ + 2.0 * j as f64 / alpha - 1.0;
            let term = w.powf(-2.0 * j as f64 / alpha) * r_hi.powf(-e) / (e * th2.powi(j + 1));
            acc += if j % 2 == 0 { term } else { -term };
            if term.abs() < 1e-18 * acc.abs() {
                break;
            }
        }
        acc
    };
    let body = |order| {
        let mut set = NodeSet::new();
        set.add_geometric(r_lo, r_hi, order);
        set.integrate(f)
    };
    let coarse = body(16);
    let fine = body(32);
    Ok(IdentityCheck {
        numeric: lower + fine + upper,
        closed_form,
        error_estimate: (fine - coarse).abs(),
    })
}

/// `∫_R (e^{isθ} - 1) conj(e^{itθ} - 1) / |θ|^(1+2H) dθ` by truncated
/// quadrature, next to `2π C_H Cov(B^H_s, B^H_t)`.
///
/// The integrand is `4 sin(sθ/2) sin(tθ/2) cos((s-t)θ/2) / |θ|^(1+2H)`,
/// equivalently `(1 - cos sθ - cos tθ + cos (s-t)θ) / |θ|^(1+2H)`. Beyond
/// the cutoff the constant part of the numerator is integrated exactly and
/// each cosine term is bounded by integration by parts, which gives the
/// reported error estimate.
pub fn harmonizable_fbm_integral(h: f64, s: f64, t: f64) -> Result<IdentityCheck> {
    if !(h > 0.0 && h < 1.0) {
        return Err(invalid("H", format!("must lie in (0, 1), got {h}")));
    }
    if !(s > 0.0 && t > 0.0) {
        return Err(invalid("s/t", "must be positive"));
    }
    let e = 1.0 + 2.0 * h;
    let top = s.max(t);
    let f = |x: f64| {
        4.0 * (0.5 * s * x).sin() * (0.5 * t * x).sin() * (0.5 * (s - t) * x).cos() / x.powf(e)
    };
    let freqs: Vec<f64> = [s, t, (s - t).abs()]
        .into_iter()
        .filter(|a| *a > 1e-12)
        .collect();
    // cutoff where the integration-by-parts bound on the cosine tails is
    // negligible next to the size of the integral, roughly min(s, t)^(2H)
    let scale = s.min(t).powf(2.0 * h);
    let mut cutoff = 64.0 * PI / top;
    while freqs.iter().map(|a| 2.0 * cutoff.powf(-e) / a).sum::<f64>() > 1e-8 * scale
        && cutoff < 1e7
    {
        cutoff *= 2.0;
    }
    // the numerator's constant part is 1, or 2 when s = t (cos((s-t)θ) = 1)
    let constant = if freqs.len() == 3 { 1.0 } else { 2.0 };
    let const_tail = constant * cutoff.powf(-2.0 * h) / (2.0 * h);
    let osc_bound = freqs.iter().map(|a| 2.0 * cutoff.powf(-e) / a).sum::<f64>();
    // below `start` the integrand is s t θ^(1-2H) up to a relative
    // O((θ top)²) correction; the singularity is integrated exactly
    let start = 1e-6 / top;
    let head = s * t * start.powf(2.0 - 2.0 * h) / (2.0 - 2.0 * h);
    let body = |order| {
        let mut set = NodeSet::new();
        set.add_geometric(start, PI / top, order);
        set.add_uniform(PI / top, cutoff, 0.5 * PI / top, order);
        set.integrate(f)
    };
    let coarse = body(12);
    let fine = body(20);
    let numeric = 2.0 * (head + fine + const_tail);
    Ok(IdentityCheck {
        numeric,
        closed_form: 2.0 * PI * c_harmonizable(h) * fbm_cov(h, s, t),
        error_estimate: 2.0 * ((fine - coarse).abs() + osc_bound),
    })
}
