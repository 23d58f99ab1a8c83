//! Spectral side of the theory: the density `Ψ` of the critical limit, its
//! harmonizable covariance, and the Fourier transform `r̂` of the
//! single-copy covariance.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular::{AngularMeasure, DEFAULT_ORDER};
use crate::error::{invalid, Error, Result};
use crate::persistence::PersistenceLaw;
use crate::quadrature::NodeSet;

/// `u(2-u) / (u² + 2(1-u)(1 - cos θ))`, the Fourier transform in `l` of
/// `(1-u)^|l|`.
pub fn poisson_kernel(u: f64, theta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    u * (2.0 - u) / (u * u + 4.0 * (1.0 - u) * s * s)
}

fn check_alpha(alpha: [f64; 2]) -> Result<()> {
    if alpha.iter().all(|a| *a > 0.0 && *a < 2.0) {
        Ok(())
    } else {
        Err(invalid("alpha", format!("tail indices must lie in (0, 2), got {alpha:?}")))
    }
}

/// `2x / (x² + θ²)`.
fn lorentz(x: f64, theta: f64) -> f64 {
    2.0 * x / (x * x + theta * theta)
}

/// Octaves of geometric grading beyond the outermost crossover before the
/// analytic tails take over.
const PSI_SPAN: i32 = 30;
pub const PSI_TOLERANCE: f64 = 1e-6;

/// `Ψ(θ) = ∫_0^∞ ∫ Π_k 2(r w_k)^(-1/α_k) / ((r w_k)^(-2/α_k) + θ_k²) Λ(dw) r^-2 dr`.
pub fn psi(theta: [f64; 2], alpha: [f64; 2], angular: &AngularMeasure) -> Result<f64> {
    let (value, err) = psi_with(theta, alpha, angular)?;
    if err > PSI_TOLERANCE * value {
        return Err(Error::Quadrature {
            value,
            estimate: err,
            tolerance: PSI_TOLERANCE,
        });
    }
    Ok(value)
}

/// `Ψ(θ)` together with a quadrature error estimate.
///
/// For each direction `w` the `r` axis is split around the crossovers
/// `r*_k = |θ_k|^(-α_k) / w_k` where `(r w_k)^(-1/α_k) = |θ_k|`, graded
/// geometrically on both sides, and the two outer tails are integrated from
/// the leading power laws of the integrand.
pub fn psi_with(theta: [f64; 2], alpha: [f64; 2], angular: &AngularMeasure) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if theta.iter().any(|t| *t == 0.0 || !t.is_finite()) {
        return Err(invalid("theta", "both frequencies must be finite and nonzero"));
    }
    let p = 1.0 / alpha[0] + 1.0 / alpha[1];
    let ratio = 2f64.powf(alpha[0].min(alpha[1]).min(1.0));
    let th2 = [theta[0] * theta[0], theta[1] * theta[1]];
    let mut value = 0.0;
    let mut err = 0.0;
    for &(lambda, w1) in angular.nodes(DEFAULT_ORDER).iter() {
        let w = [w1, 1.0 - w1];
        let cross = [
            theta[0].abs().powf(-alpha[0]) / w[0],
            theta[1].abs().powf(-alpha[1]) / w[1],
        ];
        let r_lo = cross[0].min(cross[1]) * 2f64.powi(-PSI_SPAN);
        let r_hi = cross[0].max(cross[1]) * 2f64.powi(PSI_SPAN);
        let f = |r: f64| {
            let x1 = (r * w[0]).powf(-1.0 / alpha[0]);
            let x2 = (r * w[1]).powf(-1.0 / alpha[1]);
            2.0 * x1 / (x1 * x1 + th2[0]) * 2.0 * x2 / (x2 * x2 + th2[1]) / (r * r)
        };
        let lower = 4.0 * w[0].powf(1.0 / alpha[0]) * w[1].powf(1.0 / alpha[1]) * r_lo.powf(p - 1.0)
            / (p - 1.0);
        let upper = 4.0 * w[0].powf(-1.0 / alpha[0]) * w[1].powf(-1.0 / alpha[1])
            * r_hi.powf(-p - 1.0)
            / ((p + 1.0) * th2[0] * th2[1]);
        let body = |order| {
            let mut set = NodeSet::new();
            set.add_geometric_ratio(r_lo, r_hi, ratio, order);
            set.integrate(f)
        };
        let coarse = body(10);
        let fine = body(20);
        value += lambda * (lower + fine + upper);
        err += lambda * (fine - coarse).abs();
    }
    Ok((value, err))
}

/// `2/α1 + 2/α2 - 1`, the exponent relating `Cov(G_{λ^E s}, G_{λ^E t})`
/// to `Cov(G_s, G_t)`.
pub fn scaling_exponent(alpha: [f64; 2]) -> f64 {
    2.0 / alpha[0] + 2.0 / alpha[1] - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovGOptions {
    pub rel_tol: f64,
    /// How many times the frequency cutoff may be enlarged (by 4 each time).
    pub max_refinements: usize,
}

impl Default for CovGOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-3,
            max_refinements: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovG {
    pub value: f64,
    /// Difference between two quadrature resolutions plus the truncation
    /// bound.
    pub error_estimate: f64,
    /// Bound on the part of the integral beyond the frequency cutoffs.
    pub tail_bound: f64,
    /// `C` with `Ψ(θ) <= C |θ1 θ2|^(1/p - 1)`, fitted on a log grid.
    pub envelope_constant: f64,
    /// Per-axis frequency cutoffs.
    pub cutoffs: [f64; 2],
}

/// Fits the envelope constant on `θ ∈ {2^-4, …, 2^4}²` with a 1.5 safety
/// factor.
fn envelope_constant(alpha: [f64; 2], angular: &AngularMeasure) -> Result<f64> {
    let beta = 1.0 / (1.0 / alpha[0] + 1.0 / alpha[1]) - 1.0;
    let grid: Vec<f64> = (-4..=4).map(|e| 2f64.powi(e)).collect();
    let pairs: Vec<(f64, f64)> = grid
        .iter()
        .flat_map(|&a| grid.iter().map(move |&b| (a, b)))
        .collect();
    let ratios: Result<Vec<f64>> = pairs
        .par_iter()
        .map(|&(a, b)| Ok(psi_with([a, b], alpha, angular)?.0 / (a * b).powf(beta)))
        .collect();
    Ok(1.5 * ratios?.into_iter().fold(0.0, f64::max))
}

/// `∫_a^b min(s, 2/θ) min(t, 2/θ) θ^β dθ` (with `b = ∞` allowed), the
/// per-axis factor of the truncation bound.
fn kernel_envelope_integral(s: f64, t: f64, beta: f64, a: f64, b: f64) -> f64 {
    let (lo, hi) = (s.min(t), s.max(t));
    let power = |c: f64, g: f64, x0: f64, x1: f64| {
        if x1 <= x0 {
            0.0
        } else if x1.is_infinite() {
            -c * x0.powf(g + 1.0) / (g + 1.0)
        } else {
            c * (x1.powf(g + 1.0) - x0.powf(g + 1.0)) / (g + 1.0)
        }
    };
    let k1 = 2.0 / hi;
    let k2 = 2.0 / lo;
    power(s * t, beta, a, b.min(k1))
        + power(2.0 * lo, beta - 1.0, a.max(k1), b.min(k2))
        + power(4.0, beta - 2.0, a.max(k2), b)
}

/// `4 sin(sθ/2) sin(tθ/2) cos((s-t)θ/2) / θ²`, the real part of
/// `(e^{isθ} - 1) conj(e^{itθ} - 1) / θ²`.
fn increment_kernel(s: f64, t: f64, theta: f64) -> f64 {
    4.0 * (0.5 * s * theta).sin() * (0.5 * t * theta).sin() * (0.5 * (s - t) * theta).cos()
        / (theta * theta)
}

const THETA_FLOOR_OCTAVES: i32 = 40;

struct AxisGrid {
    s: f64,
    t: f64,
    floor: f64,
    theta: Vec<f64>,
    weighted: Vec<f64>,
    /// `∫_0^cutoff` of the kernel: the grid sum plus the strip below `floor`.
    kernel_total: f64,
}

impl AxisGrid {
    fn new(s: f64, t: f64, cutoff: f64, order: usize) -> Self {
        let scale = s.max(t);
        let floor = 2f64.powi(-THETA_FLOOR_OCTAVES) / scale;
        let knee = PI / scale;
        let mut set = NodeSet::new();
        set.add_geometric(floor, knee, order);
        set.add_uniform(knee, cutoff, 0.5 * PI / scale, order);
        let weighted: Vec<f64> = set
            .x
            .iter()
            .zip(&set.w)
            .map(|(&th, &w)| w * increment_kernel(s, t, th))
            .collect();
        let kernel_total = weighted.iter().sum::<f64>() + s * t * floor;
        Self {
            s,
            t,
            floor,
            theta: set.x,
            weighted,
            kernel_total,
        }
    }

    /// `∫_0^cutoff K(θ) 2x / (x² + θ²) dθ`; below the grid floor `K` is
    /// replaced by its value `s t` at the origin and the Lorentzian is
    /// integrated exactly.
    fn against_lorentz(&self, x: f64) -> f64 {
        let strip = self.s * self.t * 2.0 * (self.floor / x).atan();
        strip
            + self
                .theta
                .iter()
                .zip(&self.weighted)
                .map(|(&th, &kw)| kw * lorentz(x, th))
                .sum::<f64>()
    }
}

/// One evaluation of the truncated integral at a fixed resolution.
fn cov_g_box(
    s: [f64; 2],
    t: [f64; 2],
    alpha: [f64; 2],
    angular: &AngularMeasure,
    cutoffs: [f64; 2],
    theta_order: usize,
    r_order: usize,
) -> f64 {
    let axes = [
        AxisGrid::new(s[0], t[0], cutoffs[0], theta_order),
        AxisGrid::new(s[1], t[1], cutoffs[1], theta_order),
    ];
    let p = 1.0 / alpha[0] + 1.0 / alpha[1];
    let ratio = 2f64.powf(alpha[0].min(alpha[1]).min(1.0));
    let mut total = 0.0;
    for &(lambda, w1) in angular.nodes(DEFAULT_ORDER).iter() {
        let w = [w1, 1.0 - w1];
        // x_k(r) = (r w_k)^(-1/α_k) must sweep from far above the cutoff to
        // far below the grid floor
        let r_lo = (0..2)
            .map(|k| (cutoffs[k] * 1048576.0).powf(-alpha[k]) / w[k])
            .fold(f64::INFINITY, f64::min);
        let r_hi = (0..2)
            .map(|k| (axes[k].floor / 1048576.0).powf(-alpha[k]) / w[k])
            .fold(0.0, f64::max);
        let mut rs = NodeSet::new();
        rs.add_geometric_ratio(r_lo, r_hi, ratio, r_order);
        let terms: Vec<f64> = rs
            .x
            .par_iter()
            .zip(rs.w.par_iter())
            .map(|(&r, &wr)| {
                let f1 = axes[0].against_lorentz((r * w[0]).powf(-1.0 / alpha[0]));
                let f2 = axes[1].against_lorentz((r * w[1]).powf(-1.0 / alpha[1]));
                wr * f1 * f2 / (r * r)
            })
            .collect();
        let body: f64 = terms.iter().sum();
        // r < r_lo: 2x/(x² + θ²) ≈ 2/x = 2 (r w)^(1/α)
        let lower = r_lo.powf(p - 1.0) / (p - 1.0)
            * (2.0 * w[0].powf(1.0 / alpha[0]) * axes[0].kernel_total)
            * (2.0 * w[1].powf(1.0 / alpha[1]) * axes[1].kernel_total);
        // r > r_hi: the Lorentzian has collapsed to π δ(θ) on each axis
        let upper = (PI * s[0] * t[0]) * (PI * s[1] * t[1]) / r_hi;
        total += lambda * (lower + body + upper);
    }
    total / (PI * PI)
}

/// `Cov(G_s, G_t)` with default options.
pub fn cov_g(s: [f64; 2], t: [f64; 2], alpha: [f64; 2], angular: &AngularMeasure) -> Result<CovG> {
    cov_g_with(s, t, alpha, angular, CovGOptions::default())
}

/// `Cov(G_s, G_t) = (2π)^-2 ∫_{R²} Π_k (e^{is_kθ_k} - 1) conj(e^{it_kθ_k} - 1) / θ_k² Ψ(θ) dθ`.
///
/// The imaginary part cancels under `θ → -θ` and `Ψ` is even in each
/// coordinate, so the integral is `π^-2 ∫_{(0,∞)²} K1 K2 Ψ`. It is truncated
/// to `(0, Θ_k)` per axis; the remainder is bounded using
/// `|K| <= min(s, 2/θ) min(t, 2/θ)` and the fitted envelope
/// `Ψ <= C |θ1 θ2|^(1/p - 1)`. Inside the box `Ψ` is expanded as its
/// `r`-integral on a rule that is the same for every `θ`, so the
/// two-dimensional sum factorizes into per-axis sums for each `r` node.
pub fn cov_g_with(
    s: [f64; 2],
    t: [f64; 2],
    alpha: [f64; 2],
    angular: &AngularMeasure,
    options: CovGOptions,
) -> Result<CovG> {
    check_alpha(alpha)?;
    if s.iter().chain(&t).any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(invalid("s/t", "coordinates must be finite and non-negative"));
    }
    if s.iter().chain(&t).any(|x| *x == 0.0) {
        return Ok(CovG {
            value: 0.0,
            error_estimate: 0.0,
            tail_bound: 0.0,
            envelope_constant: 0.0,
            cutoffs: [0.0, 0.0],
        });
    }
    let beta = 1.0 / (1.0 / alpha[0] + 1.0 / alpha[1]) - 1.0;
    let envelope = envelope_constant(alpha, angular)?;
    let full: f64 = (0..2)
        .map(|k| kernel_envelope_integral(s[k], t[k], beta, 0.0, f64::INFINITY))
        .product();
    let scale = [s[0].max(t[0]), s[1].max(t[1])];
    let mut reach = 256.0 * PI;
    let mut last = None;
    for _ in 0..=options.max_refinements {
        let cutoffs = [reach / scale[0], reach / scale[1]];
        let inside: f64 = (0..2)
            .map(|k| kernel_envelope_integral(s[k], t[k], beta, 0.0, cutoffs[k]))
            .product();
        let tail_bound = envelope / (PI * PI) * (full - inside).max(0.0);
        let coarse = cov_g_box(s, t, alpha, angular, cutoffs, 8, 10);
        let fine = cov_g_box(s, t, alpha, angular, cutoffs, 12, 16);
        let result = CovG {
            value: fine,
            error_estimate: (fine - coarse).abs() + tail_bound,
            tail_bound,
            envelope_constant: envelope,
            cutoffs,
        };
        let budget = options.rel_tol * fine.abs().max(1e-300);
        if result.error_estimate <= budget {
            return Ok(result);
        }
        last = Some(result);
        if tail_bound <= 0.5 * budget {
            break;
        }
        reach *= 4.0;
    }
    let r = last.expect("at least one pass");
    Err(Error::Quadrature {
        value: r.value,
        estimate: r.error_estimate,
        tolerance: options.rel_tol,
    })
}

/// Both sides of the operator-scaling relation
/// `Cov(G_{λ^E s}, G_{λ^E t}) = λ^(2/α1 + 2/α2 - 1) Cov(G_s, G_t)` with
/// `λ^E x = (λ^(1/α1) x1, λ^(1/α2) x2)`.
pub fn scaling_check(
    alpha: [f64; 2],
    angular: &AngularMeasure,
    lambda: f64,
    s: [f64; 2],
    t: [f64; 2],
    options: CovGOptions,
) -> Result<(f64, f64)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", "must be positive"));
    }
    let base = cov_g_with(s, t, alpha, angular, options)?.value;
    if lambda == 1.0 {
        return Ok((base, base));
    }
    let stretch = |x: [f64; 2]| [lambda.powf(1.0 / alpha[0]) * x[0], lambda.powf(1.0 / alpha[1]) * x[1]];
    let lhs = cov_g_with(stretch(s), stretch(t), alpha, angular, options)?.value;
    Ok((lhs, lambda.powf(scaling_exponent(alpha)) * base))
}

/// `r̂(θ) = ∫ Π_k g(u_k, θ_k) μ*(du)` with `g` the Poisson kernel; the
/// clamp atom `u = (1, 1)` contributes its mass since `g(1, θ) = 1`.
pub fn r_hat(theta: [f64; 2], law: &PersistenceLaw) -> Result<f64> {
    if theta.iter().any(|t| *t == 0.0 || !(t.abs() <= PI)) {
        return Err(invalid("theta", "frequencies must be nonzero and lie in [-π, π]"));
    }
    match law {
        PersistenceLaw::Independent { h1, h2 } => Ok(independent_r_hat(*h1, theta[0])
            * independent_r_hat(*h2, theta[1])),
        PersistenceLaw::Dependent { .. } => {
            let scales = [1.0 / theta[0].abs(), 1.0 / theta[1].abs()];
            let (value, err) = law.integrate_dependent(scales, 1.0, |u1, u2| {
                poisson_kernel(u1, theta[0]) * poisson_kernel(u2, theta[1])
            })?;
            if err > PSI_TOLERANCE * value {
                return Err(Error::Quadrature {
                    value,
                    estimate: err,
                    tolerance: PSI_TOLERANCE,
                });
            }
            Ok(value)
        }
    }
}

/// One axis of `r̂` under independent persistence: `∫_0^1 g(u, θ) c u^(c-1) du`.
fn independent_r_hat(h: f64, theta: f64) -> f64 {
    let c = 2.0 - 2.0 * h;
    let floor = theta.abs() * 1e-12;
    let mut set = NodeSet::new();
    set.add_geometric(floor, 1.0, 16);
    // below the floor g(u, θ) ≈ u / (2 sin²(θ/2)), so the strip is negligible
    // but cheap to include
    let strip = poisson_kernel(0.5 * floor, theta) * floor.powf(c);
    strip + set.integrate(|u| poisson_kernel(u, theta) * c * u.powf(c - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::graded_to_zero;

    fn pm(w: f64) -> AngularMeasure {
        AngularMeasure::point_mass(w).unwrap()
    }

    #[test]
    fn psi_closed_form_point_mass() {
        for th in [[1.0, 1.0], [0.25, 3.0], [-2.0, 0.5]] {
            let v = psi(th, [1.0, 1.0], &pm(0.5)).unwrap();
            let want = PI / (th[0].abs() + th[1].abs());
            assert!(((v - want) / want).abs() < 1e-8, "{th:?}: {v} vs {want}");
        }
    }

    #[test]
    fn psi_symmetry() {
        let a = AngularMeasure::beta_density(2.0, 3.0).unwrap();
        let v = psi([0.7, 1.9], [1.4, 0.6], &a).unwrap();
        let v1 = psi([-0.7, 1.9], [1.4, 0.6], &a).unwrap();
        let v2 = psi([0.7, -1.9], [1.4, 0.6], &a).unwrap();
        assert!((v - v1).abs() < 1e-10 * v && (v - v2).abs() < 1e-10 * v);
    }

    #[test]
    fn envelope_integral_matches_quadrature() {
        let (s, t, beta): (f64, f64, f64) = (0.3, 0.8, -0.4);
        let f = |th: f64| s.min(2.0 / th) * t.min(2.0 / th) * th.powf(beta);
        let mut set = graded_to_zero(1e-12, 2.0 / t, 20);
        set.add_geometric(2.0 / t, 2.0 / s, 20);
        set.add_geometric(2.0 / s, 1e6, 20);
        let oracle = set.integrate(f);
        let v = kernel_envelope_integral(s, t, beta, 0.0, 1e6);
        assert!(((v - oracle) / oracle).abs() < 1e-8, "{v} vs {oracle}");
    }

    #[test]
    fn cov_g_zero_and_symmetry() {
        let a = pm(0.5);
        assert_eq!(cov_g([0.0, 0.5], [1.0, 1.0], [1.0, 1.0], &a).unwrap().value, 0.0);
        let x = cov_g([0.3, 0.9], [0.7, 0.4], [1.0, 1.0], &a).unwrap();
        let y = cov_g([0.7, 0.4], [0.3, 0.9], [1.0, 1.0], &a).unwrap();
        assert!((x.value - y.value).abs() < 1e-3 * x.value.abs());
    }

    #[test]
    fn r_hat_atom_only_limit() {
        // with w1 tiny almost all mass sits on the clamp atom
        let law = PersistenceLaw::dependent(1.0, 1.0, pm(1e-9)).unwrap();
        let v = r_hat([0.4, 2.0], &law).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn r_hat_independent_matches_lag_sum() {
        // r̂(θ) = Σ_l r(l) e^{ilθ}; for one axis the sum converges slowly,
        // so compare against Σ_l r(l) cos(lθ) with a Cesàro-free check at
        // moderate H where r(l) decays like l^(2H-2)
        let h = 0.55;
        let theta = 1.3;
        let moments = crate::persistence::independent_rho_moments(h, 2_000_001);
        let mut sum = moments[0];
        for (l, m) in moments.iter().enumerate().skip(1) {
            sum += 2.0 * m * (l as f64 * theta).cos();
        }
        let v = independent_r_hat(h, theta);
        assert!((v - sum).abs() < 1e-4, "{v} vs {sum}");
    }
}
