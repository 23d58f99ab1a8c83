//! Exact covariance of the single-copy partial-sum field at finite `n`.
//!
//! Two independent routes are provided. [`exact_cov_sn`] conditions on the
//! persistence pair: given `q`, the two axes are independent and
//! `Cov(S¹_a, S¹_b | q) = Σ_l c(l; a, b) ρ^|l|` with `ρ = 2q - 1` and
//! overlap counts `c`. [`parseval_cov`] integrates the product of
//! Dirichlet kernels against the spectral density `r̂` over `(-π, π)²`.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::field::{check_point, floor_index};
use crate::persistence::{independent_rho_moments, PersistenceLaw};
use crate::quadrature::NodeSet;

use super::spectral::poisson_kernel;

/// Relative tolerance for the quadrature over the dependent persistence law.
pub const EXACT_TOLERANCE: f64 = 1e-8;

/// Number of `j ∈ [1, a]` with `j + l ∈ [1, b]`.
pub fn overlap_count(l: i64, a: u64, b: u64) -> u64 {
    let (a, b) = (a as i64, b as i64);
    (a.min(b - l) - 1.max(1 - l) + 1).max(0) as u64
}

/// `coef[d]` is the total overlap count at lags `±d`, so that
/// `Σ_{i ≤ a, j ≤ b} ρ^|i-j| = Σ_d coef[d] ρ^d`.
pub fn overlap_coefficients(a: u64, b: u64) -> Vec<f64> {
    let len = a.max(b) as usize;
    (0..len)
        .map(|d| {
            let d = d as i64;
            if d == 0 {
                overlap_count(0, a, b) as f64
            } else {
                (overlap_count(d, a, b) + overlap_count(-d, a, b)) as f64
            }
        })
        .collect()
}

fn horner(coef: &[f64], rho: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * rho + c)
}

/// `Cov(S_a, S_b)` for one walk with fixed `ρ = 2q - 1`.
pub fn conditional_cov(a: u64, b: u64, rho: f64) -> f64 {
    horner(&overlap_coefficients(a, b), rho)
}

fn lattice_extent(n: [u64; 2], s: [f64; 2], t: [f64; 2]) -> Result<([u64; 2], [u64; 2])> {
    check_point(s)?;
    check_point(t)?;
    let a = [floor_index(n[0], s[0]) as u64, floor_index(n[1], s[1]) as u64];
    let b = [floor_index(n[0], t[0]) as u64, floor_index(n[1], t[1]) as u64];
    if a.iter().chain(&b).any(|&x| x == 0) {
        return Err(invalid(
            "s/t",
            format!("floor(n s) = {a:?} and floor(n t) = {b:?} must be at least 1 on each axis"),
        ));
    }
    Ok((a, b))
}

/// Covariance with the persistence pair pinned at `q`.
pub fn exact_cov_pinned(n: [u64; 2], s: [f64; 2], t: [f64; 2], q: [f64; 2]) -> Result<f64> {
    let (a, b) = lattice_extent(n, s, t)?;
    Ok((0..2)
        .map(|k| conditional_cov(a[k], b[k], 2.0 * q[k] - 1.0))
        .product())
}

/// `Cov(S_n(s), S_n(t))` for one copy of the field.
pub fn exact_cov_sn(n: [u64; 2], s: [f64; 2], t: [f64; 2], law: &PersistenceLaw) -> Result<f64> {
    let (a, b) = lattice_extent(n, s, t)?;
    let coef = [overlap_coefficients(a[0], b[0]), overlap_coefficients(a[1], b[1])];
    match law {
        PersistenceLaw::Independent { h1, h2 } => {
            let h = [*h1, *h2];
            Ok((0..2)
                .map(|k| {
                    let moments = independent_rho_moments(h[k], coef[k].len());
                    coef[k].iter().zip(&moments).map(|(c, m)| c * m).sum::<f64>()
                })
                .product())
        }
        PersistenceLaw::Dependent { .. } => {
            let scales = [a[0].max(b[0]) as f64, a[1].max(b[1]) as f64];
            let atom_value = coef[0][0] * coef[1][0];
            let (value, err) = law.integrate_dependent(scales, atom_value, |u1, u2| {
                horner(&coef[0], 1.0 - u1) * horner(&coef[1], 1.0 - u2)
            })?;
            if err > EXACT_TOLERANCE * value.abs() {
                return Err(Error::Quadrature {
                    value,
                    estimate: err,
                    tolerance: EXACT_TOLERANCE,
                });
            }
            Ok(value)
        }
    }
}

/// `Re(D_a(θ) conj(D_b(θ)))` with `D_a(θ) = Σ_{j=1}^a e^{ijθ}`, from the
/// closed form `D_a(θ) = e^{i(a+1)θ/2} sin(aθ/2) / sin(θ/2)`.
pub fn partial_sum_kernel(a: u64, b: u64, theta: f64) -> f64 {
    let (a, b) = (a as f64, b as f64);
    let h = 0.5 * theta;
    let sh = h.sin();
    ((a - b) * h).cos() * (a * h).sin() * (b * h).sin() / (sh * sh)
}

/// Lowest frequency resolved by the `θ` grid; below it the Dirichlet
/// kernels are constant to within `(a θ)²` and the Poisson kernel is
/// integrated in closed form.
const THETA_FLOOR: f64 = PI / 1_099_511_627_776.0; // π 2^-40
const THETA_ORDER: usize = 10;

/// `θ` grid on `(THETA_FLOOR, π)`: geometric panels up to the kernel's
/// oscillation scale, then uniform panels.
fn theta_grid(extent: u64) -> NodeSet {
    let knee = PI / (2.0 * extent as f64).max(32.0);
    let mut set = NodeSet::new();
    set.add_geometric(THETA_FLOOR, knee, THETA_ORDER);
    set.add_uniform(knee, PI, knee, THETA_ORDER);
    set
}

/// For each `u`, `∫_0^π Re(D_a conj D_b)(θ) g(u, θ) dθ` where `g` is the
/// Poisson kernel `u(2-u) / (u² + 2(1-u)(1 - cos θ))`.
fn kernel_moments(a: u64, b: u64, us: impl Iterator<Item = f64>) -> Vec<f64> {
    let grid = theta_grid(a.max(b));
    let weighted: Vec<(f64, f64)> = grid
        .x
        .iter()
        .zip(&grid.w)
        .map(|(&th, &w)| (th, w * partial_sum_kernel(a, b, th)))
        .collect();
    let k0 = (a * b) as f64;
    let half_floor = (0.5 * THETA_FLOOR).tan();
    us.map(|u| {
        // ∫_0^θ0 g(u, θ) dθ = 2 atan((2 - u) / u · tan(θ0 / 2))
        let head = k0 * 2.0 * ((2.0 - u) / u * half_floor).atan();
        head + weighted
            .iter()
            .map(|&(th, kw)| kw * poisson_kernel(u, th))
            .sum::<f64>()
    })
    .collect()
}

/// `(1/π) ∫_0^π Re(D_a conj D_b) r̂_H` for one axis with independent
/// persistence, `U` having density `c u^(c-1)` on `(0, 1]`, `c = 2 - 2H`.
fn independent_axis(a: u64, b: u64, h: f64) -> f64 {
    let c = 2.0 - 2.0 * h;
    // below `floor` the kernel moment is constant and the mass is floor^c
    let floor = THETA_FLOOR * 1e-3;
    let mut us = NodeSet::new();
    us.add_geometric(floor, 1.0, 16);
    let moments = kernel_moments(a, b, std::iter::once(0.5 * floor).chain(us.x.iter().copied()));
    let head = moments[0] * floor.powf(c);
    let body: f64 = moments[1..]
        .iter()
        .zip(us.x.iter().zip(&us.w))
        .map(|(m, (u, w))| m * w * c * u.powf(c - 1.0))
        .sum();
    (head + body) / PI
}

/// `Cov(S_n(s), S_n(t))` from the spectral side:
/// `(2π)^-2 ∫_{(-π,π)²} D_{n,s,t}(θ) r̂(θ) dθ`.
///
/// Both `D` and `r̂` are even in each coordinate, so the integral reduces to
/// `π^-2 ∫_{(0,π)²} Re(D¹) Re(D²) r̂`. Writing `r̂` as the law of `U`
/// integrated against a product of Poisson kernels, the `θ` integrals are
/// done per axis for every `u` node.
pub fn parseval_cov(n: [u64; 2], s: [f64; 2], t: [f64; 2], law: &PersistenceLaw) -> Result<f64> {
    let (a, b) = lattice_extent(n, s, t)?;
    match law {
        PersistenceLaw::Independent { h1, h2 } => {
            Ok(independent_axis(a[0], b[0], *h1) * independent_axis(a[1], b[1], *h2))
        }
        PersistenceLaw::Dependent { .. } => {
            let nodes = law.continuous_nodes([1.0 / THETA_FLOOR; 2], 16)?;
            let p1 = kernel_moments(a[0], b[0], nodes.iter().map(|n| n.u1));
            let p2 = kernel_moments(a[1], b[1], nodes.iter().map(|n| n.u2));
            let q1 = kernel_moments(a[0], b[0], std::iter::once(1.0))[0];
            let q2 = kernel_moments(a[1], b[1], std::iter::once(1.0))[0];
            let continuous: f64 = nodes
                .iter()
                .zip(p1.iter().zip(&p2))
                .map(|(n, (x, y))| n.weight * x * y)
                .sum();
            Ok((continuous + law.atom_mass()? * q1 * q2) / (PI * PI))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::AngularMeasure;

    fn brute_conditional(a: u64, b: u64, rho: f64) -> f64 {
        let mut s = 0.0;
        for i in 1..=a {
            for j in 1..=b {
                s += rho.powi((i as i64 - j as i64).unsigned_abs() as i32);
            }
        }
        s
    }

    #[test]
    fn overlap_counts_match_brute_force() {
        for (a, b) in [(1, 1), (3, 5), (7, 2), (6, 6)] {
            for rho in [0.0, 0.3, 0.9, 1.0] {
                let v = conditional_cov(a, b, rho);
                assert!((v - brute_conditional(a, b, rho)).abs() < 1e-12);
            }
            assert_eq!(conditional_cov(a, b, 0.0), a.min(b) as f64);
            assert_eq!(conditional_cov(a, b, 1.0), (a * b) as f64);
        }
    }

    #[test]
    fn pinned_examples() {
        // i.i.d. signs: Var = 2 · 2
        let v = exact_cov_pinned([2, 2], [1.0, 1.0], [1.0, 1.0], [0.5, 0.5]).unwrap();
        assert_eq!(v, 4.0);
        let v = exact_cov_pinned([3, 3], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0]).unwrap();
        assert_eq!(v, 81.0);
        let v = exact_cov_pinned([3, 3], [1.0, 1.0], [1.0, 1.0], [1.0 - 1e-12, 1.0 - 1e-12]).unwrap();
        assert!((v - 81.0).abs() < 1e-8);
        assert!(exact_cov_pinned([3, 3], [0.1, 1.0], [1.0, 1.0], [0.5, 0.5]).is_err());
    }

    #[test]
    fn dirichlet_kernel_matches_direct_sum() {
        for (a, b) in [(1, 1), (4, 7), (16, 9)] {
            for th in [1e-6, 0.3, 2.0, 3.1] {
                let (mut re_a, mut im_a, mut re_b, mut im_b) = (0.0, 0.0, 0.0, 0.0);
                for j in 1..=a {
                    re_a += (j as f64 * th).cos();
                    im_a += (j as f64 * th).sin();
                }
                for j in 1..=b {
                    re_b += (j as f64 * th).cos();
                    im_b += (j as f64 * th).sin();
                }
                let direct = re_a * re_b + im_a * im_b;
                let v = partial_sum_kernel(a, b, th);
                assert!((v - direct).abs() < 1e-9 * (a * b) as f64, "{a} {b} {th}: {v} vs {direct}");
            }
        }
    }

    #[test]
    fn small_case_routes_agree() {
        let law = PersistenceLaw::independent(0.75, 0.6).unwrap();
        let e = exact_cov_sn([4, 4], [1.0, 0.5], [0.75, 1.0], &law).unwrap();
        let p = parseval_cov([4, 4], [1.0, 0.5], [0.75, 1.0], &law).unwrap();
        assert!(((e - p) / e).abs() < 1e-6, "{e} vs {p}");
        let law = PersistenceLaw::dependent(1.3, 0.7, AngularMeasure::point_mass(0.3).unwrap()).unwrap();
        let e = exact_cov_sn([5, 3], [1.0, 1.0], [0.6, 1.0], &law).unwrap();
        let p = parseval_cov([5, 3], [1.0, 1.0], [0.6, 1.0], &law).unwrap();
        assert!(((e - p) / e).abs() < 1e-6, "{e} vs {p}");
    }
}
