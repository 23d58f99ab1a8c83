//! Fixed-order Gaussian rules and panel assembly.
//!
//! Everything in the crate that integrates numerically goes through a
//! [`NodeSet`]: a flat list of abscissae and weights assembled from Gauss
//! panels. Geometric (ratio 2) panels resolve power-law endpoint behaviour
//! and features whose width scales with their position, which covers every
//! integrand in the model.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Result};
use crate::special::beta;

/// Gauss rule on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]` after the affine map from [-1, 1].
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Gauss–Legendre rule with `n` nodes, computed by Newton iteration on the
/// three-term recurrence. Cached per `n`.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(legendre_rule(n)))
        .clone()
}

fn legendre_rule(n: usize) -> Rule {
    assert!(n >= 1, "a Gauss rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Jacobi rule for the weight `(1 - x)^alpha (1 + x)^beta` on [-1, 1],
/// via Golub–Welsch. Weights sum to the weight's total mass.
pub fn gauss_jacobi(n: usize, alpha: f64, beta_: f64) -> Result<Rule> {
    if n == 0 {
        return Err(invalid("n", "a Gauss rule needs at least one node"));
    }
    if !(alpha > -1.0 && beta_ > -1.0) {
        return Err(invalid(
            "alpha/beta",
            format!("Jacobi exponents must exceed -1, got ({alpha}, {beta_})"),
        ));
    }
    let ab = alpha + beta_;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (beta_ - alpha) / (ab + 2.0)
        } else {
            (beta_ * beta_ - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < n {
            let j = kf + 1.0;
            let off2 = if k == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta_) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * j * (j + alpha) * (j + beta_) * (j + ab)
                    / ((2.0 * j + ab).powi(2) * (2.0 * j + ab + 1.0) * (2.0 * j + ab - 1.0))
            };
            let off = off2.sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let mass = 2f64.powf(ab + 1.0) * beta(alpha + 1.0, beta_ + 1.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mass * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

/// Flat list of abscissae and weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeSet {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl NodeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn push(&mut self, x: f64, w: f64) {
        self.x.push(x);
        self.w.push(w);
    }

    /// One Gauss–Legendre panel on `[a, b]`.
    pub fn add_panel(&mut self, a: f64, b: f64, order: usize) {
        if b <= a {
            return;
        }
        let rule = gauss_legendre(order);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            self.push(mid + half * x, half * w);
        }
    }

    /// Panels `[lo, 2 lo], [2 lo, 4 lo], …` up to `hi` (last panel clipped).
    pub fn add_geometric(&mut self, lo: f64, hi: f64, order: usize) {
        self.add_geometric_ratio(lo, hi, 2.0, order);
    }

    /// Panels growing by `ratio` from `lo` up to `hi`.
    pub fn add_geometric_ratio(&mut self, lo: f64, hi: f64, ratio: f64, order: usize) {
        debug_assert!(lo > 0.0 && ratio > 1.0);
        let mut a = lo;
        while a < hi {
            let b = (ratio * a).min(hi);
            // avoid a sliver panel at the top
            let b = if hi / b < 1.0 + 0.25 * (ratio - 1.0) { hi } else { b };
            self.add_panel(a, b, order);
            a = b;
        }
    }

    /// Equal panels of width at most `width` covering `[a, b]`.
    pub fn add_uniform(&mut self, a: f64, b: f64, width: f64, order: usize) {
        if b <= a {
            return;
        }
        let count = ((b - a) / width).ceil().max(1.0) as usize;
        let h = (b - a) / count as f64;
        for i in 0..count {
            self.add_panel(a + i as f64 * h, a + (i + 1) as f64 * h, order);
        }
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.x.iter().zip(&self.w).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Nodes on `(0, hi]` graded geometrically toward zero down to `floor`, with
/// one plain panel on `[0, floor]`.
pub fn graded_to_zero(floor: f64, hi: f64, order: usize) -> NodeSet {
    let mut set = NodeSet::new();
    let floor = floor.min(hi);
    set.add_panel(0.0, floor, order);
    set.add_geometric(floor, hi, order);
    set
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_exact_for_polynomials() {
        let rule = gauss_legendre(10);
        let sum: f64 = rule.weights.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        // degree 19 is the highest exact degree
        let v = rule.integrate(0.0, 1.0, |x| x.powi(19));
        assert!((v - 1.0 / 20.0).abs() < 1e-15);
        let big = gauss_legendre(200);
        let v = big.integrate(0.0, PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn jacobi_reduces_to_legendre() {
        let j = gauss_jacobi(12, 0.0, 0.0).unwrap();
        let l = gauss_legendre(12);
        for (a, b) in j.nodes.iter().zip(&l.nodes) {
            assert!((a - b).abs() < 1e-13);
        }
        for (a, b) in j.weights.iter().zip(&l.weights) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn jacobi_integrates_singular_weight() {
        // ∫ (1+x)^{-1/2} (1+x) dx over [-1,1] = ∫ (1+x)^{1/2} = (2/3) 2^{3/2}
        let j = gauss_jacobi(8, 0.0, -0.5).unwrap();
        let v: f64 = j
            .nodes
            .iter()
            .zip(&j.weights)
            .map(|(x, w)| w * (1.0 + x))
            .sum();
        assert!((v - 2.0 / 3.0 * 2f64.powf(1.5)).abs() < 1e-13);
        // both endpoints singular: ∫ (1-x)^{-1/2}(1+x)^{-1/2} = π
        let j = gauss_jacobi(5, -0.5, -0.5).unwrap();
        let m: f64 = j.weights.iter().sum();
        assert!((m - PI).abs() < 1e-13);
    }

    #[test]
    fn graded_rule_handles_endpoint_power() {
        let set = graded_to_zero(1e-30, 1.0, 12);
        let v = set.integrate(|x| x.powf(-0.7));
        assert!((v - 1.0 / 0.3).abs() / (1.0 / 0.3) < 1e-8);
    }
}
