//! Angular measures on the open simplex `{(w1, w2) : w1 + w2 = 1, w_k > 0}`.
//!
//! A measure is identified with the law of its first coordinate `w1`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::gauss_jacobi;
use crate::special::{beta, digamma};

pub const DEFAULT_ORDER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub weight: f64,
    pub w1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Repr", into = "Repr")]
pub enum AngularMeasure {
    PointMass { w1: f64 },
    DiscreteMixture { atoms: Vec<Atom> },
    /// `w1` has density proportional to `w1^(a-1) (1-w1)^(b-1)`.
    BetaDensity { a: f64, b: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Repr {
    PointMass { w1: f64 },
    DiscreteMixture { atoms: Vec<Atom> },
    BetaDensity { a: f64, b: f64 },
}

impl TryFrom<Repr> for AngularMeasure {
    type Error = Error;

    fn try_from(r: Repr) -> Result<Self> {
        match r {
            Repr::PointMass { w1 } => Self::point_mass(w1),
            Repr::DiscreteMixture { atoms } => Self::mixture(atoms),
            Repr::BetaDensity { a, b } => Self::beta_density(a, b),
        }
    }
}

impl From<AngularMeasure> for Repr {
    fn from(m: AngularMeasure) -> Self {
        match m {
            AngularMeasure::PointMass { w1 } => Repr::PointMass { w1 },
            AngularMeasure::DiscreteMixture { atoms } => Repr::DiscreteMixture { atoms },
            AngularMeasure::BetaDensity { a, b } => Repr::BetaDensity { a, b },
        }
    }
}

fn check_interior(w1: f64) -> Result<()> {
    if w1 > 0.0 && w1 < 1.0 {
        Ok(())
    } else {
        Err(invalid(
            "w1",
            format!("atoms must lie strictly inside (0, 1), got {w1}"),
        ))
    }
}

impl AngularMeasure {
    pub fn point_mass(w1: f64) -> Result<Self> {
        check_interior(w1)?;
        Ok(Self::PointMass { w1 })
    }

    /// Weights must be positive and sum to one within 1e-9; they are
    /// renormalized so the total mass is one to rounding.
    pub fn mixture(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("atoms", "a mixture needs at least one atom"));
        }
        let mut total = 0.0;
        for a in &atoms {
            check_interior(a.w1)?;
            if !(a.weight > 0.0 && a.weight.is_finite()) {
                return Err(invalid(
                    "weight",
                    format!("mixture weights must be positive, got {}", a.weight),
                ));
            }
            total += a.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(
                "atoms",
                format!("mixture weights must sum to 1, got {total}"),
            ));
        }
        let atoms = atoms
            .into_iter()
            .map(|a| Atom {
                weight: a.weight / total,
                w1: a.w1,
            })
            .collect();
        Ok(Self::DiscreteMixture { atoms })
    }

    pub fn beta_density(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(invalid(
                "a/b",
                format!("beta parameters must be positive, got ({a}, {b})"),
            ));
        }
        Ok(Self::BetaDensity { a, b })
    }

    /// Draws `(w1, w2)`. Point masses consume no randomness.
    pub fn sample_w<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let w1 = match self {
            Self::PointMass { w1 } => *w1,
            Self::DiscreteMixture { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = atoms[atoms.len() - 1].w1;
                for a in atoms {
                    acc += a.weight;
                    if u < acc {
                        pick = a.w1;
                        break;
                    }
                }
                pick
            }
            Self::BetaDensity { a, b } => Beta::new(*a, *b)
                .expect("validated at construction")
                .sample(rng),
        };
        (w1, 1.0 - w1)
    }

    /// Quadrature nodes `(weight, w1)` representing the measure. Atomic
    /// variants return their atoms. The beta density is split at 1/2 and
    /// each half uses a Gauss–Jacobi rule whose weight carries that half's
    /// endpoint factor, so `order` nodes are used on each half.
    pub fn nodes(&self, order: usize) -> Arc<Vec<(f64, f64)>> {
        match self {
            Self::PointMass { w1 } => Arc::new(vec![(1.0, *w1)]),
            Self::DiscreteMixture { atoms } => {
                Arc::new(atoms.iter().map(|a| (a.weight, a.w1)).collect())
            }
            Self::BetaDensity { a, b } => beta_nodes(*a, *b, order),
        }
    }

    /// `∫ f(w1, w2) Λ(dw)` with the default order.
    pub fn integrate(&self, f: impl FnMut(f64, f64) -> f64) -> Result<f64> {
        self.integrate_with(DEFAULT_ORDER, f)
    }

    pub fn integrate_with(&self, order: usize, mut f: impl FnMut(f64, f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for &(weight, w1) in self.nodes(order).iter() {
            let v = f(w1, 1.0 - w1);
            if !v.is_finite() {
                return Err(Error::Evaluation(format!(
                    "integrand is not finite at w1 = {w1} (value {v})"
                )));
            }
            acc += weight * v;
        }
        Ok(acc)
    }

    /// `∫ w1^p1 w2^p2 Λ(dw)`.
    ///
    /// For the beta density this is the Beta-function ratio
    /// `B(a + p1, b + p2) / B(a, b)`, which is exact for fractional powers
    /// where polynomial quadrature is not.
    pub fn moment(&self, p1: f64, p2: f64) -> Result<f64> {
        match self {
            Self::BetaDensity { a, b } => {
                if a + p1 <= 0.0 || b + p2 <= 0.0 {
                    return Err(Error::Evaluation(format!(
                        "moment ({p1}, {p2}) diverges for beta density ({a}, {b})"
                    )));
                }
                Ok(beta(a + p1, b + p2) / beta(*a, *b))
            }
            _ => self.integrate(|w1, w2| w1.powf(p1) * w2.powf(p2)),
        }
    }

    /// `∫ |log w2| Λ(dw)`; for the beta density `ψ(a + b) - ψ(b)`.
    pub fn log_moment(&self) -> Result<f64> {
        match self {
            Self::BetaDensity { a, b } => Ok(digamma(a + b) - digamma(*b)),
            _ => self.integrate(|_, w2| w2.ln().abs()),
        }
    }

    /// Whether `∫ |log w2| Λ(dw)` is finite. Required before running the
    /// boundary (`alpha1 = 1`) experiments.
    pub fn log_moment_finite(&self) -> bool {
        self.log_moment().map(f64::is_finite).unwrap_or(false)
    }

    /// `∫ min(w1, w2) Λ(dw)`.
    pub fn min_moment(&self) -> Result<f64> {
        self.integrate(|w1, w2| w1.min(w2))
    }
}

fn beta_nodes(a: f64, b: f64, order: usize) -> Arc<Vec<(f64, f64)>> {
    type Key = (u64, u64, usize);
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Vec<(f64, f64)>>>>> = OnceLock::new();
    let key = (a.to_bits(), b.to_bits(), order);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().expect("node cache poisoned").get(&key) {
        return hit.clone();
    }
    let norm = beta(a, b);
    let lower = gauss_jacobi(order, 0.0, a - 1.0).expect("a > 0");
    let upper = gauss_jacobi(order, 0.0, b - 1.0).expect("b > 0");
    let mut out = Vec::with_capacity(2 * order);
    // w = (1 + x) / 4 on (0, 1/2)
    for (x, wt) in lower.nodes.iter().zip(&lower.weights) {
        let w = 0.25 * (1.0 + x);
        out.push((4f64.powf(-a) * wt * (1.0 - w).powf(b - 1.0) / norm, w));
    }
    // 1 - w = (1 + x) / 4 on (1/2, 1)
    for (x, wt) in upper.nodes.iter().zip(&upper.weights).rev() {
        let u = 0.25 * (1.0 + x);
        let w = 1.0 - u;
        out.push((4f64.powf(-b) * wt * w.powf(a - 1.0) / norm, w));
    }
    let out = Arc::new(out);
    cache
        .lock()
        .expect("node cache poisoned")
        .insert(key, out.clone());
    out
}
