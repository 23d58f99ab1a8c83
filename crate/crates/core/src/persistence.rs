//! Laws of the persistence pair `q = (q1, q2)`.
//!
//! Every law is expressed through `U = 2(1 - q)`, which lives in `(0, 1]²`.
//! The independent law draws each `U_k` with density
//! `(2 - 2H_k) x^(1 - 2H_k)` on `(0, 1]`. The dependent law draws a radius
//! `R` with density `r^-2` on `(1, ∞)` and a direction `W ~ Λ`, and sets
//! `Ũ_k = (R W_k)^(-1/α_k)`; if `Ũ` leaves `(0, 1)²` the pair is clamped to
//! `U = (1, 1)` (the clamp atom).
//!
//! For the dependent law integrals against the law of `U` are computed in
//! the variable `v = 1/R`, which is uniform on `(0, 1]`; `Ũ` stays inside
//! the unit square exactly when `v < min(w1, w2)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angular::AngularMeasure;
use crate::error::{invalid, Error, Result};
use crate::quadrature::NodeSet;

/// Panel order used by the dependent-law quadrature; the error estimate
/// compares against [`CHECK_ORDER`].
const BASE_ORDER: usize = 16;
const CHECK_ORDER: usize = 24;
/// How far below the integrand's transition scale the geometric grading
/// continues before a single panel covers the rest of `(0, floor]`.
const GRADING_DEPTH: f64 = 1.0 / 1_048_576.0;
pub const RHO_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Repr", into = "Repr")]
pub enum PersistenceLaw {
    Independent {
        h1: f64,
        h2: f64,
    },
    Dependent {
        alpha1: f64,
        alpha2: f64,
        angular: AngularMeasure,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Repr {
    Independent {
        h1: f64,
        h2: f64,
    },
    Dependent {
        alpha1: f64,
        alpha2: f64,
        angular: AngularMeasure,
    },
}

impl TryFrom<Repr> for PersistenceLaw {
    type Error = Error;

    fn try_from(r: Repr) -> Result<Self> {
        match r {
            Repr::Independent { h1, h2 } => Self::independent(h1, h2),
            Repr::Dependent {
                alpha1,
                alpha2,
                angular,
            } => Self::dependent(alpha1, alpha2, angular),
        }
    }
}

impl From<PersistenceLaw> for Repr {
    fn from(l: PersistenceLaw) -> Self {
        match l {
            PersistenceLaw::Independent { h1, h2 } => Repr::Independent { h1, h2 },
            PersistenceLaw::Dependent {
                alpha1,
                alpha2,
                angular,
            } => Repr::Dependent {
                alpha1,
                alpha2,
                angular,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistenceSample {
    pub q1: f64,
    pub q2: f64,
    pub u1: f64,
    pub u2: f64,
}

impl PersistenceSample {
    pub fn from_u(u1: f64, u2: f64) -> Self {
        Self {
            q1: 1.0 - 0.5 * u1,
            q2: 1.0 - 0.5 * u2,
            u1,
            u2,
        }
    }

    pub fn q(&self) -> [f64; 2] {
        [self.q1, self.q2]
    }
}

fn check_hurst(name: &'static str, h: f64) -> Result<()> {
    if h > 0.5 && h < 1.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("Hurst index must lie in (1/2, 1), got {h}")))
    }
}

fn check_alpha(name: &'static str, a: f64) -> Result<()> {
    if a > 0.0 && a < 2.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("tail index must lie in (0, 2), got {a}")))
    }
}

/// Inverse CDF of the independent persistence law: `q = 1 - (1 - u)^(1/(2-2H)) / 2`.
pub fn sample_q_independent(h: f64, uniform: f64) -> Result<f64> {
    check_hurst("H", h)?;
    Ok(1.0 - 0.5 * u_independent(h, uniform))
}

fn u_independent(h: f64, uniform: f64) -> f64 {
    (1.0 - uniform).powf(1.0 / (2.0 - 2.0 * h))
}

/// Radius with survival function `P(R > r) = 1/r` on `(1, ∞)`.
pub fn sample_r(uniform: f64) -> f64 {
    1.0 / (1.0 - uniform)
}

/// `E[(1 - U)^l]` for `U` with density `c x^(c-1)` on `(0, 1]`, `c = 2 - 2H`;
/// equals `prod_{j=1}^{l} j / (j + c)`.
pub fn independent_rho_moment(h: f64, l: u64) -> f64 {
    let c = 2.0 - 2.0 * h;
    (1..=l).fold(1.0, |acc, j| acc * j as f64 / (j as f64 + c))
}

/// All moments `E[(1 - U)^l]` for `l = 0..len`.
pub fn independent_rho_moments(h: f64, len: usize) -> Vec<f64> {
    let c = 2.0 - 2.0 * h;
    let mut out = Vec::with_capacity(len);
    let mut acc = 1.0;
    for j in 0..len {
        if j > 0 {
            acc *= j as f64 / (j as f64 + c);
        }
        out.push(acc);
    }
    out
}

/// A quadrature node of the continuous part of the law of `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UNode {
    pub weight: f64,
    pub u1: f64,
    pub u2: f64,
}

impl PersistenceLaw {
    pub fn independent(h1: f64, h2: f64) -> Result<Self> {
        check_hurst("h1", h1)?;
        check_hurst("h2", h2)?;
        Ok(Self::Independent { h1, h2 })
    }

    pub fn dependent(alpha1: f64, alpha2: f64, angular: AngularMeasure) -> Result<Self> {
        check_alpha("alpha1", alpha1)?;
        check_alpha("alpha2", alpha2)?;
        Ok(Self::Dependent {
            alpha1,
            alpha2,
            angular,
        })
    }

    pub fn is_dependent(&self) -> bool {
        matches!(self, Self::Dependent { .. })
    }

    pub fn alpha(&self) -> Option<[f64; 2]> {
        match self {
            Self::Dependent { alpha1, alpha2, .. } => Some([*alpha1, *alpha2]),
            Self::Independent { .. } => None,
        }
    }

    pub fn angular(&self) -> Option<&AngularMeasure> {
        match self {
            Self::Dependent { angular, .. } => Some(angular),
            Self::Independent { .. } => None,
        }
    }

    /// `1/α1 + 1/α2` for dependent laws.
    pub fn p_alpha(&self) -> Option<f64> {
        self.alpha().map(|a| 1.0 / a[0] + 1.0 / a[1])
    }

    pub fn sample_q<R: Rng + ?Sized>(&self, rng: &mut R) -> PersistenceSample {
        match self {
            Self::Independent { h1, h2 } => {
                let a: f64 = rng.random();
                let b: f64 = rng.random();
                self.sample_forced_independent(a, b)
                    .unwrap_or_else(|| unreachable!("independent law, h1 = {h1}, h2 = {h2}"))
            }
            Self::Dependent { angular, .. } => {
                let r = sample_r(rng.random());
                let (w1, w2) = angular.sample_w(rng);
                self.sample_forced_dependent(r, (w1, w2))
                    .expect("dependent law")
            }
        }
    }

    /// Independent law with explicit uniforms; `None` for dependent laws.
    pub fn sample_forced_independent(&self, uniform1: f64, uniform2: f64) -> Option<PersistenceSample> {
        match self {
            Self::Independent { h1, h2 } => Some(PersistenceSample::from_u(
                u_independent(*h1, uniform1),
                u_independent(*h2, uniform2),
            )),
            Self::Dependent { .. } => None,
        }
    }

    /// Dependent law with explicit radius and direction; `None` for
    /// independent laws.
    pub fn sample_forced_dependent(&self, r: f64, w: (f64, f64)) -> Option<PersistenceSample> {
        match self {
            Self::Dependent { alpha1, alpha2, .. } => {
                let t1 = (r * w.0).powf(-1.0 / alpha1);
                let t2 = (r * w.1).powf(-1.0 / alpha2);
                let inside = |x: f64| x > 0.0 && x < 1.0;
                Some(if inside(t1) && inside(t2) {
                    PersistenceSample::from_u(t1, t2)
                } else {
                    PersistenceSample::from_u(1.0, 1.0)
                })
            }
            Self::Independent { .. } => None,
        }
    }

    /// Probability of the clamp atom `U = (1, 1)`: `1 - ∫ min(w1, w2) Λ(dw)`.
    pub fn atom_mass(&self) -> Result<f64> {
        match self {
            Self::Dependent { angular, .. } => Ok(1.0 - angular.min_moment()?),
            Self::Independent { .. } => Err(invalid(
                "law",
                "the clamp atom only exists for the dependent law",
            )),
        }
    }

    /// [`Self::atom_mass`] for the dependent law, `None` for the independent
    /// law, which has no atom.
    pub fn clamp_atom(&self) -> Result<Option<f64>> {
        if self.is_dependent() {
            self.atom_mass().map(Some)
        } else {
            Ok(None)
        }
    }

    /// Quadrature nodes for the continuous part of the dependent law of `U`.
    ///
    /// `scales[k]` is the size of `1/u_k` at which the integrand changes
    /// character; the `v` grid is graded geometrically down to
    /// `min_k w_k scales[k]^(-α_k)` times a safety depth, with one panel
    /// covering the remainder near `v = 0`.
    pub fn continuous_nodes(&self, scales: [f64; 2], order: usize) -> Result<Vec<UNode>> {
        let Self::Dependent {
            alpha1,
            alpha2,
            angular,
        } = self
        else {
            return Err(invalid("law", "continuous nodes need the dependent law"));
        };
        let alpha = [*alpha1, *alpha2];
        let mut out = Vec::new();
        for &(lambda, w1) in angular.nodes(crate::angular::DEFAULT_ORDER).iter() {
            let w = [w1, 1.0 - w1];
            let top = w[0].min(w[1]);
            let floor = (0..2)
                .map(|k| w[k] * scales[k].max(1.0).powf(-alpha[k]))
                .fold(f64::INFINITY, f64::min)
                * GRADING_DEPTH;
            // geometric in u rather than v: panels grow by 2^min(α, 1) in v
            let ratio = 2f64.powf(alpha[0].min(alpha[1]).min(1.0));
            let floor = floor.min(top);
            let mut set = NodeSet::new();
            set.add_panel(0.0, floor, order);
            set.add_geometric_ratio(floor, top, ratio, order);
            for (&v, &wt) in set.x.iter().zip(&set.w) {
                out.push(UNode {
                    weight: lambda * wt,
                    u1: (v / w[0]).powf(1.0 / alpha[0]),
                    u2: (v / w[1]).powf(1.0 / alpha[1]),
                });
            }
        }
        Ok(out)
    }

    /// `∫ f(u1, u2)` against the full dependent law of `U` (continuous part
    /// plus `atom_value` times the clamp mass), together with an error
    /// estimate from a second, finer rule.
    pub fn integrate_dependent(
        &self,
        scales: [f64; 2],
        atom_value: f64,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<(f64, f64)> {
        let atom = self.atom_mass()?;
        let eval = |order| -> Result<f64> {
            let nodes = self.continuous_nodes(scales, order)?;
            Ok(nodes.iter().map(|n| n.weight * f(n.u1, n.u2)).sum::<f64>())
        };
        let coarse = eval(BASE_ORDER)?;
        let fine = eval(CHECK_ORDER)?;
        Ok((fine + atom * atom_value, (fine - coarse).abs()))
    }

    /// `r(l) = E[(2q1 - 1)^l1 (2q2 - 1)^l2]` with `0^0 = 1` at the clamp atom.
    pub fn correlation_rho(&self, l1: u64, l2: u64) -> Result<f64> {
        match self {
            Self::Independent { h1, h2 } => {
                Ok(independent_rho_moment(*h1, l1) * independent_rho_moment(*h2, l2))
            }
            // total mass, exactly
            Self::Dependent { .. } if l1 == 0 && l2 == 0 => Ok(1.0),
            Self::Dependent { .. } => {
                let (value, err) = self.integrate_dependent(
                    [l1 as f64, l2 as f64],
                    0.0,
                    |u1, u2| (1.0 - u1).powi(l1 as i32) * (1.0 - u2).powi(l2 as i32),
                )?;
                if err > RHO_TOLERANCE * value.abs().max(1e-300) && err > 1e-14 {
                    return Err(Error::Quadrature {
                        value,
                        estimate: err,
                        tolerance: RHO_TOLERANCE,
                    });
                }
                Ok(value)
            }
        }
    }
}
