//! Scaling regimes: which limit applies, its constants, and the matching
//! normalization of the aggregated field.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::persistence::PersistenceLaw;

use super::{c_frak, fbs_cov, sigma_independent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    /// Independent persistence; fractional Brownian sheet limit.
    Independent,
    /// Dependent persistence with `n1^α1 ~ n2^α2`.
    Critical,
    /// Dependent persistence, `n1^α1 ≫ n2^α2`, `α1 > 1`.
    NoncriticalI,
    /// Dependent persistence, `n1^α1 ≫ n2^α2`, `α1 < 1`.
    NoncriticalIi,
    /// Dependent persistence, `n1^α1 ≫ n2^α2`, `α1 = 1`.
    Boundary,
}

impl RegimeKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Independent => "independent",
            Self::Critical => "critical",
            Self::NoncriticalI => "noncritical_i",
            Self::NoncriticalIi => "noncritical_ii",
            Self::Boundary => "boundary",
        }
    }
}

/// How `n2` follows `n1` along a size sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NRule {
    /// `n2 = round(n1^(α1/α2))`.
    Critical,
    /// `n2 = round(n1^gamma)`.
    Power { gamma: f64 },
}

/// A validated regime: kind, persistence law and size rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Repr", into = "Repr")]
pub struct RegimeSpec {
    kind: RegimeKind,
    law: PersistenceLaw,
    n_rule: NRule,
}

#[derive(Serialize, Deserialize)]
struct Repr {
    kind: RegimeKind,
    law: PersistenceLaw,
    #[serde(default)]
    n_rule: Option<NRule>,
}

impl TryFrom<Repr> for RegimeSpec {
    type Error = Error;

    fn try_from(r: Repr) -> Result<Self> {
        Self::new(r.kind, r.law, r.n_rule)
    }
}

impl From<RegimeSpec> for Repr {
    fn from(s: RegimeSpec) -> Self {
        Repr {
            kind: s.kind,
            law: s.law,
            n_rule: Some(s.n_rule),
        }
    }
}

/// The limit of the normalized aggregated field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Limit {
    /// `σ B^H` for a fractional Brownian sheet `B^H`.
    Sheet { h: [f64; 2], sigma2: f64 },
    /// The non-factorizing Gaussian field with harmonizable covariance
    /// built from the spectral density `Ψ`; no `(H, σ)` pair exists.
    Critical,
}

impl Limit {
    /// Theoretical covariance between the limit at `s` and at `t`; the
    /// critical field needs the (expensive) spectral quadrature and is
    /// evaluated by [`super::cov_g`] instead.
    pub fn sheet_cov(&self, s: [f64; 2], t: [f64; 2]) -> Option<f64> {
        match self {
            Self::Sheet { h, sigma2 } => Some(sigma2 * fbs_cov(*h, s, t)),
            Self::Critical => None,
        }
    }
}

impl RegimeSpec {
    /// Validates the combination; `n_rule = None` picks the default
    /// (`critical` for the critical regime, `gamma = 1` for independent
    /// persistence and `gamma = α1 / (2 α2)` otherwise).
    pub fn new(kind: RegimeKind, law: PersistenceLaw, n_rule: Option<NRule>) -> Result<Self> {
        let bad = |reason: String| Err(Error::Config(format!("{} regime: {reason}", kind.name())));
        match (kind, &law) {
            (RegimeKind::Independent, PersistenceLaw::Dependent { .. }) => {
                return bad("requires the independent persistence law".into())
            }
            (RegimeKind::Independent, _) => {}
            (_, PersistenceLaw::Independent { .. }) => {
                return bad("requires the dependent persistence law".into())
            }
            _ => {}
        }
        let n_rule = match (kind, n_rule) {
            (RegimeKind::Critical, None) => NRule::Critical,
            (RegimeKind::Independent, None) => NRule::Power { gamma: 1.0 },
            (_, None) => {
                let a = law.alpha().expect("dependent law");
                NRule::Power {
                    gamma: 0.5 * a[0] / a[1],
                }
            }
            (_, Some(rule)) => rule,
        };
        if let NRule::Power { gamma } = n_rule {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return bad(format!("n-rule exponent must be positive, got {gamma}"));
            }
        }
        if let Some(a) = law.alpha() {
            match kind {
                RegimeKind::Critical => {
                    if n_rule != NRule::Critical {
                        return bad("the critical speed n1^alpha1 ~ n2^alpha2 requires the critical n-rule".into());
                    }
                }
                _ => {
                    let NRule::Power { gamma } = n_rule else {
                        return bad("non-critical speed needs a power n-rule with gamma < alpha1/alpha2".into());
                    };
                    if gamma >= a[0] / a[1] {
                        return bad(format!(
                            "non-critical speed n1^alpha1 >> n2^alpha2 needs gamma < alpha1/alpha2 = {}, got {gamma}",
                            a[0] / a[1]
                        ));
                    }
                    match kind {
                        RegimeKind::NoncriticalI if a[0] <= 1.0 => {
                            return bad(format!("non-critical case (i) requires alpha1 > 1, got {}", a[0]));
                        }
                        RegimeKind::NoncriticalIi if a[0] >= 1.0 => {
                            return bad(format!("non-critical case (ii) requires alpha1 < 1, got {}", a[0]));
                        }
                        RegimeKind::Boundary => {
                            if (a[0] - 1.0).abs() > 1e-12 {
                                return bad(format!("the boundary case requires alpha1 = 1, got {}", a[0]));
                            }
                            let angular = law.angular().expect("dependent law");
                            if !angular.log_moment_finite() {
                                return bad("the boundary case requires a finite log-moment of w2 under the angular measure".into());
                            }
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(Self { kind, law, n_rule })
    }

    pub fn kind(&self) -> RegimeKind {
        self.kind
    }

    pub fn law(&self) -> &PersistenceLaw {
        &self.law
    }

    pub fn n_rule(&self) -> NRule {
        self.n_rule
    }

    /// `n2` for a given `n1` (at least 1).
    pub fn n2(&self, n1: u64) -> u64 {
        let x = n1 as f64;
        let v = match self.n_rule {
            NRule::Critical => {
                let a = self.law.alpha().expect("critical regime has a dependent law");
                x.powf(a[0] / a[1])
            }
            NRule::Power { gamma } => x.powf(gamma),
        };
        (v.round() as u64).max(1)
    }

    /// The divergent ratio that the number of copies must dominate:
    /// `n1^(2-2H1) n2^(2-2H2)` for sheet limits, `n1^α1` at critical speed
    /// and `n1` in the boundary case.
    pub fn copy_gap(&self, n: [u64; 2]) -> Result<f64> {
        let x = [n[0] as f64, n[1] as f64];
        match self.kind {
            RegimeKind::Critical => Ok(x[0].powf(self.law.alpha().expect("dependent")[0])),
            RegimeKind::Boundary => Ok(x[0]),
            _ => match regime_constants(self)? {
                Limit::Sheet { h, .. } => {
                    Ok(x[0].powf(2.0 - 2.0 * h[0]) * x[1].powf(2.0 - 2.0 * h[1]))
                }
                Limit::Critical => unreachable!(),
            },
        }
    }
}

/// Hurst pair and variance constant of the limit.
pub fn regime_constants(spec: &RegimeSpec) -> Result<Limit> {
    let law = &spec.law;
    match (spec.kind, law) {
        (RegimeKind::Independent, PersistenceLaw::Independent { h1, h2 }) => Ok(Limit::Sheet {
            h: [*h1, *h2],
            sigma2: sigma_independent(*h1, *h2).powi(2),
        }),
        (RegimeKind::Critical, _) => Ok(Limit::Critical),
        (
            kind,
            PersistenceLaw::Dependent {
                alpha1,
                alpha2,
                angular,
            },
        ) => {
            let (a1, a2) = (*alpha1, *alpha2);
            match kind {
                RegimeKind::NoncriticalI => {
                    let h2 = 1.0 - 0.5 * a2 * (1.0 - 1.0 / a1);
                    let m = angular.moment(1.0 / a1, 1.0 - 1.0 / a1)?;
                    Ok(Limit::Sheet {
                        h: [0.5, h2],
                        sigma2: 2.0 * a2 * c_frak(h2) * m,
                    })
                }
                RegimeKind::NoncriticalIi => {
                    let h1 = 1.0 - 0.5 * a1;
                    Ok(Limit::Sheet {
                        h: [h1, 1.0],
                        sigma2: a1 * c_frak(h1) * angular.moment(1.0, 0.0)?,
                    })
                }
                RegimeKind::Boundary => Ok(Limit::Sheet {
                    h: [0.5, 1.0],
                    sigma2: 4.0 * std::f64::consts::PI * angular.moment(1.0, 0.0)?,
                }),
                _ => unreachable!("validated at construction"),
            }
        }
        _ => unreachable!("validated at construction"),
    }
}

/// Divisor turning `Ŝ_n(t)` into the statistic that converges:
/// `n1^H1 n2^H2 √m` for sheet limits, `n1 n2 √m / n1^(α1/2)` at critical
/// speed and `√(n1 log n1) n2 √m` in the boundary case.
pub fn normalization(spec: &RegimeSpec, n: [u64; 2], m: u64) -> Result<f64> {
    if n[0] == 0 || n[1] == 0 || m == 0 {
        return Err(invalid("n/m", "sizes and copy counts must be positive"));
    }
    let x = [n[0] as f64, n[1] as f64];
    let root_m = (m as f64).sqrt();
    match spec.kind {
        RegimeKind::Critical => {
            let a1 = spec.law.alpha().expect("dependent")[0];
            Ok(x[0] * x[1] * root_m / x[0].powf(0.5 * a1))
        }
        RegimeKind::Boundary => {
            if n[0] < 2 {
                return Err(invalid("n1", "the boundary normalization needs n1 >= 2 so that log n1 > 0"));
            }
            Ok((x[0] * x[0].ln()).sqrt() * x[1] * root_m)
        }
        _ => match regime_constants(spec)? {
            Limit::Sheet { h, .. } => Ok(x[0].powf(h[0]) * x[1].powf(h[1]) * root_m),
            Limit::Critical => unreachable!(),
        },
    }
}
