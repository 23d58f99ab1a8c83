//! Deterministic self-checks: closed forms, quadrature identities and the
//! agreement of independent computational routes.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::angular::AngularMeasure;
use crate::error::Result;
use crate::persistence::{sample_q_independent, PersistenceLaw};
use crate::quadrature::NodeSet;
use crate::special::{beta, gamma};
use crate::theory::{
    check_integrate_r, cov_g, exact_cov_pinned, exact_cov_sn, fbm_cov, harmonizable_fbm_integral,
    normalization, overlap_count, parseval_cov, psi, r_hat, RegimeKind, RegimeSpec, TheoryConstants,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Coarser grids; a few seconds.
    Quick,
    #[default]
    Standard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub profile: Profile,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// `B(a, b)` with `a + b = 1` by direct quadrature, independent of the
/// Gamma-function route: substituting `x = y^(1/a)` near 0 and
/// `1 - x = y^(1/b)` near 1 removes both endpoint singularities.
pub fn beta_by_quadrature(a: f64, b: f64) -> f64 {
    let half = |p: f64, q: f64| {
        let mut set = NodeSet::new();
        set.add_uniform(0.0, 0.5f64.powf(p), 0.05 * 0.5f64.powf(p), 24);
        set.integrate(|y| (1.0 - y.powf(1.0 / p)).powf(q - 1.0)) / p
    };
    half(a, b) + half(b, a)
}

/// `C_H` as the integral `∫ |e^{iθ} - 1|² / |θ|^(1+2H) dθ`.
pub fn c_harmonizable_by_quadrature(h: f64) -> Result<f64> {
    Ok(harmonizable_fbm_integral(h, 1.0, 1.0)?.numeric)
}

struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn record(&mut self, name: &str, outcome: Result<(bool, String)>) {
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        self.checks.push(Check {
            name: name.to_owned(),
            passed,
            detail,
        });
    }

    fn close(&mut self, name: &str, value: Result<f64>, want: f64, tol: f64) {
        self.record(
            name,
            value.map(|v| {
                let err = rel(v, want);
                (err < tol, format!("{v} vs {want}, relative error {err:.2e} (tolerance {tol:.0e})"))
            }),
        );
    }
}

/// Runs every deterministic check. `constants` supplies the closed-form
/// constants under test, so a deliberately wrong implementation can be
/// shown to fail.
pub fn run_validation_suite(profile: Profile, constants: &dyn TheoryConstants) -> ValidationReport {
    let mut suite = Suite { checks: Vec::new() };
    let quick = profile == Profile::Quick;
    let hurst: &[f64] = if quick { &[0.75] } else { &[0.6, 0.75, 0.9] };

    suite.close("gamma(1/2) = sqrt(pi)", Ok(gamma(0.5)), PI.sqrt(), 1e-13);
    suite.close("beta(1/4, 3/4) = pi sqrt 2", Ok(beta(0.25, 0.75)), PI * 2f64.sqrt(), 1e-12);
    suite.close("fbm covariance at s = t = 1", Ok(fbm_cov(0.3, 1.0, 1.0)), 1.0, 1e-15);

    for &h in hurst {
        let numeric = c_harmonizable_by_quadrature(h).map(|c| beta_by_quadrature(h - 0.5, 1.5 - h) * c);
        suite.close(&format!("c_frak({h}) against Beta and C_H integrals"), numeric, constants.c_frak(h), 1e-6);
        suite.close(
            &format!("C_H({h}) against its defining integral"),
            c_harmonizable_by_quadrature(h),
            constants.c_harmonizable(h),
            1e-6,
        );
        for (s, t) in [(0.3, 1.0), (0.7, 0.7)] {
            let value = harmonizable_fbm_integral(h, s, t).map(|c| c.numeric);
            let want = constants.c_harmonizable(h) * fbm_cov(h, s, t);
            suite.close(&format!("harmonizable fbm integral H={h} s={s} t={t}"), value, want, 1e-6);
        }
    }

    let grid: &[f64] = if quick { &[0.7, 1.3] } else { &[0.5, 1.0, 1.5] };
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut failure = None;
    for &alpha in grid {
        for gamma_ in [1.5, 2.0, 2.5] {
            for w in [0.2, 0.5, 0.8] {
                for theta in [0.5, 1.0, 3.0] {
                    let h = (3.0 - alpha * (gamma_ - 1.0)) / 2.0;
                    if !(h > 0.55 && h < 1.45) {
                        continue;
                    }
                    count += 1;
                    match check_integrate_r(alpha, gamma_, w, theta) {
                        Ok(c) => worst = worst.max(c.relative_error()),
                        Err(e) => failure = Some(e.to_string()),
                    }
                }
            }
        }
    }
    suite.record(
        "power-Lorentzian r-integral against Beta closed form",
        Ok(match failure {
            Some(e) => (false, e),
            None => (worst < 1e-6, format!("{count} points, worst relative error {worst:.2e}")),
        }),
    );

    let pm = AngularMeasure::point_mass(0.5).expect("valid");
    for theta in [[1.0, 1.0], [0.3, 2.0]] {
        suite.close(
            &format!("psi closed form at {theta:?}"),
            psi(theta, [1.0, 1.0], &pm),
            PI / (theta[0] + theta[1]),
            1e-6,
        );
    }

    suite.record("overlap counts against brute force", Ok(overlap_brute_force()));
    suite.close("pinned variance, n = (2, 2), q = 1/2", exact_cov_pinned([2, 2], [1.0; 2], [1.0; 2], [0.5, 0.5]), 4.0, 1e-14);
    suite.close("pinned variance, n = (3, 3), q = 1", exact_cov_pinned([3, 3], [1.0; 2], [1.0; 2], [1.0, 1.0]), 81.0, 1e-14);

    let laws = [
        ("independent", PersistenceLaw::independent(0.7, 0.6).expect("valid")),
        ("dependent", PersistenceLaw::dependent(1.0, 1.0, pm.clone()).expect("valid")),
    ];
    let sizes: &[[u64; 2]] = if quick { &[[8, 8]] } else { &[[8, 8], [16, 16], [5, 12]] };
    for (name, law) in &laws {
        for &n in sizes {
            let (s, t) = ([1.0, 0.5], [0.6, 1.0]);
            let exact = exact_cov_sn(n, s, t, law);
            suite.close(&format!("Parseval route, {name} law, n = {n:?}"), parseval_cov(n, s, t, law), exact.unwrap_or(f64::NAN), 1e-6);
        }
    }
    let atom_only = PersistenceLaw::dependent(1.0, 1.0, AngularMeasure::point_mass(1e-9).expect("valid")).expect("valid");
    suite.close("r-hat of an all-atom law", r_hat([0.5, 2.0], &atom_only), 1.0, 1e-6);

    suite.close("Beta(2, 2) moment of w1 w2", AngularMeasure::beta_density(2.0, 2.0).and_then(|a| a.moment(1.0, 1.0)), 0.2, 1e-12);
    // q = 1 - (1 - u)^(1/(2-2H)) / 2
    suite.close("independent q sample at u = 1/2", sample_q_independent(0.75, 0.5), 0.875, 1e-15);

    let critical = RegimeSpec::new(RegimeKind::Critical, laws[1].1.clone(), None).expect("valid");
    suite.close("critical normalization", normalization(&critical, [8, 8], 4), 128.0 / 8f64.sqrt(), 1e-14);

    if !quick {
        suite.record("cov_G Gram matrix is positive semidefinite", gram_psd(&pm));
    }

    ValidationReport {
        profile,
        checks: suite.checks,
    }
}

fn overlap_brute_force() -> (bool, String) {
    for a in 1..7u64 {
        for b in 1..7u64 {
            for l in -8i64..=8 {
                let brute = (1..=a as i64)
                    .filter(|j| (1..=b as i64).contains(&(j + l)))
                    .count() as u64;
                if brute != overlap_count(l, a, b) {
                    return (false, format!("mismatch at a={a} b={b} l={l}"));
                }
            }
        }
    }
    (true, "a, b ≤ 6, |l| ≤ 8".into())
}

fn gram_psd(angular: &AngularMeasure) -> Result<(bool, String)> {
    let points = [[0.3, 0.4], [1.0, 0.5], [0.6, 1.0], [1.0, 1.0]];
    let mut gram = DMatrix::<f64>::zeros(4, 4);
    for i in 0..4 {
        for j in i..4 {
            let v = cov_g(points[i], points[j], [1.0, 1.0], angular)?.value;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let smallest = SymmetricEigen::new(gram).eigenvalues.min();
    Ok((smallest >= -1e-8, format!("smallest eigenvalue {smallest:.3e}")))
}
