//! TOML experiment configuration.
//!
//! ```toml
//! n1_sequence = [32, 64, 128]
//! replicates = 400
//! master_seed = 7
//!
//! [regime]
//! kind = "critical"
//! law = { type = "dependent", alpha1 = 1.0, alpha2 = 1.0, angular = { type = "point_mass", w1 = 0.5 } }
//!
//! [m_rule]
//! type = "gap"
//! c = 4.0
//!
//! [[pairs]]
//! s = [1.0, 1.0]
//! t = [1.0, 1.0]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{check_point, floor_index};
use crate::theory::RegimeSpec;

/// Smallest multiplier allowed for the gap rule.
pub const MIN_GAP_MULTIPLIER: f64 = 4.0;

/// Number of aggregated copies as a function of the sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MRule {
    /// `m = ceil(c · gap(n))` with `gap` the ratio the copy count must
    /// dominate for the limit to hold.
    Gap { c: f64 },
    Fixed { m: u64 },
}

impl Default for MRule {
    fn default() -> Self {
        Self::Gap {
            c: MIN_GAP_MULTIPLIER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub s: [f64; 2],
    pub t: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative tolerance for the critical-regime limit covariance.
    pub cov_g_rel: f64,
    /// Largest per-axis size for which exact covariances are computed.
    pub exact_max_n: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            cov_g_rel: 1e-3,
            exact_max_n: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub regime: RegimeSpec,
    pub n1_sequence: Vec<u64>,
    #[serde(default)]
    pub m_rule: MRule,
    #[serde(default)]
    pub pairs: Vec<Pair>,
    pub replicates: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n1_sequence.is_empty() {
            return bad("n1_sequence is empty".into());
        }
        if self.n1_sequence.contains(&0) {
            return bad("n1_sequence entries must be positive".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be positive".into());
        }
        match self.m_rule {
            MRule::Gap { c } if !(c >= MIN_GAP_MULTIPLIER && c.is_finite()) => {
                return bad(format!("m_rule gap multiplier must be at least {MIN_GAP_MULTIPLIER}, got {c}"));
            }
            MRule::Fixed { m: 0 } => return bad("m_rule fixed m must be positive".into()),
            _ => {}
        }
        if !(self.tolerances.cov_g_rel > 0.0) {
            return bad("tolerances.cov_g_rel must be positive".into());
        }
        let smallest = self.sizes().into_iter().min_by_key(|n| n[0] * n[1]).expect("nonempty");
        for (i, p) in self.pairs.iter().enumerate() {
            for x in [p.s, p.t] {
                check_point(x).or_else(|e| bad(format!("pair {i}: {e}")))?;
                if floor_index(smallest[0], x[0]) == 0 || floor_index(smallest[1], x[1]) == 0 {
                    return bad(format!(
                        "pair {i}: ({}, {}) floors to an empty rectangle at n = ({}, {})",
                        x[0], x[1], smallest[0], smallest[1]
                    ));
                }
            }
        }
        Ok(())
    }

    /// `(n1, n2)` along the sequence.
    pub fn sizes(&self) -> Vec<[u64; 2]> {
        self.n1_sequence
            .iter()
            .map(|&n1| [n1, self.regime.n2(n1)])
            .collect()
    }

    pub fn copies(&self, n: [u64; 2]) -> Result<u64> {
        match self.m_rule {
            MRule::Fixed { m } => Ok(m),
            MRule::Gap { c } => Ok(((c * self.regime.copy_gap(n)?).ceil() as u64).max(1)),
        }
    }

    /// Distinct grid points used by the pairs, and each pair's indices into
    /// them.
    pub fn grid(&self) -> (Vec<[f64; 2]>, Vec<(usize, usize)>) {
        let mut grid: Vec<[f64; 2]> = Vec::new();
        let mut index = |x: [f64; 2]| match grid.iter().position(|g| *g == x) {
            Some(i) => i,
            None => {
                grid.push(x);
                grid.len() - 1
            }
        };
        let pairs = self.pairs.iter().map(|p| (index(p.s), index(p.t))).collect();
        (grid, pairs)
    }
}
