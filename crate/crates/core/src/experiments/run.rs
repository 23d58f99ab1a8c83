//! Monte Carlo runs and exact convergence tables.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::field::{aggregate_field, empirical_cov};
use crate::rng::derive_seed;
use crate::theory::{
    cov_g_with, exact_cov_sn, normalization, regime_constants, CovGOptions, Limit,
};

use super::config::ExperimentConfig;
use super::report::{ConvergenceRow, CovReport, LimitInfo, Metadata, ReportKind, Row, Shape, REPORT_VERSION};

pub const SEED_DERIVATION: &str =
    "replicate r at size index j aggregates copies seeded by derive_seed(master_seed, [j, r])";

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record elapsed time in the report; off by default so that reports are
    /// reproducible byte for byte.
    pub wall_clock: bool,
}

/// Limit covariance of the normalized statistic at each pair.
pub fn theory_values(config: &ExperimentConfig) -> Result<Vec<f64>> {
    let spec = &config.regime;
    match regime_constants(spec)? {
        limit @ Limit::Sheet { .. } => Ok(config
                .pairs
                .iter()
                .map(|p| limit.sheet_cov(p.s, p.t).expect("sheet limit"))
                .collect()),
        Limit::Critical => {
            let law = spec.law();
            let alpha = law.alpha().expect("critical regime has a dependent law");
            let angular = law.angular().expect("critical regime has a dependent law");
            let options = CovGOptions {
                rel_tol: config.tolerances.cov_g_rel,
                ..CovGOptions::default()
            };
            config
                .pairs
                .iter()
                .map(|p| Ok(cov_g_with(p.s, p.t, alpha, angular, options)?.value))
                .collect()
        }
    }
}

fn limit_info(config: &ExperimentConfig) -> Result<LimitInfo> {
    let spec = &config.regime;
    let (hurst, sigma2) = match regime_constants(spec)? {
        Limit::Sheet { h, sigma2 } => (Some(h), Some(sigma2)),
        Limit::Critical => (None, None),
    };
    Ok(LimitInfo {
        regime: spec.kind().name().to_owned(),
        hurst,
        sigma2,
    })
}

fn metadata(config: &ExperimentConfig, kind: ReportKind, started: Instant, options: RunOptions) -> Result<Metadata> {
    Ok(Metadata {
        kind,
        config: config.clone(),
        limit: limit_info(config)?,
        atom_mass: config.regime.law().clamp_atom()?,
        seed_derivation: SEED_DERIVATION.to_owned(),
        wall_clock_seconds: options.wall_clock.then(|| started.elapsed().as_secs_f64()),
    })
}

/// Exact covariance of the normalized statistic, `Cov(S_n(s), S_n(t)) · m / N²`
/// with `N` the normalization.
pub fn normalized_exact(config: &ExperimentConfig, n: [u64; 2], s: [f64; 2], t: [f64; 2]) -> Result<f64> {
    let limit = config.tolerances.exact_max_n;
    if n[0] > limit || n[1] > limit {
        return Err(Error::Config(format!(
            "exact covariance at n = ({}, {}) exceeds the per-axis limit {limit} (tolerances.exact_max_n)",
            n[0], n[1]
        )));
    }
    let m = config.copies(n)?;
    let norm = normalization(&config.regime, n, m)?;
    Ok(exact_cov_sn(n, s, t, config.regime.law())? * m as f64 / (norm * norm))
}

/// Normalized statistic at every grid point for each replicate at one size.
pub fn simulate_normalized(
    config: &ExperimentConfig,
    size_index: usize,
    n: [u64; 2],
    grid: &[[f64; 2]],
) -> Result<Vec<Vec<f64>>> {
    let m = config.copies(n)?;
    let norm = normalization(&config.regime, n, m)?;
    (0..config.replicates)
        .map(|r| {
            let seed = derive_seed(config.master_seed, &[size_index as u64, r]);
            let run = aggregate_field(n, grid, config.regime.law(), m, seed)?;
            Ok(run.values.iter().map(|&v| v as f64 / norm).collect())
        })
        .collect()
}

fn ratio(value: f64, theory: f64) -> Option<f64> {
    let r = value / theory;
    r.is_finite().then_some(r)
}

fn mc_rows(
    config: &ExperimentConfig,
    theory: &[f64],
    with_exact: bool,
) -> Result<(Vec<Row>, Vec<Shape>)> {
    let (grid, pairs) = config.grid();
    let mut rows = Vec::new();
    let mut shapes = Vec::new();
    for (j, n) in config.sizes().into_iter().enumerate() {
        let m = config.copies(n)?;
        let runs = simulate_normalized(config, j, n, &grid)?;
        let estimates = empirical_cov(&runs, &pairs)?;
        for (k, point) in grid.iter().enumerate() {
            let xs: Vec<f64> = runs.iter().map(|r| r[k]).collect();
            shapes.push(Shape::from_sample(n, *point, &xs));
        }
        for ((p, est), &th) in config.pairs.iter().zip(&estimates).zip(theory) {
            let exact = if with_exact && n[0].max(n[1]) <= config.tolerances.exact_max_n {
                Some(normalized_exact(config, n, p.s, p.t)?)
            } else {
                None
            };
            rows.push(Row {
                n1: n[0],
                n2: n[1],
                m,
                s1: p.s[0],
                s2: p.s[1],
                t1: p.t[0],
                t2: p.t[1],
                theory: th,
                exact,
                estimate: Some(est.estimate),
                stderr: Some(est.stderr),
                ratio: ratio(est.estimate, th),
            });
        }
    }
    Ok((rows, shapes))
}

/// Simulates `replicates` aggregated fields per size, normalizes them and
/// estimates the covariance at each configured pair. Exact finite-n values
/// are attached wherever the sizes allow.
pub fn run_mc_experiment(config: &ExperimentConfig, options: RunOptions) -> Result<CovReport> {
    let started = Instant::now();
    config.validate()?;
    if config.replicates < 2 {
        return Err(Error::Config("a covariance estimate needs at least 2 replicates".into()));
    }
    let theory = theory_values(config)?;
    let (rows, shapes) = mc_rows(config, &theory, true)?;
    Ok(CovReport {
        version: REPORT_VERSION,
        metadata: metadata(config, ReportKind::MonteCarlo, started, options)?,
        rows,
        convergence: Vec::new(),
        shapes,
    })
}

fn convergence(rows: &[Row], pairs: usize, value: impl Fn(&Row) -> Option<f64>) -> Vec<ConvergenceRow> {
    let mut out = Vec::new();
    for p in 0..pairs {
        let mut previous: Option<f64> = None;
        for row in rows.iter().skip(p).step_by(pairs.max(1)) {
            let Some(v) = value(row) else { continue };
            let error = (v - row.theory).abs();
            out.push(ConvergenceRow {
                pair: p,
                n1: row.n1,
                n2: row.n2,
                error,
                error_ratio: previous.map(|e| error / e).filter(|r| r.is_finite()),
            });
            previous = Some(error);
        }
    }
    out
}

/// Normalized covariance against its limit along the size sequence, from
/// exact finite-n covariances (`use_exact`) or from Monte Carlo estimates.
/// The convergence section lists the distance to the limit per row and its
/// ratio to the previous row.
pub fn run_convergence_table(config: &ExperimentConfig, use_exact: bool, options: RunOptions) -> Result<CovReport> {
    let started = Instant::now();
    config.validate()?;
    let theory = theory_values(config)?;
    let (rows, shapes, kind) = if use_exact {
        let mut rows = Vec::new();
        for n in config.sizes() {
            let m = config.copies(n)?;
            for (p, &th) in config.pairs.iter().zip(&theory) {
                let exact = normalized_exact(config, n, p.s, p.t)?;
                rows.push(Row {
                    n1: n[0],
                    n2: n[1],
                    m,
                    s1: p.s[0],
                    s2: p.s[1],
                    t1: p.t[0],
                    t2: p.t[1],
                    theory: th,
                    exact: Some(exact),
                    estimate: None,
                    stderr: None,
                    ratio: ratio(exact, th),
                });
            }
        }
        (rows, Vec::new(), ReportKind::ExactTable)
    } else {
        if config.replicates < 2 {
            return Err(Error::Config("a covariance estimate needs at least 2 replicates".into()));
        }
        let (rows, shapes) = mc_rows(config, &theory, false)?;
        (rows, shapes, ReportKind::MonteCarloTable)
    };
    let convergence = if use_exact {
        convergence(&rows, config.pairs.len(), |r| r.exact)
    } else {
        convergence(&rows, config.pairs.len(), |r| r.estimate)
    };
    Ok(CovReport {
        version: REPORT_VERSION,
        metadata: metadata(config, kind, started, options)?,
        rows,
        convergence,
        shapes,
    })
}
