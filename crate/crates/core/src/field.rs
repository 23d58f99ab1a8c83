//! Simulation of correlated ±1 walks and of the product fields built from
//! them.
//!
//! A single copy of the field is `S_n(t) = S¹_{⌊n1 t1⌋} S²_{⌊n2 t2⌋}`: the
//! lattice sum of `ε¹_{j1} ε²_{j2}` over `[1, n·t]` factorizes into two 1-D
//! partial sums, so a copy costs `O(n1 + n2)` and the `n1 × n2` lattice is
//! never built.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::persistence::PersistenceLaw;
use crate::rng::{stream, AXIS1_ROLE, AXIS2_ROLE, PERSISTENCE_ROLE};

/// Cumulative sums `(0, ε1, ε1 + ε2, …)` of a walk of length `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkPartialSums {
    pub cumulative: Vec<i64>,
}

impl WalkPartialSums {
    pub fn n(&self) -> usize {
        self.cumulative.len() - 1
    }

    pub fn from_steps(steps: &[i8]) -> Self {
        let mut cumulative = Vec::with_capacity(steps.len() + 1);
        let mut acc = 0i64;
        cumulative.push(0);
        for &e in steps {
            acc += e as i64;
            cumulative.push(acc);
        }
        Self { cumulative }
    }
}

/// `q · 2^64`, the threshold below which a raw 64-bit draw keeps the
/// previous step.
fn keep_threshold(q: f64) -> u64 {
    (q * 18_446_744_073_709_551_616.0) as u64
}

/// Simulates a walk whose first step is a fair sign and each later step
/// repeats the previous one with probability `q`.
pub fn simulate_walk<R: RngCore + ?Sized>(n: usize, q: f64, rng: &mut R) -> WalkPartialSums {
    let mut cumulative = vec![0i64; n + 1];
    fill_walk(&mut cumulative, q, rng);
    WalkPartialSums { cumulative }
}

/// Writes the partial sums of a walk of length `out.len() - 1` into `out`.
fn fill_walk<R: RngCore + ?Sized>(out: &mut [i64], q: f64, rng: &mut R) {
    if out.len() < 2 {
        return;
    }
    let keep = keep_threshold(q);
    let mut step: i64 = if rng.next_u64() >> 63 == 0 { 1 } else { -1 };
    let mut acc = step;
    out[0] = 0;
    out[1] = acc;
    for slot in out.iter_mut().skip(2) {
        if rng.next_u64() >= keep {
            step = -step;
        }
        acc += step;
        *slot = acc;
    }
}

/// Walk driven by explicit uniforms: step `j + 1` flips iff
/// `uniforms[j - 1] >= q`.
pub fn walk_from_uniforms(first_positive: bool, q: f64, uniforms: &[f64]) -> WalkPartialSums {
    let mut steps = Vec::with_capacity(uniforms.len() + 1);
    let mut e: i8 = if first_positive { 1 } else { -1 };
    steps.push(e);
    for &u in uniforms {
        if u >= q {
            e = -e;
        }
        steps.push(e);
    }
    WalkPartialSums::from_steps(&steps)
}

/// `⌊n t⌋`, tolerant of representation error in decimal `t`.
pub fn floor_index(n: u64, t: f64) -> usize {
    let x = n as f64 * t;
    (x + 1e-9 * x.max(1.0)).floor() as usize
}

pub fn check_point(t: [f64; 2]) -> Result<()> {
    if t.iter().all(|x| (0.0..=1.0).contains(x)) {
        Ok(())
    } else {
        Err(invalid(
            "t",
            format!("grid points must lie in [0, 1]², got ({}, {})", t[0], t[1]),
        ))
    }
}

/// Floored lattice indices of each grid point.
pub fn grid_indices(n: [u64; 2], grid: &[[f64; 2]]) -> Result<Vec<[usize; 2]>> {
    grid.iter()
        .map(|&t| {
            check_point(t)?;
            Ok([floor_index(n[0], t[0]), floor_index(n[1], t[1])])
        })
        .collect()
}

/// Product of the two walks' partial sums at each index pair.
pub fn product_values(w1: &WalkPartialSums, w2: &WalkPartialSums, idx: &[[usize; 2]]) -> Vec<i64> {
    idx.iter()
        .map(|&[a, b]| w1.cumulative[a] * w2.cumulative[b])
        .collect()
}

/// Reusable buffers for single-copy simulation.
#[derive(Debug, Default)]
pub struct CopyScratch {
    axis: [Vec<i64>; 2],
}

/// Copy values with persistence pinned at `q`, walks drawn from the two
/// given streams.
pub fn copy_with_q<R: RngCore + ?Sized>(
    q: [f64; 2],
    idx: &[[usize; 2]],
    rngs: [&mut R; 2],
    scratch: &mut CopyScratch,
    out: &mut [i64],
) {
    let mut len = [0usize; 2];
    for &[a, b] in idx {
        len[0] = len[0].max(a);
        len[1] = len[1].max(b);
    }
    for (k, rng) in rngs.into_iter().enumerate() {
        let buf = &mut scratch.axis[k];
        buf.clear();
        buf.resize(len[k] + 1, 0);
        fill_walk(buf, q[k], rng);
    }
    for (o, &[a, b]) in out.iter_mut().zip(idx) {
        *o = scratch.axis[0][a] * scratch.axis[1][b];
    }
}

/// One copy of the field on the streams derived from `(seed, copy)`.
/// `idx` comes from [`grid_indices`].
pub fn single_copy(
    law: &PersistenceLaw,
    idx: &[[usize; 2]],
    seed: u64,
    copy: u64,
    scratch: &mut CopyScratch,
    out: &mut [i64],
) {
    let mut rq = stream(seed, &[copy, PERSISTENCE_ROLE]);
    let q = law.sample_q(&mut rq).q();
    let mut r1 = stream(seed, &[copy, AXIS1_ROLE]);
    let mut r2 = stream(seed, &[copy, AXIS2_ROLE]);
    copy_with_q(q, idx, [&mut r1, &mut r2], scratch, out);
}

/// Single-copy values of `S_n(t)` on a grid, drawing `q` and both walks from
/// the caller's stream.
pub fn single_field_values<R: Rng + ?Sized>(
    n: [u64; 2],
    grid: &[[f64; 2]],
    law: &PersistenceLaw,
    rng: &mut R,
) -> Result<Vec<i64>> {
    let idx = grid_indices(n, grid)?;
    let q = law.sample_q(rng).q();
    let w1 = simulate_walk(n[0] as usize, q[0], rng);
    let w2 = simulate_walk(n[1] as usize, q[1], rng);
    Ok(product_values(&w1, &w2, &idx))
}

/// Sums `m` per-copy value vectors produced by `copy(c, out)`. Copies run on
/// the current rayon pool; integer addition makes the result independent of
/// how copies are scheduled.
pub fn aggregate_with<F>(m: u64, len: usize, copy: F) -> Vec<i64>
where
    F: Fn(u64, &mut CopyScratch, &mut [i64]) + Sync,
{
    (0..m)
        .into_par_iter()
        .fold(
            || (CopyScratch::default(), vec![0i64; len], vec![0i64; len]),
            |(mut scratch, mut acc, mut buf), c| {
                copy(c, &mut scratch, &mut buf);
                for (a, b) in acc.iter_mut().zip(&buf) {
                    *a += b;
                }
                (scratch, acc, buf)
            },
        )
        .map(|(_, acc, _)| acc)
        .reduce(
            || vec![0i64; len],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                a
            },
        )
}

/// One simulated aggregated field `Ŝ_n(t) = Σ_{c < m} S^c_n(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRun {
    pub n: [u64; 2],
    pub grid: Vec<[f64; 2]>,
    pub values: Vec<i64>,
    pub m: u64,
    pub master_seed: u64,
    pub law: PersistenceLaw,
}

pub fn aggregate_field(
    n: [u64; 2],
    grid: &[[f64; 2]],
    law: &PersistenceLaw,
    m: u64,
    master_seed: u64,
) -> Result<FieldRun> {
    if m == 0 {
        return Err(invalid("m", "at least one copy is required"));
    }
    let idx = grid_indices(n, grid)?;
    let values = aggregate_with(m, idx.len(), |c, scratch, out| {
        single_copy(law, &idx, master_seed, c, scratch, out)
    });
    Ok(FieldRun {
        n,
        grid: grid.to_vec(),
        values,
        m,
        master_seed,
        law: law.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Mean of `Y_i(s) Y_i(t)` over runs, with the standard error of that mean.
/// The statistics are centered by construction, so no mean is subtracted.
pub fn empirical_cov(runs: &[Vec<f64>], pairs: &[(usize, usize)]) -> Result<Vec<CovEstimate>> {
    if runs.len() < 2 {
        return Err(Error::Evaluation(format!(
            "need at least 2 runs for a covariance estimate, got {}",
            runs.len()
        )));
    }
    let n = runs.len() as f64;
    pairs
        .iter()
        .map(|&(s, t)| {
            let products: Vec<f64> = runs.iter().map(|y| y[s] * y[t]).collect();
            let mean = products.iter().sum::<f64>() / n;
            let var = products.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
            Ok(CovEstimate {
                estimate: mean,
                stderr: (var / n).sqrt(),
            })
        })
        .collect()
}
