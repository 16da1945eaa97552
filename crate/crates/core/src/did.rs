//! Resampling difference-in-differences between two hypothetical
//! populations under a pre-period and a post-period beta regression.
//!
//! Each of the four (population, period) cells is a beta distribution with
//! mean `predict_mean(fit, covariates)` and that fit's precision.
//!
//! Sampling runs in two stages. First `n_samples` individual draws are taken
//! from every cell. With `draws_per_cell = 1` resample `b` is simply
//! `δ_b = (post₁ - post₂) - (pre₁ - pre₂)` over the `b`-th draws. With
//! `draws_per_cell = m > 1` each cell value in `δ_b` is instead the mean of
//! `m` values picked uniformly with replacement from that cell's draws, so
//! δ describes the average of `m` block groups rather than a single one.
//! The p-value is twice the smaller of the shares of resamples with `δ ≤ 0`
//! and `δ ≥ 0`, floored at `2 / n_samples`.
//!
//! Both stages run in fixed-size chunks, each from its own ChaCha8 stream,
//! so the result does not depend on the execution strategy.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::betareg::{beta_density_params, predict_mean, MeanModel};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::montecarlo::{empirical_quantile, replicate_rng};

pub const MIN_SAMPLES: usize = 10_000;
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_DRAWS_PER_CELL: usize = 256;
const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DidConfig {
    pub n_samples: usize,
    /// Beta draws averaged per cell in one resample.
    pub draws_per_cell: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for DidConfig {
    fn default() -> Self {
        DidConfig {
            n_samples: DEFAULT_SAMPLES,
            draws_per_cell: DEFAULT_DRAWS_PER_CELL,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DidResult {
    /// Mean of the resampled δ, in percentage points.
    pub delta_estimate: f64,
    /// `(μ_post1 - μ_post2) - (μ_pre1 - μ_pre2)` in percentage points.
    pub analytic_delta: f64,
    pub p_value: f64,
    pub n_samples: usize,
    pub draws_per_cell: usize,
    /// 2.5%, 50% and 97.5% quantiles of δ, in percentage points.
    pub delta_quantiles: [f64; 3],
    pub seed: u64,
}

struct Cells {
    means: [f64; 4],
    dists: [Beta<f64>; 4],
}

fn cells<A, B>(pre: &A, post: &B, p1: &[f64], p2: &[f64]) -> Result<Cells>
where
    A: MeanModel + ?Sized,
    B: MeanModel + ?Sized,
{
    if pre.covariate_arity() != post.covariate_arity() {
        return Err(Error::Arity {
            expected: pre.covariate_arity(),
            got: post.covariate_arity(),
        });
    }
    let means = [
        predict_mean(pre, p1)?,
        predict_mean(pre, p2)?,
        predict_mean(post, p1)?,
        predict_mean(post, p2)?,
    ];
    let phis = [
        pre.precision(),
        pre.precision(),
        post.precision(),
        post.precision(),
    ];
    let mut dists = Vec::with_capacity(4);
    for (mu, phi) in means.iter().zip(phis) {
        let (a, b) = beta_density_params(*mu, phi)?;
        dists.push(Beta::new(a, b).map_err(|e| Error::Domain(e.to_string()))?);
    }
    Ok(Cells {
        means,
        dists: dists.try_into().expect("four cells"),
    })
}

pub fn did_test<A, B>(
    pre_fit: &A,
    post_fit: &B,
    covariates_p1: &[f64],
    covariates_p2: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<DidResult>
where
    A: MeanModel + ?Sized,
    B: MeanModel + ?Sized,
{
    let config = DidConfig {
        n_samples,
        seed,
        ..DidConfig::default()
    };
    did_test_with(pre_fit, post_fit, covariates_p1, covariates_p2, &config)
}

pub fn did_test_with<A, B>(
    pre_fit: &A,
    post_fit: &B,
    covariates_p1: &[f64],
    covariates_p2: &[f64],
    config: &DidConfig,
) -> Result<DidResult>
where
    A: MeanModel + ?Sized,
    B: MeanModel + ?Sized,
{
    if config.n_samples < MIN_SAMPLES {
        return Err(Error::Config(format!(
            "n_samples must be at least {MIN_SAMPLES}, got {}",
            config.n_samples
        )));
    }
    if config.draws_per_cell == 0 {
        return Err(Error::Config("draws_per_cell must be at least 1".into()));
    }
    let cells = cells(pre_fit, post_fit, covariates_p1, covariates_p2)?;
    let m = config.draws_per_cell;
    let n = config.n_samples;
    let n_chunks = n.div_ceil(CHUNK);

    // stage one: draw[b] holds the b-th draw of every cell
    let draws: Vec<[f64; 4]> = config
        .exec
        .map(n_chunks, |c| {
            let mut rng = replicate_rng(config.seed, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len)
                .map(|_| cells.dists.each_ref().map(|d| d.sample(&mut rng)))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect();
    let delta = |v: [f64; 4]| (v[2] - v[3]) - (v[0] - v[1]);

    let mut deltas: Vec<f64> = if m == 1 {
        draws.iter().map(|v| delta(*v)).collect()
    } else {
        let pools: [Vec<f64>; 4] = [0, 1, 2, 3].map(|k| draws.iter().map(|v| v[k]).collect());
        config
            .exec
            .map(n_chunks, |c| {
                let mut rng = replicate_rng(config.seed, (n_chunks + c) as u64);
                let len = CHUNK.min(n - c * CHUNK);
                (0..len)
                    .map(|_| {
                        let avg = pools.each_ref().map(|pool| {
                            (0..m).map(|_| pool[rng.random_range(0..n)]).sum::<f64>() / m as f64
                        });
                        delta(avg)
                    })
                    .collect::<Vec<_>>()
            })
            .into_iter()
            .flatten()
            .collect()
    };

    let mean = deltas.iter().sum::<f64>() / n as f64;
    let below = deltas.iter().filter(|d| **d <= 0.0).count();
    let above = deltas.iter().filter(|d| **d >= 0.0).count();
    let p_value = (2.0 * below.min(above) as f64 / n as f64)
        .max(2.0 / n as f64)
        .min(1.0);
    deltas.sort_by(f64::total_cmp);
    let q = |p| 100.0 * empirical_quantile(&deltas, p);
    let [pre1, pre2, post1, post2] = cells.means;
    Ok(DidResult {
        delta_estimate: 100.0 * mean,
        analytic_delta: 100.0 * ((post1 - post2) - (pre1 - pre2)),
        p_value,
        n_samples: n,
        draws_per_cell: m,
        delta_quantiles: [q(0.025), q(0.5), q(0.975)],
        seed: config.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRow {
    pub name: String,
    pub pre_pct: f64,
    pub post_pct: f64,
}

/// Pre and post mean stay-home percentages for named covariate vectors.
pub fn hypothetical_block_report<A, B>(
    pre_fit: &A,
    post_fit: &B,
    block_specs: &[(String, Vec<f64>)],
) -> Result<Vec<BlockRow>>
where
    A: MeanModel + ?Sized,
    B: MeanModel + ?Sized,
{
    block_specs
        .iter()
        .map(|(name, x)| {
            Ok(BlockRow {
                name: name.clone(),
                pre_pct: 100.0 * predict_mean(pre_fit, x)?,
                post_pct: 100.0 * predict_mean(post_fit, x)?,
            })
        })
        .collect()
}

pub fn format_block_table(rows: &[BlockRow]) -> String {
    let mut out = format!("{:<20}{:>10}{:>10}\n", "Hypothetical block", "Pre", "Post");
    for r in rows {
        let _ = writeln!(out, "{:<20}{:>9.1}%{:>9.1}%", r.name, r.pre_pct, r.post_pct);
    }
    out
}
