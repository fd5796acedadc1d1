//! Parallel experiment drivers over the core crate. Chains and pairs each own
//! a random stream derived from `(seed, index)`, so results do not depend on
//! thread scheduling.

use rayon::prelude::*;

use klmc_core::coupling::{simulate_pair, summarize_contraction, ContractionConfig, ContractionReport, PairSample};
use klmc_core::group::ad_operator_norm;
use klmc_core::potential::{estimate_smoothness, Potential, SmoothnessEstimate};
use klmc_core::sampler::{chain_rng, default_initial_point, run_chain, Record, RunConfig};
use klmc_core::theory::{choose_parameters, FTable, TheoryParams};
use klmc_core::Result;

/// Stream reserved for constant estimation, away from chain indices.
const ESTIMATE_STREAM: u64 = u64::MAX - 1;
pub const DEFAULT_ESTIMATE_PAIRS: usize = 20_000;
const AD_NORM_SAMPLES: usize = 8;

/// Every chain of `cfg`, recorded, from the shared default starting point.
pub fn run_ensemble<P: Potential + ?Sized>(cfg: &RunConfig, u: &P) -> Result<Vec<Vec<Record>>> {
    cfg.validate()?;
    let g0 = default_initial_point(cfg.n, cfg.seed)?;
    (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let mut rows = Vec::with_capacity((cfg.steps / cfg.record_every + 1) as usize);
            run_chain(cfg, u, &g0, c, |r| rows.push(r))?;
            Ok(rows)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    pub smoothness: SmoothnessEstimate,
    pub ad_norm: f64,
}

/// `L` and `D` of the potential by sampling, `C` by the `ad` norm search.
pub fn estimate_constants<P: Potential + ?Sized>(n: usize, u: &P, pairs: usize, seed: u64) -> Result<Constants> {
    let mut rng = chain_rng(seed, ESTIMATE_STREAM);
    Ok(Constants {
        smoothness: estimate_smoothness(u, n, pairs, &mut rng)?,
        ad_norm: ad_operator_norm(n, AD_NORM_SAMPLES)?,
    })
}

pub fn estimated_params<P: Potential + ?Sized>(
    n: usize,
    u: &P,
    gamma: f64,
    pairs: usize,
    seed: u64,
) -> Result<TheoryParams> {
    let c = estimate_constants(n, u, pairs, seed)?;
    choose_parameters(c.smoothness.lipschitz, c.smoothness.diameter, gamma, c.ad_norm, n * (n - 1) / 2)
}

pub struct Contraction {
    pub report: ContractionReport,
    pub rows: Vec<PairSample>,
}

/// Coupled pairs in parallel; rows are returned in pair order.
pub fn run_contraction<P: Potential + ?Sized>(
    cfg: &ContractionConfig,
    u: &P,
    params: &TheoryParams,
    f: &FTable,
    keep_rows: bool,
) -> Result<Contraction> {
    let per_pair: Vec<(Option<Vec<f64>>, Vec<PairSample>)> = (0..cfg.pairs)
        .into_par_iter()
        .map(|p| {
            let mut rows = Vec::new();
            let path = simulate_pair(cfg, u, params, f, p, |s| {
                if keep_rows {
                    rows.push(s)
                }
            })?;
            Ok((path, rows))
        })
        .collect::<Result<_>>()?;
    let (paths, rows): (Vec<_>, Vec<_>) = per_pair.into_iter().unzip();
    Ok(Contraction {
        report: summarize_contraction(cfg, params.c_star, &paths),
        rows: rows.into_iter().flatten().collect(),
    })
}
