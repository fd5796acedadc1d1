//! Ground truth and statistical comparisons: the `X₁₁` marginal by quadrature,
//! Haar rejection sampling, 1-D Wasserstein distances, local-error measurement
//! and ensemble summaries.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::group::{haar_complete, haar_sample, GroupElement};
use crate::potential::Potential;
use crate::quadrature::adaptive_simpson;
use crate::sampler::{
    advance, phase_distance, standard_noise, ChainState, OuCoefficients, Record, RunConfig,
};

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
}

pub const DEFAULT_BINS: usize = 81;

impl Histogram {
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(Error::Config(format!("bad histogram range [{lo}, {hi}] with {bins} bins")));
        }
        let w = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| if i == bins { hi } else { lo + i as f64 * w }).collect();
        Ok(Histogram { edges, counts: vec![0; bins], total: 0 })
    }

    /// 81 bins on `[−1, 1]`.
    pub fn for_x11() -> Self {
        Self::uniform(-1.0, 1.0, DEFAULT_BINS).expect("valid default range")
    }

    /// Counts `x` if it lies in the closed range; returns whether it did.
    pub fn add(&mut self, x: f64) -> bool {
        let bins = self.counts.len();
        let (lo, hi) = (self.edges[0], self.edges[bins]);
        if !(x >= lo && x <= hi) {
            return false;
        }
        let i = (((x - lo) / (hi - lo)) * bins as f64) as usize;
        self.counts[i.min(bins - 1)] += 1;
        self.total += 1;
        true
    }

    pub fn densities(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, e)| c as f64 / (self.total.max(1) as f64 * (e[1] - e[0])))
            .collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }
}

/// Unnormalized `X₁₁` density under `e^{a X₁₁²}` relative to Haar, scaled by `e^{−a}`.
fn x11_weight(x: f64, n: usize, a: f64) -> f64 {
    let one = 1.0 - x * x;
    if one <= 0.0 {
        return if n == 3 { libm::exp(a * (x * x - 1.0)) } else { 0.0 };
    }
    libm::exp(0.5 * (n as f64 - 3.0) * libm::log(one) + a * (x * x - 1.0))
}

const CDF_CELLS: usize = 4000;
const QUAD_TOL: f64 = 1e-13;

/// Semi-analytic law of `X₁₁` for `U = −a·X₁₁²`, density ∝ `(1−x²)^{(n−3)/2} e^{a x²}`.
#[derive(Clone, Debug)]
pub struct MarginalOracle {
    pub n: usize,
    pub a: f64,
    norm: f64,
    /// CDF at `x_i = −1 + 2i/CDF_CELLS`.
    cdf: Vec<f64>,
}

impl MarginalOracle {
    pub fn new(n: usize, a: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidDimension(n));
        }
        if !a.is_finite() {
            return Err(Error::Config(format!("a must be finite, got {a}")));
        }
        let w = |x: f64| x11_weight(x, n, a);
        let dx = 2.0 / CDF_CELLS as f64;
        let mut cdf = Vec::with_capacity(CDF_CELLS + 1);
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 0..CDF_CELLS {
            let lo = -1.0 + i as f64 * dx;
            acc += adaptive_simpson(&w, lo, lo + dx, QUAD_TOL / CDF_CELLS as f64);
            cdf.push(acc);
        }
        let norm = acc;
        for v in &mut cdf {
            *v /= norm;
        }
        Ok(MarginalOracle { n, a, norm, cdf })
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        if !(x.abs() <= 1.0) {
            return Err(Error::Domain(format!("x11 = {x} lies outside [-1, 1]")));
        }
        Ok(x11_weight(x, self.n, self.a) / self.norm)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= -1.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let t = (x + 1.0) / 2.0 * CDF_CELLS as f64;
        let i = (t as usize).min(CDF_CELLS - 1);
        let frac = t - i as f64;
        self.cdf[i] + frac * (self.cdf[i + 1] - self.cdf[i])
    }

    /// Inverse CDF, linear within each table cell.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let i = self.cdf.partition_point(|&c| c < p).clamp(1, CDF_CELLS);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if c1 > c0 { (p - c0) / (c1 - c0) } else { 0.5 };
        -1.0 + (i as f64 - 1.0 + frac) * 2.0 / CDF_CELLS as f64
    }

    /// The `count` mid-quantiles `Q((i + ½)/count)`, sorted.
    pub fn quantiles(&self, count: usize) -> Vec<f64> {
        (0..count).map(|i| self.quantile((i as f64 + 0.5) / count as f64)).collect()
    }

    pub fn sample<R: RngCore + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        (0..count).map(|_| self.quantile(rng.random::<f64>())).collect()
    }

    /// Haar acceptance rate `E[e^{a(X₁₁² − 1)}]` of the rejection sampler.
    pub fn predicted_acceptance(&self) -> f64 {
        let haar = |x: f64| x11_weight(x, self.n, 0.0);
        self.norm / adaptive_simpson(&haar, -1.0, 1.0, QUAD_TOL)
    }
}

pub fn marginal_density_x11(x: f64, n: usize, a: f64) -> Result<f64> {
    MarginalOracle::new(n, a)?.density(x)
}

pub const MAX_PROPOSALS: u64 = 10_000_000;
pub const MIN_ACCEPTANCE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct RejectionSample {
    pub samples: Vec<GroupElement>,
    pub proposals: u64,
    pub acceptance: f64,
}

/// Exact draws from `e^{−U}` relative to Haar by accepting Haar proposals
/// with probability `e^{−(U − inf U)}`.
pub fn rejection_sample_gibbs<P: Potential + ?Sized, R: RngCore + ?Sized>(
    n: usize,
    u: &P,
    count: usize,
    rng: &mut R,
) -> Result<RejectionSample> {
    let floor = u.energy_lower_bound(n).ok_or_else(|| {
        Error::Domain("rejection sampling needs a known lower bound of the potential".into())
    })?;
    let fast = u.first_column_energy(&vec![1.0; n]).is_some();
    let mut samples = Vec::with_capacity(count);
    let mut proposals = 0u64;
    while samples.len() < count {
        if proposals >= MAX_PROPOSALS {
            let rate = samples.len() as f64 / proposals as f64;
            if rate < MIN_ACCEPTANCE {
                return Err(Error::Infeasible(format!(
                    "rejection sampler accepted {} of {proposals} proposals (rate {rate:.3e} < {MIN_ACCEPTANCE:e})",
                    samples.len()
                )));
            }
        }
        proposals += 1;
        if fast {
            let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            let nz = libm::sqrt(z.iter().map(|v| v * v).sum());
            let col: Vec<f64> = z.iter().map(|v| v / nz).collect();
            let e = u.first_column_energy(&col).expect("checked above");
            if rng.random::<f64>() < libm::exp(floor - e) {
                samples.push(haar_complete(&z, rng)?);
            }
        } else {
            let g = haar_sample(n, rng)?;
            if rng.random::<f64>() < libm::exp(floor - u.energy(&g)) {
                samples.push(g);
            }
        }
    }
    let acceptance = if proposals == 0 { 1.0 } else { count as f64 / proposals as f64 };
    Ok(RejectionSample { samples, proposals, acceptance })
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// `len` order statistics of a sorted sample, picked at mid-ranks.
fn thin(s: &[f64], len: usize) -> Vec<f64> {
    (0..len).map(|i| s[((2 * i + 1) * s.len()) / (2 * len)]).collect()
}

/// Mean absolute difference of matched order statistics; the longer sample is
/// thinned to the shorter one's size by mid-rank order statistics.
pub fn w1_empirical(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("w1 of an empty sample".into()));
    }
    let (mut sa, mut sb) = (sorted(a), sorted(b));
    if sa.len() > sb.len() {
        sa = thin(&sa, sb.len());
    } else if sb.len() > sa.len() {
        sb = thin(&sb, sa.len());
    }
    Ok(sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / sa.len() as f64)
}

/// W₁ between a sample and the oracle's mid-quantiles of the same size.
pub fn w1_to_oracle(sample: &[f64], oracle: &MarginalOracle) -> Result<f64> {
    w1_empirical(sample, &oracle.quantiles(sample.len()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalErrorRow {
    pub h: f64,
    /// Mean of `d²` between the coarse step and the fine reference.
    pub mse: f64,
    pub se: f64,
    pub reps: usize,
    pub fine_steps: usize,
}

/// Equilibrium state: rejection-sampled position, standard normal momentum.
pub fn equilibrium_state<P: Potential + ?Sized, R: RngCore + ?Sized>(
    n: usize,
    u: &P,
    rng: &mut R,
) -> Result<ChainState> {
    let g = rejection_sample_gibbs(n, u, 1, rng)?.samples.pop().expect("one sample requested");
    Ok(ChainState { g, xi: standard_noise(n, rng), step: 0, time: 0.0 })
}

/// Mean-square one-step error against a reference of `h/h_ref` steps driven by
/// the same Brownian path, `h_ref = min(h_list)/64`.
pub fn measure_local_error<P: Potential + ?Sized, R: RngCore + ?Sized>(
    cfg: &RunConfig,
    u: &P,
    h_list: &[f64],
    reps: usize,
    rng: &mut R,
) -> Result<Vec<LocalErrorRow>> {
    if h_list.is_empty() || reps == 0 {
        return Err(Error::Config("need at least one h and one repetition".into()));
    }
    if h_list.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(Error::Config("every h must be positive".into()));
    }
    let h_ref = h_list.iter().copied().fold(f64::INFINITY, f64::min) / 64.0;
    let fine: Vec<usize> = h_list
        .iter()
        .map(|&h| {
            let k = libm::round(h / h_ref);
            if (h / h_ref - k).abs() > 1e-9 * k {
                Err(Error::Config(format!("h = {h} is not a multiple of h_ref = {h_ref}")))
            } else {
                Ok(k as usize)
            }
        })
        .collect::<Result<_>>()?;
    let gamma = cfg.gamma;
    let c_ref = OuCoefficients::new(gamma, h_ref)?;
    let n = cfg.n;
    let mut sums = vec![(0.0f64, 0.0f64); h_list.len()];
    for _ in 0..reps {
        let start = equilibrium_state(n, u, rng)?;
        for (idx, (&h, &k)) in h_list.iter().zip(&fine).enumerate() {
            let c = OuCoefficients::new(gamma, h)?;
            let mut reference = start.clone();
            let mut coarse_noise = crate::group::AlgebraElement::zero(n);
            for j in 0..k {
                let eta = standard_noise(n, rng);
                reference = advance(&reference, u, &c_ref, h_ref, cfg.order, Some(&eta));
                // Weight of this increment in the coarse OU solution at time h.
                let w = libm::exp(-gamma * h_ref * (k - j - 1) as f64) * c_ref.noise_sd;
                coarse_noise.axpy(w, &eta);
            }
            let eta = if c.noise_sd > 0.0 { coarse_noise.scale(1.0 / c.noise_sd) } else { coarse_noise };
            let coarse = advance(&start, u, &c, h, cfg.order, Some(&eta));
            let d = phase_distance(&coarse, &reference).value;
            let d2 = d * d;
            sums[idx].0 += d2;
            sums[idx].1 += d2 * d2;
        }
    }
    let r = reps as f64;
    Ok(h_list
        .iter()
        .zip(&fine)
        .zip(&sums)
        .map(|((&h, &k), &(s, s2))| {
            let mean = s / r;
            let var = if reps > 1 { (s2 / r - mean * mean).max(0.0) * r / (r - 1.0) } else { 0.0 };
            LocalErrorRow { h, mse: mean, se: libm::sqrt(var / r), reps, fine_steps: k }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleRow {
    pub step: u64,
    pub time: f64,
    pub mean_x11: f64,
    pub var_x11: f64,
    pub mean_xi2: f64,
    pub var_xi2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub rows: Vec<EnsembleRow>,
    /// Averages over the rows past burn-in.
    pub mean_x11: f64,
    pub mean_xi2: f64,
}

fn mean_var(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let m = v.clone().sum::<f64>() / n;
    let var = v.map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var)
}

/// Cross-chain mean and variance per recorded row; `burn_in` leading rows are
/// left out of the summary scalars.
pub fn ensemble_stats(trajectories: &[Vec<Record>], burn_in: usize) -> Result<EnsembleStats> {
    if trajectories.len() < 2 {
        return Err(Error::Config("ensemble statistics need at least two chains".into()));
    }
    let len = trajectories[0].len();
    for (i, t) in trajectories.iter().enumerate() {
        if t.len() != len {
            return Err(Error::Alignment(format!("chain {i} has {} rows, chain 0 has {len}", t.len())));
        }
    }
    let mut rows = Vec::with_capacity(len);
    for j in 0..len {
        let step = trajectories[0][j].step;
        if trajectories.iter().any(|t| t[j].step != step) {
            return Err(Error::Alignment(format!("row {j} records different steps across chains")));
        }
        let (mean_x11, var_x11) = mean_var(trajectories.iter().map(|t| t[j].x11));
        let (mean_xi2, var_xi2) = mean_var(trajectories.iter().map(|t| t[j].xi_norm2));
        rows.push(EnsembleRow { step, time: trajectories[0][j].time, mean_x11, var_x11, mean_xi2, var_xi2 });
    }
    let kept = &rows[burn_in.min(rows.len())..];
    let k = kept.len().max(1) as f64;
    Ok(EnsembleStats {
        mean_x11: kept.iter().map(|r| r.mean_x11).sum::<f64>() / k,
        mean_xi2: kept.iter().map(|r| r.mean_xi2).sum::<f64>() / k,
        rows,
    })
}

/// `10/c*` time units in steps of `h`, saturating when `c*` underflows.
pub fn default_burn_in_steps(c_star: f64, h: f64) -> u64 {
    let steps = libm::ceil(10.0 / (c_star * h));
    if steps.is_finite() && steps < u64::MAX as f64 {
        steps as u64
    } else {
        u64::MAX
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{PotentialSpec, X11Squared};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn histogram_counts() {
        let mut h = Histogram::for_x11();
        assert_eq!(h.edges.len(), 82);
        for x in [-1.0, 1.0, 0.0, 0.3, 2.0, f64::NAN] {
            h.add(x);
        }
        assert_eq!(h.total, 4);
        assert_eq!(h.counts.iter().sum::<u64>(), h.total);
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[80], 1);
        let area: f64 = h.densities().iter().zip(h.edges.windows(2)).map(|(d, e)| d * (e[1] - e[0])).sum();
        assert!((area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn so3_haar_marginal_is_uniform() {
        for x in [-1.0, -0.4, 0.0, 0.9, 1.0] {
            assert!((marginal_density_x11(x, 3, 0.0).unwrap() - 0.5).abs() < 1e-10);
        }
        assert!(matches!(marginal_density_x11(1.5, 3, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn oracle_modes_and_symmetry() {
        let o = MarginalOracle::new(10, 10.0).unwrap();
        let mode = libm::sqrt(13.0 / 20.0);
        let d0 = o.density(mode).unwrap();
        for dx in [-1e-3, 1e-3] {
            assert!(o.density(mode + dx).unwrap() < d0);
        }
        for x in [0.1, 0.5, mode, 0.99] {
            assert!((o.density(x).unwrap() - o.density(-x).unwrap()).abs() <= 1e-12);
        }
        assert!((o.cdf(0.0) - 0.5).abs() < 1e-8);
        assert!((o.cdf(1.0) - 1.0).abs() < 1e-12);
        assert!(o.cdf.windows(2).all(|w| w[1] >= w[0] - 1e-8));
        assert!((o.quantile(o.cdf(0.37)) - 0.37).abs() < 1e-9);
    }

    #[test]
    fn oracle_normalizes() {
        for (n, a) in [(3, 0.0), (4, 2.0), (10, 10.0)] {
            let o = MarginalOracle::new(n, a).unwrap();
            let mass = adaptive_simpson(&|x| o.density(x).unwrap(), -1.0, 1.0, 1e-12);
            assert!((mass - 1.0).abs() < 1e-9, "n={n} a={a}: {mass}");
        }
    }

    #[test]
    fn predicted_acceptance_matches_direct_quadrature() {
        let o = MarginalOracle::new(10, 10.0).unwrap();
        let num = adaptive_simpson(&|x: f64| libm::exp(10.0 * (x * x - 1.0)) * libm::pow(1.0 - x * x, 3.5), -1.0, 1.0, 1e-15);
        let den = adaptive_simpson(&|x: f64| libm::pow(1.0 - x * x, 3.5), -1.0, 1.0, 1e-15);
        let p = o.predicted_acceptance();
        assert!((p - num / den).abs() < 1e-9 * p);
        assert!(p > 1e-4 && p < 1e-3, "{p}");
    }

    #[test]
    fn flat_potential_always_accepts() {
        let u = X11Squared { a: 0.0 };
        let r = rejection_sample_gibbs(4, &u, 50, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(r.acceptance, 1.0);
        assert_eq!(r.samples.len(), 50);
    }

    #[test]
    fn w1_basics() {
        let a = [0.3, -0.2, 0.9, 0.1];
        assert_eq!(w1_empirical(&a, &a).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().map(|x| x + 0.25).collect();
        assert!((w1_empirical(&a, &b).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(w1_empirical(&[], &a), Err(Error::Domain(_))));
        let long: Vec<f64> = (0..400).map(|i| i as f64 / 400.0).collect();
        let short: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!(w1_empirical(&long, &short).unwrap() < 0.01);
    }

    #[test]
    fn oracle_draws_agree() {
        let o = MarginalOracle::new(5, 3.0).unwrap();
        let a = o.sample(100_000, &mut ChaCha8Rng::seed_from_u64(1));
        let b = o.sample(100_000, &mut ChaCha8Rng::seed_from_u64(2));
        assert!(w1_empirical(&a, &b).unwrap() <= 0.01);
    }

    #[test]
    fn local_error_vanishes_at_reference_step() {
        let cfg = RunConfig::new(3, PotentialSpec::X11Squared { a: 1.0 });
        let u = X11Squared { a: 1.0 };
        let h_ref = 0.1 / 64.0;
        let rows = measure_local_error(&cfg, &u, &[h_ref], 5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(rows[0].fine_steps, 64);
        let rows = measure_local_error(&cfg, &u, &[0.1, 0.1 / 64.0 * 64.0], 5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(rows[0].mse > 0.0);
        assert!(measure_local_error(&cfg, &u, &[0.1, 0.07], 5, &mut ChaCha8Rng::seed_from_u64(3)).is_err());
    }

    #[test]
    fn one_fine_step_reproduces_coarse_step() {
        // With h = h_ref the coarse noise is the single fine increment.
        let cfg = RunConfig::new(3, PotentialSpec::X11Squared { a: 1.0 });
        let u = X11Squared { a: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let start = equilibrium_state(3, &u, &mut rng).unwrap();
        let c = OuCoefficients::new(1.0, 0.01).unwrap();
        let eta = standard_noise(3, &mut rng);
        let w = c.noise_sd;
        let a = advance(&start, &u, &c, 0.01, cfg.order, Some(&eta));
        let b = advance(&start, &u, &c, 0.01, cfg.order, Some(&eta.scale(w).scale(1.0 / w)));
        assert!(phase_distance(&a, &b).value < 1e-15);
    }

    fn rec(chain: usize, step: u64, x11: f64, xi2: f64) -> Record {
        Record { chain, step, time: step as f64, x11, xi_norm2: xi2, energy: 0.0 }
    }

    #[test]
    fn ensemble_stats_rules() {
        let a = vec![rec(0, 0, 0.5, 1.0), rec(0, 1, 0.5, 1.0)];
        let b = vec![rec(1, 0, 0.5, 1.0), rec(1, 1, 0.5, 1.0)];
        let s = ensemble_stats(&[a.clone(), b.clone()], 0).unwrap();
        assert!(s.rows.iter().all(|r| r.var_x11 == 0.0 && r.var_xi2 == 0.0));
        assert_eq!(s.mean_x11, 0.5);
        assert!(matches!(ensemble_stats(&[a.clone()], 0), Err(Error::Config(_))));
        assert!(matches!(ensemble_stats(&[a, b[..1].to_vec()], 0), Err(Error::Alignment(_))));
    }

    #[test]
    fn burn_in_saturates() {
        assert_eq!(default_burn_in_steps(0.0, 0.1), u64::MAX);
        assert_eq!(default_burn_in_steps(0.5, 0.1), 200);
    }
}
