//! Two chains driven by mixed reflection/synchronous noise, and the empirical
//! contraction of `E ρ` along such pairs.

use alloc::vec::Vec;

use rand::RngCore;

use crate::diagnostics::rejection_sample_gibbs;
use crate::error::{Error, Result};
use crate::group::{AlgebraElement, GroupElement};
use crate::potential::Potential;
use crate::sampler::{
    advance, chain_rng, default_initial_point, standard_noise, ChainState, OuCoefficients,
    UpdateOrder,
};
use crate::theory::{geometry_from_norms, pair_vectors, FTable, TheoryParams};

/// Below this `‖Q‖` the reflection direction is taken as zero.
pub const REFLECTION_FLOOR: f64 = 1e-12;

/// `(rc, sc)` from `‖Q‖` and `‖μ‖`, with `rc² + sc² = 1`.
///
/// `rc = clamp(‖Q‖/ε)·clamp((γR + ε − ‖μ‖)/ε)`. The defining regions are
/// branched on explicitly so their values are exact rather than rounded.
pub fn rc_sc_norms(q_norm: f64, mu_norm: f64, gamma: f64, radius: f64, eps: f64) -> (f64, f64) {
    let edge = gamma * radius;
    let rc = if q_norm == 0.0 || mu_norm >= edge + eps {
        0.0
    } else if q_norm >= eps && mu_norm <= edge {
        1.0
    } else {
        let ramp_q = (q_norm / eps).clamp(0.0, 1.0);
        let ramp_mu = ((edge + eps - mu_norm) / eps).clamp(0.0, 1.0);
        ramp_q * ramp_mu
    };
    (rc, libm::sqrt((1.0 - rc * rc).max(0.0)))
}

pub fn rc_sc(
    z: &AlgebraElement,
    mu: &AlgebraElement,
    gamma: f64,
    radius: f64,
    eps: f64,
) -> (f64, f64) {
    let mut q = z.clone();
    q.axpy(1.0 / gamma, mu);
    rc_sc_norms(q.norm(), mu.norm(), gamma, radius, eps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// `rc = 1`
    Reflect,
    /// `rc = 0`
    SyncFar,
    Mixed,
}

impl Region {
    pub fn of(rc: f64) -> Self {
        if rc == 1.0 {
            Region::Reflect
        } else if rc == 0.0 {
            Region::SyncFar
        } else {
            Region::Mixed
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Reflect => "reflect",
            Region::SyncFar => "sync_far",
            Region::Mixed => "mixed",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoupledState {
    pub s: ChainState,
    pub s_hat: ChainState,
    pub z: AlgebraElement,
    pub mu: AlgebraElement,
    pub q: AlgebraElement,
    pub rc: f64,
    pub sc: f64,
    pub region: Region,
    pub near_cut_locus: bool,
}

impl CoupledState {
    pub fn new(s: ChainState, s_hat: ChainState, params: &TheoryParams, eps: f64) -> Self {
        let v = pair_vectors(&s, &s_hat, params.gamma);
        let (z, mu, q) = v.value;
        let (rc, sc) = rc_sc_norms(q.norm(), mu.norm(), params.gamma, params.radius, eps);
        CoupledState { s, s_hat, z, mu, q, rc, sc, region: Region::of(rc), near_cut_locus: v.near_cut_locus }
    }

    /// Unit reflection direction `Q/‖Q‖`, or zero.
    pub fn direction(&self) -> AlgebraElement {
        let qn = self.q.norm();
        if qn < REFLECTION_FLOOR {
            AlgebraElement::zero(self.q.dim())
        } else {
            self.q.scale(1.0 / qn)
        }
    }
}

/// `(I − 2eeᵀ)w`
pub fn reflect(w: &AlgebraElement, e: &AlgebraElement) -> AlgebraElement {
    let mut out = w.clone();
    out.axpy(-2.0 * w.inner(e), e);
    out
}

/// One splitting sub-step of both chains. `rc`, `sc` and `e` come from the
/// step's start; the reflected part of the noise is mirrored for the second chain.
pub fn coupled_step<P: Potential + ?Sized, R: RngCore + ?Sized>(
    cs: &CoupledState,
    u: &P,
    params: &TheoryParams,
    h_sim: f64,
    eps: f64,
    rng: &mut R,
) -> Result<CoupledState> {
    let c = OuCoefficients::new(params.gamma, h_sim)?;
    let n = cs.s.g.dim();
    let w_rc = standard_noise(n, rng);
    let w_sc = standard_noise(n, rng);
    let e = cs.direction();
    let mut eta = w_rc.scale(cs.rc);
    eta.axpy(cs.sc, &w_sc);
    let mut eta_hat = reflect(&w_rc, &e).scale(cs.rc);
    eta_hat.axpy(cs.sc, &w_sc);
    let s = advance(&cs.s, u, &c, h_sim, UpdateOrder::Splitting, Some(&eta));
    let s_hat = advance(&cs.s_hat, u, &c, h_sim, UpdateOrder::Splitting, Some(&eta_hat));
    Ok(CoupledState::new(s, s_hat, params, eps))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionConfig {
    pub n: usize,
    pub h_sim: f64,
    pub t_end: f64,
    pub pairs: usize,
    /// Number of intervals of the recording grid on `[0, T]`.
    pub grid: usize,
    pub seed: u64,
    pub eps: f64,
}

/// One row of the per-pair contraction trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSample {
    pub pair: usize,
    pub t: f64,
    pub rho: f64,
    pub r: f64,
    pub g_factor: f64,
    pub region: Region,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionReport {
    pub eps: f64,
    pub c_star: f64,
    pub times: Vec<f64>,
    pub mean_rho: Vec<f64>,
    pub se_rho: Vec<f64>,
    /// Least-squares slope of `ln E ρ_t` against `t`.
    pub slope: f64,
    pub exceed_fraction: f64,
    /// Whether the 10-point moving average of `e^{c*t}E ρ_t` never rises by
    /// more than two standard errors.
    pub monotone: bool,
    pub dropped_pairs: usize,
    pub kept_pairs: usize,
}

impl ContractionReport {
    pub fn key_values(&self) -> Vec<(&'static str, f64)> {
        alloc::vec![
            ("eps", self.eps),
            ("slope", self.slope),
            ("c_star", self.c_star),
            ("exceed_fraction", self.exceed_fraction),
            ("monotone", if self.monotone { 1.0 } else { 0.0 }),
            ("dropped_pairs", self.dropped_pairs as f64),
            ("kept_pairs", self.kept_pairs as f64),
            ("rho_0", self.mean_rho.first().copied().unwrap_or(0.0)),
            ("rho_T", self.mean_rho.last().copied().unwrap_or(0.0)),
        ]
    }
}

fn validate(cfg: &ContractionConfig) -> Result<usize> {
    if cfg.pairs == 0 || cfg.grid == 0 {
        return Err(Error::Config("pairs and grid must be positive".into()));
    }
    if !(cfg.h_sim > 0.0 && cfg.t_end > 0.0 && cfg.eps > 0.0) {
        return Err(Error::Config("h_sim, T and eps must be positive".into()));
    }
    let steps = libm::round(cfg.t_end / cfg.h_sim) as usize;
    if steps % cfg.grid != 0 {
        return Err(Error::Config(alloc::format!(
            "T/h_sim = {steps} steps is not a multiple of the {} grid intervals",
            cfg.grid
        )));
    }
    Ok(steps / cfg.grid)
}

/// Starting pair `p`: an equilibrium draw against the shared point mass `(g₀, 0)`.
pub fn initial_pair<P: Potential + ?Sized, R: RngCore + ?Sized>(
    n: usize,
    u: &P,
    g0: &GroupElement,
    rng: &mut R,
) -> Result<(ChainState, ChainState)> {
    let g = rejection_sample_gibbs(n, u, 1, rng)?.samples.pop().expect("one sample requested");
    let xi = standard_noise(n, rng);
    Ok((ChainState { g, xi, step: 0, time: 0.0 }, ChainState::at_rest(g0.clone())))
}

/// Simulates pair `pair` to `T`, returning `None` if it touched the cut locus.
pub fn simulate_pair<P: Potential + ?Sized>(
    cfg: &ContractionConfig,
    u: &P,
    params: &TheoryParams,
    f: &FTable,
    pair: usize,
    mut sink: impl FnMut(PairSample),
) -> Result<Option<Vec<f64>>> {
    let stride = validate(cfg)?;
    let mut rng = chain_rng(cfg.seed, pair as u64);
    let g0 = default_initial_point(cfg.n, cfg.seed)?;
    let (s, s_hat) = initial_pair(cfg.n, u, &g0, &mut rng)?;
    let mut cs = CoupledState::new(s, s_hat, params, cfg.eps);
    let mut out = Vec::with_capacity(cfg.grid + 1);
    let mut record = |cs: &CoupledState, t: f64, out: &mut Vec<f64>| {
        let p = geometry_from_norms(cs.z.norm(), cs.mu.norm(), cs.q.norm(), params);
        let rho = f.f(p.r) * p.g_factor;
        out.push(rho);
        sink(PairSample { pair, t, rho, r: p.r, g_factor: p.g_factor, region: cs.region });
    };
    if cs.near_cut_locus {
        return Ok(None);
    }
    record(&cs, 0.0, &mut out);
    for i in 1..=cfg.grid {
        for _ in 0..stride {
            cs = coupled_step(&cs, u, params, cfg.h_sim, cfg.eps, &mut rng)?;
            if cs.near_cut_locus {
                return Ok(None);
            }
        }
        record(&cs, (i * stride) as f64 * cfg.h_sim, &mut out);
    }
    Ok(Some(out))
}

/// Aggregates per-pair `ρ` paths (on the common grid) into the contraction report.
pub fn summarize_contraction(
    cfg: &ContractionConfig,
    c_star: f64,
    paths: &[Option<Vec<f64>>],
) -> ContractionReport {
    let kept: Vec<&Vec<f64>> = paths.iter().flatten().collect();
    let dropped = paths.len() - kept.len();
    let dt = cfg.t_end / cfg.grid as f64;
    let times: Vec<f64> = (0..=cfg.grid).map(|i| i as f64 * dt).collect();
    let k = kept.len() as f64;
    let mut mean = Vec::with_capacity(times.len());
    let mut se = Vec::with_capacity(times.len());
    for j in 0..times.len() {
        let m = kept.iter().map(|p| p[j]).sum::<f64>() / k.max(1.0);
        let var = if kept.len() > 1 {
            kept.iter().map(|p| (p[j] - m) * (p[j] - m)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        mean.push(m);
        se.push(libm::sqrt(var / k.max(1.0)));
    }

    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(&mean)
        .filter(|(_, m)| **m > 0.0)
        .map(|(t, m)| (*t, libm::log(*m)))
        .collect();
    let slope = ls_slope(&pts);

    let scaled: Vec<(f64, f64)> = times
        .iter()
        .zip(mean.iter().zip(&se))
        .map(|(t, (m, s))| {
            let w = libm::exp(c_star * t);
            (w * m, w * s)
        })
        .collect();
    let (y0, s0) = scaled[0];
    let exceed = scaled[1..]
        .iter()
        .filter(|(y, s)| y - y0 > 2.0 * libm::sqrt(s0 * s0 + s * s))
        .count();
    let exceed_fraction = exceed as f64 / (scaled.len() - 1).max(1) as f64;

    const WINDOW: usize = 10;
    let mut monotone = true;
    if scaled.len() > WINDOW {
        let avg = |j: usize, pick: fn(&(f64, f64)) -> f64| {
            scaled[j..j + WINDOW].iter().map(pick).sum::<f64>() / WINDOW as f64
        };
        for j in 0..scaled.len() - WINDOW {
            let (a, b) = (avg(j, |p| p.0), avg(j + 1, |p| p.0));
            let (sa, sb) = (avg(j, |p| p.1), avg(j + 1, |p| p.1));
            if b - a > 2.0 * libm::sqrt(sa * sa + sb * sb) {
                monotone = false;
            }
        }
    }

    ContractionReport {
        eps: cfg.eps,
        c_star,
        times,
        mean_rho: mean,
        se_rho: se,
        slope,
        exceed_fraction,
        monotone,
        dropped_pairs: dropped,
        kept_pairs: kept.len(),
    }
}

pub fn estimate_contraction<P: Potential + ?Sized>(
    cfg: &ContractionConfig,
    u: &P,
    params: &TheoryParams,
    f: &FTable,
    mut sink: impl FnMut(PairSample),
) -> Result<ContractionReport> {
    let paths = (0..cfg.pairs)
        .map(|p| simulate_pair(cfg, u, params, f, p, &mut sink))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_contraction(cfg, params.c_star, &paths))
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{gaussian_algebra, haar_sample};
    use crate::potential::X11Squared;
    use crate::theory::{build_f, choose_parameters};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> TheoryParams {
        choose_parameters(1.0, crate::group::so_n_diameter(3), 1.0, core::f64::consts::FRAC_1_SQRT_2, 3)
            .unwrap()
    }

    #[test]
    fn rc_boundary_values_are_exact() {
        let (g, r, e) = (1.0, 44.0, 0.01);
        assert_eq!(rc_sc_norms(1.0, g * r + 2.0 * e, g, r, e), (0.0, 1.0));
        assert_eq!(rc_sc_norms(2.0 * e, g * r / 2.0, g, r, e), (1.0, 0.0));
        assert_eq!(rc_sc_norms(e, g * r, g, r, e), (1.0, 0.0));
        assert_eq!(rc_sc_norms(0.0, 0.0, g, r, e).0, 0.0);
        assert_eq!(rc_sc_norms(1.0, g * r + e, g, r, e).0, 0.0);
        let (rc, sc) = rc_sc_norms(e / 4.0, g * r + e / 2.0, g, r, e);
        assert!((rc - 0.125).abs() < 1e-12);
        assert!((rc * rc + sc * sc - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reflection_is_an_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = gaussian_algebra(5, &mut rng);
        let q = gaussian_algebra(5, &mut rng);
        let e = q.scale(1.0 / q.norm());
        let rw = reflect(&w, &e);
        assert!((rw.norm() - w.norm()).abs() < 1e-12);
        assert!((rw.inner(&e) + w.inner(&e)).abs() < 1e-12);
    }

    #[test]
    fn identical_states_stay_identical() {
        let p = params();
        let u = X11Squared { a: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = haar_sample(3, &mut rng).unwrap();
        let s = ChainState { g, xi: gaussian_algebra(3, &mut rng), step: 0, time: 0.0 };
        let mut cs = CoupledState::new(s.clone(), s, &p, p.default_epsilon());
        for _ in 0..50 {
            cs = coupled_step(&cs, &u, &p, 0.01, p.default_epsilon(), &mut rng).unwrap();
            assert_eq!(cs.s, cs.s_hat);
            assert_eq!(cs.region, Region::SyncFar);
        }
    }

    #[test]
    fn synchronous_region_shares_noise() {
        let p = params();
        let u = X11Squared { a: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = haar_sample(3, &mut rng).unwrap();
        let far = gaussian_algebra(3, &mut rng);
        let far = far.scale(2.0 * p.gamma * p.radius / far.norm());
        let s = ChainState { g: g.clone(), xi: far, step: 0, time: 0.0 };
        let s_hat = ChainState::at_rest(g);
        let cs = CoupledState::new(s, s_hat, &p, p.default_epsilon());
        assert_eq!(cs.rc, 0.0);
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(10);
        let a = coupled_step(&cs, &u, &p, 0.01, p.default_epsilon(), &mut r1).unwrap();
        let b = coupled_step(&cs, &u, &p, 0.01, p.default_epsilon(), &mut r2).unwrap();
        // The momentum difference does not depend on the noise draw.
        let da = &a.s.xi - &a.s_hat.xi;
        let db = &b.s.xi - &b.s_hat.xi;
        assert!((&da - &db).norm() < 1e-12);
    }

    #[test]
    fn stored_vectors_match_recomputation() {
        let p = params();
        let u = X11Squared { a: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = ChainState { g: haar_sample(3, &mut rng).unwrap(), xi: gaussian_algebra(3, &mut rng), step: 0, time: 0.0 };
        let t = ChainState { g: haar_sample(3, &mut rng).unwrap(), xi: gaussian_algebra(3, &mut rng), step: 0, time: 0.0 };
        let mut cs = CoupledState::new(s, t, &p, p.default_epsilon());
        for _ in 0..20 {
            cs = coupled_step(&cs, &u, &p, 0.01, p.default_epsilon(), &mut rng).unwrap();
        }
        let (z, mu, q) = pair_vectors(&cs.s, &cs.s_hat, p.gamma).value;
        assert!((&z - &cs.z).norm() < 1e-10);
        assert!((&mu - &cs.mu).norm() < 1e-10);
        assert!((&q - &cs.q).norm() < 1e-10);
    }

    #[test]
    fn identical_ensembles_have_zero_rho() {
        let cfg = ContractionConfig { n: 3, h_sim: 0.01, t_end: 1.0, pairs: 3, grid: 10, seed: 1, eps: 0.01 };
        let paths = alloc::vec![Some(alloc::vec![0.0; 11]); 3];
        let rep = summarize_contraction(&cfg, 1e-9, &paths);
        assert!(rep.mean_rho.iter().all(|&m| m == 0.0));
        assert_eq!(rep.exceed_fraction, 0.0);
        assert!(rep.monotone);
    }

    #[test]
    fn grid_must_divide_steps() {
        let p = params();
        let f = build_f(&p, 1000).unwrap();
        let cfg = ContractionConfig { n: 3, h_sim: 0.01, t_end: 1.0, pairs: 1, grid: 7, seed: 1, eps: 0.01 };
        let u = X11Squared { a: 1.0 };
        assert!(matches!(simulate_pair(&cfg, &u, &p, &f, 0, |_| {}), Err(Error::Config(_))));
    }
}
