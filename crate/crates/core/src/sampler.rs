//! The kinetic Langevin splitting integrator.
//!
//! One step solves the momentum Ornstein-Uhlenbeck part exactly with g frozen,
//! then moves the position along the one-parameter subgroup `g·exp(hξ)`. The
//! position therefore never leaves SO(n), whatever the step size.

use alloc::format;
use alloc::vec::Vec;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::group::{
    algebra_dim, distance, group_exp, haar_sample, AlgebraElement, Flagged, GroupElement,
};
use crate::potential::{trivialized_grad, Potential, PotentialSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub g: GroupElement,
    pub xi: AlgebraElement,
    pub step: u64,
    pub time: f64,
}

impl ChainState {
    pub fn at_rest(g: GroupElement) -> Self {
        let n = g.dim();
        ChainState { g, xi: AlgebraElement::zero(n), step: 0, time: 0.0 }
    }
}

/// `√(d(g, ĝ)² + ‖ξ − ξ̂‖²)`
pub fn phase_distance(s: &ChainState, s_hat: &ChainState) -> Flagged<f64> {
    let dp = (&s.xi - &s_hat.xi).norm_sq();
    distance(&s.g, &s_hat.g).map(|d| libm::sqrt(d * d + dp))
}

/// Which momentum drives the position update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UpdateOrder {
    /// `g' = g·exp(h·ξ_new)`, the scheme the convergence analysis covers.
    #[default]
    Splitting,
    /// `g' = g·exp(h·ξ_old)`, the pre-update momentum drives the position.
    Legacy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub gamma: f64,
    pub h: f64,
    pub steps: u64,
    pub seed: u64,
    pub potential: PotentialSpec,
    pub chains: usize,
    pub record_every: u64,
    pub order: UpdateOrder,
}

impl RunConfig {
    /// The published experiment's friction and step size, one chain, every step recorded.
    pub fn new(n: usize, potential: PotentialSpec) -> Self {
        RunConfig {
            n,
            gamma: 1.0,
            h: 0.1,
            steps: 1000,
            seed: 0,
            potential,
            chains: 1,
            record_every: 1,
            order: UpdateOrder::Splitting,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidDimension(self.n));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Config(format!("h must be positive, got {}", self.h)));
        }
        if self.chains == 0 {
            return Err(Error::Config("chains must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        algebra_dim(self.n)
    }
}

/// Coefficients of the exact OU step `ξ' = decay·ξ − drift·grad + noise_sd·η`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuCoefficients {
    pub decay: f64,
    pub drift: f64,
    pub noise_sd: f64,
}

impl OuCoefficients {
    pub fn new(gamma: f64, h: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
        }
        if !(h >= 0.0) {
            return Err(Error::Config(format!("h must be nonnegative, got {h}")));
        }
        let one_minus = -libm::expm1(-gamma * h);
        Ok(OuCoefficients {
            decay: libm::exp(-gamma * h),
            drift: one_minus / gamma,
            noise_sd: libm::sqrt(-libm::expm1(-2.0 * gamma * h)),
        })
    }

    /// Noise-free coefficients; `γ = 0` is the undamped limit with drift `h`.
    pub fn noiseless(gamma: f64, h: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(Error::Config(format!("gamma must be nonnegative, got {gamma}")));
        }
        let drift = if gamma == 0.0 { h } else { -libm::expm1(-gamma * h) / gamma };
        Ok(OuCoefficients { decay: libm::exp(-gamma * h), drift, noise_sd: 0.0 })
    }
}

/// Standard normal algebra element drawn coordinate by coordinate.
pub fn standard_noise<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> AlgebraElement {
    let coords: Vec<f64> = (0..algebra_dim(n)).map(|_| StandardNormal.sample(rng)).collect();
    AlgebraElement::from_coords(n, &coords).expect("coordinate count matches dimension")
}

/// Deterministic OU update given a standard normal `eta` (unscaled).
pub fn ou_update(
    xi: &AlgebraElement,
    grad: &AlgebraElement,
    c: &OuCoefficients,
    eta: Option<&AlgebraElement>,
) -> AlgebraElement {
    let mut out = xi.scale(c.decay);
    out.axpy(-c.drift, grad);
    if let Some(eta) = eta {
        out.axpy(c.noise_sd, eta);
    }
    out
}

pub fn ou_exact_step<R: RngCore + ?Sized>(
    xi: &AlgebraElement,
    grad: &AlgebraElement,
    gamma: f64,
    h: f64,
    rng: &mut R,
) -> Result<AlgebraElement> {
    let c = OuCoefficients::new(gamma, h)?;
    let eta = standard_noise(xi.dim(), rng);
    Ok(ou_update(xi, grad, &c, Some(&eta)))
}

/// One splitting step driven by an explicit standard normal `eta` (`None` drops the noise).
pub fn advance<P: Potential + ?Sized>(
    s: &ChainState,
    u: &P,
    c: &OuCoefficients,
    h: f64,
    order: UpdateOrder,
    eta: Option<&AlgebraElement>,
) -> ChainState {
    let grad = trivialized_grad(u, &s.g);
    let xi = ou_update(&s.xi, &grad, c, eta);
    let drive = match order {
        UpdateOrder::Splitting => &xi,
        UpdateOrder::Legacy => &s.xi,
    };
    let g = s.g.compose(&group_exp(&drive.scale(h)));
    let step = s.step + 1;
    ChainState { g, xi, step, time: step as f64 * h }
}

pub fn klmc_step<P: Potential + ?Sized, R: RngCore + ?Sized>(
    s: &ChainState,
    u: &P,
    cfg: &RunConfig,
    rng: &mut R,
) -> Result<ChainState> {
    let c = OuCoefficients::new(cfg.gamma, cfg.h)?;
    let eta = standard_noise(s.g.dim(), rng);
    Ok(advance(s, u, &c, cfg.h, cfg.order, Some(&eta)))
}

/// The damped optimizer: the same splitting without noise.
pub fn optimizer_step<P: Potential + ?Sized>(
    s: &ChainState,
    u: &P,
    gamma: f64,
    h: f64,
) -> Result<ChainState> {
    let c = OuCoefficients::noiseless(gamma, h)?;
    Ok(advance(s, u, &c, h, UpdateOrder::Splitting, None))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record {
    pub chain: usize,
    pub step: u64,
    pub time: f64,
    pub x11: f64,
    pub xi_norm2: f64,
    pub energy: f64,
}

impl Record {
    pub fn of<P: Potential + ?Sized>(chain: usize, s: &ChainState, u: &P) -> Self {
        Record {
            chain,
            step: s.step,
            time: s.time,
            x11: s.g.x11(),
            xi_norm2: s.xi.norm_sq(),
            energy: u.energy(&s.g),
        }
    }
}

/// Private random stream of chain `chain` under `seed`.
pub fn chain_rng(seed: u64, chain: u64) -> ChaCha12Rng {
    let mut r = ChaCha12Rng::seed_from_u64(seed);
    r.set_stream(chain);
    r
}

/// The shared starting point of every chain: a Haar draw from a stream no chain uses.
pub fn default_initial_point(n: usize, seed: u64) -> Result<GroupElement> {
    haar_sample(n, &mut chain_rng(seed, u64::MAX))
}

/// Runs chain `chain` from `(init_g, 0)` for `cfg.steps` steps, passing every
/// `record_every`-th state (and the initial one) to `sink`. Returns the final state.
pub fn run_chain<P: Potential + ?Sized>(
    cfg: &RunConfig,
    u: &P,
    init_g: &GroupElement,
    chain: usize,
    mut sink: impl FnMut(Record),
) -> Result<ChainState> {
    cfg.validate()?;
    if init_g.dim() != cfg.n {
        return Err(Error::DimensionMismatch { expected: cfg.n, got: init_g.dim() });
    }
    let c = OuCoefficients::new(cfg.gamma, cfg.h)?;
    let mut rng = chain_rng(cfg.seed, chain as u64);
    let mut s = ChainState::at_rest(init_g.clone());
    sink(Record::of(chain, &s, u));
    for _ in 0..cfg.steps {
        let eta = standard_noise(cfg.n, &mut rng);
        s = advance(&s, u, &c, cfg.h, cfg.order, Some(&eta));
        if s.step % cfg.record_every == 0 {
            sink(Record::of(chain, &s, u));
        }
    }
    Ok(s)
}

/// Runs the noiseless optimizer from `(init_g, 0)`, recording like [`run_chain`].
pub fn run_optimizer<P: Potential + ?Sized>(
    cfg: &RunConfig,
    u: &P,
    init_g: &GroupElement,
    mut sink: impl FnMut(Record),
) -> Result<ChainState> {
    if cfg.record_every == 0 {
        return Err(Error::Config("record_every must be at least 1".into()));
    }
    let c = OuCoefficients::noiseless(cfg.gamma, cfg.h)?;
    let mut s = ChainState::at_rest(init_g.clone());
    sink(Record::of(0, &s, u));
    for _ in 0..cfg.steps {
        s = advance(&s, u, &c, cfg.h, UpdateOrder::Splitting, None);
        if s.step % cfg.record_every == 0 {
            sink(Record::of(0, &s, u));
        }
    }
    Ok(s)
}
