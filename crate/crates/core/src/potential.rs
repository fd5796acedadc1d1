//! Potentials on SO(n) and their smoothness constants.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::group::{
    distance, gaussian_algebra, group_exp, haar_sample, so_n_diameter, AlgebraElement, GroupElement,
};
use crate::linalg::Mat;

pub trait Potential: Send + Sync {
    fn energy(&self, x: &GroupElement) -> f64;

    /// Gradient of the energy in the ambient space of n×n matrices.
    fn euclid_grad(&self, x: &GroupElement) -> Mat;

    /// `inf U` over the group, when known. Rejection sampling needs it.
    fn energy_lower_bound(&self, _n: usize) -> Option<f64> {
        None
    }

    /// Energy computed from the first column alone, for potentials that only
    /// depend on it. Lets the rejection sampler skip the full QR on rejects.
    fn first_column_energy(&self, _col: &[f64]) -> Option<f64> {
        None
    }

    /// Coefficient `a` when the potential is `−a·X₁₁²`, which has a 1-D marginal oracle.
    fn x11_quadratic(&self) -> Option<f64> {
        None
    }
}

/// `U(X) = −a·X₁₁²`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct X11Squared {
    pub a: f64,
}

impl Potential for X11Squared {
    fn energy(&self, x: &GroupElement) -> f64 {
        let v = x.x11();
        -self.a * v * v
    }

    fn euclid_grad(&self, x: &GroupElement) -> Mat {
        let mut g = Mat::zeros(x.dim());
        g[(0, 0)] = -2.0 * self.a * x.x11();
        g
    }

    fn energy_lower_bound(&self, _n: usize) -> Option<f64> {
        Some(-self.a.max(0.0))
    }

    fn first_column_energy(&self, col: &[f64]) -> Option<f64> {
        col.first().map(|v| -self.a * v * v)
    }

    fn x11_quadratic(&self) -> Option<f64> {
        Some(self.a)
    }
}

pub fn builtin_x11sq(n: usize, a: f64) -> Result<X11Squared> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    Ok(X11Squared { a })
}

/// Parsed form of a CLI selector such as `x11sq:a=10`.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    X11Squared { a: f64 },
}

impl PotentialSpec {
    pub fn build(&self) -> Box<dyn Potential> {
        match *self {
            PotentialSpec::X11Squared { a } => Box::new(X11Squared { a }),
        }
    }
}

impl FromStr for PotentialSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Config(format!("potential selector {s:?}: {why}"));
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        match name.trim() {
            "x11sq" => {
                let mut a = None;
                for kv in args.split(',').filter(|t| !t.trim().is_empty()) {
                    let (k, v) = kv.split_once('=').ok_or_else(|| bad("expected key=value"))?;
                    match k.trim() {
                        "a" => {
                            let val: f64 = v.trim().parse().map_err(|_| bad("a is not a number"))?;
                            if !val.is_finite() {
                                return Err(bad("a must be finite"));
                            }
                            a = Some(val);
                        }
                        other => return Err(bad(&format!("unknown parameter {other:?}"))),
                    }
                }
                Ok(PotentialSpec::X11Squared { a: a.ok_or_else(|| bad("missing a=<real>"))? })
            }
            other => Err(bad(&format!("unknown potential {other:?}"))),
        }
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::X11Squared { a } => write!(f, "x11sq:a={a}"),
        }
    }
}

/// Riemannian gradient under `⟨A, B⟩ = trace(AᵀB)`, pulled back to the algebra:
/// `(Xᵀ∇U − (∇U)ᵀX)/2`.
///
/// Without the ½ this is the gradient for the metric `½·trace(AᵀB)`, and the
/// sampler would target `e^{−2U}` instead of `e^{−U}`.
pub fn trivialized_grad<P: Potential + ?Sized>(u: &P, x: &GroupElement) -> AlgebraElement {
    let m = x.mat().t_matmul(&u.euclid_grad(x));
    AlgebraElement::from_mat_unchecked(m.skew_part())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothnessEstimate {
    pub lipschitz: f64,
    pub diameter: f64,
    pub grad_sup: f64,
}

const LOCAL_PAIR_DISTANCE: f64 = 1e-3;

/// Lipschitz constant of the trivialized gradient from sampled quotients.
///
/// Each of the `pairs` rounds draws one independent Haar pair and one pair at
/// geodesic distance 1e-3, so the estimate only grows with `pairs` for a fixed stream.
pub fn estimate_smoothness<P: Potential + ?Sized, R: RngCore + ?Sized>(
    u: &P,
    n: usize,
    pairs: usize,
    rng: &mut R,
) -> Result<SmoothnessEstimate> {
    if pairs == 0 {
        return Err(Error::Config(String::from("estimate_smoothness needs pairs >= 1")));
    }
    let mut lip = 0.0f64;
    let mut sup = 0.0f64;
    let quotient = |a: &GroupElement, b: &GroupElement, lip: &mut f64, sup: &mut f64| {
        let ga = trivialized_grad(u, a);
        let gb = trivialized_grad(u, b);
        *sup = sup.max(ga.norm()).max(gb.norm());
        let d = distance(a, b);
        if !d.near_cut_locus && d.value > 0.0 {
            *lip = lip.max((&ga - &gb).norm() / d.value);
        }
    };
    for _ in 0..pairs {
        let a = haar_sample(n, rng)?;
        let b = haar_sample(n, rng)?;
        quotient(&a, &b, &mut lip, &mut sup);
        let dir = gaussian_algebra(n, rng);
        let step = dir.scale(LOCAL_PAIR_DISTANCE / dir.norm());
        let c = a.compose(&group_exp(&step));
        quotient(&a, &c, &mut lip, &mut sup);
    }
    Ok(SmoothnessEstimate { lipschitz: lip, diameter: so_n_diameter(n), grad_sup: sup })
}
