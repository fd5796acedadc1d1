//! Closed-form constants of the contraction and discretization analysis.
//!
//! Everything here is a pure function of `(L, D, γ, C, m)` plus, for the
//! concave profile `f`, a tabulated quadrature.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::coupling::rc_sc_norms;
use crate::error::{Error, Result};
use crate::group::{group_log, AlgebraElement, Flagged};
use crate::quadrature::{cumulative_simpson, rk4_pair};
use crate::sampler::ChainState;

pub const DEFAULT_GRID_POINTS: usize = 10_000;
const MAX_GRID_POINTS: usize = 4_000_000;
/// Internal RK4 steps per unit `h` in the local-error ODE.
pub const LOCAL_ODE_STEPS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct TheoryParams {
    pub lipschitz: f64,
    pub diameter: f64,
    pub gamma: f64,
    /// Operator norm of `ad` on the algebra.
    pub ad_norm: f64,
    pub m: usize,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub radius: f64,
    pub c_star: f64,
    /// `ln c*`, finite even when `c*` underflows.
    pub ln_c_star: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    /// `moments[k−1] = C_k` for `k = 1..=4`.
    pub moments: Vec<f64>,
}

impl TheoryParams {
    /// `Λ = L R²/8`, the exponent that drives `c*` towards zero.
    pub fn lambda(&self) -> f64 {
        self.lipschitz * self.radius * self.radius / 8.0
    }

    /// Sectional curvature bound `C²/4`.
    pub fn curvature_bound(&self) -> f64 {
        self.ad_norm * self.ad_norm / 4.0
    }

    pub fn moment(&self, k: usize) -> f64 {
        self.moments[k - 1]
    }

    /// Default coupling band width `10⁻³·γR`.
    pub fn default_epsilon(&self) -> f64 {
        1e-3 * self.gamma * self.radius
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

pub fn choose_parameters(l: f64, d: f64, gamma: f64, c: f64, m: usize) -> Result<TheoryParams> {
    positive("L", l)?;
    positive("D", d)?;
    positive("gamma", gamma)?;
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::Config(format!("C must be nonnegative and finite, got {c}")));
    }
    if m == 0 {
        return Err(Error::Config(String::from("m must be positive")));
    }
    let radius = 10.0 * l * d / (gamma * gamma);
    let theta = 0.08 * gamma.powi(4) / (l.powi(3) * d * d);
    let alpha = (1.0 + theta) * l / (gamma * gamma);
    let big_lambda = l * radius * radius / 8.0;
    let ln = libm::log;
    let ln_2pi = ln(2.0 * PI);

    let t1 = ln(gamma / 4.0);
    let t2 = ln(31.0 / 40.0 * (1.0 + theta) * l / gamma);
    let t3 = 1.5 * ln(l) + ln(radius) - ln(5.0 * gamma) - 0.5 * ln_2pi - big_lambda;
    let inner = (-2.5f64).min(0.5 * ln(l) + ln(radius) - 0.5 * ln_2pi - big_lambda);
    let t4 = ln(theta * gamma / (5.0 * (1.0 + theta))) + inner;
    let ln_c_star = t1.min(t2).min(t3).min(t4);
    let c_star = libm::exp(ln_c_star).min(gamma / 4.0);

    let beta = c_star * gamma / (155.0 * l * l * d * d);
    let a0 = c_star + beta * (6.0 * gamma.powi(3) * radius * radius + 2.0 * gamma * l * radius * d);
    let a1 = alpha * gamma + 16.0 * beta * gamma * 1f64.max(1.0 / alpha);
    let a2 = 4.0 / gamma;
    Ok(TheoryParams {
        lipschitz: l,
        diameter: d,
        gamma,
        ad_norm: c,
        m,
        theta,
        alpha,
        beta,
        radius,
        c_star,
        ln_c_star,
        a0,
        a1,
        a2,
        moments: moment_bounds(l, d, gamma, m, 4),
    })
}

/// Tabulated concave profile `f(r) = ∫₀^{min(r,R)} φψ` on a uniform grid.
#[derive(Clone, Debug)]
pub struct FTable {
    radius: f64,
    dr: f64,
    k: f64,
    a0_over_a2: f64,
    f_vals: Vec<f64>,
    psi_vals: Vec<f64>,
    fprime_vals: Vec<f64>,
    fsecond_vals: Vec<f64>,
}

impl FTable {
    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.f_vals.len()).map(|i| i as f64 * self.dr)
    }

    pub fn f_vals(&self) -> &[f64] {
        &self.f_vals
    }

    pub fn fprime_vals(&self) -> &[f64] {
        &self.fprime_vals
    }

    pub fn fsecond_vals(&self) -> &[f64] {
        &self.fsecond_vals
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn f_r(&self) -> f64 {
        *self.f_vals.last().unwrap()
    }

    pub fn min_psi(&self) -> f64 {
        self.psi_vals.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn interp(&self, vals: &[f64], r: f64) -> f64 {
        if r <= 0.0 {
            return vals[0];
        }
        let last = vals.len() - 1;
        let x = r / self.dr;
        let i = x as usize;
        if i >= last {
            return vals[last];
        }
        let t = x - i as f64;
        vals[i] + t * (vals[i + 1] - vals[i])
    }

    pub fn phi(&self, s: f64) -> f64 {
        libm::exp(-self.k * s * s)
    }

    /// `Φ(s) = ∫₀ˢ φ`
    pub fn big_phi(&self, s: f64) -> f64 {
        if self.k == 0.0 {
            return s;
        }
        let rk = libm::sqrt(self.k);
        libm::sqrt(PI) / (2.0 * rk) * libm::erf(rk * s)
    }

    pub fn psi(&self, r: f64) -> f64 {
        self.interp(&self.psi_vals, r.min(self.radius))
    }

    pub fn f(&self, r: f64) -> f64 {
        if r >= self.radius {
            self.f_r()
        } else {
            self.interp(&self.f_vals, r)
        }
    }

    /// Left derivative; zero past `R`, `φ(R)ψ(R)` at `R` itself.
    pub fn fprime_left(&self, r: f64) -> f64 {
        if r > self.radius {
            0.0
        } else {
            self.phi(r) * self.psi(r)
        }
    }

    /// `f'' = φ'ψ + φψ' = −2krφψ − (A₀/A₂)Φ`, zero past `R`.
    pub fn fsecond(&self, r: f64) -> f64 {
        if r > self.radius {
            0.0
        } else {
            -2.0 * self.k * r * self.phi(r) * self.psi(r) - self.a0_over_a2 * self.big_phi(r)
        }
    }
}

pub fn build_f(params: &TheoryParams, grid_points: usize) -> Result<FTable> {
    if grid_points < 100 {
        return Err(Error::Config(format!("grid_points must be at least 100, got {grid_points}")));
    }
    let radius = params.radius;
    let k = params.a1 / (2.0 * params.a2);
    let a0_over_a2 = params.a0 / params.a2;
    // Resolve the Gaussian φ with at least 40 nodes per length 1/√k.
    let wanted = libm::ceil(radius * libm::sqrt(k) * 40.0) as usize;
    let mut intervals = grid_points.max(wanted).min(MAX_GRID_POINTS);
    intervals += intervals % 2;
    let dr = radius / intervals as f64;
    let mut table = FTable {
        radius,
        dr,
        k,
        a0_over_a2,
        f_vals: Vec::new(),
        psi_vals: Vec::new(),
        fprime_vals: Vec::new(),
        fsecond_vals: Vec::new(),
    };

    let nodes = intervals + 1;
    let ln_ratio = libm::log(a0_over_a2);
    // Φ/φ evaluated in log space: e^{ks²} overflows long before the product does.
    let q: Vec<f64> = (0..nodes)
        .map(|i| {
            let s = i as f64 * dr;
            let bp = table.big_phi(s);
            if bp <= 0.0 || a0_over_a2 <= 0.0 {
                0.0
            } else {
                libm::exp(ln_ratio + libm::log(bp) + k * s * s)
            }
        })
        .collect();
    let psi: Vec<f64> = cumulative_simpson(&q, dr).into_iter().map(|v| 1.0 - v).collect();
    let min_psi = psi.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_psi >= 0.5) {
        return Err(Error::ParameterInconsistency(format!(
            "psi drops to {min_psi} on [0, R]; the construction needs psi >= 1/2"
        )));
    }
    let fp: Vec<f64> = (0..nodes).map(|i| table.phi(i as f64 * dr) * psi[i]).collect();
    table.f_vals = cumulative_simpson(&fp, dr);
    table.psi_vals = psi;
    table.fsecond_vals = (0..nodes).map(|i| table.fsecond(i as f64 * dr)).collect();
    table.fprime_vals = fp;
    Ok(table)
}

/// Pieces of `ρ = f(r)·G` for a pair of states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairGeometry {
    pub z_norm: f64,
    pub mu_norm: f64,
    pub q_norm: f64,
    pub r: f64,
    pub g_factor: f64,
}

/// `Z = log ĝ⁻¹g`, `μ = ξ − ξ̂`, `Q = Z + μ/γ`.
pub fn pair_vectors(
    s: &ChainState,
    s_hat: &ChainState,
    gamma: f64,
) -> Flagged<(AlgebraElement, AlgebraElement, AlgebraElement)> {
    let z = group_log(&s_hat.g.left_quotient(&s.g));
    let near = z.near_cut_locus;
    let z = z.value;
    let mu = &s.xi - &s_hat.xi;
    let mut q = z.clone();
    q.axpy(1.0 / gamma, &mu);
    Flagged { value: (z, mu, q), near_cut_locus: near }
}

pub fn pair_geometry(s: &ChainState, s_hat: &ChainState, params: &TheoryParams) -> Flagged<PairGeometry> {
    pair_vectors(s, s_hat, params.gamma).map(|(z, mu, q)| geometry_from_norms(z.norm(), mu.norm(), q.norm(), params))
}

pub fn geometry_from_norms(z_norm: f64, mu_norm: f64, q_norm: f64, params: &TheoryParams) -> PairGeometry {
    PairGeometry {
        z_norm,
        mu_norm,
        q_norm,
        r: params.alpha * z_norm + q_norm,
        g_factor: 1.0 + params.beta * mu_norm * mu_norm,
    }
}

/// `ρ = f(r)·(1 + β‖ξ − ξ̂‖²)`
pub fn semi_distance(s: &ChainState, s_hat: &ChainState, params: &TheoryParams, f: &FTable) -> Flagged<f64> {
    pair_geometry(s, s_hat, params).map(|p| f.f(p.r) * p.g_factor)
}

/// Constant with `C_ρ·d² ≤ ρ`, `d` the phase-space distance.
pub fn c_rho(params: &TheoryParams, f: &FTable) -> f64 {
    let (a, g, d) = (params.alpha, params.gamma, params.diameter);
    let first = params.beta / 2.0 * f.f(2.0 * a.min(1.0) * d / g);
    let span = (a + 1.0 + 1.0 / g) * d;
    let second = f.f((a + 1.0 + 2.0 / g) * d) / (span * span)
        * (a * a / 4.0).min(1.0 / (g * g)).min(a * a / (4.0 * g * g));
    first.min(second)
}

/// Drift of `ρ` along the coupled dynamics, with the cut-locus indicator set to 0.
pub fn eval_k(s: &ChainState, s_hat: &ChainState, params: &TheoryParams, f: &FTable, eps: f64) -> Flagged<f64> {
    pair_geometry(s, s_hat, params).map(|p| k_from_geometry(&p, params, f, eps))
}

pub fn k_from_geometry(p: &PairGeometry, params: &TheoryParams, f: &FTable, eps: f64) -> f64 {
    let (g, l, b) = (params.gamma, params.lipschitz, params.beta);
    let (rc, _) = rc_sc_norms(p.q_norm, p.mu_norm, g, params.radius, eps);
    let rc2 = rc * rc;
    let fr = f.f(p.r);
    let fpl = f.fprime_left(p.r);
    let fpp = f.fsecond(p.r);
    let mu2 = p.mu_norm * p.mu_norm;
    (params.c_star * fr
        + (params.alpha * g * p.q_norm - params.theta * l / g * p.z_norm) * fpl
        + 4.0 / g * rc2 * fpp)
        * p.g_factor
        + b * fr * (-2.0 * g * mu2 + 2.0 * l * p.mu_norm * p.z_norm + 8.0 * g * rc2 * mu2)
        + 16.0 * b * p.mu_norm * rc2 * fpl
}

/// `C₁ = LD/γ`, `C₂ = (2LDC₁ + m)/(2γ)`, `C_k = LD·C_{k−1}/γ + (k−1)C_{k−2}`.
/// Returns at least `C₁, C₂`; entry `k−1` holds `C_k`.
pub fn moment_bounds(l: f64, d: f64, gamma: f64, m: usize, k_max: usize) -> Vec<f64> {
    let ld = l * d;
    let mut c = vec![ld / gamma];
    c.push((2.0 * ld * c[0] + m as f64) / (2.0 * gamma));
    for k in 3..=k_max {
        let next = ld * c[k - 2] / gamma + (k - 1) as f64 * c[k - 3];
        c.push(next);
    }
    c
}

/// Inputs of the local-error ODE.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalErrorInputs {
    pub lipschitz: f64,
    pub gamma: f64,
    pub ad_norm: f64,
    pub c2: f64,
    pub diameter: f64,
    pub m: usize,
}

impl From<&TheoryParams> for LocalErrorInputs {
    fn from(p: &TheoryParams) -> Self {
        LocalErrorInputs {
            lipschitz: p.lipschitz,
            gamma: p.gamma,
            ad_norm: p.ad_norm,
            c2: p.moment(2),
            diameter: p.diameter,
            m: p.m,
        }
    }
}

/// `(x(h), y(h))` for `ẋ = Lx + C₂Lt²`,
/// `ẏ = (1+γCm³t²)y + 4x + (4γ²C₂+4LD+γCm³)t² + 4γ²C²m²t⁴`, from zero.
pub fn local_error_ode(h: f64, inp: &LocalErrorInputs) -> (f64, f64) {
    local_error_ode_steps(h, inp, LOCAL_ODE_STEPS)
}

pub fn local_error_ode_steps(h: f64, inp: &LocalErrorInputs, steps: usize) -> (f64, f64) {
    if h <= 0.0 {
        return (0.0, 0.0);
    }
    let &LocalErrorInputs { lipschitz: l, gamma: g, ad_norm: c, c2, diameter: d, m } = inp;
    let m = m as f64;
    let gcm3 = g * c * m * m * m;
    let rhs = |t: f64, v: [f64; 2]| {
        let t2 = t * t;
        [
            l * v[0] + c2 * l * t2,
            (1.0 + gcm3 * t2) * v[1]
                + 4.0 * v[0]
                + (4.0 * g * g * c2 + 4.0 * l * d + gcm3) * t2
                + 4.0 * g * g * c * c * m * m * t2 * t2,
        ]
    };
    let [x, y] = rk4_pair(rhs, [0.0, 0.0], h, steps);
    (x, y)
}

/// Constants of the modified triangle inequality
/// `ρ(â, c̃) ≤ (1 + A₁d(a, c̃))ρ(â, a) + A₂d(a, c̃)²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleConstants {
    pub a1: f64,
    pub a2: f64,
}

pub fn triangle_constants(params: &TheoryParams, f: &FTable) -> TriangleConstants {
    let fr = f.f_r();
    TriangleConstants {
        a1: 1.0 + (1.0 + params.alpha + 1.0 / params.gamma) / fr,
        a2: 2.0 * params.beta * fr,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bias {
    pub x: f64,
    pub y: f64,
    pub e_h: f64,
    /// `E(h)/(1 − e^{−c*h})`; infinite when `c*` underflows.
    pub bias: f64,
}

pub fn discretization_bias(h: f64, params: &TheoryParams, f: &FTable) -> Result<Bias> {
    positive("h", h)?;
    let tri = triangle_constants(params, f);
    let (x, y) = local_error_ode(h, &params.into());
    let fr = f.f_r();
    let h32 = h * libm::sqrt(h);
    let e_h = (tri.a1 / (2.0 * h32) + tri.a2) * (x + y)
        + tri.a1 / 2.0 * fr * fr * (1.0 + 8.0 * params.moment(2) + 16.0 * params.moment(4)) * h32;
    let denom = -libm::expm1(-params.c_star * h);
    let bias = if denom > 0.0 { e_h / denom } else { f64::INFINITY };
    Ok(Bias { x, y, e_h, bias })
}

/// `C_ρ(e^{−c*kh}·W_ρ0 + E(h)/(1 − e^{−c*h}))`
pub fn global_w2_bound(k: u64, h: f64, w_rho0: f64, params: &TheoryParams, f: &FTable) -> Result<f64> {
    let b = discretization_bias(h, params, f)?;
    let decay = libm::exp(-params.c_star * k as f64 * h);
    let transient = if w_rho0 == 0.0 { 0.0 } else { decay * w_rho0 };
    Ok(c_rho(params, f) * (transient + b.bias))
}

/// `key=value` pairs for the theory report, in a fixed order.
pub fn theory_report(params: &TheoryParams, f: &FTable, h: f64) -> Result<Vec<(&'static str, f64)>> {
    let tri = triangle_constants(params, f);
    let b = discretization_bias(h, params, f)?;
    let mut out = vec![
        ("L", params.lipschitz),
        ("D", params.diameter),
        ("gamma", params.gamma),
        ("C", params.ad_norm),
        ("m", params.m as f64),
        ("h", h),
        ("theta", params.theta),
        ("alpha", params.alpha),
        ("beta", params.beta),
        ("R", params.radius),
        ("c_star", params.c_star),
        ("log_c_star", params.ln_c_star),
        ("Lambda", params.lambda()),
        ("curvature_bound", params.curvature_bound()),
        ("A0_f", params.a0),
        ("A1_f", params.a1),
        ("A2_f", params.a2),
        ("f_R", f.f_r()),
        ("psi_min", f.min_psi()),
        ("C_rho", c_rho(params, f)),
        ("A1", tri.a1),
        ("A2", tri.a2),
        ("x_h", b.x),
        ("y_h", b.y),
        ("E_h", b.e_h),
        ("bias", b.bias),
    ];
    const NAMES: [&str; 4] = ["C1", "C2", "C3", "C4"];
    for (i, name) in NAMES.iter().enumerate() {
        out.push((name, params.moments[i]));
    }
    Ok(out)
}
