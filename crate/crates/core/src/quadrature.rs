//! One-dimensional quadrature and a fixed-step RK4 integrator.

use alloc::vec;
use alloc::vec::Vec;

/// Running integral of uniformly sampled values with spacing `dx`.
///
/// Even nodes use composite Simpson; odd nodes add the three-point rule for the
/// last panel, `dx/12·(5f₀ + 8f₁ − f₂)`.
pub fn cumulative_simpson(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * dx * (values[0] + values[1]);
        return out;
    }
    let mut even = 0.0;
    let mut i = 2;
    while i < n {
        even += dx / 3.0 * (values[i - 2] + 4.0 * values[i - 1] + values[i]);
        out[i] = even;
        i += 2;
    }
    for i in (1..n).step_by(2) {
        out[i] = if i + 1 < n {
            out[i - 1] + dx / 12.0 * (5.0 * values[i - 1] + 8.0 * values[i] - values[i + 1])
        } else {
            out[i - 1] + dx / 12.0 * (-values[i - 2] + 8.0 * values[i - 1] + 5.0 * values[i])
        };
    }
    out
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Classical RK4 for a two-component system from `t = 0` to `t_end` in `steps` steps.
pub fn rk4_pair(
    rhs: impl Fn(f64, [f64; 2]) -> [f64; 2],
    y0: [f64; 2],
    t_end: f64,
    steps: usize,
) -> [f64; 2] {
    let steps = steps.max(1);
    let dt = t_end / steps as f64;
    let mut y = y0;
    let add = |y: [f64; 2], k: [f64; 2], s: f64| [y[0] + s * k[0], y[1] + s * k[1]];
    for i in 0..steps {
        let t = i as f64 * dt;
        let k1 = rhs(t, y);
        let k2 = rhs(t + 0.5 * dt, add(y, k1, 0.5 * dt));
        let k3 = rhs(t + 0.5 * dt, add(y, k2, 0.5 * dt));
        let k4 = rhs(t + dt, add(y, k3, dt));
        for c in 0..2 {
            y[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_simpson_is_exact_on_quadratics() {
        let dx = 0.1;
        let vals: Vec<f64> = (0..11).map(|i| libm::pow(i as f64 * dx, 2.0)).collect();
        let c = cumulative_simpson(&vals, dx);
        for (i, v) in c.iter().enumerate() {
            let x = i as f64 * dx;
            assert!((v - x * x * x / 3.0).abs() < 1e-14, "node {i}");
        }
    }

    #[test]
    fn adaptive_simpson_handles_sqrt_endpoint() {
        let v = adaptive_simpson(&|x: f64| libm::sqrt(1.0 - x * x), -1.0, 1.0, 1e-12);
        assert!((v - core::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn rk4_solves_exponential() {
        let y = rk4_pair(|_, y| [y[0], -2.0 * y[1]], [1.0, 1.0], 1.0, 100);
        assert!((y[0] - core::f64::consts::E).abs() < 1e-9);
        assert!((y[1] - libm::exp(-2.0)).abs() < 1e-9);
    }
}
