//! SO(n) and its Lie algebra so(n).
//!
//! The algebra carries the inner product `⟨A, B⟩ = trace(AᵀB)` and the orthonormal
//! basis `(E_ij − E_ji)/√2`, `i < j`, in lexicographic order. Coordinates always
//! refer to that basis.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};
use core::ops::{Add, Sub};

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{householder_qr, symmetric_eigen, Mat};

/// Tolerance for the orthogonality, determinant and skew-symmetry invariants.
pub const ORTHO_TOL: f64 = 1e-10;
/// A rotation angle this close to π puts the logarithm on the cut locus.
pub const CUT_LOCUS_TOL: f64 = 1e-9;
pub const DEFAULT_SERIES_TERMS: usize = 20;

const REPROJECT_TOL: f64 = 1e-12;
const AD_NORM_SEED: u64 = 0x00ad_5eed;

/// `m = n(n−1)/2`
pub fn algebra_dim(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InvalidDimension(n))
    } else {
        Ok(())
    }
}

/// A value together with a near-cut-locus warning.
#[derive(Clone, Debug, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub near_cut_locus: bool,
}

impl<T> Flagged<T> {
    pub fn clean(value: T) -> Self {
        Flagged { value, near_cut_locus: false }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Flagged<U> {
        Flagged { value: f(self.value), near_cut_locus: self.near_cut_locus }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    mat: Mat,
}

impl GroupElement {
    pub fn new(mat: Mat) -> Result<Self> {
        check_dim(mat.dim())?;
        let defect = mat.orthogonality_defect();
        if defect > ORTHO_TOL {
            return Err(Error::InvariantViolation { what: "orthogonality", defect });
        }
        let det = mat.determinant();
        if (det - 1.0).abs() > ORTHO_TOL {
            return Err(Error::InvariantViolation { what: "determinant", defect: (det - 1.0).abs() });
        }
        Ok(GroupElement { mat })
    }

    pub fn identity(n: usize) -> Self {
        GroupElement { mat: Mat::identity(n) }
    }

    #[cfg(test)]
    pub(crate) fn from_mat_unchecked(mat: Mat) -> Self {
        GroupElement { mat }
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn inverse(&self) -> Self {
        GroupElement { mat: self.mat.transpose() }
    }

    pub fn compose(&self, rhs: &GroupElement) -> Self {
        GroupElement { mat: self.mat.matmul(&rhs.mat) }
    }

    /// `self⁻¹ · rhs`
    pub fn left_quotient(&self, rhs: &GroupElement) -> Self {
        GroupElement { mat: self.mat.t_matmul(&rhs.mat) }
    }

    pub fn x11(&self) -> f64 {
        self.mat[(0, 0)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    mat: Mat,
}

impl AlgebraElement {
    pub fn new(mat: Mat) -> Result<Self> {
        check_dim(mat.dim())?;
        let defect = mat.skew_defect();
        if defect > ORTHO_TOL {
            return Err(Error::InvariantViolation { what: "skew-symmetry", defect });
        }
        Ok(AlgebraElement { mat })
    }

    pub fn zero(n: usize) -> Self {
        AlgebraElement { mat: Mat::zeros(n) }
    }

    pub fn from_coords(n: usize, coords: &[f64]) -> Result<Self> {
        check_dim(n)?;
        let m = algebra_dim(n);
        if coords.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: coords.len() });
        }
        let mut mat = Mat::zeros(n);
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                let v = coords[k] * FRAC_1_SQRT_2;
                mat[(i, j)] = v;
                mat[(j, i)] = -v;
                k += 1;
            }
        }
        Ok(AlgebraElement { mat })
    }

    pub(crate) fn from_mat_unchecked(mat: Mat) -> Self {
        AlgebraElement { mat }
    }

    pub fn coords(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(algebra_dim(n));
        for i in 0..n {
            for j in i + 1..n {
                out.push((self.mat[(i, j)] - self.mat[(j, i)]) * FRAC_1_SQRT_2);
            }
        }
        out
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn inner(&self, other: &AlgebraElement) -> f64 {
        self.mat.frob_inner(&other.mat)
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn norm(&self) -> f64 {
        self.mat.frobenius_norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        AlgebraElement { mat: self.mat.scale(s) }
    }

    /// `self += s · other`
    pub fn axpy(&mut self, s: f64, other: &AlgebraElement) {
        self.mat.axpy(s, &other.mat);
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        AlgebraElement { mat: &self.mat + &rhs.mat }
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        AlgebraElement { mat: &self.mat - &rhs.mat }
    }
}

#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    pub n: usize,
    pub elems: Vec<AlgebraElement>,
}

impl OrthonormalBasis {
    pub fn m(&self) -> usize {
        self.elems.len()
    }

    pub fn gram(&self) -> Mat {
        Mat::from_fn(self.m(), |i, j| self.elems[i].inner(&self.elems[j]))
    }
}

pub fn skew_basis(n: usize) -> Result<OrthonormalBasis> {
    check_dim(n)?;
    let m = algebra_dim(n);
    let mut elems = Vec::with_capacity(m);
    let mut coords = vec![0.0; m];
    for k in 0..m {
        coords[k] = 1.0;
        elems.push(AlgebraElement::from_coords(n, &coords)?);
        coords[k] = 0.0;
    }
    Ok(OrthonormalBasis { n, elems })
}

/// Matrix exponential by scaling and squaring around a Taylor core.
fn expm(a: &Mat) -> Mat {
    let n = a.dim();
    let norm = a.frobenius_norm();
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a.scale(scale);
    let mut sum = Mat::identity(n);
    let mut term = Mat::identity(n);
    let mut next = Mat::zeros(n);
    for k in 1..=30 {
        term.matmul_into(&x, &mut next);
        core::mem::swap(&mut term, &mut next);
        term.scale_mut(1.0 / k as f64);
        sum += &term;
        if term.max_abs() <= 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum.matmul_into(&sum.clone(), &mut next);
        core::mem::swap(&mut sum, &mut next);
    }
    sum
}

/// One Newton-Schulz polar step `X(3I − XᵀX)/2`.
fn polar_step(x: &Mat) -> Mat {
    let n = x.dim();
    let mut p = x.t_matmul(x).scale(-1.0);
    for i in 0..n {
        p[(i, i)] += 3.0;
    }
    x.matmul(&p).scale(0.5)
}

pub fn group_exp(xi: &AlgebraElement) -> GroupElement {
    let mut e = expm(&xi.mat);
    let mut guard = 0;
    while e.orthogonality_defect() > REPROJECT_TOL && guard < 4 {
        e = polar_step(&e);
        guard += 1;
    }
    GroupElement { mat: e }
}

/// Principal logarithm plus the rotation angle attached to each eigenvector
/// of the symmetric part (every plane appears twice).
#[derive(Clone, Debug)]
pub struct LogParts {
    pub xi: AlgebraElement,
    pub angles: Vec<f64>,
    pub near_cut_locus: bool,
}

/// Logarithm through the commuting split `g = S + K`, `S` symmetric, `K` skew.
/// On an invariant plane with angle θ, `S = cos θ` and `K v = sin θ · Jv`, so
/// `log g · v = θ/sin θ · K v` for every eigenvector `v` of `S`.
pub fn log_parts(g: &GroupElement) -> LogParts {
    let n = g.dim();
    let a = &g.mat;
    let at = a.transpose();
    let s = (a + &at).scale(0.5);
    let k = (a - &at).scale(0.5);
    let (lambda, v) = symmetric_eigen(&s);

    let sin_floor = libm::sin(CUT_LOCUS_TOL);
    let mut out = Mat::zeros(n);
    let mut angles = Vec::with_capacity(n);
    let mut antipodal: Vec<Vec<f64>> = Vec::new();
    let mut near = false;
    for (i, &lam) in lambda.iter().enumerate() {
        let vi = v.column(i);
        let w = k.mul_vec(&vi);
        let sn = libm::sqrt(w.iter().map(|x| x * x).sum());
        let theta = libm::atan2(sn, lam);
        angles.push(theta);
        if PI - theta <= CUT_LOCUS_TOL {
            near = true;
        }
        if lam < 0.0 && sn < sin_floor {
            // K carries no usable direction at θ ≈ π; a rotation plane is chosen below.
            antipodal.push(vi);
            continue;
        }
        let coef = if sn > 0.0 { theta / sn } else { 1.0 };
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] += coef * w[r] * vi[c];
            }
        }
    }
    for pair in antipodal.chunks_exact(2) {
        let (p, q) = (&pair[0], &pair[1]);
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] += PI * (q[r] * p[c] - p[r] * q[c]);
            }
        }
    }
    LogParts { xi: AlgebraElement { mat: out.skew_part() }, angles, near_cut_locus: near }
}

pub fn group_log(g: &GroupElement) -> Flagged<AlgebraElement> {
    let parts = log_parts(g);
    Flagged { value: parts.xi, near_cut_locus: parts.near_cut_locus }
}

/// Geodesic distance `‖log(ĝ⁻¹g)‖_F`.
pub fn distance(g: &GroupElement, g_hat: &GroupElement) -> Flagged<f64> {
    group_log(&g_hat.left_quotient(g)).map(|z| z.norm())
}

/// Diameter of SO(n) under the trace metric: `⌊n/2⌋` planes rotated by π.
pub fn so_n_diameter(n: usize) -> f64 {
    PI * libm::sqrt(2.0 * (n / 2) as f64)
}

/// `XY − YX`
pub fn ad(x: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
    let xy = x.mat.matmul(&y.mat);
    let yx = y.mat.matmul(&x.mat);
    AlgebraElement { mat: &xy - &yx }
}

/// Matrix of `ad_X` in basis coordinates (column k = coords of `[X, e_k]`).
pub fn ad_matrix(x: &AlgebraElement, basis: &OrthonormalBasis) -> Mat {
    let m = basis.m();
    let mut out = Mat::zeros(m);
    for (k, e) in basis.elems.iter().enumerate() {
        for (r, c) in ad(x, e).coords().into_iter().enumerate() {
            out[(r, k)] = c;
        }
    }
    out
}

fn top_singular_vector(a: &Mat) -> (f64, Vec<f64>) {
    let ata = a.t_matmul(a);
    let (vals, vecs) = symmetric_eigen(&ata);
    let (idx, top) = vals
        .iter()
        .copied()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap_or((0, 0.0));
    (libm::sqrt(top.max(0.0)), vecs.column(idx))
}

/// Estimate of `C = max_{‖X‖=1} ‖ad_X‖_op` by alternating maximization of
/// `‖[X, Y]‖` over unit X and Y from `samples` seeded starts.
///
/// The starts come from a fixed internal stream, so raising `samples` only adds
/// starts and the estimate never decreases.
pub fn ad_operator_norm(n: usize, samples: usize) -> Result<f64> {
    check_dim(n)?;
    let basis = skew_basis(n)?;
    let m = basis.m();
    let mut rng = ChaCha8Rng::seed_from_u64(AD_NORM_SEED);
    let mut best = 0.0f64;
    for _ in 0..samples.max(1) {
        let mut c: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        let nrm = libm::sqrt(c.iter().map(|x| x * x).sum());
        c.iter_mut().for_each(|x| *x /= nrm);
        let mut x = AlgebraElement::from_coords(n, &c)?;
        let mut value = 0.0;
        for _ in 0..200 {
            let (_, ycoords) = top_singular_vector(&ad_matrix(&x, &basis));
            let y = AlgebraElement::from_coords(n, &ycoords)?;
            let (sigma, xcoords) = top_singular_vector(&ad_matrix(&y, &basis));
            x = AlgebraElement::from_coords(n, &xcoords)?;
            if sigma <= value * (1.0 + 1e-14) {
                value = value.max(sigma);
                break;
            }
            value = sigma;
        }
        best = best.max(value);
    }
    Ok(best)
}

/// `Σ_{k<terms} (−1)ᵏ/(k+1)! · ad_Xᵏ Y`, the left-trivialized differential of exp at X.
pub fn dexp(x: &AlgebraElement, y: &AlgebraElement, terms: usize) -> AlgebraElement {
    let mut sum = y.clone();
    let mut term = y.clone();
    for k in 1..terms {
        term = ad(x, &term).scale(-1.0 / (k + 1) as f64);
        sum.axpy(1.0, &term);
    }
    sum
}

/// Taylor coefficients of `z/(1 − e^{−z})`, i.e. `B_k(1)/k!`.
pub fn dlog_coefficients(terms: usize) -> Vec<f64> {
    // b_k: coefficients of z/(e^z − 1), from Σ_{j≤k} b_j/(k+1−j)! = 0.
    let mut b = Vec::with_capacity(terms);
    let mut inv_fact = vec![1.0; terms + 2];
    for i in 1..terms + 2 {
        inv_fact[i] = inv_fact[i - 1] / i as f64;
    }
    for k in 0..terms {
        if k == 0 {
            b.push(1.0);
            continue;
        }
        let s: f64 = (0..k).map(|j| b[j] * inv_fact[k + 1 - j]).sum();
        b.push(-s);
    }
    b.iter().enumerate().map(|(k, v)| if k % 2 == 1 { -v } else { *v }).collect()
}

/// `p(ad_{log g}) ξ` truncated after `terms` terms. The flag warns that the
/// series is unreliable because g sits on the cut locus.
pub fn dlog(g: &GroupElement, xi: &AlgebraElement, terms: usize) -> Flagged<AlgebraElement> {
    let log = group_log(g);
    let coef = dlog_coefficients(terms.max(1));
    let mut sum = xi.clone();
    let mut term = xi.clone();
    for &c in coef.iter().skip(1) {
        term = ad(&log.value, &term);
        sum.axpy(c, &term);
    }
    Flagged { value: sum, near_cut_locus: log.near_cut_locus }
}

/// Haar-uniform draw: QR of a Gaussian matrix with positive R diagonal, last
/// column negated when the determinant is −1.
///
/// Entries are drawn column by column, so the first `n` normals fix the first
/// column `z/‖z‖`.
pub fn haar_sample<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Result<GroupElement> {
    check_dim(n)?;
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    haar_complete(&z, rng)
}

/// Finish a Haar draw whose first Gaussian column `z` is already known.
pub fn haar_complete<R: RngCore + ?Sized>(z: &[f64], rng: &mut R) -> Result<GroupElement> {
    let n = z.len();
    check_dim(n)?;
    let mut a = Mat::zeros(n);
    for (i, &zi) in z.iter().enumerate() {
        a[(i, 0)] = zi;
    }
    for j in 1..n {
        for i in 0..n {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    let (mut q, _) = householder_qr(&a);
    if q.determinant() < 0.0 {
        for i in 0..n {
            q[(i, n - 1)] = -q[(i, n - 1)];
        }
    }
    Ok(GroupElement { mat: q })
}

/// Gaussian algebra element with i.i.d. standard normal coordinates.
pub fn gaussian_algebra<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> AlgebraElement {
    let coords: Vec<f64> = (0..algebra_dim(n)).map(|_| StandardNormal.sample(rng)).collect();
    AlgebraElement::from_coords(n, &coords).expect("coordinate count matches dimension")
}

/// 2×2 generator `(E_12 − E_21)·θ`, rotating by θ under exp.
pub fn plane_generator(n: usize, i: usize, j: usize, theta: f64) -> AlgebraElement {
    let mut m = Mat::zeros(n);
    m[(i, j)] = -theta;
    m[(j, i)] = theta;
    AlgebraElement { mat: m }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::SQRT_2;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn unit_random(n: usize, r: &mut ChaCha8Rng) -> AlgebraElement {
        let x = gaussian_algebra(n, r);
        let s = 1.0 / x.norm();
        x.scale(s)
    }

    #[test]
    fn basis_sizes_and_gram() {
        assert_eq!(skew_basis(10).unwrap().m(), 45);
        assert_eq!(skew_basis(2).unwrap().m(), 1);
        let b = skew_basis(6).unwrap();
        let g = b.gram();
        assert!((&g - &Mat::identity(15)).max_abs() < 1e-12);
        assert_eq!(skew_basis(1).unwrap_err(), Error::InvalidDimension(1));
    }

    #[test]
    fn basis_order_is_lexicographic() {
        let b = skew_basis(3).unwrap();
        let pos = [(0, 1), (0, 2), (1, 2)];
        for (e, (i, j)) in b.elems.iter().zip(pos) {
            assert!((e.mat()[(i, j)] - FRAC_1_SQRT_2).abs() < 1e-16);
        }
    }

    #[test]
    fn coords_round_trip() {
        let c = [0.3, -1.2, 2.0, 0.0, 5.5, -0.1];
        let x = AlgebraElement::from_coords(4, &c).unwrap();
        for (a, b) in x.coords().iter().zip(c) {
            assert!((a - b).abs() < 4e-16 * (1.0 + b.abs()));
        }
        let e = AlgebraElement::from_coords(4, &c[..5]).unwrap_err();
        assert_eq!(e, Error::DimensionMismatch { expected: 6, got: 5 });
    }

    #[test]
    fn exp_of_zero_is_identity() {
        assert_eq!(group_exp(&AlgebraElement::zero(5)), GroupElement::identity(5));
    }

    #[test]
    fn exp_in_two_dimensions_is_rotation() {
        let theta = 0.7;
        let g = group_exp(&plane_generator(2, 0, 1, theta));
        let (c, s) = (libm::cos(theta), libm::sin(theta));
        let expect = Mat::from_row_major(2, vec![c, -s, s, c]);
        assert!((g.mat() - &expect).max_abs() < 1e-15);
    }

    #[test]
    fn exp_output_is_special_orthogonal() {
        let mut r = rng(1);
        for n in [3, 5, 10] {
            let g = group_exp(&unit_random(n, &mut r));
            assert!(g.mat().orthogonality_defect() < 1e-12);
            assert!((g.mat().determinant() - 1.0).abs() < 1e-12);
            let big = group_exp(&unit_random(n, &mut r).scale(40.0));
            assert!(GroupElement::new(big.mat().clone()).is_ok());
        }
    }

    #[test]
    fn non_skew_input_is_rejected() {
        let mut m = Mat::zeros(3);
        m[(0, 1)] = 1.0;
        let err = AlgebraElement::new(m).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation { what: "skew-symmetry", .. }));
        let err = GroupElement::new(Mat::from_row_major(2, vec![1.0, 0.0, 0.0, -1.0])).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation { what: "determinant", .. }));
    }

    #[test]
    fn log_of_identity_is_zero() {
        let l = group_log(&GroupElement::identity(4));
        assert_eq!(l.value.norm(), 0.0);
        assert!(!l.near_cut_locus);
    }

    #[test]
    fn log_round_trip_small_elements() {
        let mut r = rng(2);
        for n in [2, 3, 4, 7, 10] {
            for _ in 0..20 {
                let x = unit_random(n, &mut r);
                let back = group_log(&group_exp(&x));
                assert!(!back.near_cut_locus);
                assert!((&back.value - &x).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn log_norm_of_planar_rotation() {
        let g = group_exp(&plane_generator(2, 0, 1, 0.3));
        let l = group_log(&g).value;
        assert!((l.norm() - 0.3 * SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn log_handles_repeated_angles() {
        // Two planes rotated by the same angle give a 4-dimensional eigenspace.
        let mut x = plane_generator(4, 0, 1, 2.0);
        x.axpy(1.0, &plane_generator(4, 2, 3, 2.0));
        let mut r = rng(3);
        let h = haar_sample(4, &mut r).unwrap();
        let g = h.compose(&group_exp(&x)).compose(&h.inverse());
        let l = group_log(&g).value;
        assert!((group_exp(&l).mat() - g.mat()).max_abs() < 1e-12);
        assert!((l.norm() - 2.0 * 2.0).abs() < 1e-10);
    }

    #[test]
    fn cut_locus_is_flagged_and_branch_is_valid() {
        let mut x = plane_generator(5, 0, 3, PI);
        x.axpy(1.0, &plane_generator(5, 1, 4, 0.4));
        let g = group_exp(&x);
        let l = group_log(&g);
        assert!(l.near_cut_locus);
        assert!((group_exp(&l.value).mat() - g.mat()).max_abs() < 1e-8);
        assert!((l.value.norm() - libm::sqrt(2.0 * (PI * PI + 0.16))).abs() < 1e-8);
    }

    #[test]
    fn distance_examples() {
        let mut r = rng(4);
        let g = haar_sample(3, &mut r).unwrap();
        assert!(distance(&g, &g).value < 1e-12);
        let rot = group_exp(&plane_generator(2, 0, 1, -1.1));
        assert!((distance(&rot, &GroupElement::identity(2)).value - SQRT_2 * 1.1).abs() < 1e-13);
    }

    #[test]
    fn diameters() {
        assert!((so_n_diameter(3) - 4.442882938158366).abs() < 1e-12);
        assert!((so_n_diameter(10) - 9.934588265796101).abs() < 1e-12);
        let mut r = rng(5);
        for _ in 0..2000 {
            let a = haar_sample(3, &mut r).unwrap();
            let b = haar_sample(3, &mut r).unwrap();
            assert!(distance(&a, &b).value <= so_n_diameter(3) + 1e-6);
        }
    }

    #[test]
    fn ad_examples() {
        let mut r = rng(6);
        let x = gaussian_algebra(4, &mut r);
        assert_eq!(ad(&x, &x).norm(), 0.0);
        let y = gaussian_algebra(4, &mut r);
        assert_eq!(ad(&x, &y).mat().skew_defect(), 0.0);
    }

    #[test]
    fn ad_norm_so2_and_so3() {
        assert_eq!(ad_operator_norm(2, 3).unwrap(), 0.0);
        // so(3) is R³ with the cross product; ‖hat x‖_F = √2|x| gives C = 1/√2.
        let c = ad_operator_norm(3, 5).unwrap();
        assert!((c - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn ad_norm_is_stable_and_monotone() {
        let c1 = ad_operator_norm(3, 1).unwrap();
        let c100 = ad_operator_norm(3, 100).unwrap();
        assert!((c100 - c1).abs() < 1e-3);
        let a = ad_operator_norm(5, 2).unwrap();
        let b = ad_operator_norm(5, 4).unwrap();
        assert!(b >= a);
        assert!(b > 0.0 && b <= SQRT_2);
    }

    #[test]
    fn dexp_at_zero_is_identity() {
        let mut r = rng(7);
        let y = gaussian_algebra(4, &mut r);
        assert_eq!(dexp(&AlgebraElement::zero(4), &y, 20), y);
    }

    #[test]
    fn dexp_matches_central_difference() {
        let mut r = rng(8);
        let x = unit_random(4, &mut r).scale(1.3);
        let y = unit_random(4, &mut r);
        let t = 1e-5;
        let plus = group_exp(&(&x + &y.scale(t)));
        let minus = group_exp(&(&x - &y.scale(t)));
        let fd = (plus.mat() - minus.mat()).scale(0.5 / t);
        let left = group_exp(&x).mat().matmul(dexp(&x, &y, 20).mat());
        assert!((&fd - &left).max_abs() < 1e-8);
    }

    #[test]
    fn dexp_is_a_contraction() {
        let mut r = rng(9);
        for _ in 0..50 {
            let x = gaussian_algebra(5, &mut r);
            let y = gaussian_algebra(5, &mut r);
            assert!(dexp(&x, &y, 40).norm() <= y.norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn dlog_coefficients_are_bernoulli() {
        let c = dlog_coefficients(7);
        let expect = [1.0, 0.5, 1.0 / 12.0, 0.0, -1.0 / 720.0, 0.0, 1.0 / 30240.0];
        for (a, b) in c.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn dlog_inverts_dexp() {
        let mut r = rng(10);
        let x = unit_random(4, &mut r).scale(1.5);
        let y = gaussian_algebra(4, &mut r);
        let g = group_exp(&x);
        let back = dlog(&g, &dexp(&x, &y, 40), 40);
        assert!((&back.value - &y).norm() < 1e-10);
        assert_eq!(dlog(&GroupElement::identity(4), &y, 20).value, y);
    }

    #[test]
    fn haar_first_column_matches_direction() {
        let mut r1 = rng(11);
        let mut r2 = rng(11);
        let g = haar_sample(6, &mut r1).unwrap();
        let z: Vec<f64> = (0..6).map(|_| StandardNormal.sample(&mut r2)).collect();
        let nz = libm::sqrt(z.iter().map(|v| v * v).sum());
        for i in 0..6 {
            assert!((g.mat()[(i, 0)] - z[i] / nz).abs() < 1e-14);
        }
        assert!(GroupElement::new(g.mat().clone()).is_ok());
    }

    #[test]
    fn haar_x11_moments() {
        let mut r = rng(12);
        let draws = 100_000;
        let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
        for _ in 0..draws {
            let x = haar_sample(10, &mut r).unwrap().x11();
            s1 += x;
            s2 += x * x;
            s4 += x * x * x * x;
        }
        let nf = draws as f64;
        let mean = s1 / nf;
        let m2 = s2 / nf;
        let sd1 = libm::sqrt(m2 / nf);
        assert!(mean.abs() <= 3.0 * sd1);
        let sd2 = libm::sqrt((s4 / nf - m2 * m2) / nf);
        assert!((m2 - 0.1).abs() <= 3.0 * sd2);
    }
}
