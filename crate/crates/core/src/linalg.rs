//! Small dense square matrices, row-major.
//!
//! Only what the group code needs: products, norms, determinant, Householder QR
//! and a cyclic Jacobi eigensolver for symmetric matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Mat { n, data }
    }

    /// Panics unless `data.len() == n * n`.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "row-major buffer has wrong length");
        Mat { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Mat {
        let n = self.n;
        Mat::from_fn(n, |i, j| self.data[j * n + i])
    }

    pub fn matmul(&self, rhs: &Mat) -> Mat {
        let mut out = Mat::zeros(self.n);
        self.matmul_into(rhs, &mut out);
        out
    }

    pub fn matmul_into(&self, rhs: &Mat, out: &mut Mat) {
        let n = self.n;
        debug_assert_eq!(rhs.n, n);
        debug_assert_eq!(out.n, n);
        out.data.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            let row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let rrow = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in row.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
    }

    /// `selfᵀ · rhs` without materializing the transpose.
    pub fn t_matmul(&self, rhs: &Mat) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(n);
        for k in 0..n {
            let lrow = &self.data[k * n..(k + 1) * n];
            let rrow = &rhs.data[k * n..(k + 1) * n];
            for (i, &a) in lrow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let row = &mut out.data[i * n..(i + 1) * n];
                for (o, &b) in row.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat { n: self.n, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn scale_mut(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    /// `self += s · other`
    pub fn axpy(&mut self, s: f64, other: &Mat) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Frobenius inner product `trace(selfᵀ · other)`.
    pub fn frob_inner(&self, other: &Mat) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.frob_inner(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
    }

    /// `‖selfᵀ·self − I‖_F`
    pub fn orthogonality_defect(&self) -> f64 {
        let mut g = self.t_matmul(self);
        for i in 0..self.n {
            g[(i, i)] -= 1.0;
        }
        g.frobenius_norm()
    }

    /// `‖self + selfᵀ‖_F`
    pub fn skew_defect(&self) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = self.data[i * n + j] + self.data[j * n + i];
                s += v * v;
            }
        }
        libm::sqrt(s)
    }

    /// `(self − selfᵀ)/2`
    pub fn skew_part(&self) -> Mat {
        let n = self.n;
        Mat::from_fn(n, |i, j| 0.5 * (self.data[i * n + j] - self.data[j * n + i]))
    }

    pub fn determinant(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for c in 0..n {
            let p = (c..n)
                .max_by(|&x, &y| a[x * n + c].abs().total_cmp(&a[y * n + c].abs()))
                .unwrap_or(c);
            if a[p * n + c] == 0.0 {
                return 0.0;
            }
            if p != c {
                for j in 0..n {
                    a.swap(c * n + j, p * n + j);
                }
                det = -det;
            }
            let piv = a[c * n + c];
            det *= piv;
            for r in c + 1..n {
                let f = a[r * n + c] / piv;
                if f != 0.0 {
                    for j in c..n {
                        a[r * n + j] -= f * a[c * n + j];
                    }
                }
            }
        }
        det
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * self.n + j]).collect()
    }

    /// `self · v`
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&Mat> for Mat {
    fn add_assign(&mut self, rhs: &Mat) {
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&Mat> for Mat {
    fn sub_assign(&mut self, rhs: &Mat) {
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        self.matmul(rhs)
    }
}

impl Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self.scale(-1.0)
    }
}

/// Householder QR of a square matrix. `R` has a nonnegative diagonal.
pub fn householder_qr(a: &Mat) -> (Mat, Mat) {
    let n = a.n;
    let mut r = a.clone();
    let mut q = Mat::identity(n);
    let mut v = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let mut norm2 = 0.0;
        for i in k..n {
            norm2 += r[(i, k)] * r[(i, k)];
        }
        let norm = libm::sqrt(norm2);
        if norm == 0.0 {
            continue;
        }
        let x0 = r[(k, k)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for i in 0..n {
            v[i] = if i < k { 0.0 } else { r[(i, k)] };
        }
        v[k] -= alpha;
        let vnorm2: f64 = v[k..].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // R <- (I - beta v vᵀ) R
        for j in 0..n {
            let mut s = 0.0;
            for i in k..n {
                s += v[i] * r[(i, j)];
            }
            s *= beta;
            for i in k..n {
                r[(i, j)] -= s * v[i];
            }
        }
        // Q <- Q (I - beta v vᵀ)
        for i in 0..n {
            let mut s = 0.0;
            for l in k..n {
                s += q[(i, l)] * v[l];
            }
            s *= beta;
            for l in k..n {
                q[(i, l)] -= s * v[l];
            }
        }
    }
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            for j in 0..n {
                r[(k, j)] = -r[(k, j)];
                q[(j, k)] = -q[(j, k)];
            }
        }
        for i in k + 1..n {
            r[(i, k)] = 0.0;
        }
    }
    (q, r)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and a matrix whose columns are the eigenvectors.
pub fn symmetric_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.n;
    let mut s = a.clone();
    let mut v = Mat::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += s[(i, j)] * s[(i, j)];
            }
        }
        if libm::sqrt(off) <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = s[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = s[(p, p)];
                let aqq = s[(q, q)];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + libm::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let sn = t * c;
                for k in 0..n {
                    let skp = s[(k, p)];
                    let skq = s[(k, q)];
                    s[(k, p)] = c * skp - sn * skq;
                    s[(k, q)] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let spk = s[(p, k)];
                    let sqk = s[(q, k)];
                    s[(p, k)] = c * spk - sn * sqk;
                    s[(q, k)] = sn * spk + c * sqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let vals = (0..n).map(|i| s[(i, i)]).collect();
    (vals, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Mat {
        Mat::from_row_major(3, vec![2.0, -1.0, 0.5, 0.3, 4.0, 1.0, -2.0, 0.7, 1.5])
    }

    #[test]
    fn matmul_against_hand_product() {
        let a = Mat::from_row_major(2, vec![1.0, 2.0, 3.0, 4.0]);
        let b = Mat::from_row_major(2, vec![0.0, 1.0, -1.0, 2.0]);
        assert_eq!(a.matmul(&b).as_slice(), &[-2.0, 5.0, -4.0, 11.0]);
        assert_eq!(a.t_matmul(&b), a.transpose().matmul(&b));
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let a = sample();
        let d = 2.0 * (4.0 * 1.5 - 1.0 * 0.7) - (-1.0) * (0.3 * 1.5 - 1.0 * -2.0)
            + 0.5 * (0.3 * 0.7 - 4.0 * -2.0);
        assert!((a.determinant() - d).abs() < 1e-12);
    }

    #[test]
    fn qr_reconstructs_and_is_orthogonal() {
        let a = sample();
        let (q, r) = householder_qr(&a);
        assert!(q.orthogonality_defect() < 1e-14);
        assert!((&q.matmul(&r) - &a).max_abs() < 1e-13);
        for i in 0..3 {
            assert!(r[(i, i)] >= 0.0);
            for j in 0..i {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = sample();
        let s = &a + &a.transpose();
        let (vals, v) = symmetric_eigen(&s);
        assert!(v.orthogonality_defect() < 1e-13);
        let d = Mat::from_fn(3, |i, j| if i == j { vals[i] } else { 0.0 });
        let back = v.matmul(&d).matmul(&v.transpose());
        assert!((&back - &s).max_abs() < 1e-12);
    }
}
