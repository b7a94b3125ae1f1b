//! Fixed-size dense linear algebra on plain arrays.
//!
//! The estimator only ever touches 2x4, 4x4 and 3x3 matrices, so everything
//! here works on `[[T; C]; R]` without heap allocation.

use crate::scalar::Real;

pub type Vec3<T> = [T; 3];
pub type Vec4<T> = [T; 4];
pub type Mat3<T> = [[T; 3]; 3];
pub type Mat4<T> = [[T; 4]; 4];
pub type Mat2x4<T> = [[T; 4]; 2];
pub type Mat4x3<T> = [[T; 3]; 4];

pub fn zeros<T: Real, const R: usize, const C: usize>() -> [[T; C]; R] {
    [[T::zero(); C]; R]
}

pub fn identity<T: Real, const N: usize>() -> [[T; N]; N] {
    let mut m = zeros::<T, N, N>();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn transpose<T: Real, const R: usize, const C: usize>(a: &[[T; C]; R]) -> [[T; R]; C] {
    let mut t = zeros::<T, C, R>();
    for i in 0..R {
        for j in 0..C {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn matmul<T: Real, const R: usize, const K: usize, const C: usize>(a: &[[T; K]; R], b: &[[T; C]; K]) -> [[T; C]; R] {
    let mut out = zeros::<T, R, C>();
    for i in 0..R {
        for k in 0..K {
            let aik = a[i][k];
            for j in 0..C {
                out[i][j] = out[i][j] + aik * b[k][j];
            }
        }
    }
    out
}

pub fn mat_vec<T: Real, const R: usize, const C: usize>(a: &[[T; C]; R], x: &[T; C]) -> [T; R] {
    let mut out = [T::zero(); R];
    for i in 0..R {
        out[i] = dot(&a[i], x);
    }
    out
}

pub fn dot<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm<T: Real, const N: usize>(a: &[T; N]) -> T {
    dot(a, a).sqrt()
}

pub fn sub<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> [T; N] {
    let mut out = *a;
    out.iter_mut().zip(b).for_each(|(o, &y)| *o = *o - y);
    out
}

pub fn scale<T: Real, const N: usize>(a: &[T; N], s: T) -> [T; N] {
    a.map(|x| x * s)
}

pub fn mat_sub<T: Real, const R: usize, const C: usize>(a: &[[T; C]; R], b: &[[T; C]; R]) -> [[T; C]; R] {
    let mut out = *a;
    for i in 0..R {
        out[i] = sub(&a[i], &b[i]);
    }
    out
}

pub fn mat_scale<T: Real, const R: usize, const C: usize>(a: &[[T; C]; R], s: T) -> [[T; C]; R] {
    a.map(|row| scale(&row, s))
}

/// `(A + Aᵀ) / 2`.
pub fn symmetrize<T: Real, const N: usize>(a: &[[T; N]; N]) -> [[T; N]; N] {
    let half = T::lit(0.5);
    let mut out = *a;
    for i in 0..N {
        for j in (i + 1)..N {
            let m = (a[i][j] + a[j][i]) * half;
            out[i][j] = m;
            out[j][i] = m;
        }
    }
    out
}

pub fn max_abs<T: Real, const R: usize, const C: usize>(a: &[[T; C]; R]) -> T {
    a.iter().flatten().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Determinant and adjugate of a 4x4 matrix.
///
/// Uses the Laplace expansion along the first two rows: the six 2x2 minors of
/// rows 0-1 are paired with the complementary minors of rows 2-3. Exact up to
/// rounding, and well defined for singular input.
pub fn det_adj4<T: Real>(a: &Mat4<T>) -> (T, Mat4<T>) {
    let s0 = a[0][0] * a[1][1] - a[1][0] * a[0][1];
    let s1 = a[0][0] * a[1][2] - a[1][0] * a[0][2];
    let s2 = a[0][0] * a[1][3] - a[1][0] * a[0][3];
    let s3 = a[0][1] * a[1][2] - a[1][1] * a[0][2];
    let s4 = a[0][1] * a[1][3] - a[1][1] * a[0][3];
    let s5 = a[0][2] * a[1][3] - a[1][2] * a[0][3];

    let c5 = a[2][2] * a[3][3] - a[3][2] * a[2][3];
    let c4 = a[2][1] * a[3][3] - a[3][1] * a[2][3];
    let c3 = a[2][1] * a[3][2] - a[3][1] * a[2][2];
    let c2 = a[2][0] * a[3][3] - a[3][0] * a[2][3];
    let c1 = a[2][0] * a[3][2] - a[3][0] * a[2][2];
    let c0 = a[2][0] * a[3][1] - a[3][0] * a[2][1];

    let det = s0 * c5 - s1 * c4 + s2 * c3 + s3 * c2 - s4 * c1 + s5 * c0;

    let adj = [
        [
            a[1][1] * c5 - a[1][2] * c4 + a[1][3] * c3,
            -a[0][1] * c5 + a[0][2] * c4 - a[0][3] * c3,
            a[3][1] * s5 - a[3][2] * s4 + a[3][3] * s3,
            -a[2][1] * s5 + a[2][2] * s4 - a[2][3] * s3,
        ],
        [
            -a[1][0] * c5 + a[1][2] * c2 - a[1][3] * c1,
            a[0][0] * c5 - a[0][2] * c2 + a[0][3] * c1,
            -a[3][0] * s5 + a[3][2] * s2 - a[3][3] * s1,
            a[2][0] * s5 - a[2][2] * s2 + a[2][3] * s1,
        ],
        [
            a[1][0] * c4 - a[1][1] * c2 + a[1][3] * c0,
            -a[0][0] * c4 + a[0][1] * c2 - a[0][3] * c0,
            a[3][0] * s4 - a[3][1] * s2 + a[3][3] * s0,
            -a[2][0] * s4 + a[2][1] * s2 - a[2][3] * s0,
        ],
        [
            -a[1][0] * c3 + a[1][1] * c1 - a[1][2] * c0,
            a[0][0] * c3 - a[0][1] * c1 + a[0][2] * c0,
            -a[3][0] * s3 + a[3][1] * s1 - a[3][2] * s0,
            a[2][0] * s3 - a[2][1] * s1 + a[2][2] * s0,
        ],
    ];
    (det, adj)
}

/// Inverse of a 3x3 matrix by cofactors; `None` when singular.
pub fn inverse3<T: Real>(a: &Mat3<T>) -> Option<Mat3<T>> {
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
    let adj = [
        [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
        [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
        [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
    ];
    let det = a[0][0] * adj[0][0] + a[0][1] * adj[1][0] + a[0][2] * adj[2][0];
    if det == T::zero() || !det.is_finite() {
        return None;
    }
    Some(mat_scale(&adj, T::one() / det))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
///
/// Only the upper triangle is read.
pub fn symmetric_eigenvalues<T: Real, const N: usize>(a: &[[T; N]; N]) -> [T; N] {
    let mut m = symmetrize(a);
    let scale = max_abs(&m);
    if scale == T::zero() {
        return [T::zero(); N];
    }
    let tol = T::epsilon() * scale * T::lit(1e-2);
    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..N {
            for q in (p + 1)..N {
                off = off.max(m[p][q].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = m[p][q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..N {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..N {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig = [T::zero(); N];
    for i in 0..N {
        eig[i] = m[i][i];
    }
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    eig
}

pub fn min_eigenvalue<T: Real, const N: usize>(a: &[[T; N]; N]) -> T {
    symmetric_eigenvalues(a)[0]
}

pub fn max_eigenvalue<T: Real, const N: usize>(a: &[[T; N]; N]) -> T {
    symmetric_eigenvalues(a)[N - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample4() -> Mat4<f64> {
        [[4.0, -2.0, 1.0, 0.5], [3.0, 6.0, -4.0, 2.0], [2.0, 1.0, 8.0, -1.0], [-1.0, 0.25, 3.0, 5.0]]
    }

    #[test]
    fn adjugate_defining_identity() {
        let m = sample4();
        let (det, adj) = det_adj4(&m);
        let prod = matmul(&adj, &m);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { det } else { 0.0 };
                assert!((prod[i][j] - want).abs() < 1e-10 * det.abs());
            }
        }
        let prod = matmul(&m, &adj);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { det } else { 0.0 };
                assert!((prod[i][j] - want).abs() < 1e-10 * det.abs());
            }
        }
    }

    #[test]
    fn adjugate_of_diagonal() {
        let m = [[2.0, 0.0, 0.0, 0.0], [0.0, 3.0, 0.0, 0.0], [0.0, 0.0, 5.0, 0.0], [0.0, 0.0, 0.0, 7.0]];
        let (det, adj) = det_adj4(&m);
        assert_eq!(det, 210.0);
        assert_eq!([adj[0][0], adj[1][1], adj[2][2], adj[3][3]], [105.0, 70.0, 42.0, 30.0]);
        assert_eq!(adj[0][1], 0.0);
    }

    #[test]
    fn adjugate_of_singular_matrix_is_defined() {
        let m = [[1.0, 2.0, 3.0, 4.0], [2.0, 4.0, 6.0, 8.0], [0.0, 1.0, 0.0, 1.0], [1.0, 0.0, 1.0, 0.0]];
        let (det, adj) = det_adj4(&m);
        assert_eq!(det, 0.0);
        let prod = matmul(&adj, &m);
        assert!(max_abs(&prod) < 1e-12);
    }

    #[test]
    fn inverse3_roundtrip() {
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, -1.0], [0.5, -1.0, 2.0]];
        let inv = inverse3(&a).unwrap();
        let id = matmul(&a, &inv);
        assert!(max_abs(&mat_sub(&id, &identity())) < 1e-14);
        assert!(inverse3(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 1.0]]).is_none());
    }

    #[test]
    fn jacobi_matches_closed_form_2x2() {
        let a = [[2.0f64, 1.0], [1.0, 2.0]];
        let e = symmetric_eigenvalues(&a);
        assert!((e[0] - 1.0).abs() < 1e-14);
        assert!((e[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_trace_and_determinant() {
        let m = sample4();
        let s = matmul(&transpose(&m), &m);
        let e = symmetric_eigenvalues(&s);
        let trace: f64 = (0..4).map(|i| s[i][i]).sum();
        assert!((e.iter().sum::<f64>() - trace).abs() < 1e-10 * trace);
        let (det, _) = det_adj4(&s);
        assert!((e.iter().product::<f64>() - det).abs() < 1e-9 * det.abs());
        assert!(e.windows(2).all(|w| w[0] <= w[1]));
    }
}
