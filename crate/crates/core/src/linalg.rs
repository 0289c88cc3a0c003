//! Dense vector helpers and a small symmetric eigensolver.

use alloc::vec::Vec;

use crate::math;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

/// Eigenvalues of a symmetric matrix (row-major, `n x n`) by the cyclic
/// Jacobi method. Adequate for the few-hundred-row Gram matrices this crate
/// validates; not meant as a general-purpose eigensolver.
pub fn symmetric_eigenvalues(matrix: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut a = matrix.to_vec();
    if n == 0 {
        return Vec::new();
    }
    let mut scale = 0.0f64;
    for i in 0..n {
        scale = scale.max(a[i * n + i].abs());
    }
    for sweep in 0..64 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[i * n + j].abs());
            }
        }
        if off <= 1e-14 * scale.max(1e-300) || (sweep > 0 && off == 0.0) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + math::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + math::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Convenience: (min, max) eigenvalue of a symmetric matrix.
pub fn eigenvalue_range(matrix: &[f64], n: usize) -> (f64, f64) {
    let eig = symmetric_eigenvalues(matrix, n);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for e in eig {
        lo = lo.min(e);
        hi = hi.max(e);
    }
    if lo > hi {
        (0.0, 0.0)
    } else {
        (lo, hi)
    }
}
