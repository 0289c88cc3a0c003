//! Reference solvers and instance generators shared by the integration
//! tests. Everything here is deliberately independent of the library's
//! own solver code paths: plain projected-gradient descent on the dual
//! quadratic programs, with exact projections, run far past the accuracy
//! the tests assert. Slow and simple on purpose.

#![allow(dead_code)]

use svmp_core::rng;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Q_ij = y_i y_j <x_i, x_j>` for the linear dual.
pub fn q_linear(points: &[Vec<f64>], labels: &[f64]) -> Vec<f64> {
    let n = points.len();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            q[i * n + j] = labels[i] * labels[j] * dot(&points[i], &points[j]);
        }
    }
    q
}

/// `Q_ij = y_i y_j K_ij` from an explicit kernel matrix.
pub fn q_from_kernel(kmat: &[f64], labels: &[f64]) -> Vec<f64> {
    let n = labels.len();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            q[i * n + j] = labels[i] * labels[j] * kmat[i * n + j];
        }
    }
    q
}

/// Dual objective `1/2 a'Qa - sum(a)` (minimization form).
pub fn dual_objective(q: &[f64], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * q[i * n + j] * alpha[j];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

/// Hinge-loss primal objective over raw points with an explicit weight
/// vector in the same space (bias, if any, is a coordinate of `w`).
pub fn primal_objective(points: &[Vec<f64>], labels: &[f64], w: &[f64], c: f64) -> f64 {
    let reg = 0.5 * dot(w, w);
    let slack: f64 = points
        .iter()
        .zip(labels)
        .map(|(x, y)| (1.0 - y * dot(w, x)).max(0.0))
        .sum();
    reg + c * slack
}

fn step_size(q: &[f64], n: usize) -> f64 {
    // Largest absolute row sum bounds the spectral radius of Q.
    let mut l = 0.0f64;
    for i in 0..n {
        let row: f64 = q[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum();
        l = l.max(row);
    }
    1.0 / l.max(1e-12)
}

/// Projected gradient on `min 1/2 a'Qa - sum(a)` subject to `0 <= a <= C`
/// (the bias-through-augmentation dual: no equality constraint).
pub fn pg_box_qp(q: &[f64], n: usize, c: f64, iters: usize) -> Vec<f64> {
    let step = step_size(q, n);
    let mut alpha = vec![0.0f64; n];
    for _ in 0..iters {
        let mut moved = 0.0f64;
        for i in 0..n {
            let g: f64 = (0..n).map(|j| q[i * n + j] * alpha[j]).sum::<f64>() - 1.0;
            let next = (alpha[i] - step * g).clamp(0.0, c);
            moved = moved.max((next - alpha[i]).abs());
            alpha[i] = next;
        }
        if moved < 1e-14 {
            break;
        }
    }
    alpha
}

/// Euclidean projection of `v` onto `{a : 0 <= a <= C, sum(y a) = 0}` by
/// bisection on the multiplier of the equality constraint.
pub fn project_box_equality(v: &[f64], labels: &[f64], c: f64) -> Vec<f64> {
    let clipped = |lambda: f64| -> Vec<f64> {
        v.iter()
            .zip(labels)
            .map(|(vi, yi)| (vi - lambda * yi).clamp(0.0, c))
            .collect()
    };
    let balance = |a: &[f64]| -> f64 { a.iter().zip(labels).map(|(ai, yi)| ai * yi).sum() };
    let bound = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if balance(&clipped(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clipped(0.5 * (lo + hi))
}

/// Projected gradient on the same dual with the additional equality
/// constraint `sum(y a) = 0` (the true-bias kernel dual).
pub fn pg_box_equality_qp(
    q: &[f64],
    labels: &[f64],
    c: f64,
    iters: usize,
) -> Vec<f64> {
    let n = labels.len();
    let step = step_size(q, n);
    let mut alpha = project_box_equality(&vec![0.0; n], labels, c);
    for _ in 0..iters {
        let mut trial = vec![0.0f64; n];
        for i in 0..n {
            let g: f64 = (0..n).map(|j| q[i * n + j] * alpha[j]).sum::<f64>() - 1.0;
            trial[i] = alpha[i] - step * g;
        }
        let next = project_box_equality(&trial, labels, c);
        let moved = alpha
            .iter()
            .zip(&next)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        alpha = next;
        if moved < 1e-14 {
            break;
        }
    }
    alpha
}

/// Appends the constant coordinate used for bias-through-augmentation.
pub fn augment(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|x| {
            let mut a = x.clone();
            a.push(1.0);
            a
        })
        .collect()
}

/// Small random two-class instance: labels ±1, points drawn around
/// opposite centers with the given separation (0 gives pure overlap).
pub fn random_instance(
    seed: u64,
    n: usize,
    dim: usize,
    separation: f64,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut r = rng::seeded(seed);
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = if i % 2 == 0 { 1.0 } else { -1.0 };
        let point: Vec<f64> = (0..dim)
            .map(|d| {
                let center = if d == 0 { y * separation } else { 0.0 };
                center + rng::normal(&mut r)
            })
            .collect();
        points.push(point);
        labels.push(y);
    }
    (points, labels)
}

/// Minimum and maximum eigenvalue through nalgebra, used as an
/// independent check on the crate's own symmetric eigenvalue routine.
pub fn nalgebra_eigen_range(entries: &[f64], n: usize) -> (f64, f64) {
    let m = nalgebra::DMatrix::from_row_slice(n, n, entries);
    let sym = (&m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in eig.eigenvalues.iter() {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    (lo, hi)
}
