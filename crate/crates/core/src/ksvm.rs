//! Kernel soft-margin SVM trained by SMO with second-order working-set
//! selection. Unlike the linear solver, the bias here is a true free
//! variable recovered from the dual equality constraint.

use alloc::vec;
use alloc::vec::Vec;

use crate::kernel::{kernel_eval, KernelSpec};
use crate::svm::SolverConfig;
use crate::{Error, FeatureVector, Result};

/// Dual coefficients over the fixed training ordering (positive-bag frames
/// in sequence order, then negative-bag frames in dataset order). Entries
/// are signed, `alpha_k * label_k`, with zeros kept for non-support points
/// so descriptors over a shared negative bag have identical length.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub support_count: usize,
}

impl DualSolution {
    /// Implicit primal weights `Σ alpha_k · x_k` (linear kernel only).
    pub fn implicit_weights(&self, points: &[FeatureVector]) -> Result<Vec<f64>> {
        if points.len() != self.alphas.len() {
            return Err(Error::OrderingMismatch {
                expected: self.alphas.len(),
                found: points.len(),
            });
        }
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        let mut w = vec![0.0; dim];
        for (a, x) in self.alphas.iter().zip(points) {
            if *a != 0.0 {
                crate::linalg::axpy(*a, x, &mut w);
            }
        }
        Ok(w)
    }
}

const TAU: f64 = 1e-12;

/// SMO over an explicit kernel matrix (row-major `n x n`, kernel values,
/// not label-signed). Labels are ±1.
pub fn train_on_gram(
    kernel_matrix: &[f64],
    labels: &[f64],
    config: &SolverConfig,
) -> Result<DualSolution> {
    config.validate()?;
    let n = labels.len();
    if n == 0 {
        return Err(Error::EmptyBag);
    }
    if kernel_matrix.len() != n * n {
        return Err(Error::CountMismatch { left: kernel_matrix.len(), right: n * n });
    }
    let c = config.c;
    let k = |i: usize, j: usize| kernel_matrix[i * n + j];

    let mut alpha = vec![0.0f64; n];
    // G_i = (Q alpha)_i - 1 with Q_ij = y_i y_j K_ij; starts at -1.
    let mut grad = vec![-1.0f64; n];

    let max_iter = (config.max_passes as usize).saturating_mul(n).max(1);
    let mut iter = 0usize;
    while iter < max_iter {
        // i: the most violating index in I_up.
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        for t in 0..n {
            let in_up = (labels[t] > 0.0 && alpha[t] < c) || (labels[t] < 0.0 && alpha[t] > 0.0);
            if in_up {
                let v = -labels[t] * grad[t];
                if v > g_max {
                    g_max = v;
                    i = t;
                }
            }
        }
        if i == usize::MAX {
            break;
        }
        // j: the second-order best partner in I_low.
        let mut j = usize::MAX;
        let mut g_min = f64::INFINITY;
        let mut best_gain = 0.0f64;
        for t in 0..n {
            let in_low = (labels[t] < 0.0 && alpha[t] < c) || (labels[t] > 0.0 && alpha[t] > 0.0);
            if !in_low {
                continue;
            }
            let v = -labels[t] * grad[t];
            g_min = g_min.min(v);
            let b_it = g_max - v;
            if b_it > 0.0 {
                let mut a_it = k(i, i) + k(t, t) - 2.0 * k(i, t);
                if a_it <= 0.0 {
                    a_it = TAU;
                }
                let gain = b_it * b_it / a_it;
                if gain > best_gain {
                    best_gain = gain;
                    j = t;
                }
            }
        }
        if g_max - g_min <= config.tolerance || j == usize::MAX {
            break;
        }

        let (yi, yj) = (labels[i], labels[j]);
        let old_ai = alpha[i];
        let old_aj = alpha[j];
        // In both branches the curvature along the working direction is
        // Q_ii + Q_jj ± 2 Q_ij, which in kernel terms is always
        // K_ii + K_jj - 2 K_ij.
        if yi != yj {
            let mut quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else {
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            }
        } else {
            let mut quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }
        let dai = alpha[i] - old_ai;
        let daj = alpha[j] - old_aj;
        if dai != 0.0 || daj != 0.0 {
            for t in 0..n {
                let qti = labels[t] * yi * k(t, i);
                let qtj = labels[t] * yj * k(t, j);
                grad[t] += qti * dai + qtj * daj;
            }
        }
        iter += 1;
    }

    // Bias from the KKT conditions: average over free support vectors,
    // midpoint of the violating bounds otherwise.
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..n {
        let yg = labels[t] * grad[t];
        if alpha[t] >= c {
            if labels[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if labels[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free_sum += yg;
            free_count += 1;
        }
    }
    let rho = if free_count > 0 { free_sum / free_count as f64 } else { (upper + lower) / 2.0 };

    let signed: Vec<f64> = alpha.iter().zip(labels).map(|(a, y)| a * y).collect();
    let support_count = signed.iter().filter(|a| a.abs() > 1e-12).count();
    Ok(DualSolution { alphas: signed, bias: -rho, support_count })
}

/// Trains on two bags with an explicit kernel; the training ordering is
/// positives then negatives, matching [`DualSolution`].
pub fn train_kernel_svm(
    positives: &[FeatureVector],
    negatives: &[FeatureVector],
    spec: &KernelSpec,
    config: &SolverConfig,
) -> Result<DualSolution> {
    spec.validate()?;
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::EmptyBag);
    }
    let dim = positives[0].len();
    let mut points: Vec<&FeatureVector> = Vec::with_capacity(positives.len() + negatives.len());
    points.extend(positives.iter());
    points.extend(negatives.iter());
    for x in &points {
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
    }
    let n = points.len();
    let mut kmat = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let v = spec.eval_unchecked(points[i], points[j]);
            kmat[i * n + j] = v;
            kmat[j * n + i] = v;
        }
    }
    let mut labels = vec![1.0; positives.len()];
    labels.extend(vec![-1.0; negatives.len()]);
    train_on_gram(&kmat, &labels, config)
}

/// `Σ alphas[k]·K(x, points[k]) + bias` over the fit-time ordering.
pub fn kernel_decision(
    solution: &DualSolution,
    training_points: &[FeatureVector],
    spec: &KernelSpec,
    x: &[f64],
) -> Result<f64> {
    if training_points.len() != solution.alphas.len() {
        return Err(Error::OrderingMismatch {
            expected: solution.alphas.len(),
            found: training_points.len(),
        });
    }
    let mut value = solution.bias;
    for (a, pt) in solution.alphas.iter().zip(training_points) {
        if *a != 0.0 {
            value += a * kernel_eval(spec, x, pt)?;
        }
    }
    Ok(value)
}
