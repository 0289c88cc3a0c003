//! Soft-margin linear SVM trained by dual coordinate descent.
//!
//! The bias is handled by augmentation: every point is extended with a
//! constant coordinate 1.0 and the bias becomes the last weight, so the
//! objective is ½(‖w‖² + b²) + C·Σζ. This regularizes the bias, which keeps
//! descriptor space and augmented feature space dimensionally identical —
//! the joint trainer relies on that when it inserts classifier weights back
//! into bags as virtual points.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::dot;
use crate::rng;
use crate::{Error, FeatureVector, Result};

/// Separating hyperplane in the original (un-augmented) feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Hyperplane {
    /// The pooled-sequence descriptor `[w; b]`, length `p + 1`.
    pub fn as_descriptor(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        v.push(self.bias);
        v
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }
}

/// Dual coordinate descent settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Slack penalty, shared by both classes.
    pub c: f64,
    /// Maximum projected-gradient violation accepted at termination.
    pub tolerance: f64,
    /// Upper bound on full passes over the training set.
    pub max_passes: u32,
    /// Seed for the per-pass coordinate permutation.
    pub shuffle_seed: u64,
}

impl SolverConfig {
    pub fn with_c(c: f64) -> Self {
        SolverConfig { c, ..SolverConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidSpec("solver C must be positive and finite".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidSpec("solver tolerance must be positive".into()));
        }
        if self.max_passes == 0 {
            return Err(Error::InvalidSpec("max_passes must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { c: 10.0, tolerance: 1e-4, max_passes: 1000, shuffle_seed: 0 }
    }
}

/// Convergence diagnostics of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainStats {
    pub passes_used: u32,
    /// ½(‖w‖² + b²) + C·Σζ at the returned solution.
    pub primal_objective: f64,
    /// Σζ (hinge losses) at the returned solution.
    pub total_slack: f64,
    pub converged: bool,
}

/// Dual variables of a finished run, in positives-then-negatives order.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub alphas: Vec<f64>,
    pub positive_count: usize,
    pub negative_count: usize,
}

/// Raw fit over explicit points and ±1 labels, with no implicit bias
/// coordinate: the returned weight vector is exactly the solution of
/// ½‖w‖² + C·Σ max(0, 1 − yᵢ·w·xᵢ). Used by the pooling loop on
/// pre-augmented frames and by cross-solver consistency tests.
pub fn train_raw(
    points: &[FeatureVector],
    labels: &[f64],
    config: &SolverConfig,
) -> Result<(Vec<f64>, TrainStats, DualState)> {
    config.validate()?;
    if points.is_empty() {
        return Err(Error::EmptyBag);
    }
    if points.len() != labels.len() {
        return Err(Error::CountMismatch { left: points.len(), right: labels.len() });
    }
    let dim = points[0].len();
    for x in points {
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
    }

    let n = points.len();
    let c = config.c;
    let q_diag: Vec<f64> = points.iter().map(|x| dot(x, x).max(1e-12)).collect();

    let mut alpha = vec![0.0f64; n];
    let mut w = vec![0.0f64; dim];
    let mut order: Vec<usize> = (0..n).collect();
    let mut prng = rng::seeded(config.shuffle_seed);

    let mut passes = 0u32;
    let mut converged = false;
    while passes < config.max_passes {
        rng::shuffle(&mut prng, &mut order);
        let mut max_violation = 0.0f64;
        for &i in &order {
            let yi = labels[i];
            let g = yi * dot(&w, &points[i]) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg.abs() > 1e-14 {
                let old = alpha[i];
                alpha[i] = (old - g / q_diag[i]).clamp(0.0, c);
                let delta = (alpha[i] - old) * yi;
                if delta != 0.0 {
                    for (wk, xk) in w.iter_mut().zip(&points[i]) {
                        *wk += delta * xk;
                    }
                }
            }
        }
        passes += 1;
        if max_violation <= config.tolerance {
            converged = true;
            break;
        }
    }

    // Recompute w from the duals so the returned model, the stats, and any
    // later KKT residual all describe the same point.
    let mut w = vec![0.0f64; dim];
    for i in 0..n {
        if alpha[i] != 0.0 {
            for (wk, xk) in w.iter_mut().zip(&points[i]) {
                *wk += alpha[i] * labels[i] * xk;
            }
        }
    }

    let mut slack = 0.0;
    for i in 0..n {
        slack += (1.0 - labels[i] * dot(&w, &points[i])).max(0.0);
    }
    let objective = 0.5 * dot(&w, &w) + c * slack;

    let positive_count = labels.iter().filter(|&&y| y > 0.0).count();
    let stats = TrainStats {
        passes_used: passes,
        primal_objective: objective,
        total_slack: slack,
        converged,
    };
    let dual = DualState { alphas: alpha, positive_count, negative_count: n - positive_count };
    Ok((w, stats, dual))
}

/// Appends the constant bias coordinate to every frame.
pub fn augment(points: &[FeatureVector]) -> Vec<FeatureVector> {
    points
        .iter()
        .map(|x| {
            let mut a = Vec::with_capacity(x.len() + 1);
            a.extend_from_slice(x);
            a.push(1.0);
            a
        })
        .collect()
}

/// Trains on a positive and a negative bag; bias via augmentation.
pub fn train_linear_svm(
    positives: &[FeatureVector],
    negatives: &[FeatureVector],
    config: &SolverConfig,
) -> Result<(Hyperplane, TrainStats)> {
    let (h, stats, _) = train_linear_svm_full(positives, negatives, config)?;
    Ok((h, stats))
}

/// As [`train_linear_svm`] but also returns the dual state for KKT checks.
pub fn train_linear_svm_full(
    positives: &[FeatureVector],
    negatives: &[FeatureVector],
    config: &SolverConfig,
) -> Result<(Hyperplane, TrainStats, DualState)> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::EmptyBag);
    }
    let dim = positives[0].len();
    for x in positives.iter().chain(negatives) {
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
        }
    }
    let mut points = augment(positives);
    points.extend(augment(negatives));
    let mut labels = vec![1.0; positives.len()];
    labels.extend(vec![-1.0; negatives.len()]);

    let (aug_w, stats, dual) = train_raw(&points, &labels, config)?;
    let bias = aug_w[dim];
    let weights = aug_w[..dim].to_vec();
    Ok((Hyperplane { weights, bias }, stats, dual))
}

/// `w·x + b`.
pub fn decision_value(h: &Hyperplane, x: &[f64]) -> Result<f64> {
    if x.len() != h.weights.len() {
        return Err(Error::DimensionMismatch { expected: h.weights.len(), found: x.len() });
    }
    Ok(dot(&h.weights, x) + h.bias)
}

/// Maximum projected-gradient violation of `dual` for the hyperplane `h`
/// on the given bags. Zero only at an exact KKT point; at most
/// `config.tolerance` whenever training reported convergence.
pub fn kkt_residual(
    h: &Hyperplane,
    dual: &DualState,
    positives: &[FeatureVector],
    negatives: &[FeatureVector],
    c: f64,
) -> Result<f64> {
    if dual.positive_count != positives.len()
        || dual.negative_count != negatives.len()
        || dual.alphas.len() != positives.len() + negatives.len()
    {
        return Err(Error::StateMismatch);
    }
    let mut worst = 0.0f64;
    for (i, alpha) in dual.alphas.iter().enumerate() {
        let (x, y) = if i < positives.len() {
            (&positives[i], 1.0)
        } else {
            (&negatives[i - positives.len()], -1.0)
        };
        if x.len() != h.weights.len() {
            return Err(Error::DimensionMismatch { expected: h.weights.len(), found: x.len() });
        }
        let g = y * (dot(&h.weights, x) + h.bias) - 1.0;
        let pg = if *alpha <= 0.0 {
            g.min(0.0)
        } else if *alpha >= c {
            g.max(0.0)
        } else {
            g
        };
        worst = worst.max(pg.abs());
    }
    Ok(worst)
}
