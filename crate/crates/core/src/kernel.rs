//! Kernel evaluations, Gram matrices, and the homogeneous kernel map.

use alloc::vec::Vec;

use crate::linalg::{dot, eigenvalue_range, squared_distance};
use crate::math;
use crate::{Error, FeatureVector, Result};

/// Kernel selector for the SMO trainer and descriptor Grams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } if *gamma > 0.0 && gamma.is_finite() => Ok(()),
            KernelSpec::Rbf { .. } => {
                Err(Error::InvalidSpec("rbf gamma must be positive and finite".into()))
            }
        }
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Rbf { gamma } => math::exp(-gamma * squared_distance(x, y)),
        }
    }
}

/// `k(x, y)` with dimension checking.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    Ok(spec.eval_unchecked(x, y))
}

/// Dense kernel matrix between two sample lists.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: Vec<f64>,
    rows: usize,
    cols: usize,
    pub row_ids: Vec<usize>,
    pub col_ids: Vec<usize>,
}

impl GramMatrix {
    pub fn from_entries(
        entries: Vec<f64>,
        row_ids: Vec<usize>,
        col_ids: Vec<usize>,
    ) -> Result<Self> {
        if entries.len() != row_ids.len() * col_ids.len() {
            return Err(Error::CountMismatch {
                left: entries.len(),
                right: row_ids.len() * col_ids.len(),
            });
        }
        Ok(GramMatrix { entries, rows: row_ids.len(), cols: col_ids.len(), row_ids, col_ids })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols && self.row_ids == self.col_ids
    }

    /// Checks the self-Gram invariant: symmetry within 1e-10 and minimum
    /// eigenvalue at least `-1e-8` relative to the largest one.
    pub fn validate_self_gram(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::CountMismatch { left: self.rows, right: self.cols });
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > 1e-10 {
                    return Err(Error::InvalidSpec("gram matrix is not symmetric".into()));
                }
            }
        }
        let (lo, hi) = eigenvalue_range(&self.entries, self.rows);
        if lo < -1e-8 * hi.max(1.0) {
            return Err(Error::NotPsd { min_eigenvalue: lo });
        }
        Ok(())
    }
}

/// Batched kernel evaluation; row ids and column ids are the list indices.
pub fn gram(spec: &KernelSpec, xs: &[FeatureVector], ys: &[FeatureVector]) -> Result<GramMatrix> {
    spec.validate()?;
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptyBag);
    }
    let dim = xs[0].len();
    for v in xs.iter().chain(ys) {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
    }
    let mut entries = Vec::with_capacity(xs.len() * ys.len());
    for x in xs {
        for y in ys {
            entries.push(spec.eval_unchecked(x, y));
        }
    }
    GramMatrix::from_entries(entries, (0..xs.len()).collect(), (0..ys.len()).collect())
}

/// Additive homogeneous kernel family approximated by the feature map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Chi2,
    Intersection,
    JensenShannon,
}

/// Finite-dimensional map configuration. `order` cosine/sine harmonics are
/// kept per input coordinate; `period` is the log-domain sampling step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousMapConfig {
    pub family: KernelFamily,
    pub order: u32,
    pub period: f64,
}

impl Default for HomogeneousMapConfig {
    fn default() -> Self {
        HomogeneousMapConfig { family: KernelFamily::Chi2, order: 3, period: 0.6 }
    }
}

impl HomogeneousMapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::InvalidSpec("map order must be at least 1".into()));
        }
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(Error::InvalidSpec("map period must be positive".into()));
        }
        Ok(())
    }
}

/// Density (signature spectrum) of the kernel family at frequency `w`.
fn spectrum(family: KernelFamily, w: f64) -> f64 {
    match family {
        KernelFamily::Chi2 => 1.0 / math::cosh(core::f64::consts::PI * w),
        KernelFamily::Intersection => {
            2.0 / (core::f64::consts::PI * (1.0 + 4.0 * w * w))
        }
        KernelFamily::JensenShannon => {
            2.0 / (math::ln(4.0) * math::cosh(core::f64::consts::PI * w) * (1.0 + 4.0 * w * w))
        }
    }
}

/// Exact value of the additive homogeneous kernel the map approximates.
pub fn reference_eval(family: KernelFamily, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let mut total = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        if a < 0.0 || b < 0.0 {
            return Err(Error::NegativeInput { index: 0, value: a.min(b) });
        }
        total += match family {
            KernelFamily::Chi2 => {
                if a + b > 0.0 {
                    2.0 * a * b / (a + b)
                } else {
                    0.0
                }
            }
            KernelFamily::Intersection => a.min(b),
            KernelFamily::JensenShannon => {
                let s = a + b;
                let ln2 = math::ln(2.0);
                let mut t = 0.0;
                if a > 0.0 {
                    t += a / 2.0 * math::ln(s / a) / ln2;
                }
                if b > 0.0 {
                    t += b / 2.0 * math::ln(s / b) / ln2;
                }
                t
            }
        };
    }
    Ok(total)
}

/// Spectrum of the rectangularly windowed, periodized signature, obtained by
/// convolving the exact spectrum with a sinc window on a fixed quadrature
/// grid and clipping at zero. The windowing keeps the truncated map accurate
/// near the period boundary, which the bare spectrum is not.
fn windowed_spectrum(family: KernelFamily, w: f64, period: f64) -> f64 {
    let big_period = 2.0 * core::f64::consts::PI / period;
    let range = 2.0 / (big_period * 1e-2);
    let steps = 2 * 1024 + 1;
    let du = 2.0 * range / (steps - 1) as f64;
    let mut acc = 0.0;
    for k in 0..steps {
        let u = -range + k as f64 * du;
        let t = big_period * u / 2.0;
        let sinc = if t.abs() < 1e-12 { 1.0 } else { math::sin(t) / t };
        let win = sinc * big_period / (2.0 * core::f64::consts::PI);
        acc += win * spectrum(family, w + u);
    }
    (acc * du).max(0.0)
}

/// Precomputed map weights for one configuration; reuse across many vectors.
#[derive(Debug, Clone)]
pub struct HomogeneousMap {
    config: HomogeneousMapConfig,
    /// √(L·κ̂(jL)) for j = 0, then √(2L·κ̂(jL)) for j = 1..=order.
    weights: Vec<f64>,
}

impl HomogeneousMap {
    pub fn new(config: HomogeneousMapConfig) -> Result<Self> {
        config.validate()?;
        let l = config.period;
        let mut weights = Vec::with_capacity(config.order as usize + 1);
        for j in 0..=config.order {
            let kappa = windowed_spectrum(config.family, j as f64 * l, l);
            let scale = if j == 0 { l } else { 2.0 * l };
            weights.push(math::sqrt(scale * kappa));
        }
        Ok(HomogeneousMap { config, weights })
    }

    pub fn config(&self) -> &HomogeneousMapConfig {
        &self.config
    }

    /// Output length for a `p`-dimensional input.
    pub fn output_len(&self, p: usize) -> usize {
        p * (2 * self.config.order as usize + 1)
    }

    /// Maps one non-negative vector; a zero coordinate maps to a zero block.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let order = self.config.order as usize;
        let mut out = Vec::with_capacity(self.output_len(x.len()));
        for (i, &v) in x.iter().enumerate() {
            if v < 0.0 {
                return Err(Error::NegativeInput { index: i, value: v });
            }
            if v == 0.0 {
                out.extend(core::iter::repeat_n(0.0, 2 * order + 1));
                continue;
            }
            let sqrt_v = math::sqrt(v);
            let log_v = math::ln(v);
            out.push(sqrt_v * self.weights[0]);
            for j in 1..=order {
                let phase = j as f64 * self.config.period * log_v;
                let amp = sqrt_v * self.weights[j];
                out.push(amp * math::cos(phase));
                out.push(amp * math::sin(phase));
            }
        }
        Ok(out)
    }
}

/// One-shot map application; builds the weight table each call.
pub fn homogeneous_map(config: &HomogeneousMapConfig, x: &[f64]) -> Result<Vec<f64>> {
    HomogeneousMap::new(*config)?.apply(x)
}

/// Default rbf bandwidth: `1/(p · median pairwise squared distance)` over a
/// deterministic subset of at most 256 samples; falls back to `1/p` when the
/// median vanishes.
pub fn median_heuristic_gamma(samples: &[FeatureVector]) -> f64 {
    let p = samples.first().map(|v| v.len()).unwrap_or(0).max(1) as f64;
    let stride = samples.len().div_ceil(256).max(1);
    let subset: Vec<&FeatureVector> = samples.iter().step_by(stride).take(256).collect();
    let mut dists = Vec::with_capacity(subset.len() * (subset.len().saturating_sub(1)) / 2);
    for i in 0..subset.len() {
        for j in (i + 1)..subset.len() {
            dists.push(squared_distance(subset[i], subset[j]));
        }
    }
    if dists.is_empty() {
        return 1.0 / p;
    }
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let median = if dists.len() % 2 == 1 {
        dists[dists.len() / 2]
    } else {
        0.5 * (dists[dists.len() / 2 - 1] + dists[dists.len() / 2])
    };
    if median > 0.0 {
        1.0 / (p * median)
    } else {
        1.0 / p
    }
}
