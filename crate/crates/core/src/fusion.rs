//! Weighted combination of the two descriptor kernels and a precomputed-
//! kernel one-vs-rest classifier on top of the fused Gram matrix.

use alloc::vec;
use alloc::vec::Vec;

use crate::kernel::{GramMatrix, HomogeneousMap, HomogeneousMapConfig, KernelSpec};
use crate::ksvm::{self, DualSolution};
use crate::svm::SolverConfig;
use crate::{Error, FeatureVector, Result};

/// Weights and per-side kernels for the fused Gram. The default maps the
/// dual-coefficient descriptors through the homogeneous feature map and
/// takes a linear kernel on the result; setting `nsvmp_map` to `None`
/// with an RBF `nsvmp_kernel` switches that side to a raw RBF instead.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedKernelConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub svmp_kernel: KernelSpec,
    pub nsvmp_kernel: KernelSpec,
    pub nsvmp_map: Option<HomogeneousMapConfig>,
}

impl Default for FusedKernelConfig {
    fn default() -> Self {
        FusedKernelConfig {
            beta1: 1.0,
            beta2: 1.0,
            svmp_kernel: KernelSpec::Linear,
            nsvmp_kernel: KernelSpec::Linear,
            nsvmp_map: Some(HomogeneousMapConfig::default()),
        }
    }
}

impl FusedKernelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta1 >= 0.0) || !(self.beta2 >= 0.0) {
            return Err(Error::InvalidSpec("kernel weights must be non-negative".into()));
        }
        if self.beta1 + self.beta2 <= 0.0 {
            return Err(Error::InvalidSpec("at least one kernel weight must be positive".into()));
        }
        self.svmp_kernel.validate()?;
        self.nsvmp_kernel.validate()?;
        if let Some(map) = &self.nsvmp_map {
            map.validate()?;
        }
        Ok(())
    }
}

fn check_counts(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::CountMismatch { left, right });
    }
    Ok(())
}

fn mapped_side(
    cfg: &FusedKernelConfig,
    descs: &[FeatureVector],
) -> Result<Vec<FeatureVector>> {
    match &cfg.nsvmp_map {
        Some(map_cfg) => {
            let map = HomogeneousMap::new(*map_cfg)?;
            descs.iter().map(|d| map.apply(d)).collect()
        }
        None => Ok(descs.to_vec()),
    }
}

fn accumulate(
    entries: &mut [f64],
    beta: f64,
    spec: &KernelSpec,
    rows: &[FeatureVector],
    cols: &[FeatureVector],
) {
    let c = cols.len();
    for (i, x) in rows.iter().enumerate() {
        for (j, y) in cols.iter().enumerate() {
            entries[i * c + j] += beta * spec.eval_unchecked(x, y);
        }
    }
}

/// Entrywise `beta1 * K_linear-side + beta2 * K_dual-side` over one
/// descriptor list; a side with zero weight is skipped outright, so its
/// descriptors never influence the result.
pub fn fused_gram(
    svmp_descs: &[FeatureVector],
    nsvmp_descs: &[FeatureVector],
    cfg: &FusedKernelConfig,
) -> Result<GramMatrix> {
    fused_cross_gram(svmp_descs, nsvmp_descs, svmp_descs, nsvmp_descs, cfg)
}

/// Rectangular fused kernel block: rows index the first pair of lists,
/// columns the second. Used for test-against-training rows.
pub fn fused_cross_gram(
    row_svmp: &[FeatureVector],
    row_nsvmp: &[FeatureVector],
    col_svmp: &[FeatureVector],
    col_nsvmp: &[FeatureVector],
    cfg: &FusedKernelConfig,
) -> Result<GramMatrix> {
    cfg.validate()?;
    check_counts(row_svmp.len(), row_nsvmp.len())?;
    check_counts(col_svmp.len(), col_nsvmp.len())?;
    if row_svmp.is_empty() || col_svmp.is_empty() {
        return Err(Error::EmptyBag);
    }
    let mut entries = vec![0.0f64; row_svmp.len() * col_svmp.len()];
    if cfg.beta1 > 0.0 {
        accumulate(&mut entries, cfg.beta1, &cfg.svmp_kernel, row_svmp, col_svmp);
    }
    if cfg.beta2 > 0.0 {
        let rows = mapped_side(cfg, row_nsvmp)?;
        let cols = mapped_side(cfg, col_nsvmp)?;
        accumulate(&mut entries, cfg.beta2, &cfg.nsvmp_kernel, &rows, &cols);
    }
    GramMatrix::from_entries(
        entries,
        (0..row_svmp.len()).collect(),
        (0..col_svmp.len()).collect(),
    )
}

/// One-vs-rest dual solutions trained on a precomputed kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputedModel {
    pub class_ids: Vec<usize>,
    pub solutions: Vec<DualSolution>,
    pub train_count: usize,
}

/// Trains one-vs-rest kernel classifiers directly on a square Gram
/// matrix. The matrix must be positive semidefinite up to a small
/// relative slack, or training refuses to start.
pub fn train_precomputed(
    k: &GramMatrix,
    labels: &[usize],
    c: f64,
) -> Result<PrecomputedModel> {
    if !k.is_square() {
        return Err(Error::CountMismatch { left: k.rows(), right: k.cols() });
    }
    check_counts(labels.len(), k.rows())?;
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (lo, hi) = crate::linalg::eigenvalue_range(k.entries(), k.rows());
    if lo < -1e-6 * hi {
        return Err(Error::NotPsd { min_eigenvalue: lo });
    }
    let class_count = labels.iter().max().copied().unwrap_or(0) + 1;
    for class_id in 0..class_count {
        if !labels.contains(&class_id) {
            return Err(Error::MissingClass { class_id });
        }
    }
    let config = SolverConfig { c, ..SolverConfig::default() };
    let mut solutions = Vec::with_capacity(class_count);
    for class_id in 0..class_count {
        let signed: Vec<f64> =
            labels.iter().map(|&l| if l == class_id { 1.0 } else { -1.0 }).collect();
        solutions.push(ksvm::train_on_gram(k.entries(), &signed, &config)?);
    }
    Ok(PrecomputedModel {
        class_ids: (0..class_count).collect(),
        solutions,
        train_count: labels.len(),
    })
}

/// Classifies from one fused-kernel row against the training samples in
/// their fit order; ties break to the lowest class id.
pub fn predict_precomputed(model: &PrecomputedModel, k_test_row: &[f64]) -> Result<usize> {
    check_counts(k_test_row.len(), model.train_count)?;
    let mut best: Option<(f64, usize)> = None;
    for (sol, &id) in model.solutions.iter().zip(&model.class_ids) {
        let mut value = sol.bias;
        for (a, &kv) in sol.alphas.iter().zip(k_test_row) {
            if *a != 0.0 {
                value += a * kv;
            }
        }
        let better = match best {
            None => true,
            Some((bv, bid)) => value > bv || (value == bv && id < bid),
        };
        if better {
            best = Some((value, id));
        }
    }
    best.map(|(_, id)| id).ok_or(Error::EmptyDataset)
}
