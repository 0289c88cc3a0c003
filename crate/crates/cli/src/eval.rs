//! Cross-validated evaluation of the pooling methods. One harness
//! computes every requested representation per fold (bag means, bag
//! maxima, max-margin descriptors, dual-coefficient descriptors, their
//! fusion, and the jointly trained variant) and classifies each through a
//! precomputed-kernel one-vs-rest machine so comparisons differ only in
//! the representation.

use std::time::Instant;

use rayon::prelude::*;

use svmp_core::dataset::{sample_bag, sample_frames, BagDataset};
use svmp_core::fusion::{
    fused_cross_gram, predict_precomputed, train_precomputed, FusedKernelConfig,
};
use svmp_core::joint::{bcd_fit, predict as joint_predict, JointConfig};
use svmp_core::kernel::{
    gram, median_heuristic_gamma, HomogeneousMap, HomogeneousMapConfig, KernelSpec,
};
use svmp_core::pool::{
    global_mean, nsvmp_pool, subtract_mean, svmp_pool, FeatureBag, NegativeBag, PoolConfig,
};
use svmp_core::rng;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Avg,
    Max,
    Svmp,
    Nsvmp,
    Fused,
    Joint,
}

impl Method {
    pub const ALL_BASELINES: [Method; 5] =
        [Method::Avg, Method::Max, Method::Svmp, Method::Nsvmp, Method::Fused];

    pub fn name(self) -> &'static str {
        match self {
            Method::Avg => "avg",
            Method::Max => "max",
            Method::Svmp => "svmp",
            Method::Nsvmp => "nsvmp",
            Method::Fused => "fused",
            Method::Joint => "joint",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "avg" => Ok(Method::Avg),
            "max" => Ok(Method::Max),
            "svmp" => Ok(Method::Svmp),
            "nsvmp" => Ok(Method::Nsvmp),
            "fused" => Ok(Method::Fused),
            "joint" => Ok(Method::Joint),
            other => Err(CliError::Usage(format!(
                "unknown method '{other}' (expected avg|max|svmp|nsvmp|fused|joint)"
            ))),
        }
    }
}

/// Kernel used by the dual-coefficient pooling path; a missing gamma is
/// resolved per fold by the median heuristic on training frames.
#[derive(Debug, Clone, Copy)]
pub enum PoolKernel {
    Linear,
    Rbf { gamma: Option<f64> },
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub folds: usize,
    pub seed: u64,
    pub pool: PoolConfig,
    pub pool_kernel: PoolKernel,
    pub hom: HomogeneousMapConfig,
    pub c2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub max_bcd_iters: usize,
    pub z_tolerance: f64,
    pub pos_bag_size: usize,
    pub neg_bag_size: usize,
    pub jobs: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: 3,
            seed: 0,
            pool: PoolConfig::default(),
            pool_kernel: PoolKernel::Rbf { gamma: None },
            hom: HomogeneousMapConfig::default(),
            c2: 10.0,
            beta1: 1.0,
            beta2: 1.0,
            max_bcd_iters: 10,
            z_tolerance: 1e-3,
            pos_bag_size: 25,
            neg_bag_size: 50,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub method: Method,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Correct test predictions over all folds combined.
    pub overall_accuracy: f64,
    pub per_class_accuracy: Vec<f64>,
    /// Rows are true classes, columns predictions, counts over all folds.
    pub confusion: Vec<Vec<usize>>,
    /// Stage wall-clock seconds, for stdout reporting only: report files
    /// must stay byte-deterministic.
    pub timings: Vec<(&'static str, f64)>,
}

/// Deterministic stratified fold assignment: within each class the
/// sequence indices are shuffled by a seed-derived stream and dealt
/// round-robin.
pub fn stratified_folds(labels: &[usize], class_count: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut assignment = vec![0usize; labels.len()];
    for class in 0..class_count {
        let mut members: Vec<usize> =
            (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let mut r = rng::seeded(rng::derive(seed, 0x5f01_d000 + class as u64));
        rng::shuffle(&mut r, &mut members);
        for (pos, &i) in members.iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    assignment
}

fn unit_norm(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    v.iter().map(|x| x / n).collect()
}

pub fn bag_mean(bag: &FeatureBag) -> Vec<f64> {
    let dim = bag.frames[0].len();
    let mut m = vec![0.0; dim];
    for f in &bag.frames {
        for (mk, fk) in m.iter_mut().zip(f) {
            *mk += fk;
        }
    }
    let n = bag.frames.len() as f64;
    m.iter().map(|x| x / n).collect()
}

pub fn bag_max(bag: &FeatureBag) -> Vec<f64> {
    let dim = bag.frames[0].len();
    let mut m = vec![f64::NEG_INFINITY; dim];
    for f in &bag.frames {
        for (mk, &fk) in m.iter_mut().zip(f) {
            *mk = mk.max(fk);
        }
    }
    m
}

/// Per-dimension min/max rescaling into [0, 1], fitted on training rows
/// and clamped below at zero on application, so signed dual-coefficient
/// vectors become valid inputs for the non-negative homogeneous map.
fn fit_shift01(rows: &[&Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let dim = rows[0].len();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for r in rows {
        for (k, &x) in r.iter().enumerate() {
            lo[k] = lo[k].min(x);
            hi[k] = hi[k].max(x);
        }
    }
    (lo, hi)
}

fn apply_shift01(row: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    row.iter()
        .enumerate()
        .map(|(k, &x)| {
            let span = hi[k] - lo[k];
            if span > 0.0 { ((x - lo[k]) / span).max(0.0) } else { 0.0 }
        })
        .collect()
}

/// Order-preserving pooling fan-out; `jobs` == 1 stays strictly serial.
pub fn pool_all<T, F>(bags: &[FeatureBag], jobs: usize, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(&FeatureBag) -> Result<T, svmp_core::Error> + Sync,
{
    if jobs <= 1 {
        return bags.iter().map(|b| f(b).map_err(CliError::from)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Data(format!("thread pool: {e}")))?;
    pool.install(|| {
        bags.par_iter().map(|b| f(b).map_err(CliError::from)).collect::<Result<Vec<T>, _>>()
    })
}

/// Seeded subsampling to the configured bag sizes: every sequence is
/// brought to `pos_bag_size` frames (with replacement only when shorter)
/// and the negative bag to `neg_bag_size`.
pub fn resample(
    ds: &BagDataset,
    pos_bag_size: usize,
    neg_bag_size: usize,
    seed: u64,
) -> Result<BagDataset, CliError> {
    let mut sequences = Vec::with_capacity(ds.sequences.len());
    for (i, bag) in ds.sequences.iter().enumerate() {
        sequences.push(sample_bag(
            bag,
            pos_bag_size,
            rng::derive(seed, 0xba6_0000 + i as u64),
        )?);
    }
    let mut r = rng::seeded(rng::derive(seed, 0x0e6_0000));
    let negative = NegativeBag {
        frames: sample_frames(&ds.negative.frames, neg_bag_size, &mut r)?,
        source_tag: ds.negative.source_tag.clone(),
    };
    Ok(BagDataset {
        dimension: ds.dimension,
        class_count: ds.class_count,
        sequences,
        negative,
        provenance: ds.provenance.clone(),
        split_assignments: ds.split_assignments.clone(),
    })
}

struct FoldData {
    train_idx: Vec<usize>,
    test_idx: Vec<usize>,
    centered: BagDataset,
}

fn split_fold(
    ds: &BagDataset,
    assignment: &[usize],
    fold: usize,
) -> Result<FoldData, CliError> {
    let train_idx: Vec<usize> =
        (0..ds.sequences.len()).filter(|&i| assignment[i] != fold).collect();
    let test_idx: Vec<usize> =
        (0..ds.sequences.len()).filter(|&i| assignment[i] == fold).collect();
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(CliError::Data(format!("fold {fold} has an empty split")));
    }
    let train_view = BagDataset {
        sequences: train_idx.iter().map(|&i| ds.sequences[i].clone()).collect(),
        ..ds.clone()
    };
    let mean = global_mean(&train_view)?;
    let centered = subtract_mean(ds, &mean)?;
    Ok(FoldData { train_idx, test_idx, centered })
}

fn rows(all: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter().map(|&i| all[i].clone()).collect()
}

fn classify_linear_gram(
    train_rows: &[Vec<f64>],
    test_rows: &[Vec<f64>],
    train_labels: &[usize],
    c2: f64,
) -> Result<Vec<usize>, CliError> {
    let k_train = gram(&KernelSpec::Linear, train_rows, train_rows)?;
    let model = train_precomputed(&k_train, train_labels, c2)?;
    let k_test = gram(&KernelSpec::Linear, test_rows, train_rows)?;
    (0..test_rows.len())
        .map(|i| {
            let row: Vec<f64> =
                (0..train_rows.len()).map(|j| k_test.get(i, j)).collect();
            predict_precomputed(&model, &row).map_err(CliError::from)
        })
        .collect()
}

fn classify_fused(
    train_svmp: &[Vec<f64>],
    train_psi: &[Vec<f64>],
    test_svmp: &[Vec<f64>],
    test_psi: &[Vec<f64>],
    train_labels: &[usize],
    cfg: &EvalConfig,
) -> Result<Vec<usize>, CliError> {
    // Both views are pre-processed (normalized / mapped) here, so the
    // fusion itself runs on plain linear sides.
    let fused = FusedKernelConfig {
        beta1: cfg.beta1,
        beta2: cfg.beta2,
        svmp_kernel: KernelSpec::Linear,
        nsvmp_kernel: KernelSpec::Linear,
        nsvmp_map: None,
    };
    let k_train = fused_cross_gram(train_svmp, train_psi, train_svmp, train_psi, &fused)?;
    let model = train_precomputed(&k_train, train_labels, cfg.c2)?;
    let k_test = fused_cross_gram(test_svmp, test_psi, train_svmp, train_psi, &fused)?;
    (0..test_svmp.len())
        .map(|i| {
            let row: Vec<f64> =
                (0..train_svmp.len()).map(|j| k_test.get(i, j)).collect();
            predict_precomputed(&model, &row).map_err(CliError::from)
        })
        .collect()
}

/// Evaluates every requested method over the same folds, sharing pooled
/// representations across methods within each fold.
pub fn evaluate_methods(
    dataset: &BagDataset,
    cfg: &EvalConfig,
    methods: &[Method],
) -> Result<Vec<EvalOutcome>, CliError> {
    dataset.validate()?;
    cfg.pool.validate()?;
    if cfg.folds < 2 {
        return Err(CliError::Usage("fold count must be at least 2".into()));
    }
    for class in 0..dataset.class_count {
        let members = dataset.sequences.iter().filter(|b| b.label == class).count();
        if members < 2 {
            return Err(CliError::Data(format!(
                "class {class} has {members} sequence(s); at least 2 are required for cross-validation"
            )));
        }
    }

    let sample_start = Instant::now();
    let ds = resample(dataset, cfg.pos_bag_size, cfg.neg_bag_size, cfg.seed)?;
    let sample_secs = sample_start.elapsed().as_secs_f64();

    let labels: Vec<usize> = ds.sequences.iter().map(|b| b.label).collect();
    let assignment = stratified_folds(&labels, ds.class_count, cfg.folds, cfg.seed);
    let d = ds.class_count;

    let need_svmp = methods
        .iter()
        .any(|m| matches!(m, Method::Svmp | Method::Fused));
    let need_nsvmp = methods
        .iter()
        .any(|m| matches!(m, Method::Nsvmp | Method::Fused));
    let hom_map = HomogeneousMap::new(cfg.hom)?;

    struct Tally {
        fold_accuracies: Vec<f64>,
        confusion: Vec<Vec<usize>>,
    }
    let mut tallies: Vec<Tally> = methods
        .iter()
        .map(|_| Tally { fold_accuracies: Vec::new(), confusion: vec![vec![0; d]; d] })
        .collect();
    let mut center_secs = 0.0;
    let mut pool_secs = 0.0;
    let mut classify_secs = 0.0;

    for fold in 0..cfg.folds {
        let center_start = Instant::now();
        let fd = split_fold(&ds, &assignment, fold)?;
        center_secs += center_start.elapsed().as_secs_f64();
        let centered = &fd.centered;
        let train_labels: Vec<usize> = fd.train_idx.iter().map(|&i| labels[i]).collect();

        let pool_start = Instant::now();
        let svmp_rows: Option<Vec<Vec<f64>>> = if need_svmp {
            let descs = pool_all(&centered.sequences, cfg.jobs, |b| {
                svmp_pool(b, &centered.negative, &cfg.pool)
            })?;
            Some(descs.iter().map(|d| unit_norm(&d.vector)).collect())
        } else {
            None
        };
        let psi_rows: Option<Vec<Vec<f64>>> = if need_nsvmp {
            let spec = match cfg.pool_kernel {
                PoolKernel::Linear => KernelSpec::Linear,
                PoolKernel::Rbf { gamma: Some(g) } => KernelSpec::Rbf { gamma: g },
                PoolKernel::Rbf { gamma: None } => {
                    // Median heuristic on a training bag plus the shared
                    // negatives: a scale estimate, not a fit, but kept
                    // strictly inside the training split anyway.
                    let first_train = &centered.sequences[fd.train_idx[0]];
                    let mut frames = first_train.frames.clone();
                    frames.extend(centered.negative.frames.iter().cloned());
                    KernelSpec::Rbf { gamma: median_heuristic_gamma(&frames) }
                }
            };
            let kcfg = PoolConfig { kernel: Some(spec), ..cfg.pool.clone() };
            let descs = pool_all(&centered.sequences, cfg.jobs, |b| {
                nsvmp_pool(b, &centered.negative, &kcfg)
            })?;
            let raw: Vec<Vec<f64>> = descs.into_iter().map(|d| d.vector).collect();
            let train_refs: Vec<&Vec<f64>> =
                fd.train_idx.iter().map(|&i| &raw[i]).collect();
            let (lo, hi) = fit_shift01(&train_refs);
            let mapped: Result<Vec<Vec<f64>>, CliError> = raw
                .iter()
                .map(|r| {
                    let shifted = apply_shift01(r, &lo, &hi);
                    Ok(unit_norm(&hom_map.apply(&shifted)?))
                })
                .collect();
            Some(mapped?)
        } else {
            None
        };
        pool_secs += pool_start.elapsed().as_secs_f64();

        for (method, tally) in methods.iter().zip(&mut tallies) {
            let classify_start = Instant::now();
            let predictions: Vec<usize> = match method {
                Method::Avg | Method::Max => {
                    let all: Vec<Vec<f64>> = centered
                        .sequences
                        .iter()
                        .map(|b| {
                            if *method == Method::Avg { bag_mean(b) } else { bag_max(b) }
                        })
                        .collect();
                    classify_linear_gram(
                        &rows(&all, &fd.train_idx),
                        &rows(&all, &fd.test_idx),
                        &train_labels,
                        cfg.c2,
                    )?
                }
                Method::Svmp => {
                    let all = svmp_rows.as_ref().expect("svmp rows computed");
                    classify_linear_gram(
                        &rows(all, &fd.train_idx),
                        &rows(all, &fd.test_idx),
                        &train_labels,
                        cfg.c2,
                    )?
                }
                Method::Nsvmp => {
                    let all = psi_rows.as_ref().expect("nsvmp rows computed");
                    classify_linear_gram(
                        &rows(all, &fd.train_idx),
                        &rows(all, &fd.test_idx),
                        &train_labels,
                        cfg.c2,
                    )?
                }
                Method::Fused => {
                    let svmp_all = svmp_rows.as_ref().expect("svmp rows computed");
                    let psi_all = psi_rows.as_ref().expect("nsvmp rows computed");
                    classify_fused(
                        &rows(svmp_all, &fd.train_idx),
                        &rows(psi_all, &fd.train_idx),
                        &rows(svmp_all, &fd.test_idx),
                        &rows(psi_all, &fd.test_idx),
                        &train_labels,
                        cfg,
                    )?
                }
                Method::Joint => {
                    let train_view = BagDataset {
                        sequences: fd
                            .train_idx
                            .iter()
                            .map(|&i| centered.sequences[i].clone())
                            .collect(),
                        ..centered.clone()
                    };
                    let jcfg = JointConfig {
                        c2: cfg.c2,
                        max_bcd_iters: cfg.max_bcd_iters,
                        z_tolerance: cfg.z_tolerance,
                        pool: cfg.pool.clone(),
                        ..JointConfig::default()
                    };
                    let (_, set, _) = bcd_fit(&train_view, &jcfg)?;
                    let test_bags: Vec<FeatureBag> = fd
                        .test_idx
                        .iter()
                        .map(|&i| centered.sequences[i].clone())
                        .collect();
                    let descs = pool_all(&test_bags, cfg.jobs, |b| {
                        svmp_pool(b, &centered.negative, &cfg.pool)
                    })?;
                    descs
                        .iter()
                        .map(|desc| joint_predict(&set, &desc.vector).map_err(CliError::from))
                        .collect::<Result<Vec<usize>, CliError>>()?
                }
            };
            classify_secs += classify_start.elapsed().as_secs_f64();

            let mut correct = 0usize;
            for (&i, &p) in fd.test_idx.iter().zip(&predictions) {
                tally.confusion[labels[i]][p] += 1;
                if p == labels[i] {
                    correct += 1;
                }
            }
            tally.fold_accuracies.push(correct as f64 / fd.test_idx.len() as f64);
        }
    }

    Ok(methods
        .iter()
        .zip(tallies)
        .map(|(&method, tally)| {
            let total: usize = tally.confusion.iter().flatten().sum();
            let diag: usize = (0..d).map(|i| tally.confusion[i][i]).sum();
            let per_class = (0..d)
                .map(|i| {
                    let row: usize = tally.confusion[i].iter().sum();
                    if row == 0 { 0.0 } else { tally.confusion[i][i] as f64 / row as f64 }
                })
                .collect();
            EvalOutcome {
                method,
                mean_accuracy: tally.fold_accuracies.iter().sum::<f64>()
                    / tally.fold_accuracies.len() as f64,
                overall_accuracy: diag as f64 / total as f64,
                fold_accuracies: tally.fold_accuracies,
                per_class_accuracy: per_class,
                confusion: tally.confusion,
                timings: vec![
                    ("sample", sample_secs),
                    ("center", center_secs),
                    ("pool", pool_secs),
                    ("classify", classify_secs),
                ],
            }
        })
        .collect())
}

pub fn evaluate(
    dataset: &BagDataset,
    cfg: &EvalConfig,
    method: Method,
) -> Result<EvalOutcome, CliError> {
    Ok(evaluate_methods(dataset, cfg, &[method])?.remove(0))
}
