//! Descriptor pooling: grow C until the trained separator puts at least a
//! fraction eta of the bag on its positive side, then keep the model
//! parameters as the sequence descriptor.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::kernel::KernelSpec;
use crate::ksvm;
use crate::svm::{self, SolverConfig};
use crate::{Error, FeatureVector, Result};

/// One sequence's sampled frames plus its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBag {
    pub sequence_id: String,
    pub label: usize,
    pub frames: Vec<FeatureVector>,
}

/// The negative bag shared by every pooling call in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeBag {
    pub frames: Vec<FeatureVector>,
    pub source_tag: String,
}

/// Pooling loop settings. With `eta` set, C grows geometrically from
/// `c_init` until the eta constraint holds or C passes `c_cap`; with
/// `c_fixed` set, exactly one solve runs at that C.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolConfig {
    pub eta: Option<f64>,
    pub c_init: f64,
    pub growth: f64,
    pub c_cap: f64,
    pub c_fixed: Option<f64>,
    pub solver: SolverConfig,
    /// Kernel for the dual-coefficient pooling path.
    pub kernel: Option<KernelSpec>,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig {
            eta: Some(0.9),
            c_init: 1e-4,
            growth: 10.0,
            c_cap: 1e4,
            c_fixed: None,
            solver: SolverConfig::default(),
            kernel: None,
        }
    }
}

impl PoolConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::InvalidSpec("eta must lie in (0, 1]".into()));
            }
        } else if self.c_fixed.is_none() {
            return Err(Error::InvalidSpec("either eta or a fixed C is required".into()));
        }
        if let Some(cf) = self.c_fixed {
            if !(cf > 0.0) || !cf.is_finite() {
                return Err(Error::InvalidSpec("fixed C must be positive and finite".into()));
            }
        }
        if !(self.c_init > 0.0) || !(self.c_cap > 0.0) || self.c_init > self.c_cap {
            return Err(Error::InvalidSpec("need 0 < c_init <= c_cap".into()));
        }
        if !(self.growth > 1.0) {
            return Err(Error::InvalidSpec("growth must exceed 1".into()));
        }
        self.solver.validate()?;
        if let Some(k) = &self.kernel {
            k.validate()?;
        }
        Ok(())
    }
}

/// Linear pooling result: the separator as a `(p+1)`-vector `[w; b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SVMPDescriptor {
    pub vector: Vec<f64>,
    pub satisfied: bool,
    pub final_c: f64,
    pub achieved_fraction: f64,
    /// Frames with non-negative decision value at the final solve; when a
    /// virtual frame was present it occupies the last slot.
    pub selected: Vec<bool>,
}

/// Kernel pooling result: signed dual coefficients then the bias,
/// `n + |negative| + 1` entries for every bag of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct NSVMPDescriptor {
    pub vector: Vec<f64>,
    pub satisfied: bool,
    pub final_c: f64,
    pub achieved_fraction: f64,
    pub selected: Vec<bool>,
}

/// Fraction of frames with decision value `>= 0`; boundary frames count as
/// selected.
pub fn positive_fraction(h: &svm::Hyperplane, bag: &FeatureBag) -> Result<f64> {
    let mut selected = 0usize;
    for frame in &bag.frames {
        if svm::decision_value(h, frame)? >= 0.0 {
            selected += 1;
        }
    }
    Ok(selected as f64 / bag.frames.len() as f64)
}

fn selection_fraction(decisions: &[f64]) -> (Vec<bool>, f64) {
    let selected: Vec<bool> = decisions.iter().map(|&d| d >= 0.0).collect();
    let count = selected.iter().filter(|&&s| s).count();
    (selected, count as f64 / decisions.len() as f64)
}

/// Runs the C schedule: a single fixed solve, or geometric growth with the
/// repeat-until exit `fraction >= eta || C > c_cap`. Returns the last
/// solve's payload. At least one solve always happens.
fn c_schedule<T>(
    cfg: &PoolConfig,
    mut solve: impl FnMut(f64) -> Result<(T, f64)>,
) -> Result<(T, f64, f64, bool)> {
    let eta = cfg.eta.unwrap_or(0.0);
    if let Some(fixed) = cfg.c_fixed {
        let (payload, fraction) = solve(fixed)?;
        return Ok((payload, fraction, fixed, fraction >= eta));
    }
    let mut c = cfg.c_init;
    loop {
        c *= cfg.growth;
        let (payload, fraction) = solve(c)?;
        if fraction >= eta {
            return Ok((payload, fraction, c, true));
        }
        if c > cfg.c_cap {
            return Ok((payload, fraction, c, false));
        }
    }
}

/// Pools one bag against the shared negatives with the linear solver.
pub fn svmp_pool(
    bag: &FeatureBag,
    negatives: &NegativeBag,
    cfg: &PoolConfig,
) -> Result<SVMPDescriptor> {
    svmp_pool_with_virtual(bag, negatives, cfg, None)
}

/// As [`svmp_pool`], with an optional virtual positive frame appended after
/// the real frames. The virtual frame lives in augmented space (length
/// `p + 1`), as do the real frames once the solver extends them, so the
/// solve runs un-augmented on explicit `(p+1)`-vectors and the learned
/// weight vector is the descriptor directly.
pub fn svmp_pool_with_virtual(
    bag: &FeatureBag,
    negatives: &NegativeBag,
    cfg: &PoolConfig,
    virtual_frame: Option<&[f64]>,
) -> Result<SVMPDescriptor> {
    cfg.validate()?;
    if bag.frames.is_empty() || negatives.frames.is_empty() {
        return Err(Error::EmptyBag);
    }
    let p = bag.frames[0].len();
    if let Some(v) = virtual_frame {
        if v.len() != p + 1 {
            return Err(Error::DimensionMismatch { expected: p + 1, found: v.len() });
        }
    }

    let mut points = svm::augment(&bag.frames);
    if let Some(v) = virtual_frame {
        points.push(v.to_vec());
    }
    let bag_count = points.len();
    points.extend(svm::augment(&negatives.frames));
    let mut labels = vec![1.0; bag_count];
    labels.extend(vec![-1.0; negatives.frames.len()]);

    let mut solver = cfg.solver.clone();
    // The selection fraction is always over the caller's real frames; a
    // virtual frame trains as a positive but is bookkeeping, not data.
    let real_count = bag.frames.len();
    let (payload, fraction, final_c, satisfied) = c_schedule(cfg, |c| {
        solver.c = c;
        let (w, _, _) = svm::train_raw(&points, &labels, &solver)?;
        let decisions: Vec<f64> =
            points[..real_count].iter().map(|x| crate::linalg::dot(&w, x)).collect();
        let (selected, fraction) = selection_fraction(&decisions);
        Ok(((w, selected), fraction))
    })?;
    let (vector, selected) = payload;
    Ok(SVMPDescriptor { vector, satisfied, final_c, achieved_fraction: fraction, selected })
}

/// Pools one bag with the kernel solver; the descriptor is the signed dual
/// coefficient vector over (bag frames, negative frames) plus the bias.
pub fn nsvmp_pool(
    bag: &FeatureBag,
    negatives: &NegativeBag,
    cfg: &PoolConfig,
) -> Result<NSVMPDescriptor> {
    cfg.validate()?;
    let spec = cfg
        .kernel
        .ok_or_else(|| Error::InvalidSpec("kernel pooling requires a kernel".into()))?;
    if bag.frames.is_empty() || negatives.frames.is_empty() {
        return Err(Error::EmptyBag);
    }
    let n = bag.frames.len();
    let m = negatives.frames.len();
    let total = n + m;
    let dim = bag.frames[0].len();
    let mut points: Vec<&FeatureVector> = bag.frames.iter().collect();
    points.extend(negatives.frames.iter());
    for x in &points {
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
    }
    let mut kmat = vec![0.0f64; total * total];
    for i in 0..total {
        for j in i..total {
            let v = spec.eval_unchecked(points[i], points[j]);
            kmat[i * total + j] = v;
            kmat[j * total + i] = v;
        }
    }
    let mut labels = vec![1.0; n];
    labels.extend(vec![-1.0; m]);

    let mut solver = cfg.solver.clone();
    let (payload, fraction, final_c, satisfied) = c_schedule(cfg, |c| {
        solver.c = c;
        let sol = ksvm::train_on_gram(&kmat, &labels, &solver)?;
        // Decision on bag frame i is a kernel-matrix row product, so the
        // loop reuses the precomputed Gram instead of re-evaluating kernels.
        let decisions: Vec<f64> = (0..n)
            .map(|i| {
                let mut v = sol.bias;
                for (t, a) in sol.alphas.iter().enumerate() {
                    if *a != 0.0 {
                        v += a * kmat[i * total + t];
                    }
                }
                v
            })
            .collect();
        let (selected, fraction) = selection_fraction(&decisions);
        Ok(((sol, selected), fraction))
    })?;
    let (sol, selected) = payload;
    let mut vector = sol.alphas;
    vector.push(sol.bias);
    Ok(NSVMPDescriptor {
        vector,
        satisfied,
        final_c,
        achieved_fraction: fraction,
        selected,
    })
}

/// Mean of every frame in the dataset: all positive-bag frames plus the
/// negative bag. Call it on the training split and keep the mean with the
/// model for test-time reuse.
pub fn global_mean(dataset: &crate::dataset::BagDataset) -> Result<Vec<f64>> {
    let mut mean = vec![0.0f64; dataset.dimension];
    let mut count = 0usize;
    for bag in &dataset.sequences {
        for frame in &bag.frames {
            crate::linalg::axpy(1.0, frame, &mut mean);
            count += 1;
        }
    }
    for frame in &dataset.negative.frames {
        crate::linalg::axpy(1.0, frame, &mut mean);
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyDataset);
    }
    for v in &mut mean {
        *v /= count as f64;
    }
    Ok(mean)
}

/// Subtracts a stored mean from every frame, returning the shifted dataset.
pub fn subtract_mean(
    dataset: &crate::dataset::BagDataset,
    mean: &[f64],
) -> Result<crate::dataset::BagDataset> {
    if mean.len() != dataset.dimension {
        return Err(Error::DimensionMismatch { expected: dataset.dimension, found: mean.len() });
    }
    let mut out = dataset.clone();
    for bag in &mut out.sequences {
        for frame in &mut bag.frames {
            for (v, m) in frame.iter_mut().zip(mean) {
                *v -= m;
            }
        }
    }
    for frame in &mut out.negative.frames {
        for (v, m) in frame.iter_mut().zip(mean) {
            *v -= m;
        }
    }
    Ok(out)
}

/// Centers the dataset on its own global mean and returns the mean used.
pub fn centralize(
    dataset: &crate::dataset::BagDataset,
) -> Result<(crate::dataset::BagDataset, Vec<f64>)> {
    let mean = global_mean(dataset)?;
    let shifted = subtract_mean(dataset, &mean)?;
    Ok((shifted, mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn bag(frames: Vec<FeatureVector>) -> FeatureBag {
        FeatureBag { sequence_id: "t".to_string(), label: 0, frames }
    }

    fn neg(frames: Vec<FeatureVector>) -> NegativeBag {
        NegativeBag { frames, source_tag: "t".to_string() }
    }

    #[test]
    fn fraction_counts_boundary_as_positive() {
        let h = svm::Hyperplane { weights: vec![1.0, 0.0], bias: 0.0 };
        let b = bag(vec![vec![1.0, 0.0], vec![-1.0, 0.0]]);
        assert_eq!(positive_fraction(&h, &b).unwrap(), 0.5);
        let b = bag(vec![vec![0.0, 3.0], vec![0.0, -3.0]]);
        assert_eq!(positive_fraction(&h, &b).unwrap(), 1.0);
    }

    #[test]
    fn tiny_eta_stops_after_first_solve() {
        let cfg = PoolConfig { eta: Some(1e-9), ..Default::default() };
        let b = bag(vec![vec![1.0], vec![0.9]]);
        let n = neg(vec![vec![-1.0]]);
        let d = svmp_pool(&b, &n, &cfg).unwrap();
        assert!(d.satisfied);
        let expected = cfg.c_init * cfg.growth;
        assert!((d.final_c - expected).abs() < 1e-18);
    }

    #[test]
    fn immediate_cap_still_returns_descriptor() {
        let cfg = PoolConfig {
            eta: Some(1.0),
            c_init: 1e-4,
            c_cap: 1e-4,
            ..Default::default()
        };
        // One positive frame outnumbered by three coincident negatives:
        // its decision value stays strictly negative, so eta = 1 fails and
        // the cap forces an exit after the single scheduled solve.
        let b = bag(vec![vec![0.5]]);
        let n = neg(vec![vec![0.5], vec![0.5], vec![0.5]]);
        let d = svmp_pool(&b, &n, &cfg).unwrap();
        assert!(!d.satisfied);
        assert_eq!(d.achieved_fraction, 0.0);
        assert!((d.final_c - cfg.growth * cfg.c_init).abs() < 1e-18);
        assert_eq!(d.vector.len(), 2);
    }

    #[test]
    fn fixed_c_runs_single_solve() {
        let cfg = PoolConfig { eta: None, c_fixed: Some(10.0), ..Default::default() };
        let b = bag(vec![vec![1.0]]);
        let n = neg(vec![vec![-1.0]]);
        let d = svmp_pool(&b, &n, &cfg).unwrap();
        assert!(d.satisfied);
        assert_eq!(d.final_c, 10.0);
        assert_eq!(d.achieved_fraction, 1.0);
    }

    #[test]
    fn descriptor_invariants_hold() {
        let cfg = PoolConfig::default();
        let b = bag(vec![vec![1.0, 0.2], vec![0.8, -0.1], vec![1.2, 0.1]]);
        let n = neg(vec![vec![-1.0, 0.0], vec![-0.8, 0.3]]);
        let d = svmp_pool(&b, &n, &cfg).unwrap();
        let count = d.selected.iter().filter(|&&s| s).count();
        assert_eq!(d.achieved_fraction, count as f64 / d.selected.len() as f64);
        assert_eq!(d.satisfied, d.achieved_fraction >= 0.9);
        assert_eq!(d.vector.len(), 3);
    }

    #[test]
    fn nsvmp_matches_dimension_contract() {
        let cfg = PoolConfig { kernel: Some(KernelSpec::Linear), ..Default::default() };
        let b = bag(vec![vec![1.0, 0.1], vec![0.9, -0.2]]);
        let n = neg(vec![vec![-1.0, 0.0], vec![-0.7, 0.2], vec![-0.9, 0.4]]);
        let d = nsvmp_pool(&b, &n, &cfg).unwrap();
        assert_eq!(d.vector.len(), 2 + 3 + 1);
    }

    #[test]
    fn negative_bag_unchanged_by_pooling() {
        let cfg = PoolConfig::default();
        let n = neg(vec![vec![-1.0, 0.0], vec![-0.8, 0.3]]);
        let before = n.clone();
        for frames in [
            vec![vec![1.0, 0.2], vec![0.8, -0.1]],
            vec![vec![0.3, 0.9], vec![0.1, 1.1]],
        ] {
            svmp_pool(&bag(frames), &n, &cfg).unwrap();
        }
        assert_eq!(n, before);
    }

    #[test]
    fn centralize_zeroes_the_global_mean() {
        let ds = crate::dataset::BagDataset {
            dimension: 2,
            class_count: 1,
            sequences: vec![bag(vec![vec![1.0, 2.0], vec![3.0, 4.0]])],
            negative: neg(vec![vec![5.0, 6.0]]),
            provenance: "t".to_string(),
            split_assignments: None,
        };
        let (shifted, mean) = centralize(&ds).unwrap();
        assert_eq!(mean, vec![3.0, 4.0]);
        let back = global_mean(&shifted).unwrap();
        assert!(back.iter().all(|v| v.abs() < 1e-10));
    }
}
