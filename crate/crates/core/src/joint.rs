//! Joint training: alternate between pooling per-sequence descriptors and
//! fitting one-vs-rest classifiers, feeding each classifier back into its
//! class's bags as a virtual positive frame.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::BagDataset;
use crate::linalg;
use crate::pool::{self, PoolConfig, SVMPDescriptor};
use crate::svm::{self, Hyperplane, SolverConfig};
use crate::{Error, Result};

/// One-vs-rest linear classifiers over descriptor space.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionClassifierSet {
    pub classes: Vec<Hyperplane>,
    pub class_ids: Vec<usize>,
}

impl ActionClassifierSet {
    pub fn descriptor_dimension(&self) -> usize {
        self.classes.first().map_or(0, |h| h.weights.len())
    }
}

/// How the classifier weight vector is rescaled before insertion as a
/// virtual frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VirtualPointScale {
    UnitNorm,
    /// Match the mean norm of the bag's own (augmented) frames, so the
    /// virtual frame cannot dominate the pooled separator.
    #[default]
    BagMeanNorm,
}

/// Settings for [`bcd_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct JointConfig {
    /// Regularization for the descriptor-level classifiers.
    pub c2: f64,
    pub max_bcd_iters: usize,
    /// Relative Frobenius change of the stacked classifier parameters
    /// below which the alternation stops.
    pub z_tolerance: f64,
    pub pool: PoolConfig,
    pub virtual_point_scale: VirtualPointScale,
}

impl Default for JointConfig {
    fn default() -> Self {
        JointConfig {
            c2: 10.0,
            max_bcd_iters: 10,
            z_tolerance: 1e-3,
            pool: PoolConfig::default(),
            virtual_point_scale: VirtualPointScale::default(),
        }
    }
}

impl JointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c2 > 0.0) || !self.c2.is_finite() {
            return Err(Error::InvalidSpec("c2 must be positive and finite".into()));
        }
        if self.max_bcd_iters == 0 {
            return Err(Error::InvalidSpec("need at least one alternation".into()));
        }
        if !(self.z_tolerance > 0.0) {
            return Err(Error::InvalidSpec("z tolerance must be positive".into()));
        }
        self.pool.validate()
    }
}

/// Progress record for one alternation.
#[derive(Debug, Clone, PartialEq)]
pub struct BcdIteration {
    pub mean_fraction: f64,
    pub z_relative_change: f64,
    pub training_accuracy: f64,
}

/// Per-iteration alternation records; at most `max_bcd_iters` entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BcdHistory {
    pub iterations: Vec<BcdIteration>,
}

impl BcdHistory {
    /// Whether the final recorded change met the tolerance.
    pub fn converged(&self, z_tolerance: f64) -> bool {
        self.iterations.last().is_some_and(|it| it.z_relative_change <= z_tolerance)
    }
}

/// Trains one linear classifier per class id in `0..class_count`, class
/// members positive against everything else.
pub fn train_action_classifiers(
    descriptors: &[Vec<f64>],
    labels: &[usize],
    class_count: usize,
    c2: f64,
) -> Result<ActionClassifierSet> {
    if descriptors.is_empty() || class_count == 0 {
        return Err(Error::EmptyDataset);
    }
    if descriptors.len() != labels.len() {
        return Err(Error::CountMismatch { left: descriptors.len(), right: labels.len() });
    }
    for class_id in 0..class_count {
        if !labels.contains(&class_id) {
            return Err(Error::MissingClass { class_id });
        }
    }
    let mut classes = Vec::with_capacity(class_count);
    for class_id in 0..class_count {
        let mut positives = Vec::new();
        let mut negatives = Vec::new();
        for (d, &l) in descriptors.iter().zip(labels) {
            if l == class_id {
                positives.push(d.clone());
            } else {
                negatives.push(d.clone());
            }
        }
        if negatives.is_empty() {
            // Single-class degenerate case: everything is on the positive
            // side by construction.
            let dim = positives[0].len();
            classes.push(Hyperplane { weights: vec![0.0; dim], bias: 1.0 });
            continue;
        }
        let config = SolverConfig {
            c: c2,
            shuffle_seed: class_id as u64,
            ..SolverConfig::default()
        };
        let (h, _) = svm::train_linear_svm(&positives, &negatives, &config)?;
        classes.push(h);
    }
    Ok(ActionClassifierSet { classes, class_ids: (0..class_count).collect() })
}

/// Highest decision value wins; exact ties go to the lowest class id.
pub fn predict(set: &ActionClassifierSet, descriptor: &[f64]) -> Result<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (h, &id) in set.classes.iter().zip(&set.class_ids) {
        let value = svm::decision_value(h, descriptor)?;
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

fn stacked_parameters(set: &ActionClassifierSet) -> Vec<f64> {
    let mut flat = Vec::new();
    for h in &set.classes {
        flat.extend_from_slice(&h.weights);
        flat.push(h.bias);
    }
    flat
}

fn relative_change(old: &[f64], new: &[f64]) -> f64 {
    let mut diff = 0.0;
    for (a, b) in old.iter().zip(new) {
        diff += (a - b) * (a - b);
    }
    let base = linalg::norm(old).max(1e-12);
    crate::math::sqrt(diff) / base
}

/// Mean norm the virtual frame should take inside this bag: the average
/// length of the bag's frames once augmented with the constant coordinate.
fn bag_mean_augmented_norm(frames: &[crate::FeatureVector]) -> f64 {
    let total: f64 =
        frames.iter().map(|f| crate::math::sqrt(linalg::dot(f, f) + 1.0)).sum();
    total / frames.len() as f64
}

fn rescaled_virtual(
    weights: &[f64],
    scale: VirtualPointScale,
    bag_norm: f64,
) -> Vec<f64> {
    let n = linalg::norm(weights);
    if n == 0.0 {
        return weights.to_vec();
    }
    let target = match scale {
        VirtualPointScale::UnitNorm => 1.0,
        VirtualPointScale::BagMeanNorm => bag_norm,
    };
    weights.iter().map(|&w| w * target / n).collect()
}

/// Alternates between pooling every sequence (step a), refitting the
/// classifiers on the pooled descriptors (step b), and replacing each
/// bag's single virtual frame with its class's rescaled weight vector
/// (step c). Stops once the classifier parameters move by less than
/// `z_tolerance` relative Frobenius norm, or after `max_bcd_iters`
/// rounds; running out of rounds is reported through the history, not as
/// an error. The returned descriptors come from the final pooling pass.
pub fn bcd_fit(
    dataset: &BagDataset,
    cfg: &JointConfig,
) -> Result<(Vec<SVMPDescriptor>, ActionClassifierSet, BcdHistory)> {
    cfg.validate()?;
    dataset.validate()?;
    let labels: Vec<usize> = dataset.sequences.iter().map(|b| b.label).collect();
    let bag_norms: Vec<f64> = dataset
        .sequences
        .iter()
        .map(|b| bag_mean_augmented_norm(&b.frames))
        .collect();
    let mut virtuals: Vec<Option<Vec<f64>>> = vec![None; dataset.sequences.len()];
    let mut history = BcdHistory::default();
    let mut previous: Option<Vec<f64>> = None;

    let mut descriptors: Vec<SVMPDescriptor> = Vec::new();
    let mut classifiers: Option<ActionClassifierSet> = None;
    for _ in 0..cfg.max_bcd_iters {
        descriptors = dataset
            .sequences
            .iter()
            .zip(&virtuals)
            .map(|(bag, v)| {
                pool::svmp_pool_with_virtual(bag, &dataset.negative, &cfg.pool, v.as_deref())
            })
            .collect::<Result<_>>()?;

        let vectors: Vec<Vec<f64>> =
            descriptors.iter().map(|d| d.vector.clone()).collect();
        let set =
            train_action_classifiers(&vectors, &labels, dataset.class_count, cfg.c2)?;

        let params = stacked_parameters(&set);
        let change = match &previous {
            Some(old) => relative_change(old, &params),
            None => f64::INFINITY,
        };
        let correct = vectors
            .iter()
            .zip(&labels)
            .filter(|(v, &l)| predict(&set, v).map(|p| p == l).unwrap_or(false))
            .count();
        let mean_fraction = descriptors.iter().map(|d| d.achieved_fraction).sum::<f64>()
            / descriptors.len() as f64;
        history.iterations.push(BcdIteration {
            mean_fraction,
            z_relative_change: change,
            training_accuracy: correct as f64 / labels.len() as f64,
        });
        previous = Some(params);
        classifiers = Some(set);
        if change <= cfg.z_tolerance {
            break;
        }

        let set = classifiers.as_ref().expect("classifier set was just stored");
        for (i, bag) in dataset.sequences.iter().enumerate() {
            let weights = &set.classes[bag.label].weights;
            virtuals[i] =
                Some(rescaled_virtual(weights, cfg.virtual_point_scale, bag_norms[i]));
        }
    }

    let set = classifiers.expect("max_bcd_iters >= 1 guarantees one iteration");
    Ok((descriptors, set, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use crate::pool::{FeatureBag, NegativeBag};

    fn toy_dataset() -> BagDataset {
        // Two well-separated classes along opposite axes.
        let mut sequences = Vec::new();
        for (label, dir) in [(0usize, 1.0f64), (1, -1.0)] {
            for k in 0..3 {
                let base = dir * (1.0 + 0.1 * k as f64);
                sequences.push(FeatureBag {
                    sequence_id: alloc::format!("l{label}k{k}"),
                    label,
                    frames: vec![vec![base, 0.2], vec![base, -0.2], vec![0.0, 2.0]],
                });
            }
        }
        BagDataset {
            dimension: 2,
            class_count: 2,
            sequences,
            negative: NegativeBag {
                frames: vec![vec![0.0, 2.1], vec![0.0, 1.9]],
                source_tag: "t".to_string(),
            },
            provenance: "t".to_string(),
            split_assignments: None,
        }
    }

    #[test]
    fn single_class_always_predicted() {
        let descriptors = vec![vec![1.0, 0.0], vec![0.5, 0.5]];
        let set = train_action_classifiers(&descriptors, &[0, 0], 1, 10.0).unwrap();
        assert_eq!(predict(&set, &[9.0, -9.0]).unwrap(), 0);
    }

    #[test]
    fn separated_clusters_train_cleanly() {
        let mut descriptors = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            let wiggle = 0.01 * i as f64;
            descriptors.push(vec![1.0 + wiggle, 0.0]);
            labels.push(0usize);
            descriptors.push(vec![-1.0 - wiggle, 0.0]);
            labels.push(1usize);
        }
        let set = train_action_classifiers(&descriptors, &labels, 2, 10.0).unwrap();
        let correct = descriptors
            .iter()
            .zip(&labels)
            .filter(|(d, &l)| predict(&set, d).unwrap() == l)
            .count();
        assert_eq!(correct, descriptors.len());
    }

    #[test]
    fn contradictory_labels_force_an_error() {
        let descriptors = vec![vec![1.0, 0.0]; 4];
        let labels = vec![0usize, 1, 0, 1];
        let set = train_action_classifiers(&descriptors, &labels, 2, 10.0).unwrap();
        let correct = descriptors
            .iter()
            .zip(&labels)
            .filter(|(d, &l)| predict(&set, d).unwrap() == l)
            .count();
        assert!(correct < descriptors.len());
    }

    #[test]
    fn absent_class_is_reported() {
        let descriptors = vec![vec![1.0], vec![2.0]];
        let err = train_action_classifiers(&descriptors, &[0, 0], 2, 10.0).unwrap_err();
        assert!(matches!(err, Error::MissingClass { class_id: 1 }));
    }

    #[test]
    fn tie_goes_to_lowest_id() {
        let h0 = Hyperplane { weights: vec![1.0, 0.0], bias: 0.0 };
        let h1 = Hyperplane { weights: vec![-1.0, 0.0], bias: 0.0 };
        let set = ActionClassifierSet { classes: vec![h0, h1], class_ids: vec![0, 1] };
        // x = 0 on the first axis scores 0 for both classifiers.
        assert_eq!(predict(&set, &[0.0, 5.0]).unwrap(), 0);
    }

    #[test]
    fn single_round_matches_plain_pooling() {
        let ds = toy_dataset();
        let cfg = JointConfig { max_bcd_iters: 1, ..Default::default() };
        let (descs, _, history) = bcd_fit(&ds, &cfg).unwrap();
        assert_eq!(history.iterations.len(), 1);
        for (bag, got) in ds.sequences.iter().zip(&descs) {
            let plain = pool::svmp_pool(bag, &ds.negative, &cfg.pool).unwrap();
            assert_eq!(&plain, got);
        }
    }

    #[test]
    fn history_respects_iteration_cap() {
        let ds = toy_dataset();
        let cfg = JointConfig {
            max_bcd_iters: 4,
            z_tolerance: 1e-12,
            ..Default::default()
        };
        let (_, _, history) = bcd_fit(&ds, &cfg).unwrap();
        assert!(history.iterations.len() <= 4);
        assert!(!history.iterations.is_empty());
    }

    #[test]
    fn argmax_is_scale_invariant() {
        let h0 = Hyperplane { weights: vec![2.0, 1.0], bias: 0.1 };
        let h1 = Hyperplane { weights: vec![-1.0, 0.5], bias: -0.2 };
        let set = ActionClassifierSet {
            classes: vec![h0.clone(), h1.clone()],
            class_ids: vec![0, 1],
        };
        let scale = |h: &Hyperplane| Hyperplane {
            weights: h.weights.iter().map(|w| w * 7.5).collect(),
            bias: h.bias * 7.5,
        };
        let scaled = ActionClassifierSet {
            classes: vec![scale(&h0), scale(&h1)],
            class_ids: vec![0, 1],
        };
        for x in [[0.3, -1.0], [-0.4, 0.9], [1.0, 1.0], [0.0, 0.0]] {
            assert_eq!(predict(&set, &x).unwrap(), predict(&scaled, &x).unwrap());
        }
    }
}
