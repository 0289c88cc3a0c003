//! Dataset container and the planted-signal synthetic generator used for
//! desk-scale experiments in place of real per-frame features.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::pool::{FeatureBag, NegativeBag};
use crate::rng::{self, SeededRng};
use crate::{Error, FeatureVector, Result};

/// Labeled sequences plus the one negative bag they all share.
#[derive(Debug, Clone, PartialEq)]
pub struct BagDataset {
    pub dimension: usize,
    pub class_count: usize,
    pub sequences: Vec<FeatureBag>,
    pub negative: NegativeBag,
    pub provenance: String,
    pub split_assignments: Option<Vec<usize>>,
}

impl BagDataset {
    pub fn validate(&self) -> Result<()> {
        if self.sequences.is_empty() || self.negative.frames.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for bag in &self.sequences {
            if bag.frames.is_empty() {
                return Err(Error::EmptyBag);
            }
            if bag.label >= self.class_count {
                return Err(Error::InvalidSpec(format!(
                    "label {} outside 0..{}",
                    bag.label, self.class_count
                )));
            }
            for frame in &bag.frames {
                if frame.len() != self.dimension {
                    return Err(Error::DimensionMismatch {
                        expected: self.dimension,
                        found: frame.len(),
                    });
                }
            }
        }
        for frame in &self.negative.frames {
            if frame.len() != self.dimension {
                return Err(Error::DimensionMismatch {
                    expected: self.dimension,
                    found: frame.len(),
                });
            }
        }
        if let Some(splits) = &self.split_assignments {
            if splits.len() != self.sequences.len() {
                return Err(Error::CountMismatch {
                    left: splits.len(),
                    right: self.sequences.len(),
                });
            }
        }
        Ok(())
    }
}

/// Parameters for [`synthesize`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub class_count: usize,
    pub sequences_per_class: usize,
    pub frames_per_sequence: usize,
    pub dimension: usize,
    /// Fraction of each sequence carrying the class signal, in (0, 1].
    pub informative_fraction: f64,
    pub signal_strength: f64,
    pub noise_sigma: f64,
    pub negative_frame_count: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            class_count: 10,
            sequences_per_class: 30,
            frames_per_sequence: 25,
            dimension: 128,
            informative_fraction: 0.2,
            signal_strength: 3.0,
            noise_sigma: 0.8,
            negative_frame_count: 50,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.class_count == 0
            || self.sequences_per_class == 0
            || self.frames_per_sequence == 0
            || self.dimension == 0
            || self.negative_frame_count == 0
        {
            return Err(Error::InvalidSpec("all counts must be at least 1".into()));
        }
        if !(self.informative_fraction > 0.0 && self.informative_fraction <= 1.0) {
            return Err(Error::InvalidSpec("informative fraction must lie in (0, 1]".into()));
        }
        if self.informative_fraction * (self.frames_per_sequence as f64) < 1.0 {
            return Err(Error::InvalidSpec(
                "informative fraction times sequence length must reach 1".into(),
            ));
        }
        if !(self.noise_sigma > 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidSpec("noise sigma must be positive and finite".into()));
        }
        if !self.signal_strength.is_finite() {
            return Err(Error::InvalidSpec("signal strength must be finite".into()));
        }
        Ok(())
    }

    /// Number of informative frames per sequence: `ceil(fraction * n)`.
    pub fn informative_count(&self) -> usize {
        crate::math::ceil(self.informative_fraction * self.frames_per_sequence as f64) as usize
    }
}

/// Size of the background- and negative-prototype pools.
const BACKGROUND_POOL: usize = 24;
const NEGATIVE_POOL: usize = 24;
/// Background clutter is this many times longer than a class prototype;
/// cluttered frames then dominate averages while max-margin separators
/// stay anchored on the informative frames.
const BACKGROUND_GAIN: f64 = 4.0;

fn unit_vector(rng: &mut SeededRng, dim: usize) -> FeatureVector {
    let mut v: FeatureVector = (0..dim).map(|_| rng::normal(rng)).collect();
    let n = crate::linalg::norm(&v);
    if n > 0.0 {
        for x in &mut v {
            *x /= n;
        }
    }
    v
}

fn noisy_frame(rng: &mut SeededRng, proto: &[f64], scale: f64, sigma: f64) -> FeatureVector {
    proto.iter().map(|&p| quantize(scale * p + sigma * rng::normal(rng))).collect()
}

/// Values pass through 32-bit precision so that in-memory data matches what
/// the on-disk feature blob can represent, making round trips bit exact.
fn quantize(v: f64) -> f64 {
    v as f32 as f64
}

/// Generates a planted-signal dataset. Each class gets a unit prototype
/// direction; every sequence starts with `ceil(fraction * n)` informative
/// frames on its class prototype and fills the rest from a shared
/// background pool. The negative bag draws from its own prototype pool,
/// disjoint from every class prototype. Identical specs always produce
/// identical datasets.
pub fn synthesize(spec: &SyntheticSpec) -> Result<BagDataset> {
    spec.validate()?;
    let mut rng = rng::seeded(spec.seed);
    let p = spec.dimension;
    let s = spec.signal_strength;
    let sigma = spec.noise_sigma;

    let protos: Vec<FeatureVector> =
        (0..spec.class_count).map(|_| unit_vector(&mut rng, p)).collect();
    let scaled = |mut v: FeatureVector| {
        for x in &mut v {
            *x *= BACKGROUND_GAIN;
        }
        v
    };
    let background: Vec<FeatureVector> =
        (0..BACKGROUND_POOL).map(|_| scaled(unit_vector(&mut rng, p))).collect();
    let negative_protos: Vec<FeatureVector> =
        (0..NEGATIVE_POOL).map(|_| scaled(unit_vector(&mut rng, p))).collect();

    let n = spec.frames_per_sequence;
    let n_info = spec.informative_count();
    let mut sequences = Vec::with_capacity(spec.class_count * spec.sequences_per_class);
    for (class, proto) in protos.iter().enumerate() {
        for seq in 0..spec.sequences_per_class {
            let mut frames = Vec::with_capacity(n);
            for _ in 0..n_info {
                frames.push(noisy_frame(&mut rng, proto, s, sigma));
            }
            for _ in n_info..n {
                let idx = rng::index(&mut rng, BACKGROUND_POOL);
                frames.push(noisy_frame(&mut rng, &background[idx], s, sigma));
            }
            sequences.push(FeatureBag {
                sequence_id: format!("c{class:02}s{seq:03}"),
                label: class,
                frames,
            });
        }
    }

    let mut neg_frames = Vec::with_capacity(spec.negative_frame_count);
    for _ in 0..spec.negative_frame_count {
        let idx = rng::index(&mut rng, NEGATIVE_POOL);
        neg_frames.push(noisy_frame(&mut rng, &negative_protos[idx], s, sigma));
    }

    Ok(BagDataset {
        dimension: p,
        class_count: spec.class_count,
        sequences,
        negative: NegativeBag {
            frames: neg_frames,
            source_tag: format!("planted seed={}", spec.seed),
        },
        provenance: format!(
            "planted d={} spc={} n={} p={} rho={} s={} sigma={} neg={} seed={}",
            spec.class_count,
            spec.sequences_per_class,
            spec.frames_per_sequence,
            spec.dimension,
            spec.informative_fraction,
            spec.signal_strength,
            spec.noise_sigma,
            spec.negative_frame_count,
            spec.seed
        ),
        split_assignments: None,
    })
}

/// Samples `n` frames uniformly without replacement, falling back to
/// sampling with replacement when the source is shorter than `n`.
pub fn sample_frames(
    source: &[FeatureVector],
    n: usize,
    rng: &mut SeededRng,
) -> Result<Vec<FeatureVector>> {
    if source.is_empty() {
        return Err(Error::EmptySource);
    }
    if source.len() < n {
        return Ok((0..n).map(|_| source[rng::index(rng, source.len())].clone()).collect());
    }
    let mut order: Vec<usize> = (0..source.len()).collect();
    rng::shuffle(rng, &mut order);
    Ok(order[..n].iter().map(|&i| source[i].clone()).collect())
}

/// Seeded frame subsample of one sequence, keeping its id and label.
pub fn sample_bag(source: &FeatureBag, n: usize, seed: u64) -> Result<FeatureBag> {
    let mut rng = rng::seeded(seed);
    Ok(FeatureBag {
        sequence_id: source.sequence_id.clone(),
        label: source.label,
        frames: sample_frames(&source.frames, n, &mut rng)?,
    })
}
