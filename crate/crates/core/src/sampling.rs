//! Seeded photon-counting simulation.
//!
//! Detection is modeled as D independent draws from an exact
//! [`PhotonDistribution`](crate::photon_stats::PhotonDistribution) via inverse
//! CDF. Reproducibility contract: a histogram is a pure function of
//! (master seed, stream id, distribution, D) on every platform. Stream ids
//! keep per-pixel and per-histogram draws independent without sharing RNG
//! state; the dataset generator and the raster simulator allocate them.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::photon_stats::PhotonDistribution;

/// Width of the classifier feature vector: empirical p(n) for n = 0..=20.
pub const N_FEATURES: usize = 21;

/// One independent, reproducible random stream.
///
/// ChaCha8 keyed by the master seed with the 64-bit stream id in the nonce
/// position: streams never overlap and any (seed, stream) pair can be opened
/// directly, with no sequencing between streams.
pub struct StreamRng(ChaCha8Rng);

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        StreamRng(rng)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Multiply-shift on 53 uniform bits; bias is < 2^-53 for the small n
        // used here (shuffles, tournament picks).
        (self.uniform() * n as f64) as usize % n
    }
}

/// Photon-count histogram from D measurements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhotonHistogram {
    counts: Vec<u64>,
    shots: u64,
}

impl PhotonHistogram {
    pub fn new(counts: Vec<u64>) -> Self {
        let shots = counts.iter().sum();
        PhotonHistogram { counts, shots }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    /// Empirical mean photon number.
    pub fn mean(&self) -> f64 {
        if self.shots == 0 {
            return 0.0;
        }
        let weighted: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(n, &c)| n as f64 * c as f64)
            .sum();
        weighted / self.shots as f64
    }

    /// Empirical probabilities over the histogram's own support.
    pub fn empirical_probs(&self) -> Vec<f64> {
        if self.shots == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts
            .iter()
            .map(|&c| c as f64 / self.shots as f64)
            .collect()
    }
}

/// Empirical p(0..=20); mass above n = 20 is dropped, not renormalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Exact-distribution features: the infinite-D limit of `to_features`.
    pub fn from_distribution(dist: &PhotonDistribution) -> FeatureVector {
        let mut f = [0.0; N_FEATURES];
        for (n, slot) in f.iter_mut().enumerate() {
            *slot = dist.p(n);
        }
        FeatureVector(f)
    }
}

/// D inverse-CDF draws on stream 0. See [`sample_counts_stream`].
pub fn sample_counts(dist: &PhotonDistribution, shots: u64, seed: u64) -> PhotonHistogram {
    sample_counts_stream(dist, shots, seed, 0)
}

/// D inverse-CDF draws from `dist` on the given (seed, stream).
pub fn sample_counts_stream(
    dist: &PhotonDistribution,
    shots: u64,
    seed: u64,
    stream: u64,
) -> PhotonHistogram {
    let mut rng = StreamRng::new(seed, stream);
    draw_counts(dist, shots, &mut rng)
}

/// D inverse-CDF draws continuing an already-opened stream.
///
/// Truncation-tail mass is assigned to n_max so Σ counts = D exactly; the
/// induced bias is at most tail_mass per draw.
pub fn draw_counts(dist: &PhotonDistribution, shots: u64, rng: &mut StreamRng) -> PhotonHistogram {
    let probs = dist.probs();
    let n_max = dist.n_max();
    let mut cdf = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cdf.push(acc);
    }
    let mut counts = vec![0u64; n_max + 1];
    for _ in 0..shots {
        let u = rng.uniform();
        // Expected scan length is mean+1 at desk-scale brightness.
        let n = cdf.iter().position(|&c| u < c).unwrap_or(n_max);
        counts[n] += 1;
    }
    PhotonHistogram { counts, shots }
}

/// Empirical feature vector from a histogram.
pub fn to_features(hist: &PhotonHistogram) -> Result<FeatureVector> {
    if hist.shots() == 0 {
        return Err(Error::EmptyHistogram);
    }
    let inv = 1.0 / hist.shots() as f64;
    let mut f = [0.0; N_FEATURES];
    for (slot, &c) in f.iter_mut().zip(hist.counts()) {
        *slot = c as f64 * inv;
    }
    Ok(FeatureVector(f))
}

/// (p0, p1, p2) projection used for the feature-space scatter plots.
pub fn feature_projection(features: &FeatureVector) -> (f64, f64, f64) {
    (features.0[0], features.0[1], features.0[2])
}
