//! Exact photon-number statistics for mixtures of coherent and thermal light.
//!
//! One *indistinguishable* group of sources — any number of coherent fields
//! plus any number of thermal fields detected as a single mode — is described
//! by [`ModeSpec`]: the coherent amplitudes add to one complex total α and the
//! thermal means add to one total m. Its photon-number distribution has the
//! closed form
//!
//! ```text
//! p(n) = mⁿ e^{−|α|²/m} / (π (m+1)^{n+1})
//!        · Σ_{k=0}^{n}  Γ(½+n−k) Γ(½+k) / (k! (n−k)!)
//!          · ₁F₁(½+n−k; ½; Re[α]²/(m(m+1)))
//!          · ₁F₁(½+k;   ½; Im[α]²/(m(m+1)))
//! ```
//!
//! with the Poisson, Bose-Einstein, and vacuum limits dispatched to their
//! closed forms below `DEGENERATE_EPS` (the general form divides by m).
//! Every factor is evaluated in log space and the k-sum combined with
//! log-sum-exp; the summands span hundreds of orders of magnitude by n ≈ 40.
//!
//! *Distinguishable* modes ([`DistinguishableMix`]) combine by discrete
//! convolution of their distributions: the count on the detector is the sum
//! of independent per-mode counts.
//!
//! [`reference`] holds a brute-force quadrature over the Glauber-Sudarshan
//! P-function, kept deliberately independent of the closed form; tests pit
//! the two against each other.

pub mod reference;
mod special;

pub use special::{kummer_1f1_half, log_factorial, log_gamma};

use crate::error::{Error, Result};

/// Coherent/thermal components below this dispatch to degenerate closed forms.
pub const DEGENERATE_EPS: f64 = 1e-12;

/// Default truncation index; 21 entries match the classifier's feature width.
pub const DEFAULT_N_MAX: usize = 20;

/// Ceiling for automatic truncation extension in moment computations.
pub const AUTO_EXTEND_N_MAX: usize = 512;

/// Tail-mass target when moments auto-extend the truncation.
pub const AUTO_EXTEND_TAIL: f64 = 1e-9;

/// Tail mass above which moment computation refuses to proceed.
pub const MOMENT_TAIL_LIMIT: f64 = 1e-6;

/// One indistinguishable group of sources: total coherent amplitude
/// `alpha_re + i·alpha_im` plus per-source thermal means.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    alpha_re: f64,
    alpha_im: f64,
    m_thermal: Vec<f64>,
}

impl ModeSpec {
    pub fn new(alpha_re: f64, alpha_im: f64, m_thermal: Vec<f64>) -> Result<Self> {
        if !alpha_re.is_finite() || !alpha_im.is_finite() {
            return Err(Error::domain("mode amplitude must be finite"));
        }
        for &m in &m_thermal {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::domain(format!(
                    "thermal mean photon numbers must be finite and >= 0, got {m}"
                )));
            }
        }
        Ok(ModeSpec {
            alpha_re,
            alpha_im,
            m_thermal,
        })
    }

    /// Purely coherent mode with amplitude `re + i·im`.
    pub fn coherent(re: f64, im: f64) -> Result<Self> {
        ModeSpec::new(re, im, Vec::new())
    }

    /// Single thermal source of mean `m`.
    pub fn thermal(m: f64) -> Result<Self> {
        ModeSpec::new(0.0, 0.0, vec![m])
    }

    /// The vacuum mode: p(0) = 1.
    pub fn vacuum() -> Self {
        ModeSpec {
            alpha_re: 0.0,
            alpha_im: 0.0,
            m_thermal: Vec::new(),
        }
    }

    pub fn alpha_re(&self) -> f64 {
        self.alpha_re
    }

    pub fn alpha_im(&self) -> f64 {
        self.alpha_im
    }

    pub fn thermal_means(&self) -> &[f64] {
        &self.m_thermal
    }

    /// |α_tot|².
    pub fn alpha_sq(&self) -> f64 {
        self.alpha_re * self.alpha_re + self.alpha_im * self.alpha_im
    }

    /// Σ m̄_l.
    pub fn m_tot(&self) -> f64 {
        self.m_thermal.iter().sum()
    }

    /// Mean photon number |α|² + m_tot.
    pub fn mean(&self) -> f64 {
        self.alpha_sq() + self.m_tot()
    }

    /// Same statistics with every source mean scaled by `factor` ≥ 0.
    pub fn scaled(&self, factor: f64) -> ModeSpec {
        assert!(factor.is_finite() && factor >= 0.0);
        let root = factor.sqrt();
        ModeSpec {
            alpha_re: self.alpha_re * root,
            alpha_im: self.alpha_im * root,
            m_thermal: self.m_thermal.iter().map(|m| m * factor).collect(),
        }
    }
}

/// Ordered list of mutually distinguishable modes.
#[derive(Debug, Clone, PartialEq)]
pub struct DistinguishableMix {
    modes: Vec<ModeSpec>,
}

impl DistinguishableMix {
    pub fn new(modes: Vec<ModeSpec>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::domain("a mix needs at least one mode"));
        }
        Ok(DistinguishableMix { modes })
    }

    pub fn single(mode: ModeSpec) -> Self {
        DistinguishableMix { modes: vec![mode] }
    }

    pub fn push(&mut self, mode: ModeSpec) {
        self.modes.push(mode);
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    /// Total mean photon number across modes.
    pub fn mean(&self) -> f64 {
        self.modes.iter().map(ModeSpec::mean).sum()
    }

    pub fn scaled(&self, factor: f64) -> DistinguishableMix {
        DistinguishableMix {
            modes: self.modes.iter().map(|m| m.scaled(factor)).collect(),
        }
    }
}

/// Probability vector p(0..=n_max) plus the mass lost to truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
    tail_mass: f64,
}

impl PhotonDistribution {
    /// Wraps a raw probability vector, recording 1 − Σp as tail mass.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("distribution needs at least one entry"));
        }
        let mut sum = 0.0;
        for &p in &probs {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::domain(format!("probabilities must be in [0,1], got {p}")));
            }
            sum += p;
        }
        if sum > 1.0 + 1e-12 {
            return Err(Error::domain(format!("probabilities sum to {sum} > 1")));
        }
        Ok(PhotonDistribution {
            probs,
            tail_mass: (1.0 - sum).max(0.0),
        })
    }

    /// δ_{n,k} truncated at `n_max` ≥ k.
    pub fn delta(k: usize, n_max: usize) -> Self {
        assert!(k <= n_max);
        let mut probs = vec![0.0; n_max + 1];
        probs[k] = 1.0;
        PhotonDistribution {
            probs,
            tail_mass: 0.0,
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Truncation index: entries cover n = 0..=n_max.
    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// p(n), zero beyond the truncation.
    pub fn p(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }
}

/// Moments of a (truncated) photon-number distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionStats {
    pub mean: f64,
    pub variance: f64,
    /// g² = 1 + (variance − mean) / mean².
    pub g2: f64,
}

/// p(n) for one indistinguishable mode.
pub fn pn_indistinguishable(mode: &ModeSpec, n: usize) -> f64 {
    let a2 = mode.alpha_sq();
    let m = mode.m_tot();
    if m < DEGENERATE_EPS && a2 < DEGENERATE_EPS {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if m < DEGENERATE_EPS {
        return poisson_pn(a2, n);
    }
    if a2 < DEGENERATE_EPS {
        return bose_einstein_pn(m, n);
    }
    let tables = ModeTables::build(mode, n);
    tables.pn(n)
}

/// Poisson p(n) = e^{−μ} μⁿ / n!, evaluated in log space.
pub fn poisson_pn(mu: f64, n: usize) -> f64 {
    debug_assert!(mu > 0.0);
    (-mu + n as f64 * mu.ln() - log_factorial(n)).exp()
}

/// Bose-Einstein p(n) = mⁿ / (1+m)^{n+1}, evaluated in log space.
pub fn bose_einstein_pn(m: f64, n: usize) -> f64 {
    debug_assert!(m > 0.0);
    (n as f64 * m.ln() - (n as f64 + 1.0) * (1.0 + m).ln()).exp()
}

/// Per-mode factor tables shared across n for one evaluation sweep.
///
/// The k-sum reuses ln Γ(½+j), ln j!, and the two ₁F₁ columns for
/// j = 0..=n_max, so a full distribution costs O(n_max) special-function
/// calls and O(n_max²) cheap accumulation.
struct ModeTables {
    ln_pref_const: f64, // −|α|²/m − ln π
    ln_m: f64,
    ln_m1: f64,
    ln_gamma_half: Vec<f64>,
    ln_fact: Vec<f64>,
    f_re: Vec<f64>,
    f_im: Vec<f64>,
}

impl ModeTables {
    fn build(mode: &ModeSpec, n_max: usize) -> ModeTables {
        let m = mode.m_tot();
        let denom = m * (m + 1.0);
        let x_re = mode.alpha_re() * mode.alpha_re() / denom;
        let x_im = mode.alpha_im() * mode.alpha_im() / denom;
        let mut ln_gamma_half = Vec::with_capacity(n_max + 1);
        let mut ln_fact = Vec::with_capacity(n_max + 1);
        let mut f_re = Vec::with_capacity(n_max + 1);
        let mut f_im = Vec::with_capacity(n_max + 1);
        for j in 0..=n_max {
            let a = j as f64 + 0.5;
            ln_gamma_half.push(log_gamma(a).expect("a > 0"));
            ln_fact.push(log_factorial(j));
            f_re.push(kummer_1f1_half(a, x_re).expect("valid arguments"));
            f_im.push(kummer_1f1_half(a, x_im).expect("valid arguments"));
        }
        ModeTables {
            ln_pref_const: -mode.alpha_sq() / m - std::f64::consts::PI.ln(),
            ln_m: m.ln(),
            ln_m1: (1.0 + m).ln(),
            ln_gamma_half,
            ln_fact,
            f_re,
            f_im,
        }
    }

    fn pn(&self, n: usize) -> f64 {
        debug_assert!(n < self.ln_fact.len());
        let ln_pref =
            self.ln_pref_const + n as f64 * self.ln_m - (n as f64 + 1.0) * self.ln_m1;
        // log-sum-exp over k = 0..=n
        let mut terms = Vec::with_capacity(n + 1);
        let mut max_term = f64::NEG_INFINITY;
        for k in 0..=n {
            let t = self.ln_gamma_half[n - k] + self.ln_gamma_half[k] + self.f_re[n - k]
                + self.f_im[k]
                - self.ln_fact[k]
                - self.ln_fact[n - k];
            max_term = max_term.max(t);
            terms.push(t);
        }
        let sum: f64 = terms.iter().map(|t| (t - max_term).exp()).sum();
        (ln_pref + max_term + sum.ln()).exp()
    }
}

/// Vector of p(n) for n = 0..=n_max for one mode.
pub fn distribution_indistinguishable(mode: &ModeSpec, n_max: usize) -> PhotonDistribution {
    let a2 = mode.alpha_sq();
    let m = mode.m_tot();
    let probs: Vec<f64> = if m < DEGENERATE_EPS && a2 < DEGENERATE_EPS {
        let mut v = vec![0.0; n_max + 1];
        v[0] = 1.0;
        v
    } else if m < DEGENERATE_EPS {
        (0..=n_max).map(|n| poisson_pn(a2, n)).collect()
    } else if a2 < DEGENERATE_EPS {
        (0..=n_max).map(|n| bose_einstein_pn(m, n)).collect()
    } else {
        let tables = ModeTables::build(mode, n_max);
        (0..=n_max).map(|n| tables.pn(n)).collect()
    };
    let sum: f64 = probs.iter().sum();
    PhotonDistribution {
        probs,
        tail_mass: (1.0 - sum).max(0.0),
    }
}

/// Distribution of the sum of independent counts, truncated at the smallest
/// input truncation (entries above it would be biased by missing mass).
pub fn convolve(dists: &[PhotonDistribution]) -> Result<PhotonDistribution> {
    let first = dists.first().ok_or(Error::EmptyDistributionList)?;
    let n_out = dists.iter().map(PhotonDistribution::n_max).min().unwrap();
    let mut acc: Vec<f64> = first.probs[..=n_out.min(first.n_max())].to_vec();
    acc.resize(n_out + 1, 0.0);
    for d in &dists[1..] {
        let mut next = vec![0.0; n_out + 1];
        for (i, &a) in acc.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in d.probs.iter().take(n_out + 1 - i).enumerate() {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    let sum: f64 = acc.iter().sum();
    Ok(PhotonDistribution {
        probs: acc,
        tail_mass: (1.0 - sum).max(0.0),
    })
}

/// Distribution of a distinguishable mix: per-mode closed forms convolved.
pub fn distribution_mix(mix: &DistinguishableMix, n_max: usize) -> PhotonDistribution {
    let per_mode: Vec<PhotonDistribution> = mix
        .modes()
        .iter()
        .map(|m| distribution_indistinguishable(m, n_max))
        .collect();
    convolve(&per_mode).expect("mix holds at least one mode")
}

/// Mean, variance, and g² of a truncated distribution.
///
/// Moments come from the truncated vector as-is; the tail bound keeps the
/// bias below ~1e-4 on the variance at desk-scale means.
pub fn stats(dist: &PhotonDistribution) -> Result<DistributionStats> {
    if dist.tail_mass() > MOMENT_TAIL_LIMIT {
        return Err(Error::TailTooHeavy {
            tail_mass: dist.tail_mass(),
            limit: MOMENT_TAIL_LIMIT,
        });
    }
    let mut mean = 0.0;
    let mut second = 0.0;
    for (n, &p) in dist.probs().iter().enumerate() {
        mean += n as f64 * p;
        second += (n as f64) * (n as f64) * p;
    }
    if mean <= 0.0 {
        return Err(Error::UndefinedG2);
    }
    let variance = second - mean * mean;
    Ok(DistributionStats {
        mean,
        variance,
        g2: 1.0 + (variance - mean) / (mean * mean),
    })
}

/// Stats of a mix, with the truncation extended until the tail mass drops
/// below `AUTO_EXTEND_TAIL` (or `AUTO_EXTEND_N_MAX` is reached).
pub fn mix_stats(mix: &DistinguishableMix) -> Result<DistributionStats> {
    let mut n_max = DEFAULT_N_MAX;
    loop {
        let dist = distribution_mix(mix, n_max);
        if dist.tail_mass() < AUTO_EXTEND_TAIL || n_max >= AUTO_EXTEND_N_MAX {
            return stats(&dist);
        }
        n_max = (n_max * 2).min(AUTO_EXTEND_N_MAX);
    }
}
