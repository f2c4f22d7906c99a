//! Decomposition of a measured photon-number distribution into light sources.
//!
//! A pixel's distribution is modeled as up to three distinguishable modes,
//! each holding up to one coherent and up to two thermal indistinguishable
//! sources. The fit is a constrained linear search: every candidate
//! allocation of mean photon numbers that sums to the measured mean (on a
//! fixed grid) is scored by the root-sum-square residual between the
//! measured p(n) and the candidate's theory distribution over n = 0..=6,
//! and the minimum wins.
//!
//! Within one mode only the thermal total is observable: the closed-form
//! p(n) depends on (|α|², m_tot) alone, so splitting m_tot across two
//! thermal sources never changes the objective. Candidates therefore
//! enumerate per-mode (coherent, thermal-total) pairs, and the preference
//! for fewer active sources resolves every split to a single thermal
//! source. Allocations are held as integer grid units so that equal sums
//! are bitwise-equal means, making exhaustive-search comparisons exact.

use crate::error::{Error, Result};
use crate::photon_stats::{distribution_indistinguishable, DistinguishableMix, ModeSpec, PhotonDistribution};

/// Mean-photon grid resolution of the linear search.
pub const DEFAULT_GRID_STEP: f64 = 0.05;

/// The residual is summed over n = 0..=6.
pub const DEFAULT_N_FIT_MAX: usize = 6;

/// Distinguishable modes per candidate.
pub const MAX_MODES: usize = 3;

/// Objectives closer than this are ties, resolved toward fewer sources.
pub const OBJECTIVE_TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub grid_step: f64,
    pub n_fit_max: usize,
    pub max_modes: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            grid_step: DEFAULT_GRID_STEP,
            n_fit_max: DEFAULT_N_FIT_MAX,
            max_modes: MAX_MODES,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(Error::domain("grid_step must be positive and finite"));
        }
        if self.n_fit_max == 0 {
            return Err(Error::domain("n_fit_max must be at least 1"));
        }
        if self.max_modes == 0 || self.max_modes > MAX_MODES {
            return Err(Error::domain(format!(
                "max_modes must be in 1..={MAX_MODES}"
            )));
        }
        Ok(())
    }
}

/// One mode's source means in grid units; `thermal1 >= thermal2` always.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ModeUnits {
    coherent: u32,
    thermal1: u32,
    thermal2: u32,
}

impl ModeUnits {
    fn m_units(self) -> u32 {
        self.thermal1 + self.thermal2
    }

    /// Modes with equal keys have identical distributions.
    fn key(self) -> (u32, u32) {
        (self.coherent, self.m_units())
    }

    fn active_sources(self) -> usize {
        usize::from(self.coherent > 0)
            + usize::from(self.thermal1 > 0)
            + usize::from(self.thermal2 > 0)
    }
}

/// A candidate source allocation on the search grid.
///
/// Canonical form: thermal entries descending within each mode, modes
/// descending by (coherent, thermal-total). Means are exposed in photons;
/// the representation stays in integer grid units.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationCandidate {
    step: f64,
    modes: Vec<ModeUnits>,
}

impl AllocationCandidate {
    /// Builds from per-mode (coherent, thermal1, thermal2) grid units.
    pub fn from_units(step: f64, modes: &[(u32, u32, u32)]) -> Result<AllocationCandidate> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::domain("grid step must be positive and finite"));
        }
        if modes.is_empty() || modes.len() > MAX_MODES {
            return Err(Error::domain(format!(
                "allocation needs 1..={MAX_MODES} modes, got {}",
                modes.len()
            )));
        }
        let mut modes: Vec<ModeUnits> = modes
            .iter()
            .map(|&(c, t1, t2)| ModeUnits {
                coherent: c,
                thermal1: t1.max(t2),
                thermal2: t1.min(t2),
            })
            .collect();
        modes.sort_by(|a, b| b.key().cmp(&a.key()));
        Ok(AllocationCandidate { step, modes })
    }

    pub fn grid_step(&self) -> f64 {
        self.step
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Per-mode (coherent, thermal1, thermal2) means in photons.
    pub fn mode_means(&self) -> Vec<(f64, f64, f64)> {
        self.modes
            .iter()
            .map(|m| {
                (
                    m.coherent as f64 * self.step,
                    m.thermal1 as f64 * self.step,
                    m.thermal2 as f64 * self.step,
                )
            })
            .collect()
    }

    /// Total allocated mean; integer units keep equal sums bitwise equal.
    pub fn total_mean(&self) -> f64 {
        let units: u32 = self.modes.iter().map(|m| m.coherent + m.m_units()).sum();
        units as f64 * self.step
    }

    /// Number of strictly positive source means.
    pub fn active_sources(&self) -> usize {
        self.modes.iter().map(|m| m.active_sources()).sum()
    }

    /// The distinguishable mix this allocation describes.
    pub fn to_mix(&self) -> DistinguishableMix {
        let modes = self
            .modes
            .iter()
            .map(|m| {
                let mut thermal = Vec::new();
                for units in [m.thermal1, m.thermal2] {
                    if units > 0 {
                        thermal.push(units as f64 * self.step);
                    }
                }
                let alpha = (m.coherent as f64 * self.step).sqrt();
                ModeSpec::new(alpha, 0.0, thermal).expect("grid means are finite and nonnegative")
            })
            .collect();
        DistinguishableMix::new(modes).expect("allocation has at least one mode")
    }
}

/// Result of [`fit_distribution`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub best: AllocationCandidate,
    /// Root-sum-square residual over the fit window.
    pub objective: f64,
    /// Best allocation's distribution over the input's full support.
    pub theory: PhotonDistribution,
}

/// Mean photon number of measured probabilities over their support.
pub fn measured_mean(p_exp: &[f64]) -> f64 {
    p_exp
        .iter()
        .enumerate()
        .map(|(n, &p)| n as f64 * p)
        .sum()
}

/// p(0..=n_max) of a single mode given in grid units. Both the linear search
/// and [`allocation_objective`] funnel through here, so equal unit totals
/// produce bitwise-identical distributions.
fn mode_probs(coherent_units: u32, m_units: u32, step: f64, n_max: usize) -> Vec<f64> {
    let alpha = (coherent_units as f64 * step).sqrt();
    let thermal = if m_units == 0 {
        Vec::new()
    } else {
        vec![m_units as f64 * step]
    };
    let mode = ModeSpec::new(alpha, 0.0, thermal).expect("grid means are finite and nonnegative");
    distribution_indistinguishable(&mode, n_max).probs().to_vec()
}

/// Truncated convolution; entries below the cutoff are exact because they
/// only draw on lower-index factors.
fn convolve_window(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for (n, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in 0..=n {
            acc += a[k] * b[n - k];
        }
        *slot = acc;
    }
    out
}

/// Root-sum-square residual over n = 0..=n_fit_max, folding modes left to
/// right in the candidate's canonical order.
fn objective_over(mode_probs: &[&[f64]], p_exp: &[f64], n_fit_max: usize) -> f64 {
    let mut conv = mode_probs[0].to_vec();
    for probs in &mode_probs[1..] {
        conv = convolve_window(&conv, probs);
    }
    let mut ss = 0.0;
    for n in 0..=n_fit_max {
        let d = p_exp[n] - conv[n];
        ss += d * d;
    }
    ss.sqrt()
}

/// Objective of one explicit allocation against measured probabilities.
/// Exhaustive-search checks call this on every candidate they build; it is
/// bitwise-consistent with the objective [`fit_distribution`] minimizes.
pub fn allocation_objective(
    alloc: &AllocationCandidate,
    p_exp: &[f64],
    n_fit_max: usize,
) -> Result<f64> {
    check_support(p_exp, n_fit_max)?;
    let probs: Vec<Vec<f64>> = alloc
        .modes
        .iter()
        .map(|m| mode_probs(m.coherent, m.m_units(), alloc.step, n_fit_max))
        .collect();
    let refs: Vec<&[f64]> = probs.iter().map(Vec::as_slice).collect();
    Ok(objective_over(&refs, p_exp, n_fit_max))
}

fn check_support(p_exp: &[f64], n_fit_max: usize) -> Result<()> {
    if p_exp.len() <= n_fit_max {
        return Err(Error::InsufficientSupport {
            have: p_exp.len().saturating_sub(1),
            need: n_fit_max,
        });
    }
    Ok(())
}

/// Fits a measured distribution (or feature vector) by linear search over
/// all grid allocations summing to the measured mean.
///
/// Ties within [`OBJECTIVE_TIE_EPS`] go to the candidate with fewer active
/// sources, then to the earlier one in enumeration order, so e.g. an exact
/// Poisson input resolves to one coherent source rather than to any of the
/// equivalent multi-mode coherent splits.
pub fn fit_distribution(p_exp: &[f64], cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    if p_exp.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::domain(
            "measured probabilities must be finite and nonnegative",
        ));
    }
    check_support(p_exp, cfg.n_fit_max)?;
    let mean = measured_mean(p_exp);
    if mean <= 0.0 {
        return Err(Error::ZeroMean);
    }
    let total_units = (mean / cfg.grid_step).round() as u32;

    let mut search = Search {
        p_exp,
        cfg,
        total_units,
        cache: vec![None; ((total_units + 1) * (total_units + 1)) as usize],
        best: None,
    };
    if total_units == 0 {
        // Mean below half a grid step: the only candidate is vacuum.
        search.consider(&[ModeUnits {
            coherent: 0,
            thermal1: 0,
            thermal2: 0,
        }]);
    } else {
        search.enumerate();
    }
    let (modes, objective) = search.best.expect("at least one candidate is always scored");

    let best = AllocationCandidate {
        step: cfg.grid_step,
        modes,
    };
    let theory = crate::photon_stats::distribution_mix(&best.to_mix(), p_exp.len() - 1);
    Ok(FitResult {
        best,
        objective,
        theory,
    })
}

struct Search<'a> {
    p_exp: &'a [f64],
    cfg: &'a FitConfig,
    total_units: u32,
    /// Per-mode distributions indexed by coherent·(total+1)+thermal.
    cache: Vec<Option<Box<[f64]>>>,
    best: Option<(Vec<ModeUnits>, f64)>,
}

impl Search<'_> {
    /// Walks every multiset of 1..=max_modes nonempty modes whose units sum
    /// to the measured total. Modes are generated in descending key order,
    /// which both deduplicates multisets and matches the canonical form.
    fn enumerate(&mut self) {
        let total = self.total_units;
        for a2 in (0..=total).rev() {
            self.consider(&[mode_units(a2, total - a2)]);
        }
        if self.cfg.max_modes < 2 || total < 2 {
            return;
        }
        for t1 in 1..total {
            let t2 = total - t1;
            for a2_1 in 0..=t1 {
                let m1 = mode_units(a2_1, t1 - a2_1);
                for a2_2 in 0..=t2 {
                    let m2 = mode_units(a2_2, t2 - a2_2);
                    if m2.key() > m1.key() {
                        continue;
                    }
                    self.consider(&[m1, m2]);
                }
            }
        }
        if self.cfg.max_modes < 3 || total < 3 {
            return;
        }
        for t1 in 1..=total - 2 {
            for t2 in 1..=total - t1 - 1 {
                let t3 = total - t1 - t2;
                for a2_1 in 0..=t1 {
                    let m1 = mode_units(a2_1, t1 - a2_1);
                    for a2_2 in 0..=t2 {
                        let m2 = mode_units(a2_2, t2 - a2_2);
                        if m2.key() > m1.key() {
                            continue;
                        }
                        for a2_3 in 0..=t3 {
                            let m3 = mode_units(a2_3, t3 - a2_3);
                            if m3.key() > m2.key() {
                                continue;
                            }
                            self.consider(&[m1, m2, m3]);
                        }
                    }
                }
            }
        }
    }

    fn consider(&mut self, modes: &[ModeUnits]) {
        for m in modes {
            self.ensure_cached(m.coherent, m.m_units());
        }
        let mut refs: [&[f64]; MAX_MODES] = [&[]; MAX_MODES];
        for (i, m) in modes.iter().enumerate() {
            refs[i] = self.cache[self.cache_index(m)].as_deref().unwrap();
        }
        let objective = objective_over(&refs[..modes.len()], self.p_exp, self.cfg.n_fit_max);
        let sources: usize = modes.iter().map(|m| m.active_sources()).sum();
        let better = match &self.best {
            None => true,
            Some((best_modes, best_obj)) => {
                if (objective - best_obj).abs() < OBJECTIVE_TIE_EPS {
                    sources < best_modes.iter().map(|m| m.active_sources()).sum()
                } else {
                    objective < *best_obj
                }
            }
        };
        if better {
            self.best = Some((modes.to_vec(), objective));
        }
    }

    fn cache_index(&self, m: &ModeUnits) -> usize {
        (m.coherent * (self.total_units + 1) + m.m_units()) as usize
    }

    fn ensure_cached(&mut self, coherent_units: u32, m_units: u32) {
        let idx = (coherent_units * (self.total_units + 1) + m_units) as usize;
        if self.cache[idx].is_none() {
            self.cache[idx] = Some(
                mode_probs(
                    coherent_units,
                    m_units,
                    self.cfg.grid_step,
                    self.cfg.n_fit_max,
                )
                .into_boxed_slice(),
            );
        }
    }
}

fn mode_units(coherent: u32, m: u32) -> ModeUnits {
    ModeUnits {
        coherent,
        thermal1: m,
        thermal2: 0,
    }
}
