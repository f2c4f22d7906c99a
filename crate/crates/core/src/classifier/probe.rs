//! Linear separability probe: multinomial softmax regression with no hidden
//! layer, trained by full-batch gradient descent from zero weights.
//!
//! The probe quantifies how much of the classification problem is linearly
//! solvable in a given feature space, e.g. the raw 21 empirical
//! probabilities, or just (p0, p1, p2) as in the scatter-plot projection.
//! Zero initialization keeps it deterministic without a seed; the objective
//! is convex, so gradient descent with a fixed rate converges to the global
//! optimum.

use crate::classifier::{argmax_tie_low, ClassLabel, N_CLASSES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub learning_rate: f64,
    pub iterations: usize,
}

impl Default for ProbeConfig {
    /// Tuned for probability-valued features (‖x‖ ≤ 1): the loss Hessian is
    /// then bounded well below 1, so a rate of 5 is stable.
    fn default() -> Self {
        ProbeConfig {
            learning_rate: 5.0,
            iterations: 3000,
        }
    }
}

/// Trained probe: one weight row per class over `dim` features.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbe {
    dim: usize,
    w: Vec<f64>, // N_CLASSES × dim, row-major
    b: [f64; N_CLASSES],
}

impl LinearProbe {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Fits by full-batch gradient descent on mean cross-entropy.
    pub fn fit(features: &[Vec<f64>], labels: &[ClassLabel], cfg: &ProbeConfig) -> Result<LinearProbe> {
        if features.is_empty() {
            return Err(Error::domain("probe needs at least one item"));
        }
        if features.len() != labels.len() {
            return Err(Error::domain(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let dim = features[0].len();
        if dim == 0 || features.iter().any(|f| f.len() != dim) {
            return Err(Error::domain("feature rows must share one nonzero width"));
        }

        let mut probe = LinearProbe {
            dim,
            w: vec![0.0; N_CLASSES * dim],
            b: [0.0; N_CLASSES],
        };
        let inv_n = 1.0 / features.len() as f64;
        let mut g_w = vec![0.0; N_CLASSES * dim];
        for _ in 0..cfg.iterations {
            g_w.fill(0.0);
            let mut g_b = [0.0; N_CLASSES];
            for (x, &label) in features.iter().zip(labels) {
                let mut y = probe.scores(x);
                y[label.index()] -= 1.0;
                for (c, &d) in y.iter().enumerate() {
                    g_b[c] += d;
                    for (gw, xv) in g_w[c * dim..(c + 1) * dim].iter_mut().zip(x) {
                        *gw += d * xv;
                    }
                }
            }
            let step = cfg.learning_rate * inv_n;
            for (w, g) in probe.w.iter_mut().zip(&g_w) {
                *w -= step * g;
            }
            for (b, g) in probe.b.iter_mut().zip(&g_b) {
                *b -= step * g;
            }
        }
        Ok(probe)
    }

    fn scores(&self, x: &[f64]) -> [f64; N_CLASSES] {
        assert_eq!(x.len(), self.dim, "feature width mismatch");
        let mut logits = self.b;
        for (c, logit) in logits.iter_mut().enumerate() {
            for (w, xv) in self.w[c * self.dim..(c + 1) * self.dim].iter().zip(x) {
                *logit += w * xv;
            }
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for l in &mut logits {
            *l = (*l - max).exp();
            sum += *l;
        }
        for l in &mut logits {
            *l /= sum;
        }
        logits
    }

    pub fn predict(&self, x: &[f64]) -> ClassLabel {
        ClassLabel::ALL[argmax_tie_low(&self.scores(x))]
    }

    pub fn accuracy(&self, features: &[Vec<f64>], labels: &[ClassLabel]) -> f64 {
        assert_eq!(features.len(), labels.len());
        if features.is_empty() {
            return 0.0;
        }
        let correct = features
            .iter()
            .zip(labels)
            .filter(|(x, &l)| self.predict(x) == l)
            .count();
        correct as f64 / features.len() as f64
    }
}
