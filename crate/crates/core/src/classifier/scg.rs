//! Møller's scaled conjugate gradient trainer.
//!
//! SCG is a full-batch conjugate-gradient method that replaces the line
//! search with a one-sided finite-difference Hessian-vector product
//! s = (E'(w + σ_k p) − E'(w)) / σ_k along the search direction p, made
//! positive definite by a Levenberg-Marquardt term λ|p|² that the comparison
//! ratio Δ (predicted vs actual loss reduction) adapts: shrink λ when the
//! quadratic model is trustworthy (Δ ≥ 0.75), grow it when not (Δ < 0.25),
//! reject the step when the loss did not decrease (Δ < 0).
//!
//! One epoch is one SCG iteration. Validation loss is recorded every epoch
//! and the parameters from the lowest-validation epoch are returned, so a
//! run that overfits past its best epoch still yields the best model seen.

use crate::classifier::{
    batch_loss, gradient, loss_and_gradient, ClassLabel, LabeledDataset, MLPModel, PARAM_COUNT,
};
use crate::error::{Error, Result};

/// Training knobs. `seed` drives weight initialization in [`train_seeded`];
/// the SCG loop itself is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Stop when validation loss has not improved for this many epochs.
    pub patience_epochs: usize,
    pub seed: u64,
    /// Finite-difference step scale for the Hessian-vector product.
    pub sigma: f64,
    /// Initial Levenberg-Marquardt scale.
    pub lambda_init: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 5000,
            patience_epochs: 1000,
            seed: 0,
            sigma: 1e-5,
            lambda_init: 1e-7,
        }
    }
}

/// Losses at the end of one epoch; index 0 is the untrained model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Initializes weights from `cfg.seed` and trains.
pub fn train_seeded(
    data: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<(MLPModel, Vec<EpochRecord>)> {
    train_scg(&MLPModel::init(cfg.seed), data, cfg)
}

/// Trains `init` on the dataset's train split, early-stopping on the
/// validation split; returns the best-validation model and the loss history.
///
/// Every class that appears anywhere in the dataset must appear in the train
/// split, otherwise held-out items of that class were never trained on and
/// the run is rejected as degenerate.
pub fn train_scg(
    init: &MLPModel,
    data: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<(MLPModel, Vec<EpochRecord>)> {
    if cfg.patience_epochs > cfg.max_epochs {
        return Err(Error::domain(format!(
            "patience {} exceeds max_epochs {}",
            cfg.patience_epochs, cfg.max_epochs
        )));
    }
    if !(cfg.sigma > 0.0 && cfg.sigma.is_finite()) || !(cfg.lambda_init > 0.0 && cfg.lambda_init.is_finite())
    {
        return Err(Error::domain("sigma and lambda_init must be positive"));
    }
    let train = data.train();
    if train.is_empty() {
        return Err(Error::domain("training split is empty"));
    }
    for label in ClassLabel::ALL {
        let anywhere = data.items().iter().any(|it| it.label == label);
        let in_train = train.iter().any(|it| it.label == label);
        if anywhere && !in_train {
            return Err(Error::DegenerateDataset(label));
        }
    }
    // Early stopping needs held-out loss; degenerate callers without a
    // validation split fall back to the train split.
    let val = if data.validation().is_empty() {
        train
    } else {
        data.validation()
    };

    let mut w = init.to_params();
    let (mut loss_w, g) = loss_and_gradient(init, train);
    // r = −E'(w) throughout.
    let mut r: Vec<f64> = g.iter().map(|g| -g).collect();
    let mut p = r.clone();

    let mut history = Vec::with_capacity(cfg.max_epochs + 1);
    history.push(EpochRecord {
        train_loss: loss_w,
        val_loss: batch_loss(init, val),
    });
    let mut best_val = history[0].val_loss;
    let mut best_w = w.clone();
    let mut best_epoch = 0usize;

    let mut lambda = cfg.lambda_init;
    let mut lambda_bar = 0.0;
    let mut success = true;
    // pᵀs from the last second-order evaluation; reused across failed steps.
    let mut delta_raw = 0.0;

    for epoch in 1..=cfg.max_epochs {
        if dot(&r, &r) < 1e-300 {
            break; // stationary point
        }
        if dot(&p, &r) <= 0.0 {
            // Numerical loss of conjugacy left a non-descent direction.
            p.copy_from_slice(&r);
            success = true;
        }
        let p_sq = dot(&p, &p);

        if success {
            let sigma_k = cfg.sigma / p_sq.sqrt();
            let probe: Vec<f64> = w.iter().zip(&p).map(|(w, p)| w + sigma_k * p).collect();
            let g_probe = gradient(&MLPModel::from_params(&probe), train);
            // s = (E'(w+σp) − E'(w))/σ with E'(w) = −r.
            delta_raw = g_probe
                .iter()
                .zip(&r)
                .zip(&p)
                .map(|((g, r), p)| (g + r) / sigma_k * p)
                .sum();
        }
        let mut delta = delta_raw + (lambda - lambda_bar) * p_sq;
        if delta <= 0.0 {
            // Make the scaled Hessian positive definite.
            lambda_bar = 2.0 * (lambda - delta / p_sq);
            delta = -delta + lambda * p_sq;
            lambda = lambda_bar;
        }

        let mu = dot(&p, &r);
        let alpha = mu / delta;
        let cand: Vec<f64> = w.iter().zip(&p).map(|(w, p)| w + alpha * p).collect();
        let loss_cand = batch_loss(&MLPModel::from_params(&cand), train);
        let comparison = 2.0 * delta * (loss_w - loss_cand) / (mu * mu);

        if comparison.is_finite() && comparison >= 0.0 {
            w = cand;
            loss_w = loss_cand;
            let g_new = gradient(&MLPModel::from_params(&w), train);
            let r_new: Vec<f64> = g_new.iter().map(|g| -g).collect();
            lambda_bar = 0.0;
            success = true;
            if epoch % PARAM_COUNT == 0 {
                p.copy_from_slice(&r_new);
            } else {
                let beta = (dot(&r_new, &r_new) - dot(&r_new, &r)) / mu;
                for (p, r) in p.iter_mut().zip(&r_new) {
                    *p = r + beta * *p;
                }
            }
            r = r_new;
            if comparison >= 0.75 {
                lambda /= 4.0;
            }
        } else {
            lambda_bar = lambda;
            success = false;
        }
        if comparison.is_finite() {
            if comparison < 0.25 {
                lambda += delta * (1.0 - comparison) / p_sq;
            }
        } else {
            // Step overflowed; back off hard before retrying.
            lambda = (lambda * 4.0).max(1e-20);
            lambda_bar = lambda;
        }

        let val_loss = batch_loss(&MLPModel::from_params(&w), val);
        history.push(EpochRecord {
            train_loss: loss_w,
            val_loss,
        });
        if val_loss < best_val {
            best_val = val_loss;
            best_w.copy_from_slice(&w);
            best_epoch = epoch;
        }
        if epoch - best_epoch >= cfg.patience_epochs {
            break;
        }
    }

    Ok((MLPModel::from_params(&best_w), history))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}
