//! Direct intensity fitting: the diffraction-limited baseline.
//!
//! A conventional analysis of a raster scan sees only the mean image and
//! fits it with a sum of Gaussian spots, each axis-aligned elliptical:
//! A·exp(−2((x−x₀)²/wx² + (y−y₀)²/wy²)). Component counts 1..=max are
//! tried by Levenberg-Marquardt least squares and the smallest count is
//! kept unless adding a component cuts the residual sum of squares by at
//! least five percent.
//!
//! The elliptical single-spot model is what makes the diffraction limit
//! appear: a barely separated pair looks like one elongated blob, and a
//! lone elliptical Gaussian absorbs that elongation at quadratic order.
//! What remains for a second component to explain is quartic in the
//! separation, and on sampled images shot noise buries it below the
//! selection threshold once the pair is closer than about half a waist.
//! The fit then collapses to one component: the Abbe limit, expressed as
//! model selection. (With circular-only spots the elongation itself would
//! betray the pair at any separation, which no intensity measurement
//! actually achieves.)

use super::ScalarImage;
use crate::error::{Error, Result};

/// One fitted spot, in w0 units with the grid centered on the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianComponent {
    pub amplitude: f64,
    pub x: f64,
    pub y: f64,
    pub waist_x: f64,
    pub waist_y: f64,
}

impl GaussianComponent {
    /// Geometric mean of the two axis waists.
    pub fn mean_waist(&self) -> f64 {
        (self.waist_x * self.waist_y).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectFitOptions {
    pub max_iterations: usize,
    /// Stop when the relative RSS change falls below this.
    pub tolerance: f64,
    /// An extra component must cut the RSS by this fraction to be kept.
    pub rss_improvement: f64,
}

impl Default for DirectFitOptions {
    fn default() -> Self {
        DirectFitOptions {
            max_iterations: 200,
            tolerance: 1e-12,
            rss_improvement: 0.05,
        }
    }
}

/// Per-component parameter block inside the flat parameter vector.
const BLOCK: usize = 5; // amplitude, x, y, waist_x, waist_y

/// Fits a sum of Gaussian spots to an intensity image. `pitch` is the
/// physical size of one pixel in w0 units. Component counts 1 through
/// `max_components` are tried; parsimony keeps the smallest count whose
/// successors fail the RSS improvement threshold.
pub fn fit_direct(
    image: &ScalarImage,
    pitch: f64,
    max_components: usize,
    opts: &DirectFitOptions,
) -> Result<Vec<GaussianComponent>> {
    if !(1..=3).contains(&max_components) {
        return Err(Error::domain(format!(
            "component count must be 1 to 3, got {max_components}"
        )));
    }
    if !(pitch > 0.0 && pitch.is_finite()) {
        return Err(Error::domain(format!(
            "pixel pitch must be positive, got {pitch}"
        )));
    }
    if image.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("image must be finite"));
    }

    let total_ss: f64 = image.data().iter().map(|v| v * v).sum();

    let single = match lm_fit(image, &seed_params(image, 1), opts) {
        Some(fit) => fit,
        None => return Err(Error::FitDiverged),
    };
    // A fit no better than the empty model found no signal to converge on.
    if single.rss >= total_ss {
        return Err(Error::FitDiverged);
    }
    let mut best = single.clone();
    for k in 2..=max_components {
        // Numerically exact fits leave nothing for more components to earn.
        if best.rss <= 1e-12 * total_ss {
            break;
        }
        let mut candidates = vec![seed_params(image, k)];
        candidates.push(split_params(&best.params, image));
        let fit_k = candidates
            .iter()
            .filter_map(|p| lm_fit(image, p, opts))
            .min_by(|a, b| a.rss.partial_cmp(&b.rss).expect("RSS is finite"));
        match fit_k {
            Some(fit) if fit.rss <= (1.0 - opts.rss_improvement) * best.rss => best = fit,
            _ => break,
        }
    }
    if best.rss > single.rss {
        return Err(Error::FitDiverged);
    }

    let half_w = image.width() as f64 / 2.0;
    let half_h = image.height() as f64 / 2.0;
    let mut out: Vec<GaussianComponent> = best
        .params
        .chunks_exact(BLOCK)
        .map(|c| GaussianComponent {
            amplitude: c[0],
            x: (c[1] + 0.5 - half_w) * pitch,
            y: (c[2] + 0.5 - half_h) * pitch,
            waist_x: c[3] * pitch,
            waist_y: c[4] * pitch,
        })
        .collect();
    out.sort_by(|a, b| {
        (a.x, a.y)
            .partial_cmp(&(b.x, b.y))
            .expect("fitted coordinates are finite")
    });
    Ok(out)
}

#[derive(Debug, Clone)]
struct LmFit {
    params: Vec<f64>,
    rss: f64,
}

/// Gaussian-sum model value at pixel (ix, iy); params in pixel units.
fn model_at(params: &[f64], ix: usize, iy: usize) -> f64 {
    params
        .chunks_exact(BLOCK)
        .map(|c| {
            let dx = ix as f64 - c[1];
            let dy = iy as f64 - c[2];
            c[0] * (-2.0 * (dx * dx / (c[3] * c[3]) + dy * dy / (c[4] * c[4]))).exp()
        })
        .sum()
}

fn rss_of(image: &ScalarImage, params: &[f64]) -> f64 {
    let mut rss = 0.0;
    for iy in 0..image.height() {
        for ix in 0..image.width() {
            let r = image.get(ix, iy) - model_at(params, ix, iy);
            rss += r * r;
        }
    }
    rss
}

/// Moment-based seed: centroid, per-axis second-moment waists, peak
/// amplitude; extra components fan out along the principal axis.
fn seed_params(image: &ScalarImage, k: usize) -> Vec<f64> {
    let mut total = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    let mut peak = 0.0_f64;
    for iy in 0..image.height() {
        for ix in 0..image.width() {
            let v = image.get(ix, iy).max(0.0);
            total += v;
            cx += v * ix as f64;
            cy += v * iy as f64;
            peak = peak.max(v);
        }
    }
    if total <= 0.0 {
        // Degenerate image: place one unit spot mid-grid and let LM fail.
        let mid = [
            1.0,
            image.width() as f64 / 2.0,
            image.height() as f64 / 2.0,
            2.0,
            2.0,
        ];
        return (0..k).flat_map(|_| mid).collect();
    }
    cx /= total;
    cy /= total;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxy = 0.0;
    for iy in 0..image.height() {
        for ix in 0..image.width() {
            let v = image.get(ix, iy).max(0.0);
            sx += v * (ix as f64 - cx).powi(2);
            sy += v * (iy as f64 - cy).powi(2);
            sxy += v * (ix as f64 - cx) * (iy as f64 - cy);
        }
    }
    sx /= total;
    sy /= total;
    sxy /= total;
    // exp(−2x²/w²) has variance w²/4 along its axis, so w = 2σ.
    let wx = (2.0 * sx.sqrt()).max(1.0);
    let wy = (2.0 * sy.sqrt()).max(1.0);

    match k {
        1 => vec![peak, cx, cy, wx, wy],
        _ => {
            let (vx, vy, sigma) = dominant_axis(sx, sy, sxy);
            let off = sigma.max(1.0);
            let mut params = Vec::with_capacity(k * BLOCK);
            for i in 0..k {
                let t = match i {
                    0 => -1.0,
                    1 => 1.0,
                    _ => 0.0,
                };
                params.extend_from_slice(&[
                    peak * 0.7,
                    cx + t * off * vx,
                    cy + t * off * vy,
                    (wx * 0.8).max(1.0),
                    (wy * 0.8).max(1.0),
                ]);
            }
            params
        }
    }
}

/// Alternative seed for k+1 components: the current best fit plus a spot at
/// the residual maximum.
fn split_params(params: &[f64], image: &ScalarImage) -> Vec<f64> {
    let mut best_px = (0, 0);
    let mut best_res = f64::NEG_INFINITY;
    for iy in 0..image.height() {
        for ix in 0..image.width() {
            let r = image.get(ix, iy) - model_at(params, ix, iy);
            if r > best_res {
                best_res = r;
                best_px = (ix, iy);
            }
        }
    }
    let mut out = params.to_vec();
    out.extend_from_slice(&[
        best_res.max(0.05),
        best_px.0 as f64,
        best_px.1 as f64,
        params[3],
        params[4],
    ]);
    out
}

fn dominant_axis(sx: f64, sy: f64, sxy: f64) -> (f64, f64, f64) {
    let tr = sx + sy;
    let det = sx * sy - sxy * sxy;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let lambda = tr / 2.0 + disc;
    let (vx, vy) = if sxy.abs() > 1e-12 {
        (lambda - sy, sxy)
    } else if sx >= sy {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let norm = vx.hypot(vy).max(1e-300);
    (vx / norm, vy / norm, lambda.max(0.0).sqrt())
}

/// Levenberg-Marquardt with diagonal damping. Returns None on breakdown
/// (singular normal equations that damping cannot rescue, or non-finite
/// parameters), which callers treat as divergence.
fn lm_fit(image: &ScalarImage, init: &[f64], opts: &DirectFitOptions) -> Option<LmFit> {
    let dim = init.len();
    let mut params = init.to_vec();
    let mut rss = rss_of(image, &params);
    if !rss.is_finite() {
        return None;
    }
    let mut lambda = 1e-3;

    for _iter in 0..opts.max_iterations {
        // Accumulate JᵀJ and Jᵀr over the image.
        let mut jtj = vec![0.0; dim * dim];
        let mut jtr = vec![0.0; dim];
        let mut grad_row = vec![0.0; dim];
        for iy in 0..image.height() {
            for ix in 0..image.width() {
                let mut f = 0.0;
                for (c, g) in params
                    .chunks_exact(BLOCK)
                    .zip(grad_row.chunks_exact_mut(BLOCK))
                {
                    let dx = ix as f64 - c[1];
                    let dy = iy as f64 - c[2];
                    let wx2 = c[3] * c[3];
                    let wy2 = c[4] * c[4];
                    let e = (-2.0 * (dx * dx / wx2 + dy * dy / wy2)).exp();
                    f += c[0] * e;
                    g[0] = e;
                    g[1] = c[0] * e * 4.0 * dx / wx2;
                    g[2] = c[0] * e * 4.0 * dy / wy2;
                    g[3] = c[0] * e * 4.0 * dx * dx / (wx2 * c[3]);
                    g[4] = c[0] * e * 4.0 * dy * dy / (wy2 * c[4]);
                }
                let r = image.get(ix, iy) - f;
                for a in 0..dim {
                    jtr[a] += grad_row[a] * r;
                    for b in a..dim {
                        jtj[a * dim + b] += grad_row[a] * grad_row[b];
                    }
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                jtj[a * dim + b] = jtj[b * dim + a];
            }
        }

        // Try damped steps until one lowers the RSS.
        let mut accepted = false;
        for _attempt in 0..30 {
            let mut lhs = jtj.clone();
            for a in 0..dim {
                lhs[a * dim + a] += lambda * jtj[a * dim + a].max(1e-12);
            }
            let Some(step) = solve(&mut lhs, &jtr, dim) else {
                lambda *= 5.0;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(&step).map(|(p, s)| p + s).collect();
            let valid = trial
                .chunks_exact(BLOCK)
                .all(|c| c.iter().all(|v| v.is_finite()) && c[3] > 0.2 && c[4] > 0.2);
            if valid {
                let trial_rss = rss_of(image, &trial);
                if trial_rss.is_finite() && trial_rss < rss {
                    let rel = (rss - trial_rss) / rss.max(1e-300);
                    params = trial;
                    rss = trial_rss;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if rel < opts.tolerance {
                        return Some(LmFit { params, rss });
                    }
                    break;
                }
            }
            lambda *= 5.0;
        }
        if !accepted {
            break;
        }
    }
    if params.iter().all(|v| v.is_finite()) && rss.is_finite() {
        Some(LmFit { params, rss })
    } else {
        None
    }
}

/// Gaussian elimination with partial pivoting on the dim×dim system in
/// `lhs` (destroyed). Returns None when a pivot collapses.
fn solve(lhs: &mut [f64], rhs: &[f64], dim: usize) -> Option<Vec<f64>> {
    let mut x = rhs.to_vec();
    for col in 0..dim {
        let pivot_row = (col..dim)
            .max_by(|&a, &b| {
                lhs[a * dim + col]
                    .abs()
                    .partial_cmp(&lhs[b * dim + col].abs())
                    .expect("finite matrix")
            })
            .expect("nonempty range");
        let pivot = lhs[pivot_row * dim + col];
        if !pivot.is_finite() || pivot.abs() < 1e-300 {
            return None;
        }
        if pivot_row != col {
            for j in 0..dim {
                lhs.swap(col * dim + j, pivot_row * dim + j);
            }
            x.swap(col, pivot_row);
        }
        for row in (col + 1)..dim {
            let factor = lhs[row * dim + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..dim {
                lhs[row * dim + j] -= factor * lhs[col * dim + j];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..dim).rev() {
        let mut acc = x[col];
        for j in (col + 1)..dim {
            acc -= lhs[col * dim + j] * x[j];
        }
        x[col] = acc / lhs[col * dim + col];
        if !x[col].is_finite() {
            return None;
        }
    }
    Some(x)
}
