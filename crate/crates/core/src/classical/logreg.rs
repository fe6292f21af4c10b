//! Regularized softmax logistic regression.
//!
//! Minimizes (1/C) * R(W) + sum_i s_i * CE(softmax(W x_i + b), y_i), with
//! R = 0.5 * ||W||^2 for l2 or ||W||_1 for l1 (bias unpenalized) and s_i
//! either 1 or the balanced weight n / (k * n_class(i)).
//!
//! l2 runs plain full-batch gradient descent with Armijo backtracking; l1
//! runs proximal (soft-threshold) steps on the same smooth part. Both stop
//! when the (generalized) gradient norm drops below `tol` or `max_iter` is
//! reached, and report which happened.

use serde::{Deserialize, Serialize};

use super::argmax_lowest;
use crate::error::{Error, Result};
use crate::features::FeatureRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeight {
    None,
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrConfig {
    pub c: f64,
    pub penalty: Penalty,
    pub class_weight: ClassWeight,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig {
            c: 1.0,
            penalty: Penalty::L2,
            class_weight: ClassWeight::None,
            max_iter: 2000,
            tol: 1e-6,
        }
    }
}

/// A fitted logistic regression model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub config: LrConfig,
    /// Per-class weight rows (n_classes x n_features).
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub n_features: usize,
    pub converged: bool,
    pub n_iter: usize,
    format_version: u32,
}

impl LrModel {
    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn weight_l2_norm(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|r| r.iter())
            .map(|w| w * w)
            .sum::<f64>()
            .sqrt()
    }

    /// Versioned JSON document (hyperparameters + weights).
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<LrModel> {
        serde_json::from_str(json).map_err(|e| Error::Config(format!("bad model JSON: {e}")))
    }
}

/// Per-example weights: 1, or n / (k * n_class).
pub fn sample_weights(y: &[usize], n_classes: usize, class_weight: ClassWeight) -> Vec<f64> {
    match class_weight {
        ClassWeight::None => vec![1.0; y.len()],
        ClassWeight::Balanced => {
            let mut counts = vec![0usize; n_classes];
            for yi in y {
                counts[*yi] += 1;
            }
            let n = y.len() as f64;
            let k = n_classes as f64;
            y.iter().map(|yi| n / (k * counts[*yi] as f64)).collect()
        }
    }
}

/// Smooth part of the objective (weighted cross-entropy) and its gradient.
fn smooth_loss_grad<F: FeatureRow>(
    x: &[F],
    y: &[usize],
    s: &[f64],
    w: &[Vec<f64>],
    b: &[f64],
) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
    let k = b.len();
    let d = w[0].len();
    let mut loss = 0.0;
    let mut gw = vec![vec![0.0; d]; k];
    let mut gb = vec![0.0; k];
    let mut z = vec![0.0; k];
    for ((xi, yi), si) in x.iter().zip(y).zip(s) {
        for c in 0..k {
            z[c] = b[c];
        }
        for (j, v) in xi.nonzero() {
            for c in 0..k {
                z[c] += w[c][j] * v;
            }
        }
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|zc| (zc - m).exp()).sum::<f64>().ln();
        loss += si * (lse - z[*yi]);
        for c in 0..k {
            let p = (z[c] - lse).exp();
            let g = si * (p - if c == *yi { 1.0 } else { 0.0 });
            gb[c] += g;
            if g != 0.0 {
                for (j, v) in xi.nonzero() {
                    gw[c][j] += g * v;
                }
            }
        }
    }
    (loss, gw, gb)
}

/// Full objective value and gradient for the l2 form; used by the
/// finite-difference oracle. For l1 the objective is nonsmooth, so only the
/// smooth part plus the penalty value is returned (gradient of the smooth
/// part).
pub fn objective_and_gradient<F: FeatureRow>(
    x: &[F],
    y: &[usize],
    n_classes: usize,
    config: &LrConfig,
    w: &[Vec<f64>],
    b: &[f64],
) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
    let s = sample_weights(y, n_classes, config.class_weight);
    let (mut loss, mut gw, gb) = smooth_loss_grad(x, y, &s, w, b);
    match config.penalty {
        Penalty::L2 => {
            let mut reg = 0.0;
            for (c, row) in w.iter().enumerate() {
                for (j, wj) in row.iter().enumerate() {
                    reg += wj * wj;
                    gw[c][j] += wj / config.c;
                }
            }
            loss += 0.5 * reg / config.c;
        }
        Penalty::L1 => {
            let reg: f64 = w.iter().flat_map(|r| r.iter()).map(|wj| wj.abs()).sum();
            loss += reg / config.c;
        }
    }
    (loss, gw, gb)
}

fn frob_norm(gw: &[Vec<f64>], gb: &[f64]) -> f64 {
    let a: f64 = gw.iter().flat_map(|r| r.iter()).map(|g| g * g).sum();
    let b: f64 = gb.iter().map(|g| g * g).sum();
    (a + b).sqrt()
}

fn soft_threshold(v: f64, lambda: f64) -> f64 {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        0.0
    }
}

/// Fits softmax logistic regression under the configured penalty.
pub fn lr_fit<F: FeatureRow>(
    x: &[F],
    y: &[usize],
    n_classes: usize,
    config: &LrConfig,
) -> Result<LrModel> {
    if config.c <= 0.0 {
        return Err(Error::invalid("C", "inverse regularization strength must be positive"));
    }
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Evaluation(format!(
            "lr_fit: {} rows vs {} labels",
            x.len(),
            y.len()
        )));
    }
    let d = x[0].dimension();
    for xi in x {
        if xi.dimension() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: xi.dimension(),
            });
        }
        for (_, v) in xi.nonzero() {
            if !v.is_finite() {
                return Err(Error::invalid("x", "features must be finite"));
            }
        }
    }

    let s = sample_weights(y, n_classes, config.class_weight);
    let mut w = vec![vec![0.0; d]; n_classes];
    let mut b = vec![0.0; n_classes];
    let mut eta = 1.0f64;
    let mut converged = false;
    let mut n_iter = 0;

    let divergence = |cfg: &LrConfig| Error::Divergence {
        config: serde_json::to_string(cfg).unwrap_or_default(),
    };

    for iter in 0..config.max_iter {
        n_iter = iter + 1;
        let (smooth, gw, gb) = smooth_loss_grad(x, y, &s, &w, &b);
        if !smooth.is_finite() {
            return Err(divergence(config));
        }
        match config.penalty {
            Penalty::L2 => {
                // Gradient including the ridge term.
                let mut full_gw = gw;
                for (c, row) in w.iter().enumerate() {
                    for (j, wj) in row.iter().enumerate() {
                        full_gw[c][j] += wj / config.c;
                    }
                }
                let gnorm = frob_norm(&full_gw, &gb);
                if gnorm < config.tol {
                    converged = true;
                    break;
                }
                let reg: f64 = w.iter().flat_map(|r| r.iter()).map(|wj| wj * wj).sum();
                let obj = smooth + 0.5 * reg / config.c;
                // Armijo backtracking on the full objective.
                eta = (eta * 2.0).min(1e4);
                let mut accepted = false;
                for _ in 0..60 {
                    let wt: Vec<Vec<f64>> = w
                        .iter()
                        .zip(&full_gw)
                        .map(|(row, grow)| {
                            row.iter().zip(grow).map(|(wj, g)| wj - eta * g).collect()
                        })
                        .collect();
                    let bt: Vec<f64> = b.iter().zip(&gb).map(|(bj, g)| bj - eta * g).collect();
                    let (smooth_t, _, _) = smooth_loss_grad(x, y, &s, &wt, &bt);
                    let reg_t: f64 = wt.iter().flat_map(|r| r.iter()).map(|wj| wj * wj).sum();
                    let obj_t = smooth_t + 0.5 * reg_t / config.c;
                    if obj_t.is_finite() && obj_t <= obj - 1e-4 * eta * gnorm * gnorm {
                        w = wt;
                        b = bt;
                        accepted = true;
                        break;
                    }
                    eta *= 0.5;
                }
                if !accepted {
                    // Step size underflow: gradient is numerically flat.
                    converged = true;
                    break;
                }
            }
            Penalty::L1 => {
                // Proximal gradient with backtracking on the smooth part.
                eta = (eta * 2.0).min(1e4);
                let lambda = 1.0 / config.c;
                let mut proposed: Option<(Vec<Vec<f64>>, Vec<f64>)> = None;
                for _ in 0..60 {
                    let wt: Vec<Vec<f64>> = w
                        .iter()
                        .zip(&gw)
                        .map(|(row, grow)| {
                            row.iter()
                                .zip(grow)
                                .map(|(wj, g)| soft_threshold(wj - eta * g, eta * lambda))
                                .collect()
                        })
                        .collect();
                    let bt: Vec<f64> = b.iter().zip(&gb).map(|(bj, g)| bj - eta * g).collect();
                    let (smooth_t, _, _) = smooth_loss_grad(x, y, &s, &wt, &bt);
                    if !smooth_t.is_finite() {
                        eta *= 0.5;
                        continue;
                    }
                    // Beck-Teboulle sufficient decrease for the smooth part.
                    let mut quad = 0.0;
                    let mut lin = 0.0;
                    for c in 0..n_classes {
                        for j in 0..d {
                            let delta = wt[c][j] - w[c][j];
                            lin += gw[c][j] * delta;
                            quad += delta * delta;
                        }
                        let delta = bt[c] - b[c];
                        lin += gb[c] * delta;
                        quad += delta * delta;
                    }
                    if smooth_t <= smooth + lin + quad / (2.0 * eta) {
                        proposed = Some((wt, bt));
                        break;
                    }
                    eta *= 0.5;
                }
                let Some((wt, bt)) = proposed else {
                    converged = true;
                    break;
                };
                // Generalized gradient norm: prox step residual / eta.
                let mut res = 0.0;
                for c in 0..n_classes {
                    for j in 0..d {
                        let r = (w[c][j] - wt[c][j]) / eta;
                        res += r * r;
                    }
                    let r = (b[c] - bt[c]) / eta;
                    res += r * r;
                }
                w = wt;
                b = bt;
                if res.sqrt() < config.tol {
                    converged = true;
                    break;
                }
            }
        }
    }

    Ok(LrModel {
        config: config.clone(),
        weights: w,
        bias: b,
        n_features: d,
        converged,
        n_iter,
        format_version: 1,
    })
}

/// Softmax probabilities for one row.
pub fn lr_probabilities<F: FeatureRow>(model: &LrModel, x: &F) -> Result<Vec<f64>> {
    if x.dimension() != model.n_features {
        return Err(Error::DimensionMismatch {
            expected: model.n_features,
            found: x.dimension(),
        });
    }
    let k = model.n_classes();
    let mut z = model.bias.clone();
    for (j, v) in x.nonzero() {
        for c in 0..k {
            z[c] += model.weights[c][j] * v;
        }
    }
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let denom: f64 = z.iter().map(|zc| (zc - m).exp()).sum();
    Ok(z.iter().map(|zc| (zc - m).exp() / denom).collect())
}

/// Predicted class (lowest index on ties) plus the probability vector.
pub fn lr_predict<F: FeatureRow>(model: &LrModel, x: &F) -> Result<(usize, Vec<f64>)> {
    let p = lr_probabilities(model, x)?;
    Ok((argmax_lowest(&p), p))
}
