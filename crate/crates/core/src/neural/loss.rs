//! Supervised BCE plus an unsupervised cost/coverage penalty.
//!
//! `value = alpha * BCE(y, s) + beta * penalty(s)` where `s` are column
//! scores. The penalty is `s.c` plus a coverage term on `A s`:
//!
//! * `Literal`: `- gamma * sum(A s - 1) - omega * sum(1 - A s)`. The two sums
//!   are negatives of each other, so this collapses to
//!   `(omega - gamma) * sum(A s - 1)`.
//! * `Hinged`: `gamma * sum(max(1 - A s, 0)) + omega * sum(max(A s - 1, 0))`,
//!   charging uncovered rows and over-covered rows separately.

use serde::{Deserialize, Serialize};

use super::tensor::{lit, Scalar};
use super::NeuralError;
use crate::instance::ScpInstance;

pub const BCE_CLIP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PenaltyForm {
    Literal,
    Hinged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BceReduction {
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub omega: f64,
    pub penalty_form: PenaltyForm,
    pub bce_reduction: BceReduction,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            alpha: 1.0,
            beta: 1e-4,
            gamma: 1.0,
            omega: 0.4,
            penalty_form: PenaltyForm::Literal,
            bce_reduction: BceReduction::Mean,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let w = [self.alpha, self.beta, self.gamma, self.omega];
        if w.iter().all(|x| x.is_finite() && *x >= 0.0) {
            Ok(())
        } else {
            Err(NeuralError::InvalidConfig(format!("loss weights must be >= 0, got {w:?}")))
        }
    }
}

/// Mean binary cross-entropy with clipped predictions, and its gradient.
pub fn bce<T: Scalar>(scores: &[T], labels: &[T]) -> (T, Vec<T>) {
    let n = lit::<T>(scores.len().max(1) as f64);
    let lo = lit::<T>(BCE_CLIP);
    let hi = T::one() - lo;
    let mut value = T::zero();
    let mut grad = Vec::with_capacity(scores.len());
    for (&s, &y) in scores.iter().zip(labels) {
        let p = s.max(lo).min(hi);
        value -= y * p.ln() + (T::one() - y) * (T::one() - p).ln();
        let inside = s > lo && s < hi;
        grad.push(if inside {
            (p - y) / (p * (T::one() - p)) / n
        } else {
            T::zero()
        });
    }
    (value / n, grad)
}

/// The unsupervised term and its gradient.
pub fn penalty<T: Scalar>(scores: &[T], inst: &ScpInstance, cfg: &LossConfig) -> (T, Vec<T>) {
    let gamma = lit::<T>(cfg.gamma);
    let omega = lit::<T>(cfg.omega);
    let mut value = T::zero();
    let mut grad: Vec<T> = (0..inst.n()).map(|j| lit(inst.cost(j).as_f64())).collect();
    for (&s, &c) in scores.iter().zip(&grad) {
        value += s * c;
    }
    for row in inst.rows() {
        let mut cover = T::zero();
        for &j in row {
            cover += scores[j];
        }
        let excess = cover - T::one();
        // d/d(cover) of the row's term
        let slope = match cfg.penalty_form {
            PenaltyForm::Literal => {
                value -= gamma * excess + omega * (-excess);
                omega - gamma
            }
            PenaltyForm::Hinged => {
                if excess < T::zero() {
                    value += gamma * (-excess);
                    -gamma
                } else if excess > T::zero() {
                    value += omega * excess;
                    omega
                } else {
                    T::zero()
                }
            }
        };
        for &j in row {
            grad[j] += slope;
        }
    }
    (value, grad)
}

/// Total loss and its gradient with respect to the scores.
pub fn loss<T: Scalar>(scores: &[T], labels: &[T], inst: &ScpInstance, cfg: &LossConfig) -> Result<(T, Vec<T>), NeuralError> {
    if scores.len() != inst.n() || labels.len() != inst.n() {
        return Err(NeuralError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
            columns: inst.n(),
        });
    }
    let alpha = lit::<T>(cfg.alpha);
    let beta = lit::<T>(cfg.beta);
    let mut value = T::zero();
    let mut grad = vec![T::zero(); scores.len()];
    if cfg.alpha != 0.0 {
        let (v, g) = bce(scores, labels);
        value += alpha * v;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += alpha * b;
        }
    }
    if cfg.beta != 0.0 {
        let (v, g) = penalty(scores, inst, cfg);
        value += beta * v;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += beta * b;
        }
    }
    Ok((value, grad))
}
